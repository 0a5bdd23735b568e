//! Exhaustive reference solver for small instances.
//!
//! Enumerates every route structure — which vehicle serves each pickup and
//! each delivery, and in what order — and checks each surviving structure
//! with a small scheduling LP. Transfers are implied: a request picked up
//! and delivered by different vehicles is unloaded and reloaded at the
//! crossdock. The search is brutally simple on purpose; it exists to
//! cross-check the branch-and-cut solver, so it shares no model code with
//! it (only the LP engine underneath).

use itertools::Itertools;
use thiserror::Error;

use crate::bnc::{SolveResult, SolveStatus};
use crate::instance::{validate_instance, vertex, Instance};
use crate::lp::{solve_lp, LpProblem, LpStatus, Sense};
use crate::solution::{Solution, VehicleSolution};

/// Enumeration is factorial in the request count; refuse anything bigger.
pub const MAX_REQUESTS: usize = 5;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exhaustive search supports at most {MAX_REQUESTS} requests, got {requests}")]
    TooLarge { requests: usize },
    #[error("invalid instance:\n{0}")]
    Invalid(String),
}

/// Search switches, used by tests to show the filters change nothing.
#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Discard structures by time-window and ride-time lower bounds before
    /// scheduling them.
    pub prefilter: bool,
    /// Skip the scheduling LP when a structure's routing cost cannot beat
    /// the best feasible structure found so far.
    pub cost_prune: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            prefilter: true,
            cost_prune: true,
        }
    }
}

/// One side of a structure: an ordered route per vehicle covering all
/// requests, with every vehicle serving at least one.
#[derive(Debug, Clone)]
struct Side {
    routes: Vec<Vec<usize>>,
}

impl Side {
    /// `vehicle_of[i-1]` = vehicle serving request `i` on this side.
    fn vehicle_of(&self, n: usize) -> Vec<usize> {
        let mut owner = vec![0; n];
        for (k, route) in self.routes.iter().enumerate() {
            for &i in route {
                owner[i - 1] = k;
            }
        }
        owner
    }
}

/// All capacity-feasible sides, in deterministic order: assignments counted
/// base-K with request 1 as the fastest digit, then per-vehicle orders
/// lexicographically, vehicle 0 varying slowest.
fn enumerate_sides(instance: &Instance) -> Vec<Side> {
    let n = instance.num_requests();
    let k_count = instance.num_vehicles();
    let mut sides = Vec::new();
    let mut assignment = vec![0usize; n];
    loop {
        if let Some(groups) = feasible_groups(instance, &assignment) {
            let orderings = groups
                .iter()
                .map(|group| group.iter().copied().permutations(group.len()))
                .multi_cartesian_product();
            for routes in orderings {
                sides.push(Side { routes });
            }
        }
        // Advance the base-K counter; done after wrapping the last digit.
        let mut digit = 0;
        loop {
            if digit == n {
                return sides;
            }
            assignment[digit] += 1;
            if assignment[digit] < k_count {
                break;
            }
            assignment[digit] = 0;
            digit += 1;
        }
    }
}

/// Groups requests by vehicle; `None` when a vehicle is left empty or
/// overloaded. Load on each side peaks at the full set a vehicle carries.
fn feasible_groups(instance: &Instance, assignment: &[usize]) -> Option<Vec<Vec<usize>>> {
    let k_count = instance.num_vehicles();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k_count];
    for (idx, &k) in assignment.iter().enumerate() {
        groups[k].push(idx + 1);
    }
    for (k, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return None;
        }
        let load: f64 = group.iter().map(|&i| instance.demand(i)).sum();
        if load > instance.vehicles[k].capacity + 1e-9 {
            return None;
        }
    }
    Some(groups)
}

/// A pickup side paired with a delivery side, transfers implied.
struct Structure<'a> {
    pickup: &'a Side,
    delivery: &'a Side,
    pickup_vehicle: Vec<usize>,
    delivery_vehicle: Vec<usize>,
}

impl Structure<'_> {
    fn transferred(&self, i: usize) -> bool {
        self.pickup_vehicle[i - 1] != self.delivery_vehicle[i - 1]
    }

    /// Handling time vehicle `k` spends unloading at the crossdock.
    fn unload_time(&self, instance: &Instance, k: usize) -> f64 {
        handling(instance, (1..=self.pickup_vehicle.len()).filter(|&i| {
            self.transferred(i) && self.pickup_vehicle[i - 1] == k
        }))
    }

    /// Handling time vehicle `k` spends reloading at the crossdock.
    fn reload_time(&self, instance: &Instance, k: usize) -> f64 {
        handling(instance, (1..=self.delivery_vehicle.len()).filter(|&i| {
            self.transferred(i) && self.delivery_vehicle[i - 1] == k
        }))
    }
}

fn handling(instance: &Instance, requests: impl Iterator<Item = usize>) -> f64 {
    let mut any = false;
    let mut load = 0.0;
    for i in requests {
        any = true;
        load += instance.demand(i);
    }
    if any {
        instance.crossdock.fixed_time + instance.crossdock.per_unit_time * load
    } else {
        0.0
    }
}

/// Total arc cost of both route sets; the schedule does not affect cost.
fn structure_cost(instance: &Instance, structure: &Structure<'_>) -> f64 {
    let n = instance.num_requests();
    let mut cost = 0.0;
    for route in &structure.pickup.routes {
        cost += route_cost(instance, route.iter().map(|&i| i));
    }
    for route in &structure.delivery.routes {
        cost += route_cost(instance, route.iter().map(|&i| n + i));
    }
    cost
}

fn route_cost(instance: &Instance, vertices: impl Iterator<Item = usize>) -> f64 {
    let mut cost = 0.0;
    let mut prev = 0;
    for v in vertices {
        cost += instance.vertex_cost(prev, v);
        prev = v;
    }
    cost + instance.vertex_cost(prev, 0)
}

/// Earliest-start propagation along every route: each visit is bounded below
/// by leaving the depot at its opening and driving the route; any visit
/// forced past its window close kills the structure. Sound because waiting
/// is always allowed but travel times cannot shrink.
fn windows_reachable(instance: &Instance, structure: &Structure<'_>) -> bool {
    let n = instance.num_requests();
    let [open, close] = instance.depot_window;
    for (routes, delivery_side) in [
        (&structure.pickup.routes, false),
        (&structure.delivery.routes, true),
    ] {
        for route in routes.iter() {
            let mut time = open;
            let mut prev = 0;
            for &i in route {
                let v = if delivery_side { n + i } else { i };
                let [e, l] = instance.vertex_window(v);
                time = (time + instance.vertex_travel_time(prev, v)).max(e);
                if time > l + 1e-9 {
                    return false;
                }
                prev = v;
            }
            if time + instance.vertex_travel_time(prev, 0) > close + 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Lower bounds on every ride time; a bound above the limit kills the
/// structure. The elapsed time from pickup `i` to delivery `n+i` is at least
/// the remaining pickup legs, both crossdock handlings the goods wait for,
/// and the delivery legs up to `n+i`, plus the window gap.
fn ride_times_possible(instance: &Instance, structure: &Structure<'_>) -> bool {
    let n = instance.num_requests();
    for i in 1..=n {
        let a = structure.pickup_vehicle[i - 1];
        let b = structure.delivery_vehicle[i - 1];
        let tail = trailing_travel(instance, &structure.pickup.routes[a], i, false, n);
        let head = leading_travel(instance, &structure.delivery.routes[b], i, n);
        let handling = structure.unload_time(instance, a) + structure.reload_time(instance, b);
        let path_bound = tail + handling + head;
        let window_bound =
            instance.vertex_window(n + i)[0] - instance.vertex_window(i)[1];
        if path_bound.max(window_bound) > instance.max_ride_time + 1e-9 {
            return false;
        }
    }
    true
}

/// Travel along `route` from request `i`'s visit to the crossdock.
fn trailing_travel(instance: &Instance, route: &[usize], i: usize, _delivery: bool, _n: usize) -> f64 {
    let pos = route.iter().position(|&r| r == i).expect("request on route");
    let mut travel = 0.0;
    let mut prev = route[pos];
    for &next in &route[pos + 1..] {
        travel += instance.vertex_travel_time(prev, next);
        prev = next;
    }
    travel + instance.vertex_travel_time(prev, 0)
}

/// Travel along `route` from the crossdock to request `i`'s delivery.
fn leading_travel(instance: &Instance, route: &[usize], i: usize, n: usize) -> f64 {
    let mut travel = 0.0;
    let mut prev = 0;
    for &r in route {
        travel += instance.vertex_travel_time(prev, n + r);
        if r == i {
            return travel;
        }
        prev = n + r;
    }
    unreachable!("request on route");
}

/// Per-structure schedule variables, all bounded by the depot window.
struct ScheduleVars {
    /// `u[v-1]`: service start at request vertex `v`.
    u0: usize,
    /// Per vehicle: start, crossdock arrival, unload complete, reload start,
    /// crossdock departure, end.
    veh0: usize,
    /// `z[i-1]`: transfer-ready time of request `i`.
    z0: usize,
}

const VEH_FIELDS: usize = 6;

/// Builds and solves the scheduling LP for one structure. Returns the
/// variable values when a feasible schedule exists.
fn schedule(instance: &Instance, structure: &Structure<'_>) -> Option<(ScheduleVars, Vec<f64>)> {
    let n = instance.num_requests();
    let k_count = instance.num_vehicles();
    let [open, close] = instance.depot_window;
    let mut lp = LpProblem::new();

    let u0 = 0;
    for v in 1..=2 * n {
        let [e, l] = instance.vertex_window(v);
        let (lo, hi) = (e.max(open), l.min(close));
        if lo > hi {
            return None;
        }
        lp.add_variable(lo, hi, 0.0);
    }
    let veh0 = lp.num_variables();
    for _ in 0..k_count * VEH_FIELDS {
        lp.add_variable(open, close, 0.0);
    }
    let z0 = lp.num_variables();
    for _ in 0..n {
        lp.add_variable(open, close, 0.0);
    }
    let vars = ScheduleVars { u0, veh0, z0 };
    let veh = |k: usize, field: usize| veh0 + k * VEH_FIELDS + field;
    let (start, arrive, unload, reload, depart, end) = (0, 1, 2, 3, 4, 5);

    for k in 0..k_count {
        // Pickup chain: start -> requests -> crossdock arrival.
        let mut prev = veh(k, start);
        let mut prev_v = 0;
        for &i in &structure.pickup.routes[k] {
            let var = u0 + i - 1;
            lp.add_row(
                Sense::Ge,
                instance.vertex_travel_time(prev_v, i),
                &[(var, 1.0), (prev, -1.0)],
            );
            prev = var;
            prev_v = i;
        }
        lp.add_row(
            Sense::Ge,
            instance.vertex_travel_time(prev_v, 0),
            &[(veh(k, arrive), 1.0), (prev, -1.0)],
        );

        // Delivery chain: crossdock departure -> requests -> end.
        let mut prev = veh(k, depart);
        let mut prev_v = 0;
        for &i in &structure.delivery.routes[k] {
            let var = u0 + n + i - 1;
            lp.add_row(
                Sense::Ge,
                instance.vertex_travel_time(prev_v, n + i),
                &[(var, 1.0), (prev, -1.0)],
            );
            prev = var;
            prev_v = n + i;
        }
        lp.add_row(
            Sense::Ge,
            instance.vertex_travel_time(prev_v, 0),
            &[(veh(k, end), 1.0), (prev, -1.0)],
        );

        // Crossdock handling and the waiting gap between unload and reload.
        lp.add_row(
            Sense::Eq,
            structure.unload_time(instance, k),
            &[(veh(k, unload), 1.0), (veh(k, arrive), -1.0)],
        );
        lp.add_row(Sense::Ge, 0.0, &[(veh(k, reload), 1.0), (veh(k, unload), -1.0)]);
        lp.add_row(
            Sense::Eq,
            structure.reload_time(instance, k),
            &[(veh(k, depart), 1.0), (veh(k, reload), -1.0)],
        );

        // Route duration limits.
        let cap = instance.vehicles[k].max_route_duration;
        lp.add_row(Sense::Le, cap, &[(veh(k, arrive), 1.0), (veh(k, start), -1.0)]);
        lp.add_row(Sense::Le, cap, &[(veh(k, end), 1.0), (veh(k, depart), -1.0)]);
    }

    for i in 1..=n {
        // Ride-time limit pickup -> delivery.
        lp.add_row(
            Sense::Le,
            instance.max_ride_time,
            &[(u0 + n + i - 1, 1.0), (u0 + i - 1, -1.0)],
        );
        if structure.transferred(i) {
            let a = structure.pickup_vehicle[i - 1];
            let b = structure.delivery_vehicle[i - 1];
            // Ready after the pickup vehicle unloads; reloaded no earlier.
            lp.add_row(Sense::Ge, 0.0, &[(z0 + i - 1, 1.0), (veh(a, unload), -1.0)]);
            lp.add_row(Sense::Ge, 0.0, &[(veh(b, reload), 1.0), (z0 + i - 1, -1.0)]);
        }
    }

    let solved = solve_lp(&lp, &[], None);
    match solved.status {
        LpStatus::Optimal => Some((vars, solved.values)),
        _ => None,
    }
}

/// Assembles a full solution from a structure and its schedule.
fn assemble(
    instance: &Instance,
    structure: &Structure<'_>,
    vars: &ScheduleVars,
    values: &[f64],
    cost: f64,
) -> Solution {
    let n = instance.num_requests();
    let k_count = instance.num_vehicles();
    let veh = |k: usize, field: usize| vars.veh0 + k * VEH_FIELDS + field;
    let vehicles = (0..k_count)
        .map(|k| {
            let unloads: Vec<bool> = (1..=n)
                .map(|i| structure.transferred(i) && structure.pickup_vehicle[i - 1] == k)
                .collect();
            let reloads: Vec<bool> = (1..=n)
                .map(|i| structure.transferred(i) && structure.delivery_vehicle[i - 1] == k)
                .collect();
            VehicleSolution {
                pickup_route: structure.pickup.routes[k].clone(),
                delivery_route: structure.delivery.routes[k].iter().map(|&i| n + i).collect(),
                start_time: values[veh(k, 0)],
                crossdock_arrival: values[veh(k, 1)],
                crossdock_departure: values[veh(k, 4)],
                end_time: values[veh(k, 5)],
                unload_complete: values[veh(k, 2)],
                reload_start: values[veh(k, 3)],
                any_unload: unloads.iter().any(|&b| b),
                any_reload: reloads.iter().any(|&b| b),
                unloads,
                reloads,
            }
        })
        .collect();
    let serve_times: Vec<f64> = (0..2 * n).map(|idx| values[vars.u0 + idx]).collect();
    let ride_times = (0..n).map(|i| serve_times[n + i] - serve_times[i]).collect();
    Solution {
        vehicles,
        transfer_ready: (0..n).map(|i| values[vars.z0 + i]).collect(),
        ride_times,
        serve_times,
        total_cost: cost,
    }
}

/// Solves `instance` by exhaustive enumeration with the default options.
pub fn solve_exhaustive(instance: &Instance) -> Result<SolveResult, OracleError> {
    solve_exhaustive_with(instance, &OracleOptions::default())
}

/// Solves `instance` by exhaustive enumeration. `nodes_explored` reports the
/// number of route structures examined.
pub fn solve_exhaustive_with(
    instance: &Instance,
    options: &OracleOptions,
) -> Result<SolveResult, OracleError> {
    let started = std::time::Instant::now();
    let n = instance.num_requests();
    if n > MAX_REQUESTS {
        return Err(OracleError::TooLarge { requests: n });
    }
    let diagnostics = validate_instance(instance);
    if !diagnostics.is_valid() {
        return Err(OracleError::Invalid(diagnostics.to_string()));
    }
    debug_assert_eq!(vertex::count(n), 2 * n + 4);

    let sides = enumerate_sides(instance);
    let mut examined: u64 = 0;
    let mut best: Option<(f64, Solution)> = None;
    for pickup in &sides {
        for delivery in &sides {
            examined += 1;
            let structure = Structure {
                pickup,
                delivery,
                pickup_vehicle: pickup.vehicle_of(n),
                delivery_vehicle: delivery.vehicle_of(n),
            };
            let cost = structure_cost(instance, &structure);
            if options.cost_prune {
                if let Some((best_cost, _)) = &best {
                    if cost >= best_cost - 1e-12 {
                        continue;
                    }
                }
            }
            if options.prefilter
                && (!windows_reachable(instance, &structure)
                    || !ride_times_possible(instance, &structure))
            {
                continue;
            }
            let Some((vars, values)) = schedule(instance, &structure) else {
                continue;
            };
            if best.as_ref().is_none_or(|(best_cost, _)| cost < *best_cost) {
                best = Some((cost, assemble(instance, &structure, &vars, &values, cost)));
            }
        }
    }

    let log = format!(
        "exhaustive: structures={} feasible_best={}\n",
        examined,
        best.as_ref().map_or(f64::INFINITY, |(c, _)| *c),
    );
    let result = match best {
        Some((cost, solution)) => SolveResult {
            status: SolveStatus::Optimal,
            objective: cost,
            bound: cost,
            solution: Some(solution),
            nodes_explored: examined,
            constraints: 0,
            cpu_seconds: started.elapsed().as_secs_f64(),
            gap: 0.0,
            log,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            solution: None,
            nodes_explored: examined,
            constraints: 0,
            cpu_seconds: started.elapsed().as_secs_f64(),
            gap: 0.0,
            log,
        },
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testkit::wide_instance;
    use crate::validate::validate;

    #[test]
    fn refuses_oversized_instances() {
        let instance = wide_instance(6, 2);
        assert!(matches!(
            solve_exhaustive(&instance),
            Err(OracleError::TooLarge { requests: 6 })
        ));
    }

    #[test]
    fn examines_documented_structure_count() {
        // Two requests, two vehicles: each vehicle takes exactly one pickup
        // and one delivery, so each side has two structures and the search
        // examines four pairs.
        let instance = wide_instance(2, 2);
        let result = solve_exhaustive(&instance).unwrap();
        assert_eq!(result.nodes_explored, 4);
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!((result.objective - 8.0).abs() < 1e-9);
    }

    #[test]
    fn more_vehicles_than_requests_is_infeasible() {
        let instance = wide_instance(1, 2);
        let result = solve_exhaustive(&instance).unwrap();
        assert_eq!(result.status, SolveStatus::Infeasible);
        assert_eq!(result.nodes_explored, 0);
    }

    #[test]
    fn oracle_solutions_validate() {
        for (n, k) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
            let instance = wide_instance(n, k);
            let result = solve_exhaustive(&instance).unwrap();
            let solution = result.solution.expect("feasible");
            let report = validate(&instance, &solution).unwrap();
            assert!(report.passed, "n={n} k={k}:\n{report}");
            assert!((solution.total_cost - result.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn filters_do_not_change_the_answer() {
        let everything_off = OracleOptions {
            prefilter: false,
            cost_prune: false,
        };
        for (n, k) in [(2, 2), (3, 1), (3, 2)] {
            let instance = wide_instance(n, k);
            let fast = solve_exhaustive(&instance).unwrap();
            let slow = solve_exhaustive_with(&instance, &everything_off).unwrap();
            assert_eq!(fast.status, slow.status);
            assert_eq!(fast.nodes_explored, slow.nodes_explored);
            assert!((fast.objective - slow.objective).abs() < 1e-9, "n={n} k={k}");
        }
    }

    #[test]
    fn matches_reference_instance_optimum() {
        let instance = crate::samples::toy();
        let result = solve_exhaustive(&instance).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!(
            (result.objective - 1101.234).abs() < 1e-3,
            "objective {}",
            result.objective
        );
        let solution = result.solution.unwrap();
        let report = validate(&instance, &solution).unwrap();
        assert!(report.passed, "{report}");
    }

    /// Geometry that forces a crossdock transfer: one vehicle must take both
    /// far co-located pickups (their windows chain), but their deliveries
    /// lie on opposite sides with overlapping tight windows, so no vehicle
    /// can deliver both of the requests it picked up.
    fn transfer_forcing_instance() -> Instance {
        use crate::instance::{CrossdockParams, DeliverySite, PickupSite, Point, Vehicle};
        Instance {
            name: "forced-transfer".into(),
            num_requests: 3,
            depot: Some(Point { x: 0.0, y: 0.0 }),
            pickups: vec![
                PickupSite {
                    id: 1,
                    x: Some(10.0),
                    y: Some(0.0),
                    demand: 1.0,
                    tw: [10.0, 10.2],
                },
                PickupSite {
                    id: 2,
                    x: Some(10.0),
                    y: Some(0.0),
                    demand: 1.0,
                    tw: [10.5, 11.0],
                },
                PickupSite {
                    id: 3,
                    x: Some(-10.0),
                    y: Some(0.0),
                    demand: 1.0,
                    tw: [10.0, 10.2],
                },
            ],
            deliveries: vec![
                DeliverySite {
                    id: 4,
                    x: Some(0.0),
                    y: Some(10.0),
                    tw: [40.0, 41.0],
                },
                DeliverySite {
                    id: 5,
                    x: Some(0.0),
                    y: Some(-10.0),
                    tw: [40.0, 41.0],
                },
                DeliverySite {
                    id: 6,
                    x: Some(0.0),
                    y: Some(9.0),
                    tw: [45.0, 50.0],
                },
            ],
            vehicles: vec![
                Vehicle {
                    capacity: 100.0,
                    max_route_duration: 200.0,
                },
                Vehicle {
                    capacity: 100.0,
                    max_route_duration: 200.0,
                },
            ],
            depot_window: [0.0, 2000.0],
            crossdock: CrossdockParams {
                fixed_time: 1.0,
                per_unit_time: 0.1,
            },
            max_ride_time: 100.0,
            travel_time_matrix: None,
            cost_matrix: None,
        }
    }

    #[test]
    fn finds_forced_transfers() {
        let instance = transfer_forcing_instance();
        let result = solve_exhaustive(&instance).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal, "{}", result.log);
        let solution = result.solution.unwrap();
        let report = validate(&instance, &solution).unwrap();
        assert!(report.passed, "{report}");
        assert!(
            solution.vehicles.iter().any(|v| v.any_unload),
            "optimum must transfer at least one request"
        );
    }
}
