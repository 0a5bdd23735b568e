//! Turns an integer-feasible variable assignment into a `Solution`.

use thiserror::Error;

use super::MilpModel;
use crate::instance::{vertex, Instance};
use crate::solution::{Solution, VehicleSolution};

/// Tolerance for reading a binary value as 0 or 1.
const BIN_TOL: f64 = 1e-6;

/// Raised when the assignment cannot be decoded into routes. Every variant
/// signals a solver bug (the search only extracts integer-feasible points),
/// never a user error.
#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("non-integral routing variables: {variable} = {value}")]
    FractionalRouting { variable: String, value: f64 },
    #[error("vehicle {vehicle} has {used} outgoing arcs selected at vertex {vertex}; routes need exactly one")]
    BrokenRoute {
        vehicle: usize,
        vertex: usize,
        used: usize,
    },
    #[error("vehicle {vehicle} route does not reach its end depot")]
    RouteTooLong { vehicle: usize },
    #[error("vertex {vertex} is visited {count} times across all routes")]
    CoverageViolation { vertex: usize, count: usize },
}

/// Decodes `values` (one entry per model variable) into per-vehicle routes,
/// schedules, and transfer flags. The total cost is recomputed from the arc
/// costs of the traversed routes, not read from the objective.
pub fn extract_solution(
    model: &MilpModel,
    values: &[f64],
    instance: &Instance,
) -> Result<Solution, ExtractError> {
    let n = model.num_requests;
    let index = &model.index;
    assert_eq!(values.len(), model.num_variables(), "assignment length");

    for var in model.binary_variables() {
        let v = values[var];
        if (v - v.round()).abs() > BIN_TOL || !(-BIN_TOL..=1.0 + BIN_TOL).contains(&v) {
            return Err(ExtractError::FractionalRouting {
                variable: model.names[var].clone(),
                value: v,
            });
        }
    }

    let mut visits = vec![0usize; 2 * n + 1];
    let mut total_cost = 0.0;
    let mut vehicles = Vec::with_capacity(model.num_vehicles);
    for k in 0..model.num_vehicles {
        let pickup_route = walk(model, values, k, vertex::START, vertex::crossdock_in(n))?;
        let delivery_route = walk(model, values, k, vertex::crossdock_out(n), vertex::end(n))?;
        for &v in pickup_route.iter().chain(&delivery_route) {
            visits[v] += 1;
        }
        total_cost += route_cost(model, values, k, instance);

        let unloads: Vec<bool> = (1..=n).map(|i| values[index.unload(k, i)] > 0.5).collect();
        let reloads: Vec<bool> = (1..=n).map(|i| values[index.reload(k, i)] > 0.5).collect();
        vehicles.push(VehicleSolution {
            pickup_route,
            delivery_route,
            start_time: values[index.serve(k, vertex::START)],
            crossdock_arrival: values[index.serve(k, vertex::crossdock_in(n))],
            crossdock_departure: values[index.serve(k, vertex::crossdock_out(n))],
            end_time: values[index.serve(k, vertex::end(n))],
            unload_complete: values[index.unload_complete(k)],
            reload_start: values[index.reload_start(k)],
            unloads,
            reloads,
            any_unload: values[index.vehicle_unloads(k)] > 0.5,
            any_reload: values[index.vehicle_reloads(k)] > 0.5,
        });
    }

    for v in 1..=2 * n {
        if visits[v] != 1 {
            return Err(ExtractError::CoverageViolation {
                vertex: v,
                count: visits[v],
            });
        }
    }

    Ok(Solution {
        vehicles,
        serve_times: (1..=2 * n).map(|v| values[index.visit(v)]).collect(),
        transfer_ready: (1..=n).map(|i| values[index.transfer_ready(i)]).collect(),
        ride_times: (1..=n).map(|i| values[index.ride(i)]).collect(),
        total_cost,
    })
}

/// Follows the selected arcs of vehicle `k` from `start` to `end` and
/// returns the interior vertices in visit order.
fn walk(
    model: &MilpModel,
    values: &[f64],
    k: usize,
    start: usize,
    end: usize,
) -> Result<Vec<usize>, ExtractError> {
    let mut route = Vec::new();
    let mut at = start;
    // A side visits at most all 2n request vertices; anything longer loops.
    for _ in 0..2 * model.num_requests + 1 {
        let mut next = None;
        let mut used = 0;
        for &a in model.arcs.out_arcs(at) {
            if values[model.index.x(k, a)] > 0.5 {
                used += 1;
                next = Some(model.arcs.arc(a).to);
            }
        }
        if used != 1 {
            return Err(ExtractError::BrokenRoute {
                vehicle: k,
                vertex: at,
                used,
            });
        }
        at = next.unwrap();
        if at == end {
            return Ok(route);
        }
        route.push(at);
    }
    Err(ExtractError::RouteTooLong { vehicle: k })
}

fn route_cost(model: &MilpModel, values: &[f64], k: usize, instance: &Instance) -> f64 {
    model
        .arcs
        .iter()
        .filter(|(a, _)| values[model.index.x(k, *a)] > 0.5)
        .map(|(_, arc)| instance.vertex_cost(arc.from, arc.to))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::super::testkit::{build, wide_instance};
    use super::*;
    use crate::lp::{solve_lp, LpStatus};

    /// Fixes the unique single-request structure and solves for the times.
    fn solved_values(model: &super::MilpModel) -> Vec<f64> {
        let overrides: Vec<(usize, f64, f64)> = model
            .binary_variables()
            .map(|var| {
                let b = if model.names[var].starts_with("x_") {
                    1.0
                } else {
                    0.0
                };
                (var, b, b)
            })
            .collect();
        let sol = solve_lp(&model.lp, &overrides, None);
        assert_eq!(sol.status, LpStatus::Optimal);
        sol.values
    }

    #[test]
    fn decodes_single_request_routes() {
        let instance = wide_instance(1, 1);
        let model = build(&instance);
        let values = solved_values(&model);
        let solution = extract_solution(&model, &values, &instance).unwrap();
        assert_eq!(solution.vehicles.len(), 1);
        assert_eq!(solution.vehicles[0].pickup_route, vec![1]);
        assert_eq!(solution.vehicles[0].delivery_route, vec![2]);
        assert!(!solution.vehicles[0].any_unload);
        assert!(!solution.vehicles[0].any_reload);
        // Four unit-cost arcs.
        assert!((solution.total_cost - 4.0).abs() < 1e-9);
        assert_eq!(solution.serve_times.len(), 2);
        assert_eq!(solution.ride_times.len(), 1);
    }

    #[test]
    fn rejects_fractional_binaries() {
        let instance = wide_instance(1, 1);
        let model = build(&instance);
        let mut values = solved_values(&model);
        values[model.index.x(0, 0)] = 0.5;
        assert!(matches!(
            extract_solution(&model, &values, &instance),
            Err(ExtractError::FractionalRouting { .. })
        ));
    }

    #[test]
    fn rejects_unrouted_vehicles() {
        let instance = wide_instance(1, 1);
        let model = build(&instance);
        let mut values = solved_values(&model);
        // Drop the depot-to-pickup arc: the pickup side no longer has an
        // outgoing arc selected at the start depot.
        values[model.index.x(0, model.arcs.index_of(0, 1).unwrap())] = 0.0;
        assert_eq!(
            extract_solution(&model, &values, &instance),
            Err(ExtractError::BrokenRoute {
                vehicle: 0,
                vertex: 0,
                used: 0
            })
        );
    }
}
