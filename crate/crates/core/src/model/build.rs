//! Model assembly: big-M computation, base constraint rows, and cuts.

use thiserror::Error;

use super::{effective_window, MilpModel, RowTag, VarIndex, VarKind};
use crate::arcs::ArcSet;
use crate::instance::{vertex, Instance};
use crate::lp::{LpProblem, Sense};

/// Floor applied to every big-M so rows stay well-posed even with
/// degenerate (zero-width) time windows.
const M_EPS: f64 = 1e-9;

/// Per-use finite big-M constants.
///
/// Each time-propagation row gets its own constant sized from the windows of
/// the arc it covers; the crossdock synchronization and slack-linking rows
/// share the planning-horizon constant.
#[derive(Debug, Clone)]
pub struct BigMTable {
    /// `arc_m[a]`: constant for the time-propagation row of arc `a`,
    /// `max(eps, l_from + t_a - e_to)`.
    pub arc_m: Vec<f64>,
    /// Latest possible route end time; used by the synchronization rows and
    /// the slack-variable bounds.
    pub horizon: f64,
}

impl BigMTable {
    pub fn m8(&self, arc: usize) -> f64 {
        self.arc_m[arc]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("arc set is empty; nothing to route")]
    EmptyArcSet,
    #[error("{vehicles} vehicles but only {requests} requests: every vehicle needs at least one pickup and one delivery")]
    TooFewRequests { requests: usize, vehicles: usize },
    #[error("vertex {vertex} can never be served: its time window lies outside the depot window")]
    UnreachableVertex { vertex: usize },
}

/// Computes the per-row big-M constants for `arcs`.
///
/// The propagation row of arc `(i, j)` only needs to be vacuous when the arc
/// is unused, which `l_i + t_ij - e_j` achieves exactly; arc elimination
/// guarantees positivity on surviving arcs (up to degenerate windows, hence
/// the epsilon floor).
pub fn compute_big_m(instance: &Instance, arcs: &ArcSet) -> BigMTable {
    let arc_m = arcs
        .iter()
        .map(|(_, arc)| {
            let [_, l_from] = instance.vertex_window(arc.from);
            let [e_to, _] = instance.vertex_window(arc.to);
            (l_from + arc.travel_time - e_to).max(M_EPS)
        })
        .collect();
    BigMTable {
        arc_m,
        horizon: instance.depot_window[1],
    }
}

/// Builds the complete base model (objective, variables, and all constraint
/// families) for `instance` over the reduced arc set.
///
/// Structural infeasibility that is visible without solving — an empty arc
/// set, more vehicles than requests, or a request window entirely outside
/// the depot window — is reported as an error instead of a model.
pub fn build_milp(
    instance: &Instance,
    arcs: &ArcSet,
    big_m: &BigMTable,
) -> Result<MilpModel, ModelError> {
    let n = instance.num_requests();
    let k_count = instance.num_vehicles();
    if arcs.is_empty() {
        return Err(ModelError::EmptyArcSet);
    }
    if n < k_count {
        return Err(ModelError::TooFewRequests {
            requests: n,
            vehicles: k_count,
        });
    }
    for v in 1..=2 * n {
        let (e, l) = effective_window(instance, v);
        if e > l {
            return Err(ModelError::UnreachableVertex { vertex: v });
        }
    }

    let index = VarIndex::new(n, k_count, arcs);
    let mut lp = LpProblem::new();
    let mut names = vec![String::new(); index.total()];
    let mut kinds = vec![VarKind::Continuous; index.total()];

    // Variable catalog, in index order. The LP columns must line up with the
    // VarIndex arithmetic, so creation follows the same block layout.
    for k in 0..k_count {
        for (a, arc) in arcs.iter() {
            let var = lp.add_variable(0.0, 1.0, instance.vertex_cost(arc.from, arc.to));
            debug_assert_eq!(var, index.x(k, a));
            names[var] = format!("x_k{}_{}_{}", k, arc.from, arc.to);
            kinds[var] = VarKind::Binary;
        }
    }
    for k in 0..k_count {
        for i in 1..=n {
            let var = lp.add_variable(0.0, 1.0, 0.0);
            debug_assert_eq!(var, index.unload(k, i));
            names[var] = format!("eta_k{k}_r{i}");
            kinds[var] = VarKind::Binary;
        }
    }
    for k in 0..k_count {
        for i in 1..=n {
            let var = lp.add_variable(0.0, 1.0, 0.0);
            debug_assert_eq!(var, index.reload(k, i));
            names[var] = format!("theta_k{k}_r{i}");
            kinds[var] = VarKind::Binary;
        }
    }
    for k in 0..k_count {
        let var = lp.add_variable(0.0, 1.0, 0.0);
        debug_assert_eq!(var, index.vehicle_unloads(k));
        names[var] = format!("unloads_k{k}");
        kinds[var] = VarKind::Binary;
    }
    for k in 0..k_count {
        let var = lp.add_variable(0.0, 1.0, 0.0);
        debug_assert_eq!(var, index.vehicle_reloads(k));
        names[var] = format!("reloads_k{k}");
        kinds[var] = VarKind::Binary;
    }
    for k in 0..k_count {
        for v in 0..vertex::count(n) {
            let (e, l) = effective_window(instance, v);
            let var = lp.add_variable(e, l, 0.0);
            debug_assert_eq!(var, index.serve(k, v));
            names[var] = format!("u_k{k}_v{v}");
        }
    }
    for v in 1..=2 * n {
        let (e, l) = effective_window(instance, v);
        let var = lp.add_variable(e, l, 0.0);
        debug_assert_eq!(var, index.visit(v));
        names[var] = format!("ut_v{v}");
    }
    for k in 0..k_count {
        for (a, arc) in arcs.iter() {
            if let Some(var) = index.sigma(k, a) {
                let got = lp.add_variable(-big_m.horizon, big_m.horizon, 0.0);
                debug_assert_eq!(got, var);
                names[var] = format!("sigma_k{}_{}_{}", k, arc.from, arc.to);
            }
        }
    }
    for i in 1..=n {
        let var = lp.add_variable(0.0, instance.max_ride_time, 0.0);
        debug_assert_eq!(var, index.ride(i));
        names[var] = format!("r_r{i}");
    }
    for k in 0..k_count {
        let var = lp.add_variable(instance.depot_window[0], big_m.horizon, 0.0);
        debug_assert_eq!(var, index.unload_complete(k));
        names[var] = format!("tau_k{k}");
    }
    for k in 0..k_count {
        let var = lp.add_variable(instance.depot_window[0], big_m.horizon, 0.0);
        debug_assert_eq!(var, index.reload_start(k));
        names[var] = format!("w_k{k}");
    }
    for i in 1..=n {
        let var = lp.add_variable(instance.depot_window[0], big_m.horizon, 0.0);
        debug_assert_eq!(var, index.transfer_ready(i));
        names[var] = format!("z_r{i}");
    }
    debug_assert_eq!(lp.num_variables(), index.total());

    let mut tags: Vec<RowTag> = Vec::new();
    let push = |lp: &mut LpProblem,
                    tags: &mut Vec<RowTag>,
                    tag: RowTag,
                    sense: Sense,
                    rhs: f64,
                    coeffs: &[(usize, f64)]| {
        let row = lp.add_row(sense, rhs, coeffs);
        tags.push(tag);
        debug_assert_eq!(tags.len(), row + 1);
    };

    // Single visit: each request vertex is left exactly once, over all vehicles.
    for v in 1..=2 * n {
        let mut coeffs = Vec::new();
        for k in 0..k_count {
            for &a in arcs.out_arcs(v) {
                coeffs.push((index.x(k, a), 1.0));
            }
        }
        push(&mut lp, &mut tags, RowTag::Eq2, Sense::Eq, 1.0, &coeffs);
    }

    // Capacity per side: total demand picked (delivered) by a vehicle fits.
    for k in 0..k_count {
        let mut coeffs = Vec::new();
        for i in 1..=n {
            for &a in arcs.out_arcs(i) {
                coeffs.push((index.x(k, a), instance.demand(i)));
            }
        }
        let cap = instance.vehicles[k].capacity;
        push(&mut lp, &mut tags, RowTag::Eq3, Sense::Le, cap, &coeffs);
    }
    for k in 0..k_count {
        let mut coeffs = Vec::new();
        for i in 1..=n {
            for &a in arcs.out_arcs(n + i) {
                coeffs.push((index.x(k, a), instance.demand(i)));
            }
        }
        let cap = instance.vehicles[k].capacity;
        push(&mut lp, &mut tags, RowTag::Eq4, Sense::Le, cap, &coeffs);
    }

    // Route start and end: one arc out of each start copy, one into each end
    // copy, per vehicle and side.
    for k in 0..k_count {
        for start in [vertex::START, vertex::crossdock_out(n)] {
            let coeffs: Vec<_> = arcs
                .out_arcs(start)
                .iter()
                .map(|&a| (index.x(k, a), 1.0))
                .collect();
            push(&mut lp, &mut tags, RowTag::Eq5, Sense::Eq, 1.0, &coeffs);
        }
    }
    for k in 0..k_count {
        for end in [vertex::crossdock_in(n), vertex::end(n)] {
            let coeffs: Vec<_> = arcs
                .in_arcs(end)
                .iter()
                .map(|&a| (index.x(k, a), 1.0))
                .collect();
            push(&mut lp, &mut tags, RowTag::Eq6, Sense::Eq, 1.0, &coeffs);
        }
    }

    // Flow conservation at request vertices, per vehicle.
    for k in 0..k_count {
        for v in 1..=2 * n {
            let mut coeffs = Vec::new();
            for &a in arcs.in_arcs(v) {
                coeffs.push((index.x(k, a), 1.0));
            }
            for &a in arcs.out_arcs(v) {
                coeffs.push((index.x(k, a), -1.0));
            }
            push(&mut lp, &mut tags, RowTag::Eq7, Sense::Eq, 0.0, &coeffs);
        }
    }

    // Time propagation: u_to >= u_from + t - M (1 - x) on every arc.
    for k in 0..k_count {
        for (a, arc) in arcs.iter() {
            let m = big_m.m8(a);
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq8,
                Sense::Ge,
                arc.travel_time - m,
                &[
                    (index.serve(k, arc.to), 1.0),
                    (index.serve(k, arc.from), -1.0),
                    (index.x(k, a), -m),
                ],
            );
        }
    }

    // Transfer-flag cases: eta - theta = (picked by k) - (delivered by k),
    // and never both unload and reload.
    for k in 0..k_count {
        for i in 1..=n {
            let mut coeffs = vec![(index.unload(k, i), 1.0), (index.reload(k, i), -1.0)];
            for &a in arcs.out_arcs(i) {
                coeffs.push((index.x(k, a), -1.0));
            }
            for &a in arcs.out_arcs(n + i) {
                coeffs.push((index.x(k, a), 1.0));
            }
            push(&mut lp, &mut tags, RowTag::Eq10, Sense::Eq, 0.0, &coeffs);
        }
    }
    for k in 0..k_count {
        for i in 1..=n {
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq11,
                Sense::Le,
                1.0,
                &[(index.unload(k, i), 1.0), (index.reload(k, i), 1.0)],
            );
        }
    }

    // Vehicle-level indicators track the per-request flags.
    for k in 0..k_count {
        for i in 1..=n {
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq12,
                Sense::Le,
                0.0,
                &[(index.unload(k, i), 1.0), (index.vehicle_unloads(k), -1.0)],
            );
        }
        let mut coeffs = vec![(index.vehicle_unloads(k), 1.0)];
        for i in 1..=n {
            coeffs.push((index.unload(k, i), -1.0));
        }
        push(&mut lp, &mut tags, RowTag::Eq12, Sense::Le, 0.0, &coeffs);
    }
    for k in 0..k_count {
        for i in 1..=n {
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq13,
                Sense::Le,
                0.0,
                &[(index.reload(k, i), 1.0), (index.vehicle_reloads(k), -1.0)],
            );
        }
        let mut coeffs = vec![(index.vehicle_reloads(k), 1.0)];
        for i in 1..=n {
            coeffs.push((index.reload(k, i), -1.0));
        }
        push(&mut lp, &mut tags, RowTag::Eq13, Sense::Le, 0.0, &coeffs);
    }

    // Crossdock handling: unloading ends a fixed setup plus a per-unit term
    // after arrival; reloading starts afterwards; departure follows reloading.
    let a_fix = instance.crossdock.fixed_time;
    let beta = instance.crossdock.per_unit_time;
    for k in 0..k_count {
        let mut coeffs = vec![
            (index.unload_complete(k), 1.0),
            (index.serve(k, vertex::crossdock_in(n)), -1.0),
            (index.vehicle_unloads(k), -a_fix),
        ];
        for i in 1..=n {
            coeffs.push((index.unload(k, i), -beta * instance.demand(i)));
        }
        push(&mut lp, &mut tags, RowTag::Eq14, Sense::Eq, 0.0, &coeffs);
    }
    for k in 0..k_count {
        push(
            &mut lp,
            &mut tags,
            RowTag::Eq15,
            Sense::Ge,
            0.0,
            &[
                (index.reload_start(k), 1.0),
                (index.unload_complete(k), -1.0),
            ],
        );
    }
    for k in 0..k_count {
        let mut coeffs = vec![
            (index.serve(k, vertex::crossdock_out(n)), 1.0),
            (index.reload_start(k), -1.0),
            (index.vehicle_reloads(k), -a_fix),
        ];
        for i in 1..=n {
            coeffs.push((index.reload(k, i), -beta * instance.demand(i)));
        }
        push(&mut lp, &mut tags, RowTag::Eq16, Sense::Eq, 0.0, &coeffs);
    }

    // Cross-vehicle synchronization: reloading request i waits for its
    // transfer-ready time; that time follows the unloading vehicle.
    for k in 0..k_count {
        for i in 1..=n {
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq17,
                Sense::Ge,
                -big_m.horizon,
                &[
                    (index.reload_start(k), 1.0),
                    (index.transfer_ready(i), -1.0),
                    (index.reload(k, i), -big_m.horizon),
                ],
            );
        }
    }
    for k in 0..k_count {
        for i in 1..=n {
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq18,
                Sense::Ge,
                -big_m.horizon,
                &[
                    (index.transfer_ready(i), 1.0),
                    (index.unload_complete(k), -1.0),
                    (index.unload(k, i), -big_m.horizon),
                ],
            );
        }
    }

    // Route duration caps per side.
    for k in 0..k_count {
        push(
            &mut lp,
            &mut tags,
            RowTag::Eq19,
            Sense::Le,
            instance.vehicles[k].max_route_duration,
            &[
                (index.serve(k, vertex::crossdock_in(n)), 1.0),
                (index.serve(k, vertex::START), -1.0),
            ],
        );
    }
    for k in 0..k_count {
        push(
            &mut lp,
            &mut tags,
            RowTag::Eq20,
            Sense::Le,
            instance.vehicles[k].max_route_duration,
            &[
                (index.serve(k, vertex::end(n)), 1.0),
                (index.serve(k, vertex::crossdock_out(n)), -1.0),
            ],
        );
    }

    // Serve-time linking: on the arc a vehicle actually uses into a request
    // vertex, the slack collapses to zero and the vehicle-independent visit
    // time equals that vehicle's serve time.
    for k in 0..k_count {
        for (a, arc) in arcs.iter() {
            let Some(sigma) = index.sigma(k, a) else {
                continue;
            };
            let m = big_m.horizon;
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq23,
                Sense::Eq,
                0.0,
                &[
                    (index.visit(arc.to), 1.0),
                    (sigma, 1.0),
                    (index.serve(k, arc.to), -1.0),
                ],
            );
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq23,
                Sense::Le,
                m,
                &[(sigma, 1.0), (index.x(k, a), m)],
            );
            push(
                &mut lp,
                &mut tags,
                RowTag::Eq23,
                Sense::Ge,
                -m,
                &[(sigma, 1.0), (index.x(k, a), -m)],
            );
        }
    }

    // Ride time from visit times.
    for i in 1..=n {
        push(
            &mut lp,
            &mut tags,
            RowTag::Eq24,
            Sense::Eq,
            0.0,
            &[
                (index.ride(i), 1.0),
                (index.visit(n + i), -1.0),
                (index.visit(i), 1.0),
            ],
        );
    }

    Ok(MilpModel {
        lp,
        names,
        kinds,
        tags,
        index,
        big_m: big_m.clone(),
        arcs: arcs.clone(),
        num_requests: n,
        num_vehicles: k_count,
    })
}

/// Appends the static cut families to a built model.
///
/// All four families are redundant for integer points (they never cut a
/// feasible solution) but tighten the LP relaxation: serve-time window
/// tightening, 2-cycle elimination, ride-time lower bounds, and the
/// conflict pairs recorded during arc elimination.
pub fn add_valid_inequalities(model: &mut MilpModel, instance: &Instance) {
    let n = model.num_requests;
    let k_count = model.num_vehicles;
    let arcs = model.arcs.clone();
    let index = model.index.clone();
    let horizon = model.big_m.horizon;
    let push = |model: &mut MilpModel, tag, sense, rhs, coeffs: &[(usize, f64)]| {
        model.lp.add_row(sense, rhs, coeffs);
        model.tags.push(tag);
    };

    // Serve-time tightening: a visit can start no earlier than the earliest
    // release of the predecessor plus travel, and no later than what the
    // successor's deadline allows. The routing sum is over all vehicles, so
    // the rows also pin the dummy serve times of non-visiting vehicles,
    // which is harmless (those are free within the window).
    for v in 1..=2 * n {
        let (e_v, l_v) = effective_window(instance, v);
        let mut lower: Vec<(usize, f64)> = Vec::new();
        for &a in arcs.in_arcs(v) {
            let arc = arcs.arc(a);
            let (e_from, _) = effective_window(instance, arc.from);
            let lift = (e_from + arc.travel_time - e_v).max(0.0);
            if lift > 0.0 {
                for k in 0..k_count {
                    lower.push((index.x(k, a), lift));
                }
            }
        }
        let mut upper: Vec<(usize, f64)> = Vec::new();
        for &a in arcs.out_arcs(v) {
            let arc = arcs.arc(a);
            let (_, l_to) = effective_window(instance, arc.to);
            let lift = (l_v - (l_to - arc.travel_time)).max(0.0);
            if lift > 0.0 {
                for k in 0..k_count {
                    upper.push((index.x(k, a), lift));
                }
            }
        }
        for k in 0..k_count {
            if !lower.is_empty() {
                let mut coeffs = vec![(index.serve(k, v), 1.0)];
                coeffs.extend(lower.iter().map(|&(x, m)| (x, -m)));
                push(model, RowTag::ViServeTime, Sense::Ge, e_v, &coeffs);
            }
            if !upper.is_empty() {
                let mut coeffs = vec![(index.serve(k, v), 1.0)];
                coeffs.extend(upper.iter().copied());
                push(model, RowTag::ViServeTime, Sense::Le, l_v, &coeffs);
            }
        }
    }

    // 2-cycle elimination within a side.
    for side in [0, n] {
        for i in 1..=n {
            for j in (i + 1)..=n {
                let (vi, vj) = (side + i, side + j);
                if let (Some(ij), Some(ji)) = (arcs.index_of(vi, vj), arcs.index_of(vj, vi)) {
                    let mut coeffs = Vec::new();
                    for k in 0..k_count {
                        coeffs.push((index.x(k, ij), 1.0));
                        coeffs.push((index.x(k, ji), 1.0));
                    }
                    push(model, RowTag::ViSubtour, Sense::Le, 1.0, &coeffs);
                }
            }
        }
    }

    // Ride-time lower bounds: the tail of the pickup route plus the head of
    // the delivery route is always ridden; when vehicle k reloads request i,
    // its crossdock handling is ridden too (big-M-gated per vehicle).
    for i in 1..=n {
        let base = instance.vertex_travel_time(i, vertex::crossdock_in(n))
            + instance.vertex_travel_time(vertex::crossdock_out(n), n + i);
        push(
            model,
            RowTag::ViRideTimeLb,
            Sense::Ge,
            base,
            &[(index.ride(i), 1.0)],
        );
        for k in 0..k_count {
            let mut coeffs = vec![
                (index.ride(i), 1.0),
                (index.vehicle_reloads(k), -instance.crossdock.fixed_time),
                (index.reload(k, i), -horizon),
            ];
            for j in 1..=n {
                coeffs.push((
                    index.reload(k, j),
                    -instance.crossdock.per_unit_time * instance.demand(j),
                ));
            }
            push(
                model,
                RowTag::ViRideTimeLb,
                Sense::Ge,
                base - horizon,
                &coeffs,
            );
        }
    }

    // Conflict pairs recorded by preprocessing: using both arcs would
    // overrun the ride-time cap, so at most one may be routed.
    for pair in &arcs.conflict_pairs {
        let mut coeffs = Vec::new();
        for k in 0..k_count {
            coeffs.push((index.x(k, pair.pickup_arc), 1.0));
            coeffs.push((index.x(k, pair.delivery_arc), 1.0));
        }
        push(model, RowTag::ViConflict, Sense::Le, 1.0, &coeffs);
    }
}

#[cfg(test)]
mod tests {
    use super::super::testkit::{build, wide_instance};
    use super::*;
    use crate::arcs::build_arc_set;
    use crate::lp::{solve_lp, LpStatus};
    use crate::samples;

    fn full_arcs(n: usize) -> usize {
        4 * n + 2 * n * (n - 1)
    }

    #[test]
    fn counts_follow_closed_forms_for_small_sizes() {
        for n in 1..=6usize {
            for k in 1..=n.min(3) {
                let instance = wide_instance(n, k);
                let model = build(&instance);
                let a = full_arcs(n);
                assert_eq!(model.arcs.len(), a, "n={n} k={k}");
                assert_eq!(
                    model.num_variables(),
                    2 * k * a + 2 * n * k + 8 * k + 4 * n,
                    "variables at n={n} k={k}"
                );
                assert_eq!(
                    model.binary_variables().count(),
                    k * a + 2 * n * k + 2 * k,
                    "binaries at n={n} k={k}"
                );
                assert_eq!(
                    model.num_rows(),
                    3 * n + 13 * k + 2 * n * k + 4 * k * a,
                    "rows at n={n} k={k}"
                );
                let expected = [
                    (RowTag::Eq2, 2 * n),
                    (RowTag::Eq3, k),
                    (RowTag::Eq4, k),
                    (RowTag::Eq5, 2 * k),
                    (RowTag::Eq6, 2 * k),
                    (RowTag::Eq7, 2 * n * k),
                    (RowTag::Eq8, k * a),
                    (RowTag::Eq10, n * k),
                    (RowTag::Eq11, n * k),
                    (RowTag::Eq12, (n + 1) * k),
                    (RowTag::Eq13, (n + 1) * k),
                    (RowTag::Eq14, k),
                    (RowTag::Eq15, k),
                    (RowTag::Eq16, k),
                    (RowTag::Eq17, n * k),
                    (RowTag::Eq18, n * k),
                    (RowTag::Eq19, k),
                    (RowTag::Eq20, k),
                    (RowTag::Eq23, 3 * k * (a - 2 * n)),
                    (RowTag::Eq24, n),
                ];
                for (tag, count) in expected {
                    assert_eq!(model.count_rows(tag), count, "{tag} rows at n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn four_request_catalog_has_documented_sizes() {
        let instance = wide_instance(4, 2);
        let model = build(&instance);
        assert_eq!(model.arcs.len(), 40);
        // 80 routing variables, 16 unload/reload flags, 4 vehicle indicators.
        let index = &model.index;
        let x_vars: std::collections::BTreeSet<usize> = (0..2)
            .flat_map(|k| (0..40).map(move |a| index.x(k, a)))
            .collect();
        assert_eq!(x_vars.len(), 80);
        assert!(x_vars.iter().all(|&v| model.is_binary(v)));
        assert_eq!(model.binary_variables().count(), 80 + 16 + 4);
        assert!(model.names[model.index.x(0, 0)].starts_with("x_k0_"));
        assert_eq!(model.names[model.index.unload(1, 4)], "eta_k1_r4");
    }

    #[test]
    fn big_m_matches_window_formula_per_arc() {
        let instance = samples::toy();
        let arcs = build_arc_set(&instance).unwrap();
        let arcs = crate::arcs::eliminate_infeasible_arcs(&instance, &arcs);
        let big_m = compute_big_m(&instance, &arcs);
        assert_eq!(big_m.horizon, 1320.0);
        for (a, arc) in arcs.iter() {
            let [_, l_from] = instance.vertex_window(arc.from);
            let [e_to, _] = instance.vertex_window(arc.to);
            let want = (l_from + arc.travel_time - e_to).max(1e-9);
            assert_eq!(big_m.m8(a), want, "arc {} -> {}", arc.from, arc.to);
            assert!(big_m.m8(a) > 0.0);
        }
    }

    #[test]
    fn big_m_stays_positive_for_degenerate_windows() {
        let mut instance = wide_instance(1, 1);
        instance.pickups[0].tw = [5.0, 5.0];
        instance.deliveries[0].tw = [7.0, 7.0];
        let arcs = build_arc_set(&instance).unwrap();
        let big_m = compute_big_m(&instance, &arcs);
        for (a, _) in arcs.iter() {
            assert!(big_m.m8(a) > 0.0);
        }
    }

    #[test]
    fn structural_errors_are_reported_before_solving() {
        // All arcs die in elimination: every window closes before even one
        // unit of travel fits.
        let mut instance = wide_instance(1, 1);
        instance.pickups[0].tw = [0.0, 0.5];
        instance.deliveries[0].tw = [0.0, 0.5];
        instance.depot_window = [0.0, 0.5];
        let arcs = crate::arcs::eliminate_infeasible_arcs(
            &instance,
            &build_arc_set(&instance).unwrap(),
        );
        let big_m = compute_big_m(&instance, &arcs);
        assert_eq!(
            build_milp(&instance, &arcs, &big_m).unwrap_err(),
            ModelError::EmptyArcSet
        );

        let instance = wide_instance(1, 2);
        let arcs = build_arc_set(&instance).unwrap();
        let big_m = compute_big_m(&instance, &arcs);
        assert_eq!(
            build_milp(&instance, &arcs, &big_m).unwrap_err(),
            ModelError::TooFewRequests {
                requests: 1,
                vehicles: 2
            }
        );

        let mut instance = wide_instance(2, 1);
        instance.pickups[0].tw = [0.0, 3.0];
        instance.depot_window = [5.0, 1000.0];
        let arcs = crate::arcs::eliminate_infeasible_arcs(
            &instance,
            &build_arc_set(&instance).unwrap(),
        );
        assert!(!arcs.is_empty());
        let big_m = compute_big_m(&instance, &arcs);
        assert_eq!(
            build_milp(&instance, &arcs, &big_m).unwrap_err(),
            ModelError::UnreachableVertex { vertex: 1 }
        );
    }

    /// With one request and one vehicle there are eight binaries; fixing
    /// each combination and solving the remaining LP must leave exactly one
    /// feasible point: all four arcs used, no transfer flags set. On that
    /// point the transfer-case identity, the visit-time link, and the ride
    /// definition all hold.
    #[test]
    fn single_request_fixings_leave_one_feasible_point() {
        let instance = wide_instance(1, 1);
        let model = build(&instance);
        let binaries: Vec<usize> = model.binary_variables().collect();
        assert_eq!(binaries.len(), 8);
        let index = &model.index;
        let mut feasible = Vec::new();
        for assignment in 0..1u32 << 8 {
            let overrides: Vec<(usize, f64, f64)> = binaries
                .iter()
                .enumerate()
                .map(|(bit, &var)| {
                    let b = f64::from(assignment >> bit & 1);
                    (var, b, b)
                })
                .collect();
            let sol = solve_lp(&model.lp, &overrides, None);
            if sol.status == LpStatus::Optimal {
                feasible.push(assignment);
                let picked = sol.values[index.x(0, model.arcs.index_of(1, 3).unwrap())];
                let delivered = sol.values[index.x(0, model.arcs.index_of(2, 5).unwrap())];
                let eta = sol.values[index.unload(0, 1)];
                let theta = sol.values[index.reload(0, 1)];
                assert!((eta - theta - (picked - delivered)).abs() < 1e-6);
                assert!(eta + theta < 1.0 + 1e-6);
                assert!((sol.values[index.visit(1)] - sol.values[index.serve(0, 1)]).abs() < 1e-6);
                assert!((sol.values[index.visit(2)] - sol.values[index.serve(0, 2)]).abs() < 1e-6);
                let ride = sol.values[index.ride(1)];
                assert!(
                    (ride - (sol.values[index.visit(2)] - sol.values[index.visit(1)])).abs() < 1e-6
                );
            }
        }
        // x on all four arcs, no unload, no reload, no indicators.
        assert_eq!(feasible, vec![0b0000_1111]);
    }

    #[test]
    fn cut_counts_and_relaxation_ordering() {
        let instance = wide_instance(3, 2);
        let mut model = build(&instance);
        let plain = solve_lp(&model.lp, &[], None);
        add_valid_inequalities(&mut model, &instance);
        assert_eq!(model.count_rows(RowTag::ViSubtour), 6);
        assert_eq!(model.count_rows(RowTag::ViRideTimeLb), 3 + 6);
        assert_eq!(model.count_rows(RowTag::ViServeTime), 4 * 3 * 2);
        assert_eq!(model.count_rows(RowTag::ViConflict), 0);
        let cut = solve_lp(&model.lp, &[], None);
        assert_eq!(plain.status, LpStatus::Optimal);
        assert_eq!(cut.status, LpStatus::Optimal);
        // Cuts only ever tighten a minimization relaxation.
        assert!(plain.objective <= cut.objective + 1e-7);
    }

    #[test]
    fn toy_relaxation_stays_below_known_optimum() {
        let instance = samples::toy();
        let mut model = build(&instance);
        let plain = solve_lp(&model.lp, &[], None);
        add_valid_inequalities(&mut model, &instance);
        let cut = solve_lp(&model.lp, &[], None);
        assert_eq!(plain.status, LpStatus::Optimal);
        assert_eq!(cut.status, LpStatus::Optimal);
        assert!(plain.objective <= cut.objective + 1e-7);
        assert!(cut.objective <= 1101.234 + 1e-6, "bound {}", cut.objective);
        assert_eq!(
            model.count_rows(RowTag::ViConflict),
            model.arcs.conflict_pairs.len()
        );
    }
}
