//! The directed routing graph.
//!
//! Arcs connect the depot start to pickups, pickups among each other, pickups
//! to the crossdock arrival, the crossdock departure to deliveries,
//! deliveries among each other, and deliveries to the depot end. Pickup and
//! delivery routes are disjoint by construction: there are no arcs between
//! the pickup side and the delivery side, and none into the depot start /
//! crossdock departure or out of the crossdock arrival / depot end.
//!
//! [`eliminate_infeasible_arcs`] drops arcs that can never be driven because
//! of time windows and records ride-time conflict pairs (arc combinations
//! that would force a request to exceed the maximum ride time). Conflict
//! pairs are kept as data for the model builder rather than removed: each arc
//! on its own may still appear in an optimal solution.

use thiserror::Error;

use crate::instance::{vertex, Instance};

/// A directed arc with its resolved travel time and traversal cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub travel_time: f64,
    pub cost: f64,
}

/// Two arcs that cannot both be used: driving `pickup_arc` and `delivery_arc`
/// forces the ride time of one request above the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConflictPair {
    /// Index of the pickup-side arc `(i, j)`.
    pub pickup_arc: usize,
    /// Index of the delivery-side arc `(j', delivery of i)`.
    pub delivery_arc: usize,
}

/// The arc set of an instance, with adjacency lists and conflict pairs.
#[derive(Debug, Clone)]
pub struct ArcSet {
    num_requests: usize,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
    index: Vec<Vec<Option<usize>>>,
    /// Conflict pairs among the surviving arcs, in deterministic order.
    pub conflict_pairs: Vec<ConflictPair>,
}

#[derive(Debug, Error)]
pub enum ArcError {
    #[error("no travel times: instance needs full coordinates or a travel_time_matrix")]
    NoTravelTimes,
    #[error("travel time for arc ({from}, {to}) is not finite")]
    BadTravelTime { from: usize, to: usize },
}

impl ArcSet {
    fn from_arcs(num_requests: usize, arcs: Vec<Arc>) -> Self {
        let vertices = vertex::count(num_requests);
        let mut out_arcs = vec![Vec::new(); vertices];
        let mut in_arcs = vec![Vec::new(); vertices];
        let mut index = vec![vec![None; vertices]; vertices];
        for (idx, arc) in arcs.iter().enumerate() {
            out_arcs[arc.from].push(idx);
            in_arcs[arc.to].push(idx);
            index[arc.from][arc.to] = Some(idx);
        }
        ArcSet {
            num_requests,
            arcs,
            out_arcs,
            in_arcs,
            index,
            conflict_pairs: Vec::new(),
        }
    }

    pub fn num_requests(&self) -> usize {
        self.num_requests
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn arc(&self, idx: usize) -> &Arc {
        &self.arcs[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Arc)> {
        self.arcs.iter().enumerate()
    }

    /// Indices of arcs leaving `v`, in construction order.
    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out_arcs[v]
    }

    /// Indices of arcs entering `v`, in construction order.
    pub fn in_arcs(&self, v: usize) -> &[usize] {
        &self.in_arcs[v]
    }

    pub fn index_of(&self, from: usize, to: usize) -> Option<usize> {
        self.index[from][to]
    }

    pub fn contains(&self, from: usize, to: usize) -> bool {
        self.index_of(from, to).is_some()
    }
}

/// Builds the full arc set of an instance.
pub fn build_arc_set(instance: &Instance) -> Result<ArcSet, ArcError> {
    let n = instance.num_requests();
    if instance.travel_time_matrix.is_none() && !instance.has_full_coordinates() {
        return Err(ArcError::NoTravelTimes);
    }

    let mut arcs = Vec::with_capacity(4 * n + 2 * n * n.saturating_sub(1));
    let mut push = |from: usize, to: usize| -> Result<(), ArcError> {
        let travel_time = instance.vertex_travel_time(from, to);
        let cost = instance.vertex_cost(from, to);
        if !travel_time.is_finite() || !cost.is_finite() {
            return Err(ArcError::BadTravelTime { from, to });
        }
        arcs.push(Arc { from, to, travel_time, cost });
        Ok(())
    };

    for j in 1..=n {
        push(vertex::START, j)?;
    }
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                push(i, j)?;
            }
        }
    }
    for i in 1..=n {
        push(i, vertex::crossdock_in(n))?;
    }
    for j in n + 1..=2 * n {
        push(vertex::crossdock_out(n), j)?;
    }
    for i in n + 1..=2 * n {
        for j in n + 1..=2 * n {
            if i != j {
                push(i, j)?;
            }
        }
    }
    for i in n + 1..=2 * n {
        push(i, vertex::end(n))?;
    }

    Ok(ArcSet::from_arcs(n, arcs))
}

/// Drops arcs that violate time windows and records ride-time conflict
/// pairs among the survivors.
///
/// An arc `(i, j)` is unusable when even the earliest possible departure
/// arrives after `j`'s window closes. A pickup arc `(i, j)` and a delivery
/// arc `(j', n+i)` conflict when the shortest chain
/// `i -> j -> crossdock -> j' -> n+i` already exceeds the maximum ride time;
/// the chain bound relies on the triangle inequality.
pub fn eliminate_infeasible_arcs(instance: &Instance, arcs: &ArcSet) -> ArcSet {
    let n = instance.num_requests();
    let kept: Vec<Arc> = arcs
        .arcs
        .iter()
        .filter(|arc| {
            let [e_from, _] = instance.vertex_window(arc.from);
            let [_, l_to] = instance.vertex_window(arc.to);
            e_from + arc.travel_time <= l_to
        })
        .copied()
        .collect();
    let mut result = ArcSet::from_arcs(n, kept);

    let crossdock_in = vertex::crossdock_in(n);
    let crossdock_out = vertex::crossdock_out(n);
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let Some(pickup_arc) = result.index_of(i, j) else {
                continue;
            };
            let to_crossdock = result.arc(pickup_arc).travel_time
                + instance.vertex_travel_time(j, crossdock_in);
            for jp in n + 1..=2 * n {
                if jp == vertex::delivery_of(i, n) {
                    continue;
                }
                let Some(delivery_arc) = result.index_of(jp, vertex::delivery_of(i, n)) else {
                    continue;
                };
                let chain = to_crossdock
                    + instance.vertex_travel_time(crossdock_out, jp)
                    + result.arc(delivery_arc).travel_time;
                if chain > instance.max_ride_time {
                    result.conflict_pairs.push(ConflictPair { pickup_arc, delivery_arc });
                }
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CrossdockParams, DeliverySite, PickupSite, Vehicle};

    /// Instance with an explicit travel matrix and wide-open windows.
    fn matrix_instance(n: usize, matrix: Vec<Vec<f64>>) -> Instance {
        Instance {
            name: "matrix".into(),
            num_requests: n,
            depot: None,
            pickups: (1..=n)
                .map(|id| PickupSite { id, x: None, y: None, demand: 1.0, tw: [0.0, 1e6] })
                .collect(),
            deliveries: (n + 1..=2 * n)
                .map(|id| DeliverySite { id, x: None, y: None, tw: [0.0, 1e6] })
                .collect(),
            vehicles: vec![Vehicle { capacity: 100.0, max_route_duration: 1e6 }],
            depot_window: [0.0, 1e6],
            crossdock: CrossdockParams { fixed_time: 0.0, per_unit_time: 0.0 },
            max_ride_time: 1e6,
            travel_time_matrix: Some(matrix),
            cost_matrix: None,
        }
    }

    fn uniform_matrix(n: usize, value: f64) -> Vec<Vec<f64>> {
        vec![vec![value; 2 * n + 1]; 2 * n + 1]
    }

    /// Arc membership stated directly from the route structure, independent
    /// of the construction loops.
    fn belongs(from: usize, to: usize, n: usize) -> bool {
        let p = |v: usize| vertex::is_pickup(v, n);
        let d = |v: usize| vertex::is_delivery(v, n);
        (from == vertex::START && p(to))
            || (p(from) && p(to) && from != to)
            || (p(from) && to == vertex::crossdock_in(n))
            || (from == vertex::crossdock_out(n) && d(to))
            || (d(from) && d(to) && from != to)
            || (d(from) && to == vertex::end(n))
    }

    #[test]
    fn single_request_graph_has_exactly_four_arcs() {
        let inst = matrix_instance(1, uniform_matrix(1, 1.0));
        let arcs = build_arc_set(&inst).unwrap();
        let listed: Vec<(usize, usize)> = arcs.iter().map(|(_, a)| (a.from, a.to)).collect();
        assert_eq!(listed, vec![(0, 1), (1, 3), (4, 2), (2, 5)]);
    }

    #[test]
    fn arc_count_matches_membership_rule() {
        for n in 1..=8 {
            let inst = matrix_instance(n, uniform_matrix(n, 1.0));
            let arcs = build_arc_set(&inst).unwrap();
            assert_eq!(arcs.len(), 4 * n + 2 * n * (n - 1), "n = {n}");
            let vertices = vertex::count(n);
            let mut expected = 0;
            for from in 0..vertices {
                for to in 0..vertices {
                    let member = belongs(from, to, n);
                    assert_eq!(arcs.contains(from, to), member, "arc ({from}, {to}), n = {n}");
                    expected += usize::from(member);
                }
            }
            assert_eq!(arcs.len(), expected);
        }
    }

    #[test]
    fn pickup_and_delivery_sides_are_disconnected() {
        let n = 4;
        let inst = matrix_instance(n, uniform_matrix(n, 1.0));
        let arcs = build_arc_set(&inst).unwrap();
        for (_, arc) in arcs.iter() {
            let crosses = vertex::is_pickup(arc.from, n) && vertex::is_delivery(arc.to, n)
                || vertex::is_delivery(arc.from, n) && vertex::is_pickup(arc.to, n);
            assert!(!crosses, "arc ({}, {}) crosses the crossdock", arc.from, arc.to);
        }
        assert!(arcs.in_arcs(vertex::START).is_empty());
        assert!(arcs.out_arcs(vertex::crossdock_in(n)).is_empty());
        assert!(arcs.in_arcs(vertex::crossdock_out(n)).is_empty());
        assert!(arcs.out_arcs(vertex::end(n)).is_empty());
    }

    #[test]
    fn adjacency_lists_are_consistent_with_arcs() {
        let n = 3;
        let inst = matrix_instance(n, uniform_matrix(n, 2.0));
        let arcs = build_arc_set(&inst).unwrap();
        for v in 0..vertex::count(n) {
            for &idx in arcs.out_arcs(v) {
                assert_eq!(arcs.arc(idx).from, v);
            }
            for &idx in arcs.in_arcs(v) {
                assert_eq!(arcs.arc(idx).to, v);
            }
        }
        let total: usize = (0..vertex::count(n)).map(|v| arcs.out_arcs(v).len()).sum();
        assert_eq!(total, arcs.len());
    }

    #[test]
    fn window_elimination_removes_unreachable_arcs() {
        let n = 2;
        let mut inst = matrix_instance(n, uniform_matrix(n, 10.0));
        // Pickup 2 closes before anyone can reach it from pickup 1.
        inst.pickups[0].tw = [100.0, 200.0];
        inst.pickups[1].tw = [0.0, 105.0];
        let full = build_arc_set(&inst).unwrap();
        let reduced = eliminate_infeasible_arcs(&inst, &full);
        assert!(full.contains(1, 2));
        assert!(!reduced.contains(1, 2), "arc (1, 2) departs at 100, arrives 110 > 105");
        assert!(reduced.contains(2, 1));
        assert_eq!(reduced.len(), full.len() - 1);
    }

    #[test]
    fn window_elimination_keeps_boundary_arcs() {
        let n = 2;
        let mut inst = matrix_instance(n, uniform_matrix(n, 10.0));
        inst.pickups[0].tw = [100.0, 200.0];
        inst.pickups[1].tw = [0.0, 110.0]; // exactly reachable
        let reduced = eliminate_infeasible_arcs(&inst, &build_arc_set(&inst).unwrap());
        assert!(reduced.contains(1, 2));
    }

    #[test]
    fn elimination_is_idempotent() {
        let n = 3;
        let mut inst = matrix_instance(n, uniform_matrix(n, 25.0));
        inst.pickups[2].tw = [0.0, 20.0];
        inst.deliveries[0].tw = [30.0, 40.0];
        let once = eliminate_infeasible_arcs(&inst, &build_arc_set(&inst).unwrap());
        let twice = eliminate_infeasible_arcs(&inst, &once);
        let arcs_of = |set: &ArcSet| set.iter().map(|(_, a)| (a.from, a.to)).collect::<Vec<_>>();
        assert_eq!(arcs_of(&once), arcs_of(&twice));
        assert_eq!(once.conflict_pairs, twice.conflict_pairs);
    }

    #[test]
    fn long_chains_become_conflict_pairs() {
        // Two requests; the chain pickup1 -> pickup2 -> crossdock ->
        // delivery4 -> delivery3 takes 200 + 150 + 150 + 100 = 600 > 550.
        let n = 2;
        let mut matrix = uniform_matrix(n, 1.0);
        matrix[1][2] = 200.0;
        matrix[2][0] = 150.0;
        matrix[0][4] = 150.0;
        matrix[4][3] = 100.0;
        let mut inst = matrix_instance(n, matrix);
        inst.max_ride_time = 550.0;
        let reduced = eliminate_infeasible_arcs(&inst, &build_arc_set(&inst).unwrap());
        assert_eq!(reduced.len(), 4 * n + 2 * n * (n - 1), "windows are wide open");
        let described: Vec<((usize, usize), (usize, usize))> = reduced
            .conflict_pairs
            .iter()
            .map(|p| {
                let a = reduced.arc(p.pickup_arc);
                let b = reduced.arc(p.delivery_arc);
                ((a.from, a.to), (b.from, b.to))
            })
            .collect();
        assert_eq!(described, vec![((1, 2), (4, 3))]);
    }

    #[test]
    fn short_chains_are_not_conflicts() {
        let n = 2;
        let mut inst = matrix_instance(n, uniform_matrix(n, 100.0));
        inst.max_ride_time = 550.0; // chains take 400 <= 550
        let reduced = eliminate_infeasible_arcs(&inst, &build_arc_set(&inst).unwrap());
        assert!(reduced.conflict_pairs.is_empty());
    }
}
