//! Bundled example instances.

use crate::instance::{CrossdockParams, DeliverySite, Instance, PickupSite, Vehicle};

/// A hand-sized worked example: four requests, two vehicles of capacity 20,
/// route duration limit 480, ride-time limit 550, crossdock handling
/// `10 + 1 * load`.
///
/// Travel times are an explicit symmetric matrix. Pickup-to-delivery entries
/// route through the depot, so the triangle inequality holds everywhere. The
/// unique optimal route set is
///
/// ```text
/// vehicle A pickups   depot -> 3 -> 1 -> crossdock      ( 99.813)
/// vehicle B pickups   depot -> 2 -> 4 -> crossdock      (170.025)
/// vehicle A deliveries crossdock -> 7 -> 5 -> depot     (369.310)
/// vehicle B deliveries crossdock -> 6 -> 8 -> depot     (462.086)
/// ```
///
/// for a total travel cost of 1101.234. Which vehicle drives which route and
/// which requests change vehicles at the crossdock are cost-neutral.
pub fn toy() -> Instance {
    let n = 4;
    // Leg times between the depot (index 0) and each site.
    let depot_leg = [0.0, 33.9, 80.0, 33.913, 40.025, 130.0, 100.0, 119.31, 137.086];
    let side = 2 * n + 1;
    let mut t = vec![vec![0.0; side]; side];
    for i in 1..side {
        t[0][i] = depot_leg[i];
        t[i][0] = depot_leg[i];
    }
    let mut set = |i: usize, j: usize, v: f64| {
        t[i][j] = v;
        t[j][i] = v;
    };
    // Within the pickup cluster.
    set(1, 2, 113.0);
    set(1, 3, 32.0);
    set(1, 4, 73.0);
    set(2, 3, 113.0);
    set(2, 4, 50.0);
    set(3, 4, 73.0);
    // Within the delivery cluster.
    set(5, 6, 229.0);
    set(5, 7, 120.0);
    set(5, 8, 267.0);
    set(6, 7, 219.0);
    set(6, 8, 225.0);
    set(7, 8, 256.0);
    // Across the two clusters the only sensible path runs through the depot.
    for i in 1..=n {
        for j in n + 1..=2 * n {
            let v = depot_leg[i] + depot_leg[j];
            t[i][j] = v;
            t[j][i] = v;
        }
    }

    Instance {
        name: "toy".into(),
        num_requests: n,
        depot: None,
        pickups: vec![
            PickupSite { id: 1, x: None, y: None, demand: 16.0, tw: [442.0, 562.0] },
            PickupSite { id: 2, x: None, y: None, demand: 10.0, tw: [455.0, 575.0] },
            PickupSite { id: 3, x: None, y: None, demand: 4.0, tw: [360.0, 471.0] },
            PickupSite { id: 4, x: None, y: None, demand: 4.0, tw: [475.0, 595.0] },
        ],
        deliveries: vec![
            DeliverySite { id: 5, x: None, y: None, tw: [823.0, 943.0] },
            DeliverySite { id: 6, x: None, y: None, tw: [852.0, 972.0] },
            DeliverySite { id: 7, x: None, y: None, tw: [793.0, 913.0] },
            DeliverySite { id: 8, x: None, y: None, tw: [1007.0, 1127.0] },
        ],
        vehicles: vec![
            Vehicle { capacity: 20.0, max_route_duration: 480.0 },
            Vehicle { capacity: 20.0, max_route_duration: 480.0 },
        ],
        depot_window: [360.0, 1320.0],
        crossdock: CrossdockParams { fixed_time: 10.0, per_unit_time: 1.0 },
        max_ride_time: 550.0,
        travel_time_matrix: Some(t),
        cost_matrix: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::{build_arc_set, eliminate_infeasible_arcs};
    use crate::instance::validate_instance;

    #[test]
    fn toy_is_valid_without_warnings() {
        let d = validate_instance(&toy());
        assert!(d.is_valid(), "{d}");
        assert!(d.warnings.is_empty(), "{d}");
    }

    #[test]
    fn toy_travel_matrix_is_symmetric_and_metric() {
        let inst = toy();
        let side = inst.num_locations();
        let m = inst.travel_time_matrix.as_ref().unwrap();
        for i in 0..side {
            assert_eq!(m[i][i], 0.0);
            for j in 0..side {
                assert_eq!(m[i][j], m[j][i]);
                for k in 0..side {
                    assert!(
                        m[i][k] <= m[i][j] + m[j][k] + 1e-9,
                        "triangle violated at ({i}, {j}, {k})"
                    );
                }
            }
        }
    }

    #[test]
    fn toy_route_leg_sums_match_documented_costs() {
        let inst = toy();
        let sum = |legs: &[(usize, usize)]| -> f64 {
            legs.iter().map(|&(a, b)| inst.vertex_travel_time(a, b)).sum()
        };
        // Vertices: crossdock_in = 9, crossdock_out = 10, end = 11.
        assert!((sum(&[(0, 3), (3, 1), (1, 9)]) - 99.813).abs() < 1e-9);
        assert!((sum(&[(0, 2), (2, 4), (4, 9)]) - 170.025).abs() < 1e-9);
        assert!((sum(&[(10, 7), (7, 5), (5, 11)]) - 369.310).abs() < 1e-9);
        assert!((sum(&[(10, 6), (6, 8), (8, 11)]) - 462.086).abs() < 1e-9);
    }

    #[test]
    fn toy_preprocessing_removes_late_pickup_arc() {
        let inst = toy();
        let reduced = eliminate_infeasible_arcs(&inst, &build_arc_set(&inst).unwrap());
        // Leaving pickup 4 no earlier than 475 reaches pickup 3 after its
        // window closes at 471.
        assert!(!reduced.contains(4, 3));
        // The documented optimal legs all survive.
        for (a, b) in [(0, 3), (3, 1), (1, 9), (0, 2), (2, 4), (4, 9),
                       (10, 7), (7, 5), (5, 11), (10, 6), (6, 8), (8, 11)] {
            assert!(reduced.contains(a, b), "arc ({a}, {b}) was eliminated");
        }
    }
}
