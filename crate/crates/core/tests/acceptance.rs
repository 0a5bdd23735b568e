//! Acceptance gate: one test per release criterion, each printing a
//! `criterion N (...): pass` line on success. Run with `--nocapture` to see
//! the lines; a failing criterion fails its test with details.

use std::collections::BTreeSet;
use std::time::Instant;

use pdpcd::arcs::{build_arc_set, eliminate_infeasible_arcs};
use pdpcd::bnc::{solve, SolveOptions, SolveStatus};
use pdpcd::generate::{generate, GenerateParams};
use pdpcd::instance::{vertex, Instance};
use pdpcd::oracle::solve_exhaustive;
use pdpcd::samples;
use pdpcd::solution::{Solution, VehicleSolution};
use pdpcd::validate::{compute_ride_times, evaluate_cost, validate};

/// The shared small-instance suite: ≥50 seeded instances with n in {2,3,4}
/// and two vehicles, plus crafted infeasible variants of each size so the
/// feasibility comparison has both answers to agree on.
fn small_suite() -> Vec<Instance> {
    let mut suite = Vec::new();
    for n in [2usize, 3, 4] {
        for seed in 0..15 {
            suite.push(generate(&GenerateParams::new(n, 2, seed)).unwrap().instance);
        }
        // Variant A: a delivery window opening after the depot closes.
        let mut blocked = generate(&GenerateParams::new(n, 2, 100)).unwrap().instance;
        let close = blocked.depot_window[1];
        blocked.deliveries[0].tw = [close + 10.0, close + 20.0];
        blocked.name.push_str("-blocked");
        suite.push(blocked);
        // Variant B: request 1 outweighs every vehicle.
        let mut heavy = generate(&GenerateParams::new(n, 2, 101)).unwrap().instance;
        heavy.pickups[0].demand = 2.0 * heavy
            .vehicles
            .iter()
            .map(|v| v.capacity)
            .fold(0.0, f64::max);
        heavy.name.push_str("-heavy");
        suite.push(heavy);
    }
    assert!(suite.len() >= 50, "suite has {} instances", suite.len());
    suite
}

fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn criterion_1_oracle_equivalence() {
    let started = Instant::now();
    for instance in small_suite() {
        let exact = solve(&instance, &SolveOptions::default())
            .unwrap_or_else(|e| panic!("{}: {e}", instance.name));
        let reference = solve_exhaustive(&instance)
            .unwrap_or_else(|e| panic!("{}: {e}", instance.name));
        let feasible = exact.status == SolveStatus::Optimal;
        assert_eq!(
            feasible,
            reference.status == SolveStatus::Optimal,
            "{}: solver {:?} vs oracle {:?}",
            instance.name,
            exact.status,
            reference.status
        );
        if feasible {
            assert!(
                relative_close(exact.objective, reference.objective, 1e-6),
                "{}: solver {} vs oracle {}",
                instance.name,
                exact.objective,
                reference.objective
            );
        }
    }
    assert!(
        started.elapsed().as_secs() < 600,
        "suite took {:?}",
        started.elapsed()
    );
    println!("criterion 1 (oracle equivalence): pass");
}

#[test]
fn criterion_2_validator_soundness() {
    for instance in small_suite() {
        let exact = solve(&instance, &SolveOptions::default()).unwrap();
        let Some(solution) = exact.solution else {
            continue;
        };
        let report = validate(&instance, &solution).unwrap();
        assert!(
            report.passed && report.num_violations() == 0,
            "{}:\n{report}",
            instance.name
        );
    }
    println!("criterion 2 (validator soundness): pass");
}

#[test]
fn criterion_3_cut_neutrality() {
    let mut cases: Vec<Instance> = Vec::new();
    for (n, seeds) in [(3usize, 0..6u64), (4, 0..7), (5, 0..7)] {
        for seed in seeds {
            cases.push(generate(&GenerateParams::new(n, 2, seed)).unwrap().instance);
        }
    }
    assert_eq!(cases.len(), 20);
    println!("instance                nodes(cuts) nodes(plain)");
    for instance in cases {
        let with = solve(&instance, &SolveOptions::default()).unwrap();
        let without = solve(
            &instance,
            &SolveOptions {
                enable_cuts: false,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(with.status, SolveStatus::Optimal, "{}", instance.name);
        assert_eq!(without.status, SolveStatus::Optimal, "{}", instance.name);
        assert!(
            relative_close(with.objective, without.objective, 1e-6),
            "{}: {} with cuts vs {} without",
            instance.name,
            with.objective,
            without.objective
        );
        println!(
            "{:<23} {:>11} {:>12}",
            instance.name, with.nodes_explored, without.nodes_explored
        );
    }
    println!("criterion 3 (cut neutrality): pass");
}

#[test]
fn criterion_4_linearization_equivalence() {
    for instance in small_suite() {
        let exact = solve(&instance, &SolveOptions::default()).unwrap();
        let Some(solution) = exact.solution else {
            continue;
        };
        let recomputed = compute_ride_times(&instance, &solution).unwrap();
        for (i, (&stored, &direct)) in solution
            .ride_times
            .iter()
            .zip(recomputed.iter())
            .enumerate()
        {
            assert!(
                (stored - direct).abs() <= 1e-6,
                "{} request {}: stored {} vs recomputed {}",
                instance.name,
                i + 1,
                stored,
                direct
            );
        }
    }
    println!("criterion 4 (linearization equivalence): pass");
}

/// The published schedule fragment for the reference instance: route set,
/// service times, and vehicle time fields as reported by the source.
fn published_fragment() -> Solution {
    let no_flags = vec![false; 4];
    let vehicles = vec![
        VehicleSolution {
            pickup_route: vec![3, 1],
            delivery_route: vec![7, 5],
            start_time: 360.0,
            crossdock_arrival: 599.99,
            crossdock_departure: 643.99,
            end_time: 1123.99,
            unload_complete: 599.99,
            reload_start: 643.99,
            unloads: no_flags.clone(),
            reloads: no_flags.clone(),
            any_unload: false,
            any_reload: false,
        },
        VehicleSolution {
            pickup_route: vec![2, 4],
            delivery_route: vec![6, 8],
            start_time: 360.0,
            crossdock_arrival: 646.82,
            crossdock_departure: 743.77,
            end_time: 1223.77,
            unload_complete: 646.82,
            reload_start: 743.77,
            unloads: no_flags.clone(),
            reloads: no_flags,
            any_unload: false,
            any_reload: false,
        },
    ];
    let serve_times = vec![442.0, 544.5, 429.8, 595.0, 823.0, 852.0, 913.0, 1009.5];
    let ride_times = vec![381.0, 307.5, 483.2, 414.5];
    Solution {
        vehicles,
        serve_times,
        transfer_ready: vec![599.99, 646.82, 599.99, 646.82],
        ride_times,
        total_cost: 1101.234,
    }
}

#[test]
fn criterion_5_published_value_consistency() {
    let instance = samples::toy();
    let fragment = published_fragment();

    let rides = compute_ride_times(&instance, &fragment).unwrap();
    let expected = [381.0, 307.5, 483.2, 414.5];
    for (i, (&got, want)) in rides.iter().zip(expected).enumerate() {
        assert!(
            (got - want).abs() < 1e-9,
            "ride {} is {} not {}",
            i + 1,
            got,
            want
        );
        assert!(got <= instance.max_ride_time, "ride {} beyond limit", i + 1);
    }

    for vehicle in &fragment.vehicles {
        let delivery = vehicle.end_time - vehicle.crossdock_departure;
        assert!(
            (delivery - 480.0).abs() < 1e-9,
            "delivery duration {delivery}"
        );
        let pickup = vehicle.crossdock_arrival - vehicle.start_time;
        assert!(pickup <= 480.0 + 1e-9, "pickup duration {pickup}");
    }
    let pickup_durations: Vec<f64> = fragment
        .vehicles
        .iter()
        .map(|v| v.crossdock_arrival - v.start_time)
        .collect();
    assert!((pickup_durations[0] - 239.99).abs() < 1e-9);
    assert!((pickup_durations[1] - 286.82).abs() < 1e-9);

    let cost = evaluate_cost(&instance, &fragment).unwrap();
    let legs: f64 = 99.813 + 170.025 + 369.310 + 462.086;
    assert!((legs - 1101.234).abs() < 1e-9);
    assert!((cost - 1101.234).abs() < 1e-3, "cost {cost}");
    println!("criterion 5 (published value consistency): pass");
}

#[test]
fn criterion_6_reference_instance_solve() {
    let instance = samples::toy();
    let result = solve(&instance, &SolveOptions::default()).unwrap();
    assert_eq!(result.status, SolveStatus::Optimal);
    assert!(
        (result.objective - 1101.23).abs() <= 0.01 * 1101.23,
        "objective {}",
        result.objective
    );
    let solution = result.solution.unwrap();
    let pickup_routes: BTreeSet<Vec<usize>> = solution
        .vehicles
        .iter()
        .map(|v| v.pickup_route.clone())
        .collect();
    let delivery_routes: BTreeSet<Vec<usize>> = solution
        .vehicles
        .iter()
        .map(|v| v.delivery_route.clone())
        .collect();
    assert_eq!(
        pickup_routes,
        [vec![3, 1], vec![2, 4]].into_iter().collect::<BTreeSet<_>>()
    );
    assert_eq!(
        delivery_routes,
        [vec![7, 5], vec![6, 8]].into_iter().collect::<BTreeSet<_>>()
    );
    println!("criterion 6 (reference instance solve): pass");
}

#[test]
fn criterion_7_desk_scale_capacity() {
    for seed in [0u64, 1] {
        let instance = generate(&GenerateParams::new(6, 2, seed)).unwrap().instance;
        let started = Instant::now();
        let result = solve(&instance, &SolveOptions::default()).unwrap();
        let elapsed = started.elapsed();
        assert_eq!(result.status, SolveStatus::Optimal, "{}", instance.name);
        assert!(result.gap <= 1e-6, "{}: gap {}", instance.name, result.gap);
        assert!(
            elapsed.as_secs() < 900,
            "{}: took {:?}",
            instance.name,
            elapsed
        );
        println!(
            "  {} solved in {:.1}s over {} nodes",
            instance.name,
            elapsed.as_secs_f64(),
            result.nodes_explored
        );
    }
    println!("criterion 7 (desk-scale capacity): pass");
}

#[test]
fn criterion_8_preprocessing_soundness() {
    for instance in small_suite() {
        let reference = solve_exhaustive(&instance).unwrap();
        let Some(solution) = reference.solution else {
            continue;
        };
        let n = instance.num_requests;
        let arcs = eliminate_infeasible_arcs(&instance, &build_arc_set(&instance).unwrap());
        let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
        for vehicle in &solution.vehicles {
            let mut prev = vertex::START;
            for &v in &vehicle.pickup_route {
                used.insert((prev, v));
                prev = v;
            }
            used.insert((prev, vertex::crossdock_in(n)));
            let mut prev = vertex::crossdock_out(n);
            for &v in &vehicle.delivery_route {
                used.insert((prev, v));
                prev = v;
            }
            used.insert((prev, vertex::end(n)));
        }
        for &(from, to) in &used {
            assert!(
                arcs.contains(from, to),
                "{}: optimal solution uses eliminated arc ({from}, {to})",
                instance.name
            );
        }
        for pair in &arcs.conflict_pairs {
            let first = arcs.arc(pair.pickup_arc);
            let second = arcs.arc(pair.delivery_arc);
            assert!(
                !(used.contains(&(first.from, first.to))
                    && used.contains(&(second.from, second.to))),
                "{}: optimal solution uses both arcs of a conflict pair",
                instance.name
            );
        }
    }
    println!("criterion 8 (preprocessing soundness): pass");
}

#[test]
fn criterion_9_determinism() {
    let strip = |log: &str| -> String {
        log.lines()
            .map(|line| line.rsplit_once(" elapsed=").map_or(line, |(head, _)| head))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut cases = vec![samples::toy()];
    cases.push(generate(&GenerateParams::new(4, 2, 5)).unwrap().instance);
    for instance in cases {
        let options = SolveOptions::default();
        let a = solve(&instance, &options).unwrap();
        let b = solve(&instance, &options).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits(), "{}", instance.name);
        assert_eq!(a.nodes_explored, b.nodes_explored, "{}", instance.name);
        assert_eq!(strip(&a.log), strip(&b.log), "{}", instance.name);
        let routes = |r: &pdpcd::bnc::SolveResult| -> Vec<(Vec<usize>, Vec<usize>)> {
            r.solution
                .as_ref()
                .map(|s| {
                    s.vehicles
                        .iter()
                        .map(|v| (v.pickup_route.clone(), v.delivery_route.clone()))
                        .collect()
                })
                .unwrap_or_default()
        };
        assert_eq!(routes(&a), routes(&b), "{}", instance.name);
    }
    println!("criterion 9 (determinism): pass");
}
