//! Random instance generation, feasible by construction.
//!
//! The generator first draws a complete route structure and a concrete
//! schedule for it, then writes windows, capacities, ride limit, and route
//! duration limits *around* that schedule. The witness schedule ships with
//! the instance, so every generated file is guaranteed solvable and the
//! witness doubles as an upper bound in tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{CrossdockParams, DeliverySite, Instance, PickupSite, Point, Vehicle};
use crate::solution::{Solution, VehicleSolution};

/// Tunables for [`generate`]. Only the first three are usually varied;
/// `new` fills the rest with defaults that give loosely windowed, mildly
/// loaded instances.
#[derive(Debug, Clone)]
pub struct GenerateParams {
    pub num_requests: usize,
    pub num_vehicles: usize,
    pub seed: u64,
    /// Sites are drawn uniformly in a `box_size` x `box_size` square.
    pub box_size: f64,
    /// Demands are drawn uniformly in `[demand_lo, demand_hi]`.
    pub demand_lo: f64,
    pub demand_hi: f64,
    /// Scale of the random slack added around witness service times.
    pub window_slack: f64,
    /// Vehicle capacity = realized maximum load times this.
    pub capacity_factor: f64,
    /// Ride-time limit = realized maximum ride time times this.
    pub ride_factor: f64,
    /// Route duration limit = realized maximum duration times this.
    pub duration_factor: f64,
}

impl GenerateParams {
    pub fn new(num_requests: usize, num_vehicles: usize, seed: u64) -> Self {
        GenerateParams {
            num_requests,
            num_vehicles,
            seed,
            box_size: 100.0,
            demand_lo: 1.0,
            demand_hi: 10.0,
            window_slack: 60.0,
            capacity_factor: 1.5,
            ride_factor: 1.5,
            duration_factor: 1.5,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("cannot cover {vehicles} vehicles with {requests} requests")]
    TooFewRequests { requests: usize, vehicles: usize },
}

/// A generated instance plus the schedule it was built around.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub witness: Solution,
}

/// Draws an ordered route per vehicle covering all requests, every vehicle
/// serving at least one.
fn draw_side(rng: &mut ChaCha8Rng, n: usize, k_count: usize) -> Vec<Vec<usize>> {
    let mut requests: Vec<usize> = (1..=n).collect();
    requests.shuffle(rng);
    let mut routes: Vec<Vec<usize>> = vec![Vec::new(); k_count];
    // The first `k_count` requests pin coverage; the rest land anywhere.
    for (idx, &i) in requests.iter().enumerate() {
        let k = if idx < k_count {
            idx
        } else {
            rng.gen_range(0..k_count)
        };
        routes[k].push(i);
    }
    routes
}

/// Generates an instance and its witness schedule. Identical parameters
/// produce identical output, byte for byte once serialized.
pub fn generate(params: &GenerateParams) -> Result<Generated, GenerateError> {
    let n = params.num_requests;
    let k_count = params.num_vehicles;
    if n < k_count || k_count == 0 {
        return Err(GenerateError::TooFewRequests {
            requests: n,
            vehicles: k_count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let depot = Point {
        x: params.box_size / 2.0,
        y: params.box_size / 2.0,
    };
    let coords: Vec<Point> = (0..2 * n)
        .map(|_| Point {
            x: rng.gen_range(0.0..params.box_size),
            y: rng.gen_range(0.0..params.box_size),
        })
        .collect();
    let demands: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(params.demand_lo..=params.demand_hi))
        .collect();
    let crossdock = CrossdockParams {
        fixed_time: 10.0,
        per_unit_time: 1.0,
    };

    let pickup_routes = draw_side(&mut rng, n, k_count);
    let delivery_routes = draw_side(&mut rng, n, k_count);
    let mut pickup_vehicle = vec![0usize; n];
    let mut delivery_vehicle = vec![0usize; n];
    for (k, route) in pickup_routes.iter().enumerate() {
        for &i in route {
            pickup_vehicle[i - 1] = k;
        }
    }
    for (k, route) in delivery_routes.iter().enumerate() {
        for &i in route {
            delivery_vehicle[i - 1] = k;
        }
    }
    let transferred: Vec<bool> = (0..n)
        .map(|idx| pickup_vehicle[idx] != delivery_vehicle[idx])
        .collect();

    // Positions are 0 = depot, 1..=n pickups, n+1..=2n deliveries.
    let location = |v: usize| if v == 0 { depot } else { coords[v - 1] };
    let travel = |from: usize, to: usize| {
        let (a, b) = (location(from), location(to));
        ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
    };

    // Witness schedule: earliest start everywhere.
    let mut serve = vec![0.0_f64; 2 * n];
    let mut start = vec![0.0_f64; k_count];
    let mut arrive = vec![0.0_f64; k_count];
    for (k, route) in pickup_routes.iter().enumerate() {
        let mut time = 0.0;
        let mut prev = 0;
        for &i in route {
            time += travel(prev, i);
            serve[i - 1] = time;
            prev = i;
        }
        arrive[k] = time + travel(prev, 0);
        start[k] = 0.0;
    }
    let handling = |list: &[usize], flags: &[usize], k: usize| {
        let mut any = false;
        let mut load = 0.0;
        for &i in list {
            if transferred[i - 1] && flags[i - 1] == k {
                any = true;
                load += demands[i - 1];
            }
        }
        if any {
            crossdock.fixed_time + crossdock.per_unit_time * load
        } else {
            0.0
        }
    };
    let all: Vec<usize> = (1..=n).collect();
    let unload_done: Vec<f64> = (0..k_count)
        .map(|k| arrive[k] + handling(&all, &pickup_vehicle, k))
        .collect();
    let transfer_ready: Vec<f64> = (0..n)
        .map(|idx| unload_done[pickup_vehicle[idx]])
        .collect();
    let reload_start: Vec<f64> = (0..k_count)
        .map(|k| {
            let mut t = unload_done[k];
            for idx in 0..n {
                if transferred[idx] && delivery_vehicle[idx] == k {
                    t = t.max(transfer_ready[idx]);
                }
            }
            t
        })
        .collect();
    let depart: Vec<f64> = (0..k_count)
        .map(|k| reload_start[k] + handling(&all, &delivery_vehicle, k))
        .collect();
    let mut end = vec![0.0_f64; k_count];
    for (k, route) in delivery_routes.iter().enumerate() {
        let mut time = depart[k];
        let mut prev = 0;
        for &i in route {
            time += travel(prev, n + i);
            serve[n + i - 1] = time;
            prev = n + i;
        }
        end[k] = time + travel(prev, 0);
    }

    // Windows around the witness; instance limits from realized values.
    let windows: Vec<[f64; 2]> = serve
        .iter()
        .map(|&t| {
            let before = rng.gen_range(0.2..1.0) * params.window_slack;
            let after = rng.gen_range(0.2..1.0) * params.window_slack;
            [(t - before).max(0.0), t + after]
        })
        .collect();
    let horizon = end
        .iter()
        .copied()
        .fold(0.0_f64, f64::max)
        .max(windows.iter().map(|w| w[1]).fold(0.0, f64::max))
        + params.window_slack;
    let vehicles: Vec<Vehicle> = (0..k_count)
        .map(|k| {
            let pickup_load: f64 = pickup_routes[k].iter().map(|&i| demands[i - 1]).sum();
            let delivery_load: f64 = delivery_routes[k].iter().map(|&i| demands[i - 1]).sum();
            let duration = (arrive[k] - start[k]).max(end[k] - depart[k]);
            Vehicle {
                capacity: pickup_load.max(delivery_load) * params.capacity_factor,
                max_route_duration: duration * params.duration_factor,
            }
        })
        .collect();
    let max_ride = (0..n)
        .map(|idx| serve[n + idx] - serve[idx])
        .fold(0.0_f64, f64::max);

    let instance = Instance {
        name: format!(
            "gen-n{}-k{}-s{}",
            params.num_requests, params.num_vehicles, params.seed
        ),
        num_requests: n,
        depot: Some(depot),
        pickups: (1..=n)
            .map(|i| PickupSite {
                id: i,
                x: Some(coords[i - 1].x),
                y: Some(coords[i - 1].y),
                demand: demands[i - 1],
                tw: windows[i - 1],
            })
            .collect(),
        deliveries: (1..=n)
            .map(|i| DeliverySite {
                id: n + i,
                x: Some(coords[n + i - 1].x),
                y: Some(coords[n + i - 1].y),
                tw: windows[n + i - 1],
            })
            .collect(),
        vehicles,
        depot_window: [0.0, horizon],
        crossdock,
        max_ride_time: max_ride * params.ride_factor,
        travel_time_matrix: None,
        cost_matrix: None,
    };

    let witness_vehicles: Vec<VehicleSolution> = (0..k_count)
        .map(|k| {
            let unloads: Vec<bool> = (0..n)
                .map(|idx| transferred[idx] && pickup_vehicle[idx] == k)
                .collect();
            let reloads: Vec<bool> = (0..n)
                .map(|idx| transferred[idx] && delivery_vehicle[idx] == k)
                .collect();
            VehicleSolution {
                pickup_route: pickup_routes[k].clone(),
                delivery_route: delivery_routes[k].iter().map(|&i| n + i).collect(),
                start_time: start[k],
                crossdock_arrival: arrive[k],
                crossdock_departure: depart[k],
                end_time: end[k],
                unload_complete: unload_done[k],
                reload_start: reload_start[k],
                any_unload: unloads.iter().any(|&b| b),
                any_reload: reloads.iter().any(|&b| b),
                unloads,
                reloads,
            }
        })
        .collect();
    let total_cost = (0..k_count)
        .map(|k| {
            let mut cost = 0.0;
            let mut prev = 0;
            for &i in &pickup_routes[k] {
                cost += instance.vertex_cost(prev, i);
                prev = i;
            }
            cost += instance.vertex_cost(prev, 0);
            let mut prev = 0;
            for &i in &delivery_routes[k] {
                cost += instance.vertex_cost(prev, n + i);
                prev = n + i;
            }
            cost + instance.vertex_cost(prev, 0)
        })
        .sum();
    let witness = Solution {
        vehicles: witness_vehicles,
        ride_times: (0..n).map(|idx| serve[n + idx] - serve[idx]).collect(),
        serve_times: serve,
        transfer_ready,
        total_cost,
    };

    Ok(Generated { instance, witness })
}
