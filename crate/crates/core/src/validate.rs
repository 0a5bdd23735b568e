//! Model-independent solution checking.
//!
//! The validator reads only instance data and a [`Solution`] — never the
//! mixed-integer model — and re-derives every constraint family directly,
//! including the nonlinear ride-time definition. It is the ground truth the
//! search must agree with: every incumbent is required to pass with zero
//! violations.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::instance::{vertex, Instance};
use crate::solution::Solution;

/// Absolute tolerance on all time comparisons.
pub const TIME_TOL: f64 = 1e-6;
/// Relative tolerance on the stored-versus-recomputed total cost.
pub const COST_REL_TOL: f64 = 1e-6;

/// Constraint family checked by the validator.
///
/// The numbering is the internal family labeling shared with the model
/// rows; `Eq21` is the nonlinear ride-time recomputation and `Eq22` the
/// ride-time cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Eq2,
    Eq3,
    Eq4,
    Eq5,
    Eq6,
    Eq7,
    Eq8,
    Eq9,
    Eq10,
    Eq11,
    Eq12,
    Eq13,
    Eq14,
    Eq15,
    Eq16,
    Eq17,
    Eq18,
    Eq19,
    Eq20,
    Eq21,
    Eq22,
}

/// All families, in report order.
pub const FAMILIES: [Family; 21] = [
    Family::Eq2,
    Family::Eq3,
    Family::Eq4,
    Family::Eq5,
    Family::Eq6,
    Family::Eq7,
    Family::Eq8,
    Family::Eq9,
    Family::Eq10,
    Family::Eq11,
    Family::Eq12,
    Family::Eq13,
    Family::Eq14,
    Family::Eq15,
    Family::Eq16,
    Family::Eq17,
    Family::Eq18,
    Family::Eq19,
    Family::Eq20,
    Family::Eq21,
    Family::Eq22,
];

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Family::Eq2 => 2,
            Family::Eq3 => 3,
            Family::Eq4 => 4,
            Family::Eq5 => 5,
            Family::Eq6 => 6,
            Family::Eq7 => 7,
            Family::Eq8 => 8,
            Family::Eq9 => 9,
            Family::Eq10 => 10,
            Family::Eq11 => 11,
            Family::Eq12 => 12,
            Family::Eq13 => 13,
            Family::Eq14 => 14,
            Family::Eq15 => 15,
            Family::Eq16 => 16,
            Family::Eq17 => 17,
            Family::Eq18 => 18,
            Family::Eq19 => 19,
            Family::Eq20 => 20,
            Family::Eq21 => 21,
            Family::Eq22 => 22,
        };
        write!(f, "eq{n}")
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// One violated check: `lhs` compared against `rhs`, with `slack = lhs - rhs`
/// (the signed overshoot for a `lhs <= rhs` check, the signed mismatch for
/// an equality check).
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub entity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Outcome of one constraint family: passes iff no violations.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub family: Family,
    pub violations: Vec<Violation>,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Full validation outcome.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub families: Vec<FamilyReport>,
    pub stored_cost: f64,
    pub recomputed_cost: f64,
    pub cost_ok: bool,
    /// True iff every family passes and the cost matches.
    pub passed: bool,
}

impl ValidationReport {
    pub fn family(&self, family: Family) -> &FamilyReport {
        self.families
            .iter()
            .find(|f| f.family == family)
            .expect("every family is reported")
    }

    /// Total number of violated checks across all families.
    pub fn num_violations(&self) -> usize {
        self.families.iter().map(|f| f.violations.len()).sum()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "verdict: {}",
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        writeln!(
            f,
            "cost: stored {:.6}, recomputed {:.6} ({})",
            self.stored_cost,
            self.recomputed_cost,
            if self.cost_ok { "ok" } else { "MISMATCH" }
        )?;
        for family in &self.families {
            if family.passed() {
                writeln!(f, "{:<6} pass", family.family.to_string())?;
            } else {
                writeln!(
                    f,
                    "{:<6} FAIL ({} violations)",
                    family.family.to_string(),
                    family.violations.len()
                )?;
                for v in &family.violations {
                    writeln!(
                        f,
                        "       {}: {:.6} vs {:.6} (slack {:.6})",
                        v.entity, v.lhs, v.rhs, v.slack
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// The solution cannot be interpreted against the instance at all. Distinct
/// from constraint violations, which presume a parseable solution.
#[derive(Debug, Error, PartialEq)]
pub enum ValidateError {
    #[error("solution has {got} vehicles, instance has {want}")]
    VehicleCount { got: usize, want: usize },
    #[error("{what} has length {got}, expected {want}")]
    ArrayLength {
        what: String,
        got: usize,
        want: usize,
    },
    #[error("vehicle {vehicle} {side} route contains vertex {vertex}, which is not a {side} vertex")]
    RouteVertex {
        vehicle: usize,
        side: &'static str,
        vertex: usize,
    },
}

fn check_structure(instance: &Instance, solution: &Solution) -> Result<(), ValidateError> {
    let n = instance.num_requests();
    if solution.vehicles.len() != instance.num_vehicles() {
        return Err(ValidateError::VehicleCount {
            got: solution.vehicles.len(),
            want: instance.num_vehicles(),
        });
    }
    let lengths = [
        ("serve_times", solution.serve_times.len(), 2 * n),
        ("transfer_ready", solution.transfer_ready.len(), n),
        ("ride_times", solution.ride_times.len(), n),
    ];
    for (what, got, want) in lengths {
        if got != want {
            return Err(ValidateError::ArrayLength {
                what: what.into(),
                got,
                want,
            });
        }
    }
    for (k, veh) in solution.vehicles.iter().enumerate() {
        for (what, got) in [
            ("unloads", veh.unloads.len()),
            ("reloads", veh.reloads.len()),
        ] {
            if got != n {
                return Err(ValidateError::ArrayLength {
                    what: format!("vehicle {k} {what}"),
                    got,
                    want: n,
                });
            }
        }
        for &v in &veh.pickup_route {
            if !vertex::is_pickup(v, n) {
                return Err(ValidateError::RouteVertex {
                    vehicle: k,
                    side: "pickup",
                    vertex: v,
                });
            }
        }
        for &v in &veh.delivery_route {
            if !vertex::is_delivery(v, n) {
                return Err(ValidateError::RouteVertex {
                    vehicle: k,
                    side: "delivery",
                    vertex: v,
                });
            }
        }
    }
    Ok(())
}

/// Recomputes each request's ride time from the serve times: delivery start
/// minus pickup start. This is the direct nonlinear definition, independent
/// of any linearization.
pub fn compute_ride_times(
    instance: &Instance,
    solution: &Solution,
) -> Result<Vec<f64>, ValidateError> {
    check_structure(instance, solution)?;
    let n = instance.num_requests();
    Ok((1..=n)
        .map(|i| solution.serve_times[n + i - 1] - solution.serve_times[i - 1])
        .collect())
}

/// Sums the arc costs of every traversed leg of every route.
pub fn evaluate_cost(instance: &Instance, solution: &Solution) -> Result<f64, ValidateError> {
    check_structure(instance, solution)?;
    let n = instance.num_requests();
    let mut total = 0.0;
    for veh in &solution.vehicles {
        total += leg_cost(instance, vertex::START, &veh.pickup_route, vertex::crossdock_in(n));
        total += leg_cost(
            instance,
            vertex::crossdock_out(n),
            &veh.delivery_route,
            vertex::end(n),
        );
    }
    Ok(total)
}

fn leg_cost(instance: &Instance, start: usize, route: &[usize], end: usize) -> f64 {
    let mut cost = 0.0;
    let mut at = start;
    for &v in route {
        cost += instance.vertex_cost(at, v);
        at = v;
    }
    cost + instance.vertex_cost(at, end)
}

struct Checker {
    families: Vec<FamilyReport>,
}

impl Checker {
    fn new() -> Self {
        Self {
            families: FAMILIES
                .iter()
                .map(|&family| FamilyReport {
                    family,
                    violations: Vec::new(),
                })
                .collect(),
        }
    }

    fn record(&mut self, family: Family, entity: String, lhs: f64, rhs: f64) {
        let report = self
            .families
            .iter_mut()
            .find(|f| f.family == family)
            .expect("family exists");
        report.violations.push(Violation {
            entity,
            lhs,
            rhs,
            slack: lhs - rhs,
        });
    }

    /// Checks `lhs <= rhs` within tolerance.
    fn le(&mut self, family: Family, entity: impl Into<String>, lhs: f64, rhs: f64) {
        if lhs > rhs + TIME_TOL {
            self.record(family, entity.into(), lhs, rhs);
        }
    }

    /// Checks `lhs == rhs` within tolerance.
    fn eq(&mut self, family: Family, entity: impl Into<String>, lhs: f64, rhs: f64) {
        if (lhs - rhs).abs() > TIME_TOL {
            self.record(family, entity.into(), lhs, rhs);
        }
    }

    /// Checks a boolean flag against its implied value.
    fn flag(&mut self, family: Family, entity: impl Into<String>, got: bool, want: bool) {
        if got != want {
            self.record(family, entity.into(), f64::from(got), f64::from(want));
        }
    }
}

/// Checks `solution` against every constraint family, directly from
/// instance data.
pub fn validate(instance: &Instance, solution: &Solution) -> Result<ValidationReport, ValidateError> {
    check_structure(instance, solution)?;
    let n = instance.num_requests();
    let [depot_open, depot_close] = instance.depot_window;
    let mut c = Checker::new();

    // Single visit: each pickup vertex in exactly one pickup route, each
    // delivery vertex in exactly one delivery route.
    let mut visits = vec![0usize; 2 * n + 1];
    for veh in &solution.vehicles {
        for &v in veh.pickup_route.iter().chain(&veh.delivery_route) {
            visits[v] += 1;
        }
    }
    for v in 1..=2 * n {
        if visits[v] != 1 {
            c.record(
                Family::Eq2,
                format!("vertex {v} visit count"),
                visits[v] as f64,
                1.0,
            );
        }
    }

    for (k, veh) in solution.vehicles.iter().enumerate() {
        let capacity = instance.vehicles[k].capacity;
        let pickup_load: f64 = veh.pickup_route.iter().map(|&v| instance.vertex_demand(v)).sum();
        let delivery_load: f64 = veh
            .delivery_route
            .iter()
            .map(|&v| instance.vertex_demand(v))
            .sum();
        c.le(Family::Eq3, format!("vehicle {k} pickup load"), pickup_load, capacity);
        c.le(
            Family::Eq4,
            format!("vehicle {k} delivery load"),
            delivery_load,
            capacity,
        );

        // Route structure: both sides must actually leave their start depot.
        if veh.pickup_route.is_empty() {
            c.record(Family::Eq5, format!("vehicle {k} pickup route empty"), 0.0, 1.0);
        }
        if veh.delivery_route.is_empty() {
            c.record(Family::Eq6, format!("vehicle {k} delivery route empty"), 0.0, 1.0);
        }
        // Path connectivity (eq7) is inherent in the sequence encoding of
        // routes; the family is reported for completeness and cannot fail.

        // Time propagation along every traversed arc, both sides.
        let serve = |v: usize| solution.serve_times[v - 1];
        let chain = |c: &mut Checker, start_time, start_v, route: &[usize], end_time, end_v| {
            let mut at = start_v;
            let mut time = start_time;
            for &v in route {
                c.le(
                    Family::Eq8,
                    format!("vehicle {k} arc {at}->{v}"),
                    time + instance.vertex_travel_time(at, v),
                    serve(v),
                );
                at = v;
                time = serve(v);
            }
            c.le(
                Family::Eq8,
                format!("vehicle {k} arc {at}->{end_v}"),
                time + instance.vertex_travel_time(at, end_v),
                end_time,
            );
        };
        chain(
            &mut c,
            veh.start_time,
            vertex::START,
            &veh.pickup_route,
            veh.crossdock_arrival,
            vertex::crossdock_in(n),
        );
        chain(
            &mut c,
            veh.crossdock_departure,
            vertex::crossdock_out(n),
            &veh.delivery_route,
            veh.end_time,
            vertex::end(n),
        );

        // Depot-side time windows for this vehicle's schedule fields.
        for (what, t) in [
            ("start", veh.start_time),
            ("crossdock arrival", veh.crossdock_arrival),
            ("crossdock departure", veh.crossdock_departure),
            ("end", veh.end_time),
            ("unload complete", veh.unload_complete),
            ("reload start", veh.reload_start),
        ] {
            c.le(Family::Eq9, format!("vehicle {k} {what} before depot opens"), depot_open, t);
            c.le(Family::Eq9, format!("vehicle {k} {what} after depot closes"), t, depot_close);
        }

        // Transfer flags by the four-case rule.
        for i in 1..=n {
            let picked = veh.pickup_route.contains(&i);
            let delivered = veh.delivery_route.contains(&(n + i));
            let want_unload = picked && !delivered;
            let want_reload = delivered && !picked;
            c.flag(
                Family::Eq10,
                format!("vehicle {k} unload flag, request {i}"),
                veh.unloads[i - 1],
                want_unload,
            );
            c.flag(
                Family::Eq10,
                format!("vehicle {k} reload flag, request {i}"),
                veh.reloads[i - 1],
                want_reload,
            );
            if veh.unloads[i - 1] && veh.reloads[i - 1] {
                c.record(
                    Family::Eq11,
                    format!("vehicle {k} both unloads and reloads request {i}"),
                    2.0,
                    1.0,
                );
            }
        }
        c.flag(
            Family::Eq12,
            format!("vehicle {k} any-unload indicator"),
            veh.any_unload,
            veh.unloads.iter().any(|&b| b),
        );
        c.flag(
            Family::Eq13,
            format!("vehicle {k} any-reload indicator"),
            veh.any_reload,
            veh.reloads.iter().any(|&b| b),
        );

        // Crossdock handling times.
        let unload_handling: f64 = (1..=n)
            .filter(|&i| veh.unloads[i - 1])
            .map(|i| instance.crossdock.per_unit_time * instance.demand(i))
            .sum::<f64>()
            + if veh.any_unload {
                instance.crossdock.fixed_time
            } else {
                0.0
            };
        let reload_handling: f64 = (1..=n)
            .filter(|&i| veh.reloads[i - 1])
            .map(|i| instance.crossdock.per_unit_time * instance.demand(i))
            .sum::<f64>()
            + if veh.any_reload {
                instance.crossdock.fixed_time
            } else {
                0.0
            };
        c.eq(
            Family::Eq14,
            format!("vehicle {k} unload completion"),
            veh.unload_complete,
            veh.crossdock_arrival + unload_handling,
        );
        c.le(
            Family::Eq15,
            format!("vehicle {k} reload before unload done"),
            veh.unload_complete,
            veh.reload_start,
        );
        c.eq(
            Family::Eq16,
            format!("vehicle {k} crossdock departure"),
            veh.crossdock_departure,
            veh.reload_start + reload_handling,
        );

        // Cross-vehicle synchronization through the transfer-ready times.
        for i in 1..=n {
            if veh.reloads[i - 1] {
                c.le(
                    Family::Eq17,
                    format!("vehicle {k} reloads request {i} before it is ready"),
                    solution.transfer_ready[i - 1],
                    veh.reload_start,
                );
            }
            if veh.unloads[i - 1] {
                c.le(
                    Family::Eq18,
                    format!("request {i} ready before vehicle {k} unloads it"),
                    veh.unload_complete,
                    solution.transfer_ready[i - 1],
                );
            }
        }

        // Route duration caps.
        let duration = instance.vehicles[k].max_route_duration;
        c.le(
            Family::Eq19,
            format!("vehicle {k} pickup duration"),
            veh.crossdock_arrival - veh.start_time,
            duration,
        );
        c.le(
            Family::Eq20,
            format!("vehicle {k} delivery duration"),
            veh.end_time - veh.crossdock_departure,
            duration,
        );
    }

    // Request-vertex time windows.
    for v in 1..=2 * n {
        let [e, l] = instance.vertex_window(v);
        let t = solution.serve_times[v - 1];
        c.le(Family::Eq9, format!("vertex {v} served before window"), e, t);
        c.le(Family::Eq9, format!("vertex {v} served after window"), t, l);
    }
    for i in 1..=n {
        let z = solution.transfer_ready[i - 1];
        c.le(
            Family::Eq9,
            format!("request {i} transfer-ready before depot opens"),
            depot_open,
            z,
        );
        c.le(
            Family::Eq9,
            format!("request {i} transfer-ready after depot closes"),
            z,
            depot_close,
        );
    }

    // Ride times: stored values must match the recomputation, and the
    // recomputed values must respect the cap.
    let rides = compute_ride_times(instance, solution)?;
    for i in 1..=n {
        c.eq(
            Family::Eq21,
            format!("request {i} stored ride time"),
            solution.ride_times[i - 1],
            rides[i - 1],
        );
        c.le(
            Family::Eq22,
            format!("request {i} ride time cap"),
            rides[i - 1],
            instance.max_ride_time,
        );
    }

    let recomputed_cost = evaluate_cost(instance, solution)?;
    let cost_ok = (recomputed_cost - solution.total_cost).abs()
        <= COST_REL_TOL * recomputed_cost.abs().max(1.0);
    let passed = cost_ok && c.families.iter().all(FamilyReport::passed);
    Ok(ValidationReport {
        families: c.families,
        stored_cost: solution.total_cost,
        recomputed_cost,
        cost_ok,
        passed,
    })
}
