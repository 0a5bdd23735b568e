//! Problem data: requests, vehicles, crossdock parameters, travel times.
//!
//! An instance describes `n` transport requests. Request `i` consists of a
//! pickup at vertex `i` (vertices are numbered `1..=n`) and a delivery at
//! vertex `n + i` (numbered `n+1..=2n`). All routes start and end at a single
//! physical depot that doubles as the crossdock. Internally the depot is
//! split into four copies so that every vehicle runs one pickup route
//! (depot-start .. crossdock-in) and one delivery route (crossdock-out ..
//! depot-end); see [`vertex`] for the numbering.
//!
//! Travel times either come from site coordinates (Euclidean distance at unit
//! speed, full floating-point precision) or from an explicit matrix. When
//! both are present the explicit matrix takes precedence. Arc traversal costs
//! default to travel times unless a separate cost matrix is given.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Planar coordinates of a site, used when travel times are Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// A pickup site: one per request, carrying the request's demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PickupSite {
    /// Vertex id; must equal the 1-based request index.
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Load picked up here and dropped at the paired delivery.
    pub demand: f64,
    /// Service time window `[earliest, latest]` in seconds.
    pub tw: [f64; 2],
}

/// A delivery site: one per request, paired with pickup `id - n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeliverySite {
    /// Vertex id; must equal `n + request index`.
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Service time window `[earliest, latest]` in seconds.
    pub tw: [f64; 2],
}

/// A vehicle of the fleet. Each vehicle performs exactly one pickup route and
/// one delivery route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vehicle {
    pub capacity: f64,
    /// Upper limit on the duration of each of the vehicle's two routes.
    pub max_route_duration: f64,
}

/// Handling-time parameters of the crossdock.
///
/// Unloading (or reloading) a set `S` of requests takes
/// `fixed_time + per_unit_time * sum of demands in S` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossdockParams {
    pub fixed_time: f64,
    pub per_unit_time: f64,
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub name: String,
    /// Number of requests `n`.
    pub num_requests: usize,
    /// Depot / crossdock location; optional when an explicit travel-time
    /// matrix is supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depot: Option<Point>,
    pub pickups: Vec<PickupSite>,
    pub deliveries: Vec<DeliverySite>,
    pub vehicles: Vec<Vehicle>,
    /// Operating window of the depot: vehicles may not start before
    /// `depot_window[0]` and must be back by `depot_window[1]`.
    pub depot_window: [f64; 2],
    pub crossdock: CrossdockParams,
    /// Maximum time any request may spend between its pickup service start
    /// and its delivery service start.
    pub max_ride_time: f64,
    /// Explicit travel times, `(2n+1) x (2n+1)`, indexed
    /// `[depot, pickups 1..n, deliveries n+1..2n]`. Overrides coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_time_matrix: Option<Vec<Vec<f64>>>,
    /// Explicit arc costs with the same shape as `travel_time_matrix`.
    /// Defaults to travel times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_matrix: Option<Vec<Vec<f64>>>,
}

/// Vertex numbering shared by the whole crate.
///
/// For an instance with `n` requests the directed graph has `2n + 4`
/// vertices:
///
/// | id            | meaning                       |
/// |---------------|-------------------------------|
/// | `0`           | depot start (pickup routes)   |
/// | `1..=n`       | pickups                       |
/// | `n+1..=2n`    | deliveries                    |
/// | `2n+1`        | crossdock arrival             |
/// | `2n+2`        | crossdock departure           |
/// | `2n+3`        | depot end (delivery routes)   |
///
/// The four depot copies share the physical depot location (row/column 0 of
/// the travel matrices).
pub mod vertex {
    /// Depot start vertex.
    pub const START: usize = 0;

    /// Crossdock arrival vertex (end of pickup routes).
    pub fn crossdock_in(n: usize) -> usize {
        2 * n + 1
    }

    /// Crossdock departure vertex (start of delivery routes).
    pub fn crossdock_out(n: usize) -> usize {
        2 * n + 2
    }

    /// Depot end vertex (end of delivery routes).
    pub fn end(n: usize) -> usize {
        2 * n + 3
    }

    /// Total number of vertices.
    pub fn count(n: usize) -> usize {
        2 * n + 4
    }

    pub fn is_pickup(v: usize, n: usize) -> bool {
        (1..=n).contains(&v)
    }

    pub fn is_delivery(v: usize, n: usize) -> bool {
        (n + 1..=2 * n).contains(&v)
    }

    pub fn is_depot_copy(v: usize, n: usize) -> bool {
        v == START || v > 2 * n
    }

    /// Row/column of `v` in the travel and cost matrices.
    pub fn location(v: usize, n: usize) -> usize {
        if is_depot_copy(v, n) {
            0
        } else {
            v
        }
    }

    /// Delivery vertex paired with pickup `p`.
    pub fn delivery_of(p: usize, n: usize) -> usize {
        p + n
    }

    /// Pickup vertex paired with delivery `d`.
    pub fn pickup_of(d: usize, n: usize) -> usize {
        d - n
    }
}

/// Hard failures while reading or writing instance files.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed instance {path}: {message}")]
    Shape { path: String, message: String },
}

/// Result of [`validate_instance`]: hard errors plus advisory warnings.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

impl Instance {
    pub fn num_requests(&self) -> usize {
        self.num_requests
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    /// Number of rows/columns of the travel and cost matrices.
    pub fn num_locations(&self) -> usize {
        2 * self.num_requests + 1
    }

    /// Demand of request `i` (1-based).
    pub fn demand(&self, request: usize) -> f64 {
        self.pickups[request - 1].demand
    }

    /// Demand moved through vertex `v`: the request's demand at its pickup
    /// and delivery, zero at depot copies.
    pub fn vertex_demand(&self, v: usize) -> f64 {
        let n = self.num_requests;
        if vertex::is_pickup(v, n) {
            self.demand(v)
        } else if vertex::is_delivery(v, n) {
            self.demand(vertex::pickup_of(v, n))
        } else {
            0.0
        }
    }

    /// Service window of vertex `v`; depot copies use the depot window.
    pub fn vertex_window(&self, v: usize) -> [f64; 2] {
        let n = self.num_requests;
        if vertex::is_pickup(v, n) {
            self.pickups[v - 1].tw
        } else if vertex::is_delivery(v, n) {
            self.deliveries[v - n - 1].tw
        } else {
            self.depot_window
        }
    }

    fn coordinates(&self, location: usize) -> Option<Point> {
        if location == 0 {
            self.depot
        } else if location <= self.num_requests {
            let s = &self.pickups[location - 1];
            Some(Point {
                x: s.x?,
                y: s.y?,
            })
        } else {
            let s = &self.deliveries[location - self.num_requests - 1];
            Some(Point {
                x: s.x?,
                y: s.y?,
            })
        }
    }

    pub(crate) fn has_full_coordinates(&self) -> bool {
        (0..self.num_locations()).all(|l| self.coordinates(l).is_some())
    }

    /// Travel time between two matrix locations (`0` = depot).
    pub fn travel_time(&self, from: usize, to: usize) -> f64 {
        if let Some(m) = &self.travel_time_matrix {
            m[from][to]
        } else {
            let a = self.coordinates(from).expect("site without coordinates");
            let b = self.coordinates(to).expect("site without coordinates");
            ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
        }
    }

    /// Arc traversal cost between two matrix locations.
    pub fn cost(&self, from: usize, to: usize) -> f64 {
        match &self.cost_matrix {
            Some(m) => m[from][to],
            None => self.travel_time(from, to),
        }
    }

    /// Travel time between two vertices of the routing graph.
    pub fn vertex_travel_time(&self, from: usize, to: usize) -> f64 {
        let n = self.num_requests;
        self.travel_time(vertex::location(from, n), vertex::location(to, n))
    }

    /// Arc cost between two vertices of the routing graph.
    pub fn vertex_cost(&self, from: usize, to: usize) -> f64 {
        let n = self.num_requests;
        self.cost(vertex::location(from, n), vertex::location(to, n))
    }

    /// Sum of all request demands.
    pub fn total_demand(&self) -> f64 {
        self.pickups.iter().map(|p| p.demand).sum()
    }
}

/// Reads and shape-checks an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: display.clone(),
        source,
    })?;
    let instance: Instance =
        serde_json::from_str(&text).map_err(|source| InstanceError::Parse {
            path: display.clone(),
            source,
        })?;
    shape_check(&instance).map_err(|message| InstanceError::Shape {
        path: display,
        message,
    })?;
    Ok(instance)
}

/// Writes an instance as pretty-printed JSON. Byte output is deterministic
/// for equal instances.
pub fn store_instance(path: impl AsRef<Path>, instance: &Instance) -> Result<(), InstanceError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut text = serde_json::to_string_pretty(instance).map_err(|source| {
        InstanceError::Parse {
            path: display.clone(),
            source,
        }
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| InstanceError::Io {
        path: display,
        source,
    })
}

/// Dimension and arity checks that make an instance structurally unusable
/// when they fail (as opposed to the semantic checks of
/// [`validate_instance`]).
fn shape_check(instance: &Instance) -> Result<(), String> {
    let n = instance.num_requests;
    if instance.pickups.len() != n {
        return Err(format!(
            "expected {n} pickups (num_requests), found {}",
            instance.pickups.len()
        ));
    }
    if instance.deliveries.len() != n {
        return Err(format!(
            "expected {n} deliveries (num_requests), found {}",
            instance.deliveries.len()
        ));
    }
    let side = instance.num_locations();
    for (label, matrix) in [
        ("travel_time_matrix", &instance.travel_time_matrix),
        ("cost_matrix", &instance.cost_matrix),
    ] {
        if let Some(m) = matrix {
            if m.len() != side || m.iter().any(|row| row.len() != side) {
                return Err(format!("{label} must be {side}x{side}"));
            }
        }
    }
    Ok(())
}

/// Semantic validation. Returns all findings rather than stopping at the
/// first; the instance is usable iff there are no errors.
pub fn validate_instance(instance: &Instance) -> Diagnostics {
    let mut d = Diagnostics::default();
    let n = instance.num_requests;

    if let Err(message) = shape_check(instance) {
        // Misshapen instances cannot be inspected further.
        d.errors.push(message);
        return d;
    }
    if n == 0 {
        d.errors.push("instance has no requests".into());
    }
    if instance.vehicles.is_empty() {
        d.errors.push("instance has no vehicles".into());
    }

    for (idx, p) in instance.pickups.iter().enumerate() {
        let want = idx + 1;
        if p.id != want {
            d.errors
                .push(format!("pickup at position {idx} has id {} (expected {want})", p.id));
        }
        if !(p.demand.is_finite() && p.demand >= 0.0) {
            d.errors
                .push(format!("pickup {} has negative or non-finite demand {}", p.id, p.demand));
        }
        check_window(&mut d, &format!("pickup {}", p.id), p.tw);
    }
    for (idx, s) in instance.deliveries.iter().enumerate() {
        let want = n + idx + 1;
        if s.id != want {
            d.errors
                .push(format!("delivery at position {idx} has id {} (expected {want})", s.id));
        }
        check_window(&mut d, &format!("delivery {}", s.id), s.tw);
    }
    check_window(&mut d, "depot", instance.depot_window);

    for (k, v) in instance.vehicles.iter().enumerate() {
        if !(v.capacity.is_finite() && v.capacity >= 0.0) {
            d.errors.push(format!("vehicle {k} has invalid capacity {}", v.capacity));
        }
        if !(v.max_route_duration.is_finite() && v.max_route_duration >= 0.0) {
            d.errors.push(format!(
                "vehicle {k} has invalid max_route_duration {}",
                v.max_route_duration
            ));
        }
    }
    if !(instance.crossdock.fixed_time.is_finite() && instance.crossdock.fixed_time >= 0.0) {
        d.errors.push(format!(
            "crossdock fixed_time {} must be finite and non-negative",
            instance.crossdock.fixed_time
        ));
    }
    if !(instance.crossdock.per_unit_time.is_finite() && instance.crossdock.per_unit_time >= 0.0) {
        d.errors.push(format!(
            "crossdock per_unit_time {} must be finite and non-negative",
            instance.crossdock.per_unit_time
        ));
    }
    if !(instance.max_ride_time.is_finite() && instance.max_ride_time >= 0.0) {
        d.errors.push(format!(
            "max_ride_time {} must be finite and non-negative",
            instance.max_ride_time
        ));
    }

    let has_coords = instance.has_full_coordinates();
    if !has_coords && instance.travel_time_matrix.is_none() {
        d.errors.push(
            "no travel times: give coordinates for the depot and every site, \
             or a travel_time_matrix"
                .into(),
        );
    }
    if has_coords && instance.travel_time_matrix.is_some() {
        d.warnings
            .push("both coordinates and travel_time_matrix given; the matrix takes precedence".into());
    }
    for (label, matrix) in [
        ("travel_time_matrix", &instance.travel_time_matrix),
        ("cost_matrix", &instance.cost_matrix),
    ] {
        if let Some(m) = matrix {
            for (i, row) in m.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if !(v.is_finite() && v >= 0.0) {
                        d.errors
                            .push(format!("{label}[{i}][{j}] = {v} must be finite and non-negative"));
                    }
                }
            }
        }
    }

    // Everything below needs usable numbers.
    if !d.errors.is_empty() {
        return d;
    }

    if n < instance.num_vehicles() {
        d.warnings.push(format!(
            "more vehicles ({}) than requests ({n}): every vehicle must serve at least one \
             pickup and one delivery, so the model will be infeasible",
            instance.num_vehicles()
        ));
    }
    let total_capacity: f64 = instance.vehicles.iter().map(|v| v.capacity).sum();
    if instance.total_demand() > total_capacity {
        d.warnings.push(format!(
            "total demand {} exceeds total fleet capacity {total_capacity}",
            instance.total_demand()
        ));
    }
    let [depot_e, depot_l] = instance.depot_window;
    for v in 1..=2 * n {
        let [e, l] = instance.vertex_window(v);
        if e < depot_e || l > depot_l {
            d.warnings.push(format!(
                "window [{e}, {l}] of vertex {v} extends beyond the depot window \
                 [{depot_e}, {depot_l}]; only the overlap is reachable"
            ));
        }
    }
    if instance.travel_time_matrix.is_some() {
        if let Some((i, j, k)) = triangle_violation(instance) {
            d.warnings.push(format!(
                "travel_time_matrix violates the triangle inequality at ({i}, {j}, {k}); \
                 preprocessing assumes detours are never faster"
            ));
        }
    }
    d
}

fn check_window(d: &mut Diagnostics, what: &str, [e, l]: [f64; 2]) {
    if !(e.is_finite() && l.is_finite() && 0.0 <= e && e <= l) {
        d.errors
            .push(format!("{what} has invalid time window [{e}, {l}]"));
    }
}

/// First location triple with `t[i][k] > t[i][j] + t[j][k]` (beyond rounding),
/// if any.
fn triangle_violation(instance: &Instance) -> Option<(usize, usize, usize)> {
    let side = instance.num_locations();
    let tol = 1e-9;
    for i in 0..side {
        for j in 0..side {
            for k in 0..side {
                if instance.travel_time(i, k) > instance.travel_time(i, j) + instance.travel_time(j, k) + tol {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_instance() -> Instance {
        // Depot at the origin, pickups east, deliveries north.
        Instance {
            name: "square".into(),
            num_requests: 2,
            depot: Some(Point { x: 0.0, y: 0.0 }),
            pickups: vec![
                PickupSite { id: 1, x: Some(3.0), y: Some(0.0), demand: 2.0, tw: [0.0, 100.0] },
                PickupSite { id: 2, x: Some(4.0), y: Some(0.0), demand: 1.0, tw: [0.0, 100.0] },
            ],
            deliveries: vec![
                DeliverySite { id: 3, x: Some(0.0), y: Some(3.0), tw: [0.0, 200.0] },
                DeliverySite { id: 4, x: Some(0.0), y: Some(4.0), tw: [0.0, 200.0] },
            ],
            vehicles: vec![
                Vehicle { capacity: 10.0, max_route_duration: 500.0 },
                Vehicle { capacity: 10.0, max_route_duration: 500.0 },
            ],
            depot_window: [0.0, 1000.0],
            crossdock: CrossdockParams { fixed_time: 5.0, per_unit_time: 1.0 },
            max_ride_time: 400.0,
            travel_time_matrix: None,
            cost_matrix: None,
        }
    }

    #[test]
    fn euclidean_travel_times_are_full_precision() {
        let inst = square_instance();
        assert_eq!(inst.travel_time(0, 1), 3.0);
        assert_eq!(inst.travel_time(1, 3), (9.0f64 + 9.0).sqrt());
        // Costs default to travel times.
        assert_eq!(inst.cost(1, 3), inst.travel_time(1, 3));
    }

    #[test]
    fn vertex_numbering_round_trips() {
        let n = 5;
        assert_eq!(vertex::crossdock_in(n), 11);
        assert_eq!(vertex::crossdock_out(n), 12);
        assert_eq!(vertex::end(n), 13);
        for p in 1..=n {
            assert!(vertex::is_pickup(p, n));
            let d = vertex::delivery_of(p, n);
            assert!(vertex::is_delivery(d, n));
            assert_eq!(vertex::pickup_of(d, n), p);
        }
        for v in [0, 11, 12, 13] {
            assert_eq!(vertex::location(v, n), 0);
        }
        assert_eq!(vertex::location(7, n), 7);
    }

    #[test]
    fn valid_instance_has_no_findings() {
        let d = validate_instance(&square_instance());
        assert!(d.is_valid(), "{d}");
        assert!(d.warnings.is_empty(), "{d}");
    }

    #[test]
    fn negative_demand_is_an_error() {
        let mut inst = square_instance();
        inst.pickups[0].demand = -1.0;
        let d = validate_instance(&inst);
        assert!(!d.is_valid());
        assert!(d.errors.iter().any(|e| e.contains("demand")), "{d}");
    }

    #[test]
    fn inverted_window_is_an_error() {
        let mut inst = square_instance();
        inst.deliveries[1].tw = [50.0, 20.0];
        assert!(!validate_instance(&inst).is_valid());
    }

    #[test]
    fn more_vehicles_than_requests_is_a_warning() {
        let mut inst = square_instance();
        inst.vehicles.push(Vehicle { capacity: 10.0, max_route_duration: 500.0 });
        let d = validate_instance(&inst);
        assert!(d.is_valid());
        assert!(d.warnings.iter().any(|w| w.contains("more vehicles")), "{d}");
    }

    #[test]
    fn overloaded_fleet_is_a_warning() {
        let mut inst = square_instance();
        inst.pickups[0].demand = 50.0;
        let d = validate_instance(&inst);
        assert!(d.is_valid());
        assert!(d.warnings.iter().any(|w| w.contains("capacity")), "{d}");
    }

    #[test]
    fn json_round_trip_preserves_instance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("square.json");
        let inst = square_instance();
        store_instance(&path, &inst).unwrap();
        let loaded = load_instance(&path).unwrap();
        assert_eq!(loaded, inst);
        // Deterministic bytes for equal instances.
        let again = dir.path().join("square2.json");
        store_instance(&again, &loaded).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<Instance>(
            r#"{"name": "x", "num_requests": 0, "pickups": [], "deliveries": [],
                "vehicles": [], "depot_window": [0, 1],
                "crossdock": {"fixed_time": 0, "per_unit_time": 0},
                "max_ride_time": 10, "surprise": 1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("surprise"));
    }

    #[test]
    fn wrong_matrix_shape_is_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let mut inst = square_instance();
        inst.travel_time_matrix = Some(vec![vec![0.0; 3]; 3]); // needs 5x5
        let text = serde_json::to_string(&inst).unwrap();
        std::fs::write(&path, text).unwrap();
        let err = load_instance(&path).unwrap_err();
        assert!(matches!(err, InstanceError::Shape { .. }), "{err}");
    }

    #[test]
    fn missing_travel_information_is_an_error() {
        let mut inst = square_instance();
        inst.pickups[1].x = None;
        let d = validate_instance(&inst);
        assert!(!d.is_valid());
        assert!(d.errors.iter().any(|e| e.contains("travel")), "{d}");
    }

    #[test]
    fn matrix_takes_precedence_over_coordinates() {
        let mut inst = square_instance();
        let side = inst.num_locations();
        inst.travel_time_matrix = Some(vec![vec![7.0; side]; side]);
        assert_eq!(inst.travel_time(0, 1), 7.0);
        let d = validate_instance(&inst);
        assert!(d.warnings.iter().any(|w| w.contains("precedence")), "{d}");
    }
}
