//! Solution artifact: per-vehicle routes, schedules, and transfer flags.
//!
//! A [`Solution`] is the solver-independent answer format. It stores the
//! visit order of every vehicle on both sides of the crossdock, the service
//! start times, the crossdock handling times, and the per-request ride
//! times. The validator checks this artifact directly against instance data,
//! so it carries everything needed to re-derive feasibility and cost.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One vehicle's routes and schedule.
///
/// `pickup_route` lists pickup vertices (`1..=n`) in visit order, without
/// the depot endpoints; `delivery_route` lists delivery vertices
/// (`n+1..=2n`). The four route times are the service start times at the
/// route endpoints: departure from the start depot, arrival at the
/// crossdock inbound door, departure from the crossdock outbound door, and
/// arrival back at the depot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSolution {
    pub pickup_route: Vec<usize>,
    pub delivery_route: Vec<usize>,
    pub start_time: f64,
    pub crossdock_arrival: f64,
    pub crossdock_departure: f64,
    pub end_time: f64,
    /// Time unloading finishes at the crossdock.
    pub unload_complete: f64,
    /// Time reloading starts at the crossdock.
    pub reload_start: f64,
    /// `unloads[i-1]`: this vehicle unloads request `i` at the crossdock.
    pub unloads: Vec<bool>,
    /// `reloads[i-1]`: this vehicle reloads request `i` at the crossdock.
    pub reloads: Vec<bool>,
    /// Whether the vehicle unloads anything (drives the fixed handling time).
    pub any_unload: bool,
    /// Whether the vehicle reloads anything.
    pub any_reload: bool,
}

/// A complete solution for an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub vehicles: Vec<VehicleSolution>,
    /// Service start time of vertex `v` (request vertices only), at `v - 1`.
    pub serve_times: Vec<f64>,
    /// `transfer_ready[i-1]`: time request `i` is available for reloading.
    pub transfer_ready: Vec<f64>,
    /// `ride_times[i-1]`: on-board time of request `i` as reported by the
    /// producer; the validator recomputes this from `serve_times`.
    pub ride_times: Vec<f64>,
    pub total_cost: f64,
}

impl Solution {
    pub fn num_requests(&self) -> usize {
        self.ride_times.len()
    }

    /// Serve time of request vertex `v in 1..=2n`, if present.
    pub fn serve_time(&self, v: usize) -> Option<f64> {
        if v >= 1 && v <= self.serve_times.len() {
            Some(self.serve_times[v - 1])
        } else {
            None
        }
    }
}

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a valid solution file: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Reads a solution from a JSON file.
pub fn load_solution(path: &Path) -> Result<Solution, SolutionError> {
    let text = std::fs::read_to_string(path).map_err(|source| SolutionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| SolutionError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a solution as pretty-printed JSON with a trailing newline.
pub fn store_solution(solution: &Solution, path: &Path) -> Result<(), SolutionError> {
    let mut text = serde_json::to_string_pretty(solution).expect("solution serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| SolutionError::Io {
        path: path.display().to_string(),
        source,
    })
}
