//! Mixed-integer model of the crossdock pickup-and-delivery problem.
//!
//! [`build_milp`] turns an instance and its reduced arc set into a sparse
//! minimization model: binary routing variables per vehicle and arc, binary
//! transfer flags, and continuous schedule variables linked by finite big-M
//! rows. Every row carries a [`RowTag`] naming its constraint family, which
//! keeps solver output and the LP export auditable.
//!
//! [`add_valid_inequalities`] appends the static cut families (serve-time
//! tightening, 2-cycle elimination, ride-time lower bounds, conflict-pair
//! cuts). Cuts never change the optimal objective, only the search effort.

mod build;
mod export;
mod extract;

pub use build::{add_valid_inequalities, build_milp, compute_big_m, BigMTable, ModelError};
pub use export::write_lp;
pub use extract::{extract_solution, ExtractError};

use std::fmt;

use crate::arcs::ArcSet;
use crate::instance::Instance;
use crate::lp::LpProblem;

/// Variable integrality class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

/// Constraint-family tag carried by every row.
///
/// The `eqN` tags are the internal family numbering used across the solver,
/// validator, and logs; `vi-*` tags mark the optional strengthening rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// Each request vertex is left exactly once (single visit).
    Eq2,
    /// Pickup-side vehicle load within capacity.
    Eq3,
    /// Delivery-side vehicle load within capacity.
    Eq4,
    /// Each route starts at its side's start depot copy.
    Eq5,
    /// Each route ends at its side's end depot copy.
    Eq6,
    /// Flow conservation at request vertices.
    Eq7,
    /// Service-time propagation along used arcs.
    Eq8,
    /// Unload/reload flags match the pickup/delivery assignment.
    Eq10,
    /// A vehicle never both unloads and reloads the same request.
    Eq11,
    /// Vehicle-level unload indicator tracks the per-request flags.
    Eq12,
    /// Vehicle-level reload indicator tracks the per-request flags.
    Eq13,
    /// Unload completion time at the crossdock.
    Eq14,
    /// Reloading starts after own unloading completes.
    Eq15,
    /// Crossdock departure after reloading.
    Eq16,
    /// Reloading a request waits for its transfer-ready time.
    Eq17,
    /// A request is transfer-ready only after its carrier unloads.
    Eq18,
    /// Pickup route duration cap.
    Eq19,
    /// Delivery route duration cap.
    Eq20,
    /// Slack-variable linking of per-vehicle and per-vertex serve times.
    Eq23,
    /// Ride time as delivery serve time minus pickup serve time.
    Eq24,
    /// Serve-time window tightening cut.
    ViServeTime,
    /// Conflict-pair cut from preprocessing.
    ViConflict,
    /// Two-cycle elimination cut.
    ViSubtour,
    /// Ride-time lower-bound cut.
    ViRideTimeLb,
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RowTag::Eq2 => "eq2",
            RowTag::Eq3 => "eq3",
            RowTag::Eq4 => "eq4",
            RowTag::Eq5 => "eq5",
            RowTag::Eq6 => "eq6",
            RowTag::Eq7 => "eq7",
            RowTag::Eq8 => "eq8",
            RowTag::Eq10 => "eq10",
            RowTag::Eq11 => "eq11",
            RowTag::Eq12 => "eq12",
            RowTag::Eq13 => "eq13",
            RowTag::Eq14 => "eq14",
            RowTag::Eq15 => "eq15",
            RowTag::Eq16 => "eq16",
            RowTag::Eq17 => "eq17",
            RowTag::Eq18 => "eq18",
            RowTag::Eq19 => "eq19",
            RowTag::Eq20 => "eq20",
            RowTag::Eq23 => "eq23",
            RowTag::Eq24 => "eq24",
            RowTag::ViServeTime => "vi-servetime",
            RowTag::ViConflict => "vi-conflict",
            RowTag::ViSubtour => "vi-subtour",
            RowTag::ViRideTimeLb => "vi-ridetimeLB",
        };
        f.write_str(name)
    }
}

/// Maps every symbolic variable of the formulation to its column index.
///
/// The catalog order is fixed: routing variables `x` first (vehicle-major,
/// then arc), the binary transfer variables, then all continuous blocks.
/// The branching priority of the search relies on this order.
#[derive(Debug, Clone)]
pub struct VarIndex {
    num_requests: usize,
    num_vehicles: usize,
    num_arcs: usize,
    /// Arc index -> sigma slot for arcs whose head is a request vertex.
    sigma_slot: Vec<Option<usize>>,
    num_sigma_slots: usize,
    x0: usize,
    eta0: usize,
    theta0: usize,
    veh_unload0: usize,
    veh_reload0: usize,
    u0: usize,
    visit0: usize,
    sigma0: usize,
    ride0: usize,
    tau0: usize,
    w0: usize,
    z0: usize,
}

impl VarIndex {
    pub fn new(num_requests: usize, num_vehicles: usize, arcs: &ArcSet) -> Self {
        let n = num_requests;
        let k = num_vehicles;
        let m = arcs.len();
        let mut sigma_slot = vec![None; m];
        let mut num_sigma_slots = 0;
        for (idx, arc) in arcs.iter() {
            if arc.to >= 1 && arc.to <= 2 * n {
                sigma_slot[idx] = Some(num_sigma_slots);
                num_sigma_slots += 1;
            }
        }
        let x0 = 0;
        let eta0 = x0 + k * m;
        let theta0 = eta0 + k * n;
        let veh_unload0 = theta0 + k * n;
        let veh_reload0 = veh_unload0 + k;
        let u0 = veh_reload0 + k;
        let visit0 = u0 + k * (2 * n + 4);
        let sigma0 = visit0 + 2 * n;
        let ride0 = sigma0 + k * num_sigma_slots;
        let tau0 = ride0 + n;
        let w0 = tau0 + k;
        let z0 = w0 + k;
        Self {
            num_requests: n,
            num_vehicles: k,
            num_arcs: m,
            sigma_slot,
            num_sigma_slots,
            x0,
            eta0,
            theta0,
            veh_unload0,
            veh_reload0,
            u0,
            visit0,
            sigma0,
            ride0,
            tau0,
            w0,
            z0,
        }
    }

    pub fn total(&self) -> usize {
        self.z0 + self.num_requests
    }

    pub fn num_sigma_slots(&self) -> usize {
        self.num_sigma_slots
    }

    /// Routing variable for vehicle `k` on arc index `a`.
    pub fn x(&self, k: usize, a: usize) -> usize {
        debug_assert!(k < self.num_vehicles && a < self.num_arcs);
        self.x0 + k * self.num_arcs + a
    }

    /// Unload flag of request `i in 1..=n` for vehicle `k`.
    pub fn unload(&self, k: usize, i: usize) -> usize {
        debug_assert!(k < self.num_vehicles && i >= 1 && i <= self.num_requests);
        self.eta0 + k * self.num_requests + (i - 1)
    }

    /// Reload flag of request `i in 1..=n` for vehicle `k`.
    pub fn reload(&self, k: usize, i: usize) -> usize {
        debug_assert!(k < self.num_vehicles && i >= 1 && i <= self.num_requests);
        self.theta0 + k * self.num_requests + (i - 1)
    }

    /// Vehicle-level unload indicator.
    pub fn vehicle_unloads(&self, k: usize) -> usize {
        self.veh_unload0 + k
    }

    /// Vehicle-level reload indicator.
    pub fn vehicle_reloads(&self, k: usize) -> usize {
        self.veh_reload0 + k
    }

    /// Serve time of vertex `v` for vehicle `k` (all vertices incl. depot copies).
    pub fn serve(&self, k: usize, v: usize) -> usize {
        debug_assert!(k < self.num_vehicles && v < 2 * self.num_requests + 4);
        self.u0 + k * (2 * self.num_requests + 4) + v
    }

    /// Vehicle-independent visit time of request vertex `v in 1..=2n`.
    pub fn visit(&self, v: usize) -> usize {
        debug_assert!(v >= 1 && v <= 2 * self.num_requests);
        self.visit0 + (v - 1)
    }

    /// Linking slack for vehicle `k` on arc `a`; `None` when the arc heads
    /// into a depot copy and carries no slack.
    pub fn sigma(&self, k: usize, a: usize) -> Option<usize> {
        self.sigma_slot[a].map(|slot| self.sigma0 + k * self.num_sigma_slots + slot)
    }

    /// Ride time of request `i in 1..=n`.
    pub fn ride(&self, i: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.num_requests);
        self.ride0 + (i - 1)
    }

    /// Unload-complete time of vehicle `k`.
    pub fn unload_complete(&self, k: usize) -> usize {
        self.tau0 + k
    }

    /// Reload-start time of vehicle `k`.
    pub fn reload_start(&self, k: usize) -> usize {
        self.w0 + k
    }

    /// Transfer-ready time of request `i in 1..=n`.
    pub fn transfer_ready(&self, i: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.num_requests);
        self.z0 + (i - 1)
    }

    /// Branching priority class of a variable: routing arcs first (0), then
    /// per-request transfer flags (1), then vehicle indicators (2);
    /// continuous variables (3) are never branched on.
    pub fn branching_class(&self, var: usize) -> usize {
        if var < self.eta0 {
            0
        } else if var < self.veh_unload0 {
            1
        } else if var < self.u0 {
            2
        } else {
            3
        }
    }
}

/// The assembled model: LP data plus catalog metadata and provenance tags.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub lp: LpProblem,
    /// One name per variable, aligned with the LP columns.
    pub names: Vec<String>,
    /// One kind per variable.
    pub kinds: Vec<VarKind>,
    /// One tag per row.
    pub tags: Vec<RowTag>,
    pub index: VarIndex,
    pub big_m: BigMTable,
    pub arcs: ArcSet,
    pub num_requests: usize,
    pub num_vehicles: usize,
}

impl MilpModel {
    pub fn num_variables(&self) -> usize {
        self.lp.num_variables()
    }

    pub fn num_rows(&self) -> usize {
        self.lp.num_rows()
    }

    pub fn is_binary(&self, var: usize) -> bool {
        self.kinds[var] == VarKind::Binary
    }

    /// Indices of all binary variables, in catalog (priority) order.
    pub fn binary_variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, kind)| **kind == VarKind::Binary)
            .map(|(var, _)| var)
    }

    pub fn row_tag(&self, row: usize) -> RowTag {
        self.tags[row]
    }

    /// Number of rows carrying `tag`.
    pub fn count_rows(&self, tag: RowTag) -> usize {
        self.tags.iter().filter(|t| **t == tag).count()
    }
}

/// Vertex windows clamped to the depot window: no service can start before
/// the depot opens or after it closes, so `[max(e_v, e_dep), min(l_v, l_dep)]`
/// preserves the feasible set while keeping all time bounds on one horizon.
pub(crate) fn effective_window(instance: &Instance, v: usize) -> (f64, f64) {
    let [e, l] = instance.vertex_window(v);
    let [open, close] = instance.depot_window;
    (e.max(open), l.min(close))
}
