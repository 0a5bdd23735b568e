//! Exact solver for pickup-and-delivery with crossdock transfers.
//!
//! Every transport request is picked up on a morning-style tour, brought to a
//! single depot/crossdock, optionally handed over to another vehicle, and
//! delivered on a second tour — all under time windows, route-duration
//! limits, vehicle capacities, and a per-request ride-time cap that protects
//! perishable cargo. The crate builds a mixed-integer model of that problem
//! and solves it to proven optimality with branch-and-cut over a built-in
//! bounded-variable simplex.
//!
//! Main entry points:
//!
//! * [`instance`] — problem data, JSON I/O, semantic validation
//! * [`arcs`] — routing graph construction and preprocessing
//! * [`generate`] — seeded random instances, feasible by construction
//! * [`model`] — the mixed-integer formulation
//! * [`lp`] — the simplex engine behind the search
//! * [`bnc`] — the branch-and-cut driver
//! * [`validate`] — model-independent solution checking
//! * [`oracle`] — exhaustive reference solver for small instances
//! * [`samples`] — bundled example data

pub mod arcs;
pub mod bnc;
pub mod generate;
pub mod instance;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod samples;
pub mod solution;
pub mod validate;
