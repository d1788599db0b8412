//! Time-optimal velocity profiles along fixed paths under generic,
//! speed-dependent acceleration envelopes (g-g-v diagrams).
//!
//! The planner discretizes a path into short segments and runs three passes:
//! a lateral-saturation pass capping speeds by the lateral acceleration
//! bounds, a forward pass applying the largest feasible longitudinal
//! acceleration per segment, and a backward pass repairing segments that
//! need braking. Acceleration feasibility is expressed through a signed
//! distance from the envelope boundary, so the envelope may have any shape:
//! box, analytic superellipse with wheel-lift caps, or interpolated grid.
//!
//! A brute-force dynamic-programming reference solver ([`oracle_plan`])
//! cross-validates planner output at desk scale.

pub mod envelope;
pub mod oracle;
pub mod path;
pub mod planner;
pub mod rootfind;

pub use envelope::{AccelPoint, EnvelopeError, GgvEnvelope};
pub use oracle::{oracle_plan, OracleConfig, OracleError, OracleResult};
pub use path::{load_path, random_track, synth_track, synth_track_n, write_path, Path, PathError, TrackSegment};
pub use planner::{
    plan, segment_time, time_parameterize, write_profile_csv, BoundaryConditions, Diagnostics,
    PlanError, PlanResult, SegmentRepair, TrajectorySample,
};
pub use rootfind::{solve, SolverConfig};
