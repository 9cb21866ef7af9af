//! Online load balancing of temporary tasks under inaccurate duration
//! estimates.
//!
//! The crate simulates assignment policies that only see estimated durations,
//! measures them against an exact offline oracle, constructs adaptive
//! worst-case job sequences, quantifies how much duration inflation alone can
//! cost a fixed assignment, and carries the same machinery over to
//! virtual-circuit routing on small graphs.

pub mod adversary;
pub mod error;
pub mod generator;
pub mod model;
pub mod norm;
pub mod oracle;
pub mod poe;
pub mod policy;
pub mod routing;

pub use error::{Error, Result};
pub use model::{
    objective, scale_durations, Assignment, Distortion, Instance, Job, JobDraft, LoadLedger,
    LoadProfile, INFEASIBLE,
};
pub use norm::{lp_norm, Norm};
pub use policy::{
    build_policy, run_online, AlgParams, ArrivingJob, OnlinePolicy, PolicyName, PolicySpec,
    RunResult,
};
