//! Online assignment policies and the simulation driver that feeds them.
//!
//! Policies see arrivals without true durations; the driver reveals a job's
//! duration only through the departure callback, which enforces the online
//! information model. Policies that never read departures report
//! `estimation_only() == true`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, LoadLedger};
use crate::norm::Norm;

mod greedy;
mod linf;
pub(crate) mod potential;
mod wrappers;

pub use greedy::GreedyPolicy;
pub use linf::LinfPolicy;
pub use wrappers::{BlockingWrapper, DoublingWrapper, LambdaDoublingWrapper};

/// Parameters shared by the potential-based policies.
#[derive(Debug, Clone)]
pub struct AlgParams {
    /// Reporting norm for traces and objectives.
    pub norm: Norm,
    /// Decision exponent, clamped to `[1, log2 m]`.
    pub p: f64,
    /// Underestimation hint `μ1 ≥ 1`; prediction windows span `⌊μ1·d̃⌋` slots.
    pub mu1: f64,
    /// Estimate ceiling hint `D̃ ≥ 1`.
    pub d_tilde: f64,
    /// Distortion hint `μ ≥ 1`; only the exponential rule uses it.
    pub mu: f64,
    /// Normalizer `Λ` for the exponential rule; 0 means "not set".
    pub lambda: f64,
}

impl AlgParams {
    pub fn new(norm: Norm, machines: usize) -> Self {
        AlgParams {
            norm,
            p: norm.effective_p(machines),
            mu1: 1.0,
            d_tilde: 1.0,
            mu: 1.0,
            lambda: 0.0,
        }
    }

    /// Hints taken from the instance itself, as if the true parameters were
    /// announced in advance.
    pub fn for_instance(norm: Norm, inst: &Instance) -> Self {
        let d = inst.distortion();
        let mut params = AlgParams::new(norm, inst.machines);
        params.mu1 = d.mu1;
        params.d_tilde = d.d_tilde_max.max(1.0);
        params.mu = d.mu;
        params
    }

    /// Padded horizon `T̃ = 2·μ1·D̃`.
    pub fn t_tilde(&self) -> f64 {
        2.0 * self.mu1 * self.d_tilde
    }

    /// Outer exponent `w = (p + log2 T̃)/p` of the power-sum potential.
    pub fn w(&self) -> f64 {
        (self.p + self.t_tilde().log2()) / self.p
    }

    /// Base `a = 1 + 1/(2μ)` of the exponential rule.
    pub fn growth(&self) -> f64 {
        1.0 + 1.0 / (2.0 * self.mu)
    }
}

/// Arrival-time view of a job: everything except the true duration.
#[derive(Debug, Clone, Copy)]
pub struct ArrivingJob<'a> {
    pub id: usize,
    pub arrival: u64,
    pub predicted: f64,
    pub loads: &'a [f64],
}

impl ArrivingJob<'_> {
    /// Slots covered by the prediction window for factor `mu1`.
    pub fn pseudo_slots(&self, mu1: f64) -> (u64, u64) {
        let span = crate::model::floored_span(mu1, self.predicted);
        (self.arrival + 1, self.arrival + span)
    }

    pub fn min_finite_load(&self) -> Option<f64> {
        self.loads
            .iter()
            .filter(|l| l.is_finite())
            .cloned()
            .reduce(f64::min)
    }
}

/// An online assignment rule.
pub trait OnlinePolicy {
    /// Pick a machine for the arriving job.
    fn on_arrival(&mut self, job: &ArrivingJob<'_>) -> Result<usize>;

    /// A job assigned earlier leaves at the end of `slot`.
    fn on_departure(&mut self, _job_id: usize, _slot: u64) {}

    /// True when decisions never depend on departure notifications.
    fn estimation_only(&self) -> bool;

    /// Wrapper policies report which internal copy handled each job,
    /// as `(job id, copy index)` pairs in arrival order.
    fn copy_log(&self) -> Option<Vec<(usize, usize)>> {
        None
    }
}

/// Shared constructor closure so wrappers can spawn fresh copies.
pub type PolicyFactory = Rc<dyn Fn(&AlgParams) -> Box<dyn OnlinePolicy>>;

/// Cycles through machines, taking the next feasible one. A deliberately
/// weak baseline for adversary runs.
pub struct RoundRobinPolicy {
    machines: usize,
    last: usize,
}

impl RoundRobinPolicy {
    pub fn new(machines: usize) -> Self {
        RoundRobinPolicy {
            machines,
            last: machines.saturating_sub(1),
        }
    }
}

impl OnlinePolicy for RoundRobinPolicy {
    fn on_arrival(&mut self, job: &ArrivingJob<'_>) -> Result<usize> {
        for step in 1..=self.machines {
            let cand = (self.last + step) % self.machines;
            if job.loads[cand].is_finite() {
                self.last = cand;
                return Ok(cand);
            }
        }
        Err(Error::NoFeasibleMachine(job.id))
    }

    fn estimation_only(&self) -> bool {
        true
    }
}

/// Policy selection by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyName {
    GreedyLp,
    LinfExp,
    Naive,
    RoundRobin,
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy-lp" => Ok(PolicyName::GreedyLp),
            "linf-exp" => Ok(PolicyName::LinfExp),
            "naive" => Ok(PolicyName::Naive),
            "round-robin" => Ok(PolicyName::RoundRobin),
            other => Err(Error::InvalidParameter(format!("unknown policy {other:?}"))),
        }
    }
}

impl std::fmt::Display for PolicyName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PolicyName::GreedyLp => "greedy-lp",
            PolicyName::LinfExp => "linf-exp",
            PolicyName::Naive => "naive",
            PolicyName::RoundRobin => "round-robin",
        };
        f.write_str(s)
    }
}

/// A base policy plus optional wrapper layers.
#[derive(Debug, Clone, Copy)]
pub struct PolicySpec {
    pub name: PolicyName,
    pub doubling: bool,
    pub blocking: bool,
    pub lambda_doubling: bool,
}

impl PolicySpec {
    pub fn plain(name: PolicyName) -> Self {
        PolicySpec {
            name,
            doubling: false,
            blocking: false,
            lambda_doubling: false,
        }
    }
}

/// Assemble the wrapper chain `doubling(blocking(lambda(base)))`, skipping
/// layers that are switched off.
pub fn build_policy(
    spec: &PolicySpec,
    machines: usize,
    params: &AlgParams,
) -> Result<Box<dyn OnlinePolicy>> {
    if spec.name == PolicyName::LinfExp && !spec.lambda_doubling && params.lambda <= 0.0 {
        return Err(Error::InvalidParameter(
            "linf-exp needs a positive lambda unless lambda doubling is enabled".into(),
        ));
    }
    let name = spec.name;
    let mut factory: PolicyFactory = Rc::new(move |p: &AlgParams| -> Box<dyn OnlinePolicy> {
        match name {
            PolicyName::GreedyLp => Box::new(GreedyPolicy::new(machines, p.clone())),
            PolicyName::Naive => Box::new(GreedyPolicy::naive(machines, p.clone())),
            PolicyName::LinfExp => Box::new(LinfPolicy::new(machines, p.clone())),
            PolicyName::RoundRobin => Box::new(RoundRobinPolicy::new(machines)),
        }
    });
    let mut estimation_only = true;
    if spec.lambda_doubling {
        let inner = factory.clone();
        factory = Rc::new(move |p: &AlgParams| {
            Box::new(LambdaDoublingWrapper::new(
                machines,
                p.clone(),
                inner.clone(),
            ))
        });
        estimation_only = false;
    }
    if spec.blocking {
        let inner = factory.clone();
        let inner_est = estimation_only;
        factory = Rc::new(move |p: &AlgParams| {
            Box::new(BlockingWrapper::new(p.clone(), inner.clone(), inner_est))
        });
    }
    if spec.doubling {
        let inner = factory.clone();
        factory =
            Rc::new(move |p: &AlgParams| Box::new(DoublingWrapper::new(p.clone(), inner.clone())));
    }
    Ok(factory(params))
}

/// One row of the per-event load trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub slot: u64,
    pub norm_value: f64,
    pub inf_value: f64,
    pub loads: Vec<f64>,
}

/// Outcome of an online run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub assignment: Assignment,
    pub trace: Vec<TraceRow>,
    /// `max_t ||ℓ(t)||` in the requested norm.
    pub objective: f64,
}

/// Feed an instance to a policy in arrival order, revealing departures at
/// their true times, and record the realized load trace.
pub fn run_online(policy: &mut dyn OnlinePolicy, inst: &Instance, norm: Norm) -> Result<RunResult> {
    let mut assignment = vec![usize::MAX; inst.jobs.len()];
    let mut real = LoadLedger::new(inst.machines);
    let mut departures: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();

    for job in &inst.jobs {
        while let Some(&Reverse((dep, id))) = departures.peek() {
            if dep > job.arrival {
                break;
            }
            departures.pop();
            policy.on_departure(id, dep);
        }
        let view = ArrivingJob {
            id: job.id,
            arrival: job.arrival,
            predicted: job.predicted,
            loads: &job.loads,
        };
        let machine = policy.on_arrival(&view)?;
        if machine >= inst.machines || !job.is_feasible_on(machine) {
            return Err(Error::InfeasibleAssignment {
                job: job.id,
                machine,
            });
        }
        assignment[job.id] = machine;
        let (lo, hi) = job.live_slots();
        real.add(machine, lo, hi, job.loads[machine]);
        departures.push(Reverse((job.departs_at(), job.id)));
    }
    while let Some(Reverse((dep, id))) = departures.pop() {
        policy.on_departure(id, dep);
    }

    let mut trace = Vec::new();
    let mut objective = 0.0_f64;
    if !inst.jobs.is_empty() {
        for (start, _) in real.segments_in(1, inst.horizon()) {
            let loads = real.vector_at(start);
            let norm_value = norm.evaluate(&loads)?;
            let inf_value = Norm::Inf.evaluate(&loads)?;
            objective = objective.max(norm_value);
            trace.push(TraceRow {
                slot: start,
                norm_value,
                inf_value,
                loads,
            });
        }
    }
    Ok(RunResult {
        assignment,
        trace,
        objective,
    })
}
