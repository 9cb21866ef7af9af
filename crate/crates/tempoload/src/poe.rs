//! Price-of-estimation machinery: the halving time-point series, its closed
//! form and count bounds, the single-machine worst-case instance, and the
//! empirical inflation ratio of arbitrary assigned instances.

use crate::error::{Error, Result};
use crate::model::{objective, scale_durations, Assignment, Instance, JobDraft};
use crate::norm::Norm;

/// The series `t_1 = 0`, `t_{j+1} = t_j + (D − t_j)/μ`, stopped at the first
/// gap below one slot.
#[derive(Debug, Clone)]
pub struct TimePointSeries {
    pub d: f64,
    pub mu: f64,
    /// `t_1 ..= t_{j*+1}`.
    pub points: Vec<f64>,
    pub j_star: usize,
}

impl TimePointSeries {
    /// Gap `t_{j+1} − t_j` covered by job `j` (1-based, `j ≤ j*`).
    pub fn gap(&self, j: usize) -> f64 {
        self.points[j] - self.points[j - 1]
    }
}

/// Iterative time-point determination.
pub fn time_points(d: f64, mu: f64) -> Result<TimePointSeries> {
    if d < 1.0 || !d.is_finite() {
        return Err(Error::InvalidParameter(format!("D must be ≥ 1, got {d}")));
    }
    if mu < 1.0 || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be ≥ 1, got {mu}")));
    }
    let mut points = vec![0.0, d / mu];
    let mut j = 2usize;
    while points[j - 1] - points[j - 2] >= 1.0 {
        let t_j = points[j - 1];
        points.push(t_j + (d - t_j) / mu);
        j += 1;
    }
    Ok(TimePointSeries {
        d,
        mu,
        points,
        j_star: j - 1,
    })
}

/// Closed form `t_j = D·(1 − (1 − 1/μ)^(j−1))` for `j ≥ 1`.
pub fn closed_form_point(d: f64, mu: f64, j: usize) -> f64 {
    d * (1.0 - (1.0 - 1.0 / mu).powi(j as i32 - 1))
}

/// Bracketing real bounds on `j*` from `(D/μ) ≤ (1+1/(μ−1))^(j*−1)` and
/// `(D/μ) ≥ (1+1/(μ−1))^(j*−2)`.
pub fn j_star_bounds(d: f64, mu: f64) -> Result<(f64, f64)> {
    if mu < 2.0 || mu.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "count bounds need mu ≥ 2, got {mu}"
        )));
    }
    if d < mu || d.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "count bounds need D ≥ mu, got D = {d}, mu = {mu}"
        )));
    }
    let base = 1.0 + 1.0 / (mu - 1.0);
    let log_ratio = (d / mu).ln() / base.ln();
    Ok((1.0 + log_ratio, 2.0 + log_ratio))
}

/// Single-machine instance whose load is 1 at every slot, yet inflating all
/// durations by `μ` stacks all `j*` jobs near the horizon.
///
/// Real arrival `t_j` maps to slot `⌈t_j⌉`; durations span consecutive
/// mapped arrivals and are clamped to at least one slot.
pub fn poe_lower_instance(d: f64, mu: f64) -> Result<Instance> {
    let series = time_points(d, mu)?;
    let ceil_points: Vec<u64> = series.points.iter().map(|t| t.ceil() as u64).collect();
    let mut drafts = Vec::with_capacity(series.j_star);
    for j in 0..series.j_star {
        let arrival = ceil_points[j];
        let duration = ceil_points[j + 1].saturating_sub(arrival).max(1);
        drafts.push(JobDraft {
            arrival,
            duration,
            predicted: duration as f64,
            loads: vec![1.0],
        });
    }
    Instance::from_drafts(1, drafts)
}

/// `max_t ||ℓ(I(μ),A,t)|| / max_t ||ℓ(I,A,t)||`.
pub fn evaluate_poe(inst: &Instance, assignment: &Assignment, mu: f64, norm: Norm) -> Result<f64> {
    let base = objective(inst, assignment, norm)?;
    if base == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    let inflated = objective(&scale_durations(inst, mu)?, assignment, norm)?;
    Ok(inflated / base)
}

/// Restriction of an instance to the jobs one machine received; used for the
/// single-machine decomposition of the inflation ratio.
pub fn restrict_to_machine(inst: &Instance, assignment: &Assignment, machine: usize) -> Instance {
    let drafts = inst
        .jobs
        .iter()
        .filter(|j| assignment[j.id] == machine)
        .map(|j| JobDraft {
            arrival: j.arrival,
            duration: j.duration,
            predicted: j.predicted,
            loads: vec![j.loads[machine]],
        })
        .collect();
    Instance::from_drafts(1, drafts).expect("restriction of a valid instance stays valid")
}
