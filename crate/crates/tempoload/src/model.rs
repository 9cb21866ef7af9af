//! Discrete-time model of temporary tasks on unrelated machines.
//!
//! Time is integer-slotted: a job arriving at `t` with duration `d` occupies
//! slots `t+1 ..= t+d`. Loads are positive reals; `f64::INFINITY` marks a
//! machine the job cannot run on. Load histories are kept as step functions
//! over slot indices, so horizons far beyond what could be enumerated
//! slot-by-slot stay cheap.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::Norm;

/// Sentinel load for a machine that cannot run the job.
pub const INFEASIBLE: f64 = f64::INFINITY;

/// `⌊factor·value⌋` with a one-ulp-scale nudge so products that are integers
/// in exact arithmetic (like `(d/d̃)·d̃`) do not floor one short, at least 1.
pub(crate) fn floored_span(factor: f64, value: f64) -> u64 {
    ((factor * value * (1.0 + 1e-12)).floor() as u64).max(1)
}

/// One temporary task.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// Position in arrival order; ties at the same slot keep release order.
    pub id: usize,
    /// Arrival slot index `t_j ≥ 0`.
    pub arrival: u64,
    /// True duration in slots, `d_j ≥ 1`. Revealed to policies only at departure.
    pub duration: u64,
    /// Estimated duration `d̃_j ≥ 1` (not necessarily an integer).
    pub predicted: f64,
    /// Per-machine load, `INFEASIBLE` where the job cannot run.
    pub loads: Vec<f64>,
}

impl Job {
    pub fn is_feasible_on(&self, machine: usize) -> bool {
        self.loads.get(machine).is_some_and(|l| l.is_finite())
    }

    /// Slot at whose end the job leaves the system (`t_j + d_j`).
    pub fn departs_at(&self) -> u64 {
        self.arrival + self.duration
    }

    /// First and last slot the job truly occupies.
    pub fn live_slots(&self) -> (u64, u64) {
        (self.arrival + 1, self.arrival + self.duration)
    }

    /// Slots covered by the pessimistic prediction window `⌊μ1·d̃_j⌋`.
    pub fn pseudo_slots(&self, mu1: f64) -> (u64, u64) {
        let span = floored_span(mu1, self.predicted);
        (self.arrival + 1, self.arrival + span)
    }
}

/// Job fields before arrival ordering assigns ids.
#[derive(Debug, Clone, PartialEq)]
pub struct JobDraft {
    pub arrival: u64,
    pub duration: u64,
    pub predicted: f64,
    pub loads: Vec<f64>,
}

/// A full problem input: machine count plus jobs in (arrival, id) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub machines: usize,
    pub jobs: Vec<Job>,
}

/// Minimal feasible distortion parameters of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion {
    /// Maximum underestimation factor: smallest `μ1 ≥ 1` with `d_j ≤ ⌊μ1·d̃_j⌋`.
    pub mu1: f64,
    /// Maximum overestimation factor: smallest `μ2 ≥ 1` with `⌈d̃_j/μ2⌉ ≤ d_j`.
    pub mu2: f64,
    /// `μ = μ1·μ2`.
    pub mu: f64,
    /// Largest true duration.
    pub d_max: u64,
    /// Largest estimate.
    pub d_tilde_max: f64,
}

impl Instance {
    /// Build an instance from drafts: stable-sorts by arrival (preserving
    /// release order within a slot) and assigns ids by position.
    pub fn from_drafts(machines: usize, drafts: Vec<JobDraft>) -> Result<Self> {
        if machines == 0 {
            return Err(Error::InvalidInstance("machine count must be ≥ 1".into()));
        }
        let mut drafts = drafts;
        drafts.sort_by_key(|d| d.arrival);
        let mut jobs = Vec::with_capacity(drafts.len());
        for (id, d) in drafts.into_iter().enumerate() {
            if d.duration == 0 {
                return Err(Error::InvalidInstance(format!(
                    "job {id}: duration must be ≥ 1"
                )));
            }
            if d.predicted < 1.0 || !d.predicted.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "job {id}: predicted duration must be a finite value ≥ 1"
                )));
            }
            if d.loads.len() != machines {
                return Err(Error::InvalidInstance(format!(
                    "job {id}: loads row has {} entries, expected {machines}",
                    d.loads.len()
                )));
            }
            if !d.loads.iter().any(|l| l.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "job {id}: no feasible machine"
                )));
            }
            if d.loads.iter().any(|l| *l <= 0.0 || l.is_nan()) {
                return Err(Error::InvalidInstance(format!(
                    "job {id}: loads must be positive or infeasible"
                )));
            }
            jobs.push(Job {
                id,
                arrival: d.arrival,
                duration: d.duration,
                predicted: d.predicted,
                loads: d.loads,
            });
        }
        Ok(Instance { machines, jobs })
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    /// Last slot any job occupies (`max_j t_j + d_j`); 0 when empty.
    pub fn horizon(&self) -> u64 {
        self.jobs.iter().map(Job::departs_at).max().unwrap_or(0)
    }

    /// Minimal feasible `(μ1, μ2, μ, D, D̃)` for the declared predictions.
    ///
    /// `⌈d̃/μ2⌉ ≤ d` for integer `d` is equivalent to `μ2 ≥ d̃/d`, so both
    /// factors have closed forms.
    pub fn distortion(&self) -> Distortion {
        let mut mu1 = 1.0_f64;
        let mut mu2 = 1.0_f64;
        let mut d_max = 0_u64;
        let mut d_tilde_max = 0.0_f64;
        for j in &self.jobs {
            let d = j.duration as f64;
            mu1 = mu1.max(d / j.predicted);
            mu2 = mu2.max(j.predicted / d);
            d_max = d_max.max(j.duration);
            d_tilde_max = d_tilde_max.max(j.predicted);
        }
        Distortion {
            mu1,
            mu2,
            mu: mu1 * mu2,
            d_max,
            d_tilde_max,
        }
    }
}

/// Identical instance with every true duration inflated to `max(d, ⌊μ·d⌋)`.
///
/// Durations never shrink, which keeps the slot model intact while preserving
/// the stacked-load structure that duration distortion creates.
pub fn scale_durations(inst: &Instance, mu: f64) -> Result<Instance> {
    if mu < 1.0 || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale factor must be ≥ 1, got {mu}"
        )));
    }
    let mut out = inst.clone();
    for j in &mut out.jobs {
        let scaled = floored_span(mu, j.duration as f64);
        j.duration = scaled.max(j.duration);
    }
    Ok(out)
}

/// Machine choice per job id. Complete assignments have one entry per job.
pub type Assignment = Vec<usize>;

/// A nonnegative step function over slot indices.
///
/// The map stores the value that holds from each key slot up to (excluding)
/// the next key; before the first key the value is 0.
#[derive(Debug, Clone, Default)]
pub struct LoadProfile {
    steps: BTreeMap<u64, f64>,
}

impl LoadProfile {
    pub fn value_at(&self, slot: u64) -> f64 {
        self.steps
            .range(..=slot)
            .next_back()
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }

    fn ensure_key(&mut self, slot: u64) {
        if !self.steps.contains_key(&slot) {
            let v = self.value_at(slot);
            self.steps.insert(slot, v);
        }
    }

    /// Add `amount` over the inclusive slot range `[from, to]`.
    pub fn add(&mut self, from: u64, to: u64, amount: f64) {
        debug_assert!(from <= to);
        self.ensure_key(from);
        self.ensure_key(to + 1);
        for (_, v) in self.steps.range_mut(from..=to) {
            *v += amount;
        }
    }

    /// Slots at which the value may change.
    pub fn breakpoints(&self) -> impl Iterator<Item = u64> + '_ {
        self.steps.keys().copied()
    }

    pub fn max_value(&self) -> f64 {
        self.steps.values().cloned().fold(0.0, f64::max)
    }
}

/// Per-machine load step functions; one ledger per run tracks either the
/// true loads or a policy's pseudo loads.
#[derive(Debug, Clone)]
pub struct LoadLedger {
    profiles: Vec<LoadProfile>,
}

impl LoadLedger {
    pub fn new(machines: usize) -> Self {
        LoadLedger {
            profiles: vec![LoadProfile::default(); machines],
        }
    }

    pub fn machines(&self) -> usize {
        self.profiles.len()
    }

    pub fn add(&mut self, machine: usize, from: u64, to: u64, amount: f64) {
        self.profiles[machine].add(from, to, amount);
    }

    pub fn value(&self, machine: usize, slot: u64) -> f64 {
        self.profiles[machine].value_at(slot)
    }

    pub fn vector_at(&self, slot: u64) -> Vec<f64> {
        self.profiles.iter().map(|p| p.value_at(slot)).collect()
    }

    pub fn max_value(&self) -> f64 {
        self.profiles
            .iter()
            .map(LoadProfile::max_value)
            .fold(0.0, f64::max)
    }

    pub fn profile(&self, machine: usize) -> &LoadProfile {
        &self.profiles[machine]
    }

    /// Maximal subintervals of `[lo, hi]` on which every machine's load is
    /// constant, as inclusive `(start, end)` pairs.
    pub fn segments_in(&self, lo: u64, hi: u64) -> Vec<(u64, u64)> {
        debug_assert!(lo <= hi);
        let mut cuts: Vec<u64> = vec![lo];
        if lo < hi {
            for p in &self.profiles {
                for k in p.steps.range((lo + 1)..=hi).map(|(k, _)| *k) {
                    cuts.push(k);
                }
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        let mut segs = Vec::with_capacity(cuts.len());
        for (i, &s) in cuts.iter().enumerate() {
            let e = if i + 1 < cuts.len() {
                cuts[i + 1] - 1
            } else {
                hi
            };
            segs.push((s, e));
        }
        segs
    }

    /// True loads of an assigned instance.
    pub fn real_from(inst: &Instance, assignment: &Assignment) -> Result<Self> {
        Self::from_windows(inst, assignment, |j| j.live_slots())
    }

    /// Pseudo loads of an assigned instance under underestimation factor `mu1`.
    pub fn pseudo_from(inst: &Instance, assignment: &Assignment, mu1: f64) -> Result<Self> {
        Self::from_windows(inst, assignment, |j| j.pseudo_slots(mu1))
    }

    fn from_windows(
        inst: &Instance,
        assignment: &Assignment,
        window: impl Fn(&Job) -> (u64, u64),
    ) -> Result<Self> {
        let mut ledger = LoadLedger::new(inst.machines);
        for job in &inst.jobs {
            let &machine = assignment.get(job.id).ok_or(Error::Unassigned(job.id))?;
            if !job.is_feasible_on(machine) {
                return Err(Error::InfeasibleAssignment {
                    job: job.id,
                    machine,
                });
            }
            let (lo, hi) = window(job);
            ledger.add(machine, lo, hi, job.loads[machine]);
        }
        Ok(ledger)
    }
}

/// `max_t ||ℓ(t)||` of an assigned instance, evaluated at load change points
/// only (loads are constant in between).
pub fn objective(inst: &Instance, assignment: &Assignment, norm: Norm) -> Result<f64> {
    if inst.jobs.is_empty() {
        return Ok(0.0);
    }
    let ledger = LoadLedger::real_from(inst, assignment)?;
    let horizon = inst.horizon();
    let mut best = 0.0_f64;
    for (start, _) in ledger.segments_in(1, horizon) {
        let val = norm.evaluate(&ledger.vector_at(start))?;
        best = best.max(val);
    }
    Ok(best)
}

// --- JSON file format -------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum LoadValue {
    Num(f64),
    Word(String),
}

fn loads_to_json(loads: &[f64]) -> Vec<LoadValue> {
    loads
        .iter()
        .map(|l| {
            if l.is_finite() {
                LoadValue::Num(*l)
            } else {
                LoadValue::Word("inf".to_string())
            }
        })
        .collect()
}

fn loads_from_json(vals: &[LoadValue]) -> Result<Vec<f64>> {
    vals.iter()
        .map(|v| match v {
            LoadValue::Num(x) => Ok(*x),
            LoadValue::Word(w) if w.eq_ignore_ascii_case("inf") => Ok(INFEASIBLE),
            LoadValue::Word(w) => Err(Error::InvalidInstance(format!("bad load value {w:?}"))),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct JobFile {
    arrival: u64,
    duration: u64,
    predicted: f64,
    loads: Vec<LoadValue>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    machines: usize,
    jobs: Vec<JobFile>,
}

impl Instance {
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            machines: self.machines,
            jobs: self
                .jobs
                .iter()
                .map(|j| JobFile {
                    arrival: j.arrival,
                    duration: j.duration,
                    predicted: j.predicted,
                    loads: loads_to_json(&j.loads),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let drafts = file
            .jobs
            .iter()
            .map(|j| {
                Ok(JobDraft {
                    arrival: j.arrival,
                    duration: j.duration,
                    predicted: j.predicted,
                    loads: loads_from_json(&j.loads)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::from_drafts(file.machines, drafts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_draft(arrival: u64, duration: u64, loads: Vec<f64>) -> JobDraft {
        JobDraft {
            arrival,
            duration,
            predicted: duration as f64,
            loads,
        }
    }

    /// Reference objective: scan every slot up to the horizon.
    pub(crate) fn brute_objective(inst: &Instance, assignment: &Assignment, norm: Norm) -> f64 {
        let mut best = 0.0_f64;
        for t in 1..=inst.horizon() {
            let mut v = vec![0.0; inst.machines];
            for j in &inst.jobs {
                let (lo, hi) = j.live_slots();
                if (lo..=hi).contains(&t) {
                    v[assignment[j.id]] += j.loads[assignment[j.id]];
                }
            }
            best = best.max(norm.evaluate(&v).unwrap());
        }
        best
    }

    #[test]
    fn single_job_constant_load() {
        let inst = Instance::from_drafts(1, vec![unit_draft(0, 3, vec![2.0])]).unwrap();
        assert_eq!(objective(&inst, &vec![0], Norm::P(1.0)).unwrap(), 2.0);
    }

    #[test]
    fn disjoint_jobs_never_overlap() {
        let inst = Instance::from_drafts(
            1,
            vec![unit_draft(0, 2, vec![1.0]), unit_draft(2, 2, vec![1.0])],
        )
        .unwrap();
        assert_eq!(objective(&inst, &vec![0, 0], Norm::P(1.0)).unwrap(), 1.0);
    }

    #[test]
    fn overlap_at_middle_slot() {
        // Slots: job 0 lives at 1..2, job 1 at 2..3; both on machine 0.
        let inst = Instance::from_drafts(
            1,
            vec![unit_draft(0, 2, vec![1.0]), unit_draft(1, 2, vec![1.0])],
        )
        .unwrap();
        assert_eq!(objective(&inst, &vec![0, 0], Norm::P(1.0)).unwrap(), 2.0);
    }

    #[test]
    fn distortion_exact_predictions() {
        let inst = Instance::from_drafts(
            2,
            vec![
                unit_draft(0, 2, vec![1.0, 1.0]),
                unit_draft(1, 5, vec![1.0, INFEASIBLE]),
            ],
        )
        .unwrap();
        let d = inst.distortion();
        assert_eq!((d.mu1, d.mu2, d.mu), (1.0, 1.0, 1.0));
        assert_eq!(d.d_max, 5);
        assert_eq!(d.d_tilde_max, 5.0);
    }

    #[test]
    fn distortion_underestimate() {
        let mut draft = unit_draft(0, 4, vec![1.0]);
        draft.predicted = 2.0;
        let inst = Instance::from_drafts(1, vec![draft]).unwrap();
        let d = inst.distortion();
        assert_eq!((d.mu1, d.mu2, d.mu), (2.0, 1.0, 2.0));
        // Interval membership: d ∈ [⌈d̃/μ2⌉, ⌊μ1·d̃⌋] = [2, 4].
        assert_eq!((d.mu1 * 2.0).floor() as u64, 4);
        assert_eq!((2.0_f64 / d.mu2).ceil() as u64, 2);
    }

    #[test]
    fn distortion_overestimate() {
        let mut draft = unit_draft(0, 1, vec![1.0]);
        draft.predicted = 3.0;
        let inst = Instance::from_drafts(1, vec![draft]).unwrap();
        let d = inst.distortion();
        assert_eq!((d.mu1, d.mu2, d.mu), (1.0, 3.0, 3.0));
        assert_eq!((3.0_f64 / d.mu2).ceil() as u64, 1);
        // Any smaller μ2 leaves the lower end of the window above d = 1.
        assert!((3.0_f64 / (d.mu2 - 1e-6)).ceil() as u64 > 1);
    }

    #[test]
    fn scale_identity() {
        let inst = Instance::from_drafts(1, vec![unit_draft(0, 2, vec![1.0])]).unwrap();
        assert_eq!(scale_durations(&inst, 1.0).unwrap(), inst);
    }

    #[test]
    fn scale_exact_product() {
        let inst = Instance::from_drafts(1, vec![unit_draft(0, 2, vec![1.0])]).unwrap();
        assert_eq!(scale_durations(&inst, 3.0).unwrap().jobs[0].duration, 6);
    }

    #[test]
    fn scale_floors() {
        let inst = Instance::from_drafts(1, vec![unit_draft(0, 3, vec![1.0])]).unwrap();
        assert_eq!(scale_durations(&inst, 2.5).unwrap().jobs[0].duration, 7);
    }

    #[test]
    fn profile_add_and_query() {
        let mut p = LoadProfile::default();
        p.add(2, 5, 1.0);
        p.add(4, 8, 2.0);
        assert_eq!(p.value_at(1), 0.0);
        assert_eq!(p.value_at(2), 1.0);
        assert_eq!(p.value_at(4), 3.0);
        assert_eq!(p.value_at(6), 2.0);
        assert_eq!(p.value_at(9), 0.0);
        assert_eq!(p.max_value(), 3.0);
    }

    #[test]
    fn json_round_trip_preserves_instance() {
        let inst = Instance::from_drafts(
            2,
            vec![
                unit_draft(0, 2, vec![1.5, INFEASIBLE]),
                unit_draft(3, 1, vec![0.25, 2.0]),
            ],
        )
        .unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn objective_matches_slot_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.gen_range(1..4usize);
            let n = rng.gen_range(1..7usize);
            let drafts: Vec<JobDraft> = (0..n)
                .map(|_| JobDraft {
                    arrival: rng.gen_range(0..6u64),
                    duration: rng.gen_range(1..5u64),
                    predicted: rng.gen_range(1.0..4.0),
                    loads: (0..m).map(|_| rng.gen_range(0.1..5.0)).collect(),
                })
                .collect();
            let inst = Instance::from_drafts(m, drafts).unwrap();
            let assignment: Assignment = inst.jobs.iter().map(|_| rng.gen_range(0..m)).collect();
            for norm in [Norm::P(1.0), Norm::P(2.0), Norm::Inf] {
                let fast = objective(&inst, &assignment, norm).unwrap();
                let slow = brute_objective(&inst, &assignment, norm);
                assert!((fast - slow).abs() <= 1e-9 * slow.max(1.0));
            }
        }
    }
}

#[cfg(test)]
mod profile_props {
    use super::*;
    use proptest::prelude::*;

    /// Dense-array reference model for a batch of interval additions.
    fn dense(adds: &[(u64, u64, f64)], upto: u64) -> Vec<f64> {
        let mut slots = vec![0.0; upto as usize + 1];
        for &(from, to, amount) in adds {
            for s in from..=to.min(upto) {
                slots[s as usize] += amount;
            }
        }
        slots
    }

    fn interval() -> impl Strategy<Value = (u64, u64, f64)> {
        (0u64..40, 0u64..20, 0.01f64..10.0).prop_map(|(a, len, x)| (a, a + len, x))
    }

    proptest! {
        #[test]
        fn profile_matches_dense_reference(adds in proptest::collection::vec(interval(), 0..12)) {
            let mut profile = LoadProfile::default();
            for &(from, to, amount) in &adds {
                profile.add(from, to, amount);
            }
            let reference = dense(&adds, 64);
            for (slot, expected) in reference.iter().enumerate() {
                let got = profile.value_at(slot as u64);
                prop_assert!(
                    (got - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                    "slot {slot}: {got} vs {expected}"
                );
            }
            let max_expected = reference.iter().cloned().fold(0.0, f64::max);
            prop_assert!((profile.max_value() - max_expected).abs() <= 1e-9 * max_expected.max(1.0));
        }

        #[test]
        fn segments_cover_and_stay_constant(adds in proptest::collection::vec(interval(), 1..10)) {
            let mut ledger = LoadLedger::new(2);
            for (i, &(from, to, amount)) in adds.iter().enumerate() {
                ledger.add(i % 2, from, to, amount);
            }
            let (lo, hi) = (1u64, 70u64);
            let segs = ledger.segments_in(lo, hi);
            prop_assert_eq!(segs.first().map(|s| s.0), Some(lo));
            prop_assert_eq!(segs.last().map(|s| s.1), Some(hi));
            for window in segs.windows(2) {
                prop_assert_eq!(window[0].1 + 1, window[1].0, "segments not contiguous");
            }
            for &(s, e) in &segs {
                for m in 0..2 {
                    let v = ledger.value(m, s);
                    for slot in s..=e {
                        prop_assert_eq!(ledger.value(m, slot), v, "load moved inside a segment");
                    }
                }
            }
        }

        #[test]
        fn instance_json_round_trips(
            machines in 1usize..4,
            raw in proptest::collection::vec(
                (0u64..16, 1u64..8, 1.0f64..8.0, proptest::collection::vec(0.05f64..10.0, 3)),
                0..8,
            ),
        ) {
            let drafts: Vec<JobDraft> = raw
                .into_iter()
                .map(|(arrival, duration, predicted, loads)| JobDraft {
                    arrival,
                    duration,
                    predicted,
                    loads: loads.into_iter().take(machines).collect(),
                })
                .collect();
            let inst = Instance::from_drafts(machines, drafts).unwrap();
            let back = Instance::from_json(&inst.to_json()).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
