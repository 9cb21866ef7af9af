//! Adaptive adversaries that build worst-case job sequences against a live
//! policy, fixing true durations only after seeing its choices, together
//! with the transcript format their guarantees are checked from.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::{objective, Assignment, Instance, JobDraft, INFEASIBLE};
use crate::norm::Norm;
use crate::poe::time_points;
use crate::policy::{ArrivingJob, OnlinePolicy};

/// What a finished adversary run certifies.
#[derive(Debug, Clone)]
pub struct Transcript {
    /// Realized instance, durations as the adversary fixed them.
    pub instance: Instance,
    /// The policy's choices.
    pub assignment: Assignment,
    /// The adversary's witness assignment for the optimum.
    pub reference: Assignment,
    /// Declared lower bound on the policy's objective.
    pub on_lower_bound: f64,
    /// Declared upper bound on the witness objective.
    pub opt_upper_bound: f64,
    /// Norm both declarations refer to.
    pub norm: Norm,
    /// Distortion budget the construction promised to respect.
    pub declared_mu: f64,
    /// Estimate ceiling the construction promised to respect.
    pub declared_d_tilde: f64,
    pub info: ConstructionInfo,
}

#[derive(Debug, Clone)]
pub enum ConstructionInfo {
    DistortionBound {
        iterations: u64,
        k: u64,
        completed: bool,
    },
    HorizonBound {
        x: f64,
        iterations: u64,
        k: u64,
        completed: bool,
    },
    EstimationOnlyBound {
        mu: u64,
    },
}

impl Transcript {
    pub fn realized_on(&self) -> Result<f64> {
        objective(&self.instance, &self.assignment, self.norm)
    }

    pub fn reference_objective(&self) -> Result<f64> {
        objective(&self.instance, &self.reference, self.norm)
    }

    /// Instance JSON extended with the witness assignment and guarantees.
    pub fn to_json(&self) -> String {
        let mut root: serde_json::Value =
            serde_json::from_str(&self.instance.to_json()).expect("instance json");
        let obj = root.as_object_mut().expect("object root");
        obj.insert(
            "assignment".into(),
            serde_json::json!(self.assignment.clone()),
        );
        obj.insert(
            "reference_assignment".into(),
            serde_json::json!(self.reference.clone()),
        );
        obj.insert(
            "guarantees".into(),
            serde_json::json!({
                "on_lb": self.on_lower_bound,
                "opt_ub": self.opt_upper_bound,
            }),
        );
        obj.insert("norm".into(), serde_json::json!(self.norm.to_string()));
        serde_json::to_string_pretty(&root).expect("transcript json")
    }
}

/// Drives a policy through an adaptively constructed sequence, committing
/// durations lazily and delivering departures in time order.
struct Interaction<'a> {
    policy: &'a mut dyn OnlinePolicy,
    machines: usize,
    notify: bool,
    drafts: Vec<JobDraft>,
    choices: Vec<usize>,
    departures: BinaryHeap<Reverse<(u64, usize)>>,
}

impl<'a> Interaction<'a> {
    fn new(policy: &'a mut dyn OnlinePolicy, machines: usize, notify: bool) -> Self {
        Interaction {
            policy,
            machines,
            notify,
            drafts: Vec::new(),
            choices: Vec::new(),
            departures: BinaryHeap::new(),
        }
    }

    fn release(&mut self, arrival: u64, predicted: f64, loads: Vec<f64>) -> Result<usize> {
        if self.notify {
            while let Some(&Reverse((dep, id))) = self.departures.peek() {
                if dep > arrival {
                    break;
                }
                self.departures.pop();
                self.policy.on_departure(id, dep);
            }
        }
        let id = self.drafts.len();
        let view = ArrivingJob {
            id,
            arrival,
            predicted,
            loads: &loads,
        };
        let choice = self.policy.on_arrival(&view)?;
        if choice >= self.machines || !loads[choice].is_finite() {
            return Err(Error::InfeasibleAssignment {
                job: id,
                machine: choice,
            });
        }
        self.drafts.push(JobDraft {
            arrival,
            duration: 0, // fixed by commit
            predicted,
            loads,
        });
        self.choices.push(choice);
        Ok(id)
    }

    fn commit(&mut self, id: usize, duration: u64) {
        debug_assert!(duration >= 1);
        self.drafts[id].duration = duration;
        if self.notify {
            self.departures
                .push(Reverse((self.drafts[id].arrival + duration, id)));
        }
    }

    /// True load on a machine at a slot, over committed jobs.
    fn load_at(&self, machine: usize, slot: u64) -> f64 {
        self.drafts
            .iter()
            .zip(&self.choices)
            .filter(|(d, &c)| {
                c == machine
                    && d.duration > 0
                    && (d.arrival + 1..=d.arrival + d.duration).contains(&slot)
            })
            .map(|(d, &c)| d.loads[c])
            .sum()
    }

    fn max_load_at(&self, slot: u64) -> f64 {
        (0..self.machines)
            .map(|m| self.load_at(m, slot))
            .fold(0.0, f64::max)
    }

    fn finish(self, machines: usize) -> Result<(Instance, Assignment)> {
        debug_assert!(self.drafts.iter().all(|d| d.duration >= 1));
        let assignment = self.choices.clone();
        let instance = Instance::from_drafts(machines, self.drafts)?;
        Ok((instance, assignment))
    }
}

/// `k = ⌊R^(p/(2p−1))⌋`, at least 1; the `ℓ∞` exponent is the `p → ∞` limit 1/2.
fn construction_k(r: u64, norm: Norm) -> u64 {
    let e = match norm {
        Norm::Inf => 0.5,
        Norm::P(p) => p / (2.0 * p - 1.0),
    };
    ((r as f64).powf(e).floor() as u64).max(1)
}

fn stacked_load_bound(k: u64, r: u64, norm: Norm) -> f64 {
    let (k, r) = (k as f64, r as f64);
    match norm {
        Norm::Inf => k.min(r / k),
        Norm::P(p) => k.min(k.powf((1.0 - p) / p) * r),
    }
}

fn spread_witness_bound(k: u64, r: u64, norm: Norm) -> f64 {
    match norm {
        Norm::Inf => 1.0,
        Norm::P(p) => ((k + r) as f64).powf(1.0 / p),
    }
}

fn pair_loads(machines: usize, k: u64, unique: usize) -> Vec<f64> {
    let mut loads = vec![INFEASIBLE; machines];
    for entry in loads.iter_mut().take(k as usize) {
        *entry = 1.0;
    }
    loads[unique] = 1.0;
    loads
}

/// Distortion lower bound: up to `R = min{μ, ⌊m/2⌋}` iterations of unit-load
/// jobs restricted to the first `k` machines plus one fresh machine per
/// iteration. A job parked on the fresh machine lasts one slot; the first
/// job sent to the shared machines is kept alive until time `R` and ends the
/// iteration. The sequence stops early once any machine carries load `k`.
pub fn distortion_adversary(
    machines: usize,
    mu: f64,
    norm: Norm,
    policy: &mut dyn OnlinePolicy,
) -> Result<Transcript> {
    if machines < 4 {
        return Err(Error::InvalidParameter("need at least 4 machines".into()));
    }
    if mu < 1.0 || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be ≥ 1, got {mu}")));
    }
    let r_total = (mu.floor() as u64).min((machines / 2) as u64).max(1);
    let k = construction_k(r_total, norm);
    if k + r_total > machines as u64 {
        return Err(Error::InvalidParameter(format!(
            "k + R = {} exceeds {machines} machines",
            k + r_total
        )));
    }

    let mut game = Interaction::new(policy, machines, true);
    let mut reference: Vec<usize> = Vec::new();
    let mut completed = true;
    for r in 1..=r_total {
        let t_r = r - 1;
        let unique = (k + r - 1) as usize;
        let mut spread_next = 0usize;
        for _ in 1..=k {
            let id = game.release(t_r, 1.0, pair_loads(machines, k, unique))?;
            let choice = game.choices[id];
            if choice == unique {
                game.commit(id, 1);
                reference.push(spread_next);
                spread_next += 1;
            } else {
                // The iteration's survivor: alive until time R.
                game.commit(id, r_total - t_r);
                reference.push(unique);
                break;
            }
        }
        if game.max_load_at(t_r + 1) >= k as f64 - 1e-9 {
            completed = r == r_total;
            break;
        }
    }

    let (instance, assignment) = game.finish(machines)?;
    Ok(Transcript {
        instance,
        assignment,
        reference,
        on_lower_bound: stacked_load_bound(k, r_total, norm),
        opt_upper_bound: spread_witness_bound(k, r_total, norm),
        norm,
        declared_mu: r_total as f64,
        declared_d_tilde: 1.0,
        info: ConstructionInfo::DistortionBound {
            iterations: r_total,
            k,
            completed,
        },
    })
}

/// Solve `D̃ = (√x)^(x−√x+1)` for `x` by bisection; the left side is
/// increasing in `x` beyond 1.
pub fn solve_nesting_depth(d_tilde: f64) -> Result<f64> {
    if d_tilde < 16.0 || !d_tilde.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need D̃ ≥ 16, got {d_tilde}"
        )));
    }
    let f = |x: f64| (x - x.sqrt() + 1.0) * x.sqrt().ln() - d_tilde.ln();
    let mut lo = 1.0;
    let mut hi = 4.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Horizon lower bound (exact predictions): each iteration replays the
/// staggered-departure pattern inside the current window `[t_r, x_r]`, with
/// departures climbing through the window's second half in steps of
/// `(x_r − t_r)/(2k)` and the last one landing on `x_r`. Continuous times
/// are floored onto the slot grid and the construction aborts if flooring
/// collapses any gap.
///
/// `corrected` anchors the iteration at `t_r`, so
/// `dep_r(j) = t_r + ((x_r − t_r)/2)·(1 + j/k)` and the first-job branch
/// continues at `t_{r+1} = dep_r(0) = t_r + (x_r − t_r)/2`. The verbatim
/// variant keeps the zero-anchored `dep_r(j) = (x_r/2)·(1 + j/k)` and
/// `t_{r+1} = (x_r − t_r)/2`; it escapes the window from the second
/// iteration on and is kept only for comparison.
pub fn horizon_adversary(
    machines: usize,
    d_tilde: f64,
    norm: Norm,
    policy: &mut dyn OnlinePolicy,
    corrected: bool,
) -> Result<Transcript> {
    if machines < 4 {
        return Err(Error::InvalidParameter("need at least 4 machines".into()));
    }
    let x = solve_nesting_depth(d_tilde)?;
    // The bisection can stop a hair under an exact integer root.
    let r_total = (((x + 1e-9).floor() as u64).min((machines / 2) as u64)).max(1);
    let k = construction_k(r_total, norm);
    if k + r_total > machines as u64 {
        return Err(Error::InvalidParameter(format!(
            "k + R = {} exceeds {machines} machines",
            k + r_total
        )));
    }

    let mut game = Interaction::new(policy, machines, true);
    let mut reference: Vec<usize> = Vec::new();
    let mut survivors: Vec<usize> = Vec::new();
    let mut t_r = 0.0_f64;
    let mut x_r = d_tilde;
    let mut completed = true;
    let mut last_arrival_slot = 0_u64;
    for r in 1..=r_total {
        let unique = (k + r - 1) as usize;
        let arrival_slot = t_r.floor() as u64;
        last_arrival_slot = arrival_slot;
        let departure_of = |j: u64| {
            if corrected {
                t_r + ((x_r - t_r) / 2.0) * (1.0 + j as f64 / k as f64)
            } else {
                (x_r / 2.0) * (1.0 + j as f64 / k as f64)
            }
        };
        let mut prev_dep_slot: Option<u64> = None;
        let mut iteration_jobs: Vec<usize> = Vec::new();
        let mut survivor: Option<usize> = None;
        let mut next_window: Option<(f64, f64)> = None;
        for j in 1..=k {
            let dep_slot = departure_of(j).floor() as u64;
            if dep_slot <= arrival_slot {
                return Err(Error::ScaleError(format!(
                    "iteration {r}: departure {dep_slot} not after arrival {arrival_slot}"
                )));
            }
            if let Some(prev) = prev_dep_slot {
                if dep_slot <= prev {
                    return Err(Error::ScaleError(format!(
                        "iteration {r}: departure gap below one slot after flooring"
                    )));
                }
            }
            prev_dep_slot = Some(dep_slot);
            let duration = dep_slot - arrival_slot;
            let id = game.release(
                arrival_slot,
                duration as f64,
                pair_loads(machines, k, unique),
            )?;
            game.commit(id, duration);
            iteration_jobs.push(id);
            let choice = game.choices[id];
            let shared = choice < k as usize;
            if shared && j == 1 {
                let t_next = if corrected {
                    t_r + (x_r - t_r) / 2.0
                } else {
                    (x_r - t_r) / 2.0
                };
                next_window = Some((t_next, departure_of(1)));
                survivor = Some(id);
                break;
            }
            if shared || j == k {
                next_window = Some((departure_of(j - 1), departure_of(j)));
                survivor = Some(id);
                break;
            }
        }
        let survivor = survivor.expect("iteration always ends at j ≤ k");
        survivors.push(survivor);
        // Witness: survivor on the iteration's fresh machine, the rest spread
        // over distinct shared machines.
        let mut spread_next = 0usize;
        for &id in &iteration_jobs {
            if id == survivor {
                reference.push(unique);
            } else {
                reference.push(spread_next);
                spread_next += 1;
            }
        }
        if game.max_load_at(arrival_slot + 1) >= k as f64 - 1e-9 {
            completed = r == r_total;
            break;
        }
        let (t_next, x_next) = next_window.expect("set on every break");
        if r < r_total && (t_next <= t_r || x_next > x_r || t_next >= x_next) {
            return Err(Error::ScaleError(format!(
                "iteration {r}: window [{t_next}, {x_next}] does not nest in [{t_r}, {x_r}]"
            )));
        }
        t_r = t_next;
        x_r = x_next;
    }
    if completed {
        // Every survivor must still be alive at the last iteration's first slot.
        let check_slot = last_arrival_slot + 1;
        for &id in &survivors {
            let d = &game.drafts[id];
            if !(d.arrival + 1..=d.arrival + d.duration).contains(&check_slot) {
                return Err(Error::ScaleError(format!(
                    "survivor {id} not alive at slot {check_slot} after flooring"
                )));
            }
        }
    }

    let (instance, assignment) = game.finish(machines)?;
    Ok(Transcript {
        instance,
        assignment,
        reference,
        on_lower_bound: stacked_load_bound(k, r_total, norm),
        opt_upper_bound: spread_witness_bound(k, r_total, norm),
        norm,
        declared_mu: 1.0,
        declared_d_tilde: d_tilde,
        info: ConstructionInfo::HorizonBound {
            x,
            iterations: r_total,
            k,
            completed,
        },
    })
}

/// Result of the tournament counter-example stream: the realized instance
/// (victim jobs stretched to the horizon), the prediction-faithful twin
/// (every duration equal to its estimate), and both assignments.
#[derive(Debug, Clone)]
pub struct TournamentRun {
    pub instance: Instance,
    /// Same stream with honest durations; the witness bound is stated
    /// against this view, where each round's loads vanish before the next.
    pub honest_instance: Instance,
    pub assignment: Assignment,
    pub reference: Assignment,
    pub j_star: usize,
    pub levels: u32,
}

impl TournamentRun {
    /// Declared stacked load: one tournament's worth per round.
    pub fn declared_on(&self) -> f64 {
        (self.j_star as u32 * self.levels) as f64
    }

    pub fn opt_upper_bound(&self, norm: Norm) -> f64 {
        match norm {
            Norm::Inf => 1.0,
            Norm::P(p) => self.declared_on().powf(1.0 / p),
        }
    }
}

/// Pair tournament stream: each round releases `m−1` unit jobs, one per
/// bracket slot, each feasible on exactly two machines. After every choice
/// the two labels are swapped so the chosen machine keeps the lower label;
/// the jobs the policy funnels onto the round's winner are stretched to the
/// horizon, everything else keeps its estimated duration.
pub fn tournament_counterexample(
    machines: usize,
    d: f64,
    mu: f64,
    policy: &mut dyn OnlinePolicy,
) -> Result<TournamentRun> {
    if machines < 2 || !machines.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "machine count must be a power of two ≥ 2, got {machines}"
        )));
    }
    let series = time_points(d, mu)?;
    let j_star = series.j_star;
    let levels = machines.trailing_zeros();
    let grid: Vec<u64> = series.points.iter().map(|t| t.ceil() as u64).collect();
    let horizon = (d.ceil() as u64).max(grid[j_star - 1] + 1);

    let mut game = Interaction::new(policy, machines, true);
    let mut labels: Vec<usize> = (0..machines).collect();
    let mut reference: Vec<usize> = Vec::new();
    let mut honest_durations: Vec<u64> = Vec::new();
    for round in 1..=j_star {
        let arrival = grid[round - 1];
        let honest = (grid[round] as i64 - grid[round - 1] as i64).max(1) as u64;
        let mut round_jobs: Vec<usize> = Vec::new();
        for level in 1..=levels {
            let half = machines >> level;
            for z in 0..half {
                let low = labels[z];
                let high = labels[z + half];
                let mut loads = vec![INFEASIBLE; machines];
                loads[low] = 1.0;
                loads[high] = 1.0;
                let id = game.release(arrival, honest as f64, loads)?;
                if game.choices[id] == high {
                    labels.swap(z, z + half);
                }
                // Witness: the pair machine the policy did not take.
                reference.push(labels[z + half]);
                honest_durations.push(honest);
                round_jobs.push(id);
            }
        }
        let winner = labels[0];
        for id in round_jobs {
            if game.choices[id] == winner {
                game.commit(id, horizon - game.drafts[id].arrival);
            } else {
                game.commit(id, honest);
            }
        }
    }

    let (instance, assignment) = game.finish(machines)?;
    let honest_drafts = instance
        .jobs
        .iter()
        .map(|j| JobDraft {
            arrival: j.arrival,
            duration: honest_durations[j.id],
            predicted: j.predicted,
            loads: j.loads.clone(),
        })
        .collect();
    let honest_instance = Instance::from_drafts(machines, honest_drafts)?;
    Ok(TournamentRun {
        instance,
        honest_instance,
        assignment,
        reference,
        j_star,
        levels,
    })
}

/// Estimation-only lower bound: `μ` machines, `μ` identical unit-estimate
/// jobs per step. The moment some machine has collected `μ` jobs, those are
/// stretched to length `μ` (all overlapping at slot `μ`) and everything else
/// keeps length 1.
pub fn estimation_only_adversary(mu: u64, policy: &mut dyn OnlinePolicy) -> Result<Transcript> {
    if mu < 1 {
        return Err(Error::InvalidParameter("mu must be ≥ 1".into()));
    }
    if !policy.estimation_only() {
        return Err(Error::NotEstimationOnly);
    }
    let machines = mu as usize;
    let mut game = Interaction::new(policy, machines, false);
    let mut counts = vec![0u64; machines];
    let mut overloaded: Option<usize> = None;
    'steps: for t in 0..mu {
        for _ in 0..mu {
            let id = game.release(t, 1.0, vec![1.0; machines])?;
            let choice = game.choices[id];
            counts[choice] += 1;
            if counts[choice] >= mu {
                overloaded = Some(choice);
                break 'steps;
            }
        }
    }
    // μ² placements on μ machines force a stack of μ by counting.
    let overloaded = overloaded.expect("pigeonhole guarantees a stacked machine");
    for id in 0..game.drafts.len() {
        let d = if game.choices[id] == overloaded {
            mu
        } else {
            1
        };
        game.commit(id, d);
    }

    // Witness: per step a bijection jobs → machines, arranged so each
    // machine hosts at most one stretched job overall.
    let mut reference = vec![usize::MAX; game.drafts.len()];
    let mut stretched_hosts = vec![false; machines];
    for t in 0..mu {
        let step_jobs: Vec<usize> = (0..game.drafts.len())
            .filter(|&id| game.drafts[id].arrival == t)
            .collect();
        let mut used = vec![false; machines];
        for &id in step_jobs
            .iter()
            .filter(|&&id| game.choices[id] == overloaded)
        {
            let host = (0..machines)
                .find(|&m| !stretched_hosts[m] && !used[m])
                .expect("at most μ stretched jobs in total");
            stretched_hosts[host] = true;
            used[host] = true;
            reference[id] = host;
        }
        for &id in step_jobs
            .iter()
            .filter(|&&id| game.choices[id] != overloaded)
        {
            let host = (0..machines)
                .find(|&m| !used[m])
                .expect("μ machines per step");
            used[host] = true;
            reference[id] = host;
        }
    }

    let (instance, assignment) = game.finish(machines)?;
    Ok(Transcript {
        instance,
        assignment,
        reference,
        on_lower_bound: mu as f64,
        opt_upper_bound: 2.0,
        norm: Norm::Inf,
        declared_mu: mu as f64,
        declared_d_tilde: 1.0,
        info: ConstructionInfo::EstimationOnlyBound { mu },
    })
}


#[cfg(test)]
mod extra_tests {
    use super::*;
    use crate::policy::{AlgParams, GreedyPolicy};
    use crate::Norm;

    #[test]
    fn nesting_depth_grows_with_the_horizon() {
        let mut prev = 0.0;
        for exp in [7, 10, 13, 16, 20] {
            let x = solve_nesting_depth(4.0_f64.powi(exp)).unwrap();
            assert!(x > prev, "depth not increasing at 4^{exp}");
            prev = x;
        }
    }

    #[test]
    fn two_machine_tournament_is_one_job_per_round() {
        let mut params = AlgParams::new(Norm::Inf, 2);
        params.mu1 = 1.0;
        let mut naive = GreedyPolicy::naive(2, params);
        let run = tournament_counterexample(2, 8.0, 2.0, &mut naive).unwrap();
        assert_eq!(run.levels, 1);
        assert_eq!(run.instance.jobs.len(), run.j_star);
        let on = crate::objective(&run.instance, &run.assignment, Norm::Inf).unwrap();
        assert_eq!(on, run.j_star as f64);
    }
}
