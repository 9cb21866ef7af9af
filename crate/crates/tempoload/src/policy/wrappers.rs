//! Wrapper policies that remove the advance-knowledge assumptions by
//! restarting fresh copies of an inner policy when observations outgrow the
//! current parameter guesses.

use std::collections::HashMap;

use crate::error::Result;
use crate::policy::{AlgParams, ArrivingJob, OnlinePolicy, PolicyFactory};

/// Guesses `μ1` and `D̃` online. Copy 1 starts at `μ1 = 1`, `D̃ = 2^p`; when
/// the observed values exceed the current guesses, a fresh copy opens with
/// `μ1 ← 2·μ1_obs` and `D̃ ← D̃_obs²·μ1`, and all later jobs go to it.
pub struct DoublingWrapper {
    base: AlgParams,
    factory: PolicyFactory,
    copies: Vec<Box<dyn OnlinePolicy>>,
    mu1_guess: f64,
    d_tilde_guess: f64,
    obs_mu1: f64,
    obs_mu2: f64,
    obs_d_tilde: f64,
    /// Active jobs: id → (arrival, predicted).
    active: HashMap<usize, (u64, f64)>,
    owner: HashMap<usize, usize>,
    log: Vec<(usize, usize)>,
}

impl DoublingWrapper {
    pub fn new(base: AlgParams, factory: PolicyFactory) -> Self {
        let mu1_guess = 1.0;
        let d_tilde_guess = 2.0_f64.powf(base.p);
        let first = AlgParams {
            mu1: mu1_guess,
            d_tilde: d_tilde_guess,
            mu: 1.0,
            ..base.clone()
        };
        let copies = vec![factory(&first)];
        DoublingWrapper {
            base,
            factory,
            copies,
            mu1_guess,
            d_tilde_guess,
            obs_mu1: 1.0,
            obs_mu2: 1.0,
            obs_d_tilde: 1.0,
            active: HashMap::new(),
            owner: HashMap::new(),
            log: Vec::new(),
        }
    }

    pub fn copies_opened(&self) -> usize {
        self.copies.len()
    }

    pub fn current_guesses(&self) -> (f64, f64) {
        (self.mu1_guess, self.d_tilde_guess)
    }
}

impl OnlinePolicy for DoublingWrapper {
    fn on_arrival(&mut self, job: &ArrivingJob<'_>) -> Result<usize> {
        self.obs_d_tilde = self.obs_d_tilde.max(job.predicted);
        // A still-active job must run strictly longer than its elapsed time.
        for (arrival, predicted) in self.active.values() {
            let elapsed_bound = (job.arrival - arrival + 1) as f64;
            self.obs_mu1 = self.obs_mu1.max(elapsed_bound / predicted);
        }
        if self.obs_mu1 > self.mu1_guess || self.obs_d_tilde > self.d_tilde_guess {
            self.mu1_guess = 2.0 * self.obs_mu1;
            self.d_tilde_guess = self.obs_d_tilde * self.obs_d_tilde * self.mu1_guess;
            let params = AlgParams {
                mu1: self.mu1_guess,
                d_tilde: self.d_tilde_guess,
                mu: self.mu1_guess * self.obs_mu2,
                ..self.base.clone()
            };
            self.copies.push((self.factory)(&params));
        }
        self.active.insert(job.id, (job.arrival, job.predicted));
        let idx = self.copies.len() - 1;
        let machine = self.copies[idx].on_arrival(job)?;
        self.owner.insert(job.id, idx);
        self.log.push((job.id, idx));
        Ok(machine)
    }

    fn on_departure(&mut self, job_id: usize, slot: u64) {
        if let Some((arrival, predicted)) = self.active.remove(&job_id) {
            let duration = (slot - arrival) as f64;
            self.obs_mu1 = self.obs_mu1.max(duration / predicted);
            self.obs_mu2 = self.obs_mu2.max(predicted / duration);
        }
        if let Some(&idx) = self.owner.get(&job_id) {
            self.copies[idx].on_departure(job_id, slot);
        }
    }

    fn estimation_only(&self) -> bool {
        false
    }

    fn copy_log(&self) -> Option<Vec<(usize, usize)>> {
        Some(self.log.clone())
    }
}

/// Partitions arrivals into groups of span `T̃/2 = μ1·D̃` and hands each
/// group to an independent fresh copy. At any slot at most two groups still
/// have live jobs.
pub struct BlockingWrapper {
    params: AlgParams,
    factory: PolicyFactory,
    group_span: f64,
    groups: Vec<(u64, usize)>,
    copies: Vec<Box<dyn OnlinePolicy>>,
    owner: HashMap<usize, usize>,
    log: Vec<(usize, usize)>,
    inner_estimation_only: bool,
}

impl BlockingWrapper {
    pub fn new(params: AlgParams, factory: PolicyFactory, inner_estimation_only: bool) -> Self {
        let group_span = params.mu1 * params.d_tilde;
        BlockingWrapper {
            params,
            factory,
            group_span,
            groups: Vec::new(),
            copies: Vec::new(),
            owner: HashMap::new(),
            log: Vec::new(),
            inner_estimation_only,
        }
    }

    fn group_of(&self, arrival: u64) -> u64 {
        (arrival as f64 / self.group_span).floor() as u64
    }

    pub fn copies_opened(&self) -> usize {
        self.copies.len()
    }
}

impl OnlinePolicy for BlockingWrapper {
    fn on_arrival(&mut self, job: &ArrivingJob<'_>) -> Result<usize> {
        let group = self.group_of(job.arrival);
        let idx = match self.groups.iter().find(|(g, _)| *g == group) {
            Some(&(_, idx)) => idx,
            None => {
                self.copies.push((self.factory)(&self.params));
                let idx = self.copies.len() - 1;
                self.groups.push((group, idx));
                idx
            }
        };
        let machine = self.copies[idx].on_arrival(job)?;
        self.owner.insert(job.id, idx);
        self.log.push((job.id, idx));
        Ok(machine)
    }

    fn on_departure(&mut self, job_id: usize, slot: u64) {
        if let Some(&idx) = self.owner.get(&job_id) {
            self.copies[idx].on_departure(job_id, slot);
        }
    }

    fn estimation_only(&self) -> bool {
        self.inner_estimation_only
    }

    fn copy_log(&self) -> Option<Vec<(usize, usize)>> {
        Some(self.log.clone())
    }
}

/// Guesses the optimum normalizer `Λ` for the exponential rule from running
/// lower bounds on the offline optimum, restarting with `Λ ← 2·LB` whenever
/// the bound overtakes the current guess.
///
/// The bound is the larger of the heaviest unavoidable single placement
/// `max_j min_i p_ij` and the per-slot average `Σ_{alive} min_i p_ij / m`.
pub struct LambdaDoublingWrapper {
    machines: usize,
    base: AlgParams,
    factory: PolicyFactory,
    copies: Vec<Box<dyn OnlinePolicy>>,
    lambda: f64,
    lower_bound: f64,
    singleton_bound: f64,
    alive_sum: f64,
    alive: HashMap<usize, f64>,
    owner: HashMap<usize, usize>,
    log: Vec<(usize, usize)>,
}

impl LambdaDoublingWrapper {
    pub fn new(machines: usize, base: AlgParams, factory: PolicyFactory) -> Self {
        LambdaDoublingWrapper {
            machines,
            base,
            factory,
            copies: Vec::new(),
            lambda: 0.0,
            lower_bound: 0.0,
            singleton_bound: 0.0,
            alive_sum: 0.0,
            alive: HashMap::new(),
            owner: HashMap::new(),
            log: Vec::new(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn copies_opened(&self) -> usize {
        self.copies.len()
    }

    fn spawn(&mut self) {
        let params = AlgParams {
            lambda: self.lambda,
            ..self.base.clone()
        };
        self.copies.push((self.factory)(&params));
    }
}

impl OnlinePolicy for LambdaDoublingWrapper {
    fn on_arrival(&mut self, job: &ArrivingJob<'_>) -> Result<usize> {
        let min_load = job.min_finite_load().unwrap_or(0.0);
        self.singleton_bound = self.singleton_bound.max(min_load);
        self.alive_sum += min_load;
        self.alive.insert(job.id, min_load);
        self.lower_bound = self
            .lower_bound
            .max(self.singleton_bound)
            .max(self.alive_sum / self.machines as f64);

        if self.copies.is_empty() {
            self.lambda = self.lower_bound;
            self.spawn();
        } else if self.lower_bound > self.lambda {
            self.lambda = 2.0 * self.lower_bound;
            self.spawn();
        }
        let idx = self.copies.len() - 1;
        let machine = self.copies[idx].on_arrival(job)?;
        self.owner.insert(job.id, idx);
        self.log.push((job.id, idx));
        Ok(machine)
    }

    fn on_departure(&mut self, job_id: usize, slot: u64) {
        if let Some(min_load) = self.alive.remove(&job_id) {
            self.alive_sum -= min_load;
        }
        if let Some(&idx) = self.owner.get(&job_id) {
            self.copies[idx].on_departure(job_id, slot);
        }
    }

    fn estimation_only(&self) -> bool {
        false
    }

    fn copy_log(&self) -> Option<Vec<(usize, usize)>> {
        Some(self.log.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Norm;
    use crate::policy::{GreedyPolicy, LinfPolicy};
    use std::rc::Rc;

    fn greedy_factory(machines: usize) -> PolicyFactory {
        Rc::new(move |p: &AlgParams| {
            Box::new(GreedyPolicy::new(machines, p.clone())) as Box<dyn OnlinePolicy>
        })
    }

    fn job<'a>(id: usize, arrival: u64, predicted: f64, loads: &'a [f64]) -> ArrivingJob<'a> {
        ArrivingJob {
            id,
            arrival,
            predicted,
            loads,
        }
    }

    #[test]
    fn doubling_stays_on_one_copy_when_guesses_hold() {
        let mut base = AlgParams::new(Norm::P(1.0), 2);
        base.p = 1.0;
        let mut w = DoublingWrapper::new(base, greedy_factory(2));
        // D̃_1 = 2^1 = 2: estimates ≤ 2 with no late departures never trigger.
        let loads = [1.0, 1.0];
        for i in 0..5 {
            w.on_arrival(&job(i, i as u64, 2.0, &loads)).unwrap();
            w.on_departure(i, i as u64 + 1);
        }
        assert_eq!(w.copies_opened(), 1);
    }

    #[test]
    fn doubling_reacts_to_large_estimate() {
        let mut base = AlgParams::new(Norm::P(1.0), 2);
        base.p = 1.0;
        let mut w = DoublingWrapper::new(base, greedy_factory(2));
        let loads = [1.0, 1.0];
        // p = 1 gives D̃_1 = 2; an estimate of 4 forces copy 2 with
        // μ1 = 2·1 and D̃ = 4²·2 = 32.
        w.on_arrival(&job(0, 0, 4.0, &loads)).unwrap();
        assert_eq!(w.copies_opened(), 2);
        assert_eq!(w.current_guesses(), (2.0, 32.0));
    }

    #[test]
    fn doubling_reacts_to_late_departure() {
        let mut base = AlgParams::new(Norm::P(1.0), 2);
        base.p = 1.0;
        let mut w = DoublingWrapper::new(base, greedy_factory(2));
        let loads = [1.0, 1.0];
        w.on_arrival(&job(0, 0, 2.0, &loads)).unwrap();
        // Departs after 6 slots with d̃ = 2: observed μ1 = 3, guess becomes 6.
        w.on_departure(0, 6);
        w.on_arrival(&job(1, 6, 2.0, &loads)).unwrap();
        assert_eq!(w.current_guesses().0, 6.0);
        assert_eq!(w.copies_opened(), 2);
    }

    #[test]
    fn blocking_groups_by_arrival_interval() {
        let mut params = AlgParams::new(Norm::P(1.0), 2);
        params.mu1 = 2.0;
        params.d_tilde = 4.0; // T̃/2 = 8
        let mut w = BlockingWrapper::new(params, greedy_factory(2), true);
        let loads = [1.0, 1.0];
        w.on_arrival(&job(0, 0, 1.0, &loads)).unwrap();
        w.on_arrival(&job(1, 7, 1.0, &loads)).unwrap();
        assert_eq!(w.copies_opened(), 1);
        w.on_arrival(&job(2, 8, 1.0, &loads)).unwrap();
        assert_eq!(w.copies_opened(), 2);
    }

    #[test]
    fn lambda_initialized_from_first_job() {
        let factory: PolicyFactory = Rc::new(move |p: &AlgParams| {
            Box::new(LinfPolicy::new(2, p.clone())) as Box<dyn OnlinePolicy>
        });
        let mut base = AlgParams::new(Norm::Inf, 2);
        base.mu = 2.0;
        let mut w = LambdaDoublingWrapper::new(2, base, factory);
        w.on_arrival(&job(0, 0, 1.0, &[3.0, 5.0])).unwrap();
        assert_eq!(w.lambda(), 3.0);
        assert_eq!(w.copies_opened(), 1);
    }

    #[test]
    fn lambda_restarts_once_when_bound_doubles() {
        let factory: PolicyFactory = Rc::new(move |p: &AlgParams| {
            Box::new(LinfPolicy::new(2, p.clone())) as Box<dyn OnlinePolicy>
        });
        let mut base = AlgParams::new(Norm::Inf, 2);
        base.mu = 2.0;
        let mut w = LambdaDoublingWrapper::new(2, base, factory);
        w.on_arrival(&job(0, 0, 1.0, &[1.0, 1.0])).unwrap();
        w.on_arrival(&job(1, 0, 1.0, &[4.0, 4.0])).unwrap();
        assert_eq!(w.copies_opened(), 2);
        assert_eq!(w.lambda(), 8.0);
        // A third job below the bound does not restart again.
        w.on_arrival(&job(2, 1, 1.0, &[1.0, 1.0])).unwrap();
        assert_eq!(w.copies_opened(), 2);
    }

    #[test]
    fn per_slot_bound_sees_overlapping_jobs() {
        let factory: PolicyFactory = Rc::new(move |p: &AlgParams| {
            Box::new(LinfPolicy::new(4, p.clone())) as Box<dyn OnlinePolicy>
        });
        let mut base = AlgParams::new(Norm::Inf, 4);
        base.mu = 1.0;
        let mut w = LambdaDoublingWrapper::new(4, base, factory);
        // Four unit jobs feasible on one machine only, all overlapping: the
        // per-slot average reaches 4/4 = 1.
        let loads = [1.0, f64::INFINITY, f64::INFINITY, f64::INFINITY];
        for i in 0..4 {
            w.on_arrival(&job(i, 0, 4.0, &loads)).unwrap();
        }
        assert!(w.lower_bound() >= 1.0);
    }
}
