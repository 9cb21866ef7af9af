//! Seeded random instances covering the parameter regimes the guarantees
//! quantify over.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, JobDraft, INFEASIBLE};
use crate::routing::{Graph, RoutingJob};

/// The reproducible RNG used throughout; all randomness flows from a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Knobs for random machine instances.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub jobs: usize,
    pub machines: usize,
    /// Arrivals are uniform over `[0, horizon)`.
    pub horizon: u64,
    /// Durations are log-uniform over `[1, d_max]`.
    pub d_max: u64,
    /// Prediction error bounds: `d̃/d` is log-uniform over `[1/mu1, mu2]`.
    pub mu1: f64,
    pub mu2: f64,
    pub load_min: f64,
    pub load_max: f64,
    pub infeasible_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            jobs: 8,
            machines: 3,
            horizon: 16,
            d_max: 8,
            mu1: 2.0,
            mu2: 2.0,
            load_min: 0.1,
            load_max: 10.0,
            infeasible_prob: 0.15,
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

pub fn random_instance(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Instance {
    let mut drafts = Vec::with_capacity(cfg.jobs);
    for _ in 0..cfg.jobs {
        let arrival = rng.gen_range(0..cfg.horizon.max(1));
        let duration = log_uniform(rng, 1.0, cfg.d_max.max(1) as f64).floor() as u64;
        let duration = duration.clamp(1, cfg.d_max.max(1));
        let factor = log_uniform(rng, 1.0 / cfg.mu1, cfg.mu2);
        let predicted = (duration as f64 * factor).max(1.0);
        let mut loads: Vec<f64> = (0..cfg.machines)
            .map(|_| {
                if rng.gen_bool(cfg.infeasible_prob) {
                    INFEASIBLE
                } else {
                    rng.gen_range(cfg.load_min..cfg.load_max)
                }
            })
            .collect();
        if !loads.iter().any(|l| l.is_finite()) {
            let idx = rng.gen_range(0..cfg.machines);
            loads[idx] = rng.gen_range(cfg.load_min..cfg.load_max);
        }
        drafts.push(JobDraft {
            arrival,
            duration,
            predicted,
            loads,
        });
    }
    Instance::from_drafts(cfg.machines, drafts).expect("generated drafts are valid")
}

/// Random routing jobs on a fixed graph; durations and predictions follow the
/// same scheme as machine instances.
pub fn random_routing_jobs(
    graph: &Graph,
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<RoutingJob> {
    let mut jobs = Vec::with_capacity(cfg.jobs);
    for id in 0..cfg.jobs {
        let source = rng.gen_range(0..graph.vertices);
        let mut target = rng.gen_range(0..graph.vertices);
        while target == source {
            target = rng.gen_range(0..graph.vertices);
        }
        let arrival = rng.gen_range(0..cfg.horizon.max(1));
        let duration = log_uniform(rng, 1.0, cfg.d_max.max(1) as f64).floor() as u64;
        let duration = duration.clamp(1, cfg.d_max.max(1));
        let factor = log_uniform(rng, 1.0 / cfg.mu1, cfg.mu2);
        let predicted = (duration as f64 * factor).max(1.0);
        let edge_loads: Vec<f64> = (0..graph.edges.len())
            .map(|_| {
                if rng.gen_bool(cfg.infeasible_prob) {
                    INFEASIBLE
                } else {
                    rng.gen_range(cfg.load_min..cfg.load_max)
                }
            })
            .collect();
        jobs.push(RoutingJob {
            id,
            arrival,
            duration,
            predicted,
            source,
            target,
            edge_loads,
        });
    }
    jobs.sort_by_key(|j| j.arrival);
    for (id, j) in jobs.iter_mut().enumerate() {
        j.id = id;
    }
    jobs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn respects_declared_distortion() {
        let cfg = GeneratorConfig {
            jobs: 40,
            mu1: 3.0,
            mu2: 2.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let inst = random_instance(&cfg, &mut rng);
            let d = inst.distortion();
            assert!(d.mu1 <= cfg.mu1 + 1e-9, "mu1 {} too large", d.mu1);
            assert!(d.mu2 <= cfg.mu2 + 1e-9, "mu2 {} too large", d.mu2);
            for j in &inst.jobs {
                assert!(j.duration >= 1 && j.duration <= cfg.d_max);
                assert!(j.predicted >= 1.0);
            }
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let cfg = GeneratorConfig::default();
        let a = random_instance(&cfg, &mut ChaCha8Rng::seed_from_u64(42));
        let b = random_instance(&cfg, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }
}
