//! Wrapper-level invariants: copies partition the jobs, their load vectors
//! sum to the global one, and blocking groups respect the departure bound.

use tempoload::generator::{random_instance, seeded_rng, GeneratorConfig};
use tempoload::model::LoadLedger;
use tempoload::{build_policy, run_online, AlgParams, Instance, Norm, PolicyName, PolicySpec};

fn spot_instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|i| {
            let cfg = GeneratorConfig {
                jobs: 2 + i % 8,
                machines: 2 + i % 3,
                horizon: 12,
                d_max: 8,
                mu1: 3.0,
                mu2: 2.0,
                infeasible_prob: 0.2,
                ..GeneratorConfig::default()
            };
            random_instance(&cfg, &mut rng)
        })
        .collect()
}

fn assert_copies_sum_to_whole(inst: &Instance, spec: &PolicySpec) {
    let norm = Norm::P(2.0);
    let params = AlgParams::for_instance(norm, inst);
    let mut policy = build_policy(spec, inst.machines, &params).unwrap();
    let run = run_online(policy.as_mut(), inst, norm).unwrap();
    let log = policy.copy_log().expect("wrappers report their copies");
    assert_eq!(log.len(), inst.jobs.len());

    let whole = LoadLedger::real_from(inst, &run.assignment).unwrap();
    let copies = log.iter().map(|(_, c)| *c).max().map_or(0, |c| c + 1);
    let mut partial = vec![LoadLedger::new(inst.machines); copies];
    for &(job_id, copy) in &log {
        let job = &inst.jobs[job_id];
        let (lo, hi) = job.live_slots();
        partial[copy].add(
            run.assignment[job_id],
            lo,
            hi,
            job.loads[run.assignment[job_id]],
        );
    }
    let horizon = inst.horizon();
    for (slot, _) in whole.segments_in(1, horizon) {
        for m in 0..inst.machines {
            let sum: f64 = partial.iter().map(|l| l.value(m, slot)).sum();
            let total = whole.value(m, slot);
            assert!(
                (sum - total).abs() <= 1e-9 * total.abs().max(1.0),
                "copy loads do not add up at slot {slot}"
            );
        }
    }
}

#[test]
fn doubling_copies_partition_the_load() {
    for inst in spot_instances(21, 60) {
        let spec = PolicySpec {
            name: PolicyName::GreedyLp,
            doubling: true,
            blocking: false,
            lambda_doubling: false,
        };
        assert_copies_sum_to_whole(&inst, &spec);
    }
}

#[test]
fn blocking_copies_partition_the_load() {
    for inst in spot_instances(22, 60) {
        let spec = PolicySpec {
            name: PolicyName::GreedyLp,
            doubling: false,
            blocking: true,
            lambda_doubling: false,
        };
        assert_copies_sum_to_whole(&inst, &spec);
    }
}

#[test]
fn stacked_wrappers_partition_the_load() {
    for inst in spot_instances(23, 40) {
        let spec = PolicySpec {
            name: PolicyName::GreedyLp,
            doubling: true,
            blocking: true,
            lambda_doubling: false,
        };
        assert_copies_sum_to_whole(&inst, &spec);
    }
}

#[test]
fn lambda_doubling_copies_partition_the_load() {
    for inst in spot_instances(24, 60) {
        let spec = PolicySpec {
            name: PolicyName::LinfExp,
            doubling: false,
            blocking: false,
            lambda_doubling: true,
        };
        assert_copies_sum_to_whole(&inst, &spec);
    }
}

#[test]
fn blocking_groups_outlive_no_two_spans() {
    // With truthful hints a job departs within one span of its arrival
    // window's end, so at any slot at most two groups are still live.
    for inst in spot_instances(25, 100) {
        let dist = inst.distortion();
        let span = dist.mu1 * dist.d_tilde_max.max(1.0);
        for job in &inst.jobs {
            let group = (job.arrival as f64 / span).floor();
            assert!(
                (job.departs_at() as f64) <= (group + 2.0) * span + 1e-9,
                "job {} outlives its group successor window",
                job.id
            );
        }
    }
}
