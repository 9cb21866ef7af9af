//! Exact offline optimum by depth-first branch and bound over assignments,
//! evaluated only at load change points. Ground truth for competitive ratios
//! at desk scale.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, Job};
use crate::norm::Norm;
use crate::policy::{run_online, OnlinePolicy};
use crate::routing::{enumerate_simple_paths, Graph, RoutingJob};

/// Refuse instances above this many jobs unless the caller overrides.
pub const DEFAULT_JOB_LIMIT: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub assignment: Assignment,
    pub nodes: u64,
    pub optimal: bool,
}

/// Piecewise-constant timeline shared by the searches: segment `i` starts at
/// `starts[i]` and runs to the next start (or the horizon).
struct Timeline {
    starts: Vec<u64>,
}

impl Timeline {
    fn new(windows: impl Iterator<Item = (u64, u64)>) -> Self {
        let mut starts: Vec<u64> = Vec::new();
        for (lo, hi) in windows {
            starts.push(lo);
            starts.push(hi + 1);
        }
        starts.sort_unstable();
        starts.dedup();
        Timeline { starts }
    }

    /// Segment index range `[lo_idx, hi_idx]` covering slot window `[lo, hi]`.
    fn span(&self, lo: u64, hi: u64) -> (usize, usize) {
        let lo_idx = self.starts.partition_point(|s| *s < lo);
        let hi_idx = self.starts.partition_point(|s| *s <= hi) - 1;
        (lo_idx, hi_idx)
    }

    fn len(&self) -> usize {
        self.starts.len()
    }
}

struct AssignSearch<'a> {
    jobs: &'a [Job],
    machines: usize,
    norm: Norm,
    spans: Vec<(usize, usize)>,
    loads: Vec<Vec<f64>>,
    norms: Vec<f64>,
    best_value: f64,
    best_assignment: Assignment,
    nodes: u64,
}

impl<'a> AssignSearch<'a> {
    fn run(mut self) -> OracleResult {
        let mut partial = vec![0usize; self.jobs.len()];
        self.dfs(0, 0.0, &mut partial);
        OracleResult {
            value: if self.jobs.is_empty() {
                0.0
            } else {
                self.best_value
            },
            assignment: self.best_assignment.clone(),
            nodes: self.nodes,
            optimal: true,
        }
    }

    fn dfs(&mut self, idx: usize, current_max: f64, partial: &mut Vec<usize>) {
        if idx == self.jobs.len() {
            if current_max < self.best_value {
                self.best_value = current_max;
                self.best_assignment = partial.clone();
            }
            return;
        }
        let job = &self.jobs[idx];
        let (seg_lo, seg_hi) = self.spans[idx];
        for machine in 0..self.machines {
            let load = job.loads[machine];
            if !load.is_finite() {
                continue;
            }
            self.nodes += 1;
            let mut new_max = current_max;
            let mut saved = Vec::with_capacity(seg_hi - seg_lo + 1);
            for seg in seg_lo..=seg_hi {
                saved.push((self.norms[seg], self.loads[seg][machine]));
                self.loads[seg][machine] += load;
                let n = self
                    .norm
                    .evaluate(&self.loads[seg])
                    .expect("nonnegative loads");
                self.norms[seg] = n;
                new_max = new_max.max(n);
            }
            // Adding jobs never lowers any slot norm, so a partial maximum
            // at or above the incumbent cannot improve.
            if new_max < self.best_value {
                partial[job.id] = machine;
                self.dfs(idx + 1, new_max, partial);
            }
            for (offset, seg) in (seg_lo..=seg_hi).enumerate() {
                let (norm, load_before) = saved[offset];
                self.loads[seg][machine] = load_before;
                self.norms[seg] = norm;
            }
        }
    }
}

/// Exact minimizer of the time-maximum norm over all feasible assignments.
/// Ties resolve to the lexicographically smallest assignment vector.
pub fn opt_assign(inst: &Instance, norm: Norm, limit: Option<usize>) -> Result<OracleResult> {
    let limit = limit.unwrap_or(DEFAULT_JOB_LIMIT);
    if inst.jobs.len() > limit {
        return Err(Error::OracleRefusal {
            jobs: inst.jobs.len(),
            limit,
        });
    }
    let timeline = Timeline::new(inst.jobs.iter().map(Job::live_slots));
    let spans = inst
        .jobs
        .iter()
        .map(|j| {
            let (lo, hi) = j.live_slots();
            timeline.span(lo, hi)
        })
        .collect();
    let search = AssignSearch {
        jobs: &inst.jobs,
        machines: inst.machines,
        norm,
        spans,
        loads: vec![vec![0.0; inst.machines]; timeline.len()],
        norms: vec![0.0; timeline.len()],
        best_value: f64::INFINITY,
        best_assignment: vec![0; inst.jobs.len()],
        nodes: 0,
    };
    Ok(search.run())
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteOracleResult {
    pub value: f64,
    pub paths: Vec<Vec<usize>>,
    pub nodes: u64,
    pub optimal: bool,
}

struct RouteSearch<'a> {
    jobs: &'a [RoutingJob],
    norm: Norm,
    candidates: &'a [Vec<Vec<usize>>],
    spans: Vec<(usize, usize)>,
    loads: Vec<Vec<f64>>,
    norms: Vec<f64>,
    best_value: f64,
    best_choice: Vec<usize>,
    nodes: u64,
}

impl<'a> RouteSearch<'a> {
    fn dfs(&mut self, idx: usize, current_max: f64, partial: &mut Vec<usize>) {
        if idx == self.jobs.len() {
            if current_max < self.best_value {
                self.best_value = current_max;
                self.best_choice = partial.clone();
            }
            return;
        }
        let job = &self.jobs[idx];
        let (seg_lo, seg_hi) = self.spans[idx];
        for (choice, path) in self.candidates[idx].iter().enumerate() {
            self.nodes += 1;
            let mut new_max = current_max;
            let mut saved = Vec::with_capacity(seg_hi - seg_lo + 1);
            for seg in seg_lo..=seg_hi {
                let before: Vec<f64> = path.iter().map(|&e| self.loads[seg][e]).collect();
                saved.push((self.norms[seg], before));
                for &e in path {
                    self.loads[seg][e] += job.edge_loads[e];
                }
                let n = self
                    .norm
                    .evaluate(&self.loads[seg])
                    .expect("nonnegative loads");
                self.norms[seg] = n;
                new_max = new_max.max(n);
            }
            if new_max < self.best_value {
                partial[idx] = choice;
                self.dfs(idx + 1, new_max, partial);
            }
            for (offset, seg) in (seg_lo..=seg_hi).enumerate() {
                let (norm, before) = &saved[offset];
                for (slot, &e) in path.iter().enumerate() {
                    self.loads[seg][e] = before[slot];
                }
                self.norms[seg] = *norm;
            }
        }
    }
}

/// Exact optimum over the cross-product of feasible simple routes per job.
pub fn opt_route(
    graph: &Graph,
    jobs: &[RoutingJob],
    norm: Norm,
    max_len: Option<usize>,
    limit: Option<usize>,
) -> Result<RouteOracleResult> {
    let limit = limit.unwrap_or(DEFAULT_JOB_LIMIT);
    if jobs.len() > limit {
        return Err(Error::OracleRefusal {
            jobs: jobs.len(),
            limit,
        });
    }
    let max_len = max_len.unwrap_or(graph.vertices);
    let mut candidates = Vec::with_capacity(jobs.len());
    for job in jobs {
        let feasible: Vec<Vec<usize>> =
            enumerate_simple_paths(graph, job.source, job.target, max_len)
                .into_iter()
                .filter(|p| p.iter().all(|&e| job.edge_loads[e].is_finite()))
                .collect();
        if feasible.is_empty() {
            return Err(Error::NoFeasibleRoute(job.id));
        }
        candidates.push(feasible);
    }
    let timeline = Timeline::new(jobs.iter().map(|j| (j.arrival + 1, j.arrival + j.duration)));
    let spans = jobs
        .iter()
        .map(|j| timeline.span(j.arrival + 1, j.arrival + j.duration))
        .collect();
    let mut search = RouteSearch {
        jobs,
        norm,
        candidates: &candidates,
        spans,
        loads: vec![vec![0.0; graph.edges.len()]; timeline.len()],
        norms: vec![0.0; timeline.len()],
        best_value: f64::INFINITY,
        best_choice: vec![0; jobs.len()],
        nodes: 0,
    };
    let mut partial = vec![0usize; jobs.len()];
    search.dfs(0, 0.0, &mut partial);
    let paths = search
        .best_choice
        .iter()
        .enumerate()
        .map(|(i, &c)| candidates[i][c].clone())
        .collect();
    Ok(RouteOracleResult {
        value: if jobs.is_empty() {
            0.0
        } else {
            search.best_value
        },
        paths,
        nodes: search.nodes,
        optimal: true,
    })
}

/// Realized objective of an online run divided by the exact optimum.
pub fn competitive_ratio(
    policy: &mut dyn OnlinePolicy,
    inst: &Instance,
    norm: Norm,
    limit: Option<usize>,
) -> Result<f64> {
    let run = run_online(policy, inst, norm)?;
    let opt = opt_assign(inst, norm, limit)?;
    if opt.value == 0.0 {
        return Ok(1.0);
    }
    Ok(run.objective / opt.value)
}
