//! Virtual-circuit routing of temporary connections: the same greedy
//! potential rule, with whole routes as choices and per-edge load vectors.
//!
//! The potential increment of a route couples its edges (it is not
//! edge-separable), so candidates are enumerated exhaustively as simple
//! paths. That is sound at desk scale and is why `max_len` exists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LoadLedger, INFEASIBLE};
use crate::norm::Norm;
use crate::policy::potential::{improves, WindowProfile};
use crate::policy::AlgParams;

/// Undirected multigraph with stable edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn triangle() -> Self {
        Graph {
            vertices: 3,
            edges: vec![(0, 1), (0, 2), (1, 2)],
        }
    }

    pub fn complete(vertices: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..vertices {
            for v in (u + 1)..vertices {
                edges.push((u, v));
            }
        }
        Graph { vertices, edges }
    }

    /// Two vertices joined by `m` parallel edges; routes are single edges,
    /// which makes the routing rule coincide with machine assignment.
    pub fn parallel(m: usize) -> Self {
        Graph {
            vertices: 2,
            edges: vec![(0, 1); m],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Graph = serde_json::from_str(text)?;
        for (idx, &(u, v)) in g.edges.iter().enumerate() {
            if u >= g.vertices || v >= g.vertices {
                return Err(Error::InvalidInstance(format!(
                    "edge {idx} endpoints ({u}, {v}) out of range"
                )));
            }
        }
        Ok(g)
    }
}

/// A temporary connection request.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingJob {
    pub id: usize,
    pub arrival: u64,
    pub duration: u64,
    pub predicted: f64,
    pub source: usize,
    pub target: usize,
    /// Load added to each edge the route uses; `INFEASIBLE` bars the edge.
    pub edge_loads: Vec<f64>,
}

impl RoutingJob {
    pub fn live_slots(&self) -> (u64, u64) {
        (self.arrival + 1, self.arrival + self.duration)
    }

    pub fn pseudo_slots(&self, mu1: f64) -> (u64, u64) {
        let span = crate::model::floored_span(mu1, self.predicted);
        (self.arrival + 1, self.arrival + span)
    }
}

/// All simple paths from `s` to `t` with at most `max_len` edges, in
/// lexicographic order of their edge index sequences. Empty when `s == t`
/// or the vertices are disconnected within the length budget.
pub fn enumerate_simple_paths(g: &Graph, s: usize, t: usize, max_len: usize) -> Vec<Vec<usize>> {
    if s == t || s >= g.vertices || t >= g.vertices {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut visited = vec![false; g.vertices];
    visited[s] = true;
    let mut path = Vec::new();
    dfs_paths(g, s, t, max_len, &mut visited, &mut path, &mut out);
    out
}

fn dfs_paths(
    g: &Graph,
    at: usize,
    t: usize,
    budget: usize,
    visited: &mut Vec<bool>,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if at == t {
        out.push(path.clone());
        return;
    }
    if budget == 0 {
        return;
    }
    for (idx, &(u, v)) in g.edges.iter().enumerate() {
        let next = if u == at && !visited[v] {
            v
        } else if v == at && !visited[u] {
            u
        } else {
            continue;
        };
        visited[next] = true;
        path.push(idx);
        dfs_paths(g, next, t, budget - 1, visited, path, out);
        path.pop();
        visited[next] = false;
    }
}

/// Candidate routes for a job: simple paths all of whose edges are feasible.
pub fn feasible_paths(g: &Graph, job: &RoutingJob, max_len: usize) -> Vec<Vec<usize>> {
    enumerate_simple_paths(g, job.source, job.target, max_len)
        .into_iter()
        .filter(|p| p.iter().all(|&e| job.edge_loads[e].is_finite()))
        .collect()
}

/// Pick the candidate route with the smallest potential increment over the
/// job's prediction window. Ties go to the earliest candidate.
pub fn routing_assign(
    pseudo: &LoadLedger,
    job: &RoutingJob,
    params: &AlgParams,
    candidates: &[Vec<usize>],
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::NoFeasibleRoute(job.id));
    }
    let (lo, hi) = job.pseudo_slots(params.mu1);
    let profile = WindowProfile::build(pseudo, lo, hi, job.edge_loads.iter().copied(), params.p);
    let (p, w) = (params.p, params.w());
    let mut best: Option<(usize, f64)> = None;
    for (idx, path) in candidates.iter().enumerate() {
        let adds: Vec<(usize, f64)> = path.iter().map(|&e| (e, job.edge_loads[e])).collect();
        let cost = profile.cost(p, w, &adds);
        match best {
            Some((_, bc)) if !improves(cost, bc) => {}
            _ => best = Some((idx, cost)),
        }
    }
    Ok(best.expect("candidates nonempty").0)
}

/// Online router: greedy potential rule over pseudo edge loads.
pub struct OnlineRouter {
    graph: Graph,
    params: AlgParams,
    max_len: usize,
    pseudo: LoadLedger,
}

impl OnlineRouter {
    pub fn new(graph: Graph, params: AlgParams, max_len: Option<usize>) -> Self {
        let max_len = max_len.unwrap_or(graph.vertices);
        let pseudo = LoadLedger::new(graph.edges.len());
        OnlineRouter {
            graph,
            params,
            max_len,
            pseudo,
        }
    }

    pub fn route(&mut self, job: &RoutingJob) -> Result<Vec<usize>> {
        let candidates = feasible_paths(&self.graph, job, self.max_len);
        let choice = routing_assign(&self.pseudo, job, &self.params, &candidates)?;
        let path = candidates[choice].clone();
        let (lo, hi) = job.pseudo_slots(self.params.mu1);
        for &e in &path {
            self.pseudo.add(e, lo, hi, job.edge_loads[e]);
        }
        Ok(path)
    }

    pub fn pseudo(&self) -> &LoadLedger {
        &self.pseudo
    }
}

#[derive(Debug, Clone)]
pub struct RoutingRun {
    pub paths: Vec<Vec<usize>>,
    pub objective: f64,
}

/// Route a whole sequence online and measure the realized edge-load norm.
pub fn run_routing(
    graph: &Graph,
    jobs: &[RoutingJob],
    params: &AlgParams,
    norm: Norm,
    max_len: Option<usize>,
) -> Result<RoutingRun> {
    let mut router = OnlineRouter::new(graph.clone(), params.clone(), max_len);
    let mut paths = Vec::with_capacity(jobs.len());
    for job in jobs {
        paths.push(router.route(job)?);
    }
    let objective = routing_objective(graph, jobs, &paths, norm)?;
    Ok(RoutingRun { paths, objective })
}

/// `max_t ||ℓ(t)||` of the realized per-edge loads under fixed routes.
pub fn routing_objective(
    graph: &Graph,
    jobs: &[RoutingJob],
    paths: &[Vec<usize>],
    norm: Norm,
) -> Result<f64> {
    if jobs.is_empty() {
        return Ok(0.0);
    }
    let mut ledger = LoadLedger::new(graph.edges.len());
    let mut horizon = 0;
    for job in jobs {
        let path = paths.get(job.id).ok_or(Error::Unassigned(job.id))?;
        for &e in path {
            if !job.edge_loads[e].is_finite() {
                return Err(Error::InfeasibleAssignment {
                    job: job.id,
                    machine: e,
                });
            }
        }
        let (lo, hi) = job.live_slots();
        for &e in path {
            ledger.add(e, lo, hi, job.edge_loads[e]);
        }
        horizon = horizon.max(hi);
    }
    let mut best = 0.0_f64;
    for (start, _) in ledger.segments_in(1, horizon) {
        best = best.max(norm.evaluate(&ledger.vector_at(start))?);
    }
    Ok(best)
}

// --- JSON file format -------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RoutingJobFile {
    arrival: u64,
    duration: u64,
    predicted: f64,
    source: usize,
    target: usize,
    edge_loads: Vec<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RoutingJobsFile {
    jobs: Vec<RoutingJobFile>,
}

fn edge_load_to_json(l: f64) -> serde_json::Value {
    if l.is_finite() {
        serde_json::json!(l)
    } else {
        serde_json::json!("inf")
    }
}

fn edge_load_from_json(v: &serde_json::Value) -> Result<f64> {
    match v {
        serde_json::Value::Number(n) => Ok(n.as_f64().unwrap_or(f64::NAN)),
        serde_json::Value::String(s) if s.eq_ignore_ascii_case("inf") => Ok(INFEASIBLE),
        other => Err(Error::InvalidInstance(format!("bad edge load {other}"))),
    }
}

pub fn routing_jobs_to_json(jobs: &[RoutingJob]) -> String {
    let file = RoutingJobsFile {
        jobs: jobs
            .iter()
            .map(|j| RoutingJobFile {
                arrival: j.arrival,
                duration: j.duration,
                predicted: j.predicted,
                source: j.source,
                target: j.target,
                edge_loads: j.edge_loads.iter().map(|&l| edge_load_to_json(l)).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("routing jobs serialization cannot fail")
}

pub fn routing_jobs_from_json(text: &str, graph: &Graph) -> Result<Vec<RoutingJob>> {
    let file: RoutingJobsFile = serde_json::from_str(text)?;
    let mut jobs = Vec::with_capacity(file.jobs.len());
    for (id, j) in file.jobs.into_iter().enumerate() {
        if j.source >= graph.vertices || j.target >= graph.vertices || j.source == j.target {
            return Err(Error::InvalidInstance(format!(
                "job {id}: bad endpoints ({}, {})",
                j.source, j.target
            )));
        }
        if j.edge_loads.len() != graph.edges.len() {
            return Err(Error::InvalidInstance(format!(
                "job {id}: {} edge loads for {} edges",
                j.edge_loads.len(),
                graph.edges.len()
            )));
        }
        if j.duration == 0 || j.predicted < 1.0 || j.predicted.is_nan() {
            return Err(Error::InvalidInstance(format!("job {id}: bad durations")));
        }
        let edge_loads = j
            .edge_loads
            .iter()
            .map(edge_load_from_json)
            .collect::<Result<Vec<_>>>()?;
        jobs.push(RoutingJob {
            id,
            arrival: j.arrival,
            duration: j.duration,
            predicted: j.predicted,
            source: j.source,
            target: j.target,
            edge_loads,
        });
    }
    jobs.sort_by_key(|j| j.arrival);
    for (id, j) in jobs.iter_mut().enumerate() {
        j.id = id;
    }
    Ok(jobs)
}
