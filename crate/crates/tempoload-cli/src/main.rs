//! Command-line front end: simulation runs, instance generation, adversary
//! battles, estimation-price sweeps, ratio tables, and routing runs.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 oracle refusal.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tempoload::adversary::{
    distortion_adversary, estimation_only_adversary, horizon_adversary, tournament_counterexample,
    Transcript,
};
use tempoload::generator::{random_instance, seeded_rng, GeneratorConfig};
use tempoload::oracle::{opt_assign, opt_route};
use tempoload::poe::{evaluate_poe, j_star_bounds, poe_lower_instance, time_points};
use tempoload::routing::{routing_jobs_from_json, routing_objective, run_routing, Graph};
use tempoload::{
    build_policy, objective, run_online, AlgParams, Instance, Norm, PolicyName, PolicySpec,
};

mod svg;

#[derive(Parser)]
#[command(
    name = "tempoload",
    about = "Online load balancing of temporary tasks with duration estimates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy on one instance and emit the load trace.
    Run(RunArgs),
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Play an adaptive adversary against a policy and emit the transcript.
    Adversary(AdversaryArgs),
    /// Sweep the estimation-price time points and worst-case ratios.
    Poe(PoeArgs),
    /// Tabulate ON/OPT ratios for policies over an instance corpus.
    Ratio(RatioArgs),
    /// Route connection requests on a graph.
    Route(RouteArgs),
}

#[derive(Args, Clone)]
struct PolicyArgs {
    /// greedy-lp | linf-exp | naive | round-robin
    #[arg(long, default_value = "greedy-lp")]
    policy: String,
    /// Norm: a real ≥ 1 or "inf".
    #[arg(long, default_value = "inf")]
    norm: String,
    /// Underestimation hint; defaults to the instance's true factor.
    #[arg(long)]
    mu1: Option<f64>,
    /// Estimate ceiling hint; defaults to the instance's largest estimate.
    #[arg(long)]
    dtilde: Option<f64>,
    /// Distortion hint for linf-exp; defaults to the instance's true value.
    #[arg(long = "mu-hint")]
    mu_hint: Option<f64>,
    /// Fixed optimum guess for linf-exp (ignored with --lambda-doubling).
    #[arg(long)]
    lambda: Option<f64>,
    /// Guess μ1 and D̃ online instead of trusting hints.
    #[arg(long)]
    doubling: bool,
    /// Restart per arrival-time block of length μ1·D̃.
    #[arg(long)]
    blocking: bool,
    /// Guess the linf-exp normalizer online.
    #[arg(long = "lambda-doubling")]
    lambda_doubling: bool,
}

impl PolicyArgs {
    fn spec(&self) -> anyhow::Result<PolicySpec> {
        Ok(PolicySpec {
            name: PolicyName::from_str(&self.policy)?,
            doubling: self.doubling,
            blocking: self.blocking,
            lambda_doubling: self.lambda_doubling,
        })
    }

    fn norm(&self) -> anyhow::Result<Norm> {
        Ok(Norm::from_str(&self.norm)?)
    }

    fn params(&self, norm: Norm, inst: &Instance) -> AlgParams {
        let mut params = AlgParams::for_instance(norm, inst);
        if let Some(mu1) = self.mu1 {
            params.mu1 = mu1;
        }
        if let Some(dt) = self.dtilde {
            params.d_tilde = dt;
        }
        if let Some(mu) = self.mu_hint {
            params.mu = mu;
        }
        if let Some(lambda) = self.lambda {
            params.lambda = lambda;
        }
        params
    }
}

#[derive(Args, Clone)]
struct GenKnobs {
    #[arg(long, default_value_t = 8)]
    jobs: usize,
    #[arg(long, default_value_t = 3)]
    machines: usize,
    /// Arrivals are uniform over [0, horizon).
    #[arg(long, default_value_t = 16)]
    horizon: u64,
    /// Durations are log-uniform over [1, dmax].
    #[arg(long, default_value_t = 8)]
    dmax: u64,
    #[arg(long = "gen-mu1", default_value_t = 2.0)]
    gen_mu1: f64,
    #[arg(long = "gen-mu2", default_value_t = 2.0)]
    gen_mu2: f64,
    #[arg(long = "inf-prob", default_value_t = 0.15)]
    inf_prob: f64,
}

impl GenKnobs {
    fn config(&self) -> GeneratorConfig {
        GeneratorConfig {
            jobs: self.jobs,
            machines: self.machines,
            horizon: self.horizon,
            d_max: self.dmax,
            mu1: self.gen_mu1,
            mu2: self.gen_mu2,
            infeasible_prob: self.inf_prob,
            ..GeneratorConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Instance JSON file; omit to generate randomly from the knobs below.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
    #[command(flatten)]
    gen: GenKnobs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also solve the instance exactly and report the ratio.
    #[arg(long)]
    oracle: bool,
    #[arg(long = "oracle-limit")]
    oracle_limit: Option<usize>,
    /// Include per-machine loads in the trace rows.
    #[arg(long)]
    loads: bool,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the exact solution as JSON (implies --oracle).
    #[arg(long = "oracle-out")]
    oracle_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    gen: GenKnobs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdversaryArgs {
    /// distortion | horizon | tournament | estimation-only
    #[arg(long)]
    construction: String,
    #[arg(long, default_value_t = 8)]
    machines: usize,
    /// Distortion budget (distortion, tournament, estimation-only).
    #[arg(long = "mu", default_value_t = 4.0)]
    adv_mu: f64,
    /// Estimate ceiling (horizon).
    #[arg(long = "dtilde-bound", default_value_t = 67108864.0)]
    adv_d_tilde: f64,
    /// Horizon parameter D (tournament).
    #[arg(long, default_value_t = 64.0)]
    d: f64,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Write the transcript JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PoeArgs {
    #[arg(long = "d-min", default_value_t = 8.0)]
    d_min: f64,
    #[arg(long = "d-max", default_value_t = 65536.0)]
    d_max: f64,
    /// Geometric step between horizon values.
    #[arg(long = "d-factor", default_value_t = 2.0)]
    d_factor: f64,
    #[arg(long = "mu-min", default_value_t = 2.0)]
    mu_min: f64,
    #[arg(long = "mu-max", default_value_t = 64.0)]
    mu_max: f64,
    #[arg(long = "mu-step", default_value_t = 1.0)]
    mu_step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    /// Instance JSON files; omit to generate a random batch.
    #[arg(long = "instances", num_args = 0..)]
    instances: Vec<PathBuf>,
    /// Number of random instances when no files are given.
    #[arg(long, default_value_t = 20)]
    random: usize,
    #[command(flatten)]
    gen: GenKnobs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Policies to compare (repeatable).
    #[arg(long = "policy", num_args = 1.., default_values_t = vec!["greedy-lp".to_string(), "naive".to_string()])]
    policies: Vec<String>,
    /// Norms to evaluate (repeatable).
    #[arg(long = "norm", num_args = 1.., default_values_t = vec!["inf".to_string()])]
    norms: Vec<String>,
    #[arg(long)]
    doubling: bool,
    #[arg(long)]
    blocking: bool,
    #[arg(long = "lambda-doubling")]
    lambda_doubling: bool,
    #[arg(long = "oracle-limit")]
    oracle_limit: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional scatter chart of the ratio column.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RouteArgs {
    /// Graph JSON: {"vertices": n, "edges": [[u, v], ...]}.
    #[arg(long)]
    graph: PathBuf,
    /// Connection requests JSON.
    #[arg(long)]
    jobs: PathBuf,
    #[arg(long, default_value = "inf")]
    norm: String,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    dtilde: Option<f64>,
    /// Maximum route length in edges; defaults to the vertex count.
    #[arg(long = "max-len")]
    max_len: Option<usize>,
    #[arg(long)]
    oracle: bool,
    #[arg(long = "oracle-limit")]
    oracle_limit: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let refusal = err.chain().any(|c| {
                matches!(
                    c.downcast_ref(),
                    Some(tempoload::Error::OracleRefusal { .. })
                )
            });
            ExitCode::from(if refusal { 3 } else { 2 })
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Adversary(args) => cmd_adversary(args),
        Command::Poe(args) => cmd_poe(args),
        Command::Ratio(args) => cmd_ratio(args),
        Command::Route(args) => cmd_route(args),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load_instance(args: &RunArgs) -> anyhow::Result<Instance> {
    match &args.instance {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(Instance::from_json(&text)?)
        }
        None => {
            let mut rng = seeded_rng(args.seed);
            Ok(random_instance(&args.gen.config(), &mut rng))
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let inst = load_instance(&args)?;
    let norm = args.policy.norm()?;
    let spec = args.policy.spec()?;
    let params = args.policy.params(norm, &inst);
    let mut policy = build_policy(&spec, inst.machines, &params)?;
    let run = run_online(policy.as_mut(), &inst, norm)?;

    let mut csv = String::new();
    if args.loads {
        let load_cols: Vec<String> = (0..inst.machines).map(|i| format!("load_{i}")).collect();
        writeln!(csv, "slot,norm,inf,{}", load_cols.join(","))?;
    } else {
        writeln!(csv, "slot,norm,inf")?;
    }
    for row in &run.trace {
        if args.loads {
            let loads: Vec<String> = row.loads.iter().map(|l| fmt_f64(*l)).collect();
            writeln!(
                csv,
                "{},{},{},{}",
                row.slot,
                fmt_f64(row.norm_value),
                fmt_f64(row.inf_value),
                loads.join(",")
            )?;
        } else {
            writeln!(
                csv,
                "{},{},{}",
                row.slot,
                fmt_f64(row.norm_value),
                fmt_f64(row.inf_value)
            )?;
        }
    }
    writeln!(csv)?;
    writeln!(csv, "objective,oracle,ratio")?;
    if args.oracle || args.oracle_out.is_some() {
        let opt = opt_assign(&inst, norm, args.oracle_limit)?;
        let ratio = if opt.value > 0.0 {
            run.objective / opt.value
        } else {
            1.0
        };
        writeln!(
            csv,
            "{},{},{}",
            fmt_f64(run.objective),
            fmt_f64(opt.value),
            fmt_f64(ratio)
        )?;
        if let Some(path) = &args.oracle_out {
            let text = serde_json::to_string_pretty(&opt)?;
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
    } else {
        writeln!(csv, "{},,", fmt_f64(run.objective))?;
    }
    emit(&args.out, &csv)
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let mut rng = seeded_rng(args.seed);
    let inst = random_instance(&args.gen.config(), &mut rng);
    let mut text = inst.to_json();
    text.push('\n');
    emit(&args.out, &text)
}

fn transcript_summary(label: &str, policy: &str, t: &Transcript) -> anyhow::Result<String> {
    let realized = t.realized_on()?;
    let reference = t.reference_objective()?;
    let on_ok = realized >= t.on_lower_bound - 1e-9;
    let ref_ok = reference <= t.opt_upper_bound + 1e-9;
    let mut s = String::new();
    writeln!(
        s,
        "construction,policy,norm,jobs,on_lb,opt_ub,realized_on,reference_obj,on_ok,ref_ok"
    )?;
    writeln!(
        s,
        "{label},{policy},{},{},{},{},{},{},{on_ok},{ref_ok}",
        t.norm,
        t.instance.jobs.len(),
        fmt_f64(t.on_lower_bound),
        fmt_f64(t.opt_upper_bound),
        fmt_f64(realized),
        fmt_f64(reference)
    )?;
    Ok(s)
}

fn cmd_adversary(args: AdversaryArgs) -> anyhow::Result<()> {
    let norm = args.policy.norm()?;
    let spec = args.policy.spec()?;
    let machines = match args.construction.as_str() {
        "estimation-only" => args.adv_mu as usize,
        _ => args.machines,
    };
    let mut params = AlgParams::new(norm, machines);
    params.mu1 = args.policy.mu1.unwrap_or(args.adv_mu.max(1.0));
    params.d_tilde = args.policy.dtilde.unwrap_or(1.0);
    params.mu = args.policy.mu_hint.unwrap_or(args.adv_mu.max(1.0));
    params.lambda = args.policy.lambda.unwrap_or(1.0);
    let mut policy = build_policy(&spec, machines, &params)?;

    let summary = match args.construction.as_str() {
        "distortion" => {
            let t = distortion_adversary(machines, args.adv_mu, norm, policy.as_mut())?;
            if let Some(path) = &args.out {
                fs::write(path, t.to_json())?;
            }
            transcript_summary("distortion", &args.policy.policy, &t)?
        }
        "horizon" => {
            let t = horizon_adversary(machines, args.adv_d_tilde, norm, policy.as_mut(), true)?;
            if let Some(path) = &args.out {
                fs::write(path, t.to_json())?;
            }
            transcript_summary("horizon", &args.policy.policy, &t)?
        }
        "estimation-only" => {
            let mu = args.adv_mu as u64;
            let t = estimation_only_adversary(mu, policy.as_mut())?;
            if let Some(path) = &args.out {
                fs::write(path, t.to_json())?;
            }
            transcript_summary("estimation-only", &args.policy.policy, &t)?
        }
        "tournament" => {
            let run = tournament_counterexample(machines, args.d, args.adv_mu, policy.as_mut())?;
            if let Some(path) = &args.out {
                fs::write(path, run.instance.to_json())?;
            }
            let realized = objective(&run.instance, &run.assignment, norm)?;
            let witness = objective(&run.honest_instance, &run.reference, norm)?;
            let mut s = String::new();
            writeln!(
                s,
                "construction,policy,norm,j_star,levels,declared_on,realized_on,witness_obj,witness_ok"
            )?;
            writeln!(
                s,
                "tournament,{},{norm},{},{},{},{},{},{}",
                args.policy.policy,
                run.j_star,
                run.levels,
                fmt_f64(run.declared_on()),
                fmt_f64(realized),
                fmt_f64(witness),
                witness <= run.opt_upper_bound(norm) + 1e-9
            )?;
            s
        }
        other => bail!("unknown construction {other:?}"),
    };
    print!("{summary}");
    Ok(())
}

fn cmd_poe(args: PoeArgs) -> anyhow::Result<()> {
    if args.d_factor <= 1.0 || args.mu_step <= 0.0 {
        bail!("d-factor must exceed 1 and mu-step must be positive");
    }
    let mut csv = String::from("d,mu,j_star,lower,upper,ratio\n");
    let mut d = args.d_min;
    while d <= args.d_max * (1.0 + 1e-12) {
        let mut mu = args.mu_min;
        while mu <= args.mu_max * (1.0 + 1e-12) {
            let series = time_points(d, mu)?;
            let inst = poe_lower_instance(d, mu)?;
            let assignment = vec![0; inst.jobs.len()];
            let ratio = evaluate_poe(&inst, &assignment, mu, Norm::P(1.0))?;
            let bounds = if mu >= 2.0 && d >= mu {
                let (lo, hi) = j_star_bounds(d, mu)?;
                (fmt_f64(lo), fmt_f64(hi))
            } else {
                (String::new(), String::new())
            };
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                fmt_f64(d),
                fmt_f64(mu),
                series.j_star,
                bounds.0,
                bounds.1,
                fmt_f64(ratio)
            )?;
            mu += args.mu_step;
        }
        d *= args.d_factor;
    }
    emit(&args.out, &csv)
}

fn cmd_ratio(args: RatioArgs) -> anyhow::Result<()> {
    let mut instances: Vec<(String, Instance)> = Vec::new();
    if args.instances.is_empty() {
        let mut rng = seeded_rng(args.seed);
        for i in 0..args.random {
            instances.push((
                format!("random-{i}"),
                random_instance(&args.gen.config(), &mut rng),
            ));
        }
    } else {
        for path in &args.instances {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            instances.push((path.display().to_string(), Instance::from_json(&text)?));
        }
    }

    let mut csv = String::from("instance,policy,norm,on,opt,ratio\n");
    let mut series: Vec<svg::Series> = Vec::new();
    for policy_name in &args.policies {
        let name = PolicyName::from_str(policy_name)?;
        for norm_text in &args.norms {
            let norm = Norm::from_str(norm_text)?;
            let mut points = Vec::new();
            for (idx, (label, inst)) in instances.iter().enumerate() {
                let spec = PolicySpec {
                    name,
                    doubling: args.doubling,
                    blocking: args.blocking,
                    lambda_doubling: args.lambda_doubling,
                };
                let mut params = AlgParams::for_instance(norm, inst);
                if name == PolicyName::LinfExp && !args.lambda_doubling {
                    params.lambda = 1.0;
                }
                let mut policy = build_policy(&spec, inst.machines, &params)?;
                let run = run_online(policy.as_mut(), inst, norm)?;
                match opt_assign(inst, norm, args.oracle_limit) {
                    Ok(opt) => {
                        let ratio = if opt.value > 0.0 {
                            run.objective / opt.value
                        } else {
                            1.0
                        };
                        writeln!(
                            csv,
                            "{label},{policy_name},{norm},{},{},{}",
                            fmt_f64(run.objective),
                            fmt_f64(opt.value),
                            fmt_f64(ratio)
                        )?;
                        points.push((idx as f64, ratio));
                    }
                    Err(tempoload::Error::OracleRefusal { .. }) => {
                        writeln!(
                            csv,
                            "{label},{policy_name},{norm},{},,",
                            fmt_f64(run.objective)
                        )?;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            series.push(svg::Series {
                label: format!("{policy_name} ℓ{norm}"),
                points,
            });
        }
    }
    if let Some(path) = &args.svg {
        fs::write(path, svg::scatter_chart("ON/OPT ratios", &series))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    emit(&args.out, &csv)
}

fn cmd_route(args: RouteArgs) -> anyhow::Result<()> {
    let graph_text = fs::read_to_string(&args.graph)
        .with_context(|| format!("reading {}", args.graph.display()))?;
    let graph = Graph::from_json(&graph_text)?;
    let jobs_text = fs::read_to_string(&args.jobs)
        .with_context(|| format!("reading {}", args.jobs.display()))?;
    let jobs = routing_jobs_from_json(&jobs_text, &graph)?;
    let norm = Norm::from_str(&args.norm)?;

    let mut params = AlgParams::new(norm, graph.edges.len());
    let mut mu1 = 1.0_f64;
    let mut d_tilde = 1.0_f64;
    for j in &jobs {
        mu1 = mu1.max(j.duration as f64 / j.predicted);
        d_tilde = d_tilde.max(j.predicted);
    }
    params.mu1 = args.mu1.unwrap_or(mu1);
    params.d_tilde = args.dtilde.unwrap_or(d_tilde);

    let run = run_routing(&graph, &jobs, &params, norm, args.max_len)?;
    let mut csv = String::new();
    writeln!(csv, "job,path_edges,objective_after")?;
    for (idx, path) in run.paths.iter().enumerate() {
        let edges: Vec<String> = path.iter().map(|e| e.to_string()).collect();
        let partial = routing_objective(&graph, &jobs[..=idx], &run.paths[..=idx], norm)?;
        writeln!(csv, "{idx},{},{}", edges.join("|"), fmt_f64(partial))?;
    }
    writeln!(csv)?;
    writeln!(csv, "objective,oracle,ratio")?;
    if args.oracle {
        let opt = opt_route(&graph, &jobs, norm, args.max_len, args.oracle_limit)?;
        let ratio = if opt.value > 0.0 {
            run.objective / opt.value
        } else {
            1.0
        };
        writeln!(
            csv,
            "{},{},{}",
            fmt_f64(run.objective),
            fmt_f64(opt.value),
            fmt_f64(ratio)
        )?;
    } else {
        writeln!(csv, "{},,", fmt_f64(run.objective))?;
    }
    emit(&args.out, &csv)
}
