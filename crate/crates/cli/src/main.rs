//! `potts-flow`: sample flows, random-cluster configurations and Potts
//! colourings via the flow Markov chains, estimate partition functions by
//! deletion-contraction telescoping, and run the exact verification suites.
//!
//! Every command prints a single JSON document on stdout (`tv-curve` prints
//! CSV) and derives all randomness from `--seed`, so identical invocations
//! produce byte-identical output. Exit codes: 0 success, 2 inadmissible
//! parameters (with the threshold reported), 1 I/O errors or failed
//! verification. Errors go to stderr as JSON.

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use potts_flow_core::counting::{self, EstimateConfig, SamplerKind};
use potts_flow_core::couplings;
use potts_flow_core::cycle_space::{verify_generates, EvenGenSet, GenParams};
use potts_flow_core::diagnostics::{self, TvChainKind, TvStart};
use potts_flow_core::flow_chain::{self, FlowChain, FlowChainConfig, FlowChainLaw};
use potts_flow_core::graph::OrientedMultigraph;
use potts_flow_core::joint_chain::{self, JointChainConfig, JointChainLaw};
use potts_flow_core::lattice::{self, Lattice};
use potts_flow_core::oracle;
use potts_flow_core::streams::{stream, Purpose};
use potts_flow_core::Error as CoreError;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "potts-flow",
    version,
    about = "Potts sampling via Z_q-flow Markov chains"
)]
struct Cli {
    /// TOML config file providing defaults for the common flags; command
    /// line values take precedence.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Include wall-clock timings in the output (off by default so that
    /// equal inputs give byte-identical JSON).
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Z_q-flow with the flow Markov chain.
    SampleFlow(SampleArgs),
    /// Sample a (flow, edge set) pair with the joint flow-RC chain.
    SampleJoint(SampleArgs),
    /// Sample a random-cluster configuration (flow chain + coupling).
    SampleRc(SampleArgs),
    /// Sample a Potts colouring (flow chain + couplings).
    SamplePotts(SampleArgs),
    /// Estimate Z_flow or Z_Potts by telescoping contraction ratios.
    EstimateZ(EstimateArgs),
    /// Run exact verification suites against the brute-force oracles.
    Verify(VerifyArgs),
    /// Check the Potts-Glauber / flow-chain duality on an L x L grid.
    Duality(DualityArgs),
    /// Exact TV-to-stationarity series per fugacity, as CSV.
    TvCurve(TvCurveArgs),
}

#[derive(Args, Clone)]
struct SampleArgs {
    /// Graph: a lattice spec (grid:WxH, grid3:WxHxD, tri:WxH, hex:WxH) or a
    /// path to a graph file ("n m" header, then "tail head" lines).
    #[arg(long)]
    graph: Option<String>,
    /// Generating set: "auto" (lattice faces) or a path to a gens file.
    #[arg(long)]
    gens: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    x: Option<f64>,
    /// Total-variation budget for the mixing-time bound.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run exactly this many steps instead of the mixing-time bound.
    #[arg(long)]
    steps: Option<u64>,
}

#[derive(Args, Clone)]
struct EstimateArgs {
    #[arg(long, value_enum, default_value_t = Model::Flow)]
    model: Model,
    /// Graph: lattice spec or file (see sample-flow --help).
    #[arg(long)]
    graph: Option<String>,
    /// Generating set: "auto" (lattice faces) or a gens file.
    #[arg(long)]
    gens: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    /// Flow fugacity in [1/3, 1) (model = flow).
    #[arg(long)]
    x: Option<f64>,
    /// Potts interaction parameter (model = potts); maps to x = (w-1)/(w+q-1).
    #[arg(long)]
    w: Option<f64>,
    /// Relative error target; the estimate is within e^(+-epsilon) with
    /// probability at least 3/4.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampler backing the ratio estimates.
    #[arg(long, value_enum)]
    chain: Option<ChainChoice>,
    /// Override the default M = ceil(48 t / eps^2).
    #[arg(long)]
    samples_per_ratio: Option<usize>,
    /// Override the default delta_i = eps/(16 t).
    #[arg(long)]
    delta_per_sample: Option<f64>,
    /// Worker threads for the per-ratio samples (output is independent of
    /// the thread count).
    #[arg(long)]
    threads: Option<usize>,
    /// Median-of-k amplification (default 1).
    #[arg(long)]
    median_of: Option<usize>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// Which checks to run; "lemma34" is the sum-of-minima inequality sweep.
    #[arg(long, value_enum)]
    suite: Suite,
    /// Graph under test (identities and chains suites).
    #[arg(long)]
    graph: Option<String>,
    /// Generating set for the chains suite ("auto" for lattices).
    #[arg(long)]
    gens: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    x: Option<f64>,
    /// TV budget for the chains suite's bound check.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args, Clone)]
struct DualityArgs {
    /// Dual grid side length; the flow chain runs on the (L+1) x (L+1) grid.
    #[arg(long = "L", alias = "l")]
    l: usize,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    x: Option<f64>,
}

#[derive(Args, Clone)]
struct TvCurveArgs {
    /// Graph: lattice spec or file.
    #[arg(long)]
    graph: Option<String>,
    /// Generating set: "auto" or a gens file.
    #[arg(long)]
    gens: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    /// Comma-separated fugacities, e.g. --x 0.3,0.6,0.9.
    #[arg(long)]
    x: Option<String>,
    #[arg(long, default_value_t = 100)]
    t_max: usize,
    #[arg(long, value_enum, default_value_t = ChainChoice::Flow)]
    chain: ChainChoice,
    /// Start state: "saturated" exposes the low-x slowdown, "zero" matches
    /// the samplers' start.
    #[arg(long, value_enum, default_value_t = StartChoice::Saturated)]
    start: StartChoice,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Flow,
    Potts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChainChoice {
    Flow,
    Joint,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StartChoice {
    Zero,
    Saturated,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Identities,
    Chains,
    Lemma34,
    All,
}

/// Defaults loadable from a TOML config file.
#[derive(Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    graph: Option<String>,
    gens: Option<String>,
    q: Option<u32>,
    x: Option<f64>,
    w: Option<f64>,
    delta: Option<f64>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    chain: Option<String>,
    threads: Option<usize>,
    samples_per_ratio: Option<usize>,
    delta_per_sample: Option<f64>,
    median_of: Option<usize>,
}

/// CLI failure: kind decides the exit code.
struct Failure {
    kind: &'static str,
    message: String,
    threshold: Option<f64>,
    code: u8,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Failure {
            kind: "io",
            message: message.into(),
            threshold: None,
            code: 1,
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: "usage",
            message: message.into(),
            threshold: None,
            code: 2,
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Failure {
            kind: "verification_failed",
            message: message.into(),
            threshold: None,
            code: 1,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::OutOfRangeX { x, threshold } => Failure {
                kind: "inadmissible",
                message: format!("x = {x} is below the mixing threshold; need x > {threshold}"),
                threshold: Some(threshold),
                code: 2,
            },
            CoreError::InvalidParameter(msg) => Failure {
                kind: "inadmissible",
                message: msg,
                threshold: None,
                code: 2,
            },
            CoreError::Parse(msg) => Failure {
                kind: "io",
                message: msg,
                threshold: None,
                code: 1,
            },
            other => Failure {
                kind: "inadmissible",
                message: other.to_string(),
                threshold: None,
                code: 2,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(f) => return emit_failure(&f),
    };
    let started = Instant::now();
    let result = match &cli.command {
        Command::SampleFlow(args) => run_sample(args, &config, SampleWhat::Flow),
        Command::SampleJoint(args) => run_sample(args, &config, SampleWhat::Joint),
        Command::SampleRc(args) => run_sample(args, &config, SampleWhat::Rc),
        Command::SamplePotts(args) => run_sample(args, &config, SampleWhat::Potts),
        Command::EstimateZ(args) => run_estimate(args, &config),
        Command::Verify(args) => run_verify(args, &config),
        Command::Duality(args) => run_duality(args, &config),
        Command::TvCurve(args) => {
            return match run_tv_curve(args, &config) {
                Ok(csv) => {
                    print!("{csv}");
                    ExitCode::SUCCESS
                }
                Err(f) => emit_failure(&f),
            };
        }
    };
    match result {
        Ok((mut value, ok)) => {
            if cli.timings {
                value["timings"] = json!({ "wall_ms": started.elapsed().as_millis() as u64 });
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&value).expect("valid JSON")
            );
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => emit_failure(&f),
    }
}

fn emit_failure(f: &Failure) -> ExitCode {
    let mut error = json!({
        "kind": f.kind,
        "message": f.message,
    });
    if let Some(t) = f.threshold {
        error["threshold"] = json!(t);
    }
    eprintln!(
        "{}",
        serde_json::to_string(&json!({ "schema": SCHEMA, "error": error })).expect("valid JSON")
    );
    ExitCode::from(f.code)
}

fn load_config(path: Option<&str>) -> Result<FileConfig, Failure> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::io(format!("cannot read config {p}: {e}")))?;
            toml::from_str(&text).map_err(|e| Failure::io(format!("bad config {p}: {e}")))
        }
    }
}

/// A loaded instance: graph plus (optionally) its generating set.
struct Instance {
    graph: OrientedMultigraph,
    graph_source: String,
    lattice: Option<Lattice>,
}

fn load_graph(spec: &str) -> Result<Instance, Failure> {
    if lattice::is_lattice_spec(spec) {
        let lat = lattice::parse_spec(spec).map_err(Failure::from)?;
        return Ok(Instance {
            graph: lat.graph.clone(),
            graph_source: spec.to_string(),
            lattice: Some(lat),
        });
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Failure::io(format!("cannot read graph {spec}: {e}")))?;
    let graph = OrientedMultigraph::from_text(&text)
        .map_err(|e| Failure::io(format!("bad graph file {spec}: {e}")))?;
    Ok(Instance {
        graph,
        graph_source: spec.to_string(),
        lattice: None,
    })
}

/// Generating set plus the parameters the bounds will use: lattice class
/// parameters for auto sets, lifted instance parameters for file sets.
struct GensInfo {
    gens: EvenGenSet,
    source: String,
    actual: GenParams,
    bound_params: GenParams,
}

fn load_gens(instance: &Instance, arg: &str, q: u32) -> Result<GensInfo, Failure> {
    if arg == "auto" {
        let lat = instance.lattice.as_ref().ok_or_else(|| {
            Failure::usage("--gens auto requires a lattice --graph (grid:/grid3:/tri:/hex:)")
        })?;
        return Ok(GensInfo {
            gens: lat.faces.clone(),
            source: "auto".to_string(),
            actual: lat.faces.params(),
            bound_params: lat.kind.class_params(),
        });
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Failure::io(format!("cannot read gens {arg}: {e}")))?;
    let gens = EvenGenSet::from_text(instance.graph.edge_universe(), &text)
        .map_err(|e| Failure::io(format!("bad gens file {arg}: {e}")))?;
    if !verify_generates(&gens, &instance.graph, q).map_err(Failure::from)? {
        return Err(Failure::usage(format!(
            "generating set {arg} does not generate the cycle space of {}",
            instance.graph_source
        )));
    }
    let actual = gens.params();
    let (d, iota) = flow_chain::lift_flow_params(actual);
    let (ell, s) = joint_chain::lift_joint_params(actual);
    Ok(GensInfo {
        gens,
        source: arg.to_string(),
        actual,
        bound_params: GenParams {
            d: d as usize,
            iota: iota as usize,
            ell: ell as usize,
            s: s as usize,
        },
    })
}

fn manifest(instance: &Instance, gens: Option<&GensInfo>, extra: Value) -> Value {
    let mut m = json!({
        "graph": {
            "source": instance.graph_source,
            "n": instance.graph.n_vertices(),
            "m": instance.graph.n_edges(),
        },
        "schema": SCHEMA,
    });
    if let Some(info) = gens {
        m["gens"] = json!({
            "source": info.source,
            "r": info.gens.len(),
            "params": info.actual,
            "bound_params": info.bound_params,
        });
    }
    if let Value::Object(extra_map) = extra {
        for (k, v) in extra_map {
            m[k] = v;
        }
    }
    m
}

enum SampleWhat {
    Flow,
    Joint,
    Rc,
    Potts,
}

fn run_sample(
    args: &SampleArgs,
    config: &FileConfig,
    what: SampleWhat,
) -> Result<(Value, bool), Failure> {
    let graph_arg = args
        .graph
        .clone()
        .or_else(|| config.graph.clone())
        .ok_or_else(|| Failure::usage("--graph is required"))?;
    let gens_arg = args
        .gens
        .clone()
        .or_else(|| config.gens.clone())
        .unwrap_or_else(|| "auto".to_string());
    let q = args
        .q
        .or(config.q)
        .ok_or_else(|| Failure::usage("--q is required"))?;
    let x = args
        .x
        .or(config.x)
        .ok_or_else(|| Failure::usage("--x is required"))?;
    let delta = args.delta.or(config.delta).unwrap_or(0.01);
    let seed = args.seed.or(config.seed).unwrap_or(0);

    let instance = load_graph(&graph_arg)?;
    let info = load_gens(&instance, &gens_arg, q)?;
    let g = &instance.graph;
    let p = info.bound_params;

    match what {
        SampleWhat::Joint => {
            let (ell, s) = (p.ell as u32, p.s as u32);
            let cfg = JointChainConfig::new(x, q, info.gens.clone(), ell, s, g.n_edges(), seed)
                .map_err(Failure::from)?;
            let bound =
                joint_chain::mixing_time_bound(x, q, ell, s, g.n_edges(), info.gens.len(), delta)
                    .map_err(Failure::from)?;
            let steps = args.steps.unwrap_or(bound);
            let mut chain = joint_chain::JointChain::new(&cfg, g, 0).map_err(Failure::from)?;
            chain.run(steps);
            let state = chain.state();
            let threshold = 1.0 - q as f64 / ((q as f64 - 1.0) * ell as f64 * s as f64);
            let value = manifest(
                &instance,
                Some(&info),
                json!({
                    "command": "sample-joint",
                    "q": q, "x": x, "delta": delta, "seed": seed,
                    "bound": {
                        "ell": ell, "s": s,
                        "threshold": threshold,
                        "xi": x - threshold,
                        "steps": bound,
                    },
                    "p": cfg.p,
                    "alpha": cfg.alpha,
                    "steps": steps,
                    "flow": state.flow.to_json(g),
                    "edge_set": state.subset.edges().collect::<Vec<_>>(),
                    "support_size": state.flow.support_size(),
                }),
            );
            Ok((value, true))
        }
        _ => {
            let (d, iota) = (p.d as u32, p.iota as u32);
            let cfg = FlowChainConfig::new(x, q, info.gens.clone(), seed).map_err(Failure::from)?;
            let bound = flow_chain::mixing_time_bound(x, info.gens.len(), d, iota, delta);
            let steps = match args.steps {
                Some(n) => n,
                None => bound.clone().map_err(Failure::from)?,
            };
            let mut chain = FlowChain::new(&cfg, g, 0).map_err(Failure::from)?;
            chain.run(steps);
            let flow = chain.state().clone();
            let threshold = 1.0 - 2.0 / ((d as f64 + 1.0) * iota as f64);
            let bound_json = json!({
                "d": d, "iota": iota,
                "threshold": threshold,
                "xi": x - threshold,
                "steps": bound.ok(),
            });
            let base = json!({
                "q": q, "x": x, "delta": delta, "seed": seed,
                "bound": bound_json,
                "steps": steps,
            });
            let mut rng = stream(seed, Purpose::Coupling, 0);
            let (command, extra) = match what {
                SampleWhat::Flow => (
                    "sample-flow",
                    json!({
                        "flow": flow.to_json(g),
                        "support_size": flow.support_size(),
                    }),
                ),
                SampleWhat::Rc => {
                    let subset = couplings::flow_to_rc(g, &flow, x, &mut rng);
                    (
                        "sample-rc",
                        json!({
                            "y": couplings::rc_y_from_x(q, x),
                            "edge_set": subset.edges().collect::<Vec<_>>(),
                        }),
                    )
                }
                SampleWhat::Potts => {
                    let sigma = couplings::flow_to_potts(g, &flow, x, q, &mut rng)
                        .map_err(Failure::from)?;
                    (
                        "sample-potts",
                        json!({
                            "w": couplings::potts_w_from_x(q, x),
                            "spins": sigma.spins(),
                        }),
                    )
                }
                SampleWhat::Joint => unreachable!(),
            };
            let mut value = manifest(&instance, Some(&info), base);
            value["command"] = json!(command);
            if let Value::Object(map) = extra {
                for (k, v) in map {
                    value[k] = v;
                }
            }
            Ok((value, true))
        }
    }
}

fn run_estimate(args: &EstimateArgs, config: &FileConfig) -> Result<(Value, bool), Failure> {
    let graph_arg = args
        .graph
        .clone()
        .or_else(|| config.graph.clone())
        .ok_or_else(|| Failure::usage("--graph is required"))?;
    let gens_arg = args
        .gens
        .clone()
        .or_else(|| config.gens.clone())
        .unwrap_or_else(|| "auto".to_string());
    let q = args
        .q
        .or(config.q)
        .ok_or_else(|| Failure::usage("--q is required"))?;
    let epsilon = args
        .epsilon
        .or(config.epsilon)
        .ok_or_else(|| Failure::usage("--epsilon is required"))?;
    let seed = args.seed.or(config.seed).unwrap_or(0);

    let instance = load_graph(&graph_arg)?;
    let info = load_gens(&instance, &gens_arg, q)?;

    let mut cfg = EstimateConfig::new(epsilon, seed).map_err(Failure::from)?;
    cfg.sampler = match args
        .chain
        .or(match config.chain.as_deref() {
            Some("flow") => Some(ChainChoice::Flow),
            Some("joint") => Some(ChainChoice::Joint),
            _ => None,
        })
        .unwrap_or(ChainChoice::Flow)
    {
        ChainChoice::Flow => SamplerKind::Flow,
        ChainChoice::Joint => SamplerKind::Joint,
    };
    cfg.samples_per_ratio = args.samples_per_ratio.or(config.samples_per_ratio);
    cfg.delta_per_sample = args.delta_per_sample.or(config.delta_per_sample);
    cfg.threads = args.threads.or(config.threads).unwrap_or(1);
    cfg.median_of = args.median_of.or(config.median_of).unwrap_or(1);

    let (report, x, w) = match args.model {
        Model::Flow => {
            let x = args
                .x
                .or(config.x)
                .ok_or_else(|| Failure::usage("--x is required"))?;
            let report = counting::estimate_z_flow(&instance.graph, &info.gens, q, x, &cfg)
                .map_err(Failure::from)?;
            (report, x, None)
        }
        Model::Potts => {
            let w = args
                .w
                .or(config.w)
                .ok_or_else(|| Failure::usage("--w is required for --model potts"))?;
            let x = couplings::x_from_potts_w(q, w);
            let report = counting::estimate_z_potts(&instance.graph, &info.gens, q, w, &cfg)
                .map_err(Failure::from)?;
            (report, x, Some(w))
        }
    };

    let value = manifest(
        &instance,
        Some(&info),
        json!({
            "command": "estimate-z",
            "model": match args.model { Model::Flow => "flow", Model::Potts => "potts" },
            "q": q,
            "x": x,
            "w": w,
            "epsilon": epsilon,
            "seed": seed,
            "chain": cfg.sampler,
            "threads": cfg.threads,
            "median_of": cfg.median_of,
            "zeta": report.zeta,
            "log_zeta": report.log_zeta,
            "ratio_estimates": report.ratio_estimates,
            "contraction_edges": report.contraction_edges,
            "loop_exponent": report.loop_exponent,
            "samples_per_ratio": report.samples_per_ratio,
            "delta_per_sample": report.delta_per_sample,
            "total_chain_steps": report.total_chain_steps,
            "repetition_zetas": report.repetition_zetas,
        }),
    );
    Ok((value, true))
}

fn run_verify(args: &VerifyArgs, config: &FileConfig) -> Result<(Value, bool), Failure> {
    let q = args
        .q
        .or(config.q)
        .ok_or_else(|| Failure::usage("--q is required"))?;
    let x = args
        .x
        .or(config.x)
        .ok_or_else(|| Failure::usage("--x is required"))?;
    let delta = args.delta.or(config.delta).unwrap_or(0.01);
    let mut checks: Vec<Value> = Vec::new();
    let mut all_pass = true;
    let mut push = |name: String, pass: bool, detail: String, all_pass: &mut bool| {
        *all_pass &= pass;
        eprintln!("[{}] {name}: {detail}", if pass { "ok" } else { "FAIL" });
        checks.push(json!({ "name": name, "pass": pass, "detail": detail }));
    };

    let needs_graph = matches!(args.suite, Suite::Identities | Suite::Chains | Suite::All);
    let loaded = if needs_graph {
        let graph_arg = args
            .graph
            .clone()
            .or_else(|| config.graph.clone())
            .ok_or_else(|| Failure::usage("--graph is required for this suite"))?;
        Some(load_graph(&graph_arg)?)
    } else {
        None
    };

    if matches!(args.suite, Suite::Identities | Suite::All) {
        let instance = loaded.as_ref().expect("graph loaded");
        let report = oracle::identity_suite(&instance.graph, q, x).map_err(Failure::from)?;
        for c in &report.checks {
            push(
                format!("identities/{}", c.name),
                c.pass,
                format!("lhs={} rhs={} rel_err={:.2e}", c.lhs, c.rhs, c.rel_err),
                &mut all_pass,
            );
        }
    }

    if matches!(args.suite, Suite::Chains | Suite::All) {
        let instance = loaded.as_ref().expect("graph loaded");
        let gens_arg = args
            .gens
            .clone()
            .or_else(|| config.gens.clone())
            .unwrap_or_else(|| "auto".to_string());
        let info = load_gens(instance, &gens_arg, q)?;
        let g = &instance.graph;
        chain_checks(g, &info, q, x, delta, &mut push, &mut all_pass)?;
    }

    if matches!(args.suite, Suite::Lemma34 | Suite::All) {
        let xs: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let sweep = oracle::sum_of_minima_exhaustive(4, 4, 3, &xs).map_err(Failure::from)?;
        push(
            "lemma34/sum-of-minima-exhaustive".to_string(),
            sweep.pass,
            format!(
                "{} pairs checked, worst margin {:.2e}, witness gap {:.2e}",
                sweep.checked, sweep.worst_margin, sweep.witness_gap
            ),
            &mut all_pass,
        );
    }

    let suite_name = match args.suite {
        Suite::Identities => "identities",
        Suite::Chains => "chains",
        Suite::Lemma34 => "lemma34",
        Suite::All => "all",
    };
    let value = json!({
        "schema": SCHEMA,
        "command": "verify",
        "suite": suite_name,
        "q": q,
        "x": x,
        "pass": all_pass,
        "checks": checks,
    });
    if all_pass {
        Ok((value, true))
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("valid JSON")
        );
        Err(Failure::verification(format!(
            "verify --suite {suite_name} failed"
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn chain_checks(
    g: &OrientedMultigraph,
    info: &GensInfo,
    q: u32,
    x: f64,
    delta: f64,
    push: &mut impl FnMut(String, bool, String, &mut bool),
    all_pass: &mut bool,
) -> Result<(), Failure> {
    // Flow chain: exact stationarity checks, plus the TV-at-bound check when
    // x is admissible for the bound parameters.
    let law = FlowChainLaw {
        g,
        q,
        x,
        gens: &info.gens,
    };
    match oracle::transition_matrix(&law) {
        Ok(matrix) => {
            let rs = matrix.row_sum_error();
            push(
                "chains/flow/row-sums".into(),
                rs < 1e-12,
                format!("max |row sum - 1| = {rs:.2e}"),
                all_pass,
            );
            let db = matrix.detailed_balance_error(&matrix.stationary);
            push(
                "chains/flow/detailed-balance".into(),
                db < 1e-12,
                format!("max violation = {db:.2e}"),
                all_pass,
            );
            let res = matrix.fixed_point_residual(&matrix.stationary);
            push(
                "chains/flow/fixed-point".into(),
                res <= 1e-10,
                format!("|mu P - mu|_1 = {res:.2e}"),
                all_pass,
            );
            let (d, iota) = (info.bound_params.d as u32, info.bound_params.iota as u32);
            match flow_chain::mixing_time_bound(x, info.gens.len(), d, iota, delta) {
                Ok(steps) => {
                    let tv = matrix.tv_decay(&matrix.stationary, steps as usize);
                    let last = tv[steps as usize];
                    push(
                        "chains/flow/tv-at-bound".into(),
                        last <= delta,
                        format!("TV after {steps} steps = {last:.2e} (delta = {delta})"),
                        all_pass,
                    );
                }
                Err(CoreError::OutOfRangeX { threshold, .. }) => {
                    push(
                        "chains/flow/tv-at-bound".into(),
                        true,
                        format!("skipped: x = {x} <= threshold {threshold}"),
                        all_pass,
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(CoreError::TooLarge { .. }) => {
            push(
                "chains/flow".into(),
                true,
                "skipped: state space too large for exact analysis".into(),
                all_pass,
            );
        }
        Err(e) => return Err(e.into()),
    }

    // Joint chain: needs an admissible p.
    let (ell, s) = (info.bound_params.ell as u32, info.bound_params.s as u32);
    match JointChainConfig::new(x, q, info.gens.clone(), ell, s, g.n_edges(), 0) {
        Ok(cfg) => {
            let law = JointChainLaw { g, cfg: &cfg };
            match oracle::transition_matrix(&law) {
                Ok(matrix) => {
                    let rs = matrix.row_sum_error();
                    push(
                        "chains/joint/row-sums".into(),
                        rs < 1e-12,
                        format!("max |row sum - 1| = {rs:.2e}"),
                        all_pass,
                    );
                    let db = matrix.detailed_balance_error(&matrix.stationary);
                    push(
                        "chains/joint/detailed-balance".into(),
                        db < 1e-12,
                        format!("max violation = {db:.2e}"),
                        all_pass,
                    );
                    let res = matrix.fixed_point_residual(&matrix.stationary);
                    push(
                        "chains/joint/fixed-point".into(),
                        res <= 1e-10,
                        format!("|mu P - mu|_1 = {res:.2e}"),
                        all_pass,
                    );
                    let steps = joint_chain::mixing_time_bound(
                        x,
                        q,
                        ell,
                        s,
                        g.n_edges(),
                        info.gens.len(),
                        delta,
                    )
                    .map_err(Failure::from)?;
                    let tv = matrix.tv_decay(&matrix.stationary, steps as usize);
                    let last = tv[steps as usize];
                    push(
                        "chains/joint/tv-at-bound".into(),
                        last <= delta,
                        format!("TV after {steps} steps = {last:.2e} (delta = {delta})"),
                        all_pass,
                    );
                }
                Err(CoreError::TooLarge { .. }) => {
                    push(
                        "chains/joint".into(),
                        true,
                        "skipped: state space too large for exact analysis".into(),
                        all_pass,
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(CoreError::OutOfRangeX { threshold, .. }) => {
            push(
                "chains/joint".into(),
                true,
                format!("skipped: x = {x} <= joint threshold {threshold}"),
                all_pass,
            );
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn run_duality(args: &DualityArgs, config: &FileConfig) -> Result<(Value, bool), Failure> {
    let q = args
        .q
        .or(config.q)
        .ok_or_else(|| Failure::usage("--q is required"))?;
    let x = args
        .x
        .or(config.x)
        .ok_or_else(|| Failure::usage("--x is required"))?;
    let report = diagnostics::verify_duality(args.l, q, x).map_err(Failure::from)?;
    let pass = report.pass;
    let value = json!({
        "schema": SCHEMA,
        "command": "duality",
        "report": report,
    });
    if pass {
        Ok((value, true))
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("valid JSON")
        );
        Err(Failure::verification(format!(
            "duality check failed at L={}, q={q}",
            args.l
        )))
    }
}

fn run_tv_curve(args: &TvCurveArgs, config: &FileConfig) -> Result<String, Failure> {
    let graph_arg = args
        .graph
        .clone()
        .or_else(|| config.graph.clone())
        .ok_or_else(|| Failure::usage("--graph is required"))?;
    let gens_arg = args
        .gens
        .clone()
        .or_else(|| config.gens.clone())
        .unwrap_or_else(|| "auto".to_string());
    let q = args
        .q
        .or(config.q)
        .ok_or_else(|| Failure::usage("--q is required"))?;
    let xs_arg = args
        .x
        .clone()
        .or_else(|| config.x.map(|v| v.to_string()))
        .ok_or_else(|| Failure::usage("--x is required (comma-separated list)"))?;
    let xs: Vec<f64> = xs_arg
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad fugacity {p:?}")))
        })
        .collect::<Result<_, _>>()?;

    let instance = load_graph(&graph_arg)?;
    let info = load_gens(&instance, &gens_arg, q)?;
    let kind = match args.chain {
        ChainChoice::Flow => TvChainKind::Flow,
        ChainChoice::Joint => TvChainKind::Joint,
    };
    let start = match args.start {
        StartChoice::Zero => TvStart::Zero,
        StartChoice::Saturated => TvStart::Saturated,
    };
    let points =
        diagnostics::tv_curve(kind, start, &instance.graph, &info.gens, q, &xs, args.t_max)
            .map_err(Failure::from)?;
    Ok(diagnostics::tv_curve_csv(&points))
}
