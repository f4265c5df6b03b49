//! Randomized approximate counting of `Z_flow` (and through the parameter
//! map, `Z_Potts`) by telescoping contraction ratios.
//!
//! Contracting a non-loop edge `e` satisfies
//! `Z(G/e)/Z(G) = 1/x - (1-x)/x * P[f(e) = 0]`, and the probability on the
//! right is estimated by sampling flows. Contracting `t = |V| - c(G)` edges
//! leaves only loops, whose partition function is `(1+(q-1)x)^{|E|-|V|+c}`,
//! so the product of the per-step ratio estimates recovers `Z_flow(G)`.
//! Generating sets contract along with the graph and their parameters never
//! increase, so one admissible fugacity stays admissible down the sequence.

use std::time::{Duration, Instant};

use crate::cycle_space::EvenGenSet;
use crate::error::Error;
use crate::flow_chain::{self, FlowChain, FlowChainConfig};
use crate::graph::{EdgeId, OrientedMultigraph};
use crate::joint_chain::{self, JointChain, JointChainConfig};
use crate::streams::counting_stream;
use crate::Result;

/// Which delta-approximate flow sampler backs the ratio estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Flow,
    Joint,
}

/// Estimator configuration. The defaults `M = ceil(48 t / eps^2)` and
/// `delta_i = eps / (16 t)` meet the multiplicative guarantee with margin;
/// both can be overridden.
#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub epsilon: f64,
    pub sampler: SamplerKind,
    pub samples_per_ratio: Option<usize>,
    pub delta_per_sample: Option<f64>,
    pub seed: u64,
    /// Median-of-k amplification of the 3/4 success probability.
    pub median_of: usize,
    pub threads: usize,
}

impl EstimateConfig {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0 < epsilon && epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must be in (0,1), got {epsilon}"
            )));
        }
        Ok(EstimateConfig {
            epsilon,
            sampler: SamplerKind::Flow,
            samples_per_ratio: None,
            delta_per_sample: None,
            seed,
            median_of: 1,
            threads: 1,
        })
    }
}

/// Outcome of one estimate, with enough provenance to recompute it.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub zeta: f64,
    /// `ln(zeta)`, computed term by term; stays finite on instances where
    /// `zeta` itself overflows.
    pub log_zeta: f64,
    /// Per-contraction ratio estimates `Y^i` of the reported repetition.
    pub ratio_estimates: Vec<f64>,
    pub contraction_edges: Vec<EdgeId>,
    pub loop_exponent: usize,
    pub samples_per_ratio: usize,
    pub delta_per_sample: f64,
    pub total_chain_steps: u64,
    /// All repetition estimates (median is `zeta`).
    pub repetition_zetas: Vec<f64>,
    pub wall: Duration,
}

/// Deterministic contraction sequence: repeatedly contract the lowest live
/// non-loop edge id until every component is a single vertex with loops.
pub fn contraction_sequence(g: &OrientedMultigraph) -> Vec<EdgeId> {
    let mut current = g.clone();
    let mut seq = Vec::new();
    loop {
        let next = current
            .live_edges()
            .find(|&e| !current.is_loop(e).expect("live edge"));
        match next {
            Some(e) => {
                current = current.contract(e).expect("live non-loop edge");
                seq.push(e);
            }
            None => break,
        }
    }
    debug_assert_eq!(seq.len(), g.n_vertices() - g.components());
    debug_assert_eq!(
        current.n_edges(),
        g.n_edges() + g.components() - g.n_vertices()
    );
    seq
}

/// `Y_j = 1/x - (1-x)/x * X_j`, the unbiased per-sample ratio term.
pub fn ratio_y(x: f64, edge_unused: bool) -> f64 {
    if edge_unused {
        1.0
    } else {
        1.0 / x
    }
}

struct LevelOutcome {
    y: f64,
    steps: u64,
}

/// Estimate one contraction ratio by drawing `samples` flows on `g` with a
/// delta-approximate sampler and averaging `Y_j`. Samples are independent
/// cold-start chain runs with per-sample streams, so the result does not
/// depend on the thread count.
#[allow(clippy::too_many_arguments)]
fn estimate_ratio_level(
    g: &OrientedMultigraph,
    gens: &EvenGenSet,
    e: EdgeId,
    q: u32,
    x: f64,
    samples: usize,
    delta: f64,
    sampler: SamplerKind,
    seed: u64,
    repetition: u32,
    level: u32,
    threads: usize,
) -> Result<LevelOutcome> {
    if gens.is_empty() {
        // Trivial cycle space: the zero flow is the only flow, so the edge
        // always carries zero and the ratio is exactly 1.
        return Ok(LevelOutcome { y: 1.0, steps: 0 });
    }
    enum Prepared {
        Flow(FlowChainConfig, u64),
        Joint(JointChainConfig, u64),
    }
    let prepared = match sampler {
        SamplerKind::Flow => {
            let (d, iota) = flow_chain::lift_flow_params(gens.params());
            let steps = flow_chain::mixing_time_bound(x, gens.len(), d, iota, delta)?;
            let cfg = FlowChainConfig::new(x, q, gens.clone(), seed)?;
            Prepared::Flow(cfg, steps)
        }
        SamplerKind::Joint => {
            let (ell, s) = joint_chain::lift_joint_params(gens.params());
            let cfg = JointChainConfig::new(x, q, gens.clone(), ell, s, g.n_edges(), seed)?;
            let steps =
                joint_chain::mixing_time_bound(x, q, ell, s, g.n_edges(), gens.len(), delta)?;
            Prepared::Joint(cfg, steps)
        }
    };
    let steps = match &prepared {
        Prepared::Flow(_, s) | Prepared::Joint(_, s) => *s,
    };

    let mut zero_on_e = vec![0u8; samples];
    let run_sample = |j: usize| -> u8 {
        let rng = counting_stream(seed, repetition, level, j as u64);
        let value = match &prepared {
            Prepared::Flow(cfg, steps) => {
                let mut chain = FlowChain::with_rng(cfg, g, rng).expect("q checked");
                chain.run(*steps);
                chain.state().value(e)
            }
            Prepared::Joint(cfg, steps) => {
                let mut chain = JointChain::with_rng(cfg, g, rng).expect("q checked");
                chain.run(*steps);
                chain.state().flow.value(e)
            }
        };
        (value == 0) as u8
    };
    let threads = threads.max(1).min(samples.max(1));
    if threads <= 1 {
        for (j, slot) in zero_on_e.iter_mut().enumerate() {
            *slot = run_sample(j);
        }
    } else {
        let chunk = samples.div_ceil(threads);
        std::thread::scope(|scope| {
            for (w, block) in zero_on_e.chunks_mut(chunk).enumerate() {
                let run_sample = &run_sample;
                scope.spawn(move || {
                    for (i, slot) in block.iter_mut().enumerate() {
                        *slot = run_sample(w * chunk + i);
                    }
                });
            }
        });
    }
    // Exact integer reduction: the mean only depends on the count of ones.
    let ones: u64 = zero_on_e.iter().map(|&b| b as u64).sum();
    let zeros = samples as u64 - ones;
    let y = (ones as f64 * 1.0 + zeros as f64 * (1.0 / x)) / samples as f64;
    Ok(LevelOutcome {
        y,
        steps: steps * samples as u64,
    })
}

/// Estimate a single contraction ratio `Z(G/e)/Z(G)` (public wrapper used
/// by tests and diagnostics).
#[allow(clippy::too_many_arguments)]
pub fn estimate_ratio(
    g: &OrientedMultigraph,
    gens: &EvenGenSet,
    e: EdgeId,
    q: u32,
    x: f64,
    samples: usize,
    delta: f64,
    cfg: &EstimateConfig,
) -> Result<f64> {
    check_x_domain(x)?;
    if !g.is_live_edge(e) || g.is_loop(e)? {
        return Err(Error::invalid("ratio edge must be live and not a loop"));
    }
    let outcome = estimate_ratio_level(
        g,
        gens,
        e,
        q,
        x,
        samples,
        delta,
        cfg.sampler,
        cfg.seed,
        0,
        0,
        cfg.threads,
    )?;
    Ok(outcome.y)
}

fn check_x_domain(x: f64) -> Result<()> {
    if !(1.0 / 3.0..1.0).contains(&x) {
        return Err(Error::invalid(format!(
            "counting requires x in [1/3, 1), got {x}"
        )));
    }
    Ok(())
}

/// Multiplicative estimator for `Z_flow(G; q, x)`.
pub fn estimate_z_flow(
    g: &OrientedMultigraph,
    gens: &EvenGenSet,
    q: u32,
    x: f64,
    cfg: &EstimateConfig,
) -> Result<EstimateReport> {
    check_x_domain(x)?;
    if q < 2 {
        return Err(Error::invalid("q must be >= 2"));
    }
    let start_time = Instant::now();
    let seq = contraction_sequence(g);
    let t = seq.len();
    let loop_exponent = g.n_edges() + g.components() - g.n_vertices();
    let base = 1.0 + (q as f64 - 1.0) * x;

    if t == 0 {
        return Ok(EstimateReport {
            zeta: base.powi(loop_exponent as i32),
            log_zeta: loop_exponent as f64 * base.ln(),
            ratio_estimates: Vec::new(),
            contraction_edges: seq,
            loop_exponent,
            samples_per_ratio: 0,
            delta_per_sample: 0.0,
            total_chain_steps: 0,
            repetition_zetas: vec![base.powi(loop_exponent as i32)],
            wall: start_time.elapsed(),
        });
    }

    let samples = cfg
        .samples_per_ratio
        .unwrap_or_else(|| (48.0 * t as f64 / (cfg.epsilon * cfg.epsilon)).ceil() as usize)
        .max(1);
    let delta = cfg
        .delta_per_sample
        .unwrap_or(cfg.epsilon / (16.0 * t as f64));
    let reps = cfg.median_of.max(1);

    let mut rep_zetas = Vec::with_capacity(reps);
    let mut rep_ratios: Vec<Vec<f64>> = Vec::with_capacity(reps);
    let mut total_steps = 0u64;
    for rep in 0..reps {
        let mut graph_i = g.clone();
        let mut gens_i = gens.clone();
        let mut ratios = Vec::with_capacity(t);
        for (level, &e) in seq.iter().enumerate() {
            let outcome = estimate_ratio_level(
                &graph_i,
                &gens_i,
                e,
                q,
                x,
                samples,
                delta,
                cfg.sampler,
                cfg.seed,
                rep as u32,
                level as u32,
                cfg.threads,
            )?;
            ratios.push(outcome.y);
            total_steps += outcome.steps;
            graph_i = graph_i.contract(e)?;
            gens_i = gens_i.contract(e);
        }
        let product: f64 = ratios.iter().product();
        rep_zetas.push(base.powi(loop_exponent as i32) / product);
        rep_ratios.push(ratios);
    }

    // Median by sorted order; ties and even counts resolve deterministically.
    let mut order: Vec<usize> = (0..reps).collect();
    order.sort_by(|&a, &b| rep_zetas[a].total_cmp(&rep_zetas[b]));
    let median_rep = order[reps / 2];
    let log_zeta = loop_exponent as f64 * base.ln()
        - rep_ratios[median_rep].iter().map(|y| y.ln()).sum::<f64>();

    Ok(EstimateReport {
        zeta: rep_zetas[median_rep],
        log_zeta,
        ratio_estimates: rep_ratios[median_rep].clone(),
        contraction_edges: seq,
        loop_exponent,
        samples_per_ratio: samples,
        delta_per_sample: delta,
        total_chain_steps: total_steps,
        repetition_zetas: rep_zetas,
        wall: start_time.elapsed(),
    })
}

/// Potts estimator through the parameter map: `x = (w-1)/(w+q-1)` must land
/// in the admissible range, and
/// `Z_Potts = q^|V| (1-x)^{-|E|} Z_flow`.
pub fn estimate_z_potts(
    g: &OrientedMultigraph,
    gens: &EvenGenSet,
    q: u32,
    w: f64,
    cfg: &EstimateConfig,
) -> Result<EstimateReport> {
    let x = crate::couplings::x_from_potts_w(q, w);
    check_x_domain(x)?;
    let mut report = estimate_z_flow(g, gens, q, x, cfg)?;
    let scale = (q as f64).powi(g.n_vertices() as i32) * (1.0 - x).powi(-(g.n_edges() as i32));
    report.zeta *= scale;
    report.log_zeta +=
        g.n_vertices() as f64 * (q as f64).ln() - g.n_edges() as f64 * (1.0 - x).ln();
    for z in &mut report.repetition_zetas {
        *z *= scale;
    }
    Ok(report)
}
