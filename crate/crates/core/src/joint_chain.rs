//! The joint flow-random-cluster chain on pairs `(f, F)` with
//! `supp(f) ⊆ F`.
//!
//! A step flips a `p`-coin between a flow move (uniform generator `C` and
//! uniform shift `t`; apply only if the moved flow stays supported inside
//! `F`, which for `t != 0` is exactly `C ⊆ F`) and an edge move (uniform
//! edge; insert with probability `x` when absent, remove with probability
//! `1 - x` when present and carrying zero flow). The mixing probability `p`
//! solves the path-coupling balance equation and is determined by
//! `(x, q, ell, s, m, r)`; the stationary law is
//! `mu_flow-RC(f, F) ∝ x^|F| (1-x)^|E\F|`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cycle_space::EvenGenSet;
use crate::error::Error;
use crate::flow::FlowState;
use crate::graph::{EdgeId, EdgeSubset, OrientedMultigraph};
use crate::oracle::EnumerableChain;
use crate::streams::{stream, Purpose};
use crate::Result;

/// A pair `(f, F)`; the flow is supported within the edge subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointState {
    pub flow: FlowState,
    pub subset: EdgeSubset,
}

impl JointState {
    pub fn new(flow: FlowState, subset: EdgeSubset) -> Result<Self> {
        if !flow.supported_within(&subset) {
            return Err(Error::invalid("flow support must lie inside F"));
        }
        Ok(JointState { flow, subset })
    }
}

/// Solution of the balance equation for the flow-move probability, together
/// with the contraction rate `alpha` (reported for diagnostics only):
///
/// `p = (qr + qr ell (1-x)) / (qr + (q-1)sm + qm + qr ell (1-x))`
/// `alpha = (q - (q-1) ell s (1-x)) / (qr + (q-1)sm + qm + qr ell (1-x))`
///
/// Requires `x > 1 - q/((q-1) ell s)`, the same threshold as the mixing
/// bound; below it `alpha` would not be positive.
pub fn compute_p(x: f64, q: u32, ell: u32, s: u32, m: usize, r: usize) -> Result<(f64, f64)> {
    if q < 2 || ell < 3 || s < 2 {
        return Err(Error::invalid(format!(
            "compute_p needs q >= 2, ell >= 3, s >= 2; got q={q}, ell={ell}, s={s}"
        )));
    }
    if m == 0 || r == 0 {
        return Err(Error::invalid("compute_p needs m >= 1 and r >= 1"));
    }
    let (qf, ellf, sf, mf, rf) = (q as f64, ell as f64, s as f64, m as f64, r as f64);
    let threshold = 1.0 - qf / ((qf - 1.0) * ellf * sf);
    if x <= threshold {
        return Err(Error::OutOfRangeX { x, threshold });
    }
    let denom = qf * rf + (qf - 1.0) * sf * mf + qf * mf + qf * rf * ellf * (1.0 - x);
    let p = (qf * rf + qf * rf * ellf * (1.0 - x)) / denom;
    let alpha = (qf - (qf - 1.0) * ellf * sf * (1.0 - x)) / denom;
    Ok((p, alpha))
}

/// Configuration of the joint chain. `ell` and `s` are the class parameters
/// used to determine `p`; they must upper-bound the generating set's actual
/// values.
#[derive(Debug, Clone)]
pub struct JointChainConfig {
    pub x: f64,
    pub q: u32,
    pub gens: EvenGenSet,
    pub ell: u32,
    pub s: u32,
    pub p: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl JointChainConfig {
    pub fn new(
        x: f64,
        q: u32,
        gens: EvenGenSet,
        ell: u32,
        s: u32,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0 < x && x < 1.0) {
            return Err(Error::invalid(format!("x must be in (0,1), got {x}")));
        }
        if gens.is_empty() {
            return Err(Error::invalid("generating set must be nonempty"));
        }
        let params = gens.params();
        if (params.ell as u32) > ell || (params.s as u32) > s {
            return Err(Error::invalid(format!(
                "class parameters (ell={ell}, s={s}) must upper-bound the set's (ell={}, s={})",
                params.ell, params.s
            )));
        }
        let (p, alpha) = compute_p(x, q, ell, s, m, gens.len())?;
        Ok(JointChainConfig {
            x,
            q,
            gens,
            ell,
            s,
            p,
            alpha,
            seed,
        })
    }
}

/// A running replica of the joint chain.
pub struct JointChain<'a> {
    cfg: &'a JointChainConfig,
    state: JointState,
    live_edges: Vec<EdgeId>,
    rng: ChaCha8Rng,
    steps: u64,
}

impl<'a> JointChain<'a> {
    /// Start state: zero flow, `F = E`.
    pub fn new(cfg: &'a JointChainConfig, g: &OrientedMultigraph, replica: u64) -> Result<Self> {
        let state = JointState::new(FlowState::zero(g, cfg.q)?, EdgeSubset::full(g))?;
        Ok(JointChain {
            cfg,
            state,
            live_edges: g.live_edges().collect(),
            rng: stream(cfg.seed, Purpose::JointChain, replica),
            steps: 0,
        })
    }

    pub fn with_rng(
        cfg: &'a JointChainConfig,
        g: &OrientedMultigraph,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let state = JointState::new(FlowState::zero(g, cfg.q)?, EdgeSubset::full(g))?;
        Ok(JointChain {
            cfg,
            state,
            live_edges: g.live_edges().collect(),
            rng,
            steps: 0,
        })
    }

    pub fn state(&self) -> &JointState {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self) {
        let cfg = self.cfg;
        if self.rng.random::<f64>() < cfg.p {
            // Flow move.
            let c = cfg.gens.generator(self.rng.random_range(0..cfg.gens.len()));
            let t = self.rng.random_range(0..cfg.q);
            if t != 0
                && c.entries()
                    .iter()
                    .all(|&(e, _)| self.state.subset.contains(e))
            {
                self.state.flow.add_multiple(t, c);
            }
        } else {
            // Edge move.
            let e = self.live_edges[self.rng.random_range(0..self.live_edges.len())];
            if !self.state.subset.contains(e) {
                if self.rng.random::<f64>() < cfg.x {
                    self.state.subset.insert(e);
                }
            } else if self.state.flow.value(e) == 0 && self.rng.random::<f64>() < 1.0 - cfg.x {
                self.state.subset.remove(e);
            }
        }
        self.steps += 1;
        debug_assert!(self.state.flow.supported_within(&self.state.subset));
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Mixing-time upper bound for the joint chain with class parameters
/// `ell >= 3`, `s >= 2`: the ceiled step count
/// `(2(m+r)/ell) ln((2m+r)/delta) / xi` with
/// `xi = x - (1 - q/((q-1) ell s))`, or the out-of-range signal.
pub fn mixing_time_bound(
    x: f64,
    q: u32,
    ell: u32,
    s: u32,
    m: usize,
    r: usize,
    delta: f64,
) -> Result<u64> {
    if q < 2 || ell < 3 || s < 2 {
        return Err(Error::invalid(format!(
            "bound needs q >= 2, ell >= 3, s >= 2; got q={q}, ell={ell}, s={s}"
        )));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    let (qf, ellf, sf) = (q as f64, ell as f64, s as f64);
    let threshold = 1.0 - qf / ((qf - 1.0) * ellf * sf);
    if x <= threshold {
        return Err(Error::OutOfRangeX { x, threshold });
    }
    let xi = x - threshold;
    let steps = 2.0 * (m + r) as f64 / ellf * ((2 * m + r) as f64 / delta).ln() / xi;
    Ok(steps.ceil() as u64)
}

/// Lift instance parameters into the bound's domain (`ell >= 3`, `s >= 2`).
pub fn lift_joint_params(params: crate::cycle_space::GenParams) -> (u32, u32) {
    (params.ell.max(3) as u32, params.s.max(2) as u32)
}

/// Run the chain from `(0, E)` for the mixing-time bound; the output law
/// is within total variation `delta` of `mu_flow-RC`.
pub fn sample(
    cfg: &JointChainConfig,
    g: &OrientedMultigraph,
    delta: f64,
    replica: u64,
) -> Result<(JointState, u64)> {
    let steps = mixing_time_bound(
        cfg.x,
        cfg.q,
        cfg.ell,
        cfg.s,
        g.n_edges(),
        cfg.gens.len(),
        delta,
    )?;
    let mut chain = JointChain::new(cfg, g, replica)?;
    chain.run(steps);
    Ok((chain.state, steps))
}

/// Exact transition law of the joint chain for matrix assembly.
pub struct JointChainLaw<'a> {
    pub g: &'a OrientedMultigraph,
    pub cfg: &'a JointChainConfig,
}

impl EnumerableChain for JointChainLaw<'_> {
    type State = JointState;

    fn states(&self) -> Result<Vec<JointState>> {
        let mut states = Vec::new();
        crate::oracle::for_each_subset(self.g, crate::oracle::MATRIX_LIMIT, |subset| {
            for flow in
                crate::oracle::flows_within(self.g, subset, self.cfg.q).expect("guarded size")
            {
                states.push(JointState {
                    flow,
                    subset: subset.clone(),
                });
            }
        })?;
        Ok(states)
    }

    fn transitions(&self, st: &JointState) -> Vec<(JointState, f64)> {
        let cfg = self.cfg;
        let (p, x, q) = (cfg.p, cfg.x, cfg.q);
        let r = cfg.gens.len();
        let m = self.g.n_edges();
        let mut out = Vec::new();
        // Flow moves: probability p, then uniform over (C, t).
        let per_move = p / (r as f64 * q as f64);
        for c in cfg.gens.generators() {
            let feasible = c.entries().iter().all(|&(e, _)| st.subset.contains(e));
            for t in 0..q {
                if t == 0 || !feasible {
                    out.push((st.clone(), per_move));
                } else {
                    out.push((
                        JointState {
                            flow: st.flow.plus(t, c),
                            subset: st.subset.clone(),
                        },
                        per_move,
                    ));
                }
            }
        }
        // Edge moves: probability 1 - p, then a uniform edge.
        let per_edge = (1.0 - p) / m as f64;
        for e in self.g.live_edges() {
            if !st.subset.contains(e) {
                let mut inserted = st.subset.clone();
                inserted.insert(e);
                out.push((
                    JointState {
                        flow: st.flow.clone(),
                        subset: inserted,
                    },
                    per_edge * x,
                ));
                out.push((st.clone(), per_edge * (1.0 - x)));
            } else if st.flow.value(e) == 0 {
                let mut removed = st.subset.clone();
                removed.remove(e);
                out.push((
                    JointState {
                        flow: st.flow.clone(),
                        subset: removed,
                    },
                    per_edge * (1.0 - x),
                ));
                out.push((st.clone(), per_edge * x));
            } else {
                out.push((st.clone(), per_edge));
            }
        }
        out
    }

    fn start(&self) -> JointState {
        JointState {
            flow: FlowState::zero(self.g, self.cfg.q).expect("q >= 2"),
            subset: EdgeSubset::full(self.g),
        }
    }

    fn stationary_weight(&self, st: &JointState) -> f64 {
        let m = self.g.n_edges();
        self.cfg.x.powi(st.subset.len() as i32)
            * (1.0 - self.cfg.x).powi((m - st.subset.len()) as i32)
    }
}
