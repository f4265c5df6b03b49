//! The flow Markov chain: heat-bath moves along even generators.
//!
//! One step picks a generator `C` uniformly among the `r` generators and
//! resamples the coefficient of `C` from its exact conditional: the move to
//! `f + t*chi_C` has probability proportional to `x^{-a_t}`, where `a_t`
//! counts the edges of `C` carrying value zero after the move. Holding is
//! the `t = 0` case of the same distribution, which matches the chain
//! definition's lumped holding probability exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cycle_space::EvenGenSet;
use crate::error::Error;
use crate::flow::FlowState;
use crate::graph::OrientedMultigraph;
use crate::oracle::EnumerableChain;
use crate::streams::{stream, Purpose};
use crate::Result;

/// Parameters of the flow chain. `x` is the fugacity in (0, 1); all
/// randomness derives from `seed`.
#[derive(Debug, Clone)]
pub struct FlowChainConfig {
    pub x: f64,
    pub q: u32,
    pub gens: EvenGenSet,
    pub seed: u64,
}

impl FlowChainConfig {
    pub fn new(x: f64, q: u32, gens: EvenGenSet, seed: u64) -> Result<Self> {
        if !(0.0 < x && x < 1.0) {
            return Err(Error::invalid(format!("x must be in (0,1), got {x}")));
        }
        if q < 2 {
            return Err(Error::invalid(format!("q must be >= 2, got {q}")));
        }
        if gens.is_empty() {
            return Err(Error::invalid("generating set must be nonempty"));
        }
        Ok(FlowChainConfig { x, q, gens, seed })
    }
}

/// Heat-bath weights for the shift counts `a_t`, normalized by the largest
/// exponent so every power of `x` is in (0, 1]. `x_pow[k]` must hold `x^k`.
fn shift_weights(counts: &[u64], x_pow: &[f64]) -> Vec<f64> {
    let a_max = *counts.iter().max().expect("q >= 2");
    counts
        .iter()
        .map(|&a| x_pow[(a_max - a) as usize])
        .collect()
}

/// A running replica of the flow chain. Mutable state is confined to the
/// replica; independent replicas use independent seed-derived streams.
pub struct FlowChain<'a> {
    cfg: &'a FlowChainConfig,
    state: FlowState,
    rng: ChaCha8Rng,
    x_pow: Vec<f64>,
    steps: u64,
    edge_touches: u64,
}

impl<'a> FlowChain<'a> {
    /// New replica started at the zero flow.
    pub fn new(cfg: &'a FlowChainConfig, g: &OrientedMultigraph, replica: u64) -> Result<Self> {
        let state = FlowState::zero(g, cfg.q)?;
        Ok(Self::from_state(cfg, state, replica))
    }

    /// New replica started at an arbitrary flow.
    pub fn from_state(cfg: &'a FlowChainConfig, state: FlowState, replica: u64) -> Self {
        let ell = cfg.gens.params().ell;
        let x_pow: Vec<f64> = (0..=ell as i32).map(|k| cfg.x.powi(k)).collect();
        FlowChain {
            cfg,
            state,
            rng: stream(cfg.seed, Purpose::FlowChain, replica),
            x_pow,
            steps: 0,
            edge_touches: 0,
        }
    }

    /// Replica sharing an externally constructed stream (used by the
    /// counting estimator, which keys streams per sample).
    pub fn with_rng(
        cfg: &'a FlowChainConfig,
        g: &OrientedMultigraph,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let state = FlowState::zero(g, cfg.q)?;
        let ell = cfg.gens.params().ell;
        let x_pow: Vec<f64> = (0..=ell as i32).map(|k| cfg.x.powi(k)).collect();
        Ok(FlowChain {
            cfg,
            state,
            rng,
            x_pow,
            steps: 0,
            edge_touches: 0,
        })
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Generator-edge touches so far; each step costs at most `2 ell`.
    pub fn edge_touches(&self) -> u64 {
        self.edge_touches
    }

    /// One heat-bath move.
    pub fn step(&mut self) {
        let r = self.cfg.gens.len();
        let c = self.cfg.gens.generator(self.rng.random_range(0..r));
        let counts = self.state.zero_count_on(c);
        self.edge_touches += c.len() as u64;
        let weights = shift_weights(&counts, &self.x_pow);
        let total: f64 = weights.iter().sum();
        let mut pick = self.rng.random::<f64>() * total;
        // Fall back to the last shift if rounding leaves pick nonnegative.
        let mut t = self.cfg.q - 1;
        for (i, &w) in weights.iter().enumerate() {
            pick -= w;
            if pick < 0.0 {
                t = i as u32;
                break;
            }
        }
        if t != 0 {
            self.state.add_multiple(t, c);
            self.edge_touches += c.len() as u64;
        }
        self.steps += 1;
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Mixing-time upper bound for the flow chain with class parameters
/// `d >= 2`, `iota >= 1`: valid whenever the generating set satisfies
/// `d(C) <= d` and `iota(C) <= iota`. Returns the ceiled step count
/// `(4r/(d iota)) ln(r/delta) / xi` with `xi = x - (1 - 2/((d+1) iota))`,
/// or the out-of-range signal when `x` is at or below the threshold.
pub fn mixing_time_bound(x: f64, r: usize, d: u32, iota: u32, delta: f64) -> Result<u64> {
    if d < 2 || iota < 1 {
        return Err(Error::invalid(format!(
            "bound needs d >= 2 and iota >= 1, got d = {d}, iota = {iota}"
        )));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if r == 0 {
        return Err(Error::invalid("bound needs at least one generator"));
    }
    let threshold = 1.0 - 2.0 / ((d as f64 + 1.0) * iota as f64);
    if x <= threshold {
        return Err(Error::OutOfRangeX { x, threshold });
    }
    let xi = x - threshold;
    let steps = (4.0 * r as f64) / (d as f64 * iota as f64) * (r as f64 / delta).ln() / xi;
    Ok(steps.ceil() as u64)
}

/// Lift instance parameters into the bound's domain: any `(d, iota)` with
/// `d >= max(d(C), 2)` and `iota >= max(iota(C), 1)` upper-bounds the
/// instance, so small sets (singletons have `d = iota = 0`) remain covered.
pub fn lift_flow_params(params: crate::cycle_space::GenParams) -> (u32, u32) {
    (params.d.max(2) as u32, params.iota.max(1) as u32)
}

/// Run the chain from the zero flow for the mixing-time bound and return
/// the state; the output law is within total variation `delta` of `mu_flow`.
pub fn sample(
    cfg: &FlowChainConfig,
    g: &OrientedMultigraph,
    d: u32,
    iota: u32,
    delta: f64,
    replica: u64,
) -> Result<(FlowState, u64)> {
    let steps = mixing_time_bound(cfg.x, cfg.gens.len(), d, iota, delta)?;
    let mut chain = FlowChain::new(cfg, g, replica)?;
    chain.run(steps);
    Ok((chain.state, steps))
}

/// Exact transition law of the flow chain, for matrix assembly on
/// enumerable instances.
pub struct FlowChainLaw<'a> {
    pub g: &'a OrientedMultigraph,
    pub q: u32,
    pub x: f64,
    pub gens: &'a EvenGenSet,
}

impl EnumerableChain for FlowChainLaw<'_> {
    type State = FlowState;

    fn states(&self) -> Result<Vec<FlowState>> {
        crate::oracle::flows_within(self.g, &crate::graph::EdgeSubset::full(self.g), self.q)
    }

    fn transitions(&self, f: &FlowState) -> Vec<(FlowState, f64)> {
        let r = self.gens.len() as f64;
        let ell = self.gens.params().ell;
        let x_pow: Vec<f64> = (0..=ell as i32).map(|k| self.x.powi(k)).collect();
        let mut out = Vec::new();
        for c in self.gens.generators() {
            let weights = shift_weights(&f.zero_count_on(c), &x_pow);
            let total: f64 = weights.iter().sum();
            for (t, &w) in weights.iter().enumerate() {
                out.push((f.plus(t as u32, c), w / total / r));
            }
        }
        out
    }

    fn start(&self) -> FlowState {
        FlowState::zero(self.g, self.q).expect("q >= 2")
    }

    fn stationary_weight(&self, f: &FlowState) -> f64 {
        self.x.powi(f.support_size() as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle_space::SignedEvenSet;
    use crate::oracle::{self, transition_matrix};

    fn triangle_setup() -> (OrientedMultigraph, EvenGenSet) {
        let g = OrientedMultigraph::from_edge_list(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let c = SignedEvenSet::new(vec![(0, 1), (1, 1), (2, 1)]).unwrap();
        let gens = EvenGenSet::new(3, vec![c]).unwrap();
        (g, gens)
    }

    #[test]
    fn config_validation() {
        let (_, gens) = triangle_setup();
        assert!(FlowChainConfig::new(0.5, 2, gens.clone(), 0).is_ok());
        assert!(FlowChainConfig::new(1.0, 2, gens.clone(), 0).is_err());
        assert!(FlowChainConfig::new(0.5, 1, gens.clone(), 0).is_err());
        assert!(FlowChainConfig::new(0.0, 2, gens, 0).is_err());
    }

    #[test]
    fn triangle_law_hand_values() {
        let (g, gens) = triangle_setup();
        let x: f64 = 0.5;
        let law = FlowChainLaw {
            g: &g,
            q: 2,
            x,
            gens: &gens,
        };
        let zero = FlowState::zero(&g, 2).unwrap();
        let one = zero.plus(1, gens.generator(0));
        // From 0: move to chi with probability x^3/(1+x^3).
        let trans = law.transitions(&zero);
        let move_prob: f64 = trans
            .iter()
            .filter(|(s, _)| *s == one)
            .map(|&(_, p)| p)
            .sum();
        assert!((move_prob - x.powi(3) / (1.0 + x.powi(3))).abs() < 1e-14);
        // From chi: move back with probability 1/(1+x^3).
        let trans = law.transitions(&one);
        let back_prob: f64 = trans
            .iter()
            .filter(|(s, _)| *s == zero)
            .map(|&(_, p)| p)
            .sum();
        assert!((back_prob - 1.0 / (1.0 + x.powi(3))).abs() < 1e-14);
    }

    #[test]
    fn near_one_fugacity_is_almost_uniform() {
        let (g, gens) = triangle_setup();
        let law = FlowChainLaw {
            g: &g,
            q: 3,
            x: 0.999_999,
            gens: &gens,
        };
        let zero = FlowState::zero(&g, 3).unwrap();
        for (_, p) in law.transitions(&zero) {
            assert!((p - 1.0 / 3.0).abs() < 1e-5);
        }
    }

    #[test]
    fn exponent_shift_invariance() {
        // Normalizing by max exponent must agree with normalizing by min.
        let x: f64 = 0.37;
        let counts = [4u64, 0, 2, 1];
        let x_pow: Vec<f64> = (0..=4).map(|k| x.powi(k)).collect();
        let by_max = shift_weights(&counts, &x_pow);
        let total_max: f64 = by_max.iter().sum();
        let a_min = *counts.iter().min().unwrap();
        let by_min: Vec<f64> = counts
            .iter()
            .map(|&a| x.powi(-((a - a_min) as i32)))
            .collect();
        let total_min: f64 = by_min.iter().sum();
        for t in 0..counts.len() {
            assert!((by_max[t] / total_max - by_min[t] / total_min).abs() < 1e-12);
        }
    }

    #[test]
    fn run_is_deterministic_and_zero_steps_is_identity() {
        let (g, gens) = triangle_setup();
        let cfg = FlowChainConfig::new(0.5, 3, gens, 42).unwrap();
        let mut a = FlowChain::new(&cfg, &g, 0).unwrap();
        let mut b = FlowChain::new(&cfg, &g, 0).unwrap();
        a.run(0);
        assert_eq!(a.state(), &FlowState::zero(&g, 3).unwrap());
        a.run(500);
        b.run(500);
        assert_eq!(a.state(), b.state());
        let mut c = FlowChain::new(&cfg, &g, 1).unwrap();
        c.run(500);
        // Different replicas follow different trajectories (statistically).
        assert_eq!(a.steps(), c.steps());
    }

    #[test]
    fn long_run_matches_stationary_mass() {
        let (g, gens) = triangle_setup();
        let x = 0.5f64;
        let cfg = FlowChainConfig::new(x, 2, gens, 7).unwrap();
        let mut chain = FlowChain::new(&cfg, &g, 0).unwrap();
        let n = 1_000_000u64;
        let mut full_support = 0u64;
        for _ in 0..n {
            chain.step();
            full_support += (chain.state().support_size() == 3) as u64;
        }
        let p = x.powi(3) / (1.0 + x.powi(3)); // = 0.125 / 1.125
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let phat = full_support as f64 / n as f64;
        assert!(
            (phat - p).abs() < 3.0 * sigma,
            "phat = {phat}, p = {p}, sigma = {sigma}"
        );
    }

    #[test]
    fn bound_examples() {
        // 3x3 grid faces with the 2D lattice class parameters.
        assert_eq!(mixing_time_bound(0.9, 4, 4, 1, 0.01).unwrap(), 80);
        // Exactly at the threshold: out of range.
        let err = mixing_time_bound(0.6, 4, 4, 1, 0.01).unwrap_err();
        assert!(
            matches!(err, Error::OutOfRangeX { threshold, .. } if (threshold - 0.6).abs() < 1e-15)
        );
        // Bad domains are faults, not signals.
        assert!(matches!(
            mixing_time_bound(0.9, 4, 1, 1, 0.01).unwrap_err(),
            Error::InvalidParameter(_)
        ));
        // Monotone in delta: looser budgets never need more steps.
        assert!(
            mixing_time_bound(0.9, 4, 4, 1, 0.5).unwrap()
                <= mixing_time_bound(0.9, 4, 4, 1, 0.01).unwrap()
        );
    }

    #[test]
    fn bound_is_at_least_2r_log_r_over_delta() {
        for (r, d, iota) in [(4usize, 2u32, 1u32), (9, 4, 1), (12, 6, 2), (3, 12, 3)] {
            let threshold = 1.0 - 2.0 / ((d as f64 + 1.0) * iota as f64);
            for x in [threshold + 1e-6, threshold + 0.01, 0.99] {
                if x >= 1.0 {
                    continue;
                }
                for delta in [0.5, 0.01] {
                    let bound = mixing_time_bound(x, r, d, iota, delta).unwrap();
                    let floor = 2.0 * r as f64 * (r as f64 / delta).ln();
                    assert!(
                        bound as f64 >= floor,
                        "bound {bound} under floor {floor} at x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn sampled_distribution_is_close_to_stationary() {
        // Empirical check of the sample() contract on the glued triangles
        // (r = 2): TV between the sampled law and mu_flow is at most delta.
        let g = OrientedMultigraph::from_edge_list(4, &[(0, 1), (1, 2), (2, 0), (1, 3), (3, 2)])
            .unwrap();
        let c1 = SignedEvenSet::new(vec![(0, 1), (1, 1), (2, 1)]).unwrap();
        let c2 = SignedEvenSet::new(vec![(3, 1), (4, 1), (1, -1)]).unwrap();
        let gens = EvenGenSet::new(5, vec![c1, c2]).unwrap();
        let (d, iota) = lift_flow_params(gens.params());
        let x = 0.8;
        let delta = 0.1;
        let cfg = FlowChainConfig::new(x, 2, gens.clone(), 3).unwrap();

        let law = FlowChainLaw {
            g: &g,
            q: 2,
            x,
            gens: &gens,
        };
        let matrix = transition_matrix(&law).unwrap();
        let steps = mixing_time_bound(x, gens.len(), d, iota, delta).unwrap();
        let tv = matrix.tv_decay(&matrix.stationary, steps as usize);
        assert!(tv[steps as usize] <= delta);

        // The sampler must agree with the matrix: empirical frequencies of
        // sample() land near the exact t-step law.
        let n = 4000;
        let mut counts: std::collections::HashMap<Vec<u32>, usize> = Default::default();
        for replica in 0..n {
            let (f, used) = sample(&cfg, &g, d, iota, delta, replica).unwrap();
            assert_eq!(used, steps);
            *counts.entry(f.values().to_vec()).or_insert(0) += 1;
        }
        let mut mu_t = vec![0.0; matrix.n()];
        mu_t[matrix.start] = 1.0;
        for _ in 0..steps {
            mu_t = matrix.step(&mu_t);
        }
        for (i, s) in matrix.states.iter().enumerate() {
            let observed = counts.get(s.values()).copied().unwrap_or(0) as f64 / n as f64;
            let sigma = (mu_t[i] * (1.0 - mu_t[i]) / n as f64).sqrt();
            assert!(
                (observed - mu_t[i]).abs() < 4.0 * sigma + 1e-3,
                "state {i}: observed {observed}, expected {}",
                mu_t[i]
            );
        }
    }

    #[test]
    fn chain_matrix_checks_on_triangle() {
        let (g, gens) = triangle_setup();
        for (q, x) in [(2u32, 0.5f64), (3, 0.5), (2, 0.9)] {
            let law = FlowChainLaw {
                g: &g,
                q,
                x,
                gens: &gens,
            };
            let matrix = transition_matrix(&law).unwrap();
            assert!(matrix.row_sum_error() < 1e-12);
            assert!(matrix.detailed_balance_error(&matrix.stationary) < 1e-12);
            assert!(matrix.fixed_point_residual(&matrix.stationary) < 1e-12);
            let solved = matrix.solve_stationary();
            for (a, b) in solved.iter().zip(&matrix.stationary) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tv_decay_report_sanity() {
        let (g, gens) = triangle_setup();
        let law = FlowChainLaw {
            g: &g,
            q: 2,
            x: 0.5,
            gens: &gens,
        };
        let report = oracle::exact_tv_decay(&law, 12).unwrap();
        assert!(report.row_sum_error < 1e-12);
        assert!(report.detailed_balance_error < 1e-12);
        // TV at t=0 from a deterministic start is 1 - mu(start).
        let mu0 = 1.0 / 1.125;
        assert!((report.tv[0] - (1.0 - mu0)).abs() < 1e-12);
        // Non-increasing.
        for w in report.tv.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }
}
