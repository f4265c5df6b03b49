//! Brute-force ground truth on small instances.
//!
//! Everything here enumerates: exact partition functions for the three
//! models, exact probability distributions, exact transition matrices of the
//! chains (through the [`EnumerableChain`] trait), exact total-variation
//! decay, pushforwards of couplings with all auxiliary randomness summed
//! out, and the sum-of-minima inequality checker. Size guards keep the
//! enumerations at desk scale; partition sums use compensated accumulation.

use std::collections::HashMap;
use std::hash::Hash;

use crate::couplings::PottsConfig;
use crate::error::Error;
use crate::flow::{FlowFrame, FlowState};
use crate::graph::{component_labels, EdgeId, EdgeSubset, OrientedMultigraph};
use crate::Result;

/// Default cap on enumerated states for partition sums.
pub const ENUM_LIMIT: usize = 1_000_000;
/// Cap on chain state spaces for exact matrices.
pub const MATRIX_LIMIT: usize = 10_000;

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Exact `Z_flow(G; q, x)`: flows enumerated through free values on
/// non-forest edges, never by filtering all q^m edge assignments.
pub fn exact_z_flow(g: &OrientedMultigraph, q: u32, x: f64) -> Result<f64> {
    let full = EdgeSubset::full(g);
    let frame = FlowFrame::new(g, &full);
    let mut sum = Kahan::default();
    frame.for_each(q, ENUM_LIMIT, |f| {
        sum.add(x.powi(f.support_size() as i32));
    })?;
    Ok(sum.value())
}

/// Exact `Z_Potts(G; q, w)` by enumerating all q^|V| colourings.
pub fn exact_z_potts(g: &OrientedMultigraph, q: u32, w: f64) -> Result<f64> {
    let vertices: Vec<usize> = g.live_vertices().collect();
    let count = (q as f64).powi(vertices.len() as i32);
    if count > ENUM_LIMIT as f64 {
        return Err(Error::TooLarge {
            what: "q^|V| colourings",
            size: count,
            limit: ENUM_LIMIT as f64,
        });
    }
    let mut sum = Kahan::default();
    for_each_colouring(g, q, |sigma| {
        sum.add(w.powi(sigma.monochromatic_edges(g) as i32));
    });
    Ok(sum.value())
}

/// Exact `Z_RC(G; q, y)` by enumerating all 2^|E| edge subsets.
pub fn exact_z_rc(g: &OrientedMultigraph, q: u32, y: f64) -> Result<f64> {
    let mut sum = Kahan::default();
    for_each_subset(g, ENUM_LIMIT, |subset| {
        let c = g.components_within(Some(subset));
        sum.add((q as f64).powi(c as i32) * y.powi(subset.len() as i32));
    })?;
    Ok(sum.value())
}

/// Visit all spin configurations of the live vertices (spins `1..=q`).
pub fn for_each_colouring(g: &OrientedMultigraph, q: u32, mut visit: impl FnMut(&PottsConfig)) {
    let vertices: Vec<usize> = g.live_vertices().collect();
    let mut spins = vec![0u32; g.vertex_universe()];
    for &v in &vertices {
        spins[v] = 1;
    }
    loop {
        let sigma = PottsConfig::new(g, q, spins.clone()).expect("valid spins");
        visit(&sigma);
        let mut i = 0;
        while i < vertices.len() {
            let v = vertices[i];
            spins[v] += 1;
            if spins[v] <= q {
                break;
            }
            spins[v] = 1;
            i += 1;
        }
        if i == vertices.len() {
            break;
        }
    }
}

/// Visit all subsets of the live edges.
pub fn for_each_subset(
    g: &OrientedMultigraph,
    limit: usize,
    mut visit: impl FnMut(&EdgeSubset),
) -> Result<()> {
    let edges: Vec<EdgeId> = g.live_edges().collect();
    let count = 2f64.powi(edges.len() as i32);
    if count > limit as f64 {
        return Err(Error::TooLarge {
            what: "2^|E| subsets",
            size: count,
            limit: limit as f64,
        });
    }
    for mask in 0u64..(1u64 << edges.len()) {
        let mut subset = EdgeSubset::empty(g);
        for (i, &e) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                subset.insert(e);
            }
        }
        visit(&subset);
    }
    Ok(())
}

/// All flows supported within `F`.
pub fn flows_within(g: &OrientedMultigraph, subset: &EdgeSubset, q: u32) -> Result<Vec<FlowState>> {
    FlowFrame::new(g, subset).enumerate(q, ENUM_LIMIT)
}

/// Independent counting route for the flow-count formula: enumerate all
/// q^|F| assignments on `F` and count the ones satisfying conservation.
pub fn brute_force_flow_count(
    g: &OrientedMultigraph,
    subset: &EdgeSubset,
    q: u32,
    limit: usize,
) -> Result<usize> {
    let edges: Vec<EdgeId> = subset.edges().collect();
    let count = (q as f64).powi(edges.len() as i32);
    if count > limit as f64 {
        return Err(Error::TooLarge {
            what: "q^|F| assignments",
            size: count,
            limit: limit as f64,
        });
    }
    let mut values = vec![0u32; g.edge_universe()];
    let mut digits = vec![0u32; edges.len()];
    let mut found = 0usize;
    loop {
        for (i, &e) in edges.iter().enumerate() {
            values[e] = digits[i];
        }
        let flow = FlowState::from_values_unchecked(q, values.clone());
        if flow.verify_conservation(g) {
            found += 1;
        }
        let mut i = 0;
        while i < edges.len() {
            digits[i] += 1;
            if digits[i] < q {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == edges.len() {
            break;
        }
    }
    Ok(found)
}

// ---------------------------------------------------------------------------
// Identity suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentityReport {
    pub pass: bool,
    pub checks: Vec<IdentityCheck>,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// The partition-function identities tying the three models together, plus
/// the flow-count formula for every edge subset (graphs with at most 4096
/// subsets). Any violation is reported with the offending instance.
pub fn identity_suite(g: &OrientedMultigraph, q: u32, x: f64) -> Result<IdentityReport> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::invalid(format!(
            "identity suite needs 0 <= x < 1, got {x}"
        )));
    }
    let n = g.n_vertices();
    let m = g.n_edges();
    let w = crate::couplings::potts_w_from_x(q, x);
    let y = crate::couplings::rc_y_from_x(q, x);
    let z_flow = exact_z_flow(g, q, x)?;
    let z_potts = exact_z_potts(g, q, w)?;
    let z_rc = exact_z_rc(g, q, y)?;

    let qn = (q as f64).powi(n as i32);
    let shrink = (1.0 - x).powi(m as i32);
    let mut checks = Vec::new();
    let mut push = |name: String, lhs: f64, rhs: f64, tol: f64| {
        let err = rel_err(lhs, rhs);
        checks.push(IdentityCheck {
            name,
            pass: err <= tol,
            lhs,
            rhs,
            rel_err: err,
        });
    };
    push(
        format!("q^n Z_flow(x={x}) = (1-x)^m Z_Potts(w={w})"),
        qn * z_flow,
        shrink * z_potts,
        1e-9,
    );
    push(
        format!("q^n Z_flow(x={x}) = (1-x)^m Z_RC(y={y})"),
        qn * z_flow,
        shrink * z_rc,
        1e-9,
    );
    push(
        format!("Z_Potts(w={w}) = Z_RC(y=w-1)"),
        z_potts,
        exact_z_rc(g, q, w - 1.0)?,
        1e-9,
    );

    // Flow-count formula, exactly, for every F. Counting goes through the
    // forest frame; each flow is re-verified against the conservation law and
    // distinctness, and small subsets are cross-checked by brute force.
    if 2f64.powi(m as i32) <= 4096.0 {
        let mut worst: Option<(String, usize, usize)> = None;
        let mut all_ok = true;
        for_each_subset(g, 4096, |subset| {
            let flows = flows_within(g, subset, q).expect("guarded size");
            let distinct: std::collections::HashSet<&[u32]> =
                flows.iter().map(|f| f.values()).collect();
            let valid = flows.iter().all(|f| f.verify_conservation(g));
            let c = g.components_within(Some(subset));
            let expected = (q as usize).pow((subset.len() + c - g.n_vertices()) as u32);
            let mut ok = valid && distinct.len() == flows.len() && flows.len() == expected;
            if ok && (q as f64).powi(subset.len() as i32) <= 1024.0 {
                let brute = brute_force_flow_count(g, subset, q, 1024).expect("guarded");
                ok = brute == expected;
            }
            if !ok && all_ok {
                all_ok = false;
                let members: Vec<EdgeId> = subset.edges().collect();
                worst = Some((format!("{members:?}"), flows.len(), expected));
            }
        })?;
        let (name, lhs, rhs) = match worst {
            Some((f, got, want)) => (
                format!("flow-count q^(|F|-|V|+c(F)) failed at F={f}"),
                got as f64,
                want as f64,
            ),
            None => (
                "flow-count q^(|F|-|V|+c(F)) for all F".to_string(),
                1.0,
                1.0,
            ),
        };
        checks.push(IdentityCheck {
            name,
            pass: all_ok,
            lhs,
            rhs,
            rel_err: 0.0,
        });
    }

    Ok(IdentityReport {
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

// ---------------------------------------------------------------------------
// Exact distributions
// ---------------------------------------------------------------------------

/// A finite probability distribution with exact state list.
#[derive(Debug, Clone)]
pub struct ExactDistribution<S> {
    states: Vec<S>,
    probs: Vec<f64>,
    index: HashMap<S, usize>,
}

impl<S: Clone + Eq + Hash> ExactDistribution<S> {
    pub fn from_weights(weighted: Vec<(S, f64)>) -> Self {
        let mut states = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut index = HashMap::new();
        for (s, w) in weighted {
            match index.get(&s) {
                Some(&i) => weights[i] += w,
                None => {
                    index.insert(s.clone(), states.len());
                    states.push(s);
                    weights.push(w);
                }
            }
        }
        let total: f64 = {
            let mut k = Kahan::default();
            weights.iter().for_each(|&w| k.add(w));
            k.value()
        };
        let probs = weights.into_iter().map(|w| w / total).collect();
        ExactDistribution {
            states,
            probs,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, s: &S) -> f64 {
        self.index.get(s).map_or(0.0, |&i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.states.iter().zip(self.probs.iter().copied())
    }

    /// Largest pointwise probability difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0f64;
        for (s, p) in self.iter() {
            worst = worst.max((p - other.prob_of(s)).abs());
        }
        for (s, p) in other.iter() {
            worst = worst.max((p - self.prob_of(s)).abs());
        }
        worst
    }

    /// Total variation distance.
    pub fn tv(&self, other: &Self) -> f64 {
        let mut acc = 0f64;
        for (s, p) in self.iter() {
            acc += (p - other.prob_of(s)).abs();
        }
        // States only `other` carries; membership, not probability, decides
        // whether the first pass already covered them.
        for (s, p) in other.iter() {
            if !self.index.contains_key(s) {
                acc += p;
            }
        }
        acc / 2.0
    }
}

/// Exact `mu_flow` on the full edge set.
pub fn mu_flow(g: &OrientedMultigraph, q: u32, x: f64) -> Result<ExactDistribution<FlowState>> {
    let flows = flows_within(g, &EdgeSubset::full(g), q)?;
    Ok(ExactDistribution::from_weights(
        flows
            .into_iter()
            .map(|f| {
                let w = x.powi(f.support_size() as i32);
                (f, w)
            })
            .collect(),
    ))
}

/// Exact `mu_RC`.
pub fn mu_rc(g: &OrientedMultigraph, q: u32, y: f64) -> Result<ExactDistribution<EdgeSubset>> {
    let mut weighted = Vec::new();
    for_each_subset(g, ENUM_LIMIT, |subset| {
        let c = g.components_within(Some(subset));
        weighted.push((
            subset.clone(),
            (q as f64).powi(c as i32) * y.powi(subset.len() as i32),
        ));
    })?;
    Ok(ExactDistribution::from_weights(weighted))
}

/// Exact `mu_Potts`.
pub fn mu_potts(g: &OrientedMultigraph, q: u32, w: f64) -> Result<ExactDistribution<PottsConfig>> {
    let count = (q as f64).powi(g.n_vertices() as i32);
    if count > ENUM_LIMIT as f64 {
        return Err(Error::TooLarge {
            what: "q^|V| colourings",
            size: count,
            limit: ENUM_LIMIT as f64,
        });
    }
    let mut weighted = Vec::new();
    for_each_colouring(g, q, |sigma| {
        weighted.push((sigma.clone(), w.powi(sigma.monochromatic_edges(g) as i32)));
    });
    Ok(ExactDistribution::from_weights(weighted))
}

/// Exact joint measure `mu_flow-RC(f, F) ∝ x^|F| (1-x)^|E \ F|` over pairs
/// with `supp(f) ⊆ F`.
pub fn mu_flow_rc(
    g: &OrientedMultigraph,
    q: u32,
    x: f64,
) -> Result<ExactDistribution<(FlowState, EdgeSubset)>> {
    let m = g.n_edges();
    let mut weighted = Vec::new();
    for_each_subset(g, MATRIX_LIMIT, |subset| {
        let w = x.powi(subset.len() as i32) * (1.0 - x).powi((m - subset.len()) as i32);
        for f in flows_within(g, subset, q).expect("guarded size") {
            weighted.push(((f, subset.clone()), w));
        }
    })?;
    Ok(ExactDistribution::from_weights(weighted))
}

/// Marginal of the flow coordinate of a joint distribution.
pub fn flow_marginal(
    joint: &ExactDistribution<(FlowState, EdgeSubset)>,
) -> ExactDistribution<FlowState> {
    ExactDistribution::from_weights(joint.iter().map(|((f, _), p)| (f.clone(), p)).collect())
}

// ---------------------------------------------------------------------------
// Coupling pushforwards (all auxiliary randomness summed out)
// ---------------------------------------------------------------------------

/// Pushforward of a flow distribution through the flow -> RC coupling.
pub fn flow_to_rc_pushforward(
    g: &OrientedMultigraph,
    mu: &ExactDistribution<FlowState>,
    x: f64,
) -> Result<ExactDistribution<EdgeSubset>> {
    let m = g.n_edges();
    if 2f64.powi(m as i32) > ENUM_LIMIT as f64 {
        return Err(Error::TooLarge {
            what: "2^|E| subsets",
            size: 2f64.powi(m as i32),
            limit: ENUM_LIMIT as f64,
        });
    }
    let mut weighted = Vec::new();
    for (f, p) in mu.iter() {
        let support = f.support(g);
        let rest: Vec<EdgeId> = g.live_edges().filter(|&e| !support.contains(e)).collect();
        for mask in 0u64..(1u64 << rest.len()) {
            let mut subset = support.clone();
            let mut added = 0usize;
            for (i, &e) in rest.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    subset.insert(e);
                    added += 1;
                }
            }
            let kernel = x.powi(added as i32) * (1.0 - x).powi((rest.len() - added) as i32);
            weighted.push((subset, p * kernel));
        }
    }
    Ok(ExactDistribution::from_weights(weighted))
}

/// Pushforward of an RC distribution through the uniform-flow coupling.
pub fn rc_to_flow_pushforward(
    g: &OrientedMultigraph,
    mu: &ExactDistribution<EdgeSubset>,
    q: u32,
) -> Result<ExactDistribution<FlowState>> {
    let mut weighted = Vec::new();
    for (subset, p) in mu.iter() {
        let flows = flows_within(g, subset, q)?;
        let each = p / flows.len() as f64;
        for f in flows {
            weighted.push((f, each));
        }
    }
    Ok(ExactDistribution::from_weights(weighted))
}

/// Pushforward of an RC distribution through the Edwards-Sokal lift.
pub fn rc_to_potts_pushforward(
    g: &OrientedMultigraph,
    mu: &ExactDistribution<EdgeSubset>,
    q: u32,
) -> Result<ExactDistribution<PottsConfig>> {
    let mut weighted = Vec::new();
    for (subset, p) in mu.iter() {
        let labels = component_labels(g, subset);
        let mut roots: Vec<usize> = g
            .live_vertices()
            .map(|v| labels[v].expect("live"))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        let c = roots.len();
        let combos = (q as f64).powi(c as i32);
        if combos > MATRIX_LIMIT as f64 {
            return Err(Error::TooLarge {
                what: "q^c colourings of components",
                size: combos,
                limit: MATRIX_LIMIT as f64,
            });
        }
        let each = p / combos;
        let mut digits = vec![1u32; c];
        loop {
            let mut spins = vec![0u32; g.vertex_universe()];
            for v in g.live_vertices() {
                let root = labels[v].expect("live");
                let idx = roots.binary_search(&root).expect("root present");
                spins[v] = digits[idx];
            }
            weighted.push((PottsConfig::new(g, q, spins).expect("valid"), each));
            let mut i = 0;
            while i < c {
                digits[i] += 1;
                if digits[i] <= q {
                    break;
                }
                digits[i] = 1;
                i += 1;
            }
            if i == c {
                break;
            }
        }
    }
    Ok(ExactDistribution::from_weights(weighted))
}

// ---------------------------------------------------------------------------
// Exact chain analysis
// ---------------------------------------------------------------------------

/// A Markov chain small enough to enumerate exactly.
pub trait EnumerableChain {
    type State: Clone + Eq + Hash + std::fmt::Debug;

    fn states(&self) -> Result<Vec<Self::State>>;
    /// One-step transition law from `s`; probabilities may repeat a target
    /// and must sum to at most 1, the remainder is holding probability that
    /// the matrix assembly lumps onto the diagonal only if listed. List all
    /// moves including explicit holds so rows sum to 1.
    fn transitions(&self, s: &Self::State) -> Vec<(Self::State, f64)>;
    fn start(&self) -> Self::State;
    /// Unnormalized stationary weight.
    fn stationary_weight(&self, s: &Self::State) -> f64;
}

/// Dense transition matrix over an enumerated state space.
pub struct ChainMatrix<S> {
    pub states: Vec<S>,
    pub index: HashMap<S, usize>,
    /// Row-major `n x n` transition probabilities.
    pub p: Vec<f64>,
    pub start: usize,
    /// Exact stationary distribution from the chain's weights.
    pub stationary: Vec<f64>,
}

/// Assemble the exact transition matrix of an enumerable chain.
pub fn transition_matrix<C: EnumerableChain>(chain: &C) -> Result<ChainMatrix<C::State>> {
    let states = chain.states()?;
    let n = states.len();
    if n > MATRIX_LIMIT {
        return Err(Error::TooLarge {
            what: "chain states",
            size: n as f64,
            limit: MATRIX_LIMIT as f64,
        });
    }
    let mut index = HashMap::new();
    for (i, s) in states.iter().enumerate() {
        if index.insert(s.clone(), i).is_some() {
            return Err(Error::invalid("duplicate state in enumeration"));
        }
    }
    let mut p = vec![0f64; n * n];
    for (i, s) in states.iter().enumerate() {
        for (target, prob) in chain.transitions(s) {
            let j = *index
                .get(&target)
                .ok_or_else(|| Error::invalid("transition leaves the enumerated state space"))?;
            p[i * n + j] += prob;
        }
    }
    let start = *index
        .get(&chain.start())
        .ok_or_else(|| Error::invalid("start state not in state space"))?;
    let weights: Vec<f64> = states.iter().map(|s| chain.stationary_weight(s)).collect();
    let total: f64 = weights.iter().sum();
    let stationary = weights.into_iter().map(|w| w / total).collect();
    Ok(ChainMatrix {
        states,
        index,
        p,
        start,
        stationary,
    })
}

impl<S> ChainMatrix<S> {
    pub fn n(&self) -> usize {
        self.states.len()
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_error(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut k = Kahan::default();
                (0..n).for_each(|j| k.add(self.p[i * n + j]));
                (k.value() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest detailed-balance violation `|mu_i P_ij - mu_j P_ji|`.
    pub fn detailed_balance_error(&self, mu: &[f64]) -> f64 {
        let n = self.n();
        let mut worst = 0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((mu[i] * self.p[i * n + j] - mu[j] * self.p[j * n + i]).abs());
            }
        }
        worst
    }

    /// `‖mu P − mu‖_1`.
    pub fn fixed_point_residual(&self, mu: &[f64]) -> f64 {
        let next = self.step(mu);
        mu.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum()
    }

    /// One step of the distribution evolution `mu -> mu P`.
    pub fn step(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0f64; n];
        for (i, &w) in mu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(&self.p[i * n..(i + 1) * n]) {
                *o += w * p;
            }
        }
        out
    }

    /// TV to `target` after `0..=t_max` steps from the chain's start state.
    pub fn tv_decay(&self, target: &[f64], t_max: usize) -> Vec<f64> {
        let n = self.n();
        let mut mu = vec![0f64; n];
        mu[self.start] = 1.0;
        let mut out = Vec::with_capacity(t_max + 1);
        for _ in 0..=t_max {
            let tv: f64 = mu
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0;
            out.push(tv);
            mu = self.step(&mu);
        }
        out
    }

    /// Solve for the stationary distribution of the assembled matrix by
    /// Gaussian elimination on `P^T - I` with a normalization row.
    pub fn solve_stationary(&self) -> Vec<f64> {
        let n = self.n();
        // A x = b with rows (P^T - I) and the last row replaced by sum = 1.
        let mut a = vec![0f64; n * n];
        let mut b = vec![0f64; n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = self.p[j * n + i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..n {
            a[(n - 1) * n + j] = 1.0;
        }
        b[n - 1] = 1.0;
        // Partial-pivot elimination.
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap()
                })
                .unwrap();
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                b.swap(col, pivot);
            }
            let d = a[col * n + col];
            for i in col + 1..n {
                let factor = a[i * n + col] / d;
                if factor == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[i * n + k] -= factor * a[col * n + k];
                }
                b[i] -= factor * b[col];
            }
        }
        let mut x = vec![0f64; n];
        for col in (0..n).rev() {
            let mut acc = b[col];
            for k in col + 1..n {
                acc -= a[col * n + k] * x[k];
            }
            x[col] = acc / a[col * n + col];
        }
        x
    }
}

/// Exact TV-decay report for an enumerable chain: assembles the matrix,
/// verifies row sums and detailed balance against the chain's stationary
/// weights, and powers from the start state.
pub struct TvDecayReport {
    pub tv: Vec<f64>,
    pub row_sum_error: f64,
    pub detailed_balance_error: f64,
    pub n_states: usize,
}

pub fn exact_tv_decay<C: EnumerableChain>(chain: &C, t_max: usize) -> Result<TvDecayReport> {
    let matrix = transition_matrix(chain)?;
    Ok(TvDecayReport {
        tv: matrix.tv_decay(&matrix.stationary, t_max),
        row_sum_error: matrix.row_sum_error(),
        detailed_balance_error: matrix.detailed_balance_error(&matrix.stationary),
        n_states: matrix.n(),
    })
}

// ---------------------------------------------------------------------------
// Sum-of-minima inequality
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SumOfMinimaReport {
    pub s: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Check `S = sum_i min(x^{-a_i}/sum_j x^{-a_j}, x^{-b_i}/sum_j x^{-b_j})
/// >= 1 - (1 - x^iota)/(1 + x^iota)` for integer sequences with equal sums
/// and total absolute difference at most `2 iota`.
pub fn sum_of_minima_check(x: f64, iota: u32, a: &[i64], b: &[i64]) -> Result<SumOfMinimaReport> {
    if !(0.0 < x && x < 1.0) {
        return Err(Error::invalid(format!("x must be in (0,1), got {x}")));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid("sequences must have equal nonzero length"));
    }
    let sum_a: i64 = a.iter().sum();
    let sum_b: i64 = b.iter().sum();
    if sum_a != sum_b {
        return Err(Error::invalid(format!(
            "sum(a) = {sum_a} != sum(b) = {sum_b}"
        )));
    }
    let diff: i64 = a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum();
    if diff > 2 * iota as i64 {
        return Err(Error::invalid(format!(
            "sum |a_i - b_i| = {diff} exceeds 2 iota = {}",
            2 * iota
        )));
    }
    // Normalized weights are shift-invariant; shift by the max exponent so
    // every power is x^(nonnegative).
    let shift_weights = |v: &[i64]| -> Vec<f64> {
        let max = *v.iter().max().expect("nonempty");
        v.iter().map(|&e| x.powi((max - e) as i32)).collect()
    };
    let wa = shift_weights(a);
    let wb = shift_weights(b);
    let za: f64 = wa.iter().sum();
    let zb: f64 = wb.iter().sum();
    let s: f64 = wa
        .iter()
        .zip(&wb)
        .map(|(&p, &q)| (p / za).min(q / zb))
        .sum();
    let xi = x.powi(iota as i32);
    let bound = 1.0 - (1.0 - xi) / (1.0 + xi);
    Ok(SumOfMinimaReport {
        s,
        bound,
        ok: s >= bound - 1e-12,
    })
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SumOfMinimaSweep {
    pub checked: u64,
    /// Smallest observed `S - bound` (negative would be a violation).
    pub worst_margin: f64,
    /// Largest `|S - bound|` over the equality witnesses.
    pub witness_gap: f64,
    pub pass: bool,
}

/// Exhaustive sweep of the inequality over all sequence pairs with entries
/// in `[0, max_entry]`, lengths `2..=max_len`, `iota <= max_iota` and the
/// given fugacities, plus the tightness of the equality witness
/// `a = (iota, 0)`, `b = (0, iota)`.
pub fn sum_of_minima_exhaustive(
    max_entry: i64,
    max_len: usize,
    max_iota: u32,
    xs: &[f64],
) -> Result<SumOfMinimaSweep> {
    let mut checked = 0u64;
    let mut worst_margin = f64::INFINITY;
    for len in 2..=max_len {
        let mut a = vec![0i64; len];
        loop {
            let mut b = vec![0i64; len];
            loop {
                let sums_match = a.iter().sum::<i64>() == b.iter().sum::<i64>();
                if sums_match {
                    let diff: i64 = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum();
                    for iota in ((diff + 1) / 2) as u32..=max_iota {
                        for &x in xs {
                            let report = sum_of_minima_check(x, iota, &a, &b)?;
                            worst_margin = worst_margin.min(report.s - report.bound);
                            checked += 1;
                            if !report.ok {
                                return Ok(SumOfMinimaSweep {
                                    checked,
                                    worst_margin,
                                    witness_gap: f64::NAN,
                                    pass: false,
                                });
                            }
                        }
                    }
                }
                if !odometer(&mut b, max_entry) {
                    break;
                }
            }
            if !odometer(&mut a, max_entry) {
                break;
            }
        }
    }
    let mut witness_gap = 0f64;
    for iota in 1..=max_iota {
        for &x in xs {
            let report = sum_of_minima_check(x, iota, &[iota as i64, 0], &[0, iota as i64])?;
            witness_gap = witness_gap.max((report.s - report.bound).abs());
        }
    }
    Ok(SumOfMinimaSweep {
        checked,
        worst_margin,
        witness_gap,
        pass: worst_margin >= -1e-12 && witness_gap <= 1e-12,
    })
}

fn odometer(digits: &mut [i64], max: i64) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d <= max {
            return true;
        }
        *d = 0;
    }
    false
}
