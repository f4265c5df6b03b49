//! Exact couplings between the flow, random-cluster and Potts measures.
//!
//! A flow sample becomes a random-cluster sample by adding each edge outside
//! the support independently with probability `x`; a random-cluster sample
//! becomes a flow by drawing a uniform flow on the kept edges; and the
//! Edwards-Sokal lift colours each component uniformly. The parameter maps
//! are `y = qx/(1-x)` and `w = (1+(q-1)x)/(1-x) = y + 1`: with those, each
//! transform sends its source measure exactly to the target measure, and a
//! delta-approximate sampler stays delta-approximate (data processing).

use rand::Rng;

use crate::error::Error;
use crate::flow::{uniform_flow_on, FlowState};
use crate::graph::{component_labels, EdgeSubset, OrientedMultigraph, VertexId};
use crate::Result;

/// A Potts spin configuration; spins take values in `1..=q` on live
/// vertices (dead vertex slots hold 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PottsConfig {
    q: u32,
    spins: Vec<u32>,
}

impl PottsConfig {
    pub fn new(g: &OrientedMultigraph, q: u32, spins: Vec<u32>) -> Result<Self> {
        if spins.len() != g.vertex_universe() {
            return Err(Error::invalid("spin vector length mismatch"));
        }
        for (v, &spin) in spins.iter().enumerate() {
            let ok = if g.is_live_vertex(v) {
                (1..=q).contains(&spin)
            } else {
                spin == 0
            };
            if !ok {
                return Err(Error::invalid(format!("spin {spin} at vertex {v}")));
            }
        }
        Ok(PottsConfig { q, spins })
    }

    pub fn constant(g: &OrientedMultigraph, q: u32, spin: u32) -> Result<Self> {
        let spins = (0..g.vertex_universe())
            .map(|v| if g.is_live_vertex(v) { spin } else { 0 })
            .collect();
        Self::new(g, q, spins)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn spin(&self, v: VertexId) -> u32 {
        self.spins[v]
    }

    pub fn set_spin(&mut self, v: VertexId, spin: u32) {
        debug_assert!((1..=self.q).contains(&spin));
        self.spins[v] = spin;
    }

    pub fn spins(&self) -> &[u32] {
        &self.spins
    }

    /// `m(sigma)`: the number of live edges whose endpoints agree (loops
    /// always count).
    pub fn monochromatic_edges(&self, g: &OrientedMultigraph) -> usize {
        g.live_edges()
            .filter(|&e| {
                let (t, h) = g.endpoints(e).expect("live edge");
                self.spins[t] == self.spins[h]
            })
            .count()
    }
}

/// `y = qx/(1-x)`: random-cluster parameter coupled to fugacity `x`.
pub fn rc_y_from_x(q: u32, x: f64) -> f64 {
    q as f64 * x / (1.0 - x)
}

/// `w = (1+(q-1)x)/(1-x)`: Potts parameter coupled to fugacity `x`.
pub fn potts_w_from_x(q: u32, x: f64) -> f64 {
    (1.0 + (q as f64 - 1.0) * x) / (1.0 - x)
}

/// Inverse of [`potts_w_from_x`]: `x = (w-1)/(w+q-1)`.
pub fn x_from_potts_w(q: u32, w: f64) -> f64 {
    (w - 1.0) / (w + q as f64 - 1.0)
}

/// Inverse of [`rc_y_from_x`]: `x = y/(q+y)`.
pub fn x_from_rc_y(q: u32, y: f64) -> f64 {
    y / (q as f64 + y)
}

/// Flow to random cluster: keep the support and add every other edge
/// independently with probability `x`. Sends `mu_flow(q, x)` to
/// `mu_RC(q, qx/(1-x))` exactly.
pub fn flow_to_rc(g: &OrientedMultigraph, f: &FlowState, x: f64, rng: &mut impl Rng) -> EdgeSubset {
    let mut subset = EdgeSubset::empty(g);
    for e in g.live_edges() {
        if f.value(e) != 0 || rng.random::<f64>() < x {
            subset.insert(e);
        }
    }
    subset
}

/// Random cluster to flow: a uniform flow on `(V, F)`. Sends `mu_RC(q, y)`
/// to `mu_flow(q, x)` with `x = y/(q+y)`.
pub fn rc_to_flow(
    g: &OrientedMultigraph,
    subset: &EdgeSubset,
    q: u32,
    rng: &mut impl Rng,
) -> Result<FlowState> {
    uniform_flow_on(g, subset, q, rng)
}

/// Edwards-Sokal lift: colour each component of `(V, F)` uniformly and
/// independently. Sends `mu_RC(q, w-1)` to `mu_Potts(q, w)`.
pub fn rc_to_potts(
    g: &OrientedMultigraph,
    subset: &EdgeSubset,
    q: u32,
    rng: &mut impl Rng,
) -> Result<PottsConfig> {
    let labels = component_labels(g, subset);
    let mut colour_of_root: std::collections::HashMap<VertexId, u32> =
        std::collections::HashMap::new();
    let mut spins = vec![0u32; g.vertex_universe()];
    for v in g.live_vertices() {
        let root = labels[v].expect("live vertex");
        let colour = *colour_of_root
            .entry(root)
            .or_insert_with(|| rng.random_range(1..=q));
        spins[v] = colour;
    }
    PottsConfig::new(g, q, spins)
}

/// Flow straight to Potts: [`flow_to_rc`] followed by [`rc_to_potts`].
/// Sends `mu_flow(q, x)` to `mu_Potts(q, (1+(q-1)x)/(1-x))` in O(|E|).
pub fn flow_to_potts(
    g: &OrientedMultigraph,
    f: &FlowState,
    x: f64,
    q: u32,
    rng: &mut impl Rng,
) -> Result<PottsConfig> {
    let subset = flow_to_rc(g, f, x, rng);
    rc_to_potts(g, &subset, q, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{stream, Purpose};

    fn triangle() -> OrientedMultigraph {
        OrientedMultigraph::from_edge_list(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn parameter_maps_round_trip() {
        for q in [2u32, 3, 4, 7] {
            for x in [0.1, 0.3, 0.5, 0.8, 0.95] {
                let w = potts_w_from_x(q, x);
                let y = rc_y_from_x(q, x);
                assert!((w - (y + 1.0)).abs() < 1e-12, "w = y + 1");
                assert!((x_from_potts_w(q, w) - x).abs() < 1e-12);
                assert!((x_from_rc_y(q, y) - x).abs() < 1e-12);
            }
        }
        // x = 0 maps to w = 1 (the uniform Potts measure).
        assert_eq!(potts_w_from_x(3, 0.0), 1.0);
    }

    #[test]
    fn flow_to_rc_keeps_support() {
        let g = triangle();
        let mut rng = stream(3, Purpose::Coupling, 0);
        // Full-support flow: F = E with probability 1.
        let full = EdgeSubset::full(&g);
        let frame_flow = {
            let mut f = FlowState::zero(&g, 2).unwrap();
            let c = crate::cycle_space::SignedEvenSet::new(vec![(0, 1), (1, 1), (2, 1)]).unwrap();
            f.add_multiple(1, &c);
            f
        };
        for _ in 0..16 {
            assert_eq!(flow_to_rc(&g, &frame_flow, 0.3, &mut rng), full);
        }
    }

    #[test]
    fn flow_to_rc_zero_flow_is_bernoulli() {
        let g = triangle();
        let f = FlowState::zero(&g, 2).unwrap();
        let x = 0.4;
        let mut rng = stream(5, Purpose::Coupling, 0);
        let n = 40_000;
        let mut per_edge = [0usize; 3];
        for _ in 0..n {
            let subset = flow_to_rc(&g, &f, x, &mut rng);
            for (e, slot) in per_edge.iter_mut().enumerate() {
                *slot += subset.contains(e) as usize;
            }
        }
        for &count in &per_edge {
            let phat = count as f64 / n as f64;
            let sigma = (x * (1.0 - x) / n as f64).sqrt();
            assert!((phat - x).abs() < 4.0 * sigma, "phat = {phat}");
        }
    }

    #[test]
    fn rc_to_flow_degenerate_cases() {
        let g = triangle();
        let mut rng = stream(9, Purpose::Coupling, 0);
        let empty = EdgeSubset::empty(&g);
        assert_eq!(
            rc_to_flow(&g, &empty, 3, &mut rng).unwrap().support_size(),
            0
        );
        let tree = EdgeSubset::from_edges(&g, [0, 1]).unwrap();
        for _ in 0..10 {
            assert_eq!(
                rc_to_flow(&g, &tree, 3, &mut rng).unwrap().support_size(),
                0
            );
        }
    }

    #[test]
    fn rc_to_potts_component_structure() {
        let g = triangle();
        let mut rng = stream(11, Purpose::Coupling, 0);
        // Connected F: monochromatic, uniform over colours.
        let full = EdgeSubset::full(&g);
        let mut colour_counts = [0usize; 3];
        for _ in 0..9000 {
            let sigma = rc_to_potts(&g, &full, 3, &mut rng).unwrap();
            assert!(sigma.spins()[0] == sigma.spins()[1] && sigma.spins()[1] == sigma.spins()[2]);
            colour_counts[(sigma.spin(0) - 1) as usize] += 1;
        }
        for &c in &colour_counts {
            assert!(c > 2500, "uniform colours, got {colour_counts:?}");
        }
        // Empty F: spins i.i.d. uniform; check vertex 0 marginal and
        // independence from vertex 1 crudely.
        let empty = EdgeSubset::empty(&g);
        let mut joint = [[0usize; 2]; 2];
        for _ in 0..20000 {
            let sigma = rc_to_potts(&g, &empty, 2, &mut rng).unwrap();
            joint[(sigma.spin(0) - 1) as usize][(sigma.spin(1) - 1) as usize] += 1;
        }
        for row in &joint {
            for &c in row {
                assert!((c as f64 - 5000.0).abs() < 4.0 * 50.0, "joint = {joint:?}");
            }
        }
    }

    #[test]
    fn round_trip_flow_rc_flow_preserves_mu_flow() {
        let g = triangle();
        for (q, x) in [(2u32, 0.5f64), (3, 0.8)] {
            let mu = crate::oracle::mu_flow(&g, q, x).unwrap();
            let rc = crate::oracle::flow_to_rc_pushforward(&g, &mu, x).unwrap();
            let back = crate::oracle::rc_to_flow_pushforward(&g, &rc, q).unwrap();
            assert!(back.max_abs_diff(&mu) < 1e-12);
        }
    }

    #[test]
    fn pushforwards_contract_total_variation() {
        // Data processing: perturb mu_flow toward a point mass and check the
        // images do not move further apart than the inputs.
        let g = triangle();
        let (q, x) = (2u32, 0.6);
        let mu = crate::oracle::mu_flow(&g, q, x).unwrap();
        for lambda in [0.1, 0.5, 0.9] {
            let perturbed = crate::oracle::ExactDistribution::from_weights(
                mu.iter()
                    .enumerate()
                    .map(|(i, (f, p))| {
                        let spike = if i == 0 { lambda } else { 0.0 };
                        (f.clone(), (1.0 - lambda) * p + spike)
                    })
                    .collect(),
            );
            let tv_in = mu.tv(&perturbed);
            let rc_a = crate::oracle::flow_to_rc_pushforward(&g, &mu, x).unwrap();
            let rc_b = crate::oracle::flow_to_rc_pushforward(&g, &perturbed, x).unwrap();
            assert!(rc_a.tv(&rc_b) <= tv_in + 1e-12);
            let potts_a = crate::oracle::rc_to_potts_pushforward(&g, &rc_a, q).unwrap();
            let potts_b = crate::oracle::rc_to_potts_pushforward(&g, &rc_b, q).unwrap();
            assert!(potts_a.tv(&potts_b) <= rc_a.tv(&rc_b) + 1e-12);
        }
    }

    #[test]
    fn samplers_follow_their_kernels() {
        // Empirical frequencies of the samplers against the exact kernel
        // laws, from a fixed input state.
        let g = triangle();
        let (q, x) = (2u32, 0.5);
        let f = FlowState::zero(&g, q).unwrap();
        let point = crate::oracle::ExactDistribution::from_weights(vec![(f.clone(), 1.0)]);
        let kernel = crate::oracle::flow_to_rc_pushforward(&g, &point, x).unwrap();
        let mut rng = stream(21, Purpose::Coupling, 0);
        let n = 40_000;
        let mut counts: std::collections::HashMap<Vec<usize>, usize> = Default::default();
        for _ in 0..n {
            let subset = flow_to_rc(&g, &f, x, &mut rng);
            *counts.entry(subset.edges().collect()).or_insert(0) += 1;
        }
        let mut chi2 = 0.0;
        for (subset, p) in kernel.iter() {
            let expected = p * n as f64;
            let observed = counts
                .get(&subset.edges().collect::<Vec<_>>())
                .copied()
                .unwrap_or(0) as f64;
            chi2 += (observed - expected).powi(2) / expected;
        }
        // 7 degrees of freedom; 24.3 is the 0.1% tail.
        assert!(chi2 < 24.3, "chi2 = {chi2}");

        // rc_to_potts from a two-component subset: kernel is uniform over
        // q^2 component colourings.
        let subset = EdgeSubset::from_edges(&g, [0]).unwrap();
        let rc_point = crate::oracle::ExactDistribution::from_weights(vec![(subset.clone(), 1.0)]);
        let kernel = crate::oracle::rc_to_potts_pushforward(&g, &rc_point, q).unwrap();
        assert_eq!(kernel.len(), 4);
        let mut counts: std::collections::HashMap<Vec<u32>, usize> = Default::default();
        for _ in 0..n {
            let sigma = rc_to_potts(&g, &subset, q, &mut rng).unwrap();
            *counts.entry(sigma.spins().to_vec()).or_insert(0) += 1;
        }
        let mut chi2 = 0.0;
        for (sigma, p) in kernel.iter() {
            let expected = p * n as f64;
            let observed = counts.get(sigma.spins()).copied().unwrap_or(0) as f64;
            chi2 += (observed - expected).powi(2) / expected;
        }
        assert!(chi2 < 16.3, "chi2 = {chi2}"); // 3 dof, 0.1% tail
    }

    #[test]
    fn potts_config_validation() {
        let g = triangle();
        assert!(PottsConfig::new(&g, 2, vec![1, 2, 3]).is_err());
        assert!(PottsConfig::new(&g, 2, vec![0, 1, 1]).is_err());
        let sigma = PottsConfig::new(&g, 2, vec![1, 2, 1]).unwrap();
        assert_eq!(sigma.monochromatic_edges(&g), 1);
        // Loops are always monochromatic.
        let lg = OrientedMultigraph::from_edge_list(1, &[(0, 0)]).unwrap();
        let sigma = PottsConfig::constant(&lg, 3, 2).unwrap();
        assert_eq!(sigma.monochromatic_edges(&lg), 1);
    }
}
