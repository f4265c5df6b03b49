//! Duality verification and exact chain diagnostics.
//!
//! The flow chain on an `(L+1) x (L+1)` grid with its face generating set is
//! the Potts heat-bath Glauber dynamics on the dual `L x L` grid, seen
//! through the bijection `phi(sigma) = sum_i sigma(v_i) chi_{C_i}` (faces in
//! row-major order). Two conventions make the transition matrices agree
//! entrywise: Glauber weights are ferromagnetic, `x^{#disagreements}` for
//! the candidate spin, and the outer face acts as a frozen spin-q boundary,
//! so a dual vertex whose face has `b` edges on the grid boundary sees `b`
//! phantom neighbours of spin `q`.

use rand::Rng;

use crate::couplings::PottsConfig;
use crate::cycle_space::EvenGenSet;
use crate::error::Error;
use crate::flow::FlowState;
use crate::flow_chain::FlowChainLaw;
use crate::graph::{OrientedMultigraph, VertexId};
use crate::joint_chain::{JointChainConfig, JointChainLaw};
use crate::oracle::{transition_matrix, EnumerableChain, MATRIX_LIMIT};
use crate::Result;

/// Heat-bath weights for resampling the spin at `v`: candidate spin `i` gets
/// weight `x^{d(i) - min_j d(j)}` where `d(i)` counts disagreeing incident
/// edges plus `boundary[v]` phantom spin-q neighbours when `i != q`.
fn glauber_weights(
    sigma: &PottsConfig,
    g: &OrientedMultigraph,
    v: VertexId,
    x: f64,
    boundary: Option<&[u32]>,
) -> Vec<f64> {
    let q = sigma.q();
    let mut disagree = vec![0u32; q as usize];
    for e in g.live_edges() {
        let (t, h) = g.endpoints(e).expect("live edge");
        if t == h {
            continue;
        }
        let other = if t == v {
            h
        } else if h == v {
            t
        } else {
            continue;
        };
        let spin = sigma.spin(other);
        for i in 1..=q {
            if spin != i {
                disagree[(i - 1) as usize] += 1;
            }
        }
    }
    if let Some(b) = boundary {
        for i in 1..q {
            disagree[(i - 1) as usize] += b[v];
        }
    }
    let min = *disagree.iter().min().expect("q >= 2");
    disagree.iter().map(|&d| x.powi((d - min) as i32)).collect()
}

/// One heat-bath Glauber update at a uniformly random live vertex.
pub fn potts_glauber_step(
    sigma: &mut PottsConfig,
    g: &OrientedMultigraph,
    x: f64,
    rng: &mut impl Rng,
) {
    let vertices: Vec<VertexId> = g.live_vertices().collect();
    let v = vertices[rng.random_range(0..vertices.len())];
    let weights = glauber_weights(sigma, g, v, x, None);
    let total: f64 = weights.iter().sum();
    let mut pick = rng.random::<f64>() * total;
    let mut new_spin = sigma.q();
    for (i, &w) in weights.iter().enumerate() {
        pick -= w;
        if pick < 0.0 {
            new_spin = i as u32 + 1;
            break;
        }
    }
    sigma.set_spin(v, new_spin);
}

/// Exact transition law of the Glauber dynamics, with an optional frozen
/// spin-q boundary field (phantom neighbour multiplicities per vertex).
pub struct GlauberLaw<'a> {
    pub g: &'a OrientedMultigraph,
    pub q: u32,
    pub x: f64,
    pub boundary: Option<Vec<u32>>,
}

impl EnumerableChain for GlauberLaw<'_> {
    type State = PottsConfig;

    fn states(&self) -> Result<Vec<PottsConfig>> {
        let count = (self.q as f64).powi(self.g.n_vertices() as i32);
        if count > MATRIX_LIMIT as f64 {
            return Err(Error::TooLarge {
                what: "q^|V| colourings",
                size: count,
                limit: MATRIX_LIMIT as f64,
            });
        }
        let mut states = Vec::new();
        crate::oracle::for_each_colouring(self.g, self.q, |sigma| states.push(sigma.clone()));
        Ok(states)
    }

    fn transitions(&self, sigma: &PottsConfig) -> Vec<(PottsConfig, f64)> {
        let vertices: Vec<VertexId> = self.g.live_vertices().collect();
        let n = vertices.len() as f64;
        let mut out = Vec::new();
        for &v in &vertices {
            let weights = glauber_weights(sigma, self.g, v, self.x, self.boundary.as_deref());
            let total: f64 = weights.iter().sum();
            for (i, &w) in weights.iter().enumerate() {
                let mut next = sigma.clone();
                next.set_spin(v, i as u32 + 1);
                out.push((next, w / total / n));
            }
        }
        out
    }

    fn start(&self) -> PottsConfig {
        PottsConfig::constant(self.g, self.q, self.q).expect("q is a valid spin")
    }

    fn stationary_weight(&self, sigma: &PottsConfig) -> f64 {
        let mut exponent = 0i32;
        for e in self.g.live_edges() {
            let (t, h) = self.g.endpoints(e).expect("live edge");
            if t != h && sigma.spin(t) != sigma.spin(h) {
                exponent += 1;
            }
        }
        if let Some(b) = &self.boundary {
            for v in self.g.live_vertices() {
                if sigma.spin(v) != self.q {
                    exponent += b[v] as i32;
                }
            }
        }
        self.x.powi(exponent)
    }
}

/// Square grid graph on `l x l` vertices (allows `l = 1`: a single vertex).
fn square_grid_graph(l: usize) -> OrientedMultigraph {
    let vid = |x: usize, y: usize| y * l + x;
    let mut pairs = Vec::new();
    for y in 0..l {
        for x in 0..l {
            if x + 1 < l {
                pairs.push((vid(x, y), vid(x + 1, y)));
            }
            if y + 1 < l {
                pairs.push((vid(x, y), vid(x, y + 1)));
            }
        }
    }
    OrientedMultigraph::from_edge_list(l * l, &pairs).expect("valid grid")
}

/// The duality bijection: `phi(sigma) = sum_i sigma(v_i) chi_{C_i}` with
/// faces and dual vertices both in row-major order.
pub fn duality_phi(
    sigma: &PottsConfig,
    faces: &EvenGenSet,
    flow_graph: &OrientedMultigraph,
    q: u32,
) -> FlowState {
    let mut flow = FlowState::zero(flow_graph, q).expect("q >= 2");
    for (i, face) in faces.generators().iter().enumerate() {
        let t = sigma.spin(i) % q;
        flow.add_multiple(t, face);
    }
    flow
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DualityReport {
    pub l: usize,
    pub q: u32,
    pub n_states: usize,
    pub bijective: bool,
    pub max_entry_diff: f64,
    pub pass: bool,
}

/// Build both exact transition matrices (Potts Glauber on the `L x L` grid
/// with the frozen outer boundary; flow chain on the `(L+1) x (L+1)` grid
/// with its face generating set) and check `P[s1][s2] = Q[phi(s1)][phi(s2)]`
/// entrywise, plus bijectivity of `phi`.
pub fn verify_duality(l: usize, q: u32, x: f64) -> Result<DualityReport> {
    if l == 0 {
        return Err(Error::invalid("duality needs L >= 1"));
    }
    let n_states_f = (q as f64).powi((l * l) as i32);
    if n_states_f > MATRIX_LIMIT as f64 {
        return Err(Error::TooLarge {
            what: "q^(L^2) states",
            size: n_states_f,
            limit: MATRIX_LIMIT as f64,
        });
    }
    let dual = square_grid_graph(l);
    let degree = {
        let inc = dual.incidence();
        (0..dual.vertex_universe())
            .map(|v| inc[v].len() as u32)
            .collect::<Vec<_>>()
    };
    let boundary: Vec<u32> = degree.iter().map(|&d| 4 - d).collect();
    let glauber = GlauberLaw {
        g: &dual,
        q,
        x,
        boundary: Some(boundary),
    };
    let p_matrix = transition_matrix(&glauber)?;

    let primal = crate::lattice::grid(l + 1, l + 1)?;
    let flow_law = FlowChainLaw {
        g: &primal.graph,
        q,
        x,
        gens: &primal.faces,
    };
    let q_matrix = transition_matrix(&flow_law)?;

    // phi maps the Glauber state list into flow states; bijectivity follows
    // from injectivity plus the cardinality match with the flow state space.
    let mut image_index = Vec::with_capacity(p_matrix.n());
    let mut seen = std::collections::HashSet::new();
    for sigma in &p_matrix.states {
        let flow = duality_phi(sigma, &primal.faces, &primal.graph, q);
        image_index.push(q_matrix.index[&flow]);
        seen.insert(flow);
    }
    let bijective = seen.len() == p_matrix.n() && p_matrix.n() == q_matrix.n();

    let n = p_matrix.n();
    let mut max_diff = 0f64;
    for i in 0..n {
        for j in 0..n {
            let lhs = p_matrix.p[i * n + j];
            let rhs = q_matrix.p[image_index[i] * n + image_index[j]];
            max_diff = max_diff.max((lhs - rhs).abs());
        }
    }
    Ok(DualityReport {
        l,
        q,
        n_states: n,
        bijective,
        max_entry_diff: max_diff,
        pass: bijective && max_diff <= 1e-12,
    })
}

/// Which chain a TV curve follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvChainKind {
    Flow,
    Joint,
}

/// Initial state of a TV curve. `Saturated` starts at the flow with every
/// generator coefficient set to 1 (the image of the all-ones dual ground
/// state), which is the start that exposes low-`x` slowdown; `Zero` starts
/// where the samplers start. From the zero flow the ordering reverses at
/// small `x`, because the zero flow already carries most stationary mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvStart {
    Zero,
    Saturated,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TvPoint {
    pub t: usize,
    pub x: f64,
    pub tv: f64,
}

/// Exact TV-to-stationarity series per fugacity, for plotting mixing
/// slowdown as `x` decreases. Rows come out grouped by `x` in input order,
/// `t` ascending.
pub fn tv_curve(
    kind: TvChainKind,
    start: TvStart,
    g: &OrientedMultigraph,
    gens: &EvenGenSet,
    q: u32,
    xs: &[f64],
    t_max: usize,
) -> Result<Vec<TvPoint>> {
    let saturated_flow = || {
        let mut f = FlowState::zero(g, q).expect("q >= 2");
        for c in gens.generators() {
            f.add_multiple(1, c);
        }
        f
    };
    let mut out = Vec::new();
    for &x in xs {
        let tv = match kind {
            TvChainKind::Flow => {
                let law = FlowChainLaw { g, q, x, gens };
                let mut matrix = transition_matrix(&law)?;
                if start == TvStart::Saturated {
                    matrix.start = matrix.index[&saturated_flow()];
                }
                matrix.tv_decay(&matrix.stationary, t_max)
            }
            TvChainKind::Joint => {
                let (ell, s) = crate::joint_chain::lift_joint_params(gens.params());
                let cfg = JointChainConfig::new(x, q, gens.clone(), ell, s, g.n_edges(), 0)?;
                let law = JointChainLaw { g, cfg: &cfg };
                let mut matrix = transition_matrix(&law)?;
                if start == TvStart::Saturated {
                    let state = crate::joint_chain::JointState::new(
                        saturated_flow(),
                        crate::graph::EdgeSubset::full(g),
                    )
                    .expect("full subset supports any flow");
                    matrix.start = matrix.index[&state];
                }
                matrix.tv_decay(&matrix.stationary, t_max)
            }
        };
        for (t, &value) in tv.iter().enumerate() {
            out.push(TvPoint { t, x, tv: value });
        }
    }
    Ok(out)
}

/// CSV rendering of a TV series with header `t,x,tv`.
pub fn tv_curve_csv(points: &[TvPoint]) -> String {
    let mut out = String::from("t,x,tv\n");
    for p in points {
        out.push_str(&format!("{},{},{:.17}\n", p.t, p.x, p.tv));
    }
    out
}
