//! `Z_q`-flows: residue assignments on edges with signed conservation at
//! every vertex, plus the spanning-forest machinery for exact uniform
//! sampling and exhaustive enumeration of flows on edge subsets.
//!
//! Sign convention: traversing an edge along its orientation contributes
//! `+f(e)` at the head and `-f(e)` at the tail; loops contribute zero net.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cycle_space::SignedEvenSet;
use crate::error::Error;
use crate::graph::{EdgeId, EdgeSubset, OrientedMultigraph, SpanningForest};
use crate::Result;

/// A `Z_q`-flow with cached support size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowState {
    q: u32,
    values: Vec<u32>,
    support: usize,
}

impl FlowState {
    /// The all-zero flow on the edge id space of `g`.
    pub fn zero(g: &OrientedMultigraph, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(format!("q must be >= 2, got {q}")));
        }
        Ok(FlowState {
            q,
            values: vec![0; g.edge_universe()],
            support: 0,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn value(&self, e: EdgeId) -> u32 {
        self.values[e]
    }

    pub fn support_size(&self) -> usize {
        self.support
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Add `t * chi_C` in place; support is maintained incrementally, O(|C|).
    pub fn add_multiple(&mut self, t: u32, c: &SignedEvenSet) {
        if t == 0 {
            return;
        }
        let q = self.q;
        for &(e, sign) in c.entries() {
            let old = self.values[e];
            let new = if sign > 0 {
                (old + t) % q
            } else {
                (old + q - t) % q
            };
            self.support -= (old != 0) as usize;
            self.support += (new != 0) as usize;
            self.values[e] = new;
        }
    }

    /// Wrap raw residues without checking conservation; intended for
    /// brute-force oracles that verify the flow condition themselves.
    pub fn from_values_unchecked(q: u32, values: Vec<u32>) -> Self {
        let support = values.iter().filter(|&&v| v != 0).count();
        FlowState { q, values, support }
    }

    /// Functional form of [`add_multiple`](Self::add_multiple).
    #[must_use]
    pub fn plus(&self, t: u32, c: &SignedEvenSet) -> Self {
        let mut f = self.clone();
        f.add_multiple(t, c);
        f
    }

    /// For each shift `t` in `Z_q`, the number of edges of `C` that carry
    /// value 0 in `f + t*chi_C`. Each edge of `C` contributes to exactly one
    /// shift, so the counts sum to `|C|`; total work is O(|C|).
    pub fn zero_count_on(&self, c: &SignedEvenSet) -> Vec<u64> {
        let q = self.q;
        let mut counts = vec![0u64; q as usize];
        for &(e, sign) in c.entries() {
            let v = self.values[e];
            // Solve v + t*sign = 0 (mod q); sign is its own inverse.
            let t = if sign > 0 { (q - v) % q } else { v };
            counts[t as usize] += 1;
        }
        counts
    }

    /// Full conservation check over all live vertices of `g`.
    pub fn verify_conservation(&self, g: &OrientedMultigraph) -> bool {
        let mut balance = vec![0i64; g.vertex_universe()];
        for e in g.live_edges() {
            let (tail, head) = g.endpoints(e).expect("live edge");
            if tail == head {
                continue;
            }
            balance[head] += self.values[e] as i64;
            balance[tail] -= self.values[e] as i64;
        }
        balance.iter().all(|&b| b.rem_euclid(self.q as i64) == 0)
    }

    pub fn recount_support(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    /// Is the support contained in `F`?
    pub fn supported_within(&self, subset: &EdgeSubset) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(e, &v)| v == 0 || subset.contains(e))
    }

    pub fn support(&self, g: &OrientedMultigraph) -> EdgeSubset {
        let mut s = EdgeSubset::empty(g);
        for (e, &v) in self.values.iter().enumerate() {
            if v != 0 {
                s.insert(e);
            }
        }
        s
    }

    /// JSON value per the wire format: `{"q": q, "values": [...]}` with `-1`
    /// for tombstoned edges.
    pub fn to_json(&self, g: &OrientedMultigraph) -> FlowJson {
        FlowJson {
            q: self.q,
            values: (0..g.edge_universe())
                .map(|e| {
                    if g.is_live_edge(e) {
                        self.values[e] as i64
                    } else {
                        -1
                    }
                })
                .collect(),
        }
    }

    pub fn from_json(g: &OrientedMultigraph, json: &FlowJson) -> Result<Self> {
        if json.values.len() != g.edge_universe() {
            return Err(Error::parse(format!(
                "flow has {} values, graph has {} edge slots",
                json.values.len(),
                g.edge_universe()
            )));
        }
        let q = json.q;
        if q < 2 {
            return Err(Error::invalid("q must be >= 2"));
        }
        let mut values = vec![0u32; g.edge_universe()];
        for (e, &v) in json.values.iter().enumerate() {
            if g.is_live_edge(e) {
                if v < 0 || v >= q as i64 {
                    return Err(Error::parse(format!("value {v} out of range on edge {e}")));
                }
                values[e] = v as u32;
            } else if v != -1 {
                return Err(Error::parse(format!("dead edge {e} must serialize as -1")));
            }
        }
        let support = values.iter().filter(|&&v| v != 0).count();
        let flow = FlowState { q, values, support };
        if !flow.verify_conservation(g) {
            return Err(Error::parse("values do not satisfy the flow condition"));
        }
        Ok(flow)
    }
}

/// Serialized flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowJson {
    pub q: u32,
    pub values: Vec<i64>,
}

/// Spanning-forest frame for the flows supported within an edge subset `F`:
/// values on the non-forest edges of `F` are free, forest edges complete
/// uniquely by leaf elimination, edges outside `F` are zero.
///
/// The frame gives a bijection between `Z_q^{free}` and the flows on
/// `(V, F)`, which is what makes both exact uniform sampling and exhaustive
/// enumeration possible.
pub struct FlowFrame<'g> {
    g: &'g OrientedMultigraph,
    forest: SpanningForest,
    free_edges: Vec<EdgeId>,
    incidence: Vec<Vec<(EdgeId, i8)>>,
}

impl<'g> FlowFrame<'g> {
    pub fn new(g: &'g OrientedMultigraph, subset: &EdgeSubset) -> Self {
        let forest = g.spanning_forest(Some(subset));
        let free_edges: Vec<EdgeId> = subset.edges().filter(|&e| !forest.in_forest[e]).collect();
        let mut incidence = vec![Vec::new(); g.vertex_universe()];
        for e in subset.edges() {
            let (tail, head) = g.endpoints(e).expect("live edge");
            if tail == head {
                continue;
            }
            incidence[tail].push((e, -1i8));
            incidence[head].push((e, 1i8));
        }
        FlowFrame {
            g,
            forest,
            free_edges,
            incidence,
        }
    }

    /// Number of free edges, `|F| - |V| + c(F)`.
    pub fn dimension(&self) -> usize {
        self.free_edges.len()
    }

    pub fn free_edges(&self) -> &[EdgeId] {
        &self.free_edges
    }

    /// Complete an assignment of residues on the free edges to the unique
    /// flow on `(V, F)` extending it.
    pub fn complete(&self, q: u32, free_values: &[u32]) -> FlowState {
        debug_assert_eq!(free_values.len(), self.free_edges.len());
        let mut flow = FlowState {
            q,
            values: vec![0; self.g.edge_universe()],
            support: 0,
        };
        for (&e, &v) in self.free_edges.iter().zip(free_values) {
            flow.values[e] = v % q;
        }
        // Children come before parents, so at vertex v every incident edge
        // except the parent edge already has its final value.
        for &v in &self.forest.completion_order {
            let pe = self.forest.parent_edge[v].expect("non-root vertex");
            let mut balance: i64 = 0;
            let mut parent_sign = 0i8;
            for &(e, sign) in &self.incidence[v] {
                if e == pe && parent_sign == 0 {
                    parent_sign = sign;
                    continue;
                }
                balance += sign as i64 * flow.values[e] as i64;
            }
            let q64 = q as i64;
            // parent_sign * x + balance = 0 (mod q)
            let x = (-(parent_sign as i64) * balance).rem_euclid(q64) as u32;
            flow.values[pe] = x;
        }
        flow.support = flow.recount_support();
        debug_assert!(flow.verify_conservation(self.g));
        flow
    }

    /// Exact uniform sample over the `q^dim` flows supported within `F`.
    pub fn uniform(&self, q: u32, rng: &mut impl Rng) -> FlowState {
        let free: Vec<u32> = self
            .free_edges
            .iter()
            .map(|_| rng.random_range(0..q))
            .collect();
        self.complete(q, &free)
    }

    /// Visit every flow supported within `F` once, in odometer order of the
    /// free values, without materializing the whole list.
    pub fn for_each(&self, q: u32, limit: usize, mut visit: impl FnMut(&FlowState)) -> Result<()> {
        let count = (q as f64).powi(self.dimension() as i32);
        if count > limit as f64 {
            return Err(Error::TooLarge {
                what: "q^dim flows",
                size: count,
                limit: limit as f64,
            });
        }
        let dim = self.dimension();
        let mut digits = vec![0u32; dim];
        loop {
            visit(&self.complete(q, &digits));
            // Odometer increment.
            let mut i = 0;
            while i < dim {
                digits[i] += 1;
                if digits[i] < q {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == dim {
                break;
            }
        }
        Ok(())
    }

    /// All flows supported within `F`, in odometer order of free values.
    pub fn enumerate(&self, q: u32, limit: usize) -> Result<Vec<FlowState>> {
        let mut out = Vec::new();
        self.for_each(q, limit, |f| out.push(f.clone()))?;
        Ok(out)
    }
}

/// Exact uniform flow on `(V, F)`; edges outside `F` get value 0.
pub fn uniform_flow_on(
    g: &OrientedMultigraph,
    subset: &EdgeSubset,
    q: u32,
    rng: &mut impl Rng,
) -> Result<FlowState> {
    if q < 2 {
        return Err(Error::invalid(format!("q must be >= 2, got {q}")));
    }
    Ok(FlowFrame::new(g, subset).uniform(q, rng))
}
