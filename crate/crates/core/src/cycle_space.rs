//! Even generating sets of the cycle space.
//!
//! A generator is a signed indicator vector of an even subgraph; a set of
//! them generates the flow space if every fundamental cycle of a spanning
//! forest is an integer combination of the generators. Working over the
//! integers makes a single check valid for every modulus q at once, which
//! matters because Z_q is not a field for composite q.

use std::collections::HashMap;

use crate::error::Error;
use crate::graph::{EdgeId, OrientedMultigraph};
use crate::Result;

/// Sparse signed indicator vector of an even subgraph, entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedEvenSet {
    entries: Vec<(EdgeId, i8)>,
}

impl SignedEvenSet {
    /// Entries must have distinct edge ids and signs in {-1, +1}; they are
    /// stored sorted by edge id.
    pub fn new(mut entries: Vec<(EdgeId, i8)>) -> Result<Self> {
        entries.sort_unstable_by_key(|&(e, _)| e);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(format!(
                    "duplicate edge {} in signed even set",
                    w[0].0
                )));
            }
        }
        if let Some(&(e, s)) = entries.iter().find(|&&(_, s)| s != 1 && s != -1) {
            return Err(Error::invalid(format!("edge {e} has sign {s}, want +-1")));
        }
        Ok(SignedEvenSet { entries })
    }

    pub fn entries(&self) -> &[(EdgeId, i8)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.entries.binary_search_by_key(&e, |&(id, _)| id).is_ok()
    }

    /// Signed conservation check over the integers: at every vertex the sum
    /// of entries on incoming edges equals the sum on outgoing edges.
    pub fn is_integer_flow(&self, g: &OrientedMultigraph) -> bool {
        let mut balance: HashMap<usize, i64> = HashMap::new();
        for &(e, sign) in &self.entries {
            if !g.is_live_edge(e) {
                return false;
            }
            let (tail, head) = g.endpoints(e).expect("live edge");
            if tail == head {
                continue;
            }
            *balance.entry(head).or_insert(0) += sign as i64;
            *balance.entry(tail).or_insert(0) -= sign as i64;
        }
        balance.values().all(|&b| b == 0)
    }

    /// Every vertex has even degree in the support (loops count twice).
    pub fn has_even_support(&self, g: &OrientedMultigraph) -> bool {
        let mut deg: HashMap<usize, usize> = HashMap::new();
        for &(e, _) in &self.entries {
            match g.endpoints(e) {
                Ok((tail, head)) => {
                    *deg.entry(tail).or_insert(0) += 1;
                    *deg.entry(head).or_insert(0) += 1;
                }
                Err(_) => return false,
            }
        }
        deg.values().all(|&d| d % 2 == 0)
    }

    /// Drop the coordinate of a contracted edge (C/e).
    pub fn contract(&self, e: EdgeId) -> SignedEvenSet {
        SignedEvenSet {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(id, _)| id != e)
                .collect(),
        }
    }

    pub fn dense(&self, universe: usize) -> Vec<i64> {
        let mut v = vec![0i64; universe];
        for &(e, s) in &self.entries {
            v[e] = s as i64;
        }
        v
    }
}

/// The four parameters of an even generating set: `d` the maximum number of
/// other generators any generator shares an edge with, `iota` the maximum
/// pairwise intersection size, `ell` the maximum generator size and `s` the
/// maximum number of generators covering a single edge.
///
/// For fewer than two generators there are no pairs, so `d = iota = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct GenParams {
    pub d: usize,
    pub iota: usize,
    pub ell: usize,
    pub s: usize,
}

/// An even generating set with cached parameters and an inverted index
/// edge -> covering generators.
#[derive(Debug, Clone)]
pub struct EvenGenSet {
    gens: Vec<SignedEvenSet>,
    cover: Vec<Vec<u32>>,
    params: GenParams,
}

impl EvenGenSet {
    /// `edge_universe` is the size of the host graph's edge id space.
    pub fn new(edge_universe: usize, gens: Vec<SignedEvenSet>) -> Result<Self> {
        for g in &gens {
            if let Some(&(e, _)) = g.entries().iter().find(|&&(e, _)| e >= edge_universe) {
                return Err(Error::EdgeOutOfRange(e));
            }
        }
        let cover = build_cover(edge_universe, &gens);
        let params = compute_params(&gens, &cover);
        Ok(EvenGenSet {
            gens,
            cover,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generators(&self) -> &[SignedEvenSet] {
        &self.gens
    }

    pub fn generator(&self, i: usize) -> &SignedEvenSet {
        &self.gens[i]
    }

    /// Generators covering edge `e`.
    pub fn covering(&self, e: EdgeId) -> &[u32] {
        &self.cover[e]
    }

    pub fn edge_universe(&self) -> usize {
        self.cover.len()
    }

    /// Cached `(d, iota, ell, s)`.
    pub fn params(&self) -> GenParams {
        self.params
    }

    /// Recompute the parameters from scratch (the cache must always agree).
    pub fn recompute_params(&self) -> GenParams {
        compute_params(&self.gens, &build_cover(self.cover.len(), &self.gens))
    }

    /// The contracted set C/e for every generator; parameters never increase.
    pub fn contract(&self, e: EdgeId) -> EvenGenSet {
        let gens: Vec<SignedEvenSet> = self.gens.iter().map(|c| c.contract(e)).collect();
        let cover = build_cover(self.cover.len(), &gens);
        let params = compute_params(&gens, &cover);
        EvenGenSet {
            gens,
            cover,
            params,
        }
    }

    /// Generating-set text format: first line `r`, then per generator a line
    /// `k  e1 s1 ... ek sk` with signs written `+`/`-`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.gens.len());
        for g in &self.gens {
            out.push_str(&g.len().to_string());
            for &(e, s) in g.entries() {
                out.push_str(&format!(" {} {}", e, if s > 0 { '+' } else { '-' }));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(edge_universe: usize, text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::parse(format!("missing {what}")))
        };
        let r: usize = next("generator count")?
            .parse()
            .map_err(|_| Error::parse("generator count must be an integer"))?;
        let mut gens = Vec::with_capacity(r);
        for i in 0..r {
            let k: usize = next(&format!("size of generator {i}"))?
                .parse()
                .map_err(|_| Error::parse(format!("size of generator {i} must be an integer")))?;
            let mut entries = Vec::with_capacity(k);
            for j in 0..k {
                let e: EdgeId = next(&format!("edge {j} of generator {i}"))?
                    .parse()
                    .map_err(|_| {
                        Error::parse(format!("edge id in generator {i} must be an integer"))
                    })?;
                let sign = match next(&format!("sign {j} of generator {i}"))? {
                    "+" => 1i8,
                    "-" => -1i8,
                    other => {
                        return Err(Error::parse(format!(
                            "sign must be '+' or '-', got {other:?}"
                        )))
                    }
                };
                entries.push((e, sign));
            }
            gens.push(SignedEvenSet::new(entries)?);
        }
        EvenGenSet::new(edge_universe, gens)
    }
}

fn build_cover(edge_universe: usize, gens: &[SignedEvenSet]) -> Vec<Vec<u32>> {
    let mut cover = vec![Vec::new(); edge_universe];
    for (i, g) in gens.iter().enumerate() {
        for &(e, _) in g.entries() {
            cover[e].push(i as u32);
        }
    }
    cover
}

fn compute_params(gens: &[SignedEvenSet], cover: &[Vec<u32>]) -> GenParams {
    let ell = gens.iter().map(|g| g.len()).max().unwrap_or(0);
    let s = cover.iter().map(|c| c.len()).max().unwrap_or(0);
    // Pairwise intersection sizes through the inverted index: total work is
    // sum over edges of (cover count)^2 instead of r^2 set intersections.
    let mut pair_counts: HashMap<(u32, u32), usize> = HashMap::new();
    for c in cover {
        for (a, &i) in c.iter().enumerate() {
            for &j in &c[a + 1..] {
                *pair_counts.entry((i.min(j), i.max(j))).or_insert(0) += 1;
            }
        }
    }
    let iota = pair_counts.values().copied().max().unwrap_or(0);
    let mut partners = vec![std::collections::HashSet::new(); gens.len()];
    for &(i, j) in pair_counts.keys() {
        partners[i as usize].insert(j);
        partners[j as usize].insert(i);
    }
    let d = partners.iter().map(|p| p.len()).max().unwrap_or(0);
    GenParams { d, iota, ell, s }
}

/// True iff the set generates the Z-module of integer flows of `g` (and
/// hence the Z_q-flows for every q >= 2). The `q` argument only documents the
/// caller's intent; the integer check covers all moduli.
///
/// A generator that is not itself a Z-flow on `g` is an error, distinct from
/// a clean "does not generate" answer.
pub fn verify_generates(set: &EvenGenSet, g: &OrientedMultigraph, _q: u32) -> Result<bool> {
    for (i, gen) in set.generators().iter().enumerate() {
        if !gen.is_integer_flow(g) {
            return Err(Error::NotAFlow { index: i });
        }
    }
    let universe = g.edge_universe();
    let rows: Vec<Vec<i128>> = set
        .generators()
        .iter()
        .map(|c| c.dense(universe).into_iter().map(|v| v as i128).collect())
        .collect();
    let basis = intmat::HermiteBasis::from_rows(rows);
    for cycle in fundamental_cycles(g)? {
        let target: Vec<i128> = cycle
            .dense(universe)
            .into_iter()
            .map(|v| v as i128)
            .collect();
        if !basis.contains(&target) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fundamental cycles of the deterministic spanning forest, one per live
/// non-forest edge (loops included: a loop is its own cycle).
pub fn fundamental_cycles(g: &OrientedMultigraph) -> Result<Vec<SignedEvenSet>> {
    let forest = g.spanning_forest(None);
    let mut cycles = Vec::new();
    for e in g.live_edges() {
        if forest.in_forest[e] {
            continue;
        }
        let (tail, head) = g.endpoints(e)?;
        if tail == head {
            cycles.push(SignedEvenSet::new(vec![(e, 1)])?);
            continue;
        }
        // Walk both endpoints up to their meeting point; the cycle is e
        // (traversed tail -> head) plus the forest path head -> tail.
        let mut entries = vec![(e, 1i8)];
        let (path_a, path_b) = forest_paths_to_meeting(&forest, head, tail);
        // path_a climbs from head, traversed in walking direction: an edge
        // parent_edge[v] goes between v and parent(v); walking v -> parent(v)
        // traverses it forward iff v is its tail.
        for &(edge, child) in &path_a {
            let (t, _) = g.endpoints(edge)?;
            entries.push((edge, if t == child { 1 } else { -1 }));
        }
        // path_b climbs from tail but is traversed in the opposite direction.
        for &(edge, child) in &path_b {
            let (t, _) = g.endpoints(edge)?;
            entries.push((edge, if t == child { -1 } else { 1 }));
        }
        cycles.push(SignedEvenSet::new(entries)?);
    }
    Ok(cycles)
}

/// An edge on a forest path, tagged with its child-side endpoint.
type PathStep = (EdgeId, usize);

/// Climb from `a` and `b` to their lowest common ancestor in the forest.
/// Returns the two edge lists as `(edge, child endpoint)` pairs.
fn forest_paths_to_meeting(
    forest: &crate::graph::SpanningForest,
    a: usize,
    b: usize,
) -> (Vec<PathStep>, Vec<PathStep>) {
    let depth = |mut v: usize| {
        let mut d = 0;
        while let Some(p) = forest.parent_vertex[v] {
            v = p;
            d += 1;
        }
        d
    };
    let (mut va, mut vb) = (a, b);
    let (mut da, mut db) = (depth(a), depth(b));
    let mut path_a = Vec::new();
    let mut path_b = Vec::new();
    while da > db {
        path_a.push((forest.parent_edge[va].unwrap(), va));
        va = forest.parent_vertex[va].unwrap();
        da -= 1;
    }
    while db > da {
        path_b.push((forest.parent_edge[vb].unwrap(), vb));
        vb = forest.parent_vertex[vb].unwrap();
        db -= 1;
    }
    while va != vb {
        path_a.push((forest.parent_edge[va].unwrap(), va));
        va = forest.parent_vertex[va].unwrap();
        path_b.push((forest.parent_edge[vb].unwrap(), vb));
        vb = forest.parent_vertex[vb].unwrap();
    }
    (path_a, path_b)
}

mod intmat {
    //! Row-style Hermite reduction for integer lattice membership.

    /// Echelon basis of the row lattice of a matrix: rows with strictly
    /// increasing pivot columns, produced by unimodular row operations.
    pub struct HermiteBasis {
        rows: Vec<Vec<i128>>,
        pivots: Vec<usize>,
    }

    impl HermiteBasis {
        #[allow(clippy::needless_range_loop)] // index ops touch two rows at once
        pub fn from_rows(mut rows: Vec<Vec<i128>>) -> Self {
            let width = rows.first().map_or(0, |r| r.len());
            let mut basis_rows: Vec<Vec<i128>> = Vec::new();
            let mut pivots = Vec::new();
            for col in 0..width {
                // Euclid-combine all rows with a nonzero entry in `col` until
                // one of them carries the gcd and the rest are zero there.
                loop {
                    let mut nonzero: Vec<usize> =
                        (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
                    if nonzero.len() <= 1 {
                        break;
                    }
                    nonzero.sort_by_key(|&i| rows[i][col].unsigned_abs());
                    let min = nonzero[0];
                    for &i in &nonzero[1..] {
                        let q = rows[i][col] / rows[min][col];
                        for k in col..width {
                            let sub = q * rows[min][k];
                            rows[i][k] -= sub;
                        }
                    }
                }
                if let Some(i) = (0..rows.len()).find(|&i| rows[i][col] != 0) {
                    let mut row = rows.swap_remove(i);
                    if row[col] < 0 {
                        row.iter_mut().for_each(|v| *v = -*v);
                    }
                    basis_rows.push(row);
                    pivots.push(col);
                }
            }
            HermiteBasis {
                rows: basis_rows,
                pivots,
            }
        }

        /// Is `target` an integer combination of the basis rows?
        pub fn contains(&self, target: &[i128]) -> bool {
            let mut v = target.to_vec();
            for (row, &p) in self.rows.iter().zip(&self.pivots) {
                if v[p] == 0 {
                    continue;
                }
                if v[p] % row[p] != 0 {
                    return false;
                }
                let q = v[p] / row[p];
                for k in p..v.len() {
                    v[k] -= q * row[k];
                }
            }
            v.iter().all(|&x| x == 0)
        }
    }
}
