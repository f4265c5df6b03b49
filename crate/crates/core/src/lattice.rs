//! Lattice graph generators with their face generating sets.
//!
//! Each constructor returns the graph together with one signed even set per
//! bounded face (per elementary square for 3D grids). The face sets of these
//! lattices generate the cycle space, and their class parameters are the
//! worst-case values over arbitrarily large patches:
//!
//! | kind    | d  | iota | ell | s |
//! |---------|----|------|-----|---|
//! | `grid`  | 4  | 1    | 4   | 2 |
//! | `grid3` | 12 | 1    | 4   | 4 |
//! | `tri`   | 3  | 1    | 3   | 2 |
//! | `hex`   | 6  | 1    | 6   | 2 |
//!
//! Instances that are too small to contain an interior cell realize smaller
//! values; mixing-time bounds computed from the class parameters stay valid
//! because the bounds only need upper bounds on the parameters.

use std::collections::HashMap;

use crate::cycle_space::{verify_generates, EvenGenSet, GenParams, SignedEvenSet};
use crate::error::Error;
use crate::graph::{EdgeId, OrientedMultigraph};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Grid,
    Grid3,
    Tri,
    Hex,
}

impl LatticeKind {
    /// Worst-case parameters of the face generating sets of this lattice
    /// family, used for mixing-time bounds on auto-generated sets.
    pub fn class_params(self) -> GenParams {
        match self {
            LatticeKind::Grid => GenParams {
                d: 4,
                iota: 1,
                ell: 4,
                s: 2,
            },
            LatticeKind::Grid3 => GenParams {
                d: 12,
                iota: 1,
                ell: 4,
                s: 4,
            },
            LatticeKind::Tri => GenParams {
                d: 3,
                iota: 1,
                ell: 3,
                s: 2,
            },
            LatticeKind::Hex => GenParams {
                d: 6,
                iota: 1,
                ell: 6,
                s: 2,
            },
        }
    }
}

/// A lattice graph plus its face generating set.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub kind: LatticeKind,
    pub graph: OrientedMultigraph,
    pub faces: EvenGenSet,
}

impl Lattice {
    fn finish(kind: LatticeKind, graph: OrientedMultigraph, faces: Vec<SignedEvenSet>) -> Self {
        let faces = EvenGenSet::new(graph.edge_universe(), faces).expect("faces index in range");
        // Generation check in debug builds, capped: the dense integer
        // reduction behind verify_generates is desk-scale only.
        if cfg!(debug_assertions) && graph.edge_universe() <= 512 {
            assert!(
                verify_generates(&faces, &graph, 2).expect("faces are flows"),
                "lattice faces must generate the cycle space"
            );
        }
        Lattice { kind, graph, faces }
    }
}

/// `w x h` grid of vertices (w, h >= 2) with one 4-cycle per bounded face.
pub fn grid(w: usize, h: usize) -> Result<Lattice> {
    if w < 2 || h < 2 {
        return Err(Error::invalid(format!("grid needs w, h >= 2, got {w}x{h}")));
    }
    let vid = |x: usize, y: usize| y * w + x;
    let mut pairs = Vec::new();
    let mut h_edge = HashMap::new();
    let mut v_edge = HashMap::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                h_edge.insert((x, y), pairs.len());
                pairs.push((vid(x, y), vid(x + 1, y)));
            }
            if y + 1 < h {
                v_edge.insert((x, y), pairs.len());
                pairs.push((vid(x, y), vid(x, y + 1)));
            }
        }
    }
    let graph = OrientedMultigraph::from_edge_list(w * h, &pairs)?;
    let mut faces = Vec::new();
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            faces.push(square_face(
                h_edge[&(x, y)],
                v_edge[&(x + 1, y)],
                h_edge[&(x, y + 1)],
                v_edge[&(x, y)],
            )?);
        }
    }
    Ok(Lattice::finish(LatticeKind::Grid, graph, faces))
}

/// Counter-clockwise square: bottom and right forward, top and left backward.
fn square_face(bottom: EdgeId, right: EdgeId, top: EdgeId, left: EdgeId) -> Result<SignedEvenSet> {
    SignedEvenSet::new(vec![(bottom, 1), (right, 1), (top, -1), (left, -1)])
}

/// `w x h x d` grid of vertices (all >= 2) with one 4-cycle per elementary
/// square in each of the three axis planes.
pub fn grid3(w: usize, h: usize, d: usize) -> Result<Lattice> {
    if w < 2 || h < 2 || d < 2 {
        return Err(Error::invalid(format!(
            "grid3 needs w, h, d >= 2, got {w}x{h}x{d}"
        )));
    }
    let vid = |x: usize, y: usize, z: usize| (z * h + y) * w + x;
    let mut pairs = Vec::new();
    let mut ex = HashMap::new();
    let mut ey = HashMap::new();
    let mut ez = HashMap::new();
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    ex.insert((x, y, z), pairs.len());
                    pairs.push((vid(x, y, z), vid(x + 1, y, z)));
                }
                if y + 1 < h {
                    ey.insert((x, y, z), pairs.len());
                    pairs.push((vid(x, y, z), vid(x, y + 1, z)));
                }
                if z + 1 < d {
                    ez.insert((x, y, z), pairs.len());
                    pairs.push((vid(x, y, z), vid(x, y, z + 1)));
                }
            }
        }
    }
    let graph = OrientedMultigraph::from_edge_list(w * h * d, &pairs)?;
    let mut faces = Vec::new();
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w && y + 1 < h {
                    faces.push(square_face(
                        ex[&(x, y, z)],
                        ey[&(x + 1, y, z)],
                        ex[&(x, y + 1, z)],
                        ey[&(x, y, z)],
                    )?);
                }
                if x + 1 < w && z + 1 < d {
                    faces.push(square_face(
                        ex[&(x, y, z)],
                        ez[&(x + 1, y, z)],
                        ex[&(x, y, z + 1)],
                        ez[&(x, y, z)],
                    )?);
                }
                if y + 1 < h && z + 1 < d {
                    faces.push(square_face(
                        ey[&(x, y, z)],
                        ez[&(x, y + 1, z)],
                        ey[&(x, y, z + 1)],
                        ez[&(x, y, z)],
                    )?);
                }
            }
        }
    }
    Ok(Lattice::finish(LatticeKind::Grid3, graph, faces))
}

/// Triangular lattice: a `w x h` grid of vertices with one diagonal per cell,
/// two triangular faces per cell.
pub fn tri(w: usize, h: usize) -> Result<Lattice> {
    if w < 2 || h < 2 {
        return Err(Error::invalid(format!("tri needs w, h >= 2, got {w}x{h}")));
    }
    let vid = |x: usize, y: usize| y * w + x;
    let mut pairs = Vec::new();
    let mut h_edge = HashMap::new();
    let mut v_edge = HashMap::new();
    let mut d_edge = HashMap::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                h_edge.insert((x, y), pairs.len());
                pairs.push((vid(x, y), vid(x + 1, y)));
            }
            if y + 1 < h {
                v_edge.insert((x, y), pairs.len());
                pairs.push((vid(x, y), vid(x, y + 1)));
            }
            if x + 1 < w && y + 1 < h {
                d_edge.insert((x, y), pairs.len());
                pairs.push((vid(x, y), vid(x + 1, y + 1)));
            }
        }
    }
    let graph = OrientedMultigraph::from_edge_list(w * h, &pairs)?;
    let mut faces = Vec::new();
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            // Lower-right triangle: bottom, right, then back along the diagonal.
            faces.push(SignedEvenSet::new(vec![
                (h_edge[&(x, y)], 1),
                (v_edge[&(x + 1, y)], 1),
                (d_edge[&(x, y)], -1),
            ])?);
            // Upper-left triangle: diagonal, then back along top and left.
            faces.push(SignedEvenSet::new(vec![
                (d_edge[&(x, y)], 1),
                (h_edge[&(x, y + 1)], -1),
                (v_edge[&(x, y)], -1),
            ])?);
        }
    }
    Ok(Lattice::finish(LatticeKind::Tri, graph, faces))
}

/// Honeycomb lattice in brick-wall form with `h` rows of hexagons; even rows
/// hold `w` hexagons, odd rows are offset and hold `w - 1`.
pub fn hex(w: usize, h: usize) -> Result<Lattice> {
    if w < 2 || h < 1 {
        return Err(Error::invalid(format!(
            "hex needs w >= 2 and h >= 1, got {w}x{h}"
        )));
    }
    type GridPoint = (usize, usize);
    let mut vertex_ids: HashMap<GridPoint, usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut edge_ids: HashMap<(GridPoint, GridPoint), EdgeId> = HashMap::new();
    let mut faces = Vec::new();

    // Hexagon (row j, column k) spans grid columns [2k+p, 2k+2+p], p = j % 2.
    for j in 0..h {
        let p = j % 2;
        let cols = if p == 0 { w } else { w - 1 };
        for k in 0..cols {
            let i1 = 2 * k + p;
            let corners = [
                (i1, j),
                (i1 + 1, j),
                (i1 + 2, j),
                (i1, j + 1),
                (i1 + 1, j + 1),
                (i1 + 2, j + 1),
            ];
            for &c in &corners {
                let next_id = vertex_ids.len();
                vertex_ids.entry(c).or_insert(next_id);
            }
            let mut edge = |a: (usize, usize), b: (usize, usize)| -> EdgeId {
                *edge_ids.entry((a, b)).or_insert_with(|| {
                    pairs.push((vertex_ids[&a], vertex_ids[&b]));
                    pairs.len() - 1
                })
            };
            // Oriented rightward (horizontals) and upward (verticals).
            let bottom_l = edge((i1, j), (i1 + 1, j));
            let bottom_r = edge((i1 + 1, j), (i1 + 2, j));
            let right = edge((i1 + 2, j), (i1 + 2, j + 1));
            let top_r = edge((i1 + 1, j + 1), (i1 + 2, j + 1));
            let top_l = edge((i1, j + 1), (i1 + 1, j + 1));
            let left = edge((i1, j), (i1, j + 1));
            faces.push(SignedEvenSet::new(vec![
                (bottom_l, 1),
                (bottom_r, 1),
                (right, 1),
                (top_r, -1),
                (top_l, -1),
                (left, -1),
            ])?);
        }
    }
    let graph = OrientedMultigraph::from_edge_list(vertex_ids.len(), &pairs)?;
    Ok(Lattice::finish(LatticeKind::Hex, graph, faces))
}

/// Parse a generator spec: `grid:WxH`, `grid3:WxHxD`, `tri:WxH`, `hex:WxH`.
pub fn parse_spec(spec: &str) -> Result<Lattice> {
    let (kind, dims) = spec
        .split_once(':')
        .ok_or_else(|| Error::parse(format!("not a lattice spec: {spec:?}")))?;
    let parts: Vec<usize> = dims
        .split('x')
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| Error::parse(format!("bad dimension {p:?} in {spec:?}")))
        })
        .collect::<Result<_>>()?;
    match (kind, parts.as_slice()) {
        ("grid", [w, h]) => grid(*w, *h),
        ("grid3", [w, h, d]) => grid3(*w, *h, *d),
        ("tri", [w, h]) => tri(*w, *h),
        ("hex", [w, h]) => hex(*w, *h),
        _ => Err(Error::parse(format!(
            "unknown lattice spec {spec:?} (want grid:WxH, grid3:WxHxD, tri:WxH or hex:WxH)"
        ))),
    }
}

/// Does the string look like a lattice spec rather than a file path?
pub fn is_lattice_spec(s: &str) -> bool {
    matches!(
        s.split_once(':').map(|(k, _)| k),
        Some("grid" | "grid3" | "tri" | "hex")
    )
}
