use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exterior::{check_dims, KVector};

/// Faces whose merged weight falls below this are dropped from a boundary.
pub const MERGE_THRESHOLD: f64 = 1e-14;

/// One oriented weighted simplex with explicit coordinates (the I/O form).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Cell {
    pub(crate) verts: Vec<usize>,
    pub(crate) weight: f64,
}

/// Weighted oriented k-simplices over a shared vertex table.
///
/// Vertices are identified by the bit pattern of their coordinates, so faces
/// produced from the same vertices merge exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralCurrent {
    n: usize,
    k: usize,
    pub(crate) coords: Vec<f64>,
    pub(crate) cells: Vec<Cell>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolyhedral {
    n: usize,
    k: usize,
    simplices: Vec<Simplex>,
}

pub(crate) struct VertexTable {
    n: usize,
    coords: Vec<f64>,
    index: HashMap<Vec<u64>, usize>,
}

impl VertexTable {
    pub(crate) fn new(n: usize) -> Self {
        VertexTable { n, coords: Vec::new(), index: HashMap::new() }
    }

    pub(crate) fn insert(&mut self, x: &[f64]) -> usize {
        // +0.0 and -0.0 are the same point
        let key: Vec<u64> = x.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect();
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.coords.len() / self.n;
        self.coords.extend_from_slice(x);
        self.index.insert(key, i);
        i
    }

    pub(crate) fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Sorts `verts` in place, returning the parity of the permutation as ±1.
pub(crate) fn sort_with_parity(verts: &mut [usize]) -> f64 {
    let mut sign = 1.0;
    for i in 1..verts.len() {
        let mut j = i;
        while j > 0 && verts[j - 1] > verts[j] {
            verts.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

impl PolyhedralCurrent {
    pub fn empty(n: usize, k: usize) -> Result<Self> {
        check_dims(n, k)?;
        Ok(PolyhedralCurrent { n, k, coords: Vec::new(), cells: Vec::new() })
    }

    /// Builds a current from explicit simplices; degenerate simplices are rejected.
    pub fn new(n: usize, k: usize, simplices: Vec<Simplex>) -> Result<Self> {
        check_dims(n, k)?;
        let mut table = VertexTable::new(n);
        let mut cells = Vec::with_capacity(simplices.len());
        for (i, s) in simplices.iter().enumerate() {
            if s.vertices.len() != k + 1 {
                return Err(Error::DimensionMismatch { expected: k + 1, found: s.vertices.len() });
            }
            if !s.weight.is_finite() {
                return Err(invalid(format!("simplex {i} has a non-finite weight")));
            }
            let mut verts = Vec::with_capacity(k + 1);
            for v in &s.vertices {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: v.len() });
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(invalid(format!("simplex {i} has a non-finite vertex")));
                }
                verts.push(table.insert(v));
            }
            cells.push(Cell { verts, weight: s.weight });
        }
        let out = PolyhedralCurrent { n, k, coords: table.into_coords(), cells };
        for (i, c) in out.cells.iter().enumerate() {
            if k > 0 && out.cell_vector(c).norm() == 0.0 {
                return Err(invalid(format!("simplex {i} is degenerate")));
            }
        }
        Ok(out)
    }

    pub(crate) fn from_parts(n: usize, k: usize, coords: Vec<f64>, cells: Vec<Cell>) -> Self {
        PolyhedralCurrent { n, k, coords, cells }
    }

    /// The closed polyline through `points` (each consecutive pair an edge, last back to first).
    pub fn closed_polyline(points: &[Vec<f64>], weight: f64) -> Result<Self> {
        let n = points.first().map_or(0, |p| p.len());
        let simplices = (0..points.len())
            .map(|i| Simplex { vertices: vec![points[i].clone(), points[(i + 1) % points.len()].clone()], weight })
            .collect();
        Self::new(n, 1, simplices)
    }

    pub fn segment(a: &[f64], b: &[f64], weight: f64) -> Result<Self> {
        Self::new(a.len(), 1, vec![Simplex { vertices: vec![a.to_vec(), b.to_vec()], weight }])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub(crate) fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len() / self.n.max(1)
    }

    pub fn simplices(&self) -> Vec<Simplex> {
        self.cells
            .iter()
            .map(|c| Simplex { vertices: c.verts.iter().map(|&v| self.vertex(v).to_vec()).collect(), weight: c.weight })
            .collect()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().map(|c| c.weight)
    }

    /// True when every weight is an integer.
    pub fn is_integral(&self) -> bool {
        self.cells.iter().all(|c| c.weight.fract() == 0.0)
    }

    /// `(v_1 - v_0) ∧ … ∧ (v_k - v_0) / k!`, whose norm is the k-volume.
    pub(crate) fn cell_vector(&self, c: &Cell) -> KVector {
        simplex_vector(&c.verts.iter().map(|&v| self.vertex(v)).collect::<Vec<_>>())
    }

    /// `Σ |w| · volume`.
    pub fn mass(&self) -> f64 {
        self.cells.iter().map(|c| c.weight.abs() * self.cell_vector(c).norm()).sum()
    }

    /// Combinatorial boundary with faces merged by vertex set and orientation.
    pub fn boundary(&self) -> Result<PolyhedralCurrent> {
        self.boundary_with_threshold(MERGE_THRESHOLD)
    }

    /// As [`boundary`](Self::boundary), dropping merged faces with `|w| <= threshold`
    /// (`threshold < 0` keeps every merged face).
    pub fn boundary_with_threshold(&self, threshold: f64) -> Result<PolyhedralCurrent> {
        if self.k == 0 {
            return Err(invalid("the boundary of a 0-current is undefined"));
        }
        let mut faces: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for c in &self.cells {
            for i in 0..=self.k {
                let mut face: Vec<usize> = c.verts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                let parity = sort_with_parity(&mut face);
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                *faces.entry(face).or_insert(0.0) += sign * parity * c.weight;
            }
        }
        let cells = faces
            .into_iter()
            .filter(|(_, w)| w.abs() > threshold)
            .map(|(verts, weight)| Cell { verts, weight })
            .collect();
        Ok(PolyhedralCurrent { n: self.n, k: self.k - 1, coords: self.coords.clone(), cells })
    }

    /// Largest merged weight magnitude; zero for the empty current.
    pub fn max_abs_weight(&self) -> f64 {
        self.cells.iter().map(|c| c.weight.abs()).fold(0.0, f64::max)
    }

    /// Applies `f` to every vertex (the polyhedral pushforward by a map that is
    /// affine on each simplex).
    pub fn map_vertices<F: Fn(&[f64]) -> Vec<f64>>(&self, m: usize, f: F) -> Result<PolyhedralCurrent> {
        check_dims(m, self.k)?;
        let mut coords = Vec::with_capacity(self.vertex_count() * m);
        for i in 0..self.vertex_count() {
            let y = f(self.vertex(i));
            if y.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: y.len() });
            }
            coords.extend(y);
        }
        Ok(PolyhedralCurrent { n: m, k: self.k, coords, cells: self.cells.clone() })
    }

    pub fn scale_weights(&self, s: f64) -> PolyhedralCurrent {
        let mut out = self.clone();
        out.cells.iter_mut().for_each(|c| c.weight *= s);
        out
    }

    /// Formal sum; the second current's vertices are merged into the first table.
    pub fn add(&self, other: &PolyhedralCurrent) -> Result<PolyhedralCurrent> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.k != other.k {
            return Err(Error::GradeMismatch { expected: self.k, found: other.k });
        }
        let mut simplices = self.simplices();
        simplices.extend(other.simplices());
        let mut table = VertexTable::new(self.n);
        let cells = simplices
            .iter()
            .map(|s| Cell { verts: s.vertices.iter().map(|v| table.insert(v)).collect(), weight: s.weight })
            .collect();
        Ok(PolyhedralCurrent { n: self.n, k: self.k, coords: table.into_coords(), cells })
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawPolyhedral { n: self.n, k: self.k, simplices: self.simplices() };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawPolyhedral = serde_json::from_str(s)?;
        Self::new(raw.n, raw.k, raw.simplices)
    }
}

/// `(v_1 - v_0) ∧ … ∧ (v_k - v_0) / k!` for vertex slices.
pub(crate) fn simplex_vector(verts: &[&[f64]]) -> KVector {
    let n = verts[0].len();
    let k = verts.len() - 1;
    let mut acc = KVector::scalar(n, 1.0).expect("scalar");
    for v in &verts[1..] {
        let edge: Vec<f64> = v.iter().zip(verts[0]).map(|(a, b)| a - b).collect();
        acc = acc.wedge(&KVector::from_coeffs(n, 1, edge).expect("edge")).expect("k <= n");
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    acc.scale(1.0 / fact)
}
