use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::exterior::KVector;

use super::polyhedral::{simplex_vector, sort_with_parity, Cell, PolyhedralCurrent, VertexTable};

impl PolyhedralCurrent {
    /// Refines every simplex `levels` times: edge-midpoint (red) refinement for
    /// k ≤ 2, barycentric refinement for k ≥ 3. Children inherit the weight.
    pub fn subdivide(&self, levels: usize) -> PolyhedralCurrent {
        let mut cur = self.clone();
        for _ in 0..levels {
            cur = match cur.grade() {
                0 => cur,
                1 | 2 => cur.red_step(),
                _ => cur.barycentric_step(),
            };
        }
        cur
    }

    fn red_step(&self) -> PolyhedralCurrent {
        let n = self.dim();
        let mut table = VertexTable::new(n);
        let mut cells = Vec::with_capacity(self.cells.len() * 4);
        for c in &self.cells {
            let v: Vec<usize> = c.verts.iter().map(|&i| table.insert(self.vertex(i))).collect();
            let mid = |table: &mut VertexTable, a: usize, b: usize| {
                let p: Vec<f64> = self.vertex(c.verts[a]).iter().zip(self.vertex(c.verts[b])).map(|(x, y)| (x + y) * 0.5).collect();
                table.insert(&p)
            };
            let w = c.weight;
            if c.verts.len() == 2 {
                let m = mid(&mut table, 0, 1);
                cells.push(Cell { verts: vec![v[0], m], weight: w });
                cells.push(Cell { verts: vec![m, v[1]], weight: w });
            } else {
                let m01 = mid(&mut table, 0, 1);
                let m12 = mid(&mut table, 1, 2);
                let m02 = mid(&mut table, 0, 2);
                for verts in [vec![v[0], m01, m02], vec![m01, v[1], m12], vec![m02, m12, v[2]], vec![m01, m12, m02]] {
                    cells.push(Cell { verts, weight: w });
                }
            }
        }
        PolyhedralCurrent::from_parts(n, self.grade(), table.into_coords(), cells)
    }

    fn barycentric_step(&self) -> PolyhedralCurrent {
        let n = self.dim();
        let k = self.grade();
        let mut table = VertexTable::new(n);
        let mut cells = Vec::new();
        let perms = permutations(k + 1);
        for c in &self.cells {
            let parent = self.cell_vector(c);
            // barycenters summed over sorted vertex ids so shared faces agree bitwise
            let mut centers: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for p in &perms {
                let mut verts = Vec::with_capacity(k + 1);
                for j in 0..=k {
                    let mut face: Vec<usize> = p[..=j].iter().map(|&i| c.verts[i]).collect();
                    face.sort_unstable();
                    let id = *centers.entry(face.clone()).or_insert_with(|| {
                        let mut x = vec![0.0; n];
                        for &v in &face {
                            x.iter_mut().zip(self.vertex(v)).for_each(|(a, b)| *a += b);
                        }
                        x.iter_mut().for_each(|a| *a /= face.len() as f64);
                        table.insert(&x)
                    });
                    verts.push(id);
                }
                let child = simplex_vector(&verts.iter().map(|&i| table_vertex(&table, n, i)).collect::<Vec<_>>());
                if orientation(&child, &parent) < 0.0 {
                    verts.swap(0, 1);
                }
                cells.push(Cell { verts, weight: c.weight });
            }
        }
        PolyhedralCurrent::from_parts(n, k, table.into_coords(), cells)
    }

    /// `⟦a, b⟧ × T` in R^{1+n} with time as coordinate 0, oriented by `e_0 ∧ τ`.
    pub fn product_interval(&self, a: f64, b: f64) -> Result<PolyhedralCurrent> {
        self.product_slabs(&[a, b])
    }

    /// `⟦t_0, t_M⟧ × T` triangulated slab by slab over the increasing `times`.
    /// Each prism uses the staircase triangulation over globally sorted vertex
    /// ids, so lateral faces shared between neighbouring prisms cancel exactly.
    pub fn product_slabs(&self, times: &[f64]) -> Result<PolyhedralCurrent> {
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("product interval must be non-degenerate and increasing"));
        }
        let n = self.dim();
        let k = self.grade();
        if k + 1 > n + 1 {
            return Err(crate::Error::GradeOverflow { grade: k + 1, dim: n + 1 });
        }
        let mut table = VertexTable::new(n + 1);
        let mut cells = Vec::new();
        let lift = |t: f64, v: usize, table: &mut VertexTable| {
            let mut x = Vec::with_capacity(n + 1);
            x.push(t);
            x.extend_from_slice(self.vertex(v));
            table.insert(&x)
        };
        for w in times.windows(2) {
            for c in &self.cells {
                let mut base = c.verts.clone();
                let parity = sort_with_parity(&mut base);
                for i in 0..=k {
                    let mut verts = Vec::with_capacity(k + 2);
                    for &v in &base[..=i] {
                        verts.push(lift(w[0], v, &mut table));
                    }
                    for &v in &base[i..] {
                        verts.push(lift(w[1], v, &mut table));
                    }
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    cells.push(Cell { verts, weight: sign * parity * c.weight });
                }
            }
        }
        Ok(PolyhedralCurrent::from_parts(n + 1, k + 1, table.into_coords(), cells))
    }

    /// `{t} × T` in R^{1+n}.
    pub fn at_time(&self, t: f64) -> PolyhedralCurrent {
        let n = self.dim();
        let mut coords = Vec::with_capacity(self.vertex_count() * (n + 1));
        for i in 0..self.vertex_count() {
            coords.push(t);
            coords.extend_from_slice(self.vertex(i));
        }
        PolyhedralCurrent::from_parts(n + 1, self.grade(), coords, self.cells.clone())
    }
}

fn table_vertex(table: &VertexTable, n: usize, i: usize) -> &[f64] {
    &table.coords()[i * n..(i + 1) * n]
}

fn orientation(a: &KVector, b: &KVector) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum()
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}
