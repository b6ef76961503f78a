use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exterior::{check_dims, push_into, wedge_into, KVector, MassOptions};
use crate::flow::{advect_times, VectorField};
use crate::forms::FormField;
use crate::numeric::{binomial, compensated_sum};

use super::polyhedral::PolyhedralCurrent;
use super::quadrature::simplex_rule;

/// Atomic k-current `Σ τ_i δ_{x_i}` stored as flat point and coefficient arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurrent {
    n: usize,
    k: usize,
    points: Vec<f64>,
    vectors: Vec<f64>,
    /// Every τ_i is known to be simple, so its mass norm is its Euclidean norm.
    simple: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTau {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    x: Vec<f64>,
    tau: RawTau,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiscrete {
    n: usize,
    k: usize,
    atoms: Vec<RawAtom>,
}

/// Per-run statistics of a flow pushforward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PushStats {
    /// Largest operator norm of `DΦ_t` over the atoms.
    pub max_jacobian_norm: f64,
    /// Atoms starting within 1e-9 of a kink of the field.
    pub kink_hits: usize,
}

const KINK_RADIUS: f64 = 1e-9;

impl DiscreteCurrent {
    pub fn empty(n: usize, k: usize) -> Result<Self> {
        check_dims(n, k)?;
        Ok(DiscreteCurrent { n, k, points: Vec::new(), vectors: Vec::new(), simple: true })
    }

    pub fn new(n: usize, k: usize, atoms: Vec<(Vec<f64>, KVector)>) -> Result<Self> {
        let mut out = Self::empty(n, k)?;
        out.simple = k <= 1 || k + 1 >= n;
        for (x, tau) in atoms {
            out.push_atom(&x, &tau)?;
        }
        Ok(out)
    }

    pub(crate) fn from_raw(n: usize, k: usize, points: Vec<f64>, vectors: Vec<f64>, simple: bool) -> Self {
        debug_assert_eq!(points.len() / n.max(1), vectors.len() / binomial(n, k));
        DiscreteCurrent { n, k, points, vectors, simple }
    }

    pub fn push_atom(&mut self, x: &[f64], tau: &KVector) -> Result<()> {
        if x.len() != self.n || tau.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: if x.len() != self.n { x.len() } else { tau.dim() } });
        }
        if tau.grade() != self.k {
            return Err(Error::GradeMismatch { expected: self.k, found: tau.grade() });
        }
        self.points.extend_from_slice(x);
        self.vectors.extend_from_slice(tau.coeffs());
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.k
    }

    fn width(&self) -> usize {
        binomial(self.n, self.k)
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_simple(&self) -> bool {
        self.simple
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.vectors[i * w..(i + 1) * w]
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        (0..self.len()).map(move |i| (self.point(i), self.vector(i)))
    }

    pub fn atom(&self, i: usize) -> (Vec<f64>, KVector) {
        (self.point(i).to_vec(), KVector::from_coeffs(self.n, self.k, self.vector(i).to_vec()).expect("stored shape"))
    }

    /// `Σ_i <τ_i, ω(x_i)>`, evaluated atom-parallel and reduced in atom order
    /// with compensated summation.
    pub fn pair<F: FormField + ?Sized>(&self, w: &F) -> Result<f64> {
        if w.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: w.dim() });
        }
        if w.grade() != self.k {
            return Err(Error::GradeMismatch { expected: self.k, found: w.grade() });
        }
        let width = self.width();
        let terms: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; width],
                |buf, i| {
                    w.eval_into(self.point(i), buf);
                    self.vector(i).iter().zip(buf.iter()).map(|(a, b)| a * b).sum::<f64>()
                },
            )
            .collect();
        Ok(compensated_sum(terms))
    }

    /// `Σ M(τ_i)`; the Euclidean norm for simple atoms.
    pub fn mass(&self) -> f64 {
        if self.simple {
            return compensated_sum(self.atoms().map(|(_, v)| v.iter().map(|c| c * c).sum::<f64>().sqrt()));
        }
        let opts = MassOptions::default();
        let masses: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let v = KVector::from_coeffs(self.n, self.k, self.vector(i).to_vec()).expect("stored shape");
                crate::exterior::mass_norm(&v, &opts).value
            })
            .collect();
        compensated_sum(masses)
    }

    /// `v ∧ T`, atom by atom.
    pub fn wedge_field(&self, v: &VectorField) -> Result<DiscreteCurrent> {
        if v.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.dim() });
        }
        check_dims(self.n, self.k + 1)?;
        let out_w = binomial(self.n, self.k + 1);
        let n = self.n;
        let k = self.k;
        let mut vectors = vec![0.0; self.len() * out_w];
        vectors.par_chunks_mut(out_w.max(1)).enumerate().for_each_init(
            || vec![0.0; n],
            |bv, (i, out)| {
                v.eval_into(self.point(i), bv);
                wedge_into(n, 1, bv, k, self.vector(i), out);
            },
        );
        // a vector wedged with a simple vector is simple
        Ok(DiscreteCurrent { n, k: k + 1, points: self.points.clone(), vectors, simple: self.simple })
    }

    /// `s · T`.
    pub fn scale(&self, s: f64) -> DiscreteCurrent {
        let mut out = self.clone();
        out.vectors.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// Formal sum (concatenation of atoms).
    pub fn concat(&self, other: &DiscreteCurrent) -> Result<DiscreteCurrent> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.k != other.k {
            return Err(Error::GradeMismatch { expected: self.k, found: other.k });
        }
        let mut out = self.clone();
        out.points.extend_from_slice(&other.points);
        out.vectors.extend_from_slice(&other.vectors);
        out.simple &= other.simple;
        Ok(out)
    }

    /// Pushforward through a map given per atom as image point and Jacobian
    /// (`m × n`): atoms go to `(f(x_i), Λ^k Df(x_i)[τ_i])`.
    pub fn push_map<F>(&self, m: usize, f: F) -> Result<DiscreteCurrent>
    where
        F: Fn(&[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> + Sync,
    {
        check_dims(m, self.k)?;
        let n = self.n;
        let k = self.k;
        let out_w = binomial(m, k);
        let mapped: Vec<(Vec<f64>, Vec<f64>)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (y, jac) = f(self.point(i))?;
                if y.len() != m || jac.nrows() != m || jac.ncols() != n {
                    return Err(Error::DimensionMismatch { expected: m, found: y.len() });
                }
                let mut tau = vec![0.0; out_w];
                push_into(&jac, n, k, self.vector(i), &mut tau);
                Ok((y, tau))
            })
            .collect::<Result<_>>()?;
        let mut points = Vec::with_capacity(self.len() * m);
        let mut vectors = Vec::with_capacity(self.len() * out_w);
        for (y, tau) in mapped {
            points.extend(y);
            vectors.extend(tau);
        }
        Ok(DiscreteCurrent { n: m, k, points, vectors, simple: self.simple })
    }

    /// `(Φ_t)_* T`.
    pub fn pushforward_flow(&self, b: &VectorField, t: f64, tol: f64) -> Result<DiscreteCurrent> {
        Ok(self.pushforward_flow_stats(b, t, tol)?.0)
    }

    pub fn pushforward_flow_stats(&self, b: &VectorField, t: f64, tol: f64) -> Result<(DiscreteCurrent, PushStats)> {
        let (mut fam, stats) = self.pushforward_flow_times(b, &[t], tol)?;
        Ok((fam.pop().expect("one time"), stats))
    }

    /// `(Φ_{t_j})_* T` for monotone same-sign times, integrating each atom's
    /// trajectory once through all of them.
    pub fn pushforward_flow_times(&self, b: &VectorField, times: &[f64], tol: f64) -> Result<(Vec<DiscreteCurrent>, PushStats)> {
        if b.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: b.dim() });
        }
        if times.is_empty() {
            return Err(invalid("need at least one time"));
        }
        let n = self.n;
        let k = self.k;
        let width = self.width();
        let per_atom: Vec<(Vec<(Vec<f64>, Vec<f64>)>, f64, bool)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let x = self.point(i);
                let runs = advect_times(b, x, times, tol, true)?;
                let mut max_norm = 0.0f64;
                let mut out = Vec::with_capacity(times.len());
                for r in runs {
                    let jac = r.jacobian.expect("jacobian requested");
                    max_norm = max_norm.max(jac.clone().svd(false, false).singular_values.max());
                    let mut tau = vec![0.0; width];
                    push_into(&jac, n, k, self.vector(i), &mut tau);
                    out.push((r.endpoint, tau));
                }
                let hit = b.kink_distance(x).is_some_and(|d| d <= KINK_RADIUS);
                Ok((out, max_norm, hit))
            })
            .collect::<Result<_>>()?;
        let mut stats = PushStats::default();
        let mut family: Vec<DiscreteCurrent> = (0..times.len())
            .map(|_| DiscreteCurrent {
                n,
                k,
                points: Vec::with_capacity(self.points.len()),
                vectors: Vec::with_capacity(self.vectors.len()),
                simple: self.simple,
            })
            .collect();
        for (atom, norm, hit) in per_atom {
            stats.max_jacobian_norm = stats.max_jacobian_norm.max(norm);
            stats.kink_hits += hit as usize;
            for (cur, (y, tau)) in family.iter_mut().zip(atom) {
                cur.points.extend(y);
                cur.vectors.extend(tau);
            }
        }
        Ok((family, stats))
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawDiscrete {
            n: self.n,
            k: self.k,
            atoms: self.atoms().map(|(x, v)| RawAtom { x: x.to_vec(), tau: RawTau { coeffs: v.to_vec() } }).collect(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    /// Reads the atom format; atoms read back are not assumed simple unless
    /// every k-vector in this grade is.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawDiscrete = serde_json::from_str(s)?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(|a| Ok((a.x, KVector::from_coeffs(raw.n, raw.k, a.tau.coeffs)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.n, raw.k, atoms)
    }

    /// Marks the atoms as simple k-vectors (the caller vouches for it).
    pub fn assume_simple(mut self) -> Self {
        self.simple = true;
        self
    }
}

impl PolyhedralCurrent {
    /// Atoms at the nodes of a simplex rule exact to degree `q`, with
    /// `τ = weight · (v_1 - v_0) ∧ … ∧ (v_k - v_0) / k! · w_node`.
    pub fn discretize(&self, q: usize) -> Result<DiscreteCurrent> {
        let n = self.dim();
        let k = self.grade();
        let rule = simplex_rule(k, q)?;
        let width = binomial(n, k);
        let mut points = Vec::with_capacity(self.len() * rule.len() * n);
        let mut vectors = Vec::with_capacity(self.len() * rule.len() * width);
        for c in &self.cells {
            let tau = self.cell_vector(c);
            for (bary, w) in rule.nodes() {
                let mut x = vec![0.0; n];
                for (&v, &l) in c.verts.iter().zip(bary) {
                    x.iter_mut().zip(self.vertex(v)).for_each(|(a, p)| *a += l * p);
                }
                points.extend(x);
                vectors.extend(tau.coeffs().iter().map(|t| t * c.weight * w));
            }
        }
        Ok(DiscreteCurrent::from_raw(n, k, points, vectors, true))
    }
}

/// `<T, ω>` for a polynomial test form.
pub fn pair_current<F: FormField + ?Sized>(t: &DiscreteCurrent, w: &F) -> Result<f64> {
    t.pair(w)
}
