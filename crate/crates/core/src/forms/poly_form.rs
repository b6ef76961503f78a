use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::exterior::{check_dims, rank, wedge_sign, KCovector, MultiIndex};
use crate::numeric::binomial;

use super::bump::Bump;
use super::polynomial::Polynomial;
use super::FormField;

/// Differential k-form on R^n whose coefficients are polynomials, optionally
/// multiplied by a radial bump.
///
/// Polynomials are stored in shifted coordinates `y = x - center` (the bump
/// center, or the origin without a bump). A term keyed by `(I, j)` contributes
/// `P(y) · q^{(j)}(|y|²) · dx_I`, where `q^{(j)}` is the `j`-th derivative of
/// the bump profile; `j = 0` without a bump means no cutoff at all.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyForm {
    n: usize,
    k: usize,
    center: Vec<f64>,
    bump: Option<Bump>,
    terms: BTreeMap<(MultiIndex, u8), Polynomial>,
}

impl PolyForm {
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        check_dims(n, k)?;
        Ok(PolyForm { n, k, center: vec![0.0; n], bump: None, terms: BTreeMap::new() })
    }

    /// `Σ P_i(x) dx_{I_i}` with zero-based multi-indices.
    pub fn from_terms(n: usize, k: usize, terms: Vec<(Vec<usize>, Polynomial)>) -> Result<Self> {
        let mut out = Self::zero(n, k)?;
        for (indices, p) in terms {
            let idx = MultiIndex::from_indices(&indices)?;
            if idx.grade() != k {
                return Err(Error::GradeMismatch { expected: k, found: idx.grade() });
            }
            if !idx.fits(n) || p.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.dim() });
            }
            out.add_term(idx, 0, 1.0, &p);
        }
        Ok(out)
    }

    /// The constant form `dx_I`.
    pub fn constant(n: usize, indices: &[usize]) -> Result<Self> {
        Self::from_terms(n, indices.len(), vec![(indices.to_vec(), Polynomial::constant(n, 1.0))])
    }

    /// Multiplies the form by `bump`.
    pub fn with_bump(self, bump: Bump) -> Result<Self> {
        if self.bump.is_some() {
            return Err(invalid("form already carries a bump"));
        }
        if bump.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: bump.dim() });
        }
        let shift: Vec<f64> = bump.center.iter().zip(&self.center).map(|(c, o)| c - o).collect();
        let terms = self.terms.into_iter().map(|(key, p)| (key, p.translate(&shift))).collect();
        Ok(PolyForm { n: self.n, k: self.k, center: bump.center.clone(), bump: Some(bump), terms })
    }

    /// Attaches `bump` reading the stored polynomials as functions of
    /// `x - bump.center` (no re-expansion).
    pub fn with_centered_bump(self, bump: Bump) -> Result<Self> {
        if self.bump.is_some() {
            return Err(invalid("form already carries a bump"));
        }
        if bump.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: bump.dim() });
        }
        Ok(PolyForm { center: bump.center.clone(), bump: Some(bump), ..self })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.k
    }

    pub fn bump(&self) -> Option<&Bump> {
        self.bump.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored coefficient entries (after exact cancellation).
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Iterates the stored `(I, bump order, polynomial in y)` entries.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, usize, &Polynomial)> {
        self.terms.iter().map(|(&(i, j), p)| (i, j as usize, p))
    }

    fn add_term(&mut self, idx: MultiIndex, j: u8, s: f64, p: &Polynomial) {
        let entry = self.terms.entry((idx, j)).or_insert_with(|| Polynomial::zero(self.n));
        entry.add_scaled(s, p);
        if entry.is_zero() {
            self.terms.remove(&(idx, j));
        }
    }

    pub fn scale(mut self, s: f64) -> Self {
        if s == 0.0 {
            self.terms.clear();
        }
        for p in self.terms.values_mut() {
            *p = std::mem::replace(p, Polynomial::zero(self.n)).scale(s);
        }
        self
    }

    /// Sum of two forms sharing the same bump (or both without one).
    pub fn add(&self, other: &PolyForm) -> Result<PolyForm> {
        self.same_shape(other)?;
        if self.bump != other.bump {
            return Err(invalid("forms with different bumps cannot be added"));
        }
        let mut out = self.clone();
        for (&(i, j), p) in &other.terms {
            out.add_term(i, j, 1.0, p);
        }
        Ok(out)
    }

    fn same_shape(&self, other: &PolyForm) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.k != other.k {
            return Err(Error::GradeMismatch { expected: self.k, found: other.k });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<KCovector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        let mut out = vec![0.0; binomial(self.n, self.k)];
        self.eval_into(x, &mut out);
        KCovector::from_coeffs(self.n, self.k, out)
    }

    /// Writes the coefficients at `x` into `out` (length C(n,k)); `x` is not checked.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|c| *c = 0.0);
        let mut y = [0.0; crate::exterior::MAX_DIM];
        let y = &mut y[..self.n];
        for i in 0..self.n {
            y[i] = x[i] - self.center[i];
        }
        let mut profile = [1.0; 8];
        if let Some(b) = &self.bump {
            let s: f64 = y.iter().map(|v| v * v).sum();
            if s >= b.r_out * b.r_out {
                return;
            }
            for (j, q) in profile.iter_mut().enumerate() {
                *q = b.profile(s, j);
            }
        }
        for (&(idx, j), p) in &self.terms {
            let q = if self.bump.is_some() { profile.get(j as usize).copied().unwrap_or(0.0) } else { 1.0 };
            if q == 0.0 {
                continue;
            }
            out[rank(self.n, idx)] += q * p.eval(y);
        }
    }

    /// Exterior derivative in closed form.
    pub fn ext_d(&self) -> Result<PolyForm> {
        if self.k >= self.n {
            return Err(Error::GradeOverflow { grade: self.k + 1, dim: self.n });
        }
        let mut out = PolyForm {
            n: self.n,
            k: self.k + 1,
            center: self.center.clone(),
            bump: self.bump.clone(),
            terms: BTreeMap::new(),
        };
        for (&(idx, j), p) in &self.terms {
            for i in (0..self.n).filter(|&i| !idx.contains(i)) {
                let single = MultiIndex::single(i);
                let sign = wedge_sign(single, idx);
                let target = single.union(idx);
                let dp = p.derivative(i);
                if !dp.is_zero() {
                    out.add_term(target, j, sign, &dp);
                }
                if self.bump.is_some() {
                    // d q^{(j)}(|y|²) = q^{(j+1)} · 2 y_i dy_i
                    let yp = Polynomial::variable(self.n, i).mul(p);
                    out.add_term(target, j + 1, 2.0 * sign, &yp);
                }
            }
        }
        Ok(out)
    }

    /// Wedge product; at most one factor may carry a bump.
    pub fn wedge(&self, other: &PolyForm) -> Result<PolyForm> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let k = self.k + other.k;
        if k > self.n {
            return Err(Error::GradeOverflow { grade: k, dim: self.n });
        }
        let (bump, center) = match (&self.bump, &other.bump) {
            (Some(_), Some(_)) => return Err(invalid("wedge of two bump-carrying forms is not representable")),
            (Some(b), None) | (None, Some(b)) => (Some(b.clone()), b.center.clone()),
            (None, None) => (None, self.center.clone()),
        };
        let recenter = |f: &PolyForm| -> Vec<((MultiIndex, u8), Polynomial)> {
            let shift: Vec<f64> = center.iter().zip(&f.center).map(|(c, o)| c - o).collect();
            f.terms.iter().map(|(key, p)| (*key, p.translate(&shift))).collect()
        };
        let a = recenter(self);
        let b = recenter(other);
        let mut out = PolyForm { n: self.n, k, center, bump, terms: BTreeMap::new() };
        for ((ia, ja), pa) in &a {
            for ((ib, jb), pb) in &b {
                if !ia.is_disjoint(*ib) {
                    continue;
                }
                out.add_term(ia.union(*ib), ja + jb, wedge_sign(*ia, *ib), &pa.mul(pb));
            }
        }
        Ok(out)
    }

    /// Compact support ball `(center, radius)` if a bump is attached.
    pub fn support(&self) -> Option<(&[f64], f64)> {
        self.bump.as_ref().map(|b| (b.center.as_slice(), b.r_out))
    }
}

impl FormField for PolyForm {
    fn dim(&self) -> usize {
        self.n
    }

    fn grade(&self) -> usize {
        self.k
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        PolyForm::eval_into(self, x, out)
    }
}
