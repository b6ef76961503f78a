//! Exterior algebra over R^n: k-vectors, k-covectors, wedge products, the
//! duality pairing, linear pushforward/pullback and the mass/comass norms.
//!
//! Coefficients are stored densely on the lexicographically ordered basis
//! `e_I`, `I` a strictly increasing multi-index. The basis is orthonormal for
//! the induced Euclidean inner product, so the pairing of a k-vector with a
//! k-covector is the dot product of their coefficient arrays.

mod basis;
mod norms;
pub mod sample;

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use basis::{basis, check_dims, rank, wedge_sign, MultiIndex, MAX_DIM};
pub use norms::{comass, comass_ascent, mass_cutting_plane, mass_norm, ComassEstimate, ComassOptions, MassEstimate, MassOptions};

use crate::error::{invalid, Error, Result};
use crate::numeric::binomial;

/// Marker for k-vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vector;
/// Marker for k-covectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Covector;

/// A homogeneous element of the exterior algebra (of vectors or covectors).
#[derive(Serialize, Deserialize)]
#[serde(try_from = "RawAlternating", into = "RawAlternating", bound = "")]
pub struct Alternating<K> {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
    _kind: PhantomData<K>,
}

pub type KVector = Alternating<Vector>;
pub type KCovector = Alternating<Covector>;

#[derive(Serialize, Deserialize)]
struct RawAlternating {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl<K> Clone for Alternating<K> {
    fn clone(&self) -> Self {
        Alternating { n: self.n, k: self.k, coeffs: self.coeffs.clone(), _kind: PhantomData }
    }
}

impl<K> PartialEq for Alternating<K> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.coeffs == other.coeffs
    }
}

impl<K> TryFrom<RawAlternating> for Alternating<K> {
    type Error = Error;

    fn try_from(raw: RawAlternating) -> Result<Self> {
        Alternating::from_coeffs(raw.n, raw.k, raw.coeffs)
    }
}

impl<K> From<Alternating<K>> for RawAlternating {
    fn from(a: Alternating<K>) -> Self {
        RawAlternating { n: a.n, k: a.k, coeffs: a.coeffs }
    }
}

impl<K> fmt::Debug for Alternating<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[n={} k={}]", self.n, self.k)?;
        let mut first = true;
        for (idx, c) in self.terms() {
            if c != 0.0 {
                write!(f, "{}{c}·e{idx}", if first { " " } else { " + " })?;
                first = false;
            }
        }
        if first {
            write!(f, " 0")?;
        }
        Ok(())
    }
}

impl<K> Alternating<K> {
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        check_dims(n, k)?;
        Ok(Self::zero_unchecked(n, k))
    }

    pub(crate) fn zero_unchecked(n: usize, k: usize) -> Self {
        Alternating { n, k, coeffs: vec![0.0; binomial(n, k)], _kind: PhantomData }
    }

    pub fn from_coeffs(n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dims(n, k)?;
        let expected = binomial(n, k);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: coeffs.len() });
        }
        Ok(Alternating { n, k, coeffs, _kind: PhantomData })
    }

    /// The basis element `e_I` for the (zero-based) multi-index `indices`.
    pub fn basis_element(n: usize, indices: &[usize]) -> Result<Self> {
        let idx = MultiIndex::from_indices(indices)?;
        if !idx.fits(n) {
            return Err(Error::DimensionMismatch { expected: n, found: idx.indices().last().unwrap_or(0) + 1 });
        }
        let mut out = Self::zero(n, idx.grade())?;
        out.coeffs[rank(n, idx)] = 1.0;
        Ok(out)
    }

    pub fn scalar(n: usize, value: f64) -> Result<Self> {
        Self::from_coeffs(n, 0, vec![value])
    }

    /// A grade-one element with the given components.
    pub fn from_slice(components: &[f64]) -> Result<Self> {
        Self::from_coeffs(components.len(), 1, components.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, idx: MultiIndex) -> f64 {
        if idx.grade() != self.k || !idx.fits(self.n) {
            return 0.0;
        }
        self.coeffs[rank(self.n, idx)]
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        basis(self.n, self.k).iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Euclidean norm of the coefficient array.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.k != other.k {
            return Err(Error::GradeMismatch { expected: self.k, found: other.k });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Alternating { n: self.n, k: self.k, coeffs, _kind: PhantomData })
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.same_shape(other)?;
        self.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    /// Exterior product. Grades add; the result is rejected if it would exceed `n`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let k = self.k + other.k;
        if k > self.n {
            return Err(Error::GradeOverflow { grade: k, dim: self.n });
        }
        let mut out = Self::zero_unchecked(self.n, k);
        wedge_into(self.n, self.k, &self.coeffs, other.k, &other.coeffs, &mut out.coeffs);
        Ok(out)
    }

    /// Reinterprets the coefficients in the dual basis.
    pub fn dual<L>(&self) -> Alternating<L> {
        Alternating { n: self.n, k: self.k, coeffs: self.coeffs.clone(), _kind: PhantomData }
    }

    /// Embeds into R^{n+offset} by shifting every index up by `offset`
    /// (`offset = 1` maps space into space-time with time as coordinate 0).
    pub fn embed(&self, offset: usize) -> Result<Self> {
        let m = self.n + offset;
        let mut out = Self::zero(m, self.k)?;
        for (idx, c) in self.terms() {
            out.coeffs[rank(m, idx.shifted(offset))] = c;
        }
        Ok(out)
    }
}

/// Raw wedge of coefficient arrays, accumulated into `out` (grade `ka + kb`).
pub(crate) fn wedge_into(n: usize, ka: usize, a: &[f64], kb: usize, b: &[f64], out: &mut [f64]) {
    let ba = basis(n, ka);
    let bb = basis(n, kb);
    for (ia, &ca) in ba.iter().zip(a) {
        if ca == 0.0 {
            continue;
        }
        for (ib, &cb) in bb.iter().zip(b) {
            if cb == 0.0 || !ia.is_disjoint(*ib) {
                continue;
            }
            out[rank(n, ia.union(*ib))] += wedge_sign(*ia, *ib) * ca * cb;
        }
    }
}

impl<K> Add for Alternating<K> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(&rhs).expect("adding alternating elements of different shape")
    }
}

impl<K> Sub for Alternating<K> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_add(&(-rhs)).expect("subtracting alternating elements of different shape")
    }
}

impl<K> Neg for Alternating<K> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<K> Mul<Alternating<K>> for f64 {
    type Output = Alternating<K>;
    fn mul(self, rhs: Alternating<K>) -> Alternating<K> {
        rhs.scale(self)
    }
}

/// Duality pairing `<v, a>`.
pub fn pair(v: &KVector, a: &KCovector) -> Result<f64> {
    if v.n != a.n {
        return Err(Error::DimensionMismatch { expected: v.n, found: a.n });
    }
    if v.k != a.k {
        return Err(Error::GradeMismatch { expected: v.k, found: a.k });
    }
    Ok(v.coeffs.iter().zip(&a.coeffs).map(|(x, y)| x * y).sum())
}

/// Interior product: the covector `c` of grade `k - j` with
/// `<u, c> = <w ∧ u, a>` for every `u`. For a 1-vector `w` this is `a(w, ·)`.
pub fn interior(w: &KVector, a: &KCovector) -> Result<KCovector> {
    if w.n != a.n {
        return Err(Error::DimensionMismatch { expected: a.n, found: w.n });
    }
    if w.k > a.k {
        return Err(Error::GradeMismatch { expected: a.k, found: w.k });
    }
    let n = a.n;
    let mut out = KCovector::zero_unchecked(n, a.k - w.k);
    interior_into(n, w.k, &w.coeffs, a.k, &a.coeffs, &mut out.coeffs);
    Ok(out)
}

pub(crate) fn interior_into(n: usize, kw: usize, w: &[f64], ka: usize, a: &[f64], out: &mut [f64]) {
    let bw = basis(n, kw);
    let bo = basis(n, ka - kw);
    for (iw, &cw) in bw.iter().zip(w) {
        if cw == 0.0 {
            continue;
        }
        for (r, io) in bo.iter().enumerate() {
            if !iw.is_disjoint(*io) {
                continue;
            }
            out[r] += wedge_sign(*iw, *io) * cw * a[rank(n, iw.union(*io))];
        }
    }
}

/// A linear map R^{n_in} → R^{n_out}, stored as an `n_out × n_in` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap(DMatrix<f64>);

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(invalid("linear map has non-finite entries"));
        }
        Ok(LinearMap(matrix))
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn identity(n: usize) -> Self {
        LinearMap(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn input_dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.0.nrows()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.input_dim() != other.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: other.output_dim() });
        }
        Ok(LinearMap(&self.0 * &other.0))
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.0.clone().svd(false, false).singular_values.max()
    }
}

/// `Λ^k S` applied to `v`.
pub fn push_linear(s: &LinearMap, v: &KVector) -> Result<KVector> {
    if v.n != s.input_dim() {
        return Err(Error::DimensionMismatch { expected: s.input_dim(), found: v.n });
    }
    let m = s.output_dim();
    check_dims(m, v.k)?;
    let mut out = KVector::zero_unchecked(m, v.k);
    push_into(s.matrix(), v.n, v.k, &v.coeffs, &mut out.coeffs);
    Ok(out)
}

/// Accumulates `Λ^k S [v]` into `out`, where `s` is given column-major
/// through a nalgebra matrix with `n_in` columns.
pub(crate) fn push_into(s: &DMatrix<f64>, n_in: usize, k: usize, v: &[f64], out: &mut [f64]) {
    let m = s.nrows();
    if k == 0 {
        out[0] += v[0];
        return;
    }
    let cap = (0..=k).map(|g| binomial(m, g)).max().unwrap_or(1);
    let mut acc = vec![0.0; cap];
    let mut next = vec![0.0; cap];
    for (idx, &c) in basis(n_in, k).iter().zip(v) {
        if c == 0.0 {
            continue;
        }
        // wedge of the images of the basis vectors in idx
        let mut grade = 0;
        acc[..1].copy_from_slice(&[1.0]);
        for i in idx.indices() {
            let col: Vec<f64> = s.column(i).iter().copied().collect();
            let len = binomial(m, grade + 1);
            next[..len].iter_mut().for_each(|x| *x = 0.0);
            wedge_into(m, grade, &acc[..binomial(m, grade)], 1, &col, &mut next[..len]);
            std::mem::swap(&mut acc, &mut next);
            grade += 1;
        }
        for (o, a) in out.iter_mut().zip(&acc[..binomial(m, k)]) {
            *o += c * a;
        }
    }
}

/// Pullback `S^* a`, characterised by `<v, S^* a> = <Λ^k S v, a>`.
pub fn pull_linear(s: &LinearMap, a: &KCovector) -> Result<KCovector> {
    if a.n != s.output_dim() {
        return Err(Error::DimensionMismatch { expected: s.output_dim(), found: a.n });
    }
    let n_in = s.input_dim();
    check_dims(n_in, a.k)?;
    let mut out = KCovector::zero_unchecked(n_in, a.k);
    let mut image = vec![0.0; binomial(s.output_dim(), a.k)];
    let mut unit = vec![0.0; binomial(n_in, a.k)];
    for r in 0..unit.len() {
        unit.iter_mut().for_each(|x| *x = 0.0);
        unit[r] = 1.0;
        image.iter_mut().for_each(|x| *x = 0.0);
        push_into(s.matrix(), n_in, a.k, &unit, &mut image);
        out.coeffs[r] = image.iter().zip(&a.coeffs).map(|(x, y)| x * y).sum();
    }
    Ok(out)
}

/// Relative singular-value cut used for numerical rank.
pub const SPAN_RANK_THRESHOLD: f64 = 1e-10;

/// Orthonormal basis (as matrix columns) of the smallest subspace `W` with
/// `v ∈ Λ_k W`. Its dimension equals the grade exactly when `v` is simple.
pub fn span_of<K>(v: &Alternating<K>) -> Result<DMatrix<f64>> {
    if v.is_zero() {
        return Err(Error::ZeroElement);
    }
    let n = v.n;
    if v.k == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    // Column J holds the contraction of v by e^J, for every (k-1)-index J.
    let cols = basis(n, v.k - 1);
    let mut m = DMatrix::zeros(n, cols.len());
    for (c, j) in cols.iter().enumerate() {
        for i in 0..n {
            if j.contains(i) {
                continue;
            }
            let single = MultiIndex::single(i);
            m[(i, c)] = wedge_sign(*j, single) * v.coeffs[rank(n, j.union(single))];
        }
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SPAN_RANK_THRESHOLD * smax)
        .collect();
    let mut out = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    Ok(out)
}

/// The simple k-vector `v_1 ∧ … ∧ v_k` of the columns of `frame`.
pub fn wedge_columns(frame: &DMatrix<f64>) -> KVector {
    let n = frame.nrows();
    let mut acc = KVector::zero_unchecked(n, 0);
    acc.coeffs[0] = 1.0;
    for c in 0..frame.ncols() {
        let col = KVector::from_coeffs(n, 1, frame.column(c).iter().copied().collect())
            .expect("column length matches ambient dimension");
        acc = acc.wedge(&col).expect("frame has at most n columns");
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e(n: usize, idx: &[usize]) -> KVector {
        KVector::basis_element(n, idx).unwrap()
    }

    fn ec(n: usize, idx: &[usize]) -> KCovector {
        KCovector::basis_element(n, idx).unwrap()
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(e(2, &[0]).wedge(&e(2, &[1])).unwrap(), e(2, &[0, 1]));
        assert!(e(2, &[0]).wedge(&e(2, &[0])).unwrap().is_zero());
        let s = e(2, &[0]) + e(2, &[1]);
        assert_eq!(s.wedge(&e(2, &[1])).unwrap(), e(2, &[0, 1]));
        assert_eq!(e(2, &[1]).wedge(&e(2, &[0])).unwrap(), -e(2, &[0, 1]));
    }

    #[test]
    fn wedge_errors() {
        assert!(matches!(
            e(2, &[0, 1]).wedge(&e(2, &[0])),
            Err(Error::GradeOverflow { grade: 3, dim: 2 })
        ));
        assert!(matches!(e(2, &[0]).wedge(&e(3, &[0])), Err(Error::DimensionMismatch { .. })));
        assert!(KVector::zero(17, 1).is_err());
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(&e(4, &[0, 1]), &ec(4, &[0, 1])).unwrap(), 1.0);
        assert_eq!(pair(&e(4, &[0, 1]), &ec(4, &[0, 2])).unwrap(), 0.0);
        let v = 2.0 * e(4, &[0, 1]) + 3.0 * e(4, &[2, 3]);
        assert_eq!(pair(&v, &ec(4, &[2, 3])).unwrap(), 3.0);
        assert!(matches!(pair(&e(4, &[0]), &ec(4, &[0, 1])), Err(Error::GradeMismatch { .. })));
    }

    #[test]
    fn push_examples() {
        let v = e(3, &[0, 2]) + 0.5 * e(3, &[1, 2]);
        assert_eq!(push_linear(&LinearMap::identity(3), &v).unwrap(), v);

        let diag = LinearMap::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(push_linear(&diag, &e(2, &[0, 1])).unwrap(), 6.0 * e(2, &[0, 1]));
        assert_eq!(pull_linear(&diag, &ec(2, &[0, 1])).unwrap(), 6.0 * ec(2, &[0, 1]));

        let th = 0.7f64;
        let rot = LinearMap::from_row_slice(
            3,
            3,
            &[th.cos(), -th.sin(), 0.0, th.sin(), th.cos(), 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let pushed = push_linear(&rot, &e(3, &[0, 1])).unwrap();
        for (a, b) in pushed.coeffs().iter().zip(e(3, &[0, 1]).coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn push_between_dimensions() {
        // R^2 -> R^3, e1 ∧ e2 goes to the wedge of the two columns
        let s = LinearMap::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let out = push_linear(&s, &e(2, &[0, 1])).unwrap();
        let c0 = KVector::from_slice(&[1.0, 0.0, 1.0]).unwrap();
        let c1 = KVector::from_slice(&[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(out, c0.wedge(&c1).unwrap());
        assert!(push_linear(&s, &e(3, &[0])).is_err());
    }

    #[test]
    fn interior_of_basis() {
        // <e2, ι_{e1} e^{12}> = <e1 ∧ e2, e^{12}> = 1
        let c = interior(&e(2, &[0]), &ec(2, &[0, 1])).unwrap();
        assert_eq!(c, ec(2, &[1]));
        let c = interior(&e(2, &[1]), &ec(2, &[0, 1])).unwrap();
        assert_eq!(c, -ec(2, &[0]));
    }

    #[test]
    fn span_examples() {
        let s = span_of(&e(4, &[0, 1])).unwrap();
        assert_eq!(s.ncols(), 2);
        assert_abs_diff_eq!(s.row(2).norm() + s.row(3).norm(), 0.0, epsilon = 1e-14);

        let v = e(4, &[0, 1]) + e(4, &[2, 3]);
        assert_eq!(span_of(&v).unwrap().ncols(), 4);

        let a = e(3, &[0]) + e(3, &[1]);
        let w = a.wedge(&e(3, &[2])).unwrap();
        let s = span_of(&w).unwrap();
        assert_eq!(s.ncols(), 2);
        // e3 and (e1+e2)/√2 lie in the span: projection preserves them.
        let p = &s * s.transpose();
        let e3 = nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let d = nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0]) / 2f64.sqrt();
        assert_abs_diff_eq!((&p * &e3 - &e3).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((&p * &d - &d).norm(), 0.0, epsilon = 1e-12);

        assert!(matches!(span_of(&KVector::zero(3, 2).unwrap()), Err(Error::ZeroElement)));
    }

    #[test]
    fn json_dump_round_trip() {
        let v = 2.0 * e(3, &[0, 2]);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"n":3,"k":2,"coeffs":[0.0,2.0,0.0]}"#);
        let back: KVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<KVector>(r#"{"n":3,"k":2,"coeffs":[1.0]}"#).is_err());
    }
}
