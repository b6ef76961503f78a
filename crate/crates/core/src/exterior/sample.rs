//! Seeded random elements and subspace helpers for property checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_dims, push_linear, span_of, wedge_columns, Alternating, KCovector, KVector, LinearMap};
use crate::error::{invalid, Result};
use crate::numeric::binomial;

/// Gaussian coefficients on every basis element.
pub fn random_alternating<K, R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<Alternating<K>> {
    check_dims(n, k)?;
    let coeffs = (0..binomial(n, k)).map(|_| rng.sample(StandardNormal)).collect();
    Alternating::from_coeffs(n, k, coeffs)
}

/// `v_1 ∧ … ∧ v_k` for Gaussian vectors `v_i`.
pub fn random_simple<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<KVector> {
    check_dims(n, k)?;
    let frame = DMatrix::from_fn(n, k, |_, _| rng.sample(StandardNormal));
    Ok(wedge_columns(&frame))
}

/// Orthonormal columns spanning the orthogonal complement of the column space
/// of an orthonormal `frame`.
///
/// Gram–Schmidt on the standard basis, taking the candidate with the largest
/// residual each round. (An SVD of the projector `I - F Fᵀ` is unreliable
/// here: nalgebra's SVD with singular vectors misreports rank-deficient
/// symmetric input.)
pub fn orthogonal_complement(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let n = frame.nrows();
    let mut basis: Vec<DVector<f64>> = frame.column_iter().map(|c| c.into_owned()).collect();
    let mut out = Vec::new();
    for _ in 0..n.saturating_sub(frame.ncols()) {
        let residual = |i: usize, basis: &[DVector<f64>]| {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            for _ in 0..2 {
                for q in basis {
                    let c = q.dot(&v);
                    v.axpy(-c, q, 1.0);
                }
            }
            v
        };
        let best = (0..n)
            .map(|i| residual(i, &basis))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("n > 0");
        let q = best.normalize();
        basis.push(q.clone());
        out.push(q);
    }
    if out.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&out)
}

/// A Gaussian element of `Λ_k W`, `W` the column space of the orthonormal `frame`.
pub fn random_in_subspace<K, R: Rng + ?Sized>(rng: &mut R, frame: &DMatrix<f64>, k: usize) -> Result<Alternating<K>> {
    let m = frame.ncols();
    if k > m {
        return Err(invalid(format!("grade {k} exceeds subspace dimension {m}")));
    }
    let inner: KVector = random_alternating(rng, m, k)?;
    let map = LinearMap::new(frame.clone())?;
    Ok(push_linear(&map, &inner)?.dual())
}

/// Orthonormal columns spanning a random `m`-dimensional subspace of R^n.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

/// `τ, σ, α, β` with `α` built on the orthogonal complement of `span σ`, so
/// that `⟨τ∧σ, α∧β⟩ = ⟨τ,α⟩⟨σ,β⟩`. Total grade is at most 3; needs `n ≥ 2`.
#[derive(Clone, Debug)]
pub struct SplitInstance {
    pub tau: KVector,
    pub sigma: KVector,
    pub alpha: KCovector,
    pub beta: KCovector,
}

impl SplitInstance {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("split instances need n >= 2"));
        }
        let q = rng.gen_range(1..=2.min(n - 1));
        let s = rng.gen_range(q..n);
        let p = rng.gen_range(1..=(3 - q).min(n - s));
        let w = random_frame(rng, n, s);
        let sigma = random_in_subspace(rng, &w, q)?;
        let alpha = random_in_subspace(rng, &orthogonal_complement(&w), p)?;
        Ok(SplitInstance { tau: random_alternating(rng, n, p)?, sigma, alpha, beta: random_alternating(rng, n, q)? })
    }
}

/// `τ, σ, α` with `α` simple and `τ` built on the orthogonal complement of
/// `span α`, so that `⟨τ∧σ, α⟩ = 0`. Grade of `α` is at most 3; needs `n ≥ 2`.
#[derive(Clone, Debug)]
pub struct AnnihilatedInstance {
    pub tau: KVector,
    pub sigma: KVector,
    pub alpha: KCovector,
}

impl AnnihilatedInstance {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("annihilated instances need n >= 2"));
        }
        let a = rng.gen_range(1..=3.min(n - 1));
        let p = rng.gen_range(1..=a.min(n - a));
        let alpha: KCovector = random_simple(rng, n, a)?.dual();
        let tau = random_in_subspace(rng, &orthogonal_complement(&span_of(&alpha)?), p)?;
        Ok(AnnihilatedInstance { tau, sigma: random_alternating(rng, n, a - p)?, alpha })
    }
}
