//! Seeded panels of random polynomial test forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exterior::{basis, check_dims};

use super::bump::Bump;
use super::polynomial::Polynomial;
use super::poly_form::PolyForm;
use super::time::TimeTest;

/// Coefficients are drawn on a dyadic grid so that the integer factors
/// produced by differentiation are exact and `d∘d` cancels to zero exactly.
const COEFF_BITS: i32 = 20;

/// Address of a library form in scenario configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub degree: usize,
    #[serde(default)]
    pub bump: Option<Bump>,
}

impl FormSpec {
    pub fn build(&self) -> Result<PolyForm> {
        random_form(self.seed, self.n, self.k, self.degree, self.bump.clone())
    }
}

fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    let scale = 2f64.powi(COEFF_BITS);
    (rng.gen_range(-1.0..=1.0) * scale).round() / scale
}

/// All exponent tuples of total degree at most `degree`, in a fixed order.
fn exponents(n: usize, degree: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; n];
    fn rec(i: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for d in 0..=left {
            cur[i] = d as u8;
            rec(i + 1, left - d, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, degree, &mut cur, &mut out);
    out
}

/// Random polynomial of total degree ≤ `degree` with dyadic coefficients in [-1, 1].
pub fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for e in exponents(n, degree) {
        let c = dyadic(rng);
        p.add_scaled(1.0, &Polynomial::monomial(n, &e, c).expect("exponent length is n"));
    }
    p
}

/// Random k-form with polynomial coefficients of degree ≤ `degree`, optionally
/// multiplied by `bump`. The polynomials are drawn in the coordinates centered
/// at the bump.
pub fn random_form(seed: u64, n: usize, k: usize, degree: usize, bump: Option<Bump>) -> Result<PolyForm> {
    check_dims(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = basis(n, k)
        .iter()
        .map(|idx| (idx.indices().collect::<Vec<_>>(), random_polynomial(&mut rng, n, degree)))
        .collect();
    let form = PolyForm::from_terms(n, k, terms)?;
    match bump {
        Some(b) => form.with_centered_bump(b),
        None => Ok(form),
    }
}

/// `count` forms with consecutive seeds starting at `seed`.
pub fn form_panel(seed: u64, n: usize, k: usize, degree: usize, count: usize, bump: Option<Bump>) -> Result<Vec<PolyForm>> {
    (0..count as u64).map(|i| random_form(seed.wrapping_add(i), n, k, degree, bump.clone())).collect()
}

/// Seeded time profiles with support `[a, b]` and a random tilt in [-0.5, 0.5].
pub fn time_panel(seed: u64, a: f64, b: f64, count: usize) -> Result<Vec<TimeTest>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| TimeTest::bump(a, b, rng.gen_range(-0.5..=0.5))).collect()
}
