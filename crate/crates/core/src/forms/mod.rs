//! Test forms: polynomial forms with optional bump cutoff, time profiles and
//! space-time tensor forms.

mod bump;
mod library;
mod poly_form;
mod polynomial;
mod spacetime;
mod time;

pub use bump::Bump;
pub use library::{form_panel, random_form, random_polynomial, time_panel, FormSpec};
pub use poly_form::PolyForm;
pub use polynomial::Polynomial;
pub use spacetime::{tensor_form, SpaceTimeForm, TimeForm};
pub use time::TimeTest;

use crate::error::{invalid, Error, Result};
use crate::exterior::{comass, ComassOptions, KCovector};

/// Anything that evaluates to a k-covector field on R^n.
pub trait FormField: Sync {
    fn dim(&self) -> usize;
    fn grade(&self) -> usize;
    /// Writes the C(n,k) coefficients at `x` into `out`.
    fn eval_into(&self, x: &[f64], out: &mut [f64]);
}

/// Pointwise evaluation with dimension checking.
pub fn eval_form(w: &PolyForm, x: &[f64]) -> Result<KCovector> {
    w.eval(x)
}

pub fn ext_d(w: &PolyForm) -> Result<PolyForm> {
    w.ext_d()
}

/// Max of the pointwise comass over a uniform grid with `per_axis` samples per
/// coordinate. The box defaults to the bounding cube of the bump support.
pub fn comass_sup(w: &PolyForm, per_axis: usize, bbox: Option<(&[f64], &[f64])>, opts: &ComassOptions) -> Result<f64> {
    let n = w.dim();
    let (lo, hi): (Vec<f64>, Vec<f64>) = match (bbox, w.support()) {
        (Some((lo, hi)), _) => (lo.to_vec(), hi.to_vec()),
        (None, Some((c, r))) => (c.iter().map(|v| v - r).collect(), c.iter().map(|v| v + r).collect()),
        (None, None) => return Err(invalid("form without a bump needs an explicit sampling box")),
    };
    if lo.len() != n || hi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: lo.len().min(hi.len()) });
    }
    if per_axis < 2 {
        return Err(invalid("need at least 2 samples per axis"));
    }
    let total = per_axis.pow(n as u32);
    let mut best = 0.0f64;
    let mut x = vec![0.0; n];
    for flat in 0..total {
        let mut r = flat;
        for i in 0..n {
            let m = r % per_axis;
            r /= per_axis;
            x[i] = lo[i] + (hi[i] - lo[i]) * m as f64 / (per_axis - 1) as f64;
        }
        let a = w.eval(&x)?;
        if !a.is_zero() {
            best = best.max(comass(&a, opts).value);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::KVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn x1(n: usize) -> Polynomial {
        Polynomial::variable(n, 0)
    }

    #[test]
    fn eval_examples() {
        let w = PolyForm::from_terms(2, 1, vec![(vec![1], x1(2))]).unwrap();
        let v = eval_form(&w, &[3.0, 0.0]).unwrap();
        assert_eq!(v.coeffs(), &[0.0, 3.0]);

        let b = PolyForm::constant(2, &[0]).unwrap().with_bump(Bump::new(vec![0.0, 0.0], 0.5, 1.0).unwrap()).unwrap();
        assert!(eval_form(&b, &[1.0, 0.5]).unwrap().is_zero());

        let c = PolyForm::constant(2, &[0, 1]).unwrap();
        assert_eq!(eval_form(&c, &[7.0, -3.0]).unwrap().coeffs(), &[1.0]);
        assert!(eval_form(&c, &[1.0]).is_err());
    }

    #[test]
    fn ext_d_examples() {
        let w = PolyForm::from_terms(2, 1, vec![(vec![1], x1(2))]).unwrap();
        assert_eq!(ext_d(&w).unwrap(), PolyForm::constant(2, &[0, 1]).unwrap());

        let f = random_form(5, 3, 0, 3, None).unwrap();
        assert!(ext_d(&ext_d(&f).unwrap()).unwrap().is_zero());

        assert!(matches!(ext_d(&PolyForm::constant(2, &[0, 1]).unwrap()), Err(Error::GradeOverflow { .. })));
    }

    #[test]
    fn ext_d_of_bump_matches_finite_differences() {
        let bump = Bump::new(vec![0.1, -0.2], 0.3, 1.2).unwrap();
        let w = PolyForm::constant(2, &[0]).unwrap().with_bump(bump).unwrap();
        let dw = ext_d(&w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..20 {
            let x = [rng.gen_range(-1.2..1.4), rng.gen_range(-1.4..1.2)];
            // d(f dx1) = -∂_2 f dx1∧dx2
            let f = |p: [f64; 2]| w.eval(&p).unwrap().coeffs()[0];
            let fd = -(f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h);
            let exact = dw.eval(&x).unwrap().coeffs()[0];
            assert!((fd - exact).abs() <= 1e-6, "{fd} vs {exact} at {x:?}");
        }
    }

    #[test]
    fn d_squared_vanishes_on_library_forms() {
        let bump = Bump::new(vec![0.25, 0.0, -0.5], 0.5, 1.5).unwrap();
        for seed in 0..20 {
            for k in 0..2 {
                let w = random_form(seed, 3, k, 3, Some(bump.clone())).unwrap();
                let dd = w.ext_d().unwrap().ext_d().unwrap();
                assert!(dd.is_zero(), "seed {seed} k {k}: {} terms left", dd.term_count());
            }
        }
    }

    #[test]
    fn tensor_form_examples() {
        let psi = TimeTest::bump(0.25, 0.75, 0.2).unwrap();
        let e1 = PolyForm::constant(2, &[0]).unwrap();
        let w = tensor_form(TimeForm::Function(psi.clone()), e1).unwrap();
        let v = w.eval(&[0.4, 1.0, 2.0]).unwrap();
        // space-time basis of 1-covectors: dt, dx1, dx2
        assert_eq!(v.coeffs(), &[0.0, psi.eval(0.4), 0.0]);

        // dα = 0 for α = ψ dt with constant β: d(t*α ∧ p*β) = -t*α ∧ p*dβ = 0
        let beta = PolyForm::constant(2, &[1]).unwrap();
        let w = tensor_form(TimeForm::Differential(psi.clone()), beta.clone()).unwrap();
        let dw = w.ext_d().unwrap();
        assert!(dw.eval(&[0.5, 0.3, 0.1]).unwrap().is_zero());

        // with a non-closed β the derivative is -ψ dt ∧ dβ
        let beta = PolyForm::from_terms(2, 1, vec![(vec![1], x1(2))]).unwrap();
        let w = tensor_form(TimeForm::Differential(psi.clone()), beta).unwrap();
        let dw = w.ext_d().unwrap();
        let v = dw.eval(&[0.5, 0.3, 0.1]).unwrap();
        assert_eq!(v.coeffs(), &[-psi.eval(0.5)]);
    }

    #[test]
    fn tensor_pairing_with_spacelike_vectors() {
        // <(1,b)∧σ, t*ψ ∧ p*β> = ψ(t) <b∧σ, β> for space-like σ
        let psi = TimeTest::bump(0.25, 0.75, -0.3).unwrap();
        let beta = random_form(2, 2, 2, 2, None).unwrap();
        let w = tensor_form(TimeForm::Function(psi.clone()), beta.clone()).unwrap();
        let (t, x) = (0.6, [0.3, -0.4]);
        let b = [0.7, -1.1];
        let sigma = KVector::from_slice(&[0.4, 0.9]).unwrap();
        let lift = KVector::from_slice(&[1.0, b[0], b[1]]).unwrap();
        let lhs = crate::exterior::pair(
            &lift.wedge(&sigma.embed(1).unwrap()).unwrap(),
            &w.eval(&[t, x[0], x[1]]).unwrap(),
        )
        .unwrap();
        let bv = KVector::from_slice(&b).unwrap();
        let rhs = psi.eval(t) * crate::exterior::pair(&bv.wedge(&sigma).unwrap(), &beta.eval(&x).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn comass_sup_examples() {
        let opts = ComassOptions { restarts: 4, ..Default::default() };
        let c = PolyForm::constant(2, &[0, 1]).unwrap();
        let bbox = (&[-1.0, -1.0][..], &[1.0, 1.0][..]);
        assert_eq!(comass_sup(&c, 5, Some(bbox), &opts).unwrap(), 1.0);
        assert_eq!(comass_sup(&c.clone().scale(2.0), 5, Some(bbox), &opts).unwrap(), 2.0);
        assert!(comass_sup(&c, 5, None, &opts).is_err());

        let bump = Bump::new(vec![0.0, 0.0], 0.25, 1.0).unwrap();
        let w = PolyForm::from_terms(2, 1, vec![(vec![1], x1(2))]).unwrap().with_bump(bump.clone()).unwrap();
        let got = comass_sup(&w, 41, None, &opts).unwrap();
        let mut oracle = 0.0f64;
        for i in 0..41 {
            for j in 0..41 {
                let p = [-1.0 + 2.0 * i as f64 / 40.0, -1.0 + 2.0 * j as f64 / 40.0];
                oracle = oracle.max((p[0] * bump.value(&p)).abs());
            }
        }
        assert!((got - oracle).abs() < 1e-14);
    }

    fn arb_form(n: usize, k: usize) -> impl Strategy<Value = PolyForm> {
        (any::<u64>(), 0..=3usize).prop_map(move |(seed, deg)| random_form(seed, n, k, deg, None).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn leibniz_rule(a in arb_form(3, 1), b in arb_form(3, 1), seed in any::<u64>()) {
            let bump = Bump::new(vec![0.1, 0.2, -0.1], 0.4, 1.3).unwrap();
            let a = a.with_bump(bump).unwrap();
            let lhs = a.wedge(&b).unwrap().ext_d().unwrap();
            let r1 = a.ext_d().unwrap().wedge(&b).unwrap();
            let r2 = a.wedge(&b.ext_d().unwrap()).unwrap().scale(-1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..4 {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.2..1.2)).collect();
                let v = KVector::from_coeffs(3, 3, vec![rng.gen_range(-1.0..1.0)]).unwrap();
                let l = crate::exterior::pair(&v, &lhs.eval(&x).unwrap()).unwrap();
                let r = crate::exterior::pair(&v, &r1.eval(&x).unwrap()).unwrap()
                    + crate::exterior::pair(&v, &r2.eval(&x).unwrap()).unwrap();
                prop_assert!((l - r).abs() <= 1e-10 * (1.0 + l.abs()), "{} vs {}", l, r);
            }
        }

        #[test]
        fn d_squared_zero_exact(seed in any::<u64>(), k in 0..3usize, deg in 0..=3usize) {
            let bump = Bump::new(vec![0.5, -0.25, 0.0, 0.125], 0.5, 2.0).unwrap();
            let w = random_form(seed, 4, k, deg, Some(bump)).unwrap();
            prop_assert!(w.ext_d().unwrap().ext_d().unwrap().is_zero());
        }

        #[test]
        fn spacetime_d_squared(seed in any::<u64>(), tilt in -0.5..0.5f64) {
            let psi = TimeTest::bump(0.25, 0.5, tilt).unwrap();
            let beta = random_form(seed, 2, 0, 3, Some(Bump::new(vec![0.0, 0.0], 0.5, 1.5).unwrap())).unwrap();
            let w = tensor_form(TimeForm::Function(psi), beta).unwrap();
            let dd = w.ext_d().unwrap().ext_d().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..4 {
                let p = [rng.gen_range(0.2..0.55), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
                let v = dd.eval(&p).unwrap();
                prop_assert!(v.norm() <= 1e-10, "{:?}", v);
            }
        }
    }
}
