//! The k = 0 case: signed particle measures transported by a flow, the
//! distributional continuity residual and a finite-volume oracle.

mod grid;
mod particles;
mod residual;

pub use grid::{dual_distance, fv_oracle, GridHeader, GridMeasure};
pub use particles::{push_measure, Cloud, MeasureFamily, ParticleMeasure};
pub use residual::{
    continuity_residual, continuity_residual_with, directional_derivative_defect, flowed_test_residual, flowed_test_residuals, flowed_test_value,
    measure_constancy, pulled_back_measure_pairings, pulled_back_measures,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::VectorField;
    use crate::forms::{form_panel, tensor_form, Bump, PolyForm, Polynomial, TimeForm, TimeTest};
    use crate::numeric::uniform_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cloud(seed: u64, count: usize) -> ParticleMeasure {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..count).map(|_| vec![rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)]).collect();
        let ws: Vec<f64> = (0..count).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ParticleMeasure::new(2, &pts, &ws).unwrap()
    }

    fn bump_fn(center: [f64; 2], r: f64) -> PolyForm {
        PolyForm::from_terms(2, 0, vec![(vec![], Polynomial::constant(2, 1.0))]).unwrap().with_bump(Bump::new(center.to_vec(), 0.0, r).unwrap()).unwrap()
    }

    fn rotation() -> VectorField {
        VectorField::rotation(2, 1.0, [0, 1], 1.5).unwrap()
    }

    #[test]
    fn push_examples() {
        let mu = cloud(1, 20);
        let zero = VectorField::zero(2).unwrap();
        assert_eq!(push_measure(&mu, &zero, 0.7, 1e-10).unwrap(), mu);

        let p = ParticleMeasure::new(2, &[vec![0.3, 0.4]], &[2.5]).unwrap();
        let half_turn = VectorField::rotation(2, PI, [0, 1], 1.0).unwrap();
        let q = push_measure(&p, &half_turn, 1.0, 1e-12).unwrap();
        let (x, w) = q.particles().next().unwrap();
        assert!((x[0] + 0.3).abs() < 1e-9 && (x[1] + 0.4).abs() < 1e-9);
        assert_eq!(w, 2.5);

        let moved = push_measure(&mu, &VectorField::shear(2, 2.0, 1, 0, 1.0).unwrap(), 0.9, 1e-10).unwrap();
        assert_eq!(moved.total_variation(), mu.total_variation());
    }

    #[test]
    fn continuity_residual_examples() {
        let grid = uniform_grid(0.0, 1.0, 100);
        let alpha = TimeTest::bump(0.2, 0.8, 0.0).unwrap();
        let beta = bump_fn([0.2, 0.1], 0.7);
        let psi = tensor_form(TimeForm::Function(alpha.clone()), beta.clone()).unwrap();
        let mu = cloud(2, 50);

        let zero = VectorField::zero(2).unwrap();
        let still = MeasureFamily::frozen(grid.clone(), mu.clone()).unwrap();
        assert!(continuity_residual(&still, &zero, &psi).unwrap().abs() <= 1e-12);

        let b = rotation();
        let fam = MeasureFamily::pushforward(&mu, &b, &grid, 1e-10).unwrap();
        let tilted = tensor_form(TimeForm::Function(TimeTest::bump(0.2, 0.8, 0.4).unwrap()), beta.clone()).unwrap();
        let r = continuity_residual(&fam, &b, &tilted).unwrap();
        assert!(r.abs() <= 1e-5, "{r}");

        let single = ParticleMeasure::new(2, &[vec![0.5, 0.1]], &[1.0]).unwrap();
        let frozen = MeasureFamily::frozen(grid.clone(), single).unwrap();
        let off = tensor_form(TimeForm::Function(alpha), bump_fn([0.3, 0.3], 0.6)).unwrap();
        assert!(continuity_residual(&frozen, &b, &off).unwrap().abs() >= 1e-2);
    }

    #[test]
    fn flowed_test_function_examples() {
        let grid = uniform_grid(0.0, 1.0, 100);
        let alpha = TimeTest::bump(0.2, 0.8, 0.3).unwrap();
        let beta = bump_fn([0.1, 0.0], 0.8);
        let mu = cloud(3, 40);
        let zero = VectorField::zero(2).unwrap();
        let still = MeasureFamily::frozen(grid.clone(), mu.clone()).unwrap();
        let even = TimeTest::bump(0.2, 0.8, 0.0).unwrap();
        let r0 = flowed_test_residual(&still, &zero, &even, &beta, 0.0, 1e-10).unwrap();
        assert!((r0 - even.integral_of_derivative() * mu.pair(&beta).unwrap()).abs() < 1e-14);

        let b = rotation();
        let fam = MeasureFamily::pushforward(&mu, &b, &grid, 1e-10).unwrap();
        // A symmetric profile keeps the quadrature of alpha' itself near zero.
        let r = flowed_test_residual(&fam, &b, &even, &beta, 0.0, 1e-10).unwrap();
        assert!(r.abs() <= 1e-6, "{r}");
        assert!(measure_constancy(&fam, &b, std::slice::from_ref(&beta), 1e-10).unwrap() <= 1e-6);

        for (t, x) in [(0.4, [0.2, 0.3]), (0.5, [-0.1, 0.2]), (0.65, [0.3, -0.2])] {
            let defect = directional_derivative_defect(&b, &alpha, &beta, t, &x, 1e-4, 1e-12).unwrap();
            assert!(defect <= 1e-4, "{defect}");
        }
    }

    #[test]
    fn mollified_test_functions_converge() {
        let grid = uniform_grid(0.0, 1.0, 20);
        let b = VectorField::kink_shear(2, 1.0, 1, 0, 1.0).unwrap();
        let mu = cloud(4, 30);
        let fam = MeasureFamily::pushforward(&mu, &b, &grid, 1e-10).unwrap();
        let alpha = TimeTest::bump(0.2, 0.8, 0.3).unwrap();
        let beta = bump_fn([0.2, 0.0], 0.9);
        let exact = flowed_test_residual(&fam, &b, &alpha, &beta, 0.0, 1e-10).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let r = flowed_test_residual(&fam, &b, &alpha, &beta, eps, 1e-10).unwrap();
            let gap = (r - exact).abs();
            assert!(gap < prev, "eps {eps}: {gap} !< {prev}");
            prev = gap;
        }
        assert!(flowed_test_residual(&fam, &b, &alpha, &beta, -0.1, 1e-10).is_err());
    }

    #[test]
    fn oracle_examples() {
        let blob = Bump::new(vec![0.0, 0.0], 0.0, 0.4).unwrap();
        let g = GridMeasure::from_density(vec![-1.0, -1.0], 1.0 / 32.0, vec![64, 64], |x| blob.value(x)).unwrap();
        let zero = VectorField::zero(2).unwrap();
        assert_eq!(fv_oracle(&g, &zero, 0.5, 0.5).unwrap(), g);
        assert!(fv_oracle(&g, &zero, 0.5, 0.6).is_err());

        let c = VectorField::constant(vec![0.25, 0.0]).unwrap();
        let moved = fv_oracle(&g, &c, 1.0, 0.5).unwrap();
        let shifted = Bump::new(vec![0.25, 0.0], 0.0, 0.4).unwrap();
        let want = GridMeasure::from_density(vec![-1.0, -1.0], 1.0 / 32.0, vec![64, 64], |x| shifted.value(x)).unwrap();
        let test = bump_fn([0.25, 0.0], 0.5);
        let err = (moved.pair(&test).unwrap() - want.pair(&test).unwrap()).abs();
        assert!(err < 0.05 * want.pair(&test).unwrap(), "{err}");

        // 10³ steps at the CFL limit
        let spin = VectorField::rotation(2, 1.0, [0, 1], 1.5).unwrap();
        let long = fv_oracle(&g, &spin, 1000.0 * 0.5 / 32.0 / 2.0, 0.5).unwrap();
        assert!((long.total_mass() - g.total_mass()).abs() <= 1e-13);
    }

    /// `f - g` for two functions with different cutoffs.
    struct Difference(PolyForm, PolyForm);

    impl crate::forms::FormField for Difference {
        fn dim(&self) -> usize {
            2
        }
        fn grade(&self) -> usize {
            0
        }
        fn eval_into(&self, x: &[f64], out: &mut [f64]) {
            let mut g = [0.0];
            self.0.eval_into(x, out);
            self.1.eval_into(x, &mut g);
            out[0] -= g[0];
        }
    }

    #[test]
    fn dual_distance_examples() {
        let mu = ParticleMeasure::new(2, &[vec![-0.5, 0.0]], &[1.0]).unwrap();
        let empty = GridMeasure::zeros(vec![-1.0, -1.0], 0.5, vec![4, 4]).unwrap();
        let zero_mu = ParticleMeasure::empty(2).unwrap();
        assert_eq!(dual_distance(&zero_mu, &empty, &[bump_fn([0.0, 0.0], 0.5)]).unwrap(), 0.0);
        // unit mass in the cell centered at (0.25, 0.25)
        let nu = GridMeasure::from_density(vec![-1.0, -1.0], 0.5, vec![4, 4], |x| if x[0] > 0.0 && x[0] < 0.5 && x[1] > 0.0 && x[1] < 0.5 { 4.0 } else { 0.0 }).unwrap();
        assert!((nu.total_mass() - 1.0).abs() < 1e-14);
        let separating = [Difference(bump_fn([-0.5, 0.0], 0.3), bump_fn([0.25, 0.25], 0.2))];
        assert!((dual_distance(&mu, &nu, &separating).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn particle_and_grid_io() {
        let mu = cloud(5, 7);
        let back = ParticleMeasure::from_json(&mu.to_json().unwrap()).unwrap();
        assert_eq!(back, mu);
        let blob = Bump::new(vec![0.0, 0.0], 0.0, 0.4).unwrap();
        let g = GridMeasure::from_density(vec![-1.0, -1.0], 0.125, vec![16, 16], |x| blob.value(x)).unwrap();
        let stem = std::env::temp_dir().join(format!("gte-grid-{}", std::process::id()));
        g.write(&stem).unwrap();
        let h = GridMeasure::read(&stem).unwrap();
        for (a, b) in h.masses().iter().zip(g.masses()) {
            assert!((a - b).abs() <= 1e-16);
        }
        std::fs::remove_file(stem.with_extension("bin")).unwrap();
        std::fs::remove_file(stem.with_extension("json")).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn residual_is_linear(seed in 0u64..1000) {
            let grid = uniform_grid(0.0, 1.0, 20);
            let b = rotation();
            let f1 = MeasureFamily::pushforward(&cloud(seed, 5), &b, &grid, 1e-8).unwrap();
            let f2 = MeasureFamily::frozen(grid.clone(), cloud(seed + 1, 4)).unwrap();
            let psi = tensor_form(TimeForm::Function(TimeTest::bump(0.2, 0.8, 0.1).unwrap()), form_panel(seed, 2, 0, 2, 1, Some(Bump::new(vec![0.0, 0.0], 0.3, 1.0).unwrap())).unwrap().pop().unwrap()).unwrap();
            let whole = continuity_residual(&f1.sum(&f2).unwrap(), &b, &psi).unwrap();
            let parts = continuity_residual(&f1, &b, &psi).unwrap() + continuity_residual(&f2, &b, &psi).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole.abs()));
        }
    }
}
