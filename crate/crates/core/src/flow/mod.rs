//! Flows of bounded Lipschitz vector fields: trajectories, transported
//! Jacobians and flow-law diagnostics.

mod diagnostics;
mod field;
mod integrate;

pub use diagnostics::{
    flow_invariance_defect, semigroup_defect, spacetime_forward, spacetime_inverse, taylor_defect,
};
pub(crate) use diagnostics::assemble;
pub use field::{FieldSpec, GridField, VectorField};
pub use integrate::{advect, advect_times, advect_with_jacobian, jacobian_action, max_step, FlowResult};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Bump;
    use crate::numeric::loglog_slope;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rotation() -> VectorField {
        VectorField::rotation(2, 1.0, [0, 1], 2.0).unwrap()
    }

    fn shear() -> VectorField {
        VectorField::shear(2, 1.0, 1, 0, 2.0).unwrap()
    }

    #[test]
    fn advect_examples() {
        let c = VectorField::constant(vec![0.5, -1.0]).unwrap();
        let r = advect(&c, &[1.0, 2.0], 0.75, 1e-10).unwrap();
        assert_eq!(r.endpoint, vec![1.375, 1.25]);

        let x = [0.3, -0.8];
        let t = 1.3;
        let r = advect(&rotation(), &x, t, 1e-10).unwrap();
        let exact = [t.cos() * x[0] - t.sin() * x[1], t.sin() * x[0] + t.cos() * x[1]];
        assert_abs_diff_eq!(r.endpoint[0], exact[0], epsilon = 1e-10);
        assert_abs_diff_eq!(r.endpoint[1], exact[1], epsilon = 1e-10);
        assert!(r.error_estimate <= 1e-10);

        let r = advect(&shear(), &x, t, 1e-10).unwrap();
        assert_abs_diff_eq!(r.endpoint[0], x[0] + t * x[1], epsilon = 1e-14);
        assert_abs_diff_eq!(r.endpoint[1], x[1], epsilon = 0.0);
    }

    #[test]
    fn jacobian_examples() {
        let c = VectorField::constant(vec![0.5, -1.0]).unwrap();
        assert_eq!(jacobian_action(&c, &[1.0, 2.0], 3.0, 1e-10).unwrap(), nalgebra::DMatrix::identity(2, 2));

        let j = jacobian_action(&shear(), &[0.1, 0.2], 2.0, 1e-10).unwrap();
        let expected = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert_abs_diff_eq!((j - expected).amax(), 0.0, epsilon = 1e-13);

        let j = jacobian_action(&rotation(), &[0.1, 0.2], PI / 2.0, 1e-10).unwrap();
        let expected = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert_abs_diff_eq!((j - expected).amax(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn semigroup_examples() {
        let c = VectorField::constant(vec![0.5, -1.0]).unwrap();
        assert_eq!(semigroup_defect(&c, &[0.0, 0.0], 0.25, 0.5, 1e-10).unwrap(), 0.0);
        assert!(semigroup_defect(&rotation(), &[1.0, 0.5], 0.3, 0.3, 1e-10).unwrap() <= 1e-9);
        assert!(semigroup_defect(&rotation(), &[1.0, 0.5], 0.7, -0.7, 1e-10).unwrap() <= 1e-9);
    }

    #[test]
    fn taylor_examples() {
        let c = VectorField::constant(vec![0.5, -1.0]).unwrap();
        assert!(taylor_defect(&c, &[1.0, 1.0], 0.1).unwrap() < 1e-15);
        assert!(taylor_defect(&shear(), &[0.0, 1.0], 0.1).unwrap() < 1e-15);
        let hs = [1e-1, 1e-2, 1e-3];
        let d: Vec<f64> = hs.iter().map(|&h| taylor_defect(&rotation(), &[1.0, 0.0], h).unwrap()).collect();
        for (h, v) in hs.iter().zip(&d) {
            assert!((v / (h * h) - 0.5).abs() < 0.01, "{}", v / (h * h));
            assert!(*v <= rotation().lip_bound() * 1.0 * h * h);
        }
        assert!((loglog_slope(&hs, &d) - 2.0).abs() < 0.1);
    }

    #[test]
    fn spacetime_maps_send_lifted_field_to_time_direction() {
        let b = VectorField::bump_gradient(0.7, Bump::new(vec![0.2, 0.1], 0.2, 1.5).unwrap()).unwrap();
        let (p, m) = spacetime_forward(&b, 0.6, &[0.5, -0.3], 1e-10).unwrap();
        let (q, mi) = spacetime_inverse(&b, p[0], &p[1..], 1e-10).unwrap();
        assert_abs_diff_eq!(q[1], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(q[2], -0.3, epsilon = 1e-9);
        let bx = b.eval(&p[1..]);
        let lifted = nalgebra::DVector::from_vec(vec![1.0, bx[0], bx[1]]);
        let back = &mi * &lifted;
        assert_abs_diff_eq!(back[0], 1.0, epsilon = 0.0);
        assert!(back[1].abs() < 1e-6 && back[2].abs() < 1e-6);
        // DΨ [(1,0)] = (1, b(Φ_t x))
        let e0 = &m * nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!((e0[1], e0[2]), (bx[0], bx[1]));
    }

    #[test]
    fn grid_field_bounds_hold_empirically() {
        let base = VectorField::bump_gradient(1.0, Bump::new(vec![0.0, 0.0], 0.3, 1.0).unwrap()).unwrap();
        let g = GridField::sample(vec![-1.2, -1.2], vec![1.2, 1.2], vec![25, 25], &base).unwrap();
        let f = VectorField::grid(g).unwrap();
        let pts: Vec<[f64; 2]> = (0..40).flat_map(|i| (0..40).map(move |j| [-1.3 + 2.6 * i as f64 / 39.0, -1.3 + 2.6 * j as f64 / 39.0])).collect();
        let mut lip = 0.0f64;
        let mut sup = 0.0f64;
        for (a, p) in pts.iter().enumerate() {
            let bp = f.eval(p);
            sup = sup.max(crate::numeric::norm(&bp));
            for q in pts.iter().skip(a + 1).step_by(7) {
                let bq = f.eval(q);
                lip = lip.max(crate::numeric::distance(&bp, &bq) / crate::numeric::distance(p, q));
            }
        }
        assert!(lip <= f.lip_bound(), "{lip} > {}", f.lip_bound());
        assert!(sup <= f.sup_bound());
        // in-cell jacobian matches finite differences away from faces
        let x = [0.31, -0.47];
        let j = f.jacobian(&x);
        let h = 1e-7;
        for d in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let (bp, bm) = (f.eval(&xp), f.eval(&xm));
            for c in 0..2 {
                assert_abs_diff_eq!(j[c * 2 + d], (bp[c] - bm[c]) / (2.0 * h), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn smoothed_kink_matches_quadrature_convolution() {
        let kink = VectorField::kink_shear(2, 1.0, 1, 0, 2.0).unwrap();
        let smooth = kink.mollify(0.1).unwrap();
        for &y in &[-0.3, -0.05, 0.0, 0.02, 0.09, 0.2] {
            // midpoint-rule convolution of |y - s| with κ_ε
            let m = 200_000;
            let eps = 0.1;
            let mut acc = 0.0;
            for i in 0..m {
                let s = -eps + 2.0 * eps * (i as f64 + 0.5) / m as f64;
                let u = (s / eps).abs();
                let k = (1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)) / eps;
                acc += (y - s).abs() * k * 2.0 * eps / m as f64;
            }
            assert_abs_diff_eq!(smooth.eval(&[0.0, y])[0], acc, epsilon = 1e-8);
        }
        assert!(smooth.eval(&[0.0, 0.0])[0] > 0.0);
        assert_eq!(kink.kink_distance(&[3.0, -0.25]), Some(0.25));
    }

    #[test]
    fn mollified_linear_fields_are_unchanged() {
        assert_eq!(rotation().mollify(0.1).unwrap(), rotation());
        let b = VectorField::bump_gradient(0.5, Bump::new(vec![0.0, 0.0], 0.2, 1.0).unwrap()).unwrap();
        let m = b.mollify(0.05).unwrap();
        let x = [0.4, 0.3];
        let diff = crate::numeric::distance(&m.eval(&x), &b.eval(&x));
        assert!(diff < b.lip_bound() * 0.05);
        assert!(m.lip_bound() <= b.lip_bound());
    }

    #[test]
    fn underflow_is_reported() {
        let err = advect(&rotation(), &[1.0, 0.0], 1e6, 1e-300).unwrap_err();
        assert!(matches!(err, crate::Error::StepUnderflow { .. }), "{err}");
    }

    #[test]
    fn advect_times_matches_single_calls() {
        let times = [0.0, 0.1, 0.25, 0.5];
        let b = VectorField::bump_gradient(0.8, Bump::new(vec![0.0, 0.0], 0.1, 1.2).unwrap()).unwrap();
        let many = advect_times(&b, &[0.3, 0.2], &times, 1e-10, true).unwrap();
        for (t, r) in times.iter().zip(&many) {
            let one = advect_with_jacobian(&b, &[0.3, 0.2], *t, 1e-10).unwrap();
            assert!(crate::numeric::distance(&one.endpoint, &r.endpoint) < 1e-9);
        }
        assert!(advect_times(&b, &[0.0, 0.0], &[0.5, 0.1], 1e-10, false).is_err());
        assert!(advect_times(&b, &[0.0, 0.0], &[0.5, -0.1], 1e-10, false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn inverse_flow_returns_home(x0 in -1.0..1.0f64, x1 in -1.0..1.0f64, t in 0.0..1.0f64) {
            let b = VectorField::bump_gradient(0.6, Bump::new(vec![0.1, 0.0], 0.2, 1.4).unwrap()).unwrap();
            let y = advect(&b, &[x0, x1], t, 1e-10).unwrap().endpoint;
            let back = advect(&b, &y, -t, 1e-10).unwrap().endpoint;
            prop_assert!(crate::numeric::distance(&back, &[x0, x1]) <= 1e-9);
        }

        #[test]
        fn jacobian_determinant_positive(x0 in -1.0..1.0f64, x1 in -1.0..1.0f64, t in -1.0..1.0f64) {
            let b = VectorField::bump_gradient(-0.9, Bump::new(vec![0.0, 0.1], 0.1, 1.3).unwrap()).unwrap();
            let j = jacobian_action(&b, &[x0, x1], t, 1e-10).unwrap();
            prop_assert!(j.determinant() > 0.0);
        }
    }
}
