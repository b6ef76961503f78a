//! Solutions of the geometric transport equation, weak residuals, space-time
//! lifts and the uniqueness diagnostic.

mod family;
mod residual;
mod spacetime;
mod uniqueness;

pub use family::{solve_gte, Provenance, SolutionFamily, SolveOptions};
pub use residual::{centered_defect, lie_pair, weak_residual, weak_residual_with, MIN_SUPPORT_POINTS};
pub use spacetime::{
    boundary_residual_spacetime, cylinder_z, spacetime_lift_u, spacetime_lift_u_with, spacetime_panel, verticality_residual,
    SpaceTimeCurrent, Verticality,
};
pub use uniqueness::{constancy_diagnostic, panel_difference, pulled_back_pairings};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::{DiscreteCurrent, PolyhedralCurrent};
    use crate::exterior::KVector;
    use crate::flow::VectorField;
    use crate::forms::{form_panel, tensor_form, Bump, PolyForm, Polynomial, TimeForm, TimeTest};
    use crate::numeric::{uniform_grid, TimeRule};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn opts(levels: usize) -> SolveOptions {
        SolveOptions { levels, order: 3, tol: 1e-10 }
    }

    fn circle(m: usize) -> PolyhedralCurrent {
        let pts: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        PolyhedralCurrent::closed_polyline(&pts, 1.0).unwrap()
    }

    fn rotation() -> VectorField {
        VectorField::rotation(2, 1.0, [0, 1], 2.0).unwrap()
    }

    fn panel_bump() -> Bump {
        Bump::new(vec![0.3, -0.2], 0.5, 1.6).unwrap()
    }

    #[test]
    fn constant_field_translates() {
        let seg = PolyhedralCurrent::segment(&[0.0, 0.0], &[1.0, 0.0], 2.0).unwrap();
        let b = VectorField::constant(vec![0.5, -1.0]).unwrap();
        let grid = uniform_grid(0.0, 1.0, 4);
        let f = solve_gte(&seg, &b, &grid, &opts(1)).unwrap();
        assert!(f.integral);
        assert_eq!(f.provenance, Provenance::Pushforward);
        for (t, c) in grid.iter().zip(&f.currents) {
            assert_relative_eq!(c.mass(), 2.0, epsilon = 1e-14);
            for i in 0..c.len() {
                let x0 = f.currents[0].point(i);
                assert!((c.point(i)[0] - x0[0] - 0.5 * t).abs() < 1e-14);
                assert!((c.point(i)[1] - x0[1] + t).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quarter_turn_of_segment() {
        let seg = PolyhedralCurrent::segment(&[1.0, 0.0], &[2.0, 0.0], 1.0).unwrap();
        let b = VectorField::rotation(2, PI / 2.0, [0, 1], 2.0).unwrap();
        let f = solve_gte(&seg, &b, &[0.0, 1.0], &opts(2)).unwrap();
        let end = &f.currents[1];
        for (x, _) in end.atoms() {
            assert!(x[0].abs() < 1e-8 && x[1] > 1.0 - 1e-8 && x[1] < 2.0 + 1e-8);
        }
        assert_relative_eq!(end.mass(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn shear_mass_curve() {
        let seg = PolyhedralCurrent::segment(&[0.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        let b = VectorField::shear(2, 1.0, 1, 0, 2.0).unwrap();
        let grid = uniform_grid(0.0, 1.0, 10);
        let f = solve_gte(&seg, &b, &grid, &opts(1)).unwrap();
        for (t, c) in grid.iter().zip(&f.currents) {
            assert!((c.mass() - (1.0 + t * t).sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn lie_pair_at_a_point() {
        let x = vec![0.3, -0.4];
        let t = DiscreteCurrent::new(2, 0, vec![(x.clone(), KVector::scalar(2, 1.0).unwrap())]).unwrap();
        let empty = DiscreteCurrent::empty(2, 0).unwrap();
        // f = x0² + 3 x0 x1
        let f = PolyForm::from_terms(
            2,
            0,
            vec![(vec![], {
                let mut p = Polynomial::monomial(2, &[2, 0], 1.0).unwrap();
                p.add_scaled(3.0, &Polynomial::monomial(2, &[1, 1], 1.0).unwrap());
                p
            })],
        )
        .unwrap();
        let b = rotation();
        let bx = b.eval(&x);
        let grad = [2.0 * x[0] + 3.0 * x[1], 3.0 * x[0]];
        let want = -(bx[0] * grad[0] + bx[1] * grad[1]);
        assert_relative_eq!(lie_pair(&t, &empty, &b, &f).unwrap(), want, epsilon = 1e-14);
        assert_eq!(lie_pair(&t, &empty, &VectorField::zero(2).unwrap(), &f).unwrap(), 0.0);
    }

    #[test]
    fn centered_difference_matches_lie_derivative() {
        // the spatial quadrature error is the same for every h, so compare successive differences
        let c = circle(8);
        let b = rotation();
        let w = form_panel(1, 2, 1, 2, 1, Some(panel_bump())).unwrap().pop().unwrap();
        let mut defects = Vec::new();
        for h in [4e-2, 2e-2, 1e-2] {
            let f = solve_gte(&c, &b, &[0.5 - h, 0.5, 0.5 + h], &opts(1)).unwrap();
            defects.push(centered_defect(&f, 1, &b, &w).unwrap());
        }
        let ratio = (defects[0] - defects[1]) / (defects[1] - defects[2]);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn weak_residual_examples() {
        let c = circle(16);
        let grid = uniform_grid(0.0, 1.0, 40);
        let psi = TimeTest::bump(0.2, 0.8, 0.2).unwrap();
        let panel = form_panel(2, 2, 1, 2, 3, Some(panel_bump())).unwrap();

        // a symmetric profile on a symmetric grid integrates ψ' to zero up to roundoff
        let even = TimeTest::bump(0.2, 0.8, 0.0).unwrap();
        let zero = VectorField::zero(2).unwrap();
        let still = solve_gte(&c, &zero, &grid, &opts(1)).unwrap();
        for w in &panel {
            assert!(weak_residual(&still, &zero, &even, w).unwrap().abs() <= 1e-12);
        }

        let b = rotation();
        let moving = solve_gte(&c, &b, &grid, &opts(1)).unwrap();
        for w in &panel {
            assert!(weak_residual(&moving, &b, &psi, w).unwrap().abs() <= 1e-4);
        }

        let seg = PolyhedralCurrent::segment(&[0.5, 0.0], &[1.0, 0.2], 1.0).unwrap().subdivide(2);
        let frozen = SolutionFamily::frozen(grid.clone(), seg.discretize(3).unwrap(), seg.boundary().unwrap().discretize(3).unwrap()).unwrap();
        let x0 = PolyForm::from_terms(2, 1, vec![(vec![1], Polynomial::variable(2, 0))]).unwrap();
        assert!(weak_residual(&frozen, &b, &psi, &x0).unwrap().abs() >= 1e-2);

        let narrow = TimeTest::bump(0.5, 0.6, 0.0).unwrap();
        assert!(weak_residual(&moving, &b, &narrow, &panel[0]).is_err());
        assert!(weak_residual(&moving, &b, &psi, &PolyForm::zero(2, 2).unwrap()).is_err());
    }

    #[test]
    fn open_segment_and_boundary_family() {
        let seg = PolyhedralCurrent::segment(&[0.5, 0.0], &[1.0, 0.2], 1.0).unwrap();
        let b = rotation();
        let grid = uniform_grid(0.0, 1.0, 40);
        let f = solve_gte(&seg, &b, &grid, &opts(2)).unwrap();
        let psi = TimeTest::bump(0.2, 0.8, -0.3).unwrap();
        for w in form_panel(3, 2, 1, 2, 3, Some(panel_bump())).unwrap() {
            assert!(weak_residual(&f, &b, &psi, &w).unwrap().abs() <= 1e-4);
        }
        let bf = f.boundary_family().unwrap();
        for w in form_panel(4, 2, 0, 2, 3, Some(panel_bump())).unwrap() {
            assert!(weak_residual(&bf, &b, &psi, &w).unwrap().abs() <= 1e-4);
        }
    }

    #[test]
    fn residual_is_linear_in_the_family() {
        let b = rotation();
        let grid = uniform_grid(0.0, 1.0, 20);
        let f1 = solve_gte(&circle(6), &b, &grid, &opts(0)).unwrap();
        let seg = PolyhedralCurrent::segment(&[0.1, 0.2], &[0.4, -0.3], 1.0).unwrap();
        let f2 = SolutionFamily::frozen(grid.clone(), seg.discretize(2).unwrap(), seg.boundary().unwrap().discretize(2).unwrap()).unwrap();
        let psi = TimeTest::bump(0.2, 0.8, 0.0).unwrap();
        let w = form_panel(5, 2, 1, 2, 1, Some(panel_bump())).unwrap().pop().unwrap();
        let sum = weak_residual(&f1.sum(&f2).unwrap(), &b, &psi, &w).unwrap();
        let parts = weak_residual(&f1, &b, &psi, &w).unwrap() + weak_residual(&f2, &b, &psi, &w).unwrap();
        assert!((sum - parts).abs() < 1e-13);
    }

    #[test]
    fn cylinder_without_flow_is_the_product() {
        let c = circle(6);
        let zero = VectorField::zero(2).unwrap();
        let z = cylinder_z(&c, &zero, &uniform_grid(0.0, 1.0, 4), &opts(1)).unwrap();
        let prod = c.subdivide(1).product_slabs(&uniform_grid(0.0, 1.0, 4)).unwrap().discretize(3).unwrap();
        // quadratic profile on slab-aligned support and affine β: both rules are exact
        let psi = TimeTest::from_coeffs(0.25, 0.75, vec![0.0, 0.5, -1.0]).unwrap();
        for beta in form_panel(6, 2, 1, 1, 3, None).unwrap() {
            let w = tensor_form(TimeForm::Differential(psi.clone()), beta).unwrap();
            let (a, p) = (z.pair(&w).unwrap(), prod.pair(&w).unwrap());
            assert!((a - p).abs() < 1e-12, "{a} vs {p}");
        }
    }

    #[test]
    fn cylinder_slice_identities() {
        let c = circle(16);
        let b = rotation();
        let grid = uniform_grid(0.0, 1.0, 100);
        let f = solve_gte(&c, &b, &grid, &opts(1)).unwrap();
        let z = cylinder_z(&c, &b, &uniform_grid(0.0, 1.0, 20), &opts(1)).unwrap();
        let weights = crate::numeric::time_weights(&grid, TimeRule::Simpson).unwrap();
        let psi = TimeTest::bump(0.2, 0.8, 0.3).unwrap();
        for beta in form_panel(7, 2, 1, 2, 2, Some(panel_bump())).unwrap() {
            let first = z.pair(&tensor_form(TimeForm::Differential(psi.derivative()), beta.clone()).unwrap()).unwrap();
            let first_ref: f64 = grid.iter().zip(&weights).zip(&f.currents).map(|((t, w), cur)| w * psi.eval_derivative(*t) * cur.pair(&beta).unwrap()).sum();
            assert!((first - first_ref).abs() < 1e-5);
            let db = beta.ext_d().unwrap();
            let second = z.pair(&tensor_form(TimeForm::Function(psi.clone()), db.clone()).unwrap()).unwrap();
            let second_ref: f64 =
                grid.iter().zip(&weights).zip(&f.currents).map(|((t, w), cur)| w * psi.eval(*t) * cur.wedge_field(&b).unwrap().pair(&db).unwrap()).sum();
            assert!((second - second_ref).abs() < 1e-5);
        }
    }

    #[test]
    fn lift_u_structure_and_mass() {
        let c = circle(8);
        let grid = uniform_grid(0.0, 1.0, 10);
        let zero = VectorField::zero(2).unwrap();
        let f = solve_gte(&c, &zero, &grid, &opts(0)).unwrap();
        let u = spacetime_lift_u(&f, &zero).unwrap();
        // only dt∧dx components survive
        for (_, v) in u.current().atoms() {
            assert_eq!(v[2], 0.0);
        }
        let b = rotation();
        let fb = solve_gte(&c, &b, &grid, &opts(0)).unwrap();
        let ub = spacetime_lift_u(&fb, &b).unwrap();
        let weights = crate::numeric::time_weights(&grid, TimeRule::Simpson).unwrap();
        let bound: f64 = (1.0 + b.sup_bound()) * weights.iter().zip(&fb.currents).map(|(w, cur)| w * cur.mass()).sum::<f64>();
        assert!(ub.mass() <= bound * (1.0 + 1e-12));

        // polynomial β of degree 2 is integrated exactly and the symmetric profile
        // integrates ψ' to zero, so both cases vanish
        let psi = TimeTest::bump(0.2, 0.8, 0.0).unwrap();
        let mut panel = Vec::new();
        for beta in form_panel(1, 2, 1, 2, 3, None).unwrap() {
            panel.push(tensor_form(TimeForm::Function(psi.clone()), beta).unwrap());
        }
        for beta in form_panel(2, 2, 0, 2, 3, None).unwrap() {
            panel.push(tensor_form(TimeForm::Differential(psi.clone()), beta).unwrap());
        }
        assert!(boundary_residual_spacetime(&u, &panel).unwrap() <= 1e-10);
    }

    #[test]
    fn particle_lift_is_the_helix_tangent() {
        let p = PolyhedralCurrent::new(2, 0, vec![crate::currents::Simplex { vertices: vec![vec![1.0, 0.0]], weight: 1.0 }]).unwrap();
        let b = rotation();
        let grid = uniform_grid(0.0, 1.0, 4);
        let f = solve_gte(&p, &b, &grid, &opts(0)).unwrap();
        let u = spacetime_lift_u(&f, &b).unwrap();
        let weights = crate::numeric::time_weights(&grid, TimeRule::Simpson).unwrap();
        for (i, (x, v)) in u.current().atoms().enumerate() {
            let t = grid[i];
            assert!((x[1] - t.cos()).abs() < 1e-9 && (x[2] - t.sin()).abs() < 1e-9);
            let w = weights[i];
            assert!((v[0] - w).abs() < 1e-12 && (v[1] + w * t.sin()).abs() < 1e-9 && (v[2] - w * t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn open_segment_breaks_the_second_case() {
        let seg = PolyhedralCurrent::segment(&[0.5, 0.0], &[1.0, 0.2], 1.0).unwrap();
        let b = rotation();
        let f = solve_gte(&seg, &b, &uniform_grid(0.0, 1.0, 20), &opts(1)).unwrap();
        let u = spacetime_lift_u(&f, &b).unwrap();
        let panel = spacetime_panel(2, 2, 1, 2, 3, Some(panel_bump()), (0.2, 0.8)).unwrap();
        assert!(boundary_residual_spacetime(&u, &panel).unwrap() >= 1e-2);
    }

    #[test]
    fn verticality_of_w() {
        let c = circle(8);
        let grid = uniform_grid(0.0, 1.0, 10);
        let psi = TimeTest::bump(0.2, 0.8, 0.1).unwrap();
        let pairs: Vec<(TimeTest, PolyForm)> = form_panel(3, 2, 1, 2, 3, Some(panel_bump())).unwrap().into_iter().map(|w| (psi.clone(), w)).collect();

        let zero = VectorField::zero(2).unwrap();
        let u0 = spacetime_lift_u(&solve_gte(&c, &zero, &grid, &opts(0)).unwrap(), &zero).unwrap();
        let v0 = verticality_residual(&u0, &zero, &pairs, 1e-10).unwrap();
        assert_eq!(v0.w, u0);
        assert!(v0.residual <= 1e-12);

        let b = rotation();
        let u = spacetime_lift_u(&solve_gte(&c, &b, &grid, &opts(0)).unwrap(), &b).unwrap();
        let v = verticality_residual(&u, &b, &pairs, 1e-10).unwrap();
        assert!(v.max_atom_defect <= 1e-6);
        assert!(v.residual <= 1e-4);
    }

    #[test]
    fn constancy_examples() {
        let seg = PolyhedralCurrent::segment(&[0.5, 0.0], &[1.0, 0.2], 1.0).unwrap();
        let grid = uniform_grid(0.0, 1.0, 5);
        let panel = form_panel(8, 2, 1, 2, 3, Some(panel_bump())).unwrap();
        let zero = VectorField::zero(2).unwrap();
        let still = solve_gte(&seg, &zero, &grid, &opts(1)).unwrap();
        assert_eq!(constancy_diagnostic(&still, &zero, &panel, 1e-10).unwrap(), 0.0);

        let b = rotation();
        let f = solve_gte(&seg, &b, &grid, &opts(1)).unwrap();
        assert!(constancy_diagnostic(&f, &b, &panel, 1e-10).unwrap() <= 1e-8);

        let frozen = SolutionFamily::frozen(grid, f.currents[0].clone(), f.boundaries[0].clone()).unwrap();
        let x0 = PolyForm::from_terms(2, 1, vec![(vec![1], Polynomial::variable(2, 0))]).unwrap().with_bump(Bump::new(vec![0.0, 0.0], 1.5, 2.0).unwrap()).unwrap();
        assert!(constancy_diagnostic(&frozen, &b, &[x0], 1e-10).unwrap() >= 1e-2);
    }

    #[test]
    fn family_round_trip() {
        let dir = std::env::temp_dir().join(format!("gte-family-{}", std::process::id()));
        let f = solve_gte(&circle(4), &rotation(), &uniform_grid(0.0, 1.0, 2), &opts(0)).unwrap();
        let manifest = f.write(&dir).unwrap();
        let back = SolutionFamily::read(&manifest).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.currents, f.currents);
        assert_eq!(back.provenance, Provenance::Pushforward);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn wedge_pairing_is_the_lie_term(seed in 0u64..1000, t in 0.0f64..1.0) {
            let c = circle(6).discretize(2).unwrap();
            let b = rotation();
            let w = crate::forms::random_form(seed, 2, 1, 2, Some(panel_bump())).unwrap();
            let dw = w.ext_d().unwrap();
            let moved = c.pushforward_flow(&b, t, 1e-10).unwrap();
            let direct = moved.wedge_field(&b).unwrap().pair(&dw).unwrap();
            let lie = lie_pair(&moved, &DiscreteCurrent::empty(2, 0).unwrap(), &b, &w).unwrap();
            prop_assert_eq!(direct, -lie);
        }
    }
}
