use gte_core::currents::PolyhedralCurrent;
use gte_core::flow::{FieldSpec, VectorField};
use gte_core::forms::{form_panel, Bump, TimeTest};
use gte_core::numeric::uniform_grid;
use gte_core::transport::{constancy_diagnostic, solve_gte, weak_residual, SolutionFamily, SolveOptions};

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("gte-core-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn written_family_reproduces_its_diagnostics() {
    let b = FieldSpec::Rotation { n: 2, rate: 1.0, plane: [0, 1], radius: 2.0 }.build().unwrap();
    let seg = PolyhedralCurrent::segment(&[0.5, 0.0], &[1.0, 0.2], 1.0).unwrap();
    let grid = uniform_grid(0.0, 1.0, 40);
    let opts = SolveOptions { levels: 2, ..SolveOptions::default() };
    let fam = solve_gte(&seg, &b, &grid, &opts).unwrap();
    assert!(fam.integral);

    let dir = scratch("family");
    let manifest = fam.write(&dir).unwrap();
    let back = SolutionFamily::read(&manifest).unwrap();
    assert_eq!(back.grid, fam.grid);
    assert_eq!(back.currents, fam.currents);
    assert_eq!(back.boundaries, fam.boundaries);

    let bump = Bump::new(vec![0.3, 0.3], 0.4, 1.2).unwrap();
    let panel = form_panel(11, 2, 1, 2, 3, Some(bump)).unwrap();
    let psi = TimeTest::bump(0.2, 0.8, 0.0).unwrap();
    for w in &panel {
        assert_eq!(weak_residual(&fam, &b, &psi, w).unwrap(), weak_residual(&back, &b, &psi, w).unwrap());
    }
    assert_eq!(
        constancy_diagnostic(&fam, &b, &panel, 1e-10).unwrap(),
        constancy_diagnostic(&back, &b, &panel, 1e-10).unwrap()
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn shear_mass_curve_and_rotation_endpoint() {
    let shear = VectorField::shear(2, 1.0, 1, 0, 3.0).unwrap();
    let vertical = PolyhedralCurrent::segment(&[0.2, -0.5], &[0.2, 0.5], 1.0).unwrap();
    let grid = uniform_grid(0.0, 1.0, 10);
    let fam = solve_gte(&vertical, &shear, &grid, &SolveOptions::default()).unwrap();
    for (t, c) in grid.iter().zip(&fam.currents) {
        assert!((c.mass() - (1.0 + t * t).sqrt()).abs() <= 1e-6);
    }

    let rot = VectorField::rotation(2, 1.0, [0, 1], 3.0).unwrap();
    let seg = PolyhedralCurrent::segment(&[1.0, 0.0], &[2.0, 0.0], 1.0).unwrap();
    let fam = solve_gte(&seg, &rot, &[std::f64::consts::FRAC_PI_4], &SolveOptions::default()).unwrap();
    let c = &fam.currents[0];
    assert!((c.mass() - 1.0).abs() <= 1e-8);
    // at t = π/4 every atom lies on the diagonal
    for (x, _) in c.atoms() {
        assert!((x[0] - x[1]).abs() <= 1e-8);
    }
}

#[test]
fn external_family_rejects_mismatched_slices() {
    let seg = PolyhedralCurrent::segment(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap().discretize(2).unwrap();
    let dseg = PolyhedralCurrent::segment(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap().boundary().unwrap().discretize(1).unwrap();
    assert!(SolutionFamily::external(vec![0.0, 0.5], vec![seg.clone()], vec![dseg.clone()]).is_err());
    assert!(SolutionFamily::external(vec![0.5, 0.0], vec![seg.clone(), seg.clone()], vec![dseg.clone(), dseg.clone()]).is_err());
    assert!(SolutionFamily::external(vec![0.0, 0.5], vec![seg.clone(), seg], vec![dseg.clone(), dseg]).is_ok());
}
