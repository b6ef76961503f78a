//! Seeded property suites behind `gte verify`.
//!
//! Every suite is a pure function of its seed: the same seed yields the same
//! checks with the same values.

use gte_core::continuity::{flowed_test_residuals, measure_constancy, push_measure, MeasureFamily, ParticleMeasure};
use gte_core::currents::{random_chain, PolyhedralCurrent};
use gte_core::exterior::sample::{random_alternating, random_simple, AnnihilatedInstance, SplitInstance};
use gte_core::exterior::{
    comass, mass_norm, pair, pull_linear, push_linear, ComassOptions, KCovector, KVector, LinearMap,
    MassOptions,
};
use gte_core::flow::{flow_invariance_defect, semigroup_defect, taylor_defect, FieldSpec, VectorField};
use gte_core::forms::{form_panel, tensor_form, Bump, TimeForm, TimeTest};
use gte_core::numeric::{loglog_slope, uniform_grid};
use gte_core::transport::{constancy_diagnostic, lie_pair, solve_gte, weak_residual, SolutionFamily, SolveOptions};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::check::{worst, Check};
use crate::oracle::{sampled_comass, sampled_mass};

pub type Result<T> = gte_core::Result<T>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Flow,
    Currents,
    Transport,
    Continuity,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Flow => "flow",
            Suite::Currents => "currents",
            Suite::Transport => "transport",
            Suite::Continuity => "continuity",
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::Algebra => {
            let mut out = exterior_identities(seed, 1000)?;
            out.extend(norm_oracles(seed, 1000)?);
            Ok(out)
        }
        Suite::Flow => flow_quality(seed, 100),
        Suite::Currents => {
            let mut out = chain_identities(seed)?;
            out.extend(pushforward_mass_bounds(seed, 20)?);
            Ok(out)
        }
        Suite::Transport => transport_checks(seed),
        Suite::Continuity => continuity_checks(seed),
    }
}

/// Time profiles for residual panels. Supports start and end on multiples of
/// 0.1, so grids with a multiple of 10 steps place them on nodes.
pub fn time_tests(count: usize) -> Result<Vec<TimeTest>> {
    (0..count)
        .map(|i| {
            let a = 0.1 + 0.1 * (i % 3) as f64;
            let b = 0.6 + 0.1 * (i % 4) as f64;
            TimeTest::bump(a, b, -0.5 + i as f64 / count.max(1) as f64)
        })
        .collect()
}

/// Particles at the centers of a `spacing` lattice over the box `[lo, hi]`,
/// weighted by `density · spacing^d`; empty cells are skipped.
pub fn lattice_particles(density: &Bump, lo: &[f64], hi: &[f64], spacing: f64) -> Result<ParticleMeasure> {
    let d = lo.len();
    if hi.len() != d || density.dim() != d {
        return Err(gte_core::Error::DimensionMismatch { expected: d, found: hi.len().max(density.dim()) });
    }
    if !(spacing > 0.0) || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
        return Err(gte_core::Error::InvalidArgument("lattice needs spacing > 0 and lo < hi".into()));
    }
    let counts: Vec<usize> = lo.iter().zip(hi).map(|(a, b)| ((b - a) / spacing).round().max(1.0) as usize).collect();
    let cell = spacing.powi(d as i32);
    let mut mu = ParticleMeasure::empty(d)?;
    let total: usize = counts.iter().product();
    let mut x = vec![0.0; d];
    for mut c in 0..total {
        for a in (0..d).rev() {
            x[a] = lo[a] + spacing * ((c % counts[a]) as f64 + 0.5);
            c /= counts[a];
        }
        let w = density.value(&x) * cell;
        if w != 0.0 {
            mu.push(&x, w)?;
        }
    }
    Ok(mu)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splitting and annihilation of pairings across orthogonal factors, plus the
/// graded commutativity and associativity of the wedge.
pub fn exterior_identities(seed: u64, instances: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "algebra";
    let mut rng = rng_for(seed, 1);
    let (mut split, mut annihilated, mut anti, mut assoc) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..instances {
        let n = rng.gen_range(2..=6);
        let s = SplitInstance::draw(&mut rng, n)?;
        let lhs = pair(&s.tau.wedge(&s.sigma)?, &s.alpha.wedge(&s.beta)?)?;
        split = worst(split, (lhs - pair(&s.tau, &s.alpha)? * pair(&s.sigma, &s.beta)?).abs());

        let a = AnnihilatedInstance::draw(&mut rng, n)?;
        annihilated = worst(annihilated, pair(&a.tau.wedge(&a.sigma)?, &a.alpha)?.abs());

        let j = rng.gen_range(0..=n.min(3));
        let k = rng.gen_range(0..=(n - j).min(3));
        let l = rng.gen_range(0..=(n - j - k).min(3));
        let x: KVector = random_alternating(&mut rng, n, j)?;
        let y: KVector = random_alternating(&mut rng, n, k)?;
        let z: KVector = random_alternating(&mut rng, n, l)?;
        let sign = if (j * k) % 2 == 0 { 1.0 } else { -1.0 };
        let xy = x.wedge(&y)?;
        anti = worst(anti, (xy.clone() - y.wedge(&x)?.scale(sign)).norm());
        assoc = worst(assoc, (xy.wedge(&z)? - x.wedge(&y.wedge(&z)?)?).norm());
    }
    Ok(vec![
        Check::at_most(SUITE, "pairing splits across orthogonal factors", split, 1e-10).with_samples(instances),
        Check::at_most(SUITE, "orthogonal factor annihilates the pairing", annihilated, 1e-10).with_samples(instances),
        Check::at_most(SUITE, "wedge graded anticommutativity", anti, 1e-12).with_samples(instances),
        Check::at_most(SUITE, "wedge associativity", assoc, 1e-12).with_samples(instances),
    ])
}

/// Library comass and mass against brute-force oracles, the pairing bound
/// `|<η,α>| ≤ M(η) ‖α‖`, and functoriality of push and pull.
pub fn norm_oracles(seed: u64, pairs: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "algebra";
    let mut rng = rng_for(seed, 2);
    let mut out = Vec::new();

    let alpha = KCovector::basis_element(4, &[0, 1])?.checked_add(&KCovector::basis_element(4, &[2, 3])?)?;
    let eta = KVector::basis_element(4, &[0, 1])?.checked_add(&KVector::basis_element(4, &[2, 3])?)?;
    let c_lib = comass(&alpha, &ComassOptions::default()).value;
    let c_orc = sampled_comass(&mut rng, &alpha, 4000);
    out.push(Check::at_most(SUITE, "comass(e^12+e^34) - 1", (c_lib - 1.0).abs(), 1e-3));
    out.push(Check::at_most(SUITE, "comass(e^12+e^34) against frame sampling", (c_lib - c_orc).abs(), 1e-3));
    let m_lib = mass_norm(&eta, &MassOptions::default()).value;
    let m_orc = sampled_mass(&mut rng, &eta, 2000, 20_000, |a| {
        let est = comass(a, &ComassOptions::default());
        (est.value, est.simple_vector())
    });
    out.push(Check::at_most(SUITE, "mass(e_12+e_34) - 2", (m_lib - 2.0).abs(), 1e-3));
    out.push(Check::at_most(SUITE, "mass(e_12+e_34) against covector sampling", (m_lib - m_orc).abs(), 1e-3));

    let (mut excess, mut below_euclid, mut simple_gap, mut adjoint) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..pairs {
        let n = rng.gen_range(2..=5);
        let k = rng.gen_range(0..=n);
        let eta: KVector = random_alternating(&mut rng, n, k)?;
        let alpha: KCovector = random_alternating(&mut rng, n, k)?;
        let m = mass_norm(&eta, &MassOptions::default()).value;
        let c = comass(&alpha, &ComassOptions::default()).value;
        excess = worst(excess, (pair(&eta, &alpha)?.abs() - m * c) / (m * c));
        below_euclid = worst(below_euclid, (eta.norm() - m) / eta.norm());

        let s = random_simple(&mut rng, n, k)?;
        simple_gap = worst(simple_gap, (mass_norm(&s, &MassOptions::default()).value - s.norm()).abs() / s.norm());

        let p = rng.gen_range(1..=5);
        let map = LinearMap::new(DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0)))?;
        if k <= p {
            let a: KCovector = random_alternating(&mut rng, p, k)?;
            let lhs = pair(&push_linear(&map, &eta)?, &a)?;
            let rhs = pair(&eta, &pull_linear(&map, &a)?)?;
            adjoint = worst(adjoint, (lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    out.push(Check::at_most(SUITE, "pairing bound relative excess", excess.max(0.0), 1e-9).with_samples(pairs));
    out.push(Check::at_most(SUITE, "mass below euclidean norm (relative)", below_euclid.max(0.0), 1e-9).with_samples(pairs));
    out.push(Check::at_most(SUITE, "simple vectors have euclidean mass", simple_gap, 1e-6).with_samples(pairs));
    out.push(Check::at_most(SUITE, "push and pull are adjoint", adjoint, 1e-12).with_samples(pairs));
    Ok(out)
}

/// The catalog fields exercised by the flow suite, with a label each.
pub fn catalog() -> Vec<(&'static str, FieldSpec)> {
    let bump = Bump::new(vec![0.1, -0.2], 0.2, 1.5).expect("valid bump");
    vec![
        ("constant", FieldSpec::Constant { value: vec![0.5, -0.25] }),
        ("rotation", FieldSpec::Rotation { n: 2, rate: 1.0, plane: [0, 1], radius: 3.0 }),
        ("shear", FieldSpec::Shear { n: 2, rate: 1.0, from: 1, to: 0, radius: 3.0 }),
        ("kink_shear", FieldSpec::KinkShear { n: 2, rate: 1.0, from: 1, to: 0, radius: 3.0 }),
        ("smoothed_kink_shear", FieldSpec::SmoothedKinkShear { n: 2, rate: 1.0, from: 1, to: 0, radius: 3.0, eps: 0.1 }),
        ("bump_gradient", FieldSpec::BumpGradient { amplitude: 0.8, bump: bump.clone() }),
        (
            "grid_sampled",
            FieldSpec::GridSampled {
                base: Box::new(FieldSpec::BumpGradient { amplitude: 0.8, bump }),
                lo: vec![-2.0, -2.0],
                hi: vec![2.0, 2.0],
                shape: vec![33, 33],
            },
        ),
    ]
}

/// Semigroup property per catalog field, second-order Taylor behaviour of the
/// flow, and invariance of the field under its own flow.
pub fn flow_quality(seed: u64, samples: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "flow";
    const TOL: f64 = 1e-10;
    let mut rng = rng_for(seed, 3);
    let mut out = Vec::new();
    for (label, spec) in catalog() {
        let b = spec.build()?;
        let mut sg = 0.0;
        for _ in 0..samples {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (s, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            sg = worst(sg, semigroup_defect(&b, &x, s, t, TOL)?);
        }
        out.push(Check::at_most(SUITE, &format!("semigroup defect, {label}"), sg, 10.0 * TOL).with_samples(samples));
    }

    let hs = [1e-1, 1e-2, 1e-3];
    let curved = [("rotation", 1usize), ("bump_gradient", 5)];
    let fields = catalog();
    for (label, idx) in curved {
        let b = fields[idx].1.build()?;
        // keep x where the second-order term does not vanish
        let x = loop {
            let x: [f64; 2] = [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)];
            if x[0].hypot(x[1]) > 0.2 {
                break x;
            }
        };
        let d: Vec<f64> = hs.iter().map(|&h| taylor_defect(&b, &x, h)).collect::<Result<_>>()?;
        out.push(Check::between(SUITE, &format!("taylor defect slope, {label}"), loglog_slope(&hs, &d), 1.9, 2.1).with_samples(hs.len()));
    }
    let mut straight = 0.0;
    for (label, spec) in &fields {
        if ["constant", "shear", "kink_shear"].contains(label) {
            let b = spec.build()?;
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            straight = worst(straight, taylor_defect(&b, &x, 0.1)?);
        }
    }
    out.push(Check::at_most(SUITE, "taylor defect of fields constant along trajectories", straight, 1e-12).with_samples(3));

    for (label, spec) in &fields {
        if *label == "grid_sampled" {
            // only Lipschitz: DΦ jumps across cell faces
            continue;
        }
        let b = spec.build()?;
        let mut inv = 0.0;
        for _ in 0..samples {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            inv = worst(inv, flow_invariance_defect(&b, &x, rng.gen_range(-1.0..1.0), TOL)?);
        }
        out.push(Check::at_most(SUITE, &format!("flow invariance of the field, {label}"), inv, 1e-6).with_samples(samples));
    }
    Ok(out)
}

/// `∂∂ = 0` on seeded chains, the boundary of a product with an interval,
/// and discrete Stokes for polynomial forms.
pub fn chain_identities(seed: u64) -> Result<Vec<Check>> {
    const SUITE: &str = "currents";
    let mut rng = rng_for(seed, 4);
    let mut out = Vec::new();

    let mut dd = 0.0;
    let chains = 60;
    for i in 0..chains {
        let n = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=n);
        let t = random_chain(seed.wrapping_mul(1000).wrapping_add(i), n, k, rng.gen_range(1..=8))?;
        dd = worst(dd, t.boundary()?.boundary()?.max_abs_weight());
    }
    out.push(Check::at_most(SUITE, "boundary of boundary vanishes", dd, 1e-14).with_samples(chains as usize));

    // ∂(I × T) = {1}×T − {0}×T − I × ∂T, paired against 20 forms
    let mut prod = 0.0;
    let mut stokes = 0.0;
    for (j, (n, k)) in [(2usize, 1usize), (2, 2), (3, 1), (3, 2)].into_iter().enumerate() {
        let t = random_chain(seed.wrapping_add(17 + j as u64), n, k, 6)?;
        let lhs = t.product_interval(0.0, 1.0)?.boundary()?.discretize(3)?;
        let rhs = t
            .at_time(1.0)
            .add(&t.at_time(0.0).scale_weights(-1.0))?
            .add(&t.boundary()?.product_interval(0.0, 1.0)?.scale_weights(-1.0))?
            .discretize(3)?;
        for w in form_panel(seed.wrapping_add(100 * j as u64), n + 1, k, 2, 20, None)? {
            prod = worst(prod, (lhs.pair(&w)? - rhs.pair(&w)?).abs());
        }
        let body = t.discretize(3)?;
        let edge = t.boundary()?.discretize(3)?;
        for w in form_panel(seed.wrapping_add(200 + j as u64), n, k - 1, 2, 5, None)? {
            stokes = worst(stokes, (body.pair(&w.ext_d()?)? - edge.pair(&w)?).abs());
        }
    }
    out.push(Check::at_most(SUITE, "boundary of product against a 20-form panel", prod, 1e-8).with_samples(80));
    out.push(Check::at_most(SUITE, "discrete stokes on polynomial forms", stokes, 1e-10).with_samples(20));
    Ok(out)
}

/// `M((Φ_t)_* T) ≤ (sup |DΦ_t|)^k M(T)` over seeded chains and catalog fields.
pub fn pushforward_mass_bounds(seed: u64, chains: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "currents";
    let mut rng = rng_for(seed, 5);
    let mut ratio = 0.0;
    let mut count = 0;
    for (_, spec) in catalog() {
        let b = spec.build()?;
        for i in 0..chains {
            let k = rng.gen_range(0..=2);
            let p = random_chain(seed.wrapping_mul(7919).wrapping_add(i as u64), 2, k, 4)?;
            let t = p.discretize(3)?;
            if t.is_empty() {
                continue;
            }
            let time = rng.gen_range(-1.0..1.0);
            let (pushed, stats) = t.pushforward_flow_stats(&b, time, 1e-10)?;
            let bound = stats.max_jacobian_norm.powi(k as i32) * t.mass();
            if bound > 0.0 {
                ratio = worst(ratio, pushed.mass() / bound);
                count += 1;
            }
        }
    }
    Ok(vec![Check::at_most(SUITE, "pushforward mass over the jacobian bound", ratio, 1.0 + 1e-6).with_samples(count)])
}

fn bump_at(center: [f64; 2], r_in: f64, r_out: f64) -> Result<Bump> {
    Bump::new(center.to_vec(), r_in, r_out)
}

/// Small versions of the transport checks on a seeded off-center segment
/// under rotation.
pub fn transport_checks(seed: u64) -> Result<Vec<Check>> {
    const SUITE: &str = "transport";
    let mut rng = rng_for(seed, 6);
    let mut out = Vec::new();
    let b = VectorField::rotation(2, 1.0, [0, 1], 2.0)?;
    let a = [rng.gen_range(0.3..0.6), rng.gen_range(-0.2..0.2)];
    let e = [a[0] + rng.gen_range(0.3..0.5), a[1] + rng.gen_range(0.1..0.3)];
    let seg = PolyhedralCurrent::segment(&a, &e, 1.0)?;
    let grid = uniform_grid(0.0, 1.0, 200);
    let fam = solve_gte(&seg, &b, &grid, &SolveOptions { levels: 3, ..SolveOptions::default() })?;

    let bump = bump_at([0.3, 0.2], 0.4, 1.4)?;
    let forms = form_panel(seed, 2, 1, 2, 4, Some(bump.clone()))?;
    let mut res = 0.0;
    for (psi, w) in time_tests(4)?.iter().zip(&forms) {
        res = worst(res, weak_residual(&fam, &b, psi, w)?.abs());
    }
    out.push(Check::at_most(SUITE, "weak residual of the pushforward family", res, 1e-4).with_samples(4));

    let coarse: Vec<usize> = (0..=20).map(|i| i * 10).collect();
    let sub = SolutionFamily::external(
        coarse.iter().map(|&i| fam.grid[i]).collect(),
        coarse.iter().map(|&i| fam.currents[i].clone()).collect(),
        coarse.iter().map(|&i| fam.boundaries[i].clone()).collect(),
    )?;
    out.push(Check::at_most(SUITE, "constancy of pulled-back pairings", constancy_diagnostic(&sub, &b, &forms, 1e-10)?, 1e-5));
    let frozen = SolutionFamily::frozen(sub.grid.clone(), sub.currents[0].clone(), sub.boundaries[0].clone())?;
    out.push(Check::at_least(SUITE, "frozen family breaks constancy", constancy_diagnostic(&frozen, &b, &forms, 1e-10)?, 1e-2));

    let zero = VectorField::zero(2)?;
    let mut lie = 0.0;
    for w in &forms {
        lie = worst(lie, lie_pair(&fam.currents[0], &fam.boundaries[0], &zero, w)?.abs());
    }
    out.push(Check::at_most(SUITE, "lie derivative along the zero field", lie, 0.0).with_samples(forms.len()));

    let shear = VectorField::shear(2, 1.0, 1, 0, 3.0)?;
    let vertical = PolyhedralCurrent::segment(&[a[0], -0.5], &[a[0], 0.5], 1.0)?;
    let sfam = solve_gte(&vertical, &shear, &uniform_grid(0.0, 1.0, 10), &SolveOptions::default())?;
    let mut curve = 0.0;
    for (t, c) in sfam.grid.iter().zip(&sfam.currents) {
        curve = worst(curve, (c.mass() - (1.0 + t * t).sqrt()).abs());
    }
    out.push(Check::at_most(SUITE, "shear mass curve", curve, 1e-6).with_samples(sfam.grid.len()));
    out.push(Check::at_least(SUITE, "integral weights survive transport", if fam.integral { 1.0 } else { 0.0 }, 1.0));
    Ok(out)
}

/// Small versions of the continuity checks: a lattice measure under rotation.
pub fn continuity_checks(seed: u64) -> Result<Vec<Check>> {
    const SUITE: &str = "continuity";
    let mut rng = rng_for(seed, 7);
    let mut out = Vec::new();
    let b = VectorField::rotation(2, 1.0, [0, 1], 1.5)?;
    let center = [rng.gen_range(0.2..0.5), rng.gen_range(-0.2..0.2)];
    let blob = bump_at(center, 0.0, 0.35)?;
    let mu = lattice_particles(&blob, &[-1.0, -1.0], &[1.0, 1.0], 1.0 / 32.0)?;
    let fam = MeasureFamily::pushforward(&mu, &b, &uniform_grid(0.0, 1.0, 20), 1e-10)?;

    let panel = form_panel(seed, 2, 0, 2, 4, Some(bump_at([0.3, 0.2], 0.0, 0.8)?))?;
    out.push(Check::at_most(SUITE, "pulled-back measures are constant", measure_constancy(&fam, &b, &panel, 1e-10)?, 1e-6));
    let alpha = TimeTest::bump(0.2, 0.8, 0.0)?;
    let flowed = flowed_test_residuals(&fam, &b, &alpha, &panel, 0.0, 1e-10)?.into_iter().fold(0.0, |a, r| worst(a, r.abs()));
    out.push(Check::at_most(SUITE, "flowed test residual", flowed, 1e-6).with_samples(panel.len()));

    let moved = push_measure(&mu, &b, 0.5, 1e-10)?;
    out.push(Check::at_most(SUITE, "pushforward conserves mass", (moved.total_mass() - mu.total_mass()).abs(), 1e-12));

    let frozen = MeasureFamily::frozen(fam.grid.clone(), mu.clone())?;
    out.push(Check::at_least(SUITE, "frozen measure breaks constancy", measure_constancy(&frozen, &b, &panel, 1e-10)?, 1e-3));

    // the residual is linear in the family
    let psi = tensor_form(TimeForm::Function(alpha.clone()), panel[0].clone())?;
    let other = MeasureFamily::pushforward(&mu.scale(-0.5), &b, &fam.grid, 1e-10)?;
    let sum = fam.sum(&other)?;
    let r = |f: &MeasureFamily| gte_core::continuity::continuity_residual(f, &b, &psi);
    let lin = (r(&sum)? - r(&fam)? - r(&other)?).abs();
    out.push(Check::at_most(SUITE, "residual is linear in the family", lin, 1e-12));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_tests_sit_on_tenths() {
        for psi in time_tests(10).unwrap() {
            let (a, b) = psi.support();
            assert!(((a * 10.0).round() - a * 10.0).abs() < 1e-12);
            assert!(((b * 10.0).round() - b * 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_mass_approximates_the_integral() {
        let blob = Bump::new(vec![0.0, 0.0], 0.0, 0.5).unwrap();
        let fine = lattice_particles(&blob, &[-1.0, -1.0], &[1.0, 1.0], 1.0 / 128.0).unwrap();
        let coarse = lattice_particles(&blob, &[-1.0, -1.0], &[1.0, 1.0], 1.0 / 64.0).unwrap();
        assert!((fine.total_mass() - coarse.total_mass()).abs() < 1e-3 * fine.total_mass());
        assert!(lattice_particles(&blob, &[0.0], &[1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn suites_are_deterministic() {
        let a = chain_identities(3).unwrap();
        let b = chain_identities(3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|c| c.pass), "{a:?}");
    }
}
