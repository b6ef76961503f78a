//! Brute-force estimates of comass and mass that share no code with the
//! library engines beyond pairing and wedge.

use gte_core::exterior::{pair, wedge_columns, KCovector, KVector};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Maximizes `g` by random perturbation of size `step` around the incumbent,
/// halving the step after a round of perturbations without a gain.
fn climb<T: Clone, R: Rng>(
    rng: &mut R,
    mut best: T,
    mut best_val: f64,
    g: impl Fn(&T) -> f64,
    perturb: impl Fn(&mut R, &T, f64) -> T,
) -> f64 {
    let mut step = 0.1;
    let tries = 40;
    while step > 1e-8 {
        let mut improved = false;
        for _ in 0..tries {
            let cand = perturb(rng, &best, step);
            let v = g(&cand);
            if v > best_val {
                best = cand;
                best_val = v;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_val
}

/// Comass as the best `|<v_1∧…∧v_k, α>|` over `samples` random orthonormal
/// frames, refined by a local random search. A lower bound.
pub fn sampled_comass<R: Rng>(rng: &mut R, alpha: &KCovector, samples: usize) -> f64 {
    let (n, k) = (alpha.dim(), alpha.grade());
    if k == 0 {
        return alpha.coeffs()[0].abs();
    }
    let value = |f: &DMatrix<f64>| pair(&wedge_columns(f), alpha).map(f64::abs).unwrap_or(f64::NAN);
    let mut best = gaussian_matrix(rng, n, k).qr().q();
    let mut best_val = value(&best);
    for _ in 1..samples {
        let f = gaussian_matrix(rng, n, k).qr().q();
        let v = value(&f);
        if v > best_val {
            best = f;
            best_val = v;
        }
    }
    climb(rng, best, best_val, value, |rng, f, step| (f + gaussian_matrix(rng, n, k) * step).qr().q())
}

/// Mass as `1 / min { comass(α) : <η, α> = 1 }`: the best of `samples`
/// random covectors, then `iterations` projected subgradient steps on the
/// comass, which is convex. `comass` returns the value and a unit simple
/// vector `ξ` with `|<ξ, α>|` equal to it. A lower bound whenever `comass`
/// does not underestimate.
pub fn sampled_mass<R: Rng>(
    rng: &mut R,
    eta: &KVector,
    samples: usize,
    iterations: usize,
    comass: impl Fn(&KCovector) -> (f64, KVector),
) -> f64 {
    let (n, k) = (eta.dim(), eta.grade());
    let e: KCovector = eta.dual();
    let e2 = eta.norm() * eta.norm();
    if e2 == 0.0 {
        return 0.0;
    }
    let len = eta.coeffs().len();
    let mut best: Option<(f64, KCovector)> = None;
    for _ in 0..samples {
        let a = KCovector::from_coeffs(n, k, (0..len).map(|_| rng.sample(StandardNormal)).collect()).expect("dimensions come from eta");
        let p = pair(eta, &a).unwrap_or(f64::NAN);
        if p.abs() < 1e-12 {
            continue;
        }
        let a = a.scale(1.0 / p);
        let c = comass(&a).0;
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, a));
        }
    }
    let Some((mut best_c, mut a)) = best else { return 0.0 };
    let step0 = 0.1 * a.norm();
    for it in 1..=iterations {
        let (c, xi) = comass(&a);
        best_c = best_c.min(c);
        let sign = pair(&xi, &a).unwrap_or(0.0).signum();
        // subgradient sign·ξ, projected onto the hyperplane <η, ·> = 0
        let mut g: KCovector = xi.dual().scale(sign);
        let along = pair(eta, &g).unwrap_or(0.0) / e2;
        g.axpy(-along, &e).expect("same shape");
        let gn = g.norm();
        if gn <= 1e-12 {
            // ξ is parallel to η, so no direction in the hyperplane lowers the comass
            break;
        }
        a.axpy(-step0 / (it as f64).sqrt() / gn, &g).expect("same shape");
        let p = pair(eta, &a).unwrap_or(f64::NAN);
        a = a.scale(1.0 / p);
    }
    1.0 / best_c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simple_covector_oracle_hits_the_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = KCovector::basis_element(3, &[0, 2]).unwrap().scale(2.5);
        assert!((sampled_comass(&mut rng, &a, 200) - 2.5).abs() <= 1e-6);
    }

    #[test]
    fn mass_oracle_is_a_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eta = KVector::basis_element(3, &[0, 1]).unwrap().scale(3.0);
        // the Euclidean norm is the exact comass for grade 2 in R^3
        let euclid = |a: &KCovector| {
            let c = a.norm();
            (c, a.dual::<gte_core::exterior::Vector>().scale(1.0 / c))
        };
        let m = sampled_mass(&mut rng, &eta, 100, 2000, euclid);
        assert!((3.0 - 1e-6..=3.0 + 1e-12).contains(&m), "{m}");
    }
}
