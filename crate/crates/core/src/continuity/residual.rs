use crate::error::{invalid, Error, Result};
use crate::flow::{advect, VectorField};
use crate::forms::{FormField, PolyForm, SpaceTimeForm, TimeTest};
use crate::numeric::{compensated_sum, time_weights, TimeRule};

use super::particles::{check_function, push_measure, MeasureFamily, ParticleMeasure};

fn eval0<F: FormField + ?Sized>(f: &F, x: &[f64]) -> f64 {
    let mut v = [0.0];
    f.eval_into(x, &mut v);
    v[0]
}

fn check_cover(grid: &[f64], support: (f64, f64)) -> Result<()> {
    if grid[0] > support.0 || grid[grid.len() - 1] < support.1 {
        return Err(invalid(format!("time grid does not cover the support [{}, {}]", support.0, support.1)));
    }
    Ok(())
}

/// `∫∫ (∂_t ψ + b · ∇ψ) dμ_t dt`, Simpson in time and exact over the particles.
/// `psi` is a space-time function (grade 0) on R^{1+d}.
pub fn continuity_residual(f: &MeasureFamily, b: &VectorField, psi: &SpaceTimeForm) -> Result<f64> {
    continuity_residual_with(f, b, psi, TimeRule::Simpson)
}

pub fn continuity_residual_with(f: &MeasureFamily, b: &VectorField, psi: &SpaceTimeForm, rule: TimeRule) -> Result<f64> {
    let d = f.measures[0].dim();
    if psi.space_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi.space_dim() });
    }
    if psi.grade() != 0 {
        return Err(Error::GradeMismatch { expected: 0, found: psi.grade() });
    }
    if let Some(s) = psi.time_support() {
        check_cover(&f.grid, s)?;
    }
    let dpsi = psi.ext_d()?;
    let weights = time_weights(&f.grid, rule)?;
    let mut terms = Vec::with_capacity(f.grid.len());
    for ((&t, &w), mu) in f.grid.iter().zip(&weights).zip(&f.measures) {
        let inner = mu.integrate(|x| {
            let mut p = Vec::with_capacity(d + 1);
            p.push(t);
            p.extend_from_slice(x);
            let mut c = vec![0.0; d + 1];
            dpsi.eval_into(&p, &mut c);
            let mut v = vec![0.0; d];
            b.eval_into(x, &mut v);
            c[0] + c[1..].iter().zip(&v).map(|(a, bv)| a * bv).sum::<f64>()
        });
        terms.push(w * inner);
    }
    Ok(compensated_sum(terms))
}

/// Field used to build the flowed test function: `b` itself, or its
/// mollification at scale `eps > 0`.
fn test_field(b: &VectorField, eps: f64) -> Result<VectorField> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(invalid("mollification scale must be nonnegative"));
    }
    if eps == 0.0 {
        Ok(b.clone())
    } else {
        b.mollify(eps)
    }
}

/// `(Φ_{-t})_# μ_t` at every grid time, with Φ the flow of `b` or of `b_ε`.
/// Independent of the test function, so panels share one pullback.
pub fn pulled_back_measures(f: &MeasureFamily, b: &VectorField, eps: f64, tol: f64) -> Result<Vec<ParticleMeasure>> {
    let field = test_field(b, eps)?;
    f.grid.iter().zip(&f.measures).map(|(&t, mu)| push_measure(mu, &field, -t, tol)).collect()
}

/// `<(Φ_{-t})_# μ_t, β>` at every grid time, with Φ the flow of `b` or of `b_ε`.
pub fn pulled_back_measure_pairings(f: &MeasureFamily, b: &VectorField, beta: &PolyForm, eps: f64, tol: f64) -> Result<Vec<f64>> {
    check_function(beta, f.measures[0].dim())?;
    pulled_back_measures(f, b, eps, tol)?.iter().map(|mu| mu.pair(beta)).collect()
}

/// `∫ α'(t) <(Φ_{-t})_# μ_t, β> dt` (Simpson), the residual against the flowed
/// test function `ψ(t, x) = α(t) β(Φ_{-t}(x))`.
pub fn flowed_test_residual(f: &MeasureFamily, b: &VectorField, alpha: &TimeTest, beta: &PolyForm, eps: f64, tol: f64) -> Result<f64> {
    Ok(flowed_test_residuals(f, b, alpha, std::slice::from_ref(beta), eps, tol)?[0])
}

/// [`flowed_test_residual`] for every form of a panel, pulling back once.
pub fn flowed_test_residuals(f: &MeasureFamily, b: &VectorField, alpha: &TimeTest, panel: &[PolyForm], eps: f64, tol: f64) -> Result<Vec<f64>> {
    check_cover(&f.grid, alpha.support())?;
    for beta in panel {
        check_function(beta, f.measures[0].dim())?;
    }
    let weights = time_weights(&f.grid, TimeRule::Simpson)?;
    let pulled = pulled_back_measures(f, b, eps, tol)?;
    panel
        .iter()
        .map(|beta| {
            let m = pulled.iter().map(|mu| mu.pair(beta)).collect::<Result<Vec<f64>>>()?;
            Ok(compensated_sum(f.grid.iter().zip(&weights).zip(&m).map(|((&t, &w), v)| w * alpha.eval_derivative(t) * v)))
        })
        .collect()
}

/// `max_i |<(Φ_{-t_i})_# μ_{t_i}, β> - <μ_{t_0}, β>|` over the panel.
pub fn measure_constancy(f: &MeasureFamily, b: &VectorField, panel: &[PolyForm], tol: f64) -> Result<f64> {
    for beta in panel {
        check_function(beta, f.measures[0].dim())?;
    }
    let pulled = pulled_back_measures(f, b, 0.0, tol)?;
    let mut worst = 0.0f64;
    for beta in panel {
        let m = pulled.iter().map(|mu| mu.pair(beta)).collect::<Result<Vec<f64>>>()?;
        worst = m.iter().map(|v| (v - m[0]).abs()).fold(worst, f64::max);
    }
    Ok(worst)
}

/// `ψ(t, x) = α(t) β(Φ_{-t}(x))`.
pub fn flowed_test_value(b: &VectorField, alpha: &TimeTest, beta: &PolyForm, t: f64, x: &[f64], tol: f64) -> Result<f64> {
    let a = alpha.eval(t);
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(a * eval0(beta, &advect(b, x, -t, tol)?.endpoint))
}

/// `|D_h ψ(t, x) - α'(t) β(Φ_{-t}(x))|` where `D_h` is the centered difference
/// of ψ along `(1, b(x))` with step `h`.
pub fn directional_derivative_defect(b: &VectorField, alpha: &TimeTest, beta: &PolyForm, t: f64, x: &[f64], h: f64, tol: f64) -> Result<f64> {
    check_function(beta, b.dim())?;
    if x.len() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: x.len() });
    }
    let v = b.eval(x);
    let fwd: Vec<f64> = x.iter().zip(&v).map(|(a, c)| a + h * c).collect();
    let bwd: Vec<f64> = x.iter().zip(&v).map(|(a, c)| a - h * c).collect();
    let fd = (flowed_test_value(b, alpha, beta, t + h, &fwd, tol)? - flowed_test_value(b, alpha, beta, t - h, &bwd, tol)?) / (2.0 * h);
    let claim = alpha.eval_derivative(t) * eval0(beta, &advect(b, x, -t, tol)?.endpoint);
    Ok((fd - claim).abs())
}
