use crate::currents::DiscreteCurrent;
use crate::error::{invalid, Error, Result};
use crate::flow::VectorField;
use crate::forms::{PolyForm, TimeTest};
use crate::numeric::{compensated_sum, time_weights, TimeRule};

use super::family::SolutionFamily;

/// Grid points required inside the support of a time test.
pub const MIN_SUPPORT_POINTS: usize = 8;

/// `<b ∧ T, ω>`, zero when `b ∧ T` would exceed the ambient grade.
pub(crate) fn wedge_pair(t: &DiscreteCurrent, b: &VectorField, w: &PolyForm) -> Result<f64> {
    if t.is_empty() || t.grade() == t.dim() {
        return Ok(0.0);
    }
    t.wedge_field(b)?.pair(w)
}

/// `<𝓛_b T, ω> = -<b ∧ ∂T, ω> - <b ∧ T, dω>`.
pub fn lie_pair(t: &DiscreteCurrent, dt: &DiscreteCurrent, b: &VectorField, w: &PolyForm) -> Result<f64> {
    if w.grade() != t.grade() {
        return Err(Error::GradeMismatch { expected: t.grade(), found: w.grade() });
    }
    let dw = if t.grade() < t.dim() { Some(w.ext_d()?) } else { None };
    lie_pair_with(t, dt, b, w, dw.as_ref())
}

fn lie_pair_with(t: &DiscreteCurrent, dt: &DiscreteCurrent, b: &VectorField, w: &PolyForm, dw: Option<&PolyForm>) -> Result<f64> {
    let interior = match dw {
        Some(dw) => wedge_pair(t, b, dw)?,
        None => 0.0,
    };
    let edge = if dt.is_empty() { 0.0 } else { wedge_pair(dt, b, w)? };
    Ok(-edge - interior)
}

fn check_coverage(grid: &[f64], psi: &TimeTest) -> Result<()> {
    let (a, b) = psi.support();
    if grid[0] > a || grid[grid.len() - 1] < b {
        return Err(invalid(format!("time grid does not cover the support [{a}, {b}]")));
    }
    let inside = grid.iter().filter(|t| (a..=b).contains(*t)).count();
    if inside < MIN_SUPPORT_POINTS {
        return Err(invalid(format!("only {inside} grid points inside the support [{a}, {b}]; need {MIN_SUPPORT_POINTS}")));
    }
    Ok(())
}

/// Weak GTE residual with composite Simpson in time.
pub fn weak_residual(f: &SolutionFamily, b: &VectorField, psi: &TimeTest, w: &PolyForm) -> Result<f64> {
    weak_residual_with(f, b, psi, w, TimeRule::Simpson)
}

/// `∫ ψ'(t) <T_t, ω> + ψ(t) [<b ∧ T_t, dω> + <b ∧ ∂T_t, ω>] dt` by `rule` on the family grid.
pub fn weak_residual_with(f: &SolutionFamily, b: &VectorField, psi: &TimeTest, w: &PolyForm, rule: TimeRule) -> Result<f64> {
    if w.grade() != f.grade() {
        return Err(Error::GradeMismatch { expected: f.grade(), found: w.grade() });
    }
    check_coverage(&f.grid, psi)?;
    let weights = time_weights(&f.grid, rule)?;
    let dw = if f.grade() < f.dim() { Some(w.ext_d()?) } else { None };
    let mut terms = Vec::with_capacity(f.len());
    for (i, &t) in f.grid.iter().enumerate() {
        let (p, dp) = (psi.eval(t), psi.eval_derivative(t));
        if p == 0.0 && dp == 0.0 {
            continue;
        }
        let mut g = 0.0;
        if dp != 0.0 {
            g += dp * f.currents[i].pair(w)?;
        }
        if p != 0.0 {
            g -= p * lie_pair_with(&f.currents[i], &f.boundaries[i], b, w, dw.as_ref())?;
        }
        terms.push(weights[i] * g);
    }
    Ok(compensated_sum(terms))
}

/// `(<T_{t+h}, ω> - <T_{t-h}, ω>) / 2h + <𝓛_b T_t, ω>` at interior grid index `i`
/// with `h` the grid spacing around it.
pub fn centered_defect(f: &SolutionFamily, i: usize, b: &VectorField, w: &PolyForm) -> Result<f64> {
    if i == 0 || i + 1 >= f.len() {
        return Err(invalid("centered difference needs an interior grid index"));
    }
    let h = 0.5 * (f.grid[i + 1] - f.grid[i - 1]);
    let diff = (f.currents[i + 1].pair(w)? - f.currents[i - 1].pair(w)?) / (2.0 * h);
    Ok(diff + lie_pair(&f.currents[i], &f.boundaries[i], b, w)?)
}
