use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::numeric::distance;

use super::field::VectorField;
use super::integrate::{advect, advect_with_jacobian};

/// `|Φ_t(Φ_s(x)) - Φ_{t+s}(x)|`.
pub fn semigroup_defect(b: &VectorField, x: &[f64], s: f64, t: f64, tol: f64) -> Result<f64> {
    let mid = advect(b, x, s, tol)?.endpoint;
    let two = advect(b, &mid, t, tol)?.endpoint;
    let one = advect(b, x, s + t, tol)?.endpoint;
    Ok(distance(&two, &one))
}

/// `|Φ_h(x) - x - h b(x)|`, integrated with a tolerance far below `h²`.
pub fn taylor_defect(b: &VectorField, x: &[f64], h: f64) -> Result<f64> {
    if h == 0.0 {
        return Err(invalid("taylor defect needs h != 0"));
    }
    let tol = (1e-8 * h * h).min(1e-12);
    let end = advect(b, x, h, tol)?.endpoint;
    let v = b.eval(x);
    Ok(end.iter().zip(x).zip(&v).map(|((e, xi), vi)| (e - xi - h * vi).powi(2)).sum::<f64>().sqrt())
}

/// `|DΦ_t(x)[b(x)] - b(Φ_t(x))|`.
pub fn flow_invariance_defect(b: &VectorField, x: &[f64], t: f64, tol: f64) -> Result<f64> {
    let r = advect_with_jacobian(b, x, t, tol)?;
    let j = r.jacobian.expect("jacobian requested");
    let bx = nalgebra::DVector::from_vec(b.eval(x));
    let lhs = &j * bx;
    let rhs = b.eval(&r.endpoint);
    Ok(lhs.iter().zip(&rhs).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt())
}

/// The space-time map `Ψ(t, x) = (t, Φ_t(x))` and its Jacobian
/// `[[1, 0], [b(Φ_t x), DΦ_t(x)]]`.
pub fn spacetime_forward(b: &VectorField, t: f64, x: &[f64], tol: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let r = advect_with_jacobian(b, x, t, tol)?;
    let v = b.eval(&r.endpoint);
    Ok(assemble(t, &r.endpoint, &v, &r.jacobian.expect("jacobian requested"), 1.0))
}

/// `Ψ^{-1}(s, y) = (s, Φ_{-s}(y))` with Jacobian
/// `[[1, 0], [-b(Φ_{-s} y), DΦ_{-s}(y)]]`.
pub fn spacetime_inverse(b: &VectorField, s: f64, y: &[f64], tol: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let r = advect_with_jacobian(b, y, -s, tol)?;
    let v = b.eval(&r.endpoint);
    Ok(assemble(s, &r.endpoint, &v, &r.jacobian.expect("jacobian requested"), -1.0))
}

pub(crate) fn assemble(t: f64, x: &[f64], v: &[f64], j: &DMatrix<f64>, sign: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = x.len();
    let mut point = Vec::with_capacity(n + 1);
    point.push(t);
    point.extend_from_slice(x);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = 1.0;
    for r in 0..n {
        m[(r + 1, 0)] = sign * v[r];
        for c in 0..n {
            m[(r + 1, c + 1)] = j[(r, c)];
        }
    }
    (point, m)
}
