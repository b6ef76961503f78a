use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Scalar time profile: a polynomial in `t - a` on `[a, b]`, zero elsewhere.
///
/// Built by [`TimeTest::bump`] it is C¹ with compact support in (0,1); its
/// derivatives (also `TimeTest`s) are only piecewise polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeTest {
    a: f64,
    b: f64,
    /// Coefficients of `(t - a)^m`, lowest degree first.
    coeffs: Vec<f64>,
}

impl TimeTest {
    /// `ψ(t) = ((t-a)(b-t)/h²)² (1 + tilt (t - m)/h)` with `m, h` the midpoint and
    /// half-width of `[a, b]`. Peak height is about 1.
    pub fn bump(a: f64, b: f64, tilt: f64) -> Result<Self> {
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(invalid(format!("time test support [{a}, {b}] must lie inside (0, 1)")));
        }
        let w = b - a;
        let h = 0.5 * w;
        // τ (w - τ) = w τ - τ²
        let base = [0.0, w, -1.0];
        let sq = poly_mul(&base, &base);
        let tilt_poly = [1.0 - tilt, tilt / h];
        let coeffs: Vec<f64> = poly_mul(&sq, &tilt_poly).iter().map(|c| c / (h * h * h * h)).collect();
        Ok(TimeTest { a, b, coeffs })
    }

    /// General profile; `coeffs` are in powers of `t - a` and must vanish at both ends.
    pub fn from_coeffs(a: f64, b: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(invalid(format!("time test support [{a}, {b}] must lie inside (0, 1)")));
        }
        let t = TimeTest { a, b, coeffs };
        let scale = t.coeffs.iter().map(|c| c.abs()).fold(1.0, f64::max);
        let end = poly_eval(&t.coeffs, b - a);
        if t.coeffs.first().copied().unwrap_or(0.0) != 0.0 || end.abs() > 1e-12 * scale {
            return Err(invalid("time test must vanish at both ends of its support"));
        }
        Ok(t)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.a || t > self.b {
            return 0.0;
        }
        poly_eval(&self.coeffs, t - self.a)
    }

    pub fn derivative(&self) -> TimeTest {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(m, c)| m as f64 * c).collect();
        TimeTest { a: self.a, b: self.b, coeffs }
    }

    /// Value of `ψ'` at `t`.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        if t < self.a || t > self.b {
            return 0.0;
        }
        let tau = t - self.a;
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (m, c)| acc * tau + m as f64 * c)
    }

    /// `∫ ψ' dt` in closed form: ψ(b) - ψ(a).
    pub fn integral_of_derivative(&self) -> f64 {
        poly_eval(&self.coeffs, self.b - self.a) - self.coeffs.first().copied().unwrap_or(0.0)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, x| acc * t + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_profile_properties() {
        let psi = TimeTest::bump(0.25, 0.75, 0.3).unwrap();
        assert_eq!(psi.eval(0.1), 0.0);
        assert!(psi.eval(0.25).abs() < 1e-15);
        assert!(psi.eval(0.75).abs() < 1e-14);
        assert!(psi.eval_derivative(0.25).abs() < 1e-14);
        assert!(psi.eval_derivative(0.75).abs() < 1e-13);
        assert!((psi.eval(0.5) - 1.0).abs() < 1e-14);
        assert!(psi.integral_of_derivative().abs() <= 1e-14);
        let d = psi.derivative();
        let h = 1e-6;
        let fd = (psi.eval(0.4 + h) - psi.eval(0.4 - h)) / (2.0 * h);
        assert!((fd - d.eval(0.4)).abs() < 1e-6);
        assert_eq!(d.eval(0.4), psi.eval_derivative(0.4));
    }

    #[test]
    fn rejects_bad_support() {
        assert!(TimeTest::bump(0.0, 0.5, 0.0).is_err());
        assert!(TimeTest::bump(0.5, 0.5, 0.0).is_err());
        assert!(TimeTest::from_coeffs(0.2, 0.4, vec![1.0]).is_err());
    }
}
