use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Radial cutoff `q(|x - c|)` equal to 1 on the inner ball and 0 outside
/// the outer ball, C² across both spheres.
///
/// The profile is written in `s = |x - c|²` as `1 - S(u)`, with
/// `u = (s - r_in²)/(r_out² - r_in²)` and `S(u) = 10u³ - 15u⁴ + 6u⁵`, so all
/// of its derivatives are polynomial in `s` and the form calculus stays closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    pub r_in: f64,
    pub r_out: f64,
}

impl Bump {
    pub fn new(center: Vec<f64>, r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in >= 0.0 && r_out > r_in && r_out.is_finite()) {
            return Err(invalid(format!("bump radii must satisfy 0 <= r_in < r_out (got {r_in}, {r_out})")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("bump center must be finite"));
        }
        Ok(Bump { center, r_in, r_out })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `j`-th derivative of the profile with respect to `s = |y|²`.
    pub fn profile(&self, s: f64, j: usize) -> f64 {
        let a = self.r_in * self.r_in;
        let b = self.r_out * self.r_out;
        if j == 0 {
            if s <= a {
                return 1.0;
            }
            if s >= b {
                return 0.0;
            }
        } else if s <= a || s >= b {
            return 0.0;
        }
        let w = b - a;
        let u = (s - a) / w;
        let ds = match j {
            0 => return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u)),
            1 => 30.0 * u * u * (1.0 + u * (-2.0 + u)),
            2 => 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u)),
            3 => 60.0 + u * (-360.0 + 360.0 * u),
            4 => -360.0 + 720.0 * u,
            5 => 720.0,
            _ => 0.0,
        };
        -ds / w.powi(j as i32)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.profile(self.radius_sq(x), 0)
    }

    pub fn radius_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.radius_sq(x) < self.r_out * self.r_out
    }
}
