//! Quadrature rules on the reference k-simplex, in barycentric coordinates
//! with weights normalized to sum to 1.

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexRule {
    k: usize,
    /// `k + 1` barycentric coordinates per node.
    bary: Vec<f64>,
    weights: Vec<f64>,
}

impl SimplexRule {
    pub fn grade(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.bary.chunks(self.k + 1).zip(self.weights.iter().copied())
    }
}

pub const SUPPORTED_ORDERS: [usize; 4] = [1, 2, 3, 5];

/// Rule exact for polynomials of degree ≤ `q` on the k-simplex.
pub fn simplex_rule(k: usize, q: usize) -> Result<SimplexRule> {
    if !SUPPORTED_ORDERS.contains(&q) {
        return Err(Error::UnsupportedOrder { order: q });
    }
    let rule = match k {
        0 => SimplexRule { k, bary: vec![1.0], weights: vec![1.0] },
        1 => {
            let m = match q {
                1 => 1,
                2 | 3 => 2,
                _ => 3,
            };
            let (x, w) = gauss_legendre(m);
            let mut bary = Vec::with_capacity(2 * m);
            for xi in &x {
                let s = 0.5 * (xi + 1.0);
                bary.extend_from_slice(&[1.0 - s, s]);
            }
            SimplexRule { k, bary, weights: w.iter().map(|w| 0.5 * w).collect() }
        }
        2 => triangle_rule(q),
        _ => collapsed_rule(k, q),
    };
    Ok(rule)
}

fn permutations3(a: f64, b: f64, c: f64) -> Vec<[f64; 3]> {
    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

fn triangle_rule(q: usize) -> SimplexRule {
    let mut bary = Vec::new();
    let mut weights = Vec::new();
    match q {
        1 => {
            bary.extend_from_slice(&[1.0 / 3.0; 3]);
            weights.push(1.0);
        }
        2 => {
            for i in 0..3 {
                let mut p = [1.0 / 6.0; 3];
                p[i] = 2.0 / 3.0;
                bary.extend_from_slice(&p);
                weights.push(1.0 / 3.0);
            }
        }
        3 => {
            for p in permutations3(0.659027622374092, 0.231933368553031, 0.109039009072877) {
                bary.extend_from_slice(&p);
                weights.push(1.0 / 6.0);
            }
        }
        _ => {
            let r = 15f64.sqrt();
            bary.extend_from_slice(&[1.0 / 3.0; 3]);
            weights.push(9.0 / 40.0);
            for (a, w) in [((6.0 - r) / 21.0, (155.0 - r) / 1200.0), ((6.0 + r) / 21.0, (155.0 + r) / 1200.0)] {
                let b = 1.0 - 2.0 * a;
                for i in 0..3 {
                    let mut p = [a; 3];
                    p[i] = b;
                    bary.extend_from_slice(&p);
                    weights.push(w);
                }
            }
        }
    }
    SimplexRule { k: 2, bary, weights }
}

/// Collapsed-coordinate product rule: Gauss–Legendre in each cube coordinate
/// mapped onto the simplex, with `ceil((q + k) / 2)` points per axis to absorb
/// the Jacobian factors.
fn collapsed_rule(k: usize, q: usize) -> SimplexRule {
    let m = (q + k).div_ceil(2);
    let (x, w) = gauss_legendre(m);
    let count = m.pow(k as u32);
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let mut bary = Vec::with_capacity(count * (k + 1));
    let mut weights = Vec::with_capacity(count);
    let mut coords = vec![0.0; k];
    for flat in 0..count {
        let mut r = flat;
        let mut weight = fact;
        let mut remaining = 1.0;
        for i in 0..k {
            let a = r % m;
            r /= m;
            let u = 0.5 * (x[a] + 1.0);
            coords[i] = remaining * u;
            weight *= 0.5 * w[a] * (1.0 - u).powi((k - 1 - i) as i32);
            remaining *= 1.0 - u;
        }
        let last = 1.0 - coords.iter().sum::<f64>();
        bary.push(last);
        bary.extend_from_slice(&coords);
        weights.push(weight);
    }
    SimplexRule { k, bary, weights }
}
