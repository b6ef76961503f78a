use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multivariate polynomial with real coefficients, keyed by exponent tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u8>, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(n, &vec![0; n], c).expect("zero exponents have the right length")
    }

    /// The coordinate function `x_i` (zero-based).
    pub fn variable(n: usize, i: usize) -> Self {
        let mut e = vec![0u8; n];
        e[i] = 1;
        Self::monomial(n, &e, 1.0).expect("exponent length is n")
    }

    pub fn monomial(n: usize, exponents: &[u8], c: f64) -> Result<Self> {
        if exponents.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: exponents.len() });
        }
        let mut p = Self::zero(n);
        if c != 0.0 {
            p.terms.insert(exponents.to_vec(), c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&d| d as usize).sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    fn add_term(&mut self, e: &[u8], c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.get_mut(e) {
            Some(v) => {
                *v += c;
                if *v == 0.0 {
                    self.terms.remove(e);
                }
            }
            None => {
                self.terms.insert(e.to_vec(), c);
            }
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &Polynomial) {
        debug_assert_eq!(self.n, other.n);
        for (e, &c) in &other.terms {
            self.add_term(e, s * c);
        }
    }

    pub fn scale(mut self, s: f64) -> Self {
        if s == 0.0 {
            self.terms.clear();
        } else {
            self.terms.values_mut().for_each(|c| *c *= s);
        }
        self
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.n, other.n);
        let mut out = Polynomial::zero(self.n);
        let mut e = vec![0u8; self.n];
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                for i in 0..self.n {
                    e[i] = ea[i] + eb[i];
                }
                out.add_term(&e, ca * cb);
            }
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            out.add_term(&d, c * e[i] as f64);
        }
        out
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, &c)| e.iter().zip(y).fold(c, |acc, (&d, &v)| acc * powu(v, d)))
            .sum()
    }

    /// The polynomial `y ↦ p(y + shift)`.
    pub fn translate(&self, shift: &[f64]) -> Polynomial {
        debug_assert_eq!(shift.len(), self.n);
        if shift.iter().all(|&s| s == 0.0) {
            return self.clone();
        }
        let mut out = Polynomial::zero(self.n);
        for (e, &c) in &self.terms {
            let mut prod = Polynomial::constant(self.n, c);
            for (i, &d) in e.iter().enumerate() {
                if d == 0 {
                    continue;
                }
                // (y_i + s)^d
                let mut factor = Polynomial::zero(self.n);
                for m in 0..=d {
                    let mut em = vec![0u8; self.n];
                    em[i] = m;
                    factor.add_term(&em, binom(d, m) * powu(shift[i], d - m));
                }
                prod = prod.mul(&factor);
            }
            out.add_scaled(1.0, &prod);
        }
        out
    }
}

fn binom(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[inline]
pub(crate) fn powu(v: f64, d: u8) -> f64 {
    match d {
        0 => 1.0,
        1 => v,
        2 => v * v,
        3 => v * v * v,
        _ => v.powi(d as i32),
    }
}
