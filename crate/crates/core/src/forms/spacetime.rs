use crate::error::{Error, Result};
use crate::exterior::{basis, check_dims, rank, KCovector, MultiIndex};
use crate::numeric::binomial;

use super::poly_form::PolyForm;
use super::time::TimeTest;
use super::FormField;

/// The time factor of a tensor form: a function `f(t)` or a 1-form `f(t) dt`.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeForm {
    Function(TimeTest),
    Differential(TimeTest),
}

impl TimeForm {
    pub fn grade(&self) -> usize {
        match self {
            TimeForm::Function(_) => 0,
            TimeForm::Differential(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct TensorTerm {
    scale: f64,
    time: TimeForm,
    space: PolyForm,
}

/// Finite sum of tensor forms `c · t*α ∧ p*β` on R^{1+d}, where `t` and `p`
/// project onto time and space. Coordinate 0 is time.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeForm {
    d: usize,
    k: usize,
    terms: Vec<TensorTerm>,
}

/// `t*α ∧ p*β`.
pub fn tensor_form(alpha: TimeForm, beta: PolyForm) -> Result<SpaceTimeForm> {
    let d = beta.dim();
    let k = alpha.grade() + beta.grade();
    check_dims(d + 1, k)?;
    Ok(SpaceTimeForm { d, k, terms: vec![TensorTerm { scale: 1.0, time: alpha, space: beta }] })
}

impl SpaceTimeForm {
    pub fn zero(d: usize, k: usize) -> Result<Self> {
        check_dims(d + 1, k)?;
        Ok(SpaceTimeForm { d, k, terms: Vec::new() })
    }

    pub fn space_dim(&self) -> usize {
        self.d
    }

    pub fn grade(&self) -> usize {
        self.k
    }

    /// Smallest interval containing the supports of all time profiles.
    pub fn time_support(&self) -> Option<(f64, f64)> {
        self.terms.iter().fold(None, |acc, term| {
            let (a, b) = match &term.time {
                TimeForm::Function(f) | TimeForm::Differential(f) => f.support(),
            };
            Some(match acc {
                None => (a, b),
                Some((lo, hi)) => (a.min(lo), b.max(hi)),
            })
        })
    }

    pub fn add(mut self, other: SpaceTimeForm) -> Result<SpaceTimeForm> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: other.d });
        }
        if self.k != other.k {
            return Err(Error::GradeMismatch { expected: self.k, found: other.k });
        }
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.scale *= s);
        self
    }

    /// Exterior derivative, term by term:
    /// `d(t*f ∧ p*β) = t*(f' dt) ∧ p*β + t*f ∧ p*dβ` and
    /// `d(t*(f dt) ∧ p*β) = -t*(f dt) ∧ p*dβ`.
    pub fn ext_d(&self) -> Result<SpaceTimeForm> {
        if self.k > self.d {
            return Err(Error::GradeOverflow { grade: self.k + 1, dim: self.d + 1 });
        }
        let mut terms = Vec::new();
        for term in &self.terms {
            let top = term.space.grade() == self.d;
            match &term.time {
                TimeForm::Function(f) => {
                    terms.push(TensorTerm {
                        scale: term.scale,
                        time: TimeForm::Differential(f.derivative()),
                        space: term.space.clone(),
                    });
                    if !top {
                        terms.push(TensorTerm {
                            scale: term.scale,
                            time: TimeForm::Function(f.clone()),
                            space: term.space.ext_d()?,
                        });
                    }
                }
                TimeForm::Differential(f) => {
                    if !top {
                        terms.push(TensorTerm {
                            scale: -term.scale,
                            time: TimeForm::Differential(f.clone()),
                            space: term.space.ext_d()?,
                        });
                    }
                }
            }
        }
        Ok(SpaceTimeForm { d: self.d, k: self.k + 1, terms })
    }

    pub fn eval(&self, point: &[f64]) -> Result<KCovector> {
        if point.len() != self.d + 1 {
            return Err(Error::DimensionMismatch { expected: self.d + 1, found: point.len() });
        }
        let mut out = vec![0.0; binomial(self.d + 1, self.k)];
        self.eval_into(point, &mut out);
        KCovector::from_coeffs(self.d + 1, self.k, out)
    }

    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|c| *c = 0.0);
        let t = point[0];
        let x = &point[1..];
        let n = self.d + 1;
        let mut space = Vec::new();
        for term in &self.terms {
            let (f, dt) = match &term.time {
                TimeForm::Function(f) => (f, false),
                TimeForm::Differential(f) => (f, true),
            };
            let ft = term.scale * f.eval(t);
            if ft == 0.0 {
                continue;
            }
            let kb = term.space.grade();
            space.clear();
            space.resize(binomial(self.d, kb), 0.0);
            term.space.eval_into(x, &mut space);
            for (idx, c) in basis(self.d, kb).iter().zip(&space) {
                if *c == 0.0 {
                    continue;
                }
                // dt ∧ dx_I has index {0} ∪ (I + 1) with sign +1
                let mut target = idx.shifted(1);
                if dt {
                    target = target.union(MultiIndex::single(0));
                }
                out[rank(n, target)] += ft * c;
            }
        }
    }
}

impl FormField for SpaceTimeForm {
    fn dim(&self) -> usize {
        self.d + 1
    }

    fn grade(&self) -> usize {
        self.k
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        SpaceTimeForm::eval_into(self, x, out)
    }
}
