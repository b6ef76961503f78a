use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{advect_times, VectorField};
use crate::forms::FormField;
use crate::numeric::compensated_sum;

/// Nonnegative weighted points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cloud {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Cloud {
    fn len(&self) -> usize {
        self.weights.len()
    }
}

/// A signed measure `Σ w_i δ_{x_i}` kept as a positive and a negative cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleMeasure {
    d: usize,
    positive: Cloud,
    negative: Cloud,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticles {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ParticleMeasure {
    pub fn empty(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("particle measures need d ≥ 1"));
        }
        Ok(ParticleMeasure { d, positive: Cloud::default(), negative: Cloud::default() })
    }

    /// Splits signed weights into the two clouds; zero weights are dropped.
    pub fn new(d: usize, points: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: weights.len() });
        }
        let mut out = Self::empty(d)?;
        for (x, &w) in points.iter().zip(weights) {
            out.push(x, w)?;
        }
        Ok(out)
    }

    pub fn push(&mut self, x: &[f64], w: f64) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.len() });
        }
        if !w.is_finite() || x.iter().any(|c| !c.is_finite()) {
            return Err(invalid("particle data must be finite"));
        }
        let cloud = if w > 0.0 {
            &mut self.positive
        } else if w < 0.0 {
            &mut self.negative
        } else {
            return Ok(());
        };
        cloud.points.extend_from_slice(x);
        cloud.weights.push(w.abs());
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positive(&self) -> &Cloud {
        &self.positive
    }

    pub fn negative(&self) -> &Cloud {
        &self.negative
    }

    /// Signed particles, positive cloud first.
    pub fn particles(&self) -> impl Iterator<Item = (&[f64], f64)> {
        let d = self.d;
        let pos = self.positive.points.chunks(d).zip(self.positive.weights.iter().copied());
        let neg = self.negative.points.chunks(d).zip(self.negative.weights.iter().map(|w| -w));
        pos.chain(neg)
    }

    pub fn total_variation(&self) -> f64 {
        compensated_sum(self.positive.weights.iter().chain(&self.negative.weights).copied())
    }

    /// Signed total mass `Σ w_i`.
    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.particles().map(|(_, w)| w))
    }

    /// `μ(A)` style integral `Σ w_i f(x_i)`.
    pub fn integrate<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> f64 {
        let cloud_sum = |c: &Cloud| -> f64 {
            let terms: Vec<f64> = c.points.par_chunks(self.d).zip(&c.weights).map(|(x, w)| w * f(x)).collect();
            compensated_sum(terms)
        };
        cloud_sum(&self.positive) - cloud_sum(&self.negative)
    }

    /// `<μ, β>` for a 0-form.
    pub fn pair<F: FormField + ?Sized>(&self, beta: &F) -> Result<f64> {
        check_function(beta, self.d)?;
        Ok(self.integrate(|x| {
            let mut v = [0.0];
            beta.eval_into(x, &mut v);
            v[0]
        }))
    }

    /// Formal sum.
    pub fn add(&self, other: &ParticleMeasure) -> Result<ParticleMeasure> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: other.d });
        }
        let mut out = self.clone();
        for (mine, theirs) in [(&mut out.positive, &other.positive), (&mut out.negative, &other.negative)] {
            mine.points.extend_from_slice(&theirs.points);
            mine.weights.extend_from_slice(&theirs.weights);
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> ParticleMeasure {
        let mut out = self.clone();
        out.positive.weights.iter_mut().chain(out.negative.weights.iter_mut()).for_each(|w| *w *= s.abs());
        if s < 0.0 {
            std::mem::swap(&mut out.positive, &mut out.negative);
        }
        out
    }

    /// Moves every point by `f`, keeping weights.
    pub(crate) fn map_points<F: Fn(&[f64]) -> Result<Vec<f64>> + Sync>(&self, f: F) -> Result<ParticleMeasure> {
        let map_cloud = |c: &Cloud| -> Result<Cloud> {
            let moved: Vec<Vec<f64>> = c.points.par_chunks(self.d).map(&f).collect::<Result<_>>()?;
            Ok(Cloud { points: moved.concat(), weights: c.weights.clone() })
        };
        Ok(ParticleMeasure { d: self.d, positive: map_cloud(&self.positive)?, negative: map_cloud(&self.negative)? })
    }

    pub fn to_json(&self) -> Result<String> {
        let (points, weights): (Vec<Vec<f64>>, Vec<f64>) = self.particles().map(|(x, w)| (x.to_vec(), w)).unzip();
        Ok(serde_json::to_string_pretty(&RawParticles { points, weights })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawParticles = serde_json::from_str(s)?;
        let d = raw.points.first().map_or(1, |p| p.len());
        Self::new(d, &raw.points, &raw.weights)
    }
}

pub(crate) fn check_function<F: FormField + ?Sized>(beta: &F, d: usize) -> Result<()> {
    if beta.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: beta.dim() });
    }
    if beta.grade() != 0 {
        return Err(Error::GradeMismatch { expected: 0, found: beta.grade() });
    }
    Ok(())
}

/// `(Φ_t)_# μ`: points advected, weights untouched.
pub fn push_measure(mu: &ParticleMeasure, b: &VectorField, t: f64, tol: f64) -> Result<ParticleMeasure> {
    if b.dim() != mu.d {
        return Err(Error::DimensionMismatch { expected: mu.d, found: b.dim() });
    }
    mu.map_points(|x| Ok(advect_times(b, x, &[t], tol, false)?.pop().expect("one time").endpoint))
}

/// Measures sampled on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureFamily {
    pub grid: Vec<f64>,
    pub measures: Vec<ParticleMeasure>,
}

impl MeasureFamily {
    pub fn new(grid: Vec<f64>, measures: Vec<ParticleMeasure>) -> Result<Self> {
        if grid.is_empty() || grid.len() != measures.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: measures.len() });
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("time grid must be strictly increasing"));
        }
        Ok(MeasureFamily { grid, measures })
    }

    /// `μ_{t_i} = (Φ_{t_i})_# μ̄`, each particle integrated once through the grid.
    pub fn pushforward(mu: &ParticleMeasure, b: &VectorField, grid: &[f64], tol: f64) -> Result<Self> {
        if b.dim() != mu.d {
            return Err(Error::DimensionMismatch { expected: mu.d, found: b.dim() });
        }
        let d = mu.d;
        let run = |c: &Cloud| -> Result<Vec<Cloud>> {
            let paths: Vec<Vec<Vec<f64>>> = c
                .points
                .par_chunks(d)
                .map(|x| Ok(advect_times(b, x, grid, tol, false)?.into_iter().map(|r| r.endpoint).collect()))
                .collect::<Result<_>>()?;
            Ok((0..grid.len())
                .map(|i| Cloud { points: paths.iter().flat_map(|p| p[i].iter().copied()).collect(), weights: c.weights.clone() })
                .collect())
        };
        let pos = run(&mu.positive)?;
        let neg = run(&mu.negative)?;
        let measures = pos.into_iter().zip(neg).map(|(positive, negative)| ParticleMeasure { d, positive, negative }).collect();
        Self::new(grid.to_vec(), measures)
    }

    /// `μ_t ≡ μ̄`.
    pub fn frozen(grid: Vec<f64>, mu: ParticleMeasure) -> Result<Self> {
        let m = grid.len();
        Self::new(grid, vec![mu; m])
    }

    pub fn sum(&self, other: &MeasureFamily) -> Result<MeasureFamily> {
        if self.grid != other.grid {
            return Err(invalid("families live on different grids"));
        }
        let measures = self.measures.iter().zip(&other.measures).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Self::new(self.grid.clone(), measures)
    }
}
