use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::VectorField;
use crate::forms::FormField;
use crate::numeric::compensated_sum;

use super::particles::check_function;

/// Cell masses on a uniform grid of cubes with side `h`, row-major with the
/// last axis fastest. Cell `i` covers `origin + h [i, i + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    origin: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    masses: Vec<f64>,
}

/// JSON sidecar describing a binary density file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub origin: Vec<f64>,
    pub h: f64,
    pub shape: Vec<usize>,
    /// Always "f64-le-row-major-density".
    pub layout: String,
}

const LAYOUT: &str = "f64-le-row-major-density";

impl GridMeasure {
    pub fn zeros(origin: Vec<f64>, h: f64, shape: Vec<usize>) -> Result<Self> {
        if origin.is_empty() || origin.len() != shape.len() {
            return Err(Error::DimensionMismatch { expected: origin.len(), found: shape.len() });
        }
        if !(h > 0.0 && h.is_finite()) || shape.contains(&0) {
            return Err(invalid("grid needs positive spacing and nonempty extents"));
        }
        let cells = shape.iter().product();
        Ok(GridMeasure { origin, h, shape, masses: vec![0.0; cells] })
    }

    /// Cell masses from a density, integrated with a 3-point Gauss rule per axis.
    pub fn from_density<F: Fn(&[f64]) -> f64>(origin: Vec<f64>, h: f64, shape: Vec<usize>, density: F) -> Result<Self> {
        let mut g = Self::zeros(origin, h, shape)?;
        let d = g.dim();
        let (gx, gw) = crate::numeric::gauss_legendre(3);
        let q = gx.len();
        let per_cell = q.pow(d as u32);
        let mut x = vec![0.0; d];
        let mut lo = vec![0.0; d];
        for c in 0..g.masses.len() {
            g.cell_corner(c, &mut lo);
            let mut terms = Vec::with_capacity(per_cell);
            for flat in 0..per_cell {
                let mut r = flat;
                let mut w = 1.0;
                for a in 0..d {
                    let m = r % q;
                    r /= q;
                    x[a] = lo[a] + 0.5 * h * (gx[m] + 1.0);
                    w *= 0.5 * h * gw[m];
                }
                terms.push(w * density(&x));
            }
            g.masses[c] = compensated_sum(terms);
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn densities(&self) -> Vec<f64> {
        let vol = self.h.powi(self.dim() as i32);
        self.masses.iter().map(|m| m / vol).collect()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    pub fn total_variation(&self) -> f64 {
        compensated_sum(self.masses.iter().map(|m| m.abs()))
    }

    fn cell_corner(&self, mut c: usize, out: &mut [f64]) {
        for a in (0..self.dim()).rev() {
            let i = c % self.shape[a];
            c /= self.shape[a];
            out[a] = self.origin[a] + self.h * i as f64;
        }
    }

    pub fn cell_center(&self, c: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.cell_corner(c, &mut x);
        x.iter_mut().for_each(|v| *v += 0.5 * self.h);
        x
    }

    /// `Σ_c m_c f(center_c)`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        compensated_sum((0..self.masses.len()).filter(|&c| self.masses[c] != 0.0).map(|c| self.masses[c] * f(&self.cell_center(c))))
    }

    pub fn pair<F: FormField + ?Sized>(&self, beta: &F) -> Result<f64> {
        check_function(beta, self.dim())?;
        Ok(self.integrate(|x| {
            let mut v = [0.0];
            beta.eval_into(x, &mut v);
            v[0]
        }))
    }

    /// Writes `<stem>.bin` (densities) and `<stem>.json` (header).
    pub fn write(&self, stem: &Path) -> Result<()> {
        let header = GridHeader { origin: self.origin.clone(), h: self.h, shape: self.shape.clone(), layout: LAYOUT.into() };
        let bytes: Vec<u8> = self.densities().iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(stem.with_extension("bin"), bytes)?;
        fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let header: GridHeader = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        if header.layout != LAYOUT {
            return Err(invalid(format!("unknown grid layout {:?}", header.layout)));
        }
        let bytes = fs::read(stem.with_extension("bin"))?;
        let mut g = Self::zeros(header.origin, header.h, header.shape)?;
        if bytes.len() != 8 * g.masses.len() {
            return Err(Error::DimensionMismatch { expected: 8 * g.masses.len(), found: bytes.len() });
        }
        let vol = g.h.powi(g.dim() as i32);
        for (m, chunk) in g.masses.iter_mut().zip(bytes.chunks_exact(8)) {
            *m = f64::from_le_bytes(chunk.try_into().expect("8 bytes")) * vol;
        }
        Ok(g)
    }
}

/// First-order upwind finite volumes for `∂_t μ + div(b μ) = 0` up to time `t`,
/// sweeping the axes in order within each step, with zero flux through the
/// outer boundary. Face velocities are sampled at face centers. The step is
/// `cfl · h / Σ_a max|b_a|` over the faces, shortened to land on `t`.
pub fn fv_oracle(mu0: &GridMeasure, b: &VectorField, t: f64, cfl: f64) -> Result<GridMeasure> {
    if !(cfl > 0.0 && cfl <= 0.5) {
        return Err(invalid(format!("CFL number {cfl} must lie in (0, 0.5]")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("oracle time must be nonnegative"));
    }
    let d = mu0.dim();
    if b.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
    }
    let h = mu0.h;
    let cells = mu0.masses.len();
    let mut strides = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * mu0.shape[a + 1];
    }
    // face velocities: u[a][c] on the face between cell c and c + e_a
    let mut u = vec![vec![0.0; cells]; d];
    let mut vmax = vec![0.0f64; d];
    let mut v = vec![0.0; d];
    for c in 0..cells {
        let center = mu0.cell_center(c);
        for a in 0..d {
            let idx = (c / strides[a]) % mu0.shape[a];
            if idx + 1 == mu0.shape[a] {
                continue;
            }
            let mut face = center.clone();
            face[a] += 0.5 * h;
            b.eval_into(&face, &mut v);
            u[a][c] = v[a];
            vmax[a] = vmax[a].max(v[a].abs());
        }
    }
    let speed: f64 = vmax.iter().sum();
    let mut out = mu0.clone();
    if t == 0.0 || speed == 0.0 {
        return Ok(out);
    }
    let dt_max = cfl * h / speed;
    let steps = (t / dt_max).ceil() as usize;
    let dt = t / steps as f64;
    let lambda = dt / h;
    let mut flux = vec![0.0; cells];
    for _ in 0..steps {
        for a in 0..d {
            let s = strides[a];
            for c in 0..cells {
                let vel = u[a][c];
                flux[c] = if vel == 0.0 {
                    0.0
                } else if vel > 0.0 {
                    lambda * vel * out.masses[c]
                } else {
                    lambda * vel * out.masses[c + s]
                };
            }
            // mass moved across each face leaves one cell and enters the other
            for c in 0..cells {
                let f = flux[c];
                if f != 0.0 {
                    out.masses[c] -= f;
                    out.masses[c + s] += f;
                }
            }
        }
    }
    Ok(out)
}

/// `max_β |<μ, β> - <ν, β>|` over a panel of 0-forms.
pub fn dual_distance<F: FormField>(mu: &super::ParticleMeasure, nu: &GridMeasure, panel: &[F]) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let mut worst = 0.0f64;
    for beta in panel {
        worst = worst.max((mu.pair(beta)? - nu.pair(beta)?).abs());
    }
    Ok(worst)
}
