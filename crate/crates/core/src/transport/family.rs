use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::currents::{DiscreteCurrent, PolyhedralCurrent};
use crate::error::{invalid, Error, Result};
use crate::flow::VectorField;

/// Where a family came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Pushforward,
    External,
}

/// Discretization parameters of [`solve_gte`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    /// Subdivision levels applied to the initial current.
    pub levels: usize,
    /// Simplex quadrature order.
    pub order: usize,
    /// Integrator tolerance.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { levels: 4, order: 3, tol: 1e-10 }
    }
}

/// Currents `T_{t_i}` and boundaries `∂T_{t_i}` sampled on a time grid.
///
/// For k = 0 the boundary slots hold empty 0-currents.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionFamily {
    pub grid: Vec<f64>,
    pub currents: Vec<DiscreteCurrent>,
    pub boundaries: Vec<DiscreteCurrent>,
    pub provenance: Provenance,
    /// Weights of the initial polyhedral current were all integers.
    pub integral: bool,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("time grid is empty"));
    }
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(invalid("time grid must lie in [0, 1]"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

impl SolutionFamily {
    /// A family supplied from outside, with its boundary family given explicitly.
    pub fn external(grid: Vec<f64>, currents: Vec<DiscreteCurrent>, boundaries: Vec<DiscreteCurrent>) -> Result<Self> {
        check_grid(&grid)?;
        if currents.len() != grid.len() || boundaries.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: currents.len().min(boundaries.len()) });
        }
        let (n, k) = (currents[0].dim(), currents[0].grade());
        for (c, d) in currents.iter().zip(&boundaries) {
            if c.dim() != n || d.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: if c.dim() != n { c.dim() } else { d.dim() } });
            }
            if c.grade() != k || d.grade() != k.saturating_sub(1) {
                return Err(Error::GradeMismatch { expected: k, found: c.grade() });
            }
        }
        Ok(SolutionFamily { grid, currents, boundaries, provenance: Provenance::External, integral: false })
    }

    /// `T_t ≡ T̄` at every grid time (not a solution unless `b ∧ T̄` is closed).
    pub fn frozen(grid: Vec<f64>, t: DiscreteCurrent, dt: DiscreteCurrent) -> Result<Self> {
        let m = grid.len();
        Self::external(grid, vec![t; m], vec![dt; m])
    }

    pub fn dim(&self) -> usize {
        self.currents[0].dim()
    }

    pub fn grade(&self) -> usize {
        self.currents[0].grade()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `sup_i M(T_{t_i}) + M(∂T_{t_i})`.
    pub fn mass_bound(&self) -> f64 {
        self.currents.iter().zip(&self.boundaries).map(|(c, d)| c.mass() + d.mass()).fold(0.0, f64::max)
    }

    /// The boundary family `{∂T_{t_i}}` as a family of (k−1)-currents.
    pub fn boundary_family(&self) -> Result<SolutionFamily> {
        if self.grade() == 0 {
            return Err(invalid("a family of 0-currents has no boundary family"));
        }
        let empties = self
            .boundaries
            .iter()
            .map(|d| DiscreteCurrent::empty(d.dim(), d.grade().saturating_sub(1)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SolutionFamily {
            grid: self.grid.clone(),
            currents: self.boundaries.clone(),
            boundaries: empties,
            provenance: self.provenance,
            integral: self.integral,
        })
    }

    /// Every time slice is replaced by `T_{t_i} + other_{t_i}` (same grid).
    pub fn sum(&self, other: &SolutionFamily) -> Result<SolutionFamily> {
        if self.grid != other.grid {
            return Err(invalid("families live on different grids"));
        }
        let currents = self.currents.iter().zip(&other.currents).map(|(a, b)| a.concat(b)).collect::<Result<_>>()?;
        let boundaries = self.boundaries.iter().zip(&other.boundaries).map(|(a, b)| a.concat(b)).collect::<Result<_>>()?;
        Ok(SolutionFamily { grid: self.grid.clone(), currents, boundaries, provenance: Provenance::External, integral: false })
    }

    /// Writes `manifest.json` plus one JSON file per current into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let mut manifest = Manifest { grid: self.grid.clone(), currents: Vec::new(), boundaries: Vec::new(), provenance: self.provenance };
        for (i, (c, d)) in self.currents.iter().zip(&self.boundaries).enumerate() {
            let cn = format!("current_{i:05}.json");
            let dn = format!("boundary_{i:05}.json");
            fs::write(dir.join(&cn), c.to_json()?)?;
            fs::write(dir.join(&dn), d.to_json()?)?;
            manifest.currents.push(cn);
            manifest.boundaries.push(dn);
        }
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }

    /// Reads a manifest; file references are relative to its directory.
    pub fn read(manifest: &Path) -> Result<SolutionFamily> {
        let m: Manifest = serde_json::from_str(&fs::read_to_string(manifest)?)?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let load = |names: &[String]| -> Result<Vec<DiscreteCurrent>> {
            names.iter().map(|f| DiscreteCurrent::from_json(&fs::read_to_string(base.join(f))?)).collect()
        };
        let mut fam = SolutionFamily::external(m.grid, load(&m.currents)?, load(&m.boundaries)?)?;
        fam.provenance = m.provenance;
        Ok(fam)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    grid: Vec<f64>,
    currents: Vec<String>,
    boundaries: Vec<String>,
    provenance: Provenance,
}

/// The pushforward solution `T_t = (Φ_t)_* T̄`, with `T̄` subdivided and
/// discretized, and `∂T_t = (Φ_t)_* ∂T̄` discretized the same way.
pub fn solve_gte(tbar: &PolyhedralCurrent, b: &VectorField, grid: &[f64], opts: &SolveOptions) -> Result<SolutionFamily> {
    check_grid(grid)?;
    let fine = tbar.subdivide(opts.levels);
    let t0 = fine.discretize(opts.order)?;
    let d0 = if tbar.grade() == 0 { DiscreteCurrent::empty(tbar.dim(), 0)? } else { fine.boundary()?.discretize(opts.order)? };
    let (currents, _) = t0.pushforward_flow_times(b, grid, opts.tol)?;
    let boundaries = if d0.is_empty() { vec![d0; grid.len()] } else { d0.pushforward_flow_times(b, grid, opts.tol)?.0 };
    Ok(SolutionFamily {
        grid: grid.to_vec(),
        currents,
        boundaries,
        provenance: Provenance::Pushforward,
        integral: tbar.is_integral(),
    })
}
