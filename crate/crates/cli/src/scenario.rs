//! Scenario configs: schema, validation and execution.

use std::path::{Path, PathBuf};

use gte_core::continuity::{
    continuity_residual, dual_distance, flowed_test_residuals, fv_oracle, measure_constancy, push_measure, GridMeasure,
    MeasureFamily, ParticleMeasure,
};
use gte_core::currents::{PolyhedralCurrent, Simplex};
use gte_core::flow::{FieldSpec, VectorField};
use gte_core::forms::{form_panel, tensor_form, Bump, PolyForm, TimeForm, TimeTest};
use gte_core::numeric::{loglog_slope, time_weights, uniform_grid, TimeRule};
use gte_core::transport::{
    boundary_residual_spacetime, constancy_diagnostic, cylinder_z, panel_difference, solve_gte, spacetime_lift_u,
    spacetime_panel, verticality_residual, weak_residual_with, SolutionFamily, SolveOptions,
};
use serde::{Deserialize, Serialize};

use crate::check::{worst, Check};
use crate::report::{MassRow, RefinementRow, Report};
use crate::suites::{lattice_particles, run_suite, time_tests, Suite};

pub const SCHEMA_VERSION: u32 = 1;

/// Problems with a config: unreadable, malformed or inconsistent.
#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SchemaError {}

fn schema(msg: impl Into<String>) -> SchemaError {
    SchemaError(msg.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub field: FieldSpec,
    #[serde(default)]
    pub current: Option<CurrentSpec>,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub solver: SolveOptions,
    /// Time-step ladder on [0, 1]; the last entry is the reference resolution.
    pub time_steps: Vec<usize>,
    pub panel: PanelSpec,
    pub suites: Vec<ScenarioSuite>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub uniqueness: UniquenessSpec,
    #[serde(default)]
    pub spacetime: SpacetimeSpec,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub mass_reference: Option<MassReference>,
    /// Run directory; `runs/<name>` when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSuite {
    Existence,
    Uniqueness,
    Spacetime,
    Continuity,
    Algebra,
    Flow,
    Currents,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurrentSpec {
    Segment {
        a: Vec<f64>,
        b: Vec<f64>,
        #[serde(default = "unit")]
        weight: f64,
    },
    /// Closed regular polygon in the plane.
    Polygon {
        center: [f64; 2],
        radius: f64,
        sides: usize,
        #[serde(default = "unit")]
        weight: f64,
    },
    Polyline {
        points: Vec<Vec<f64>>,
        closed: bool,
        #[serde(default = "unit")]
        weight: f64,
    },
    Simplices { n: usize, k: usize, simplices: Vec<Simplex> },
}

fn unit() -> f64 {
    1.0
}

impl CurrentSpec {
    pub fn build(&self) -> gte_core::Result<PolyhedralCurrent> {
        match self {
            CurrentSpec::Segment { a, b, weight } => PolyhedralCurrent::segment(a, b, *weight),
            CurrentSpec::Polygon { center, radius, sides, weight } => {
                if *sides < 3 || !(*radius > 0.0) {
                    return Err(gte_core::Error::InvalidArgument("polygon needs at least 3 sides and radius > 0".into()));
                }
                let pts: Vec<Vec<f64>> = (0..*sides)
                    .map(|i| {
                        let a = 2.0 * std::f64::consts::PI * i as f64 / *sides as f64;
                        vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()]
                    })
                    .collect();
                PolyhedralCurrent::closed_polyline(&pts, *weight)
            }
            CurrentSpec::Polyline { points, closed, weight } => {
                if *closed {
                    PolyhedralCurrent::closed_polyline(points, *weight)
                } else {
                    if points.len() < 2 {
                        return Err(gte_core::Error::InvalidArgument("polyline needs at least 2 points".into()));
                    }
                    let n = points[0].len();
                    let simplices = points.windows(2).map(|w| Simplex { vertices: w.to_vec(), weight: *weight }).collect();
                    PolyhedralCurrent::new(n, 1, simplices)
                }
            }
            CurrentSpec::Simplices { n, k, simplices } => PolyhedralCurrent::new(*n, *k, simplices.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Particles on a lattice over `[lo, hi]` carrying a bump density.
    Lattice { density: Bump, lo: Vec<f64>, hi: Vec<f64>, spacing: f64 },
    Particles { points: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl MeasureSpec {
    pub fn build(&self) -> gte_core::Result<ParticleMeasure> {
        match self {
            MeasureSpec::Lattice { density, lo, hi, spacing } => lattice_particles(density, lo, hi, *spacing),
            MeasureSpec::Particles { points, weights } => {
                let d = points.first().map_or(0, Vec::len);
                ParticleMeasure::new(d, points, weights)
            }
        }
    }
}

/// Library test forms of the current's grade: `count` consecutive seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSpec {
    pub seed: u64,
    pub count: usize,
    pub degree: usize,
    #[serde(default)]
    pub bump: Option<Bump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub weak_residual: f64,
    /// Band for the ratio of successive trapezoid differences under halving.
    pub richardson_ratio: [f64; 2],
    /// Band for the fitted temporal order of the trapezoid residual.
    pub temporal_order: [f64; 2],
    pub mass_bound_rel: f64,
    pub mass_curve: f64,
    pub constancy: f64,
    /// Lower bound that counterexamples must exceed.
    pub counterexample: f64,
    pub slice: f64,
    pub spacetime_boundary: f64,
    pub verticality: f64,
    pub atom_defect: f64,
    pub mollified_final: f64,
    pub flowed_residual: f64,
    pub measure_constancy: f64,
    pub oracle_order: f64,
    pub mass_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            weak_residual: 1e-4,
            richardson_ratio: [3.2, 4.8],
            temporal_order: [1.8, 2.2],
            mass_bound_rel: 1e-6,
            mass_curve: 1e-6,
            constancy: 1e-5,
            counterexample: 1e-2,
            slice: 1e-5,
            spacetime_boundary: 1e-4,
            verticality: 1e-4,
            atom_defect: 1e-6,
            mollified_final: 5e-4,
            flowed_residual: 1e-6,
            measure_constancy: 1e-6,
            oracle_order: 0.8,
            mass_drift: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessSpec {
    /// Steps of the grid on which pulled-back pairings are compared.
    pub steps: usize,
    /// Also require the frozen family `T_t = T̄` to break constancy.
    pub frozen_contrast: bool,
    /// Mollification scales for the second-solution route, decreasing.
    pub mollified_eps: Vec<f64>,
}

impl Default for UniquenessSpec {
    fn default() -> Self {
        UniquenessSpec { steps: 20, frozen_contrast: false, mollified_eps: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacetimeSpec {
    /// Slabs of the cylinder Z.
    pub slabs: usize,
    /// Steps of the family compared against Z and lifted to U.
    pub steps: usize,
    /// Steps of the family lifted for the verticality check.
    pub verticality_steps: usize,
    /// Forms in the space-time panel for the boundary of U, and forms of the
    /// scenario panel used for verticality.
    pub panel_count: usize,
}

impl Default for SpacetimeSpec {
    fn default() -> Self {
        SpacetimeSpec { slabs: 20, steps: 100, verticality_steps: 50, panel_count: 5 }
    }
}

/// Particle pushforward against the finite-volume oracle over a grid ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Box `[lo, lo + side]^d` covered by the grids.
    pub lo: Vec<f64>,
    pub side: f64,
    /// Cells per axis, increasing.
    pub cells: Vec<usize>,
    pub time: f64,
    pub cfl: f64,
    /// Lattice spacing for the particles compared with the oracle; the
    /// scenario lattice is used when absent.
    #[serde(default)]
    pub spacing: Option<f64>,
}

/// Closed-form mass curve to compare `M(T_t)` against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassReference {
    /// Mass is preserved (rigid motions).
    Constant,
    /// `M(t) = M(0) √(1 + (rate t)²)`: a segment orthogonal to a shear's direction.
    ShearStretch { rate: f64 },
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, SchemaError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| schema(format!("invalid scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| Path::new("runs").join(&self.name))
    }

    fn needs_current(&self) -> bool {
        self.suites.iter().any(|s| matches!(s, ScenarioSuite::Existence | ScenarioSuite::Uniqueness | ScenarioSuite::Spacetime))
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(schema("name must be non-empty and use only [A-Za-z0-9_-]"));
        }
        if self.suites.is_empty() {
            return Err(schema("suites must not be empty"));
        }
        let b = self.field.build().map_err(|e| schema(format!("field: {e}")))?;
        let n = b.dim();
        if self.needs_current() {
            let c = self.current.as_ref().ok_or_else(|| schema("existence, uniqueness and spacetime suites need a current"))?;
            let c = c.build().map_err(|e| schema(format!("current: {e}")))?;
            if c.dim() != n {
                return Err(schema(format!("current lives in R^{} but the field in R^{n}", c.dim())));
            }
            if c.is_empty() {
                return Err(schema("current is empty"));
            }
        }
        if self.suites.contains(&ScenarioSuite::Continuity) {
            let m = self.measure.as_ref().ok_or_else(|| schema("the continuity suite needs a measure"))?;
            let mu = m.build().map_err(|e| schema(format!("measure: {e}")))?;
            if mu.dim() != n {
                return Err(schema(format!("measure lives in R^{} but the field in R^{n}", mu.dim())));
            }
            if mu.is_empty() {
                return Err(schema("measure is empty"));
            }
        }
        if self.time_steps.is_empty() || self.time_steps.iter().any(|&m| m == 0 || m % 10 != 0) {
            return Err(schema("time_steps must be non-empty multiples of 10"));
        }
        if self.time_steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(schema("time_steps must be strictly increasing"));
        }
        if self.solver.levels > 8 || !(self.solver.tol > 0.0) {
            return Err(schema("solver needs levels <= 8 and tol > 0"));
        }
        if ![1, 2, 3, 5].contains(&self.solver.order) {
            return Err(schema("solver order must be one of 1, 2, 3, 5"));
        }
        if self.panel.count == 0 {
            return Err(schema("panel count must be positive"));
        }
        if let Some(bump) = &self.panel.bump {
            if bump.dim() != n {
                return Err(schema("panel bump dimension differs from the field's"));
            }
        }
        let t = &self.tolerances;
        let scalars = [
            t.weak_residual,
            t.mass_bound_rel,
            t.mass_curve,
            t.constancy,
            t.counterexample,
            t.slice,
            t.spacetime_boundary,
            t.verticality,
            t.atom_defect,
            t.mollified_final,
            t.flowed_residual,
            t.measure_constancy,
            t.oracle_order,
            t.mass_drift,
        ];
        if scalars.iter().chain(&t.richardson_ratio).chain(&t.temporal_order).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(schema("tolerances must be finite and nonnegative"));
        }
        if t.richardson_ratio[0] > t.richardson_ratio[1] || t.temporal_order[0] > t.temporal_order[1] {
            return Err(schema("tolerance bands must have lower <= upper"));
        }
        let u = &self.uniqueness;
        if u.steps == 0 || !u.steps.is_multiple_of(10) {
            return Err(schema("uniqueness steps must be a positive multiple of 10"));
        }
        if u.mollified_eps.iter().any(|e| !(*e > 0.0)) || u.mollified_eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(schema("mollified_eps must be positive and decreasing"));
        }
        let s = &self.spacetime;
        if s.slabs == 0 || s.panel_count == 0 || [s.steps, s.verticality_steps].iter().any(|&m| m == 0 || m % 10 != 0) {
            return Err(schema("spacetime needs slabs, panel_count > 0 and step counts that are multiples of 10"));
        }
        if let Some(o) = &self.oracle {
            if !matches!(self.measure, Some(MeasureSpec::Lattice { .. })) {
                return Err(schema("the oracle study needs a lattice measure (its density seeds the grids)"));
            }
            if o.lo.len() != n || !(o.side > 0.0) || o.cells.len() < 2 || o.cells.windows(2).any(|w| w[1] <= w[0]) || o.cells[0] == 0 {
                return Err(schema("oracle needs lo in R^n, side > 0 and at least two increasing cell counts"));
            }
            if !(o.time > 0.0 && o.time.is_finite()) || !(o.cfl > 0.0 && o.cfl <= 0.5) {
                return Err(schema("oracle needs time > 0 and cfl in (0, 0.5]"));
            }
            if o.spacing.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
                return Err(schema("oracle spacing must be positive"));
            }
        }
        if let Some(MassReference::ShearStretch { rate }) = &self.mass_reference {
            if !rate.is_finite() {
                return Err(schema("shear_stretch rate must be finite"));
            }
        }
        Ok(())
    }

    pub fn forms(&self, n: usize, k: usize) -> gte_core::Result<Vec<PolyForm>> {
        form_panel(self.panel.seed, n, k, self.panel.degree, self.panel.count, self.panel.bump.clone())
    }
}

/// Everything a run produces, before it is written.
struct Run<'a> {
    s: &'a Scenario,
    b: VectorField,
    report: Report,
    /// Existence families per rung of `time_steps`, computed on demand.
    families: Vec<Option<SolutionFamily>>,
}

/// Executes the scenario's suites in order. `progress` sees each check as it lands.
pub fn run_scenario(s: &Scenario, mut progress: impl FnMut(&Check)) -> gte_core::Result<Report> {
    let b = s.field.build()?;
    let mut run = Run {
        s,
        b,
        report: Report::new(&s.name, s.seed),
        families: vec![None; s.time_steps.len()],
    };
    for suite in &s.suites {
        let checks = match suite {
            ScenarioSuite::Existence => run.existence()?,
            ScenarioSuite::Uniqueness => run.uniqueness()?,
            ScenarioSuite::Spacetime => run.spacetime()?,
            ScenarioSuite::Continuity => run.continuity()?,
            ScenarioSuite::Algebra => run_suite(Suite::Algebra, s.seed)?,
            ScenarioSuite::Flow => run_suite(Suite::Flow, s.seed)?,
            ScenarioSuite::Currents => run_suite(Suite::Currents, s.seed)?,
        };
        for c in checks {
            progress(&c);
            run.report.checks.push(c);
        }
    }
    run.report.finish();
    Ok(run.report)
}

fn local_slopes(h: &[f64], r: &[f64]) -> Vec<Option<f64>> {
    (0..h.len()).map(|i| (i > 0).then(|| (r[i] / r[i - 1]).ln() / (h[i] / h[i - 1]).ln())).collect()
}

impl Run<'_> {
    fn tbar(&self) -> gte_core::Result<PolyhedralCurrent> {
        self.s.current.as_ref().expect("validated").build()
    }

    fn family(&mut self, rung: usize) -> gte_core::Result<&SolutionFamily> {
        if self.families[rung].is_none() {
            let grid = uniform_grid(0.0, 1.0, self.s.time_steps[rung]);
            self.families[rung] = Some(solve_gte(&self.tbar()?, &self.b, &grid, &self.s.solver)?);
        }
        Ok(self.families[rung].as_ref().expect("just filled"))
    }

    fn solve(&self, steps: usize, b: &VectorField) -> gte_core::Result<SolutionFamily> {
        solve_gte(&self.tbar()?, b, &uniform_grid(0.0, 1.0, steps), &self.s.solver)
    }

    fn existence(&mut self) -> gte_core::Result<Vec<Check>> {
        const SUITE: &str = "existence";
        let tol = self.s.tolerances.clone();
        let tbar = self.tbar()?;
        let (n, k) = (tbar.dim(), tbar.grade());
        let forms = self.s.forms(n, k)?;
        let psis = time_tests(forms.len())?;
        let b = self.b.clone();
        let residuals = |f: &SolutionFamily, rule: TimeRule| -> gte_core::Result<Vec<f64>> {
            psis.iter().zip(&forms).map(|(psi, w)| weak_residual_with(f, &b, psi, w, rule)).collect()
        };
        let rungs = self.s.time_steps.len();
        let mut trap = Vec::with_capacity(rungs);
        for r in 0..rungs {
            trap.push(residuals(self.family(r)?, TimeRule::Trapezoid)?);
        }
        let finest = self.family(rungs - 1)?.clone();
        let simpson = residuals(&finest, TimeRule::Simpson)?;
        let mut out = Vec::new();
        let worst_simpson = simpson.iter().fold(0.0, |a, r| worst(a, r.abs()));
        out.push(Check::at_most(SUITE, "weak residual at the reference resolution", worst_simpson, tol.weak_residual).with_samples(forms.len()));

        // trapezoid error against the Simpson value on the finest grid: the
        // spatial quadrature is the same on every rung, so this isolates time
        let err: Vec<f64> = trap.iter().map(|t| t.iter().zip(&simpson).fold(0.0, |a, (x, y)| worst(a, (x - y).abs()))).collect();
        let h: Vec<f64> = self.s.time_steps.iter().map(|&m| 1.0 / m as f64).collect();
        for ((&m, (&hi, &ei)), slope) in self.s.time_steps.iter().zip(h.iter().zip(&err)).zip(local_slopes(&h, &err)) {
            self.report.refinement.push(RefinementRow { study: "existence".into(), refinement: m, h: hi, residual: ei, slope });
        }
        if rungs >= 2 {
            out.push(
                Check::between(SUITE, "temporal order of the trapezoid residual", loglog_slope(&h, &err), tol.temporal_order[0], tol.temporal_order[1])
                    .with_samples(rungs),
            );
        }
        let doubling = self.s.time_steps.windows(2).all(|w| w[1] == 2 * w[0]);
        if rungs >= 3 && doubling {
            let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0, |m, (x, y)| worst(m, (x - y).abs()));
            let ratio = diff(&trap[rungs - 3], &trap[rungs - 2]) / diff(&trap[rungs - 2], &trap[rungs - 1]);
            out.push(Check::between(SUITE, "richardson ratio under step halving", ratio, tol.richardson_ratio[0], tol.richardson_ratio[1]).with_samples(3));
        }

        out.extend(self.mass_checks(&finest)?);
        out.push(Check::at_least(SUITE, "integral weights survive transport", if finest.integral == tbar.is_integral() { 1.0 } else { 0.0 }, 1.0));
        Ok(out)
    }

    /// Mass curve rows and the pushforward mass bound at eleven sample times.
    fn mass_checks(&mut self, fam: &SolutionFamily) -> gte_core::Result<Vec<Check>> {
        const SUITE: &str = "existence";
        let k = fam.grade();
        let m0 = fam.currents[0].mass();
        let stride = (fam.len() - 1) / 10;
        let mut excess = 0.0;
        for i in (0..fam.len()).step_by(stride.max(1)) {
            let t = fam.grid[i];
            let (_, stats) = fam.currents[0].pushforward_flow_stats(&self.b, t, self.s.solver.tol)?;
            let j = stats.max_jacobian_norm;
            let bound = j.powi(k as i32) * m0;
            let mass = fam.currents[i].mass();
            if bound > 0.0 {
                excess = worst(excess, mass / bound - 1.0);
            }
            self.report.mass_curve.push(MassRow { t, mass, boundary_mass: fam.boundaries[i].mass(), jacobian_bound: j, mass_bound: bound });
        }
        let mut out = vec![Check::at_most(SUITE, "pushforward mass over the jacobian bound, minus one", excess, self.s.tolerances.mass_bound_rel)
            .with_samples(self.report.mass_curve.len())];
        if let Some(reference) = &self.s.mass_reference {
            let expected = |t: f64| match reference {
                MassReference::Constant => m0,
                MassReference::ShearStretch { rate } => m0 * (1.0 + rate * rate * t * t).sqrt(),
            };
            let dev = fam.grid.iter().zip(&fam.currents).fold(0.0, |a, (&t, c)| worst(a, (c.mass() - expected(t)).abs()));
            out.push(Check::at_most(SUITE, "mass curve against its closed form", dev, self.s.tolerances.mass_curve).with_samples(fam.len()));
        }
        Ok(out)
    }

    fn uniqueness(&mut self) -> gte_core::Result<Vec<Check>> {
        const SUITE: &str = "uniqueness";
        let tol = &self.s.tolerances;
        let u = &self.s.uniqueness;
        let tbar = self.tbar()?;
        let forms = self.s.forms(tbar.dim(), tbar.grade())?;
        let fam = self.solve(u.steps, &self.b)?;
        let mut out = vec![Check::at_most(SUITE, "constancy of pulled-back pairings", constancy_diagnostic(&fam, &self.b, &forms, self.s.solver.tol)?, tol.constancy)
            .with_samples(forms.len())];
        if u.frozen_contrast {
            let frozen = SolutionFamily::frozen(fam.grid.clone(), fam.currents[0].clone(), fam.boundaries[0].clone())?;
            out.push(Check::at_least(SUITE, "frozen family breaks constancy", constancy_diagnostic(&frozen, &self.b, &forms, self.s.solver.tol)?, tol.counterexample));
        }
        if !u.mollified_eps.is_empty() {
            let mut diffs = Vec::new();
            for &eps in &u.mollified_eps {
                let other = self.solve(u.steps, &self.b.mollify(eps)?)?;
                diffs.push(panel_difference(&fam, &other, &forms)?);
            }
            for ((&eps, &d), slope) in u.mollified_eps.iter().zip(&diffs).zip(local_slopes(&u.mollified_eps, &diffs)) {
                self.report.refinement.push(RefinementRow { study: "mollified".into(), refinement: (1.0 / eps).round() as usize, h: eps, residual: d, slope });
            }
            let shrink = diffs.windows(2).fold(0.0, |a, w| worst(a, w[1] / w[0]));
            if diffs.len() >= 2 {
                out.push(Check::at_most(SUITE, "mollified differences shrink (largest successive ratio)", shrink, 1.0).with_samples(diffs.len()));
            }
            out.push(Check::at_most(SUITE, "mollified family difference at the smallest scale", *diffs.last().expect("non-empty"), tol.mollified_final));
        }
        Ok(out)
    }

    fn spacetime(&mut self) -> gte_core::Result<Vec<Check>> {
        const SUITE: &str = "spacetime";
        let tol = self.s.tolerances.clone();
        let st = self.s.spacetime.clone();
        let tbar = self.tbar()?;
        let (n, k) = (tbar.dim(), tbar.grade());
        let boundaryless = k == 0 || tbar.boundary()?.is_empty();
        let forms = self.s.forms(n, k)?;
        let mut out = Vec::new();

        let fam = self.solve(st.steps, &self.b)?;
        let z = cylinder_z(&tbar, &self.b, &uniform_grid(0.0, 1.0, st.slabs), &self.s.solver)?;
        let weights = time_weights(&fam.grid, TimeRule::Simpson)?;
        let psi = TimeTest::bump(0.2, 0.8, 0.3)?;
        let (mut first, mut second) = (0.0, 0.0);
        for beta in forms.iter().take(3) {
            let zf = z.pair(&tensor_form(TimeForm::Differential(psi.derivative()), beta.clone())?)?;
            let mut rf = 0.0;
            for ((t, w), cur) in fam.grid.iter().zip(&weights).zip(&fam.currents) {
                rf += w * psi.eval_derivative(*t) * cur.pair(beta)?;
            }
            first = worst(first, (zf - rf).abs());
            if k < n {
                let db = beta.ext_d()?;
                let zs = z.pair(&tensor_form(TimeForm::Function(psi.clone()), db.clone())?)?;
                let mut rs = 0.0;
                for ((t, w), cur) in fam.grid.iter().zip(&weights).zip(&fam.currents) {
                    rs += w * psi.eval(*t) * cur.wedge_field(&self.b)?.pair(&db)?;
                }
                second = worst(second, (zs - rs).abs());
            }
        }
        let used = forms.len().min(3);
        out.push(Check::at_most(SUITE, "cylinder slice identity, time derivative", first, tol.slice).with_samples(used));
        if k < n {
            out.push(Check::at_most(SUITE, "cylinder slice identity, transport term", second, tol.slice).with_samples(used));
        }

        let u = spacetime_lift_u(&fam, &self.b)?;
        let panel = spacetime_panel(self.s.panel.seed, n, k, self.s.panel.degree, st.panel_count, self.s.panel.bump.clone(), (0.2, 0.8))?;
        let r = boundary_residual_spacetime(&u, &panel)?;
        if boundaryless {
            out.push(Check::at_most(SUITE, "boundary residual of the lift U", r, tol.spacetime_boundary).with_samples(panel.len()));
        } else {
            // with a boundary the Lie term is not exact, so U must fail the test
            out.push(Check::at_least(SUITE, "boundary residual of the lift U detects the boundary", r, tol.counterexample).with_samples(panel.len()));
        }

        let vfam = self.solve(st.verticality_steps, &self.b)?;
        let vu = spacetime_lift_u(&vfam, &self.b)?;
        let pairs: Vec<(TimeTest, PolyForm)> = forms.iter().take(st.panel_count).map(|w| Ok((TimeTest::bump(0.2, 0.8, 0.1)?, w.clone()))).collect::<gte_core::Result<_>>()?;
        let v = verticality_residual(&vu, &self.b, &pairs, self.s.solver.tol)?;
        out.push(Check::at_most(SUITE, "per-atom lifted field maps to the time direction", v.max_atom_defect, tol.atom_defect).with_samples(vu.len()));
        if boundaryless {
            out.push(Check::at_most(SUITE, "verticality residual of W", v.residual, tol.verticality).with_samples(pairs.len()));
        }
        Ok(out)
    }

    fn continuity(&mut self) -> gte_core::Result<Vec<Check>> {
        const SUITE: &str = "continuity";
        let tol = self.s.tolerances.clone();
        let spec = self.s.measure.as_ref().expect("validated");
        let mu = spec.build()?;
        let d = mu.dim();
        let forms = self.s.forms(d, 0)?;
        let steps = *self.s.time_steps.last().expect("validated");
        let fam = MeasureFamily::pushforward(&mu, &self.b, &uniform_grid(0.0, 1.0, steps), self.s.solver.tol)?;
        let mut out = Vec::new();

        let alpha = TimeTest::bump(0.2, 0.8, 0.0)?;
        let flowed = flowed_test_residuals(&fam, &self.b, &alpha, &forms, 0.0, self.s.solver.tol)?.into_iter().fold(0.0, |a, r| worst(a, r.abs()));
        out.push(Check::at_most(SUITE, "flowed test residual", flowed, tol.flowed_residual).with_samples(forms.len()));
        out.push(Check::at_most(SUITE, "pulled-back measures are constant", measure_constancy(&fam, &self.b, &forms, self.s.solver.tol)?, tol.measure_constancy)
            .with_samples(forms.len()));
        let mut weak = 0.0;
        for (psi, beta) in time_tests(forms.len())?.into_iter().zip(&forms) {
            let st = tensor_form(TimeForm::Function(psi), beta.clone())?;
            weak = worst(weak, continuity_residual(&fam, &self.b, &st)?.abs());
        }
        out.push(Check::at_most(SUITE, "weak continuity residual", weak, tol.weak_residual).with_samples(forms.len()));
        let tv0 = mu.total_variation();
        let tv1 = fam.measures.last().expect("non-empty").total_variation();
        out.push(Check::at_most(SUITE, "pushforward total variation over the initial one, minus one", tv1 / tv0 - 1.0, tol.mass_bound_rel));

        if let (Some(o), Some(MeasureSpec::Lattice { density, lo, hi, spacing })) = (&self.s.oracle, &self.s.measure) {
            let fine = lattice_particles(density, lo, hi, o.spacing.unwrap_or(*spacing))?;
            let moved = push_measure(&fine, &self.b, o.time, self.s.solver.tol)?;
            let mut dist = Vec::new();
            let mut drift = 0.0;
            let mut h = Vec::new();
            for &c in &o.cells {
                let hc = o.side / c as f64;
                let g = GridMeasure::from_density(o.lo.clone(), hc, vec![c; d], |x| density.value(x))?;
                let out_g = fv_oracle(&g, &self.b, o.time, o.cfl)?;
                drift = worst(drift, (out_g.total_mass() - g.total_mass()).abs());
                dist.push(dual_distance(&moved, &out_g, &forms)?);
                h.push(hc);
            }
            for ((&c, (&hc, &dc)), slope) in o.cells.iter().zip(h.iter().zip(&dist)).zip(local_slopes(&h, &dist)) {
                self.report.refinement.push(RefinementRow { study: "oracle".into(), refinement: c, h: hc, residual: dc, slope });
            }
            let shrink = dist.windows(2).fold(0.0, |a, w| worst(a, w[1] / w[0]));
            out.push(Check::at_most(SUITE, "oracle distance shrinks (largest successive ratio)", shrink, 1.0).with_samples(dist.len()));
            out.push(Check::at_least(SUITE, "oracle convergence order in h", loglog_slope(&h, &dist), tol.oracle_order).with_samples(dist.len()));
            out.push(Check::at_most(SUITE, "oracle mass drift", drift, tol.mass_drift).with_samples(dist.len()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "name": "tiny",
        "seed": 1,
        "field": {"kind": "rotation", "n": 2, "rate": 1.0, "plane": [0, 1], "radius": 2.0},
        "current": {"kind": "segment", "a": [0.5, 0.0], "b": [1.0, 0.2]},
        "solver": {"levels": 1, "order": 3, "tol": 1e-10},
        "time_steps": [20, 40, 80],
        "panel": {"seed": 3, "count": 2, "degree": 2},
        "suites": ["existence"]
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.tolerances, Tolerances::default());
        assert_eq!(s.output_dir(), Path::new("runs/tiny"));
    }

    #[test]
    fn schema_violations_are_rejected() {
        let bad = [
            MINIMAL.replace("\"seed\": 1,", "\"seed\": 1, \"extra\": 0,"),
            MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2"),
            MINIMAL.replace("[20, 40, 80]", "[20, 15]"),
            MINIMAL.replace("[20, 40, 80]", "[40, 20]"),
            MINIMAL.replace("\"n\": 2,", "\"n\": 3,"),
            MINIMAL.replace("\"suites\": [\"existence\"]", "\"suites\": [\"continuity\"]"),
            MINIMAL.replace("\"name\": \"tiny\"", "\"name\": \"../up\""),
            MINIMAL.replace("\"order\": 3", "\"order\": 4"),
            MINIMAL.replace("\"suites\": [\"existence\"]", "\"suites\": [\"existence\"], \"tolerances\": {\"constancy\": -1}"),
            MINIMAL[..40].to_string(),
        ];
        for text in bad {
            assert!(Scenario::from_json(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn local_slopes_of_a_power_law() {
        let h = [0.1, 0.05, 0.025];
        let r: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        let s = local_slopes(&h, &r);
        assert!(s[0].is_none());
        assert!((s[2].unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn open_polyline_builds_a_chain() {
        let p = CurrentSpec::Polyline { points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]], closed: false, weight: 2.0 }.build().unwrap();
        assert_eq!(p.len(), 2);
        assert!((p.mass() - 4.0).abs() < 1e-15);
        assert_eq!(p.boundary().unwrap().len(), 2);
    }
}
