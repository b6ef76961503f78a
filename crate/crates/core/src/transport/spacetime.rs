use rayon::prelude::*;

use crate::currents::{DiscreteCurrent, PolyhedralCurrent};
use crate::error::{invalid, Error, Result};
use crate::exterior::{push_into, wedge_into, KVector};
use crate::flow::{advect_times, assemble, spacetime_inverse, VectorField};
use crate::forms::{form_panel, tensor_form, Bump, FormField, PolyForm, SpaceTimeForm, TimeForm, TimeTest};
use crate::numeric::{binomial, gauss_legendre, time_weights, TimeRule};

use super::family::{SolutionFamily, SolveOptions};

/// A (k+1)-current on R^{1+d} with time as coordinate 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeCurrent {
    current: DiscreteCurrent,
}

impl SpaceTimeCurrent {
    /// Wraps `current`, checking that every atom time lies in [0, 1].
    pub fn new(current: DiscreteCurrent) -> Result<Self> {
        if current.dim() < 2 {
            return Err(invalid("space-time currents need at least one space dimension"));
        }
        if current.atoms().any(|(x, _)| !(0.0..=1.0).contains(&x[0])) {
            return Err(invalid("space-time atoms must have times in [0, 1]"));
        }
        Ok(SpaceTimeCurrent { current })
    }

    pub fn current(&self) -> &DiscreteCurrent {
        &self.current
    }

    pub fn space_dim(&self) -> usize {
        self.current.dim() - 1
    }

    pub fn grade(&self) -> usize {
        self.current.grade()
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.current.mass()
    }

    pub fn pair<F: FormField + ?Sized>(&self, w: &F) -> Result<f64> {
        self.current.pair(w)
    }
}

/// `e_0 ∧ ι τ` in R^{1+n}.
fn lift_vector(n: usize, k: usize, tau: &[f64]) -> Vec<f64> {
    let embedded = KVector::from_coeffs(n, k, tau.to_vec()).and_then(|v| v.embed(1)).expect("grade fits");
    let mut out = vec![0.0; binomial(n + 1, k + 1)];
    let mut e0 = vec![0.0; n + 1];
    e0[0] = 1.0;
    wedge_into(n + 1, 1, &e0, k, embedded.coeffs(), &mut out);
    out
}

/// `Z = Ψ_*(⟦t_0, t_M⟧ × T̄)` with `Ψ(t, x) = (t, Φ_t(x))`.
///
/// The prism `⟦t_j, t_{j+1}⟧ × σ` over each simplex of the subdivided `T̄` is
/// integrated by Gauss–Legendre in time times the simplex rule in space, which
/// realizes the same current as discretizing [`PolyhedralCurrent::product_slabs`].
/// Each spatial node is advected once through all time nodes.
pub fn cylinder_z(tbar: &PolyhedralCurrent, b: &VectorField, slabs: &[f64], opts: &SolveOptions) -> Result<SpaceTimeCurrent> {
    if slabs.len() < 2 || slabs.windows(2).any(|w| !(w[1] > w[0])) || slabs[0] < 0.0 || slabs[slabs.len() - 1] > 1.0 {
        return Err(invalid("slab boundaries must increase inside [0, 1]"));
    }
    if b.dim() != tbar.dim() {
        return Err(Error::DimensionMismatch { expected: tbar.dim(), found: b.dim() });
    }
    let n = tbar.dim();
    let k = tbar.grade();
    let base = tbar.subdivide(opts.levels).discretize(opts.order)?;
    let (gx, gw) = gauss_legendre(opts.order.div_ceil(2).max(1) + 1);
    let mut times = Vec::new();
    let mut tw = Vec::new();
    for s in slabs.windows(2) {
        let half = 0.5 * (s[1] - s[0]);
        for (x, w) in gx.iter().zip(&gw) {
            times.push(s[0] + half * (x + 1.0));
            tw.push(half * w);
        }
    }
    let width = binomial(n + 1, k + 1);
    let per_atom: Vec<(Vec<f64>, Vec<f64>)> = (0..base.len())
        .into_par_iter()
        .map(|j| {
            let lifted = lift_vector(n, k, base.vector(j));
            let runs = advect_times(b, base.point(j), &times, opts.tol, true)?;
            let mut pts = Vec::with_capacity(times.len() * (n + 1));
            let mut vecs = vec![0.0; times.len() * width];
            for ((r, w), out) in runs.iter().zip(&tw).zip(vecs.chunks_mut(width)) {
                let v = b.eval(&r.endpoint);
                let (point, m) = assemble(r.time, &r.endpoint, &v, r.jacobian.as_ref().expect("jacobian requested"), 1.0);
                push_into(&m, n + 1, k + 1, &lifted, out);
                out.iter_mut().for_each(|c| *c *= w);
                pts.extend(point);
            }
            Ok((pts, vecs))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    let mut vectors = Vec::new();
    for (p, v) in per_atom {
        points.extend(p);
        vectors.extend(v);
    }
    SpaceTimeCurrent::new(DiscreteCurrent::from_raw(n + 1, k + 1, points, vectors, true))
}

/// `U = Σ_i w_i Σ_j (1, b(x_j)) ∧ ι τ_j δ_{(t_i, x_j)}` with composite Simpson
/// weights on the family grid.
pub fn spacetime_lift_u(f: &SolutionFamily, b: &VectorField) -> Result<SpaceTimeCurrent> {
    spacetime_lift_u_with(f, b, TimeRule::Simpson)
}

pub fn spacetime_lift_u_with(f: &SolutionFamily, b: &VectorField, rule: TimeRule) -> Result<SpaceTimeCurrent> {
    let n = f.dim();
    let k = f.grade();
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
    }
    if k + 1 > n + 1 {
        return Err(Error::GradeOverflow { grade: k + 1, dim: n + 1 });
    }
    let weights = time_weights(&f.grid, rule)?;
    let width = binomial(n + 1, k + 1);
    let mut points = Vec::new();
    let mut vectors = Vec::new();
    let mut v = vec![0.0; n + 1];
    for ((&t, &w), cur) in f.grid.iter().zip(&weights).zip(&f.currents) {
        for (x, tau) in cur.atoms() {
            v[0] = 1.0;
            b.eval_into(x, &mut v[1..]);
            let embedded = KVector::from_coeffs(n, k, tau.to_vec())?.embed(1)?;
            let mut out = vec![0.0; width];
            wedge_into(n + 1, 1, &v, k, embedded.coeffs(), &mut out);
            out.iter_mut().for_each(|c| *c *= w);
            points.push(t);
            points.extend_from_slice(x);
            vectors.extend(out);
        }
    }
    SpaceTimeCurrent::new(DiscreteCurrent::from_raw(n + 1, k + 1, points, vectors, true))
}

/// Tensor test forms of grade `k` on R^{1+d} covering both degree splits:
/// `t*ψ ∧ p*β` with β a k-form and `t*(ψ dt) ∧ p*β` with β a (k−1)-form.
/// Time profiles are supported on `support`, with tilts varying across the panel.
pub fn spacetime_panel(seed: u64, d: usize, k: usize, degree: usize, count: usize, bump: Option<Bump>, support: (f64, f64)) -> Result<Vec<SpaceTimeForm>> {
    let mut out = Vec::with_capacity(2 * count);
    let profiles: Vec<TimeTest> =
        (0..count).map(|i| TimeTest::bump(support.0, support.1, -0.5 + i as f64 / count.max(1) as f64)).collect::<Result<_>>()?;
    for (psi, beta) in profiles.iter().zip(form_panel(seed, d, k, degree, count, bump.clone())?) {
        out.push(tensor_form(TimeForm::Function(psi.clone()), beta)?);
    }
    if k >= 1 {
        for (psi, beta) in profiles.iter().zip(form_panel(seed ^ 0x5eed, d, k - 1, degree, count, bump)?) {
            out.push(tensor_form(TimeForm::Differential(psi.clone()), beta)?);
        }
    }
    Ok(out)
}

/// `max_ω |<U, dω>| = max_ω |<∂U, ω>|` over the panel.
pub fn boundary_residual_spacetime(u: &SpaceTimeCurrent, panel: &[SpaceTimeForm]) -> Result<f64> {
    let mut worst = 0.0f64;
    for w in panel {
        if w.grade() + 1 != u.grade() {
            return Err(Error::GradeMismatch { expected: u.grade(), found: w.grade() + 1 });
        }
        worst = worst.max(u.pair(&w.ext_d()?)?.abs());
    }
    Ok(worst)
}

/// Outcome of [`verticality_residual`].
#[derive(Clone, Debug, PartialEq)]
pub struct Verticality {
    /// `max |<W, t*α ∧ p*dβ>|` over the panel.
    pub residual: f64,
    /// `max |DΨ^{-1}(s, y)[(1, b(y))] - (1, 0)|` over the atoms of U.
    pub max_atom_defect: f64,
    pub w: SpaceTimeCurrent,
}

/// Builds `W = (Ψ^{-1})_* U` atom by atom and tests that it has no purely
/// spatial component: for each `(α, β)` in the panel, pairs W with `t*α ∧ p*dβ`.
pub fn verticality_residual(u: &SpaceTimeCurrent, b: &VectorField, panel: &[(TimeTest, PolyForm)], tol: f64) -> Result<Verticality> {
    let d = u.space_dim();
    if b.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
    }
    let cur = u.current();
    let k1 = cur.grade();
    let width = binomial(d + 1, k1);
    let mapped: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..cur.len())
        .into_par_iter()
        .map(|i| {
            let p = cur.point(i);
            let (point, m) = spacetime_inverse(b, p[0], &p[1..], tol)?;
            let mut tangent = Vec::with_capacity(d + 1);
            tangent.push(1.0);
            tangent.extend(b.eval(&p[1..]));
            let image = &m * nalgebra::DVector::from_vec(tangent);
            let defect = image.iter().enumerate().map(|(r, c)| (c - if r == 0 { 1.0 } else { 0.0 }).powi(2)).sum::<f64>().sqrt();
            let mut out = vec![0.0; width];
            push_into(&m, d + 1, k1, cur.vector(i), &mut out);
            Ok((point, out, defect))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(cur.len() * (d + 1));
    let mut vectors = Vec::with_capacity(cur.len() * width);
    let mut max_atom_defect = 0.0f64;
    for (p, v, e) in mapped {
        points.extend(p);
        vectors.extend(v);
        max_atom_defect = max_atom_defect.max(e);
    }
    let w = SpaceTimeCurrent::new(DiscreteCurrent::from_raw(d + 1, k1, points, vectors, cur.is_simple()))?;
    let mut residual = 0.0f64;
    for (alpha, beta) in panel {
        let form = tensor_form(TimeForm::Function(alpha.clone()), beta.ext_d()?)?;
        residual = residual.max(w.pair(&form)?.abs());
    }
    Ok(Verticality { residual, max_atom_defect, w })
}
