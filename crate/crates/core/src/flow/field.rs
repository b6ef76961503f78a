use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forms::Bump;
use crate::numeric::gauss_legendre;

/// Catalog of vector fields, as written in scenario configs.
///
/// Linear kinds are unbounded on R^n; their `radius` declares the ball on
/// which the reported sup bound holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: Vec<f64> },
    /// `b = rate (-x_j e_i + x_i e_j)` for `plane = [i, j]`.
    Rotation { n: usize, rate: f64, plane: [usize; 2], radius: f64 },
    /// `b = rate x_from e_to`.
    Shear { n: usize, rate: f64, from: usize, to: usize, radius: f64 },
    /// `b = rate |x_from| e_to`, Lipschitz with a kink on `x_from = 0`.
    KinkShear { n: usize, rate: f64, from: usize, to: usize, radius: f64 },
    /// Kink shear convolved with the radial quintic kernel at scale `eps`.
    SmoothedKinkShear { n: usize, rate: f64, from: usize, to: usize, radius: f64, eps: f64 },
    /// `b = amplitude ∇ q(|x - c|²)` for a bump `q`.
    BumpGradient { amplitude: f64, bump: Bump },
    /// A catalog field sampled on a uniform node grid and interpolated multilinearly.
    GridSampled { base: Box<FieldSpec>, lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize> },
    /// Tensor-kernel quadrature mollification of `base` at scale `eps`.
    Mollified { base: Box<FieldSpec>, eps: f64 },
}

impl FieldSpec {
    pub fn build(&self) -> Result<VectorField> {
        VectorField::from_spec(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    lo: Vec<f64>,
    h: Vec<f64>,
    shape: Vec<usize>,
    /// Node values, row-major over the node grid (last axis fastest), `n` per node.
    values: Vec<f64>,
}

impl GridField {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = lo.len();
        if hi.len() != n || shape.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: hi.len().min(shape.len()) });
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(invalid("grid needs at least 2 nodes per axis"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("grid box must have lo < hi"));
        }
        let nodes: usize = shape.iter().product();
        if values.len() != nodes * n {
            return Err(Error::DimensionMismatch { expected: nodes * n, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid samples must be finite"));
        }
        let h = lo.iter().zip(&hi).zip(&shape).map(|((a, b), &s)| (b - a) / (s - 1) as f64).collect();
        Ok(GridField { lo, h, shape, values })
    }

    /// Samples `f` at the nodes of the box.
    pub fn sample(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, f: &VectorField) -> Result<Self> {
        let n = lo.len();
        if f.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
        }
        let nodes: usize = shape.iter().product();
        let mut values = vec![0.0; nodes * n];
        let mut x = vec![0.0; n];
        for node in 0..nodes {
            let mut r = node;
            for d in (0..n).rev() {
                let m = r % shape[d];
                r /= shape[d];
                x[d] = lo[d] + (hi[d] - lo[d]) * m as f64 / (shape[d] - 1) as f64;
            }
            f.eval_into(&x, &mut values[node * n..(node + 1) * n]);
        }
        Self::new(lo, hi, shape, values)
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn node_offset(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i) * self.dim()
    }

    /// Cell index and local coordinate per axis; `inside[d]` is false where clamped.
    fn locate(&self, x: &[f64], cell: &mut [usize], frac: &mut [f64], inside: &mut [bool]) {
        for d in 0..self.dim() {
            let u = (x[d] - self.lo[d]) / self.h[d];
            let last = (self.shape[d] - 2) as f64;
            let clamped = u.clamp(0.0, last + 1.0);
            inside[d] = u == clamped;
            let c = clamped.floor().min(last);
            cell[d] = c as usize;
            frac[d] = clamped - c;
        }
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64], jac: Option<&mut [f64]>) {
        let n = self.dim();
        let mut cell = [0usize; crate::exterior::MAX_DIM];
        let mut frac = [0.0; crate::exterior::MAX_DIM];
        let mut inside = [true; crate::exterior::MAX_DIM];
        self.locate(x, &mut cell[..n], &mut frac[..n], &mut inside[..n]);
        out[..n].iter_mut().for_each(|v| *v = 0.0);
        let mut jac = jac;
        if let Some(j) = jac.as_deref_mut() {
            j.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut idx = [0usize; crate::exterior::MAX_DIM];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            for d in 0..n {
                let bit = (corner >> d) & 1;
                idx[d] = cell[d] + bit;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
            }
            let off = self.node_offset(&idx[..n]);
            let v = &self.values[off..off + n];
            for c in 0..n {
                out[c] += w * v[c];
            }
            if let Some(j) = jac.as_deref_mut() {
                for d in (0..n).filter(|&d| inside[d]) {
                    let mut wd = 1.0 / self.h[d];
                    for e in (0..n).filter(|&e| e != d) {
                        let bit = (corner >> e) & 1;
                        wd *= if bit == 1 { frac[e] } else { 1.0 - frac[e] };
                    }
                    if (corner >> d) & 1 == 0 {
                        wd = -wd;
                    }
                    for c in 0..n {
                        j[c * n + d] += wd * v[c];
                    }
                }
            }
        }
    }

    /// Frobenius bound on the in-cell Jacobian: per axis, the largest edge
    /// difference over the spacing.
    fn lip_bound(&self) -> f64 {
        let n = self.dim();
        let nodes: usize = self.shape.iter().product();
        let mut per_axis = vec![0.0f64; n];
        let mut idx = vec![0usize; n];
        for node in 0..nodes {
            let mut r = node;
            for d in (0..n).rev() {
                idx[d] = r % self.shape[d];
                r /= self.shape[d];
            }
            let off = self.node_offset(&idx);
            for d in 0..n {
                if idx[d] + 1 >= self.shape[d] {
                    continue;
                }
                idx[d] += 1;
                let off2 = self.node_offset(&idx);
                idx[d] -= 1;
                let diff: f64 = (0..n)
                    .map(|c| (self.values[off2 + c] - self.values[off + c]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                per_axis[d] = per_axis[d].max(diff / self.h[d]);
            }
        }
        per_axis.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn sup_bound(&self) -> f64 {
        let n = self.dim();
        self.values.chunks(n).map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Constant(Vec<f64>),
    Rotation { rate: f64, i: usize, j: usize },
    Shear { rate: f64, from: usize, to: usize },
    KinkShear { rate: f64, from: usize, to: usize },
    SmoothedKinkShear { rate: f64, from: usize, to: usize, eps: f64 },
    BumpGradient { amplitude: f64, bump: Bump },
    Grid(GridField),
    Mollified { base: Box<VectorField>, offsets: Vec<f64>, weights: Vec<f64> },
}

/// A Lipschitz vector field with reported bounds `lip_bound ≥ Lip(b)` and
/// `sup_bound ≥ ‖b‖∞` (on the declared working region for linear kinds).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    n: usize,
    kind: Kind,
    lip_bound: f64,
    sup_bound: f64,
}

fn check_axis(n: usize, i: usize) -> Result<()> {
    if i >= n {
        return Err(invalid(format!("axis {i} out of range for dimension {n}")));
    }
    Ok(())
}

fn check_pair(n: usize, a: usize, b: usize) -> Result<()> {
    check_axis(n, a)?;
    check_axis(n, b)?;
    if a == b {
        return Err(invalid("field axes must differ"));
    }
    Ok(())
}

impl VectorField {
    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        match spec {
            FieldSpec::Constant { value } => Self::constant(value.clone()),
            &FieldSpec::Rotation { n, rate, plane, radius } => Self::rotation(n, rate, plane, radius),
            &FieldSpec::Shear { n, rate, from, to, radius } => Self::shear(n, rate, from, to, radius),
            &FieldSpec::KinkShear { n, rate, from, to, radius } => Self::kink_shear(n, rate, from, to, radius),
            &FieldSpec::SmoothedKinkShear { n, rate, from, to, radius, eps } => {
                Self::kink_shear(n, rate, from, to, radius)?.mollify(eps)
            }
            FieldSpec::BumpGradient { amplitude, bump } => Self::bump_gradient(*amplitude, bump.clone()),
            FieldSpec::GridSampled { base, lo, hi, shape } => {
                Self::grid(GridField::sample(lo.clone(), hi.clone(), shape.clone(), &base.build()?)?)
            }
            FieldSpec::Mollified { base, eps } => base.build()?.mollify(*eps),
        }
    }

    pub fn constant(value: Vec<f64>) -> Result<Self> {
        let n = value.len();
        if n == 0 || n > crate::exterior::MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        let sup = value.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(VectorField { n, kind: Kind::Constant(value), lip_bound: 0.0, sup_bound: sup })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::constant(vec![0.0; n])
    }

    pub fn rotation(n: usize, rate: f64, plane: [usize; 2], radius: f64) -> Result<Self> {
        check_pair(n, plane[0], plane[1])?;
        Ok(VectorField {
            n,
            kind: Kind::Rotation { rate, i: plane[0], j: plane[1] },
            lip_bound: rate.abs(),
            sup_bound: rate.abs() * radius,
        })
    }

    pub fn shear(n: usize, rate: f64, from: usize, to: usize, radius: f64) -> Result<Self> {
        check_pair(n, from, to)?;
        Ok(VectorField { n, kind: Kind::Shear { rate, from, to }, lip_bound: rate.abs(), sup_bound: rate.abs() * radius })
    }

    pub fn kink_shear(n: usize, rate: f64, from: usize, to: usize, radius: f64) -> Result<Self> {
        check_pair(n, from, to)?;
        Ok(VectorField {
            n,
            kind: Kind::KinkShear { rate, from, to },
            lip_bound: rate.abs(),
            sup_bound: rate.abs() * radius,
        })
    }

    pub fn bump_gradient(amplitude: f64, bump: Bump) -> Result<Self> {
        let n = bump.dim();
        let (lip, sup) = bump_gradient_bounds(&bump);
        Ok(VectorField {
            n,
            kind: Kind::BumpGradient { amplitude, bump },
            lip_bound: amplitude.abs() * lip,
            sup_bound: amplitude.abs() * sup,
        })
    }

    pub fn grid(grid: GridField) -> Result<Self> {
        let n = grid.dim();
        let lip = grid.lip_bound();
        let sup = grid.sup_bound();
        Ok(VectorField { n, kind: Kind::Grid(grid), lip_bound: lip, sup_bound: sup })
    }

    /// The convolution `b * ρ_ε` with the quintic kernel. Affine fields are
    /// returned unchanged; the kink shear has a closed form; other kinds use a
    /// fixed tensor quadrature of the kernel, whose Jacobian is exact for the
    /// quadrature sum.
    pub fn mollify(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("mollification scale must be positive"));
        }
        let kind = match &self.kind {
            Kind::Constant(_) | Kind::Rotation { .. } | Kind::Shear { .. } => return Ok(self.clone()),
            &Kind::KinkShear { rate, from, to } => Kind::SmoothedKinkShear { rate, from, to, eps },
            _ => {
                let (nodes, w1) = kernel_rule();
                let n = self.n;
                let count = nodes.len().pow(n as u32);
                let mut offsets = Vec::with_capacity(count * n);
                let mut weights = Vec::with_capacity(count);
                for flat in 0..count {
                    let mut r = flat;
                    let mut w = 1.0;
                    for _ in 0..n {
                        let m = r % nodes.len();
                        r /= nodes.len();
                        offsets.push(eps * nodes[m]);
                        w *= w1[m];
                    }
                    weights.push(w);
                }
                Kind::Mollified { base: Box::new(self.clone()), offsets, weights }
            }
        };
        let sup_extra = match kind {
            Kind::SmoothedKinkShear { rate, .. } => rate.abs() * eps,
            _ => 0.0,
        };
        Ok(VectorField { n: self.n, kind, lip_bound: self.lip_bound, sup_bound: self.sup_bound + sup_extra })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lip_bound(&self) -> f64 {
        self.lip_bound
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// The value of a constant field.
    pub fn constant_value(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Constant(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, Kind::Constant(v) if v.iter().all(|&c| c == 0.0))
    }

    /// Derivative jumps somewhere (grid interpolation, kinks), so step-doubling
    /// error estimates are less reliable for it.
    pub fn is_piecewise(&self) -> bool {
        match &self.kind {
            Kind::Grid(_) | Kind::KinkShear { .. } => true,
            Kind::Mollified { base, .. } => base.is_piecewise(),
            _ => false,
        }
    }

    /// Distance from `x` to the set where the field is not differentiable,
    /// for kinds that have one.
    pub fn kink_distance(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            Kind::KinkShear { from, .. } => Some(x[*from].abs()),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(x, &mut out);
        out
    }

    /// Row-major `n × n` Jacobian.
    pub fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        self.jacobian_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let out = &mut out[..self.n];
        match &self.kind {
            Kind::Constant(v) => out.copy_from_slice(v),
            &Kind::Rotation { rate, i, j } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[i] = -rate * x[j];
                out[j] = rate * x[i];
            }
            &Kind::Shear { rate, from, to } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[to] = rate * x[from];
            }
            &Kind::KinkShear { rate, from, to } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[to] = rate * x[from].abs();
            }
            &Kind::SmoothedKinkShear { rate, from, to, eps } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[to] = rate * smoothed_abs(x[from], eps).0;
            }
            Kind::BumpGradient { amplitude, bump } => {
                let s = bump.radius_sq(x);
                let q1 = bump.profile(s, 1);
                for (o, (xi, ci)) in out.iter_mut().zip(x.iter().zip(&bump.center)) {
                    *o = amplitude * q1 * 2.0 * (xi - ci);
                }
            }
            Kind::Grid(g) => g.eval_into(x, out, None),
            Kind::Mollified { base, offsets, weights } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let n = self.n;
                let mut p = [0.0; crate::exterior::MAX_DIM];
                let mut v = [0.0; crate::exterior::MAX_DIM];
                for (m, &w) in weights.iter().enumerate() {
                    for d in 0..n {
                        p[d] = x[d] - offsets[m * n + d];
                    }
                    base.eval_into(&p[..n], &mut v[..n]);
                    for d in 0..n {
                        out[d] += w * v[d];
                    }
                }
            }
        }
    }

    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let out = &mut out[..n * n];
        match &self.kind {
            Kind::Constant(_) => out.iter_mut().for_each(|v| *v = 0.0),
            &Kind::Rotation { rate, i, j } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[i * n + j] = -rate;
                out[j * n + i] = rate;
            }
            &Kind::Shear { rate, from, to } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[to * n + from] = rate;
            }
            &Kind::KinkShear { rate, from, to } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let s = x[from];
                out[to * n + from] = if s > 0.0 {
                    rate
                } else if s < 0.0 {
                    -rate
                } else {
                    0.0
                };
            }
            &Kind::SmoothedKinkShear { rate, from, to, eps } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[to * n + from] = rate * smoothed_abs(x[from], eps).1;
            }
            Kind::BumpGradient { amplitude, bump } => {
                let s = bump.radius_sq(x);
                let q1 = bump.profile(s, 1);
                let q2 = bump.profile(s, 2);
                for r in 0..n {
                    let yr = x[r] - bump.center[r];
                    for c in 0..n {
                        let yc = x[c] - bump.center[c];
                        let diag = if r == c { 2.0 * q1 } else { 0.0 };
                        out[r * n + c] = amplitude * (4.0 * q2 * yr * yc + diag);
                    }
                }
            }
            Kind::Grid(g) => {
                let mut tmp = [0.0; crate::exterior::MAX_DIM];
                g.eval_into(x, &mut tmp[..n], Some(out));
            }
            Kind::Mollified { base, offsets, weights } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let mut p = [0.0; crate::exterior::MAX_DIM];
                let mut jac = vec![0.0; n * n];
                for (m, &w) in weights.iter().enumerate() {
                    for d in 0..n {
                        p[d] = x[d] - offsets[m * n + d];
                    }
                    base.jacobian_into(&p[..n], &mut jac);
                    for (o, v) in out.iter_mut().zip(&jac) {
                        *o += w * v;
                    }
                }
            }
        }
    }
}

/// Normalized 1D kernel density `1 - S(|u|)` on [-1, 1].
fn kernel_density(u: f64) -> f64 {
    let a = u.abs();
    if a >= 1.0 {
        return 0.0;
    }
    1.0 - a * a * a * (10.0 + a * (-15.0 + 6.0 * a))
}

/// Gauss nodes on each half of [-1, 1] weighted by the kernel, normalized to sum 1.
fn kernel_rule() -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(4);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (xi, wi) in x.iter().zip(&w) {
        for half in [-1.0, 1.0] {
            let u = half * 0.5 * (xi + 1.0);
            nodes.push(u);
            weights.push(0.5 * wi * kernel_density(u));
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (nodes, weights)
}

/// `(m, m')` for `m(x) = ∫ |x - s| κ_ε(s) ds` with `κ_ε(s) = (1 - S(|s|/ε))/ε`.
pub(crate) fn smoothed_abs(x: f64, eps: f64) -> (f64, f64) {
    if x.abs() >= eps {
        return (x.abs(), x.signum());
    }
    let (gx, gw) = gauss_legendre(4);
    let mut cuts = [-eps, 0.0, x, eps];
    cuts.sort_by(f64::total_cmp);
    let mut m = 0.0;
    let mut dm = 0.0;
    for win in cuts.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        for (xi, wi) in gx.iter().zip(&gw) {
            let s = a + half * (xi + 1.0);
            let k = kernel_density(s / eps) / eps * wi * half;
            m += (x - s).abs() * k;
            dm += if x > s { k } else { -k };
        }
    }
    (m, dm)
}

/// Sampled bounds for `∇ q(|y|²)`: `(Lip, sup)` with a 1% margin.
fn bump_gradient_bounds(bump: &Bump) -> (f64, f64) {
    let a = bump.r_in * bump.r_in;
    let b = bump.r_out * bump.r_out;
    let samples = 20_000;
    let mut lip = 0.0f64;
    let mut sup = 0.0f64;
    for i in 0..=samples {
        let s = a + (b - a) * i as f64 / samples as f64;
        let q1 = bump.profile(s, 1);
        let q2 = bump.profile(s, 2);
        sup = sup.max((2.0 * q1 * s.sqrt()).abs());
        lip = lip.max((2.0 * q1).abs()).max((2.0 * q1 + 4.0 * q2 * s).abs());
    }
    (lip * 1.01, sup * 1.01)
}
