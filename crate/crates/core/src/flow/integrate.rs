use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

use super::field::VectorField;

/// Endpoint of a trajectory, with the transported Jacobian when requested.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub time: f64,
    pub endpoint: Vec<f64>,
    pub jacobian: Option<DMatrix<f64>>,
    /// RK4 steps taken, including the step-halving comparison runs.
    pub steps: usize,
    /// Accumulated `|y_m - y_2m|` over the intervals integrated so far.
    pub error_estimate: f64,
}

/// Substep cap per interval before reporting underflow.
const MAX_SUBSTEPS: usize = 1 << 22;

/// Largest step allowed for `tol` and the field's Lipschitz bound.
pub fn max_step(b: &VectorField, tol: f64) -> f64 {
    tol.powf(0.25) / (1.0 + b.lip_bound())
}

struct Stepper<'a> {
    b: &'a VectorField,
    n: usize,
    len: usize,
    jac: bool,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    db: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(b: &'a VectorField, jac: bool) -> Self {
        let n = b.dim();
        let len = if jac { n + n * n } else { n };
        Stepper {
            b,
            n,
            len,
            jac,
            k: [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]],
            tmp: vec![0.0; len],
            db: vec![0.0; n * n],
        }
    }

    fn rhs(b: &VectorField, n: usize, jac: bool, db: &mut [f64], y: &[f64], out: &mut [f64]) {
        b.eval_into(&y[..n], &mut out[..n]);
        if jac {
            b.jacobian_into(&y[..n], db);
            let j = &y[n..];
            for r in 0..n {
                for c in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += db[r * n + m] * j[m * n + c];
                    }
                    out[n + r * n + c] = s;
                }
            }
        }
    }

    fn step(&mut self, y: &mut [f64], h: f64) {
        let (n, jac, len) = (self.n, self.jac, self.len);
        let [k1, k2, k3, k4] = &mut self.k;
        Self::rhs(self.b, n, jac, &mut self.db, y, k1);
        for i in 0..len {
            self.tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        Self::rhs(self.b, n, jac, &mut self.db, &self.tmp, k2);
        for i in 0..len {
            self.tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        Self::rhs(self.b, n, jac, &mut self.db, &self.tmp, k3);
        for i in 0..len {
            self.tmp[i] = y[i] + h * k3[i];
        }
        Self::rhs(self.b, n, jac, &mut self.db, &self.tmp, k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    fn run(&mut self, y: &mut [f64], dt: f64, m: usize) {
        let h = dt / m as f64;
        for _ in 0..m {
            self.step(y, h);
        }
    }
}

fn y_len(n: usize, jac: bool) -> usize {
    if jac {
        n + n * n
    } else {
        n
    }
}

fn initial_state(x: &[f64], jac: bool) -> Vec<f64> {
    let n = x.len();
    let mut y = x.to_vec();
    if jac {
        y.extend((0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }));
    }
    y
}

fn result_from(time: f64, y: &[f64], n: usize, jac: bool, steps: usize, est: f64) -> FlowResult {
    FlowResult {
        time,
        endpoint: y[..n].to_vec(),
        jacobian: jac.then(|| DMatrix::from_row_slice(n, n, &y[n..])),
        steps,
        error_estimate: est,
    }
}

/// Flow of `b` from `x` sampled at each of `times`, which must be monotone
/// and of one sign (backward flow for negative times).
///
/// Each interval between consecutive times is integrated with fixed RK4
/// substeps no longer than [`max_step`]; the substep count doubles until the
/// difference between `m` and `2m` substeps is within the interval's share of
/// `tol`, and the finer result is kept. Piecewise fields need two consecutive
/// doublings within a quarter of that share, and their Jacobians are carried
/// along without error control.
pub fn advect_times(b: &VectorField, x: &[f64], times: &[f64], tol: f64, jacobian: bool) -> Result<Vec<FlowResult>> {
    let n = b.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    if !(tol > 0.0) {
        return Err(invalid("integrator tolerance must be positive"));
    }
    let horizon = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let forward = times.iter().all(|&t| t >= 0.0);
    let backward = times.iter().all(|&t| t <= 0.0);
    let monotone = times.windows(2).all(|w| if forward { w[1] >= w[0] } else { w[1] <= w[0] });
    if !(forward || backward) || !monotone {
        return Err(invalid("sample times must be monotone and of one sign"));
    }

    if let Some(c) = b.constant_value() {
        return Ok(times
            .iter()
            .map(|&t| {
                let mut y: Vec<f64> = x.iter().zip(c).map(|(xi, ci)| xi + t * ci).collect();
                if jacobian {
                    y.extend((0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }));
                }
                result_from(t, &y, n, jacobian, 0, 0.0)
            })
            .collect());
    }

    let hmax = max_step(b, tol);
    // Across derivative jumps the error is not monotone in the substep count,
    // so one lucky agreement is not trusted.
    let (safety, needed) = if b.is_piecewise() { (4.0, 2) } else { (1.0, 1) };
    // The variational equation sees jumps of Db there, which fixed substeps
    // only resolve to first order, so only the position is controlled.
    let controlled = if b.is_piecewise() { n } else { y_len(n, jacobian) };
    let mut stepper = Stepper::new(b, jacobian);
    let mut y = initial_state(x, jacobian);
    let mut coarse = y.clone();
    let mut fine = y.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    let mut steps = 0usize;
    let mut est_total = 0.0;
    for &t in times {
        let dt = t - t_prev;
        if dt != 0.0 {
            let local_tol = tol * dt.abs() / horizon;
            let ratio = (dt.abs() / hmax).ceil();
            if !(ratio <= MAX_SUBSTEPS as f64) {
                return Err(Error::StepUnderflow { time: t_prev, step: hmax, estimate: f64::NAN });
            }
            let mut m = (ratio as usize).max(1);
            coarse.copy_from_slice(&y);
            stepper.run(&mut coarse, dt, m);
            steps += m;
            let mut passes = 0;
            loop {
                fine.copy_from_slice(&y);
                stepper.run(&mut fine, dt, 2 * m);
                steps += 2 * m;
                let est = coarse[..controlled].iter().zip(&fine[..controlled]).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
                if est <= local_tol / safety {
                    passes += 1;
                    if passes == needed {
                        est_total += est;
                        break;
                    }
                } else {
                    passes = 0;
                }
                m *= 2;
                if m > MAX_SUBSTEPS {
                    return Err(Error::StepUnderflow { time: t_prev, step: dt / m as f64, estimate: est });
                }
                std::mem::swap(&mut coarse, &mut fine);
            }
            std::mem::swap(&mut y, &mut fine);
            t_prev = t;
        }
        out.push(result_from(t, &y, n, jacobian, steps, est_total));
    }
    Ok(out)
}

/// `Φ_t(x)`; negative `t` integrates the inverse flow.
pub fn advect(b: &VectorField, x: &[f64], t: f64, tol: f64) -> Result<FlowResult> {
    Ok(advect_times(b, x, &[t], tol, false)?.pop().expect("one sample time"))
}

/// `Φ_t(x)` together with `DΦ_t(x)` from the variational equation `J' = Db J`.
pub fn advect_with_jacobian(b: &VectorField, x: &[f64], t: f64, tol: f64) -> Result<FlowResult> {
    Ok(advect_times(b, x, &[t], tol, true)?.pop().expect("one sample time"))
}

pub fn jacobian_action(b: &VectorField, x: &[f64], t: f64, tol: f64) -> Result<DMatrix<f64>> {
    Ok(advect_with_jacobian(b, x, t, tol)?.jacobian.expect("jacobian requested"))
}
