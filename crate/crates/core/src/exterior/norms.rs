//! Comass of covectors (multistart ascent over orthonormal frames) and mass
//! of vectors (cutting-plane LP over the comass unit ball).
//!
//! Grades 2 and n − 2 have an exact route through the normal form of a skew
//! matrix: with singular values `λ_1, λ_1, λ_2, λ_2, …` the comass is `λ_1`
//! and the mass is `Σ λ_i`. `comass` and `mass_norm` take that route when it
//! applies; `comass_ascent` and `mass_cutting_plane` always run the general
//! engines.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sample::orthogonal_complement;
use super::{interior, pair, rank, span_of, wedge_columns, wedge_sign, Alternating, KCovector, KVector, MultiIndex};

#[derive(Clone, Debug, PartialEq)]
pub struct ComassOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Stop a restart once one sweep improves the value by less than this (relative).
    pub tol: f64,
    pub max_sweeps: usize,
    /// Relative band within which a restart counts as agreeing with the best value.
    pub agreement_tol: f64,
}

impl Default for ComassOptions {
    fn default() -> Self {
        ComassOptions { restarts: 64, seed: 0, tol: 1e-10, max_sweeps: 10_000, agreement_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct ComassEstimate {
    /// Best value found; a lower bound for the true comass.
    pub value: f64,
    /// Orthonormal frame (columns) attaining `value`.
    pub frame: DMatrix<f64>,
    pub agreement: usize,
    pub restarts: usize,
}

impl ComassEstimate {
    /// `v_1 ∧ … ∧ v_k` of the maximizing frame.
    pub fn simple_vector(&self) -> KVector {
        wedge_columns(&self.frame)
    }
}

/// Grades where every element is simple, so comass and mass equal the Euclidean norm.
fn all_simple(n: usize, k: usize) -> bool {
    k <= 1 || k + 1 >= n
}

/// Comass, exact for grades 2 and n − 2 and by [`comass_ascent`] otherwise.
pub fn comass(alpha: &KCovector, opts: &ComassOptions) -> ComassEstimate {
    let (n, k) = (alpha.dim(), alpha.grade());
    if !alpha.is_zero() && !all_simple(n, k) && has_normal_form(n, k) {
        return comass_normal_form(alpha, opts);
    }
    comass_ascent(alpha, opts)
}

/// Multistart block-coordinate ascent over orthonormal k-frames.
pub fn comass_ascent(alpha: &KCovector, opts: &ComassOptions) -> ComassEstimate {
    let n = alpha.dim();
    let k = alpha.grade();
    if alpha.is_zero() {
        return ComassEstimate { value: 0.0, frame: standard_frame(n, k), agreement: opts.restarts, restarts: 0 };
    }
    if all_simple(n, k) {
        return ComassEstimate { value: alpha.norm(), frame: simple_frame(alpha), agreement: opts.restarts, restarts: 0 };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut values = Vec::with_capacity(opts.restarts.max(1));
    let mut best_value = f64::NEG_INFINITY;
    let mut best_frame = standard_frame(n, k);
    for _ in 0..opts.restarts.max(1) {
        let start = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
        let (value, frame) = ascend(alpha, orthonormalize(start), opts);
        if value > best_value {
            best_value = value;
            best_frame = frame;
        }
        values.push(value);
    }
    let agreement = values
        .iter()
        .filter(|&&v| (best_value - v) <= opts.agreement_tol * best_value.abs().max(f64::MIN_POSITIVE))
        .count();
    ComassEstimate { value: best_value, frame: best_frame, agreement, restarts: values.len() }
}

fn standard_frame(n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |i, j| if i == j { 1.0 } else { 0.0 })
}

fn simple_frame(alpha: &KCovector) -> DMatrix<f64> {
    let mut frame = span_of(alpha).expect("nonzero covector");
    if frame.ncols() > 0 {
        let v = wedge_columns(&frame);
        if pair(&v, alpha).unwrap_or(0.0) < 0.0 {
            frame.column_mut(0).neg_mut();
        }
    }
    frame
}

/// Modified Gram–Schmidt on the columns.
fn orthonormalize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for j in 0..m.ncols() {
        for i in 0..j {
            let d = m.column(i).dot(&m.column(j));
            let ci = m.column(i).clone_owned();
            m.column_mut(j).axpy(-d, &ci, 1.0);
        }
        let nrm = m.column(j).norm();
        if nrm > 0.0 {
            m.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    m
}

/// Block-coordinate ascent: each column is replaced by the normalized partial
/// gradient, which is orthogonal to the other columns and maximizes the
/// objective along that column.
fn ascend(alpha: &KCovector, mut frame: DMatrix<f64>, opts: &ComassOptions) -> (f64, DMatrix<f64>) {
    let n = alpha.dim();
    let k = alpha.grade();
    let mut value = pair(&wedge_columns(&frame), alpha).unwrap_or(0.0);
    for _ in 0..opts.max_sweeps {
        for j in 0..k {
            let mut others = KVector::scalar(n, 1.0).expect("valid scalar");
            for c in (0..k).filter(|&c| c != j) {
                let col = KVector::from_coeffs(n, 1, frame.column(c).iter().copied().collect()).expect("column");
                others = others.wedge(&col).expect("grade below n");
            }
            let g = interior(&others, alpha).expect("grades compatible");
            let sign = if (j + k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
            let gn = g.norm();
            if gn > 0.0 {
                for (m, &c) in g.coeffs().iter().enumerate() {
                    frame[(m, j)] = sign * c / gn;
                }
            }
        }
        frame = orthonormalize(frame);
        let next = pair(&wedge_columns(&frame), alpha).unwrap_or(value);
        let improvement = next - value;
        value = value.max(next);
        if improvement <= opts.tol * value.abs() {
            break;
        }
    }
    (value, frame)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassOptions {
    pub comass: ComassOptions,
    /// Stop when `(upper - lower) <= gap_tol * upper`.
    pub gap_tol: f64,
    pub max_iterations: usize,
}

impl Default for MassOptions {
    fn default() -> Self {
        MassOptions {
            comass: ComassOptions { restarts: 16, max_sweeps: 1000, ..ComassOptions::default() },
            gap_tol: 1e-9,
            max_iterations: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MassEstimate {
    /// Best value `<η,α>/comass(α)` found over the iterates.
    pub value: f64,
    /// Objective of the last relaxed LP (a decomposition bound, up to LP accuracy).
    pub upper_bound: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Covector of unit (estimated) comass attaining `value`.
    pub dual: KCovector,
}

/// Mass, exact for grades 2 and n − 2 and by [`mass_cutting_plane`] otherwise.
pub fn mass_norm(eta: &KVector, opts: &MassOptions) -> MassEstimate {
    let (n, k) = (eta.dim(), eta.grade());
    if !eta.is_zero() && !all_simple(n, k) && has_normal_form(n, k) {
        return mass_normal_form(eta);
    }
    mass_cutting_plane(eta, opts)
}

/// Mass via its dual definition, `sup { <η,α> : comass(α) ≤ 1 }`.
///
/// The comass ball is approximated from outside by the box `|α_I| ≤ 1` and
/// cuts `±<ξ,α> ≤ 1` at the maximizing frames `ξ` of previous iterates.
/// When the LP fails the estimate is returned unconverged with the lower bound
/// found so far.
pub fn mass_cutting_plane(eta: &KVector, opts: &MassOptions) -> MassEstimate {
    let n = eta.dim();
    let k = eta.grade();
    let len = eta.coeffs().len();
    let nrm = eta.norm();
    if nrm == 0.0 || all_simple(n, k) {
        let dual = if nrm == 0.0 { KCovector::zero_unchecked(n, k) } else { eta.dual::<super::Covector>().scale(1.0 / nrm) };
        return MassEstimate { value: nrm, upper_bound: nrm, converged: true, iterations: 0, dual };
    }

    let mut inner = opts.comass.clone();
    let lower = |alpha: &KCovector, inner: &mut ComassOptions| {
        inner.seed = inner.seed.wrapping_add(1);
        let c = comass(alpha, inner);
        (pair(eta, alpha).unwrap_or(0.0) / c.value, c)
    };

    let seed_alpha: KCovector = eta.dual();
    let (lb0, c0) = lower(&seed_alpha, &mut inner);
    let mut best = lb0;
    let mut best_dual = seed_alpha.clone().scale(1.0 / c0.value);

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = eta.coeffs().iter().map(|&c| problem.add_var(c, (-1.0, 1.0))).collect();
    let cut = |xi: &KVector| {
        let mut e = LinearExpr::empty();
        for (v, &c) in vars.iter().zip(xi.coeffs()) {
            if c != 0.0 {
                e.add(*v, c);
            }
        }
        e
    };
    let xi0 = c0.simple_vector();
    problem.add_constraint(cut(&xi0), ComparisonOp::Le, 1.0);
    problem.add_constraint(cut(&xi0), ComparisonOp::Ge, -1.0);

    let mut solution = match problem.solve().ok().and_then(|o| o.into_solution().ok()) {
        Some(s) => s,
        None => {
            return MassEstimate { value: best, upper_bound: f64::INFINITY, converged: false, iterations: 0, dual: best_dual }
        }
    };
    let mut upper = solution.objective();
    for it in 1..=opts.max_iterations {
        let alpha = KCovector::from_coeffs(n, k, vars.iter().map(|v| solution.var_value(*v)).collect::<Vec<_>>())
            .expect("coefficient count matches");
        debug_assert_eq!(alpha.coeffs().len(), len);
        let (lb, c) = lower(&alpha, &mut inner);
        if lb > best {
            best = lb;
            best_dual = alpha.scale(1.0 / c.value);
        }
        if upper - best <= opts.gap_tol * upper.abs() {
            return MassEstimate { value: best, upper_bound: upper, converged: true, iterations: it, dual: best_dual };
        }
        let xi = c.simple_vector();
        let next = solution
            .add_constraint(cut(&xi), ComparisonOp::Le, 1.0)
            .ok()
            .and_then(SolveOutcome::into_solution_ok)
            .and_then(|s| s.add_constraint(cut(&xi), ComparisonOp::Ge, -1.0).ok())
            .and_then(SolveOutcome::into_solution_ok);
        match next {
            Some(s) => solution = s,
            None => {
                return MassEstimate { value: best, upper_bound: upper, converged: false, iterations: it, dual: best_dual }
            }
        }
        upper = solution.objective().min(upper);
    }
    MassEstimate { value: best, upper_bound: upper, converged: false, iterations: opts.max_iterations, dual: best_dual }
}

fn has_normal_form(n: usize, k: usize) -> bool {
    k == 2 || k + 2 == n
}

/// Hodge star on coefficients, `e_I ↦ ε(I, I^c) e_{I^c}`: a signed permutation,
/// hence an isometry taking simple elements to simple elements and preserving
/// the pairing.
fn hodge<K>(a: &Alternating<K>) -> Alternating<K> {
    let n = a.dim();
    let full = MultiIndex::from_mask(((1u64 << n) - 1) as u32);
    let mut out = Alternating::zero_unchecked(n, n - a.grade());
    for (idx, c) in a.terms() {
        let comp = MultiIndex::from_mask(full.mask() & !idx.mask());
        out.coeffs_mut()[rank(n, comp)] = wedge_sign(idx, comp) * c;
    }
    out
}

/// The grade-2 element (taking the Hodge star of grade n − 2) as a skew matrix
/// `A` with `<u∧v, a> = uᵀ A v`.
fn skew_matrix<K>(a: &Alternating<K>) -> DMatrix<f64> {
    let two = if a.grade() == 2 { a.clone() } else { hodge(a) };
    let n = a.dim();
    let mut m = DMatrix::zeros(n, n);
    for (idx, c) in two.terms() {
        let mut it = idx.indices();
        let (i, j) = (it.next().expect("grade 2"), it.next().expect("grade 2"));
        m[(i, j)] = c;
        m[(j, i)] = -c;
    }
    m
}

fn skew_from_matrix<K>(n: usize, k: usize, m: &DMatrix<f64>) -> Alternating<K> {
    let mut two = Alternating::zero_unchecked(n, 2);
    for (idx, c) in super::basis(n, 2).iter().zip(two.coeffs_mut()) {
        let mut it = idx.indices();
        let (i, j) = (it.next().expect("grade 2"), it.next().expect("grade 2"));
        *c = 0.5 * (m[(i, j)] - m[(j, i)]);
    }
    if k == 2 {
        two
    } else {
        hodge(&two)
    }
}

fn comass_normal_form(alpha: &KCovector, opts: &ComassOptions) -> ComassEstimate {
    let k = alpha.grade();
    let a = skew_matrix(alpha);
    // u: top eigenvector of AᵀA; v = Aᵀu / |Aᵀu| gives uᵀ A v = |Aᵀu| = σ_max
    let eig = (a.transpose() * &a).symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let u: DVector<f64> = eig.eigenvectors.column(top).into_owned();
    let atu = a.transpose() * &u;
    let plane = DMatrix::from_columns(&[u, atu.normalize()]);
    let mut frame = if k == 2 { plane } else { orthogonal_complement(&plane) };
    let mut value = pair(&wedge_columns(&frame), alpha).unwrap_or(0.0);
    if value < 0.0 {
        frame.column_mut(0).neg_mut();
        value = -value;
    }
    ComassEstimate { value, frame, agreement: opts.restarts, restarts: 0 }
}

fn mass_normal_form(eta: &KVector) -> MassEstimate {
    let (n, k) = (eta.dim(), eta.grade());
    let h = skew_matrix(eta);
    // Singular values of a skew matrix come in equal pairs.
    let value = 0.5 * h.clone().svd(false, false).singular_values.sum();
    // Dual: the polar factor H (HᵀH)^{-1/2}, skew with unit singular values on its range.
    let eig = (h.transpose() * &h).symmetric_eigen();
    let cut = 1e-20 * eig.eigenvalues.max();
    let mut inv_sqrt = DMatrix::zeros(n, n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cut {
            let v = eig.eigenvectors.column(i);
            inv_sqrt += (v * v.transpose()) / l.sqrt();
        }
    }
    let dual = skew_from_matrix(n, k, &(&h * inv_sqrt));
    MassEstimate { value, upper_bound: value, converged: true, iterations: 0, dual }
}

trait IntoSolutionOk {
    fn into_solution_ok(self) -> Option<microlp::Solution>;
}

impl IntoSolutionOk for SolveOutcome {
    fn into_solution_ok(self) -> Option<microlp::Solution> {
        self.into_solution().ok()
    }
}

impl KCovector {
    /// Comass with default options.
    pub fn comass(&self) -> f64 {
        comass(self, &ComassOptions::default()).value
    }
}

impl KVector {
    /// Mass norm with default options.
    pub fn mass(&self) -> f64 {
        mass_norm(self, &MassOptions::default()).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e(n: usize, idx: &[usize]) -> KVector {
        KVector::basis_element(n, idx).unwrap()
    }

    fn ec(n: usize, idx: &[usize]) -> KCovector {
        KCovector::basis_element(n, idx).unwrap()
    }

    #[test]
    fn comass_examples() {
        let o = ComassOptions::default();
        assert_relative_eq!(comass(&ec(4, &[0, 1]), &o).value, 1.0, epsilon = 1e-12);
        assert_relative_eq!(comass(&ec(4, &[0, 1]).scale(2.0), &o).value, 2.0, epsilon = 1e-12);
        let w = ec(4, &[0, 1]) + ec(4, &[2, 3]);
        let est = comass(&w, &o);
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-9);
        assert!(est.agreement >= 1);
        assert_relative_eq!(pair(&est.simple_vector(), &w).unwrap(), est.value, epsilon = 1e-12);
        assert_eq!(comass(&KCovector::zero(4, 2).unwrap(), &o).value, 0.0);
    }

    #[test]
    fn simple_grades_short_circuit() {
        let a = KCovector::from_coeffs(4, 3, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let est = comass(&a, &ComassOptions::default());
        assert_relative_eq!(est.value, a.norm(), epsilon = 1e-12);
        assert_relative_eq!(pair(&est.simple_vector(), &a).unwrap(), a.norm(), epsilon = 1e-10);
    }

    #[test]
    fn mass_examples() {
        let o = MassOptions::default();
        assert_relative_eq!(mass_norm(&e(4, &[0, 1]), &o).value, 1.0, epsilon = 1e-12);
        assert_eq!(mass_norm(&KVector::zero(4, 2).unwrap(), &o).value, 0.0);
        let est = mass_norm(&(e(4, &[0, 1]) + e(4, &[2, 3])), &o);
        assert!(est.converged, "{est:?}");
        assert_relative_eq!(est.value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn normal_form_matches_the_general_engines() {
        use crate::exterior::sample::random_alternating;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, k) in [(4, 2), (5, 2), (5, 3), (6, 4)] {
            for _ in 0..3 {
                let a: KCovector = random_alternating(&mut rng, n, k).unwrap();
                let exact = comass(&a, &ComassOptions::default());
                let ascent = comass_ascent(&a, &ComassOptions::default());
                assert_relative_eq!(exact.value, ascent.value, max_relative = 1e-8);
                assert_relative_eq!(pair(&exact.simple_vector(), &a).unwrap(), exact.value, max_relative = 1e-10);
                let eta: KVector = random_alternating(&mut rng, n, k).unwrap();
                let m = mass_norm(&eta, &MassOptions::default());
                let lp = mass_cutting_plane(&eta, &MassOptions::default());
                assert_relative_eq!(m.value, lp.value, max_relative = 1e-7);
                assert_relative_eq!(pair(&eta, &m.dual).unwrap(), m.value, max_relative = 1e-8);
                assert_relative_eq!(comass(&m.dual, &ComassOptions::default()).value, 1.0, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn mass_of_simple_in_middle_grade() {
        let a = KVector::from_slice(&[1.0, 0.5, -0.2, 0.3, 0.0]).unwrap();
        let b = KVector::from_slice(&[0.0, 1.0, 2.0, -1.0, 0.5]).unwrap();
        let eta = a.wedge(&b).unwrap();
        let est = mass_norm(&eta, &MassOptions::default());
        assert_relative_eq!(est.value, eta.norm(), max_relative = 1e-6);
    }
}
