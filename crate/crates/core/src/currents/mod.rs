//! Polyhedral and atomic k-currents.

mod discrete;
mod polyhedral;
mod quadrature;
mod refine;

pub use discrete::{pair_current, DiscreteCurrent, PushStats};
pub use polyhedral::{PolyhedralCurrent, Simplex, MERGE_THRESHOLD};
pub use quadrature::{simplex_rule, SimplexRule, SUPPORTED_ORDERS};

/// A seeded chain of `cells` k-simplices with weights in ±{1,2,3} whose
/// vertices come from a pool of `k + 3` random points in `[-1,1]^n`, so that
/// faces are shared and boundary merging is exercised.
pub fn random_chain(seed: u64, n: usize, k: usize, cells: usize) -> crate::Result<PolyhedralCurrent> {
    use rand::{Rng, SeedableRng};
    if k > n {
        return Err(crate::error::invalid(format!("grade {k} exceeds dimension {n}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<Vec<f64>> = (0..k + 3).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut simplices = Vec::with_capacity(cells);
    while simplices.len() < cells {
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        for i in 0..=k {
            let j = rng.gen_range(i..idx.len());
            idx.swap(i, j);
        }
        let w = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0][rng.gen_range(0..6)];
        simplices.push(Simplex { vertices: idx[..=k].iter().map(|&i| pool[i].clone()).collect(), weight: w });
    }
    PolyhedralCurrent::new(n, k, simplices)
}

/// Free-function form of [`PolyhedralCurrent::boundary`].
pub fn boundary(p: &PolyhedralCurrent) -> crate::Result<PolyhedralCurrent> {
    p.boundary()
}
