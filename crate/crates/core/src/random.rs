//! Random operators and states for tests, property checks and sampling.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{DensityMatrix, HilbertSpace, Ket, Operator};
use crate::error::Result;
use crate::linalg::{self, c};
use crate::measurement::PovmSet;
use crate::C64;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Array2<C64> {
    Array2::from_shape_simple_fn((n, n), || gaussian(rng))
}

pub fn operator<R: Rng + ?Sized>(space: &HilbertSpace, rng: &mut R) -> Operator {
    Operator::new(space.clone(), ginibre(space.total_dim(), rng)).expect("shape fits")
}

pub fn hermitian<R: Rng + ?Sized>(space: &HilbertSpace, rng: &mut R) -> Operator {
    operator(space, rng).hermitian_part()
}

/// Haar-distributed normalised ket.
pub fn ket<R: Rng + ?Sized>(space: &HilbertSpace, rng: &mut R) -> Ket {
    let amps = Array1::from_shape_simple_fn(space.total_dim(), || gaussian(rng));
    Ket::new(space.clone(), amps)
        .expect("length fits")
        .normalized()
        .expect("a Gaussian vector is almost surely nonzero")
}

/// Full-rank density matrix `G G† / Tr[G G†]` from the Ginibre ensemble.
pub fn density_matrix<R: Rng + ?Sized>(space: &HilbertSpace, rng: &mut R) -> DensityMatrix {
    let g = ginibre(space.total_dim(), rng);
    let m = g.dot(&linalg::dagger(&g));
    let t = linalg::trace(&m);
    let m = linalg::hermitian_part(&(m / t));
    DensityMatrix::assume_valid(Operator::new(space.clone(), m).expect("shape fits"))
}

/// Random POVM with `n_outcomes` elements: Gaussian `K_r` completed as
/// `M_r = K_r (Σ_s K_s†K_s)^{−1/2}`.
pub fn povm<R: Rng + ?Sized>(space: &HilbertSpace, n_outcomes: usize, rng: &mut R) -> Result<PovmSet> {
    let d = space.total_dim();
    let ks: Vec<Array2<C64>> = (0..n_outcomes).map(|_| ginibre(d, rng)).collect();
    let mut s = Array2::zeros((d, d));
    for k in &ks {
        s += &linalg::dagger(k).dot(k);
    }
    let s = linalg::hermitian_part(&s);
    let root = linalg::inv_sqrt_hermitian(&s)?;
    let outcomes = ks
        .iter()
        .enumerate()
        .map(|(r, k)| Ok((format!("r{r}"), Operator::new(space.clone(), k.dot(&root))?)))
        .collect::<Result<Vec<_>>>()?;
    PovmSet::new(outcomes)
}
