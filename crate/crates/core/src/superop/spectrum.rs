//! Eigen-decomposition of superoperators, steady states and spectral evolution.

use std::cmp::Ordering;

use ndarray::{Array1, Array2};

use super::{devectorize, SuperOp};
use crate::algebra::{DensityMatrix, HilbertSpace, Operator};
use crate::error::{Error, Result};
use crate::linalg::{self, c, ZERO};
use crate::C64;

/// Largest operator side for which the full dense spectrum is computed.
pub const DEFAULT_MAX_DIM: usize = 32;

/// Above this eigenvector condition number the matrix is treated as
/// non-diagonalizable.
pub(crate) const CONDITION_LIMIT: f64 = 1e10;

const ZERO_TOL: f64 = 1e-8;

/// Sorted eigenvalues with right and left eigenmatrices.
///
/// Eigenvalues are ordered by ascending `|Re λ|`, then ascending `Im λ`, then
/// lexicographically by the entries of the right eigenmatrix. Right
/// eigenmatrices are scaled so that zero modes with nonzero trace have trace
/// one and every other mode has its first largest-modulus entry equal to one.
/// Left eigenmatrices satisfy `Tr[σ_j† ρ_k] = δ_jk`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    space: HilbertSpace,
    eigenvalues: Vec<C64>,
    right: Vec<Operator>,
    left: Vec<Operator>,
    residuals: Vec<f64>,
    condition_number: f64,
    diagonalizable: bool,
}

impl Spectrum {
    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn right(&self) -> &[Operator] {
        &self.right
    }

    /// Empty when the eigenvector matrix could not be inverted.
    pub fn left(&self) -> &[Operator] {
        &self.left
    }

    /// `‖L v − λ v‖ / ‖v‖` per eigenpair.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Condition number of the unit-column eigenvector matrix.
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn diagonalizable(&self) -> bool {
        self.diagonalizable
    }

    fn require_diagonalizable(&self) -> Result<()> {
        if !self.diagonalizable || self.left.len() != self.len() {
            return Err(Error::Capability(format!(
                "spectrum is not diagonalizable (eigenvector condition number {:.3e}); \
                 the generator is probably at or near an exceptional point",
                self.condition_number
            )));
        }
        Ok(())
    }

    /// `c_j = Tr[σ_j† X]` for an arbitrary operator.
    pub fn coefficients(&self, op: &Operator) -> Result<DecompositionCoefficients> {
        self.require_diagonalizable()?;
        if op.space() != &self.space {
            return Err(Error::InvalidArgument("operator and spectrum live on different spaces".into()));
        }
        let c = self.left.iter().map(|s| s.hs_inner(op)).collect();
        Ok(DecompositionCoefficients { c })
    }
}

/// Weights of an operator on the right eigenmatrices of a [`Spectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionCoefficients {
    pub c: Vec<C64>,
}

impl DecompositionCoefficients {
    /// `Σ_j c_j ρ_j`.
    pub fn reconstruct(&self, s: &Spectrum) -> Operator {
        let mut m = Array2::zeros((s.space.total_dim(), s.space.total_dim()));
        for (cj, r) in self.c.iter().zip(&s.right) {
            m.scaled_add(*cj, r.matrix());
        }
        Operator::new(s.space.clone(), m).expect("shape fits")
    }
}

pub fn spectrum(l: &SuperOp) -> Result<Spectrum> {
    spectrum_with_limit(l, DEFAULT_MAX_DIM)
}

pub fn spectrum_with_limit(l: &SuperOp, max_dim: usize) -> Result<Spectrum> {
    let d = l.op_dim();
    if d > max_dim {
        return Err(Error::Capability(format!(
            "dense spectrum needs operator side ≤ {max_dim}, got {d}"
        )));
    }
    let (vals, mut vecs) = linalg::eig(l.matrix())?;
    let n = vals.len();
    let scale = vals.iter().map(|z| z.norm()).fold(1.0, f64::max);

    for k in 0..n {
        let mut col = vecs.column_mut(k);
        let pivot = if vals[k].norm() <= ZERO_TOL * scale {
            let t: C64 = (0..d).map(|a| col[a * d + a]).sum();
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if t.norm() > 1e-8 * norm {
                Some(t)
            } else {
                None
            }
        } else {
            None
        };
        let pivot = pivot.unwrap_or_else(|| {
            let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            *col.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).expect("nonempty")
        });
        col.mapv_inplace(|z| z / pivot);
    }

    let keys: Vec<SortKey> = (0..n).map(|k| SortKey::new(vals[k], vecs.column(k).iter())).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));

    let eigenvalues: Vec<C64> = order.iter().map(|&k| vals[k]).collect();
    let sorted = Array2::from_shape_fn((n, n), |(i, j)| vecs[[i, order[j]]]);

    let mut unit = sorted.clone();
    for mut col in unit.columns_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        col.mapv_inplace(|z| z / norm);
    }
    let condition_number = linalg::condition_number(unit.view())?;
    let diagonalizable = condition_number <= CONDITION_LIMIT;

    let residuals = (0..n)
        .map(|k| {
            let v = sorted.column(k).to_owned();
            let r = l.matrix().dot(&v) - &v * eigenvalues[k];
            (linalg::norm_sqr(&r) / linalg::norm_sqr(&v)).sqrt()
        })
        .collect();

    let right = (0..n)
        .map(|k| devectorize(&sorted.column(k).to_owned(), l.space()))
        .collect::<Result<Vec<_>>>()?;

    let left = match linalg::inverse(&sorted) {
        Ok(inv) => (0..n)
            .map(|k| devectorize(&inv.row(k).mapv(|z| z.conj()), l.space()))
            .collect::<Result<Vec<_>>>()?,
        Err(_) => Vec::new(),
    };

    Ok(Spectrum {
        space: l.space().clone(),
        eigenvalues,
        right,
        left,
        residuals,
        condition_number,
        diagonalizable,
    })
}

/// Quantised ordering key; buckets of width `ZERO_TOL` make near-equal values tie.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct SortKey {
    re: i64,
    im: i64,
    entries: Vec<(i64, i64)>,
}

impl SortKey {
    fn new<'a>(lambda: C64, entries: impl Iterator<Item = &'a C64>) -> Self {
        let q = |x: f64| (x / ZERO_TOL).round() as i64;
        Self {
            re: q(lambda.re.abs()),
            im: q(lambda.im),
            entries: entries.map(|z| (q(z.re), q(z.im))).collect(),
        }
    }
}

/// Kernel of a superoperator as Hermitian operators.
#[derive(Debug, Clone)]
pub struct SteadyStates {
    /// The trace-one element of the kernel with the smallest Hilbert–Schmidt norm.
    pub state: DensityMatrix,
    /// Traceless Hermitian kernel elements completing the basis, orthonormal in
    /// the Hilbert–Schmidt inner product and orthogonal to `state`'s trace direction.
    pub traceless: Vec<Operator>,
}

impl SteadyStates {
    pub fn kernel_dim(&self) -> usize {
        1 + self.traceless.len()
    }

    pub fn is_unique(&self) -> bool {
        self.traceless.is_empty()
    }

    /// All basis elements, trace-one element first.
    pub fn basis(&self) -> Vec<Operator> {
        std::iter::once(self.state.as_operator().clone())
            .chain(self.traceless.iter().cloned())
            .collect()
    }
}

/// Null space of `L` via the SVD, turned into a Hermitian basis with a single
/// trace-carrying element.
pub fn steady_states(l: &SuperOp) -> Result<SteadyStates> {
    let space = l.space();
    let d = l.op_dim();
    if d > DEFAULT_MAX_DIM {
        return Err(Error::Capability(format!(
            "dense kernel computation needs operator side ≤ {DEFAULT_MAX_DIM}, got {d}"
        )));
    }
    let (s, vt) = linalg::svd_right(l.matrix())?;
    let n = d * d;
    let norm = s.first().copied().unwrap_or(0.0);
    let tol = 1e-8 * norm.max(1.0);
    let null: Vec<Array1<C64>> = (0..n)
        .filter(|&k| s.get(k).copied().unwrap_or(0.0) <= tol)
        .map(|k| vt.row(k).mapv(|z| z.conj()))
        .collect();
    if null.is_empty() {
        return Err(Error::Numeric(format!(
            "superoperator has no kernel (smallest singular value {:.3e})",
            s.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let k = null.len();

    // Hermitian candidates, then real Gram–Schmidt under Tr[A B].
    let mut basis: Vec<Array2<C64>> = Vec::with_capacity(k);
    for v in &null {
        let x = devectorize(v, space)?.into_matrix();
        let xd = linalg::dagger(&x);
        let a = (&x + &xd) * c(0.5, 0.0);
        let b = (&x - &xd) * c(0.0, -0.5);
        for mut cand in [a, b] {
            for e in &basis {
                let overlap = linalg::hs_inner(e, &cand).re;
                cand.scaled_add(c(-overlap, 0.0), e);
            }
            let nrm = linalg::hs_norm(&cand);
            if nrm > 1e-6 && basis.len() < k {
                basis.push(cand / c(nrm, 0.0));
            }
        }
    }
    if basis.len() < k {
        return Err(Error::Numeric("kernel has no Hermitian basis of full rank".into()));
    }

    let traces: Vec<f64> = basis.iter().map(|b| linalg::trace(b).re).collect();
    let t2: f64 = traces.iter().map(|t| t * t).sum();
    if t2.sqrt() < 1e-8 {
        return Err(Error::Numeric("kernel contains no element with nonzero trace".into()));
    }
    let mut primary = Array2::zeros((d, d));
    for (b, t) in basis.iter().zip(&traces) {
        primary.scaled_add(c(t / t2, 0.0), b);
    }
    let primary = linalg::hermitian_part(&primary);

    // Orthonormal complement of the trace direction in coefficient space.
    let mut dirs: Vec<Vec<f64>> = vec![traces.iter().map(|t| t / t2.sqrt()).collect()];
    for unit in 0..k {
        let mut v = vec![0.0; k];
        v[unit] = 1.0;
        for u in &dirs {
            let p: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-6 && dirs.len() < k {
            dirs.push(v.iter().map(|x| x / nrm).collect());
        }
    }
    let traceless = dirs[1..]
        .iter()
        .map(|coef| {
            let mut m = Array2::zeros((d, d));
            for (b, a) in basis.iter().zip(coef) {
                m.scaled_add(c(*a, 0.0), b);
            }
            let m = canonical_sign(linalg::hermitian_part(&m));
            Operator::new(space.clone(), m)
        })
        .collect::<Result<Vec<_>>>()?;

    let state = DensityMatrix::new(Operator::new(space.clone(), primary)?)
        .map_err(|e| Error::Numeric(format!("steady state failed validation: {e}")))?;
    Ok(SteadyStates { state, traceless })
}

fn canonical_sign(m: Array2<C64>) -> Array2<C64> {
    let max = linalg::max_abs(&m);
    let pivot = m.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied().unwrap_or(ZERO);
    if pivot.re < 0.0 {
        -m
    } else {
        m
    }
}

/// Outcome of [`liouvillian_gap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// Smallest nonzero `|Re λ|`.
    pub gap: f64,
    /// Number of eigenvalues equal to zero within tolerance.
    pub zero_count: usize,
    /// More than one zero eigenvalue: the steady state is not unique and the
    /// gap refers to relaxation within the fixed sector.
    pub degenerate: bool,
}

pub fn liouvillian_gap(s: &Spectrum) -> Result<GapReport> {
    let scale = s.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let is_zero = |z: &C64| z.norm() <= ZERO_TOL * scale;
    let zero_count = s.eigenvalues.iter().filter(|z| is_zero(z)).count();
    let gap = s
        .eigenvalues
        .iter()
        .map(|z| z.re.abs())
        .filter(|re| *re > ZERO_TOL * scale)
        .min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .ok_or_else(|| Error::Numeric("no eigenvalue has a nonzero real part; the gap is undefined".into()))?;
    let degenerate = zero_count > 1;
    if degenerate {
        log::warn!("zero eigenvalue has multiplicity {zero_count}; gap refers to the fixed sector");
    }
    Ok(GapReport { gap, zero_count, degenerate })
}

pub fn decompose(rho0: &DensityMatrix, s: &Spectrum) -> Result<DecompositionCoefficients> {
    s.coefficients(rho0.as_operator())
}

/// `Σ_j c_j e^{λ_j t} ρ_j`, Hermitized.
pub fn spectral_evolve(rho0: &DensityMatrix, s: &Spectrum, t: f64) -> Result<DensityMatrix> {
    let coeffs = decompose(rho0, s)?;
    let evolved = DecompositionCoefficients {
        c: coeffs.c.iter().zip(&s.eigenvalues).map(|(c, l)| c * (l * t).exp()).collect(),
    };
    Ok(DensityMatrix::assume_valid(evolved.reconstruct(s).hermitian_part()))
}
