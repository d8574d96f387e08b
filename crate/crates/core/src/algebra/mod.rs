//! Operators, states and the tensor-product bookkeeping around them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array1, Array2};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, ONE, ZERO};
use crate::C64;

mod expr;

pub use expr::{parse_expression, parse_operator_expression, Expr, Factor, Symbol, Term};

/// Ordered list of tensor-factor dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return invalid("a Hilbert space needs at least one factor");
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return invalid(format!("factor {pos} has dimension 0"));
        }
        Ok(Self { dims })
    }

    /// A space with a single factor.
    pub fn single(dim: usize) -> Self {
        Self::new(vec![dim]).expect("dimension must be positive")
    }

    pub fn qubits(n: usize) -> Self {
        Self::new(vec![2; n]).expect("at least one qubit")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HilbertSpace { dims }
    }

    /// Mixed-radix digits of a flat basis index, most significant factor first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Inverse of [`HilbertSpace::digits`].
    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return invalid(format!(
                "expected {} basis labels, got {}",
                self.dims.len(),
                digits.len()
            ));
        }
        let mut index = 0;
        for (&k, &d) in digits.iter().zip(&self.dims) {
            if k >= d {
                return invalid(format!("basis label {k} out of range for dimension {d}"));
            }
            index = index * d + k;
        }
        Ok(index)
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.dims)
    }
}

/// A linear operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let n = space.total_dim();
        if matrix.dim() != (n, n) {
            return invalid(format!(
                "matrix of shape {:?} does not fit space {space} (dimension {n})",
                matrix.dim()
            ));
        }
        Ok(Self { space, matrix })
    }

    /// Wraps a square matrix as an operator on a single-factor space.
    pub fn from_matrix(matrix: Array2<C64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c || r == 0 {
            return invalid(format!("operator matrix must be square and non-empty, got {r}x{c}"));
        }
        Ok(Self { space: HilbertSpace::single(r), matrix })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        Self { matrix: linalg::eye(space.total_dim()), space: space.clone() }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { matrix: Array2::zeros((n, n)), space: space.clone() }
    }

    /// `|ψ⟩⟨φ|`.
    pub fn outer(psi: &Ket, phi: &Ket) -> Result<Self> {
        if psi.space != phi.space {
            return invalid("outer product of kets on different spaces");
        }
        let n = psi.dim();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = psi.amplitudes[i] * phi.amplitudes[j].conj();
            }
        }
        Ok(Self { space: psi.space.clone(), matrix: m })
    }

    pub fn projector(psi: &Ket) -> Self {
        Self::outer(psi, psi).expect("same space")
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    /// Same matrix, reinterpreted on another space of equal total dimension.
    pub fn with_space(self, space: HilbertSpace) -> Result<Self> {
        Self::new(space, self.matrix)
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space.clone(), matrix: linalg::dagger(&self.matrix) }
    }

    pub fn transpose(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.t().to_owned() }
    }

    pub fn conj(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.mapv(|z| z.conj()) }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * factor }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        self * other + other * self
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn hs_norm(&self) -> f64 {
        linalg::hs_norm(&self.matrix)
    }

    /// `Tr[self† other]`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        linalg::hs_inner(&self.matrix, &other.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.matrix) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = linalg::dagger(&self.matrix).dot(&self.matrix);
        linalg::max_abs(&(prod - linalg::eye(self.dim()))) <= tol
    }

    pub fn hermitian_part(&self) -> Self {
        Self { space: self.space.clone(), matrix: linalg::hermitian_part(&self.matrix) }
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if ket.space != self.space {
            return invalid(format!(
                "operator on {} applied to ket on {}",
                self.space, ket.space
            ));
        }
        Ok(Ket { space: self.space.clone(), amplitudes: self.matrix.dot(&ket.amplitudes) })
    }

    /// Matrix power with non-negative exponent.
    pub fn powi(&self, exponent: u32) -> Self {
        let mut out = Operator::identity(&self.space);
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    /// `exp(i θ self)` for a Hermitian operator.
    pub fn exp_i(&self, theta: f64) -> Result<Self> {
        if !self.is_hermitian(1e-10) {
            return invalid("exp_i requires a Hermitian generator");
        }
        let m = linalg::unitary_propagator(&self.matrix, -theta)?;
        Ok(Self { space: self.space.clone(), matrix: m })
    }
}

fn assert_same_space(a: &Operator, b: &Operator, what: &str) {
    assert!(
        a.space == b.space,
        "{what} of operators on different spaces: {} vs {}",
        a.space,
        b.space
    );
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_same_space(self, rhs, "sum");
        Operator { space: self.space.clone(), matrix: &self.matrix + &rhs.matrix }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_same_space(self, rhs, "difference");
        Operator { space: self.space.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_same_space(self, rhs, "product");
        Operator { space: self.space.clone(), matrix: self.matrix.dot(&rhs.matrix) }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(c(rhs, 0.0))
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(c(rhs, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(c(-1.0, 0.0))
    }
}

/// Truncated bosonic annihilation operator on Fock levels `0..=cutoff`.
pub fn annihilation(cutoff: usize) -> Result<Operator> {
    if cutoff < 1 {
        return invalid("bosonic cutoff must be at least 1");
    }
    let d = cutoff + 1;
    let mut m = Array2::zeros((d, d));
    for n in 1..d {
        m[[n - 1, n]] = c((n as f64).sqrt(), 0.0);
    }
    Operator::from_matrix(m)
}

pub fn creation(cutoff: usize) -> Result<Operator> {
    Ok(annihilation(cutoff)?.dagger())
}

/// `a†a` on Fock levels `0..=cutoff`, built diagonally.
pub fn number(cutoff: usize) -> Result<Operator> {
    if cutoff < 1 {
        return invalid("bosonic cutoff must be at least 1");
    }
    let diag = Array1::from_iter((0..=cutoff).map(|n| c(n as f64, 0.0)));
    Operator::from_matrix(Array2::from_diag(&diag))
}

/// Fock-space parity `exp(iπ a†a)`.
pub fn parity(cutoff: usize) -> Result<Operator> {
    if cutoff < 1 {
        return invalid("bosonic cutoff must be at least 1");
    }
    let diag = Array1::from_iter((0..=cutoff).map(|n| if n % 2 == 0 { ONE } else { -ONE }));
    Operator::from_matrix(Array2::from_diag(&diag))
}

pub fn identity(dim: usize) -> Operator {
    Operator::identity(&HilbertSpace::single(dim))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// Raising operator `σ+ = (σx + iσy)/2`.
    Plus,
    /// Lowering operator `σ− = (σx − iσy)/2`.
    Minus,
}

/// Two-level operators in the `(|↑⟩, |↓⟩)` basis.
pub fn pauli(axis: Pauli) -> Operator {
    let m = match axis {
        Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
        Pauli::Y => [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]],
        Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        Pauli::Plus => [[ZERO, ONE], [ZERO, ZERO]],
        Pauli::Minus => [[ZERO, ZERO], [ONE, ZERO]],
    };
    Operator::from_matrix(Array2::from(m.to_vec())).expect("2x2")
}

/// Kronecker product in list order.
pub fn tensor(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("tensor product of an empty list".into()))?;
    let mut out = first.clone();
    for op in rest {
        out = Operator {
            space: out.space.tensor(&op.space),
            matrix: linalg::kron(&out.matrix, &op.matrix),
        };
    }
    Ok(out)
}

/// Places `op` on factor `site` of `space`, identity elsewhere.
pub fn embed(op: &Operator, site: usize, space: &HilbertSpace) -> Result<Operator> {
    let Some(&d) = space.dims().get(site) else {
        return invalid(format!("site {site} out of range for space {space}"));
    };
    if op.dim() != d {
        return invalid(format!(
            "operator of dimension {} cannot sit on factor {site} of dimension {d}",
            op.dim()
        ));
    }
    let left: usize = space.dims()[..site].iter().product();
    let right: usize = space.dims()[site + 1..].iter().product();
    let m = linalg::kron(&linalg::kron(&linalg::eye(left), &op.matrix), &linalg::eye(right));
    Operator::new(space.clone(), m)
}

/// Reduced operator on the factors listed in `keep` (kept in original order).
pub fn partial_trace_operator(op: &Operator, keep: &[usize]) -> Result<Operator> {
    if keep.is_empty() {
        return invalid("partial trace must keep at least one factor");
    }
    let space = op.space();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= space.n_factors()) {
        return invalid(format!("site {bad} out of range for space {space}"));
    }
    let kept_space = HilbertSpace::new(kept.iter().map(|&k| space.dims()[k]).collect())?;
    let n = space.total_dim();
    // Split every flat index into (kept part, traced part).
    let split: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let digits = space.digits(i);
            let (mut k_idx, mut t_idx) = (0usize, 0usize);
            for (f, (&digit, &d)) in digits.iter().zip(space.dims()).enumerate() {
                if kept.binary_search(&f).is_ok() {
                    k_idx = k_idx * d + digit;
                } else {
                    t_idx = t_idx * d + digit;
                }
            }
            (k_idx, t_idx)
        })
        .collect();
    let m = kept_space.total_dim();
    let mut out = Array2::zeros((m, m));
    for (i, &(ki, ti)) in split.iter().enumerate() {
        for (j, &(kj, tj)) in split.iter().enumerate() {
            if ti == tj {
                out[[ki, kj]] += op.matrix[[i, j]];
            }
        }
    }
    Operator::new(kept_space, out)
}

/// Reduced density matrix on the factors listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    Ok(DensityMatrix::assume_valid(partial_trace_operator(&rho.0, keep)?))
}

/// A state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    space: HilbertSpace,
    amplitudes: Array1<C64>,
}

impl Ket {
    pub fn new(space: HilbertSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return invalid(format!(
                "{} amplitudes do not fit space {space}",
                amplitudes.len()
            ));
        }
        Ok(Self { space, amplitudes })
    }

    /// Product basis state with one label per factor.
    pub fn basis(space: &HilbertSpace, labels: &[usize]) -> Result<Self> {
        let idx = space.flat_index(labels)?;
        let mut amps = Array1::zeros(space.total_dim());
        amps[idx] = ONE;
        Ok(Self { space: space.clone(), amplitudes: amps })
    }

    /// Fock state `|n⟩` on levels `0..=cutoff`.
    pub fn fock(cutoff: usize, n: usize) -> Result<Self> {
        Self::basis(&HilbertSpace::single(cutoff + 1), &[n])
    }

    pub fn up() -> Self {
        Self::basis(&HilbertSpace::single(2), &[0]).expect("valid")
    }

    pub fn down() -> Self {
        Self::basis(&HilbertSpace::single(2), &[1]).expect("valid")
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm_sqr(&self.amplitudes).sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numeric(format!("cannot normalise a ket of norm {n}")));
        }
        Ok(Self { space: self.space.clone(), amplitudes: &self.amplitudes / c(n, 0.0) })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.space != other.space {
            return invalid("inner product of kets on different spaces");
        }
        Ok(linalg::inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut amps = Array1::zeros(self.dim() * other.dim());
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                amps[i * other.dim() + j] = a * b;
            }
        }
        Ket { space: self.space.tensor(&other.space), amplitudes: amps }
    }

    pub fn add_scaled(&self, factor: C64, other: &Ket) -> Result<Ket> {
        if self.space != other.space {
            return invalid("sum of kets on different spaces");
        }
        Ok(Ket {
            space: self.space.clone(),
            amplitudes: &self.amplitudes + &(&other.amplitudes * factor),
        })
    }

    pub fn expect(&self, op: &Operator) -> Result<C64> {
        expectation(op, self)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::assume_valid(Operator::projector(self))
    }
}

/// Tolerances used when accepting an operator as a physical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTolerance {
    pub trace: f64,
    pub hermiticity: f64,
    /// Smallest admissible eigenvalue (a small negative number).
    pub eigenvalue_floor: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self { trace: 1e-10, hermiticity: 1e-10, eigenvalue_floor: -1e-8 }
    }
}

/// How far an operator is from being a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDefects {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDefects {
    pub fn of(op: &Operator) -> Result<Self> {
        let herm = op.hermitian_part();
        Ok(Self {
            trace_error: (op.trace() - ONE).norm(),
            hermiticity_error: linalg::hermiticity_defect(op.matrix()),
            min_eigenvalue: linalg::eigvalsh(herm.matrix())?[0],
        })
    }

    pub fn within(&self, tol: &StateTolerance) -> bool {
        self.trace_error <= tol.trace
            && self.hermiticity_error <= tol.hermiticity
            && self.min_eigenvalue >= tol.eigenvalue_floor
    }
}

/// A unit-trace, Hermitian, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Validates with the default tolerances.
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerance(op, &StateTolerance::default())
    }

    pub fn with_tolerance(op: Operator, tol: &StateTolerance) -> Result<Self> {
        let defects = StateDefects::of(&op)?;
        if !defects.within(tol) {
            return Err(Error::InvalidArgument(format!(
                "not a density matrix: |Tr−1| = {:.3e}, hermiticity defect {:.3e}, min eigenvalue {:.3e}",
                defects.trace_error, defects.hermiticity_error, defects.min_eigenvalue
            )));
        }
        Ok(Self(op))
    }

    /// Skips validation; for states produced by maps known to be physical.
    pub fn assume_valid(op: Operator) -> Self {
        Self(op)
    }

    pub fn from_ket(psi: &Ket) -> Self {
        psi.to_density()
    }

    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self(Operator::identity(space).scale(c(1.0 / n as f64, 0.0)))
    }

    pub fn space(&self) -> &HilbertSpace {
        self.0.space()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        self.0.matrix()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn defects(&self) -> Result<StateDefects> {
        StateDefects::of(&self.0)
    }

    pub fn expect(&self, op: &Operator) -> Result<C64> {
        expectation(op, self)
    }

    pub fn purity(&self) -> f64 {
        self.0.hs_inner(&self.0).re
    }

    /// `|⟨ψ|ρ|ψ⟩|` for a normalised ket.
    pub fn fidelity_with(&self, psi: &Ket) -> Result<f64> {
        Ok(expectation(&self.0, psi)?.re)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(tensor(&[self.0.clone(), other.0.clone()]).expect("two factors"))
    }
}

/// Borrowed state for [`expectation`].
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Ket(&'a Ket),
    Density(&'a DensityMatrix),
}

impl<'a> From<&'a Ket> for StateRef<'a> {
    fn from(k: &'a Ket) -> Self {
        StateRef::Ket(k)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(r: &'a DensityMatrix) -> Self {
        StateRef::Density(r)
    }
}

/// `⟨ψ|O|ψ⟩` for kets and `Tr[Oρ]` for density matrices.
pub fn expectation<'a>(op: &Operator, state: impl Into<StateRef<'a>>) -> Result<C64> {
    match state.into() {
        StateRef::Ket(psi) => {
            if psi.space() != op.space() {
                return invalid(format!(
                    "observable on {} and ket on {}",
                    op.space(),
                    psi.space()
                ));
            }
            Ok(linalg::inner(psi.amplitudes(), &op.matrix().dot(psi.amplitudes())))
        }
        StateRef::Density(rho) => {
            if rho.space() != op.space() {
                return invalid(format!(
                    "observable on {} and state on {}",
                    op.space(),
                    rho.space()
                ));
            }
            // Tr[Oρ] = Σ_ij O_ij ρ_ji
            let o = op.matrix();
            let r = rho.matrix();
            Ok(o.indexed_iter().map(|((i, j), &x)| x * r[[j, i]]).sum())
        }
    }
}
