//! Superoperators on row-major vectorised operators.
//!
//! An operator `X` with entries `X[i][j]` is stacked as `vec(X)[i·d + j]`, so
//! `[[a, b], [c, d]] → (a, b, c, d)`. With this convention
//! `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.

use ndarray::{Array1, Array2};

use crate::algebra::{DensityMatrix, HilbertSpace, Operator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, ONE, ZERO};
use crate::C64;

mod spectrum;
mod symmetry;

pub use spectrum::{
    decompose, liouvillian_gap, spectral_evolve, spectrum, spectrum_with_limit, steady_states,
    DecompositionCoefficients, GapReport, Spectrum, SteadyStates, DEFAULT_MAX_DIM,
};
pub use symmetry::{check_strong_symmetry, weak_symmetry_blocks, StrongSymmetryReport, WeakSymmetryBlocks};

/// Dense matrix of side `d²` acting on vectorised operators of side `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl SuperOp {
    pub fn new(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let n = space.total_dim().pow(2);
        if matrix.dim() != (n, n) {
            return invalid(format!(
                "superoperator matrix of shape {:?} does not fit space {space} (side {n})",
                matrix.dim()
            ));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        Self { space: space.clone(), matrix: linalg::eye(space.total_dim().pow(2)) }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.total_dim().pow(2);
        Self { space: space.clone(), matrix: Array2::zeros((n, n)) }
    }

    /// Tabulates a linear map by its action on the matrix units `|i⟩⟨j|`.
    pub fn from_linear_map<F>(space: &HilbertSpace, mut map: F) -> Result<Self>
    where
        F: FnMut(&Operator) -> Result<Operator>,
    {
        let d = space.total_dim();
        let mut m = Array2::zeros((d * d, d * d));
        for i in 0..d {
            for j in 0..d {
                let mut unit = Array2::zeros((d, d));
                unit[[i, j]] = ONE;
                let image = map(&Operator::new(space.clone(), unit)?)?;
                if image.space() != space {
                    return invalid("linear map changed the Hilbert space");
                }
                m.column_mut(i * d + j).assign(&vectorize(&image));
            }
        }
        Ok(Self { space: space.clone(), matrix: m })
    }

    /// The Kraus map `ρ ↦ Σ K ρ K†`.
    pub fn from_kraus(ops: &[Operator]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("Kraus map with no operators".into()))?;
        let mut out = SuperOp::zeros(first.space());
        for k in ops {
            if k.space() != first.space() {
                return invalid("Kraus operators live on different spaces");
            }
            out.matrix += &linalg::kron(k.matrix(), &k.matrix().mapv(|z| z.conj()));
        }
        Ok(out)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    /// Side `d` of the underlying operators.
    pub fn op_dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn apply(&self, op: &Operator) -> Result<Operator> {
        if op.space() != &self.space {
            return invalid(format!(
                "superoperator on {} applied to operator on {}",
                self.space,
                op.space()
            ));
        }
        devectorize(&self.matrix.dot(&vectorize(op)), &self.space)
    }

    /// Composition: `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.space != other.space {
            return invalid("composition of superoperators on different spaces");
        }
        Ok(SuperOp { space: self.space.clone(), matrix: self.matrix.dot(&other.matrix) })
    }

    pub fn scale(&self, factor: f64) -> SuperOp {
        SuperOp { space: self.space.clone(), matrix: &self.matrix * c(factor, 0.0) }
    }

    pub fn add(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.space != other.space {
            return invalid("sum of superoperators on different spaces");
        }
        Ok(SuperOp { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    /// `exp(t·self)`: spectral when the eigenvector basis is well conditioned,
    /// scaling-and-squaring otherwise.
    pub fn exp(&self, t: f64) -> Result<SuperOp> {
        let (vals, vecs) = linalg::eig(&self.matrix)?;
        let cond = linalg::condition_number(vecs.view())?;
        let matrix = if cond <= spectrum::CONDITION_LIMIT {
            let inv = linalg::inverse(&vecs)?;
            let scaled = &vecs * &vals.mapv(|l| (l * t).exp());
            scaled.dot(&inv)
        } else {
            linalg::expm(&(&self.matrix * c(t, 0.0)), 1e-12)?
        };
        Ok(SuperOp { space: self.space.clone(), matrix })
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`.
    pub fn choi(&self) -> Array2<C64> {
        let d = self.op_dim();
        let mut out = Array2::zeros((d * d, d * d));
        for i in 0..d {
            for j in 0..d {
                let col = self.matrix.column(i * d + j);
                for a in 0..d {
                    for b in 0..d {
                        out[[i * d + a, j * d + b]] = col[a * d + b];
                    }
                }
            }
        }
        out
    }

    /// Trace-preservation and complete-positivity diagnostics.
    pub fn map_validity(&self) -> Result<MapValidity> {
        let d = self.op_dim();
        // Tr[E(X)] = vec(𝟙)ᵀ E vec(X) must equal vec(𝟙)ᵀ vec(X).
        let mut trace_defect: f64 = 0.0;
        for col in 0..d * d {
            let mut t = ZERO;
            for a in 0..d {
                t += self.matrix[[a * d + a, col]];
            }
            let expected = if col / d == col % d { ONE } else { ZERO };
            trace_defect = trace_defect.max((t - expected).norm());
        }
        let choi = self.choi();
        let hermiticity_defect = linalg::hermiticity_defect(&choi);
        let min_choi_eigenvalue = linalg::eigvalsh(&linalg::hermitian_part(&choi))?[0];
        Ok(MapValidity { trace_defect, hermiticity_defect, min_choi_eigenvalue })
    }

    /// Vectorised identity is a left null vector: `vec(𝟙)† L = 0`.
    pub fn trace_annihilation_defect(&self) -> f64 {
        let d = self.op_dim();
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let mut t = ZERO;
            for a in 0..d {
                t += self.matrix[[a * d + a, col]];
            }
            worst = worst.max(t.norm());
        }
        worst
    }
}

/// Outcome of [`SuperOp::map_validity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapValidity {
    /// Largest deviation of `Tr[E(|i⟩⟨j|)]` from `δ_ij`.
    pub trace_defect: f64,
    /// Non-Hermiticity of the Choi matrix (zero for Hermiticity-preserving maps).
    pub hermiticity_defect: f64,
    pub min_choi_eigenvalue: f64,
}

impl MapValidity {
    pub fn is_quantum_map(&self, trace_tol: f64, psd_floor: f64) -> bool {
        self.trace_defect <= trace_tol
            && self.hermiticity_defect <= trace_tol
            && self.min_choi_eigenvalue >= psd_floor
    }
}

/// Row-major stacking.
pub fn vectorize(op: &Operator) -> Array1<C64> {
    op.matrix().iter().cloned().collect()
}

pub fn devectorize(v: &Array1<C64>, space: &HilbertSpace) -> Result<Operator> {
    let d = space.total_dim();
    if v.len() != d * d {
        return invalid(format!("vector of length {} is not vec of a {d}x{d} matrix", v.len()));
    }
    let m = Array2::from_shape_vec((d, d), v.to_vec()).expect("length checked");
    Operator::new(space.clone(), m)
}

/// Inverse of [`vectorize`] for a square-length vector on a single-factor space.
pub fn devectorize_square(v: &Array1<C64>) -> Result<Operator> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d == 0 || d * d != v.len() {
        return invalid(format!("vector length {} is not a perfect square", v.len()));
    }
    devectorize(v, &HilbertSpace::single(d))
}

/// `X ↦ O X`, i.e. `O ⊗ 𝟙`.
pub fn left_action(op: &Operator) -> SuperOp {
    let d = op.dim();
    SuperOp { space: op.space().clone(), matrix: linalg::kron(op.matrix(), &linalg::eye(d)) }
}

/// `X ↦ X O`, i.e. `𝟙 ⊗ Oᵀ`.
pub fn right_action(op: &Operator) -> SuperOp {
    let d = op.dim();
    SuperOp {
        space: op.space().clone(),
        matrix: linalg::kron(&linalg::eye(d), &op.matrix().t().to_owned()),
    }
}

/// `γ (Γ ⊗ Γ* − ½ Γ†Γ ⊗ 𝟙 − ½ 𝟙 ⊗ (Γ†Γ)ᵀ)`.
pub fn dissipator(gamma: f64, op: &Operator) -> Result<SuperOp> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return invalid(format!("dissipation rate must be finite and non-negative, got {gamma}"));
    }
    let d = op.dim();
    let m = op.matrix();
    let gg = linalg::dagger(m).dot(m);
    let jump = linalg::kron(m, &m.mapv(|z| z.conj()));
    let left = linalg::kron(&gg, &linalg::eye(d));
    let right = linalg::kron(&linalg::eye(d), &gg.t().to_owned());
    let matrix = (jump - (left + right) * c(0.5, 0.0)) * c(gamma, 0.0);
    Ok(SuperOp { space: op.space().clone(), matrix })
}

/// One dissipative channel: rate times `D[op]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub rate: f64,
    pub op: Operator,
}

impl Jump {
    pub fn new(rate: f64, op: Operator) -> Self {
        Self { rate, op }
    }

    /// `√γ·Γ`, the operator with the rate folded in.
    pub fn scaled_operator(&self) -> Operator {
        self.op.scale(c(self.rate.sqrt(), 0.0))
    }
}

/// Hamiltonian plus `(rate, jump operator)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: Operator,
    jumps: Vec<Jump>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Operator, jumps: Vec<Jump>) -> Result<Self> {
        let defect = linalg::hermiticity_defect(hamiltonian.matrix());
        if defect > 1e-10 {
            return invalid(format!("Hamiltonian is not Hermitian (defect {defect:.3e})"));
        }
        for (k, j) in jumps.iter().enumerate() {
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return invalid(format!("jump {k} has invalid rate {}", j.rate));
            }
            if j.op.space() != hamiltonian.space() {
                return invalid(format!(
                    "jump {k} lives on {} but the Hamiltonian on {}",
                    j.op.space(),
                    hamiltonian.space()
                ));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    /// Closed system.
    pub fn hamiltonian_only(hamiltonian: Operator) -> Result<Self> {
        Self::new(hamiltonian, Vec::new())
    }

    pub fn with_jump(mut self, rate: f64, op: Operator) -> Result<Self> {
        self.jumps.push(Jump::new(rate, op));
        Self::new(self.hamiltonian, self.jumps)
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn space(&self) -> &HilbertSpace {
        self.hamiltonian.space()
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Multiplies every rate by `factor`.
    pub fn scale_rates(&self, factor: f64) -> Result<Self> {
        let jumps = self.jumps.iter().map(|j| Jump::new(j.rate * factor, j.op.clone())).collect();
        Self::new(self.hamiltonian.clone(), jumps)
    }

    /// `H − (i/2) Σ γ Γ†Γ` as a raw matrix.
    pub(crate) fn effective_hamiltonian_matrix(&self) -> Array2<C64> {
        let mut h = self.hamiltonian.matrix().clone();
        for j in &self.jumps {
            let m = j.op.matrix();
            h = h - linalg::dagger(m).dot(m) * c(0.0, 0.5 * j.rate);
        }
        h
    }

    /// Lindblad right-hand side evaluated directly on a matrix:
    /// `−i[H, ρ] + Σ γ (ΓρΓ† − ½{Γ†Γ, ρ})`.
    pub fn rhs_matrix(&self, rho: &Array2<C64>) -> Array2<C64> {
        let h = self.hamiltonian.matrix();
        let mut out = (h.dot(rho) - rho.dot(h)) * c(0.0, -1.0);
        for j in &self.jumps {
            if j.rate == 0.0 {
                continue;
            }
            let g = j.op.matrix();
            let gd = linalg::dagger(g);
            let gg = gd.dot(g);
            let term = g.dot(rho).dot(&gd) - (gg.dot(rho) + rho.dot(&gg)) * c(0.5, 0.0);
            out = out + term * c(j.rate, 0.0);
        }
        out
    }

    pub fn rhs(&self, rho: &Operator) -> Result<Operator> {
        if rho.space() != self.space() {
            return invalid("state and model live on different spaces");
        }
        Operator::new(self.space().clone(), self.rhs_matrix(rho.matrix()))
    }

    /// Largest rate plus the spectral norm of `H`; sets the stiff time scale.
    pub fn frequency_scale(&self) -> Result<f64> {
        let max_rate = self
            .jumps
            .iter()
            .map(|j| j.rate * linalg::spectral_norm(j.op.matrix()).unwrap_or(0.0).powi(2))
            .fold(0.0, f64::max);
        Ok(max_rate + linalg::spectral_norm(self.hamiltonian.matrix())?)
    }
}

/// `−i(H ⊗ 𝟙 − 𝟙 ⊗ Hᵀ) + Σ γ D[Γ]`.
pub fn build_liouvillian(model: &LindbladModel) -> Result<SuperOp> {
    let h = model.hamiltonian();
    let mut matrix =
        (left_action(h).matrix - right_action(h).matrix) * c(0.0, -1.0);
    for j in model.jumps() {
        matrix += &dissipator(j.rate, &j.op)?.matrix;
    }
    SuperOp::new(model.space().clone(), matrix)
}

/// Applies a superoperator to a density matrix, Hermitizing the result.
pub fn apply_to_state(map: &SuperOp, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::assume_valid(map.apply(rho.as_operator())?.hermitian_part()))
}
