//! Strong and weak symmetries of Lindblad generators.

use ndarray::Array2;

use super::{LindbladModel, SuperOp};
use crate::algebra::Operator;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c};
use crate::C64;

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StrongSymmetryReport {
    pub holds: bool,
    /// `‖[H, V]‖` in the Hilbert–Schmidt norm.
    pub hamiltonian_commutator: f64,
    /// `‖[Γ_μ, V]‖` per jump operator.
    pub jump_commutators: Vec<f64>,
}

/// `V` commutes with the Hamiltonian and with every jump operator.
pub fn check_strong_symmetry(model: &LindbladModel, v: &Operator) -> Result<StrongSymmetryReport> {
    if v.space() != model.space() {
        return invalid("symmetry operator and model live on different spaces");
    }
    if !v.is_unitary(UNITARY_TOL) {
        return invalid("symmetry operator is not unitary");
    }
    let hamiltonian_commutator = model.hamiltonian().commutator(v).hs_norm();
    let jump_commutators: Vec<f64> = model.jumps().iter().map(|j| j.op.commutator(v).hs_norm()).collect();
    let holds = hamiltonian_commutator < 1e-10 && jump_commutators.iter().all(|&n| n < 1e-10);
    Ok(StrongSymmetryReport { holds, hamiltonian_commutator, jump_commutators })
}

/// Sector decomposition of a superoperator under `Ū = V ⊗ V*`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSymmetryBlocks {
    /// Sector index of each vectorised basis element `|i⟩⟨j|`, taken in the
    /// eigenbasis of `V` (the computational basis when `V` is diagonal).
    pub labels: Vec<usize>,
    /// Eigenphase of `Ū` for each sector, in `(−π, π]`.
    pub phases: Vec<f64>,
    /// Sector sizes, largest first.
    pub block_sizes: Vec<usize>,
    /// Largest matrix element of the generator between different sectors.
    pub max_cross_element: f64,
    pub verified: bool,
}

pub fn weak_symmetry_blocks(l: &SuperOp, v: &Operator) -> Result<WeakSymmetryBlocks> {
    if v.space() != l.space() {
        return invalid("symmetry operator and superoperator live on different spaces");
    }
    if !v.is_unitary(UNITARY_TOL) {
        return invalid("symmetry operator is not unitary");
    }
    let vm = v.matrix();
    let u = linalg::kron(vm, &vm.mapv(|z| z.conj()));
    let defect = linalg::max_abs(&(l.matrix().dot(&u) - u.dot(l.matrix())));
    if defect > 1e-8 {
        return Err(Error::NotASymmetry(format!(
            "superoperator does not commute with V ⊗ V* (defect {defect:.3e})"
        )));
    }

    let d = v.dim();
    let off_diagonal = vm.indexed_iter().filter(|((i, j), _)| i != j).map(|(_, z)| z.norm()).fold(0.0, f64::max);
    let (eigs, lbar) = if off_diagonal <= 1e-14 {
        (vm.diag().to_vec(), l.matrix().clone())
    } else {
        let q = eigenbasis_of_unitary(vm)?;
        let eigs = (0..d)
            .map(|k| {
                let col = q.column(k).to_owned();
                linalg::inner(&col, &vm.dot(&col))
            })
            .collect();
        let p = linalg::kron(&q, &q.mapv(|z| z.conj()));
        (eigs, linalg::dagger(&p).dot(l.matrix()).dot(&p))
    };

    let mut phases: Vec<f64> = Vec::new();
    let mut sector_of_phase: Vec<C64> = Vec::new();
    let mut labels = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let z = eigs[i] * eigs[j].conj();
            let z = z / z.norm();
            let label = match sector_of_phase.iter().position(|w| (w - z).norm() <= 1e-8) {
                Some(k) => k,
                None => {
                    sector_of_phase.push(z);
                    phases.push(z.arg());
                    sector_of_phase.len() - 1
                }
            };
            labels.push(label);
        }
    }

    let mut max_cross_element: f64 = 0.0;
    for ((a, b), z) in lbar.indexed_iter() {
        if labels[a] != labels[b] {
            max_cross_element = max_cross_element.max(z.norm());
        }
    }
    let mut block_sizes = vec![0usize; phases.len()];
    for &k in &labels {
        block_sizes[k] += 1;
    }
    block_sizes.sort_unstable_by(|a, b| b.cmp(a));

    Ok(WeakSymmetryBlocks {
        labels,
        phases,
        block_sizes,
        max_cross_element,
        verified: max_cross_element <= 1e-10,
    })
}

/// Orthonormal eigenvectors of a unitary matrix as columns.
///
/// The Hermitian and anti-Hermitian parts of a normal matrix commute, so a
/// generic real combination of them shares its eigenvectors.
fn eigenbasis_of_unitary(v: &Array2<C64>) -> Result<Array2<C64>> {
    let vd = linalg::dagger(v);
    let re = (v + &vd) * c(0.5, 0.0);
    let im = (v - &vd) * c(0.0, -0.5);
    let mix = &re + &(im * c(std::f64::consts::FRAC_1_SQRT_2 * 0.913, 0.0));
    let (_, q) = linalg::eigh(&linalg::hermitian_part(&mix))?;
    Ok(q)
}
