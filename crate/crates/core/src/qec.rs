//! Error correction seen through Liouvillian spectra: single-qubit coherence
//! times, a logical qubit hidden in a two-qubit register, and the three-qubit
//! bit-flip repetition code.

use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{embed, partial_trace, pauli, DensityMatrix, HilbertSpace, Ket, Operator, Pauli};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::random;
use crate::superop::{build_liouvillian, spectral_evolve, spectrum, Jump, LindbladModel, Spectrum, SuperOp};
use crate::C64;

#[derive(Debug, Clone)]
pub struct CoherenceReport {
    /// Population relaxation rate; `T1 = 1/rate`.
    pub population_rate: f64,
    /// Coherence decay rate; `T2 = 1/rate`.
    pub coherence_rate: f64,
    pub t1: f64,
    pub t2: f64,
    pub spectrum: Spectrum,
}

/// Coherence times of a qubit under `γ1 D[σ−] + γφ D[σz]`.
///
/// The generator does not mix populations with coherences, so the two rates
/// are read off the respective blocks. Zero rates give infinite times.
pub fn single_qubit_coherence(gamma1: f64, gamma_phi: f64) -> Result<CoherenceReport> {
    if !(gamma1 >= 0.0 && gamma_phi >= 0.0) || !gamma1.is_finite() || !gamma_phi.is_finite() {
        return invalid("rates must be finite and non-negative");
    }
    let space = HilbertSpace::single(2);
    let model = LindbladModel::new(
        Operator::zeros(&space),
        vec![Jump::new(gamma1, pauli(Pauli::Minus)), Jump::new(gamma_phi, pauli(Pauli::Z))],
    )?;
    let l = build_liouvillian(&model)?;
    let block = |idx: [usize; 2]| -> Result<Vec<f64>> {
        let m = Array2::from_shape_fn((2, 2), |(a, b)| l.matrix()[[idx[a], idx[b]]]);
        Ok(linalg::eig(&m)?.0.iter().map(|z| z.re.abs()).collect())
    };
    // Flat indices 0 and 3 are populations, 1 and 2 coherences.
    let population_rate = block([0, 3])?.into_iter().fold(0.0, f64::max);
    let coherence_rate = block([1, 2])?.into_iter().fold(f64::INFINITY, f64::min);
    let time = |rate: f64| if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
    Ok(CoherenceReport {
        population_rate,
        coherence_rate,
        t1: time(population_rate),
        t2: time(coherence_rate),
        spectrum: spectrum(&l)?,
    })
}

fn qubit_decay(gamma: f64) -> Result<LindbladModel> {
    LindbladModel::new(Operator::zeros(&HilbertSpace::single(2)), vec![Jump::new(gamma, pauli(Pauli::Minus))])
}

/// Closed form for a decaying qubit: `ρ_↑↑ e^{−γt}`, coherences `e^{−γt/2}`.
pub fn decayed_qubit(rho0: &DensityMatrix, gamma: f64, t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != 2 {
        return invalid("expected a single qubit");
    }
    let m = rho0.matrix();
    let p = (-gamma * t).exp();
    let q = (-gamma * t / 2.0).exp();
    let up = m[[0, 0]] * p;
    let out = ndarray::array![[up, m[[0, 1]] * q], [m[[1, 0]] * q, m[[1, 1]] + m[[0, 0]] - up]];
    DensityMatrix::new(Operator::new(rho0.space().clone(), out)?)
}

#[derive(Debug, Clone)]
pub struct TwoQubitReport {
    pub joint: Spectrum,
    pub qubit1: Spectrum,
    pub qubit2: Spectrum,
    /// Largest distance in the best matching of joint eigenvalues with the
    /// sums `λ_j⁽¹⁾ + λ_k⁽²⁾`.
    pub spectrum_mismatch: f64,
    /// Largest entrywise deviation of `Tr₂ ρ(t)` from the single-qubit result.
    pub reduced_deviation: f64,
}

impl TwoQubitReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.spectrum_mismatch <= tol && self.reduced_deviation <= tol
    }
}

/// Two uncoupled decaying qubits, `γ1 D[σ−⁽¹⁾] + γ2 D[σ−⁽²⁾]`.
pub fn two_qubit_model(gamma1: f64, gamma2: f64) -> Result<LindbladModel> {
    let space = HilbertSpace::qubits(2);
    LindbladModel::new(
        Operator::zeros(&space),
        vec![
            Jump::new(gamma1, embed(&pauli(Pauli::Minus), 0, &space)?),
            Jump::new(gamma2, embed(&pauli(Pauli::Minus), 1, &space)?),
        ],
    )
}

/// Checks that qubit 1 of the two-qubit register behaves exactly as a lone
/// decaying qubit: the joint spectrum is the set of pairwise sums, and the
/// reduced state of `n_states` random product initial states, evolved with
/// the joint generator, follows the single-qubit closed form at `times`.
pub fn two_qubit_logical_demo(
    gamma1: f64,
    gamma2: f64,
    n_states: usize,
    times: &[f64],
    seed: u64,
) -> Result<TwoQubitReport> {
    if !(gamma1 >= 0.0 && gamma2 >= 0.0) {
        return invalid("rates must be non-negative");
    }
    let joint = spectrum(&build_liouvillian(&two_qubit_model(gamma1, gamma2)?)?)?;
    let qubit1 = spectrum(&build_liouvillian(&qubit_decay(gamma1)?)?)?;
    let qubit2 = spectrum(&build_liouvillian(&qubit_decay(gamma2)?)?)?;

    let mut sums: Vec<C64> = Vec::new();
    for a in qubit1.eigenvalues() {
        for b in qubit2.eigenvalues() {
            sums.push(a + b);
        }
    }
    let spectrum_mismatch = multiset_distance(joint.eigenvalues(), &sums);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = HilbertSpace::single(2);
    let mut reduced_deviation: f64 = 0.0;
    for _ in 0..n_states {
        let r1 = random::density_matrix(&q, &mut rng);
        let r2 = random::density_matrix(&q, &mut rng);
        let rho0 = DensityMatrix::assume_valid(
            Operator::new(HilbertSpace::qubits(2), r1.tensor(&r2).into_operator().into_matrix())?,
        );
        for &t in times {
            let reduced = partial_trace(&spectral_evolve(&rho0, &joint, t)?, &[0])?;
            let expected = decayed_qubit(&r1, gamma1, t)?;
            reduced_deviation = reduced_deviation.max(linalg::max_abs(&(reduced.matrix() - expected.matrix())));
        }
    }
    Ok(TwoQubitReport { joint, qubit1, qubit2, spectrum_mismatch, reduced_deviation })
}

/// Greedy nearest-neighbour matching; exact for well-separated clusters.
fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// One syndrome outcome `(m1, m2)` with its projector and recovery gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Syndrome {
    pub m1: i8,
    pub m2: i8,
    pub projector: Operator,
    pub recovery: Operator,
}

/// Three-qubit bit-flip code with `|0_L⟩ = |000⟩`, `|1_L⟩ = |111⟩`.
///
/// Bit labels follow the logical convention `|1⟩ = |↑⟩`, so `|111⟩` is the
/// first computational basis vector and `|000⟩` the last.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionCode {
    pub space: HilbertSpace,
    pub syndromes: Vec<Syndrome>,
    pub zero: Ket,
    pub one: Ket,
}

/// `|b1 b2 b3⟩` in logical bit labels.
pub fn bits(b: [u8; 3]) -> Ket {
    let labels: Vec<usize> = b.iter().map(|&x| 1 - x as usize).collect();
    Ket::basis(&HilbertSpace::qubits(3), &labels).expect("valid labels")
}

fn pair_projector(a: [u8; 3]) -> Operator {
    let b = a.map(|x| 1 - x);
    &Operator::projector(&bits(a)) + &Operator::projector(&bits(b))
}

pub fn build_repetition_code() -> RepetitionCode {
    let space = HilbertSpace::qubits(3);
    let flip = |j: usize| embed(&pauli(Pauli::X), j, &space).expect("site in range");
    let syndromes = vec![
        Syndrome { m1: 1, m2: 1, projector: pair_projector([1, 1, 1]), recovery: Operator::identity(&space) },
        Syndrome { m1: -1, m2: 1, projector: pair_projector([0, 1, 1]), recovery: flip(0) },
        Syndrome { m1: -1, m2: -1, projector: pair_projector([1, 0, 1]), recovery: flip(1) },
        Syndrome { m1: 1, m2: -1, projector: pair_projector([1, 1, 0]), recovery: flip(2) },
    ];
    RepetitionCode { space, syndromes, zero: bits([0, 0, 0]), one: bits([1, 1, 1]) }
}

impl RepetitionCode {
    /// `α|0_L⟩ + β|1_L⟩`, normalised.
    pub fn encode(&self, alpha: C64, beta: C64) -> Result<Ket> {
        let amps = self.zero.amplitudes() * alpha + self.one.amplitudes() * beta;
        Ket::new(self.space.clone(), amps)?.normalized()
    }

    /// Syndrome measured with certainty on `psi`, if any.
    pub fn syndrome_of(&self, psi: &Ket) -> Result<Option<(i8, i8)>> {
        for s in &self.syndromes {
            let p = psi.expect(&s.projector)?.re / psi.norm().powi(2);
            if (p - 1.0).abs() < 1e-12 {
                return Ok(Some((s.m1, s.m2)));
            }
        }
        Ok(None)
    }

    /// `ℛ = Σ O P · P† O†`: unread syndrome measurement and conditioned recovery.
    pub fn recovery_superop(&self) -> Result<SuperOp> {
        let kraus: Vec<Operator> = self.syndromes.iter().map(|s| &s.recovery * &s.projector).collect();
        SuperOp::from_kraus(&kraus)
    }

    /// `|0_L⟩⟨0_L|, |0_L⟩⟨1_L|, |1_L⟩⟨0_L|, |1_L⟩⟨1_L|`.
    pub fn logical_basis(&self) -> [Operator; 4] {
        let o = |a: &Ket, b: &Ket| Operator::outer(a, b).expect("same space");
        [o(&self.zero, &self.zero), o(&self.zero, &self.one), o(&self.one, &self.zero), o(&self.one, &self.one)]
    }
}

/// `γ (D[σx⁽¹⁾] + D[σx⁽²⁾] + D[σx⁽³⁾])`.
pub fn bit_flip_model(gamma: f64) -> Result<LindbladModel> {
    let space = HilbertSpace::qubits(3);
    let jumps = (0..3)
        .map(|j| Ok(Jump::new(gamma, embed(&pauli(Pauli::X), j, &space)?)))
        .collect::<Result<Vec<_>>>()?;
    LindbladModel::new(Operator::zeros(&space), jumps)
}

#[derive(Debug, Clone)]
pub struct CycleMap {
    pub tau: f64,
    pub map: SuperOp,
    pub eigenvalues: Vec<C64>,
    /// `ln|ε_j| / τ`; `−∞` for vanishing eigenvalues.
    pub lambda_eff: Vec<f64>,
    /// `arg ε_j / τ`.
    pub phase_rate: Vec<f64>,
    /// Indices of the four eigenvalues whose eigenmatrices overlap most with
    /// the logical operator basis, ordered by decreasing `|ε|`.
    pub logical: Vec<usize>,
    /// Fraction of each selected eigenmatrix inside the logical span.
    pub logical_overlap: Vec<f64>,
}

impl CycleMap {
    pub fn logical_lambdas(&self) -> Vec<f64> {
        self.logical.iter().map(|&k| self.lambda_eff[k]).collect()
    }

    /// Fastest logical decay, `max |λ_eff|` over the logical eigenvalues.
    pub fn logical_rate(&self) -> f64 {
        self.logical_lambdas().iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}

/// `ℰ = ℛ e^{Lτ}` for independent bit flips at rate `γ` on every qubit.
pub fn cycle_map(gamma: f64, tau: f64) -> Result<CycleMap> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return invalid("bit-flip rate must be finite and non-negative");
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return invalid("correction period must be positive");
    }
    let code = build_repetition_code();
    let free = build_liouvillian(&bit_flip_model(gamma)?)?.exp(tau)?;
    let map = code.recovery_superop()?.compose(&free)?;
    let (vals, vecs) = linalg::eig(map.matrix())?;
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("cycle map has non-finite eigenvalues".into()));
    }
    let eigenvalues: Vec<C64> = vals.to_vec();
    let lambda_eff = eigenvalues
        .iter()
        .map(|z| if z.norm() > 0.0 { z.norm().ln() / tau } else { f64::NEG_INFINITY })
        .collect();
    let phase_rate = eigenvalues.iter().map(|z| z.arg() / tau).collect();

    let basis: Vec<ndarray::Array1<C64>> =
        code.logical_basis().iter().map(|b| b.matrix().iter().copied().collect()).collect();
    let overlaps: Vec<f64> = (0..vals.len())
        .map(|k| {
            let v = vecs.slice(s![.., k]).to_owned();
            let n = linalg::norm_sqr(&v);
            basis.iter().map(|b| linalg::inner(b, &v).norm_sqr()).sum::<f64>() / n
        })
        .collect();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| overlaps[b].total_cmp(&overlaps[a]).then(a.cmp(&b)));
    let mut logical: Vec<usize> = order[..4].to_vec();
    logical.sort_by(|&a, &b| eigenvalues[b].norm().total_cmp(&eigenvalues[a].norm()).then(a.cmp(&b)));
    let logical_overlap = logical.iter().map(|&k| overlaps[k]).collect();
    Ok(CycleMap { tau, map, eigenvalues, lambda_eff, phase_rate, logical, logical_overlap })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QecRow {
    pub tau: f64,
    pub lambda_logical: f64,
    /// Unencoded coherence decay rate under `γ D[σx]`, `2γ`.
    pub bare_rate: f64,
    /// `None` when the bare rate vanishes.
    pub ratio: Option<f64>,
}

/// Logical error rate against the unencoded rate for each period.
pub fn logical_error_ratio(gamma: f64, taus: &[f64]) -> Result<Vec<QecRow>> {
    taus.par_iter()
        .map(|&tau| {
            let lambda_logical = cycle_map(gamma, tau)?.logical_rate();
            let bare_rate = 2.0 * gamma;
            let ratio = (bare_rate > 0.0).then(|| lambda_logical / bare_rate);
            Ok(QecRow { tau, lambda_logical, bare_rate, ratio })
        })
        .collect()
}
