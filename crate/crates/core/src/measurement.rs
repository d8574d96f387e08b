//! Projective and generalized measurements.

use rand::Rng;

use crate::algebra::{DensityMatrix, Operator};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::superop::SuperOp;

/// Completeness, Hermiticity and orthogonality tolerance.
pub const MEASUREMENT_TOL: f64 = 1e-10;
/// Outcomes below this probability cannot be conditioned on.
pub const MIN_PROBABILITY: f64 = 1e-14;

/// Labelled measurement operators `M_r` with `Σ M_r† M_r = 𝟙`.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmSet {
    outcomes: Vec<(String, Operator)>,
}

/// Report of [`validate_povm`]. Norms are largest absolute matrix entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmReport {
    /// `‖Σ M_r†M_r − 𝟙‖`.
    pub completeness: f64,
    /// `max_r ‖M_r − M_r†‖`.
    pub hermiticity: f64,
    /// `max_r ‖M_r² − M_r‖`.
    pub idempotence: f64,
    /// `max_{r≠s} ‖M_r M_s‖`.
    pub orthogonality: f64,
}

impl PovmReport {
    pub fn is_povm(&self) -> bool {
        self.completeness <= MEASUREMENT_TOL
    }

    pub fn is_projective(&self) -> bool {
        self.is_povm()
            && self.hermiticity <= MEASUREMENT_TOL
            && self.idempotence <= MEASUREMENT_TOL
            && self.orthogonality <= MEASUREMENT_TOL
    }
}

/// Checks a candidate measurement without rejecting it.
pub fn validate_povm(outcomes: &[(String, Operator)]) -> PovmReport {
    let Some((_, first)) = outcomes.first() else {
        return PovmReport {
            completeness: f64::INFINITY,
            hermiticity: 0.0,
            idempotence: 0.0,
            orthogonality: 0.0,
        };
    };
    let d = first.dim();
    let mut sum = ndarray::Array2::zeros((d, d));
    let mut hermiticity: f64 = 0.0;
    let mut idempotence: f64 = 0.0;
    let mut orthogonality: f64 = 0.0;
    for (r, (_, m)) in outcomes.iter().enumerate() {
        if m.space() != first.space() {
            return PovmReport {
                completeness: f64::INFINITY,
                hermiticity: f64::INFINITY,
                idempotence: f64::INFINITY,
                orthogonality: f64::INFINITY,
            };
        }
        let mm = m.matrix();
        sum += &linalg::dagger(mm).dot(mm);
        hermiticity = hermiticity.max(linalg::hermiticity_defect(mm));
        idempotence = idempotence.max(linalg::max_abs(&(mm.dot(mm) - mm)));
        for (_, other) in outcomes.iter().skip(r + 1) {
            orthogonality = orthogonality
                .max(linalg::max_abs(&mm.dot(other.matrix())))
                .max(linalg::max_abs(&other.matrix().dot(mm)));
        }
    }
    let completeness = linalg::max_abs(&(sum - linalg::eye(d)));
    PovmReport { completeness, hermiticity, idempotence, orthogonality }
}

impl PovmSet {
    pub fn new(outcomes: Vec<(String, Operator)>) -> Result<Self> {
        if outcomes.is_empty() {
            return invalid("a measurement needs at least one outcome");
        }
        for (k, (label, _)) in outcomes.iter().enumerate() {
            if outcomes[..k].iter().any(|(l, _)| l == label) {
                return invalid(format!("duplicate outcome label {label:?}"));
            }
        }
        let report = validate_povm(&outcomes);
        if !report.is_povm() {
            return invalid(format!(
                "measurement operators are not complete (‖Σ M†M − 𝟙‖ = {:.3e})",
                report.completeness
            ));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[(String, Operator)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn operator(&self, label: &str) -> Result<&Operator> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown outcome {label:?}")))
    }

    pub fn report(&self) -> PovmReport {
        validate_povm(&self.outcomes)
    }

    /// `Tr[M_r ρ M_r†]` per outcome, in order.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.check_space(rho)?;
        Ok(self.outcomes.iter().map(|(_, m)| probability(m, rho)).collect())
    }

    fn check_space(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.space() != self.outcomes[0].1.space() {
            return invalid("state and measurement live on different spaces");
        }
        Ok(())
    }

    /// `ρ ↦ Σ_r M_r ρ M_r†` as a superoperator.
    pub fn unread_superop(&self) -> Result<SuperOp> {
        let ops: Vec<Operator> = self.outcomes.iter().map(|(_, m)| m.clone()).collect();
        SuperOp::from_kraus(&ops)
    }
}

fn probability(m: &Operator, rho: &DensityMatrix) -> f64 {
    let mm = m.matrix();
    linalg::trace(&mm.dot(rho.matrix()).dot(&linalg::dagger(mm))).re
}

/// A [`PovmSet`] of orthogonal Hermitian projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveSet(PovmSet);

impl ProjectiveSet {
    pub fn new(outcomes: Vec<(String, Operator)>) -> Result<Self> {
        Self::try_from(PovmSet::new(outcomes)?)
    }

    /// Eigenprojectors of a Hermitian observable, grouping eigenvalues closer
    /// than `1e-10`. Labels are the eigenvalues printed with `{}`.
    pub fn from_observable(obs: &Operator) -> Result<Self> {
        if !obs.is_hermitian(MEASUREMENT_TOL) {
            return invalid("observable is not Hermitian");
        }
        let (vals, vecs) = linalg::eigh(obs.matrix())?;
        let d = obs.dim();
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (k, &v) in vals.iter().enumerate() {
            match groups.last_mut() {
                Some((v0, members)) if (v - *v0).abs() <= 1e-10 => members.push(k),
                _ => groups.push((v, vec![k])),
            }
        }
        let mut outcomes = Vec::new();
        for (v, members) in groups.into_iter().rev() {
            let mut p = ndarray::Array2::zeros((d, d));
            for k in members {
                let col = vecs.column(k).to_owned().insert_axis(ndarray::Axis(1));
                p += &col.dot(&linalg::dagger(&col));
            }
            outcomes.push((format!("{v}"), Operator::new(obs.space().clone(), p)?));
        }
        Self::new(outcomes)
    }

    pub fn as_povm(&self) -> &PovmSet {
        &self.0
    }
}

impl TryFrom<PovmSet> for ProjectiveSet {
    type Error = Error;

    fn try_from(set: PovmSet) -> Result<Self> {
        let r = set.report();
        if !r.is_projective() {
            return invalid(format!(
                "operators are not orthogonal projectors (hermiticity {:.3e}, idempotence {:.3e}, orthogonality {:.3e})",
                r.hermiticity, r.idempotence, r.orthogonality
            ));
        }
        Ok(Self(set))
    }
}

impl AsRef<PovmSet> for ProjectiveSet {
    fn as_ref(&self) -> &PovmSet {
        &self.0
    }
}

impl AsRef<PovmSet> for PovmSet {
    fn as_ref(&self) -> &PovmSet {
        self
    }
}

/// Conditions on outcome `label`: `(M_r ρ M_r† / p_r, p_r)`.
pub fn apply_read(rho: &DensityMatrix, set: &impl AsRef<PovmSet>, label: &str) -> Result<(DensityMatrix, f64)> {
    let set = set.as_ref();
    set.check_space(rho)?;
    let m = set.operator(label)?;
    let p = probability(m, rho);
    if !(p > MIN_PROBABILITY) {
        return Err(Error::ImpossibleOutcome { label: label.to_string(), probability: p });
    }
    let mm = m.matrix();
    let post = mm.dot(rho.matrix()).dot(&linalg::dagger(mm)) / crate::linalg::c(p, 0.0);
    let post = Operator::new(rho.space().clone(), linalg::hermitian_part(&post))?;
    Ok((DensityMatrix::assume_valid(post), p))
}

/// `Σ_r M_r ρ M_r†`.
pub fn apply_unread(rho: &DensityMatrix, set: &impl AsRef<PovmSet>) -> Result<DensityMatrix> {
    let set = set.as_ref();
    set.check_space(rho)?;
    let d = rho.dim();
    let mut out = ndarray::Array2::zeros((d, d));
    for (_, m) in &set.outcomes {
        let mm = m.matrix();
        out += &mm.dot(rho.matrix()).dot(&linalg::dagger(mm));
    }
    Ok(DensityMatrix::assume_valid(Operator::new(rho.space().clone(), linalg::hermitian_part(&out))?))
}

/// Draws an outcome label with the Born-rule probabilities.
pub fn sample_outcome<R: Rng + ?Sized>(rho: &DensityMatrix, set: &impl AsRef<PovmSet>, rng: &mut R) -> Result<String> {
    let set = set.as_ref();
    let probs = set.probabilities(rho)?;
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return Ok(set.outcomes[k].0.clone());
        }
    }
    Ok(set.outcomes[last].0.clone())
}

/// The photodetector pair `{|0⟩⟨0|, |0⟩⟨1|}` on a two-level system with
/// `|0⟩` the ground state, labelled `"no-click"` and `"click"`.
pub fn photodetector() -> PovmSet {
    use crate::algebra::Ket;
    let g = Ket::down();
    let e = Ket::up();
    PovmSet::new(vec![
        ("no-click".to_string(), Operator::outer(&g, &g).expect("same space")),
        ("click".to_string(), Operator::outer(&g, &e).expect("same space")),
    ])
    .expect("complete by construction")
}
