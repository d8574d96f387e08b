//! Deterministic time evolution: master-equation and closed-system
//! integration, the random-environment benchmark and the repeated-interaction
//! damping model.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::algebra::{
    annihilation, embed, number, partial_trace_operator, pauli, tensor, DensityMatrix, HilbertSpace, Ket,
    Operator, Pauli,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, ONE};
use crate::superop::{LindbladModel, SuperOp};
use crate::C64;

/// Uniform grid `t0, t0 + dt, …, t1` with every `sample_every`-th point kept.
///
/// When `(t1 − t0)/dt` is not an integer the step is shortened so the grid
/// ends exactly at `t1`. The final point is always sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub sample_every: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64, sample_every: usize) -> Result<Self> {
        let grid = Self { t0, t1, dt, sample_every };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t1.is_finite() && self.dt.is_finite()) {
            return invalid("time grid has non-finite entries");
        }
        if !(self.t1 > self.t0) {
            return invalid(format!("time grid needs t1 > t0, got [{}, {}]", self.t0, self.t1));
        }
        if !(self.dt > 0.0) {
            return invalid(format!("time step must be positive, got {}", self.dt));
        }
        if (self.t1 - self.t0) / self.dt < 1.0 - 1e-12 {
            return invalid("time step is longer than the grid");
        }
        if self.sample_every == 0 {
            return invalid("sample_every must be at least 1");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (((self.t1 - self.t0) / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// The step actually taken.
    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps() as f64
    }

    pub fn time_at(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.step()
    }

    pub fn is_sample(&self, step: usize) -> bool {
        step % self.sample_every == 0 || step == self.n_steps()
    }

    pub fn sample_steps(&self) -> Vec<usize> {
        (0..=self.n_steps()).filter(|&k| self.is_sample(k)).collect()
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_steps().into_iter().map(|k| self.time_at(k)).collect()
    }
}

/// States (or other values) recorded at the sample times of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled<T> {
    pub times: Vec<f64>,
    pub states: Vec<T>,
}

impl<T> Sampled<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Sampled<U> {
        Sampled { times: self.times.clone(), states: self.states.iter().map(f).collect() }
    }
}

impl Sampled<DensityMatrix> {
    /// `Tr[O ρ(t)]` at every sample.
    pub fn expect(&self, op: &Operator) -> Result<Vec<C64>> {
        self.states.iter().map(|r| r.expect(op)).collect()
    }
}

impl Sampled<Ket> {
    pub fn expect(&self, op: &Operator) -> Result<Vec<C64>> {
        self.states.iter().map(|k| k.expect(op)).collect()
    }
}

/// `0.01 / max(largest rate, ‖H‖)`.
pub fn default_dt(model: &LindbladModel) -> Result<f64> {
    let max_rate = model.jumps().iter().map(|j| j.rate).fold(0.0, f64::max);
    let h = linalg::spectral_norm(model.hamiltonian().matrix())?;
    let scale = max_rate.max(h);
    Ok(if scale > 0.0 { 0.01 / scale } else { 0.01 })
}

/// Classical fixed-step RK4 on `∂ρ/∂t = Lρ`, Hermitizing after every step.
///
/// Every sample is checked for trace drift (at most `1e-8` per unit time)
/// and for eigenvalues below `−1e-6`.
pub fn evolve_master(model: &LindbladModel, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Sampled<DensityMatrix>> {
    grid.validate()?;
    if rho0.space() != model.space() {
        return invalid("initial state and model live on different spaces");
    }
    let h = grid.step();
    let scale = model.frequency_scale()?;
    if scale > 0.0 && h > 0.1 / scale {
        log::warn!("time step {h:.3e} exceeds the recommended 0.1/(rate + ‖H‖) = {:.3e}", 0.1 / scale);
    }

    let heff = model.effective_hamiltonian_matrix();
    let jumps: Vec<(Array2<C64>, Array2<C64>)> = model
        .jumps()
        .iter()
        .filter(|j| j.rate > 0.0)
        .map(|j| {
            let l = j.scaled_operator().into_matrix();
            let ld = linalg::dagger(&l);
            (l, ld)
        })
        .collect();
    // For Hermitian ρ: −i(H_eff ρ − ρ H_eff†) + Σ L ρ L†, with ρ H_eff† = (H_eff ρ)†.
    let rhs = |rho: &Array2<C64>| -> Array2<C64> {
        let a = heff.dot(rho);
        let mut out = (&a - &linalg::dagger(&a)) * c(0.0, -1.0);
        for (l, ld) in &jumps {
            out += &l.dot(rho).dot(ld);
        }
        out
    };

    let space = model.space().clone();
    let mut rho = rho0.matrix().clone();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let half = c(h / 2.0, 0.0);
    let full = c(h, 0.0);
    let sixth = c(h / 6.0, 0.0);
    for step in 0..=grid.n_steps() {
        if grid.is_sample(step) {
            let t = grid.time_at(step);
            let state = DensityMatrix::assume_valid(Operator::new(space.clone(), rho.clone())?);
            check_sample(&state, t - grid.t0, step)?;
            times.push(t);
            states.push(state);
        }
        if step == grid.n_steps() {
            break;
        }
        let k1 = rhs(&rho);
        let k2 = rhs(&(&rho + &(&k1 * half)));
        let k3 = rhs(&(&rho + &(&k2 * half)));
        let k4 = rhs(&(&rho + &(&k3 * full)));
        rho = rho + (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * sixth;
        rho = linalg::hermitian_part(&rho);
    }
    Ok(Sampled { times, states })
}

fn check_sample(rho: &DensityMatrix, elapsed: f64, step: usize) -> Result<()> {
    let tr = linalg::trace(rho.matrix());
    let allowed = 1e-10 + 1e-8 * elapsed.max(1.0);
    if (tr - ONE).norm() > allowed || !tr.re.is_finite() {
        return Err(Error::Numeric(format!(
            "trace drifted to {:.12} at step {step}; reduce the time step",
            tr.re
        )));
    }
    let floor = linalg::eigvalsh(rho.matrix())?[0];
    if floor < -1e-6 {
        return Err(Error::Numeric(format!(
            "state lost positivity (eigenvalue {floor:.3e}) at step {step}; reduce the time step"
        )));
    }
    Ok(())
}

/// RK4 on `∂ψ/∂t = −iHψ` with renormalisation after every step.
///
/// For a constant Hamiltonian one RK4 step is the degree-four Taylor
/// polynomial of `exp(−iH dt)`, which is precomputed.
pub fn evolve_closed(h: &Operator, psi0: &Ket, grid: &TimeGrid) -> Result<Sampled<Ket>> {
    grid.validate()?;
    let defect = linalg::hermiticity_defect(h.matrix());
    if defect > 1e-10 {
        return invalid(format!("Hamiltonian is not Hermitian (defect {defect:.3e})"));
    }
    if psi0.space() != h.space() {
        return invalid("initial state and Hamiltonian live on different spaces");
    }
    let propagator = taylor4(&(h.matrix() * c(0.0, -grid.step())));
    let mut psi = psi0.normalized()?.into_amplitudes();
    let mut times = Vec::new();
    let mut states = Vec::new();
    for step in 0..=grid.n_steps() {
        if grid.is_sample(step) {
            times.push(grid.time_at(step));
            states.push(Ket::new(h.space().clone(), psi.clone())?);
        }
        if step == grid.n_steps() {
            break;
        }
        psi = propagator.dot(&psi);
        let n = linalg::norm_sqr(&psi).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numeric(format!("state norm collapsed at step {step}")));
        }
        psi.mapv_inplace(|z| z / n);
    }
    Ok(Sampled { times, states })
}

/// `𝟙 + X + X²/2 + X³/6 + X⁴/24`.
pub(crate) fn taylor4(x: &Array2<C64>) -> Array2<C64> {
    let mut out = linalg::eye(x.nrows());
    let mut term = linalg::eye(x.nrows());
    for k in 1..=4 {
        term = term.dot(x) * c(1.0 / k as f64, 0.0);
        out += &term;
    }
    out
}

/// Qubit coupled to `m` random bosonic modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvBenchParams {
    pub m: usize,
    pub omega: f64,
    /// Mean coupling for a single mode; with `m` modes the mean is `gbar1 / m`.
    pub gbar1: f64,
    /// Relative standard deviation of mode frequencies and couplings.
    pub rel_sigma: f64,
    pub seed: u64,
    /// Rotating-wave coupling restricted to the single-excitation sector.
    pub rwa: bool,
}

impl EnvBenchParams {
    pub fn new(m: usize, seed: u64) -> Self {
        Self { m, omega: 1.0, gbar1: 1e-3, rel_sigma: 0.05, seed, rwa: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gbar1 > 0.0) || !self.gbar1.is_finite() {
            return invalid(format!("gbar1 must be positive, got {}", self.gbar1));
        }
        if !(0.0..1.0).contains(&self.rel_sigma) {
            return invalid(format!("rel_sigma must lie in [0, 1), got {}", self.rel_sigma));
        }
        if !self.omega.is_finite() {
            return invalid("omega must be finite");
        }
        Ok(())
    }
}

/// Largest mode count for the full (non-RWA) model, dimension `2^(m+1)`.
pub const ENV_FULL_MAX_MODES: usize = 10;
/// Largest mode count for the single-excitation sector.
pub const ENV_RWA_MAX_MODES: usize = 1023;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvBenchResult {
    pub times: Vec<f64>,
    /// `⟨σ+σ−⟩` of the qubit.
    pub excitation: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

/// Draws `ω_i ~ N(ω, (rel_sigma·ω)²)` then `g_i ~ N(ḡ, (rel_sigma·ḡ)²)` with
/// `ḡ = gbar1/m`, all from one ChaCha8 stream seeded by `seed`.
pub fn draw_environment(p: &EnvBenchParams) -> Result<(Vec<f64>, Vec<f64>)> {
    p.validate()?;
    if p.m == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let gbar = p.gbar1 / p.m as f64;
    let wd = Normal::new(p.omega, p.rel_sigma * p.omega.abs()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let gd = Normal::new(gbar, p.rel_sigma * gbar).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let freqs = (0..p.m).map(|_| wd.sample(&mut rng)).collect();
    let couplings = (0..p.m).map(|_| gd.sample(&mut rng)).collect();
    Ok((freqs, couplings))
}

/// Qubit excitation under the random-environment Hamiltonian, starting from
/// `|↑; 0…0⟩`.
///
/// With `rwa` the dynamics is restricted to the single-excitation sector
/// `{|↑;0…0⟩, |↓;1_i⟩}` in the frame rotating at `ω`, where the Hamiltonian is
/// `Σ (ω_i − ω)|1_i⟩⟨1_i| + g_i(|↑;0⟩⟨↓;1_i| + h.c.)`. Without it the full
/// `ω/2 σz + Σ ω_i b_i†b_i + Σ g_i σx (b_i + b_i†)` is used with each mode
/// truncated to one quantum.
pub fn random_environment_benchmark(p: &EnvBenchParams, grid: &TimeGrid) -> Result<EnvBenchResult> {
    let (freqs, couplings) = draw_environment(p)?;
    let m = p.m;
    let (h, psi0, excited) = if p.rwa {
        if m > ENV_RWA_MAX_MODES {
            return Err(Error::Capability(format!(
                "single-excitation sector supports at most {ENV_RWA_MAX_MODES} modes, got {m}"
            )));
        }
        let mut h = Array2::zeros((m + 1, m + 1));
        for i in 0..m {
            h[[i + 1, i + 1]] = c(freqs[i] - p.omega, 0.0);
            h[[0, i + 1]] = c(couplings[i], 0.0);
            h[[i + 1, 0]] = c(couplings[i], 0.0);
        }
        let space = HilbertSpace::single(m + 1);
        let psi0 = Ket::basis(&space, &[0])?;
        let mut proj = Array2::zeros((m + 1, m + 1));
        proj[[0, 0]] = ONE;
        (Operator::new(space.clone(), h)?, psi0, Operator::new(space, proj)?)
    } else {
        if m > ENV_FULL_MAX_MODES {
            return Err(Error::Capability(format!(
                "full coupling supports at most {ENV_FULL_MAX_MODES} modes, got {m}; use the rotating-wave sector"
            )));
        }
        let space = HilbertSpace::new(vec![2; m + 1])?;
        let sz = embed(&pauli(Pauli::Z), 0, &space)?;
        let sx = embed(&pauli(Pauli::X), 0, &space)?;
        let mut h = sz.scale(c(p.omega / 2.0, 0.0));
        let b = annihilation(1)?;
        for i in 0..m {
            let bi = embed(&b, i + 1, &space)?;
            let ni = embed(&number(1)?, i + 1, &space)?;
            h = h + ni.scale(c(freqs[i], 0.0));
            h = h + (&sx * &(&bi + &bi.dagger())).scale(c(couplings[i], 0.0));
        }
        let psi0 = Ket::basis(&space, &vec![0; m + 1])?;
        let excited = embed(&(pauli(Pauli::Plus) * pauli(Pauli::Minus)), 0, &space)?;
        (h, psi0, excited)
    };
    let evo = evolve_closed(&h, &psi0, grid)?;
    let excitation = evo
        .states
        .iter()
        .map(|k| Ok(k.expect(&excited)?.re))
        .collect::<Result<Vec<f64>>>()?;
    Ok(EnvBenchResult { times: evo.times, excitation, frequencies: freqs, couplings })
}

/// Time at which the excitation lost to the environment first comes back.
///
/// With `lost = 1 − excitation`, this is the first sample after the first
/// local maximum of `lost` at which `lost` falls to `threshold` times its
/// running maximum. `None` when no such sample exists in the record.
pub fn revival_time(times: &[f64], excitation: &[f64], threshold: f64) -> Option<f64> {
    let lost: Vec<f64> = excitation.iter().map(|e| 1.0 - e).collect();
    let n = lost.len();
    let first_peak = (1..n.saturating_sub(1)).find(|&k| lost[k] > lost[k - 1] && lost[k] >= lost[k + 1])?;
    let mut running = lost[..=first_peak].iter().cloned().fold(f64::MIN, f64::max);
    for k in first_peak + 1..n {
        running = running.max(lost[k]);
        if lost[k] <= threshold * running {
            return Some(times[k]);
        }
    }
    None
}

/// Cavity damped by a stream of ancilla qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatedInteractionParams {
    pub g: f64,
    pub tau: f64,
    pub n_cycles: usize,
    pub cutoff: usize,
}

#[derive(Debug, Clone)]
pub struct RepeatedInteractionResult {
    /// Fitted decay rate of `⟨a†a⟩` per unit time.
    pub gamma_eff: f64,
    /// One interaction-measurement-reset cycle acting on the cavity.
    pub cycle_map: SuperOp,
    /// Times `kτ` and photon numbers after each cycle, starting with `k = 0`.
    pub times: Vec<f64>,
    pub mean_photons: Vec<f64>,
    /// Number of cycles used in the fit.
    pub fitted_cycles: usize,
}

/// Couples the cavity (prepared in Fock `|cutoff⟩`) to a fresh ancilla in
/// `|↓⟩` for time `τ` under the resonant exchange `g(a†σ− + aσ+)` (interaction
/// picture), performs the unread measurement `{𝟙⊗|↓⟩⟨↓|, 𝟙⊗|↓⟩⟨↑|}` and
/// discards the ancilla; repeats `n_cycles` times.
///
/// The rate is the least-squares slope of `ln⟨n⟩` against `kτ` over the first
/// five e-foldings or `n_cycles`, whichever is shorter.
pub fn repeated_interaction_map(p: &RepeatedInteractionParams) -> Result<RepeatedInteractionResult> {
    if !(p.g >= 0.0) || !p.g.is_finite() {
        return invalid(format!("coupling must be non-negative, got {}", p.g));
    }
    if !(p.tau > 0.0) || !p.tau.is_finite() {
        return invalid(format!("period must be positive, got {}", p.tau));
    }
    if p.n_cycles == 0 {
        return invalid("at least one cycle is needed");
    }
    if p.cutoff == 0 {
        return invalid("cavity cutoff must be at least 1");
    }
    if p.g * p.tau > 0.2 {
        log::warn!("g·τ = {:.3} is not small; the rate fit assumes g·τ ≪ 1", p.g * p.tau);
    }
    let cavity = HilbertSpace::single(p.cutoff + 1);
    let a = annihilation(p.cutoff)?;
    let id_c = Operator::identity(&cavity);
    let id_q = crate::algebra::identity(2);
    let sm = pauli(Pauli::Minus);
    let sp = pauli(Pauli::Plus);
    let h = (tensor(&[a.dagger(), sm.clone()])? + tensor(&[a.clone(), sp])?).scale(c(p.g, 0.0));
    let u = linalg::unitary_propagator(h.matrix(), p.tau)?;
    let ud = linalg::dagger(&u);
    let joint = h.space().clone();

    let ground = Ket::down();
    let excited = Ket::up();
    let m0 = tensor(&[id_c.clone(), Operator::outer(&ground, &ground)?])?;
    let m1 = tensor(&[id_c, Operator::outer(&ground, &excited)?])?;
    let reset = tensor(&[Operator::identity(&cavity), id_q.clone()])?;
    debug_assert_eq!(reset.dim(), joint.total_dim());
    let anc0 = ground.to_density().into_operator();

    let cycle_map = SuperOp::from_linear_map(&cavity, |x| {
        let joint_in = tensor(&[x.clone(), anc0.clone()])?;
        let evolved = Operator::new(joint.clone(), u.dot(joint_in.matrix()).dot(&ud))?;
        let measured = &(&m0 * &evolved) * &m0.dagger() + &(&m1 * &evolved) * &m1.dagger();
        partial_trace_operator(&measured, &[0])
    })?;

    let n_op = number(p.cutoff)?;
    let mut rho = Ket::fock(p.cutoff, p.cutoff)?.to_density().into_operator();
    let mut mean_photons = vec![rho.hs_inner(&n_op).re];
    for _ in 0..p.n_cycles {
        rho = cycle_map.apply(&rho)?.hermitian_part();
        mean_photons.push(linalg::trace(&n_op.matrix().dot(rho.matrix())).re);
    }
    let times: Vec<f64> = (0..=p.n_cycles).map(|k| k as f64 * p.tau).collect();

    for k in 1..mean_photons.len() {
        if mean_photons[k] > mean_photons[k - 1] * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::Numeric(format!(
                "photon number increased at cycle {k} ({:.6e} → {:.6e}); decay is not monotone",
                mean_photons[k - 1],
                mean_photons[k]
            )));
        }
    }
    let n0 = mean_photons[0];
    let floor = n0 * (-5.0f64).exp();
    let fitted = mean_photons.iter().skip(1).take_while(|&&n| n >= floor).count().max(1);
    let xs: Vec<f64> = times[..=fitted].to_vec();
    let ys: Vec<f64> = mean_photons[..=fitted].iter().map(|n| n.max(f64::MIN_POSITIVE).ln()).collect();
    let slope = least_squares_slope(&xs, &ys)
        .ok_or_else(|| Error::Numeric("rate fit failed: degenerate abscissae".into()))?;
    Ok(RepeatedInteractionResult {
        gamma_eff: -slope,
        cycle_map,
        times,
        mean_photons,
        fitted_cycles: fitted,
    })
}

/// Slope of the least-squares line through `(x, y)`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> Option<f64> {
    let slope = least_squares_slope(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    Some(if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parity;
    use crate::random;
    use crate::superop::{build_liouvillian, spectral_evolve, spectrum, Jump};

    fn cavity(cutoff: usize, omega: f64, gamma: f64) -> LindbladModel {
        LindbladModel::new(
            number(cutoff).unwrap().scale(c(omega, 0.0)),
            vec![Jump::new(gamma, annihilation(cutoff).unwrap())],
        )
        .unwrap()
    }

    #[test]
    fn grid_shapes() {
        let g = TimeGrid::new(0.0, 1.0, 0.3, 2).unwrap();
        assert_eq!(g.n_steps(), 4);
        assert!((g.step() - 0.25).abs() < 1e-15);
        assert_eq!(g.sample_steps(), vec![0, 2, 4]);
        let g = TimeGrid::new(0.0, 1.0, 0.1, 3).unwrap();
        assert_eq!(g.n_steps(), 10);
        assert_eq!(g.sample_steps(), vec![0, 3, 6, 9, 10]);
        assert!(TimeGrid::new(1.0, 0.0, 0.1, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 2.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn damped_cavity_decay_law() {
        let gamma = 1.0;
        let model = cavity(12, 1.0, gamma);
        let rho0 = Ket::fock(12, 10).unwrap().to_density();
        let grid = TimeGrid::new(0.0, 2.0, 0.002, 50).unwrap();
        let evo = evolve_master(&model, &rho0, &grid).unwrap();
        let n = number(12).unwrap();
        for (t, r) in evo.times.iter().zip(&evo.states) {
            let got = r.expect(&n).unwrap().re;
            let want = 10.0 * (-gamma * t).exp();
            assert!((got - want).abs() / want < 1e-6, "t={t} {got} {want}");
        }
    }

    #[test]
    fn two_photon_loss_conserves_parity() {
        let cutoff = 6;
        let model = LindbladModel::new(
            number(cutoff).unwrap(),
            vec![Jump::new(0.5, annihilation(cutoff).unwrap().powi(2))],
        )
        .unwrap();
        let rho0 = Ket::fock(cutoff, 3).unwrap().to_density();
        let grid = TimeGrid::new(0.0, 4.0, 0.005, 100).unwrap();
        let evo = evolve_master(&model, &rho0, &grid).unwrap();
        let pi = parity(cutoff).unwrap();
        for v in evo.expect(&pi).unwrap() {
            assert!((v.re + 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_model_leaves_state_untouched() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let space = HilbertSpace::single(3);
        let rho0 = random::density_matrix(&space, &mut r);
        let model = LindbladModel::hamiltonian_only(Operator::zeros(&space)).unwrap();
        let evo = evolve_master(&model, &rho0, &TimeGrid::new(0.0, 1.0, 0.1, 1).unwrap()).unwrap();
        for s in &evo.states {
            assert_eq!(s.matrix(), rho0.matrix());
        }
    }

    #[test]
    fn master_matches_spectral_evolution() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let space = HilbertSpace::single(4);
        let model = LindbladModel::new(
            random::hermitian(&space, &mut r),
            vec![Jump::new(0.3, random::operator(&space, &mut r))],
        )
        .unwrap();
        let s = spectrum(&build_liouvillian(&model).unwrap()).unwrap();
        let rho0 = random::density_matrix(&space, &mut r);
        let dt = default_dt(&model).unwrap();
        let evo = evolve_master(&model, &rho0, &TimeGrid::new(0.0, 2.0, dt, 40).unwrap()).unwrap();
        for (t, st) in evo.times.iter().zip(&evo.states) {
            let spec = spectral_evolve(&rho0, &s, *t).unwrap();
            assert!((spec.as_operator() - st.as_operator()).hs_norm() < 1e-6);
        }
    }

    #[test]
    fn closed_evolution_phase_and_energy() {
        let omega = 1.7;
        let h = pauli(Pauli::Z).scale(c(omega / 2.0, 0.0));
        let grid = TimeGrid::new(0.0, 3.0, 0.001, 500).unwrap();
        let evo = evolve_closed(&h, &Ket::up(), &grid).unwrap();
        for (t, k) in evo.times.iter().zip(&evo.states) {
            let a = k.amplitudes()[0];
            assert!((a - c(0.0, -omega * t / 2.0).exp()).norm() < 1e-9);
            assert!(k.amplitudes()[1].norm() < 1e-15);
        }

        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let space = HilbertSpace::single(5);
        let h = random::hermitian(&space, &mut r);
        let psi = random::ket(&space, &mut r);
        let dt = 0.01 / linalg::spectral_norm(h.matrix()).unwrap();
        let evo = evolve_closed(&h, &psi, &TimeGrid::new(0.0, 5.0, dt, 100).unwrap()).unwrap();
        let e0 = psi.expect(&h).unwrap().re;
        for k in &evo.states {
            assert!((k.norm() - 1.0).abs() < 1e-12);
            assert!((k.expect(&h).unwrap().re - e0).abs() <= 1e-8 * e0.abs().max(1.0));
        }
        assert!(evolve_closed(&pauli(Pauli::Plus), &Ket::up(), &grid).is_err());
    }

    #[test]
    fn exchange_oscillation_period() {
        let g = 0.8;
        let space = HilbertSpace::qubits(2);
        let h = (tensor(&[pauli(Pauli::Plus), pauli(Pauli::Minus)]).unwrap()
            + tensor(&[pauli(Pauli::Minus), pauli(Pauli::Plus)]).unwrap())
        .scale(c(g, 0.0));
        let psi0 = Ket::basis(&space, &[0, 1]).unwrap();
        let grid = TimeGrid::new(0.0, 2.0 * std::f64::consts::PI / g, 0.001, 100).unwrap();
        let evo = evolve_closed(&h, &psi0, &grid).unwrap();
        let p1 = embed(&(pauli(Pauli::Plus) * pauli(Pauli::Minus)), 0, &space).unwrap();
        // Two-level oracle: population cos²(g t).
        for (t, k) in evo.times.iter().zip(&evo.states) {
            let got = k.expect(&p1).unwrap().re;
            assert!((got - (g * t).cos().powi(2)).abs() < 1e-9);
        }
    }

    fn env_grid(t1: f64) -> TimeGrid {
        TimeGrid::new(0.0, t1, 0.05, 4).unwrap()
    }

    #[test]
    fn isolated_qubit_does_not_evolve() {
        for rwa in [true, false] {
            let p = EnvBenchParams { rwa, ..EnvBenchParams::new(0, 3) };
            let res = random_environment_benchmark(&p, &env_grid(50.0)).unwrap();
            assert!(res.excitation.iter().all(|&e| (e - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn single_mode_oscillations_are_small() {
        let p = EnvBenchParams::new(1, 7);
        let res = random_environment_benchmark(&p, &env_grid(2000.0)).unwrap();
        let min = res.excitation.iter().cloned().fold(1.0, f64::min);
        assert!(1.0 - min < 0.05);
        assert!(1.0 - min > 0.0);
    }

    #[test]
    fn benchmark_is_reproducible_and_checks_limits() {
        let p = EnvBenchParams::new(4, 11);
        let a = random_environment_benchmark(&p, &env_grid(100.0)).unwrap();
        let b = random_environment_benchmark(&p, &env_grid(100.0)).unwrap();
        assert_eq!(a, b);
        let full = EnvBenchParams { rwa: false, ..EnvBenchParams::new(11, 1) };
        assert!(matches!(random_environment_benchmark(&full, &env_grid(1.0)), Err(Error::Capability(_))));
    }

    #[test]
    fn rwa_sector_agrees_with_full_coupling() {
        let p = EnvBenchParams { m: 2, omega: 1.0, gbar1: 0.02, rel_sigma: 0.05, seed: 5, rwa: true };
        let grid = TimeGrid::new(0.0, 200.0, 0.005, 200).unwrap();
        let rwa = random_environment_benchmark(&p, &grid).unwrap();
        let full = random_environment_benchmark(&EnvBenchParams { rwa: false, ..p }, &grid).unwrap();
        // Counter-rotating corrections are of order g/ω = 1e-2.
        for (a, b) in rwa.excitation.iter().zip(&full.excitation) {
            assert!((a - b).abs() < 5e-3, "{a} {b}");
        }
    }

    #[test]
    fn revival_of_single_mode_is_one_period() {
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * 0.01).collect();
        let w = 2.0;
        let ex: Vec<f64> = times.iter().map(|t| 1.0 - 0.01 * (w * t / 2.0).sin().powi(2)).collect();
        let r = revival_time(&times, &ex, 0.1).unwrap();
        // Lost fraction 0.01·sin²(t) first drops to a tenth of its peak at π − asin(√0.1).
        let expected = std::f64::consts::PI - 0.1f64.sqrt().asin();
        assert!((r - expected).abs() <= 0.011, "{r}");
        assert!(revival_time(&times, &vec![1.0; 2000], 0.1).is_none());
    }

    #[test]
    fn zero_coupling_gives_identity_cycle() {
        let res = repeated_interaction_map(&RepeatedInteractionParams { g: 0.0, tau: 0.1, n_cycles: 5, cutoff: 2 }).unwrap();
        assert!(linalg::max_abs(&(res.cycle_map.matrix() - &linalg::eye(9))) < 1e-14);
        assert!(res.gamma_eff.abs() < 1e-14);
    }

    #[test]
    fn two_level_cycle_rate() {
        let (g, tau) = (1.0, 0.05);
        let res = repeated_interaction_map(&RepeatedInteractionParams { g, tau, n_cycles: 400, cutoff: 1 }).unwrap();
        // Oracle: each cycle multiplies the excited population by cos²(gτ).
        for (k, n) in res.mean_photons.iter().enumerate() {
            assert!((n - (g * tau).cos().powi(2 * k as i32)).abs() < 1e-12);
        }
        assert!((res.gamma_eff - g * g * tau).abs() / (g * g * tau) < 0.05);
        let v = res.cycle_map.map_validity().unwrap();
        assert!(v.is_quantum_map(1e-10, -1e-8));
    }

    #[test]
    fn halving_period_halves_rate() {
        let g = 1.0;
        let total = 40.0;
        let rate = |tau: f64| {
            repeated_interaction_map(&RepeatedInteractionParams { g, tau, n_cycles: (total / tau) as usize, cutoff: 3 })
                .unwrap()
                .gamma_eff
        };
        let (r1, r2) = (rate(0.04), rate(0.02));
        assert!((r1 / r2 - 2.0).abs() < 0.02, "{r1} {r2}");
    }

    #[test]
    fn slope_and_fit_quality() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((least_squares_slope(&x, &y).unwrap() - 2.0).abs() < 1e-15);
        assert!((r_squared(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!(least_squares_slope(&[1.0], &[1.0]).is_none());
    }
}
