//! Quantum trajectories: counting (jump) and homodyne (diffusive)
//! unravelings of a Lindblad model, ensembles and their statistics.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::algebra::{embed, pauli, DensityMatrix, HilbertSpace, Ket, Operator, Pauli};
use crate::dynamics::{taylor4, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c};
use crate::superop::{Jump, LindbladModel};
use crate::C64;

/// Per-step total jump probability above which a warning is logged.
pub const WARN_STEP_PROBABILITY: f64 = 0.1;
/// Per-step total jump probability above which the run is aborted.
pub const MAX_STEP_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Counting,
    /// Counting after the substitution `Γ → Γ + β`, `H → H − (iβ/2)(Γ − Γ†)`.
    CountingWithOffset(f64),
    HomodyneIdeal,
}

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Observables recorded at every sample as `⟨ψ|O|ψ⟩`.
    pub observables: Vec<Operator>,
    pub store_states: bool,
    pub sample_every: usize,
    /// Follow only the no-jump branch (postselection on no detection).
    pub conditional_no_jump: bool,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, t_max: f64, seed: u64) -> Self {
        Self {
            dt,
            t_max,
            seed,
            scheme: Scheme::Counting,
            observables: Vec::new(),
            store_states: false,
            sample_every: 1,
            conditional_no_jump: false,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_observables(mut self, observables: Vec<Operator>) -> Self {
        self.observables = observables;
        self
    }

    pub fn with_sample_every(mut self, sample_every: usize) -> Self {
        self.sample_every = sample_every;
        self
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(0.0, self.t_max, self.dt, self.sample_every)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    /// End of the step in which the jump happened.
    pub time: f64,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub times: Vec<f64>,
    /// `records[sample][observable]`.
    pub records: Vec<Vec<C64>>,
    pub states: Option<Vec<Ket>>,
    pub jumps: Vec<JumpEvent>,
    pub seed: u64,
    /// Index of the trajectory's random stream.
    pub index: u64,
}

impl TrajectoryResult {
    /// Time series of observable `k`.
    pub fn observable(&self, k: usize) -> Vec<C64> {
        self.records.iter().map(|r| r[k]).collect()
    }
}

/// Random stream of trajectory `index`: ChaCha8 seeded with `seed`, stream `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `H − (i/2) Σ γ Γ†Γ`.
pub fn effective_hamiltonian(model: &LindbladModel) -> Operator {
    Operator::new(model.space().clone(), model.effective_hamiltonian_matrix()).expect("shape fits")
}

struct Recorder<'a> {
    cfg: &'a TrajectoryConfig,
    space: HilbertSpace,
    times: Vec<f64>,
    records: Vec<Vec<C64>>,
    states: Vec<Ket>,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a TrajectoryConfig, space: &HilbertSpace) -> Result<Self> {
        for (k, o) in cfg.observables.iter().enumerate() {
            if o.space() != space {
                return invalid(format!("observable {k} lives on {} but the model on {space}", o.space()));
            }
        }
        Ok(Self { cfg, space: space.clone(), times: Vec::new(), records: Vec::new(), states: Vec::new() })
    }

    fn record(&mut self, t: f64, psi: &Array1<C64>) -> Result<()> {
        self.times.push(t);
        self.records.push(
            self.cfg
                .observables
                .iter()
                .map(|o| linalg::inner(psi, &o.matrix().dot(psi)))
                .collect(),
        );
        if self.cfg.store_states {
            self.states.push(Ket::new(self.space.clone(), psi.clone())?);
        }
        Ok(())
    }

    fn finish(self, jumps: Vec<JumpEvent>, index: u64) -> TrajectoryResult {
        let store = self.cfg.store_states;
        TrajectoryResult {
            times: self.times,
            records: self.records,
            states: store.then_some(self.states),
            jumps,
            seed: self.cfg.seed,
            index,
        }
    }
}

fn normalize(psi: &mut Array1<C64>, step: usize) -> Result<()> {
    let n = linalg::norm_sqr(psi).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Numeric(format!("conditional state vanished at step {step}")));
    }
    psi.mapv_inplace(|z| z / n);
    Ok(())
}

fn check_initial(model: &LindbladModel, psi0: &Ket) -> Result<Array1<C64>> {
    if psi0.space() != model.space() {
        return invalid("initial state and model live on different spaces");
    }
    if (psi0.norm() - 1.0).abs() > 1e-8 {
        return invalid(format!("initial state is not normalised (norm {})", psi0.norm()));
    }
    Ok(psi0.amplitudes().clone())
}

/// Counting unraveling: per step, channel `μ` fires with probability
/// `dt·γ_μ‖Γ_μψ‖²` (at most one jump per step, channel chosen in proportion);
/// otherwise `ψ` is propagated with the degree-four Taylor polynomial of
/// `exp(−iH_eff dt)` and renormalised.
pub fn run_counting(model: &LindbladModel, psi0: &Ket, cfg: &TrajectoryConfig) -> Result<TrajectoryResult> {
    counting(model, psi0, cfg, 0)
}

fn counting(model: &LindbladModel, psi0: &Ket, cfg: &TrajectoryConfig, index: u64) -> Result<TrajectoryResult> {
    let grid = cfg.grid()?;
    let dt = grid.step();
    let mut psi = check_initial(model, psi0)?;
    let mut rng = trajectory_rng(cfg.seed, index);
    let propagator = taylor4(&(model.effective_hamiltonian_matrix() * c(0.0, -dt)));
    let channels: Vec<Array2<C64>> = model
        .jumps()
        .iter()
        .filter(|j| j.rate > 0.0)
        .map(|j| j.scaled_operator().into_matrix())
        .collect();
    let channel_index: Vec<usize> = model
        .jumps()
        .iter()
        .enumerate()
        .filter(|(_, j)| j.rate > 0.0)
        .map(|(k, _)| k)
        .collect();

    let mut rec = Recorder::new(cfg, model.space())?;
    let mut jumps = Vec::new();
    let mut warned = false;
    let mut probs = vec![0.0; channels.len()];
    for step in 0..=grid.n_steps() {
        if grid.is_sample(step) {
            rec.record(grid.time_at(step), &psi)?;
        }
        if step == grid.n_steps() {
            break;
        }
        let mut jumped = false;
        if !cfg.conditional_no_jump && !channels.is_empty() {
            let images: Vec<Array1<C64>> = channels.iter().map(|l| l.dot(&psi)).collect();
            for (p, img) in probs.iter_mut().zip(&images) {
                *p = dt * linalg::norm_sqr(img);
            }
            let total: f64 = probs.iter().sum();
            if total > MAX_STEP_PROBABILITY {
                return Err(Error::Numeric(format!(
                    "jump probability {total:.3} per step at t = {:.4}; reduce dt",
                    grid.time_at(step)
                )));
            }
            if total > WARN_STEP_PROBABILITY && !warned {
                log::warn!("jump probability {total:.3} per step exceeds {WARN_STEP_PROBABILITY}; results are biased");
                warned = true;
            }
            let u: f64 = rng.random();
            if u < total {
                let mut acc = 0.0;
                let mut chosen = probs.len() - 1;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = k;
                        break;
                    }
                }
                psi = images[chosen].clone();
                jumps.push(JumpEvent { time: grid.time_at(step + 1), channel: channel_index[chosen] });
                jumped = true;
            }
        }
        if !jumped {
            psi = propagator.dot(&psi);
        }
        normalize(&mut psi, step)?;
    }
    Ok(rec.finish(jumps, index))
}

/// Ideal homodyne unraveling with `dW ~ N(0, dt)`:
///
/// `dψ = [dW (c − x/2) + dt (−iH − c†c/2 + x c/2 − x²/8)] ψ`, with
/// `c = √γ Γ` and `x = ⟨c + c†⟩`, followed by renormalisation. The
/// state-independent part `−iH − c†c/2` is propagated with the degree-four
/// Taylor polynomial of its exponential, the rest by Euler–Maruyama.
pub fn run_homodyne(model: &LindbladModel, psi0: &Ket, cfg: &TrajectoryConfig) -> Result<TrajectoryResult> {
    homodyne(model, psi0, cfg, 0)
}

fn homodyne(model: &LindbladModel, psi0: &Ket, cfg: &TrajectoryConfig, index: u64) -> Result<TrajectoryResult> {
    if model.jumps().len() > 1 {
        return Err(Error::Capability(format!(
            "homodyne unraveling supports a single jump channel, the model has {}",
            model.jumps().len()
        )));
    }
    let grid = cfg.grid()?;
    let dt = grid.step();
    let sqrt_dt = dt.sqrt();
    let mut psi = check_initial(model, psi0)?;
    let mut rng = trajectory_rng(cfg.seed, index);
    let d = model.dim();
    let cop = match model.jumps().first() {
        Some(j) => j.scaled_operator().into_matrix(),
        None => Array2::zeros((d, d)),
    };
    // The linear drift −iH − c†c/2 is integrated with the same propagator as
    // the no-jump evolution; only the state-dependent terms are stepped by Euler–Maruyama.
    let propagator = taylor4(&(model.effective_hamiltonian_matrix() * c(0.0, -dt)));

    let mut rec = Recorder::new(cfg, model.space())?;
    for step in 0..=grid.n_steps() {
        if grid.is_sample(step) {
            rec.record(grid.time_at(step), &psi)?;
        }
        if step == grid.n_steps() {
            break;
        }
        let cpsi = cop.dot(&psi);
        let x = 2.0 * linalg::inner(&psi, &cpsi).re;
        let dw = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let mut next = propagator.dot(&psi);
        next.scaled_add(c(dw + dt * x / 2.0, 0.0), &cpsi);
        next.scaled_add(c(-dw * x / 2.0 - dt * x * x / 8.0, 0.0), &psi);
        psi = next;
        normalize(&mut psi, step)?;
    }
    Ok(rec.finish(Vec::new(), index))
}

/// The model after `Γ → Γ + β`, `H → H − (iβ/2)(Γ − Γ†)` with `Γ = √γ·J`,
/// as a single channel of unit rate.
pub fn offset_model(model: &LindbladModel, beta: f64) -> Result<LindbladModel> {
    if !beta.is_finite() {
        return invalid("offset must be finite");
    }
    if model.jumps().len() != 1 {
        return Err(Error::Capability(format!(
            "offset counting supports a single jump channel, the model has {}",
            model.jumps().len()
        )));
    }
    let gamma = model.jumps()[0].scaled_operator();
    let id = Operator::identity(model.space());
    let shifted = &gamma + &id.scale(c(beta, 0.0));
    let h = model.hamiltonian() - &(&gamma - &gamma.dagger()).scale(c(0.0, beta / 2.0));
    let h = h.hermitian_part();
    LindbladModel::new(h, vec![Jump::new(1.0, shifted)])
}

/// Counting with a coherent offset `β`; `β = 0` runs the unmodified model.
pub fn run_counting_with_offset(
    model: &LindbladModel,
    beta: f64,
    psi0: &Ket,
    cfg: &TrajectoryConfig,
) -> Result<TrajectoryResult> {
    offset_counting(model, beta, psi0, cfg, 0)
}

fn offset_counting(model: &LindbladModel, beta: f64, psi0: &Ket, cfg: &TrajectoryConfig, index: u64) -> Result<TrajectoryResult> {
    if beta == 0.0 {
        if model.jumps().len() > 1 {
            return Err(Error::Capability("offset counting supports a single jump channel".into()));
        }
        return counting(model, psi0, cfg, index);
    }
    counting(&offset_model(model, beta)?, psi0, cfg, index)
}

/// Runs trajectory `index` with the scheme selected in `cfg`.
pub fn run_trajectory(model: &LindbladModel, psi0: &Ket, cfg: &TrajectoryConfig, index: u64) -> Result<TrajectoryResult> {
    match cfg.scheme {
        Scheme::Counting => counting(model, psi0, cfg, index),
        Scheme::CountingWithOffset(beta) => offset_counting(model, beta, psi0, cfg, index),
        Scheme::HomodyneIdeal => homodyne(model, psi0, cfg, index),
    }
}

/// Pure or mixed starting point of an ensemble.
#[derive(Debug, Clone)]
pub enum InitialState {
    Pure(Ket),
    /// Each trajectory starts from an eigenvector of `ρ0`, drawn with its
    /// eigenvalue as probability from the trajectory's own stream.
    Mixed(DensityMatrix),
}

impl From<Ket> for InitialState {
    fn from(k: Ket) -> Self {
        InitialState::Pure(k)
    }
}

impl From<DensityMatrix> for InitialState {
    fn from(r: DensityMatrix) -> Self {
        InitialState::Mixed(r)
    }
}

enum Sampler {
    Pure(Ket),
    Mixed { weights: Vec<f64>, kets: Vec<Ket> },
}

impl Sampler {
    fn new(initial: &InitialState) -> Result<Self> {
        match initial {
            InitialState::Pure(k) => Ok(Sampler::Pure(k.normalized()?)),
            InitialState::Mixed(rho) => {
                let (vals, vecs) = linalg::eigh(rho.matrix())?;
                let mut weights = Vec::new();
                let mut kets = Vec::new();
                for (k, &w) in vals.iter().enumerate().rev() {
                    if w > 1e-14 {
                        weights.push(w);
                        kets.push(Ket::new(rho.space().clone(), vecs.column(k).to_owned())?.normalized()?);
                    }
                }
                if kets.len() == 1 {
                    return Ok(Sampler::Pure(kets.remove(0)));
                }
                Ok(Sampler::Mixed { weights, kets })
            }
        }
    }

    fn draw(&self, seed: u64, index: u64) -> Ket {
        match self {
            Sampler::Pure(k) => k.clone(),
            Sampler::Mixed { weights, kets } => {
                // A separate stream family keeps the dynamics' draws untouched.
                let mut rng = trajectory_rng(seed ^ 0x9e37_79b9_7f4a_7c15, index);
                let total: f64 = weights.iter().sum();
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for (w, k) in weights.iter().zip(kets) {
                    acc += w;
                    if u < acc {
                        return k.clone();
                    }
                }
                kets.last().expect("nonempty").clone()
            }
        }
    }
}

/// `n` independent trajectories, indices `0..n`, run in parallel and returned
/// in index order.
pub fn run_ensemble(
    model: &LindbladModel,
    initial: &InitialState,
    cfg: &TrajectoryConfig,
    n: usize,
) -> Result<Vec<TrajectoryResult>> {
    if n == 0 {
        return invalid("an ensemble needs at least one trajectory");
    }
    let sampler = Sampler::new(initial)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| run_trajectory(model, &sampler.draw(cfg.seed, i), cfg, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableStats {
    pub mean: Vec<C64>,
    /// Sample standard deviation over `√N`, for the real and imaginary parts.
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    pub observables: Vec<ObservableStats>,
    pub n_trajectories: usize,
    /// False for a single trajectory, whose standard error is reported as zero.
    pub stderr_defined: bool,
}

pub fn ensemble_average(results: &[TrajectoryResult]) -> Result<EnsembleAverage> {
    let first = results.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    let n_obs = first.records.first().map_or(0, |r| r.len());
    for r in results {
        if r.times.len() != first.times.len()
            || r.times.iter().zip(&first.times).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
        {
            return invalid("trajectories were sampled on different time grids");
        }
        if r.records.iter().any(|row| row.len() != n_obs) {
            return invalid("trajectories recorded different observables");
        }
    }
    let n = results.len();
    let nf = n as f64;
    let observables = (0..n_obs)
        .map(|k| {
            let mut mean = Vec::with_capacity(first.times.len());
            let mut se_re = Vec::with_capacity(first.times.len());
            let mut se_im = Vec::with_capacity(first.times.len());
            for s in 0..first.times.len() {
                let m: C64 = results.iter().map(|r| r.records[s][k]).sum::<C64>() / nf;
                mean.push(m);
                if n > 1 {
                    let var_re = results.iter().map(|r| (r.records[s][k].re - m.re).powi(2)).sum::<f64>() / (nf - 1.0);
                    let var_im = results.iter().map(|r| (r.records[s][k].im - m.im).powi(2)).sum::<f64>() / (nf - 1.0);
                    se_re.push((var_re / nf).sqrt());
                    se_im.push((var_im / nf).sqrt());
                } else {
                    se_re.push(0.0);
                    se_im.push(0.0);
                }
            }
            ObservableStats { mean, stderr_re: se_re, stderr_im: se_im }
        })
        .collect();
    Ok(EnsembleAverage { times: first.times.clone(), observables, n_trajectories: n, stderr_defined: n > 1 })
}

/// Two qubits with `H = σz¹/2 + σz²/2`, local decay `γ1 D[σ−¹]`, `γ2 D[σ−²]`
/// and collective decay `γc D[(σ−¹ + σ−²)/√2]`.
pub fn state_transfer_model(gamma1: f64, gamma2: f64, gamma_c: f64) -> Result<LindbladModel> {
    let space = HilbertSpace::qubits(2);
    let s1 = embed(&pauli(Pauli::Minus), 0, &space)?;
    let s2 = embed(&pauli(Pauli::Minus), 1, &space)?;
    let h = (embed(&pauli(Pauli::Z), 0, &space)? + embed(&pauli(Pauli::Z), 1, &space)?).scale(c(0.5, 0.0));
    let collective = (&s1 + &s2).scale(c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    LindbladModel::new(
        h,
        vec![Jump::new(gamma1, s1), Jump::new(gamma2, s2), Jump::new(gamma_c, collective)],
    )
}

/// `|e, g⟩`: qubit 1 excited, qubit 2 in the ground state.
pub fn excited_ground() -> Ket {
    Ket::up().tensor(&Ket::down())
}

/// Counting trajectory from `|e, g⟩` recording `⟨σ+σ−⟩` of qubit 1 and qubit 2
/// (in that order, replacing any observables in `cfg`).
pub fn state_transfer_scenario(gamma1: f64, gamma2: f64, gamma_c: f64, cfg: &TrajectoryConfig) -> Result<TrajectoryResult> {
    if gamma1 < 0.0 || gamma2 < 0.0 || gamma_c < 0.0 {
        return invalid("rates must be non-negative");
    }
    let model = state_transfer_model(gamma1, gamma2, gamma_c)?;
    let space = model.space().clone();
    let n = pauli(Pauli::Plus) * pauli(Pauli::Minus);
    let cfg = TrajectoryConfig {
        observables: vec![embed(&n, 0, &space)?, embed(&n, 1, &space)?],
        scheme: Scheme::Counting,
        ..cfg.clone()
    };
    counting(&model, &excited_ground(), &cfg, 0)
}
