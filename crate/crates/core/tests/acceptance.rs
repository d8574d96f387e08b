//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured figure of merit and the wall time against its budget.

use std::time::{Duration, Instant};

use liouville::algebra::{annihilation, number, parity, pauli, HilbertSpace, Ket, Operator, Pauli};
use liouville::dynamics::{
    evolve_master, least_squares_slope, r_squared, random_environment_benchmark, repeated_interaction_map,
    revival_time, EnvBenchParams, RepeatedInteractionParams, TimeGrid,
};
use liouville::linalg::c;
use liouville::measurement::{photodetector, ProjectiveSet};
use liouville::qec::{build_repetition_code, cycle_map, logical_error_ratio, two_qubit_logical_demo};
use liouville::random;
use liouville::superop::{
    build_liouvillian, spectral_evolve, spectrum, weak_symmetry_blocks, Jump, LindbladModel, SuperOp,
};
use liouville::trajectories::{
    ensemble_average, run_ensemble, state_transfer_model, state_transfer_scenario, InitialState, Scheme,
    TrajectoryConfig,
};
use liouville::{DensityMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cavity(cutoff: usize, omega: f64, gamma: f64) -> LindbladModel {
    LindbladModel::new(
        number(cutoff).unwrap().scale(c(omega, 0.0)),
        vec![Jump::new(gamma, annihilation(cutoff).unwrap())],
    )
    .unwrap()
}

fn superposition(cutoff: usize, levels: &[usize]) -> DensityMatrix {
    let d = cutoff + 1;
    let mut amps = ndarray::Array1::<C64>::zeros(d);
    for &n in levels {
        amps[n] = c(1.0, 0.0);
    }
    Ket::new(HilbertSpace::single(d), amps).unwrap().normalized().unwrap().to_density()
}

fn damped_cavity_law() -> Outcome {
    let gamma = 1.0;
    let model = cavity(30, 1.0, gamma);
    let rho0 = Ket::fock(30, 10).unwrap().to_density();
    let grid = TimeGrid::new(0.0, 5.0 / gamma, 0.002, 10).unwrap();
    let n = evolve_master(&model, &rho0, &grid).unwrap().expect(&number(30).unwrap()).unwrap();
    let worst = grid
        .sample_times()
        .iter()
        .zip(&n)
        .map(|(t, v)| {
            let exact = 10.0 * (-gamma * t).exp();
            (v.re - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max relative error {worst:.2e} (tol 1e-6)"))
}

fn qubit_spectrum() -> Outcome {
    let gamma = 0.8;
    let model = LindbladModel::new(Operator::zeros(&HilbertSpace::single(2)), vec![Jump::new(gamma, pauli(Pauli::Minus))])
        .unwrap();
    let s = spectrum(&build_liouvillian(&model).unwrap()).unwrap();
    let mut vals: Vec<C64> = s.eigenvalues().to_vec();
    vals.sort_by(|a, b| b.re.total_cmp(&a.re));
    let expected = [0.0, -gamma / 2.0, -gamma / 2.0, -gamma];
    let err = vals.iter().zip(expected).map(|(z, e)| (z - c(e, 0.0)).norm()).fold(0.0, f64::max);
    outcome(err <= 1e-10, format!("eigenvalue error {err:.2e} (tol 1e-10)"))
}

fn unraveling_equivalence() -> Outcome {
    let cutoff = 30;
    let model = cavity(cutoff, 1.0, 1.0);
    let psi0 = Ket::fock(cutoff, 10).unwrap();
    let n_op = number(cutoff).unwrap();
    let grid = TimeGrid::new(0.0, 5.0, 0.001, 10).unwrap();
    let master = evolve_master(&model, &psi0.to_density(), &grid).unwrap().expect(&n_op).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, scheme) in [("counting", Scheme::Counting), ("homodyne", Scheme::HomodyneIdeal)] {
        let cfg = TrajectoryConfig::new(0.001, 5.0, 2024)
            .with_scheme(scheme)
            .with_observables(vec![n_op.clone()])
            .with_sample_every(10);
        let runs = run_ensemble(&model, &InitialState::Pure(psi0.clone()), &cfg, 100).unwrap();
        let avg = ensemble_average(&runs).unwrap();
        let stats = &avg.observables[0];
        let mut within = 0;
        let mut worst_abs: f64 = 0.0;
        for (s, m) in master.iter().enumerate() {
            let dev = (stats.mean[s].re - m.re).abs();
            worst_abs = worst_abs.max(dev);
            if dev <= 5.0 * stats.stderr_re[s] || dev <= 1e-12 {
                within += 1;
            }
        }
        let frac = within as f64 / master.len() as f64;
        pass &= frac >= 0.99 && worst_abs <= 0.5;
        detail.push(format!("{name}: {:.1}% within 5 s.e., max |dev| {worst_abs:.3}", 100.0 * frac));
    }
    outcome(pass, detail.join("; "))
}

fn test_matrix() -> Vec<(String, LindbladModel)> {
    let mut models = Vec::new();
    models.push((
        "driven dephased qubit".to_string(),
        LindbladModel::new(
            &pauli(Pauli::X).scale(c(0.7, 0.0)) + &pauli(Pauli::Z).scale(c(0.3, 0.0)),
            vec![Jump::new(0.4, pauli(Pauli::Minus)), Jump::new(0.2, pauli(Pauli::Z))],
        )
        .unwrap(),
    ));
    models.push(("damped cavity d=5".into(), cavity(4, 1.0, 0.5)));
    models.push((
        "two-photon loss d=7".into(),
        LindbladModel::new(number(6).unwrap(), vec![Jump::new(0.3, annihilation(6).unwrap().powi(2))]).unwrap(),
    ));
    models.push(("state transfer d=4".into(), state_transfer_model(0.3, 0.5, 1.0).unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for d in [3, 6, 8] {
        let space = HilbertSpace::single(d);
        let h = random::hermitian(&space, &mut rng).scale(c(0.5, 0.0));
        let jumps = (0..2).map(|_| Jump::new(0.3, random::operator(&space, &mut rng).scale(c(0.5, 0.0)))).collect();
        models.push((format!("random d={d}"), LindbladModel::new(h, jumps).unwrap()));
    }
    models
}

fn spectral_vs_direct() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (name, model) in test_matrix() {
        let s = spectrum(&build_liouvillian(&model).unwrap()).unwrap();
        if !s.diagonalizable() {
            skipped.push(name);
            continue;
        }
        checked += 1;
        let rho0 = random::density_matrix(model.space(), &mut rng);
        let dt = (0.05 / model.frequency_scale().unwrap()).min(1e-3);
        let grid = TimeGrid::new(0.0, 3.0, dt, 100).unwrap();
        let direct = evolve_master(&model, &rho0, &grid).unwrap();
        for (t, rho) in direct.times.iter().zip(&direct.states) {
            let spec = spectral_evolve(&rho0, &s, *t).unwrap();
            worst = worst.max(liouville::linalg::hs_norm(&(spec.matrix() - rho.matrix())));
        }
    }
    outcome(
        worst <= 1e-6 && checked > 0,
        format!("{checked} models, max HS distance {worst:.2e} (tol 1e-6); non-diagonalizable skipped: {skipped:?}"),
    )
}

fn strong_symmetry() -> Outcome {
    let cutoff = 6;
    let model =
        LindbladModel::new(number(cutoff).unwrap(), vec![Jump::new(1.0, annihilation(cutoff).unwrap().powi(2))]).unwrap();
    let pi = parity(cutoff).unwrap();
    let grid = TimeGrid::new(0.0, 5.0, 0.002, 25).unwrap();
    let mut worst: f64 = 0.0;
    for levels in [&[5][..], &[6], &[1, 4], &[0, 2, 5], &[2, 3, 6]] {
        let rho0 = superposition(cutoff, levels);
        let p0 = rho0.expect(&pi).unwrap();
        let p = evolve_master(&model, &rho0, &grid).unwrap().expect(&pi).unwrap();
        worst = worst.max(p.iter().map(|v| (v - p0).norm()).fold(0.0, f64::max));
    }
    outcome(worst <= 1e-8, format!("max |<Pi>(t) - <Pi>(0)| {worst:.2e} (tol 1e-8)"))
}

fn weak_symmetry() -> Outcome {
    let cutoff = 5;
    let gamma = 0.7;
    let model = cavity(cutoff, 1.3, gamma);
    let rho0 = superposition(cutoff, &[1, 3, 5]);
    let n_op = number(cutoff).unwrap();
    let n0 = rho0.expect(&n_op).unwrap().re;
    let grid = TimeGrid::new(0.0, 5.0, 0.001, 50).unwrap();
    let n = evolve_master(&model, &rho0, &grid).unwrap().expect(&n_op).unwrap();
    let law = grid
        .sample_times()
        .iter()
        .zip(&n)
        .map(|(t, v)| (v.re - n0 * (-gamma * t).exp()).abs())
        .fold(0.0, f64::max);
    let l = build_liouvillian(&model).unwrap();
    let blocks = weak_symmetry_blocks(&l, &n_op.exp_i(0.37).unwrap()).unwrap();
    let d = cutoff + 1;
    let diff = |k: usize| (k / d) as i64 - (k % d) as i64;
    let mut grouping = true;
    for (a, la) in blocks.labels.iter().enumerate() {
        for (b, lb) in blocks.labels.iter().enumerate() {
            grouping &= (la == lb) == (diff(a) == diff(b));
        }
    }
    // Direct scan of the matrix for entries joining different m − n sectors.
    let mut cross: f64 = 0.0;
    for ((a, b), z) in l.matrix().indexed_iter() {
        if diff(a) != diff(b) {
            cross = cross.max(z.norm());
        }
    }
    outcome(
        law <= 1e-8 && grouping && cross <= 1e-10 && blocks.verified,
        format!("decay-law error {law:.2e} (tol 1e-8), cross-sector max {cross:.1e} (tol 1e-10), {} sectors", blocks.block_sizes.len()),
    )
}

fn qec() -> Outcome {
    let gamma = 1.0;
    let taus = [0.01, 0.02, 0.04, 0.06, 0.08, 0.1];
    let rows = logical_error_ratio(gamma, &taus).unwrap();
    let below = rows.iter().all(|r| r.lambda_logical < r.bare_rate);
    let x: Vec<f64> = rows[..3].iter().map(|r| r.tau).collect();
    let y: Vec<f64> = rows[..3].iter().map(|r| r.lambda_logical).collect();
    let r2 = r_squared(&x, &y).unwrap();

    let code = build_repetition_code();
    let recovery = code.recovery_superop().unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in [(c(1.0, 0.0), c(0.0, 0.0)), (c(0.0, 0.0), c(1.0, 0.0)), (c(0.6, 0.0), c(0.0, 0.8)), (c(0.3, -0.2), c(0.5, 0.7))] {
        let psi = code.encode(a, b).unwrap();
        for j in 0..3 {
            let err = liouville::algebra::embed(&pauli(Pauli::X), j, &code.space).unwrap();
            let fixed = recovery.apply(err.apply(&psi).unwrap().to_density().as_operator()).unwrap();
            worst = worst.max((psi.expect(&fixed).unwrap().re - 1.0).abs());
        }
    }
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.ratio.unwrap())).collect();
    outcome(
        below && r2 > 0.99 && worst <= 1e-12,
        format!("ratios {ratios:?} all < 1: {below}, R^2 {r2:.6} (> 0.99), fidelity defect {worst:.1e} (tol 1e-12)"),
    )
}

fn two_qubit_subsystem() -> Outcome {
    let r = two_qubit_logical_demo(0.7, 3.0, 20, &[0.0, 0.25, 0.5, 1.0, 2.0, 5.0], 12).unwrap();
    outcome(
        r.holds(1e-8),
        format!("spectrum mismatch {:.1e}, reduced-state deviation {:.1e} (tol 1e-8)", r.spectrum_mismatch, r.reduced_deviation),
    )
}

fn zeno() -> Outcome {
    let g = 1.0;
    let taus = [0.0125, 0.025, 0.05];
    let rates: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            repeated_interaction_map(&RepeatedInteractionParams { g, tau, n_cycles: 2000, cutoff: 1 })
                .unwrap()
                .gamma_eff
        })
        .collect();
    let rel = (rates[2] / (g * g * 0.05) - 1.0).abs();
    let slope = least_squares_slope(&taus, &rates).unwrap();
    let mean_t = taus.iter().sum::<f64>() / 3.0;
    let mean_r = rates.iter().sum::<f64>() / 3.0;
    let intercept = mean_r - slope * mean_t;
    let r2 = r_squared(&taus, &rates).unwrap();
    let through_origin = intercept.abs() <= 0.05 * rates[0];
    outcome(
        rel <= 0.05 && r2 > 0.999 && through_origin,
        format!("gamma_eff/(g^2 tau) - 1 = {rel:.1e} at g tau = 0.05 (tol 5%), R^2 {r2:.6}, intercept {intercept:.1e}"),
    )
}

fn state_transfer() -> Outcome {
    let gc = 1.0;
    let cfg = TrajectoryConfig { conditional_no_jump: true, store_states: true, ..TrajectoryConfig::new(0.001, 6.0 / gc, 1) };
    let t = state_transfer_scenario(0.2, 0.2, gc, &cfg).unwrap();
    let space = HilbertSpace::qubits(2);
    let singlet = Ket::basis(&space, &[0, 1])
        .unwrap()
        .add_scaled(c(-1.0, 0.0), &Ket::basis(&space, &[1, 0]).unwrap())
        .unwrap()
        .normalized()
        .unwrap();
    let fidelity = singlet.inner(t.states.as_ref().unwrap().last().unwrap()).unwrap().norm_sqr();

    let cfg = TrajectoryConfig { conditional_no_jump: true, ..TrajectoryConfig::new(0.001, 10.0 / gc, 1) };
    let u = state_transfer_scenario(1.0, 0.2, gc, &cfg).unwrap();
    let late = &u.records[u.records.len() * 4 / 5..];
    let swapped = late.iter().all(|r| r[1].re > r[0].re);
    let last = u.records.last().unwrap();
    outcome(
        fidelity >= 0.95 && swapped,
        format!(
            "fidelity with Psi- at gc t = 6: {fidelity:.4} (>= 0.95); unbalanced late populations q1 {:.3} < q2 {:.3}: {swapped}",
            last[0].re, last[1].re
        ),
    )
}

fn environment_benchmark() -> Outcome {
    let grid = TimeGrid::new(0.0, 40000.0, 0.05, 20).unwrap();
    let run = |m: usize, seed: u64| random_environment_benchmark(&EnvBenchParams::new(m, seed), &grid).unwrap();
    let m0 = run(0, 1);
    let flat = m0.excitation.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let amp = (1..=5)
        .map(|seed| {
            let r = run(1, seed);
            let max = r.excitation.iter().cloned().fold(f64::MIN, f64::max);
            let min = r.excitation.iter().cloned().fold(f64::MAX, f64::min);
            max - min
        })
        .fold(0.0, f64::max);
    let mut medians = Vec::new();
    let mut table = Vec::new();
    for m in [2, 4, 8] {
        let mut times: Vec<f64> = (1..=5)
            .map(|seed| {
                let r = run(m, seed);
                revival_time(&r.times, &r.excitation, 0.1).unwrap_or(f64::INFINITY)
            })
            .collect();
        table.push(format!("M={m}: {times:?}"));
        times.sort_by(f64::total_cmp);
        medians.push(times[2]);
    }
    let monotone = medians.windows(2).all(|w| w[0] < w[1]) && medians.iter().all(|t| t.is_finite());
    outcome(
        flat <= 1e-12 && amp < 0.05 && monotone,
        format!(
            "M=0 deviation {flat:.1e}; M=1 max amplitude {amp:.2e} (< 0.05); median revival {medians:?} increasing: {monotone}; per seed {}",
            table.join(", ")
        ),
    )
}

fn map_validity() -> Outcome {
    let mut maps: Vec<(String, SuperOp)> = Vec::new();
    maps.push(("unread sigma_z".into(), ProjectiveSet::from_observable(&pauli(Pauli::Z)).unwrap().as_povm().unread_superop().unwrap()));
    maps.push(("unread photodetector".into(), photodetector().unread_superop().unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for d in [2, 3, 4] {
        let set = random::povm(&HilbertSpace::single(d), 3, &mut rng).unwrap();
        maps.push((format!("unread random POVM d={d}"), set.unread_superop().unwrap()));
    }
    maps.push(("recovery".into(), build_repetition_code().recovery_superop().unwrap()));
    maps.push(("cycle map".into(), cycle_map(1.0, 0.1).unwrap().map));
    maps.push((
        "repeated-interaction cycle".into(),
        repeated_interaction_map(&RepeatedInteractionParams { g: 1.0, tau: 0.05, n_cycles: 1, cutoff: 3 })
            .unwrap()
            .cycle_map,
    ));
    let mut failures = Vec::new();
    let mut worst_trace: f64 = 0.0;
    let mut worst_choi: f64 = 0.0;
    for (name, m) in &maps {
        let v = m.map_validity().unwrap();
        worst_trace = worst_trace.max(v.trace_defect);
        worst_choi = worst_choi.min(v.min_choi_eigenvalue);
        if !v.is_quantum_map(1e-10, -1e-8) {
            failures.push(name.clone());
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} maps, max trace defect {worst_trace:.1e} (tol 1e-10), min Choi eigenvalue {worst_choi:.1e} (floor -1e-8); failing: {failures:?}", maps.len()),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, u64, fn() -> Outcome); 12] = [
        ("damped cavity law", 10, damped_cavity_law),
        ("single-qubit spectrum", 1, qubit_spectrum),
        ("unraveling equivalence", 60, unraveling_equivalence),
        ("spectral vs direct integration", 30, spectral_vs_direct),
        ("strong symmetry (parity)", 5, strong_symmetry),
        ("weak symmetry (U(1) sectors)", 5, weak_symmetry),
        ("repetition-code error correction", 30, qec),
        ("two-qubit logical subsystem", 10, two_qubit_subsystem),
        ("repeated-interaction damping", 10, zeno),
        ("dissipative state transfer", 10, state_transfer),
        ("random environment benchmark", 30, environment_benchmark),
        ("map validity", 30, map_validity),
    ];
    let mut failed = Vec::new();
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*budget);
        let pass = o.pass && in_time;
        println!(
            "criterion {:>2} {:<34} {} | {} | {:.2} s (budget {} s)",
            k + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget
        );
        if !pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
