//! Randomised checks of the structural invariants of generators, maps and
//! trajectories.

use liouville::algebra::{HilbertSpace, Operator};
use liouville::dynamics::{evolve_master, TimeGrid};
use liouville::linalg::{c, hermiticity_defect, max_abs};
use liouville::measurement::apply_unread;
use liouville::qec::cycle_map;
use liouville::random;
use liouville::superop::{build_liouvillian, devectorize, spectrum, vectorize, Jump, LindbladModel};
use liouville::trajectories::{run_ensemble, InitialState, Scheme, TrajectoryConfig};
use liouville::DensityMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(d: usize, n_jumps: usize, rng: &mut ChaCha8Rng) -> LindbladModel {
    let space = HilbertSpace::single(d);
    let h = random::hermitian(&space, rng);
    let jumps = (0..n_jumps)
        .map(|_| Jump::new(rng.random_range(0.0..2.0), random::operator(&space, rng)))
        .collect();
    LindbladModel::new(h, jumps).unwrap()
}

fn case_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn liouvillian_matrix_matches_direct_rhs(seed in any::<u64>(), d in 1usize..=6, n_jumps in 0usize..=3) {
        let mut rng = case_rng(seed);
        let model = random_model(d, n_jumps, &mut rng);
        let l = build_liouvillian(&model).unwrap();
        let x = random::operator(model.space(), &mut rng);
        let via_matrix = devectorize(&l.matrix().dot(&vectorize(&x)), model.space()).unwrap();
        let direct = model.rhs(&x).unwrap();
        let scale = 1.0 + max_abs(direct.matrix());
        prop_assert!(max_abs(&(via_matrix.matrix() - direct.matrix())) <= 1e-12 * scale);
    }

    #[test]
    fn generators_annihilate_trace_and_keep_hermiticity(seed in any::<u64>(), d in 1usize..=6, n_jumps in 0usize..=3) {
        let mut rng = case_rng(seed);
        let model = random_model(d, n_jumps, &mut rng);
        let l = build_liouvillian(&model).unwrap();
        prop_assert!(l.trace_annihilation_defect() <= 1e-10);
        let rho = random::hermitian(model.space(), &mut rng);
        let out = l.apply(&rho).unwrap();
        prop_assert!(hermiticity_defect(out.matrix()) <= 1e-12 * (1.0 + max_abs(out.matrix())));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spectra_pair_conjugates_and_decaying_modes_are_traceless(seed in any::<u64>(), d in 1usize..=4, n_jumps in 1usize..=2) {
        let mut rng = case_rng(seed);
        let model = random_model(d, n_jumps, &mut rng);
        let s = spectrum(&build_liouvillian(&model).unwrap()).unwrap();
        let vals = s.eigenvalues();
        for z in vals {
            prop_assert!(vals.iter().any(|w| (w - z.conj()).norm() <= 1e-8));
        }
        for (z, r) in vals.iter().zip(s.right()) {
            if z.re.abs() > 1e-8 {
                prop_assert!(r.trace().norm() <= 1e-8);
            }
        }
        // Biorthogonality ⟨L_j, R_k⟩ = δ_jk.
        for (j, lj) in s.left().iter().enumerate() {
            for (k, rk) in s.right().iter().enumerate() {
                let expected = if j == k { 1.0 } else { 0.0 };
                prop_assert!((lj.hs_inner(rk) - c(expected, 0.0)).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn unread_measurement_is_a_quantum_map(seed in any::<u64>(), d in 2usize..=4, outcomes in 1usize..=4) {
        let mut rng = case_rng(seed);
        let space = HilbertSpace::single(d);
        let set = random::povm(&space, outcomes, &mut rng).unwrap();
        let v = set.unread_superop().unwrap().map_validity().unwrap();
        prop_assert!(v.is_quantum_map(1e-10, -1e-8));
        let rho = random::density_matrix(&space, &mut rng);
        let p: f64 = set.probabilities(&rho).unwrap().iter().sum();
        prop_assert!((p - 1.0).abs() <= 1e-10);
        let out = apply_unread(&rho, &set).unwrap();
        prop_assert!(out.defects().unwrap().within(&Default::default()));
    }

    #[test]
    fn cycle_map_preserves_trace(seed in any::<u64>(), gamma_tau in 0.001f64..0.3) {
        let mut rng = case_rng(seed);
        let e = cycle_map(1.0, gamma_tau).unwrap();
        let rho = random::density_matrix(&HilbertSpace::qubits(3), &mut rng);
        let out = e.map.apply(rho.as_operator()).unwrap();
        prop_assert!((out.trace() - c(1.0, 0.0)).norm() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn master_evolution_stays_physical(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = case_rng(seed);
        let model = random_model(d, 2, &mut rng);
        let rho0 = random::density_matrix(model.space(), &mut rng);
        let grid = TimeGrid::new(0.0, 2.0, 0.002, 50).unwrap();
        let states = evolve_master(&model, &rho0, &grid).unwrap();
        for rho in &states.states {
            prop_assert!((rho.as_operator().trace() - c(1.0, 0.0)).norm() <= 1e-8);
            let min = liouville::linalg::eigvalsh(rho.matrix()).unwrap()[0];
            prop_assert!(min >= -1e-6);
        }
    }

    #[test]
    fn conditional_kets_stay_normalised(seed in any::<u64>(), homodyne in any::<bool>()) {
        let mut rng = case_rng(seed);
        let model = random_model(3, 1, &mut rng);
        let psi = random::ket(model.space(), &mut rng);
        let scheme = if homodyne { Scheme::HomodyneIdeal } else { Scheme::Counting };
        let mut cfg = TrajectoryConfig::new(0.002, 1.0, seed).with_scheme(scheme);
        cfg.store_states = true;
        for t in run_ensemble(&model, &InitialState::Pure(psi), &cfg, 4).unwrap() {
            for k in t.states.unwrap() {
                prop_assert!((k.norm() - 1.0).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn mixed_initial_states_are_drawn_from_the_spectrum() {
    let space = HilbertSpace::single(2);
    let rho = DensityMatrix::new(Operator::new(space.clone(), ndarray::array![[c(0.25, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.75, 0.0)]]).unwrap()).unwrap();
    let model = LindbladModel::new(Operator::zeros(&space), vec![]).unwrap();
    let cfg = TrajectoryConfig::new(0.1, 0.1, 8).with_observables(vec![liouville::algebra::pauli(liouville::algebra::Pauli::Z)]);
    let runs = run_ensemble(&model, &InitialState::Mixed(rho), &cfg, 4000).unwrap();
    let up = runs.iter().filter(|t| t.records[0][0].re > 0.0).count() as f64 / 4000.0;
    // Binomial standard error at p = 1/4 and N = 4000 is about 0.007.
    assert!((up - 0.25).abs() < 0.035, "{up}");
}
