use keldysh_core::bath::BathSpec;
use keldysh_core::model::{critical_coupling, BosonModel};
use keldysh_core::observables::steady_density;
use keldysh_core::oracle::lindblad::{cross_block_coupling, superoperator};
use keldysh_core::oracle::lyapunov::{drift_and_noise, lyapunov_solution};
use keldysh_core::oracle::{lindblad_steady_state, DiscretizedBath, FockTruncation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn lindblad_vacuum_for_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let m = BosonModel::new(rng.gen_range(0.1..3.0), rng.gen_range(-1.0..1.0), rng.gen_range(1..500), rng.gen_range(0.05..2.0)).unwrap();
        let s = lindblad_steady_state(&m, &FockTruncation::default()).unwrap();
        assert!(s.vacuum_fidelity > 1.0 - 1e-8);
        assert!(s.tail_population < 1e-8);
        assert!((s.population_decay_rate - 2.0 * m.k).abs() < 1e-6, "{}", s.population_decay_rate);
        assert!((s.slowest_decay_rate - m.k).abs() < 1e-6);
    }
}

#[test]
fn superoperator_is_block_diagonal_in_coherence_order() {
    let m = BosonModel::new(0.9, 0.7, 5, 0.4).unwrap();
    assert_eq!(cross_block_coupling(&superoperator(&m, 7), 7), 0.0);
}

#[test]
fn lyapunov_decoupled_limit_is_exact_vacuum() {
    let m = BosonModel::new(1.0, 0.0, 1, 0.3).unwrap();
    let bath = DiscretizedBath::standard(&BathSpec::ohmic(1.0, 0.0).unwrap(), 100).unwrap();
    let sol = lyapunov_solution(&m, &bath, 1e-6).unwrap();
    assert!(sol.occupation.abs() < 1e-12);
    assert!(sol.residual < 1e-12);
}

#[test]
fn lyapunov_drift_softens_toward_transition() {
    // the smallest drift rate of the discretized model shrinks as γ → γ₀
    let m = BosonModel::new(1.0, 0.0, 1, 0.3).unwrap();
    let g0 = critical_coupling(&m).unwrap();
    let mut prev = f64::INFINITY;
    for ratio in [0.2, 0.5, 0.8, 0.95] {
        let bath = DiscretizedBath::standard(&BathSpec::ohmic(1.0, ratio * g0).unwrap(), 120).unwrap();
        let (a, _) = drift_and_noise(&m, &bath, 1e-6);
        let eig = a.eigenvalues().unwrap();
        // bath-dominated modes have Re ≈ −ε; take the softest damped one
        let softest = eig
            .iter()
            .filter(|z| z.re < -1e-5)
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        assert!(softest <= prev, "{ratio}: {softest} > {prev}");
        prev = softest;
    }
}

#[test]
fn lyapunov_and_quadrature_are_same_order() {
    let m = BosonModel::new(1.0, 0.0, 1, 0.3).unwrap();
    let b = BathSpec::ohmic(1.0, 0.5 * critical_coupling(&m).unwrap()).unwrap();
    let quad = steady_density(&m, &b).unwrap();
    let bath = DiscretizedBath::standard(&b, 200).unwrap();
    let sol = lyapunov_solution(&m, &bath, 1e-6).unwrap();
    assert!(sol.max_drift_real < 0.0);
    assert!(sol.residual < 1e-9);
    assert!(sol.occupation > 0.5 * quad && sol.occupation < 2.0 * quad, "{} vs {quad}", sol.occupation);
}
