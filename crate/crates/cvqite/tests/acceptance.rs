//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers once its assertions hold.
//!
//! Run with `cargo test -p cvqite --test acceptance -- --nocapture`.

use cvqite::fock::{matrix_exponential, TruncatedState, TruncationSpec};
use cvqite::gates;
use cvqite::lattice::{self, LatticeConfig};
use cvqite::oracle;
use cvqite::qite::{self, Estimator, InitialState, QiteConfig};
use cvqite::qlanczos::{self, BuildMode, KrylovSelection, T12Formula};
use cvqite::sensitivity;
use num_complex::Complex64;

fn fig3_lattice() -> LatticeConfig {
    LatticeConfig::new(1, 1.0, 0.0, 4.8).unwrap()
}

fn fig4_lattice() -> LatticeConfig {
    LatticeConfig::new(2, 0.1, 0.0, 1.0).unwrap()
}

fn fig5_lattice() -> LatticeConfig {
    LatticeConfig::new(2, -0.1, 0.2, 1.0).unwrap()
}

fn run(
    lattice: &LatticeConfig,
    n_cutoff: usize,
    delta_tau: f64,
    initial: InitialState,
    store: bool,
) -> qite::QiteTrace {
    let spec = TruncationSpec::new(n_cutoff, lattice.l()).unwrap();
    qite::run_qite(
        lattice,
        &spec,
        &QiteConfig {
            delta_tau,
            n_steps: 200,
            store_states: store,
            ..QiteConfig::default()
        },
        initial,
    )
    .expect("run completes")
}

#[test]
fn criterion_1_fig3_ground_state() {
    let lattice = fig3_lattice();
    let trace = run(&lattice, 10, 0.1, InitialState::Vacuum, false);
    assert!(trace.converged, "no convergence within 200 steps");
    assert!(trace.last_step() <= 200);

    let spec = TruncationSpec::new(10, 1).unwrap();
    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    let (e_var, _) = oracle::gaussian_variational_optimum(&h, None).unwrap();
    let e_exact = oracle::exact_spectrum(&h, 1).unwrap().eigenvalues[0];

    let rel_var = ((trace.final_energy() - e_var) / e_var).abs();
    assert!(rel_var < 1e-4, "vs variational optimum: {rel_var:.3e}");

    let rel_exact = ((trace.final_energy() - e_exact) / e_exact).abs();
    assert!(rel_exact < 0.025, "vs exact ground energy: {rel_exact:.4}");

    println!(
        "PASS criterion 1: fig3 class converged in {} steps, E = {:.6}, \
         vs variational {:.1e} rel, vs exact {:.2}% (< 2.5%)",
        trace.last_step(),
        trace.final_energy(),
        rel_var,
        100.0 * rel_exact
    );
}

#[test]
fn criterion_2_fig4_three_levels() {
    let lattice = fig4_lattice();
    let spec = TruncationSpec::new(10, 2).unwrap();
    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    // Rank levels at a truncation-converged cutoff: at cutoff 10 the
    // under-resolved three-quantum ladder state dips below the mode-1
    // single-particle level and would steal rank 3.
    let deep_spec = TruncationSpec::new(14, 2).unwrap();
    let deep_h = lattice::build_full_h(&lattice, &deep_spec).unwrap();
    let spectrum = oracle::exact_spectrum(&deep_h, 6).unwrap();

    let cases = [
        (InitialState::Vacuum, None, 0usize),
        (InitialState::SingleParticle { k: 0 }, Some(0), 1),
        (InitialState::SingleParticle { k: 1 }, Some(1), 3),
    ];
    let mut summary = Vec::new();
    for (initial, parity_mode, expected_rank) in cases {
        // the soft mode relaxes slowly, so match the variational optimum
        // with a deeper energy stop than the fig3 run needs
        let trace = qite::run_qite(
            &lattice,
            &spec,
            &QiteConfig {
                convergence_tol: 1e-9,
                n_steps: 600,
                ..QiteConfig::default()
            },
            initial,
        )
        .expect("run completes");
        assert!(trace.converged, "{initial:?} did not converge");
        let final_energy = trace.final_energy();

        // oracle-rank matching
        let matched = spectrum
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - final_energy)
                    .abs()
                    .total_cmp(&(b.1 - final_energy).abs())
            })
            .unwrap()
            .0;
        assert_eq!(
            matched, expected_rank,
            "{initial:?} matched level {matched}, expected {expected_rank}"
        );

        let e_exact = spectrum.eigenvalues[expected_rank];
        let rel_exact = ((final_energy - e_exact) / e_exact).abs();
        assert!(rel_exact < 0.05, "{initial:?} vs exact: {rel_exact:.4}");

        let (e_var, _) = oracle::gaussian_variational_optimum(&h, parity_mode).unwrap();
        let rel_var = ((final_energy - e_var) / e_var).abs();
        assert!(rel_var < 1e-4, "{initial:?} vs variational: {rel_var:.3e}");
        summary.push(format!(
            "level {expected_rank}: E = {final_energy:.6} ({:.2}% off exact)",
            100.0 * rel_exact
        ));
    }
    println!(
        "PASS criterion 2: fig4 class identified ground/first/third excited; {}",
        summary.join("; ")
    );
}

#[test]
fn criterion_3_fig5_mass_gap() {
    let lattice = fig5_lattice();
    let n_cutoff = 12;
    let gap_at = |delta_tau: f64| {
        let ground = run(&lattice, n_cutoff, delta_tau, InitialState::Vacuum, false);
        let excited = run(
            &lattice,
            n_cutoff,
            delta_tau,
            InitialState::SingleParticle { k: 0 },
            false,
        );
        let gap = qite::mass_gap(&ground, &excited).unwrap();
        assert!(!gap.provisional, "gap trace did not converge");
        gap.gap
    };
    let gap = gap_at(0.1);

    let spec = TruncationSpec::new(n_cutoff, 2).unwrap();
    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    let oracle_gap = oracle::exact_spectrum(&h, 2).unwrap().gap;
    let rel = ((gap - oracle_gap) / oracle_gap).abs();
    assert!(rel < 0.02, "gap vs oracle: {rel:.4}");

    let gap_fine = gap_at(0.05);
    assert!(
        (gap - gap_fine).abs() < 1e-3,
        "Trotter refinement moved the gap by {:.2e}",
        (gap - gap_fine).abs()
    );
    println!(
        "PASS criterion 3: fig5 mass gap {gap:.6} vs exact {oracle_gap:.6} \
         ({:.2}% < 2%), Trotter shift {:.1e}",
        100.0 * rel,
        (gap - gap_fine).abs()
    );
}

#[test]
fn criterion_4_gate_algebra() {
    // decomposition equivalence on the photon <= 8 subspace at cutoff 30
    let n_cutoff = 30;
    let spec = TruncationSpec::new(n_cutoff, 2).unwrap();
    let mut worst: f64 = 0.0;
    for gamma in [0.1, 0.5, 1.0] {
        let direct = gates::cx_gate(gamma, 0, 1, &spec).unwrap();
        let rebuilt =
            gates::cx_from_decomposition(&gates::cx_decompose(gamma), 0, 1, &spec).unwrap();
        let mut defect: f64 = 0.0;
        for i in 0..spec.dim() {
            if spec.total_photons(i) > 8 {
                continue;
            }
            for j in 0..spec.dim() {
                if spec.total_photons(j) > 8 {
                    continue;
                }
                defect = defect
                    .max((direct.matrix()[(i, j)] - rebuilt.matrix()[(i, j)]).norm());
            }
        }
        assert!(defect < 1e-6, "Gamma = {gamma}: defect {defect:.3e}");
        worst = worst.max(defect);
    }

    // zero-photon projection identity, elementwise
    let sys = TruncationSpec::single_mode(20).unwrap();
    let (q, _) = cvqite::fock::quadratures(&sys).unwrap();
    let q2 = q.compose(&q).unwrap();
    let squeezed = gates::squeezer(gates::SqueezeParams::new(0.25), 0, &sys)
        .unwrap()
        .apply(&TruncatedState::vacuum(sys))
        .unwrap();
    let mut proj_defect: f64 = 0.0;
    for eta in [0.3, 0.8] {
        let with_anc = squeezed.with_vacuum_ancilla().unwrap();
        let u = gates::cx_gate(eta, 1, 0, with_anc.spec()).unwrap();
        let (projected, _) = gates::project_photon_number(&u.apply(&with_anc).unwrap(), 1, 0).unwrap();
        let damp = matrix_exponential(&q2, Complex64::from(-eta * eta / 4.0)).unwrap();
        let expect = damp.apply(&squeezed).unwrap();
        for (a, b) in projected.amplitudes().iter().zip(expect.amplitudes().iter()) {
            proj_defect = proj_defect.max((a - b).norm());
        }
    }
    assert!(proj_defect < 1e-8, "projection identity defect {proj_defect:.3e}");
    println!(
        "PASS criterion 4: CX decomposition max defect {worst:.2e} (< 1e-6) for \
         Gamma in {{0.1, 0.5, 1.0}}; projection identity defect {proj_defect:.2e} (< 1e-8)"
    );
}

#[test]
fn criterion_5_moment_extraction() {
    let spec = TruncationSpec::single_mode(14).unwrap();
    let vac = TruncatedState::vacuum(spec);
    let targets = [0.5, 0.75, 1.875];

    let coarse = qite::moment_from_projection(&vac, 0, 3, 0.1).unwrap();
    let fine = qite::moment_from_projection(&vac, 0, 3, 0.01).unwrap();
    let mut worst_coarse: f64 = 0.0;
    let mut worst_fine: f64 = 0.0;
    for n in 0..3 {
        worst_coarse = worst_coarse.max((coarse[n] - targets[n]).abs());
        worst_fine = worst_fine.max((fine[n] - targets[n]).abs());
    }
    assert!(worst_coarse < 1e-3, "spacing 0.1: {worst_coarse:.2e}");
    assert!(worst_fine < 1e-5, "spacing 0.01: {worst_fine:.2e}");

    // estimator agreement along the criterion-1 trajectory
    let lattice = fig3_lattice();
    let trace = run(&lattice, 10, 0.1, InitialState::Vacuum, true);
    let spec = TruncationSpec::new(10, 1).unwrap();
    let ham = qite::HamiltonianBundle::build(&lattice, &spec).unwrap();
    let mut worst_gamma: f64 = 0.0;
    for snapshot in trace.snapshots.as_ref().unwrap() {
        let exact = qite::estimate_gamma(snapshot, 0, &ham, Estimator::Exact, 0.1).unwrap();
        let measured =
            qite::estimate_gamma(snapshot, 0, &ham, Estimator::Measurement, 0.1).unwrap();
        worst_gamma = worst_gamma.max((exact - measured).abs());
    }
    assert!(worst_gamma < 1e-3, "gamma backends disagree by {worst_gamma:.2e}");
    println!(
        "PASS criterion 5: vacuum moments off by {worst_coarse:.1e} @0.1 (< 1e-3) \
         and {worst_fine:.1e} @0.01 (< 1e-5); gamma backends within {worst_gamma:.1e} (< 1e-3)"
    );
}

#[test]
fn criterion_6_orthogonality_and_parity() {
    let lattice = fig4_lattice();
    let spec = TruncationSpec::new(10, 2).unwrap();
    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    let vac = lattice::vacuum_state(&spec);
    let omega0 = lattice::single_particle_state(0, &spec).unwrap();
    let omega1 = lattice::single_particle_state(1, &spec).unwrap();

    let mut worst: f64 = 0.0;
    for (a, b) in [(&vac, &omega0), (&vac, &omega1), (&omega0, &omega1)] {
        let amp = a.inner(&h.apply(b).unwrap()).unwrap().norm();
        worst = worst.max(amp);
    }
    assert!(worst < 1e-10, "transition amplitude {worst:.2e}");

    let mut leakage: f64 = 0.0;
    for initial in [
        InitialState::Vacuum,
        InitialState::SingleParticle { k: 0 },
        InitialState::SingleParticle { k: 1 },
    ] {
        let trace = run(&lattice, 10, 0.1, initial, false);
        leakage = leakage.max(trace.parity_leakage_max);
    }
    assert!(leakage < 1e-10, "parity leakage {leakage:.2e}");
    println!(
        "PASS criterion 6: transition amplitudes <= {worst:.1e} (< 1e-10), \
         parity leakage <= {leakage:.1e} (< 1e-10)"
    );
}

#[test]
fn criterion_7_qlanczos() {
    // generalized eigenvalue on the criterion-1 trace
    let lattice = fig3_lattice();
    let trace = run(&lattice, 10, 0.1, InitialState::Vacuum, true);
    let selection = KrylovSelection::default_for(trace.last_step()).unwrap();
    let k = qlanczos::build_krylov(&trace, &selection, BuildMode::FromTrace, T12Formula::Squared)
        .unwrap();
    let pairs = qlanczos::solve_generalized(&k.h_mat, &k.t_mat).unwrap();
    let lowest = pairs[0].0;
    assert!(
        lowest <= trace.final_energy() + 1e-8,
        "lowest Krylov eigenvalue {lowest:.8} above final energy {:.8}",
        trace.final_energy()
    );
    let spec = TruncationSpec::new(10, 1).unwrap();
    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    let spectrum = oracle::exact_spectrum(&h, spec.dim()).unwrap();
    let (lo, hi) = (
        spectrum.eigenvalues[0],
        *spectrum.eigenvalues.last().unwrap(),
    );
    for (e, _) in &pairs {
        assert!(*e >= lo - 1e-8 && *e <= hi + 1e-8, "eigenvalue {e} escapes the spectrum");
    }

    // overlap formula arbitration at delta_tau = 0.05
    let trace_fine = run(&lattice, 12, 0.05, InitialState::Vacuum, true);
    let sel = KrylovSelection::new(vec![2, 6]).unwrap();
    let from_trace =
        qlanczos::build_krylov(&trace_fine, &sel, BuildMode::FromTrace, T12Formula::Squared)
            .unwrap();
    let from_states =
        qlanczos::build_krylov(&trace_fine, &sel, BuildMode::FromStates, T12Formula::Squared)
            .unwrap();
    let t12_gap = (from_trace.t_mat[(0, 1)] - from_states.t_mat[(0, 1)]).abs();
    assert!(t12_gap < 1e-3, "T12 formula vs direct inner product: {t12_gap:.2e}");
    println!(
        "PASS criterion 7: lowest Krylov eigenvalue {lowest:.6} <= final energy {:.6}, \
         all in spectrum range; squared-c T12 within {t12_gap:.1e} of direct (< 1e-3)",
        trace.final_energy()
    );
}

#[test]
fn criterion_8_sensitivity_study() {
    let spec = TruncationSpec::single_mode(20).unwrap();
    let vac = TruncatedState::vacuum(spec);
    let spacings = [0.1, 0.05, 0.01];
    let delta_rs = [0.0, 1e-4, 1e-3, 5e-3, 1e-2, 5e-2];
    let points =
        sensitivity::third_derivative_sensitivity(&vac, 0, &spacings, &delta_rs, 9).unwrap();

    // reference at the finest spacing pins the closed-form value
    let fine_ref = points
        .iter()
        .find(|p| p.spacing == 0.01 && p.delta_r == 0.0)
        .unwrap()
        .d3_reference;
    assert!(
        (fine_ref + 15.0 / 64.0).abs() < 1e-6,
        "reference d3 {fine_ref:.9} vs -15/64"
    );

    for &spacing in &spacings {
        let rel: Vec<f64> = points
            .iter()
            .filter(|p| p.spacing == spacing)
            .map(|p| p.rel_uncertainty())
            .collect();
        assert_eq!(rel.len(), delta_rs.len());
        assert_eq!(rel[0], 0.0, "nonzero uncertainty at delta_r = 0");
        for pair in rel.windows(2) {
            assert!(
                pair[1] >= pair[0],
                "spacing {spacing}: uncertainty not monotone: {rel:?}"
            );
        }
    }
    println!(
        "PASS criterion 8: reference d3 = {fine_ref:.9} within 1e-6 of -15/64; \
         relative uncertainty zero at delta_r = 0 and monotone over the grid"
    );
}
