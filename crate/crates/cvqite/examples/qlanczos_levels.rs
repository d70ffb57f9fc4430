//! Krylov treatment of recorded imaginary-time iterates: the restricted
//! 2x2 eigenproblem built purely from trace data (normalization constants
//! and energies), arbitrated against brute-force inner products.
//!
//! Run:
//!   cargo run --release -p cvqite --example qlanczos_levels

use cvqite::fock::TruncationSpec;
use cvqite::lattice::{self, LatticeConfig};
use cvqite::oracle;
use cvqite::qite::{run_qite, InitialState, QiteConfig};
use cvqite::qlanczos::{
    build_krylov, solve_generalized, BuildMode, KrylovSelection, T12Formula,
};

fn main() {
    let lattice = LatticeConfig::new(1, 1.0, 0.0, 4.8).unwrap();
    let spec = TruncationSpec::single_mode(10).unwrap();

    eprintln!("=== Krylov levels from the imaginary-time trace ===\n");

    let trace = run_qite(
        &lattice,
        &spec,
        &QiteConfig {
            store_states: true,
            ..QiteConfig::default()
        },
        InitialState::Vacuum,
    )
    .unwrap();
    eprintln!(
        "trace: {} steps, final energy {:.9}",
        trace.last_step(),
        trace.final_energy()
    );

    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    let exact = oracle::exact_spectrum(&h, 4).unwrap();

    println!("# selection -> generalized eigenvalues (from the c-based matrices)");
    println!("s1\ts2\tT12\tT12_direct\tE_low\tE_high\tnearest_exact_low\tnearest_exact_high");
    let last = trace.last_step();
    for (s1, s2) in [(last / 2 - 1, last - 1), (last / 2, last), (2, last)] {
        let Ok(sel) = KrylovSelection::new(vec![s1, s2]) else {
            continue;
        };
        let from_trace = build_krylov(&trace, &sel, BuildMode::FromTrace, T12Formula::Squared).unwrap();
        let from_states = build_krylov(&trace, &sel, BuildMode::FromStates, T12Formula::Squared).unwrap();
        let pairs = solve_generalized(&from_trace.h_mat, &from_trace.t_mat).unwrap();
        let nearest = |e: f64| {
            exact
                .eigenvalues
                .iter()
                .cloned()
                .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()))
                .unwrap()
        };
        match pairs.len() {
            2 => println!(
                "{s1}\t{s2}\t{:.9}\t{:.9}\t{:.7}\t{:.7}\t{:.7}\t{:.7}",
                from_trace.t_mat[(0, 1)],
                from_states.t_mat[(0, 1)],
                pairs[0].0,
                pairs[1].0,
                nearest(pairs[0].0),
                nearest(pairs[1].0)
            ),
            _ => println!(
                "{s1}\t{s2}\t{:.9}\t{:.9}\t{:.7}\t(deflated)\t{:.7}\t-",
                from_trace.t_mat[(0, 1)],
                from_states.t_mat[(0, 1)],
                pairs[0].0,
                nearest(pairs[0].0)
            ),
        }
    }

    eprintln!("\nexact levels: {:?}", exact.eigenvalues);
    eprintln!("(the lowest Krylov eigenvalue dips below the final trace energy:");
    eprintln!(" the chord between two Gaussian iterates leaves the Gaussian family)");
}
