//! Mass gap of the two-site lattice with a negative bare mass squared,
//! rescued by the counter term: two imaginary-time runs differenced per
//! step.
//!
//! Run:
//!   cargo run --release -p cvqite --example mass_gap

use cvqite::fock::TruncationSpec;
use cvqite::lattice::{self, LatticeConfig};
use cvqite::oracle;
use cvqite::qite::{mass_gap, run_qite, InitialState, QiteConfig};

fn main() {
    let lattice = LatticeConfig::new(2, -0.1, 0.2, 1.0).unwrap();
    let spec = TruncationSpec::new(12, 2).unwrap();

    eprintln!("=== Mass gap: L = 2, lambda = 1, m0^2 = -0.1, dm = 0.2 ===\n");

    let config = QiteConfig::default();
    let ground = run_qite(&lattice, &spec, &config, InitialState::Vacuum).unwrap();
    let excited = run_qite(
        &lattice,
        &spec,
        &config,
        InitialState::SingleParticle { k: 0 },
    )
    .unwrap();

    println!("# gap per imaginary-time step");
    println!("step\ttau\te_ground\te_excited\tgap");
    let rows = ground.steps.len().max(excited.steps.len());
    for s in 0..rows {
        let eg = ground.energy(s).unwrap_or_else(|| ground.final_energy());
        let ee = excited.energy(s).unwrap_or_else(|| excited.final_energy());
        println!(
            "{s}\t{:.2}\t{eg:.9}\t{ee:.9}\t{:.9}",
            s as f64 * config.delta_tau,
            ee - eg
        );
    }

    let gap = mass_gap(&ground, &excited).unwrap();
    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    let exact_gap = oracle::exact_spectrum(&h, 2).unwrap().gap;
    eprintln!("\nfinal gap : {:.9} (provisional: {})", gap.gap, gap.provisional);
    eprintln!(
        "exact gap : {exact_gap:.9} ({:.3}% rel)",
        100.0 * ((gap.gap - exact_gap) / exact_gap).abs()
    );
}
