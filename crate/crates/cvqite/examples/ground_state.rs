//! Ground-state energy of the single-site quartic theory by imaginary-time
//! evolution, certified against exact diagonalization and the variational
//! optimum of the Gaussian family.
//!
//! Run:
//!   cargo run --release -p cvqite --example ground_state

use cvqite::fock::TruncationSpec;
use cvqite::lattice::{self, LatticeConfig};
use cvqite::oracle;
use cvqite::qite::{run_qite, InitialState, QiteConfig};

fn main() {
    let lattice = LatticeConfig::new(1, 1.0, 0.0, 4.8).unwrap();
    let spec = TruncationSpec::single_mode(10).unwrap();

    eprintln!("=== Imaginary-time ground state: L = 1, lambda = 4.8, cutoff 10 ===\n");

    let trace = run_qite(&lattice, &spec, &QiteConfig::default(), InitialState::Vacuum).unwrap();

    println!("# L=1 lambda=4.8 m0_sq=1 n_cutoff=10 delta_tau=0.1");
    println!("step\ttau\tenergy\tgamma\tsigma_sq");
    for step in &trace.steps {
        println!(
            "{}\t{:.2}\t{:.9}\t{:+.6e}\t{:.6}",
            step.step, step.tau, step.energy, step.gamma[0], step.sigma_sq[0]
        );
    }

    let h = lattice::build_full_h(&lattice, &spec).unwrap();
    let exact = oracle::exact_spectrum(&h, 1).unwrap().eigenvalues[0];
    let (variational, widths) = oracle::gaussian_variational_optimum(&h, None).unwrap();
    let final_energy = trace.final_energy();

    eprintln!("converged: {} in {} steps", trace.converged, trace.last_step());
    eprintln!("final energy        : {final_energy:.9}");
    eprintln!(
        "variational optimum : {variational:.9} at sigma^2 = {:.6} ({:.2e} rel)",
        widths[0],
        ((final_energy - variational) / variational).abs()
    );
    eprintln!(
        "exact ground energy : {exact:.9} ({:.3}% rel)",
        100.0 * ((final_energy - exact) / exact).abs()
    );
}
