//! Dense exact diagonalization of the truncated lattice Hamiltonian with
//! per-mode parity labels, for the free and interacting parameter sets.
//!
//! Run:
//!   cargo run --release -p cvqite --example exact_spectrum

use cvqite::fock::TruncationSpec;
use cvqite::lattice::{self, LatticeConfig};
use cvqite::oracle::{exact_spectrum, Parity};

fn label(parities: &[Parity]) -> String {
    parities
        .iter()
        .map(|p| match p {
            Parity::Even => 'e',
            Parity::Odd => 'o',
        })
        .collect()
}

fn main() {
    eprintln!("=== Exact spectra on the truncated space ===\n");

    let cases = [
        ("free L=2 m^2=0.1", LatticeConfig::new(2, 0.1, 0.0, 0.0).unwrap(), 12),
        ("quartic L=1 lambda=4.8", LatticeConfig::new(1, 1.0, 0.0, 4.8).unwrap(), 20),
        ("fig4 L=2 lambda=1", LatticeConfig::new(2, 0.1, 0.0, 1.0).unwrap(), 14),
        ("fig5 L=2 counter-term", LatticeConfig::new(2, -0.1, 0.2, 1.0).unwrap(), 14),
    ];
    for (name, lattice, n_cutoff) in cases {
        let spec = TruncationSpec::new(n_cutoff, lattice.l()).unwrap();
        let h = lattice::build_full_h(&lattice, &spec).unwrap();
        let report = exact_spectrum(&h, 6).unwrap();

        println!("# {name} (cutoff {n_cutoff})");
        println!("level\tenergy\tparity");
        for (i, (e, p)) in report
            .eigenvalues
            .iter()
            .zip(&report.parities)
            .enumerate()
        {
            println!("{i}\t{e:+.9}\t{}", label(p));
        }
        println!("gap\t{:+.9}", report.gap);
        println!();

        let omega = lattice::dispersion(&lattice);
        eprintln!("{name}: dispersion {omega:?}");
    }
}
