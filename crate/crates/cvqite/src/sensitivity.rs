//! Sensitivity of the third probability derivative to squeezer
//! imprecision.
//!
//! High-order moments ride on high-order derivatives of the zero-photon
//! probability P0(eta^2), and those are sensitive to the physical gate
//! parameters. This scan rebuilds every CX probe from its
//! squeezer/beamsplitter decomposition, perturbs the squeezing parameter
//! by +/- delta_r, and reports how much d3 = d^3 P0 / d(eta^2)^3 moves.
//! The u = eta^2 = 0 sample needs no probe circuit (the detector sees an
//! untouched vacuum ancilla), so it stays exactly 1 in every variant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::TruncatedState;
use crate::gates::{self, CxDecomposition};
use crate::stencil;

/// One row of the scan: reference and perturbed third derivatives for a
/// given grid spacing and squeezer imprecision.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SensitivityPoint {
    pub spacing: f64,
    pub delta_r: f64,
    pub d3_reference: f64,
    pub d3_plus: f64,
    pub d3_minus: f64,
}

impl SensitivityPoint {
    /// Worst-case deviation from the reference.
    pub fn abs_uncertainty(&self) -> f64 {
        (self.d3_plus - self.d3_reference)
            .abs()
            .max((self.d3_minus - self.d3_reference).abs())
    }

    /// Deviation relative to the reference, NaN when the reference
    /// derivative vanishes.
    pub fn rel_uncertainty(&self) -> f64 {
        if self.d3_reference == 0.0 {
            f64::NAN
        } else {
            self.abs_uncertainty() / self.d3_reference.abs()
        }
    }
}

/// Zero-photon probability of one decomposed probe: input beamsplitter,
/// perturbed squeezer pair, output beamsplitter, applied gate by gate to
/// the state rather than composed into one matrix.
fn probe_probability(
    with_anc: &TruncatedState,
    b_in: &crate::fock::ModeOperator,
    b_out: &crate::fock::ModeOperator,
    dec: &CxDecomposition,
    anc: usize,
    mode: usize,
) -> Result<f64> {
    let nc = with_anc.spec().n_cutoff();
    let s_anc = gates::squeezer_matrix(-dec.r, 0.0, nc)?;
    let s_sys = gates::squeezer_matrix(dec.r, 0.0, nc)?;
    let evolved = b_out.apply(
        &b_in
            .apply(with_anc)?
            .apply_single_mode(anc, &s_anc)?
            .apply_single_mode(mode, &s_sys)?,
    )?;
    let (_, prob) = gates::project_photon_number(&evolved, anc, 0)?;
    Ok(prob)
}

/// Full scan over spacings and imprecisions for the probe on `mode` of
/// the given (normalized) state. The beamsplitter angles depend only on
/// the grid point, so those gates are built once per point and reused for
/// every imprecision variant.
pub fn third_derivative_sensitivity(
    state: &TruncatedState,
    mode: usize,
    spacings: &[f64],
    delta_rs: &[f64],
    n_points: usize,
) -> Result<Vec<SensitivityPoint>> {
    if n_points < 5 {
        return Err(Error::InvalidConfig(format!(
            "third derivative needs at least 5 grid points, got {n_points}"
        )));
    }
    let state = state.normalize()?;
    let with_anc = state.with_vacuum_ancilla()?;
    let anc = state.spec().n_modes();

    let mut points = Vec::with_capacity(spacings.len() * delta_rs.len());
    for &spacing in spacings {
        // profiles[v][i]: variant v = [reference, +dr_1, -dr_1, +dr_2, ...]
        let variants: Vec<f64> = std::iter::once(0.0)
            .chain(delta_rs.iter().filter(|&&d| d != 0.0).flat_map(|&d| [d, -d]))
            .collect();
        let mut profiles = vec![vec![1.0]; variants.len()];
        for i in 1..n_points {
            let u = i as f64 * spacing;
            let base = gates::cx_decompose(u.sqrt());
            let b_in = gates::beamsplitter(
                gates::BeamsplitterParams::new(base.theta),
                (anc, mode),
                with_anc.spec(),
            )?;
            let b_out = gates::beamsplitter(
                gates::BeamsplitterParams::new(std::f64::consts::FRAC_PI_2 + base.theta),
                (anc, mode),
                with_anc.spec(),
            )?;
            for (v, &dr) in variants.iter().enumerate() {
                let dec = CxDecomposition {
                    theta: base.theta,
                    r: base.r + dr,
                };
                profiles[v].push(probe_probability(&with_anc, &b_in, &b_out, &dec, anc, mode)?);
            }
        }
        let d3_of = |v: usize| stencil::derivative_at_zero(&profiles[v], spacing, 3);
        let d3_reference = d3_of(0)?;
        let mut cursor = 1;
        for &delta_r in delta_rs {
            let (d3_plus, d3_minus) = if delta_r == 0.0 {
                (d3_reference, d3_reference)
            } else {
                let pair = (d3_of(cursor)?, d3_of(cursor + 1)?);
                cursor += 2;
                pair
            };
            points.push(SensitivityPoint {
                spacing,
                delta_r,
                d3_reference,
                d3_plus,
                d3_minus,
            });
        }
    }
    Ok(points)
}
