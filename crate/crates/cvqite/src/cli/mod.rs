//! Configuration-driven experiment runner behind the `cvqite` binary:
//! imaginary-time runs, mass-gap traces, exact spectra, Krylov reports,
//! and the squeezer-imprecision scan, each emitting plot-ready CSV/JSON.
//!
//! Outputs are deterministic: identical configs write identical bytes.
//! Every CSV row carries a schema-version token in its last column so
//! downstream plotting scripts fail loudly on format changes.

pub mod config;

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice;
use crate::oracle::{self, Parity};
use crate::qite::{self, InitialState, QiteTrace};
use crate::qlanczos::{self, BuildMode, KrylovSelection};
use crate::sensitivity;

pub use config::RunConfig;

/// Outcome of a command that completed without an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmdOutcome {
    Success,
    /// The run finished but missed its convergence criterion.
    ConvergenceFailure,
}

/// Process exit code for an error, matching the documented contract:
/// 2 config, 3 numerical abort, 1 everything else.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ConfigParse(_)
        | Error::InvalidConfig(_)
        | Error::InvalidLattice(_)
        | Error::InvalidSpec(_)
        | Error::InvalidSelection(_) => 2,
        Error::TruncationGuard { .. } => 3,
        _ => 1,
    }
}

/// Exit code for a clean command outcome: 0 success, 4 convergence failure.
pub fn exit_code_for_outcome(outcome: CmdOutcome) -> i32 {
    match outcome {
        CmdOutcome::Success => 0,
        CmdOutcome::ConvergenceFailure => 4,
    }
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.17e}")
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

const TRACE_SCHEMA: &str = "trace-v1";
const MASSGAP_SCHEMA: &str = "massgap-v1";
const SENSITIVITY_SCHEMA: &str = "sensitivity-v1";

fn trace_csv(trace: &QiteTrace) -> String {
    let l = trace.spec.n_modes();
    let mut out = String::new();
    out.push_str("step,tau,energy");
    for k in 0..l {
        let _ = write!(out, ",gamma_{k}");
    }
    for k in 0..l {
        let _ = write!(out, ",sigma_sq_{k}");
    }
    out.push_str(",c_ratio,c,schema\n");
    for step in &trace.steps {
        let _ = write!(
            out,
            "{},{},{}",
            step.step,
            fmt_f(step.tau),
            fmt_f(step.energy)
        );
        for g in &step.gamma {
            let _ = write!(out, ",{}", fmt_f(*g));
        }
        for s in &step.sigma_sq {
            let _ = write!(out, ",{}", fmt_f(*s));
        }
        let (ratio, c) = match trace.qite.c_recursion {
            qite::CRecursion::Exact => (step.c_ratio, step.c),
            qite::CRecursion::FirstOrder => (step.c_ratio_first_order, step.c_first_order),
        };
        let _ = writeln!(out, ",{},{},{TRACE_SCHEMA}", fmt_f(ratio), fmt_f(c));
    }
    out
}

#[derive(Serialize)]
struct OracleComparison {
    matched_level: usize,
    matched_level_label: String,
    exact_energy: f64,
    /// Cutoff of the comparison spectrum, deepened beyond the run so
    /// near-degenerate rank assignments do not ride on truncation error.
    oracle_n_cutoff: usize,
    abs_error_vs_exact: f64,
    rel_error_vs_exact: f64,
    variational_energy: f64,
    variational_widths: Vec<f64>,
    abs_error_vs_variational: f64,
    rel_error_vs_variational: f64,
}

/// Margin added to the run cutoff for oracle spectra.
const ORACLE_CUTOFF_MARGIN: usize = 4;

#[derive(Serialize)]
struct QiteSummary {
    schema: &'static str,
    tag: Option<String>,
    initial_state: InitialState,
    estimator: qite::Estimator,
    c_recursion: qite::CRecursion,
    delta_tau: f64,
    eta_spacing: f64,
    l: usize,
    n_cutoff: usize,
    converged: bool,
    steps_taken: usize,
    final_energy: f64,
    parity_leakage_max: f64,
    truncation_mass_max: f64,
    assumed: Vec<String>,
    oracle: OracleComparison,
}

fn level_label(index: usize) -> String {
    if index == 0 {
        "ground".to_string()
    } else {
        format!("excited_{index}")
    }
}

fn oracle_comparison(cfg: &RunConfig, trace: &QiteTrace) -> Result<OracleComparison> {
    let lattice_cfg = cfg.lattice_config()?;
    let spec = cfg.truncation_spec()?;
    let h = lattice::build_full_h(&lattice_cfg, &spec)?;
    let deep_spec = crate::fock::TruncationSpec::new(
        spec.n_cutoff() + ORACLE_CUTOFF_MARGIN,
        spec.n_modes(),
    )?;
    let deep_h = lattice::build_full_h(&lattice_cfg, &deep_spec)?;
    let n_levels = 8.min(spec.dim());
    let spectrum = oracle::exact_spectrum(&deep_h, n_levels)?;
    let final_energy = trace.final_energy();
    let matched_level = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - final_energy)
                .abs()
                .total_cmp(&(b.1 - final_energy).abs())
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let exact_energy = spectrum.eigenvalues[matched_level];

    let parity_mode = match trace.initial {
        InitialState::Vacuum => None,
        InitialState::SingleParticle { k } => Some(k),
    };
    let (variational_energy, variational_widths) =
        oracle::gaussian_variational_optimum(&h, parity_mode)?;

    let rel = |err: f64, reference: f64| {
        if reference == 0.0 {
            err.abs()
        } else {
            (err / reference).abs()
        }
    };
    Ok(OracleComparison {
        matched_level,
        matched_level_label: level_label(matched_level),
        exact_energy,
        oracle_n_cutoff: deep_spec.n_cutoff(),
        abs_error_vs_exact: (final_energy - exact_energy).abs(),
        rel_error_vs_exact: rel(final_energy - exact_energy, exact_energy),
        variational_energy,
        variational_widths,
        abs_error_vs_variational: (final_energy - variational_energy).abs(),
        rel_error_vs_variational: rel(final_energy - variational_energy, variational_energy),
    })
}

/// Run the imaginary-time loop and write trace.csv + summary.json.
pub fn cmd_qite(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let trace = qite::run_qite(
        &cfg.lattice_config()?,
        &cfg.truncation_spec()?,
        &cfg.qite_config(false),
        cfg.initial(),
    )?;
    write_file(&out_dir.join("trace.csv"), &trace_csv(&trace))?;
    let summary = QiteSummary {
        schema: "summary-v1",
        tag: cfg.tag.clone(),
        initial_state: trace.initial,
        estimator: trace.qite.estimator,
        c_recursion: trace.qite.c_recursion,
        delta_tau: trace.qite.delta_tau,
        eta_spacing: trace.qite.eta_spacing,
        l: trace.spec.n_modes(),
        n_cutoff: trace.spec.n_cutoff(),
        converged: trace.converged,
        steps_taken: trace.last_step(),
        final_energy: trace.final_energy(),
        parity_leakage_max: trace.parity_leakage_max,
        truncation_mass_max: trace.truncation_mass_max,
        assumed: cfg.assumed.clone(),
        oracle: oracle_comparison(cfg, &trace)?,
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(if trace.converged {
        CmdOutcome::Success
    } else {
        CmdOutcome::ConvergenceFailure
    })
}

#[derive(Serialize)]
struct MassgapSummary {
    schema: &'static str,
    tag: Option<String>,
    excited_k: usize,
    gap: f64,
    provisional: bool,
    oracle_gap: f64,
    abs_error: f64,
    rel_error: f64,
    converged_ground: bool,
    converged_excited: bool,
    delta_tau: f64,
    assumed: Vec<String>,
}

/// Run ground and odd-sector traces, difference them per step, and write
/// massgap.csv + summary.json.
pub fn cmd_massgap(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let excited_k = cfg.massgap.as_ref().map(|m| m.excited_k).unwrap_or(0);
    let lattice_cfg = cfg.lattice_config()?;
    let spec = cfg.truncation_spec()?;
    let qcfg = cfg.qite_config(false);
    let ground = qite::run_qite(&lattice_cfg, &spec, &qcfg, InitialState::Vacuum)?;
    let excited = qite::run_qite(
        &lattice_cfg,
        &spec,
        &qcfg,
        InitialState::SingleParticle { k: excited_k },
    )?;
    let gap = qite::mass_gap(&ground, &excited)?;

    // per-step differencing; a converged shorter trace holds its final energy
    let rows = ground.steps.len().max(excited.steps.len());
    let mut csv = String::from("step,tau,e_ground,e_excited,gap,schema\n");
    for s in 0..rows {
        let eg = ground.energy(s).unwrap_or_else(|| ground.final_energy());
        let ee = excited.energy(s).unwrap_or_else(|| excited.final_energy());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{MASSGAP_SCHEMA}",
            s,
            fmt_f(s as f64 * qcfg.delta_tau),
            fmt_f(eg),
            fmt_f(ee),
            fmt_f(ee - eg)
        );
    }
    write_file(&out_dir.join("massgap.csv"), &csv)?;

    let deep_spec = crate::fock::TruncationSpec::new(
        spec.n_cutoff() + ORACLE_CUTOFF_MARGIN,
        spec.n_modes(),
    )?;
    let deep_h = lattice::build_full_h(&lattice_cfg, &deep_spec)?;
    let oracle_gap = oracle::exact_spectrum(&deep_h, 2)?.gap;
    let summary = MassgapSummary {
        schema: "massgap-summary-v1",
        tag: cfg.tag.clone(),
        excited_k,
        gap: gap.gap,
        provisional: gap.provisional,
        oracle_gap,
        abs_error: (gap.gap - oracle_gap).abs(),
        rel_error: ((gap.gap - oracle_gap) / oracle_gap).abs(),
        converged_ground: ground.converged,
        converged_excited: excited.converged,
        delta_tau: qcfg.delta_tau,
        assumed: cfg.assumed.clone(),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(if gap.provisional {
        CmdOutcome::ConvergenceFailure
    } else {
        CmdOutcome::Success
    })
}

#[derive(Serialize)]
struct SpectrumOutput {
    schema: &'static str,
    tag: Option<String>,
    l: usize,
    n_cutoff: usize,
    eigenvalues: Vec<f64>,
    parities: Vec<Vec<Parity>>,
    gap: f64,
    assumed: Vec<String>,
}

/// Exact-diagonalization report.
pub fn cmd_spectrum(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let lattice_cfg = cfg.lattice_config()?;
    let spec = cfg.truncation_spec()?;
    let n_levels = cfg.spectrum.as_ref().map(|s| s.n_levels).unwrap_or(8);
    let h = lattice::build_full_h(&lattice_cfg, &spec)?;
    let report = oracle::exact_spectrum(&h, n_levels)?;
    let out = SpectrumOutput {
        schema: "spectrum-v1",
        tag: cfg.tag.clone(),
        l: spec.n_modes(),
        n_cutoff: spec.n_cutoff(),
        eigenvalues: report.eigenvalues,
        parities: report.parities,
        gap: report.gap,
        assumed: cfg.assumed.clone(),
    };
    write_json(&out_dir.join("spectrum.json"), &out)?;
    Ok(CmdOutcome::Success)
}

#[derive(Serialize)]
struct QlanczosEntry {
    selection: Vec<usize>,
    t: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    /// Brute-force overlap matrix from stored states, for arbitration.
    t_direct: Vec<Vec<f64>>,
    nearest_oracle_levels: Vec<usize>,
    nearest_oracle_errors: Vec<f64>,
}

#[derive(Serialize)]
struct QlanczosReport {
    schema: &'static str,
    tag: Option<String>,
    t12_formula_used: qlanczos::T12Formula,
    converged: bool,
    final_qite_energy: f64,
    oracle_levels: Vec<f64>,
    entries: Vec<QlanczosEntry>,
    assumed: Vec<String>,
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Run the trace, build the Krylov matrices, solve the generalized
/// problem, and compare against exact levels.
pub fn cmd_qlanczos(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let lattice_cfg = cfg.lattice_config()?;
    let spec = cfg.truncation_spec()?;
    let trace = qite::run_qite(&lattice_cfg, &spec, &cfg.qite_config(true), cfg.initial())?;

    let section = cfg.qlanczos.clone().unwrap_or(config::QlanczosSection {
        selections: vec![],
        t12_formula: qlanczos::T12Formula::Squared,
    });
    let selections: Vec<KrylovSelection> = if section.selections.is_empty() {
        vec![KrylovSelection::default_for(trace.last_step())?]
    } else {
        section
            .selections
            .iter()
            .map(|s| KrylovSelection::new(s.clone()))
            .collect::<Result<_>>()?
    };

    let h = lattice::build_full_h(&lattice_cfg, &spec)?;
    let n_levels = 8.min(spec.dim());
    let spectrum = oracle::exact_spectrum(&h, n_levels)?;

    let mut entries = Vec::new();
    for selection in &selections {
        let from_trace =
            qlanczos::build_krylov(&trace, selection, BuildMode::FromTrace, section.t12_formula)?;
        let from_states = qlanczos::build_krylov(
            &trace,
            selection,
            BuildMode::FromStates,
            section.t12_formula,
        )?;
        let pairs = qlanczos::solve_generalized(&from_trace.h_mat, &from_trace.t_mat)?;
        let eigenvalues: Vec<f64> = pairs.iter().map(|(e, _)| *e).collect();
        let nearest: Vec<(usize, f64)> = eigenvalues
            .iter()
            .map(|&e| {
                spectrum
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| (i, (x - e).abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap_or((0, f64::NAN))
            })
            .collect();
        entries.push(QlanczosEntry {
            selection: selection.steps.clone(),
            t: matrix_rows(&from_trace.t_mat),
            h: matrix_rows(&from_trace.h_mat),
            eigenvalues,
            t_direct: matrix_rows(&from_states.t_mat),
            nearest_oracle_levels: nearest.iter().map(|x| x.0).collect(),
            nearest_oracle_errors: nearest.iter().map(|x| x.1).collect(),
        });
    }

    let report = QlanczosReport {
        schema: "qlanczos-v1",
        tag: cfg.tag.clone(),
        t12_formula_used: section.t12_formula,
        converged: trace.converged,
        final_qite_energy: trace.final_energy(),
        oracle_levels: spectrum.eigenvalues,
        entries,
        assumed: cfg.assumed.clone(),
    };
    write_json(&out_dir.join("qlanczos.json"), &report)?;
    Ok(CmdOutcome::Success)
}

/// Squeezer-imprecision scan of the third probability derivative.
pub fn cmd_sensitivity(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let spec = cfg.truncation_spec()?;
    let section = cfg.sensitivity.clone().unwrap_or_default();
    let state = match cfg.initial() {
        InitialState::Vacuum => lattice::vacuum_state(&spec),
        InitialState::SingleParticle { k } => lattice::single_particle_state(k, &spec)?,
    };
    let points = sensitivity::third_derivative_sensitivity(
        &state,
        0,
        &section.spacings,
        &section.delta_r,
        section.n_points,
    )?;
    let mut csv = String::from(
        "spacing,delta_r,d3_reference,d3_plus,d3_minus,abs_uncertainty,rel_uncertainty,schema\n",
    );
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{SENSITIVITY_SCHEMA}",
            fmt_f(p.spacing),
            fmt_f(p.delta_r),
            fmt_f(p.d3_reference),
            fmt_f(p.d3_plus),
            fmt_f(p.d3_minus),
            fmt_f(p.abs_uncertainty()),
            fmt_f(p.rel_uncertainty())
        );
    }
    write_file(&out_dir.join("sensitivity.csv"), &csv)?;
    Ok(CmdOutcome::Success)
}
