//! Imaginary-time evolution within the Gaussian state family.
//!
//! Each Trotter step damps the state by exp(-dtau sum_k gamma_s(k)
//! q^2(k)/2) and renormalizes, with gamma_s(k) chosen to minimize the
//! first-order distance to the true imaginary-time flow:
//!
//!   gamma_s(k) = 2 (<q^2(k) H> - <q^2(k)><H>) / (<q^4(k)> - <q^2(k)>^2)
//!
//! Two moment backends exist. `Exact` takes operator expectations
//! directly. `Measurement` reconstructs every moment from zero-photon
//! probabilities of CX/CZ probe circuits sampled on a parameter grid and
//! differentiated with polynomial stencils, the way detector hardware
//! would; probabilities themselves are computed exactly (no shot noise),
//! using the damping identity that the probe circuits realize. The state
//! is propagated iteratively, while the squeezer and ancilla preparation
//! routes rebuild any iterate from scratch so the circuit depth stays
//! bounded; both are verification paths for the same Gaussian.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, matrix_exponential, ModeOperator, TruncatedState, TruncationSpec};
use crate::gates;
use crate::lattice::{self, HamiltonianTerms, LatticeConfig, QuadMonomial, Quadrature};
use crate::linalg::{self, CMatrix};
use crate::stencil;
use crate::tol;

/// Moment backend for the per-step parameter estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    Measurement,
}

/// Which normalization-constant recursion feeds the recorded c values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CRecursion {
    /// (c_s/c_{s-1})^{-2} = <exp(-2 dtau H)>, exact on the truncated space.
    Exact,
    /// First-order form <exp(-2 dtau H)> ~ 1 - 2 dtau <H>.
    FirstOrder,
}

/// Initial state of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialState {
    Vacuum,
    SingleParticle { k: usize },
}

/// Knobs of the imaginary-time loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QiteConfig {
    pub delta_tau: f64,
    pub n_steps: usize,
    pub estimator: Estimator,
    /// Grid spacing in eta^2-space for measurement-based derivatives.
    pub eta_spacing: f64,
    /// Modes whose gamma is estimated; `None` means all of them.
    pub active_modes: Option<Vec<usize>>,
    pub convergence_tol: f64,
    pub store_states: bool,
    pub c_recursion: CRecursion,
}

impl Default for QiteConfig {
    fn default() -> Self {
        Self {
            delta_tau: 0.1,
            n_steps: 200,
            estimator: Estimator::Exact,
            eta_spacing: 0.1,
            active_modes: None,
            convergence_tol: tol::CONVERGENCE,
            store_states: false,
            c_recursion: CRecursion::Exact,
        }
    }
}

/// The Hamiltonian in both forms the estimators need: the dense operator
/// and, when expressible, its quadrature-monomial expansion.
pub struct HamiltonianBundle {
    pub operator: ModeOperator,
    pub terms: Option<HamiltonianTerms>,
}

impl HamiltonianBundle {
    pub fn build(config: &LatticeConfig, spec: &TruncationSpec) -> Result<Self> {
        let operator = lattice::build_full_h(config, spec)?;
        let terms = match lattice::hamiltonian_terms(config, spec) {
            Ok(t) => Some(t),
            Err(Error::MonomialUnsupported(msg)) => {
                log::warn!("measurement estimator unavailable: {msg}");
                None
            }
            Err(e) => return Err(e),
        };
        Ok(Self { operator, terms })
    }
}

/// One recorded step of a run.
#[derive(Clone, Debug, Serialize)]
pub struct QiteStep {
    pub step: usize,
    pub tau: f64,
    pub energy: f64,
    pub gamma: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub c_ratio: f64,
    pub c: f64,
    pub c_ratio_first_order: f64,
    pub c_first_order: f64,
    /// Wall-clock seconds spent producing this row. Kept out of all
    /// serialized outputs so identical configs write identical bytes.
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Full record of an imaginary-time run.
#[derive(Clone, Debug)]
pub struct QiteTrace {
    pub steps: Vec<QiteStep>,
    pub converged: bool,
    pub parity_leakage_max: f64,
    pub truncation_mass_max: f64,
    pub snapshots: Option<Vec<TruncatedState>>,
    pub lattice: LatticeConfig,
    pub spec: TruncationSpec,
    pub qite: QiteConfig,
    pub initial: InitialState,
}

impl QiteTrace {
    pub fn final_energy(&self) -> f64 {
        self.steps.last().expect("trace has at least one row").energy
    }

    pub fn energy(&self, step: usize) -> Option<f64> {
        self.steps.get(step).map(|s| s.energy)
    }

    /// Normalization constant c_s from the recursion configured for the run.
    pub fn c(&self, step: usize) -> Option<f64> {
        self.steps.get(step).map(|s| match self.qite.c_recursion {
            CRecursion::Exact => s.c,
            CRecursion::FirstOrder => s.c_first_order,
        })
    }

    pub fn last_step(&self) -> usize {
        self.steps.len() - 1
    }
}

/// Mass-gap estimate from a ground and an odd-sector run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MassGap {
    pub gap: f64,
    /// Set when either trace failed its convergence criterion.
    pub provisional: bool,
}

/// E_1 - E_0 from the final energies of the two traces.
pub fn mass_gap(ground: &QiteTrace, excited: &QiteTrace) -> Result<MassGap> {
    if ground.steps.is_empty() || excited.steps.is_empty() {
        return Err(Error::Numerical("mass gap from an empty trace".into()));
    }
    Ok(MassGap {
        gap: excited.final_energy() - ground.final_energy(),
        provisional: !(ground.converged && excited.converged),
    })
}

/// Moments entering the gamma estimator for one mode.
#[derive(Clone, Copy, Debug)]
pub struct MomentSet {
    pub q2: f64,
    pub q4: f64,
    pub q2h: f64,
    pub h: f64,
}

// ---------------------------------------------------------------------
// measurement probes
// ---------------------------------------------------------------------

/// Precomputed eigenbases of q^2 and p^2 for building damping factors.
struct ProbeContext {
    q2: linalg::HermitianEigen,
    p2: linalg::HermitianEigen,
}

impl ProbeContext {
    fn new(n_cutoff: usize) -> Result<Self> {
        let single = TruncationSpec::single_mode(n_cutoff)?;
        let (q, p) = fock::quadratures(&single)?;
        let q2 = linalg::hermitian_eigen(&(q.matrix() * q.matrix()))?;
        let p2 = linalg::hermitian_eigen(&(p.matrix() * p.matrix()))?;
        Ok(Self { q2, p2 })
    }

    /// Single-mode damping exp(-u X^2 / 4): the factor a zero-photon
    /// ancilla projection applies to the system after a CX (X = q) or CZ
    /// (X = p) probe of strength eta = sqrt(u).
    fn damp(&self, quad: Quadrature, u: f64) -> CMatrix {
        let eig = match quad {
            Quadrature::Q => &self.q2,
            Quadrature::P => &self.p2,
        };
        linalg::expm_from_eigen(eig, Complex64::from(-u / 4.0))
    }
}

/// Probability that every probe ancilla in the list reads zero photons:
/// || prod_f exp(-u_f X_f^2/4) |psi> ||^2. Probes must be listed with the
/// q-probe of a mode before its p-probe; the resulting mixed derivatives
/// then realize the symmetrized operator products.
fn joint_zero_photon_probability(
    state: &TruncatedState,
    probes: &[(usize, Quadrature, f64)],
    ctx: &ProbeContext,
) -> Result<f64> {
    let mut current = state.clone();
    for &(mode, quad, u) in probes {
        if u == 0.0 {
            continue;
        }
        current = current.apply_single_mode(mode, &ctx.damp(quad, u))?;
    }
    Ok(current.amplitudes().norm_squared())
}

/// Symmetrized expectation of a product of even quadrature powers,
/// reconstructed from the joint zero-photon probability surface:
/// <prod_f X_f^{2 n_f}>_sym = (-2)^{sum n_f} d^{n_1}...d^{n_F} P / d u_1...
/// evaluated at the origin of the u = eta^2 grid.
fn symmetrized_moment(
    state: &TruncatedState,
    factors: &[(usize, Quadrature, usize)],
    eta_spacing: f64,
    ctx: &ProbeContext,
) -> Result<f64> {
    if factors.is_empty() {
        return Ok(1.0);
    }
    let grid_lens: Vec<usize> = factors
        .iter()
        .map(|&(_, _, order)| stencil::default_grid_len(order))
        .collect();
    let weights: Vec<Vec<f64>> = factors
        .iter()
        .zip(&grid_lens)
        .map(|(&(_, _, order), &len)| {
            let nodes = stencil::uniform_grid(eta_spacing, len);
            stencil::fd_weights(0.0, &nodes, order)[order].clone()
        })
        .collect();

    let total_points: usize = grid_lens.iter().product();
    let total_order: usize = factors.iter().map(|&(_, _, o)| o).sum();
    let mut acc = 0.0;
    let mut probes: Vec<(usize, Quadrature, f64)> = Vec::with_capacity(factors.len());
    for flat in 0..total_points {
        let mut rest = flat;
        let mut w = 1.0;
        probes.clear();
        for (f, &(mode, quad, _)) in factors.iter().enumerate() {
            let i = rest % grid_lens[f];
            rest /= grid_lens[f];
            w *= weights[f][i];
            probes.push((mode, quad, i as f64 * eta_spacing));
        }
        acc += w * joint_zero_photon_probability(state, &probes, ctx)?;
    }
    Ok((-2.0f64).powi(total_order as i32) * acc)
}

/// Even q-moments <q^{2n}(k)> for n = 1..=max_order, extracted from the
/// zero-photon probability P0(eta^2) of a CX probe on mode k, sampled on
/// a uniform grid in u = eta^2 (the u = 0 sample is probe-free and equals
/// one) and differentiated at the origin.
pub fn moment_from_projection(
    state: &TruncatedState,
    mode: usize,
    max_order: usize,
    eta_spacing: f64,
) -> Result<Vec<f64>> {
    if max_order == 0 || max_order > 3 {
        return Err(Error::InvalidConfig(format!(
            "moment order must be between 1 and 3, got {max_order}"
        )));
    }
    state.spec().check_mode(mode)?;
    if eta_spacing <= 0.0 {
        return Err(Error::InvalidConfig(
            "eta spacing must be positive".into(),
        ));
    }
    let state = state.normalize()?;
    let ctx = ProbeContext::new(state.spec().n_cutoff())?;
    let len = stencil::default_grid_len(max_order);
    let mut p0 = Vec::with_capacity(len);
    for i in 0..len {
        let u = i as f64 * eta_spacing;
        p0.push(joint_zero_photon_probability(
            &state,
            &[(mode, Quadrature::Q, u)],
            &ctx,
        )?);
    }
    (1..=max_order)
        .map(|n| {
            let d = stencil::derivative_at_zero(&p0, eta_spacing, n)?;
            Ok((-2.0f64).powi(n as i32) * d)
        })
        .collect()
}

fn merged_factors(
    insertion: Option<(usize, Quadrature)>,
    mono: &QuadMonomial,
) -> Vec<(usize, Quadrature, usize)> {
    let mut factors: Vec<(usize, Quadrature, usize)> = mono
        .factors
        .iter()
        .map(|&(mode, quad, pow)| (mode, quad, pow as usize / 2))
        .collect();
    if let Some((mode, quad)) = insertion {
        if let Some(f) = factors.iter_mut().find(|f| f.0 == mode && f.1 == quad) {
            f.2 += 1;
        } else {
            factors.push((mode, quad, 1));
        }
    }
    factors.sort_by_key(|&(mode, quad, _)| (mode, quad));
    factors
}

fn measurement_expectation(
    state: &TruncatedState,
    terms: &HamiltonianTerms,
    insertion: Option<(usize, Quadrature)>,
    eta_spacing: f64,
    ctx: &ProbeContext,
) -> Result<f64> {
    let mut acc = match insertion {
        // constant term of H multiplies <q^2(k)> under the insertion
        Some((mode, quad)) => {
            terms.constant
                * symmetrized_moment(state, &[(mode, quad, 1)], eta_spacing, ctx)?
        }
        None => terms.constant,
    };
    for mono in &terms.monomials {
        let factors = merged_factors(insertion, mono);
        acc += mono.coeff * symmetrized_moment(state, &factors, eta_spacing, ctx)?;
    }
    Ok(acc)
}

/// Re <q^2(k) H> on the given state. The measurement backend expands H
/// into quadrature monomials and reconstructs each product from joint
/// probe probabilities (one CX/CZ probe and projection per participating
/// mode); mixed q/p products on the same mode come out symmetrized, which
/// is exactly the real part the estimator needs. States without a
/// monomial expansion fall back to the exact backend with a notice.
pub fn cross_moment_qqh(
    state: &TruncatedState,
    k: usize,
    ham: &HamiltonianBundle,
    estimator: Estimator,
    eta_spacing: f64,
) -> Result<f64> {
    state.spec().check_mode(k)?;
    match estimator {
        Estimator::Exact => exact_q2h(state, k, ham),
        Estimator::Measurement => match &ham.terms {
            Some(terms) => {
                let ctx = ProbeContext::new(state.spec().n_cutoff())?;
                measurement_expectation(
                    state,
                    terms,
                    Some((k, Quadrature::Q)),
                    eta_spacing,
                    &ctx,
                )
            }
            None => {
                log::warn!(
                    "no quadrature-monomial form for this Hamiltonian; \
                     falling back to the exact estimator for <q^2({k}) H>"
                );
                exact_q2h(state, k, ham)
            }
        },
    }
}

fn single_mode_q_power(n_cutoff: usize, power: usize) -> Result<CMatrix> {
    let single = TruncationSpec::single_mode(n_cutoff)?;
    let (q, _) = fock::quadratures(&single)?;
    let mut m = CMatrix::identity(n_cutoff, n_cutoff);
    for _ in 0..power {
        m = &m * q.matrix();
    }
    Ok(m)
}

fn exact_q2h(state: &TruncatedState, k: usize, ham: &HamiltonianBundle) -> Result<f64> {
    let q2 = single_mode_q_power(state.spec().n_cutoff(), 2)?;
    let q2_psi = state.apply_single_mode(k, &q2)?;
    let h_psi = ham.operator.apply(state)?;
    Ok(q2_psi.inner(&h_psi)?.re)
}

/// Moments feeding the gamma estimator for mode k, through the chosen
/// backend.
pub fn moment_set(
    state: &TruncatedState,
    k: usize,
    ham: &HamiltonianBundle,
    estimator: Estimator,
    eta_spacing: f64,
) -> Result<MomentSet> {
    match estimator {
        Estimator::Exact => {
            let q2 = single_mode_q_power(state.spec().n_cutoff(), 2)?;
            let q4 = single_mode_q_power(state.spec().n_cutoff(), 4)?;
            let q2_mean = state.inner(&state.apply_single_mode(k, &q2)?)?.re;
            let q4_mean = state.inner(&state.apply_single_mode(k, &q4)?)?.re;
            let h = ham.operator.expectation(state)?.re;
            let q2h = exact_q2h(state, k, ham)?;
            Ok(MomentSet {
                q2: q2_mean,
                q4: q4_mean,
                q2h,
                h,
            })
        }
        Estimator::Measurement => {
            let moments = moment_from_projection(state, k, 2, eta_spacing)?;
            let q2h = cross_moment_qqh(state, k, ham, estimator, eta_spacing)?;
            let h = match &ham.terms {
                Some(terms) => {
                    let ctx = ProbeContext::new(state.spec().n_cutoff())?;
                    measurement_expectation(state, terms, None, eta_spacing, &ctx)?
                }
                None => ham.operator.expectation(state)?.re,
            };
            Ok(MomentSet {
                q2: moments[0],
                q4: moments[1],
                q2h,
                h,
            })
        }
    }
}

/// The distance-minimizing Gaussian step parameter for mode k. A
/// degenerate quadrature variance yields gamma = 0 with a logged warning:
/// no Gaussian update is defined at a q-eigenstate limit.
pub fn estimate_gamma(
    state: &TruncatedState,
    k: usize,
    ham: &HamiltonianBundle,
    estimator: Estimator,
    eta_spacing: f64,
) -> Result<f64> {
    let m = moment_set(state, k, ham, estimator, eta_spacing)?;
    let denom = m.q4 - m.q2 * m.q2;
    if denom <= tol::VARIANCE_FLOOR {
        log::warn!(
            "degenerate quadrature variance {denom:.3e} on mode {k}; skipping its update"
        );
        return Ok(0.0);
    }
    Ok(2.0 * (m.q2h - m.q2 * m.h) / denom)
}

/// One Trotter step: normalized exp(-dtau sum_k gamma_k q^2(k)/2)|psi>.
pub fn qite_step(
    state: &TruncatedState,
    gammas: &[f64],
    delta_tau: f64,
) -> Result<TruncatedState> {
    let spec = *state.spec();
    if gammas.len() != spec.n_modes() {
        return Err(Error::InvalidConfig(format!(
            "{} gamma values for {} modes",
            gammas.len(),
            spec.n_modes()
        )));
    }
    let ctx = ProbeContext::new(spec.n_cutoff())?;
    let mut out = state.clone();
    for (k, &g) in gammas.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        // exp(-dtau g q^2/2) = damp(u) with u = 2 dtau g
        out = out.apply_single_mode(k, &ctx.damp(Quadrature::Q, 2.0 * delta_tau * g))?;
    }
    out.normalize()
}

/// Rebuild the step-s Gaussian directly from squeezers: per mode a
/// squeezer of parameter r(k) = log sigma(k) acting on vacuum, and for an
/// odd run the single-photon-projection route on the parity mode.
pub fn prepare_state_squeezers(
    sigma_sq: &[f64],
    parity_mode: Option<usize>,
    spec: &TruncationSpec,
) -> Result<TruncatedState> {
    if sigma_sq.len() != spec.n_modes() {
        return Err(Error::InvalidConfig(format!(
            "{} sigma^2 values for {} modes",
            sigma_sq.len(),
            spec.n_modes()
        )));
    }
    if let Some(k) = parity_mode {
        spec.check_mode(k)?;
    }
    if let Some(&bad) = sigma_sq.iter().find(|&&s| s <= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "squeezed widths need sigma^2 > 0, got {bad}"
        )));
    }

    let mut state = TruncatedState::vacuum(*spec);
    for (k, &s2) in sigma_sq.iter().enumerate() {
        // The single-photon projection of the parity mode adds g^2/2 of
        // damping; pre-squeeze to the compensated width.
        let target = if parity_mode == Some(k) { s2 / 2.0 } else { s2 };
        let r = 0.5 * target.ln();
        if r != 0.0 {
            state = state.apply_single_mode(k, &gates::squeezer_matrix(r, 0.0, spec.n_cutoff())?)?;
        }
    }

    if let Some(k) = parity_mode {
        let g = sigma_sq[k].sqrt();
        let with_anc = state.with_vacuum_ancilla()?;
        let anc = spec.n_modes();
        let u = gates::cx_gate(g, anc, k, with_anc.spec())?;
        let (projected, _) = gates::project_photon_number(&u.apply(&with_anc)?, anc, 1)?;
        state = projected;
    }
    canonical_phase(&state.normalize()?)
}

/// Rebuild the step-s state through the ancilla route: per mode a CX
/// probe on a fresh vacuum ancilla followed by a zero-photon projection
/// (single-photon on the parity mode). The Gamma parameter follows the
/// squeezed-width map sigma^2(k) = 1 + Gamma^2(k); a single zero-photon
/// probe with gate argument g damps by exp(-g^2 q^2/4), so the gate runs
/// at sqrt(2) Gamma to realize exp(-Gamma^2 q^2/2). Returns the state and
/// the per-mode projection probabilities.
pub fn prepare_state_ancilla(
    gammas_cumulative: &[f64],
    parity_mode: Option<usize>,
    spec: &TruncationSpec,
) -> Result<(TruncatedState, Vec<f64>)> {
    if gammas_cumulative.len() != spec.n_modes() {
        return Err(Error::InvalidConfig(format!(
            "{} Gamma values for {} modes",
            gammas_cumulative.len(),
            spec.n_modes()
        )));
    }
    if let Some(k) = parity_mode {
        spec.check_mode(k)?;
    }
    let mut state = TruncatedState::vacuum(*spec);
    let mut probabilities = Vec::with_capacity(spec.n_modes());
    for (k, &big_gamma) in gammas_cumulative.iter().enumerate() {
        if !big_gamma.is_finite() {
            return Err(Error::NonFinite("ancilla-route Gamma"));
        }
        let outcome = usize::from(parity_mode == Some(k));
        if big_gamma == 0.0 && outcome == 0 {
            probabilities.push(1.0);
            continue;
        }
        let g = 2f64.sqrt() * big_gamma;
        let with_anc = state.with_vacuum_ancilla()?;
        let anc = spec.n_modes();
        let u = gates::cx_gate(g, anc, k, with_anc.spec())?;
        let (projected, prob) = gates::project_photon_number(&u.apply(&with_anc)?, anc, outcome)?;
        if prob < tol::MIN_NORM_SQ {
            return Err(Error::ZeroNorm(prob));
        }
        probabilities.push(prob);
        state = projected.normalize()?;
    }
    Ok((canonical_phase(&state)?, probabilities))
}

/// Fix the unphysical global phase: rotate so the first amplitude above
/// roundoff is real positive. Makes the two preparation routes directly
/// comparable.
fn canonical_phase(state: &TruncatedState) -> Result<TruncatedState> {
    let lead = state
        .amplitudes()
        .iter()
        .find(|c| c.norm() > 1e-12)
        .copied()
        .ok_or(Error::ZeroNorm(0.0))?;
    let phase = lead / Complex64::from(lead.norm());
    TruncatedState::new(
        state.amplitudes().map(|c| c / phase),
        *state.spec(),
    )
}

fn parity_sector(initial: InitialState, spec: &TruncationSpec) -> Vec<usize> {
    let mut sector = vec![0usize; spec.n_modes()];
    if let InitialState::SingleParticle { k } = initial {
        sector[k] = 1;
    }
    sector
}

fn parity_leakage(state: &TruncatedState, sector: &[usize]) -> f64 {
    let spec = state.spec();
    let norm_sq = state.amplitudes().norm_squared();
    let mut leak = 0.0;
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let in_sector =
            (0..spec.n_modes()).all(|m| spec.digit(idx, m) % 2 == sector[m] % 2);
        if !in_sector {
            leak += amp.norm_sqr();
        }
    }
    leak / norm_sq
}

/// Run the imaginary-time loop: estimate gamma, step, record. Stops early
/// once |E[s] - E[s-1]| falls below the convergence tolerance. Trace
/// energies are exact expectations on the simulated state; the estimator
/// choice governs the gamma moments.
pub fn run_qite(
    lattice_config: &LatticeConfig,
    spec: &TruncationSpec,
    config: &QiteConfig,
    initial: InitialState,
) -> Result<QiteTrace> {
    if config.delta_tau <= 0.0 || !config.delta_tau.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "delta_tau must be positive, got {}",
            config.delta_tau
        )));
    }
    if config.n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be positive".into()));
    }
    let l = spec.n_modes();
    let active: Vec<usize> = match &config.active_modes {
        None => (0..l).collect(),
        Some(modes) => {
            for &m in modes {
                spec.check_mode(m)?;
            }
            if modes.is_empty() {
                return Err(Error::InvalidConfig("active_modes must not be empty".into()));
            }
            modes.clone()
        }
    };

    let ham = HamiltonianBundle::build(lattice_config, spec)?;
    if config.estimator == Estimator::Measurement && ham.terms.is_none() {
        log::warn!("measurement estimator requested but unavailable; moments fall back to exact");
    }
    // one eigendecomposition serves every step of the exact c recursion
    let propagator = matrix_exponential(&ham.operator, Complex64::from(-2.0 * config.delta_tau))?;

    let mut state = match initial {
        InitialState::Vacuum => lattice::vacuum_state(spec),
        InitialState::SingleParticle { k } => lattice::single_particle_state(k, spec)?,
    };
    let sector = parity_sector(initial, spec);

    let energy_of = |s: &TruncatedState| -> Result<f64> {
        let e = ham.operator.expectation(s)?;
        if !e.re.is_finite() {
            return Err(Error::Numerical("non-finite energy".into()));
        }
        Ok(e.re)
    };

    let mut steps = Vec::with_capacity(config.n_steps + 1);
    let mut snapshots = config.store_states.then(Vec::new);
    let mut sigma_sq = vec![1.0; l];
    let mut c_exact = 1.0;
    let mut c_first = 1.0;
    let mut leakage_max: f64 = 0.0;
    let mut mass_max: f64 = gates::truncation_mass(&state);
    let mut converged = false;

    let e0 = energy_of(&state)?;
    steps.push(QiteStep {
        step: 0,
        tau: 0.0,
        energy: e0,
        gamma: vec![0.0; l],
        sigma_sq: sigma_sq.clone(),
        c_ratio: 1.0,
        c: 1.0,
        c_ratio_first_order: 1.0,
        c_first_order: 1.0,
        wall_seconds: 0.0,
    });
    if let Some(snaps) = snapshots.as_mut() {
        snaps.push(state.clone());
    }

    for s in 1..=config.n_steps {
        let clock = Instant::now();
        let prev_energy = steps[s - 1].energy;

        let mut gamma = vec![0.0; l];
        for &k in &active {
            gamma[k] = estimate_gamma(&state, k, &ham, config.estimator, config.eta_spacing)?;
        }

        // ratios use the pre-step state
        let exp_val = propagator.expectation(&state)?.re;
        if exp_val <= 0.0 {
            return Err(Error::Numerical(format!(
                "<exp(-2 dtau H)> = {exp_val:.3e} is not positive"
            )));
        }
        let ratio_exact = exp_val.powf(-0.5);
        let first = 1.0 - 2.0 * config.delta_tau * prev_energy;
        let ratio_first = if first > 0.0 { first.powf(-0.5) } else { f64::NAN };
        c_exact *= ratio_exact;
        c_first *= ratio_first;

        state = qite_step(&state, &gamma, config.delta_tau)?;
        gates::check_truncation_guard(&state)?;
        mass_max = mass_max.max(gates::truncation_mass(&state));
        leakage_max = leakage_max.max(parity_leakage(&state, &sector));

        for (k, &g) in gamma.iter().enumerate() {
            sigma_sq[k] += config.delta_tau * g;
            if sigma_sq[k] <= 0.0 {
                return Err(Error::Numerical(format!(
                    "ansatz width sigma^2({k}) = {:.3e} became non-positive at step {s}",
                    sigma_sq[k]
                )));
            }
        }

        let energy = energy_of(&state)?;
        steps.push(QiteStep {
            step: s,
            tau: s as f64 * config.delta_tau,
            energy,
            gamma,
            sigma_sq: sigma_sq.clone(),
            c_ratio: ratio_exact,
            c: c_exact,
            c_ratio_first_order: ratio_first,
            c_first_order: c_first,
            wall_seconds: clock.elapsed().as_secs_f64(),
        });
        if let Some(snaps) = snapshots.as_mut() {
            snaps.push(state.clone());
        }

        if (energy - prev_energy).abs() < config.convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(QiteTrace {
        steps,
        converged,
        parity_leakage_max: leakage_max,
        truncation_mass_max: mass_max,
        snapshots,
        lattice: *lattice_config,
        spec: *spec,
        qite: config.clone(),
        initial,
    })
}
