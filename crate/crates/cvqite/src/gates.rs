//! Gaussian gates on the truncated space: squeezers, beamsplitters, the
//! controlled-addition (CX) probe gate and its squeezer/beamsplitter
//! decomposition, the CZ probe for p-quadrature moments, and photon-number
//! projection of ancilla modes.
//!
//! Conventions, fixed once and validated by the decomposition-equivalence
//! tests: S(r, 0) = exp[(r/2)(a^2 - a^dag^2)] (positive r squeezes q),
//! B(theta, 0) = exp[theta (a_i a_j^dag - a_i^dag a_j)] on the ordered
//! pair (i, j).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    embed_pair, quadratures, ModeOperator, TruncatedState, TruncationSpec,
};
use crate::linalg::{self, CMatrix, CVector};
use crate::tol;

/// Single-mode squeezing parameters; the phase is zero throughout this
/// model but kept for completeness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeParams {
    pub r: f64,
    pub phi: f64,
}

impl SqueezeParams {
    pub fn new(r: f64) -> Self {
        Self { r, phi: 0.0 }
    }
}

/// Beamsplitter angle and phase (phase zero throughout this model).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamsplitterParams {
    pub theta: f64,
    pub phi: f64,
}

impl BeamsplitterParams {
    pub fn new(theta: f64) -> Self {
        Self { theta, phi: 0.0 }
    }
}

/// Parameters of the squeezer/beamsplitter realization of CX(Gamma):
/// sinh r = -Gamma/2 and sin 2theta = -1/cosh r, on the branch
/// theta = arctan(-e^r) that makes the reconstruction exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CxDecomposition {
    pub theta: f64,
    pub r: f64,
}

/// Single-mode squeezer matrix exp[(r/2)(e^{-i phi} a^2 - e^{i phi} a^dag^2)].
pub(crate) fn squeezer_matrix(r: f64, phi: f64, n_cutoff: usize) -> Result<CMatrix> {
    let single = TruncationSpec::single_mode(n_cutoff)?;
    let a = crate::fock::annihilation(&single)?;
    let a2 = a.matrix() * a.matrix();
    let phase = Complex64::new(0.0, -phi).exp();
    let gen = &a2 * (phase * r / 2.0) - a2.adjoint() * (phase.conj() * r / 2.0);
    // anti-Hermitian generator: exponentiate i * (-i gen) through the
    // Hermitian eigensolver
    let h = &gen * Complex64::new(0.0, -1.0);
    linalg::expm_hermitian(&h, Complex64::new(0.0, 1.0))
}

/// Squeezer S(r, phi) acting on one mode of the register.
pub fn squeezer(
    params: SqueezeParams,
    mode: usize,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    if !(params.r.is_finite() && params.phi.is_finite()) {
        return Err(Error::NonFinite("squeezer parameters"));
    }
    spec.check_mode(mode)?;
    let m = squeezer_matrix(params.r, params.phi, spec.n_cutoff())?;
    let single = TruncationSpec::single_mode(spec.n_cutoff())?;
    let op = crate::fock::embed(&ModeOperator::new(m, single, false)?, mode, spec)?;
    let defect = unitarity_defect_on_probe(&op);
    if defect > tol::DECOMPOSITION {
        log::warn!(
            "squeezer r = {} loses {defect:.2e} unitarity on the probe subspace at cutoff {}",
            params.r,
            spec.n_cutoff()
        );
    }
    Ok(op)
}

/// Two-mode beamsplitter matrix on (slot0, slot1), exponentiated block by
/// block: the generator conserves total photon number.
fn beamsplitter_two_mode(theta: f64, phi: f64, n_cutoff: usize) -> Result<CMatrix> {
    let single = TruncationSpec::single_mode(n_cutoff)?;
    let a = crate::fock::annihilation(&single)?;
    let ad = a.dagger();
    let phase = Complex64::new(0.0, phi).exp();
    let gen = linalg::kron(a.matrix(), ad.matrix()) * (phase * theta)
        - linalg::kron(ad.matrix(), a.matrix()) * (phase.conj() * theta);
    let h = &gen * Complex64::new(0.0, -1.0); // Hermitian

    let dim = n_cutoff * n_cutoff;
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); 2 * n_cutoff - 1];
    for idx in 0..dim {
        blocks[idx / n_cutoff + idx % n_cutoff].push(idx);
    }
    let mut out = CMatrix::zeros(dim, dim);
    for block in &blocks {
        let b = block.len();
        let sub = CMatrix::from_fn(b, b, |i, j| h[(block[i], block[j])]);
        let eig = linalg::hermitian_eigen(&sub)?;
        let u = linalg::expm_from_eigen(&eig, Complex64::new(0.0, 1.0));
        for i in 0..b {
            for j in 0..b {
                out[(block[i], block[j])] = u[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Beamsplitter B(theta, phi) on the ordered mode pair (i, j).
pub fn beamsplitter(
    params: BeamsplitterParams,
    modes: (usize, usize),
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    if !(params.theta.is_finite() && params.phi.is_finite()) {
        return Err(Error::NonFinite("beamsplitter parameters"));
    }
    if modes.0 == modes.1 {
        return Err(Error::InvalidSpec(
            "beamsplitter needs two distinct modes".into(),
        ));
    }
    let two = beamsplitter_two_mode(params.theta, params.phi, spec.n_cutoff())?;
    let pair = TruncationSpec::new(spec.n_cutoff(), 2)?;
    embed_pair(
        &ModeOperator::new(two, pair, false)?,
        modes.0,
        modes.1,
        spec,
    )
}

/// exp(i gamma A (x) B) for commuting Hermitian single-mode factors,
/// using the factored eigenbasis instead of a full-space solve.
fn exp_i_gamma_pair(gamma: f64, op_a: &CMatrix, op_b: &CMatrix) -> Result<CMatrix> {
    let ea = linalg::hermitian_eigen(op_a)?;
    let eb = linalg::hermitian_eigen(op_b)?;
    let w = linalg::kron(&ea.vectors, &eb.vectors);
    let na = ea.values.len();
    let nb = eb.values.len();
    let phases = CVector::from_iterator(
        na * nb,
        (0..na * nb).map(|i| {
            Complex64::new(0.0, gamma * ea.values[i / nb] * eb.values[i % nb]).exp()
        }),
    );
    Ok(linalg::scaled_columns(&w, &phases) * w.adjoint())
}

/// Controlled-addition gate CX(Gamma) = exp(i Gamma p_control (x) q_target).
/// A zero-photon projection of a vacuum ancilla on the control slot damps
/// the target by exp(-Gamma^2 q^2 / 4).
pub fn cx_gate(
    gamma: f64,
    control_mode: usize,
    target_mode: usize,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    if !gamma.is_finite() {
        return Err(Error::NonFinite("cx parameter"));
    }
    if control_mode == target_mode {
        return Err(Error::InvalidSpec("cx needs two distinct modes".into()));
    }
    let single = TruncationSpec::single_mode(spec.n_cutoff())?;
    let (q, p) = quadratures(&single)?;
    let two = exp_i_gamma_pair(gamma, p.matrix(), q.matrix())?;
    let pair = TruncationSpec::new(spec.n_cutoff(), 2)?;
    embed_pair(
        &ModeOperator::new(two, pair, false)?,
        control_mode,
        target_mode,
        spec,
    )
}

/// p-quadrature probe gate exp(i gamma q_control (x) p_target). A
/// zero-photon projection of a vacuum ancilla on the control slot damps
/// the target by exp(-gamma^2 p^2 / 4), which is what makes p-moments
/// measurable. Note this deliberately differs from [`cz_gate_printed`].
pub fn cz_gate(
    gamma: f64,
    control_mode: usize,
    target_mode: usize,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    if !gamma.is_finite() {
        return Err(Error::NonFinite("cz parameter"));
    }
    if control_mode == target_mode {
        return Err(Error::InvalidSpec("cz needs two distinct modes".into()));
    }
    let single = TruncationSpec::single_mode(spec.n_cutoff())?;
    let (q, p) = quadratures(&single)?;
    let two = exp_i_gamma_pair(gamma, q.matrix(), p.matrix())?;
    let pair = TruncationSpec::new(spec.n_cutoff(), 2)?;
    embed_pair(
        &ModeOperator::new(two, pair, false)?,
        control_mode,
        target_mode,
        spec,
    )
}

/// The literal controlled-phase gate exp(i gamma q_control (x) q_target),
/// exposed for comparison: projecting its ancilla yields q-moments again,
/// not p-moments.
pub fn cz_gate_printed(
    gamma: f64,
    control_mode: usize,
    target_mode: usize,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    if !gamma.is_finite() {
        return Err(Error::NonFinite("cz parameter"));
    }
    if control_mode == target_mode {
        return Err(Error::InvalidSpec("cz needs two distinct modes".into()));
    }
    let single = TruncationSpec::single_mode(spec.n_cutoff())?;
    let (q, _) = quadratures(&single)?;
    let two = exp_i_gamma_pair(gamma, q.matrix(), q.matrix())?;
    let pair = TruncationSpec::new(spec.n_cutoff(), 2)?;
    embed_pair(
        &ModeOperator::new(two, pair, false)?,
        control_mode,
        target_mode,
        spec,
    )
}

/// Squeezer/beamsplitter parameters realizing CX(Gamma):
/// r = arcsinh(-Gamma/2), theta = arctan(-e^r).
pub fn cx_decompose(gamma: f64) -> CxDecomposition {
    let r = (-gamma / 2.0).asinh();
    let theta = (-r.exp()).atan();
    CxDecomposition { theta, r }
}

/// Assemble B(pi/2 + theta, 0) (S(-r) on control (x) S(r) on target)
/// B(theta, 0) from a decomposition. With [`cx_decompose`] parameters the
/// result reproduces [`cx_gate`] up to truncation effects.
pub fn cx_from_decomposition(
    dec: &CxDecomposition,
    control_mode: usize,
    target_mode: usize,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    let b_in = beamsplitter(
        BeamsplitterParams::new(dec.theta),
        (control_mode, target_mode),
        spec,
    )?;
    let b_out = beamsplitter(
        BeamsplitterParams::new(std::f64::consts::FRAC_PI_2 + dec.theta),
        (control_mode, target_mode),
        spec,
    )?;
    let s_control = squeezer(SqueezeParams::new(-dec.r), control_mode, spec)?;
    let s_target = squeezer(SqueezeParams::new(dec.r), target_mode, spec)?;
    b_out
        .compose(&s_control)?
        .compose(&s_target)?
        .compose(&b_in)
}

/// Project one mode onto Fock level `n`. Returns the unnormalized state
/// on the register with that mode removed, together with the outcome
/// probability (squared norm of the slice).
pub fn project_photon_number(
    state: &TruncatedState,
    mode: usize,
    n: usize,
) -> Result<(TruncatedState, f64)> {
    let spec = *state.spec();
    spec.check_mode(mode)?;
    if n >= spec.n_cutoff() {
        return Err(Error::InvalidSpec(format!(
            "photon number {n} not below cutoff {}",
            spec.n_cutoff()
        )));
    }
    if spec.n_modes() == 1 {
        return Err(Error::InvalidSpec(
            "projecting the only mode would leave an empty register".into(),
        ));
    }
    let reduced = spec.without_mode(mode)?;
    let stride = spec.stride(mode);
    let block = stride * spec.n_cutoff();
    let mut amplitudes = CVector::zeros(reduced.dim());
    for new_idx in 0..reduced.dim() {
        let left = new_idx / stride;
        let right = new_idx % stride;
        amplitudes[new_idx] = state.amplitudes()[left * block + n * stride + right];
    }
    let probability = amplitudes.norm_squared();
    Ok((TruncatedState::new(amplitudes, reduced)?, probability))
}

/// Largest probability mass any mode carries in its top two Fock levels,
/// normalized by the state norm.
pub fn truncation_mass(state: &TruncatedState) -> f64 {
    let nc = state.spec().n_cutoff();
    let norm_sq = state.amplitudes().norm_squared();
    if norm_sq == 0.0 {
        return 0.0;
    }
    (0..state.spec().n_modes())
        .map(|m| {
            let occ = state.mode_occupation(m).expect("mode in range");
            (occ[nc - 1] + occ[nc - 2]) / norm_sq
        })
        .fold(0.0, f64::max)
}

/// Abort signal for states whose truncation-boundary mass would corrupt
/// moment extraction.
pub fn check_truncation_guard(state: &TruncatedState) -> Result<()> {
    let nc = state.spec().n_cutoff();
    let norm_sq = state.amplitudes().norm_squared();
    for mode in 0..state.spec().n_modes() {
        let occ = state.mode_occupation(mode)?;
        let mass = (occ[nc - 1] + occ[nc - 2]) / norm_sq;
        if mass > tol::TRUNCATION_GUARD {
            return Err(Error::TruncationGuard {
                mode,
                mass,
                guard: tol::TRUNCATION_GUARD,
            });
        }
    }
    Ok(())
}

/// Max-norm deviation of U^dag U from the identity, restricted to basis
/// states with total photon number <= n_cutoff - 8.
pub fn unitarity_defect_on_probe(op: &ModeOperator) -> f64 {
    let spec = op.spec();
    let cut = spec.n_cutoff().saturating_sub(8);
    let gram = op.matrix().adjoint() * op.matrix();
    let mut defect: f64 = 0.0;
    for i in 0..spec.dim() {
        for j in 0..spec.dim() {
            if spec.total_photons(i) <= cut && spec.total_photons(j) <= cut {
                let target = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                defect = defect.max((gram[(i, j)] - target).norm());
            }
        }
    }
    defect
}
