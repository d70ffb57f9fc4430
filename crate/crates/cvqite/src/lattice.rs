//! Scalar-field lattice Hamiltonian in the momentum-mode quadrature basis.
//!
//! One qumode per momentum mode `k = 0..L-1`, lattice spacing fixed to 1.
//! The free part is kept normal-ordered so the free vacuum sits at energy
//! exactly zero; a flag restores the conventional zero-point term. The
//! quartic interaction is assembled from the position-space field
//! operators, which are related to the mode quadratures by the Bogoliubov
//! (beamsplitter + squeezer) transformation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    self, embed, quadratures, ModeOperator, TruncatedState, TruncationSpec,
};
use crate::linalg::CMatrix;
use crate::tol;

/// Physical parameters of the lattice model.
///
/// The mass counter term splits the squared mass as `m^2 = m0^2 + delta_m`
/// and the quartic coupling enters the interaction as `g = lambda / 4!`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    l: usize,
    m0_sq: f64,
    delta_m: f64,
    lambda: f64,
}

impl LatticeConfig {
    pub fn new(l: usize, m0_sq: f64, delta_m: f64, lambda: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidLattice("lattice needs at least one site".into()));
        }
        if !(m0_sq.is_finite() && delta_m.is_finite() && lambda.is_finite()) {
            return Err(Error::NonFinite("lattice parameters"));
        }
        if lambda < 0.0 {
            return Err(Error::InvalidLattice(format!(
                "quartic coupling must be nonnegative, got {lambda}"
            )));
        }
        let m_sq = m0_sq + delta_m;
        if m_sq <= 0.0 {
            return Err(Error::InvalidLattice(format!(
                "m^2 = m0^2 + delta_m = {m_sq} violates the m^2 > 0 requirement"
            )));
        }
        Ok(Self {
            l,
            m0_sq,
            delta_m,
            lambda,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m0_sq(&self) -> f64 {
        self.m0_sq
    }

    pub fn delta_m(&self) -> f64 {
        self.delta_m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m_sq(&self) -> f64 {
        self.m0_sq + self.delta_m
    }

    pub fn mass(&self) -> f64 {
        self.m_sq().sqrt()
    }

    /// g = lambda / 4!, a single correctly rounded division.
    pub fn g(&self) -> f64 {
        self.lambda / 24.0
    }

    fn check_spec(&self, spec: &TruncationSpec) -> Result<()> {
        if spec.n_modes() != self.l {
            return Err(Error::SpecMismatch(
                format!("{} lattice modes", self.l),
                format!("{} register modes", spec.n_modes()),
            ));
        }
        Ok(())
    }
}

/// omega(k) = sqrt(m^2 + 4 sin^2(pi k / L)) for k = 0..L-1. For k = 0 the
/// sine vanishes identically, so omega(0) = m exactly.
pub fn dispersion(config: &LatticeConfig) -> Vec<f64> {
    let l = config.l as f64;
    (0..config.l)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / l).sin();
            (config.m_sq() + 4.0 * s * s).sqrt()
        })
        .collect()
}

/// Normal-ordered free Hamiltonian sum_k omega(k) n(k): the free vacuum
/// has energy exactly zero.
pub fn build_h0(config: &LatticeConfig, spec: &TruncationSpec) -> Result<ModeOperator> {
    build_h0_inner(config, spec, false)
}

/// Free Hamiltonian with the zero-point term restored,
/// sum_k omega(k) (n(k) + 1/2).
pub fn build_h0_with_zero_point(
    config: &LatticeConfig,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    build_h0_inner(config, spec, true)
}

fn build_h0_inner(
    config: &LatticeConfig,
    spec: &TruncationSpec,
    zero_point: bool,
) -> Result<ModeOperator> {
    config.check_spec(spec)?;
    let omega = dispersion(config);
    let single = TruncationSpec::single_mode(spec.n_cutoff())?;
    let n_op = fock::number_operator(&single)?;
    let dim = spec.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (k, &w) in omega.iter().enumerate() {
        let nk = embed(&n_op, k, spec)?;
        m += nk.matrix() * Complex64::from(w);
    }
    if zero_point {
        let zp: f64 = omega.iter().map(|w| w / 2.0).sum();
        m += CMatrix::identity(dim, dim) * Complex64::from(zp);
    }
    ModeOperator::new(m, *spec, true)
}

/// Position-space field operators (phi(x), pi(x)) for x = 0..L-1, built
/// from the momentum quadratures through the Bogoliubov map.
pub fn field_operators(
    config: &LatticeConfig,
    spec: &TruncationSpec,
) -> Result<(Vec<ModeOperator>, Vec<ModeOperator>)> {
    config.check_spec(spec)?;
    let l = config.l;
    let omega = dispersion(config);
    let single = TruncationSpec::single_mode(spec.n_cutoff())?;
    let (q, p) = quadratures(&single)?;
    let q_embedded: Vec<ModeOperator> = (0..l)
        .map(|k| embed(&q, k, spec))
        .collect::<Result<_>>()?;
    let p_embedded: Vec<ModeOperator> = (0..l)
        .map(|k| embed(&p, k, spec))
        .collect::<Result<_>>()?;

    let dim = spec.dim();
    let norm = 1.0 / (l as f64).sqrt();
    let mut phis = Vec::with_capacity(l);
    let mut pis = Vec::with_capacity(l);
    for x in 0..l {
        let mut phi = CMatrix::zeros(dim, dim);
        let mut pi = CMatrix::zeros(dim, dim);
        for k in 0..l {
            let angle = 2.0 * std::f64::consts::PI * (k * x) as f64 / l as f64;
            let (sin, cos) = angle.sin_cos();
            let wk = omega[k];
            phi += q_embedded[k].matrix() * Complex64::from(norm * cos / wk.sqrt());
            phi -= p_embedded[k].matrix() * Complex64::from(norm * sin / wk.sqrt());
            pi += p_embedded[k].matrix() * Complex64::from(norm * cos * wk.sqrt());
            pi += q_embedded[k].matrix() * Complex64::from(norm * sin * wk.sqrt());
        }
        phis.push(ModeOperator::new(phi, *spec, true)?);
        pis.push(ModeOperator::new(pi, *spec, true)?);
    }
    Ok((phis, pis))
}

/// Interaction Hamiltonian sum_x [ -(delta_m/2) phi^2(x) + g phi^4(x) ].
pub fn build_h_interaction(
    config: &LatticeConfig,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    config.check_spec(spec)?;
    let (phis, _) = field_operators(config, spec)?;
    let dim = spec.dim();
    let mut m = CMatrix::zeros(dim, dim);
    let g = config.g();
    let half_dm = config.delta_m / 2.0;
    for phi in &phis {
        let phi2 = phi.matrix() * phi.matrix();
        let phi4 = &phi2 * &phi2;
        m += phi4 * Complex64::from(g) - phi2 * Complex64::from(half_dm);
    }
    ModeOperator::new(m, *spec, true)
}

/// Full Hamiltonian H = H0 + H_I (normal-ordered free part).
pub fn build_full_h(config: &LatticeConfig, spec: &TruncationSpec) -> Result<ModeOperator> {
    build_h0(config, spec)?.add(&build_h_interaction(config, spec)?)
}

/// Free vacuum |Omega_0> = |0>^{tensor L}.
pub fn vacuum_state(spec: &TruncationSpec) -> TruncatedState {
    TruncatedState::vacuum(*spec)
}

/// Normalized q(k)|Omega_0>: one photon in mode k, vacuum elsewhere.
pub fn single_particle_state(k: usize, spec: &TruncationSpec) -> Result<TruncatedState> {
    spec.check_mode(k)?;
    let occupations: Vec<usize> = (0..spec.n_modes()).map(|m| usize::from(m == k)).collect();
    TruncatedState::basis_state(&occupations, *spec)
}

/// Photon-number parity of a single mode, diag((-1)^{n_k}).
pub fn mode_parity_operator(k: usize, spec: &TruncationSpec) -> Result<ModeOperator> {
    spec.check_mode(k)?;
    let dim = spec.dim();
    let m = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::from(if spec.digit(i, k).is_multiple_of(2) { 1.0 } else { -1.0 })
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    ModeOperator::new(m, *spec, true)
}

/// Total photon-number parity, diag((-1)^{sum_k n_k}).
pub fn parity_operator(spec: &TruncationSpec) -> Result<ModeOperator> {
    let dim = spec.dim();
    let m = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::from(if spec.total_photons(i).is_multiple_of(2) { 1.0 } else { -1.0 })
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    ModeOperator::new(m, *spec, true)
}

/// Which quadrature a monomial factor refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrature {
    Q,
    P,
}

/// A product of even quadrature powers on distinct (mode, quadrature)
/// slots, with a real coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadMonomial {
    pub coeff: f64,
    /// Sorted by (mode, quadrature); powers are even and positive.
    pub factors: Vec<(usize, Quadrature, u32)>,
}

/// The Hamiltonian expanded into quadrature monomials plus a constant.
/// This is the form consumed by the measurement-based moment estimator;
/// it exists whenever every field operator is a pure q-combination, which
/// holds for L <= 2 where all Bogoliubov sine coefficients vanish.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    pub constant: f64,
    pub monomials: Vec<QuadMonomial>,
}

/// Expand H = H0 + H_I into quadrature monomials. The free part uses
/// n(k) = (q^2(k) + p^2(k) - 1)/2, exact away from the truncation
/// boundary.
pub fn hamiltonian_terms(config: &LatticeConfig, spec: &TruncationSpec) -> Result<HamiltonianTerms> {
    config.check_spec(spec)?;
    let l = config.l;
    let omega = dispersion(config);

    // phi(x) = sum_k c_{x,k} q(k) requires vanishing sine coefficients.
    for x in 0..l {
        for k in 0..l {
            let angle = 2.0 * std::f64::consts::PI * (k * x) as f64 / l as f64;
            if angle.sin().abs() > tol::STRUCTURAL_ZERO {
                return Err(Error::MonomialUnsupported(format!(
                    "field operator at site {x} mixes q and p of mode {k} (L = {l})"
                )));
            }
        }
    }

    let mut constant = 0.0;
    let mut monomials: BTreeMap<Vec<(usize, Quadrature, u32)>, f64> = BTreeMap::new();
    let mut push = |factors: Vec<(usize, Quadrature, u32)>, coeff: f64| {
        *monomials.entry(factors).or_insert(0.0) += coeff;
    };

    // Free part: omega/2 q^2(k) + omega/2 p^2(k) - omega/2.
    for (k, &w) in omega.iter().enumerate() {
        push(vec![(k, Quadrature::Q, 2)], w / 2.0);
        push(vec![(k, Quadrature::P, 2)], w / 2.0);
        constant -= w / 2.0;
    }

    // Interaction part, expanded as polynomials in the q(k). Odd cross
    // terms cancel only in the sum over sites, so accumulate that sum
    // before converting to monomials.
    let norm = 1.0 / (l as f64).sqrt();
    let g = config.g();
    let half_dm = config.delta_m / 2.0;
    let mut interaction: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for x in 0..l {
        // linear polynomial phi(x): powers per mode -> coefficient
        let mut linear: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for k in 0..l {
            let angle = 2.0 * std::f64::consts::PI * (k * x) as f64 / l as f64;
            let c = norm * angle.cos() / omega[k].sqrt();
            let mut powers = vec![0u32; l];
            powers[k] = 1;
            *linear.entry(powers).or_insert(0.0) += c;
        }
        let square = poly_mul(&linear, &linear);
        let fourth = poly_mul(&square, &square);
        for (powers, coeff) in &square {
            *interaction.entry(powers.clone()).or_insert(0.0) -= half_dm * coeff;
        }
        for (powers, coeff) in &fourth {
            *interaction.entry(powers.clone()).or_insert(0.0) += g * coeff;
        }
    }
    for (powers, coeff) in &interaction {
        add_poly_term(&mut push, &mut constant, powers, *coeff)?;
    }

    let monomials = monomials
        .into_iter()
        .filter(|(_, c)| c.abs() > tol::STRUCTURAL_ZERO)
        .map(|(factors, coeff)| QuadMonomial { coeff, factors })
        .collect();
    Ok(HamiltonianTerms { constant, monomials })
}

fn poly_mul(a: &BTreeMap<Vec<u32>, f64>, b: &BTreeMap<Vec<u32>, f64>) -> BTreeMap<Vec<u32>, f64> {
    let mut out = BTreeMap::new();
    for (pa, ca) in a {
        for (pb, cb) in b {
            let powers: Vec<u32> = pa.iter().zip(pb).map(|(x, y)| x + y).collect();
            *out.entry(powers).or_insert(0.0) += ca * cb;
        }
    }
    out
}

fn add_poly_term(
    push: &mut impl FnMut(Vec<(usize, Quadrature, u32)>, f64),
    constant: &mut f64,
    powers: &[u32],
    coeff: f64,
) -> Result<()> {
    if coeff.abs() <= tol::STRUCTURAL_ZERO {
        return Ok(());
    }
    let mut factors = Vec::new();
    for (mode, &pow) in powers.iter().enumerate() {
        if pow == 0 {
            continue;
        }
        if pow % 2 != 0 {
            return Err(Error::MonomialUnsupported(format!(
                "odd power q^{pow} of mode {mode} survives the site sum"
            )));
        }
        factors.push((mode, Quadrature::Q, pow));
    }
    if factors.is_empty() {
        *constant += coeff;
    } else {
        push(factors, coeff);
    }
    Ok(())
}

/// Assemble the monomial expansion back into a dense operator. Used to
/// validate the expansion against the directly built Hamiltonian.
pub fn terms_to_operator(terms: &HamiltonianTerms, spec: &TruncationSpec) -> Result<ModeOperator> {
    let dim = spec.dim();
    let single = TruncationSpec::single_mode(spec.n_cutoff())?;
    let (q, p) = quadratures(&single)?;
    let mut m = CMatrix::identity(dim, dim) * Complex64::from(terms.constant);
    for mono in &terms.monomials {
        let mut term = CMatrix::identity(dim, dim);
        for &(mode, quad, pow) in &mono.factors {
            let base = match quad {
                Quadrature::Q => &q,
                Quadrature::P => &p,
            };
            let mut local = CMatrix::identity(spec.n_cutoff(), spec.n_cutoff());
            for _ in 0..pow {
                local = &local * base.matrix();
            }
            let embedded = embed(
                &ModeOperator::new(local, single, false)?,
                mode,
                spec,
            )?;
            term = &term * embedded.matrix();
        }
        m += term * Complex64::from(mono.coeff);
    }
    ModeOperator::new(m, *spec, false)
}
