//! Truncated Fock-space representation of qumodes.
//!
//! Each mode keeps photon levels `0..n_cutoff-1`; a register of `n_modes`
//! modes lives on the Kronecker product space of dimension
//! `n_cutoff^n_modes`. Mode 0 is the slowest-varying Kronecker factor and
//! ancilla modes are appended last (fastest-varying), so amplitude dumps
//! are reproducible bit for bit.
//!
//! Operators and states are immutable after construction and every
//! operation is a pure function, so evaluation may be parallelized freely
//! across modes or parameter grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::tol;

/// Shape of a truncated multimode register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    n_cutoff: usize,
    n_modes: usize,
}

impl TruncationSpec {
    pub fn new(n_cutoff: usize, n_modes: usize) -> Result<Self> {
        if n_cutoff < 2 {
            return Err(Error::InvalidSpec(format!(
                "n_cutoff must be at least 2, got {n_cutoff}"
            )));
        }
        if n_modes == 0 {
            return Err(Error::InvalidSpec("n_modes must be positive".into()));
        }
        let mut dim: usize = 1;
        for _ in 0..n_modes {
            dim = dim.checked_mul(n_cutoff).ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "total dimension {n_cutoff}^{n_modes} overflows usize"
                ))
            })?;
        }
        // Dense matrices of this dimension must stay addressable.
        if dim > 1 << 16 {
            return Err(Error::InvalidSpec(format!(
                "total dimension {dim} too large for a dense simulator"
            )));
        }
        Ok(Self { n_cutoff, n_modes })
    }

    pub fn single_mode(n_cutoff: usize) -> Result<Self> {
        Self::new(n_cutoff, 1)
    }

    pub fn n_cutoff(&self) -> usize {
        self.n_cutoff
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        self.n_cutoff.pow(self.n_modes as u32)
    }

    /// Same cutoff with one more mode appended at the end.
    pub fn with_ancilla(&self) -> Result<Self> {
        Self::new(self.n_cutoff, self.n_modes + 1)
    }

    /// Same cutoff with the given mode removed.
    pub fn without_mode(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        Self::new(self.n_cutoff, self.n_modes - 1)
    }

    /// Index stride of `mode` in the flattened amplitude vector.
    pub fn stride(&self, mode: usize) -> usize {
        self.n_cutoff.pow((self.n_modes - 1 - mode) as u32)
    }

    /// Fock level of `mode` within the flat basis index.
    pub fn digit(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.n_cutoff
    }

    /// Total photon number of a flat basis index.
    pub fn total_photons(&self, index: usize) -> usize {
        (0..self.n_modes).map(|m| self.digit(index, m)).sum()
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("{} modes @ cutoff {}", self.n_modes, self.n_cutoff)
    }

    fn check_match(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::SpecMismatch(self.describe(), other.describe()));
        }
        Ok(())
    }
}

/// A (not necessarily normalized) vector in the truncated multimode space.
#[derive(Clone, Debug)]
pub struct TruncatedState {
    amplitudes: CVector,
    spec: TruncationSpec,
}

impl TruncatedState {
    pub fn new(amplitudes: CVector, spec: TruncationSpec) -> Result<Self> {
        if amplitudes.len() != spec.dim() {
            return Err(Error::InvalidSpec(format!(
                "amplitude vector of length {} does not match dimension {}",
                amplitudes.len(),
                spec.dim()
            )));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self { amplitudes, spec })
    }

    /// |0...0>.
    pub fn vacuum(spec: TruncationSpec) -> Self {
        let mut amplitudes = CVector::zeros(spec.dim());
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, spec }
    }

    /// Product Fock state |n_0 n_1 ...>.
    pub fn basis_state(occupations: &[usize], spec: TruncationSpec) -> Result<Self> {
        if occupations.len() != spec.n_modes() {
            return Err(Error::InvalidSpec(format!(
                "{} occupation numbers for {} modes",
                occupations.len(),
                spec.n_modes()
            )));
        }
        let mut index = 0;
        for (mode, &n) in occupations.iter().enumerate() {
            if n >= spec.n_cutoff() {
                return Err(Error::InvalidSpec(format!(
                    "occupation {n} at mode {mode} exceeds cutoff {}",
                    spec.n_cutoff()
                )));
            }
            index += n * spec.stride(mode);
        }
        let mut amplitudes = CVector::zeros(spec.dim());
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, spec })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.amplitudes.norm_squared();
        if n2 < tol::MIN_NORM_SQ {
            return Err(Error::ZeroNorm(n2));
        }
        Ok(Self {
            amplitudes: &self.amplitudes / Complex64::from(n2.sqrt()),
            spec: self.spec,
        })
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.spec.check_match(&other.spec)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Contract a single-mode matrix along one mode of the state tensor.
    /// Cheaper than embedding `m` into the full space.
    pub fn apply_single_mode(&self, mode: usize, m: &CMatrix) -> Result<Self> {
        self.spec.check_mode(mode)?;
        let nc = self.spec.n_cutoff();
        if m.nrows() != nc || m.ncols() != nc {
            return Err(Error::InvalidSpec(format!(
                "single-mode matrix is {}x{}, expected {nc}x{nc}",
                m.nrows(),
                m.ncols()
            )));
        }
        let stride = self.spec.stride(mode);
        let dim = self.spec.dim();
        let block = stride * nc;
        let mut out = CVector::zeros(dim);
        let mut scratch = CVector::zeros(nc);
        for base in (0..dim).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for j in 0..nc {
                    scratch[j] = self.amplitudes[start + j * stride];
                }
                for i in 0..nc {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..nc {
                        acc += m[(i, j)] * scratch[j];
                    }
                    out[start + i * stride] = acc;
                }
            }
        }
        Self::new(out, self.spec)
    }

    /// Tensor the register with a fresh vacuum mode appended last.
    pub fn with_vacuum_ancilla(&self) -> Result<Self> {
        let spec = self.spec.with_ancilla()?;
        let nc = spec.n_cutoff();
        let mut amplitudes = CVector::zeros(spec.dim());
        for (i, amp) in self.amplitudes.iter().enumerate() {
            amplitudes[i * nc] = *amp;
        }
        Self::new(amplitudes, spec)
    }

    /// Photon-number marginal of one mode.
    pub fn mode_occupation(&self, mode: usize) -> Result<Vec<f64>> {
        self.spec.check_mode(mode)?;
        let nc = self.spec.n_cutoff();
        let mut probs = vec![0.0; nc];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            probs[self.spec.digit(idx, mode)] += amp.norm_sqr();
        }
        Ok(probs)
    }
}

/// A dense operator on the truncated multimode space.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    matrix: CMatrix,
    spec: TruncationSpec,
    hermitian_hint: bool,
}

impl ModeOperator {
    /// Wrap a matrix. With `hermitian_hint` the hermiticity defect is
    /// checked against the algebraic tolerance.
    pub fn new(matrix: CMatrix, spec: TruncationSpec, hermitian_hint: bool) -> Result<Self> {
        if matrix.nrows() != spec.dim() || matrix.ncols() != spec.dim() {
            return Err(Error::InvalidSpec(format!(
                "matrix is {}x{}, expected dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                spec.dim()
            )));
        }
        if matrix.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("operator matrix"));
        }
        if hermitian_hint {
            let defect = linalg::hermiticity_defect(&matrix);
            if defect > tol::ALGEBRAIC {
                return Err(Error::InvalidSpec(format!(
                    "hermitian_hint set but hermiticity defect is {defect:.3e}"
                )));
            }
        }
        Ok(Self {
            matrix,
            spec,
            hermitian_hint,
        })
    }

    pub fn identity(spec: TruncationSpec) -> Self {
        Self {
            matrix: CMatrix::identity(spec.dim(), spec.dim()),
            spec,
            hermitian_hint: true,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn is_hermitian_hinted(&self) -> bool {
        self.hermitian_hint
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            spec: self.spec,
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn apply(&self, state: &TruncatedState) -> Result<TruncatedState> {
        self.spec.check_match(state.spec())?;
        TruncatedState::new(&self.matrix * state.amplitudes(), self.spec)
    }

    /// <state|M|state>; imaginary parts survive only up to roundoff for
    /// Hermitian operators.
    pub fn expectation(&self, state: &TruncatedState) -> Result<Complex64> {
        let applied = self.apply(state)?;
        state.inner(&applied)
    }

    /// Operator product self * rhs.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.spec.check_match(&rhs.spec)?;
        Self::new(&self.matrix * &rhs.matrix, self.spec, false)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.spec.check_match(&rhs.spec)?;
        Self::new(
            &self.matrix + &rhs.matrix,
            self.spec,
            self.hermitian_hint && rhs.hermitian_hint,
        )
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            matrix: &self.matrix * factor,
            spec: self.spec,
            hermitian_hint: self.hermitian_hint && factor.im == 0.0,
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }
}

/// Single-mode annihilation operator: element (n-1, n) = sqrt(n).
pub fn annihilation(spec: &TruncationSpec) -> Result<ModeOperator> {
    require_single_mode(spec)?;
    let nc = spec.n_cutoff();
    let mut m = CMatrix::zeros(nc, nc);
    for n in 1..nc {
        m[(n - 1, n)] = Complex64::from((n as f64).sqrt());
    }
    ModeOperator::new(m, *spec, false)
}

/// Single-mode creation operator.
pub fn creation(spec: &TruncationSpec) -> Result<ModeOperator> {
    Ok(annihilation(spec)?.dagger())
}

/// Single-mode photon-number operator diag(0, 1, ..., n_cutoff-1).
pub fn number_operator(spec: &TruncationSpec) -> Result<ModeOperator> {
    require_single_mode(spec)?;
    let nc = spec.n_cutoff();
    let m = CMatrix::from_diagonal(&CVector::from_iterator(
        nc,
        (0..nc).map(|n| Complex64::from(n as f64)),
    ));
    ModeOperator::new(m, *spec, true)
}

/// Single-mode quadratures q = (a^dag + a)/sqrt(2), p = i(a^dag - a)/sqrt(2).
pub fn quadratures(spec: &TruncationSpec) -> Result<(ModeOperator, ModeOperator)> {
    let a = annihilation(spec)?;
    let ad = a.dagger();
    let inv_sqrt2 = Complex64::from(1.0 / 2f64.sqrt());
    let q = ModeOperator::new(
        (ad.matrix() + a.matrix()) * inv_sqrt2,
        *spec,
        true,
    )?;
    let p = ModeOperator::new(
        (ad.matrix() - a.matrix()) * Complex64::new(0.0, 1.0 / 2f64.sqrt()),
        *spec,
        true,
    )?;
    Ok((q, p))
}

fn require_single_mode(spec: &TruncationSpec) -> Result<()> {
    if spec.n_modes() != 1 {
        return Err(Error::InvalidSpec(format!(
            "expected a single-mode spec, got {} modes",
            spec.n_modes()
        )));
    }
    Ok(())
}

/// Kronecker embedding of a single-mode operator at `mode`, identity on
/// all other modes. Embeddings of distinct modes commute.
pub fn embed(op: &ModeOperator, mode: usize, spec: &TruncationSpec) -> Result<ModeOperator> {
    require_single_mode(op.spec())?;
    if op.spec().n_cutoff() != spec.n_cutoff() {
        return Err(Error::SpecMismatch(
            format!("cutoff {}", op.spec().n_cutoff()),
            format!("cutoff {}", spec.n_cutoff()),
        ));
    }
    spec.check_mode(mode)?;
    let nc = spec.n_cutoff();
    let left = CMatrix::identity(nc.pow(mode as u32), nc.pow(mode as u32));
    let right_dim = spec.stride(mode);
    let right = CMatrix::identity(right_dim, right_dim);
    let full = linalg::kron(&linalg::kron(&left, op.matrix()), &right);
    ModeOperator::new(full, *spec, op.is_hermitian_hinted())
}

/// Embed a two-mode operator so that its first slot acts on `mode_a` and
/// its second slot on `mode_b`, identity elsewhere. The slots may sit at
/// arbitrary (distinct) positions of the register.
pub fn embed_pair(
    op2: &ModeOperator,
    mode_a: usize,
    mode_b: usize,
    spec: &TruncationSpec,
) -> Result<ModeOperator> {
    if op2.spec().n_modes() != 2 || op2.spec().n_cutoff() != spec.n_cutoff() {
        return Err(Error::SpecMismatch(
            op2.spec().describe(),
            format!("two-mode block @ cutoff {}", spec.n_cutoff()),
        ));
    }
    spec.check_mode(mode_a)?;
    spec.check_mode(mode_b)?;
    if mode_a == mode_b {
        return Err(Error::InvalidSpec("two-mode embedding needs distinct modes".into()));
    }
    let nc = spec.n_cutoff();
    let dim = spec.dim();
    let stride_a = spec.stride(mode_a);
    let stride_b = spec.stride(mode_b);
    let mut full = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let da = spec.digit(col, mode_a);
        let db = spec.digit(col, mode_b);
        let base = col - da * stride_a - db * stride_b;
        let src_col = da * nc + db;
        for da2 in 0..nc {
            for db2 in 0..nc {
                let v = op2.matrix()[(da2 * nc + db2, src_col)];
                if v != Complex64::new(0.0, 0.0) {
                    full[(base + da2 * stride_a + db2 * stride_b, col)] = v;
                }
            }
        }
    }
    ModeOperator::new(full, *spec, op2.is_hermitian_hinted())
}

/// exp(scale * op). Hermitian-hinted operators go through the
/// eigendecomposition (exact for any complex scale); everything else
/// falls back to scaling-and-squaring.
pub fn matrix_exponential(op: &ModeOperator, scale: Complex64) -> Result<ModeOperator> {
    let m = if op.is_hermitian_hinted() {
        linalg::expm_hermitian(op.matrix(), scale)?
    } else {
        linalg::expm_pade(&(op.matrix() * scale))?
    };
    // exp of a Hermitian matrix with a real scale is Hermitian positive.
    let hint = op.is_hermitian_hinted() && scale.im == 0.0;
    ModeOperator::new(m, *op.spec(), hint)
}

/// Serialization container for states and operators: row-major complex
/// pairs (re, im) with the truncation header. Used by test fixtures.
#[derive(Serialize, Deserialize)]
pub struct Dump {
    pub n_cutoff: usize,
    pub n_modes: usize,
    pub data: Vec<[f64; 2]>,
}

impl Dump {
    pub fn from_state(state: &TruncatedState) -> Self {
        Self {
            n_cutoff: state.spec().n_cutoff(),
            n_modes: state.spec().n_modes(),
            data: state.amplitudes().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_operator(op: &ModeOperator) -> Self {
        let m = op.matrix();
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self {
            n_cutoff: op.spec().n_cutoff(),
            n_modes: op.spec().n_modes(),
            data,
        }
    }

    pub fn to_state(&self) -> Result<TruncatedState> {
        let spec = TruncationSpec::new(self.n_cutoff, self.n_modes)?;
        let amplitudes = CVector::from_iterator(
            self.data.len(),
            self.data.iter().map(|p| Complex64::new(p[0], p[1])),
        );
        TruncatedState::new(amplitudes, spec)
    }

    pub fn to_operator(&self, hermitian_hint: bool) -> Result<ModeOperator> {
        let spec = TruncationSpec::new(self.n_cutoff, self.n_modes)?;
        let dim = spec.dim();
        if self.data.len() != dim * dim {
            return Err(Error::InvalidSpec(format!(
                "dump holds {} entries, expected {}",
                self.data.len(),
                dim * dim
            )));
        }
        let m = CMatrix::from_fn(dim, dim, |i, j| {
            let p = self.data[i * dim + j];
            Complex64::new(p[0], p[1])
        });
        ModeOperator::new(m, spec, hermitian_hint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec1(nc: usize) -> TruncationSpec {
        TruncationSpec::single_mode(nc).unwrap()
    }

    /// Vacuum moments <q^{2n}> = (2n-1)!!/2^n, independent of operators.
    fn vacuum_moment(n: u32) -> f64 {
        let double_factorial: f64 = (1..=(2 * n - 1)).step_by(2).map(|k| k as f64).product();
        double_factorial / 2f64.powi(n as i32)
    }

    #[test]
    fn annihilation_matrix_elements() {
        let a = annihilation(&spec1(6)).unwrap();
        assert_abs_diff_eq!(a.matrix()[(0, 1)].re, 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(a.matrix()[(1, 2)].re, 2f64.sqrt(), epsilon = 0.0);
        assert_eq!(a.matrix()[(2, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn annihilation_kills_vacuum() {
        let spec = spec1(6);
        let a = annihilation(&spec).unwrap();
        let out = a.apply(&TruncatedState::vacuum(spec)).unwrap();
        assert!(out.norm() < tol::CONSTRUCTION);
    }

    #[test]
    fn creation_raises_vacuum_to_one_photon() {
        let spec = spec1(6);
        let ad = creation(&spec).unwrap();
        let out = ad.apply(&TruncatedState::vacuum(spec)).unwrap();
        let one = TruncatedState::basis_state(&[1], spec).unwrap();
        assert!((out.inner(&one).unwrap().re - 1.0).abs() < tol::CONSTRUCTION);
    }

    #[test]
    fn vacuum_quadrature_moments() {
        let spec = spec1(12);
        let (q, _) = quadratures(&spec).unwrap();
        let vac = TruncatedState::vacuum(spec);
        let q2 = q.compose(&q).unwrap();
        let q4 = q2.compose(&q2).unwrap();
        let q6 = q4.compose(&q2).unwrap();
        for (op, n) in [(&q2, 1), (&q4, 2), (&q6, 3)] {
            let got = op.expectation(&vac).unwrap();
            assert_abs_diff_eq!(got.re, vacuum_moment(n), epsilon = tol::CONSTRUCTION);
            assert!(got.im.abs() < tol::CONSTRUCTION);
        }
    }

    #[test]
    fn quadratures_are_hermitian() {
        let (q, p) = quadratures(&spec1(10)).unwrap();
        assert!(q.hermiticity_defect() < tol::ALGEBRAIC);
        assert!(p.hermiticity_defect() < tol::ALGEBRAIC);
    }

    #[test]
    fn canonical_commutator_away_from_boundary() {
        // [q, p] = i * identity on Fock levels below n_cutoff - 2.
        let nc = 10;
        let spec = spec1(nc);
        let (q, p) = quadratures(&spec).unwrap();
        let comm = &(q.matrix() * p.matrix()) - &(p.matrix() * q.matrix());
        for i in 0..nc - 2 {
            for j in 0..nc - 2 {
                let expect = if i == j {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((comm[(i, j)] - expect).norm() < tol::ALGEBRAIC);
            }
        }
    }

    #[test]
    fn embedding_identity_and_commutation() {
        let nc = 4;
        let single = spec1(nc);
        let multi = TruncationSpec::new(nc, 2).unwrap();
        let ident = embed(&ModeOperator::identity(single), 0, &multi).unwrap();
        assert!(linalg::max_abs(&(ident.matrix() - CMatrix::identity(16, 16))) == 0.0);

        let (q, _) = quadratures(&single).unwrap();
        let q0 = embed(&q, 0, &multi).unwrap();
        let q1 = embed(&q, 1, &multi).unwrap();
        let ab = q0.compose(&q1).unwrap();
        let ba = q1.compose(&q0).unwrap();
        assert!(linalg::max_abs(&(ab.matrix() - ba.matrix())) < tol::CONSTRUCTION);
    }

    #[test]
    fn embedding_is_a_homomorphism() {
        let nc = 5;
        let single = spec1(nc);
        let multi = TruncationSpec::new(nc, 2).unwrap();
        let (q, p) = quadratures(&single).unwrap();
        let qp = q.compose(&p).unwrap();
        let lhs = embed(&qp, 1, &multi).unwrap();
        let rhs = embed(&q, 1, &multi)
            .unwrap()
            .compose(&embed(&p, 1, &multi).unwrap())
            .unwrap();
        assert!(linalg::max_abs(&(lhs.matrix() - rhs.matrix())) < tol::CONSTRUCTION);
    }

    #[test]
    fn vacuum_moment_is_mode_independent_after_embedding() {
        let nc = 10;
        let single = spec1(nc);
        let multi = TruncationSpec::new(nc, 2).unwrap();
        let (q, _) = quadratures(&single).unwrap();
        let q2 = q.compose(&q).unwrap();
        let vac = TruncatedState::vacuum(multi);
        for k in 0..2 {
            let q2k = embed(&q2, k, &multi).unwrap();
            assert_abs_diff_eq!(
                q2k.expectation(&vac).unwrap().re,
                0.5,
                epsilon = tol::CONSTRUCTION
            );
        }
    }

    #[test]
    fn expectation_of_identity_is_one() {
        let spec = TruncationSpec::new(5, 2).unwrap();
        let ident = ModeOperator::identity(spec);
        let state = TruncatedState::basis_state(&[2, 3], spec).unwrap();
        assert_abs_diff_eq!(
            ident.expectation(&state).unwrap().re,
            1.0,
            epsilon = tol::CONSTRUCTION
        );
    }

    #[test]
    fn norm_of_q_on_vacuum() {
        // ||q|0>|| = sqrt(<q^2>) = 1/sqrt(2).
        let spec = spec1(8);
        let (q, _) = quadratures(&spec).unwrap();
        let out = q.apply(&TruncatedState::vacuum(spec)).unwrap();
        assert_abs_diff_eq!(out.norm(), 0.5f64.sqrt(), epsilon = tol::CONSTRUCTION);
    }

    #[test]
    fn normalize_rejects_zero_state() {
        let spec = spec1(4);
        let zero = TruncatedState::new(CVector::zeros(4), spec).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::ZeroNorm(_))));
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let spec = spec1(6);
        let (q, _) = quadratures(&spec).unwrap();
        let e = matrix_exponential(&q, Complex64::new(0.0, 0.0)).unwrap();
        assert!(linalg::max_abs(&(e.matrix() - CMatrix::identity(6, 6))) < tol::CONSTRUCTION);
    }

    #[test]
    fn exponential_of_diagonal_operator() {
        let spec = spec1(5);
        let n_op = number_operator(&spec).unwrap();
        let tau = 0.37;
        let e = matrix_exponential(&n_op, Complex64::from(-tau)).unwrap();
        for n in 0..5 {
            assert_abs_diff_eq!(
                e.matrix()[(n, n)].re,
                (-tau * n as f64).exp(),
                epsilon = tol::CONSTRUCTION
            );
        }
    }

    #[test]
    fn number_phase_rotation_on_one_photon() {
        // exp(i pi/2 (q^2 + p^2 - 1)) acts as exp(i pi n) on |1>, since |1>
        // is an exact eigenvector of q^2 + p^2 - 1 with eigenvalue 2 once
        // the cutoff exceeds 3.
        let spec = spec1(8);
        let (q, p) = quadratures(&spec).unwrap();
        let gen = q
            .compose(&q)
            .unwrap()
            .add(&p.compose(&p).unwrap())
            .unwrap()
            .add(&ModeOperator::identity(spec).scale(Complex64::from(-1.0)))
            .unwrap();
        let u = matrix_exponential(&gen, Complex64::new(0.0, std::f64::consts::FRAC_PI_2)).unwrap();
        let one = TruncatedState::basis_state(&[1], spec).unwrap();
        let out = u.apply(&one).unwrap();
        // e^{i pi} = -1
        assert!((out.inner(&one).unwrap() + Complex64::from(1.0)).norm() < 1e-10);
    }

    #[test]
    fn pade_and_eigen_routes_agree() {
        let spec = spec1(7);
        let (q, _) = quadratures(&spec).unwrap();
        let q2 = q.compose(&q).unwrap(); // hermitian_hint = false via compose
        let q2_hinted = ModeOperator::new(q2.matrix().clone(), spec, true).unwrap();
        let scale = Complex64::from(-0.31);
        let a = matrix_exponential(&q2, scale).unwrap();
        let b = matrix_exponential(&q2_hinted, scale).unwrap();
        assert!(linalg::max_abs(&(a.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn single_mode_apply_matches_embedding() {
        let nc = 4;
        let single = spec1(nc);
        let multi = TruncationSpec::new(nc, 3).unwrap();
        let (q, _) = quadratures(&single).unwrap();
        let state = {
            let amps = CVector::from_iterator(
                multi.dim(),
                (0..multi.dim()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())),
            );
            TruncatedState::new(amps, multi).unwrap().normalize().unwrap()
        };
        for mode in 0..3 {
            let fast = state.apply_single_mode(mode, q.matrix()).unwrap();
            let slow = embed(&q, mode, &multi).unwrap().apply(&state).unwrap();
            let diff = fast.amplitudes() - slow.amplitudes();
            assert!(diff.norm() < tol::CONSTRUCTION);
        }
    }

    #[test]
    fn dump_round_trips_states() {
        let spec = TruncationSpec::new(3, 2).unwrap();
        let state = {
            let amps = CVector::from_iterator(
                9,
                (0..9).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)),
            );
            TruncatedState::new(amps, spec).unwrap().normalize().unwrap()
        };
        let json = serde_json::to_string(&Dump::from_state(&state)).unwrap();
        let back: Dump = serde_json::from_str(&json).unwrap();
        let restored = back.to_state().unwrap();
        let diff = restored.amplitudes() - state.amplitudes();
        assert!(diff.norm() < tol::CONSTRUCTION);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(TruncationSpec::new(1, 1).is_err());
        assert!(TruncationSpec::new(0, 2).is_err());
        assert!(TruncationSpec::new(10, 0).is_err());
        assert!(TruncationSpec::new(40, 4).is_err());
    }

    proptest! {
        #[test]
        fn normalize_yields_unit_norm(seed in 1u64..5000) {
            // cheap deterministic pseudo-random amplitudes
            let spec = TruncationSpec::new(4, 2).unwrap();
            let dim = spec.dim();
            let amps = CVector::from_iterator(dim, (0..dim).map(|i| {
                let x = ((seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407))) >> 11) as f64
                    / (1u64 << 53) as f64;
                Complex64::new(x - 0.5, (x * 7.0).fract() - 0.5)
            }));
            let state = TruncatedState::new(amps, spec).unwrap();
            prop_assume!(state.norm() > 1e-6);
            let n = state.normalize().unwrap().norm();
            prop_assert!((n - 1.0).abs() < tol::CONSTRUCTION);
        }
    }
}
