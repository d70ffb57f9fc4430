//! Dense linear-algebra kernels shared by the simulator and the oracle:
//! Hermitian eigendecomposition, structured matrix exponentials, and a
//! scaling-and-squaring fallback for general matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

/// Diagonalize a Hermitian matrix. The caller is responsible for
/// hermiticity; only finiteness is checked here.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite("hermitian eigendecomposition input"));
    }
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// exp(scale * M) for Hermitian M, via eigendecomposition. Exact for any
/// complex `scale` since the eigenbasis is shared.
pub fn expm_hermitian(m: &CMatrix, scale: Complex64) -> Result<CMatrix> {
    let eig = hermitian_eigen(m)?;
    Ok(expm_from_eigen(&eig, scale))
}

/// exp(scale * M) assembled from a precomputed eigendecomposition of M.
pub fn expm_from_eigen(eig: &HermitianEigen, scale: Complex64) -> CMatrix {
    let phases = CVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| (scale * l).exp()),
    );
    scaled_columns(&eig.vectors, &phases) * eig.vectors.adjoint()
}

/// V * diag(d): each column of V scaled by the matching entry of d.
pub fn scaled_columns(v: &CMatrix, d: &CVector) -> CMatrix {
    let mut out = v.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

/// Maximum entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, c| acc.max(c.norm()))
}

/// Deviation from hermiticity in the max-norm.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// exp(M) for a general square matrix: degree-13 Pade approximant with
/// scaling and squaring.
pub fn expm_pade(m: &CMatrix) -> Result<CMatrix> {
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    const THETA_13: f64 = 5.371_920_351_148_152;
    #[rustfmt::skip]
    const B: [f64; 14] = [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ];

    let n = m.nrows();
    let norm = one_norm(m);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let a = m / Complex64::from(2f64.powi(s as i32));

    let b = |i: usize| Complex64::from(B[i]);
    let ident = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &ident * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &ident * b(0);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut f = lhs
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonFinite("singular Pade denominator"))?;
    for _ in 0..s {
        f = &f * &f;
    }
    Ok(f)
}

/// Kronecker product, left factor slowest-varying.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
