//! Dense complex linear algebra on small Hermitian operators.
//!
//! Everything here is a thin, validated layer over `nalgebra`: eigendecomposition with a
//! deterministic ordering and phase convention, spectral matrix functions with an explicit
//! clamp policy, Schatten norms, and the polar unitary of a square matrix.
//!
//! Tolerance policy:
//! - Hermiticity: `max|A - A^dag| <= 1e-10 * max(1, max|A|)`.
//! - Eigenvalues in `[-1e-12, floor)` are clamped to `floor`; anything lower is rejected.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues this far below a clamp floor are treated as round-off.
pub const CLAMP_TOL: f64 = 1e-12;

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn check_finite(a: &CMatrix) -> Result<()> {
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            let z = a[(r, c)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.nrows(),
        });
    }
    Ok(a * b)
}

/// Assembles the block-diagonal matrix `sum_x |x><x| (x) B_x` from `(label, block)` pairs.
///
/// Blocks are placed in ascending label order; labels must be distinct and all blocks must
/// share one square dimension.
pub fn block_diagonal(blocks: &[(usize, CMatrix)]) -> Result<CMatrix> {
    let Some((_, first)) = blocks.first() else {
        return Err(Error::Config("no blocks to assemble".into()));
    };
    let d = check_square(first)?;
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by_key(|&i| blocks[i].0);
    if order.windows(2).any(|w| blocks[w[0]].0 == blocks[w[1]].0) {
        return Err(Error::Config("duplicate block label".into()));
    }
    let n = blocks.len();
    let mut out = CMatrix::zeros(n * d, n * d);
    for (slot, &i) in order.iter().enumerate() {
        let b = &blocks[i].1;
        if check_square(b)? != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: b.nrows(),
            });
        }
        out.view_mut((slot * d, slot * d), (d, d)).copy_from(b);
    }
    Ok(out)
}

/// A square complex matrix equal to its adjoint within tolerance.
///
/// The stored matrix is always exactly Hermitian: construction symmetrizes `(A + A^dag)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(a: CMatrix) -> Result<Self> {
        check_square(&a)?;
        check_finite(&a)?;
        let defect = max_abs_diff(&a, &a.adjoint());
        if defect > HERMITIAN_TOL * max_abs(&a).max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self::symmetrized(a))
    }

    /// Symmetrizes without checking; for matrices Hermitian by construction.
    pub(crate) fn symmetrized(a: CMatrix) -> Self {
        let h = (&a + a.adjoint()).scale(0.5);
        Self(h)
    }

    pub fn identity(d: usize) -> Self {
        Self(CMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(CMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let v = CVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self(CMatrix::from_diagonal(&v))
    }

    /// `|v><v|` (not normalized).
    pub fn outer(v: &CVector) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Real part of the trace (the imaginary part is zero by construction).
    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    /// `B A B^dag` for arbitrary square `B`.
    pub fn conjugate_by(&self, b: &CMatrix) -> Self {
        Self::symmetrized(b * &self.0 * b.adjoint())
    }

    /// `Re Tr(A B)`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        // Tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B.
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    pub fn eig(&self) -> EigenDecomposition {
        eig_symmetrized(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig().eigenvalues
    }

    pub fn sqrt(&self) -> Result<Self> {
        sqrt_psd(self)
    }
}

/// Sorted eigenvalues with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    /// `V diag(f(lambda)) V^dag`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let d = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let y = f(lam);
            for i in 0..d {
                scaled[(i, j)] *= y;
            }
        }
        HermitianOperator::symmetrized(scaled * v.adjoint())
    }

    pub fn column(&self, j: usize) -> CVector {
        self.eigenvectors.column(j).into_owned()
    }

    /// Number of eigenvalues strictly above `eps`.
    pub fn rank(&self, eps: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > eps).count()
    }
}

/// Eigendecomposition of a Hermitian operator: ascending eigenvalues, eigenvector phases fixed
/// so that the first non-negligible component is real and positive.
pub fn eig_hermitian(a: &HermitianOperator) -> EigenDecomposition {
    a.eig()
}

/// Validating variant for raw matrices.
pub fn eig_hermitian_matrix(a: &CMatrix) -> Result<EigenDecomposition> {
    Ok(HermitianOperator::new(a.clone())?.eig())
}

fn eig_symmetrized(a: &CMatrix) -> EigenDecomposition {
    let d = a.nrows();
    let se = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let mut vecs = CMatrix::zeros(d, d);
    let mut vals = Vec::with_capacity(d);
    for (k, &i) in order.iter().enumerate() {
        vals.push(se.eigenvalues[i]);
        let mut col = se.eigenvectors.column(i).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
        if let Some(z) = col.iter().find(|z| z.norm() > 1e-10).copied() {
            let phase = z.conj() / z.norm();
            col *= phase;
        }
        vecs.set_column(k, &col);
    }
    EigenDecomposition {
        eigenvalues: vals,
        eigenvectors: vecs,
    }
}

/// Applies `f` spectrally: `V f(diag(lambda)) V^dag`.
///
/// With `clamp_floor = Some(c)`, eigenvalues in `[c - 1e-12, c)` become `c` and anything lower
/// is a [`Error::NotPsd`] (reporting the eigenvalue). A non-finite `f(lambda)` is a
/// [`Error::Domain`].
pub fn matrix_function(
    a: &HermitianOperator,
    f: impl Fn(f64) -> f64,
    clamp_floor: Option<f64>,
) -> Result<HermitianOperator> {
    let mut eig = a.eig();
    if let Some(floor) = clamp_floor {
        for lam in eig.eigenvalues.iter_mut() {
            if *lam < floor {
                if *lam >= floor - CLAMP_TOL {
                    *lam = floor;
                } else {
                    return Err(Error::NotPsd {
                        min_eigenvalue: *lam,
                    });
                }
            }
        }
    }
    for &lam in &eig.eigenvalues {
        if !f(lam).is_finite() {
            return Err(Error::Domain { eigenvalue: lam });
        }
    }
    Ok(eig.reconstruct_with(f))
}

/// Eigenvalues below this fraction of the largest magnitude are treated as rounding noise by
/// fractional powers, which would otherwise inflate them (`(1e-16)^(1/2) = 1e-8`).
pub const ROUNDING_REL: f64 = 1e-14;

/// PSD square root. Eigenvalues within rounding noise of zero are set to zero first, otherwise a
/// computed `1e-17` on the kernel of a projector would come back as a `3e-9` component.
pub fn sqrt_psd(a: &HermitianOperator) -> Result<HermitianOperator> {
    let eig = a.eig();
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -CLAMP_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let noise = ROUNDING_REL * eig.eigenvalues.iter().fold(0.0, |m: f64, l| m.max(l.abs()));
    Ok(eig.reconstruct_with(|l| if l <= noise { 0.0 } else { l.sqrt() }))
}

/// `A^p` restricted to the support of `A` (eigenvalues `<= eps` map to zero). Negative
/// powers give the Moore-Penrose-style pseudo-power.
pub fn power_on_support(a: &HermitianOperator, p: f64, eps: f64) -> HermitianOperator {
    a.eig()
        .reconstruct_with(|l| if l > eps { l.powf(p) } else { 0.0 })
}

/// `log2 A` on the support of `A`; zero on the kernel.
pub fn log2_on_support(a: &HermitianOperator, eps: f64) -> HermitianOperator {
    a.eig()
        .reconstruct_with(|l| if l > eps { l.log2() } else { 0.0 })
}

/// Projector onto the span of eigenvectors with eigenvalue `<= eps`.
pub fn kernel_projector(a: &HermitianOperator, eps: f64) -> HermitianOperator {
    a.eig()
        .reconstruct_with(|l| if l > eps { 0.0 } else { 1.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schatten {
    One,
    Two,
    Inf,
}

/// Singular values in ascending order, as square roots of the spectrum of `A^dag A`.
///
/// nalgebra's complex SVD only reconstructs rank-deficient inputs to about 1e-8, which is too
/// coarse for the polar checks downstream, so everything goes through the Hermitian solver.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    gram_eig(a)
        .eigenvalues
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

fn gram_eig(a: &CMatrix) -> EigenDecomposition {
    eig_symmetrized(&HermitianOperator::symmetrized(a.adjoint() * a).0)
}

pub fn schatten_norm(a: &CMatrix, p: Schatten) -> f64 {
    match p {
        Schatten::Two => a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        Schatten::One => singular_values(a).iter().sum(),
        Schatten::Inf => singular_values(a).into_iter().fold(0.0, f64::max),
    }
}

/// Unitary factor `U` of the polar decomposition `A = U (A^dag A)^{1/2}`.
///
/// With `A^dag A = V S^2 V^dag`, the columns of `W` are `A v_i` orthonormalized in order of
/// decreasing `s_i`, topped up from the standard basis when `A` is singular, and `U = W V^dag`.
/// Directions with negligible `s_i` only affect `U` on the (numerical) kernel.
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    check_finite(a)?;
    let d = a.nrows();
    let e = gram_eig(a);
    let s_max = e.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let cutoff = s_max * 1e-12;
    let mut w = CMatrix::zeros(d, d);
    let mut basis: Vec<CVector> = Vec::with_capacity(d);
    let mut pending = Vec::new();
    for i in (0..d).rev() {
        let s = e.eigenvalues[i].max(0.0).sqrt();
        let col = if s > cutoff {
            orthonormalize(a * e.column(i), &basis)
        } else {
            None
        };
        match col {
            Some(c) => {
                w.set_column(i, &c);
                basis.push(c);
            }
            None => pending.push(i),
        }
    }
    let mut k = 0;
    for i in pending {
        let c = loop {
            if k >= d {
                return Err(Error::Internal("could not complete polar basis".into()));
            }
            let mut unit = CVector::zeros(d);
            unit[k] = Complex64::new(1.0, 0.0);
            k += 1;
            if let Some(c) = orthonormalize(unit, &basis) {
                break c;
            }
        };
        w.set_column(i, &c);
        basis.push(c);
    }
    Ok(w * e.eigenvectors.adjoint())
}

/// Two passes of Gram-Schmidt against an orthonormal set; `None` if little of `v` survives.
fn orthonormalize(mut v: CVector, basis: &[CVector]) -> Option<CVector> {
    let start = v.norm();
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let overlap = b.dotc(&v);
            v -= b * overlap;
        }
    }
    let norm = v.norm();
    (norm > 1e-3 * start).then(|| v.unscale(norm))
}

/// `max|U^dag U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let d = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(d, d))
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
