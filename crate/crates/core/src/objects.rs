//! Validated states and measurements, random ensembles, and mutually unbiased bases.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs_diff, CMatrix, CVector, HermitianOperator};

/// Minimum eigenvalue accepted as "positive semidefinite".
pub const PSD_TOL: f64 = 1e-12;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Entrywise tolerance for POVM completeness.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Eigenvalue threshold used to count rank.
pub const RANK_TOL: f64 = 1e-10;

fn min_eigenvalue(op: &HermitianOperator) -> f64 {
    op.eigenvalues().first().copied().unwrap_or(0.0)
}

/// Positive semidefinite operator with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianOperator);

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let min = min_eigenvalue(&op);
        if min < -PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        let trace = op.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized { trace });
        }
        Ok(Self(op))
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    /// `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self(HermitianOperator::identity(d).scale(1.0 / d as f64))
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(v: &CVector) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(Error::DegenerateSuperposition { norm });
        }
        Ok(Self(HermitianOperator::outer(&v.unscale(norm))))
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_diagonal(p))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues()
    }

    pub fn rank(&self) -> usize {
        self.0.eig().rank(RANK_TOL)
    }

    /// `sqrt(gamma)` with round-off eigenvalues clamped.
    pub fn sqrt(&self) -> HermitianOperator {
        linalg::sqrt_psd(&self.0).expect("density matrix is PSD by construction")
    }

    /// `Tr(gamma E)`.
    pub fn expectation(&self, e: &HermitianOperator) -> f64 {
        self.0.trace_product(e)
    }
}

/// Ordered list of PSD operators summing to the identity. Outcome `x` is element `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::EmptyPovm);
        };
        let d = first.dim();
        let mut sum = CMatrix::zeros(d, d);
        for e in &elements {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.dim(),
                });
            }
            let min = min_eigenvalue(e);
            if min < -PSD_TOL {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
            sum += e.matrix();
        }
        let defect = max_abs_diff(&sum, &CMatrix::identity(d, d));
        if defect > COMPLETENESS_TOL {
            return Err(Error::Incomplete { defect });
        }
        Ok(Self { elements })
    }

    /// Rank-one projective measurement onto the columns of a unitary.
    pub fn from_basis(u: &CMatrix) -> Result<Self> {
        let elements = (0..u.ncols())
            .map(|j| HermitianOperator::outer(&u.column(j).into_owned()))
            .collect();
        Self::new(elements)
    }

    pub fn computational(d: usize) -> Self {
        Self::from_basis(&CMatrix::identity(d, d)).expect("standard basis is complete")
    }

    /// The single-outcome measurement `{I}`.
    pub fn trivial(d: usize) -> Self {
        Self {
            elements: vec![HermitianOperator::identity(d)],
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn element(&self, x: usize) -> &HermitianOperator {
        &self.elements[x]
    }

    pub fn sqrt_elements(&self) -> Vec<HermitianOperator> {
        self.elements
            .iter()
            .map(|e| linalg::sqrt_psd(e).expect("POVM elements are PSD by construction"))
            .collect()
    }

    /// Every nonzero element has rank one.
    pub fn is_rank_one(&self) -> bool {
        self.elements.iter().all(|e| e.eig().rank(RANK_TOL) <= 1)
    }

    /// Born probabilities `Tr(M_x gamma)`.
    pub fn probabilities(&self, gamma: &DensityMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| gamma.expectation(e)).collect()
    }
}

/// Reproducible random stream: identical `(master_seed, stream_index)` yields identical draws.
///
/// Backed by ChaCha8 with the stream index selecting an independent keystream, so per-trial
/// streams do not depend on scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.stream_index);
        r
    }
}

/// Standard complex Gaussian `(N(0,1) + i N(0,1)) / sqrt(2)`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re * s, im * s)
}

/// `rows x cols` Ginibre matrix, filled column by column.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let data: Vec<_> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Haar-random unitary: QR of a Ginibre matrix with column phases making `diag(R)` positive.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        if n > 0.0 {
            let phase = rjj / n;
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    q
}

/// Hilbert-Schmidt random state `G G^dag / Tr(G G^dag)`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let gg = HermitianOperator::symmetrized(&g * g.adjoint());
    let t = gg.trace();
    DensityMatrix(gg.scale(1.0 / t))
}

/// Haar-random eigenbasis with i.i.d. uniform `[0,1)` eigenvalues, normalized to unit trace.
pub fn random_uniform_spectrum_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let u = haar_unitary(d, rng);
    let mut w: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        w.iter_mut().for_each(|x| *x = 1.0 / d as f64);
    }
    let diag = HermitianOperator::from_diagonal(&w);
    DensityMatrix(diag.conjugate_by(&u))
}

/// Random state ensemble used by the benchmark harness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateEnsemble {
    /// Haar eigenbasis, i.i.d. uniform eigenvalues normalized to unit trace.
    #[default]
    UniformSpectrum,
    /// `G G^dag / Tr` for a square Ginibre `G`.
    HilbertSchmidt,
}

impl StateEnsemble {
    pub fn sample<R: Rng + ?Sized>(self, d: usize, rng: &mut R) -> DensityMatrix {
        match self {
            StateEnsemble::UniformSpectrum => random_uniform_spectrum_state(d, rng),
            StateEnsemble::HilbertSchmidt => random_density_matrix(d, rng),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateEnsemble::UniformSpectrum => "uniform-spectrum",
            StateEnsemble::HilbertSchmidt => "hilbert-schmidt",
        }
    }
}

impl std::str::FromStr for StateEnsemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-spectrum" => Ok(Self::UniformSpectrum),
            "hilbert-schmidt" | "hs" => Ok(Self::HilbertSchmidt),
            other => Err(Error::Config(format!("unknown state ensemble {other:?}"))),
        }
    }
}

/// Haar-random rank-one PVM with `d` outcomes.
pub fn random_pvm<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Povm {
    let u = haar_unitary(d, rng);
    Povm::from_basis(&u).expect("Haar unitary columns form a complete basis")
}

const MAX_FRAME_DRAWS: usize = 8;

/// Gram-normalized Ginibre POVM with `n` outcomes of rank `min(rank, d)`:
/// `M_i = S^{-1/2} G_i G_i^dag S^{-1/2}` with `S = sum_i G_i G_i^dag`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, n: usize, rank: usize, rng: &mut R) -> Result<Povm> {
    if n * rank < d || rank == 0 {
        return Err(Error::Config(format!(
            "need n*rank >= d (n={n}, rank={rank}, d={d})"
        )));
    }
    for _ in 0..MAX_FRAME_DRAWS {
        let frames: Vec<CMatrix> = (0..n).map(|_| ginibre(d, rank, rng)).collect();
        let mut s = CMatrix::zeros(d, d);
        for g in &frames {
            s += g * g.adjoint();
        }
        let s = HermitianOperator::symmetrized(s);
        let eig = s.eig();
        let max = eig.eigenvalues[d - 1];
        if eig.eigenvalues[0] <= 1e-12 * max.max(1.0) {
            continue;
        }
        let s_inv_sqrt = eig.reconstruct_with(|l| 1.0 / l.sqrt());
        let elements: Vec<HermitianOperator> = frames
            .iter()
            .map(|g| {
                let h = s_inv_sqrt.matrix() * g;
                HermitianOperator::symmetrized(&h * h.adjoint())
            })
            .collect();
        return Povm::new(elements);
    }
    Err(Error::SingularFrame {
        attempts: MAX_FRAME_DRAWS,
    })
}

/// Gram-normalized Ginibre frame with rank-one elements; requires `n >= d`.
pub fn random_rank_one_povm<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Povm> {
    if n < d {
        return Err(Error::Config(format!(
            "rank-one POVM needs n >= d (n={n}, d={d})"
        )));
    }
    random_povm(d, n, 1, rng)
}

pub fn is_prime(d: usize) -> bool {
    d >= 2
        && (2..)
            .take_while(|k| k * k <= d)
            .all(|k| !d.is_multiple_of(k))
}

/// Columns `|f_k> = d^{-1/2} sum_j e^{2 pi i jk/d} |j>`.
pub fn fourier_basis(d: usize) -> CMatrix {
    let s = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |j, k| {
        let phase = 2.0 * PI * ((j * k) % d) as f64 / d as f64;
        c(s * phase.cos(), s * phase.sin())
    })
}

/// Computational and Fourier PVMs, mutually unbiased in prime dimension `d`.
pub fn mub_pair(d: usize) -> Result<(Povm, Povm)> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    Ok((Povm::computational(d), Povm::from_basis(&fourier_basis(d))?))
}

/// `(1-p) I/d + p |psi><psi|` with `|psi> ~ cos(theta)|m_x> + sin(theta)|f_x>`, where
/// `|m_x>` is computational and `|f_x>` Fourier basis vector `basis_index`. `theta` in radians.
pub fn counterexample_state(
    d: usize,
    p: f64,
    theta: f64,
    basis_index: usize,
) -> Result<DensityMatrix> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!(
            "mixing weight p = {p} outside [0, 1]"
        )));
    }
    if basis_index >= d {
        return Err(Error::Config(format!(
            "basis index {basis_index} >= d = {d}"
        )));
    }
    let mut v: CVector = fourier_basis(d).column(basis_index).scale(theta.sin());
    v[basis_index] += c(theta.cos(), 0.0);
    let norm = v.norm();
    if norm < 1e-12 {
        return Err(Error::DegenerateSuperposition { norm });
    }
    let psi = HermitianOperator::outer(&v.unscale(norm));
    let mixed = HermitianOperator::identity(d).scale((1.0 - p) / d as f64);
    DensityMatrix::new(mixed.add(&psi.scale(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(i: u64) -> ChaCha8Rng {
        RngStream::new(42, i).rng()
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            DensityMatrix::from_diagonal(&[0.7, 0.7]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            DensityMatrix::from_diagonal(&[1.1, -0.1]),
            Err(Error::NotPsd { .. })
        ));
        let short = vec![
            HermitianOperator::from_diagonal(&[1.0, 0.0]),
            HermitianOperator::from_diagonal(&[0.0, 0.9]),
        ];
        match Povm::new(short) {
            Err(Error::Incomplete { defect }) => assert!((defect - 0.1).abs() < 1e-12),
            other => panic!("expected Incomplete, got {other:?}"),
        }
        assert!(matches!(Povm::new(vec![]), Err(Error::EmptyPovm)));
    }

    #[test]
    fn one_dimensional_draws() {
        let mut r = stream(0);
        let s = random_density_matrix(1, &mut r);
        assert!((s.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        let m = random_pvm(1, &mut r);
        assert_eq!(m.len(), 1);
        assert!((m.element(0).matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = random_density_matrix(3, &mut stream(7));
        let b = random_density_matrix(3, &mut stream(7));
        let c = random_density_matrix(3, &mut stream(8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_states_valid() {
        for i in 0..200 {
            let mut r = stream(i);
            for ens in [
                StateEnsemble::HilbertSchmidt,
                StateEnsemble::UniformSpectrum,
            ] {
                let s = ens.sample(1 + (i as usize % 5), &mut r);
                assert!((s.op().trace() - 1.0).abs() < 1e-10);
                assert!(s.eigenvalues()[0] >= -1e-12);
            }
        }
    }

    #[test]
    fn hilbert_schmidt_mean_is_maximally_mixed() {
        // Monte-Carlo estimate of E[rho] = I/d.
        let d = 3;
        let trials = 10_000;
        let mut acc = CMatrix::zeros(d, d);
        for i in 0..trials {
            acc += random_density_matrix(d, &mut stream(i)).matrix();
        }
        acc /= c(trials as f64, 0.0);
        let target = DensityMatrix::maximally_mixed(d);
        assert!(max_abs_diff(&acc, target.matrix()) < 0.02);
    }

    #[test]
    fn pvm_is_orthonormal_projectors() {
        for i in 0..100 {
            let d = 2 + (i as usize % 4);
            let mut r = stream(i);
            let u = haar_unitary(d, &mut r);
            let gram = u.adjoint() * &u;
            assert!(max_abs_diff(&gram, &CMatrix::identity(d, d)) < 1e-10);
            let m = random_pvm(d, &mut r);
            for e in m.elements() {
                let ev = e.eigenvalues();
                assert!(ev[d - 1] > 1.0 - 1e-10 && ev[d - 2].abs() < 1e-10);
            }
            assert!(m.is_rank_one());
        }
    }

    #[test]
    fn rank_one_povm_properties() {
        for i in 0..100 {
            let d = 2 + (i as usize % 3);
            let n = d + (i as usize % 3);
            let m = random_rank_one_povm(d, n, &mut stream(i)).unwrap();
            assert_eq!(m.len(), n);
            let mut sum = CMatrix::zeros(d, d);
            for e in m.elements() {
                let ev = e.eigenvalues();
                assert!(ev[d - 2] <= 1e-10);
                assert!(ev[0] >= -1e-12);
                sum += e.matrix();
            }
            assert!(max_abs_diff(&sum, &CMatrix::identity(d, d)) < 1e-9);
            assert!(m.is_rank_one());
        }
        assert!(random_rank_one_povm(3, 2, &mut stream(0)).is_err());
    }

    #[test]
    fn full_rank_povm_is_not_rank_one() {
        let m = random_povm(3, 4, 3, &mut stream(1)).unwrap();
        assert!(!m.is_rank_one());
    }

    #[test]
    fn mub_overlaps() {
        for d in [2usize, 3, 5, 7] {
            let (m, n) = mub_pair(d).unwrap();
            let f = fourier_basis(d);
            let mut worst: f64 = 0.0;
            for j in 0..d {
                for k in 0..d {
                    let overlap = f[(j, k)].norm_sqr();
                    worst = worst.max((overlap - 1.0 / d as f64).abs());
                    let tr = m.element(j).trace_product(n.element(k));
                    worst = worst.max((tr - 1.0 / d as f64).abs());
                }
            }
            assert!(worst <= 1e-12, "d={d} worst={worst}");
        }
        assert!(matches!(mub_pair(4), Err(Error::NotPrime(4))));
        assert!(matches!(mub_pair(1), Err(Error::NotPrime(1))));
    }

    #[test]
    fn counterexample_state_cases() {
        let mixed = counterexample_state(3, 0.0, 0.3, 0).unwrap();
        assert!(max_abs_diff(mixed.matrix(), DensityMatrix::maximally_mixed(3).matrix()) < 1e-15);
        let pure = counterexample_state(3, 1.0, 0.0, 0).unwrap();
        assert!(max_abs_diff(pure.matrix(), Povm::computational(3).element(0).matrix()) < 1e-15);
        let s = counterexample_state(3, 0.75, PI / 4.0, 0).unwrap();
        let ev = s.eigenvalues();
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ev[0] >= 0.0);
        assert!(counterexample_state(4, 0.5, 0.0, 0).is_err());
        assert!(counterexample_state(3, 1.5, 0.0, 0).is_err());
    }
}
