//! Minimum-change retrodiction for measurement channels.
//!
//! Given a prior `gamma` and a POVM `M`, the retrodicted state for outcome `x` is the quantum
//! Bayesian inverse `sqrt(gamma) M_x sqrt(gamma) / Tr(gamma M_x)`. Pairing it with a second
//! POVM `N` gives the retrodictive joint `Pr{y <- x} = Tr(N_y sqrt(gamma) M_x sqrt(gamma))`,
//! which is symmetric under `M <-> N` and has both Born distributions as marginals.

use nalgebra::DMatrix;

use crate::divergences::shannon_entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianOperator};
use crate::objects::{DensityMatrix, Povm, PSD_TOL};

/// Outcome probabilities at or below this are treated as impossible.
pub const PROB_FLOOR: f64 = 1e-12;
/// Largest tolerated imaginary part of a joint probability.
pub const IMAG_TOL: f64 = 1e-9;

fn check_dims(gamma: &DensityMatrix, povms: &[&Povm]) -> Result<()> {
    for p in povms {
        if p.dim() != gamma.dim() {
            return Err(Error::DimensionMismatch {
                expected: gamma.dim(),
                got: p.dim(),
            });
        }
    }
    Ok(())
}

/// Classical-quantum state `sum_x |x><x| (x) B_x`, stored as its blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct CqState {
    labels: Vec<usize>,
    blocks: Vec<HermitianOperator>,
}

impl CqState {
    pub fn new(labels: Vec<usize>, blocks: Vec<HermitianOperator>) -> Result<Self> {
        if labels.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: blocks.len(),
            });
        }
        let Some(first) = blocks.first() else {
            return Err(Error::Config("cq state needs at least one block".into()));
        };
        let d = first.dim();
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate cq label".into()));
        }
        let mut total = 0.0;
        for b in &blocks {
            if b.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: b.dim(),
                });
            }
            let min = b.eigenvalues()[0];
            if min < -PSD_TOL {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
            total += b.trace();
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { trace: total });
        }
        Ok(Self { labels, blocks })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn blocks(&self) -> &[HermitianOperator] {
        &self.blocks
    }

    /// Dimension of the quantum factor.
    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    /// Distribution over labels: the block traces.
    pub fn label_marginal(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace()).collect()
    }

    /// Partial trace over the label register: `sum_x B_x`.
    pub fn quantum_marginal(&self) -> HermitianOperator {
        let d = self.dim();
        let sum = self
            .blocks
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, b| acc + b.matrix());
        HermitianOperator::symmetrized(sum)
    }

    /// The full `|X| d x |X| d` block-diagonal matrix.
    pub fn to_matrix(&self) -> CMatrix {
        let pairs: Vec<(usize, CMatrix)> = self
            .labels
            .iter()
            .zip(&self.blocks)
            .map(|(&l, b)| (l, b.matrix().clone()))
            .collect();
        linalg::block_diagonal(&pairs).expect("validated at construction")
    }
}

/// `sqrt(gamma) E sqrt(gamma)` for each element.
pub(crate) fn sandwich_all(sqrt_gamma: &HermitianOperator, m: &Povm) -> Vec<HermitianOperator> {
    m.elements()
        .iter()
        .map(|e| e.conjugate_by(sqrt_gamma.matrix()))
        .collect()
}

/// Quantum Bayesian inverse for outcome `x`.
pub fn bayesian_inverse(gamma: &DensityMatrix, m: &Povm, x: usize) -> Result<DensityMatrix> {
    check_dims(gamma, &[m])?;
    if x >= m.len() {
        return Err(Error::Config(format!(
            "outcome {x} out of range (POVM has {})",
            m.len()
        )));
    }
    let probability = gamma.expectation(m.element(x));
    if probability <= PROB_FLOOR {
        return Err(Error::ZeroProbability {
            outcome: x,
            probability,
        });
    }
    let block = m.element(x).conjugate_by(gamma.sqrt().matrix());
    DensityMatrix::new(block.scale(1.0 / block.trace()))
}

/// Forward state `gamma_XQ = sum_x |x><x| (x) sqrt(gamma) M_x sqrt(gamma)`.
pub fn forward_state(gamma: &DensityMatrix, m: &Povm) -> Result<CqState> {
    check_dims(gamma, &[m])?;
    let blocks = sandwich_all(&gamma.sqrt(), m);
    CqState::new((0..m.len()).collect(), blocks)
}

/// Retrodictive joint distribution `Pr{y <- x}` over `X x Y` with its marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct RetroJoint {
    probs: DMatrix<f64>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

impl RetroJoint {
    /// Builds from raw cell values, clamping `[-1e-12, 1e-12]` to zero.
    pub fn from_cells(mut probs: DMatrix<f64>) -> Result<Self> {
        for v in probs.iter_mut() {
            if *v < -PROB_FLOOR {
                return Err(Error::Internal(format!("negative joint probability {v:e}")));
            }
            if *v <= PROB_FLOOR {
                *v = 0.0;
            }
        }
        let row_marginal = probs.row_iter().map(|r| r.sum()).collect();
        let col_marginal = probs.column_iter().map(|c| c.sum()).collect();
        Ok(Self {
            probs,
            row_marginal,
            col_marginal,
        })
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[(x, y)]
    }

    pub fn rows(&self) -> usize {
        self.probs.nrows()
    }

    pub fn cols(&self) -> usize {
        self.probs.ncols()
    }

    /// `p(x)`.
    pub fn row_marginal(&self) -> &[f64] {
        &self.row_marginal
    }

    /// `q(y)`.
    pub fn col_marginal(&self) -> &[f64] {
        &self.col_marginal
    }

    pub fn total(&self) -> f64 {
        self.probs.sum()
    }

    pub fn max_entry(&self) -> f64 {
        self.probs.max()
    }

    pub fn transpose(&self) -> Self {
        Self {
            probs: self.probs.transpose(),
            row_marginal: self.col_marginal.clone(),
            col_marginal: self.row_marginal.clone(),
        }
    }

    /// `H(XY)` in bits.
    pub fn joint_entropy(&self) -> f64 {
        shannon_entropy(self.probs.as_slice())
    }

    /// `I(X;Y) = sum p(x,y) log2(p(x,y) / (p(x) q(y)))` in bits, from the exact marginals.
    pub fn mutual_information(&self) -> f64 {
        let mut i = 0.0;
        for (x, px) in self.row_marginal.iter().enumerate() {
            for (y, qy) in self.col_marginal.iter().enumerate() {
                let pxy = self.probs[(x, y)];
                if pxy > 0.0 {
                    i += pxy * (pxy / (px * qy)).log2();
                }
            }
        }
        i
    }

    /// Rows as nested vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.probs
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// `Tr(N_y A_x)` for all cells, with the imaginary residue checked.
pub(crate) fn joint_from_blocks(
    forward_blocks: &[HermitianOperator],
    n: &Povm,
) -> Result<RetroJoint> {
    let mut cells = DMatrix::zeros(forward_blocks.len(), n.len());
    for (x, a) in forward_blocks.iter().enumerate() {
        for (y, ny) in n.elements().iter().enumerate() {
            let t = linalg::trace(&(ny.matrix() * a.matrix()));
            if t.im.abs() > IMAG_TOL {
                return Err(Error::Internal(format!(
                    "joint probability ({x},{y}) has imaginary part {:e}",
                    t.im
                )));
            }
            cells[(x, y)] = t.re;
        }
    }
    RetroJoint::from_cells(cells)
}

/// `Pr{y <- x} = Re Tr(N_y sqrt(gamma) M_x sqrt(gamma))`.
pub fn retro_joint(gamma: &DensityMatrix, m: &Povm, n: &Povm) -> Result<RetroJoint> {
    check_dims(gamma, &[m, n])?;
    joint_from_blocks(&sandwich_all(&gamma.sqrt(), m), n)
}

/// Mutual information (bits) of the retrodictive joint of `M` and `N`.
pub fn mutual_retrodictability(gamma: &DensityMatrix, m: &Povm, n: &Povm) -> Result<f64> {
    Ok(retro_joint(gamma, m, n)?.mutual_information())
}
