//! Entropic uncertainty bounds built on the retrodictive joint distribution.
//!
//! - `eur1 = -log2 max_{x,y} Pr{y <- x}`
//! - `eur2 = H(gamma) + max{ D(gamma || gamma~), D(gamma || eta~) }`, valid when `gamma`, `M`
//!   or `N` is rank-one
//! - `eur3 = H(gamma) - log2 max_{x,y} ||sqrt(N_y) sqrt(M_x)||_inf^2` (the Berta et al. form)
//!
//! `gamma~` and `eta~` come from the instrument that swaps `sqrt(M_x) sqrt(gamma)` into
//! `sqrt(gamma) sqrt(M_x)` through the polar unitary of `sqrt(gamma) sqrt(M_x)`, followed by the
//! square-root instrument of the other POVM.

use serde::{Deserialize, Serialize};

use crate::divergences::{operator_entropy, shannon_entropy, umegaki, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs_diff, CMatrix, HermitianOperator, Schatten};
use crate::objects::{DensityMatrix, Povm};
use crate::retrodiction::{joint_from_blocks, sandwich_all, RetroJoint};

/// Maximum tolerated defect of the polar identity `U sqrt(M) g sqrt(M) U^dag = sqrt(g) M sqrt(g)`.
pub const POLAR_TOL: f64 = 1e-8;
/// Slack used when checking `H(M) + H(N) >= bound`.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Which expression is used for the third bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Eur3Form {
    /// `H(gamma) - log2 c`.
    #[default]
    Log,
    /// `H(gamma) - c`, without the logarithm.
    Literal,
}

/// State, measurements and their square roots, computed once.
pub struct Triple<'a> {
    pub gamma: &'a DensityMatrix,
    pub m: &'a Povm,
    pub n: &'a Povm,
    sqrt_gamma: HermitianOperator,
    sqrt_m: Vec<HermitianOperator>,
    sqrt_n: Vec<HermitianOperator>,
    /// `sqrt(gamma) M_x sqrt(gamma)`.
    fwd_m: Vec<HermitianOperator>,
    /// `sqrt(gamma) N_y sqrt(gamma)`.
    fwd_n: Vec<HermitianOperator>,
}

impl<'a> Triple<'a> {
    pub fn new(gamma: &'a DensityMatrix, m: &'a Povm, n: &'a Povm) -> Result<Self> {
        for p in [m, n] {
            if p.dim() != gamma.dim() {
                return Err(Error::DimensionMismatch {
                    expected: gamma.dim(),
                    got: p.dim(),
                });
            }
        }
        let sqrt_gamma = gamma.sqrt();
        let fwd_m = sandwich_all(&sqrt_gamma, m);
        let fwd_n = sandwich_all(&sqrt_gamma, n);
        Ok(Self {
            gamma,
            m,
            n,
            sqrt_m: m.sqrt_elements(),
            sqrt_n: n.sqrt_elements(),
            sqrt_gamma,
            fwd_m,
            fwd_n,
        })
    }

    pub fn joint(&self) -> Result<RetroJoint> {
        joint_from_blocks(&self.fwd_m, self.n)
    }

    /// Polar unitaries `U_x` with `sqrt(gamma) sqrt(E_x) = U_x |sqrt(gamma) sqrt(E_x)|`, checked
    /// against the defining identity.
    fn polar_unitaries(
        &self,
        sqrt_e: &[HermitianOperator],
        e: &Povm,
        fwd: &[HermitianOperator],
    ) -> Result<Vec<CMatrix>> {
        let g = self.gamma.matrix();
        sqrt_e
            .iter()
            .zip(e.elements())
            .zip(fwd)
            .enumerate()
            .map(|(x, ((se, _), target))| {
                let a = self.sqrt_gamma.matrix() * se.matrix();
                let u = linalg::polar_unitary(&a)?;
                let moved = &u * se.matrix() * g * se.matrix() * u.adjoint();
                let defect = max_abs_diff(&moved, target.matrix());
                if defect > POLAR_TOL {
                    return Err(Error::Internal(format!(
                        "polar identity for outcome {x} off by {defect:e}"
                    )));
                }
                Ok(u)
            })
            .collect()
    }

    /// `sum_{x,y} sqrt(F_x) U_x^dag G_y A_x G_y U_x sqrt(F_x)` where `F` is measured first,
    /// `A_x = sqrt(gamma) F_x sqrt(gamma)` and `G` is the second POVM.
    fn instrument_state(&self, first_first: bool) -> Result<HermitianOperator> {
        let (sqrt_f, f, fwd_f, g) = if first_first {
            (&self.sqrt_m, self.m, &self.fwd_m, self.n)
        } else {
            (&self.sqrt_n, self.n, &self.fwd_n, self.m)
        };
        let units = self.polar_unitaries(sqrt_f, f, fwd_f)?;
        let d = self.gamma.dim();
        let mut acc = CMatrix::zeros(d, d);
        for ((sf, u), a) in sqrt_f.iter().zip(&units).zip(fwd_f) {
            let mut inner = CMatrix::zeros(d, d);
            for gy in g.elements() {
                inner += gy.matrix() * a.matrix() * gy.matrix();
            }
            let k = sf.matrix() * u.adjoint();
            acc += &k * inner * k.adjoint();
        }
        Ok(HermitianOperator::symmetrized(acc))
    }

    pub fn gamma_tilde(&self) -> Result<HermitianOperator> {
        self.instrument_state(true)
    }

    pub fn eta_tilde(&self) -> Result<HermitianOperator> {
        self.instrument_state(false)
    }

    /// Unnormalized post-measurement cells `sqrt(N_y) sqrt(gamma) M_x sqrt(gamma) sqrt(N_y)`,
    /// indexed `[x][y]`.
    pub fn instrument_cells(&self) -> Vec<Vec<HermitianOperator>> {
        self.fwd_m
            .iter()
            .map(|a| {
                self.sqrt_n
                    .iter()
                    .map(|sn| a.conjugate_by(sn.matrix()))
                    .collect()
            })
            .collect()
    }

    /// `max_{x,y} ||sqrt(N_y) sqrt(M_x)||_inf^2`.
    pub fn max_overlap(&self) -> f64 {
        let mut c: f64 = 0.0;
        for sm in &self.sqrt_m {
            for sn in &self.sqrt_n {
                let prod = sn.matrix() * sm.matrix();
                c = c.max(linalg::schatten_norm(&prod, Schatten::Inf).powi(2));
            }
        }
        c
    }

    /// `gamma`, `M` or `N` rank-one.
    pub fn rank_one_condition(&self) -> bool {
        self.gamma.rank() <= 1 || self.m.is_rank_one() || self.n.is_rank_one()
    }
}

fn eur1_from_joint(joint: &RetroJoint) -> Result<f64> {
    let max = joint.max_entry();
    if max <= 0.0 {
        return Err(Error::Internal(
            "retrodictive joint is identically zero".into(),
        ));
    }
    Ok(-max.log2())
}

fn eur3_from(h_gamma: f64, overlap: f64, form: Eur3Form) -> f64 {
    match form {
        Eur3Form::Log => h_gamma - overlap.log2(),
        Eur3Form::Literal => h_gamma - overlap,
    }
}

fn eur2_from(
    h_gamma: f64,
    gamma: &DensityMatrix,
    gt: &HermitianOperator,
    et: &HermitianOperator,
) -> f64 {
    let d1 = umegaki(gamma.op(), gt);
    let d2 = umegaki(gamma.op(), et);
    h_gamma + d1.max(d2)
}

/// `-log2 max_{x,y} ||sqrt(N_y) sqrt(gamma) sqrt(M_x)||_2^2`.
pub fn eur1(gamma: &DensityMatrix, m: &Povm, n: &Povm) -> Result<f64> {
    eur1_from_joint(&Triple::new(gamma, m, n)?.joint()?)
}

/// `gamma~`: PSD with trace at most one.
pub fn instrument_state_mn(gamma: &DensityMatrix, m: &Povm, n: &Povm) -> Result<HermitianOperator> {
    Triple::new(gamma, m, n)?.gamma_tilde()
}

/// `eta~`: the same construction with `N` measured first.
pub fn instrument_state_nm(gamma: &DensityMatrix, m: &Povm, n: &Povm) -> Result<HermitianOperator> {
    Triple::new(gamma, m, n)?.eta_tilde()
}

/// Second bound; `+inf` when `gamma` is not supported inside `gamma~` or `eta~`. Computed
/// regardless of the rank-one condition (see [`EurRecord::rank_one_condition`]).
pub fn eur2(gamma: &DensityMatrix, m: &Povm, n: &Povm) -> Result<f64> {
    let t = Triple::new(gamma, m, n)?;
    Ok(eur2_from(
        von_neumann_entropy(gamma),
        gamma,
        &t.gamma_tilde()?,
        &t.eta_tilde()?,
    ))
}

pub fn eur3(gamma: &DensityMatrix, m: &Povm, n: &Povm, form: Eur3Form) -> Result<f64> {
    let t = Triple::new(gamma, m, n)?;
    Ok(eur3_from(von_neumann_entropy(gamma), t.max_overlap(), form))
}

/// Groenewold-Ozawa information gain of the `M -> N` instrument on `gamma`.
pub fn go_information_gain(gamma: &DensityMatrix, m: &Povm, n: &Povm) -> Result<f64> {
    let t = Triple::new(gamma, m, n)?;
    let mut average = 0.0;
    for row in t.instrument_cells() {
        for cell in row {
            let p = cell.trace();
            if p <= crate::retrodiction::PROB_FLOOR {
                continue;
            }
            average += p * operator_entropy(&cell.scale(1.0 / p));
        }
    }
    Ok(von_neumann_entropy(gamma) - average)
}

/// All bounds and entropies for one `(gamma, M, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EurRecord {
    pub h_m: f64,
    pub h_n: f64,
    pub h_gamma: f64,
    pub r_mutual: f64,
    pub eur1: f64,
    pub eur2: f64,
    pub eur3: f64,
    /// `eur1 - eur3`.
    pub gap13: f64,
    /// `eur2 - eur3`.
    pub gap23: f64,
    /// `eur2 - eur1`.
    pub gap21: f64,
    /// `gamma`, `M` or `N` rank-one: `eur2` is a proven bound.
    pub rank_one_condition: bool,
    /// `M` or `N` rank-one: `eur3` is a proven bound.
    pub eur3_applicable: bool,
    pub eur2_finite: bool,
}

impl EurRecord {
    pub fn entropy_sum(&self) -> f64 {
        self.h_m + self.h_n
    }

    /// First bound that `H(M) + H(N)` fails to dominate (within `tol`), if any.
    pub fn validity_violation(&self, tol: f64) -> Option<(&'static str, f64)> {
        let lhs = self.entropy_sum();
        let mut checks = vec![("eur1", self.eur1)];
        if self.rank_one_condition && self.eur2_finite {
            checks.push(("eur2", self.eur2));
        }
        if self.eur3_applicable {
            checks.push(("eur3", self.eur3));
        }
        checks.into_iter().find(|(_, b)| lhs < b - tol)
    }
}

pub fn eur_record(gamma: &DensityMatrix, m: &Povm, n: &Povm, form: Eur3Form) -> Result<EurRecord> {
    let t = Triple::new(gamma, m, n)?;
    let joint = t.joint()?;
    let h_gamma = von_neumann_entropy(gamma);
    let eur1 = eur1_from_joint(&joint)?;
    let eur2 = eur2_from(h_gamma, gamma, &t.gamma_tilde()?, &t.eta_tilde()?);
    let eur3 = eur3_from(h_gamma, t.max_overlap(), form);
    let m_rank_one = m.is_rank_one();
    let n_rank_one = n.is_rank_one();
    Ok(EurRecord {
        h_m: shannon_entropy(joint.row_marginal()),
        h_n: shannon_entropy(joint.col_marginal()),
        h_gamma,
        r_mutual: joint.mutual_information(),
        eur1,
        eur2,
        eur3,
        gap13: eur1 - eur3,
        gap23: eur2 - eur3,
        gap21: eur2 - eur1,
        rank_one_condition: m_rank_one || n_rank_one || gamma.rank() <= 1,
        eur3_applicable: m_rank_one || n_rank_one,
        eur2_finite: eur2.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CVector};
    use crate::objects::{
        mub_pair, random_density_matrix, random_povm, random_pvm, random_rank_one_povm, RngStream,
    };

    fn comp(d: usize) -> Povm {
        Povm::computational(d)
    }

    #[test]
    fn eur1_examples() {
        let (m, n) = mub_pair(2).unwrap();
        let g = DensityMatrix::maximally_mixed(2);
        assert!((eur1(&g, &m, &n).unwrap() - 2.0).abs() < 1e-12);
        let rec = eur_record(&g, &m, &n, Eur3Form::Log).unwrap();
        assert!((rec.entropy_sum() - 2.0).abs() < 1e-12);

        let zero = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(eur1(&zero, &comp(2), &comp(2)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn instrument_state_examples() {
        let g = DensityMatrix::maximally_mixed(2);
        let gt = instrument_state_mn(&g, &comp(2), &comp(2)).unwrap();
        assert!(max_abs_diff(gt.matrix(), g.matrix()) < 1e-12);

        let zero = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let gt = instrument_state_mn(&zero, &comp(2), &comp(2)).unwrap();
        assert!(max_abs_diff(gt.matrix(), zero.matrix()) < 1e-12);
        let et = instrument_state_nm(&zero, &comp(2), &comp(2)).unwrap();
        assert!(max_abs_diff(et.matrix(), zero.matrix()) < 1e-12);
    }

    #[test]
    fn eur2_examples() {
        let g = DensityMatrix::maximally_mixed(2);
        let rec = eur_record(&g, &comp(2), &comp(2), Eur3Form::Log).unwrap();
        assert!((rec.eur2 - 1.0).abs() < 1e-12);
        assert!((rec.entropy_sum() - 2.0).abs() < 1e-12);

        let zero = DensityMatrix::from_diagonal(&[0.0, 1.0, 0.0]).unwrap();
        let rec = eur_record(&zero, &comp(3), &comp(3), Eur3Form::Log).unwrap();
        assert!(rec.eur2.abs() < 1e-12);
        assert!(rec.entropy_sum().abs() < 1e-12);
    }

    #[test]
    fn eur3_examples() {
        let (m, n) = mub_pair(2).unwrap();
        let g = DensityMatrix::maximally_mixed(2);
        assert!((eur3(&g, &m, &n, Eur3Form::Log).unwrap() - 2.0).abs() < 1e-12);
        assert!((eur3(&g, &m, &n, Eur3Form::Literal).unwrap() - 0.5).abs() < 1e-12);
        let zero = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(
            eur3(&zero, &comp(2), &comp(2), Eur3Form::Log)
                .unwrap()
                .abs()
                < 1e-12
        );
        for d in [3usize, 5] {
            let (m, n) = mub_pair(d).unwrap();
            for i in 0..5 {
                let g = random_density_matrix(d, &mut RngStream::new(1, i).rng());
                let expect = von_neumann_entropy(&g) + (d as f64).log2();
                assert!((eur3(&g, &m, &n, Eur3Form::Log).unwrap() - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn go_gain_examples() {
        for i in 0..30 {
            let mut r = RngStream::new(2, i).rng();
            let g = random_density_matrix(3, &mut r);
            let m = random_rank_one_povm(3, 4, &mut r).unwrap();
            let n = random_pvm(3, &mut r);
            let go = go_information_gain(&g, &m, &n).unwrap();
            assert!((go - von_neumann_entropy(&g)).abs() < 1e-9);

            let mf = random_povm(3, 3, 3, &mut r).unwrap();
            let nf = random_povm(3, 4, 2, &mut r).unwrap();
            let go = go_information_gain(&g, &mf, &nf).unwrap();
            assert!(go <= von_neumann_entropy(&g) + 1e-9);
        }
        let v = CVector::from_vec(vec![c(0.5, 0.5), c(0.5, -0.5)]);
        let psi = DensityMatrix::pure(&v).unwrap();
        let (m, n) = mub_pair(2).unwrap();
        assert!(go_information_gain(&psi, &m, &n).unwrap().abs() < 1e-9);
    }

    #[test]
    fn instrument_reproduces_joint() {
        for i in 0..50 {
            let mut r = RngStream::new(3, i).rng();
            let g = random_density_matrix(3, &mut r);
            let m = random_rank_one_povm(3, 5, &mut r).unwrap();
            let n = random_povm(3, 3, 2, &mut r).unwrap();
            let t = Triple::new(&g, &m, &n).unwrap();
            let joint = t.joint().unwrap();
            let mut total = 0.0;
            for (x, row) in t.instrument_cells().iter().enumerate() {
                for (y, cell) in row.iter().enumerate() {
                    assert!((cell.trace() - joint.get(x, y)).abs() < 1e-10);
                    total += cell.trace();
                }
            }
            assert!((total - 1.0).abs() < 1e-9);
            for s in [t.gamma_tilde().unwrap(), t.eta_tilde().unwrap()] {
                assert!(s.trace() <= 1.0 + 1e-9);
                assert!(s.eigenvalues()[0] >= -1e-12);
            }
        }
    }

    #[test]
    fn bounds_hold_on_random_pvms() {
        for i in 0..300 {
            let mut r = RngStream::new(4, i).rng();
            let d = 2 + (i as usize % 3);
            let g = random_density_matrix(d, &mut r);
            let m = random_pvm(d, &mut r);
            let n = random_pvm(d, &mut r);
            let rec = eur_record(&g, &m, &n, Eur3Form::Log).unwrap();
            assert!(rec.rank_one_condition && rec.eur3_applicable);
            assert_eq!(rec.validity_violation(VALIDITY_TOL), None, "{rec:?}");
            assert!(rec.eur2 >= rec.eur1 - 1e-9, "{rec:?}");
        }
    }

    #[test]
    fn validity_check_flags_violations() {
        let mut rec = eur_record(
            &DensityMatrix::maximally_mixed(2),
            &comp(2),
            &comp(2),
            Eur3Form::Log,
        )
        .unwrap();
        assert_eq!(rec.validity_violation(VALIDITY_TOL), None);
        rec.eur1 = rec.entropy_sum() + 1e-6;
        assert_eq!(
            rec.validity_violation(VALIDITY_TOL).map(|v| v.0),
            Some("eur1")
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            eur1(&g, &comp(2), &comp(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
