//! Entropies and quantum divergences, all in bits.
//!
//! Divergences accept PSD arguments that need not be normalized; the second argument may be
//! singular. Inverse and negative powers of `B` act on its support (eigenvalues above
//! [`SUPPORT_EPS`]); when the support of `A` is not contained in that of `B` the value is
//! `f64::INFINITY` (for the Petz and sandwiched families only when `alpha > 1`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianOperator, CLAMP_TOL};
use crate::objects::DensityMatrix;
use crate::retrodiction::CqState;

/// Eigenvalue threshold deciding support membership.
pub const SUPPORT_EPS: f64 = 1e-10;
/// Probabilities at or below this contribute nothing to entropies.
pub const ENTROPY_FLOOR: f64 = 1e-12;

/// Probability vector: nonnegative entries summing to one within `1e-9`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(mut entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("empty probability vector".into()));
        }
        for p in entries.iter_mut() {
            if !p.is_finite() || *p < -CLAMP_TOL {
                return Err(Error::Config(format!("invalid probability {p}")));
            }
            *p = p.max(0.0);
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { trace: total });
        }
        Ok(Self(entries))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `-sum p log2 p` over entries above [`ENTROPY_FLOOR`].
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > ENTROPY_FLOOR)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Entropy of the (clamped) spectrum of a PSD operator.
pub fn operator_entropy(a: &HermitianOperator) -> f64 {
    shannon_entropy(&a.eigenvalues())
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    operator_entropy(rho.op())
}

/// One of the supported divergences. Parses from the ids `umegaki`, `petz:ALPHA`,
/// `sandwiched:ALPHA`, `geometric:ALPHA`, `bs`, `trace`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Divergence {
    Umegaki,
    Petz(f64),
    Sandwiched(f64),
    Geometric(f64),
    BelavkinStaszewski,
    Trace,
}

impl Divergence {
    pub fn validate(self) -> Result<Self> {
        let ok = match self {
            Divergence::Petz(a) | Divergence::Geometric(a) => a > 0.0 && a != 1.0 && a <= 2.0,
            Divergence::Sandwiched(a) => a >= 0.5 && a != 1.0 && a.is_finite(),
            _ => true,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidAlpha {
                family: self.family(),
                alpha: self.alpha().unwrap_or(f64::NAN),
            })
        }
    }

    fn family(self) -> &'static str {
        match self {
            Divergence::Umegaki => "umegaki",
            Divergence::Petz(_) => "petz",
            Divergence::Sandwiched(_) => "sandwiched",
            Divergence::Geometric(_) => "geometric",
            Divergence::BelavkinStaszewski => "bs",
            Divergence::Trace => "trace",
        }
    }

    pub fn alpha(self) -> Option<f64> {
        match self {
            Divergence::Petz(a) | Divergence::Sandwiched(a) | Divergence::Geometric(a) => Some(a),
            _ => None,
        }
    }

    /// `D(A || B)`.
    pub fn evaluate(self, a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
        self.evaluate_with(a, b, SUPPORT_EPS)
    }

    pub fn evaluate_with(
        self,
        a: &HermitianOperator,
        b: &HermitianOperator,
        eps: f64,
    ) -> Result<f64> {
        self.validate()?;
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        Ok(self.finish(self.term(a, b, eps)))
    }

    /// Per-block contribution: the value itself for additive divergences, the trace
    /// functional `Q` for the Renyi families.
    fn term(self, a: &HermitianOperator, b: &HermitianOperator, eps: f64) -> f64 {
        match self {
            Divergence::Umegaki => umegaki_term(a, b, eps),
            Divergence::Petz(alpha) => petz_q(a, b, alpha, eps),
            Divergence::Sandwiched(alpha) => sandwiched_q(a, b, alpha, eps),
            Divergence::Geometric(alpha) => geometric_q(a, b, alpha, eps),
            Divergence::BelavkinStaszewski => bs_term(a, b, eps),
            Divergence::Trace => 0.5 * trace_norm_of_difference(a, b),
        }
    }

    fn finish(self, total: f64) -> f64 {
        match self.alpha() {
            None => total,
            Some(alpha) => renyi_from_q(total, alpha),
        }
    }

    /// Scalar formula on probability vectors: the commuting special case.
    pub fn classical(self, tau: &[f64], p: &[f64]) -> f64 {
        assert_eq!(tau.len(), p.len(), "classical divergence: length mismatch");
        let pairs = tau.iter().zip(p);
        match self {
            Divergence::Umegaki | Divergence::BelavkinStaszewski => pairs
                .map(|(&t, &q)| {
                    if t <= 0.0 {
                        0.0
                    } else if q <= 0.0 {
                        f64::INFINITY
                    } else {
                        t * (t / q).log2()
                    }
                })
                .sum(),
            Divergence::Petz(alpha)
            | Divergence::Sandwiched(alpha)
            | Divergence::Geometric(alpha) => {
                let mut q_sum = 0.0;
                for (&t, &q) in pairs {
                    if t <= 0.0 {
                        continue;
                    }
                    if q <= 0.0 {
                        if alpha > 1.0 || matches!(self, Divergence::Geometric(_)) {
                            return f64::INFINITY;
                        }
                        continue;
                    }
                    q_sum += t.powf(alpha) * q.powf(1.0 - alpha);
                }
                renyi_from_q(q_sum, alpha)
            }
            Divergence::Trace => 0.5 * pairs.map(|(t, q)| (t - q).abs()).sum::<f64>(),
        }
    }
}

/// Serialized as its id string.
impl serde::Serialize for Divergence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha() {
            Some(a) => write!(f, "{}:{}", self.family(), a),
            None => f.write_str(self.family()),
        }
    }
}

impl FromStr for Divergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownDivergence(s.to_string());
        let d = match s.split_once(':') {
            None => match s {
                "umegaki" => Divergence::Umegaki,
                "bs" => Divergence::BelavkinStaszewski,
                "trace" => Divergence::Trace,
                _ => return Err(unknown()),
            },
            Some((family, alpha)) => {
                let a: f64 = alpha.parse().map_err(|_| unknown())?;
                match family {
                    "petz" => Divergence::Petz(a),
                    "sandwiched" => Divergence::Sandwiched(a),
                    "geometric" => Divergence::Geometric(a),
                    _ => return Err(unknown()),
                }
            }
        };
        d.validate()
    }
}

fn renyi_from_q(q: f64, alpha: f64) -> f64 {
    if q.is_infinite() {
        return f64::INFINITY;
    }
    if q <= 0.0 {
        // Orthogonal supports (alpha < 1) or a null first argument (alpha > 1).
        return if alpha < 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    q.log2() / (alpha - 1.0)
}

/// `Tr(P_ker(B) A)`, the weight of `A` outside the support of `B`.
fn weight_outside_support(a: &HermitianOperator, b: &HermitianOperator, eps: f64) -> f64 {
    a.trace_product(&linalg::kernel_projector(b, eps))
}

fn violates_support(a: &HermitianOperator, b: &HermitianOperator, eps: f64) -> bool {
    weight_outside_support(a, b, eps) > eps
}

fn umegaki_term(a: &HermitianOperator, b: &HermitianOperator, eps: f64) -> f64 {
    if violates_support(a, b, eps) {
        return f64::INFINITY;
    }
    let a_log_a: f64 = a
        .eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.log2())
        .sum();
    let a_log_b = a.trace_product(&linalg::log2_on_support(b, eps));
    a_log_a - a_log_b
}

fn petz_q(a: &HermitianOperator, b: &HermitianOperator, alpha: f64, eps: f64) -> f64 {
    if alpha > 1.0 && violates_support(a, b, eps) {
        return f64::INFINITY;
    }
    let a_pow = linalg::power_on_support(a, alpha, eps);
    let b_pow = linalg::power_on_support(b, 1.0 - alpha, eps);
    a_pow.trace_product(&b_pow)
}

fn sandwiched_q(a: &HermitianOperator, b: &HermitianOperator, alpha: f64, eps: f64) -> f64 {
    if alpha > 1.0 && violates_support(a, b, eps) {
        return f64::INFINITY;
    }
    let s = (1.0 - alpha) / (2.0 * alpha);
    let b_pow = linalg::power_on_support(b, s, eps);
    let spectrum = a.conjugate_by(b_pow.matrix()).eigenvalues();
    let noise = linalg::ROUNDING_REL * spectrum.iter().fold(0.0, |m: f64, l| m.max(l.abs()));
    spectrum
        .iter()
        .filter(|&&l| l > noise)
        .map(|&l| l.powf(alpha))
        .sum()
}

fn geometric_q(a: &HermitianOperator, b: &HermitianOperator, alpha: f64, eps: f64) -> f64 {
    if violates_support(a, b, eps) {
        return f64::INFINITY;
    }
    let b_inv_sqrt = linalg::power_on_support(b, -0.5, eps);
    let b_sqrt = linalg::power_on_support(b, 0.5, eps);
    let inner = a.conjugate_by(b_inv_sqrt.matrix());
    let inner_pow = linalg::power_on_support(&inner, alpha, eps);
    inner_pow.conjugate_by(b_sqrt.matrix()).trace()
}

fn bs_term(a: &HermitianOperator, b: &HermitianOperator, eps: f64) -> f64 {
    if violates_support(a, b, eps) {
        return f64::INFINITY;
    }
    let a_sqrt = linalg::power_on_support(a, 0.5, 0.0);
    let b_pinv = linalg::power_on_support(b, -1.0, eps);
    let inner = b_pinv.conjugate_by(a_sqrt.matrix());
    a.trace_product(&linalg::log2_on_support(&inner, eps))
}

fn trace_norm_of_difference(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    let diff = HermitianOperator::symmetrized(a.matrix() - b.matrix());
    diff.eigenvalues().iter().map(|l| l.abs()).sum()
}

/// `Tr A (log2 A - log2 B)`.
pub fn umegaki(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    umegaki_term(a, b, SUPPORT_EPS)
}

/// `log2 Tr(A^alpha B^{1-alpha}) / (alpha - 1)`, `alpha` in `(0,1) u (1,2]`.
pub fn petz_renyi(a: &HermitianOperator, b: &HermitianOperator, alpha: f64) -> Result<f64> {
    Divergence::Petz(alpha).evaluate(a, b)
}

/// `log2 Tr((B^s A B^s)^alpha) / (alpha - 1)` with `s = (1-alpha)/(2 alpha)`,
/// `alpha` in `[1/2,1) u (1,inf)`.
pub fn sandwiched_renyi(a: &HermitianOperator, b: &HermitianOperator, alpha: f64) -> Result<f64> {
    Divergence::Sandwiched(alpha).evaluate(a, b)
}

/// `log2 Tr(B (B^{-1/2} A B^{-1/2})^alpha) / (alpha - 1)`, `alpha` in `(0,1) u (1,2]`.
pub fn geometric_renyi(a: &HermitianOperator, b: &HermitianOperator, alpha: f64) -> Result<f64> {
    Divergence::Geometric(alpha).evaluate(a, b)
}

/// `Tr A log2(A^{1/2} B^{-1} A^{1/2})`.
pub fn belavkin_staszewski(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    bs_term(a, b, SUPPORT_EPS)
}

/// `||A - B||_1 / 2`.
pub fn trace_distance(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    0.5 * trace_norm_of_difference(a, b)
}

/// Divergence between two cq states with the same labels, evaluated block by block.
pub fn cq_divergence(div: Divergence, sigma: &CqState, gamma: &CqState) -> Result<f64> {
    div.validate()?;
    if sigma.labels() != gamma.labels() {
        return Err(Error::Config("cq states have different label sets".into()));
    }
    if sigma.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch {
            expected: gamma.dim(),
            got: sigma.dim(),
        });
    }
    let mut total = 0.0;
    for (s, g) in sigma.blocks().iter().zip(gamma.blocks()) {
        let t = div.term(s, g, SUPPORT_EPS);
        if t == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        total += t;
    }
    Ok(div.finish(total))
}
