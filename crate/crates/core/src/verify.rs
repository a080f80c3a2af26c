//! Numerical oracle for the minimum-change problem on measurement channels.
//!
//! For a prior `gamma`, POVM `M` and new evidence `tau` over outcomes, the backward cq state
//! `sigma_XQ = sum_x tau(x) |x><x| (x) sigma_x` minimizing `D(sigma_XQ || gamma_XQ)` should be
//! the one whose conditionals are the Bayesian inverses, with minimum value `D(tau || p)`.
//! This module does not prove that; it evaluates the claimed minimizer and tries to beat it
//! with perturbed and fully random candidates.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::divergences::{cq_divergence, Divergence, ProbVector};
use crate::error::{Error, Result};
use crate::json;
use crate::objects::{random_density_matrix, DensityMatrix, Povm, RngStream};
use crate::retrodiction::{bayesian_inverse, forward_state, CqState, PROB_FLOOR};

/// Mixing weights for the perturbation rays, ascending.
pub const PERTURBATION_WEIGHTS: [f64; 4] = [1e-3, 1e-2, 1e-1, 0.5];
/// A candidate "beats" the minimizer if it is lower by more than this.
pub const BEAT_TOL: f64 = 1e-9;
/// Required increase at weights `>= 1e-2`.
pub const STRICT_TOL: f64 = 1e-10;
/// Equality tolerance for the minimum value (relative entropies).
pub const EQUALITY_TOL: f64 = 1e-8;
/// Equality tolerance for the minimum value (trace distance).
pub const TRACE_EQUALITY_TOL: f64 = 1e-9;
const MAX_DUMPS: usize = 5;

/// Backward process: evidence `tau` and one conditional state per outcome.
#[derive(Clone, Debug)]
pub struct BackwardCandidate {
    pub tau: ProbVector,
    pub conditional_states: Vec<DensityMatrix>,
}

/// `sigma_XQ` with blocks `tau(x) sigma_x`.
pub fn candidate_to_cq(c: &BackwardCandidate) -> Result<CqState> {
    if c.tau.len() != c.conditional_states.len() {
        return Err(Error::DimensionMismatch {
            expected: c.tau.len(),
            got: c.conditional_states.len(),
        });
    }
    let blocks = c
        .tau
        .as_slice()
        .iter()
        .zip(&c.conditional_states)
        .map(|(&t, s)| s.op().scale(t))
        .collect();
    CqState::new((0..c.tau.len()).collect(), blocks)
}

/// The claimed minimizer: Bayesian inverses paired with `tau`.
pub fn bayes_candidate(
    gamma: &DensityMatrix,
    m: &Povm,
    tau: &ProbVector,
) -> Result<BackwardCandidate> {
    if tau.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            got: tau.len(),
        });
    }
    let conditional_states = (0..m.len())
        .map(|x| bayesian_inverse(gamma, m, x))
        .collect::<Result<_>>()?;
    Ok(BackwardCandidate {
        tau: tau.clone(),
        conditional_states,
    })
}

/// How evidence distributions are drawn for random instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauKind {
    Uniform,
    PointMass,
    Dirichlet,
}

impl TauKind {
    pub const ALL: [TauKind; 3] = [TauKind::Uniform, TauKind::PointMass, TauKind::Dirichlet];

    pub fn sample<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> ProbVector {
        match self {
            TauKind::Uniform => ProbVector::uniform(n),
            TauKind::PointMass => ProbVector::point_mass(n, rng.random_range(0..n)),
            TauKind::Dirichlet => {
                // Dirichlet(1, ..., 1) as normalized exponentials.
                let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let total: f64 = w.iter().sum();
                ProbVector::new(w.into_iter().map(|x| x / total).collect())
                    .expect("normalized by construction")
            }
        }
    }
}

/// Inputs of a failed check, serialized for inspection.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub kind: String,
    pub candidate_index: usize,
    pub weight: Option<f64>,
    pub value: f64,
    pub minimum: f64,
    pub gamma: json::JsonMatrix,
    pub povm: Vec<json::JsonMatrix>,
    pub tau: Vec<f64>,
    pub conditional_states: Vec<json::JsonMatrix>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub divergence: String,
    /// Divergence at the claimed minimizer.
    pub minimizer_value: f64,
    /// Classical divergence `D(tau || p)`.
    pub expected_value: f64,
    pub equality_error: f64,
    pub equality_tolerance: f64,
    pub candidates_evaluated: usize,
    pub smallest_candidate_value: f64,
    /// Candidates below the minimizer by more than [`BEAT_TOL`].
    pub beaten: usize,
    /// Perturbations at weight `>= 1e-2` that failed to increase the value by [`STRICT_TOL`].
    pub not_strict: usize,
    /// Whether `not_strict` counts as a failure. The trace distance has flat directions around
    /// its minimizer, so there it is informational only.
    pub strictness_required: bool,
    /// Perturbation rays whose values decrease along increasing weight.
    pub non_monotone: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl VerifyReport {
    pub fn equality_holds(&self) -> bool {
        self.equality_error <= self.equality_tolerance
    }

    pub fn passed(&self) -> bool {
        self.equality_holds()
            && self.beaten == 0
            && self.non_monotone == 0
            && (!self.strictness_required || self.not_strict == 0)
    }
}

struct CandidateOutcome {
    values: Vec<f64>,
    beaten: usize,
    not_strict: usize,
    non_monotone: usize,
    dumps: Vec<Counterexample>,
}

fn mix(a: &DensityMatrix, b: &DensityMatrix, w: f64) -> DensityMatrix {
    DensityMatrix::new(a.op().scale(1.0 - w).add(&b.op().scale(w)))
        .expect("convex mixture of states")
}

/// The instance a counterexample belongs to.
struct Instance<'a> {
    gamma: &'a DensityMatrix,
    m: &'a Povm,
    minimum: f64,
}

impl Instance<'_> {
    fn dump(
        &self,
        kind: &str,
        index: usize,
        weight: Option<f64>,
        value: f64,
        cand: &BackwardCandidate,
    ) -> Counterexample {
        Counterexample {
            kind: kind.to_string(),
            candidate_index: index,
            weight,
            value,
            minimum: self.minimum,
            gamma: json::matrix_to_json(self.gamma.matrix()),
            povm: self
                .m
                .elements()
                .iter()
                .map(|e| json::matrix_to_json(e.matrix()))
                .collect(),
            tau: cand.tau.as_slice().to_vec(),
            conditional_states: cand
                .conditional_states
                .iter()
                .map(|s| json::matrix_to_json(s.matrix()))
                .collect(),
        }
    }
}

fn tolerance(v: f64) -> f64 {
    BEAT_TOL * v.abs().max(1.0)
}

/// Runs the candidate sweep for any divergence (including trace distance).
fn sweep(
    gamma: &DensityMatrix,
    m: &Povm,
    tau: &ProbVector,
    div: Divergence,
    n_candidates: usize,
    stream: RngStream,
) -> Result<VerifyReport> {
    div.validate()?;
    if tau.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            got: tau.len(),
        });
    }
    let p = m.probabilities(gamma);
    if let Some((x, &prob)) = p.iter().enumerate().find(|(_, &q)| q <= PROB_FLOOR) {
        return Err(Error::ZeroProbability {
            outcome: x,
            probability: prob,
        });
    }
    let fwd = forward_state(gamma, m)?;
    let best = bayes_candidate(gamma, m, tau)?;
    let minimum = cq_divergence(div, &candidate_to_cq(&best)?, &fwd)?;
    let expected = div.classical(tau.as_slice(), &p);
    let equality_error = (minimum - expected).abs();
    let strict = div != Divergence::Trace;
    let instance = Instance { gamma, m, minimum };
    let d = gamma.dim();
    let evaluate =
        |c: &BackwardCandidate| -> Result<f64> { cq_divergence(div, &candidate_to_cq(c)?, &fwd) };

    let outcomes: Vec<CandidateOutcome> = (0..n_candidates)
        .into_par_iter()
        .map(|k| -> Result<CandidateOutcome> {
            let mut rng =
                RngStream::new(stream.master_seed, (stream.stream_index << 32) | k as u64).rng();
            let noise: Vec<DensityMatrix> = (0..m.len())
                .map(|_| random_density_matrix(d, &mut rng))
                .collect();
            let mut out = CandidateOutcome {
                values: Vec::with_capacity(PERTURBATION_WEIGHTS.len() + 1),
                beaten: 0,
                not_strict: 0,
                non_monotone: 0,
                dumps: Vec::new(),
            };
            let mut previous = minimum;
            for &w in &PERTURBATION_WEIGHTS {
                let cand = BackwardCandidate {
                    tau: tau.clone(),
                    conditional_states: best
                        .conditional_states
                        .iter()
                        .zip(&noise)
                        .map(|(s, r)| mix(s, r, w))
                        .collect(),
                };
                let v = evaluate(&cand)?;
                out.values.push(v);
                let mut failed = None;
                if v < minimum - tolerance(minimum) {
                    out.beaten += 1;
                    failed = Some("beaten-by-perturbation");
                } else if w >= 1e-2 && v - minimum <= STRICT_TOL {
                    out.not_strict += 1;
                    if strict {
                        failed = Some("not-strict");
                    }
                }
                if v < previous - tolerance(previous) {
                    out.non_monotone += 1;
                    failed = failed.or(Some("non-monotone"));
                }
                if let Some(kind) = failed {
                    out.dumps.push(instance.dump(kind, k, Some(w), v, &cand));
                }
                previous = v;
            }
            let random = BackwardCandidate {
                tau: tau.clone(),
                conditional_states: (0..m.len())
                    .map(|_| random_density_matrix(d, &mut rng))
                    .collect(),
            };
            let v = evaluate(&random)?;
            out.values.push(v);
            if v < minimum - tolerance(minimum) {
                out.beaten += 1;
                out.dumps
                    .push(instance.dump("beaten-by-random", k, None, v, &random));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut report = VerifyReport {
        divergence: div.to_string(),
        minimizer_value: minimum,
        expected_value: expected,
        equality_error,
        equality_tolerance: if div == Divergence::Trace {
            TRACE_EQUALITY_TOL
        } else {
            EQUALITY_TOL
        },
        candidates_evaluated: 0,
        smallest_candidate_value: f64::INFINITY,
        beaten: 0,
        not_strict: 0,
        strictness_required: strict,
        non_monotone: 0,
        counterexamples: Vec::new(),
    };
    for o in outcomes {
        report.candidates_evaluated += o.values.len();
        report.smallest_candidate_value = o
            .values
            .iter()
            .copied()
            .fold(report.smallest_candidate_value, f64::min);
        report.beaten += o.beaten;
        report.not_strict += o.not_strict;
        report.non_monotone += o.non_monotone;
        for c in o.dumps {
            if report.counterexamples.len() < MAX_DUMPS {
                report.counterexamples.push(c);
            }
        }
    }
    Ok(report)
}

/// Checks that the Bayesian-inverse candidate attains `D(tau || p)` and is never beaten.
pub fn verify_theorem1(
    gamma: &DensityMatrix,
    m: &Povm,
    tau: &ProbVector,
    div: Divergence,
    n_candidates: usize,
    stream: RngStream,
) -> Result<VerifyReport> {
    sweep(gamma, m, tau, div, n_candidates, stream)
}

/// Same protocol with the trace distance; the minimum is `sum_x |tau(x) - p(x)| / 2`.
///
/// The minimizer is not unique in general: whenever `tau(x) > p(x)`, any `sigma_x` with
/// `tau(x) sigma_x >= p(x) gamma^_x` attains the same value. Flat perturbations are counted in
/// `not_strict` but do not fail the report.
pub fn verify_theorem2(
    gamma: &DensityMatrix,
    m: &Povm,
    tau: &ProbVector,
    n_candidates: usize,
    stream: RngStream,
) -> Result<VerifyReport> {
    sweep(gamma, m, tau, Divergence::Trace, n_candidates, stream)
}
