//! Benchmark runs, MUB scans and single-instance reports.
//!
//! Every trial draws from its own `RngStream(master_seed, trial)`, so output does not depend on
//! how trials are scheduled across threads.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::divergences::{Divergence, ProbVector};
use crate::error::{Error, Result};
use crate::eur::{eur_record, Eur3Form, EurRecord, Triple, VALIDITY_TOL};
use crate::json::{self, JsonMatrix, PovmFile, StateFile};
use crate::objects::{
    counterexample_state, mub_pair, random_density_matrix, random_povm, random_pvm,
    random_rank_one_povm, DensityMatrix, Povm, RngStream, StateEnsemble,
};
use crate::retrodiction::bayesian_inverse;
use crate::verify::{verify_theorem1, TauKind, VerifyReport};

/// Comment line written before the CSV header.
pub const CSV_SCHEMA_LINE: &str = "# schema=1";
pub const BENCH_HEADER: &str =
    "trial,d,n,h_m,h_n,h_gamma,r_mutual,eur1,eur2,eur3,gap13,gap23,gap21,eur2_finite";
pub const SCAN_HEADER: &str = "p,theta,gap,eur1,eur2,eur3,h_m,h_n,h_gamma";
/// Default threshold below which a gap counts as negative.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMode {
    /// Two Haar-random projective measurements.
    Pvm,
    /// Two Gram-normalized rank-one POVMs.
    Povm,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchConfig {
    pub mode: BenchMode,
    pub d: usize,
    pub n: usize,
    pub trials: u64,
    pub master_seed: u64,
    /// `None` uses rayon's default.
    pub threads: Option<usize>,
    pub eur3_form: Eur3Form,
    pub gap_tol: f64,
    pub validity_tol: f64,
    pub state_ensemble: StateEnsemble,
}

impl BenchConfig {
    pub fn pvm(d: usize, trials: u64, master_seed: u64) -> Self {
        BenchConfig {
            mode: BenchMode::Pvm,
            d,
            n: d,
            trials,
            master_seed,
            threads: None,
            eur3_form: Eur3Form::Log,
            gap_tol: GAP_TOL,
            validity_tol: VALIDITY_TOL,
            state_ensemble: StateEnsemble::default(),
        }
    }

    pub fn povm(d: usize, n: usize, trials: u64, master_seed: u64) -> Self {
        BenchConfig {
            mode: BenchMode::Povm,
            n,
            ..Self::pvm(d, trials, master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        match self.mode {
            BenchMode::Pvm if self.n != self.d => {
                return Err(Error::Config(format!(
                    "PVM mode needs n = d, got n = {}, d = {}",
                    self.n, self.d
                )))
            }
            BenchMode::Povm if self.n < self.d => {
                return Err(Error::Config(format!(
                    "POVM mode needs n >= d, got n = {}, d = {}",
                    self.n, self.d
                )))
            }
            _ => {}
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        for (name, v) in [
            ("gap tolerance", self.gap_tol),
            ("validity tolerance", self.validity_tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Draws the inputs of trial `i`: state, then `M`, then `N`.
    pub fn draw(&self, trial: u64) -> Result<(DensityMatrix, Povm, Povm)> {
        let mut rng = RngStream::new(self.master_seed, trial).rng();
        let gamma = self.state_ensemble.sample(self.d, &mut rng);
        let (m, n) = match self.mode {
            BenchMode::Pvm => (random_pvm(self.d, &mut rng), random_pvm(self.d, &mut rng)),
            BenchMode::Povm => (
                random_rank_one_povm(self.d, self.n, &mut rng)?,
                random_rank_one_povm(self.d, self.n, &mut rng)?,
            ),
        };
        Ok((gamma, m, n))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GapCounts {
    pub trials: u64,
    pub count_eur1_lt_eur3: u64,
    pub count_eur2_lt_eur3: u64,
    pub count_eur2_lt_eur1: u64,
    /// Trials where `eur2` is infinite; these never count as negative gaps.
    pub infinite_eur2_count: u64,
}

impl GapCounts {
    pub fn add(&mut self, r: &EurRecord, tol: f64) {
        self.trials += 1;
        self.count_eur1_lt_eur3 += u64::from(r.gap13 < -tol);
        if r.eur2_finite {
            self.count_eur2_lt_eur3 += u64::from(r.gap23 < -tol);
            self.count_eur2_lt_eur1 += u64::from(r.gap21 < -tol);
        } else {
            self.infinite_eur2_count += 1;
        }
    }

    fn fraction(&self, c: u64) -> f64 {
        c as f64 / self.trials as f64
    }

    pub fn frac_eur1_lt_eur3(&self) -> f64 {
        self.fraction(self.count_eur1_lt_eur3)
    }

    pub fn frac_eur2_lt_eur3(&self) -> f64 {
        self.fraction(self.count_eur2_lt_eur3)
    }

    pub fn frac_eur2_lt_eur1(&self) -> f64 {
        self.fraction(self.count_eur2_lt_eur1)
    }
}

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub config: BenchConfig,
    pub counts: GapCounts,
    /// One record per trial, in trial order.
    pub records: Vec<EurRecord>,
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

#[derive(Serialize)]
struct TrialDump<'a> {
    trial: u64,
    master_seed: u64,
    bound: &'a str,
    bound_value: f64,
    record: EurRecord,
    gamma: StateFile,
    povm_m: PovmFile,
    povm_n: PovmFile,
}

fn violation(
    cfg: &BenchConfig,
    trial: u64,
    bound: &str,
    value: f64,
    record: EurRecord,
) -> Result<Error> {
    let (gamma, m, n) = cfg.draw(trial)?;
    let dump = TrialDump {
        trial,
        master_seed: cfg.master_seed,
        bound,
        bound_value: value,
        record,
        gamma: StateFile::from_state(&gamma),
        povm_m: PovmFile::from_povm(&m),
        povm_n: PovmFile::from_povm(&n),
    };
    Ok(Error::Violation {
        message: format!(
            "trial {trial}: H(M) + H(N) = {} is below {bound} = {value}",
            record.entropy_sum()
        ),
        dump: Box::new(serde_json::to_value(dump)?),
    })
}

/// Runs all trials; any trial that breaks `h_m + h_n >= bound - tol` aborts the run.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let records: Vec<EurRecord> = pool(cfg.threads)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let (gamma, m, n) = cfg.draw(i)?;
                eur_record(&gamma, &m, &n, cfg.eur3_form)
            })
            .collect::<Result<_>>()
    })?;
    let mut counts = GapCounts::default();
    for (i, r) in records.iter().enumerate() {
        if let Some((bound, value)) = r.validity_violation(cfg.validity_tol) {
            return Err(violation(cfg, i as u64, bound, value, *r)?);
        }
        counts.add(r, cfg.gap_tol);
    }
    Ok(BenchOutcome {
        config: cfg.clone(),
        counts,
        records,
    })
}

/// Shortest representation that round-trips; `inf` for infinities.
fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:?}")
    }
}

pub fn write_bench_csv<W: Write>(out: &BenchOutcome, w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_SCHEMA_LINE}")?;
    writeln!(w, "{BENCH_HEADER}")?;
    let (d, n) = (out.config.d, out.config.n);
    for (i, r) in out.records.iter().enumerate() {
        writeln!(
            w,
            "{i},{d},{n},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.h_m),
            num(r.h_n),
            num(r.h_gamma),
            num(r.r_mutual),
            num(r.eur1),
            num(r.eur2),
            num(r.eur3),
            num(r.gap13),
            num(r.gap23),
            num(r.gap21),
            r.eur2_finite
        )?;
    }
    Ok(())
}

/// Inclusive arithmetic grid `start, start + step, ...` up to `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite()
            && stop.is_finite()
            && step.is_finite()
            && step > 0.0
            && stop >= start)
        {
            return Err(Error::Config(format!(
                "bad grid: start {start}, stop {stop}, step {step}"
            )));
        }
        Ok(Grid { start, stop, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // Rounded so that 0.7 + 0.1 prints as 0.8 in the CSV.
        (0..count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanConfig {
    pub d: usize,
    pub p: Grid,
    /// Degrees.
    pub theta: Grid,
    pub basis_index: usize,
    pub eur3_form: Eur3Form,
    pub threads: Option<usize>,
}

impl ScanConfig {
    /// p in [0, 1] by 0.01 and theta in [0, 90] degrees by 1.
    pub fn new(d: usize) -> Self {
        ScanConfig {
            d,
            p: Grid::new(0.0, 1.0, 0.01).unwrap(),
            theta: Grid::new(0.0, 90.0, 1.0).unwrap(),
            basis_index: 0,
            eur3_form: Eur3Form::Log,
            threads: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanPoint {
    pub p: f64,
    pub theta_deg: f64,
    pub record: EurRecord,
}

impl ScanPoint {
    pub fn gap(&self) -> f64 {
        self.record.gap23
    }
}

/// Evaluates the MUB pair on `counterexample_state(d, p, theta, basis_index)` over the grid,
/// p-major.
pub fn run_mub_scan(cfg: &ScanConfig) -> Result<Vec<ScanPoint>> {
    let (m, n) = mub_pair(cfg.d)?;
    let ps = cfg.p.points();
    let thetas = cfg.theta.points();
    if let Some(p) = ps.iter().find(|p| !(-1e-12..=1.0 + 1e-12).contains(*p)) {
        return Err(Error::Config(format!("p = {p} outside [0, 1]")));
    }
    let grid: Vec<(f64, f64)> = ps
        .iter()
        .flat_map(|&p| thetas.iter().map(move |&t| (p, t)))
        .collect();
    pool(cfg.threads)?.install(|| {
        grid.into_par_iter()
            .map(|(p, theta_deg)| {
                let gamma = counterexample_state(
                    cfg.d,
                    p.clamp(0.0, 1.0),
                    theta_deg.to_radians(),
                    cfg.basis_index,
                )?;
                Ok(ScanPoint {
                    p,
                    theta_deg,
                    record: eur_record(&gamma, &m, &n, cfg.eur3_form)?,
                })
            })
            .collect()
    })
}

pub fn write_scan_csv<W: Write>(points: &[ScanPoint], w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_SCHEMA_LINE}")?;
    writeln!(w, "{SCAN_HEADER}")?;
    for s in points {
        let r = &s.record;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            num(s.p),
            num(s.theta_deg),
            num(s.gap()),
            num(r.eur1),
            num(r.eur2),
            num(r.eur3),
            num(r.h_m),
            num(r.h_n),
            num(r.h_gamma)
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantSummary {
    /// `max |sum_y Pr(x, y) - Tr(gamma M_x)|`.
    pub row_marginal_error: f64,
    pub col_marginal_error: f64,
    pub joint_total_error: f64,
    /// `H(M) + H(N)` minus the largest applicable bound.
    pub validity_margin: f64,
    pub rank_one_condition: bool,
    pub trace_gamma_tilde: f64,
    pub trace_eta_tilde: f64,
    pub all_satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleReport {
    pub dim: usize,
    pub record: EurRecord,
    pub retro_joint: Vec<Vec<f64>>,
    pub mutual_retrodictability: f64,
    pub born_m: Vec<f64>,
    pub born_n: Vec<f64>,
    /// `None` for outcomes with zero probability.
    pub bayesian_inverse_m: Vec<Option<JsonMatrix>>,
    pub bayesian_inverse_n: Vec<Option<JsonMatrix>>,
    pub invariants: InvariantSummary,
}

fn inverses(gamma: &DensityMatrix, m: &Povm) -> Result<Vec<Option<JsonMatrix>>> {
    (0..m.len())
        .map(|x| match bayesian_inverse(gamma, m, x) {
            Ok(s) => Ok(Some(json::matrix_to_json(s.matrix()))),
            Err(Error::ZeroProbability { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn single_report(
    gamma: &DensityMatrix,
    m: &Povm,
    n: &Povm,
    form: Eur3Form,
) -> Result<SingleReport> {
    let t = Triple::new(gamma, m, n)?;
    let joint = t.joint()?;
    let record = eur_record(gamma, m, n, form)?;
    let born_m = m.probabilities(gamma);
    let born_n = n.probabilities(gamma);
    let mut bounds = vec![record.eur1];
    if record.rank_one_condition && record.eur2_finite {
        bounds.push(record.eur2);
    }
    if record.eur3_applicable {
        bounds.push(record.eur3);
    }
    let validity_margin =
        record.entropy_sum() - bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let invariants = InvariantSummary {
        row_marginal_error: max_diff(joint.row_marginal(), &born_m),
        col_marginal_error: max_diff(joint.col_marginal(), &born_n),
        joint_total_error: (joint.total() - 1.0).abs(),
        validity_margin,
        rank_one_condition: record.rank_one_condition,
        trace_gamma_tilde: t.gamma_tilde()?.trace(),
        trace_eta_tilde: t.eta_tilde()?.trace(),
        all_satisfied: false,
    };
    let all_satisfied = invariants.row_marginal_error <= 1e-9
        && invariants.col_marginal_error <= 1e-9
        && invariants.joint_total_error <= 1e-9
        && validity_margin >= -VALIDITY_TOL
        && invariants.trace_gamma_tilde <= 1.0 + 1e-9
        && invariants.trace_eta_tilde <= 1.0 + 1e-9;
    Ok(SingleReport {
        dim: gamma.dim(),
        record,
        mutual_retrodictability: joint.mutual_information(),
        retro_joint: joint.to_rows(),
        born_m,
        born_n,
        bayesian_inverse_m: inverses(gamma, m)?,
        bayesian_inverse_n: inverses(gamma, n)?,
        invariants: InvariantSummary {
            all_satisfied,
            ..invariants
        },
    })
}

/// Reads the three JSON files and builds the report.
pub fn run_single(
    state: &std::path::Path,
    povm_m: &std::path::Path,
    povm_n: &std::path::Path,
    form: Eur3Form,
) -> Result<SingleReport> {
    let gamma = json::read_state(state)?;
    let m = json::read_povm(povm_m)?;
    let n = json::read_povm(povm_n)?;
    single_report(&gamma, &m, &n, form)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub divergence: Divergence,
    pub d: usize,
    pub instances: u64,
    pub candidates: usize,
    pub master_seed: u64,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyInstance {
    pub instance: u64,
    pub n: usize,
    pub tau_kind: String,
    pub report: VerifyReport,
}

/// Instance `i` of the minimizer oracle: full-rank Hilbert-Schmidt prior, a POVM whose rank
/// alternates between one and `d`, and evidence cycling through uniform, point mass, Dirichlet.
pub fn verify_instance(cfg: &VerifyConfig, i: u64) -> Result<VerifyInstance> {
    let mut rng = RngStream::new(cfg.master_seed, i).rng();
    let gamma = random_density_matrix(cfg.d, &mut rng);
    let n = cfg.d + (i as usize % 2);
    let rank = if i % 4 < 2 { cfg.d } else { 1 };
    let m = random_povm(cfg.d, n, rank, &mut rng)?;
    let kind = TauKind::ALL[(i / 4) as usize % 3];
    let tau: ProbVector = kind.sample(n, &mut rng);
    let report = verify_theorem1(
        &gamma,
        &m,
        &tau,
        cfg.divergence,
        cfg.candidates,
        RngStream::new(cfg.master_seed ^ 0x9e37_79b9_7f4a_7c15, i),
    )?;
    Ok(VerifyInstance {
        instance: i,
        n,
        tau_kind: format!("{kind:?}").to_lowercase(),
        report,
    })
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<Vec<VerifyInstance>> {
    cfg.divergence.validate()?;
    if cfg.d == 0 || cfg.instances == 0 || cfg.candidates == 0 {
        return Err(Error::Config(
            "d, instances and candidates must all be at least 1".into(),
        ));
    }
    pool(cfg.threads)?.install(|| {
        (0..cfg.instances)
            .map(|i| verify_instance(cfg, i))
            .collect()
    })
}
