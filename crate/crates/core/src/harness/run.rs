use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::generate::{generate_exact_morphism, perturb_morphism, ExactMorphism};
use super::ExperimentConfig;
use crate::error::{RectifyError, Result};
use crate::group::{estimate_bch_constants, AmbientSets, BchConstants, NormedAlgebra};
use crate::groupoid::{attach_haar_density, build_core, Core, FiniteGroupoid, HaarDensity};
use crate::rectifier::{
    defect, iterate, q_bound, verify_core_morphism, AlmostMorphism, IterationTrace,
    MorphismResidual, Termination, Q_SLACK,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_NON_CONTRACTION: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;

pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "report.json";
const TRACE_HEADER: &str = "n,delta,correction_norm,step_move,q_bound,q_certified";

/// Everything a run needs, built from a config.
#[derive(Debug, Clone)]
pub struct Instance {
    pub alg: NormedAlgebra,
    pub sets: AmbientSets,
    pub groupoid: Arc<FiniteGroupoid>,
    pub core: Core,
    pub density: HaarDensity,
    pub constants: BchConstants,
    pub exact: ExactMorphism,
    pub phi0: AlmostMorphism,
}

impl Instance {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.check()?;
        let alg = cfg.group.algebra()?;
        let sets = cfg.constants.sets()?;
        sets.check_against(&alg)?;
        let groupoid = Arc::new(cfg.groupoid.build()?);
        let core = build_core(groupoid.clone(), &cfg.core.select(&groupoid))?;
        let density = attach_haar_density(&core, &cfg.density)?;
        let c = &cfg.constants;
        let constants =
            estimate_bch_constants(&alg, sets, c.sample_count, c.safety_factor, c.seed)?;
        let exact = generate_exact_morphism(
            &groupoid,
            &alg,
            sets,
            cfg.exact.spread,
            cfg.exact.homomorphism,
            cfg.exact.seed,
        )?;
        let phi0 = perturb_morphism(&exact.phi, &groupoid, &alg, sets, &cfg.perturbation)?;
        Ok(Instance {
            alg,
            sets,
            groupoid,
            core,
            density,
            constants,
            exact,
            phi0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub config_digest: String,
    pub group: String,
    pub groupoid: String,
    pub arrow_count: usize,
    pub core_size: usize,
    pub constants: Option<BchConstants>,
    pub admissible_radius: Option<f64>,
    pub tol: f64,
    pub initial_defect: Option<f64>,
    pub final_defect: Option<f64>,
    pub iterations: usize,
    pub terminated: Option<Termination>,
    pub q_certified_steps: usize,
    pub all_q_certified: bool,
    pub morphism_residual: Option<MorphismResidual>,
    /// `(d′/d)·tol`.
    pub residual_bound: Option<f64>,
    pub warnings: Vec<String>,
    pub pass: bool,
    pub exit_code: i32,
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: Option<IterationTrace>,
    /// The limit morphism when the iteration ran.
    pub limit: Option<AlmostMorphism>,
}

/// SHA-256 of the config's canonical JSON serialization.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn classify(e: &RectifyError) -> (&'static str, i32) {
    use RectifyError::*;
    match e {
        DefectTooLarge { .. } => ("defect_too_large", EXIT_PRECONDITION),
        RangeEscape { .. } => ("range_escape", EXIT_PRECONDITION),
        Config(_) => ("config", EXIT_PRECONDITION),
        CoreAxiomError { .. } => ("core_axiom", EXIT_PRECONDITION),
        InvarianceError { .. } => ("invariance", EXIT_PRECONDITION),
        ActionError(_) => ("action", EXIT_PRECONDITION),
        GroupMismatch { .. } => ("group_mismatch", EXIT_PRECONDITION),
        Unsupported { .. } => ("unsupported", EXIT_PRECONDITION),
        InvalidAlgebraVector(_) => ("invalid_algebra_vector", EXIT_PRECONDITION),
        LogDomainError { .. } => ("log_domain", EXIT_DOMAIN),
        DefectOverflow(_) => ("defect_overflow", EXIT_DOMAIN),
        NormalizationFailure(_) => ("normalization", EXIT_DOMAIN),
        NotComposable { .. } => ("not_composable", EXIT_OTHER),
        GridError(_) => ("grid", EXIT_OTHER),
    }
}

/// Run the rectifier end to end. Errors are captured into the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> RunOutcome {
    let mut report = RunReport {
        name: cfg.name.clone(),
        config_digest: config_digest(cfg),
        group: cfg.group.tag.clone(),
        groupoid: cfg.groupoid.label(),
        arrow_count: 0,
        core_size: 0,
        constants: None,
        admissible_radius: None,
        tol: cfg.iteration.tol,
        initial_defect: None,
        final_defect: None,
        iterations: 0,
        terminated: None,
        q_certified_steps: 0,
        all_q_certified: false,
        morphism_residual: None,
        residual_bound: None,
        warnings: Vec::new(),
        pass: false,
        exit_code: EXIT_OTHER,
        error: None,
    };
    let fail = |mut report: RunReport, e: RectifyError| {
        let (kind, code) = classify(&e);
        report.exit_code = code;
        report.error = Some(ErrorInfo {
            kind: kind.into(),
            message: e.to_string(),
        });
        RunOutcome {
            report,
            trace: None,
            limit: None,
        }
    };

    let inst = match Instance::prepare(cfg) {
        Ok(i) => i,
        Err(e) => return fail(report, e),
    };
    report.arrow_count = inst.groupoid.arrow_count();
    report.core_size = inst.core.arrows().len();
    report.constants = Some(inst.constants);
    report.admissible_radius = Some(crate::rectifier::admissible_radius(&inst.constants));
    report.warnings = inst.exact.warnings.clone();
    match defect(&inst.phi0, &inst.core, &inst.alg) {
        Ok(d) => report.initial_defect = Some(d),
        Err(e) => return fail(report, e),
    }

    let (limit, trace) = match iterate(
        &inst.phi0,
        &inst.core,
        &inst.density,
        &inst.alg,
        &inst.constants,
        inst.sets,
        cfg.iteration,
    ) {
        Ok(r) => r,
        Err(e) => return fail(report, e),
    };
    let residual = verify_core_morphism(&limit, &inst.core, &inst.alg);
    let bound = inst.constants.d_prime / inst.constants.d * cfg.iteration.tol;
    report.final_defect = Some(trace.final_delta());
    report.iterations = trace.steps();
    report.terminated = Some(trace.terminated);
    report.q_certified_steps = trace.q_certified.iter().filter(|c| **c).count();
    report.all_q_certified = trace.all_certified();
    report.morphism_residual = Some(residual);
    report.residual_bound = Some(bound);
    report.pass = pass_flag(
        trace.final_delta(),
        cfg.iteration.tol,
        trace.all_certified(),
        residual.core,
        bound,
    );
    report.exit_code = if report.pass {
        EXIT_PASS
    } else {
        match trace.terminated {
            Termination::RangeEscape | Termination::DefectOverflow => EXIT_DOMAIN,
            Termination::MaxIterations | Termination::DefectTooLarge => EXIT_NON_CONTRACTION,
            Termination::Converged if !trace.all_certified() => EXIT_NON_CONTRACTION,
            Termination::Converged => EXIT_OTHER,
        }
    };
    RunOutcome {
        report,
        trace: Some(trace),
        limit: Some(limit),
    }
}

fn pass_flag(final_delta: f64, tol: f64, certified: bool, residual: f64, bound: f64) -> bool {
    final_delta <= tol && certified && residual <= bound
}

/// Trace table with one row per iterate; the last row carries only `Δ`.
pub fn trace_csv(trace: &IterationTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for n in 0..trace.steps() {
        let _ = writeln!(
            out,
            "{n},{:e},{:e},{:e},{:e},{}",
            trace.deltas[n],
            trace.correction_norms[n],
            trace.step_moves[n],
            trace.q_bounds[n],
            trace.q_certified[n]
        );
    }
    let _ = writeln!(out, "{},{:e},,,,", trace.steps(), trace.final_delta());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub delta: f64,
    pub correction_norm: Option<f64>,
    pub step_move: Option<f64>,
    pub q_bound: Option<f64>,
    pub q_certified: Option<bool>,
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let bad = |line: usize, what: &str| RectifyError::Config(format!("trace line {line}: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let opt = |s: &str, line: usize| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(line, "bad number"))
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(ln, "expected 6 fields"));
        }
        rows.push(TraceRow {
            n: f[0].parse().map_err(|_| bad(ln, "bad index"))?,
            delta: f[1].parse().map_err(|_| bad(ln, "bad delta"))?,
            correction_norm: opt(f[2], ln)?,
            step_move: opt(f[3], ln)?,
            q_bound: opt(f[4], ln)?,
            q_certified: match f[5] {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                _ => return Err(bad(ln, "bad flag")),
            },
        });
    }
    Ok(rows)
}

fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, dir.join(name))
}

/// Write `trace.csv` and `report.json` into `dir`, each atomically.
pub fn persist_run(outcome: &RunOutcome, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let csv = match &outcome.trace {
        Some(t) => trace_csv(t),
        None => format!("{TRACE_HEADER}\n"),
    };
    write_atomic(dir, TRACE_FILE, csv.as_bytes())?;
    let mut json = serde_json::to_vec_pretty(&outcome.report).map_err(io::Error::other)?;
    json.push(b'\n');
    write_atomic(dir, REPORT_FILE, &json)
}

/// Recompute every certification flag and the pass flag from the persisted
/// trace and the constants recorded in the report.
pub fn recheck_persisted(dir: &Path) -> Result<bool> {
    let read = |name: &str| {
        fs::read_to_string(dir.join(name))
            .map_err(|e| RectifyError::Config(format!("reading {name}: {e}")))
    };
    let report: RunReport = serde_json::from_str(&read(REPORT_FILE)?)
        .map_err(|e| RectifyError::Config(format!("report parse: {e}")))?;
    let rows = parse_trace_csv(&read(TRACE_FILE)?)?;
    let (Some(k), Some(last)) = (report.constants, rows.last()) else {
        return Ok(!report.pass);
    };
    let mut consistent = rows.iter().enumerate().all(|(i, r)| r.n == i);
    let mut certified = true;
    for w in rows.windows(2) {
        let q = q_bound(w[0].delta, &k);
        let flag = w[1].delta <= q + Q_SLACK;
        consistent &= w[0].q_bound == Some(q) && w[0].q_certified == Some(flag);
        certified &= flag;
    }
    let residual = report.morphism_residual.map_or(f64::INFINITY, |r| r.core);
    let bound = k.d_prime / k.d * report.tol;
    let pass = pass_flag(last.delta, report.tol, certified, residual, bound);
    Ok(consistent && pass == report.pass && report.final_defect == Some(last.delta))
}
