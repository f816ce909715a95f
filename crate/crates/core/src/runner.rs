//! Experiment execution: a parsed config in, a verdict plus artifacts out.
//!
//! [`run`] validates inputs, computes the experiment entirely in memory and
//! returns a [`RunReport`] carrying a one-line summary, a CSV table and a
//! JSON document.  Nothing touches the filesystem until
//! [`write_artifacts`], so a rejected config never leaves partial files
//! behind.
//!
//! Every experiment judges itself against the tolerances in the config's
//! `[checks]` table (falling back to per-experiment defaults) and folds the
//! outcome into `RunReport::passed`; the caller maps that to an exit code.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::certificates::{
    certify_1d, certify_nd, exactness_experiment, scaling_experiment, CertStatus,
    ContinuityCertificate,
};
use crate::config::{
    ChecksSpec, ExperimentConfig, ExperimentKind, FunctionSpec, ModelSpec, OutputFormat,
    TriangleExpectation,
};
use crate::error::Error;
use crate::fields::{certify_expected_modulus, modulus_envelope_experiment, tail_report};
use crate::fit::line_fit;
use crate::grid::{rectangle_distance_check, FractionalIndex};
use crate::norms::{default_p_grid_sized, gagliardo_seminorm_nd, grand_lebesgue_norm};
use crate::psi::{orlicz_from_psi, psi_from_orlicz, PsiFunction, PsiRule};
use crate::Result;

/// Default line resolution where the config leaves `grid.n` unset.
const DEFAULT_LINE_N: usize = 4097;
/// Default planar resolution; the pairwise sweeps are quartic in `n` and
/// capped at 64 nodes per axis.
const DEFAULT_PLANE_N: usize = 64;
/// Default resolution of the exactness lattice, which must resolve gaps
/// down to `2^-16`.
const DEFAULT_EXACTNESS_N: usize = 16385;
/// Default triple count for the distance axiom sweep.
const DEFAULT_TRIALS: usize = 2000;
/// Default certificate slack: a row may exceed its bound by two percent.
const DEFAULT_SLACK: f64 = 1.02;
/// Default exactness floor on the log-ratio `V`.
const DEFAULT_V_FLOOR: f64 = 0.98;
/// Default half-width of the scaling ratio band and slope tolerance.
const DEFAULT_SCALING_BAND: f64 = 0.01;
/// Default Orlicz round-trip equivalence constant.
const DEFAULT_EQUIVALENCE: f64 = 4.0;
/// Default cap on the envelope ratio spread.
const DEFAULT_SPREAD_CAP: f64 = 10.0;
/// Default relative tolerance against an expected scalar.
const DEFAULT_REL_TOL: f64 = 1e-3;
/// Default slope tolerances for the fundamental-function fits.
const DEFAULT_GAP_SLOPE_TOL: f64 = 0.02;
const DEFAULT_LOGLOG_SLOPE_TOL: f64 = 0.05;
/// Default exponent grid of the expected-modulus certificate.
const DEFAULT_MODULUS_P_GRID: [f64; 5] = [3.0, 4.0, 6.0, 8.0, 12.0];
/// Default exponent grid feeding the tail report's weight.
const DEFAULT_TAIL_P_GRID: [f64; 6] = [3.0, 4.0, 6.0, 8.0, 12.0, 16.0];
/// Default exceedance levels of the tail report.
const DEFAULT_Z_LEVELS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 5.0];

/// Outcome of one experiment run, fully materialized.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: ExperimentKind,
    /// All configured checks held.
    pub passed: bool,
    /// One line: kind, verdict, the judged numbers.
    pub summary: String,
    /// CSV table; first line is `# <kind> v1`.
    pub csv: String,
    /// Pretty JSON document with the same verdict plus the full results.
    pub json: String,
}

impl RunReport {
    /// Process exit code for this outcome: 0 on pass, 1 on a failed check.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Runs one experiment against its config.  `Err` means the inputs were
/// unusable (exit 2 territory); a config that computes but misses its
/// tolerances comes back `Ok` with `passed == false`.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<RunReport> {
    if let Some(stated) = cfg.experiment {
        if stated != kind {
            return Err(Error::Config(format!(
                "config declares experiment \"{stated}\" but \"{kind}\" was requested"
            )));
        }
    }
    let seed = cfg.seed.unwrap_or(0);
    let out = match kind {
        ExperimentKind::Seminorm => run_seminorm(cfg)?,
        ExperimentKind::Glnorm => run_glnorm(cfg)?,
        ExperimentKind::Fundamental => run_fundamental(cfg)?,
        ExperimentKind::Certify1d => run_certify_1d(cfg)?,
        ExperimentKind::CertifyNd => run_certify_nd(cfg)?,
        ExperimentKind::Exactness => run_exactness(cfg)?,
        ExperimentKind::Scaling => run_scaling(cfg)?,
        ExperimentKind::OrliczRoundtrip => run_orlicz_roundtrip(cfg)?,
        ExperimentKind::FieldModulus => run_field_modulus(cfg, seed)?,
        ExperimentKind::FieldEnvelope => run_field_envelope(cfg, seed)?,
        ExperimentKind::FieldTails => run_field_tails(cfg, seed)?,
        ExperimentKind::DistanceAxioms => run_distance_axioms(cfg, seed)?,
    };
    Ok(assemble(kind, seed, out))
}

/// Writes the report's artifacts under `dir` and returns the paths.
/// Files are named `<kind>.csv` / `<kind>.json`.
pub fn write_artifacts(
    report: &RunReport,
    dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = dir.join(format!("{}.csv", report.kind));
        std::fs::write(&path, report.csv.as_bytes())?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = dir.join(format!("{}.json", report.kind));
        std::fs::write(&path, report.json.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// (passed, summary body, csv body, results document)
type Outcome = (bool, String, String, serde_json::Value);

fn assemble(kind: ExperimentKind, seed: u64, out: Outcome) -> RunReport {
    let (passed, body, csv_body, results) = out;
    let verdict = if passed { "PASS" } else { "FAIL" };
    let summary = format!("{kind}: {verdict} {body}");
    let doc = json!({
        "schema": format!("{kind} v1"),
        "seed": seed,
        "passed": passed,
        "summary": summary,
        "results": results,
    });
    let mut json = serde_json::to_string_pretty(&doc).expect("report serialization");
    json.push('\n');
    RunReport {
        kind,
        passed,
        summary,
        csv: format!("# {kind} v1\n{csv_body}"),
        json,
    }
}

fn missing(what: &str) -> Error {
    Error::Config(format!("missing required key: {what}"))
}

fn need_function(cfg: &ExperimentConfig) -> Result<&FunctionSpec> {
    cfg.function.as_ref().ok_or_else(|| missing("[function]"))
}

fn need_model(cfg: &ExperimentConfig) -> Result<&ModelSpec> {
    cfg.model.as_ref().ok_or_else(|| missing("[model]"))
}

fn need_weight(cfg: &ExperimentConfig) -> Result<PsiFunction> {
    cfg.weight_fn()?.ok_or_else(|| missing("[weight]"))
}

fn need_p(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.p.ok_or_else(|| missing("p"))
}

fn need_delta(cfg: &ExperimentConfig) -> Result<&Vec<f64>> {
    cfg.delta.as_ref().ok_or_else(|| missing("delta"))
}

fn need_alpha_list(cfg: &ExperimentConfig, d: usize) -> Result<Vec<f64>> {
    let a = cfg.alpha.as_ref().ok_or_else(|| missing("alpha"))?;
    if a.len() != d {
        return Err(Error::Config(format!(
            "alpha has {} entries, this run needs {d}",
            a.len()
        )));
    }
    Ok(a.clone())
}

fn need_alpha_index(cfg: &ExperimentConfig, d: usize) -> Result<FractionalIndex> {
    FractionalIndex::new(need_alpha_list(cfg, d)?)
}

fn need_alpha_scalar(cfg: &ExperimentConfig) -> Result<f64> {
    Ok(need_alpha_list(cfg, 1)?[0])
}

fn grid_n(cfg: &ExperimentConfig, default: usize) -> usize {
    cfg.grid.as_ref().and_then(|g| g.n).unwrap_or(default)
}

fn grid_width(cfg: &ExperimentConfig) -> f64 {
    cfg.grid.as_ref().and_then(|g| g.width).unwrap_or(1.0)
}

fn default_function_n(d: usize) -> usize {
    if d == 2 {
        DEFAULT_PLANE_N
    } else {
        DEFAULT_LINE_N
    }
}

/// Gap rows for a `d`-axis experiment: the `delta` list itself on a line,
/// the cross product of `delta` with `delta_y` (or with itself) on a plane.
fn delta_rows(cfg: &ExperimentConfig, d: usize) -> Result<Vec<Vec<f64>>> {
    let dx = need_delta(cfg)?;
    match d {
        1 => {
            if cfg.delta_y.is_some() {
                return Err(Error::Config(
                    "delta_y is set but the run has a single axis".into(),
                ));
            }
            Ok(dx.iter().map(|&v| vec![v]).collect())
        }
        _ => {
            let dy = cfg.delta_y.as_ref().unwrap_or(dx);
            Ok(dx
                .iter()
                .flat_map(|&a| dy.iter().map(move |&b| vec![a, b]))
                .collect())
        }
    }
}

/// Compact display form for summary lines.
fn disp(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{v:.6}")
    } else {
        format!("{v:.3e}")
    }
}

fn join_disp(values: &[f64]) -> String {
    values.iter().map(|&v| disp(v)).collect::<Vec<_>>().join(" ")
}

/// Judges a scalar against `checks.expected` at `checks.rel_tol`.
/// Without an expectation any finite value passes.
fn judge_expected(value: f64, checks: &ChecksSpec) -> (bool, String) {
    match checks.expected {
        None => (value.is_finite(), "no expected value configured".into()),
        Some(e) => {
            let tol = checks.rel_tol.unwrap_or(DEFAULT_REL_TOL);
            let rel = ((value - e) / e).abs();
            (
                value.is_finite() && rel <= tol,
                format!("expected {} rel err {:.3e} (tol {:.1e})", disp(e), rel, tol),
            )
        }
    }
}

/// Relative slope comparison; absolute when the expectation is zero.
fn slope_ok(slope: f64, expected: f64, tol: f64) -> bool {
    let limit = if expected == 0.0 {
        tol
    } else {
        tol * expected.abs()
    };
    (slope - expected).abs() <= limit
}

fn run_seminorm(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = need_function(cfg)?;
    let d = spec.d();
    let n = grid_n(cfg, default_function_n(d));
    let f = spec.build(n, grid_width(cfg))?;
    let alpha = need_alpha_index(cfg, d)?;
    let p = need_p(cfg)?;
    let scfg = cfg.seminorm_config();
    let value = gagliardo_seminorm_nd(&f, &alpha, p, &scfg)?.value_or_infinite();
    let checks = cfg.checks();
    let (ok, note) = judge_expected(value, &checks);

    let mut csv = String::new();
    for k in 1..=d {
        csv.push_str(&format!("alpha_{k},"));
    }
    csv.push_str("p,n,value\n");
    for a in &alpha.alpha {
        csv.push_str(&format!("{a},"));
    }
    csv.push_str(&format!("{p},{n},{value}\n"));

    let results = json!({
        "alpha": alpha.alpha,
        "p": p,
        "n": n,
        "value": value,
        "divergent": !value.is_finite(),
    });
    let body = format!("value {} ({note})", disp(value));
    Ok((ok, body, csv, results))
}

fn run_glnorm(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = need_function(cfg)?;
    let d = spec.d();
    let n = grid_n(cfg, default_function_n(d));
    let f = spec.build(n, grid_width(cfg))?;
    let psi = need_weight(cfg)?;
    let norm = grand_lebesgue_norm(&f, &psi)?;
    let checks = cfg.checks();
    let (expected_ok, note) = judge_expected(norm.value, &checks);
    let ok = expected_ok && !norm.diverging;

    let csv = format!(
        "value,attained_p,diverging\n{},{},{}\n",
        norm.value, norm.attained_p, norm.diverging
    );
    let results = json!({
        "weight": psi.to_string(),
        "n": n,
        "value": norm.value,
        "attained_p": norm.attained_p,
        "diverging": norm.diverging,
    });
    let body = format!(
        "value {} at p {} ({note})",
        disp(norm.value),
        disp(norm.attained_p)
    );
    Ok((ok, body, csv, results))
}

fn run_fundamental(cfg: &ExperimentConfig) -> Result<Outcome> {
    let psi = need_weight(cfg)?;
    let deltas = need_delta(cfg)?;
    if deltas.is_empty() {
        return Err(Error::Config("delta list is empty".into()));
    }
    let mut phis = Vec::with_capacity(deltas.len());
    let mut at_ps = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Config(format!("delta {d} must be positive")));
        }
        let s = psi.fundamental(d)?;
        phis.push(s.value);
        at_ps.push(s.at_p);
    }

    let checks = cfg.checks();
    let mut ok = true;
    let mut notes = Vec::new();
    let log_phi: Vec<f64> = phis.iter().map(|v| v.ln()).collect();
    let mut gap_fit = None;
    let mut loglog_fit = None;
    if let Some(expected) = checks.gap_slope {
        let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
        let (slope, _) = line_fit(&xs, &log_phi)?;
        let tol = checks.gap_slope_tol.unwrap_or(DEFAULT_GAP_SLOPE_TOL);
        let hit = slope_ok(slope, expected, tol);
        ok &= hit;
        notes.push(format!(
            "log-gap slope {} vs {} ({})",
            disp(slope),
            disp(expected),
            if hit { "ok" } else { "off" }
        ));
        gap_fit = Some(slope);
    }
    if let Some(expected) = checks.loglog_slope {
        let xs: Vec<f64> = deltas.iter().map(|d| d.ln().abs().ln()).collect();
        let (slope, _) = line_fit(&xs, &log_phi)?;
        let tol = checks.loglog_slope_tol.unwrap_or(DEFAULT_LOGLOG_SLOPE_TOL);
        let hit = slope_ok(slope, expected, tol);
        ok &= hit;
        notes.push(format!(
            "log-log-gap slope {} vs {} ({})",
            disp(slope),
            disp(expected),
            if hit { "ok" } else { "off" }
        ));
        loglog_fit = Some(slope);
    }
    if notes.is_empty() {
        notes.push("no slope checks configured".into());
    }

    let mut csv = String::from("delta,phi,attained_p\n");
    for i in 0..deltas.len() {
        csv.push_str(&format!("{},{},{}\n", deltas[i], phis[i], at_ps[i]));
    }
    let results = json!({
        "weight": psi.to_string(),
        "delta": deltas,
        "phi": phis,
        "attained_p": at_ps,
        "gap_slope": gap_fit,
        "loglog_slope": loglog_fit,
    });
    Ok((ok, notes.join(", "), csv, results))
}

/// Certificate weight: the configured `[weight]`, else the degenerate
/// weight at the configured `p`, which reduces the bound to the plain
/// single-exponent inequality.
fn certificate_weight(cfg: &ExperimentConfig) -> Result<PsiFunction> {
    match cfg.weight_fn()? {
        Some(w) => Ok(w),
        None => PsiFunction::degenerate(need_p(cfg)?),
    }
}

/// Judges certificate rows at the configured slack: a row passes when it
/// is vacuous or its measured modulus is at most `slack_tol` times the
/// bound.  Returns (passed, body).
fn judge_certificate(cert: &ContinuityCertificate, checks: &ChecksSpec) -> (bool, String) {
    let slack_tol = checks.slack_tol.unwrap_or(DEFAULT_SLACK);
    let mut held = 0usize;
    let mut worst: Option<(f64, usize)> = None;
    for i in 0..cert.len() {
        let ok = match cert.status[i] {
            CertStatus::Vacuous => true,
            _ => cert.measured[i] <= cert.bound[i] * slack_tol,
        };
        if ok {
            held += 1;
        }
        if cert.status[i] != CertStatus::Vacuous {
            let ratio = cert.measured[i] / cert.bound[i];
            if worst.map_or(true, |(w, _)| ratio > w) {
                worst = Some((ratio, i));
            }
        }
    }
    let passed = held == cert.len();
    let body = match worst {
        None => format!("{held}/{} rows hold (all vacuous)", cert.len()),
        Some((ratio, i)) => format!(
            "{held}/{} rows hold at slack {slack_tol}; largest measured/bound {} at delta [{}]",
            cert.len(),
            disp(ratio),
            join_disp(&cert.delta[i]),
        ),
    };
    (passed, body)
}

fn run_certify_1d(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = need_function(cfg)?;
    if spec.d() != 1 {
        return Err(Error::Config(
            "certify-1d needs a line function; use certify-nd for planar ones".into(),
        ));
    }
    let n = grid_n(cfg, DEFAULT_LINE_N);
    let f = spec.build(n, grid_width(cfg))?;
    let alpha = need_alpha_scalar(cfg)?;
    let psi = certificate_weight(cfg)?;
    let deltas = need_delta(cfg)?;
    let scfg = cfg.seminorm_config();
    let cert = certify_1d(&f, alpha, &psi, deltas, &scfg)?;
    let (passed, body) = judge_certificate(&cert, &cfg.checks());
    let results = json!({
        "n": n,
        "slack_tol": cfg.checks().slack_tol.unwrap_or(DEFAULT_SLACK),
        "certificate": serde_json::to_value(&cert).expect("certificate serialization"),
    });
    Ok((passed, body, cert.to_csv(), results))
}

fn run_certify_nd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = need_function(cfg)?;
    let d = spec.d();
    if d != 2 {
        return Err(Error::Config(
            "certify-nd needs a planar function; use certify-1d on a line".into(),
        ));
    }
    let n = grid_n(cfg, DEFAULT_PLANE_N);
    let f = spec.build(n, grid_width(cfg))?;
    let alpha = need_alpha_index(cfg, d)?;
    let psi = certificate_weight(cfg)?;
    let rows = delta_rows(cfg, d)?;
    let scfg = cfg.seminorm_config();
    let cert = certify_nd(&f, &alpha, &psi, &rows, &scfg)?;
    let (passed, body) = judge_certificate(&cert, &cfg.checks());
    let results = json!({
        "n": n,
        "slack_tol": cfg.checks().slack_tol.unwrap_or(DEFAULT_SLACK),
        "certificate": serde_json::to_value(&cert).expect("certificate serialization"),
    });
    Ok((passed, body, cert.to_csv(), results))
}

fn run_exactness(cfg: &ExperimentConfig) -> Result<Outcome> {
    let alpha = need_alpha_scalar(cfg)?;
    let p = need_p(cfg)?;
    let excesses = cfg.excess.as_ref().ok_or_else(|| missing("excess"))?;
    let deltas = need_delta(cfg)?;
    let n = grid_n(cfg, DEFAULT_EXACTNESS_N);
    let upper = 1.0 - alpha + 1.0 / p;
    for &e in excesses {
        if !(e > 0.0 && e < upper) {
            return Err(Error::Config(format!(
                "excess {e} outside the admissible range (0, {upper}) for alpha {alpha}, p {p}"
            )));
        }
    }
    let table = exactness_experiment(alpha, p, deltas, excesses, n, &cfg.seminorm_config())?;
    let floor = cfg.checks().v_floor.unwrap_or(DEFAULT_V_FLOOR);
    let mut min_v = f64::INFINITY;
    let mut min_at = (0.0, 0.0);
    for r in &table.rows {
        if r.v_ratio < min_v {
            min_v = r.v_ratio;
            min_at = (r.excess, r.delta);
        }
    }
    let passed = table.rows.iter().all(|r| r.v_ratio >= floor);

    let mut csv = String::from("excess,delta,measured,bound,v_ratio\n");
    for r in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.excess, r.delta, r.measured, r.bound, r.v_ratio
        ));
    }
    let results = json!({
        "floor": floor,
        "table": serde_json::to_value(&table).expect("table serialization"),
    });
    let body = format!(
        "min V {} at excess {}, delta {} (floor {floor})",
        disp(min_v),
        disp(min_at.0),
        disp(min_at.1),
    );
    Ok((passed, body, csv, results))
}

fn run_scaling(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = need_function(cfg)?;
    if spec.d() != 1 {
        return Err(Error::Config("scaling runs on line functions".into()));
    }
    let alpha = need_alpha_scalar(cfg)?;
    let p = need_p(cfg)?;
    let lambdas = cfg.lambda.as_ref().ok_or_else(|| missing("lambda"))?;
    for &l in lambdas {
        if !(l > 0.0 && l <= 1.0) {
            return Err(Error::Config(format!("lambda {l} outside (0, 1]")));
        }
    }
    let n = grid_n(cfg, DEFAULT_LINE_N);
    let table = scaling_experiment(|x| spec.eval1(x), alpha, p, lambdas, n, &cfg.seminorm_config())?;
    let checks = cfg.checks();
    let band = checks.ratio_band.unwrap_or(DEFAULT_SCALING_BAND);
    let slope_band = checks.slope_band.unwrap_or(DEFAULT_SCALING_BAND);
    let target = alpha - 1.0 / p;
    let worst = table
        .rows
        .iter()
        .map(|r| (r.ratio - 1.0).abs())
        .fold(0.0f64, f64::max);
    let slope_err = (table.slope - target).abs();
    let passed = worst <= band && slope_err <= slope_band;

    let mut csv = String::from("lambda,seminorm,predicted,ratio\n");
    for r in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.lambda, r.seminorm, r.predicted, r.ratio
        ));
    }
    let results = json!({
        "ratio_band": band,
        "slope_band": slope_band,
        "target_slope": target,
        "table": serde_json::to_value(&table).expect("table serialization"),
    });
    let body = format!(
        "max ratio err {} (band {band}), slope {} vs {} (tol {slope_band})",
        disp(worst),
        disp(table.slope),
        disp(target),
    );
    Ok((passed, body, csv, results))
}

fn run_orlicz_roundtrip(cfg: &ExperimentConfig) -> Result<Outcome> {
    let psi = need_weight(cfg)?;
    let grid = match &cfg.p_grid {
        Some(g) => g.clone(),
        None => {
            let (lo, hi) = psi.support();
            default_p_grid_sized(lo.max(2.0), hi.min(100.0), 24)?
        }
    };
    let young = orlicz_from_psi(&psi)?;
    let back = psi_from_orlicz(&young, &grid)?;
    let nodes: Vec<f64> = match back.rule() {
        PsiRule::Tabulated { p, .. } => p.clone(),
        _ => grid.clone(),
    };
    let c = cfg.checks().equivalence_band.unwrap_or(DEFAULT_EQUIVALENCE);
    let mut rows = Vec::with_capacity(nodes.len());
    let mut worst: f64 = 1.0;
    let mut all_in = true;
    for &p in &nodes {
        let original = psi.eval(p)?;
        let recovered = back.eval(p)?;
        let ratio = recovered / original;
        all_in &= ratio.is_finite() && ratio >= 1.0 / c && ratio <= c;
        let dev = if ratio >= 1.0 { ratio } else { 1.0 / ratio };
        worst = worst.max(dev);
        rows.push((p, original, recovered, ratio));
    }

    let mut csv = String::from("p,original,recovered,ratio\n");
    for (p, o, r, q) in &rows {
        csv.push_str(&format!("{p},{o},{r},{q}\n"));
    }
    let results = json!({
        "weight": psi.to_string(),
        "young": young.to_string(),
        "band": c,
        "p": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        "original": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        "recovered": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
        "ratio": rows.iter().map(|r| r.3).collect::<Vec<_>>(),
    });
    let body = format!(
        "round trip over {} exponents, worst deviation {} (band [{}, {c}])",
        rows.len(),
        disp(worst),
        disp(1.0 / c),
    );
    Ok((all_in, body, csv, results))
}

fn run_field_modulus(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let model = need_model(cfg)?.build(seed)?;
    let d = model.d();
    let alpha = need_alpha_index(cfg, d)?;
    let rows = delta_rows(cfg, d)?;
    let p_grid = cfg
        .p_grid
        .clone()
        .unwrap_or_else(|| DEFAULT_MODULUS_P_GRID.to_vec());
    let mc = cfg.mc_config();
    let report = certify_expected_modulus(&model, &alpha, &rows, &p_grid, &mc)?;
    let passed = report.all_bounded();
    let min_slack = report
        .rows
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    let body = format!(
        "{}/{} gap rows bounded, min slack {}, moment order {}",
        report.rows.iter().filter(|r| r.slack >= 1.0).count(),
        report.rows.len(),
        disp(min_slack),
        disp(report.a_exp),
    );
    let results = serde_json::to_value(&report).expect("report serialization");
    Ok((passed, body, report.to_csv(), results))
}

fn run_field_envelope(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let model = need_model(cfg)?.build(seed)?;
    let d = model.d();
    let order = cfg.moment_order.ok_or_else(|| missing("moment_order"))?;
    let beta = cfg
        .kernel_exponent
        .as_ref()
        .ok_or_else(|| missing("kernel_exponent"))?;
    if beta.len() != d {
        return Err(Error::Config(format!(
            "kernel_exponent has {} entries, the model has {d} axes",
            beta.len()
        )));
    }
    let k_const = cfg
        .kernel_constant
        .ok_or_else(|| missing("kernel_constant"))?;
    let rows = delta_rows(cfg, d)?;
    let mc = cfg.mc_config();
    let report = modulus_envelope_experiment(&model, order, beta, k_const, &rows, &mc)?;
    let cap = cfg.checks().spread_cap.unwrap_or(DEFAULT_SPREAD_CAP);
    let passed = report.ratio_spread <= cap;
    let body = format!(
        "ratio spread {} (cap {cap}), moment slope [{}], prefactor {}",
        disp(report.ratio_spread),
        join_disp(&report.moment_slope),
        disp(report.moment_prefactor),
    );
    let results = json!({
        "spread_cap": cap,
        "report": serde_json::to_value(&report).expect("report serialization"),
    });
    Ok((passed, body, report.to_csv(), results))
}

fn run_field_tails(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let model = need_model(cfg)?.build(seed)?;
    let d = model.d();
    let alpha = need_alpha_index(cfg, d)?;
    let delta = need_delta(cfg)?;
    if delta.len() != d {
        return Err(Error::Config(format!(
            "delta is the single gap vector here: got {} entries, the model has {d} axes",
            delta.len()
        )));
    }
    let z_levels = cfg
        .z_levels
        .clone()
        .unwrap_or_else(|| DEFAULT_Z_LEVELS.to_vec());
    let p_grid = cfg
        .p_grid
        .clone()
        .unwrap_or_else(|| DEFAULT_TAIL_P_GRID.to_vec());
    let mc = cfg.mc_config();
    let report = tail_report(&model, &alpha, delta, &z_levels, &p_grid, &mc)?;
    let mut bounded = 0usize;
    let mut no_bound = 0usize;
    let mut passed = true;
    for r in &report.rows {
        match r.bound {
            None => no_bound += 1,
            Some(b) => {
                if r.exceedance <= b + 3.0 * r.std_error {
                    bounded += 1;
                } else {
                    passed = false;
                }
            }
        }
    }
    let body = format!(
        "{bounded}/{} levels within bound plus 3 std errors ({no_bound} below the norm threshold)",
        report.rows.len() - no_bound,
    );
    let results = serde_json::to_value(&report).expect("report serialization");
    Ok((passed, body, report.to_csv(), results))
}

fn run_distance_axioms(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let spec = need_function(cfg)?;
    let d = spec.d();
    let n = grid_n(cfg, if d == 2 { 33 } else { 257 });
    let f = spec.build(n, grid_width(cfg))?;
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let report = rectangle_distance_check(&f, trials, seed);
    let expectation = cfg
        .checks()
        .triangle
        .unwrap_or(TriangleExpectation::Either);
    let triangle_ok = match expectation {
        TriangleExpectation::Holds => report.triangle_violation_count == 0,
        TriangleExpectation::Violated => report.triangle_violation_count > 0,
        TriangleExpectation::Either => true,
    };
    let passed =
        report.shared_axis_failures == 0 && report.symmetry_failures == 0 && triangle_ok;

    let mut csv = String::new();
    for axis in ["x", "y", "z"] {
        for k in 1..=d {
            csv.push_str(&format!("{axis}_{k},"));
        }
    }
    csv.push_str("split,direct\n");
    for v in &report.triangle_violations {
        for idx in v.x.iter().chain(&v.y).chain(&v.z) {
            csv.push_str(&format!("{idx},"));
        }
        csv.push_str(&format!("{},{}\n", v.split, v.direct));
    }
    let results = json!({
        "trials": report.trials,
        "n": n,
        "shared_axis_failures": report.shared_axis_failures,
        "symmetry_failures": report.symmetry_failures,
        "triangle_violation_count": report.triangle_violation_count,
        "triangle_expectation": match expectation {
            TriangleExpectation::Holds => "holds",
            TriangleExpectation::Violated => "violated",
            TriangleExpectation::Either => "either",
        },
        "triangle_violations": report
            .triangle_violations
            .iter()
            .map(|v| json!({
                "x": v.x, "y": v.y, "z": v.z,
                "split": v.split, "direct": v.direct,
            }))
            .collect::<Vec<_>>(),
    });
    let body = format!(
        "{} axis failures, {} symmetry failures, {} triangle violations in {} trials (expected {})",
        report.shared_axis_failures,
        report.symmetry_failures,
        report.triangle_violation_count,
        report.trials,
        match expectation {
            TriangleExpectation::Holds => "none",
            TriangleExpectation::Violated => "some",
            TriangleExpectation::Either => "either way",
        },
    );
    Ok((passed, body, csv, results))
}
