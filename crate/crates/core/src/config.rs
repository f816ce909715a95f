//! Declarative experiment configs for the command line runner.
//!
//! A config is one TOML document: scalar parameters at the top, then
//! sections for the function or model under test, the weight, quadrature
//! and Monte Carlo settings, check tolerances and output routing. Every
//! experiment ships a complete embedded default, so each subcommand runs
//! without a file and `defaults` prints a starting point.
//!
//! Weights reuse the family documents of [`crate::psi::text`] verbatim as
//! the `[weight]` section.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fields::{FieldKind, McConfig, RandomFieldModel};
use crate::grid::GridFunction;
use crate::norms::SeminormConfig;
use crate::psi::text::{psi_from_text, psi_to_text};
use crate::psi::PsiFunction;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "seminorm")]
    Seminorm,
    #[serde(rename = "glnorm")]
    Glnorm,
    #[serde(rename = "fundamental")]
    Fundamental,
    #[serde(rename = "certify-1d")]
    Certify1d,
    #[serde(rename = "certify-nd")]
    CertifyNd,
    #[serde(rename = "exactness")]
    Exactness,
    #[serde(rename = "scaling")]
    Scaling,
    #[serde(rename = "orlicz-roundtrip")]
    OrliczRoundtrip,
    #[serde(rename = "field-modulus")]
    FieldModulus,
    #[serde(rename = "field-envelope")]
    FieldEnvelope,
    #[serde(rename = "field-tails")]
    FieldTails,
    #[serde(rename = "distance-axioms")]
    DistanceAxioms,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        ExperimentKind::Seminorm,
        ExperimentKind::Glnorm,
        ExperimentKind::Fundamental,
        ExperimentKind::Certify1d,
        ExperimentKind::CertifyNd,
        ExperimentKind::Exactness,
        ExperimentKind::Scaling,
        ExperimentKind::OrliczRoundtrip,
        ExperimentKind::FieldModulus,
        ExperimentKind::FieldEnvelope,
        ExperimentKind::FieldTails,
        ExperimentKind::DistanceAxioms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Seminorm => "seminorm",
            ExperimentKind::Glnorm => "glnorm",
            ExperimentKind::Fundamental => "fundamental",
            ExperimentKind::Certify1d => "certify-1d",
            ExperimentKind::CertifyNd => "certify-nd",
            ExperimentKind::Exactness => "exactness",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::OrliczRoundtrip => "orlicz-roundtrip",
            ExperimentKind::FieldModulus => "field-modulus",
            ExperimentKind::FieldEnvelope => "field-envelope",
            ExperimentKind::FieldTails => "field-tails",
            ExperimentKind::DistanceAxioms => "distance-axioms",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment \"{s}\"")))
    }
}

/// Closed-form test functions on `[0, width]` (d = 1) or the unit square
/// (d = 2, as a product or sum of two line functions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    /// `x^exponent`
    Power {
        exponent: f64,
    },
    /// `sum coeffs[i] x^i`
    Poly {
        coeffs: Vec<f64>,
    },
    /// `sin(freq x + phase)`
    Sine {
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `max(x - knee, 0)`
    Ramp {
        knee: f64,
    },
    /// piecewise-linear hat rising to 1 at `center`
    Tent {
        center: f64,
    },
    Separable {
        x: Box<FunctionSpec>,
        y: Box<FunctionSpec>,
    },
    Additive {
        x: Box<FunctionSpec>,
        y: Box<FunctionSpec>,
    },
}

impl FunctionSpec {
    pub fn d(&self) -> usize {
        match self {
            FunctionSpec::Separable { .. } | FunctionSpec::Additive { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionSpec::Constant { value } => finite("constant value", *value),
            FunctionSpec::Power { exponent } => {
                finite("power exponent", *exponent)?;
                if *exponent < 0.0 {
                    return Err(Error::bad_param(
                        "power exponent",
                        format!("{exponent} is negative"),
                    ));
                }
                Ok(())
            }
            FunctionSpec::Poly { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Empty {
                        what: "polynomial coefficients",
                    });
                }
                for &c in coeffs {
                    finite("polynomial coefficient", c)?;
                }
                Ok(())
            }
            FunctionSpec::Sine { freq, phase } => {
                finite("sine frequency", *freq)?;
                finite("sine phase", *phase)?;
                if *freq == 0.0 {
                    return Err(Error::bad_param("sine frequency", "zero"));
                }
                Ok(())
            }
            FunctionSpec::Ramp { knee } => {
                if !(knee.is_finite() && (0.0..1.0).contains(knee)) {
                    return Err(Error::bad_param("ramp knee", format!("{knee} outside [0, 1)")));
                }
                Ok(())
            }
            FunctionSpec::Tent { center } => {
                if !(center.is_finite() && *center > 0.0 && *center < 1.0) {
                    return Err(Error::bad_param(
                        "tent center",
                        format!("{center} outside (0, 1)"),
                    ));
                }
                Ok(())
            }
            FunctionSpec::Separable { x, y } | FunctionSpec::Additive { x, y } => {
                if x.d() != 1 || y.d() != 1 {
                    return Err(Error::bad_param(
                        "planar factors",
                        "must be line functions, not nested planar forms",
                    ));
                }
                x.validate()?;
                y.validate()
            }
        }
    }

    /// Pointwise value of a line function; planar forms evaluate through
    /// their factors.
    pub fn eval1(&self, x: f64) -> f64 {
        match self {
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Power { exponent } => x.powf(*exponent),
            FunctionSpec::Poly { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            FunctionSpec::Sine { freq, phase } => (freq * x + phase).sin(),
            FunctionSpec::Ramp { knee } => (x - knee).max(0.0),
            FunctionSpec::Tent { center } => {
                if x <= *center {
                    x / center
                } else {
                    (1.0 - x) / (1.0 - center)
                }
            }
            FunctionSpec::Separable { .. } | FunctionSpec::Additive { .. } => {
                unreachable!("planar form evaluated as a line function")
            }
        }
    }

    pub fn build(&self, n: usize, width: f64) -> Result<GridFunction> {
        self.validate()?;
        match self {
            FunctionSpec::Separable { x, y } => {
                planar_width(width)?;
                GridFunction::from_fn_2d(n, |a, b| x.eval1(a) * y.eval1(b))
            }
            FunctionSpec::Additive { x, y } => {
                planar_width(width)?;
                GridFunction::from_fn_2d(n, |a, b| x.eval1(a) + y.eval1(b))
            }
            _ => GridFunction::from_fn_with_width(n, width, |x| self.eval1(x)),
        }
    }
}

fn finite(what: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite { what, value: v });
    }
    Ok(())
}

fn planar_width(width: f64) -> Result<()> {
    if (width - 1.0).abs() > 1e-12 {
        return Err(Error::bad_param(
            "width",
            "planar functions live on the unit square",
        ));
    }
    Ok(())
}

/// Random process under test; the seed comes from the run, not the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: FieldKind,
    /// Nodes per axis; default 2^14 + 1 on the line, 2^9 + 1 per sheet axis.
    pub n: Option<usize>,
}

impl ModelSpec {
    pub fn build(&self, seed: u64) -> Result<RandomFieldModel> {
        let n = self.n.unwrap_or(match self.kind {
            FieldKind::BrownianSheet => (1 << 9) + 1,
            _ => (1 << 14) + 1,
        });
        match self.kind {
            FieldKind::BrownianMotion => RandomFieldModel::brownian_motion(seed, n),
            FieldKind::FractionalBrownianMotion { hurst } => {
                RandomFieldModel::fractional_brownian_motion(hurst, seed, n)
            }
            FieldKind::BrownianSheet => RandomFieldModel::brownian_sheet(seed, n),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: Option<usize>,
    pub width: Option<f64>,
}

/// Partial override of the seminorm quadrature settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub grading_ratio: Option<f64>,
    pub resolution: Option<usize>,
    pub full_gap_limit: Option<usize>,
    pub max_shells: Option<usize>,
    pub cap_1d: Option<usize>,
    pub cap_2d: Option<usize>,
    pub p_count: Option<usize>,
}

impl QuadratureSpec {
    pub fn to_config(&self) -> SeminormConfig {
        let mut cfg = SeminormConfig::default();
        if let Some(v) = self.grading_ratio {
            cfg.grading_ratio = v;
        }
        if let Some(v) = self.resolution {
            cfg.resolution = v;
        }
        if let Some(v) = self.full_gap_limit {
            cfg.full_gap_limit = v;
        }
        if let Some(v) = self.max_shells {
            cfg.max_shells = v;
        }
        if let Some(v) = self.cap_1d {
            cfg.cap_1d = v;
        }
        if let Some(v) = self.cap_2d {
            cfg.cap_2d = v;
        }
        if let Some(v) = self.p_count {
            cfg.p_count = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleExpectation {
    Holds,
    Violated,
    Either,
}

/// Tolerances the summary line is judged against; unset fields fall back
/// to per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksSpec {
    /// Expected scalar outcome (seminorm, glnorm) compared at `rel_tol`.
    pub expected: Option<f64>,
    pub rel_tol: Option<f64>,
    /// Multiplicative slack a certificate row may use (default 1.02 in the
    /// certify experiments).
    pub slack_tol: Option<f64>,
    /// Expected slope of log phi against log delta.
    pub gap_slope: Option<f64>,
    pub gap_slope_tol: Option<f64>,
    /// Expected slope of log phi against log |log delta|.
    pub loglog_slope: Option<f64>,
    pub loglog_slope_tol: Option<f64>,
    /// Exactness: smallest admissible log-ratio (default 0.98).
    pub v_floor: Option<f64>,
    /// Scaling: half-width of the admissible ratio band around 1 and the
    /// slope tolerance (defaults 0.01).
    pub ratio_band: Option<f64>,
    pub slope_band: Option<f64>,
    /// Orlicz round trip: admissible value ratio c, band `[1/c, c]`
    /// (default 4).
    pub equivalence_band: Option<f64>,
    /// Envelope: cap on the largest-over-smallest mean normalized modulus
    /// (default 10).
    pub spread_cap: Option<f64>,
    /// Distance axioms: whether the two-point triangle inequality is
    /// expected to hold, be violated, or either.
    pub triangle: Option<TriangleExpectation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::Parse(format!(
                "unknown format \"{other}\" (csv, json, both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    pub format: Option<OutputFormat>,
}

/// One experiment run: kind, parameters, inputs, tolerances, output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    /// Smoothness order per axis.
    pub alpha: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub p_grid: Option<Vec<f64>>,
    /// Gap values; the first (or only) axis.
    pub delta: Option<Vec<f64>>,
    /// Second-axis gaps for planar grids; crossed with `delta`.
    pub delta_y: Option<Vec<f64>>,
    /// Exactness: exponent excesses over the critical power.
    pub excess: Option<Vec<f64>>,
    /// Scaling: dilation factors in (0, 1].
    pub lambda: Option<Vec<f64>>,
    /// Tail report: tested exceedance levels.
    pub z_levels: Option<Vec<f64>>,
    /// Envelope: the moment order of the kernel hypothesis.
    pub moment_order: Option<f64>,
    /// Envelope: per-axis kernel gap exponents.
    pub kernel_exponent: Option<Vec<f64>>,
    /// Envelope: kernel constant.
    pub kernel_constant: Option<f64>,
    /// Distance axioms: random triples to draw.
    pub trials: Option<usize>,
    pub function: Option<FunctionSpec>,
    /// A weight family document, as in [`crate::psi::text`].
    pub weight: Option<toml::Value>,
    pub model: Option<ModelSpec>,
    pub grid: Option<GridSpec>,
    pub quadrature: Option<QuadratureSpec>,
    pub mc: Option<McConfig>,
    pub checks: Option<ChecksSpec>,
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses the `[weight]` section through the family grammar.
    pub fn weight_fn(&self) -> Result<Option<PsiFunction>> {
        match &self.weight {
            None => Ok(None),
            Some(value) => {
                let text = toml::to_string(value).map_err(|e| Error::Parse(e.to_string()))?;
                psi_from_text(&text).map(Some)
            }
        }
    }

    pub fn seminorm_config(&self) -> SeminormConfig {
        self.quadrature
            .as_ref()
            .map_or_else(SeminormConfig::default, QuadratureSpec::to_config)
    }

    pub fn mc_config(&self) -> McConfig {
        self.mc.clone().unwrap_or_default()
    }

    pub fn checks(&self) -> ChecksSpec {
        self.checks.clone().unwrap_or_default()
    }

    /// The embedded default document for an experiment; every subcommand
    /// runs on it as-is.
    pub fn default_for(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            experiment: Some(kind),
            seed: Some(0),
            ..ExperimentConfig::default()
        };
        match kind {
            ExperimentKind::Seminorm => {
                cfg.function = Some(FunctionSpec::Power { exponent: 1.0 });
                cfg.alpha = Some(vec![0.5]);
                cfg.p = Some(4.0);
                cfg.grid = Some(GridSpec {
                    n: Some(4097),
                    width: None,
                });
                cfg.checks = Some(ChecksSpec {
                    expected: Some(0.759_835_685_651_592_5),
                    rel_tol: Some(1e-3),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::Glnorm => {
                cfg.function = Some(FunctionSpec::Power { exponent: 1.0 });
                cfg.weight = Some(weight_value(
                    &PsiFunction::degenerate(2.0).expect("valid built-in weight"),
                ));
                cfg.grid = Some(GridSpec {
                    n: Some(4097),
                    width: None,
                });
                cfg.checks = Some(ChecksSpec {
                    expected: Some(0.577_350_269_189_625_7),
                    rel_tol: Some(1e-4),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::Fundamental => {
                cfg.weight = Some(weight_value(
                    &PsiFunction::power(1.0, 1.0, f64::INFINITY).expect("valid built-in weight"),
                ));
                cfg.delta = Some(log_spaced_decades(1e-6, 1e-2, 12));
                cfg.checks = Some(ChecksSpec {
                    loglog_slope: Some(-1.0),
                    loglog_slope_tol: Some(0.05),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::Certify1d => {
                cfg.function = Some(FunctionSpec::Power { exponent: 0.6 });
                cfg.alpha = Some(vec![0.5]);
                cfg.p = Some(4.0);
                cfg.delta = Some(dyadic(1, 8));
                cfg.grid = Some(GridSpec {
                    n: Some(4097),
                    width: None,
                });
                cfg.checks = Some(ChecksSpec {
                    slack_tol: Some(1.02),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::CertifyNd => {
                cfg.function = Some(FunctionSpec::Separable {
                    x: Box::new(FunctionSpec::Power { exponent: 1.0 }),
                    y: Box::new(FunctionSpec::Power { exponent: 1.0 }),
                });
                cfg.alpha = Some(vec![0.5, 0.5]);
                cfg.p = Some(4.0);
                cfg.delta = Some(dyadic(1, 5));
                // largest planar lattice the pairwise sweep accepts
                cfg.grid = Some(GridSpec {
                    n: Some(64),
                    width: None,
                });
                cfg.checks = Some(ChecksSpec {
                    slack_tol: Some(1.02),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::Exactness => {
                cfg.alpha = Some(vec![0.5]);
                cfg.p = Some(4.0);
                cfg.excess = Some(vec![0.2, 0.1, 0.05]);
                cfg.delta = Some(dyadic(10, 12));
                cfg.grid = Some(GridSpec {
                    n: Some(16385),
                    width: None,
                });
                cfg.checks = Some(ChecksSpec {
                    v_floor: Some(0.98),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::Scaling => {
                cfg.function = Some(FunctionSpec::Sine {
                    freq: 3.0,
                    phase: 0.0,
                });
                cfg.alpha = Some(vec![0.5]);
                cfg.p = Some(4.0);
                cfg.lambda = Some(vec![0.5, 0.25]);
                cfg.grid = Some(GridSpec {
                    n: Some(4097),
                    width: None,
                });
                cfg.checks = Some(ChecksSpec {
                    ratio_band: Some(0.01),
                    slope_band: Some(0.01),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::OrliczRoundtrip => {
                cfg.weight = Some(weight_value(
                    &PsiFunction::power(0.5, 1.0, f64::INFINITY).expect("valid built-in weight"),
                ));
                cfg.checks = Some(ChecksSpec {
                    equivalence_band: Some(4.0),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::FieldModulus => {
                cfg.model = Some(ModelSpec {
                    kind: FieldKind::BrownianMotion,
                    n: Some(1025),
                });
                cfg.alpha = Some(vec![0.4]);
                cfg.delta = Some(dyadic(2, 5));
                cfg.p_grid = Some(vec![3.0, 4.0, 6.0, 8.0, 12.0]);
                cfg.mc = Some(McConfig {
                    paths: 2_000,
                    modulus_paths: 400,
                    ..McConfig::default()
                });
            }
            ExperimentKind::FieldEnvelope => {
                cfg.model = Some(ModelSpec {
                    kind: FieldKind::BrownianMotion,
                    n: Some(8193),
                });
                cfg.moment_order = Some(4.0);
                cfg.kernel_exponent = Some(vec![1.0]);
                cfg.kernel_constant = Some(3.2);
                cfg.delta = Some(vec![
                    0.25,
                    0.0625,
                    0.015625,
                    0.00390625,
                    0.0009765625,
                    0.000244140625,
                ]);
                cfg.mc = Some(McConfig {
                    paths: 2_000,
                    modulus_paths: 300,
                    ..McConfig::default()
                });
                cfg.checks = Some(ChecksSpec {
                    spread_cap: Some(10.0),
                    ..ChecksSpec::default()
                });
            }
            ExperimentKind::FieldTails => {
                cfg.model = Some(ModelSpec {
                    kind: FieldKind::BrownianMotion,
                    n: Some(1025),
                });
                cfg.alpha = Some(vec![0.4]);
                cfg.delta = Some(vec![0.03125]);
                cfg.z_levels = Some(vec![1.0, 1.5, 2.0, 3.0, 5.0]);
                cfg.p_grid = Some(vec![3.0, 4.0, 6.0, 8.0, 12.0, 16.0]);
                cfg.mc = Some(McConfig {
                    paths: 2_000,
                    modulus_paths: 1_000,
                    ..McConfig::default()
                });
            }
            ExperimentKind::DistanceAxioms => {
                cfg.function = Some(FunctionSpec::Separable {
                    x: Box::new(FunctionSpec::Power { exponent: 1.0 }),
                    y: Box::new(FunctionSpec::Power { exponent: 1.0 }),
                });
                cfg.grid = Some(GridSpec {
                    n: Some(33),
                    width: None,
                });
                cfg.trials = Some(2_000);
                cfg.checks = Some(ChecksSpec {
                    triangle: Some(TriangleExpectation::Violated),
                    ..ChecksSpec::default()
                });
            }
        }
        cfg
    }
}

fn weight_value(psi: &PsiFunction) -> toml::Value {
    let text = psi_to_text(psi).expect("weight family serializes");
    toml::from_str(&text).expect("weight document parses")
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

fn log_spaced_decades(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
