//! Garsia–Rodemich–Rumsey continuity bounds and the certificates produced by
//! checking them against measured moduli.
//!
//! A certificate fixes a smoothness order and a weight, evaluates the bound
//! `prod_k delta_k^{alpha_k} / phi(delta) * ||f||` on a grid of gap vectors,
//! measures the lattice modulus on the same grid, and records the slack ratio
//! bound/measured per row. The norm is computed once per weight; the whole
//! gap dependence of the bound sits in the `delta^alpha / phi` prefactor.
//!
//! The measured side is a maximum over lattice pairs, hence a slight
//! under-estimate of the continuum modulus; a certificate row therefore
//! "holds" when its slack ratio is at least `1 - CERT_TOLERANCE` rather than
//! exactly 1.

use crate::error::Error;
use crate::fit;
use crate::grid::{
    dilate, modulus_of_continuity, rectangle_modulus_table, FractionalIndex, GridFunction,
    RectangleModulusTable,
};
use crate::norms::{
    default_p_grid_sized, gagliardo_seminorm_1d, gagliardo_seminorm_nd, grr_coefficient, psi_alpha,
    roundoff_floor, Seminorm, SeminormConfig,
};
use crate::psi::orlicz::{orlicz_from_psi, orlicz_from_psi_any_support, YoungFunction};
use crate::psi::{PsiFunction, PsiRule};
use crate::Result;
use serde::Serialize;

/// Accepted shortfall of the slack ratio `bound / measured` below 1, covering
/// quadrature bias on the bound side (none of it weakens the inequality
/// itself: the measured lattice modulus only under-estimates the continuum
/// modulus).
pub const CERT_TOLERANCE: f64 = 0.02;

/// Outcome of a single gap row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertStatus {
    /// bound covers the measured modulus up to the tolerance
    Holds,
    Fails,
    /// nothing to compare: measured modulus is zero or the bound is infinite
    Vacuous,
}

impl std::fmt::Display for CertStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CertStatus::Holds => "holds",
            CertStatus::Fails => "fails",
            CertStatus::Vacuous => "vacuous",
        })
    }
}

/// Parameters a certificate was produced under.
#[derive(Debug, Clone, Serialize)]
pub struct CertParams {
    pub alpha: Vec<f64>,
    /// display form of the weight the bound was built from
    pub psi: String,
    /// grand norm of the construction; absent for a minimum over orders,
    /// where each order carries its own norm
    pub norm: Option<f64>,
    pub tolerance: f64,
}

/// Bound-versus-measurement table over a grid of gap vectors.
///
/// All row vectors share one length; `delta[i]` has one entry per axis.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityCertificate {
    pub delta: Vec<Vec<f64>>,
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
    /// bound / measured; infinite on vacuous rows
    pub slack: Vec<f64>,
    pub status: Vec<CertStatus>,
    /// order attaining the minimal bound per row, for certificates that
    /// minimize over an order grid
    pub argmin_alpha: Option<Vec<f64>>,
    pub params: CertParams,
}

impl ContinuityCertificate {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// True when no row fails (vacuous rows do not count against).
    pub fn all_hold(&self) -> bool {
        self.status.iter().all(|s| *s != CertStatus::Fails)
    }

    /// One row per gap vector: per-axis gaps, measured, bound, slack, status.
    pub fn to_csv(&self) -> String {
        let d = self.delta.first().map_or(1, Vec::len);
        let mut out = String::new();
        for k in 1..=d {
            out.push_str(&format!("delta_{k},"));
        }
        out.push_str("measured,bound,slack,status");
        if self.argmin_alpha.is_some() {
            out.push_str(",alpha");
        }
        out.push('\n');
        for i in 0..self.len() {
            for v in &self.delta[i] {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!(
                "{},{},{},{}",
                self.measured[i], self.bound[i], self.slack[i], self.status[i]
            ));
            if let Some(at) = &self.argmin_alpha {
                out.push_str(&format!(",{}", at[i]));
            }
            out.push('\n');
        }
        out
    }
}

fn classify(measured: f64, bound: f64, tol: f64) -> (f64, CertStatus) {
    if measured == 0.0 || !bound.is_finite() {
        return (f64::INFINITY, CertStatus::Vacuous);
    }
    let slack = bound / measured;
    if slack >= 1.0 - tol {
        (slack, CertStatus::Holds)
    } else {
        (slack, CertStatus::Fails)
    }
}

/// `8 * 4^{1/p} * (alpha + 1/p)/(alpha - 1/p) * delta^{alpha - 1/p} * seminorm`:
/// the one-dimensional continuity bound at a single exponent.
pub fn grr_bound_1d(alpha: f64, p: f64, delta: f64, seminorm: f64) -> Result<f64> {
    let ix = FractionalIndex::new(vec![alpha])?;
    grr_bound_nd(&ix, p, &[delta], seminorm)
}

/// Product-kernel continuity bound at a single exponent:
/// `8^d 4^{d/p} prod_k (a_k + 1/p)/(a_k - 1/p) * prod_k delta_k^{a_k} *
/// (prod_k delta_k)^{-1/p} * seminorm`.
pub fn grr_bound_nd(alpha: &FractionalIndex, p: f64, delta: &[f64], seminorm: f64) -> Result<f64> {
    if delta.len() != alpha.d() {
        return Err(Error::GridMismatch {
            why: format!(
                "gap vector has length {}, index has d = {}",
                delta.len(),
                alpha.d()
            ),
        });
    }
    if seminorm.is_nan() || seminorm < 0.0 {
        return Err(Error::bad_param("seminorm", format!("{seminorm}")));
    }
    let c = grr_coefficient(alpha, p)?;
    let mut shape = 1.0f64;
    let mut prod = 1.0f64;
    for (&dk, &ak) in delta.iter().zip(&alpha.alpha) {
        if !(dk.is_finite() && dk > 0.0) {
            return Err(Error::bad_param("gap", format!("{dk}")));
        }
        shape *= dk.powf(ak);
        prod *= dk;
    }
    Ok(c * shape * prod.powf(-1.0 / p) * seminorm)
}

/// Largest measured value still attributable to rounding on this lattice.
fn measurement_floor(f: &GridFunction) -> f64 {
    let (lo, hi) = f.min_max();
    roundoff_floor(hi.abs().max(lo.abs()))
}

fn measured_row(
    f: &GridFunction,
    table: Option<&RectangleModulusTable>,
    row: &[f64],
    floor: f64,
) -> Result<f64> {
    let raw = match table {
        None => modulus_of_continuity(f, row[0])?,
        Some(t) => t.at(row)?,
    };
    // sub-roundoff maxima are cancellation residue, not a modulus
    Ok(if raw <= floor { 0.0 } else { raw })
}

/// Shared engine: tabulates the seminorm over the admissible exponent window,
/// forms the grand norm `sup_p zeta(p)/psi(p)`, builds the continuity weight
/// on the surviving exponents and evaluates bound and measurement per row.
///
/// Exponents where the seminorm quadrature diverges lie outside the
/// seminorm's support and are dropped; dropping them can only enlarge the
/// reported bound. An empty window is an error: the weight's support and the
/// seminorm's support must overlap above the critical exponent.
fn certify_grr(
    f: &GridFunction,
    alpha: &FractionalIndex,
    psi: &PsiFunction,
    deltas: &[Vec<f64>],
    cfg: &SeminormConfig,
) -> Result<ContinuityCertificate> {
    if alpha.d() != f.d() {
        return Err(Error::GridMismatch {
            why: format!("index has d = {}, lattice has d = {}", alpha.d(), f.d()),
        });
    }
    if deltas.is_empty() {
        return Err(Error::Empty { what: "gap grid" });
    }
    for row in deltas {
        if row.len() != f.d() {
            return Err(Error::GridMismatch {
                why: format!(
                    "gap vector has length {}, lattice has d = {}",
                    row.len(),
                    f.d()
                ),
            });
        }
        for &dk in row {
            if !(dk.is_finite() && dk > 0.0) {
                return Err(Error::bad_param("gap", format!("{dk}")));
            }
        }
    }
    cfg.validate()?;

    let (norm, bounds) = match *psi.rule() {
        PsiRule::Degenerate { r, value } => {
            if r <= alpha.p0 {
                return Err(Error::BadSupport {
                    lower: alpha.p0,
                    upper: r,
                });
            }
            match gagliardo_seminorm_nd(f, alpha, r, cfg)? {
                Seminorm::Divergent => (f64::INFINITY, vec![f64::INFINITY; deltas.len()]),
                Seminorm::Finite(z) => {
                    let mut bs = Vec::with_capacity(deltas.len());
                    for row in deltas {
                        bs.push(grr_bound_nd(alpha, r, row, z)?);
                    }
                    (z / value, bs)
                }
            }
        }
        _ => {
            let (a, b) = psi.support();
            let lo = a.max(alpha.p0);
            if lo >= b {
                return Err(Error::BadSupport {
                    lower: lo,
                    upper: b,
                });
            }
            let grid = default_p_grid_sized(lo, b, cfg.p_count)?;
            let mut ps = Vec::new();
            let mut lz = Vec::new();
            let mut lw = Vec::new();
            for &p in &grid {
                let lpsi = match psi.log_eval(p) {
                    Ok(v) if v.is_finite() => v,
                    Ok(_) => continue,
                    Err(Error::OutsideTabulatedHull { .. }) => continue,
                    Err(e) => return Err(e),
                };
                match gagliardo_seminorm_nd(f, alpha, p, cfg)? {
                    Seminorm::Divergent => continue,
                    Seminorm::Finite(z) => {
                        ps.push(p);
                        lz.push(if z > 0.0 { z.ln() } else { f64::NEG_INFINITY });
                        lw.push(lpsi);
                    }
                }
            }
            if ps.is_empty() {
                return Err(Error::bad_param(
                    "certificate",
                    format!("no exponent in ({lo}, {b}) carries a finite seminorm"),
                ));
            }
            let ln_norm = lz
                .iter()
                .zip(&lw)
                .map(|(&z, &w)| z - w)
                .fold(f64::NEG_INFINITY, f64::max);
            let norm = ln_norm.exp();
            let bounds = if norm == 0.0 {
                vec![0.0; deltas.len()]
            } else if ps.len() == 1 {
                // single admissible exponent: the weight's value cancels
                // between norm and fundamental function
                let z = lz[0].exp();
                let mut bs = Vec::with_capacity(deltas.len());
                for row in deltas {
                    bs.push(grr_bound_nd(alpha, ps[0], row, z)?);
                }
                bs
            } else {
                let base = PsiFunction::tabulated_log(ps.clone(), lw.clone())?;
                let weight = psi_alpha(&base, alpha)?;
                let mut bs = Vec::with_capacity(deltas.len());
                for row in deltas {
                    let prod: f64 = row.iter().product();
                    let phi = weight.fundamental(prod)?.value;
                    let shape: f64 = row
                        .iter()
                        .zip(&alpha.alpha)
                        .map(|(&dk, &ak)| dk.powf(ak))
                        .product();
                    bs.push(shape / phi * norm);
                }
                bs
            };
            (norm, bounds)
        }
    };

    let table = match f.d() {
        2 => Some(rectangle_modulus_table(f)?),
        _ => None,
    };
    let floor = measurement_floor(f);
    let mut measured = Vec::with_capacity(deltas.len());
    let mut slack = Vec::with_capacity(deltas.len());
    let mut status = Vec::with_capacity(deltas.len());
    for (row, &bv) in deltas.iter().zip(&bounds) {
        let m = measured_row(f, table.as_ref(), row, floor)?;
        let (s, st) = classify(m, bv, CERT_TOLERANCE);
        measured.push(m);
        slack.push(s);
        status.push(st);
    }
    Ok(ContinuityCertificate {
        delta: deltas.to_vec(),
        measured,
        bound: bounds,
        slack,
        status,
        argmin_alpha: None,
        params: CertParams {
            alpha: alpha.alpha.clone(),
            psi: psi.to_string(),
            norm: Some(norm),
            tolerance: CERT_TOLERANCE,
        },
    })
}

/// Continuity certificate for a one-dimensional lattice function: for each
/// gap `delta`, compares the measured modulus of continuity against
/// `delta^alpha / phi(delta) * ||f||` built from the weight `psi`.
pub fn certify_1d(
    f: &GridFunction,
    alpha: f64,
    psi: &PsiFunction,
    delta_grid: &[f64],
    cfg: &SeminormConfig,
) -> Result<ContinuityCertificate> {
    if f.d() != 1 {
        return Err(Error::BadDimension {
            d: f.d(),
            supported: "1",
        });
    }
    let ix = FractionalIndex::new(vec![alpha])?;
    let rows: Vec<Vec<f64>> = delta_grid.iter().map(|&dl| vec![dl]).collect();
    certify_grr(f, &ix, psi, &rows, cfg)
}

/// Continuity certificate for the rectangle modulus: per gap vector, the
/// measured rectangle modulus against
/// `prod_k delta_k^{alpha_k} / phi(prod_k delta_k) * ||f||`.
pub fn certify_nd(
    f: &GridFunction,
    alpha: &FractionalIndex,
    psi: &PsiFunction,
    deltas: &[Vec<f64>],
    cfg: &SeminormConfig,
) -> Result<ContinuityCertificate> {
    certify_grr(f, alpha, psi, deltas, cfg)
}

/// Minimum of the one-dimensional bound over a grid of orders, one weight per
/// order. Orders whose certificate cannot be formed (empty admissible
/// window) are skipped; if every order is skipped the last error surfaces.
pub fn certify_best_order(
    f: &GridFunction,
    alpha_grid: &[f64],
    psi_for: impl Fn(f64) -> Result<PsiFunction>,
    delta_grid: &[f64],
    cfg: &SeminormConfig,
) -> Result<ContinuityCertificate> {
    if alpha_grid.is_empty() {
        return Err(Error::Empty { what: "order grid" });
    }
    let mut best = vec![f64::INFINITY; delta_grid.len()];
    let mut at = vec![f64::NAN; delta_grid.len()];
    let mut measured: Option<Vec<f64>> = None;
    let mut last_err = None;
    for &a in alpha_grid {
        let cert = match psi_for(a).and_then(|psi| certify_1d(f, a, &psi, delta_grid, cfg)) {
            Ok(c) => c,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if measured.is_none() {
            measured = Some(cert.measured.clone());
        }
        for (j, &bv) in cert.bound.iter().enumerate() {
            if bv < best[j] {
                best[j] = bv;
                at[j] = a;
            }
        }
    }
    let Some(measured) = measured else {
        return Err(last_err.unwrap_or(Error::Empty { what: "order grid" }));
    };
    let mut slack = Vec::with_capacity(delta_grid.len());
    let mut status = Vec::with_capacity(delta_grid.len());
    for (i, &bv) in best.iter().enumerate() {
        let (s, st) = classify(measured[i], bv, CERT_TOLERANCE);
        slack.push(s);
        status.push(st);
    }
    Ok(ContinuityCertificate {
        delta: delta_grid.iter().map(|&dl| vec![dl]).collect(),
        measured,
        bound: best,
        slack,
        status,
        argmin_alpha: Some(at),
        params: CertParams {
            alpha: alpha_grid.to_vec(),
            psi: format!("minimum over {} orders", alpha_grid.len()),
            norm: None,
            tolerance: CERT_TOLERANCE,
        },
    })
}

/// Power-law majorant distance `u -> scale * u^gamma`, the Stieltjes
/// integrator of the Orlicz-form bound. Strictly increasing with value 0 at
/// the origin, as the bound requires.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MajorantDistance {
    gamma: f64,
    scale: f64,
}

impl MajorantDistance {
    pub fn power(gamma: f64) -> Result<Self> {
        Self::scaled_power(gamma, 1.0)
    }

    pub fn scaled_power(gamma: f64, scale: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::bad_param("majorant exponent", format!("{gamma}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::bad_param("majorant scale", format!("{scale}")));
        }
        Ok(MajorantDistance { gamma, scale })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.scale * u.powf(self.gamma)
    }

    /// density of the induced measure, d(scale * u^gamma)/du
    pub fn slope(&self, u: f64) -> f64 {
        self.scale * self.gamma * u.powf(self.gamma - 1.0)
    }
}

/// A graded quadrature that may detect non-integrability at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IntegralBound {
    Finite(f64),
    Divergent,
}

impl IntegralBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            IntegralBound::Finite(v) => Some(*v),
            IntegralBound::Divergent => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, IntegralBound::Divergent)
    }

    pub fn value_or_infinite(&self) -> f64 {
        match self {
            IntegralBound::Finite(v) => *v,
            IntegralBound::Divergent => f64::INFINITY,
        }
    }
}

const GRADING: f64 = 0.5;
const MAX_LEVELS: usize = 400;
const QUAD_REL_TOL: f64 = 1e-12;
const DIVERGENCE_MARGIN: f64 = 1e-9;

/// `(1 - r^{t+1}) / (t+1)`, the exact integral of `(u/b)^t` over `[rb, b]`
/// in units of `b`; continuous through `t = -1`.
fn cell_factor(r: f64, t: f64) -> f64 {
    let s = t + 1.0;
    if s.abs() < 1e-12 {
        -r.ln()
    } else {
        -(s * r.ln()).exp_m1() / s
    }
}

/// Integrates `g` over `(0, hi]` on geometric cells graded toward the
/// origin. Each cell is integrated exactly under the power law through its
/// endpoint values, which makes the rule exact for pure powers; the local
/// exponent also drives the endgame: once it settles above -1 the remaining
/// tail is summed in closed form, and an exponent pinned at or below -1 on
/// consecutive cells means the integral diverges (`Ok(None)`).
fn graded_power_integral(mut g: impl FnMut(f64) -> Result<f64>, hi: f64) -> Result<Option<f64>> {
    let mut b = hi;
    let mut gb = g(b)?;
    let mut total = 0.0f64;
    let mut t_prev = f64::NAN;
    for _ in 0..MAX_LEVELS {
        let a = b * GRADING;
        let ga = g(a)?;
        if !(ga.is_finite() && ga >= 0.0 && gb.is_finite() && gb >= 0.0) {
            return Err(Error::NonFinite {
                what: "integrand",
                value: if ga.is_finite() { gb } else { ga },
            });
        }
        if ga == 0.0 {
            // integrand died toward the origin; the trapezoid closes the cell
            return Ok(Some(total + 0.5 * (ga + gb) * (b - a)));
        }
        let t = if gb == 0.0 {
            // escape a zero right endpoint without a fit
            total += 0.5 * (ga + gb) * (b - a);
            b = a;
            gb = ga;
            t_prev = f64::NAN;
            continue;
        } else {
            (ga / gb).ln() / GRADING.ln()
        };
        let cell = gb * b * cell_factor(GRADING, t);
        total += cell;
        let diverging = t <= -1.0 + DIVERGENCE_MARGIN;
        if diverging && t_prev <= -1.0 + DIVERGENCE_MARGIN {
            return Ok(None);
        }
        if !diverging {
            let tail = ga * a / (t + 1.0);
            if tail <= QUAD_REL_TOL * total || (t - t_prev).abs() <= 1e-9 {
                return Ok(Some(total + tail));
            }
        }
        b = a;
        gb = ga;
        t_prev = t;
    }
    // cap reached without settling; close with the last local power
    if t_prev > -1.0 + DIVERGENCE_MARGIN {
        Ok(Some(total + gb * b / (t_prev + 1.0)))
    } else {
        Ok(None)
    }
}

/// Orlicz-form continuity bound
/// `8^d * int_0^{delta_1}..int_0^{delta_d} Phi^{-1}(4^d B / prod u_j^2)
/// dp_1(u_1)..dp_d(u_d)` by nested graded quadrature (d = 1 or 2).
///
/// `b_value` is the double integral of `Phi(|rectangle difference| / prod
/// p_k)`, supplied by the caller. A non-integrable inner or outer integrand
/// is reported as `Divergent`, never as a number.
pub fn orlicz_grr_bound(
    phi: &YoungFunction,
    majorants: &[MajorantDistance],
    b_value: f64,
    delta: &[f64],
) -> Result<IntegralBound> {
    let d = majorants.len();
    if d == 0 || d > 2 {
        return Err(Error::BadDimension {
            d,
            supported: "1 or 2",
        });
    }
    if delta.len() != d {
        return Err(Error::GridMismatch {
            why: format!("{} gaps for {} majorants", delta.len(), d),
        });
    }
    for &dk in delta {
        if !(dk.is_finite() && dk > 0.0) {
            return Err(Error::bad_param("gap", format!("{dk}")));
        }
    }
    if !(b_value.is_finite() && b_value >= 0.0) {
        return Err(Error::bad_param("integral value", format!("{b_value}")));
    }
    if b_value == 0.0 {
        return Ok(IntegralBound::Finite(0.0));
    }
    let c = 4f64.powi(d as i32) * b_value;
    let scale = 8f64.powi(d as i32);
    match d {
        1 => {
            let m = majorants[0];
            let inner =
                graded_power_integral(|u| Ok(phi.inverse(c / (u * u))? * m.slope(u)), delta[0])?;
            Ok(match inner {
                None => IntegralBound::Divergent,
                Some(v) => IntegralBound::Finite(scale * v),
            })
        }
        _ => {
            let (m1, m2) = (majorants[0], majorants[1]);
            let mut divergent = false;
            let outer = graded_power_integral(
                |u1| {
                    if divergent {
                        return Ok(0.0);
                    }
                    let cu = c / (u1 * u1);
                    match graded_power_integral(
                        |u2| Ok(phi.inverse(cu / (u2 * u2))? * m2.slope(u2)),
                        delta[1],
                    )? {
                        None => {
                            divergent = true;
                            Ok(0.0)
                        }
                        Some(v) => Ok(m1.slope(u1) * v),
                    }
                },
                delta[0],
            )?;
            Ok(match (divergent, outer) {
                (true, _) | (_, None) => IntegralBound::Divergent,
                (false, Some(v)) => IntegralBound::Finite(scale * v),
            })
        }
    }
}

/// Components of the Orlicz–Sobolev continuity bound.
#[derive(Debug, Clone, Serialize)]
pub struct OrliczSobolevBound {
    /// `prod_k delta_k^{alpha_k} * norm / phi`, without the unspecified
    /// dimensional constant
    pub bound: f64,
    /// grand norm of the fractional difference family against the weight;
    /// stands in for the Orlicz norm of the induced space through the
    /// equivalence of the two scales, whose constant is absorbed into the
    /// unreported dimensional one
    pub norm: f64,
    /// fundamental function of the supplied weight at `prod_k delta_k`
    pub phi: f64,
    /// display form of the Young function the weight induces
    pub young: String,
    pub at_alpha: Vec<f64>,
}

/// Continuity bound through the Orlicz space induced by a seminorm weight
/// `tau`: the Young function `N` is recovered from `tau`, and the norm in
/// `L(N)` of the fractional difference family is evaluated through the
/// equivalence with the grand scale as `sup_p zeta_f(p) / tau(p)`, the
/// seminorm quadrature providing `zeta_f`. Bound =
/// `prod_k delta_k^{alpha_k} * norm / phi(prod delta_k)` up to a dimensional
/// constant which is reported through `norm` and `phi` separately rather
/// than asserted.
///
/// An analytic `tau` with bounded exponent support is rejected: no Orlicz
/// space corresponds to it. A tabulated `tau` is taken as a finite
/// representation of an unbounded-support weight.
pub fn orlicz_sobolev_bound(
    f: &GridFunction,
    alpha: &FractionalIndex,
    delta: &[f64],
    tau: &PsiFunction,
    cfg: &SeminormConfig,
) -> Result<OrliczSobolevBound> {
    if alpha.d() != f.d() || delta.len() != f.d() {
        return Err(Error::GridMismatch {
            why: format!(
                "index d = {}, lattice d = {}, gap vector length {}",
                alpha.d(),
                f.d(),
                delta.len()
            ),
        });
    }
    for &dk in delta {
        if !(dk.is_finite() && dk > 0.0) {
            return Err(Error::bad_param("gap", format!("{dk}")));
        }
    }
    let n_fun = match tau.rule() {
        PsiRule::Tabulated { .. } => orlicz_from_psi_any_support(tau)?,
        _ => orlicz_from_psi(tau)?,
    };
    let norm = grand_difference_norm(f, alpha, tau, cfg)?;
    let prod: f64 = delta.iter().product();
    let phi = tau.fundamental(prod)?.value;
    let shape: f64 = delta
        .iter()
        .zip(&alpha.alpha)
        .map(|(&dk, &ak)| dk.powf(ak))
        .product();
    let bound = if norm == 0.0 { 0.0 } else { shape * norm / phi };
    Ok(OrliczSobolevBound {
        bound,
        norm,
        phi,
        young: n_fun.to_string(),
        at_alpha: alpha.alpha.clone(),
    })
}

/// Minimum of [`orlicz_sobolev_bound`] over a grid of orders, one weight per
/// order.
pub fn orlicz_sobolev_best_order(
    f: &GridFunction,
    orders: &[FractionalIndex],
    delta: &[f64],
    tau_for: impl Fn(&FractionalIndex) -> Result<PsiFunction>,
    cfg: &SeminormConfig,
) -> Result<OrliczSobolevBound> {
    if orders.is_empty() {
        return Err(Error::Empty { what: "order grid" });
    }
    let mut best: Option<OrliczSobolevBound> = None;
    let mut last_err = None;
    for ix in orders {
        let out = match tau_for(ix).and_then(|tau| orlicz_sobolev_bound(f, ix, delta, &tau, cfg)) {
            Ok(o) => o,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if best.as_ref().is_none_or(|b| out.bound < b.bound) {
            best = Some(out);
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::Empty { what: "order grid" }))
}

/// `sup_p zeta_f(p) / psi(p)` over the weight's exponents above the
/// critical one, with the seminorm quadrature providing `zeta_f`. Tabulated
/// weights are evaluated at their own nodes, analytic ones on the default
/// exponent grid of their support. Divergent exponents push the norm to
/// infinity: they lie inside the weight's support, so the supremum is
/// genuinely infinite there.
fn grand_difference_norm(
    f: &GridFunction,
    alpha: &FractionalIndex,
    psi: &PsiFunction,
    cfg: &SeminormConfig,
) -> Result<f64> {
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    match psi.rule() {
        PsiRule::Degenerate { r, value } => nodes.push((*r, value.ln())),
        PsiRule::Tabulated { p, log_value } => {
            nodes.extend(p.iter().copied().zip(log_value.iter().copied()));
        }
        _ => {
            let (a, b) = psi.support();
            let lo = a.max(alpha.p0);
            if lo >= b {
                return Err(Error::BadSupport {
                    lower: lo,
                    upper: b,
                });
            }
            for p in default_p_grid_sized(lo, b, cfg.p_count)? {
                if let Ok(l) = psi.log_eval(p) {
                    if l.is_finite() {
                        nodes.push((p, l));
                    }
                }
            }
        }
    }
    let mut best: Option<f64> = None;
    for (p, lpsi) in nodes {
        if p <= alpha.p0 * (1.0 + 1e-12) {
            continue;
        }
        let v = match gagliardo_seminorm_nd(f, alpha, p, cfg)? {
            Seminorm::Divergent => f64::INFINITY,
            Seminorm::Finite(z) => {
                if z == 0.0 {
                    0.0
                } else {
                    (z.ln() - lpsi).exp()
                }
            }
        };
        best = Some(best.map_or(v, |b| b.max(v)));
    }
    best.ok_or(Error::BadSupport {
        lower: alpha.p0,
        upper: alpha.p0,
    })
}

/// One cell of the sharpness table.
#[derive(Debug, Clone, Serialize)]
pub struct ExactnessRow {
    /// exponent excess over the critical power `alpha - 1/p`
    pub excess: f64,
    pub delta: f64,
    pub measured: f64,
    pub bound: f64,
    /// `|log measured| / |log bound|`
    pub v_ratio: f64,
}

/// Sharpness table for the power family `x^{alpha - 1/p + excess}`.
#[derive(Debug, Clone, Serialize)]
pub struct ExactnessTable {
    pub alpha: f64,
    pub p: f64,
    pub n: usize,
    pub rows: Vec<ExactnessRow>,
    /// per excess, the log-ratio at the smallest gap: the quantity whose
    /// trend toward 1 as the excess shrinks witnesses sharpness
    pub trend: Vec<(f64, f64)>,
}

/// For each excess, builds `x^{alpha - 1/p + excess}` on an `n`-point
/// lattice, measures its modulus at every gap and compares against the
/// single-exponent bound with the seminorm computed once. The log-ratio
/// `|log omega| / |log bound|` exceeds 1 when the bound holds with room and
/// approaches 1 from above as the excess shrinks; its failure to go below 1
/// across the family is the sharpness evidence.
pub fn exactness_experiment(
    alpha: f64,
    p: f64,
    deltas: &[f64],
    excesses: &[f64],
    n: usize,
    cfg: &SeminormConfig,
) -> Result<ExactnessTable> {
    let ix = FractionalIndex::new(vec![alpha])?;
    if !(p.is_finite() && p > ix.p0) {
        return Err(Error::bad_param(
            "exponent",
            format!("need p > {}, got {p}", ix.p0),
        ));
    }
    if deltas.is_empty() || excesses.is_empty() {
        return Err(Error::Empty { what: "table grid" });
    }
    let critical = alpha - 1.0 / p;
    let ceiling = 1.0 - critical;
    for &ex in excesses {
        if !(ex.is_finite() && ex > 0.0 && ex < ceiling) {
            return Err(Error::bad_param(
                "excess",
                format!("need 0 < excess < {ceiling}, got {ex}"),
            ));
        }
    }
    for &dl in deltas {
        if !(dl.is_finite() && dl > 0.0 && dl <= 1.0) {
            return Err(Error::bad_param("gap", format!("{dl}")));
        }
    }
    let mut rows = Vec::with_capacity(deltas.len() * excesses.len());
    let mut trend = Vec::with_capacity(excesses.len());
    for &ex in excesses {
        let beta = critical + ex;
        let f = GridFunction::from_fn(n, |x| x.powf(beta))?;
        let z = match gagliardo_seminorm_1d(&f, alpha, p, cfg)? {
            Seminorm::Finite(v) => v,
            Seminorm::Divergent => {
                return Err(Error::bad_param(
                    "exactness",
                    format!("seminorm quadrature diverged at excess {ex}; refine the lattice"),
                ));
            }
        };
        let mut best: Option<(f64, f64)> = None;
        for &dl in deltas {
            let w = modulus_of_continuity(&f, dl)?;
            let bv = grr_bound_1d(alpha, p, dl, z)?;
            let v = w.ln().abs() / bv.ln().abs();
            rows.push(ExactnessRow {
                excess: ex,
                delta: dl,
                measured: w,
                bound: bv,
                v_ratio: v,
            });
            if best.is_none_or(|(bd, _)| dl < bd) {
                best = Some((dl, v));
            }
        }
        let (_, v_small) = best.expect("deltas nonempty");
        trend.push((ex, v_small));
    }
    Ok(ExactnessTable {
        alpha,
        p,
        n,
        rows,
        trend,
    })
}

/// One dilation of the scaling check.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub lambda: f64,
    pub seminorm: f64,
    /// `lambda^{alpha - 1/p}` times the base seminorm
    pub predicted: f64,
    pub ratio: f64,
}

/// Dilation-homogeneity table for the seminorm.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingTable {
    pub alpha: f64,
    pub p: f64,
    pub base_seminorm: f64,
    pub rows: Vec<ScalingRow>,
    /// fitted log-log slope of seminorm against scale; NaN below two
    /// distinct scales
    pub slope: f64,
}

/// Measures `||f(lambda .)||` against the predicted `lambda^{alpha - 1/p}`
/// homogeneity. The function is continued past its unit interval by the
/// linear taper and every dilation is sampled at the base lattice spacing,
/// so the quadrature bias cancels in the ratios.
pub fn scaling_experiment(
    f: impl Fn(f64) -> f64,
    alpha: f64,
    p: f64,
    lambdas: &[f64],
    base_n: usize,
    cfg: &SeminormConfig,
) -> Result<ScalingTable> {
    if lambdas.is_empty() {
        return Err(Error::Empty { what: "scale grid" });
    }
    for &lam in lambdas {
        if !(lam.is_finite() && lam > 0.0 && lam <= 1.0) {
            return Err(Error::bad_param(
                "dilation scale",
                format!("need 0 < lambda <= 1, got {lam}"),
            ));
        }
    }
    let base = dilate(&f, 1.0, base_n)?;
    let z1 = match gagliardo_seminorm_1d(&base, alpha, p, cfg)? {
        Seminorm::Finite(v) if v > 0.0 => v,
        Seminorm::Finite(_) => {
            return Err(Error::bad_param(
                "scaling",
                "base seminorm vanishes; nothing to scale",
            ));
        }
        Seminorm::Divergent => {
            return Err(Error::bad_param("scaling", "base seminorm diverges"));
        }
    };
    let decay = alpha - 1.0 / p;
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for &lam in lambdas {
        // widen the lattice so the spacing matches the base run exactly
        let steps = ((base_n - 1) as f64 / lam).round() as usize;
        let g = dilate(&f, lam, steps + 1)?;
        let z = match gagliardo_seminorm_1d(&g, alpha, p, cfg)? {
            Seminorm::Finite(v) if v > 0.0 => v,
            _ => {
                return Err(Error::bad_param(
                    "scaling",
                    format!("seminorm degenerate at scale {lam}"),
                ));
            }
        };
        let predicted = lam.powf(decay) * z1;
        rows.push(ScalingRow {
            lambda: lam,
            seminorm: z,
            predicted,
            ratio: z / predicted,
        });
        lx.push(lam.ln());
        ly.push((z / z1).ln());
    }
    let distinct = lambdas.windows(2).any(|w| w[0] != w[1]) && lambdas.len() >= 2;
    let slope = if distinct {
        fit::line_fit(&lx, &ly)?.0
    } else {
        f64::NAN
    };
    Ok(ScalingTable {
        alpha,
        p,
        base_seminorm: z1,
        rows,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::zeta_natural;
    use proptest::prelude::*;

    fn cfg() -> SeminormConfig {
        SeminormConfig::default()
    }

    fn small_cfg(p_count: usize) -> SeminormConfig {
        SeminormConfig {
            p_count,
            ..SeminormConfig::default()
        }
    }

    #[test]
    fn one_dimensional_bound_coefficient() {
        let b = grr_bound_1d(1.0, 2.0, 1.0, 1.0).unwrap();
        assert!((b - 48.0).abs() < 1e-12);
        assert_eq!(grr_bound_1d(1.0, 2.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_bound_gap_power_law() {
        let alpha = 0.6;
        let p = 5.0;
        let b1 = grr_bound_1d(alpha, p, 0.4, 1.7).unwrap();
        let b2 = grr_bound_1d(alpha, p, 0.2, 1.7).unwrap();
        assert!((b1 / b2 - 2f64.powf(alpha - 1.0 / p)).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_bound_rejects_subcritical_exponent() {
        assert!(grr_bound_1d(0.5, 2.0, 0.5, 1.0).is_err());
        assert!(grr_bound_1d(0.5, 1.9, 0.5, 1.0).is_err());
        assert!(grr_bound_1d(0.5, 4.0, 0.0, 1.0).is_err());
        assert!(grr_bound_1d(0.5, 4.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn product_bound_reduces_to_one_dimension() {
        let ix = FractionalIndex::new(vec![0.7]).unwrap();
        let a = grr_bound_nd(&ix, 5.0, &[0.3], 1.3).unwrap();
        let b = grr_bound_1d(0.7, 5.0, 0.3, 1.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn product_bound_at_unit_gaps_is_the_coefficient() {
        let ix = FractionalIndex::new(vec![0.5, 1.0]).unwrap();
        let c = grr_coefficient(&ix, 4.0).unwrap();
        let b = grr_bound_nd(&ix, 4.0, &[1.0, 1.0], 2.0).unwrap();
        assert!((b - 2.0 * c).abs() < 1e-12 * b.abs());
    }

    #[test]
    fn product_bound_planar_value() {
        let ix = FractionalIndex::new(vec![0.5, 0.5]).unwrap();
        let b = grr_bound_nd(&ix, 4.0, &[0.25, 0.25], 1.0).unwrap();
        assert!((b - 576.0).abs() < 1e-9);
    }

    #[test]
    fn product_bound_rejects_critical_exponent() {
        let ix = FractionalIndex::new(vec![0.5, 1.0]).unwrap();
        assert!(grr_bound_nd(&ix, 2.0, &[0.5, 0.5], 1.0).is_err());
        assert!(grr_bound_nd(&ix, 4.0, &[0.5], 1.0).is_err());
    }

    #[test]
    fn degenerate_weight_certificate_matches_the_direct_bound() {
        let f = GridFunction::from_fn(257, |x| x.powf(0.6)).unwrap();
        let psi = PsiFunction::degenerate(4.0).unwrap();
        let gaps: Vec<f64> = (1..=5).map(|k| 2f64.powi(-k)).collect();
        let cert = certify_1d(&f, 0.5, &psi, &gaps, &cfg()).unwrap();
        let z = gagliardo_seminorm_1d(&f, 0.5, 4.0, &cfg())
            .unwrap()
            .value()
            .unwrap();
        for (i, &dl) in gaps.iter().enumerate() {
            let direct = grr_bound_1d(0.5, 4.0, dl, z).unwrap();
            assert!(
                (cert.bound[i] - direct).abs() <= 1e-12 * direct,
                "gap {dl}: {} vs {direct}",
                cert.bound[i]
            );
        }
        assert!(cert.all_hold());
        let norm = cert.params.norm.unwrap();
        assert!((norm - z).abs() <= 1e-12 * z);
    }

    #[test]
    fn certificate_for_a_constant_is_vacuous() {
        let f = GridFunction::from_fn(65, |_| 3.5).unwrap();
        let psi = PsiFunction::degenerate(4.0).unwrap();
        let cert = certify_1d(&f, 0.5, &psi, &[0.25, 0.5], &cfg()).unwrap();
        assert!(cert.status.iter().all(|s| *s == CertStatus::Vacuous));
        assert!(cert.all_hold());
        assert_eq!(cert.params.norm, Some(0.0));
    }

    #[test]
    fn natural_weight_certificate_holds_across_the_gap_grid() {
        let f = GridFunction::from_fn(1025, |x| x.powf(0.6)).unwrap();
        let ix = FractionalIndex::new(vec![0.5]).unwrap();
        let grid = default_p_grid_sized(2.0, 48.0, 16).unwrap();
        let zeta = zeta_natural(&f, &ix, &grid, &cfg()).unwrap();
        let gaps: Vec<f64> = (1..=8).map(|k| 2f64.powi(-k)).collect();
        let cert = certify_1d(&f, 0.5, &zeta, &gaps, &small_cfg(16)).unwrap();
        assert!(cert.all_hold(), "slack: {:?}", cert.slack);
        for &s in &cert.slack {
            assert!(s >= 1.0 - CERT_TOLERANCE);
        }
        // the weight is the function's own seminorm curve, so the norm is 1
        // up to interpolation error between the two exponent grids
        let norm = cert.params.norm.unwrap();
        assert!((norm - 1.0).abs() < 0.05, "norm {norm}");
    }

    #[test]
    fn certificate_rejects_empty_and_mismatched_grids() {
        let f = GridFunction::from_fn(65, |x| x).unwrap();
        let psi = PsiFunction::degenerate(4.0).unwrap();
        assert!(certify_1d(&f, 0.5, &psi, &[], &cfg()).is_err());
        assert!(certify_1d(&f, 0.5, &psi, &[0.0], &cfg()).is_err());
        let psi_low = PsiFunction::degenerate(1.5).unwrap();
        assert!(certify_1d(&f, 0.5, &psi_low, &[0.25], &cfg()).is_err());
    }

    #[test]
    fn associate_form_of_the_prefactor_is_an_identity() {
        let f = GridFunction::from_fn(513, |x| x.powf(0.6)).unwrap();
        let ix = FractionalIndex::new(vec![0.5]).unwrap();
        let grid = default_p_grid_sized(2.0, 32.0, 12).unwrap();
        let zeta = zeta_natural(&f, &ix, &grid, &cfg()).unwrap();
        let weight = psi_alpha(&zeta, &ix).unwrap();
        let alpha = 0.5;
        for k in 1..=8 {
            let dl = 2f64.powi(-k);
            let phi = weight.fundamental(dl).unwrap().value;
            let lhs = dl.powf(alpha) / phi;
            let rhs = dl.powf(alpha - 1.0) * (dl / phi);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
        }
    }

    #[test]
    fn planar_certificate_reduces_to_the_line_on_one_axis() {
        let f = GridFunction::from_fn(257, |x| x.powf(0.6)).unwrap();
        let ix = FractionalIndex::new(vec![0.5]).unwrap();
        let psi = PsiFunction::degenerate(4.0).unwrap();
        let gaps = [0.25f64, 0.125];
        let rows: Vec<Vec<f64>> = gaps.iter().map(|&dl| vec![dl]).collect();
        let a = certify_1d(&f, 0.5, &psi, &gaps, &cfg()).unwrap();
        let b = certify_nd(&f, &ix, &psi, &rows, &cfg()).unwrap();
        assert_eq!(a.bound, b.bound);
        assert_eq!(a.measured, b.measured);
        assert_eq!(a.status, b.status);
    }

    #[test]
    fn planar_certificate_holds_for_a_product_power() {
        let beta = 0.45;
        let f = GridFunction::from_fn_2d(48, |x, y| (x * y).powf(beta)).unwrap();
        let ix = FractionalIndex::new(vec![0.5, 0.5]).unwrap();
        let zeta = zeta_natural(&f, &ix, &[3.0, 4.0, 6.0, 8.0, 10.0], &cfg()).unwrap();
        let mut rows = Vec::new();
        for i in 1..=3 {
            for j in 1..=3 {
                rows.push(vec![2f64.powi(-i), 2f64.powi(-j)]);
            }
        }
        let cert = certify_nd(&f, &ix, &zeta, &rows, &small_cfg(6)).unwrap();
        assert!(cert.all_hold(), "slack: {:?}", cert.slack);
    }

    #[test]
    fn planar_certificate_of_an_additive_function_is_vacuous() {
        let f = GridFunction::from_fn_2d(40, |x, y| 2.0 * x - y).unwrap();
        let ix = FractionalIndex::new(vec![0.5, 0.5]).unwrap();
        let psi = PsiFunction::degenerate(4.0).unwrap();
        let rows = vec![vec![0.25, 0.25], vec![0.5, 0.125]];
        let cert = certify_nd(&f, &ix, &psi, &rows, &cfg()).unwrap();
        assert!(cert.measured.iter().all(|&m| m == 0.0));
        assert!(cert.status.iter().all(|s| *s == CertStatus::Vacuous));
    }

    #[test]
    fn best_order_with_one_order_matches_the_single_certificate() {
        let f = GridFunction::from_fn(257, |x| x.powf(0.6)).unwrap();
        let gaps = [0.25f64, 0.0625];
        let single = certify_1d(
            &f,
            0.5,
            &PsiFunction::degenerate(4.0).unwrap(),
            &gaps,
            &cfg(),
        )
        .unwrap();
        let best = certify_best_order(&f, &[0.5], |_| PsiFunction::degenerate(4.0), &gaps, &cfg())
            .unwrap();
        assert_eq!(single.bound, best.bound);
        assert_eq!(single.measured, best.measured);
        assert_eq!(best.argmin_alpha, Some(vec![0.5, 0.5]));
    }

    #[test]
    fn best_order_never_worsens_when_orders_are_added() {
        let f = GridFunction::from_fn(513, |x| x.powf(0.6)).unwrap();
        let gaps: Vec<f64> = (1..=6).map(|k| 2f64.powi(-k)).collect();
        let provider = |_a: f64| PsiFunction::degenerate(4.0);
        let few = certify_best_order(&f, &[0.4, 0.6], provider, &gaps, &cfg()).unwrap();
        let many =
            certify_best_order(&f, &[0.3, 0.4, 0.5, 0.6, 0.7], provider, &gaps, &cfg()).unwrap();
        for (b_many, b_few) in many.bound.iter().zip(&few.bound) {
            assert!(b_many <= b_few);
        }
        assert!(many.all_hold());
    }

    #[test]
    fn best_order_argmin_agrees_with_a_direct_scan() {
        let f = GridFunction::from_fn(513, |x| x.powf(0.6)).unwrap();
        let orders = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let gaps = [0.5f64, 2f64.powi(-4), 2f64.powi(-8)];
        let provider = |_a: f64| PsiFunction::degenerate(4.0);
        let best = certify_best_order(&f, &orders, provider, &gaps, &cfg()).unwrap();
        for (j, &dl) in gaps.iter().enumerate() {
            let mut scan_best = f64::INFINITY;
            let mut scan_at = f64::NAN;
            for &a in &orders {
                let z = gagliardo_seminorm_1d(&f, a, 4.0, &cfg())
                    .unwrap()
                    .value()
                    .unwrap();
                let bv = grr_bound_1d(a, 4.0, dl, z).unwrap();
                if bv < scan_best {
                    scan_best = bv;
                    scan_at = a;
                }
            }
            assert!((best.bound[j] - scan_best).abs() <= 1e-12 * scan_best);
            assert_eq!(best.argmin_alpha.as_ref().unwrap()[j], scan_at, "gap {dl}");
        }
        // at the widest gap the smallest order does not win: the argmin moved
        let at0 = best.argmin_alpha.as_ref().unwrap()[0];
        assert!(at0 > orders[0]);
    }

    #[test]
    fn best_order_requires_a_nonempty_grid() {
        let f = GridFunction::from_fn(65, |x| x).unwrap();
        assert!(
            certify_best_order(&f, &[], |_| PsiFunction::degenerate(4.0), &[0.25], &cfg()).is_err()
        );
    }

    #[test]
    fn certificate_csv_has_one_row_per_gap() {
        let f = GridFunction::from_fn(129, |x| x.powf(0.6)).unwrap();
        let psi = PsiFunction::degenerate(4.0).unwrap();
        let cert = certify_1d(&f, 0.5, &psi, &[0.5, 0.25, 0.125], &cfg()).unwrap();
        let csv = cert.to_csv();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("delta_1,measured,bound,slack,status"));
        assert!(lines[1].ends_with("holds"));
    }

    fn power_young_closed_form(a: f64, gamma: f64, b: f64, delta: f64) -> f64 {
        8.0 * (4.0 * b).powf(1.0 / a) * gamma / (gamma - 2.0 / a) * delta.powf(gamma - 2.0 / a)
    }

    #[test]
    fn orlicz_bound_vanishes_with_the_integral() {
        let phi = YoungFunction::power(2.0).unwrap();
        let m = MajorantDistance::power(3.0).unwrap();
        let out = orlicz_grr_bound(&phi, &[m], 0.0, &[0.5]).unwrap();
        assert_eq!(out, IntegralBound::Finite(0.0));
    }

    #[test]
    fn orlicz_bound_matches_the_power_closed_form() {
        let a = 2.0;
        let gamma = 3.0;
        let phi = YoungFunction::power(a).unwrap();
        let m = MajorantDistance::power(gamma).unwrap();
        for &(b, dl) in &[(1.0, 0.5), (0.3, 0.25), (2.0, 1.0)] {
            let got = orlicz_grr_bound(&phi, &[m], b, &[dl])
                .unwrap()
                .value()
                .unwrap();
            let want = power_young_closed_form(a, gamma, b, dl);
            assert!(
                (got - want).abs() <= 1e-6 * want,
                "B={b} delta={dl}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn orlicz_bound_detects_divergence_at_the_critical_majorant() {
        let phi = YoungFunction::power(1.0).unwrap();
        let at = MajorantDistance::power(2.0).unwrap();
        assert!(orlicz_grr_bound(&phi, &[at], 1.0, &[0.5])
            .unwrap()
            .is_divergent());
        let below = MajorantDistance::power(1.5).unwrap();
        assert!(orlicz_grr_bound(&phi, &[below], 1.0, &[0.5])
            .unwrap()
            .is_divergent());
        let above = MajorantDistance::power(2.5).unwrap();
        assert!(!orlicz_grr_bound(&phi, &[above], 1.0, &[0.5])
            .unwrap()
            .is_divergent());
    }

    #[test]
    fn orlicz_bound_grows_with_the_box() {
        let phi = YoungFunction::exp_power(2.0).unwrap();
        let m = MajorantDistance::power(1.5).unwrap();
        let small = orlicz_grr_bound(&phi, &[m], 1.0, &[0.25])
            .unwrap()
            .value()
            .unwrap();
        let large = orlicz_grr_bound(&phi, &[m], 1.0, &[0.5])
            .unwrap()
            .value()
            .unwrap();
        assert!(large > small);
        assert!(small > 0.0);
    }

    #[test]
    fn planar_orlicz_bound_factorizes_for_power_young_functions() {
        let a = 2.0;
        let (g1, g2) = (3.0, 2.5);
        let phi = YoungFunction::power(a).unwrap();
        let ms = [
            MajorantDistance::power(g1).unwrap(),
            MajorantDistance::power(g2).unwrap(),
        ];
        let b = 0.7;
        let (d1, d2) = (0.5, 0.25);
        let got = orlicz_grr_bound(&phi, &ms, b, &[d1, d2])
            .unwrap()
            .value()
            .unwrap();
        let want = 64.0
            * (16.0 * b).powf(1.0 / a)
            * (g1 / (g1 - 2.0 / a) * d1.powf(g1 - 2.0 / a))
            * (g2 / (g2 - 2.0 / a) * d2.powf(g2 - 2.0 / a));
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn planar_orlicz_bound_flags_a_divergent_axis() {
        let phi = YoungFunction::power(1.0).unwrap();
        let ms = [
            MajorantDistance::power(3.0).unwrap(),
            MajorantDistance::power(1.5).unwrap(),
        ];
        assert!(orlicz_grr_bound(&phi, &ms, 1.0, &[0.5, 0.5])
            .unwrap()
            .is_divergent());
    }

    #[test]
    fn orlicz_sobolev_bound_of_a_constant_vanishes() {
        let line = GridFunction::from_fn(257, |x| x).unwrap();
        let ix = FractionalIndex::new(vec![0.5]).unwrap();
        let grid = default_p_grid_sized(2.0, 32.0, 12).unwrap();
        let tau = zeta_natural(&line, &ix, &grid, &cfg()).unwrap();
        let flat = GridFunction::from_fn(257, |_| 2.0).unwrap();
        let out = orlicz_sobolev_bound(&flat, &ix, &[0.25], &tau, &cfg()).unwrap();
        assert_eq!(out.bound, 0.0);
        assert_eq!(out.norm, 0.0);
    }

    #[test]
    fn orlicz_sobolev_bound_rejects_bounded_analytic_support() {
        let f = GridFunction::from_fn(257, |x| x).unwrap();
        let ix = FractionalIndex::new(vec![0.5]).unwrap();
        let tau = PsiFunction::power_pole(1.0, 1.0, 2.0, 8.0).unwrap();
        let err = orlicz_sobolev_bound(&f, &ix, &[0.25], &tau, &cfg());
        assert!(matches!(err, Err(Error::BoundedSupport { .. })));
    }

    #[test]
    fn orlicz_sobolev_bound_scales_like_the_order_in_the_gap() {
        let f = GridFunction::from_fn(513, |x| x).unwrap();
        let ix = FractionalIndex::new(vec![0.5]).unwrap();
        let grid = default_p_grid_sized(2.0, 64.0, 16).unwrap();
        let tau = zeta_natural(&f, &ix, &grid, &cfg()).unwrap();
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        for k in 2..=9 {
            let dl = 2f64.powi(-k);
            let out = orlicz_sobolev_bound(&f, &ix, &[dl], &tau, &cfg()).unwrap();
            // the weight is the function's own moment curve, so the grand
            // norm of the difference family against it is exactly one
            assert!((out.norm - 1.0).abs() < 1e-12, "norm {}", out.norm);
            lx.push(dl.ln());
            ly.push(out.bound.ln());
        }
        let (slope, _) = fit::line_fit(&lx, &ly).unwrap();
        assert!((slope - 0.5).abs() < 0.08, "slope {slope}");
    }

    #[test]
    fn orlicz_sobolev_minimum_over_orders_never_exceeds_a_member() {
        let f = GridFunction::from_fn(257, |x| x.powf(0.6)).unwrap();
        let orders: Vec<FractionalIndex> = [0.4, 0.5, 0.6]
            .iter()
            .map(|&a| FractionalIndex::new(vec![a]).unwrap())
            .collect();
        let provider = |ix: &FractionalIndex| {
            let grid = default_p_grid_sized(2.0, 32.0, 10).unwrap();
            zeta_natural(&f, ix, &grid, &cfg())
        };
        let single = orlicz_sobolev_bound(
            &f,
            &orders[1],
            &[0.125],
            &provider(&orders[1]).unwrap(),
            &cfg(),
        )
        .unwrap();
        let best = orlicz_sobolev_best_order(&f, &orders, &[0.125], provider, &cfg()).unwrap();
        assert!(best.bound <= single.bound * (1.0 + 1e-12));
    }

    #[test]
    fn exactness_modulus_tracks_the_power_exactly_on_dyadic_gaps() {
        let n = (1 << 12) + 1;
        let cfg = cfg();
        let table = exactness_experiment(0.5, 4.0, &[0.25, 0.0625], &[0.1], n, &cfg).unwrap();
        // gaps resolve to whole lattice windows, so the measured modulus of
        // x^{0.35} is the power itself
        for row in &table.rows {
            let want = row.delta.powf(0.35);
            assert!(
                (row.measured - want).abs() <= 1e-12 * want,
                "{} vs {want}",
                row.measured
            );
        }
    }

    #[test]
    fn exactness_log_ratio_exceeds_one_and_tightens_as_the_excess_shrinks() {
        let n = (1 << 14) + 1;
        let cfg = cfg();
        // the log-ratio crosses 1 near gap 2^-9 and grows as the gap
        // shrinks; these gaps sit past the crossover for every excess
        let deltas: Vec<f64> = [10, 12].iter().map(|&k| 2f64.powi(-k)).collect();
        let table = exactness_experiment(0.5, 4.0, &deltas, &[0.05, 0.1, 0.2], n, &cfg).unwrap();
        for row in &table.rows {
            assert!(row.v_ratio >= 0.98, "V = {} at {:?}", row.v_ratio, row);
        }
        // trend entries follow the excess grid order
        let vs: Vec<f64> = table.trend.iter().map(|&(_, v)| v).collect();
        assert!(vs[0] < vs[1] && vs[1] < vs[2], "trend {vs:?}");
        assert!(vs[0] > 1.0);
    }

    #[test]
    fn exactness_rejects_an_excess_outside_the_admissible_window() {
        let cfg = cfg();
        assert!(exactness_experiment(0.5, 4.0, &[0.25], &[0.8], 257, &cfg).is_err());
        assert!(exactness_experiment(0.5, 4.0, &[0.25], &[0.0], 257, &cfg).is_err());
        assert!(exactness_experiment(0.5, 1.9, &[0.25], &[0.1], 257, &cfg).is_err());
    }

    #[test]
    fn scaling_ratio_is_one_at_unit_scale() {
        let table = scaling_experiment(|x| x.powf(0.7), 0.5, 4.0, &[1.0], 257, &cfg()).unwrap();
        assert!((table.rows[0].ratio - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn scaling_follows_the_homogeneity_exponent() {
        let table =
            scaling_experiment(|x| x.powf(0.7), 0.5, 4.0, &[1.0, 0.5, 0.25], 513, &cfg()).unwrap();
        for row in &table.rows {
            assert!(
                (row.ratio - 1.0).abs() <= 0.01,
                "lambda {}: ratio {}",
                row.lambda,
                row.ratio
            );
        }
        assert!((table.slope - 0.25).abs() <= 0.01, "slope {}", table.slope);
    }

    #[test]
    fn scaling_rejects_expanding_scales() {
        assert!(scaling_experiment(|x| x, 0.5, 4.0, &[2.0], 257, &cfg()).is_err());
        assert!(scaling_experiment(|x| x, 0.5, 4.0, &[0.0], 257, &cfg()).is_err());
        assert!(scaling_experiment(|x| x, 0.5, 4.0, &[], 257, &cfg()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bound_power_laws_hold(
            alpha in 0.2f64..1.0,
            pexc in 0.5f64..8.0,
            dl in 1e-4f64..1.0,
            s in 0.0f64..10.0,
        ) {
            let p = 1.0 / alpha + pexc;
            let b = grr_bound_1d(alpha, p, dl, s).unwrap();
            let half = grr_bound_1d(alpha, p, dl / 2.0, s).unwrap();
            let doubled = grr_bound_1d(alpha, p, dl, 2.0 * s).unwrap();
            prop_assert!((half * 2f64.powf(alpha - 1.0 / p) - b).abs() <= 1e-9 * b.max(1e-300));
            prop_assert!((doubled - 2.0 * b).abs() <= 1e-12 * doubled.max(1e-300));
        }

        #[test]
        fn cell_factor_matches_the_direct_expression(r in 0.1f64..0.9, t in -3.0f64..3.0) {
            // the direct form loses digits as t + 1 tends to 0
            prop_assume!((t + 1.0).abs() > 1e-6);
            let direct = (1.0 - r.powf(t + 1.0)) / (t + 1.0);
            let stable = cell_factor(r, t);
            prop_assert!((stable - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}
