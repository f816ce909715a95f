//! Young functions and their correspondence with exponent weights.
//!
//! A Young function `Phi` (even, convex, `Phi(0) = 0`, increasing to
//! infinity) defines an Orlicz space.  For weights of exponential type the
//! Orlicz and grand Lebesgue scales coincide up to equivalence, and the two
//! directions of that correspondence are Legendre transforms of each other:
//!
//! * weight from Young function: `psi(p) = exp(h*(p) / p)` where
//!   `h(x) = log Phi(e^x)`;
//! * Young function from weight: `N(u) = exp(g*(log |u|))` for `|u|` beyond
//!   a splice point, where `g(p) = p * log psi(p)`, patched with `C u^2`
//!   below the splice, `C` fixed by continuity.
//!
//! The same table `g` drives moment-generated tail bounds: each tabulated
//! exponent is a Chebyshev exponent, so `2 exp(-max_i (p_i x - g_i))` at
//! `x = log(z / norm)` bounds the exceedance probability at level `z`.

use crate::psi::fenchel::ConvexTable;
use crate::psi::{log_spaced, PsiFunction, PsiRule};
use crate::{Error, Result};

/// Splice point between the quadratic patch and the conjugate tail.
const SPLICE: f64 = 3.0;
/// Required growth of a tabulated Young function: last sample over the
/// first positive sample.
const MIN_GROWTH_FACTOR: f64 = 10.0;
/// Relative bisection tolerance of the inverse.
const INVERSE_REL_TOL: f64 = 1e-10;
const INVERSE_MAX_ITERS: usize = 200;
/// Exponent samples when a closed-form weight is tabulated.
const WEIGHT_SAMPLES: usize = 4096;
/// Largest exponent retained when tabulating a weight with unbounded
/// support; beyond it the conjugate continues along the boundary line.
const WEIGHT_P_CAP: f64 = 5000.0;
/// Samples of `log Phi(e^x)` in the Young-to-weight direction.
const LOG_SAMPLES: usize = 8192;
/// Convexity gate: allowed deviation from the convex envelope, relative to
/// the sampled value range.  Spliced rules have a genuine (harmless) kink at
/// the patch junction; anything past this gate is a real defect.
const ENVELOPE_GAP_REL_TOL: f64 = 0.02;
/// Hard window limit for `x = log u`; `e^x` must stay finite.
const X_LIMIT: f64 = 350.0;
/// Slope-matching slack at the edges of the sampled slope range, relative.
const EDGE_SLOPE_TOL: f64 = 1e-6;

/// Evaluation rule of a Young function.
#[derive(Debug, Clone, PartialEq)]
pub enum YoungRule {
    /// `|u|^q`, `q >= 1`.
    Power { q: f64 },
    /// `exp(|u|^m / m) - 1`, `m >= 1`.
    ExpPower { m: f64 },
    /// `exp(mu(|u|)) - exp(mu(0))` for a tabulated convex `mu` anchored at
    /// `u = 0`; the subtraction normalizes the value at zero.
    ExpMu { mu: ConvexTable },
    /// Piecewise-linear interpolation of convex samples of the function
    /// itself, anchored at `(0, 0)`, extended linearly past the last node.
    Tabulated { u: Vec<f64>, value: Vec<f64> },
    /// `coeff * u^2` below the splice, `exp(g*(log |u|))` above it, where
    /// `g` holds samples of `p * log psi(p)` and `g*` is its node-max
    /// Legendre transform.  Produced by [`orlicz_from_psi`].
    QuadSpliced {
        coeff: f64,
        splice: f64,
        profile: ConvexTable,
    },
}

/// An Orlicz N-function: even, convex, zero at zero, increasing without
/// bound on the positive half-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    rule: YoungRule,
}

impl YoungFunction {
    /// `Phi(u) = |u|^q`.
    pub fn power(q: f64) -> Result<Self> {
        if !(q.is_finite() && (1.0..=1e6).contains(&q)) {
            return Err(Error::bad_param("Young power exponent", format!("q = {q}")));
        }
        Ok(YoungFunction {
            rule: YoungRule::Power { q },
        })
    }

    /// `Phi(u) = exp(|u|^m / m) - 1`.
    pub fn exp_power(m: f64) -> Result<Self> {
        if !(m.is_finite() && (1.0..=100.0).contains(&m)) {
            return Err(Error::bad_param(
                "exponential-type order",
                format!("m = {m}"),
            ));
        }
        Ok(YoungFunction {
            rule: YoungRule::ExpPower { m },
        })
    }

    /// `Phi(u) = exp(mu(|u|)) - exp(mu(0))` for convex increasing samples
    /// of `mu` starting at `u = 0`.
    pub fn exp_mu(u: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let table = ConvexTable::new(u, mu)?;
        if table.abscissae()[0] != 0.0 {
            return Err(Error::bad_param(
                "exponent table",
                "mu must be tabulated from u = 0 so the value at zero can be subtracted",
            ));
        }
        if table.len() < 2 {
            return Err(Error::TableTooShort {
                need: 2,
                got: table.len(),
            });
        }
        for (i, w) in table.values().windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NotIncreasing { index: i + 1 });
            }
        }
        Ok(YoungFunction {
            rule: YoungRule::ExpMu { mu: table },
        })
    }

    /// Piecewise-linear Young function through convex samples, the first of
    /// which must be `(0, 0)`; the last value must exceed the first positive
    /// one by a factor of at least 10 so the function visibly grows.
    pub fn tabulated(u: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if u.len() != value.len() {
            return Err(Error::GridMismatch {
                why: format!("{} abscissae vs {} values", u.len(), value.len()),
            });
        }
        if u.len() < 3 {
            return Err(Error::TableTooShort {
                need: 3,
                got: u.len(),
            });
        }
        if u[0] != 0.0 || value[0] != 0.0 {
            return Err(Error::bad_param(
                "Young samples",
                "first sample must be (0, 0)",
            ));
        }
        for (i, x) in u.iter().enumerate() {
            if !x.is_finite() || !value[i].is_finite() {
                return Err(Error::NonFinite {
                    what: "Young sample",
                    value: x.min(value[i]),
                });
            }
            if i > 0 && *x <= u[i - 1] {
                return Err(Error::NotIncreasing { index: i });
            }
            if i > 0 && value[i] <= value[i - 1] {
                return Err(Error::bad_param(
                    "Young samples",
                    format!("values must strictly increase (index {i})"),
                ));
            }
        }
        // Convexity: consecutive chord slopes may not decrease.
        let mut prev = f64::NEG_INFINITY;
        let mut scale = 1.0f64;
        for i in 1..u.len() {
            let s = (value[i] - value[i - 1]) / (u[i] - u[i - 1]);
            scale = scale.max(s.abs());
            if s < prev - 1e-9 * scale {
                let (_, gap) = ConvexTable::envelope(u.clone(), value.clone())?;
                return Err(Error::NotConvex {
                    gap,
                    tol: 1e-9 * scale,
                });
            }
            prev = s;
        }
        if value[u.len() - 1] < MIN_GROWTH_FACTOR * value[1] {
            return Err(Error::bad_param(
                "Young samples",
                format!(
                    "last value {} under {MIN_GROWTH_FACTOR}x the first positive value {}; \
                     the table must reach visibly toward infinity",
                    value[u.len() - 1],
                    value[1]
                ),
            ));
        }
        Ok(YoungFunction {
            rule: YoungRule::Tabulated { u, value },
        })
    }

    /// Reassembles a spliced rule from its stored parts (deserialization).
    pub(crate) fn from_spliced_parts(
        coeff: f64,
        splice: f64,
        profile: ConvexTable,
    ) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(Error::bad_param("spliced coefficient", format!("{coeff}")));
        }
        if !(splice.is_finite() && splice > 0.0) {
            return Err(Error::bad_param("splice point", format!("{splice}")));
        }
        Ok(YoungFunction {
            rule: YoungRule::QuadSpliced {
                coeff,
                splice,
                profile,
            },
        })
    }

    pub fn rule(&self) -> &YoungRule {
        &self.rule
    }

    /// `Phi(u)`; infinite overflow is reported as `+inf`.
    pub fn eval(&self, u: f64) -> f64 {
        self.log_eval(u).exp()
    }

    /// `log Phi(u)`, stable against overflow of the plain value;
    /// `-inf` at `u = 0`.
    pub fn log_eval(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_eval_ln(a.ln())
    }

    /// `log Phi(e^x)`, the form every transform in this module works in.
    pub(crate) fn log_eval_ln(&self, x: f64) -> f64 {
        match &self.rule {
            YoungRule::Power { q } => q * x,
            YoungRule::ExpPower { m } => {
                let ln_t = m * x - m.ln();
                if ln_t < -20.0 {
                    // expm1(t) = t (1 + O(t)); the correction is below 1e-9.
                    ln_t
                } else {
                    let t = ln_t.exp();
                    if t > 30.0 {
                        t + (-(-t).exp()).ln_1p()
                    } else {
                        t.exp_m1().ln()
                    }
                }
            }
            YoungRule::ExpMu { mu } => {
                let mu0 = mu.values()[0];
                let d = mu.eval_extend(x.exp()) - mu0;
                if d > 30.0 {
                    mu0 + d + (-(-d).exp()).ln_1p()
                } else {
                    mu0 + d.exp_m1().ln()
                }
            }
            YoungRule::Tabulated { u, value } => {
                let a = x.exp();
                let n = u.len();
                if a >= u[n - 1] {
                    let s = (value[n - 1] - value[n - 2]) / (u[n - 1] - u[n - 2]);
                    return (value[n - 1] + s * (a - u[n - 1])).ln();
                }
                let k = match u.binary_search_by(|b| b.partial_cmp(&a).unwrap()) {
                    Ok(i) => return value[i].ln(),
                    Err(i) => i - 1,
                };
                let w = (a - u[k]) / (u[k + 1] - u[k]);
                (value[k] + w * (value[k + 1] - value[k])).ln()
            }
            YoungRule::QuadSpliced {
                coeff,
                splice,
                profile,
            } => {
                if x <= splice.ln() {
                    coeff.ln() + 2.0 * x
                } else {
                    profile.conjugate_lower(x)
                }
            }
        }
    }

    /// Solves `Phi(u) = y` for `u >= 0` by doubling bracket plus bisection.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::bad_param("inverse argument", format!("{y}")));
        }
        let target = y.ln();
        let mut hi = 1.0f64;
        while self.log_eval(hi) < target {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::NotInvertible {
                    y,
                    why: "no representable argument reaches this value".into(),
                });
            }
        }
        let mut lo = 0.0f64;
        for _ in 0..INVERSE_MAX_ITERS {
            let mid = 0.5 * (lo + hi);
            if self.log_eval(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= INVERSE_REL_TOL * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl std::fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.rule {
            YoungRule::Power { q } => write!(f, "|u|^{q}"),
            YoungRule::ExpPower { m } => write!(f, "exp(|u|^{m}/{m}) - 1"),
            YoungRule::ExpMu { mu } => write!(f, "exp(mu(|u|)) ({} nodes)", mu.len()),
            YoungRule::Tabulated { u, .. } => write!(f, "tabulated ({} nodes)", u.len()),
            YoungRule::QuadSpliced {
                coeff,
                splice,
                profile,
            } => write!(
                f,
                "{coeff:.6e} u^2 below {splice}, conjugate tail ({} nodes) above",
                profile.len()
            ),
        }
    }
}

/// `delta * Phi^{-1}(1 / delta)` for `delta` in `(0, 1]`: the fundamental
/// function of the Orlicz scale on sets of measure `delta`.
pub fn orlicz_fundamental(phi: &YoungFunction, delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
        return Err(Error::bad_param(
            "measure size",
            format!("delta = {delta}, need (0, 1]"),
        ));
    }
    Ok(delta * phi.inverse(1.0 / delta)?)
}

/// The weight induced by a Young function, tabulated on `p_grid`:
/// `psi(p) = exp(h*(p) / p)` with `h(x) = log Phi(e^x)`.
///
/// `h` is sampled on a window wide enough for its boundary slopes to cover
/// the grid (or until they provably plateau), checked for convexity, and
/// conjugated at the grid exponents.  Two kinds of grid exponent are
/// dropped: those outside the attained slope range (infinite conjugate),
/// and those with a non-positive conjugate, where the function's algebraic
/// origin rather than its exponential tail governs the moment scale and the
/// correspondence degenerates.  If fewer than two exponents survive, the
/// function is not of exponential type over the grid and an error is
/// returned.  The pure power rule short-circuits to the degenerate weight,
/// which is its exact image.
pub fn psi_from_orlicz(phi: &YoungFunction, p_grid: &[f64]) -> Result<PsiFunction> {
    if p_grid.is_empty() {
        return Err(Error::Empty {
            what: "exponent grid",
        });
    }
    for (i, &p) in p_grid.iter().enumerate() {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::bad_param("exponent grid", format!("p[{i}] = {p}")));
        }
        if i > 0 && p <= p_grid[i - 1] {
            return Err(Error::NotIncreasing { index: i });
        }
    }
    if let YoungRule::Power { q } = phi.rule {
        if q <= 1.0 {
            return Err(Error::bad_param(
                "Young power exponent",
                "q must exceed 1 for a degenerate weight on (1, inf)",
            ));
        }
        return PsiFunction::degenerate(q);
    }

    let (x_lo, x_hi) = slope_window(
        phi,
        (p_grid[0] - 1.0).max(0.5),
        p_grid[p_grid.len() - 1] + 1.0,
    );
    let mut xs = Vec::with_capacity(LOG_SAMPLES);
    let mut hs = Vec::with_capacity(LOG_SAMPLES);
    for i in 0..LOG_SAMPLES {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (LOG_SAMPLES - 1) as f64;
        xs.push(x);
        hs.push(phi.log_eval_ln(x));
    }
    let (hull, gap) = ConvexTable::envelope(xs, hs)?;
    let range = value_range(hull.values());
    let tol = ENVELOPE_GAP_REL_TOL * range.max(1.0);
    if gap > tol {
        return Err(Error::NotConvex { gap, tol });
    }

    let (s_lo, s_hi) = hull.slope_range();
    let mut kept_p = Vec::new();
    let mut kept_log = Vec::new();
    for &p in p_grid {
        let slack = EDGE_SLOPE_TOL * p.max(1.0);
        if p < s_lo - slack || p > s_hi + slack {
            continue;
        }
        let c = hull.conjugate_at(p.clamp(s_lo, s_hi));
        if c <= 0.0 {
            continue;
        }
        kept_p.push(p);
        kept_log.push(c / p);
    }
    if kept_p.len() < 2 {
        return Err(Error::ConjugateInfinite);
    }
    PsiFunction::tabulated_log(kept_p, kept_log)
}

/// Expands the sampling window of `log Phi(e^x)` until its end slopes cover
/// `[target_lo, target_hi]`, stop changing, or hit the hard limits.
fn slope_window(phi: &YoungFunction, target_lo: f64, target_hi: f64) -> (f64, f64) {
    const GROW: f64 = 1.6;
    let probe = |x: f64| {
        let e = 1e-3;
        (phi.log_eval_ln(x + e) - phi.log_eval_ln(x - e)) / (2.0 * e)
    };
    let mut x_lo = -4.0f64;
    let mut x_hi = 4.0f64;
    let mut prev_left = f64::NAN;
    let mut prev_right = f64::NAN;
    let mut grow_left = true;
    let mut grow_right = true;
    for _ in 0..60 {
        if grow_left {
            let s = probe(x_lo);
            let plateau = (s - prev_left).abs() <= 1e-10 * s.abs().max(1.0);
            if s <= target_lo || plateau || x_lo <= -X_LIMIT {
                grow_left = false;
            } else {
                prev_left = s;
                x_lo *= GROW;
            }
        }
        if grow_right {
            let next = (x_hi * GROW).min(X_LIMIT);
            if !phi.log_eval_ln(next).is_finite() {
                grow_right = false;
            } else {
                let s = probe(x_hi);
                let plateau = (s - prev_right).abs() <= 1e-10 * s.abs().max(1.0);
                if s >= target_hi || plateau || x_hi >= X_LIMIT {
                    grow_right = false;
                } else {
                    prev_right = s;
                    x_hi = next;
                }
            }
        }
        if !grow_left && !grow_right {
            break;
        }
    }
    (x_lo.max(-X_LIMIT), x_hi.min(X_LIMIT))
}

fn value_range(v: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    hi - lo
}

/// The Young function induced by a weight with unbounded exponent support:
/// `N(u) = exp(g*(log |u|))` for `|u|` past the splice, `C u^2` below it,
/// with `g(p) = p log psi(p)` and `C` fixed by continuity at the splice.
///
/// A bounded support is rejected: its scale is not an Orlicz scale.
pub fn orlicz_from_psi(psi: &PsiFunction) -> Result<YoungFunction> {
    let (lo, hi) = psi.support();
    if hi.is_finite() {
        return Err(Error::BoundedSupport {
            lower: lo,
            upper: hi,
        });
    }
    orlicz_from_psi_any_support(psi)
}

/// Same construction without the support gate, for internal callers whose
/// tabulated weights live on a finite hull by representation only.
pub(crate) fn orlicz_from_psi_any_support(psi: &PsiFunction) -> Result<YoungFunction> {
    let (ps, vals) = log_weight_profile(psi)?;
    let (profile, gap) = ConvexTable::envelope(ps, vals)?;
    let range = value_range(profile.values());
    let tol = ENVELOPE_GAP_REL_TOL * range.max(1.0);
    if gap > tol {
        return Err(Error::NotConvex { gap, tol });
    }
    let at_splice = profile.conjugate_lower(SPLICE.ln());
    let coeff = (at_splice - 2.0 * SPLICE.ln()).exp();
    Ok(YoungFunction {
        rule: YoungRule::QuadSpliced {
            coeff,
            splice: SPLICE,
            profile,
        },
    })
}

/// Tail bound for a random variable with grand norm `norm` under weight
/// `psi`: `2 exp(-g*(log(z / norm)))` with `g(p) = p log psi(p)` and the
/// sentinel-free node-max transform (every tabulated exponent is a valid
/// Chebyshev exponent).  Clamped to the trivial bound 2.
pub fn tail_bound_from_psi(psi: &PsiFunction, norm: f64, z: f64) -> Result<f64> {
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::bad_param("grand norm", format!("{norm}")));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite {
            what: "tail level",
            value: z,
        });
    }
    if z < norm {
        return Err(Error::bad_param(
            "tail level",
            format!("z = {z} is below the norm {norm}; the bound needs z >= norm"),
        ));
    }
    let x = (z / norm).ln();
    let (ps, vals) = log_weight_profile(psi)?;
    let c = ps
        .iter()
        .zip(&vals)
        .map(|(&p, &v)| p * x - v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((2.0 * (-c).exp()).min(2.0))
}

/// Samples of `g(p) = p log psi(p)`: the table whose Legendre transform at
/// `log |u|` is `log N(u)` and whose node max drives tail bounds.
fn log_weight_profile(psi: &PsiFunction) -> Result<(Vec<f64>, Vec<f64>)> {
    match psi.rule() {
        PsiRule::Degenerate { r, value } => Ok((vec![*r], vec![*r * value.ln()])),
        PsiRule::Tabulated { p, log_value } => {
            let vals = p.iter().zip(log_value).map(|(&pp, &lv)| pp * lv).collect();
            Ok((p.clone(), vals))
        }
        _ => {
            let (lo, hi) = psi.support();
            let ps: Vec<f64> = if hi.is_finite() {
                let w = hi - lo;
                (0..WEIGHT_SAMPLES)
                    .map(|i| lo + w * (i as f64 + 0.5) / WEIGHT_SAMPLES as f64)
                    .collect()
            } else {
                log_spaced(lo + 1e-4 * lo.max(1.0), WEIGHT_P_CAP, WEIGHT_SAMPLES)
            };
            let mut vals = Vec::with_capacity(ps.len());
            for &p in &ps {
                vals.push(p * psi.log_eval(p)?);
            }
            Ok((ps, vals))
        }
    }
}
