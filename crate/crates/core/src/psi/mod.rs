//! Admissible weight functions on an exponent interval.
//!
//! A weight `psi` is a positive function on a range of integrability
//! exponents `(A, B)`, `1 <= A < B <= inf`.  It weights the scale of
//! `L_p` norms: the grand norm of `f` is `sup_p |f|_p / psi(p)` and the
//! fundamental function of the weighted scale is
//! `phi(delta) = sup_p delta^{1/p} / psi(p)`.
//!
//! Built-in families:
//!
//! * `PowerPole` — `(p - A)^{-a} (B - p)^{-b}` on a finite interval, the
//!   workhorse with poles at one or both endpoints;
//! * `Power` — `p^beta`, `B = inf` allowed;
//! * `Degenerate` — value at a single exponent `r`, `+inf` elsewhere; its
//!   scale collapses to plain `L_r`;
//! * `Constant`;
//! * `Tabulated` — piecewise linear in `(p, log psi)`; evaluation outside
//!   the tabulated hull is an error, never an extrapolation.
//!
//! Evaluation outside the support is `+inf` for the closed-form rules: the
//! weight stops contributing to any sup, which is exactly the intended
//! semantics.

pub mod fenchel;
pub mod orlicz;
pub mod text;

pub use orlicz::{
    orlicz_from_psi, orlicz_fundamental, psi_from_orlicz, tail_bound_from_psi, YoungFunction,
    YoungRule,
};

use crate::{Error, Result};

/// Geometrically spaced grid from `lo` to `hi` inclusive, `count >= 2`,
/// `0 < lo < hi`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(
        lo > 0.0 && hi > lo && count >= 2,
        "bad geometric grid [{lo}, {hi}] x {count}"
    );
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect();
    // Pin the endpoints against rounding; callers treat them as inclusive.
    out[0] = lo;
    *out.last_mut().unwrap() = hi;
    out
}

/// Scan resolution of the sup solver.
const SUP_SCAN_NODES: usize = 512;
/// Relative inset used to probe open interval endpoints.
const EDGE_INSET: f64 = 1e-9;
/// Matching tolerance for the degenerate rule's exponent.
const DEGENERATE_P_TOL: f64 = 1e-12;

/// Weight rule; see the module docs for the families.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiRule {
    PowerPole { a: f64, b: f64 },
    Power { beta: f64 },
    Degenerate { r: f64, value: f64 },
    Constant { value: f64 },
    Tabulated { p: Vec<f64>, log_value: Vec<f64> },
}

/// A weight function together with its exponent support `(lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiFunction {
    lower: f64,
    upper: f64,
    rule: PsiRule,
}

/// Result of a sup scan: the value and the exponent where it was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupResult {
    pub value: f64,
    pub at_p: f64,
}

fn check_support(lower: f64, upper: f64) -> Result<()> {
    if !(lower >= 1.0 && lower < upper) || lower.is_infinite() || upper.is_nan() {
        return Err(Error::BadSupport { lower, upper });
    }
    Ok(())
}

impl PsiFunction {
    /// `(p - lower)^{-a} (upper - p)^{-b}` on a finite interval.
    pub fn power_pole(a: f64, b: f64, lower: f64, upper: f64) -> Result<Self> {
        check_support(lower, upper)?;
        if upper.is_infinite() {
            return Err(Error::bad_param(
                "power-pole upper endpoint",
                "must be finite",
            ));
        }
        if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::bad_param(
                "pole exponents",
                format!("a = {a}, b = {b}"),
            ));
        }
        Ok(PsiFunction {
            lower,
            upper,
            rule: PsiRule::PowerPole { a, b },
        })
    }

    /// `p^beta` on `(lower, upper)`; `upper` may be infinite.
    pub fn power(beta: f64, lower: f64, upper: f64) -> Result<Self> {
        check_support(lower, upper)?;
        if !beta.is_finite() {
            return Err(Error::NonFinite {
                what: "power exponent",
                value: beta,
            });
        }
        Ok(PsiFunction {
            lower,
            upper,
            rule: PsiRule::Power { beta },
        })
    }

    /// Weight of the degenerate scale that coincides with plain `L_r`.
    pub fn degenerate(r: f64) -> Result<Self> {
        Self::degenerate_scaled(r, 1.0)
    }

    /// Degenerate rule with an arbitrary positive value at `r`; used to fold
    /// multiplicative coefficients into the weight without a table.
    pub fn degenerate_scaled(r: f64, value: f64) -> Result<Self> {
        if !r.is_finite() || r <= 1.0 {
            return Err(Error::bad_param(
                "degenerate exponent",
                format!("r = {r}, need r > 1"),
            ));
        }
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::bad_param("degenerate value", format!("{value}")));
        }
        Ok(PsiFunction {
            lower: 1.0,
            upper: f64::INFINITY,
            rule: PsiRule::Degenerate { r, value },
        })
    }

    /// Constant weight on `(lower, upper)`.
    pub fn constant(value: f64, lower: f64, upper: f64) -> Result<Self> {
        check_support(lower, upper)?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::bad_param("constant weight", format!("{value}")));
        }
        Ok(PsiFunction {
            lower,
            upper,
            rule: PsiRule::Constant { value },
        })
    }

    /// Tabulated weight from positive samples; interpolation is piecewise
    /// linear in `(p, log value)` and the support is the tabulated hull.
    pub fn tabulated(p: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if p.len() != value.len() {
            return Err(Error::GridMismatch {
                why: format!("{} exponents vs {} values", p.len(), value.len()),
            });
        }
        if p.len() < 2 {
            return Err(Error::TableTooShort {
                need: 2,
                got: p.len(),
            });
        }
        let mut log_value = Vec::with_capacity(value.len());
        for &v in &value {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::bad_param("tabulated weight value", format!("{v}")));
            }
            log_value.push(v.ln());
        }
        Self::tabulated_log(p, log_value)
    }

    /// Tabulated weight from `(p, log value)` samples.
    pub fn tabulated_log(p: Vec<f64>, log_value: Vec<f64>) -> Result<Self> {
        if p.len() != log_value.len() {
            return Err(Error::GridMismatch {
                why: format!("{} exponents vs {} log-values", p.len(), log_value.len()),
            });
        }
        if p.len() < 2 {
            return Err(Error::TableTooShort {
                need: 2,
                got: p.len(),
            });
        }
        for (i, &x) in p.iter().enumerate() {
            if !x.is_finite() || x < 1.0 {
                return Err(Error::bad_param(
                    "tabulated exponent",
                    format!("p[{i}] = {x}"),
                ));
            }
            if i > 0 && x <= p[i - 1] {
                return Err(Error::NotIncreasing { index: i });
            }
        }
        for &lv in &log_value {
            if !lv.is_finite() {
                return Err(Error::NonFinite {
                    what: "tabulated log-value",
                    value: lv,
                });
            }
        }
        let lower = p[0];
        let upper = *p.last().unwrap();
        Ok(PsiFunction {
            lower,
            upper,
            rule: PsiRule::Tabulated { p, log_value },
        })
    }

    pub fn rule(&self) -> &PsiRule {
        &self.rule
    }

    /// Exponent support `(lower, upper)`; closed for tabulated rules, open
    /// otherwise.
    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn degenerate_exponent(&self) -> Option<f64> {
        match self.rule {
            PsiRule::Degenerate { r, .. } => Some(r),
            _ => None,
        }
    }

    /// Weight value at `p`: `+inf` off-support for closed-form rules, an
    /// error outside the hull of a tabulated rule.
    pub fn eval(&self, p: f64) -> Result<f64> {
        Ok(self.log_eval(p)?.exp())
    }

    /// `ln psi(p)` with the same domain conventions as [`Self::eval`]; the
    /// log form survives pole blowups that overflow the plain value.
    pub fn log_eval(&self, p: f64) -> Result<f64> {
        if !p.is_finite() {
            return Err(Error::NonFinite {
                what: "exponent",
                value: p,
            });
        }
        match &self.rule {
            PsiRule::PowerPole { a, b } => {
                if p <= self.lower || p >= self.upper {
                    return Ok(f64::INFINITY);
                }
                Ok(-a * (p - self.lower).ln() - b * (self.upper - p).ln())
            }
            PsiRule::Power { beta } => {
                if p <= self.lower || p >= self.upper {
                    return Ok(f64::INFINITY);
                }
                Ok(beta * p.ln())
            }
            PsiRule::Degenerate { r, value } => {
                if (p - r).abs() <= DEGENERATE_P_TOL * r.max(1.0) {
                    Ok(value.ln())
                } else {
                    Ok(f64::INFINITY)
                }
            }
            PsiRule::Constant { value } => {
                if p <= self.lower || p >= self.upper {
                    return Ok(f64::INFINITY);
                }
                Ok(value.ln())
            }
            PsiRule::Tabulated { p: ps, log_value } => {
                let lo = ps[0];
                let hi = *ps.last().unwrap();
                if p < lo || p > hi {
                    return Err(Error::OutsideTabulatedHull { p, lo, hi });
                }
                let k = match ps.binary_search_by(|a| a.partial_cmp(&p).unwrap()) {
                    Ok(i) => return Ok(log_value[i]),
                    Err(i) => i - 1,
                };
                let w = (p - ps[k]) / (ps[k + 1] - ps[k]);
                Ok(log_value[k] + w * (log_value[k + 1] - log_value[k]))
            }
        }
    }

    /// Fundamental function `phi(delta) = sup_p delta^{1/p} / psi(p)` with
    /// the attaining exponent.
    pub fn fundamental(&self, delta: f64) -> Result<SupResult> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::bad_param("delta", format!("{delta}")));
        }
        self.sup_ratio(f64::NEG_INFINITY, |p| delta.powf(1.0 / p))
    }

    /// Truncated fundamental function: the sup restricted to `p > q`.
    pub fn truncated_fundamental(&self, q: f64, delta: f64) -> Result<SupResult> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::bad_param("delta", format!("{delta}")));
        }
        if !q.is_finite() || q < self.lower || q >= self.upper {
            return Err(Error::bad_param(
                "truncation exponent",
                format!("q = {q} outside [{}, {})", self.lower, self.upper),
            ));
        }
        self.sup_ratio(q, |p| delta.powf(1.0 / p))
    }

    /// `sup_p num(p) / psi(p)` over the support clipped below at `lo_clip`.
    ///
    /// Dense scan (512 nodes, plus the table nodes for tabulated rules)
    /// followed by golden-section polish between the scan neighbors of the
    /// best node.  No unimodality is assumed; the polish is local.
    pub fn sup_ratio(&self, lo_clip: f64, num: impl Fn(f64) -> f64) -> Result<SupResult> {
        if let PsiRule::Degenerate { r, value } = self.rule {
            if r > lo_clip {
                return Ok(SupResult {
                    value: num(r) / value,
                    at_p: r,
                });
            }
            return Ok(SupResult {
                value: 0.0,
                at_p: lo_clip,
            });
        }

        let lo = self.lower.max(lo_clip);
        let hi = self.upper;
        let nodes = self.scan_nodes(lo, hi);
        if nodes.is_empty() {
            return Ok(SupResult {
                value: 0.0,
                at_p: lo,
            });
        }

        let ratio = |p: f64| -> f64 {
            let lpsi = match self.log_eval(p) {
                Ok(v) => v,
                Err(_) => return f64::NEG_INFINITY,
            };
            if lpsi.is_infinite() {
                return if lpsi > 0.0 { 0.0 } else { f64::INFINITY };
            }
            let n = num(p);
            if !n.is_finite() || n < 0.0 {
                return f64::NEG_INFINITY;
            }
            n * (-lpsi).exp()
        };

        let mut best = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        let vals: Vec<f64> = nodes.iter().map(|&p| ratio(p)).collect();
        for (i, &v) in vals.iter().enumerate() {
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        if !best_val.is_finite() {
            return Ok(SupResult {
                value: best_val.max(0.0),
                at_p: nodes[best],
            });
        }

        let mut a = if best > 0 {
            nodes[best - 1]
        } else {
            nodes[best]
        };
        let mut b = if best + 1 < nodes.len() {
            nodes[best + 1]
        } else {
            nodes[best]
        };
        // Golden-section polish of the bracket; keeps the better endpoint
        // when the objective is monotone across it.
        let inv_phi = 0.618_033_988_749_894_9_f64;
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = ratio(x1);
        let mut f2 = ratio(x2);
        for _ in 0..100 {
            if b - a <= 1e-12 * b.abs().max(1.0) {
                break;
            }
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = ratio(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = ratio(x2);
            }
        }
        let (mut out_p, mut out_v) = (nodes[best], best_val);
        for (p, v) in [(x1, f1), (x2, f2)] {
            if v > out_v {
                out_v = v;
                out_p = p;
            }
        }
        Ok(SupResult {
            value: out_v,
            at_p: out_p,
        })
    }

    fn scan_nodes(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut nodes: Vec<f64> = Vec::with_capacity(SUP_SCAN_NODES + 8);
        match &self.rule {
            PsiRule::Tabulated { p, .. } => {
                // Closed hull: the endpoints are admissible, and every node is
                // a potential kink of the objective.
                let lo = lo.max(p[0]);
                let hi = hi.min(*p.last().unwrap());
                if lo > hi {
                    return Vec::new();
                }
                for i in 0..=SUP_SCAN_NODES {
                    nodes.push(lo + (hi - lo) * i as f64 / SUP_SCAN_NODES as f64);
                }
                nodes.extend(p.iter().copied().filter(|&x| x > lo && x < hi));
                nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
                nodes.dedup();
            }
            _ if hi.is_finite() => {
                if lo >= hi {
                    return Vec::new();
                }
                let w = hi - lo;
                nodes.push(lo + w * EDGE_INSET);
                for i in 0..SUP_SCAN_NODES {
                    nodes.push(lo + w * (i as f64 + 0.5) / SUP_SCAN_NODES as f64);
                }
                nodes.push(hi - w * EDGE_INSET);
            }
            _ => {
                // Map (0,1) -> (lo, inf) through t/(1-t); the scan reaches
                // exponents ~ lo + 1000 and the polish handles the interior.
                nodes.push(lo + EDGE_INSET);
                for i in 0..SUP_SCAN_NODES {
                    let t = (i as f64 + 0.5) / SUP_SCAN_NODES as f64;
                    nodes.push(lo + t / (1.0 - t));
                }
            }
        }
        nodes
    }
}

impl std::fmt::Display for PsiFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.rule {
            PsiRule::PowerPole { a, b } => {
                write!(
                    f,
                    "power-pole(a={a}, b={b}) on ({}, {})",
                    self.lower, self.upper
                )
            }
            PsiRule::Power { beta } => {
                write!(f, "power(beta={beta}) on ({}, {})", self.lower, self.upper)
            }
            PsiRule::Degenerate { r, value } => {
                if *value == 1.0 {
                    write!(f, "degenerate(r={r})")
                } else {
                    write!(f, "degenerate(r={r}, value={value:.6e})")
                }
            }
            PsiRule::Constant { value } => {
                write!(f, "constant({value}) on ({}, {})", self.lower, self.upper)
            }
            PsiRule::Tabulated { p, .. } => {
                write!(
                    f,
                    "tabulated({} nodes on [{}, {}])",
                    p.len(),
                    p[0],
                    p.last().unwrap()
                )
            }
        }
    }
}

/// Upper envelope of a family of `L_p`-norm curves sampled on a shared
/// exponent grid, as a tabulated weight.
///
/// This is the natural weight of the family: the smallest tabulated rule
/// whose grand norm dominates every member at the sampled exponents.
pub fn natural_function_from_family(p_grid: &[f64], curves: &[Vec<f64>]) -> Result<PsiFunction> {
    if curves.is_empty() {
        return Err(Error::Empty {
            what: "curve family",
        });
    }
    for c in curves {
        if c.len() != p_grid.len() {
            return Err(Error::GridMismatch {
                why: format!("curve has {} samples, grid has {}", c.len(), p_grid.len()),
            });
        }
    }
    let mut env = vec![f64::NEG_INFINITY; p_grid.len()];
    for c in curves {
        for (e, &v) in env.iter_mut().zip(c) {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::bad_param("curve value", format!("{v}")));
            }
            *e = e.max(v);
        }
    }
    PsiFunction::tabulated(p_grid.to_vec(), env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_fundamental_is_exact_power() {
        let psi = PsiFunction::degenerate(2.0).unwrap();
        let r = psi.fundamental(0.25).unwrap();
        assert_relative_eq!(r.value, 0.5, max_relative = 1e-12);
        assert_relative_eq!(r.at_p, 2.0);
    }

    #[test]
    fn constant_weight_pushes_sup_to_upper_endpoint() {
        let psi = PsiFunction::constant(1.0, 1.0, 2.0).unwrap();
        let r = psi.fundamental(0.01).unwrap();
        // sup over p < 2 of 0.01^{1/p} approaches 0.01^{1/2} = 0.1.
        assert_relative_eq!(r.value, 0.1, max_relative = 1e-6);
        assert!(r.at_p > 1.99);
    }

    #[test]
    fn power_weight_has_interior_maximum() {
        let psi = PsiFunction::power(0.5, 1.0, f64::INFINITY).unwrap();
        let delta: f64 = 2.0_f64.powi(-20);
        let r = psi.fundamental(delta).unwrap();
        // Stationarity of delta^{1/p} p^{-1/2}: p* = |ln delta| / beta... the
        // exact optimum of (1/p) ln(delta) - 0.5 ln(p) sits at p = 2|ln delta|.
        let p_star = 2.0 * delta.ln().abs();
        assert_relative_eq!(r.at_p, p_star, max_relative = 1e-6);
        let want = delta.powf(1.0 / p_star) / p_star.sqrt();
        assert_relative_eq!(r.value, want, max_relative = 1e-9);
    }

    #[test]
    fn power_pole_fundamental_matches_dense_scan() {
        let psi = PsiFunction::power_pole(1.0, 1.0, 2.0, 4.0).unwrap();
        for &delta in &[1e-1, 1e-2, 1e-3] {
            let got = psi.fundamental(delta).unwrap().value;
            let mut want = 0.0f64;
            for i in 1..2_000_000u32 {
                let p = 2.0 + 2.0 * i as f64 / 2_000_000.0;
                let v = delta.powf(1.0 / p) * (p - 2.0) * (4.0 - p);
                want = want.max(v);
            }
            assert_relative_eq!(got, want, max_relative = 1e-8);
        }
    }

    #[test]
    fn truncated_fundamental_restricts_the_sup() {
        let psi = PsiFunction::constant(1.0, 1.0, 2.0).unwrap();
        // Truncation does not move a sup already attained near p = 2.
        let full = psi.fundamental(0.01).unwrap().value;
        let trunc = psi.truncated_fundamental(1.5, 0.01).unwrap().value;
        assert_relative_eq!(full, trunc, max_relative = 1e-9);

        // A pole-free weight growing in p: truncating above the optimum
        // forces the sup to the truncation point.
        let psi = PsiFunction::power(2.0, 1.0, f64::INFINITY).unwrap();
        let delta = 0.5f64;
        let q = 40.0;
        let t = psi.truncated_fundamental(q, delta).unwrap();
        assert!(
            t.at_p - q < 0.5,
            "sup should sit at the truncation point, got {}",
            t.at_p
        );
    }

    #[test]
    fn tabulated_eval_interpolates_in_log() {
        let psi = PsiFunction::tabulated(vec![2.0, 4.0], vec![1.0, 9.0]).unwrap();
        // Halfway in p means the geometric mean of the endpoint values.
        assert_relative_eq!(psi.eval(3.0).unwrap(), 3.0, max_relative = 1e-12);
        assert!(matches!(
            psi.eval(5.0),
            Err(Error::OutsideTabulatedHull { .. })
        ));
    }

    #[test]
    fn off_support_closed_form_is_infinite() {
        let psi = PsiFunction::degenerate(2.0).unwrap();
        assert!(psi.eval(3.0).unwrap().is_infinite());
        let pole = PsiFunction::power_pole(1.0, 0.0, 2.0, 4.0).unwrap();
        assert!(pole.eval(4.5).unwrap().is_infinite());
        assert!(pole.eval(2.0).unwrap().is_infinite());
    }

    #[test]
    fn family_envelope_is_pointwise_max() {
        let grid = vec![2.0, 3.0, 4.0];
        let curves = vec![vec![1.0, 5.0, 2.0], vec![3.0, 1.0, 1.0]];
        let psi = natural_function_from_family(&grid, &curves).unwrap();
        assert_relative_eq!(psi.eval(2.0).unwrap(), 3.0);
        assert_relative_eq!(psi.eval(3.0).unwrap(), 5.0);
        assert_relative_eq!(psi.eval(4.0).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_supports() {
        assert!(PsiFunction::power_pole(1.0, 1.0, 4.0, 2.0).is_err());
        assert!(PsiFunction::power_pole(1.0, 1.0, 2.0, f64::INFINITY).is_err());
        assert!(PsiFunction::constant(1.0, 0.5, 2.0).is_err());
        assert!(PsiFunction::degenerate(1.0).is_err());
    }
}
