//! Discrete Legendre transforms of convex tables.
//!
//! A [`ConvexTable`] holds samples `(t_i, v_i)` of a convex function on a
//! strictly increasing abscissa grid.  Its conjugate `sup_t (s*t - v(t))`
//! restricted to the nodes is `max_i (s*t_i - v_i)`; because the maximizing
//! node index is nondecreasing in `s`, a sorted batch of arguments is
//! answered in a single forward sweep, linear in nodes plus queries.
//!
//! For a table with at least two nodes the transform of an argument outside
//! the covered slope range is reported as `+inf`: the sup over the
//! underlying function is attained beyond the sampled window and the node
//! maximum would silently underestimate it.  A single-node table is the
//! convex indicator of a point, whose conjugate is finite on the whole line.

use crate::{Error, Result};

/// Relative tolerance for the convexity check in [`ConvexTable::new`].
const CONVEXITY_SLOPE_TOL: f64 = 1e-9;

/// Samples of a convex function, abscissae strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexTable {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl ConvexTable {
    /// Builds a table, checking monotone abscissae and convexity.
    ///
    /// Convexity is verified through chord slopes: each consecutive slope may
    /// fall below its predecessor by at most `1e-9 * max(1, max |slope|)`.
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let table = Self::new_unchecked_shape(t, v)?;
        let slopes = table.slopes();
        if !slopes.is_empty() {
            let scale = slopes.iter().fold(1.0f64, |m, s| m.max(s.abs()));
            let tol = CONVEXITY_SLOPE_TOL * scale;
            for i in 1..slopes.len() {
                if slopes[i] < slopes[i - 1] - tol {
                    let (_, gap) = Self::envelope(table.t.clone(), table.v.clone())?;
                    return Err(Error::NotConvex { gap, tol });
                }
            }
        }
        Ok(table)
    }

    /// Samples `f` on `count` uniform nodes over `[lo, hi]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::bad_param("sampling window", format!("[{lo}, {hi}]")));
        }
        if count < 2 {
            return Err(Error::TableTooShort {
                need: 2,
                got: count,
            });
        }
        let step = (hi - lo) / (count - 1) as f64;
        let t: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
        let v: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        Self::new(t, v)
    }

    /// Greatest convex minorant of the points, plus the largest vertical gap
    /// between a dropped point and the minorant.
    ///
    /// Callers that tolerate small convexity defects (quadrature noise,
    /// spliced rules) build the envelope and gate on the returned gap instead
    /// of using the strict constructor.
    pub fn envelope(t: Vec<f64>, v: Vec<f64>) -> Result<(Self, f64)> {
        let table = Self::new_unchecked_shape(t, v)?;
        let (t, v) = (table.t, table.v);
        // Andrew monotone chain, lower hull only; abscissae already sorted.
        let mut hull: Vec<usize> = Vec::with_capacity(t.len());
        for i in 0..t.len() {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // b above or on chord a->i: drop it.
                let cross = (t[b] - t[a]) * (v[i] - v[a]) - (v[b] - v[a]) * (t[i] - t[a]);
                if cross >= 0.0 {
                    break;
                }
                hull.pop();
            }
            hull.push(i);
        }
        let ht: Vec<f64> = hull.iter().map(|&i| t[i]).collect();
        let hv: Vec<f64> = hull.iter().map(|&i| v[i]).collect();
        let envelope = ConvexTable { t: ht, v: hv };
        let mut gap = 0.0f64;
        for i in 0..t.len() {
            let below = envelope.eval_extend(t[i]);
            gap = gap.max(v[i] - below);
        }
        Ok((envelope, gap))
    }

    fn new_unchecked_shape(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::GridMismatch {
                why: format!(
                    "abscissae ({}) and values ({}) differ in length",
                    t.len(),
                    v.len()
                ),
            });
        }
        if t.is_empty() {
            return Err(Error::TableTooShort { need: 1, got: 0 });
        }
        for (i, val) in t.iter().chain(v.iter()).enumerate() {
            if !val.is_finite() {
                return Err(Error::NonFinite {
                    what: "table entry",
                    value: *val,
                });
            }
            let _ = i;
        }
        for i in 1..t.len() {
            if t[i] <= t[i - 1] {
                return Err(Error::NotIncreasing { index: i });
            }
        }
        Ok(ConvexTable { t, v })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    /// Chord slopes between consecutive nodes (`len() - 1` entries).
    pub fn slopes(&self) -> Vec<f64> {
        self.t
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(tw, vw)| (vw[1] - vw[0]) / (tw[1] - tw[0]))
            .collect()
    }

    /// Covered slope range; the whole line for a single-node table.
    pub fn slope_range(&self) -> (f64, f64) {
        if self.t.len() == 1 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            let s = self.slopes();
            (s[0], *s.last().unwrap())
        }
    }

    /// Piecewise-linear value, extended linearly with the boundary slopes
    /// outside the hull.  This is the canonical convex extension of the
    /// table.
    pub fn eval_extend(&self, x: f64) -> f64 {
        let (t, v) = (&self.t, &self.v);
        if t.len() == 1 {
            return v[0];
        }
        let k = match t.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
            Ok(i) => return v[i],
            Err(0) => 0,
            Err(i) if i >= t.len() => t.len() - 2,
            Err(i) => i - 1,
        };
        let w = (x - t[k]) / (t[k + 1] - t[k]);
        v[k] + w * (v[k + 1] - v[k])
    }

    /// Piecewise-linear value inside the hull; error outside.
    pub fn eval_strict(&self, x: f64) -> Result<f64> {
        let lo = self.t[0];
        let hi = *self.t.last().unwrap();
        if x < lo || x > hi {
            return Err(Error::OutsideTabulatedHull { p: x, lo, hi });
        }
        Ok(self.eval_extend(x))
    }

    /// Node-max Legendre transform at a single argument.
    ///
    /// `+inf` outside the covered slope range (see module docs).
    pub fn conjugate_at(&self, s: f64) -> f64 {
        let (s_lo, s_hi) = self.slope_range();
        if s < s_lo || s > s_hi {
            return f64::INFINITY;
        }
        self.t
            .iter()
            .zip(&self.v)
            .map(|(&t, &v)| s * t - v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node-max transform with no slope-range sentinel.
    ///
    /// Every node contributes the supporting value `s*t_i - v_i`, so the
    /// result is a finite lower bound on the conjugate everywhere and equals
    /// [`Self::conjugate_at`] inside the covered slope range.  Tail-probability
    /// code uses this: each node is a valid Chebyshev exponent on its own, and
    /// clamping to the boundary line only loosens the bound, whereas the
    /// sentinel would turn it into an unjustified zero.
    pub fn conjugate_lower(&self, s: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.v)
            .map(|(&t, &v)| s * t - v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node-max transform for a batch of arguments.
    ///
    /// Arguments need not be sorted; they are ranked internally and answered
    /// with one monotone sweep of the node pointer, so the cost is
    /// `O(n + m log m)` for `n` nodes and `m` queries.
    pub fn conjugate_many(&self, args: &[f64]) -> Vec<f64> {
        let (s_lo, s_hi) = self.slope_range();
        let mut order: Vec<usize> = (0..args.len()).collect();
        order.sort_by(|&a, &b| args[a].partial_cmp(&args[b]).unwrap());
        let mut out = vec![f64::INFINITY; args.len()];
        let mut node = 0usize;
        for &qi in &order {
            let s = args[qi];
            if s < s_lo || s > s_hi {
                continue;
            }
            while node + 1 < self.t.len()
                && s * self.t[node + 1] - self.v[node + 1] >= s * self.t[node] - self.v[node]
            {
                node += 1;
            }
            out[qi] = s * self.t[node] - self.v[node];
        }
        out
    }

    /// Conjugate sampled at the table's own chord slopes, as a new table.
    ///
    /// At those arguments the node maximum coincides with the exact conjugate
    /// of the piecewise-linear interpolant, so conjugating twice reproduces
    /// the original values at the original nodes.
    pub fn conjugate_table(&self) -> Result<Self> {
        if self.t.len() < 2 {
            return Err(Error::TableTooShort {
                need: 2,
                got: self.t.len(),
            });
        }
        let mut slopes = self.slopes();
        // Strictly increasing abscissae are required; collapse ties that a
        // straight segment pair produces.
        slopes.dedup_by(|a, b| (*a - *b).abs() <= f64::EPSILON * a.abs().max(1.0));
        let vals = self.conjugate_many(&slopes);
        ConvexTable::new(slopes, vals)
    }
}
