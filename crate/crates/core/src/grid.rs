//! Functions sampled on the uniform lattice over [0, width]^d: the rectangle
//! difference operator, ordinary and rectangle moduli of continuity, dilation
//! with the linear taper continuation, and the rectangle-distance axiom check.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::Result;

/// Per-axis node cap for the O(n^4) two-dimensional pair sweeps.
pub const SWEEP_CAP_2D: usize = 64;

/// Cap on total stored lattice values.
pub const MAX_LATTICE_POINTS: usize = 1 << 24;

/// A function sampled on the uniform lattice x_j = j*h, h = width/(n-1), over
/// [0, width]^d. Values are stored row-major: in two dimensions index i*n + j
/// holds the sample at (i*h, j*h).
///
/// The width is 1 except for the dilation machinery, which works on widened
/// one-dimensional intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    d: usize,
    n: usize,
    width: f64,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wraps an explicit value array. The length must be exactly n^d and every
    /// entry finite.
    pub fn from_values(d: usize, n: usize, width: f64, values: Vec<f64>) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::BadDimension {
                d,
                supported: "1 or 2",
            });
        }
        if n < 2 {
            return Err(Error::bad_param(
                "lattice",
                format!("need at least 2 nodes per axis, got {n}"),
            ));
        }
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::bad_param(
                "lattice",
                format!("width must be positive and finite, got {width}"),
            ));
        }
        let total = n
            .checked_pow(d as u32)
            .filter(|&t| t <= MAX_LATTICE_POINTS)
            .ok_or(Error::LatticeTooLarge {
                n,
                cap: MAX_LATTICE_POINTS,
            })?;
        if values.len() != total {
            return Err(Error::GridMismatch {
                why: format!(
                    "expected {} values for d = {}, n = {}, got {}",
                    total,
                    d,
                    n,
                    values.len()
                ),
            });
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::bad_param(
                "lattice value",
                format!("non-finite sample ({v}) at node {i}"),
            ));
        }
        Ok(GridFunction {
            d,
            n,
            width,
            values,
        })
    }

    /// Samples a one-dimensional function on [0, 1].
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn_with_width(n, 1.0, f)
    }

    /// Samples a one-dimensional function on [0, width].
    pub fn from_fn_with_width(n: usize, width: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Self::from_values(1, n, width, Vec::new());
        }
        let h = width / (n - 1) as f64;
        let values: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
        Self::from_values(1, n, width, values)
    }

    /// Samples a two-dimensional function on [0, 1]^2.
    pub fn from_fn_2d(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if n < 2 || n.saturating_mul(n) > MAX_LATTICE_POINTS {
            return Self::from_values(2, n, 1.0, Vec::new());
        }
        let h = 1.0 / (n - 1) as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x = i as f64 * h;
            for j in 0..n {
                values.push(f(x, j as f64 * h));
            }
        }
        Self::from_values(2, n, 1.0, values)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Lattice spacing h = width/(n-1).
    pub fn spacing(&self) -> f64 {
        self.width / (self.n - 1) as f64
    }

    /// Physical coordinate of node i along any axis.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value1(&self, i: usize) -> f64 {
        debug_assert_eq!(self.d, 1);
        self.values[i]
    }

    pub fn value2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.d, 2);
        self.values[i * self.n + j]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// CSV export: a fixed header line, one metadata row `d,n,width`, then the
    /// samples in row-major order, one lattice row per line.
    ///
    /// Values print in shortest round-trip form, so export followed by import
    /// reproduces the grid bit for bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,n,width\n");
        out.push_str(&format!("{},{},{}\n", self.d, self.n, self.width));
        match self.d {
            1 => {
                for v in &self.values {
                    out.push_str(&format!("{v}\n"));
                }
            }
            _ => {
                for i in 0..self.n {
                    let row: Vec<String> = self.values[i * self.n..(i + 1) * self.n]
                        .iter()
                        .map(|v| format!("{v}"))
                        .collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid csv".into()))?;
        if header != "d,n,width" {
            return Err(Error::Parse(format!(
                "expected header 'd,n,width', got '{header}'"
            )));
        }
        let meta = lines
            .next()
            .ok_or_else(|| Error::Parse("missing metadata row".into()))?;
        let parts: Vec<&str> = meta.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "metadata row needs 3 fields, got {}",
                parts.len()
            )));
        }
        let d: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad dimension '{}'", parts[0])))?;
        let n: usize = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad node count '{}'", parts[1])))?;
        let width: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad width '{}'", parts[2])))?;
        let mut values = Vec::new();
        for line in lines {
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value '{field}'")))?;
                values.push(v);
            }
        }
        Self::from_values(d, n, width, values)
    }
}

/// The d-dimensional increment of f over the box spanned by lattice points x
/// and y: the alternating corner sum. In one dimension this is f(y) - f(x);
/// in two, f(y1,y2) - f(x1,y2) - f(y1,x2) + f(x1,x2). It annihilates any
/// function that does not vary jointly in all coordinates.
pub fn rectangle_difference(f: &GridFunction, x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != f.d || y.len() != f.d {
        return Err(Error::GridMismatch {
            why: format!(
                "corner index vectors must have length d = {}, got {} and {}",
                f.d,
                x.len(),
                y.len()
            ),
        });
    }
    for k in 0..f.d {
        if x[k] >= f.n || y[k] >= f.n {
            return Err(Error::GridMismatch {
                why: format!("lattice index out of range on axis {k}: n = {}", f.n),
            });
        }
    }
    Ok(match f.d {
        1 => f.values[y[0]] - f.values[x[0]],
        _ => {
            f.value2(y[0], y[1]) - f.value2(x[0], y[1]) - f.value2(y[0], x[1])
                + f.value2(x[0], x[1])
        }
    })
}

/// Window radius in lattice steps for a physical distance. The tiny relative
/// slack keeps exact h-multiples from landing one step short.
fn window_radius(delta: f64, h: f64, n: usize) -> usize {
    let w = (delta / h * (1.0 + 1e-12) + 1e-12).floor();
    (w as usize).min(n - 1)
}

/// sup |f(x) - f(y)| over lattice pairs with |x - y| <= delta (Euclidean).
///
/// One dimension runs in O(n) per query and is exact over all lattice pairs;
/// two dimensions fall back to the pair sweep under [`SWEEP_CAP_2D`].
pub fn modulus_of_continuity(f: &GridFunction, delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::bad_param(
            "modulus",
            format!("distance must be finite and non-negative, got {delta}"),
        ));
    }
    match f.d {
        1 => Ok(modulus_1d(f, delta)),
        _ => modulus_2d(f, delta),
    }
}

fn modulus_1d(f: &GridFunction, delta: f64) -> f64 {
    let n = f.n;
    let w = window_radius(delta, f.spacing(), n);
    if w == 0 {
        return 0.0;
    }
    // Every admissible pair lies inside some window of w+1 consecutive nodes,
    // and each window's max minus min is itself an admissible pair, so the
    // sliding-window sweep equals the full pair sweep exactly.
    let len = w + 1;
    let v = &f.values;
    let mut best = 0.0f64;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    for i in 0..n {
        while maxq.back().is_some_and(|&j| v[j] <= v[i]) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| v[j] >= v[i]) {
            minq.pop_back();
        }
        minq.push_back(i);
        if i + 1 >= len {
            let lo = i + 1 - len;
            while *maxq.front().unwrap() < lo {
                maxq.pop_front();
            }
            while *minq.front().unwrap() < lo {
                minq.pop_front();
            }
            best = best.max(v[*maxq.front().unwrap()] - v[*minq.front().unwrap()]);
        }
    }
    best
}

fn modulus_2d(f: &GridFunction, delta: f64) -> Result<f64> {
    let n = f.n;
    if n > SWEEP_CAP_2D {
        return Err(Error::LatticeTooLarge {
            n,
            cap: SWEEP_CAP_2D,
        });
    }
    let h = f.spacing();
    let w = window_radius(delta, h, n);
    let r2 = (delta / h) * (delta / h) * (1.0 + 2e-12) + 1e-9;
    let mut best = 0.0f64;
    for i1 in 0..n {
        for j1 in 0..n {
            let a = f.value2(i1, j1);
            for i2 in i1..(i1 + w + 1).min(n) {
                let di = i2 - i1;
                // visit each unordered pair once
                let start = if di == 0 {
                    j1 + 1
                } else {
                    j1.saturating_sub(w)
                };
                for j2 in start..(j1 + w + 1).min(n) {
                    let dj = j2.abs_diff(j1);
                    if ((di * di + dj * dj) as f64) <= r2 {
                        best = best.max((f.value2(i2, j2) - a).abs());
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Prefix-maximized gap profile of |rectangle difference| on a two-dimensional
/// lattice: an O(n^4) build after which any rectangle-modulus query is a table
/// lookup. Build it once when sweeping many gap vectors over one function.
#[derive(Debug, Clone)]
pub struct RectangleModulusTable {
    n: usize,
    h: f64,
    prefix: Vec<f64>,
}

pub fn rectangle_modulus_table(f: &GridFunction) -> Result<RectangleModulusTable> {
    if f.d != 2 {
        return Err(Error::BadDimension {
            d: f.d,
            supported: "2",
        });
    }
    let n = f.n;
    if n > SWEEP_CAP_2D {
        return Err(Error::LatticeTooLarge {
            n,
            cap: SWEEP_CAP_2D,
        });
    }
    // profile at exact gap pair (g1, g2); orientation-insensitive because
    // flipping one axis only flips the sign of the corner sum
    let mut prof = vec![0.0f64; n * n];
    for g1 in 1..n {
        for g2 in 1..n {
            let mut m = 0.0f64;
            for i in 0..n - g1 {
                for j in 0..n - g2 {
                    let d = f.value2(i + g1, j + g2) - f.value2(i, j + g2) - f.value2(i + g1, j)
                        + f.value2(i, j);
                    m = m.max(d.abs());
                }
            }
            prof[g1 * n + g2] = m;
        }
    }
    for g1 in 0..n {
        for g2 in 0..n {
            let mut m = prof[g1 * n + g2];
            if g1 > 0 {
                m = m.max(prof[(g1 - 1) * n + g2]);
            }
            if g2 > 0 {
                m = m.max(prof[g1 * n + g2 - 1]);
            }
            prof[g1 * n + g2] = m;
        }
    }
    Ok(RectangleModulusTable {
        n,
        h: f.spacing(),
        prefix: prof,
    })
}

impl RectangleModulusTable {
    /// sup |rectangle difference| over pairs with per-axis gap |x_i - y_i| <= delta[i].
    pub fn at(&self, delta: &[f64]) -> Result<f64> {
        if delta.len() != 2 {
            return Err(Error::GridMismatch {
                why: format!("gap vector must have length 2, got {}", delta.len()),
            });
        }
        for &dk in delta {
            if !dk.is_finite() || dk < 0.0 {
                return Err(Error::bad_param(
                    "rectangle modulus",
                    format!("per-axis gap must be finite and non-negative, got {dk}"),
                ));
            }
        }
        let w1 = window_radius(delta[0], self.h, self.n);
        let w2 = window_radius(delta[1], self.h, self.n);
        Ok(self.prefix[w1 * self.n + w2])
    }
}

/// sup |rectangle difference| over lattice pairs with per-axis gaps bounded by
/// delta. In one dimension the rectangle difference is a plain difference and
/// this coincides with [`modulus_of_continuity`].
pub fn rectangle_modulus(f: &GridFunction, delta: &[f64]) -> Result<f64> {
    if delta.len() != f.d {
        return Err(Error::GridMismatch {
            why: format!(
                "gap vector must have length d = {}, got {}",
                f.d,
                delta.len()
            ),
        });
    }
    for &dk in delta {
        if !dk.is_finite() || dk < 0.0 {
            return Err(Error::bad_param(
                "rectangle modulus",
                format!("per-axis gap must be finite and non-negative, got {dk}"),
            ));
        }
    }
    match f.d {
        1 => Ok(modulus_1d(f, delta[0])),
        _ => rectangle_modulus_table(f)?.at(delta),
    }
}

/// Continuation of a function on [0,1] to the whole line: unchanged on [0,1],
/// linear from f(1) down to zero on [1,2], identically zero past 2.
pub fn taper_extension<F: Fn(f64) -> f64>(f: F) -> impl Fn(f64) -> f64 {
    let edge = f(1.0);
    move |x: f64| {
        if x <= 1.0 {
            f(x)
        } else if x < 2.0 {
            edge * (2.0 - x)
        } else {
            0.0
        }
    }
}

/// Samples x -> f(lambda*x) with f continued by [`taper_extension`]. The
/// interval is [0, 2/min(lambda, 1)] so the dilated support [0, 2/lambda] is
/// never truncated when lambda < 1.
pub fn dilate<F: Fn(f64) -> f64>(f: F, lambda: f64, n: usize) -> Result<GridFunction> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::bad_param(
            "dilation",
            format!("scale must be positive and finite, got {lambda}"),
        ));
    }
    let ext = taper_extension(f);
    let width = 2.0 / lambda.min(1.0);
    GridFunction::from_fn_with_width(n, width, move |x| ext(lambda * x))
}

/// A vector of fractional smoothness orders together with its derived
/// quantities: the smallest order alpha0, the critical exponent p0 = 1/alpha0,
/// and the multiplicity m of axes attaining alpha0.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalIndex {
    pub alpha: Vec<f64>,
    pub alpha0: f64,
    pub p0: f64,
    pub m: usize,
}

impl FractionalIndex {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Empty {
                what: "fractional index",
            });
        }
        for &a in &alpha {
            if !a.is_finite() || a <= 0.0 || a > 1.0 {
                return Err(Error::bad_param(
                    "fractional index",
                    format!("orders must lie in (0, 1], got {a}"),
                ));
            }
        }
        let alpha0 = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        let m = alpha.iter().filter(|&&a| a == alpha0).count();
        Ok(FractionalIndex {
            alpha0,
            p0: 1.0 / alpha0,
            m,
            alpha,
        })
    }

    pub fn d(&self) -> usize {
        self.alpha.len()
    }
}

const MAX_RECORDED_VIOLATIONS: usize = 32;

/// One recorded failure of the two-point triangle inequality:
/// direct = |rect diff|(x,z) exceeded split = |rect diff|(x,y) + |rect diff|(y,z).
#[derive(Debug, Clone)]
pub struct TriangleViolation {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub split: f64,
    pub direct: f64,
}

/// Outcome of the rectangle-distance axiom sweep over random index triples.
///
/// Non-negativity with annihilation on a shared coordinate and symmetry hold
/// identically. The two-point triangle inequality holds in one dimension but
/// genuinely fails for d >= 2: the increment of x1*x2 vanishes on every
/// axis-aligned pair yet not across the diagonal, so the report records the
/// violating triples instead of asserting.
#[derive(Debug, Clone)]
pub struct DistanceCheckReport {
    pub trials: usize,
    pub shared_axis_failures: usize,
    pub symmetry_failures: usize,
    pub triangle_violations: Vec<TriangleViolation>,
    /// total triples violating the triangle inequality (the recorded list is capped)
    pub triangle_violation_count: usize,
}

impl DistanceCheckReport {
    pub fn axioms_hold(&self) -> bool {
        self.shared_axis_failures == 0
            && self.symmetry_failures == 0
            && self.triangle_violation_count == 0
    }
}

/// Samples `trials` random index triples and checks the three rectangle
/// distance axioms for rho(x,y) = |rectangle difference|.
pub fn rectangle_distance_check(f: &GridFunction, trials: usize, seed: u64) -> DistanceCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = f.min_max();
    let tol = 1e-9 * (hi - lo).max(1.0);
    let mut report = DistanceCheckReport {
        trials,
        shared_axis_failures: 0,
        symmetry_failures: 0,
        triangle_violations: Vec::new(),
        triangle_violation_count: 0,
    };
    let rho = |a: &[usize], b: &[usize]| {
        rectangle_difference(f, a, b)
            .expect("indices drawn in range")
            .abs()
    };
    for _ in 0..trials {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<usize> {
            (0..f.d).map(|_| rng.random_range(0..f.n)).collect()
        };
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let z = draw(&mut rng);
        // (a) a shared coordinate must annihilate the increment
        let mut shared = y.clone();
        let k = rng.random_range(0..f.d);
        shared[k] = x[k];
        if rho(&x, &shared) > tol {
            report.shared_axis_failures += 1;
        }
        // (b) symmetry
        if (rho(&x, &y) - rho(&y, &x)).abs() > tol {
            report.symmetry_failures += 1;
        }
        // (c) two-point triangle inequality
        let direct = rho(&x, &z);
        let split = rho(&x, &y) + rho(&y, &z);
        if direct > split + tol {
            report.triangle_violation_count += 1;
            if report.triangle_violations.len() < MAX_RECORDED_VIOLATIONS {
                report.triangle_violations.push(TriangleViolation {
                    x,
                    y,
                    z,
                    split,
                    direct,
                });
            }
        }
    }
    report
}
