//! Gaussian process and field samplers with the Monte Carlo side of the
//! continuity machinery: moment ladders over lattice gaps, natural weights
//! built from expected difference quotients, and the experiments that pit
//! sampled rectangle moduli against the bounds.
//!
//! Every estimate is reproducible: a path is a pure function of
//! `(kind, parameters, seed, n, stream)`, and reductions over paths run in
//! fixed chunks folded in index order, so reports do not depend on the
//! worker count or schedule.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fit;
use crate::grid::{modulus_of_continuity, rectangle_modulus_table, FractionalIndex, GridFunction};
use crate::norms::{default_p_grid_sized, grr_coefficient};
use crate::psi::orlicz::tail_bound_from_psi;
use crate::psi::PsiFunction;
use crate::Result;

/// Fewest paths any Monte Carlo estimate accepts.
pub const MIN_PATHS: usize = 100;

/// Raw `|increment|^p` accumulators overflow past this exponent.
const MAX_MOMENT_P: f64 = 128.0;

const MAX_LINE_NODES: usize = (1 << 20) + 1;
const MAX_SHEET_NODES: usize = 1024;

/// Direct covariance factorization is the fallback when the circulant
/// embedding turns up a negative eigenvalue; cubic cost caps its size.
const CHOLESKY_CAP: usize = 1024;

/// Relative tolerance on negative circulant eigenvalues before the
/// embedding is declared unusable.
const EIGEN_TOL: f64 = 1e-8;

/// Modulus statistics use streams disjoint from the moment-ladder streams
/// so the two sides of an experiment are independent.
const MODULUS_STREAM_BASE: u64 = 1 << 32;

const PATH_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FieldKind {
    BrownianMotion,
    FractionalBrownianMotion { hurst: f64 },
    BrownianSheet,
}

/// A sampled random process (d = 1) or field (d = 2) on the unit lattice,
/// identified up to bit reproducibility by its parameters, seed and
/// resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldModel {
    pub kind: FieldKind,
    pub seed: u64,
    /// Nodes per axis.
    pub n: usize,
}

impl RandomFieldModel {
    pub fn brownian_motion(seed: u64, n: usize) -> Result<Self> {
        Self::build(FieldKind::BrownianMotion, seed, n)
    }

    pub fn fractional_brownian_motion(hurst: f64, seed: u64, n: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::bad_param(
                "Hurst exponent",
                format!("{hurst} outside (0, 1)"),
            ));
        }
        Self::build(FieldKind::FractionalBrownianMotion { hurst }, seed, n)
    }

    pub fn brownian_sheet(seed: u64, n: usize) -> Result<Self> {
        Self::build(FieldKind::BrownianSheet, seed, n)
    }

    fn build(kind: FieldKind, seed: u64, n: usize) -> Result<Self> {
        let cap = match kind {
            FieldKind::BrownianSheet => MAX_SHEET_NODES,
            _ => MAX_LINE_NODES,
        };
        if n < 2 {
            return Err(Error::bad_param(
                "lattice",
                format!("{n} nodes; need at least 2"),
            ));
        }
        if n > cap {
            return Err(Error::LatticeTooLarge { n, cap });
        }
        Ok(RandomFieldModel { kind, seed, n })
    }

    pub fn d(&self) -> usize {
        match self.kind {
            FieldKind::BrownianSheet => 2,
            _ => 1,
        }
    }

    /// Same process on a different lattice; moduli are often sampled
    /// coarser than moments.
    pub fn with_resolution(&self, n: usize) -> Result<Self> {
        Self::build(self.kind.clone(), self.seed, n)
    }

    /// One realization on the lattice. `path` selects the RNG stream, so
    /// distinct indices give independent paths and a repeated index replays
    /// the same one.
    pub fn sample_path(&self, path: u64) -> Result<GridFunction> {
        Ok(FieldSampler::new(self)?.path(path))
    }
}

enum SamplerKind {
    Motion,
    /// Spectral synthesis of the stationary increment sequence: the scale
    /// table holds `sqrt(eigenvalue / weight)` per frequency, fixed once.
    Spectral {
        hurst: f64,
        scale: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    /// Dense factor of the increment covariance, used when the circulant
    /// embedding is not positive semi-definite.
    Factored {
        hurst: f64,
        chol: Vec<f64>,
    },
    Sheet,
}

/// Reusable sampler: covariance synthesis is done once here, after which
/// every path costs one pass of Gaussian draws (plus one FFT for the
/// spectral kinds).
pub struct FieldSampler {
    model: RandomFieldModel,
    kind: SamplerKind,
}

impl FieldSampler {
    pub fn new(model: &RandomFieldModel) -> Result<Self> {
        let kind = match model.kind {
            FieldKind::BrownianMotion => SamplerKind::Motion,
            FieldKind::BrownianSheet => SamplerKind::Sheet,
            FieldKind::FractionalBrownianMotion { hurst } => {
                increment_synthesis(hurst, model.n - 1)?
            }
        };
        Ok(FieldSampler {
            model: model.clone(),
            kind,
        })
    }

    pub fn model(&self) -> &RandomFieldModel {
        &self.model
    }

    pub fn path(&self, stream: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(self.model.seed);
        rng.set_stream(stream);
        let n = self.model.n;
        let h = 1.0 / (n - 1) as f64;
        match &self.kind {
            SamplerKind::Motion => {
                let sh = h.sqrt();
                let mut v = Vec::with_capacity(n);
                let mut w = 0.0;
                v.push(0.0);
                for _ in 1..n {
                    let z: f64 = rng.sample(StandardNormal);
                    w += sh * z;
                    v.push(w);
                }
                GridFunction::from_values(1, n, 1.0, v).expect("validated resolution")
            }
            SamplerKind::Spectral { hurst, scale, fft } => {
                let m = n - 1;
                let size = 2 * m;
                let mut a = vec![Complex::new(0.0, 0.0); size];
                a[0] = Complex::new(scale[0] * rng.sample::<f64, _>(StandardNormal), 0.0);
                a[m] = Complex::new(scale[m] * rng.sample::<f64, _>(StandardNormal), 0.0);
                for k in 1..m {
                    let g1: f64 = rng.sample(StandardNormal);
                    let g2: f64 = rng.sample(StandardNormal);
                    a[k] = Complex::new(scale[k] * g1, scale[k] * g2);
                    a[size - k] = a[k].conj();
                }
                fft.process(&mut a);
                let step = h.powf(*hurst);
                let mut v = Vec::with_capacity(n);
                let mut w = 0.0;
                v.push(0.0);
                for item in a.iter().take(m) {
                    w += step * item.re;
                    v.push(w);
                }
                GridFunction::from_values(1, n, 1.0, v).expect("validated resolution")
            }
            SamplerKind::Factored { hurst, chol } => {
                let m = n - 1;
                let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let step = h.powf(*hurst);
                let mut v = Vec::with_capacity(n);
                let mut w = 0.0;
                v.push(0.0);
                for i in 0..m {
                    let row = &chol[i * m..i * m + i + 1];
                    let g: f64 = row.iter().zip(&z).map(|(l, zz)| l * zz).sum();
                    w += step * g;
                    v.push(w);
                }
                GridFunction::from_values(1, n, 1.0, v).expect("validated resolution")
            }
            SamplerKind::Sheet => {
                // cell increments of variance h^2, double-cumulated; the
                // coordinate axes stay at zero
                let mut v = vec![0.0; n * n];
                for i in 1..n {
                    for j in 1..n {
                        let z: f64 = rng.sample(StandardNormal);
                        v[i * n + j] =
                            v[(i - 1) * n + j] + v[i * n + j - 1] - v[(i - 1) * n + j - 1] + h * z;
                    }
                }
                GridFunction::from_values(2, n, 1.0, v).expect("validated resolution")
            }
        }
    }
}

/// Covariance of the unit-spacing increment sequence with Hurst `hurst` at
/// lag `k`.
fn increment_covariance(hurst: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * hurst;
    0.5 * (((k - 1.0).abs()).powf(e) - 2.0 * k.powf(e) + (k + 1.0).powf(e))
}

fn increment_synthesis(hurst: f64, m: usize) -> Result<SamplerKind> {
    let size = 2 * m;
    let mut row = vec![Complex::new(0.0, 0.0); size];
    for (j, r) in row.iter_mut().enumerate() {
        let lag = j.min(size - j);
        *r = Complex::new(increment_covariance(hurst, lag), 0.0);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);
    let mut lambda: Vec<f64> = row.iter().map(|c| c.re).collect();
    let top = lambda.iter().cloned().fold(0.0f64, f64::max);
    let bottom = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    if bottom < -EIGEN_TOL * top {
        if m > CHOLESKY_CAP {
            return Err(Error::bad_param(
                "covariance embedding",
                format!(
                    "circulant eigenvalue {bottom:.3e} is negative; \
                     reduce the resolution to at most {} nodes for a direct factorization",
                    CHOLESKY_CAP + 1
                ),
            ));
        }
        return Ok(SamplerKind::Factored {
            hurst,
            chol: increment_cholesky(hurst, m)?,
        });
    }
    for l in &mut lambda {
        *l = l.max(0.0);
    }
    let denom = size as f64;
    let scale: Vec<f64> = lambda
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            if k == 0 || k == m {
                (l / denom).sqrt()
            } else {
                (l / (2.0 * denom)).sqrt()
            }
        })
        .collect();
    Ok(SamplerKind::Spectral { hurst, scale, fft })
}

fn increment_cholesky(hurst: f64, m: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = increment_covariance(hurst, i - j);
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::bad_param(
                        "covariance factorization",
                        format!("pivot {s:.3e} at row {i}; the lag table is not positive definite"),
                    ));
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Ok(l)
}

/// Monte Carlo settings shared by the field experiments. Estimates use
/// `paths` realizations; modulus statistics, whose per-path cost scales
/// with the lattice, use `modulus_paths` and optionally a coarser lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub paths: usize,
    pub modulus_paths: usize,
    /// Sample offsets per gap rung and axis in the moment ladder.
    pub ladder_offsets: usize,
    /// Lattice for modulus statistics; `None` keeps the model resolution
    /// (capped at 33 per axis for planar models, where modulus tables cost
    /// the fourth power of the resolution).
    pub modulus_n: Option<usize>,
    /// Absolute tolerance on fitted moment exponents, and relative slack on
    /// the fitted kernel constant, in the envelope precondition.
    pub moment_fit_tol: f64,
    /// Nodes in the truncation grid of the tail report.
    pub q_count: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 10_000,
            modulus_paths: 2_000,
            ladder_offsets: 32,
            modulus_n: None,
            moment_fit_tol: 0.15,
            q_count: 12,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < MIN_PATHS || self.modulus_paths < MIN_PATHS {
            return Err(Error::bad_param(
                "path count",
                format!(
                    "{} / {} below the floor {MIN_PATHS}",
                    self.paths, self.modulus_paths
                ),
            ));
        }
        if self.ladder_offsets == 0 {
            return Err(Error::bad_param("ladder offsets", "need at least one"));
        }
        if !(self.moment_fit_tol > 0.0 && self.moment_fit_tol < 1.0) {
            return Err(Error::bad_param(
                "moment fit tolerance",
                format!("{}", self.moment_fit_tol),
            ));
        }
        if self.q_count < 3 {
            return Err(Error::bad_param("truncation grid", "need at least 3 nodes"));
        }
        Ok(())
    }

    fn modulus_resolution(&self, model: &RandomFieldModel) -> usize {
        match self.modulus_n {
            Some(n) => n,
            None if model.d() == 2 => model.n.min(33),
            None => model.n,
        }
    }
}

/// Runs `per_path` over path indices `base..base + paths` in fixed chunks,
/// parallel within a chunk, folding results in index order. The fold order
/// never depends on the worker count, so sums are bit-stable.
fn accumulate_paths<T: Send>(
    base: u64,
    paths: usize,
    per_path: impl Fn(u64) -> T + Sync,
    mut fold: impl FnMut(T),
) {
    let mut start = 0usize;
    while start < paths {
        let end = (start + PATH_CHUNK).min(paths);
        let batch: Vec<T> = (start..end)
            .into_par_iter()
            .map(|i| per_path(base + i as u64))
            .collect();
        for t in batch {
            fold(t);
        }
        start = end;
    }
}

/// Moment of one rectangle increment, estimated over independent paths.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub paths: usize,
    pub p: f64,
}

/// Estimates `E |rectangle increment at (x, y)|^p` over `paths`
/// realizations; the points snap to their nearest lattice nodes.
pub fn mc_rectangle_moment(
    model: &RandomFieldModel,
    p: f64,
    x: &[f64],
    y: &[f64],
    paths: usize,
) -> Result<MomentEstimate> {
    let d = model.d();
    if x.len() != d || y.len() != d {
        return Err(Error::GridMismatch {
            why: format!("model d = {d}, corners are {} and {}", x.len(), y.len()),
        });
    }
    check_moment_exponent(p)?;
    if paths < MIN_PATHS {
        return Err(Error::bad_param(
            "path count",
            format!("{paths} below the floor {MIN_PATHS}"),
        ));
    }
    let snap = |c: &[f64]| -> Result<Vec<usize>> {
        c.iter()
            .map(|&v| {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::bad_param("corner", format!("{v} outside [0, 1]")));
                }
                Ok((v * (model.n - 1) as f64).round() as usize)
            })
            .collect()
    };
    let xi = snap(x)?;
    let yi = snap(y)?;
    let sampler = FieldSampler::new(model)?;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    accumulate_paths(
        0,
        paths,
        |stream| {
            let f = sampler.path(stream);
            let inc = match d {
                1 => f.value1(yi[0]) - f.value1(xi[0]),
                _ => {
                    f.value2(yi[0], yi[1]) - f.value2(xi[0], yi[1]) - f.value2(yi[0], xi[1])
                        + f.value2(xi[0], xi[1])
                }
            };
            inc.abs().powf(p)
        },
        |v| {
            sum += v;
            sumsq += v * v;
        },
    );
    let mean = sum / paths as f64;
    let var = ((sumsq - paths as f64 * mean * mean) / (paths as f64 - 1.0)).max(0.0);
    Ok(MomentEstimate {
        value: mean,
        std_error: (var / paths as f64).sqrt(),
        paths,
        p,
    })
}

fn check_moment_exponent(p: f64) -> Result<()> {
    if !(1.0..=MAX_MOMENT_P).contains(&p) {
        return Err(Error::bad_param(
            "moment exponent",
            format!("{p} outside [1, {MAX_MOMENT_P}]"),
        ));
    }
    Ok(())
}

/// Rectangle-increment moments tabulated on a geometric ladder of lattice
/// gaps, every exponent estimated from the same paths.
///
/// The ladder is stratified by gap magnitude because the seminorm
/// integrands concentrate at small gaps; within a path each rung averages
/// over evenly spaced offsets, and standard errors are between-path.
#[derive(Debug, Clone, Serialize)]
pub struct MomentLadder {
    pub p: Vec<f64>,
    /// Geometric rung gaps per axis, in lattice units.
    pub axis_gaps: Vec<Vec<usize>>,
    /// Product rungs, row-major over the axis lists.
    pub rungs: Vec<Vec<usize>>,
    /// `moment[rung][exponent]`.
    pub moment: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    pub spacing: f64,
    pub n: usize,
    pub paths: usize,
}

/// Per-axis exponents and the gap-one prefactor of a fitted power law
/// `E |increment|^p ~ prefactor * prod gap_k^{slope_k}` in physical gaps.
#[derive(Debug, Clone, Serialize)]
pub struct PowerFit {
    pub slope: Vec<f64>,
    pub prefactor: f64,
}

fn geometric_rungs(gmax: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut g = 1usize;
    while g < gmax {
        v.push(g);
        g *= 2;
    }
    v.push(gmax);
    v
}

pub fn mc_moment_ladder(
    model: &RandomFieldModel,
    p_list: &[f64],
    cfg: &McConfig,
) -> Result<MomentLadder> {
    cfg.validate()?;
    if p_list.is_empty() {
        return Err(Error::Empty {
            what: "exponent list",
        });
    }
    for &p in p_list {
        check_moment_exponent(p)?;
    }
    let d = model.d();
    let n = model.n;
    let axis: Vec<usize> = geometric_rungs(n - 1);
    let axis_gaps: Vec<Vec<usize>> = vec![axis.clone(); d];
    let rungs: Vec<Vec<usize>> = match d {
        1 => axis.iter().map(|&g| vec![g]).collect(),
        _ => {
            let mut v = Vec::with_capacity(axis.len() * axis.len());
            for &g1 in &axis {
                for &g2 in &axis {
                    v.push(vec![g1, g2]);
                }
            }
            v
        }
    };
    let sampler = FieldSampler::new(model)?;
    let np = p_list.len();
    let cells = rungs.len() * np;
    let mut sum = vec![0.0f64; cells];
    let mut sumsq = vec![0.0f64; cells];
    let offsets = |gap: usize| -> Vec<usize> {
        let room = n - gap;
        let k = cfg.ladder_offsets.min(room);
        (0..k).map(|i| i * room / k).collect()
    };
    accumulate_paths(
        0,
        cfg.paths,
        |stream| {
            let f = sampler.path(stream);
            let v = f.values();
            let mut out = vec![0.0f64; cells];
            for (r, gap) in rungs.iter().enumerate() {
                let mut count = 0usize;
                match d {
                    1 => {
                        let g = gap[0];
                        for j in offsets(g) {
                            let a = (v[j + g] - v[j]).abs();
                            push_powers(&mut out[r * np..(r + 1) * np], p_list, a);
                            count += 1;
                        }
                    }
                    _ => {
                        let (g1, g2) = (gap[0], gap[1]);
                        for i in offsets(g1) {
                            for j in offsets(g2) {
                                let a = (v[(i + g1) * n + j + g2]
                                    - v[i * n + j + g2]
                                    - v[(i + g1) * n + j]
                                    + v[i * n + j])
                                    .abs();
                                push_powers(&mut out[r * np..(r + 1) * np], p_list, a);
                                count += 1;
                            }
                        }
                    }
                }
                for c in &mut out[r * np..(r + 1) * np] {
                    *c /= count as f64;
                }
            }
            out
        },
        |per_path| {
            for (i, v) in per_path.into_iter().enumerate() {
                sum[i] += v;
                sumsq[i] += v * v;
            }
        },
    );
    let paths = cfg.paths as f64;
    let mut moment = Vec::with_capacity(rungs.len());
    let mut std_error = Vec::with_capacity(rungs.len());
    for r in 0..rungs.len() {
        let mut mrow = Vec::with_capacity(np);
        let mut srow = Vec::with_capacity(np);
        for c in 0..np {
            let mean = sum[r * np + c] / paths;
            let var = ((sumsq[r * np + c] - paths * mean * mean) / (paths - 1.0)).max(0.0);
            mrow.push(mean);
            srow.push((var / paths).sqrt());
        }
        moment.push(mrow);
        std_error.push(srow);
    }
    Ok(MomentLadder {
        p: p_list.to_vec(),
        axis_gaps,
        rungs,
        moment,
        std_error,
        spacing: 1.0 / (n - 1) as f64,
        n,
        paths: cfg.paths,
    })
}

fn push_powers(acc: &mut [f64], p_list: &[f64], a: f64) {
    if a <= 0.0 {
        return;
    }
    let la = a.ln();
    for (slot, &p) in acc.iter_mut().zip(p_list) {
        *slot += (p * la).exp();
    }
}

impl MomentLadder {
    fn d(&self) -> usize {
        self.axis_gaps.len()
    }

    /// Log-log regression of the `p_index`-th moment on the physical gaps,
    /// over the rungs selected by `keep`.
    fn fit_over(&self, p_index: usize, keep: impl Fn(&[usize]) -> bool) -> Result<PowerFit> {
        let d = self.d();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); d + 1];
        let mut y = Vec::new();
        for (r, gap) in self.rungs.iter().enumerate() {
            if !keep(gap) {
                continue;
            }
            let m = self.moment[r][p_index];
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::bad_param(
                    "moment ladder",
                    format!("non-positive estimate {m} at rung {r}"),
                ));
            }
            for (k, &g) in gap.iter().enumerate() {
                cols[k].push((g as f64 * self.spacing).ln());
            }
            cols[d].push(1.0);
            y.push(m.ln());
        }
        let beta = fit::ols(&cols, &y)?;
        Ok(PowerFit {
            slope: beta[..d].to_vec(),
            prefactor: beta[d].exp(),
        })
    }

    /// Power fit over the whole ladder.
    pub fn power_fit(&self, p_index: usize) -> Result<PowerFit> {
        self.fit_over(p_index, |_| true)
    }

    /// Power fit over the small-gap half of each axis, which governs
    /// integrability of the seminorm integrand at the diagonal.
    pub fn small_gap_fit(&self, p_index: usize) -> Result<PowerFit> {
        let cuts: Vec<usize> = self
            .axis_gaps
            .iter()
            .map(|ax| ax[(ax.len() - 1) / 2])
            .collect();
        self.fit_over(p_index, |gap| gap.iter().zip(&cuts).all(|(&g, &c)| g <= c))
    }
}

/// Piecewise-linear interpolation stencil of the rung table on every
/// lattice gap, linear in log gap: entry `g - 1` blends rungs `left` and
/// `right` with weight `w` on the right.
struct AxisStencil {
    left: Vec<usize>,
    right: Vec<usize>,
    w: Vec<f64>,
}

fn axis_stencil(rungs: &[usize], n: usize) -> AxisStencil {
    let lg: Vec<f64> = rungs.iter().map(|&g| (g as f64).ln()).collect();
    let mut left = Vec::with_capacity(n - 1);
    let mut right = Vec::with_capacity(n - 1);
    let mut w = Vec::with_capacity(n - 1);
    let mut k = 0usize;
    for g in 1..n {
        while k + 2 < rungs.len() && rungs[k + 1] < g {
            k += 1;
        }
        let r = (k + 1).min(rungs.len() - 1);
        let x = (g as f64).ln();
        let span = lg[r] - lg[k];
        let t = if span > 0.0 { (x - lg[k]) / span } else { 0.0 };
        left.push(k);
        right.push(r);
        w.push(t.clamp(0.0, 1.0));
    }
    AxisStencil { left, right, w }
}

/// One exponent of the natural weight: the fitted small-gap moment slopes
/// and, when the seminorm integrand is integrable, the weight value.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaRow {
    pub p: f64,
    pub slope: Vec<f64>,
    pub theta: Option<f64>,
}

/// Natural weight of a random model over an exponent grid, estimated from
/// the moment ladder. Exponents whose integrand fails the small-gap
/// integrability test are kept in the table with `theta = None`.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaNatural {
    pub alpha: Vec<f64>,
    pub rows: Vec<ThetaRow>,
    pub paths: usize,
}

impl ThetaNatural {
    pub fn kept(&self) -> (Vec<f64>, Vec<f64>) {
        let mut ps = Vec::new();
        let mut ts = Vec::new();
        for r in &self.rows {
            if let Some(t) = r.theta {
                ps.push(r.p);
                ts.push(t);
            }
        }
        (ps, ts)
    }

    /// Weight function over the surviving exponents.
    pub fn weight(&self) -> Result<PsiFunction> {
        let (ps, ts) = self.kept();
        match ps.len() {
            0 => Err(Error::bad_param(
                "natural weight",
                "every exponent was flagged divergent; the paths are rougher than the order demands",
            )),
            1 => PsiFunction::degenerate_scaled(ps[0], ts[0]),
            _ => PsiFunction::tabulated_log(ps, ts.iter().map(|t| t.ln()).collect()),
        }
    }

    pub fn to_csv(&self) -> String {
        let d = self.alpha.len();
        let mut out = String::from("p");
        for k in 1..=d {
            out.push_str(&format!(",slope_{k}"));
        }
        out.push_str(",theta\n");
        for r in &self.rows {
            out.push_str(&format!("{}", r.p));
            for s in &r.slope {
                out.push_str(&format!(",{s}"));
            }
            match r.theta {
                Some(t) => out.push_str(&format!(",{t}\n")),
                None => out.push_str(",divergent\n"),
            }
        }
        out
    }
}

/// Natural weight of the model: per exponent, the coefficient of the
/// continuity bound times the `1/p`-th power of the expected seminorm
/// integral, the expectation estimated on the moment ladder and the gap
/// integral summed over every lattice gap through the log-linear stencil.
///
/// An exponent is dropped (not an error) when the fitted small-gap moment
/// slope makes the integrand non-integrable on some axis; the lattice sum
/// alone would hide that divergence behind the gap-one cutoff.
pub fn theta_natural(
    model: &RandomFieldModel,
    alpha: &FractionalIndex,
    p_grid: &[f64],
    cfg: &McConfig,
) -> Result<ThetaNatural> {
    if alpha.d() != model.d() {
        return Err(Error::GridMismatch {
            why: format!("index d = {}, model d = {}", alpha.d(), model.d()),
        });
    }
    let admissible: Vec<f64> = p_grid
        .iter()
        .copied()
        .filter(|&p| p > alpha.p0 * (1.0 + 1e-9))
        .collect();
    if admissible.is_empty() {
        return Err(Error::BadSupport {
            lower: alpha.p0,
            upper: alpha.p0,
        });
    }
    let ladder = mc_moment_ladder(model, &admissible, cfg)?;
    let d = model.d();
    let n = model.n;
    let stencils: Vec<AxisStencil> = ladder
        .axis_gaps
        .iter()
        .map(|ax| axis_stencil(ax, n))
        .collect();
    let mut rows = Vec::with_capacity(admissible.len());
    for (c, &p) in admissible.iter().enumerate() {
        let fit = ladder.small_gap_fit(c)?;
        let ok = fit.slope.iter().zip(&alpha.alpha).all(|(&s, &a)| s > a * p);
        if !ok {
            rows.push(ThetaRow {
                p,
                slope: fit.slope,
                theta: None,
            });
            continue;
        }
        let inner = match d {
            1 => inner_sum_1d(&ladder, c, &stencils[0], &alpha.alpha, p),
            _ => inner_sum_2d(&ladder, c, &stencils, &alpha.alpha, p),
        };
        let coef = grr_coefficient(alpha, p)?;
        rows.push(ThetaRow {
            p,
            slope: fit.slope,
            theta: Some(coef * (inner.ln() / p).exp()),
        });
    }
    Ok(ThetaNatural {
        alpha: alpha.alpha.clone(),
        rows,
        paths: cfg.paths,
    })
}

fn inner_sum_1d(ladder: &MomentLadder, c: usize, st: &AxisStencil, alpha: &[f64], p: f64) -> f64 {
    let n = ladder.n;
    let h = ladder.spacing;
    let lm: Vec<f64> = ladder.moment.iter().map(|row| row[c].ln()).collect();
    let mut total = 0.0;
    for g in 1..n {
        let (k, r, w) = (st.left[g - 1], st.right[g - 1], st.w[g - 1]);
        let lmom = lm[k] + w * (lm[r] - lm[k]);
        let u = g as f64 * h;
        let lterm = lmom - (alpha[0] * p + 1.0) * u.ln();
        total += 2.0 * (n - g) as f64 * h * h * lterm.exp();
    }
    total
}

fn inner_sum_2d(ladder: &MomentLadder, c: usize, st: &[AxisStencil], alpha: &[f64], p: f64) -> f64 {
    let n = ladder.n;
    let h = ladder.spacing;
    let r2 = ladder.axis_gaps[1].len();
    let lm: Vec<f64> = ladder.moment.iter().map(|row| row[c].ln()).collect();
    let mut total = 0.0;
    for g1 in 1..n {
        let (k1, r1, w1) = (st[0].left[g1 - 1], st[0].right[g1 - 1], st[0].w[g1 - 1]);
        let u1 = g1 as f64 * h;
        let l1 = (alpha[0] * p + 1.0) * u1.ln();
        for g2 in 1..n {
            let (k2, rr2, w2) = (st[1].left[g2 - 1], st[1].right[g2 - 1], st[1].w[g2 - 1]);
            let a = lm[k1 * r2 + k2];
            let b = lm[r1 * r2 + k2];
            let cc = lm[k1 * r2 + rr2];
            let dd = lm[r1 * r2 + rr2];
            let lmom = (1.0 - w1) * ((1.0 - w2) * a + w2 * cc) + w1 * ((1.0 - w2) * b + w2 * dd);
            let u2 = g2 as f64 * h;
            let lterm = lmom - l1 - (alpha[1] * p + 1.0) * u2.ln();
            total += 4.0 * (n - g1) as f64 * (n - g2) as f64 * h * h * h * h * lterm.exp();
        }
    }
    total
}

/// One gap vector of the expected-modulus certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ExpectedModulusRow {
    pub delta: Vec<f64>,
    pub measured: f64,
    pub std_error: f64,
    pub bound: f64,
    pub slack: f64,
}

/// Certificate of the `A`-th moment of the rectangle modulus against the
/// gap power over the fundamental function of the natural weight, `A` the
/// smallest surviving exponent.
#[derive(Debug, Clone, Serialize)]
pub struct ExpectedModulusReport {
    pub alpha: Vec<f64>,
    pub a_exp: f64,
    /// Exponent grid that actually survived into the weight.
    pub p_used: Vec<f64>,
    pub rows: Vec<ExpectedModulusRow>,
    pub paths: usize,
    pub modulus_n: usize,
}

impl ExpectedModulusReport {
    /// Every row bounded (slack at least one).
    pub fn all_bounded(&self) -> bool {
        self.rows.iter().all(|r| r.slack >= 1.0)
    }

    pub fn to_csv(&self) -> String {
        let d = self.alpha.len();
        let mut out = String::new();
        for k in 1..=d {
            out.push_str(&format!("delta_{k},"));
        }
        out.push_str("measured,std_error,bound,slack\n");
        for r in &self.rows {
            for dl in &r.delta {
                out.push_str(&format!("{dl},"));
            }
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.measured, r.std_error, r.bound, r.slack
            ));
        }
        out
    }
}

pub fn certify_expected_modulus(
    model: &RandomFieldModel,
    alpha: &FractionalIndex,
    deltas: &[Vec<f64>],
    p_grid: &[f64],
    cfg: &McConfig,
) -> Result<ExpectedModulusReport> {
    cfg.validate()?;
    let d = model.d();
    check_delta_grid(deltas, d, 1.0)?;
    let theta = theta_natural(model, alpha, p_grid, cfg)?;
    let weight = theta.weight()?;
    let (p_used, _) = theta.kept();
    let a_exp = p_used[0];
    let m_n = cfg.modulus_resolution(model);
    let coarse = model.with_resolution(m_n)?;
    let sampler = FieldSampler::new(&coarse)?;
    let rows_n = deltas.len();
    let mut sum = vec![0.0f64; rows_n];
    let mut sumsq = vec![0.0f64; rows_n];
    let mut first_err: Option<Error> = None;
    accumulate_paths(
        MODULUS_STREAM_BASE,
        cfg.modulus_paths,
        |stream| {
            let f = sampler.path(stream);
            path_moduli(&f, deltas).map(|om| om.iter().map(|&o| o.powf(a_exp)).collect::<Vec<_>>())
        },
        |per_path: Result<Vec<f64>>| match per_path {
            Ok(vals) => {
                for (i, v) in vals.into_iter().enumerate() {
                    sum[i] += v;
                    sumsq[i] += v * v;
                }
            }
            Err(e) => first_err = first_err.take().or(Some(e)),
        },
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    let paths = cfg.modulus_paths as f64;
    let mut rows = Vec::with_capacity(rows_n);
    for (i, delta) in deltas.iter().enumerate() {
        let mean = sum[i] / paths;
        let var = ((sumsq[i] - paths * mean * mean) / (paths - 1.0)).max(0.0);
        let measured = mean.powf(1.0 / a_exp);
        let se = if mean > 0.0 {
            (var / paths).sqrt() * mean.powf(1.0 / a_exp - 1.0) / a_exp
        } else {
            0.0
        };
        let prod: f64 = delta.iter().product();
        let shape: f64 = delta
            .iter()
            .zip(&alpha.alpha)
            .map(|(&dl, &a)| dl.powf(a))
            .product();
        let bound = shape / weight.fundamental(prod)?.value;
        let slack = if measured > 0.0 {
            bound / measured
        } else {
            f64::INFINITY
        };
        rows.push(ExpectedModulusRow {
            delta: delta.clone(),
            measured,
            std_error: se,
            bound,
            slack,
        });
    }
    Ok(ExpectedModulusReport {
        alpha: alpha.alpha.clone(),
        a_exp,
        p_used,
        rows,
        paths: cfg.modulus_paths,
        modulus_n: m_n,
    })
}

fn check_delta_grid(deltas: &[Vec<f64>], d: usize, cap: f64) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::Empty { what: "gap grid" });
    }
    for row in deltas {
        if row.len() != d {
            return Err(Error::GridMismatch {
                why: format!("gap vector length {} in dimension {d}", row.len()),
            });
        }
        for &dl in row {
            if !(dl.is_finite() && dl > 0.0 && dl <= cap) {
                return Err(Error::bad_param("gap", format!("{dl} outside (0, {cap}]")));
            }
        }
    }
    Ok(())
}

/// Rectangle moduli of one realization at every gap vector.
fn path_moduli(f: &GridFunction, deltas: &[Vec<f64>]) -> Result<Vec<f64>> {
    match f.d() {
        1 => deltas
            .iter()
            .map(|row| modulus_of_continuity(f, row[0]))
            .collect(),
        _ => {
            let table = rectangle_modulus_table(f)?;
            deltas.iter().map(|row| table.at(row)).collect()
        }
    }
}

/// One gap vector of the envelope experiment: statistics of the modulus
/// over the log-corrected gap power normalizer.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeRow {
    pub delta: Vec<f64>,
    pub mean_ratio: f64,
    pub std_error: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Envelope experiment under a power moment kernel: when
/// `E |increment|^order <= k_const * prod gap_k^{1 + beta_k}`, the modulus
/// is bounded by a constant times `prod delta_k^{beta_k/order}
/// |log delta_k|^{1/order}` with an order-`order` integrable random factor.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusEnvelopeReport {
    pub moment_order: f64,
    pub beta: Vec<f64>,
    pub k_const: f64,
    /// Fitted gap exponents of the order-`moment_order` increment moment.
    pub moment_slope: Vec<f64>,
    pub moment_prefactor: f64,
    /// Constant making the path factor exactly order-`moment_order`
    /// normalized: `E (sup_delta ratio / (c K^{1/order}))^order = 1`.
    pub c_fitted: f64,
    /// Largest over smallest per-gap mean ratio; boundedness of the
    /// normalized modulus across the grid.
    pub ratio_spread: f64,
    /// Smallest per-path ratio at the smallest gap vector.
    pub exactness_floor: f64,
    pub rows: Vec<EnvelopeRow>,
    pub paths: usize,
    pub modulus_n: usize,
}

pub fn modulus_envelope_experiment(
    model: &RandomFieldModel,
    moment_order: f64,
    beta: &[f64],
    k_const: f64,
    deltas: &[Vec<f64>],
    cfg: &McConfig,
) -> Result<ModulusEnvelopeReport> {
    cfg.validate()?;
    check_moment_exponent(moment_order)?;
    let d = model.d();
    if beta.len() != d {
        return Err(Error::GridMismatch {
            why: format!("{} kernel exponents in dimension {d}", beta.len()),
        });
    }
    for &b in beta {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::bad_param("kernel exponent", format!("{b}")));
        }
    }
    if !(k_const.is_finite() && k_const > 0.0) {
        return Err(Error::bad_param("kernel constant", format!("{k_const}")));
    }
    // the log-corrected normalizer needs every gap at most 1/e
    check_delta_grid(deltas, d, (-1.0f64).exp())?;

    let ladder = mc_moment_ladder(model, &[moment_order], cfg)?;
    let fit = ladder.power_fit(0)?;
    for (k, (&s, &b)) in fit.slope.iter().zip(beta).enumerate() {
        if (s - (1.0 + b)).abs() > cfg.moment_fit_tol {
            return Err(Error::bad_param(
                "moment kernel",
                format!(
                    "fitted gap exponent {s:.4} on axis {} is not {:.4} within {}",
                    k + 1,
                    1.0 + b,
                    cfg.moment_fit_tol
                ),
            ));
        }
    }
    if fit.prefactor > k_const * (1.0 + cfg.moment_fit_tol) {
        return Err(Error::bad_param(
            "moment kernel",
            format!(
                "fitted prefactor {:.4} exceeds the kernel constant {k_const}",
                fit.prefactor
            ),
        ));
    }

    let normalizer: Vec<f64> = deltas
        .iter()
        .map(|row| {
            row.iter()
                .zip(beta)
                .map(|(&dl, &b)| dl.powf(b / moment_order) * dl.ln().abs().powf(1.0 / moment_order))
                .product()
        })
        .collect();
    let m_n = cfg.modulus_resolution(model);
    let coarse = model.with_resolution(m_n)?;
    let sampler = FieldSampler::new(&coarse)?;
    let rows_n = deltas.len();
    let mut sum = vec![0.0f64; rows_n];
    let mut sumsq = vec![0.0f64; rows_n];
    let mut lo = vec![f64::INFINITY; rows_n];
    let mut hi = vec![0.0f64; rows_n];
    let mut sup_pow = 0.0f64;
    let mut first_err: Option<Error> = None;
    accumulate_paths(
        MODULUS_STREAM_BASE,
        cfg.modulus_paths,
        |stream| {
            let f = sampler.path(stream);
            path_moduli(&f, deltas).map(|om| {
                om.iter()
                    .zip(&normalizer)
                    .map(|(&o, &nz)| o / nz)
                    .collect::<Vec<_>>()
            })
        },
        |per_path: Result<Vec<f64>>| match per_path {
            Ok(ratios) => {
                let mut top = 0.0f64;
                for (i, r) in ratios.into_iter().enumerate() {
                    sum[i] += r;
                    sumsq[i] += r * r;
                    lo[i] = lo[i].min(r);
                    hi[i] = hi[i].max(r);
                    top = top.max(r);
                }
                sup_pow += top.powf(moment_order);
            }
            Err(e) => first_err = first_err.take().or(Some(e)),
        },
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    let paths = cfg.modulus_paths as f64;
    let c_fitted = (sup_pow / paths).powf(1.0 / moment_order) / k_const.powf(1.0 / moment_order);
    let mut rows = Vec::with_capacity(rows_n);
    for (i, delta) in deltas.iter().enumerate() {
        let mean = sum[i] / paths;
        let var = ((sumsq[i] - paths * mean * mean) / (paths - 1.0)).max(0.0);
        rows.push(EnvelopeRow {
            delta: delta.clone(),
            mean_ratio: mean,
            std_error: (var / paths).sqrt(),
            min_ratio: lo[i],
            max_ratio: hi[i],
        });
    }
    let spread_hi = rows.iter().map(|r| r.mean_ratio).fold(0.0f64, f64::max);
    let spread_lo = rows
        .iter()
        .map(|r| r.mean_ratio)
        .fold(f64::INFINITY, f64::min);
    let smallest = (0..rows_n)
        .min_by(|&i, &j| {
            let pi: f64 = deltas[i].iter().product();
            let pj: f64 = deltas[j].iter().product();
            pi.partial_cmp(&pj).unwrap()
        })
        .unwrap();
    Ok(ModulusEnvelopeReport {
        moment_order,
        beta: beta.to_vec(),
        k_const,
        moment_slope: fit.slope,
        moment_prefactor: fit.prefactor,
        c_fitted,
        ratio_spread: spread_hi / spread_lo,
        exactness_floor: lo[smallest],
        rows,
        paths: cfg.modulus_paths,
        modulus_n: m_n,
    })
}

impl ModulusEnvelopeReport {
    pub fn to_csv(&self) -> String {
        let d = self.beta.len();
        let mut out = String::new();
        for k in 1..=d {
            out.push_str(&format!("delta_{k},"));
        }
        out.push_str("mean_ratio,std_error,min_ratio,max_ratio\n");
        for r in &self.rows {
            for dl in &r.delta {
                out.push_str(&format!("{dl},"));
            }
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.mean_ratio, r.std_error, r.min_ratio, r.max_ratio
            ));
        }
        out
    }
}

/// One tested level of the tail report.
#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub z: f64,
    pub exceedance: f64,
    pub std_error: f64,
    /// `None` below the norm threshold, where the bound formula does not
    /// apply.
    pub bound: Option<f64>,
}

/// Exceedance frequencies of the normalized modulus against the tail bound
/// built from truncated fundamental functions of the natural weight.
#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub lambda: Vec<f64>,
    pub rows: Vec<TailRow>,
    pub paths: usize,
    pub modulus_n: usize,
}

/// For each truncation exponent `q` the modulus over the gap power is
/// bounded in the grand scale by `lambda(q) = 1 / phi_q`; reading `lambda`
/// as a weight in `q` turns that family into an exponential tail bound,
/// compared here against empirical exceedance frequencies.
pub fn tail_report(
    model: &RandomFieldModel,
    alpha: &FractionalIndex,
    delta: &[f64],
    z_levels: &[f64],
    p_grid: &[f64],
    cfg: &McConfig,
) -> Result<TailReport> {
    cfg.validate()?;
    check_delta_grid(&[delta.to_vec()], model.d(), 1.0)?;
    if z_levels.is_empty() {
        return Err(Error::Empty {
            what: "tail levels",
        });
    }
    let theta = theta_natural(model, alpha, p_grid, cfg)?;
    let weight = theta.weight()?;
    let (kept, _) = theta.kept();
    if kept.len() < 2 {
        return Err(Error::bad_param(
            "tail report",
            "need at least two surviving exponents to truncate between",
        ));
    }
    let (a_supp, b_supp) = (kept[0], *kept.last().unwrap());
    let prod: f64 = delta.iter().product();
    let q_grid = default_p_grid_sized(a_supp, b_supp, cfg.q_count)?;
    let mut lambda = Vec::with_capacity(q_grid.len());
    for &q in &q_grid {
        lambda.push(1.0 / weight.truncated_fundamental(q, prod)?.value);
    }
    let tail_weight =
        PsiFunction::tabulated_log(q_grid.clone(), lambda.iter().map(|l| l.ln()).collect())?;

    let m_n = cfg.modulus_resolution(model);
    let coarse = model.with_resolution(m_n)?;
    let sampler = FieldSampler::new(&coarse)?;
    let shape: f64 = delta
        .iter()
        .zip(&alpha.alpha)
        .map(|(&dl, &a)| dl.powf(a))
        .product();
    let deltas = vec![delta.to_vec()];
    let mut exceed = vec![0usize; z_levels.len()];
    let mut first_err: Option<Error> = None;
    accumulate_paths(
        MODULUS_STREAM_BASE,
        cfg.modulus_paths,
        |stream| {
            let f = sampler.path(stream);
            path_moduli(&f, &deltas).map(|om| om[0] / shape)
        },
        |per_path: Result<f64>| match per_path {
            Ok(y) => {
                for (slot, &z) in exceed.iter_mut().zip(z_levels) {
                    if y > z {
                        *slot += 1;
                    }
                }
            }
            Err(e) => first_err = first_err.take().or(Some(e)),
        },
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    let paths = cfg.modulus_paths as f64;
    let mut rows = Vec::with_capacity(z_levels.len());
    for (i, &z) in z_levels.iter().enumerate() {
        let freq = exceed[i] as f64 / paths;
        let se = (freq * (1.0 - freq) / paths).sqrt();
        let bound = if z >= 1.0 {
            Some(tail_bound_from_psi(&tail_weight, 1.0, z)?)
        } else {
            None
        };
        rows.push(TailRow {
            z,
            exceedance: freq,
            std_error: se,
            bound,
        });
    }
    Ok(TailReport {
        alpha: alpha.alpha.clone(),
        delta: delta.to_vec(),
        q_grid,
        lambda,
        rows,
        paths: cfg.modulus_paths,
        modulus_n: m_n,
    })
}

impl TailReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,exceedance,std_error,bound\n");
        for r in &self.rows {
            match r.bound {
                Some(b) => out.push_str(&format!("{},{},{},{b}\n", r.z, r.exceedance, r.std_error)),
                None => out.push_str(&format!(
                    "{},{},{},below_norm\n",
                    r.z, r.exceedance, r.std_error
                )),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FractionalIndex;

    fn quick_cfg(paths: usize) -> McConfig {
        McConfig {
            paths,
            modulus_paths: paths,
            ..McConfig::default()
        }
    }

    #[test]
    fn paths_start_at_zero() {
        let bm = RandomFieldModel::brownian_motion(7, 64).unwrap();
        assert_eq!(bm.sample_path(0).unwrap().value1(0), 0.0);
        let fbm = RandomFieldModel::fractional_brownian_motion(0.7, 7, 64).unwrap();
        assert_eq!(fbm.sample_path(0).unwrap().value1(0), 0.0);
        let sheet = RandomFieldModel::brownian_sheet(7, 17).unwrap();
        let f = sheet.sample_path(0).unwrap();
        for i in 0..17 {
            assert_eq!(f.value2(i, 0), 0.0);
            assert_eq!(f.value2(0, i), 0.0);
        }
    }

    #[test]
    fn identical_seeds_replay_identical_paths() {
        let m = RandomFieldModel::fractional_brownian_motion(0.3, 11, 257).unwrap();
        let a = m.sample_path(5).unwrap();
        let b = m.sample_path(5).unwrap();
        assert_eq!(a.values(), b.values());
        let c = m.sample_path(6).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn motion_variance_at_the_endpoint() {
        let m = RandomFieldModel::brownian_motion(2, 16).unwrap();
        let s = FieldSampler::new(&m).unwrap();
        let paths = 10_000;
        let mut sum = 0.0;
        for i in 0..paths {
            let w = s.path(i).value1(15);
            sum += w * w;
        }
        let var = sum / paths as f64;
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn motion_disjoint_increments_are_uncorrelated() {
        let m = RandomFieldModel::brownian_motion(3, 65).unwrap();
        let s = FieldSampler::new(&m).unwrap();
        let paths = 4_000;
        let mut cross = 0.0;
        for i in 0..paths {
            let f = s.path(i);
            let a = f.value1(16) - f.value1(0);
            let b = f.value1(64) - f.value1(32);
            cross += a * b;
        }
        // both increments have variance 1/4, so the normalized correlation
        // carries a 1/sqrt(paths) standard error
        let corr = cross / paths as f64 / 0.25;
        assert!(corr.abs() < 3.0 / (paths as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn motion_is_self_similar_in_the_first_two_moments() {
        let m = RandomFieldModel::brownian_motion(4, 65).unwrap();
        let s = FieldSampler::new(&m).unwrap();
        let paths = 4_000usize;
        for c in [4usize, 16] {
            let mut m1 = [0.0f64; 2];
            let mut m2 = [0.0f64; 2];
            for i in 0..paths {
                let f = s.path(i as u64);
                let full = f.value1(64);
                let scaled = f.value1(64 / c) * (c as f64).sqrt();
                m1[0] += full;
                m1[1] += scaled;
                m2[0] += full * full;
                m2[1] += scaled * scaled;
            }
            let pf = paths as f64;
            let se1 = (1.0 / pf).sqrt();
            let se2 = (2.0 / pf).sqrt();
            assert!((m1[0] - m1[1]).abs() / pf <= 3.0 * 2.0 * se1);
            assert!((m2[0] - m2[1]).abs() / pf <= 3.0 * 2.0 * se2);
        }
    }

    #[test]
    fn rectangle_moment_of_motion_matches_the_gap() {
        let m = RandomFieldModel::brownian_motion(9, 129).unwrap();
        let est = mc_rectangle_moment(&m, 2.0, &[0.25], &[0.75], 4_000).unwrap();
        assert!(
            (est.value - 0.5).abs() <= 3.0 * est.std_error,
            "moment {} se {}",
            est.value,
            est.std_error
        );
        assert!(est.std_error.is_finite());
        assert_eq!(est.paths, 4_000);
    }

    #[test]
    fn fractional_increment_exponent_tracks_the_roughness() {
        for hurst in [0.3, 0.7] {
            let m = RandomFieldModel::fractional_brownian_motion(hurst, 13, 1025).unwrap();
            let ladder = mc_moment_ladder(&m, &[2.0], &quick_cfg(2_000)).unwrap();
            let fit = ladder.power_fit(0).unwrap();
            assert!(
                (fit.slope[0] - 2.0 * hurst).abs() < 0.05,
                "H {hurst}: slope {}",
                fit.slope[0]
            );
            // unit-lag increment variance is the spacing to the 2H
            let lag1 = ladder.moment[0][0];
            let want = ladder.spacing.powf(2.0 * hurst);
            assert!((lag1 / want - 1.0).abs() < 0.1, "lag-1 {lag1} vs {want}");
        }
    }

    #[test]
    fn sheet_variance_and_disjoint_boxes() {
        let m = RandomFieldModel::brownian_sheet(21, 33).unwrap();
        let s = FieldSampler::new(&m).unwrap();
        let paths = 4_000;
        let mut var = 0.0;
        let mut cross = 0.0;
        for i in 0..paths {
            let f = s.path(i);
            let w = f.value2(32, 32);
            var += w * w;
            let a = f.value2(16, 16);
            let b = f.value2(32, 32) - f.value2(16, 32) - f.value2(32, 16) + f.value2(16, 16);
            cross += a * b;
        }
        let pf = paths as f64;
        assert!((var / pf - 1.0).abs() < 3.0 * (2.0 / pf).sqrt() + 0.02);
        // box variances are 1/4 each; normalize before the SE test
        let corr = cross / pf / 0.25;
        assert!(corr.abs() < 3.0 / pf.sqrt(), "corr {corr}");
    }

    #[test]
    fn motion_fourth_moment_prefactor() {
        let m = RandomFieldModel::brownian_motion(17, 2049).unwrap();
        let ladder = mc_moment_ladder(&m, &[4.0], &quick_cfg(2_000)).unwrap();
        let fit = ladder.power_fit(0).unwrap();
        assert!((fit.slope[0] - 2.0).abs() < 0.1, "slope {}", fit.slope[0]);
        assert!(
            (fit.prefactor - 3.0).abs() < 0.3,
            "prefactor {}",
            fit.prefactor
        );
    }

    #[test]
    fn natural_weight_of_motion_matches_the_closed_form() {
        let m = RandomFieldModel::brownian_motion(5, 1025).unwrap();
        let ix = FractionalIndex::new(vec![0.4]).unwrap();
        let th = theta_natural(&m, &ix, &[3.0, 4.0, 6.0, 8.0], &quick_cfg(4_000)).unwrap();
        let (ps, ts) = th.kept();
        assert_eq!(ps.len(), 4);
        // fourth moment is three gaps squared; the expected lattice sum of
        // the integrand at this resolution is 9.9961, between-path noise
        // around one percent
        let at4 = ts[ps.iter().position(|&p| p == 4.0).unwrap()];
        assert!((at4 / 87.173 - 1.0).abs() < 0.03, "theta(4) = {at4}");
        th.weight().unwrap();
    }

    #[test]
    fn natural_weight_flags_orders_beyond_the_roughness() {
        let m = RandomFieldModel::brownian_motion(5, 513).unwrap();
        let ix = FractionalIndex::new(vec![0.6]).unwrap();
        let th = theta_natural(&m, &ix, &[3.0, 4.0, 8.0], &quick_cfg(400)).unwrap();
        assert!(th.rows.iter().all(|r| r.theta.is_none()));
        assert!(th.weight().is_err());
        // the fitted slope sits near p/2, well under 0.6 p
        for r in &th.rows {
            assert!((r.slope[0] - r.p / 2.0).abs() < 0.1 * r.p);
        }
    }

    #[test]
    fn planar_natural_weight_matches_the_product_form() {
        let m = RandomFieldModel::brownian_sheet(31, 65).unwrap();
        let ix = FractionalIndex::new(vec![0.3, 0.3]).unwrap();
        let th = theta_natural(&m, &ix, &[4.0, 6.0], &quick_cfg(1_500)).unwrap();
        let (ps, ts) = th.kept();
        assert_eq!(ps.len(), 2);
        // lattice product oracle at n = 65: inner integral 5.670, weight 23900
        assert!((ts[0] / 23900.0 - 1.0).abs() < 0.08, "theta(4) = {}", ts[0]);
    }

    #[test]
    fn expected_modulus_is_certified_for_motion() {
        let m = RandomFieldModel::brownian_motion(6, 1025).unwrap();
        let ix = FractionalIndex::new(vec![0.4]).unwrap();
        let deltas: Vec<Vec<f64>> = (2..=5).map(|k| vec![2f64.powi(-k)]).collect();
        let report = certify_expected_modulus(
            &m,
            &ix,
            &deltas,
            &[3.0, 4.0, 6.0, 8.0, 12.0],
            &quick_cfg(400),
        )
        .unwrap();
        assert!(report.all_bounded(), "{:?}", report.rows);
        assert!(report.rows.iter().all(|r| r.measured > 0.0));
        assert_eq!(report.a_exp, 3.0);
        let csv = report.to_csv();
        assert!(csv.starts_with("delta_1,measured"));
        assert_eq!(csv.lines().count(), 1 + deltas.len());
    }

    #[test]
    fn expected_modulus_is_certified_for_the_sheet() {
        let m = RandomFieldModel::brownian_sheet(41, 65).unwrap();
        let ix = FractionalIndex::new(vec![0.3, 0.3]).unwrap();
        let deltas = vec![vec![0.25, 0.25], vec![0.125, 0.25], vec![0.0625, 0.0625]];
        let cfg = McConfig {
            paths: 800,
            modulus_paths: 150,
            ..McConfig::default()
        };
        let report = certify_expected_modulus(&m, &ix, &deltas, &[4.0, 6.0, 8.0], &cfg).unwrap();
        assert_eq!(report.modulus_n, 33);
        assert!(report.all_bounded(), "{:?}", report.rows);
    }

    #[test]
    fn envelope_experiment_bounds_the_normalized_modulus() {
        let m = RandomFieldModel::brownian_motion(8, 8193).unwrap();
        let deltas: Vec<Vec<f64>> = (2..=12).step_by(2).map(|k| vec![2f64.powi(-k)]).collect();
        let report =
            modulus_envelope_experiment(&m, 4.0, &[1.0], 3.2, &deltas, &quick_cfg(300)).unwrap();
        assert!((report.moment_slope[0] - 2.0).abs() < 0.15);
        assert!((report.moment_prefactor - 3.0).abs() < 0.4);
        assert!(report.c_fitted.is_finite() && report.c_fitted > 0.0);
        assert!(report.ratio_spread < 10.0, "spread {}", report.ratio_spread);
        assert!(report.exactness_floor > 0.0);
    }

    #[test]
    fn envelope_experiment_rejects_a_wrong_kernel() {
        let m = RandomFieldModel::brownian_motion(8, 1025).unwrap();
        let err = modulus_envelope_experiment(&m, 4.0, &[2.0], 3.2, &[vec![0.25]], &quick_cfg(200));
        match err {
            Err(Error::BadParameter { what, why }) => {
                assert_eq!(what, "moment kernel");
                assert!(why.contains("exponent"), "{why}");
            }
            other => panic!("expected a kernel rejection, got {other:?}"),
        }
    }

    #[test]
    fn envelope_experiment_rejects_wide_gaps() {
        let m = RandomFieldModel::brownian_motion(8, 257).unwrap();
        let err = modulus_envelope_experiment(&m, 4.0, &[1.0], 3.2, &[vec![0.5]], &quick_cfg(200));
        assert!(err.is_err());
    }

    #[test]
    fn tail_bound_dominates_the_exceedance() {
        let m = RandomFieldModel::brownian_motion(19, 1025).unwrap();
        let ix = FractionalIndex::new(vec![0.4]).unwrap();
        let report = tail_report(
            &m,
            &ix,
            &[0.03125],
            &[0.5, 1.0, 1.5, 2.0, 3.0],
            &[3.0, 4.0, 6.0, 8.0, 12.0, 16.0],
            &quick_cfg(1_000),
        )
        .unwrap();
        assert!(report.rows[0].bound.is_none());
        for r in &report.rows[1..] {
            let b = r.bound.unwrap();
            assert!(
                r.exceedance <= b + 3.0 * r.std_error,
                "z {}: exceedance {} vs bound {b}",
                r.z,
                r.exceedance
            );
        }
        // truncating higher can only tighten the grand bound, never relax it
        for w in report.lambda.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn ladder_reports_are_reproducible() {
        let m = RandomFieldModel::brownian_motion(23, 257).unwrap();
        let a = mc_moment_ladder(&m, &[2.0, 4.0], &quick_cfg(300)).unwrap();
        let b = mc_moment_ladder(&m, &[2.0, 4.0], &quick_cfg(300)).unwrap();
        assert_eq!(a.moment, b.moment);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn model_validation() {
        assert!(RandomFieldModel::fractional_brownian_motion(1.0, 0, 64).is_err());
        assert!(RandomFieldModel::fractional_brownian_motion(0.0, 0, 64).is_err());
        assert!(RandomFieldModel::brownian_motion(0, 1).is_err());
        assert!(RandomFieldModel::brownian_sheet(0, 4096).is_err());
        assert!(mc_rectangle_moment(
            &RandomFieldModel::brownian_motion(0, 64).unwrap(),
            2.0,
            &[0.0],
            &[1.0],
            10
        )
        .is_err());
        assert!(McConfig {
            paths: 10,
            ..McConfig::default()
        }
        .validate()
        .is_err());
    }
}
