//! Monte Carlo simulation of the time-changed pair `(X^φ, D^φ)`.
//!
//! The background CIR path is sampled exactly (noncentral chi-square steps
//! of size `h`) and generated lazily, as far as the largest simulated
//! subordinator value requires. The default time `ζ` is the first time the
//! trapezoid hazard integral `∫ X du` crosses an independent unit
//! exponential threshold, located by linear interpolation inside the
//! crossing step. Every path (or antithetic pair) draws from its own ChaCha8
//! stream selected by `(seed, index)`, and results are reduced in path
//! order, so output does not depend on the number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;

use crate::cir::CirParams;
use crate::error::{Result, SubCirError};
use crate::subcir::SubCirModel;
use crate::subordinators::LevyFamily;

/// Longest background horizon ever simulated, in years.
pub const BACKGROUND_CAP: f64 = 1e4;

/// Default fine-grid step of the background path.
pub const DEFAULT_STEP: f64 = 1.0 / 500.0;

/// Largest business-grid step allowed in [`compensator_check`].
pub const COMPENSATOR_MAX_STEP: f64 = 1.0 / 50.0;

/// One exact draw of `X_{t+dt}` given `X_t = x0`: a scaled noncentral
/// chi-square, sampled as a Poisson mixture of central ones.
pub fn sample_cir_exact<R: Rng + ?Sized>(p: &CirParams, x0: f64, dt: f64, rng: &mut R) -> f64 {
    let (k, s2) = (p.kappa(), p.sigma() * p.sigma());
    let om = -(-k * dt).exp_m1();
    let scale = s2 * om / (4.0 * k);
    let half_dof = 2.0 * k * p.theta() / s2;
    let noncentrality = x0 * 4.0 * k * (-k * dt).exp() / (s2 * om);
    let mixing = if noncentrality > 0.0 {
        Poisson::new(0.5 * noncentrality).expect("finite positive mean").sample(rng)
    } else {
        0.0
    };
    // χ²_{δ+2N} is Gamma(δ/2 + N, scale 2)
    let chi2 = Gamma::new(half_dof + mixing, 2.0).expect("positive shape").sample(rng);
    scale * chi2
}

/// Background CIR path on the grid `k·h`, with its trapezoid hazard integral.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    h: f64,
    x: Vec<f64>,
    hazard: Vec<f64>,
}

impl Background {
    pub fn new(x0: f64, h: f64) -> Self {
        Self {
            h,
            x: vec![x0],
            hazard: vec![0.0],
        }
    }

    /// Appends the next grid value.
    pub fn push(&mut self, x: f64) {
        let last = *self.x.last().expect("nonempty path");
        let acc = *self.hazard.last().expect("nonempty path");
        self.hazard.push(acc + 0.5 * self.h * (last + x));
        self.x.push(x);
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Last simulated time.
    pub fn horizon(&self) -> f64 {
        (self.x.len() - 1) as f64 * self.h
    }

    pub fn trajectory(&self) -> &[f64] {
        &self.x
    }

    pub fn hazard_path(&self) -> &[f64] {
        &self.hazard
    }

    /// Simulates exact steps until the path covers `t`.
    pub fn extend_to<R: Rng + ?Sized>(&mut self, p: &CirParams, t: f64, rng: &mut R) -> Result<()> {
        if t > BACKGROUND_CAP {
            return Err(SubCirError::CapExceeded { cap: BACKGROUND_CAP });
        }
        while self.horizon() < t {
            let last = *self.x.last().expect("nonempty path");
            let next = sample_cir_exact(p, last, self.h, rng);
            self.push(next);
        }
        Ok(())
    }

    /// Grid index and remainder of `t`, snapping values within rounding of a node.
    fn locate(&self, t: f64) -> (usize, f64) {
        let pos = t / self.h;
        let nearest = pos.round();
        if (pos - nearest).abs() <= 1e-9 {
            return (nearest as usize, 0.0);
        }
        let k = pos.floor() as usize;
        (k, t - k as f64 * self.h)
    }

    /// `X_t`: the grid value, or one extra exact step from the node below
    /// for off-grid `t`. Requires `t ≤ horizon()`.
    pub fn state_at<R: Rng + ?Sized>(&self, p: &CirParams, t: f64, rng: &mut R) -> f64 {
        let (k, rem) = self.locate(t);
        let k = k.min(self.x.len() - 1);
        if rem <= 0.0 {
            self.x[k]
        } else {
            sample_cir_exact(p, self.x[k], rem, rng)
        }
    }

    /// Hazard integral at `t`, interpolated linearly between nodes.
    pub fn hazard_at(&self, t: f64) -> f64 {
        let (k, rem) = self.locate(t);
        if k + 1 >= self.hazard.len() {
            return *self.hazard.last().expect("nonempty path");
        }
        self.hazard[k] + (self.hazard[k + 1] - self.hazard[k]) * rem / self.h
    }

    /// First time the hazard integral reaches `threshold`, if within the path.
    pub fn crossing_time(&self, threshold: f64) -> Option<f64> {
        let k = self.hazard.partition_point(|&v| v < threshold);
        if k == 0 {
            return Some(0.0);
        }
        if k >= self.hazard.len() {
            return None;
        }
        let (lo, hi) = (self.hazard[k - 1], self.hazard[k]);
        Some((k - 1) as f64 * self.h + self.h * (threshold - lo) / (hi - lo))
    }
}

/// Background path from `x0` with a fresh unit exponential threshold `ℰ`,
/// simulated to `horizon` and then extended until `ζ` is found (or the cap
/// is reached). Returns the path, `ℰ` and `ζ`.
pub fn simulate_background<R: Rng + ?Sized>(
    p: &CirParams,
    x0: f64,
    horizon: f64,
    h: f64,
    rng: &mut R,
) -> Result<(Background, f64, f64)> {
    let threshold = unit_exponential(rng);
    let mut bg = Background::new(x0, h);
    bg.extend_to(p, horizon, rng)?;
    loop {
        if let Some(zeta) = bg.crossing_time(threshold) {
            return Ok((bg, threshold, zeta));
        }
        let next = (bg.horizon() * 2.0).max(1.0).min(BACKGROUND_CAP);
        if bg.horizon() >= BACKGROUND_CAP {
            return Err(SubCirError::CapExceeded { cap: BACKGROUND_CAP });
        }
        bg.extend_to(p, next, rng)?;
    }
}

fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub business_times: Vec<f64>,
    pub h: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Pairs of paths share background and subordinator and use thresholds
    /// `−ln U` and `−ln(1 − U)`.
    pub antithetic: bool,
    /// Keep each path's fine-grid trajectory and hazard integral.
    pub keep_background: bool,
}

impl PathConfig {
    pub fn new(business_times: Vec<f64>, n_paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            business_times,
            h: DEFAULT_STEP,
            n_paths,
            seed,
            antithetic: false,
            keep_background: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Uniform business grid `0, dt, …, horizon` with at most `max_step` spacing.
    pub fn uniform_grid(horizon: f64, max_step: f64) -> Vec<f64> {
        let steps = (horizon / max_step).ceil().max(1.0) as usize;
        (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SubCirError::InvalidParameter {
                name: "h",
                msg: format!("must be positive, got {}", self.h),
            });
        }
        if self.n_paths == 0 {
            return Err(SubCirError::InvalidParameter {
                name: "n_paths",
                msg: "must be positive".into(),
            });
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(SubCirError::InvalidParameter {
                name: "n_paths",
                msg: "must be even with antithetic pairs".into(),
            });
        }
        let grid = &self.business_times;
        if grid.is_empty() || !(grid[0] >= 0.0) || grid.iter().any(|t| !t.is_finite()) {
            return Err(SubCirError::InvalidParameter {
                name: "business_times",
                msg: "must be a nonempty grid of finite nonnegative times".into(),
            });
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SubCirError::InvalidParameter {
                name: "business_times",
                msg: "must be strictly increasing".into(),
            });
        }
        Ok(())
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        self.business_times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| SubCirError::Domain {
                op: "business_times",
                msg: format!("time {t} is not on the business grid"),
            })
    }

    fn units(&self) -> usize {
        if self.antithetic {
            self.n_paths / 2
        } else {
            self.n_paths
        }
    }

    fn stream(&self, unit: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(unit as u64);
        rng
    }
}

/// One simulated path observed on the business grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_id: usize,
    /// Unit exponential default threshold `ℰ`.
    pub threshold: f64,
    /// Background default time `ζ`; `+∞` when beyond the simulated horizon.
    pub zeta: f64,
    /// `𝒯_t` at each business time.
    pub sub_times: Vec<f64>,
    pub x_phi: Vec<f64>,
    pub d_phi: Vec<bool>,
    /// `∫₀^{𝒯_t} X_u du` at each business time.
    pub hazard: Vec<f64>,
    /// Fine-grid trajectory and hazard integral when requested.
    pub background: Option<Background>,
}

#[derive(Debug, Clone)]
pub struct PathSet {
    pub business_times: Vec<f64>,
    pub h: f64,
    pub paths: Vec<PathRecord>,
}

impl PathSet {
    /// One row per (path, business time): `path_id, t, T_t, X_phi, D_phi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_rows(out, None)
    }

    /// As [`write_csv`](Self::write_csv) with a trailing `k_phi_of_X` column.
    pub fn write_csv_with_intensity<W: Write>(&self, out: W, table: &KillingRateTable) -> Result<()> {
        self.write_rows(out, Some(table))
    }

    fn write_rows<W: Write>(&self, out: W, table: Option<&KillingRateTable>) -> Result<()> {
        let io = |e: csv::Error| SubCirError::Domain {
            op: "write_csv",
            msg: e.to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["path_id", "t", "T_t", "X_phi", "D_phi"];
        if table.is_some() {
            header.push("k_phi_of_X");
        }
        w.write_record(&header).map_err(io)?;
        for p in &self.paths {
            for (i, &t) in self.business_times.iter().enumerate() {
                let mut row = vec![
                    p.path_id.to_string(),
                    t.to_string(),
                    p.sub_times[i].to_string(),
                    p.x_phi[i].to_string(),
                    u8::from(p.d_phi[i]).to_string(),
                ];
                if let Some(tab) = table {
                    row.push(tab.eval(p.x_phi[i]).to_string());
                }
                w.write_record(&row).map_err(io)?;
            }
        }
        w.flush().map_err(|e| SubCirError::Domain {
            op: "write_csv",
            msg: e.to_string(),
        })
    }
}

/// Simulates one unit: a single path, or an antithetic pair.
fn simulate_unit(m: &SubCirModel, x0: f64, cfg: &PathConfig, unit: usize) -> Result<Vec<PathRecord>> {
    let mut rng = cfg.stream(unit);
    let p = m.cir();
    let sub = m.subordinator();
    let u: f64 = rng.random();
    let thresholds: Vec<f64> = if cfg.antithetic {
        vec![-(1.0 - u).ln(), -u.ln()]
    } else {
        vec![-(1.0 - u).ln()]
    };

    let n = cfg.business_times.len();
    let mut sub_times = Vec::with_capacity(n);
    let mut clock = 0.0;
    let mut prev_t = 0.0;
    for &t in &cfg.business_times {
        if sub.family() == LevyFamily::None {
            clock = sub.gamma_drift() * t;
        } else if t > prev_t {
            clock += sub.sample_increment(t - prev_t, &mut rng)?;
        }
        sub_times.push(clock);
        prev_t = t;
    }

    let mut bg = Background::new(x0, cfg.h);
    let mut x_phi = Vec::with_capacity(n);
    for &s in &sub_times {
        bg.extend_to(p, s, &mut rng)?;
        x_phi.push(bg.state_at(p, s, &mut rng));
    }
    let hazard: Vec<f64> = sub_times.iter().map(|&s| bg.hazard_at(s)).collect();

    let first = unit * thresholds.len();
    let records = thresholds
        .iter()
        .enumerate()
        .map(|(j, &threshold)| {
            let zeta = bg.crossing_time(threshold).unwrap_or(f64::INFINITY);
            PathRecord {
                path_id: first + j,
                threshold,
                zeta,
                sub_times: sub_times.clone(),
                x_phi: x_phi.clone(),
                d_phi: sub_times.iter().map(|&s| zeta <= s).collect(),
                hazard: hazard.clone(),
                background: cfg.keep_background.then(|| bg.clone()),
            }
        })
        .collect();
    Ok(records)
}

/// Per-unit statistic, evaluated in parallel and returned in unit order.
fn map_units<T, F>(m: &SubCirModel, x0: f64, cfg: &PathConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[PathRecord]) -> T + Sync,
{
    cfg.validate()?;
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(SubCirError::Domain {
            op: "simulate",
            msg: format!("initial state must be nonnegative, got {x0}"),
        });
    }
    (0..cfg.units())
        .into_par_iter()
        .map(|u| simulate_unit(m, x0, cfg, u).map(|recs| f(&recs)))
        .collect()
}

/// Simulates `cfg.n_paths` paths of `(X^φ, D^φ)` started at `(x0, 0)`.
pub fn simulate_subcir(m: &SubCirModel, x0: f64, cfg: &PathConfig) -> Result<PathSet> {
    let units = map_units(m, x0, cfg, |recs| recs.to_vec())?;
    Ok(PathSet {
        business_times: cfg.business_times.clone(),
        h: cfg.h,
        paths: units.into_iter().flatten().collect(),
    })
}

/// Sum in a fixed pairwise order.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Mean and standard error of i.i.d. samples.
fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean of a unit's per-path values (pair average for antithetic units).
fn unit_mean(recs: &[PathRecord], f: impl Fn(&PathRecord) -> f64) -> f64 {
    recs.iter().map(f).sum::<f64>() / recs.len() as f64
}

/// Monte Carlo survival probability `P(D^φ_T = 0)` from `(x, 0)`, with its
/// standard error (over antithetic pair means when enabled).
pub fn estimate_survival(m: &SubCirModel, horizon: f64, x: f64, cfg: &PathConfig) -> Result<(f64, f64)> {
    if horizon == 0.0 {
        return Ok((1.0, 0.0));
    }
    Ok(estimate_survival_curve(m, &[horizon], x, cfg)?[0])
}

/// [`estimate_survival`] at several business times from one set of paths.
pub fn estimate_survival_curve(m: &SubCirModel, horizons: &[f64], x: f64, cfg: &PathConfig) -> Result<Vec<(f64, f64)>> {
    let idx = horizons.iter().map(|&t| cfg.index_of(t)).collect::<Result<Vec<_>>>()?;
    let samples = map_units(m, x, cfg, |recs| {
        idx.iter()
            .map(|&i| unit_mean(recs, |r| if r.d_phi[i] { 0.0 } else { 1.0 }))
            .collect::<Vec<f64>>()
    })?;
    Ok((0..idx.len())
        .map(|j| mean_and_se(&samples.iter().map(|s| s[j]).collect::<Vec<_>>()))
        .collect())
}

/// `k^φ` on a uniform grid over `[0, x_max]`, interpolated linearly and
/// extrapolated with the last slope.
#[derive(Debug, Clone)]
pub struct KillingRateTable {
    dx: f64,
    values: Vec<f64>,
}

impl KillingRateTable {
    pub fn new(m: &SubCirModel, x_max: f64, points: usize) -> Result<Self> {
        if !(x_max > 0.0) || points < 2 {
            return Err(SubCirError::InvalidParameter {
                name: "killing_rate_table",
                msg: "needs a positive range and at least two points".into(),
            });
        }
        let dx = x_max / (points - 1) as f64;
        let values = (0..points)
            .into_par_iter()
            .map(|i| m.killing_rate(i as f64 * dx))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { dx, values })
    }

    /// Default table for the compensator check: `[0, 1]` with 401 points.
    pub fn standard(m: &SubCirModel) -> Result<Self> {
        Self::new(m, 1.0, 401)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let pos = (x / self.dx).max(0.0);
        let k = (pos.floor() as usize).min(last - 1);
        let w = pos - k as f64;
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorReport {
    /// `E[D^φ_T]`.
    pub lhs: f64,
    /// `E[∫₀^T (1 − D^φ_s) k^φ(X^φ_s) ds]`.
    pub rhs: f64,
    pub diff: f64,
    pub se_lhs: f64,
    pub se_rhs: f64,
    /// Standard error of the path-wise difference, which accounts for both
    /// sides being estimated on the same paths.
    pub pooled_se: f64,
}

/// Doob–Meyer check: the default indicator against its compensator, both
/// estimated on the same paths. The time integral is the trapezoid rule on
/// the business grid, which must reach `horizon` in steps of at most 1/50.
pub fn compensator_check(m: &SubCirModel, horizon: f64, x: f64, cfg: &PathConfig, table: &KillingRateTable) -> Result<CompensatorReport> {
    let last = cfg.index_of(horizon)?;
    let grid = &cfg.business_times[..=last];
    if grid[0] != 0.0 {
        return Err(SubCirError::InvalidParameter {
            name: "business_times",
            msg: "compensator check needs a grid starting at 0".into(),
        });
    }
    if grid.windows(2).any(|w| w[1] - w[0] > COMPENSATOR_MAX_STEP * (1.0 + 1e-12)) {
        return Err(SubCirError::InvalidParameter {
            name: "business_times",
            msg: format!("steps up to the horizon must not exceed {COMPENSATOR_MAX_STEP}"),
        });
    }
    let samples = map_units(m, x, cfg, |recs| {
        let mut out = [0.0; 3];
        for r in recs {
            let d = if r.d_phi[last] { 1.0 } else { 0.0 };
            let integrand = |i: usize| if r.d_phi[i] { 0.0 } else { table.eval(r.x_phi[i]) };
            let comp: f64 = (1..=last)
                .map(|i| 0.5 * (grid[i] - grid[i - 1]) * (integrand(i - 1) + integrand(i)))
                .sum();
            out[0] += d;
            out[1] += comp;
            out[2] += d - comp;
        }
        out.map(|v| v / recs.len() as f64)
    })?;
    let column = |j: usize| -> Vec<f64> { samples.iter().map(|s| s[j]).collect() };
    let (lhs, se_lhs) = mean_and_se(&column(0));
    let (rhs, se_rhs) = mean_and_se(&column(1));
    let (diff, pooled_se) = mean_and_se(&column(2));
    Ok(CompensatorReport {
        lhs,
        rhs,
        diff,
        se_lhs,
        se_rhs,
        pooled_se,
    })
}
