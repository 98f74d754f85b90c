//! Numerical integration: globally adaptive Gauss–Kronrod (7/15) on finite
//! intervals and Gauss quadrature for gamma-distribution weights.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Result, SubCirError};
use crate::specfun::{ln_abs_laguerre, log_gamma_unchecked};

/// Tolerances and evaluation budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            max_evals: 1_000_000,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], cfg)
}

/// Adaptive integral over consecutive segments `points[0]..points[1]..…`.
///
/// Break points let callers place known features (peaks, kinks) on segment
/// boundaries. The segment with the largest error estimate is bisected until
/// the total error meets the tolerance or the budget runs out.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], cfg: &QuadConfig) -> Result<QuadResult> {
    assert!(points.len() >= 2, "need at least one segment");
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        total_err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if !total.is_finite() {
            return Err(SubCirError::QuadratureNonConvergence {
                estimate: total,
                error: total_err,
                evaluations: evals,
            });
        }
        if total_err <= target {
            return Ok(QuadResult {
                value: total,
                error: total_err,
                evals,
            });
        }
        if evals + 30 > cfg.max_evals {
            return Err(SubCirError::QuadratureNonConvergence {
                estimate: total,
                error: total_err,
                evaluations: evals,
            });
        }
        let Some(seg) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b || (seg.b - seg.a).abs() < 1e-15 * mid.abs().max(1e-300) {
            // cannot subdivide further; accept the remaining error as roundoff
            total_err -= seg.error;
            continue;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        evals += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    Ok(QuadResult {
        value: total,
        error: total_err.max(0.0),
        evals,
    })
}

/// Integral of `f` over `[a, ∞)` for integrands dominated by `e^{-rate·x}`.
///
/// Uses `x = a - ln(1 - u) / rate`, which maps the exponential tail onto the
/// bounded interval `u ∈ (0, 1)`; the integrand passed in is `f(x)` and the
/// substitution multiplies by `dx/du = 1 / (rate (1 - u))`.
pub fn integrate_exp_tail<F: FnMut(f64) -> f64>(mut f: F, a: f64, rate: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let x = a - one_minus.ln() / rate;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v / (rate * one_minus)
        }
    };
    integrate(g, 0.0, 1.0, cfg)
}

/// Gauss quadrature rule for the gamma density `rate^shape x^{shape-1} e^{-rate x} / Γ(shape)`.
///
/// Weights are normalized to sum to one and are stored in log form: nodes far
/// in the tail carry weights below the double range, while the polynomials
/// evaluated there are correspondingly large.
#[derive(Debug, Clone)]
pub struct GammaGauss {
    pub shape: f64,
    pub rate: f64,
    pub nodes: Vec<f64>,
    pub ln_weights: Vec<f64>,
}

impl GammaGauss {
    pub fn new(shape: f64, rate: f64, n: usize) -> Result<Self> {
        if !(shape > 0.0) || !(rate > 0.0) || n == 0 {
            return Err(SubCirError::QuadratureDegenerate(format!(
                "shape {shape}, rate {rate}, nodes {n}"
            )));
        }
        let alpha = shape - 1.0;
        let t = laguerre_nodes(alpha, n)?;
        // w_i = Γ(n+α+1) t_i / (n! (n+1)^2 L_{n+1}^α(t_i)^2), normalized by Γ(α+1)
        let ln_const = log_gamma_unchecked(n as f64 + alpha + 1.0)
            - log_gamma_unchecked(n as f64 + 1.0)
            - 2.0 * ((n + 1) as f64).ln()
            - log_gamma_unchecked(alpha + 1.0);
        let mut ln_weights = Vec::with_capacity(n);
        for &ti in &t {
            let (_, ln_l) = ln_abs_laguerre(n + 1, alpha, ti);
            ln_weights.push(ln_const + ti.ln() - 2.0 * ln_l);
        }
        let max_w = ln_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = ln_weights.iter().map(|w| (w - max_w).exp()).sum();
        if !(total.is_finite() && (max_w + total.ln()).abs() < 1e-8) {
            return Err(SubCirError::QuadratureDegenerate(format!(
                "weights sum to exp({}) instead of 1",
                max_w + total.ln()
            )));
        }
        Ok(Self {
            shape,
            rate,
            nodes: t.into_iter().map(|ti| ti / rate).collect(),
            ln_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(X)]` for `X ~ Gamma(shape, rate)`.
    pub fn expectation<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&x, &lw)| if lw < -745.0 { 0.0 } else { lw.exp() * f(x) })
            .sum()
    }
}

/// Roots of `L_n^α` from the Jacobi matrix, polished by Newton's method.
fn laguerre_nodes(alpha: f64, n: usize) -> Result<Vec<f64>> {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = 2.0 * k as f64 + alpha + 1.0;
        if k + 1 < n {
            let off = (((k + 1) as f64) * ((k + 1) as f64 + alpha)).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let eig = jac.symmetric_eigenvalues();
    let mut nodes: Vec<f64> = eig.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    for x in nodes.iter_mut() {
        for _ in 0..6 {
            // x L_n' = n L_n - (n + α) L_{n-1}
            let (s_n, ln_n) = ln_abs_laguerre(n, alpha, *x);
            let (s_m, ln_m) = ln_abs_laguerre(n - 1, alpha, *x);
            let ratio_den = n as f64 - (n as f64 + alpha) * s_m * s_n * (ln_m - ln_n).exp();
            if s_n == 0.0 || ratio_den == 0.0 || !ratio_den.is_finite() {
                break;
            }
            let step = *x / ratio_den;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
        if !(x.is_finite() && *x > 0.0) {
            return Err(SubCirError::QuadratureDegenerate(format!("node {x} for alpha {alpha}")));
        }
    }
    Ok(nodes)
}
