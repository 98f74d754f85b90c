//! Lévy subordinators with drift `γ` and tempered-stable Lévy measure
//! `ν(du) = C u^{−α−1} e^{−ηu} du`.
//!
//! Exact increment samplers exist for the inverse Gaussian (`α = 1/2`),
//! gamma (`α = 0`) and compound Poisson with exponential jumps (`α = −1`)
//! members. Inverse Gaussian increments over `dt` have mean `C√(π/η)·dt`
//! and shape `2πC²dt²`; see `docs/subordinators.md` for the Laplace-transform
//! matching.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::cir::SpectralData;
use crate::error::{Result, SubCirError};
use crate::quad::{integrate_breaks, integrate_exp_tail, QuadConfig};
use crate::specfun::log_gamma_unchecked;

/// Split point of `∫ g dν` into a singular head and an exponential tail.
pub const LEVY_SPLIT: f64 = 1.0;

/// Default evaluation budget of [`SubordinatorSpec::levy_integrate`].
pub const LEVY_BUDGET: usize = 1_000_000;

/// Number of eigenvalues summed by [`SubordinatorSpec::trace_class_check`].
pub const TRACE_CHECK_TERMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyFamily {
    /// No jumps; the subordinator is the deterministic clock `γt`.
    None,
    TemperedStable { c: f64, alpha: f64, eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorSpec {
    gamma_drift: f64,
    family: LevyFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceClass {
    Admissible,
    Inadmissible,
}

impl SubordinatorSpec {
    pub fn new(gamma_drift: f64, family: LevyFamily) -> Result<Self> {
        if !(gamma_drift >= 0.0 && gamma_drift.is_finite()) {
            return Err(SubCirError::InvalidParameter {
                name: "gamma",
                msg: format!("drift must be nonnegative, got {gamma_drift}"),
            });
        }
        match family {
            LevyFamily::None if gamma_drift == 0.0 => {
                return Err(SubCirError::InvalidParameter {
                    name: "gamma",
                    msg: "a subordinator without jumps needs a positive drift".into(),
                })
            }
            LevyFamily::TemperedStable { c, alpha, eta } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(SubCirError::InvalidParameter {
                        name: "C",
                        msg: format!("must be positive, got {c}"),
                    });
                }
                if !(alpha < 1.0 && alpha.is_finite()) {
                    return Err(SubCirError::InvalidParameter {
                        name: "alpha",
                        msg: format!("must be below 1, got {alpha}"),
                    });
                }
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(SubCirError::InvalidParameter {
                        name: "eta",
                        msg: format!("must be positive, got {eta}"),
                    });
                }
            }
            LevyFamily::None => {}
        }
        Ok(Self { gamma_drift, family })
    }

    /// The deterministic clock `𝒯_t = γt`.
    pub fn pure_drift(gamma_drift: f64) -> Result<Self> {
        Self::new(gamma_drift, LevyFamily::None)
    }

    pub fn tempered_stable(gamma_drift: f64, c: f64, alpha: f64, eta: f64) -> Result<Self> {
        Self::new(gamma_drift, LevyFamily::TemperedStable { c, alpha, eta })
    }

    pub fn inverse_gaussian(c: f64, eta: f64) -> Result<Self> {
        Self::tempered_stable(0.0, c, 0.5, eta)
    }

    pub fn gamma_process(c: f64, eta: f64) -> Result<Self> {
        Self::tempered_stable(0.0, c, 0.0, eta)
    }

    /// Compound Poisson with arrival rate `ω` and exponential jumps of mean `1/η`.
    pub fn compound_poisson(omega: f64, eta: f64) -> Result<Self> {
        Self::tempered_stable(0.0, omega * eta, -1.0, eta)
    }

    pub fn gamma_drift(&self) -> f64 {
        self.gamma_drift
    }

    pub fn family(&self) -> LevyFamily {
        self.family
    }

    /// True when the subordinator is `𝒯_t = t`.
    pub fn is_identity(&self) -> bool {
        self.family == LevyFamily::None && self.gamma_drift == 1.0
    }

    /// Laplace exponent `φ(λ)` with `E[e^{−λ𝒯_t}] = e^{−tφ(λ)}`.
    pub fn laplace_exponent(&self, lam: f64) -> f64 {
        let drift = self.gamma_drift * lam;
        match self.family {
            LevyFamily::None => drift,
            LevyFamily::TemperedStable { c, alpha, eta } => {
                if alpha == 0.0 {
                    drift + c * (lam / eta).ln_1p()
                } else {
                    // −CΓ(−α)[(λ+η)^α − η^α], with Γ(−α) = Γ(1−α)/(−α)
                    let gamma_neg = log_gamma_unchecked(1.0 - alpha).exp() / (-alpha);
                    let diff = eta.powf(alpha) * (alpha * (lam / eta).ln_1p()).exp_m1();
                    drift - c * gamma_neg * diff
                }
            }
        }
    }

    /// `φ'(0) = E[𝒯_1]`.
    pub fn mean_rate(&self) -> f64 {
        match self.family {
            LevyFamily::None => self.gamma_drift,
            LevyFamily::TemperedStable { c, alpha, eta } => {
                // ∫ u ν(du) = C Γ(1−α) η^{α−1}
                self.gamma_drift + c * log_gamma_unchecked(1.0 - alpha).exp() * eta.powf(alpha - 1.0)
            }
        }
    }

    /// Lévy density `C u^{−α−1} e^{−ηu}`.
    pub fn levy_density(&self, u: f64) -> Result<f64> {
        match self.family {
            LevyFamily::None => Err(SubCirError::Domain {
                op: "levy_density",
                msg: "the subordinator has no jumps".into(),
            }),
            LevyFamily::TemperedStable { c, alpha, eta } => {
                if !(u > 0.0) {
                    return Err(SubCirError::Domain {
                        op: "levy_density",
                        msg: format!("jump size must be positive, got {u}"),
                    });
                }
                Ok(c * (-(alpha + 1.0) * u.ln() - eta * u).exp())
            }
        }
    }

    /// `∫_0^∞ g(u) ν(du)` for `g(u) = O(u)` at 0 and bounded on `[1, ∞)`.
    pub fn levy_integrate<G: FnMut(f64) -> f64>(&self, g: G, rel_tol: f64) -> Result<f64> {
        let cfg = QuadConfig {
            rel_tol,
            abs_tol: 1e-300,
            max_evals: LEVY_BUDGET,
        };
        self.levy_integrate_with(g, &cfg, &[])
    }

    /// As [`levy_integrate`](Self::levy_integrate), with extra break points in
    /// `(0, 1)` where the integrand has features (peaks) the adaptive rule
    /// should not miss, and an explicit tolerance and evaluation budget.
    /// The relative tolerance is clamped to `[1e-12, 1e-4]`.
    pub fn levy_integrate_with<G: FnMut(f64) -> f64>(&self, mut g: G, cfg: &QuadConfig, breaks: &[f64]) -> Result<f64> {
        let LevyFamily::TemperedStable { c, alpha, eta } = self.family else {
            return Ok(0.0);
        };
        let cfg = QuadConfig {
            rel_tol: cfg.rel_tol.clamp(1e-12, 1e-4),
            ..*cfg
        };
        let density = |u: f64| c * (-(alpha + 1.0) * u.ln() - eta * u).exp();

        let head = if alpha > 0.0 {
            // u = v^p with p = 1/(1−α) gives ν(du) = C p u^{−1} e^{−ηu} dv, bounded against g = O(u)
            let p = 1.0 / (1.0 - alpha);
            let mut pts = vec![0.0];
            pts.extend(breaks.iter().filter(|&&b| b > 0.0 && b < LEVY_SPLIT).map(|b| b.powf(1.0 - alpha)));
            pts.push(LEVY_SPLIT.powf(1.0 - alpha));
            sort_dedup(&mut pts);
            let jac = c * p;
            integrate_breaks(
                |v: f64| {
                    let u = v.powf(p);
                    let gu = g(u);
                    if gu == 0.0 {
                        0.0
                    } else {
                        jac * gu / u * (-eta * u).exp()
                    }
                },
                &pts,
                &cfg,
            )?
            .value
        } else {
            let mut pts = vec![0.0];
            pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < LEVY_SPLIT));
            pts.push(LEVY_SPLIT);
            sort_dedup(&mut pts);
            integrate_breaks(
                |u: f64| {
                    let gu = g(u);
                    if gu == 0.0 {
                        0.0
                    } else {
                        gu * density(u)
                    }
                },
                &pts,
                &cfg,
            )?
            .value
        };
        let tail = integrate_exp_tail(
            |u: f64| {
                let gu = g(u);
                if gu == 0.0 {
                    0.0
                } else {
                    gu * density(u)
                }
            },
            LEVY_SPLIT,
            eta,
            &cfg,
        )?
        .value;
        Ok(head + tail)
    }

    /// One draw of `𝒯_{t+dt} − 𝒯_t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(SubCirError::Domain {
                op: "sample_increment",
                msg: format!("time step must be positive, got {dt}"),
            });
        }
        let drift = self.gamma_drift * dt;
        let jumps = match self.family {
            LevyFamily::None => 0.0,
            LevyFamily::TemperedStable { c, alpha, eta } => {
                if alpha == 0.5 {
                    let mean = c * (PI / eta).sqrt() * dt;
                    let shape = 2.0 * PI * c * c * dt * dt;
                    sample_inverse_gaussian(mean, shape, rng)
                } else if alpha == 0.0 {
                    Gamma::new(c * dt, 1.0 / eta)
                        .map_err(|_| SubCirError::InvalidParameter {
                            name: "C",
                            msg: "gamma increment shape must be positive".into(),
                        })?
                        .sample(rng)
                } else if alpha == -1.0 {
                    let n = Poisson::new(c / eta * dt)
                        .map_err(|_| SubCirError::InvalidParameter {
                            name: "C",
                            msg: "Poisson intensity must be positive".into(),
                        })?
                        .sample(rng);
                    if n == 0.0 {
                        0.0
                    } else {
                        // sum of n Exp(η) jumps
                        Gamma::new(n, 1.0 / eta).expect("positive shape").sample(rng)
                    }
                } else {
                    return Err(SubCirError::UnsupportedAlpha { alpha });
                }
            }
        };
        Ok(drift + jumps)
    }

    /// Whether the subordinate semigroup `Σ_n e^{−φ(λ_n)t}` is summable at `t`.
    ///
    /// Partial sums run to [`TRACE_CHECK_TERMS`]; if the terms have not dropped
    /// below 1e-15 by then, the tail is classified from the growth of `φ`
    /// (integral test): stretched-exponential decay for `α ∈ (0,1)` or a
    /// positive drift, power decay `n^{−Ct}` for the driftless gamma family,
    /// and no decay for driftless compound Poisson.
    pub fn trace_class_check(&self, sd: &SpectralData, t: f64) -> TraceClass {
        if !(t > 0.0) {
            return TraceClass::Inadmissible;
        }
        let mut sum = 0.0;
        for n in 1..=TRACE_CHECK_TERMS {
            let term = (-self.laplace_exponent(sd.eigenvalue(n)) * t).exp();
            sum += term;
            if term < 1e-15 * sum.max(1.0) {
                return TraceClass::Admissible;
            }
        }
        let summable = self.gamma_drift > 0.0
            || match self.family {
                LevyFamily::None => false,
                LevyFamily::TemperedStable { c, alpha, .. } => {
                    (alpha > 0.0 && alpha < 1.0) || (alpha == 0.0 && c * t > 1.0)
                }
            };
        if summable {
            TraceClass::Admissible
        } else {
            TraceClass::Inadmissible
        }
    }
}

fn sort_dedup(pts: &mut Vec<f64>) {
    pts.sort_by(f64::total_cmp);
    pts.dedup();
}

/// Inverse Gaussian draw by the two-root transformation (Michael, Schucany
/// and Haas), with the smaller root written without cancellation.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    let v: f64 = rng.sample(StandardNormal);
    let y = mean * v * v;
    // μ + μ/(2l)(y − √(4ly + y²)) = μ − 2μy/(y + √(y² + 4ly))
    let root = mean - 2.0 * mean * y / (y + (y * y + 4.0 * shape * y).sqrt());
    let u: f64 = rng.random();
    if u <= mean / (mean + root) {
        root
    } else {
        mean * mean / root
    }
}
