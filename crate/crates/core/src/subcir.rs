//! The subordinate CIR model: eigenfunction expansions with eigenvalues
//! `φ(λ_n^β)`, survival probabilities and credit spreads, and the local
//! characteristics (killing rate, drift, state-dependent Lévy density) of the
//! time-changed process.

use num_complex::Complex64;

use crate::cir::{CirParams, SpectralData};
use crate::error::{Result, SubCirError};
use crate::quad::{integrate, integrate_exp_tail, QuadConfig};
use crate::subordinators::{LevyFamily, SubordinatorSpec, TraceClass};

/// Jumps smaller than this are excluded from the state-dependent Lévy density.
pub const JUMP_SIZE_MIN: f64 = 1e-6;

/// Truncation level of the compensated small jumps in the drift.
pub const DRIFT_TRUNCATION: f64 = 1.0;

/// Consecutive small terms required before an expansion is cut.
const SMALL_TERMS_TO_STOP: usize = 3;

/// Stopping rule of the eigenfunction expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub n_max: usize,
    pub tol: f64,
    /// Smallest horizon at which expansions are evaluated.
    pub t_min: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            n_max: 200,
            tol: 1e-10,
            t_min: 1e-3,
        }
    }
}

/// CIR background plus subordinator, with both semigroups (`β = 0, 1`)
/// precomputed up to the truncation order.
#[derive(Debug, Clone)]
pub struct SubCirModel {
    cir: CirParams,
    sub: SubordinatorSpec,
    truncation: Truncation,
    quadrature: QuadConfig,
    spectral: [SpectralData; 2],
    /// `φ(λ_n^β)` for `n = 1..=n_max`, per `β`.
    sub_eigenvalues: [Vec<f64>; 2],
}

impl SubCirModel {
    pub fn new(cir: CirParams, sub: SubordinatorSpec, truncation: Truncation, quadrature: QuadConfig) -> Result<Self> {
        if truncation.n_max < 8 {
            return Err(SubCirError::InvalidParameter {
                name: "n_max",
                msg: format!("must be at least 8, got {}", truncation.n_max),
            });
        }
        if truncation.n_max > crate::specfun::LAGUERRE_N_MAX {
            return Err(SubCirError::InvalidParameter {
                name: "n_max",
                msg: format!("must not exceed {}, got {}", crate::specfun::LAGUERRE_N_MAX, truncation.n_max),
            });
        }
        for (name, v) in [("tol", truncation.tol), ("t_min", truncation.t_min)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SubCirError::InvalidParameter {
                    name,
                    msg: format!("must be positive, got {v}"),
                });
            }
        }
        if !(quadrature.rel_tol > 0.0) || quadrature.max_evals == 0 {
            return Err(SubCirError::InvalidParameter {
                name: "quadrature",
                msg: "relative tolerance and budget must be positive".into(),
            });
        }
        let spectral = [cir.spectral(0.0)?, cir.spectral(1.0)?];
        if sub.trace_class_check(&spectral[1], truncation.t_min) == TraceClass::Inadmissible {
            return Err(SubCirError::InvalidParameter {
                name: "subordinator",
                msg: format!(
                    "subordinate semigroup is not trace class at t_min = {}",
                    truncation.t_min
                ),
            });
        }
        let sub_eigenvalues = [0, 1].map(|i| {
            (1..=truncation.n_max)
                .map(|n| sub.laplace_exponent(spectral[i].eigenvalue(n)))
                .collect()
        });
        Ok(Self {
            cir,
            sub,
            truncation,
            quadrature,
            spectral,
            sub_eigenvalues,
        })
    }

    /// Model with the default truncation and quadrature settings.
    pub fn with_defaults(cir: CirParams, sub: SubordinatorSpec) -> Result<Self> {
        Self::new(cir, sub, Truncation::default(), QuadConfig::default())
    }

    pub fn cir(&self) -> &CirParams {
        &self.cir
    }
    pub fn subordinator(&self) -> &SubordinatorSpec {
        &self.sub
    }
    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }
    pub fn quadrature(&self) -> &QuadConfig {
        &self.quadrature
    }

    /// Spectral data of the `β` semigroup, `β ∈ {0, 1}`.
    pub fn spectral(&self, beta: f64) -> Result<&SpectralData> {
        Ok(&self.spectral[beta_index(beta)?])
    }

    /// `φ(λ_n^β)`.
    pub fn sub_eigenvalue(&self, beta: f64, n: usize) -> Result<f64> {
        let i = beta_index(beta)?;
        if n == 0 {
            return Err(SubCirError::Domain {
                op: "sub_eigenvalue",
                msg: "eigenvalues are indexed from 1".into(),
            });
        }
        Ok(match self.sub_eigenvalues[i].get(n - 1) {
            Some(&v) => v,
            None => self.sub.laplace_exponent(self.spectral[i].eigenvalue(n)),
        })
    }

    fn check_horizon(&self, t: f64) -> Result<()> {
        if !(t >= self.truncation.t_min) {
            return Err(SubCirError::BelowResolution {
                t,
                t_min: self.truncation.t_min,
            });
        }
        Ok(())
    }

    fn expansion<F: FnMut(usize) -> Complex64>(&self, beta: f64, t: f64, x: f64, mut coeff: F) -> Result<Complex64> {
        let i = beta_index(beta)?;
        self.check_horizon(t)?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(SubCirError::Domain {
                op: "apply_semigroup",
                msg: format!("state must be nonnegative, got {x}"),
            });
        }
        let tol = self.truncation.tol;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut small = 0;
        let terms = self.spectral[i].eigenfunctions(x).zip(&self.sub_eigenvalues[i]);
        for (j, (phi_n, &sub_lambda)) in terms.enumerate() {
            let term = coeff(j + 1) * ((-sub_lambda * t).exp() * phi_n);
            if !(term.re.is_finite() && term.im.is_finite()) {
                return Err(SubCirError::Overflow { op: "apply_semigroup" });
            }
            sum += term;
            if term.norm() < tol * (1.0 + sum.norm()) {
                small += 1;
                if small == SMALL_TERMS_TO_STOP {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(SubCirError::SlowConvergence {
            n_max: self.truncation.n_max,
        })
    }

    /// `𝒫_t^{β,φ} f(x) = Σ e^{−φ(λ_n^β)t} f_n φ_n^β(x)` for coefficients
    /// `f_n = coeffs[n−1]`; coefficients past the end of the slice are zero.
    pub fn apply_semigroup(&self, beta: f64, t: f64, coeffs: &[f64], x: f64) -> Result<f64> {
        self.expansion(beta, t, x, |n| Complex64::new(coeffs.get(n - 1).copied().unwrap_or(0.0), 0.0))
            .map(|v| v.re)
    }

    /// `Ψ^φ_t(x, β, z) = E_x[e^{−β∫₀^{𝒯_t} X} e^{−z X^φ_t}]` by expansion.
    pub fn charfun_sub(&self, t: f64, beta: f64, z: Complex64, x: f64) -> Result<Complex64> {
        if z.re < 0.0 {
            return Err(SubCirError::Domain {
                op: "charfun_sub",
                msg: format!("Re z must be nonnegative, got {z}"),
            });
        }
        let sd = self.spectral(beta)?;
        self.expansion(beta, t, x, |n| sd.coeff_exp(n, z))
    }

    /// `Q = (1 − d) 𝒫^{1,φ}_T 1(x)`, clamped to `[0, 1]`.
    pub fn survival_probability(&self, horizon: f64, x: f64, defaulted: bool) -> Result<f64> {
        if !(horizon >= 0.0) {
            return Err(SubCirError::Domain {
                op: "survival_probability",
                msg: format!("horizon must be nonnegative, got {horizon}"),
            });
        }
        if defaulted {
            return Ok(0.0);
        }
        if horizon == 0.0 {
            return Ok(1.0);
        }
        let q = self.charfun_sub(horizon, 1.0, Complex64::new(0.0, 0.0), x)?.re;
        Ok(q.clamp(0.0, 1.0))
    }

    /// `S(T) = −ln Q(T)/T` for a surviving name.
    pub fn credit_spread(&self, horizon: f64, x: f64) -> Result<f64> {
        self.check_horizon(horizon)?;
        let q = self.survival_probability(horizon, x, false)?;
        if q <= 0.0 {
            return Err(SubCirError::InfiniteSpread { horizon });
        }
        Ok((-q.ln() / horizon).max(0.0))
    }

    /// Long-maturity spread `φ(λ_1^1)`.
    pub fn asymptotic_spread(&self) -> f64 {
        self.sub_eigenvalues[1][0]
    }

    /// Default intensity `k^φ(x) = γx + ∫(1 − A(s,1,0)e^{−B(s,1,0)x}) ν(ds)`.
    pub fn killing_rate(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(SubCirError::Domain {
                op: "killing_rate",
                msg: format!("state must be nonnegative, got {x}"),
            });
        }
        let drift = self.sub.gamma_drift() * x;
        if self.sub.family() == LevyFamily::None {
            return Ok(drift);
        }
        let zero = Complex64::new(0.0, 0.0);
        let jumps = self.sub.levy_integrate_with(
            |s| {
                let (ln_a, b) = self.cir.affine_coefficients(s, 1.0, zero);
                -(ln_a.re - b.re * x).exp_m1()
            },
            &self.quadrature,
            &[],
        )?;
        Ok(drift + jumps)
    }

    /// State-dependent Lévy density `π^{β,φ}(x, y) = ∫ p^β(s, x, x+y) ν(ds)`
    /// (Lebesgue density in the landing point).
    pub fn levy_density_state(&self, beta: f64, x: f64, y: f64) -> Result<f64> {
        beta_index(beta)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(SubCirError::Domain {
                op: "levy_density_state",
                msg: format!("state must be positive, got {x}"),
            });
        }
        if !(y.abs() >= JUMP_SIZE_MIN) {
            return Err(SubCirError::Domain {
                op: "levy_density_state",
                msg: format!("jump size must be at least {JUMP_SIZE_MIN} in magnitude, got {y}"),
            });
        }
        let target = x + y;
        if target <= 0.0 || self.sub.family() == LevyFamily::None {
            return Ok(0.0);
        }
        // the s-integrand peaks near (√x' − √x)²/σ²
        let gap = (target.sqrt() - x.sqrt()) / self.cir.sigma();
        let peak = gap * gap;
        let breaks: Vec<f64> = (-2..30)
            .map(|k| peak * 4f64.powi(k))
            .take_while(|&s| s < 1.0)
            .collect();
        let mut failure = None;
        let value = self.sub.levy_integrate_with(
            |s| {
                if s <= 0.0 {
                    return 0.0;
                }
                match self.cir.transition_density(beta, s, x, target) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            &self.quadrature,
            &breaks,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// `∫_{|y|≤level} y π^{β,φ}(x, y) dy`, evaluated with the order of
    /// integration swapped: `∫ E_x[(X_s − x) 1{|X_s − x| ≤ level}; β] ν(ds)`.
    /// The inner expectation is the closed-form first moment minus the
    /// excluded tails. The `y`-integral itself only exists as a principal
    /// value for infinite-activity subordinators; the swapped form is
    /// absolutely convergent.
    pub fn truncated_jump_moment(&self, beta: f64, x: f64, level: f64) -> Result<f64> {
        beta_index(beta)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(SubCirError::Domain {
                op: "truncated_jump_moment",
                msg: format!("state must be positive, got {x}"),
            });
        }
        if !(level > 0.0) {
            return Err(SubCirError::Domain {
                op: "truncated_jump_moment",
                msg: format!("truncation level must be positive, got {level}"),
            });
        }
        if self.sub.family() == LevyFamily::None {
            return Ok(0.0);
        }
        let mut failure = None;
        let value = self.sub.levy_integrate_with(
            |s| {
                if s <= 0.0 {
                    return 0.0;
                }
                match self.truncated_moment_at(beta, s, x, level) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            &self.quadrature,
            &[],
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// `E_x[(X_s − x) e^{−β∫₀^s X} 1{|X_s − x| ≤ level}]`.
    fn truncated_moment_at(&self, beta: f64, s: f64, x: f64, level: f64) -> Result<f64> {
        let full = self.first_moment(beta, s, x);
        let cfg = QuadConfig {
            rel_tol: self.quadrature.rel_tol,
            abs_tol: 1e-6 * self.quadrature.rel_tol * full.abs().max(1e-300),
            max_evals: self.quadrature.max_evals,
        };
        let weighted = |y: f64| {
            if y <= 0.0 {
                0.0
            } else {
                (y - x) * self.cir.transition_density(beta, s, x, y).unwrap_or(0.0)
            }
        };
        let upper = integrate_exp_tail(weighted, x + level, self.cir.a(), &cfg)?.value;
        let lower = if x > level {
            integrate(weighted, 0.0, x - level, &cfg)?.value
        } else {
            0.0
        };
        Ok(full - upper - lower)
    }

    /// `E_x[(X_s − x) e^{−β∫₀^s X}] = Ψ(s,x,β,0)·(1−e^{−ρs})/D·[2κθ − 2κx − 2βσ²x(1−e^{−ρs})/D]`
    /// with `D = ρ + κ + (ρ − κ)e^{−ρs}`, free of cancellation as `s → 0`.
    fn first_moment(&self, beta: f64, s: f64, x: f64) -> f64 {
        let (k, th, s2) = (self.cir.kappa(), self.cir.theta(), self.cir.sigma().powi(2));
        let r = self.cir.rho(beta);
        let decay = (-r * s).exp();
        let om = -(-r * s).exp_m1();
        let d = r + k + (r - k) * decay;
        let psi = if beta == 0.0 {
            1.0
        } else {
            self.cir.charfun_affine(s, beta, Complex64::new(0.0, 0.0), x).re
        };
        psi * om / d * (2.0 * k * th - 2.0 * k * x - 2.0 * beta * s2 * x * om / d)
    }

    /// Drift `b^{β,φ}(x) = γκ(θ − x) + ∫_{|y|≤1} y π^{β,φ}(x, y) dy`.
    pub fn drift_sub(&self, beta: f64, x: f64) -> Result<f64> {
        beta_index(beta)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(SubCirError::Domain {
                op: "drift_sub",
                msg: format!("state must be positive, got {x}"),
            });
        }
        let diffusion = self.sub.gamma_drift() * self.cir.kappa() * (self.cir.theta() - x);
        Ok(diffusion + self.truncated_jump_moment(beta, x, DRIFT_TRUNCATION)?)
    }
}

fn beta_index(beta: f64) -> Result<usize> {
    if beta == 0.0 {
        Ok(0)
    } else if beta == 1.0 {
        Ok(1)
    } else {
        Err(SubCirError::InvalidParameter {
            name: "beta",
            msg: format!("must be 0 or 1, got {beta}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_breaks;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn cir() -> CirParams {
        CirParams::new(1.0, 0.1, 0.25).unwrap()
    }

    fn reference() -> SubCirModel {
        SubCirModel::with_defaults(cir(), SubordinatorSpec::inverse_gaussian(0.5, 1.0).unwrap()).unwrap()
    }

    fn trivial() -> SubCirModel {
        SubCirModel::with_defaults(cir(), SubordinatorSpec::pure_drift(1.0).unwrap()).unwrap()
    }

    #[test]
    fn construction_checks() {
        let bad = Truncation { n_max: 4, ..Truncation::default() };
        assert!(SubCirModel::new(cir(), SubordinatorSpec::pure_drift(1.0).unwrap(), bad, QuadConfig::default()).is_err());
        let gamma = SubordinatorSpec::gamma_process(0.5, 1.0).unwrap();
        assert!(SubCirModel::with_defaults(cir(), gamma).is_err());
        assert!(reference().spectral(0.5).is_err());
    }

    #[test]
    fn asymptotic_spread_values() {
        assert!((reference().asymptotic_spread() - 0.084).abs() < 5e-4);
        assert!((reference().asymptotic_spread() - 0.08402236322602074).abs() < 1e-14);
        assert!((trivial().asymptotic_spread() - 0.0970562748477140585620264690516376942836).abs() < 1e-15);
        let double = SubCirModel::with_defaults(cir(), SubordinatorSpec::pure_drift(2.0).unwrap()).unwrap();
        assert!((double.asymptotic_spread() - 2.0 * 0.0970562748477140585620264690516376942836).abs() < 1e-15);
    }

    #[test]
    fn affine_parity() {
        let m = trivial();
        for beta in [0.0, 1.0] {
            for t in [0.25, 1.0, 5.0] {
                for x in [0.02, 0.1, 0.3] {
                    for z in [0.0, 1.0, 5.0] {
                        let got = m.charfun_sub(t, beta, c(z), x).unwrap();
                        let want = cir().charfun_affine(t, beta, c(z), x);
                        assert!((got - want).norm() < 1e-8, "β={beta} t={t} x={x} z={z}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_is_preserved_without_killing() {
        let m = reference();
        for t in [1e-3, 0.7, 12.0] {
            for x in [0.0, 0.1, 0.6] {
                assert!((m.apply_semigroup(0.0, t, &[1.0, 0.0, 0.0], x).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(matches!(
            m.apply_semigroup(0.0, 1e-4, &[1.0], 0.1),
            Err(SubCirError::BelowResolution { .. })
        ));
    }

    #[test]
    fn stationary_limit_of_charfun() {
        let m = reference();
        for z in [0.5, 3.0] {
            let got = m.charfun_sub(400.0, 0.0, c(z), 0.2).unwrap();
            let want = (1.0 + z / cir().a()).powf(-cir().b());
            assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn charfun_is_bounded() {
        let m = reference();
        for t in [1e-3, 0.5, 3.0] {
            for x in [0.0, 0.05, 0.4] {
                for z in [Complex64::new(0.0, 3.0), c(2.0), Complex64::new(1.0, -5.0)] {
                    assert!(m.charfun_sub(t, 1.0, z, x).unwrap().norm() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn survival_edge_cases_and_monotonicity() {
        let m = reference();
        assert_eq!(m.survival_probability(5.0, 0.1, true).unwrap(), 0.0);
        assert_eq!(m.survival_probability(0.0, 0.1, false).unwrap(), 1.0);
        assert!(matches!(
            m.survival_probability(1e-4, 0.1, false),
            Err(SubCirError::BelowResolution { .. })
        ));
        let horizons = [0.01, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0];
        let xs = [0.0, 0.02, 0.1, 0.2, 0.4];
        for &x in &xs {
            let qs: Vec<f64> = horizons.iter().map(|&t| m.survival_probability(t, x, false).unwrap()).collect();
            assert!(qs.iter().all(|q| (0.0..=1.0).contains(q)));
            assert!(qs.windows(2).all(|w| w[1] <= w[0]));
        }
        for &t in &horizons {
            let qs: Vec<f64> = xs.iter().map(|&x| m.survival_probability(t, x, false).unwrap()).collect();
            assert!(qs.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn one_year_survival_band() {
        let q = reference().survival_probability(1.0, 0.1, false).unwrap();
        assert!(q > 0.85 && q < 0.95, "{q}");
    }

    #[test]
    fn spreads() {
        let t = trivial();
        for horizon in [0.5, 3.0] {
            let (ln_a, b) = cir().affine_coefficients(horizon, 1.0, c(0.0));
            let want = -(ln_a.re - b.re * 0.07) / horizon;
            assert!((t.credit_spread(horizon, 0.07).unwrap() - want).abs() < 1e-9);
        }
        let m = reference();
        assert!((m.credit_spread(30.0, 0.1).unwrap() - m.asymptotic_spread()).abs() < 1e-3);
        for horizon in [1.0, 3.0, 5.0] {
            for x in [0.02, 0.1, 0.15] {
                let s = m.credit_spread(horizon, x).unwrap();
                assert!(s > 0.0 && s < 0.15, "{horizon} {x} {s}");
            }
        }
    }

    #[test]
    fn killing_rate_values() {
        let t = trivial();
        for x in [0.0, 0.1, 0.5] {
            assert_eq!(t.killing_rate(x).unwrap(), x);
        }
        let m = reference();
        // independent high-precision quadrature of the same integral
        let refs = [
            (0.0, 0.0146954299778544),
            (0.1, 0.0863363967242677),
            (0.2, 0.156417692212635),
            (0.4, 0.292176480476539),
        ];
        for (x, want) in refs {
            let got = m.killing_rate(x).unwrap();
            assert!((got - want).abs() < 1e-9 * want, "x={x}: {got} vs {want}");
        }
        let grid: Vec<f64> = (0..=40).map(|i| 0.01 * i as f64).collect();
        let ks: Vec<f64> = grid.iter().map(|&x| m.killing_rate(x).unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[1] > w[0]));
        assert!(ks.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 1e-12));
    }

    #[test]
    fn levy_density_state_support_and_guard() {
        let m = reference();
        assert_eq!(m.levy_density_state(0.0, 0.1, -0.1).unwrap(), 0.0);
        assert_eq!(m.levy_density_state(0.0, 0.1, -0.3).unwrap(), 0.0);
        assert!(m.levy_density_state(0.0, 0.1, 1e-7).is_err());
        assert!(m.levy_density_state(0.0, 0.0, 0.1).is_err());
        assert!(m.levy_density_state(0.5, 0.1, 0.1).is_err());
        assert_eq!(trivial().levy_density_state(0.0, 0.1, 0.05).unwrap(), 0.0);
        for beta in [0.0, 1.0] {
            for y in [-0.05, -1e-4, 1e-6, 0.01, 0.3] {
                assert!(m.levy_density_state(beta, 0.1, y).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn levy_density_detailed_balance() {
        let m = reference();
        let p = cir();
        for (x, xp) in [(0.05, 0.2), (0.02, 0.1)] {
            let lhs = p.stationary_density(x) * m.levy_density_state(0.0, x, xp - x).unwrap();
            let rhs = p.stationary_density(xp) * m.levy_density_state(0.0, xp, x - xp).unwrap();
            assert!(((lhs - rhs) / lhs).abs() < 1e-6, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn levy_density_killed_is_smaller() {
        let m = reference();
        for y in [-0.05, 0.02, 0.2] {
            assert!(m.levy_density_state(1.0, 0.1, y).unwrap() < m.levy_density_state(0.0, 0.1, y).unwrap());
        }
    }

    #[test]
    fn first_moment_matches_quadrature() {
        let m = reference();
        for beta in [0.0, 1.0] {
            for s in [1e-3, 0.3, 4.0] {
                let x = 0.07;
                let cfg = QuadConfig::with_rel_tol(1e-12);
                let f = |y: f64| if y <= 0.0 { 0.0 } else { (y - x) * cir().transition_density(beta, s, x, y).unwrap() };
                let width = 0.25 * (x * s).sqrt();
                let mut pts = vec![0.0];
                pts.extend((1..40).map(|k| x + width * (k as f64 - 20.0) * 0.5).filter(|&y| y > 0.0));
                pts.push(3.0);
                let q = integrate_breaks(f, &pts, &cfg).unwrap().value;
                let want = m.first_moment(beta, s, x);
                assert!((q - want).abs() < 1e-10 * want.abs().max(1e-3), "β={beta} s={s}: {q} vs {want}");
            }
        }
    }

    #[test]
    fn restricted_moment_matches_principal_value() {
        // y-integral paired as y(π(x,y) − π(x,−y)) on [1e-6, 0.2], against the swapped form
        let m = reference();
        for x in [0.01, 0.2] {
            let cfg = QuadConfig::with_rel_tol(1e-7);
            let f = |y: f64| {
                let up = m.levy_density_state(0.0, x, y).unwrap();
                let down = m.levy_density_state(0.0, x, -y).unwrap();
                y * (up - down)
            };
            let mut pts: Vec<f64> = (0..=6).map(|k| JUMP_SIZE_MIN * 10f64.powi(k)).collect();
            pts.extend([0.05, 0.1, 0.2]);
            pts.push(x);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            pts.retain(|&p| p <= 0.2);
            let pv = integrate_breaks(f, &pts, &cfg).unwrap().value;
            let swapped = m.truncated_jump_moment(0.0, x, 0.2).unwrap();
            assert!((pv - swapped).abs() < 1e-4 * swapped.abs(), "x={x}: {pv} vs {swapped}");
        }
    }

    #[test]
    fn restricted_moment_skew() {
        let m = reference();
        let low = m.truncated_jump_moment(0.0, 0.01, 0.2).unwrap();
        let mid = m.truncated_jump_moment(0.0, 0.1, 0.2).unwrap();
        let high = m.truncated_jump_moment(0.0, 0.2, 0.2).unwrap();
        assert!(low > 0.0 && high < 0.0);
        assert!(mid.abs() < low.abs() && mid.abs() < high.abs());
    }

    #[test]
    fn drift_values() {
        let t = trivial();
        for x in [0.01, 0.1, 0.3] {
            assert!((t.drift_sub(0.0, x).unwrap() - (0.1 - x)).abs() < 1e-15);
        }
        let m = reference();
        let low = m.drift_sub(0.0, 0.01).unwrap();
        let at_theta = m.drift_sub(0.0, 0.1).unwrap();
        let high = m.drift_sub(0.0, 0.3).unwrap();
        assert!(low > 0.0 && high < 0.0);
        assert!(at_theta.abs() < 0.1 * low.abs());
        // far tails are negligible, so the drift is (θ − x)·φ(κ) for a driftless subordinator
        let phi_kappa = m.subordinator().laplace_exponent(1.0);
        assert!((low - 0.09 * phi_kappa).abs() < 1e-7);
        assert!(m.drift_sub(1.0, 0.1).unwrap() < at_theta);
    }

    #[test]
    fn levy_measure_integrability() {
        // ∫ (y² ∧ 1) π^{0,φ}(x, y) dy = ∫ E_x[(X_s − x)²] ν(ds) here since jumps stay below 1
        let m = reference();
        let p = cir();
        for x in [0.01, 0.1, 0.2] {
            let second = |s: f64| {
                let e = (-s).exp();
                let mean_shift = (0.1 - x) * (1.0 - e);
                let var = x * p.sigma().powi(2) * (e - e * e) + 0.1 * p.sigma().powi(2) / 2.0 * (1.0 - e).powi(2);
                mean_shift * mean_shift + var
            };
            let v = m.subordinator().levy_integrate(second, 1e-10).unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
    }
}
