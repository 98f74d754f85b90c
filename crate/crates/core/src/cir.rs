//! The background CIR diffusion `dX = κ(θ − X)dt + σ√X dB` with killing rate
//! `βx`: stationary law, transition density, affine characteristic function,
//! and the eigenvalues/eigenfunctions of its symmetric semigroup in
//! `L²(π)`.

use num_complex::Complex64;

use crate::error::{Result, SubCirError};
use crate::quad::GammaGauss;
use crate::specfun::{ln_bessel_i_scaled, ln_pochhammer, log_gamma_unchecked, LaguerreSeq};

/// Diffusion parameters `(κ, θ, σ)` with the cached gamma-law constants
/// `a = 2κ/σ²` and `b = 2κθ/σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    kappa: f64,
    theta: f64,
    sigma: f64,
    a: f64,
    b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Feller condition holds; zero is unattainable.
    Entrance,
    /// Zero is reached and instantaneously reflected.
    Reflecting,
}

impl CirParams {
    pub fn new(kappa: f64, theta: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("theta", theta), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SubCirError::InvalidParameter {
                    name,
                    msg: format!("must be positive and finite, got {v}"),
                });
            }
        }
        let s2 = sigma * sigma;
        Ok(Self {
            kappa,
            theta,
            sigma,
            a: 2.0 * kappa / s2,
            b: 2.0 * kappa * theta / s2,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    /// Rate of the gamma stationary law, `2κ/σ²`.
    pub fn a(&self) -> f64 {
        self.a
    }
    /// Shape of the gamma stationary law, `2κθ/σ²`.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn classify_boundary(&self) -> Boundary {
        if 2.0 * self.kappa * self.theta >= self.sigma * self.sigma {
            Boundary::Entrance
        } else {
            Boundary::Reflecting
        }
    }

    /// Gamma stationary density `a^b x^{b−1} e^{−ax} / Γ(b)`.
    ///
    /// At `x = 0` the limit is returned: 0 for `b > 1`, `a` for `b = 1` and
    /// `+∞` for `b < 1`.
    pub fn stationary_density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return if self.b > 1.0 {
                0.0
            } else if self.b == 1.0 {
                self.a
            } else {
                f64::INFINITY
            };
        }
        (self.b * self.a.ln() + (self.b - 1.0) * x.ln() - self.a * x - log_gamma_unchecked(self.b)).exp()
    }

    /// `ρ(β) = √(κ² + 2βσ²)`.
    pub fn rho(&self, beta: f64) -> f64 {
        rho(self.kappa, self.sigma, beta)
    }

    /// Spectral data of the semigroup killed at rate `βx`.
    pub fn spectral(&self, beta: f64) -> Result<SpectralData> {
        SpectralData::new(*self, beta)
    }

    /// Affine characteristic function `Ψ_t(x, β, z) = E_x[e^{−β∫X} e^{−z X_t}] = A e^{−Bx}`.
    pub fn charfun_affine(&self, t: f64, beta: f64, z: Complex64, x: f64) -> Complex64 {
        let (ln_a, b) = self.affine_coefficients(t, beta, z);
        (ln_a - b * x).exp()
    }

    /// `(ln A(t, β, z), B(t, β, z))` written in terms of `e^{−ρt}` so that long
    /// horizons do not overflow.
    pub fn affine_coefficients(&self, t: f64, beta: f64, z: Complex64) -> (Complex64, Complex64) {
        let (k, s2) = (self.kappa, self.sigma * self.sigma);
        let r = self.rho(beta);
        let decay = (-r * t).exp();
        let one_minus = -(-r * t).exp_m1();
        let denom = 2.0 * r * decay + (r + k + z * s2) * one_minus;
        let ln_a = self.b * (Complex64::new((2.0 * r).ln() + 0.5 * (k - r) * t, 0.0) - denom.ln());
        let b = (2.0 * beta * one_minus + z * (r - k) + z * (r + k) * decay) / denom;
        (ln_a, b)
    }

    /// Symmetric transition density `p_m^β(t, x, y)` with respect to `π(y)dy`.
    pub fn transition_density_m(&self, beta: f64, t: f64, x: f64, y: f64) -> Result<f64> {
        Ok(self.ln_transition_density_m(beta, t, x, y)?.exp())
    }

    /// `ln p_m^β(t, x, y)`.
    pub fn ln_transition_density_m(&self, beta: f64, t: f64, x: f64, y: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(SubCirError::Domain {
                op: "transition_density_m",
                msg: format!("time must be positive, got {t}"),
            });
        }
        if !(x > 0.0 && y > 0.0) {
            return Err(SubCirError::Domain {
                op: "transition_density_m",
                msg: format!("states must be positive, got x = {x}, y = {y}"),
            });
        }
        let (k, s2, a, b) = (self.kappa, self.sigma * self.sigma, self.a, self.b);
        let r = self.rho(beta);
        let u = 0.5 * r * t;
        let ln_sinh = u + (-(-2.0 * u).exp_m1()).ln() - std::f64::consts::LN_2;
        let sinh = ln_sinh.exp();
        let sqrt_xy = (x * y).sqrt();
        let bessel_arg = 2.0 * r * sqrt_xy / (s2 * sinh);
        let lam1 = 0.5 * b * (r - k);
        // bessel_arg − (x+y)ρ coth(u)/σ² without cancellation
        let diff = x.sqrt() - y.sqrt();
        let combined = -(r / s2) * (diff * diff / u.tanh() + 2.0 * sqrt_xy * (0.5 * u).tanh());
        let ln_p = r.ln() + log_gamma_unchecked(b) + sqrt_xy.ln() - s2.ln() - ln_sinh
            + b * (u - a.ln() - sqrt_xy.ln())
            + ln_bessel_i_scaled(b - 1.0, bessel_arg)
            + combined
            + (x + y) * k / s2
            - lam1 * t;
        Ok(ln_p)
    }

    /// Transition density with respect to Lebesgue measure, `p_m^β(t,x,y) π(y)`.
    pub fn transition_density(&self, beta: f64, t: f64, x: f64, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        let ln_pi = self.b * self.a.ln() + (self.b - 1.0) * y.ln() - self.a * y - log_gamma_unchecked(self.b);
        Ok((self.ln_transition_density_m(beta, t, x, y)? + ln_pi).exp())
    }
}

pub(crate) fn rho(kappa: f64, sigma: f64, beta: f64) -> f64 {
    (kappa * kappa + 2.0 * beta * sigma * sigma).sqrt()
}

/// Eigenvalues, normalization constants and eigenfunctions of the CIR
/// semigroup killed at rate `βx`.
///
/// `λ_n = (n−1)ρ + (b/2)(ρ−κ)` and
/// `φ_n(x) = N_n e^{(κ−ρ)x/σ²} L_{n−1}^{b−1}(2ρx/σ²)` with
/// `N_n = √((n−1)!/(b)_{n−1}) (ρ/κ)^{b/2}`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    params: CirParams,
    beta: f64,
    rho: f64,
    ln_norms: Vec<f64>,
}

/// Normalization constants cached at construction.
const CACHED_NORMS: usize = 512;

impl SpectralData {
    pub fn new(params: CirParams, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(SubCirError::InvalidParameter {
                name: "beta",
                msg: format!("must be nonnegative, got {beta}"),
            });
        }
        let rho = params.rho(beta);
        let b = params.b;
        let ln_rho_kappa = 0.5 * b * (rho / params.kappa).ln();
        let mut ln_norms = Vec::with_capacity(CACHED_NORMS);
        let mut ln_fact = 0.0;
        let mut ln_poch = 0.0;
        for j in 0..CACHED_NORMS {
            // j = n − 1
            if j > 0 {
                ln_fact += (j as f64).ln();
                ln_poch += (b + (j - 1) as f64).ln();
            }
            ln_norms.push(0.5 * (ln_fact - ln_poch) + ln_rho_kappa);
        }
        Ok(Self {
            params,
            beta,
            rho,
            ln_norms,
        })
    }

    pub fn params(&self) -> &CirParams {
        &self.params
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `λ_n^β`, `n ≥ 1`.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        assert!(n >= 1, "eigenvalues are indexed from 1");
        (n - 1) as f64 * self.rho + 0.5 * self.params.b * (self.rho - self.params.kappa)
    }

    /// `ln N_n^β`.
    pub fn ln_norm(&self, n: usize) -> f64 {
        assert!(n >= 1, "eigenfunctions are indexed from 1");
        match self.ln_norms.get(n - 1) {
            Some(&v) => v,
            None => {
                let j = n - 1;
                let b = self.params.b;
                0.5 * (log_gamma_unchecked(j as f64 + 1.0) - ln_pochhammer(b, j))
                    + 0.5 * b * (self.rho / self.params.kappa).ln()
            }
        }
    }

    pub fn norm(&self, n: usize) -> f64 {
        self.ln_norm(n).exp()
    }

    /// `(κ − ρ)/σ²`, the exponential factor of every eigenfunction.
    fn exp_rate(&self) -> f64 {
        (self.params.kappa - self.rho) / (self.params.sigma * self.params.sigma)
    }

    /// Scale applied to `x` inside the Laguerre polynomials, `2ρ/σ²`.
    fn laguerre_scale(&self) -> f64 {
        2.0 * self.rho / (self.params.sigma * self.params.sigma)
    }

    /// `φ_n^β(x)`.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        if n == 0 {
            return Err(SubCirError::Domain {
                op: "eigenfunction",
                msg: "eigenfunctions are indexed from 1".into(),
            });
        }
        if !(x >= 0.0) {
            return Err(SubCirError::Domain {
                op: "eigenfunction",
                msg: format!("state must be nonnegative, got {x}"),
            });
        }
        let v = self.eigenfunctions(x).nth(n - 1).expect("infinite sequence");
        if !v.is_finite() {
            return Err(SubCirError::Overflow { op: "eigenfunction" });
        }
        Ok(v)
    }

    /// `φ_1(x), φ_2(x), …` sharing one Laguerre recurrence.
    pub fn eigenfunctions(&self, x: f64) -> impl Iterator<Item = f64> + '_ {
        let damp = self.exp_rate() * x;
        LaguerreSeq::new(self.params.b - 1.0, self.laguerre_scale() * x)
            .enumerate()
            .map(move |(j, l)| (self.ln_norm(j + 1) + damp).exp() * l)
    }

    /// Expansion coefficients of `e^{−zx}`:
    /// `f_n(z) = (1/N_n) ((κ−ρ+σ²z)/(κ+ρ+σ²z))^{n−1} (2ρ/(κ+ρ+σ²z))^b`, for all `n ≥ 1`.
    pub fn coeff_exp(&self, n: usize, z: Complex64) -> Complex64 {
        assert!(n >= 1, "coefficients are indexed from 1");
        let (k, s2, b) = (self.params.kappa, self.params.sigma * self.params.sigma, self.params.b);
        let r = self.rho;
        let den = k + r + s2 * z;
        let ratio = (k - r + s2 * z) / den;
        let lead = b * ((2.0 * r) / den).ln() - self.ln_norm(n);
        let pow = if n == 1 { Complex64::new(1.0, 0.0) } else { ratio.powu((n - 1) as u32) };
        lead.exp() * pow
    }

    /// Gram matrix `(φ_n, φ_m)_π` for `n, m ≤ size`, by Gauss quadrature
    /// against the stationary gamma law with `nodes` points.
    pub fn gram_matrix(&self, size: usize, nodes: usize) -> Result<Vec<Vec<f64>>> {
        let rule = GammaGauss::new(self.params.b, self.params.a, nodes)?;
        let mut gram = vec![vec![0.0; size]; size];
        for (&x, &lw) in rule.nodes.iter().zip(&rule.ln_weights) {
            if lw < -745.0 {
                continue;
            }
            let w = lw.exp();
            let phis: Vec<f64> = self.eigenfunctions(x).take(size).collect();
            for i in 0..size {
                for j in 0..=i {
                    gram[i][j] += w * phis[i] * phis[j];
                }
            }
        }
        for i in 0..size {
            for j in 0..i {
                gram[j][i] = gram[i][j];
            }
        }
        Ok(gram)
    }
}
