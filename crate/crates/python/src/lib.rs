//! Python bindings: `import subcir_py`.
//!
//! Parameter errors raise `ValueError`; numerical failures (quadrature,
//! expansion truncation, overflow) raise `RuntimeError`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subcir::cir::{Boundary, CirParams};
use subcir::mc::{estimate_survival_curve, simulate_subcir, KillingRateTable, PathConfig, DEFAULT_STEP};
use subcir::pricing::{riskfree_bond_subcir, zcb_defaultable};
use subcir::quad::QuadConfig;
use subcir::subcir::{SubCirModel, Truncation};
use subcir::subordinators::SubordinatorSpec;
use subcir::SubCirError;

fn to_py(e: SubCirError) -> PyErr {
    match e {
        SubCirError::InvalidParameter { .. }
        | SubCirError::Domain { .. }
        | SubCirError::BelowResolution { .. }
        | SubCirError::UnsupportedAlpha { .. }
        | SubCirError::InfiniteSpread { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for subcir::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// CIR diffusion `dX = κ(θ − X)dt + σ√X dB`.
#[pyclass(name = "CirParams", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyCirParams(CirParams);

#[pymethods]
impl PyCirParams {
    #[new]
    fn new(kappa: f64, theta: f64, sigma: f64) -> PyResult<Self> {
        CirParams::new(kappa, theta, sigma).py_err().map(Self)
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa()
    }
    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }
    /// Rate of the gamma stationary law, `2κ/σ²`.
    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }
    /// Shape of the gamma stationary law, `2κθ/σ²`.
    #[getter]
    fn b(&self) -> f64 {
        self.0.b()
    }

    /// `"entrance"` or `"reflecting"`.
    fn boundary(&self) -> &'static str {
        match self.0.classify_boundary() {
            Boundary::Entrance => "entrance",
            Boundary::Reflecting => "reflecting",
        }
    }

    fn stationary_density(&self, x: f64) -> f64 {
        self.0.stationary_density(x)
    }

    /// `E_x[e^{−β∫₀ᵗX ds − zX_t}]` in closed form.
    fn charfun_affine(&self, t: f64, beta: f64, z: Complex64, x: f64) -> Complex64 {
        self.0.charfun_affine(t, beta, z, x)
    }

    /// Killed transition density in `y` (Lebesgue measure).
    #[pyo3(signature = (t, x, y, beta = 0.0))]
    fn transition_density(&self, t: f64, x: f64, y: f64, beta: f64) -> PyResult<f64> {
        self.0.transition_density(beta, t, x, y).py_err()
    }

    fn __repr__(&self) -> String {
        format!("CirParams(kappa={}, theta={}, sigma={})", self.0.kappa(), self.0.theta(), self.0.sigma())
    }
}

/// Subordinator with drift `γ` and tempered-stable jumps.
#[pyclass(name = "Subordinator", frozen, from_py_object)]
#[derive(Clone)]
pub struct PySubordinator(SubordinatorSpec);

#[pymethods]
impl PySubordinator {
    #[staticmethod]
    fn pure_drift(gamma: f64) -> PyResult<Self> {
        SubordinatorSpec::pure_drift(gamma).py_err().map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (c, alpha, eta, gamma = 0.0))]
    fn tempered_stable(c: f64, alpha: f64, eta: f64, gamma: f64) -> PyResult<Self> {
        SubordinatorSpec::tempered_stable(gamma, c, alpha, eta).py_err().map(Self)
    }

    #[staticmethod]
    fn inverse_gaussian(c: f64, eta: f64) -> PyResult<Self> {
        SubordinatorSpec::inverse_gaussian(c, eta).py_err().map(Self)
    }

    #[staticmethod]
    fn gamma_process(c: f64, eta: f64) -> PyResult<Self> {
        SubordinatorSpec::gamma_process(c, eta).py_err().map(Self)
    }

    #[staticmethod]
    fn compound_poisson(rate: f64, eta: f64) -> PyResult<Self> {
        SubordinatorSpec::compound_poisson(rate, eta).py_err().map(Self)
    }

    fn laplace_exponent(&self, lam: f64) -> f64 {
        self.0.laplace_exponent(lam)
    }

    fn mean_rate(&self) -> f64 {
        self.0.mean_rate()
    }

    /// `n` independent increments over `dt` from a ChaCha8 stream seeded with `seed`.
    fn sample(&self, py: Python<'_>, dt: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        py.detach(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| self.0.sample_increment(dt, &mut rng)).collect::<subcir::Result<Vec<f64>>>()
        })
        .py_err()
    }
}

/// The subordinate CIR model.
#[pyclass(name = "SubCirModel", frozen)]
pub struct PySubCirModel(SubCirModel);

#[pymethods]
impl PySubCirModel {
    #[new]
    #[pyo3(signature = (cir, subordinator, n_max = 200, tol = 1e-10, t_min = 1e-3, rel_tol = 1e-8))]
    fn new(cir: PyCirParams, subordinator: PySubordinator, n_max: usize, tol: f64, t_min: f64, rel_tol: f64) -> PyResult<Self> {
        let truncation = Truncation { n_max, tol, t_min };
        SubCirModel::new(cir.0, subordinator.0, truncation, QuadConfig::with_rel_tol(rel_tol))
            .py_err()
            .map(Self)
    }

    /// `φ(λ_n^β)`.
    #[pyo3(signature = (n, beta = 1.0))]
    fn sub_eigenvalue(&self, n: usize, beta: f64) -> PyResult<f64> {
        self.0.sub_eigenvalue(beta, n).py_err()
    }

    #[pyo3(signature = (horizon, x, defaulted = false))]
    fn survival_probability(&self, horizon: f64, x: f64, defaulted: bool) -> PyResult<f64> {
        self.0.survival_probability(horizon, x, defaulted).py_err()
    }

    fn credit_spread(&self, horizon: f64, x: f64) -> PyResult<f64> {
        self.0.credit_spread(horizon, x).py_err()
    }

    fn asymptotic_spread(&self) -> f64 {
        self.0.asymptotic_spread()
    }

    fn killing_rate(&self, x: f64) -> PyResult<f64> {
        self.0.killing_rate(x).py_err()
    }

    #[pyo3(signature = (x, y, beta = 0.0))]
    fn levy_density(&self, x: f64, y: f64, beta: f64) -> PyResult<f64> {
        self.0.levy_density_state(beta, x, y).py_err()
    }

    #[pyo3(signature = (x, beta = 0.0))]
    fn drift(&self, x: f64, beta: f64) -> PyResult<f64> {
        self.0.drift_sub(beta, x).py_err()
    }

    /// `∫_{|y|≤level} y π^{β,φ}(x, y) dy`.
    #[pyo3(signature = (x, level, beta = 0.0))]
    fn truncated_jump_moment(&self, x: f64, level: f64, beta: f64) -> PyResult<f64> {
        self.0.truncated_jump_moment(beta, x, level).py_err()
    }

    /// Defaultable zero-coupon bond with recovery of face at maturity.
    #[pyo3(signature = (t, maturity, x, rate, recovery, defaulted = false))]
    fn zcb(&self, t: f64, maturity: f64, x: f64, rate: f64, recovery: f64, defaulted: bool) -> PyResult<f64> {
        zcb_defaultable(&self.0, t, maturity, x, defaulted, rate, recovery).py_err()
    }

    /// Default-free bond when `X^φ` is read as a short rate.
    fn riskfree_bond(&self, t: f64, maturity: f64, x: f64) -> PyResult<f64> {
        riskfree_bond_subcir(&self.0, t, maturity, x).py_err()
    }

    /// Monte Carlo survival probabilities and standard errors at each horizon.
    #[pyo3(signature = (horizons, x, n_paths, seed, h = DEFAULT_STEP, antithetic = false))]
    fn estimate_survival(
        &self,
        py: Python<'_>,
        horizons: Vec<f64>,
        x: f64,
        n_paths: usize,
        seed: u64,
        h: f64,
        antithetic: bool,
    ) -> PyResult<Vec<(f64, f64)>> {
        let mut grid = vec![0.0];
        grid.extend(horizons.iter().copied().filter(|&t| t > 0.0));
        let cfg = path_config(grid, n_paths, seed, h, antithetic)?;
        py.detach(|| estimate_survival_curve(&self.0, &horizons, x, &cfg)).py_err()
    }

    /// Paths on the business grid `times`, as a dict of flat columns
    /// `path_id, t, T_t, X_phi, D_phi, k_phi_of_X`.
    #[pyo3(signature = (x0, times, n_paths, seed, h = DEFAULT_STEP))]
    fn simulate<'py>(&self, py: Python<'py>, x0: f64, times: Vec<f64>, n_paths: usize, seed: u64, h: f64) -> PyResult<Bound<'py, PyDict>> {
        let cfg = path_config(times, n_paths, seed, h, false)?;
        let (paths, table) = py
            .detach(|| -> subcir::Result<_> { Ok((simulate_subcir(&self.0, x0, &cfg)?, KillingRateTable::standard(&self.0)?)) })
            .py_err()?;
        let rows = paths.paths.len() * paths.business_times.len();
        let mut path_id = Vec::with_capacity(rows);
        let mut t = Vec::with_capacity(rows);
        let mut sub_t = Vec::with_capacity(rows);
        let mut x_phi = Vec::with_capacity(rows);
        let mut d_phi = Vec::with_capacity(rows);
        let mut k_phi = Vec::with_capacity(rows);
        for p in &paths.paths {
            for (i, &s) in paths.business_times.iter().enumerate() {
                path_id.push(p.path_id);
                t.push(s);
                sub_t.push(p.sub_times[i]);
                x_phi.push(p.x_phi[i]);
                d_phi.push(p.d_phi[i]);
                k_phi.push(table.eval(p.x_phi[i]));
            }
        }
        let out = PyDict::new(py);
        out.set_item("path_id", path_id)?;
        out.set_item("t", t)?;
        out.set_item("T_t", sub_t)?;
        out.set_item("X_phi", x_phi)?;
        out.set_item("D_phi", d_phi)?;
        out.set_item("k_phi_of_X", k_phi)?;
        Ok(out)
    }
}

fn path_config(times: Vec<f64>, n_paths: usize, seed: u64, h: f64, antithetic: bool) -> PyResult<PathConfig> {
    let cfg = PathConfig {
        business_times: times,
        h,
        n_paths,
        seed,
        antithetic,
        keep_background: false,
    };
    cfg.validate().py_err()?;
    Ok(cfg)
}

#[pymodule]
pub fn subcir_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCirParams>()?;
    m.add_class::<PySubordinator>()?;
    m.add_class::<PySubCirModel>()?;
    Ok(())
}
