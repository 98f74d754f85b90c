//! Run configuration: a single JSON document, validated in one pass so that
//! every problem is reported together with its JSON pointer.
//!
//! The schema and defaults are documented in `docs/config.md`.

use serde_json::{Map, Value};

use subcir::cir::CirParams;
use subcir::mc::{PathConfig, DEFAULT_STEP};
use subcir::quad::QuadConfig;
use subcir::subcir::{SubCirModel, Truncation};
use subcir::subordinators::{LevyFamily, SubordinatorSpec};

/// One schema violation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// JSON pointer to the offending key (`""` for the whole document).
    pub pointer: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub gamma: f64,
    /// `0` selects a subordinator without jumps.
    pub c: f64,
    pub alpha: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub n_max: usize,
    pub tol: f64,
    pub t_min: f64,
    pub rel_tol: f64,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
    pub antithetic: bool,
    pub business_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub betas: Vec<f64>,
    pub terms: usize,
}

/// A state and a list of horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    pub x: f64,
    pub horizons: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Maturity,
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceConfig {
    pub x: f64,
    pub t: f64,
    pub maturities: Vec<f64>,
    pub rate: f64,
    pub promised: f64,
    pub recovery: f64,
    pub timing: Timing,
    pub defaulted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateConfig {
    pub n_paths: usize,
    pub x: f64,
    pub horizons: Vec<f64>,
    pub compensator_horizon: f64,
    pub sampler_draws: usize,
    pub expected_asymptotic_spread: Option<f64>,
    pub asymptotic_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub numerics: NumericsConfig,
    pub mc: McConfig,
    pub spectrum: SpectrumConfig,
    pub survival: CurveConfig,
    pub spreads: CurveConfig,
    pub price: PriceConfig,
    pub levy: LevyConfig,
    pub intensity: Vec<f64>,
    pub simulate: SimulateConfig,
    pub validate: ValidateConfig,
}

impl RunConfig {
    /// Parses and validates a JSON document, collecting every issue.
    pub fn from_json(text: &str) -> Result<Self, Vec<ConfigIssue>> {
        let doc: Value = serde_json::from_str(text).map_err(|e| {
            vec![ConfigIssue {
                pointer: String::new(),
                message: format!("malformed JSON: {e}"),
            }]
        })?;
        let mut r = Reader::default();
        let cfg = r.run_config(&doc);
        match cfg {
            Some(cfg) if r.issues.is_empty() => Ok(cfg),
            _ => Err(r.issues),
        }
    }

    pub fn cir(&self) -> subcir::Result<CirParams> {
        CirParams::new(self.model.kappa, self.model.theta, self.model.sigma)
    }

    pub fn subordinator(&self) -> subcir::Result<SubordinatorSpec> {
        let m = &self.model;
        let family = if m.c == 0.0 {
            LevyFamily::None
        } else {
            LevyFamily::TemperedStable {
                c: m.c,
                alpha: m.alpha,
                eta: m.eta,
            }
        };
        SubordinatorSpec::new(m.gamma, family)
    }

    pub fn truncation(&self) -> Truncation {
        Truncation {
            n_max: self.numerics.n_max,
            tol: self.numerics.tol,
            t_min: self.numerics.t_min,
        }
    }

    pub fn quadrature(&self) -> QuadConfig {
        QuadConfig {
            rel_tol: self.numerics.rel_tol,
            max_evals: self.numerics.budget,
            ..QuadConfig::default()
        }
    }

    pub fn model(&self) -> subcir::Result<SubCirModel> {
        SubCirModel::new(self.cir()?, self.subordinator()?, self.truncation(), self.quadrature())
    }

    /// Path settings of the `mc` block on its own business grid.
    pub fn path_config(&self) -> subcir::Result<PathConfig> {
        self.path_config_on(self.mc.business_times.clone(), self.mc.n_paths, self.mc.seed)
    }

    pub fn path_config_on(&self, grid: Vec<f64>, n_paths: usize, seed: u64) -> subcir::Result<PathConfig> {
        let cfg = PathConfig {
            business_times: grid,
            h: self.mc.h,
            n_paths,
            seed,
            antithetic: self.mc.antithetic,
            keep_background: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Escapes a key for use in a JSON pointer.
fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn child(ptr: &str, key: &str) -> String {
    format!("{ptr}/{}", escape(key))
}

#[derive(Clone, Copy)]
enum Bound {
    Any,
    Positive,
    NonNegative,
    BelowOne,
    UnitInterval,
}

impl Bound {
    fn check(self, v: f64) -> Option<&'static str> {
        let ok = match self {
            Bound::Any => true,
            Bound::Positive => v > 0.0,
            Bound::NonNegative => v >= 0.0,
            Bound::BelowOne => v < 1.0,
            Bound::UnitInterval => (0.0..=1.0).contains(&v),
        };
        if ok {
            return None;
        }
        Some(match self {
            Bound::Any => unreachable!(),
            Bound::Positive => "must be positive",
            Bound::NonNegative => "must be nonnegative",
            Bound::BelowOne => "must be below 1",
            Bound::UnitInterval => "must lie in [0, 1]",
        })
    }
}

#[derive(Default)]
struct Reader {
    issues: Vec<ConfigIssue>,
}

/// Fallback used after an issue has been recorded; the config is discarded.
const BAD: f64 = f64::NAN;

impl Reader {
    fn issue(&mut self, pointer: String, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            pointer,
            message: message.into(),
        });
    }

    /// The object at `ptr`, with unknown keys reported. A missing optional
    /// block reads as empty.
    fn object<'a>(&mut self, v: Option<&'a Value>, ptr: &str, allowed: &[&str], required: bool) -> Option<&'a Map<String, Value>> {
        static EMPTY: std::sync::OnceLock<Map<String, Value>> = std::sync::OnceLock::new();
        match v {
            None if required => {
                self.issue(ptr.to_string(), "required block is missing");
                None
            }
            None => Some(EMPTY.get_or_init(Map::new)),
            Some(Value::Object(map)) => {
                for key in map.keys() {
                    if !allowed.contains(&key.as_str()) {
                        self.issue(child(ptr, key), format!("unknown key (expected one of: {})", allowed.join(", ")));
                    }
                }
                Some(map)
            }
            Some(_) => {
                self.issue(ptr.to_string(), "must be an object");
                None
            }
        }
    }

    fn number(&mut self, obj: &Map<String, Value>, ptr: &str, key: &str, default: Option<f64>, bound: Bound) -> f64 {
        let p = child(ptr, key);
        match obj.get(key) {
            None => default.unwrap_or_else(|| {
                self.issue(p, "required key is missing");
                BAD
            }),
            Some(v) => self.number_value(v, p, bound),
        }
    }

    fn number_value(&mut self, v: &Value, p: String, bound: Bound) -> f64 {
        match v.as_f64() {
            Some(x) if x.is_finite() => {
                if let Some(msg) = bound.check(x) {
                    self.issue(p, format!("{msg}, got {x}"));
                    BAD
                } else {
                    x
                }
            }
            _ => {
                self.issue(p, "must be a finite number");
                BAD
            }
        }
    }

    fn optional_number(&mut self, obj: &Map<String, Value>, ptr: &str, key: &str, bound: Bound) -> Option<f64> {
        match obj.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => Some(self.number_value(v, child(ptr, key), bound)),
        }
    }

    fn integer(&mut self, obj: &Map<String, Value>, ptr: &str, key: &str, default: u64, min: u64) -> u64 {
        let p = child(ptr, key);
        match obj.get(key) {
            None => default,
            Some(v) => match v.as_u64() {
                Some(n) if n >= min => n,
                Some(n) => {
                    self.issue(p, format!("must be at least {min}, got {n}"));
                    0
                }
                None => {
                    self.issue(p, format!("must be an integer of at least {min}, got {v}"));
                    0
                }
            },
        }
    }

    fn boolean(&mut self, obj: &Map<String, Value>, ptr: &str, key: &str, default: bool) -> bool {
        match obj.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.issue(child(ptr, key), "must be true or false");
                default
            }
        }
    }

    /// A grid given either as an array of numbers or as
    /// `{"start", "stop", "points"}` (evenly spaced, both ends included).
    fn grid(&mut self, obj: &Map<String, Value>, ptr: &str, key: &str, default: Vec<f64>, bound: Bound, increasing: bool) -> Vec<f64> {
        let p = child(ptr, key);
        let values = match obj.get(key) {
            None => return default,
            Some(Value::Array(items)) => {
                if items.is_empty() {
                    self.issue(p.clone(), "must not be empty");
                }
                items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.number_value(v, format!("{p}/{i}"), bound))
                    .collect::<Vec<f64>>()
            }
            Some(v @ Value::Object(_)) => {
                let Some(spec) = self.object(Some(v), &p, &["start", "stop", "points"], true) else {
                    return Vec::new();
                };
                let start = self.number(spec, &p, "start", None, bound);
                let stop = self.number(spec, &p, "stop", None, bound);
                let points = self.integer(spec, &p, "points", 0, 2);
                if points == 0 && !spec.contains_key("points") {
                    self.issue(child(&p, "points"), "required key is missing");
                }
                if start.is_nan() || stop.is_nan() || points < 2 {
                    return Vec::new();
                }
                if stop <= start {
                    self.issue(child(&p, "stop"), format!("must exceed start = {start}"));
                    return Vec::new();
                }
                let last = (points - 1) as f64;
                (0..points)
                    .map(|i| if i + 1 == points { stop } else { start + (stop - start) * i as f64 / last })
                    .collect()
            }
            Some(_) => {
                self.issue(p, "must be an array of numbers or a {start, stop, points} object");
                return Vec::new();
            }
        };
        if increasing && values.iter().all(|v| !v.is_nan()) && values.windows(2).any(|w| w[1] <= w[0]) {
            self.issue(p, "must be strictly increasing");
        }
        values
    }

    fn run_config(&mut self, doc: &Value) -> Option<RunConfig> {
        let root = self.object(Some(doc), "", &[
            "model", "numerics", "mc", "spectrum", "survival", "spreads", "price", "levy", "intensity", "simulate", "validate",
        ], true)?;
        let model = self.model(root.get("model"));
        let numerics = self.numerics(root.get("numerics"));
        let mc = self.mc(root.get("mc"));
        let theta = model.as_ref().map_or(0.1, |m| m.theta);
        let spectrum = self.spectrum(root.get("spectrum"));
        let survival = self.curve(root.get("survival"), "/survival");
        let spreads = self.curve(root.get("spreads"), "/spreads");
        let price = self.price(root.get("price"));
        let levy = self.levy(root.get("levy"), theta);
        let intensity = self.intensity(root.get("intensity"));
        let simulate = self.simulate(root.get("simulate"));
        let validate = self.validate(root.get("validate"));

        let (model, numerics, mc, spectrum, survival, spreads, price, levy, intensity, simulate, validate) = (
            model?, numerics?, mc?, spectrum?, survival?, spreads?, price?, levy?, intensity?, simulate?, validate?,
        );
        self.cross_checks(&numerics, &mc, &spectrum, &survival, &spreads, &price, &validate);
        Some(RunConfig {
            model,
            numerics,
            mc,
            spectrum,
            survival,
            spreads,
            price,
            levy,
            intensity,
            simulate,
            validate,
        })
    }

    fn model(&mut self, v: Option<&Value>) -> Option<ModelConfig> {
        let ptr = "/model";
        let obj = self.object(v, ptr, &["kappa", "theta", "sigma", "subordinator"], true)?;
        let kappa = self.number(obj, ptr, "kappa", None, Bound::Positive);
        let theta = self.number(obj, ptr, "theta", None, Bound::Positive);
        let sigma = self.number(obj, ptr, "sigma", None, Bound::Positive);
        let sptr = "/model/subordinator";
        let sub = self.object(obj.get("subordinator"), sptr, &["gamma", "C", "alpha", "eta"], true)?;
        let gamma = self.number(sub, sptr, "gamma", Some(0.0), Bound::NonNegative);
        let c = self.number(sub, sptr, "C", Some(0.0), Bound::NonNegative);
        let (alpha, eta) = if c == 0.0 {
            (
                self.number(sub, sptr, "alpha", Some(0.5), Bound::BelowOne),
                self.number(sub, sptr, "eta", Some(1.0), Bound::Positive),
            )
        } else {
            (
                self.number(sub, sptr, "alpha", None, Bound::BelowOne),
                self.number(sub, sptr, "eta", None, Bound::Positive),
            )
        };
        if gamma == 0.0 && c == 0.0 {
            self.issue(sptr.to_string(), "needs a positive drift gamma or positive jump intensity C");
        }
        Some(ModelConfig {
            kappa,
            theta,
            sigma,
            gamma,
            c,
            alpha,
            eta,
        })
    }

    fn numerics(&mut self, v: Option<&Value>) -> Option<NumericsConfig> {
        let ptr = "/numerics";
        let obj = self.object(v, ptr, &["n_max", "tol", "t_min", "rel_tol", "budget"], false)?;
        let d = Truncation::default();
        let q = QuadConfig::default();
        let n_max = self.integer(obj, ptr, "n_max", d.n_max as u64, 8) as usize;
        if n_max > subcir::specfun::LAGUERRE_N_MAX {
            self.issue(child(ptr, "n_max"), format!("must not exceed {}", subcir::specfun::LAGUERRE_N_MAX));
        }
        Some(NumericsConfig {
            n_max,
            tol: self.number(obj, ptr, "tol", Some(d.tol), Bound::Positive),
            t_min: self.number(obj, ptr, "t_min", Some(d.t_min), Bound::Positive),
            rel_tol: self.number(obj, ptr, "rel_tol", Some(q.rel_tol), Bound::Positive),
            budget: self.integer(obj, ptr, "budget", q.max_evals as u64, 1) as usize,
        })
    }

    fn mc(&mut self, v: Option<&Value>) -> Option<McConfig> {
        let ptr = "/mc";
        let obj = self.object(v, ptr, &["n_paths", "h", "seed", "antithetic", "business_times"], false)?;
        let n_paths = self.integer(obj, ptr, "n_paths", 1000, 1) as usize;
        let antithetic = self.boolean(obj, ptr, "antithetic", false);
        if antithetic && n_paths % 2 == 1 {
            self.issue(child(ptr, "n_paths"), "must be even with antithetic pairs");
        }
        let default_grid = (0..=250).map(|i| i as f64 / 50.0).collect();
        Some(McConfig {
            n_paths,
            h: self.number(obj, ptr, "h", Some(DEFAULT_STEP), Bound::Positive),
            seed: self.integer(obj, ptr, "seed", 0, 0),
            antithetic,
            business_times: self.grid(obj, ptr, "business_times", default_grid, Bound::NonNegative, true),
        })
    }

    fn spectrum(&mut self, v: Option<&Value>) -> Option<SpectrumConfig> {
        let ptr = "/spectrum";
        let obj = self.object(v, ptr, &["betas", "terms"], false)?;
        let betas = self.grid(obj, ptr, "betas", vec![1.0, 0.0], Bound::NonNegative, false);
        for (i, &b) in betas.iter().enumerate() {
            if b != 0.0 && b != 1.0 && !b.is_nan() {
                self.issue(format!("{ptr}/betas/{i}"), format!("must be 0 or 1, got {b}"));
            }
        }
        Some(SpectrumConfig {
            betas,
            terms: self.integer(obj, ptr, "terms", 20, 1) as usize,
        })
    }

    fn curve(&mut self, v: Option<&Value>, ptr: &str) -> Option<CurveConfig> {
        let obj = self.object(v, ptr, &["x", "horizons"], false)?;
        Some(CurveConfig {
            x: self.number(obj, ptr, "x", Some(0.1), Bound::NonNegative),
            horizons: self.grid(obj, ptr, "horizons", (1..=10).map(f64::from).collect(), Bound::Positive, false),
        })
    }

    fn price(&mut self, v: Option<&Value>) -> Option<PriceConfig> {
        let ptr = "/price";
        let obj = self.object(v, ptr, &["x", "t", "maturities", "rate", "promised", "recovery", "timing", "defaulted"], false)?;
        let timing = match obj.get("timing") {
            None => Timing::Maturity,
            Some(Value::String(s)) if s == "maturity" => Timing::Maturity,
            Some(Value::String(s)) if s == "default" => Timing::Default,
            Some(_) => {
                self.issue(child(ptr, "timing"), "must be \"maturity\" or \"default\"");
                Timing::Maturity
            }
        };
        Some(PriceConfig {
            x: self.number(obj, ptr, "x", Some(0.1), Bound::NonNegative),
            t: self.number(obj, ptr, "t", Some(0.0), Bound::NonNegative),
            maturities: self.grid(obj, ptr, "maturities", (1..=10).map(f64::from).collect(), Bound::Positive, false),
            rate: self.number(obj, ptr, "rate", Some(0.0), Bound::NonNegative),
            promised: self.number(obj, ptr, "promised", Some(1.0), Bound::NonNegative),
            recovery: self.number(obj, ptr, "recovery", Some(0.0), Bound::UnitInterval),
            timing,
            defaulted: self.boolean(obj, ptr, "defaulted", false),
        })
    }

    fn levy(&mut self, v: Option<&Value>, theta: f64) -> Option<LevyConfig> {
        let ptr = "/levy";
        let obj = self.object(v, ptr, &["x", "y"], false)?;
        let x = self.grid(obj, ptr, "x", vec![0.1 * theta, theta, 2.0 * theta], Bound::Positive, false);
        let default_y = (0..=400).map(|i| -0.2 + 0.001 * i as f64).collect();
        Some(LevyConfig {
            x,
            y: self.grid(obj, ptr, "y", default_y, Bound::Any, false),
        })
    }

    fn intensity(&mut self, v: Option<&Value>) -> Option<Vec<f64>> {
        let ptr = "/intensity";
        let obj = self.object(v, ptr, &["x"], false)?;
        let default_x = (0..=100).map(|i| 0.005 * i as f64).collect();
        Some(self.grid(obj, ptr, "x", default_x, Bound::NonNegative, false))
    }

    fn simulate(&mut self, v: Option<&Value>) -> Option<SimulateConfig> {
        let ptr = "/simulate";
        let obj = self.object(v, ptr, &["x0"], false)?;
        Some(SimulateConfig {
            x0: self.number(obj, ptr, "x0", Some(0.1), Bound::NonNegative),
        })
    }

    fn validate(&mut self, v: Option<&Value>) -> Option<ValidateConfig> {
        let ptr = "/validate";
        let obj = self.object(v, ptr, &[
            "n_paths", "x", "horizons", "compensator_horizon", "sampler_draws", "expected_asymptotic_spread", "asymptotic_tol",
        ], false)?;
        Some(ValidateConfig {
            n_paths: self.integer(obj, ptr, "n_paths", 100_000, 2) as usize,
            x: self.number(obj, ptr, "x", Some(0.1), Bound::NonNegative),
            horizons: self.grid(obj, ptr, "horizons", vec![1.0, 3.0, 5.0], Bound::Positive, true),
            compensator_horizon: self.number(obj, ptr, "compensator_horizon", Some(3.0), Bound::Positive),
            sampler_draws: self.integer(obj, ptr, "sampler_draws", 1_000_000, 2) as usize,
            expected_asymptotic_spread: self.optional_number(obj, ptr, "expected_asymptotic_spread", Bound::NonNegative),
            asymptotic_tol: self.number(obj, ptr, "asymptotic_tol", Some(5e-4), Bound::Positive),
        })
    }

    /// Constraints spanning several blocks.
    #[allow(clippy::too_many_arguments)]
    fn cross_checks(
        &mut self,
        numerics: &NumericsConfig,
        mc: &McConfig,
        spectrum: &SpectrumConfig,
        survival: &CurveConfig,
        spreads: &CurveConfig,
        price: &PriceConfig,
        validate: &ValidateConfig,
    ) {
        let t_min = numerics.t_min;
        let floor = |r: &mut Self, ptr: &str, values: &[f64]| {
            for (i, &t) in values.iter().enumerate() {
                if t < t_min {
                    r.issue(format!("{ptr}/{i}"), format!("horizon {t} is below numerics.t_min = {t_min}"));
                }
            }
        };
        floor(self, "/survival/horizons", &survival.horizons);
        floor(self, "/spreads/horizons", &spreads.horizons);
        floor(self, "/validate/horizons", &validate.horizons);
        for (i, &m) in price.maturities.iter().enumerate() {
            if m - price.t < t_min {
                self.issue(format!("/price/maturities/{i}"), format!("must exceed t + numerics.t_min, got {m}"));
            }
        }
        if spectrum.terms > numerics.n_max {
            self.issue("/spectrum/terms".into(), format!("must not exceed numerics.n_max = {}", numerics.n_max));
        }
        if mc.business_times.first().is_some_and(|&t| t != 0.0) {
            self.issue("/mc/business_times/0".into(), "the business grid must start at 0");
        }
    }
}
