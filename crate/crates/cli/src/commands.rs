//! Table-producing subcommands. Each returns the rows in the documented
//! column order; writing is left to the caller.

use subcir::mc::{simulate_subcir, KillingRateTable, PathSet};
use subcir::pricing::{price_claim, Claim, Payoff, RecoveryTiming};
use subcir::subcir::{SubCirModel, JUMP_SIZE_MIN};
use subcir::Result;

use crate::config::{RunConfig, Timing};
use crate::output::{Cell, Table};

/// `beta, n, lambda, phi_lambda, norm`: `λ_n^β`, `φ(λ_n^β)` and `N_n^β`.
pub fn spectrum(cfg: &RunConfig, m: &SubCirModel) -> Result<Table> {
    let mut table = Table::new(&["beta", "n", "lambda", "phi_lambda", "norm"]);
    for &beta in &cfg.spectrum.betas {
        let sd = m.spectral(beta)?;
        for n in 1..=cfg.spectrum.terms {
            table.push(vec![
                Cell::Num(beta),
                Cell::Int(n as u64),
                Cell::Num(sd.eigenvalue(n)),
                Cell::Num(m.sub_eigenvalue(beta, n)?),
                Cell::Num(sd.norm(n)),
            ]);
        }
    }
    Ok(table)
}

/// `T, Q`.
pub fn survival(cfg: &RunConfig, m: &SubCirModel) -> Result<Table> {
    let c = &cfg.survival;
    let mut table = Table::new(&["T", "Q"]);
    for &t in &c.horizons {
        table.push(vec![Cell::Num(t), Cell::Num(m.survival_probability(t, c.x, false)?)]);
    }
    Ok(table)
}

/// `T, S`, closed by the record `inf, S_inf`.
pub fn spreads(cfg: &RunConfig, m: &SubCirModel) -> Result<Table> {
    let c = &cfg.spreads;
    let mut table = Table::new(&["T", "S"]);
    for &t in &c.horizons {
        table.push(vec![Cell::Num(t), Cell::Num(m.credit_spread(t, c.x)?)]);
    }
    table.push(vec![Cell::Num(f64::INFINITY), Cell::Num(m.asymptotic_spread())]);
    Ok(table)
}

/// `T, price` for the claim of the `price` block at each maturity.
pub fn price(cfg: &RunConfig, m: &SubCirModel) -> Result<Table> {
    let c = &cfg.price;
    let mut table = Table::new(&["T", "price"]);
    for &maturity in &c.maturities {
        let (recovery, timing) = match c.timing {
            Timing::Maturity => (Payoff::Constant(c.recovery), RecoveryTiming::AtMaturity),
            Timing::Default => (Payoff::Constant(0.0), RecoveryTiming::AtDefault(Payoff::Constant(c.recovery))),
        };
        let claim = Claim::new(maturity, c.rate, Payoff::Constant(c.promised), recovery, timing)?;
        table.push(vec![Cell::Num(maturity), Cell::Num(price_claim(m, &claim, c.t, c.x, c.defaulted)?)]);
    }
    Ok(table)
}

/// `x, y, pi0_phi`. Jump sizes below the resolution `JUMP_SIZE_MIN` are
/// skipped.
pub fn levy(cfg: &RunConfig, m: &SubCirModel) -> Result<Table> {
    let mut table = Table::new(&["x", "y", "pi0_phi"]);
    for &x in &cfg.levy.x {
        for &y in cfg.levy.y.iter().filter(|y| y.abs() >= JUMP_SIZE_MIN) {
            table.push(vec![Cell::Num(x), Cell::Num(y), Cell::Num(m.levy_density_state(0.0, x, y)?)]);
        }
    }
    Ok(table)
}

/// `x, k_phi`.
pub fn intensity(cfg: &RunConfig, m: &SubCirModel) -> Result<Table> {
    let mut table = Table::new(&["x", "k_phi"]);
    for &x in &cfg.intensity {
        table.push(vec![Cell::Num(x), Cell::Num(m.killing_rate(x)?)]);
    }
    Ok(table)
}

/// Paths of the `mc` block from `simulate.x0`, with the killing-rate table
/// used for the `k_phi_of_X` column.
pub fn simulate(cfg: &RunConfig, m: &SubCirModel) -> Result<(PathSet, KillingRateTable)> {
    let paths = simulate_subcir(m, cfg.simulate.x0, &cfg.path_config()?)?;
    Ok((paths, KillingRateTable::standard(m)?))
}

/// `path_id, t, T_t, X_phi, D_phi, k_phi_of_X`, matching
/// [`PathSet::write_csv_with_intensity`].
pub fn path_table(paths: &PathSet, k: &KillingRateTable) -> Table {
    let mut table = Table::new(&["path_id", "t", "T_t", "X_phi", "D_phi", "k_phi_of_X"]);
    for p in &paths.paths {
        for (i, &t) in paths.business_times.iter().enumerate() {
            table.push(vec![
                Cell::Int(p.path_id as u64),
                Cell::Num(t),
                Cell::Num(p.sub_times[i]),
                Cell::Num(p.x_phi[i]),
                Cell::Int(u64::from(p.d_phi[i])),
                Cell::Num(k.eval(p.x_phi[i])),
            ]);
        }
    }
    table
}
