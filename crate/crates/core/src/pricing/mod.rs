//! European option pricing under CEV dynamics and the Black–Scholes comparator.

mod black_scholes;
mod cev_formula;
mod greeks;
mod implied;
mod replication;

pub use black_scholes::{bs_delta, bs_price};
pub use cev_formula::{
    cev_call, cev_price, cev_price_eval, cev_put, chi_square_args, liquidity_correction, ChiSquareArgs, PriceEval,
};
pub use greeks::{cev_delta, cev_delta_with_step, emission_adjusted_price, greeks, GreeksReport, FD_RELATIVE_STEP};
pub use implied::{implied_vol, smile, SmilePoint};
pub use replication::{replication_premium_bound, ReplicationEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

/// A European option on the pool token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub spot: f64,
    pub strike: f64,
    /// Years to expiry.
    pub maturity: f64,
    /// Continuously compounded annual rate.
    pub rate: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn new(spot: f64, strike: f64, maturity: f64, rate: f64, kind: OptionKind) -> Result<Self> {
        for (v, name) in [(spot, "spot"), (strike, "strike"), (maturity, "maturity")] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !rate.is_finite() {
            return Err(Error::domain(format!("rate must be finite, got {rate}")));
        }
        Ok(Self { spot, strike, maturity, rate, kind })
    }

    pub fn call(spot: f64, strike: f64, maturity: f64, rate: f64) -> Result<Self> {
        Self::new(spot, strike, maturity, rate, OptionKind::Call)
    }

    pub fn put(spot: f64, strike: f64, maturity: f64, rate: f64) -> Result<Self> {
        Self::new(spot, strike, maturity, rate, OptionKind::Put)
    }

    pub fn with_kind(&self, kind: OptionKind) -> Self {
        Self { kind, ..*self }
    }

    pub fn with_spot(&self, spot: f64) -> Self {
        Self { spot, ..*self }
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        Self { strike, ..*self }
    }

    pub fn with_maturity(&self, maturity: f64) -> Self {
        Self { maturity, ..*self }
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    /// Zero-volatility value: the payoff at the forward, discounted.
    pub fn discounted_intrinsic(&self) -> f64 {
        let pv_strike = self.strike * self.discount();
        match self.kind {
            OptionKind::Call => (self.spot - pv_strike).max(0.0),
            OptionKind::Put => (pv_strike - self.spot).max(0.0),
        }
    }

    /// No-arbitrage upper bound on the price.
    pub fn upper_bound(&self) -> f64 {
        match self.kind {
            OptionKind::Call => self.spot,
            OptionKind::Put => self.strike * self.discount(),
        }
    }

    pub fn payoff(&self, terminal: f64) -> f64 {
        match self.kind {
            OptionKind::Call => (terminal - self.strike).max(0.0),
            OptionKind::Put => (self.strike - terminal).max(0.0),
        }
    }
}
