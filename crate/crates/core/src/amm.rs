//! Constant-weighted-product pool mechanics.
//!
//! A pool holds `x` TAO (numeraire, weight `w`) and `y` alpha, with invariant
//! `K = x^w y^(1-w)`. For `w = 1/2` this is the constant-product pool
//! `x·y = k` with `K = √k`. Pools charge no swap fee unless one is passed
//! explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_non_negative, Error, Result};

/// Smallest reserve, in token units, a pool may hold.
pub const RESERVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolState {
    tao_reserve: f64,
    alpha_reserve: f64,
    weight: f64,
}

impl PoolState {
    pub fn new(tao_reserve: f64, alpha_reserve: f64, weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight < 1.0) {
            return Err(Error::domain(format!("pool weight must lie in (0, 1), got {weight}")));
        }
        check_reserve(tao_reserve, "TAO reserve")?;
        check_reserve(alpha_reserve, "alpha reserve")?;
        Ok(Self { tao_reserve, alpha_reserve, weight })
    }

    /// Constant-product pool (`w = 1/2`).
    pub fn constant_product(tao_reserve: f64, alpha_reserve: f64) -> Result<Self> {
        Self::new(tao_reserve, alpha_reserve, 0.5)
    }

    /// Constant-product pool with the given invariant `k` and marginal price.
    pub fn from_price_and_k(price: f64, k: f64) -> Result<Self> {
        if !(price > 0.0 && k > 0.0) {
            return Err(Error::domain(format!("price and k must be positive, got {price}, {k}")));
        }
        Self::constant_product((k * price).sqrt(), (k / price).sqrt())
    }

    pub fn tao_reserve(&self) -> f64 {
        self.tao_reserve
    }

    pub fn alpha_reserve(&self) -> f64 {
        self.alpha_reserve
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `K = x^w y^(1-w)`.
    pub fn invariant(&self) -> f64 {
        (self.weight * self.tao_reserve.ln() + (1.0 - self.weight) * self.alpha_reserve.ln()).exp()
    }

    /// Reserve product `k = x·y`; the invariant squared when `w = 1/2`.
    pub fn product(&self) -> f64 {
        self.tao_reserve * self.alpha_reserve
    }

    /// Marginal price of alpha in TAO, `((1-w)/w)·(x/y)`.
    pub fn marginal_price(&self) -> f64 {
        (1.0 - self.weight) / self.weight * self.tao_reserve / self.alpha_reserve
    }

    pub fn is_constant_product(&self) -> bool {
        self.weight == 0.5
    }

    /// Swap `delta_x` TAO into the pool (negative: take TAO out) with no fee.
    ///
    /// Returns the alpha paid out (negative when alpha must be paid in) and the
    /// new pool. The invariant is preserved.
    pub fn execute_swap(&self, delta_x: f64) -> Result<(f64, PoolState)> {
        self.execute_swap_with_fee(delta_x, 0.0)
    }

    /// Swap with a proportional fee `fee` on the input side, retained by the pool.
    pub fn execute_swap_with_fee(&self, delta_x: f64, fee: f64) -> Result<(f64, PoolState)> {
        require_finite(delta_x, "delta_x")?;
        if !(0.0..1.0).contains(&fee) {
            return Err(Error::domain(format!("fee must lie in [0, 1), got {fee}")));
        }
        if delta_x == 0.0 {
            return Ok((0.0, *self));
        }
        let x = self.tao_reserve;
        let y = self.alpha_reserve;
        let new_x = x + delta_x;
        if new_x <= RESERVE_FLOOR {
            return Err(Error::ReserveDepletion(format!(
                "withdrawing {} TAO would leave {new_x} in a pool holding {x}",
                -delta_x
            )));
        }
        let exponent = self.weight / (1.0 - self.weight);
        let new_y;
        if delta_x > 0.0 {
            // Only the net-of-fee input moves along the curve.
            let curve_x = x + (1.0 - fee) * delta_x;
            let curve_y = y * (x / curve_x).powf(exponent);
            new_y = curve_y;
        } else {
            let curve_y = y * (x / new_x).powf(exponent);
            // Alpha paid in is grossed up by the fee, which stays in the pool.
            new_y = y + (curve_y - y) / (1.0 - fee);
        }
        if new_y <= RESERVE_FLOOR {
            return Err(Error::ReserveDepletion(format!("alpha reserve would fall to {new_y}")));
        }
        let pool = PoolState { tao_reserve: new_x, alpha_reserve: new_y, weight: self.weight };
        Ok((y - new_y, pool))
    }

    /// Inject `delta_tau` TAO together with the alpha that keeps the marginal
    /// price fixed (`Δα = Δτ/P` for a constant-product pool).
    pub fn apply_pool_emission(&self, delta_tau: f64) -> Result<PoolState> {
        require_non_negative(delta_tau, "emission injection")?;
        let new_x = self.tao_reserve + delta_tau;
        let new_y = self.alpha_reserve * (new_x / self.tao_reserve);
        Ok(PoolState { tao_reserve: new_x, alpha_reserve: new_y, weight: self.weight })
    }

    /// Add reserves without any price constraint (used by emission schedules
    /// that specify both injection rates).
    pub fn inject(&self, delta_tau: f64, delta_alpha: f64) -> Result<PoolState> {
        require_non_negative(delta_tau, "TAO injection")?;
        require_non_negative(delta_alpha, "alpha injection")?;
        Ok(PoolState {
            tao_reserve: self.tao_reserve + delta_tau,
            alpha_reserve: self.alpha_reserve + delta_alpha,
            weight: self.weight,
        })
    }
}

fn check_reserve(v: f64, name: &str) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::domain(format!("{name} must be finite, got {v}")));
    }
    if v < RESERVE_FLOOR {
        return Err(Error::ReserveDepletion(format!("{name} {v} is below the floor {RESERVE_FLOOR}")));
    }
    Ok(())
}

/// Approximate slippage, in TAO, of trading `alpha_qty` alpha through a
/// constant-product pool: `P²·Δ²/(2k)`.
pub fn slippage_cost(pool: &PoolState, alpha_qty: f64) -> Result<f64> {
    if !pool.is_constant_product() {
        return Err(Error::Unsupported(format!(
            "slippage approximation needs a constant-product pool, weight is {}",
            pool.weight()
        )));
    }
    require_finite(alpha_qty, "alpha quantity")?;
    Ok(slippage_from_price(pool.marginal_price(), pool.product(), alpha_qty))
}

pub(crate) fn slippage_from_price(price: f64, k: f64, alpha_qty: f64) -> f64 {
    price * price * alpha_qty * alpha_qty / (2.0 * k)
}

/// Emission injection rates into a pool, per year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionRates {
    /// TAO injected into the pool per year.
    pub e_tao: f64,
    /// Alpha injected into the pool per year.
    pub e_alpha: f64,
    /// Block spacing in years; injections arrive in block-sized lumps.
    pub block_interval: f64,
}

/// Roughly 12-second blocks.
pub const DEFAULT_BLOCK_INTERVAL: f64 = 12.0 / (365.0 * 86_400.0);

impl EmissionRates {
    pub fn new(e_tao: f64, e_alpha: f64, block_interval: f64) -> Result<Self> {
        require_non_negative(e_tao, "e_tao")?;
        require_non_negative(e_alpha, "e_alpha")?;
        if !(block_interval > 0.0 && block_interval.is_finite()) {
            return Err(Error::domain(format!("block interval must be positive, got {block_interval}")));
        }
        Ok(Self { e_tao, e_alpha, block_interval })
    }

    /// Rates from per-block amounts.
    pub fn per_block(tao_per_block: f64, alpha_per_block: f64, block_interval: f64) -> Result<Self> {
        Self::new(tao_per_block / block_interval, alpha_per_block / block_interval, block_interval)
    }

    /// TAO injection with the alpha rate that keeps `price` fixed.
    pub fn price_preserving(e_tao: f64, price: f64) -> Result<Self> {
        Self::new(e_tao, e_tao / price, DEFAULT_BLOCK_INTERVAL)
    }

    /// Invariant growth rate `dk/dt = y·e_TAO + x·e_α` at the given pool state.
    pub fn k_growth_rate(&self, pool: &PoolState) -> f64 {
        pool.alpha_reserve() * self.e_tao + pool.tao_reserve() * self.e_alpha
    }
}
