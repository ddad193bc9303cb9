//! Minimal-rate feature selection: the smallest channel count meeting an
//! STII threshold, found by binary search, with the transmit-everything
//! fallback when the threshold is unreachable at the current BER.

use serde::{Deserialize, Serialize};

use crate::channel::{theoretical_ber, ChannelSpec};
use crate::error::{Error, Result};
use crate::feature::{FeatureShape, SortedImportance};
use crate::stii::{phi_inverse, stii, MappingFunction, StiiConfig};

/// Rate-formula parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    /// Average transmission interval between feature blocks, seconds (Ts).
    pub symbol_interval: f64,
    /// Modulation order U.
    pub modulation_order: u32,
}

impl RateConfig {
    pub fn new(symbol_interval: f64, modulation_order: u32) -> Result<Self> {
        if !symbol_interval.is_finite() || symbol_interval <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "symbol interval must be positive, got {symbol_interval}"
            )));
        }
        if modulation_order < 2 {
            return Err(Error::InvalidArgument(format!(
                "modulation order must be >= 2, got {modulation_order}"
            )));
        }
        Ok(Self {
            symbol_interval,
            modulation_order,
        })
    }
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            symbol_interval: 0.05,
            modulation_order: 2,
        }
    }
}

/// Outcome of a rate-control decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDecision {
    /// Selected channel count, 1..=C.
    pub m: usize,
    /// M * L * log2(U) / Ts, bits per second.
    pub rate_bps: f64,
    /// STII achieved at the selected M.
    pub eta_achieved: f64,
    /// True when the threshold was unreachable and M = C was forced.
    pub fallback: bool,
}

/// `RateDecision` plus the context it was made in, as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateDecisionReport {
    pub format_version: u32,
    pub m: usize,
    pub rate_bps: f64,
    pub eta_achieved: f64,
    pub fallback: bool,
    pub snr_db: f64,
    pub tau: f64,
}

impl RateDecisionReport {
    pub fn new(decision: &RateDecision, snr_db: f64, tau: f64) -> Self {
        Self {
            format_version: 1,
            m: decision.m,
            rate_bps: decision.rate_bps,
            eta_achieved: decision.eta_achieved,
            fallback: decision.fallback,
            snr_db,
            tau,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Smallest `M` in `[1, C]` with `stii(sw, M, ber, cfg) >= eta_star`.
///
/// STII is non-decreasing in `M` whenever `1 - ber >= P0`, so a binary
/// search over `[1, C]` finds the boundary. If even `M = C` misses the
/// threshold the decision falls back to `(C, stii at C, fallback = true)`
/// to maximize robustness.
pub fn min_channels(
    sw: &SortedImportance,
    ber: f64,
    eta_star: f64,
    cfg: &StiiConfig,
) -> Result<(usize, f64, bool)> {
    let c = sw.len();
    if c == 0 {
        return Err(Error::InvalidArgument("no channels to select from".into()));
    }
    let eta_full = stii(sw, c, ber, cfg)?;

    if 1.0 - ber < cfg.inherent_predictability {
        // Transmitting is worse than guessing: STII is non-increasing in M,
        // so the feasible set, if non-empty, starts at M = 1.
        let eta_one = stii(sw, 1, ber, cfg)?;
        if eta_one >= eta_star {
            return Ok((1, eta_one, false));
        }
        return Ok((c, eta_full, true));
    }

    if eta_full < eta_star {
        return Ok((c, eta_full, true));
    }
    let mut lo = 1usize;
    let mut hi = c;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if stii(sw, mid, ber, cfg)? >= eta_star {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok((lo, stii(sw, lo, ber, cfg)?, false))
}

/// `M * L * log2(U) / Ts` in bits per second. Exact integer arithmetic for
/// power-of-two modulation orders.
pub fn transmission_rate(m: usize, shape: &FeatureShape, cfg: &RateConfig) -> f64 {
    let u = cfg.modulation_order;
    if u.is_power_of_two() {
        (m as f64) * (shape.length as f64) * f64::from(u.ilog2()) / cfg.symbol_interval
    } else {
        (m as f64) * (shape.length as f64) * f64::from(u).log2() / cfg.symbol_interval
    }
}

/// Full rate-control decision: BER from the channel spec, STII threshold
/// from the inverted mapping, minimal channel count, resulting bit rate.
pub fn decide(
    sw: &SortedImportance,
    spec: &ChannelSpec,
    tau: f64,
    mapping: &MappingFunction,
    shape: &FeatureShape,
    rate_cfg: &RateConfig,
    stii_cfg: &StiiConfig,
) -> Result<RateDecision> {
    if sw.len() != shape.channels {
        return Err(Error::DimensionMismatch(format!(
            "importance covers {} channels, shape has {}",
            sw.len(),
            shape.channels
        )));
    }
    let ber = theoretical_ber(spec);
    let threshold = phi_inverse(mapping, tau, stii_cfg)?;
    let (m, eta_achieved, fallback) = min_channels(sw, ber, threshold.eta_star, stii_cfg)?;
    Ok(RateDecision {
        m,
        rate_bps: transmission_rate(m, shape, rate_cfg),
        eta_achieved,
        fallback,
    })
}
