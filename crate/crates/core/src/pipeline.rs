//! End-to-end orchestration: single transmissions, curve-fit data
//! generation, and SNR sweep experiments with the comparison baselines.
//!
//! Baselines:
//! - TD-JSCC transmits every feature channel at any SNR.
//! - WO-IA shares the adaptive channel count with the importance-aware
//!   scheme but picks which channels to send uniformly at random.
//! - WO-FS transmits a fixed channel count regardless of channel state.
//!
//! Determinism: per-trial seeds derive from the master seed by counter, and
//! per-sample channel seeds are independent of the scheme under test, so two
//! schemes that select the same channels see identical noise.

use serde::Serialize;

use crate::channel::{theoretical_ber, transmit_bits, ChannelFamily, ChannelSpec};
use crate::error::{Error, Result};
use crate::feature::{pack_bits, unpack_bits, ChannelMask};
use crate::fit::fit_rational;
use crate::importance::{importance_weights, sort_importance};
use crate::seed::{self, domain};
use crate::selector::{decide, min_channels, transmission_rate, RateConfig, RateDecision};
use crate::stii::{stii, stii_for_selection, FitPoint, MappingFunction, StiiConfig};
use crate::task::{dequantize, quantize, DataSample, Prediction, TaskModel};

/// Comparison scheme identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Ircsc,
    TdJscc,
    WoIa,
    /// Fixed selection of `fixed_m` channels.
    WoFs {
        fixed_m: usize,
    },
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Ircsc => "IRCSC",
            Scheme::TdJscc => "TD-JSCC",
            Scheme::WoIa => "WO-IA",
            Scheme::WoFs { .. } => "WO-FS",
        }
    }
}

/// Desk-scale default for the fixed-selection baseline: preserves the
/// 48-of-128 ratio, rounded, at least one channel.
pub fn default_wo_fs_m(channels: usize) -> usize {
    ((channels as f64 * 48.0 / 128.0).round() as usize).clamp(1, channels)
}

/// How the transmitter picks the channel count for one block.
#[derive(Debug, Clone, Copy)]
pub enum SelectionPolicy<'a> {
    Ircsc {
        tau: f64,
        mapping: &'a MappingFunction,
    },
    TdJscc,
    WoIa {
        tau: f64,
        mapping: &'a MappingFunction,
    },
    WoFs {
        fixed_m: usize,
    },
}

impl<'a> SelectionPolicy<'a> {
    pub fn for_scheme(scheme: Scheme, tau: f64, mapping: &'a MappingFunction) -> Self {
        match scheme {
            Scheme::Ircsc => SelectionPolicy::Ircsc { tau, mapping },
            Scheme::TdJscc => SelectionPolicy::TdJscc,
            Scheme::WoIa => SelectionPolicy::WoIa { tau, mapping },
            Scheme::WoFs { fixed_m } => SelectionPolicy::WoFs { fixed_m },
        }
    }
}

/// Everything produced by one end-to-end transmission.
#[derive(Debug, Clone)]
pub struct TransmitOutcome {
    pub prediction: Prediction,
    pub decision: RateDecision,
    pub mask: ChannelMask,
}

/// One full pass: encode, quantize, rank importance (argmax reference),
/// select channels per policy, pack, transmit, unpack, zero-fill decode.
///
/// The channel noise stream depends only on `seed`, never on the policy, so
/// seed-matched runs of different schemes selecting identical channels see
/// identical corruption.
pub fn transmit_once(
    model: &TaskModel,
    sample: &DataSample,
    spec: &ChannelSpec,
    policy: SelectionPolicy<'_>,
    stii_cfg: &StiiConfig,
    rate_cfg: &RateConfig,
    seed: u64,
) -> Result<TransmitOutcome> {
    let shape = model.shape();
    let channels = shape.channels;
    let continuous = model.encode(sample)?;
    let x = quantize(&continuous, shape)?;

    // The transmitter has no label at runtime; it ranks importance against
    // its own clean prediction.
    let clean = model.decode(&dequantize(&x, &ChannelMask::full(channels))?, None)?;
    let reference = clean.predicted_class;
    let weights = importance_weights(model, &x, reference)?;
    let sorted = sort_importance(&weights);
    let ber = theoretical_ber(spec);

    let (mask, decision) = match policy {
        SelectionPolicy::Ircsc { tau, mapping } => {
            let d = decide(&sorted, spec, tau, mapping, &shape, rate_cfg, stii_cfg)?;
            (sorted.top_mask(d.m)?, d)
        }
        SelectionPolicy::TdJscc => {
            let eta = stii(&sorted, channels, ber, stii_cfg)?;
            let d = RateDecision {
                m: channels,
                rate_bps: transmission_rate(channels, &shape, rate_cfg),
                eta_achieved: eta,
                fallback: false,
            };
            (sorted.top_mask(channels)?, d)
        }
        SelectionPolicy::WoFs { fixed_m } => {
            if fixed_m == 0 || fixed_m > channels {
                return Err(Error::InvalidArgument(format!(
                    "fixed M = {fixed_m} out of range 1..={channels}"
                )));
            }
            let eta = stii(&sorted, fixed_m, ber, stii_cfg)?;
            let d = RateDecision {
                m: fixed_m,
                rate_bps: transmission_rate(fixed_m, &shape, rate_cfg),
                eta_achieved: eta,
                fallback: false,
            };
            (sorted.top_mask(fixed_m)?, d)
        }
        SelectionPolicy::WoIa { tau, mapping } => {
            // Same channel count as the importance-aware decision, random
            // subset instead of the top ranks.
            let d = decide(&sorted, spec, tau, mapping, &shape, rate_cfg, stii_cfg)?;
            let mut rng = seed::rng_from(seed, &[domain::RANDOM_SELECT]);
            let mut indices: Vec<usize> = (0..channels).collect();
            for i in 0..d.m {
                let j = rand::Rng::gen_range(&mut rng, i..channels);
                indices.swap(i, j);
            }
            let mut selection = indices[..d.m].to_vec();
            selection.sort_unstable();
            let eta = stii_for_selection(weights.weights(), &selection, ber, stii_cfg)?;
            let mask = ChannelMask::from_selection(channels, &selection)?;
            (
                mask,
                RateDecision {
                    eta_achieved: eta,
                    ..d
                },
            )
        }
    };

    let payload = pack_bits(&x, &mask)?;
    let received_bits = transmit_bits(&payload, spec, seed)?;
    let received = unpack_bits(&received_bits, &mask, shape)?;
    let restored = dequantize(&received, &mask)?;
    let prediction = model.decode(&restored, None)?;

    Ok(TransmitOutcome {
        prediction,
        decision,
        mask,
    })
}

/// Curve-fit data generation settings.
#[derive(Debug, Clone)]
pub struct CurveFitConfig {
    /// Target STII values, each strictly inside (P0, 1).
    pub targets: Vec<f64>,
    /// SNR sampling range in dB, low < high.
    pub snr_range_db: (f64, f64),
    /// Samples evaluated per target.
    pub samples_per_target: usize,
    pub seed: u64,
}

impl CurveFitConfig {
    pub fn validate(&self, stii_cfg: &StiiConfig) -> Result<()> {
        let p0 = stii_cfg.inherent_predictability;
        for &t in &self.targets {
            if !(t > p0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "target STII {t} must lie strictly inside ({p0}, 1)"
                )));
            }
        }
        if self.snr_range_db.0.is_nan()
            || self.snr_range_db.1.is_nan()
            || self.snr_range_db.0 >= self.snr_range_db.1
        {
            return Err(Error::InvalidArgument(format!(
                "SNR range [{}, {}] is not a proper interval",
                self.snr_range_db.0, self.snr_range_db.1
            )));
        }
        if self.samples_per_target == 0 {
            return Err(Error::InvalidArgument(
                "samples_per_target must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for CurveFitConfig {
    fn default() -> Self {
        Self {
            targets: (0..9).map(|i| 0.55 + 0.05 * i as f64).collect(),
            snr_range_db: (-10.0, 10.0),
            samples_per_target: 200,
            seed: 0,
        }
    }
}

/// Generates (achieved STII, accuracy) pairs per target over a Rayleigh
/// channel and fits the rational mapping to them.
///
/// For each sample the SNR is drawn uniformly in dB and redrawn until the
/// target is reachable there, i.e. `1 - BER(SNR) >= target`; the channel
/// count then comes from the STII binary search with the ground-truth label
/// as gradient reference. Performance is recorded in percent.
pub fn run_curve_fit(
    model: &TaskModel,
    dataset: &[DataSample],
    cfg: &CurveFitConfig,
    stii_cfg: &StiiConfig,
) -> Result<(MappingFunction, Vec<FitPoint>)> {
    cfg.validate(stii_cfg)?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument(
            "curve fitting needs a labeled dataset".into(),
        ));
    }
    let (lo_db, hi_db) = cfg.snr_range_db;
    let best_spec = ChannelSpec::from_db(ChannelFamily::Rayleigh, hi_db);
    let best_survival = 1.0 - theoretical_ber(&best_spec);

    let mut points = Vec::with_capacity(cfg.targets.len());
    for (ti, &target) in cfg.targets.iter().enumerate() {
        if best_survival < target {
            return Err(Error::UnreachableTarget {
                target,
                max_attainable: best_survival,
            });
        }
        let mut eta_sum = 0.0;
        let mut correct = 0usize;
        for j in 0..cfg.samples_per_target {
            let sample = &dataset[j % dataset.len()];
            let mut snr_rng =
                seed::rng_from(cfg.seed, &[domain::CURVE_FIT_SNR, ti as u64, j as u64]);
            let spec = loop {
                let db = rand::Rng::gen_range(&mut snr_rng, lo_db..hi_db);
                let candidate = ChannelSpec::from_db(ChannelFamily::Rayleigh, db);
                if 1.0 - theoretical_ber(&candidate) >= target {
                    break candidate;
                }
            };
            let ber = theoretical_ber(&spec);

            let continuous = model.encode(sample)?;
            let x = quantize(&continuous, model.shape())?;
            let weights = importance_weights(model, &x, sample.label)?;
            let sorted = sort_importance(&weights);
            let (m, eta_achieved, _fallback) = min_channels(&sorted, ber, target, stii_cfg)?;

            let mask = sorted.top_mask(m)?;
            let payload = pack_bits(&x, &mask)?;
            let tx_seed = seed::derive_seed(cfg.seed, &[domain::CURVE_FIT_TX, ti as u64, j as u64]);
            let received_bits = transmit_bits(&payload, &spec, tx_seed)?;
            let received = unpack_bits(&received_bits, &mask, model.shape())?;
            let restored = dequantize(&received, &mask)?;
            let prediction = model.decode(&restored, None)?;

            eta_sum += eta_achieved;
            correct += usize::from(prediction.predicted_class == sample.label);
        }
        let n = cfg.samples_per_target as f64;
        points.push(FitPoint::new(eta_sum / n, 100.0 * correct as f64 / n)?);
    }

    let mapping = fit_rational(&points)?;
    Ok((mapping, points))
}

/// One aggregated sweep row: a (scheme, SNR, trial) cell averaged over the
/// evaluation set. `m` is the mean selected channel count rounded to the
/// nearest integer; `seed` is the trial seed shared by every scheme in the
/// cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub scheme: String,
    pub snr_db: f64,
    pub trial: usize,
    pub m: usize,
    pub rate_bps: f64,
    pub eta: f64,
    pub accuracy: f64,
    pub seed: u64,
}

/// Sweep experiment settings.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub schemes: Vec<Scheme>,
    pub snr_grid_db: Vec<f64>,
    pub family: ChannelFamily,
    pub trials: usize,
    pub tau: f64,
    pub seed: u64,
}

/// Runs every (scheme, SNR, trial) cell over the evaluation set.
pub fn run_sweep(
    model: &TaskModel,
    eval_set: &[DataSample],
    cfg: &SweepConfig,
    mapping: &MappingFunction,
    stii_cfg: &StiiConfig,
    rate_cfg: &RateConfig,
) -> Result<Vec<SweepRecord>> {
    if eval_set.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs a non-empty evaluation set".into(),
        ));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least one trial".into(),
        ));
    }
    let n = eval_set.len() as f64;
    let mut records = Vec::with_capacity(cfg.schemes.len() * cfg.snr_grid_db.len() * cfg.trials);
    for &scheme in &cfg.schemes {
        for (snr_idx, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
            let spec = ChannelSpec::from_db(cfg.family, snr_db);
            for trial in 0..cfg.trials {
                // Scheme-independent: seed-matched comparisons across
                // schemes stay exact.
                let trial_seed = seed::derive_seed(
                    cfg.seed,
                    &[domain::SWEEP_TRIAL, snr_idx as u64, trial as u64],
                );
                let policy = SelectionPolicy::for_scheme(scheme, cfg.tau, mapping);

                let mut m_sum = 0usize;
                let mut rate_sum = 0.0;
                let mut eta_sum = 0.0;
                let mut correct = 0usize;
                for (sample_idx, sample) in eval_set.iter().enumerate() {
                    let sample_seed = seed::derive_seed(trial_seed, &[sample_idx as u64]);
                    let outcome = transmit_once(
                        model,
                        sample,
                        &spec,
                        policy,
                        stii_cfg,
                        rate_cfg,
                        sample_seed,
                    )?;
                    m_sum += outcome.decision.m;
                    rate_sum += outcome.decision.rate_bps;
                    eta_sum += outcome.decision.eta_achieved;
                    correct += usize::from(outcome.prediction.predicted_class == sample.label);
                }
                records.push(SweepRecord {
                    scheme: scheme.label().to_string(),
                    snr_db,
                    trial,
                    m: (m_sum as f64 / n).round() as usize,
                    rate_bps: rate_sum / n,
                    eta: eta_sum / n,
                    accuracy: correct as f64 / n,
                    seed: trial_seed,
                });
            }
        }
    }
    Ok(records)
}

/// Sweep records as CSV, columns in declared order.
pub fn sweep_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("scheme,snr_db,trial,m,rate_bps,eta,accuracy,seed\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scheme, r.snr_db, r.trial, r.m, r.rate_bps, r.eta, r.accuracy, r.seed
        ));
    }
    out
}

/// Per (scheme, SNR) aggregate over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub scheme: String,
    pub snr_db: f64,
    pub mean_accuracy: f64,
    pub mean_rate_bps: f64,
}

pub fn summarize_sweep(records: &[SweepRecord]) -> Vec<SweepSummary> {
    let mut order: Vec<(String, f64)> = Vec::new();
    for r in records {
        if !order
            .iter()
            .any(|(s, db)| *s == r.scheme && *db == r.snr_db)
        {
            order.push((r.scheme.clone(), r.snr_db));
        }
    }
    order
        .into_iter()
        .map(|(scheme, snr_db)| {
            let cell: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.scheme == scheme && r.snr_db == snr_db)
                .collect();
            let n = cell.len() as f64;
            SweepSummary {
                scheme,
                snr_db,
                mean_accuracy: cell.iter().map(|r| r.accuracy).sum::<f64>() / n,
                mean_rate_bps: cell.iter().map(|r| r.rate_bps).sum::<f64>() / n,
            }
        })
        .collect()
}
