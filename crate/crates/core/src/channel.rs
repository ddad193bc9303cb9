//! BPSK transmission over AWGN and flat Rayleigh fading.
//!
//! SNR convention: unit symbol energy, noise variance `sigma^2 = 1/(2*SNR)`
//! on the real decision dimension. Under this convention the AWGN bit error
//! rate is `Q(sqrt(2*SNR))` and the Rayleigh average matches the closed form
//! `0.5 * (1 - sqrt(SNR / (1 + SNR)))`.
//!
//! Fading is i.i.d. per symbol: `h` is the magnitude of a unit-variance
//! circularly-symmetric complex Gaussian (Rayleigh scale `1/sqrt(2)`, so
//! `E[h^2] = 1`), and the receiver equalizes by `y / h` with perfect CSI
//! before the hard sign decision.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, domain};

/// Channel family simulated by [`transmit_bits`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFamily {
    Awgn,
    Rayleigh,
}

impl ChannelFamily {
    pub fn label(&self) -> &'static str {
        match self {
            ChannelFamily::Awgn => "awgn",
            ChannelFamily::Rayleigh => "rayleigh",
        }
    }
}

impl std::str::FromStr for ChannelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelFamily::Awgn),
            "rayleigh" => Ok(ChannelFamily::Rayleigh),
            other => Err(Error::InvalidArgument(format!(
                "unknown channel family '{other}' (expected awgn or rayleigh)"
            ))),
        }
    }
}

/// Channel family, linear SNR, and modulation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    /// Dimensionless power ratio, > 0.
    pub snr_linear: f64,
    /// Modulation order U. Only U = 2 (BPSK) is accepted by the simulator.
    pub modulation_order: u32,
}

impl ChannelSpec {
    pub fn new(family: ChannelFamily, snr_linear: f64, modulation_order: u32) -> Result<Self> {
        // NaN-rejecting; positive infinity is a legitimate noise-free spec.
        if snr_linear.is_nan() || snr_linear <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "snr_linear must be positive, got {snr_linear}"
            )));
        }
        if modulation_order < 2 {
            return Err(Error::InvalidArgument(format!(
                "modulation order must be >= 2, got {modulation_order}"
            )));
        }
        Ok(Self {
            family,
            snr_linear,
            modulation_order,
        })
    }

    /// BPSK spec at the given SNR in dB.
    pub fn from_db(family: ChannelFamily, snr_db: f64) -> Self {
        Self {
            family,
            snr_linear: snr_db_to_linear(snr_db),
            modulation_order: 2,
        }
    }

    fn require_bpsk(&self) -> Result<()> {
        if self.modulation_order != 2 {
            return Err(Error::UnsupportedModulation(self.modulation_order));
        }
        Ok(())
    }
}

/// `10^(db/10)`.
pub fn snr_db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Standard normal draws via Box-Muller, caching the spare value so the
/// stream is fully determined by the generator state.
struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite.
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Sends a bit sequence through the channel and returns the hard-decision
/// received bits. Deterministic given `(bits, spec, seed)`.
pub fn transmit_bits(bits: &[bool], spec: &ChannelSpec, seed: u64) -> Result<Vec<bool>> {
    spec.require_bpsk()?;
    if spec.snr_linear.is_nan() || spec.snr_linear <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "snr_linear must be positive, got {}",
            spec.snr_linear
        )));
    }
    let sigma = (0.5 / spec.snr_linear).sqrt();
    let mut noise = GaussianSource::new(seed::rng_from(seed, &[domain::CHANNEL]));

    let received = bits
        .iter()
        .map(|&bit| {
            let symbol = if bit { 1.0 } else { -1.0 };
            let decision = match spec.family {
                ChannelFamily::Awgn => symbol + sigma * noise.next(),
                ChannelFamily::Rayleigh => {
                    let re = noise.next();
                    let im = noise.next();
                    // |CN(0,1)| has E[h^2] = 1; clamp away exact zero so the
                    // perfect-CSI equalization below stays well defined.
                    let h = (0.5 * (re * re + im * im)).sqrt().max(f64::MIN_POSITIVE);
                    let y = h * symbol + sigma * noise.next();
                    y / h
                }
            };
            decision >= 0.0
        })
        .collect();
    Ok(received)
}

/// Closed-form bit error rate for the channel spec.
///
/// Rayleigh: `0.5 * (1 - sqrt(SNR / (1 + SNR)))`. AWGN: the Gaussian tail
/// `Q(sqrt(2*SNR)) = 0.5 * erfc(sqrt(SNR))`.
pub fn theoretical_ber(spec: &ChannelSpec) -> f64 {
    match spec.family {
        ChannelFamily::Rayleigh => {
            let snr = spec.snr_linear;
            0.5 * (1.0 - (snr / (1.0 + snr)).sqrt())
        }
        ChannelFamily::Awgn => 0.5 * erfc(spec.snr_linear.sqrt()),
    }
}

/// Empirical bit error rate over a random payload of `n_bits`.
pub fn monte_carlo_ber(spec: &ChannelSpec, n_bits: usize, seed: u64) -> Result<f64> {
    if n_bits == 0 {
        return Err(Error::InvalidArgument("n_bits must be >= 1".into()));
    }
    let mut payload_rng = seed::rng_from(seed, &[domain::PAYLOAD]);
    let payload: Vec<bool> = (0..n_bits).map(|_| payload_rng.gen()).collect();
    let received = transmit_bits(&payload, spec, seed)?;
    let errors = payload
        .iter()
        .zip(&received)
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / n_bits as f64)
}

/// BER validation table: one row per SNR point, columns
/// `snr_db,family,theoretical,empirical,n_bits`.
pub fn ber_validation_csv(
    family: ChannelFamily,
    snr_db_points: &[f64],
    n_bits: usize,
    seed: u64,
) -> Result<String> {
    let mut out = String::from("snr_db,family,theoretical,empirical,n_bits\n");
    for (i, &db) in snr_db_points.iter().enumerate() {
        let spec = ChannelSpec::from_db(family, db);
        let theoretical = theoretical_ber(&spec);
        let empirical = monte_carlo_ber(&spec, n_bits, seed::derive_seed(seed, &[i as u64]))?;
        out.push_str(&format!(
            "{db},{},{theoretical},{empirical},{n_bits}\n",
            family.label()
        ));
    }
    Ok(out)
}

/// Complementary error function, absolute error below 1e-12.
///
/// Power series of erf for |x| < 3; the classical continued fraction
/// `erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`
/// evaluated by the modified Lentz scheme for x >= 3; reflection
/// `erfc(-x) = 2 - erfc(x)` for the negative tail.
pub fn erfc(x: f64) -> f64 {
    const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
    const ONE_OVER_SQRT_PI: f64 = TWO_OVER_SQRT_PI / 2.0;

    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 3.0 {
        // exp(-x^2) underflows to 0 near x = 27, where erfc < 1e-317.
        let gauss = (-x * x).exp();
        if gauss == 0.0 {
            return 0.0;
        }
        // Modified Lentz for f = x + (1/2)/(x + 1/(x + (3/2)/(x + ...))).
        const TINY: f64 = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for n in 1..200 {
            let a = n as f64 / 2.0;
            d = x + a * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = x + a / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        return gauss * ONE_OVER_SQRT_PI / f;
    }
    if x <= -3.0 {
        return 2.0 - erfc(-x);
    }
    // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1)).
    let x2 = x * x;
    let mut term = x; // x^(2n+1) / n!, signed
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let contribution = term / (2 * n + 1) as f64;
        sum += contribution;
        if contribution.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    1.0 - TWO_OVER_SQRT_PI * sum
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}
