//! Semantic transmission integrity index (STII) and the performance mapping.
//!
//! The STII weighs the transmitted share of semantic importance by the
//! probability a bit survives the channel, and credits untransmitted mass
//! with the inherent predictability `P0` (0.5 under BPSK):
//!
//! ```text
//! eta = [ S_M * (1 - ber) + P0 * (T - S_M) ] / T
//! ```
//!
//! where `S_M` is the mass of the `M` most important channels and `T` the
//! total mass. The mapping `phi(eta)` is a rational function (cubic over
//! monic quadratic) fitted from measured (eta, accuracy) pairs and inverted
//! to turn a performance threshold `tau` into an STII threshold `eta*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::SortedImportance;

pub const MAPPING_FORMAT_VERSION: u32 = 1;

/// STII parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiiConfig {
    /// Probability an untransmitted bit is guessed correctly (P0).
    pub inherent_predictability: f64,
}

impl StiiConfig {
    pub fn new(inherent_predictability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&inherent_predictability) {
            return Err(Error::InvalidArgument(format!(
                "inherent predictability must lie in [0, 1], got {inherent_predictability}"
            )));
        }
        Ok(Self {
            inherent_predictability,
        })
    }
}

impl Default for StiiConfig {
    fn default() -> Self {
        // 0.5: a random guess on a BPSK bit.
        Self {
            inherent_predictability: 0.5,
        }
    }
}

/// STII for transmitting the `m` most important channels at the given BER.
pub fn stii(sw: &SortedImportance, m: usize, ber: f64, cfg: &StiiConfig) -> Result<f64> {
    if m > sw.len() {
        return Err(Error::InvalidArgument(format!(
            "M = {m} exceeds channel count {}",
            sw.len()
        )));
    }
    if !(0.0..=0.5).contains(&ber) {
        return Err(Error::InvalidArgument(format!(
            "ber must lie in [0, 0.5], got {ber}"
        )));
    }
    let total = sw.total();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let transmitted = sw.prefix_mass(m);
    let p0 = cfg.inherent_predictability;
    Ok((transmitted * (1.0 - ber) + p0 * (total - transmitted)) / total)
}

/// STII for an arbitrary channel subset (selection need not follow rank).
pub fn stii_for_selection(
    weights: &[f64],
    selected: &[usize],
    ber: f64,
    cfg: &StiiConfig,
) -> Result<f64> {
    if !(0.0..=0.5).contains(&ber) {
        return Err(Error::InvalidArgument(format!(
            "ber must lie in [0, 0.5], got {ber}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let mut transmitted = 0.0;
    for &k in selected {
        if k >= weights.len() {
            return Err(Error::InvalidArgument(format!(
                "selected channel {k} out of range 0..{}",
                weights.len()
            )));
        }
        transmitted += weights[k];
    }
    let p0 = cfg.inherent_predictability;
    Ok((transmitted * (1.0 - ber) + p0 * (total - transmitted)) / total)
}

/// Rational performance mapping `phi(eta)`:
///
/// ```text
/// phi(eta) = (p1 eta^3 + p2 eta^2 + p3 eta + p4) / (eta^2 + q1 eta + q2)
/// ```
///
/// The denominator is verified to have no real root inside the fit domain at
/// construction and again after deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingFunction {
    format_version: u32,
    p: [f64; 4],
    q: [f64; 2],
    domain: [f64; 2],
    source: String,
}

impl MappingFunction {
    pub fn new(
        p: [f64; 4],
        q: [f64; 2],
        domain: [f64; 2],
        source: impl Into<String>,
    ) -> Result<Self> {
        let f = Self {
            format_version: MAPPING_FORMAT_VERSION,
            p,
            q,
            domain,
            source: source.into(),
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let [lo, hi] = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "mapping domain [{lo}, {hi}] is not a proper interval"
            )));
        }
        if !self.p.iter().chain(self.q.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "mapping coefficients must be finite".into(),
            ));
        }
        if let Some(root) = denominator_root_in(self.q, lo, hi) {
            return Err(Error::UnstableFit { root, lo, hi });
        }
        Ok(())
    }

    /// Published coefficient preset for the mapping, fit domain [0.5, 1.0].
    pub fn paper_table_1() -> Self {
        Self {
            format_version: MAPPING_FORMAT_VERSION,
            p: [-60.34, 210.9, -170.9, 40.3],
            q: [-1.021, 0.2652],
            domain: [0.5, 1.0],
            source: "paper-table-1".into(),
        }
    }

    /// Looks up a built-in mapping preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-table-1" => Ok(Self::paper_table_1()),
            other => Err(Error::InvalidArgument(format!(
                "unknown mapping preset '{other}'"
            ))),
        }
    }

    pub fn numerator_coefficients(&self) -> [f64; 4] {
        self.p
    }

    pub fn denominator_coefficients(&self) -> [f64; 2] {
        self.q
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.domain[0], self.domain[1])
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mapping serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self =
            serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;
        if f.format_version != MAPPING_FORMAT_VERSION {
            return Err(Error::MalformedDocument(format!(
                "unsupported mapping format version {}",
                f.format_version
            )));
        }
        f.validate()?;
        Ok(f)
    }

    /// Rational evaluation without the domain check; used internally by the
    /// fitter while coefficients are still moving.
    pub(crate) fn eval_unchecked(p: &[f64; 4], q: &[f64; 2], eta: f64) -> f64 {
        let numerator = ((p[0] * eta + p[1]) * eta + p[2]) * eta + p[3];
        let denominator = (eta + q[0]) * eta + q[1];
        numerator / denominator
    }
}

/// Real root of `eta^2 + q1 eta + q2` inside `[lo, hi]`, if any.
pub(crate) fn denominator_root_in(q: [f64; 2], lo: f64, hi: f64) -> Option<f64> {
    let disc = q[0] * q[0] - 4.0 * q[1];
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    for root in [(-q[0] - sq) / 2.0, (-q[0] + sq) / 2.0] {
        if (lo..=hi).contains(&root) {
            return Some(root);
        }
    }
    None
}

/// Evaluates `phi` at `eta`, rejecting points outside the fit domain.
pub fn phi_eval(f: &MappingFunction, eta: f64) -> Result<f64> {
    let (lo, hi) = f.domain();
    if !(lo..=hi).contains(&eta) {
        return Err(Error::DomainError { eta, lo, hi });
    }
    Ok(MappingFunction::eval_unchecked(&f.p, &f.q, eta))
}

/// Result of inverting the mapping at a performance threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiiThreshold {
    /// Smallest STII meeting the threshold on the increasing segment.
    pub eta_star: f64,
    /// The threshold exceeds the mapping's peak; `eta_star` is the peak.
    pub clamped: bool,
    /// The threshold is already met at the bottom of the segment.
    pub trivially_satisfied: bool,
}

const INVERSE_TOLERANCE: f64 = 1e-6;

/// Smallest `eta` with `phi(eta) >= tau` on the increasing segment
/// `[P0, eta_peak]`, by bisection.
///
/// `phi` fitted to accuracy data typically rises to a peak and then declines
/// toward `eta = 1`, so the inverse is taken on the rising segment only: the
/// rate selector wants the smallest `eta` (hence the smallest rate) that
/// meets `tau`. Thresholds above the peak clamp to the peak and set
/// `clamped`; thresholds at or below `phi` at the segment start return the
/// start and set `trivially_satisfied`.
pub fn phi_inverse(f: &MappingFunction, tau: f64, cfg: &StiiConfig) -> Result<StiiThreshold> {
    let (domain_lo, domain_hi) = f.domain();
    let lo = cfg.inherent_predictability.max(domain_lo);
    let hi = domain_hi.min(1.0);
    if lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "inverse search segment [{lo}, {hi}] is empty"
        )));
    }
    let eval = |eta: f64| MappingFunction::eval_unchecked(&f.p, &f.q, eta);
    let peak = golden_section_max(eval, lo, hi, INVERSE_TOLERANCE);
    let phi_peak = eval(peak);
    if tau > phi_peak {
        return Ok(StiiThreshold {
            eta_star: peak,
            clamped: true,
            trivially_satisfied: false,
        });
    }
    if tau <= eval(lo) {
        return Ok(StiiThreshold {
            eta_star: lo,
            clamped: false,
            trivially_satisfied: true,
        });
    }
    // Invariant: phi(a) < tau <= phi(b).
    let mut a = lo;
    let mut b = peak;
    while b - a > INVERSE_TOLERANCE {
        let mid = 0.5 * (a + b);
        if eval(mid) >= tau {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(StiiThreshold {
        eta_star: b,
        clamped: false,
        trivially_satisfied: false,
    })
}

/// Golden-section search for the maximizer of `f` on `[lo, hi]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    // The segment endpoints can beat an interior plateau.
    let candidates = [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))];
    candidates
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, _)| x)
        .unwrap()
}

/// A measured (STII, task performance) pair used for curve fitting.
/// Performance is task accuracy in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub eta: f64,
    pub performance: f64,
}

impl FitPoint {
    pub fn new(eta: f64, performance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!(
                "eta must lie in [0, 1], got {eta}"
            )));
        }
        if !performance.is_finite() {
            return Err(Error::InvalidArgument("performance must be finite".into()));
        }
        Ok(Self { eta, performance })
    }
}

/// Fit points as CSV with an `eta,performance` header.
pub fn fit_points_to_csv(points: &[FitPoint]) -> String {
    let mut out = String::from("eta,performance\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.eta, p.performance));
    }
    out
}

pub fn fit_points_from_csv(text: &str) -> Result<Vec<FitPoint>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "eta,performance" => {}
        other => {
            return Err(Error::MalformedDocument(format!(
                "expected 'eta,performance' header, got {other:?}"
            )))
        }
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let eta = parse_field(fields.next(), i, "eta")?;
        let performance = parse_field(fields.next(), i, "performance")?;
        if fields.next().is_some() {
            return Err(Error::MalformedDocument(format!(
                "row {i} has extra fields"
            )));
        }
        points.push(FitPoint::new(eta, performance)?);
    }
    Ok(points)
}

fn parse_field(field: Option<&str>, row: usize, name: &str) -> Result<f64> {
    field
        .ok_or_else(|| Error::MalformedDocument(format!("row {row} missing {name}")))?
        .trim()
        .parse()
        .map_err(|e| Error::MalformedDocument(format!("row {row} {name}: {e}")))
}
