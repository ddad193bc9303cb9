//! Quantized semantic features, channel masks, and bit packing.
//!
//! A semantic feature is an `L x C` grid of quantization symbols: `L` token
//! positions by `C` feature channels, each symbol holding `b` bits. Channels
//! are the unit of selection. A [`ChannelMask`] records which channels are
//! transmitted and in what order; untransmitted channels reconstruct to the
//! all-zero symbol, and the mask itself is assumed known at the receiver via
//! an error-free out-of-band control path.
//!
//! Everything here is an immutable value and every operation is pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of a semantic feature block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureShape {
    /// Number of token positions (L).
    pub length: usize,
    /// Number of feature channels (C).
    pub channels: usize,
    /// Bits per quantization symbol (b = log2 of the modulation order).
    pub bits_per_element: u32,
}

impl FeatureShape {
    pub fn new(length: usize, channels: usize, bits_per_element: u32) -> Result<Self> {
        if length == 0 || channels == 0 || bits_per_element == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature shape must have L >= 1, C >= 1, b >= 1; got L={length}, C={channels}, b={bits_per_element}"
            )));
        }
        if bits_per_element > 32 {
            return Err(Error::InvalidArgument(format!(
                "bits_per_element {bits_per_element} exceeds 32"
            )));
        }
        Ok(Self {
            length,
            channels,
            bits_per_element,
        })
    }

    /// Total number of grid elements (L * C).
    pub fn elements(&self) -> usize {
        self.length * self.channels
    }

    /// Largest symbol value representable in `bits_per_element` bits.
    pub fn max_symbol(&self) -> u32 {
        if self.bits_per_element >= 32 {
            u32::MAX
        } else {
            (1u32 << self.bits_per_element) - 1
        }
    }
}

/// A quantized `L x C` feature grid.
///
/// Values are stored channel-major: element `(position i, channel k)` lives at
/// index `k * L + i`. All values fit in `shape.bits_per_element` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticFeature {
    shape: FeatureShape,
    values: Vec<u32>,
}

impl SemanticFeature {
    pub fn new(shape: FeatureShape, values: Vec<u32>) -> Result<Self> {
        if values.len() != shape.elements() {
            return Err(Error::DimensionMismatch(format!(
                "feature grid has {} values, shape wants {}",
                values.len(),
                shape.elements()
            )));
        }
        let max = shape.max_symbol();
        if let Some(bad) = values.iter().find(|&&v| v > max) {
            return Err(Error::InvalidArgument(format!(
                "symbol {bad} does not fit in {} bits",
                shape.bits_per_element
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> FeatureShape {
        self.shape
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Symbol at `(position, channel)`.
    pub fn get(&self, position: usize, channel: usize) -> u32 {
        debug_assert!(position < self.shape.length && channel < self.shape.channels);
        self.values[channel * self.shape.length + position]
    }
}

/// Selection of feature channels, with their transmission order.
///
/// `order` lists the selected channel indices in the order their symbols are
/// packed into the bit stream. Masks built from sorted importance weights use
/// descending-importance order; masks built from raw bits use ascending
/// channel index. The same mask must be presented to [`pack_bits`] and
/// [`unpack_bits`] for the stream to round-trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMask {
    bits: Vec<bool>,
    order: Vec<usize>,
}

impl ChannelMask {
    /// Mask from raw bits; transmission order is ascending channel index.
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let order = bits
            .iter()
            .enumerate()
            .filter_map(|(k, &on)| on.then_some(k))
            .collect();
        Self { bits, order }
    }

    /// Mask selecting the given channels, transmitted in the given order.
    pub fn from_selection(channels: usize, selection: &[usize]) -> Result<Self> {
        let mut bits = vec![false; channels];
        for &k in selection {
            if k >= channels {
                return Err(Error::InvalidArgument(format!(
                    "selected channel {k} out of range 0..{channels}"
                )));
            }
            if bits[k] {
                return Err(Error::InvalidArgument(format!(
                    "channel {k} selected twice"
                )));
            }
            bits[k] = true;
        }
        Ok(Self {
            bits,
            order: selection.to_vec(),
        })
    }

    /// Mask selecting every channel, ascending order.
    pub fn full(channels: usize) -> Self {
        Self::from_bits(vec![true; channels])
    }

    /// Number of selected channels (M).
    pub fn selected_count(&self) -> usize {
        self.order.len()
    }

    /// Total number of channels (C).
    pub fn channels(&self) -> usize {
        self.bits.len()
    }

    pub fn is_selected(&self, channel: usize) -> bool {
        self.bits[channel]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Selected channel indices in transmission order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// Per-channel importance weights. All entries are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    weights: Vec<f64>,
}

impl ImportanceVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("importance vector is empty".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "importance weight {bad} is negative or non-finite"
            )));
        }
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Importance weights in non-increasing order, with the permutation back to
/// original channel indices and precomputed prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedImportance {
    sorted: Vec<f64>,
    permutation: Vec<usize>,
    /// prefix[m] = sum of the m largest weights; prefix[0] = 0.
    prefix: Vec<f64>,
}

impl SortedImportance {
    /// Stable descending sort of `w`: equal weights keep original index order.
    pub fn from_weights(w: &ImportanceVector) -> Self {
        let mut permutation: Vec<usize> = (0..w.len()).collect();
        // sort_by is stable, so ties preserve ascending channel index.
        permutation.sort_by(|&a, &b| w.weights()[b].total_cmp(&w.weights()[a]));
        let sorted: Vec<f64> = permutation.iter().map(|&k| w.weights()[k]).collect();
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        Self {
            sorted,
            permutation,
            prefix,
        }
    }

    /// Number of channels (C).
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Weights in non-increasing order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `permutation()[rank]` is the original channel index of that rank.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Sum of the `m` largest weights.
    pub fn prefix_mass(&self, m: usize) -> f64 {
        self.prefix[m]
    }

    /// Sum of all weights.
    pub fn total(&self) -> f64 {
        self.prefix[self.len()]
    }

    /// Mask selecting the `m` most important channels, in rank order.
    pub fn top_mask(&self, m: usize) -> Result<ChannelMask> {
        if m > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot select {m} of {} channels",
                self.len()
            )));
        }
        ChannelMask::from_selection(self.len(), &self.permutation[..m])
    }
}

/// Zeroes every channel the mask does not select. Selected channels pass
/// through untouched; `x` itself is not modified.
pub fn apply_mask(x: &SemanticFeature, m: &ChannelMask) -> Result<SemanticFeature> {
    let shape = x.shape();
    if m.channels() != shape.channels {
        return Err(Error::DimensionMismatch(format!(
            "mask covers {} channels, feature has {}",
            m.channels(),
            shape.channels
        )));
    }
    let mut values = x.values().to_vec();
    for k in 0..shape.channels {
        if !m.is_selected(k) {
            values[k * shape.length..(k + 1) * shape.length].fill(0);
        }
    }
    SemanticFeature::new(shape, values)
}

/// Serializes the selected channels of `x` into a bit stream.
///
/// Order: channels as listed by `m.order()` (descending importance rank when
/// the mask came from [`SortedImportance::top_mask`]), positions `0..L` within
/// each channel, most-significant bit first within each symbol. Output length
/// is exactly `M * L * b` bits.
pub fn pack_bits(x: &SemanticFeature, m: &ChannelMask) -> Result<Vec<bool>> {
    let shape = x.shape();
    if m.channels() != shape.channels {
        return Err(Error::DimensionMismatch(format!(
            "mask covers {} channels, feature has {}",
            m.channels(),
            shape.channels
        )));
    }
    let b = shape.bits_per_element;
    let mut bits = Vec::with_capacity(m.selected_count() * shape.length * b as usize);
    for &k in m.order() {
        for i in 0..shape.length {
            let symbol = x.get(i, k);
            for bit in (0..b).rev() {
                bits.push((symbol >> bit) & 1 == 1);
            }
        }
    }
    Ok(bits)
}

/// Inverse of [`pack_bits`]: rebuilds the feature grid from a bit stream.
/// Channels the mask does not select are filled with the all-zero symbol.
pub fn unpack_bits(bits: &[bool], m: &ChannelMask, shape: FeatureShape) -> Result<SemanticFeature> {
    if m.channels() != shape.channels {
        return Err(Error::DimensionMismatch(format!(
            "mask covers {} channels, shape has {}",
            m.channels(),
            shape.channels
        )));
    }
    let b = shape.bits_per_element as usize;
    let expected = m.selected_count() * shape.length * b;
    if bits.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "bit stream has {} bits, mask and shape want {expected}",
            bits.len()
        )));
    }
    let mut values = vec![0u32; shape.elements()];
    let mut cursor = 0;
    for &k in m.order() {
        for i in 0..shape.length {
            let mut symbol = 0u32;
            for _ in 0..b {
                symbol = (symbol << 1) | u32::from(bits[cursor]);
                cursor += 1;
            }
            values[k * shape.length + i] = symbol;
        }
    }
    SemanticFeature::new(shape, values)
}
