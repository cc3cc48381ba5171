//! Per-feature affine scalers fitted on training rows only.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NormalizerKind {
    Standard,
    MinMax,
    None,
}

impl NormalizerKind {
    pub fn code(self) -> u8 {
        match self {
            NormalizerKind::Standard => 0,
            NormalizerKind::MinMax => 1,
            NormalizerKind::None => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(NormalizerKind::Standard),
            1 => Some(NormalizerKind::MinMax),
            2 => Some(NormalizerKind::None),
            _ => None,
        }
    }
}

/// `apply(x) = (x - shift) / scale`, feature by feature.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerState {
    pub kind: NormalizerKind,
    /// Mean (standard) or minimum (min-max).
    pub shift: Vec<f64>,
    /// Standard deviation (standard) or range (min-max).
    pub scale: Vec<f64>,
}

impl NormalizerState {
    pub fn identity(features: usize) -> Self {
        Self {
            kind: NormalizerKind::None,
            shift: vec![0.0; features],
            scale: vec![1.0; features],
        }
    }

    /// Fits on `data: [rows, features]`. Standard scaling uses the
    /// population standard deviation.
    pub fn fit(kind: NormalizerKind, data: &[f64], features: usize) -> Result<Self> {
        if features == 0 || data.is_empty() || !data.len().is_multiple_of(features) {
            return Err(Error::shape("normalizer data", features, data.len()));
        }
        let rows = data.len() / features;
        let (shift, scale) = match kind {
            NormalizerKind::None => return Ok(Self::identity(features)),
            NormalizerKind::Standard => {
                let mut mean = vec![0.0; features];
                for row in data.chunks_exact(features) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= rows as f64);
                let mut var = vec![0.0; features];
                for row in data.chunks_exact(features) {
                    for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                let std: Vec<f64> = var.iter().map(|v| sqrt(v / rows as f64)).collect();
                (mean, std)
            }
            NormalizerKind::MinMax => {
                let mut lo = vec![f64::INFINITY; features];
                let mut hi = vec![f64::NEG_INFINITY; features];
                for row in data.chunks_exact(features) {
                    for (f, &v) in row.iter().enumerate() {
                        lo[f] = lo[f].min(v);
                        hi[f] = hi[f].max(v);
                    }
                }
                let range = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
                (lo, range)
            }
        };
        for (f, (&s, &c)) in scale.iter().zip(&shift).enumerate() {
            // relative floor guards against round-off "variance" of constants
            if s.is_nan() || s <= 1e-12 * c.abs().max(1.0) {
                return Err(Error::DegenerateFeature {
                    feature: f,
                    reason: match kind {
                        NormalizerKind::Standard => "zero variance",
                        _ => "constant feature",
                    },
                });
            }
        }
        Ok(Self { kind, shift, scale })
    }

    pub fn features(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &mut [f64]) {
        if self.kind == NormalizerKind::None {
            return;
        }
        let f = self.features();
        for row in x.chunks_exact_mut(f) {
            for ((v, s), c) in row.iter_mut().zip(&self.shift).zip(&self.scale) {
                *v = (*v - s) / c;
            }
        }
    }

    pub fn invert(&self, x: &mut [f64]) {
        if self.kind == NormalizerKind::None {
            return;
        }
        let f = self.features();
        for row in x.chunks_exact_mut(f) {
            for ((v, s), c) in row.iter_mut().zip(&self.shift).zip(&self.scale) {
                *v = *v * c + s;
            }
        }
    }

    pub fn applied(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply(&mut out);
        out
    }

    pub fn inverted(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.invert(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_on_unit_data_is_identity() {
        let data = [-1.0, 1.0, 1.0, -1.0];
        let n = NormalizerState::fit(NormalizerKind::Standard, &data, 2).unwrap();
        assert_eq!(n.applied(&data), data.to_vec());
    }

    #[test]
    fn minmax_maps_to_unit_interval() {
        let n = NormalizerState::fit(NormalizerKind::MinMax, &[2.0, 4.0], 1).unwrap();
        assert_eq!(n.applied(&[2.0, 4.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn constant_feature_is_rejected() {
        let data = [1.0, 3.0, 1.0, 5.0];
        for kind in [NormalizerKind::Standard, NormalizerKind::MinMax] {
            assert!(matches!(
                NormalizerState::fit(kind, &data, 2),
                Err(Error::DegenerateFeature { feature: 0, .. })
            ));
        }
        assert!(NormalizerState::fit(NormalizerKind::None, &data, 2).is_ok());
    }
}
