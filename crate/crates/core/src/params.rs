//! Named, shaped parameter tensors shared by every trainable model.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor data does not match shape"
        );
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }
}

/// A model whose trainable state is an ordered list of named tensors.
///
/// Gradients are represented by a second instance of the same type, so the
/// order returned by `tensors` and `tensors_mut` must agree.
pub trait Parameters {
    fn tensors(&self) -> Vec<(String, &Tensor)>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    /// Copy of `self` with all tensors zeroed.
    fn zeros_like(&self) -> Self
    where
        Self: Clone + Sized,
    {
        let mut out = self.clone();
        out.zero();
        out
    }

    fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }

    /// Flat copy of all values in tensor order.
    fn flatten(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.data.iter().copied())
            .collect()
    }
}

/// Prefixes every name with `prefix.`.
pub fn prefixed<'a>(prefix: &str, items: Vec<(String, &'a Tensor)>) -> Vec<(String, &'a Tensor)> {
    items
        .into_iter()
        .map(|(n, t)| {
            let mut name = String::from(prefix);
            name.push('.');
            name.push_str(&n);
            (name, t)
        })
        .collect()
}

/// 64-bit FNV-1a digest of every tensor's shape and bit pattern.
pub fn digest<P: Parameters + ?Sized>(p: &P) -> u64 {
    let mut h = Fnv::new();
    for (name, t) in p.tensors() {
        h.bytes(name.as_bytes());
        for &d in &t.shape {
            h.bytes(&(d as u64).to_le_bytes());
        }
        for v in &t.data {
            h.bytes(&v.to_bits().to_le_bytes());
        }
    }
    h.finish()
}

pub struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub fn bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv {
    fn default() -> Self {
        Self::new()
    }
}
