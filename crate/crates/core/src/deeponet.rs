//! DeepONet: a branch MLP encodes the initial condition at the sensors, a
//! trunk MLP encodes `(x, t)` query coordinates, and the field is their
//! contraction over the shared latent index (no output bias).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{add_column_sums, add_row_bias, gemm};
use crate::math::{swish, swish_grad};
use crate::params::{prefixed, Parameters, Tensor};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Swish,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Swish => swish(z),
            Activation::Linear => z,
        }
    }

    #[inline]
    fn grad(self, z: f64) -> f64 {
        match self {
            Activation::Swish => swish_grad(z),
            Activation::Linear => 1.0,
        }
    }
}

/// Layer widths including the input width, and one activation per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        let spec = Self {
            widths,
            activations,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Hidden layers use swish, the last `linear_tail` layers are linear.
    pub fn swish_with_linear_tail(widths: Vec<usize>, linear_tail: usize) -> Self {
        let layers = widths.len().saturating_sub(1);
        let activations = (0..layers)
            .map(|l| {
                if l + linear_tail >= layers {
                    Activation::Linear
                } else {
                    Activation::Swish
                }
            })
            .collect();
        Self {
            widths,
            activations,
        }
    }

    /// 50 → 150 → 250 → 450 → 380 → 320 → 300, swish ×5 then linear.
    pub fn full_branch(nx: usize) -> Self {
        Self::swish_with_linear_tail(vec![nx, 150, 250, 450, 380, 320, 300], 1)
    }

    /// 2 → 200 → 220 → 240 → 250 → 260 → 280 → 300, swish ×5 then linear ×2.
    pub fn full_trunk() -> Self {
        Self::swish_with_linear_tail(vec![2, 200, 220, 240, 250, 260, 280, 300], 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::invalid("an MLP needs at least one layer"));
        }
        if self.widths.contains(&0) {
            return Err(Error::invalid("MLP widths must be positive"));
        }
        if self.activations.len() != self.widths.len() - 1 {
            return Err(Error::invalid(format!(
                "{} activations for {} layers",
                self.activations.len(),
                self.widths.len() - 1
            )));
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Dense layers with weights stored `[in, out]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub weights: Vec<Tensor>,
    pub biases: Vec<Tensor>,
}

/// Per-layer inputs and pre-activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpCache {
    batch: usize,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn zeros(spec: MlpSpec) -> Self {
        let weights = spec
            .widths
            .windows(2)
            .map(|w| Tensor::zeros(vec![w[0], w[1]]))
            .collect();
        let biases = spec.widths[1..]
            .iter()
            .map(|&w| Tensor::zeros(vec![w]))
            .collect();
        Self {
            spec,
            weights,
            biases,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: MlpSpec, rng: &mut Rng) -> Self {
        let mut mlp = Self::zeros(spec);
        for w in &mut mlp.weights {
            let (fi, fo) = (w.shape[0], w.shape[1]);
            w.data = rng::glorot_uniform(rng, fi, fo, fi * fo);
        }
        mlp
    }

    pub fn forward(&self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.run(x, batch, None)
    }

    pub fn forward_cached(&self, x: &[f64], batch: usize) -> Result<(Vec<f64>, MlpCache)> {
        let mut cache = MlpCache {
            batch,
            ..Default::default()
        };
        let out = self.run(x, batch, Some(&mut cache))?;
        Ok((out, cache))
    }

    fn run(&self, x: &[f64], batch: usize, mut cache: Option<&mut MlpCache>) -> Result<Vec<f64>> {
        let in_w = self.spec.input_width();
        if x.len() != batch * in_w {
            return Err(Error::shape("mlp input", batch * in_w, x.len()));
        }
        let mut h = x.to_vec();
        for l in 0..self.spec.layers() {
            let (fi, fo) = (self.spec.widths[l], self.spec.widths[l + 1]);
            let mut z = vec![0.0; batch * fo];
            gemm(batch, fi, fo, 1.0, &h, false, &self.weights[l].data, false, 0.0, &mut z);
            add_row_bias(&mut z, &self.biases[l].data);
            let act = self.spec.activations[l];
            let a: Vec<f64> = match act {
                Activation::Linear => z.clone(),
                _ => z.iter().map(|&v| act.apply(v)).collect(),
            };
            if let Some(c) = cache.as_deref_mut() {
                c.inputs.push(core::mem::take(&mut h));
                c.pre.push(z);
            }
            h = a;
        }
        Ok(h)
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64], grads: &mut Mlp) -> Vec<f64> {
        let batch = cache.batch;
        let mut g = grad_out.to_vec();
        for l in (0..self.spec.layers()).rev() {
            let (fi, fo) = (self.spec.widths[l], self.spec.widths[l + 1]);
            let act = self.spec.activations[l];
            if act != Activation::Linear {
                for (gv, &z) in g.iter_mut().zip(&cache.pre[l]) {
                    *gv *= act.grad(z);
                }
            }
            gemm(
                fi,
                batch,
                fo,
                1.0,
                &cache.inputs[l],
                true,
                &g,
                false,
                1.0,
                &mut grads.weights[l].data,
            );
            add_column_sums(&mut grads.biases[l].data, &g);
            let mut gin = vec![0.0; batch * fi];
            gemm(batch, fo, fi, 1.0, &g, false, &self.weights[l].data, true, 0.0, &mut gin);
            g = gin;
        }
        g
    }
}

impl Parameters for Mlp {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push((format!("w{l}"), w));
            out.push((format!("b{l}"), b));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeepOnetSpec {
    pub branch: MlpSpec,
    pub trunk: MlpSpec,
}

impl DeepOnetSpec {
    pub fn full(nx: usize) -> Self {
        Self {
            branch: MlpSpec::full_branch(nx),
            trunk: MlpSpec::full_trunk(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.branch.validate()?;
        self.trunk.validate()?;
        if self.trunk.input_width() != 2 {
            return Err(Error::invalid("trunk input must be (x, t) pairs"));
        }
        if self.branch.output_width() != self.trunk.output_width() {
            return Err(Error::invalid(format!(
                "branch latent width {} differs from trunk latent width {}",
                self.branch.output_width(),
                self.trunk.output_width()
            )));
        }
        Ok(())
    }

    pub fn latent(&self) -> usize {
        self.branch.output_width()
    }

    pub fn parameter_count(&self) -> usize {
        self.branch.parameter_count() + self.trunk.parameter_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepOnet {
    pub branch: Mlp,
    pub trunk: Mlp,
}

pub struct DeepOnetCache {
    batch: usize,
    queries: usize,
    branch: MlpCache,
    trunk: MlpCache,
    branch_out: Vec<f64>,
    trunk_out: Vec<f64>,
}

impl DeepOnet {
    pub fn init(spec: &DeepOnetSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            branch: Mlp::init(spec.branch.clone(), rng),
            trunk: Mlp::init(spec.trunk.clone(), rng),
        })
    }

    pub fn zeros(spec: &DeepOnetSpec) -> Self {
        Self {
            branch: Mlp::zeros(spec.branch.clone()),
            trunk: Mlp::zeros(spec.trunk.clone()),
        }
    }

    pub fn spec(&self) -> DeepOnetSpec {
        DeepOnetSpec {
            branch: self.branch.spec.clone(),
            trunk: self.trunk.spec.clone(),
        }
    }

    pub fn latent(&self) -> usize {
        self.branch.spec.output_width()
    }

    /// `out[b, q] = sum_j branch(u0)[b, j] * trunk(coords)[q, j]`.
    pub fn forward(&self, u0: &[f64], batch: usize, coords: &[f64]) -> Result<Vec<f64>> {
        let b = self.branch.forward(u0, batch)?;
        let queries = coords.len() / 2;
        let t = self.trunk.forward(coords, queries)?;
        Ok(contract(&b, &t, batch, queries, self.latent()))
    }

    pub fn forward_cached(
        &self,
        u0: &[f64],
        batch: usize,
        coords: &[f64],
    ) -> Result<(Vec<f64>, DeepOnetCache)> {
        let (b, bc) = self.branch.forward_cached(u0, batch)?;
        let queries = coords.len() / 2;
        let (t, tc) = self.trunk.forward_cached(coords, queries)?;
        let out = contract(&b, &t, batch, queries, self.latent());
        Ok((
            out,
            DeepOnetCache {
                batch,
                queries,
                branch: bc,
                trunk: tc,
                branch_out: b,
                trunk_out: t,
            },
        ))
    }

    pub fn backward(&self, cache: &DeepOnetCache, grad_out: &[f64], grads: &mut DeepOnet) {
        let (bsz, q, p) = (cache.batch, cache.queries, self.latent());
        let mut gb = vec![0.0; bsz * p];
        gemm(bsz, q, p, 1.0, grad_out, false, &cache.trunk_out, false, 0.0, &mut gb);
        let mut gt = vec![0.0; q * p];
        gemm(q, bsz, p, 1.0, grad_out, true, &cache.branch_out, false, 0.0, &mut gt);
        self.branch.backward(&cache.branch, &gb, &mut grads.branch);
        self.trunk.backward(&cache.trunk, &gt, &mut grads.trunk);
    }
}

fn contract(b: &[f64], t: &[f64], batch: usize, queries: usize, latent: usize) -> Vec<f64> {
    let mut out = vec![0.0; batch * queries];
    gemm(batch, latent, queries, 1.0, b, false, t, true, 0.0, &mut out);
    out
}

impl Parameters for DeepOnet {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = prefixed("branch", self.branch.tensors());
        out.extend(prefixed("trunk", self.trunk.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.branch.tensors_mut();
        out.extend(self.trunk.tensors_mut());
        out
    }
}

/// Time-major `(x, t)` query grid: row `i * nx + j` is `(x_j, t_i)`.
pub fn query_grid(xs: &[f64], ts: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * xs.len() * ts.len());
    for &t in ts {
        for &x in xs {
            out.push(x);
            out.push(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Parameters;

    #[test]
    fn full_parameter_counts() {
        let branch = MlpSpec::full_branch(50);
        let trunk = MlpSpec::full_trunk();
        assert_eq!(branch.parameter_count(), 547_950);
        assert_eq!(trunk.parameter_count(), 380_750);
        let model = DeepOnet::zeros(&DeepOnetSpec::full(50));
        assert_eq!(model.branch.parameter_count(), 547_950);
        assert_eq!(model.trunk.parameter_count(), 380_750);
        let tiny = MlpSpec::swish_with_linear_tail(vec![2, 3], 1);
        assert_eq!(Mlp::zeros(tiny).parameter_count(), 9);
    }

    #[test]
    fn full_activation_layout() {
        use Activation::*;
        assert_eq!(
            MlpSpec::full_branch(50).activations,
            vec![Swish, Swish, Swish, Swish, Swish, Linear]
        );
        assert_eq!(
            MlpSpec::full_trunk().activations,
            vec![Swish, Swish, Swish, Swish, Swish, Linear, Linear]
        );
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let spec = MlpSpec::swish_with_linear_tail(vec![3, 4, 2], 1);
        let mlp = Mlp::zeros(spec);
        let out = mlp.forward(&[1.0, -2.0, 3.0, 0.5, 0.5, 0.5], 2).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let spec = MlpSpec::swish_with_linear_tail(vec![3, 3], 1);
        let mut mlp = Mlp::zeros(spec);
        for i in 0..3 {
            mlp.weights[0].data[i * 3 + i] = 1.0;
        }
        let x = [0.3, -1.2, 4.0];
        assert_eq!(mlp.forward(&x, 1).unwrap(), x.to_vec());
    }

    #[test]
    fn two_layer_net_matches_hand_composition() {
        let spec = MlpSpec::swish_with_linear_tail(vec![2, 2, 1], 1);
        let mut mlp = Mlp::zeros(spec);
        mlp.weights[0].data = vec![0.5, -0.3, 0.8, 0.1]; // [in, out]
        mlp.biases[0].data = vec![0.05, -0.2];
        mlp.weights[1].data = vec![1.5, -0.7];
        mlp.biases[1].data = vec![0.25];
        let x = [0.9, -0.4];
        let h0 = swish(x[0] * 0.5 + x[1] * 0.8 + 0.05);
        let h1 = swish(x[0] * -0.3 + x[1] * 0.1 - 0.2);
        let expect = 1.5 * h0 - 0.7 * h1 + 0.25;
        let got = mlp.forward(&x, 1).unwrap()[0];
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mlp = Mlp::zeros(MlpSpec::swish_with_linear_tail(vec![3, 2], 1));
        assert!(matches!(mlp.forward(&[1.0; 5], 2), Err(Error::Shape { .. })));
        assert!(MlpSpec::new(vec![3], vec![]).is_err());
        assert!(MlpSpec::new(vec![3, 0], vec![Activation::Linear]).is_err());
    }

    fn constant_net(in_w: usize, value: f64) -> Mlp {
        let mut m = Mlp::zeros(MlpSpec::swish_with_linear_tail(vec![in_w, 1], 1));
        m.biases[0].data[0] = value;
        m
    }

    #[test]
    fn zero_branch_annihilates_field() {
        let spec = DeepOnetSpec {
            branch: MlpSpec::swish_with_linear_tail(vec![4, 3], 1),
            trunk: MlpSpec::swish_with_linear_tail(vec![2, 5, 3], 1),
        };
        let mut r = rng::keyed(0, 0);
        let mut net = DeepOnet::init(&spec, &mut r).unwrap();
        net.branch = Mlp::zeros(spec.branch.clone());
        let coords = query_grid(&[0.0, 0.5], &[0.1, 0.2, 0.3]);
        let out = net.forward(&[1.0, 2.0, 3.0, 4.0], 1, &coords).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_latent_product() {
        let net = DeepOnet {
            branch: constant_net(4, 2.0),
            trunk: constant_net(2, 3.0),
        };
        let coords = query_grid(&[0.0, 0.5, 1.0], &[0.1, 0.2]);
        let out = net.forward(&[0.1, 0.2, 0.3, 0.4], 1, &coords).unwrap();
        assert_eq!(out.len(), 6);
        assert!(out.iter().all(|&v| (v - 6.0).abs() < 1e-15));
    }

    #[test]
    fn spec_validation_requires_matching_latents() {
        let spec = DeepOnetSpec {
            branch: MlpSpec::swish_with_linear_tail(vec![4, 3], 1),
            trunk: MlpSpec::swish_with_linear_tail(vec![2, 4], 1),
        };
        assert!(spec.validate().is_err());
        assert!(DeepOnetSpec::full(50).validate().is_ok());
    }
}
