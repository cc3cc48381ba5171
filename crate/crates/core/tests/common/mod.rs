#![allow(dead_code)]

use kdvnet_core::params::Parameters;
use kdvnet_core::rng::{self, Rng};

pub fn random_vec(rng: &mut Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * (2.0 * rng::uniform(rng) - 1.0)).collect()
}

pub fn randomize<P: Parameters>(p: &mut P, rng: &mut Rng, scale: f64) {
    for t in p.tensors_mut() {
        for v in t.data.iter_mut() {
            *v = scale * (2.0 * rng::uniform(rng) - 1.0);
        }
    }
}

/// Compares analytic gradients against central differences on up to
/// `per_tensor` coordinates of each tensor. Returns the worst relative error.
pub fn check_gradients<P, F>(model: &P, analytic: &P, per_tensor: usize, h: f64, loss: F) -> f64
where
    P: Parameters + Clone,
    F: Fn(&P) -> f64,
{
    let grads: Vec<Vec<f64>> = analytic
        .tensors()
        .iter()
        .map(|(_, t)| t.data.clone())
        .collect();
    let names: Vec<String> = model.tensors().iter().map(|(n, _)| n.clone()).collect();
    let mut worst: f64 = 0.0;
    for (ti, g) in grads.iter().enumerate() {
        let n = g.len();
        let stride = (n / per_tensor).max(1);
        for idx in (0..n).step_by(stride).take(per_tensor) {
            let mut plus = model.clone();
            plus.tensors_mut()[ti].data[idx] += h;
            let mut minus = model.clone();
            minus.tensors_mut()[ti].data[idx] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let denom = fd.abs().max(g[idx].abs()).max(1e-6);
            let rel = (fd - g[idx]).abs() / denom;
            if rel > worst {
                worst = rel;
            }
            assert!(
                rel < 1e-4,
                "{}[{idx}]: analytic {} vs numeric {fd} (rel {rel:.2e})",
                names[ti],
                g[idx]
            );
        }
    }
    worst
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
