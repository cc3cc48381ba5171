//! Scalar activations and their derivatives.

pub use libm::{cos, fabs, sin, sqrt, tanh};

/// Platform `exp` when `std` is available (noticeably faster), `libm`
/// otherwise.
#[inline]
pub fn exp(z: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        z.exp()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::exp(z)
    }
}

pub const PI: f64 = core::f64::consts::PI;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let e = exp(-fabs(z));
    let num = if z >= 0.0 { 1.0 } else { e };
    num / (1.0 + e)
}

/// swish(z) = z * sigmoid(z)
#[inline]
pub fn swish(z: f64) -> f64 {
    z * sigmoid(z)
}

#[inline]
pub fn swish_grad(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 + z * (1.0 - s))
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Tanh form of GELU.
#[inline]
pub fn gelu(z: f64) -> f64 {
    // 0.5 (1 + tanh u) == sigmoid(2u)
    z * sigmoid(2.0 * GELU_C * (z + GELU_A * z * z * z))
}

/// GELU value and derivative sharing one exponential.
#[inline]
pub fn gelu_with_grad(z: f64) -> (f64, f64) {
    let s = sigmoid(2.0 * GELU_C * (z + GELU_A * z * z * z));
    let du = GELU_C * (1.0 + 3.0 * GELU_A * z * z);
    (z * s, s + 2.0 * z * s * (1.0 - s) * du)
}

pub fn gelu_grad(z: f64) -> f64 {
    gelu_with_grad(z).1
}

#[inline]
pub fn sech(z: f64) -> f64 {
    // 2 / (e^z + e^-z), written to avoid overflow for large |z|
    let a = fabs(z);
    let e = exp(-a);
    2.0 * e / (1.0 + e * e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: fn(f64) -> f64, z: f64) -> f64 {
        let h = 1e-6;
        (f(z + h) - f(z - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &z in &[-4.0, -1.3, -0.2, 0.0, 0.7, 2.5, 6.0] {
            assert!((swish_grad(z) - central(swish, z)).abs() < 1e-8);
            assert!((gelu_grad(z) - central(gelu, z)).abs() < 1e-8);
            let tanh_form = 0.5 * z * (1.0 + tanh(GELU_C * (z + GELU_A * z * z * z)));
            assert!((gelu(z) - tanh_form).abs() < 1e-14);
        }
    }

    #[test]
    fn sigmoid_is_stable_in_the_tails() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sech_matches_cosh_definition() {
        for &z in &[-3.0, -0.5, 0.0, 1.0, 2.5] {
            let expect = 1.0 / libm::cosh(z);
            assert!((sech(z) - expect).abs() < 1e-15);
        }
        assert_eq!(sech(1e4), 0.0);
        assert_eq!(gelu(0.0), 0.0);
    }
}
