//! FNO-2D over (t, x).
//!
//! The initial condition is replicated over the time axis and stacked with
//! normalized t and x coordinate channels, lifted pointwise to `width`
//! channels, zero-padded, passed through Fourier layers
//! `gelu(spectral_conv(v) + skip(v))`, cropped and projected back to one
//! channel.
//!
//! Spectral convolutions keep `modes_t` time frequencies centred on zero
//! (`0..ceil(m/2)` and the last `floor(m/2)`) and the first `modes_x`
//! non-negative space frequencies of the real half spectrum. Transforms are
//! evaluated as truncated DFT matrix products, which only ever touch the
//! retained modes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{add_column_sums, add_row_bias, gemm};
use crate::math::{cos, gelu_with_grad, sin, PI};
use crate::params::{Parameters, Tensor};
use crate::rng::{self, Rng};
use crate::{Error, Result};

pub const INPUT_CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FnoSpec {
    pub width: usize,
    pub n_layers: usize,
    pub modes_t: usize,
    pub modes_x: usize,
    pub pad_t: usize,
    pub pad_x: usize,
    pub projection: usize,
}

impl FnoSpec {
    /// Width 64, four layers, 12×12 modes, padding 9 on both axes,
    /// projection through 128 channels.
    pub fn full() -> Self {
        Self {
            width: 64,
            n_layers: 4,
            modes_t: 12,
            modes_x: 12,
            pad_t: 9,
            pad_x: 9,
            projection: 128,
        }
    }

    pub fn validate(&self, nt: usize, nx: usize) -> Result<()> {
        if self.width == 0 || self.projection == 0 || self.n_layers == 0 {
            return Err(Error::invalid("FNO widths and layer count must be positive"));
        }
        if self.modes_t == 0 || self.modes_x == 0 {
            return Err(Error::invalid("FNO must retain at least one mode per axis"));
        }
        let (tp, xp) = (nt + self.pad_t, nx + self.pad_x);
        check_modes(self.modes_t, self.modes_x, tp, xp)
    }

    pub fn lift_parameters(&self) -> usize {
        INPUT_CHANNELS * self.width + self.width
    }

    pub fn skip_parameters(&self) -> usize {
        self.width * self.width + self.width
    }

    pub fn spectral_parameters(&self) -> usize {
        2 * self.width * self.width * self.modes_t * self.modes_x
    }

    pub fn projection_parameters(&self) -> (usize, usize) {
        (
            self.width * self.projection + self.projection,
            self.projection + 1,
        )
    }

    /// Lift, skip connections and projections; the spectral weights are
    /// excluded.
    pub fn dense_parameter_count(&self) -> usize {
        let (p1, p2) = self.projection_parameters();
        self.lift_parameters() + self.n_layers * self.skip_parameters() + p1 + p2
    }

    pub fn parameter_count(&self) -> usize {
        self.dense_parameter_count() + self.n_layers * self.spectral_parameters()
    }
}

fn check_modes(mt: usize, mx: usize, t: usize, x: usize) -> Result<()> {
    if mt > t {
        return Err(Error::invalid(format!(
            "{mt} time modes exceed transform length {t}"
        )));
    }
    if mx > x / 2 + 1 {
        return Err(Error::invalid(format!(
            "{mx} space modes exceed half spectrum of length {x}"
        )));
    }
    Ok(())
}

/// Retained time-frequency rows for `modes` out of a length-`t` transform.
pub fn time_modes(modes: usize, t: usize) -> Vec<usize> {
    let low = modes.div_ceil(2);
    let high = modes / 2;
    (0..low).chain(t - high..t).collect()
}

/// Truncated DFT matrices for one `(T, X, modes_t, modes_x)` combination.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    t: usize,
    x: usize,
    mt: usize,
    mx: usize,
    /// `[X, mx]` cos / sin of `2 pi kx x / X`.
    cx: Vec<f64>,
    sx: Vec<f64>,
    /// Inverse-transform versions with the half-spectrum weights
    /// `c_kx / (T X)` folded in.
    cxi: Vec<f64>,
    sxi: Vec<f64>,
    /// `[mt, T]` cos / sin of `2 pi kt t / T` over the retained rows.
    ct: Vec<f64>,
    st: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(t: usize, x: usize, mt: usize, mx: usize) -> Result<Self> {
        check_modes(mt, mx, t, x)?;
        let mut cx = vec![0.0; x * mx];
        let mut sx = vec![0.0; x * mx];
        let mut cxi = vec![0.0; x * mx];
        let mut sxi = vec![0.0; x * mx];
        let norm = 1.0 / (t * x) as f64;
        for xi in 0..x {
            for k in 0..mx {
                // (k * xi) mod x keeps the angle small for accuracy
                let th = 2.0 * PI * ((k * xi) % x) as f64 / x as f64;
                let w = if k == 0 || (x.is_multiple_of(2) && k == x / 2) {
                    1.0
                } else {
                    2.0
                };
                cx[xi * mx + k] = cos(th);
                sx[xi * mx + k] = sin(th);
                cxi[xi * mx + k] = w * norm * cos(th);
                sxi[xi * mx + k] = w * norm * sin(th);
            }
        }
        let rows = time_modes(mt, t);
        let mut ct = vec![0.0; mt * t];
        let mut st = vec![0.0; mt * t];
        for (r, &kt) in rows.iter().enumerate() {
            for ti in 0..t {
                let th = 2.0 * PI * ((kt * ti) % t) as f64 / t as f64;
                ct[r * t + ti] = cos(th);
                st[r * t + ti] = sin(th);
            }
        }
        Ok(Self {
            t,
            x,
            mt,
            mx,
            cx,
            sx,
            cxi,
            sxi,
            ct,
            st,
        })
    }
}

/// Complex channel-mixing weights `[in, out, modes_t, modes_x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWeights {
    pub re: Tensor,
    pub im: Tensor,
}

impl SpectralWeights {
    pub fn zeros(cin: usize, cout: usize, mt: usize, mx: usize) -> Self {
        Self {
            re: Tensor::zeros(vec![cin, cout, mt, mx]),
            im: Tensor::zeros(vec![cin, cout, mt, mx]),
        }
    }

    /// Real and imaginary parts uniform in `[0, 1/(cin cout))`.
    pub fn init(cin: usize, cout: usize, mt: usize, mx: usize, rng: &mut Rng) -> Self {
        let scale = 1.0 / (cin * cout) as f64;
        let n = cin * cout * mt * mx;
        let mut draw = || (0..n).map(|_| scale * rng::uniform(rng)).collect();
        let re = Tensor::new(vec![cin, cout, mt, mx], draw());
        let im = Tensor::new(vec![cin, cout, mt, mx], draw());
        Self { re, im }
    }

    pub fn channels(&self) -> (usize, usize) {
        (self.re.shape[0], self.re.shape[1])
    }

    pub fn modes(&self) -> (usize, usize) {
        (self.re.shape[2], self.re.shape[3])
    }

    /// Forward pass for one sample `v: [cin, T, X]`; also returns the
    /// retained input spectrum needed by `backward`.
    pub fn forward(&self, v: &[f64], basis: &SpectralBasis) -> (Vec<f64>, Spectrum) {
        let (cin, cout) = self.channels();
        let (t, x, mt, mx) = (basis.t, basis.x, basis.mt, basis.mx);
        let m = mt * mx;
        debug_assert_eq!(v.len(), cin * t * x);

        // x-transform: A = V Cx - i V Sx, shape [cin*T, mx]
        let mut ar = vec![0.0; cin * t * mx];
        let mut ai = vec![0.0; cin * t * mx];
        gemm(cin * t, x, mx, 1.0, v, false, &basis.cx, false, 0.0, &mut ar);
        gemm(cin * t, x, mx, -1.0, v, false, &basis.sx, false, 0.0, &mut ai);

        // t-transform per channel: B = (Ct - i St) A, shape [cin, mt, mx]
        let mut br = vec![0.0; cin * m];
        let mut bi = vec![0.0; cin * m];
        for c in 0..cin {
            let (a_r, a_i) = (&ar[c * t * mx..(c + 1) * t * mx], &ai[c * t * mx..(c + 1) * t * mx]);
            let (b_r, b_i) = (&mut br[c * m..(c + 1) * m], &mut bi[c * m..(c + 1) * m]);
            gemm(mt, t, mx, 1.0, &basis.ct, false, a_r, false, 0.0, b_r);
            gemm(mt, t, mx, 1.0, &basis.st, false, a_i, false, 1.0, b_r);
            gemm(mt, t, mx, 1.0, &basis.ct, false, a_i, false, 0.0, b_i);
            gemm(mt, t, mx, -1.0, &basis.st, false, a_r, false, 1.0, b_i);
        }

        // mode-wise channel mixing: Z[o] = sum_i W[i, o] B[i]
        let mut zr = vec![0.0; cout * m];
        let mut zi = vec![0.0; cout * m];
        for i in 0..cin {
            let (b_r, b_i) = (&br[i * m..(i + 1) * m], &bi[i * m..(i + 1) * m]);
            for o in 0..cout {
                let off = (i * cout + o) * m;
                let (w_r, w_i) = (&self.re.data[off..off + m], &self.im.data[off..off + m]);
                let (z_r, z_i) = (&mut zr[o * m..(o + 1) * m], &mut zi[o * m..(o + 1) * m]);
                for k in 0..m {
                    z_r[k] += w_r[k] * b_r[k] - w_i[k] * b_i[k];
                    z_i[k] += w_r[k] * b_i[k] + w_i[k] * b_r[k];
                }
            }
        }

        // inverse t-transform: D = (Ct + i St)^T Z, shape [cout*T, mx]
        let mut dr = vec![0.0; cout * t * mx];
        let mut di = vec![0.0; cout * t * mx];
        for o in 0..cout {
            let (z_r, z_i) = (&zr[o * m..(o + 1) * m], &zi[o * m..(o + 1) * m]);
            let (d_r, d_i) = (
                &mut dr[o * t * mx..(o + 1) * t * mx],
                &mut di[o * t * mx..(o + 1) * t * mx],
            );
            gemm(t, mt, mx, 1.0, &basis.ct, true, z_r, false, 0.0, d_r);
            gemm(t, mt, mx, -1.0, &basis.st, true, z_i, false, 1.0, d_r);
            gemm(t, mt, mx, 1.0, &basis.ct, true, z_i, false, 0.0, d_i);
            gemm(t, mt, mx, 1.0, &basis.st, true, z_r, false, 1.0, d_i);
        }

        // inverse real x-transform: y = Dr Cxi^T - Di Sxi^T
        let mut y = vec![0.0; cout * t * x];
        gemm(cout * t, mx, x, 1.0, &dr, false, &basis.cxi, true, 0.0, &mut y);
        gemm(cout * t, mx, x, -1.0, &di, false, &basis.sxi, true, 1.0, &mut y);
        (y, Spectrum { re: br, im: bi })
    }

    /// Accumulates weight gradients into `grads` and returns `dL/dv`.
    pub fn backward(
        &self,
        spectrum: &Spectrum,
        gy: &[f64],
        basis: &SpectralBasis,
        grads: &mut SpectralWeights,
    ) -> Vec<f64> {
        let (cin, cout) = self.channels();
        let (t, x, mt, mx) = (basis.t, basis.x, basis.mt, basis.mx);
        let m = mt * mx;

        let mut gdr = vec![0.0; cout * t * mx];
        let mut gdi = vec![0.0; cout * t * mx];
        gemm(cout * t, x, mx, 1.0, gy, false, &basis.cxi, false, 0.0, &mut gdr);
        gemm(cout * t, x, mx, -1.0, gy, false, &basis.sxi, false, 0.0, &mut gdi);

        let mut gzr = vec![0.0; cout * m];
        let mut gzi = vec![0.0; cout * m];
        for o in 0..cout {
            let (g_r, g_i) = (
                &gdr[o * t * mx..(o + 1) * t * mx],
                &gdi[o * t * mx..(o + 1) * t * mx],
            );
            let (z_r, z_i) = (&mut gzr[o * m..(o + 1) * m], &mut gzi[o * m..(o + 1) * m]);
            gemm(mt, t, mx, 1.0, &basis.ct, false, g_r, false, 0.0, z_r);
            gemm(mt, t, mx, 1.0, &basis.st, false, g_i, false, 1.0, z_r);
            gemm(mt, t, mx, -1.0, &basis.st, false, g_r, false, 0.0, z_i);
            gemm(mt, t, mx, 1.0, &basis.ct, false, g_i, false, 1.0, z_i);
        }

        let (br, bi) = (&spectrum.re, &spectrum.im);
        let mut gbr = vec![0.0; cin * m];
        let mut gbi = vec![0.0; cin * m];
        for i in 0..cin {
            let (b_r, b_i) = (&br[i * m..(i + 1) * m], &bi[i * m..(i + 1) * m]);
            for o in 0..cout {
                let off = (i * cout + o) * m;
                let (z_r, z_i) = (&gzr[o * m..(o + 1) * m], &gzi[o * m..(o + 1) * m]);
                let (w_r, w_i) = (&self.re.data[off..off + m], &self.im.data[off..off + m]);
                let (gw_r, gw_i) = grads_pair(grads, off, m);
                for k in 0..m {
                    gw_r[k] += z_r[k] * b_r[k] + z_i[k] * b_i[k];
                    gw_i[k] += -z_r[k] * b_i[k] + z_i[k] * b_r[k];
                }
                let (gb_r, gb_i) = (&mut gbr[i * m..(i + 1) * m], &mut gbi[i * m..(i + 1) * m]);
                for k in 0..m {
                    gb_r[k] += w_r[k] * z_r[k] + w_i[k] * z_i[k];
                    gb_i[k] += -w_i[k] * z_r[k] + w_r[k] * z_i[k];
                }
            }
        }

        let mut gar = vec![0.0; cin * t * mx];
        let mut gai = vec![0.0; cin * t * mx];
        for c in 0..cin {
            let (b_r, b_i) = (&gbr[c * m..(c + 1) * m], &gbi[c * m..(c + 1) * m]);
            let (a_r, a_i) = (
                &mut gar[c * t * mx..(c + 1) * t * mx],
                &mut gai[c * t * mx..(c + 1) * t * mx],
            );
            gemm(t, mt, mx, 1.0, &basis.ct, true, b_r, false, 0.0, a_r);
            gemm(t, mt, mx, -1.0, &basis.st, true, b_i, false, 1.0, a_r);
            gemm(t, mt, mx, 1.0, &basis.st, true, b_r, false, 0.0, a_i);
            gemm(t, mt, mx, 1.0, &basis.ct, true, b_i, false, 1.0, a_i);
        }

        let mut gv = vec![0.0; cin * t * x];
        gemm(cin * t, mx, x, 1.0, &gar, false, &basis.cx, true, 0.0, &mut gv);
        gemm(cin * t, mx, x, -1.0, &gai, false, &basis.sx, true, 1.0, &mut gv);
        gv
    }
}

fn grads_pair(g: &mut SpectralWeights, off: usize, m: usize) -> (&mut [f64], &mut [f64]) {
    (
        &mut g.re.data[off..off + m],
        &mut g.im.data[off..off + m],
    )
}

/// Retained input spectrum `[cin, mt, mx]`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Spectral convolution of a batch `v: [batch, cin, T, X]`.
pub fn spectral_conv2d(
    v: &[f64],
    batch: usize,
    t: usize,
    x: usize,
    weights: &SpectralWeights,
) -> Result<Vec<f64>> {
    let (cin, cout) = weights.channels();
    if v.len() != batch * cin * t * x {
        return Err(Error::shape("spectral_conv2d input", batch * cin * t * x, v.len()));
    }
    let (mt, mx) = weights.modes();
    let basis = SpectralBasis::new(t, x, mt, mx)?;
    let mut out = Vec::with_capacity(batch * cout * t * x);
    for s in v.chunks_exact(cin * t * x) {
        out.extend(weights.forward(s, &basis).0);
    }
    Ok(out)
}

/// One Fourier layer: spectral convolution plus a 1×1 convolution skip,
/// followed by GELU.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLayer {
    pub spectral: SpectralWeights,
    /// `[in, out]`
    pub skip_w: Tensor,
    pub skip_b: Tensor,
}

pub struct LayerCache {
    input: Vec<f64>,
    /// Activation derivative at the pre-activation.
    dact: Vec<f64>,
    spectrum: Spectrum,
}

impl FourierLayer {
    pub fn zeros(width: usize, mt: usize, mx: usize) -> Self {
        Self {
            spectral: SpectralWeights::zeros(width, width, mt, mx),
            skip_w: Tensor::zeros(vec![width, width]),
            skip_b: Tensor::zeros(vec![width]),
        }
    }

    pub fn init(width: usize, mt: usize, mx: usize, rng: &mut Rng) -> Self {
        let spectral = SpectralWeights::init(width, width, mt, mx, rng);
        let skip_w = Tensor::new(
            vec![width, width],
            rng::glorot_uniform(rng, width, width, width * width),
        );
        Self {
            spectral,
            skip_w,
            skip_b: Tensor::zeros(vec![width]),
        }
    }

    pub fn width(&self) -> usize {
        self.skip_b.len()
    }

    pub fn skip_parameter_count(&self) -> usize {
        self.skip_w.len() + self.skip_b.len()
    }

    /// `v: [width, T, X]` for a single sample.
    pub fn forward(&self, v: &[f64], basis: &SpectralBasis) -> (Vec<f64>, LayerCache) {
        let w = self.width();
        let n = basis.t * basis.x;
        let (mut pre, spectrum) = self.spectral.forward(v, basis);
        // skip: pre[o, :] += sum_i W[i, o] v[i, :] + b[o]
        gemm(w, w, n, 1.0, &self.skip_w.data, true, v, false, 1.0, &mut pre);
        for (o, row) in pre.chunks_exact_mut(n).enumerate() {
            let b = self.skip_b.data[o];
            row.iter_mut().for_each(|p| *p += b);
        }
        let mut dact = pre;
        let mut out = vec![0.0; dact.len()];
        for (o, d) in out.iter_mut().zip(dact.iter_mut()) {
            (*o, *d) = gelu_with_grad(*d);
        }
        (
            out,
            LayerCache {
                input: v.to_vec(),
                dact,
                spectrum,
            },
        )
    }

    pub fn backward(
        &self,
        cache: &LayerCache,
        grad_out: &[f64],
        basis: &SpectralBasis,
        grads: &mut FourierLayer,
    ) -> Vec<f64> {
        let w = self.width();
        let n = basis.t * basis.x;
        let g: Vec<f64> = grad_out
            .iter()
            .zip(&cache.dact)
            .map(|(g, d)| g * d)
            .collect();
        let mut gv = self
            .spectral
            .backward(&cache.spectrum, &g, basis, &mut grads.spectral);
        gemm(w, n, w, 1.0, &cache.input, false, &g, true, 1.0, &mut grads.skip_w.data);
        for (o, row) in g.chunks_exact(n).enumerate() {
            grads.skip_b.data[o] += row.iter().sum::<f64>();
        }
        gemm(w, w, n, 1.0, &self.skip_w.data, false, &g, false, 1.0, &mut gv);
        gv
    }
}

/// Applies one Fourier layer to a batch `v: [batch, width, T, X]`.
pub fn fourier_layer(
    v: &[f64],
    batch: usize,
    t: usize,
    x: usize,
    layer: &FourierLayer,
) -> Result<Vec<f64>> {
    let w = layer.width();
    if v.len() != batch * w * t * x {
        return Err(Error::shape("fourier_layer input", batch * w * t * x, v.len()));
    }
    let (mt, mx) = layer.spectral.modes();
    let basis = SpectralBasis::new(t, x, mt, mx)?;
    let mut out = Vec::with_capacity(v.len());
    for s in v.chunks_exact(w * t * x) {
        out.extend(layer.forward(s, &basis).0);
    }
    Ok(out)
}

/// `[batch, nt, nx, 3]`: replicated initial condition, t in [0, 1], x in [0, 1].
pub fn build_fno_input(u0: &[f64], batch: usize, nt: usize, nx: usize) -> Result<Vec<f64>> {
    if u0.len() != batch * nx {
        return Err(Error::shape("build_fno_input", batch * nx, u0.len()));
    }
    let unit = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(batch * nt * nx * INPUT_CHANNELS);
    for s in u0.chunks_exact(nx) {
        for ti in 0..nt {
            for (xi, &u) in s.iter().enumerate() {
                out.push(u);
                out.push(unit(ti, nt));
                out.push(unit(xi, nx));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fno {
    pub spec: FnoSpec,
    /// `[3, width]`
    pub lift_w: Tensor,
    pub lift_b: Tensor,
    pub layers: Vec<FourierLayer>,
    /// `[width, projection]`
    pub proj1_w: Tensor,
    pub proj1_b: Tensor,
    /// `[projection, 1]`
    pub proj2_w: Tensor,
    pub proj2_b: Tensor,
}

pub struct FnoCache {
    input: Vec<f64>,
    layers: Vec<LayerCache>,
    cropped: Vec<f64>,
    proj_act: Vec<f64>,
    proj_dact: Vec<f64>,
}

impl Fno {
    pub fn zeros(spec: FnoSpec) -> Self {
        let w = spec.width;
        Self {
            spec,
            lift_w: Tensor::zeros(vec![INPUT_CHANNELS, w]),
            lift_b: Tensor::zeros(vec![w]),
            layers: (0..spec.n_layers)
                .map(|_| FourierLayer::zeros(w, spec.modes_t, spec.modes_x))
                .collect(),
            proj1_w: Tensor::zeros(vec![w, spec.projection]),
            proj1_b: Tensor::zeros(vec![spec.projection]),
            proj2_w: Tensor::zeros(vec![spec.projection, 1]),
            proj2_b: Tensor::zeros(vec![1]),
        }
    }

    pub fn init(spec: FnoSpec, rng: &mut Rng) -> Self {
        let w = spec.width;
        let p = spec.projection;
        let lift_w = Tensor::new(
            vec![INPUT_CHANNELS, w],
            rng::glorot_uniform(rng, INPUT_CHANNELS, w, INPUT_CHANNELS * w),
        );
        let layers = (0..spec.n_layers)
            .map(|_| FourierLayer::init(w, spec.modes_t, spec.modes_x, rng))
            .collect();
        let proj1_w = Tensor::new(vec![w, p], rng::glorot_uniform(rng, w, p, w * p));
        let proj2_w = Tensor::new(vec![p, 1], rng::glorot_uniform(rng, p, 1, p));
        Self {
            spec,
            lift_w,
            lift_b: Tensor::zeros(vec![w]),
            layers,
            proj1_w,
            proj1_b: Tensor::zeros(vec![p]),
            proj2_w,
            proj2_b: Tensor::zeros(vec![1]),
        }
    }

    pub fn basis(&self, nt: usize, nx: usize) -> Result<SpectralBasis> {
        self.spec.validate(nt, nx)?;
        SpectralBasis::new(
            nt + self.spec.pad_t,
            nx + self.spec.pad_x,
            self.spec.modes_t,
            self.spec.modes_x,
        )
    }

    /// `[batch, nt, nx]` prediction from `u0: [batch, nx]`.
    pub fn forward(&self, u0: &[f64], batch: usize, nt: usize, nx: usize) -> Result<Vec<f64>> {
        let basis = self.basis(nt, nx)?;
        let inputs = build_fno_input(u0, batch, nt, nx)?;
        let per = nt * nx * INPUT_CHANNELS;
        let mut out = Vec::with_capacity(batch * nt * nx);
        for s in inputs.chunks_exact(per) {
            out.extend(self.forward_sample(s, nt, nx, &basis)?.0);
        }
        Ok(out)
    }

    /// Single sample from its `[nt, nx, 3]` input tensor.
    pub fn forward_sample(
        &self,
        input: &[f64],
        nt: usize,
        nx: usize,
        basis: &SpectralBasis,
    ) -> Result<(Vec<f64>, FnoCache)> {
        let w = self.spec.width;
        let p = self.spec.projection;
        let (tp, xp) = (basis.t, basis.x);
        let n = nt * nx;
        if input.len() != n * INPUT_CHANNELS {
            return Err(Error::shape("fno input", n * INPUT_CHANNELS, input.len()));
        }

        // lift to [n, w], then scatter into the padded channel-major grid
        let mut lifted = vec![0.0; n * w];
        gemm(n, INPUT_CHANNELS, w, 1.0, input, false, &self.lift_w.data, false, 0.0, &mut lifted);
        add_row_bias(&mut lifted, &self.lift_b.data);
        let mut v = vec![0.0; w * tp * xp];
        for ti in 0..nt {
            for xi in 0..nx {
                let src = &lifted[(ti * nx + xi) * w..(ti * nx + xi + 1) * w];
                for (c, &val) in src.iter().enumerate() {
                    v[(c * tp + ti) * xp + xi] = val;
                }
            }
        }

        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, cache) = layer.forward(&v, basis);
            caches.push(cache);
            v = next;
        }

        // crop back to [n, w]
        let mut cropped = vec![0.0; n * w];
        for ti in 0..nt {
            for xi in 0..nx {
                let dst = &mut cropped[(ti * nx + xi) * w..(ti * nx + xi + 1) * w];
                for (c, d) in dst.iter_mut().enumerate() {
                    *d = v[(c * tp + ti) * xp + xi];
                }
            }
        }

        let mut proj_pre = vec![0.0; n * p];
        gemm(n, w, p, 1.0, &cropped, false, &self.proj1_w.data, false, 0.0, &mut proj_pre);
        add_row_bias(&mut proj_pre, &self.proj1_b.data);
        let mut proj_dact = proj_pre;
        let mut proj_act = vec![0.0; proj_dact.len()];
        for (a, d) in proj_act.iter_mut().zip(proj_dact.iter_mut()) {
            (*a, *d) = gelu_with_grad(*d);
        }
        let b = self.proj2_b.data[0];
        let w2 = &self.proj2_w.data;
        let out: Vec<f64> = proj_act
            .chunks_exact(p)
            .map(|row| b + row.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>())
            .collect();
        if let Some(i) = out.iter().position(|o| !o.is_finite()) {
            return Err(Error::NonFinite {
                what: "FNO output",
                index: i,
            });
        }
        Ok((
            out,
            FnoCache {
                input: input.to_vec(),
                layers: caches,
                cropped,
                proj_act,
                proj_dact,
            },
        ))
    }

    pub fn backward_sample(
        &self,
        cache: &FnoCache,
        grad_out: &[f64],
        nt: usize,
        nx: usize,
        basis: &SpectralBasis,
        grads: &mut Fno,
    ) {
        let w = self.spec.width;
        let p = self.spec.projection;
        let (tp, xp) = (basis.t, basis.x);
        let n = nt * nx;

        gemm(p, n, 1, 1.0, &cache.proj_act, true, grad_out, false, 1.0, &mut grads.proj2_w.data);
        grads.proj2_b.data[0] += grad_out.iter().sum::<f64>();
        let mut g_act = vec![0.0; n * p];
        gemm(n, 1, p, 1.0, grad_out, false, &self.proj2_w.data, true, 0.0, &mut g_act);
        for (g, d) in g_act.iter_mut().zip(&cache.proj_dact) {
            *g *= d;
        }
        gemm(w, n, p, 1.0, &cache.cropped, true, &g_act, false, 1.0, &mut grads.proj1_w.data);
        add_column_sums(&mut grads.proj1_b.data, &g_act);
        let mut g_crop = vec![0.0; n * w];
        gemm(n, p, w, 1.0, &g_act, false, &self.proj1_w.data, true, 0.0, &mut g_crop);

        let mut gv = vec![0.0; w * tp * xp];
        for ti in 0..nt {
            for xi in 0..nx {
                let src = &g_crop[(ti * nx + xi) * w..(ti * nx + xi + 1) * w];
                for (c, &val) in src.iter().enumerate() {
                    gv[(c * tp + ti) * xp + xi] = val;
                }
            }
        }
        for (l, layer) in self.layers.iter().enumerate().rev() {
            gv = layer.backward(&cache.layers[l], &gv, basis, &mut grads.layers[l]);
        }

        let mut g_lift = vec![0.0; n * w];
        for ti in 0..nt {
            for xi in 0..nx {
                let dst = &mut g_lift[(ti * nx + xi) * w..(ti * nx + xi + 1) * w];
                for (c, d) in dst.iter_mut().enumerate() {
                    *d = gv[(c * tp + ti) * xp + xi];
                }
            }
        }
        gemm(
            INPUT_CHANNELS,
            n,
            w,
            1.0,
            &cache.input,
            true,
            &g_lift,
            false,
            1.0,
            &mut grads.lift_w.data,
        );
        add_column_sums(&mut grads.lift_b.data, &g_lift);
    }
}

impl Parameters for Fno {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            (String::from("lift.w"), &self.lift_w),
            (String::from("lift.b"), &self.lift_b),
        ];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("fourier{l}.spectral.re"), &layer.spectral.re));
            out.push((format!("fourier{l}.spectral.im"), &layer.spectral.im));
            out.push((format!("fourier{l}.skip.w"), &layer.skip_w));
            out.push((format!("fourier{l}.skip.b"), &layer.skip_b));
        }
        out.push((String::from("proj1.w"), &self.proj1_w));
        out.push((String::from("proj1.b"), &self.proj1_b));
        out.push((String::from("proj2.w"), &self.proj2_w));
        out.push((String::from("proj2.b"), &self.proj2_b));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.lift_w, &mut self.lift_b];
        for layer in self.layers.iter_mut() {
            out.push(&mut layer.spectral.re);
            out.push(&mut layer.spectral.im);
            out.push(&mut layer.skip_w);
            out.push(&mut layer.skip_b);
        }
        out.push(&mut self.proj1_w);
        out.push(&mut self.proj1_b);
        out.push(&mut self.proj2_w);
        out.push(&mut self.proj2_b);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_parameter_counts() {
        let spec = FnoSpec::full();
        assert_eq!(spec.lift_parameters(), 256);
        assert_eq!(spec.skip_parameters(), 4_160);
        assert_eq!(spec.projection_parameters(), (8_320, 129));
        assert_eq!(spec.dense_parameter_count(), 25_345);
        let fno = Fno::zeros(spec);
        assert_eq!(fno.layers[0].skip_parameter_count(), 4_160);
        assert_eq!(
            fno.parameter_count(),
            25_345 + 4 * 2 * 64 * 64 * 12 * 12
        );
    }

    #[test]
    fn padded_grid_matches_reported_shapes() {
        let spec = FnoSpec::full();
        assert_eq!((200 + spec.pad_t, 50 + spec.pad_x), (209, 59));
        assert!(spec.validate(200, 50).is_ok());
        assert!(FnoSpec { modes_x: 40, ..spec }.validate(200, 50).is_err());
        assert!(FnoSpec { modes_t: 300, ..spec }.validate(200, 50).is_err());
    }

    #[test]
    fn time_modes_are_centred() {
        assert_eq!(time_modes(4, 10), vec![0, 1, 8, 9]);
        assert_eq!(time_modes(3, 10), vec![0, 1, 9]);
    }

    #[test]
    fn input_channels() {
        let u0 = [1.0, 2.0, 3.0, 4.0];
        let inp = build_fno_input(&u0, 1, 3, 4).unwrap();
        assert_eq!(inp.len(), 3 * 4 * 3);
        for t in 0..3 {
            for x in 0..4 {
                let o = (t * 4 + x) * 3;
                assert_eq!(inp[o], u0[x]);
                assert_eq!(inp[o + 1], t as f64 / 2.0);
                assert_eq!(inp[o + 2], x as f64 / 3.0);
            }
        }
        let zero = build_fno_input(&[0.0; 4], 1, 3, 4).unwrap();
        for (a, b) in zero.chunks(3).zip(inp.chunks(3)) {
            assert_eq!(a[0], 0.0);
            assert_eq!(&a[1..], &b[1..]);
        }
        let shape = build_fno_input(&[0.5; 100], 2, 200, 50).unwrap();
        assert_eq!(shape.len(), 2 * 200 * 50 * 3);
    }

    #[test]
    fn zero_spectral_weights_give_zero() {
        let w = SpectralWeights::zeros(2, 2, 2, 2);
        let v: Vec<f64> = (0..2 * 4 * 4).map(|i| (i as f64).sin()).collect();
        let y = spectral_conv2d(&v, 1, 4, 4, &w).unwrap();
        assert!(y.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn unit_weights_pass_band_limited_fields() {
        let (t, x) = (8, 8);
        let (mt, mx) = (4, 3);
        let mut w = SpectralWeights::zeros(1, 1, mt, mx);
        w.re.fill(1.0);
        // kt in {0, +-1}, kx in {0, 1, 2} lie inside the retained band
        let v: Vec<f64> = (0..t * x)
            .map(|n| {
                let (ti, xi) = ((n / x) as f64, (n % x) as f64);
                let a = 2.0 * PI * ti / t as f64;
                let b = 2.0 * PI * xi / x as f64;
                0.3 + cos(a + b) + 0.5 * sin(a - 2.0 * b) + 0.2 * cos(2.0 * b)
            })
            .collect();
        let y = spectral_conv2d(&v, 1, t, x, &w).unwrap();
        for (a, b) in y.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_input_zero_output_layer() {
        let mut r = rng::keyed(3, 3);
        let mut layer = FourierLayer::init(3, 2, 2, &mut r);
        layer.skip_b.fill(0.0);
        let y = fourier_layer(&[0.0; 3 * 5 * 6], 1, 5, 6, &layer).unwrap();
        assert!(y.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn all_zero_network_predicts_zero_field() {
        let spec = FnoSpec {
            width: 4,
            n_layers: 2,
            modes_t: 4,
            modes_x: 3,
            pad_t: 2,
            pad_x: 2,
            projection: 5,
        };
        let fno = Fno::zeros(spec);
        let out = fno.forward(&[1.0; 2 * 8], 2, 6, 8).unwrap();
        assert_eq!(out.len(), 2 * 6 * 8);
        assert!(out.iter().all(|&v| v == 0.0));
    }
}
