//! Recurrent sequence heads.
//!
//! The operator's flat `[batch, nt * nx]` output is read as a time-major
//! sequence of `nt` spatial snapshots. A single recurrent layer (simple,
//! GRU or LSTM) runs over it from a zero state and every hidden state is
//! projected back to `nx` values: `out_t = V h_t + c`.
//!
//! Gate layout inside the stacked weight matrices: GRU `[r, z, n]`, LSTM
//! `[i, f, g, o]`. The GRU keeps separate input and recurrent biases
//! (reset applied after the recurrent product); the LSTM has one bias per
//! gate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{add_column_sums, add_row_bias, gemm};
use crate::math::{sigmoid, tanh};
use crate::params::{Parameters, Tensor};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Simple,
    Gru,
    Lstm,
}

impl CellKind {
    pub fn gates(self) -> usize {
        match self {
            CellKind::Simple => 1,
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Simple => "rnn",
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadSpec {
    pub cell: CellKind,
    pub hidden: usize,
    /// Spatial width of each snapshot (input and output).
    pub width: usize,
}

impl HeadSpec {
    pub fn full(cell: CellKind, nx: usize) -> Self {
        Self {
            cell,
            hidden: 200,
            width: nx,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.width == 0 {
            return Err(Error::invalid("head hidden size and width must be positive"));
        }
        Ok(())
    }

    /// Parameters of the recurrent layer alone.
    pub fn cell_parameter_count(&self) -> usize {
        let (h, x, g) = (self.hidden, self.width, self.cell.gates());
        let biases = if self.cell == CellKind::Gru { 2 * h } else { h };
        g * (h * (x + h) + biases)
    }

    pub fn parameter_count(&self) -> usize {
        self.cell_parameter_count() + self.hidden * self.width + self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub spec: HeadSpec,
    /// `[width, gates * hidden]`
    pub w_in: Tensor,
    /// `[hidden, gates * hidden]`
    pub w_rec: Tensor,
    pub b_in: Tensor,
    /// Recurrent biases; empty unless the cell is a GRU.
    pub b_rec: Tensor,
    /// `[hidden, width]`
    pub proj_w: Tensor,
    pub proj_b: Tensor,
}

/// Hidden (and, for the LSTM, cell) state of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(spec: &HeadSpec, batch: usize) -> Self {
        let c = if spec.cell == CellKind::Lstm {
            vec![0.0; batch * spec.hidden]
        } else {
            Vec::new()
        };
        Self {
            h: vec![0.0; batch * spec.hidden],
            c,
        }
    }
}

/// Time-major view of a flat operator output.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub batch: usize,
    pub nt: usize,
    pub nx: usize,
    pub data: Vec<f64>,
}

impl Sequence {
    pub fn row(&self, b: usize, t: usize) -> &[f64] {
        let o = (b * self.nt + t) * self.nx;
        &self.data[o..o + self.nx]
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }
}

/// `[batch, nt * nx]` → `[batch, nt, nx]`; snapshot `t` of sample `b` is
/// `flat[b][t * nx .. (t + 1) * nx]`.
pub fn reshape_sequence(flat: Vec<f64>, batch: usize, nt: usize, nx: usize) -> Result<Sequence> {
    if flat.len() != batch * nt * nx {
        return Err(Error::shape("reshape_sequence", batch * nt * nx, flat.len()));
    }
    Ok(Sequence {
        batch,
        nt,
        nx,
        data: flat,
    })
}

pub struct HeadCache {
    batch: usize,
    nt: usize,
    input: Vec<f64>,
    /// Hidden states `[batch, nt, hidden]`.
    hs: Vec<f64>,
    /// Post-activation gate values `[batch, nt, gates * hidden]`.
    gates: Vec<f64>,
    /// GRU: recurrent candidate term before reset `[batch, nt, hidden]`.
    /// LSTM: cell states `[batch, nt, hidden]`.
    aux: Vec<f64>,
}

impl Head {
    pub fn zeros(spec: HeadSpec) -> Self {
        let (h, x, g) = (spec.hidden, spec.width, spec.cell.gates());
        let rec_bias = if spec.cell == CellKind::Gru { g * h } else { 0 };
        Self {
            spec,
            w_in: Tensor::zeros(vec![x, g * h]),
            w_rec: Tensor::zeros(vec![h, g * h]),
            b_in: Tensor::zeros(vec![g * h]),
            b_rec: Tensor::zeros(vec![rec_bias]),
            proj_w: Tensor::zeros(vec![h, x]),
            proj_b: Tensor::zeros(vec![x]),
        }
    }

    /// Glorot input and projection weights, orthogonal recurrent blocks,
    /// zero biases except an LSTM forget bias of one.
    pub fn init(spec: HeadSpec, rng: &mut Rng) -> Self {
        let mut head = Self::zeros(spec);
        let (h, x, g) = (spec.hidden, spec.width, spec.cell.gates());
        for gate in 0..g {
            let win = rng::glorot_uniform(rng, x, h, x * h);
            for i in 0..x {
                for j in 0..h {
                    head.w_in.data[i * g * h + gate * h + j] = win[i * h + j];
                }
            }
            let q = rng::orthogonal(rng, h);
            for i in 0..h {
                for j in 0..h {
                    head.w_rec.data[i * g * h + gate * h + j] = q[i * h + j];
                }
            }
        }
        if spec.cell == CellKind::Lstm {
            head.b_in.data[h..2 * h].iter_mut().for_each(|b| *b = 1.0);
        }
        head.proj_w.data = rng::glorot_uniform(rng, h, x, h * x);
        head
    }

    /// One recurrent step for a single sample, evaluated unit by unit.
    pub fn cell_step(&self, x: &[f64], state: &CellState) -> Result<CellState> {
        let (hn, nx, g) = (self.spec.hidden, self.spec.width, self.spec.cell.gates());
        if x.len() != nx {
            return Err(Error::shape("cell_step input", nx, x.len()));
        }
        if state.h.len() != hn {
            return Err(Error::shape("cell_step hidden", hn, state.h.len()));
        }
        let gh = g * hn;
        let input = |col: usize| -> f64 {
            self.b_in.data[col] + (0..nx).map(|i| x[i] * self.w_in.data[i * gh + col]).sum::<f64>()
        };
        let rec = |col: usize| -> f64 {
            let b = if self.b_rec.is_empty() { 0.0 } else { self.b_rec.data[col] };
            b + (0..hn).map(|i| state.h[i] * self.w_rec.data[i * gh + col]).sum::<f64>()
        };
        let mut h = vec![0.0; hn];
        let mut c = Vec::new();
        match self.spec.cell {
            CellKind::Simple => {
                for j in 0..hn {
                    h[j] = tanh(input(j) + rec(j));
                }
            }
            CellKind::Gru => {
                for j in 0..hn {
                    let r = sigmoid(input(j) + rec(j));
                    let z = sigmoid(input(hn + j) + rec(hn + j));
                    let n = tanh(input(2 * hn + j) + r * rec(2 * hn + j));
                    h[j] = (1.0 - z) * n + z * state.h[j];
                }
            }
            CellKind::Lstm => {
                if state.c.len() != hn {
                    return Err(Error::shape("cell_step cell state", hn, state.c.len()));
                }
                c = vec![0.0; hn];
                for j in 0..hn {
                    let i = sigmoid(input(j) + rec(j));
                    let f = sigmoid(input(hn + j) + rec(hn + j));
                    let gg = tanh(input(2 * hn + j) + rec(2 * hn + j));
                    let o = sigmoid(input(3 * hn + j) + rec(3 * hn + j));
                    c[j] = f * state.c[j] + i * gg;
                    h[j] = o * tanh(c[j]);
                }
            }
        }
        Ok(CellState { h, c })
    }

    /// `V h + c` for a single hidden state.
    pub fn project(&self, h: &[f64]) -> Vec<f64> {
        let nx = self.spec.width;
        (0..nx)
            .map(|k| {
                self.proj_b.data[k]
                    + h.iter()
                        .enumerate()
                        .map(|(j, hj)| hj * self.proj_w.data[j * nx + k])
                        .sum::<f64>()
            })
            .collect()
    }

    /// `seq: [batch, nt, width]` → `[batch, nt, width]`.
    pub fn forward(&self, seq: &[f64], batch: usize, nt: usize) -> Result<Vec<f64>> {
        Ok(self.forward_cached(seq, batch, nt)?.0)
    }

    pub fn forward_cached(&self, seq: &[f64], batch: usize, nt: usize) -> Result<(Vec<f64>, HeadCache)> {
        let (hn, nx, g) = (self.spec.hidden, self.spec.width, self.spec.cell.gates());
        let gh = g * hn;
        if seq.len() != batch * nt * nx {
            return Err(Error::shape("head input", batch * nt * nx, seq.len()));
        }
        // input contributions for all timesteps at once
        let mut xw = vec![0.0; batch * nt * gh];
        gemm(batch * nt, nx, gh, 1.0, seq, false, &self.w_in.data, false, 0.0, &mut xw);
        add_row_bias(&mut xw, &self.b_in.data);

        let mut hs = vec![0.0; batch * nt * hn];
        let mut gates = vec![0.0; batch * nt * gh];
        let aux_len = if self.spec.cell == CellKind::Simple { 0 } else { batch * nt * hn };
        let mut aux = vec![0.0; aux_len];
        let mut h_prev = vec![0.0; batch * hn];
        let mut c_prev = vec![0.0; batch * hn];
        let mut rec = vec![0.0; batch * gh];

        for t in 0..nt {
            gemm(batch, hn, gh, 1.0, &h_prev, false, &self.w_rec.data, false, 0.0, &mut rec);
            if !self.b_rec.is_empty() {
                add_row_bias(&mut rec, &self.b_rec.data);
            }
            for b in 0..batch {
                let row = b * nt + t;
                let xr = &xw[row * gh..(row + 1) * gh];
                let rr = &rec[b * gh..(b + 1) * gh];
                let gt = &mut gates[row * gh..(row + 1) * gh];
                let hp = &h_prev[b * hn..(b + 1) * hn];
                let h = &mut hs[row * hn..(row + 1) * hn];
                match self.spec.cell {
                    CellKind::Simple => {
                        for j in 0..hn {
                            let v = tanh(xr[j] + rr[j]);
                            gt[j] = v;
                            h[j] = v;
                        }
                    }
                    CellKind::Gru => {
                        let cand = &mut aux[row * hn..(row + 1) * hn];
                        for j in 0..hn {
                            let r = sigmoid(xr[j] + rr[j]);
                            let z = sigmoid(xr[hn + j] + rr[hn + j]);
                            let n = tanh(xr[2 * hn + j] + r * rr[2 * hn + j]);
                            gt[j] = r;
                            gt[hn + j] = z;
                            gt[2 * hn + j] = n;
                            cand[j] = rr[2 * hn + j];
                            h[j] = (1.0 - z) * n + z * hp[j];
                        }
                    }
                    CellKind::Lstm => {
                        let cs = &mut aux[row * hn..(row + 1) * hn];
                        let cp = &c_prev[b * hn..(b + 1) * hn];
                        for j in 0..hn {
                            let i = sigmoid(xr[j] + rr[j]);
                            let f = sigmoid(xr[hn + j] + rr[hn + j]);
                            let gg = tanh(xr[2 * hn + j] + rr[2 * hn + j]);
                            let o = sigmoid(xr[3 * hn + j] + rr[3 * hn + j]);
                            gt[j] = i;
                            gt[hn + j] = f;
                            gt[2 * hn + j] = gg;
                            gt[3 * hn + j] = o;
                            let c = f * cp[j] + i * gg;
                            cs[j] = c;
                            h[j] = o * tanh(c);
                        }
                    }
                }
                if h.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        what: "recurrent state",
                        index: t,
                    });
                }
                h_prev[b * hn..(b + 1) * hn].copy_from_slice(h);
                if self.spec.cell == CellKind::Lstm {
                    c_prev[b * hn..(b + 1) * hn].copy_from_slice(&aux[row * hn..(row + 1) * hn]);
                }
            }
        }

        let mut out = vec![0.0; batch * nt * nx];
        gemm(batch * nt, hn, nx, 1.0, &hs, false, &self.proj_w.data, false, 0.0, &mut out);
        add_row_bias(&mut out, &self.proj_b.data);
        Ok((
            out,
            HeadCache {
                batch,
                nt,
                input: seq.to_vec(),
                hs,
                gates,
                aux,
            },
        ))
    }

    /// Backpropagation through time. Accumulates into `grads` and returns
    /// the gradient with respect to the input sequence.
    pub fn backward(&self, cache: &HeadCache, grad_out: &[f64], grads: &mut Head) -> Vec<f64> {
        let (hn, nx, g) = (self.spec.hidden, self.spec.width, self.spec.cell.gates());
        let gh = g * hn;
        let (batch, nt) = (cache.batch, cache.nt);
        let rows = batch * nt;

        gemm(hn, rows, nx, 1.0, &cache.hs, true, grad_out, false, 1.0, &mut grads.proj_w.data);
        add_column_sums(&mut grads.proj_b.data, grad_out);
        // dL/dh from the projection at every step
        let mut dh_out = vec![0.0; rows * hn];
        gemm(rows, nx, hn, 1.0, grad_out, false, &self.proj_w.data, true, 0.0, &mut dh_out);

        // gradients of the input-side pre-activations (incl. b_in)
        let mut dxw = vec![0.0; rows * gh];
        let mut dh_next = vec![0.0; batch * hn];
        let mut dc_next = vec![0.0; batch * hn];
        let mut drec = vec![0.0; batch * gh];
        let mut h_prev = vec![0.0; batch * hn];

        for t in (0..nt).rev() {
            for b in 0..batch {
                let row = b * nt + t;
                for j in 0..hn {
                    h_prev[b * hn + j] = if t > 0 { cache.hs[(row - 1) * hn + j] } else { 0.0 };
                }
            }
            for b in 0..batch {
                let row = b * nt + t;
                let gt = &cache.gates[row * gh..(row + 1) * gh];
                let dx = &mut dxw[row * gh..(row + 1) * gh];
                let dr = &mut drec[b * gh..(b + 1) * gh];
                let hp = &h_prev[b * hn..(b + 1) * hn];
                let dhn = &mut dh_next[b * hn..(b + 1) * hn];
                for j in 0..hn {
                    dhn[j] += dh_out[row * hn + j];
                }
                match self.spec.cell {
                    CellKind::Simple => {
                        for j in 0..hn {
                            let da = dhn[j] * (1.0 - gt[j] * gt[j]);
                            dx[j] = da;
                            dr[j] = da;
                            dhn[j] = 0.0;
                        }
                    }
                    CellKind::Gru => {
                        let cand = &cache.aux[row * hn..(row + 1) * hn];
                        for j in 0..hn {
                            let (r, z, n) = (gt[j], gt[hn + j], gt[2 * hn + j]);
                            let dh = dhn[j];
                            let dn = dh * (1.0 - z);
                            let dz = dh * (hp[j] - n);
                            let dan = dn * (1.0 - n * n);
                            let dar = dan * cand[j] * r * (1.0 - r);
                            let daz = dz * z * (1.0 - z);
                            dx[j] = dar;
                            dx[hn + j] = daz;
                            dx[2 * hn + j] = dan;
                            dr[j] = dar;
                            dr[hn + j] = daz;
                            dr[2 * hn + j] = dan * r;
                            // direct path through the update gate
                            dhn[j] = dh * z;
                        }
                    }
                    CellKind::Lstm => {
                        let cs = &cache.aux[row * hn..(row + 1) * hn];
                        let dcn = &mut dc_next[b * hn..(b + 1) * hn];
                        for j in 0..hn {
                            let (i, f, gg, o) = (gt[j], gt[hn + j], gt[2 * hn + j], gt[3 * hn + j]);
                            let c = cs[j];
                            let cp = if t > 0 { cache.aux[(row - 1) * hn + j] } else { 0.0 };
                            let tc = tanh(c);
                            let dh = dhn[j];
                            let dc = dcn[j] + dh * o * (1.0 - tc * tc);
                            let dai = dc * gg * i * (1.0 - i);
                            let daf = dc * cp * f * (1.0 - f);
                            let dag = dc * i * (1.0 - gg * gg);
                            let dao = dh * tc * o * (1.0 - o);
                            dx[j] = dai;
                            dx[hn + j] = daf;
                            dx[2 * hn + j] = dag;
                            dx[3 * hn + j] = dao;
                            dr[j] = dai;
                            dr[hn + j] = daf;
                            dr[2 * hn + j] = dag;
                            dr[3 * hn + j] = dao;
                            dcn[j] = dc * f;
                            dhn[j] = 0.0;
                        }
                    }
                }
            }
            gemm(hn, batch, gh, 1.0, &h_prev, true, &drec, false, 1.0, &mut grads.w_rec.data);
            if !self.b_rec.is_empty() {
                add_column_sums(&mut grads.b_rec.data, &drec);
            }
            gemm(batch, gh, hn, 1.0, &drec, false, &self.w_rec.data, true, 1.0, &mut dh_next);
        }

        gemm(nx, rows, gh, 1.0, &cache.input, true, &dxw, false, 1.0, &mut grads.w_in.data);
        add_column_sums(&mut grads.b_in.data, &dxw);
        let mut dseq = vec![0.0; rows * nx];
        gemm(rows, gh, nx, 1.0, &dxw, false, &self.w_in.data, true, 0.0, &mut dseq);
        dseq
    }
}

impl Parameters for Head {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            (String::from("cell.w_in"), &self.w_in),
            (String::from("cell.w_rec"), &self.w_rec),
            (String::from("cell.b_in"), &self.b_in),
        ];
        if !self.b_rec.is_empty() {
            out.push((String::from("cell.b_rec"), &self.b_rec));
        }
        out.push((String::from("proj.w"), &self.proj_w));
        out.push((String::from("proj.b"), &self.proj_b));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.w_in, &mut self.w_rec, &mut self.b_in];
        if !self.b_rec.is_empty() {
            out.push(&mut self.b_rec);
        }
        out.push(&mut self.proj_w);
        out.push(&mut self.proj_b);
        out
    }
}
