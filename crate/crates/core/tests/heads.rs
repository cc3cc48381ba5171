mod common;

use common::{check_gradients, dot, random_vec, randomize};
use kdvnet_core::params::Parameters;
use kdvnet_core::rng;
use kdvnet_core::rnn::{CellKind, CellState, Head, HeadSpec};
use proptest::prelude::*;

const CELLS: [CellKind; 3] = [CellKind::Simple, CellKind::Gru, CellKind::Lstm];

fn tiny(cell: CellKind) -> HeadSpec {
    HeadSpec {
        cell,
        hidden: 4,
        width: 3,
    }
}

fn random_head(cell: CellKind, seed: u64) -> Head {
    let mut r = rng::keyed(seed, 9);
    let mut head = Head::init(tiny(cell), &mut r);
    randomize(&mut head, &mut r, 0.7);
    head
}

fn fold(head: &Head, seq: &[f64], nt: usize) -> Vec<f64> {
    let nx = head.spec.width;
    let mut state = CellState::zeros(&head.spec, 1);
    let mut out = Vec::new();
    for t in 0..nt {
        state = head.cell_step(&seq[t * nx..(t + 1) * nx], &state).unwrap();
        out.extend(head.project(&state.h));
    }
    out
}

#[test]
fn head_forward_matches_cell_fold() {
    for cell in CELLS {
        let head = random_head(cell, 1);
        let (batch, nt) = (3, 7);
        let mut r = rng::keyed(2, 2);
        let seq = random_vec(&mut r, batch * nt * 3, 1.0);
        let out = head.forward(&seq, batch, nt).unwrap();
        for b in 0..batch {
            let per = nt * 3;
            let want = fold(&head, &seq[b * per..(b + 1) * per], nt);
            for (a, w) in out[b * per..(b + 1) * per].iter().zip(&want) {
                assert!((a - w).abs() < 1e-12, "{cell:?}: {a} vs {w}");
            }
        }
    }
}

#[test]
fn single_step_sequence_is_one_projected_cell_step() {
    for cell in CELLS {
        let head = random_head(cell, 3);
        let x = [0.3, -0.8, 1.1];
        let s = head.cell_step(&x, &CellState::zeros(&head.spec, 1)).unwrap();
        let want = head.project(&s.h);
        let got = head.forward(&x, 1, 1).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn gru_step_matches_scalar_formulas() {
    let spec = HeadSpec {
        cell: CellKind::Gru,
        hidden: 3,
        width: 2,
    };
    let mut r = rng::keyed(4, 4);
    let mut head = Head::zeros(spec);
    randomize(&mut head, &mut r, 1.0);
    let x = [0.4, -1.3];
    let hp = [0.2, -0.5, 0.9];
    let state = CellState {
        h: hp.to_vec(),
        c: Vec::new(),
    };
    let got = head.cell_step(&x, &state).unwrap().h;
    let gh = 9;
    let w = |i: usize, col: usize| head.w_in.data[i * gh + col];
    let u = |i: usize, col: usize| head.w_rec.data[i * gh + col];
    for j in 0..3 {
        let lin = |gate: usize| {
            let col = gate * 3 + j;
            let wx = w(0, col) * x[0] + w(1, col) * x[1] + head.b_in.data[col];
            let uh = u(0, col) * hp[0] + u(1, col) * hp[1] + u(2, col) * hp[2] + head.b_rec.data[col];
            (wx, uh)
        };
        let (rx, rh) = lin(0);
        let (zx, zh) = lin(1);
        let (nx_, nh) = lin(2);
        let rg = sig(rx + rh);
        let zg = sig(zx + zh);
        let n = (nx_ + rg * nh).tanh();
        let want = (1.0 - zg) * n + zg * hp[j];
        assert!((got[j] - want).abs() < 1e-12);
    }
}

#[test]
fn recurrent_gradients_match_finite_differences() {
    for cell in CELLS {
        let head = random_head(cell, 5);
        let (batch, nt) = (2, 6);
        let mut r = rng::keyed(6, 6);
        let seq = random_vec(&mut r, batch * nt * 3, 1.0);
        let weights = random_vec(&mut r, batch * nt * 3, 1.0);
        let (_, cache) = head.forward_cached(&seq, batch, nt).unwrap();
        let mut grads = head.zeros_like();
        let dseq = head.backward(&cache, &weights, &mut grads);
        check_gradients(&head, &grads, 25, 1e-5, |m: &Head| {
            dot(&m.forward(&seq, batch, nt).unwrap(), &weights)
        });
        // input gradient
        let h = 1e-5;
        for k in (0..seq.len()).step_by(5) {
            let mut p = seq.clone();
            p[k] += h;
            let mut m = seq.clone();
            m[k] -= h;
            let fd = (dot(&head.forward(&p, batch, nt).unwrap(), &weights)
                - dot(&head.forward(&m, batch, nt).unwrap(), &weights))
                / (2.0 * h);
            let rel = (fd - dseq[k]).abs() / fd.abs().max(dseq[k].abs()).max(1e-6);
            assert!(rel < 1e-4, "{cell:?} dseq[{k}] {} vs {fd}", dseq[k]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn outputs_are_causal(seed in 0u64..500, t in 0usize..5, k in 1usize..4, delta in -2.0f64..2.0) {
        let nt = 9;
        for cell in CELLS {
            let head = random_head(cell, seed);
            let mut r = rng::keyed(seed, 7);
            let seq = random_vec(&mut r, nt * 3, 1.0);
            let mut bumped = seq.clone();
            let at = t + k;
            bumped[at * 3 + (seed as usize % 3)] += delta;
            let a = head.forward(&seq, 1, nt).unwrap();
            let b = head.forward(&bumped, 1, nt).unwrap();
            prop_assert_eq!(&a[..(t + 1) * 3], &b[..(t + 1) * 3]);
        }
    }
}
