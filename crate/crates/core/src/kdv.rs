//! Ground-truth Korteweg–de Vries trajectories on a periodic grid.
//!
//! The equation is `u_t - eta u u_x + gamma u_xxx = 0`. Space is discretized
//! with Fourier pseudo-spectral derivatives; time stepping treats the linear
//! dispersion exactly through an integrating factor and advances the
//! nonlinear term with the explicit two-stage midpoint rule.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::fft::FftPlan;
use crate::math::{cos, sech, sin, PI};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Spatial period P.
    pub period: f64,
    pub nx: usize,
    /// Time between recorded snapshots.
    pub dt_record: f64,
    /// Number of recorded snapshots after t = 0.
    pub nt_record: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            period: 10.0,
            nx: 50,
            dt_record: 0.025,
            nt_record: 200,
        }
    }
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        self.period / self.nx as f64
    }

    pub fn t_final(&self) -> f64 {
        self.dt_record * self.nt_record as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid("period must be positive and finite"));
        }
        if self.nx < 8 || !self.nx.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "nx must be even and at least 8, got {}",
                self.nx
            )));
        }
        if !(self.dt_record.is_finite() && self.dt_record > 0.0) {
            return Err(Error::invalid("dt_record must be positive and finite"));
        }
        if self.nt_record == 0 {
            return Err(Error::invalid("nt_record must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub k1: f64,
    pub k2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl SolitonParams {
    pub const K_RANGE: (f64, f64) = (0.5, 1.0);
    pub const D_RANGE: (f64, f64) = (0.0, 1.0);

    pub fn validate(&self) -> Result<()> {
        let (klo, khi) = Self::K_RANGE;
        let (dlo, dhi) = Self::D_RANGE;
        for k in [self.k1, self.k2] {
            if !(k >= klo && k <= khi) {
                return Err(Error::invalid(format!("k = {k} outside [{klo}, {khi}]")));
            }
        }
        for d in [self.d1, self.d2] {
            if !(d >= dlo && d <= dhi) {
                return Err(Error::invalid(format!("d = {d} outside [{dlo}, {dhi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeParams {
    pub eta: f64,
    pub gamma: f64,
}

impl Default for PdeParams {
    /// `u_t + 6 u u_x + u_xxx = 0`, for which `2k^2 sech^2(k x)` travels
    /// undistorted at speed `4k^2`.
    fn default() -> Self {
        Self {
            eta: -6.0,
            gamma: 1.0,
        }
    }
}

impl PdeParams {
    pub fn new(eta: f64, gamma: f64) -> Result<Self> {
        let p = Self { eta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || !self.gamma.is_finite() {
            return Err(Error::invalid("PDE coefficients must be finite"));
        }
        if self.gamma == 0.0 {
            return Err(Error::invalid("gamma must be non-zero"));
        }
        Ok(())
    }
}

/// A solution field `u[t][x]` with `nt_record + 1` rows; row 0 is the
/// initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub u: Vec<f64>,
    pub grid: GridSpec,
    pub params: Option<SolitonParams>,
}

impl Trajectory {
    pub fn rows(&self) -> usize {
        self.grid.nt_record + 1
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.u[t * nx..(t + 1) * nx]
    }

    pub fn initial(&self) -> &[f64] {
        self.row(0)
    }

    /// Rows `1..=horizon` flattened time-major.
    pub fn target(&self, horizon: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.u[nx..(horizon + 1) * nx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Split {
    Train = 0,
    Val = 1,
    Test = 2,
}

impl Split {
    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Split::Train),
            1 => Some(Split::Val),
            2 => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub grid: GridSpec,
    pub pde: PdeParams,
    pub master_seed: u64,
    pub trajectories: Vec<Trajectory>,
    pub splits: Vec<Split>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.splits
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.splits.iter().filter(|s| **s == split).count()
    }
}

fn wrap(a: f64, period: f64) -> f64 {
    let r = libm::fmod(a, period);
    if r < 0.0 {
        r + period
    } else {
        r
    }
}

/// `2k^2 sech^2(k ((x + P/2 - P d) mod P - P/2))` sampled at `x = j dx`.
pub fn soliton_profile(k: f64, d: f64, grid: &GridSpec) -> Result<Vec<f64>> {
    if !k.is_finite() || !d.is_finite() {
        return Err(Error::invalid("soliton parameters must be finite"));
    }
    if k <= 0.0 || !(0.0..=1.0).contains(&d) {
        return Err(Error::invalid(format!(
            "soliton requires k > 0 and 0 <= d <= 1, got k={k}, d={d}"
        )));
    }
    let p = grid.period;
    Ok((0..grid.nx)
        .map(|j| {
            let x = grid.x(j);
            let s = wrap(x + 0.5 * p - p * d, p) - 0.5 * p;
            let sh = sech(k * s);
            2.0 * k * k * sh * sh
        })
        .collect())
}

pub fn initial_condition(params: &SolitonParams, grid: &GridSpec) -> Result<Vec<f64>> {
    params.validate()?;
    let a = soliton_profile(params.k1, params.d1, grid)?;
    let b = soliton_profile(params.k2, params.d2, grid)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

/// Draws `(k1, k2, d1, d2)` from the stream keyed by `(master_seed, index)`.
pub fn sample_params(master_seed: u64, index: u64) -> SolitonParams {
    let mut r = rng::keyed(master_seed, index);
    let (klo, khi) = SolitonParams::K_RANGE;
    let (dlo, dhi) = SolitonParams::D_RANGE;
    let k1 = rng::uniform_in(&mut r, klo, khi);
    let k2 = rng::uniform_in(&mut r, klo, khi);
    let d1 = rng::uniform_in(&mut r, dlo, dhi);
    let d2 = rng::uniform_in(&mut r, dlo, dhi);
    SolitonParams { k1, k2, d1, d2 }
}

/// Fourier-space operators for one periodic grid.
#[derive(Debug, Clone)]
pub struct Spectral {
    n: usize,
    plan: FftPlan,
    /// Wavenumbers with the Nyquist mode zeroed (odd derivatives).
    kappa: Vec<f64>,
    /// 2/3-rule mask.
    keep: Vec<bool>,
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.nx;
        let mut kappa = vec![0.0; n];
        let mut keep = vec![false; n];
        for j in 0..n {
            let signed = if j <= n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            };
            if !(n.is_multiple_of(2) && j == n / 2) {
                kappa[j] = 2.0 * PI * signed as f64 / grid.period;
            }
            keep[j] = 3 * signed.unsigned_abs() as usize <= n;
        }
        Self {
            n,
            plan: FftPlan::new(n),
            kappa,
            keep,
        }
    }

    pub fn to_spectral(&self, u: &[f64]) -> Vec<Complex64> {
        self.plan.forward_real(u)
    }

    pub fn to_physical(&self, mut uh: Vec<Complex64>) -> Vec<f64> {
        self.plan.inverse(&mut uh);
        uh.iter().map(|c| c.re).collect()
    }

    /// `order`-th derivative of a real periodic field.
    pub fn derivative(&self, u: &[f64], order: u32) -> Vec<f64> {
        let mut uh = self.to_spectral(u);
        for (c, &k) in uh.iter_mut().zip(&self.kappa) {
            *c *= Complex64::new(0.0, k).powu(order);
        }
        self.to_physical(uh)
    }

    /// Dealiased `eta * d/dx (u^2 / 2)` in Fourier space.
    fn nonlinear(&self, uh: &[Complex64], eta: f64) -> Vec<Complex64> {
        let mut u = uh.to_vec();
        self.plan.inverse(&mut u);
        let mut w: Vec<Complex64> = u
            .iter()
            .map(|c| Complex64::new(0.5 * c.re * c.re, 0.0))
            .collect();
        self.plan.forward(&mut w);
        for j in 0..self.n {
            w[j] = if self.keep[j] {
                w[j] * Complex64::new(0.0, eta * self.kappa[j])
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        w
    }

    /// Eigenvalues of the linear part `-gamma d^3/dx^3`.
    fn linear(&self, gamma: f64) -> Vec<Complex64> {
        self.kappa
            .iter()
            .map(|&k| Complex64::new(0.0, gamma * k * k * k))
            .collect()
    }
}

/// `eta u u_x - gamma u_xxx`, with the product dealiased by the 2/3 rule.
pub fn kdv_rhs(u: &[f64], grid: &GridSpec, pde: &PdeParams) -> Result<Vec<f64>> {
    if u.len() != grid.nx {
        return Err(Error::shape("kdv_rhs", grid.nx, u.len()));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("kdv_rhs input is not finite"));
    }
    let sp = Spectral::new(grid);
    let uh = sp.to_spectral(u);
    let nl = sp.nonlinear(&uh, pde.eta);
    let lin = sp.linear(pde.gamma);
    let rhs: Vec<Complex64> = nl
        .iter()
        .zip(uh.iter().zip(&lin))
        .map(|(n, (c, l))| n + c * l)
        .collect();
    let out = sp.to_physical(rhs);
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "kdv right-hand side",
            index: i,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepper {
    /// Exact exponential of the dispersion, midpoint rule on the nonlinearity.
    #[default]
    IntegratingFactorMidpoint,
    /// Plain explicit midpoint on the full (dealiased) right-hand side; needs
    /// far more substeps and exists as a cross-check.
    ExplicitMidpoint,
}

pub const DEFAULT_SUBSTEPS: usize = 128;

pub fn integrate(u0: &[f64], grid: &GridSpec, pde: &PdeParams, substeps: usize) -> Result<Trajectory> {
    integrate_with(u0, grid, pde, substeps, Stepper::IntegratingFactorMidpoint)
}

pub fn integrate_with(
    u0: &[f64],
    grid: &GridSpec,
    pde: &PdeParams,
    substeps: usize,
    stepper: Stepper,
) -> Result<Trajectory> {
    grid.validate()?;
    if substeps == 0 {
        return Err(Error::invalid("substeps must be at least 1"));
    }
    if u0.len() != grid.nx {
        return Err(Error::shape("integrate", grid.nx, u0.len()));
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial condition is not finite"));
    }
    let nx = grid.nx;
    let sp = Spectral::new(grid);
    let h = grid.dt_record / substeps as f64;
    let lin = sp.linear(pde.gamma);
    let e_half: Vec<Complex64> = lin.iter().map(|l| (l * (0.5 * h)).exp()).collect();
    let e_full: Vec<Complex64> = lin.iter().map(|l| (l * h).exp()).collect();

    let mut u = vec![0.0; (grid.nt_record + 1) * nx];
    u[..nx].copy_from_slice(u0);
    let mut uh = sp.to_spectral(u0);

    for rec in 1..=grid.nt_record {
        for _ in 0..substeps {
            uh = match stepper {
                Stepper::IntegratingFactorMidpoint => {
                    let k1 = sp.nonlinear(&uh, pde.eta);
                    let mid: Vec<Complex64> = (0..nx)
                        .map(|j| e_half[j] * (uh[j] + k1[j] * (0.5 * h)))
                        .collect();
                    let k2 = sp.nonlinear(&mid, pde.eta);
                    (0..nx)
                        .map(|j| e_full[j] * uh[j] + e_half[j] * k2[j] * h)
                        .collect()
                }
                Stepper::ExplicitMidpoint => {
                    let f = |v: &[Complex64]| -> Vec<Complex64> {
                        let n = sp.nonlinear(v, pde.eta);
                        (0..nx)
                            .map(|j| {
                                if sp.keep[j] {
                                    n[j] + lin[j] * v[j]
                                } else {
                                    Complex64::new(0.0, 0.0)
                                }
                            })
                            .collect()
                    };
                    let k1 = f(&uh);
                    let mid: Vec<Complex64> =
                        (0..nx).map(|j| uh[j] + k1[j] * (0.5 * h)).collect();
                    let k2 = f(&mid);
                    (0..nx).map(|j| uh[j] + k2[j] * h).collect()
                }
            };
        }
        let row = sp.to_physical(uh.clone());
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: rec });
        }
        u[rec * nx..(rec + 1) * nx].copy_from_slice(&row);
    }
    Ok(Trajectory {
        u,
        grid: *grid,
        params: None,
    })
}

/// Discrete mass `sum u dx`.
pub fn mass(u: &[f64], dx: f64) -> f64 {
    u.iter().sum::<f64>() * dx
}

/// Discrete momentum `sum u^2 dx`.
pub fn momentum(u: &[f64], dx: f64) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>() * dx
}

/// Integrates the two-soliton initial condition of sample `index`.
pub fn simulate_sample(
    index: u64,
    grid: &GridSpec,
    pde: &PdeParams,
    master_seed: u64,
    substeps: usize,
) -> Result<Trajectory> {
    let params = sample_params(master_seed, index);
    let u0 = initial_condition(&params, grid)?;
    let mut traj = integrate(&u0, grid, pde, substeps).map_err(|e| Error::Sample {
        index: index as usize,
        source: Box::new(e),
    })?;
    traj.params = Some(params);
    Ok(traj)
}

/// Stream id reserved for the split shuffle; sample indices must stay below it.
const SPLIT_STREAM: u64 = u64::MAX;

/// Split sizes `(train, val, test)` for `n` samples: 90% train+val, 10% test,
/// and 10% of the former held out for validation.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train_total = 9 * n / 10;
    let test = n - train_total;
    let val = (train_total + 5) / 10;
    (train_total - val, val, test)
}

/// Fisher–Yates permutation keyed on the master seed; the first slice of the
/// permutation is tagged test, the next val, the rest train.
pub fn assign_splits(n: usize, master_seed: u64) -> Vec<Split> {
    let (_, val, test) = split_sizes(n);
    let mut order: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut rng::keyed(master_seed, SPLIT_STREAM), &mut order);
    let mut splits = vec![Split::Train; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < test {
            splits[i] = Split::Test;
        } else if rank < test + val {
            splits[i] = Split::Val;
        }
    }
    splits
}

pub fn generate_dataset(
    n: usize,
    grid: &GridSpec,
    pde: &PdeParams,
    master_seed: u64,
    substeps: usize,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    grid.validate()?;
    pde.validate()?;
    let trajectories = (0..n as u64)
        .map(|i| simulate_sample(i, grid, pde, master_seed, substeps))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        grid: *grid,
        pde: *pde,
        master_seed,
        trajectories,
        splits: assign_splits(n, master_seed),
    })
}

/// `sin(2 pi m x / P)` on the grid; handy for analytic checks.
pub fn sine_mode(grid: &GridSpec, m: usize) -> Vec<f64> {
    let w = 2.0 * PI * m as f64 / grid.period;
    (0..grid.nx).map(|j| sin(w * grid.x(j))).collect()
}

pub fn cosine_mode(grid: &GridSpec, m: usize) -> Vec<f64> {
    let w = 2.0 * PI * m as f64 / grid.period;
    (0..grid.nx).map(|j| cos(w * grid.x(j))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn grid_defaults() {
        let g = grid();
        assert!((g.dx() - 0.2).abs() < 1e-15);
        assert!((g.t_final() - 5.0).abs() < 1e-12);
        assert!(g.validate().is_ok());
        assert!(GridSpec { nx: 7, ..g }.validate().is_err());
        assert!(GridSpec { nx: 6, ..g }.validate().is_err());
    }

    #[test]
    fn soliton_peak_values() {
        let g = grid();
        let p = soliton_profile(0.5, 0.5, &g).unwrap();
        assert!((p[25] - 0.5).abs() < 1e-15); // x = 5
        let p = soliton_profile(1.0, 0.0, &g).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-15);
        let p = soliton_profile(0.5, 0.5, &g).unwrap();
        let sh = 1.0 / libm::cosh(-2.5);
        let expect = 0.5 * sh * sh;
        assert!((p[0] - expect).abs() < 1e-15);
        assert!((p[0] - 1.33e-2).abs() < 5e-5);
    }

    #[test]
    fn soliton_rejects_bad_inputs() {
        let g = grid();
        assert!(soliton_profile(f64::NAN, 0.5, &g).is_err());
        assert!(soliton_profile(0.5, f64::INFINITY, &g).is_err());
        assert!(soliton_profile(0.0, 0.5, &g).is_err());
        assert!(soliton_profile(0.5, 1.5, &g).is_err());
    }

    #[test]
    fn soliton_is_periodic_in_d() {
        let g = grid();
        let a = soliton_profile(0.8, 0.0, &g).unwrap();
        let b = soliton_profile(0.8, 1.0, &g).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_condition_examples() {
        let g = grid();
        let p = SolitonParams {
            k1: 0.5,
            k2: 0.5,
            d1: 0.5,
            d2: 0.5,
        };
        let u = initial_condition(&p, &g).unwrap();
        assert!((u[25] - 1.0).abs() < 1e-15);

        let p = SolitonParams {
            k1: 1.0,
            k2: 0.5,
            d1: 0.0,
            d2: 0.5,
        };
        let u = initial_condition(&p, &g).unwrap();
        let tail = soliton_profile(0.5, 0.5, &g).unwrap()[0];
        assert!((u[0] - (2.0 + tail)).abs() < 1e-15);
        assert!(u.iter().all(|&v| v > 0.0));
        assert!(initial_condition(&SolitonParams { k1: 0.2, ..p }, &g).is_err());
    }

    #[test]
    fn sampled_params_are_deterministic_and_in_range() {
        assert_eq!(sample_params(42, 7), sample_params(42, 7));
        assert_ne!(sample_params(42, 0), sample_params(42, 1));
        for i in 0..10_000 {
            let p = sample_params(3, i);
            assert!(p.validate().is_ok(), "{p:?}");
        }
    }

    #[test]
    fn rhs_of_constant_vanishes() {
        let g = grid();
        let u = vec![0.7; g.nx];
        let r = kdv_rhs(&u, &g, &PdeParams::default()).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rhs_dispersion_matches_analytic_derivative() {
        let g = grid();
        let w = 2.0 * PI / g.period;
        let u = sine_mode(&g, 1);
        let pde = PdeParams {
            eta: 0.0,
            gamma: 1.0,
        };
        let r = kdv_rhs(&u, &g, &pde).unwrap();
        // -gamma d^3/dx^3 sin(wx) = +gamma w^3 cos(wx)
        let c = cosine_mode(&g, 1);
        for (a, b) in r.iter().zip(&c) {
            assert!((a - w * w * w * b).abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_nonlinearity_matches_analytic_product() {
        let g = grid();
        let w = 2.0 * PI / g.period;
        let s = sine_mode(&g, 1);
        let c = cosine_mode(&g, 1);
        let pde = PdeParams {
            eta: 1.0,
            gamma: 0.0,
        };
        let r = kdv_rhs(&s, &g, &pde).unwrap();
        for j in 0..g.nx {
            assert!((r[j] - w * s[j] * c[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_rejects_non_finite_input() {
        let g = grid();
        let mut u = vec![0.0; g.nx];
        u[3] = f64::NAN;
        assert!(kdv_rhs(&u, &g, &PdeParams::default()).is_err());
        assert!(kdv_rhs(&[0.0; 4], &g, &PdeParams::default()).is_err());
    }

    #[test]
    fn zero_rhs_keeps_state_constant() {
        let g = GridSpec {
            nt_record: 10,
            ..grid()
        };
        let u0 = initial_condition(&sample_params(1, 0), &g).unwrap();
        let pde = PdeParams {
            eta: 0.0,
            gamma: 0.0,
        };
        let tr = integrate(&u0, &g, &pde, 2).unwrap();
        for t in 0..tr.rows() {
            for (a, b) in tr.row(t).iter().zip(&u0) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn first_row_is_the_initial_condition_exactly() {
        let g = GridSpec {
            nt_record: 3,
            ..grid()
        };
        let u0 = initial_condition(&sample_params(9, 4), &g).unwrap();
        let tr = integrate(&u0, &g, &PdeParams::default(), 4).unwrap();
        assert_eq!(tr.row(0), &u0[..]);
        assert_eq!(tr.u.len(), 4 * g.nx);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = GridSpec {
            nt_record: 200,
            ..grid()
        };
        let u0: Vec<f64> = (0..g.nx).map(|j| if j == 3 { 50.0 } else { 0.0 }).collect();
        let err = integrate(&u0, &g, &PdeParams::default(), 1).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }), "{err:?}");
    }

    #[test]
    fn split_sizes_follow_ninety_ten_rule() {
        assert_eq!(split_sizes(5000), (4050, 450, 500));
        assert_eq!(split_sizes(500), (405, 45, 50));
        let splits = assign_splits(5000, 17);
        let count = |s| splits.iter().filter(|x| **x == s).count();
        assert_eq!(count(Split::Train), 4050);
        assert_eq!(count(Split::Val), 450);
        assert_eq!(count(Split::Test), 500);
        assert_eq!(splits, assign_splits(5000, 17));
        assert_ne!(splits, assign_splits(5000, 18));
    }

    #[test]
    fn small_dataset_shapes() {
        let g = grid();
        let ds = generate_dataset(10, &g, &PdeParams::default(), 5, DEFAULT_SUBSTEPS).unwrap();
        assert_eq!(ds.len(), 10);
        for (i, tr) in ds.trajectories.iter().enumerate() {
            assert_eq!(tr.rows(), 201);
            assert_eq!(tr.u.len(), 201 * 50);
            assert_eq!(tr.params, Some(sample_params(5, i as u64)));
        }
        assert!(generate_dataset(0, &g, &PdeParams::default(), 5, 4).is_err());
    }
}
