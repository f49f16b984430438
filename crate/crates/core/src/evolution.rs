//! Split-step propagation of `∂t u = (a+ib)(Lu + Vu)` on a periodic grid.
//!
//! Strang splitting: half a step of the constant-coefficient part `∇·(Ā∇)`
//! (box average `Ā`) exactly in Fourier space, a full step of the remainder
//! `∇·((A−Ā)∇) + V` in physical space, then the second half step.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff::CoefficientField;
use crate::expr::{NoProfile, Point};
use crate::grid::{mass, Grid, Spectral};
use crate::{Error, Result};

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub grid: Grid,
    pub t: f64,
    pub values: Vec<C>,
}

impl WaveState {
    pub fn new(grid: Grid, t: f64, values: Vec<C>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::Precondition("state has non-finite values".into()));
        }
        Ok(WaveState { grid, t, values })
    }

    pub fn from_fn(grid: &Grid, t: f64, f: impl Fn(&[f64; 3]) -> C) -> Self {
        let values = grid.points_iter().map(|x| f(&x)).collect();
        WaveState { grid: grid.clone(), t, values }
    }

    pub fn mass(&self) -> f64 {
        mass(&self.grid, &self.values)
    }

    pub fn conj(&self) -> WaveState {
        WaveState { grid: self.grid.clone(), t: self.t, values: self.values.iter().map(|z| z.conj()).collect() }
    }

    /// `‖u − v‖_{L²}`.
    pub fn distance(&self, other: &WaveState) -> f64 {
        let d: Vec<C> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        mass(&self.grid, &d).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<C>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> WaveState {
        WaveState { grid: self.grid.clone(), t: self.times[k], values: self.frames[k].clone() }
    }

    pub fn first(&self) -> WaveState {
        self.state(0)
    }

    pub fn last(&self) -> WaveState {
        self.state(self.len() - 1)
    }

    pub fn masses(&self) -> Vec<f64> {
        self.frames.iter().map(|f| mass(&self.grid, f)).collect()
    }

    /// Writes the binary checkpoint: `UCTR`, version, `n`, `N_i`, `L_i`,
    /// frame count, times, then frames as little-endian `f32` pairs.
    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(64 + self.frames.len() * self.grid.len() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.grid.dim() as u32).to_le_bytes());
        for &n in &self.grid.points {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for &l in &self.grid.half {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&(self.times.len() as u32).to_le_bytes());
        for &t in &self.times {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for frame in &self.frames {
            for z in frame {
                out.extend_from_slice(&(z.re as f32).to_le_bytes());
                out.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
        std::fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }

    pub fn read_checkpoint(path: &Path) -> Result<Trajectory> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        if !(1..=3).contains(&n) {
            return Err(Error::Checkpoint(format!("dimension {n}")));
        }
        let points = (0..n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let half = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let grid = Grid::new(half, points).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let count = r.u32()? as usize;
        let times = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let mut frames = Vec::with_capacity(count);
        for _ in 0..count {
            let mut f = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                let re = r.f32()?;
                let im = r.f32()?;
                f.push(C::new(re as f64, im as f64));
            }
            frames.push(f);
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Trajectory { grid, times, frames })
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"UCTR";
const CHECKPOINT_VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// `(a, b)` in `∂t u = (a+ib)(L + V)u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationParams {
    pub a: f64,
    pub b: f64,
}

impl DissipationParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Precondition("a and b must be finite".into()));
        }
        if a < 0.0 {
            return Err(Error::Precondition(format!("a = {a} < 0 is ill-posed forward in time")));
        }
        if a == 0.0 && b == 0.0 {
            return Err(Error::Precondition("a and b are both zero".into()));
        }
        Ok(DissipationParams { a, b })
    }

    pub fn schrodinger() -> Self {
        DissipationParams { a: 0.0, b: 1.0 }
    }

    pub fn heat() -> Self {
        DissipationParams { a: 1.0, b: 0.0 }
    }

    pub fn z(&self) -> C {
        C::new(self.a, self.b)
    }
}

/// Precomputed data for one grid, field and `(a, b)`.
#[derive(Clone, Debug)]
pub struct Propagator {
    spectral: Spectral,
    params: DissipationParams,
    symbol: Vec<f64>,
    /// `A − Ā` per point, row-major `n×n`; empty for constant `A`.
    deviation: Vec<[f64; 9]>,
    potential: Vec<f64>,
    stiffness: f64,
    /// Guard on `mass / initial mass`.
    pub blowup_factor: f64,
}

/// Average, deviation and sup deviation of `A` over the grid.
fn sample_field(grid: &Grid, field: &CoefficientField) -> Result<([f64; 9], Vec<[f64; 9]>, f64)> {
    let n = grid.dim();
    let comp = field.compiled();
    let mut values = Vec::with_capacity(grid.len());
    let mut mean = [0.0; 9];
    for x in grid.points_iter() {
        let p = Point::new(0.0, &x[..n]);
        let mut m = [0.0; 9];
        for k in 0..n {
            for j in 0..n {
                let v = comp[k * n + j].eval_re(&p, &NoProfile);
                if !v.is_finite() {
                    return Err(Error::Evaluation { point: p.0 });
                }
                m[3 * k + j] = v;
                mean[3 * k + j] += v;
            }
        }
        values.push(m);
    }
    mean.iter_mut().for_each(|v| *v /= grid.len() as f64);
    let mut sup: f64 = 0.0;
    for m in values.iter_mut() {
        let mut s = 0.0;
        for i in 0..9 {
            m[i] -= mean[i];
            s += m[i] * m[i];
        }
        sup = sup.max(s.sqrt());
    }
    Ok((mean, values, sup))
}

impl Propagator {
    pub fn new(grid: &Grid, field: &CoefficientField, params: DissipationParams) -> Result<Self> {
        let params = DissipationParams::new(params.a, params.b)?;
        let n = grid.dim();
        if field.dim() != n {
            return Err(Error::Precondition(format!("field dimension {} on a {n}-D grid", field.dim())));
        }
        let spectral = Spectral::new(grid);
        let (mean, mut deviation, sup) = sample_field(grid, field)?;
        if field.is_constant() {
            deviation.clear();
        }
        let symbol = (0..grid.len())
            .map(|i| {
                let k = spectral.frequency(i);
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s -= mean[3 * a + b] * k[a] * k[b];
                    }
                }
                s
            })
            .collect();
        let vc = field.potential().compile();
        let potential: Vec<f64> = grid.points_iter().map(|x| vc.eval_re(&Point::new(0.0, &x[..n]), &NoProfile)).collect();
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("potential is not finite on the grid".into()));
        }
        let k2: f64 = (0..n).map(|a| grid.k_max(a).powi(2)).sum();
        let vmax = potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let stiffness = params.z().norm() * (if deviation.is_empty() { 0.0 } else { sup * k2 } + vmax);
        Ok(Propagator { spectral, params, symbol, deviation, potential, stiffness, blowup_factor: 1e3 })
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    fn remainder(&self, u: &[C]) -> Vec<C> {
        let n = self.grid().dim();
        let z = self.params.z();
        let grad = self.spectral.gradient(u);
        let flux: Vec<Vec<C>> = (0..n)
            .map(|k| {
                (0..u.len())
                    .map(|i| (0..n).map(|j| grad[j][i] * self.deviation[i][3 * k + j]).sum::<C>())
                    .collect()
            })
            .collect();
        let div = self.spectral.divergence(&flux);
        div.iter().zip(u).zip(&self.potential).map(|((d, v), p)| z * (d + v * p)).collect()
    }

    fn rk4(&self, u: &mut [C], h: f64) {
        let axpy = |u: &[C], k: &[C], s: f64| -> Vec<C> { u.iter().zip(k).map(|(a, b)| a + b * s).collect() };
        let k1 = self.remainder(u);
        let k2 = self.remainder(&axpy(u, &k1, h / 2.0));
        let k3 = self.remainder(&axpy(u, &k2, h / 2.0));
        let k4 = self.remainder(&axpy(u, &k3, h));
        for i in 0..u.len() {
            u[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }

    /// Advances `u` by `steps` Strang steps of size `dt`.
    pub fn advance(&self, u: &mut [C], dt: f64, steps: usize) -> Result<()> {
        let z = self.params.z();
        let half: Vec<C> = self.symbol.iter().map(|s| (z * s * (dt / 2.0)).exp()).collect();
        let exact: Vec<C> = if self.deviation.is_empty() {
            self.potential.iter().map(|v| (z * v * dt).exp()).collect()
        } else {
            Vec::new()
        };
        let sub = ((dt * self.stiffness / 0.5).ceil() as usize).max(1);
        let m0 = mass(self.grid(), u);
        let limit = self.blowup_factor * m0.max(f64::MIN_POSITIVE);
        let apply_half = |u: &mut [C]| {
            self.spectral.forward(u);
            u.iter_mut().zip(&half).for_each(|(a, m)| *a *= m);
            self.spectral.inverse(u);
        };
        for step in 0..steps {
            apply_half(u);
            if exact.is_empty() {
                for _ in 0..sub {
                    self.rk4(u, dt / sub as f64);
                }
            } else {
                u.iter_mut().zip(&exact).for_each(|(a, m)| *a *= m);
            }
            apply_half(u);
            let m = mass(self.grid(), u);
            if !m.is_finite() || m > limit {
                return Err(Error::BlowUp { time: (step + 1) as f64 * dt, mass: m, limit });
            }
        }
        Ok(())
    }
}

/// Propagates `u0` to `t_end` with `steps` steps, recording `frames + 1`
/// equally spaced states (including the initial one).
pub fn propagate(
    u0: &WaveState,
    field: &CoefficientField,
    d: DissipationParams,
    t_end: f64,
    steps: usize,
    frames: usize,
) -> Result<Trajectory> {
    let prop = Propagator::new(&u0.grid, field, d)?;
    propagate_with(&prop, u0, t_end, steps, frames)
}

pub fn propagate_with(prop: &Propagator, u0: &WaveState, t_end: f64, steps: usize, frames: usize) -> Result<Trajectory> {
    if frames == 0 || steps == 0 || steps % frames != 0 {
        return Err(Error::Precondition(format!("{steps} steps cannot be split into {frames} frames")));
    }
    if !(t_end > u0.t) {
        return Err(Error::Precondition(format!("t_end = {t_end} must exceed t0 = {}", u0.t)));
    }
    let dt = (t_end - u0.t) / steps as f64;
    let per = steps / frames;
    let mut u = u0.values.clone();
    let mut out = Trajectory { grid: u0.grid.clone(), times: vec![u0.t], frames: vec![u.clone()] };
    for k in 1..=frames {
        prop.advance(&mut u, dt, per)?;
        out.times.push(u0.t + (k * per) as f64 * dt);
        out.frames.push(u.clone());
    }
    Ok(out)
}

/// `e^{t(ε+i)(L+V)} u(t0)` sampled at the times of `traj`.
pub fn regularized_flow(traj: &Trajectory, field: &CoefficientField, eps: f64, steps_per_interval: usize) -> Result<Trajectory> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("ε must be positive, got {eps}")));
    }
    let prop = Propagator::new(&traj.grid, field, DissipationParams::new(eps, 1.0)?)?;
    let mut u = traj.frames[0].clone();
    let mut out = Trajectory { grid: traj.grid.clone(), times: vec![traj.times[0]], frames: vec![u.clone()] };
    for w in traj.times.windows(2) {
        prop.advance(&mut u, (w[1] - w[0]) / steps_per_interval as f64, steps_per_interval)?;
        out.times.push(w[1]);
        out.frames.push(u.clone());
    }
    Ok(out)
}

/// `amp · exp(−|x − c|² / (4s))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPacket {
    pub s: C,
    pub center: Vec<f64>,
    pub amp: C,
}

impl GaussianPacket {
    pub fn new(s: C, center: Vec<f64>, amp: C) -> Result<Self> {
        if !(s.re > 0.0) {
            return Err(Error::Precondition(format!("Re s must be positive, got {s}")));
        }
        Ok(GaussianPacket { s, center, amp })
    }

    pub fn centered(s: C, dim: usize) -> Self {
        GaussianPacket { s, center: vec![0.0; dim], amp: C::new(1.0, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn value(&self, x: &[f64]) -> C {
        let r2: f64 = self.center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
        self.amp * (-r2 / (4.0 * self.s)).exp()
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> WaveState {
        WaveState::from_fn(grid, t, |x| self.value(&x[..self.dim()]))
    }

    /// `e^{zΔ}` applied to the packet.
    pub fn evolve(&self, z: C) -> GaussianPacket {
        let s = self.s + z;
        let ratio = self.s / s;
        GaussianPacket { s, center: self.center.clone(), amp: self.amp * ratio.powf(self.dim() as f64 / 2.0) }
    }

    /// Exact `e^{tzΔ}` flow sampled at `frames + 1` equispaced times in `[0, t_end]`.
    pub fn trajectory(&self, grid: &Grid, z: C, t_end: f64, frames: usize) -> Trajectory {
        let times: Vec<f64> = (0..=frames).map(|k| t_end * k as f64 / frames.max(1) as f64).collect();
        let frames = times.iter().map(|&t| self.evolve(z * t).sample(grid, t).values).collect();
        Trajectory { grid: grid.clone(), times, frames }
    }

    /// Modulus decay rate `Re(1/(4s))` in `|u| ∝ e^{−rate |x|²}`.
    pub fn decay_rate(&self) -> f64 {
        (1.0 / (4.0 * self.s)).re
    }

    /// `‖e^{β|x|²} u‖²` for a centred packet; infinite if the weight wins.
    pub fn weighted_mass(&self, beta: f64) -> f64 {
        let rate = 2.0 * self.decay_rate() - 2.0 * beta;
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        self.amp.norm_sqr() * (std::f64::consts::PI / rate).powf(self.dim() as f64 / 2.0)
    }
}

/// `e^{itΔ}` on a packet.
pub fn free_flow_closed_form(p: &GaussianPacket, t: f64) -> GaussianPacket {
    p.evolve(C::new(0.0, t))
}

/// Exact solution of `∂t u = i(Δ − w|x|²)u` from `e^{−|x|²/(4 s0)}`:
/// `u = (cosh θ0 / cosh θ)^{n/2} e^{−p|x|²}`, `p = c tanh θ`,
/// `θ = 4ict + atanh(p0/c)`, `c = √w/2`.
pub fn harmonic_gaussian(w: f64, s0: C, dim: usize, t: f64, x: &[f64]) -> C {
    let c = w.sqrt() / 2.0;
    let p0 = 1.0 / (4.0 * s0);
    let theta0 = (p0 / c).atanh();
    let theta = C::new(0.0, 4.0 * c * t) + theta0;
    let p = c * theta.tanh();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (theta0.cosh() / theta.cosh()).powf(dim as f64 / 2.0) * (-p * r2).exp()
}
