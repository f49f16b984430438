//! Periodic tensor grids on `Π[−L_i, L_i)` and FFT-based differentiation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

type C = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Half-widths `L_i`.
    pub half: Vec<f64>,
    /// Point counts `N_i`, powers of two.
    pub points: Vec<usize>,
}

impl Grid {
    pub fn new(half: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        if half.is_empty() || half.len() > 3 || half.len() != points.len() {
            return Err(Error::Precondition(format!(
                "grid needs 1 to 3 axes with matching extents, got {} and {}",
                half.len(),
                points.len()
            )));
        }
        for (&l, &n) in half.iter().zip(&points) {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Precondition(format!("half-width must be positive, got {l}")));
            }
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::Precondition(format!("point count must be a power of two ≥ 4, got {n}")));
            }
        }
        Ok(Grid { half, points })
    }

    pub fn cube(dim: usize, half: f64, points: usize) -> Result<Self> {
        Grid::new(vec![half; dim], vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.half.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half[axis] / self.points[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.points[axis]).map(|k| -self.half[axis] + k as f64 * h).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let scale = PI / self.half[axis];
        (0..n)
            .map(|k| {
                let m = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                // the Nyquist mode has no sign; dropping it keeps odd derivatives real
                if k == n / 2 { 0.0 } else { m * scale }
            })
            .collect()
    }

    /// Largest resolved wavenumber per axis.
    pub fn k_max(&self, axis: usize) -> f64 {
        PI / self.spacing(axis)
    }

    /// Multi-index of a flat index (last axis fastest).
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim()).rev() {
            out[axis] = idx % self.points[axis];
            idx /= self.points[axis];
        }
        out
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.unflatten(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = -self.half[a] + m[a] as f64 * self.spacing(a);
        }
        x
    }

    pub fn points_iter(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    /// `(N_i, L_i)` refined by a factor two in every axis.
    pub fn refined(&self) -> Grid {
        Grid { half: self.half.clone(), points: self.points.iter().map(|n| 2 * n).collect() }
    }
}

/// FFT plans for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    k: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.points.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.points.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let k = (0..grid.dim()).map(|a| grid.wavenumbers(a)).collect();
        Spectral { grid: grid.clone(), forward, inverse, k }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [C], plans: &[Arc<dyn Fft<f64>>]) {
        for axis in 0..self.grid.dim() {
            let n = self.grid.points[axis];
            let stride = self.grid.stride(axis);
            let plan = &plans[axis];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let block = n * stride;
            let mut line = vec![C::default(); n];
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + offset + k * stride];
                    }
                    plan.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[start + offset + k * stride] = *v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [C]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [C]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// Applies a Fourier multiplier `m(k)`.
    pub fn multiplier(&self, u: &[C], m: impl Fn(&[f64; 3]) -> C) -> Vec<C> {
        let mut hat = u.to_vec();
        self.forward(&mut hat);
        for (idx, z) in hat.iter_mut().enumerate() {
            *z *= m(&self.frequency(idx));
        }
        self.inverse(&mut hat);
        hat
    }

    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let m = self.grid.unflatten(idx);
        let mut k = [0.0; 3];
        for a in 0..self.grid.dim() {
            k[a] = self.k[a][m[a]];
        }
        k
    }

    pub fn derivative(&self, u: &[C], axis: usize) -> Vec<C> {
        self.multiplier(u, |k| C::new(0.0, k[axis]))
    }

    pub fn gradient(&self, u: &[C]) -> Vec<Vec<C>> {
        let mut hat = u.to_vec();
        self.forward(&mut hat);
        (0..self.grid.dim())
            .map(|a| {
                let mut d: Vec<C> =
                    hat.iter().enumerate().map(|(i, z)| z * C::new(0.0, self.frequency(i)[a])).collect();
                self.inverse(&mut d);
                d
            })
            .collect()
    }

    /// `Σ_a ∂_a w_a` for a vector field.
    pub fn divergence(&self, w: &[Vec<C>]) -> Vec<C> {
        let mut acc = vec![C::default(); self.grid.len()];
        for (a, comp) in w.iter().enumerate() {
            let mut hat = comp.clone();
            self.forward(&mut hat);
            for (i, (s, z)) in acc.iter_mut().zip(&hat).enumerate() {
                *s += z * C::new(0.0, self.frequency(i)[a]);
            }
        }
        self.inverse(&mut acc);
        acc
    }

    /// Largest Fourier amplitude among modes with `|k_a| > 2/3 k_max` in some axis, relative to the peak.
    pub fn spectral_tail(&self, u: &[C]) -> f64 {
        let mut hat = u.to_vec();
        self.forward(&mut hat);
        let peak = hat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let m = self.grid.dim();
        let cut: Vec<f64> = (0..m).map(|a| 2.0 / 3.0 * self.grid.k_max(a)).collect();
        let mut tail: f64 = 0.0;
        for (i, z) in hat.iter().enumerate() {
            let mi = self.grid.unflatten(i);
            let high = (0..m).any(|a| {
                let n = self.grid.points[a];
                mi[a] == n / 2 || self.k[a][mi[a]].abs() > cut[a]
            });
            if high {
                tail = tail.max(z.norm());
            }
        }
        tail / peak
    }

    /// Fails unless the tail is below `tol` of the peak.
    pub fn check_resolution(&self, u: &[C], tol: f64) -> Result<()> {
        let tail = self.spectral_tail(u);
        if tail > tol {
            return Err(Error::Resolution(format!("spectral tail {tail:.3e} exceeds {tol:.1e} of the peak")));
        }
        Ok(())
    }
}

/// `∫|u|²` by the rectangle rule, which is the trapezoidal rule on a periodic grid.
pub fn mass(grid: &Grid, u: &[C]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell_volume()
}

/// `∫ u conj(v)`.
pub fn inner(grid: &Grid, u: &[C], v: &[C]) -> C {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum::<C>() * grid.cell_volume()
}
