//! The subordination integral and the weighted Poincaré inequality on balls.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::quad::integrate;
use crate::{Error, Result};

type C = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinationCase {
    pub p: f64,
    pub kappa: f64,
    pub lambda0: f64,
    pub radii: Vec<f64>,
    /// Divide ratios by `κ^{q/2}`.
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinationRow {
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub lambda0: f64,
    pub r: f64,
    pub log_integral: f64,
    pub log_target: f64,
    pub ratio: f64,
}

impl SubordinationCase {
    pub fn new(p: f64, kappa: f64, lambda0: f64, radii: Vec<f64>) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return Err(Error::Precondition(format!("p must lie in (1, 2), got {p}")));
        }
        if !(kappa > 0.0 && lambda0 > 0.0) {
            return Err(Error::Precondition("κ and λ₀ must be positive".into()));
        }
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Precondition("radii must be positive".into()));
        }
        Ok(SubordinationCase { p, kappa, lambda0, radii, normalize: false })
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `2λ₀(2/(q−2))^{1/q}`.
    pub fn kappa_threshold(&self) -> f64 {
        let q = self.q();
        2.0 * self.lambda0 * (2.0 / (q - 2.0)).powf(1.0 / q)
    }

    pub fn admissible(&self) -> bool {
        self.kappa > self.kappa_threshold()
    }

    /// `ln ∫_{from}^∞ e^{λr − λ^q/(qκ^q)} λ^{(q−2)/2} dλ`.
    pub fn log_integral(&self, r: f64, from: f64) -> Result<f64> {
        let q = self.q();
        let kq = self.kappa.powf(q);
        let g = |l: f64| l * r - l.powf(q) / (q * kq) + if l > 0.0 { 0.5 * (q - 2.0) * l.ln() } else { f64::NEG_INFINITY };
        // the exponent is concave for λ > 0; locate its peak by golden-section search on a bracket
        let stationary = (r * kq).powf(1.0 / (q - 1.0)).max(1e-12);
        let (mut a, mut b) = (0.0_f64, 4.0 * stationary + 4.0 * self.kappa + 1.0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let (c, d) = (b - phi * (b - a), a + phi * (b - a));
            if g(c) > g(d) { b = d } else { a = c }
        }
        let peak_at = (0.5 * (a + b)).max(from);
        let m = g(peak_at);
        let cut = m + 1e-14f64.ln();
        let mut hi = peak_at.max(from) + 1.0;
        while g(hi) > cut {
            hi = peak_at + 2.0 * (hi - peak_at);
        }
        let mut lo = from;
        if peak_at > from {
            let mut step = 1.0;
            lo = peak_at;
            while lo > from && g(lo) > cut {
                lo = (peak_at - step).max(from);
                step *= 2.0;
            }
        }
        // g(l) − g(peak) written in t = l − peak; the plain difference cancels badly at large r
        let rel = |l: f64| {
            if peak_at <= 0.0 {
                return g(l) - m;
            }
            let s = ((l - peak_at) / peak_at).ln_1p();
            r * (l - peak_at) - peak_at.powf(q) / (q * kq) * (q * s).exp_m1() + 0.5 * (q - 2.0) * s
        };
        // split at the peak so the adaptive rule sees each monotone side separately
        let f = |l: f64| rel(l).exp();
        let mut s = 0.0;
        for (x0, x1) in [(lo, peak_at), (peak_at, hi)] {
            if x1 > x0 {
                s += integrate(f, x0, x1, 1e-300, 1e-13)?;
            }
        }
        if !(s > 0.0) {
            return Err(Error::Quadrature(format!("subordination integral vanished at r = {r}")));
        }
        Ok(m + s.ln())
    }

    /// `ratio(0⁺) = ∫_{λ₀}^∞ e^{−λ^q/(qκ^q)} λ^{(q−2)/2} dλ`.
    pub fn small_r_limit(&self) -> Result<f64> {
        Ok(self.log_integral(0.0, self.lambda0)?.exp())
    }
}

pub fn subordination_ratio(case: &SubordinationCase) -> Result<Vec<SubordinationRow>> {
    if !case.admissible() {
        return Err(Error::Precondition(format!(
            "κ = {} is not admissible; need κ > 2λ₀(2/(q−2))^(1/q) = {}",
            case.kappa,
            case.kappa_threshold()
        )));
    }
    let q = case.q();
    let scale = if case.normalize { case.kappa.powf(q / 2.0) } else { 1.0 };
    case.radii
        .par_iter()
        .map(|&r| {
            let li = case.log_integral(r, case.lambda0)?;
            let lt = (case.kappa * r).powf(case.p) / case.p;
            Ok(SubordinationRow {
                p: case.p,
                q,
                kappa: case.kappa,
                lambda0: case.lambda0,
                r,
                log_integral: li,
                log_target: lt,
                ratio: (li - lt).exp() / scale,
            })
        })
        .collect()
}

/// `n` points log-spaced on `[a, b]`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Poincaré pass bound `C(n) = 8√2 / (3 j)`, `j` the first zero of `J_{n/2−1}`.
pub fn poincare_constant(n: usize) -> Result<f64> {
    let j = match n {
        1 => std::f64::consts::FRAC_PI_2,
        2 => 2.404_825_557_695_773,
        3 => std::f64::consts::PI,
        _ => return Err(Error::Precondition(format!("dimension must be 1, 2 or 3, got {n}"))),
    };
    Ok(8.0 * 2f64.sqrt() / (3.0 * j))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareRow {
    pub r: f64,
    pub lhs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    pub ratio: f64,
}

/// `‖f‖_{B_r}` against `r‖∇f‖_{B_{2r}}` and `r⁻¹‖xf‖_{B_{2r}}`, balls as point masks.
/// `f` returns the value and gradient at a point.
pub fn poincare_weighted_check(grid: &Grid, r: f64, f: impl Fn(&[f64; 3]) -> (C, [C; 3])) -> Result<PoincareRow> {
    let n = grid.dim();
    if (0..n).any(|a| grid.half[a] <= 2.0 * r) {
        return Err(Error::Precondition(format!("ball of radius {} is not contained in the grid", 2.0 * r)));
    }
    let (mut inner, mut grad, mut moment) = (0.0, 0.0, 0.0);
    for x in grid.points_iter() {
        let r2: f64 = x[..n].iter().map(|v| v * v).sum();
        if r2 >= 4.0 * r * r {
            continue;
        }
        let (v, g) = f(&x);
        let m = v.norm_sqr();
        if r2 < r * r {
            inner += m;
        }
        grad += g[..n].iter().map(|z| z.norm_sqr()).sum::<f64>();
        moment += r2 * m;
    }
    let dv = grid.cell_volume();
    let lhs = (inner * dv).sqrt();
    let rhs1 = r * (grad * dv).sqrt();
    let rhs2 = (moment * dv).sqrt() / r;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / (rhs1 + rhs2) };
    Ok(PoincareRow { r, lhs, rhs1, rhs2, ratio })
}

/// `c₀ + Σ c_m e^{i k_m·x}` with wavenumbers up to `k_max` per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigField {
    pub dim: usize,
    pub constant: C,
    pub modes: Vec<(C, [f64; 3])>,
}

impl TrigField {
    pub fn random(dim: usize, modes: usize, k_max: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fn unit(rng: &mut ChaCha8Rng) -> C {
            C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }
        let constant = unit(&mut rng);
        let mut out = Vec::with_capacity(modes);
        for _ in 0..modes {
            let c = unit(&mut rng);
            let mut k = [0.0; 3];
            for slot in k.iter_mut().take(dim) {
                *slot = rng.gen_range(-k_max..=k_max);
            }
            out.push((c, k));
        }
        TrigField { dim, constant, modes: out }
    }

    pub fn eval(&self, x: &[f64; 3]) -> (C, [C; 3]) {
        let mut v = self.constant;
        let mut g = [C::default(); 3];
        for (c, k) in &self.modes {
            let phase: f64 = (0..self.dim).map(|a| k[a] * x[a]).sum();
            let e = c * C::from_polar(1.0, phase);
            v += e;
            for a in 0..self.dim {
                g[a] += e * C::new(0.0, k[a]);
            }
        }
        (v, g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareSweep {
    pub dim: usize,
    pub constant: f64,
    pub worst: Vec<PoincareRow>,
    pub worst_refined: Vec<PoincareRow>,
    /// Largest relative change of a worst ratio under grid doubling.
    pub refinement_change: f64,
    pub passed: bool,
}

/// Worst ratio over `samples` random fields per radius, on `points` and `2·points` per axis.
pub fn poincare_sweep(dim: usize, radii: &[f64], samples: usize, points: usize, seed: u64) -> Result<PoincareSweep> {
    let constant = poincare_constant(dim)?;
    let worst_on = |pts: usize| -> Result<Vec<PoincareRow>> {
        radii
            .iter()
            .map(|&r| {
                let grid = Grid::cube(dim, 2.5 * r, pts)?;
                let rows: Vec<PoincareRow> = (0..samples as u64)
                    .into_par_iter()
                    .map(|s| {
                        let f = TrigField::random(dim, 6, 3.0 / r, seed.wrapping_add(s));
                        poincare_weighted_check(&grid, r, |x| f.eval(x))
                    })
                    .collect::<Result<_>>()?;
                Ok(rows.into_iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap())
            })
            .collect()
    };
    let worst = worst_on(points)?;
    let worst_refined = worst_on(2 * points)?;
    let refinement_change =
        worst.iter().zip(&worst_refined).map(|(a, b)| ((b.ratio - a.ratio) / a.ratio).abs()).fold(0.0, f64::max);
    let passed = refinement_change <= 0.05 && worst.iter().chain(&worst_refined).all(|w| w.ratio <= constant);
    Ok(PoincareSweep { dim, constant, worst, worst_refined, refinement_change, passed })
}
