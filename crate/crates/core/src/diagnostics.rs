//! Weighted norms, log-convexity traces, decay schedules, persistence and
//! annulus-mass profiles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::evolution::{DissipationParams, GaussianPacket, Trajectory, WaveState};
use crate::grid::{mass, Grid, Spectral};
use crate::quad::integrate;
use crate::{Error, Result};

type C = Complex64;

/// Default relative size allowed for the weighted integrand on the box boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

fn radius2(x: &[f64; 3], n: usize) -> f64 {
    x[..n].iter().map(|v| v * v).sum()
}

fn on_boundary(grid: &Grid, idx: usize) -> bool {
    let m = grid.unflatten(idx);
    (0..grid.dim()).any(|a| m[a] == 0 || m[a] == grid.points[a] - 1)
}

/// `∫ w(x)|u|²` with `ln w` supplied, after checking the integrand is
/// below `tol` of its peak on the box boundary.
pub fn weighted_integral(u: &WaveState, log_weight: impl Fn(&[f64; 3]) -> f64, tol: f64) -> Result<f64> {
    let g = &u.grid;
    let logs: Vec<f64> = g
        .points_iter()
        .zip(&u.values)
        .map(|(x, z)| if *z == C::default() { f64::NEG_INFINITY } else { log_weight(&x) + z.norm_sqr().ln() })
        .collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let edge = (0..g.len()).filter(|&i| on_boundary(g, i)).map(|i| logs[i]).fold(f64::NEG_INFINITY, f64::max);
    let ratio = (edge - peak).exp();
    if ratio > tol {
        return Err(Error::BoundaryMass { ratio, tolerance: tol });
    }
    Ok(logs.iter().map(|l| (l - peak).exp()).sum::<f64>() * peak.exp() * g.cell_volume())
}

/// `∫ e^{2β|x|^{2α}} |u|²`.
pub fn weighted_norm(u: &WaveState, beta: f64, alpha: f64) -> Result<f64> {
    let n = u.grid.dim();
    weighted_integral(u, |x| 2.0 * beta * radius2(x, n).powf(alpha), BOUNDARY_TOL)
}

/// Central second differences of `y` on a uniform grid of spacing `h`; endpoints are `None`.
pub fn second_differences(y: &[f64], h: f64) -> Vec<Option<f64>> {
    (0..y.len())
        .map(|k| {
            if k == 0 || k + 1 == y.len() {
                None
            } else {
                Some((y[k + 1] - 2.0 * y[k] + y[k - 1]) / (h * h))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityTrace {
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub log_h: Vec<f64>,
    pub d2_log_h: Vec<Option<f64>>,
    pub beta: f64,
    pub m1: f64,
    /// Constant the interpolation bound is checked with.
    pub c: f64,
    /// `max_t H(t) / (H(0)^{1−t} H(1)^t)` with `t` rescaled to `[0, 1]`.
    pub interpolation_ratio: f64,
    pub min_second_difference: f64,
}

impl ConvexityTrace {
    /// `H(t) ≤ C e^{M₁²} H(0)^{1−t} H(1)^t` at every sample.
    pub fn bound_holds(&self) -> bool {
        self.interpolation_ratio <= self.c * (self.m1 * self.m1).exp()
    }
}

pub fn logconvexity_check(traj: &Trajectory, beta: f64, m1: f64, c: f64) -> Result<ConvexityTrace> {
    if traj.len() < 3 {
        return Err(Error::Precondition("a convexity trace needs at least 3 samples".into()));
    }
    let h: Vec<f64> = (0..traj.len()).map(|k| weighted_norm(&traj.state(k), beta, 1.0)).collect::<Result<_>>()?;
    let (h0, h1) = (h[0], *h.last().unwrap());
    if h0 == 0.0 || h1 == 0.0 {
        return Err(Error::Precondition("zero state at an endpoint makes the bound vacuous".into()));
    }
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap());
    let log_h: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let mut ratio: f64 = 0.0;
    for (t, lh) in traj.times.iter().zip(&log_h) {
        let s = (t - t0) / (t1 - t0);
        ratio = ratio.max((lh - (1.0 - s) * h0.ln() - s * h1.ln()).exp());
    }
    let step = (t1 - t0) / (traj.len() - 1) as f64;
    let d2 = second_differences(&log_h, step);
    let min_d2 = d2.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok(ConvexityTrace {
        times: traj.times.clone(),
        h,
        log_h,
        d2_log_h: d2,
        beta,
        m1,
        c,
        interpolation_ratio: ratio,
        min_second_difference: min_d2,
    })
}

/// `(β‖√(t(1−t)) e^{β|x|²}∇u‖² + β³‖√(t(1−t)) e^{β|x|²}xu‖²) / (e^{M₁²}(H(0) + H(1)))`.
pub fn derivative_bound_check(traj: &Trajectory, beta: f64, m1: f64) -> Result<f64> {
    let g = &traj.grid;
    let n = g.dim();
    let spec = Spectral::new(g);
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap());
    let mut lhs = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let s = (traj.times[k] - t0) / (t1 - t0);
        // differentiate v = e^{β|x|²}u, which stays small at the box edge, then
        // recover e^{β|x|²}∇u = ∇v − 2βxv
        let v: Vec<C> =
            g.points_iter().zip(&traj.frames[k]).map(|(x, z)| z * (beta * radius2(&x, n)).exp()).collect();
        let grad = spec.gradient(&v);
        let mut acc = 0.0;
        for (i, x) in g.points_iter().enumerate() {
            let r2 = radius2(&x, n);
            let gn: f64 = (0..n).map(|a| (grad[a][i] - 2.0 * beta * x[a] * v[i]).norm_sqr()).sum();
            acc += beta * gn + beta.powi(3) * r2 * v[i].norm_sqr();
        }
        lhs.push(s * (1.0 - s) * acc * g.cell_volume());
    }
    let total = trapezoid(&traj.times, &lhs) / (t1 - t0);
    let h0 = weighted_norm(&traj.first(), beta, 1.0)?;
    let h1 = weighted_norm(&traj.last(), beta, 1.0)?;
    if h0 + h1 == 0.0 {
        return Ok(0.0);
    }
    Ok(total / ((m1 * m1).exp() * (h0 + h1)))
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

/// Inputs and table of `α(t) = γλa / (λa + 4γ(λa²Λ + 4b²‖A‖²C) t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySchedule {
    pub gamma: f64,
    pub params: DissipationParams,
    pub lambda: f64,
    pub big_lambda: f64,
    pub norm_a: f64,
    pub c_dim: f64,
    pub times: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl DecaySchedule {
    pub fn alpha_at(&self, t: f64) -> f64 {
        let (a, b) = (self.params.a, self.params.b);
        let la = self.lambda * a;
        let k = 4.0 * self.gamma * (la * a * self.big_lambda + 4.0 * b * b * self.norm_a * self.norm_a * self.c_dim);
        if la + k * t == 0.0 {
            return 0.0;
        }
        self.gamma * la / (la + k * t)
    }
}

pub fn gaussian_decay_schedule(
    gamma: f64,
    d: DissipationParams,
    lambda: f64,
    big_lambda: f64,
    norm_a: f64,
    c_dim: f64,
    samples: usize,
) -> Result<DecaySchedule> {
    if !(gamma > 0.0) {
        return Err(Error::Precondition(format!("γ must be positive, got {gamma}")));
    }
    let d = DissipationParams::new(d.a, d.b)?;
    if samples < 2 {
        return Err(Error::Precondition("schedule needs at least 2 samples".into()));
    }
    let mut s = DecaySchedule { gamma, params: d, lambda, big_lambda, norm_a, c_dim, times: Vec::new(), alpha: Vec::new() };
    s.times = (0..samples).map(|k| k as f64 / (samples - 1) as f64).collect();
    s.alpha = s.times.iter().map(|&t| s.alpha_at(t)).collect();
    Ok(s)
}

/// Per-sample `‖e^{α(t)|x|²}u(t)‖ / (e^{t v_bound}‖e^{γ|x|²}u(0)‖)`, `v_bound = ‖a Re V − b Im V‖_∞`.
pub fn decay_check(traj: &Trajectory, schedule: &DecaySchedule, v_bound: f64) -> Result<Vec<f64>> {
    let start = weighted_norm(&traj.first(), schedule.gamma, 1.0)?.sqrt();
    (0..traj.len())
        .map(|k| {
            let t = traj.times[k];
            let w = weighted_norm(&traj.state(k), schedule.alpha_at(t), 1.0)?.sqrt();
            Ok(w / ((t * v_bound).exp() * start))
        })
        .collect()
}

/// `κ₀ = (1/α)(4β₀(2/(q−2))^{1/q})^α`, `q = α/(α−1)`, for `α ∈ (1, 2)`.
pub fn persistence_threshold(beta0: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Precondition(format!(
            "the threshold formula needs α ∈ (1, 2), got {alpha}; α = 2^m uses the square-completion path"
        )));
    }
    if beta0 < 0.0 {
        return Err(Error::Precondition(format!("β₀ must be nonnegative, got {beta0}")));
    }
    let q = alpha / (alpha - 1.0);
    Ok((4.0 * beta0 * (2.0 / (q - 2.0)).powf(1.0 / q)).powf(alpha) / alpha)
}

/// `W(r) = ∫_{β₀}^{β_max} e^{2βr − (2β)^q/(qκ^q)} (2β)^{(q−2)/2} dβ` with `r = |x|²`.
pub fn subordinated_weight(r: f64, beta0: f64, beta_max: f64, alpha: f64, kappa: f64) -> Result<f64> {
    let q = alpha / (alpha - 1.0);
    integrate(
        |b| (2.0 * b * r - (2.0 * b).powf(q) / (q * kappa.powf(q))).exp() * (2.0 * b).powf((q - 2.0) / 2.0),
        beta0,
        beta_max,
        1e-13,
        1e-11,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub alpha: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub beta_range: (f64, f64),
    pub values: Vec<f64>,
    /// `max_t ∫W|u(t)|² / ((∫W|u₀|²)^{1−t}(∫W|u₁|²)^t)`.
    pub interpolation_ratio: f64,
}

/// Interpolation for the `β`-integrated weight over an admissible `β`-range.
pub fn persistence_check(traj: &Trajectory, beta0: f64, beta_max: f64, alpha: f64, kappa: f64) -> Result<PersistenceReport> {
    let kappa0 = persistence_threshold(beta0, alpha)?;
    if !(beta_max > beta0) {
        return Err(Error::Precondition("empty β-range".into()));
    }
    let g = &traj.grid;
    let n = g.dim();
    let w: Vec<f64> =
        g.points_iter().map(|x| subordinated_weight(radius2(&x, n), beta0, beta_max, alpha, kappa)).collect::<Result<_>>()?;
    let lw: Vec<f64> = w.iter().map(|v| v.ln()).collect();
    let values: Vec<f64> = (0..traj.len())
        .map(|k| {
            let st = traj.state(k);
            let idx = |x: &[f64; 3]| -> usize {
                let mut i = 0;
                for a in 0..n {
                    let m = ((x[a] + g.half[a]) / g.spacing(a)).round() as usize;
                    i = i * g.points[a] + m;
                }
                i
            };
            weighted_integral(&st, |x| lw[idx(x)], BOUNDARY_TOL)
        })
        .collect::<Result<_>>()?;
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap());
    let (v0, v1) = (values[0], *values.last().unwrap());
    let ratio = traj
        .times
        .iter()
        .zip(&values)
        .map(|(t, v)| {
            let s = (t - t0) / (t1 - t0);
            (v.ln() - (1.0 - s) * v0.ln() - s * v1.ln()).exp()
        })
        .fold(0.0, f64::max);
    Ok(PersistenceReport { alpha, kappa, kappa0, beta_range: (beta0, beta_max), values, interpolation_ratio: ratio })
}

/// `∫_{β₀}^∞ e^{−(β/κ − κr)²} dβ` for `r = |x|²`, checked against the band `(κ/10, κ√π]` for `κ ≥ β₀`.
pub fn square_completion_weight(r: f64, beta0: f64, kappa: f64) -> Result<f64> {
    let lo = beta0 / kappa - kappa * r;
    // substitute γ = β/κ − κr and cut the Gaussian tail at |γ| = 40
    let a = lo.max(-40.0);
    if a >= 40.0 {
        return Ok(0.0);
    }
    Ok(kappa * integrate(|g| (-g * g).exp(), a, 40.0, 1e-15, 1e-13)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub kappa: f64,
    pub beta0: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub inside: bool,
}

pub fn square_completion_band(beta0: f64, kappa: f64, radii: &[f64]) -> Result<BandReport> {
    if kappa < beta0 {
        return Err(Error::Precondition(format!("κ = {kappa} must be at least β₀ = {beta0}")));
    }
    let values: Vec<f64> = radii.iter().map(|&x| square_completion_weight(x * x, beta0, kappa)).collect::<Result<_>>()?;
    let (lower, upper) = (kappa / 10.0, kappa * std::f64::consts::PI.sqrt());
    let inside = values.iter().all(|&v| v > lower && v <= upper * (1.0 + 1e-12));
    Ok(BandReport { kappa, beta0, radii: radii.to_vec(), values, lower, upper, inside })
}

/// Endpoint decay rates `(A, B)` of `|u(0)| ∝ e^{−A|x|²}`, `|u(1)| ∝ e^{−B|x|²}`
/// from second moments: `∫|x|²|u|² / ∫|u|² = n / (4 rate)`.
pub fn moment_rate(u: &WaveState) -> f64 {
    let n = u.grid.dim();
    let m0 = u.mass();
    let m2: f64 = u.grid.points_iter().zip(&u.values).map(|(x, z)| radius2(&x, n) * z.norm_sqr()).sum::<f64>()
        * u.grid.cell_volume();
    n as f64 * m0 / (4.0 * m2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyRow {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub product: f64,
    pub oracle: f64,
}

/// Rates of the free evolution of `e^{−|x|²/(4s)}` from `t = 0` to `t = 1`,
/// measured on the propagated grid state.
pub fn hardy_sweep(values: &[f64], grid: &Grid) -> Result<Vec<HardyRow>> {
    let field = crate::coeff::CoefficientField::identity(grid.dim());
    values
        .iter()
        .map(|&s| {
            let p = GaussianPacket::new(C::new(s, 0.0), vec![0.0; grid.dim()], C::new(1.0, 0.0))?;
            let u0 = p.sample(grid, 0.0);
            Spectral::new(grid).check_resolution(&u0.values, 1e-10)?;
            let traj = crate::evolution::propagate(&u0, &field, DissipationParams::schrodinger(), 1.0, 1, 1)?;
            let (a, b) = (moment_rate(&traj.first()), moment_rate(&traj.last()));
            Ok(HardyRow { s, a, b, product: a * b, oracle: 1.0 / (16.0 * (s * s + 1.0)) })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub p: f64,
    pub intercept: f64,
    /// Fitted `C₀` in `log δ ≈ c − C₀ R^p`.
    pub c0: f64,
    /// `‖residual‖ / ‖y − ȳ‖`.
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundProfile {
    pub radii: Vec<f64>,
    pub delta: Vec<f64>,
    /// `∫∫_{[1/8,7/8]×B_{R₀}} (|u|² + |∇u|²)`.
    pub e1: f64,
    /// `(∫∫_{[1/4,3/4]×B_{R₀}} |u|²)^{1/2}`.
    pub e2: f64,
    pub core_radius: f64,
    pub fits: Vec<ExponentFit>,
    pub preferred: Option<f64>,
    pub hypothesis_met: bool,
}

pub fn fit_exponent(radii: &[f64], delta: &[f64], p: f64) -> Result<ExponentFit> {
    if radii.len() < 3 || delta.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Precondition("exponent fit needs ≥ 3 positive annulus masses".into()));
    }
    let x: Vec<f64> = radii.iter().map(|r| r.powf(p)).collect();
    let y: Vec<f64> = delta.iter().map(|d| d.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    let intercept = my - slope * mx;
    let res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>().sqrt();
    let spread: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    Ok(ExponentFit { p, intercept, c0: -slope, relative_residual: if spread > 0.0 { res / spread } else { 0.0 } })
}

/// `δ(R) = ∫_{t∈window} ∫_{R−1 ≤ |x| < R} (|u|² + |∇u|²)` over the recorded frames.
pub fn annulus_mass_profile(
    traj: &Trajectory,
    radii: &[f64],
    window: (f64, f64),
    core_radius: f64,
    e2_floor: f64,
) -> Result<LowerBoundProfile> {
    let g = &traj.grid;
    let n = g.dim();
    if (0..n).any(|a| g.spacing(a) > 1.0 / 8.0) {
        return Err(Error::Resolution("annulus of width 1 is crossed by fewer than 8 cells".into()));
    }
    if radii.iter().any(|&r| (0..n).any(|a| r > g.half[a])) {
        return Err(Error::Precondition("radii must lie inside the grid box".into()));
    }
    let spec = Spectral::new(g);
    let rs: Vec<f64> = g.points_iter().map(|x| radius2(&x, n).sqrt()).collect();
    let mut times = Vec::new();
    let mut shells: Vec<Vec<f64>> = vec![Vec::new(); radii.len()];
    let mut core_full = Vec::new();
    for (t, f) in traj.times.iter().zip(&traj.frames) {
        if *t < window.0 - 1e-12 || *t > window.1 + 1e-12 {
            continue;
        }
        times.push(*t);
        let grad = spec.gradient(f);
        let dens: Vec<f64> = (0..g.len()).map(|i| f[i].norm_sqr() + grad.iter().map(|d| d[i].norm_sqr()).sum::<f64>()).collect();
        for (j, &r) in radii.iter().enumerate() {
            let s: f64 = (0..g.len()).filter(|&i| rs[i] >= r - 1.0 && rs[i] < r).map(|i| dens[i]).sum();
            shells[j].push(s * g.cell_volume());
        }
        core_full.push((0..g.len()).filter(|&i| rs[i] < core_radius).map(|i| dens[i]).sum::<f64>() * g.cell_volume());
    }
    if times.len() < 2 {
        return Err(Error::Precondition("fewer than two frames inside the time window".into()));
    }
    let delta: Vec<f64> = shells.iter().map(|s| trapezoid(&times, s)).collect();
    let e1 = trapezoid(&times, &core_full);
    let (mut ct, mut cm) = (Vec::new(), Vec::new());
    for (t, f) in traj.times.iter().zip(&traj.frames) {
        if *t >= 0.25 - 1e-12 && *t <= 0.75 + 1e-12 {
            ct.push(*t);
            cm.push((0..g.len()).filter(|&i| rs[i] < core_radius).map(|i| f[i].norm_sqr()).sum::<f64>() * g.cell_volume());
        }
    }
    let e2 = if ct.len() >= 2 { trapezoid(&ct, &cm).sqrt() } else { 0.0 };
    let hypothesis_met = e2 >= e2_floor;
    let fits = if delta.iter().all(|d| *d > 0.0) && radii.len() >= 3 {
        vec![fit_exponent(radii, &delta, 2.0)?, fit_exponent(radii, &delta, 3.0)?]
    } else {
        Vec::new()
    };
    let preferred = fits
        .iter()
        .min_by(|a, b| a.relative_residual.total_cmp(&b.relative_residual))
        .map(|f| f.p);
    Ok(LowerBoundProfile {
        radii: radii.to_vec(),
        delta,
        e1,
        e2,
        core_radius,
        fits,
        preferred: if hypothesis_met { preferred } else { None },
        hypothesis_met,
    })
}

/// `∫|u|²` restricted to a mask.
pub fn masked_mass(grid: &Grid, u: &[C], keep: impl Fn(&[f64; 3]) -> bool) -> f64 {
    let v: Vec<C> = grid.points_iter().zip(u).map(|(x, z)| if keep(&x) { *z } else { C::default() }).collect();
    mass(grid, &v)
}
