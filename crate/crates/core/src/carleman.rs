//! Both sides of the cubic-regime and translated-weight Carleman inequalities
//! on random admissible test functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::{CoefficientField, SampleBox, TransversalField};
use crate::expr::{CompiledExpr, Expr, Point, TimeProfile, Var};
use crate::jet::Jet;
use crate::ops::{commutator, graded_decompose, schrodinger_operator, CompiledOperator, WeightSpec};
use crate::{Error, Result};

type C = Complex64;

/// Quintic smoothstep `6s⁵ − 15s⁴ + 10s³` and its derivatives.
fn smoothstep(k: u8, s: f64) -> f64 {
    match k {
        0 => s * s * s * (10.0 + s * (-15.0 + 6.0 * s)),
        1 => 30.0 * s * s * (1.0 - s) * (1.0 - s),
        2 => 60.0 * s * (2.0 * s - 1.0) * (s - 1.0),
        3 => 360.0 * s * s - 360.0 * s + 60.0,
        4 => 720.0 * s - 360.0,
        5 => 720.0,
        _ => 0.0,
    }
}

/// Time profile `φ` (0 outside `(1/8, 7/8)`, `plateau` on `[1/4, 3/4]`) and radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub plateau: f64,
    /// Inner radius of the annulus support.
    pub r0: f64,
    pub radius: f64,
}

impl CutoffSpec {
    pub fn new(r0: f64, radius: f64) -> Result<Self> {
        if !(radius >= 1.0) {
            return Err(Error::Precondition(format!("R ≥ 1 is required, got R = {radius}")));
        }
        if !(r0 > 0.0) {
            return Err(Error::Precondition(format!("r0 must be positive, got {r0}")));
        }
        Ok(CutoffSpec { plateau: 3.0, r0, radius })
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `‖φ′‖_∞` (attained at the transition midpoints).
    pub fn phi_prime_sup(&self) -> f64 {
        self.plateau * 8.0 * smoothstep(1, 0.5)
    }

    /// `‖φ″‖_∞ = plateau · 64 · 10/√3`.
    pub fn phi_second_sup(&self) -> f64 {
        self.plateau * 64.0 * 10.0 / 3f64.sqrt()
    }

    /// Largest interval on which `φ ≥ level` (`0 < level ≤ plateau`).
    pub fn level_interval(&self, level: f64) -> (f64, f64) {
        let target = level / self.plateau;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if smoothstep(0, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.125 + hi / 8.0;
        (t, 1.0 - t)
    }

    /// `β₁ = max{λ^{-1}‖φ″‖^{1/2} r₀^{-1} R³, C₁(1 + r₀^{-1}) R²}`.
    pub fn beta1(&self, lambda: f64, c1: f64) -> f64 {
        let r = self.radius;
        let a = self.phi_second_sup().sqrt() / (lambda * self.r0) * r.powi(3);
        let b = c1 * (1.0 + 1.0 / self.r0) * r * r;
        a.max(b)
    }
}

impl TimeProfile for CutoffSpec {
    fn derivative(&self, k: u8, t: f64) -> f64 {
        let scale = self.plateau * 8f64.powi(k as i32);
        if t <= 0.125 || t >= 0.875 {
            0.0
        } else if t < 0.25 {
            scale * smoothstep(k, 8.0 * (t - 0.125))
        } else if t <= 0.75 {
            if k == 0 { self.plateau } else { 0.0 }
        } else {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * scale * smoothstep(k, 8.0 * (0.875 - t))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportMode {
    /// `supp f ⊂ {|x| ≥ r₀}`
    Annulus,
    /// `supp f ⊂ {|x/R + φ(t) e₁| ≥ 1}`
    Translated,
}

/// `B(w) = exp(1 − 1/(1 − w))` for `w < 1`, else 0, with `dB/dw` and `d²B/dw²`.
fn bump(w: f64) -> (f64, f64, f64) {
    if w >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 / (1.0 - w);
    let b = (1.0 - u).exp();
    (b, -b * u * u, b * (u.powi(4) - 2.0 * u.powi(3)))
}

/// `T(t) · X(x) · Σ c_m e^{i(ω_m t + k_m·x)}` with smooth compact bumps `T`, `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub dim: usize,
    pub time_center: f64,
    pub time_halfwidth: f64,
    pub center: [f64; 3],
    pub rho: f64,
    pub modes: Vec<(C, f64, [f64; 3])>,
    /// Overall factor, for homogeneity checks.
    pub scale: C,
}

impl TestFunction {
    pub fn jet(&self, t: f64, x: &[f64]) -> Jet {
        let n = self.dim;
        let s = (t - self.time_center) / self.time_halfwidth;
        let (bt, dbt, _) = bump(s * s);
        if bt == 0.0 {
            return Jet::default();
        }
        let dt = dbt * 2.0 * s / self.time_halfwidth;
        let mut w = 0.0;
        let mut dw = [0.0; 3];
        for i in 0..n {
            let d = x[i] - self.center[i];
            w += d * d;
            dw[i] = 2.0 * d / (self.rho * self.rho);
        }
        w /= self.rho * self.rho;
        let (bx, dbx, ddbx) = bump(w);
        if bx == 0.0 {
            return Jet::default();
        }
        let mut space = Jet { v: C::new(bx, 0.0), ..Default::default() };
        for i in 0..n {
            space.x[i] = C::new(dbx * dw[i], 0.0);
            for j in 0..n {
                let delta = if i == j { 2.0 / (self.rho * self.rho) } else { 0.0 };
                space.xx[i][j] = C::new(ddbx * dw[i] * dw[j] + dbx * delta, 0.0);
            }
        }
        let time = Jet { v: C::new(bt, 0.0), t: C::new(dt, 0.0), ..Default::default() };
        let mut noise = Jet::default();
        for (c, omega, k) in &self.modes {
            let phase: f64 = omega * t + (0..n).map(|i| k[i] * x[i]).sum::<f64>();
            let e = c * C::new(0.0, phase).exp();
            let mut m = Jet { v: e, t: e * C::new(0.0, *omega), ..Default::default() };
            for i in 0..n {
                m.x[i] = e * C::new(0.0, k[i]);
                for j in 0..n {
                    m.xx[i][j] = -e * (k[i] * k[j]);
                }
            }
            noise = noise.add(&m);
        }
        time.mul(&space).mul(&noise).scale(self.scale)
    }

    pub fn value(&self, t: f64, x: &[f64]) -> C {
        self.jet(t, x).v
    }

    /// Closed support box `[t_lo, t_hi] × Π[c_i − ρ, c_i + ρ]`.
    pub fn support(&self) -> ((f64, f64), Vec<(f64, f64)>) {
        (
            (self.time_center - self.time_halfwidth, self.time_center + self.time_halfwidth),
            (0..self.dim).map(|i| (self.center[i] - self.rho, self.center[i] + self.rho)).collect(),
        )
    }

    pub fn scaled(&self, c: C) -> TestFunction {
        TestFunction { scale: self.scale * c, ..self.clone() }
    }
}

/// Spatial region in which test functions are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    pub dim: usize,
    /// Half-width of the spatial box.
    pub half_width: f64,
    /// Quadrature nodes per axis across a support box.
    pub nodes: usize,
}

impl SampleDomain {
    pub fn new(dim: usize, half_width: f64, nodes: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Precondition(format!("dimension {dim} outside 1..=3")));
        }
        if nodes < 16 {
            return Err(Error::Resolution(format!(
                "{nodes} nodes leave fewer than 8 cells per transition layer"
            )));
        }
        Ok(SampleDomain { dim, half_width, nodes })
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> [f64; 3] {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(n) {
            *c = rng.gen_range(-1.0..1.0);
        }
        let r: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            v.iter_mut().for_each(|c| *c /= r);
            return v;
        }
    }
}

fn random_modes(rng: &mut ChaCha8Rng, n: usize) -> Vec<(C, f64, [f64; 3])> {
    let count = rng.gen_range(2..=4);
    (0..count)
        .map(|m| {
            let amp = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let omega = if m == 0 { 0.0 } else { rng.gen_range(-12.0..12.0) };
            let mut k = [0.0; 3];
            if m > 0 {
                for c in k.iter_mut().take(n) {
                    *c = rng.gen_range(-2.0..2.0);
                }
            }
            // a nonzero mean mode keeps the noise from vanishing identically
            let amp = if m == 0 { amp + C::new(1.5, 0.0) } else { amp };
            (amp, omega, k)
        })
        .collect()
}

/// Draws a random admissible test function for `mode`.
pub fn make_test_function(mode: SupportMode, domain: &SampleDomain, cutoff: &CutoffSpec, seed: u64) -> Result<TestFunction> {
    let n = domain.dim;
    let d = domain.half_width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (time_center, time_halfwidth, center, rho) = match mode {
        SupportMode::Annulus => {
            let room = d - cutoff.r0;
            if room <= 0.2 {
                return Err(Error::Support(format!(
                    "annulus r0 = {} leaves no room inside the box of half-width {d}",
                    cutoff.r0
                )));
            }
            let rho = rng.gen_range(0.35..0.5) * room.min(2.5);
            let r = rng.gen_range(cutoff.r0 + rho..d - rho);
            let dir = if n == 1 {
                [if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0, 0.0]
            } else {
                random_unit(&mut rng, n)
            };
            let sigma = rng.gen_range(0.08..0.2);
            let tc = rng.gen_range(sigma + 0.02..1.0 - sigma - 0.02);
            (tc, sigma, [dir[0] * r, dir[1] * r, dir[2] * r], rho)
        }
        SupportMode::Translated => {
            let (lo, hi) = cutoff.level_interval(1.0);
            let room = d.min(2.0 * d);
            if room <= 0.4 {
                return Err(Error::Support("box too small for translated support".into()));
            }
            let rho = rng.gen_range(0.3..0.5) * room.min(2.5);
            let mut c = [0.0; 3];
            c[0] = rng.gen_range(rho..d - rho);
            for ci in c.iter_mut().take(n).skip(1) {
                *ci = rng.gen_range(-d + rho..d - rho);
            }
            let span = hi - lo;
            let sigma = rng.gen_range(0.25..0.5) * span / 2.0;
            let tc = rng.gen_range(lo + sigma..hi - sigma);
            (tc, sigma, c, rho)
        }
    };
    Ok(TestFunction {
        dim: n,
        time_center,
        time_halfwidth,
        center,
        rho,
        modes: random_modes(&mut rng, n),
        scale: C::new(1.0, 0.0),
    })
}

/// Compiled pieces of the conjugated operator for one field and weight shape.
#[derive(Clone, Debug)]
pub struct CarlemanOperators {
    dim: usize,
    pub mode: SupportMode,
    pub radius: f64,
    pub lambda: f64,
    s0: CompiledOperator,
    s2: CompiledOperator,
    a1: CompiledOperator,
    c1: CompiledOperator,
    c3: CompiledOperator,
    direct: CompiledOperator,
    /// `ψ`, `∂tψ`, `∇ψ`, `∇²ψ` row-major.
    psi: Vec<CompiledExpr>,
    /// Zero-order factor of the LHS: `|x|` or `|x/R + φe₁|`.
    factor: CompiledExpr,
}

impl CarlemanOperators {
    fn build(field: &CoefficientField, weight: &WeightSpec, mode: SupportMode, radius: f64, lambda: f64) -> Result<Self> {
        let n = field.dim();
        let g = graded_decompose(field, weight);
        let c1 = commutator(&g.s0, &g.a1)?;
        let c3 = commutator(&g.s2, &g.a1)?;
        let shape = weight.shape(n);
        let mut psi = vec![shape.clone(), shape.derivative(Var::T)];
        for i in 1..=n {
            psi.push(shape.derivative(Var::X(i as u8)));
        }
        for i in 1..=n {
            for j in 1..=n {
                psi.push(shape.derivatives(&[Var::X(i as u8), Var::X(j as u8)]));
            }
        }
        let factor = match mode {
            SupportMode::Annulus => (1..=n).map(|i| &Expr::x(i as u8) * &Expr::x(i as u8)).sum::<Expr>(),
            SupportMode::Translated => {
                let inv = crate::expr::Coef::real(crate::expr::rational_from_f64(1.0 / radius));
                let z1 = &Expr::x(1).scale(&inv) + &weight.profile;
                let rest = (2..=n).map(|i| &Expr::x(i as u8) * &Expr::x(i as u8)).sum::<Expr>();
                &(&z1 * &z1) + &rest.scale(&crate::expr::Coef::real(crate::expr::rational_from_f64(1.0 / (radius * radius))))
            }
        };
        let out = CarlemanOperators {
            dim: n,
            mode,
            radius,
            lambda,
            s0: g.s0.compile(),
            s2: g.s2.compile(),
            a1: g.a1.compile(),
            c1: c1.compile(),
            c3: c3.compile(),
            direct: schrodinger_operator(field)?.compile(),
            psi: psi.iter().map(Expr::compile).collect(),
            factor: factor.compile(),
        };
        for op in [&out.s0, &out.s2, &out.a1, &out.c1, &out.c3, &out.direct] {
            if !op.supported_by_jet() {
                return Err(Error::OrderOverflow("operator exceeds the second-order jet".into()));
            }
        }
        Ok(out)
    }

    /// Cubic-regime weight `|x/R|² + φ(t)`; `λ` from the field on `bx`.
    pub fn cubic(field: &CoefficientField, radius: f64, bx: &SampleBox) -> Result<Self> {
        let (lambda, _) = field.ellipticity_bounds(bx)?;
        let w = WeightSpec::scaled_time(1.0, radius)?;
        CarlemanOperators::build(field, &w, SupportMode::Annulus, radius, lambda)
    }

    /// Translated weight `|x/R + φ(t)e₁|²` for a block-structured field.
    pub fn translated(field: &TransversalField, radius: f64, bx: &SampleBox) -> Result<Self> {
        let full = field.to_field()?;
        let (lambda, _) = full.ellipticity_bounds(bx)?;
        let w = WeightSpec::translated(1.0, radius)?;
        CarlemanOperators::build(&full, &w, SupportMode::Translated, radius, lambda)
    }

    fn psi_jet(&self, p: &Point, prof: &dyn TimeProfile, beta: f64) -> Jet {
        let n = self.dim;
        let e = |k: usize| C::new(beta * self.psi[k].eval_re(p, prof), 0.0);
        let mut j = Jet { v: e(0), t: e(1), ..Default::default() };
        for i in 0..n {
            j.x[i] = e(2 + i);
            for k in 0..n {
                j.xx[i][k] = e(2 + n + i * n + k);
            }
        }
        j
    }
}

/// Integrals for one test function, from which both sides follow at any `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sides {
    /// `‖(S+A)f‖² = Σ q_k β^k`.
    pub q: [f64; 5],
    /// `⟨[S,A]f, f⟩ = c1 β + c3 β³`.
    pub c1: f64,
    pub c3: f64,
    /// `‖∇f‖²`.
    pub grad: f64,
    /// `‖w f‖²` with `w = |x|` or `|x/R + φe₁|`.
    pub weighted: f64,
    pub mass: f64,
    /// Relative `L²` gap between `(S+A)f` and `e^{φ}(i∂t+L)e^{−φ}f` at `direct_beta`.
    pub direct_gap: f64,
    pub direct_beta: f64,
}

impl Sides {
    pub fn rhs(&self, beta: f64) -> f64 {
        self.q.iter().rev().fold(0.0, |acc, c| acc * beta + c)
    }

    pub fn lhs(&self, beta: f64, radius: f64) -> f64 {
        beta * self.grad / (radius * radius) + beta.powi(3) * self.weighted / radius.powi(6)
    }

    /// Smallest `β` beyond which `λ^{-2}⟨[S,A]f,f⟩ ≥ LHS`.
    pub fn frontier(&self, radius: f64, lambda: f64) -> f64 {
        let l2 = lambda.powi(-2);
        let num = self.grad / (radius * radius) - l2 * self.c1;
        let den = l2 * self.c3 - self.weighted / radius.powi(6);
        if num <= 0.0 {
            0.0
        } else if den <= 0.0 {
            f64::INFINITY
        } else {
            (num / den).sqrt()
        }
    }
}

/// Evaluates all integrals for `f` on its support box.
pub fn sides(ops: &CarlemanOperators, f: &TestFunction, cutoff: &CutoffSpec, nodes: usize, direct_beta: f64) -> Result<Sides> {
    let n = ops.dim;
    if f.dim != n {
        return Err(Error::Precondition(format!("test function in dimension {} for a {n}-D field", f.dim)));
    }
    let ((t0, t1), bx) = f.support();
    let ht = (t1 - t0) / nodes as f64;
    let hx: Vec<f64> = bx.iter().map(|(a, b)| (b - a) / nodes as f64).collect();
    let vol = ht * hx.iter().product::<f64>();
    let total = nodes.pow(n as u32);
    let prof: &dyn TimeProfile = cutoff;

    let per_time = |kt: usize| -> Result<[f64; 14]> {
        let t = t0 + (kt as f64 + 0.5) * ht;
        let mut acc = [0.0; 14];
        let mut x = [0.0; 3];
        for idx in 0..total {
            let mut r = idx;
            for a in (0..n).rev() {
                x[a] = bx[a].0 + ((r % nodes) as f64 + 0.5) * hx[a];
                r /= nodes;
            }
            let jet = f.jet(t, &x[..n]);
            if jet.v == C::default() && jet.grad_norm_sqr(n) == 0.0 {
                continue;
            }
            let p = Point::new(t, &x[..n]);
            match ops.mode {
                SupportMode::Annulus => {
                    let r: f64 = x[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                    if r < cutoff.r0 {
                        return Err(Error::Support(format!("|x| = {r} < r0 = {} on supp f", cutoff.r0)));
                    }
                }
                SupportMode::Translated => {
                    let z = ops.factor.eval_re(&p, prof).sqrt();
                    if z < 1.0 {
                        return Err(Error::Support(format!("|x/R + φe1| = {z} < 1 on supp f at t = {t}")));
                    }
                }
            }
            let fs = [ops.s0.apply_jet(&jet, &p, prof), ops.a1.apply_jet(&jet, &p, prof), ops.s2.apply_jet(&jet, &p, prof)];
            let mut k = 0;
            for i in 0..3 {
                for j in i..3 {
                    let m = if i == j { 1.0 } else { 2.0 };
                    acc[k] += m * (fs[i] * fs[j].conj()).re;
                    k += 1;
                }
            }
            let fc = jet.v.conj();
            acc[6] += (ops.c1.apply_jet(&jet, &p, prof) * fc).re;
            acc[7] += (ops.c3.apply_jet(&jet, &p, prof) * fc).re;
            acc[8] += jet.grad_norm_sqr(n);
            acc[9] += ops.factor.eval_re(&p, prof) * jet.v.norm_sqr();
            acc[10] += jet.v.norm_sqr();
            let conj = fs[0] + fs[1] * direct_beta + fs[2] * (direct_beta * direct_beta);
            let damped = Jet::damping(&ops.psi_jet(&p, prof, direct_beta)).mul(&jet);
            let direct = ops.direct.apply_jet(&damped, &p, prof);
            acc[11] += (conj - direct).norm_sqr();
            acc[12] += conj.norm_sqr();
        }
        Ok(acc)
    };
    let parts = (0..nodes).into_par_iter().map(per_time).collect::<Result<Vec<_>>>()?;
    let mut s = [0.0; 14];
    for p in &parts {
        for (a, b) in s.iter_mut().zip(p) {
            *a += b;
        }
    }
    // pairs (i, j) in order (0,0) (0,1) (0,2) (1,1) (1,2) (2,2) carry β^{i'+j'} with β-powers 0, 1, 2
    let pw = [0usize, 1, 2];
    let mut q = [0.0; 5];
    let mut k = 0;
    for i in 0..3 {
        for j in i..3 {
            q[pw[i] + pw[j]] += s[k] * vol;
            k += 1;
        }
    }
    Ok(Sides {
        q,
        c1: s[6] * vol,
        c3: s[7] * vol,
        grad: s[8] * vol,
        weighted: s[9] * vol,
        mass: s[10] * vol,
        direct_gap: if s[12] > 0.0 { (s[11] / s[12]).sqrt() } else { 0.0 },
        direct_beta,
    })
}

/// `⟨Pf, g⟩`, `⟨f, Pg⟩` over space-time and the scale `‖Pf‖‖g‖ + ‖f‖‖Pg‖`,
/// by the midpoint rule on the union of the two support boxes.
pub fn pairing(
    op: &CompiledOperator,
    f: &TestFunction,
    g: &TestFunction,
    nodes: usize,
    prof: &dyn TimeProfile,
) -> Result<(C, C, f64)> {
    let n = f.dim;
    if g.dim != n {
        return Err(Error::Precondition("test functions of different dimension".into()));
    }
    let ((fa, fb), fx) = f.support();
    let ((ga, gb), gx) = g.support();
    let (t0, t1) = (fa.min(ga), fb.max(gb));
    let bx: Vec<(f64, f64)> = fx.iter().zip(&gx).map(|(a, b)| (a.0.min(b.0), a.1.max(b.1))).collect();
    let ht = (t1 - t0) / nodes as f64;
    let hx: Vec<f64> = bx.iter().map(|(a, b)| (b - a) / nodes as f64).collect();
    let vol = ht * hx.iter().product::<f64>();
    let total = nodes.pow(n as u32);
    let mut acc = [C::default(); 2];
    let mut norms = [0.0; 4];
    let mut x = [0.0; 3];
    for kt in 0..nodes {
        let t = t0 + (kt as f64 + 0.5) * ht;
        for idx in 0..total {
            let mut r = idx;
            for a in (0..n).rev() {
                x[a] = bx[a].0 + ((r % nodes) as f64 + 0.5) * hx[a];
                r /= nodes;
            }
            let (jf, jg) = (f.jet(t, &x[..n]), g.jet(t, &x[..n]));
            let p = Point::new(t, &x[..n]);
            let (pf, pg) = (op.apply_jet(&jf, &p, prof), op.apply_jet(&jg, &p, prof));
            acc[0] += pf * jg.v.conj();
            acc[1] += jf.v * pg.conj();
            norms[0] += pf.norm_sqr();
            norms[1] += jg.v.norm_sqr();
            norms[2] += jf.v.norm_sqr();
            norms[3] += pg.norm_sqr();
        }
    }
    let scale = ((norms[0] * norms[1]).sqrt() + (norms[2] * norms[3]).sqrt()) * vol;
    Ok((acc[0] * vol, acc[1] * vol, scale))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub mode: SupportMode,
    pub beta: f64,
    pub radius: f64,
    pub r0: f64,
    pub lambda: f64,
    pub lhs: f64,
    /// `‖e^{φ}(i∂t+L)e^{−φ}f‖²`.
    pub rhs: f64,
    /// Threshold `β₁` or `β₃` the run is measured against.
    pub threshold: f64,
    /// `λ^{-2} rhs / lhs`; infinite when both sides vanish.
    pub slack: f64,
    pub commutator_slack: f64,
    pub frontier: f64,
    pub direct_gap: f64,
    /// Below threshold: reported, never asserted.
    pub exploratory: bool,
}

impl CarlemanReport {
    fn from_sides(ops: &CarlemanOperators, s: &Sides, beta: f64, cutoff: &CutoffSpec, threshold: f64) -> Self {
        let r = ops.radius;
        let lhs = s.lhs(beta, r);
        let rhs = s.rhs(beta);
        let l2 = ops.lambda.powi(-2);
        let ratio = |num: f64| if lhs > 0.0 { num / lhs } else { f64::INFINITY };
        CarlemanReport {
            mode: ops.mode,
            beta,
            radius: r,
            r0: cutoff.r0,
            lambda: ops.lambda,
            lhs,
            rhs,
            threshold,
            slack: ratio(l2 * rhs),
            commutator_slack: ratio(l2 * (s.c1 * beta + s.c3 * beta.powi(3))),
            frontier: s.frontier(r, ops.lambda),
            direct_gap: s.direct_gap,
            exploratory: beta < threshold,
        }
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.slack >= 1.0 - tol
    }
}

/// Cubic-regime weight; the threshold is `β₁` with the given `C₁`.
pub fn carleman_sides_cubic(
    f: &TestFunction,
    ops: &CarlemanOperators,
    beta: f64,
    cutoff: &CutoffSpec,
    c1: f64,
    nodes: usize,
) -> Result<CarlemanReport> {
    if ops.mode != SupportMode::Annulus || (ops.radius - cutoff.radius).abs() > 0.0 {
        return Err(Error::Precondition("operators were not built for this cubic-regime cutoff".into()));
    }
    let s = sides(ops, f, cutoff, nodes, beta)?;
    Ok(CarlemanReport::from_sides(ops, &s, beta, cutoff, cutoff.beta1(ops.lambda, c1)))
}

/// Translated weight; the threshold is `β₃ = c₀R²`.
pub fn carleman_sides_translated(
    f: &TestFunction,
    ops: &CarlemanOperators,
    beta: f64,
    cutoff: &CutoffSpec,
    c0: f64,
    nodes: usize,
) -> Result<CarlemanReport> {
    if ops.mode != SupportMode::Translated || (ops.radius - cutoff.radius).abs() > 0.0 {
        return Err(Error::Precondition("operators were not built for this translated cutoff".into()));
    }
    let s = sides(ops, f, cutoff, nodes, beta)?;
    Ok(CarlemanReport::from_sides(ops, &s, beta, cutoff, c0 * cutoff.radius.powi(2)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: SupportMode,
    pub beta: f64,
    pub radius: f64,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub commutator_slack: f64,
    pub frontier: f64,
    pub direct_gap: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub min_slack: f64,
    pub max_direct_gap: f64,
    /// Per radius: `(R, max over seeds of the commutator frontier)`.
    pub frontier: Vec<(f64, f64)>,
    /// Least-squares slope of `log β*` against `log R`.
    pub frontier_exponent: f64,
    /// `max_R β*(R)/R^p` for `p` = 2 (translated) or 3 (cubic).
    pub frontier_constant: f64,
    pub failures: Vec<SweepRow>,
}

/// The field being swept, with the matching support mode.
#[derive(Clone, Debug)]
pub enum SweepField {
    Cubic(CoefficientField),
    Translated(TransversalField),
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub field: SweepField,
    pub radii: Vec<f64>,
    /// `β` values as multiples of `R^p`; empty means "at the frontier only".
    pub beta_factors: Vec<f64>,
    pub seeds: Vec<u64>,
    pub r0: f64,
    pub domain: SampleDomain,
    pub tolerance: f64,
}

pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn carleman_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.radii.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Precondition("sweep needs at least one radius and one seed".into()));
    }
    let (mode, power) = match cfg.field {
        SweepField::Cubic(_) => (SupportMode::Annulus, 3),
        SweepField::Translated(_) => (SupportMode::Translated, 2),
    };
    let bx = SampleBox::cube(cfg.domain.dim, cfg.domain.half_width, 33);
    let mut rows = Vec::new();
    let mut frontier = Vec::new();
    for &r in &cfg.radii {
        let cutoff = CutoffSpec::new(cfg.r0, r)?;
        let ops = match &cfg.field {
            SweepField::Cubic(f) => CarlemanOperators::cubic(f, r, &bx)?,
            SweepField::Translated(f) => CarlemanOperators::translated(f, r, &bx)?,
        };
        let scale = r.powi(power);
        let mut all = Vec::new();
        for &seed in &cfg.seeds {
            let f = make_test_function(mode, &cfg.domain, &cutoff, seed)?;
            let probe = cfg.beta_factors.first().copied().unwrap_or(1.0) * scale;
            all.push((seed, sides(&ops, &f, &cutoff, cfg.domain.nodes, probe)?));
        }
        let front = all.iter().map(|(_, s)| s.frontier(r, ops.lambda)).fold(0.0, f64::max);
        frontier.push((r, front));
        for &factor in &cfg.beta_factors {
            let beta = factor * scale;
            for (seed, s) in &all {
                let rep = CarlemanReport::from_sides(&ops, s, beta, &cutoff, 0.0);
                rows.push(SweepRow {
                    mode,
                    beta,
                    radius: r,
                    seed: *seed,
                    lhs: rep.lhs,
                    rhs: rep.rhs,
                    slack: rep.slack,
                    commutator_slack: rep.commutator_slack,
                    frontier: rep.frontier,
                    direct_gap: rep.direct_gap,
                    pass: rep.passed(cfg.tolerance),
                });
            }
        }
        if cfg.beta_factors.is_empty() {
            for (seed, s) in &all {
                rows.push(SweepRow {
                    mode,
                    beta: front,
                    radius: r,
                    seed: *seed,
                    lhs: s.lhs(front, r),
                    rhs: s.rhs(front),
                    slack: CarlemanReport::from_sides(&ops, s, front, &cutoff, 0.0).slack,
                    commutator_slack: CarlemanReport::from_sides(&ops, s, front, &cutoff, 0.0).commutator_slack,
                    frontier: s.frontier(r, ops.lambda),
                    direct_gap: s.direct_gap,
                    pass: true,
                });
            }
        }
    }
    let usable: Vec<&(f64, f64)> = frontier.iter().filter(|(_, b)| *b > 0.0 && b.is_finite()).collect();
    let frontier_exponent = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|(r, _)| r.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|(_, b)| b.ln()).collect();
        fit_slope(&x, &y)
    } else {
        f64::NAN
    };
    let frontier_constant = frontier.iter().map(|(r, b)| b / r.powi(power)).fold(0.0, f64::max);
    let failures: Vec<SweepRow> = rows.iter().filter(|r| !r.pass).cloned().collect();
    Ok(SweepReport {
        min_slack: rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        max_direct_gap: rows.iter().map(|r| r.direct_gap).fold(0.0, f64::max),
        rows,
        frontier,
        frontier_exponent,
        frontier_constant,
        failures,
    })
}
