//! Reduction of a transversal field to `a11 ≡ 1`.
//!
//! With `dy1/dx1 = a11^{-1/2}` and `v = e^{ψ} u`, `ψ = ¼ ln(a11/a11(0))`,
//! the operator `∂1(a11 ∂1) + ∇'·(Ã∇') + V` is conjugated to
//! `∂²_{y1} + ∇'·(Ã∇') + W` where `W = V − a11''/4 + a11'²/(16 a11)`
//! (derivatives in `x1`), i.e. `W = V − (∂_{y1}ψ)² − ∂²_{y1}ψ`.

use crate::coeff::TransversalField;
use crate::expr::{rational, Coef, CompiledExpr, Expr, NoProfile, Point, Var};
use crate::quad::integrate;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GaugeReduction {
    /// Tabulation nodes in the original coordinate.
    pub x1: Vec<f64>,
    /// `y1(x1)`, strictly increasing.
    pub y1: Vec<f64>,
    /// `ψ` at the nodes.
    pub psi: Vec<f64>,
    reduced: TransversalField,
    modified_potential: Expr,
    a11: CompiledExpr,
    a11_prime: CompiledExpr,
    w: CompiledExpr,
}

const TOL: f64 = 1e-14;

impl GaugeReduction {
    /// Tabulates the map on `points` uniform nodes of `[lo, hi]` (which must contain 0).
    pub fn new(field: &TransversalField, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo <= 0.0 && 0.0 <= hi && lo < hi && points >= 2) {
            return Err(Error::Precondition(format!("tabulation range [{lo}, {hi}] must contain 0")));
        }
        let a = field.a11();
        if a.as_constant().is_some() {
            return Err(Error::Precondition("a11 is constant; nothing to reduce".into()));
        }
        let a11 = a.compile();
        let da = a.derivative(Var::X(1));
        let dda = da.derivative(Var::X(1));
        let a11_prime = da.compile();
        let eval = |c: &CompiledExpr, x: f64| c.eval_re(&Point::new(0.0, &[x]), &NoProfile);

        let x1: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
        for &x in &x1 {
            let v = eval(&a11, x);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NotPositiveDefinite { point: vec![x], eigenvalue: v });
            }
        }

        let shift = &(&(&da * &da) * &a.recip()).scale(&Coef::real(rational(1, 16)))
            - &dda.scale(&Coef::real(rational(1, 4)));
        let modified_potential = field.potential() + &shift;
        let reduced = TransversalField::new(Expr::one(), field.tilde().to_vec(), Expr::zero())?;

        let mut out = GaugeReduction {
            y1: Vec::new(),
            psi: Vec::new(),
            x1,
            reduced,
            w: modified_potential.compile(),
            modified_potential,
            a11,
            a11_prime,
        };
        let mut y1 = Vec::with_capacity(points);
        let mut psi = Vec::with_capacity(points);
        for &x in &out.x1 {
            y1.push(out.integral_y(0.0, x)?);
            psi.push(out.integral_psi(0.0, x)?);
        }
        if y1.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("coordinate map is not strictly increasing".into()));
        }
        out.y1 = y1;
        out.psi = psi;
        Ok(out)
    }

    fn a_at(&self, x: f64) -> f64 {
        self.a11.eval_re(&Point::new(0.0, &[x]), &NoProfile)
    }

    fn integral_y(&self, from: f64, to: f64) -> Result<f64> {
        integrate(|s| self.a_at(s).powf(-0.5), from, to, TOL, TOL)
    }

    fn integral_psi(&self, from: f64, to: f64) -> Result<f64> {
        integrate(
            |s| {
                let p = Point::new(0.0, &[s]);
                self.a11_prime.eval_re(&p, &NoProfile) / (4.0 * self.a11.eval_re(&p, &NoProfile))
            },
            from,
            to,
            TOL,
            TOL,
        )
    }

    fn nearest(&self, x: f64) -> usize {
        let h = self.x1[1] - self.x1[0];
        (((x - self.x1[0]) / h).round().max(0.0) as usize).min(self.x1.len() - 1)
    }

    pub fn y_of_x(&self, x: f64) -> Result<f64> {
        let k = self.nearest(x);
        Ok(self.y1[k] + self.integral_y(self.x1[k], x)?)
    }

    pub fn psi_of_x(&self, x: f64) -> Result<f64> {
        let k = self.nearest(x);
        Ok(self.psi[k] + self.integral_psi(self.x1[k], x)?)
    }

    /// Inverse map by Newton's method on `y(x) − y`, with `dx/dy = a11^{1/2}`.
    pub fn x_of_y(&self, y: f64) -> Result<f64> {
        let first = self.y1[0];
        let last = *self.y1.last().unwrap();
        if y < first || y > last {
            return Err(Error::Precondition(format!("y1 = {y} outside the tabulated range [{first}, {last}]")));
        }
        let k = self.y1.partition_point(|&v| v < y).clamp(1, self.y1.len() - 1);
        let s = (y - self.y1[k - 1]) / (self.y1[k] - self.y1[k - 1]);
        let mut x = self.x1[k - 1] + s * (self.x1[k] - self.x1[k - 1]);
        for _ in 0..50 {
            let r = self.y_of_x(x)? - y;
            let step = r * self.a_at(x).sqrt();
            x -= step;
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        Ok(x)
    }

    /// Field after reduction: `a11 ≡ 1`, same transversal block.
    pub fn reduced(&self) -> &TransversalField {
        &self.reduced
    }

    /// `W = V − a11''/4 + a11'²/(16 a11)` as an expression in the original `x1`.
    pub fn modified_potential(&self) -> &Expr {
        &self.modified_potential
    }

    /// `W` at reduced coordinates `(y1, x')`.
    pub fn modified_potential_at(&self, y1: f64, rest: &[f64]) -> Result<f64> {
        let mut x = vec![self.x_of_y(y1)?];
        x.extend_from_slice(rest);
        Ok(self.w.eval_re(&Point::new(0.0, &x), &NoProfile))
    }
}
