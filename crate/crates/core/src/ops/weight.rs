use crate::expr::{rational_from_f64, Coef, Expr, Rational};
use crate::{Error, Result};

/// Shape of the Carleman weight; `φ = β·ψ` with `ψ` given by the variant.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// `ψ = |x|²`
    Quadratic,
    /// `ψ = |x|^{2α}`, `α > 1`
    Power { alpha: Rational },
    /// `ψ = |x/R|² + φ(t)`
    ScaledTime { radius: Rational },
    /// `ψ = |x/R + φ(t) e1|²`
    Translated { radius: Rational },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub beta: Rational,
    /// Time profile; defaults to the abstract `phi(t)`.
    pub profile: Expr,
}

impl WeightSpec {
    pub fn new(kind: WeightKind, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Precondition(format!("β must be positive, got {beta}")));
        }
        match &kind {
            WeightKind::Power { alpha } if *alpha <= Rational::from_integer(1.into()) => {
                return Err(Error::Precondition("power weights need α > 1".into()))
            }
            WeightKind::ScaledTime { radius } | WeightKind::Translated { radius }
                if *radius <= Rational::from_integer(0.into()) =>
            {
                return Err(Error::Precondition("R must be positive".into()))
            }
            _ => {}
        }
        Ok(WeightSpec { kind, beta: rational_from_f64(beta), profile: Expr::profile(0) })
    }

    pub fn quadratic(beta: f64) -> Result<Self> {
        WeightSpec::new(WeightKind::Quadratic, beta)
    }
    pub fn power(beta: f64, alpha: f64) -> Result<Self> {
        WeightSpec::new(WeightKind::Power { alpha: rational_from_f64(alpha) }, beta)
    }
    pub fn scaled_time(beta: f64, radius: f64) -> Result<Self> {
        WeightSpec::new(WeightKind::ScaledTime { radius: rational_from_f64(radius) }, beta)
    }
    pub fn translated(beta: f64, radius: f64) -> Result<Self> {
        WeightSpec::new(WeightKind::Translated { radius: rational_from_f64(radius) }, beta)
    }

    pub fn with_profile(mut self, profile: Expr) -> Result<Self> {
        if profile.variables().iter().any(|v| *v != crate::expr::Var::T) {
            return Err(Error::Dependency("time profile may depend on t only".into()));
        }
        self.profile = profile;
        Ok(self)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let mut w = WeightSpec::new(self.kind.clone(), beta)?;
        w.profile = self.profile.clone();
        Ok(w)
    }

    pub fn beta_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.beta).unwrap()
    }

    pub fn radius(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::ScaledTime { radius } | WeightKind::Translated { radius } => {
                num_traits::ToPrimitive::to_f64(radius)
            }
            _ => None,
        }
    }

    /// `ψ` in dimension `n`.
    pub fn shape(&self, n: usize) -> Expr {
        let r2 = |i: usize| {
            let x = Expr::x(i as u8);
            &x * &x
        };
        let sum_sq = |from: usize| (from..=n).map(r2).sum::<Expr>();
        match &self.kind {
            WeightKind::Quadratic => sum_sq(1),
            WeightKind::Power { alpha } => sum_sq(1).pow_rational(alpha),
            WeightKind::ScaledTime { radius } => {
                let inv = Coef::real(radius.recip() * radius.recip());
                &sum_sq(1).scale(&inv) + &self.profile
            }
            WeightKind::Translated { radius } => {
                let inv = Coef::real(radius.recip());
                let z1 = &Expr::x(1).scale(&inv) + &self.profile;
                let inv2 = Coef::real(radius.recip() * radius.recip());
                &(&z1 * &z1) + &sum_sq(2).scale(&inv2)
            }
        }
    }

    /// `φ = β ψ`.
    pub fn phi(&self, n: usize) -> Expr {
        self.shape(n).scale(&Coef::real(self.beta.clone()))
    }
}
