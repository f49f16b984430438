use num_complex::Complex64;
use num_traits::ToPrimitive;

use super::{rat_to_f64, Atom, Expr};

/// Evaluation point `(t, x1, x2, x3)`; unused slots are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point(pub [f64; 4]);

impl Point {
    pub fn new(t: f64, x: &[f64]) -> Self {
        let mut p = [0.0; 4];
        p[0] = t;
        for (slot, v) in p[1..].iter_mut().zip(x) {
            *slot = *v;
        }
        Point(p)
    }
    pub fn t(&self) -> f64 {
        self.0[0]
    }
    pub fn x(&self) -> &[f64] {
        &self.0[1..]
    }
}

/// Binding for the abstract `phi(t)` atom.
pub trait TimeProfile: Send + Sync {
    /// `k`-th derivative at `t`.
    fn derivative(&self, k: u8, t: f64) -> f64;
}

/// No profile bound: any `phi` atom evaluates to NaN.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoProfile;

impl TimeProfile for NoProfile {
    fn derivative(&self, _k: u8, _t: f64) -> f64 {
        f64::NAN
    }
}

/// `phi(t) = sin t`; used for randomised identity checks.
#[derive(Clone, Copy, Debug, Default)]
pub struct SineProfile;

impl TimeProfile for SineProfile {
    fn derivative(&self, k: u8, t: f64) -> f64 {
        (t + f64::from(k) * std::f64::consts::FRAC_PI_2).sin()
    }
}

#[derive(Clone, Debug)]
enum Node {
    Var(usize),
    Profile(u8),
    Exp(Box<CompiledExpr>),
    Sin(Box<CompiledExpr>),
    Cos(Box<CompiledExpr>),
    Atan(Box<CompiledExpr>),
    Base(Box<CompiledExpr>),
}

#[derive(Clone, Copy, Debug)]
enum Pow {
    Int(i32),
    Real(f64),
}

#[derive(Clone, Debug)]
struct Term {
    coef: Complex64,
    factors: Vec<(Node, Pow)>,
}

/// Float-coefficient copy of an [`Expr`] for fast pointwise evaluation.
#[derive(Clone, Debug, Default)]
pub struct CompiledExpr {
    terms: Vec<Term>,
}

impl CompiledExpr {
    pub fn from_expr(e: &Expr) -> Self {
        let terms = e
            .terms()
            .map(|(m, c)| {
                let factors = m
                    .atoms()
                    .map(|(a, r)| {
                        let node = match a {
                            Atom::Var(v) => Node::Var(v.index()),
                            Atom::Profile(k) => Node::Profile(*k),
                            Atom::Exp(g) => Node::Exp(Box::new(Self::from_expr(g))),
                            Atom::Sin(g) => Node::Sin(Box::new(Self::from_expr(g))),
                            Atom::Cos(g) => Node::Cos(Box::new(Self::from_expr(g))),
                            Atom::Atan(g) => Node::Atan(Box::new(Self::from_expr(g))),
                            Atom::Base(g) => Node::Base(Box::new(Self::from_expr(g))),
                        };
                        let pow = if r.is_integer() {
                            Pow::Int(r.to_integer().to_i32().expect("exponent fits in i32"))
                        } else {
                            Pow::Real(rat_to_f64(r))
                        };
                        (node, pow)
                    })
                    .collect();
                Term { coef: c.to_c64(), factors }
            })
            .collect();
        CompiledExpr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, p: &Point, prof: &dyn TimeProfile) -> Complex64 {
        self.terms.iter().map(|t| t.eval(p, prof)).sum()
    }

    /// Value together with the sum of absolute term values.
    pub fn eval_with_scale(&self, p: &Point, prof: &dyn TimeProfile) -> (Complex64, f64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut s = 0.0;
        for t in &self.terms {
            let x = t.eval(p, prof);
            v += x;
            s += x.norm();
        }
        (v, s)
    }

    /// Real part, for coefficients known to be real.
    pub fn eval_re(&self, p: &Point, prof: &dyn TimeProfile) -> f64 {
        self.eval(p, prof).re
    }
}

impl Term {
    fn eval(&self, p: &Point, prof: &dyn TimeProfile) -> Complex64 {
        let mut acc = self.coef;
        for (node, pow) in &self.factors {
            let base = match node {
                Node::Var(i) => Complex64::new(p.0[*i], 0.0),
                Node::Profile(k) => Complex64::new(prof.derivative(*k, p.0[0]), 0.0),
                Node::Exp(g) => g.eval(p, prof).exp(),
                Node::Sin(g) => g.eval(p, prof).sin(),
                Node::Cos(g) => g.eval(p, prof).cos(),
                Node::Atan(g) => g.eval(p, prof).atan(),
                Node::Base(g) => g.eval(p, prof),
            };
            acc *= match *pow {
                Pow::Int(1) => base,
                Pow::Int(k) => base.powi(k),
                Pow::Real(r) => {
                    if base.im == 0.0 && base.re >= 0.0 {
                        Complex64::new(base.re.powf(r), 0.0)
                    } else {
                        base.powf(r)
                    }
                }
            };
        }
        acc
    }
}
