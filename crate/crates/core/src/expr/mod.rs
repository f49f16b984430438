//! Exact symbolic expressions in `t` and `x1..x3`.
//!
//! An [`Expr`] is stored in normal form: a sum of complex-rational coefficients
//! times monomials, each monomial a product of atoms raised to rational powers.
//! Atoms are the variables, the abstract time profile `phi(t)` and its
//! derivatives, `exp`, `sin`, `cos`, `atan` of a nested expression, and opaque
//! bases carrying reciprocals or fractional powers of a multi-term expression.
//! Two `exp` factors in one monomial are always merged, so `e^g e^{-g}`
//! cancels structurally.

mod display;
mod eval;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use eval::{CompiledExpr, NoProfile, Point, SineProfile, TimeProfile};
pub use parse::parse;

pub type Rational = BigRational;

/// Independent variable: `t` or one of `x1`, `x2`, `x3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    X(u8),
}

impl Var {
    /// Slot in a [`Point`]: 0 for `t`, `i` for `xi`.
    pub fn index(self) -> usize {
        match self {
            Var::T => 0,
            Var::X(i) => i as usize,
        }
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact decimal value of the shortest representation of `v`, so `0.1` maps to `1/10`.
pub fn rational_from_f64(v: f64) -> Rational {
    assert!(v.is_finite(), "non-finite parameter {v}");
    parse::decimal_to_rational(&format!("{v:e}")).expect("formatted float is a valid decimal")
}

fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Complex rational coefficient.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coef {
    pub re: Rational,
    pub im: Rational,
}

impl Coef {
    pub fn new(re: Rational, im: Rational) -> Self {
        Coef { re, im }
    }
    pub fn real(re: Rational) -> Self {
        Coef { re, im: Rational::zero() }
    }
    pub fn int(v: i64) -> Self {
        Coef::real(Rational::from_integer(BigInt::from(v)))
    }
    pub fn zero() -> Self {
        Coef::int(0)
    }
    pub fn one() -> Self {
        Coef::int(1)
    }
    pub fn i() -> Self {
        Coef { re: Rational::zero(), im: Rational::one() }
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }
    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }
    pub fn conj(&self) -> Self {
        Coef { re: self.re.clone(), im: -self.im.clone() }
    }
    pub fn inv(&self) -> Option<Self> {
        let d = &self.re * &self.re + &self.im * &self.im;
        if d.is_zero() {
            return None;
        }
        Some(Coef { re: &self.re / &d, im: -(&self.im / &d) })
    }
    pub fn powi(&self, k: i64) -> Option<Self> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Coef::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Some(acc)
    }
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

impl Add for &Coef {
    type Output = Coef;
    fn add(self, o: &Coef) -> Coef {
        Coef { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Mul for &Coef {
    type Output = Coef;
    fn mul(self, o: &Coef) -> Coef {
        Coef {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        Coef { re: -self.re.clone(), im: -self.im.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Var),
    /// `k`-th derivative of the abstract time profile `phi(t)`.
    Profile(u8),
    Exp(Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Atan(Arc<Expr>),
    /// Opaque base; only ever carries negative or fractional exponents.
    Base(Arc<Expr>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<Atom, Rational>);

impl Monomial {
    pub fn atoms(&self) -> impl Iterator<Item = (&Atom, &Rational)> {
        self.0.iter()
    }
    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (atom, e) in &other.0 {
            if let Atom::Exp(g) = atom {
                let prev = out.keys().find(|a| matches!(a, Atom::Exp(_))).cloned();
                match prev {
                    Some(p) => {
                        out.remove(&p);
                        let Atom::Exp(h) = p else { unreachable!() };
                        let sum = &*h + &**g;
                        if !sum.is_zero() {
                            out.insert(Atom::Exp(Arc::new(sum)), Rational::one());
                        }
                    }
                    None => {
                        out.insert(atom.clone(), e.clone());
                    }
                }
                continue;
            }
            let slot = out.entry(atom.clone()).or_insert_with(Rational::zero);
            *slot += e;
            if slot.is_zero() {
                out.remove(atom);
            }
        }
        Monomial(out)
    }
}

/// Bases are resolved once their exponent is a positive integer, or any integer
/// when the base is a single term.
fn expands(p: &Expr, e: &Rational) -> bool {
    e.is_integer() && (e.is_positive() || p.num_terms() == 1)
}

/// Symbolic expression in normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: BTreeMap<Monomial, Coef>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }
    pub fn one() -> Self {
        Expr::constant(Coef::one())
    }
    pub fn constant(c: Coef) -> Self {
        let mut e = Expr::zero();
        e.push(Monomial::default(), c);
        e
    }
    pub fn int(v: i64) -> Self {
        Expr::constant(Coef::int(v))
    }
    pub fn rational(r: Rational) -> Self {
        Expr::constant(Coef::real(r))
    }
    /// Exact decimal conversion of a float parameter, see [`rational_from_f64`].
    pub fn from_f64(v: f64) -> Self {
        Expr::rational(rational_from_f64(v))
    }
    pub fn imag_unit() -> Self {
        Expr::constant(Coef::i())
    }
    pub fn var(v: Var) -> Self {
        Expr::from_atom(Atom::Var(v))
    }
    pub fn t() -> Self {
        Expr::var(Var::T)
    }
    pub fn x(i: u8) -> Self {
        assert!((1..=3).contains(&i), "spatial index out of range: {i}");
        Expr::var(Var::X(i))
    }
    /// `phi^{(k)}(t)` for the abstract time profile.
    pub fn profile(k: u8) -> Self {
        Expr::from_atom(Atom::Profile(k))
    }

    fn from_atom(a: Atom) -> Self {
        let mut m = BTreeMap::new();
        m.insert(a, Rational::one());
        let mut e = Expr::zero();
        e.push(Monomial(m), Coef::one());
        e
    }

    fn push(&mut self, m: Monomial, c: Coef) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                *slot = &*slot + &c;
                if slot.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn add_assign_expr(&mut self, other: &Expr) {
        for (m, c) in &other.terms {
            self.push(m.clone(), c.clone());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coef)> {
        self.terms.iter()
    }
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Coef> {
        match self.terms.len() {
            0 => Some(Coef::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn single_term(&self) -> Option<(&Monomial, &Coef)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Term with integer-exponent bases resolved; the only place bases get expanded.
    fn normalized(c: Coef, m: Monomial) -> Expr {
        let pending = m.0.iter().find_map(|(a, e)| match a {
            Atom::Base(p) if expands(p, e) => Some((a.clone(), p.clone(), e.to_integer())),
            _ => None,
        });
        match pending {
            None => {
                let mut out = Expr::zero();
                out.push(m, c);
                out
            }
            Some((atom, p, e)) => {
                let mut rest = m;
                rest.0.remove(&atom);
                let k = e.to_i64().expect("exponent fits in i64");
                let head = p.pow_int(k);
                &Expr::normalized(c, rest) * &head
            }
        }
    }

    pub fn scale(&self, c: &Coef) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { terms: self.terms.iter().map(|(m, d)| (m.clone(), c * d)).collect() }
    }

    pub fn pow_int(&self, k: i64) -> Expr {
        if k == 0 {
            return Expr::one();
        }
        if k == 1 {
            return self.clone();
        }
        if self.is_zero() {
            if k > 0 {
                return Expr::zero();
            }
            return Expr::base_power(Expr::zero(), Rational::from_integer(k.into()));
        }
        if let Some((m, c)) = self.single_term() {
            let coef = c.powi(k).expect("nonzero coefficient");
            let kr = Rational::from_integer(k.into());
            let mut atoms = BTreeMap::new();
            for (a, e) in &m.0 {
                match a {
                    Atom::Exp(g) => {
                        let arg = g.scale(&Coef::int(k));
                        atoms.insert(Atom::Exp(Arc::new(arg)), Rational::one());
                    }
                    _ => {
                        atoms.insert(a.clone(), e * &kr);
                    }
                }
            }
            return Expr::normalized(coef, Monomial(atoms));
        }
        if k > 0 {
            let mut acc = Expr::one();
            let mut sq = self.clone();
            let mut e = k as u64;
            while e > 0 {
                if e & 1 == 1 {
                    acc = &acc * &sq;
                }
                e >>= 1;
                if e > 0 {
                    sq = &sq * &sq;
                }
            }
            return acc;
        }
        let lead = self.terms.values().next().unwrap().clone();
        let unit = self.scale(&lead.inv().unwrap());
        Expr::base_power(unit, Rational::from_integer(k.into())).scale(&lead.powi(k).unwrap())
    }

    fn base_power(p: Expr, e: Rational) -> Expr {
        let mut m = BTreeMap::new();
        m.insert(Atom::Base(Arc::new(p)), e);
        let mut out = Expr::zero();
        out.push(Monomial(m), Coef::one());
        out
    }

    pub fn recip(&self) -> Expr {
        self.pow_int(-1)
    }

    pub fn pow_rational(&self, r: &Rational) -> Expr {
        if r.is_integer() {
            return self.pow_int(r.to_integer().to_i64().expect("exponent fits in i64"));
        }
        if self.is_zero() && r.is_positive() {
            return Expr::zero();
        }
        if let Some((m, c)) = self.single_term() {
            if c.is_one() && m.0.len() == 1 {
                let (a, e) = m.0.iter().next().unwrap();
                match a {
                    Atom::Exp(g) => {
                        let arg = g.scale(&Coef::real(r.clone()));
                        return Expr::from_atom(Atom::Exp(Arc::new(arg)));
                    }
                    Atom::Base(p) => {
                        return Expr::normalized(
                            Coef::one(),
                            Monomial([(Atom::Base(p.clone()), e * r)].into_iter().collect()),
                        );
                    }
                    _ => {}
                }
            }
        }
        Expr::base_power(self.clone(), r.clone())
    }

    pub fn exp(&self) -> Expr {
        if self.is_zero() {
            return Expr::one();
        }
        Expr::from_atom(Atom::Exp(Arc::new(self.clone())))
    }
    pub fn sin(&self) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        Expr::from_atom(Atom::Sin(Arc::new(self.clone())))
    }
    pub fn cos(&self) -> Expr {
        if self.is_zero() {
            return Expr::one();
        }
        Expr::from_atom(Atom::Cos(Arc::new(self.clone())))
    }
    pub fn atan(&self) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        Expr::from_atom(Atom::Atan(Arc::new(self.clone())))
    }

    pub fn conj(&self) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut term = Expr::constant(c.conj());
            for (a, e) in &m.0 {
                let f = match a {
                    Atom::Var(_) | Atom::Profile(_) => Expr::from_atom(a.clone()).pow_rational(e),
                    Atom::Exp(g) => g.conj().exp(),
                    Atom::Sin(g) => g.conj().sin().pow_rational(e),
                    Atom::Cos(g) => g.conj().cos().pow_rational(e),
                    Atom::Atan(g) => g.conj().atan().pow_rational(e),
                    Atom::Base(p) => p.conj().pow_rational(e),
                };
                term = &term * &f;
            }
            out.add_assign_expr(&term);
        }
        out
    }

    pub fn derivative(&self, v: Var) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            for (a, e) in &m.0 {
                let inner = match a {
                    Atom::Var(w) => {
                        if *w == v {
                            Expr::one()
                        } else {
                            continue;
                        }
                    }
                    Atom::Profile(k) => {
                        if v == Var::T {
                            Expr::profile(k + 1)
                        } else {
                            continue;
                        }
                    }
                    Atom::Exp(g) => {
                        let dg = g.derivative(v);
                        if dg.is_zero() {
                            continue;
                        }
                        let whole = Expr::normalized(c.clone(), m.clone());
                        out.add_assign_expr(&(&whole * &dg));
                        continue;
                    }
                    Atom::Sin(g) => {
                        let dg = g.derivative(v);
                        if dg.is_zero() {
                            continue;
                        }
                        &g.cos() * &dg
                    }
                    Atom::Cos(g) => {
                        let dg = g.derivative(v);
                        if dg.is_zero() {
                            continue;
                        }
                        -&(&g.sin() * &dg)
                    }
                    Atom::Atan(g) => {
                        let dg = g.derivative(v);
                        if dg.is_zero() {
                            continue;
                        }
                        &dg * &(&Expr::one() + &(&**g * &**g)).recip()
                    }
                    Atom::Base(p) => {
                        let dp = p.derivative(v);
                        if dp.is_zero() {
                            continue;
                        }
                        dp
                    }
                };
                let mut rest = m.0.clone();
                let lowered = e - Rational::one();
                if lowered.is_zero() {
                    rest.remove(a);
                } else {
                    rest.insert(a.clone(), lowered);
                }
                let coef = c * &Coef::real(e.clone());
                let head = Expr::normalized(coef, Monomial(rest));
                out.add_assign_expr(&(&head * &inner));
            }
        }
        out
    }

    /// Repeated derivative along a list of variables.
    pub fn derivatives(&self, vars: &[Var]) -> Expr {
        vars.iter().fold(self.clone(), |acc, v| acc.derivative(*v))
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for m in self.terms.keys() {
            for a in m.0.keys() {
                match a {
                    Atom::Var(v) => {
                        out.insert(*v);
                    }
                    Atom::Profile(_) => {
                        out.insert(Var::T);
                    }
                    Atom::Exp(g) | Atom::Sin(g) | Atom::Cos(g) | Atom::Atan(g) | Atom::Base(g) => {
                        g.collect_vars(out)
                    }
                }
            }
        }
    }

    pub fn uses_profile(&self) -> bool {
        self.terms.keys().any(|m| {
            m.0.keys().any(|a| match a {
                Atom::Profile(_) => true,
                Atom::Var(_) => false,
                Atom::Exp(g) | Atom::Sin(g) | Atom::Cos(g) | Atom::Atan(g) | Atom::Base(g) => {
                    g.uses_profile()
                }
            })
        })
    }

    /// True when every coefficient is real, i.e. the expression is real for real arguments
    /// (up to the branch of fractional powers).
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(m, c)| {
            c.is_real()
                && m.0.keys().all(|a| match a {
                    Atom::Var(_) | Atom::Profile(_) => true,
                    Atom::Exp(g) | Atom::Sin(g) | Atom::Cos(g) | Atom::Atan(g) | Atom::Base(g) => {
                        g.is_real()
                    }
                })
        })
    }

    /// Slow exact-path evaluation; use [`Expr::compile`] in loops.
    pub fn eval(&self, p: &Point, profile: &dyn TimeProfile) -> crate::Result<Complex64> {
        let v = self.compile().eval(p, profile);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(crate::Error::Evaluation { point: p.0 })
        }
    }

    pub fn compile(&self) -> CompiledExpr {
        CompiledExpr::from_expr(self)
    }

    /// Randomised zero test: `|self| <= tol * scale` at `samples` points of
    /// `[-1.5, 1.5]^3 x [0, 1]`, where `scale` is the sum of absolute term values.
    /// Points where a term is not finite are skipped.
    pub fn vanishes_numerically(&self, samples: usize, tol: f64, seed: u64) -> bool {
        if self.is_zero() {
            return true;
        }
        let compiled = self.compile();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = SineProfile;
        let mut checked = 0;
        for _ in 0..samples * 4 {
            let p = Point([
                rng.gen_range(0.0..1.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            ]);
            let (value, scale) = compiled.eval_with_scale(&p, &profile);
            if !(value.re.is_finite() && value.im.is_finite() && scale.is_finite()) {
                continue;
            }
            if value.norm() > tol * scale.max(1.0) {
                return false;
            }
            checked += 1;
            if checked == samples {
                break;
            }
        }
        checked == samples
    }

    /// Normal-form equality, falling back to randomised evaluation (64 points, 1e-10).
    pub fn equivalent(&self, other: &Expr) -> bool {
        self == other || (self - other).vanishes_numerically(64, 1e-10, 0x5eed)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        let mut out = self.clone();
        out.add_assign_expr(o);
        out
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.push(m.clone(), -c);
        }
        out
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let m = m1.times(m2);
                let c = c1 * c2;
                let needs_norm = m.0.iter().any(|(a, e)| matches!(a, Atom::Base(p) if expands(p, e)));
                if needs_norm {
                    out.add_assign_expr(&Expr::normalized(c, m));
                } else {
                    out.push(m, c);
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $f(self, o: Expr) -> Expr {
                (&self).$f(&o)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $f(self, o: &Expr) -> Expr {
                (&self).$f(o)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $f(self, o: Expr) -> Expr {
                self.$f(&o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let mut out = Expr::zero();
        for e in iter {
            out.add_assign_expr(&e);
        }
        out
    }
}

impl std::str::FromStr for Expr {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Expr> {
        parse(s)
    }
}
