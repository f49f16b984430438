//! Linear differential operators with symbolic coefficients.

mod conjugate;
mod weight;

pub use conjugate::{
    commutator, conjugate_decompose, conjugate_direct, graded_decompose, schrodinger_operator, t_terms,
    verify_t_decomposition, Conjugated, Graded, TReport, TTerms,
};
pub use weight::{WeightKind, WeightSpec};

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;

use crate::expr::{parse, CompiledExpr, Expr, Point, TimeProfile, Var};
use crate::jet::Jet;
use crate::{Error, Result};

pub const MAX_SPATIAL_ORDER: u8 = 4;
pub const MAX_TIME_ORDER: u8 = 2;

/// Multi-index `∂t^t ∂x^x`; unused spatial slots stay zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Deriv {
    pub t: u8,
    pub x: [u8; 3],
}

impl Deriv {
    pub const ID: Deriv = Deriv { t: 0, x: [0; 3] };

    pub fn dt() -> Self {
        Deriv { t: 1, x: [0; 3] }
    }
    /// `∂_{x_{i+1}}`.
    pub fn dx(i: usize) -> Self {
        let mut x = [0; 3];
        x[i] += 1;
        Deriv { t: 0, x }
    }
    pub fn dxx(i: usize, j: usize) -> Self {
        Deriv::dx(i).plus(&Deriv::dx(j))
    }
    pub fn spatial_order(&self) -> u8 {
        self.x.iter().sum()
    }
    pub fn plus(&self, o: &Deriv) -> Deriv {
        Deriv { t: self.t + o.t, x: [self.x[0] + o.x[0], self.x[1] + o.x[1], self.x[2] + o.x[2]] }
    }
    fn minus(&self, o: &Deriv) -> Deriv {
        Deriv { t: self.t - o.t, x: [self.x[0] - o.x[0], self.x[1] - o.x[1], self.x[2] - o.x[2]] }
    }
    fn total(&self) -> u8 {
        self.t + self.spatial_order()
    }
    /// Variable sequence realising this derivative.
    pub fn vars(&self) -> Vec<Var> {
        let mut v = vec![Var::T; self.t as usize];
        for (i, &m) in self.x.iter().enumerate() {
            v.extend(std::iter::repeat(Var::X(i as u8 + 1)).take(m as usize));
        }
        v
    }
    /// All `γ ≤ self` with the multinomial weight `C(self, γ)`.
    fn below(&self) -> Vec<(Deriv, i64)> {
        let mut out = Vec::new();
        for t in 0..=self.t {
            for a in 0..=self.x[0] {
                for b in 0..=self.x[1] {
                    for c in 0..=self.x[2] {
                        let w = binom(self.t, t) * binom(self.x[0], a) * binom(self.x[1], b) * binom(self.x[2], c);
                        out.push((Deriv { t, x: [a, b, c] }, w));
                    }
                }
            }
        }
        out
    }
}

fn binom(n: u8, k: u8) -> i64 {
    (0..k as i64).fold(1, |acc, i| acc * (n as i64 - i) / (i + 1))
}

/// `Σ c_α(t, x) ∂^α` acting on functions of `(t, x1..xn)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOperator {
    dim: usize,
    terms: BTreeMap<Deriv, Expr>,
}

impl DiffOperator {
    pub fn zero(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension {dim} out of range");
        DiffOperator { dim, terms: BTreeMap::new() }
    }

    pub fn multiplication(dim: usize, c: Expr) -> Self {
        DiffOperator::term(dim, Deriv::ID, c)
    }

    pub fn term(dim: usize, d: Deriv, c: Expr) -> Self {
        let mut op = DiffOperator::zero(dim);
        op.add_term(d, c);
        op
    }

    pub fn dt(dim: usize) -> Self {
        DiffOperator::term(dim, Deriv::dt(), Expr::one())
    }
    /// `∂_{x_{i+1}}`.
    pub fn dx(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        DiffOperator::term(dim, Deriv::dx(i), Expr::one())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, d: Deriv, c: Expr) {
        assert!(
            d.x[self.dim..].iter().all(|&m| m == 0),
            "derivative in a variable beyond dimension {}",
            self.dim
        );
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&d) {
            Some(prev) => &prev + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(d, sum);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Deriv, &Expr)> {
        self.terms.iter()
    }
    pub fn coefficient(&self, d: &Deriv) -> Expr {
        self.terms.get(d).cloned().unwrap_or_default()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn spatial_order(&self) -> u8 {
        self.terms.keys().map(Deriv::spatial_order).max().unwrap_or(0)
    }
    pub fn time_order(&self) -> u8 {
        self.terms.keys().map(|d| d.t).max().unwrap_or(0)
    }

    /// Terms with spatial order exactly `k` and no time derivative.
    pub fn spatial_part(&self, k: u8) -> DiffOperator {
        let mut out = DiffOperator::zero(self.dim);
        for (d, c) in &self.terms {
            if d.t == 0 && d.spatial_order() == k {
                out.add_term(*d, c.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &Expr) -> DiffOperator {
        let mut out = DiffOperator::zero(self.dim);
        for (d, e) in &self.terms {
            out.add_term(*d, e * c);
        }
        out
    }

    fn check_dims(&self, o: &DiffOperator) {
        assert_eq!(self.dim, o.dim, "operators act in different dimensions");
    }

    pub fn add(&self, o: &DiffOperator) -> DiffOperator {
        self.check_dims(o);
        let mut out = self.clone();
        for (d, c) in &o.terms {
            out.add_term(*d, c.clone());
        }
        out
    }

    pub fn sub(&self, o: &DiffOperator) -> DiffOperator {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> DiffOperator {
        DiffOperator { dim: self.dim, terms: self.terms.iter().map(|(d, c)| (*d, -c)).collect() }
    }

    /// `self ∘ other`, expanded with the Leibniz rule.
    pub fn compose(&self, other: &DiffOperator) -> Result<DiffOperator> {
        self.check_dims(other);
        let mut cache: HashMap<(Deriv, Deriv), Expr> = HashMap::new();
        let mut out = DiffOperator::zero(self.dim);
        for (alpha, p) in &self.terms {
            for (gamma, w) in alpha.below() {
                let rest = alpha.minus(&gamma);
                for (beta, q) in &other.terms {
                    let dq = cache.entry((gamma, *beta)).or_insert_with(|| q.derivatives(&gamma.vars()));
                    if dq.is_zero() {
                        continue;
                    }
                    let d = rest.plus(beta);
                    if d.spatial_order() > MAX_SPATIAL_ORDER || d.t > MAX_TIME_ORDER {
                        return Err(Error::OrderOverflow(format!(
                            "composition produces ∂t^{} with spatial order {}",
                            d.t,
                            d.spatial_order()
                        )));
                    }
                    out.add_term(d, (p * &*dq).scale(&crate::expr::Coef::int(w)));
                }
            }
        }
        Ok(out)
    }

    /// Formal L²(dt dx) adjoint `Σ (−1)^{|α|} ∂^α ∘ conj(c_α)`.
    pub fn adjoint(&self) -> Result<DiffOperator> {
        let mut out = DiffOperator::zero(self.dim);
        for (d, c) in &self.terms {
            let sign = if d.total() % 2 == 0 { Expr::one() } else { Expr::int(-1) };
            let part = DiffOperator::term(self.dim, *d, sign)
                .compose(&DiffOperator::multiplication(self.dim, c.conj()))?;
            out = out.add(&part);
        }
        Ok(out)
    }

    /// `P f` for a symbolic `f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.terms.iter().map(|(d, c)| c * &f.derivatives(&d.vars())).sum()
    }

    /// Coefficientwise normal-form equality, falling back to randomised evaluation.
    pub fn equivalent(&self, o: &DiffOperator) -> bool {
        let diff = self.sub(o);
        diff.terms.values().all(|c| c.vanishes_numerically(64, 1e-10, 0x5eed))
    }

    /// Canonical text, one `coef ⊗ dt^a dx^(m1,…,mn)` line per term.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (d, c) in &self.terms {
            let idx: Vec<String> = d.x[..self.dim].iter().map(|m| m.to_string()).collect();
            s.push_str(&format!("{c} ⊗ dt^{} dx^({})\n", d.t, idx.join(",")));
        }
        s
    }

    pub fn from_text(dim: usize, text: &str) -> Result<DiffOperator> {
        let mut op = DiffOperator::zero(dim);
        for (line_no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |msg: &str| Error::Parse { position: line_no, message: format!("line {}: {msg}", line_no + 1) };
            let (coef, deriv) = line.split_once('⊗').ok_or_else(|| bad("missing `⊗`"))?;
            let deriv = deriv.trim();
            let rest = deriv.strip_prefix("dt^").ok_or_else(|| bad("expected `dt^`"))?;
            let (t, xs) = rest.split_once(" dx^(").ok_or_else(|| bad("expected ` dx^(`"))?;
            let xs = xs.strip_suffix(')').ok_or_else(|| bad("expected `)`"))?;
            let mut d = Deriv { t: t.trim().parse().map_err(|_| bad("bad time order"))?, x: [0; 3] };
            let parts: Vec<&str> = xs.split(',').collect();
            if parts.len() != dim {
                return Err(bad("multi-index length does not match the dimension"));
            }
            for (slot, p) in d.x.iter_mut().zip(parts) {
                *slot = p.trim().parse().map_err(|_| bad("bad spatial order"))?;
            }
            op.add_term(d, parse(coef.trim())?);
        }
        Ok(op)
    }

    pub fn compile(&self) -> CompiledOperator {
        CompiledOperator { terms: self.terms.iter().map(|(d, c)| (*d, c.compile())).collect() }
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Float-coefficient operator for pointwise evaluation on jets.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    terms: Vec<(Deriv, CompiledExpr)>,
}

impl CompiledOperator {
    /// `(P f)(p)` given the jet of `f` at `p`.
    pub fn apply_jet(&self, jet: &Jet, p: &Point, prof: &dyn TimeProfile) -> Complex64 {
        self.terms
            .iter()
            .map(|(d, c)| c.eval(p, prof) * jet.get(d).expect("jet too short for operator"))
            .sum()
    }

    pub fn supported_by_jet(&self) -> bool {
        self.terms.iter().all(|(d, _)| Jet::default().get(d).is_some())
    }
}
