//! Conjugation `e^{φ}(i∂t + L)e^{−φ} = S + A` and the commutator `[S, A]`.

use std::cell::RefCell;
use std::collections::HashMap;

use super::{Deriv, DiffOperator, WeightSpec};
use crate::coeff::CoefficientField;
use crate::expr::{Coef, Expr, Var};
use crate::Result;

/// Memoised partial derivatives of one expression; keys are sorted variable lists.
struct Partials<'a> {
    base: &'a Expr,
    cache: RefCell<HashMap<Vec<Var>, Expr>>,
}

impl<'a> Partials<'a> {
    fn new(base: &'a Expr) -> Self {
        Partials { base, cache: RefCell::new(HashMap::new()) }
    }

    fn get(&self, vars: &[Var]) -> Expr {
        let mut key = vars.to_vec();
        key.sort();
        if let Some(e) = self.cache.borrow().get(&key) {
            return e.clone();
        }
        let e = match key.split_last() {
            None => self.base.clone(),
            Some((last, rest)) => self.get(rest).derivative(*last),
        };
        self.cache.borrow_mut().insert(key, e.clone());
        e
    }

    /// Spatial derivative with zero-based indices.
    fn dx(&self, idx: &[usize]) -> Expr {
        let v: Vec<Var> = idx.iter().map(|&i| Var::X(i as u8 + 1)).collect();
        self.get(&v)
    }

    /// `∂t` followed by spatial derivatives.
    fn dtx(&self, idx: &[usize]) -> Expr {
        let mut v: Vec<Var> = idx.iter().map(|&i| Var::X(i as u8 + 1)).collect();
        v.push(Var::T);
        self.get(&v)
    }
}

struct Field<'a> {
    n: usize,
    entries: Vec<Vec<Partials<'a>>>,
}

impl<'a> Field<'a> {
    fn new(f: &'a CoefficientField) -> Self {
        let n = f.dim();
        Field { n, entries: (0..n).map(|k| (0..n).map(|j| Partials::new(f.entry(k, j))).collect()).collect() }
    }
    fn a(&self, k: usize, j: usize) -> Expr {
        self.entries[k][j].base.clone()
    }
    /// `∂_{idx} a_{kj}`.
    fn da(&self, idx: &[usize], k: usize, j: usize) -> Expr {
        self.entries[k][j].dx(idx)
    }
}

fn c(v: i64) -> Coef {
    Coef::int(v)
}

fn ic(v: i64) -> Coef {
    Coef::new(crate::expr::rational(0, 1), crate::expr::rational(v, 1))
}

/// Accumulates `coef · ∂^d` terms.
struct Acc(DiffOperator);

impl Acc {
    fn new(n: usize) -> Self {
        Acc(DiffOperator::zero(n))
    }
    fn push(&mut self, d: Deriv, k: Coef, factors: &[Expr]) {
        if factors.iter().any(Expr::is_zero) {
            return;
        }
        let mut e = Expr::constant(k);
        for f in factors {
            e = &e * f;
        }
        self.0.add_term(d, e);
    }
}

fn quad(n: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..n).flat_map(move |k| (0..n).flat_map(move |j| (0..n).flat_map(move |m| (0..n).map(move |l| (k, j, m, l)))))
}

fn pair(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |k| (0..n).map(move |j| (k, j)))
}

/// `i∂t + Σ ∂_k ∘ a_kj ∘ ∂_j`, built by composition.
pub fn schrodinger_operator(field: &CoefficientField) -> Result<DiffOperator> {
    let n = field.dim();
    let mut op = DiffOperator::dt(n).scale(&Expr::imag_unit());
    for (k, j) in pair(n) {
        let inner = DiffOperator::multiplication(n, field.entry(k, j).clone()).compose(&DiffOperator::dx(n, j))?;
        op = op.add(&DiffOperator::dx(n, k).compose(&inner)?);
    }
    Ok(op)
}

/// `e^{φ} ∘ (i∂t + L) ∘ e^{−φ}` by direct composition.
pub fn conjugate_direct(field: &CoefficientField, phi: &Expr) -> Result<DiffOperator> {
    let n = field.dim();
    let p = schrodinger_operator(field)?;
    let right = p.compose(&DiffOperator::multiplication(n, (-phi).exp()))?;
    DiffOperator::multiplication(n, phi.exp()).compose(&right)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conjugated {
    /// Formally symmetric part.
    pub s: DiffOperator,
    /// Formally antisymmetric part.
    pub a: DiffOperator,
}

fn principal_part(f: &Field) -> DiffOperator {
    let mut acc = Acc::new(f.n);
    acc.push(Deriv::dt(), Coef::i(), &[]);
    for (k, j) in pair(f.n) {
        acc.push(Deriv::dxx(k, j), c(1), &[f.a(k, j)]);
        acc.push(Deriv::dx(j), c(1), &[f.da(&[k], k, j)]);
    }
    acc.0
}

fn gradient_square(f: &Field, phi: &Partials) -> DiffOperator {
    let mut acc = Acc::new(f.n);
    for (k, j) in pair(f.n) {
        acc.push(Deriv::ID, c(1), &[phi.dx(&[k]), phi.dx(&[j]), f.a(k, j)]);
    }
    acc.0
}

fn antisymmetric_part(f: &Field, phi: &Partials) -> DiffOperator {
    let mut acc = Acc::new(f.n);
    for (m, l) in pair(f.n) {
        acc.push(Deriv::dx(m), c(-2), &[phi.dx(&[l]), f.a(m, l)]);
        acc.push(Deriv::ID, c(-1), &[phi.dx(&[l]), f.da(&[m], m, l)]);
        acc.push(Deriv::ID, c(-1), &[phi.dx(&[m, l]), f.a(m, l)]);
    }
    acc.push(Deriv::ID, ic(-1), &[phi.dtx(&[])]);
    acc.0
}

/// `S = i∂t + a_kj ∂²_kj + (∂_k a_kj) ∂_j + a_kj ∂_kφ ∂_jφ`,
/// `A = −2 a_ml ∂_lφ ∂_m − ∂_lφ ∂_m a_ml − a_ml ∂²_mlφ − i∂tφ`.
pub fn conjugate_decompose(field: &CoefficientField, phi: &Expr) -> Conjugated {
    let f = Field::new(field);
    let p = Partials::new(phi);
    Conjugated { s: principal_part(&f).add(&gradient_square(&f, &p)), a: antisymmetric_part(&f, &p) }
}

/// Splitting by powers of `β` for `φ = βψ`: `S = s0 + β² s2`, `A = β a1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graded {
    pub s0: DiffOperator,
    pub s2: DiffOperator,
    pub a1: DiffOperator,
}

impl Graded {
    pub fn at(&self, beta: &Expr) -> Conjugated {
        Conjugated { s: self.s0.add(&self.s2.scale(&(beta * beta))), a: self.a1.scale(beta) }
    }
}

pub fn graded_decompose(field: &CoefficientField, weight: &WeightSpec) -> Graded {
    let f = Field::new(field);
    let shape = weight.shape(field.dim());
    let p = Partials::new(&shape);
    Graded { s0: principal_part(&f), s2: gradient_square(&f, &p), a1: antisymmetric_part(&f, &p) }
}

pub fn commutator(s: &DiffOperator, a: &DiffOperator) -> Result<DiffOperator> {
    Ok(s.compose(a)?.sub(&a.compose(s)?))
}

/// Second-order, first-order and the two zeroth-order groups of `[S, A]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TTerms {
    pub t2: DiffOperator,
    pub t1: DiffOperator,
    pub t01: DiffOperator,
    pub t02: DiffOperator,
}

impl TTerms {
    pub fn total(&self) -> DiffOperator {
        self.t2.add(&self.t1).add(&self.t01).add(&self.t02)
    }
}

/// Closed-form expansion of `[S, A]` by order (summation over repeated indices).
pub fn t_terms(field: &CoefficientField, phi: &Expr) -> TTerms {
    let n = field.dim();
    let f = Field::new(field);
    let p = Partials::new(phi);
    let a = |k, j| f.a(k, j);
    let da = |idx: &[usize], k, j| f.da(idx, k, j);
    let ph = |idx: &[usize]| p.dx(idx);
    let pt = |idx: &[usize]| p.dtx(idx);

    let mut t2 = Acc::new(n);
    for (k, j, m, l) in quad(n) {
        t2.push(Deriv::dxx(m, j), c(-4), &[a(k, j), a(m, l), ph(&[k, l])]);
        t2.push(Deriv::dxx(m, j), c(-4), &[a(k, j), da(&[k], m, l), ph(&[l])]);
        t2.push(Deriv::dxx(k, j), c(2), &[a(m, l), da(&[m], k, j), ph(&[l])]);
    }

    let mut t1 = Acc::new(n);
    for (m, l) in pair(n) {
        t1.push(Deriv::dx(m), ic(-4), &[a(m, l), pt(&[l])]);
    }
    for (k, j, m, l) in quad(n) {
        t1.push(Deriv::dx(m), c(-4), &[a(k, j), a(m, l), ph(&[k, j, l])]);
        t1.push(Deriv::dx(m), c(-4), &[a(k, j), ph(&[k, l]), da(&[j], m, l)]);
        t1.push(Deriv::dx(m), c(-4), &[a(m, l), ph(&[j, l]), da(&[k], k, j)]);
        t1.push(Deriv::dx(j), c(-2), &[a(k, j), ph(&[m, l]), da(&[k], m, l)]);
        t1.push(Deriv::dx(m), c(-2), &[ph(&[l]), da(&[j], m, l), da(&[k], k, j)]);
        t1.push(Deriv::dx(j), c(-2), &[a(k, j), ph(&[l]), da(&[k, m], m, l)]);
        t1.push(Deriv::dx(j), c(2), &[a(m, l), ph(&[l]), da(&[k, m], k, j)]);
        t1.push(Deriv::dx(m), c(-2), &[a(k, j), ph(&[l]), da(&[k, j], m, l)]);
    }

    let mut t01 = Acc::new(n);
    for (k, j, m, l) in quad(n) {
        t01.push(Deriv::ID, c(4), &[a(m, l), a(k, j), ph(&[l]), ph(&[k, m]), ph(&[j])]);
        t01.push(Deriv::ID, c(2), &[a(m, l), da(&[m], k, j), ph(&[l]), ph(&[k]), ph(&[j])]);
    }

    let mut t02 = Acc::new(n);
    t02.push(Deriv::ID, c(1), &[p.get(&[Var::T, Var::T])]);
    for (k, j) in pair(n) {
        t02.push(Deriv::ID, ic(-2), &[a(k, j), pt(&[k, j])]);
        t02.push(Deriv::ID, ic(-2), &[pt(&[k]), da(&[j], j, k)]);
    }
    for (k, j, m, l) in quad(n) {
        t02.push(Deriv::ID, c(-1), &[a(k, j), a(m, l), ph(&[k, j, m, l])]);
        t02.push(Deriv::ID, c(-2), &[a(k, j), ph(&[k, j, l]), da(&[m], m, l)]);
        t02.push(Deriv::ID, c(-2), &[a(k, j), ph(&[k, m, l]), da(&[j], m, l)]);
        t02.push(Deriv::ID, c(-1), &[da(&[k], k, j), ph(&[j, l]), da(&[m], m, l)]);
        t02.push(Deriv::ID, c(-1), &[da(&[k], k, j), ph(&[m, l]), da(&[j], m, l)]);
        t02.push(Deriv::ID, c(-2), &[a(k, j), ph(&[k, l]), da(&[j, m], m, l)]);
        t02.push(Deriv::ID, c(-1), &[a(k, j), ph(&[m, l]), da(&[k, j], m, l)]);
        t02.push(Deriv::ID, c(-1), &[da(&[k], k, j), ph(&[l]), da(&[j, m], m, l)]);
        t02.push(Deriv::ID, c(-1), &[a(k, j), ph(&[l]), da(&[k, j, m], m, l)]);
    }

    TTerms { t2: t2.0, t1: t1.0, t01: t01.0, t02: t02.0 }
}

/// Outcome of checking `S + A` against direct conjugation and `[S, A]` against [`t_terms`].
#[derive(Clone, Debug)]
pub struct TReport {
    pub conjugated: Conjugated,
    pub commutator: DiffOperator,
    pub terms: TTerms,
    /// `S + A − e^{φ}(i∂t + L)e^{−φ}`.
    pub conjugation_residual: DiffOperator,
    /// `[S, A]` minus the T-expansion, split by spatial order 2, 1, 0.
    pub residuals: [DiffOperator; 3],
    /// Every residual coefficient is zero in normal form.
    pub exact: bool,
    /// Every residual coefficient vanishes at 64 random points (tolerance 1e-10).
    pub numeric: bool,
}

impl TReport {
    pub fn passed(&self) -> bool {
        self.exact || self.numeric
    }
}

pub fn verify_t_decomposition(field: &CoefficientField, weight: &WeightSpec) -> Result<TReport> {
    let n = field.dim();
    let phi = weight.phi(n);
    let conjugated = conjugate_decompose(field, &phi);
    let direct = conjugate_direct(field, &phi)?;
    let conjugation_residual = conjugated.s.add(&conjugated.a).sub(&direct);
    let comm = commutator(&conjugated.s, &conjugated.a)?;
    let terms = t_terms(field, &phi);
    let residuals = [
        comm.spatial_part(2).sub(&terms.t2),
        comm.spatial_part(1).sub(&terms.t1),
        comm.spatial_part(0).sub(&terms.t01.add(&terms.t02)),
    ];
    let leftover = comm.sub(&comm.spatial_part(0).add(&comm.spatial_part(1)).add(&comm.spatial_part(2)));
    let all: Vec<&DiffOperator> =
        residuals.iter().chain([&conjugation_residual, &leftover]).collect();
    let exact = all.iter().all(|r| r.is_zero());
    let numeric = all.iter().all(|r| r.terms().all(|(_, c)| c.vanishes_numerically(64, 1e-10, 0x5eed)));
    Ok(TReport { conjugated, commutator: comm, terms, conjugation_residual, residuals, exact, numeric })
}
