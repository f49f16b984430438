//! Coefficient fields `A(x)` and potentials `V(x)`.

use nalgebra::DMatrix;

use crate::expr::{parse, CompiledExpr, Expr, NoProfile, Point, Var};
use crate::{Error, Result};

/// Tensor grid of sample points used for sup-norm estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: usize,
}

impl SampleBox {
    pub fn cube(dim: usize, half_width: f64, points: usize) -> Self {
        SampleBox { lower: vec![-half_width; dim], upper: vec![half_width; dim], points }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// All sample points, last axis fastest.
    pub fn iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let n = self.dim();
        let m = self.points.max(2);
        let total = m.pow(n as u32);
        (0..total).map(move |mut idx| {
            let mut x = vec![0.0; n];
            for axis in (0..n).rev() {
                let k = idx % m;
                idx /= m;
                let s = k as f64 / (m - 1) as f64;
                x[axis] = self.lower[axis] + s * (self.upper[axis] - self.lower[axis]);
            }
            x
        })
    }
}

fn spatial_only(e: &Expr, dim: usize, what: &str) -> Result<()> {
    if e.uses_profile() {
        return Err(Error::Dependency(format!("{what} uses the time profile")));
    }
    for v in e.variables() {
        match v {
            Var::T => return Err(Error::Dependency(format!("{what} depends on t"))),
            Var::X(i) if i as usize > dim => {
                return Err(Error::Dependency(format!("{what} depends on x{i} in dimension {dim}")))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Symmetric, uniformly elliptic coefficient matrix with a potential.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    entries: Vec<Vec<Expr>>,
    potential: Expr,
}

impl CoefficientField {
    pub fn new(entries: Vec<Vec<Expr>>, potential: Expr) -> Result<Self> {
        let n = entries.len();
        if !(1..=3).contains(&n) || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition(format!("coefficient matrix must be n×n with 1 ≤ n ≤ 3, got {n} rows")));
        }
        for k in 0..n {
            for j in 0..n {
                spatial_only(&entries[k][j], n, &format!("a{}{}", k + 1, j + 1))?;
                if j > k && !entries[k][j].equivalent(&entries[j][k]) {
                    return Err(Error::NotSymmetric { row: k + 1, col: j + 1 });
                }
            }
        }
        spatial_only(&potential, n, "potential")?;
        Ok(CoefficientField { entries, potential })
    }

    /// Parses row-major entry strings.
    pub fn parse(entries: &[Vec<&str>], potential: &str) -> Result<Self> {
        let rows = entries
            .iter()
            .map(|r| r.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        CoefficientField::new(rows, parse(potential)?)
    }

    pub fn identity(n: usize) -> Self {
        let entries =
            (0..n).map(|k| (0..n).map(|j| if k == j { Expr::one() } else { Expr::zero() }).collect()).collect();
        CoefficientField { entries, potential: Expr::zero() }
    }

    pub fn with_potential(mut self, v: Expr) -> Result<Self> {
        spatial_only(&v, self.dim(), "potential")?;
        self.potential = v;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }
    /// Zero-based entry `a_{k+1, j+1}`.
    pub fn entry(&self, k: usize, j: usize) -> &Expr {
        &self.entries[k][j]
    }
    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.as_constant().is_some())
    }

    /// Compiled entries, row-major.
    pub fn compiled(&self) -> Vec<CompiledExpr> {
        self.entries.iter().flatten().map(Expr::compile).collect()
    }

    pub fn matrix_at(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let p = Point::new(0.0, x);
        let c = self.compiled();
        DMatrix::from_fn(n, n, |k, j| c[k * n + j].eval_re(&p, &NoProfile))
    }

    /// Extreme eigenvalues `(λ, Λ)` of `A` over the box.
    pub fn ellipticity_bounds(&self, b: &SampleBox) -> Result<(f64, f64)> {
        let n = self.dim();
        let c = self.compiled();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in b.iter() {
            let p = Point::new(0.0, &x);
            let m = DMatrix::from_fn(n, n, |k, j| c[k * n + j].eval_re(&p, &NoProfile));
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation { point: p.0 });
            }
            let eig = m.symmetric_eigenvalues();
            let emin = eig.min();
            if emin <= 0.0 {
                return Err(Error::NotPositiveDefinite { point: x, eigenvalue: emin });
            }
            lo = lo.min(emin);
            hi = hi.max(eig.max());
        }
        Ok((lo, hi))
    }

    /// Frobenius norms of all derivatives of order `order` of `A`, compiled.
    fn derivative_tensor(&self, order: usize, vars: &[Var]) -> Vec<CompiledExpr> {
        let mut out = Vec::new();
        for idx in multi_indices(vars.len(), order) {
            let seq: Vec<Var> = idx.iter().map(|&i| vars[i]).collect();
            for e in self.entries.iter().flatten() {
                let d = e.derivatives(&seq);
                if !d.is_zero() {
                    out.push(d.compile());
                }
            }
        }
        out
    }

    /// `sup |x|·|∇A|` over the box.
    pub fn decay_smallness(&self, b: &SampleBox) -> f64 {
        let vars: Vec<Var> = (1..=self.dim() as u8).map(Var::X).collect();
        weighted_sup(&self.derivative_tensor(1, &vars), b, |x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `Σ_{m ≤ 3} sup |∇^m A|` over the box.
    pub fn c3_norm(&self, b: &SampleBox) -> f64 {
        let vars: Vec<Var> = (1..=self.dim() as u8).map(Var::X).collect();
        (0..=3).map(|m| weighted_sup(&self.derivative_tensor(m, &vars), b, |_| 1.0)).sum()
    }

    /// `sup ‖A(x)‖` (spectral norm) over the box.
    pub fn sup_norm(&self, b: &SampleBox) -> f64 {
        b.iter()
            .map(|x| {
                let e = self.matrix_at(&x).symmetric_eigenvalues();
                e.max().abs().max(e.min().abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Sorted multi-indices (as index lists) of length `order` over `n` variables.
fn multi_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    if order == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for tail in multi_indices(n, order - 1) {
        let start = tail.last().copied().unwrap_or(0);
        for i in start..n {
            let mut v = tail.clone();
            v.push(i);
            out.push(v);
        }
    }
    out
}

fn weighted_sup(parts: &[CompiledExpr], b: &SampleBox, w: impl Fn(&[f64]) -> f64) -> f64 {
    if parts.is_empty() {
        return 0.0;
    }
    b.iter()
        .map(|x| {
            let p = Point::new(0.0, &x);
            let s: f64 = parts.iter().map(|c| c.eval(&p, &NoProfile).norm_sqr()).sum();
            w(&x) * s.sqrt()
        })
        .fold(0.0, f64::max)
}

/// Block coefficients `a11(x1) ⊕ Ã(x')`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransversalField {
    a11: Expr,
    tilde: Vec<Vec<Expr>>,
    potential: Expr,
}

impl TransversalField {
    pub fn new(a11: Expr, tilde: Vec<Vec<Expr>>, potential: Expr) -> Result<Self> {
        let n = tilde.len() + 1;
        if n > 3 || tilde.iter().any(|r| r.len() != n - 1) {
            return Err(Error::Precondition("transversal block must be square with n ≤ 3".into()));
        }
        if a11.variables().iter().any(|v| *v != Var::X(1)) || a11.uses_profile() {
            return Err(Error::Dependency("a11 may depend on x1 only".into()));
        }
        for row in &tilde {
            for e in row {
                if e.variables().iter().any(|v| matches!(v, Var::T | Var::X(1))) || e.uses_profile() {
                    return Err(Error::Dependency("transversal block may depend on x' only".into()));
                }
            }
        }
        let field = TransversalField { a11, tilde, potential };
        field.to_field()?;
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.tilde.len() + 1
    }
    pub fn a11(&self) -> &Expr {
        &self.a11
    }
    pub fn tilde(&self) -> &[Vec<Expr>] {
        &self.tilde
    }
    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn to_field(&self) -> Result<CoefficientField> {
        let n = self.dim();
        let entries = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| match (k, j) {
                        (0, 0) => self.a11.clone(),
                        (0, _) | (_, 0) => Expr::zero(),
                        _ => self.tilde[k - 1][j - 1].clone(),
                    })
                    .collect()
            })
            .collect();
        CoefficientField::new(entries, self.potential.clone())
    }

    /// `sup |x'|·|∇_{x'} Ã|` over the box (first axis ignored).
    pub fn transversal_smallness(&self, b: &SampleBox) -> f64 {
        let vars: Vec<Var> = (2..=self.dim() as u8).map(Var::X).collect();
        let parts: Vec<CompiledExpr> = vars
            .iter()
            .flat_map(|v| self.tilde.iter().flatten().map(move |e| e.derivative(*v)))
            .filter(|d| !d.is_zero())
            .map(|d| d.compile())
            .collect();
        weighted_sup(&parts, b, |x| x[1..].iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}
