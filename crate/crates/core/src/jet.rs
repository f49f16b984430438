//! Second-order jets `(f, ∂t f, ∇f, ∇²f)` at a point, closed under products.

use num_complex::Complex64;

use crate::ops::Deriv;

type C = Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: C,
    pub t: C,
    pub x: [C; 3],
    pub xx: [[C; 3]; 3],
}

impl Jet {
    pub fn constant(v: C) -> Self {
        Jet { v, ..Default::default() }
    }

    /// Component for a multi-index, if the jet carries it.
    pub fn get(&self, d: &Deriv) -> Option<C> {
        let s = d.spatial_order();
        match (d.t, s) {
            (0, 0) => Some(self.v),
            (1, 0) => Some(self.t),
            (0, 1) => d.x.iter().position(|&m| m == 1).map(|i| self.x[i]),
            (0, 2) => {
                let mut idx = d.x.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat(i).take(m as usize));
                let i = idx.next()?;
                let j = idx.next()?;
                Some(self.xx[i][j])
            }
            _ => None,
        }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut out = Jet { v: self.v * o.v, t: self.t * o.v + self.v * o.t, ..Default::default() };
        for i in 0..3 {
            out.x[i] = self.x[i] * o.v + self.v * o.x[i];
            for j in 0..3 {
                out.xx[i][j] =
                    self.xx[i][j] * o.v + self.x[i] * o.x[j] + self.x[j] * o.x[i] + self.v * o.xx[i][j];
            }
        }
        out
    }

    pub fn scale(&self, c: C) -> Jet {
        let mut out = *self;
        out.v *= c;
        out.t *= c;
        for i in 0..3 {
            out.x[i] *= c;
            for j in 0..3 {
                out.xx[i][j] *= c;
            }
        }
        out
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut out = *self;
        out.v += o.v;
        out.t += o.t;
        for i in 0..3 {
            out.x[i] += o.x[i];
            for j in 0..3 {
                out.xx[i][j] += o.xx[i][j];
            }
        }
        out
    }

    /// Jet of `exp(−(φ − φ(p)))` from the jet of a real `φ`.
    pub fn damping(phi: &Jet) -> Jet {
        let mut out = Jet { v: C::new(1.0, 0.0), t: -phi.t, ..Default::default() };
        for i in 0..3 {
            out.x[i] = -phi.x[i];
            for j in 0..3 {
                out.xx[i][j] = phi.x[i] * phi.x[j] - phi.xx[i][j];
            }
        }
        out
    }

    pub fn grad_norm_sqr(&self, dim: usize) -> f64 {
        self.x[..dim].iter().map(|z| z.norm_sqr()).sum()
    }
}
