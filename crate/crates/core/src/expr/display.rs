use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{Atom, Coef, Expr, Monomial, Rational, Var};

fn write_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn write_exponent(f: &mut fmt::Formatter<'_>, e: &Rational) -> fmt::Result {
    if e.is_one() {
        Ok(())
    } else if e.is_integer() && e.is_positive() {
        write!(f, "^{}", e.numer())
    } else {
        write!(f, "^(")?;
        write_rational(f, e)?;
        write!(f, ")")
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(i) => write!(f, "x{i}"),
        }
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write_rational(f, &self.re);
        }
        write!(f, "(")?;
        if !self.re.is_zero() {
            write_rational(f, &self.re)?;
            write!(f, "{}", if self.im.is_negative() { " - " } else { " + " })?;
        } else if self.im.is_negative() {
            write!(f, "-")?;
        }
        let mag = self.im.abs();
        if !mag.is_one() {
            write_rational(f, &mag)?;
            write!(f, "*")?;
        }
        write!(f, "i)")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Profile(k) => write!(f, "phi{}(t)", "'".repeat(*k as usize)),
            Atom::Exp(g) => write!(f, "exp({g})"),
            Atom::Sin(g) => write!(f, "sin({g})"),
            Atom::Cos(g) => write!(f, "cos({g})"),
            Atom::Atan(g) => write!(f, "atan({g})"),
            Atom::Base(p) => write!(f, "({p})"),
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (a, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "{a}")?;
            write_exponent(f, e)?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_real() && c.re.is_negative();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mag = if negative { -c } else { c.clone() };
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}
