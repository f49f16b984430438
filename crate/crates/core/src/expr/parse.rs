//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := ("-" | "+")? base ("^" power)?
//! power  := "-"? integer | "(" "-"? integer ("/" integer)? ")"
//! base   := number | "t" | "x" digit | "i" | "(" expr ")" | func "(" expr ")"
//!         | "phi" "'"* "(" "t" ")"
//! func   := "exp" | "sin" | "cos" | "atan"
//! ```
//!
//! Decimal literals are read exactly, so `0.1` is the rational `1/10`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{Expr, Rational};
use crate::{Error, Result};

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

pub(crate) fn decimal_to_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(num);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse { position: self.pos, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.factor()?;
            } else if self.eat(b'/') {
                let at = self.pos;
                let d = self.factor()?;
                if d.is_zero() {
                    return Err(Error::Parse { position: at, message: "division by zero".into() });
                }
                acc = &acc * &d.recip();
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(-&self.factor()?);
        }
        if self.eat(b'+') {
            return self.factor();
        }
        let b = self.base()?;
        if self.eat(b'^') {
            let r = self.power()?;
            if b.is_zero() && r <= Rational::zero() {
                return Err(self.error("zero raised to a non-positive power"));
            }
            return Ok(b.pow_rational(&r));
        }
        Ok(b)
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(text.parse().expect("digits"))
    }

    fn power(&mut self) -> Result<Rational> {
        if self.eat(b'(') {
            let neg = self.eat(b'-');
            let num = self.integer()?;
            let den = if self.eat(b'/') { self.integer()? } else { BigInt::one() };
            if den.is_zero() {
                return Err(self.error("zero denominator in exponent"));
            }
            self.expect(b')')?;
            let r = Rational::new(num, den);
            return Ok(if neg { -r } else { r });
        }
        let neg = self.eat(b'-');
        let k = Rational::from_integer(self.integer()?);
        Ok(if neg { -k } else { k })
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let n = self.src.len();
        while self.pos < n && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < n && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < n && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits_at = self.pos;
            while self.pos < n && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits_at == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        decimal_to_rational(text)
            .map(Expr::rational)
            .ok_or(Error::Parse { position: start, message: format!("malformed number `{text}`") })
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn base(&mut self) -> Result<Expr> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if !c.is_ascii_alphabetic() {
            return Err(self.error(&format!("unexpected character `{}`", c as char)));
        }
        let start = self.pos;
        let name = self.ident();
        match name.as_str() {
            "t" => Ok(Expr::t()),
            "i" => Ok(Expr::imag_unit()),
            "x1" => Ok(Expr::x(1)),
            "x2" => Ok(Expr::x(2)),
            "x3" => Ok(Expr::x(3)),
            "exp" | "sin" | "cos" | "atan" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(match name.as_str() {
                    "exp" => arg.exp(),
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    _ => arg.atan(),
                })
            }
            "phi" => {
                let mut k = 0u8;
                while self.src.get(self.pos) == Some(&b'\'') {
                    self.pos += 1;
                    k += 1;
                }
                self.expect(b'(')?;
                if self.peek() != Some(b't') {
                    return Err(self.error("profile argument must be `t`"));
                }
                self.pos += 1;
                self.expect(b')')?;
                Ok(Expr::profile(k))
            }
            _ => Err(Error::UnknownIdentifier { name, position: start }),
        }
    }
}
