//! Nonlinear basis functions over lagged inputs and outputs.
//!
//! Grammar:
//!
//! ```text
//! expr   := factor ('*' factor)*
//! factor := func '(' var ')' ['^' int] | var ['^' int]
//! func   := 'sin' | 'cos' | 'exp'
//! var    := ('y' | 'u') '[' ['-'] int ']'
//! ```
//!
//! `y[-k]` is the output `k` samples back (`k ≥ 1`), `u[-k]` the input `k`
//! samples back and `u[0]` the current input. Whitespace is ignored.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Input,
    Output,
}

/// A lagged variable: `u[-lag]` or `y[-lag]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LagVar {
    pub channel: Channel,
    pub lag: usize,
}

impl LagVar {
    pub fn input(lag: usize) -> Self {
        LagVar { channel: Channel::Input, lag }
    }

    /// Panics on `lag == 0`: only strictly past outputs are admissible.
    pub fn output(lag: usize) -> Self {
        assert!(lag >= 1, "output variables need lag >= 1");
        LagVar { channel: Channel::Output, lag }
    }
}

impl fmt::Display for LagVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.channel {
            Channel::Input => 'u',
            Channel::Output => 'y',
        };
        if self.lag == 0 {
            write!(f, "{c}[0]")
        } else {
            write!(f, "{c}[-{}]", self.lag)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Primitive {
    Identity,
    Sin,
    Cos,
    Exp,
}

impl Primitive {
    fn apply(self, x: f64) -> f64 {
        match self {
            Primitive::Identity => x,
            Primitive::Sin => x.sin(),
            Primitive::Cos => x.cos(),
            Primitive::Exp => x.exp(),
        }
    }

    fn name(self) -> Option<&'static str> {
        match self {
            Primitive::Identity => None,
            Primitive::Sin => Some("sin"),
            Primitive::Cos => Some("cos"),
            Primitive::Exp => Some("exp"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Factor {
    pub primitive: Primitive,
    pub var: LagVar,
    pub power: u32,
}

impl Factor {
    fn sort_key(&self) -> (Channel, usize, Primitive, u32) {
        (self.var.channel, self.var.lag, self.primitive, self.power)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.primitive.name() {
            Some(name) => write!(f, "{name}({})", self.var)?,
            None => write!(f, "{}", self.var)?,
        }
        if self.power != 1 {
            write!(f, "^{}", self.power)?;
        }
        Ok(())
    }
}

/// A product of `primitive(var)^power` factors, kept in canonical order
/// (channel, lag, primitive, power).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisExpr {
    factors: Vec<Factor>,
}

impl BasisExpr {
    pub fn new(mut factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Semantic("expression needs at least one factor".into()));
        }
        for fac in &factors {
            if fac.power == 0 {
                return Err(Error::Semantic(format!("power of {} must be at least 1", fac.var)));
            }
            if fac.var.channel == Channel::Output && fac.var.lag == 0 {
                return Err(Error::Semantic("y[0] is not a past output".into()));
            }
        }
        factors.sort_by_key(Factor::sort_key);
        Ok(BasisExpr { factors })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn max_lag(&self) -> usize {
        self.factors.iter().map(|f| f.var.lag).max().unwrap_or(0)
    }

    /// Evaluates with `x_y = (y(t−ℓ), …, y(t−1))` and
    /// `x_u = (u(t−ℓ), …, u(t−1), u(t))`, where `ℓ = x_y.len()`.
    pub fn eval(&self, x_y: &[f64], x_u: &[f64]) -> Result<f64> {
        let ell = x_y.len();
        if x_u.len() != ell + 1 {
            return Err(Error::Dimension(format!(
                "x_u must have {} entries for lag {ell}, got {}",
                ell + 1,
                x_u.len()
            )));
        }
        let mut acc = 1.0;
        for fac in &self.factors {
            if fac.var.lag > ell {
                return Err(Error::Dimension(format!("{} exceeds lag window {ell}", fac.var)));
            }
            let x = match fac.var.channel {
                Channel::Output => x_y[ell - fac.var.lag],
                Channel::Input => x_u[ell - fac.var.lag],
            };
            let value = fac.primitive.apply(x).powi(fac.power as i32);
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("factor {fac} evaluated at {x}")));
            }
            acc *= value;
        }
        if !acc.is_finite() {
            return Err(Error::NonFinite(format!("product {self} overflowed")));
        }
        Ok(acc)
    }
}

impl fmt::Display for BasisExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, fac) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{fac}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BasisExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_basis(s)
    }
}

impl Serialize for BasisExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BasisExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_basis(&text).map_err(serde::de::Error::custom)
    }
}

/// Canonical text form; `parse_basis(&format_basis(e)) == e`.
pub fn format_basis(e: &BasisExpr) -> String {
    e.to_string()
}

pub fn eval_basis(e: &BasisExpr, x_y: &[f64], x_u: &[f64]) -> Result<f64> {
    e.eval(x_y, x_u)
}

pub fn parse_basis(text: &str) -> Result<BasisExpr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let mut factors = vec![p.factor()?];
    loop {
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b'*') => {
                p.pos += 1;
                factors.push(p.factor()?);
            }
            Some(c) => return Err(p.error(format!("expected '*' or end of input, found {:?}", c as char))),
        }
    }
    BasisExpr::new(factors)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, want: u8) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected {:?}, found {:?}", want as char, c as char))),
            None => Err(self.error(format!("expected {:?}, found end of input", want as char))),
        }
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Syntax { pos: start, msg: "integer out of range".into() })
    }

    fn factor(&mut self) -> Result<Factor> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident().to_owned();
        let (primitive, var) = match name.as_str() {
            "sin" | "cos" | "exp" => {
                let primitive = match name.as_str() {
                    "sin" => Primitive::Sin,
                    "cos" => Primitive::Cos,
                    _ => Primitive::Exp,
                };
                self.expect(b'(')?;
                self.skip_ws();
                let var_start = self.pos;
                let channel = self.ident().to_owned();
                let var = self.var(&channel, var_start)?;
                self.expect(b')')?;
                (primitive, var)
            }
            "y" | "u" => (Primitive::Identity, self.var(&name, start)?),
            "" => return Err(self.error("expected a function or variable")),
            other => return Err(Error::Syntax { pos: start, msg: format!("unknown identifier {other:?}") }),
        };
        self.skip_ws();
        let power = if self.peek() == Some(b'^') {
            self.pos += 1;
            let p = self.integer()?;
            if p == 0 {
                return Err(Error::Semantic(format!("power of {var} must be at least 1")));
            }
            u32::try_from(p).map_err(|_| Error::Semantic(format!("power {p} too large")))?
        } else {
            1
        };
        Ok(Factor { primitive, var, power })
    }

    fn var(&mut self, channel: &str, start: usize) -> Result<LagVar> {
        let channel = match channel {
            "y" => Channel::Output,
            "u" => Channel::Input,
            other => return Err(Error::Syntax { pos: start, msg: format!("expected 'y' or 'u', found {other:?}") }),
        };
        self.expect(b'[')?;
        self.skip_ws();
        let negative = self.peek() == Some(b'-');
        if negative {
            self.pos += 1;
        }
        let lag = self.integer()?;
        self.expect(b']')?;
        if !negative && lag != 0 {
            return Err(Error::Semantic(format!("index {lag} refers to a future sample; use a non-positive index")));
        }
        let lag = usize::try_from(lag).map_err(|_| Error::Semantic("lag too large".into()))?;
        if channel == Channel::Output && lag == 0 {
            return Err(Error::Semantic("y[0] is not a past output".into()));
        }
        Ok(LagVar { channel, lag })
    }
}

/// Ordered list of basis expressions. The order fixes the feature-row order
/// everywhere downstream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisSet {
    exprs: Vec<BasisExpr>,
}

impl BasisSet {
    pub fn new(exprs: Vec<BasisExpr>) -> Self {
        BasisSet { exprs }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        texts.iter().map(|t| parse_basis(t.as_ref())).collect::<Result<Vec<_>>>().map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }

    pub fn exprs(&self) -> &[BasisExpr] {
        &self.exprs
    }

    /// Largest lag referenced by any expression (0 for an empty set).
    pub fn max_lag(&self) -> usize {
        self.exprs.iter().map(BasisExpr::max_lag).max().unwrap_or(0)
    }

    pub fn push(&mut self, e: BasisExpr) {
        self.exprs.push(e);
    }

    /// Appends every feature value at one time step to `out`.
    pub fn eval_into(&self, x_y: &[f64], x_u: &[f64], out: &mut Vec<f64>) -> Result<()> {
        for e in &self.exprs {
            out.push(e.eval(x_y, x_u)?);
        }
        Ok(())
    }

    pub fn eval(&self, x_y: &[f64], x_u: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.exprs.len());
        self.eval_into(x_y, x_u, &mut out)?;
        Ok(out)
    }

    pub(crate) fn check_lag(&self, ell: usize) -> Result<()> {
        if self.max_lag() > ell {
            return Err(Error::InvalidArgument(format!(
                "basis references lag {} beyond system lag {ell}",
                self.max_lag()
            )));
        }
        Ok(())
    }
}

impl FromIterator<BasisExpr> for BasisSet {
    fn from_iter<I: IntoIterator<Item = BasisExpr>>(iter: I) -> Self {
        BasisSet::new(iter.into_iter().collect())
    }
}
