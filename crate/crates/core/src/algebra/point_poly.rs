//! Integer polynomials over per-point variables `X_i, Y_i, R_i, G_i, B_i`.
//!
//! This is the intermediate form between a core specification (a product of
//! shape and color primitives) and its moment polynomial: every monomial is an
//! exponent table indexed by point and variable kind.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Mul, Neg};

use crate::error::{Error, Result};

/// Maximum number of integration points a core may use.
pub const MAX_POINTS: usize = 4;

/// Variable kind at a point: centered coordinates or centered channel values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    X = 0,
    Y = 1,
    R = 2,
    G = 3,
    B = 4,
}

impl VarKind {
    pub const ALL: [VarKind; 5] = [VarKind::X, VarKind::Y, VarKind::R, VarKind::G, VarKind::B];
    pub const CHANNELS: [VarKind; 3] = [VarKind::R, VarKind::G, VarKind::B];

    fn symbol(self) -> char {
        match self {
            VarKind::X => 'X',
            VarKind::Y => 'Y',
            VarKind::R => 'R',
            VarKind::G => 'G',
            VarKind::B => 'B',
        }
    }
}

/// One integrand variable: a kind evaluated at a 1-based point index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointVar {
    point: u8,
    kind: VarKind,
}

impl PointVar {
    pub fn new(point: u8, kind: VarKind) -> Result<Self> {
        if point == 0 || point as usize > MAX_POINTS {
            return Err(Error::InvalidSpec(format!(
                "point index {point} outside 1..={MAX_POINTS}"
            )));
        }
        Ok(PointVar { point, kind })
    }

    pub fn point(&self) -> u8 {
        self.point
    }

    pub fn kind(&self) -> VarKind {
        self.kind
    }
}

/// Exponent table of a monomial: `exponents[point - 1][kind]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PointMonomial([[u8; 5]; MAX_POINTS]);

impl PointMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: PointVar) -> Self {
        let mut m = Self::default();
        m.0[v.point as usize - 1][v.kind as usize] = 1;
        m
    }

    pub fn exponents(&self, point: u8) -> [u8; 5] {
        self.0[point as usize - 1]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().flatten().map(|&e| e as u32).sum()
    }
}

impl Mul for PointMonomial {
    type Output = PointMonomial;

    fn mul(self, rhs: PointMonomial) -> PointMonomial {
        let mut out = self;
        for (a, b) in out.0.iter_mut().zip(rhs.0.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x = x.checked_add(*y).expect("point monomial exponent overflow");
            }
        }
        out
    }
}

/// Sparse integer polynomial over [`PointVar`]s, zero terms never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointPolynomial {
    terms: BTreeMap<PointMonomial, i64>,
}

impl PointPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, PointMonomial::one())
    }

    pub fn monomial(coefficient: i64, monomial: PointMonomial) -> Self {
        let mut p = Self::zero();
        p.add_term(coefficient, monomial);
        p
    }

    /// Builds a polynomial from `(coefficient, [variables...])` pairs.
    pub fn from_products(terms: &[(i64, &[PointVar])]) -> Self {
        let mut p = Self::zero();
        for (c, vars) in terms {
            let m = vars
                .iter()
                .fold(PointMonomial::one(), |acc, &v| acc * PointMonomial::var(v));
            p.add_term(*c, m);
        }
        p
    }

    pub fn add_term(&mut self, coefficient: i64, monomial: PointMonomial) {
        if coefficient == 0 {
            return;
        }
        let entry = self.terms.entry(monomial).or_insert(0);
        *entry = entry
            .checked_add(coefficient)
            .expect("point polynomial coefficient overflow");
        if *entry == 0 {
            self.terms.remove(&monomial);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PointMonomial, i64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn pow(&self, exponent: u32) -> Self {
        (0..exponent).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Evaluates with `value(point, kind)` supplying each variable.
    pub fn evaluate(&self, value: impl Fn(u8, VarKind) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, &c)| {
                let mut t = c as f64;
                for point in 1..=MAX_POINTS as u8 {
                    for kind in VarKind::ALL {
                        let e = m.exponents(point)[kind as usize];
                        if e > 0 {
                            t *= value(point, kind).powi(e as i32);
                        }
                    }
                }
                t
            })
            .sum()
    }
}

impl Mul for &PointPolynomial {
    type Output = PointPolynomial;

    fn mul(self, rhs: &PointPolynomial) -> PointPolynomial {
        let mut out = PointPolynomial::zero();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &rhs.terms {
                let c = ca
                    .checked_mul(cb)
                    .expect("point polynomial coefficient overflow");
                out.add_term(c, *ma * *mb);
            }
        }
        out
    }
}

impl Neg for PointPolynomial {
    type Output = PointPolynomial;

    fn neg(mut self) -> PointPolynomial {
        for c in self.terms.values_mut() {
            *c = -*c;
        }
        self
    }
}

impl fmt::Display for PointPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, &c)) in self.terms.iter().enumerate() {
            let sign = if c < 0 { "-" } else { "+" };
            if n == 0 {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mut vars = Vec::new();
            for point in 1..=MAX_POINTS as u8 {
                for kind in VarKind::ALL {
                    let e = m.exponents(point)[kind as usize];
                    match e {
                        0 => {}
                        1 => vars.push(format!("{}{}", kind.symbol(), point)),
                        _ => vars.push(format!("{}{}^{}", kind.symbol(), point, e)),
                    }
                }
            }
            let abs = c.unsigned_abs();
            match (abs, vars.is_empty()) {
                (_, true) => write!(f, "{abs}")?,
                (1, false) => write!(f, "{}", vars.join("*"))?,
                (_, false) => write!(f, "{abs}*{}", vars.join("*"))?,
            }
        }
        Ok(())
    }
}

fn var(point: u8, kind: VarKind) -> Result<PointVar> {
    PointVar::new(point, kind)
}

/// Shape primitive `S(i,j) = X_i Y_j - X_j Y_i`.
pub fn expand_shape_primitive(i: u8, j: u8) -> Result<PointPolynomial> {
    if i >= j {
        return Err(Error::InvalidSpec(format!(
            "shape primitive needs i < j, got ({i},{j})"
        )));
    }
    let (xi, yj) = (var(i, VarKind::X)?, var(j, VarKind::Y)?);
    let (xj, yi) = (var(j, VarKind::X)?, var(i, VarKind::Y)?);
    Ok(PointPolynomial::from_products(&[
        (1, &[xi, yj]),
        (-1, &[xj, yi]),
    ]))
}

/// Color primitive `C(p,q,r)`: the 3x3 determinant with channel rows `(R,G,B)`
/// and point columns `(p,q,r)`, expanded by Leibniz' formula.
pub fn expand_color_primitive(p: u8, q: u8, r: u8) -> Result<PointPolynomial> {
    if !(p < q && q < r) {
        return Err(Error::InvalidSpec(format!(
            "color primitive needs p < q < r, got ({p},{q},{r})"
        )));
    }
    determinant_columns([p, q, r])
}

/// Leibniz expansion for arbitrary (not necessarily ordered) columns.
pub(crate) fn determinant_columns(cols: [u8; 3]) -> Result<PointPolynomial> {
    const PERMS: [([usize; 3], i64); 6] = [
        ([0, 1, 2], 1),
        ([0, 2, 1], -1),
        ([1, 0, 2], -1),
        ([1, 2, 0], 1),
        ([2, 0, 1], 1),
        ([2, 1, 0], -1),
    ];
    let mut out = PointPolynomial::zero();
    for (perm, sign) in PERMS {
        // row R takes column perm[0], row G perm[1], row B perm[2]
        let vars = [
            var(cols[perm[0]], VarKind::R)?,
            var(cols[perm[1]], VarKind::G)?,
            var(cols[perm[2]], VarKind::B)?,
        ];
        let m = vars
            .iter()
            .fold(PointMonomial::one(), |acc, &v| acc * PointMonomial::var(v));
        out.add_term(sign, m);
    }
    Ok(out)
}
