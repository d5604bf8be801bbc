//! Core specifications and their expansion into moment polynomials.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Rational64;

use super::moment_poly::{MomentIndex, MomentPolynomial};
use super::point_poly::{
    expand_color_primitive, expand_shape_primitive, PointPolynomial, MAX_POINTS,
};
use crate::error::{Error, Result};

/// Derivative order of the channel set an invariant is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    /// Raw channels, mean-subtracted.
    Zero,
    /// Radial first-derivative channels, no mean subtraction.
    One,
}

impl Order {
    pub fn as_u8(self) -> u8 {
        match self {
            Order::Zero => 0,
            Order::One => 1,
        }
    }

    pub fn from_u8(k: u8) -> Result<Self> {
        match k {
            0 => Ok(Order::Zero),
            1 => Ok(Order::One),
            _ => Err(Error::InvalidSpec(format!(
                "derivative order {k} unsupported"
            ))),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// `S(i,j)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeFactor {
    pub i: u8,
    pub j: u8,
    pub exponent: u32,
}

/// `C(p,q,r)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColorFactor {
    pub points: [u8; 3],
    pub exponent: u32,
}

/// A product of shape primitives and color (or shape-color) primitives over
/// points `1..=w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoreSpec {
    shape: Vec<ShapeFactor>,
    color: Vec<ColorFactor>,
    order: Order,
}

impl CoreSpec {
    pub fn new(shape: Vec<ShapeFactor>, color: Vec<ColorFactor>, order: Order) -> Result<Self> {
        for f in &shape {
            if f.i >= f.j {
                return Err(Error::InvalidSpec(format!(
                    "shape factor ({},{}) needs i < j",
                    f.i, f.j
                )));
            }
            if f.exponent == 0 {
                return Err(Error::InvalidSpec("zero shape exponent".into()));
            }
        }
        for f in &color {
            let [p, q, r] = f.points;
            if !(p < q && q < r) {
                return Err(Error::InvalidSpec(format!(
                    "color factor ({p},{q},{r}) needs p < q < r"
                )));
            }
            if f.exponent == 0 {
                return Err(Error::InvalidSpec("zero color exponent".into()));
            }
        }
        let spec = CoreSpec {
            shape,
            color,
            order,
        };
        let points = spec.all_points();
        if points.first().is_some_and(|&p| p == 0)
            || points.last().is_some_and(|&p| p as usize > MAX_POINTS)
        {
            return Err(Error::InvalidSpec(format!(
                "point indices must lie in 1..={MAX_POINTS}"
            )));
        }
        // points must be exactly 1..=w so every integration variable is used
        if points.iter().enumerate().any(|(n, &p)| p as usize != n + 1) {
            return Err(Error::InvalidSpec(format!(
                "points {points:?} are not contiguous from 1"
            )));
        }
        Ok(spec)
    }

    /// `I(sCore(1,0))`: no factors, a single integration point.
    pub fn area(order: Order) -> Self {
        CoreSpec {
            shape: Vec::new(),
            color: Vec::new(),
            order,
        }
    }

    /// The quadratic color core `C(1,2,3)^2` used in every denominator.
    pub fn denominator(order: Order) -> Self {
        CoreSpec {
            shape: Vec::new(),
            color: vec![ColorFactor {
                points: [1, 2, 3],
                exponent: 2,
            }],
            order,
        }
    }

    pub fn shape_factors(&self) -> &[ShapeFactor] {
        &self.shape
    }

    pub fn color_factors(&self) -> &[ColorFactor] {
        &self.color
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn with_order(&self, order: Order) -> Self {
        CoreSpec {
            order,
            ..self.clone()
        }
    }

    fn shape_points(&self) -> BTreeSet<u8> {
        self.shape.iter().flat_map(|f| [f.i, f.j]).collect()
    }

    fn color_points(&self) -> BTreeSet<u8> {
        self.color.iter().flat_map(|f| f.points).collect()
    }

    fn all_points(&self) -> Vec<u8> {
        self.shape_points()
            .union(&self.color_points())
            .copied()
            .collect()
    }

    /// `n`: distinct points used by shape primitives.
    pub fn n(&self) -> usize {
        self.shape_points().len()
    }

    /// `m`: number of shape primitives, counted with exponent.
    pub fn m(&self) -> u32 {
        self.shape.iter().map(|f| f.exponent).sum()
    }

    /// `N`: distinct points used by color primitives.
    pub fn big_n(&self) -> usize {
        self.color_points().len()
    }

    /// `M`: number of color primitives, counted with exponent.
    pub fn big_m(&self) -> u32 {
        self.color.iter().map(|f| f.exponent).sum()
    }

    /// `d_i`: how often point `i` occurs across shape primitives.
    pub fn shape_multiplicity(&self, point: u8) -> u32 {
        self.shape
            .iter()
            .filter(|f| f.i == point || f.j == point)
            .map(|f| f.exponent)
            .sum()
    }

    /// `D_i`: how often point `i` occurs across color primitives.
    pub fn color_multiplicity(&self, point: u8) -> u32 {
        self.color
            .iter()
            .filter(|f| f.points.contains(&point))
            .map(|f| f.exponent)
            .sum()
    }

    /// Number of integration points: `max(n, N)`, at least one.
    pub fn integration_points(&self) -> usize {
        self.n().max(self.big_n()).max(1)
    }

    /// The integrand as a polynomial over point variables.
    pub fn integrand(&self) -> Result<PointPolynomial> {
        let mut out = PointPolynomial::one();
        for f in &self.shape {
            out = &out * &expand_shape_primitive(f.i, f.j)?.pow(f.exponent);
        }
        for f in &self.color {
            let [p, q, r] = f.points;
            out = &out * &expand_color_primitive(p, q, r)?.pow(f.exponent);
        }
        Ok(out)
    }
}

/// Expands a core into a moment polynomial by integrating each monomial over
/// independent points: the per-point exponents of `(X, Y, R, G, B)` become one
/// moment index per point.
pub fn expand_core(spec: &CoreSpec) -> Result<MomentPolynomial> {
    let integrand = spec.integrand()?;
    let w = spec.integration_points() as u8;
    let terms = integrand.terms().map(|(monomial, c)| {
        let factors = (1..=w)
            .map(|point| MomentIndex::from_array(monomial.exponents(point)))
            .collect();
        (c, factors)
    });
    Ok(MomentPolynomial::from_terms(terms))
}

/// Expanded `C(1,2,3)^2` over three points.
pub fn denominator_polynomial() -> MomentPolynomial {
    expand_core(&CoreSpec::denominator(Order::Zero)).expect("denominator core is valid")
}

/// Area exponent `max(n,N) + m - 3M/2` and denominator exponent `M/2`.
pub fn normalization_exponents(spec: &CoreSpec) -> (Rational64, Rational64) {
    let w = spec.integration_points() as i64;
    let m = spec.m() as i64;
    let big_m = spec.big_m() as i64;
    let e = Rational64::from_integer(w + m) - Rational64::new(3 * big_m, 2);
    (e, Rational64::new(big_m, 2))
}
