//! The 25 core constructions per derivative order that make up SCDMI50.

use num_rational::Rational64;
use rayon::prelude::*;

use super::core_spec::{
    expand_core, normalization_exponents, ColorFactor, CoreSpec, Order, ShapeFactor,
};
use super::moment_poly::MomentPolynomial;
use crate::error::Result;

/// Number of invariants per derivative order.
pub const INSTANCES_PER_ORDER: usize = 25;

/// One normalized invariant: numerator core polynomial divided by
/// `area^area_exponent * D2^denom_exponent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantSpec {
    pub id: u8,
    pub core: CoreSpec,
    pub numerator: MomentPolynomial,
    pub area_exponent: Rational64,
    pub denom_exponent: Rational64,
}

impl InvariantSpec {
    pub fn from_core(id: u8, core: CoreSpec) -> Result<Self> {
        let numerator = expand_core(&core)?;
        Ok(Self::with_numerator(id, core, numerator))
    }

    fn with_numerator(id: u8, core: CoreSpec, numerator: MomentPolynomial) -> Self {
        let (area_exponent, denom_exponent) = normalization_exponents(&core);
        InvariantSpec {
            id,
            core,
            numerator,
            area_exponent,
            denom_exponent,
        }
    }

    pub fn order(&self) -> Order {
        self.core.order()
    }

    /// `M`, the number of color primitives; odd values flip sign under
    /// orientation-reversing color maps.
    pub fn color_degree(&self) -> u32 {
        self.core.big_m()
    }

    /// Position in the 50-entry feature vector.
    pub fn slot(&self) -> usize {
        self.order().as_u8() as usize * INSTANCES_PER_ORDER + self.id as usize - 1
    }

    /// File name used when dumping polynomials, e.g. `scdmi_k0_3.poly`.
    pub fn file_name(&self) -> String {
        format!("scdmi_k{}_{}.poly", self.order(), self.id)
    }
}

type Row = (&'static [(u8, u8, u32)], [u8; 3]);

// (shape factors (i, j, exponent), color triple); rows 16, 17 and 24 use
// S(1,4) rather than S(4,1), which only flips the sign of those entries.
const ROWS: [Row; INSTANCES_PER_ORDER] = [
    (&[(1, 2, 1), (1, 3, 2)], [1, 2, 3]),
    (&[(1, 2, 1), (1, 3, 3)], [1, 2, 3]),
    (&[(1, 2, 1), (1, 3, 1), (2, 3, 1)], [1, 2, 3]),
    (&[(1, 2, 1), (1, 3, 1), (2, 3, 3)], [1, 2, 3]),
    (&[(1, 2, 2), (1, 3, 2), (2, 3, 1)], [1, 2, 3]),
    (&[(1, 2, 1), (2, 3, 1), (3, 4, 1)], [1, 2, 4]),
    (&[(1, 2, 1), (2, 3, 1), (3, 4, 3)], [1, 2, 4]),
    (&[(1, 2, 1), (2, 3, 1), (3, 4, 3)], [1, 3, 4]),
    (&[(1, 2, 2), (2, 3, 1), (3, 4, 1)], [1, 2, 3]),
    (&[(1, 2, 2), (2, 3, 1), (3, 4, 3)], [1, 2, 4]),
    (&[(1, 2, 2), (2, 3, 1), (3, 4, 3)], [2, 3, 4]),
    (&[(1, 2, 3), (2, 3, 1), (3, 4, 3)], [1, 2, 4]),
    (&[(1, 2, 1), (2, 3, 2), (3, 4, 2)], [1, 2, 3]),
    (&[(1, 2, 1), (2, 3, 2), (3, 4, 2)], [1, 2, 4]),
    (&[(1, 2, 1), (2, 3, 3), (3, 4, 1)], [1, 2, 4]),
    (&[(1, 2, 1), (2, 3, 1), (3, 4, 2), (1, 4, 1)], [1, 3, 4]),
    (&[(1, 2, 2), (2, 3, 1), (3, 4, 3), (1, 4, 1)], [1, 2, 3]),
    (&[(1, 2, 1), (1, 3, 1), (1, 4, 1)], [1, 2, 4]),
    (&[(1, 2, 1), (1, 3, 1), (1, 4, 1), (3, 4, 3)], [1, 2, 4]),
    (&[(1, 2, 1), (1, 3, 2), (1, 4, 1), (3, 4, 2)], [2, 3, 4]),
    (&[(1, 2, 2), (1, 3, 1), (1, 4, 1), (3, 4, 1)], [1, 2, 3]),
    (&[(1, 2, 2), (1, 3, 1), (1, 4, 1), (3, 4, 3)], [1, 2, 3]),
    (&[(1, 2, 2), (1, 3, 1), (1, 4, 1), (3, 4, 3)], [1, 2, 4]),
    (
        &[(1, 2, 1), (2, 3, 1), (3, 4, 2), (1, 4, 1), (2, 4, 1)],
        [1, 2, 4],
    ),
    (
        &[(1, 2, 2), (2, 3, 1), (3, 4, 2), (1, 4, 2), (2, 4, 1)],
        [1, 2, 4],
    ),
];

/// Core of row `id` (1-based) at the given order.
pub fn instance_core(id: u8, order: Order) -> Result<CoreSpec> {
    let (shape, color) = ROWS[id as usize - 1];
    CoreSpec::new(
        shape
            .iter()
            .map(|&(i, j, exponent)| ShapeFactor { i, j, exponent })
            .collect(),
        vec![ColorFactor {
            points: color,
            exponent: 1,
        }],
        order,
    )
}

/// All 50 invariant specs: rows 1..=25 at order 0, then at order 1. The
/// order-1 specs reuse the order-0 numerators since expansion is channel
/// agnostic.
pub fn standard_specs() -> Vec<InvariantSpec> {
    let k0: Vec<InvariantSpec> = (1..=INSTANCES_PER_ORDER as u8)
        .into_par_iter()
        .map(|id| {
            let core = instance_core(id, Order::Zero).expect("table rows are valid");
            InvariantSpec::from_core(id, core).expect("table rows expand")
        })
        .collect();
    let k1: Vec<InvariantSpec> = k0
        .iter()
        .map(|s| {
            InvariantSpec::with_numerator(s.id, s.core.with_order(Order::One), s.numerator.clone())
        })
        .collect();
    k0.into_iter().chain(k1).collect()
}
