//! Symbolic construction of shape-color moment invariants.

mod core_spec;
mod instances;
mod moment_poly;
mod point_poly;

pub use core_spec::{
    denominator_polynomial, expand_core, normalization_exponents, ColorFactor, CoreSpec, Order,
    ShapeFactor,
};
pub use instances::{instance_core, standard_specs, InvariantSpec, INSTANCES_PER_ORDER};
pub use moment_poly::{MomentIndex, MomentPolynomial, MonomialTerm};
pub use point_poly::{
    expand_color_primitive, expand_shape_primitive, PointMonomial, PointPolynomial, PointVar,
    VarKind, MAX_POINTS,
};
