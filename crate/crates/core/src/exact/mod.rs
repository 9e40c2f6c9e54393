//! Exact integer/rational linear algebra and polyhedral primitives.
//! No floating point anywhere; all predicates are decided exactly.

pub mod arrangement;
pub mod mat;
pub mod polyhedron;

pub use arrangement::{
    convex_hull, hull_ineqs, hull_intersection_dim, line_arrangement_2d, polygon_area2,
    region_polygon, Arrangement, Line2, Point2,
};
pub use mat::{
    canonical_span_basis, elementary_divisors, hermite_normal_form, integer_kernel,
    quotient_projection, smith_normal_form, QMat, ZMat,
};
pub use polyhedron::{
    cone_contains, cone_extreme_rays, cone_facets, fm_feasible, fm_project, vertex_enumeration,
    Feasibility, Ineq, Polyhedron, VRep,
};

use crate::error::Error;
use crate::num::{gcd_list, Int};
use num_traits::Zero;

/// Divides a lattice vector by the gcd of its entries.
pub fn primitive(v: &[Int]) -> Result<Vec<Int>, Error> {
    if v.iter().all(|x| x.is_zero()) {
        return Err(Error::ZeroVector);
    }
    let g = gcd_list(v);
    Ok(v.iter().map(|x| x / &g).collect())
}

/// Hermite and Smith data for an integer matrix: U*A = H with U unimodular,
/// plus the nonzero elementary divisors.
pub struct HermiteSmith {
    pub hermite: ZMat,
    pub transform: ZMat,
    pub divisors: Vec<Int>,
}

pub fn hermite_smith(a: &ZMat) -> HermiteSmith {
    let (hermite, transform) = hermite_normal_form(a);
    let divisors = elementary_divisors(a);
    HermiteSmith {
        hermite,
        transform,
        divisors,
    }
}
