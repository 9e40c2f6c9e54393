//! Exact subdivision of a bounded convex region by rational lines, plus
//! the 2D convex-geometry helpers (hulls, areas, degenerate H-reps) used
//! by the chamber machinery.

use crate::num::{Int, Rat};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::polyhedron::{Ineq, Polyhedron};

pub type Point2 = Vec<Rat>;

/// A line a*x + b*y = c, stored primitive with canonical sign.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Line2 {
    #[serde(with = "crate::num::codec::int_vec")]
    pub coeffs: Vec<Int>,
}

impl Line2 {
    /// Normalizes (a, b, c); returns None for a degenerate "line" with a = b = 0.
    pub fn new(a: Rat, b: Rat, c: Rat) -> Option<Line2> {
        if a.is_zero() && b.is_zero() {
            return None;
        }
        let mut v =
            crate::num::primitive_integer_direction(&[a, b, c]).expect("nonzero line data");
        let lead = if !v[0].is_zero() { v[0].clone() } else { v[1].clone() };
        if lead.is_negative() {
            for x in v.iter_mut() {
                *x = -x.clone();
            }
        }
        Some(Line2 { coeffs: v })
    }

    pub fn eval(&self, p: &[Rat]) -> Rat {
        Rat::from_integer(self.coeffs[0].clone()) * &p[0]
            + Rat::from_integer(self.coeffs[1].clone()) * &p[1]
            - Rat::from_integer(self.coeffs[2].clone())
    }
}

/// Twice the signed area of a polygon (positive when counterclockwise).
pub fn polygon_area2(verts: &[Point2]) -> Rat {
    let n = verts.len();
    let mut acc = Rat::zero();
    for i in 0..n {
        let p = &verts[i];
        let q = &verts[(i + 1) % n];
        acc += &p[0] * &q[1] - &q[0] * &p[1];
    }
    acc
}

fn cross(o: &Point2, a: &Point2, b: &Point2) -> Rat {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Convex hull, counterclockwise. Degenerate inputs give the two extreme
/// points of a segment or a single point.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2
            && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive()
        {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2
            && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive()
        {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    if lower.len() + upper.len() < 3 {
        // collinear input
        let mut seg = vec![pts[0].clone(), pts[pts.len() - 1].clone()];
        seg.dedup();
        return seg;
    }
    lower.extend(upper);
    lower
}

/// H-representation of the convex hull of the given points, including the
/// degenerate segment and single-point cases.
pub fn hull_ineqs(points: &[Point2]) -> Vec<Ineq> {
    let hull = convex_hull(points);
    match hull.len() {
        0 => vec![Ineq::new(vec![Rat::zero(), Rat::zero()], Rat::from_integer(Int::from(1)))],
        1 => {
            let p = &hull[0];
            vec![
                Ineq::new(vec![Rat::from_integer(Int::from(1)), Rat::zero()], p[0].clone()),
                Ineq::new(vec![Rat::from_integer(Int::from(-1)), Rat::zero()], -p[0].clone()),
                Ineq::new(vec![Rat::zero(), Rat::from_integer(Int::from(1))], p[1].clone()),
                Ineq::new(vec![Rat::zero(), Rat::from_integer(Int::from(-1))], -p[1].clone()),
            ]
        }
        2 => {
            let (p, q) = (&hull[0], &hull[1]);
            let d = vec![&q[0] - &p[0], &q[1] - &p[1]];
            let n = vec![-d[1].clone(), d[0].clone()];
            let c = &n[0] * &p[0] + &n[1] * &p[1];
            let mut out = vec![
                Ineq::new(n.clone(), c.clone()),
                Ineq::new(vec![-n[0].clone(), -n[1].clone()], -c),
            ];
            // clamp to the segment along the direction d
            let lo = &d[0] * &p[0] + &d[1] * &p[1];
            let hi = &d[0] * &q[0] + &d[1] * &q[1];
            out.push(Ineq::new(d.clone(), lo));
            out.push(Ineq::new(vec![-d[0].clone(), -d[1].clone()], -hi));
            out
        }
        _ => {
            let n = hull.len();
            (0..n)
                .map(|i| {
                    let p = &hull[i];
                    let q = &hull[(i + 1) % n];
                    let d = vec![&q[0] - &p[0], &q[1] - &p[1]];
                    let normal = vec![-d[1].clone(), d[0].clone()];
                    let c = &normal[0] * &p[0] + &normal[1] * &p[1];
                    Ineq::new(normal, c)
                })
                .collect()
        }
    }
}

/// Dimension of the intersection of two convex hulls (-1 when disjoint).
pub fn hull_intersection_dim(a: &[Point2], b: &[Point2]) -> isize {
    let mut ineqs = hull_ineqs(a);
    ineqs.extend(hull_ineqs(b));
    Polyhedron::new(2, ineqs).affine_dim()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArrEdge {
    pub ends: (usize, usize),
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArrCell {
    pub verts: Vec<usize>,
    #[serde(with = "crate::num::codec::rat_vec")]
    pub sample: Point2,
    #[serde(with = "crate::num::codec::rat_str")]
    pub area: Rat,
}

/// Planar subdivision of a bounded convex region by a set of lines.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Arrangement {
    #[serde(with = "crate::num::codec::rat_vec_vec")]
    pub vertices: Vec<Point2>,
    pub edges: Vec<ArrEdge>,
    pub cells: Vec<ArrCell>,
}

impl Arrangement {
    pub fn total_area2(&self) -> Rat {
        self.cells.iter().fold(Rat::zero(), |acc, c| acc + &c.area + &c.area)
    }
}

/// Ordered, deduplicated vertex loop of a convex region polyhedron
/// (counterclockwise). None when the region is empty or not 2-dimensional.
pub fn region_polygon(region: &Polyhedron) -> Option<Vec<Point2>> {
    assert_eq!(region.dim, 2);
    let v = region.vrep();
    assert!(
        v.rays.is_empty() && v.lines.is_empty(),
        "region must be bounded"
    );
    if v.vertices.is_empty() {
        return None;
    }
    let hull = convex_hull(&v.vertices);
    if hull.len() >= 3 {
        Some(hull)
    } else {
        None
    }
}

fn split_chain(verts: &[Point2], line: &Line2) -> (Vec<Point2>, Vec<Point2>) {
    let n = verts.len();
    let vals: Vec<Rat> = verts.iter().map(|p| line.eval(p)).collect();
    let mut pos: Vec<Point2> = Vec::new();
    let mut neg: Vec<Point2> = Vec::new();
    for i in 0..n {
        let (p, sp) = (&verts[i], &vals[i]);
        let (q, sq) = (&verts[(i + 1) % n], &vals[(i + 1) % n]);
        if !sp.is_negative() {
            pos.push(p.clone());
        }
        if !sp.is_positive() {
            neg.push(p.clone());
        }
        if (sp.is_positive() && sq.is_negative()) || (sp.is_negative() && sq.is_positive()) {
            let t = sp / (sp - sq);
            let x = vec![&p[0] + &t * (&q[0] - &p[0]), &p[1] + &t * (&q[1] - &p[1])];
            pos.push(x.clone());
            neg.push(x);
        }
    }
    (dedupe_loop(pos), dedupe_loop(neg))
}

fn dedupe_loop(mut verts: Vec<Point2>) -> Vec<Point2> {
    verts.dedup();
    if verts.len() > 1 && verts.first() == verts.last() {
        verts.pop();
    }
    verts
}

/// Exact arrangement of `lines` within the bounded convex `region`.
/// Coincident lines are deduplicated; every 2-cell carries its exact
/// rational vertex average as an interior sample point.
pub fn line_arrangement_2d(lines: &[Line2], region: &Polyhedron) -> Arrangement {
    let Some(start) = region_polygon(region) else {
        return Arrangement {
            vertices: Vec::new(),
            edges: Vec::new(),
            cells: Vec::new(),
        };
    };
    let mut dedup: Vec<Line2> = lines.to_vec();
    dedup.sort();
    dedup.dedup();

    let mut polys: Vec<Vec<Point2>> = vec![start];
    for line in &dedup {
        let mut next = Vec::new();
        for poly in polys {
            let (pos, neg) = split_chain(&poly, line);
            let pos_ok = pos.len() >= 3 && polygon_area2(&pos).is_positive();
            let neg_ok = neg.len() >= 3 && polygon_area2(&neg).is_positive();
            match (pos_ok, neg_ok) {
                (true, true) => {
                    next.push(pos);
                    next.push(neg);
                }
                _ => next.push(poly_of(pos, neg)),
            }
        }
        polys = next;
    }

    // Index vertices and assemble incidence.
    let mut vertices: Vec<Point2> = Vec::new();
    let vertex_id = |p: &Point2, vertices: &mut Vec<Point2>| -> usize {
        match vertices.iter().position(|q| q == p) {
            Some(i) => i,
            None => {
                vertices.push(p.clone());
                vertices.len() - 1
            }
        }
    };
    let mut cells: Vec<ArrCell> = Vec::new();
    let mut edge_map: Vec<((usize, usize), Vec<usize>)> = Vec::new();
    for poly in &polys {
        let ids: Vec<usize> = poly.iter().map(|p| vertex_id(p, &mut vertices)).collect();
        let cell_id = cells.len();
        let area2 = polygon_area2(poly);
        debug_assert!(area2.is_positive());
        let inv_n = Rat::new(Int::from(1), Int::from(poly.len() as i64));
        let sample = vec![
            poly.iter().map(|p| p[0].clone()).fold(Rat::zero(), |a, v| a + v) * &inv_n,
            poly.iter().map(|p| p[1].clone()).fold(Rat::zero(), |a, v| a + v) * &inv_n,
        ];
        for k in 0..ids.len() {
            let a = ids[k];
            let b = ids[(k + 1) % ids.len()];
            let key = (a.min(b), a.max(b));
            match edge_map.iter_mut().find(|(k2, _)| *k2 == key) {
                Some((_, cs)) => cs.push(cell_id),
                None => edge_map.push((key, vec![cell_id])),
            }
        }
        cells.push(ArrCell {
            verts: ids,
            sample,
            area: area2 / Rat::from_integer(Int::from(2)),
        });
    }
    let edges = edge_map
        .into_iter()
        .map(|(ends, cells)| ArrEdge { ends, cells })
        .collect();
    Arrangement {
        vertices,
        edges,
        cells,
    }
}

fn poly_of(pos: Vec<Point2>, neg: Vec<Point2>) -> Vec<Point2> {
    if pos.len() >= 3 && polygon_area2(&pos).is_positive() {
        pos
    } else {
        neg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat_int, rat};

    fn square() -> Polyhedron {
        let e = |n: &[i64], c: i64| {
            Ineq::new(n.iter().map(|&x| rat_int(x)).collect(), rat_int(c))
        };
        Polyhedron::new(
            2,
            vec![e(&[1, 0], -1), e(&[-1, 0], -1), e(&[0, 1], -1), e(&[0, -1], -1)],
        )
    }

    #[test]
    fn zero_lines_single_cell() {
        let arr = line_arrangement_2d(&[], &square());
        assert_eq!(arr.cells.len(), 1);
        assert_eq!(arr.total_area2(), rat_int(8));
    }

    #[test]
    fn one_line_two_cells() {
        let line = Line2::new(rat_int(1), rat_int(0), rat_int(0)).unwrap();
        let arr = line_arrangement_2d(&[line], &square());
        assert_eq!(arr.cells.len(), 2);
        let interior: Vec<&ArrEdge> = arr.edges.iter().filter(|e| e.cells.len() == 2).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(arr.total_area2(), rat_int(8));
    }

    #[test]
    fn crossing_lines_four_cells() {
        let l1 = Line2::new(rat_int(1), rat_int(0), rat_int(0)).unwrap();
        let l2 = Line2::new(rat_int(0), rat_int(1), rat_int(0)).unwrap();
        let arr = line_arrangement_2d(&[l1, l2], &square());
        assert_eq!(arr.cells.len(), 4);
        let interior = arr.edges.iter().filter(|e| e.cells.len() == 2).count();
        assert_eq!(interior, 4);
        // one interior vertex: the origin, incident to all four cells
        let origin = vec![rat_int(0), rat_int(0)];
        assert!(arr.vertices.contains(&origin));
        assert_eq!(arr.total_area2(), rat_int(8));
        for c in &arr.cells {
            assert_eq!(c.area, rat_int(1));
        }
    }

    #[test]
    fn duplicate_lines_deduplicated() {
        let l1 = Line2::new(rat_int(1), rat_int(0), rat_int(0)).unwrap();
        let l2 = Line2::new(rat_int(-2), rat_int(0), rat_int(0)).unwrap();
        assert_eq!(l1, l2);
        let arr = line_arrangement_2d(&[l1, l2], &square());
        assert_eq!(arr.cells.len(), 2);
    }

    #[test]
    fn line_missing_region() {
        let line = Line2::new(rat_int(1), rat_int(0), rat_int(5)).unwrap();
        let arr = line_arrangement_2d(&[line], &square());
        assert_eq!(arr.cells.len(), 1);
    }

    #[test]
    fn hull_degenerate_cases() {
        let p = vec![rat_int(1), rat(1, 2)];
        assert_eq!(convex_hull(&[p.clone(), p.clone()]), vec![p.clone()]);
        let q = vec![rat_int(3), rat(1, 2)];
        let mid = vec![rat_int(2), rat(1, 2)];
        let hull = convex_hull(&[p.clone(), mid, q.clone()]);
        assert_eq!(hull, vec![p.clone(), q.clone()]);
        assert_eq!(hull_intersection_dim(&[p.clone(), q.clone()], &[p.clone()]), 0);
        assert_eq!(
            hull_intersection_dim(&[p.clone(), q.clone()], &[p.clone(), q.clone()]),
            1
        );
    }

    #[test]
    fn sample_points_interior() {
        let l1 = Line2::new(rat_int(1), rat_int(-1), rat_int(0)).unwrap();
        let arr = line_arrangement_2d(&[l1], &square());
        for cell in &arr.cells {
            let poly: Vec<Point2> = cell.verts.iter().map(|&i| arr.vertices[i].clone()).collect();
            let ineqs = hull_ineqs(&poly);
            for q in &ineqs {
                assert!(q.eval(&cell.sample).is_positive(), "sample strictly interior");
            }
        }
    }
}
