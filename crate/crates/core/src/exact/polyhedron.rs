//! Exact polyhedral primitives: feasibility with Farkas certificates
//! (Fourier-Motzkin with multiplier tracking), projection, and ray/vertex
//! enumeration by the double-description method.

use crate::num::{primitive_integer_direction, Int, Rat};
use crate::exact::mat::QMat;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// One halfspace `<normal, x> >= offset`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ineq {
    #[serde(with = "crate::num::codec::rat_vec")]
    pub normal: Vec<Rat>,
    #[serde(with = "crate::num::codec::rat_str")]
    pub offset: Rat,
}

impl Ineq {
    pub fn new(normal: Vec<Rat>, offset: Rat) -> Self {
        Ineq { normal, offset }
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        self.normal
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .fold(-self.offset.clone(), |acc, v| acc + v)
    }

    pub fn satisfied_by(&self, x: &[Rat]) -> bool {
        !self.eval(x).is_negative()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polyhedron {
    pub dim: usize,
    pub ineqs: Vec<Ineq>,
    #[serde(skip)]
    vrep: OnceLock<VRep>,
}

impl PartialEq for Polyhedron {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.ineqs == other.ineqs
    }
}
impl Eq for Polyhedron {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VRep {
    #[serde(with = "crate::num::codec::rat_vec_vec")]
    pub vertices: Vec<Vec<Rat>>,
    #[serde(with = "crate::num::codec::int_vec_vec")]
    pub rays: Vec<Vec<Int>>,
    #[serde(with = "crate::num::codec::int_vec_vec")]
    pub lines: Vec<Vec<Int>>,
}

/// Outcome of an exact feasibility test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    /// A point satisfying every inequality.
    Point(Vec<Rat>),
    /// Farkas witness y >= 0 over the input rows with y^T A = 0, y^T b > 0.
    Infeasible(Vec<Rat>),
}

impl Polyhedron {
    pub fn new(dim: usize, ineqs: Vec<Ineq>) -> Self {
        assert!(ineqs.iter().all(|q| q.normal.len() == dim));
        Polyhedron {
            dim,
            ineqs,
            vrep: OnceLock::new(),
        }
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.ineqs.iter().all(|q| q.satisfied_by(x))
    }

    pub fn feasibility(&self) -> Feasibility {
        fm_feasible(self.dim, &self.ineqs)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.feasibility(), Feasibility::Infeasible(_))
    }

    /// Exact V-representation, computed once and cached.
    pub fn vrep(&self) -> &VRep {
        self.vrep.get_or_init(|| vertex_enumeration(self.dim, &self.ineqs))
    }

    /// Dimension of the affine hull, -1 for the empty set.
    pub fn affine_dim(&self) -> isize {
        let v = self.vrep();
        if v.vertices.is_empty() {
            return -1;
        }
        let base = &v.vertices[0];
        let mut dirs: Vec<Vec<Rat>> = v
            .vertices
            .iter()
            .skip(1)
            .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        for r in v.rays.iter().chain(v.lines.iter()) {
            dirs.push(r.iter().map(|x| Rat::from_integer(x.clone())).collect());
        }
        if dirs.is_empty() {
            return 0;
        }
        QMat::from_rows(dirs).rank() as isize
    }
}

#[derive(Clone, Debug)]
struct FmRow {
    coeffs: Vec<Rat>,
    offset: Rat,
    mult: Vec<Rat>,
}

impl FmRow {
    /// Scale by the positive factor making the normal part primitive
    /// integer (or the offset, for constant rows), so that parallel rows
    /// become directly comparable and collapse in deduplication.
    fn normalize(&mut self) {
        let part: &[Rat] = if self.coeffs.iter().any(|c| !c.is_zero()) {
            &self.coeffs
        } else {
            std::slice::from_ref(&self.offset)
        };
        if let Some(prim) = primitive_integer_direction(part) {
            // primitive_integer_direction keeps orientation: positive scale
            let idx = part.iter().position(|x| !x.is_zero()).unwrap();
            let scale = Rat::from_integer(prim[idx].clone()) / &part[idx];
            for c in self.coeffs.iter_mut() {
                *c *= &scale;
            }
            self.offset *= &scale;
            for m in self.mult.iter_mut() {
                *m *= &scale;
            }
        }
    }
}

fn combine(pos: &FmRow, neg: &FmRow, var: usize) -> FmRow {
    let a = pos.coeffs[var].clone();
    let b = -neg.coeffs[var].clone();
    debug_assert!(a.is_positive() && b.is_positive());
    let coeffs = pos
        .coeffs
        .iter()
        .zip(&neg.coeffs)
        .map(|(p, n)| &b * p + &a * n)
        .collect();
    let offset = &b * &pos.offset + &a * &neg.offset;
    let mult = pos
        .mult
        .iter()
        .zip(&neg.mult)
        .map(|(p, n)| &b * p + &a * n)
        .collect();
    let mut row = FmRow { coeffs, offset, mult };
    row.normalize();
    row
}

/// One Fourier-Motzkin stage: rows alive just before `var` was eliminated.
struct FmStage {
    var: usize,
    rows: Vec<FmRow>,
}

enum FmOutcome {
    Stages(Vec<FmStage>),
    Contradiction(Vec<Rat>),
}

/// Eliminates the variables in `drop_vars` (processed back to front); rows
/// surviving at the end involve only the remaining variables.
fn fm_run(dim: usize, ineqs: &[Ineq], keep: usize) -> (FmOutcome, Vec<FmRow>) {
    let m = ineqs.len();
    let mut rows: Vec<FmRow> = ineqs
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut mult = vec![Rat::zero(); m];
            mult[i] = Rat::from_integer(Int::from(1));
            let mut row = FmRow {
                coeffs: q.normal.clone(),
                offset: q.offset.clone(),
                mult,
            };
            row.normalize();
            row
        })
        .collect();
    let mut stages = Vec::new();
    for var in (keep..dim).rev() {
        // check for contradictions among constant rows as we go
        if let Some(bad) = rows
            .iter()
            .find(|r| r.coeffs.iter().all(|c| c.is_zero()) && r.offset.is_positive())
        {
            return (FmOutcome::Contradiction(bad.mult.clone()), Vec::new());
        }
        let stage_rows = rows.clone();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut zero = Vec::new();
        for r in rows {
            match r.coeffs[var].cmp(&Rat::zero()) {
                std::cmp::Ordering::Greater => pos.push(r),
                std::cmp::Ordering::Less => neg.push(r),
                std::cmp::Ordering::Equal => zero.push(r),
            }
        }
        let mut next = zero;
        for p in &pos {
            for n in &neg {
                next.push(combine(p, n, var));
            }
        }
        dedupe_rows(&mut next);
        rows = next;
        stages.push(FmStage { var, rows: stage_rows });
    }
    if let Some(bad) = rows
        .iter()
        .find(|r| r.coeffs.iter().all(|c| c.is_zero()) && r.offset.is_positive())
    {
        return (FmOutcome::Contradiction(bad.mult.clone()), Vec::new());
    }
    (FmOutcome::Stages(stages), rows)
}

/// Drops trivially-true rows and keeps, per distinct normal, only the
/// strongest offset.
fn dedupe_rows(rows: &mut Vec<FmRow>) {
    let mut kept: Vec<FmRow> = Vec::new();
    'next: for row in rows.drain(..) {
        if row.coeffs.iter().all(|c| c.is_zero()) && !row.offset.is_positive() {
            continue;
        }
        for k in kept.iter_mut() {
            if k.coeffs == row.coeffs {
                if row.offset > k.offset {
                    *k = row;
                }
                continue 'next;
            }
        }
        kept.push(row);
    }
    *rows = kept;
}

/// Exact feasibility: an interior-or-boundary point, or a Farkas witness.
pub fn fm_feasible(dim: usize, ineqs: &[Ineq]) -> Feasibility {
    let (outcome, _) = fm_run(dim, ineqs, 0);
    let stages = match outcome {
        FmOutcome::Contradiction(mult) => return Feasibility::Infeasible(mult),
        FmOutcome::Stages(stages) => stages,
    };
    let mut x = vec![Rat::zero(); dim];
    for stage in stages.iter().rev() {
        let var = stage.var;
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for row in &stage.rows {
            let c = &row.coeffs[var];
            if c.is_zero() {
                continue;
            }
            // value of the other (already assigned, higher-index vars are set,
            // lower-index still zero but their coefficients only appear in
            // earlier stages) terms
            let rest: Rat = row
                .coeffs
                .iter()
                .zip(&x)
                .enumerate()
                .filter(|(j, _)| *j != var)
                .map(|(_, (a, b))| a * b)
                .fold(Rat::zero(), |acc, v| acc + v);
            let bound = (&row.offset - rest) / c;
            if c.is_positive() {
                if lo.as_ref().is_none_or(|l| bound > *l) {
                    lo = Some(bound);
                }
            } else if hi.as_ref().is_none_or(|h| bound < *h) {
                hi = Some(bound);
            }
        }
        x[var] = match (lo, hi) {
            (Some(l), Some(h)) => {
                debug_assert!(l <= h, "back-substitution bounds crossed");
                (l + h) / Rat::from_integer(Int::from(2))
            }
            (Some(l), None) => l + Rat::from_integer(Int::from(1)),
            (None, Some(h)) => h - Rat::from_integer(Int::from(1)),
            (None, None) => Rat::zero(),
        };
    }
    debug_assert!(ineqs.iter().all(|q| q.satisfied_by(&x)));
    Feasibility::Point(x)
}

/// Exact projection onto the first `keep` coordinates.
pub fn fm_project(dim: usize, ineqs: &[Ineq], keep: usize) -> Vec<Ineq> {
    let (outcome, rows) = fm_run(dim, ineqs, keep);
    match outcome {
        FmOutcome::Contradiction(_) => {
            // empty projection, encoded as 0 >= 1
            vec![Ineq::new(
                vec![Rat::zero(); keep],
                Rat::from_integer(Int::from(1)),
            )]
        }
        FmOutcome::Stages(_) => rows
            .into_iter()
            .map(|r| Ineq::new(r.coeffs[..keep].to_vec(), r.offset))
            .collect(),
    }
}

const MAX_DD_ROWS: usize = 128;

type ZeroSet = u128;

#[derive(Clone)]
struct DdRay {
    vec: Vec<Int>,
    zero: ZeroSet,
}

fn dot_int(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).map(|(x, y)| x * y).fold(Int::zero(), |s, v| s + v)
}

/// Extreme rays and lineality basis of the cone { x : <row, x> >= 0 } given
/// rational constraint rows. Output is primitive, deduplicated, and sorted,
/// so it is canonical for the input set regardless of row order.
pub fn cone_extreme_rays(rows_in: &[Vec<Rat>], dim: usize) -> (Vec<Vec<Int>>, Vec<Vec<Int>>) {
    if dim == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut rows: Vec<Vec<Int>> = rows_in
        .iter()
        .filter_map(|r| primitive_integer_direction(r))
        .collect();
    rows.sort();
    rows.dedup();
    assert!(rows.len() <= MAX_DD_ROWS, "double description row budget exceeded");
    if rows.is_empty() {
        let lines = (0..dim)
            .map(|i| {
                let mut e = vec![Int::zero(); dim];
                e[i] = Int::from(1);
                e
            })
            .collect();
        return (Vec::new(), lines);
    }

    // Lineality: kernel of the row matrix. DD then runs in a pointed
    // complement spanned by unit vectors.
    let a = QMat::from_int_rows(&rows);
    let lineality: Vec<Vec<Int>> = a
        .kernel_basis()
        .iter()
        .map(|v| primitive_integer_direction(v).expect("kernel basis vector nonzero"))
        .collect();
    let rank = dim - lineality.len();
    if rank == 0 {
        return (Vec::new(), lineality);
    }

    // Greedily pick unit coordinates completing the lineality to a basis.
    let mut span: Vec<Vec<Rat>> = lineality
        .iter()
        .map(|v| v.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    let mut complement: Vec<usize> = Vec::new();
    for j in 0..dim {
        if complement.len() == rank {
            break;
        }
        let mut e = vec![Rat::zero(); dim];
        e[j] = Rat::from_integer(Int::from(1));
        let mut probe = span.clone();
        probe.push(e.clone());
        if QMat::from_rows(probe.clone()).rank() > span.len() {
            span.push(e);
            complement.push(j);
        }
    }
    debug_assert_eq!(complement.len(), rank);

    // Constraints restricted to the complement coordinates.
    let m: Vec<Vec<Int>> = rows
        .iter()
        .map(|r| complement.iter().map(|&j| r[j].clone()).collect())
        .collect();

    // Initial simplicial cone from the first lex-independent subset.
    let mut chosen: Vec<usize> = Vec::new();
    {
        let mut acc: Vec<Vec<Rat>> = Vec::new();
        for (i, row) in m.iter().enumerate() {
            if chosen.len() == rank {
                break;
            }
            let rq: Vec<Rat> = row.iter().map(|x| Rat::from_integer(x.clone())).collect();
            let mut probe = acc.clone();
            probe.push(rq.clone());
            if QMat::from_rows(probe).rank() > acc.len() {
                acc.push(rq);
                chosen.push(i);
            }
        }
    }
    debug_assert_eq!(chosen.len(), rank, "restricted constraints must have full rank");

    let m0 = QMat::from_rows(
        chosen
            .iter()
            .map(|&i| m[i].iter().map(|x| Rat::from_integer(x.clone())).collect())
            .collect(),
    );
    let b0 = m0.inverse().expect("initial subset is invertible");
    let mut rays: Vec<DdRay> = (0..rank)
        .map(|j| {
            let col = b0.col(j);
            let vec = primitive_integer_direction(&col).expect("basis column nonzero");
            DdRay { vec, zero: 0 }
        })
        .collect();

    let recompute_zero = |ray: &mut DdRay, processed: &[usize], m: &[Vec<Int>]| {
        ray.zero = 0;
        for &ri in processed {
            if dot_int(&m[ri], &ray.vec).is_zero() {
                ray.zero |= 1u128 << ri;
            }
        }
    };

    let mut processed: Vec<usize> = chosen.clone();
    for r in rays.iter_mut() {
        recompute_zero(r, &processed, &m);
    }

    for h in 0..m.len() {
        if chosen.contains(&h) {
            continue;
        }
        let vals: Vec<Int> = rays.iter().map(|r| dot_int(&m[h], &r.vec)).collect();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut zero = Vec::new();
        for (i, v) in vals.iter().enumerate() {
            if v.is_zero() {
                zero.push(i);
            } else if v.is_positive() {
                pos.push(i);
            } else {
                neg.push(i);
            }
        }
        processed.push(h);
        if neg.is_empty() {
            for r in rays.iter_mut() {
                recompute_zero(r, &processed, &m);
            }
            continue;
        }
        let mut new_rays: Vec<DdRay> = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zero & rays[n].zero;
                let adjacent = !rays.iter().enumerate().any(|(k, r)| {
                    k != p && k != n && (r.zero & common) == common
                });
                if !adjacent {
                    continue;
                }
                let vp = &vals[p];
                let vn = &vals[n];
                let vec: Vec<Rat> = rays[p]
                    .vec
                    .iter()
                    .zip(&rays[n].vec)
                    .map(|(a, b)| Rat::from_integer(vp * b - vn * a))
                    .collect();
                let vec = primitive_integer_direction(&vec).expect("new DD ray nonzero");
                if new_rays.iter().any(|r| r.vec == vec) {
                    continue;
                }
                let mut ray = DdRay { vec, zero: 0 };
                recompute_zero(&mut ray, &processed, &m);
                new_rays.push(ray);
            }
        }
        let keep: Vec<usize> = pos.into_iter().chain(zero).collect();
        let mut next: Vec<DdRay> = keep.into_iter().map(|i| rays[i].clone()).collect();
        for r in next.iter_mut() {
            recompute_zero(r, &processed, &m);
        }
        next.extend(new_rays);
        rays = next;
    }

    // Map back to ambient coordinates and canonicalize.
    let mut out: Vec<Vec<Int>> = rays
        .iter()
        .map(|r| {
            let mut x = vec![Rat::zero(); dim];
            for (k, &j) in complement.iter().enumerate() {
                x[j] = Rat::from_integer(r.vec[k].clone());
            }
            primitive_integer_direction(&x).expect("ray nonzero")
        })
        .collect();
    out.sort();
    out.dedup();
    debug_assert!(out.iter().all(|r| {
        rows.iter().all(|row| !dot_int(row, r).is_negative())
    }));
    (out, lineality)
}

/// V-representation of { x : A x >= b } by double description on the
/// homogenization. For an empty polyhedron the vertex list is empty.
pub fn vertex_enumeration(dim: usize, ineqs: &[Ineq]) -> VRep {
    if dim == 0 {
        let feasible = ineqs.iter().all(|q| !q.offset.is_positive());
        return VRep {
            vertices: if feasible { vec![vec![]] } else { vec![] },
            rays: vec![],
            lines: vec![],
        };
    }
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(ineqs.len() + 1);
    for q in ineqs {
        let mut row = Vec::with_capacity(dim + 1);
        row.push(-q.offset.clone());
        row.extend(q.normal.iter().cloned());
        rows.push(row);
    }
    let mut t_row = vec![Rat::zero(); dim + 1];
    t_row[0] = Rat::from_integer(Int::from(1));
    rows.push(t_row);
    let (rays, lines) = cone_extreme_rays(&rows, dim + 1);
    let mut vertices = Vec::new();
    let mut rec_rays = Vec::new();
    for r in rays {
        let t = &r[0];
        if t.is_positive() {
            let tq = Rat::from_integer(t.clone());
            vertices.push(
                r[1..]
                    .iter()
                    .map(|x| Rat::from_integer(x.clone()) / &tq)
                    .collect(),
            );
        } else if r[1..].iter().any(|x| !x.is_zero()) {
            rec_rays.push(r[1..].to_vec());
        }
    }
    let out_lines: Vec<Vec<Int>> = lines
        .iter()
        .map(|l| {
            debug_assert!(l[0].is_zero(), "line with nonzero homogenizing coordinate");
            l[1..].to_vec()
        })
        .collect();
    VRep {
        vertices,
        rays: rec_rays,
        lines: out_lines,
    }
}

/// Generators of the dual cone { w : <w, r> >= 0 for all given rays },
/// reported as a plain list (lineality expanded to +/- pairs). Testing
/// membership of x in cone(rays) is then a sign check against this list.
pub fn cone_facets(rays: &[Vec<Int>], dim: usize) -> Vec<Vec<Int>> {
    let rows: Vec<Vec<Rat>> = rays
        .iter()
        .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    let (extreme, lines) = cone_extreme_rays(&rows, dim);
    let mut out = extreme;
    for l in lines {
        out.push(l.iter().map(|x| -x.clone()).collect());
        out.push(l);
    }
    out.sort();
    out
}

/// Is `target` a nonnegative combination of `gens`? Decided exactly by
/// feasibility of the multiplier system.
pub fn in_cone_hull(gens: &[Vec<Int>], target: &[Int]) -> bool {
    let k = gens.len();
    let dim = target.len();
    if target.iter().all(|x| x.is_zero()) {
        return true;
    }
    if k == 0 {
        return false;
    }
    let mut ineqs: Vec<Ineq> = Vec::with_capacity(2 * dim + k);
    for coord in 0..dim {
        let row: Vec<Rat> = gens
            .iter()
            .map(|g| Rat::from_integer(g[coord].clone()))
            .collect();
        let t = Rat::from_integer(target[coord].clone());
        ineqs.push(Ineq::new(row.clone(), t.clone()));
        ineqs.push(Ineq::new(row.iter().map(|x| -x.clone()).collect(), -t));
    }
    for i in 0..k {
        let mut row = vec![Rat::zero(); k];
        row[i] = Rat::from_integer(Int::from(1));
        ineqs.push(Ineq::new(row, Rat::zero()));
    }
    matches!(fm_feasible(k, &ineqs), Feasibility::Point(_))
}

/// Filters a generating set down to the extreme generators of the cone it
/// spans (primitive, deduplicated, sorted).
pub fn extreme_generators(gens: &[Vec<Int>]) -> Vec<Vec<Int>> {
    let mut prim: Vec<Vec<Int>> = gens
        .iter()
        .filter(|g| g.iter().any(|x| !x.is_zero()))
        .map(|g| {
            let q: Vec<Rat> = g.iter().map(|x| Rat::from_integer(x.clone())).collect();
            primitive_integer_direction(&q).expect("nonzero generator")
        })
        .collect();
    prim.sort();
    prim.dedup();
    let extreme: Vec<Vec<Int>> = prim
        .iter()
        .filter(|g| {
            let others: Vec<Vec<Int>> = prim.iter().filter(|h| h != g).cloned().collect();
            !in_cone_hull(&others, g)
        })
        .cloned()
        .collect();
    extreme
}

/// Membership in cone(rays), via the dual description.
pub fn cone_contains(facets: &[Vec<Int>], point: &[Rat]) -> bool {
    facets.iter().all(|f| {
        !f.iter()
            .zip(point)
            .map(|(a, b)| Rat::from_integer(a.clone()) * b)
            .fold(Rat::zero(), |s, v| s + v)
            .is_negative()
    })
}
