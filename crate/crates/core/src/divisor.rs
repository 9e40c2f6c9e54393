//! Torus-invariant divisors as coefficient vectors over the rays of a fan,
//! and everything numeric about them: Cartier data, wall functionals,
//! nef/ample/big/pseudo-effective tests, numerical classes, discrepancy
//! comparisons along birational contractions, and singularity criteria.

use crate::error::Error;
use crate::exact::mat::QMat;
use crate::exact::polyhedron::{Ineq, Polyhedron};
use crate::fan::{ray_to_rat, Fan, Wall};
use crate::num::{Int, Rat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Coefficients d_rho, aligned with the fan's ray order.
pub type Divisor = Vec<Rat>;

pub fn canonical_divisor(fan: &Fan) -> Divisor {
    vec![-Rat::one(); fan.rays.len()]
}

pub fn zero_divisor(fan: &Fan) -> Divisor {
    vec![Rat::zero(); fan.rays.len()]
}

pub fn add(a: &[Rat], b: &[Rat]) -> Divisor {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> Divisor {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rat], by: &Rat) -> Divisor {
    a.iter().map(|x| x * by).collect()
}

/// Per-cone linear functionals m_sigma with <m_sigma, v_rho> = -d_rho on the
/// rays of sigma. Exists uniquely per cone exactly when the cone is
/// simplicial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportFunction {
    #[serde(with = "crate::num::codec::rat_vec_vec")]
    pub per_cone: Vec<Vec<Rat>>,
}

impl SupportFunction {
    /// phi_D at a point of the support (linear on each cone).
    pub fn eval(&self, fan: &Fan, point: &[Rat]) -> Rat {
        let cone = fan
            .find_cone(point)
            .expect("support function evaluated outside the fan support");
        dot_q(&self.per_cone[cone], point)
    }
}

fn dot_q(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).fold(Rat::zero(), |s, v| s + v)
}

fn dot_qi(a: &[Rat], b: &[Int]) -> Rat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * Rat::from_integer(y.clone()))
        .fold(Rat::zero(), |s, v| s + v)
}

pub fn support_function(fan: &Fan, d: &[Rat]) -> Result<SupportFunction, Error> {
    assert_eq!(d.len(), fan.rays.len());
    let mut per_cone = Vec::with_capacity(fan.max_cones.len());
    for cone in &fan.max_cones {
        let mat = fan.cone_ray_matrix(cone);
        if mat.rank() != cone.len() {
            return Err(Error::NotCartier(cone.clone()));
        }
        let rhs: Vec<Rat> = cone.iter().map(|&i| -d[i].clone()).collect();
        let (m, kernel) = mat
            .solve(&rhs)
            .ok_or_else(|| Error::NotCartier(cone.clone()))?;
        if !kernel.is_empty() && cone.len() == fan.rank {
            return Err(Error::NotCartier(cone.clone()));
        }
        per_cone.push(m);
    }
    Ok(SupportFunction { per_cone })
}

/// The linear functional D -> <m_sigma_a(D), v_b> + d_b attached to a wall;
/// it computes the intersection number against the wall curve up to a fixed
/// positive factor, and evaluates through the wall relation as
/// (sum_rho c_rho d_rho) / c_b.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallFunctional {
    pub wall: Wall,
    #[serde(with = "crate::num::codec::rat_str")]
    pub denom: Rat,
}

impl WallFunctional {
    pub fn new(_fan: &Fan, wall: &Wall) -> WallFunctional {
        let c_b = wall.relation[wall.extra.1].clone();
        WallFunctional {
            wall: wall.clone(),
            denom: Rat::from_integer(c_b),
        }
    }

    pub fn eval(&self, d: &[Rat]) -> Rat {
        dot_qi(d, &self.wall.relation) / &self.denom
    }
}

pub fn wall_functionals(fan: &Fan) -> Vec<WallFunctional> {
    fan.walls().iter().map(|w| WallFunctional::new(fan, w)).collect()
}

pub fn is_nef(fan: &Fan, d: &[Rat]) -> bool {
    wall_functionals(fan).iter().all(|f| !f.eval(d).is_negative())
}

pub fn is_ample(fan: &Fan, d: &[Rat]) -> bool {
    if fan.rank == 0 {
        return true;
    }
    wall_functionals(fan).iter().all(|f| f.eval(d).is_positive())
}

/// Independent nef route: the support function is convex iff every Cartier
/// datum m_sigma satisfies all section inequalities, i.e. lies in P_D.
pub fn is_nef_convexity_oracle(fan: &Fan, d: &[Rat]) -> Result<bool, Error> {
    let sf = support_function(fan, d)?;
    for m in &sf.per_cone {
        for (rho, ray) in fan.rays.iter().enumerate() {
            if dot_qi(m, ray) < -d[rho].clone() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// P_D = { m : <m, v_rho> >= -d_rho }. Pseudo-effective iff nonempty; big
/// iff full-dimensional.
pub fn section_polytope(fan: &Fan, d: &[Rat]) -> Polyhedron {
    let ineqs = fan
        .rays
        .iter()
        .zip(d)
        .map(|(ray, c)| Ineq::new(ray_to_rat(ray), -c.clone()))
        .collect();
    Polyhedron::new(fan.rank, ineqs)
}

pub fn is_pseudoeffective(fan: &Fan, d: &[Rat]) -> bool {
    !section_polytope(fan, d).is_empty()
}

pub fn is_big(fan: &Fan, d: &[Rat]) -> bool {
    section_polytope(fan, d).affine_dim() == fan.rank as isize
}

/// Canonical coordinates of a divisor class in N^1 = R^rays / im(M).
/// The image subspace gets its unique RREF basis; the class is the
/// reduction of d at the non-pivot coordinates.
pub fn numerical_class(fan: &Fan, d: &[Rat]) -> Vec<Rat> {
    let (basis, pivots) = class_reduction_data(fan);
    let mut rep = d.to_vec();
    for (b, &p) in basis.iter().zip(&pivots) {
        let f = rep[p].clone();
        if f.is_zero() {
            continue;
        }
        for (x, bv) in rep.iter_mut().zip(b) {
            *x -= &f * bv;
        }
    }
    (0..d.len()).filter(|i| !pivots.contains(i)).map(|i| rep[i].clone()).collect()
}

fn class_reduction_data(fan: &Fan) -> (Vec<Vec<Rat>>, Vec<usize>) {
    // columns of the ray matrix span im(M) inside R^rays
    let cols: Vec<Vec<Rat>> = (0..fan.rank)
        .map(|j| {
            fan.rays
                .iter()
                .map(|r| Rat::from_integer(r[j].clone()))
                .collect()
        })
        .collect();
    if cols.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mut m = QMat::from_rows(cols);
    let pivots = m.rref();
    let basis: Vec<Vec<Rat>> = (0..pivots.len()).map(|i| m.row(i).to_vec()).collect();
    (basis, pivots)
}

/// Ray indices whose coordinate divisors project to the canonical basis of
/// N^1 (the non-pivot coordinates of the class reduction).
pub fn class_basis_rays(fan: &Fan) -> Vec<usize> {
    let (_, pivots) = class_reduction_data(fan);
    (0..fan.rays.len()).filter(|i| !pivots.contains(i)).collect()
}

/// Witness of R-linear equivalence: m with d2 = d + <m, v_rho>.
pub fn linear_equivalence_witness(fan: &Fan, d: &[Rat], d2: &[Rat]) -> Option<Vec<Rat>> {
    let mat = QMat::from_int_rows(&fan.rays);
    let rhs: Vec<Rat> = d2.iter().zip(d).map(|(a, b)| a - b).collect();
    mat.solve(&rhs).map(|(m, _)| m)
}

/// Translate of a divisor by the principal divisor div(chi^m).
pub fn add_principal(fan: &Fan, d: &[Rat], m: &[Rat]) -> Divisor {
    fan.rays
        .iter()
        .zip(d)
        .map(|(ray, c)| c + dot_q(m, &ray_to_rat(ray)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSingularity {
    Klt,
    Lc,
    NotCertified,
}

/// Coefficient test for boundaries: in [0,1] certifies lc, in [0,1) klt.
pub fn pair_singularity(coeffs: &[Rat]) -> Result<PairSingularity, Error> {
    if coeffs.iter().any(|c| c.is_negative()) {
        return Err(Error::input("boundary has a negative coefficient"));
    }
    let one = Rat::one();
    if coeffs.iter().all(|c| *c < one) {
        Ok(PairSingularity::Klt)
    } else if coeffs.iter().all(|c| *c <= one) {
        Ok(PairSingularity::Lc)
    } else {
        Ok(PairSingularity::NotCertified)
    }
}

/// Terminality of a simplicial fan: for each maximal cone, the only lattice
/// points on or below the affine hyperplane through the primitive
/// generators are 0 and the generators themselves. The scan runs over the
/// bounding box of the simplex.
pub fn is_terminal(fan: &Fan) -> bool {
    for cone in &fan.max_cones {
        let rays: Vec<&Vec<Int>> = cone.iter().map(|&i| &fan.rays[i]).collect();
        if rays.is_empty() {
            continue;
        }
        let n = fan.rank;
        let mat = fan.cone_ray_matrix(cone).transpose();
        let mut lo = vec![Int::zero(); n];
        let mut hi = vec![Int::zero(); n];
        for r in &rays {
            for j in 0..n {
                if r[j] < lo[j] {
                    lo[j] = r[j].clone();
                }
                if r[j] > hi[j] {
                    hi[j] = r[j].clone();
                }
            }
        }
        let mut point = lo.clone();
        'scan: loop {
            let is_zero = point.iter().all(|x| x.is_zero());
            let is_generator = rays.iter().any(|r| **r == point);
            if !is_zero && !is_generator {
                let rhs: Vec<Rat> = point.iter().map(|x| Rat::from_integer(x.clone())).collect();
                if let Some((lambda, kernel)) = mat.solve(&rhs) {
                    if kernel.is_empty() {
                        let inside = lambda.iter().all(|l| !l.is_negative());
                        let total: Rat = lambda.iter().fold(Rat::zero(), |s, l| s + l);
                        if inside && total <= Rat::one() {
                            return false;
                        }
                    }
                }
            }
            for j in 0..n {
                point[j] += Int::one();
                if point[j] <= hi[j] {
                    continue 'scan;
                }
                point[j] = lo[j].clone();
            }
            break;
        }
    }
    true
}

/// Pullback of a divisor along a refinement: the refined fan's support
/// function is the original one, so the coefficient at a refined ray w is
/// -phi_D(w).
pub fn pullback_to_refinement(fan: &Fan, d: &[Rat], refined: &Fan) -> Result<Divisor, Error> {
    let sf = support_function(fan, d)?;
    refined
        .rays
        .iter()
        .map(|w| {
            let wq = ray_to_rat(w);
            let cone = fan
                .find_cone(&wq)
                .ok_or_else(|| Error::engine("refined ray outside source support"))?;
            Ok(-dot_q(&sf.per_cone[cone], &wq))
        })
        .collect()
}

/// Pushforward along a birational contraction: the target rays are a subset
/// of the source rays and keep their coefficients.
pub fn pushforward(source: &Fan, d: &[Rat], target: &Fan) -> Result<Divisor, Error> {
    target
        .rays
        .iter()
        .map(|r| {
            source
                .rays
                .iter()
                .position(|s| s == r)
                .map(|i| d[i].clone())
                .ok_or_else(|| Error::engine("target ray missing from source fan"))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PullbackComparison {
    pub refinement: Fan,
    /// p^* D
    #[serde(with = "crate::num::codec::rat_vec")]
    pub pullback_source: Vec<Rat>,
    /// q^* f_* D
    #[serde(with = "crate::num::codec::rat_vec")]
    pub pullback_target: Vec<Rat>,
    /// E = p^* D - q^* f_* D per refinement ray
    #[serde(with = "crate::num::codec::rat_vec")]
    pub excess: Vec<Rat>,
    /// refinement ray indices of the f-exceptional divisors
    pub exceptional_rays: Vec<usize>,
    pub non_positive: bool,
    pub negative: bool,
}

/// Compares p^*D with q^*(f_*D) on a common refinement of the birational
/// contraction f: X -> Y (same lattice, rays(Y) a subset of rays(X)).
pub fn pullback_compare(x: &Fan, y: &Fan, d_on_x: &[Rat]) -> Result<PullbackComparison, Error> {
    if x.rank != y.rank {
        return Err(Error::engine("pullback comparison requires a birational map"));
    }
    let d_on_y = pushforward(x, d_on_x, y)?;
    let (w, _, _) = crate::fan::common_refinement(x, y)?;
    let p_star = pullback_to_refinement(x, d_on_x, &w)?;
    let q_star = pullback_to_refinement(y, &d_on_y, &w)?;
    let excess: Vec<Rat> = p_star.iter().zip(&q_star).map(|(a, b)| a - b).collect();
    let exceptional_rays: Vec<usize> = w
        .rays
        .iter()
        .enumerate()
        .filter(|(_, r)| x.rays.contains(r) && !y.rays.contains(r))
        .map(|(i, _)| i)
        .collect();
    let non_positive = excess.iter().all(|e| !e.is_negative());
    let negative = non_positive && exceptional_rays.iter().all(|&i| excess[i].is_positive());
    Ok(PullbackComparison {
        refinement: w,
        pullback_source: p_star,
        pullback_target: q_star,
        excess,
        exceptional_rays,
        non_positive,
        negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat, rat_int};

    fn p2_fan() -> Fan {
        Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(-1), int(-1)]],
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        )
    }

    fn f1_fan() -> Fan {
        Fan::new(
            2,
            vec![
                vec![int(1), int(0)],
                vec![int(0), int(1)],
                vec![int(-1), int(1)],
                vec![int(0), int(-1)],
            ],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
        )
    }

    fn p1_fan() -> Fan {
        Fan::new(1, vec![vec![int(1)], vec![int(-1)]], vec![vec![0], vec![1]])
    }

    fn div(v: &[i64]) -> Divisor {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn support_function_on_p1() {
        let f = p1_fan();
        let d = vec![rat(3, 2), rat_int(-1)];
        let sf = support_function(&f, &d).unwrap();
        assert_eq!(sf.per_cone[0], vec![rat(-3, 2)]);
        assert_eq!(sf.per_cone[1], vec![rat_int(-1)]);
    }

    #[test]
    fn support_function_of_zero_divisor() {
        let f = p2_fan();
        let sf = support_function(&f, &zero_divisor(&f)).unwrap();
        assert!(sf.per_cone.iter().all(|m| m.iter().all(|x| x.is_zero())));
    }

    #[test]
    fn support_function_anticanonical_p2() {
        let f = p2_fan();
        let d = div(&[1, 1, 1]);
        let sf = support_function(&f, &d).unwrap();
        assert_eq!(sf.per_cone[0], vec![rat_int(-1), rat_int(-1)]);
        // cone {1,2}: rays (0,1), (-1,-1): m = (2,-1)
        assert_eq!(sf.per_cone[1], vec![rat_int(2), rat_int(-1)]);
    }

    #[test]
    fn wall_functional_is_degree_on_p1() {
        let f = p1_fan();
        let fs = wall_functionals(&f);
        assert_eq!(fs.len(), 1);
        let d = vec![rat(3, 2), rat(1, 2)];
        assert_eq!(fs[0].eval(&d), rat_int(2));
    }

    #[test]
    fn wall_functional_matches_cartier_formula() {
        // <m_sigma_a(D), v_b> + d_b computed directly must agree.
        for fan in [p2_fan(), f1_fan()] {
            let d: Divisor = (0..fan.rays.len())
                .map(|i| rat(2 * i as i64 + 1, 3))
                .collect();
            let sf = support_function(&fan, &d).unwrap();
            for w in fan.walls() {
                let func = WallFunctional::new(&fan, &w);
                let (ca, _cb) = w.cones;
                let vb = ray_to_rat(&fan.rays[w.extra.1]);
                let direct = dot_q(&sf.per_cone[ca], &vb) + &d[w.extra.1];
                assert_eq!(func.eval(&d), direct);
            }
        }
    }

    #[test]
    fn principal_divisors_are_numerically_trivial() {
        let f = f1_fan();
        for m in [&[rat_int(1), rat_int(0)][..], &[rat_int(0), rat_int(1)][..]] {
            let d = add_principal(&f, &zero_divisor(&f), m);
            for func in wall_functionals(&f) {
                assert!(func.eval(&d).is_zero());
            }
            assert!(numerical_class(&f, &d).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn e_curve_on_f1_is_negative_on_k() {
        let f = f1_fan();
        let k = canonical_divisor(&f);
        // wall at ray (0,1): relation u1 - u2 + u3 = 0
        let walls = f.walls();
        let e_wall = walls
            .iter()
            .find(|w| w.wall_rays == vec![1])
            .expect("wall at the exceptional ray");
        assert_eq!(e_wall.relation, vec![int(1), int(-1), int(1), int(0)]);
        let func = WallFunctional::new(&f, e_wall);
        assert!(func.eval(&k).is_negative());
        // and E itself is not nef: E.E = -1
        let e = div(&[0, 1, 0, 0]);
        assert_eq!(func.eval(&e), rat_int(-1));
        assert!(!is_nef(&f, &e));
    }

    #[test]
    fn nef_and_ample_on_p2() {
        let f = p2_fan();
        assert!(is_ample(&f, &div(&[1, 0, 0])));
        assert!(is_nef(&f, &div(&[1, 0, 0])));
        let zero = zero_divisor(&f);
        assert!(is_nef(&f, &zero));
        assert!(!is_ample(&f, &zero));
        let minus_k: Divisor = canonical_divisor(&f).iter().map(|x| -x.clone()).collect();
        assert!(is_ample(&f, &minus_k));
    }

    #[test]
    fn section_polytopes_on_p2() {
        let f = p2_fan();
        let d = div(&[1, 1, 1]);
        let p = section_polytope(&f, &d);
        let mut verts = p.vrep().vertices.clone();
        verts.sort();
        assert_eq!(
            verts,
            vec![
                vec![rat_int(-1), rat_int(-1)],
                vec![rat_int(-1), rat_int(2)],
                vec![rat_int(2), rat_int(-1)],
            ]
        );
        assert!(is_big(&f, &d));
        assert!(!is_pseudoeffective(&f, &div(&[-1, 0, 0])));
        let zero = zero_divisor(&f);
        assert!(is_pseudoeffective(&f, &zero));
        assert!(!is_big(&f, &zero));
    }

    #[test]
    fn linear_equivalence_on_p2() {
        let f = p2_fan();
        let d0 = div(&[1, 0, 0]);
        let d1 = div(&[0, 1, 0]);
        let m = linear_equivalence_witness(&f, &d0, &d1).unwrap();
        assert_eq!(m, vec![rat_int(-1), rat_int(1)]);
        assert_eq!(add_principal(&f, &d0, &m), d1);
        // identity case
        let w = linear_equivalence_witness(&f, &d0, &d0).unwrap();
        assert!(w.iter().all(|x| x.is_zero()));
        assert_eq!(numerical_class(&f, &d0), numerical_class(&f, &d1));
    }

    #[test]
    fn ruling_classes_independent_on_p1xp1() {
        let f = Fan::new(
            2,
            vec![
                vec![int(1), int(0)],
                vec![int(0), int(1)],
                vec![int(-1), int(0)],
                vec![int(0), int(-1)],
            ],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
        );
        let fiber1 = numerical_class(&f, &div(&[1, 0, 0, 0]));
        let fiber2 = numerical_class(&f, &div(&[0, 1, 0, 0]));
        let m = QMat::from_rows(vec![fiber1, fiber2]);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn pair_singularity_thresholds() {
        assert_eq!(
            pair_singularity(&[rat(1, 2), rat_int(1)]).unwrap(),
            PairSingularity::Lc
        );
        assert_eq!(pair_singularity(&[]).unwrap(), PairSingularity::Klt);
        assert_eq!(
            pair_singularity(&[rat(1, 2), rat(1, 3)]).unwrap(),
            PairSingularity::Klt
        );
        assert_eq!(
            pair_singularity(&[rat(3, 2)]).unwrap(),
            PairSingularity::NotCertified
        );
        assert!(pair_singularity(&[rat_int(-1)]).is_err());
    }

    #[test]
    fn terminal_surfaces() {
        assert!(is_terminal(&p2_fan()));
        assert!(is_terminal(&f1_fan()));
        let p112 = Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(-1), int(-2)]],
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        );
        assert!(!is_terminal(&p112));
    }

    #[test]
    fn pullback_compare_identity() {
        let f = f1_fan();
        let d = div(&[2, -1, 0, 3]);
        let cmp = pullback_compare(&f, &f, &d).unwrap();
        assert!(cmp.excess.iter().all(|x| x.is_zero()));
        assert!(cmp.non_positive);
        assert!(cmp.negative); // vacuous: no exceptional rays
        assert!(cmp.exceptional_rays.is_empty());
    }

    #[test]
    fn blowdown_discrepancy_is_one() {
        // F1 -> P2 contracting the ray (0,1); K gains discrepancy 1 there.
        let f1 = f1_fan();
        let p2 = Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(-1), int(1)], vec![int(0), int(-1)]],
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        );
        let k = canonical_divisor(&f1);
        let cmp = pullback_compare(&f1, &p2, &k).unwrap();
        assert!(cmp.non_positive);
        assert!(cmp.negative);
        assert_eq!(cmp.exceptional_rays.len(), 1);
        let e_idx = cmp.exceptional_rays[0];
        assert_eq!(cmp.refinement.rays[e_idx], vec![int(0), int(1)]);
        assert_eq!(cmp.excess[e_idx], rat_int(1));
    }

    #[test]
    fn pullback_of_nef_has_zero_excess() {
        let f1 = f1_fan();
        let p2 = Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(-1), int(1)], vec![int(0), int(-1)]],
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        );
        // pull back the hyperplane class of the target to F1
        let h_on_p2 = div(&[1, 0, 0]);
        let h = pullback_to_refinement(&p2, &h_on_p2, &f1).unwrap();
        let cmp = pullback_compare(&f1, &p2, &h).unwrap();
        assert!(cmp.excess.iter().all(|x| x.is_zero()));
        assert!(cmp.non_positive);
        assert!(!cmp.negative); // zero excess on the exceptional ray
    }

    #[test]
    fn nef_oracle_agrees_on_samples() {
        let fans = [p2_fan(), f1_fan()];
        for fan in &fans {
            let mut candidates: Vec<Divisor> = vec![
                canonical_divisor(fan),
                zero_divisor(fan),
            ];
            let pads = [
                vec![1i64, 1, 1, 1],
                vec![2, 0, 1, 0],
                vec![0, 1, 0, 0],
                vec![-1, 2, 0, 1],
            ];
            for p in &pads {
                candidates.push(div(&p[..fan.rays.len()]));
            }
            for d in &candidates {
                assert_eq!(
                    is_nef(fan, d),
                    is_nef_convexity_oracle(fan, d).unwrap(),
                    "nef routes disagree on {d:?}"
                );
            }
        }
    }

    #[test]
    fn ample_implies_nef_and_big() {
        let f = f1_fan();
        // -K on F1 is ample
        let minus_k: Divisor = canonical_divisor(&f).iter().map(|x| -x.clone()).collect();
        assert!(is_ample(&f, &minus_k));
        assert!(is_nef(&f, &minus_k));
        assert!(is_big(&f, &minus_k));
    }
}
