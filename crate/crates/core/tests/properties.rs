//! Property tests for the exact kernel and the divisor predicates:
//! randomized inputs, exact assertions.

use morifan::corpus;
use morifan::divisor::{
    add_principal, is_ample, is_big, is_nef, numerical_class, wall_functionals, zero_divisor,
};
use morifan::exact::mat::{hermite_normal_form, ZMat};
use morifan::exact::polyhedron::{fm_feasible, vertex_enumeration, Feasibility, Ineq};
use morifan::exact::QMat;
use morifan::num::{int, rat, Rat};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn small_int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(
        proptest::collection::vec(-9i64..=9, cols..=cols),
        rows..=rows,
    )
}

fn small_ineqs(dim: usize, count: usize) -> impl Strategy<Value = Vec<(Vec<i64>, i64)>> {
    proptest::collection::vec(
        (
            proptest::collection::vec(-5i64..=5, dim..=dim),
            -6i64..=6,
        ),
        1..=count,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermite_transform_is_unimodular(rows in small_int_matrix(3, 3)) {
        let a = ZMat::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect(),
        );
        let (h, u) = hermite_normal_form(&a);
        prop_assert_eq!(u.mat_mul(&a), h.clone());
        prop_assert_eq!(u.det().abs(), int(1));
        // row echelon: zero rows only below nonzero rows, pivots positive
        let mut last_pivot: Option<usize> = None;
        for i in 0..h.rows {
            let pivot = (0..h.cols).find(|&j| !h[(i, j)].is_zero());
            if let Some(p) = pivot {
                if let Some(lp) = last_pivot {
                    prop_assert!(p > lp);
                }
                prop_assert!(h[(i, p)].is_positive());
                last_pivot = Some(p);
            }
        }
    }

    #[test]
    fn feasibility_is_exact(raw in small_ineqs(3, 6)) {
        let ineqs: Vec<Ineq> = raw
            .iter()
            .map(|(n, c)| {
                Ineq::new(
                    n.iter().map(|&x| rat(x, 1)).collect(),
                    rat(*c, 1),
                )
            })
            .collect();
        match fm_feasible(3, &ineqs) {
            Feasibility::Point(x) => {
                for q in &ineqs {
                    prop_assert!(q.satisfied_by(&x));
                }
            }
            Feasibility::Infeasible(y) => {
                // y >= 0, y^T A = 0, y^T b > 0
                prop_assert!(y.iter().all(|v| !v.is_negative()));
                for j in 0..3 {
                    let s: Rat = y
                        .iter()
                        .zip(&ineqs)
                        .map(|(yi, q)| yi * &q.normal[j])
                        .fold(Rat::zero(), |a, v| a + v);
                    prop_assert!(s.is_zero());
                }
                let b: Rat = y
                    .iter()
                    .zip(&ineqs)
                    .map(|(yi, q)| yi * &q.offset)
                    .fold(Rat::zero(), |a, v| a + v);
                prop_assert!(b.is_positive());
            }
        }
    }

    #[test]
    fn vertices_are_tight_on_spanning_subsets(raw in small_ineqs(2, 6)) {
        let mut ineqs: Vec<Ineq> = raw
            .iter()
            .map(|(n, c)| {
                Ineq::new(n.iter().map(|&x| rat(x, 1)).collect(), rat(*c, 1))
            })
            .collect();
        // clamp into a box so the polyhedron is bounded
        for (n, c) in [([1i64, 0], -10i64), ([-1, 0], -10), ([0, 1], -10), ([0, -1], -10)] {
            ineqs.push(Ineq::new(n.iter().map(|&x| rat(x, 1)).collect(), rat(c, 1)));
        }
        let v = vertex_enumeration(2, &ineqs);
        for vert in &v.vertices {
            for q in &ineqs {
                prop_assert!(q.satisfied_by(vert));
            }
            let tight: Vec<Vec<Rat>> = ineqs
                .iter()
                .filter(|q| q.eval(vert).is_zero())
                .map(|q| q.normal.clone())
                .collect();
            prop_assert_eq!(QMat::from_rows(tight).rank(), 2);
        }
    }
}

#[test]
fn divisor_positivity_implications_on_corpus() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    for (name, z) in corpus::slice_corpus() {
        for _ in 0..40 {
            let d: Vec<Rat> = (0..z.fan.rays.len())
                .map(|_| rat(rng.gen_range(-6..=6i64), rng.gen_range(1..=3i64)))
                .collect();
            let ample = is_ample(&z.fan, &d);
            let nef = is_nef(&z.fan, &d);
            if ample {
                assert!(nef, "{name}: ample implies nef");
                assert!(is_big(&z.fan, &d), "{name}: ample implies big");
            }
        }
    }
}

#[test]
fn principal_divisors_vanish_numerically_on_corpus() {
    for (name, z) in corpus::slice_corpus() {
        let n = z.fan.rank;
        for j in 0..n {
            let mut m = vec![Rat::zero(); n];
            m[j] = rat(1, 1);
            let d = add_principal(&z.fan, &zero_divisor(&z.fan), &m);
            for f in wall_functionals(&z.fan) {
                assert!(
                    f.eval(&d).is_zero(),
                    "{name}: wall functional must vanish on div(chi^m)"
                );
            }
            assert!(
                numerical_class(&z.fan, &d).iter().all(|x| x.is_zero()),
                "{name}: class of a principal divisor is zero"
            );
        }
    }
}
