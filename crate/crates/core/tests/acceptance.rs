//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line. Every threshold is exact; there are no tolerances.
//!
//! Run with `cargo test -p morifan --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use morifan::corpus;
use morifan::divisor::{
    canonical_divisor, is_nef, is_nef_convexity_oracle, is_terminal, pair_singularity,
    pullback_compare, Divisor, PairSingularity,
};
use morifan::exact::arrangement::polygon_area2;
use morifan::fan::ToricModel;
use morifan::geography::{auto_slice_param, chamber_decomposition, verify_span_picard};
use morifan::mmp::{run_mmp, verify_output, MmpTrace, Outcome, Strategy};
use morifan::num::{int, rat, Rat};
use morifan::sarkisov::{factorize, FactorizeOptions, LinkType};
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pass(criterion: &str) {
    println!("criterion {criterion}: PASS");
}

fn random_divisor(rng: &mut ChaCha8Rng, rays: usize) -> Divisor {
    (0..rays)
        .map(|_| rat(rng.gen_range(-9..=9i64), rng.gen_range(1..=4i64)))
        .collect()
}

fn mfs_traces_with_distinct_outputs(
    z: &ToricModel,
    d: &[Rat],
    max_seeds: u64,
) -> Vec<MmpTrace> {
    let mut traces: Vec<MmpTrace> = Vec::new();
    for seed in 0..max_seeds {
        let t = run_mmp(z, d, &Strategy::SeededRandom { seed }, 10_000).unwrap();
        if let Outcome::MoriFiberSpace { total, base, .. } = &t.outcome {
            let duplicate = traces.iter().any(|t2| match &t2.outcome {
                Outcome::MoriFiberSpace {
                    total: t2t,
                    base: t2b,
                    ..
                } => t2t.same_model(total) && t2b.same_model(base),
                _ => false,
            });
            if !duplicate {
                traces.push(t);
            }
        }
    }
    traces
}

/// Criterion 1: the classical surface link between F1/P1 and P2/pt is a
/// single link of Type I or III whose divisorial map F1 -> P2 has
/// discrepancy exactly 1 at the exceptional ray.
#[test]
fn criterion_01_surface_link() {
    let z = corpus::hirzebruch(1);
    let k = canonical_divisor(&z.fan);
    let traces = mfs_traces_with_distinct_outputs(&z, &k, 16);
    assert_eq!(traces.len(), 2, "both routes of the K-MMP on F1");
    let chain = factorize(&z, &k, &traces[0], &traces[1], &FactorizeOptions::default()).unwrap();
    assert_eq!(chain.links.len(), 1, "exactly one link");
    let link = &chain.links[0];
    assert!(
        matches!(link.link_type, LinkType::I | LinkType::III),
        "type is I or III, got {:?}",
        link.link_type
    );
    let vm = link
        .p
        .as_ref()
        .or(link.q.as_ref())
        .expect("a vertical divisorial map");
    assert_eq!(vm.source.fan.rays.len(), 4, "source is F1");
    assert_eq!(vm.target.fan.rays.len(), 3, "target is P2");
    let k_src = canonical_divisor(&vm.source.fan);
    let cmp = pullback_compare(&vm.source.fan, &vm.target.fan, &k_src).unwrap();
    assert_eq!(cmp.exceptional_rays.len(), 1);
    assert_eq!(
        cmp.excess[cmp.exceptional_rays[0]],
        Rat::one(),
        "discrepancy exactly 1 at the exceptional ray"
    );
    pass("01 surface-link");
}

/// Criterion 2: the two rulings of P1 x P1 are connected by a single link
/// of Type IVm with R a point and S = T = P1.
#[test]
fn criterion_02_type_ivm() {
    let z = corpus::p1_cross_p1();
    let k = canonical_divisor(&z.fan);
    let traces = mfs_traces_with_distinct_outputs(&z, &k, 32);
    let rulings: Vec<&MmpTrace> = traces
        .iter()
        .filter(|t| match &t.outcome {
            Outcome::MoriFiberSpace { base, .. } => base.rank() == 1,
            _ => false,
        })
        .collect();
    assert_eq!(rulings.len(), 2, "both rulings appear as outputs");
    let chain = factorize(
        &z,
        &k,
        rulings[0],
        rulings[1],
        &FactorizeOptions::default(),
    )
    .unwrap();
    assert_eq!(chain.links.len(), 1);
    let link = &chain.links[0];
    assert_eq!(link.link_type, LinkType::IVm);
    assert_eq!(link.r.rank(), 0, "R is a point");
    assert_eq!(link.s.rank(), 1, "S is P1");
    assert_eq!(link.t.rank(), 1, "T is P1");
    assert_eq!(link.s.fan.rays.len(), 2);
    assert_eq!(link.t.fan.rays.len(), 2);
    pass("02 type-IVm");
}

/// Criterion 3: on the 4-fold S x P1 vs T x P1 (S, T the two small
/// resolutions of the cone over a quadric surface) the chain contains a
/// link of Type IVs whose R is non-simplicial and whose bottom maps are
/// small.
#[test]
fn criterion_03_type_ivs_fixture() {
    let z = corpus::s_cross_p1();
    let mut d = canonical_divisor(&z.fan);
    d[0] += rat(1, 2); // make the flopping class strictly negative
    let mut trace_f = None;
    let mut trace_g = None;
    for seed in 0..32u64 {
        let t = run_mmp(&z, &d, &Strategy::SeededRandom { seed }, 10_000).unwrap();
        if let Outcome::MoriFiberSpace { total, base, .. } = &t.outcome {
            if base.rank() != 3 {
                continue;
            }
            if total.fan.canonical() == z.fan.canonical() {
                trace_f.get_or_insert(t.clone());
            } else {
                trace_g.get_or_insert(t.clone());
            }
        }
        if trace_f.is_some() && trace_g.is_some() {
            break;
        }
    }
    let (tf, tg) = (trace_f.expect("S x P1 route"), trace_g.expect("T x P1 route"));
    let chain = factorize(&z, &d, &tf, &tg, &FactorizeOptions::default()).unwrap();
    let ivs: Vec<_> = chain
        .links
        .iter()
        .filter(|l| l.link_type == LinkType::IVs)
        .collect();
    assert!(!ivs.is_empty(), "at least one Type IVs link");
    for link in &ivs {
        assert!(!link.r.fan.is_simplicial(), "R is not Q-factorial");
        assert_eq!(link.r.rank(), 3);
        assert_eq!(link.s.rank(), 3, "s is small, not fibering");
        assert_eq!(link.t.rank(), 3, "t is small, not fibering");
        assert_eq!(link.s.fan.rays.len(), link.r.fan.rays.len());
        assert_eq!(link.t.fan.rays.len(), link.r.fan.rays.len());
    }
    pass("03 type-IVs-fixture");
}

fn corpus_slices() -> Vec<(String, ToricModel, morifan::geography::GeographySlice)> {
    corpus::slice_corpus()
        .into_iter()
        .map(|(name, z)| {
            let k = canonical_divisor(&z.fan);
            let param = auto_slice_param(&z, &k, 13, 3).unwrap();
            let slice = chamber_decomposition(&z, &param)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            (name.to_string(), z, slice)
        })
        .collect()
}

/// Criterion 4: the relative Picard number of every qualifying adjacent
/// chamber pair equals the dimension drop of the chamber intersection,
/// as exact integers, on every corpus slice.
#[test]
fn criterion_04_picard_formula() {
    let mut pairs = 0;
    for (name, _z, slice) in corpus_slices() {
        let report = verify_span_picard(&slice);
        assert!(
            report.failures.is_empty(),
            "{name}: {:?}",
            report.failures
        );
        pairs += report.checked_pairs;
    }
    assert!(pairs >= 8, "the corpus exercises adjacent pairs, got {pairs}");
    pass("04 picard-formula");
}

/// Criterion 5: every 2-dimensional chamber model is birational and
/// Q-factorial; every interior chamber of smaller dimension fails at
/// least one of the two.
#[test]
fn criterion_05_span_property() {
    for (name, _z, slice) in corpus_slices() {
        for (ci, chamber) in slice.chambers.iter().enumerate() {
            if chamber.dim == 2 {
                assert!(
                    chamber.model.is_birational() && chamber.model.fan.is_simplicial(),
                    "{name}: 2-dim chamber {ci}"
                );
            } else {
                let meets_interior = chamber
                    .edges
                    .iter()
                    .map(|&e| slice.cell_sample(morifan::geography::CellKind::Edge, e))
                    .chain(
                        chamber
                            .points
                            .iter()
                            .map(|&p| slice.cell_sample(morifan::geography::CellKind::Point, p)),
                    )
                    .any(|p| slice.point_interior_of_region(&p));
                if meets_interior {
                    assert!(
                        !(chamber.model.is_birational() && chamber.model.fan.is_simplicial()),
                        "{name}: interior chamber {ci} of dim {} is birational and Q-factorial",
                        chamber.dim
                    );
                }
            }
        }
    }
    pass("05 span-property");
}

/// Criterion 6: exact partition of E(B): the chamber areas sum to the
/// area of E(B) and E(B) is convex.
#[test]
fn criterion_06_partition() {
    for (name, _z, slice) in corpus_slices() {
        if slice.eff_dim < 2 {
            continue;
        }
        let region2 = polygon_area2(&slice.eff_polygon);
        let total2: Rat = slice
            .two_dim_chambers()
            .iter()
            .map(|&c| slice.chamber_area2(c))
            .fold(Rat::zero(), |s, v| s + v);
        assert_eq!(total2, region2, "{name}: chamber areas partition E(B)");
        // convexity: the polygon is its own convex hull
        let hull = morifan::exact::arrangement::convex_hull(&slice.eff_polygon);
        assert_eq!(
            polygon_area2(&hull),
            region2,
            "{name}: E(B) is convex"
        );
    }
    pass("06 partition");
}

/// Criterion 7: 200 seeded random rational divisors across the corpus:
/// the MMP terminates and the full verification report passes, including
/// the flip sign contract.
#[test]
fn criterion_07_mmp_soundness() {
    let members = corpus::slice_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut runs = 0;
    let mut flips = 0;
    while runs < 200 {
        for (name, z) in &members {
            if runs >= 200 {
                break;
            }
            let d = random_divisor(&mut rng, z.fan.rays.len());
            let strategy = if runs % 2 == 0 {
                Strategy::DeterministicLex
            } else {
                Strategy::SeededRandom { seed: runs as u64 }
            };
            let trace = run_mmp(z, &d, &strategy, 10_000)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            flips += trace
                .steps
                .iter()
                .filter(|s| s.flipped.is_some())
                .count();
            let report = verify_output(z, &d, &trace);
            assert!(
                report.pass,
                "{name}: {:?}",
                report
                    .clauses
                    .iter()
                    .filter(|c| !c.pass)
                    .collect::<Vec<_>>()
            );
            runs += 1;
        }
    }
    assert_eq!(runs, 200);
    assert!(flips > 0, "the corpus exercises flips ({flips} seen)");
    pass("07 mmp-soundness");
}

/// Criterion 8: no link of Type IVs is ever emitted in dimension at most
/// three, across the corpus and 50 random seeds.
#[test]
fn criterion_08_dimension_bound() {
    let members = corpus::slice_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut attempts = 0u64;
    let mut chains = 0;
    let mut links_seen = 0;
    while attempts < 50 {
        for (name, z) in &members {
            if attempts >= 50 {
                break;
            }
            assert!(z.rank() <= 3);
            attempts += 1;
            // a random non-pseudo-effective divisor biased toward -K
            let mut d = canonical_divisor(&z.fan);
            for c in d.iter_mut() {
                *c += rat(rng.gen_range(-2..=2i64), rng.gen_range(2..=4i64));
            }
            let traces = mfs_traces_with_distinct_outputs(z, &d, 12);
            if traces.len() < 2 {
                continue;
            }
            let chain = match factorize(
                z,
                &d,
                &traces[0],
                &traces[1],
                &FactorizeOptions {
                    seed: attempts,
                    retry_limit: 16,
                },
            ) {
                Ok(c) => c,
                Err(morifan::Error::Genericity(msg)) => {
                    panic!("{name}: genericity exhausted: {msg}")
                }
                Err(e) => panic!("{name}: {e}"),
            };
            chains += 1;
            links_seen += chain.links.len();
            for link in &chain.links {
                assert_ne!(
                    link.link_type,
                    LinkType::IVs,
                    "{name}: IVs emitted in dimension {}",
                    z.rank()
                );
            }
        }
    }
    assert!(chains >= 10, "enough chains built: {chains}");
    assert!(links_seen >= 10, "enough links checked: {links_seen}");
    pass("08 dimension-bound");
}

/// Criterion 9: the wall-functional nef test agrees with the
/// support-function convexity test on 500 random exact divisors.
#[test]
fn criterion_09_nef_oracle() {
    let members = corpus::slice_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 500 {
        for (name, z) in &members {
            if checked >= 500 {
                break;
            }
            let d = random_divisor(&mut rng, z.fan.rays.len());
            let via_walls = is_nef(&z.fan, &d);
            let via_convexity = is_nef_convexity_oracle(&z.fan, &d).unwrap();
            assert_eq!(via_walls, via_convexity, "{name}: nef routes disagree on {d:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, 500);
    pass("09 nef-oracle");
}

/// Criterion 10: the coefficient criteria for pair singularities on
/// randomized boundaries, and terminality across the corpus.
#[test]
fn criterion_10_singularities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let coeffs: Vec<Rat> = (0..rng.gen_range(1..6usize))
            .map(|_| rat(rng.gen_range(0..=6i64), 4))
            .collect();
        let got = pair_singularity(&coeffs).unwrap();
        let one = Rat::one();
        let expected = if coeffs.iter().all(|c| *c < one) {
            PairSingularity::Klt
        } else if coeffs.iter().all(|c| *c <= one) {
            PairSingularity::Lc
        } else {
            PairSingularity::NotCertified
        };
        assert_eq!(got, expected);
    }
    assert!(pair_singularity(&[rat(-1, 2)]).is_err());
    // terminality: the weighted plane fails, every smooth member passes
    assert!(!is_terminal(&corpus::weighted_p112().fan));
    for (name, z) in corpus::slice_corpus() {
        let smooth = z.fan.max_cones.iter().all(|cone| {
            let rays: Vec<Vec<morifan::num::Int>> =
                cone.iter().map(|&i| z.fan.rays[i].clone()).collect();
            let m = morifan::exact::mat::ZMat::from_rows(rays);
            m.det().abs() == int(1)
        });
        if smooth {
            assert!(is_terminal(&z.fan), "{name} is smooth hence terminal");
        }
    }
    pass("10 singularities");
}
