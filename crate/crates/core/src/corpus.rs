//! Standard fans used across the test suites, benchmarks, and examples.

use crate::fan::{Fan, ToricModel};
use crate::num::{int, Int};

fn model(fan: Fan) -> ToricModel {
    let n = fan.rank;
    ToricModel::birational(fan, n)
}

pub fn projective_plane() -> ToricModel {
    model(Fan::new(
        2,
        vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(-1), int(-1)]],
        vec![vec![0, 1], vec![1, 2], vec![0, 2]],
    ))
}

pub fn projective_line() -> ToricModel {
    model(Fan::new(
        1,
        vec![vec![int(1)], vec![int(-1)]],
        vec![vec![0], vec![1]],
    ))
}

/// Hirzebruch surface F_a: rays (1,0), (0,1), (-1,a), (0,-1).
pub fn hirzebruch(a: i64) -> ToricModel {
    model(Fan::new(
        2,
        vec![
            vec![int(1), int(0)],
            vec![int(0), int(1)],
            vec![int(-1), int(a)],
            vec![int(0), int(-1)],
        ],
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
    ))
}

pub fn p1_cross_p1() -> ToricModel {
    model(Fan::new(
        2,
        vec![
            vec![int(1), int(0)],
            vec![int(0), int(1)],
            vec![int(-1), int(0)],
            vec![int(0), int(-1)],
        ],
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
    ))
}

/// The blowup of the projective plane in two torus-fixed points.
pub fn blowup_p2_two_points() -> ToricModel {
    model(Fan::new(
        2,
        vec![
            vec![int(1), int(0)],
            vec![int(0), int(1)],
            vec![int(-1), int(-1)],
            vec![int(1), int(1)],
            vec![int(-1), int(0)],
        ],
        vec![vec![0, 3], vec![1, 3], vec![1, 4], vec![2, 4], vec![0, 2]],
    ))
}

/// Weighted projective plane P(1,1,2); the cone over (0,1), (-1,-2) carries
/// a canonical, non-terminal surface singularity.
pub fn weighted_p112() -> ToricModel {
    model(Fan::new(
        2,
        vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(-1), int(-2)]],
        vec![vec![0, 1], vec![1, 2], vec![0, 2]],
    ))
}

pub fn p1_cubed() -> ToricModel {
    let mut rays = Vec::new();
    for i in 0..3usize {
        for sign in [1i64, -1] {
            let mut r = vec![int(0); 3];
            r[i] = int(sign);
            rays.push(r);
        }
    }
    // rays: 0:+x 1:-x 2:+y 3:-y 4:+z 5:-z
    let mut cones = Vec::new();
    for x in 0..2usize {
        for y in 0..2usize {
            for z in 0..2usize {
                cones.push(vec![x, 2 + y, 4 + z]);
            }
        }
    }
    model(Fan::new(3, rays, cones))
}

/// One of the two small resolutions of the projective cone over a quadric
/// surface: a complete simplicial projective 3-fold with a flopping curve.
pub fn quadric_cone_resolution() -> ToricModel {
    model(Fan::new(
        3,
        vec![
            vec![int(1), int(1), int(1)],
            vec![int(-1), int(1), int(1)],
            vec![int(1), int(-1), int(1)],
            vec![int(-1), int(-1), int(1)],
            vec![int(0), int(0), int(-1)],
        ],
        vec![
            vec![0, 1, 3],
            vec![0, 2, 3],
            vec![0, 1, 4],
            vec![0, 2, 4],
            vec![1, 3, 4],
            vec![2, 3, 4],
        ],
    ))
}

/// The 4-fold S x P^1 with S the quadric-cone resolution: flopping it in
/// the S-factor and contracting the P^1-fiber realizes the two Mori fiber
/// spaces of the split Type IV link over the non-Q-factorial cone.
pub fn s_cross_p1() -> ToricModel {
    let base = quadric_cone_resolution();
    let mut rays: Vec<Vec<Int>> = base
        .fan
        .rays
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(int(0));
            r
        })
        .collect();
    rays.push(vec![int(0), int(0), int(0), int(1)]);
    rays.push(vec![int(0), int(0), int(0), int(-1)]);
    let plus = rays.len() - 2;
    let minus = rays.len() - 1;
    let mut cones = Vec::new();
    for c in &base.fan.max_cones {
        for p in [plus, minus] {
            let mut cc = c.clone();
            cc.push(p);
            cc.sort_unstable();
            cones.push(cc);
        }
    }
    model(Fan::new(4, rays, cones))
}

/// The slice corpus: every member is complete, simplicial, and projective.
pub fn slice_corpus() -> Vec<(&'static str, ToricModel)> {
    vec![
        ("P2", projective_plane()),
        ("F1", hirzebruch(1)),
        ("F2", hirzebruch(2)),
        ("Bl2P2", blowup_p2_two_points()),
        ("P1xP1", p1_cross_p1()),
        ("P112", weighted_p112()),
        ("P1xP1xP1", p1_cubed()),
        ("QuadricFlop3fold", quadric_cone_resolution()),
    ]
}
