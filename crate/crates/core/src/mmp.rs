//! The D-MMP engine: extremal rays of the Mori cone, contraction
//! classification (fiber / divisorial / small), toric flips by circuit
//! retriangulation, the MMP loop, ample models of pseudo-effective
//! divisors, and an independent verifier for finished runs.

use crate::divisor::{is_nef, pullback_compare, pushforward, section_polytope, Divisor};
use crate::error::Error;
use crate::exact::mat::quotient_transform;
use crate::exact::polyhedron::{cone_extreme_rays, extreme_generators, in_cone_hull};
use crate::fan::{induced_lattice_map, ray_to_rat, Fan, FanMorphism, ToricModel, Wall};
use crate::num::{Int, Rat};
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// An extremal ray of the Mori cone, carried by the primitive relation
/// vector of its wall curves and one representative wall.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalRay {
    #[serde(with = "crate::num::codec::int_vec")]
    pub class: Vec<Int>,
    pub wall: Wall,
}

pub fn class_pairing(class: &[Int], d: &[Rat]) -> Rat {
    class
        .iter()
        .zip(d)
        .map(|(c, x)| Rat::from_integer(c.clone()) * x)
        .fold(Rat::zero(), |s, v| s + v)
}

/// Extremal rays of the Mori cone of a complete simplicial projective
/// model: wall classes filtered down to the generators not lying in the
/// cone of the others.
pub fn mori_cone(model: &ToricModel) -> Vec<ExtremalRay> {
    let walls = model.fan.walls();
    let mut classes: Vec<(Vec<Int>, Wall)> = Vec::new();
    for w in walls {
        if !classes.iter().any(|(c, _)| *c == w.relation) {
            classes.push((w.relation.clone(), w));
        }
    }
    classes.sort_by(|a, b| a.0.cmp(&b.0));
    let vectors: Vec<Vec<Int>> = classes.iter().map(|(c, _)| c.clone()).collect();
    classes
        .into_iter()
        .enumerate()
        .filter(|(i, _)| {
            let others: Vec<Vec<Int>> = vectors
                .iter()
                .enumerate()
                .filter(|(j, _)| j != i)
                .map(|(_, v)| v.clone())
                .collect();
            !in_cone_hull(&others, &vectors[*i])
        })
        .map(|(_, (class, wall))| ExtremalRay { class, wall })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    Divisorial {
        #[serde(with = "crate::num::codec::int_vec")]
        removed_ray: Vec<Int>,
    },
    /// Small contraction; the recorded target is not Q-factorial and is
    /// never used as a standalone model.
    Small,
    Fiber,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionStep {
    pub kind: StepKind,
    #[serde(with = "crate::num::codec::int_vec")]
    pub relation: Vec<Int>,
    pub source: ToricModel,
    pub target: ToricModel,
}

/// Contraction of an extremal ray. Fiber type when the relation has no
/// negative part (quotient along the span of the positive rays),
/// divisorial when exactly one ray is negative (that ray is removed),
/// small otherwise (walls of the class are merged; the flip does the
/// actual surgery).
pub fn contract(model: &ToricModel, ray: &ExtremalRay) -> Result<ContractionStep, Error> {
    let fan = &model.fan;
    let c = &ray.class;
    let neg: Vec<usize> = (0..c.len()).filter(|&i| c[i].is_negative()).collect();
    let pos: Vec<usize> = (0..c.len()).filter(|&i| c[i].is_positive()).collect();
    if pos.is_empty() {
        return Err(Error::engine("extremal class has empty positive part"));
    }
    if neg.is_empty() {
        let target = fiber_target(model, &pos)?;
        return Ok(ContractionStep {
            kind: StepKind::Fiber,
            relation: c.clone(),
            source: model.clone(),
            target,
        });
    }
    let merged = merge_class_walls(fan, c)?;
    if neg.len() == 1 {
        let e = neg[0];
        let target_fan = remove_ray(fan, e, &merged)?;
        target_fan
            .validate()
            .map_err(|err| Error::engine(format!("divisorial target invalid: {err}")))?;
        if !target_fan.is_simplicial() || !target_fan.is_complete() {
            return Err(Error::engine("divisorial target not complete simplicial"));
        }
        let target = ToricModel {
            fan: target_fan,
            lattice_map: model.lattice_map.clone(),
            base_rank: model.base_rank,
        };
        return Ok(ContractionStep {
            kind: StepKind::Divisorial {
                removed_ray: fan.rays[e].clone(),
            },
            relation: c.clone(),
            source: model.clone(),
            target,
        });
    }
    // small: record the merged, non-simplicial fan
    let target_fan = Fan::new(fan.rank, fan.rays.clone(), merged);
    let target = ToricModel {
        fan: target_fan,
        lattice_map: model.lattice_map.clone(),
        base_rank: model.base_rank,
    };
    Ok(ContractionStep {
        kind: StepKind::Small,
        relation: c.clone(),
        source: model.clone(),
        target,
    })
}

/// Merge maximal cones across every wall whose class equals the given
/// relation; returns the new maximal cone list (by ray indices).
fn merge_class_walls(fan: &Fan, class: &[Int]) -> Result<Vec<Vec<usize>>, Error> {
    let walls = fan.walls();
    let in_class: Vec<&Wall> = walls.iter().filter(|w| w.relation == class).collect();
    if in_class.is_empty() {
        return Err(Error::engine("no wall carries the extremal class"));
    }
    let mut parent: Vec<usize> = (0..fan.max_cones.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for w in &in_class {
        let (a, b) = w.cones;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..fan.max_cones.len() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, v)) => v.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    let mut out = Vec::new();
    for (_, members) in groups {
        if members.len() == 1 {
            out.push(fan.max_cones[members[0]].clone());
            continue;
        }
        let mut gens: Vec<Vec<Int>> = Vec::new();
        for &m in &members {
            for &i in &fan.max_cones[m] {
                gens.push(fan.rays[i].clone());
            }
        }
        let extreme = extreme_generators(&gens);
        let mut cone: Vec<usize> = extreme
            .iter()
            .map(|r| {
                fan.rays
                    .iter()
                    .position(|x| x == r)
                    .ok_or_else(|| Error::engine("merged cone generator is not a fan ray"))
            })
            .collect::<Result<_, _>>()?;
        cone.sort_unstable();
        out.push(cone);
    }
    out.sort();
    Ok(out)
}

fn remove_ray(fan: &Fan, e: usize, merged: &[Vec<usize>]) -> Result<Fan, Error> {
    if merged.iter().any(|c| c.contains(&e)) {
        return Err(Error::engine(
            "contracted ray survives in a merged cone; class is not divisorial",
        ));
    }
    let mut new_index = vec![usize::MAX; fan.rays.len()];
    let mut rays = Vec::with_capacity(fan.rays.len() - 1);
    for (i, r) in fan.rays.iter().enumerate() {
        if i == e {
            continue;
        }
        new_index[i] = rays.len();
        rays.push(r.clone());
    }
    let cones = merged
        .iter()
        .map(|c| c.iter().map(|&i| new_index[i]).collect())
        .collect();
    Ok(Fan::new(fan.rank, rays, cones))
}

/// Quotient model of a fiber-type contraction: collapse the span of the
/// positive rays and project every cone.
fn fiber_target(model: &ToricModel, pos: &[usize]) -> Result<ToricModel, Error> {
    let fan = &model.fan;
    let n = fan.rank;
    let span: Vec<Vec<Rat>> = pos.iter().map(|&i| ray_to_rat(&fan.rays[i])).collect();
    let qt = quotient_transform(&span, n);
    let pi = qt.projection();
    let n_new = pi.rows;
    if n_new == 0 {
        return Ok(ToricModel {
            fan: Fan::point(),
            lattice_map: Vec::new(),
            base_rank: model.base_rank,
        });
    }
    let mut rays: Vec<Vec<Int>> = Vec::new();
    let mut cones: Vec<Vec<usize>> = Vec::new();
    for cone in &fan.max_cones {
        let mut gens: Vec<Vec<Int>> = Vec::new();
        for &i in cone {
            let img = pi.mul_vec(&fan.rays[i]);
            if img.iter().any(|x| !x.is_zero()) {
                gens.push(img);
            }
        }
        let extreme = extreme_generators(&gens);
        if crate::exact::mat::QMat::from_int_rows(&extreme).rank() < n_new {
            continue; // lower-dimensional image, a face of another image
        }
        let mut idx: Vec<usize> = Vec::with_capacity(extreme.len());
        for g in extreme {
            let i = match rays.iter().position(|r| *r == g) {
                Some(i) => i,
                None => {
                    rays.push(g);
                    rays.len() - 1
                }
            };
            idx.push(i);
        }
        idx.sort_unstable();
        if !cones.contains(&idx) {
            cones.push(idx);
        }
    }
    let target_fan = Fan::new(n_new, rays, cones).canonical();
    target_fan
        .validate()
        .map_err(|err| Error::engine(format!("fiber target invalid: {err}")))?;
    if !target_fan.is_complete() || !target_fan.is_simplicial() {
        return Err(Error::engine("fiber target not complete simplicial"));
    }
    FanMorphism::new(fan, &target_fan, &pi)?;
    let base_map = model.lattice_map_mat();
    let composed = pi.mat_mul(&base_map);
    Ok(ToricModel {
        fan: target_fan,
        lattice_map: composed.to_rows(),
        base_rank: composed.cols,
    })
}

/// The circuit surgery: replace the triangulation of the class's merged
/// cones that omits one positive-coefficient ray each by the one omitting
/// one negative-coefficient ray each. Same rays, isomorphic in
/// codimension one.
pub fn flip(step: &ContractionStep) -> Result<ToricModel, Error> {
    if step.kind != StepKind::Small {
        return Err(Error::engine("flip applied to a non-small contraction step"));
    }
    let fan = &step.source.fan;
    let c = &step.relation;
    let support: Vec<usize> = (0..c.len()).filter(|&i| !c[i].is_zero()).collect();
    let pos: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&i| c[i].is_positive())
        .collect();
    let neg: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&i| c[i].is_negative())
        .collect();
    let mut unaffected: Vec<Vec<usize>> = Vec::new();
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for cone in &fan.max_cones {
        let missing: Vec<usize> = support
            .iter()
            .copied()
            .filter(|i| !cone.contains(i))
            .collect();
        if missing.len() != 1 {
            unaffected.push(cone.clone());
            continue;
        }
        let m = missing[0];
        if !pos.contains(&m) {
            return Err(Error::engine(
                "affected cone omits a negative-coefficient ray; wrong side of the flip",
            ));
        }
        let k: Vec<usize> = cone
            .iter()
            .copied()
            .filter(|i| !support.contains(i))
            .collect();
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, ms)) => ms.push(m),
            None => groups.push((k, vec![m])),
        }
    }
    if groups.is_empty() {
        return Err(Error::engine("no cones are affected by the flip"));
    }
    let mut cones = unaffected;
    for (k, mut ms) in groups {
        ms.sort_unstable();
        let mut want = pos.clone();
        want.sort_unstable();
        if ms != want {
            return Err(Error::engine(
                "incomplete circuit star; the class is not flippable here",
            ));
        }
        for &j in &neg {
            let mut cone: Vec<usize> = support.iter().copied().filter(|&i| i != j).collect();
            cone.extend(k.iter().copied());
            cone.sort_unstable();
            cones.push(cone);
        }
    }
    cones.sort();
    let new_fan = Fan::new(fan.rank, fan.rays.clone(), cones);
    if !new_fan.is_simplicial() {
        return Err(Error::engine("flipped fan is not simplicial"));
    }
    if !new_fan.is_complete() {
        return Err(Error::engine("flipped fan is not complete"));
    }
    Ok(ToricModel {
        fan: new_fan,
        lattice_map: step.source.lattice_map.clone(),
        base_rank: step.source.base_rank,
    })
}

/// Sign contract of a flip: the flipped wall evaluates with the opposite
/// strict sign on the divisor.
pub fn flip_sign_flipped(flipped: &Fan, relation: &[Int], d: &[Rat]) -> Result<bool, Error> {
    let minus: Vec<Int> = relation.iter().map(|x| -x.clone()).collect();
    let wall = flipped
        .walls()
        .into_iter()
        .find(|w| w.relation == minus)
        .ok_or_else(|| Error::engine("flipped fan has no wall with the negated relation"))?;
    let num = class_pairing(&wall.relation, d);
    Ok(num.is_positive())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    DeterministicLex,
    SeededRandom { seed: u64 },
}

impl Strategy {
    pub fn parse(name: &str, seed: u64) -> Result<Strategy, Error> {
        match name {
            "deterministic-lex" => Ok(Strategy::DeterministicLex),
            "seeded-random" => Ok(Strategy::SeededRandom { seed }),
            other => Err(Error::input(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceStep {
    pub contraction: ContractionStep,
    /// Present exactly for small contractions: the Q-factorial model on the
    /// other side of the circuit.
    pub flipped: Option<ToricModel>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Outcome {
    MinimalModel {
        model: ToricModel,
        #[serde(with = "crate::num::codec::rat_vec")]
        divisor: Vec<Rat>,
    },
    MoriFiberSpace {
        total: ToricModel,
        base: ToricModel,
        #[serde(with = "crate::num::codec::rat_vec")]
        divisor: Vec<Rat>,
        #[serde(with = "crate::num::codec::int_vec")]
        contracted_class: Vec<Int>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MmpTrace {
    pub start: ToricModel,
    #[serde(with = "crate::num::codec::rat_vec")]
    pub start_divisor: Vec<Rat>,
    pub steps: Vec<TraceStep>,
    pub outcome: Outcome,
}

impl MmpTrace {
    pub fn final_model(&self) -> &ToricModel {
        match &self.outcome {
            Outcome::MinimalModel { model, .. } => model,
            Outcome::MoriFiberSpace { total, .. } => total,
        }
    }

    pub fn final_divisor(&self) -> &Vec<Rat> {
        match &self.outcome {
            Outcome::MinimalModel { divisor, .. } => divisor,
            Outcome::MoriFiberSpace { divisor, .. } => divisor,
        }
    }

    pub fn is_mfs(&self) -> bool {
        matches!(self.outcome, Outcome::MoriFiberSpace { .. })
    }

    pub fn divisorial_step_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.contraction.kind, StepKind::Divisorial { .. }))
            .count()
    }
}

pub const DEFAULT_ITERATION_CAP: usize = 10_000;

/// Runs the D-MMP from a complete simplicial projective model: contract
/// D-negative extremal rays (flipping the small ones) until D becomes nef
/// or a fiber contraction appears. The cap converts a latent bug into a
/// loud failure, never a mathematical outcome.
pub fn run_mmp(
    z: &ToricModel,
    d0: &[Rat],
    strategy: &Strategy,
    cap: usize,
) -> Result<MmpTrace, Error> {
    if !z.fan.is_complete() || !z.fan.is_simplicial() {
        return Err(Error::input("MMP requires a complete simplicial fan"));
    }
    if !z.fan.is_projective()? {
        return Err(Error::input("MMP requires a projective fan"));
    }
    let mut rng = match strategy {
        Strategy::DeterministicLex => None,
        Strategy::SeededRandom { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
    };
    let mut current = z.clone();
    let mut d: Divisor = d0.to_vec();
    let mut steps: Vec<TraceStep> = Vec::new();
    for _ in 0..cap {
        if is_nef(&current.fan, &d) {
            return Ok(MmpTrace {
                start: z.clone(),
                start_divisor: d0.to_vec(),
                steps,
                outcome: Outcome::MinimalModel {
                    model: current,
                    divisor: d,
                },
            });
        }
        let rays = mori_cone(&current);
        let negative: Vec<&ExtremalRay> = rays
            .iter()
            .filter(|r| class_pairing(&r.class, &d).is_negative())
            .collect();
        if negative.is_empty() {
            return Err(Error::engine(
                "divisor is not nef but no extremal ray is negative",
            ));
        }
        let chosen = match rng.as_mut() {
            None => negative[0],
            Some(rng) => negative[rng.gen_range(0..negative.len())],
        };
        let class = chosen.class.clone();
        let step = contract(&current, chosen)?;
        match &step.kind {
            StepKind::Fiber => {
                let base = step.target.clone();
                let total = current.clone();
                steps.push(TraceStep {
                    contraction: step,
                    flipped: None,
                });
                return Ok(MmpTrace {
                    start: z.clone(),
                    start_divisor: d0.to_vec(),
                    steps,
                    outcome: Outcome::MoriFiberSpace {
                        total,
                        base,
                        divisor: d,
                        contracted_class: class,
                    },
                });
            }
            StepKind::Divisorial { .. } => {
                let next = step.target.clone();
                d = pushforward(&current.fan, &d, &next.fan)?;
                ensure_projective(&next.fan)?;
                steps.push(TraceStep {
                    contraction: step,
                    flipped: None,
                });
                current = next;
            }
            StepKind::Small => {
                let flipped = flip(&step)?;
                if !flip_sign_flipped(&flipped.fan, &step.relation, &d)? {
                    return Err(Error::engine(
                        "flip sign contract violated: flipped wall is not positive on D",
                    ));
                }
                ensure_projective(&flipped.fan)?;
                steps.push(TraceStep {
                    contraction: step,
                    flipped: Some(flipped.clone()),
                });
                current = flipped;
            }
        }
    }
    Err(Error::IterationCap(cap))
}

fn ensure_projective(fan: &Fan) -> Result<(), Error> {
    if !fan.is_projective()? {
        let dump = serde_json::to_string(fan).unwrap_or_else(|_| "<unserializable>".into());
        return Err(Error::engine(format!(
            "intermediate fan lost projectivity: {dump}"
        )));
    }
    Ok(())
}

/// Ample model of a pseudo-effective divisor: the normal fan of the
/// section polytope, computed in the quotient lattice adapted to the
/// polytope's affine span. The distinguished ample divisor is read off the
/// facet offsets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmpleModelData {
    pub model: ToricModel,
    /// H coefficients per model ray.
    #[serde(with = "crate::num::codec::rat_vec")]
    pub ample: Vec<Rat>,
    pub polytope_dim: isize,
}

pub fn ample_model(z: &ToricModel, d: &[Rat]) -> Result<AmpleModelData, Error> {
    let fan = &z.fan;
    let p = section_polytope(fan, d);
    let v = p.vrep().clone();
    if v.vertices.is_empty() {
        return Err(Error::NotPseudoEffective);
    }
    if !v.rays.is_empty() || !v.lines.is_empty() {
        return Err(Error::engine("section polytope is unbounded"));
    }
    let n = fan.rank;
    let mut vertices = v.vertices;
    vertices.sort();
    let a0 = vertices[0].clone();
    let dirs: Vec<Vec<Rat>> = vertices
        .iter()
        .skip(1)
        .map(|p| p.iter().zip(&a0).map(|(x, y)| x - y).collect())
        .collect();
    // W0 = direction space of P_D; the quotient collapses W0-perp in N.
    let perp: Vec<Vec<Rat>> = if dirs.is_empty() {
        (0..n)
            .map(|i| {
                let mut e = vec![Rat::zero(); n];
                e[i] = Rat::one();
                e
            })
            .collect()
    } else {
        crate::exact::mat::QMat::from_rows(dirs).kernel_basis()
    };
    let qt = quotient_transform(&perp, n);
    let pi = qt.projection();
    let d_new = pi.rows;
    let polytope_dim = (n - qt.kernel_rank) as isize;
    let base_map = z.lattice_map_mat();
    let composed = pi.mat_mul(&base_map);
    if d_new == 0 {
        return Ok(AmpleModelData {
            model: ToricModel {
                fan: Fan::point(),
                lattice_map: Vec::new(),
                base_rank: z.base_rank,
            },
            ample: Vec::new(),
            polytope_dim,
        });
    }
    // dual coordinates: y = (P^{-T} (m - a0)) restricted to the last d_new
    // entries, paired with pi(v) on the N side
    let p_full = qt.full.to_qmat();
    let p_inv = p_full.inverse().expect("unimodular transform is invertible");
    let k = qt.kernel_rank;
    let coords: Vec<Vec<Rat>> = vertices
        .iter()
        .map(|m| {
            let mm: Vec<Rat> = m.iter().zip(&a0).map(|(x, y)| x - y).collect();
            (k..n)
                .map(|j| {
                    (0..n)
                        .map(|i| &mm[i] * &p_inv[(i, j)])
                        .fold(Rat::zero(), |s, v| s + v)
                })
                .collect()
        })
        .collect();
    // facets of the polytope from the dual of the homogenization cone
    let rows: Vec<Vec<Rat>> = coords
        .iter()
        .map(|y| {
            let mut r = Vec::with_capacity(d_new + 1);
            r.push(Rat::one());
            r.extend(y.iter().cloned());
            r
        })
        .collect();
    let (duals, dual_lines) = cone_extreme_rays(&rows, d_new + 1);
    if !dual_lines.is_empty() {
        return Err(Error::engine("polytope is not full-dimensional in its span"));
    }
    struct FacetData {
        normal: Vec<Int>,
        offset: Rat,
    }
    let mut facets: Vec<FacetData> = Vec::new();
    for dual in &duals {
        let c0 = &dual[0];
        let c = &dual[1..];
        if c.iter().all(|x| x.is_zero()) {
            continue; // the trivial inequality t >= 0
        }
        let normal = crate::exact::primitive(c)?;
        let lead = c.iter().position(|x| !x.is_zero()).unwrap();
        let g = Rat::new(c[lead].clone(), normal[lead].clone());
        let offset = Rat::from_integer(c0.clone()) / g;
        facets.push(FacetData { normal, offset });
    }
    facets.sort_by(|a, b| a.normal.cmp(&b.normal));
    let rays: Vec<Vec<Int>> = facets.iter().map(|f| f.normal.clone()).collect();
    let ample: Vec<Rat> = facets.iter().map(|f| f.offset.clone()).collect();
    let mut cones: Vec<Vec<usize>> = Vec::new();
    for y in &coords {
        let tight: Vec<usize> = facets
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                let val: Rat = f
                    .normal
                    .iter()
                    .zip(y)
                    .map(|(a, b)| Rat::from_integer(a.clone()) * b)
                    .fold(f.offset.clone(), |s, v| s + v);
                val.is_zero()
            })
            .map(|(i, _)| i)
            .collect();
        if !cones.contains(&tight) {
            cones.push(tight);
        }
    }
    cones.sort();
    let model_fan = Fan::new(d_new, rays, cones);
    let describe = || {
        d.iter()
            .map(crate::num::rat_to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    model_fan
        .validate()
        .map_err(|e| Error::engine(format!("ample model fan invalid for [{}]: {e}", describe())))?;
    if !model_fan.is_complete() {
        return Err(Error::engine(format!(
            "ample model fan is not complete for [{}]",
            describe()
        )));
    }
    Ok(AmpleModelData {
        model: ToricModel {
            fan: model_fan,
            lattice_map: composed.to_rows(),
            base_rank: composed.cols,
        },
        ample,
        polytope_dim,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyClause {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub clauses: Vec<VerifyClause>,
    pub pass: bool,
}

impl VerifyReport {
    fn push(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.clauses.push(VerifyClause {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
        self.pass &= pass;
    }
}

/// Independently re-checks every clause of the definition the trace claims
/// to have reached: negativity of every selected class, the flip sign
/// contract, nefness / relative ampleness, Picard number drop, dimension
/// drop, and D-negativity of the full composite map.
pub fn verify_output(z: &ToricModel, d0: &[Rat], trace: &MmpTrace) -> VerifyReport {
    let mut report = VerifyReport {
        clauses: Vec::new(),
        pass: true,
    };
    report.push(
        "start-model-matches",
        trace.start.same_model(z),
        "trace starts at the given model",
    );
    let mut current = z.clone();
    let mut d: Divisor = d0.to_vec();
    for (i, step) in trace.steps.iter().enumerate() {
        let c = &step.contraction;
        report.push(
            &format!("step-{i}-source"),
            c.source.same_model(&current),
            "step source chains from the previous model",
        );
        let pairing = class_pairing(&c.relation, &d);
        report.push(
            &format!("step-{i}-negative"),
            pairing.is_negative(),
            format!(
                "selected class pairs to {}",
                crate::num::rat_to_string(&pairing)
            ),
        );
        let neg_count = c.relation.iter().filter(|x| x.is_negative()).count();
        let kind_ok = match &c.kind {
            StepKind::Fiber => neg_count == 0,
            StepKind::Divisorial { .. } => neg_count == 1,
            StepKind::Small => neg_count >= 2,
        };
        report.push(
            &format!("step-{i}-kind"),
            kind_ok,
            "kind matches the sign pattern of the relation",
        );
        match &c.kind {
            StepKind::Fiber => {}
            StepKind::Divisorial { .. } => match pushforward(&current.fan, &d, &c.target.fan) {
                Ok(nd) => {
                    d = nd;
                    current = c.target.clone();
                }
                Err(e) => report.push(&format!("step-{i}-pushforward"), false, format!("{e}")),
            },
            StepKind::Small => match &step.flipped {
                Some(flipped) => {
                    let sign_ok =
                        flip_sign_flipped(&flipped.fan, &c.relation, &d).unwrap_or(false);
                    report.push(
                        &format!("step-{i}-flip-sign"),
                        sign_ok,
                        "flipped wall evaluates positively on D",
                    );
                    current = flipped.clone();
                }
                None => report.push(
                    &format!("step-{i}-flip"),
                    false,
                    "small step without a flipped model",
                ),
            },
        }
        if !matches!(c.kind, StepKind::Fiber) {
            let composite = pullback_compare(&z.fan, &current.fan, d0)
                .map(|cmp| cmp.negative)
                .unwrap_or(false);
            report.push(
                &format!("step-{i}-composite-negative"),
                composite,
                "running composite stays D-negative",
            );
        }
    }
    let rho_z = z.picard_number();
    report.push(
        "divisorial-count",
        rho_z == 0 || trace.divisorial_step_count() <= rho_z - 1,
        format!(
            "{} divisorial steps with rho(Z) = {rho_z}",
            trace.divisorial_step_count()
        ),
    );
    match &trace.outcome {
        Outcome::MinimalModel { model, divisor } => {
            report.push(
                "outcome-model-matches",
                model.same_model(&current),
                "outcome model equals the final replayed model",
            );
            report.push("outcome-divisor-matches", *divisor == d, "divisor replayed");
            report.push(
                "q-factorial",
                model.fan.is_simplicial(),
                "minimal model is Q-factorial",
            );
            report.push("nef", is_nef(&model.fan, &d), "pushforward of D is nef");
            match pullback_compare(&z.fan, &model.fan, d0) {
                Ok(cmp) => report.push(
                    "composite-d-negative",
                    cmp.negative,
                    "Z --> model is D-negative",
                ),
                Err(e) => report.push("composite-d-negative", false, format!("{e}")),
            }
        }
        Outcome::MoriFiberSpace {
            total,
            base,
            divisor,
            contracted_class,
        } => {
            report.push(
                "outcome-model-matches",
                total.same_model(&current),
                "outcome total space equals the final replayed model",
            );
            report.push("outcome-divisor-matches", *divisor == d, "divisor replayed");
            report.push(
                "q-factorial",
                total.fan.is_simplicial(),
                "total space is Q-factorial",
            );
            let pairing = class_pairing(contracted_class, &d);
            report.push(
                "relatively-anti-ample",
                pairing.is_negative(),
                "-D is ample on the contracted class",
            );
            let rho_total = total.picard_number();
            let rho_base = base.picard_number();
            report.push(
                "relative-picard-one",
                rho_total == rho_base + 1,
                format!("rho {rho_total} vs {rho_base}"),
            );
            report.push(
                "dimension-drop",
                base.rank() < total.rank(),
                format!("dim {} < {}", base.rank(), total.rank()),
            );
            let morphism = induced_lattice_map(total, base)
                .and_then(|m| FanMorphism::new(&total.fan, &base.fan, &m).ok());
            report.push(
                "contraction-exists",
                morphism.is_some(),
                "fan morphism total -> base exists",
            );
            match pullback_compare(&z.fan, &total.fan, d0) {
                Ok(cmp) => report.push(
                    "composite-d-negative",
                    cmp.negative,
                    "Z --> total is D-negative",
                ),
                Err(e) => report.push("composite-d-negative", false, format!("{e}")),
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::canonical_divisor;
    use crate::num::{int, rat_int};

    fn model(fan: Fan) -> ToricModel {
        let n = fan.rank;
        ToricModel::birational(fan, n)
    }

    fn p2() -> ToricModel {
        model(Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(-1), int(-1)]],
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        ))
    }

    fn f1() -> ToricModel {
        model(Fan::new(
            2,
            vec![
                vec![int(1), int(0)],
                vec![int(0), int(1)],
                vec![int(-1), int(1)],
                vec![int(0), int(-1)],
            ],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
        ))
    }

    fn p1xp1() -> ToricModel {
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

    /// Complete simplicial 3-fold with a flopping class: a small
    /// resolution of the projective cone over a quadric surface.
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

    #[test]
    fn mori_cone_sizes() {
        assert_eq!(mori_cone(&p2()).len(), 1);
        assert_eq!(mori_cone(&p1xp1()).len(), 2);
        let rays = mori_cone(&f1());
        assert_eq!(rays.len(), 2);
        let classes: Vec<Vec<Int>> = rays.iter().map(|r| r.class.clone()).collect();
        assert!(classes.contains(&vec![int(0), int(1), int(0), int(1)])); // fiber
        assert!(classes.contains(&vec![int(1), int(-1), int(1), int(0)])); // E
    }

    #[test]
    fn contract_e_on_f1_is_divisorial_to_p2() {
        let x = f1();
        let rays = mori_cone(&x);
        let e_ray = rays
            .iter()
            .find(|r| r.class == vec![int(1), int(-1), int(1), int(0)])
            .unwrap();
        let step = contract(&x, e_ray).unwrap();
        assert!(matches!(
            &step.kind,
            StepKind::Divisorial { removed_ray } if *removed_ray == vec![int(0), int(1)]
        ));
        let t = &step.target;
        assert_eq!(t.fan.rays.len(), 3);
        assert_eq!(t.picard_number(), 1);
        assert!(t.fan.is_complete() && t.fan.is_simplicial());
    }

    #[test]
    fn contract_fiber_on_f1_gives_p1() {
        let x = f1();
        let rays = mori_cone(&x);
        let fiber = rays
            .iter()
            .find(|r| r.class == vec![int(0), int(1), int(0), int(1)])
            .unwrap();
        let step = contract(&x, fiber).unwrap();
        assert!(matches!(step.kind, StepKind::Fiber));
        assert_eq!(step.target.rank(), 1);
        assert_eq!(step.target.fan.rays.len(), 2);
        assert_eq!(step.target.picard_number(), 1);
    }

    #[test]
    fn flop_on_quadric_cone_threefold() {
        let x = quadric_cone_resolution();
        assert!(x.fan.is_projective().unwrap());
        let rays = mori_cone(&x);
        let small = rays
            .iter()
            .find(|r| r.class.iter().filter(|x| x.is_negative()).count() == 2)
            .expect("a small class exists");
        assert_eq!(small.class, vec![int(-1), int(1), int(1), int(-1), int(0)]);
        let step = contract(&x, small).unwrap();
        assert!(matches!(step.kind, StepKind::Small));
        assert!(!step.target.fan.is_simplicial());
        let flipped = flip(&step).unwrap();
        assert!(flipped.fan.is_simplicial());
        assert!(flipped.fan.is_complete());
        // same rays, different triangulation
        assert_eq!(flipped.fan.rays, x.fan.rays);
        assert_ne!(flipped.fan.canonical(), x.fan.canonical());
        // flip of the flip returns the original model
        let rays2 = mori_cone(&flipped);
        let small2 = rays2
            .iter()
            .find(|r| r.class == vec![int(1), int(-1), int(-1), int(1), int(0)])
            .expect("the opposite class appears on the flipped side");
        let step2 = contract(&flipped, small2).unwrap();
        let back = flip(&step2).unwrap();
        assert_eq!(back.fan.canonical(), x.fan.canonical());
    }

    #[test]
    fn run_mmp_p2_canonical_is_fiber_to_point() {
        let z = p2();
        let k = canonical_divisor(&z.fan);
        let trace = run_mmp(&z, &k, &Strategy::DeterministicLex, 100).unwrap();
        match &trace.outcome {
            Outcome::MoriFiberSpace { base, .. } => {
                assert_eq!(base.rank(), 0);
                assert_eq!(base.picard_number(), 0);
            }
            _ => panic!("K-MMP on P2 is a Mori fiber space to a point"),
        }
        assert_eq!(trace.steps.len(), 1);
        let report = verify_output(&z, &k, &trace);
        assert!(report.pass, "{:?}", report.clauses);
    }

    #[test]
    fn run_mmp_f1_canonical_reaches_mfs_both_ways() {
        let z = f1();
        let k = canonical_divisor(&z.fan);
        let mut bases = Vec::new();
        for seed in 0..8u64 {
            let trace = run_mmp(&z, &k, &Strategy::SeededRandom { seed }, 100).unwrap();
            assert!(trace.is_mfs());
            let report = verify_output(&z, &k, &trace);
            assert!(report.pass, "seed {seed}: {:?}", report.clauses);
            if let Outcome::MoriFiberSpace { base, .. } = &trace.outcome {
                bases.push(base.rank());
            }
        }
        // both routes occur: contract E then the fiber to a point (rank 0),
        // or the ruling directly (rank 1)
        assert!(bases.contains(&0));
        assert!(bases.contains(&1));
    }

    #[test]
    fn run_mmp_nef_divisor_is_minimal_with_zero_steps() {
        let z = p1xp1();
        let d = vec![rat_int(1), rat_int(1), rat_int(0), rat_int(0)];
        let trace = run_mmp(&z, &d, &Strategy::DeterministicLex, 100).unwrap();
        assert!(matches!(trace.outcome, Outcome::MinimalModel { .. }));
        assert!(trace.steps.is_empty());
        assert!(verify_output(&z, &d, &trace).pass);
    }

    #[test]
    fn ample_model_of_anticanonical_p2_is_identity() {
        let z = p2();
        let minus_k: Vec<Rat> = canonical_divisor(&z.fan)
            .iter()
            .map(|x| -x.clone())
            .collect();
        let am = ample_model(&z, &minus_k).unwrap();
        assert!(am.model.same_model(&z));
        assert_eq!(am.polytope_dim, 2);
        assert!(crate::divisor::is_ample(&am.model.fan, &am.ample));
    }

    #[test]
    fn ample_model_of_pullback_is_p2() {
        let z = f1();
        // pullback of the hyperplane class along F1 -> P2
        let h = vec![rat_int(1), rat_int(1), rat_int(0), rat_int(0)];
        let am = ample_model(&z, &h).unwrap();
        assert_eq!(am.model.rank(), 2);
        assert!(am.model.is_birational());
        assert_eq!(am.model.fan.rays.len(), 3);
        assert_eq!(am.model.picard_number(), 1);
        assert!(crate::divisor::is_ample(&am.model.fan, &am.ample));
    }

    #[test]
    fn ample_model_of_exceptional_is_point() {
        let z = f1();
        let e = vec![rat_int(0), rat_int(1), rat_int(0), rat_int(0)];
        let am = ample_model(&z, &e).unwrap();
        assert_eq!(am.model.rank(), 0);
        assert_eq!(am.polytope_dim, 0);
    }

    #[test]
    fn ample_model_rejects_non_pseudoeffective() {
        let z = p2();
        let d = vec![rat_int(-1), rat_int(0), rat_int(0)];
        assert!(matches!(ample_model(&z, &d), Err(Error::NotPseudoEffective)));
    }

    #[test]
    fn ample_model_invariant_under_linear_equivalence() {
        let z = f1();
        let h = vec![rat_int(1), rat_int(1), rat_int(0), rat_int(0)];
        let shifted = crate::divisor::add_principal(&z.fan, &h, &[rat_int(2), rat_int(-1)]);
        let a = ample_model(&z, &h).unwrap();
        let b = ample_model(&z, &shifted).unwrap();
        assert!(a.model.same_model(&b.model));
    }

    #[test]
    fn verify_flags_a_trivial_contraction() {
        // hand-build a trace contracting a K-trivial ray on the quadric
        // cone 3-fold: the flop class is K-trivial, so the step must be
        // flagged as not D-negative.
        let x = quadric_cone_resolution();
        let k = canonical_divisor(&x.fan);
        let rays = mori_cone(&x);
        let small = rays
            .iter()
            .find(|r| r.class == vec![int(-1), int(1), int(1), int(-1), int(0)])
            .unwrap();
        assert!(class_pairing(&small.class, &k).is_zero());
        let step = contract(&x, small).unwrap();
        let flipped = flip(&step).unwrap();
        let trace = MmpTrace {
            start: x.clone(),
            start_divisor: k.clone(),
            steps: vec![TraceStep {
                contraction: step,
                flipped: Some(flipped.clone()),
            }],
            outcome: Outcome::MinimalModel {
                model: flipped,
                divisor: k.clone(),
            },
        };
        let report = verify_output(&x, &k, &trace);
        assert!(!report.pass);
        let neg = report
            .clauses
            .iter()
            .find(|c| c.name == "step-0-negative")
            .unwrap();
        assert!(!neg.pass);
    }

    #[test]
    fn fiber_outcome_on_p2_report() {
        let z = p2();
        let k = canonical_divisor(&z.fan);
        let trace = run_mmp(&z, &k, &Strategy::DeterministicLex, 10).unwrap();
        let report = verify_output(&z, &k, &trace);
        for clause in &report.clauses {
            assert!(clause.pass, "failed: {} ({})", clause.name, clause.detail);
        }
    }
}
