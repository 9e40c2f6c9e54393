//! Fans and the toric models they define: structural predicates
//! (completeness, simpliciality, projectivity), wall combinatorics,
//! common refinements, and star subdivisions.

use crate::error::Error;
use crate::exact::mat::{QMat, ZMat};
use crate::exact::polyhedron::{
    cone_contains, cone_extreme_rays, fm_feasible, Feasibility, Ineq,
};
use crate::num::{Int, Rat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub fn ray_to_rat(ray: &[Int]) -> Vec<Rat> {
    ray.iter().map(|x| Rat::from_integer(x.clone())).collect()
}

/// A simplicial-or-not fan stored by its maximal cones. Rays are primitive
/// and distinct; faces are implicit.
#[derive(Debug, Serialize, Deserialize)]
pub struct Fan {
    pub rank: usize,
    #[serde(with = "crate::num::codec::int_vec_vec")]
    pub rays: Vec<Vec<Int>>,
    pub max_cones: Vec<Vec<usize>>,
    #[serde(skip)]
    cache: OnceLock<FanCache>,
}

#[derive(Debug)]
struct FanCache {
    cone_facets: Vec<Vec<Vec<Int>>>,
    walls: Option<Vec<Wall>>,
}

impl PartialEq for Fan {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.rays == other.rays && self.max_cones == other.max_cones
    }
}
impl Eq for Fan {}

impl Clone for Fan {
    fn clone(&self) -> Self {
        Fan {
            rank: self.rank,
            rays: self.rays.clone(),
            max_cones: self.max_cones.clone(),
            cache: OnceLock::new(),
        }
    }
}

/// Codimension-one cone shared by exactly two maximal cones, together with
/// the primitive relation among the rays of the union. The relation is
/// normalized so the two non-wall coefficients are positive; it is the
/// curve class data every intersection-theoretic test consumes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wall {
    pub wall_rays: Vec<usize>,
    pub cones: (usize, usize),
    pub extra: (usize, usize),
    #[serde(with = "crate::num::codec::int_vec")]
    pub relation: Vec<Int>,
}

impl Fan {
    pub fn new(rank: usize, rays: Vec<Vec<Int>>, max_cones: Vec<Vec<usize>>) -> Fan {
        let max_cones = max_cones
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        Fan {
            rank,
            rays,
            max_cones,
            cache: OnceLock::new(),
        }
    }

    /// The fan of a single point (rank zero, one zero cone).
    pub fn point() -> Fan {
        Fan::new(0, vec![], vec![vec![]])
    }

    fn cache(&self) -> &FanCache {
        self.cache.get_or_init(|| {
            let cone_facets = self
                .max_cones
                .iter()
                .map(|c| {
                    let rays: Vec<Vec<Int>> = c.iter().map(|&i| self.rays[i].clone()).collect();
                    crate::exact::polyhedron::cone_facets(&rays, self.rank)
                })
                .collect();
            FanCache {
                cone_facets,
                walls: None,
            }
        })
    }

    pub fn cone_facets(&self, cone_idx: usize) -> &[Vec<Int>] {
        &self.cache().cone_facets[cone_idx]
    }

    pub fn cone_contains_point(&self, cone_idx: usize, point: &[Rat]) -> bool {
        cone_contains(self.cone_facets(cone_idx), point)
    }

    /// First maximal cone containing the point, if any.
    pub fn find_cone(&self, point: &[Rat]) -> Option<usize> {
        (0..self.max_cones.len()).find(|&i| self.cone_contains_point(i, point))
    }

    pub fn supports_point(&self, point: &[Rat]) -> bool {
        self.find_cone(point).is_some()
    }

    /// Canonical form: rays sorted lexicographically, cones reindexed and
    /// sorted. Two fans are equal as fans iff their canonical forms agree.
    pub fn canonical(&self) -> Fan {
        let mut order: Vec<usize> = (0..self.rays.len()).collect();
        order.sort_by(|&a, &b| self.rays[a].cmp(&self.rays[b]));
        let mut new_index = vec![0usize; self.rays.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let rays: Vec<Vec<Int>> = order.iter().map(|&i| self.rays[i].clone()).collect();
        let mut cones: Vec<Vec<usize>> = self
            .max_cones
            .iter()
            .map(|c| {
                let mut c: Vec<usize> = c.iter().map(|&i| new_index[i]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        cones.sort();
        cones.dedup();
        Fan::new(self.rank, rays, cones)
    }

    pub fn cone_ray_matrix(&self, cone: &[usize]) -> QMat {
        QMat::from_int_rows(&cone.iter().map(|&i| self.rays[i].clone()).collect::<Vec<_>>())
    }

    pub fn is_simplicial(&self) -> bool {
        self.max_cones.iter().all(|c| {
            let m = self.cone_ray_matrix(c);
            m.rank() == c.len()
        })
    }

    /// Full structural validation of the fan axioms; reports the first
    /// violation found.
    pub fn validate(&self) -> Result<(), Error> {
        for (i, r) in self.rays.iter().enumerate() {
            if r.len() != self.rank {
                return Err(Error::InvalidFan(format!("ray {i} has wrong length")));
            }
            if r.iter().all(|x| x.is_zero()) {
                return Err(Error::InvalidFan(format!("ray {i} is zero")));
            }
            let p = crate::exact::primitive(r)?;
            if &p != r {
                return Err(Error::InvalidFan(format!("ray {i} is not primitive")));
            }
        }
        for (i, r) in self.rays.iter().enumerate() {
            for (j, s) in self.rays.iter().enumerate().skip(i + 1) {
                if r == s {
                    return Err(Error::InvalidFan(format!("rays {i} and {j} coincide")));
                }
            }
        }
        if self.rank == 0 {
            if self.max_cones != vec![Vec::<usize>::new()] {
                return Err(Error::InvalidFan("rank-0 fan must be the point fan".into()));
            }
            return Ok(());
        }
        let mut used = vec![false; self.rays.len()];
        for (ci, cone) in self.max_cones.iter().enumerate() {
            if cone.is_empty() {
                return Err(Error::InvalidFan(format!("cone {ci} is empty")));
            }
            for &r in cone {
                if r >= self.rays.len() {
                    return Err(Error::InvalidFan(format!("cone {ci} has bad ray index")));
                }
                used[r] = true;
            }
            if !self.cone_is_strongly_convex(cone) {
                return Err(Error::InvalidFan(format!("cone {ci} is not strongly convex")));
            }
        }
        if let Some(i) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidFan(format!("ray {i} not used by any cone")));
        }
        for a in 0..self.max_cones.len() {
            for b in (a + 1)..self.max_cones.len() {
                if let Some(msg) = self.intersection_violation(a, b) {
                    return Err(Error::InvalidFan(format!("cones {a} and {b}: {msg}")));
                }
            }
        }
        Ok(())
    }

    fn cone_is_strongly_convex(&self, cone: &[usize]) -> bool {
        // pointed iff some functional is strictly positive on every generator
        let ineqs: Vec<Ineq> = cone
            .iter()
            .map(|&i| Ineq::new(ray_to_rat(&self.rays[i]), Rat::one()))
            .collect();
        matches!(fm_feasible(self.rank, &ineqs), Feasibility::Point(_))
    }

    /// Checks that the intersection of two maximal cones is a face of each.
    fn intersection_violation(&self, a: usize, b: usize) -> Option<String> {
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        for w in self.cone_facets(a).iter().chain(self.cone_facets(b)) {
            rows.push(ray_to_rat(w));
        }
        let (gen, lines) = cone_extreme_rays(&rows, self.rank);
        if !lines.is_empty() {
            return Some("intersection contains a line".into());
        }
        for (cone_idx, name) in [(a, "first"), (b, "second")] {
            let cone = &self.max_cones[cone_idx];
            let member: Vec<usize> = cone
                .iter()
                .copied()
                .filter(|&i| {
                    let r = ray_to_rat(&self.rays[i]);
                    gen.is_empty() && r.is_empty()
                        || cone_contains_many(&gen, &self.rays[i], self.rank)
                })
                .collect();
            // the face of the cone spanned by the member rays must equal
            // the intersection
            let span_rays: Vec<Vec<Int>> =
                member.iter().map(|&i| self.rays[i].clone()).collect();
            if !face_lp(self, cone, &member) {
                return Some(format!(
                    "intersection is not spanned by a face of the {name} cone"
                ));
            }
            let facets = crate::exact::polyhedron::cone_facets(&span_rays, self.rank);
            for g in &gen {
                if !cone_contains(&facets, &ray_to_rat(g)) {
                    return Some(format!("intersection not a face of the {name} cone"));
                }
            }
        }
        None
    }

    /// All walls of a complete simplicial fan: (rank-1)-ray subsets shared
    /// by exactly two maximal cones, with their primitive relations.
    pub fn walls(&self) -> Vec<Wall> {
        if let Some(w) = &self.cache().walls {
            return w.clone();
        }
        let walls = self.compute_walls();
        // OnceLock gives no mutable access after init; recompute is cheap
        // enough that we only memoize through the initial cache fill.
        walls
    }

    fn compute_walls(&self) -> Vec<Wall> {
        let n = self.rank;
        if n == 0 {
            return Vec::new();
        }
        let mut facet_map: Vec<(Vec<usize>, Vec<(usize, usize)>)> = Vec::new();
        for (ci, cone) in self.max_cones.iter().enumerate() {
            for drop in 0..cone.len() {
                let mut f = cone.clone();
                let extra = f.remove(drop);
                match facet_map.iter_mut().find(|(k, _)| *k == f) {
                    Some((_, v)) => v.push((ci, extra)),
                    None => facet_map.push((f, vec![(ci, extra)])),
                }
            }
        }
        let mut walls = Vec::new();
        for (wall_rays, owners) in facet_map {
            if owners.len() != 2 {
                continue;
            }
            let ((ca, ea), (cb, eb)) = (owners[0], owners[1]);
            let relation = self.wall_relation(&wall_rays, ea, eb);
            walls.push(Wall {
                wall_rays,
                cones: (ca, cb),
                extra: (ea, eb),
                relation,
            });
        }
        walls.sort_by(|x, y| x.cones.cmp(&y.cones).then(x.wall_rays.cmp(&y.wall_rays)));
        walls
    }

    /// Primitive relation sum c_i v_i = 0 supported on the wall rays and the
    /// two extra rays, with positive coefficients on the extras.
    fn wall_relation(&self, wall_rays: &[usize], ea: usize, eb: usize) -> Vec<Int> {
        let mut involved = wall_rays.to_vec();
        involved.push(ea);
        involved.push(eb);
        involved.sort_unstable();
        // kernel of the rank x (n+1) matrix whose columns are the rays
        let cols: Vec<Vec<Rat>> = involved.iter().map(|&i| ray_to_rat(&self.rays[i])).collect();
        let mat = QMat::from_rows(cols).transpose();
        let kernel = mat.kernel_basis();
        assert_eq!(kernel.len(), 1, "wall relation space must be 1-dimensional");
        let mut rel = crate::num::primitive_integer_direction(&kernel[0]).expect("nonzero relation");
        let pos_a = involved.iter().position(|&i| i == ea).unwrap();
        if rel[pos_a].is_negative() {
            for x in rel.iter_mut() {
                *x = -x.clone();
            }
        }
        assert!(rel[pos_a].is_positive(), "extra ray must appear in the relation");
        let pos_b = involved.iter().position(|&i| i == eb).unwrap();
        assert!(
            rel[pos_b].is_positive(),
            "wall relation must be positive on both extra rays"
        );
        let mut full = vec![Int::zero(); self.rays.len()];
        for (k, &i) in involved.iter().enumerate() {
            full[i] = rel[k].clone();
        }
        full
    }

    /// Completeness: the support is all of N_R, checked by verifying that
    /// every facet of every maximal cone is shared with exactly one
    /// neighbor on the other side. Simplicial fans take the fast
    /// facet-subset route.
    pub fn is_complete(&self) -> bool {
        if self.rank == 0 {
            return self.max_cones == vec![Vec::<usize>::new()];
        }
        if self.max_cones.is_empty() {
            return false;
        }
        if self.is_simplicial() {
            for cone in &self.max_cones {
                if cone.len() != self.rank {
                    return false;
                }
            }
            let mut facet_count: Vec<(Vec<usize>, usize)> = Vec::new();
            for cone in &self.max_cones {
                for drop in 0..cone.len() {
                    let mut f = cone.clone();
                    f.remove(drop);
                    match facet_count.iter_mut().find(|(k, _)| *k == f) {
                        Some((_, c)) => *c += 1,
                        None => facet_count.push((f, 1)),
                    }
                }
            }
            return facet_count.iter().all(|(_, c)| *c == 2);
        }
        // general route: geometric facets with a neighbor count of one
        for (ci, cone) in self.max_cones.iter().enumerate() {
            if self.cone_ray_matrix(cone).rank() != self.rank {
                return false;
            }
            for w in self.cone_facets(ci) {
                let tight: Vec<usize> = cone
                    .iter()
                    .copied()
                    .filter(|&i| {
                        w.iter()
                            .zip(&self.rays[i])
                            .map(|(a, b)| a * b)
                            .fold(Int::zero(), |s, x| s + x)
                            .is_zero()
                    })
                    .collect();
                if self.cone_ray_matrix(&tight).rank() + 1 != self.rank {
                    continue; // dual ray of a lower face, not a facet
                }
                let neighbors = self
                    .max_cones
                    .iter()
                    .enumerate()
                    .filter(|(cj, other)| {
                        *cj != ci
                            && tight.iter().all(|i| other.contains(i))
                            && other.iter().any(|&j| {
                                w.iter()
                                    .zip(&self.rays[j])
                                    .map(|(a, b)| a * b)
                                    .fold(Int::zero(), |s, x| s + x)
                                    .is_negative()
                            })
                    })
                    .count();
                if neighbors != 1 {
                    return false;
                }
            }
        }
        true
    }

    /// Strictly convex support function certificate: a divisor coefficient
    /// vector whose wall evaluations are all strictly positive, i.e. an
    /// ample divisor. Returns the Farkas witness when none exists.
    pub fn projectivity_certificate(&self) -> Result<ProjectivityWitness, Error> {
        if !self.is_complete() {
            return Err(Error::engine("projectivity asked of a non-complete fan"));
        }
        if !self.is_simplicial() {
            return Err(Error::engine("projectivity asked of a non-simplicial fan"));
        }
        if self.rank == 0 {
            return Ok(ProjectivityWitness::Ample(vec![]));
        }
        let walls = self.walls();
        let ineqs: Vec<Ineq> = walls
            .iter()
            .map(|w| Ineq::new(ray_to_rat(&w.relation), Rat::one()))
            .collect();
        match fm_feasible(self.rays.len(), &ineqs) {
            Feasibility::Point(d) => Ok(ProjectivityWitness::Ample(d)),
            Feasibility::Infeasible(y) => Ok(ProjectivityWitness::NotProjective(y)),
        }
    }

    pub fn is_projective(&self) -> Result<bool, Error> {
        Ok(matches!(
            self.projectivity_certificate()?,
            ProjectivityWitness::Ample(_)
        ))
    }

    /// Picard number of the complete toric variety: the dimension of the
    /// space of support functions modulo the characters. On a simplicial
    /// fan the per-cone relation spaces vanish and this is #rays - rank.
    pub fn picard_number(&self) -> usize {
        let r = self.rays.len();
        let n = self.rank;
        if r == 0 {
            return 0;
        }
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        for cone in &self.max_cones {
            let cols: Vec<Vec<Rat>> = cone.iter().map(|&i| ray_to_rat(&self.rays[i])).collect();
            let mat = QMat::from_rows(cols).transpose();
            for kappa in mat.kernel_basis() {
                let mut full = vec![Rat::zero(); r];
                for (k, &i) in cone.iter().enumerate() {
                    full[i] = kappa[k].clone();
                }
                rows.push(full);
            }
        }
        let cut = if rows.is_empty() {
            0
        } else {
            QMat::from_rows(rows).rank()
        };
        r - cut - n
    }

    /// Star subdivision at a primitive lattice vector inside the support.
    pub fn star_subdivision(&self, v: &[Int]) -> Result<Fan, Error> {
        let v = crate::exact::primitive(v)?;
        let vq = ray_to_rat(&v);
        let affected: Vec<usize> = (0..self.max_cones.len())
            .filter(|&i| self.cone_contains_point(i, &vq))
            .collect();
        if affected.is_empty() {
            return Err(Error::input("subdivision point outside the fan support"));
        }
        let mut rays = self.rays.clone();
        let nv = match rays.iter().position(|r| *r == v) {
            Some(i) => i,
            None => {
                rays.push(v.clone());
                rays.len() - 1
            }
        };
        let mut cones: Vec<Vec<usize>> = Vec::new();
        for (ci, cone) in self.max_cones.iter().enumerate() {
            if !affected.contains(&ci) {
                cones.push(cone.clone());
                continue;
            }
            // facets of the cone not containing v, coned over v
            let cone_rays: Vec<Vec<Int>> = cone.iter().map(|&i| self.rays[i].clone()).collect();
            let (facet_normals, _) = cone_extreme_rays(
                &cone_rays.iter().map(|r| ray_to_rat(r)).collect::<Vec<_>>(),
                self.rank,
            );
            for w in &facet_normals {
                let on_w: Rat = w
                    .iter()
                    .zip(&vq)
                    .map(|(a, b)| Rat::from_integer(a.clone()) * b)
                    .fold(Rat::zero(), |s, x| s + x);
                if on_w.is_zero() {
                    continue; // v lies on this facet
                }
                let mut new_cone: Vec<usize> = cone
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let d: Int = w
                            .iter()
                            .zip(&self.rays[i])
                            .map(|(a, b)| a * b)
                            .fold(Int::zero(), |s, x| s + x);
                        d.is_zero()
                    })
                    .collect();
                new_cone.push(nv);
                new_cone.sort_unstable();
                new_cone.dedup();
                if !cones.contains(&new_cone) {
                    cones.push(new_cone);
                }
            }
        }
        Ok(Fan::new(self.rank, rays, cones))
    }
}

fn cone_contains_many(gens: &[Vec<Int>], ray: &[Int], dim: usize) -> bool {
    let facets = crate::exact::polyhedron::cone_facets(gens, dim);
    cone_contains(&facets, &ray_to_rat(ray))
}

/// Does `member` span a face of `cone`? Realized by a supporting functional
/// vanishing on `member`'s rays and strictly positive on the rest.
fn face_lp(fan: &Fan, cone: &[usize], member: &[usize]) -> bool {
    let mut ineqs = Vec::new();
    for &i in cone {
        let r = ray_to_rat(&fan.rays[i]);
        if member.contains(&i) {
            ineqs.push(Ineq::new(r.clone(), Rat::zero()));
            ineqs.push(Ineq::new(r.iter().map(|x| -x.clone()).collect(), Rat::zero()));
        } else {
            ineqs.push(Ineq::new(r, Rat::one()));
        }
    }
    matches!(fm_feasible(fan.rank, &ineqs), Feasibility::Point(_))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectivityWitness {
    /// Coefficients of an ample torus-invariant divisor.
    Ample(#[serde(with = "crate::num::codec::rat_vec")] Vec<Rat>),
    /// Farkas multipliers over the wall inequalities.
    NotProjective(#[serde(with = "crate::num::codec::rat_vec")] Vec<Rat>),
}

/// A toric variety together with the record of how its lattice arises from
/// the base model's lattice: identity for birational models, a projection
/// for fiber-type images.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricModel {
    pub fan: Fan,
    #[serde(with = "crate::num::codec::int_vec_vec")]
    pub lattice_map: Vec<Vec<Int>>,
    pub base_rank: usize,
}

impl ToricModel {
    pub fn birational(fan: Fan, base_rank: usize) -> ToricModel {
        assert_eq!(fan.rank, base_rank);
        let id = ZMat::identity(base_rank);
        ToricModel {
            fan,
            lattice_map: id.to_rows(),
            base_rank,
        }
    }

    pub fn from_projection(fan: Fan, map: &ZMat) -> ToricModel {
        assert_eq!(fan.rank, map.rows);
        ToricModel {
            fan,
            lattice_map: map.to_rows(),
            base_rank: map.cols,
        }
    }

    pub fn lattice_map_mat(&self) -> ZMat {
        if self.lattice_map.is_empty() {
            return ZMat::zero(0, self.base_rank);
        }
        ZMat::from_rows(self.lattice_map.clone())
    }

    pub fn rank(&self) -> usize {
        self.fan.rank
    }

    pub fn is_birational(&self) -> bool {
        let n = self.fan.rank;
        self.lattice_map.len() == n && self.lattice_map_mat() == ZMat::identity(n)
    }

    pub fn picard_number(&self) -> usize {
        self.fan.picard_number()
    }

    /// Canonical (fan-sorted) form used for model equality.
    pub fn canonical(&self) -> ToricModel {
        ToricModel {
            fan: self.fan.canonical(),
            lattice_map: self.lattice_map.clone(),
            base_rank: self.base_rank,
        }
    }

    pub fn same_model(&self, other: &ToricModel) -> bool {
        self.canonical() == other.canonical()
    }

    /// Stable text key for grouping models.
    pub fn key(&self) -> String {
        let c = self.canonical();
        let rays: Vec<String> = c
            .fan
            .rays
            .iter()
            .map(|r| {
                r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            })
            .collect();
        let cones: Vec<String> = c
            .fan
            .max_cones
            .iter()
            .map(|c| c.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        let map: Vec<String> = c
            .lattice_map
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        format!(
            "r{}|[{}]|[{}]|[{}]",
            c.fan.rank,
            rays.join(";"),
            cones.join(";"),
            map.join(";")
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MorphismKind {
    Refinement,
    Projection,
    Mixed,
}

/// A map of fans: a lattice map under which every source cone lands inside
/// some target cone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FanMorphism {
    #[serde(with = "crate::num::codec::int_vec_vec")]
    pub lattice_map: Vec<Vec<Int>>,
    /// For each source maximal cone, the target maximal cone containing its image.
    pub cone_assignment: Vec<usize>,
    pub kind: MorphismKind,
}

impl FanMorphism {
    /// Builds and checks the morphism; fails when some source cone does not
    /// map into any target cone.
    pub fn new(source: &Fan, target: &Fan, lattice_map: &ZMat) -> Result<FanMorphism, Error> {
        assert_eq!(lattice_map.cols, source.rank);
        assert_eq!(lattice_map.rows, target.rank);
        let mut assignment = Vec::with_capacity(source.max_cones.len());
        for (ci, cone) in source.max_cones.iter().enumerate() {
            let images: Vec<Vec<Rat>> = cone
                .iter()
                .map(|&i| ray_to_rat(&lattice_map.mul_vec(&source.rays[i])))
                .collect();
            let found = (0..target.max_cones.len()).find(|&t| {
                images
                    .iter()
                    .all(|p| cone_contains(target.cone_facets(t), p))
            });
            match found {
                Some(t) => assignment.push(t),
                None => {
                    return Err(Error::engine(format!(
                        "cone {ci} does not map into any target cone"
                    )))
                }
            }
        }
        let kind = if lattice_map.rows == lattice_map.cols
            && *lattice_map == ZMat::identity(lattice_map.rows)
        {
            MorphismKind::Refinement
        } else if lattice_map.rows < lattice_map.cols {
            MorphismKind::Projection
        } else {
            MorphismKind::Mixed
        };
        Ok(FanMorphism {
            lattice_map: lattice_map.to_rows(),
            cone_assignment: assignment,
            kind,
        })
    }
}

/// The lattice map of the contraction `source -> target` when both models
/// live over the same base: solves target.map = m * source.map exactly.
pub fn induced_lattice_map(source: &ToricModel, target: &ToricModel) -> Option<ZMat> {
    let s = source.lattice_map_mat();
    let t = target.lattice_map_mat();
    if s.cols != t.cols {
        return None;
    }
    // solve M * s = t for integer M (t.rows x s.rows)
    let sq = s.to_qmat().transpose();
    let mut rows: Vec<Vec<Int>> = Vec::with_capacity(t.rows);
    for i in 0..t.rows {
        let b: Vec<Rat> = (0..t.cols)
            .map(|j| Rat::from_integer(t[(i, j)].clone()))
            .collect();
        let (x, _) = sq.solve(&b)?;
        let mut int_row = Vec::with_capacity(x.len());
        for v in x {
            if !v.denom().is_one() {
                return None;
            }
            int_row.push(v.numer().clone());
        }
        rows.push(int_row);
    }
    if rows.is_empty() {
        return Some(ZMat::zero(0, s.rows));
    }
    Some(ZMat::from_rows(rows))
}

/// Contraction morphism between two models over the same base, when it exists.
pub fn model_contraction(source: &ToricModel, target: &ToricModel) -> Result<FanMorphism, Error> {
    let map = induced_lattice_map(source, target)
        .ok_or_else(|| Error::engine("no integral lattice map between the models"))?;
    FanMorphism::new(&source.fan, &target.fan, &map)
}

/// Common refinement of two complete fans in the same lattice: all pairwise
/// full-dimensional intersections, triangulated by the pulling rule in
/// lexicographic ray order. Returns the refined fan plus, per refined cone,
/// the indices of the containing cones in each input.
pub fn common_refinement(a: &Fan, b: &Fan) -> Result<(Fan, Vec<usize>, Vec<usize>), Error> {
    if a.rank != b.rank {
        return Err(Error::input("fans live in different lattice ranks"));
    }
    let n = a.rank;
    if n == 0 {
        return Ok((Fan::point(), vec![0], vec![0]));
    }
    let mut simplices: Vec<(Vec<Vec<Int>>, usize, usize)> = Vec::new();
    for (ai, _) in a.max_cones.iter().enumerate() {
        for (bi, _) in b.max_cones.iter().enumerate() {
            let mut rows: Vec<Vec<Rat>> = Vec::new();
            for w in a.cone_facets(ai).iter().chain(b.cone_facets(bi)) {
                rows.push(ray_to_rat(w));
            }
            let (gens, lines) = cone_extreme_rays(&rows, n);
            if !lines.is_empty() {
                return Err(Error::engine("intersection cone contains a line"));
            }
            if gens.is_empty() {
                continue;
            }
            let rank = QMat::from_int_rows(&gens).rank();
            if rank < n {
                continue;
            }
            for simplex in pulling_triangulation(&gens, n) {
                simplices.push((simplex, ai, bi));
            }
        }
    }
    let mut rays: Vec<Vec<Int>> = simplices
        .iter()
        .flat_map(|(s, _, _)| s.iter().cloned())
        .collect();
    rays.sort();
    rays.dedup();
    let mut cones = Vec::new();
    let mut to_a = Vec::new();
    let mut to_b = Vec::new();
    for (simplex, ai, bi) in &simplices {
        let mut cone: Vec<usize> = simplex
            .iter()
            .map(|r| rays.iter().position(|x| x == r).unwrap())
            .collect();
        cone.sort_unstable();
        if cones.contains(&cone) {
            continue;
        }
        cones.push(cone);
        to_a.push(*ai);
        to_b.push(*bi);
    }
    // canonical order of cones with the assignment kept aligned
    let mut order: Vec<usize> = (0..cones.len()).collect();
    order.sort_by(|&x, &y| cones[x].cmp(&cones[y]));
    let cones: Vec<Vec<usize>> = order.iter().map(|&i| cones[i].clone()).collect();
    let to_a: Vec<usize> = order.iter().map(|&i| to_a[i]).collect();
    let to_b: Vec<usize> = order.iter().map(|&i| to_b[i]).collect();
    Ok((Fan::new(n, rays, cones), to_a, to_b))
}

/// Pulling triangulation of a pointed cone given by its extreme rays:
/// pull the lexicographically smallest ray, recurse on the facets that
/// avoid it. Restricted to any face this only depends on the face's rays,
/// so neighboring cones triangulate compatibly.
pub fn pulling_triangulation(gens: &[Vec<Int>], dim: usize) -> Vec<Vec<Vec<Int>>> {
    let mut gens: Vec<Vec<Int>> = gens.to_vec();
    gens.sort();
    gens.dedup();
    let rank = QMat::from_int_rows(&gens).rank();
    if gens.len() == rank {
        return vec![gens];
    }
    let pull = gens[0].clone();
    let rows: Vec<Vec<Rat>> = gens.iter().map(|r| ray_to_rat(r)).collect();
    let (facet_normals, _) = cone_extreme_rays(&rows, dim);
    let mut out = Vec::new();
    for w in &facet_normals {
        let on_pull: Int = w
            .iter()
            .zip(&pull)
            .map(|(a, b)| a * b)
            .fold(Int::zero(), |s, x| s + x);
        if on_pull.is_zero() {
            continue;
        }
        let facet_rays: Vec<Vec<Int>> = gens
            .iter()
            .filter(|r| {
                w.iter()
                    .zip(r.iter())
                    .map(|(a, b)| a * b)
                    .fold(Int::zero(), |s, x| s + x)
                    .is_zero()
            })
            .cloned()
            .collect();
        if facet_rays.is_empty() {
            continue;
        }
        for mut simplex in pulling_triangulation(&facet_rays, dim) {
            simplex.push(pull.clone());
            simplex.sort();
            let rank = QMat::from_int_rows(&simplex).rank();
            if rank == simplex.len() && !out.contains(&simplex) {
                out.push(simplex);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;

    pub fn p2_fan() -> Fan {
        Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(-1), int(-1)]],
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        )
    }

    pub fn f1_fan() -> Fan {
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

    fn p1xp1_fan() -> Fan {
        Fan::new(
            2,
            vec![
                vec![int(1), int(0)],
                vec![int(0), int(1)],
                vec![int(-1), int(0)],
                vec![int(0), int(-1)],
            ],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
        )
    }

    #[test]
    fn p2_is_valid_complete_simplicial() {
        let f = p2_fan();
        f.validate().unwrap();
        assert!(f.is_complete());
        assert!(f.is_simplicial());
        assert_eq!(f.picard_number(), 1);
    }

    #[test]
    fn partial_fan_valid_but_incomplete() {
        let f = Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(-1), int(-1)]],
            vec![vec![0, 1], vec![1, 2]],
        );
        f.validate().unwrap();
        assert!(!f.is_complete());
    }

    #[test]
    fn overlapping_cones_rejected() {
        // cone(e1, e2) and cone(e1, e1+e2) overlap without sharing a face
        let f = Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(1), int(1)]],
            vec![vec![0, 1], vec![0, 2]],
        );
        assert!(f.validate().is_err());
    }

    #[test]
    fn p1_complete() {
        let f = p1_fan();
        f.validate().unwrap();
        assert!(f.is_complete());
        assert_eq!(f.walls().len(), 1);
        let w = &f.walls()[0];
        assert_eq!(w.relation, vec![int(1), int(1)]);
    }

    #[test]
    fn p2_walls_and_projectivity() {
        let f = p2_fan();
        assert_eq!(f.walls().len(), 3);
        for w in f.walls() {
            assert_eq!(w.relation, vec![int(1), int(1), int(1)]);
        }
        assert!(f.is_projective().unwrap());
        // the all-ones divisor is a certificate
        match f.projectivity_certificate().unwrap() {
            ProjectivityWitness::Ample(d) => {
                assert_eq!(d.len(), 3);
            }
            _ => panic!("P2 is projective"),
        }
    }

    #[test]
    fn picard_numbers() {
        assert_eq!(p1xp1_fan().picard_number(), 2);
        assert_eq!(f1_fan().picard_number(), 2);
    }

    #[test]
    fn non_simplicial_cone_over_square() {
        let f = Fan::new(
            3,
            vec![
                vec![int(1), int(1), int(1)],
                vec![int(-1), int(1), int(1)],
                vec![int(1), int(-1), int(1)],
                vec![int(-1), int(-1), int(1)],
                vec![int(0), int(0), int(-1)],
            ],
            vec![
                vec![0, 1, 2, 3],
                vec![0, 1, 4],
                vec![0, 2, 4],
                vec![1, 3, 4],
                vec![2, 3, 4],
            ],
        );
        f.validate().unwrap();
        assert!(!f.is_simplicial());
    }

    #[test]
    fn star_subdivision_of_p2_at_1_1() {
        let f = p2_fan();
        let g = f.star_subdivision(&[int(1), int(1)]).unwrap();
        g.validate().unwrap();
        assert!(g.is_complete());
        assert!(g.is_simplicial());
        assert_eq!(g.rays.len(), 4);
        assert_eq!(g.picard_number(), 2);
    }

    #[test]
    fn star_subdivision_at_existing_ray_is_identity() {
        let f = p2_fan();
        let g = f.star_subdivision(&[int(1), int(0)]).unwrap();
        assert_eq!(g.canonical(), f.canonical());
    }

    #[test]
    fn star_subdivision_outside_support_errors() {
        let half = Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(0), int(1)]],
            vec![vec![0, 1]],
        );
        assert!(half.star_subdivision(&[int(-1), int(-1)]).is_err());
    }

    #[test]
    fn refinement_of_equal_fans_is_identity() {
        let f = p2_fan();
        let (g, to_a, _) = common_refinement(&f, &f).unwrap();
        assert_eq!(g.canonical(), f.canonical());
        assert_eq!(to_a.len(), 3);
    }

    #[test]
    fn refinement_of_blowup_with_blowdown_target() {
        // F1 relabeled so it refines this P2 fan (the blowdown target):
        // removing the ray (0,1) from F1 yields the P2 with rays
        // (1,0), (-1,1), (0,-1).
        let f1 = f1_fan();
        let p2 = Fan::new(
            2,
            vec![vec![int(1), int(0)], vec![int(-1), int(1)], vec![int(0), int(-1)]],
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        );
        p2.validate().unwrap();
        assert!(p2.is_complete());
        let (g, _, _) = common_refinement(&f1, &p2).unwrap();
        assert_eq!(g.canonical(), f1.canonical());
        // and F1 -> P2 is a fan morphism under the identity map
        let id = ZMat::identity(2);
        let m = FanMorphism::new(&f1, &p2, &id).unwrap();
        assert_eq!(m.kind, MorphismKind::Refinement);
    }

    #[test]
    fn refinement_of_two_square_triangulations() {
        let rays = vec![
            vec![int(1), int(1), int(1)],
            vec![int(-1), int(1), int(1)],
            vec![int(1), int(-1), int(1)],
            vec![int(-1), int(-1), int(1)],
            vec![int(0), int(0), int(-1)],
        ];
        let sides = vec![vec![0, 1, 4], vec![0, 2, 4], vec![1, 3, 4], vec![2, 3, 4]];
        let mut cones_a = vec![vec![0, 1, 3], vec![0, 2, 3]];
        cones_a.extend(sides.clone());
        let mut cones_b = vec![vec![0, 1, 2], vec![1, 2, 3]];
        cones_b.extend(sides);
        let a = Fan::new(3, rays.clone(), cones_a);
        let b = Fan::new(3, rays, cones_b);
        a.validate().unwrap();
        b.validate().unwrap();
        let (g, _, _) = common_refinement(&a, &b).unwrap();
        g.validate().unwrap();
        // over the square cone the two diagonals cross: 4 cones with a new
        // central ray, plus the 4 untouched side cones
        assert_eq!(g.rays.len(), 6);
        assert_eq!(g.max_cones.len(), 8);
    }

    #[test]
    fn twisted_cube_fan_is_complete_but_not_projective() {
        // cube-vertex fan with face diagonals chosen so no strictly convex
        // support function exists
        let rays: Vec<Vec<Int>> = (0..8)
            .map(|i: i32| {
                vec![
                    int(if i & 1 == 0 { 1 } else { -1 }),
                    int(if i & 2 == 0 { 1 } else { -1 }),
                    int(if i & 4 == 0 { 1 } else { -1 }),
                ]
            })
            .collect();
        let cones = vec![
            vec![0, 2, 6],
            vec![0, 4, 6],
            vec![1, 3, 5],
            vec![3, 5, 7],
            vec![0, 1, 4],
            vec![1, 4, 5],
            vec![2, 3, 7],
            vec![2, 6, 7],
            vec![0, 1, 3],
            vec![0, 2, 3],
            vec![4, 5, 7],
            vec![4, 6, 7],
        ];
        let f = Fan::new(3, rays, cones);
        f.validate().unwrap();
        assert!(f.is_complete());
        assert!(f.is_simplicial());
        match f.projectivity_certificate().unwrap() {
            ProjectivityWitness::Ample(_) => panic!("the twisted cube fan is not projective"),
            ProjectivityWitness::NotProjective(y) => {
                // Farkas witness over the wall inequalities: y >= 0,
                // y^T A = 0, y^T b > 0 with every row offset 1
                let walls = f.walls();
                assert_eq!(y.len(), walls.len());
                assert!(y.iter().all(|v| !v.is_negative()));
                let mut combo = vec![Rat::zero(); f.rays.len()];
                let mut total = Rat::zero();
                for (yi, w) in y.iter().zip(&walls) {
                    for (c, rel) in combo.iter_mut().zip(&w.relation) {
                        *c += yi * Rat::from_integer(rel.clone());
                    }
                    total += yi;
                }
                assert!(combo.iter().all(|c| c.is_zero()));
                assert!(total.is_positive());
            }
        }
    }

    #[test]
    fn projectivity_certificates_are_ample() {
        for fan in [p2_fan(), f1_fan(), p1xp1_fan()] {
            match fan.projectivity_certificate().unwrap() {
                ProjectivityWitness::Ample(d) => {
                    assert!(crate::divisor::is_ample(&fan, &d));
                }
                _ => panic!("corpus surface must be projective"),
            }
        }
    }

    #[test]
    fn point_fan_basics() {
        let p = Fan::point();
        p.validate().unwrap();
        assert!(p.is_complete());
        assert!(p.is_simplicial());
        assert_eq!(p.picard_number(), 0);
    }

    #[test]
    fn canonical_fan_equality() {
        let f = p2_fan();
        let relabeled = Fan::new(
            2,
            vec![vec![int(0), int(1)], vec![int(-1), int(-1)], vec![int(1), int(0)]],
            vec![vec![2, 0], vec![0, 1], vec![2, 1]],
        );
        assert_eq!(f.canonical(), relabeled.canonical());
    }
}
