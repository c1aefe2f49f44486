//! Polyhedral vertex sets on the unit sphere and their derived data:
//! antipodal closure, half-space vertex sums (γ-profiles), inscribed
//! radii, normalized duals, the iterated icosahedron family, and convex
//! decompositions of measurement vectors.

pub(crate) mod hull;
mod platonic;

pub use platonic::{make_platonic, PlatonicSolid};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpMode, LpOutcome, LpScalar};
use hull::{convex_hull, Vec3};

/// Two vertices closer than this (Euclidean, ~= angular for unit vectors)
/// are the same vertex.
pub const VERTEX_DEDUP_TOL: f64 = 1e-9;
/// Dot products within this of zero are half-space ties.
pub const TIE_TOL: f64 = 1e-12;
/// Facet normals within this angle (radians) are merged before dual
/// extraction.
pub const DUAL_MERGE_ANGLE: f64 = 1e-7;
/// Default vertex cap for the iterated family.
pub const FAMILY_VERTEX_CAP: usize = 10_000;

/// A point on the Bloch sphere. The constructor normalizes; the norm is
/// within 1e-12 of one afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-14 {
            return Err(Error::InvalidInput(format!(
                "cannot normalize near-zero vector ({x}, {y}, {z})"
            )));
        }
        Ok(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub const fn x(&self) -> f64 {
        self.x
    }
    pub const fn y(&self) -> f64 {
        self.y
    }
    pub const fn z(&self) -> f64 {
        self.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, o: &UnitVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn dot3(&self, o: &[f64; 3]) -> f64 {
        self.x * o[0] + self.y * o[1] + self.z * o[2]
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn scaled(&self, s: f64) -> [f64; 3] {
        [self.x * s, self.y * s, self.z * s]
    }

    /// Euclidean distance (~= angular distance for nearby unit vectors).
    pub fn distance(&self, o: &UnitVector) -> f64 {
        let d = [self.x - o.x, self.y - o.y, self.z - o.z];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Uniform direction on the sphere (rejection sampling from the cube).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> UnitVector {
        loop {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            let y: f64 = rng.gen_range(-1.0..=1.0);
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let n2 = x * x + y * y + z * z;
            if n2 > 1e-6 && n2 <= 1.0 {
                return UnitVector::new(x, y, z).expect("norm checked");
            }
        }
    }

    /// Uniform direction on the Bloch equator (z = 0).
    pub fn random_equatorial<R: Rng + ?Sized>(rng: &mut R) -> UnitVector {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        UnitVector {
            x: theta.cos(),
            y: theta.sin(),
            z: 0.0,
        }
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(v: UnitVector) -> Self {
        v.as_array()
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = Error;
    fn try_from(a: [f64; 3]) -> Result<Self> {
        UnitVector::new(a[0], a[1], a[2])
    }
}

/// Mirror of the polyhedron JSON file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyhedronFile {
    name: String,
    vertices: Vec<[f64; 3]>,
}

/// An ordered vertex set on the unit sphere (D >= 4, pairwise distinct).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PolyhedronFile", into = "PolyhedronFile")]
pub struct Polyhedron {
    name: String,
    vertices: Vec<UnitVector>,
    antipodal_closed: bool,
}

impl TryFrom<PolyhedronFile> for Polyhedron {
    type Error = Error;
    fn try_from(f: PolyhedronFile) -> Result<Self> {
        let vertices: Result<Vec<UnitVector>> =
            f.vertices.into_iter().map(UnitVector::try_from).collect();
        Polyhedron::from_vertices(&f.name, vertices?)
    }
}

impl From<Polyhedron> for PolyhedronFile {
    fn from(p: Polyhedron) -> Self {
        PolyhedronFile {
            name: p.name,
            vertices: p.vertices.iter().map(|v| v.as_array()).collect(),
        }
    }
}

impl Polyhedron {
    /// Validates D >= 4 and pairwise vertex distinctness (1e-9); computes
    /// the antipodal-closure flag.
    pub fn from_vertices(name: &str, vertices: Vec<UnitVector>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "polyhedron '{name}' needs at least 4 vertices, got {}",
                vertices.len()
            )));
        }
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                if vertices[i].distance(&vertices[j]) <= VERTEX_DEDUP_TOL {
                    return Err(Error::InvalidInput(format!(
                        "polyhedron '{name}' has duplicate vertices at indices {i} and {j}"
                    )));
                }
            }
        }
        let antipodal_closed = is_antipodal_closed(&vertices);
        Ok(Self {
            name: name.to_string(),
            vertices,
            antipodal_closed,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[UnitVector] {
        &self.vertices
    }

    pub fn antipodal_closed(&self) -> bool {
        self.antipodal_closed
    }

    pub(crate) fn points(&self) -> Vec<Vec3> {
        self.vertices.iter().map(|v| v.as_array()).collect()
    }

    /// Union of the vertex set with its negation, deduplicated. Returns
    /// `self` unchanged when already closed.
    pub fn antipodal_closure(&self) -> Polyhedron {
        if self.antipodal_closed {
            return self.clone();
        }
        let mut verts = self.vertices.clone();
        for v in &self.vertices {
            let n = v.neg();
            if !verts.iter().any(|u| u.distance(&n) <= VERTEX_DEDUP_TOL) {
                verts.push(n);
            }
        }
        let name = format!("{}-closed", self.name);
        Polyhedron::from_vertices(&name, verts).expect("closure preserves validity")
    }

    /// One representative per antipodal pair (the lexicographically larger
    /// of v and -v by (z, y, x)), plus the (representative, sign) assignment
    /// of every vertex. Requires antipodal closure.
    pub fn antipodal_pairing(&self) -> Result<AntipodalPairing> {
        if !self.antipodal_closed {
            return Err(Error::InvalidInput(format!(
                "polyhedron '{}' is not antipodally closed",
                self.name
            )));
        }
        let mut representatives: Vec<UnitVector> = Vec::new();
        let mut assignment: Vec<(usize, i8)> = vec![(usize::MAX, 0); self.vertices.len()];
        for (i, v) in self.vertices.iter().enumerate() {
            if assignment[i].1 != 0 {
                continue;
            }
            let key = (v.z(), v.y(), v.x());
            let neg_key = (-v.z(), -v.y(), -v.x());
            let (rep, sign) = if key >= neg_key {
                (*v, 1)
            } else {
                (v.neg(), -1)
            };
            let rep_idx = representatives.len();
            representatives.push(rep);
            assignment[i] = (rep_idx, sign);
            let n = v.neg();
            for (j, w) in self.vertices.iter().enumerate().skip(i + 1) {
                if w.distance(&n) <= VERTEX_DEDUP_TOL {
                    assignment[j] = (rep_idx, -sign);
                }
            }
        }
        Ok(AntipodalPairing {
            representatives,
            assignment,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s)
    }
}

/// Representative directions of an antipodally closed vertex set.
#[derive(Debug, Clone)]
pub struct AntipodalPairing {
    /// One direction per +/- pair.
    pub representatives: Vec<UnitVector>,
    /// Per original vertex: (representative index, sign), with
    /// vertex = sign * representative.
    pub assignment: Vec<(usize, i8)>,
}

fn is_antipodal_closed(vertices: &[UnitVector]) -> bool {
    vertices.iter().all(|v| {
        let n = v.neg();
        vertices
            .iter()
            .any(|u| u.distance(&n) <= VERTEX_DEDUP_TOL)
    })
}

/// Inclusive half-space vertex sum around `direction`: vertices with
/// dot >= -TIE_TOL contribute. Ties come in antipodal pairs for closed
/// sets and cancel.
pub fn half_space_sum(vertices: &[UnitVector], direction: &UnitVector) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for v in vertices {
        if direction.dot(v) >= -TIE_TOL {
            acc[0] += v.x();
            acc[1] += v.y();
            acc[2] += v.z();
        }
    }
    acc
}

/// Per-vertex half-space sum data: γ_λ (norms), m_λ (directions), their
/// extremes, and whether the set is regular (m = v with a common γ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaProfile {
    pub gammas: Vec<f64>,
    pub m_vectors: Vec<UnitVector>,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub is_regular: bool,
}

/// Compute the γ-profile of an antipodally closed polyhedron.
pub fn gamma_profile(p: &Polyhedron) -> Result<GammaProfile> {
    if !p.antipodal_closed() {
        return Err(Error::InvalidInput(format!(
            "gamma profile requires an antipodally closed set; '{}' is not",
            p.name()
        )));
    }
    let mut gammas = Vec::with_capacity(p.vertex_count());
    let mut m_vectors = Vec::with_capacity(p.vertex_count());
    for v in p.vertices() {
        let s = half_space_sum(p.vertices(), v);
        let g = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if g < 1e-9 {
            return Err(Error::DegeneratePolyhedron(format!(
                "half-space sum around ({:.6}, {:.6}, {:.6}) has near-zero norm {g:.3e}",
                v.x(),
                v.y(),
                v.z()
            )));
        }
        gammas.push(g);
        m_vectors.push(UnitVector::new(s[0], s[1], s[2])?);
    }
    let gamma_min = gammas.iter().cloned().fold(f64::INFINITY, f64::min);
    let gamma_max = gammas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let is_regular = gamma_max - gamma_min <= 1e-9
        && p.vertices()
            .iter()
            .zip(&m_vectors)
            .all(|(v, m)| v.distance(m) <= 1e-9);
    Ok(GammaProfile {
        gammas,
        m_vectors,
        gamma_min,
        gamma_max,
        is_regular,
    })
}

/// Radius of the largest origin-centered sphere inside the convex hull of
/// `vertices` (minimum facet-plane distance).
pub fn inscribed_radius_of(vertices: &[UnitVector]) -> Result<f64> {
    let points: Vec<Vec3> = vertices.iter().map(|v| v.as_array()).collect();
    let hull = convex_hull(&points)?;
    let (l, dir) = hull.min_origin_offset();
    if l <= 1e-12 {
        return Err(Error::OriginNotInterior { direction: dir });
    }
    Ok(l)
}

/// Inscribed radius of a polyhedron's hull.
pub fn inscribed_radius(p: &Polyhedron) -> Result<f64> {
    inscribed_radius_of(p.vertices())
}

/// Normalized dual: one vertex per (coplanar-merged) hull facet at the
/// normalized facet centroid.
pub fn normalized_dual(p: &Polyhedron) -> Result<Polyhedron> {
    let points = p.points();
    let hull = convex_hull(&points)?;
    let facets = hull.merged_facets(&points, DUAL_MERGE_ANGLE, 1e-9);
    let mut verts = Vec::with_capacity(facets.len());
    for f in &facets {
        let mut c = [0.0; 3];
        for &vid in &f.vertex_ids {
            c = hull::add(&c, &points[vid]);
        }
        let k = f.vertex_ids.len() as f64;
        verts.push(UnitVector::new(c[0] / k, c[1] / k, c[2] / k).map_err(|_| {
            Error::Geometry(format!(
                "facet centroid of '{}' collapsed to the origin (facet normal ({:.4}, {:.4}, {:.4}), offset {:.4})",
                p.name(),
                f.normal[0],
                f.normal[1],
                f.normal[2],
                f.offset
            ))
        })?);
    }
    Polyhedron::from_vertices(&format!("{}-dual", p.name()), verts)
}

fn dedup_union(a: &[UnitVector], b: &[UnitVector]) -> Vec<UnitVector> {
    let mut out = a.to_vec();
    for v in b {
        if !out.iter().any(|u| u.distance(v) <= VERTEX_DEDUP_TOL) {
            out.push(*v);
        }
    }
    out
}

/// Iterated family: F(0) = icosahedron, F(k+1) = F(k) union its normalized
/// dual, antipodally closed and deduplicated.
pub fn iterate_family(k: usize) -> Result<Polyhedron> {
    iterate_family_with_cap(k, FAMILY_VERTEX_CAP)
}

pub fn iterate_family_with_cap(k: usize, cap: usize) -> Result<Polyhedron> {
    let mut current = make_platonic(PlatonicSolid::Icosahedron);
    for step in 0..k {
        let dual = normalized_dual(&current)?;
        let union = dedup_union(current.vertices(), dual.vertices());
        if union.len() > cap {
            return Err(Error::Resource(format!(
                "iterated family at k={} needs {} vertices, above the cap {}",
                step + 1,
                union.len(),
                cap
            )));
        }
        current =
            Polyhedron::from_vertices(&format!("iterate:{}", step + 1), union)?.antipodal_closure();
        if current.vertex_count() > cap {
            return Err(Error::Resource(format!(
                "iterated family at k={} needs {} vertices after closure, above the cap {}",
                step + 1,
                current.vertex_count(),
                cap
            )));
        }
    }
    Ok(current)
}

/// Convex weights over a decomposition vertex set: ω_i >= 0, Σω_i = 1,
/// Σ ω_i u_i = target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexWeights {
    /// One weight per vertex of the decomposition set.
    pub weights: Vec<f64>,
    /// The decomposed vector (not necessarily unit length).
    pub target: [f64; 3],
    support: Vec<(usize, f64)>,
}

impl ConvexWeights {
    fn new(weights: Vec<f64>, target: [f64; 3]) -> Self {
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 1e-15)
            .map(|(i, w)| (i, *w))
            .collect();
        Self {
            weights,
            target,
            support,
        }
    }

    /// Nonzero entries as (vertex index, weight).
    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    /// Draw a vertex index with probability ω_i.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>();
        let mut acc = 0.0;
        for &(i, w) in &self.support {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.support.last().map(|&(i, _)| i).unwrap_or(0)
    }

    /// Check the ConvexWeights invariants against a vertex set.
    pub fn validate(&self, u: &[UnitVector]) -> Result<()> {
        if self.weights.len() != u.len() {
            return Err(Error::InvalidInput(
                "weight vector length does not match vertex set".into(),
            ));
        }
        let mut sum = 0.0;
        let mut acc = [0.0; 3];
        for (w, v) in self.weights.iter().zip(u) {
            if *w < -1e-9 {
                return Err(Error::Numerical(format!("negative weight {w}")));
            }
            sum += w;
            acc[0] += w * v.x();
            acc[1] += w * v.y();
            acc[2] += w * v.z();
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!("weights sum to {sum}, not 1")));
        }
        let r = [
            acc[0] - self.target[0],
            acc[1] - self.target[1],
            acc[2] - self.target[2],
        ];
        let res = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if res > 1e-9 {
            return Err(Error::Numerical(format!(
                "decomposition residual {res:.3e} exceeds 1e-9"
            )));
        }
        Ok(())
    }
}

/// Decompose `target` as a convex combination of `u`'s vertices.
///
/// Solved as a linear feasibility problem; the basic solution returned by
/// the simplex gives at most 4 support vertices. Deterministic for
/// identical input.
pub fn convex_decompose(
    target: [f64; 3],
    u: &[UnitVector],
    mode: LpMode,
) -> Result<ConvexWeights> {
    match mode {
        LpMode::Float => convex_decompose_impl::<f64>(target, u),
        LpMode::Rational => convex_decompose_impl::<num_rational::BigRational>(target, u),
    }
}

fn convex_decompose_impl<S: LpScalar>(target: [f64; 3], u: &[UnitVector]) -> Result<ConvexWeights> {
    let n = u.len();
    let mut a: Vec<Vec<S>> = vec![Vec::with_capacity(n); 4];
    for v in u {
        a[0].push(S::from_f64(v.x()));
        a[1].push(S::from_f64(v.y()));
        a[2].push(S::from_f64(v.z()));
        a[3].push(S::one());
    }
    let b: Vec<S> = vec![
        S::from_f64(target[0]),
        S::from_f64(target[1]),
        S::from_f64(target[2]),
        S::one(),
    ];
    match lp::solve_feasibility(&a, &b)? {
        LpOutcome::Feasible(sol) => {
            // Polish: re-solve the final basis system against the original
            // data so the residual is limited by one elimination, not by
            // the whole pivot history.
            let mut x: Vec<S> = sol.x;
            let cols: Vec<Vec<S>> = sol
                .basis
                .iter()
                .map(|&j| {
                    (0..4)
                        .map(|r| {
                            if j < n {
                                a[r][j].clone()
                            } else if j - n == r {
                                S::one()
                            } else {
                                S::zero()
                            }
                        })
                        .collect()
                })
                .collect();
            if let Some(w) = lp::solve_square_system(&cols, &b) {
                let ok = w
                    .iter()
                    .zip(&sol.basis)
                    .all(|(wi, &j)| wi.to_f64() >= -1e-9 || j >= n);
                if ok {
                    for xi in x.iter_mut() {
                        *xi = S::zero();
                    }
                    for (wi, &j) in w.iter().zip(&sol.basis) {
                        if j < n {
                            x[j] = wi.clone();
                        }
                    }
                }
            }
            let weights: Vec<f64> = x.iter().map(|v| v.to_f64().max(0.0)).collect();
            Ok(ConvexWeights::new(weights, target))
        }
        LpOutcome::Infeasible(cert) => Err(Error::DecompositionInfeasible {
            margin: cert.excess.to_f64(),
        }),
    }
}
