//! The quantitative landscape: the two-bit LHS bound, the platonic-solid
//! visibility table, and the data behind the shared-randomness and
//! communication trade-off curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    inscribed_radius_of, iterate_family_with_cap, make_platonic, Polyhedron, PlatonicSolid,
    UnitVector, FAMILY_VERTEX_CAP,
};
use crate::protocols::{protocol1_visibility, Protocol2, Protocol4};
use crate::quantum::{is_entangled_npt, werner_state};

/// One point of a resource/visibility trade-off curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Resource quantity: shared-randomness bits (fig 1) or mean
    /// transmitted label (fig 2).
    pub resource: f64,
    pub alpha: f64,
    pub polyhedron: String,
    pub protocol: String,
    pub n: Option<usize>,
    pub vertex_count: usize,
}

/// Fixed triangulated sphere used as the deterministic search grid.
struct IcoSphere {
    vertices: Vec<UnitVector>,
}

impl IcoSphere {
    fn new(level: usize) -> Self {
        // Icosahedron faces in the canonical orientation, by adjacency.
        let base = make_platonic(PlatonicSolid::Icosahedron);
        let verts: Vec<[f64; 3]> = base.vertices().iter().map(|v| v.as_array()).collect();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        let adj = |i: usize, j: usize| -> bool {
            let d = base.vertices()[i].dot(&base.vertices()[j]);
            (d - 1.0 / 5f64.sqrt()).abs() < 1e-9
        };
        for i in 0..12 {
            for j in (i + 1)..12 {
                if !adj(i, j) {
                    continue;
                }
                for k in (j + 1)..12 {
                    if adj(i, k) && adj(j, k) {
                        faces.push([i, j, k]);
                    }
                }
            }
        }
        debug_assert_eq!(faces.len(), 20);

        let mut points: Vec<[f64; 3]> = verts;
        let mut cache: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for _ in 0..level {
            let mut next_faces = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let mut mid = |u: usize, v: usize, points: &mut Vec<[f64; 3]>| -> usize {
                    let key = (u.min(v), u.max(v));
                    if let Some(&m) = cache.get(&key) {
                        return m;
                    }
                    let p = [
                        points[u][0] + points[v][0],
                        points[u][1] + points[v][1],
                        points[u][2] + points[v][2],
                    ];
                    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    points.push([p[0] / n, p[1] / n, p[2] / n]);
                    cache.insert(key, points.len() - 1);
                    points.len() - 1
                };
                let ab = mid(a, b, &mut points);
                let bc = mid(b, c, &mut points);
                let ca = mid(c, a, &mut points);
                next_faces.push([a, ab, ca]);
                next_faces.push([b, bc, ab]);
                next_faces.push([c, ca, bc]);
                next_faces.push([ab, bc, ca]);
            }
            faces = next_faces;
        }
        let vertices = points
            .into_iter()
            .map(|p| UnitVector::new(p[0], p[1], p[2]).unwrap())
            .collect();
        Self { vertices }
    }
}

fn grid() -> &'static IcoSphere {
    use std::sync::OnceLock;
    static GRID: OnceLock<IcoSphere> = OnceLock::new();
    GRID.get_or_init(|| IcoSphere::new(6))
}

fn coverage(verts: &[UnitVector], a: &UnitVector) -> f64 {
    verts
        .iter()
        .map(|v| v.dot(a))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn tangent_basis(p: &UnitVector) -> [UnitVector; 2] {
    let helper = if p.z().abs() < 0.9 {
        UnitVector::new(0.0, 0.0, 1.0).unwrap()
    } else {
        UnitVector::new(1.0, 0.0, 0.0).unwrap()
    };
    let t1 = {
        let c = [
            p.y() * helper.z() - p.z() * helper.y(),
            p.z() * helper.x() - p.x() * helper.z(),
            p.x() * helper.y() - p.y() * helper.x(),
        ];
        UnitVector::new(c[0], c[1], c[2]).unwrap()
    };
    let t2 = {
        let c = [
            p.y() * t1.z() - p.z() * t1.y(),
            p.z() * t1.x() - p.x() * t1.z(),
            p.x() * t1.y() - p.y() * t1.x(),
        ];
        UnitVector::new(c[0], c[1], c[2]).unwrap()
    };
    [t1, t2]
}

fn rotate_towards(p: &UnitVector, dir: &UnitVector, t: f64) -> UnitVector {
    let (c, s) = (t.cos(), t.sin());
    UnitVector::new(
        c * p.x() + s * dir.x(),
        c * p.y() + s * dir.y(),
        c * p.z() + s * dir.z(),
    )
    .unwrap()
}

/// Golden-section minimization of f along a great-circle arc through p.
fn golden_arc_min<F: Fn(&UnitVector) -> f64>(
    f: &F,
    p: &UnitVector,
    dir: &UnitVector,
    half_width: f64,
) -> (UnitVector, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (-half_width, half_width);
    let mut t1 = hi - INV_PHI * (hi - lo);
    let mut t2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(&rotate_towards(p, dir, t1));
    let mut f2 = f(&rotate_towards(p, dir, t2));
    for _ in 0..40 {
        if f1 < f2 {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - INV_PHI * (hi - lo);
            f1 = f(&rotate_towards(p, dir, t1));
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + INV_PHI * (hi - lo);
            f2 = f(&rotate_towards(p, dir, t2));
        }
    }
    let t = (lo + hi) / 2.0;
    let q = rotate_towards(p, dir, t);
    let fq = f(&q);
    (q, fq)
}

/// Upper bound on the visibility reachable by a four-state LHS model with
/// hidden-state Bloch vectors `verts`: the worst-case directional coverage
/// min over the sphere of max over vertices of v . a.
///
/// Deterministic icosphere seeding (subdivision level 6) followed by
/// coordinate-free golden-section refinement on the sphere; the value is
/// resolved to about 1e-6.
pub fn lhs_two_bit_bound(verts: &[UnitVector]) -> Result<f64> {
    if verts.len() != 4 {
        return Err(Error::InvalidInput(format!(
            "two-bit bound takes exactly 4 vertices, got {}",
            verts.len()
        )));
    }
    let f = |a: &UnitVector| coverage(verts, a);
    let g = grid();
    let seed = g
        .vertices
        .par_iter()
        .map(|a| (f(a), a))
        .min_by(|x, y| x.0.partial_cmp(&y.0).unwrap())
        .map(|(v, a)| (v, *a))
        .unwrap();
    let mut p = seed.1;
    let mut best = seed.0;
    // Grid spacing at level 6 is ~0.02 rad. The objective is a max of
    // linear functions, so descent valleys are nonsmooth; searching the
    // diagonals as well keeps golden-section from jamming on a ridge.
    let mut h = 0.03;
    for _ in 0..90 {
        let [t1, t2] = tangent_basis(&p);
        let diag1 = UnitVector::new(
            t1.x() + t2.x(),
            t1.y() + t2.y(),
            t1.z() + t2.z(),
        )
        .unwrap();
        let diag2 = UnitVector::new(
            t1.x() - t2.x(),
            t1.y() - t2.y(),
            t1.z() - t2.z(),
        )
        .unwrap();
        for dir in [t1, t2, diag1, diag2] {
            let (q, fq) = golden_arc_min(&f, &p, &dir, h);
            if fq < best {
                best = fq;
                p = q;
            }
        }
        h *= 0.8;
        if h < 1e-9 {
            break;
        }
    }
    Ok(best)
}

/// One row of the platonic-solid table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1Row {
    pub solid: String,
    pub bits: f64,
    pub alpha: f64,
    pub entangled: bool,
}

/// Visibility, shared-randomness cost and separability verdict for the
/// four antipodally closed platonic solids.
pub fn table1() -> Result<Vec<Table1Row>> {
    let mut rows = Vec::new();
    for solid in [
        PlatonicSolid::Octahedron,
        PlatonicSolid::Cube,
        PlatonicSolid::Dodecahedron,
        PlatonicSolid::Icosahedron,
    ] {
        let poly = make_platonic(solid);
        let alpha = protocol1_visibility(&poly)?;
        let verdict = is_entangled_npt(&werner_state(alpha)?)?;
        rows.push(Table1Row {
            solid: solid.name().to_string(),
            bits: (poly.vertex_count() as f64).log2(),
            alpha,
            entangled: verdict.entangled,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig1Curve {
    pub points: Vec<CurvePoint>,
    /// Visibility supremum of the protocol family.
    pub asymptote: f64,
    /// True when the iteration cap cut the sweep short.
    pub truncated: bool,
}

/// Shared-randomness trade-off: the separable anchor plus the iterated
/// polyhedron family under the generalized protocol.
pub fn fig1_curve(max_iterations: usize) -> Result<Fig1Curve> {
    fig1_curve_with_cap(max_iterations, FAMILY_VERTEX_CAP)
}

pub fn fig1_curve_with_cap(max_iterations: usize, cap: usize) -> Result<Fig1Curve> {
    let mut points = vec![CurvePoint {
        resource: 2.0,
        alpha: 1.0 / 3.0,
        polyhedron: "separable-anchor".into(),
        protocol: "separable".into(),
        n: None,
        vertex_count: 4,
    }];
    let mut truncated = false;
    for k in 0..=max_iterations {
        let poly = match iterate_family_with_cap(k, cap) {
            Ok(p) => p,
            Err(Error::Resource(_)) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let p2 = Protocol2::new(poly.clone())?;
        points.push(CurvePoint {
            resource: (poly.vertex_count() as f64).log2(),
            alpha: p2.visibility(),
            polyhedron: poly.name().to_string(),
            protocol: "protocol2".into(),
            n: None,
            vertex_count: poly.vertex_count(),
        });
    }
    Ok(Fig1Curve {
        points,
        asymptote: 0.5,
        truncated,
    })
}

/// Communication trade-off: mean transmitted label against visibility for
/// the selection protocol at depths `n_range`.
pub fn fig2_curve(poly: &Polyhedron, n_range: &[usize]) -> Result<Vec<CurvePoint>> {
    if n_range.iter().any(|&n| n < 1 || n > 32) {
        return Err(Error::InvalidInput(
            "selection depths must lie in 1..=32".into(),
        ));
    }
    n_range
        .iter()
        .map(|&n| {
            let p4 = Protocol4::new(poly.clone(), n)?;
            Ok(CurvePoint {
                resource: p4.avg_communication(),
                alpha: p4.visibility(),
                polyhedron: poly.name().to_string(),
                protocol: "protocol4".into(),
                n: Some(n),
                vertex_count: poly.vertex_count(),
            })
        })
        .collect()
}

/// Visibility of the selection protocol along the iterated family at fixed
/// depth n, for the dense-set extrapolation.
pub fn protocol4_family_sweep(n: usize, max_iterations: usize) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for k in 0..=max_iterations {
        let poly = match iterate_family_with_cap(k, FAMILY_VERTEX_CAP) {
            Ok(p) => p,
            Err(Error::Resource(_)) => break,
            Err(e) => return Err(e),
        };
        let p4 = Protocol4::new(poly.clone(), n)?;
        out.push(CurvePoint {
            resource: p4.avg_communication(),
            alpha: p4.visibility(),
            polyhedron: poly.name().to_string(),
            protocol: "protocol4".into(),
            n: Some(n),
            vertex_count: poly.vertex_count(),
        });
    }
    Ok(out)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with frozen schema `bits,alpha,D,poly_id`.
pub fn fig1_to_csv(curve: &Fig1Curve) -> String {
    let mut s = String::from("bits,alpha,D,poly_id\n");
    for p in &curve.points {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(p.resource),
            fmt17(p.alpha),
            p.vertex_count,
            p.polyhedron
        ));
    }
    s
}

/// CSV with frozen schema `avg_comm,alpha,n,D,poly_id`.
pub fn fig2_to_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("avg_comm,alpha,n,D,poly_id\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(p.resource),
            fmt17(p.alpha),
            p.n.unwrap_or(0),
            p.vertex_count,
            p.polyhedron
        ));
    }
    s
}

/// CSV with frozen schema `solid,bits,alpha,verdict`.
pub fn table1_to_csv(rows: &[Table1Row]) -> String {
    let mut s = String::from("solid,bits,alpha,verdict\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.solid,
            fmt17(r.bits),
            fmt17(r.alpha),
            if r.entangled { "entangled" } else { "separable" }
        ));
    }
    s
}

/// Gnuplot script rendering the two trade-off curves from their CSVs.
pub fn gnuplot_script(fig1_csv: &str, fig2_csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key left top\n\
         set terminal pngcairo size 900,600\n\
         set output 'fig1.png'\n\
         set xlabel 'shared randomness [bits]'\n\
         set ylabel 'visibility'\n\
         plot '{fig1_csv}' every ::1 using 1:2 with linespoints title 'finite-shared-randomness models', 0.5 with lines dashtype 2 title 'dense-set limit'\n\
         set output 'fig2.png'\n\
         set xlabel 'mean communication'\n\
         plot '{fig2_csv}' every ::1 using 1:2 with linespoints title 'selection protocol'\n"
    )
}

/// Inscribed radius of the derived vertex set, exposed for curve checks.
pub fn derived_inscribed_radius(poly: &Polyhedron) -> Result<f64> {
    let profile = crate::geometry::gamma_profile(poly)?;
    inscribed_radius_of(&profile.m_vectors)
}
