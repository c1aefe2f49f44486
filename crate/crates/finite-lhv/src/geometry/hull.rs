//! 3D convex hull (quickhull) over unit-sphere vertex sets, with
//! coplanar-facet merging for dual extraction.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// A triangular hull facet: outward unit `normal`, plane `normal . x = offset`.
#[derive(Debug, Clone)]
struct Triangle {
    verts: [usize; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

/// A (possibly merged) hull facet.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Outward unit normal.
    pub normal: Vec3,
    /// Signed distance of the facet plane from the origin.
    pub offset: f64,
    /// Indices of every input point lying on the facet plane.
    pub vertex_ids: Vec<usize>,
}

/// Convex hull of a 3D point set as a triangle list plus merged facets.
#[derive(Debug, Clone)]
pub struct Hull {
    triangles: Vec<([usize; 3], Vec3, f64)>,
}

const EPS_DEGENERATE: f64 = 1e-12;
const EPS_OUTSIDE: f64 = 1e-10;

impl Hull {
    /// Minimum signed origin-to-plane distance over all facets. Positive
    /// iff the origin is strictly interior.
    pub fn min_origin_offset(&self) -> (f64, Vec3) {
        let mut best = f64::INFINITY;
        let mut dir = [0.0, 0.0, 1.0];
        for (n, off) in self.facet_planes() {
            if off < best {
                best = off;
                dir = *n;
            }
        }
        (best, dir)
    }

    /// Merge coplanar triangles (normals within `angle_tol` radians) and
    /// attach every input point lying on each merged plane (within
    /// `plane_tol`).
    pub fn merged_facets(&self, points: &[Vec3], angle_tol: f64, plane_tol: f64) -> Vec<Facet> {
        let nf = self.triangles.len();
        // Union-find over triangles, grouped via a quantized-normal grid.
        let mut parent: Vec<usize> = (0..nf).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let cell = |x: f64| -> i64 { (x / (angle_tol.max(1e-9) * 8.0)).floor() as i64 };
        let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, (_, n, _)) in self.triangles.iter().enumerate() {
            let key = (cell(n[0]), cell(n[1]), cell(n[2]));
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(others) =
                            grid.get(&(key.0 + dx, key.1 + dy, key.2 + dz))
                        {
                            for &j in others {
                                let nj = &self.triangles[j].1;
                                if norm(&sub(n, nj)) <= angle_tol {
                                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                                    if ri != rj {
                                        parent[ri] = rj;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            grid.entry(key).or_default().push(i);
        }

        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..nf {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut roots: Vec<usize> = groups.keys().copied().collect();
        roots.sort_unstable();

        let mut facets = Vec::with_capacity(roots.len());
        for r in roots {
            let tris = &groups[&r];
            // Average plane over the group.
            let mut n = [0.0, 0.0, 0.0];
            let mut off = 0.0;
            for &t in tris {
                n = add(&n, &self.triangles[t].1);
                off += self.triangles[t].2;
            }
            let nn = norm(&n);
            let n = scale(&n, 1.0 / nn);
            let off = off / tris.len() as f64;
            let mut vertex_ids = Vec::new();
            for (pi, p) in points.iter().enumerate() {
                if (dot(&n, p) - off).abs() <= plane_tol {
                    vertex_ids.push(pi);
                }
            }
            facets.push(Facet {
                normal: n,
                offset: off,
                vertex_ids,
            });
        }
        facets
    }

    /// All facet planes (unmerged triangles) as (normal, offset).
    pub fn facet_planes(&self) -> impl Iterator<Item = (&Vec3, f64)> {
        self.triangles.iter().map(|(_, n, off)| (n, *off))
    }
}

fn triangle_plane(points: &[Vec3], a: usize, b: usize, c: usize) -> (Vec3, f64) {
    let n = cross(&sub(&points[b], &points[a]), &sub(&points[c], &points[a]));
    let len = norm(&n);
    let n = scale(&n, 1.0 / len);
    (n, dot(&n, &points[a]))
}

/// Quickhull over `points`. Fails with a geometry error when the set is
/// degenerate (fewer than 4 points in general position).
pub fn convex_hull(points: &[Vec3]) -> Result<Hull> {
    if points.len() < 4 {
        return Err(Error::Geometry(format!(
            "convex hull needs at least 4 points, got {}",
            points.len()
        )));
    }

    // Initial simplex: extreme along x, farthest pair, farthest from line,
    // farthest from plane. All picks deterministic.
    let p0 = (0..points.len())
        .min_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap())
        .unwrap();
    let p1 = (0..points.len())
        .max_by(|&a, &b| {
            let da = norm(&sub(&points[a], &points[p0]));
            let db = norm(&sub(&points[b], &points[p0]));
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    if norm(&sub(&points[p1], &points[p0])) <= EPS_DEGENERATE {
        return Err(Error::Geometry("all points coincide".into()));
    }
    let axis = sub(&points[p1], &points[p0]);
    let p2 = (0..points.len())
        .max_by(|&a, &b| {
            let da = norm(&cross(&axis, &sub(&points[a], &points[p0])));
            let db = norm(&cross(&axis, &sub(&points[b], &points[p0])));
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    if norm(&cross(&axis, &sub(&points[p2], &points[p0]))) <= EPS_DEGENERATE {
        return Err(Error::Geometry("points are collinear".into()));
    }
    let (n012, off012) = triangle_plane(points, p0, p1, p2);
    let p3 = (0..points.len())
        .max_by(|&a, &b| {
            let da = (dot(&n012, &points[a]) - off012).abs();
            let db = (dot(&n012, &points[b]) - off012).abs();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    if (dot(&n012, &points[p3]) - off012).abs() <= EPS_DEGENERATE {
        return Err(Error::Geometry("points are coplanar".into()));
    }

    let centroid = scale(
        &add(
            &add(&points[p0], &points[p1]),
            &add(&points[p2], &points[p3]),
        ),
        0.25,
    );

    let mut tris: Vec<Triangle> = Vec::new();
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();

    let push_face = |tris: &mut Vec<Triangle>,
                         edge_map: &mut HashMap<(usize, usize), usize>,
                         a: usize,
                         b: usize,
                         c: usize,
                         interior: &Vec3| {
        let (mut n, mut off) = triangle_plane(points, a, b, c);
        let (mut a, mut b) = (a, b);
        if dot(&n, interior) - off > 0.0 {
            std::mem::swap(&mut a, &mut b);
            n = scale(&n, -1.0);
            off = -off;
        }
        let id = tris.len();
        tris.push(Triangle {
            verts: [a, b, c],
            normal: n,
            offset: off,
            outside: Vec::new(),
            alive: true,
        });
        for (u, v) in [(a, b), (b, c), (c, a)] {
            edge_map.insert((u, v), id);
        }
        id
    };

    for (a, b, c) in [(p0, p1, p2), (p0, p1, p3), (p0, p2, p3), (p1, p2, p3)] {
        push_face(&mut tris, &mut edge_map, a, b, c, &centroid);
    }

    // Assign conflict points.
    let mut initial = [p0, p1, p2, p3];
    initial.sort_unstable();
    for pi in 0..points.len() {
        if initial.contains(&pi) {
            continue;
        }
        for t in tris.iter_mut() {
            if dot(&t.normal, &points[pi]) - t.offset > EPS_OUTSIDE {
                t.outside.push(pi);
                break;
            }
        }
    }

    let mut pending: Vec<usize> = (0..tris.len()).collect();
    while let Some(fi) = pending.pop() {
        if !tris[fi].alive || tris[fi].outside.is_empty() {
            continue;
        }
        // Farthest conflict point of this face.
        let p = {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for &q in &tris[fi].outside {
                let d = dot(&tris[fi].normal, &points[q]) - tris[fi].offset;
                if d > best.0 {
                    best = (d, q);
                }
            }
            best.1
        };

        // Flood fill the visible region from fi.
        let mut visible = vec![fi];
        let mut seen: HashMap<usize, bool> = HashMap::new();
        seen.insert(fi, true);
        let mut stack = vec![fi];
        while let Some(f) = stack.pop() {
            let [a, b, c] = tris[f].verts;
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if let Some(&g) = edge_map.get(&(v, u)) {
                    if tris[g].alive && !seen.contains_key(&g) {
                        let d = dot(&tris[g].normal, &points[p]) - tris[g].offset;
                        if d > EPS_OUTSIDE {
                            seen.insert(g, true);
                            visible.push(g);
                            stack.push(g);
                        } else {
                            seen.insert(g, false);
                        }
                    }
                }
            }
        }

        // Horizon: directed edges of visible faces whose twin is hidden.
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &f in &visible {
            let [a, b, c] = tris[f].verts;
            for (u, v) in [(a, b), (b, c), (c, a)] {
                match edge_map.get(&(v, u)) {
                    Some(&g) if tris[g].alive && seen.get(&g) == Some(&true) => {}
                    _ => horizon.push((u, v)),
                }
            }
        }

        // Collect orphaned conflict points, kill visible faces.
        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            orphans.append(&mut tris[f].outside);
            tris[f].alive = false;
            let [a, b, c] = tris[f].verts;
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if edge_map.get(&(u, v)) == Some(&f) {
                    edge_map.remove(&(u, v));
                }
            }
        }
        orphans.sort_unstable();
        orphans.dedup();

        // Build the cone of new faces from p over the horizon.
        let mut new_faces = Vec::new();
        for (u, v) in horizon {
            let id = push_face(&mut tris, &mut edge_map, u, v, p, &centroid);
            new_faces.push(id);
        }

        // Reassign orphans.
        for q in orphans {
            if q == p {
                continue;
            }
            for &f in &new_faces {
                if dot(&tris[f].normal, &points[q]) - tris[f].offset > EPS_OUTSIDE {
                    tris[f].outside.push(q);
                    break;
                }
            }
        }
        pending.extend(new_faces.iter().copied());
    }

    let triangles = tris
        .into_iter()
        .filter(|t| t.alive)
        .map(|t| (t.verts, t.normal, t.offset))
        .collect();
    Ok(Hull { triangles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_points() -> Vec<Vec3> {
        let s = 1.0 / 3.0_f64.sqrt();
        let mut pts = Vec::new();
        for &x in &[-s, s] {
            for &y in &[-s, s] {
                for &z in &[-s, s] {
                    pts.push([x, y, z]);
                }
            }
        }
        pts
    }

    #[test]
    fn cube_hull_merges_to_six_facets() {
        let pts = cube_points();
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.facet_planes().count(), 12);
        let facets = hull.merged_facets(&pts, 1e-7, 1e-9);
        assert_eq!(facets.len(), 6);
        for f in &facets {
            assert_eq!(f.vertex_ids.len(), 4);
            assert!((f.offset - 1.0 / 3.0_f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn octahedron_hull() {
        let pts: Vec<Vec3> = vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.facet_planes().count(), 8);
        let (l, _) = hull.min_origin_offset();
        assert!((l - 1.0 / 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coplanar_points_rejected() {
        let pts: Vec<Vec3> = vec![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ];
        assert!(convex_hull(&pts).is_err());
    }
}
