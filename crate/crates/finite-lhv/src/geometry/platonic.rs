//! Platonic solid vertex sets in fixed canonical orientations.
//!
//! Orientations (all vertices normalized to the unit sphere):
//! - tetrahedron: even sign patterns of (1,1,1)
//! - octahedron: coordinate axes
//! - cube: all sign patterns of (1,1,1)
//! - icosahedron: cyclic permutations of (0, ±1, ±φ)
//! - dodecahedron: all sign patterns of (1,1,1) plus cyclic permutations
//!   of (0, ±φ, ±1/φ), which aligns its vertices with the icosahedron's
//!   facet centers
//!
//! Every downstream scalar (γ, ℓ, visibilities) is orientation-invariant;
//! the canonical orientations only pin vertex order and file output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Polyhedron, UnitVector};

const PHI: f64 = 1.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlatonicSolid {
    Tetrahedron,
    Octahedron,
    Cube,
    Icosahedron,
    Dodecahedron,
}

impl PlatonicSolid {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "tetrahedron" => Ok(Self::Tetrahedron),
            "octahedron" => Ok(Self::Octahedron),
            "cube" => Ok(Self::Cube),
            "icosahedron" => Ok(Self::Icosahedron),
            "dodecahedron" => Ok(Self::Dodecahedron),
            other => Err(Error::InvalidInput(format!(
                "unknown platonic solid '{other}' (expected tetrahedron, octahedron, cube, icosahedron or dodecahedron)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Tetrahedron => "tetrahedron",
            Self::Octahedron => "octahedron",
            Self::Cube => "cube",
            Self::Icosahedron => "icosahedron",
            Self::Dodecahedron => "dodecahedron",
        }
    }

    pub const ALL: [PlatonicSolid; 5] = [
        Self::Tetrahedron,
        Self::Octahedron,
        Self::Cube,
        Self::Icosahedron,
        Self::Dodecahedron,
    ];
}

impl std::str::FromStr for PlatonicSolid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}

impl std::fmt::Display for PlatonicSolid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn sign_patterns(base: [f64; 3]) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for &sx in &[1.0, -1.0] {
        for &sy in &[1.0, -1.0] {
            for &sz in &[1.0, -1.0] {
                out.push([sx * base[0], sy * base[1], sz * base[2]]);
            }
        }
    }
    out
}

/// Vertex set of a Platonic solid, normalized to the unit sphere.
pub fn make_platonic(solid: PlatonicSolid) -> Polyhedron {
    let raw: Vec<[f64; 3]> = match solid {
        PlatonicSolid::Tetrahedron => vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ],
        PlatonicSolid::Octahedron => vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ],
        PlatonicSolid::Cube => sign_patterns([1.0, 1.0, 1.0]),
        PlatonicSolid::Icosahedron => {
            let mut v = Vec::new();
            for &s1 in &[1.0, -1.0] {
                for &s2 in &[1.0, -1.0] {
                    v.push([0.0, s1, s2 * PHI]);
                    v.push([s1, s2 * PHI, 0.0]);
                    v.push([s1 * PHI, 0.0, s2]);
                }
            }
            v
        }
        PlatonicSolid::Dodecahedron => {
            let mut v = sign_patterns([1.0, 1.0, 1.0]);
            for &s1 in &[1.0, -1.0] {
                for &s2 in &[1.0, -1.0] {
                    v.push([0.0, s1 * PHI, s2 / PHI]);
                    v.push([s2 / PHI, 0.0, s1 * PHI]);
                    v.push([s1 * PHI, s2 / PHI, 0.0]);
                }
            }
            v
        }
    };
    let vertices: Vec<UnitVector> = raw
        .into_iter()
        .map(|p| UnitVector::new(p[0], p[1], p[2]).expect("platonic vertices are nonzero"))
        .collect();
    Polyhedron::from_vertices(solid.name(), vertices).expect("platonic solids are valid")
}
