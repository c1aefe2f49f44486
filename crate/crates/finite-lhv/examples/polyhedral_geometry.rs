//! Tour of the geometry layer: platonic vertex sets, antipodal closure,
//! half-space profiles, inscribed radii, normalized duals and convex
//! decompositions.
//!
//! ```sh
//! cargo run --example polyhedral_geometry
//! ```

use finite_lhv::geometry::{
    convex_decompose, gamma_profile, inscribed_radius, make_platonic, normalized_dual,
    PlatonicSolid, UnitVector,
};
use finite_lhv::lp::LpMode;

fn main() -> finite_lhv::Result<()> {
    println!("solid          D  closed  gamma      inradius   dual-D");
    for solid in PlatonicSolid::ALL {
        let poly = make_platonic(solid);
        let closed = poly.antipodal_closure();
        let profile = gamma_profile(&closed)?;
        let ell = inscribed_radius(&poly)?;
        let dual = normalized_dual(&poly)?;
        println!(
            "{:12} {:3}  {:5}   {:.7}  {:.7}  {}",
            solid.name(),
            poly.vertex_count(),
            poly.antipodal_closed(),
            profile.gamma_min,
            ell,
            dual.vertex_count(),
        );
    }

    // The tetrahedron is the one platonic solid without antipodal pairs;
    // closing it doubles the vertices into the cube's set.
    let tetra = make_platonic(PlatonicSolid::Tetrahedron);
    let closed = tetra.antipodal_closure();
    println!(
        "\ntetrahedron closure: {} -> {} vertices (the cube)",
        tetra.vertex_count(),
        closed.vertex_count()
    );

    // Decompose a shrunk direction over the icosahedron: a basic solution
    // uses at most four vertices.
    let ico = make_platonic(PlatonicSolid::Icosahedron);
    let ell = inscribed_radius(&ico)?;
    let target_dir = UnitVector::new(0.3, -0.5, 0.812)?;
    let weights = convex_decompose(target_dir.scaled(ell), ico.vertices(), LpMode::Float)?;
    weights.validate(ico.vertices())?;
    println!("\ndecomposition of ell * (0.3, -0.5, 0.812):");
    for (i, w) in weights.support() {
        let v = ico.vertices()[*i];
        println!("  vertex {i:2} weight {w:.6}  ({:+.4}, {:+.4}, {:+.4})", v.x(), v.y(), v.z());
    }
    Ok(())
}
