//! Point and global descriptors of a cylinder before and after an isometric bend.

use mfml::mesh::shapes::{bend, cylinder};
use mfml::signatures::{compute_shape_dna, compute_sihks, compute_wks, ShapeDnaParams, SiHksParams, WksParams};
use mfml::spectral::{build_laplacian, EigenOptions, LaplacianOptions};

fn main() -> mfml::Result<()> {
    let straight = cylinder(40.0, 500.0, 24, 24, 3);
    let bent = bend(&straight, 150.0, 200.0, std::f64::consts::FRAC_PI_2);
    let mut rows = Vec::new();
    for (name, mesh) in [("straight", &straight), ("bent", &bent)] {
        let basis = build_laplacian(mesh, LaplacianOptions::default())?.eigs(&EigenOptions::new(100))?;
        let wks = compute_wks(&basis, &WksParams::default())?;
        let sihks = compute_sihks(&basis, &SiHksParams::default())?;
        let dna = compute_shape_dna(&basis, &ShapeDnaParams::default())?;
        println!(
            "{name:>8}: WKS {}x{}, siHKS {}x{}, ShapeDNA[1..4] = {:.2?}",
            wks.num_points(),
            wks.dim(),
            sihks.num_points(),
            sihks.dim(),
            &dna.values[1..4]
        );
        rows.push((wks.values, dna.values));
    }
    let wks_change = (&rows[0].0 - &rows[1].0).norm() / rows[0].0.norm();
    let dna_change: f64 = rows[0].1.iter().zip(&rows[1].1).map(|(a, b)| ((a - b) / a.max(1e-12)).abs()).skip(1).fold(0.0, f64::max);
    println!("relative WKS change under bending {wks_change:.3}, max ShapeDNA change {dna_change:.3}");
    Ok(())
}
