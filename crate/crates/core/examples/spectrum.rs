//! Laplace–Beltrami spectrum of a unit sphere against the analytic `l(l+1)` values.

use mfml::mesh::shapes::icosphere;
use mfml::spectral::{build_laplacian, EigenOptions, LaplacianOptions};

fn main() -> mfml::Result<()> {
    let sphere = icosphere(3, 1.0);
    let lap = build_laplacian(&sphere, LaplacianOptions::default())?;
    let basis = lap.eigs(&EigenOptions::new(16))?;
    println!("{} vertices, area {:.4} (4π = {:.4})", sphere.num_vertices(), lap.total_area(), 4.0 * std::f64::consts::PI);
    let mut i = 0;
    for l in 0..4usize {
        let exact = (l * (l + 1)) as f64;
        let band: Vec<String> = basis.eigenvalues.iter().skip(i).take(2 * l + 1).map(|v| format!("{v:.3}")).collect();
        println!("l = {l}: exact {exact:>5.1}, computed [{}]", band.join(", "));
        i += 2 * l + 1;
    }
    println!("M-orthonormality error {:.2e}", basis.orthonormality_error());
    Ok(())
}
