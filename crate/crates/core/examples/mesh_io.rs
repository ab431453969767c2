//! Reading and writing OFF/OBJ meshes and the validation errors they raise.

use mfml::mesh::shapes::box_mesh;
use mfml::mesh::{parse_mesh, MeshFormat};

fn main() -> mfml::Result<()> {
    let cube = box_mesh(4, [2.0, 2.0, 2.0]);
    let off = cube.to_off();
    let back = parse_mesh(off.as_bytes(), MeshFormat::Off)?;
    println!(
        "box: {} vertices, {} faces, area {:.3}, hash {}",
        back.num_vertices(),
        back.num_faces(),
        back.surface_area(),
        &back.content_hash()[..12]
    );
    let obj = parse_mesh(cube.to_obj().as_bytes(), MeshFormat::Obj)?;
    println!("OBJ round trip preserves the hash: {}", obj.content_hash() == back.content_hash());

    let broken = "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 7\n";
    match parse_mesh(broken.as_bytes(), MeshFormat::Off) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
