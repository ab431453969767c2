//! Procedural meshes used by tests, examples and the synthetic dataset generator.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{cross, dot, sub, Point3, TriangleMesh};

fn build(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> TriangleMesh {
    TriangleMesh::new(vertices, faces).expect("generator produced an invalid mesh")
}

/// Regular tetrahedron with unit edge length.
pub fn tetrahedron() -> TriangleMesh {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let v = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    build(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Subdivided icosahedron projected to a sphere. `subdivisions = 3` gives 642 vertices.
pub fn icosphere(subdivisions: usize, radius: f64) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let unit = |p: Point3| {
        let n = dot(p, p).sqrt();
        [p[0] / n, p[1] / n, p[2] / n]
    };
    v.iter_mut().for_each(|p| *p = unit(*p));
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Point3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (v[a], v[b]);
                v.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for &[a, b, c] in &f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    let v = v
        .into_iter()
        .map(|p| [p[0] * radius, p[1] * radius, p[2] * radius])
        .collect();
    build(v, f)
}

/// Closed box surface with `n` segments per edge, centred at the origin.
pub fn box_mesh(n: usize, size: [f64; 3]) -> TriangleMesh {
    assert!(n >= 1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut v = Vec::new();
    let mut f = Vec::new();
    let mut vid = |k: [usize; 3], v: &mut Vec<Point3>| {
        *index.entry(k).or_insert_with(|| {
            v.push([
                (k[0] as f64 / n as f64 - 0.5) * size[0],
                (k[1] as f64 / n as f64 - 0.5) * size[1],
                (k[2] as f64 / n as f64 - 0.5) * size[2],
            ]);
            v.len() - 1
        })
    };
    for axis in 0..3 {
        let (u_ax, v_ax) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: usize, dj: usize| {
                        let mut k = [0; 3];
                        k[axis] = side;
                        k[u_ax] = i + di;
                        k[v_ax] = j + dj;
                        k
                    };
                    let q = [
                        vid(corner(0, 0), &mut v),
                        vid(corner(1, 0), &mut v),
                        vid(corner(1, 1), &mut v),
                        vid(corner(0, 1), &mut v),
                    ];
                    f.push([q[0], q[1], q[2]]);
                    f.push([q[0], q[2], q[3]]);
                }
            }
        }
    }
    orient_outward(&v, &mut f, [0.0; 3]);
    build(v, f)
}

/// Capped cylinder along +z from z = 0 to z = `height`.
///
/// Caps are built from concentric rings so that no triangle is much thinner than the
/// side wall triangles.
pub fn cylinder(radius: f64, height: f64, rings: usize, segments: usize, cap_rings: usize) -> TriangleMesh {
    assert!(rings >= 1 && segments >= 3 && cap_rings >= 1);
    let mut v: Vec<Point3> = Vec::new();
    let mut f: Vec<[usize; 3]> = Vec::new();
    let ring_at = |r: f64, z: f64, v: &mut Vec<Point3>| {
        let start = v.len();
        for s in 0..segments {
            let a = 2.0 * PI * s as f64 / segments as f64;
            v.push([r * a.cos(), r * a.sin(), z]);
        }
        start
    };
    let stitch = |a: usize, b: usize, f: &mut Vec<[usize; 3]>| {
        for s in 0..segments {
            let s1 = (s + 1) % segments;
            f.push([a + s, a + s1, b + s1]);
            f.push([a + s, b + s1, b + s]);
        }
    };
    let side: Vec<usize> = (0..=rings)
        .map(|r| ring_at(radius, height * r as f64 / rings as f64, &mut v))
        .collect();
    for w in side.windows(2) {
        stitch(w[0], w[1], &mut f);
    }
    for (z, outer) in [(0.0, side[0]), (height, side[rings])] {
        let mut prev = outer;
        for c in 1..cap_rings {
            let r = radius * (1.0 - c as f64 / cap_rings as f64);
            let ring = ring_at(r, z, &mut v);
            stitch(prev, ring, &mut f);
            prev = ring;
        }
        v.push([0.0, 0.0, z]);
        let centre = v.len() - 1;
        for s in 0..segments {
            f.push([prev + s, prev + (s + 1) % segments, centre]);
        }
    }
    orient_outward(&v, &mut f, [0.0, 0.0, height / 2.0]);
    build(v, f)
}

/// Bends the part of a z-aligned shape above `z0` in the y–z plane.
///
/// The band `[z0, z0 + band]` follows a circular arc of total turn `angle`; everything
/// above it is carried along rigidly. The centreline length is preserved.
pub fn bend(mesh: &TriangleMesh, z0: f64, band: f64, angle: f64) -> TriangleMesh {
    if angle == 0.0 {
        return mesh.clone();
    }
    let rc = band / angle;
    mesh.map_vertices(|[x, y, z]| {
        if z <= z0 {
            return [x, y, z];
        }
        let (theta, extra) = if z < z0 + band {
            (angle * (z - z0) / band, 0.0)
        } else {
            (angle, z - z0 - band)
        };
        let (s, c) = theta.sin_cos();
        // point on the arc, then continue along the rotated axis
        let yb = rc - (rc - y) * c;
        let zb = z0 + (rc - y) * s;
        [x, yb + extra * s, zb + extra * c]
    })
}

/// Flat open `width × height` rectangle split into `nx × ny` cells, two triangles each.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> TriangleMesh {
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            v.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut f = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(v, f)
}

/// Rotation matrix from an axis (need not be unit) and an angle.
pub fn rotation(axis: Point3, angle: f64) -> [[f64; 3]; 3] {
    let n = dot(axis, axis).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

pub fn rigid_transform(mesh: &TriangleMesh, rot: [[f64; 3]; 3], shift: Point3) -> TriangleMesh {
    mesh.map_vertices(|p| {
        let mut q = shift;
        for (r, qi) in rot.iter().zip(q.iter_mut()) {
            *qi += r[0] * p[0] + r[1] * p[1] + r[2] * p[2];
        }
        q
    })
}

fn orient_outward(v: &[Point3], f: &mut [[usize; 3]], centre: Point3) {
    for t in f.iter_mut() {
        let n = cross(sub(v[t[1]], v[t[0]]), sub(v[t[2]], v[t[0]]));
        let c = [
            (v[t[0]][0] + v[t[1]][0] + v[t[2]][0]) / 3.0,
            (v[t[0]][1] + v[t[1]][1] + v[t[2]][1]) / 3.0,
            (v[t[0]][2] + v[t[1]][2] + v[t[2]][2]) / 3.0,
        ];
        if dot(n, sub(c, centre)) < 0.0 {
            t.swap(1, 2);
        }
    }
}
