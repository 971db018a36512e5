use std::collections::HashMap;

use nalgebra::Vector3;

use super::tables::TRIANGLE_TABLE;
use super::VoxelGrid;
use crate::geometry::Mesh;

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Triangulates the zero level set of the volume.
///
/// Only cubes whose eight corners are observed and strictly inside the
/// truncation band are meshed, so unobserved space and depth discontinuities
/// leave open boundaries. Vertices are shared between neighboring cubes.
pub fn extract_mesh(grid: &VoxelGrid) -> Mesh<f64> {
    let config = grid.config();
    let [nx, ny, nz] = config.dims;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let ids = CORNERS.map(|[a, b, c]| grid.index(i + a, j + b, k + c));
                if ids.iter().any(|id| !(grid.weight_values()[*id] > 0.0)) {
                    continue;
                }
                let values = ids.map(|id| grid.tsdf_values()[id]);
                if values.iter().any(|v| v.abs() >= 1.0) {
                    continue;
                }
                let case = values
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (bit, v)| if *v < 0.0 { acc | (1 << bit) } else { acc });
                if case == 0 || case == 255 {
                    continue;
                }
                let mut vertex_on = |edge: usize| -> usize {
                    let [a, b] = EDGES[edge];
                    let key = (ids[a].min(ids[b]), ids[a].max(ids[b]));
                    *edge_vertex.entry(key).or_insert_with(|| {
                        let pa = corner_position(grid, i, j, k, a);
                        let pb = corner_position(grid, i, j, k, b);
                        let t = values[a] / (values[a] - values[b]);
                        vertices.push(pa + (pb - pa) * t);
                        vertices.len() - 1
                    })
                };
                for tri in TRIANGLE_TABLE[case].chunks(3) {
                    if tri[0] < 0 {
                        break;
                    }
                    let t = [tri[0], tri[1], tri[2]].map(|e| vertex_on(e as usize));
                    triangles.push(t);
                }
            }
        }
    }
    drop_degenerate(vertices, triangles, config.voxel_size)
}

fn corner_position(grid: &VoxelGrid, i: usize, j: usize, k: usize, corner: usize) -> Vector3<f64> {
    let [a, b, c] = CORNERS[corner];
    grid.config().position(i + a, j + b, k + c)
}

/// Removes zero-area triangles and the vertices only they referenced.
fn drop_degenerate(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>, voxel_size: f64) -> Mesh<f64> {
    let min_area = 1e-12 * voxel_size * voxel_size;
    let kept: Vec<[usize; 3]> = triangles
        .into_iter()
        .filter(|[a, b, c]| {
            let (pa, pb, pc) = (vertices[*a], vertices[*b], vertices[*c]);
            a != b && b != c && a != c && (pb - pa).cross(&(pc - pa)).norm() * 0.5 > min_area
        })
        .collect();
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut compact = Vec::new();
    let triangles = kept
        .iter()
        .map(|t| {
            t.map(|v| {
                if remap[v] == usize::MAX {
                    remap[v] = compact.len();
                    compact.push(vertices[v]);
                }
                remap[v]
            })
        })
        .collect();
    Mesh {
        vertices: compact,
        triangles,
    }
}
