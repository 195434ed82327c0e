//! Cartesian matrix grids and two-point flux-approximation transmissibilities.

use crate::error::{FracflowError, Result};

/// An internal face joining two axis-adjacent cells. `a < b` always holds
/// and `axis` is the direction of the face normal (0 = x, 1 = y, 2 = z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub a: usize,
    pub b: usize,
    pub area: f64,
    pub axis: usize,
}

/// Uniform Cartesian grid. Immutable after construction.
#[derive(Debug, Clone)]
pub struct StructuredGrid {
    dims: [usize; 3],
    cell_size: [f64; 3],
    extent: [f64; 3],
    internal_faces: Vec<Face>,
}

impl StructuredGrid {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_size(&self) -> [f64; 3] {
        self.cell_size
    }

    pub fn extent(&self) -> [f64; 3] {
        self.extent
    }

    pub fn n_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Volume of any cell (uniform spacing).
    pub fn cell_volume(&self) -> f64 {
        self.cell_size[0] * self.cell_size[1] * self.cell_size[2]
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn cell_ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn centroid(&self, idx: usize) -> [f64; 3] {
        let ijk = self.cell_ijk(idx);
        [
            (ijk[0] as f64 + 0.5) * self.cell_size[0],
            (ijk[1] as f64 + 0.5) * self.cell_size[1],
            (ijk[2] as f64 + 0.5) * self.cell_size[2],
        ]
    }

    pub fn internal_faces(&self) -> &[Face] {
        &self.internal_faces
    }
}

/// Build a uniform Cartesian grid covering `[0, extent]` in each direction.
pub fn build_cartesian_grid(dims: (usize, usize, usize), extent: (f64, f64, f64)) -> Result<StructuredGrid> {
    let dims = [dims.0, dims.1, dims.2];
    let extent = [extent.0, extent.1, extent.2];
    if dims.iter().any(|&d| d == 0) {
        return Err(FracflowError::InvalidGeometry(format!(
            "grid dimensions must be >= 1, got {dims:?}"
        )));
    }
    if extent.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(FracflowError::InvalidGeometry(format!(
            "grid extents must be positive, got {extent:?}"
        )));
    }

    let cell_size = [
        extent[0] / dims[0] as f64,
        extent[1] / dims[1] as f64,
        extent[2] / dims[2] as f64,
    ];
    let face_area = [
        cell_size[1] * cell_size[2],
        cell_size[0] * cell_size[2],
        cell_size[0] * cell_size[1],
    ];

    let index = |i: usize, j: usize, k: usize| i + dims[0] * (j + dims[1] * k);
    let mut internal_faces = Vec::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let a = index(i, j, k);
                if i + 1 < dims[0] {
                    internal_faces.push(Face { a, b: index(i + 1, j, k), area: face_area[0], axis: 0 });
                }
                if j + 1 < dims[1] {
                    internal_faces.push(Face { a, b: index(i, j + 1, k), area: face_area[1], axis: 1 });
                }
                if k + 1 < dims[2] {
                    internal_faces.push(Face { a, b: index(i, j, k + 1), area: face_area[2], axis: 2 });
                }
            }
        }
    }

    Ok(StructuredGrid { dims, cell_size, extent, internal_faces })
}

/// Per-cell diagonal permeability tensor and porosity.
#[derive(Debug, Clone)]
pub struct RockModel {
    perm: Vec<[f64; 3]>,
    poro: Vec<f64>,
}

impl RockModel {
    /// Homogeneous isotropic rock.
    pub fn uniform(grid: &StructuredGrid, permeability: f64, porosity: f64) -> Result<Self> {
        Self::from_fields(
            vec![[permeability; 3]; grid.n_cells()],
            vec![porosity; grid.n_cells()],
        )
    }

    /// Isotropic per-cell permeability field.
    pub fn from_isotropic_field(perm: Vec<f64>, poro: Vec<f64>) -> Result<Self> {
        Self::from_fields(perm.into_iter().map(|k| [k; 3]).collect(), poro)
    }

    pub fn from_fields(perm: Vec<[f64; 3]>, poro: Vec<f64>) -> Result<Self> {
        if perm.len() != poro.len() {
            return Err(FracflowError::InvalidGeometry(format!(
                "permeability field has {} cells but porosity field has {}",
                perm.len(),
                poro.len()
            )));
        }
        if perm.iter().any(|k| k.iter().any(|&v| !(v > 0.0))) {
            return Err(FracflowError::InvalidGeometry(
                "permeability entries must be strictly positive".into(),
            ));
        }
        if poro.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(FracflowError::InvalidGeometry(
                "porosity must lie in (0, 1]".into(),
            ));
        }
        Ok(RockModel { perm, poro })
    }

    pub fn n_cells(&self) -> usize {
        self.poro.len()
    }

    pub fn permeability(&self, cell: usize) -> [f64; 3] {
        self.perm[cell]
    }

    pub fn porosity(&self, cell: usize) -> f64 {
        self.poro[cell]
    }
}

/// TPFA transmissibility of an internal face: the harmonic combination of
/// the two half-transmissibilities T_i = k_i A / d_i with d_i the
/// centroid-to-face distance.
pub fn tpfa_face_transmissibility(grid: &StructuredGrid, rock: &RockModel, face: &Face) -> f64 {
    let d = 0.5 * grid.cell_size()[face.axis];
    let half = |cell: usize| rock.permeability(cell)[face.axis] * face.area / d;
    let ta = half(face.a);
    let tb = half(face.b);
    ta * tb / (ta + tb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_10m(k_a: f64, k_b: f64) -> (StructuredGrid, RockModel) {
        let grid = build_cartesian_grid((2, 1, 1), (20.0, 10.0, 10.0)).unwrap();
        let rock = RockModel::from_isotropic_field(vec![k_a, k_b], vec![0.2, 0.2]).unwrap();
        (grid, rock)
    }

    #[test]
    fn paper_case_grid_dimensions() {
        let grid = build_cartesian_grid((120, 35, 1), (600.0, 175.0, 1.0)).unwrap();
        assert_eq!(grid.n_cells(), 4200);
    }

    #[test]
    fn single_cell_has_no_internal_faces() {
        let grid = build_cartesian_grid((1, 1, 1), (1.0, 1.0, 1.0)).unwrap();
        assert_eq!(grid.n_cells(), 1);
        assert!(grid.internal_faces().is_empty());
    }

    #[test]
    fn two_by_two_face_enumeration() {
        // 2x2x1 over 20x20x1 m: four cells, four internal faces, each 10 m²
        // at unit thickness.
        let grid = build_cartesian_grid((2, 2, 1), (20.0, 20.0, 1.0)).unwrap();
        assert_eq!(grid.n_cells(), 4);
        let faces = grid.internal_faces();
        assert_eq!(faces.len(), 4);
        for f in faces {
            assert!((f.area - 10.0).abs() < 1e-12);
        }
        let mut pairs: Vec<(usize, usize)> = faces.iter().map(|f| (f.a, f.b)).collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn rejects_degenerate_geometry() {
        assert!(build_cartesian_grid((0, 1, 1), (1.0, 1.0, 1.0)).is_err());
        assert!(build_cartesian_grid((1, 1, 1), (0.0, 1.0, 1.0)).is_err());
        assert!(build_cartesian_grid((1, 1, 1), (-2.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn face_count_matches_closed_form() {
        let (nx, ny, nz) = (7, 5, 3);
        let grid = build_cartesian_grid((nx, ny, nz), (7.0, 5.0, 3.0)).unwrap();
        let expected = (nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1);
        assert_eq!(grid.internal_faces().len(), expected);
        // every face joins axis-adjacent cells exactly once
        let mut seen = std::collections::HashSet::new();
        for f in grid.internal_faces() {
            assert!(f.a < f.b);
            assert!(seen.insert((f.a, f.b)));
            let [ia, ja, ka] = grid.cell_ijk(f.a);
            let [ib, jb, kb] = grid.cell_ijk(f.b);
            let diff = (ib - ia) + (jb - ja) + (kb - ka);
            assert_eq!(diff, 1);
        }
    }

    #[test]
    fn tpfa_identical_cells() {
        let (grid, rock) = cube_10m(1e-14, 1e-14);
        let face = grid.internal_faces()[0];
        let t = tpfa_face_transmissibility(&grid, &rock, &face);
        // half-transmissibility 1e-14 * 100 / 5 = 2e-13 each; harmonic halves it
        assert!((t - 1e-13).abs() / 1e-13 < 1e-12);
    }

    #[test]
    fn tpfa_infinite_neighbor_limit() {
        let (grid, rock) = cube_10m(1e-14, 1e4);
        let face = grid.internal_faces()[0];
        let t = tpfa_face_transmissibility(&grid, &rock, &face);
        assert!((t - 2e-13).abs() / 2e-13 < 1e-9);
    }

    #[test]
    fn tpfa_harmonic_combination() {
        // half-transmissibilities 2e-13 and 8e-13: (1/2e-13 + 1/8e-13)^-1 = 1.6e-13
        let (grid, rock) = cube_10m(1e-14, 4e-14);
        let face = grid.internal_faces()[0];
        let t = tpfa_face_transmissibility(&grid, &rock, &face);
        let expected = 1.0 / (1.0 / 2e-13 + 1.0 / 8e-13);
        assert!((t - expected).abs() / expected < 1e-12);
        assert!((expected - 1.6e-13).abs() / 1.6e-13 < 1e-12);
    }

    #[test]
    fn tpfa_symmetry_and_scaling() {
        let (grid, rock) = cube_10m(3e-14, 7e-14);
        let face = grid.internal_faces()[0];
        let swapped = Face { a: face.b, b: face.a, ..face };
        let t = tpfa_face_transmissibility(&grid, &rock, &face);
        let t_swapped = tpfa_face_transmissibility(&grid, &rock, &swapped);
        assert_eq!(t, t_swapped);

        // linear in uniform permeability scaling
        let rock4 = RockModel::from_isotropic_field(vec![4.0 * 3e-14, 4.0 * 7e-14], vec![0.2, 0.2]).unwrap();
        let t4 = tpfa_face_transmissibility(&grid, &rock4, &face);
        assert!((t4 - 4.0 * t).abs() / t4 < 1e-12);

        // linear in face area
        let doubled = Face { area: 2.0 * face.area, ..face };
        let t_area = tpfa_face_transmissibility(&grid, &rock, &doubled);
        assert!((t_area - 2.0 * t).abs() / t_area < 1e-12);
    }

    #[test]
    fn uniform_pressure_has_zero_net_flow() {
        let grid = build_cartesian_grid((4, 3, 2), (40.0, 30.0, 20.0)).unwrap();
        let rock = RockModel::uniform(&grid, 5e-15, 0.25).unwrap();
        let p = 1.0e7;
        let mut net = vec![0.0; grid.n_cells()];
        for f in grid.internal_faces() {
            let t = tpfa_face_transmissibility(&grid, &rock, f);
            let flux = t * (p - p);
            net[f.a] += flux;
            net[f.b] -= flux;
        }
        assert!(net.iter().all(|&v| v == 0.0));
    }
}
