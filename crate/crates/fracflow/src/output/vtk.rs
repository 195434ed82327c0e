//! Legacy ASCII VTK output: the matrix as structured points, fracture
//! cells as a companion polyline file.

use std::fmt::Write as _;
use std::path::Path;

use crate::edfm::EdfmTopology;
use crate::error::{FracflowError, Result};
use crate::mesh::StructuredGrid;
use crate::sim::SimState;

/// Write water saturation and pressure as cell data on the matrix grid;
/// fracture cells go to `<stem>_fractures.vtk` alongside.
pub fn write_vtk_snapshot(
    grid: &StructuredGrid,
    topology: &EdfmTopology,
    state: &SimState,
    path: &Path,
) -> Result<()> {
    let [nx, ny, nz] = grid.dims();
    let [dx, dy, dz] = grid.cell_size();
    let n = grid.n_cells();

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("fracflow snapshot\nASCII\n");
    out.push_str("DATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1);
    out.push_str("ORIGIN 0 0 0\n");
    let _ = writeln!(out, "SPACING {dx} {dy} {dz}");
    let _ = writeln!(out, "CELL_DATA {n}");
    write_scalars(&mut out, "water_saturation", &state.saturation[..n]);
    write_scalars(&mut out, "pressure", &state.pressure[..n]);
    std::fs::write(path, out).map_err(|e| FracflowError::io(path, e))?;

    if topology.n_fracture_cells() > 0 {
        let companion = fracture_companion_path(path);
        write_fracture_polydata(topology, state, &companion)?;
    }
    Ok(())
}

pub fn fracture_companion_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_fractures.vtk"))
}

fn write_fracture_polydata(topology: &EdfmTopology, state: &SimState, path: &Path) -> Result<()> {
    let m = topology.n_fracture_cells();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("fracflow fracture cells\nASCII\n");
    out.push_str("DATASET POLYDATA\n");
    let _ = writeln!(out, "POINTS {} double", 2 * m);
    for fc in &topology.fracture_cells {
        let zm = 0.5 * (fc.z[0] + fc.z[1]);
        let _ = writeln!(out, "{} {} {zm}", fc.p0[0], fc.p0[1]);
        let _ = writeln!(out, "{} {} {zm}", fc.p1[0], fc.p1[1]);
    }
    let _ = writeln!(out, "LINES {m} {}", 3 * m);
    for i in 0..m {
        let _ = writeln!(out, "2 {} {}", 2 * i, 2 * i + 1);
    }
    let _ = writeln!(out, "CELL_DATA {m}");
    let sat: Vec<f64> = (0..m).map(|i| state.saturation[topology.fracture_unknown(i)]).collect();
    let p: Vec<f64> = (0..m).map(|i| state.pressure[topology.fracture_unknown(i)]).collect();
    write_scalars(&mut out, "water_saturation", &sat);
    write_scalars(&mut out, "pressure", &p);
    std::fs::write(path, out).map_err(|e| FracflowError::io(path, e))
}

fn write_scalars(out: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(out, "SCALARS {name} double 1");
    out.push_str("LOOKUP_TABLE default\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
}

/// Cell count declared by a legacy VTK file's CELL_DATA section.
pub fn read_vtk_cell_count(path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path).map_err(|e| FracflowError::io(path, e))?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("CELL_DATA ") {
            return rest.trim().parse().map_err(|_| {
                FracflowError::config(path.display().to_string(), "malformed CELL_DATA count")
            });
        }
    }
    Err(FracflowError::config(
        path.display().to_string(),
        "no CELL_DATA section found",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edfm::{embed_fracture_network, Fracture, FractureNetwork};
    use crate::mesh::{build_cartesian_grid, RockModel};
    use crate::units::DARCY;

    #[test]
    fn snapshot_round_trips_cell_count() {
        let grid = build_cartesian_grid((4, 3, 1), (40.0, 30.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork {
            fractures: vec![Fracture {
                p0: [5.0, 15.0],
                p1: [35.0, 15.0],
                z_range: None,
                aperture: 0.04,
                permeability: 1000.0 * DARCY,
                porosity: 0.5,
            }],
        };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        let state = SimState::uniform(topo.n_unknowns(), 1e7, 0.0);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.vtk");
        write_vtk_snapshot(&grid, &topo, &state, &path).unwrap();
        assert_eq!(read_vtk_cell_count(&path).unwrap(), 12);
        let companion = fracture_companion_path(&path);
        assert_eq!(read_vtk_cell_count(&companion).unwrap(), topo.n_fracture_cells());

        // initial state carries zero water saturation everywhere
        let text = std::fs::read_to_string(&path).unwrap();
        let after = text.split("water_saturation").nth(1).unwrap();
        let zeros = after.lines().skip(2).take(12).all(|l| l.trim() == "0");
        assert!(zeros, "expected all-zero saturation block");
    }
}
