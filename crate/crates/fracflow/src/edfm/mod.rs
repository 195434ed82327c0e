//! Embedded discrete fracture model: lower-dimensional fracture cells
//! embedded in the matrix grid, coupled through non-neighboring
//! connections (matrix-fracture and fracture-fracture).

pub mod geometry;

use crate::error::{FracflowError, Result};
use crate::mesh::{RockModel, StructuredGrid};
use geometry::{
    clip_segment, mean_normal_distance, mean_split_distance, point_on_segment, segment_intersection,
    segment_length, trace_normal, Rect,
};

/// A planar fracture: a 2D trace extruded vertically. `z_range = None`
/// spans the full grid thickness.
#[derive(Debug, Clone)]
pub struct Fracture {
    pub p0: [f64; 2],
    pub p1: [f64; 2],
    pub z_range: Option<[f64; 2]>,
    pub aperture: f64,
    pub permeability: f64,
    pub porosity: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FractureNetwork {
    pub fractures: Vec<Fracture>,
}

impl FractureNetwork {
    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.fractures.iter().enumerate() {
            if !(f.aperture > 0.0) {
                return Err(FracflowError::InvalidGeometry(format!(
                    "fracture {i}: aperture must be positive"
                )));
            }
            if !(f.permeability > 0.0) {
                return Err(FracflowError::InvalidGeometry(format!(
                    "fracture {i}: permeability must be positive"
                )));
            }
            if !(f.porosity > 0.0 && f.porosity <= 1.0) {
                return Err(FracflowError::InvalidGeometry(format!(
                    "fracture {i}: porosity must lie in (0, 1]"
                )));
            }
            if segment_length(f.p0, f.p1) <= 0.0 {
                return Err(FracflowError::InvalidGeometry(format!(
                    "fracture {i}: degenerate trace"
                )));
            }
        }
        Ok(())
    }
}

/// One fracture cell: the patch of a fracture inside one host matrix cell
/// and one grid layer.
#[derive(Debug, Clone)]
pub struct FractureCell {
    pub fracture: usize,
    pub host_cell: usize,
    pub layer: usize,
    /// Trace sub-segment inside the host cell (xy, m).
    pub p0: [f64; 2],
    pub p1: [f64; 2],
    /// Vertical extent of the patch (m).
    pub z: [f64; 2],
    pub area: f64,
    pub pore_volume: f64,
    pub aperture: f64,
    pub permeability: f64,
}

impl FractureCell {
    pub fn trace_length(&self) -> f64 {
        segment_length(self.p0, self.p1)
    }

    pub fn height(&self) -> f64 {
        self.z[1] - self.z[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfKind {
    InPlane,
    Vertical,
    Crossing,
}

#[derive(Debug, Clone)]
pub struct MfConnection {
    pub matrix_cell: usize,
    pub fracture_cell: usize,
    pub ci: f64,
    pub trans: f64,
}

#[derive(Debug, Clone)]
pub struct FfConnection {
    pub a: usize,
    pub b: usize,
    pub trans: f64,
    pub kind: FfKind,
}

/// The embedded topology: fracture cells plus their couplings. Unknown
/// ordering is matrix cells first (0..n_matrix), fracture cells appended.
#[derive(Debug, Clone)]
pub struct EdfmTopology {
    n_matrix: usize,
    pub fracture_cells: Vec<FractureCell>,
    pub mf_connections: Vec<MfConnection>,
    pub ff_connections: Vec<FfConnection>,
    pub warnings: Vec<String>,
}

impl EdfmTopology {
    pub fn empty(n_matrix: usize) -> Self {
        EdfmTopology {
            n_matrix,
            fracture_cells: Vec::new(),
            mf_connections: Vec::new(),
            ff_connections: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn n_matrix(&self) -> usize {
        self.n_matrix
    }

    pub fn n_fracture_cells(&self) -> usize {
        self.fracture_cells.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_matrix + self.fracture_cells.len()
    }

    pub fn matrix_index_set(&self) -> std::ops::Range<usize> {
        0..self.n_matrix
    }

    pub fn fracture_index_set(&self) -> std::ops::Range<usize> {
        self.n_matrix..self.n_unknowns()
    }

    /// Global unknown index of fracture cell `fc`.
    pub fn fracture_unknown(&self, fc: usize) -> usize {
        self.n_matrix + fc
    }

    pub fn total_fracture_pore_volume(&self) -> f64 {
        self.fracture_cells.iter().map(|c| c.pore_volume).sum()
    }
}

/// Connectivity index of a fracture patch inside a cell: CI = A / d̄ with
/// d̄ the average normal distance from the cell to the fracture plane.
pub fn connectivity_index(cell: &Rect, normal: [f64; 2], point: [f64; 2], patch_area: f64) -> f64 {
    if patch_area <= 0.0 {
        return 0.0;
    }
    let dbar = mean_normal_distance(cell, normal, point);
    if dbar <= 0.0 {
        return 0.0;
    }
    patch_area / dbar
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        a * b / (a + b)
    }
}

/// Matrix-fracture transmissibility from a connectivity index: harmonic
/// combination of the matrix-side and fracture-side contributions.
pub fn matrix_fracture_transmissibility(ci: f64, k_matrix_normal: f64, k_fracture: f64) -> f64 {
    ci * harmonic(k_matrix_normal, k_fracture)
}

/// TPFA along the trace: cross-section aperture times shared height,
/// half-lengths as distances.
fn in_plane_transmissibility(a: &FractureCell, b: &FractureCell) -> f64 {
    let width = a.aperture * a.height().min(b.height());
    let ta = a.permeability * width / (0.5 * a.trace_length());
    let tb = b.permeability * width / (0.5 * b.trace_length());
    harmonic(ta, tb)
}

/// TPFA across stacked layers: cross-section aperture times trace length,
/// half-heights as distances.
fn vertical_transmissibility(a: &FractureCell, b: &FractureCell) -> f64 {
    let cross_section = a.aperture * a.trace_length().min(b.trace_length());
    let ta = a.permeability * cross_section / (0.5 * a.height());
    let tb = b.permeability * cross_section / (0.5 * b.height());
    harmonic(ta, tb)
}

/// Transmissibility between two fracture cells: in-plane neighbors or
/// vertically stacked patches of the same fracture, or cells of two
/// fractures meeting at an intersection line. Errors on non-adjacent
/// cells. The tolerance absorbs sub-threshold sliver patches dropped
/// between neighbors during embedding.
pub fn fracture_internal_transmissibility(a: &FractureCell, b: &FractureCell) -> Result<f64> {
    if a.fracture == b.fracture {
        let tol = 1e-4 * (a.trace_length() + b.trace_length()).max(1e-12);
        let shares_endpoint = segment_length(a.p1, b.p0) < tol || segment_length(b.p1, a.p0) < tol;
        if a.layer == b.layer && shares_endpoint {
            return Ok(in_plane_transmissibility(a, b));
        }
        let same_trace = segment_length(a.p0, b.p0) < tol && segment_length(a.p1, b.p1) < tol;
        let z_adjacent = (a.z[1] - b.z[0]).abs() < 1e-9 || (b.z[1] - a.z[0]).abs() < 1e-9;
        if same_trace && z_adjacent {
            return Ok(vertical_transmissibility(a, b));
        }
        return Err(FracflowError::InvalidGeometry(
            "fracture cells are not adjacent within their fracture".into(),
        ));
    }

    if a.layer != b.layer {
        return Err(FracflowError::InvalidGeometry(
            "crossing fracture cells must share a layer".into(),
        ));
    }
    let (ta, sb) = segment_intersection(a.p0, a.p1, b.p0, b.p1).ok_or_else(|| {
        FracflowError::InvalidGeometry("fracture cells do not intersect".into())
    })?;
    let x = point_on_segment(a.p0, a.p1, ta);
    Ok(crossing_transmissibility(a, b, x, sb * b.trace_length()))
}

/// Crossing-line transmissibility: each side contributes k (aperture h) / d̄
/// with d̄ the average distance along the trace to the crossing point.
fn crossing_transmissibility(a: &FractureCell, b: &FractureCell, x: [f64; 2], s_b: f64) -> f64 {
    let h = a.height().min(b.height());
    let s_a = segment_length(a.p0, x);
    let da = mean_split_distance(a.trace_length(), s_a);
    let db = mean_split_distance(b.trace_length(), s_b);
    let ta = a.permeability * (a.aperture * h) / da;
    let tb = b.permeability * (b.aperture * h) / db;
    harmonic(ta, tb)
}

struct TraceHit {
    i: usize,
    j: usize,
    s0: f64,
    p0: [f64; 2],
    p1: [f64; 2],
    len: f64,
}

/// Embed a fracture network into the grid: one fracture cell per
/// (fracture, intersected matrix cell, layer), with matrix-fracture and
/// fracture-fracture connections. Fractures falling outside the grid
/// contribute nothing and leave a warning record.
pub fn embed_fracture_network(
    grid: &StructuredGrid,
    rock: &RockModel,
    network: &FractureNetwork,
) -> Result<EdfmTopology> {
    network.validate()?;
    let nz = grid.dims()[2];
    let [dx, dy, dz] = grid.cell_size();
    let [lx, ly, lz] = grid.extent();
    let full_cut_area = (dx * dx + dy * dy).sqrt() * dz;
    let area_threshold = 1e-6 * full_cut_area;
    let domain = Rect { origin: [0.0, 0.0], size: [lx, ly] };

    let mut topo = EdfmTopology::empty(grid.n_cells());
    // per fracture: clipped trace, hits, layer spans, and cell ids as
    // [layer_slot][hit] (None when the sliver was dropped)
    let mut traces: Vec<Option<([f64; 2], [f64; 2])>> = Vec::with_capacity(network.fractures.len());
    let mut all_hits: Vec<Vec<TraceHit>> = Vec::with_capacity(network.fractures.len());
    let mut all_layers: Vec<Vec<(usize, f64)>> = Vec::with_capacity(network.fractures.len());
    let mut cell_ids: Vec<Vec<Vec<Option<usize>>>> = Vec::with_capacity(network.fractures.len());

    for (fi, frac) in network.fractures.iter().enumerate() {
        let clip = clip_segment(frac.p0, frac.p1, &domain);
        let zr = frac.z_range.unwrap_or([0.0, lz]);
        let (z0, z1) = (zr[0].max(0.0), zr[1].min(lz));
        let (trace, hits, layers) = match clip {
            Some((t0, t1)) if t1 > t0 && z1 > z0 => {
                let a = point_on_segment(frac.p0, frac.p1, t0);
                let b = point_on_segment(frac.p0, frac.p1, t1);
                if segment_length(a, b) <= 1e-12 {
                    topo.warnings.push(format!("fracture {fi}: trace degenerates inside the grid"));
                    (None, Vec::new(), Vec::new())
                } else {
                    let hits = collect_trace_hits(a, b, grid);
                    let layers: Vec<(usize, f64)> = (0..nz)
                        .filter_map(|k| {
                            let h = (z1.min((k + 1) as f64 * dz) - z0.max(k as f64 * dz)).max(0.0);
                            (h > 0.0).then_some((k, h))
                        })
                        .collect();
                    (Some((a, b)), hits, layers)
                }
            }
            _ => {
                topo.warnings.push(format!("fracture {fi}: outside the grid, skipped"));
                (None, Vec::new(), Vec::new())
            }
        };

        let mut ids = vec![vec![None; hits.len()]; layers.len()];
        for (slot, &(k, h)) in layers.iter().enumerate() {
            let z_lo = (k as f64 * dz).max(z0);
            for (hi, hit) in hits.iter().enumerate() {
                let area = hit.len * h;
                if area < area_threshold {
                    continue;
                }
                let host = grid.cell_index(hit.i, hit.j, k);
                let fc = FractureCell {
                    fracture: fi,
                    host_cell: host,
                    layer: k,
                    p0: hit.p0,
                    p1: hit.p1,
                    z: [z_lo, z_lo + h],
                    area,
                    pore_volume: area * frac.aperture * frac.porosity,
                    aperture: frac.aperture,
                    permeability: frac.permeability,
                };
                ids[slot][hi] = Some(topo.fracture_cells.len());
                topo.fracture_cells.push(fc);
            }
        }

        traces.push(trace);
        all_hits.push(hits);
        all_layers.push(layers);
        cell_ids.push(ids);
    }

    // matrix-fracture connections
    for (fc_idx, fc) in topo.fracture_cells.iter().enumerate() {
        let frac = &network.fractures[fc.fracture];
        let normal = trace_normal(frac.p0, frac.p1);
        let ijk = grid.cell_ijk(fc.host_cell);
        let cell_rect = Rect {
            origin: [ijk[0] as f64 * dx, ijk[1] as f64 * dy],
            size: [dx, dy],
        };
        let ci = connectivity_index(&cell_rect, normal, frac.p0, fc.area);
        let k = rock.permeability(fc.host_cell);
        let k_normal = k[0] * normal[0] * normal[0] + k[1] * normal[1] * normal[1];
        let trans = matrix_fracture_transmissibility(ci, k_normal, fc.permeability);
        topo.mf_connections.push(MfConnection {
            matrix_cell: fc.host_cell,
            fracture_cell: fc_idx,
            ci,
            trans,
        });
    }

    // in-plane neighbors: consecutive surviving hits along each trace
    for fi in 0..network.fractures.len() {
        for slot in 0..all_layers[fi].len() {
            let mut prev: Option<usize> = None;
            for hi in 0..all_hits[fi].len() {
                if let Some(cur) = cell_ids[fi][slot][hi] {
                    if let Some(p) = prev {
                        let t = in_plane_transmissibility(&topo.fracture_cells[p], &topo.fracture_cells[cur]);
                        topo.ff_connections.push(FfConnection { a: p, b: cur, trans: t, kind: FfKind::InPlane });
                    }
                    prev = Some(cur);
                }
            }
        }
        // vertical neighbors between consecutive layers
        for slot in 1..all_layers[fi].len() {
            if all_layers[fi][slot].0 != all_layers[fi][slot - 1].0 + 1 {
                continue;
            }
            for hi in 0..all_hits[fi].len() {
                if let (Some(lo), Some(up)) = (cell_ids[fi][slot - 1][hi], cell_ids[fi][slot][hi]) {
                    let t = vertical_transmissibility(&topo.fracture_cells[lo], &topo.fracture_cells[up]);
                    topo.ff_connections.push(FfConnection { a: lo, b: up, trans: t, kind: FfKind::Vertical });
                }
            }
        }
    }

    // fracture-fracture crossings
    for fa in 0..network.fractures.len() {
        let Some((a0, a1)) = traces[fa] else { continue };
        for fb in fa + 1..network.fractures.len() {
            let Some((b0, b1)) = traces[fb] else { continue };
            let Some((ta, tb)) = segment_intersection(a0, a1, b0, b1) else { continue };
            let x = point_on_segment(a0, a1, ta);
            let hit_a = locate_hit(&all_hits[fa], ta);
            let hit_b = locate_hit(&all_hits[fb], tb);
            let (Some(ha), Some(hb)) = (hit_a, hit_b) else { continue };
            for (slot_a, &(ka, _)) in all_layers[fa].iter().enumerate() {
                for (slot_b, &(kb, _)) in all_layers[fb].iter().enumerate() {
                    if ka != kb {
                        continue;
                    }
                    if let (Some(ca), Some(cb)) = (cell_ids[fa][slot_a][ha], cell_ids[fb][slot_b][hb]) {
                        let cell_a = &topo.fracture_cells[ca];
                        let cell_b = &topo.fracture_cells[cb];
                        let s_b = segment_length(cell_b.p0, x);
                        let t = crossing_transmissibility(cell_a, cell_b, x, s_b);
                        topo.ff_connections.push(FfConnection { a: ca, b: cb, trans: t, kind: FfKind::Crossing });
                    }
                }
            }
        }
    }

    Ok(topo)
}

/// Cells whose interior carries a piece of the trace `a -> b`, ordered
/// along the trace. Ownership of boundary-aligned traces is half-open so
/// each piece lands in exactly one cell.
fn collect_trace_hits(a: [f64; 2], b: [f64; 2], grid: &StructuredGrid) -> Vec<TraceHit> {
    let [nx, ny, _] = grid.dims();
    let [dx, dy, _] = grid.cell_size();
    let tol = 1e-9 * dx.min(dy);

    let range = |lo: f64, hi: f64, d: f64, n: usize| {
        let i0 = ((lo.min(hi) / d).floor() as isize - 1).max(0) as usize;
        let i1 = ((lo.max(hi) / d).floor() as isize + 1).clamp(0, n as isize - 1) as usize;
        (i0.min(n - 1), i1)
    };
    let (imin, imax) = range(a[0], b[0], dx, nx);
    let (jmin, jmax) = range(a[1], b[1], dy, ny);

    let mut hits = Vec::new();
    for j in jmin..=jmax {
        for i in imin..=imax {
            let rect = Rect { origin: [i as f64 * dx, j as f64 * dy], size: [dx, dy] };
            let Some((s0, s1)) = clip_segment(a, b, &rect) else { continue };
            if s1 - s0 <= 1e-12 {
                continue;
            }
            let mid = point_on_segment(a, b, 0.5 * (s0 + s1));
            let closed_high = [i == nx - 1, j == ny - 1];
            if !rect.contains_half_open(mid, closed_high, tol) {
                continue;
            }
            let p0 = point_on_segment(a, b, s0);
            let p1 = point_on_segment(a, b, s1);
            hits.push(TraceHit { i, j, s0, p0, p1, len: segment_length(p0, p1) });
        }
    }
    hits.sort_by(|u, v| u.s0.total_cmp(&v.s0));
    hits
}

/// Hits are sorted by their start parameter; the containing hit is the
/// last one starting at or before `t`.
fn locate_hit(hits: &[TraceHit], t: f64) -> Option<usize> {
    let mut best = None;
    for (idx, h) in hits.iter().enumerate() {
        if h.s0 <= t + 1e-12 {
            best = Some(idx);
        } else {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_cartesian_grid;
    use crate::units::DARCY;

    fn frac(p0: [f64; 2], p1: [f64; 2]) -> Fracture {
        Fracture {
            p0,
            p1,
            z_range: None,
            aperture: 0.04,
            permeability: 1000.0 * DARCY,
            porosity: 0.5,
        }
    }

    #[test]
    fn empty_network_yields_no_fracture_unknowns() {
        let grid = build_cartesian_grid((4, 4, 1), (40.0, 40.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let topo = embed_fracture_network(&grid, &rock, &FractureNetwork::default()).unwrap();
        assert_eq!(topo.n_fracture_cells(), 0);
        assert!(topo.fracture_index_set().is_empty());
        assert_eq!(topo.n_unknowns(), 16);
    }

    #[test]
    fn face_aligned_fracture_crosses_five_cells() {
        // trace along the internal face plane y = 10 of a 5x2 grid
        let grid = build_cartesian_grid((5, 2, 1), (50.0, 20.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([0.0, 10.0], [50.0, 10.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        assert_eq!(topo.n_fracture_cells(), 5);
        assert_eq!(topo.mf_connections.len(), 5);
        assert_eq!(topo.ff_connections.len(), 4);
        for c in &topo.ff_connections {
            assert_eq!(c.kind, FfKind::InPlane);
        }
        // each fracture cell couples to exactly one host
        for (i, fc) in topo.fracture_cells.iter().enumerate() {
            let count = topo.mf_connections.iter().filter(|c| c.fracture_cell == i).count();
            assert_eq!(count, 1);
            assert_eq!(topo.mf_connections.iter().find(|c| c.fracture_cell == i).unwrap().matrix_cell, fc.host_cell);
        }
    }

    #[test]
    fn out_of_bounds_fracture_warns_and_contributes_nothing() {
        let grid = build_cartesian_grid((4, 4, 1), (40.0, 40.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([50.0, 50.0], [60.0, 60.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        assert_eq!(topo.n_fracture_cells(), 0);
        assert_eq!(topo.warnings.len(), 1);
    }

    #[test]
    fn full_cut_connectivity_index_is_area_over_mean_distance() {
        // plane through the center of a 10 m cube: d̄ = 2.5, A = 100, CI = 40
        let grid = build_cartesian_grid((1, 1, 1), (10.0, 10.0, 10.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([5.0, 0.0], [5.0, 10.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        assert_eq!(topo.n_fracture_cells(), 1);
        let mf = &topo.mf_connections[0];
        assert!((mf.ci - 40.0).abs() / 40.0 < 1e-10, "ci = {}", mf.ci);
        // matrix side dominates the harmonic combination
        let k_f = 1000.0 * DARCY;
        let expected = mf.ci * (1e-14 * k_f) / (1e-14 + k_f);
        assert!((mf.trans - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn offset_plane_mean_distance_follows_split_formula() {
        let grid = build_cartesian_grid((1, 1, 1), (10.0, 10.0, 10.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([3.0, 0.0], [3.0, 10.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        let mf = &topo.mf_connections[0];
        let dbar = mean_split_distance(10.0, 3.0);
        assert!((mf.ci - 100.0 / dbar).abs() / mf.ci < 1e-10);
    }

    #[test]
    fn zero_area_patch_has_zero_ci() {
        let rect = Rect { origin: [0.0, 0.0], size: [10.0, 10.0] };
        assert_eq!(connectivity_index(&rect, [1.0, 0.0], [5.0, 0.0], 0.0), 0.0);
    }

    #[test]
    fn in_plane_transmissibility_reference_value() {
        // two 10 m segments, aperture 0.04 m, k_f = 1000 D, unit thickness
        let grid = build_cartesian_grid((2, 1, 1), (20.0, 10.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([0.0, 5.0], [20.0, 5.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        assert_eq!(topo.ff_connections.len(), 1);
        let t = topo.ff_connections[0].trans;
        let half = 1000.0 * DARCY * (0.04 * 1.0) / 5.0;
        assert!((t - 0.5 * half).abs() / t < 1e-12);
        assert!((t - 3.948e-12).abs() / 3.948e-12 < 1e-3);
    }

    #[test]
    fn internal_transmissibility_is_symmetric() {
        let grid = build_cartesian_grid((2, 1, 1), (20.0, 10.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([0.0, 5.0], [20.0, 5.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        let a = &topo.fracture_cells[0];
        let b = &topo.fracture_cells[1];
        let tab = fracture_internal_transmissibility(a, b).unwrap();
        let tba = fracture_internal_transmissibility(b, a).unwrap();
        assert_eq!(tab, tba);
    }

    #[test]
    fn non_adjacent_cells_error() {
        let grid = build_cartesian_grid((3, 1, 1), (30.0, 10.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([0.0, 5.0], [30.0, 5.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        let a = &topo.fracture_cells[0];
        let c = &topo.fracture_cells[2];
        assert!(fracture_internal_transmissibility(a, c).is_err());
    }

    #[test]
    fn orthogonal_crossing_transmissibility() {
        // two full cuts of a 10 m cube crossing at the center: each side
        // has d̄ = 2.5 m and cross-section aperture*10, harmonically
        // combined.
        let grid = build_cartesian_grid((1, 1, 1), (10.0, 10.0, 10.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork {
            fractures: vec![frac([5.0, 0.0], [5.0, 10.0]), frac([0.0, 5.0], [10.0, 5.0])],
        };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        let crossing: Vec<_> = topo
            .ff_connections
            .iter()
            .filter(|c| c.kind == FfKind::Crossing)
            .collect();
        assert_eq!(crossing.len(), 1);
        let k_f = 1000.0 * DARCY;
        let side = k_f * (0.04 * 10.0) / 2.5;
        let expected = 0.5 * side;
        assert!((crossing[0].trans - expected).abs() / expected < 1e-10);
        assert!((crossing[0].trans - 7.895e-11).abs() / 7.895e-11 < 1e-3);
    }

    #[test]
    fn vertical_extrusion_stacks_fracture_cells() {
        let grid = build_cartesian_grid((2, 1, 3), (20.0, 10.0, 30.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork { fractures: vec![frac([0.0, 5.0], [20.0, 5.0])] };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        assert_eq!(topo.n_fracture_cells(), 6); // 2 hits x 3 layers
        let vertical = topo.ff_connections.iter().filter(|c| c.kind == FfKind::Vertical).count();
        let in_plane = topo.ff_connections.iter().filter(|c| c.kind == FfKind::InPlane).count();
        assert_eq!(vertical, 4); // 2 hits x 2 layer interfaces
        assert_eq!(in_plane, 3); // 1 per layer
        assert_eq!(topo.mf_connections.len(), 6);
    }

    #[test]
    fn index_sets_partition_unknowns() {
        let grid = build_cartesian_grid((4, 4, 1), (40.0, 40.0, 1.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-14, 0.2).unwrap();
        let network = FractureNetwork {
            fractures: vec![frac([5.0, 5.0], [35.0, 30.0]), frac([10.0, 30.0], [30.0, 8.0])],
        };
        let topo = embed_fracture_network(&grid, &rock, &network).unwrap();
        let sm = topo.matrix_index_set();
        let sf = topo.fracture_index_set();
        assert_eq!(sm.end, sf.start);
        assert_eq!(sf.end, topo.n_unknowns());
        assert!(topo.n_fracture_cells() > 0);
        // pore volume identity
        let expected: f64 = topo.fracture_cells.iter().map(|c| c.area * c.aperture * 0.5).sum();
        assert_eq!(topo.total_fracture_pore_volume(), expected);
        // transmissibilities are non-negative
        assert!(topo.mf_connections.iter().all(|c| c.trans >= 0.0));
        assert!(topo.ff_connections.iter().all(|c| c.trans >= 0.0));
    }
}
