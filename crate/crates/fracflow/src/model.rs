//! The assembled reservoir model: grid, rock, embedded fractures, fluid
//! and wells, flattened into one connection list over the global unknown
//! ordering (matrix cells first, fracture cells appended).

use crate::edfm::EdfmTopology;
use crate::error::Result;
use crate::mesh::{tpfa_face_transmissibility, RockModel, StructuredGrid};
use crate::physics::{FluidModel, WellSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnKind {
    MatrixMatrix,
    MatrixFracture,
    FractureFracture,
}

/// A two-point connection between global unknowns `a` and `b` with a
/// fixed geometric transmissibility. Flux is positive from `a` to `b`.
#[derive(Debug, Clone, Copy)]
pub struct Connection {
    pub a: usize,
    pub b: usize,
    pub trans: f64,
    pub kind: ConnKind,
}

#[derive(Debug, Clone)]
pub struct ReservoirModel {
    pub grid: StructuredGrid,
    pub rock: RockModel,
    pub fluid: FluidModel,
    pub topology: EdfmTopology,
    pub wells: Vec<WellSpec>,
    pub connections: Vec<Connection>,
    /// Indices into `connections` of the matrix-fracture subset, in
    /// stable order; this is the face set tracked by the flux history.
    pub mf_connection_ids: Vec<usize>,
    /// Pore volume per global unknown.
    pub pore_volumes: Vec<f64>,
}

impl ReservoirModel {
    pub fn new(
        grid: StructuredGrid,
        rock: RockModel,
        fluid: FluidModel,
        topology: EdfmTopology,
        wells: Vec<WellSpec>,
    ) -> Result<Self> {
        fluid.validate()?;
        for w in &wells {
            w.validate()?;
        }

        let n_matrix = grid.n_cells();
        let mut connections = Vec::new();
        for face in grid.internal_faces() {
            connections.push(Connection {
                a: face.a,
                b: face.b,
                trans: tpfa_face_transmissibility(&grid, &rock, face),
                kind: ConnKind::MatrixMatrix,
            });
        }
        let mut mf_connection_ids = Vec::with_capacity(topology.mf_connections.len());
        for mf in &topology.mf_connections {
            mf_connection_ids.push(connections.len());
            connections.push(Connection {
                a: mf.matrix_cell,
                b: topology.fracture_unknown(mf.fracture_cell),
                trans: mf.trans,
                kind: ConnKind::MatrixFracture,
            });
        }
        for ff in &topology.ff_connections {
            connections.push(Connection {
                a: topology.fracture_unknown(ff.a),
                b: topology.fracture_unknown(ff.b),
                trans: ff.trans,
                kind: ConnKind::FractureFracture,
            });
        }

        let mut pore_volumes = Vec::with_capacity(topology.n_unknowns());
        let cell_volume = grid.cell_volume();
        for cell in 0..n_matrix {
            pore_volumes.push(cell_volume * rock.porosity(cell));
        }
        for fc in &topology.fracture_cells {
            pore_volumes.push(fc.pore_volume);
        }

        Ok(ReservoirModel {
            grid,
            rock,
            fluid,
            topology,
            wells,
            connections,
            mf_connection_ids,
            pore_volumes,
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.topology.n_unknowns()
    }

    pub fn n_matrix(&self) -> usize {
        self.topology.n_matrix()
    }

    pub fn total_pore_volume(&self) -> f64 {
        self.pore_volumes.iter().sum()
    }
}
