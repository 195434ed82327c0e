pub mod svg;
pub mod vtk;
