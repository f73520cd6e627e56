//! Interior discretization: 1D interval and 3D tetrahedral P1 elements.

pub mod forms;
pub mod mesh;

pub use forms::{
    assemble_interval, assemble_tet, error_norms_1d, error_norms_3d, interpolate_1d,
    interpolate_3d, Csr, InteriorForms, StepForm,
};
pub use mesh::{build_box_mesh, build_interval_mesh, tet_volume, IntervalMesh, TetMesh};
