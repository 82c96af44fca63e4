//! Shared setup for the benchmarks.

use std::sync::Arc;

use mhd_core::experiment::{advection_fields, RunConfig};
use mhd_core::{AdvectionFields, Spaces, TetMesh};

/// Configuration, spaces and advection fields for the manufactured problem
/// on the structured cube with `n` cells per side.
pub struct Case {
    pub cfg: RunConfig,
    pub spaces: Spaces,
    pub fields: AdvectionFields,
}

impl Case {
    pub fn cube(n: usize, k: usize) -> Case {
        let cfg = RunConfig::parse(&format!("degree = {k}\nmesh.structured_n = {n}\nnu_s = 1e-5\nnu_m = 1e-5"))
            .expect("valid benchmark config");
        let mesh = TetMesh::structured_cube(n).expect("structured mesh");
        let spaces = Spaces::new(Arc::new(mesh), k).expect("spaces");
        let fields = advection_fields(&cfg, &spaces).expect("advection fields");
        Case { cfg, spaces, fields }
    }
}
