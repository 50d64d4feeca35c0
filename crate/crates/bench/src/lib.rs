//! Shared fixtures for the benchmarks.

use vnsim_core::models::{preset, HarmonicDrive, ModelSpec};
use vnsim_core::{build_structure_tensor, CoeffVector, PauliBasis, StructureTensor};

pub struct Fixture {
    pub spec: ModelSpec,
    pub basis: PauliBasis,
    pub structure: StructureTensor,
    pub rho0: CoeffVector,
    pub drive: HarmonicDrive,
}

pub fn fixture(name: &str) -> Fixture {
    let spec = preset(name).expect("known preset");
    let basis = spec.basis().expect("preset basis");
    let structure = build_structure_tensor(&basis).expect("structure constants");
    let rho0 = spec.initial_coefficients(&basis).expect("initial state");
    let drive = spec.drive().expect("drive terms");
    Fixture {
        spec,
        basis,
        structure,
        rho0,
        drive,
    }
}
