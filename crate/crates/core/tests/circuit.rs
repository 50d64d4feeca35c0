use std::path::PathBuf;

use vnsim_core::circuit::{build_plan, execute, run_statevector, sample, GateBlock, ShotPolicy};
use vnsim_core::io::{write_counts, Header};
use vnsim_core::liouville::propagate_lie_euler;
use vnsim_core::models::preset;
use vnsim_core::{build_structure_tensor, TimeGrid};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Set `VNSIM_BLESS=1` to regenerate the fixture after an intentional change.
#[test]
fn golden_counts() {
    let spec = preset("example1").unwrap();
    let basis = spec.basis().unwrap();
    let st = build_structure_tensor(&basis).unwrap();
    let rho0 = spec.initial_coefficients(&basis).unwrap();
    let grid = TimeGrid::new(0.01, 1.0, 50).unwrap();
    let policy = ShotPolicy::Shots {
        count: 16384,
        seed: 42,
    };
    let plan = build_plan(&rho0, &spec.drive().unwrap(), &st, &grid, policy).unwrap();
    let run = execute(&plan).unwrap();
    let mut buf = Vec::new();
    write_counts(
        &mut buf,
        &Header::new()
            .with("model", "example1")
            .with("shots", 16384)
            .with("seed", 42),
        &run,
    )
    .unwrap();

    let path = fixture("example1_counts.csv");
    if std::env::var_os("VNSIM_BLESS").is_some() {
        std::fs::write(&path, &buf).unwrap();
    }
    let expected = std::fs::read(&path).expect("fixture missing; run with VNSIM_BLESS=1");
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        String::from_utf8(expected).unwrap()
    );
}

#[test]
fn sampled_frequencies_respect_binomial_bound() {
    let spec = preset("example2").unwrap();
    let basis = spec.basis().unwrap();
    let st = build_structure_tensor(&basis).unwrap();
    let rho0 = spec.initial_coefficients(&basis).unwrap();
    let grid = TimeGrid::new(0.01, 0.7, 70).unwrap();
    let plan = build_plan(&rho0, &spec.drive().unwrap(), &st, &grid, ShotPolicy::Exact).unwrap();
    let state = run_statevector(&plan);
    let probs = state.probabilities();
    let shots = 16384u64;
    let (mut outside, mut total) = (0, 0);
    for seed in 0..200 {
        let r = sample(&state, shots, seed, 0);
        for (c, p) in r.counts.iter().zip(&probs) {
            let bound = 4.0 * (p * (1.0 - p) / shots as f64).sqrt();
            total += 1;
            if (*c as f64 / shots as f64 - p).abs() > bound + 1e-12 {
                outside += 1;
            }
        }
    }
    assert!(
        (outside as f64) <= 1e-4 * total as f64 + 1.0,
        "{outside} of {total} outside 4σ"
    );
}

#[test]
fn plan_shape_for_example1() {
    let spec = preset("example1").unwrap();
    let basis = spec.basis().unwrap();
    let st = build_structure_tensor(&basis).unwrap();
    let rho0 = spec.initial_coefficients(&basis).unwrap();
    let grid = TimeGrid::with_steps(10.0, 200, 1).unwrap();
    let plan = build_plan(&rho0, &spec.drive().unwrap(), &st, &grid, ShotPolicy::Exact).unwrap();
    assert_eq!(plan.n_qubits(), 3);
    assert_eq!(plan.blocks().len(), 4 + 200 * 3);
    assert_eq!(plan.blocks().first(), Some(&GateBlock::HadamardOnControl));
    assert_eq!(plan.blocks().last(), Some(&GateBlock::HadamardOnControl));
    for block in plan.blocks() {
        if let GateBlock::ControlledOnOne(gate) = block {
            let m = gate.matrix(&st).unwrap();
            assert!(vnsim_core::linalg::orthogonality_defect(&m) <= 1e-11);
        }
    }
}

#[test]
fn exact_readout_matches_lie_euler_for_two_spins() {
    let spec = preset("example2-alt").unwrap();
    let basis = spec.basis().unwrap();
    let st = build_structure_tensor(&basis).unwrap();
    let rho0 = spec.initial_coefficients(&basis).unwrap();
    let drive = spec.drive().unwrap();
    let grid = TimeGrid::with_steps(4.0, 400, 40).unwrap();
    let plan = build_plan(&rho0, &drive, &st, &grid, ShotPolicy::Exact).unwrap();
    let run = execute(&plan).unwrap();
    let classical = propagate_lie_euler(&rho0, &drive, &st, &grid).unwrap();
    for (e, c) in run.estimates.iter().zip(classical.states()) {
        for (a, b) in e.physical().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
    assert!((run.estimates[0].physical()[3] + 0.25).abs() < 1e-12);
}
