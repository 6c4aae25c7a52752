use nsch::diagnostics::DiagnosticsRecord;
use nsch::dynamics::{build_theta, coupled_step, run, InitialCondition, RunOptions, SchemeConfig, SimState, VelocityInit};
use nsch::envelope::ode_step;
use nsch::io::{encode_pgm, format_csv, parse_csv, read_snapshot, write_snapshot, Snapshot};
use nsch::potential::PotentialParams;
use nsch::spectral::{Grid, ScalarField, VectorField};
use proptest::prelude::*;

fn params() -> PotentialParams {
    PotentialParams::new(1.0, 2.0).unwrap()
}

fn random_state(n: usize, seed: u64, linf: f64) -> SimState {
    let g = Grid::new(n).unwrap();
    let ic = InitialCondition::RandomBand {
        seed,
        band: 4,
        target_linf: linf,
    };
    let theta = build_theta(&g, &ic, 0.05).unwrap();
    let u = nsch::dynamics::build_velocity(&g, &VelocityInit::TaylorGreen { amplitude: 0.3 }).unwrap();
    SimState::new(theta, u).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coupled_steps_preserve_mass_and_incompressibility(seed in 0u64..1000, linf in 0.2f64..0.9) {
        let cfg = SchemeConfig::new(1e-3, params());
        let mut s = random_state(16, seed, linf);
        for _ in 0..10 {
            s = coupled_step(&s, &cfg).unwrap().0;
        }
        prop_assert_eq!(s.theta.coeffs()[0].re, 0.0);
        prop_assert!(s.u.relative_divergence() <= 1e-12);
        prop_assert!(s.theta.linf(2) < 1.0);
    }

    #[test]
    fn leray_projection_is_idempotent(seed in 0u64..1000) {
        let g = Grid::new(16).unwrap();
        let a = nsch::dynamics::random_band_field(&g, seed, 6).unwrap();
        let b = nsch::dynamics::random_band_field(&g, seed + 1, 6).unwrap();
        let p = VectorField::new(a, b).unwrap().leray_project();
        let pp = p.leray_project();
        prop_assert!(p.axpy(-1.0, &pp).l2_norm() <= 1e-14 * p.l2_norm().max(1.0));
        prop_assert!(p.relative_divergence() <= 1e-12);
    }

    #[test]
    fn envelope_map_is_order_preserving(y in -0.95f64..0.95, dy in 1e-6f64..0.04, h in -5.0f64..5.0, dh in 1e-6f64..1.0) {
        let p = params();
        let base = ode_step(y, h, 1e-2, 1e-3, &p).unwrap();
        prop_assert!(ode_step(y, h + dh, 1e-2, 1e-3, &p).unwrap() > base);
        prop_assert!(ode_step((y + dy).min(0.99), h, 1e-2, 1e-3, &p).unwrap() > base);
    }

    #[test]
    fn heatmap_is_monotone_in_theta(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let g = Grid::new(8).unwrap();
        let pa = encode_pgm(&ScalarField::constant(&g, a));
        let pb = encode_pgm(&ScalarField::constant(&g, b));
        let (xa, xb) = (pa[pa.len() - 1], pb[pb.len() - 1]);
        if a <= b {
            prop_assert!(xa <= xb);
        }
    }
}

#[test]
fn run_outputs_round_trip_exactly() {
    let state = random_state(16, 5, 0.8);
    let cfg = SchemeConfig::new(1e-3, params());
    let mut opts = RunOptions::new(0.02);
    opts.sample_every = 4;
    let out = run(state, &cfg, &opts, &mut []).unwrap();
    let text = format_csv(&out.records).unwrap();
    let back: Vec<DiagnosticsRecord> = parse_csv(&text).unwrap();
    assert_eq!(back, out.records);
    assert_eq!(format_csv(&back).unwrap(), text);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("final.nsch");
    let snap = Snapshot::from_state(&out.final_state);
    write_snapshot(&path, &snap).unwrap();
    let read = read_snapshot(&path).unwrap();
    assert_eq!(read.t.to_bits(), snap.t.to_bits());
    assert!(read.theta.iter().zip(&snap.theta).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn heatmap_extremes() {
    let g = Grid::new(8).unwrap();
    let one = encode_pgm(&ScalarField::constant(&g, 1.0));
    assert!(one.ends_with(&[255; 64]));
    let zero = encode_pgm(&ScalarField::zeros(&g));
    assert!(zero.ends_with(&[128; 64]));
}
