use wavecrit::kernels1d::{kernel_value, Forcing, QuadratureOptions};
use wavecrit::simulator::{
    evolve, read_snapshot, write_snapshot, DataProfile, EvolveOptions, Grid, Probe, ProbeKind, Quantity, SimError,
    SimSystem, SimTerm,
};
use wavecrit::decay_rules::Derivative;

fn forcing(u: f64, v: f64) -> f64 {
    if u > 1.0 {
        (u - 1.0).powi(2) / (u * u * v * v)
    } else {
        0.0
    }
}

#[test]
fn huygens_support_is_exact() {
    let sys = SimSystem::<f64>::homogeneous(1);
    let data = vec![DataProfile::bump(1.0, 0.7, 1.0)];
    let grid = Grid::uniform(1.0 / 32.0, 6.0, 12.0);
    let run = evolve(&sys, &data, &grid, &EvolveOptions { snapshot_stride: Some(1), ..Default::default() }).unwrap();
    let mut worst: f64 = 0.0;
    let mut inside: f64 = 0.0;
    for row in &run.snapshot {
        for (k, &v) in row.v.iter().enumerate() {
            let psi = row.psi[0][k];
            if row.u > 0.5 + 1e-9 {
                worst = worst.max(psi.abs());
            } else {
                inside = inside.max(psi.abs());
            }
            let _ = v;
        }
    }
    assert!(inside > 0.1, "data should propagate: {inside}");
    assert!(worst <= 1e-12, "field behind the wave: {worst}");
}

fn error_at(h: f64, points: &[(f64, f64)]) -> f64 {
    let sys = SimSystem::<f64>::homogeneous(1).with_forcing(0, forcing);
    let data = vec![DataProfile::zero()];
    let grid = Grid::uniform(h, 4.0, 8.0);
    let probes = points
        .iter()
        .map(|&(u, v)| Probe { kind: ProbeKind::FixedR(v - u), field: 0, quantity: Quantity::Psi })
        .collect();
    let run = evolve(&sys, &data, &grid, &EvolveOptions { probes, samples_per_decade: 100_000, ..Default::default() })
        .unwrap();
    let f = Forcing::closure(1.0, forcing);
    let mut err: f64 = 0.0;
    for (p, &(u, v)) in run.probes.iter().zip(points) {
        let t = u + v;
        let &(_, y) = p.samples.iter().find(|(s, _)| (s - t).abs() < 1e-9).expect("sample at t");
        let exact = kernel_value(&f, u, v, &QuadratureOptions::default()).unwrap().psi;
        err = err.max((y - exact).abs());
    }
    err
}

#[test]
fn forced_linear_run_is_second_order() {
    let pts = [(2.0, 3.0), (3.0, 7.0), (1.5, 6.0)];
    let e: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0].iter().map(|&h| error_at(h, &pts)).collect();
    let o1 = (e[0] / e[1]).log2();
    let o2 = (e[1] / e[2]).log2();
    assert!(o1 >= 1.9 && o2 >= 1.9, "orders {o1} {o2} from errors {e:?}");
}

#[test]
fn snapshot_round_trip() {
    let sys = SimSystem::<f64>::homogeneous(2);
    let data = vec![DataProfile::bump(1.0, 0.0, 1.0), DataProfile::bump(0.0, 1.0, 0.5)];
    let grid = Grid::uniform(0.125, 2.0, 4.0);
    let run = evolve(&sys, &data, &grid, &EvolveOptions { snapshot_stride: Some(3), ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    write_snapshot(&mut buf, run.h, 2, &run.snapshot).unwrap();
    let (h, fields, rows) = read_snapshot(buf.as_slice()).unwrap();
    assert_eq!(h, 0.125);
    assert_eq!(fields, 2);
    assert_eq!(rows, run.snapshot);
    assert!(read_snapshot(&b"XXXX"[..]).is_err());
}

#[test]
fn invalid_inputs_are_config_errors() {
    let sys = SimSystem::<f64>::homogeneous(1);
    let data = vec![DataProfile::bump(1.0, 0.0, 1.0)];
    let bad = Grid::uniform(-1.0, 1.0, 1.0);
    assert!(matches!(evolve(&sys, &data, &bad, &EvolveOptions::default()), Err(SimError::Config(_))));
    let term = SimTerm {
        equation: 3,
        source: 0,
        derivative: Derivative::None,
        power: 2.0,
        coefficient: 1.0,
        t_weight: 0.0,
        u_weight: 0.0,
    };
    assert!(matches!(SimSystem::new(1, vec![term]), Err(SimError::Config(_))));
}

#[test]
fn strauss_small_data_decays_at_fixed_r() {
    let term = SimTerm {
        equation: 0,
        source: 0,
        derivative: Derivative::None,
        power: 3.0,
        coefficient: 1.0,
        t_weight: 0.0,
        u_weight: 0.0,
    };
    let sys = SimSystem::new(1, vec![term]).unwrap();
    let data = vec![DataProfile::bump(0.1, 0.0, 1.0)];
    let grid = Grid::uniform(1.0 / 16.0, 40.0, 80.0);
    let run = evolve(&sys, &data, &grid, &EvolveOptions::default()).unwrap();
    assert!(run.blowup.is_none());
    assert!(run.max_abs_psi[0] < 1.0);
}
