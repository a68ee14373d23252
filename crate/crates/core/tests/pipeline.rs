use carnot_lab::models::{build_model, rotate_momentum, rotate_point, rotate_state, rotation_2d, ModelKind};
use carnot_lab::reconstruction::reconstruct;
use carnot_lab::reduced::{reduced_system, Momentum, Pencil, ReducedSystem};
use proptest::prelude::*;
use std::sync::Arc;

fn eng2(mu: &[f64]) -> ReducedSystem {
    let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
    reduced_system(&spec, &Momentum::new(mu.to_vec()), Pencil::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unit_speed_and_horizontal(a1 in -0.5..0.5f64, a3 in -4.0..-1.0f64, px in -1.0..1.0f64, py in -1.0..1.0f64, x in -0.2..0.2f64) {
        let sys = eng2(&[1.0, a1, 0.0, a3]);
        prop_assume!(px.hypot(py) > 0.1);
        let Ok(s0) = sys.on_shell(&[px, py], &[x, 0.1]) else { return Ok(()) };
        let tr = sys.integrate(&s0, (0.0, 4.0), 1e-11).unwrap();
        let g = reconstruct(&sys, Arc::new(tr), None).unwrap();
        let grid: Vec<f64> = (1..40).map(|k| 0.1 * k as f64).collect();
        for &t in &grid {
            prop_assert!((sys.hamiltonian(&g.traj.eval(t)) - 0.5).abs() < 1e-8);
        }
        prop_assert!(g.unit_speed_defect() < 1e-7);
        prop_assert!(g.horizontality_residual(&grid, 1e-3) < 1e-7);
    }

    #[test]
    fn rotation_commutes_with_flow(angle in -3.0..3.0f64, px in -1.0..1.0f64, py in -1.0..1.0f64) {
        prop_assume!(px.hypot(py) > 0.1);
        let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
        let mu = [1.0, 0.2, -0.3, -4.0];
        let q = rotation_2d(angle);
        let sys = eng2(&mu);
        let s0 = sys.on_shell(&[px, py], &[0.2, -0.1]).unwrap();
        let sys_q = eng2(&rotate_momentum(&spec, &mu, &q).unwrap());
        let s0_q = rotate_state(&s0, &q).unwrap();
        let g = reconstruct(&sys, Arc::new(sys.integrate(&s0, (0.0, 2.0), 1e-12).unwrap()), None).unwrap();
        let g_q = reconstruct(&sys_q, Arc::new(sys_q.integrate(&s0_q, (0.0, 2.0), 1e-12).unwrap()), None).unwrap();
        for k in 0..=10 {
            let t = 0.2 * k as f64;
            prop_assert!(rotate_point(&spec, &g.point_at(t), &q).unwrap().distance(&g_q.point_at(t)) < 1e-8);
        }
    }
}
