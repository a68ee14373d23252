//! Near-minimisers `c_n` joining `c_h(-n)` and `c_h(n)` on a homoclinic
//! geodesic, and their `Cost_y` against the period map.

use super::{brute_force_upper_bound, shoot_connect, BruteForceOptions, MagneticSpace, ShootGuess, ShootOptions, TranscriptionPath};
use crate::error::Result;
use crate::integrator::{find_events_fn, EventKind};
use crate::reconstruction::MagneticGeodesic;
use crate::reduced::{integrate_homoclinic, Equilibrium, ReducedSystem};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SequenceOptions {
    pub shoot: ShootOptions,
    pub brute: BruteForceOptions,
    pub tol: f64,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        SequenceOptions { shoot: ShootOptions { starts: 8, ..ShootOptions::default() }, brute: BruteForceOptions::default(), tol: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceRow {
    pub n: usize,
    pub method: String,
    pub duration: Option<f64>,
    pub cost_y: Option<f64>,
    pub gap: Option<f64>,
    /// `T_n <= 2n` up to `1e-8`.
    pub within_bound: bool,
    /// `y_n` changes sign on the connecting curve.
    pub y_crosses_zero: bool,
    pub residual: f64,
    pub error: Option<String>,
}

/// One row per entry of `ns`, in order.
pub fn sequence_experiment(
    sys: &ReducedSystem,
    eq: &Equilibrium,
    turn: &[f64],
    theta2: f64,
    ns: &[usize],
    opts: &SequenceOptions,
) -> Result<Vec<SequenceRow>> {
    let n_max = ns.iter().copied().max().unwrap_or(1) as f64;
    let traj = integrate_homoclinic(sys, eq, turn, n_max + 1.0, opts.tol)?;
    let ch = MagneticGeodesic::from_reduced(sys, Arc::new(traj), 0.0, [0.0, 0.0]);
    let space = MagneticSpace::new(sys.f.clone());
    let dim = sys.n();
    let rows = ns.par_iter().map(|&k| row(sys, &space, &ch, turn, theta2, k, dim, opts)).collect();
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn row(sys: &ReducedSystem, space: &MagneticSpace, ch: &MagneticGeodesic, turn: &[f64], theta2: f64, k: usize, dim: usize, opts: &SequenceOptions) -> SequenceRow {
    let t = k as f64;
    let (a, b) = (ch.point_at(-t), ch.point_at(t));
    let mut control = turn[..dim].to_vec();
    control.push(sys.g_at(&turn[dim..]));
    let guess = ShootGuess { x_mid: turn[dim..].to_vec(), control, b: sys.pencil.b, yz_mid: [0.0, 0.0], half_time: t };
    let mut out = SequenceRow {
        n: k,
        method: "shooting".into(),
        duration: None,
        cost_y: None,
        gap: None,
        within_bound: false,
        y_crosses_zero: false,
        residual: f64::INFINITY,
        error: None,
    };
    match shoot_connect(space, &a, &b, &[guess], &opts.shoot) {
        Ok(o) => {
            out.residual = o.best_residual;
            if let Some(sol) = o.best {
                let tau = sol.half_time;
                let (pa, pb) = (sol.geodesic.point_at(-tau), sol.geodesic.point_at(tau));
                let cost_y = (pb[dim] - pa[dim]) - (pb[dim + 1] - pa[dim + 1]);
                let grid: Vec<f64> = (0..=400).map(|i| -tau + 2.0 * tau * i as f64 / 400.0).collect();
                let zeros = find_events_fn(&grid, |s| sol.geodesic.point_at(s)[dim], EventKind::ZeroCrossing);
                out.duration = Some(sol.duration());
                out.cost_y = Some(cost_y);
                out.gap = Some((cost_y - theta2).abs());
                out.within_bound = sol.duration() <= 2.0 * t + 1e-8;
                out.y_crosses_zero = !zeros.is_empty();
                return out;
            }
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out.method = "brute-force".into();
    let seed = TranscriptionPath::from_geodesic(ch, -t, t, opts.brute.segments);
    match brute_force_upper_bound(space, &a, &b, Some(&seed), &opts.brute) {
        Ok(r) => {
            let cost_y = (b[dim] - a[dim]) - (b[dim + 1] - a[dim + 1]);
            out.duration = Some(r.bound);
            out.cost_y = Some(cost_y);
            out.gap = Some((cost_y - theta2).abs());
            out.within_bound = r.bound <= 2.0 * t + 1e-8;
            out.y_crosses_zero = a[dim] * b[dim] < 0.0;
            out.residual = r.path.gap;
        }
        Err(e) => {
            out.method = "failed".into();
            out.error = Some(e.to_string());
        }
    }
    out
}
