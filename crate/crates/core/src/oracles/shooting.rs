//! Midpoint shooting for magnetic geodesics between two points.
//!
//! Unknowns are the midpoint `x_m`, the control direction `v = (p, G)` there
//! (normalised by a residual), the pencil slope `b`, the midpoint `(y_m, z_m)`
//! and the half-duration `tau`; the pencil offset follows from
//! `a = G - b F(x_m)`. The flow runs `tau` forward and backward and must hit
//! `B` and `A`.

use super::{dist, MagneticSpace};
use crate::error::{Error, Result};
use crate::integrator::{integrate_dyn, Dynamics, FnDynamics, Options};
use crate::reconstruction::MagneticGeodesic;
use crate::reduced::{Pencil, ReducedSystem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShootGuess {
    pub x_mid: Vec<f64>,
    pub control: Vec<f64>,
    pub b: f64,
    pub yz_mid: [f64; 2],
    pub half_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShootOptions {
    pub starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    /// Residual accepted as a connection.
    pub accept: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { starts: 24, seed: 7, tol: 1e-12, max_iter: 150, accept: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShootTrace {
    pub start: usize,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ShootSolution {
    pub pencil: Pencil,
    /// Reduced state `[p, x]` at the midpoint.
    pub mid_state: Vec<f64>,
    pub yz_mid: [f64; 2],
    pub half_time: f64,
    pub residual: f64,
    /// Geodesic on `[-tau, tau]`.
    pub geodesic: MagneticGeodesic,
    pub system: ReducedSystem,
}

impl ShootSolution {
    pub fn duration(&self) -> f64 {
        2.0 * self.half_time
    }
}

#[derive(Clone, Debug)]
pub struct ShootOutcome {
    pub best: Option<ShootSolution>,
    pub best_residual: f64,
    pub traces: Vec<ShootTrace>,
}

struct Problem<'a> {
    space: &'a MagneticSpace,
    a: &'a [f64],
    b: &'a [f64],
    tol: f64,
    tau_max: f64,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.space.n()
    }

    fn unknowns(&self) -> usize {
        2 * self.n() + 5
    }

    fn unpack(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>, f64, [f64; 2], f64) {
        let n = self.n();
        let x = z[..n].to_vec();
        let v = z[n..2 * n + 1].to_vec();
        (x, v, z[2 * n + 1], [z[2 * n + 2], z[2 * n + 3]], z[2 * n + 4])
    }

    fn pack(&self, g: &ShootGuess) -> Vec<f64> {
        let mut z = g.x_mid.clone();
        z.extend(&g.control);
        z.extend([g.b, g.yz_mid[0], g.yz_mid[1], g.half_time]);
        z
    }

    /// Midpoint state `[p, x]` and reduced system for the unknowns `z`.
    fn setup(&self, z: &[f64]) -> Result<(ReducedSystem, Vec<f64>)> {
        let n = self.n();
        let (x, v, b, _, tau) = self.unpack(z);
        let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(tau > 1e-9 && tau <= self.tau_max) || !(vn > 1e-9) {
            return Err(Error::Solver("degenerate shooting parameters".into()));
        }
        let g_mid = v[n] / vn;
        let a = g_mid - b * self.space.f.eval(&x);
        let sys = ReducedSystem::from_poly(self.space.f.clone(), Pencil { a, b });
        let mut s0: Vec<f64> = v[..n].iter().map(|c| c / vn).collect();
        s0.extend(&x);
        Ok((sys, s0))
    }

    fn build(&self, z: &[f64], tol: f64) -> Result<(ReducedSystem, Vec<f64>, MagneticGeodesic)> {
        let (sys, s0) = self.setup(z)?;
        let (_, _, _, yz, tau) = self.unpack(z);
        let traj = sys.integrate(&s0, (-tau, tau), tol)?;
        let c = MagneticGeodesic::from_reduced(&sys, Arc::new(traj), 0.0, yz);
        Ok((sys, s0, c))
    }

    /// Endpoint gaps at `+-tau` and the control normalisation. `(y, z)` ride
    /// along as extra state components.
    fn residual(&self, z: &[f64], tol: f64) -> Option<Vec<f64>> {
        let n = self.n();
        let (sys, mut s0) = self.setup(z).ok()?;
        let (_, _, _, yz, tau) = self.unpack(z);
        s0.extend(yz);
        let dynamics = FnDynamics {
            dim: 2 * n + 2,
            f: |y: &[f64], dy: &mut [f64]| {
                sys.rhs(&y[..2 * n], &mut dy[..2 * n]);
                let x = &y[n..2 * n];
                let g = sys.g.eval(x);
                dy[2 * n] = g;
                dy[2 * n + 1] = g * sys.f.eval(x);
            },
        };
        // Wild trial steps can make the flow stiff; give up early on those.
        let opts = Options { max_steps: 20_000, ..Options::new(tol) };
        let traj = integrate_dyn(&dynamics, &s0, 0.0, (-tau, tau), &opts).ok()?;
        let (eb, ea) = (traj.eval(tau), traj.eval(-tau));
        let mut r: Vec<f64> = eb[n..].iter().zip(self.b).map(|(u, w)| u - w).collect();
        r.extend(ea[n..].iter().zip(self.a).map(|(u, w)| u - w));
        let vn = z[n..2 * n + 1].iter().map(|c| c * c).sum::<f64>().sqrt();
        r.push(vn - 1.0);
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self, z: &[f64], tol: f64) -> Option<DMatrix<f64>> {
        let m = self.unknowns();
        let mut j = DMatrix::zeros(m, m);
        for k in 0..m {
            let h = 1e-6 * (1.0 + z[k].abs());
            let (mut zp, mut zm) = (z.to_vec(), z.to_vec());
            zp[k] += h;
            zm[k] -= h;
            let (rp, rm) = (self.residual(&zp, tol)?, self.residual(&zm, tol)?);
            for i in 0..m {
                j[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Some(j)
    }

    /// Levenberg-Marquardt from `z0`, integrating coarsely until the
    /// residual is small and at the requested tolerance afterwards.
    fn solve(&self, z0: Vec<f64>, max_iter: usize, accept: f64, start: usize) -> (Vec<f64>, f64, ShootTrace) {
        let mut z = z0;
        let mut trace = ShootTrace { start, iterations: 0, residuals: Vec::new() };
        let coarse = self.tol.max(1e-11);
        let mut tol = coarse;
        let Some(mut r) = self.residual(&z, tol) else {
            return (z, f64::INFINITY, trace);
        };
        let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut rn = norm(&r);
        let (mut lambda, mut nu) = (1e-3, 2.0);
        trace.residuals.push(rn);
        for it in 0..max_iter {
            trace.iterations = it + 1;
            if tol == coarse && rn < 1e-5 && coarse > self.tol {
                tol = self.tol;
                match self.residual(&z, tol) {
                    Some(rf) => {
                        rn = norm(&rf);
                        r = rf;
                    }
                    None => break,
                }
            }
            if rn < 0.1 * accept && tol == self.tol {
                break;
            }
            let Some(j) = self.jacobian(&z, tol.max(1e-9)) else { break };
            let jt = j.transpose();
            let jtj = &jt * &j;
            let g = &jt * DVector::from_column_slice(&r);
            let dmax = (0..jtj.nrows()).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
            let mut improved = false;
            // Nielsen's damping update with Marquardt scaling, proportional
            // to the residual so the last steps are nearly Gauss-Newton.
            let mu = rn.min(1.0);
            for _ in 0..30 {
                let mut a = jtj.clone();
                for i in 0..a.nrows() {
                    a[(i, i)] += lambda * mu * jtj[(i, i)].max(1e-12 * dmax);
                }
                let Some(step) = a.clone().lu().solve(&(-&g)) else {
                    lambda *= nu;
                    nu *= 2.0;
                    continue;
                };
                let zt: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let predicted = -(step.dot(&g) + 0.5 * step.dot(&(&jtj * &step)));
                if let Some(rt) = self.residual(&zt, tol) {
                    let rtn = norm(&rt);
                    let rho = 0.5 * (rn * rn - rtn * rtn) / predicted.max(1e-300);
                    if rtn < rn {
                        z = zt;
                        r = rt;
                        rn = rtn;
                        lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                        nu = 2.0;
                        improved = true;
                        break;
                    }
                }
                lambda *= nu;
                nu *= 2.0;
            }
            trace.residuals.push(rn);
            if !improved {
                break;
            }
            // Stalled: no halving in fifteen iterations, or in five once acceptable.
            let h = &trace.residuals;
            let window = if rn < accept && tol == self.tol { 5 } else { 15 };
            if h.len() > window && h[h.len() - 1] > 0.5 * h[h.len() - 1 - window] {
                break;
            }
        }
        (z, rn, trace)
    }
}

fn random_guess(rng: &mut ChaCha8Rng, a: &[f64], b: &[f64], n: usize) -> ShootGuess {
    let mid: Vec<f64> = a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect();
    let d = dist(a, b).max(1e-3);
    let radius = (0.5 * d).max(1.0);
    let x_mid = (0..n).map(|i| mid[i] + radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
    let mut control: Vec<f64> = (0..=n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    let cn = control.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-9);
    control.iter_mut().for_each(|c| *c /= cn);
    let b_choices = [1.0, -1.0, 2.0, -2.0, 0.5, -0.5];
    ShootGuess {
        x_mid,
        control,
        b: b_choices[rng.random_range(0..b_choices.len())],
        yz_mid: [mid[n], mid[n + 1]],
        half_time: 0.5 * d * (1.0 + rng.random::<f64>()),
    }
}

/// Connects `a` to `b` by a magnetic geodesic. Every start runs to
/// completion and the shortest accepted solution wins, independent of
/// scheduling.
pub fn shoot_connect(space: &MagneticSpace, a: &[f64], b: &[f64], guesses: &[ShootGuess], opts: &ShootOptions) -> Result<ShootOutcome> {
    space.check_point(a)?;
    space.check_point(b)?;
    if dist(a, b) == 0.0 {
        return Err(Error::InvalidParam("endpoints coincide".into()));
    }
    let n = space.n();
    let mut starts: Vec<ShootGuess> = guesses.to_vec();
    let longest = starts.iter().map(|g| g.half_time).fold(0.0, f64::max);
    let prob = Problem { space, a, b, tol: opts.tol, tau_max: 4.0 * (dist(a, b) + 1.0) + 2.0 * longest };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        starts.push(random_guess(&mut rng, a, b, n));
    }
    for g in &starts {
        if g.x_mid.len() != n || g.control.len() != n + 1 {
            return Err(Error::Dimension { expected: n, got: g.x_mid.len() });
        }
    }
    let runs: Vec<(Vec<f64>, f64, ShootTrace)> = starts
        .par_iter()
        .enumerate()
        .map(|(k, g)| prob.solve(prob.pack(g), opts.max_iter, opts.accept, k))
        .collect();
    let best_residual = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mut best: Option<(usize, f64)> = None;
    for (k, (z, res, _)) in runs.iter().enumerate() {
        if *res < opts.accept {
            let tau = z[2 * n + 4];
            if best.map_or(true, |(_, t)| tau < t - 1e-9) {
                best = Some((k, tau));
            }
        }
    }
    let best = match best {
        Some((k, _)) => {
            let z = &runs[k].0;
            let (system, mid_state, geodesic) = prob.build(z, opts.tol)?;
            let (_, _, _, yz_mid, half_time) = prob.unpack(z);
            Some(ShootSolution { pencil: system.pencil, mid_state, yz_mid, half_time, residual: runs[k].1, geodesic, system })
        }
        None => None,
    };
    Ok(ShootOutcome { best, best_residual, traces: runs.into_iter().map(|r| r.2).collect() })
}
