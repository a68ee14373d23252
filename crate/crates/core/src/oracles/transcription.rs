//! Direct transcription: piecewise-constant unit controls in the magnetic
//! space, endpoint restoration by minimum-norm Gauss-Newton and bisection on
//! the duration. Any restored path is horizontal, so its duration bounds the
//! distance from above.

use super::{dist, MagneticSpace};
use crate::error::{Error, Result};
use crate::reconstruction::MagneticGeodesic;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranscriptionPath {
    /// One unit control `(u_x, u_y)` per segment.
    pub controls: Vec<Vec<f64>>,
    pub duration: f64,
    pub gap: f64,
}

impl TranscriptionPath {
    pub fn segments(&self) -> usize {
        self.controls.len()
    }

    /// Averages the controls `(p, G)` of `c` over `segments` equal pieces of
    /// `[t0, t1]`.
    pub fn from_geodesic(c: &MagneticGeodesic, t0: f64, t1: f64, segments: usize) -> Self {
        let n = c.n();
        let h = (t1 - t0) / segments as f64;
        let (nodes, weights) = crate::quad::gl9();
        let controls = (0..segments)
            .map(|k| {
                let mut u = vec![0.0; n + 1];
                for (s, w) in nodes.iter().zip(weights) {
                    let y = c.state_at(t0 + (k as f64 + s) * h);
                    for i in 0..n {
                        u[i] += w * y[i];
                    }
                    u[n] += w * c.g_at(&y[n..]);
                }
                normalise(u)
            })
            .collect();
        TranscriptionPath { controls, duration: t1 - t0, gap: f64::NAN }
    }

    /// Concatenation, durations adding.
    pub fn then(mut self, other: TranscriptionPath) -> Self {
        self.controls.extend(other.controls);
        self.duration += other.duration;
        self
    }
}

fn normalise(mut u: Vec<f64>) -> Vec<f64> {
    let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        u.iter_mut().for_each(|v| *v /= n);
    }
    u
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BruteForceOptions {
    pub segments: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Endpoint gap accepted as feasible.
    pub feasible: f64,
    pub bisections: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        BruteForceOptions { segments: 48, restarts: 4, seed: 11, feasible: 1e-10, bisections: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub bound: f64,
    pub path: TranscriptionPath,
    pub feasible_restarts: usize,
}

/// Endpoint reached from `a` with controls `w` (normalised per segment)
/// over duration `t`. `z` uses Simpson's rule, exact for quadratic `F`
/// along straight segments.
fn endpoint(space: &MagneticSpace, a: &[f64], w: &[f64], t: f64, segs: usize) -> Vec<f64> {
    let n = space.n();
    let dt = t / segs as f64;
    let mut p = a.to_vec();
    let mut mid = vec![0.0; n];
    let mut next = vec![0.0; n];
    for k in 0..segs {
        let u = &w[k * (n + 1)..(k + 1) * (n + 1)];
        let un = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        for i in 0..n {
            mid[i] = p[i] + 0.5 * dt * u[i] / un;
            next[i] = p[i] + dt * u[i] / un;
        }
        let uy = u[n] / un;
        let fint = dt / 6.0 * (space.f.eval(&p[..n]) + 4.0 * space.f.eval(&mid) + space.f.eval(&next));
        p[..n].copy_from_slice(&next);
        p[n] += dt * uy;
        p[n + 1] += uy * fint;
    }
    p
}

fn gap(space: &MagneticSpace, a: &[f64], b: &[f64], w: &[f64], t: f64, segs: usize) -> Vec<f64> {
    endpoint(space, a, w, t, segs).iter().zip(b).map(|(u, v)| u - v).collect()
}

/// Minimum-norm Gauss-Newton on the endpoint gap at fixed duration.
fn restore(space: &MagneticSpace, a: &[f64], b: &[f64], w: &mut Vec<f64>, t: f64, segs: usize, feasible: f64) -> f64 {
    let m = space.n() + 2;
    let nv = w.len();
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = gap(space, a, b, w, t, segs);
    let mut rn = norm(&r);
    for _ in 0..60 {
        if rn < feasible {
            break;
        }
        let mut j = DMatrix::zeros(m, nv);
        for k in 0..nv {
            let h = 1e-7 * (1.0 + w[k].abs());
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[k] += h;
            wm[k] -= h;
            let (rp, rm) = (gap(space, a, b, &wp, t, segs), gap(space, a, b, &wm, t, segs));
            for i in 0..m {
                j[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jjt = &j * j.transpose();
        let mut reg = jjt.clone();
        let scale = (0..m).map(|i| jjt[(i, i)]).fold(0.0, f64::max).max(1e-300);
        for i in 0..m {
            reg[(i, i)] += 1e-14 * scale;
        }
        let Some(y) = reg.lu().solve(&DVector::from_column_slice(&r)) else { break };
        let step = j.transpose() * y;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let wt: Vec<f64> = w.iter().zip(step.iter()).map(|(a, s)| a - alpha * s).collect();
            let rt = gap(space, a, b, &wt, t, segs);
            let rtn = norm(&rt);
            if rtn < rn {
                *w = wt;
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        // Keep each control on the unit sphere so the parameterisation stays well scaled.
        let n1 = space.n() + 1;
        for c in w.chunks_mut(n1) {
            let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if cn > 0.0 {
                c.iter_mut().for_each(|v| *v /= cn);
            }
        }
    }
    rn
}

fn shrink(space: &MagneticSpace, a: &[f64], b: &[f64], w0: Vec<f64>, t0: f64, segs: usize, opts: &BruteForceOptions) -> Option<(f64, Vec<f64>, f64)> {
    let mut w = w0;
    let g0 = restore(space, a, b, &mut w, t0, segs, opts.feasible);
    if g0 >= opts.feasible {
        return None;
    }
    let n = space.n();
    let lower = dist(&a[..=n], &b[..=n]);
    let (mut lo, mut hi) = (lower, t0);
    let (mut best_w, mut best_gap) = (w.clone(), g0);
    for _ in 0..opts.bisections {
        if hi - lo < 1e-9 * hi.max(1.0) {
            break;
        }
        let t = 0.5 * (lo + hi);
        let mut wt = best_w.clone();
        let g = restore(space, a, b, &mut wt, t, segs, opts.feasible);
        if g < opts.feasible {
            hi = t;
            best_w = wt;
            best_gap = g;
        } else {
            lo = t;
        }
    }
    Some((hi, best_w, best_gap))
}

/// Upper bound on the distance from `a` to `b` by the shortest restored
/// transcription path found from `guess` (resampled to `segments`) and
/// perturbed restarts.
pub fn brute_force_upper_bound(
    space: &MagneticSpace,
    a: &[f64],
    b: &[f64],
    guess: Option<&TranscriptionPath>,
    opts: &BruteForceOptions,
) -> Result<BruteForceResult> {
    space.check_point(a)?;
    space.check_point(b)?;
    if opts.segments < 8 {
        return Err(Error::InvalidParam("at least 8 segments".into()));
    }
    let n = space.n();
    let segs = opts.segments;
    if dist(a, b) == 0.0 {
        let controls = vec![normalise(vec![1.0; n + 1]); segs];
        return Ok(BruteForceResult { bound: 0.0, path: TranscriptionPath { controls, duration: 0.0, gap: 0.0 }, feasible_restarts: 1 });
    }
    let (w0, t0) = match guess {
        Some(g) => {
            let m = g.segments();
            let w: Vec<f64> = (0..segs).flat_map(|k| g.controls[(k * m) / segs].clone()).collect();
            (w, g.duration)
        }
        None => {
            let d: Vec<f64> = (0..=n).map(|i| b[i] - a[i]).collect();
            let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u = if dn > 0.0 { normalise(d) } else { normalise(vec![1.0; n + 1]) };
            ((0..segs).flat_map(|_| u.clone()).collect(), 3.0 * dist(a, b) + 1.0)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![(w0.clone(), t0)];
    for _ in 0..opts.restarts {
        let w: Vec<f64> = w0.iter().map(|v| v + 0.05 * (2.0 * rng.random::<f64>() - 1.0)).collect();
        starts.push((w, t0 * (1.0 + 0.2 * rng.random::<f64>())));
    }
    let runs: Vec<Option<(f64, Vec<f64>, f64)>> =
        starts.into_par_iter().map(|(w, t)| shrink(space, a, b, w, t, segs, opts)).collect();
    let feasible_restarts = runs.iter().filter(|r| r.is_some()).count();
    let best = runs
        .into_iter()
        .flatten()
        .fold(None::<(f64, Vec<f64>, f64)>, |acc, r| match acc {
            Some(ref b) if b.0 <= r.0 => acc,
            _ => Some(r),
        })
        .ok_or_else(|| Error::Solver("no restart reached the endpoint".into()))?;
    let controls = best.1.chunks(n + 1).map(|c| normalise(c.to_vec())).collect();
    Ok(BruteForceResult { bound: best.0, path: TranscriptionPath { controls, duration: best.0, gap: best.2 }, feasible_restarts })
}
