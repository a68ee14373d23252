//! Lifting reduced solutions to group geodesics, the magnetic projection and
//! the magnetic lift.

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::models::{GroupPoint, GroupSpec};
use crate::poly::Poly;
use crate::quad::gl9;
use crate::reduced::{Momentum, Pencil, ReducedSystem};
use serde::Serialize;
use std::sync::Arc;

/// Running integrals `int G(x) Q_i(x) dt` along a reduced trajectory,
/// accumulated exactly on each step's interpolant.
#[derive(Clone, Debug)]
pub struct Lift {
    traj: Arc<Trajectory>,
    n: usize,
    integrands: Vec<Poly>,
    breaks: Vec<f64>,
    cum: Vec<Vec<f64>>,
    base: Vec<f64>,
}

impl Lift {
    /// Lift with value `offset` at time `t_ref`.
    pub fn new(traj: Arc<Trajectory>, n: usize, integrands: Vec<Poly>, t_ref: f64, offset: &[f64]) -> Self {
        let breaks = traj.breakpoints();
        let m = integrands.len();
        let mut cum = Vec::with_capacity(breaks.len());
        let mut acc = vec![0.0; m];
        cum.push(acc.clone());
        for w in breaks.windows(2) {
            let inc = Self::segment(&traj, n, &integrands, w[0], w[1]);
            for (a, d) in acc.iter_mut().zip(inc) {
                *a += d;
            }
            cum.push(acc.clone());
        }
        let mut lift = Lift { traj, n, integrands, breaks, cum, base: vec![0.0; m] };
        let at_ref = lift.raw(t_ref);
        lift.base = at_ref.iter().zip(offset).map(|(r, o)| r - o).collect();
        lift
    }

    fn segment(traj: &Trajectory, n: usize, integrands: &[Poly], a: f64, b: f64) -> Vec<f64> {
        let (nodes, weights) = gl9();
        let mut out = vec![0.0; integrands.len()];
        if a == b {
            return out;
        }
        for (s, w) in nodes.iter().zip(weights) {
            let y = traj.eval(a + s * (b - a));
            let x = &y[n..];
            for (o, p) in out.iter_mut().zip(integrands) {
                *o += w * p.eval(x);
            }
        }
        out.iter().map(|v| v * (b - a)).collect()
    }

    fn raw(&self, t: f64) -> Vec<f64> {
        let k = self.breaks.partition_point(|&b| b <= t).saturating_sub(1).min(self.breaks.len() - 2);
        let inc = Self::segment(&self.traj, self.n, &self.integrands, self.breaks[k], t);
        self.cum[k].iter().zip(inc).map(|(c, d)| c + d).collect()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.raw(t).iter().zip(&self.base).map(|(r, b)| r - b).collect()
    }

    /// Lift whose components are linear combinations of this one's.
    pub fn combined(&self, rows: &[Vec<f64>]) -> Lift {
        let nx = self.traj.dim() / 2;
        let integrands = rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.integrands)
                    .fold(Poly::zero(nx), |acc, (c, p)| acc.add(&p.scale(*c)))
            })
            .collect();
        let mix = |v: &[f64]| -> Vec<f64> {
            rows.iter().map(|row| row.iter().zip(v).map(|(c, x)| c * x).sum()).collect()
        };
        Lift {
            traj: self.traj.clone(),
            n: self.n,
            integrands,
            breaks: self.breaks.clone(),
            cum: self.cum.iter().map(|c| mix(c)).collect(),
            base: mix(&self.base),
        }
    }
}

/// Sub-Riemannian geodesic in the group, carried by its reduced trajectory.
#[derive(Clone, Debug)]
pub struct GroupGeodesic {
    pub spec: GroupSpec,
    pub mu: Momentum,
    pub pencil: Pencil,
    pub traj: Arc<Trajectory>,
    g: Poly,
    lift: Lift,
}

impl GroupGeodesic {
    pub fn span(&self) -> (f64, f64) {
        self.traj.span()
    }

    pub fn point_at(&self, t: f64) -> GroupPoint {
        let n = self.spec.rank_h;
        GroupPoint { theta: self.lift.eval(t), x: self.traj.eval(t)[n..].to_vec() }
    }

    /// Control `u = (p, G(x))`, which is also the left-translated velocity.
    pub fn control_at(&self, t: f64) -> Vec<f64> {
        let n = self.spec.rank_h;
        let y = self.traj.eval(t);
        let mut u = y[..n].to_vec();
        u.push(self.g.eval(&y[n..]));
        u
    }

    /// Max `| |u|^2 - 1 |` over the trajectory's fine grid.
    pub fn unit_speed_defect(&self) -> f64 {
        self.traj
            .fine_grid(2)
            .into_iter()
            .map(|t| (self.control_at(t).iter().map(|v| v * v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Max horizontality residual `|theta_k' - u_{n+1} P_k(x)|` by a
    /// fourth-order central difference of the dense lift.
    pub fn horizontality_residual(&self, grid: &[f64], h: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for &t in grid {
            let d = fd4(|s| self.point_at(s).theta, t, h);
            let g = self.point_at(t);
            let un = *self.control_at(t).last().unwrap();
            for (k, p) in self.spec.frame_polys.iter().enumerate() {
                worst = worst.max((d[k] - un * p.eval(&g.x)).abs());
            }
        }
        worst
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.spec.dim_a).map(|k| format!("theta{k}")));
        header.extend((1..=self.spec.rank_h).map(|k| format!("x{k}")));
        wr.write_record(&header)?;
        for t in self.traj.breakpoints() {
            let mut row = vec![t.to_string()];
            row.extend(self.point_at(t).coords().iter().map(f64::to_string));
            wr.write_record(&row)?;
        }
        wr.flush()
    }
}

pub(crate) fn fd4<F: Fn(f64) -> Vec<f64>>(f: F, t: f64, h: f64) -> Vec<f64> {
    let (a, b, c, d) = (f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h));
    (0..a.len()).map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h)).collect()
}

/// Lifts a reduced trajectory of `sys` through `gamma0` at `t_ref` (the
/// identity at `t = 0` by default).
pub fn reconstruct(sys: &ReducedSystem, traj: Arc<Trajectory>, gamma0: Option<(&GroupPoint, f64)>) -> Result<GroupGeodesic> {
    let (Some(spec), Some(mu)) = (&sys.spec, &sys.mu) else {
        return Err(Error::InvalidParam("reconstruction needs the model and momentum".into()));
    };
    let (lo, hi) = traj.span();
    let (g0, t_ref) = match gamma0 {
        Some((g, t)) => (g.clone(), t),
        None => {
            let t = if lo <= 0.0 && 0.0 <= hi { 0.0 } else { lo };
            let x = traj.eval(t)[spec.rank_h..].to_vec();
            (GroupPoint { theta: vec![0.0; spec.dim_a], x }, t)
        }
    };
    g0.check(spec)?;
    let y0 = traj.state_at(t_ref)?;
    let off = (sys.hamiltonian(&y0) - 0.5).abs().max(traj.energy_drift);
    if off > 1e-6 {
        return Err(Error::OffShell(off));
    }
    let dx = y0[spec.rank_h..].iter().zip(&g0.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if dx > 1e-9 {
        return Err(Error::InvalidParam("initial group point does not match x(t_ref)".into()));
    }
    let integrands = spec.frame_polys.iter().map(|p| sys.g.mul(p)).collect();
    let lift = Lift::new(traj.clone(), spec.rank_h, integrands, t_ref, &g0.theta);
    Ok(GroupGeodesic { spec: spec.clone(), mu: mu.clone(), pencil: sys.pencil, traj, g: sys.g.clone(), lift })
}

/// Geodesic of the magnetic space `R^{n+2}_F` with potential `G = a + bF`.
#[derive(Clone, Debug)]
pub struct MagneticGeodesic {
    pub f: Poly,
    pub pencil: Pencil,
    pub traj: Arc<Trajectory>,
    g: Poly,
    lift: Lift,
}

#[derive(Clone, Debug, Serialize)]
pub struct MagneticResiduals {
    pub pfaffian: f64,
    pub y_rate: f64,
    pub unit_speed: f64,
}

impl MagneticGeodesic {
    /// Integrates `y' = G`, `z' = G F` along the reduced trajectory with
    /// `(y, z) = yz0` at `t_ref`.
    pub fn from_reduced(sys: &ReducedSystem, traj: Arc<Trajectory>, t_ref: f64, yz0: [f64; 2]) -> Self {
        let n = sys.n();
        let integrands = vec![sys.g.clone(), sys.g.mul(&sys.f)];
        let lift = Lift::new(traj.clone(), n, integrands, t_ref, &yz0);
        MagneticGeodesic { f: sys.f.clone(), pencil: sys.pencil, traj, g: sys.g.clone(), lift }
    }

    pub fn n(&self) -> usize {
        self.f.nvars()
    }

    pub fn span(&self) -> (f64, f64) {
        self.traj.span()
    }

    pub fn g_at(&self, x: &[f64]) -> f64 {
        self.g.eval(x)
    }

    /// `(x, y, z)` at time `t`.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let n = self.n();
        let mut out = self.traj.eval(t)[n..].to_vec();
        out.extend(self.lift.eval(t));
        out
    }

    pub fn state_at(&self, t: f64) -> Vec<f64> {
        self.traj.eval(t)
    }

    pub fn residuals(&self, grid: &[f64], h: f64) -> MagneticResiduals {
        let n = self.n();
        let mut r = MagneticResiduals { pfaffian: 0.0, y_rate: 0.0, unit_speed: 0.0 };
        for &t in grid {
            let d = fd4(|s| self.lift.eval(s), t, h);
            let y = self.traj.eval(t);
            let x = &y[n..];
            let g = self.g.eval(x);
            r.pfaffian = r.pfaffian.max((d[1] - self.f.eval(x) * d[0]).abs());
            r.y_rate = r.y_rate.max((d[0] - g).abs());
            let speed: f64 = y[..n].iter().map(|p| p * p).sum::<f64>() + g * g;
            r.unit_speed = r.unit_speed.max((speed - 1.0).abs());
        }
        r
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W, sys: Option<&ReducedSystem>) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.n();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("x{k}")));
        header.extend(["y".to_string(), "z".to_string()]);
        if sys.is_some() {
            header.push("H".into());
        }
        wr.write_record(&header)?;
        for t in self.traj.breakpoints() {
            let mut row = vec![t.to_string()];
            row.extend(self.point_at(t).iter().map(f64::to_string));
            if let Some(s) = sys {
                row.push(s.hamiltonian(&self.traj.eval(t)).to_string());
            }
            wr.write_record(&row)?;
        }
        wr.flush()
    }
}

/// `(x, theta) -> (x, theta_0, sum_k a_k theta_k)`.
pub fn project_magnetic(gamma: &GroupGeodesic) -> MagneticGeodesic {
    let mut y_row = vec![0.0; gamma.spec.dim_a];
    y_row[0] = 1.0;
    let lift = gamma.lift.combined(&[y_row, gamma.mu.a.clone()]);
    let f = crate::reduced::momentum_poly(&gamma.spec, &gamma.mu).expect("checked at construction");
    MagneticGeodesic { f, pencil: gamma.pencil, traj: gamma.traj.clone(), g: gamma.g.clone(), lift }
}

/// Horizontal lift of a magnetic geodesic through `gamma0` at `t_ref`.
pub fn magnetic_lift(spec: &GroupSpec, mu: &Momentum, c: &MagneticGeodesic, gamma0: &GroupPoint, t_ref: f64) -> Result<GroupGeodesic> {
    let f = crate::reduced::momentum_poly(spec, mu)?;
    if f != c.f {
        return Err(Error::InvalidParam("momentum does not generate the magnetic polynomial".into()));
    }
    let mut sys = ReducedSystem::from_poly(f, c.pencil);
    sys.spec = Some(spec.clone());
    sys.mu = Some(mu.clone());
    let mut g0 = gamma0.clone();
    g0.x = c.traj.eval(t_ref)[spec.rank_h..].to_vec();
    reconstruct(&sys, c.traj.clone(), Some((&g0, t_ref)))
}
