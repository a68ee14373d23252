//! Geodesic taxonomy, abnormal families, the metric-line necessary condition
//! and Maxwell/conjugate diagnostics.

use crate::costmaps::{radial_period, Val};
use crate::error::{Error, Result};
use crate::integrator::{self, EventKind, FnDynamics, Trajectory};
use crate::models::{frame_velocity, GroupPoint, GroupSpec, ModelId};
use crate::poly::Poly;
use crate::reconstruction::{GroupGeodesic, MagneticGeodesic};
use crate::reduced::{
    equilibria, normal_form, EquilibriumKind, Momentum, NormalKind, RadialSystem, ReducedSystem,
};
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneralClass {
    Line,
    RegularBounded,
    RegularUnbounded,
    Homoclinic,
    HeteroclinicDirect,
    HeteroclinicTurnback,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecificClass {
    SmallOscillation,
    RPeriodic,
    RHomoclinic,
    Periodic,
    Homoclinic,
    Generic,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Evidence {
    pub horizon: f64,
    /// Radial angular momentum `l` (radial systems).
    pub ell: Option<f64>,
    /// `p1 x2 - p2 x1` in normal coordinates, maximum over the horizon.
    pub angular_momentum: Option<f64>,
    /// Closest approach to the saddle forward and backward in time.
    pub equilibrium_distance: Option<(f64, f64)>,
    /// `F(x(-T))`, `F(x(T))`.
    pub tail_f: Option<(f64, f64)>,
    pub turning_events: usize,
    pub max_radius: Option<f64>,
    /// Norm of the momentum component orthogonal to a constant `grad G`.
    pub drift_momentum: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicClass {
    pub general: GeneralClass,
    pub specific: Option<SpecificClass>,
    pub evidence: Evidence,
}

impl GeodesicClass {
    /// Model-specific label agrees with the general one.
    pub fn is_consistent(&self) -> bool {
        use GeneralClass as G;
        use SpecificClass as S;
        match self.specific {
            None => true,
            Some(S::RHomoclinic | S::Homoclinic) => self.general == G::Homoclinic,
            Some(S::RPeriodic | S::Periodic) => self.general == G::RegularBounded,
            Some(S::SmallOscillation) => matches!(self.general, G::RegularBounded | G::RegularUnbounded),
            Some(S::Generic) => !matches!(self.general, G::Line),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyOptions {
    pub horizon: f64,
    pub tol: f64,
    /// Closest-approach threshold for asymptotic convergence.
    pub proximity: f64,
    pub max_doublings: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { horizon: 50.0, tol: 1e-12, proximity: 1e-3, max_doublings: 2 }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn min_distance(traj: &Trajectory, target: &[f64], range: (f64, f64)) -> f64 {
    traj.fine_grid(8)
        .into_iter()
        .filter(|&t| t >= range.0 && t <= range.1)
        .map(|t| {
            let y = traj.eval(t);
            y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn max_radius(traj: &Trajectory, n: usize, range: (f64, f64)) -> f64 {
    traj.fine_grid(4)
        .into_iter()
        .filter(|&t| t >= range.0 && t <= range.1)
        .map(|t| norm(&traj.eval(t)[n..]))
        .fold(0.0, f64::max)
}

/// Labels the geodesic with initial reduced state `state0`.
pub fn classify(sys: &ReducedSystem, state0: &[f64], opts: &ClassifyOptions) -> Result<GeodesicClass> {
    sys.check_state(state0)?;
    let n = sys.n();
    let mut ev = Evidence { horizon: opts.horizon, ..Evidence::default() };
    let p = &state0[..n];

    // Constant G: the orbit is a straight line (horizontal when G = 0, vertical when |G| = 1).
    if sys.g.degree() <= 0 {
        return Ok(GeodesicClass { general: GeneralClass::Line, specific: None, evidence: ev });
    }
    // On-shell rest point of the reduced flow: vertical line.
    if norm(p) == 0.0 && norm(&sys.grad_g_at(&state0[n..])) < 1e-12 {
        return Ok(GeodesicClass { general: GeneralClass::Line, specific: None, evidence: ev });
    }

    if sys.g.degree() == 1 {
        // Affine potential: motion splits into free drift orthogonal to grad G
        // and a bounded oscillation along it.
        let c = sys.grad_g_at(&vec![0.0; n]);
        let cn = norm(&c);
        let along: f64 = p.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / cn;
        let perp: Vec<f64> = p.iter().zip(&c).map(|(a, b)| a - along * b / cn).collect();
        let drift = norm(&perp);
        ev.drift_momentum = Some(drift);
        let general = if drift > 1e-12 { GeneralClass::RegularUnbounded } else { GeneralClass::RegularBounded };
        return Ok(GeodesicClass { general, specific: Some(SpecificClass::SmallOscillation), evidence: ev });
    }

    let model = sys.spec.as_ref().map(|s| s.model_id);
    let nf = normal_form(sys).ok();
    let radial = matches!(nf.as_ref().map(|f| &f.kind), Some(NormalKind::Radial { .. }));
    let hyperbolic = matches!(nf.as_ref().map(|f| &f.kind), Some(NormalKind::Hyperbolic { .. }));
    if radial {
        let (rs, _) = RadialSystem::from_reduced(sys, state0)?;
        ev.ell = Some(rs.ell);
    }

    let eqs: Vec<_> = equilibria(sys).into_iter().filter(|e| e.kind == EquilibriumKind::HomoclinicCenterSaddle).collect();
    let mut horizon = opts.horizon;
    for _ in 0..=opts.max_doublings {
        ev.horizon = horizon;
        let traj = sys.integrate(state0, (-horizon, horizon), opts.tol)?;
        let s_lo = traj.eval(-horizon);
        let s_hi = traj.eval(horizon);
        ev.tail_f = Some((sys.f_at(&s_lo[n..]), sys.f_at(&s_hi[n..])));
        ev.max_radius = Some(max_radius(&traj, n, (-horizon, horizon)));

        let to_normal = |y: &[f64]| nf.as_ref().map(|f| f.state_to_normal(y)).unwrap_or_else(|| y.to_vec());
        if n == 2 {
            let lmax = traj
                .fine_grid(4)
                .into_iter()
                .map(|t| ReducedSystem::angular_momentum(&to_normal(&traj.eval(t))).abs())
                .fold(0.0, f64::max);
            ev.angular_momentum = Some(lmax);
        }

        // Asymptotic approach to saddles in both time directions.
        let mut fwd: Option<(usize, f64)> = None;
        let mut bwd: Option<(usize, f64)> = None;
        for (k, eq) in eqs.iter().enumerate() {
            let df = min_distance(&traj, &eq.point, (0.0, horizon));
            let db = min_distance(&traj, &eq.point, (-horizon, 0.0));
            if fwd.map_or(true, |(_, d)| df < d) {
                fwd = Some((k, df));
            }
            if bwd.map_or(true, |(_, d)| db < d) {
                bwd = Some((k, db));
            }
        }
        if let (Some((kf, df)), Some((kb, db))) = (fwd, bwd) {
            ev.equilibrium_distance = Some((df, db));
            if df < opts.proximity && db < opts.proximity {
                let general = if kf == kb {
                    GeneralClass::Homoclinic
                } else {
                    let (fa, fb) = ev.tail_f.unwrap_or((0.0, 0.0));
                    if (fa - fb).abs() > 1e-3 {
                        GeneralClass::HeteroclinicTurnback
                    } else {
                        GeneralClass::HeteroclinicDirect
                    }
                };
                let specific = match (radial, model) {
                    (true, _) => Some(SpecificClass::RHomoclinic),
                    (false, Some(ModelId::N631)) => Some(SpecificClass::Homoclinic),
                    _ => Some(SpecificClass::Generic),
                };
                return Ok(GeodesicClass { general, specific, evidence: ev });
            }
        }

        // Radial recurrence: zeros of x~ . p~ (r r').
        let radial_rate = |_: f64, y: &[f64]| {
            let s = to_normal(y);
            (0..n).map(|i| s[i] * s[n + i]).sum::<f64>()
        };
        let turns = traj.find_events(radial_rate, EventKind::ZeroCrossing);
        ev.turning_events = turns.len();
        let r_values: Vec<f64> = traj.fine_grid(4).into_iter().map(|t| norm(&to_normal(&traj.eval(t))[n..])).collect();
        let r_spread = r_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - r_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let recurrent = turns.len() >= 3 || r_spread < 1e-8;

        if radial {
            if recurrent {
                return Ok(GeodesicClass { general: GeneralClass::RegularBounded, specific: Some(SpecificClass::RPeriodic), evidence: ev });
            }
        } else if hyperbolic && model == Some(ModelId::N631) {
            let planar = ev.angular_momentum.unwrap_or(f64::INFINITY) < 1e-7;
            if !planar {
                let general = bounded_label(sys, state0, horizon, opts, &ev)?;
                return Ok(GeodesicClass { general, specific: Some(SpecificClass::Generic), evidence: ev });
            }
            if recurrent {
                return Ok(GeodesicClass { general: GeneralClass::RegularBounded, specific: Some(SpecificClass::Periodic), evidence: ev });
            }
        } else {
            let general = bounded_label(sys, state0, horizon, opts, &ev)?;
            return Ok(GeodesicClass { general, specific: Some(SpecificClass::Generic), evidence: ev });
        }
        horizon *= 2.0;
    }
    Ok(GeodesicClass { general: GeneralClass::Undetermined, specific: None, evidence: ev })
}

/// Bounded when doubling the horizon does not enlarge the swept radius.
fn bounded_label(sys: &ReducedSystem, state0: &[f64], horizon: f64, opts: &ClassifyOptions, ev: &Evidence) -> Result<GeneralClass> {
    let n = sys.n();
    let long = sys.integrate(state0, (-2.0 * horizon, 2.0 * horizon), opts.tol)?;
    let r1 = ev.max_radius.unwrap_or(0.0);
    let r2 = max_radius(&long, n, (-2.0 * horizon, 2.0 * horizon));
    Ok(if r2 <= r1 * (1.0 + 1e-3) + 1e-9 { GeneralClass::RegularBounded } else { GeneralClass::RegularUnbounded })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum AbnormalKind {
    /// Tangent to the last frame field through a critical point of `F`.
    Vertical,
    /// Horizontal curve along a level set of `F` starting in direction `dir`.
    Horizontal { dir: Vec<f64> },
}

/// Abnormal curve generator for the covector `mu`.
#[derive(Clone, Debug)]
pub struct AbnormalFamily {
    pub spec: GroupSpec,
    pub f: Poly,
    pub kind: AbnormalKind,
    pub base: GroupPoint,
    /// Sense of the quarter-turn in the plane, fixed at the base point.
    orient: f64,
}

impl AbnormalFamily {
    pub fn new(spec: &GroupSpec, mu: &Momentum, kind: AbnormalKind, base: GroupPoint) -> Result<Self> {
        base.check(spec)?;
        let f = crate::reduced::momentum_poly(spec, mu)?;
        let n = spec.rank_h;
        let grad = f.gradient();
        let df: Vec<f64> = grad.iter().map(|g| g.eval(&base.x)).collect();
        match &kind {
            AbnormalKind::Vertical => {
                if norm(&df) > 1e-12 {
                    return Err(Error::InvalidParam("vertical abnormals sit at a critical point of F".into()));
                }
            }
            AbnormalKind::Horizontal { dir } => {
                if dir.len() != n {
                    return Err(Error::Dimension { expected: n, got: dir.len() });
                }
                if tangent(&df, dir, None).is_none() {
                    return Err(Error::InvalidParam("direction is normal to the level set".into()));
                }
            }
        }
        let orient = match &kind {
            AbnormalKind::Horizontal { dir } if n == 2 && norm(&df) > 0.0 => {
                if -df[1] * dir[0] + df[0] * dir[1] < 0.0 { -1.0 } else { 1.0 }
            }
            _ => 1.0,
        };
        Ok(AbnormalFamily { spec: spec.clone(), f, kind, base, orient })
    }

    /// Control at base point `x`.
    pub fn control(&self, x: &[f64]) -> Vec<f64> {
        let n = self.spec.rank_h;
        match &self.kind {
            AbnormalKind::Vertical => {
                let mut u = vec![0.0; n + 1];
                u[n] = 1.0;
                u
            }
            AbnormalKind::Horizontal { dir } => {
                let df: Vec<f64> = self.f.gradient().iter().map(|g| g.eval(x)).collect();
                let mut u = tangent(&df, dir, Some(self.orient)).unwrap_or_else(|| vec![0.0; n]);
                u.push(0.0);
                u
            }
        }
    }

    /// Curve on `[0, t_end]` in group coordinates `(theta, x)`.
    pub fn curve(&self, t_end: f64, tol: f64) -> Result<Trajectory> {
        let n = self.spec.rank_h;
        let na = self.spec.dim_a;
        let spec = self.spec.clone();
        let sys = FnDynamics {
            dim: na + n,
            f: move |y: &[f64], dy: &mut [f64]| {
                let g = GroupPoint { theta: y[..na].to_vec(), x: y[na..].to_vec() };
                let u = self.control(&g.x);
                let v = frame_velocity(&spec, &g, &u).expect("dimensions fixed at construction");
                dy[..na].copy_from_slice(&v.theta);
                dy[na..].copy_from_slice(&v.x);
            },
        };
        integrator::integrate(&sys, &self.base.coords(), (0.0, t_end), tol)
    }
}

/// Component of `dir` tangent to the level set with normal `df`, normalised.
/// In the plane with a fixed `orient` the tangent is the quarter-turn of `df`,
/// so the curve follows the level set without reversing.
fn tangent(df: &[f64], dir: &[f64], orient: Option<f64>) -> Option<Vec<f64>> {
    let dn = norm(df);
    let t: Vec<f64> = if dn < 1e-300 {
        dir.to_vec()
    } else if let (2, Some(s)) = (df.len(), orient) {
        vec![-s * df[1] / dn, s * df[0] / dn]
    } else {
        let c: f64 = df.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>() / (dn * dn);
        dir.iter().zip(df).map(|(d, g)| d - c * g).collect()
    };
    let tn = norm(&t);
    (tn > 1e-12).then(|| t.iter().map(|v| v / tn).collect())
}

/// Max over samples of `|u_{n+1} dF/dx_i| + |sum_i dF/dx_i u_i|` for a
/// curve with base points `x` and controls `u`.
pub fn abnormal_residual(f: &Poly, samples: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let grad = f.gradient();
    samples
        .iter()
        .map(|(x, u)| {
            let n = x.len();
            let df: Vec<f64> = grad.iter().map(|g| g.eval(x)).collect();
            let vert = df.iter().map(|d| (u[n] * d).abs()).fold(0.0, f64::max);
            let horiz: f64 = df.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().abs();
            vert + horiz
        })
        .fold(0.0, f64::max)
}

/// Membership of a normal geodesic in the abnormal set of `F`.
pub fn abnormal_residual_geodesic(f: &Poly, gamma: &GroupGeodesic, grid: &[f64]) -> f64 {
    let samples: Vec<_> = grid.iter().map(|&t| (gamma.point_at(t).x, gamma.control_at(t))).collect();
    abnormal_residual(f, &samples)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricVerdict {
    Consistent,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricLineReport {
    /// `(T, ||int_{-T}^{T} u|| / T)`.
    pub estimates: Vec<(f64, f64)>,
    /// Extrapolation to `T = infinity` assuming `a + b / T`.
    pub limit_estimate: f64,
    pub best_v: Vec<f64>,
    pub verdict: MetricVerdict,
}

/// `int_{-T}^{T} u ds` by Gauss-Legendre on each integrator step.
pub fn control_integral(gamma: &GroupGeodesic, t: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = gamma.traj.breakpoints().into_iter().filter(|&s| s > -t && s < t).collect();
    grid.insert(0, -t);
    grid.push(t);
    let (nodes, weights) = crate::quad::gl9();
    let dim = gamma.control_at(0.0).len();
    let mut acc = vec![0.0; dim];
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        for (s, wt) in nodes.iter().zip(weights) {
            let u = gamma.control_at(w[0] + s * h);
            for (a, v) in acc.iter_mut().zip(&u) {
                *a += wt * h * v;
            }
        }
    }
    acc
}

/// Necessary condition for `gamma` to be a metric line: the averaged control
/// must approach norm 2 on symmetric windows.
pub fn metric_line_condition(gamma: &GroupGeodesic, windows: &[f64], margin: f64) -> Result<MetricLineReport> {
    let (lo, hi) = gamma.span();
    let mut estimates = Vec::with_capacity(windows.len());
    let mut last = Vec::new();
    for &t in windows {
        if -t < lo - 1e-9 || t > hi + 1e-9 || t <= 0.0 {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
        last = control_integral(gamma, t);
        estimates.push((t, norm(&last) / t));
    }
    let limit_estimate = match estimates.as_slice() {
        [] => return Err(Error::InvalidParam("no windows".into())),
        [only] => only.1,
        [.., (t1, e1), (t2, e2)] => (t2 * e2 - t1 * e1) / (t2 - t1),
    };
    let nl = norm(&last);
    let best_v = last.iter().map(|v| if nl > 0.0 { v / nl } else { 0.0 }).collect();
    let verdict = if (limit_estimate - 2.0).abs() > margin { MetricVerdict::Fails } else { MetricVerdict::Consistent };
    Ok(MetricLineReport { estimates, limit_estimate, best_v, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxwellReport {
    pub period: f64,
    pub gap_at_period: f64,
    pub gap_at_half: f64,
    /// `t_cut <= L` holds when the twins meet at `L` and differ before.
    pub cut_bound: bool,
}

/// Initial state with the radial momentum reversed, the radial system and
/// the initial radius.
pub fn radial_twin(sys: &ReducedSystem, state0: &[f64]) -> Result<(Vec<f64>, RadialSystem, f64)> {
    sys.check_state(state0)?;
    let n = sys.n();
    let nf = normal_form(sys)?;
    let (rs, [pr, r]) = RadialSystem::from_reduced(sys, state0)?;
    if r == 0.0 || pr.abs() < 1e-12 {
        return Err(Error::InvalidParam("initial radius on the Hill boundary; use the conjugate check".into()));
    }
    let s = nf.state_to_normal(state0);
    let mut twin = s.clone();
    for i in 0..n {
        twin[i] -= 2.0 * pr * s[n + i] / r;
    }
    Ok((nf.state_from_normal(&twin), rs, r))
}

/// Twin geodesic with the radial momentum reversed, compared after one
/// radial period.
pub fn maxwell_check(sys: &ReducedSystem, state0: &[f64], tol: f64) -> Result<MaxwellReport> {
    let (twin, rs, r) = radial_twin(sys, state0)?;
    let period = match radial_period(&rs, Some(r), 1e-13)?.period {
        Val::Finite(l) => l,
        Val::Infinite => return Err(Error::InvalidParam("orbit is not r-periodic".into())),
    };
    let lift = |y0: &[f64]| -> Result<MagneticGeodesic> {
        let tr = sys.integrate(y0, (0.0, period), tol)?;
        Ok(MagneticGeodesic::from_reduced(sys, Arc::new(tr), 0.0, [0.0, 0.0]))
    };
    let (c, ct) = (lift(state0)?, lift(&twin)?);
    let gap = |t: f64| norm(&c.point_at(t).iter().zip(ct.point_at(t)).map(|(a, b)| a - b).collect::<Vec<_>>());
    let (gap_at_period, gap_at_half) = (gap(period), gap(0.5 * period));
    Ok(MaxwellReport { period, gap_at_period, gap_at_half, cut_bound: gap_at_period < 1e-6 && gap_at_half > 1e-2 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Touch {
    pub t: f64,
    pub g: f64,
    pub momentum: f64,
    /// `|F(x) - (+-1 - a) / b|`.
    pub f_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugateReport {
    pub touches: Vec<Touch>,
    /// Consecutive touches `(t0, t_cut)`.
    pub pairs: Vec<(f64, f64)>,
    /// The orbit stays on the boundary (`|G| = 1` throughout).
    pub degenerate: bool,
    pub jacobi_ok: bool,
}

/// Boundary touches `|G(x(t))| = 1` of `c` and the Jacobi-vanishing diagnostics.
pub fn conjugate_check(sys: &ReducedSystem, c: &MagneticGeodesic) -> Result<ConjugateReport> {
    let pen = sys.pencil;
    if pen.b == 0.0 {
        return Err(Error::InvalidParam("pencil b must be nonzero".into()));
    }
    let n = sys.n();
    let one = Poly::constant(n, 1.0);
    let (gm, gp) = (one.add(&sys.g.scale(-1.0)), one.add(&sys.g));
    let room = |y: &[f64]| gm.eval(&y[n..]) * gp.eval(&y[n..]);
    let traj = &c.traj;
    let grid = traj.fine_grid(8);
    let degenerate = grid.iter().all(|&t| room(&traj.eval(t)).abs() < 1e-12);
    if degenerate {
        return Ok(ConjugateReport { touches: Vec::new(), pairs: Vec::new(), degenerate: true, jacobi_ok: true });
    }
    let times = traj.find_events(|_, y| room(y), EventKind::BoundaryTouch);
    let touches: Vec<Touch> = times
        .iter()
        .map(|&t| {
            let y = traj.eval(t);
            let g = sys.g_at(&y[n..]);
            let target = (g.signum() - pen.a) / pen.b;
            Touch { t, g, momentum: norm(&y[..n]), f_residual: (sys.f_at(&y[n..]) - target).abs() }
        })
        .collect();
    let pairs = touches.windows(2).map(|w| (w[0].t, w[1].t)).collect();
    let jacobi_ok = touches.iter().all(|t| t.momentum < 1e-6 && t.f_residual < 1e-6);
    Ok(ConjugateReport { touches, pairs, degenerate: false, jacobi_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelKind};
    use crate::reduced::{reduced_system, Pencil};

    fn eng2(a: &[f64]) -> ReducedSystem {
        let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
        reduced_system(&spec, &Momentum::new(a.to_vec()), Pencil::default()).unwrap()
    }

    fn label(sys: &ReducedSystem, s: &[f64]) -> GeodesicClass {
        let c = classify(sys, s, &ClassifyOptions::default()).unwrap();
        assert!(c.is_consistent(), "{c:?}");
        c
    }

    #[test]
    fn lines_and_small_oscillation() {
        assert_eq!(label(&eng2(&[0.0; 4]), &[1.0, 0.0, 0.0, 0.0]).general, GeneralClass::Line);
        assert_eq!(label(&eng2(&[1.0, 0.0, 0.0, 0.0]), &[0.0; 4]).general, GeneralClass::Line);
        let c = label(&eng2(&[0.0, 1.0, 1.0, 0.0]), &[0.8, 0.6, 0.0, 0.0]);
        assert_eq!(c.specific, Some(SpecificClass::SmallOscillation));
        assert_eq!(c.general, GeneralClass::RegularUnbounded);
    }

    #[test]
    fn radial_labels() {
        let sys = eng2(&[1.0, 0.0, 0.0, -4.0]);
        assert_eq!(label(&sys, &[0.0, 0.0, 1.0, 0.0]).specific, Some(SpecificClass::RHomoclinic));
        let (ri, ell) = (0.5, 0.2);
        let pr = (1.0 - RadialSystem::new(1.0, -2.0, ell).potential(ri)).sqrt();
        assert_eq!(label(&sys, &[pr, ell / ri, ri, 0.0]).specific, Some(SpecificClass::RPeriodic));
        let sys = eng2(&[0.5, 0.0, 0.0, -4.0]);
        let c = label(&sys, &[1.0, 0.0, 0.5, 0.0]);
        assert_eq!(c.specific, Some(SpecificClass::RPeriodic));
        assert_eq!(c.evidence.ell, Some(0.0));
    }

    #[test]
    fn rotation_invariant_label() {
        let sys = eng2(&[1.0, 0.0, 0.0, -4.0]);
        let s = [0.3, 0.5, 0.4, -0.1];
        let s = sys.on_shell(&s[..2], &s[2..]).unwrap();
        let q = crate::models::rotation_2d(0.7);
        let sr = crate::models::rotate_state(&s, &q).unwrap();
        assert_eq!(label(&sys, &s).specific, label(&sys, &sr).specific);
    }

    #[test]
    fn vertical_and_circle_abnormals() {
        let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
        let mu = Momentum::new(vec![1.0, 0.0, 0.0, -4.0]);
        let fam = AbnormalFamily::new(&spec, &mu, AbnormalKind::Vertical, GroupPoint::identity(&spec)).unwrap();
        let tr = fam.curve(2.0, 1e-12).unwrap();
        let na = spec.dim_a;
        let samples: Vec<_> = tr.fine_grid(2).iter().map(|&t| {
            let y = tr.eval(t);
            (y[na..].to_vec(), fam.control(&y[na..]))
        }).collect();
        assert!(abnormal_residual(&fam.f, &samples) < 1e-12);
        assert!((tr.eval(2.0)[0] - 2.0).abs() < 1e-12);

        let mut base = GroupPoint::identity(&spec);
        base.x = vec![0.7, 0.0];
        let fam = AbnormalFamily::new(&spec, &mu, AbnormalKind::Horizontal { dir: vec![0.0, 1.0] }, base).unwrap();
        let tr = fam.curve(3.0, 1e-12).unwrap();
        for t in tr.fine_grid(2) {
            let y = tr.eval(t);
            assert!((norm(&y[na..]) - 0.7).abs() < 1e-9);
            let u = fam.control(&y[na..]);
            assert!(abnormal_residual(&fam.f, &[(y[na..].to_vec(), u)]) < 1e-12);
        }
    }

    #[test]
    fn normal_geodesic_is_not_abnormal() {
        let sys = eng2(&[1.0, 0.0, 0.0, -4.0]);
        let s = sys.on_shell(&[0.3, 0.5], &[0.4, -0.1]).unwrap();
        let tr = Arc::new(sys.integrate(&s, (0.0, 3.0), 1e-10).unwrap());
        let gamma = crate::reconstruction::reconstruct(&sys, tr, None).unwrap();
        let grid: Vec<f64> = (0..30).map(|k| 0.1 * k as f64).collect();
        assert!(abnormal_residual_geodesic(&sys.f, &gamma, &grid) > 1e-3);
    }

    #[test]
    fn vertical_line_estimate() {
        let sys = eng2(&[1.0, 0.0, 0.0, 0.0]);
        let tr = Arc::new(sys.integrate(&[0.0; 4], (-50.0, 50.0), 1e-10).unwrap());
        let gamma = crate::reconstruction::reconstruct(&sys, tr, None).unwrap();
        let rep = metric_line_condition(&gamma, &[10.0, 50.0], 1e-2).unwrap();
        for (_, e) in &rep.estimates {
            assert!((e - 2.0).abs() < 1e-12);
        }
        assert_eq!(rep.verdict, MetricVerdict::Consistent);
        assert!((rep.best_v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maxwell_twins_meet() {
        let sys = eng2(&[1.0, 0.0, 0.0, -4.0]);
        let (ri, ell) = (0.5, 0.2);
        let pr = (1.0 - RadialSystem::new(1.0, -2.0, ell).potential(ri)).sqrt();
        let rep = maxwell_check(&sys, &[pr, ell / ri, ri, 0.0], 1e-12).unwrap();
        assert!(rep.gap_at_period < 1e-6, "{rep:?}");
        assert!(rep.gap_at_half > 1e-2);
        let sys = eng2(&[0.5, 0.0, 0.0, -4.0]);
        let rep = maxwell_check(&sys, &[1.0, 0.0, 0.5, 0.0], 1e-12).unwrap();
        assert!(rep.gap_at_period < 1e-6, "{rep:?}");
    }

    #[test]
    fn conjugate_touches() {
        let sys = eng2(&[0.5, 0.0, 0.0, -4.0]);
        let tr = Arc::new(sys.integrate(&[1.0, 0.0, 0.5, 0.0], (0.0, 6.0), 1e-12).unwrap());
        let c = MagneticGeodesic::from_reduced(&sys, tr, 0.0, [0.0, 0.0]);
        let rep = conjugate_check(&sys, &c).unwrap();
        assert!(rep.touches.len() >= 2, "{rep:?}");
        assert!(rep.jacobi_ok);
        assert!(!rep.pairs.is_empty());

        let sys = eng2(&[1.0, 0.0, 0.0, 0.0]);
        let tr = Arc::new(sys.integrate(&[0.0; 4], (0.0, 5.0), 1e-10).unwrap());
        let c = MagneticGeodesic::from_reduced(&sys, tr, 0.0, [0.0, 0.0]);
        assert!(conjugate_check(&sys, &c).unwrap().degenerate);
    }
}
