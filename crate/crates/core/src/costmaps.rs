//! Increments `Delta = (dt, dy, dz)`, the cost pair, the period map `Theta`
//! and the radial period, by time-domain evaluation and by singular
//! quadrature.

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::quad;
use crate::reconstruction::MagneticGeodesic;
use crate::reduced::{hill_radial, BoundaryTag, HillKind, RadialSystem, ReducedSystem};
use serde::Serialize;

/// A real value or a divergent integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "state", content = "value")]
pub enum Val {
    Finite(f64),
    Infinite,
}

impl Val {
    pub fn finite(self) -> Option<f64> {
        match self {
            Val::Finite(v) => Some(v),
            Val::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CostMethod {
    TimeDomain,
    ArcQuadrature,
    RadialQuadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    /// `(dt, dy, dz)`.
    pub delta: [f64; 3],
    /// `(Cost_t, Cost_y) = (dt - dy, dy - dz)`.
    pub cost: [f64; 2],
    pub theta: Option<[Val; 2]>,
    pub period: Option<Val>,
    pub dtheta: Option<Val>,
    pub method: CostMethod,
    /// Set when the requested method could not apply and another was used.
    pub fallback: bool,
}

impl CostReport {
    pub fn from_delta(delta: [f64; 3], method: CostMethod) -> Self {
        CostReport {
            delta,
            cost: [delta[0] - delta[1], delta[1] - delta[2]],
            theta: None,
            period: None,
            dtheta: None,
            method,
            fallback: false,
        }
    }
}

/// Endpoint differences of the dense magnetic geodesic over `[a, b]`.
pub fn delta_cost_time(c: &MagneticGeodesic, window: (f64, f64)) -> Result<CostReport> {
    let (lo, hi) = c.span();
    let (a, b) = window;
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    for t in [a, b] {
        if t < lo - slack || t > hi + slack {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
    }
    let (pa, pb) = (c.point_at(a), c.point_at(b));
    let n = c.n();
    Ok(CostReport::from_delta([b - a, pb[n] - pa[n], pb[n + 1] - pa[n + 1]], CostMethod::TimeDomain))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum End {
    Regular,
    /// Simple root of the radicand: `r = end -+ w^2`.
    Turning,
    /// Integrand behaving like `1/r` near a small positive end: `r = e^u`.
    Log,
}

/// `int_a^b f(r) / sqrt(room(r)) dr` for vector-valued `f`, with the
/// substitution chosen per end.
fn inv_sqrt_integral<F, R>(f: &F, room: &R, a: f64, b: f64, ea: End, eb: End, tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
    R: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let dim = f(m).len();
    let mut out = vec![0.0; dim];
    for k in 0..dim {
        let left = match ea {
            End::Regular => quad::integrate(|r| f(r)[k] / room(r).max(0.0).sqrt(), a, m, tol).0,
            End::Turning => {
                let g = |w: f64| {
                    let r = a + w * w;
                    let rm = room(r);
                    if rm <= 0.0 {
                        0.0
                    } else {
                        f(r)[k] * 2.0 * w / rm.sqrt()
                    }
                };
                quad::integrate(g, 0.0, (m - a).sqrt(), tol).0
            }
            End::Log => {
                let g = |u: f64| {
                    let r = u.exp();
                    f(r)[k] * r / room(r).max(f64::MIN_POSITIVE).sqrt()
                };
                quad::integrate(g, a.ln(), m.ln(), tol).0
            }
        };
        let right = match eb {
            End::Turning => {
                let g = |w: f64| {
                    let r = b - w * w;
                    let rm = room(r);
                    if rm <= 0.0 {
                        0.0
                    } else {
                        f(r)[k] * 2.0 * w / rm.sqrt()
                    }
                };
                quad::integrate(g, 0.0, (b - m).sqrt(), tol).0
            }
            _ => quad::integrate(|r| f(r)[k] / room(r).max(0.0).sqrt(), m, b, tol).0,
        };
        out[k] = left + right;
    }
    out
}

/// Radial data for cost integrals: the potential system of `G` and the
/// coefficients of `F(r) = f_alpha + f_beta r^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialPair {
    pub g: RadialSystem,
    pub f_alpha: f64,
    pub f_beta: f64,
}

impl RadialPair {
    /// Pair for `F` with pencil `G = a + bF`.
    pub fn new(f_alpha: f64, f_beta: f64, ell: f64, a: f64, b: f64) -> Self {
        RadialPair { g: RadialSystem::new(a + b * f_alpha, b * f_beta, ell), f_alpha, f_beta }
    }

    pub fn f(&self, r: f64) -> f64 {
        self.f_alpha + self.f_beta * r * r
    }

    /// The radicand has a double root at `r = 0` when `l = 0` and `|G(0)| = 1`.
    fn double_root_at_origin(&self) -> bool {
        self.g.ell == 0.0 && (self.g.alpha.abs() - 1.0).abs() < 1e-12
    }

    fn end_kind(&self, r: f64, turning_hint: bool) -> End {
        if r > 0.0 && r < 1e-2 && self.double_root_at_origin() {
            End::Log
        } else if turning_hint {
            End::Turning
        } else {
            End::Regular
        }
    }
}

/// `Delta` over a radial segment traversed `passes` times, each pass from
/// `r_lo` to `r_hi` (the `dr` forms with `1 - V`).
pub fn delta_cost_radial(pair: &RadialPair, r_lo: f64, r_hi: f64, passes: f64, tol: f64) -> Result<CostReport> {
    if !(r_lo < r_hi) {
        return Err(Error::InvalidParam(format!("empty radial segment [{r_lo}, {r_hi}]")));
    }
    let rs = pair.g;
    let scale = 1e-9;
    let turn_lo = rs.room(r_lo).abs() < scale && !(r_lo == 0.0 && rs.ell == 0.0);
    let turn_hi = rs.room(r_hi).abs() < scale;
    if r_lo == 0.0 && rs.ell == 0.0 && rs.room(0.0) < 1e-12 {
        return Err(Error::SingularOrbit(0.0));
    }
    let f = |r: f64| {
        let g = rs.g(r);
        vec![1.0, g, g * pair.f(r)]
    };
    let room = |r: f64| rs.room(r);
    let v = inv_sqrt_integral(&f, &room, r_lo, r_hi, pair.end_kind(r_lo, turn_lo), pair.end_kind(r_hi, turn_hi), tol);
    Ok(CostReport::from_delta([passes * v[0], passes * v[1], passes * v[2]], CostMethod::RadialQuadrature))
}

/// Arc-length form `int (1, G, GF) ds / sqrt(1 - G^2)` with `ds = |p| dt`
/// accumulated along a reduced trajectory over `[a, b]`. Segments where the
/// orbit sits on the boundary are skipped (measure zero) and flagged.
pub fn delta_cost_arc(sys: &ReducedSystem, traj: &Trajectory, window: (f64, f64)) -> Result<CostReport> {
    let n = sys.n();
    let (lo, hi) = traj.span();
    let (a, b) = window;
    if a < lo - 1e-12 || b > hi + 1e-12 {
        return Err(Error::OutOfSpan { t: if a < lo { a } else { b }, lo, hi });
    }
    let mut grid: Vec<f64> = traj.breakpoints().into_iter().filter(|&t| t > a && t < b).collect();
    grid.insert(0, a);
    grid.push(b);
    let (nodes, weights) = crate::quad::gl9();
    let mut acc = [0.0; 3];
    // 1 -+ G as polynomials so the constant terms cancel exactly near |G| = 1.
    let one = crate::poly::Poly::constant(n, 1.0);
    let one_minus = one.add(&sys.g.scale(-1.0));
    let one_plus = one.add(&sys.g);
    let mut degenerate = true;
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        for (s, wt) in nodes.iter().zip(weights) {
            let y = traj.eval(t0 + s * (t1 - t0));
            let speed = y[..n].iter().map(|p| p * p).sum::<f64>().sqrt();
            let g = sys.g_at(&y[n..]);
            let room = (one_minus.eval(&y[n..]) * one_plus.eval(&y[n..])).max(0.0).sqrt();
            if room < 1e-300 || speed == 0.0 {
                continue;
            }
            degenerate = false;
            let ds = speed * wt * (t1 - t0);
            acc[0] += ds / room;
            acc[1] += g * ds / room;
            acc[2] += g * sys.f_at(&y[n..]) * ds / room;
        }
    }
    let mut rep = CostReport::from_delta(acc, CostMethod::ArcQuadrature);
    if degenerate {
        rep.fallback = true;
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeriodTheta {
    /// `2 int (1 - G) / sqrt(1 - G^2) dr`.
    pub theta1: Val,
    /// `2 int G (1 - F) / sqrt(1 - G^2) dr`.
    pub theta2: Val,
    /// `2 int sqrt((1 - F) / (1 + F)) dr`, the bound form (equal to
    /// `theta1` when `G = F`).
    pub theta1_bound: Val,
    pub r_max: f64,
}

/// Period map of the homoclinic class of `pair` (`l = 0`, Hill interval
/// `[0, sqrt(2/|beta|)]`).
pub fn period_theta(pair: &RadialPair, tol: f64) -> Result<PeriodTheta> {
    let rs = pair.g;
    if rs.ell != 0.0 {
        return Err(Error::InvalidParam("homoclinic classes have l = 0".into()));
    }
    let g0 = rs.alpha;
    if (g0.abs() - 1.0).abs() > 1e-12 || rs.beta * g0 >= 0.0 {
        return Err(Error::InvalidParam("G is not of the form +-(1 - beta r^2)".into()));
    }
    let r_max = (2.0 / rs.beta.abs()).sqrt();
    let room = |r: f64| rs.room(r);
    // Near r = 0, 1 - G^2 ~ c r^2, so a numerator with nonzero limit there
    // diverges logarithmically.
    let num = |r: f64| {
        let g = rs.g(r);
        let one_minus_g = (1.0 - rs.alpha) - rs.beta * r * r;
        let one_minus_f = (1.0 - pair.f_alpha) - pair.f_beta * r * r;
        vec![one_minus_g, g * one_minus_f]
    };
    let at0 = num(0.0);
    let v = inv_sqrt_integral(&num, &room, 0.0, r_max, End::Regular, End::Turning, tol);
    let pick = |k: usize| if at0[k].abs() > 1e-12 { Val::Infinite } else { Val::Finite(2.0 * v[k]) };
    let f_room = |r: f64| {
        let one_minus_f = (1.0 - pair.f_alpha) - pair.f_beta * r * r;
        let one_plus_f = (1.0 + pair.f_alpha) + pair.f_beta * r * r;
        one_minus_f * one_plus_f
    };
    let bound_num = |r: f64| vec![(1.0 - pair.f_alpha) - pair.f_beta * r * r];
    let f_rmax = ((-1.0 - pair.f_alpha) / pair.f_beta).max(0.0).sqrt();
    let theta1_bound = if (pair.f_alpha - 1.0).abs() > 1e-12 || pair.f_beta >= 0.0 {
        Val::Infinite
    } else {
        Val::Finite(2.0 * inv_sqrt_integral(&bound_num, &f_room, 0.0, f_rmax, End::Regular, End::Turning, tol)[0])
    };
    Ok(PeriodTheta { theta1: pick(0), theta2: pick(1), theta1_bound, r_max })
}

/// `4 int_0^{sqrt(2/beta)} r^2 (1 - beta r^2) / sqrt(1 - (1 - beta r^2)^2) dr`,
/// the Engel form of `Theta_2` used as a cross-check for `G = F`.
pub fn theta2_engel_form(beta: f64, tol: f64) -> f64 {
    let r_max = (2.0 / beta).sqrt();
    let num = |r: f64| vec![r * r * (1.0 - beta * r * r)];
    let room = |r: f64| {
        let u = beta * r * r;
        u * (2.0 - u)
    };
    4.0 * inv_sqrt_integral(&num, &room, 0.0, r_max, End::Regular, End::Turning, tol)[0]
}

/// `int_0^1 sqrt(1 - (1 - 2 r^2)^2) dr` by plain adaptive quadrature.
pub fn parts_integral(tol: f64) -> f64 {
    quad::integrate(|r| (1.0 - (1.0 - 2.0 * r * r).powi(2)).max(0.0).sqrt(), 0.0, 1.0, tol).0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialPeriod {
    pub period: Val,
    pub dtheta: Val,
    pub r_min: f64,
    pub r_max: f64,
    pub circular: bool,
}

/// Radial period `L = 2 int dr / sqrt(1 - V)` and angle increment
/// `2 int l dr / (r^2 sqrt(1 - V))` over the Hill interval containing `r0`.
pub fn radial_period(rs: &RadialSystem, r0: Option<f64>, tol: f64) -> Result<RadialPeriod> {
    let hill = hill_radial(rs, r0)?;
    if hill.kind == HillKind::Degenerate {
        if hill.r_min == hill.r_max {
            let r = hill.r_min;
            let omega = rs.ell / (r * r);
            return Ok(RadialPeriod {
                period: Val::Finite(2.0 * std::f64::consts::PI / omega.abs()),
                dtheta: Val::Finite(2.0 * std::f64::consts::PI * omega.signum()),
                r_min: r,
                r_max: r,
                circular: true,
            });
        }
        return Err(Error::InvalidParam("degenerate Hill data has no radial period".into()));
    }
    let equilibrium_end = matches!(hill.tag_min, BoundaryTag::Plus | BoundaryTag::Minus) && hill.r_min == 0.0;
    if equilibrium_end {
        return Ok(RadialPeriod { period: Val::Infinite, dtheta: Val::Finite(0.0), r_min: 0.0, r_max: hill.r_max, circular: false });
    }
    let ea = if hill.tag_min == BoundaryTag::Origin { End::Regular } else { End::Turning };
    let ell = rs.ell;
    let f = |r: f64| {
        if ell == 0.0 {
            vec![1.0, 0.0]
        } else {
            vec![1.0, ell / (r * r)]
        }
    };
    let room = |r: f64| rs.room(r);
    let v = inv_sqrt_integral(&f, &room, hill.r_min, hill.r_max, ea, End::Turning, tol);
    Ok(RadialPeriod {
        period: Val::Finite(2.0 * v[0]),
        dtheta: Val::Finite(2.0 * v[1]),
        r_min: hill.r_min,
        r_max: hill.r_max,
        circular: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_closed_forms() {
        let pair = RadialPair::new(1.0, -2.0, 0.0, 0.0, 1.0);
        let th = period_theta(&pair, 1e-13).unwrap();
        assert!((th.theta1.finite().unwrap() - 2.0).abs() < 1e-10);
        assert!((th.theta2.finite().unwrap() + 2.0 / 3.0).abs() < 1e-10);
        assert!((th.theta1_bound.finite().unwrap() - 2.0).abs() < 1e-10);
        assert!((theta2_engel_form(2.0, 1e-13) + 2.0 / 3.0).abs() < 1e-10);
        assert!((parts_integral(1e-13) - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn minus_branch_diverges() {
        let pair = RadialPair::new(-1.0, 2.0, 0.0, 0.0, 1.0);
        let th = period_theta(&pair, 1e-12).unwrap();
        assert_eq!(th.theta1, Val::Infinite);
    }

    #[test]
    fn homoclinic_period_infinite() {
        let rp = radial_period(&RadialSystem::new(1.0, -2.0, 0.0), None, 1e-12).unwrap();
        assert_eq!(rp.period, Val::Infinite);
    }

    #[test]
    fn origin_crossing_period() {
        // F = 0.5 - 2 r^2, l = 0: closed form via the substitution u = 2 r^2.
        let rs = RadialSystem::new(0.5, -2.0, 0.0);
        let rp = radial_period(&rs, Some(0.3), 1e-13).unwrap();
        let oracle = 2.0 * quad::integrate(|r: f64| 1.0 / (1.0 - (0.5 - 2.0 * r * r).powi(2)).sqrt(), 0.0, rp.r_max * (1.0 - 1e-14), 1e-11).0;
        assert!((rp.period.finite().unwrap() - oracle).abs() < 1e-5);
        assert_eq!(rp.dtheta, Val::Finite(0.0));
    }

    #[test]
    fn cost_identities() {
        let r = CostReport::from_delta([5.0, 3.0, 1.0], CostMethod::TimeDomain);
        assert_eq!(r.cost, [2.0, 2.0]);
    }

    #[test]
    fn circular_orbit_period() {
        let (ell, r) = crate::reduced::on_shell_circle(1.0, -2.0).unwrap();
        let rp = radial_period(&RadialSystem::new(1.0, -2.0, ell), None, 1e-12).unwrap();
        assert!(rp.circular);
        assert!((rp.period.finite().unwrap() - 2.0 * std::f64::consts::PI * r * r / ell).abs() < 1e-9);
    }

    fn homoclinic() -> (ReducedSystem, Trajectory) {
        use crate::models::{build_model, ModelKind};
        use crate::reduced::{equilibria, integrate_homoclinic, reduced_system, Momentum, Pencil};
        let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
        let sys = reduced_system(&spec, &Momentum::new(vec![1.0, 0.0, 0.0, -4.0]), Pencil::default()).unwrap();
        let eq = equilibria(&sys).remove(0);
        let tr = integrate_homoclinic(&sys, &eq, &[0.0, 0.0, 1.0, 0.0], 12.0, 1e-12).unwrap();
        (sys, tr)
    }

    #[test]
    fn homoclinic_window_cross_method() {
        let (sys, tr) = homoclinic();
        let tr = std::sync::Arc::new(tr);
        let c = MagneticGeodesic::from_reduced(&sys, tr.clone(), 0.0, [0.0, 0.0]);
        let time = delta_cost_time(&c, (-10.0, 10.0)).unwrap();
        let arc = delta_cost_arc(&sys, &tr, (-10.0, 10.0)).unwrap();
        let r_lo = 1.0 / (20.0f64).cosh();
        let rad = delta_cost_radial(&RadialPair::new(1.0, -2.0, 0.0, 0.0, 1.0), r_lo, 1.0, 2.0, 1e-13).unwrap();
        for k in 0..3 {
            assert!((time.delta[k] - rad.delta[k]).abs() < 1e-6, "{k}: {:?} {:?}", time.delta, rad.delta);
            assert!((time.delta[k] - arc.delta[k]).abs() < 1e-6, "{k}: {:?} {:?}", time.delta, arc.delta);
        }
        assert!(time.cost[0] >= 0.0);
    }

    #[test]
    fn period_matches_event_spacing() {
        use crate::reduced::{reduced_system, Momentum, Pencil};
        use crate::models::{build_model, ModelKind};
        let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
        let sys = reduced_system(&spec, &Momentum::new(vec![1.0, 0.0, 0.0, -4.0]), Pencil::default()).unwrap();
        let (ri, ell) = (0.5, 0.2);
        let pr = (1.0 - RadialSystem::new(1.0, -2.0, ell).potential(ri)).sqrt();
        let s0 = [pr, ell / ri, ri, 0.0];
        let (rs, _) = RadialSystem::from_reduced(&sys, &s0).unwrap();
        let rp = radial_period(&rs, Some(ri), 1e-12).unwrap();
        let l = rp.period.finite().unwrap();
        let tr = sys.integrate(&s0, (0.0, 3.0 * l), 1e-12).unwrap();
        let ev = tr.find_events(|_, y| y[0] * y[2] + y[1] * y[3], crate::integrator::EventKind::ZeroCrossing);
        assert!(ev.len() >= 4);
        for w in ev.windows(2) {
            assert!((2.0 * (w[1] - w[0]) - l).abs() < 1e-7, "{} vs {l}", 2.0 * (w[1] - w[0]));
        }
    }
}
