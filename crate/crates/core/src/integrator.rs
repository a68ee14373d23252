//! Adaptive Dormand–Prince 5(4) integration with dense output and event
//! location.

use crate::error::{Error, Result};
use serde::Serialize;

/// Autonomous first-order system `y' = f(y)`.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[f64], dy: &mut [f64]);
    /// Conserved energy, when the system has one.
    fn energy(&self, _y: &[f64]) -> Option<f64> {
        None
    }
}

/// Wraps a closure as [`Dynamics`].
pub struct FnDynamics<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> Dynamics for FnDynamics<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        (self.f)(y, dy)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Options {
    pub fn new(tol: f64) -> Self {
        Options { rtol: tol, atol: tol, h0: None, max_steps: 5_000_000 }
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }
}

/// One accepted step with its quartic interpolant.
#[derive(Clone, Debug)]
pub struct Step {
    t0: f64,
    h: f64,
    cont: Vec<f64>,
}

impl Step {
    fn lo(&self) -> f64 {
        self.t0.min(self.t0 + self.h)
    }
    fn hi(&self) -> f64 {
        self.t0.max(self.t0 + self.h)
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let d = out.len();
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        for i in 0..d {
            out[i] = c[i] + s * (c[d + i] + s1 * (c[2 * d + i] + s * (c[3 * d + i] + s1 * c[4 * d + i])));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub id: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    ZeroCrossing,
    BoundaryTouch,
}

/// Densely sampled solution on `[t_lo, t_hi]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    dim: usize,
    steps: Vec<Step>,
    t_lo: f64,
    t_hi: f64,
    pub events: Vec<Event>,
    pub energy_drift: f64,
    pub drift_warning: bool,
}

impl Trajectory {
    fn from_steps(dim: usize, mut steps: Vec<Step>) -> Self {
        steps.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
        let t_lo = steps.first().map_or(0.0, Step::lo);
        let t_hi = steps.last().map_or(0.0, Step::hi);
        Trajectory { dim, steps, t_lo, t_hi, events: Vec::new(), energy_drift: 0.0, drift_warning: false }
    }

    /// Constant trajectory, used when the initial state is stationary.
    pub fn constant(y: &[f64], t_lo: f64, t_hi: f64) -> Self {
        let d = y.len();
        let mut cont = vec![0.0; 5 * d];
        cont[..d].copy_from_slice(y);
        let step = Step { t0: t_lo, h: (t_hi - t_lo).max(f64::MIN_POSITIVE), cont };
        Trajectory::from_steps(d, vec![step])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Step boundaries in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.steps.iter().map(|s| s.lo().max(self.t_lo)).collect();
        b.push(self.t_hi);
        b
    }

    fn step_index(&self, t: f64) -> usize {
        let k = self.steps.partition_point(|s| s.lo() <= t);
        k.saturating_sub(1).min(self.steps.len() - 1)
    }

    /// Dense evaluation; `t` must lie in the span (1e-12 slack).
    pub fn state_at(&self, t: f64) -> Result<Vec<f64>> {
        let slack = 1e-12 * (1.0 + self.t_lo.abs().max(self.t_hi.abs()));
        if !(t >= self.t_lo - slack && t <= self.t_hi + slack) {
            return Err(Error::OutOfSpan { t, lo: self.t_lo, hi: self.t_hi });
        }
        Ok(self.eval(t))
    }

    /// Dense evaluation without span checking.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.steps[self.step_index(t)].eval_into(t, &mut out);
        out
    }

    /// `(t, state)` at every step boundary.
    pub fn samples(&self) -> Vec<(f64, Vec<f64>)> {
        self.breakpoints().into_iter().map(|t| (t, self.eval(t))).collect()
    }

    /// Evaluation grid with `per_step` sub-intervals in every step.
    pub fn fine_grid(&self, per_step: usize) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.steps.len() * per_step + 1);
        for s in &self.steps {
            let (a, b) = (s.lo().max(self.t_lo), s.hi().min(self.t_hi));
            for j in 0..per_step {
                g.push(a + (b - a) * j as f64 / per_step as f64);
            }
        }
        g.push(self.t_hi);
        g
    }

    /// Time-reversed copy `t -> 2 t_c - t` with the first `n_flip` components
    /// negated, valid for reversible systems.
    pub fn mirrored(&self, t_c: f64, n_flip: usize) -> Trajectory {
        let d = self.dim;
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let mut cont = s.cont.clone();
                for blk in 0..5 {
                    for v in &mut cont[blk * d..blk * d + n_flip] {
                        *v = -*v;
                    }
                }
                Step { t0: 2.0 * t_c - s.t0, h: -s.h, cont }
            })
            .collect();
        Trajectory::from_steps(d, steps)
    }

    pub fn shifted(&self, dt: f64) -> Trajectory {
        let steps = self.steps.iter().map(|s| Step { t0: s.t0 + dt, ..s.clone() }).collect();
        let mut out = Trajectory::from_steps(self.dim, steps);
        out.events = self.events.iter().map(|e| Event { t: e.t + dt, id: e.id }).collect();
        out.energy_drift = self.energy_drift;
        out.drift_warning = self.drift_warning;
        out
    }

    /// Joins two trajectories whose spans meet end to end.
    pub fn joined(a: &Trajectory, b: &Trajectory) -> Trajectory {
        let steps = a.steps.iter().chain(&b.steps).cloned().collect();
        let mut out = Trajectory::from_steps(a.dim, steps);
        out.energy_drift = a.energy_drift.max(b.energy_drift);
        out.drift_warning = a.drift_warning || b.drift_warning;
        out
    }

    /// Restricts the reported span (the stored steps are kept).
    pub fn restricted(mut self, lo: f64, hi: f64) -> Trajectory {
        self.t_lo = self.t_lo.max(lo);
        self.t_hi = self.t_hi.min(hi);
        self.steps.retain(|s| s.hi() > self.t_lo && s.lo() < self.t_hi);
        self
    }

    /// Max `|H - H0|` over step boundaries and midpoints.
    pub fn measure_drift<D: Dynamics + ?Sized>(&mut self, sys: &D, h0: f64, bound: f64) {
        let drift = self
            .fine_grid(2)
            .into_iter()
            .filter_map(|t| sys.energy(&self.eval(t)))
            .map(|h| (h - h0).abs())
            .fold(0.0, f64::max);
        self.energy_drift = drift;
        self.drift_warning = drift > bound;
    }

    /// CSV with header `t, <names...>, H` when `energy` is given.
    pub fn write_csv<W: std::io::Write, D: Dynamics + ?Sized>(
        &self,
        w: W,
        names: &[String],
        sys: Option<&D>,
    ) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(names.iter().cloned());
        if sys.is_some() {
            header.push("H".into());
        }
        wr.write_record(&header)?;
        for (t, y) in self.samples() {
            let mut row = vec![t.to_string()];
            row.extend(y.iter().map(f64::to_string));
            if let Some(h) = sys.and_then(|s| s.energy(&y)) {
                row.push(h.to_string());
            }
            wr.write_record(&row)?;
        }
        wr.flush()
    }

    /// Events of `f(t, state)`; see [`find_events_fn`].
    pub fn find_events<F: Fn(f64, &[f64]) -> f64>(&self, f: F, kind: EventKind) -> Vec<f64> {
        let grid = self.fine_grid(8);
        find_events_fn(&grid, |t| f(t, &self.eval(t)), kind)
    }
}

const A: [&[f64]; 6] = [
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn error_norm(err: &[f64], y: &[f64], ynew: &[f64], o: &Options) -> f64 {
    let s: f64 = err
        .iter()
        .zip(y.iter().zip(ynew))
        .map(|(e, (a, b))| {
            let sc = o.atol + o.rtol * a.abs().max(b.abs());
            if sc > 0.0 {
                (e / sc).powi(2)
            } else if *e == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum();
    (s / err.len() as f64).sqrt()
}

fn initial_step<D: Dynamics + ?Sized>(sys: &D, y: &[f64], f0: &[f64], dir: f64, o: &Options) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| o.atol + o.rtol * v.abs()).collect();
    let rms = |v: &[f64]| {
        (v.iter().zip(&sc).map(|(a, s)| if *s > 0.0 { (a / s).powi(2) } else { 0.0 }).sum::<f64>()
            / v.len() as f64)
            .sqrt()
    };
    let (d0, d1) = (rms(y), rms(f0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.rhs(&y1, &mut f1);
    let df: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&df) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

/// One-directional run from `t0` to `t1`.
fn run<D: Dynamics + ?Sized>(sys: &D, y0: &[f64], t0: f64, t1: f64, o: &Options) -> Result<Vec<Step>> {
    let d = sys.dim();
    if y0.len() != d {
        return Err(Error::Dimension { expected: d, got: y0.len() });
    }
    if t1 == t0 {
        return Ok(Vec::new());
    }
    let dir = (t1 - t0).signum();
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; d]; 7];
    sys.rhs(&y, &mut k[0]);
    if k[0].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t0 });
    }
    let mut h = o.h0.unwrap_or_else(|| initial_step(sys, &y, &k[0], dir, o)).abs();
    let (beta, safe, fac_lo, fac_hi) = (0.04, 0.9, 0.2, 10.0);
    let expo = 0.2 - beta * 0.75;
    let mut facold: f64 = 1e-4;
    let mut t = t0;
    let mut steps = Vec::new();
    let mut ytmp = vec![0.0; d];
    let mut ynew = vec![0.0; d];
    let mut err = vec![0.0; d];
    let mut rejected = false;
    let mut count = 0usize;
    while (t1 - t) * dir > 0.0 {
        count += 1;
        if count > o.max_steps {
            return Err(Error::MaxSteps { t });
        }
        let mut last = false;
        if (t + dir * h - t1) * dir >= 0.0 {
            h = (t1 - t).abs();
            last = true;
        }
        let hs = dir * h;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, state: y });
        }
        for (s, row) in A.iter().enumerate() {
            for i in 0..d {
                ytmp[i] = y[i] + hs * row.iter().enumerate().map(|(j, a)| a * k[j][i]).sum::<f64>();
            }
            sys.rhs(&ytmp, &mut k[s + 1]);
        }
        ynew.copy_from_slice(&ytmp);
        if k[6].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        for i in 0..d {
            err[i] = hs * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
        }
        let en = error_norm(&err, &y, &ynew, o);
        let fac11 = en.powf(expo);
        if en <= 1.0 {
            let mut cont = vec![0.0; 5 * d];
            for i in 0..d {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k[0][i] - ydiff;
                cont[i] = y[i];
                cont[d + i] = ydiff;
                cont[2 * d + i] = bspl;
                cont[3 * d + i] = ydiff - hs * k[6][i] - bspl;
                cont[4 * d + i] = hs * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
            }
            steps.push(Step { t0: t, h: hs, cont });
            let fac = (fac11 / facold.powf(beta) / safe).clamp(1.0 / fac_hi, 1.0 / fac_lo);
            facold = en.max(1e-4);
            let mut hnew = h / fac;
            if rejected {
                hnew = hnew.min(h);
            }
            rejected = false;
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&ynew);
            let k6 = k[6].clone();
            k[0] = k6;
            h = hnew;
        } else {
            let fac = (fac11 / safe).min(1.0 / fac_lo);
            h /= if en.is_finite() { fac } else { 1.0 / fac_lo };
            rejected = true;
        }
    }
    Ok(steps)
}

/// Integrates over `span` from the state `y0` given at `t0`; the span may
/// extend on both sides of `t0`.
pub fn integrate_dyn<D: Dynamics + ?Sized>(
    sys: &D,
    y0: &[f64],
    t0: f64,
    span: (f64, f64),
    o: &Options,
) -> Result<Trajectory> {
    let (a, b) = span;
    if !(a <= t0 && t0 <= b) || !(a < b) {
        return Err(Error::InvalidParam(format!("bad span [{a}, {b}] around t0 = {t0}")));
    }
    let mut steps = run(sys, y0, t0, a, o)?;
    steps.extend(run(sys, y0, t0, b, o)?);
    let mut tr = Trajectory::from_steps(sys.dim(), steps);
    if let Some(h0) = sys.energy(y0) {
        tr.measure_drift(sys, h0, 100.0 * o.rtol.max(o.atol));
    }
    Ok(tr)
}

/// Spec-level entry: validates `tol` and integrates from `span.0` when
/// `t0` is absent.
pub fn integrate<D: Dynamics + ?Sized>(sys: &D, y0: &[f64], span: (f64, f64), tol: f64) -> Result<Trajectory> {
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(Error::InvalidParam(format!("tol {tol} outside [1e-13, 1e-3]")));
    }
    let t0 = if span.0 <= 0.0 && 0.0 <= span.1 { 0.0 } else { span.0 };
    integrate_dyn(sys, y0, t0, span, &Options::new(tol))
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if m == a && m == b {
            break;
        }
    }
    0.5 * (a + b)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Refined sign changes of `f` on the grid; with `BoundaryTouch`, also
/// interior local minima of `|f|` below 1e-8 without a sign change.
pub fn find_events_fn<F: Fn(f64) -> f64>(grid: &[f64], f: F, kind: EventKind) -> Vec<f64> {
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    for i in 0..grid.len().saturating_sub(1) {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            out.push(grid[i]);
        } else if fa * fb < 0.0 {
            out.push(bisect(&f, grid[i], grid[i + 1], fa, 1e-13 * (1.0 + grid[i].abs())));
        }
    }
    if let Some(&last) = vals.last() {
        if last == 0.0 {
            out.push(*grid.last().unwrap());
        }
    }
    if kind == EventKind::BoundaryTouch {
        let af = |t: f64| f(t).abs();
        for i in 1..grid.len().saturating_sub(1) {
            let (l, m, r) = (vals[i - 1].abs(), vals[i].abs(), vals[i + 1].abs());
            let same_sign = vals[i - 1] * vals[i] > 0.0 && vals[i] * vals[i + 1] > 0.0;
            if m <= l && m < r && same_sign {
                let (t, v) = golden_min(&af, grid[i - 1], grid[i + 1], 1e-12 * (1.0 + grid[i].abs()));
                if v < 1e-8 {
                    out.push(t);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> FnDynamics<impl Fn(&[f64], &mut [f64]) + Sync> {
        FnDynamics {
            dim: 2,
            f: |y: &[f64], dy: &mut [f64]| {
                dy[0] = -y[1];
                dy[1] = y[0];
            },
        }
    }

    #[test]
    fn harmonic_quarter_period() {
        let tr = integrate(&oscillator(), &[1.0, 0.0], (0.0, 2.0), 1e-11).unwrap();
        let y = tr.state_at(std::f64::consts::FRAC_PI_2).unwrap();
        assert!((y[1] - 1.0).abs() < 1e-9 && y[0].abs() < 1e-9);
        let t = 1.234;
        let y = tr.state_at(t).unwrap();
        assert!((y[1] - t.sin()).abs() < 1e-8 && (y[0] - t.cos()).abs() < 1e-8);
    }

    #[test]
    fn two_sided_span() {
        let tr = integrate_dyn(&oscillator(), &[1.0, 0.0], 0.0, (-3.0, 3.0), &Options::new(1e-11)).unwrap();
        assert_eq!(tr.span(), (-3.0, 3.0));
        let y = tr.state_at(-2.5).unwrap();
        assert!((y[1] - (-2.5f64).sin()).abs() < 1e-8);
        assert!(tr.state_at(3.5).is_err());
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(integrate(&oscillator(), &[1.0, 0.0], (0.0, 1.0), 1e-2).is_err());
        assert!(integrate(&oscillator(), &[1.0, 0.0], (0.0, 1.0), 1e-15).is_err());
    }

    #[test]
    fn events_on_sine() {
        let tr = integrate(&oscillator(), &[1.0, 0.0], (0.0, 10.0), 1e-12).unwrap();
        let z = tr.find_events(|_, y| y[1], EventKind::ZeroCrossing);
        let pi = std::f64::consts::PI;
        assert_eq!(z.len(), 4);
        for (k, t) in z.iter().enumerate() {
            assert!((t - k as f64 * pi).abs() < 1e-9, "{t}");
        }
        let touches = tr.find_events(|_, y| 1.0 - y[1] * y[1], EventKind::BoundaryTouch);
        assert_eq!(touches.len(), 3);
        assert!((touches[0] - pi / 2.0).abs() < 1e-6);
    }

    #[test]
    fn mirror_and_shift() {
        let tr = integrate(&oscillator(), &[1.0, 0.0], (0.0, 2.0), 1e-12).unwrap();
        let m = tr.mirrored(0.0, 1);
        assert_eq!(m.span(), (-2.0, 0.0));
        let y = m.eval(-1.0);
        assert!((y[0] + 1f64.cos()).abs() < 1e-9 && (y[1] - 1f64.sin()).abs() < 1e-9);
        let s = tr.shifted(5.0);
        assert!((s.eval(6.0)[1] - 1f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn constant_state() {
        let tr = Trajectory::constant(&[0.5, 2.0], -1.0, 1.0);
        assert_eq!(tr.eval(0.3), vec![0.5, 2.0]);
    }
}
