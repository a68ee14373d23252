//! Reduced Hamiltonian systems `H = |p|^2/2 + G(x)^2/2` built from a
//! momentum, together with normal forms, radial reductions, Hill intervals
//! and equilibria.

use crate::error::{Error, Result};
use crate::integrator::{self, Dynamics, EventKind, Options, Trajectory};
use crate::models::{apply, GroupSpec, ModelId};
use crate::poly::Poly;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub a: Vec<f64>,
}

impl Momentum {
    pub fn new(a: Vec<f64>) -> Self {
        Momentum { a }
    }

    pub fn check(&self, spec: &GroupSpec) -> Result<()> {
        if self.a.len() != spec.dim_a {
            return Err(Error::Dimension { expected: spec.dim_a, got: self.a.len() });
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("non-finite momentum coefficient".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|&v| v == 0.0)
    }
}

impl FromStr for Momentum {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_list(s).map(Momentum::new)
    }
}

/// Parses a comma-separated list of reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidParam(format!("`{t}` is not a number")))
        })
        .collect()
}

/// `G = a + b F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pencil {
    pub a: f64,
    pub b: f64,
}

impl Default for Pencil {
    fn default() -> Self {
        Pencil { a: 0.0, b: 1.0 }
    }
}

impl Pencil {
    pub fn apply(&self, f: f64) -> f64 {
        self.a + self.b * f
    }
}

/// `F_mu = sum_k a_k P_k` over the frame polynomials.
pub fn momentum_poly(spec: &GroupSpec, mu: &Momentum) -> Result<Poly> {
    mu.check(spec)?;
    Ok(spec
        .frame_polys
        .iter()
        .zip(&mu.a)
        .fold(Poly::zero(spec.rank_h), |acc, (p, &a)| acc.add(&p.scale(a))))
}

#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub spec: Option<GroupSpec>,
    pub mu: Option<Momentum>,
    pub f: Poly,
    pub grad_f: Vec<Poly>,
    pub pencil: Pencil,
    pub g: Poly,
    pub grad_g: Vec<Poly>,
}

pub fn reduced_system(spec: &GroupSpec, mu: &Momentum, pencil: Pencil) -> Result<ReducedSystem> {
    let f = momentum_poly(spec, mu)?;
    let mut sys = ReducedSystem::from_poly(f, pencil);
    sys.spec = Some(spec.clone());
    sys.mu = Some(mu.clone());
    Ok(sys)
}

impl ReducedSystem {
    pub fn from_poly(f: Poly, pencil: Pencil) -> Self {
        let g = f.affine(pencil.a, pencil.b);
        ReducedSystem {
            spec: None,
            mu: None,
            grad_f: f.gradient(),
            grad_g: g.gradient(),
            f,
            pencil,
            g,
        }
    }

    pub fn n(&self) -> usize {
        self.f.nvars()
    }

    pub fn f_at(&self, x: &[f64]) -> f64 {
        self.f.eval(x)
    }

    pub fn g_at(&self, x: &[f64]) -> f64 {
        self.g.eval(x)
    }

    pub fn grad_g_at(&self, x: &[f64]) -> Vec<f64> {
        self.grad_g.iter().map(|p| p.eval(x)).collect()
    }

    pub fn grad_f_at(&self, x: &[f64]) -> Vec<f64> {
        self.grad_f.iter().map(|p| p.eval(x)).collect()
    }

    pub fn hessian_g_at(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.grad_g[i].derivative(j).eval(x))
    }

    pub fn hamiltonian(&self, state: &[f64]) -> f64 {
        let n = self.n();
        let g = self.g_at(&state[n..]);
        0.5 * state[..n].iter().map(|p| p * p).sum::<f64>() + 0.5 * g * g
    }

    pub fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != 2 * self.n() {
            return Err(Error::Dimension { expected: 2 * self.n(), got: state.len() });
        }
        Ok(())
    }

    /// Dimension check plus `|H - 1/2| <= tol`.
    pub fn check_on_shell(&self, state: &[f64], tol: f64) -> Result<()> {
        self.check_state(state)?;
        let off = (self.hamiltonian(state) - 0.5).abs();
        if !(off <= tol) {
            return Err(Error::OffShell(off));
        }
        Ok(())
    }

    /// Initial state `[p, x]` on the energy shell: the momentum direction is
    /// rescaled so that `H = 1/2`.
    pub fn on_shell(&self, p_dir: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let g = self.g_at(x);
        let room = 1.0 - g * g;
        if room < -1e-12 {
            return Err(Error::InvalidParam(format!("|G(x)| = {} exceeds 1", g.abs())));
        }
        let norm = p_dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { room.max(0.0).sqrt() / norm } else { 0.0 };
        if norm == 0.0 && room > 1e-12 {
            return Err(Error::InvalidParam("zero momentum direction off the Hill boundary".into()));
        }
        let mut s: Vec<f64> = p_dir.iter().map(|v| v * scale).collect();
        s.extend_from_slice(x);
        Ok(s)
    }

    pub fn integrate(&self, state0: &[f64], span: (f64, f64), tol: f64) -> Result<Trajectory> {
        self.check_state(state0)?;
        integrator::integrate(self, state0, span, tol)
    }

    /// Angular momentum `L = p_1 x_2 - p_2 x_1` (planar systems).
    pub fn angular_momentum(state: &[f64]) -> f64 {
        let n = state.len() / 2;
        if n < 2 {
            return 0.0;
        }
        state[0] * state[n + 1] - state[1] * state[n]
    }
}

impl Dynamics for ReducedSystem {
    fn dim(&self) -> usize {
        2 * self.n()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.n();
        let x = &y[n..];
        let g = self.g.eval(x);
        for i in 0..n {
            dy[i] = -g * self.grad_g[i].eval(x);
            dy[n + i] = y[i];
        }
    }

    fn energy(&self, y: &[f64]) -> Option<f64> {
        Some(self.hamiltonian(y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum NormalKind {
    /// `alpha + beta |x~|^2`.
    Radial { alpha: f64, beta: f64 },
    /// `alpha + beta (x~_2^2 - x~_1^2)`.
    Hyperbolic { alpha: f64, beta: f64 },
    /// `alpha + beta1 x~_1^2 + beta2 x~_2^2`.
    Diagonal { alpha: f64, beta1: f64, beta2: f64 },
}

/// `x~ = R (x + shift)` with `F(x) = F~(x~)`.
#[derive(Clone, Debug, Serialize)]
pub struct NormalForm {
    pub kind: NormalKind,
    pub shift: Vec<f64>,
    #[serde(skip)]
    pub rotation: DMatrix<f64>,
    pub poly: Poly,
}

impl NormalForm {
    pub fn to_normal(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        apply(&self.rotation, &y)
    }

    pub fn from_normal(&self, xt: &[f64]) -> Vec<f64> {
        let y = apply(&self.rotation.transpose(), xt);
        y.iter().zip(&self.shift).map(|(a, b)| a - b).collect()
    }

    /// Maps a phase point `[p, x]` to normal coordinates.
    pub fn state_to_normal(&self, s: &[f64]) -> Vec<f64> {
        let n = s.len() / 2;
        let mut out = apply(&self.rotation, &s[..n]);
        out.extend(self.to_normal(&s[n..]));
        out
    }

    pub fn state_from_normal(&self, s: &[f64]) -> Vec<f64> {
        let n = s.len() / 2;
        let mut out = apply(&self.rotation.transpose(), &s[..n]);
        out.extend(self.from_normal(&s[n..]));
        out
    }

    /// Max `|F(x) - F~(x~)|` over the given points.
    pub fn identity_residual(&self, f: &Poly, points: &[Vec<f64>]) -> f64 {
        points
            .iter()
            .map(|x| (f.eval(x) - self.poly.eval(&self.to_normal(x))).abs())
            .fold(0.0, f64::max)
    }
}

fn sq(n: usize, i: usize, c: f64) -> Poly {
    let mut e = vec![0; n];
    e[i] = 2;
    Poly::from_terms(n, [(e, c)])
}

/// Normal form of `F_mu` for the model the system was built from.
pub fn normal_form(sys: &ReducedSystem) -> Result<NormalForm> {
    let (Some(spec), Some(mu)) = (&sys.spec, &sys.mu) else {
        return Err(Error::InvalidParam("normal form needs the model and momentum".into()));
    };
    let a = &mu.a;
    let n = spec.rank_h;
    match spec.model_id {
        ModelId::Eng(_) => {
            let lead = a[n + 1];
            if lead == 0.0 {
                return Err(Error::NoNormalForm);
            }
            let shift: Vec<f64> = a[1..=n].iter().map(|ai| ai / lead).collect();
            let alpha = a[0] - a[1..=n].iter().map(|ai| ai * ai).sum::<f64>() / (2.0 * lead);
            let beta = lead / 2.0;
            let poly = (0..n).fold(Poly::constant(n, alpha), |p, i| p.add(&sq(n, i, beta)));
            Ok(NormalForm { kind: NormalKind::Radial { alpha, beta }, shift, rotation: DMatrix::identity(n, n), poly })
        }
        ModelId::G357 => {
            let (b1, b2) = (a[3], a[4]);
            if b1 == 0.0 || b2 == 0.0 {
                return Err(Error::NoNormalForm);
            }
            let shift = vec![a[1] / b1, a[2] / b2];
            let alpha = a[0] - a[1] * a[1] / (2.0 * b1) - a[2] * a[2] / (2.0 * b2);
            let (beta1, beta2) = (b1 / 2.0, b2 / 2.0);
            let poly = Poly::constant(2, alpha).add(&sq(2, 0, beta1)).add(&sq(2, 1, beta2));
            let kind = if beta1 == beta2 {
                NormalKind::Radial { alpha, beta: beta1 }
            } else {
                NormalKind::Diagonal { alpha, beta1, beta2 }
            };
            Ok(NormalForm { kind, shift, rotation: DMatrix::identity(2, 2), poly })
        }
        ModelId::N631 => {
            let a3 = a[3];
            if a3 == 0.0 {
                return Err(Error::NoNormalForm);
            }
            // u = x + shift satisfies F = alpha + a3 u1 u2; the quarter-turn
            // diagonalises u1 u2 = (x~2^2 - x~1^2) / 2.
            let shift = vec![a[2] / a3, a[1] / a3];
            let alpha = a[0] - a[1] * a[2] / a3;
            let beta = a3 / 2.0;
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let rotation = DMatrix::from_row_slice(2, 2, &[-h, h, h, h]);
            let poly = Poly::constant(2, alpha).add(&sq(2, 1, beta)).add(&sq(2, 0, -beta));
            Ok(NormalForm { kind: NormalKind::Hyperbolic { alpha, beta }, shift, rotation, poly })
        }
    }
}

/// Radial one-degree-of-freedom system with potential `V = l^2/r^2 + G(r)^2`,
/// `G(r) = alpha + beta r^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialSystem {
    pub alpha: f64,
    pub beta: f64,
    pub ell: f64,
}

impl RadialSystem {
    pub fn new(alpha: f64, beta: f64, ell: f64) -> Self {
        RadialSystem { alpha, beta, ell }
    }

    pub fn g(&self, r: f64) -> f64 {
        self.alpha + self.beta * r * r
    }

    pub fn potential(&self, r: f64) -> f64 {
        let g = self.g(r);
        let c = if self.ell == 0.0 { 0.0 } else { self.ell * self.ell / (r * r) };
        c + g * g
    }

    /// `1 - V`, with `1 - G^2` factored to limit cancellation.
    pub fn room(&self, r: f64) -> f64 {
        let r2 = r * r;
        let c = if self.ell == 0.0 { 0.0 } else { self.ell * self.ell / r2 };
        ((1.0 - self.alpha) - self.beta * r2) * ((1.0 + self.alpha) + self.beta * r2) - c
    }

    pub fn dpotential(&self, r: f64) -> f64 {
        let c = if self.ell == 0.0 { 0.0 } else { -2.0 * self.ell * self.ell / r.powi(3) };
        c + 4.0 * self.beta * r * self.g(r)
    }

    /// Radial reduction of an Engel-type (or isotropic G357) system, with the
    /// pencil folded into `(alpha, beta)`. Returns the system and the
    /// normal-form initial `(p_r, r)`.
    pub fn from_reduced(sys: &ReducedSystem, state0: &[f64]) -> Result<(RadialSystem, [f64; 2])> {
        let nf = normal_form(sys)?;
        let NormalKind::Radial { alpha, beta } = nf.kind else {
            return Err(Error::InvalidParam("potential is not radial".into()));
        };
        let s = nf.state_to_normal(state0);
        let n = sys.n();
        let (p, x) = s.split_at(n);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let pp = p.iter().map(|v| v * v).sum::<f64>();
        let xp: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
        let ell = if r > 0.0 { ((r * r * pp - xp * xp).max(0.0)).sqrt() } else { 0.0 };
        let ell = if n == 2 && ReducedSystem::angular_momentum(&s) > 0.0 { -ell } else { ell };
        let pr = if r > 0.0 { xp / r } else { pp.sqrt() };
        let pen = sys.pencil;
        Ok((RadialSystem::new(pen.a + pen.b * alpha, pen.b * beta, ell), [pr, r]))
    }
}

impl Dynamics for RadialSystem {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy[0] = -0.5 * self.dpotential(y[1]);
        dy[1] = y[0];
    }

    fn energy(&self, y: &[f64]) -> Option<f64> {
        Some(0.5 * y[0] * y[0] + 0.5 * self.potential(y[1]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HillKind {
    Interval,
    SetSampled,
    Degenerate,
}

/// What bounds the radial motion at an endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundaryTag {
    /// `G = +1`.
    Plus,
    /// `G = -1`.
    Minus,
    /// Turning point of the centrifugal term.
    Centrifugal,
    /// The orbit passes through the centre.
    Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HillData {
    pub kind: HillKind,
    pub r_min: f64,
    pub r_max: f64,
    pub tag_min: BoundaryTag,
    pub tag_max: BoundaryTag,
}

fn refine_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
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
    }
    0.5 * (a + b)
}

fn tag_at(rs: &RadialSystem, r: f64) -> BoundaryTag {
    if rs.ell != 0.0 {
        BoundaryTag::Centrifugal
    } else if rs.g(r) > 0.0 {
        BoundaryTag::Plus
    } else {
        BoundaryTag::Minus
    }
}

/// Radial Hill interval containing `r0` (or the innermost one).
pub fn hill_radial(rs: &RadialSystem, r0: Option<f64>) -> Result<HillData> {
    let RadialSystem { alpha, beta, ell } = *rs;
    if beta == 0.0 {
        if ell == 0.0 && (alpha.abs() - 1.0).abs() < 1e-14 {
            return Ok(HillData {
                kind: HillKind::Degenerate,
                r_min: 0.0,
                r_max: f64::INFINITY,
                tag_min: tag_at(rs, 0.0),
                tag_max: tag_at(rs, 0.0),
            });
        }
        if alpha.abs() < 1.0 {
            return Err(Error::InvalidParam("unbounded Hill region".into()));
        }
        return Err(Error::EmptyHill);
    }
    if let Some(eq) = radial_relative_equilibrium(rs) {
        if (rs.potential(eq) - 1.0).abs() < 1e-10 {
            return Ok(HillData {
                kind: HillKind::Degenerate,
                r_min: eq,
                r_max: eq,
                tag_min: BoundaryTag::Centrifugal,
                tag_max: BoundaryTag::Centrifugal,
            });
        }
    }
    let mut big = 1.0;
    while rs.potential(big) <= 1.0 || rs.dpotential(big) <= 0.0 {
        big *= 2.0;
        if big > 1e150 {
            return Err(Error::InvalidParam("unbounded Hill region".into()));
        }
    }
    let room = |r: f64| rs.room(r);
    // Log-spaced near the centre, linear further out.
    let n = 4000;
    let mut grid: Vec<f64> = (0..n).map(|k| big * 1e-12f64.powf(1.0 - k as f64 / n as f64) * 1e-3).collect();
    grid.extend((0..=n).map(|k| big * (1e-3 + (1.0 - 1e-3) * k as f64 / n as f64)));
    let mut comps: Vec<(f64, f64)> = Vec::new();
    let mut start: Option<f64> = None;
    if ell == 0.0 && room(0.0) >= 0.0 {
        start = Some(0.0);
    }
    let mut prev = if ell == 0.0 { 0.0 } else { grid[0] };
    let mut prev_in = ell == 0.0 && room(0.0) >= 0.0;
    for &r in &grid {
        let inside = room(r) > 0.0;
        if inside && !prev_in {
            start = Some(refine_root(room, prev, r));
        } else if !inside && prev_in {
            let s = start.take().unwrap_or(0.0);
            comps.push((s, refine_root(room, prev, r)));
        }
        prev = r;
        prev_in = inside;
    }
    if comps.is_empty() {
        return Err(Error::EmptyHill);
    }
    let (r_min, r_max) = match r0 {
        Some(r0) => *comps
            .iter()
            .find(|(a, b)| r0 >= a - 1e-9 && r0 <= b + 1e-9)
            .ok_or_else(|| Error::InvalidParam(format!("r0 = {r0} outside the Hill region")))?,
        None => comps[0],
    };
    let tag_min = if r_min == 0.0 && ell == 0.0 {
        if room(0.0) > 1e-14 {
            BoundaryTag::Origin
        } else {
            tag_at(rs, 0.0)
        }
    } else {
        tag_at(rs, r_min)
    };
    Ok(HillData { kind: HillKind::Interval, r_min, r_max, tag_min, tag_max: tag_at(rs, r_max) })
}

/// Critical radius of `V` for `l != 0` (unique when `beta != 0`).
pub fn radial_relative_equilibrium(rs: &RadialSystem) -> Option<f64> {
    if rs.ell == 0.0 || rs.beta == 0.0 {
        return None;
    }
    // dV/ds in s = r^2 is increasing, so bracket and bisect.
    let l2 = rs.ell * rs.ell;
    let dvds = |s: f64| -l2 / (s * s) + 2.0 * rs.beta * (rs.alpha + rs.beta * s);
    let (mut lo, mut hi) = (1e-12, 1.0);
    while dvds(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e200 {
            return None;
        }
    }
    while dvds(lo) > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return None;
        }
    }
    Some(refine_root(dvds, lo, hi).sqrt())
}

/// The angular momentum `l` and radius `r*` of the circular orbit lying on
/// the energy shell `V = 1`, if one exists.
pub fn on_shell_circle(alpha: f64, beta: f64) -> Option<(f64, f64)> {
    if beta == 0.0 {
        return None;
    }
    // With G = alpha + beta s: V' = 0 gives l^2 = 2 beta s^2 G, then V = 1
    // reads 2 beta s G + G^2 = 1 with beta G > 0.
    let h = |s: f64| {
        let g = alpha + beta * s;
        2.0 * beta * s * g + g * g - 1.0
    };
    let s_lo = if beta * alpha > 0.0 { 0.0 } else { -alpha / beta };
    let mut hi = s_lo + 1.0;
    while h(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e100 {
            return None;
        }
    }
    if h(s_lo.max(1e-300)) > 0.0 {
        return None;
    }
    let s = refine_root(h, s_lo.max(1e-300), hi);
    let g = alpha + beta * s;
    let l2 = 2.0 * beta * s * s * g;
    (l2 > 0.0).then(|| (l2.sqrt(), s.sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    HomoclinicCenterSaddle,
    RelativeEquilibrium,
}

#[derive(Clone, Debug, Serialize)]
pub struct Equilibrium {
    /// Phase point `[p, x]` (radial systems: `[p_r, r]`).
    pub point: Vec<f64>,
    pub kind: EquilibriumKind,
    /// Value of `G` at the equilibrium.
    pub g_value: f64,
    /// Saddle exponent `lambda` (zero for relative equilibria).
    pub lambda: f64,
    /// Energy `V/2` at the point; on-shell when it equals 1/2.
    pub energy: f64,
    pub homoclinic_ics: Vec<Vec<f64>>,
    pub hill: Option<(f64, f64)>,
}

/// Equilibria of a radial system on the energy shell (for `l = 0`) or the
/// critical radius of the effective potential (for `l != 0`).
pub fn equilibria_radial(rs: &RadialSystem) -> Vec<Equilibrium> {
    if rs.ell == 0.0 {
        let g0 = rs.alpha;
        if (g0.abs() - 1.0).abs() < 1e-12 && rs.beta * g0 < 0.0 {
            let b = rs.beta.abs();
            let r_max = (2.0 / b).sqrt();
            return vec![Equilibrium {
                point: vec![0.0, 0.0],
                kind: EquilibriumKind::HomoclinicCenterSaddle,
                g_value: g0,
                lambda: (2.0 * b).sqrt(),
                energy: 0.5,
                homoclinic_ics: vec![vec![0.0, r_max]],
                hill: Some((0.0, r_max)),
            }];
        }
        return Vec::new();
    }
    match radial_relative_equilibrium(rs) {
        Some(r) => vec![Equilibrium {
            point: vec![0.0, r],
            kind: EquilibriumKind::RelativeEquilibrium,
            g_value: rs.g(r),
            lambda: 0.0,
            energy: 0.5 * rs.potential(r),
            homoclinic_ics: Vec::new(),
            hill: Some((r, r)),
        }],
        None => Vec::new(),
    }
}

/// On-shell equilibria `p = 0, grad G = 0, |G| = 1` of a system with
/// quadratic `G`, with the homoclinic initial conditions along each unstable
/// eigendirection.
pub fn equilibria(sys: &ReducedSystem) -> Vec<Equilibrium> {
    let n = sys.n();
    if sys.g.degree() != 2 {
        return Vec::new();
    }
    let hess = sys.hessian_g_at(&vec![0.0; n]);
    let g0 = sys.grad_g_at(&vec![0.0; n]);
    let Some(xs) = hess.clone().lu().solve(&nalgebra::DVector::from_column_slice(&g0)) else {
        return Vec::new();
    };
    let xstar: Vec<f64> = xs.iter().map(|v| -v).collect();
    let gstar = sys.g_at(&xstar);
    if (gstar.abs() - 1.0).abs() > 1e-10 {
        return Vec::new();
    }
    // Linearisation: p' = -G* Hess(G) dx.
    let eig = SymmetricEigen::new(&hess * (-gstar));
    let mut ics = Vec::new();
    let mut lambda: f64 = 0.0;
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu <= 1e-14 {
            continue;
        }
        lambda = lambda.max(mu.sqrt());
        let d: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        // G along the line: G* - (mu / (2 G*)) s^2 = -G* at s^2 = 4 G*^2 / mu.
        let s = (4.0 / mu).sqrt();
        for sign in [1.0, -1.0] {
            let mut st = vec![0.0; n];
            st.extend(xstar.iter().zip(&d).map(|(a, b)| a + sign * s * b));
            ics.push(st);
        }
    }
    if ics.is_empty() {
        return Vec::new();
    }
    let mut point = vec![0.0; n];
    point.extend(&xstar);
    vec![Equilibrium {
        point,
        kind: EquilibriumKind::HomoclinicCenterSaddle,
        g_value: gstar,
        lambda,
        energy: 0.5 * gstar * gstar,
        homoclinic_ics: ics,
        hill: None,
    }]
}

/// Direction of `v`, scaled first so tiny vectors survive.
fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let m = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if m == 0.0 {
        return None;
    }
    let w: Vec<f64> = v.iter().map(|a| a / m).collect();
    let n = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    Some(w.iter().map(|a| a / n).collect())
}

/// Homoclinic orbit through the turning point `turn = [0, x_turn]` on the
/// stable manifold of `eq`, parameterised so the turn is at `t = 0` and
/// sampled on `[-t_max, t_max]`.
///
/// The orbit is seeded on the local stable manifold next to the equilibrium,
/// integrated backward to the turn, and completed by reversibility.
pub fn integrate_homoclinic(
    sys: &ReducedSystem,
    eq: &Equilibrium,
    turn: &[f64],
    t_max: f64,
    tol: f64,
) -> Result<Trajectory> {
    let n = sys.n();
    sys.check_state(turn)?;
    if eq.kind != EquilibriumKind::HomoclinicCenterSaddle || eq.lambda <= 0.0 {
        return Err(Error::InvalidParam("equilibrium is not a saddle".into()));
    }
    let xstar = &eq.point[n..];
    let dir: Vec<f64> = turn[n..].iter().zip(xstar).map(|(a, b)| a - b).collect();
    let dist = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dist == 0.0 {
        return Err(Error::InvalidParam("turning point coincides with the equilibrium".into()));
    }
    let d: Vec<f64> = dir.iter().map(|v| v / dist).collect();
    let opts = Options::new(tol).with_atol(1e-300);
    let lambda = eq.lambda;
    let hess = sys.hessian_g_at(xstar);
    let mut eps = 2.0 * dist * (-lambda * (t_max + 1.0)).exp();
    for _ in 0..6 {
        let x: Vec<f64> = xstar.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
        // G is quadratic with a critical point at x*, so G - G* is exact here.
        // dG = c eps^2; eps is factored out so tiny seeds do not underflow.
        let c = 0.5 * (&hess * nalgebra::DVector::from_column_slice(&d)).dot(&nalgebra::DVector::from_column_slice(&d));
        let speed = eps * (-c * (2.0 * eq.g_value.signum() + c * eps * eps)).max(0.0).sqrt();
        let mut seed: Vec<f64> = d.iter().map(|v| -speed * v).collect();
        seed.extend(&x);
        let t_guess = (dist / eps).ln() / lambda + 10.0;
        let back = integrator::integrate_dyn(sys, &seed, 0.0, (-t_guess, 0.0), &opts)?;
        // Cosine of the angle between p and x - x*: the raw product underflows
        // deep in the tail.
        let radial = |_: f64, y: &[f64]| -> f64 {
            let rel: Vec<f64> = (0..n).map(|i| y[n + i] - xstar[i]).collect();
            match (unit(&y[..n]), unit(&rel)) {
                (Some(p), Some(r)) => p.iter().zip(&r).map(|(a, b)| a * b).sum(),
                _ => 0.0,
            }
        };
        let turns = back.find_events(radial, EventKind::ZeroCrossing);
        let Some(&t_c) = turns.iter().filter(|&&t| t < 0.0).max_by(|a, b| a.total_cmp(b)) else {
            eps *= 1e3;
            continue;
        };
        let t_seed = -t_c;
        if t_seed < t_max {
            eps *= (-lambda * (t_max - t_seed + 1.0)).exp();
            continue;
        }
        let half = integrator::integrate_dyn(sys, &seed, 0.0, (t_c, 0.0), &opts)?.shifted(t_seed);
        let other = half.mirrored(0.0, n);
        let mut tr = Trajectory::joined(&other, &half).restricted(-t_max, t_max);
        let h0 = sys.hamiltonian(&tr.eval(0.0));
        tr.measure_drift(sys, 0.5, 100.0 * tol);
        tr.energy_drift = tr.energy_drift.max((h0 - 0.5).abs());
        return Ok(tr);
    }
    Err(Error::Solver("could not seed the stable manifold".into()))
}
