//! Built-in metabelian Carnot group models in exponential coordinates of the
//! second kind.
//!
//! Coordinates are ordered with the `theta` block first (`theta_0`, then the
//! second layer, then the third layer) and the `x` block second.

use crate::error::{Error, Result};
use crate::poly::Poly;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n")]
pub enum ModelId {
    Eng(usize),
    N631,
    G357,
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Eng(n) => write!(f, "Eng({n})"),
            ModelId::N631 => write!(f, "N631"),
            ModelId::G357 => write!(f, "G357"),
        }
    }
}

/// Model family without the Engel rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Eng,
    N631,
    G357,
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eng" | "engel" => Ok(ModelKind::Eng),
            "n631" | "n6" => Ok(ModelKind::N631),
            "g357" => Ok(ModelKind::G357),
            _ => Err(Error::UnknownModel(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub model_id: ModelId,
    pub rank_h: usize,
    pub dim_a: usize,
    pub step: usize,
    /// Coefficient of `d/d theta_k` in the vertical frame field `Y`; entry 0
    /// is the constant 1 in front of `d/d theta_0`.
    pub frame_polys: Vec<Poly>,
    /// Dilation weights, `theta` block then `x` block.
    pub layer_weights: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
}

impl GroupPoint {
    pub fn identity(spec: &GroupSpec) -> Self {
        GroupPoint { theta: vec![0.0; spec.dim_a], x: vec![0.0; spec.rank_h] }
    }

    pub fn coords(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.x).copied().collect()
    }

    pub fn check(&self, spec: &GroupSpec) -> Result<()> {
        if self.theta.len() != spec.dim_a {
            return Err(Error::Dimension { expected: spec.dim_a, got: self.theta.len() });
        }
        if self.x.len() != spec.rank_h {
            return Err(Error::Dimension { expected: spec.rank_h, got: self.x.len() });
        }
        Ok(())
    }

    pub fn distance(&self, other: &GroupPoint) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Tangent vector in the same coordinate layout as [`GroupPoint`].
pub type Tangent = GroupPoint;

fn monomial(n: usize, exps: &[(usize, u32)], c: f64) -> Poly {
    let mut e = vec![0; n];
    for &(i, k) in exps {
        e[i] = k;
    }
    Poly::from_terms(n, [(e, c)])
}

pub fn build_model(kind: ModelKind, n: Option<usize>) -> Result<GroupSpec> {
    let (model_id, polys) = match kind {
        ModelKind::Eng => {
            let n = n.ok_or_else(|| Error::InvalidParam("Eng requires n".into()))?;
            if n < 1 {
                return Err(Error::InvalidParam("Eng requires n >= 1".into()));
            }
            let mut polys = vec![Poly::constant(n, 1.0)];
            polys.extend((0..n).map(|i| Poly::var(n, i, 1.0)));
            let half_sq = (0..n).map(|i| {
                let mut e = vec![0; n];
                e[i] = 2;
                (e, 0.5)
            });
            polys.push(Poly::from_terms(n, half_sq));
            (ModelId::Eng(n), polys)
        }
        ModelKind::N631 => {
            if n.is_some_and(|n| n != 2) {
                return Err(Error::InvalidParam("N631 has rank 2".into()));
            }
            let polys = vec![
                Poly::constant(2, 1.0),
                Poly::var(2, 0, 1.0),
                Poly::var(2, 1, 1.0),
                monomial(2, &[(0, 1), (1, 1)], 1.0),
            ];
            (ModelId::N631, polys)
        }
        ModelKind::G357 => {
            if n.is_some_and(|n| n != 2) {
                return Err(Error::InvalidParam("G357 has rank 2".into()));
            }
            let polys = vec![
                Poly::constant(2, 1.0),
                Poly::var(2, 0, 1.0),
                Poly::var(2, 1, 1.0),
                monomial(2, &[(0, 2)], 0.5),
                monomial(2, &[(1, 2)], 0.5),
            ];
            (ModelId::G357, polys)
        }
    };
    let rank_h = polys[0].nvars();
    let mut layer_weights: Vec<u32> = polys.iter().map(|p| 1 + p.degree()).collect();
    let step = *layer_weights.iter().max().unwrap_or(&1) as usize;
    layer_weights.extend(std::iter::repeat_n(1, rank_h));
    Ok(GroupSpec { model_id, rank_h, dim_a: polys.len(), step, frame_polys: polys, layer_weights })
}

/// Velocity of the horizontal curve with control `u = (u_h, u_{n+1})` at `g`.
pub fn frame_velocity(spec: &GroupSpec, g: &GroupPoint, u: &[f64]) -> Result<Tangent> {
    g.check(spec)?;
    let n = spec.rank_h;
    if u.len() != n + 1 {
        return Err(Error::Dimension { expected: n + 1, got: u.len() });
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam("non-finite control".into()));
    }
    let un = u[n];
    let theta = spec.frame_polys.iter().map(|p| un * p.eval(&g.x)).collect();
    Ok(Tangent { theta, x: u[..n].to_vec() })
}

pub fn dilate(spec: &GroupSpec, g: &GroupPoint, u: f64) -> Result<GroupPoint> {
    g.check(spec)?;
    if u == 0.0 {
        return Err(Error::ZeroDilation);
    }
    let w = &spec.layer_weights;
    let theta = g.theta.iter().zip(w).map(|(t, &k)| t * u.powi(k as i32)).collect();
    let x = g.x.iter().zip(&w[spec.dim_a..]).map(|(t, &k)| t * u.powi(k as i32)).collect();
    Ok(GroupPoint { theta, x })
}

/// Checks `Q^T Q = I` and `det Q = 1` to 1e-12.
pub fn check_rotation(q: &DMatrix<f64>, n: usize) -> Result<()> {
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension { expected: n, got: q.nrows() });
    }
    let dev = (q.transpose() * q - DMatrix::identity(n, n)).amax();
    let det_dev = (q.determinant() - 1.0).abs();
    let worst = dev.max(det_dev);
    if worst > 1e-12 {
        return Err(Error::NotRotation(worst));
    }
    Ok(())
}

pub fn rotation_2d(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

pub(crate) fn apply(q: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (q * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec()
}

/// Isometric action on Engel-type group points: rotates `x` and the first
/// vertical layer, fixing `theta_0` and `theta_{n+1}`.
pub fn rotate_point(spec: &GroupSpec, g: &GroupPoint, q: &DMatrix<f64>) -> Result<GroupPoint> {
    g.check(spec)?;
    let ModelId::Eng(n) = spec.model_id else {
        return Err(Error::InvalidParam(format!("{} has no rotation action", spec.model_id)));
    };
    check_rotation(q, n)?;
    let mut theta = g.theta.clone();
    theta[1..=n].copy_from_slice(&apply(q, &g.theta[1..=n]));
    Ok(GroupPoint { theta, x: apply(q, &g.x) })
}

/// Rotates a reduced phase point `[p, x]`.
pub fn rotate_state(state: &[f64], q: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = state.len() / 2;
    check_rotation(q, n)?;
    let mut out = apply(q, &state[..n]);
    out.extend(apply(q, &state[n..]));
    Ok(out)
}

/// Rotates Engel momentum coefficients `(a_0, a_1..a_n, a_{n+1})`.
pub fn rotate_momentum(spec: &GroupSpec, a: &[f64], q: &DMatrix<f64>) -> Result<Vec<f64>> {
    let ModelId::Eng(n) = spec.model_id else {
        return Err(Error::InvalidParam(format!("{} has no rotation action", spec.model_id)));
    };
    if a.len() != n + 2 {
        return Err(Error::Dimension { expected: n + 2, got: a.len() });
    }
    check_rotation(q, n)?;
    let mut out = a.to_vec();
    out[1..=n].copy_from_slice(&apply(q, &a[1..=n]));
    Ok(out)
}

/// `(x, y, z) -> (Qx, y, z)` on a magnetic point.
pub fn rotate_magnetic(xyz: &[f64], q: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = xyz.len() - 2;
    check_rotation(q, n)?;
    let mut out = apply(q, &xyz[..n]);
    out.extend_from_slice(&xyz[n..]);
    Ok(out)
}

/// The reflection isometry `(theta, x) -> (-theta, x)`.
pub fn reflect(g: &GroupPoint) -> GroupPoint {
    GroupPoint { theta: g.theta.iter().map(|t| -t).collect(), x: g.x.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eng2() -> GroupSpec {
        build_model(ModelKind::Eng, Some(2)).unwrap()
    }

    #[test]
    fn frames_match_models() {
        let s = eng2();
        assert_eq!(s.dim_a, 4);
        assert_eq!(s.layer_weights, vec![1, 2, 2, 3, 1, 1]);
        let g = GroupPoint { theta: vec![0.0; 4], x: vec![1.0, 0.0] };
        let v = frame_velocity(&s, &g, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v.theta, vec![1.0, 1.0, 0.0, 0.5]);

        let n6 = build_model(ModelKind::N631, None).unwrap();
        let g = GroupPoint { theta: vec![0.0; 4], x: vec![1.0, 2.0] };
        let v = frame_velocity(&n6, &g, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v.theta, vec![1.0, 1.0, 2.0, 2.0]);

        let g357 = build_model(ModelKind::G357, None).unwrap();
        assert_eq!(g357.step, 3);
        let g = GroupPoint { theta: vec![0.0; 5], x: vec![2.0, 4.0] };
        let v = frame_velocity(&g357, &g, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v.theta, vec![1.0, 2.0, 4.0, 2.0, 8.0]);
    }

    #[test]
    fn frame_at_origin_is_vertical() {
        let s = eng2();
        let v = frame_velocity(&s, &GroupPoint::identity(&s), &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v.theta, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(v.x, vec![0.0, 0.0]);
    }

    #[test]
    fn bad_inputs() {
        assert!(build_model(ModelKind::Eng, None).is_err());
        assert!(build_model(ModelKind::Eng, Some(0)).is_err());
        assert!("heisenberg".parse::<ModelKind>().is_err());
        let s = eng2();
        let g = GroupPoint::identity(&s);
        assert!(frame_velocity(&s, &g, &[1.0, 0.0]).is_err());
        assert_eq!(dilate(&s, &g, 0.0), Err(Error::ZeroDilation));
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(rotate_point(&s, &g, &skew).is_err());
    }

    #[test]
    fn dilation_weights() {
        let s = eng2();
        let g = GroupPoint { theta: vec![1.0; 4], x: vec![1.0; 2] };
        let d = dilate(&s, &g, 2.0).unwrap();
        assert_eq!(d.theta, vec![2.0, 4.0, 4.0, 8.0]);
        assert_eq!(d.x, vec![2.0, 2.0]);
        assert_eq!(dilate(&s, &g, 1.0).unwrap(), g);
    }

    #[test]
    fn quarter_turn() {
        let s = eng2();
        let g = GroupPoint { theta: vec![5.0, 1.0, 0.0, 3.0], x: vec![1.0, 0.0] };
        let r = rotate_point(&s, &g, &rotation_2d(std::f64::consts::FRAC_PI_2)).unwrap();
        for (a, b) in r.theta.iter().zip([5.0, 0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((r.x[0]).abs() < 1e-15 && (r.x[1] - 1.0).abs() < 1e-15);
        let id = rotate_point(&s, &g, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(id, g);
    }

    #[test]
    fn reflection_is_involution() {
        let g = GroupPoint { theta: vec![1.0, -2.0], x: vec![3.0] };
        assert_eq!(reflect(&reflect(&g)), g);
    }

    proptest! {
        #[test]
        fn frame_polys_homogeneous(l in -3.0f64..3.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            for kind in [ModelKind::Eng, ModelKind::N631, ModelKind::G357] {
                let s = build_model(kind, Some(2)).unwrap();
                for (p, &w) in s.frame_polys.iter().zip(&s.layer_weights) {
                    prop_assert_eq!(p.homogeneous_degree(), Some(w - 1));
                    let lhs = p.eval(&[l * a, l * b]);
                    let rhs = l.powi(w as i32 - 1) * p.eval(&[a, b]);
                    prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
                }
            }
        }

        #[test]
        fn dilation_composes(u in 0.1f64..3.0, v in -3.0f64..-0.1, t0 in -2.0f64..2.0, x0 in -2.0f64..2.0) {
            let s = eng2();
            let g = GroupPoint { theta: vec![t0, 1.0, -t0, 0.5], x: vec![x0, 1.5] };
            let a = dilate(&s, &dilate(&s, &g, u).unwrap(), v).unwrap();
            let b = dilate(&s, &g, u * v).unwrap();
            prop_assert!(a.distance(&b) < 1e-12 * (1.0 + b.coords().iter().map(|c| c.abs()).sum::<f64>()));
        }

        #[test]
        fn rotation_preserves_control_norm(angle in -3.2f64..3.2, u1 in -1.0f64..1.0, u2 in -1.0f64..1.0, u3 in -1.0f64..1.0) {
            let q = rotation_2d(angle);
            let uh = apply(&q, &[u1, u2]);
            let before = u1 * u1 + u2 * u2 + u3 * u3;
            let after = uh[0] * uh[0] + uh[1] * uh[1] + u3 * u3;
            prop_assert!((before - after).abs() < 1e-14);
        }

        #[test]
        fn frame_velocity_reproduces_polys(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let s = build_model(ModelKind::G357, None).unwrap();
            let g = GroupPoint { theta: vec![0.0; 5], x: vec![a, b] };
            let v = frame_velocity(&s, &g, &[0.0, 0.0, 1.0]).unwrap();
            for (vt, p) in v.theta.iter().zip(&s.frame_polys) {
                prop_assert_eq!(*vt, p.eval(&[a, b]));
            }
        }
    }
}
