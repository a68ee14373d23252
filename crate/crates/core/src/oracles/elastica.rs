//! Curvature law of planar projections: with zero angular momentum the
//! curve `(s, y)`, `s` the signed distance along the invariant line from the
//! critical point of `F`, has curvature `b (e^T Hess F e) s`.

use crate::error::{Error, Result};
use crate::reconstruction::{fd4, MagneticGeodesic};
use crate::reduced::ReducedSystem;
use nalgebra::DVector;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElasticaReport {
    /// `b e^T Hess F e`; equals `a_{n+1}` for Engel-type models with `b = 1`.
    pub slope: f64,
    /// Line direction `e`.
    pub direction: Vec<f64>,
    /// `max |kappa - slope s|` with `kappa` from the Hamiltonian vector field.
    pub residual: f64,
    /// `max |kappa_fd - kappa|` with `kappa_fd` from differences of the lifted curve.
    pub fd_residual: f64,
    pub angular_momentum: f64,
}

/// Checks `kappa(t) = slope s(t)` on `grid`. `F` must be quadratic with a
/// nondegenerate critical point.
pub fn elastica_check(sys: &ReducedSystem, c: &MagneticGeodesic, grid: &[f64]) -> Result<ElasticaReport> {
    let n = sys.n();
    if sys.f.degree() != 2 {
        return Err(Error::InvalidParam("the curvature law needs quadratic F".into()));
    }
    let hess = sys.f.gradient().iter().map(|g| g.gradient()).collect::<Vec<_>>();
    let hm = nalgebra::DMatrix::from_fn(n, n, |i, j| hess[i][j].constant_term());
    let g0: Vec<f64> = sys.grad_f_at(&vec![0.0; n]);
    let xstar = hm
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(&g0))
        .ok_or(Error::NoNormalForm)?
        .map(|v| -v);

    // Direction of the invariant line from the first sample.
    let y0 = c.state_at(grid.first().copied().unwrap_or(0.0));
    let rel: Vec<f64> = (0..n).map(|i| y0[n + i] - xstar[i]).collect();
    let base = if rel.iter().map(|v| v * v).sum::<f64>() > 1e-20 { rel } else { y0[..n].to_vec() };
    let bn = base.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bn == 0.0 {
        return Err(Error::InvalidParam("orbit rests at the critical point".into()));
    }
    let e: Vec<f64> = base.iter().map(|v| v / bn).collect();
    let slope = sys.pencil.b * (0..n).map(|i| (0..n).map(|j| e[i] * hm[(i, j)] * e[j]).sum::<f64>()).sum::<f64>();

    let mut ang: f64 = 0.0;
    let mut residual: f64 = 0.0;
    let mut fd_residual: f64 = 0.0;
    let velocity = |t: f64| {
        let y = c.state_at(t);
        let pe: f64 = (0..n).map(|i| y[i] * e[i]).sum();
        vec![pe, sys.g_at(&y[n..])]
    };
    for &t in grid {
        let y = c.state_at(t);
        let (p, x) = y.split_at(n);
        let r: Vec<f64> = (0..n).map(|i| x[i] - xstar[i]).collect();
        // Component of p and x - x* off the line e.
        let s: f64 = r.iter().zip(&e).map(|(a, b)| a * b).sum();
        let pe: f64 = p.iter().zip(&e).map(|(a, b)| a * b).sum();
        let off: f64 = (0..n).map(|i| (r[i] - s * e[i]).powi(2) + (p[i] - pe * e[i]).powi(2)).sum::<f64>().sqrt();
        ang = ang.max(off);
        let g = sys.g_at(x);
        let dg: f64 = sys.grad_g_at(x).iter().zip(&e).map(|(a, b)| a * b).sum();
        // eta' = (pe, G), eta'' = (-G dG, dG pe): kappa = eta' x eta''.
        let kappa = dg * (pe * pe + g * g);
        residual = residual.max((kappa - slope * s).abs());
        let acc = fd4(velocity, t, 1e-3);
        let kfd = pe * acc[1] - g * acc[0];
        fd_residual = fd_residual.max((kfd - kappa).abs());
    }
    if ang > 1e-9 {
        return Err(Error::InvalidParam(format!("orbit leaves its line (angular momentum {ang:.3e})")));
    }
    Ok(ElasticaReport { slope, direction: e, residual, fd_residual, angular_momentum: ang })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelKind};
    use crate::reduced::{equilibria, integrate_homoclinic, reduced_system, Momentum, Pencil};
    use std::sync::Arc;

    #[test]
    fn euler_soliton() {
        let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
        let sys = reduced_system(&spec, &Momentum::new(vec![1.0, 0.0, 0.0, -4.0]), Pencil::default()).unwrap();
        let eq = equilibria(&sys).remove(0);
        let tr = integrate_homoclinic(&sys, &eq, &[0.0, 0.0, 1.0, 0.0], 10.0, 1e-12).unwrap();
        let c = MagneticGeodesic::from_reduced(&sys, Arc::new(tr), 0.0, [0.0, 0.0]);
        let grid: Vec<f64> = (0..=180).map(|k| -9.0 + 0.1 * k as f64).collect();
        let rep = elastica_check(&sys, &c, &grid).unwrap();
        assert!((rep.slope + 4.0).abs() < 1e-12);
        assert!(rep.residual < 1e-6);
        assert!(rep.fd_residual < 1e-4);
    }

    #[test]
    fn off_line_rejected() {
        let spec = build_model(ModelKind::Eng, Some(2)).unwrap();
        let sys = reduced_system(&spec, &Momentum::new(vec![1.0, 0.0, 0.0, -4.0]), Pencil::default()).unwrap();
        let s = sys.on_shell(&[0.3, 0.5], &[0.4, -0.1]).unwrap();
        let tr = sys.integrate(&s, (0.0, 2.0), 1e-10).unwrap();
        let c = MagneticGeodesic::from_reduced(&sys, Arc::new(tr), 0.0, [0.0, 0.0]);
        assert!(elastica_check(&sys, &c, &[0.0, 1.0]).is_err());
    }
}
