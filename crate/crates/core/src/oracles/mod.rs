//! Independent checks: boundary-value shooting, direct transcription upper
//! bounds, the elastica curvature law and the sequence experiment.

mod elastica;
mod sequence;
mod shooting;
mod transcription;

pub use elastica::{elastica_check, ElasticaReport};
pub use sequence::{sequence_experiment, SequenceOptions, SequenceRow};
pub use shooting::{shoot_connect, ShootGuess, ShootOptions, ShootOutcome, ShootSolution, ShootTrace};
pub use transcription::{brute_force_upper_bound, BruteForceOptions, BruteForceResult, TranscriptionPath};

use crate::error::{Error, Result};
use crate::poly::Poly;

/// Magnetic space `R^{n+2}_F`: points are `(x, y, z)`.
#[derive(Clone, Debug)]
pub struct MagneticSpace {
    pub f: Poly,
}

impl MagneticSpace {
    pub fn new(f: Poly) -> Self {
        MagneticSpace { f }
    }

    pub fn n(&self) -> usize {
        self.f.nvars()
    }

    pub(crate) fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n() + 2 {
            return Err(Error::Dimension { expected: self.n() + 2, got: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("non-finite endpoint".into()));
        }
        Ok(())
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
