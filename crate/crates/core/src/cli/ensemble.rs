//! Seeded random states and test functions for the audits.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FbeError, Result};
use crate::grid::{Field1D, State};
use crate::wspace::control_a;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::grid::Grid1D;

/// Coefficients of one smooth random state on `(-1, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDraw {
    pub r_modes: [f64; 3],
    pub v_modes: [f64; 3],
    pub v_phases: [f64; 3],
    pub v_drift: f64,
}

impl StateDraw {
    pub fn sample(rng: &mut ChaCha8Rng, amplitude: f64) -> StateDraw {
        let mut u = || rng.gen_range(-1.0..1.0);
        StateDraw {
            r_modes: [amplitude * u(), amplitude * u(), amplitude * u()],
            v_modes: [0.5 * amplitude * u(), 0.5 * amplitude * u(), 0.5 * amplitude * u()],
            v_phases: [PI * u(), PI * u(), PI * u()],
            v_drift: amplitude * u(),
        }
    }

    pub fn r(&self, x: f64) -> f64 {
        let m: f64 = self.r_modes.iter().enumerate().map(|(i, a)| a * ((i + 1) as f64 * 0.5 * PI * x).sin()).sum();
        (1.0 - x * x) * (1.0 + m)
    }

    pub fn v(&self, x: f64) -> f64 {
        let m: f64 = self
            .v_modes
            .iter()
            .zip(&self.v_phases)
            .enumerate()
            .map(|(i, (a, p))| a * ((i + 1) as f64 * 0.5 * PI * x + p).sin())
            .sum();
        self.v_drift * x + m
    }

    pub fn state(&self, kappa: f64, cells: usize) -> Result<State> {
        State::from_fns(kappa, -1.0, 1.0, cells, |x| self.r(x), |x| self.v(x))
    }
}

/// `count` states with `A ≤ a_max`, redrawing members that exceed the bound.
pub fn state_ensemble(
    rng: &mut ChaCha8Rng,
    count: usize,
    kappa: f64,
    cells: usize,
    amplitude: f64,
    a_max: f64,
) -> Result<Vec<(StateDraw, State)>> {
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 20 * count + 100 {
            return Err(FbeError::Config(format!(
                "could not draw {count} states with A ≤ {a_max} at amplitude {amplitude}"
            )));
        }
        let d = StateDraw::sample(rng, amplitude);
        let s = d.state(kappa, cells)?;
        if control_a(&s, None)? <= a_max {
            out.push((d, s));
        }
    }
    Ok(out)
}

/// A random trigonometric test function `Σ a_m cos(m π x / 2 + φ_m)`, `m ≤ 4`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigDraw {
    pub amps: [f64; 4],
    pub phases: [f64; 4],
}

impl TrigDraw {
    pub fn sample(rng: &mut ChaCha8Rng) -> TrigDraw {
        let mut u = || rng.gen_range(-1.0..1.0);
        TrigDraw { amps: [u(), u(), u(), u()], phases: [PI * u(), PI * u(), PI * u(), PI * u()] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amps
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(i, (a, p))| a * ((i + 1) as f64 * 0.5 * PI * x + p).cos())
            .sum()
    }

    pub fn field(&self, grid: &Arc<Grid1D>) -> Result<Field1D> {
        Field1D::from_fn(grid.clone(), |x| self.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn seeded_ensembles_repeat() {
        let a = state_ensemble(&mut ChaCha8Rng::seed_from_u64(5), 4, 1.0, 128, 0.05, 0.1).unwrap();
        let b = state_ensemble(&mut ChaCha8Rng::seed_from_u64(5), 4, 1.0, 128, 0.05, 0.1).unwrap();
        for ((da, sa), (db, sb)) in a.iter().zip(&b) {
            assert_eq!(da, db);
            assert_eq!(sa.r.values(), sb.r.values());
        }
    }
}
