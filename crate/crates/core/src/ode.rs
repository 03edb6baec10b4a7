//! Fixed-step explicit integrators over flat state vectors.

use alloc::vec::Vec;
use core::ops::{Add, Mul};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

impl core::str::FromStr for Integrator {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Integrator> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            _ => Err(crate::error::invalid(alloc::format!("unknown integrator {s:?}"))),
        }
    }
}

fn axpy<T>(y: &[T], a: f64, x: &[T]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    y.iter().zip(x).map(|(&yi, &xi)| yi + xi * a).collect()
}

/// Advance `y` by one step of size `dt`. `stage` receives the stage index
/// (0 for Euler, 0..4 for RK4) so callers can key per-stage randomness.
pub fn step<T, F>(integrator: Integrator, y: &[T], dt: f64, mut f: F) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    F: FnMut(usize, &[T]) -> Result<Vec<T>>,
{
    match integrator {
        Integrator::Euler => {
            let k1 = f(0, y)?;
            Ok(axpy(y, dt, &k1))
        }
        Integrator::Rk4 => {
            let k1 = f(0, y)?;
            let k2 = f(1, &axpy(y, dt / 2.0, &k1))?;
            let k3 = f(2, &axpy(y, dt / 2.0, &k2))?;
            let k4 = f(3, &axpy(y, dt, &k3))?;
            Ok(y.iter()
                .enumerate()
                .map(|(i, &yi)| yi + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
                .collect())
        }
    }
}
