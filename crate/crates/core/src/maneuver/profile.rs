use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::laplacian::ComplexScalar;

/// Values a profile can interpolate: reals and complex numbers.
pub trait Linear:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Linear for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Linear for ComplexScalar {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// `u²(3 - 2u)` and its derivative; flat at both ends.
pub fn smoothstep(u: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 1.0);
    (u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u))
}

/// Normalised position inside `[start, end]` and `du/dt`.
fn unit(t: f64, start: f64, end: f64) -> (f64, f64) {
    let span = end - start;
    let u = (t - start) / span;
    if (0.0..=1.0).contains(&u) {
        (u, 1.0 / span)
    } else {
        (u.clamp(0.0, 1.0), 0.0)
    }
}

/// Scalar time profile defined over one schedule piece. Ramps and smoothsteps
/// run from the piece start to its end; sinusoids use time since piece start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile<V> {
    Constant(V),
    Ramp {
        from: V,
        to: V,
    },
    Smoothstep {
        from: V,
        to: V,
    },
    Sinusoid {
        offset: V,
        amplitude: V,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl<V: Linear> Profile<V> {
    /// Value and time derivative at `t` for a piece spanning `[start, end]`.
    pub fn eval(&self, t: f64, start: f64, end: f64) -> (V, V) {
        match *self {
            Profile::Constant(v) => (v, V::default()),
            Profile::Ramp { from, to } => {
                let (u, du) = unit(t, start, end);
                (from + (to - from) * u, (to - from) * du)
            }
            Profile::Smoothstep { from, to } => {
                let (u, du) = unit(t, start, end);
                let (s, ds) = smoothstep(u);
                (from + (to - from) * s, (to - from) * (ds * du))
            }
            Profile::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                let arg = omega * (t - start) + phase;
                (
                    offset + amplitude * arg.sin(),
                    amplitude * (omega * arg.cos()),
                )
            }
        }
    }

    pub fn value(&self, t: f64, start: f64, end: f64) -> V {
        self.eval(t, start, end).0
    }

    /// Ramps and smoothsteps need a finite interval.
    pub fn needs_finite_interval(&self) -> bool {
        matches!(self, Profile::Ramp { .. } | Profile::Smoothstep { .. })
    }
}

/// Vector-valued profile for the leader shape parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeProfile<V> {
    Hold(Vec<V>),
    Ramp { from: Vec<V>, to: Vec<V> },
    Smoothstep { from: Vec<V>, to: Vec<V> },
}

impl<V: Linear> ShapeProfile<V> {
    pub fn len(&self) -> usize {
        match self {
            ShapeProfile::Hold(v) => v.len(),
            ShapeProfile::Ramp { from, .. } | ShapeProfile::Smoothstep { from, .. } => from.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_consistent(&self) -> bool {
        match self {
            ShapeProfile::Hold(_) => true,
            ShapeProfile::Ramp { from, to } | ShapeProfile::Smoothstep { from, to } => {
                from.len() == to.len()
            }
        }
    }

    pub fn eval(&self, t: f64, start: f64, end: f64) -> (Vec<V>, Vec<V>) {
        let blend = |from: &[V], to: &[V], s: f64, ds: f64| {
            from.iter()
                .zip(to)
                .map(|(&a, &b)| (a + (b - a) * s, (b - a) * ds))
                .unzip()
        };
        match self {
            ShapeProfile::Hold(v) => (v.clone(), vec![V::default(); v.len()]),
            ShapeProfile::Ramp { from, to } => {
                let (u, du) = unit(t, start, end);
                blend(from, to, u, du)
            }
            ShapeProfile::Smoothstep { from, to } => {
                let (u, du) = unit(t, start, end);
                let (s, ds) = smoothstep(u);
                blend(from, to, s, ds * du)
            }
        }
    }

    pub fn needs_finite_interval(&self) -> bool {
        !matches!(self, ShapeProfile::Hold(_))
    }
}
