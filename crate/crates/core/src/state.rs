//! Small fixed-capacity state vectors and 2D spatial vectors.
//!
//! Every model in this crate has at most four conserved components
//! (2D compressible Euler: density, two momenta, total energy), so nodal
//! states are stored inline as `[f64; 4]` with an explicit logical length.
//! This keeps solution fields in one contiguous allocation and makes states
//! `Copy`, which the edge-based kernels rely on.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

pub const MAX_COMPONENTS: usize = 4;

/// A conserved-variable state with `m <= 4` components.
///
/// Unused tail components are kept at exactly `0.0` so that arithmetic on
/// whole states never mixes lengths silently; mixed-length operations panic
/// in debug builds via the length assertion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    m: u8,
    c: [f64; MAX_COMPONENTS],
}

impl State {
    #[inline]
    pub fn zeros(m: usize) -> Self {
        debug_assert!(m >= 1 && m <= MAX_COMPONENTS);
        State {
            m: m as u8,
            c: [0.0; MAX_COMPONENTS],
        }
    }

    /// A single-component (scalar model) state.
    #[inline]
    pub fn scalar(value: f64) -> Self {
        let mut s = State::zeros(1);
        s.c[0] = value;
        s
    }

    #[inline]
    pub fn from_slice(values: &[f64]) -> Self {
        let mut s = State::zeros(values.len());
        s.c[..values.len()].copy_from_slice(values);
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.m as usize]
    }

    /// Sum over components of `self[c] * other[c]`.
    #[inline]
    pub fn dot(&self, other: &State) -> f64 {
        debug_assert_eq!(self.m, other.m);
        let mut acc = 0.0;
        for k in 0..self.m as usize {
            acc += self.c[k] * other.c[k];
        }
        acc
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn abs_max(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Component-wise minimum of two states.
    #[inline]
    pub fn min(&self, other: &State) -> State {
        debug_assert_eq!(self.m, other.m);
        let mut out = *self;
        for k in 0..self.m as usize {
            out.c[k] = out.c[k].min(other.c[k]);
        }
        out
    }

    /// Component-wise maximum of two states.
    #[inline]
    pub fn max(&self, other: &State) -> State {
        debug_assert_eq!(self.m, other.m);
        let mut out = *self;
        for k in 0..self.m as usize {
            out.c[k] = out.c[k].max(other.c[k]);
        }
        out
    }

    /// `self + t * (other - self)`; convex for `t` in `[0, 1]`.
    #[inline]
    pub fn lerp(&self, other: &State, t: f64) -> State {
        *self + (*other - *self) * t
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.as_slice().iter().copied()
    }
}

impl Index<usize> for State {
    type Output = f64;
    #[inline]
    fn index(&self, k: usize) -> &f64 {
        debug_assert!(k < self.m as usize);
        &self.c[k]
    }
}

impl IndexMut<usize> for State {
    #[inline]
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        debug_assert!(k < self.m as usize);
        &mut self.c[k]
    }
}

impl Add for State {
    type Output = State;
    #[inline]
    fn add(mut self, rhs: State) -> State {
        debug_assert_eq!(self.m, rhs.m);
        for k in 0..self.m as usize {
            self.c[k] += rhs.c[k];
        }
        self
    }
}

impl Sub for State {
    type Output = State;
    #[inline]
    fn sub(mut self, rhs: State) -> State {
        debug_assert_eq!(self.m, rhs.m);
        for k in 0..self.m as usize {
            self.c[k] -= rhs.c[k];
        }
        self
    }
}

impl AddAssign for State {
    #[inline]
    fn add_assign(&mut self, rhs: State) {
        debug_assert_eq!(self.m, rhs.m);
        for k in 0..self.m as usize {
            self.c[k] += rhs.c[k];
        }
    }
}

impl SubAssign for State {
    #[inline]
    fn sub_assign(&mut self, rhs: State) {
        debug_assert_eq!(self.m, rhs.m);
        for k in 0..self.m as usize {
            self.c[k] -= rhs.c[k];
        }
    }
}

impl Mul<f64> for State {
    type Output = State;
    #[inline]
    fn mul(mut self, s: f64) -> State {
        for k in 0..self.m as usize {
            self.c[k] *= s;
        }
        self
    }
}

impl Neg for State {
    type Output = State;
    #[inline]
    fn neg(self) -> State {
        self * -1.0
    }
}

/// A point or vector in physical space; 1D uses the first component only.
pub type SpatialVec = [f64; 2];

#[inline]
pub fn vdot(a: SpatialVec, b: SpatialVec) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn vnorm(a: SpatialVec) -> f64 {
    vdot(a, a).sqrt()
}

#[inline]
pub fn vscale(a: SpatialVec, s: f64) -> SpatialVec {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn vsub(a: SpatialVec, b: SpatialVec) -> SpatialVec {
    [a[0] - b[0], a[1] - b[1]]
}
