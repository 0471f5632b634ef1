//! Real and complex scalar fields behind one trait.
//!
//! Every algorithm in the crate is generic over [`Scalar`]; the field tag of
//! a tensor is `S::FIELD`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(format!("unknown field {other:?}, expected real or complex")),
        }
    }
}

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    const FIELD: Field;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(r: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn abs(self) -> f64;
    fn conj(self) -> Self;

    fn scale(self, r: f64) -> Self {
        self * Self::from_real(r)
    }

    /// `self / |self|`, or zero at zero.
    fn phase(self) -> Self {
        let a = self.abs();
        if a == 0.0 {
            Self::zero()
        } else {
            self.scale(1.0 / a)
        }
    }

    /// Uniform draw from the discrete unimodular ensemble: ±1 for the reals,
    /// the fourth roots of unity for the complex field.
    fn sample_sign<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Standard Gaussian; complex draws have `E|z|^2 = 1`.
    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Borrow a slice as reals when the field is real.
    fn as_real_slice(xs: &[Self]) -> Option<&[f64]>;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(r: f64) -> Self {
        r
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn conj(self) -> Self {
        self
    }
    fn scale(self, r: f64) -> Self {
        self * r
    }
    fn phase(self) -> Self {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
    fn sample_sign<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn as_real_slice(xs: &[Self]) -> Option<&[f64]> {
        Some(xs)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(r: f64) -> Self {
        Complex64::new(r, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn scale(self, r: f64) -> Self {
        Complex64::new(self.re * r, self.im * r)
    }
    fn sample_sign<R: Rng + ?Sized>(rng: &mut R) -> Self {
        match rng.random_range(0..4u8) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
    }
    fn as_real_slice(_: &[Self]) -> Option<&[f64]> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn phase_of_zero_is_zero() {
        assert_eq!(Scalar::phase(0.0f64), 0.0);
        assert_eq!(
            Scalar::phase(Complex64::new(0.0, 0.0)),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(Scalar::phase(-3.0f64), -1.0);
        let z = Scalar::phase(Complex64::new(3.0, 4.0));
        assert!((z - Complex64::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn complex_signs_are_unimodular() {
        let mut rng = rng_from_seed(3);
        for _ in 0..64 {
            let z = Complex64::sample_sign(&mut rng);
            assert_eq!(z.norm(), 1.0);
            assert!(z.re == 0.0 || z.im == 0.0);
        }
    }
}
