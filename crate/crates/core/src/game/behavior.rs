use crate::error::{Error, Result};
use crate::scalar::Real;

/// Discounted empirical frequency of joint play, `z_{n+1} = z_n + eps (e_a - z_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBehavior<T> {
    z: Vec<T>,
    step: T,
}

impl<T: Real> GlobalBehavior<T> {
    /// `z_1 = e_{first}` over `num_profiles` joint profiles.
    pub fn new(num_profiles: usize, first: usize, step: T) -> Result<Self> {
        if !(step > T::zero() && step < T::one()) {
            return Err(Error::input("step size must lie in (0, 1)"));
        }
        if first >= num_profiles {
            return Err(Error::input(format!(
                "profile index {} out of range 0..{}",
                first, num_profiles
            )));
        }
        let mut z = vec![T::zero(); num_profiles];
        z[first] = T::one();
        Ok(Self { z, step })
    }

    /// Wraps an existing distribution (checked to lie on the simplex).
    pub fn from_distribution(z: Vec<T>, step: T) -> Result<Self> {
        if !(step > T::zero() && step < T::one()) {
            return Err(Error::input("step size must lie in (0, 1)"));
        }
        let tol = T::lit(super::TOL);
        if z.iter().any(|&p| !(p >= T::zero())) {
            return Err(Error::input("distribution entries must be nonnegative"));
        }
        let total: T = z.iter().copied().sum();
        if (total - T::one()).abs() > tol {
            return Err(Error::input(format!("distribution sums to {}", total)));
        }
        Ok(Self { z, step })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.z
    }

    pub fn step(&self) -> T {
        self.step
    }

    /// Returns the updated behavior after observing `profile`.
    pub fn update(&self, profile: usize) -> Result<Self> {
        let mut next = self.clone();
        next.record(profile)?;
        Ok(next)
    }

    /// In-place form of [`update`](Self::update).
    pub fn record(&mut self, profile: usize) -> Result<()> {
        if profile >= self.z.len() {
            return Err(Error::input(format!(
                "profile index {} out of range 0..{}",
                profile,
                self.z.len()
            )));
        }
        let keep = T::one() - self.step;
        for p in self.z.iter_mut() {
            *p *= keep;
        }
        self.z[profile] += self.step;
        Ok(())
    }

    /// Rescales to unit mass, removing accumulated rounding drift.
    pub fn renormalize(&mut self) {
        let total: T = self.z.iter().copied().sum();
        if total > T::zero() {
            for p in self.z.iter_mut() {
                *p /= total;
            }
        }
    }
}
