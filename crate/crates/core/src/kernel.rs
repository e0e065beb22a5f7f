//! Wendland C2 smoothing kernel in cut-off (support radius) form.
//!
//! `W(r, h) = sigma_d / h^d * (1 - q)^4 (1 + 4q)` with `q = r / h`, exactly zero
//! for `q >= 1`. Besides the kernel and its radial derivative this module
//! carries the one-dimensional normalization `W1 = A W` and the closed-form
//! integrals of `W1` that define the smoothed volume fraction of a domain.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Human-readable kernel description written into run metadata.
pub const KERNEL_FORM: &str =
    "wendland-c2 W=(sigma_d/h^d)(1-q)^4(1+4q), q=r/h, support radius h, sigma_1=3/2, sigma_2=7/pi";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn as_usize(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }

    /// Normalization constant making the d-dimensional integral of the kernel one.
    fn sigma(self) -> f64 {
        match self {
            Dimension::One => 1.5,
            Dimension::Two => 7.0 / PI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    dim: Dimension,
    cutoff: f64,
    inv_h: f64,
    value_scale: f64,
    derivative_scale: f64,
}

impl KernelSpec {
    pub fn new(dim: Dimension, cutoff: f64) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(invalid(format!("kernel cut-off must be finite and positive, got {cutoff}")));
        }
        let d = dim.as_usize() as i32;
        let value_scale = dim.sigma() / cutoff.powi(d);
        Ok(Self {
            dim,
            cutoff,
            inv_h: 1.0 / cutoff,
            value_scale,
            derivative_scale: -20.0 * value_scale / cutoff,
        })
    }

    pub fn two_d(cutoff: f64) -> Result<Self> {
        Self::new(Dimension::Two, cutoff)
    }

    pub fn dimension(&self) -> Dimension {
        self.dim
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Kernel value. `r` is expected to be a finite, non-negative distance.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        let q = r * self.inv_h;
        if q >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - q;
        let u2 = u * u;
        self.value_scale * u2 * u2 * (1.0 + 4.0 * q)
    }

    /// Radial derivative `dW/dr = -20 sigma_d / h^(d+1) * q (1 - q)^3`.
    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        let q = r * self.inv_h;
        if q >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - q;
        self.derivative_scale * q * u * u * u
    }

    pub fn try_value(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.value(r))
    }

    pub fn try_derivative(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.derivative(r))
    }

    /// `A` such that the integral of `A W(|r|)` over `[-h, h]` is one.
    pub fn one_d_normalization(&self) -> f64 {
        // \int_{-h}^{h} W dr = (sigma_d / h^d) * h * 2/3
        1.5 / (self.value_scale * self.cutoff)
    }

    /// One-dimensionally normalized kernel `W1 = A W`; independent of `d`.
    #[inline]
    pub fn w1(&self, r: f64) -> f64 {
        let q = r * self.inv_h;
        if q >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - q;
        let u2 = u * u;
        1.5 * self.inv_h * u2 * u2 * (1.0 + 4.0 * q)
    }

    /// Radial derivative of [`KernelSpec::w1`].
    #[inline]
    pub fn w1_derivative(&self, r: f64) -> f64 {
        let q = r * self.inv_h;
        if q >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - q;
        -30.0 * self.inv_h * self.inv_h * q * u * u * u
    }

    /// `\int_{-phi}^{h} W1(max(r, 0)) dr`.
    ///
    /// Inside the domain (`phi <= 0`) the result lies in `[0, 1/2]`. For an
    /// escaped point (`phi > 0`) the clamped integrand contributes `W1(0) * phi`
    /// beyond one half, which is what produces a constant restoring force
    /// outside the domain.
    pub fn boundary_integral(&self, phi: f64) -> f64 {
        let depth = -phi;
        if depth >= self.cutoff {
            return 0.0;
        }
        if depth <= 0.0 {
            return 0.5 + self.w1(0.0) * phi;
        }
        let u = 1.0 - depth * self.inv_h;
        let u5 = u * u * u * u * u;
        1.5 * u5 - u5 * u
    }

    /// Smoothed-analytical volume fraction `P(-phi) = 1 - 2 * boundary_integral(phi)`,
    /// clamped to `[0, 1]` for escaped points.
    pub fn smoothed_fraction(&self, phi: f64) -> f64 {
        (1.0 - 2.0 * self.boundary_integral(phi)).clamp(0.0, 1.0)
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("distance must be finite and non-negative, got {r}")))
    }
}
