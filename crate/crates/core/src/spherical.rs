//! Spherical functions `psi_lambda` on the radial slice, their holomorphic
//! extension in the space variable, and the growth envelopes they obey.
//!
//! Rooted factors use the normalized Jacobi function in the geodesic radius.
//! Circle factors use the characters `e^{i lambda theta}`; the reflection
//! `lambda -> -lambda` then corresponds to `theta -> -theta`, so quantities
//! built from even profiles are invariant under it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Factor, SpaceDescriptor, SpectralPoint};
use crate::special::{as_degree, jacobi_function, jacobi_function_jet, jet_to_derivatives};

pub const MAX_DERIVATIVE: u32 = 8;

/// Radial coordinates, one per factor. Imaginary parts realize the
/// holomorphic extension `exp(X + iY) o`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPoint(pub Vec<Complex64>);

impl RadialPoint {
    pub fn real(coords: &[f64]) -> Self {
        RadialPoint(coords.iter().map(|&t| Complex64::new(t, 0.0)).collect())
    }

    pub fn origin(rank: usize) -> Self {
        RadialPoint(vec![Complex64::new(0.0, 0.0); rank])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.re * z.re).sum::<f64>().sqrt()
    }
}

fn check_arity(space: &SpaceDescriptor, lambda: &SpectralPoint, x: &RadialPoint) -> Result<()> {
    for got in [lambda.0.len(), x.0.len()] {
        if got != space.rank() {
            return Err(Error::Arity { expected: space.rank(), got });
        }
    }
    Ok(())
}

fn check_domain(index: usize, factor: &Factor, z: Complex64, t: Complex64) -> Result<()> {
    let limit = if t.im == 0.0 {
        // real points: the whole slice for polynomials, short of the
        // antipodal singularity otherwise
        if factor.is_rooted() && as_degree(z).is_none() && factor.diameter >= std::f64::consts::PI {
            let lim = factor.diameter;
            if t.re.abs() >= lim {
                return Err(Error::Domain { factor: index, re_t: t.re.abs(), limit: lim });
            }
            return Ok(());
        }
        factor.diameter
    } else {
        factor.omega_radius
    };
    let ok = if t.im == 0.0 { t.re.abs() <= limit } else { t.re.abs() < limit };
    if !ok || !t.re.is_finite() || !t.im.is_finite() {
        return Err(Error::Domain { factor: index, re_t: t.re.abs(), limit });
    }
    Ok(())
}

/// One factor of `psi_lambda`.
pub fn factor_value(factor: &Factor, z: Complex64, t: Complex64) -> Result<Complex64> {
    match factor.jacobi() {
        Some((a, b)) => jacobi_function(a, b, z, t),
        None => Ok((Complex64::i() * z * t).exp()),
    }
}

/// Taylor jet of one factor of `psi_lambda` at `t`.
pub fn factor_jet(factor: &Factor, z: Complex64, t: Complex64, order: usize) -> Result<Vec<Complex64>> {
    match factor.jacobi() {
        Some((a, b)) => jacobi_function_jet(a, b, z, t, order),
        None => {
            let iz = Complex64::i() * z;
            let base = (iz * t).exp();
            let mut fact = 1.0;
            Ok((0..=order)
                .map(|k| {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    base * iz.powu(k as u32) / fact
                })
                .collect())
        }
    }
}

/// `psi_lambda(x)`, normalized by `psi_lambda(o) = 1`.
pub fn spherical_at(space: &SpaceDescriptor, lambda: &SpectralPoint, x: &RadialPoint) -> Result<Complex64> {
    check_arity(space, lambda, x)?;
    let mut prod = Complex64::new(1.0, 0.0);
    for (i, ((f, &z), &t)) in space.factors().iter().zip(&lambda.0).zip(&x.0).enumerate() {
        check_domain(i, f, z, t)?;
        prod *= factor_value(f, z, t)?;
    }
    Ok(prod)
}

/// `lambda*`: the parameter with `psi_{lambda*} = psi_lambda^vee`.
/// Rooted factors are self-dual; circle characters are conjugated.
pub fn dual_point(space: &SpaceDescriptor, lambda: &SpectralPoint) -> SpectralPoint {
    SpectralPoint(
        space
            .factors()
            .iter()
            .zip(&lambda.0)
            .map(|(f, &z)| if f.is_rooted() { z } else { -z })
            .collect(),
    )
}

/// Mixed radial derivative `prod_j (d/dt_j)^{orders_j} psi_lambda` at `x`.
pub fn radial_derivative(
    space: &SpaceDescriptor,
    lambda: &SpectralPoint,
    x: &RadialPoint,
    orders: &[u32],
) -> Result<Complex64> {
    check_arity(space, lambda, x)?;
    if orders.len() != space.rank() {
        return Err(Error::Arity { expected: space.rank(), got: orders.len() });
    }
    let mut prod = Complex64::new(1.0, 0.0);
    for (i, (((f, &z), &t), &j)) in space.factors().iter().zip(&lambda.0).zip(&x.0).zip(orders).enumerate() {
        if j > MAX_DERIVATIVE {
            return Err(Error::DerivativeOrder(j));
        }
        check_domain(i, f, z, t)?;
        let jet = factor_jet(f, z, t, j as usize)?;
        prod *= jet_to_derivatives(&jet)[j as usize];
    }
    Ok(prod)
}

/// Exponent of the growth envelope: `sum_j |Im z_j| |X_j| + |Re z_j + rho_j| |Y_j|`.
///
/// Imaginary spectral coordinates are the directions of exponential growth in
/// the real radius; real coordinates grow along imaginary radii.
pub fn growth_exponent(space: &SpaceDescriptor, lambda: &SpectralPoint, x: &RadialPoint) -> f64 {
    space
        .factors()
        .iter()
        .zip(&lambda.0)
        .zip(&x.0)
        .map(|((f, z), t)| z.im.abs() * t.re.abs() + (z.re + f.rho).abs() * t.im.abs())
        .sum()
}

/// Calibrated envelopes `|psi_lambda(X+iY)| <= C e^{growth_exponent}` and
/// `|D^j psi_lambda(t)| <= C_d (1+|lambda|)^j e^{|t| |Im lambda|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub value_constant: f64,
    pub derivative_constant: f64,
}

impl Envelope {
    /// Fits both constants on a fixed reference grid inside `0.95 Omega`.
    pub fn calibrate(space: &SpaceDescriptor) -> Result<Self> {
        let rank = space.rank();
        let r = 0.95 * space.validity_radius().min(std::f64::consts::FRAC_PI_2);
        let mut value_constant: f64 = 1.0;
        let mut derivative_constant: f64 = 1.0;
        let spectral: [f64; 6] = [-12.3, -4.1, 0.0, 2.5, 7.0, 19.7];
        let radial = [0.0, 0.31, 0.77, 1.2, r];
        let imag = [-0.6, 0.0, 0.45];
        for (idx, &re) in spectral.iter().enumerate() {
            for &im in &spectral {
                let lambda = SpectralPoint(
                    (0..rank)
                        .map(|j| Complex64::new(if j == 0 { re } else { spectral[(idx + j) % spectral.len()] }, im))
                        .collect(),
                );
                for &xr in &radial {
                    for &yi in &imag {
                        let x = RadialPoint(vec![Complex64::new(xr, yi); rank]);
                        let v = spherical_at(space, &lambda, &x)?.norm();
                        value_constant = value_constant.max(v / growth_exponent(space, &lambda, &x).exp());
                    }
                    let x = RadialPoint::real(&vec![xr; rank]);
                    for j in 1..=4u32 {
                        let mut orders = vec![0u32; rank];
                        orders[0] = j;
                        let d = radial_derivative(space, &lambda, &x, &orders)?.norm();
                        let env = (1.0 + lambda.norm()).powi(j as i32) * (x.norm() * lambda.growth_norm()).exp();
                        derivative_constant = derivative_constant.max(d / env);
                    }
                }
            }
        }
        Ok(Envelope { value_constant, derivative_constant })
    }

    pub fn growth_bound(&self, space: &SpaceDescriptor, lambda: &SpectralPoint, x: &RadialPoint) -> Result<f64> {
        check_arity(space, lambda, x)?;
        for (i, ((f, &z), &t)) in space.factors().iter().zip(&lambda.0).zip(&x.0).enumerate() {
            check_domain(i, f, z, t)?;
        }
        Ok(self.value_constant * growth_exponent(space, lambda, x).exp())
    }

    pub fn derivative_bound(&self, lambda: &SpectralPoint, x: &RadialPoint, order: u32) -> f64 {
        self.derivative_constant * (1.0 + lambda.norm()).powi(order as i32) * (x.norm() * lambda.growth_norm()).exp()
    }
}
