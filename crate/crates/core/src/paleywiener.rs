//! Holomorphic extension of spherical transforms and Paley-Wiener diagnostics:
//! exponential type, distribution reconstruction, singular support and
//! solvability of invariant differential equations.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::distributions::InvariantDistribution;
use crate::error::{Error, Result};
use crate::geometry::{SpaceDescriptor, SpectralPoint, Weight};
use crate::quadrature::{composite_legendre, radial_density, Quadrature};
use crate::spherical::{dual_point, factor_value, radial_derivative, RadialPoint};
use crate::transform::{default_nodes, forward_table, CoefficientTable, RadialProfile};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type Evaluator = Arc<dyn Fn(&SpectralPoint) -> Result<Complex64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Function,
    Distribution,
    Synthetic,
}

/// An entire function `Phi` of the spectral parameter.
#[derive(Clone)]
pub struct HoloTransform {
    pub provenance: Provenance,
    /// Set when `Phi(w(lambda + rho) - rho) = Phi(lambda)` is expected.
    pub weyl_symmetric: bool,
    pub rank: usize,
    eval: Evaluator,
}

impl fmt::Debug for HoloTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HoloTransform")
            .field("provenance", &self.provenance)
            .field("weyl_symmetric", &self.weyl_symmetric)
            .field("rank", &self.rank)
            .finish()
    }
}

impl HoloTransform {
    pub fn new(
        rank: usize,
        provenance: Provenance,
        weyl_symmetric: bool,
        eval: impl Fn(&SpectralPoint) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        HoloTransform { provenance, weyl_symmetric, rank, eval: Arc::new(eval) }
    }

    pub fn eval(&self, lambda: &SpectralPoint) -> Result<Complex64> {
        if lambda.0.len() != self.rank {
            return Err(Error::Arity { expected: self.rank, got: lambda.0.len() });
        }
        (self.eval)(lambda)
    }

    pub fn constant(rank: usize, c: Complex64) -> Self {
        HoloTransform::new(rank, Provenance::Synthetic, true, move |_| Ok(c))
    }

    /// Entire interpolant `sum c(mu) prod_j sinc((lambda_j - mu_j) / p_j)`
    /// of a finite lattice table.
    pub fn from_table(space: &SpaceDescriptor, table: &CoefficientTable) -> Self {
        let scales: Vec<f64> = space.factors().iter().map(|f| f.scale as f64).collect();
        let entries: Vec<(Weight, Complex64)> = table.entries().iter().filter(|(_, c)| *c != ZERO).cloned().collect();
        HoloTransform::new(space.rank(), Provenance::Synthetic, false, move |lambda| {
            let mut acc = ZERO;
            for (mu, c) in &entries {
                let mut term = *c;
                for ((z, &m), p) in lambda.0.iter().zip(&mu.0).zip(&scales) {
                    term *= sinc((z - m as f64) / p);
                }
                acc += term;
            }
            Ok(acc)
        })
    }

    pub fn plus(&self, other: &HoloTransform) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let prov = if self.provenance == other.provenance { self.provenance } else { Provenance::Synthetic };
        HoloTransform::new(self.rank, prov, self.weyl_symmetric && other.weyl_symmetric, move |l| Ok(a.eval(l)? + b.eval(l)?))
    }

    /// Values on the lattice up to `max_norm`.
    pub fn lattice_table(&self, space: &SpaceDescriptor, max_norm: f64) -> Result<CoefficientTable> {
        let entries = space
            .lattice_points(max_norm)
            .into_iter()
            .map(|mu| self.eval(&mu.to_spectral()).map(|v| (mu, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoefficientTable::new(entries, max_norm))
    }
}

fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-8 {
        let pz = PI * z;
        return Complex64::new(1.0, 0.0) - pz * pz / 6.0;
    }
    (PI * z).sin() / (PI * z)
}

/// Tensor Gauss-Legendre rule on the box containing a ball of radius `r`,
/// with the radial density folded into the weights and a profile sampled on it.
#[derive(Debug, Clone)]
struct BoxIntegrator {
    axes: Vec<Vec<f64>>,
    samples: Vec<Complex64>,
}

const PANELS: usize = 30;
const PANEL_ORDER: usize = 20;

impl BoxIntegrator {
    fn new(space: &SpaceDescriptor, f: &RadialProfile, r: f64) -> Self {
        let mut axes = Vec::new();
        let mut weights = Vec::new();
        for fac in space.factors() {
            let (lo, hi) = if fac.is_rooted() { (0.0, r.min(fac.diameter)) } else { (-r.min(PI), r.min(PI)) };
            let (x, w) = composite_legendre(lo, hi, PANELS, PANEL_ORDER);
            weights.push(x.iter().zip(&w).map(|(t, w)| w * radial_density(fac, *t)).collect::<Vec<f64>>());
            axes.push(x);
        }
        let mut samples = Vec::new();
        let rank = axes.len();
        let mut idx = vec![0usize; rank];
        let mut t = vec![0.0; rank];
        loop {
            let mut w = 1.0;
            for j in 0..rank {
                t[j] = axes[j][idx[j]];
                w *= weights[j][idx[j]];
            }
            samples.push(w * f.eval(&t));
            let mut j = rank;
            loop {
                if j == 0 {
                    return BoxIntegrator { axes, samples };
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < axes[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }

    /// `sum samples * prod_j vectors_j`, contracting the last axis first.
    fn contract(&self, vectors: &[Vec<Complex64>]) -> Complex64 {
        let mut data = self.samples.clone();
        for v in vectors.iter().rev() {
            let n = v.len();
            data = data.chunks(n).map(|c| c.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
        }
        data[0]
    }

    /// `integral f psi_lambda^vee`.
    fn transform(&self, space: &SpaceDescriptor, lambda: &SpectralPoint) -> Result<Complex64> {
        let dual = dual_point(space, lambda);
        let vectors = space
            .factors()
            .iter()
            .zip(&dual.0)
            .zip(&self.axes)
            .map(|((fac, &z), nodes)| nodes.iter().map(|&t| factor_value(fac, z, Complex64::new(t, 0.0))).collect())
            .collect::<Result<Vec<Vec<Complex64>>>>()?;
        Ok(self.contract(&vectors))
    }
}

fn check_radius(space: &SpaceDescriptor, r: f64) -> Result<()> {
    let bound = space.validity_radius();
    if r.is_nan() || r >= bound {
        return Err(Error::Geometry { radius: r, bound });
    }
    Ok(())
}

/// `lambda -> integral f psi_lambda^vee dx` for `f` supported in `D_r(o)`, `r < R`.
pub fn extend_function(space: &SpaceDescriptor, f: &RadialProfile) -> Result<HoloTransform> {
    check_radius(space, f.support_radius)?;
    let integrator = BoxIntegrator::new(space, f, f.support_radius);
    let space = space.clone();
    Ok(HoloTransform::new(space.rank(), Provenance::Function, true, move |lambda| integrator.transform(&space, lambda)))
}

/// Smooth step: 1 on `(-inf, 1/3]`, 0 on `[2/3, inf)`.
pub fn smooth_step(u: f64) -> f64 {
    let g = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if u <= 1.0 / 3.0 {
        1.0
    } else if u >= 2.0 / 3.0 {
        0.0
    } else {
        let (a, b) = (g(2.0 / 3.0 - u), g(u - 1.0 / 3.0));
        a / (a + b)
    }
}

/// `phi(x) = h_delta(|x| - r)`: one on `D_{r+delta/3}`, zero off `D_{r+2 delta/3}`.
pub fn cutoff(space: &SpaceDescriptor, r: f64, delta: f64) -> Result<RadialProfile> {
    check_radius(space, r + delta)?;
    let value = move |t: &[f64]| {
        let d = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        Complex64::new(smooth_step((d - r) / delta), 0.0)
    };
    let plain = RadialProfile::new("cutoff-transition", r + delta, true, value);
    Ok(RadialProfile::new(format!("cutoff({r},{delta})"), r + delta, true, value).with_derivative(move |t, orders| {
        let d = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if d - r < delta / 3.0 - 1e-12 || d - r > 2.0 * delta / 3.0 + 1e-12 {
            // locally constant: exact zero derivatives
            return Ok(ZERO);
        }
        plain.derivative(t, orders)
    }))
}

/// `psi_lambda^vee` as a profile with exact derivatives.
fn dual_spherical_profile(space: &SpaceDescriptor, lambda: &SpectralPoint) -> RadialProfile {
    let dual = dual_point(space, lambda);
    let (s1, s2, d1, d2) = (space.clone(), space.clone(), dual.clone(), dual);
    RadialProfile::new("psi-dual", f64::INFINITY, true, move |t| {
        crate::spherical::spherical_at(&s1, &d1, &RadialPoint::real(t)).unwrap_or(Complex64::new(f64::NAN, 0.0))
    })
    .with_derivative(move |t, orders| radial_derivative(&s2, &d2, &RadialPoint::real(t), orders))
}

/// `F~(lambda) = F(phi psi_lambda^vee)` with the cutoff of margin `epsilon`.
pub fn extend_distribution(
    space: &SpaceDescriptor,
    dist: &InvariantDistribution,
    lambda: &SpectralPoint,
    epsilon: f64,
) -> Result<Complex64> {
    distribution_transform(space, dist, epsilon)?.eval(lambda)
}

/// [`extend_distribution`] as a reusable [`HoloTransform`].
pub fn distribution_transform(space: &SpaceDescriptor, dist: &InvariantDistribution, epsilon: f64) -> Result<HoloTransform> {
    dist.validate(space)?;
    let r = dist.support_radius();
    let phi = cutoff(space, r, epsilon)?;
    // phi is identically one on the density's support, so the density part
    // is integrated on its own support box
    let density = dist.density.as_ref().map(|d| BoxIntegrator::new(space, d, d.support_radius));
    // circle factors flip under the Weyl group; atoms must be even there
    let symmetric = dist.atoms.iter().all(|a| {
        space.factors().iter().enumerate().all(|(j, f)| f.is_rooted() || (a.position[j] == 0.0 && a.orders[j] % 2 == 0))
    });
    let atoms = dist.atoms.clone();
    let space = space.clone();
    Ok(HoloTransform::new(space.rank(), Provenance::Distribution, symmetric, move |lambda| {
        let test = phi.product(&dual_spherical_profile(&space, lambda));
        let mut acc = ZERO;
        for a in &atoms {
            acc += a.coeff * test.derivative(&a.position, &a.orders)?;
        }
        if let Some(b) = &density {
            acc += b.transform(&space, lambda)?;
        }
        Ok(acc)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthKind {
    /// Rapid decay times exponential type.
    Smooth,
    /// Polynomial growth times exponential type.
    Distribution,
}

/// Fitted `(order, C, r)` with `|Phi| <= C (1+|lambda|)^{±order} e^{r |Im lambda|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProfile {
    pub kind: GrowthKind,
    /// Decay order `k` for smooth data, growth order `N` for distributions.
    pub order: i32,
    pub constant: f64,
    pub type_radius: f64,
    pub residual: f64,
    /// Per-direction fitted slopes.
    pub slopes: Vec<f64>,
    /// Real-axis log-log slope that determined the order.
    pub order_slope: f64,
    pub fit_ok: bool,
    pub sigma_max: f64,
}

impl GrowthProfile {
    /// Exponent of `(1+|lambda|)` in the envelope.
    pub fn power(&self) -> i32 {
        match self.kind {
            GrowthKind::Smooth => -self.order,
            GrowthKind::Distribution => self.order,
        }
    }

    pub fn envelope(&self, lambda: &SpectralPoint) -> f64 {
        self.constant * (1.0 + lambda.norm()).powi(self.power()) * (self.type_radius * lambda.growth_norm()).exp()
    }

    /// Structured text record.
    pub fn to_text(&self) -> String {
        format!(
            "kind={:?} order={} C={:.6e} r={:.6} residual={:.3e} fit_ok={} sigma_max={}",
            self.kind, self.order, self.constant, self.type_radius, self.residual, self.fit_ok, self.sigma_max
        )
    }
}

/// Unit directions `±e_j` and, on products, the normalized diagonals.
pub fn default_directions(rank: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for j in 0..rank {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; rank];
            v[j] = s;
            out.push(v);
        }
    }
    if rank >= 2 {
        for signs in 0..(1usize << rank) {
            let v: Vec<f64> = (0..rank)
                .map(|j| if signs >> j & 1 == 1 { -1.0 } else { 1.0 } / (rank as f64).sqrt())
                .collect();
            out.push(v);
        }
    }
    out
}

/// Settings for [`estimate_type`].
#[derive(Debug, Clone, PartialEq)]
pub struct TypeFit {
    /// Largest `sigma` along the growth rays `i sigma xi`.
    pub sigma_max: f64,
    pub samples: usize,
    /// Largest `sigma` along the lattice rays used for the order fit.
    pub order_sigma_max: f64,
}

impl Default for TypeFit {
    fn default() -> Self {
        TypeFit { sigma_max: 400.0, samples: 48, order_sigma_max: 40.0 }
    }
}

/// Least squares `log|Phi(i sigma xi)| ~ r sigma + c sqrt(sigma) + b log sigma + d`
/// on `[sigma_max/4, sigma_max]` per direction; `r` is the largest slope.
/// The order comes from windowed maxima along the real (lattice) rays.
pub fn estimate_type(space: &SpaceDescriptor, phi: &HoloTransform, directions: &[Vec<f64>], fit: &TypeFit) -> Result<GrowthProfile> {
    let rank = space.rank();
    let mut slopes = Vec::new();
    let mut residual: f64 = 0.0;
    let mut fit_ok = true;
    let mut type_samples: Vec<(SpectralPoint, f64)> = Vec::new();
    for xi in directions {
        if xi.len() != rank {
            return Err(Error::Arity { expected: rank, got: xi.len() });
        }
        let (lo, hi) = (fit.sigma_max / 4.0, fit.sigma_max);
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..fit.samples {
            let sigma = lo + (hi - lo) * k as f64 / (fit.samples - 1) as f64;
            let lambda = SpectralPoint(xi.iter().map(|&x| Complex64::new(0.0, sigma * x)).collect());
            let v = phi.eval(&lambda)?.norm();
            type_samples.push((lambda, v));
            if v <= 0.0 || !v.is_finite() {
                fit_ok = false;
                continue;
            }
            rows.push([sigma, sigma.sqrt(), sigma.ln(), 1.0]);
            rhs.push(v.ln());
        }
        if rows.len() < 8 {
            fit_ok = false;
            slopes.push(f64::NAN);
            continue;
        }
        let a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]);
        let b = DVector::from_vec(rhs);
        let sol = a.clone().svd(true, true).solve(&b, 1e-12).map_err(|e| Error::Config(e.to_string()))?;
        let res = (&a * &sol - &b).norm() / (rows.len() as f64).sqrt();
        residual = residual.max(res);
        slopes.push(sol[0]);
    }
    let type_radius = slopes.iter().copied().filter(|s| s.is_finite()).fold(0.0, f64::max);

    // order: log-log slope of windowed maxima on the lattice rays
    let mut order_slope = f64::NEG_INFINITY;
    let mut order_samples: Vec<(SpectralPoint, f64)> = Vec::new();
    for xi in directions {
        let windows = 8;
        let mut centers = Vec::new();
        let mut maxima = Vec::new();
        for w in 0..windows {
            let a = (fit.order_sigma_max / 2f64.powi(windows - w)).max(1.0);
            let b = (fit.order_sigma_max / 2f64.powi(windows - w - 1)).max(1.0);
            let mut m: f64 = 0.0;
            for k in 0..16 {
                let sigma = a + (b - a) * (k as f64 + 0.5) / 16.0;
                let lambda = SpectralPoint(xi.iter().map(|&x| Complex64::new(sigma * x, 0.0)).collect());
                let v = phi.eval(&lambda)?.norm();
                order_samples.push((lambda, v));
                m = m.max(v);
            }
            centers.push((1.0 + (a * b).sqrt()).ln());
            maxima.push(m);
        }
        let half = windows as usize / 2;
        let pts: Vec<(f64, f64)> = centers[half..]
            .iter()
            .zip(&maxima[half..])
            .filter(|(_, m)| **m > 0.0)
            .map(|(c, m)| (*c, m.ln()))
            .collect();
        let slope = if pts.len() < 2 {
            f64::NEG_INFINITY
        } else {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
        };
        order_slope = order_slope.max(slope);
    }
    let (kind, order) = if phi.provenance == Provenance::Function {
        let k = if order_slope.is_finite() { (-order_slope).floor().clamp(0.0, 64.0) as i32 } else { 64 };
        (GrowthKind::Smooth, k)
    } else {
        (GrowthKind::Distribution, (order_slope - 0.1).ceil().max(0.0) as i32)
    };
    let mut profile = GrowthProfile {
        kind,
        order,
        constant: 0.0,
        type_radius,
        residual,
        slopes,
        order_slope,
        fit_ok,
        sigma_max: fit.sigma_max,
    };
    profile.constant = 1.0;
    let c = type_samples
        .iter()
        .chain(&order_samples)
        .map(|(l, v)| v / profile.envelope(l))
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max);
    profile.constant = c;
    Ok(profile)
}

/// Evidence that `(1+|lambda|)^k |Phi|` is bounded along a lattice ray.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCertificate {
    pub order: i32,
    pub constant: f64,
    /// Where the windowed maximum of `(1+sigma)^k |Phi(sigma xi)|` peaks.
    pub peak_sigma: f64,
    /// True when the peak lies well inside the sampled range, so the
    /// envelope has turned over rather than being cut off by the grid.
    pub turned_over: bool,
}

/// Samples `(1+sigma)^k |Phi(sigma xi)|` on `[0, sigma_hi]` in doubling windows.
///
/// Box-quadrature transforms resolve real parameters up to about 1000; keep
/// `sigma_hi` at or below that.
pub fn decay_certificate(phi: &HoloTransform, xi: &[f64], k: i32, sigma_hi: f64) -> Result<DecayCertificate> {
    let mut best = (0.0f64, 0.0f64);
    let mut lo = 0.0;
    let mut hi = 1.0f64.min(sigma_hi);
    while lo < sigma_hi {
        for j in 0..16 {
            let sigma = lo + (hi - lo) * (j as f64 + 0.5) / 16.0;
            let lambda = SpectralPoint(xi.iter().map(|&x| Complex64::new(sigma * x, 0.0)).collect());
            let v = phi.eval(&lambda)?.norm() * (1.0 + sigma).powi(k);
            if v > best.0 {
                best = (v, sigma);
            }
        }
        lo = hi;
        hi = (2.0 * hi).min(sigma_hi);
    }
    Ok(DecayCertificate { order: k, constant: best.0, peak_sigma: best.1, turned_over: best.1 < 0.75 * sigma_hi })
}

/// Pairing closure `f -> sum d(mu*) f~(mu*) Phi(mu)` of a Paley-Wiener
/// transform, truncated at `max_norm`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    space: SpaceDescriptor,
    pub table: CoefficientTable,
    quad: Quadrature,
    pub tolerance: f64,
}

/// Builds the reconstruction; requires a certificate of type below `R`.
pub fn reconstruct_distribution(
    space: &SpaceDescriptor,
    phi: &HoloTransform,
    certificate: Option<&GrowthProfile>,
    max_norm: f64,
    tolerance: f64,
) -> Result<Reconstruction> {
    let bound = space.validity_radius();
    match certificate {
        Some(c) if c.type_radius < bound && c.constant.is_finite() => {}
        _ => return Err(Error::MissingCertificate { bound }),
    }
    Ok(Reconstruction {
        space: space.clone(),
        table: phi.lattice_table(space, max_norm)?,
        quad: Quadrature::new(space, default_nodes(max_norm)),
        tolerance,
    })
}

impl Reconstruction {
    /// `F(f)`; fails if the outermost tenth of the series (a proxy for the
    /// truncated tail) exceeds the tolerance.
    pub fn pair(&self, f: &RadialProfile) -> Result<Complex64> {
        let b = self.table.max_norm;
        let f_table = forward_table(&self.space, f, b, &self.quad)?;
        let (mut total, mut tail) = (ZERO, 0.0);
        for (mu, phi) in self.table.entries() {
            let dual = self.space.contragredient(mu);
            let term = self.space.dimension(&dual) as f64 * f_table.get(&dual).unwrap_or_default() * phi;
            total += term;
            if mu.norm() > 0.9 * b {
                tail += term.norm();
            }
        }
        if tail > self.tolerance {
            return Err(Error::TailBound { tail, tolerance: self.tolerance });
        }
        Ok(total)
    }

    /// Transform of the reconstruction at a lattice point, via the Schur
    /// probe `psi_nu^vee`.
    pub fn transform_at(&self, nu: &Weight) -> Result<Complex64> {
        self.space.check_weight(nu)?;
        let probe = RadialProfile::spherical(&self.space, &self.space.contragredient(nu));
        self.pair(&probe)
    }
}

/// Growth constants of one `m` on nested grid bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SingSuppRow {
    pub m: f64,
    /// `C_m(B)` for each grid bound `B`.
    pub constants: Vec<f64>,
    /// `log2(C_m(B_last) / C_m(B_prev))`: polynomial rate still needed.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingSuppReport {
    pub s: f64,
    pub order: i32,
    pub bounds: Vec<f64>,
    pub rows: Vec<SingSuppRow>,
    /// Spread of the exponents across `m`.
    pub spread: f64,
    pub pass: bool,
}

/// Settings for [`singsupp_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingSuppGrid {
    pub bounds: Vec<f64>,
    pub step: f64,
    pub levels: usize,
    /// Fail when the exponents spread by more than this across `m`.
    pub threshold: f64,
}

impl Default for SingSuppGrid {
    fn default() -> Self {
        SingSuppGrid { bounds: vec![20.0, 40.0, 80.0], step: 0.5, levels: 9, threshold: 0.5 }
    }
}

/// Checks `|Phi(lambda)| <= C_m (1+|lambda|)^N e^{s |Im lambda|}` on
/// `|Im lambda| <= m log(1 + |lambda|)`, growth along the first factor.
///
/// If the singular support lies in `D_s(o)` the polynomial order needed is
/// uniform in `m`; otherwise the constants on nested grids grow at a rate
/// that increases with `m`. The verdict compares those rates.
pub fn singsupp_test(
    space: &SpaceDescriptor,
    phi: &HoloTransform,
    s: f64,
    order: i32,
    m_list: &[f64],
    grid: &SingSuppGrid,
) -> Result<SingSuppReport> {
    let rank = space.rank();
    let b_max = grid.bounds.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::new();
    for &m in m_list {
        let mut samples: Vec<(f64, f64)> = Vec::new();
        let steps = (b_max / grid.step).round() as usize;
        for i in 0..=steps {
            let x = i as f64 * grid.step;
            for l in 0..grid.levels {
                let frac = l as f64 / (grid.levels - 1) as f64;
                // the region's edge depends on |lambda|; solve y = m log(1 + |x + iy|) by iteration
                let mut y = m * (1.0 + x).ln();
                for _ in 0..20 {
                    y = m * (1.0 + (x * x + y * y).sqrt()).ln();
                }
                let y = frac * y;
                let norm = (x * x + y * y).sqrt();
                if norm > b_max {
                    continue;
                }
                let mut coords = vec![ZERO; rank];
                coords[0] = Complex64::new(x, y);
                let v = phi.eval(&SpectralPoint(coords))?.norm();
                let env = (1.0 + norm).powi(order) * (s * y).exp();
                samples.push((norm, v / env));
            }
        }
        let constants: Vec<f64> = grid
            .bounds
            .iter()
            .map(|&b| samples.iter().filter(|(n, _)| *n <= b).map(|(_, r)| *r).fold(0.0, f64::max))
            .collect();
        let k = constants.len();
        let exponent = if k >= 2 {
            (constants[k - 1] / constants[k - 2]).ln() / (grid.bounds[k - 1] / grid.bounds[k - 2]).ln()
        } else {
            0.0
        };
        rows.push(SingSuppRow { m, constants, exponent });
    }
    let hi = rows.iter().map(|r| r.exponent).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.exponent).fold(f64::INFINITY, f64::min);
    let spread = if rows.is_empty() { 0.0 } else { hi - lo };
    Ok(SingSuppReport { s, order, bounds: grid.bounds.clone(), rows, spread, pass: spread <= grid.threshold })
}

/// Patch used for removable singularities of `Phi_F / symbol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Patch {
    /// Mean of the quotient over a circle of this radius centred at the point.
    MeanCircle { radius: f64, points: usize },
    /// Cauchy integral over a circle centred at the nearby zero.
    Cauchy { radius: f64, points: usize },
}

impl Patch {
    pub fn mean() -> Self {
        Patch::MeanCircle { radius: 1e-2, points: 64 }
    }

    pub fn cauchy() -> Self {
        Patch::Cauchy { radius: 5e-2, points: 128 }
    }

    fn radius(&self) -> f64 {
        match *self {
            Patch::MeanCircle { radius, .. } | Patch::Cauchy { radius, .. } => radius,
        }
    }
}

/// `D = P(Delta)` with `P(x) = sum_k coeffs[k] x^k`; acts on `psi_lambda`
/// by `P(-omega(lambda))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacePolynomial {
    pub coeffs: Vec<f64>,
}

impl LaplacePolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        LaplacePolynomial { coeffs }
    }

    pub fn symbol(&self, space: &SpaceDescriptor, lambda: &SpectralPoint) -> Complex64 {
        let x = -space.eigenvalue(lambda);
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    /// Roots `w` of `P(-w) = 0`, i.e. the eigenvalues where the symbol vanishes.
    pub fn omega_roots(&self) -> Vec<Complex64> {
        let mut c = self.coeffs.clone();
        while c.last() == Some(&0.0) {
            c.pop();
        }
        let deg = c.len().saturating_sub(1);
        if deg == 0 {
            return Vec::new();
        }
        // q(w) = sum c_k (-1)^k w^k, made monic
        let q: Vec<f64> = c.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -v }).collect();
        let lead = q[deg];
        let comp = DMatrix::from_fn(deg, deg, |i, j| {
            if i == 0 {
                -q[deg - 1 - j] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        comp.complex_eigenvalues().iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroReport {
    pub lambda: SpectralPoint,
    pub phi_abs: f64,
    pub on_lattice: bool,
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// `|Phi_F| < tol` at every lattice zero of the symbol.
    pub solvable: bool,
    /// `|Phi_F| < tol` at every zero found, lattice or not.
    pub entire: bool,
    pub zeros: Vec<ZeroReport>,
    pub offending: Option<ZeroReport>,
    pub solution: Option<HoloTransform>,
}

/// Divides `Phi_F` by the symbol of `P(Delta)`, patching removable
/// singularities with `patch`.
pub fn solve(
    space: &SpaceDescriptor,
    p: &LaplacePolynomial,
    phi_f: &HoloTransform,
    max_norm: f64,
    tol: f64,
    patch: Patch,
) -> Result<SolveReport> {
    let rho = space.rho();
    let mut zeros = Vec::new();
    // lattice zeros, any rank
    for mu in space.lattice_points(max_norm) {
        let l = mu.to_spectral();
        if p.symbol(space, &l).norm() < 1e-9 {
            zeros.push(ZeroReport { phi_abs: phi_f.eval(&l)?.norm(), lambda: l, on_lattice: true });
        }
    }
    // complex zeros on rank-one spaces: lambda = -rho +- sqrt(rho^2 + w)
    if space.rank() == 1 {
        for w in p.omega_roots() {
            let root = (Complex64::new(rho[0] * rho[0], 0.0) + w).sqrt();
            for l in [-rho[0] + root, -rho[0] - root] {
                let lambda = SpectralPoint(vec![l]);
                if zeros.iter().any(|z: &ZeroReport| (z.lambda.0[0] - l).norm() < 1e-9) {
                    continue;
                }
                let on_lattice = (l.im.abs() < 1e-9) && {
                    let k = l.re.round();
                    (l.re - k).abs() < 1e-9 && space.contains(&Weight(vec![k as i64]))
                };
                zeros.push(ZeroReport { phi_abs: phi_f.eval(&lambda)?.norm(), lambda, on_lattice });
            }
        }
    }
    let offending = zeros.iter().find(|z| z.on_lattice && z.phi_abs >= tol).cloned();
    let solvable = offending.is_none();
    let entire = zeros.iter().all(|z| z.phi_abs < tol);
    let solution = if solvable {
        let (space_c, p_c, phi_c) = (space.clone(), p.clone(), phi_f.clone());
        Some(HoloTransform::new(space.rank(), phi_f.provenance, phi_f.weyl_symmetric, move |l| {
            quotient(&space_c, &p_c, &phi_c, l, patch)
        }))
    } else {
        None
    };
    Ok(SolveReport { solvable, entire, zeros, offending, solution })
}

fn quotient(space: &SpaceDescriptor, p: &LaplacePolynomial, phi: &HoloTransform, l: &SpectralPoint, patch: Patch) -> Result<Complex64> {
    let rho = space.rho();
    let s = p.symbol(space, l);
    // coordinate with the largest sensitivity of omega; Newton distance to the zero set
    let (j, grad) = l
        .0
        .iter()
        .zip(&rho)
        .enumerate()
        .map(|(j, (z, r))| (j, 2.0 * (z + r)))
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("rank >= 1");
    let h = 1e-6 * (1.0 + l.0[j].norm());
    let shifted = |dz: Complex64| {
        let mut q = l.clone();
        q.0[j] += dz;
        q
    };
    let ds = (p.symbol(space, &shifted(Complex64::new(h, 0.0))) - p.symbol(space, &shifted(Complex64::new(-h, 0.0)))) / (2.0 * h);
    let scale = if ds.norm() > 0.0 { ds.norm() } else { grad.norm().max(1e-300) };
    let dist = s.norm() / scale;
    if dist >= patch.radius() / 2.0 {
        return Ok(phi.eval(l)? / s);
    }
    let direct = |q: &SpectralPoint| -> Result<Complex64> { Ok(phi.eval(q)? / p.symbol(space, q)) };
    match patch {
        Patch::MeanCircle { radius, points } => {
            let mut acc = ZERO;
            for k in 0..points {
                let e = Complex64::from_polar(radius, 2.0 * PI * k as f64 / points as f64);
                acc += direct(&shifted(e))?;
            }
            Ok(acc / points as f64)
        }
        Patch::Cauchy { radius, points } => {
            // locate the zero along coordinate j by Newton's method
            let mut z0 = ZERO;
            for _ in 0..50 {
                let v = p.symbol(space, &shifted(z0));
                let d = (p.symbol(space, &shifted(z0 + h)) - p.symbol(space, &shifted(z0 - h))) / (2.0 * h);
                if d.norm() == 0.0 {
                    break;
                }
                let step = v / d;
                z0 -= step;
                if step.norm() < 1e-15 {
                    break;
                }
            }
            let mut acc = ZERO;
            for k in 0..points {
                let e = Complex64::from_polar(radius, 2.0 * PI * k as f64 / points as f64);
                acc += direct(&shifted(z0 + e))? * e / (z0 + e);
            }
            Ok(acc / points as f64)
        }
    }
}

/// Largest `|Phi(w(lambda + rho) - rho) - Phi(lambda)|` over the Weyl orbit.
pub fn weyl_defect(space: &SpaceDescriptor, phi: &HoloTransform, lambda: &SpectralPoint) -> Result<f64> {
    let base = phi.eval(lambda)?;
    let mut worst: f64 = 0.0;
    for img in space.weyl_images(lambda) {
        worst = worst.max((phi.eval(&img)? - base).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::dist_transform;
    use crate::transform::forward;

    fn s2() -> SpaceDescriptor {
        SpaceDescriptor::parse("S2").unwrap()
    }

    #[test]
    fn extend_function_agrees_with_forward() {
        let space = s2();
        let f = RadialProfile::bump(0.5);
        let phi = extend_function(&space, &f).unwrap();
        let q = Quadrature::new(&space, 320);
        for k in [0i64, 1, 5, 17, 30] {
            let mu = Weight(vec![k]);
            let a = phi.eval(&mu.to_spectral()).unwrap();
            let b = forward(&space, &f, &mu, &q).unwrap();
            assert!((a - b).norm() < 1e-9, "k={k}: {a} vs {b}");
        }
        assert!(extend_function(&space, &RadialProfile::bump(1.6)).is_err());
    }

    #[test]
    fn cutoff_properties() {
        let space = s2();
        let phi = cutoff(&space, 0.4, 0.3).unwrap();
        assert_eq!(phi.eval(&[0.3]).re, 1.0);
        assert_eq!(phi.eval(&[0.5]).re, 1.0);
        assert_eq!(phi.eval(&[0.61]).re, 0.0);
        let v = phi.eval(&[0.55]).re;
        assert!(v > 0.0 && v < 1.0);
        assert!(cutoff(&space, 1.4, 0.2).is_err());
    }

    #[test]
    fn distribution_extension_matches_lattice_and_oracle() {
        let space = s2();
        let atom = InvariantDistribution::atom(vec![0.4], vec![0], Complex64::new(1.0, 0.0));
        let q = Quadrature::new(&space, 64);
        for k in 0..6 {
            let mu = Weight(vec![k]);
            let a = extend_distribution(&space, &atom, &mu.to_spectral(), 0.1).unwrap();
            let b = dist_transform(&space, &atom, &mu, &q).unwrap();
            assert!((a - b).norm() < 1e-13);
        }
        let d = extend_distribution(&space, &InvariantDistribution::delta(1), &SpectralPoint(vec![Complex64::new(3.0, 7.0)]), 0.1).unwrap();
        assert!((d - 1.0).norm() < 1e-14);
    }

    #[test]
    fn laplace_polynomial_roots() {
        let p = LaplacePolynomial::new(vec![-1.0, 1.0]);
        let roots = p.omega_roots();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] + 1.0).norm() < 1e-14);
        let space = s2();
        // zeros of -omega - 1 on S2: lambda^2 + lambda + 1 = 0
        let l = SpectralPoint(vec![Complex64::new(-0.5, 3f64.sqrt() / 2.0)]);
        assert!(p.symbol(&space, &l).norm() < 1e-14);
    }

    #[test]
    fn directions_are_unit() {
        for rank in 1..4 {
            for d in default_directions(rank) {
                let n: f64 = d.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-14);
            }
        }
    }
}
