//! K-invariant distributions built from orbit atoms and smooth densities.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{SpaceDescriptor, Weight};
use crate::quadrature::Quadrature;
use crate::transform::{default_nodes, forward_table, integrate, CoefficientTable, RadialProfile};

/// `c * D^orders` applied to the orbit average of point evaluation at
/// radial position `position`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub position: Vec<f64>,
    pub orders: Vec<u32>,
    pub coeff: Complex64,
}

#[derive(Debug, Clone, Default)]
pub struct InvariantDistribution {
    pub atoms: Vec<Atom>,
    pub density: Option<RadialProfile>,
}

impl InvariantDistribution {
    /// Point evaluation at the base point.
    pub fn delta(rank: usize) -> Self {
        Self::atom(vec![0.0; rank], vec![0; rank], Complex64::new(1.0, 0.0))
    }

    pub fn atom(position: Vec<f64>, orders: Vec<u32>, coeff: Complex64) -> Self {
        InvariantDistribution { atoms: vec![Atom { position, orders, coeff }], density: None }
    }

    pub fn density(profile: RadialProfile) -> Self {
        InvariantDistribution { atoms: Vec::new(), density: Some(profile) }
    }

    pub fn with_density(mut self, profile: RadialProfile) -> Self {
        self.density = Some(match self.density.take() {
            None => profile,
            Some(old) => {
                let (a, b) = (old.clone(), profile.clone());
                RadialProfile::new(
                    format!("{}+{}", old.name, profile.name),
                    old.support_radius.max(profile.support_radius),
                    old.smooth && profile.smooth,
                    move |t| a.eval(t) + b.eval(t),
                )
            }
        });
        self
    }

    /// Sum of two distributions.
    pub fn plus(&self, other: &InvariantDistribution) -> Self {
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().cloned());
        match &other.density {
            Some(d) => out.with_density(d.clone()),
            None => out,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        InvariantDistribution {
            atoms: self.atoms.iter().map(|a| Atom { coeff: c * a.coeff, ..a.clone() }).collect(),
            density: self.density.as_ref().map(|d| d.scaled(c)),
        }
    }

    pub fn support_radius(&self) -> f64 {
        let atoms = self.atoms.iter().map(|a| a.position.iter().map(|x| x * x).sum::<f64>().sqrt());
        let dens = self.density.iter().map(|d| d.support_radius);
        atoms.chain(dens).fold(0.0, f64::max)
    }

    /// Checks arity and `support_radius < R`.
    pub fn validate(&self, space: &SpaceDescriptor) -> Result<()> {
        for a in &self.atoms {
            for got in [a.position.len(), a.orders.len()] {
                if got != space.rank() {
                    return Err(Error::Arity { expected: space.rank(), got });
                }
            }
        }
        let (r, bound) = (self.support_radius(), space.validity_radius());
        if r >= bound {
            return Err(Error::Geometry { radius: r, bound });
        }
        Ok(())
    }

    /// Parses records `atom s j re im` (comma-separated `s` and `j` on product
    /// spaces) and `density bump r`.
    pub fn parse(text: &str, rank: usize) -> Result<Self> {
        let mut out = InvariantDistribution::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse { line: i + 1, message: m.to_string() };
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["atom", s, j, re, im] => {
                    let position = s.split(',').map(str::parse::<f64>).collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad atom position"))?;
                    let orders = j.split(',').map(str::parse::<u32>).collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad derivative order"))?;
                    if position.len() != rank || orders.len() != rank {
                        return Err(bad("atom arity does not match the space rank"));
                    }
                    let coeff = Complex64::new(
                        re.parse().map_err(|_| bad("bad real part"))?,
                        im.parse().map_err(|_| bad("bad imaginary part"))?,
                    );
                    out.atoms.push(Atom { position, orders, coeff });
                }
                ["density", "bump", r] => {
                    let r: f64 = r.parse().map_err(|_| bad("bad density radius"))?;
                    out = out.with_density(RadialProfile::bump(r));
                }
                ["density", name, _] => return Err(bad(&format!("unknown density profile `{name}`"))),
                _ => return Err(bad("expected `atom s j re im` or `density bump r`")),
            }
        }
        Ok(out)
    }
}

/// `F(f)` against the quadrature `quad` for the density part.
pub fn pair_with(space: &SpaceDescriptor, dist: &InvariantDistribution, f: &RadialProfile, quad: &Quadrature) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in &dist.atoms {
        if a.position.len() != space.rank() {
            return Err(Error::Arity { expected: space.rank(), got: a.position.len() });
        }
        acc += a.coeff * f.derivative(&a.position, &a.orders)?;
    }
    if let Some(d) = &dist.density {
        acc += integrate(quad, &|t| d.eval(t) * f.eval(t));
    }
    Ok(acc)
}

/// `F(f)`; a compactly supported density is integrated on its own support.
pub fn pair(space: &SpaceDescriptor, dist: &InvariantDistribution, f: &RadialProfile) -> Result<Complex64> {
    let quad = match &dist.density {
        Some(d) if d.support_radius.is_finite() => Quadrature::on_support(space, d.support_radius),
        _ => Quadrature::new(space, default_nodes(0.0)),
    };
    pair_with(space, dist, f, &quad)
}

/// `F~(mu) = F(psi_{mu*})`.
pub fn dist_transform(space: &SpaceDescriptor, dist: &InvariantDistribution, mu: &Weight, quad: &Quadrature) -> Result<Complex64> {
    space.check_weight(mu)?;
    let dual = RadialProfile::spherical(space, &space.contragredient(mu));
    pair_with(space, dist, &dual, quad)
}

/// `F~` on every weight with `|mu| <= max_norm`; the density part goes
/// through [`forward_table`].
pub fn dist_table(space: &SpaceDescriptor, dist: &InvariantDistribution, max_norm: f64, quad: &Quadrature) -> Result<CoefficientTable> {
    let dens = match &dist.density {
        Some(d) => Some(forward_table(space, d, max_norm, quad)?),
        None => None,
    };
    let atoms_only = InvariantDistribution { atoms: dist.atoms.clone(), density: None };
    let mut entries = Vec::new();
    for mu in space.lattice_points(max_norm) {
        let mut v = if atoms_only.atoms.is_empty() { Complex64::new(0.0, 0.0) } else { dist_transform(space, &atoms_only, &mu, quad)? };
        if let Some(t) = &dens {
            v += t.get(&mu).unwrap_or_default();
        }
        entries.push((mu, v));
    }
    Ok(CoefficientTable::new(entries, max_norm))
}

/// `sum d(mu) f~(mu*) F~(mu)` over the common weights. Fails with a
/// divergence alarm when the outer half of the sum moves the value by more
/// than `tolerance` (relative to `max(1, |value|)`).
pub fn pairing_series(
    space: &SpaceDescriptor,
    dist_table: &CoefficientTable,
    f_table: &CoefficientTable,
    tolerance: f64,
) -> Result<Complex64> {
    let b = dist_table.max_norm.min(f_table.max_norm);
    let (mut total, mut inner) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (mu, big_f) in dist_table.entries() {
        if mu.norm() > b + 1e-9 {
            continue;
        }
        let Some(small_f) = f_table.get(&space.contragredient(mu)) else { continue };
        let term = space.dimension(mu) as f64 * small_f * big_f;
        total += term;
        if mu.norm() <= b / 2.0 {
            inner += term;
        }
    }
    let increment = (total - inner).norm();
    let allowed = tolerance * total.norm().max(1.0);
    if increment > allowed {
        return Err(Error::Divergence { increment, tolerance: allowed });
    }
    Ok(total)
}

/// A probe function together with `sup |Delta^j f|` for `j = 0..=8`.
#[derive(Debug, Clone)]
pub struct Probe {
    pub profile: RadialProfile,
    pub laplacian_sups: Vec<f64>,
}

impl Probe {
    /// `psi_mu`, for which `Delta^j psi_mu = (-omega)^j psi_mu` and the sup is at `o`.
    pub fn spherical(space: &SpaceDescriptor, mu: &Weight) -> Self {
        let w = space.eigenvalue(&mu.to_spectral()).re.abs();
        Probe {
            profile: RadialProfile::spherical(space, mu),
            laplacian_sups: (0..=8).map(|j| w.powi(j)).collect(),
        }
    }
}

/// Smallest `m` (and fitted `C`) for which `|F(f)| <= C max_{j<=m} sup|Delta^j f|`
/// stays bounded across the probe family.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormCertificate {
    pub m: u32,
    pub constant: f64,
    /// Fitted log-log slope of the ratio against probe frequency.
    pub slope: f64,
    pub found: bool,
}

pub fn seminorm_certificate(space: &SpaceDescriptor, dist: &InvariantDistribution, probes: &[Probe]) -> Result<SeminormCertificate> {
    let quad = Quadrature::new(space, default_nodes(0.0));
    let values: Vec<f64> = probes.iter().map(|p| pair_with(space, dist, &p.profile, &quad).map(|v| v.norm())).collect::<Result<_>>()?;
    let freq: Vec<f64> = probes
        .iter()
        .map(|p| (p.laplacian_sups[1] / p.laplacian_sups[0].max(1e-300)).max(1.0).sqrt())
        .collect();
    let mut last = None;
    for m in 0..=8u32 {
        let ratios: Vec<f64> = probes
            .iter()
            .zip(&values)
            .map(|(p, v)| v / p.laplacian_sups[..=m as usize].iter().copied().fold(0.0, f64::max))
            .collect();
        let constant = ratios.iter().copied().fold(0.0, f64::max);
        let slope = tail_slope(&freq, &ratios);
        let cert = SeminormCertificate { m, constant, slope, found: slope <= 0.25 };
        if cert.found {
            return Ok(cert);
        }
        last = Some(cert);
    }
    Ok(last.expect("loop runs at least once"))
}

/// Least-squares slope of `log y` against `log x` over the upper half of `x`.
fn tail_slope(x: &[f64], y: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x.ln(), y.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts = &pts[pts.len() / 2..];
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 { 0.0 } else { sxy / sxx }
}
