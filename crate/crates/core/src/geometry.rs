//! Restricted root data of the supported spaces, the spherical weight
//! semilattice, the shifted Weyl action, dimensions and Laplace eigenvalues.
//!
//! Coordinates: every rooted factor is rank one and its spectral coordinate is
//! measured in units where the longest restricted root is 1. With this choice
//! the radial coordinate `t` of a sphere or complex projective space runs over
//! `[0, pi]`, the spherical functions are Jacobi polynomials in `cos t`, and
//! `|alpha(X)| < pi/2` for every root becomes `|t| < pi/2` on all factors.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    Sphere(u32),
    RealProjective(u32),
    ComplexProjective(u32),
    Circle,
}

/// Registry entry for one rank-one factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub kind: FactorKind,
    /// Multiplicity of the short root `alpha`.
    pub mult_short: u32,
    /// Multiplicity of `2 alpha` (zero when it is not a root).
    pub mult_long: u32,
    /// Sublattice scale: spherical weights are `p * Z+` on this factor.
    pub scale: i64,
    pub rho: f64,
    pub omega_radius: f64,
    pub diameter: f64,
    jacobi: Option<(f64, f64)>,
}

impl Factor {
    pub fn new(kind: FactorKind) -> Self {
        match kind {
            FactorKind::Sphere(n) | FactorKind::RealProjective(n) => {
                // Quadratic transformation: the (a, -1/2) Jacobi functions in
                // cos(2s) are the (a, a) functions in cos(s) with a = (m-1)/2.
                let m = n - 1;
                let a = (m as f64 - 1.0) / 2.0;
                let (scale, diameter) = match kind {
                    FactorKind::Sphere(_) => (1, PI),
                    _ => (2, PI / 2.0),
                };
                Factor {
                    kind,
                    mult_short: m,
                    mult_long: 0,
                    scale,
                    rho: m as f64 / 2.0,
                    omega_radius: PI / 2.0,
                    diameter,
                    jacobi: Some((a, a)),
                }
            }
            FactorKind::ComplexProjective(n) => {
                let m_short = 2 * (n - 1);
                let m_long = 1;
                Factor {
                    kind,
                    mult_short: m_short,
                    mult_long: m_long,
                    scale: 1,
                    // alpha -> 1/2, 2 alpha -> 1 in longest-root units
                    rho: (m_short as f64 + 2.0 * m_long as f64) / 4.0,
                    omega_radius: PI / 2.0,
                    diameter: PI,
                    jacobi: Some((
                        (m_short as f64 + m_long as f64 - 1.0) / 2.0,
                        (m_long as f64 - 1.0) / 2.0,
                    )),
                }
            }
            FactorKind::Circle => Factor {
                kind,
                mult_short: 0,
                mult_long: 0,
                scale: 1,
                rho: 0.0,
                omega_radius: PI,
                diameter: PI,
                jacobi: None,
            },
        }
    }

    pub fn is_rooted(&self) -> bool {
        self.jacobi.is_some()
    }

    /// Jacobi parameters `(a, b)` of the radial density
    /// `sin^{2a+1}(t/2) cos^{2b+1}(t/2)`; `None` for circle factors.
    pub fn jacobi(&self) -> Option<(f64, f64)> {
        self.jacobi
    }

    pub fn contains(&self, k: i64) -> bool {
        if self.is_rooted() {
            k >= 0 && k % self.scale == 0
        } else {
            true
        }
    }

    pub fn dimension(&self, k: i64) -> u64 {
        match self.jacobi {
            None => 1,
            Some((a, b)) => jacobi_dimension(k.unsigned_abs(), a, b),
        }
    }

    pub fn token(&self) -> String {
        match self.kind {
            FactorKind::Sphere(n) => format!("S{n}"),
            FactorKind::RealProjective(n) => format!("RP{n}"),
            FactorKind::ComplexProjective(n) => format!("CP{n}"),
            FactorKind::Circle => "T1".to_string(),
        }
    }
}

/// `1 / ||R_k||^2` for the normalized Jacobi polynomial `R_k = P_k / P_k(1)`
/// against the probability measure with density `(1-u)^a (1+u)^b`.
fn jacobi_dimension(k: u64, a: f64, b: f64) -> u64 {
    let s = a + b + 1.0;
    let mut d = (2.0 * k as f64 + s) / s;
    for j in 0..k {
        let j = j as f64;
        d *= (s + j) * (a + 1.0 + j) / ((j + 1.0) * (b + 1.0 + j));
    }
    d.round() as u64
}

/// A supported symmetric space: a product of rank-one factors and circles.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceDescriptor {
    factors: Vec<Factor>,
}

impl SpaceDescriptor {
    pub fn new(kinds: &[FactorKind]) -> Self {
        SpaceDescriptor {
            factors: kinds.iter().copied().map(Factor::new).collect(),
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.is_empty() {
            return Err(Error::SpaceSpec(spec.to_string()));
        }
        let mut kinds = Vec::new();
        for token in spec.split(['x', 'X']) {
            let token = token.trim().to_ascii_uppercase();
            let bad = || Error::SpaceSpec(spec.to_string());
            let (prefix, digits) = token
                .find(|c: char| c.is_ascii_digit())
                .map(|i| token.split_at(i))
                .ok_or_else(bad)?;
            let n: u32 = digits.parse().map_err(|_| bad())?;
            match prefix {
                "S" if n >= 2 => kinds.push(FactorKind::Sphere(n)),
                "RP" if n >= 2 => kinds.push(FactorKind::RealProjective(n)),
                "CP" if n >= 2 => kinds.push(FactorKind::ComplexProjective(n)),
                "T" if n >= 1 => kinds.extend(std::iter::repeat_n(FactorKind::Circle, n as usize)),
                _ => return Err(bad()),
            }
        }
        Ok(Self::new(&kinds))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.rho).collect()
    }

    /// Radius `R` with `D_R(o)` inside `K exp(Omega) o`; all support radii in
    /// the Paley-Wiener operations must stay strictly below it.
    pub fn validity_radius(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.omega_radius)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, mu: &Weight) -> bool {
        mu.0.len() == self.rank() && self.factors.iter().zip(&mu.0).all(|(f, &k)| f.contains(k))
    }

    pub fn check_weight(&self, mu: &Weight) -> Result<()> {
        if mu.0.len() != self.rank() {
            return Err(Error::Arity { expected: self.rank(), got: mu.0.len() });
        }
        if !self.contains(mu) {
            return Err(Error::NotAWeight(mu.0.clone()));
        }
        Ok(())
    }

    /// All spherical weights with `|mu| <= max_norm`, sorted by norm and then
    /// lexicographically.
    pub fn lattice_points(&self, max_norm: f64) -> Vec<Weight> {
        let bound = max_norm.max(0.0);
        let kmax = (bound + 1e-9).floor() as i64;
        let ranges: Vec<Vec<i64>> = self
            .factors
            .iter()
            .map(|f| {
                if f.is_rooted() {
                    (0..=kmax).filter(|k| k % f.scale == 0).collect()
                } else {
                    (-kmax..=kmax).collect()
                }
            })
            .collect();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(self.rank());
        cartesian(&ranges, &mut current, &mut |coords| {
            let w = Weight(coords.to_vec());
            if w.norm() <= bound + 1e-9 {
                out.push(w);
            }
        });
        out.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then_with(|| a.0.cmp(&b.0)));
        out
    }

    /// Orbit `{ w(lambda + rho) - rho }` under the product Weyl group.
    pub fn weyl_images(&self, lambda: &SpectralPoint) -> Vec<SpectralPoint> {
        let per_factor: Vec<[Complex64; 2]> = self
            .factors
            .iter()
            .zip(&lambda.0)
            .map(|(f, &l)| [l, -l - 2.0 * f.rho])
            .collect();
        let mut out: Vec<SpectralPoint> = Vec::new();
        let mut idx = vec![0usize; self.rank()];
        loop {
            let p = SpectralPoint(per_factor.iter().zip(&idx).map(|(c, &i)| c[i]).collect());
            if !out.contains(&p) {
                out.push(p);
            }
            let mut j = 0;
            while j < idx.len() {
                idx[j] += 1;
                if idx[j] < 2 {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
        out
    }

    pub fn dimension(&self, mu: &Weight) -> u64 {
        self.factors.iter().zip(&mu.0).map(|(f, &k)| f.dimension(k)).product()
    }

    /// `omega(lambda) = <lambda, lambda + 2 rho>`; the Laplacian acts on
    /// `psi_lambda` by `-omega(lambda)`.
    pub fn eigenvalue(&self, lambda: &SpectralPoint) -> Complex64 {
        self.factors
            .iter()
            .zip(&lambda.0)
            .map(|(f, &l)| l * (l + 2.0 * f.rho))
            .sum()
    }

    pub fn contragredient(&self, mu: &Weight) -> Weight {
        Weight(
            self.factors
                .iter()
                .zip(&mu.0)
                .map(|(f, &k)| if f.is_rooted() { k } else { -k })
                .collect(),
        )
    }
}

fn cartesian(ranges: &[Vec<i64>], current: &mut Vec<i64>, visit: &mut impl FnMut(&[i64])) {
    if current.len() == ranges.len() {
        visit(current);
        return;
    }
    for &k in &ranges[current.len()] {
        current.push(k);
        cartesian(ranges, current, visit);
        current.pop();
    }
}

impl FromStr for SpaceDescriptor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<String> = self.factors.iter().map(Factor::token).collect();
        write!(f, "{}", tokens.join("x"))
    }
}

/// A point of the spherical semilattice, one integer per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    pub fn zero(rank: usize) -> Self {
        Weight(vec![0; rank])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Weight) -> Weight {
        Weight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn to_spectral(&self) -> SpectralPoint {
        SpectralPoint(self.0.iter().map(|&k| Complex64::new(k as f64, 0.0)).collect())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Complex spectral parameter, one coordinate per factor. Real coordinates
/// are the lattice directions; imaginary coordinates are the directions of
/// exponential growth.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint(pub Vec<Complex64>);

impl SpectralPoint {
    pub fn real(coords: &[f64]) -> Self {
        SpectralPoint(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Euclidean norm of the growth part (imaginary coordinates).
    pub fn growth_norm(&self) -> f64 {
        self.0.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
    }

    pub fn lattice_part_norm(&self) -> f64 {
        self.0.iter().map(|z| z.re * z.re).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> SpaceDescriptor {
        SpaceDescriptor::parse("S2").unwrap()
    }

    #[test]
    fn parse_round_trips_tokens() {
        for spec in ["S2", "RP3", "CP2", "S2xT1", "S3xCP2"] {
            assert_eq!(SpaceDescriptor::parse(spec).unwrap().to_string(), spec);
        }
        assert!(SpaceDescriptor::parse("S1").is_err());
        assert!(SpaceDescriptor::parse("Q7").is_err());
        assert!(SpaceDescriptor::parse("").is_err());
        assert_eq!(SpaceDescriptor::parse("T2").unwrap().rank(), 2);
    }

    #[test]
    fn registry_values() {
        let s = SpaceDescriptor::parse("S2xRP3xCP2xT1").unwrap();
        let f = s.factors();
        assert_eq!((f[0].mult_short, f[0].mult_long, f[0].scale), (1, 0, 1));
        assert_eq!((f[1].mult_short, f[1].mult_long, f[1].scale), (2, 0, 2));
        assert_eq!((f[2].mult_short, f[2].mult_long, f[2].scale), (2, 1, 1));
        assert_eq!(f[3].rho, 0.0);
        assert!(f[3].jacobi().is_none());
        for fac in &f[..3] {
            assert_eq!(fac.omega_radius, PI / 2.0);
            let (a, b) = fac.jacobi().unwrap();
            assert!((fac.rho - (a + b + 1.0) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lattice_examples() {
        let pts: Vec<_> = s2().lattice_points(3.5).into_iter().map(|w| w.0[0]).collect();
        assert_eq!(pts, vec![0, 1, 2, 3]);
        let rp2 = SpaceDescriptor::parse("RP2").unwrap();
        let pts: Vec<_> = rp2.lattice_points(5.0).into_iter().map(|w| w.0[0]).collect();
        assert_eq!(pts, vec![0, 2, 4]);
        for spec in ["S2", "CP2", "S2xT1", "RP3xT1"] {
            let s = SpaceDescriptor::parse(spec).unwrap();
            assert_eq!(s.lattice_points(0.0), vec![Weight::zero(s.rank())]);
        }
    }

    #[test]
    fn lattice_is_sorted_and_closed_under_addition() {
        for spec in ["S2", "RP2", "CP2", "S2xT1"] {
            let s = SpaceDescriptor::parse(spec).unwrap();
            let bound = 20.0;
            let pts = s.lattice_points(bound);
            for w in pts.windows(2) {
                assert!(w[0].norm() <= w[1].norm() + 1e-12);
            }
            for a in &pts {
                for b in &pts {
                    let c = a.add(b);
                    assert!(s.contains(&c));
                    if c.norm() <= bound {
                        assert!(pts.binary_search_by(|p| p
                            .norm()
                            .total_cmp(&c.norm())
                            .then_with(|| p.0.cmp(&c.0)))
                        .is_ok());
                    }
                }
            }
        }
    }

    #[test]
    fn weyl_examples() {
        let s = s2();
        let imgs = s.weyl_images(&SpectralPoint::real(&[0.0]));
        assert_eq!(imgs, vec![SpectralPoint::real(&[0.0]), SpectralPoint::real(&[-1.0])]);
        let imgs = s.weyl_images(&SpectralPoint::real(&[-0.5]));
        assert_eq!(imgs, vec![SpectralPoint::real(&[-0.5])]);
        let st = SpaceDescriptor::parse("S2xT1").unwrap();
        let mut imgs: Vec<Vec<f64>> = st
            .weyl_images(&SpectralPoint::real(&[1.0, 3.0]))
            .into_iter()
            .map(|p| p.0.iter().map(|z| z.re).collect())
            .collect();
        imgs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            imgs,
            vec![vec![-2.0, -3.0], vec![-2.0, 3.0], vec![1.0, -3.0], vec![1.0, 3.0]]
        );
    }

    #[test]
    fn dimension_examples() {
        let s = s2();
        assert_eq!(s.dimension(&Weight(vec![0])), 1);
        for l in 0..30 {
            assert_eq!(s.dimension(&Weight(vec![l])), (2 * l + 1) as u64);
        }
        let s3 = SpaceDescriptor::parse("S3").unwrap();
        assert_eq!(s3.dimension(&Weight(vec![4])), 25);
        let cp2 = SpaceDescriptor::parse("CP2").unwrap();
        assert_eq!(cp2.dimension(&Weight(vec![1])), 8);
        assert_eq!(cp2.dimension(&Weight(vec![2])), 27);
        let st = SpaceDescriptor::parse("S2xT1").unwrap();
        assert_eq!(st.dimension(&Weight(vec![2, -7])), 5);
    }

    #[test]
    fn eigenvalue_examples() {
        let s = s2();
        assert_eq!(s.eigenvalue(&SpectralPoint::real(&[0.0])), Complex64::new(0.0, 0.0));
        assert_eq!(s.eigenvalue(&SpectralPoint::real(&[2.0])), Complex64::new(6.0, 0.0));
        assert_eq!(s.eigenvalue(&SpectralPoint::real(&[-1.0])), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn contragredient_examples() {
        let st = SpaceDescriptor::parse("S2xT1").unwrap();
        assert_eq!(st.contragredient(&Weight(vec![2, -5])), Weight(vec![2, 5]));
        assert_eq!(s2().contragredient(&Weight(vec![3])), Weight(vec![3]));
        assert_eq!(s2().contragredient(&Weight(vec![0])), Weight(vec![0]));
    }
}
