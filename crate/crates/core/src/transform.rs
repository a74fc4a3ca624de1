//! Spherical Fourier transform of K-invariant functions on the radial slice.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{SpaceDescriptor, Weight};
use crate::quadrature::Quadrature;
use crate::special::jacobi_poly_table;
use crate::spherical::{radial_derivative, spherical_at, RadialPoint, MAX_DERIVATIVE};

type ValueFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
type DerivativeFn = Arc<dyn Fn(&[f64], &[u32]) -> Result<Complex64> + Send + Sync>;

/// A K-invariant function given by its restriction to the radial slice.
///
/// Coordinates are per factor; the support radius bounds the Euclidean norm
/// of the coordinate vector (circle coordinates enter through `|theta|`).
#[derive(Clone)]
pub struct RadialProfile {
    pub name: String,
    pub support_radius: f64,
    pub smooth: bool,
    value: ValueFn,
    derivative: Option<DerivativeFn>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("name", &self.name)
            .field("support_radius", &self.support_radius)
            .field("smooth", &self.smooth)
            .finish()
    }
}

fn coord_norm(t: &[f64]) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl RadialProfile {
    pub fn new(
        name: impl Into<String>,
        support_radius: f64,
        smooth: bool,
        value: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        RadialProfile { name: name.into(), support_radius, smooth, value: Arc::new(value), derivative: None }
    }

    /// Attaches an exact derivative `(t, orders) -> D^orders f(t)`.
    pub fn with_derivative(
        mut self,
        derivative: impl Fn(&[f64], &[u32]) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// The canonical bump `exp(1 - 1/(1 - (|t|/r)^2))` on `|t| < r`.
    pub fn bump(r: f64) -> Self {
        RadialProfile::new(format!("bump({r})"), r, true, move |t| {
            let q = coord_norm(t) / r;
            if q >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((1.0 - 1.0 / (1.0 - q * q)).exp(), 0.0)
            }
        })
    }

    /// Bump of radius `r` centred at radial distance `center` (an annulus for
    /// `center > 0`), evaluated on the Euclidean radial norm.
    pub fn shell_bump(center: f64, r: f64) -> Self {
        RadialProfile::new(format!("shell({center},{r})"), center + r, true, move |t| {
            let q = (coord_norm(t) - center) / r;
            if q.abs() >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((1.0 - 1.0 / (1.0 - q * q)).exp(), 0.0)
            }
        })
    }

    pub fn constant(c: Complex64) -> Self {
        RadialProfile::new("constant", f64::INFINITY, true, move |_| c)
            .with_derivative(move |_, orders| Ok(if orders.iter().all(|&j| j == 0) { c } else { Complex64::new(0.0, 0.0) }))
    }

    /// `psi_mu` as a profile, with exact derivatives.
    pub fn spherical(space: &SpaceDescriptor, mu: &Weight) -> Self {
        let lambda = mu.to_spectral();
        let (s1, s2) = (space.clone(), space.clone());
        let (l1, l2) = (lambda.clone(), lambda);
        RadialProfile::new(format!("psi{mu}"), f64::INFINITY, true, move |t| {
            spherical_at(&s1, &l1, &RadialPoint::real(t)).unwrap_or(Complex64::new(f64::NAN, 0.0))
        })
        .with_derivative(move |t, orders| radial_derivative(&s2, &l2, &RadialPoint::real(t), orders))
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        (self.value)(t)
    }

    pub fn has_exact_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// Mixed radial derivative; exact when available, otherwise central finite
    /// differences with one Richardson step.
    pub fn derivative(&self, t: &[f64], orders: &[u32]) -> Result<Complex64> {
        if let Some(&j) = orders.iter().find(|&&j| j > MAX_DERIVATIVE) {
            return Err(Error::DerivativeOrder(j));
        }
        let total: u32 = orders.iter().sum();
        if total == 0 {
            return Ok(self.eval(t));
        }
        if let Some(d) = &self.derivative {
            return d(t, orders);
        }
        if !self.smooth {
            return Err(Error::NotSmooth { order: total });
        }
        let mut point = t.to_vec();
        Ok(fd_mixed(&|x: &[f64]| self.eval(x), &mut point, orders, 0))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let (v, d) = (self.value.clone(), self.derivative.clone());
        let mut p = RadialProfile::new(format!("{c}*{}", self.name), self.support_radius, self.smooth, move |t| c * v(t));
        if let Some(d) = d {
            p = p.with_derivative(move |t, o| Ok(c * d(t, o)?));
        }
        p
    }

    /// Pointwise product; derivatives by the Leibniz rule on the factors'
    /// own derivatives.
    pub fn product(&self, other: &RadialProfile) -> Self {
        let (f, g) = (self.clone(), other.clone());
        let (f2, g2) = (self.clone(), other.clone());
        RadialProfile::new(
            format!("{}*{}", self.name, other.name),
            self.support_radius.min(other.support_radius),
            self.smooth && other.smooth,
            move |t| f.eval(t) * g.eval(t),
        )
        .with_derivative(move |t, orders| leibniz(&f2, &g2, t, orders))
    }
}

fn leibniz(f: &RadialProfile, g: &RadialProfile, t: &[f64], orders: &[u32]) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut split = vec![0u32; orders.len()];
    loop {
        let rest: Vec<u32> = orders.iter().zip(&split).map(|(o, s)| o - s).collect();
        let coeff: f64 = orders.iter().zip(&split).map(|(&o, &s)| binomial(o, s)).product();
        acc += coeff * f.derivative(t, &split)? * g.derivative(t, &rest)?;
        let mut j = 0;
        while j < split.len() {
            split[j] += 1;
            if split[j] <= orders[j] {
                break;
            }
            split[j] = 0;
            j += 1;
        }
        if j == split.len() {
            return Ok(acc);
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Step for a `j`-th central difference balancing truncation and roundoff.
fn fd_step(j: u32, s: f64) -> f64 {
    let base = if j == 1 { 1e-5 } else { f64::EPSILON.powf(1.0 / (j as f64 + 4.0)).max(1e-5) };
    base * (1.0 + s.abs())
}

fn central_difference(f: &dyn Fn(f64) -> Complex64, s: f64, j: u32, h: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=j {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(j, k) * f(s + (j as f64 / 2.0 - k as f64) * h);
    }
    acc / h.powi(j as i32)
}

fn fd_mixed(f: &dyn Fn(&[f64]) -> Complex64, point: &mut Vec<f64>, orders: &[u32], axis: usize) -> Complex64 {
    if axis == orders.len() {
        return f(point);
    }
    let j = orders[axis];
    if j == 0 {
        return fd_mixed(f, point, orders, axis + 1);
    }
    let s = point[axis];
    let h = fd_step(j, s);
    let line = |x: f64| {
        let mut p = point.clone();
        p[axis] = x;
        fd_mixed(f, &mut p, orders, axis + 1)
    };
    let coarse = central_difference(&line, s, j, h);
    let fine = central_difference(&line, s, j, h / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Minimum nodes per factor for weights up to `max_norm`.
pub fn adequate_nodes(max_norm: f64) -> usize {
    64usize.max(2 * max_norm.ceil() as usize + 16)
}

/// Node count used by default: the adequacy minimum, but never fewer than
/// 320, which resolves the canonical bump's edge to about 1e-12.
pub fn default_nodes(max_norm: f64) -> usize {
    adequate_nodes(max_norm).max(320)
}

fn check_resolution(quad: &Quadrature, norm: f64) -> Result<()> {
    let needed = adequate_nodes(norm);
    if quad.nodes_per_factor < needed {
        return Err(Error::Resolution { nodes: quad.nodes_per_factor, norm, needed });
    }
    Ok(())
}

/// `integral f dx` against the normalized invariant measure.
pub fn integrate(quad: &Quadrature, f: &dyn Fn(&[f64]) -> Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    quad.for_each(|t, w| acc += w * f(t));
    acc
}

/// `f~(mu) = (f, psi_mu)`.
pub fn forward(space: &SpaceDescriptor, f: &RadialProfile, mu: &Weight, quad: &Quadrature) -> Result<Complex64> {
    space.check_weight(mu)?;
    check_resolution(quad, mu.norm())?;
    let lambda = mu.to_spectral();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = None;
    quad.for_each(|t, w| {
        let v = f.eval(t);
        if v != Complex64::new(0.0, 0.0) {
            match spherical_at(space, &lambda, &RadialPoint::real(t)) {
                Ok(psi) => acc += w * v * psi.conj(),
                Err(e) => err = Some(e),
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

/// Coordinate values of factor `j` that occur in weights of norm at most `max_norm`.
fn factor_coords(space: &SpaceDescriptor, j: usize, max_norm: f64) -> Vec<i64> {
    let f = &space.factors()[j];
    let kmax = (max_norm + 1e-9).floor() as i64;
    if f.is_rooted() {
        (0..=kmax).filter(|k| k % f.scale == 0).collect()
    } else {
        (-kmax..=kmax).collect()
    }
}

/// Conjugated factor spherical functions: rows are coordinates, columns nodes.
fn factor_matrix(space: &SpaceDescriptor, j: usize, coords: &[i64], nodes: &[f64]) -> Vec<Vec<Complex64>> {
    let f = &space.factors()[j];
    match f.jacobi() {
        Some((a, b)) => {
            let kmax = coords.iter().copied().max().unwrap_or(0) as usize;
            let cols: Vec<Vec<f64>> = nodes.iter().map(|t| jacobi_poly_table(kmax, a, b, t.cos())).collect();
            coords
                .iter()
                .map(|&k| cols.iter().map(|c| Complex64::new(c[k as usize], 0.0)).collect())
                .collect()
        }
        None => coords
            .iter()
            .map(|&k| nodes.iter().map(|&t| Complex64::new(0.0, -(k as f64) * t).exp()).collect())
            .collect(),
    }
}

/// Contracts `axis` of a row-major tensor with `mat` (rows replace the axis).
fn mode_product(data: &[Complex64], shape: &[usize], axis: usize, mat: &[Vec<Complex64>]) -> (Vec<Complex64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let n = shape[axis];
    let k = mat.len();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * k * inner];
    for o in 0..outer {
        for (r, row) in mat.iter().enumerate() {
            for (c, &m) in row.iter().enumerate().take(n) {
                if m == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = (o * n + c) * inner;
                let dst = (o * k + r) * inner;
                for i in 0..inner {
                    out[dst + i] += m * data[src + i];
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = k;
    (out, new_shape)
}

/// All coefficients `f~(mu)` with `|mu| <= max_norm`, contracting one factor
/// at a time.
pub fn forward_table(space: &SpaceDescriptor, f: &RadialProfile, max_norm: f64, quad: &Quadrature) -> Result<CoefficientTable> {
    check_resolution(quad, max_norm)?;
    let rank = space.rank();
    let mut shape: Vec<usize> = quad.factors.iter().map(|r| r.len()).collect();
    let mut data = Vec::with_capacity(quad.size());
    quad.for_each(|t, w| data.push(w * f.eval(t)));
    let coords: Vec<Vec<i64>> = (0..rank).map(|j| factor_coords(space, j, max_norm)).collect();
    for (j, c) in coords.iter().enumerate() {
        let mat = factor_matrix(space, j, c, &quad.factors[j].nodes);
        let (d, s) = mode_product(&data, &shape, j, &mat);
        data = d;
        shape = s;
    }
    let index: Vec<HashMap<i64, usize>> =
        coords.iter().map(|c| c.iter().enumerate().map(|(i, &k)| (k, i)).collect()).collect();
    let entries = space
        .lattice_points(max_norm)
        .into_iter()
        .map(|mu| {
            let mut flat = 0;
            for j in 0..rank {
                flat = flat * shape[j] + index[j][&mu.0[j]];
            }
            (mu, data[flat])
        })
        .collect();
    Ok(CoefficientTable::new(entries, max_norm))
}

/// Finite map `mu -> c(mu)` over the weights with `|mu| <= max_norm`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    entries: Vec<(Weight, Complex64)>,
    index: HashMap<Weight, usize>,
    pub max_norm: f64,
}

impl CoefficientTable {
    /// Builds a table; entries are re-sorted by norm, then lexicographically.
    pub fn new(mut entries: Vec<(Weight, Complex64)>, max_norm: f64) -> Self {
        entries.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()).then_with(|| a.0.cmp(&b.0)));
        entries.dedup_by(|a, b| a.0 == b.0);
        let index = entries.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        CoefficientTable { entries, index, max_norm }
    }

    /// The table of `c(mu) = g(mu)` over the lattice.
    pub fn from_fn(space: &SpaceDescriptor, max_norm: f64, mut g: impl FnMut(&Weight) -> Complex64) -> Self {
        let entries = space.lattice_points(max_norm).into_iter().map(|mu| {
            let v = g(&mu);
            (mu, v)
        });
        CoefficientTable::new(entries.collect(), max_norm)
    }

    /// Coefficients of `psi_nu`: `delta_{nu mu} / d(nu)`.
    pub fn schur(space: &SpaceDescriptor, nu: &Weight, max_norm: f64) -> Self {
        let d = space.dimension(nu) as f64;
        CoefficientTable::from_fn(space, max_norm, |mu| {
            Complex64::new(if mu == nu { 1.0 / d } else { 0.0 }, 0.0)
        })
    }

    pub fn get(&self, mu: &Weight) -> Option<Complex64> {
        self.index.get(mu).map(|&i| self.entries[i].1)
    }

    pub fn entries(&self) -> &[(Weight, Complex64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&self, max_norm: f64) -> Self {
        let entries = self.entries.iter().filter(|(w, _)| w.norm() <= max_norm + 1e-9).cloned().collect();
        CoefficientTable::new(entries, max_norm.min(self.max_norm))
    }

    /// Line records `k_1 .. k_r re im` after a header line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# coefficient table max_norm={}\n", self.max_norm);
        for (w, c) in &self.entries {
            let coords: Vec<String> = w.0.iter().map(|k| k.to_string()).collect();
            out.push_str(&format!("{} {:.17e} {:.17e}\n", coords.join(" "), c.re, c.im));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut max_norm = 0.0f64;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            let bad = |m: &str| Error::Parse { line: i + 1, message: m.to_string() };
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.split_whitespace().find_map(|kv| kv.strip_prefix("max_norm=")) {
                    max_norm = v.parse().map_err(|_| bad("bad max_norm"))?;
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() < 3 {
                return Err(bad("expected coordinates followed by re and im"));
            }
            let n = parts.len() - 2;
            let coords = parts[..n].iter().map(|p| p.parse::<i64>()).collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad weight coordinate"))?;
            let re: f64 = parts[n].parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = parts[n + 1].parse().map_err(|_| bad("bad imaginary part"))?;
            let w = Weight(coords);
            max_norm = max_norm.max(w.norm());
            entries.push((w, Complex64::new(re, im)));
        }
        Ok(CoefficientTable::new(entries, max_norm))
    }
}

/// Truncated Fourier series `sum d(mu) c(mu) psi_mu(x)`.
pub fn synthesize(space: &SpaceDescriptor, table: &CoefficientTable, x: &RadialPoint) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (mu, c) in table.entries() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        acc += space.dimension(mu) as f64 * c * spherical_at(space, &mu.to_spectral(), x)?;
    }
    Ok(acc)
}

/// `sup_mu (1+|mu|)^k |c(mu)|` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub max_norm: f64,
    pub sups: Vec<f64>,
}

pub fn decay_profile(table: &CoefficientTable, k_max: u32) -> DecayReport {
    let sups = (0..=k_max)
        .map(|k| {
            table
                .entries()
                .iter()
                .map(|(w, c)| (1.0 + w.norm()).powi(k as i32) * c.norm())
                .fold(0.0, f64::max)
        })
        .collect();
    DecayReport { max_norm: table.max_norm, sups }
}

impl DecayReport {
    /// Per-`k` ratio of the sup at a larger truncation to this one.
    pub fn growth_ratios(&self, larger: &DecayReport) -> Vec<f64> {
        self.sups.iter().zip(&larger.sups).map(|(a, b)| if *a > 0.0 { b / a } else { f64::INFINITY }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> SpaceDescriptor {
        SpaceDescriptor::parse("S2").unwrap()
    }

    #[test]
    fn quadrature_examples() {
        let space = s2();
        let q = Quadrature::new(&space, 3);
        let one = integrate(&q, &|_| Complex64::new(1.0, 0.0));
        assert!((one.re - 1.0).abs() < 1e-14);
        let p1 = integrate(&q, &|t| Complex64::new(t[0].cos().powi(2), 0.0));
        assert!((p1.re - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn forward_of_constant_and_resolution() {
        let space = s2();
        let q = Quadrature::new(&space, 64);
        let c = forward(&space, &RadialProfile::constant(Complex64::new(1.0, 0.0)), &Weight(vec![0]), &q).unwrap();
        assert!((c - 1.0).norm() < 1e-14);
        assert!(matches!(
            forward(&space, &RadialProfile::constant(Complex64::new(1.0, 0.0)), &Weight(vec![30]), &q),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn table_matches_pointwise_forward() {
        let space = SpaceDescriptor::parse("S2xT1").unwrap();
        let q = Quadrature::new(&space, 64);
        let f = RadialProfile::bump(1.0);
        let table = forward_table(&space, &f, 6.0, &q).unwrap();
        for (mu, c) in table.entries() {
            let direct = forward(&space, &f, mu, &q).unwrap();
            assert!((direct - c).norm() < 1e-14, "{mu}");
        }
    }

    #[test]
    fn text_round_trip() {
        let space = SpaceDescriptor::parse("S2xT1").unwrap();
        let t = CoefficientTable::from_fn(&space, 3.0, |mu| Complex64::new(mu.norm(), -(mu.0[1] as f64)));
        let back = CoefficientTable::from_text(&t.to_text()).unwrap();
        assert_eq!(back.entries(), t.entries());
        assert!(CoefficientTable::from_text("1 x 2").is_err());
    }

    #[test]
    fn finite_differences_match_exact() {
        let space = s2();
        let mu = Weight(vec![3]);
        let exact = RadialProfile::spherical(&space, &mu);
        let plain = RadialProfile::new("p3", f64::INFINITY, true, {
            let e = exact.clone();
            move |t| e.eval(t)
        });
        for j in 1..=4 {
            let a = exact.derivative(&[0.7], &[j]).unwrap();
            let b = plain.derivative(&[0.7], &[j]).unwrap();
            assert!((a - b).norm() < 1e-7 * (1.0 + a.norm()), "j={j} {a} {b}");
        }
        let rough = RadialProfile::new("rough", 1.0, false, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(rough.derivative(&[0.2], &[1]), Err(Error::NotSmooth { .. })));
    }

    #[test]
    fn decay_of_schur_table_is_exact() {
        let space = s2();
        let nu = Weight(vec![4]);
        let report = decay_profile(&CoefficientTable::schur(&space, &nu, 10.0), 3);
        for (k, s) in report.sups.iter().enumerate() {
            assert!((s - 5f64.powi(k as i32) / 9.0).abs() < 1e-14);
        }
    }
}
