//! Radial quadrature for the normalized invariant measure.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::geometry::{Factor, FactorKind, SpaceDescriptor};

/// Classical Jacobi polynomial `P_n^{(a,b)}(x)` and its derivative.
fn jacobi_p_and_derivative(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let eval = |n: usize, a: f64, b: f64| -> f64 {
        let mut p0 = 1.0;
        if n == 0 {
            return p0;
        }
        let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
        for k in 2..=n {
            let k = k as f64;
            let s = 2.0 * k + a + b;
            let p2 = ((s - 1.0) * (s * (s - 2.0) * x + a * a - b * b) * p1
                - 2.0 * (k + a - 1.0) * (k + b - 1.0) * s * p0)
                / (2.0 * k * (k + a + b) * (s - 2.0));
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let p = eval(n, a, b);
    let dp = if n == 0 { 0.0 } else { (n as f64 + a + b + 1.0) / 2.0 * eval(n - 1, a + 1.0, b + 1.0) };
    (p, dp)
}

/// Gauss-Jacobi rule for `(1-u)^a (1+u)^b` on `[-1, 1]` with weights summing
/// to one. Nodes come from the Jacobi matrix and are polished by Newton steps.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jm[(k, k)] = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a + b;
            let beta = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0));
            jm[(k, k + 1)] = beta.sqrt();
            jm[(k + 1, k)] = beta.sqrt();
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = jacobi_p_and_derivative(n, a, b, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = jacobi_p_and_derivative(n, a, b, *x);
        weights.push(1.0 / ((1.0 - *x * *x) * dp * dp));
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (nodes, weights)
}

/// Gauss-Legendre nodes and weights on `[lo, hi]` (weights sum to `hi - lo`).
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (u, w) = gauss_jacobi(n, 0.0, 0.0);
    let half = (hi - lo) / 2.0;
    (
        u.iter().map(|x| lo + half * (x + 1.0)).collect(),
        w.iter().map(|w| w * (hi - lo)).collect(),
    )
}

/// Composite Gauss-Legendre on `[lo, hi]`.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut xs, mut ws) = (Vec::new(), Vec::new());
    let h = (hi - lo) / panels as f64;
    for p in 0..panels {
        let (x, w) = gauss_legendre(order, lo + p as f64 * h, lo + (p + 1) as f64 * h);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Radial density of one factor on its slice, normalized to total mass one.
/// Circle factors use `d theta / 2 pi` on `[-pi, pi]`.
pub fn radial_density(factor: &Factor, t: f64) -> f64 {
    match factor.jacobi() {
        None => 1.0 / (2.0 * PI),
        Some((a, b)) => {
            let (s, c) = ((t / 2.0).sin().abs(), (t / 2.0).cos().abs());
            let mass = beta(a + 1.0, b + 1.0);
            let fold = if matches!(factor.kind, FactorKind::RealProjective(_)) { 2.0 } else { 1.0 };
            fold * s.powf(2.0 * a + 1.0) * c.powf(2.0 * b + 1.0) / mass
        }
    }
}

fn beta(x: f64, y: f64) -> f64 {
    // exact for the half-integer parameters that occur here
    (ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = G[0];
    for (i, g) in G.iter().enumerate().skip(1) {
        acc += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Nodes (radial coordinates) and weights of one factor.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FactorRule {
    /// Gauss rule in `u = cos t` for rooted factors (folded onto `t < pi/2`
    /// for real projective spaces), trapezoid rule for circles.
    pub fn new(factor: &Factor, n: usize) -> Self {
        let n = n.max(1);
        match (factor.kind, factor.jacobi()) {
            (_, None) => FactorRule {
                nodes: (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect(),
                weights: vec![1.0 / n as f64; n],
            },
            (FactorKind::RealProjective(_), Some((a, b))) => {
                let (u, w) = gauss_jacobi(2 * n, a, b);
                let (mut nodes, mut weights) = (Vec::new(), Vec::new());
                for (x, w) in u.iter().zip(&w) {
                    if *x > 0.0 {
                        nodes.push(x.acos());
                        weights.push(2.0 * w);
                    }
                }
                FactorRule { nodes, weights }
            }
            (_, Some((a, b))) => {
                let (u, w) = gauss_jacobi(n, a, b);
                FactorRule { nodes: u.iter().map(|x| x.acos()).collect(), weights: w }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor-product rule for the normalized invariant measure of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub factors: Vec<FactorRule>,
    pub nodes_per_factor: usize,
}

impl Quadrature {
    pub fn new(space: &SpaceDescriptor, n: usize) -> Self {
        Quadrature {
            factors: space.factors().iter().map(|f| FactorRule::new(f, n)).collect(),
            nodes_per_factor: n,
        }
    }

    /// Composite Gauss-Legendre rule on `|t_j| <= radius` with the radial
    /// density folded into the weights. Resolves integrands supported in the
    /// box far better than the global rule when `radius` is small.
    pub fn on_support(space: &SpaceDescriptor, radius: f64) -> Self {
        const PANELS: usize = 30;
        const ORDER: usize = 20;
        let factors = space
            .factors()
            .iter()
            .map(|f| {
                let hi = radius.min(f.diameter);
                let lo = if f.is_rooted() { 0.0 } else { -hi };
                let (nodes, w) = composite_legendre(lo, hi, PANELS, ORDER);
                let weights = nodes.iter().zip(&w).map(|(t, w)| w * radial_density(f, *t)).collect();
                FactorRule { nodes, weights }
            })
            .collect();
        Quadrature { factors, nodes_per_factor: PANELS * ORDER }
    }

    /// Calls `visit(coords, weight)` for every tensor node.
    pub fn for_each(&self, mut visit: impl FnMut(&[f64], f64)) {
        let rank = self.factors.len();
        let mut idx = vec![0usize; rank];
        let mut coords = vec![0.0; rank];
        if self.factors.iter().any(FactorRule::is_empty) {
            return;
        }
        loop {
            let mut w = 1.0;
            for j in 0..rank {
                coords[j] = self.factors[j].nodes[idx[j]];
                w *= self.factors[j].weights[idx[j]];
            }
            visit(&coords, w);
            let mut j = rank;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < self.factors[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }

    /// Number of tensor nodes.
    pub fn size(&self) -> usize {
        self.factors.iter().map(FactorRule::len).product()
    }
}
