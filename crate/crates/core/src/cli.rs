//! Batch experiments with line-oriented result tables and a summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::InvariantDistribution;
use crate::error::{Error, Result};
use crate::geometry::{SpaceDescriptor, Weight};
use crate::paleywiener::{
    default_directions, distribution_transform, estimate_type, extend_function, singsupp_test, solve, HoloTransform,
    LaplacePolynomial, Patch, SingSuppGrid, TypeFit,
};
use crate::quadrature::Quadrature;
use crate::spherical::RadialPoint;
use crate::transform::{
    adequate_nodes, decay_profile, default_nodes, forward_table, synthesize, CoefficientTable, RadialProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Lattice,
    Schur,
    Roundtrip,
    TypeRecovery,
    Singsupp,
    Solve,
    Decay,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Lattice => "lattice",
            Experiment::Schur => "schur",
            Experiment::Roundtrip => "roundtrip",
            Experiment::TypeRecovery => "type-recovery",
            Experiment::Singsupp => "singsupp",
            Experiment::Solve => "solve",
            Experiment::Decay => "decay",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spw", about = "Spherical Fourier analysis and Paley-Wiener experiments on compact symmetric spaces")]
pub struct Args {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// Space spec such as S2, RP3, CP2 or S2xT1.
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long)]
    pub max_norm: Option<f64>,
    #[arg(long)]
    pub bump_r: Option<f64>,
    #[arg(long)]
    pub atom_s: Option<f64>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// Pass/fail threshold; defaults depend on the experiment.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Key-value config file (`key = value` per line); flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for the result table and summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub space: String,
    pub max_norm: f64,
    pub bump_r: f64,
    pub atom_s: f64,
    pub sigma_max: f64,
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
}

fn default_tol(e: Experiment) -> f64 {
    match e {
        Experiment::Lattice => 0.0,
        Experiment::Schur => 1e-9,
        Experiment::Roundtrip => 1e-6,
        Experiment::TypeRecovery => 0.05,
        Experiment::Singsupp => 0.5,
        Experiment::Solve => 1e-8,
        Experiment::Decay => 1.1,
    }
}

fn default_max_norm(e: Experiment) -> f64 {
    match e {
        Experiment::Lattice | Experiment::Schur => 20.0,
        Experiment::Solve => 30.0,
        _ => 40.0,
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: "expected `key = value`".into() })?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn from_args(args: &Args) -> Result<Self> {
        let file = match &args.config {
            Some(p) => parse_key_values(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let num = |key: &str, flag: Option<f64>, default: f64| -> Result<f64> {
            match (flag, file.get(key)) {
                (Some(v), _) => Ok(v),
                (None, Some(s)) => s.parse().map_err(|_| Error::Config(format!("`{key}` is not a number: {s}"))),
                (None, None) => Ok(default),
            }
        };
        for key in file.keys() {
            if !["space", "max-norm", "bump-r", "atom-s", "sigma-max", "tol", "seed", "out"].contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
        }
        let e = args.experiment;
        let seed = match (args.seed, file.get("seed")) {
            (Some(s), _) => s,
            (None, Some(s)) => s.parse().map_err(|_| Error::Config(format!("`seed` is not an integer: {s}")))?,
            (None, None) => 0,
        };
        let cfg = ExperimentConfig {
            experiment: e,
            space: args.space.clone().or_else(|| file.get("space").cloned()).unwrap_or_else(|| "S2".into()),
            max_norm: num("max-norm", args.max_norm, default_max_norm(e))?,
            bump_r: num("bump-r", args.bump_r, 0.5)?,
            atom_s: num("atom-s", args.atom_s, 0.4)?,
            sigma_max: num("sigma-max", args.sigma_max, TypeFit::default().sigma_max)?,
            tol: num("tol", args.tol, default_tol(e))?,
            seed,
            out: args.out.clone().or_else(|| file.get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(".")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let space = SpaceDescriptor::parse(&self.space)?;
        if self.max_norm < 1.0 {
            return Err(Error::Config(format!("max-norm must be at least 1, got {}", self.max_norm)));
        }
        let bound = space.validity_radius();
        for (name, r) in [("bump-r", self.bump_r), ("atom-s", self.atom_s)] {
            if !(r > 0.0 && r < bound) {
                return Err(Error::Config(format!("{name} = {r} must lie in (0, {bound:.6})")));
            }
        }
        Ok(())
    }
}

/// One probe line of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub probe: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub summary: String,
    pub pass: bool,
}

impl Outcome {
    fn new(records: Vec<Record>, headline: String) -> Self {
        let pass = records.iter().all(|r| r.pass);
        let failed = records.iter().filter(|r| !r.pass).count();
        let summary = format!(
            "{headline}\nprobes: {} passed, {failed} failed\nverdict: {}\n",
            records.len() - failed,
            if pass { "PASS" } else { "FAIL" }
        );
        Outcome { records, summary, pass }
    }

    /// Result table with a self-describing header.
    pub fn table(&self, cfg: &ExperimentConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# experiment={} space={} max_norm={} bump_r={} atom_s={} sigma_max={} tol={} seed={}",
            cfg.experiment.name(),
            cfg.space,
            cfg.max_norm,
            cfg.bump_r,
            cfg.atom_s,
            cfg.sigma_max,
            cfg.tol,
            cfg.seed
        );
        out.push_str("probe\tvalue\tbound\tpass\n");
        for r in &self.records {
            let _ = writeln!(out, "{}\t{:.9e}\t{:.9e}\t{}", r.probe, r.value, r.bound, r.pass);
        }
        out
    }
}

fn rec(probe: impl Into<String>, value: f64, bound: f64, pass: bool) -> Record {
    Record { probe: probe.into(), value, bound, pass }
}

/// Runs one experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let space = SpaceDescriptor::parse(&cfg.space)?;
    match cfg.experiment {
        Experiment::Lattice => lattice(&space, cfg),
        Experiment::Schur => schur(&space, cfg),
        Experiment::Roundtrip => roundtrip(&space, cfg),
        Experiment::TypeRecovery => type_recovery(&space, cfg),
        Experiment::Singsupp => singsupp(&space, cfg),
        Experiment::Solve => solve_examples(&space, cfg),
        Experiment::Decay => decay(&space, cfg),
    }
}

/// Runs an experiment and writes `<out>/<name>.tsv` and `<out>/<name>.summary.txt`.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let outcome = execute(cfg)?;
    write_outputs(cfg, &outcome, &cfg.out)?;
    Ok(outcome)
}

fn write_outputs(cfg: &ExperimentConfig, outcome: &Outcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = cfg.experiment.name();
    fs::write(dir.join(format!("{name}.tsv")), outcome.table(cfg))?;
    fs::write(dir.join(format!("{name}.summary.txt")), &outcome.summary)?;
    Ok(())
}

fn lattice(space: &SpaceDescriptor, cfg: &ExperimentConfig) -> Result<Outcome> {
    let pts = space.lattice_points(cfg.max_norm);
    let mut records: Vec<Record> = pts
        .iter()
        .map(|mu| rec(format!("mu={mu} d={}", space.dimension(mu)), mu.norm(), cfg.max_norm, space.contains(mu)))
        .collect();
    let mut closed = true;
    for a in &pts {
        for b in &pts {
            let s = a.add(b);
            if s.norm() <= cfg.max_norm && !pts.contains(&s) {
                closed = false;
            }
        }
    }
    records.push(rec("closure-under-addition", if closed { 0.0 } else { 1.0 }, 0.0, closed));
    let listing: Vec<String> = pts.iter().map(|w| w.to_string()).collect();
    Ok(Outcome::new(records, format!("lattice {} |mu| <= {}: {}", space, cfg.max_norm, listing.join(" "))))
}

fn schur(space: &SpaceDescriptor, cfg: &ExperimentConfig) -> Result<Outcome> {
    let quad = Quadrature::new(space, adequate_nodes(cfg.max_norm));
    let pts = space.lattice_points(cfg.max_norm);
    let mut records = Vec::new();
    let mut worst: f64 = 0.0;
    for nu in &pts {
        let table = forward_table(space, &RadialProfile::spherical(space, nu), cfg.max_norm, &quad)?;
        let err = table
            .entries()
            .iter()
            .map(|(mu, c)| (space.dimension(mu) as f64 * c - if mu == nu { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        records.push(rec(format!("nu={nu}"), err, cfg.tol, err < cfg.tol));
    }
    Ok(Outcome::new(records, format!("schur {}: max |d(mu) psi_nu~(mu) - delta| = {worst:.3e}", space)))
}

fn roundtrip(space: &SpaceDescriptor, cfg: &ExperimentConfig) -> Result<Outcome> {
    let f = RadialProfile::bump(cfg.bump_r);
    let quad = Quadrature::new(space, default_nodes(cfg.max_norm));
    let table = forward_table(space, &f, cfg.max_norm, &quad)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points: Vec<Vec<f64>> = Vec::new();
    let grid = 40;
    for i in 0..=grid {
        let t = 1.2 * cfg.bump_r * i as f64 / grid as f64;
        points.push(vec![t; 1].into_iter().chain(std::iter::repeat_n(0.0, space.rank() - 1)).collect());
    }
    for _ in 0..20 {
        points.push(space.factors().iter().map(|fac| rng.gen_range(0.0..(1.2 * cfg.bump_r).min(fac.diameter))).collect());
    }
    let mut records = Vec::new();
    let mut worst: f64 = 0.0;
    for p in &points {
        let err = (synthesize(space, &table, &RadialPoint::real(p))? - f.eval(p)).norm();
        worst = worst.max(err);
        let coords: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
        records.push(rec(format!("t=({})", coords.join(",")), err, cfg.tol, err < cfg.tol));
    }
    Ok(Outcome::new(
        records,
        format!("roundtrip {} bump({}) max_norm={}: sup error {worst:.3e}", space, cfg.bump_r, cfg.max_norm),
    ))
}

fn type_recovery(space: &SpaceDescriptor, cfg: &ExperimentConfig) -> Result<Outcome> {
    let fit = TypeFit { sigma_max: cfg.sigma_max, ..TypeFit::default() };
    let dirs = default_directions(space.rank());
    let mut records = Vec::new();
    let mut lines = Vec::new();
    let bump = extend_function(space, &RadialProfile::bump(cfg.bump_r))?;
    let mut pos = vec![0.0; space.rank()];
    pos[0] = cfg.atom_s;
    let atom = InvariantDistribution::atom(pos, vec![0; space.rank()], Complex64::new(1.0, 0.0));
    let atom_phi = distribution_transform(space, &atom, 0.1)?;
    for (name, phi, r) in [("bump", &bump, cfg.bump_r), ("atom", &atom_phi, cfg.atom_s)] {
        let g = estimate_type(space, phi, &dirs, &fit)?;
        let rel = (g.type_radius - r).abs() / r;
        records.push(rec(format!("{name} r={r} r_hat={:.6}", g.type_radius), rel, cfg.tol, rel < cfg.tol && g.fit_ok));
        lines.push(format!("{name}: {}", g.to_text()));
    }
    Ok(Outcome::new(records, format!("type-recovery {}\n{}", space, lines.join("\n"))))
}

fn singsupp(space: &SpaceDescriptor, cfg: &ExperimentConfig) -> Result<Outcome> {
    let one = Complex64::new(1.0, 0.0);
    let rank = space.rank();
    let at = |s: f64| {
        let mut p = vec![0.0; rank];
        p[0] = s;
        InvariantDistribution::atom(p, vec![0; rank], one)
    };
    let cases = [
        ("delta s=0.3", InvariantDistribution::delta(rank), 0.3, true),
        ("atom(0.5) s=0.3", at(0.5), 0.3, false),
        ("atom(0.3)+bump(0.6) s=0.3", at(0.3).with_density(RadialProfile::bump(0.6)), 0.3, true),
    ];
    let grid = SingSuppGrid { threshold: cfg.tol, ..SingSuppGrid::default() };
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (name, dist, s, expect) in cases {
        let phi = distribution_transform(space, &dist, 0.1)?;
        let report = singsupp_test(space, &phi, s, 0, &[1.0, 2.0, 4.0, 8.0], &grid)?;
        let exps: Vec<String> = report.rows.iter().map(|r| format!("m={}:{:.3}", r.m, r.exponent)).collect();
        lines.push(format!("{name}: verdict {} (expected {}), exponents {}", verdict(report.pass), verdict(expect), exps.join(" ")));
        records.push(rec(name, report.spread, cfg.tol, report.pass == expect));
    }
    Ok(Outcome::new(records, format!("singsupp {}\n{}", space, lines.join("\n"))))
}

fn verdict(pass: bool) -> &'static str {
    if pass { "pass" } else { "fail" }
}

/// Largest `|symbol(mu) T~(mu) - F~(mu)|` on the lattice.
pub fn multiplier_residual(
    space: &SpaceDescriptor,
    p: &LaplacePolynomial,
    solution: &HoloTransform,
    phi_f: &HoloTransform,
    max_norm: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in space.lattice_points(max_norm) {
        let l = mu.to_spectral();
        worst = worst.max((p.symbol(space, &l) * solution.eval(&l)? - phi_f.eval(&l)?).norm());
    }
    Ok(worst)
}

/// The three standard solvability examples: `(Delta, psi_nu)`, `(Delta, 1)`
/// and `(Delta - 1, delta_o)`.
pub fn solve_cases(space: &SpaceDescriptor, max_norm: f64) -> Vec<(&'static str, LaplacePolynomial, HoloTransform, bool)> {
    let rank = space.rank();
    let mut nu = Weight::zero(rank);
    nu.0[0] = 2 * space.factors()[0].scale;
    vec![
        (
            "Delta T = psi_nu",
            LaplacePolynomial::new(vec![0.0, 1.0]),
            HoloTransform::from_table(space, &CoefficientTable::schur(space, &nu, max_norm)),
            true,
        ),
        (
            "Delta T = 1",
            LaplacePolynomial::new(vec![0.0, 1.0]),
            HoloTransform::from_table(space, &CoefficientTable::schur(space, &Weight::zero(rank), max_norm)),
            false,
        ),
        (
            "(Delta - 1) T = delta_o",
            LaplacePolynomial::new(vec![-1.0, 1.0]),
            HoloTransform::constant(rank, Complex64::new(1.0, 0.0)),
            true,
        ),
    ]
}

fn solve_examples(space: &SpaceDescriptor, cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (name, p, phi, expect) in solve_cases(space, cfg.max_norm) {
        let report = solve(space, &p, &phi, cfg.max_norm, 1e-9, Patch::mean())?;
        let residual = match &report.solution {
            Some(t) => multiplier_residual(space, &p, t, &phi, cfg.max_norm)?,
            None => 0.0,
        };
        let ok = report.solvable == expect && residual < cfg.tol;
        lines.push(format!(
            "{name}: {} (expected {}), entire={}, residual {residual:.3e}",
            if report.solvable { "solvable" } else { "unsolvable" },
            if expect { "solvable" } else { "unsolvable" },
            report.entire
        ));
        records.push(rec(name, residual, cfg.tol, ok));
    }
    Ok(Outcome::new(records, format!("solve {}\n{}", space, lines.join("\n"))))
}

fn decay(space: &SpaceDescriptor, cfg: &ExperimentConfig) -> Result<Outcome> {
    let f = RadialProfile::bump(cfg.bump_r);
    let small = forward_table(space, &f, cfg.max_norm, &Quadrature::new(space, default_nodes(cfg.max_norm)))?;
    let b2 = 2.0 * cfg.max_norm;
    let large = forward_table(space, &f, b2, &Quadrature::new(space, default_nodes(b2)))?;
    let ratios = decay_profile(&small, 8).growth_ratios(&decay_profile(&large, 8));
    let records = ratios.iter().enumerate().map(|(k, r)| rec(format!("k={k}"), *r, cfg.tol, *r < cfg.tol)).collect();
    Ok(Outcome::new(
        records,
        format!("decay {} bump({}) sup ratios between max_norm {} and {b2}", space, cfg.bump_r, cfg.max_norm),
    ))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let cfg = match ExperimentConfig::from_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(o) => {
            print!("{}", o.summary);
            if o.pass { 0 } else { 1 }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
