//! Seeded Monte Carlo estimation and statistical comparison against
//! analytic or quantum targets: experiment configuration, the parallel
//! round runner, and pass/fail reports under the 5-sigma policy.

mod streams;

pub use streams::{round_rng, StreamPurpose};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iterate_family, make_platonic, PlatonicSolid, Polyhedron, UnitVector};
use crate::protocols::{
    Equatorial, FilteredLhs, FullRankComm, Protocol1, Protocol2, Protocol4, ProtocolId,
    Simulation,
};
use crate::quantum::{born_statistics, chsh_optimal_settings, werner_state, CorrelationTriple};

/// Default acceptance policy: empirical statistics must sit within this
/// many standard errors of their targets.
pub const DEFAULT_SIGMA: f64 = 5.0;
/// Default round count.
pub const DEFAULT_ROUNDS: u64 = 1_000_000;
/// Environment variable consulted for the default worker count.
pub const WORKERS_ENV: &str = "LHV_WORKERS";

/// Where a polyhedron comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolySource {
    /// A platonic solid name or `iterate:k`.
    Name(String),
    /// A polyhedron JSON file.
    File(PathBuf),
}

impl PolySource {
    /// Parse a CLI string: platonic names and `iterate:k` resolve by name,
    /// anything else is a file path.
    pub fn parse(s: &str) -> PolySource {
        let known = PlatonicSolid::from_name(s).is_ok() || s.starts_with("iterate:");
        if known {
            PolySource::Name(s.to_string())
        } else {
            PolySource::File(PathBuf::from(s))
        }
    }

    pub fn load(&self) -> Result<Polyhedron> {
        match self {
            PolySource::Name(name) => {
                if let Some(k) = name.strip_prefix("iterate:") {
                    let k: usize = k.parse().map_err(|_| {
                        Error::InvalidInput(format!("bad iteration count in '{name}'"))
                    })?;
                    iterate_family(k)
                } else {
                    Ok(make_platonic(PlatonicSolid::from_name(name)?))
                }
            }
            PolySource::File(path) => {
                if !path.exists() {
                    return Err(Error::InvalidInput(format!(
                        "'{}' is neither a platonic solid, iterate:k, nor an existing polyhedron file",
                        path.display()
                    )));
                }
                Polyhedron::load_json(path)
            }
        }
    }
}

/// Where measurement settings come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingsSource {
    /// Explicit list of (a, b) Bloch-vector pairs.
    Explicit(Vec<([f64; 3], [f64; 3])>),
    /// `count` random pairs drawn from the settings stream.
    Random { count: usize },
    /// The four CHSH-optimal setting pairs.
    ChshOptimal,
}

/// Full experiment description. Serializable as JSON or assembled from
/// CLI flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub protocol: ProtocolId,
    #[serde(default)]
    pub polyhedron: Option<PolySource>,
    /// Werner weight for the one-way model's input state.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Filter angle for the filtered-state model.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Selection depth for the communication protocol.
    #[serde(default)]
    pub n: Option<usize>,
    pub settings: SettingsSource,
    pub rounds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Report copy written here as JSON when set.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Per-round CSV log (`round,a,b,c,T`) written here when set.
    #[serde(default)]
    pub round_log: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::InvalidInput("round count must be >= 1".into()));
        }
        if let Some(PolySource::File(p)) = &self.polyhedron {
            if !p.exists() {
                return Err(Error::InvalidInput(format!(
                    "polyhedron file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&s)?)
    }

    fn workers_or_default(&self) -> usize {
        self.workers
            .or_else(|| {
                std::env::var(WORKERS_ENV)
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or_else(num_threads_default)
    }
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Build the protocol a config describes.
pub fn build_protocol(config: &ExperimentConfig) -> Result<Box<dyn Simulation>> {
    let poly = || -> Result<Polyhedron> {
        config
            .polyhedron
            .clone()
            .unwrap_or(PolySource::Name("icosahedron".into()))
            .load()
    };
    match config.protocol {
        ProtocolId::Protocol1 => Ok(Box::new(Protocol1::new(poly()?)?)),
        ProtocolId::Protocol2 => Ok(Box::new(Protocol2::new(poly()?)?)),
        ProtocolId::Equatorial => Ok(Box::new(Equatorial::new())),
        ProtocolId::Protocol4 => {
            let n = config.n.ok_or_else(|| {
                Error::InvalidInput("the selection protocol needs a depth n".into())
            })?;
            Ok(Box::new(Protocol4::new(poly()?, n)?))
        }
        ProtocolId::FullRankComm => {
            let alpha = config.alpha.ok_or_else(|| {
                Error::InvalidInput("the one-way model needs a state weight alpha".into())
            })?;
            Ok(Box::new(FullRankComm::new(werner_state(alpha)?, poly()?)?))
        }
        ProtocolId::FilteredLhs => {
            let theta = config.theta.ok_or_else(|| {
                Error::InvalidInput("the filtered model needs a filter angle theta".into())
            })?;
            Ok(Box::new(FilteredLhs::new(poly()?, theta)?))
        }
    }
}

/// Materialize the setting pairs for a config.
pub fn build_settings(
    config: &ExperimentConfig,
    protocol: &dyn Simulation,
) -> Result<Vec<(UnitVector, UnitVector)>> {
    match &config.settings {
        SettingsSource::Explicit(list) => list
            .iter()
            .map(|(a, b)| Ok((UnitVector::try_from(*a)?, UnitVector::try_from(*b)?)))
            .collect(),
        SettingsSource::Random { count } => {
            let equatorial = protocol.spec().id == ProtocolId::Equatorial;
            Ok((0..*count)
                .map(|i| {
                    let mut rng = round_rng(config.seed, StreamPurpose::Settings, i as u64);
                    if equatorial {
                        (
                            UnitVector::random_equatorial(&mut rng),
                            UnitVector::random_equatorial(&mut rng),
                        )
                    } else {
                        (UnitVector::random(&mut rng), UnitVector::random(&mut rng))
                    }
                })
                .collect())
        }
        SettingsSource::ChshOptimal => {
            let s = chsh_optimal_settings();
            Ok(vec![
                (s.a1, s.b1),
                (s.a1, s.b2),
                (s.a2, s.b1),
                (s.a2, s.b2),
            ])
        }
    }
}

/// Standard errors of the three statistics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StdErrors {
    pub se_a: f64,
    pub se_b: f64,
    pub se_ab: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZScores {
    pub z_a: f64,
    pub z_b: f64,
    pub z_ab: f64,
}

/// Communication statistics of one setting pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CommReport {
    pub mean_c: f64,
    pub target_mean_c: Option<f64>,
    pub se_c: Option<f64>,
    pub z_c: Option<f64>,
    pub worst_c: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairReport {
    pub setting_a: [f64; 3],
    pub setting_b: [f64; 3],
    pub rounds: u64,
    pub empirical: CorrelationTriple,
    pub target: CorrelationTriple,
    pub stderr: Option<StdErrors>,
    pub z_scores: Option<ZScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comm: Option<CommReport>,
    /// None when standard errors are undefined (N = 1).
    pub pass: Option<bool>,
}

/// Which reference the targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSource {
    Analytic,
    Quantum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub protocol: crate::protocols::ProtocolSpec,
    pub target_source: TargetSource,
    pub seed: u64,
    pub workers: usize,
    pub rounds_per_pair: u64,
    pub sigma_policy: f64,
    pub pairs: Vec<PairReport>,
    pub pass: Option<bool>,
}

#[derive(Default, Clone, Copy)]
struct Accum {
    n: u64,
    sum_a: i64,
    sum_b: i64,
    sum_ab: i64,
    sum_c: u64,
    sum_c2: u64,
    max_c: u32,
    has_c: bool,
}

impl Accum {
    fn merge(mut self, o: Accum) -> Accum {
        self.n += o.n;
        self.sum_a += o.sum_a;
        self.sum_b += o.sum_b;
        self.sum_ab += o.sum_ab;
        self.sum_c += o.sum_c;
        self.sum_c2 += o.sum_c2;
        self.max_c = self.max_c.max(o.max_c);
        self.has_c |= o.has_c;
        self
    }

    fn push(&mut self, out: &crate::protocols::RoundOutcome) {
        self.n += 1;
        self.sum_a += i64::from(out.a);
        self.sum_b += i64::from(out.b);
        self.sum_ab += i64::from(out.a) * i64::from(out.b);
        if let Some(c) = out.message {
            self.has_c = true;
            self.sum_c += u64::from(c);
            self.sum_c2 += u64::from(c) * u64::from(c);
            self.max_c = self.max_c.max(c);
        }
    }
}

fn mean_se(sum: i64, n: u64) -> (f64, Option<f64>) {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, None);
    }
    // For +-1 outcomes the sample variance is (n - n mean^2)/(n-1).
    let var = ((nf - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, Some((var / nf).sqrt()))
}

fn run_pair(
    protocol: &dyn Simulation,
    a: &UnitVector,
    b: &UnitVector,
    config: &ExperimentConfig,
    pair_index: usize,
    workers: usize,
) -> Result<Accum> {
    protocol.prepare(a, b)?;
    let n = config.rounds;
    let base = pair_index as u64 * n;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
    let seed = config.seed;
    let acc = pool.install(|| {
        (0..n)
            .into_par_iter()
            .fold(
                || Ok(Accum::default()),
                |acc: Result<Accum>, r| {
                    let mut acc = acc?;
                    let idx = base + r;
                    let mut shared = round_rng(seed, StreamPurpose::Shared, idx);
                    let mut local = round_rng(seed, StreamPurpose::Local, idx);
                    let out = protocol.round(a, b, &mut shared, &mut local)?;
                    acc.push(&out);
                    Ok(acc)
                },
            )
            .reduce(
                || Ok(Accum::default()),
                |x, y| Ok(x?.merge(y?)),
            )
    })?;
    Ok(acc)
}

fn pair_report(
    protocol: &dyn Simulation,
    a: &UnitVector,
    b: &UnitVector,
    acc: &Accum,
    target: CorrelationTriple,
    sigma: f64,
) -> PairReport {
    let n = acc.n;
    let (mean_a, se_a) = mean_se(acc.sum_a, n);
    let (mean_b, se_b) = mean_se(acc.sum_b, n);
    let (mean_ab, se_ab) = mean_se(acc.sum_ab, n);
    let empirical = CorrelationTriple {
        mean_a,
        mean_b,
        corr_ab: mean_ab,
    };
    let stderr = match (se_a, se_b, se_ab) {
        (Some(se_a), Some(se_b), Some(se_ab)) => Some(StdErrors { se_a, se_b, se_ab }),
        _ => None,
    };
    // A zero standard error (deterministic statistic) passes iff the
    // difference is itself zero at round-off scale.
    let z_of = |diff: f64, se: f64| {
        if se > 0.0 {
            diff / se
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let (z_scores, mut pass) = if let Some(se) = &stderr {
        let z = ZScores {
            z_a: z_of(empirical.mean_a - target.mean_a, se.se_a),
            z_b: z_of(empirical.mean_b - target.mean_b, se.se_b),
            z_ab: z_of(empirical.corr_ab - target.corr_ab, se.se_ab),
        };
        let ok = z.z_a.abs() < sigma && z.z_b.abs() < sigma && z.z_ab.abs() < sigma;
        (Some(z), Some(ok))
    } else {
        (None, None)
    };

    let comm = if acc.has_c {
        let nf = n as f64;
        let mean_c = acc.sum_c as f64 / nf;
        let target_mean_c = protocol.mean_communication();
        let (se_c, z_c) = if n >= 2 {
            let var = ((acc.sum_c2 as f64 - nf * mean_c * mean_c) / (nf - 1.0)).max(0.0);
            let se = (var / nf).sqrt();
            let z = target_mean_c.map(|t| z_of(mean_c - t, se));
            (Some(se), z)
        } else {
            (None, None)
        };
        if let (Some(z), Some(ok)) = (z_c, pass) {
            pass = Some(ok && z.abs() < sigma);
        }
        Some(CommReport {
            mean_c,
            target_mean_c,
            se_c,
            z_c,
            worst_c: acc.max_c,
        })
    } else {
        None
    };

    PairReport {
        setting_a: a.as_array(),
        setting_b: b.as_array(),
        rounds: n,
        empirical,
        target,
        stderr,
        z_scores,
        comm,
        pass,
    }
}

fn run_with_targets(config: &ExperimentConfig, source: TargetSource) -> Result<EstimateReport> {
    config.validate()?;
    let protocol = build_protocol(config)?;
    let settings = build_settings(config, protocol.as_ref())?;
    let workers = config.workers_or_default();
    let sigma = config.sigma.unwrap_or(DEFAULT_SIGMA);

    let reference = match source {
        TargetSource::Quantum => Some(protocol.reference_state()?),
        TargetSource::Analytic => None,
    };

    let mut pairs = Vec::with_capacity(settings.len());
    for (i, (a, b)) in settings.iter().enumerate() {
        let acc = run_pair(protocol.as_ref(), a, b, config, i, workers)?;
        let target = match &reference {
            Some(rho) => born_statistics(rho, a, b)?,
            None => protocol.closed_form(a, b)?,
        };
        pairs.push(pair_report(protocol.as_ref(), a, b, &acc, target, sigma));
    }
    let pass = if pairs.iter().any(|p| p.pass.is_none()) {
        None
    } else {
        Some(pairs.iter().all(|p| p.pass == Some(true)))
    };
    let report = EstimateReport {
        protocol: protocol.spec().clone(),
        target_source: source,
        seed: config.seed,
        workers,
        rounds_per_pair: config.rounds,
        sigma_policy: sigma,
        pairs,
        pass,
    };
    if let Some(path) = &config.output {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    if let Some(path) = &config.round_log {
        write_round_log(config, protocol.as_ref(), &settings, path)?;
    }
    Ok(report)
}

/// Run an experiment against the protocol's closed-form targets.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EstimateReport> {
    run_with_targets(config, TargetSource::Analytic)
}

/// Run an experiment against Born statistics of the reference state.
pub fn verify_against_quantum(config: &ExperimentConfig) -> Result<EstimateReport> {
    run_with_targets(config, TargetSource::Quantum)
}

/// Sequentially replay the experiment's rounds into a CSV log with the
/// frozen schema `round,a,b,c,T`.
pub fn write_round_log(
    config: &ExperimentConfig,
    protocol: &dyn Simulation,
    settings: &[(UnitVector, UnitVector)],
    path: &Path,
) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "round,a,b,c,T")?;
    for (i, (a, b)) in settings.iter().enumerate() {
        let base = i as u64 * config.rounds;
        for r in 0..config.rounds {
            let idx = base + r;
            let mut shared = round_rng(config.seed, StreamPurpose::Shared, idx);
            let mut local = round_rng(config.seed, StreamPurpose::Local, idx);
            let out = protocol.round(a, b, &mut shared, &mut local)?;
            writeln!(
                f,
                "{},{},{},{},{}",
                idx,
                out.a,
                out.b,
                out.message.map(|c| c.to_string()).unwrap_or_default(),
                out.selection.map(|t| t.to_string()).unwrap_or_default()
            )?;
        }
    }
    Ok(())
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// Report CSV with a frozen column order.
pub fn report_to_csv(report: &EstimateReport) -> String {
    let mut s = String::from(
        "pair,ax,ay,az,bx,by,bz,rounds,mean_a,mean_b,corr_ab,target_a,target_b,target_ab,\
         se_a,se_b,se_ab,z_a,z_b,z_ab,mean_c,target_c,se_c,z_c,worst_c,pass\n",
    );
    for (i, p) in report.pairs.iter().enumerate() {
        let se = p.stderr;
        let z = p.z_scores;
        let comm = p.comm;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            i,
            fmt17(p.setting_a[0]),
            fmt17(p.setting_a[1]),
            fmt17(p.setting_a[2]),
            fmt17(p.setting_b[0]),
            fmt17(p.setting_b[1]),
            fmt17(p.setting_b[2]),
            p.rounds,
            fmt17(p.empirical.mean_a),
            fmt17(p.empirical.mean_b),
            fmt17(p.empirical.corr_ab),
            fmt17(p.target.mean_a),
            fmt17(p.target.mean_b),
            fmt17(p.target.corr_ab),
            fmt_opt(se.map(|s| s.se_a)),
            fmt_opt(se.map(|s| s.se_b)),
            fmt_opt(se.map(|s| s.se_ab)),
            fmt_opt(z.map(|z| z.z_a)),
            fmt_opt(z.map(|z| z.z_b)),
            fmt_opt(z.map(|z| z.z_ab)),
            fmt_opt(comm.map(|c| c.mean_c)),
            fmt_opt(comm.and_then(|c| c.target_mean_c)),
            fmt_opt(comm.and_then(|c| c.se_c)),
            fmt_opt(comm.and_then(|c| c.z_c)),
            comm.map(|c| c.worst_c.to_string()).unwrap_or_default(),
            p.pass.map(|b| b.to_string()).unwrap_or_default(),
        ));
    }
    s
}
