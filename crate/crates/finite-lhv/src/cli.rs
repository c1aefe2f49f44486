//! Command-line interface. The binary is a thin wrapper over [`run`];
//! every subcommand maps onto library calls so tests can drive the CLI
//! in-process.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numerical error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis;
use crate::error::{Error, Result};
use crate::geometry::{
    gamma_profile, inscribed_radius, inscribed_radius_of, iterate_family_with_cap, make_platonic,
    Polyhedron, PlatonicSolid, UnitVector, FAMILY_VERTEX_CAP,
};
use crate::harness::{
    report_to_csv, run_experiment, verify_against_quantum, ExperimentConfig, PolySource,
    SettingsSource, DEFAULT_ROUNDS,
};
use crate::localpolytope::{
    behavior_from_state, chsh_behavior, local_membership, Membership,
};
use crate::lp::LpMode;
use crate::protocols::ProtocolId;
use crate::quantum::werner_state;

#[derive(Debug, Parser)]
#[command(
    name = "lhv",
    about = "Finite-shared-randomness local models for two-qubit entangled states",
    version
)]
struct Cli {
    /// Master seed for all randomness streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: LHV_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run linear programs in exact rational arithmetic.
    #[arg(long, global = true)]
    exact_rational: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Polyhedron inspection, export, and the iterated family.
    Poly {
        #[command(subcommand)]
        cmd: PolyCmd,
    },
    /// Monte Carlo run against the protocol's closed-form targets.
    Simulate(SimArgs),
    /// Monte Carlo run against exact quantum statistics.
    Verify(SimArgs),
    /// Visibility table of the antipodally closed platonic solids.
    Table1,
    /// Resource/visibility trade-off curves.
    Curve {
        #[command(subcommand)]
        cmd: CurveCmd,
    },
    /// Analytic bounds.
    Bound {
        #[command(subcommand)]
        cmd: BoundCmd,
    },
    /// Local-polytope membership and model extraction.
    Lp {
        #[command(subcommand)]
        cmd: LpCmd,
    },
}

#[derive(Debug, Subcommand)]
enum PolyCmd {
    /// Print vertex count, gamma profile, inscribed radii and visibilities.
    Info { poly: String },
    /// Emit a polyhedron JSON file.
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Walk the iterated family up to k steps.
    Iterate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        cap: Option<usize>,
        /// Export the final member as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliProtocol {
    #[value(name = "1", alias = "protocol1", alias = "p1")]
    Protocol1,
    #[value(name = "2", alias = "protocol2", alias = "p2")]
    Protocol2,
    #[value(name = "equatorial", alias = "eq")]
    Equatorial,
    #[value(name = "4", alias = "protocol4", alias = "p4")]
    Protocol4,
    #[value(name = "fullrank-comm", alias = "fullrank")]
    FullRankComm,
    #[value(name = "filtered-lhs", alias = "filtered")]
    FilteredLhs,
}

impl From<CliProtocol> for ProtocolId {
    fn from(p: CliProtocol) -> Self {
        match p {
            CliProtocol::Protocol1 => ProtocolId::Protocol1,
            CliProtocol::Protocol2 => ProtocolId::Protocol2,
            CliProtocol::Equatorial => ProtocolId::Equatorial,
            CliProtocol::Protocol4 => ProtocolId::Protocol4,
            CliProtocol::FullRankComm => ProtocolId::FullRankComm,
            CliProtocol::FilteredLhs => ProtocolId::FilteredLhs,
        }
    }
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Experiment config JSON; flags below override nothing when set.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    protocol: Option<CliProtocol>,
    /// Polyhedron: platonic name, iterate:k, or a JSON file path.
    #[arg(long)]
    poly: Option<String>,
    /// Werner weight of the one-way model's input state.
    #[arg(long)]
    alpha: Option<f64>,
    /// Filter angle of the filtered model.
    #[arg(long)]
    theta: Option<f64>,
    /// Selection depth of the communication protocol.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rounds: Option<u64>,
    /// Settings source: random:K, chsh, or file:PATH (JSON pair list).
    #[arg(long, default_value = "random:10")]
    settings: String,
    /// Acceptance threshold in standard errors.
    #[arg(long)]
    sigma: Option<f64>,
    /// Write the JSON report here as well.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a per-round CSV log (round,a,b,c,T).
    #[arg(long)]
    round_log: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CurveCmd {
    /// Shared randomness vs visibility along the iterated family.
    Fig1 {
        #[arg(long, default_value_t = 6)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Mean communication vs visibility for the selection protocol.
    Fig2 {
        #[arg(long)]
        poly: Option<String>,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum BoundCmd {
    /// Worst-case directional coverage of a 4-vertex hidden-state set.
    AppB {
        #[arg(long)]
        solid: Option<String>,
        #[arg(long)]
        poly: Option<PathBuf>,
        /// Also sweep this many random 4-vertex sets for comparison.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum LpCmd {
    /// Decide local-polytope membership of a Werner behavior.
    Membership {
        #[arg(long)]
        alpha: f64,
        /// Directions: one per antipodal pair of this polyhedron.
        #[arg(long)]
        poly: Option<String>,
        /// Use the four CHSH-optimal settings instead.
        #[arg(long)]
        chsh: bool,
    },
    /// Extract the explicit finite-shared-randomness model as JSON.
    Extract {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        poly: Option<String>,
        #[arg(long)]
        chsh: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Entry point used by the binary.
pub fn run_from_env() -> i32 {
    run(std::env::args().collect())
}

/// Parse and execute; returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // Help and version land on stdout with exit 0; usage errors on
            // stderr with exit 2.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidInput(_) | Error::Resource(_) => 2,
                _ => 3,
            }
        }
    }
}

fn lp_mode(cli: &Cli) -> LpMode {
    if cli.exact_rational {
        LpMode::Rational
    } else {
        LpMode::Float
    }
}

fn parse_settings(s: &str) -> Result<SettingsSource> {
    if s == "chsh" {
        return Ok(SettingsSource::ChshOptimal);
    }
    if let Some(k) = s.strip_prefix("random:") {
        let count: usize = k
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad settings count in '{s}'")))?;
        return Ok(SettingsSource::Random { count });
    }
    if let Some(path) = s.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)?;
        let pairs: Vec<([f64; 3], [f64; 3])> = serde_json::from_str(&text)?;
        return Ok(SettingsSource::Explicit(pairs));
    }
    Err(Error::InvalidInput(format!(
        "settings source '{s}' is not random:K, chsh or file:PATH"
    )))
}

fn sim_config(cli: &Cli, args: &SimArgs) -> Result<ExperimentConfig> {
    if let Some(path) = &args.config {
        let mut config = ExperimentConfig::from_json_file(path)?;
        if config.workers.is_none() {
            config.workers = cli.workers;
        }
        return Ok(config);
    }
    let protocol = args.protocol.ok_or_else(|| {
        Error::InvalidInput("--protocol (or --config) is required".into())
    })?;
    Ok(ExperimentConfig {
        protocol: protocol.into(),
        polyhedron: args.poly.as_deref().map(PolySource::parse),
        alpha: args.alpha,
        theta: args.theta,
        n: args.n,
        settings: parse_settings(&args.settings)?,
        rounds: args.rounds.unwrap_or(DEFAULT_ROUNDS),
        seed: cli.seed,
        workers: cli.workers,
        sigma: args.sigma,
        output: args.out.clone(),
        round_log: args.round_log.clone(),
    })
}

fn load_poly(spec: &Option<String>) -> Result<Polyhedron> {
    match spec {
        None => Ok(make_platonic(PlatonicSolid::Icosahedron)),
        Some(s) => PolySource::parse(s).load(),
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.cmd {
        Cmd::Poly { cmd } => poly_cmd(cli, cmd),
        Cmd::Simulate(args) => {
            let config = sim_config(cli, args)?;
            let report = run_experiment(&config)?;
            print_report(cli, &report)?;
            Ok(if report.pass == Some(false) { 1 } else { 0 })
        }
        Cmd::Verify(args) => {
            let config = sim_config(cli, args)?;
            let report = verify_against_quantum(&config)?;
            print_report(cli, &report)?;
            Ok(if report.pass == Some(false) { 1 } else { 0 })
        }
        Cmd::Table1 => {
            let rows = analysis::table1()?;
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
                Format::Csv => print!("{}", analysis::table1_to_csv(&rows)),
            }
            Ok(0)
        }
        Cmd::Curve { cmd } => curve_cmd(cli, cmd),
        Cmd::Bound { cmd } => bound_cmd(cli, cmd),
        Cmd::Lp { cmd } => lp_cmd(cli, cmd),
    }
}

fn print_report(cli: &Cli, report: &crate::harness::EstimateReport) -> Result<()> {
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report)?),
        Format::Csv => print!("{}", report_to_csv(report)),
    }
    if let Some(pass) = report.pass {
        eprintln!(
            "verdict: {} ({} pairs, {} rounds each, {}-sigma policy)",
            if pass { "pass" } else { "FAIL" },
            report.pairs.len(),
            report.rounds_per_pair,
            report.sigma_policy
        );
    } else {
        eprintln!("verdict: indeterminate (standard errors undefined)");
    }
    Ok(())
}

fn poly_cmd(cli: &Cli, cmd: &PolyCmd) -> Result<i32> {
    match cmd {
        PolyCmd::Info { poly } => {
            let p = PolySource::parse(poly).load()?;
            let profile = gamma_profile(&p.antipodal_closure())?;
            let ell_v = inscribed_radius(&p)?;
            let ell_m = inscribed_radius_of(&profile.m_vectors)?;
            let d = p.vertex_count() as f64;
            #[derive(serde::Serialize)]
            struct Info {
                name: String,
                vertex_count: usize,
                antipodal_closed: bool,
                is_regular: bool,
                gamma_min: f64,
                gamma_max: f64,
                inscribed_radius: f64,
                derived_inscribed_radius: f64,
                shared_randomness_bits: f64,
                alpha_protocol1: Option<f64>,
                alpha_protocol2: f64,
            }
            let info = Info {
                name: p.name().to_string(),
                vertex_count: p.vertex_count(),
                antipodal_closed: p.antipodal_closed(),
                is_regular: profile.is_regular,
                gamma_min: profile.gamma_min,
                gamma_max: profile.gamma_max,
                inscribed_radius: ell_v,
                derived_inscribed_radius: ell_m,
                shared_randomness_bits: d.log2(),
                alpha_protocol1: if profile.is_regular {
                    Some(2.0 * profile.gamma_min * ell_v / d)
                } else {
                    None
                },
                alpha_protocol2: 2.0 * profile.gamma_min * ell_m / d,
            };
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&info)?),
                Format::Csv => {
                    println!(
                        "{} D={} closed={} regular={} gamma={:.7} ell={:.7} alpha1={} alpha2={:.7} bits={:.4}",
                        info.name,
                        info.vertex_count,
                        info.antipodal_closed,
                        info.is_regular,
                        info.gamma_min,
                        info.inscribed_radius,
                        info.alpha_protocol1
                            .map(|a| format!("{a:.7}"))
                            .unwrap_or_else(|| "-".into()),
                        info.alpha_protocol2,
                        info.shared_randomness_bits,
                    );
                }
            }
            Ok(0)
        }
        PolyCmd::Export { name, out } => {
            let p = PolySource::parse(name).load()?;
            let json = p.to_json_string()?;
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => println!("{json}"),
            }
            Ok(0)
        }
        PolyCmd::Iterate { k, cap, out } => {
            let cap = cap.unwrap_or(FAMILY_VERTEX_CAP);
            #[derive(serde::Serialize)]
            struct Step {
                k: usize,
                vertex_count: usize,
                bits: f64,
                gamma_min: f64,
                gamma_max: f64,
                derived_inscribed_radius: f64,
                alpha_protocol2: f64,
            }
            let mut steps = Vec::new();
            let mut last: Option<Polyhedron> = None;
            for i in 0..=*k {
                let p = iterate_family_with_cap(i, cap)?;
                let profile = gamma_profile(&p)?;
                let ell_m = inscribed_radius_of(&profile.m_vectors)?;
                let d = p.vertex_count() as f64;
                steps.push(Step {
                    k: i,
                    vertex_count: p.vertex_count(),
                    bits: d.log2(),
                    gamma_min: profile.gamma_min,
                    gamma_max: profile.gamma_max,
                    derived_inscribed_radius: ell_m,
                    alpha_protocol2: 2.0 * profile.gamma_min * ell_m / d,
                });
                last = Some(p);
            }
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&steps)?),
                Format::Csv => {
                    println!("k,D,bits,gamma_min,gamma_max,ell_m,alpha2");
                    for s in &steps {
                        println!(
                            "{},{},{:.6},{:.9},{:.9},{:.9},{:.9}",
                            s.k,
                            s.vertex_count,
                            s.bits,
                            s.gamma_min,
                            s.gamma_max,
                            s.derived_inscribed_radius,
                            s.alpha_protocol2
                        );
                    }
                }
            }
            if let (Some(path), Some(p)) = (out, last) {
                p.save_json(path)?;
            }
            Ok(0)
        }
    }
}

fn curve_cmd(cli: &Cli, cmd: &CurveCmd) -> Result<i32> {
    match cmd {
        CurveCmd::Fig1 {
            max_iter,
            out,
            plot_script,
        } => {
            let curve = analysis::fig1_curve(*max_iter)?;
            if curve.truncated {
                eprintln!("warning: family iteration hit the vertex cap; curve truncated");
            }
            let csv = analysis::fig1_to_csv(&curve);
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&curve)?),
                Format::Csv => print!("{csv}"),
            }
            if let Some(path) = out {
                std::fs::write(path, &csv)?;
            }
            if let Some(path) = plot_script {
                let csv_name = out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "fig1.csv".into());
                std::fs::write(path, analysis::gnuplot_script(&csv_name, "fig2.csv"))?;
            }
            Ok(0)
        }
        CurveCmd::Fig2 {
            poly,
            n_max,
            out,
            plot_script,
        } => {
            let p = load_poly(poly)?;
            let ns: Vec<usize> = (1..=*n_max).collect();
            let points = analysis::fig2_curve(&p, &ns)?;
            let csv = analysis::fig2_to_csv(&points);
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&points)?),
                Format::Csv => print!("{csv}"),
            }
            if let Some(path) = out {
                std::fs::write(path, &csv)?;
            }
            if let Some(path) = plot_script {
                let csv_name = out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "fig2.csv".into());
                std::fs::write(path, analysis::gnuplot_script("fig1.csv", &csv_name))?;
            }
            Ok(0)
        }
    }
}

fn bound_cmd(cli: &Cli, cmd: &BoundCmd) -> Result<i32> {
    match cmd {
        BoundCmd::AppB {
            solid,
            poly,
            trials,
        } => {
            let vertices: Vec<UnitVector> = match (solid, poly) {
                (Some(name), None) => make_platonic(PlatonicSolid::from_name(name)?)
                    .vertices()
                    .to_vec(),
                (None, Some(path)) => Polyhedron::load_json(path)?.vertices().to_vec(),
                (None, None) => make_platonic(PlatonicSolid::Tetrahedron).vertices().to_vec(),
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInput(
                        "pass either --solid or --poly, not both".into(),
                    ))
                }
            };
            let value = analysis::lhs_two_bit_bound(&vertices)?;
            #[derive(serde::Serialize)]
            struct BoundOut {
                value: f64,
                vertex_count: usize,
                random_trials: Option<usize>,
                random_max: Option<f64>,
            }
            let mut outp = BoundOut {
                value,
                vertex_count: vertices.len(),
                random_trials: *trials,
                random_max: None,
            };
            if let Some(t) = trials {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
                let mut best = f64::NEG_INFINITY;
                for _ in 0..*t {
                    let vs: Vec<UnitVector> =
                        (0..4).map(|_| UnitVector::random(&mut rng)).collect();
                    best = best.max(analysis::lhs_two_bit_bound(&vs)?);
                }
                outp.random_max = Some(best);
            }
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&outp)?),
                Format::Csv => println!("{:.7}", outp.value),
            }
            Ok(0)
        }
    }
}

fn lp_settings(
    alpha: f64,
    poly: &Option<String>,
    chsh: bool,
) -> Result<crate::localpolytope::BehaviorTable> {
    let rho = werner_state(alpha)?;
    if chsh {
        chsh_behavior(&rho)
    } else {
        let p = load_poly(poly)?;
        let dirs = p.antipodal_pairing()?.representatives;
        behavior_from_state(&rho, &dirs, &dirs)
    }
}

fn lp_cmd(cli: &Cli, cmd: &LpCmd) -> Result<i32> {
    match cmd {
        LpCmd::Membership { alpha, poly, chsh } => {
            let table = lp_settings(*alpha, poly, *chsh)?;
            let outcome = local_membership(&table, lp_mode(cli))?;
            #[derive(serde::Serialize)]
            #[serde(tag = "result", rename_all = "lowercase")]
            enum Out<'a> {
                Local {
                    support: usize,
                    bits: f64,
                    exact: bool,
                    max_deviation: f64,
                },
                Nonlocal {
                    certificate: &'a crate::localpolytope::BellCertificate,
                    normalized_margin: f64,
                },
            }
            let out = match &outcome {
                Membership::Local(model) => Out::Local {
                    support: model.strategies.len(),
                    bits: model.bits,
                    exact: model.exact,
                    max_deviation: model.deviation_from(&table),
                },
                Membership::Nonlocal(cert) => Out::Nonlocal {
                    certificate: cert,
                    normalized_margin: cert.normalized_margin(),
                },
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        LpCmd::Extract {
            alpha,
            poly,
            chsh,
            out,
        } => {
            let table = lp_settings(*alpha, poly, *chsh)?;
            match local_membership(&table, lp_mode(cli))? {
                Membership::Local(model) => {
                    std::fs::write(out, serde_json::to_string_pretty(&model)?)?;
                    eprintln!(
                        "model: {} strategies, {:.4} bits, exact={}",
                        model.strategies.len(),
                        model.bits,
                        model.exact
                    );
                    Ok(0)
                }
                Membership::Nonlocal(cert) => {
                    println!("{}", serde_json::to_string_pretty(&cert)?);
                    eprintln!("behavior is nonlocal; no model exists");
                    Ok(1)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(|w| w.to_string()).collect()
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(argv("lhv simulate --protocol equatorial --rounds 0")), 2);
        assert_eq!(run(argv("lhv no-such-command")), 2);
        assert_eq!(run(argv("lhv poly info hexagon")), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(argv("lhv --help")), 0);
    }

    #[test]
    fn poly_info_and_table1_run() {
        assert_eq!(run(argv("lhv poly info icosahedron")), 0);
        assert_eq!(run(argv("lhv --format csv table1")), 0);
    }

    #[test]
    fn bound_app_b_runs() {
        assert_eq!(run(argv("lhv bound app-b --solid tetrahedron")), 0);
    }

    #[test]
    fn small_simulation_passes() {
        assert_eq!(
            run(argv(
                "lhv simulate --protocol 1 --poly icosahedron --rounds 20000 --settings random:2"
            )),
            0
        );
    }
}
