//! Command-line front end. Exit codes: 0 success or PASS, 2 a FAIL verdict, 1 usage,
//! config or runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{parse_config, ProblemConfig};
use crate::contraction::{contraction_report, random_step_pair, ContractionReport, Verdict};
use crate::csvio;
use crate::fluxmodel::{FluxModel, InterfacePair, Kernel};
use crate::germ::{self, find_connections, is_admissible, GermState, SweepConfig};
use crate::kinetic::{
    commutator_decay, entropy_residual, kinetic_defect, kruzkov_residual, kruzkov_sweep, tol_neg,
    Entropy, HatRule, VGrid,
};
use crate::solver1d::{run, SolverConfig, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Required decay factor per halving of ε in `commutator`.
pub const COMMUTATOR_MAX_RATIO: f64 = 0.8;

#[derive(Debug, Parser)]
#[command(name = "disflux", version, about = "Scalar conservation laws with discontinuous flux")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML problem file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the finite-volume solver and write snapshots and interface traces.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Keep the initial data fixed in time instead of evolving it.
        #[arg(long)]
        frozen: bool,
    },
    /// Kruzkov and quadratic entropy residuals of the computed solution.
    CheckEntropy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frozen: bool,
    },
    /// Kinetic defect measure and its sign.
    CheckKinetic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frozen: bool,
    },
    /// Check one interface state, or sweep W over random admissible states.
    Germ(GermArgs),
    /// Sign sweep of W at the first interface of the configured model.
    WSweep {
        #[command(flatten)]
        common: Common,
        /// Number of sampled pairs (overrides the config).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// L1 distance between pairs of solutions.
    Contract {
        #[command(flatten)]
        common: Common,
        /// Number of random pairs (overrides the config; ignored with `initial_pair`).
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Mass of the mollified commutator for the configured initial field.
    Commutator {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct GermArgs {
    #[arg(long)]
    kernel: String,
    #[arg(long)]
    k_left: f64,
    #[arg(long)]
    k_right: f64,
    #[arg(long, allow_hyphen_values = true)]
    u_minus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    u_plus: Option<f64>,
    /// Connection value; searched for when omitted.
    #[arg(long, allow_hyphen_values = true)]
    u_hat: Option<f64>,
    /// Sweep W over this many random pairs instead of checking one state.
    #[arg(long)]
    sweep: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    u_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = germ::MIN_C_GRID)]
    c_grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    disflux_version: String,
    scalar: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_sha256: Option<String>,
    seed: u64,
    verdict: String,
    tolerances: ManifestTolerances,
    outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ManifestTolerances {
    tol_rh: f64,
    tol_ineq: f64,
    tol_w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol_neg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cfl: Option<f64>,
}

struct Loaded {
    path: PathBuf,
    hash: String,
    cfg: ProblemConfig,
}

fn load(path: &Path) -> Result<Loaded> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let cfg = parse_config(path)?;
    Ok(Loaded {
        path: path.to_path_buf(),
        hash: hex::encode(Sha256::digest(&bytes)),
        cfg,
    })
}

struct Outcome {
    verdict: Option<Verdict>,
    outputs: Vec<String>,
    tol_neg: Option<f64>,
    c_slack: Option<f64>,
}

impl Outcome {
    fn exit_code(&self) -> i32 {
        match self.verdict {
            Some(Verdict::Fail) => EXIT_FAIL,
            _ => EXIT_OK,
        }
    }
}

fn write_manifest(out: &Path, command: &str, loaded: Option<&Loaded>, seed: u64, o: &Outcome) -> Result<()> {
    let cfg = loaded.map(|l| &l.cfg);
    let m = Manifest {
        command: command.to_string(),
        disflux_version: env!("CARGO_PKG_VERSION").to_string(),
        scalar: "f64".into(),
        config_path: loaded.map(|l| l.path.display().to_string()),
        config_sha256: loaded.map(|l| l.hash.clone()),
        seed,
        verdict: o.verdict.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into()),
        tolerances: ManifestTolerances {
            tol_rh: cfg.map(|c| c.tolerances.tol_rh).unwrap_or(germ::TOL_RH),
            tol_ineq: germ::TOL_INEQ,
            tol_w: germ::TOL_W,
            tol_neg: o.tol_neg,
            c_slack: o.c_slack,
            cfl: cfg.map(|c| c.grid.cfl),
        },
        outputs: o.outputs.clone(),
    };
    std::fs::write(out.join("run_manifest.toml"), toml::to_string(&m)?)?;
    Ok(())
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn solve(cfg: &ProblemConfig, frozen: bool) -> Result<(FluxModel<f64>, Trajectory<f64>)> {
    let model = cfg.model::<f64>()?;
    let mut sc: SolverConfig<f64> = cfg.solver();
    sc.frozen = frozen;
    let traj = run(&model, &cfg.initial, &sc)?;
    Ok((model, traj))
}

fn vgrid(model: &FluxModel<f64>, n_v: usize) -> Result<VGrid<f64>> {
    Ok(VGrid::covering(&model.state_box, n_v)?)
}

fn cmd_solve(cfg: &ProblemConfig, out: &Path, frozen: bool) -> Result<Outcome> {
    let (_, traj) = solve(cfg, frozen)?;
    csvio::write_snapshots(&out.join("snapshots.csv"), &traj)?;
    csvio::write_traces(&out.join("traces.csv"), &traj)?;
    Ok(Outcome {
        verdict: None,
        outputs: vec!["snapshots.csv".into(), "traces.csv".into()],
        tol_neg: None,
        c_slack: None,
    })
}

fn cmd_check_entropy(cfg: &ProblemConfig, out: &Path, frozen: bool) -> Result<Outcome> {
    let (model, traj) = solve(cfg, frozen)?;
    let vg = vgrid(&model, cfg.grid.n_v)?;
    let tol = tol_neg(cfg.tolerances.tol_neg_coeff, traj.grid.dx(), vg.dv(), model.m_bound);
    let slack = 2.0 * tol;
    let hat = HatRule::FromTraces;
    let (max_k, worst_c) = kruzkov_sweep(&traj, &hat, cfg.sweep.n_c)?;
    let worst = kruzkov_residual(&traj, worst_c, &hat)?;
    let quad = entropy_residual(&traj, &Entropy::quadratic(), &hat, cfg.sweep.n_c)?;
    let ok = max_k <= slack && quad.max_positive <= slack;
    let verdict = Verdict::from_bool(ok);
    csvio::write_residual(&out.join("kruzkov_residual.csv"), &worst)?;
    csvio::write_residual(&out.join("quadratic_residual.csv"), &quad)?;
    csvio::write_table(
        &out.join("entropy_summary.csv"),
        &["max_kruzkov", "worst_c", "max_quadratic", "min_quadratic", "slack", "verdict"],
        [vec![
            csvio::num(max_k),
            csvio::num(worst_c),
            csvio::num(quad.max_positive),
            csvio::num(quad.min_value),
            csvio::num(slack),
            verdict.to_string(),
        ]],
    )?;
    Ok(Outcome {
        verdict: Some(verdict),
        outputs: vec![
            "kruzkov_residual.csv".into(),
            "quadratic_residual.csv".into(),
            "entropy_summary.csv".into(),
        ],
        tol_neg: Some(tol),
        c_slack: None,
    })
}

fn cmd_check_kinetic(cfg: &ProblemConfig, out: &Path, frozen: bool) -> Result<Outcome> {
    let (model, traj) = solve(cfg, frozen)?;
    let vg = vgrid(&model, cfg.grid.n_v)?;
    let d = kinetic_defect(&traj, &HatRule::FromTraces, &vg, cfg.tolerances.tol_neg_coeff)?;
    csvio::write_defect(&out.join("defect.csv"), &d)?;
    csvio::write_defect_summary(&out.join("defect_summary.csv"), &d)?;
    Ok(Outcome {
        verdict: Some(Verdict::from_bool(d.is_nonnegative())),
        outputs: vec!["defect.csv".into(), "defect_summary.csv".into()],
        tol_neg: Some(d.tol_neg),
        c_slack: None,
    })
}

fn cmd_w_sweep(cfg: &ProblemConfig, out: &Path, samples: Option<usize>) -> Result<Outcome> {
    let model = cfg.model::<f64>()?;
    if model.n_interfaces() == 0 {
        bail!("w-sweep needs a model with at least one interface");
    }
    let pair = model.interface_pair(0)?;
    let mut sw = SweepConfig::new(samples.unwrap_or(cfg.sweep.n_samples), cfg.sweep.seed);
    sw.pool_size = cfg.sweep.pool_size;
    let sb = model.state_box;
    let r = germ::w_sign_sweep(&pair, sb.u_min, sb.u_max, &sw)?;
    let verdict = Verdict::from_bool(r.violations == 0);
    csvio::write_table(
        &out.join("w_sweep.csv"),
        &csvio::W_SWEEP_HEADER,
        [csvio::w_sweep_row(model.kernel.name(), pair.k_left, pair.k_right, &r)],
    )?;
    Ok(Outcome {
        verdict: Some(verdict),
        outputs: vec!["w_sweep.csv".into()],
        tol_neg: None,
        c_slack: None,
    })
}

fn cmd_contract(cfg: &ProblemConfig, out: &Path, pairs: Option<usize>) -> Result<Outcome> {
    let model = cfg.model::<f64>()?;
    let sc: SolverConfig<f64> = cfg.solver();
    let data: Vec<_> = match &cfg.initial_pair {
        Some(second) => vec![(cfg.initial.clone(), second.clone())],
        None => (0..pairs.unwrap_or(cfg.sweep.pairs) as u64)
            .map(|i| {
                random_step_pair(
                    cfg.sweep.seed,
                    i,
                    (cfg.model.x_lo, cfg.model.x_hi),
                    (cfg.model.u_min, cfg.model.u_max),
                    4,
                )
            })
            .collect(),
    };
    let vg = vgrid(&model, cfg.grid.n_v)?;
    let c_slack = cfg.c_slack(&model);
    let reports: Vec<ContractionReport<f64>> = data
        .iter()
        .map(|(a, b)| -> Result<_> {
            let t1 = run(&model, a, &sc)?;
            let t2 = run(&model, b, &sc)?;
            Ok(contraction_report(&t1, &t2, c_slack, &vg)?)
        })
        .collect::<Result<_>>()?;
    csvio::write_contraction(&out.join("contraction.csv"), &reports)?;
    csvio::write_contraction_summary(&out.join("contraction_summary.csv"), &reports)?;
    let ok = reports.iter().all(|r| r.verdict.passed());
    Ok(Outcome {
        verdict: Some(Verdict::from_bool(ok)),
        outputs: vec!["contraction.csv".into(), "contraction_summary.csv".into()],
        tol_neg: None,
        c_slack: Some(c_slack),
    })
}

fn cmd_commutator(cfg: &ProblemConfig, out: &Path) -> Result<Outcome> {
    let model = cfg.model::<f64>()?;
    let grid = crate::grid::Grid1D::new(cfg.model.x_lo, cfg.model.x_hi, cfg.grid.n_cells)?;
    let u = cfg.initial.sample(&grid);
    let vg = vgrid(&model, cfg.commutator.n_v)?;
    let r = commutator_decay(&u, &model, &vg, &cfg.commutator.eps)?;
    let ok = r.strictly_decreasing() && r.ratios().iter().all(|q| *q <= COMMUTATOR_MAX_RATIO);
    csvio::write_commutator(&out.join("commutator.csv"), &r)?;
    Ok(Outcome {
        verdict: Some(Verdict::from_bool(ok)),
        outputs: vec!["commutator.csv".into()],
        tol_neg: None,
        c_slack: None,
    })
}

fn cmd_germ(a: &GermArgs) -> Result<(Outcome, Vec<String>, Vec<String>)> {
    let kernel = Kernel::<f64>::from_name(&a.kernel)
        .with_context(|| format!("unknown kernel '{}'", a.kernel))?;
    if !(a.u_min < a.u_max) {
        bail!("--u-min must be below --u-max");
    }
    let pair = InterfacePair {
        kernel,
        k_left: a.k_left,
        k_right: a.k_right,
    };
    if let Some(n) = a.sweep {
        let sw = SweepConfig::new(n, a.seed);
        let r = germ::w_sign_sweep(&pair, a.u_min, a.u_max, &sw)?;
        let row = csvio::w_sweep_row(pair.kernel.name(), a.k_left, a.k_right, &r);
        let o = Outcome {
            verdict: Some(Verdict::from_bool(r.violations == 0)),
            outputs: vec!["w_sweep.csv".into()],
            tol_neg: None,
            c_slack: None,
        };
        return Ok((o, csvio::W_SWEEP_HEADER.iter().map(|s| s.to_string()).collect(), row));
    }
    let (Some(um), Some(up)) = (a.u_minus, a.u_plus) else {
        bail!("germ needs --u-minus and --u-plus (or --sweep N)");
    };
    let uh = match a.u_hat {
        Some(h) => h,
        None => {
            let lo = a.u_min.min(um).min(up);
            let hi = a.u_max.max(um).max(up);
            find_connections(&pair, um, up, lo, hi, germ::MIN_CANDIDATE_GRID)
                .first()
                .copied()
                .unwrap_or(um)
        }
    };
    let state = GermState::new(pair, um, up, uh);
    let r = is_admissible(&state, a.c_grid);
    let row = csvio::germ_row(&state, &r);
    let o = Outcome {
        verdict: Some(Verdict::from_bool(r.admissible)),
        outputs: vec!["germ.csv".into()],
        tol_neg: None,
        c_slack: None,
    };
    Ok((o, csvio::GERM_HEADER.iter().map(|s| s.to_string()).collect(), row))
}

fn dispatch(cli: Cli) -> Result<i32> {
    let name = match &cli.command {
        Command::Solve { .. } => "solve",
        Command::CheckEntropy { .. } => "check-entropy",
        Command::CheckKinetic { .. } => "check-kinetic",
        Command::Germ(_) => "germ",
        Command::WSweep { .. } => "w-sweep",
        Command::Contract { .. } => "contract",
        Command::Commutator { .. } => "commutator",
    };
    if let Command::Germ(a) = &cli.command {
        let (o, header, row) = cmd_germ(a)?;
        println!("{}", header.join(","));
        println!("{}", row.join(","));
        if let Some(out) = &a.out {
            prepare_out(out)?;
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            csvio::write_table(&out.join(&o.outputs[0]), &h, [row])?;
            write_manifest(out, name, None, a.seed, &o)?;
        }
        return Ok(o.exit_code());
    }
    let common = match &cli.command {
        Command::Solve { common, .. }
        | Command::CheckEntropy { common, .. }
        | Command::CheckKinetic { common, .. }
        | Command::WSweep { common, .. }
        | Command::Contract { common, .. }
        | Command::Commutator { common } => common,
        Command::Germ(_) => unreachable!(),
    };
    let loaded = load(&common.config)?;
    let out = &common.out;
    prepare_out(out)?;
    let cfg = &loaded.cfg;
    let o = match &cli.command {
        Command::Solve { frozen, .. } => cmd_solve(cfg, out, *frozen)?,
        Command::CheckEntropy { frozen, .. } => cmd_check_entropy(cfg, out, *frozen)?,
        Command::CheckKinetic { frozen, .. } => cmd_check_kinetic(cfg, out, *frozen)?,
        Command::WSweep { samples, .. } => cmd_w_sweep(cfg, out, *samples)?,
        Command::Contract { pairs, .. } => cmd_contract(cfg, out, *pairs)?,
        Command::Commutator { .. } => cmd_commutator(cfg, out)?,
        Command::Germ(_) => unreachable!(),
    };
    write_manifest(out, name, Some(&loaded), cfg.sweep.seed, &o)?;
    if let Some(v) = o.verdict {
        eprintln!("{name}: {v}");
    }
    Ok(o.exit_code())
}

/// Caps the global worker pool when `DISFLUX_THREADS` is set.
fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("DISFLUX_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("DISFLUX_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("DISFLUX_THREADS must be positive");
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return EXIT_ERROR;
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
