use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use neckflow::harness::{
    bundled, diffuse, diffusion_clock, initial_density, radial_sweep, read_glued, read_measure, read_trajectory,
    registry_list, run_experiment, run_many, write_diffusion, write_json, write_plan, DiffusionConfig, DiffusionMethod,
    ExperimentConfig, FlowConfig, HarnessError, PinchConfig, RunManifest, WarpedConfig,
};
use neckflow::heat::HeatMode;
use neckflow::pinch_analysis::MASS_TOL;
use neckflow::transport::{hoeffding_frechet_plan, w1_area, wasserstein_p};

/// Ricci flow, conjugate heat diffusion and optimal transport experiments on
/// rotationally symmetric metrics.
#[derive(Parser)]
#[command(name = "neckflow", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON config of the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of randomized stages.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Validate the configuration and inputs without computing.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a profile (experiment config with a geometry and a flow section).
    Flow,
    /// Diffuse a density along a stored trajectory.
    Diffuse {
        /// Directory written by `flow`.
        #[arg(long)]
        trajectory: PathBuf,
        /// uniform, cosine:A or dirac:south|north|cap1|cap2:D
        #[arg(long)]
        init: Option<String>,
        /// Backward time span from `t_ref`, which defaults to the last stored time.
        #[arg(long)]
        tau: Option<f64>,
        /// pde or trotter:M,J
        #[arg(long)]
        mode: Option<String>,
    },
    /// Wasserstein distance of two line measures given as CSV.
    Transport {
        /// CSV with `position,mass` or `x,density` columns.
        #[arg(long)]
        mu: PathBuf,
        /// CSV with `position,mass` or `x,density` columns.
        #[arg(long)]
        nu: PathBuf,
        /// Exponent, 1 or 2.
        #[arg(long, default_value_t = 1)]
        p: u32,
    },
    /// Radial-transport check on warped grids (warped config).
    RadialCheck,
    /// Blow-up bounds and W1 series on a glued space.
    Pinch {
        /// Glued-space manifest, or `synthetic` or `dumbbell_halves`.
        #[arg(long)]
        caps: Option<String>,
        /// Interval length.
        #[arg(long = "L")]
        l: Option<f64>,
        /// Target bound for the eps sweep.
        #[arg(long = "M")]
        m: Option<f64>,
        /// EPS0:COUNT
        #[arg(long)]
        eps_sweep: Option<String>,
        /// Window width; defaults to the largest admissible one.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run bundled experiments by name, all of them, or the one in --config.
    Run {
        names: Vec<String>,
        #[arg(long)]
        all: bool,
    },
    /// List the bundled experiments.
    List,
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.into(), source: e })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn require_config(cli: &Cli) -> Result<&Path, HarnessError> {
    cli.config.as_deref().ok_or_else(|| HarnessError::Config("this subcommand needs --config".into()))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values print"));
}

fn report(m: &RunManifest, out: &Path) -> i32 {
    print_json(&json!({
        "experiment": m.experiment,
        "out": out,
        "stages": m.stages,
        "summary": m.summary,
    }));
    m.exit_code()
}

fn dry_run_ok(what: &str) -> Result<i32, HarnessError> {
    println!("dry run: {what} is valid");
    Ok(0)
}

fn staged(cli: &Cli, mut cfg: ExperimentConfig) -> Result<i32, HarnessError> {
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    if cli.dry_run {
        return dry_run_ok(&format!("experiment {:?}", cfg.name));
    }
    let m = run_experiment(&cfg)?;
    Ok(report(&m, &cfg.out_dir()))
}

fn cmd_flow(cli: &Cli) -> Result<i32, HarnessError> {
    let mut cfg: ExperimentConfig = load_json(require_config(cli)?)?;
    cfg.flow.get_or_insert_with(FlowConfig::default);
    cfg.diffusion = None;
    cfg.transport = None;
    cfg.pinch = None;
    staged(cli, cfg)
}

fn cmd_diffuse(
    cli: &Cli,
    trajectory: &Path,
    init: Option<&str>,
    tau: Option<f64>,
    mode: Option<&str>,
) -> Result<i32, HarnessError> {
    let mut d: DiffusionConfig = match &cli.config {
        Some(p) => load_json(p)?,
        None => DiffusionConfig::default(),
    };
    if let Some(s) = init {
        d.init = s.parse()?;
    }
    if let Some(t) = tau {
        d.tau = t;
    }
    if let Some(s) = mode {
        d.method = s.parse()?;
    }
    ExperimentConfig { diffusion: Some(d.clone()), ..Default::default() }.validate()?;
    let tr = read_trajectory(trajectory)?;
    let clock = diffusion_clock(&tr, &d)?;
    if cli.dry_run {
        return dry_run_ok("diffusion");
    }
    let p0 = tr.profile_at(clock.t_ref)?;
    let mut runs = vec![("diffusion", d.init)];
    if let Some(s) = d.second_init {
        runs.push(("diffusion_second", s));
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("diffusion"));
    let mut worst = 0.0f64;
    for (name, spec) in runs {
        let states = diffuse(&tr, clock, &d, &initial_density(&p0, spec)?)?;
        worst = states.iter().map(|s| (s.total_mass - 1.0).abs()).fold(worst, f64::max);
        write_diffusion(&states, &out.join(name))?;
    }
    print_json(&json!({ "t_ref": clock.t_ref, "tau": d.tau, "method": d.method, "mass_error_max": worst, "out": out }));
    let conserving = d.method == DiffusionMethod::Pde && d.mode == HeatMode::Conservative;
    Ok(if conserving && worst > MASS_TOL { 4 } else { 0 })
}

fn cmd_transport(cli: &Cli, mu: &Path, nu: &Path, p: u32) -> Result<i32, HarnessError> {
    let (a, b) = (read_measure(mu)?, read_measure(nu)?);
    if !(1..=2).contains(&p) {
        return Err(HarnessError::Config(format!("--p {p} must be 1 or 2")));
    }
    if cli.dry_run {
        return dry_run_ok("measure pair");
    }
    let w = wasserstein_p(&a, &b, p).map_err(neckflow::Error::from)?;
    let mut out = json!({ "p": p, "w_p": w });
    if p == 1 {
        out["w1_area"] = json!(w1_area(&a, &b));
    }
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io { path: dir.clone(), source: e })?;
        write_plan(&hoeffding_frechet_plan(&a, &b), &dir.join("plan.csv"))?;
        write_json(&dir.join("transport.json"), &out)?;
    }
    print_json(&out);
    Ok(0)
}

fn cmd_radial(cli: &Cli) -> Result<i32, HarnessError> {
    let w: WarpedConfig = load_json(require_config(cli)?)?;
    w.validate()?;
    if cli.dry_run {
        return dry_run_ok("warped config");
    }
    let rows = radial_sweep(&w)?;
    let fractions: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let pass = rows.iter().all(|r| r[4] == 1.0) && fractions.windows(2).all(|f| f[1] >= f[0]);
    let out = json!({
        "fibers": rows.iter().map(|r| r[0] as usize).collect::<Vec<_>>(),
        "radial_fraction": fractions,
        "cost": rows.iter().map(|r| r[2]).collect::<Vec<_>>(),
        "applicable": rows.iter().all(|r| r[3] == 1.0),
        "pass": pass,
    });
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io { path: dir.clone(), source: e })?;
        write_json(&dir.join("radial_check.json"), &out)?;
    }
    print_json(&out);
    Ok(if pass { 0 } else { 4 })
}

fn parse_sweep(s: &str) -> Result<(f64, usize), HarnessError> {
    let bad = || HarnessError::Config(format!("--eps-sweep {s:?} must be EPS0:COUNT"));
    let (e, k) = s.split_once(':').ok_or_else(bad)?;
    Ok((e.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?))
}

fn cmd_pinch(
    cli: &Cli,
    caps: Option<&str>,
    l: Option<f64>,
    m: Option<f64>,
    sweep: Option<&str>,
    delta: Option<f64>,
) -> Result<i32, HarnessError> {
    let mut pc: PinchConfig = match &cli.config {
        Some(p) => load_json(p)?,
        None => PinchConfig::default(),
    };
    match caps {
        Some(c @ ("synthetic" | "dumbbell_halves")) => {
            pc.glued.caps = c.into();
            pc.glued.manifest = None;
        }
        Some(path) => pc.glued.manifest = Some(PathBuf::from(path)),
        None => {}
    }
    if let Some(l) = l {
        pc.glued.l = l;
    }
    if let Some(m) = m {
        pc.m = m;
    }
    if let Some(s) = sweep {
        (pc.eps0, pc.sweep) = parse_sweep(s)?;
    }
    if delta.is_some() {
        pc.delta = delta;
    }
    if let (Some(path), true) = (&pc.glued.manifest, cli.dry_run) {
        read_glued(path)?;
    }
    let cfg = ExperimentConfig { name: "pinch".into(), pinch: Some(pc), ..Default::default() };
    staged(cli, cfg)
}

fn cmd_run(cli: &Cli, names: &[String], all: bool) -> Result<i32, HarnessError> {
    let mut cfgs = Vec::new();
    if let Some(p) = &cli.config {
        cfgs.push(load_json::<ExperimentConfig>(p)?);
    }
    let names: Vec<String> = if all { registry_list().into_iter().map(|e| e.name).collect() } else { names.to_vec() };
    for name in &names {
        cfgs.push(bundled(name)?);
    }
    if cfgs.is_empty() {
        return Err(HarnessError::Config("name an experiment, pass --all or --config".into()));
    }
    let single = cfgs.len() == 1;
    for cfg in &mut cfgs {
        if let Some(out) = &cli.out {
            cfg.out = Some(if single { out.clone() } else { out.join(&cfg.name) });
        }
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
    }
    if cli.dry_run {
        return dry_run_ok(&format!("{} experiment config(s)", cfgs.len()));
    }
    let mut code = 0;
    for (cfg, result) in cfgs.iter().zip(run_many(&cfgs)) {
        let c = match result {
            Ok(m) => report(&m, &cfg.out_dir()),
            Err(e) => {
                eprintln!("{}: {e}", cfg.name);
                e.exit_code()
            }
        };
        // numerical failures outrank failed checks, which outrank config errors
        let rank = |c: i32| match c {
            3 => 3,
            4 => 2,
            2 => 1,
            _ => 0,
        };
        if rank(c) > rank(code) {
            code = c;
        }
    }
    Ok(code)
}

fn execute(cli: &Cli) -> Result<i32, HarnessError> {
    match &cli.cmd {
        Cmd::Flow => cmd_flow(cli),
        Cmd::Diffuse { trajectory, init, tau, mode } => {
            cmd_diffuse(cli, trajectory, init.as_deref(), *tau, mode.as_deref())
        }
        Cmd::Transport { mu, nu, p } => cmd_transport(cli, mu, nu, *p),
        Cmd::RadialCheck => cmd_radial(cli),
        Cmd::Pinch { caps, l, m, eps_sweep, delta } => {
            cmd_pinch(cli, caps.as_deref(), *l, *m, eps_sweep.as_deref(), *delta)
        }
        Cmd::Run { names, all } => cmd_run(cli, names, *all),
        Cmd::List => {
            for e in registry_list() {
                println!("{:<20} {}", e.name, e.description);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
