//! Bundled experiments and the staged pipeline behind `neckflow run`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::flow::{detect_pinch, evolve, FlowTrajectory, Termination};
use crate::geometry::{build_profile, perturbed_dumbbell, GluedSpace, GridProfile, ProfileKind};
use crate::heat::{
    conjugate_heat_solve, dirac_bump, normalized, trotter_product, BackwardClock, DiffusionState, HeatMode,
    TrotterOptions,
};
use crate::pinch_analysis::{contractivity_monitor, contradiction_report, synthetic_neck, MonitorOptions, MASS_TOL};
use crate::transport::{
    discrete_ot_oracle, radial_transport_check, w1_area, wasserstein_p, LineMeasure, WarpedGridSpace,
};

use super::config::{DiffusionConfig, DiffusionMethod, ExperimentConfig, GluedConfig, InitSpec, WarpedConfig};
use super::io::{write_diffusion, write_glued, write_json, write_profile, write_table, write_trajectory};
use super::manifest::{sha256_file, sha256_hex, FileEntry, RunManifest, StageRecord, StageStatus};
use super::{read_glued, HarnessError};

const BUNDLED: [(&str, &str); 6] = [
    ("round_collapse", include_str!("../../experiments/round_collapse.json")),
    ("cylinder_soliton", include_str!("../../experiments/cylinder_soliton.json")),
    ("dumbbell_pinch", include_str!("../../experiments/dumbbell_pinch.json")),
    ("trotter_convergence", include_str!("../../experiments/trotter_convergence.json")),
    ("radial_transport", include_str!("../../experiments/radial_transport.json")),
    ("contradiction", include_str!("../../experiments/contradiction.json")),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentInfo {
    pub name: String,
    pub description: String,
}

/// Config of a bundled experiment.
pub fn bundled(name: &str) -> Result<ExperimentConfig, HarnessError> {
    let (_, text) =
        BUNDLED.iter().find(|(n, _)| *n == name).ok_or_else(|| HarnessError::UnknownExperiment(name.into()))?;
    ExperimentConfig::from_json(text)
}

pub fn registry_list() -> Vec<ExperimentInfo> {
    BUNDLED
        .iter()
        .map(|(name, _)| {
            let cfg = bundled(name).expect("bundled configs parse");
            ExperimentInfo { name: cfg.name, description: cfg.description }
        })
        .collect()
}

/// Outcome of one stage: diagnostics, and whether a property check failed.
struct Outcome {
    notes: Vec<String>,
    failed_checks: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { notes: Vec::new(), failed_checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failed_checks.push(what());
        }
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    files: Vec<PathBuf>,
    summary: Map<String, Value>,
    profile: Option<GridProfile>,
    traj: Option<FlowTrajectory>,
    clock: Option<BackwardClock>,
    u0: Option<Vec<f64>>,
}

fn summary_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("summary values serialize")
}

impl Run<'_> {
    fn put<T: Serialize>(&mut self, key: &str, v: T) {
        self.summary.insert(key.into(), summary_value(v));
    }

    fn path(&mut self, rel: &str) -> PathBuf {
        let p = self.out.join(rel);
        self.files.push(p.clone());
        p
    }

    fn dir(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn geometry(&mut self) -> Result<Outcome, HarnessError> {
        let g = &self.cfg.geometry;
        let p = match (g.perturbation, &g.profile) {
            (Some(amp), ProfileKind::Dumbbell { a }) => perturbed_dumbbell(*a, amp, g.n, g.nodes)?,
            _ => build_profile(&g.profile, g.n, g.nodes)?,
        };
        let path = self.path("initial_profile.csv");
        write_profile(&p, &path)?;
        self.files.push(path.with_extension("json"));
        self.put("volume", p.volume());
        self.profile = Some(p);
        Ok(Outcome::new())
    }

    fn flow(&mut self) -> Result<Outcome, HarnessError> {
        let f = self.cfg.flow.as_ref().expect("flow stage configured");
        let p = self.profile.clone().expect("geometry ran");
        let tr = evolve(p.clone(), &f.evolve_options())?;
        let dir = self.dir("trajectory");
        self.files.extend(write_trajectory(&tr, &dir)?);
        let rep = detect_pinch(&tr, f.delta_pinch);
        let path = self.path("pinch_report.json");
        write_json(&path, &rep)?;
        let mut out = Outcome::new();
        self.put("termination", tr.termination);
        self.put("t_last", tr.t_end);
        self.put("t_est", rep.t_est);
        self.put("classification", rep.classification);
        self.put("x0_est", rep.x0_est);
        self.put("x0_index", rep.x0_index);
        self.put("type_one_sup", rep.type_one_sup);
        self.put("min_psi_final", tr.min_psi.last().copied());
        if let ProfileKind::Cylinder { c } = p.kind {
            // psi^2 = c^2 - 2 (n - 1) t up to 0.9 of the collapse time
            let k = 2.0 * (p.n as f64 - 1.0);
            let t_max = 0.9 * c * c / k;
            let err = tr
                .snapshots
                .iter()
                .filter(|s| s.profile.t <= t_max)
                .flat_map(|s| {
                    let want = c * c - k * s.profile.t;
                    s.profile.psi.iter().map(move |v| (v * v - want).abs() / want)
                })
                .fold(0.0, f64::max);
            self.put("soliton_rel_error", err);
            out.check(err <= 1e-3, || format!("cylinder radius deviates from the soliton by {err:e}"));
        }
        if tr.termination == Termination::StepFailure {
            out.notes.push("flow stopped on a step failure".into());
        }
        self.traj = Some(tr);
        Ok(out)
    }

    fn diffusion(&mut self) -> Result<Outcome, HarnessError> {
        let d = self.cfg.diffusion.clone().expect("diffusion stage configured");
        if self.traj.is_none() {
            let p = self.profile.as_ref().expect("geometry ran");
            self.traj = Some(FlowTrajectory::frozen(p, 0.0, d.tau)?);
        }
        let tr = self.traj.as_ref().expect("trajectory available");
        let clock = diffusion_clock(tr, &d)?;
        self.clock = Some(clock);
        let p0 = tr.profile_at(clock.t_ref)?;
        let u0 = initial_density(&p0, d.init)?;
        let mut out = Outcome::new();
        let mut tracked = Vec::new();
        tracked.push(("diffusion", diffuse(tr, clock, &d, &u0)?));
        if let Some(spec) = d.second_init {
            let u = initial_density(&p0, spec)?;
            tracked.push(("diffusion_second", diffuse(tr, clock, &d, &u)?));
        }
        let conserving = d.method == DiffusionMethod::Pde && d.mode == HeatMode::Conservative;
        let mut worst = 0.0f64;
        for (name, states) in &tracked {
            let dir = self.dir(name);
            self.files.extend(write_diffusion(states, &dir)?);
            worst = states.iter().map(|s| (s.total_mass - 1.0).abs()).fold(worst, f64::max);
        }
        self.put("mass_error_max", worst);
        if conserving {
            out.check(worst <= MASS_TOL, || format!("mass drifts by {worst:e}"));
        } else {
            out.notes.push("mass is not conserved by this method; the drift is reported only".into());
        }
        if !d.trotter_sweep.is_empty() {
            out.failed_checks.extend(self.trotter_sweep(&d, &u0)?);
        }
        self.u0 = Some(u0);
        Ok(out)
    }

    fn trotter_sweep(&mut self, d: &DiffusionConfig, u0: &[f64]) -> Result<Vec<String>, HarnessError> {
        let tr = self.traj.as_ref().expect("trajectory available");
        let clock = self.clock.expect("clock set");
        let pde = conjugate_heat_solve(
            tr,
            clock,
            u0,
            0.0,
            d.tau,
            &crate::heat::HeatOptions { frames: 1, ..d.heat_options() },
        )?;
        let reference = &pde.last().expect("final frame").u;
        let opts = TrotterOptions { directions: d.directions, ..Default::default() };
        let mut errs = Vec::new();
        for &m in &d.trotter_sweep {
            let u = trotter_product(tr, clock, u0, d.tau, m, m, &opts)?;
            errs.push(u.iter().zip(reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        let path = self.path("trotter.csv");
        write_table(
            &path,
            &["m", "j", "sup_error"],
            d.trotter_sweep.iter().zip(&errs).map(|(&m, &e)| vec![m as f64, m as f64, e]),
        )?;
        self.put("trotter_errors", &errs);
        let mut failed = Vec::new();
        if errs.windows(2).any(|w| w[1] > w[0]) {
            failed.push(format!("operator-product errors increase along the sweep: {errs:?}"));
        }
        let last = *errs.last().expect("nonempty sweep");
        if last >= d.trotter_tol {
            failed.push(format!("final operator-product error {last:e} is not below {:e}", d.trotter_tol));
        }
        Ok(failed)
    }

    fn transport(&mut self) -> Result<Outcome, HarnessError> {
        let t = self.cfg.transport.clone().expect("transport stage configured");
        let mut out = Outcome::new();
        if let Some(w) = &t.warped {
            let rows = radial_sweep(w)?;
            let path = self.path("radial.csv");
            write_table(
                &path,
                &["fiber", "radial_fraction", "cost", "applicable", "pass"],
                rows.iter().map(|r| r.to_vec()),
            )?;
            let fractions: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            self.put("radial_fractions", &fractions);
            out.check(rows.iter().all(|r| r[4] == 1.0), || format!("radial fractions {fractions:?} below threshold"));
            out.check(fractions.windows(2).all(|f| f[1] >= f[0]), || {
                format!("radial fraction decreases under fiber refinement: {fractions:?}")
            });
        }
        if t.oracle_instances > 0 {
            let rows = oracle_suite(self.cfg.seed, t.oracle_instances, t.oracle_atoms)?;
            let path = self.path("oracle.csv");
            write_table(&path, &["instance", "p", "quantile", "exact", "w1_area"], rows.iter().map(|r| r.to_vec()))?;
            let worst_oracle = rows.iter().map(|r| (r[2] - r[3]).abs()).fold(0.0, f64::max);
            let worst_area = rows.iter().filter(|r| r[1] == 1.0).map(|r| (r[2] - r[4]).abs()).fold(0.0, f64::max);
            self.put("oracle_max_error", worst_oracle);
            self.put("w1_formula_max_error", worst_area);
            out.check(worst_oracle <= 1e-8, || format!("quantile formula misses the exact cost by {worst_oracle:e}"));
            out.check(worst_area <= 1e-8, || format!("the two W1 formulas differ by {worst_area:e}"));
        }
        if let Some(d) = &self.cfg.diffusion {
            if let (Some(spec), Some(u0)) = (d.second_init, &self.u0) {
                let tr = self.traj.as_ref().expect("trajectory available");
                let clock = self.clock.expect("clock set");
                let p0 = tr.profile_at(clock.t_ref)?;
                let u2 = initial_density(&p0, spec)?;
                let opts = MonitorOptions { heat: d.heat_options(), rel_tol: t.rel_tol, step_study: true };
                let rep = contractivity_monitor(tr, clock, u0, &u2, 0.0, d.tau, &opts)?;
                let path = self.path("w_series.csv");
                write_table(&path, &["tau", "w1", "w2"], rep.rows.iter().map(|r| vec![r.tau, r.w1, r.w2]))?;
                let path = self.path("contractivity.json");
                write_json(&path, &rep)?;
                self.put("contractive_w1", rep.pass_w1);
                self.put("contractive_w2", rep.pass_w2);
                out.check(rep.pass_w1, || format!("W1 increases: {:?}", rep.violations));
                if !rep.pass_w2 {
                    out.notes.push(format!("W2 increases beyond tolerance: {:?}", rep.violations));
                }
            }
        }
        Ok(out)
    }

    fn pinch(&mut self) -> Result<Outcome, HarnessError> {
        let pc = self.cfg.pinch.clone().expect("pinch stage configured");
        let g = glued_space(&pc.glued)?;
        let caps = self.dir("glued").join("caps.json");
        self.files.extend(write_glued(&g, &caps)?);
        let rep = contradiction_report(&g, &pc.options())?;
        let path = self.path("contradiction_report.json");
        write_json(&path, &rep)?;
        let path = self.path("w1_series.csv");
        write_table(
            &path,
            &["tau", "int_f", "int_g", "w1_fixed_l", "l_required"],
            rep.w1_series.iter().map(|r| vec![r.tau, r.int_f, r.int_g, r.w1_fixed_l, r.l_required]),
        )?;
        let path = self.path("rates.csv");
        let header = [
            "eps",
            "floor",
            "delta_1",
            "delta_2",
            "lambda_1",
            "lambda_2",
            "curvature_term_1",
            "curvature_term_2",
            "bound_1",
            "bound_2",
            "rate_1",
            "rate_2",
            "m_k",
            "required_dl_dtau",
            "measured_dl_dtau",
        ];
        write_table(
            &path,
            &header,
            rep.sweep.iter().map(|r| {
                vec![
                    r.eps,
                    r.floor,
                    r.delta[0],
                    r.delta[1],
                    r.lambda[0],
                    r.lambda[1],
                    r.curvature_term[0],
                    r.curvature_term[1],
                    r.bound[0],
                    r.bound[1],
                    r.rate[0],
                    r.rate[1],
                    r.m_k,
                    r.required_dl_dtau,
                    r.measured_dl_dtau,
                ]
            }),
        )?;
        self.put("floor_first", rep.sweep.first().map(|r| r.floor));
        self.put("eps_for_m", rep.eps_for_m);
        self.put("bound_at_eps_for_m", rep.bound_at_eps_for_m);
        self.put("bounds_increasing", rep.bounds_increasing);
        self.put("rates_exceed_bounds", rep.rates_exceed_bounds);
        self.put("min_scalar_curvature", rep.min_scalar_curvature);
        self.put("contractive_with_fixed_l", rep.contractive_with_fixed_l);
        self.put("single_point_pinch", rep.single_point_pinch);
        let mut out = Outcome::new();
        out.check(rep.bounds_increasing, || "blow-up bounds do not increase along the sweep".into());
        out.check(rep.rates_exceed_bounds, || "a measured rate falls below its bound".into());
        Ok(out)
    }
}

/// Initial density on `p` from its spec, normalized to unit mass.
pub fn initial_density(p: &GridProfile, spec: InitSpec) -> Result<Vec<f64>, HarnessError> {
    Ok(match spec {
        InitSpec::Uniform => normalized(p, &vec![1.0; p.len()])?,
        InitSpec::Cosine(a) => normalized(p, &p.arclength().iter().map(|r| 1.0 + a * r.cos()).collect::<Vec<_>>())?,
        InitSpec::Dirac { north, d } => dirac_bump(p, if north { p.r_max() - d } else { d })?,
    })
}

/// Diffusion of `u0` along `tr` over `tau in [0, d.tau]` with `tau = 0` at
/// `clock.t_ref`, by the configured method; `d.frames` frames after the
/// initial one.
pub fn diffuse(
    tr: &FlowTrajectory,
    clock: BackwardClock,
    d: &DiffusionConfig,
    u0: &[f64],
) -> Result<Vec<DiffusionState>, HarnessError> {
    match d.method {
        DiffusionMethod::Pde => Ok(conjugate_heat_solve(tr, clock, u0, 0.0, d.tau, &d.heat_options())?),
        DiffusionMethod::Trotter { m, j } => {
            let opts = TrotterOptions { directions: d.directions, ..Default::default() };
            let mut states = vec![DiffusionState::new(&tr.profile_at(clock.t_ref)?, 0.0, u0.to_vec())];
            for k in 1..=d.frames {
                let tau = d.tau * k as f64 / d.frames as f64;
                let u = trotter_product(tr, clock, u0, tau, m, j, &opts)?;
                states.push(DiffusionState::new(&tr.profile_at(clock.t_of(tau))?, tau, u));
            }
            Ok(states)
        }
    }
}

/// Clock with `tau = 0` at `d.t_ref`, or at the end of `tr`, after checking
/// that `tr` covers the flow times `[t_ref - d.tau, t_ref]`.
pub fn diffusion_clock(tr: &FlowTrajectory, d: &DiffusionConfig) -> Result<BackwardClock, HarnessError> {
    let t_ref = d.t_ref.unwrap_or(tr.t_end);
    if !(t_ref <= tr.t_end && t_ref - d.tau >= tr.t0 - 1e-12) {
        return Err(HarnessError::Config(format!(
            "diffusion needs flow times [{}, {t_ref}] inside the trajectory [{}, {}]",
            t_ref - d.tau,
            tr.t0,
            tr.t_end
        )));
    }
    Ok(BackwardClock::new(t_ref))
}

fn glued_space(c: &GluedConfig) -> Result<GluedSpace, HarnessError> {
    if let Some(path) = &c.manifest {
        let mut g = read_glued(path)?;
        g.l = c.l;
        return Ok(g);
    }
    match c.caps.as_str() {
        "synthetic" => Ok(synthetic_neck(c.n, c.nodes, c.l)?),
        "dumbbell_halves" => Ok(GluedSpace::dumbbell_halves(c.n, c.nodes, c.l)?),
        other => Err(HarnessError::Config(format!("unknown caps {other:?}"))),
    }
}

/// `[fiber, radial_fraction, cost, applicable, pass]` per fiber resolution.
pub fn radial_sweep(w: &WarpedConfig) -> Result<Vec<[f64; 5]>, HarnessError> {
    w.validate()?;
    w.fibers
        .iter()
        .map(|&fiber| {
            let a = w.warp_a;
            let space = WarpedGridSpace::from_fn(w.t_min, w.t_max, w.radial, fiber, |t| 1.0 + a * t * t)?;
            let mu0 = space.slab_measure(w.slab0[0], w.slab0[1])?;
            let mu1 = space.slab_measure(w.slab1[0], w.slab1[1])?;
            let rep = radial_transport_check(&space, &mu0, &mu1, &w.options())?;
            let flag = |b: bool| if b { 1.0 } else { 0.0 };
            Ok([fiber as f64, rep.radial_fraction, rep.cost, flag(rep.applicable), flag(rep.pass)])
        })
        .collect()
}

/// Seeded random atom measures: `[instance, p, quantile formula, exact
/// oracle, w1_area]`, with costs raised to the power `p`.
pub fn oracle_suite(seed: u64, instances: usize, max_atoms: usize) -> Result<Vec<[f64; 5]>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for k in 0..instances {
        let draw = |rng: &mut ChaCha8Rng| -> Result<LineMeasure, HarnessError> {
            let n = rng.gen_range(1..=max_atoms);
            let atoms: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(1..=12) as f64)).collect();
            Ok(LineMeasure::normalized(atoms, vec![], vec![])?)
        };
        let mu = draw(&mut rng)?;
        let nu = draw(&mut rng)?;
        let a: Vec<f64> = mu.atoms().iter().map(|a| a.1).collect();
        let b: Vec<f64> = nu.atoms().iter().map(|a| a.1).collect();
        let cost: Vec<Vec<f64>> =
            mu.atoms().iter().map(|x| nu.atoms().iter().map(|y| (x.0 - y.0).abs()).collect()).collect();
        let area = w1_area(&mu, &nu);
        for p in [1u32, 2] {
            let q = wasserstein_p(&mu, &nu, p)?.powi(p as i32);
            let exact = discrete_ot_oracle(&a, &b, &cost, p)?.cost;
            rows.push([k as f64, p as f64, q, exact, area]);
        }
    }
    Ok(rows)
}

fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.out = None;
    sha256_hex(serde_json::to_string(&c).expect("configs serialize").as_bytes())
}

fn relative(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

type Stage<'a> = (&'static str, fn(&mut Run<'a>) -> Result<Outcome, HarnessError>);

/// Runs the configured stages under `cfg.out_dir()` and writes
/// `manifest.json` there. A failed stage is recorded with its diagnostics
/// and the later stages are skipped; failed property checks do not stop the
/// pipeline.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let mut run = Run {
        cfg,
        out: out.clone(),
        files: Vec::new(),
        summary: Map::new(),
        profile: None,
        traj: None,
        clock: None,
        u0: None,
    };
    // the output directory is left out so reruns elsewhere stay byte-identical
    let mut stored = cfg.clone();
    stored.out = None;
    let config_path = run.path("config.json");
    write_json(&config_path, &stored)?;

    let mut stages: Vec<Stage> = Vec::new();
    if cfg.flow.is_some() || cfg.diffusion.is_some() {
        stages.push(("geometry", Run::geometry));
    }
    if cfg.flow.is_some() {
        stages.push(("flow", Run::flow));
    }
    if cfg.diffusion.is_some() {
        stages.push(("diffusion", Run::diffusion));
    }
    if cfg.transport.is_some() {
        stages.push(("transport", Run::transport));
    }
    if cfg.pinch.is_some() {
        stages.push(("pinch", Run::pinch));
    }
    let mut records = Vec::new();
    let mut broken = false;
    for (name, stage) in stages {
        if broken {
            records.push(StageRecord { stage: name.into(), status: StageStatus::Skipped, diagnostics: vec![] });
            continue;
        }
        let record = match stage(&mut run) {
            Ok(o) if o.failed_checks.is_empty() => {
                StageRecord { stage: name.into(), status: StageStatus::Ok, diagnostics: o.notes }
            }
            Ok(o) => StageRecord {
                stage: name.into(),
                status: StageStatus::CheckFailed,
                diagnostics: o.failed_checks.into_iter().chain(o.notes).collect(),
            },
            Err(e) => {
                broken = true;
                let status = match e.exit_code() {
                    3 => StageStatus::Failed,
                    4 => StageStatus::CheckFailed,
                    _ => StageStatus::ConfigError,
                };
                StageRecord { stage: name.into(), status, diagnostics: vec![e.to_string()] }
            }
        };
        records.push(record);
    }

    let mut files = Vec::new();
    for p in &run.files {
        files.push(FileEntry { path: relative(&out, p), sha256: sha256_file(p)? });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files.dedup_by(|a, b| a.path == b.path);
    let manifest = RunManifest {
        experiment: cfg.name.clone(),
        config_hash: config_hash(cfg),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        stages: records,
        summary: run.summary,
        files,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Runs several experiments on a pool of [`crate::worker_count`] threads;
/// results keep the input order.
pub fn run_many(cfgs: &[ExperimentConfig]) -> Vec<Result<RunManifest, HarnessError>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunManifest, HarnessError>>>> =
        Mutex::new((0..cfgs.len()).map(|_| None).collect());
    let workers = crate::worker_count().min(cfgs.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= cfgs.len() {
                    break;
                }
                let r = run_experiment(&cfgs[k]);
                results.lock().expect("no worker panicked")[k] = Some(r);
            });
        }
    });
    results.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every job ran")).collect()
}
