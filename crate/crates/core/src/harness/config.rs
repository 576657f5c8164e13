//! Experiment configuration. Every default lives in the `Default` impls of
//! this file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::flow::EvolveOptions;
use crate::geometry::ProfileKind;
use crate::heat::{HeatMode, HeatOptions};
use crate::pinch_analysis::PinchOptions;
use crate::transport::RadialCheckOptions;

use super::HarnessError;

/// A pipeline `geometry -> flow -> diffusion -> transport -> pinch`; absent
/// sections are skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub description: String,
    /// Seed of every randomized stage.
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub flow: Option<FlowConfig>,
    pub diffusion: Option<DiffusionConfig>,
    pub transport: Option<TransportConfig>,
    pub pinch: Option<PinchConfig>,
    /// Output directory; `runs/<name>` when absent.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            description: String::new(),
            seed: 0,
            geometry: GeometryConfig::default(),
            flow: None,
            diffusion: None,
            transport: None,
            pinch: None,
            out: None,
        }
    }
}

/// Defaults: round sphere of radius 1, `n = 2`, 257 nodes, no perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub profile: ProfileKind,
    pub n: usize,
    pub nodes: usize,
    /// Odd perturbation amplitude of a dumbbell profile.
    pub perturbation: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { profile: ProfileKind::Round { rho: 1.0 }, n: 2, nodes: 257, perturbation: None }
    }
}

/// Defaults: run to the pinch, `delta_pinch = 1e-3`, `c_cfl = 0.2`, 200
/// snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub t_end: Option<f64>,
    pub delta_pinch: f64,
    pub c_cfl: f64,
    pub snapshots: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { t_end: None, delta_pinch: 1e-3, c_cfl: 0.2, snapshots: 200 }
    }
}

impl FlowConfig {
    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            t_end: self.t_end,
            delta_pinch: self.delta_pinch,
            c_cfl: self.c_cfl,
            snapshots: self.snapshots,
            ..EvolveOptions::default()
        }
    }
}

/// Initial density of a diffusion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitSpec {
    /// Constant density.
    Uniform,
    /// `1 + a cos r`.
    Cosine(f64),
    /// Narrow bump at distance `d` from the south (`x = -1`) or north pole.
    Dirac { north: bool, d: f64 },
}

impl FromStr for InitSpec {
    type Err = HarnessError;

    /// `uniform`, `cosine:A`, `dirac:south:D` or `dirac:north:D` (`cap1` and
    /// `cap2` are accepted for `south` and `north`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Config(format!("bad init spec {s:?}; use uniform, cosine:A or dirac:south|north:D"));
        let num = |v: &str| v.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["uniform"] => Ok(InitSpec::Uniform),
            ["cosine", a] => Ok(InitSpec::Cosine(num(a)?)),
            ["dirac", side, d] => {
                let north = match *side {
                    "south" | "cap1" => false,
                    "north" | "cap2" => true,
                    _ => return Err(bad()),
                };
                Ok(InitSpec::Dirac { north, d: num(d)? })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Uniform => write!(f, "uniform"),
            InitSpec::Cosine(a) => write!(f, "cosine:{a}"),
            InitSpec::Dirac { north, d } => write!(f, "dirac:{}:{d}", if *north { "north" } else { "south" }),
        }
    }
}

/// How a diffusion is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffusionMethod {
    /// Conjugate heat equation.
    Pde,
    /// Operator product with `m` slices of `j` steps.
    Trotter { m: usize, j: usize },
}

impl FromStr for DiffusionMethod {
    type Err = HarnessError;

    /// `pde` or `trotter:M,J`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Config(format!("bad diffusion method {s:?}; use pde or trotter:M,J"));
        if s == "pde" {
            return Ok(DiffusionMethod::Pde);
        }
        let (m, j) = s.strip_prefix("trotter:").and_then(|r| r.split_once(',')).ok_or_else(bad)?;
        let m: usize = m.trim().parse().map_err(|_| bad())?;
        let j: usize = j.trim().parse().map_err(|_| bad())?;
        if m == 0 || j == 0 {
            return Err(bad());
        }
        Ok(DiffusionMethod::Trotter { m, j })
    }
}

impl fmt::Display for DiffusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionMethod::Pde => write!(f, "pde"),
            DiffusionMethod::Trotter { m, j } => write!(f, "trotter:{m},{j}"),
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(InitSpec);
string_serde!(DiffusionMethod);

/// Defaults: PDE in conservative mode from a uniform density over
/// `tau in [0, 0.05]`, 10 frames, `t_ref` at the end of the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionConfig {
    /// Flow time where `tau = 0`; the end of the trajectory when absent.
    pub t_ref: Option<f64>,
    pub tau: f64,
    pub init: InitSpec,
    /// Second initial density; its diffusion is compared with the first by
    /// the contractivity monitor.
    pub second_init: Option<InitSpec>,
    pub method: DiffusionMethod,
    pub mode: HeatMode,
    pub frames: usize,
    pub c_cfl: f64,
    /// `(m, m)` products compared with the PDE at `tau`; errors must not
    /// increase along the list.
    pub trotter_sweep: Vec<usize>,
    /// Largest admissible sup error of the last sweep entry.
    pub trotter_tol: f64,
    /// Gauss-Jacobi directions per geodesic sphere.
    pub directions: usize,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            t_ref: None,
            tau: 0.05,
            init: InitSpec::Uniform,
            second_init: None,
            method: DiffusionMethod::Pde,
            mode: HeatMode::Conservative,
            frames: 10,
            c_cfl: 0.5,
            trotter_sweep: Vec::new(),
            trotter_tol: 1e-2,
            directions: 24,
        }
    }
}

impl DiffusionConfig {
    pub fn heat_options(&self) -> HeatOptions {
        HeatOptions { mode: self.mode, c_cfl: self.c_cfl, frames: self.frames }
    }
}

/// Warped grid `[t_min, t_max] x S^1` with `f(t) = 1 + warp_a t^2` and two
/// slab measures. Defaults: `[-1, 1]`, 16 radial nodes, fibers 8 and 16,
/// slabs at both ends, `p = 2`, `eps_grid = 0.05`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarpedConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub radial: usize,
    /// Fiber resolutions; the radial fraction must not decrease along them.
    pub fibers: Vec<usize>,
    pub warp_a: f64,
    pub slab0: [f64; 2],
    pub slab1: [f64; 2],
    pub p: u32,
    pub eps_grid: f64,
}

impl Default for WarpedConfig {
    fn default() -> Self {
        WarpedConfig {
            t_min: -1.0,
            t_max: 1.0,
            radial: 16,
            fibers: vec![8, 16],
            warp_a: 0.0,
            slab0: [-1.0, -1.0],
            slab1: [1.0, 1.0],
            p: 2,
            eps_grid: 0.05,
        }
    }
}

impl WarpedConfig {
    pub fn options(&self) -> RadialCheckOptions {
        RadialCheckOptions { p: self.p, eps_grid: self.eps_grid }
    }
}

/// Defaults: `p = 1`, no warped check, no random oracle instances,
/// contractivity tolerance `1e-4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub p: u32,
    pub warped: Option<WarpedConfig>,
    /// Seeded random atom-measure pairs checked against the exact oracle.
    pub oracle_instances: usize,
    pub oracle_atoms: usize,
    /// Relative tolerance of the contractivity monitor.
    pub rel_tol: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { p: 1, warped: None, oracle_instances: 0, oracle_atoms: 8, rel_tol: 1e-4 }
    }
}

/// Caps of a glued space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GluedConfig {
    /// `synthetic` (round caps) or `dumbbell_halves`; ignored when
    /// `manifest` is set.
    pub caps: String,
    pub manifest: Option<PathBuf>,
    pub n: usize,
    pub nodes: usize,
    pub l: f64,
}

impl Default for GluedConfig {
    fn default() -> Self {
        GluedConfig { caps: "synthetic".into(), manifest: None, n: 2, nodes: 257, l: 0.5 }
    }
}

/// Defaults are those of [`PinchOptions`] on synthetic caps with `L = 0.5`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PinchConfig {
    pub glued: GluedConfig,
    pub m: f64,
    pub eps0: f64,
    pub sweep: usize,
    pub delta: Option<f64>,
    pub w1_frames: usize,
    pub w1_tau_end: f64,
    pub bump_dist: f64,
    pub trotter_m: usize,
    pub trotter_j: usize,
}

impl Default for PinchConfig {
    fn default() -> Self {
        let o = PinchOptions::default();
        PinchConfig {
            glued: GluedConfig::default(),
            m: o.m,
            eps0: o.eps0,
            sweep: o.sweep,
            delta: o.delta,
            w1_frames: o.w1_frames,
            w1_tau_end: o.w1_tau_end,
            bump_dist: o.bump_dist,
            trotter_m: o.trotter_m,
            trotter_j: o.trotter_j,
        }
    }
}

impl PinchConfig {
    pub fn options(&self) -> PinchOptions {
        PinchOptions {
            m: self.m,
            eps0: self.eps0,
            sweep: self.sweep,
            delta: self.delta,
            w1_frames: self.w1_frames,
            w1_tau_end: self.w1_tau_end,
            bump_dist: self.bump_dist,
            trotter_m: self.trotter_m,
            trotter_j: self.trotter_j,
        }
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), HarnessError> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Config(msg()))
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Checks ranges without computing anything.
    pub fn validate(&self) -> Result<(), HarnessError> {
        require(
            !self.name.is_empty() && self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
            || format!("name {:?} must be nonempty and use [A-Za-z0-9_-]", self.name),
        )?;
        let g = &self.geometry;
        require(g.n >= 2, || format!("geometry.n = {} must be >= 2", g.n))?;
        require(g.nodes >= 33, || format!("geometry.nodes = {} must be >= 33", g.nodes))?;
        match &g.profile {
            ProfileKind::Round { rho } => require(positive(*rho), || "round rho must be > 0".into())?,
            ProfileKind::Cylinder { c } => require(positive(*c), || "cylinder c must be > 0".into())?,
            ProfileKind::Dumbbell { a } => require((0.0..1.0).contains(a), || "dumbbell a must be in [0, 1)".into())?,
            ProfileKind::Custom { .. } => {
                return Err(HarnessError::Config("custom profiles cannot be generated".into()))
            }
        }
        if let Some(amp) = g.perturbation {
            require(matches!(g.profile, ProfileKind::Dumbbell { .. }) && amp.is_finite(), || {
                "perturbation applies to dumbbell profiles only".into()
            })?;
        }
        if let Some(f) = &self.flow {
            require(positive(f.delta_pinch), || "flow.delta_pinch must be > 0".into())?;
            require(positive(f.c_cfl) && f.c_cfl <= 0.5, || "flow.c_cfl must be in (0, 0.5]".into())?;
            require(f.snapshots >= 2, || "flow.snapshots must be >= 2".into())?;
            if let Some(t) = f.t_end {
                require(positive(t), || "flow.t_end must be > 0".into())?;
            }
        }
        if let Some(d) = &self.diffusion {
            require(positive(d.tau), || "diffusion.tau must be > 0".into())?;
            require(d.frames >= 1, || "diffusion.frames must be >= 1".into())?;
            require(positive(d.c_cfl) && d.c_cfl <= 1.0, || "diffusion.c_cfl must be in (0, 1]".into())?;
            require(positive(d.trotter_tol), || "diffusion.trotter_tol must be > 0".into())?;
            require(d.directions >= 2, || "diffusion.directions must be >= 2".into())?;
            require(d.trotter_sweep.iter().all(|&m| m > 0), || "trotter_sweep entries must be > 0".into())?;
            if let Some(t) = d.t_ref {
                require(t >= 0.0 && t.is_finite(), || "diffusion.t_ref must be >= 0".into())?;
            }
        }
        if let Some(t) = &self.transport {
            require(matches!(t.p, 1 | 2), || format!("transport.p = {} must be 1 or 2", t.p))?;
            require((1..=8).contains(&t.oracle_atoms), || "transport.oracle_atoms must be in 1..=8".into())?;
            require(positive(t.rel_tol), || "transport.rel_tol must be > 0".into())?;
            if let Some(w) = &t.warped {
                w.validate()?;
            }
        }
        if let Some(p) = &self.pinch {
            require(positive(p.m), || "pinch.m must be > 0".into())?;
            require(positive(p.eps0), || "pinch.eps0 must be > 0".into())?;
            require(p.sweep >= 1, || "pinch.sweep must be >= 1".into())?;
            require(p.glued.l >= 0.0 && p.glued.l.is_finite(), || "pinch.glued.l must be >= 0".into())?;
            require(
                p.glued.manifest.is_some() || matches!(p.glued.caps.as_str(), "synthetic" | "dumbbell_halves"),
                || format!("pinch.glued.caps {:?} must be synthetic or dumbbell_halves", p.glued.caps),
            )?;
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(&self.name))
    }
}

impl WarpedConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        require(self.t_max > self.t_min, || "warped t_max must exceed t_min".into())?;
        require(self.radial >= 2, || "warped radial must be >= 2".into())?;
        require(!self.fibers.is_empty() && self.fibers.iter().all(|&f| f >= 3), || {
            "warped fibers must be a nonempty list of values >= 3".into()
        })?;
        require(matches!(self.p, 1 | 2), || "warped p must be 1 or 2".into())?;
        require((0.0..1.0).contains(&self.eps_grid), || "warped eps_grid must be in [0, 1)".into())?;
        require(self.slab0[0] <= self.slab0[1] && self.slab1[0] <= self.slab1[1], || {
            "slab bounds must be ordered".into()
        })
    }
}
