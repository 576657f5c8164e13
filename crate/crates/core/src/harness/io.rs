//! CSV and JSON persistence. Floats are written as shortest round-trip
//! decimals, so every table reads back bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::flow::{FlowTrajectory, Termination};
use crate::geometry::{EndKind, GluedSpace, GridProfile, ProfileKind};
use crate::heat::DiffusionState;
use crate::transport::{LineMeasure, TransportPlan};

use super::HarnessError;

/// Shortest decimal that parses back to `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::format(path, e))
}

/// Writes a table of floats under `header`.
pub(crate) fn write_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    w.write_record(header).map_err(|e| HarnessError::format(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(|e| HarnessError::format(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Header and float columns of a CSV file.
pub(crate) fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    let header: Vec<String> =
        r.headers().map_err(|e| HarnessError::format(path, e))?.iter().map(|h| h.trim().to_string()).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::format(path, e))?;
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| HarnessError::format(path, format!("row {}: {field:?} is not a number", line + 2)))?;
            cols[k].push(v);
        }
    }
    Ok((header, cols))
}

fn expect_header(path: &Path, got: &[String], want: &[&str]) -> Result<(), HarnessError> {
    if got.iter().map(String::as_str).eq(want.iter().copied()) {
        Ok(())
    } else {
        Err(HarnessError::format(path, format!("header {got:?}, expected {want:?}")))
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileSidecar {
    n: usize,
    t: f64,
    #[serde(flatten)]
    kind: ProfileKind,
    ends: [EndKind; 2],
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn write_profile_table(p: &GridProfile, path: &Path) -> Result<(), HarnessError> {
    write_table(path, &["x", "phi", "psi"], (0..p.len()).map(|i| vec![p.xs[i], p.phi[i], p.psi[i]]))
}

fn read_profile_table(path: &Path) -> Result<[Vec<f64>; 3], HarnessError> {
    let (header, cols) = read_table(path)?;
    expect_header(path, &header, &["x", "phi", "psi"])?;
    let [x, phi, psi]: [Vec<f64>; 3] = cols.try_into().expect("three columns");
    Ok([x, phi, psi])
}

/// Profile CSV `x,phi,psi` plus the sidecar `{n, t, kind, params, ends}`
/// next to it with extension `.json`.
pub fn write_profile(p: &GridProfile, csv_path: &Path) -> Result<(), HarnessError> {
    write_profile_table(p, csv_path)?;
    let side = ProfileSidecar { n: p.n, t: p.t, kind: p.kind.clone(), ends: p.ends };
    write_json(&sidecar_path(csv_path), &side)
}

pub fn read_profile(csv_path: &Path) -> Result<GridProfile, HarnessError> {
    let side: ProfileSidecar = read_json(&sidecar_path(csv_path))?;
    let [x, phi, psi] = read_profile_table(csv_path)?;
    Ok(GridProfile::from_table(side.n, x, phi, psi, side.ends, side.t, side.kind)?)
}

#[derive(Serialize, Deserialize)]
struct TrajectoryManifest {
    n: usize,
    nodes: usize,
    #[serde(flatten)]
    kind: ProfileKind,
    ends: [EndKind; 2],
    termination: Termination,
    times: Vec<f64>,
    min_psi: Vec<f64>,
    neck: Vec<f64>,
    snapshots: Vec<String>,
}

/// Directory with `manifest.json` and one `x,phi,psi` CSV per snapshot.
pub fn write_trajectory(tr: &FlowTrajectory, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    create_dir(dir)?;
    let mut files = Vec::new();
    let mut names = Vec::new();
    for (k, s) in tr.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:04}.csv");
        let path = dir.join(&name);
        write_profile_table(&s.profile, &path)?;
        files.push(path);
        names.push(name);
    }
    let first = tr.first();
    let manifest = TrajectoryManifest {
        n: first.n,
        nodes: first.len(),
        kind: first.kind.clone(),
        ends: first.ends,
        termination: tr.termination,
        times: tr.times(),
        min_psi: tr.min_psi.clone(),
        neck: tr.neck.clone(),
        snapshots: names,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    files.push(path);
    Ok(files)
}

pub fn read_trajectory(dir: &Path) -> Result<FlowTrajectory, HarnessError> {
    let m: TrajectoryManifest = read_json(&dir.join("manifest.json"))?;
    if m.times.len() != m.snapshots.len() {
        return Err(HarnessError::format(dir.join("manifest.json"), "times and snapshots differ in length"));
    }
    let mut profiles = Vec::with_capacity(m.snapshots.len());
    for (name, &t) in m.snapshots.iter().zip(&m.times) {
        let [x, phi, psi] = read_profile_table(&dir.join(name))?;
        profiles.push(GridProfile::from_table(m.n, x, phi, psi, m.ends, t, m.kind.clone())?);
    }
    Ok(FlowTrajectory::from_profiles(profiles, m.termination)?)
}

#[derive(Serialize, Deserialize)]
struct Frame {
    tau: f64,
    total_mass: f64,
    file: String,
}

/// One `node,r,u,dvol_weight` CSV per frame plus `frames.json`.
pub fn write_diffusion(states: &[DiffusionState], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    create_dir(dir)?;
    let mut files = Vec::new();
    let mut frames = Vec::new();
    for (k, s) in states.iter().enumerate() {
        let file = format!("diffusion_{k:04}.csv");
        let path = dir.join(&file);
        write_table(
            &path,
            &["node", "r", "u", "dvol_weight"],
            (0..s.u.len()).map(|i| vec![i as f64, s.r[i], s.u[i], s.dvol[i]]),
        )?;
        files.push(path);
        frames.push(Frame { tau: s.tau, total_mass: s.total_mass, file });
    }
    let path = dir.join("frames.json");
    write_json(&path, &frames)?;
    files.push(path);
    Ok(files)
}

pub fn read_diffusion(dir: &Path) -> Result<Vec<DiffusionState>, HarnessError> {
    let frames: Vec<Frame> = read_json(&dir.join("frames.json"))?;
    frames
        .into_iter()
        .map(|f| {
            let path = dir.join(&f.file);
            let (header, cols) = read_table(&path)?;
            expect_header(&path, &header, &["node", "r", "u", "dvol_weight"])?;
            let [_, r, u, dvol]: [Vec<f64>; 4] = cols.try_into().expect("four columns");
            Ok(DiffusionState { tau: f.tau, r, u, dvol, total_mass: f.total_mass })
        })
        .collect()
}

/// Atoms as `position,mass` or a piecewise-linear density as `x,density`.
pub fn read_measure(path: &Path) -> Result<LineMeasure, HarnessError> {
    let (header, cols) = read_table(path)?;
    let [a, b]: [Vec<f64>; 2] =
        cols.try_into().map_err(|_| HarnessError::format(path, "a measure has exactly two columns"))?;
    let m = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["position", "mass"] => LineMeasure::from_atoms(a.into_iter().zip(b).collect()),
        ["x", "density"] => LineMeasure::from_density(a, b),
        _ => return Err(HarnessError::format(path, format!("header {header:?}, expected position,mass or x,density"))),
    };
    m.map_err(|e| HarnessError::format(path, e))
}

pub fn write_measure(m: &LineMeasure, path: &Path) -> Result<(), HarnessError> {
    match (m.atoms().is_empty(), m.grid().is_empty()) {
        (false, true) => write_table(path, &["position", "mass"], m.atoms().iter().map(|a| vec![a.0, a.1])),
        (true, false) => {
            write_table(path, &["x", "density"], m.grid().iter().zip(m.density_values()).map(|(x, d)| vec![*x, *d]))
        }
        _ => Err(HarnessError::format(path, "only purely atomic or purely continuous measures have a CSV form")),
    }
}

/// Plan as `x,y,mass` triples.
pub fn write_plan(plan: &TransportPlan, path: &Path) -> Result<(), HarnessError> {
    write_table(path, &["x", "y", "mass"], plan.pairs.iter().map(|p| vec![p.0, p.1, p.2]))
}

#[derive(Serialize, Deserialize)]
struct GluedManifest {
    cap1: PathBuf,
    cap2: PathBuf,
    l: f64,
}

/// JSON manifest referencing two profile CSVs (written next to it) and `L`.
pub fn write_glued(g: &GluedSpace, manifest: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = manifest.parent().unwrap_or(Path::new("."));
    if !dir.as_os_str().is_empty() {
        create_dir(dir)?;
    }
    let stem = manifest.file_stem().and_then(|s| s.to_str()).unwrap_or("glued");
    let names = [format!("{stem}_cap1.csv"), format!("{stem}_cap2.csv")];
    let mut files = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let path = dir.join(name);
        write_profile(g.cap(k), &path)?;
        files.push(sidecar_path(&path));
        files.push(path);
    }
    write_json(manifest, &GluedManifest { cap1: names[0].clone().into(), cap2: names[1].clone().into(), l: g.l })?;
    files.push(manifest.to_path_buf());
    Ok(files)
}

/// Reads a glued manifest; cap paths are relative to the manifest.
pub fn read_glued(manifest: &Path) -> Result<GluedSpace, HarnessError> {
    let m: GluedManifest = read_json(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let cap1 = read_profile(&dir.join(&m.cap1))?;
    let cap2 = read_profile(&dir.join(&m.cap2))?;
    Ok(GluedSpace::new(cap1, cap2, m.l)?)
}
