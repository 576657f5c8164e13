use std::time::Instant;

use neckflow::flow::*;
use neckflow::geometry::*;
use neckflow::harness::{bundled, oracle_suite, radial_sweep, registry_list, run_many, ExperimentConfig, WarpedConfig};
use neckflow::heat::*;
use neckflow::pinch_analysis::*;

type Verdict = (bool, String);
type Criterion = (u32, &'static str, fn() -> Verdict);

fn round(nodes: usize) -> GridProfile {
    build_profile(&ProfileKind::Round { rho: 1.0 }, 2, nodes).unwrap()
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn mass(u: &[f64], dvol: &[f64]) -> f64 {
    u.iter().zip(dvol).map(|(a, b)| a * b).sum()
}

fn c01_round_sphere_collapse_time() -> Verdict {
    let start = Instant::now();
    let tr = evolve(round(513), &EvolveOptions { delta_pinch: 0.05, ..Default::default() }).unwrap();
    let rep = detect_pinch(&tr, 0.05);
    let secs = start.elapsed().as_secs_f64();
    let t_est = rep.t_est.unwrap_or(f64::NAN);
    let pass = (t_est - 0.25).abs() <= 2e-3 && secs < 60.0 && rep.classification == PinchClass::GlobalCollapse;
    (pass, format!("T_est = {t_est:.6}, {:?}, {secs:.1} s", rep.classification))
}

fn c02_cylinder_soliton() -> Verdict {
    let p = build_profile(&ProfileKind::Cylinder { c: 1.0 }, 2, 129).unwrap();
    let t_collapse = 0.5;
    let tr = evolve(p, &EvolveOptions { t_end: Some(0.9 * t_collapse), snapshots: 90, ..Default::default() }).unwrap();
    let mut err: f64 = 0.0;
    for s in &tr.snapshots {
        let want = 1.0 - 2.0 * s.profile.t;
        for v in &s.profile.psi {
            err = err.max((v * v - want).abs() / want);
        }
    }
    let pass = err <= 1e-3 && (tr.last().t - 0.9 * t_collapse).abs() < 1e-12;
    (pass, format!("max relative error of psi^2 {err:.2e} up to t = {}", tr.last().t))
}

fn c03_single_point_neckpinch() -> Verdict {
    let delta = 1e-3;
    let mut located = Vec::new();
    let mut details = Vec::new();
    let mut pass = true;
    for nodes in [257, 513] {
        let p0 = build_profile(&ProfileKind::Dumbbell { a: 0.9 }, 2, nodes).unwrap();
        let tr = evolve(p0.clone(), &EvolveOptions { delta_pinch: delta, ..Default::default() }).unwrap();
        let rep = detect_pinch(&tr, delta);
        let last = tr.last();
        let h = p0.psi.iter().copied().fold(0.0, f64::max);
        let i0 = rep.x0_index;
        let x0_interior = i0 > 0 && i0 < nodes - 1;
        let min_psi = last.psi[i0];
        // outside the neck and the polar caps, where the initial profile is at least half the bump height
        let bulbs = (0..nodes).filter(|&i| p0.psi[i] >= 0.5 * h).map(|i| last.psi[i] / h).fold(f64::INFINITY, f64::min);
        let small: Vec<usize> = (1..nodes - 1).filter(|&i| last.psi[i] < delta).collect();
        let point = !small.is_empty() && small.iter().all(|&i| i.abs_diff(i0) <= 2);
        // psi falls monotonically into x0 across the neck, so the zero set is one node
        let lo = (0..i0).rev().find(|&i| p0.psi[i] >= 0.5 * h).unwrap_or(0);
        let hi = (i0..nodes).find(|&i| p0.psi[i] >= 0.5 * h).unwrap_or(nodes - 1);
        let v_shape =
            (lo..i0).all(|i| last.psi[i] > last.psi[i + 1]) && (i0..hi).all(|i| last.psi[i + 1] > last.psi[i]);
        pass &= rep.classification == PinchClass::Neckpinch
            && x0_interior
            && min_psi < delta
            && bulbs >= 0.3
            && point
            && v_shape;
        details.push(format!(
            "N = {nodes}: x0 = {:.5} (node {i0}), min psi {min_psi:.2e}, bulbs >= {bulbs:.3} h, {} nodes below delta",
            rep.x0_est,
            small.len()
        ));
        located.push((rep.x0_est, 2.0 / (nodes - 1) as f64));
    }
    let shift = (located[0].0 - located[1].0).abs();
    pass &= shift <= 2.0 * located[1].1 + 1e-12;
    (pass, format!("{}; x0 shift {shift:.2e}", details.join("; ")))
}

/// Richardson limit from `s` and `s / 2` for an `O(s^2)` remainder.
fn richardson(coef: impl Fn(f64) -> Vec<f64>, s: f64) -> Vec<f64> {
    let (a, b) = (coef(s), coef(s / 2.0));
    a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
}

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    sup(got, want) / scale
}

type Operator = fn(&GridProfile, &[f64], OperatorParams) -> Result<Vec<f64>, HeatError>;

fn c04_operator_taylor_coefficients() -> Verdict {
    let p = round(257);
    let d = p.dim() as f64;
    let r = p.arclength();
    let lap_of = |f: &[f64]| radial_laplacian(&p, f).unwrap();
    let scalar = curvature(&p).unwrap().scalar;
    let params = |s: f64| OperatorParams { r: s, tau: 0.0 };
    let tests: [(&str, Vec<f64>); 2] =
        [("cos r", r.iter().map(|r| r.cos()).collect()), ("cos^2 r", r.iter().map(|r| r.cos().powi(2)).collect())];
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (name, f) in &tests {
        let lap = lap_of(f);
        let scaled = |op: Operator, k: f64| {
            let p = &p;
            move |s: f64| -> Vec<f64> {
                let g = op(p, f, params(s)).unwrap();
                g.iter().zip(f).map(|(a, b)| (a - b) * k * d / (s * s)).collect()
            }
        };
        let sigma = rel_err(&richardson(scaled(sigma_avg, 2.0), 0.05), &lap);
        let rf: Vec<f64> = scalar.iter().zip(f).map(|(s, v)| -s * v).collect();
        let theta = rel_err(&richardson(scaled(theta_scale, 6.0), 0.1), &rf);
        let conj: Vec<f64> = (0..p.len()).map(|i| lap[i] - scalar[i] * f[i]).collect();
        let a = rel_err(&richardson(scaled(a_step, 8.0), 0.05), &conj);
        worst = worst.max(sigma).max(theta).max(a);
        details.push(format!("{name}: sigma {sigma:.1e}, theta {theta:.1e}, A {a:.1e}"));
    }
    (worst < 0.05, details.join("; "))
}

fn round_trajectory(t_ref: f64, nodes: usize) -> FlowTrajectory {
    evolve(round(nodes), &EvolveOptions { t_end: Some(t_ref), snapshots: 40, ..Default::default() }).unwrap()
}

fn c05_trotter_chernov_convergence() -> Verdict {
    let start = Instant::now();
    let (t_ref, tau) = (0.1, 0.05);
    let tr = round_trajectory(t_ref, 257);
    let clock = BackwardClock::new(t_ref);
    let p0 = tr.profile_at(t_ref).unwrap();
    let f: Vec<f64> = p0.arclength().iter().map(|r| 1.0 + 0.5 * r.cos()).collect();
    let u0 = normalized(&p0, &f).unwrap();
    let pde =
        conjugate_heat_solve(&tr, clock, &u0, 0.0, tau, &HeatOptions { frames: 1, ..Default::default() }).unwrap();
    let reference = &pde.last().unwrap().u;
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&mj| sup(&trotter_product(&tr, clock, &u0, tau, mj, mj, &TrotterOptions::default()).unwrap(), reference))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = errs[2] < 1e-2 && errs.windows(2).all(|w| w[1] <= w[0]) && secs < 300.0;
    (pass, format!("sup errors (8,16,32) = {:.2e} {:.2e} {:.2e}, {secs:.1} s", errs[0], errs[1], errs[2]))
}

fn c06_mass_conservation() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let t_ref = 0.1;
    let round_tr = round_trajectory(t_ref, 257);
    let dumbbell_tr = evolve(
        build_profile(&ProfileKind::Dumbbell { a: 0.9 }, 2, 257).unwrap(),
        &EvolveOptions { t_end: Some(0.004), snapshots: 40, ..Default::default() },
    )
    .unwrap();
    for (tr, t_ref) in [(&round_tr, t_ref), (&dumbbell_tr, 0.004)] {
        let clock = BackwardClock::new(t_ref);
        let last = tr.last();
        let r = last.arclength();
        let inits = [
            normalized(last, &vec![1.0; last.len()]).unwrap(),
            normalized(last, &r.iter().map(|r| 1.0 + 0.5 * r.cos()).collect::<Vec<_>>()).unwrap(),
            dirac_bump(last, 0.3 * last.r_max()).unwrap(),
        ];
        for u0 in &inits {
            let opts = HeatOptions { frames: 10, ..Default::default() };
            for s in conjugate_heat_solve(tr, clock, u0, 0.0, t_ref, &opts).unwrap() {
                worst = worst.max((mass(&s.u, &s.dvol) - 1.0).abs());
            }
            runs += 1;
        }
    }
    let g = synthetic_neck(2, 129, 0.5).unwrap();
    let mut init = GluedDensity::zeros(&g, 5);
    init.cap1 = dirac_bump(&g.cap1, 0.5).unwrap();
    for s in
        weak_diffusion_glued(&g, &CapMetrics::Frozen, &init, &[0.005, 0.01, 0.02], 8, 8, &TrotterOptions::default())
            .unwrap()
    {
        worst = worst.max((mass(&s.density.cap1, &s.dvol[0]) + mass(&s.density.cap2, &s.dvol[1]) - 1.0).abs());
    }
    runs += 1;
    (worst <= 1e-6, format!("max |mass - 1| = {worst:.2e} over {runs} diffusion runs"))
}

fn c07_line_transport_oracle() -> Verdict {
    let rows = oracle_suite(7, 100, 8).unwrap();
    let exact = rows.iter().map(|r| (r[2] - r[3]).abs()).fold(0.0, f64::max);
    let fubini = rows.iter().filter(|r| r[1] == 1.0).map(|r| (r[2] - r[4]).abs()).fold(0.0, f64::max);
    let instances = rows.iter().map(|r| r[0] as usize).max().unwrap() + 1;
    let pass = instances == 100 && exact <= 1e-8 && fubini <= 1e-8;
    (pass, format!("{instances} instances, quantile vs min-cost flow {exact:.1e}, quantile vs CDF area {fubini:.1e}"))
}

fn c08_radial_transport() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for warp_a in [0.0, 0.5] {
        let w = WarpedConfig { radial: 16, fibers: vec![8, 16], warp_a, ..Default::default() };
        let rows = radial_sweep(&w).unwrap();
        let fractions: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        pass &= fractions.iter().all(|f| *f >= 0.95) && fractions.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        details.push(format!("warp {warp_a}: radial fractions at fibers 8, 16 = {fractions:?}"));
    }
    (pass, details.join("; "))
}

fn c09_weak_diffusion_support() -> Verdict {
    let mut pass = true;
    let mut frames = 0;
    for g in [synthetic_neck(2, 129, 0.5).unwrap(), GluedSpace::dumbbell_halves(2, 129, 0.3).unwrap()] {
        let mut init = GluedDensity::zeros(&g, 9);
        init.cap1 = dirac_bump(&g.cap1, 0.5 * g.cap1.r_max()).unwrap();
        let taus = [0.0, 0.002, 0.005, 0.01, 0.02];
        for s in weak_diffusion_glued(&g, &CapMetrics::Frozen, &init, &taus, 8, 8, &TrotterOptions::default()).unwrap()
        {
            pass &= s.density.cap2.iter().all(|v| *v == 0.0)
                && s.density.interval.iter().all(|v| *v == 0.0)
                && s.cap_mass[1] == 0.0
                && s.interval_mass == 0.0
                && s.cap_mass[0] > 0.0;
            frames += 1;
        }
    }
    (pass, format!("{frames} frames, mass on M2 and on the interval identically 0"))
}

fn c10_blow_up_bound() -> Verdict {
    let g = synthetic_neck(2, 257, 0.5).unwrap();
    let rep = contradiction_report(&g, &PinchOptions { eps0: 0.1, sweep: 5, m: 10.0, ..Default::default() }).unwrap();
    let first = &rep.sweep[0];
    let floor_ok = (first.floor - 1.875).abs() <= 1e-12 && first.eps == 0.1;
    let rates_ok = rep.sweep.iter().all(|s| s.rate.iter().zip(&s.bound).all(|(r, b)| r > b));
    let mut doubling = Vec::new();
    let mut doubles = true;
    for w in rep.sweep.windows(2) {
        let eps_halved = (w[1].eps - 0.5 * w[0].eps).abs() <= 1e-15;
        let floor_ratio = w[1].floor / w[0].floor;
        let bound_ratio = w[1].m_k / w[0].m_k;
        doubles &= eps_halved && (floor_ratio - 2.0).abs() <= 1e-12 && bound_ratio >= 2.0 - 1e-9;
        doubling.push(bound_ratio);
    }
    (
        floor_ok && rates_ok && doubles && rep.bounds_increasing,
        format!(
            "floor at eps 0.1 = {}, rates exceed bounds {rates_ok}, bound ratios per halving {doubling:.4?}",
            first.floor
        ),
    )
}

fn c11_w1_decomposition() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for g in [synthetic_neck(2, 129, 0.5).unwrap(), GluedSpace::dumbbell_halves(2, 129, 0.5).unwrap()] {
        let bump = |cap: usize, frac: f64| {
            let p = g.cap(cap);
            let r0 = match g.attachments[cap] {
                CapAttachment::Lower => frac * p.r_max(),
                CapAttachment::Upper => (1.0 - frac) * p.r_max(),
            };
            let mut d = GluedDensity::zeros(&g, 3);
            let u = dirac_bump(p, r0).unwrap();
            if cap == 0 {
                d.cap1 = u;
            } else {
                d.cap2 = u;
            }
            d
        };
        for a in [0.05, 0.3, 0.6, 0.95] {
            for b in [0.1, 0.5, 0.9] {
                let dec = w1_glued_decomposition(&g, &bump(0, a), &bump(1, b)).unwrap();
                worst = worst.max((dec.decomposed() - dec.w1_direct).abs());
                cases += 1;
            }
        }
    }
    let rep =
        contradiction_report(&synthetic_neck(2, 129, 0.5).unwrap(), &PinchOptions { sweep: 2, ..Default::default() })
            .unwrap();
    // the series with L fixed is itself a sum, so its terms must be consistent
    for row in &rep.w1_series {
        worst = worst.max((row.w1_fixed_l - (rep.l + row.int_f + row.int_g)).abs());
        cases += 1;
    }
    (worst <= 1e-6, format!("max |L + int F + int G - W1| = {worst:.1e} over {cases} cases"))
}

fn c12_contractivity_monitor() -> Verdict {
    let t_ref = 0.1;
    let tr = round_trajectory(t_ref, 257);
    let clock = BackwardClock::new(t_ref);
    let last = tr.last();
    let u1 = dirac_bump(last, 0.3 * last.r_max()).unwrap();
    let u2 = dirac_bump(last, 0.7 * last.r_max()).unwrap();
    let opts = MonitorOptions { heat: HeatOptions { frames: 10, ..Default::default() }, ..Default::default() };
    let rep = contractivity_monitor(&tr, clock, &u1, &u2, 0.0, t_ref, &opts).unwrap();
    let worst = rep.rows.windows(2).map(|w| (w[1].w1 - w[0].w1) / w[0].w1).fold(f64::NEG_INFINITY, f64::max);
    let pass = worst <= 1e-4 && rep.pass_w1;
    (
        pass,
        format!(
            "W1 from {:.6} to {:.6}, largest relative step increase {worst:.2e}",
            rep.rows[0].w1,
            rep.rows.last().unwrap().w1
        ),
    )
}

fn c13_determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let configs = |root: &std::path::Path| -> Vec<ExperimentConfig> {
        registry_list()
            .iter()
            .map(|e| {
                let mut c = bundled(&e.name).unwrap();
                c.out = Some(root.join(&e.name));
                c
            })
            .collect()
    };
    let first = run_many(&configs(a.path()));
    let second = run_many(&configs(b.path()));
    let mut pass = true;
    let mut files = 0;
    for (x, y) in first.iter().zip(&second) {
        let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
        pass &= x.exit_code() == 0 && !x.files.is_empty() && x.files == y.files && x.config_hash == y.config_hash;
        files += x.files.len();
    }
    (pass, format!("{} experiments, {files} files with identical checksums", first.len()))
}

const CRITERIA: [Criterion; 13] = [
    (1, "round collapse time", c01_round_sphere_collapse_time),
    (2, "cylinder soliton", c02_cylinder_soliton),
    (3, "single-point neckpinch", c03_single_point_neckpinch),
    (4, "operator Taylor coefficients", c04_operator_taylor_coefficients),
    (5, "Trotter-Chernov convergence", c05_trotter_chernov_convergence),
    (6, "mass conservation", c06_mass_conservation),
    (7, "line transport oracle", c07_line_transport_oracle),
    (8, "radial transport", c08_radial_transport),
    (9, "weak diffusion support", c09_weak_diffusion_support),
    (10, "blow-up bound", c10_blow_up_bound),
    (11, "W1 decomposition", c11_w1_decomposition),
    (12, "contractivity monitor", c12_contractivity_monitor),
    (13, "determinism", c13_determinism),
];

// Runs without the libtest harness so the verdicts are always printed.
fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = CRITERIA
        .iter()
        .filter(|(id, title, _)| {
            filter.is_empty() || filter.iter().any(|f| title.contains(f.as_str()) || f == &id.to_string())
        })
        .collect();
    // sequential, so the runtime limits measure each criterion alone
    let outcomes: Vec<Verdict> = selected
        .iter()
        .map(|(_, _, run)| {
            std::panic::catch_unwind(run).unwrap_or_else(|e| {
                let msg =
                    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            })
        })
        .collect();
    let mut failed = 0;
    for ((id, title, _), (pass, detail)) in selected.iter().zip(&outcomes) {
        println!("[{}] {id:>2} {title}: {detail}", if *pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
