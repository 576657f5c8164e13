use std::sync::OnceLock;

use neckflow::flow::{evolve, EvolveOptions};
use neckflow::geometry::{build_profile, CapAttachment, GluedSpace, ProfileKind};
use neckflow::heat::{conjugate_heat_solve, dirac_bump, BackwardClock, GluedDensity, HeatOptions};
use neckflow::pinch_analysis::*;
use proptest::prelude::*;

fn rates_agree(samples: &[RateSample], rel: f64) -> Result<(), String> {
    for s in samples {
        let err = (s.rate_fd - s.rate_integrand).abs() / s.rate_integrand.abs();
        if err > rel {
            return Err(format!("tau {}: {} vs {} ({err:.2e})", s.tau, s.rate_fd, s.rate_integrand));
        }
    }
    Ok(())
}

#[test]
fn cdf_rate_on_the_shrinking_round_sphere() {
    let t_ref = 0.1;
    let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 257).unwrap();
    let tr = evolve(p, &EvolveOptions { t_end: Some(t_ref), snapshots: 40, ..Default::default() }).unwrap();
    let clock = BackwardClock::new(t_ref);
    let last = tr.last().clone();
    let u = vec![1.0 / last.volume(); last.len()];
    let heat = HeatOptions { frames: 10, ..Default::default() };
    let states = conjugate_heat_solve(&tr, clock, &u, 0.0, t_ref, &heat).unwrap();
    let series = cdf_of_diffusion(&tr, clock, &states, Origin::South).unwrap();
    let samples = cdf_mass_rate(&series, &tr, clock, &states).unwrap();
    rates_agree(&samples, 0.05).unwrap();
    // int F = pi rho / 2 with rho^2 = 1 - 4 t
    for s in &samples {
        let rho = (1.0 - 4.0 * clock.t_of(s.tau)).sqrt();
        assert!((s.rate_integrand - std::f64::consts::PI / rho).abs() < 1e-3 * s.rate_integrand);
    }
}

#[test]
fn cdf_rate_on_a_dumbbell_with_an_off_center_bump() {
    let t_ref = 0.004;
    let p = build_profile(&ProfileKind::Dumbbell { a: 0.9 }, 2, 257).unwrap();
    let tr = evolve(p, &EvolveOptions { t_end: Some(t_ref), snapshots: 40, ..Default::default() }).unwrap();
    let clock = BackwardClock::new(t_ref);
    let u = dirac_bump(tr.last(), 1.0).unwrap();
    let heat = HeatOptions { frames: 20, ..Default::default() };
    let states = conjugate_heat_solve(&tr, clock, &u, 0.0, t_ref, &heat).unwrap();
    let series = cdf_of_diffusion(&tr, clock, &states, Origin::South).unwrap();
    let samples = cdf_mass_rate(&series, &tr, clock, &states).unwrap();
    let middle: Vec<RateSample> =
        samples.iter().filter(|s| s.tau >= 0.1 * t_ref - 1e-12 && s.tau <= 0.9 * t_ref + 1e-12).copied().collect();
    assert!(middle.len() >= 15);
    rates_agree(&middle, 0.10).unwrap();
}

#[test]
fn antipodal_bumps_contract_on_the_round_sphere() {
    let t_ref = 0.1;
    let p = build_profile(&ProfileKind::Round { rho: 1.0 }, 2, 129).unwrap();
    let tr = evolve(p, &EvolveOptions { t_end: Some(t_ref), snapshots: 40, ..Default::default() }).unwrap();
    let clock = BackwardClock::new(t_ref);
    let last = tr.last();
    let u1 = dirac_bump(last, 0.3 * last.r_max()).unwrap();
    let u2 = dirac_bump(last, 0.7 * last.r_max()).unwrap();
    let opts = MonitorOptions { heat: HeatOptions { frames: 10, ..Default::default() }, ..Default::default() };
    let rep = contractivity_monitor(&tr, clock, &u1, &u2, 0.0, t_ref, &opts).unwrap();
    assert!(rep.pass_w1 && rep.pass_w2, "{:?}", rep.violations);
    assert!(rep.rows.last().unwrap().w1 < rep.rows[0].w1);
}

fn neck() -> &'static GluedSpace {
    static G: OnceLock<GluedSpace> = OnceLock::new();
    G.get_or_init(|| GluedSpace::dumbbell_halves(2, 129, 0.5).unwrap())
}

fn bump(g: &GluedSpace, cap: usize, from_pole: f64) -> GluedDensity {
    let p = g.cap(cap);
    let r0 = match g.attachments[cap] {
        CapAttachment::Lower => from_pole,
        CapAttachment::Upper => p.r_max() - from_pole,
    };
    let mut d = GluedDensity::zeros(g, 3);
    let u = dirac_bump(p, r0).unwrap();
    if cap == 0 {
        d.cap1 = u;
    } else {
        d.cap2 = u;
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn w1_splits_into_l_and_the_two_cdf_integrals(a in 0.02..0.98f64, b in 0.02..0.98f64) {
        let g = neck();
        let (d1, d2) = (g.cap1.r_max(), g.cap2.r_max());
        let dec = w1_glued_decomposition(g, &bump(g, 0, a * d1), &bump(g, 1, b * d2)).unwrap();
        prop_assert!((dec.decomposed() - dec.w1_direct).abs() <= 1e-6);
        prop_assert!(dec.int_f >= 0.0 && dec.int_g >= 0.0);
        prop_assert!(dec.w1_direct >= g.l && dec.w1_direct <= dec.diam[0] + dec.diam[1] + g.l + 1e-9);
    }

    #[test]
    fn bound_grows_as_eps_shrinks(eps0 in 0.05..0.2f64) {
        let g = synthetic_neck(2, 129, 0.5).unwrap();
        let rep = contradiction_report(&g, &PinchOptions { eps0, sweep: 3, w1_frames: 2, ..Default::default() }).unwrap();
        prop_assert!(rep.bounds_increasing);
        for w in rep.sweep.windows(2) {
            prop_assert!(w[1].floor > w[0].floor && w[1].m_k > w[0].m_k);
        }
    }
}
