//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers (run with `--nocapture` to see them).

use std::time::Instant;

use hoplab::analysis::{
    apex_map, extract_limit_cycle, find_fixed_point, gain_sweep, moving_median, ApexOutcome,
    FixedPointOutcome,
};
use hoplab::energetics::{
    joule_power, mechanical_power, specific_resistance, trial_report, LimbForceSeries, PowerModel,
};
use hoplab::engine::{simulate, EventKind, IntegratorConfig};
use hoplab::slip::{find_velocity_fixed_point, slip_stride_map, SlipParams, SteppingPolicy, StrideOutcome};
use hoplab::template::{ControllerGains, HopperParams, HybridState, Phase};
use hoplab::tripod::{
    check_rebalanced_pose, simulate_tripod, LimbConfig, LimbId, RobotParams, TripodEventKind,
    DEFAULT_HIPS,
};

fn table1() -> HopperParams {
    HopperParams::table1()
}

/// Hopper parameters matching an anchored model: spring k_ss, damping ratio
/// beta_s, gravity kept in the stance field.
fn matched_hopper(mass: f64, k_ss: f64, beta_s: f64, rest: f64, gravity: f64) -> HopperParams {
    let omega = (k_ss / mass).sqrt();
    HopperParams::new(mass, k_ss, 2.0 * mass * omega * beta_s, rest, gravity, true).unwrap()
}

/// Table II fore-aft gains reduced to one virtual leg: mean rest length and
/// mean angles of the three functional limbs, hip angle servo enabled.
fn foreaft_virtual_leg(k_st: f64) -> (SlipParams, SteppingPolicy) {
    let params = SlipParams::new(6.173, 9.81).unwrap();
    let policy = SteppingPolicy::new(
        (-0.1 + -0.05 + 0.1) / 3.0,
        (-0.15 + -0.1 + 0.15) / 3.0,
        (0.18 + 0.145 + 0.18) / 3.0,
        ControllerGains::new(k_st, 1300.0, 0.25).unwrap(),
    )
    .unwrap()
    .with_angle_servo(50.0, 3.0);
    (params, policy)
}

#[test]
fn criterion_01_affine_apex_gain_relation() {
    let start = Instant::now();
    let p = table1();
    let cfg = IntegratorConfig { max_time: 30.0, ..Default::default() };
    let gains: Vec<f64> = (0..8).map(|i| 4.5 + 0.5 * i as f64).collect();
    let sweep = gain_sweep(&p, &cfg, &gains, 1.0).expect("sweep");
    assert_eq!(sweep.points.len(), 8, "no-liftoff gains: {:?}", sweep.no_liftoff);
    for w in sweep.points.windows(2) {
        assert!(
            w[1].apex_mean > w[0].apex_mean,
            "apex not increasing: {} -> {}",
            w[0].apex_mean,
            w[1].apex_mean
        );
    }
    assert!(sweep.fit.r_squared >= 0.98, "R^2 = {}", sweep.fit.r_squared);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed <= 30.0, "took {elapsed:.1} s");
    println!(
        "acceptance 01 affine apex-gain relation: PASS (R^2={:.5}, slope={:.4} m/gain, {elapsed:.2} s)",
        sweep.fit.r_squared, sweep.fit.slope
    );
}

#[test]
fn criterion_02_limit_cycle_convergence() {
    let start = Instant::now();
    let p = table1();
    let cfg = IntegratorConfig { max_time: 250.0, max_hops: 21, ..Default::default() };
    let mut max_chi = Vec::new();
    for k_t in [5.5, 7.5] {
        let g = ControllerGains::vertical(k_t);
        let a_star = match find_fixed_point(&p, &g, &cfg, 1.0).expect("fixed point") {
            FixedPointOutcome::Converged { apex, .. } => apex,
            other => panic!("unexpected {other:?}"),
        };
        let traj =
            simulate(HybridState::new(Phase::Flight, a_star, 0.0, 0.0), &p, &g, &cfg).expect("sim");
        let apexes = traj.apex_heights();
        assert!(apexes.len() >= 20, "only {} apexes at k_t={k_t}", apexes.len());
        let window = &apexes[10..20];
        let spread = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - window.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-4, "apex spread {spread} at k_t={k_t}");
        let cycle = extract_limit_cycle(&traj, 10).expect("cycle");
        assert!(cycle.residual < 1e-4, "closure residual {} at k_t={k_t}", cycle.residual);
        max_chi.push(cycle.max_chi());
    }
    assert!(max_chi[1] > max_chi[0], "cycle ordering: {max_chi:?}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed <= 10.0, "took {elapsed:.1} s");
    println!(
        "acceptance 02 limit-cycle convergence: PASS (max chi {:.4} m @5.5 < {:.4} m @7.5, {elapsed:.2} s)",
        max_chi[0], max_chi[1]
    );
}

#[test]
fn criterion_03_conservative_energy() {
    let p = HopperParams::new(6.173, 1500.0, 0.0, 0.18, 9.81, false).unwrap();
    let g = ControllerGains::vertical(0.0);
    let cfg = IntegratorConfig { max_hops: 21, max_time: 60.0, ..Default::default() };
    let traj = simulate(HybridState::new(Phase::Flight, 0.28, 0.0, 0.0), &p, &g, &cfg).unwrap();
    let apexes = traj.apex_heights();
    assert!(apexes.len() >= 20, "only {} apexes", apexes.len());
    for a in &apexes[..20] {
        assert!((a - 0.28).abs() <= 1e-6, "apex drifted to {a}");
    }
    // Energy at successive touchdowns (chi = rho there, E = v^2/2).
    let tds: Vec<f64> = traj
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Touchdown)
        .map(|e| 0.5 * e.chidot * e.chidot)
        .collect();
    assert!(tds.len() >= 20);
    let mut max_drift: f64 = 0.0;
    for w in tds.windows(2) {
        max_drift = max_drift.max((w[1] - w[0]).abs() / w[0]);
    }
    assert!(max_drift <= 1e-6, "relative energy drift per hop {max_drift}");
    println!(
        "acceptance 03 conservative energy: PASS (max drift/hop {max_drift:.2e}, apex spread {:.2e} m)",
        apexes[..20].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - apexes[..20].iter().cloned().fold(f64::INFINITY, f64::min)
    );
}

#[test]
fn criterion_04_event_accuracy() {
    let p = table1();
    let g = ControllerGains::vertical(0.0);
    let t_star = (2.0 * (0.297 - 0.18) / 9.81_f64).sqrt();
    let touchdown_time = |h: f64| -> f64 {
        let cfg = IntegratorConfig { step_size: h, max_hops: 1, max_time: 5.0, ..Default::default() };
        let traj =
            simulate(HybridState::new(Phase::Flight, 0.297, 0.0, 0.0), &p, &g, &cfg).unwrap();
        traj.events
            .iter()
            .find(|e| e.kind == EventKind::Touchdown)
            .expect("touchdown")
            .t
    };
    let r_full = (touchdown_time(1e-4) - t_star).abs();
    let r_half = (touchdown_time(5e-5) - t_star).abs();
    assert!(r_full <= 1e-8, "residual {r_full:.3e} at default tolerances");
    assert!(
        r_half <= r_full / 8.0,
        "halving h: residual {r_full:.3e} -> {r_half:.3e} (less than 8x)"
    );
    println!(
        "acceptance 04 event accuracy: PASS (residual {r_full:.3e} s, halving gives {r_half:.3e} s, ratio {:.0}x)",
        r_full / r_half.max(f64::MIN_POSITIVE)
    );
}

#[test]
fn criterion_05_symmetric_anchoring_reduction() {
    let cfg = IntegratorConfig { max_hops: 5, max_time: 30.0, ..Default::default() };
    let k_st = 7.5;
    for missing in [None, Some(LimbId::RightFront)] {
        let limb = LimbConfig {
            rest_length: 0.18,
            touchdown_angle: 0.0,
            liftoff_angle: 0.0,
            z_offset: 0.0,
        };
        let robot = RobotParams::new(
            6.173,
            9.81,
            DEFAULT_HIPS,
            [limb; 4],
            missing,
            ControllerGains::new(k_st, 800.0, 0.25).unwrap(),
        )
        .unwrap();
        let tripod = simulate_tripod(0.18, 0.0, &robot, &cfg).unwrap();

        let hopper = matched_hopper(6.173, 800.0, 0.25, 0.18, 9.81);
        let mono = simulate(
            HybridState::new(Phase::Stance, 0.18, 0.0, 0.0),
            &hopper,
            &ControllerGains::vertical(k_st),
            &cfg,
        )
        .unwrap();

        // The hybrid trajectory is pinned by its event data: compare kind
        // sequence, times and states. Simultaneous per-limb transitions on
        // the tripod side collapse onto the template's single events.
        let mono_events: Vec<(EventKind, f64, f64, f64)> =
            mono.events.iter().map(|e| (e.kind, e.t, e.chi, e.chidot)).collect();
        let mut tri_events: Vec<(EventKind, f64, f64, f64)> = Vec::new();
        for e in &tripod.events {
            let kind = match e.kind {
                TripodEventKind::LimbTouchdown(_) => EventKind::Touchdown,
                TripodEventKind::LimbLiftoff(_) => EventKind::Liftoff,
                TripodEventKind::Apex => EventKind::Apex,
            };
            match tri_events.last() {
                Some(&(k, t, _, _)) if k == kind && (t - e.t).abs() <= 1e-9 => {}
                _ => tri_events.push((kind, e.t, e.z, e.zdot)),
            }
        }
        assert_eq!(
            mono_events.len(),
            tri_events.len(),
            "event counts differ (missing={missing:?})"
        );
        let mut worst: f64 = 0.0;
        for (m, t) in mono_events.iter().zip(&tri_events) {
            assert_eq!(m.0, t.0);
            worst = worst.max((m.1 - t.1).abs()).max((m.2 - t.2).abs()).max((m.3 - t.3).abs());
        }
        assert!(worst <= 1e-8, "event mismatch {worst:.2e} (missing={missing:?})");
        let (ml, tl) = (mono.samples.last().unwrap(), tripod.samples.last().unwrap());
        assert!((ml.t - tl.t).abs() <= 1e-8);
        assert!((ml.chi - tl.z).abs() <= 1e-8);
        assert!((ml.chidot - tl.zdot).abs() <= 1e-8);
        println!(
            "acceptance 05 symmetric anchoring ({} limbs): PASS (worst event mismatch {worst:.2e})",
            if missing.is_some() { 3 } else { 4 }
        );
    }
}

#[test]
fn criterion_06_slip_attracting_velocity() {
    let start = Instant::now();
    let (p, policy) = foreaft_virtual_leg(7.5);
    let cfg = IntegratorConfig { max_time: 20.0, ..Default::default() };
    let fp = find_velocity_fixed_point(&p, &policy, &cfg, 0.20, 0.1).expect("fixed point");
    assert!(fp.slope.abs() < 1.0, "return-map slope {}", fp.slope);
    // Neighboring starts at +/-20% of the steady velocity converge.
    for scale in [0.8, 1.2] {
        let mut z = fp.z_apex;
        let mut ydot = fp.ydot * scale;
        let mut converged = None;
        for stride in 1..=30 {
            match slip_stride_map(z, ydot, &p, &policy, &cfg).expect("stride") {
                StrideOutcome::Apex { z: z1, ydot: y1 } => {
                    z = z1;
                    ydot = y1;
                }
                other => panic!("stride failed: {other:?}"),
            }
            if (ydot - fp.ydot).abs() < 1e-3 {
                converged = Some(stride);
                break;
            }
        }
        let strides = converged.expect("start did not converge within 30 strides");
        assert!(strides <= 30);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed <= 20.0, "took {elapsed:.1} s");
    println!(
        "acceptance 06 slip attracting velocity: PASS (ydot*={:.4} m/s, slope={:.3}, {} strides, {elapsed:.2} s)",
        fp.ydot, fp.slope, fp.strides
    );
}

#[test]
fn criterion_07_degenerate_angle_equivalence() {
    let p = SlipParams::new(6.173, 9.81).unwrap();
    let (k_ss, beta_s, k_st) = (1300.0, 0.25, 7.5);
    let policy =
        SteppingPolicy::new(0.0, 0.0, 0.18, ControllerGains::new(k_st, k_ss, beta_s).unwrap())
            .unwrap();
    let hopper = matched_hopper(p.mass, k_ss, beta_s, 0.18, p.gravity);
    let gains = ControllerGains::vertical(k_st);
    let cfg = IntegratorConfig { max_time: 20.0, ..Default::default() };
    let mut worst: f64 = 0.0;
    for a in [0.19, 0.21, 0.24, 0.27, 0.30] {
        let slip_next = match slip_stride_map(a, 0.0, &p, &policy, &cfg).unwrap() {
            StrideOutcome::Apex { z, ydot } => {
                assert!(ydot.abs() < 1e-12);
                z
            }
            other => panic!("unexpected {other:?}"),
        };
        let hop_next = match apex_map(a, &hopper, &gains, &cfg).unwrap() {
            ApexOutcome::Apex(v) => v,
            other => panic!("unexpected {other:?}"),
        };
        worst = worst.max((slip_next - hop_next).abs());
    }
    assert!(worst < 1e-8, "worst apex mismatch {worst:.2e}");
    println!("acceptance 07 degenerate-angle equivalence: PASS (worst mismatch {worst:.2e} m)");
}

#[test]
fn criterion_08_moving_median_oracle() {
    // Deterministic xorshift series, 1000 samples.
    let mut state = 0x9E3779B97F4A7C15_u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 200.0 - 100.0
    };
    let series: Vec<f64> = (0..1000).map(|_| next()).collect();
    let got = moving_median(&series, 8);
    // Literal re-evaluation of the window definition.
    let n = series.len() as isize;
    let w = 8_isize;
    let expect: Vec<f64> = (0..n)
        .map(|i| {
            let lo = (i - (w + 1) / 2 + 1).max(0) as usize;
            let hi = ((i + w / 2).min(n - 1)) as usize;
            let mut win: Vec<f64> = series[lo..=hi].to_vec();
            win.sort_by(f64::total_cmp);
            let m = win.len();
            if m % 2 == 1 {
                win[m / 2]
            } else {
                0.5 * (win[m / 2 - 1] + win[m / 2])
            }
        })
        .collect();
    assert_eq!(got, expect);
    println!("acceptance 08 moving-median oracle: PASS (1000 samples, window 8, exact)");
}

#[test]
fn criterion_09_static_rebalancing() {
    // Equal rest lengths, missing right-front: the CoM projection sits on
    // the support boundary (margin <= 0).
    let limb =
        LimbConfig { rest_length: 0.18, touchdown_angle: 0.0, liftoff_angle: 0.0, z_offset: 0.0 };
    let equal = RobotParams::new(
        6.173,
        9.81,
        DEFAULT_HIPS,
        [limb; 4],
        Some(LimbId::RightFront),
        ControllerGains::new(5.5, 1500.0, 0.25).unwrap(),
    )
    .unwrap();
    let report_equal = check_rebalanced_pose(&equal).unwrap();
    assert!(report_equal.margin <= 0.0, "equal-length margin {}", report_equal.margin);

    // Table II vertical pose: shortened diagonal limb, margin positive and
    // every load non-negative.
    let rebalanced = RobotParams::table2_vertical(5.5);
    let report = check_rebalanced_pose(&rebalanced).unwrap();
    assert!(report.margin > 0.0, "rebalanced margin {}", report.margin);
    assert!(report.loads.iter().all(|&l| l >= 0.0), "loads {:?}", report.loads);
    assert!(report.statically_stable);
    println!(
        "acceptance 09 static rebalancing: PASS (equal margin {:.4} m, rebalanced margin {:.4} m)",
        report_equal.margin, report.margin
    );
}

#[test]
fn criterion_10_energetics_algebra() {
    let model = PowerModel::default();
    let (mass, gravity) = (6.173, 9.81);
    let n_f = 3_usize;
    let u = 9.81;
    let ext = 0.15;
    let rows = 101;
    let dt = 0.01;
    let series = LimbForceSeries {
        t: (0..rows).map(|i| i as f64 * dt).collect(),
        rows: vec![vec![(true, u); n_f]; rows],
        extension: vec![ext; rows],
        mass,
        gravity,
        n_functional: n_f,
    };
    let duration = (rows - 1) as f64 * dt;
    let v = 0.5;
    let report = trial_report(&series, &model, v * duration).unwrap();

    let i = (mass / n_f as f64 * u * model.moment_arm / 2.0) / model.torque_const;
    let p_mech = 2.0 * model.torque_const * i * (v / ext);
    let p_heat = (n_f * model.motors_per_limb) as f64 * i * i * model.motor_resistance;
    assert!((report.p_mechanical - p_mech).abs() <= 1e-12 * p_mech);
    assert!((report.p_heat - p_heat).abs() <= 1e-12 * p_heat);
    let sigma = report.sigma.unwrap();
    let sigma_expect = (p_mech + p_heat) / (mass * gravity * v);
    assert!((sigma - sigma_expect).abs() <= 1e-12 * sigma_expect);
    // Formula-level identities.
    assert_eq!(specific_resistance(mass * gravity * v, mass, gravity, v).unwrap(), 1.0);
    assert_eq!(joule_power(25.0, 0.2), 5.0);
    assert!(
        (mechanical_power(&model, 10.0, 0.5, 0.15).unwrap() - 6.666666666666667).abs() < 1e-12
    );
    println!(
        "acceptance 10 energetics algebra: PASS (sigma={sigma:.4}, P={:.2} W at v={v} m/s)",
        report.p_total
    );
}
