//! Scenario execution: translate a resolved configuration into library calls
//! and deterministic output files.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use hoplab::analysis::{extract_limit_cycle, gain_sweep};
use hoplab::energetics::{trial_report, LimbForceSeries, PowerModel};
use hoplab::engine::{simulate, IntegratorConfig};
use hoplab::io::{events_csv, fmt_sig, trajectory_csv};
use hoplab::slip::{find_velocity_fixed_point, simulate_strides, SlipParams, SlipRun, SteppingPolicy};
use hoplab::template::{ControllerGains, HopperParams, HybridState, Phase};
use hoplab::tripod::{
    check_rebalanced_pose, simulate_tripod, LimbConfig, LimbId, RobotParams, TripodEventKind,
    TripodTrajectory, ALL_LIMBS,
};

use crate::config::Config;
use crate::smooth::smooth_csv;

/// Execute the configured scenario into `out_dir`; returns the files written.
pub fn run_scenario(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let scenario = cfg.require("experiment", "scenario")?;
    match scenario {
        "vertical-template" => vertical_template(cfg, out_dir),
        "gain-sweep" => sweep_scenario(cfg, out_dir),
        "limit-cycle" => limit_cycle(cfg, out_dir),
        "slip-foreaft" => slip_foreaft(cfg, out_dir),
        "tripod-vertical" => tripod_vertical(cfg, out_dir),
        "tripod-pose" => tripod_pose(cfg, out_dir),
        "energetics" => energetics(cfg, out_dir),
        "smooth-log" => smooth_log(cfg, out_dir),
        other => bail!(
            "unknown scenario `{other}` (expected vertical-template, gain-sweep, limit-cycle, \
             slip-foreaft, tripod-vertical, tripod-pose, energetics or smooth-log)"
        ),
    }
}

fn write(out_dir: &Path, name: &str, contents: &str) -> Result<String> {
    fs::write(out_dir.join(name), contents)
        .with_context(|| format!("writing {}", out_dir.join(name).display()))?;
    Ok(name.to_string())
}

// --- builders ---------------------------------------------------------------

fn hopper_params(cfg: &Config) -> Result<HopperParams> {
    HopperParams::new(
        cfg.f64("template", "mu")?,
        cfg.f64("template", "k")?,
        cfg.f64("template", "c")?,
        cfg.f64("template", "rho")?,
        cfg.f64("template", "gamma")?,
        cfg.bool_or("template", "stance_gravity", false)?,
    )
    .map_err(|e| anyhow!("{e}"))
}

fn integrator(cfg: &Config) -> Result<IntegratorConfig> {
    let defaults = IntegratorConfig::default();
    let floor = match cfg.get("integrator", "floor_level") {
        None | Some("none") => None,
        Some(v) => {
            Some(v.parse::<f64>().with_context(|| format!("floor_level = `{v}`"))?)
        }
    };
    let out = IntegratorConfig {
        step_size: cfg.f64_or("integrator", "h", defaults.step_size)?,
        eps_event: cfg.f64_or("integrator", "eps_event", defaults.eps_event)?,
        eps_vel: cfg.f64_or("integrator", "eps_vel", defaults.eps_vel)?,
        max_time: cfg.f64_or("integrator", "max_time", defaults.max_time)?,
        max_hops: cfg.usize_or("integrator", "max_hops", defaults.max_hops)?,
        sample_stride: cfg.usize_or("integrator", "sample_stride", defaults.sample_stride)?,
        floor_level: floor,
    };
    out.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(out)
}

fn initial_state(cfg: &Config, params: &HopperParams) -> Result<HybridState> {
    let phase = match cfg.get("initial", "phase").unwrap_or("stance") {
        "stance" => Phase::Stance,
        "flight" => Phase::Flight,
        other => bail!("[initial] phase = `{other}` (expected stance or flight)"),
    };
    Ok(HybridState::new(
        phase,
        cfg.f64_or("initial", "chi", params.rest_length)?,
        cfg.f64_or("initial", "chidot", 0.0)?,
        0.0,
    ))
}

/// Functional-limb designation from a `missing` value.
fn missing_limb(value: &str) -> Result<Option<LimbId>> {
    if value.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    LimbId::parse(value)
        .map(Some)
        .ok_or_else(|| anyhow!("missing = `{value}` (expected LF, LB, RF, RB or none)"))
}

/// Reduce the configured per-limb slip table to the single virtual leg:
/// functional-limb means of rest length and angles.
fn slip_setup(cfg: &Config) -> Result<(SlipParams, SteppingPolicy, Option<LimbId>)> {
    let missing = missing_limb(cfg.get("slip", "missing").unwrap_or("none"))?;
    let params = SlipParams::new(cfg.f64("slip", "mass")?, cfg.f64("slip", "gamma")?)
        .map_err(|e| anyhow!("{e}"))?;
    let suffixes = ["lf", "lb", "rf", "rb"];
    let mut rho = 0.0;
    let mut td = 0.0;
    let mut lo = 0.0;
    let mut n = 0.0;
    for (i, s) in suffixes.iter().enumerate() {
        if missing == Some(ALL_LIMBS[i]) {
            continue;
        }
        rho += cfg.f64("slip", &format!("rho_{s}"))?;
        td += cfg.f64("slip", &format!("theta_td_{s}"))?;
        lo += cfg.f64("slip", &format!("theta_lo_{s}"))?;
        n += 1.0;
    }
    let gains = ControllerGains::new(
        cfg.f64("slip", "kst")?,
        cfg.f64("slip", "kss")?,
        cfg.f64("slip", "beta_s")?,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let policy = SteppingPolicy::new(td / n, lo / n, rho / n, gains)
        .map_err(|e| anyhow!("{e}"))?
        .with_angle_servo(cfg.f64_or("slip", "angle_p", 0.0)?, cfg.f64_or("slip", "angle_d", 0.0)?);
    Ok((params, policy, missing))
}

fn tripod_setup(cfg: &Config) -> Result<RobotParams> {
    let missing = missing_limb(cfg.get("tripod", "missing").unwrap_or("none"))?;
    let hip_x = cfg.f64_or("tripod", "hip_x", 0.2)?;
    let hip_y = cfg.f64_or("tripod", "hip_y", 0.1)?;
    let hips = [(hip_x, hip_y), (-hip_x, hip_y), (hip_x, -hip_y), (-hip_x, -hip_y)];
    let suffixes = ["lf", "lb", "rf", "rb"];
    let mut limbs = [LimbConfig {
        rest_length: 0.18,
        touchdown_angle: 0.0,
        liftoff_angle: 0.0,
        z_offset: 0.0,
    }; 4];
    for (i, s) in suffixes.iter().enumerate() {
        let angle = cfg.f64(&"tripod", &format!("theta_{s}"))?;
        limbs[i] = LimbConfig {
            rest_length: cfg.f64("tripod", &format!("rho_{s}"))?,
            touchdown_angle: angle,
            liftoff_angle: angle,
            z_offset: 0.0,
        };
    }
    let gains = ControllerGains::new(
        cfg.f64("tripod", "kst")?,
        cfg.f64("tripod", "kss")?,
        cfg.f64("tripod", "beta_s")?,
    )
    .map_err(|e| anyhow!("{e}"))?;
    RobotParams::new(
        cfg.f64("tripod", "mass")?,
        cfg.f64("tripod", "gamma")?,
        hips,
        limbs,
        missing,
        gains,
    )
    .map_err(|e| anyhow!("{e}"))
}

// --- scenarios ---------------------------------------------------------------

fn vertical_template(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let params = hopper_params(cfg)?;
    let gains = ControllerGains::vertical(cfg.f64_or("template", "kt", 0.0)?);
    let icfg = integrator(cfg)?;
    let initial = initial_state(cfg, &params)?;
    let traj = simulate(initial, &params, &gains, &icfg).map_err(|e| anyhow!("{e}"))?;
    Ok(vec![
        write(out_dir, "trajectory.csv", &trajectory_csv(&traj))?,
        write(out_dir, "events.csv", &events_csv(&traj.events))?,
    ])
}

fn sweep_scenario(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let params = hopper_params(cfg)?;
    let icfg = integrator(cfg)?;
    let gains = cfg.f64_list("sweep", "gains")?;
    let a0 = cfg.f64_or("sweep", "apex_guess", 1.0)?;
    let sweep = gain_sweep(&params, &icfg, &gains, a0).map_err(|e| anyhow!("{e}"))?;
    let mut csv = String::from("k_t,apex_mean,apex_std,hops_to_converge\n");
    for p in &sweep.points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(p.gain),
            fmt_sig(p.apex_mean),
            fmt_sig(p.apex_std),
            p.hops_to_converge
        ));
    }
    let fit = format!(
        "slope = {}\nintercept = {}\nr2 = {}\nn_points = {}\nno_liftoff_gains = {}\n",
        fmt_sig(sweep.fit.slope),
        fmt_sig(sweep.fit.intercept),
        fmt_sig(sweep.fit.r_squared),
        sweep.fit.n_points,
        if sweep.no_liftoff.is_empty() {
            "none".to_string()
        } else {
            sweep.no_liftoff.iter().map(|g| fmt_sig(*g)).collect::<Vec<_>>().join(",")
        }
    );
    Ok(vec![
        write(out_dir, "sweep.csv", &csv)?,
        write(out_dir, "fit_summary.txt", &fit)?,
    ])
}

fn limit_cycle(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    use hoplab::analysis::{find_fixed_point, FixedPointOutcome};
    let params = hopper_params(cfg)?;
    let mut icfg = integrator(cfg)?;
    icfg.max_hops = cfg.usize_or("cycle", "hops", 21)?;
    let transient = cfg.usize_or("cycle", "transient_hops", 10)?;
    let gains = cfg.f64_list("cycle", "gains")?;
    let mut outputs = Vec::new();
    let mut summary = String::new();
    for k_t in gains {
        let g = ControllerGains::vertical(k_t);
        let a_star = match find_fixed_point(&params, &g, &icfg, 1.0).map_err(|e| anyhow!("{e}"))? {
            FixedPointOutcome::Converged { apex, .. } => apex,
            FixedPointOutcome::Rest => bail!("gain {k_t} is below the hopping threshold"),
        };
        let traj = simulate(HybridState::new(Phase::Flight, a_star, 0.0, 0.0), &params, &g, &icfg)
            .map_err(|e| anyhow!("{e}"))?;
        let cycle = extract_limit_cycle(&traj, transient).map_err(|e| anyhow!("{e}"))?;
        let mut csv = String::from("chi,chidot\n");
        for (chi, chidot) in &cycle.states {
            csv.push_str(&format!("{},{}\n", fmt_sig(*chi), fmt_sig(*chidot)));
        }
        let name = format!("cycle_kt{}.csv", fmt_sig(k_t));
        outputs.push(write(out_dir, &name, &csv)?);
        summary.push_str(&format!(
            "k_t = {}\napex = {}\nperiod_s = {}\nresidual = {}\nmax_chi = {}\n\n",
            fmt_sig(k_t),
            fmt_sig(a_star),
            fmt_sig(cycle.period),
            fmt_sig(cycle.residual),
            fmt_sig(cycle.max_chi())
        ));
    }
    outputs.push(write(out_dir, "cycle_summary.txt", &summary)?);
    Ok(outputs)
}

fn slip_csv(run: &SlipRun) -> String {
    let mut csv = String::from("t,y,z,ydot,zdot,phase,toe_y\n");
    for s in &run.samples {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_sig(s.state.t),
            fmt_sig(s.state.y),
            fmt_sig(s.state.z),
            fmt_sig(s.state.ydot),
            fmt_sig(s.state.zdot),
            s.state.phase.as_str(),
            fmt_sig(s.state.toe_y)
        ));
    }
    csv
}

fn slip_foreaft(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let (params, policy, _) = slip_setup(cfg)?;
    let icfg = integrator(cfg)?;
    let z0 = cfg.f64_or("slip", "z0", 0.20)?;
    let ydot0 = cfg.f64_or("slip", "ydot0", 0.1)?;
    let strides = cfg.usize_or("slip", "strides", 40)?;
    let run = simulate_strides(&params, &policy, &icfg, z0, ydot0, strides, None)
        .map_err(|e| anyhow!("{e}"))?;
    let mut stride_csv = String::from("stride_index,z_apex,ydot_apex\n");
    for s in &run.strides {
        stride_csv.push_str(&format!(
            "{},{},{}\n",
            s.index,
            fmt_sig(s.z_apex),
            fmt_sig(s.ydot_apex)
        ));
    }
    let fp_text = match find_velocity_fixed_point(
        &params,
        &policy,
        &icfg,
        cfg.f64_or("slip", "z_guess", z0)?,
        cfg.f64_or("slip", "ydot_guess", ydot0)?,
    ) {
        Ok(fp) => format!(
            "z_apex = {}\nydot = {}\nslope = {}\nstrides = {}\n",
            fmt_sig(fp.z_apex),
            fmt_sig(fp.ydot),
            fmt_sig(fp.slope),
            fp.strides
        ),
        Err(e) => format!("error = {e}\n"),
    };
    Ok(vec![
        write(out_dir, "slip_trajectory.csv", &slip_csv(&run))?,
        write(out_dir, "strides.csv", &stride_csv)?,
        write(out_dir, "velocity_fixed_point.txt", &fp_text)?,
    ])
}

fn tripod_csv(traj: &TripodTrajectory) -> (String, String) {
    let functional: Vec<usize> =
        traj.params.functional_limbs().map(|l| l.index()).collect();
    let mut header = String::from("t,chi,chidot,phase");
    for &i in &functional {
        let name = ALL_LIMBS[i].as_str().to_ascii_lowercase();
        header.push_str(&format!(",chi_{name},chidot_{name},contact_{name},u_{name}"));
    }
    header.push('\n');
    let mut csv = header;
    for s in &traj.samples {
        let any_contact = functional.iter().any(|&i| s.limbs[i].2);
        csv.push_str(&format!(
            "{},{},{},{}",
            fmt_sig(s.t),
            fmt_sig(s.z),
            fmt_sig(s.zdot),
            if any_contact { "stance" } else { "flight" }
        ));
        for &i in &functional {
            let (ext, rate, contact, u) = s.limbs[i];
            csv.push_str(&format!(
                ",{},{},{},{}",
                fmt_sig(ext),
                fmt_sig(rate),
                u8::from(contact),
                fmt_sig(u)
            ));
        }
        csv.push('\n');
    }
    let mut events = String::from("kind,t,chi,chidot,hop_index\n");
    for e in &traj.events {
        let kind = match e.kind {
            TripodEventKind::LimbTouchdown(l) => {
                format!("touchdown_{}", l.as_str().to_ascii_lowercase())
            }
            TripodEventKind::LimbLiftoff(l) => {
                format!("liftoff_{}", l.as_str().to_ascii_lowercase())
            }
            TripodEventKind::Apex => "apex".to_string(),
        };
        events.push_str(&format!(
            "{},{},{},{},{}\n",
            kind,
            fmt_sig(e.t),
            fmt_sig(e.z),
            fmt_sig(e.zdot),
            e.hop_index
        ));
    }
    (csv, events)
}

fn tripod_vertical(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let params = tripod_setup(cfg)?;
    let icfg = integrator(cfg)?;
    let traj = simulate_tripod(
        cfg.f64_or("tripod", "z0", 0.18)?,
        cfg.f64_or("tripod", "zdot0", 0.0)?,
        &params,
        &icfg,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let (traj_csv, ev_csv) = tripod_csv(&traj);
    Ok(vec![
        write(out_dir, "tripod_trajectory.csv", &traj_csv)?,
        write(out_dir, "tripod_events.csv", &ev_csv)?,
    ])
}

fn tripod_pose(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let params = tripod_setup(cfg)?;
    let report = check_rebalanced_pose(&params).map_err(|e| anyhow!("{e}"))?;
    let mut text = format!("margin_m = {}\n", fmt_sig(report.margin));
    for ((limb, _), load) in report.toes.iter().zip(&report.loads) {
        text.push_str(&format!("load_{}_N = {}\n", limb.as_str(), fmt_sig(*load)));
    }
    for (limb, pos) in &report.toes {
        text.push_str(&format!(
            "toe_{} = {},{}\n",
            limb.as_str(),
            fmt_sig(pos.0),
            fmt_sig(pos.1)
        ));
    }
    text.push_str(&format!("statically_stable = {}\n", report.statically_stable));
    Ok(vec![write(out_dir, "pose_report.txt", &text)?])
}

fn energetics(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let (params, base_policy, missing) = slip_setup(cfg)?;
    let icfg = integrator(cfg)?;
    let model = PowerModel {
        torque_const: cfg.f64_or("energetics", "k_tau", 0.1)?,
        motor_resistance: cfg.f64_or("energetics", "r_motor", 0.2)?,
        moment_arm: cfg.f64_or("energetics", "r_eff", 0.1)?,
        motors_per_limb: 2,
    };
    let target = cfg.f64_or("energetics", "distance", 2.0)?;
    let max_strides = cfg.usize_or("energetics", "max_strides", 4000)?;
    let gains = cfg.f64_list("energetics", "gains")?;
    let n_functional = if missing.is_some() { 3 } else { 4 };
    let gait = if missing.is_some() { "tripedal" } else { "quadrupedal" };
    let z0 = cfg.f64_or("slip", "z0", 0.20)?;
    let ydot0 = cfg.f64_or("slip", "ydot0", 0.1)?;

    let mut csv = String::from("gait,k_st,vbar_mps,Pmech_W,Pheat_W,Ptotal_W,sigma\n");
    let mut text = String::new();
    for k_st in gains {
        let mut policy = base_policy;
        policy.gains.vertical_gain = k_st;
        let run = simulate_strides(&params, &policy, &icfg, z0, ydot0, max_strides, Some(target))
            .map_err(|e| anyhow!("{e}"))?;
        let distance = (run.end.y - run.samples.first().map_or(0.0, |s| s.state.y)).abs();
        let series = LimbForceSeries::from_slip(&run, params.mass, params.gravity, n_functional);
        let report = trial_report(&series, &model, distance).map_err(|e| anyhow!("{e}"))?;
        let sigma = report.sigma.map_or("nan".to_string(), fmt_sig);
        csv.push_str(&format!(
            "{gait},{},{},{},{},{},{sigma}\n",
            fmt_sig(k_st),
            fmt_sig(report.v_avg),
            fmt_sig(report.p_mechanical),
            fmt_sig(report.p_heat),
            fmt_sig(report.p_total),
        ));
        text.push_str(&format!(
            "gait = {gait}\nk_st = {}\nvbar_mps = {}\nPmech_W = {}\nPheat_W = {}\nPtotal_W = {}\n\
             sigma = {sigma}\ndistance_m = {}\nduration_s = {}\ni_avg_A = {}\nchi_stance_m = {}\n\n",
            fmt_sig(k_st),
            fmt_sig(report.v_avg),
            fmt_sig(report.p_mechanical),
            fmt_sig(report.p_heat),
            fmt_sig(report.p_total),
            fmt_sig(report.distance),
            fmt_sig(report.duration),
            fmt_sig(report.i_avg),
            fmt_sig(report.chi_stance),
        ));
    }
    Ok(vec![
        write(out_dir, "energetics.csv", &csv)?,
        write(out_dir, "energetics_report.txt", &text)?,
    ])
}

fn smooth_log(cfg: &Config, out_dir: &Path) -> Result<Vec<String>> {
    let input = cfg.require("smooth", "input")?;
    let column = cfg.require("smooth", "column")?;
    let window = cfg.usize_or("smooth", "window", 8)?;
    let text = fs::read_to_string(input).with_context(|| format!("reading {input}"))?;
    let smoothed = smooth_csv(&text, column, window)?;
    Ok(vec![write(out_dir, "smoothed.csv", &smoothed)?])
}
