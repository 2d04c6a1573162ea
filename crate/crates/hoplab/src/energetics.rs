//! Cost-of-transport pipeline: specific resistance, mechanical power through
//! a single-spoked-wheel abstraction of the stance leg, and Joule heating.
//!
//! Simulated limb force commands are mapped to motor currents through a
//! constant effective moment arm (two hip motors share each limb's load);
//! currents are rectified before averaging. Averages are taken over stance,
//! weighted by sample spacing.

use crate::error::SimError;
use crate::slip::SlipRun;
use crate::template::Phase;
use crate::tripod::TripodTrajectory;

/// Motor-side constants mapping limb forces to currents and losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    /// Motor torque constant K_tau (N*m/A).
    pub torque_const: f64,
    /// Motor winding resistance (ohm).
    pub motor_resistance: f64,
    /// Effective moment arm mapping limb force to motor torque (m).
    pub moment_arm: f64,
    /// Motors per limb.
    pub motors_per_limb: usize,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self { torque_const: 0.1, motor_resistance: 0.2, moment_arm: 0.1, motors_per_limb: 2 }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.torque_const > 0.0)
            || !(self.motor_resistance >= 0.0)
            || !(self.moment_arm > 0.0)
            || self.motors_per_limb == 0
        {
            return Err(SimError::InvalidInput("power model constants must be positive".into()));
        }
        Ok(())
    }
}

/// Specific resistance `P / (m g v)`.
pub fn specific_resistance(p_avg: f64, mass: f64, gravity: f64, v_avg: f64) -> Result<f64, SimError> {
    if !(v_avg > 0.0) {
        return Err(SimError::InvalidInput(format!("average speed must be > 0, got {v_avg}")));
    }
    if !(mass > 0.0) || !(gravity > 0.0) {
        return Err(SimError::InvalidInput("mass and gravity must be > 0".into()));
    }
    Ok(p_avg / (mass * gravity * v_avg))
}

/// Average mechanical power of the spoked-wheel model:
/// `2 K_tau I_avg (v / chi_stance)`.
pub fn mechanical_power(
    model: &PowerModel,
    i_avg: f64,
    v_avg: f64,
    chi_stance: f64,
) -> Result<f64, SimError> {
    if !(chi_stance > 0.0) {
        return Err(SimError::InvalidInput(format!(
            "average stance extension must be > 0, got {chi_stance}"
        )));
    }
    Ok(2.0 * model.torque_const * i_avg * (v_avg / chi_stance))
}

/// Joule heating from the time-averaged total squared current.
pub fn joule_power(i_sq_total: f64, resistance: f64) -> f64 {
    i_sq_total * resistance
}

/// Per-limb force commands over time, the common view of tripod and planar
/// trajectories that the current model consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct LimbForceSeries {
    pub t: Vec<f64>,
    /// Per row: one `(in_contact, mass-specific input)` pair per functional
    /// limb.
    pub rows: Vec<Vec<(bool, f64)>>,
    /// Mean functional-limb extension per row (m).
    pub extension: Vec<f64>,
    pub mass: f64,
    pub gravity: f64,
    pub n_functional: usize,
}

impl LimbForceSeries {
    pub fn from_tripod(traj: &TripodTrajectory) -> Self {
        let params = &traj.params;
        let functional: Vec<usize> =
            params.functional_limbs().map(|l| l.index()).collect();
        let mut t = Vec::with_capacity(traj.samples.len());
        let mut rows = Vec::with_capacity(traj.samples.len());
        let mut extension = Vec::with_capacity(traj.samples.len());
        for s in &traj.samples {
            t.push(s.t);
            let row: Vec<(bool, f64)> =
                functional.iter().map(|&i| (s.limbs[i].2, s.limbs[i].3)).collect();
            let ext =
                functional.iter().map(|&i| s.limbs[i].0).sum::<f64>() / functional.len() as f64;
            rows.push(row);
            extension.push(ext);
        }
        Self {
            t,
            rows,
            extension,
            mass: params.mass,
            gravity: params.gravity,
            n_functional: functional.len(),
        }
    }

    /// A planar run stands in for `n_functional` coordinated limbs, each
    /// commanding the virtual leg's input.
    pub fn from_slip(run: &SlipRun, mass: f64, gravity: f64, n_functional: usize) -> Self {
        let mut t = Vec::with_capacity(run.samples.len());
        let mut rows = Vec::with_capacity(run.samples.len());
        let mut extension = Vec::with_capacity(run.samples.len());
        for s in &run.samples {
            t.push(s.state.t);
            let contact = s.state.phase == Phase::Stance;
            rows.push(vec![(contact, s.u); n_functional]);
            extension.push(s.leg_len);
        }
        Self { t, rows, extension, mass, gravity, n_functional }
    }
}

/// Per-motor current magnitudes, one series per functional limb (the two
/// motors of a limb carry equal current).
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSeries {
    pub t: Vec<f64>,
    pub per_limb: Vec<Vec<f64>>,
    pub motors_per_limb: usize,
}

/// Map limb force commands to per-motor currents:
/// `tau_m = (mass / n_f) u r_eff / 2`, `I = |tau_m| / K_tau`, zero out of
/// contact.
pub fn simulate_currents(series: &LimbForceSeries, model: &PowerModel) -> CurrentSeries {
    let share = series.mass / series.n_functional as f64;
    let per_motor = model.moment_arm / model.motors_per_limb as f64;
    let per_limb: Vec<Vec<f64>> = (0..series.n_functional)
        .map(|j| {
            series
                .rows
                .iter()
                .map(|row| {
                    let (contact, u) = row[j];
                    if contact {
                        (share * u * per_motor).abs() / model.torque_const
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    CurrentSeries { t: series.t.clone(), per_limb, motors_per_limb: model.motors_per_limb }
}

/// Cost-of-transport report for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergeticsReport {
    /// Average mechanical power (W).
    pub p_mechanical: f64,
    /// Average Joule heating (W).
    pub p_heat: f64,
    /// Total average power (W).
    pub p_total: f64,
    /// Average speed (m/s).
    pub v_avg: f64,
    /// Specific resistance; absent for a stationary trial.
    pub sigma: Option<f64>,
    /// Trial duration (s).
    pub duration: f64,
    /// Distance traveled (m).
    pub distance: f64,
    /// Time-averaged rectified per-motor current over stance (A).
    pub i_avg: f64,
    /// Time-averaged total squared current over stance (A^2).
    pub i_sq_total: f64,
    /// Average stance extension (m).
    pub chi_stance: f64,
}

/// Assemble the report: `v = distance / elapsed`, currents averaged over
/// stance, total power as mechanical plus heat.
pub fn trial_report(
    series: &LimbForceSeries,
    model: &PowerModel,
    distance: f64,
) -> Result<EnergeticsReport, SimError> {
    model.validate()?;
    if series.t.len() < 2 {
        return Err(SimError::InvalidInput("trial needs at least two samples".into()));
    }
    let duration = series.t.last().unwrap() - series.t.first().unwrap();
    if !(duration > 0.0) {
        return Err(SimError::InvalidInput("trial duration must be > 0".into()));
    }
    let currents = simulate_currents(series, model);
    let motors = model.motors_per_limb as f64;
    let n_motors = series.n_functional as f64 * motors;

    // Piecewise-constant time averages over stance rows.
    let mut w_total = 0.0;
    let mut i_avg = 0.0;
    let mut i_sq = 0.0;
    let mut ext = 0.0;
    for k in 0..series.t.len() - 1 {
        let dt = series.t[k + 1] - series.t[k];
        if dt <= 0.0 {
            continue;
        }
        let in_stance = series.rows[k].iter().any(|&(c, _)| c);
        if !in_stance {
            continue;
        }
        let mut mean_i = 0.0;
        let mut sq = 0.0;
        for limb in &currents.per_limb {
            let i = limb[k];
            mean_i += i * motors;
            sq += i * i * motors;
        }
        mean_i /= n_motors;
        w_total += dt;
        i_avg += mean_i * dt;
        i_sq += sq * dt;
        ext += series.extension[k] * dt;
    }
    if w_total > 0.0 {
        i_avg /= w_total;
        i_sq /= w_total;
        ext /= w_total;
    }

    let v_avg = distance / duration;
    let p_mechanical = if w_total > 0.0 { mechanical_power(model, i_avg, v_avg, ext)? } else { 0.0 };
    let p_heat = joule_power(i_sq, model.motor_resistance);
    let p_total = p_mechanical + p_heat;
    let sigma = if v_avg > 0.0 {
        Some(specific_resistance(p_total, series.mass, series.gravity, v_avg)?)
    } else {
        None
    };
    Ok(EnergeticsReport {
        p_mechanical,
        p_heat,
        p_total,
        v_avg,
        sigma,
        duration,
        distance,
        i_avg,
        i_sq_total: i_sq,
        chi_stance: if w_total > 0.0 { ext } else { 0.0 },
    })
}
