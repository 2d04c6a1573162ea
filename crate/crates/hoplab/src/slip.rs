//! Planar (sagittal) spring-loaded inverted pendulum with fixed
//! touchdown/liftoff leg angles.
//!
//! The stance leg applies the same spring-damper plus active-damping input as
//! the vertical hopper, acting radially along the virtual leg. Fore-aft speed
//! comes entirely from the fixed leg angles: touchdown places the toe at
//! `y + rho sin(theta_td)` once the body descends to `z = rho cos(theta_td)`,
//! and liftoff happens when the leg recovers its rest length. The liftoff
//! angle is an instantaneous re-angling of the massless leg, so it carries no
//! dynamic effect here and is kept as metadata.

use crate::engine::{refine_crossing, rk4_step_arr, IntegratorConfig};
use crate::error::SimError;
use crate::template::{ControllerGains, Phase};

/// Leg-length floor: stance integration faults before the leg gets shorter.
pub const MIN_LEG_LENGTH: f64 = 0.02;

/// Point-mass body parameters for the planar model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipParams {
    /// Body mass (kg).
    pub mass: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
}

impl SlipParams {
    pub fn new(mass: f64, gravity: f64) -> Result<Self, SimError> {
        if !(mass > 0.0) || !(gravity > 0.0) {
            return Err(SimError::InvalidInput("mass and gravity must be > 0".into()));
        }
        Ok(Self { mass, gravity })
    }
}

/// Fixed-angle stepping policy for the single virtual leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteppingPolicy {
    /// Touchdown angle from vertical (rad); positive places the toe forward.
    pub touchdown_angle: f64,
    /// Liftoff angle from vertical (rad); metadata for the massless leg.
    pub liftoff_angle: f64,
    /// Virtual leg rest length (m).
    pub rest_length: f64,
    /// Software gains: spring k_ss, damping ratio, AD gain k_st.
    pub gains: ControllerGains,
    /// Hip angle servo holding the leg at the touchdown angle during stance:
    /// tangential acceleration `p (theta_cmd - theta) - d thetadot` (m/s^2).
    /// Zero disables the channel and leaves the toe a free pivot.
    pub angle_p: f64,
    /// Rate term of the hip angle servo (m/s^2 per rad/s).
    pub angle_d: f64,
}

impl SteppingPolicy {
    pub fn new(
        touchdown_angle: f64,
        liftoff_angle: f64,
        rest_length: f64,
        gains: ControllerGains,
    ) -> Result<Self, SimError> {
        if touchdown_angle.abs() >= std::f64::consts::FRAC_PI_2
            || liftoff_angle.abs() >= std::f64::consts::FRAC_PI_2
        {
            return Err(SimError::InvalidInput("leg angles must satisfy |theta| < pi/2".into()));
        }
        if !(rest_length > 0.0) {
            return Err(SimError::InvalidInput("rest length must be > 0".into()));
        }
        Ok(Self {
            touchdown_angle,
            liftoff_angle,
            rest_length,
            gains,
            angle_p: 0.0,
            angle_d: 0.0,
        })
    }

    /// Enable the stance hip angle servo.
    pub fn with_angle_servo(mut self, angle_p: f64, angle_d: f64) -> Self {
        self.angle_p = angle_p;
        self.angle_d = angle_d;
        self
    }

    fn omega(&self, params: &SlipParams) -> f64 {
        (self.gains.software_spring / params.mass).sqrt()
    }
}

/// Planar CoM state. `toe_y` is the active toe position in stance; in flight
/// it is the placement the policy would command at the next touchdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipState {
    pub phase: Phase,
    pub y: f64,
    pub z: f64,
    pub ydot: f64,
    pub zdot: f64,
    pub toe_y: f64,
    pub t: f64,
}

/// One recorded row of a planar trajectory, with the mass-specific radial
/// input and leg length alongside the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipSample {
    pub state: SlipState,
    /// Radial leg input per unit mass (m/s^2); zero in flight.
    pub u: f64,
    /// Leg length (m); rest length in flight.
    pub leg_len: f64,
}

/// Apex-to-apex outcome of one stride.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrideOutcome {
    Apex { z: f64, ydot: f64 },
    /// Body height reached zero during stance.
    Fall,
    /// The leg never recovered its rest length within the time budget.
    NoLiftoff,
}

/// Radial stance input per unit mass for leg length `len` and rate `lendot`.
fn radial_input(policy: &SteppingPolicy, omega: f64, len: f64, lendot: f64) -> f64 {
    let spring = -omega * omega * (len - policy.rest_length);
    let damping = -2.0 * policy.gains.software_damping * omega * lendot;
    let phase = (len - policy.rest_length).atan2(lendot / omega);
    damping + spring + policy.gains.vertical_gain * phase.cos()
}

/// Acceleration of the CoM in stance: the radial input along the leg, the
/// hip angle servo tangential to it (when enabled), and gravity. Returns
/// `(ay, az, u)`.
fn stance_accel(
    policy: &SteppingPolicy,
    omega: f64,
    gravity: f64,
    dy: f64,
    z: f64,
    ydot: f64,
    zdot: f64,
) -> (f64, f64, f64) {
    let len = (dy * dy + z * z).sqrt();
    let lendot = (dy * ydot + z * zdot) / len;
    let u = radial_input(policy, omega, len, lendot);
    let mut ay = u * dy / len;
    let mut az = u * z / len - gravity;
    if policy.angle_p != 0.0 || policy.angle_d != 0.0 {
        // Leg angle from vertical about the toe, held at the touchdown angle.
        let theta = dy.atan2(z);
        let thetadot = (z * ydot - dy * zdot) / (len * len);
        let a_t = policy.angle_p * (policy.touchdown_angle - theta) - policy.angle_d * thetadot;
        ay += a_t * z / len;
        az += a_t * (-dy) / len;
    }
    (ay, az, u)
}

/// Stance field: radial leg input (plus the optional hip angle servo) and
/// gravity. Returns the state derivative `(ydot, zdot, yddot, zddot)` and the
/// scalar radial input.
pub fn slip_stance_derivative(
    s: &SlipState,
    params: &SlipParams,
    policy: &SteppingPolicy,
) -> ((f64, f64, f64, f64), f64) {
    debug_assert_eq!(s.phase, Phase::Stance);
    let omega = policy.omega(params);
    let (ay, az, u) =
        stance_accel(policy, omega, params.gravity, s.y - s.toe_y, s.z, s.ydot, s.zdot);
    ((s.ydot, s.zdot, ay, az), u)
}

struct StrideOutput {
    outcome: StrideOutcome,
    /// Full state at the outcome point (the apex state for `Apex`).
    end: SlipState,
}

fn state_from(y: &[f64; 4], phase: Phase, toe_y: f64, t: f64) -> SlipState {
    SlipState { phase, y: y[0], z: y[1], ydot: y[2], zdot: y[3], toe_y, t }
}

fn push_sample(recorder: &mut Vec<SlipSample>, state: SlipState, u: f64, leg_len: f64) {
    let row = SlipSample { state, u, leg_len };
    if let Some(last) = recorder.last_mut() {
        if last.state.t == state.t {
            *last = row;
            return;
        }
    }
    recorder.push(row);
}

fn ensure_finite4(t: f64, y: &[f64; 4]) -> Result<(), SimError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SimError::IntegrationFault { t, chi: y[1], chidot: y[3] })
    }
}

/// Integrate one stride from an apex state: descent, stance, ascent to the
/// next apex. Appends rows to `recorder`.
fn integrate_stride(
    start: SlipState,
    params: &SlipParams,
    policy: &SteppingPolicy,
    config: &IntegratorConfig,
    recorder: &mut Vec<SlipSample>,
) -> Result<StrideOutput, SimError> {
    config.validate()?;
    let rho = policy.rest_length;
    let z_td = rho * policy.touchdown_angle.cos();
    if !(start.z > z_td) {
        return Err(SimError::InvalidInput(format!(
            "apex height {} does not clear the touchdown height {z_td}",
            start.z
        )));
    }
    let g = params.gravity;
    let h = config.step_size;
    let eps = config.eps_event;
    let omega = policy.omega(params);
    let t_budget = start.t + config.max_time;

    let flight_field = |_t: f64, ys: &[f64; 4]| [ys[2], ys[3], 0.0, -g];
    let toe_preview = |ys: &[f64; 4]| ys[0] + rho * policy.touchdown_angle.sin();

    let mut t = start.t;
    let mut y = [start.y, start.z, start.ydot, start.zdot];

    // Descent to touchdown.
    push_sample(recorder, state_from(&y, Phase::Flight, toe_preview(&y), t), 0.0, rho);
    loop {
        if t >= t_budget {
            return Ok(StrideOutput {
                outcome: StrideOutcome::NoLiftoff,
                end: state_from(&y, Phase::Flight, toe_preview(&y), t),
            });
        }
        let y1 = rk4_step_arr(&flight_field, t, &y, h);
        ensure_finite4(t, &y1)?;
        let g0 = y[1] - z_td;
        let g1 = y1[1] - z_td;
        if g0 > 0.0 && g1 <= 0.0 {
            let (dt, ye) =
                refine_crossing(&flight_field, &|_t, ys: &[f64; 4]| ys[1] - z_td, t, &y, h, g0, g1, eps);
            t += dt;
            y = ye;
            break;
        }
        t += h;
        y = y1;
        push_sample(recorder, state_from(&y, Phase::Flight, toe_preview(&y), t), 0.0, rho);
    }
    let toe = y[0] + rho * policy.touchdown_angle.sin();
    push_sample(recorder, state_from(&y, Phase::Stance, toe, t), 0.0, rho);

    // Stance until the leg recovers its rest length moving outward.
    let leg_len = |ys: &[f64; 4]| {
        let dy = ys[0] - toe;
        (dy * dy + ys[1] * ys[1]).sqrt()
    };
    let stance_input = |ys: &[f64; 4]| {
        let dy = ys[0] - toe;
        let len = (dy * dy + ys[1] * ys[1]).sqrt();
        let lendot = (dy * ys[2] + ys[1] * ys[3]) / len;
        (radial_input(policy, omega, len, lendot), len)
    };
    let stance_field = |_t: f64, ys: &[f64; 4]| {
        let (ay, az, _) = stance_accel(policy, omega, g, ys[0] - toe, ys[1], ys[2], ys[3]);
        [ys[2], ys[3], ay, az]
    };
    loop {
        if t >= t_budget {
            return Ok(StrideOutput {
                outcome: StrideOutcome::NoLiftoff,
                end: state_from(&y, Phase::Stance, toe, t),
            });
        }
        let y1 = rk4_step_arr(&stance_field, t, &y, h);
        ensure_finite4(t, &y1)?;
        if leg_len(&y1) < MIN_LEG_LENGTH {
            return Err(SimError::SimulationFault {
                t,
                what: format!("leg length collapsed below {MIN_LEG_LENGTH} m"),
            });
        }
        if y[1] > 0.0 && y1[1] <= 0.0 {
            // Fall: the body height reaches the ground during stance.
            let (dt, ye) =
                refine_crossing(&stance_field, &|_t, ys: &[f64; 4]| ys[1], t, &y, h, y[1], y1[1], eps);
            t += dt;
            y = ye;
            let (u, len) = stance_input(&y);
            push_sample(recorder, state_from(&y, Phase::Stance, toe, t), u, len);
            return Ok(StrideOutput {
                outcome: StrideOutcome::Fall,
                end: state_from(&y, Phase::Stance, toe, t),
            });
        }
        let g0 = leg_len(&y) - rho;
        let g1 = leg_len(&y1) - rho;
        if g0 < 0.0 && g1 >= 0.0 {
            let (dt, ye) = refine_crossing(
                &stance_field,
                &|_t, ys: &[f64; 4]| leg_len(ys) - rho,
                t,
                &y,
                h,
                g0,
                g1,
                eps,
            );
            t += dt;
            y = ye;
            break;
        }
        t += h;
        y = y1;
        let (u, len) = stance_input(&y);
        push_sample(recorder, state_from(&y, Phase::Stance, toe, t), u, len);
    }
    // Liftoff: the massless leg re-angles to the liftoff angle instantly; the
    // CoM state is continuous.
    push_sample(
        recorder,
        state_from(&y, Phase::Flight, y[0] + rho * policy.liftoff_angle.sin(), t),
        0.0,
        rho,
    );

    // Ascent to apex. If the body is already descending, the liftoff point is
    // the apex.
    if y[3] <= 0.0 {
        return Ok(StrideOutput {
            outcome: StrideOutcome::Apex { z: y[1], ydot: y[2] },
            end: state_from(&y, Phase::Flight, toe_preview(&y), t),
        });
    }
    loop {
        if t >= t_budget {
            return Ok(StrideOutput {
                outcome: StrideOutcome::NoLiftoff,
                end: state_from(&y, Phase::Flight, toe_preview(&y), t),
            });
        }
        let y1 = rk4_step_arr(&flight_field, t, &y, h);
        ensure_finite4(t, &y1)?;
        if y[3] > 0.0 && y1[3] <= 0.0 {
            let (dt, ye) = refine_crossing(
                &flight_field,
                &|_t, ys: &[f64; 4]| ys[3],
                t,
                &y,
                h,
                y[3],
                y1[3],
                config.eps_vel,
            );
            t += dt;
            y = ye;
            push_sample(recorder, state_from(&y, Phase::Flight, toe_preview(&y), t), 0.0, rho);
            return Ok(StrideOutput {
                outcome: StrideOutcome::Apex { z: y[1], ydot: y[2] },
                end: state_from(&y, Phase::Flight, toe_preview(&y), t),
            });
        }
        t += h;
        y = y1;
        push_sample(recorder, state_from(&y, Phase::Flight, toe_preview(&y), t), 0.0, rho);
    }
}

/// Apex-to-apex stride map from `(z_apex, ydot_apex)`.
pub fn slip_stride_map(
    z_apex: f64,
    ydot_apex: f64,
    params: &SlipParams,
    policy: &SteppingPolicy,
    config: &IntegratorConfig,
) -> Result<StrideOutcome, SimError> {
    let start = SlipState {
        phase: Phase::Flight,
        y: 0.0,
        z: z_apex,
        ydot: ydot_apex,
        zdot: 0.0,
        toe_y: 0.0,
        t: 0.0,
    };
    let mut scratch = Vec::new();
    Ok(integrate_stride(start, params, policy, config, &mut scratch)?.outcome)
}

/// Per-stride apex record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrideRecord {
    pub index: usize,
    pub z_apex: f64,
    pub ydot_apex: f64,
}

/// A chained multi-stride run.
#[derive(Debug, Clone, PartialEq)]
pub struct SlipRun {
    pub samples: Vec<SlipSample>,
    pub strides: Vec<StrideRecord>,
    pub outcome: StrideOutcome,
    pub end: SlipState,
}

/// Chain strides from apex `(z0, ydot0)` until `max_strides`, a failure, or
/// (optionally) the fore-aft distance `|y|` passing `stop_at_y`.
pub fn simulate_strides(
    params: &SlipParams,
    policy: &SteppingPolicy,
    config: &IntegratorConfig,
    z0: f64,
    ydot0: f64,
    max_strides: usize,
    stop_at_y: Option<f64>,
) -> Result<SlipRun, SimError> {
    let mut samples = Vec::new();
    let mut strides = Vec::new();
    let mut state = SlipState {
        phase: Phase::Flight,
        y: 0.0,
        z: z0,
        ydot: ydot0,
        zdot: 0.0,
        toe_y: 0.0,
        t: 0.0,
    };
    let mut outcome = StrideOutcome::Apex { z: z0, ydot: ydot0 };
    for index in 0..max_strides {
        // An apex that no longer clears the touchdown height cannot start
        // another stride; report it as a fall rather than a contract error.
        if state.z <= policy.rest_length * policy.touchdown_angle.cos() {
            outcome = StrideOutcome::Fall;
            break;
        }
        let out = integrate_stride(state, params, policy, config, &mut samples)?;
        outcome = out.outcome;
        state = out.end;
        match out.outcome {
            StrideOutcome::Apex { z, ydot } => {
                strides.push(StrideRecord { index, z_apex: z, ydot_apex: ydot });
                if let Some(limit) = stop_at_y {
                    if state.y.abs() >= limit {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    Ok(SlipRun { samples, strides, outcome, end: state })
}

/// Velocity fixed point of the stride map with its local contraction slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityFixedPoint {
    pub z_apex: f64,
    pub ydot: f64,
    /// d(ydot_out)/d(ydot_in) at the fixed point, by central difference.
    pub slope: f64,
    pub strides: usize,
}

/// Iterate the stride map to its apex fixed point (tolerance 1e-5 on the
/// `(z, ydot)` step) and estimate the return-map slope in the fore-aft
/// velocity by central difference with step 1e-4 m/s.
pub fn find_velocity_fixed_point(
    params: &SlipParams,
    policy: &SteppingPolicy,
    config: &IntegratorConfig,
    z_guess: f64,
    ydot_guess: f64,
) -> Result<VelocityFixedPoint, SimError> {
    const TOL: f64 = 1e-5;
    const MAX_STRIDES: usize = 400;
    let mut z = z_guess;
    let mut ydot = ydot_guess;
    let mut history = Vec::new();
    let mut converged = None;
    for stride in 1..=MAX_STRIDES {
        if z <= policy.rest_length * policy.touchdown_angle.cos() {
            return Err(SimError::SimulationFault {
                t: 0.0,
                what: format!("stride map sank below touchdown height at (z={z}, ydot={ydot})"),
            });
        }
        let (z1, ydot1) = match slip_stride_map(z, ydot, params, policy, config)? {
            StrideOutcome::Apex { z, ydot } => (z, ydot),
            StrideOutcome::Fall => {
                return Err(SimError::SimulationFault {
                    t: 0.0,
                    what: format!("stride map fell at (z={z}, ydot={ydot})"),
                })
            }
            StrideOutcome::NoLiftoff => {
                return Err(SimError::SimulationFault {
                    t: 0.0,
                    what: format!("stride map stalled at (z={z}, ydot={ydot})"),
                })
            }
        };
        let dz = z1 - z;
        let dy = ydot1 - ydot;
        z = z1;
        ydot = ydot1;
        history.push(ydot);
        if (dz * dz + dy * dy).sqrt() < TOL {
            converged = Some(stride);
            break;
        }
    }
    let strides = converged.ok_or_else(|| {
        let tail: Vec<f64> = history.iter().rev().take(10).rev().copied().collect();
        SimError::NonConvergence { iterations: MAX_STRIDES, history: tail }
    })?;

    const DELTA: f64 = 1e-4;
    let probe = |yd: f64| -> Result<f64, SimError> {
        match slip_stride_map(z, yd, params, policy, config)? {
            StrideOutcome::Apex { ydot, .. } => Ok(ydot),
            _ => Err(SimError::SimulationFault {
                t: 0.0,
                what: "stride map failed while probing the slope".into(),
            }),
        }
    };
    let plus = probe(ydot + DELTA)?;
    let minus = probe(ydot - DELTA)?;
    let slope = (plus - minus) / (2.0 * DELTA);
    Ok(VelocityFixedPoint { z_apex: z, ydot, slope, strides })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{apex_map, ApexOutcome};
    use crate::template::HopperParams;

    fn params() -> SlipParams {
        SlipParams::new(6.173, 9.81).unwrap()
    }

    fn cfg() -> IntegratorConfig {
        IntegratorConfig { max_time: 20.0, ..Default::default() }
    }

    /// Table II fore-aft gains reduced to one virtual leg (mean rest length
    /// and mean angles over the three functional limbs).
    fn foreaft_policy(k_st: f64) -> SteppingPolicy {
        SteppingPolicy::new(
            (-0.1 + -0.05 + 0.1) / 3.0,
            (-0.15 + -0.1 + 0.15) / 3.0,
            (0.18 + 0.145 + 0.18) / 3.0,
            ControllerGains::new(k_st, 1300.0, 0.25).unwrap(),
        )
        .unwrap()
    }

    /// Same, with the stance hip angle servo at its default strength.
    fn foreaft_policy_servo(k_st: f64) -> SteppingPolicy {
        foreaft_policy(k_st).with_angle_servo(50.0, 3.0)
    }

    #[test]
    fn unloaded_vertical_leg_feels_only_gravity() {
        let p = params();
        let pol =
            SteppingPolicy::new(0.0, 0.0, 0.18, ControllerGains::new(0.0, 1300.0, 0.25).unwrap())
                .unwrap();
        let s = SlipState {
            phase: Phase::Stance,
            y: 0.3,
            z: 0.18,
            ydot: 0.0,
            zdot: 0.0,
            toe_y: 0.3,
            t: 0.0,
        };
        let ((_, _, ay, az), u) = slip_stance_derivative(&s, &p, &pol);
        assert_eq!(ay, 0.0);
        assert!((az + 9.81).abs() < 1e-12);
        assert!(u.abs() < 1e-12);
    }

    #[test]
    fn compressed_vertical_leg_direct_substitution() {
        let p = params();
        let pol =
            SteppingPolicy::new(0.0, 0.0, 0.18, ControllerGains::new(0.0, 1300.0, 0.0).unwrap())
                .unwrap();
        let s = SlipState {
            phase: Phase::Stance,
            y: 0.0,
            z: 0.17,
            ydot: 0.0,
            zdot: 0.0,
            toe_y: 0.0,
            t: 0.0,
        };
        let ((_, _, _, az), _) = slip_stance_derivative(&s, &p, &pol);
        let expect = (1300.0 / 6.173) * 0.01 - 9.81;
        assert!((az - expect).abs() < 1e-9, "az={az} expect={expect}");
        assert!((expect + 7.704054754576381).abs() < 1e-9);
    }

    #[test]
    fn symmetric_stance_has_zero_foreaft_force() {
        let p = params();
        let pol = foreaft_policy(5.5);
        let s = SlipState {
            phase: Phase::Stance,
            y: 1.0,
            z: 0.15,
            ydot: 0.5,
            zdot: 0.0,
            toe_y: 1.0,
            t: 0.0,
        };
        let ((_, _, ay, _), _) = slip_stance_derivative(&s, &p, &pol);
        assert_eq!(ay, 0.0);
    }

    #[test]
    fn force_acts_along_the_leg() {
        let p = params();
        let pol = foreaft_policy(5.5);
        for &(y, z, ydot, zdot, toe) in &[
            (0.02, 0.15, 0.4, -0.2, 0.0),
            (-0.03, 0.12, 0.8, 0.3, 0.01),
            (0.0, 0.17, 0.0, -1.0, 0.02),
        ] {
            let s = SlipState { phase: Phase::Stance, y, z, ydot, zdot, toe_y: toe, t: 0.0 };
            let ((_, _, ay, az), _) = slip_stance_derivative(&s, &p, &pol);
            // Remove gravity; the residual must be parallel to the leg.
            let (fy, fz) = (ay, az + p.gravity);
            let cross = fy * z - fz * (y - toe);
            assert!(cross.abs() < 1e-12, "cross={cross}");
        }
    }

    #[test]
    fn vertical_stride_reduces_to_hopper_apex_map() {
        // theta = 0 and matched parameters: the stride map agrees with the
        // 1-DoF apex map once the hopper keeps gravity in stance.
        let p = params();
        let (k_ss, beta_s, k_st) = (1300.0, 0.25, 5.5);
        let pol =
            SteppingPolicy::new(0.0, 0.0, 0.18, ControllerGains::new(k_st, k_ss, beta_s).unwrap())
                .unwrap();
        let omega = (k_ss / p.mass).sqrt();
        let c = 2.0 * p.mass * omega * beta_s;
        let hopper = HopperParams::new(p.mass, k_ss, c, 0.18, p.gravity, true).unwrap();
        let gains = ControllerGains::vertical(k_st);
        for &a in &[0.20, 0.24, 0.30] {
            let slip_next = match slip_stride_map(a, 0.0, &p, &pol, &cfg()).unwrap() {
                StrideOutcome::Apex { z, ydot } => {
                    assert!(ydot.abs() < 1e-12);
                    z
                }
                other => panic!("unexpected {other:?}"),
            };
            let hop_next = match apex_map(a, &hopper, &gains, &cfg()).unwrap() {
                ApexOutcome::Apex(v) => v,
                other => panic!("unexpected {other:?}"),
            };
            assert!(
                (slip_next - hop_next).abs() < 1e-8,
                "a={a}: slip={slip_next} hopper={hop_next}"
            );
        }
    }

    #[test]
    fn conservative_stride_preserves_energy() {
        let p = params();
        let pol =
            SteppingPolicy::new(0.1, 0.0, 0.18, ControllerGains::new(0.0, 1300.0, 0.0).unwrap())
                .unwrap();
        let (z0, ydot0) = (0.22, 0.2);
        let e0 = 0.5 * ydot0 * ydot0 + p.gravity * z0;
        match slip_stride_map(z0, ydot0, &p, &pol, &cfg()).unwrap() {
            StrideOutcome::Apex { z, ydot } => {
                let e1 = 0.5 * ydot * ydot + p.gravity * z;
                assert!((e1 - e0).abs() / e0 < 1e-6, "e0={e0} e1={e1}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mirror_symmetry() {
        let p = params();
        let g = ControllerGains::new(7.5, 1300.0, 0.25).unwrap();
        let pol_fwd = SteppingPolicy::new(0.08, 0.05, 0.18, g).unwrap().with_angle_servo(50.0, 3.0);
        let pol_bwd = SteppingPolicy::new(-0.08, -0.05, 0.18, g).unwrap().with_angle_servo(50.0, 3.0);
        let fwd = simulate_strides(&p, &pol_fwd, &cfg(), 0.22, 0.2, 4, None).unwrap();
        let bwd = simulate_strides(&p, &pol_bwd, &cfg(), 0.22, -0.2, 4, None).unwrap();
        assert_eq!(fwd.samples.len(), bwd.samples.len());
        for (a, b) in fwd.samples.iter().zip(&bwd.samples) {
            assert!((a.state.y + b.state.y).abs() <= 1e-12, "y {} vs {}", a.state.y, b.state.y);
            assert!((a.state.z - b.state.z).abs() <= 1e-12);
            assert!((a.state.ydot + b.state.ydot).abs() <= 1e-12);
            assert!((a.state.zdot - b.state.zdot).abs() <= 1e-12);
        }
    }

    #[test]
    fn flight_conserves_horizontal_momentum() {
        let p = params();
        let pol = foreaft_policy_servo(7.5);
        let run = simulate_strides(&p, &pol, &cfg(), 0.20, 0.2, 2, None).unwrap();
        for w in run.samples.windows(2) {
            if w[0].state.phase == Phase::Flight && w[1].state.phase == Phase::Flight {
                assert!((w[0].state.ydot - w[1].state.ydot).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stride_map_rejects_unreachable_touchdown() {
        let p = params();
        let pol = foreaft_policy(5.5);
        assert!(slip_stride_map(0.10, 0.0, &p, &pol, &cfg()).is_err());
    }

    #[test]
    fn velocity_fixed_point_attracts_neighbors() {
        let p = params();
        let pol = foreaft_policy_servo(7.5);
        let fp = find_velocity_fixed_point(&p, &pol, &cfg(), 0.20, 0.2).unwrap();
        assert!(fp.slope.abs() < 1.0, "slope={}", fp.slope);
        // One stride from the fixed point stays at the fixed point.
        match slip_stride_map(fp.z_apex, fp.ydot, &p, &pol, &cfg()).unwrap() {
            StrideOutcome::Apex { z, ydot } => {
                assert!((z - fp.z_apex).abs() < 1e-4);
                assert!((ydot - fp.ydot).abs() < 1e-4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pure_vertical_policy_has_zero_velocity_fixed_point() {
        let p = params();
        let pol =
            SteppingPolicy::new(0.0, 0.0, 0.18, ControllerGains::new(7.5, 1300.0, 0.25).unwrap())
                .unwrap()
                .with_angle_servo(50.0, 3.0);
        let fp = find_velocity_fixed_point(&p, &pol, &cfg(), 0.20, 0.0).unwrap();
        assert!(fp.ydot.abs() < 1e-9, "ydot={}", fp.ydot);
    }
}
