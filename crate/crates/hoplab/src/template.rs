//! The 1-DoF actively damped vertical hopper.
//!
//! A point mass on a massless spring leg alternates between ballistic flight
//! and a spring-mass-damper stance. During stance an actuator applies a
//! mass-specific input `tau = k_t * cos(angle(x))` where `x` is the state in
//! phase coordinates `x1 = chi - rho`, `x2 = chidot / omega`. Under the
//! quadrant convention used here the input always acts along the direction of
//! motion, injecting energy that the viscous damping bleeds off, which is what
//! regulates hop height.

use crate::error::SimError;

/// Physical constants of the vertical hopper plus derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopperParams {
    /// Body mass (kg).
    pub mass: f64,
    /// Spring constant (N/m).
    pub spring_const: f64,
    /// Damping constant (N*s/m).
    pub damping_const: f64,
    /// Spring rest length (m).
    pub rest_length: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
    /// Natural frequency sqrt(k/mu) (rad/s).
    pub natural_freq: f64,
    /// Damping ratio c / (2 mu omega).
    pub damping_ratio: f64,
    /// Include gravity in the stance field. The plain spring-mass-damper
    /// stance model omits it; the physically complete variant keeps it.
    pub stance_gravity: bool,
}

impl HopperParams {
    pub fn new(
        mass: f64,
        spring_const: f64,
        damping_const: f64,
        rest_length: f64,
        gravity: f64,
        stance_gravity: bool,
    ) -> Result<Self, SimError> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(SimError::InvalidInput(format!("mass must be > 0, got {mass}")));
        }
        if !(spring_const > 0.0) || !spring_const.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "spring_const must be > 0, got {spring_const}"
            )));
        }
        if !(damping_const >= 0.0) || !damping_const.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "damping_const must be >= 0, got {damping_const}"
            )));
        }
        if !(rest_length > 0.0) || !rest_length.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "rest_length must be > 0, got {rest_length}"
            )));
        }
        if !(gravity > 0.0) || !gravity.is_finite() {
            return Err(SimError::InvalidInput(format!("gravity must be > 0, got {gravity}")));
        }
        let natural_freq = (spring_const / mass).sqrt();
        let damping_ratio = damping_const / (2.0 * mass * natural_freq);
        Ok(Self {
            mass,
            spring_const,
            damping_const,
            rest_length,
            gravity,
            natural_freq,
            damping_ratio,
            stance_gravity,
        })
    }

    /// Published model parameter set: mu 6.173 kg, k 1500 N/m, c 3.2 N*s/m,
    /// rho 0.18 m, gamma 9.81 m/s^2, no gravity in the stance field.
    pub fn table1() -> Self {
        Self::new(6.173, 1500.0, 3.2, 0.18, 9.81, false).expect("table1 params valid")
    }
}

/// Which dynamics act on the body right now.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Stance,
    Flight,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Stance => "stance",
            Phase::Flight => "flight",
        }
    }
}

/// Phase tag plus continuous state; the unit of integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState {
    pub phase: Phase,
    /// Mass height (m).
    pub chi: f64,
    /// Vertical velocity (m/s).
    pub chidot: f64,
    /// Time (s).
    pub t: f64,
}

impl HybridState {
    pub fn new(phase: Phase, chi: f64, chidot: f64, t: f64) -> Self {
        Self { phase, chi, chidot, t }
    }

    pub fn is_finite(&self) -> bool {
        self.chi.is_finite() && self.chidot.is_finite() && self.t.is_finite()
    }
}

/// Stance state in the scaled coordinates `x1 = chi - rho`, `x2 = chidot / omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoords {
    pub x1: f64,
    pub x2: f64,
}

impl PhaseCoords {
    pub fn from_state(s: &HybridState, p: &HopperParams) -> Self {
        Self { x1: s.chi - p.rest_length, x2: s.chidot / p.natural_freq }
    }

    pub fn to_state(&self, p: &HopperParams, phase: Phase, t: f64) -> HybridState {
        HybridState::new(phase, self.x1 + p.rest_length, self.x2 * p.natural_freq, t)
    }

    /// True only at the isolated rest point (x1, x2) = (0, 0), where the
    /// phase angle is degenerate and defined as 0.
    pub fn is_degenerate(&self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0
    }
}

/// Control gains shared by the hopper and its anchored variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    /// Active damping vertical gain (k_t for the hopper, k_st when anchored).
    pub vertical_gain: f64,
    /// Software spring constant k_ss (N/m), used by anchored models.
    pub software_spring: f64,
    /// Software damping ratio (dimensionless), used by anchored models.
    pub software_damping: f64,
}

impl ControllerGains {
    pub fn new(vertical_gain: f64, software_spring: f64, software_damping: f64) -> Result<Self, SimError> {
        if !(vertical_gain >= 0.0) || !vertical_gain.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "vertical_gain must be >= 0, got {vertical_gain}"
            )));
        }
        if !(software_spring > 0.0) || !software_spring.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "software_spring must be > 0, got {software_spring}"
            )));
        }
        if !(software_damping >= 0.0) || !software_damping.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "software_damping must be >= 0, got {software_damping}"
            )));
        }
        Ok(Self { vertical_gain, software_spring, software_damping })
    }

    /// Gains with only the vertical AD gain set; spring/damping fields are
    /// irrelevant for the bare hopper and default to neutral values.
    pub fn vertical(vertical_gain: f64) -> Self {
        Self { vertical_gain, software_spring: 1.0, software_damping: 0.0 }
    }
}

/// Ballistic flight field: `(chidot, -gamma)`.
pub fn flight_derivative(s: &HybridState, p: &HopperParams) -> (f64, f64) {
    debug_assert_eq!(s.phase, Phase::Flight);
    (s.chidot, -p.gravity)
}

/// Open-loop stance field with a mass-specific input `tau` (m/s^2):
/// `chiddot = tau - (c/mu) chidot - (k/mu)(chi - rho) [- gamma]`.
pub fn stance_derivative(s: &HybridState, p: &HopperParams, tau: f64) -> (f64, f64) {
    debug_assert_eq!(s.phase, Phase::Stance);
    let mut acc = tau
        - (p.damping_const / p.mass) * s.chidot
        - (p.spring_const / p.mass) * (s.chi - p.rest_length);
    if p.stance_gravity {
        acc -= p.gravity;
    }
    (s.chidot, acc)
}

/// Quadrant-aware angle of the phase vector, `atan2(x1, x2)`, so that
/// `cos(angle) = x2 / |x|`. The zero vector maps to angle 0.
pub fn phase_angle(x: &PhaseCoords) -> f64 {
    x.x1.atan2(x.x2)
}

/// Active damping input `tau = k_t * cos(angle(x))`. Bounded by `k_t` and
/// signed with `x2`, so its instantaneous power `tau * x2` is never negative.
pub fn ad_torque(x: &PhaseCoords, gains: &ControllerGains) -> f64 {
    gains.vertical_gain * phase_angle(x).cos()
}

/// Closed-loop stance field. Evaluated in phase coordinates,
/// `xdot = -omega J x + e2 (-2 beta omega x2 + k_t cos(angle x) / omega)`,
/// then mapped back to `(chidot, chiddot)`.
pub fn closed_loop_stance(s: &HybridState, p: &HopperParams, gains: &ControllerGains) -> (f64, f64) {
    debug_assert_eq!(s.phase, Phase::Stance);
    let w = p.natural_freq;
    let x = PhaseCoords::from_state(s, p);
    let x2dot = -w * x.x1 - 2.0 * p.damping_ratio * w * x.x2 + ad_torque(&x, gains) / w;
    let mut acc = w * x2dot;
    if p.stance_gravity {
        acc -= p.gravity;
    }
    (w * x.x2, acc)
}
