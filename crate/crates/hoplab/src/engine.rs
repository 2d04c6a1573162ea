//! Fixed-step RK4 integration of the hybrid hopper with event-localized
//! resets.
//!
//! Touchdown and liftoff are crossings of `chi - rho`, apex is the downward
//! zero crossing of `chidot` in flight. Crossings detected between two
//! integration samples are refined by false position (with a bisection
//! fallback) on RK4 substeps from the bracket start, and integration resumes
//! from the refined event state. The reset map is the identity on
//! `(chi, chidot)`.

use crate::error::SimError;
use crate::template::{
    closed_loop_stance, flight_derivative, ControllerGains, HopperParams, HybridState, Phase,
};

/// Integration and event-localization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// RK4 step size (s).
    pub step_size: f64,
    /// Guard tolerance for position-like events (m).
    pub eps_event: f64,
    /// Guard tolerance for velocity-like events (m/s).
    pub eps_vel: f64,
    /// Wall-clock limit of the simulated trajectory (s).
    pub max_time: f64,
    /// Stop after this many completed flight phases.
    pub max_hops: usize,
    /// Record every n-th integration step; event states are always recorded.
    pub sample_stride: usize,
    /// Optional floor height (m); the body dropping below it is a fault.
    /// Disabled by default: the plain spring model is well defined for any
    /// extension and the high-gain gaits compress past zero height.
    pub floor_level: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-4,
            eps_event: 1e-9,
            eps_vel: 1e-6,
            max_time: 300.0,
            max_hops: 1000,
            sample_stride: 1,
            floor_level: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "step_size must be > 0, got {}",
                self.step_size
            )));
        }
        if !(self.eps_event > 0.0) || !(self.eps_vel > 0.0) {
            return Err(SimError::InvalidInput("event tolerances must be > 0".into()));
        }
        if !(self.max_time > 0.0) {
            return Err(SimError::InvalidInput("max_time must be > 0".into()));
        }
        if self.sample_stride == 0 {
            return Err(SimError::InvalidInput("sample_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Hybrid reset events, in the order they occur within one hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Touchdown,
    Liftoff,
    Apex,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Touchdown => "touchdown",
            EventKind::Liftoff => "liftoff",
            EventKind::Apex => "apex",
        }
    }
}

/// One localized event. `hop_index` counts completed flight phases at the
/// event time; a touchdown counts the flight it terminates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub kind: EventKind,
    pub t: f64,
    pub chi: f64,
    pub chidot: f64,
    pub hop_index: usize,
}

/// One recorded state row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub chi: f64,
    pub chidot: f64,
    pub phase: Phase,
}

/// Time-stamped samples plus the ordered event log and a parameter snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    pub params: HopperParams,
    pub gains: ControllerGains,
    pub config: IntegratorConfig,
}

impl Trajectory {
    /// Apex heights in hop order.
    pub fn apex_heights(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Apex)
            .map(|e| e.chi)
            .collect()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Generic fixed-size integration core, shared with the planar and tripod
// models.
// ---------------------------------------------------------------------------

/// Classical 4th-order Runge-Kutta step.
pub(crate) fn rk4_step_arr<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(t, y);
    let mut ytmp = [0.0; N];
    for i in 0..N {
        ytmp[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(t + 0.5 * h, &ytmp);
    for i in 0..N {
        ytmp[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(t + 0.5 * h, &ytmp);
    for i in 0..N {
        ytmp[i] = y[i] + h * k3[i];
    }
    let k4 = f(t + h, &ytmp);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Refine a guard zero inside `(0, h]`, propagating from `(t0, y0)` with
/// single RK4 substeps. False position with a bisection fallback; stops once
/// `|g| <= eps` or the time bracket collapses to floating-point resolution.
/// Returns the offset from `t0` and the state there.
pub(crate) fn refine_crossing<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    guard: &impl Fn(f64, &[f64; N]) -> f64,
    t0: f64,
    y0: &[f64; N],
    h: f64,
    g_left: f64,
    g_right: f64,
    eps: f64,
) -> (f64, [f64; N]) {
    if g_right == 0.0 {
        return (h, rk4_step_arr(f, t0, y0, h));
    }
    let mut ta = 0.0;
    let mut ga = g_left;
    let mut tb = h;
    let mut gb = g_right;
    let width_floor = f64::EPSILON * (t0.abs() + h).max(1.0);
    let mut result = (tb, rk4_step_arr(f, t0, y0, tb));
    for iter in 0..200 {
        let denom = gb - ga;
        let mut tm = if denom != 0.0 { ta - ga * (tb - ta) / denom } else { 0.5 * (ta + tb) };
        if !(tm > ta && tm < tb) || iter >= 60 {
            tm = 0.5 * (ta + tb);
        }
        let ym = rk4_step_arr(f, t0, y0, tm);
        let gm = guard(t0 + tm, &ym);
        result = (tm, ym);
        if gm.abs() <= eps || (tb - ta) <= width_floor {
            return result;
        }
        if (gm > 0.0) == (ga > 0.0) {
            ta = tm;
            ga = gm;
        } else {
            tb = tm;
            gb = gm;
        }
    }
    result
}

// ---------------------------------------------------------------------------
// Hopper-facing API
// ---------------------------------------------------------------------------

fn hybrid_field_adapter<'a>(
    phase: Phase,
    field: &'a impl Fn(&HybridState) -> (f64, f64),
) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + 'a {
    move |t, y| {
        let s = HybridState::new(phase, y[0], y[1], t);
        let (d0, d1) = field(&s);
        [d0, d1]
    }
}

/// One deterministic RK4 step of `field` from `s`; no event handling.
pub fn step(
    s: &HybridState,
    field: impl Fn(&HybridState) -> (f64, f64),
    h: f64,
) -> Result<HybridState, SimError> {
    let (d0, d1) = field(s);
    if !d0.is_finite() || !d1.is_finite() {
        return Err(SimError::IntegrationFault { t: s.t, chi: s.chi, chidot: s.chidot });
    }
    let f = hybrid_field_adapter(s.phase, &field);
    let y = rk4_step_arr(&f, s.t, &[s.chi, s.chidot], h);
    let out = HybridState::new(s.phase, y[0], y[1], s.t + h);
    if !out.is_finite() {
        return Err(SimError::IntegrationFault { t: s.t, chi: s.chi, chidot: s.chidot });
    }
    Ok(out)
}

/// Refine an event inside the bracket `[s0, s1]`, where `s1` was produced by
/// stepping `field` from `s0`. The guard must change sign across the bracket
/// unless it is already within `eps_event` at `s0`.
pub fn locate_event(
    s0: &HybridState,
    s1: &HybridState,
    field: impl Fn(&HybridState) -> (f64, f64),
    guard: impl Fn(&HybridState) -> f64,
    eps_event: f64,
) -> Result<(f64, HybridState), SimError> {
    let g0 = guard(s0);
    if g0.abs() <= eps_event {
        return Ok((s0.t, *s0));
    }
    let g1 = guard(s1);
    if g0 * g1 > 0.0 {
        return Err(SimError::BracketError { g0, g1 });
    }
    let h = s1.t - s0.t;
    let f = hybrid_field_adapter(s0.phase, &field);
    let g = |t: f64, y: &[f64; 2]| guard(&HybridState::new(s0.phase, y[0], y[1], t));
    let (dt, y) = refine_crossing(&f, &g, s0.t, &[s0.chi, s0.chidot], h, g0, g1, eps_event);
    Ok((s0.t + dt, HybridState::new(s0.phase, y[0], y[1], s0.t + dt)))
}

/// Integrate the closed-loop hopper through alternating stance and flight.
///
/// Liftoff fires when `chi - rho` crosses zero upward in stance, touchdown
/// when it crosses zero downward in flight; apexes are logged at downward
/// `chidot` crossings in flight without a phase change. State is continuous
/// across all resets. The run ends at `max_time` or after `max_hops`
/// completed flights, whichever comes first; a stance that never lifts off
/// simply runs out the clock.
pub fn simulate(
    initial: HybridState,
    params: &HopperParams,
    gains: &ControllerGains,
    config: &IntegratorConfig,
) -> Result<Trajectory, SimError> {
    config.validate()?;
    if !initial.is_finite() {
        return Err(SimError::IntegrationFault {
            t: initial.t,
            chi: initial.chi,
            chidot: initial.chidot,
        });
    }
    let rho = params.rest_length;
    let eps = config.eps_event;
    let mut s = initial;
    match s.phase {
        Phase::Flight if s.chi < rho - eps => {
            return Err(SimError::InvalidInput(format!(
                "flight start below rest length: chi={}",
                s.chi
            )));
        }
        Phase::Stance if s.chi > rho + eps => {
            return Err(SimError::InvalidInput(format!(
                "stance start above rest length: chi={}",
                s.chi
            )));
        }
        _ => {}
    }
    // A flight start resting exactly on the guard and not ascending is
    // already touching the ground; treat it as stance.
    if s.phase == Phase::Flight && s.chi <= rho && s.chidot <= 0.0 && (s.chi - rho).abs() <= eps {
        s.phase = Phase::Stance;
    }

    let mut samples: Vec<Sample> = Vec::new();
    let mut events: Vec<EventRecord> = Vec::new();
    let mut hops_completed = 0usize;
    let mut step_count = 0usize;
    let end_time = initial.t + config.max_time;

    let push_sample = |samples: &mut Vec<Sample>, s: &HybridState| {
        let row = Sample { t: s.t, chi: s.chi, chidot: s.chidot, phase: s.phase };
        if let Some(last) = samples.last_mut() {
            if last.t == row.t {
                *last = row;
                return;
            }
        }
        samples.push(row);
    };
    push_sample(&mut samples, &s);

    let stance_field = |st: &HybridState| closed_loop_stance(st, params, gains);
    let flight_field = |st: &HybridState| flight_derivative(st, params);

    let iter_cap = ((config.max_time / config.step_size) as usize).saturating_add(64) * 4;
    let mut iterations = 0usize;

    while s.t < end_time && hops_completed < config.max_hops {
        iterations += 1;
        if iterations > iter_cap {
            return Err(SimError::SimulationFault {
                t: s.t,
                what: "integration made no progress (event chattering)".into(),
            });
        }
        let h = config.step_size.min(end_time - s.t);
        if h <= 0.0 {
            break;
        }

        match s.phase {
            Phase::Stance => {
                // Degenerate start on the guard, already moving up: lift off
                // immediately.
                let g0 = s.chi - rho;
                if g0 == 0.0 && s.chidot > 0.0 {
                    events.push(EventRecord {
                        kind: EventKind::Liftoff,
                        t: s.t,
                        chi: s.chi,
                        chidot: s.chidot,
                        hop_index: hops_completed,
                    });
                    s.phase = Phase::Flight;
                    push_sample(&mut samples, &s);
                    continue;
                }
                let s1 = step(&s, stance_field, h)?;
                if let Some(floor) = config.floor_level {
                    if s1.chi < floor {
                        return Err(SimError::SimulationFault {
                            t: s1.t,
                            what: format!("body fell through the floor (chi={})", s1.chi),
                        });
                    }
                }
                let g1 = s1.chi - rho;
                if g0 < 0.0 && g1 >= 0.0 {
                    let (t_ev, mut s_ev) =
                        locate_event(&s, &s1, stance_field, |st| st.chi - rho, eps)?;
                    events.push(EventRecord {
                        kind: EventKind::Liftoff,
                        t: t_ev,
                        chi: s_ev.chi,
                        chidot: s_ev.chidot,
                        hop_index: hops_completed,
                    });
                    s_ev.phase = Phase::Flight;
                    s = s_ev;
                    push_sample(&mut samples, &s);
                    continue;
                }
                s = s1;
            }
            Phase::Flight => {
                let s1 = step(&s, flight_field, h)?;
                if let Some(floor) = config.floor_level {
                    if s1.chi < floor {
                        return Err(SimError::SimulationFault {
                            t: s1.t,
                            what: format!("body fell through the floor (chi={})", s1.chi),
                        });
                    }
                }
                // Apex is a measurement section, not a reset: log it and keep
                // integrating the original step. Touchdown is a real reset and
                // integration resumes from its refined state.
                let apex_candidate = if s.chidot > 0.0 && s1.chidot <= 0.0 {
                    let (t_ev, s_ev) =
                        locate_event(&s, &s1, flight_field, |st| st.chidot, config.eps_vel)?;
                    Some((t_ev, s_ev))
                } else {
                    None
                };
                let g0 = s.chi - rho;
                let g1 = s1.chi - rho;
                let touchdown_candidate = if g0 > 0.0 && g1 <= 0.0 {
                    let (t_ev, s_ev) =
                        locate_event(&s, &s1, flight_field, |st| st.chi - rho, eps)?;
                    Some((t_ev, s_ev))
                } else {
                    None
                };
                if let Some((t_ap, s_ap)) = apex_candidate {
                    if touchdown_candidate.map_or(true, |(t_td, _)| t_ap <= t_td) {
                        events.push(EventRecord {
                            kind: EventKind::Apex,
                            t: t_ap,
                            chi: s_ap.chi,
                            chidot: s_ap.chidot,
                            hop_index: hops_completed,
                        });
                        push_sample(&mut samples, &s_ap);
                    }
                }
                if let Some((t_td, mut s_td)) = touchdown_candidate {
                    hops_completed += 1;
                    events.push(EventRecord {
                        kind: EventKind::Touchdown,
                        t: t_td,
                        chi: s_td.chi,
                        chidot: s_td.chidot,
                        hop_index: hops_completed,
                    });
                    s_td.phase = Phase::Stance;
                    s = s_td;
                    push_sample(&mut samples, &s);
                    continue;
                }
                s = s1;
            }
        }

        step_count += 1;
        if step_count % config.sample_stride == 0 {
            push_sample(&mut samples, &s);
        }
    }
    push_sample(&mut samples, &s);

    Ok(Trajectory {
        samples,
        events,
        params: *params,
        gains: *gains,
        config: *config,
    })
}
