//! A quadruped with up to one missing limb, controlled as a single virtual
//! leg: per-limb spring-damper terms on individual extensions plus one
//! active-damping term computed from the averaged extension state of the
//! functional limbs.
//!
//! The body model is vertical translation only. In contact, a limb's
//! extension is kinematically tied to the body height; out of contact it
//! holds its rest length and contributes no force. Body acceleration is the
//! functional-limb mean of the in-contact inputs minus gravity, so symmetric
//! full-contact operation reduces exactly to the 1-DoF hopper.
//!
//! The module also carries the quasi-static side of losing a limb: toe
//! positions from hip geometry, the support-polygon margin of the CoM
//! projection, and static load distribution.

use crate::engine::{refine_crossing, rk4_step_arr, IntegratorConfig};
use crate::error::SimError;
use crate::template::ControllerGains;

/// Limb labels. Array-valued per-limb data is indexed in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimbId {
    LeftFront,
    LeftBack,
    RightFront,
    RightBack,
}

pub const ALL_LIMBS: [LimbId; 4] =
    [LimbId::LeftFront, LimbId::LeftBack, LimbId::RightFront, LimbId::RightBack];

impl LimbId {
    pub fn index(self) -> usize {
        match self {
            LimbId::LeftFront => 0,
            LimbId::LeftBack => 1,
            LimbId::RightFront => 2,
            LimbId::RightBack => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LimbId::LeftFront => "LF",
            LimbId::LeftBack => "LB",
            LimbId::RightFront => "RF",
            LimbId::RightBack => "RB",
        }
    }

    pub fn parse(s: &str) -> Option<LimbId> {
        match s.to_ascii_uppercase().as_str() {
            "LF" => Some(LimbId::LeftFront),
            "LB" => Some(LimbId::LeftBack),
            "RF" => Some(LimbId::RightFront),
            "RB" => Some(LimbId::RightBack),
            _ => None,
        }
    }
}

/// Per-limb geometry and stepping angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimbConfig {
    /// Rest length (m).
    pub rest_length: f64,
    /// Touchdown angle from vertical (rad).
    pub touchdown_angle: f64,
    /// Liftoff angle from vertical (rad).
    pub liftoff_angle: f64,
    /// Hip height offset relative to the body reference (m).
    pub z_offset: f64,
}

/// Robot-level parameters: mass, hip layout, per-limb configuration, the
/// missing-limb designation and the software gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    /// Robot mass (kg).
    pub mass: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
    /// Body-frame hip coordinates (x fore-aft, y lateral) per limb (m).
    pub hips: [(f64, f64); 4],
    pub limbs: [LimbConfig; 4],
    pub missing: Option<LimbId>,
    /// Software gains: spring k_ss, damping ratio, AD gain k_st.
    pub gains: ControllerGains,
}

/// Default symmetric hip layout (not from any data sheet): +/-0.2 m fore-aft,
/// +/-0.1 m lateral.
pub const DEFAULT_HIPS: [(f64, f64); 4] = [(0.2, 0.1), (-0.2, 0.1), (0.2, -0.1), (-0.2, -0.1)];

impl RobotParams {
    pub fn new(
        mass: f64,
        gravity: f64,
        hips: [(f64, f64); 4],
        limbs: [LimbConfig; 4],
        missing: Option<LimbId>,
        gains: ControllerGains,
    ) -> Result<Self, SimError> {
        if !(mass > 0.0) || !(gravity > 0.0) {
            return Err(SimError::InvalidInput("mass and gravity must be > 0".into()));
        }
        for (i, limb) in limbs.iter().enumerate() {
            if !(limb.rest_length > 0.0 && limb.rest_length < 0.25) {
                return Err(SimError::InvalidInput(format!(
                    "rest length of limb {} out of (0, 0.25): {}",
                    ALL_LIMBS[i].as_str(),
                    limb.rest_length
                )));
            }
        }
        Ok(Self { mass, gravity, hips, limbs, missing, gains })
    }

    pub fn natural_freq(&self) -> f64 {
        (self.gains.software_spring / self.mass).sqrt()
    }

    pub fn is_functional(&self, limb: LimbId) -> bool {
        self.missing != Some(limb)
    }

    pub fn functional_limbs(&self) -> impl Iterator<Item = LimbId> + '_ {
        ALL_LIMBS.into_iter().filter(|&l| self.is_functional(l))
    }

    pub fn n_functional(&self) -> usize {
        if self.missing.is_some() {
            3
        } else {
            4
        }
    }

    /// Published vertical tripedal gait: k_ss 1500, software damping 0.25,
    /// rest lengths LF 0.17 / LB 0.138 / RB 0.18, angles 0 / -0.15 / +0.2,
    /// right-front limb missing.
    pub fn table2_vertical(k_st: f64) -> Self {
        let limb = |rest, angle| LimbConfig {
            rest_length: rest,
            touchdown_angle: angle,
            liftoff_angle: angle,
            z_offset: 0.0,
        };
        Self::new(
            6.173,
            9.81,
            DEFAULT_HIPS,
            [
                limb(0.17, 0.0),
                limb(0.138, -0.15),
                limb(0.18, 0.0), // missing; placeholder geometry
                limb(0.18, 0.2),
            ],
            Some(LimbId::RightFront),
            ControllerGains::new(k_st, 1500.0, 0.25).expect("gains valid"),
        )
        .expect("table2 params valid")
    }

    /// Published quadrupedal fore-aft gait: k_ss 800, software damping 0.25,
    /// all rest lengths 0.18, all angles -0.05, no missing limb.
    pub fn table3_quadruped(k_st: f64) -> Self {
        let limb = LimbConfig {
            rest_length: 0.18,
            touchdown_angle: -0.05,
            liftoff_angle: -0.05,
            z_offset: 0.0,
        };
        Self::new(
            6.173,
            9.81,
            DEFAULT_HIPS,
            [limb; 4],
            None,
            ControllerGains::new(k_st, 800.0, 0.25).expect("gains valid"),
        )
        .expect("table3 params valid")
    }
}

/// Per-limb continuous state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimbState {
    /// Extension (m): body-tied in contact, rest length out of contact.
    pub extension: f64,
    /// Extension rate (m/s): body rate in contact, zero out of contact.
    pub rate: f64,
    pub contact: bool,
}

/// Body height and velocity plus the per-limb channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripodState {
    pub z: f64,
    pub zdot: f64,
    pub limbs: [LimbState; 4],
    pub t: f64,
}

impl TripodState {
    /// Assemble the state implied by body height/velocity and a contact set.
    fn assemble(z: f64, zdot: f64, contacts: [bool; 4], params: &RobotParams, t: f64) -> Self {
        let mut limbs = [LimbState { extension: 0.0, rate: 0.0, contact: false }; 4];
        for (i, slot) in limbs.iter_mut().enumerate() {
            let cfg = &params.limbs[i];
            if contacts[i] {
                *slot = LimbState { extension: z - cfg.z_offset, rate: zdot, contact: true };
            } else {
                *slot = LimbState { extension: cfg.rest_length, rate: 0.0, contact: false };
            }
        }
        Self { z, zdot, limbs, t }
    }
}

/// Commanded feedback input for one functional limb: individual spring and
/// damping terms, shared active-damping term from the functional-limb
/// averages.
pub fn limb_policy(limb: LimbId, state: &TripodState, params: &RobotParams) -> Result<f64, SimError> {
    if !params.is_functional(limb) {
        return Err(SimError::InvalidInput(format!(
            "limb_policy called for the missing limb {}",
            limb.as_str()
        )));
    }
    let omega = params.natural_freq();
    let ad = averaged_ad_term(state, params, omega);
    let i = limb.index();
    let ls = state.limbs[i];
    Ok(-2.0 * params.gains.software_damping * omega * ls.rate
        - omega * omega * (ls.extension - params.limbs[i].rest_length)
        + ad)
}

/// AD term shared by all functional limbs: `k_st cos(angle(avg state))` where
/// the phase uses the mean extension (centered on the mean rest length) and
/// the mean extension rate.
fn averaged_ad_term(state: &TripodState, params: &RobotParams, omega: f64) -> f64 {
    let mut ext = 0.0;
    let mut rate = 0.0;
    let mut rest = 0.0;
    let mut n = 0.0;
    for limb in params.functional_limbs() {
        let i = limb.index();
        ext += state.limbs[i].extension;
        rate += state.limbs[i].rate;
        rest += params.limbs[i].rest_length;
        n += 1.0;
    }
    ext /= n;
    rate /= n;
    rest /= n;
    let phase = (ext - rest).atan2(rate / omega);
    params.gains.vertical_gain * phase.cos()
}

/// Tripod event log entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TripodEventKind {
    LimbTouchdown(LimbId),
    LimbLiftoff(LimbId),
    /// Flight apex (all functional limbs out of contact).
    Apex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripodEvent {
    pub kind: TripodEventKind,
    pub t: f64,
    pub z: f64,
    pub zdot: f64,
    /// Completed flight phases at the event time.
    pub hop_index: usize,
}

/// One recorded row: body state plus per-limb channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TripodSample {
    pub t: f64,
    pub z: f64,
    pub zdot: f64,
    /// Per-limb (extension, rate, contact, input); input is zero out of
    /// contact.
    pub limbs: [(f64, f64, bool, f64); 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripodTrajectory {
    pub samples: Vec<TripodSample>,
    pub events: Vec<TripodEvent>,
    pub params: RobotParams,
    pub config: IntegratorConfig,
}

impl TripodTrajectory {
    pub fn apex_heights(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, TripodEventKind::Apex))
            .map(|e| e.z)
            .collect()
    }
}

/// Integrate the vertical tripod/quadruped body with per-limb unilateral
/// contact.
///
/// Body acceleration is `mean over functional limbs of (in-contact inputs)`
/// minus gravity; a limb leaves contact when its extension recovers its rest
/// length moving outward and touches down when its toe reaches the ground.
/// Apexes are logged during full flight. Starts with every functional limb
/// whose toe would be at or below the ground in contact.
pub fn simulate_tripod(
    z0: f64,
    zdot0: f64,
    params: &RobotParams,
    config: &IntegratorConfig,
) -> Result<TripodTrajectory, SimError> {
    config.validate()?;
    if !z0.is_finite() || !zdot0.is_finite() {
        return Err(SimError::IntegrationFault { t: 0.0, chi: z0, chidot: zdot0 });
    }
    let n_f = params.n_functional() as f64;
    let omega = params.natural_freq();
    let g = params.gravity;
    let eps = config.eps_event;

    // Toe height of limb i at body height z: z - z_offset - rho (airborne,
    // extension held at rest). In contact the same expression is the liftoff
    // guard (extension - rho).
    let guard = |z: f64, i: usize| z - params.limbs[i].z_offset - params.limbs[i].rest_length;

    let mut contacts = [false; 4];
    for limb in params.functional_limbs() {
        let i = limb.index();
        if guard(z0, i) <= 0.0 {
            contacts[i] = true;
        }
    }

    let body_accel = |z: f64, zdot: f64, contacts: &[bool; 4]| -> f64 {
        let state = TripodState::assemble(z, zdot, *contacts, params, 0.0);
        let ad = averaged_ad_term(&state, params, omega);
        let mut sum = 0.0;
        for limb in params.functional_limbs() {
            let i = limb.index();
            if contacts[i] {
                let ls = state.limbs[i];
                sum += -2.0 * params.gains.software_damping * omega * ls.rate
                    - omega * omega * (ls.extension - params.limbs[i].rest_length)
                    + ad;
            }
        }
        sum / n_f - g
    };

    let mut samples: Vec<TripodSample> = Vec::new();
    let mut events: Vec<TripodEvent> = Vec::new();
    let mut t = 0.0;
    let mut y = [z0, zdot0];
    let mut hops_completed = 0usize;
    let mut step_count = 0usize;

    let record = |samples: &mut Vec<TripodSample>,
                  t: f64,
                  y: &[f64; 2],
                  contacts: &[bool; 4],
                  force_row: bool| {
        let state = TripodState::assemble(y[0], y[1], *contacts, params, t);
        let mut limbs = [(0.0, 0.0, false, 0.0); 4];
        for (i, slot) in limbs.iter_mut().enumerate() {
            let ls = state.limbs[i];
            let u = if ls.contact {
                limb_policy(ALL_LIMBS[i], &state, params).unwrap_or(0.0)
            } else {
                0.0
            };
            *slot = (ls.extension, ls.rate, ls.contact, u);
        }
        let row = TripodSample { t, z: y[0], zdot: y[1], limbs };
        if let Some(last) = samples.last_mut() {
            if last.t == t {
                *last = row;
                return;
            }
        }
        let _ = force_row;
        samples.push(row);
    };
    record(&mut samples, t, &y, &contacts, true);

    let iter_cap = ((config.max_time / config.step_size) as usize).saturating_add(64) * 4;
    let mut iterations = 0usize;

    while t < config.max_time && hops_completed < config.max_hops {
        iterations += 1;
        if iterations > iter_cap {
            return Err(SimError::SimulationFault {
                t,
                what: "integration made no progress (event chattering)".into(),
            });
        }
        let h = config.step_size.min(config.max_time - t);
        if h <= 0.0 {
            break;
        }
        let field = {
            let contacts = contacts;
            move |_t: f64, ys: &[f64; 2]| [ys[1], body_accel(ys[0], ys[1], &contacts)]
        };
        let y1 = rk4_step_arr(&field, t, &y, h);
        if !y1.iter().all(|v| v.is_finite()) {
            return Err(SimError::IntegrationFault { t, chi: y[0], chidot: y[1] });
        }
        if let Some(floor) = config.floor_level {
            if y1[0] < floor {
                return Err(SimError::SimulationFault {
                    t,
                    what: format!("body fell through the floor (z={})", y1[0]),
                });
            }
        }

        let airborne = params.functional_limbs().all(|l| !contacts[l.index()]);

        // Apex: measurement only, logged during full flight.
        if airborne && y[1] > 0.0 && y1[1] <= 0.0 {
            let (dt, ya) = refine_crossing(
                &field,
                &|_t, ys: &[f64; 2]| ys[1],
                t,
                &y,
                h,
                y[1],
                y1[1],
                config.eps_vel,
            );
            events.push(TripodEvent {
                kind: TripodEventKind::Apex,
                t: t + dt,
                z: ya[0],
                zdot: ya[1],
                hop_index: hops_completed,
            });
            record(&mut samples, t + dt, &ya, &contacts, true);
        }

        // Limb contact transitions: find the earliest crossing, then toggle
        // every limb whose guard also sits on the event surface there.
        let mut earliest: Option<(f64, [f64; 2])> = None;
        for limb in params.functional_limbs() {
            let i = limb.index();
            let g0 = guard(y[0], i);
            let g1 = guard(y1[0], i);
            let crossing = if contacts[i] {
                g0 < 0.0 && g1 >= 0.0
            } else {
                g0 > 0.0 && g1 <= 0.0
            };
            if crossing {
                let (dt, ye) =
                    refine_crossing(&field, &|_t, ys: &[f64; 2]| guard(ys[0], i), t, &y, h, g0, g1, eps);
                if earliest.map_or(true, |(dt0, _)| dt < dt0) {
                    earliest = Some((dt, ye));
                }
            }
        }
        if let Some((dt, ye)) = earliest {
            let t_ev = t + dt;
            let was_airborne = airborne;
            let mut touched_down = false;
            for limb in params.functional_limbs() {
                let i = limb.index();
                let on_surface = guard(ye[0], i).abs() <= eps.max(1e-12);
                if contacts[i] {
                    if on_surface && ye[1] >= 0.0 {
                        contacts[i] = false;
                        events.push(TripodEvent {
                            kind: TripodEventKind::LimbLiftoff(limb),
                            t: t_ev,
                            z: ye[0],
                            zdot: ye[1],
                            hop_index: hops_completed,
                        });
                    }
                } else if on_surface && ye[1] <= 0.0 {
                    contacts[i] = true;
                    touched_down = true;
                    events.push(TripodEvent {
                        kind: TripodEventKind::LimbTouchdown(limb),
                        t: t_ev,
                        z: ye[0],
                        zdot: ye[1],
                        hop_index: hops_completed + 1,
                    });
                }
            }
            if was_airborne && touched_down {
                hops_completed += 1;
            }
            t = t_ev;
            y = ye;
            record(&mut samples, t, &y, &contacts, true);
            continue;
        }

        t += h;
        y = y1;
        step_count += 1;
        if step_count % config.sample_stride == 0 {
            record(&mut samples, t, &y, &contacts, false);
        }
    }
    record(&mut samples, t, &y, &contacts, true);

    Ok(TripodTrajectory { samples, events, params: *params, config: *config })
}

// ---------------------------------------------------------------------------
// Quasi-static pose analysis
// ---------------------------------------------------------------------------

/// Signed distance from `point` to the boundary of the convex hull of
/// `points`: positive inside, negative outside, zero on the boundary.
pub fn support_margin(points: &[(f64, f64)], point: (f64, f64)) -> Result<f64, SimError> {
    if points.len() < 3 {
        return Err(SimError::InvalidInput(format!(
            "support polygon needs at least 3 contact points, got {}",
            points.len()
        )));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(SimError::InvalidInput("contact points are collinear".into()));
    }
    // Inward signed distances to the edge lines of the ccw hull.
    let mut min_inward = f64::INFINITY;
    let mut inside = true;
    for k in 0..hull.len() {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        let ex = b.0 - a.0;
        let ey = b.1 - a.1;
        let cross = ex * (point.1 - a.1) - ey * (point.0 - a.0);
        let d = cross / (ex * ex + ey * ey).sqrt();
        min_inward = min_inward.min(d);
        if d < 0.0 {
            inside = false;
        }
    }
    if inside {
        return Ok(min_inward);
    }
    // Outside: distance to the nearest boundary segment.
    let mut dist = f64::INFINITY;
    for k in 0..hull.len() {
        dist = dist.min(point_segment_distance(point, hull[k], hull[(k + 1) % hull.len()]));
    }
    Ok(-dist)
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let ex = b.0 - a.0;
    let ey = b.1 - a.1;
    let px = p.0 - a.0;
    let py = p.1 - a.1;
    let len2 = ex * ex + ey * ey;
    let s = if len2 > 0.0 { ((px * ex + py * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let dx = px - s * ex;
    let dy = py - s * ey;
    (dx * dx + dy * dy).sqrt()
}

/// Andrew monotone chain, counterclockwise hull.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross =
        |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Static report for a standing pose: toe geometry, support margin, limb
/// normal loads.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseReport {
    /// Signed support margin of the CoM ground projection (m).
    pub margin: f64,
    /// Functional-limb toe ground positions (body frame).
    pub toes: Vec<(LimbId, (f64, f64))>,
    /// Static normal loads (N), same order as `toes`.
    pub loads: Vec<f64>,
    /// Margin positive and every load non-negative.
    pub statically_stable: bool,
}

/// Compute toe positions from hip coordinates, rest lengths and touchdown
/// angles, then check quasi-static stability of the pose: support margin of
/// the CoM projection and the static load distribution (force balance plus
/// two moment balances; least-norm loads when four limbs share the weight).
pub fn check_rebalanced_pose(params: &RobotParams) -> Result<PoseReport, SimError> {
    let toes: Vec<(LimbId, (f64, f64))> = params
        .functional_limbs()
        .map(|limb| {
            let i = limb.index();
            let hip = params.hips[i];
            let cfg = &params.limbs[i];
            (limb, (hip.0 + cfg.rest_length * cfg.touchdown_angle.sin(), hip.1))
        })
        .collect();
    if toes.len() < 3 {
        return Err(SimError::InvalidInput("pose check needs at least 3 functional limbs".into()));
    }
    let pts: Vec<(f64, f64)> = toes.iter().map(|(_, p)| *p).collect();
    let margin = support_margin(&pts, (0.0, 0.0))?;
    let weight = params.mass * params.gravity;
    let loads = static_loads(&pts, weight)?;
    let stable = margin > 0.0 && loads.iter().all(|&l| l >= 0.0);
    Ok(PoseReport { margin, toes, loads, statically_stable: stable })
}

/// Solve for normal loads: sum = weight, zero net moment about the CoM.
/// Exactly determined for 3 contacts; least-norm solution for 4.
fn static_loads(pts: &[(f64, f64)], weight: f64) -> Result<Vec<f64>, SimError> {
    let b = [weight, 0.0, 0.0];
    match pts.len() {
        3 => {
            let m = [
                [1.0, 1.0, 1.0],
                [pts[0].0, pts[1].0, pts[2].0],
                [pts[0].1, pts[1].1, pts[2].1],
            ];
            solve3(&m, &b)
                .map(|n| n.to_vec())
                .ok_or_else(|| SimError::InvalidInput("degenerate contact geometry".into()))
        }
        4 => {
            // N = A^T (A A^T)^{-1} b with A = [1; x; y].
            let a: Vec<[f64; 3]> = pts.iter().map(|p| [1.0, p.0, p.1]).collect();
            let mut m = [[0.0; 3]; 3];
            for row in &a {
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += row[i] * row[j];
                    }
                }
            }
            let lam = solve3(&m, &b)
                .ok_or_else(|| SimError::InvalidInput("degenerate contact geometry".into()))?;
            Ok(a.iter().map(|row| row[0] * lam[0] + row[1] * lam[1] + row[2] * lam[2]).collect())
        }
        n => Err(SimError::InvalidInput(format!("static loads for {n} contacts unsupported"))),
    }
}

fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det = det3(m);
    if det.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for col in 0..3 {
        let mut mc = *m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        out[col] = det3(&mc) / det;
    }
    Some(out)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
