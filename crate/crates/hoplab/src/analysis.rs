//! Apex return maps, steady-state fixed points, gain sweeps with affine
//! fits, limit-cycle extraction, and the series utilities used on empirical
//! height logs.

use rayon::prelude::*;

use crate::engine::{simulate, EventKind, IntegratorConfig, Trajectory};
use crate::error::SimError;
use crate::template::{ControllerGains, HopperParams, HybridState, Phase};

/// A flight apex lower than this above rest length does not count as a hop.
pub const MIN_HOP_HEIGHT: f64 = 1e-6;

/// Default convergence tolerance on consecutive apexes (m).
pub const FIXED_POINT_TOL: f64 = 1e-6;

/// Default iteration budget for the fixed-point search.
pub const FIXED_POINT_MAX_ITER: usize = 80;

/// One sample of the apex return map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApexMapSample {
    pub apex_in: f64,
    pub apex_out: f64,
    pub gain: f64,
}

/// Result of one apex-to-apex simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApexOutcome {
    /// Next apex height after touchdown, stance, liftoff and ascent.
    Apex(f64),
    /// The gain cannot sustain a hop (stance ran out the clock or the next
    /// flight stayed below [`MIN_HOP_HEIGHT`]).
    NoLiftoff,
}

/// Simulate one return of the apex section from flight state `(chi=a, chidot=0)`.
pub fn apex_map(
    a: f64,
    params: &HopperParams,
    gains: &ControllerGains,
    config: &IntegratorConfig,
) -> Result<ApexOutcome, SimError> {
    if !(a >= params.rest_length) {
        return Err(SimError::InvalidInput(format!(
            "apex {a} below rest length {}",
            params.rest_length
        )));
    }
    let cfg = IntegratorConfig { max_hops: 2, sample_stride: usize::MAX, ..*config };
    let start = HybridState::new(Phase::Flight, a, 0.0, 0.0);
    let traj = simulate(start, params, gains, &cfg)?;
    let liftoff_t = match traj.events.iter().find(|e| e.kind == EventKind::Liftoff) {
        Some(e) => e.t,
        None => return Ok(ApexOutcome::NoLiftoff),
    };
    let apex = traj
        .events
        .iter()
        .find(|e| e.kind == EventKind::Apex && e.t > liftoff_t);
    match apex {
        Some(e) if e.chi - params.rest_length >= MIN_HOP_HEIGHT => Ok(ApexOutcome::Apex(e.chi)),
        _ => Ok(ApexOutcome::NoLiftoff),
    }
}

/// Outcome of the apex fixed-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPointOutcome {
    Converged { apex: f64, iterations: usize },
    /// The map collapsed to rest: the gain is below the hopping threshold.
    Rest,
}

/// Find `a*` with `apex_map(a*) = a*` by secant iteration on
/// `g(a) = apex_map(a) - a`, falling back to plain map iteration whenever the
/// secant update leaves the map's domain.
pub fn find_fixed_point(
    params: &HopperParams,
    gains: &ControllerGains,
    config: &IntegratorConfig,
    a0: f64,
) -> Result<FixedPointOutcome, SimError> {
    find_fixed_point_with(params, gains, config, a0, FIXED_POINT_TOL, FIXED_POINT_MAX_ITER)
}

pub fn find_fixed_point_with(
    params: &HopperParams,
    gains: &ControllerGains,
    config: &IntegratorConfig,
    a0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointOutcome, SimError> {
    let rho = params.rest_length;
    let gamma = params.gravity;
    // The map is strongly nonlinear in apex height but nearly affine in the
    // touchdown speed sqrt(2 gamma (a - rho)), so the secant runs there.
    let to_apex = |v: f64| rho + v * v / (2.0 * gamma);
    let to_speed = |a: f64| (2.0 * gamma * (a - rho)).max(0.0).sqrt();
    // Returns (apex in, apex out, speed out) or None for no liftoff.
    let eval = |v: f64| -> Result<Option<(f64, f64)>, SimError> {
        let a = to_apex(v);
        match apex_map(a, params, gains, config)? {
            ApexOutcome::Apex(next) => Ok(Some((a, next))),
            ApexOutcome::NoLiftoff => Ok(None),
        }
    };

    let mut history = Vec::new();
    let mut v_prev = to_speed(a0);
    let (a_in, a_out) = match eval(v_prev)? {
        Some(pair) => pair,
        None => return Ok(FixedPointOutcome::Rest),
    };
    history.push(a_in);
    if (a_out - a_in).abs() < tol {
        return Ok(FixedPointOutcome::Converged { apex: a_out, iterations: 1 });
    }
    let mut f_prev = to_speed(a_out) - v_prev;
    let mut v = to_speed(a_out);
    history.push(a_out);

    for iteration in 2..=max_iter {
        let (a_in, a_out) = match eval(v)? {
            Some(pair) => pair,
            None => return Ok(FixedPointOutcome::Rest),
        };
        if (a_out - a_in).abs() < tol {
            return Ok(FixedPointOutcome::Converged { apex: a_out, iterations: iteration });
        }
        let v_out = to_speed(a_out);
        let f = v_out - v;
        let denom = f - f_prev;
        let secant = if denom != 0.0 { v - f * (v - v_prev) / denom } else { v_out };
        v_prev = v;
        f_prev = f;
        // Natural iterate fallback for wild updates; negative targets clamp
        // to rest, where the map reports no liftoff directly.
        v = if secant.is_finite() && secant < 1e3 { secant.max(0.0) } else { v_out };
        history.push(to_apex(v));
    }
    let tail = history.iter().rev().take(10).rev().copied().collect();
    Err(SimError::NonConvergence { iterations: max_iter, history: tail })
}

/// One gain's steady state in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gain: f64,
    pub apex_mean: f64,
    pub apex_std: f64,
    pub hops_to_converge: usize,
}

/// Least-squares affine fit summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Gain sweep output: per-gain steady apexes plus the affine fit over them.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Gains that produced no sustained hopping.
    pub no_liftoff: Vec<f64>,
    pub fit: AffineFit,
}

/// Ordinary least squares `y = slope x + intercept` with R^2.
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> Result<AffineFit, SimError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(SimError::InvalidInput(format!(
            "affine fit needs >= 2 points, got {}",
            xs.len().min(ys.len())
        )));
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if sxx == 0.0 {
        return Err(SimError::InvalidInput("affine fit with degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ym) * (y - ym)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(AffineFit { slope, intercept, r_squared, n_points: xs.len() })
}

/// Steady apex per gain (evaluated in parallel, assembled in gain order),
/// plus a least-squares affine fit of apex against gain.
///
/// After the fixed point converges, ten more map returns from `a*` provide
/// the reported mean and spread; `hops_to_converge` is the number of map
/// evaluations the search needed.
pub fn gain_sweep(
    params: &HopperParams,
    config: &IntegratorConfig,
    gains: &[f64],
    a0: f64,
) -> Result<SweepResult, SimError> {
    if gains.is_empty() {
        return Err(SimError::InvalidInput("gain sweep needs at least one gain".into()));
    }
    let mut ordered: Vec<f64> = gains.to_vec();
    ordered.sort_by(f64::total_cmp);

    let results: Vec<Result<(f64, Option<SweepPoint>), SimError>> = ordered
        .par_iter()
        .map(|&gain| {
            let g = ControllerGains::vertical(gain);
            match find_fixed_point(params, &g, config, a0)? {
                FixedPointOutcome::Rest => Ok((gain, None)),
                FixedPointOutcome::Converged { apex, iterations } => {
                    let mut seq = Vec::with_capacity(10);
                    let mut a = apex;
                    for _ in 0..10 {
                        match apex_map(a, params, &g, config)? {
                            ApexOutcome::Apex(next) => {
                                seq.push(next);
                                a = next;
                            }
                            ApexOutcome::NoLiftoff => break,
                        }
                    }
                    if seq.is_empty() {
                        return Ok((gain, None));
                    }
                    let n = seq.len() as f64;
                    let mean = seq.iter().sum::<f64>() / n;
                    let var = seq.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    Ok((
                        gain,
                        Some(SweepPoint {
                            gain,
                            apex_mean: mean,
                            apex_std: var.sqrt(),
                            hops_to_converge: iterations,
                        }),
                    ))
                }
            }
        })
        .collect();

    let mut points = Vec::new();
    let mut no_liftoff = Vec::new();
    for r in results {
        match r? {
            (_, Some(p)) => points.push(p),
            (gain, None) => no_liftoff.push(gain),
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.gain).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.apex_mean).collect();
    let fit = affine_fit(&xs, &ys)?;
    Ok(SweepResult { points, no_liftoff, fit })
}

/// One steady-state cycle in the `(chi, chidot)` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    /// Ordered `(chi, chidot)` samples over one apex-to-apex segment.
    pub states: Vec<(f64, f64)>,
    /// Time span of the segment (s).
    pub period: f64,
    /// Gap between segment start and end in the `(chi, chidot/omega)` norm.
    pub residual: f64,
}

impl LimitCycle {
    pub fn max_chi(&self) -> f64 {
        self.states.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Extract the final full apex-to-apex segment of a trajectory, skipping
/// `transient_hops` apexes from the front.
pub fn extract_limit_cycle(traj: &Trajectory, transient_hops: usize) -> Result<LimitCycle, SimError> {
    let apex_events: Vec<_> = traj
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Apex)
        .collect();
    if apex_events.len() < transient_hops + 2 {
        return Err(SimError::InvalidInput(format!(
            "need at least {} apexes past the transient, trajectory has {}",
            transient_hops + 2,
            apex_events.len()
        )));
    }
    let start = apex_events[apex_events.len() - 2];
    let end = apex_events[apex_events.len() - 1];
    let states: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.t >= start.t && s.t <= end.t)
        .map(|s| (s.chi, s.chidot))
        .collect();
    let w = traj.params.natural_freq;
    let dchi = start.chi - end.chi;
    let dvel = (start.chidot - end.chidot) / w;
    Ok(LimitCycle {
        states,
        period: end.t - start.t,
        residual: (dchi * dchi + dvel * dvel).sqrt(),
    })
}

/// Centered moving median. For window `w`, sample `i` is the median over
/// indices `[i - ceil(w/2) + 1, i + floor(w/2)]` clipped to the series; even
/// windows take the mean of the two central order statistics.
pub fn moving_median(series: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    let before = (w + 1) / 2 - 1;
    let after = w / 2;
    let mut buf: Vec<f64> = Vec::with_capacity(w);
    for i in 0..n {
        let lo = i.saturating_sub(before);
        let hi = (i + after).min(n - 1);
        buf.clear();
        buf.extend_from_slice(&series[lo..=hi]);
        buf.sort_by(f64::total_cmp);
        let m = buf.len();
        let med = if m % 2 == 1 { buf[m / 2] } else { 0.5 * (buf[m / 2 - 1] + buf[m / 2]) };
        out.push(med);
    }
    out
}

/// Default apex prominence threshold for empirical logs (m).
pub const APEX_PROMINENCE: f64 = 5e-3;

/// Local maxima of a uniformly sampled height series, strictly above
/// `rest_height` and with at least the default prominence.
pub fn extract_apexes(heights: &[f64], dt: f64, rest_height: f64) -> Vec<(f64, f64)> {
    extract_apexes_with(heights, dt, rest_height, APEX_PROMINENCE)
}

pub fn extract_apexes_with(
    heights: &[f64],
    dt: f64,
    rest_height: f64,
    prominence: f64,
) -> Vec<(f64, f64)> {
    assert!(dt > 0.0, "dt must be positive");
    let n = heights.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 <= n.saturating_sub(1) {
        if heights[i] > heights[i - 1] {
            // Find the end of any plateau at this level.
            let mut j = i;
            while j + 1 < n && heights[j + 1] == heights[i] {
                j += 1;
            }
            if j + 1 < n && heights[j + 1] < heights[i] {
                let peak = heights[i];
                if peak > rest_height && peak_prominence(heights, i, peak) >= prominence {
                    let idx = (i + j) / 2;
                    out.push((idx as f64 * dt, peak));
                }
                i = j + 1;
                continue;
            }
            i = j + 1;
            continue;
        }
        i += 1;
    }
    out
}

fn peak_prominence(heights: &[f64], peak_idx: usize, peak: f64) -> f64 {
    let mut left_min = peak;
    for k in (0..peak_idx).rev() {
        if heights[k] > peak {
            break;
        }
        left_min = left_min.min(heights[k]);
    }
    let mut right_min = peak;
    for k in peak_idx + 1..heights.len() {
        if heights[k] > peak {
            break;
        }
        right_min = right_min.min(heights[k]);
    }
    peak - left_min.max(right_min)
}
