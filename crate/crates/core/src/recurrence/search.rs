use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectral::{OverlapVector, SpectrumExtent};
use super::RecurrenceError;

/// `sqrt(2 sum |c_n|^2 (1 - cos(E_n T)))`, the distance between a state and
/// its evolution over time `T`.
pub fn recurrence_distance(c: &OverlapVector, energies: &[f64], t: f64) -> Result<f64, RecurrenceError> {
    if c.len() != energies.len() {
        return Err(RecurrenceError::LengthMismatch { left: c.len(), right: energies.len() });
    }
    let sum: f64 = c
        .0
        .iter()
        .zip(energies)
        .map(|(cn, &e)| cn.norm_sqr() * one_minus_cos(e * t))
        .sum();
    Ok((2.0 * sum).sqrt())
}

/// `1 - cos(x)` evaluated as `2 sin^2(x/2)` to keep precision near zero.
#[inline]
pub fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// `sum_n (1 - cos(E_n T))` over the supplied eigenvalues.
pub fn recurrence_objective(energies: &[f64], t: f64) -> f64 {
    energies.iter().map(|&e| one_minus_cos(e * t)).sum()
}

fn check_delta(delta: f64) -> Result<(), RecurrenceError> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(RecurrenceError::InvalidInput(format!("delta must be positive, got {delta}")))
    }
}

/// `sum_{n > cut} |c_n|^2`.
pub fn tail_mass(c: &OverlapVector, cut: usize) -> f64 {
    c.0.iter().skip(cut + 1).map(|x| x.norm_sqr()).sum()
}

/// Smallest `N` with `sum_{n > N} |c_n|^2 < delta^2 / 8`.
pub fn tail_cut(c: &OverlapVector, delta: f64) -> Result<usize, RecurrenceError> {
    check_delta(delta)?;
    if c.is_empty() {
        return Err(RecurrenceError::InvalidInput("empty overlap vector".into()));
    }
    let threshold = delta * delta / 8.0;
    // Suffix sums from the top; the last index always qualifies.
    let mut tail = 0.0;
    let mut cut = c.len() - 1;
    for n in (0..c.len()).rev() {
        if tail >= threshold {
            break;
        }
        cut = n;
        tail += c.0[n].norm_sqr();
    }
    Ok(cut)
}

/// State-independent tail cut for states with energy expectation below `m`:
/// the smallest `N` with `E_{N+1} >= 8 M / delta^2`.
///
/// `m` must be measured in the same (shifted) energy convention as
/// `energies`. For a [`SpectrumExtent::Complete`] spectrum whose largest
/// eigenvalue is still below the threshold, no state has weight beyond the
/// last level and `N = len - 1`; for a [`SpectrumExtent::Window`] that is a
/// failure.
pub fn tail_cut_energy(
    energies: &[f64],
    extent: SpectrumExtent,
    m: f64,
    delta: f64,
) -> Result<usize, RecurrenceError> {
    check_delta(delta)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(RecurrenceError::InvalidInput(format!("energy bound must be positive, got {m}")));
    }
    if energies.is_empty() {
        return Err(RecurrenceError::InvalidInput("empty spectrum".into()));
    }
    if energies[0] < 0.0 {
        return Err(RecurrenceError::InvalidInput("energies must be shifted so that E_0 >= 0".into()));
    }
    let threshold = 8.0 * m / (delta * delta);
    match energies.iter().skip(1).position(|&e| e >= threshold) {
        Some(pos) => Ok(pos),
        None => match extent {
            SpectrumExtent::Complete => Ok(energies.len() - 1),
            SpectrumExtent::Window => Err(RecurrenceError::SpectrumExhausted {
                threshold,
                largest: *energies.last().unwrap(),
            }),
        },
    }
}

/// Tail cut that works for every point of a finite net: the maximum of the
/// per-point cuts.
pub fn tail_cut_finite_net(net: &[OverlapVector], delta: f64) -> Result<usize, RecurrenceError> {
    if net.is_empty() {
        return Err(RecurrenceError::EmptyNet);
    }
    net.iter().map(|c| tail_cut(c, delta)).try_fold(0, |acc, n| Ok(acc.max(n?)))
}

/// Scan parameters for [`find_recurrence_time`]. `None` picks the defaults
/// `grid_step = 2 pi / (100 E_N)` and `t_max = 1e6 / E_gap`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub t_max: Option<f64>,
    pub grid_step: Option<f64>,
}

impl SearchOptions {
    pub fn with_horizon(t_max: f64) -> Self {
        Self { t_max: Some(t_max), grid_step: None }
    }
}

/// Default grid step: a hundredth of the fastest period in the list.
pub fn default_grid_step(energies: &[f64]) -> f64 {
    let top = energies.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    if top == 0.0 {
        1.0
    } else {
        TAU / (100.0 * top)
    }
}

/// Default horizon `1e6 / E_gap`, with `E_gap` the smallest nonzero spacing.
pub fn default_horizon(energies: &[f64]) -> f64 {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 1e-12)
        .fold(f64::INFINITY, f64::min);
    let gap = if gap.is_finite() { gap } else { sorted.last().copied().unwrap_or(1.0).abs().max(1.0) };
    1e6 / gap
}

/// Grid points per parallel window.
const WINDOW: usize = 1 << 15;

struct WindowResult {
    hit: Option<f64>,
    best: (f64, f64),
}

fn golden_section(energies: &[f64], mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let f = |t: f64| recurrence_objective(energies, t);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let candidates = [(lo, f(lo)), (x1, f1), (x2, f2), (hi, f(hi))];
    candidates.into_iter().fold((lo, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
}

#[allow(clippy::too_many_arguments)]
fn scan_window(
    energies: &[f64],
    tau_min: f64,
    t_max: f64,
    step: f64,
    first: usize,
    last: usize,
    threshold: f64,
    screen: f64,
) -> WindowResult {
    let at = |j: usize| (tau_min + j as f64 * step).min(t_max);
    let f = |j: usize| recurrence_objective(energies, at(j));
    let mut best = (at(first), f64::INFINITY);
    let mut prev = if first == 0 { f64::INFINITY } else { f(first - 1) };
    let mut cur = f(first);
    for j in first..last {
        let next = f(j + 1);
        if cur < best.1 {
            best = (at(j), cur);
        }
        // Local minimum of the sampled objective that could dip below the
        // threshold between neighbouring grid points.
        if cur <= prev && cur <= next && cur <= threshold + screen {
            let lo = if j == 0 { tau_min } else { at(j - 1) };
            let hi = at(j + 1);
            let (t, v) = golden_section(energies, lo, hi);
            if v < best.1 {
                best = (t, v);
            }
            if v < threshold {
                return WindowResult { hit: Some(t.max(tau_min)), best };
            }
        }
        prev = cur;
        cur = next;
    }
    WindowResult { hit: None, best }
}

/// Earliest time `T >= tau_min` on the scan grid whose refined objective
/// `sum_n (1 - cos(E_n T))` is below `delta^2 / 4`.
///
/// The result depends only on the eigenvalues, never on a state. Windows of
/// the grid are scanned in parallel and the earliest hit wins, so the answer
/// matches a sequential scan bit for bit.
pub fn find_recurrence_time(
    energies: &[f64],
    delta: f64,
    tau_min: f64,
    options: SearchOptions,
) -> Result<f64, RecurrenceError> {
    check_delta(delta)?;
    if energies.is_empty() {
        return Err(RecurrenceError::InvalidInput("empty spectrum".into()));
    }
    if !(tau_min >= 0.0 && tau_min.is_finite()) {
        return Err(RecurrenceError::InvalidInput(format!("tau_min must be non-negative, got {tau_min}")));
    }
    let step = options.grid_step.unwrap_or_else(|| default_grid_step(energies));
    let t_max = options.t_max.unwrap_or_else(|| tau_min + default_horizon(energies));
    if step.is_nan() || step <= 0.0 || t_max.is_nan() || t_max <= tau_min {
        return Err(RecurrenceError::InvalidInput(format!(
            "need grid_step > 0 and t_max > tau_min (step {step}, t_max {t_max}, tau_min {tau_min})"
        )));
    }
    let threshold = delta * delta / 4.0;
    // f(T*) + 0.5 * sum E_n^2 * step^2 bounds f on a grid cell around a minimum.
    let screen = 0.5 * energies.iter().map(|e| e * e).sum::<f64>() * step * step;
    let points = ((t_max - tau_min) / step).ceil() as usize;

    let windows: Vec<(usize, usize)> =
        (0..points).step_by(WINDOW).map(|s| (s, (s + WINDOW).min(points))).collect();
    let batch = rayon::current_num_threads().max(1) * 2;
    let mut best = (tau_min, f64::INFINITY);
    for chunk in windows.chunks(batch) {
        let results: Vec<WindowResult> = chunk
            .par_iter()
            .map(|&(a, b)| scan_window(energies, tau_min, t_max, step, a, b, threshold, screen))
            .collect();
        for r in &results {
            if r.best.1 < best.1 {
                best = r.best;
            }
        }
        if let Some(t) = results.iter().find_map(|r| r.hit) {
            return Ok(t);
        }
    }
    Err(RecurrenceError::NotFound { t_max, threshold, best_time: best.0, best_objective: best.1 })
}

/// `(T, objective)` samples over `[t0, t1]`, for plotting scan traces.
pub fn scan_trace(energies: &[f64], t0: f64, t1: f64, samples: usize) -> Vec<(f64, f64)> {
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / (samples - 1) as f64;
            (t, recurrence_objective(energies, t))
        })
        .collect()
}
