//! Spectral tail cuts, recurrence-time search and forward-time inversion.
//!
//! A backwards evolution `e^{-H s}` is replaced by the forward evolution
//! `e^{H t*}` with `t* = T - s`, where `T >= s` is a time at which every
//! relevant phase `e^{-i E_n T}` has returned close to one.

mod search;
mod spectral;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use search::{
    default_grid_step, default_horizon, find_recurrence_time, one_minus_cos, recurrence_distance,
    recurrence_objective, scan_trace, tail_cut, tail_cut_energy, tail_cut_finite_net, tail_mass, SearchOptions,
};
pub use spectral::{spectrum_hash, OverlapVector, SpectralData, SpectrumExtent, HERMITICITY_TOL};

use crate::fock::StateVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecurrenceError {
    #[error("operator is not hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("eigensolver did not converge")]
    EigenSolver,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("spectrum ends at {largest} before the energy threshold {threshold}")]
    SpectrumExhausted { threshold: f64, largest: f64 },
    #[error("finite net is empty")]
    EmptyNet,
    #[error(
        "no recurrence below {threshold:e} before T = {t_max}; best objective {best_objective:e} at T = {best_time}"
    )]
    NotFound { t_max: f64, threshold: f64, best_time: f64, best_objective: f64 },
}

/// Which class of states an inversion is certified for.
#[derive(Clone, Debug)]
pub enum InversionMode {
    /// A single state.
    Pointwise(StateVector),
    /// Every state within `delta` of one of the listed net points.
    FiniteNet(Vec<StateVector>),
    /// Every state with `<H> < m`, energies measured in the shifted convention.
    EnergyBound(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Pointwise,
    FiniteNet,
    EnergyBound,
}

impl InversionMode {
    pub fn kind(&self) -> PlanMode {
        match self {
            InversionMode::Pointwise(_) => PlanMode::Pointwise,
            InversionMode::FiniteNet(_) => PlanMode::FiniteNet,
            InversionMode::EnergyBound(_) => PlanMode::EnergyBound,
        }
    }
}

/// Certificate data for one inversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrencePlan {
    pub delta: f64,
    /// Tail-cut index `N`.
    pub n_cut: usize,
    /// Recurrence time `T`.
    pub t_tilde: f64,
    /// `sum_{n <= N} (1 - cos(E_n T))`.
    pub achieved_sum: f64,
    /// Tail weight beyond `N`; for energy bounds the bound `M / E_{N+1}`.
    pub tail_mass: f64,
    pub mode: PlanMode,
    pub energy_bound: Option<f64>,
    pub spectrum_hash: String,
    pub shift: f64,
    /// Duration being inverted.
    pub s: f64,
    /// Forward duration `T - s`.
    pub t_star: f64,
}

impl RecurrencePlan {
    /// `2 sum + 4 tail`, which bounds the squared distance.
    pub fn decomposition(&self) -> f64 {
        2.0 * self.achieved_sum + 4.0 * self.tail_mass
    }

    pub fn sum_ok(&self) -> bool {
        self.achieved_sum < self.delta * self.delta / 4.0
    }

    pub fn tail_ok(&self) -> bool {
        let bound = self.delta * self.delta / 8.0;
        match self.mode {
            // A supremum over states with <H> strictly below M.
            PlanMode::EnergyBound => self.tail_mass <= bound,
            _ => self.tail_mass < bound,
        }
    }

    pub fn certified(&self) -> bool {
        self.sum_ok() && self.tail_ok() && self.decomposition() <= self.delta * self.delta && self.t_star >= 0.0
    }
}

/// Result of [`invert`].
#[derive(Clone, Debug, PartialEq)]
pub struct Inversion {
    pub t_star: f64,
    pub plan: RecurrencePlan,
}

fn net_tail(spectrum: &SpectralData, net: &[StateVector], cut: usize) -> Result<f64, RecurrenceError> {
    let mut worst = 0.0f64;
    for psi in net {
        worst = worst.max(tail_mass(&spectrum.overlaps(psi)?, cut));
    }
    Ok(worst)
}

/// Tail cut and tail weight for the requested state class.
pub fn plan_tail(spectrum: &SpectralData, delta: f64, mode: &InversionMode) -> Result<(usize, f64), RecurrenceError> {
    match mode {
        InversionMode::Pointwise(psi) => {
            let c = spectrum.overlaps(psi)?;
            let n = tail_cut(&c, delta)?;
            Ok((n, tail_mass(&c, n)))
        }
        InversionMode::FiniteNet(net) => {
            if net.is_empty() {
                return Err(RecurrenceError::EmptyNet);
            }
            let overlaps = net.iter().map(|p| spectrum.overlaps(p)).collect::<Result<Vec<_>, _>>()?;
            let n = tail_cut_finite_net(&overlaps, delta)?;
            Ok((n, net_tail(spectrum, net, n)?))
        }
        InversionMode::EnergyBound(m) => {
            let e = spectrum.eigenvalues();
            let n = tail_cut_energy(e, spectrum.extent(), *m, delta)?;
            let tail = match e.get(n + 1) {
                Some(&next) => m / next,
                None => 0.0,
            };
            Ok((n, tail))
        }
    }
}

/// Finds `t* >= 0` with `e^{H t*}` within `delta` of `e^{-H s}` on the
/// state class described by `mode`.
pub fn invert(
    spectrum: &SpectralData,
    s: f64,
    delta: f64,
    mode: &InversionMode,
    search: SearchOptions,
) -> Result<Inversion, RecurrenceError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(RecurrenceError::InvalidInput(format!("duration must be non-negative, got {s}")));
    }
    let (n_cut, tail) = plan_tail(spectrum, delta, mode)?;
    let energies = &spectrum.eigenvalues()[..=n_cut];
    let t_tilde = find_recurrence_time(energies, delta, s, search)?;
    let t_star = (t_tilde - s).max(0.0);
    let plan = RecurrencePlan {
        delta,
        n_cut,
        t_tilde,
        achieved_sum: recurrence_objective(energies, t_tilde),
        tail_mass: tail,
        mode: mode.kind(),
        energy_bound: match mode {
            InversionMode::EnergyBound(m) => Some(*m),
            _ => None,
        },
        spectrum_hash: spectrum.hash(),
        shift: spectrum.shift(),
        s,
        t_star,
    };
    Ok(Inversion { t_star, plan })
}
