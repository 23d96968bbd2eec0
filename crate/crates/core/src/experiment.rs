//! Batch experiments: a JSON config in, a report and artifacts out.
//!
//! Every command parses its config with unknown fields rejected, validates
//! it (errors carry JSON-pointer paths), runs, and returns an [`Outcome`]
//! whose `ok` flag is false on any certificate or verification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::chain::{chain_controllability, chain_demo, mode_occupation, truncated_propagation_check, ChainError, ChainSpec};
use crate::fock::{FockError, StateVector, TruncationSpec};
use crate::io::{two_column_csv, write_atomic};
use crate::propagator::{
    commutator, commutator_word, oracle_state, realize, trotter_sequence, ControlSequence, GeneratorSet,
    PropagatorError,
};
use crate::recurrence::{invert, scan_trace, InversionMode, RecurrenceError, SearchOptions, SpectralData};
use crate::synth::{reachability_report, CompileOptions, InverterChoice, Report, SynthError, Target};
use crate::weyl::{lie_closure, ClosureOptions, PolyOp, Role, Verdict, WeylError};

pub const COMMANDS: [&str; 8] =
    ["closure", "propagation", "recur", "invert", "trotter", "commutator", "compile", "chain-demo"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("config error at `{pointer}`: {message}")]
    Config { pointer: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

impl ExperimentError {
    /// True for errors in the command line or the config, as opposed to
    /// failures of the computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(self, ExperimentError::UnknownCommand(_) | ExperimentError::Config { .. })
    }
}

fn config_err(pointer: impl Into<String>, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Config { pointer: pointer.into(), message: message.into() }
}

fn escape_pointer(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => write!(out, "/{index}").unwrap(),
            Segment::Map { key } => write!(out, "/{}", escape_pointer(key)).unwrap(),
            Segment::Enum { variant } => write!(out, "/{}", escape_pointer(variant)).unwrap(),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

/// Deserializes `text`, reporting the failing location as a JSON pointer.
pub fn parse_config<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, ExperimentError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        config_err(pointer, e.into_inner().to_string())
    })
}

/// Result of one command: the report, the artifacts to write, and whether
/// every check passed.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub ok: bool,
    pub report: Value,
    pub artifacts: Vec<(PathBuf, Vec<u8>)>,
}

impl Outcome {
    fn new(command: &str, seed: Option<u64>, failures: Vec<String>, body: Value) -> Self {
        let report = json!({
            "command": command,
            "seed": seed,
            "ok": failures.is_empty(),
            "failures": failures,
            "result": body,
        });
        Self { ok: failures.is_empty(), report, artifacts: Vec::new() }
    }

    fn with(mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) -> Self {
        self.artifacts.push((path.into(), bytes.into()));
        self
    }

    /// Writes `report.json` and the artifacts under `dir`, each atomically.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let report = serde_json::to_vec_pretty(&self.report).map_err(std::io::Error::other)?;
        let path = dir.join("report.json");
        write_atomic(&path, &report)?;
        written.push(path);
        for (rel, bytes) in &self.artifacts {
            let path = dir.join(rel);
            write_atomic(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Runs `command` on the JSON config `text`. `seed` overrides the config's
/// `seed` field.
pub fn run(command: &str, text: &str, seed: Option<u64>) -> Result<Outcome, ExperimentError> {
    match command {
        "closure" => closure(parse_config(text)?, seed),
        "propagation" => propagation(parse_config(text)?, seed),
        "recur" => recur(parse_config(text)?, seed, false),
        "invert" => recur(parse_config(text)?, seed, true),
        "trotter" => trotter(parse_config(text)?, seed),
        "commutator" => commutator_cmd(parse_config(text)?, seed),
        "compile" => compile(parse_config(text)?, seed),
        "chain-demo" => chain_demo_cmd(parse_config(text)?, seed),
        other => Err(ExperimentError::UnknownCommand(other.to_string())),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(v).expect("report types serialize")
}

fn positive(value: f64, pointer: &str) -> Result<(), ExperimentError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(config_err(pointer, format!("must be positive and finite, got {value}")))
    }
}

// ---------------------------------------------------------------- shared parts

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub dim: usize,
    /// Untrusted levels below the cutoff; defaults to the largest degree of
    /// the system's polynomials.
    pub buffer: Option<usize>,
}

/// A state on the truncated space. Complex numbers are `[re, im]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    Fock { levels: Vec<usize> },
    Coherent { alphas: Vec<[f64; 2]> },
    /// Gaussian amplitudes on levels below `max_level`; needs a seed.
    Random { max_level: usize },
    Amplitudes { values: Vec<[f64; 2]> },
}

/// Polynomial Hamiltonians in text form (one-based modes) at a truncation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "one")]
    pub modes: usize,
    pub hamiltonians: Vec<String>,
    pub truncation: TruncationConfig,
}

fn one() -> usize {
    1
}

fn parse_hermitian(text: &str, modes: usize, pointer: &str) -> Result<PolyOp, ExperimentError> {
    let p = PolyOp::parse(text, modes).map_err(|e| config_err(pointer, e.to_string()))?;
    if p.role() != Role::Hermitian {
        return Err(config_err(pointer, format!("`{text}` is not hermitian")));
    }
    Ok(p)
}

impl SystemConfig {
    fn truncation(&self, polys: &[PolyOp], at: &str) -> Result<TruncationSpec, ExperimentError> {
        let buffer = self
            .truncation
            .buffer
            .unwrap_or_else(|| polys.iter().map(|p| p.degree() as usize).max().unwrap_or(0));
        TruncationSpec::uniform(self.modes, self.truncation.dim, buffer)
            .map_err(|e| config_err(format!("{at}/truncation"), e.to_string()))
    }

    fn generators(&self, at: &str) -> Result<GeneratorSet, ExperimentError> {
        if self.hamiltonians.is_empty() {
            return Err(config_err(format!("{at}/hamiltonians"), "at least one hamiltonian is required"));
        }
        let polys = self
            .hamiltonians
            .iter()
            .enumerate()
            .map(|(i, h)| parse_hermitian(h, self.modes, &format!("{at}/hamiltonians/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GeneratorSet::from_polys(&polys, &self.truncation(&polys, at)?)?)
    }
}

/// Seeded generator for sampled states, created on first use so that
/// configs without random states need no seed.
struct Sampler {
    seed: Option<u64>,
    rng: Option<ChaCha8Rng>,
}

impl Sampler {
    fn new(seed: Option<u64>) -> Self {
        Self { seed, rng: None }
    }

    fn rng(&mut self, pointer: &str) -> Result<&mut ChaCha8Rng, ExperimentError> {
        let seed = self
            .seed
            .ok_or_else(|| config_err(pointer, "sampled states need a seed (--seed or \"seed\")"))?;
        Ok(self.rng.get_or_insert_with(|| ChaCha8Rng::seed_from_u64(seed)))
    }
}

fn build_state(
    cfg: &StateConfig,
    spec: &TruncationSpec,
    sampler: &mut Sampler,
    pointer: &str,
) -> Result<StateVector, ExperimentError> {
    let c = |z: &[f64; 2]| C64::new(z[0], z[1]);
    match cfg {
        StateConfig::Fock { levels } => {
            if levels.len() != spec.mode_count() || levels.iter().zip(spec.dims()).any(|(&n, &d)| n >= d) {
                return Err(config_err(format!("{pointer}/fock/levels"), format!("levels must fit dims {:?}", spec.dims())));
            }
            Ok(StateVector::fock(spec, levels))
        }
        StateConfig::Coherent { alphas } => {
            if alphas.len() != spec.mode_count() {
                return Err(config_err(format!("{pointer}/coherent/alphas"), "need one amplitude per mode"));
            }
            Ok(StateVector::coherent(spec, &alphas.iter().map(c).collect::<Vec<_>>()))
        }
        StateConfig::Random { max_level } => {
            if *max_level == 0 {
                return Err(config_err(format!("{pointer}/random/max_level"), "must be positive"));
            }
            Ok(StateVector::random_supported(spec, *max_level, sampler.rng(pointer)?))
        }
        StateConfig::Amplitudes { values } => {
            if values.len() != spec.total_dim() {
                return Err(config_err(
                    format!("{pointer}/amplitudes/values"),
                    format!("expected {} amplitudes, got {}", spec.total_dim(), values.len()),
                ));
            }
            let amps = nalgebra::DVector::from_iterator(values.len(), values.iter().map(c));
            StateVector::normalized(amps)
                .ok_or_else(|| config_err(format!("{pointer}/amplitudes/values"), "all amplitudes are zero"))
        }
    }
}

/// How reversed segments are realized.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InverterConfig {
    Exact,
    Tracking {
        delta: f64,
        #[serde(default)]
        search: SearchOptions,
    },
    EnergyBound {
        delta: f64,
        m: f64,
        #[serde(default)]
        search: SearchOptions,
    },
    FiniteNet {
        delta: f64,
        net: Vec<StateConfig>,
        #[serde(default)]
        search: SearchOptions,
    },
}

impl InverterConfig {
    fn build(
        &self,
        spec: &TruncationSpec,
        sampler: &mut Sampler,
        pointer: &str,
    ) -> Result<InverterChoice, ExperimentError> {
        Ok(match self {
            InverterConfig::Exact => InverterChoice::Exact,
            InverterConfig::Tracking { delta, search } => {
                positive(*delta, &format!("{pointer}/tracking/delta"))?;
                InverterChoice::Tracking { delta: *delta, search: *search }
            }
            InverterConfig::EnergyBound { delta, m, search } => {
                positive(*delta, &format!("{pointer}/energy_bound/delta"))?;
                positive(*m, &format!("{pointer}/energy_bound/m"))?;
                InverterChoice::Fixed { delta: *delta, search: *search, mode: InversionMode::EnergyBound(*m) }
            }
            InverterConfig::FiniteNet { delta, net, search } => {
                positive(*delta, &format!("{pointer}/finite_net/delta"))?;
                let states = net
                    .iter()
                    .enumerate()
                    .map(|(i, s)| build_state(s, spec, sampler, &format!("{pointer}/finite_net/net/{i}")))
                    .collect::<Result<Vec<_>, _>>()?;
                InverterChoice::Fixed { delta: *delta, search: *search, mode: InversionMode::FiniteNet(states) }
            }
        })
    }
}

// ---------------------------------------------------------------- closure

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureConfig {
    #[serde(default = "one")]
    pub modes: usize,
    /// Hermitian `H`; the generators are `i H`.
    pub hamiltonians: Vec<String>,
    #[serde(default)]
    pub options: ClosureOptions,
    pub expect_dim: Option<usize>,
    pub expect_saturated: Option<bool>,
    pub seed: Option<u64>,
}

fn closure(cfg: ClosureConfig, seed: Option<u64>) -> Result<Outcome, ExperimentError> {
    let gens = cfg
        .hamiltonians
        .iter()
        .enumerate()
        .map(|(i, h)| Ok(parse_hermitian(h, cfg.modes, &format!("/hamiltonians/{i}"))?.times_i()))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let lb = lie_closure(&gens, cfg.options)?;
    let mut failures = Vec::new();
    if let Some(d) = cfg.expect_dim.filter(|&d| d != lb.dim()) {
        failures.push(format!("expected dimension {d}, found {}", lb.dim()));
    }
    if let Some(s) = cfg.expect_saturated.filter(|&s| s != lb.saturated()) {
        failures.push(format!("expected saturated = {s}, found {}", lb.saturated()));
    }
    let body = json!({
        "dim": lb.dim(),
        "saturated": lb.saturated(),
        "degree_cap_hit": lb.degree_cap_hit(),
        "dim_cap_hit": lb.dim_cap_hit(),
        "options": lb.options(),
        "basis": lb.basis().iter().map(|b| b.to_string()).collect::<Vec<_>>(),
    });
    Ok(Outcome::new("closure", seed.or(cfg.seed), failures, body))
}

// ---------------------------------------------------------------- propagation

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossCheckConfig {
    pub dim: usize,
    pub local_cap: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    pub chain: ChainSpec,
    #[serde(default = "propagation_options")]
    pub options: ClosureOptions,
    /// Truncated-matrix check of every edge; small systems only.
    pub cross_check: Option<CrossCheckConfig>,
    pub expect: Option<Verdict>,
    pub seed: Option<u64>,
}

fn propagation_options() -> ClosureOptions {
    ClosureOptions::with_caps(4, 2048)
}

/// Largest total dimension for the truncated cross-check.
const CROSS_CHECK_MAX_DIM: usize = 16;

fn propagation(cfg: PropagationConfig, seed: Option<u64>) -> Result<Outcome, ExperimentError> {
    cfg.chain.validate().map_err(|e| config_err("/chain", e.to_string()))?;
    let report = chain_controllability(&cfg.chain, cfg.options)?;
    let mut failures = Vec::new();
    if let Some(v) = cfg.expect.filter(|&v| v != report.verdict) {
        failures.push(format!("expected verdict {v:?}, found {:?}", report.verdict));
    }
    let mut checks = Vec::new();
    if let Some(cc) = &cfg.cross_check {
        let total = cc.dim.checked_pow(cfg.chain.n_modes as u32).unwrap_or(usize::MAX);
        if total > CROSS_CHECK_MAX_DIM {
            return Err(config_err(
                "/cross_check/dim",
                format!("total dimension {total} exceeds {CROSS_CHECK_MAX_DIM}"),
            ));
        }
        let truncation = TruncationSpec::uniform(cfg.chain.n_modes, cc.dim, 0)
            .map_err(|e| config_err("/cross_check/dim", e.to_string()))?;
        for e in &report.edges {
            let (lb, has) = truncated_propagation_check(&cfg.chain, (e.from, e.to), &truncation, cc.local_cap)?;
            let agrees = match e.verdict {
                Verdict::Propagates => has,
                Verdict::Fails => !has,
                Verdict::Unknown => true,
            };
            if !agrees {
                failures.push(format!(
                    "edge {} -> {}: symbolic verdict {:?} but truncated closure contains i q = {has}",
                    e.from, e.to, e.verdict
                ));
            }
            checks.push(json!({"from": e.from, "to": e.to, "matrix_dim": lb.dim(), "contains_iq": has, "agrees": agrees}));
        }
    }
    let body = json!({ "chain": to_json(&cfg.chain), "report": to_json(&report), "cross_check": checks });
    Ok(Outcome::new("propagation", seed.or(cfg.seed), failures, body))
}

// ---------------------------------------------------------------- recur / invert

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeConfig {
    Pointwise {
        state: StateConfig,
    },
    FiniteNet {
        net: Vec<StateConfig>,
        /// Extra states checked against `3 delta`, sampled within `delta` of net points.
        #[serde(default)]
        samples: usize,
    },
    EnergyBound {
        m: f64,
        /// Random states with `<H> < m` checked against `delta`.
        #[serde(default)]
        samples: usize,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurConfig {
    /// Either a polynomial system (uses `hamiltonian`, default 0) ...
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub hamiltonian: usize,
    /// ... or a model spectrum on its own eigenbasis.
    pub spectrum: Option<Vec<f64>>,
    pub delta: f64,
    /// `recur`: smallest admissible recurrence time. `invert`: the duration
    /// `s` to invert.
    #[serde(default = "one_f64")]
    pub s: f64,
    pub mode: ModeConfig,
    #[serde(default)]
    pub search: SearchOptions,
    /// Samples in the emitted objective trace.
    #[serde(default = "trace_samples")]
    pub trace_samples: usize,
    pub seed: Option<u64>,
}

fn one_f64() -> f64 {
    1.0
}

fn trace_samples() -> usize {
    2000
}

/// Random state with `<H> < m`: Gaussian amplitudes in the eigenbasis under
/// a thermal-like envelope at a random temperature, rejected until the mean
/// energy is below the bound.
fn energy_bounded_state<R: Rng>(rng: &mut R, sd: &SpectralData, m: f64) -> Option<StateVector> {
    let e = sd.eigenvalues();
    for _ in 0..10_000 {
        let temp = rng.random_range(0.05..2.0) * m;
        let c: Vec<C64> = e
            .iter()
            .map(|&en| {
                let w = (-en / (2.0 * temp)).exp();
                C64::new(rng.sample::<f64, _>(StandardNormal) * w, rng.sample::<f64, _>(StandardNormal) * w)
            })
            .collect();
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if norm == 0.0 {
            continue;
        }
        let mean: f64 = c.iter().zip(e).map(|(z, en)| z.norm_sqr() * en).sum::<f64>() / norm;
        if mean < m {
            let v = nalgebra::DVector::from_vec(c);
            return StateVector::normalized(sd.eigenvectors() * v);
        }
    }
    None
}

fn recur(cfg: RecurConfig, seed: Option<u64>, inverting: bool) -> Result<Outcome, ExperimentError> {
    let command = if inverting { "invert" } else { "recur" };
    let seed = seed.or(cfg.seed);
    let mut sampler = Sampler::new(seed);
    positive(cfg.delta, "/delta")?;
    if !(cfg.s >= 0.0 && cfg.s.is_finite()) {
        return Err(config_err("/s", format!("must be non-negative, got {}", cfg.s)));
    }
    let (sd, spec) = match (&cfg.system, &cfg.spectrum) {
        (Some(sys), None) => {
            let gens = sys.generators("/system")?;
            if cfg.hamiltonian >= gens.len() {
                return Err(config_err("/hamiltonian", format!("only {} hamiltonians", gens.len())));
            }
            (gens.spectral(cfg.hamiltonian)?.clone(), gens.spec().clone())
        }
        (None, Some(e)) => {
            let spec = TruncationSpec::uniform(1, e.len(), 0).map_err(|err| config_err("/spectrum", err.to_string()))?;
            (SpectralData::from_diagonal(e).map_err(|err| config_err("/spectrum", err.to_string()))?, spec)
        }
        _ => return Err(config_err("", "exactly one of `system` and `spectrum` is required")),
    };

    let (mode, mut checks) = match &cfg.mode {
        ModeConfig::Pointwise { state } => {
            let psi = build_state(state, &spec, &mut sampler, "/mode/pointwise/state")?;
            (InversionMode::Pointwise(psi.clone()), vec![(psi, cfg.delta)])
        }
        ModeConfig::FiniteNet { net, samples } => {
            let states = net
                .iter()
                .enumerate()
                .map(|(i, s)| build_state(s, &spec, &mut sampler, &format!("/mode/finite_net/net/{i}")))
                .collect::<Result<Vec<_>, _>>()?;
            let mut checks: Vec<(StateVector, f64)> = states.iter().map(|p| (p.clone(), cfg.delta)).collect();
            for k in 0..*samples {
                let rng = sampler.rng("/mode/finite_net/samples")?;
                let center = &states[k % states.len().max(1)];
                let dir = nalgebra::DVector::from_fn(spec.total_dim(), |_, _| {
                    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                let dir = dir.clone() / C64::new(dir.norm(), 0.0);
                let r = cfg.delta * rng.random_range(0.0..0.99);
                // A point of the unit sphere at chordal distance < delta from the center.
                let amps = center.amplitudes() * C64::new((1.0 - r * r / 2.0).max(0.0), 0.0) + dir * C64::new(r, 0.0);
                if let Some(psi) = StateVector::normalized(amps).filter(|p| p.distance(center) < cfg.delta) {
                    checks.push((psi, 3.0 * cfg.delta));
                }
            }
            (InversionMode::FiniteNet(states), checks)
        }
        ModeConfig::EnergyBound { m, samples } => {
            positive(*m, "/mode/energy_bound/m")?;
            let mut checks = Vec::new();
            for _ in 0..*samples {
                let rng = sampler.rng("/mode/energy_bound/samples")?;
                let psi = energy_bounded_state(rng, &sd, *m)
                    .ok_or_else(|| config_err("/mode/energy_bound/m", "could not sample a state below the bound"))?;
                checks.push((psi, cfg.delta));
            }
            (InversionMode::EnergyBound(*m), checks)
        }
    };
    if matches!(mode, InversionMode::FiniteNet(ref n) if n.is_empty()) {
        return Err(config_err("/mode/finite_net/net", "net is empty"));
    }

    let inv = invert(&sd, cfg.s, cfg.delta, &mode, cfg.search)?;
    let plan = inv.plan;
    let mut failures = Vec::new();
    if !plan.certified() {
        failures.push(format!(
            "plan not certified: 2 sum + 4 tail = {:e} vs delta^2 = {:e}",
            plan.decomposition(),
            plan.delta * plan.delta
        ));
    }
    let mut worst = 0.0f64;
    let mut measured = Vec::new();
    for (i, (psi, bound)) in checks.drain(..).enumerate() {
        let d = if inverting {
            sd.propagate(&psi, -cfg.s).distance(&sd.propagate(&psi, inv.t_star))
        } else {
            psi.distance(&sd.propagate(&psi, plan.t_tilde))
        };
        worst = worst.max(d);
        if d >= bound {
            failures.push(format!("state {i}: distance {d:e} >= {bound:e}"));
        }
        measured.push(d);
    }
    let energies = &sd.eigenvalues()[..=plan.n_cut];
    let horizon = (plan.t_tilde * 1.25).max(cfg.s + 1.0);
    let trace = scan_trace(energies, 0.0, horizon, cfg.trace_samples.max(2));
    let body = json!({
        "plan": to_json(&plan),
        "t_star": inv.t_star,
        "checked_states": measured.len(),
        "worst_distance": worst,
        "distances": measured,
    });
    Ok(Outcome::new(command, seed, failures, body)
        .with("plan.json", pretty(&plan))
        .with("trace.csv", two_column_csv(("t", "objective"), trace)))
}

// ---------------------------------------------------------------- trotter / commutator

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductConfig {
    pub system: SystemConfig,
    pub k: usize,
    pub l: usize,
    pub t: f64,
    pub ns: Vec<usize>,
    pub state: StateConfig,
    /// Error bound at the largest `n`.
    pub max_error: Option<f64>,
    /// Require `error(next n) <= error(n) / ratio` down the list.
    pub min_ratio: Option<f64>,
    #[serde(default = "exact_inverter")]
    pub inverter: InverterConfig,
    pub seed: Option<u64>,
}

fn exact_inverter() -> InverterConfig {
    InverterConfig::Exact
}

struct ProductSetup {
    gens: GeneratorSet,
    psi: StateVector,
    seed: Option<u64>,
    sampler: Sampler,
}

fn product_setup(cfg: &ProductConfig, seed: Option<u64>) -> Result<ProductSetup, ExperimentError> {
    let seed = seed.or(cfg.seed);
    let mut sampler = Sampler::new(seed);
    let gens = cfg.system.generators("/system")?;
    for (v, at) in [(cfg.k, "/k"), (cfg.l, "/l")] {
        if v >= gens.len() {
            return Err(config_err(at, format!("only {} hamiltonians", gens.len())));
        }
    }
    if !(cfg.t >= 0.0 && cfg.t.is_finite()) {
        return Err(config_err("/t", "must be non-negative"));
    }
    if cfg.ns.is_empty() {
        return Err(config_err("/ns", "at least one n is required"));
    }
    if let Some(i) = cfg.ns.iter().position(|&n| n == 0) {
        return Err(config_err(format!("/ns/{i}"), "n must be positive"));
    }
    let psi = build_state(&cfg.state, gens.spec(), &mut sampler, "/state")?;
    Ok(ProductSetup { gens, psi, seed, sampler })
}

fn convergence_checks(cfg: &ProductConfig, rows: &[(usize, f64, f64)], failures: &mut Vec<String>) {
    if let (Some(bound), Some(last)) = (cfg.max_error, rows.last()) {
        if last.1 >= bound {
            failures.push(format!("error {:e} at n = {} exceeds {bound:e}", last.1, last.0));
        }
    }
    if let Some(ratio) = cfg.min_ratio {
        for w in rows.windows(2) {
            if w[1].1 > w[0].1 / ratio {
                failures.push(format!("error({}) = {:e} > error({}) / {ratio}", w[1].0, w[1].1, w[0].0));
            }
        }
    }
}

fn convergence_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("n,error,fidelity\n");
    for (n, e, f) in rows {
        writeln!(out, "{n},{e:?},{f:?}").unwrap();
    }
    out
}

fn trotter(cfg: ProductConfig, seed: Option<u64>) -> Result<Outcome, ExperimentError> {
    let ProductSetup { gens, psi, seed, .. } = product_setup(&cfg, seed)?;
    let target = oracle_state(&(gens.skew(cfg.k)? + gens.skew(cfg.l)?), cfg.t, &psi)?;
    let mut rows = Vec::new();
    let mut last = ControlSequence::default();
    for &n in &cfg.ns {
        let seq = trotter_sequence(cfg.k, cfg.l, cfg.t, n);
        let out = crate::propagator::evolve(&seq, &psi, &gens)?;
        rows.push((n, out.distance(&target), out.fidelity(&target)));
        last = seq;
    }
    let mut failures = Vec::new();
    convergence_checks(&cfg, &rows, &mut failures);
    let body = json!({ "rows": rows.iter().map(|r| json!({"n": r.0, "error": r.1, "fidelity": r.2})).collect::<Vec<_>>() });
    Ok(Outcome::new("trotter", seed, failures, body)
        .with("convergence.csv", convergence_csv(&rows))
        .with("sequence.json", last.to_json().into_bytes()))
}

fn commutator_cmd(cfg: ProductConfig, seed: Option<u64>) -> Result<Outcome, ExperimentError> {
    let ProductSetup { gens, psi, seed, mut sampler } = product_setup(&cfg, seed)?;
    let choice = cfg.inverter.build(gens.spec(), &mut sampler, "/inverter")?;
    let inverter = choice.build();
    let g = commutator(&gens.skew(cfg.k)?, &gens.skew(cfg.l)?);
    let target = oracle_state(&g, cfg.t * cfg.t, &psi)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    let mut last = None;
    for &n in &cfg.ns {
        let word = commutator_word(cfg.k, cfg.l, cfg.t, n);
        let r = realize(&word, &psi, &gens, inverter.as_ref())?;
        rows.push((n, r.final_state.distance(&target), r.final_state.fidelity(&target)));
        for p in r.plans.iter().filter(|p| !p.certified()) {
            failures.push(format!("n = {n}: uncertified plan with N = {} and T = {}", p.n_cut, p.t_tilde));
        }
        details.push(json!({
            "n": n,
            "physical": r.sequence.is_physical(),
            "segments": r.sequence.len(),
            "inversions": r.inversions,
            "inversion_budget": r.inversion_budget,
            "plans": to_json(&r.plans),
        }));
        last = Some(r.sequence);
    }
    convergence_checks(&cfg, &rows, &mut failures);
    let body = json!({
        "inverter": inverter.name(),
        "rows": rows.iter().map(|r| json!({"n": r.0, "error": r.1, "fidelity": r.2})).collect::<Vec<_>>(),
        "realizations": details,
    });
    let mut out = Outcome::new("commutator", seed, failures, body).with("convergence.csv", convergence_csv(&rows));
    if let Some(seq) = last {
        out = out.with("sequence.json", seq.to_json().into_bytes());
    }
    Ok(out)
}

// ---------------------------------------------------------------- compile / chain-demo

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileConfig {
    pub system: SystemConfig,
    pub targets: Vec<Target>,
    pub eps: f64,
    #[serde(default = "default_budget")]
    pub n_budget: usize,
    #[serde(default = "exact_inverter")]
    pub inverter: InverterConfig,
    pub initial: StateConfig,
    /// Further states the sequences must also map correctly.
    #[serde(default)]
    pub extra_states: Vec<StateConfig>,
    pub seed: Option<u64>,
}

fn default_budget() -> usize {
    1024
}

fn check_targets(targets: &[Target], count: usize) -> Result<(), ExperimentError> {
    if targets.is_empty() {
        return Err(config_err("/targets", "at least one target is required"));
    }
    for (i, t) in targets.iter().enumerate() {
        t.expr.validate(count).map_err(|e| config_err(format!("/targets/{i}/expr"), e.to_string()))?;
        if !(t.t >= 0.0 && t.t.is_finite()) {
            return Err(config_err(format!("/targets/{i}/t"), "must be non-negative"));
        }
        if targets[..i].iter().any(|o| o.name == t.name) {
            return Err(config_err(format!("/targets/{i}/name"), format!("duplicate target name `{}`", t.name)));
        }
        if t.name.is_empty() || t.name.contains(['/', '\\']) || t.name.starts_with('.') {
            return Err(config_err(format!("/targets/{i}/name"), "names must be non-empty plain file names"));
        }
    }
    Ok(())
}

fn report_outcome(command: &str, seed: Option<u64>, report: &Report, extra: Value) -> Outcome {
    let failures = report
        .entries
        .iter()
        .filter(|e| !e.ok)
        .map(|e| format!("{}: {}", e.name, e.error.clone().unwrap_or_else(|| format!("distance {:e}", e.distance))))
        .collect();
    let body = json!({ "report": to_json(report), "extra": extra });
    let mut out = Outcome::new(command, seed, failures, body).with("summary.csv", report.summary_csv());
    for e in &report.entries {
        if let Some(seq) = &e.sequence {
            out = out.with(format!("sequences/{}.json", e.name), seq.to_json().into_bytes());
        }
    }
    out
}

fn compile(cfg: CompileConfig, seed: Option<u64>) -> Result<Outcome, ExperimentError> {
    let seed = seed.or(cfg.seed);
    let mut sampler = Sampler::new(seed);
    positive(cfg.eps, "/eps")?;
    if cfg.n_budget == 0 {
        return Err(config_err("/n_budget", "must be positive"));
    }
    let gens = cfg.system.generators("/system")?;
    check_targets(&cfg.targets, gens.len())?;
    let psi0 = build_state(&cfg.initial, gens.spec(), &mut sampler, "/initial")?;
    let extra = cfg
        .extra_states
        .iter()
        .enumerate()
        .map(|(i, s)| build_state(s, gens.spec(), &mut sampler, &format!("/extra_states/{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let inverter = cfg.inverter.build(gens.spec(), &mut sampler, "/inverter")?;
    let options = CompileOptions { eps: cfg.eps, n_budget: cfg.n_budget, inverter };
    let report = reachability_report(&gens, &psi0, &extra, &cfg.targets, &options);
    Ok(report_outcome("compile", seed, &report, Value::Null))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDemoConfig {
    pub chain: ChainSpec,
    pub dim: usize,
    #[serde(default = "demo_buffer")]
    pub buffer: usize,
    pub targets: Vec<Target>,
    pub eps: f64,
    #[serde(default = "default_budget")]
    pub n_budget: usize,
    #[serde(default = "exact_inverter")]
    pub inverter: InverterConfig,
    /// Also run the symbolic propagation check with these caps.
    pub closure: Option<ClosureOptions>,
    pub seed: Option<u64>,
}

fn demo_buffer() -> usize {
    2
}

fn chain_demo_cmd(cfg: ChainDemoConfig, seed: Option<u64>) -> Result<Outcome, ExperimentError> {
    let seed = seed.or(cfg.seed);
    let mut sampler = Sampler::new(seed);
    cfg.chain.validate().map_err(|e| config_err("/chain", e.to_string()))?;
    positive(cfg.eps, "/eps")?;
    let truncation = TruncationSpec::uniform(cfg.chain.n_modes, cfg.dim, cfg.buffer)
        .map_err(|e| config_err("/dim", e.to_string()))?;
    let inverter = cfg.inverter.build(&truncation, &mut sampler, "/inverter")?;
    let options = CompileOptions { eps: cfg.eps, n_budget: cfg.n_budget, inverter };
    let count = 1 + cfg.chain.control_sites.len()
        * cfg.chain.controls.iter().filter(|&&(a, b)| a + b > 0 && a + b <= cfg.chain.control_degree_cap).count();
    check_targets(&cfg.targets, count)?;
    let (gens, report) = chain_demo(&cfg.chain, cfg.dim, cfg.buffer, &cfg.targets, &options)?;
    let psi0 = StateVector::fock(gens.spec(), &vec![0; cfg.chain.n_modes]);
    let mut occupations = Vec::new();
    for e in &report.entries {
        if let Some(seq) = &e.sequence {
            let out = crate::propagator::evolve(seq, &psi0, &gens)?;
            let occ: Vec<f64> = (0..cfg.chain.n_modes).map(|m| mode_occupation(&out, gens.spec(), m)).collect();
            occupations.push(json!({"target": e.name, "occupation": occ}));
        }
    }
    let controllability = match &cfg.closure {
        Some(opts) => to_json(&chain_controllability(&cfg.chain, *opts)?),
        None => Value::Null,
    };
    let labels: Vec<String> =
        (0..gens.len()).map(|k| gens.generator(k).map(|g| g.label.clone())).collect::<Result<_, _>>()?;
    let extra = json!({ "generators": labels, "occupations": occupations, "controllability": controllability });
    Ok(report_outcome("chain-demo", seed, &report, extra))
}
