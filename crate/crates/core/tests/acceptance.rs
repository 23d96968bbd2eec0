//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::cell::RefCell;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bosonic_control::chain::{
    chain_controllability, chain_demo, mode_occupation, truncated_propagation_check, ChainSpec,
};
use bosonic_control::fock::{represent, StateVector, TruncationSpec};
use bosonic_control::propagator::{
    commutator_sequence, trotter_convergence, ExactInverter, GeneratorSet, PropagatorError, RecurrenceInverter,
};
use bosonic_control::recurrence::{
    find_recurrence_time, invert, recurrence_distance, tail_cut_energy, InversionMode, RecurrencePlan, SearchOptions,
    SpectralData,
};
use bosonic_control::synth::{CompileOptions, GeneratorExpr, InverterChoice, Target};
use bosonic_control::weyl::{lie_closure, ClosureOptions, PolyOp, Verdict};

use common::{interior_block, interior_commutator, nearby_state, random_poly};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, f64, fn() -> Outcome);

thread_local! {
    static PLANS: RefCell<Vec<(&'static str, RecurrencePlan)>> = const { RefCell::new(Vec::new()) };
}

fn record_plan(source: &'static str, plan: &RecurrencePlan) {
    PLANS.with(|p| p.borrow_mut().push((source, plan.clone())));
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn harmonic() -> PolyOp {
    (&PolyOp::monomial(1, 0, 2, 0) + &PolyOp::monomial(1, 0, 0, 2)).scale_real(0.5)
}

fn ccr_and_symbolic_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let i1 = |m| PolyOp::constant(m, C64::new(0.0, 1.0));
    for m in [1, 2] {
        for a in 0..m {
            for b in 0..m {
                let br = PolyOp::q(m, a).bracket(&PolyOp::p(m, b)).unwrap();
                let expected = if a == b { i1(m) } else { PolyOp::zero(m) };
                ensure(br.max_abs_diff(&expected) == 0.0, || format!("[q{a}, p{b}] = {br}"))?;
            }
        }
    }
    let polys: Vec<PolyOp> = (0..200).map(|k| random_poly(&mut rng, 1 + k % 2, 4, 4)).collect();
    let groups: Vec<Vec<&PolyOp>> = (1..=2).map(|m| polys.iter().filter(|p| p.mode_count() == m).collect()).collect();
    let (mut anti, mut jacobi, mut matrix) = (0.0f64, 0.0f64, 0.0f64);
    for g in &groups {
        let n = g.len();
        for k in 0..n {
            let (a, b, c) = (g[k], g[(k + 1) % n], g[(k + 2) % n]);
            let ab = a.bracket(b).unwrap();
            let scale = 1.0 + a.norm() * b.norm();
            anti = anti.max(ab.max_abs_diff(&b.bracket(a).unwrap().scale_real(-1.0)) / scale);
            let j = &(&a.bracket(&b.bracket(c).unwrap()).unwrap() + &b.bracket(&c.bracket(a).unwrap()).unwrap())
                + &c.bracket(&a.bracket(b).unwrap()).unwrap();
            jacobi = jacobi.max(j.norm() / (1.0 + a.norm() * b.norm() * c.norm()));

            let spec = TruncationSpec::uniform(a.mode_count(), 24, 8).unwrap();
            let ra = represent(a, &spec).unwrap().into_matrix();
            let rb = represent(b, &spec).unwrap().into_matrix();
            let sym = interior_block(represent(&ab, &spec).unwrap().matrix(), &spec);
            let num = interior_commutator(&ra, &rb, &spec);
            matrix = matrix.max((sym - num).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    let detail = format!("antisymmetry {anti:.1e}, Jacobi {jacobi:.1e}, matrix vs symbolic {matrix:.1e} (D=24 interior)");
    ensure(anti < 1e-12 && jacobi < 1e-10 && matrix < 1e-8, || detail.clone())?;
    Ok(detail)
}

fn qp_generators() -> GeneratorSet {
    let spec = TruncationSpec::uniform(1, 32, 8).unwrap();
    GeneratorSet::from_polys(&[PolyOp::q(1, 0), PolyOp::p(1, 0)], &spec).unwrap()
}

fn trotter() -> Outcome {
    let gens = qp_generators();
    let psi = StateVector::fock(gens.spec(), &[0]);
    let rows = trotter_convergence(&gens, 0, 1, 0.7, &[16, 64, 256], &psi).map_err(|e| e.to_string())?;
    let e: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let detail = format!("error(16) {:.3e}, error(64) {:.3e}, error(256) {:.3e}", e[0], e[1], e[2]);
    ensure(e[1] <= e[0] / 3.0 && e[2] <= e[1] / 3.0 && e[2] < 1e-3, || detail.clone())?;
    Ok(detail)
}

fn group_commutator() -> Outcome {
    let gens = qp_generators();
    let psi = StateVector::fock(gens.spec(), &[0]);
    let (t, n, delta) = (0.5, 32, 1e-5);
    let target = psi.scale(C64::from_polar(1.0, -t * t));
    let exact = commutator_sequence(0, 1, t, n, &ExactInverter, &gens, &psi).map_err(|e| e.to_string())?;
    let f_exact = exact.final_state.fidelity(&target);
    ensure(f_exact > 0.999, || format!("exact-inverse fidelity {f_exact:.6} at n = {n}"))?;

    let search = SearchOptions::with_horizon(5e4);
    let inverter = RecurrenceInverter::tracking(delta, search);
    match commutator_sequence(0, 1, t, n, &inverter, &gens, &psi) {
        Ok(rec) => {
            for p in &rec.plans {
                record_plan("group commutator", p);
            }
            let f_rec = rec.final_state.fidelity(&target);
            let degradation = (f_exact - f_rec).abs();
            let bound = 4.0 * (n * n) as f64 * delta;
            let detail = format!(
                "fidelity exact {f_exact:.6}, recurrence {f_rec:.6}, degradation {degradation:.2e} <= {bound:.2e}"
            );
            ensure(degradation <= bound && rec.sequence.is_physical(), || detail.clone())?;
            Ok(detail)
        }
        Err(PropagatorError::Recurrence(e)) => Err(format!(
            "exact-inverse fidelity {f_exact:.6}; recurrence inverter at delta = {delta:e} failed: {e}"
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn recurrence_certificate() -> Outcome {
    let spec = TruncationSpec::uniform(1, 32, 8).unwrap();
    let sd = SpectralData::from_rep(&represent(&harmonic(), &spec).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let psi = StateVector::random_supported(&spec, 24, &mut rng);
    let c = sd.overlaps(&psi).unwrap();
    let d4pi = recurrence_distance(&c, sd.eigenvalues(), 4.0 * PI).unwrap();
    let inv = invert(&sd, 1.0, 1e-7, &InversionMode::Pointwise(psi.clone()), SearchOptions::default())
        .map_err(|e| e.to_string())?;
    record_plan("pointwise", &inv.plan);
    let measured = sd.propagate(&psi, -1.0).distance(&sd.propagate(&psi, inv.t_star));
    let detail = format!(
        "distance(4 pi) {d4pi:.1e}, t* = {:.9} (4 pi - 1 = {:.9}), measured {measured:.1e}",
        inv.t_star,
        4.0 * PI - 1.0
    );
    ensure(d4pi < 1e-6 && measured < 1e-6 && inv.plan.certified(), || detail.clone())?;
    Ok(detail)
}

/// Random state with `<H> < m` for a diagonal Hamiltonian, with a thermal-like
/// envelope so that every level can carry weight.
fn energy_bounded_state<R: Rng>(rng: &mut R, energies: &[f64], m: f64) -> StateVector {
    let spec = TruncationSpec::uniform(1, energies.len(), 0).unwrap();
    loop {
        let temp = rng.random_range(0.2..3.0);
        let amps = StateVector::random_supported(&spec, energies.len(), rng).into_amplitudes();
        let amps = amps.map_with_location(|n, _, a| a * (-energies[n] / (2.0 * temp)).exp());
        let psi = StateVector::normalized(amps).unwrap();
        let mean: f64 = psi.amplitudes().iter().zip(energies).map(|(a, e)| a.norm_sqr() * e).sum();
        if mean < m {
            return psi;
        }
    }
}

fn energy_bound_certificate() -> Outcome {
    let energies: Vec<f64> = (0..64).map(|n| n as f64 + 0.05 * (n * n) as f64).collect();
    let (m, delta) = (3.0, 0.2);
    let sd = SpectralData::from_diagonal(&energies).unwrap();
    let n_cut = tail_cut_energy(sd.eigenvalues(), sd.extent(), m, delta).map_err(|e| e.to_string())?;
    // A nontrivial recurrence: search from one unit of time onwards.
    let t_tilde = find_recurrence_time(&sd.eigenvalues()[..=n_cut], delta, 1.0, SearchOptions::default())
        .map_err(|e| e.to_string())?;
    let inv = invert(&sd, 1.0, delta, &InversionMode::EnergyBound(m), SearchOptions::default())
        .map_err(|e| e.to_string())?;
    record_plan("energy bound", &inv.plan);
    let plan = &inv.plan;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let psi = energy_bounded_state(&mut rng, &energies, m);
        worst = worst.max(psi.distance(&sd.propagate(&psi, t_tilde)));
    }
    let detail = format!(
        "threshold 8M/delta^2 = {:.0}, N = {n_cut}, T = {t_tilde:.6} (40 pi = {:.6}), worst of 100 states {worst:.2e}",
        8.0 * m / (delta * delta),
        40.0 * PI
    );
    ensure(worst < delta && plan.certified() && n_cut == plan.n_cut && t_tilde == plan.t_tilde, || detail.clone())?;
    Ok(detail)
}

fn finite_net_uniformity() -> Outcome {
    let eps = 0.3;
    let delta = eps / 3.0;
    let s = 1.0;
    let spec = TruncationSpec::uniform(1, 32, 8).unwrap();
    let sd = SpectralData::from_rep(&represent(&harmonic(), &spec).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net: Vec<StateVector> = (0..5).map(|_| StateVector::random_supported(&spec, 24, &mut rng)).collect();
    let inv = invert(&sd, s, delta, &InversionMode::FiniteNet(net.clone()), SearchOptions::default())
        .map_err(|e| e.to_string())?;
    record_plan("finite net", &inv.plan);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let center = &net[k % net.len()];
        let direction = StateVector::random_supported(&spec, 24, &mut rng);
        let psi = nearby_state(&mut rng, center, &direction, eps / 3.0);
        worst = worst.max(sd.propagate(&psi, -s).distance(&sd.propagate(&psi, inv.t_star)));
    }
    let detail = format!("N = {}, T = {:.6}, worst of 50 states {worst:.2e} < eps = {eps}", inv.plan.n_cut, inv.plan.t_tilde);
    ensure(worst < eps && inv.plan.certified(), || detail.clone())?;
    Ok(detail)
}

fn decomposition_identity() -> Outcome {
    let plans = PLANS.with(|p| p.borrow().clone());
    ensure(!plans.is_empty(), || "no successful plans to check".into())?;
    let mut worst = 0.0f64;
    for (source, p) in &plans {
        let lhs = p.decomposition();
        ensure(lhs < p.delta * p.delta, || format!("{source}: 2 sum + 4 tail = {lhs:e} >= delta^2 = {:e}", p.delta * p.delta))?;
        worst = worst.max(lhs / (p.delta * p.delta));
    }
    Ok(format!("{} plans, largest (2 sum + 4 tail) / delta^2 = {worst:.2e}", plans.len()))
}

fn lie_closures() -> Outcome {
    let opts = ClosureOptions::default();
    let gen = |p: PolyOp| p.times_i();
    let cases = [
        ("{iq, ip}", vec![gen(PolyOp::q(1, 0)), gen(PolyOp::p(1, 0))], 3),
        ("{iq^2, ip^2}", vec![gen(PolyOp::monomial(1, 0, 2, 0)), gen(PolyOp::monomial(1, 0, 0, 2))], 3),
        (
            "{iq^2, ip^2, iq}",
            vec![gen(PolyOp::monomial(1, 0, 2, 0)), gen(PolyOp::monomial(1, 0, 0, 2)), gen(PolyOp::q(1, 0))],
            6,
        ),
    ];
    let mut parts = Vec::new();
    for (name, gens, dim) in cases {
        let lb = lie_closure(&gens, opts).map_err(|e| e.to_string())?;
        ensure(lb.dim() == dim && lb.saturated(), || format!("{name}: dim {} saturated {}", lb.dim(), lb.saturated()))?;
        parts.push(format!("{name} dim {dim}"));
    }
    let cubic = lie_closure(&[gen(PolyOp::monomial(1, 0, 3, 0)), gen(PolyOp::monomial(1, 0, 0, 2))], opts)
        .map_err(|e| e.to_string())?;
    ensure(!cubic.saturated() && cubic.degree_cap_hit(), || "cubic closure reported saturated".into())?;
    parts.push(format!("{{iq^3, ip^2}} unsaturated at cap 6 (dim {})", cubic.dim()));
    Ok(parts.join(", "))
}

fn chain_propagation() -> Outcome {
    let options = ClosureOptions::with_caps(4, 2048);
    let coupled = chain_controllability(&ChainSpec::open_chain(3, 1.0), options).map_err(|e| e.to_string())?;
    let edges: Vec<String> =
        coupled.edges.iter().map(|e| format!("{}->{} {:?} (dim {})", e.from + 1, e.to + 1, e.verdict, e.closure_dim)).collect();
    ensure(
        coupled.verdict == Verdict::Propagates && coupled.edges.iter().all(|e| e.verdict == Verdict::Propagates),
        || format!("omega = 1: {}", edges.join(", ")),
    )?;
    let decoupled = chain_controllability(&ChainSpec::open_chain(3, 0.0), options).map_err(|e| e.to_string())?;
    ensure(decoupled.verdict == Verdict::Fails, || format!("omega = 0 verdict {:?}", decoupled.verdict))?;

    let small = TruncationSpec::uniform(2, 4, 0).unwrap();
    let (m1, has1) =
        truncated_propagation_check(&ChainSpec::open_chain(2, 1.0), (0, 1), &small, 4).map_err(|e| e.to_string())?;
    let (m0, has0) =
        truncated_propagation_check(&ChainSpec::open_chain(2, 0.0), (0, 1), &small, 4).map_err(|e| e.to_string())?;
    let detail = format!(
        "omega = 1: {}; omega = 0: {:?}; D=4 matrix closure contains i q2: omega=1 {has1} (dim {}), omega=0 {has0} (dim {})",
        edges.join(", "),
        decoupled.verdict,
        m1.dim(),
        m0.dim()
    );
    ensure(has1 && !has0, || detail.clone())?;
    Ok(detail)
}

fn chain_demo_end_to_end() -> Outcome {
    let spec = ChainSpec::open_chain(2, 1.0);
    // Generators: drift, drift + q1, drift + p1, drift + q1^2, drift + q1^3.
    let target = Target::new("drift+q1 + drift+p1", GeneratorExpr::sum(GeneratorExpr::leaf(1), GeneratorExpr::leaf(2)), 0.5);
    let options = CompileOptions { eps: 0.05, n_budget: 1024, inverter: InverterChoice::Exact };
    let (gens, report) = chain_demo(&spec, 8, 2, std::slice::from_ref(&target), &options).map_err(|e| e.to_string())?;
    let e = &report.entries[0];
    let seq = e.sequence.as_ref().ok_or("no sequence emitted")?;
    let psi0 = StateVector::fock(gens.spec(), &[0, 0]);
    let out = bosonic_control::propagator::evolve(seq, &psi0, &gens).map_err(|e| e.to_string())?;
    let n2 = mode_occupation(&out, gens.spec(), 1);
    let detail = format!(
        "n = {}, fidelity {:.5}, {} segments, min duration {:?}, physical {}, <n_2> after {:.3}",
        e.n, e.fidelity, e.segments, e.min_duration, e.physical, n2
    );
    ensure(
        e.ok && e.fidelity >= 0.99 && e.physical && seq.segments().iter().all(|s| s.t >= 0.0) && n2 > 1e-3,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "CCR and symbolic soundness", 30.0, ccr_and_symbolic_soundness),
        (2, "Trotter product formula", 10.0, trotter),
        (3, "group commutator, scalar bracket", 60.0, group_commutator),
        (4, "recurrence certificate", 5.0, recurrence_certificate),
        (5, "energy-bound certificate", 60.0, energy_bound_certificate),
        (6, "finite-net uniformity", 60.0, finite_net_uniformity),
        (7, "delta decomposition", 60.0, decomposition_identity),
        (8, "Lie closures", 10.0, lie_closures),
        (9, "chain propagation", 120.0, chain_propagation),
        (10, "end-to-end chain demo", 300.0, chain_demo_end_to_end),
    ];
    let mut failed = 0;
    for (id, title, limit, run) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match result {
            Ok(d) if secs < limit => (true, d),
            Ok(d) => (false, format!("{d}; runtime over the {limit} s limit")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {id:>2} [{}] {title}: {detail} ({secs:.2} s)", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
