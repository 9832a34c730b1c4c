//! Acceptance suite: every headline claim of the simulator, one test per
//! criterion, each printing a pass line with the observed worst case.
//!
//! Shipped scenarios are loaded from `scenarios/` at the repository root and
//! each runs exactly once (shared fixtures); the analytic reference values
//! come from the independently implemented closed forms in
//! `lembas::oracles`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use lembas::dynamics::{propagate_closed, run, step_rk4, EvolutionSpec, Integrator};
use lembas::entropy::{entropy_decomposition, reversible_thermal_form};
use lembas::flux::{
    effective_hamiltonian, extract_correlations, heat_flux, pinch_split, work_flux,
};
use lembas::models::{
    build_model, initial_state, number_op, thermal_qubit_bath, ModeState, ModelKind, ModelParams,
    SpinState,
};
use lembas::operator::{expectation, kron, max_norm, partial_trace, trace_product, Operator, Side};
use lembas::oracles::{coherent_example_fluxes, AppendixAData, CoherentExampleParams};
use lembas::scenario::{parse_config, realize_config, run_scenario, ScenarioRun, Verdict};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load_config(name: &str) -> lembas::scenario::ScenarioConfig {
    let path = scenario_dir().join(format!("{name}.scenario"));
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    let mut cfg = parse_config(&text).unwrap_or_else(|errs| {
        panic!(
            "{name}.scenario invalid:\n{}",
            errs.iter()
                .map(|e| format!("  {e}"))
                .collect::<Vec<_>>()
                .join("\n")
        )
    });
    cfg.name = name.to_string();
    cfg
}

const SHIPPED: [&str; 8] = [
    "dispersive",
    "displaced_coherent",
    "jc_resonant",
    "fig2",
    "open_case1",
    "open_case2",
    "two_baths",
    "appendix_a",
];

/// Run a shipped scenario once and cache the result for the whole suite.
fn shipped(name: &str) -> &'static ScenarioRun {
    static CACHE: OnceLock<Mutex<HashMap<&'static str, &'static ScenarioRun>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    if let Some(run) = map.get(name) {
        return run;
    }
    let key = SHIPPED
        .iter()
        .find(|&&n| n == name)
        .expect("shipped scenario name");
    let cfg = load_config(name);
    let run = Box::leak(Box::new(
        run_scenario(&cfg).unwrap_or_else(|e| panic!("{name} failed: {e}")),
    ));
    map.insert(key, run);
    run
}

fn max_flux_over(run: &ScenarioRun, f: impl Fn(&lembas::flux::FluxSample) -> f64) -> f64 {
    run.trajectory
        .samples
        .iter()
        .map(f)
        .fold(0.0_f64, f64::max)
}

// -------------------------------------------------------------------------

#[test]
fn criterion_01_fully_commuting_fluxes_vanish() {
    let run = shipped("dispersive");
    let scale = run.trajectory.h_norm;
    let worst = max_flux_over(run, |s| {
        s.w1.abs().max(s.w2.abs()).max(s.q1.abs()).max(s.q2.abs())
    });
    assert!(
        worst <= 1e-10 * scale,
        "max flux {worst:.3e} above 1e-10*||H|| = {:.3e}",
        1e-10 * scale
    );
    let runtime = run.summary.duration_seconds;
    assert!(runtime < 1.0, "dispersive run took {runtime:.2}s (budget 1s)");
    println!(
        "criterion 01 (fully commuting zero fluxes): PASS — max flux {worst:.2e} <= {:.2e}, runtime {runtime:.2}s < 1s",
        1e-10 * scale
    );
}

#[test]
fn criterion_02_partially_commuting_sum_rule() {
    let run = shipped("displaced_coherent");
    let scale = run.trajectory.h_norm;
    let worst_sum = max_flux_over(run, |s| (s.w1 + s.w2).abs());
    let worst_q1 = max_flux_over(run, |s| s.q1.abs());
    assert!(worst_sum <= 1e-8 * scale, "|W1+W2| = {worst_sum:.3e}");
    assert!(worst_q1 <= 1e-8 * scale, "|Q1| = {worst_q1:.3e}");
    println!(
        "criterion 02 (work sum rule + Q1 = 0): PASS — |W1+W2| {worst_sum:.2e}, |Q1| {worst_q1:.2e} <= {:.2e}",
        1e-8 * scale
    );
}

#[test]
fn criterion_03_coherent_state_analytic_match() {
    let started = std::time::Instant::now();
    let nu = 1.0;
    let n_fock = 40;
    let t_final = 2.0 * std::f64::consts::PI;
    let n_samples = 600usize;
    let mut worst_rel = 0.0_f64;
    let mut q2_by_case: HashMap<(u32, u32), Vec<f64>> = HashMap::new();

    for (ci, &c) in [0.0, 0.25, 0.5].iter().enumerate() {
        for (gi, &g) in [0.1, 0.3].iter().enumerate() {
            for &x0 in &[0.0, 1.0] {
                let p = ModelParams {
                    omega0: 1.0,
                    nu,
                    g,
                    n_fock,
                    c,
                    x0,
                    ..Default::default()
                };
                let sys = build_model(ModelKind::Displaced, &p).unwrap();
                let st = initial_state(SpinState::Mixture(c), ModeState::Coherent(x0), &p)
                    .unwrap();
                assert!(st.truncation_leakage < 1e-8);
                let spec = EvolutionSpec {
                    sys,
                    baths: vec![],
                    t_final,
                    dt: t_final / n_samples as f64,
                    sample_every: 1,
                    integrator: Integrator::ExactExp,
                };
                let traj = run(&spec, &st.rho).unwrap();
                let oracle = CoherentExampleParams { c, g, nu, x0 };
                let amp_w = 2.0 * g * (1.0 - 2.0 * c).abs() * (nu * x0 + (1.0 - 2.0 * c) * g).abs();
                let amp_q = 8.0 * c * (1.0 - c) * g * g;
                let floor = 1e-8 * traj.h_norm;
                for s in &traj.samples {
                    let (w1_ref, _, q2_ref) = coherent_example_fluxes(&oracle, s.t);
                    let w_err = (s.w1 - w1_ref).abs();
                    let q_err = (s.q2 - q2_ref).abs();
                    assert!(
                        w_err <= 0.01 * amp_w + floor,
                        "c={c} g={g} x0={x0} t={}: W1 {} vs {}",
                        s.t,
                        s.w1,
                        w1_ref
                    );
                    assert!(
                        q_err <= 0.01 * amp_q + floor,
                        "c={c} g={g} x0={x0} t={}: Q2 {} vs {}",
                        s.t,
                        s.q2,
                        q2_ref
                    );
                    if amp_w > 0.0 {
                        worst_rel = worst_rel.max(w_err / amp_w);
                    }
                    if amp_q > 0.0 {
                        worst_rel = worst_rel.max(q_err / amp_q);
                    }
                }
                q2_by_case
                    .entry((ci as u32 * 10 + gi as u32, (x0 as u32)))
                    .or_insert_with(|| traj.samples.iter().map(|s| s.q2).collect());
            }
        }
    }

    // Q2 independence from the initial displacement
    for (ci, &c) in [0.0, 0.25, 0.5].iter().enumerate() {
        for (gi, &g) in [0.1, 0.3].iter().enumerate() {
            let key = ci as u32 * 10 + gi as u32;
            let a = &q2_by_case[&(key, 0)];
            let b = &q2_by_case[&(key, 1)];
            let amp_q = 8.0 * c * (1.0 - c) * g * g;
            let worst = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max);
            assert!(
                worst <= 0.01 * amp_q + 1e-9,
                "c={c} g={g}: Q2 depends on x0 by {worst:.3e}"
            );
        }
    }
    let runtime = started.elapsed().as_secs_f64();
    assert!(runtime < 30.0, "sweep took {runtime:.1}s (budget 30s)");
    println!(
        "criterion 03 (coherent-state analytic fluxes): PASS — worst envelope error {:.2}%, x0-independence held, runtime {runtime:.1}s < 30s",
        100.0 * worst_rel
    );
}

#[test]
fn criterion_04_eigenstate_criterion() {
    let p = ModelParams {
        omega0: 1.0,
        nu: 1.0,
        g: 0.3,
        n_fock: 40,
        c: 0.0,
        x0: 1.0,
        ..Default::default()
    };
    let sys = build_model(ModelKind::Displaced, &p).unwrap();
    let pure = initial_state(SpinState::Excited, ModeState::Coherent(1.0), &p).unwrap();
    let spec = EvolutionSpec {
        sys: sys.clone(),
        baths: vec![],
        t_final: 8.0,
        dt: 0.01,
        sample_every: 1,
        integrator: Integrator::ExactExp,
    };
    let traj = run(&spec, &pure.rho).unwrap();
    let worst_corr = max_flux_over_traj(&traj, |s| s.corr_norm);
    let worst_q2 = max_flux_over_traj(&traj, |s| s.q2.abs());
    assert!(worst_corr <= 1e-10, "corr_norm {worst_corr:.3e}");
    assert!(worst_q2 <= 1e-10, "q2 {worst_q2:.3e}");

    let mixed = initial_state(SpinState::Mixture(0.5), ModeState::Coherent(1.0), &p).unwrap();
    let spec = EvolutionSpec {
        sys,
        baths: vec![],
        t_final: 8.0,
        dt: 0.01,
        sample_every: 1,
        integrator: Integrator::ExactExp,
    };
    let traj_mixed = run(&spec, &mixed.rho).unwrap();
    let max_corr = max_flux_over_traj(&traj_mixed, |s| s.corr_norm);
    assert!(max_corr > 1e-3, "mixture built only {max_corr:.3e} correlations");
    println!(
        "criterion 04 (eigenstate criterion): PASS — eigenstate corr {worst_corr:.2e} / q2 {worst_q2:.2e} <= 1e-10, mixture corr {max_corr:.2e} > 1e-3"
    );
}

fn max_flux_over_traj(
    traj: &lembas::dynamics::Trajectory,
    f: impl Fn(&lembas::flux::FluxSample) -> f64,
) -> f64 {
    traj.samples.iter().map(f).fold(0.0_f64, f64::max)
}

#[test]
fn criterion_05_resonant_jc_conservation_pair() {
    let run = shipped("jc_resonant");
    let scale = run.trajectory.h_norm;
    let worst_w = max_flux_over(run, |s| (s.w1 + s.w2).abs());
    let worst_q = max_flux_over(run, |s| (s.q1 + s.q2).abs());
    assert!(worst_w <= 1e-8 * scale);
    assert!(worst_q <= 1e-8 * scale);
    println!(
        "criterion 05 (resonant JC conservation pair): PASS — |W1+W2| {worst_w:.2e}, |Q1+Q2| {worst_q:.2e} <= {:.2e}",
        1e-8 * scale
    );
}

#[test]
fn criterion_06_first_law_everywhere() {
    let mut report = Vec::new();
    for name in SHIPPED {
        let run = shipped(name);
        let residual = run.summary.max_first_law_residual;
        assert!(
            residual <= 1e-6,
            "{name}: first-law residual {residual:.3e} above 1e-6"
        );
        report.push(format!("{name} {residual:.1e}"));
    }
    println!(
        "criterion 06 (first law on all shipped scenarios): PASS — residuals {}",
        report.join(", ")
    );
}

#[test]
fn criterion_07_heat_flux_form_equivalence() {
    let mut worst = 0.0_f64;
    for name in SHIPPED {
        let run = shipped(name);
        let allowed = 1e-9 * run.trajectory.h_norm.max(1.0);
        let observed = run.trajectory.max_heat_form_discrepancy;
        assert!(
            observed <= allowed,
            "{name}: |Eq8-Eq9| = {observed:.3e} above {allowed:.3e}"
        );
        worst = worst.max(observed);
    }
    println!(
        "criterion 07 (heat-flux form equivalence): PASS — worst |Eq8-Eq9| {worst:.2e} across all scenarios"
    );
}

#[test]
fn criterion_08_open_system_structure() {
    // case 1: bath on the commuting partition keeps the work sum rule
    let case1 = shipped("open_case1");
    let scale1 = case1.trajectory.h_norm;
    let worst_sum = max_flux_over(case1, |s| (s.w1 + s.w2).abs());
    assert!(worst_sum <= 1e-8 * scale1, "case 1 |W1+W2| {worst_sum:.3e}");

    // case 2: bath on the non-commuting partition starves the other of heat
    let case2 = shipped("open_case2");
    let worst_q1 = max_flux_over(case2, |s| s.q1.abs());
    assert!(worst_q1 <= 1e-9, "case 2 |Q1| {worst_q1:.3e}");

    // fully commuting with one bath: Ẇ₂ = ⟨B₂⟩·Tr{A₁𝓛₁[ρ₁]}, all fluxes
    // vanish after thermalization
    let p = ModelParams {
        omega0: 1.0,
        nu: 1.0,
        g: 0.4,
        n_fock: 12,
        ..Default::default()
    };
    let sys = build_model(ModelKind::Dispersive, &p).unwrap();
    let gamma0 = 1.0;
    let bath = thermal_qubit_bath(1.0, 1.0, gamma0).unwrap();
    let st = initial_state(
        SpinState::Superposition {
            theta: 1.1,
            phi: 0.0,
        },
        ModeState::Thermal(1.0),
        &p,
    )
    .unwrap();

    // identity check along a manually driven trajectory through public ops
    let dt = 0.001;
    let mut rho = st.rho.clone();
    let mut worst_identity = 0.0_f64;
    let a_emb = kron(&lembas::models::pauli_z(), &Operator::identity(12));
    let b_op = number_op(12).scaled(num_complex::Complex64::new(0.4, 0.0));
    let b_emb = kron(&Operator::identity(2), &b_op);
    for step in 0..2000usize {
        if step % 100 == 0 {
            let rho_dot =
                lembas::dynamics::liouvillian(&sys, std::slice::from_ref(&bath), &rho).unwrap();
            let heff2 = effective_hamiltonian(&sys, &rho, Side::Two).unwrap();
            let split2 = pinch_split(&heff2, sys.local_hamiltonian(Side::Two)).unwrap();
            let w2 = work_flux(&sys, &rho, &rho_dot, Side::Two, &split2).unwrap();
            // [A⊗I, H] = 0 here, so Tr{(A⊗I)ρ̇} is exactly the bath-induced
            // relaxation rate of ⟨A₁⟩
            let a_dot = trace_product(a_emb.matrix(), rho_dot.matrix()).re;
            let b_mean = expectation(&b_emb, &rho).unwrap();
            worst_identity = worst_identity.max((w2 - b_mean * a_dot).abs());
        }
        rho = step_rk4(&sys, std::slice::from_ref(&bath), &rho, dt).unwrap();
    }
    assert!(
        worst_identity <= 1e-9,
        "W2 identity residual {worst_identity:.3e}"
    );

    // thermalization run: every flux below 1e-7 after 10/γ₀
    let spec = EvolutionSpec {
        sys,
        baths: vec![bath],
        t_final: 12.0 / gamma0,
        dt: 0.001,
        sample_every: 5,
        integrator: Integrator::Rk4,
    };
    let traj = run(&spec, &st.rho).unwrap();
    let settle = 10.0 / gamma0;
    let late_worst = traj
        .samples
        .iter()
        .filter(|s| s.t >= settle)
        .map(|s| {
            s.w1.abs()
                .max(s.w2.abs())
                .max(s.q1.abs())
                .max(s.q2.abs())
                .max(s.q1_bath.abs())
        })
        .fold(0.0_f64, f64::max);
    assert!(late_worst <= 1e-7, "late fluxes {late_worst:.3e}");

    println!(
        "criterion 08 (open-system structure): PASS — case1 |W1+W2| {worst_sum:.2e}, case2 |Q1| {worst_q1:.2e}, W2 identity {worst_identity:.2e}, thermalized fluxes {late_worst:.2e}"
    );
}

#[test]
fn criterion_09_entropy_decomposition() {
    // identity + positivity on every decomposition-bearing scenario;
    // the identity is asserted where it is exact (unitary joint evolution)
    let mut min_irr = f64::INFINITY;
    let mut worst_identity = 0.0_f64;
    for name in ["dispersive", "appendix_a", "fig2", "open_case1", "open_case2"] {
        let run = shipped(name);
        let records = run.entropy.as_ref().unwrap_or_else(|| {
            panic!("{name} should carry entropy records");
        });
        for r in records {
            assert!(
                r.s_irr >= -1e-10,
                "{name} t={}: entropy production {:.3e}",
                r.t,
                r.s_irr
            );
            min_irr = min_irr.min(r.s_irr);
        }
        if run.summary.entropy.as_ref().unwrap().identity_asserted {
            let residual = run.summary.entropy.as_ref().unwrap().max_identity_residual.unwrap();
            assert!(
                residual <= 1e-8,
                "{name}: decomposition identity residual {residual:.3e}"
            );
            worst_identity = worst_identity.max(residual);
        }
    }

    // thermal-initial-state form on fig2: ΔS^re = −β₂·Δ⟨H₂⟩ to 1e−8
    let fig2 = shipped("fig2");
    let cfg = load_config("fig2");
    let beta2 = match cfg.mode {
        lembas::scenario::ModeConfig::Thermal { k_t } => cfg.model.energy_unit / k_t,
        _ => panic!("fig2 mode should be thermal"),
    };
    let h2 = number_op(cfg.model.n_fock).scaled(num_complex::Complex64::new(
        cfg.model.nu / cfg.model.energy_unit,
        0.0,
    ));
    let thermal_series = reversible_thermal_form(&fig2.trajectory, beta2, &h2).unwrap();
    let records = fig2.entropy.as_ref().unwrap();
    let mut worst_thermal = 0.0_f64;
    for (r, th) in records.iter().zip(&thermal_series) {
        worst_thermal = worst_thermal.max((r.s_rev - th).abs());
    }
    assert!(worst_thermal <= 1e-8, "thermal form residual {worst_thermal:.3e}");

    // spot cross-check of the streamed records against the standalone
    // decomposition (literal relative-entropy route)
    let realized = realize_config(&cfg).unwrap();
    for &k in &[records.len() / 5, records.len() / 2, records.len() - 1] {
        let t = records[k].t;
        let rho_t = propagate_closed(&realized.sys, &realized.initial.rho, t).unwrap();
        let direct = entropy_decomposition(
            &rho_t,
            &fig2.trajectory.rho1_initial,
            &fig2.trajectory.rho2_initial,
            realized.sys.dims(),
        )
        .unwrap();
        assert!(direct.note.is_none());
        assert!(
            (direct.s_irr - records[k].s_irr).abs() <= 1e-8,
            "t={t}: direct {} vs streamed {}",
            direct.s_irr,
            records[k].s_irr
        );
        assert!((direct.s_rev - records[k].s_rev).abs() <= 1e-8);
    }

    println!(
        "criterion 09 (entropy decomposition): PASS — min ΔS_ir {min_irr:.2e} >= -1e-10, identity residual {worst_identity:.2e} <= 1e-8, thermal form {worst_thermal:.2e} <= 1e-8"
    );
}

#[test]
fn criterion_10_fig2_qualitative_reproduction() {
    let fig2 = shipped("fig2");
    let runtime = fig2.summary.duration_seconds;
    assert!(runtime < 120.0, "fig2 took {runtime:.1}s (budget 2min)");

    let n = fig2.trajectory.samples.len();
    let negative = fig2
        .trajectory
        .q1_cum
        .iter()
        .filter(|&&q| q <= 0.0)
        .count();
    let fraction = negative as f64 / n as f64;
    assert!(fraction >= 0.70, "Q1cum negative on only {fraction:.2} of samples");

    let records = fig2.entropy.as_ref().unwrap();
    let max_rev = records.iter().map(|r| r.s_rev).fold(f64::NEG_INFINITY, f64::max);
    assert!(max_rev <= 1e-10, "ΔS_re reaches {max_rev:.3e}");
    let min_irr = records.iter().map(|r| r.s_irr).fold(f64::INFINITY, f64::min);
    assert!(min_irr >= -1e-10);
    let has_negative_slope = records
        .windows(2)
        .any(|w| w[1].s_irr < w[0].s_irr - 1e-12);
    assert!(has_negative_slope, "ΔS_ir never decreases");

    println!(
        "criterion 10 (fig2 qualitative): PASS — Q1cum<=0 on {:.0}% of samples, max ΔS_re {max_rev:.2e} <= 0, ΔS_ir >= {min_irr:.2e} with negative-slope intervals, runtime {runtime:.1}s < 120s",
        100.0 * fraction
    );
}

#[test]
fn criterion_11_appendix_a_oracle() {
    let run = shipped("appendix_a");
    let cfg = load_config("appendix_a");
    let realized = realize_config(&cfg).unwrap();
    let p = realized.params;

    // thermal occupations of the mode
    let q = (-p.beta2 * p.nu).exp();
    let z: f64 = (0..p.n_fock).map(|k| q.powi(k as i32)).sum();
    let populations: Vec<f64> = (0..p.n_fock).map(|k| q.powi(k as i32) / z).collect();
    let data = AppendixAData {
        eps: vec![p.omega0 / 2.0, -p.omega0 / 2.0],
        a: vec![1.0, -1.0],
        big_e: (0..p.n_fock).map(|k| p.nu * k as f64).collect(),
        b: (0..p.n_fock).map(|k| p.g * k as f64).collect(),
        p: populations,
        rho1_0: run.trajectory.rho1_initial.clone(),
    };

    let mut worst = 0.0_f64;
    for &t in &[0.7, 2.3, 5.1, 9.4, 12.0] {
        let rho_t = propagate_closed(&realized.sys, &realized.initial.rho, t).unwrap();
        let rho1_num = partial_trace(rho_t.op(), realized.sys.dims(), Side::One).unwrap();
        let rho1_ref = lembas::oracles::appendix_a_reduced_state(&data, t).unwrap();
        let err = max_norm(&(rho1_num.matrix() - rho1_ref.matrix()));
        worst = worst.max(err);
    }
    assert!(worst <= 1e-8, "closed-form mismatch {worst:.3e}");

    // entropy oscillates while the heat flux stays identically zero
    let s_min = run
        .trajectory
        .samples
        .iter()
        .map(|s| s.s1)
        .fold(f64::INFINITY, f64::min);
    let s_max = run
        .trajectory
        .samples
        .iter()
        .map(|s| s.s1)
        .fold(f64::NEG_INFINITY, f64::max);
    let q1_max = max_flux_over(run, |s| s.q1.abs());
    assert!(s_max - s_min > 0.01, "S1 range {:.3e}", s_max - s_min);
    assert!(q1_max <= 1e-10, "q1 {q1_max:.3e}");

    // periodicity of S₁ with period π/g set by the phase gaps, at exact times
    let period = std::f64::consts::PI / p.g;
    let mut worst_period = 0.0_f64;
    for &t in &[0.9, 2.6, 4.4] {
        let s_at = |tau: f64| {
            let rho_t = propagate_closed(&realized.sys, &realized.initial.rho, tau).unwrap();
            let rho1 = partial_trace(rho_t.op(), realized.sys.dims(), Side::One).unwrap();
            lembas::operator::von_neumann_entropy(
                &lembas::operator::DensityMatrix::new(rho1).unwrap(),
            )
        };
        worst_period = worst_period.max((s_at(t + period) - s_at(t)).abs());
    }
    assert!(worst_period < 1e-9, "S1 not periodic: {worst_period:.3e}");

    println!(
        "criterion 11 (closed-form reduced dynamics): PASS — ||Δρ1|| {worst:.2e} <= 1e-8, S1 range {:.3} with |Q1| {q1_max:.2e}, S1 periodic to {worst_period:.2e}",
        s_max - s_min
    );
}

#[test]
fn criterion_12_rk4_convergence_order() {
    let mut ratios = Vec::new();
    for (kind, g) in [(ModelKind::Dispersive, 0.5), (ModelKind::JaynesCummings, 0.3)] {
        let p = ModelParams {
            omega0: 1.0,
            nu: 1.0,
            g,
            n_fock: 8,
            ..Default::default()
        };
        let sys = build_model(kind, &p).unwrap();
        let st = initial_state(
            SpinState::Superposition {
                theta: 1.2,
                phi: 0.3,
            },
            ModeState::Coherent(0.6),
            &p,
        )
        .unwrap();
        let t_end = 1.0;
        let exact = propagate_closed(&sys, &st.rho, t_end).unwrap();
        let mut errs = Vec::new();
        for &dt in &[0.02, 0.01] {
            let mut rho = st.rho.clone();
            for _ in 0..(t_end / dt).round() as usize {
                rho = step_rk4(&sys, &[], &rho, dt).unwrap();
            }
            errs.push(max_norm(&(rho.matrix() - exact.matrix())));
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (12.0..=20.0).contains(&ratio),
            "{kind:?}: convergence ratio {ratio:.2} outside [12, 20] (errors {errs:?})"
        );
        ratios.push(format!("{kind:?} {ratio:.1}"));
    }
    println!(
        "criterion 12 (RK4 fourth-order convergence): PASS — error ratios per dt halving: {}",
        ratios.join(", ")
    );
}

// -------------------------------------------------------------------------
// structural verdicts of every shipped scenario must pass

#[test]
fn shipped_scenarios_all_verdicts_pass() {
    for name in SHIPPED {
        let run = shipped(name);
        for check in &run.summary.checks {
            assert!(
                check.verdict != Verdict::Fail,
                "{name}: check {} failed (observed {:.3e}, threshold {:.3e})",
                check.name,
                check.observed,
                check.threshold
            );
        }
        assert!(run.summary.warnings.is_empty(), "{name}: {:?}", run.summary.warnings);
    }
    println!("shipped scenarios: PASS — all structural verdicts pass, no warnings");
}

#[test]
fn eigenstate_heat_flux_via_public_ops() {
    // q2 through the public per-operation path on a freshly correlated state
    let p = ModelParams {
        omega0: 1.0,
        nu: 1.0,
        g: 0.2,
        n_fock: 30,
        c: 0.5,
        x0: 0.6,
        ..Default::default()
    };
    let sys = build_model(ModelKind::Displaced, &p).unwrap();
    let st = initial_state(SpinState::Mixture(0.5), ModeState::Coherent(0.6), &p).unwrap();
    let t = 1.2;
    let rho = propagate_closed(&sys, &st.rho, t).unwrap();
    let c12 = extract_correlations(&rho, sys.dims()).unwrap();
    assert!(c12.max_norm() > 1e-4);
    let heff2 = effective_hamiltonian(&sys, &rho, Side::Two).unwrap();
    let split2 = pinch_split(&heff2, sys.local_hamiltonian(Side::Two)).unwrap();
    let (q2, q2_bath) = heat_flux(&sys, &rho, Side::Two, &split2, &[]).unwrap();
    assert_eq!(q2_bath, 0.0);
    let expect = 8.0 * 0.5 * 0.5 * 0.04 * t.sin();
    assert!(
        (q2 - expect).abs() <= 0.01 * expect.abs().max(1e-3),
        "q2 {q2} vs {expect}"
    );
}
