//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::time::{Duration, Instant};

use aokr_core::gaussian::{
    first_pulse, recurse, run_analytic, run_recursion, survival_analytic_eps0,
};
use aokr_core::grating::{grating_amplitude, harmonic_profile};
use aokr_core::harness::{
    compare, compare_where, write_csv, ComparisonReport, Engine, RunSettings, SweepSpec,
};
use aokr_core::pseudoclassical::{init_ensemble, MonteCarlo};
use aokr_core::quantum::{init_plane_wave, QuantumEngine};
use aokr_core::{
    derive_dimensionless, run_sweep, DimensionlessConfig, GratingModel, PhysicalConfig,
    SurvivalSeries,
};
use num_complex::Complex64;

const S7_RESONANT: f64 = 0.02456;
const S1_RESONANT: f64 = 0.06497;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn settings(phys: PhysicalConfig) -> RunSettings {
    RunSettings {
        phys,
        seed: 2024,
        ..RunSettings::default()
    }
}

fn detuned() -> PhysicalConfig {
    let phys = PhysicalConfig::rubidium85();
    PhysicalConfig {
        detuning: phys.gamma,
        ..phys
    }
}

fn criterion_1() -> Outcome {
    let phys = PhysicalConfig::rubidium85();
    let dcfg = derive_dimensionless(&phys, 0.0).unwrap();
    let (s7, elapsed) = pool(1).install(|| {
        timed(|| {
            let engine = QuantumEngine::new(phys, GratingModel::Harmonic).unwrap();
            let run = engine.run(&dcfg).unwrap();
            assert!(run.n_max >= 128);
            run.series.final_survival()
        })
    });
    let exact = QuantumEngine::new(phys, GratingModel::Exact)
        .unwrap()
        .run(&dcfg)
        .unwrap();
    let diff = (s7 - S7_RESONANT).abs();
    Outcome {
        pass: diff <= 1e-3 && elapsed < Duration::from_secs(1),
        detail: format!(
            "S7 = {s7:.6} (|ΔS| = {diff:.2e} ≤ 1e-3), {:.3} s single-threaded (< 1 s); exact-G grating gives {:.6}",
            elapsed.as_secs_f64(),
            exact.series.final_survival()
        ),
    }
}

fn criterion_2() -> Outcome {
    let spec = SweepSpec::beta_default(
        vec![Engine::Quantum, Engine::Analytic],
        settings(PhysicalConfig::rubidium85()),
    );
    let (report, elapsed) = timed(|| run_sweep(&spec).unwrap());
    let (max_abs, _) = compare(&report, (Engine::Quantum, Engine::Analytic)).unwrap();
    Outcome {
        pass: report.values.len() == 101 && max_abs < 5e-3 && elapsed < Duration::from_secs(30),
        detail: format!(
            "{} β points, max|S_q − S_ana| = {max_abs:.2e} (< 5e-3), {:.2} s (< 30 s)",
            report.values.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_3() -> Outcome {
    let phys = PhysicalConfig::rubidium85();
    let engines = vec![Engine::Quantum, Engine::Recursion];
    let eps_report =
        run_sweep(&SweepSpec::epsilon_default(engines.clone(), settings(phys))).unwrap();
    let (eps_max, _) = compare(&eps_report, (Engine::Quantum, Engine::Recursion)).unwrap();

    // Period detuned by 1e-13 s from half the Talbot time.
    let small_eps = phys.epsilon_per_second() * 1e-13;
    let beta_settings = RunSettings {
        epsilon: Some(small_eps),
        ..settings(phys)
    };
    let beta_report = run_sweep(&SweepSpec::beta_default(engines, beta_settings)).unwrap();
    let (beta_max, _) = compare(&beta_report, (Engine::Quantum, Engine::Recursion)).unwrap();
    Outcome {
        pass: eps_report.values.len() == 81 && eps_max < 1e-2 && beta_max < 1e-2,
        detail: format!(
            "ε-sweep max|S_rec − S_q| = {eps_max:.2e}; β-sweep at ε = {small_eps:.4e}: {beta_max:.2e} (both < 1e-2)"
        ),
    }
}

fn criterion_4() -> Outcome {
    let spec = SweepSpec::epsilon_default(
        vec![Engine::Quantum, Engine::MonteCarlo],
        settings(PhysicalConfig::rubidium85()),
    );
    let (report, elapsed) = pool(4).install(|| timed(|| run_sweep(&spec).unwrap()));
    let mut worst_ratio = 0.0f64;
    let mut worst_diff = 0.0f64;
    for p in 0..report.values.len() {
        let q = report.cell(p, Engine::Quantum).unwrap().survival().unwrap();
        let mc = report.cell(p, Engine::MonteCarlo).unwrap();
        let diff = (mc.survival().unwrap() - q).abs();
        let tol = 1e-2f64.max(3.0 * mc.std_error().unwrap());
        worst_ratio = worst_ratio.max(diff / tol);
        worst_diff = worst_diff.max(diff);
    }
    Outcome {
        pass: worst_ratio < 1.0 && spec.settings.trajectories >= 200_000 && elapsed < Duration::from_secs(300),
        detail: format!(
            "{} trajectories, max|S_mc − S_q| = {worst_diff:.2e}, worst diff/tolerance = {worst_ratio:.3} (< 1), {:.1} s on 4 workers (< 300 s)",
            spec.settings.trajectories,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_5() -> Outcome {
    let engines = vec![Engine::Quantum, Engine::MonteCarlo];
    let full = run_sweep(&SweepSpec::epsilon_default(
        engines.clone(),
        settings(detuned()),
    ))
    .unwrap();
    let no_kick_settings = RunSettings {
        delta_j: false,
        ..settings(detuned())
    };
    let no_kick = run_sweep(&SweepSpec::epsilon_default(engines, no_kick_settings)).unwrap();
    let pair = (Engine::MonteCarlo, Engine::Quantum);
    let (inner_max, _) = compare_where(&full, pair, |e| e.abs() <= 0.1 + 1e-12).unwrap();
    let (_, rms_full) = compare_where(&full, pair, |e| e < 0.0).unwrap();
    let (_, rms_no_kick) = compare_where(&no_kick, pair, |e| e < 0.0).unwrap();
    Outcome {
        pass: inner_max < 5e-2 && rms_no_kick > rms_full,
        detail: format!(
            "Δ = Γ: max|S_mc − S_q| over |ε| ≤ 0.1 = {inner_max:.2e} (< 5e-2); RMS over ε < 0 without δJ {rms_no_kick:.2e} > with δJ {rms_full:.2e}"
        ),
    }
}

/// `exp(−iHt)` for a 2×2 complex matrix by scaling and squaring.
fn expm2(h: [[Complex64; 2]; 2], t: f64) -> [[Complex64; 2]; 2] {
    let mul = |x: [[Complex64; 2]; 2], y: [[Complex64; 2]; 2]| {
        let mut z = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                z[r][c] = x[r][0] * y[0][c] + x[r][1] * y[1][c];
            }
        }
        z
    };
    let squarings = 20;
    let scale = -Complex64::i() * t / 2f64.powi(squarings);
    let a = h.map(|row| row.map(|v| v * scale));
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut result = [[one, zero], [zero, one]];
    let mut term = result;
    for k in 1..20 {
        term = mul(term, a).map(|row| row.map(|v| v / k as f64));
        for r in 0..2 {
            for c in 0..2 {
                result[r][c] += term[r][c];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(result, result);
    }
    result
}

fn criterion_6() -> Outcome {
    let phys = PhysicalConfig::rubidium85();
    let base = derive_dimensionless(&phys, 0.0).unwrap();
    let mut failures: Vec<&str> = Vec::new();
    let mut check = |ok: bool, name: &'static str| {
        if !ok {
            failures.push(name);
        }
    };

    // σ_J σ_θ = |ε|/√2.
    let widths = [-3e-7, -1e-9, 0.0, 2e-10, 5e-8].iter().all(|&dt| {
        let d = derive_dimensionless(
            &PhysicalConfig {
                period_offset: dt,
                ..phys
            },
            0.0,
        )
        .unwrap();
        (d.sigma_j * d.sigma_theta - d.epsilon.abs() / SQRT_2).abs() < 1e-12
    });
    check(widths, "width product");

    // Resonant recursion closed forms up to N = 50.
    let mut closed = true;
    for ell in [1u32, 2, 3] {
        for beta in [0.0, 0.01, 0.1, 0.3] {
            let d = DimensionlessConfig {
                ell,
                ..base.with_beta(beta).unwrap()
            };
            let mut state = first_pulse(&d).unwrap();
            for n in 1..=50usize {
                if n > 1 {
                    state = recurse(&state, &d).unwrap();
                }
                let nf = n as f64;
                closed &= (state.sigma_h().powi(2) - d.sigma_theta.powi(2) / nf).abs() < 1e-12;
                let phi = (d.drift() / 2.0 * (nf + 1.0) + PI).rem_euclid(TAU);
                let dphi = (state.phi() - phi).abs();
                closed &= dphi.min(TAU - dphi) < 1e-12;
                let exact = survival_analytic_eps0(n, beta, ell, d.sigma_theta)
                    .unwrap()
                    .value;
                closed &= (state.survival() - exact).abs() < 1e-12;
            }
        }
    }
    check(closed, "recursion closed forms");

    // Free flight conserves the norm.
    let mut state = init_plane_wave(0.3, 64);
    let profile = harmonic_profile(&phys, 2048).unwrap();
    state = aokr_core::quantum::apply_kick(state, &profile).unwrap();
    let before = state.survival();
    state.apply_free(&base.with_epsilon(0.37));
    check(
        (state.survival() - before).abs() < 1e-12,
        "free-flight norm",
    );

    // Every engine's series is nonincreasing.
    let mut monotone = true;
    for eps in [-0.15, -0.02, 0.0, 0.05, 0.2] {
        for beta in [0.0, 0.02] {
            let d = base.with_epsilon(eps).with_beta(beta).unwrap();
            for (p, model) in [
                (phys, GratingModel::Harmonic),
                (phys, GratingModel::Exact),
                (detuned(), GratingModel::Exact),
            ] {
                let engine = QuantumEngine::new(p, model).unwrap();
                let dd = derive_dimensionless(&p, beta).unwrap().with_epsilon(eps);
                monotone &= engine.run(&dd).unwrap().series.is_nonincreasing(1e-15);
                let mc = MonteCarlo {
                    trajectories: 5_000,
                    ..MonteCarlo::default()
                };
                monotone &= mc
                    .run(engine.base_profile().unwrap(), &dd, 7)
                    .unwrap()
                    .is_nonincreasing(0.0);
            }
            monotone &= run_recursion(&d, 20).unwrap().is_nonincreasing(0.0);
            if eps == 0.0 {
                monotone &= run_analytic(&d, 20).unwrap().is_nonincreasing(0.0);
            }
        }
    }
    check(monotone, "monotone survival");

    // β → β + 1/ℓ.
    let mut periodic = true;
    let harmonic = harmonic_profile(&phys, 4096).unwrap();
    for (ell, b0, b1) in [(2u32, 0.125, 0.625), (4, 0.0625, 0.3125)] {
        let d0 = DimensionlessConfig {
            ell,
            ..base.with_epsilon(0.04).with_beta(b0).unwrap()
        };
        let d1 = DimensionlessConfig {
            ell,
            ..base.with_epsilon(0.04).with_beta(b1).unwrap()
        };
        let mc = MonteCarlo {
            trajectories: 20_000,
            seed: 5,
            ..MonteCarlo::default()
        };
        periodic &= mc.run(&harmonic, &d0, 7).unwrap() == mc.run(&harmonic, &d1, 7).unwrap();
        for n in 1..=10 {
            let a = survival_analytic_eps0(n, b0, ell, base.sigma_theta).unwrap();
            let b = survival_analytic_eps0(n, b1, ell, base.sigma_theta).unwrap();
            periodic &= a == b;
        }
    }
    for ell in [1u32, 2, 3] {
        let p = PhysicalConfig { ell, ..phys };
        let engine = QuantumEngine::new(p, GratingModel::Harmonic).unwrap();
        for beta in [0.01, 0.15] {
            let shifted = (beta + 1.0 / f64::from(ell)).rem_euclid(1.0);
            let d0 = derive_dimensionless(&p, beta).unwrap().with_epsilon(0.03);
            let d1 = derive_dimensionless(&p, shifted)
                .unwrap()
                .with_epsilon(0.03);
            let a: SurvivalSeries = engine.run(&d0).unwrap().series;
            let b: SurvivalSeries = engine.run(&d1).unwrap().series;
            periodic &= a
                .survival
                .iter()
                .zip(&b.survival)
                .all(|(x, y)| (x - y).abs() < 1e-10);
        }
    }
    check(periodic, "β periodicity");

    // Degenerate eigenvalue points against a dense matrix exponential.
    let degenerate = [0.25f64, -0.25].iter().all(|&c| {
        let x = c.acos() / phys.k_l;
        let w = Complex64::from(phys.omega_rabi * (phys.k_l * x).cos() / 2.0);
        let h = [
            [-Complex64::new(phys.detuning, phys.gamma / 2.0), w],
            [w, Complex64::new(0.0, 0.0)],
        ];
        let oracle = expm2(h, phys.pulse_duration)[1][1];
        (grating_amplitude(x, &phys) - oracle).norm() < 1e-10
    });
    check(degenerate, "degenerate grating points");

    // Single-pulse survival.
    let s1_exact = base.sigma_theta / (2.0 * PI.sqrt());
    let q1 = QuantumEngine::new(phys, GratingModel::Harmonic)
        .unwrap()
        .run(&base.with_kicks(1))
        .unwrap()
        .series
        .final_survival();
    let mc1 = MonteCarlo {
        trajectories: 200_000,
        seed: 1,
        ..MonteCarlo::default()
    }
    .run(&harmonic, &base, 1)
    .unwrap();
    check(
        (q1 - S1_RESONANT).abs() < 1e-3 && (s1_exact - S1_RESONANT).abs() < 1e-5,
        "quantum S1",
    );
    check(
        (mc1.final_survival() - s1_exact).abs() < 3.0 * mc1.final_std_error(),
        "mc S1",
    );
    check(init_ensemble(4, 0.0, 0).is_ok(), "ensemble init");

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "width product, recursion closed forms (N ≤ 50), free-flight norm, monotone survival, β periodicity, degenerate grating points, S1 all hold".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    }
}

fn csv_bytes(report: &ComparisonReport) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).unwrap();
    buf
}

fn criterion_7() -> Outcome {
    let mut spec =
        SweepSpec::epsilon_default(Engine::ALL.to_vec(), settings(PhysicalConfig::rubidium85()));
    spec.points = 21;
    spec.settings.trajectories = 50_000;
    let one = pool(1).install(|| csv_bytes(&run_sweep(&spec).unwrap()));
    let four = pool(4).install(|| csv_bytes(&run_sweep(&spec).unwrap()));
    let again = pool(4).install(|| csv_bytes(&run_sweep(&spec).unwrap()));
    Outcome {
        pass: one == four && four == again,
        detail: format!(
            "{} CSV bytes, 1 vs 4 workers identical: {}, rerun identical: {}",
            one.len(),
            one == four,
            four == again
        ),
    }
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("resonant closed form vs quantum", criterion_1),
        ("β sweep, quantum vs closed form", criterion_2),
        ("recursion vs quantum", criterion_3),
        ("Monte Carlo vs quantum, resonant", criterion_4),
        ("Monte Carlo vs quantum, Δ = Γ", criterion_5),
        ("invariant suite", criterion_6),
        ("determinism across worker counts", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {}", i + 1, outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
