use conefeas::harness::spearman;
use conefeas::linalg::norm2;
use conefeas::phases::run_phase;
use conefeas::*;

fn cfg(phase: PhaseMode, rescale: RescaleKind, rho: f64, seed: u64) -> SolveConfig {
    let mut c = SolveConfig::new(phase, rescale);
    c.rho_hint = Some(rho);
    c.seed = seed;
    c
}

const MODES: [(PhaseMode, RescaleKind); 5] = [
    (PhaseMode::MwuModified, RescaleKind::MultiRank),
    (PhaseMode::MwuStandard, RescaleKind::Rank1),
    (PhaseMode::MwuStandard, RescaleKind::NormUpdate),
    (PhaseMode::SmoothPerceptron, RescaleKind::MultiRank),
    (PhaseMode::ClassicalPerceptron, RescaleKind::Rank1),
];

#[test]
fn phase_count_does_not_grow_with_rho() {
    let n = 6;
    let rhos = [1e-1, 1e-2, 1e-3, 1e-4];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &rho in &rhos {
        for seed in 0..20 {
            let (inst, w) = generate_planted_family::<f64>(n, 4 * n, rho, seed, PlantedFamily::Boundary).unwrap();
            let mut c = cfg(PhaseMode::MwuModified, RescaleKind::MultiRank, w.rho, seed);
            c.record_trace = false;
            let res = solve(&inst, &c).unwrap();
            assert!(res.certificate.is_feasible());
            xs.push(rho);
            ys.push(res.phases_used as f64);
        }
    }
    let rs = spearman(&xs, &ys);
    assert!(rs <= 0.0, "Spearman(rho, phases) = {rs}");
}

#[test]
fn det_growth_is_monotone_and_bounded() {
    for (phase, rescale) in MODES {
        for seed in 0..4 {
            let (n, rho) = (5, 1e-3);
            let (inst, w) = generate_planted_family::<f64>(n, 20, rho, seed, PlantedFamily::Boundary).unwrap();
            let res = solve(&inst, &cfg(phase, rescale, w.rho, seed)).unwrap();
            for r in &res.rescale_reports {
                assert!(r.det_growth_log > 0.0, "{phase}/{rescale}: rescale with det growth {}", r.det_growth_log);
            }
            let bound = 3.0 * (n as f64 * (1.0 / rho).ln() + n as f64);
            assert!(res.det_growth_total() <= bound, "{phase}/{rescale}: {} > {bound}", res.det_growth_total());
        }
    }
}

#[test]
fn feasible_results_verify_and_traces_are_consistent() {
    for (phase, rescale) in MODES {
        for seed in 0..3 {
            let (inst, w) = generate_planted_family::<f64>(7, 30, 5e-3, seed, PlantedFamily::Boundary).unwrap();
            let res = solve(&inst, &cfg(phase, rescale, w.rho, seed)).unwrap();
            let report = verify_certificate(&inst, &res.certificate).unwrap();
            assert!(report.pass, "{phase}/{rescale}: {}", report.message);
            let ends = res.trace.iter().filter(|t| matches!(t, TraceRecord::PhaseEnd { .. })).count();
            let rescales = res.trace.iter().filter(|t| matches!(t, TraceRecord::Rescale { .. })).count();
            assert_eq!(ends, res.phases_used);
            assert_eq!(rescales, res.rescales);
            assert_eq!(res.phase_iterations.iter().sum::<usize>(), res.total_iterations);
        }
    }
}

#[test]
fn exhausted_runs_never_saw_a_feasible_point() {
    let pair = ConeInstance::from_rows(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
    for (phase, rescale) in MODES {
        let mut c = SolveConfig::new(phase, rescale);
        c.max_phases = Some(25);
        let res = solve(&pair, &c).unwrap();
        assert!(matches!(res.certificate, Certificate::BudgetExhausted(_)), "{phase}/{rescale}");
        assert_eq!(res.phases_used, 25);
        // Φ < 1 would mean a strictly feasible iterate (the classical
        // perceptron does not track Φ and records NaN).
        for t in &res.trace {
            if let TraceRecord::Iteration { phi_log, .. } = t {
                assert!(!(*phi_log < 0.0), "{phase}/{rescale}: trace reached ln Φ = {phi_log}");
            }
        }
    }
}

#[test]
fn modified_phase_monitor_always_decreases() {
    for seed in 0..6 {
        let n = 4 + 2 * seed as usize;
        let (inst, w) = generate_planted_family::<f64>(n, 4 * n, 1e-3, seed, PlantedFamily::Boundary).unwrap();
        let res = solve(&inst, &cfg(PhaseMode::MwuModified, RescaleKind::MultiRank, w.rho, seed)).unwrap();
        for s in &res.phase_stats {
            assert_eq!(s.monitor_non_decrease, 0);
            if let Some(c) = s.window_constant {
                assert!(c > 0.0, "window constant {c}");
            }
        }
    }
}

#[test]
fn evidence_is_independently_valid() {
    let delta = 0.05;
    for mode in [PhaseMode::SmoothPerceptron, PhaseMode::MwuStandard, PhaseMode::MwuModified] {
        for seed in 0..5 {
            let (inst, _) = generate_planted_family::<f64>(6, 24, 1e-3, seed, PlantedFamily::Boundary).unwrap();
            let out = run_phase(&inst, &PhaseConfig::new(mode, delta), &NormState::identity(6)).unwrap();
            match out.result {
                PhaseResult::Evidence { lambda, norm } => {
                    assert!(lambda.iter().all(|&l| l >= 0.0));
                    assert!((lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    let recomputed = norm2(&inst.combine(&lambda));
                    assert!((recomputed - norm).abs() <= 1e-12);
                    assert!(recomputed <= delta + 1e-12);
                }
                PhaseResult::Feasible { x } => assert!(inst.min_margin(&x) > 0.0),
                PhaseResult::Exhausted => panic!("{mode} exhausted its iteration cap"),
            }
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let (inst, w) = generate_planted_family::<f64>(8, 32, 1e-3, 11, PlantedFamily::Boundary).unwrap();
    for (phase, rescale) in MODES {
        let c = cfg(phase, rescale, w.rho, 5);
        let a = solve(&inst, &c).unwrap();
        let b = solve(&inst, &c).unwrap();
        let doc = |r: &SolveResult<f64>| serde_json::to_string(&r.to_document(&c)).unwrap();
        assert_eq!(doc(&a), doc(&b));
        let lines = |r: &SolveResult<f64>| {
            let mut buf = Vec::new();
            conefeas::trace::write_trace(&mut buf, &r.trace).unwrap();
            buf
        };
        assert_eq!(lines(&a), lines(&b));
    }
}

#[test]
fn derandomized_rank1_solves() {
    let (inst, w) = generate_planted_family::<f64>(5, 20, 1e-3, 2, PlantedFamily::Boundary).unwrap();
    let mut c = cfg(PhaseMode::MwuStandard, RescaleKind::Rank1, w.rho, 0);
    c.derandomize = true;
    let res = solve(&inst, &c).unwrap();
    assert!(res.certificate.is_feasible());
    assert!(res.rescale_reports.iter().all(|r| r.derandomized));
    assert!((c.delta(5) - 1.0 / 300.0).abs() < 1e-15);
}

#[test]
fn single_precision_solve() {
    let (inst, w) = generate_planted::<f32>(6, 30, 1e-2, 4).unwrap();
    let res = solve(&inst, &cfg(PhaseMode::MwuModified, RescaleKind::MultiRank, w.rho, 0)).unwrap();
    let Certificate::Feasible { x } = &res.certificate else { panic!("f32 solve did not finish") };
    assert!(inst.min_original_margin(x) > 0.0);
}

#[test]
fn john_ellipsoid_certifies_roundedness() {
    for seed in 0..3 {
        let (inst, w) = generate_planted_family::<f64>(6, 24, 1e-2, seed, PlantedFamily::Boundary).unwrap();
        let res = john_ellipsoid(&inst, &cfg(PhaseMode::MwuModified, RescaleKind::MultiRank, w.rho, seed)).unwrap();
        let r = res.roundedness.expect("roundedness");
        assert!(r.check_passed);
        assert!(norm2(&r.center) <= 0.5 + 1e-12);
        assert!(r.ratio <= 1.5 * r.t as f64);
        assert!(roundedness_check(&res.final_instance, &r.center, r.t as f64));
    }
}
