use nalgebra::DMatrix;
use qutrit_gpt::cli::normalized_factors;
use qutrit_gpt::experiment::*;
use qutrit_gpt::gauge::gauge_fix;
use qutrit_gpt::lowrank_fit::*;
use qutrit_gpt::qutrit_ref::{is_valid_effect_vector, is_valid_state_vector, BlochEffectVector, BlochStateVector, HermitianOp3};
use qutrit_gpt::rng::{substream, tag};
use rand::Rng;

fn frequencies(design: &Design, params: &SimulationParams, seed: u64) -> (FrequencyMatrix, FrequencyMatrix) {
    let (a, b) = simulate_train_test(design, params, seed).unwrap();
    (counts_to_frequencies(&a, design).unwrap(), counts_to_frequencies(&b, design).unwrap())
}

#[test]
fn noiseless_fiducial_completion() {
    let design = build_design(&DesignKind::Fiducial { n_random: 60 }, &mut substream(1, &[tag::DESIGN])).unwrap();
    let d = design.probabilities(0.0);
    let f = FrequencyMatrix::from_probabilities(&d, 1.0, &design.mask).unwrap();
    let (model, report) = fit_masked(&f, 9, &FitOptions::default()).unwrap();
    assert!(report.chi2_train < 1e-6, "{}", report.chi2_train);
    let p = model.predictions();
    let mut unprobed = 0;
    for i in 0..d.nrows() {
        for j in 1..d.ncols() {
            if !design.mask[(i, j)] {
                unprobed += 1;
                assert!((p[(i, j)] - d[(i, j)]).abs() < 1e-4, "({i}, {j})");
            }
        }
    }
    assert_eq!(unprobed, 60 * 60);

    let g = gauge_fix(&p, 9, &design.state_vectors().unwrap()).unwrap();
    let (s, e) = normalized_factors(&g).unwrap();
    assert!((&s - design.state_vectors().unwrap()).amax() < 1e-6);
    // gauge-fixed vectors are valid quantum vectors
    for r in s.row_iter() {
        let mut t = [0.0; 8];
        t.copy_from_slice(&r.iter().skip(1).cloned().collect::<Vec<_>>());
        assert!(is_valid_state_vector(&BlochStateVector::from_bloch(t), 1e-6));
    }
    for c in e.column_iter().skip(1) {
        let v: [f64; 9] = std::array::from_fn(|a| c[a]);
        assert!(is_valid_effect_vector(&BlochEffectVector::new(v), 1e-6));
    }
    // Λ cancels in the predictions
    assert!((&g.s_realized * &g.e_realized - &p).amax() < 1e-9);
}

#[test]
fn train_chi2_never_rises_with_rank() {
    let design = build_haar_design(20, 20, &mut substream(3, &[])).unwrap();
    let (train, test) = frequencies(&design, &SimulationParams::default(), 3);
    let ranks: Vec<usize> = (2..=12).collect();
    let sweep = rank_sweep(&train, &test, &ranks, &FitOptions::default()).unwrap();
    for w in sweep.reports.windows(2) {
        assert!(w[1].chi2_train <= w[0].chi2_train, "{} -> {}", w[0].chi2_train, w[1].chi2_train);
    }
    for m in &sweep.models {
        assert!(m.bound_violation() <= 1e-9);
        assert!(m.unit_violation() <= 1e-9);
    }
    let by_rank = |k: usize| sweep.reports.iter().find(|r| r.rank == k).unwrap().chi2_test.unwrap();
    assert!(by_rank(2) > 10.0 * by_rank(9));
}

#[test]
fn test_chi2_per_cell_is_near_one_at_the_true_rank() {
    let design = build_haar_design(30, 30, &mut substream(4, &[])).unwrap();
    let (train, test) = frequencies(&design, &SimulationParams::default(), 4);
    let (model, _) = fit_rank_k(&train, 9, &FitOptions::default()).unwrap();
    let per_cell = testing_error(&model, &test).unwrap() / test.probed_cells() as f64;
    assert!(per_cell > 0.7 && per_cell < 2.0, "{per_cell}");
}

#[test]
fn classical_trit_data_selects_rank_three() {
    let mut rng = substream(5, &[]);
    let m = 25;
    let preparations: Vec<HermitianOp3> = (0..m)
        .map(|_| {
            let w: [f64; 3] = std::array::from_fn(|_| -rng.random::<f64>().ln());
            let t = w.iter().sum::<f64>();
            HermitianOp3::diagonal(w.map(|x| x / t))
        })
        .collect();
    let measurements: Vec<HermitianOp3> = (0..m).map(|_| HermitianOp3::diagonal(std::array::from_fn(|_| rng.random()))).collect();
    let design = Design {
        kind: DesignKind::Haar { m, n: m },
        preparations,
        measurements,
        mask: DMatrix::from_element(m, m + 1, true),
        includes_unit_column: true,
    };
    let params = SimulationParams { epsilon: 0.0, ..Default::default() };
    let (train, test) = frequencies(&design, &params, 5);
    let sweep = rank_sweep(&train, &test, &[1, 2, 3, 4, 5, 6], &FitOptions::default()).unwrap();
    assert_eq!(sweep.selected_rank, 3);
}

#[test]
fn depolarized_states_are_contracted() {
    let design = build_haar_design(30, 30, &mut substream(6, &[])).unwrap();
    let params = SimulationParams { epsilon: 0.05, ..Default::default() };
    let (train, _) = frequencies(&design, &params, 6);
    let (model, _) = fit_rank_k(&train, 9, &FitOptions::default()).unwrap();
    let s_ref = design.state_vectors().unwrap();
    let g = gauge_fix(&model.predictions(), 9, &s_ref).unwrap();
    let (s, _) = normalized_factors(&g).unwrap();
    let mean_norm = |m: &DMatrix<f64>| {
        m.row_iter().map(|r| r.columns(1, 8).norm()).sum::<f64>() / m.nrows() as f64
    };
    assert!(mean_norm(&s) < mean_norm(&s_ref));
}

#[test]
fn report_tables_serialize() {
    let design = build_haar_design(12, 12, &mut substream(7, &[])).unwrap();
    let (train, test) = frequencies(&design, &SimulationParams::default(), 7);
    let sweep = rank_sweep(&train, &test, &[8, 9], &FitOptions::default()).unwrap();
    let json = serde_json::to_string(&sweep.reports).unwrap();
    let back: Vec<FitReport> = serde_json::from_str(&json).unwrap();
    for (a, b) in back.iter().zip(&sweep.reports) {
        // the per-sweep history stays in memory only
        assert!(a.history.is_empty());
        assert_eq!((a.rank, a.chi2_train, a.chi2_test, a.iterations), (b.rank, b.chi2_train, b.chi2_test, b.iterations));
    }
}
