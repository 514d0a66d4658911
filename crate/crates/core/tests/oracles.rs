//! Cross-module checks against independent oracles: closed-form moments,
//! exact discrete recursions, brute-force quadrature, and coupled-refinement
//! studies. Statistical assertions use standard-error windows wide enough to
//! keep the false-failure rate negligible at fixed seeds.

use std::sync::Arc;

use levy_sde::coeffs::{norms, CoefficientSet, InitialLaw};
use levy_sde::modulus::{ConcaveModulus, Lambda};
use levy_sde::noise::{
    brownian_increments, sample_jump_count, sample_prm, substream, JumpMeasure, LevyModel,
    NoiseBundle, StreamPurpose, TimeGrid,
};
use levy_sde::picard::{picard_step, solve, sup_distance, IterateEnsemble, SolveOptions};
use levy_sde::scenarios::{build_scenario, Params};
use levy_sde::stability::bihari_bound;

fn mean_and_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn poisson_count_mean_and_variance() {
    // mass 2 on horizon 3: counts are Poisson(6).
    let measure = JumpMeasure::atomic(vec![(vec![0.1], 2.0)], 0.5).unwrap();
    let mut stream = substream(2024, StreamPurpose::Jumps, 0);
    let n = 100_000;
    let counts: Vec<f64> = (0..n)
        .map(|_| sample_jump_count(&measure, 3.0, &mut stream).unwrap() as f64)
        .collect();
    let (mean, var) = mean_and_var(&counts);
    let lambda = 6.0;
    let se_mean = (lambda / n as f64).sqrt();
    // Var of the sample variance of a Poisson: (μ₄ − σ⁴)/n with
    // μ₄ = λ(1 + 3λ).
    let se_var = ((lambda * (1.0 + 3.0 * lambda) - lambda * lambda) / n as f64).sqrt();
    assert!((mean - lambda).abs() < 4.0 * se_mean, "mean {mean}");
    assert!((var - lambda).abs() < 4.0 * se_var, "var {var}");
}

#[test]
fn prm_single_atom_rate_and_marks() {
    let measure = JumpMeasure::atomic(vec![(vec![1.0], 4.0)], 2.0).unwrap();
    let grid = TimeGrid::new(1.0, 8).unwrap();
    let mut stream = substream(11, StreamPurpose::Jumps, 0);
    let n = 100_000;
    let mut counts = Vec::with_capacity(n);
    for _ in 0..n {
        let events = sample_prm(&measure, &grid, &mut stream).unwrap();
        for e in &events {
            assert_eq!(e.mark, vec![1.0]); // point mass at 1.0
        }
        counts.push(events.len() as f64);
    }
    let (mean, _) = mean_and_var(&counts);
    let se = (4.0 / n as f64).sqrt();
    assert!((mean - 4.0).abs() < 4.0 * se, "mean count {mean}");
}

#[test]
fn prm_two_atom_mark_frequencies() {
    let measure = JumpMeasure::atomic(vec![(vec![1.0], 3.0), (vec![-1.0], 1.0)], 2.0).unwrap();
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let mut stream = substream(12, StreamPurpose::Jumps, 1);
    let mut plus = 0usize;
    let mut total = 0usize;
    for _ in 0..50_000 {
        for e in sample_prm(&measure, &grid, &mut stream).unwrap() {
            total += 1;
            if e.mark[0] > 0.0 {
                plus += 1;
            }
        }
    }
    let p = plus as f64 / total as f64;
    let se = (0.75 * 0.25 / total as f64).sqrt();
    assert!((p - 0.75).abs() < 4.0 * se, "p = {p}, n = {total}");
}

#[test]
fn brownian_variance_per_step_and_additivity() {
    let grid = TimeGrid::new(1.0, 1).unwrap();
    let mut stream = substream(5, StreamPurpose::Brownian, 0);
    let n = 100_000;
    let samples: Vec<f64> = (0..n)
        .map(|_| brownian_increments(&grid, 1, &mut stream)[0][0])
        .collect();
    let (_, var) = mean_and_var(&samples);
    // SE of the sample variance of N(0, 1): sqrt(2/(n-1)).
    let se = (2.0 / (n as f64 - 1.0)).sqrt();
    assert!((var - 1.0).abs() < 4.0 * se, "var {var}");

    // Increment sums over a refined grid keep total variance T.
    let grid = TimeGrid::new(2.0, 16).unwrap();
    let sums: Vec<f64> = (0..20_000)
        .map(|_| {
            brownian_increments(&grid, 1, &mut stream)
                .iter()
                .map(|v| v[0])
                .sum::<f64>()
        })
        .collect();
    let (_, var) = mean_and_var(&sums);
    let se = 2.0 * (2.0 / 20_000.0f64).sqrt();
    assert!((var - 2.0).abs() < 4.0 * se, "sum var {var}");
}

#[test]
fn compensated_jump_path_has_mean_zero() {
    // Pure-jump driver: mark 1, mass 0.7. The compensated path at T has mean 0.
    let levy = LevyModel::new(JumpMeasure::atomic(vec![(vec![1.0], 0.7)], 2.0).unwrap(), 0);
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let n = 20_000;
    let bundle = NoiseBundle::generate(31, grid, &levy, n).unwrap();
    let terminals: Vec<f64> = (0..n)
        .map(|p| bundle.levy_ito_path(p, &[0.0]).unwrap()[16][0])
        .collect();
    let (mean, var) = mean_and_var(&terminals);
    let se = (var / n as f64).sqrt();
    assert!(mean.abs() < 5.0 * se, "mean {mean}, se {se}");
    // The variance of the compensated compound Poisson at T is mass·mark²·T.
    let se_var = (2.0f64 / n as f64).sqrt() * 0.7 * 3.0;
    assert!((var - 0.7).abs() < 4.0 * se_var.max(0.02), "var {var}");
}

#[test]
fn increments_on_disjoint_intervals_are_uncorrelated() {
    let levy = LevyModel::new(JumpMeasure::atomic(vec![(vec![0.5], 1.0)], 1.0).unwrap(), 1);
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let n = 40_000;
    let bundle = NoiseBundle::generate(77, grid, &levy, n).unwrap();
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for p in 0..n {
        let path = bundle.levy_ito_path(p, &[0.0]).unwrap();
        first.push(path[2][0]);
        second.push(path[4][0] - path[2][0]);
    }
    let (m1, v1) = mean_and_var(&first);
    let (m2, v2) = mean_and_var(&second);
    let cov = first
        .iter()
        .zip(&second)
        .map(|(a, b)| (a - m1) * (b - m2))
        .sum::<f64>()
        / (n as f64 - 1.0);
    // SE of the sample covariance of independent variables.
    let se = (v1 * v2 / n as f64).sqrt();
    assert!(cov.abs() < 4.0 * se, "cov {cov}, se {se}");
}

// ---------------------------------------------------------------------------
// Picard iterates against quadrature oracles
// ---------------------------------------------------------------------------

/// Independent oracle: the degree-3 iterated left-point sums for b(y) = y,
/// computed directly (no solver code).
fn iterated_sum_oracle(steps: usize) -> f64 {
    let dt = 1.0 / steps as f64;
    // X1(t_i) = 1 + t_i, cumulative left sums upward.
    let mut x1 = vec![0.0; steps + 1];
    let mut x2 = vec![0.0; steps + 1];
    let mut x3 = vec![0.0; steps + 1];
    for (m, slot) in x1.iter_mut().enumerate() {
        *slot = 1.0 + m as f64 * dt;
    }
    let mut acc = 1.0;
    for m in 0..steps {
        acc += x1[m] * dt;
        x2[m + 1] = acc;
    }
    x2[0] = 1.0;
    let mut acc = 1.0;
    for m in 0..steps {
        acc += x2[m] * dt;
        x3[m + 1] = acc;
    }
    x3[0] = 1.0;
    x3[steps]
}

#[test]
fn third_iterate_matches_taylor_and_independent_sums() {
    let coeffs = CoefficientSet::new(
        1,
        1.0,
        Arc::new(|_t, y: &[f64], out: &mut [f64]| out[0] = y[0]),
        Arc::new(|_t, _y, out: &mut [f64]| out.fill(0.0)),
        Arc::new(|_t, _y, _x, out: &mut [f64]| out.fill(0.0)),
        InitialLaw::PointMass(vec![1.0]),
        LevyModel::new(JumpMeasure::empty(1.0, 1).unwrap(), 0),
        ConcaveModulus::linear(),
    )
    .unwrap();
    let steps = 512;
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let bundle = Arc::new(NoiseBundle::generate(1, grid, &coeffs.levy, 2).unwrap());
    let mut x = IterateEnsemble::initial_iterate(&coeffs, &bundle).unwrap();
    for _ in 0..3 {
        x = picard_step(&x, &coeffs).unwrap();
    }
    let got = x.state(0, steps)[0];
    // Exact agreement with the independent discrete oracle.
    let oracle = iterated_sum_oracle(steps);
    assert!(
        (got - oracle).abs() < 1e-13,
        "solver {got} vs oracle {oracle}"
    );
    // O(Δt) agreement with the continuum limit 1 + 1 + 1/2 + 1/6.
    let taylor = 1.0 + 1.0 + 0.5 + 1.0 / 6.0;
    assert!(
        (got - taylor).abs() < 3.0 / steps as f64,
        "vs taylor {taylor}"
    );
}

fn ou_jump_scenario(paths_horizon: f64) -> CoefficientSet {
    let mut params = Params::new();
    params.insert("horizon".into(), paths_horizon);
    build_scenario("ou-jump", &params).unwrap().coeffs
}

#[test]
fn ou_second_moment_matches_exact_discrete_recursion() {
    // For the converged iterate (the fixed point is the left-point Euler
    // chain), E X_{m+1}² = (1 − aΔt)² E X_m² + (σ² + mass·mark²) Δt exactly.
    let coeffs = ou_jump_scenario(1.0);
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let paths = 4000;
    let bundle = Arc::new(NoiseBundle::generate(404, grid, &coeffs.levy, paths).unwrap());
    let opts = SolveOptions {
        tol: 1e-10,
        max_iter: 20,
        ..Default::default()
    };
    let out = solve(&coeffs, &bundle, &opts).unwrap();
    let (emp, se) = out.ensemble.moment_profile();

    let dt = grid.dt();
    let (a, sigma, mass_mark_sq) = (1.0, 0.3, 1.0 * 0.1 * 0.1);
    let alpha = 1.0 - a * dt;
    let mut m2 = 1.0; // ξ = 1
    for (node, (&e, &s)) in emp.iter().zip(&se).enumerate() {
        assert!(
            (e - m2).abs() <= 5.0 * s + 1e-12,
            "node {node}: emp {e} vs oracle {m2} (se {s})"
        );
        m2 = alpha * alpha * m2 + (sigma * sigma + mass_mark_sq) * dt;
    }
}

#[test]
fn short_horizon_contraction_of_successive_distances() {
    // C₂T = 12 T² sup λ < 1 on T = 0.25: successive distances contract at
    // least that fast (a discrete echo of the iterated comparison bound).
    let coeffs = ou_jump_scenario(0.25);
    let grid = TimeGrid::new(0.25, 128).unwrap();
    let bundle = Arc::new(NoiseBundle::generate(9, grid, &coeffs.levy, 400).unwrap());
    let opts = SolveOptions {
        tol: 1e-14,
        max_iter: 6,
        ..Default::default()
    };
    let out = solve(&coeffs, &bundle, &opts).unwrap();
    let c2t = out.report.c2 * 0.25;
    assert!(c2t < 1.0, "contraction factor {c2t} not < 1");
    for w in out.report.successive.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        assert!(
            next.distance <= prev.distance * c2t + 5.0 * (prev.se + next.se),
            "D({},{}) = {} vs C2T * D({},{}) = {}",
            next.from,
            next.to,
            next.distance,
            prev.from,
            prev.to,
            prev.distance * c2t
        );
    }
}

#[test]
fn sup_distance_quadratic_triangle_inequality() {
    let coeffs = ou_jump_scenario(1.0);
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let bundle = Arc::new(NoiseBundle::generate(3, grid, &coeffs.levy, 64).unwrap());
    let x0 = IterateEnsemble::initial_iterate(&coeffs, &bundle).unwrap();
    let x1 = picard_step(&x0, &coeffs).unwrap();
    let x2 = picard_step(&x1, &coeffs).unwrap();
    let (dab, _) = sup_distance(&x0, &x2).unwrap();
    let (dac, _) = sup_distance(&x0, &x1).unwrap();
    let (dcb, _) = sup_distance(&x1, &x2).unwrap();
    assert!(
        dab <= 2.0 * dac + 2.0 * dcb + 1e-12,
        "{dab} vs {}",
        2.0 * dac + 2.0 * dcb
    );
}

#[test]
fn grid_consistency_of_mean_sup_sq() {
    // Halving Δt moves Ê sup |X|² by O(Δt): with one shared noise
    // realisation across levels, successive differences shrink with ratios
    // around 2. The scenario grows monotonically (upward drift, positive
    // jumps, no Brownian part), so the per-path sup sits at the terminal
    // node on every level and only the O(Δt) dynamics error remains.
    let mut params = Params::new();
    params.insert("a".into(), -0.5);
    params.insert("sigma".into(), 0.0);
    params.insert("jump_mass".into(), 2.0);
    let coeffs = build_scenario("ou-jump", &params).unwrap().coeffs;
    let fine_grid = TimeGrid::new(1.0, 2048).unwrap();
    let fine = Arc::new(NoiseBundle::generate(55, fine_grid, &coeffs.levy, 400).unwrap());
    let mut bundles = vec![fine];
    for _ in 0..4 {
        let next = bundles.last().unwrap().coarsened().unwrap();
        bundles.push(Arc::new(next));
    }
    let opts = SolveOptions {
        tol: 1e-12,
        max_iter: 16,
        ..Default::default()
    };
    let sups: Vec<f64> = bundles
        .iter()
        .map(|b| {
            let out = solve(&coeffs, b, &opts).unwrap();
            out.ensemble.mean_sup_sq().0
        })
        .collect();
    // bundles: 2048, 1024, 512, 256, 128. Differences between consecutive
    // levels, coarsest pair first.
    let diffs: Vec<f64> = (1..bundles.len())
        .rev()
        .map(|i| (sups[i] - sups[i - 1]).abs())
        .collect();
    for (i, pair) in diffs.windows(2).enumerate() {
        let ratio = pair[0] / pair[1];
        assert!(
            (1.5..=3.0).contains(&ratio),
            "refinement {i}: ratio {ratio} outside [1.5, 3] (diffs {diffs:?})"
        );
    }
}

#[test]
fn first_iterate_splits_into_noise_plus_deterministic_drift() {
    // With F ≡ 0, σ constant and a point-mass start, X₁ − (ξ + Σ σΔB) is the
    // same deterministic drift sum on every path.
    let coeffs = CoefficientSet::new(
        1,
        1.0,
        Arc::new(|t, y: &[f64], out: &mut [f64]| out[0] = (y[0] * 0.5).sin() + t),
        Arc::new(|_t, _y, out: &mut [f64]| out[0] = 0.4),
        Arc::new(|_t, _y, _x, out: &mut [f64]| out.fill(0.0)),
        InitialLaw::PointMass(vec![0.3]),
        LevyModel::new(JumpMeasure::empty(1.0, 1).unwrap(), 1),
        ConcaveModulus::linear(),
    )
    .unwrap();
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let bundle = Arc::new(NoiseBundle::generate(21, grid, &coeffs.levy, 8).unwrap());
    let x0 = IterateEnsemble::initial_iterate(&coeffs, &bundle).unwrap();
    let x1 = picard_step(&x0, &coeffs).unwrap();
    let residual = |p: usize, m: usize| {
        let mut noise = 0.3;
        for step in 0..m {
            noise += 0.4 * bundle.path(p).increment(step, 1)[0];
        }
        x1.state(p, m)[0] - noise
    };
    for m in [1, 7, 32] {
        let base = residual(0, m);
        for p in 1..8 {
            assert!(
                (residual(p, m) - base).abs() < 1e-12,
                "path {p}, node {m}: {} vs {base}",
                residual(p, m)
            );
        }
    }
}

#[test]
fn compensated_mean_invariant_over_paths() {
    // Monte Carlo mean of Σ marks − drift·T across ≥ 10⁴ paths within 5 SE
    // of zero, for an asymmetric atomic measure.
    let measure = JumpMeasure::atomic(vec![(vec![0.3], 1.5), (vec![-0.1], 0.5)], 1.0).unwrap();
    let drift = measure.compensator_drift().unwrap()[0];
    let levy = LevyModel::new(measure, 0);
    let grid = TimeGrid::new(2.0, 4).unwrap();
    let n = 20_000;
    let bundle = NoiseBundle::generate(808, grid, &levy, n).unwrap();
    let samples: Vec<f64> = (0..n)
        .map(|p| {
            let jump_sum: f64 = bundle.path(p).jumps().iter().map(|j| j.mark[0]).sum();
            jump_sum - drift * 2.0
        })
        .collect();
    let (mean, var) = mean_and_var(&samples);
    let se = (var / n as f64).sqrt();
    assert!(mean.abs() < 5.0 * se, "mean {mean}, se {se}");
}

#[test]
fn jensen_concavity_of_bundled_moduli_on_random_batches() {
    // For concave κ the sample mean of κ(|Y|²) stays below κ(mean |Y|²) plus
    // Monte Carlo noise.
    let mut stream = substream(99, StreamPurpose::Diagnostics, 5);
    use rand::Rng;
    for m in [ConcaveModulus::linear(), ConcaveModulus::log_modulus()] {
        for _ in 0..20 {
            let batch: Vec<f64> = (0..500)
                .map(|_| {
                    let y: f64 = stream.random::<f64>() * 0.5;
                    y * y
                })
                .collect();
            let mean_q = batch.iter().sum::<f64>() / batch.len() as f64;
            let mean_kappa = batch.iter().map(|&q| m.kappa(q)).sum::<f64>() / batch.len() as f64;
            assert!(
                mean_kappa <= m.kappa(mean_q) + 1e-12,
                "{}: E kappa = {mean_kappa} vs kappa(E) = {}",
                m.name(),
                m.kappa(mean_q)
            );
        }
    }
}

#[test]
fn gronwall_specialization_grid() {
    let m = ConcaveModulus::linear();
    let v = Lambda::Constant(1.0);
    for u0 in [1e-6, 1e-3, 0.1, 1.0] {
        for t in [0.1, 0.5, 1.0, 2.0] {
            let b = bihari_bound(u0, &v, &m, t).unwrap();
            let want = u0 * t.exp();
            assert!(
                (b - want).abs() <= 1e-8 * want,
                "u0 {u0}, t {t}: {b} vs {want}"
            );
        }
    }
}

#[test]
fn stability_estimate_scales_with_the_squared_initial_gap() {
    // The coupled difference for the linear scenario is deterministic, so
    // halving the initial gap scales the measured quantity by exactly 1/4.
    use levy_sde::stability::mean_square_stability_test;
    let coeffs = ou_jump_scenario(1.0);
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let opts = SolveOptions::default();
    let measure_gap = |g: f64| {
        mean_square_stability_test(
            &coeffs,
            InitialLaw::PointMass(vec![1.0]),
            InitialLaw::PointMass(vec![1.0 + g]),
            grid,
            64,
            13,
            10.0,
            &opts,
        )
        .unwrap()
    };
    let r1 = measure_gap(1e-2);
    let r2 = measure_gap(1e-4);
    assert!(
        (r1.estimate - 1e-4).abs() < 1e-12,
        "gap 1e-2: {}",
        r1.estimate
    );
    assert!(
        (r2.estimate - 1e-8).abs() < 1e-16,
        "gap 1e-4: {}",
        r2.estimate
    );
    assert_eq!(r1.se, 0.0);
    let ratio = r1.estimate / r2.estimate;
    assert!((ratio - 1e4).abs() < 1e-6 * 1e4, "ratio {ratio}");
}

#[test]
fn moment_bound_dominates_ou_profile_at_every_node() {
    let coeffs = ou_jump_scenario(1.0);
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let bundle = Arc::new(NoiseBundle::generate(6, grid, &coeffs.levy, 500).unwrap());
    let out = solve(&coeffs, &bundle, &SolveOptions::default()).unwrap();
    let mb = levy_sde::picard::moment_bound_check(&out.report, &coeffs, &grid).unwrap();
    assert!(mb.pass);
    for profile in &out.report.moments {
        for (&m, &s) in profile.mean_sq.iter().zip(&profile.se) {
            assert!(
                m <= mb.bound + 5.0 * s,
                "node moment {m} above bound {}",
                mb.bound
            );
        }
    }
}

#[test]
fn density_measure_statistics() {
    // Triangular density on (-1, 1): p(x) ∝ 1 − |x|, total mass 1.
    let density: levy_sde::noise::MarkDensity = Arc::new(|x: f64| 1.0 - x.abs());
    let measure = JumpMeasure::bounded_density(density, 1.0, 1.0, 1.0).unwrap();
    assert!((measure.total_mass() - 1.0).abs() < 1e-12);
    let drift = measure.compensator_drift().unwrap()[0];
    assert!(drift.abs() < 1e-9, "drift {drift}");
    // ∫ x² (1−|x|) dx over (−1,1) = 2 (1/3 − 1/4) = 1/6.
    let m2 = measure.second_moment().unwrap();
    assert!((m2 - 1.0 / 6.0).abs() < 1e-9, "m2 {m2}");
    // Empirical mark second moment agrees.
    let mut stream = substream(17, StreamPurpose::Jumps, 2);
    let n = 50_000;
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let x = measure.sample_mark(&mut stream).unwrap()[0];
            x * x
        })
        .collect();
    let (mean, var) = mean_and_var(&samples);
    let se = (var / n as f64).sqrt();
    assert!((mean - 1.0 / 6.0).abs() < 4.0 * se, "empirical m2 {mean}");
}

#[test]
fn norms_match_their_definitions() {
    assert_eq!(norms::vec_sq(&[3.0, 4.0]), 25.0);
    assert_eq!(norms::vec_diff_sq(&[1.0, 2.0], &[4.0, 6.0]), 25.0);
}

#[test]
fn bihari_bound_dominates_the_measured_coupled_gap() {
    // The coupled-difference process satisfies the integral-inequality
    // premise with u₀ = 4 E|ξ−η|² and v ≡ 16 T sup λ, so the comparison
    // bound must dominate the measured quantity.
    use levy_sde::stability::mean_square_stability_test;
    let coeffs = ou_jump_scenario(1.0);
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let gap = 1e-3;
    let report = mean_square_stability_test(
        &coeffs,
        InitialLaw::PointMass(vec![1.0]),
        InitialLaw::PointMass(vec![1.0 + gap]),
        grid,
        128,
        29,
        1.0,
        &SolveOptions::default(),
    )
    .unwrap();
    let factor = 16.0 * 1.0 * coeffs.modulus.lambda().sup();
    let bound = bihari_bound(
        4.0 * report.initial_gap_sq,
        &Lambda::Constant(factor),
        &coeffs.modulus,
        1.0,
    )
    .unwrap();
    assert!(
        report.estimate <= bound + 5.0 * report.se,
        "measured {} above bound {bound}",
        report.estimate
    );
}

#[test]
fn osgood_drift_scenario_solves_and_respects_its_bounds() {
    // The genuinely non-Lipschitz built-in still converges under the solver
    // and stays inside the affine growth cap.
    let sc = build_scenario("log-modulus-drift", &Params::new()).unwrap();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let bundle = Arc::new(NoiseBundle::generate(23, grid, &sc.coeffs.levy, 64).unwrap());
    let out = solve(&sc.coeffs, &bundle, &SolveOptions::default()).unwrap();
    assert!(matches!(
        out.report.verdict,
        levy_sde::picard::Verdict::Converged
    ));
    let mb = levy_sde::picard::moment_bound_check(&out.report, &sc.coeffs, &grid).unwrap();
    assert!(mb.pass);
    // Trajectories decay toward the origin under the odd damping drift.
    let (mean, _) = out.ensemble.terminal_mean();
    assert!(mean[0].abs() < 0.25, "terminal mean {}", mean[0]);
}
