//! The successive-approximation solver.
//!
//! Starting from `X₀(t) ≡ ξ`, each step maps the previous iterate through the
//! integral form of the equation on a frozen [`NoiseBundle`]:
//!
//! `X_k(t_m) = ξ + Σ_{i<m} b(t_i, X_{k−1}(t_i)) Δt
//!           + Σ_{i<m} σ(t_i, X_{k−1}(t_i)) ΔB_i
//!           + Σ_{τ ≤ t_m} F(t⁻(τ), X_{k−1}(t⁻(τ)), mark)
//!           − Σ_{i<m} [∫ F(t_i, X_{k−1}(t_i), x) ν(dx)] Δt`
//!
//! with `t⁻(τ)` the last grid node strictly before the jump time τ, matching
//! the left-limit convention of the integrands. All iterates share one noise
//! bundle; without common noise the mean-square Cauchy distances between
//! iterates would not be observable.
//!
//! Per-path work is embarrassingly parallel and runs under rayon; every
//! reduction is an ordered fold over the path-indexed results, so output is
//! bit-identical regardless of worker count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::coeffs::{growth_constant, norms, CoefficientSet};
use crate::error::{Error, Result};
use crate::noise::{substream, BundleFingerprint, NoiseBundle, StreamPurpose, TimeGrid};

// ---------------------------------------------------------------------------
// Iterate ensembles
// ---------------------------------------------------------------------------

/// One Picard iterate over the whole path ensemble: trajectories at the grid
/// nodes, the per-path initial values, and the bundle identity.
#[derive(Debug, Clone)]
pub struct IterateEnsemble {
    iterate: usize,
    dim: usize,
    nodes: usize,
    /// Row-major `paths × nodes × dim`.
    states: Vec<f64>,
    /// Row-major `paths × dim`.
    initial: Vec<f64>,
    bundle: Arc<NoiseBundle>,
}

impl IterateEnsemble {
    /// `X₀(t) ≡ ξ`: every node carries the path's drawn initial value.
    pub fn initial_iterate(coeffs: &CoefficientSet, bundle: &Arc<NoiseBundle>) -> Result<Self> {
        check_compatible(coeffs, bundle)?;
        let d = coeffs.dim();
        let nodes = bundle.grid().steps() + 1;
        let paths = bundle.path_count();
        let mut initial = vec![0.0; paths * d];
        for (slot, &idx) in bundle.path_indices().iter().enumerate() {
            let mut stream = substream(bundle.seed(), StreamPurpose::InitialValue, idx);
            let xi = coeffs.initial.draw(&mut stream);
            if xi.len() != d {
                return Err(Error::InvalidInput(format!(
                    "initial sampler returned dimension {}, expected {d}",
                    xi.len()
                )));
            }
            initial[slot * d..(slot + 1) * d].copy_from_slice(&xi);
        }
        let mut states = vec![0.0; paths * nodes * d];
        for p in 0..paths {
            let xi = &initial[p * d..(p + 1) * d];
            for m in 0..nodes {
                states[(p * nodes + m) * d..(p * nodes + m + 1) * d].copy_from_slice(xi);
            }
        }
        Ok(Self {
            iterate: 0,
            dim: d,
            nodes,
            states,
            initial,
            bundle: Arc::clone(bundle),
        })
    }

    pub fn iterate(&self) -> usize {
        self.iterate
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn path_count(&self) -> usize {
        self.initial.len() / self.dim
    }

    pub fn bundle(&self) -> &Arc<NoiseBundle> {
        &self.bundle
    }

    pub fn fingerprint(&self) -> BundleFingerprint {
        self.bundle.fingerprint()
    }

    pub fn state(&self, path: usize, node: usize) -> &[f64] {
        let at = (path * self.nodes + node) * self.dim;
        &self.states[at..at + self.dim]
    }

    pub fn initial_value(&self, path: usize) -> &[f64] {
        &self.initial[path * self.dim..(path + 1) * self.dim]
    }

    /// Exact E|ξ|² of the drawn initial values (mean over paths).
    pub fn initial_second_moment(&self) -> f64 {
        let paths = self.path_count();
        (0..paths)
            .map(|p| norms::vec_sq(self.initial_value(p)))
            .sum::<f64>()
            / paths as f64
    }

    /// Monte Carlo mean of the terminal state, componentwise, with standard
    /// errors.
    pub fn terminal_mean(&self) -> (Vec<f64>, Vec<f64>) {
        let paths = self.path_count();
        let last = self.nodes - 1;
        let mut mean = vec![0.0; self.dim];
        for p in 0..paths {
            for (k, m) in mean.iter_mut().enumerate() {
                *m += self.state(p, last)[k];
            }
        }
        for m in mean.iter_mut() {
            *m /= paths as f64;
        }
        let mut var = vec![0.0; self.dim];
        for p in 0..paths {
            for (k, v) in var.iter_mut().enumerate() {
                let d = self.state(p, last)[k] - mean[k];
                *v += d * d;
            }
        }
        let se = var
            .iter()
            .map(|v| {
                if paths > 1 {
                    (v / (paths - 1) as f64 / paths as f64).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        (mean, se)
    }

    /// `Ê sup_t |X(t)|²` with its standard error.
    pub fn mean_sup_sq(&self) -> (f64, f64) {
        let paths = self.path_count();
        let sups: Vec<f64> = (0..paths)
            .map(|p| {
                (0..self.nodes)
                    .map(|m| norms::vec_sq(self.state(p, m)))
                    .fold(0.0, f64::max)
            })
            .collect();
        mean_se(&sups)
    }

    /// Per-node `Ê|X(t_i)|²` and standard errors.
    pub fn moment_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let paths = self.path_count();
        let mut mean = vec![0.0; self.nodes];
        let mut sq = vec![0.0; self.nodes];
        for p in 0..paths {
            for m in 0..self.nodes {
                let v = norms::vec_sq(self.state(p, m));
                mean[m] += v;
                sq[m] += v * v;
            }
        }
        let n = paths as f64;
        let mut se = vec![0.0; self.nodes];
        for m in 0..self.nodes {
            mean[m] /= n;
            if paths > 1 {
                let var = (sq[m] - n * mean[m] * mean[m]).max(0.0) / (n - 1.0);
                se[m] = (var / n).sqrt();
            }
        }
        (mean, se)
    }
}

/// Compensated (Kahan) sum: an ordered deterministic fold whose rounding
/// error stays at one ulp of the total, so constant inputs produce exact
/// means and zero variance.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn check_compatible(coeffs: &CoefficientSet, bundle: &NoiseBundle) -> Result<()> {
    if bundle.brownian_dim() != coeffs.brownian_dim() {
        return Err(Error::BundleMismatch(format!(
            "bundle has Brownian dimension {}, coefficients want {}",
            bundle.brownian_dim(),
            coeffs.brownian_dim()
        )));
    }
    if !coeffs.levy.measure.is_empty() && bundle.mark_dim() != coeffs.levy.measure.dim() {
        return Err(Error::BundleMismatch(format!(
            "bundle carries marks of dimension {}, measure has {}",
            bundle.mark_dim(),
            coeffs.levy.measure.dim()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The Picard step
// ---------------------------------------------------------------------------

/// One application of the integral map to the previous iterate. Fails with a
/// divergence error carrying the first non-finite `(path, node)`.
pub fn picard_step(prev: &IterateEnsemble, coeffs: &CoefficientSet) -> Result<IterateEnsemble> {
    let bundle = &prev.bundle;
    check_compatible(coeffs, bundle)?;
    let grid = *bundle.grid();
    let d = prev.dim;
    let nodes = prev.nodes;
    let paths = prev.path_count();
    let has_jumps = !coeffs.levy.measure.is_empty();

    let results: Vec<std::result::Result<Vec<f64>, usize>> = (0..paths)
        .into_par_iter()
        .map(|p| step_one_path(prev, coeffs, &grid, p, has_jumps))
        .collect();

    let mut states = vec![0.0; paths * nodes * d];
    for (p, res) in results.into_iter().enumerate() {
        match res {
            Ok(traj) => states[p * nodes * d..(p + 1) * nodes * d].copy_from_slice(&traj),
            Err(node) => {
                return Err(Error::Divergence {
                    iterate: prev.iterate + 1,
                    path: p,
                    node,
                })
            }
        }
    }
    Ok(IterateEnsemble {
        iterate: prev.iterate + 1,
        dim: d,
        nodes,
        states,
        initial: prev.initial.clone(),
        bundle: Arc::clone(bundle),
    })
}

/// Returns the trajectory or the first node index with a non-finite state.
fn step_one_path(
    prev: &IterateEnsemble,
    coeffs: &CoefficientSet,
    grid: &TimeGrid,
    p: usize,
    has_jumps: bool,
) -> std::result::Result<Vec<f64>, usize> {
    let d = prev.dim;
    let r = coeffs.brownian_dim();
    let dt = grid.dt();
    let noise = prev.bundle.path(p);
    let jumps = noise.jumps();

    let mut traj = vec![0.0; prev.nodes * d];
    let xi = prev.initial_value(p);
    let mut acc = xi.to_vec();
    traj[0..d].copy_from_slice(xi);

    let mut bbuf = vec![0.0; d];
    let mut sbuf = vec![0.0; d * r];
    let mut fbuf = vec![0.0; d];
    let mut cbuf = vec![0.0; d];
    let mut jptr = 0usize;

    for m in 0..grid.steps() {
        let t = grid.node(m);
        let y = prev.state(p, m);

        coeffs.drift_into(t, y, &mut bbuf);
        for k in 0..d {
            acc[k] += bbuf[k] * dt;
        }
        if r > 0 {
            coeffs.diffusion_into(t, y, &mut sbuf);
            let db = noise.increment(m, r);
            for k in 0..d {
                let mut dot = 0.0;
                for (j, &w) in db.iter().enumerate() {
                    dot += sbuf[k * r + j] * w;
                }
                acc[k] += dot;
            }
        }
        if has_jumps {
            // Compensator of the jump integral, left-point in time and state.
            if coeffs.jump_compensator_into(t, y, &mut cbuf).is_err() {
                return Err(m + 1);
            }
            for k in 0..d {
                acc[k] -= cbuf[k] * dt;
            }
            // Marks inside (t_m, t_{m+1}] act through the state at t_m, the
            // last node strictly before the jump.
            let t_next = grid.node(m + 1);
            while jptr < jumps.len() && jumps[jptr].time <= t_next {
                coeffs.jump_into(t, y, &jumps[jptr].mark, &mut fbuf);
                for k in 0..d {
                    acc[k] += fbuf[k];
                }
                jptr += 1;
            }
        }
        let out = &mut traj[(m + 1) * d..(m + 2) * d];
        out.copy_from_slice(&acc);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(m + 1);
        }
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

/// Monte Carlo estimate of `E sup_t |X_A(t) − X_B(t)|²` over the shared
/// paths: per-path sup over grid nodes, then mean and standard error.
pub fn sup_distance(a: &IterateEnsemble, b: &IterateEnsemble) -> Result<(f64, f64)> {
    if a.fingerprint() != b.fingerprint() {
        return Err(Error::BundleMismatch(
            "sup_distance requires ensembles on the same noise bundle".into(),
        ));
    }
    if a.dim != b.dim || a.nodes != b.nodes {
        return Err(Error::BundleMismatch(
            "sup_distance requires matching dimensions".into(),
        ));
    }
    let paths = a.path_count();
    let sups: Vec<f64> = (0..paths)
        .map(|p| {
            let mut sup = 0.0f64;
            for m in 0..a.nodes {
                sup = sup.max(norms::vec_diff_sq(a.state(p, m), b.state(p, m)));
            }
            sup
        })
        .collect();
    Ok(mean_se(&sups))
}

// ---------------------------------------------------------------------------
// The solve loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop once `D(k, k+1) <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Retain all iterates and report the full pairwise distance triangle.
    pub keep_history: bool,
    /// Run exactly this many steps, ignoring the tolerance. Used by replay
    /// diagnostics that must compare runs of identical length.
    pub force_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 12,
            keep_history: false,
            force_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Converged,
    MaxIterations,
    Diverged {
        iterate: usize,
        path: usize,
        node: usize,
    },
}

#[derive(Debug, Clone)]
pub struct IterateDistance {
    pub from: usize,
    pub to: usize,
    pub distance: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct MomentProfile {
    pub iterate: usize,
    pub mean_sq: Vec<f64>,
    pub se: Vec<f64>,
}

/// Everything the solve loop measured: successive (and optionally pairwise)
/// mean-square sup distances, per-iterate second-moment profiles, and the
/// constants of the growth/contraction estimates.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub verdict: Verdict,
    pub successive: Vec<IterateDistance>,
    pub pairwise: Option<Vec<IterateDistance>>,
    pub moments: Vec<MomentProfile>,
    /// Growth constant of the affine bound, when domination constants exist.
    pub k1: Option<f64>,
    /// Second-moment cap `C₁ = 4(1 + E|ξ|²) e^{4 K₁ T²}`.
    pub c1: Option<f64>,
    /// Contraction weight `C₂ = 12 T sup λ`.
    pub c2: f64,
    /// Short-horizon distance cap slope `C₃ = C₂ κ(4 C₁)`.
    pub c3: Option<f64>,
    pub e_xi_sq: f64,
    pub tol: f64,
    pub paths: usize,
    pub iterations_run: usize,
}

#[derive(Debug)]
pub struct SolveOutcome {
    /// The last completed iterate.
    pub ensemble: IterateEnsemble,
    pub report: ConvergenceReport,
    /// All iterates including X₀, when history was requested.
    pub history: Option<Vec<IterateEnsemble>>,
}

/// Iterate the Picard map on a frozen bundle until the successive distance
/// falls under `tol`, the iteration budget runs out, or an iterate diverges.
/// Divergence is reported as a verdict with the offending location; the
/// returned ensemble is the last finite iterate.
pub fn solve(
    coeffs: &CoefficientSet,
    bundle: &Arc<NoiseBundle>,
    options: &SolveOptions,
) -> Result<SolveOutcome> {
    if options.tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "solver tolerance must be > 0, got {}",
            options.tol
        )));
    }
    if bundle.path_count() < 2 {
        return Err(Error::InvalidInput(
            "at least 2 paths are required for Monte Carlo estimates".into(),
        ));
    }
    let grid = *bundle.grid();
    let t = grid.horizon();
    let sup_lambda = coeffs.modulus.lambda().sup();
    // 12 = 3 (three-term splitting) * 4 (Doob's maximal inequality at p = 2)
    // applied to the martingale parts of the difference.
    let c2 = 12.0 * t * sup_lambda;

    let mut current = IterateEnsemble::initial_iterate(coeffs, bundle)?;
    let e_xi_sq = current.initial_second_moment();
    let k1 = growth_constant(coeffs, &grid).ok();
    let c1 = k1.map(|k| 4.0 * (1.0 + e_xi_sq) * (4.0 * k * t * t).exp());
    let c3 = c1.map(|c| c2 * coeffs.modulus.kappa(4.0 * c));

    let mut successive = Vec::new();
    let mut moments = Vec::new();
    let (m0, s0) = current.moment_profile();
    moments.push(MomentProfile {
        iterate: 0,
        mean_sq: m0,
        se: s0,
    });
    let mut history = options.keep_history.then(|| vec![current.clone()]);

    let budget = options.force_iterations.unwrap_or(options.max_iter);
    let mut verdict = Verdict::MaxIterations;
    let mut iterations_run = 0;

    for _ in 0..budget {
        let next = match picard_step(&current, coeffs) {
            Ok(next) => next,
            Err(Error::Divergence {
                iterate,
                path,
                node,
            }) => {
                verdict = Verdict::Diverged {
                    iterate,
                    path,
                    node,
                };
                break;
            }
            Err(other) => return Err(other),
        };
        iterations_run += 1;
        let (dist, se) = sup_distance(&current, &next)?;
        successive.push(IterateDistance {
            from: next.iterate - 1,
            to: next.iterate,
            distance: dist,
            se,
        });
        let (mk, sk) = next.moment_profile();
        moments.push(MomentProfile {
            iterate: next.iterate,
            mean_sq: mk,
            se: sk,
        });
        if let Some(h) = history.as_mut() {
            h.push(next.clone());
        }
        current = next;
        if options.force_iterations.is_none() && dist <= options.tol {
            verdict = Verdict::Converged;
            break;
        }
    }
    if options.force_iterations.is_some() && matches!(verdict, Verdict::MaxIterations) {
        // A forced-length run that completed is as converged as it gets.
        verdict = Verdict::Converged;
    }

    let pairwise = match &history {
        Some(h) => {
            let mut pairs = Vec::new();
            for i in 0..h.len() {
                for j in (i + 1)..h.len() {
                    let (dist, se) = sup_distance(&h[i], &h[j])?;
                    pairs.push(IterateDistance {
                        from: i,
                        to: j,
                        distance: dist,
                        se,
                    });
                }
            }
            Some(pairs)
        }
        None => None,
    };

    Ok(SolveOutcome {
        report: ConvergenceReport {
            verdict,
            successive,
            pairwise,
            moments,
            k1,
            c1,
            c2,
            c3,
            e_xi_sq,
            tol: options.tol,
            paths: bundle.path_count(),
            iterations_run,
        },
        ensemble: current,
        history,
    })
}

// ---------------------------------------------------------------------------
// Moment bound check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MomentBoundReport {
    pub bound: f64,
    pub k1: f64,
    pub e_xi_sq: f64,
    pub empirical_max: f64,
    pub se_at_max: f64,
    pub argmax_iterate: usize,
    pub argmax_node: usize,
    pub pass: bool,
    /// The bound formula is stated under T >= 1; for shorter horizons it is
    /// still evaluated but flagged.
    pub horizon_below_one: bool,
}

/// Compare the recorded per-iterate second moments against the cap
/// `4 (1 + E|ξ|²) exp(4 K₁ T²)`; pass iff the empirical maximum stays within
/// five standard errors of the bound.
pub fn moment_bound_check(
    report: &ConvergenceReport,
    coeffs: &CoefficientSet,
    grid: &TimeGrid,
) -> Result<MomentBoundReport> {
    let k1 = match report.k1 {
        Some(k) => k,
        None => growth_constant(coeffs, grid)?,
    };
    let t = grid.horizon();
    let bound = 4.0 * (1.0 + report.e_xi_sq) * (4.0 * k1 * t * t).exp();
    let mut empirical_max = f64::NEG_INFINITY;
    let mut se_at_max = 0.0;
    let mut argmax = (0usize, 0usize);
    for profile in &report.moments {
        for (node, (&m, &s)) in profile.mean_sq.iter().zip(&profile.se).enumerate() {
            if m > empirical_max {
                empirical_max = m;
                se_at_max = s;
                argmax = (profile.iterate, node);
            }
        }
    }
    Ok(MomentBoundReport {
        bound,
        k1,
        e_xi_sq: report.e_xi_sq,
        empirical_max,
        se_at_max,
        argmax_iterate: argmax.0,
        argmax_node: argmax.1,
        pass: empirical_max <= bound + 5.0 * se_at_max,
        horizon_below_one: t < 1.0,
    })
}

// ---------------------------------------------------------------------------
// Pathwise uniqueness replay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// Max over paths and nodes of the replay difference; must be exactly 0.
    pub replay_max_diff: f64,
    /// Max difference between the original run and a run with permuted path
    /// order, compared path-for-path; must be exactly 0.
    pub permuted_max_diff: f64,
    /// Max difference against a run with a different seed; expected nonzero.
    pub distinct_seed_diff: f64,
    pub iterations: usize,
    pub pass: bool,
}

/// Solve twice with the same seed and initial law: trajectories must agree
/// bitwise. Then permute the path order and compare path-for-path, and flip
/// the seed as a sanity inverse. A nonzero replay difference is a determinism
/// bug, reported as [`Error::ReplayBroken`], not a mathematical finding.
pub fn pathwise_uniqueness_check(
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    paths: usize,
    seed: u64,
    options: &SolveOptions,
) -> Result<UniquenessReport> {
    let levy = &coeffs.levy;
    let bundle_a = Arc::new(NoiseBundle::generate(seed, grid, levy, paths)?);
    let run_a = solve(coeffs, &bundle_a, options)?;
    let n_iter = run_a.report.iterations_run;

    let bundle_b = Arc::new(NoiseBundle::generate(seed, grid, levy, paths)?);
    let run_b = solve(coeffs, &bundle_b, options)?;
    let replay_max_diff = max_abs_state_diff(&run_a.ensemble, &run_b.ensemble, |p| p);
    if replay_max_diff != 0.0 {
        return Err(Error::ReplayBroken(format!(
            "same seed produced trajectories differing by {replay_max_diff:e}"
        )));
    }

    // Rotate the path order; path index i sits at a different position but
    // must carry an identical trajectory.
    let rotated: Vec<u64> = (0..paths as u64).map(|i| (i + 1) % paths as u64).collect();
    let bundle_p = Arc::new(NoiseBundle::generate_with_indices(
        seed, grid, levy, &rotated,
    )?);
    let fixed = SolveOptions {
        force_iterations: Some(n_iter),
        keep_history: false,
        ..options.clone()
    };
    let run_p = solve(coeffs, &bundle_p, &fixed)?;
    // Position j in the permuted run holds original path (j + 1) mod n.
    let permuted_max_diff =
        max_abs_state_diff(&run_a.ensemble, &run_p.ensemble, |j| (j + 1) % paths);
    if permuted_max_diff != 0.0 {
        return Err(Error::ReplayBroken(format!(
            "permuted path order changed per-path trajectories by {permuted_max_diff:e}"
        )));
    }

    let bundle_c = Arc::new(NoiseBundle::generate(
        seed ^ 0x9e37_79b9,
        grid,
        levy,
        paths,
    )?);
    let run_c = solve(coeffs, &bundle_c, &fixed)?;
    let distinct_seed_diff = max_abs_state_diff(&run_a.ensemble, &run_c.ensemble, |p| p);

    Ok(UniquenessReport {
        replay_max_diff,
        permuted_max_diff,
        distinct_seed_diff,
        iterations: n_iter,
        pass: true,
    })
}

/// Max over paths/nodes/components of |A[map(p)] − B[p]|.
fn max_abs_state_diff(
    a: &IterateEnsemble,
    b: &IterateEnsemble,
    map: impl Fn(usize) -> usize,
) -> f64 {
    let mut max = 0.0f64;
    for p in 0..b.path_count() {
        let ap = map(p);
        for m in 0..b.nodes {
            for (x, y) in a.state(ap, m).iter().zip(b.state(p, m)) {
                max = max.max((x - y).abs());
            }
        }
    }
    max
}

// ---------------------------------------------------------------------------
// Refinement study for the discretization bias
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RefinementStudy {
    pub level_steps: Vec<usize>,
    /// `|Ê X_M(T) − Ê X_ref(T)|` per level, common random numbers throughout.
    pub errors: Vec<f64>,
    pub error_ses: Vec<f64>,
    /// `errors[i] / errors[i+1]` for consecutive levels, coarse over fine.
    pub ratios: Vec<f64>,
    /// Conservative slope of the O(Δt) bias: max over levels of
    /// error / (Δt_level − Δt_ref).
    pub c_estimate: f64,
    pub ref_steps: usize,
}

/// Solve the same scenario on a ladder of grids sharing one underlying noise
/// realisation (fine bundle coarsened down), and measure each level's
/// terminal-mean displacement from the finest reference. With the noise
/// common across levels the Monte Carlo part cancels and the pure O(Δt)
/// discretization bias shows through.
pub fn mean_refinement_study(
    coeffs: &CoefficientSet,
    horizon: f64,
    level_steps: &[usize],
    ref_steps: usize,
    paths: usize,
    seed: u64,
    options: &SolveOptions,
) -> Result<RefinementStudy> {
    if level_steps.is_empty() {
        return Err(Error::InvalidInput("no refinement levels given".into()));
    }
    for &m in level_steps {
        if !m.is_power_of_two() || m >= ref_steps || !ref_steps.is_multiple_of(m) {
            return Err(Error::InvalidInput(format!(
                "level {m} must be a power-of-two divisor of the reference {ref_steps}"
            )));
        }
    }
    let fine_grid = TimeGrid::new(horizon, ref_steps)?;
    let mut bundles = vec![Arc::new(NoiseBundle::generate(
        seed,
        fine_grid,
        &coeffs.levy,
        paths,
    )?)];
    {
        let mut steps = ref_steps;
        let min_steps = *level_steps.iter().min().unwrap();
        while steps > min_steps {
            let coarser = bundles.last().unwrap().coarsened()?;
            bundles.push(Arc::new(coarser));
            steps /= 2;
        }
    }
    let bundle_for = |steps: usize| -> &Arc<NoiseBundle> {
        bundles
            .iter()
            .find(|b| b.grid().steps() == steps)
            .expect("bundle ladder covers every level")
    };

    let ref_run = solve(coeffs, bundle_for(ref_steps), options)?;

    let mut errors = Vec::new();
    let mut error_ses = Vec::new();
    for &m in level_steps {
        let run = solve(coeffs, bundle_for(m), options)?;
        // Per-path terminal difference to the reference: its mean is the bias
        // gap and its spread gives the honest SE of that gap.
        let d = run.ensemble.dim();
        let paths_n = run.ensemble.path_count();
        let last = run.ensemble.nodes() - 1;
        let ref_last = ref_run.ensemble.nodes() - 1;
        let mut err_sq = 0.0;
        let mut se_sq = 0.0;
        for k in 0..d {
            let diffs: Vec<f64> = (0..paths_n)
                .map(|p| run.ensemble.state(p, last)[k] - ref_run.ensemble.state(p, ref_last)[k])
                .collect();
            let (mean_k, se_k) = mean_se(&diffs);
            err_sq += mean_k * mean_k;
            se_sq += se_k * se_k;
        }
        errors.push(err_sq.sqrt());
        error_ses.push(se_sq.sqrt());
    }
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect::<Vec<f64>>();
    let dt_ref = horizon / ref_steps as f64;
    let c_estimate = level_steps
        .iter()
        .zip(&errors)
        .map(|(&m, &e)| e / (horizon / m as f64 - dt_ref))
        .fold(0.0f64, f64::max);
    Ok(RefinementStudy {
        level_steps: level_steps.to_vec(),
        errors,
        error_ses,
        ratios,
        c_estimate,
        ref_steps,
    })
}
