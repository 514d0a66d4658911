//! Reproducible driving noise: Brownian increments, finite-activity Poisson
//! random measures, and assembled Lévy-type sample paths.
//!
//! All randomness derives from one root seed through counter-based substreams,
//! one per (purpose, path index). Regenerating a bundle with the same seed,
//! grid, and path index reproduces bit-identical content, and distinct paths
//! never share a stream, so per-path work can run on any number of threads
//! without changing results.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad;

/// Attempt budget for rejection sampling of density marks.
const REJECTION_CAP: usize = 100_000;

/// Quadrature tolerance for measure integrals (drift, moments).
const MEASURE_QUAD_TOL: f64 = 1e-11;

/// Counter-based random substream.
pub type Substream = ChaCha12Rng;

/// What a substream is for. The discriminant is baked into the stream id, so
/// streams for different purposes never collide even at equal path index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Brownian = 1,
    Jumps = 2,
    InitialValue = 3,
    Diagnostics = 4,
}

/// Derive the independent substream for `(purpose, path)` under `seed`.
pub fn substream(seed: u64, purpose: StreamPurpose, path: u64) -> Substream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | (path & 0x0000_FFFF_FFFF_FFFF));
    rng
}

// ---------------------------------------------------------------------------
// Time grid
// ---------------------------------------------------------------------------

/// Uniform grid on `[0, T]` with a power-of-two step count, so halving or
/// doubling the resolution keeps every existing node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "horizon must be a positive finite real, got {horizon}"
            )));
        }
        if steps == 0 || !steps.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "steps must be a power of two >= 1, got {steps}"
            )));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node `t_i = i * T / M`, valid for `i <= steps`.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.steps);
        i as f64 * self.horizon / self.steps as f64
    }

    /// Grid with twice the resolution; existing nodes are preserved exactly.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.horizon, self.steps * 2)
    }

    /// Grid with half the resolution, if the step count allows it.
    pub fn coarsened(&self) -> Result<Self> {
        if self.steps < 2 {
            return Err(Error::InvalidInput(
                "cannot coarsen a single-step grid".into(),
            ));
        }
        Self::new(self.horizon, self.steps / 2)
    }
}

// ---------------------------------------------------------------------------
// Jump measure
// ---------------------------------------------------------------------------

/// Density evaluator for a one-dimensional jump measure on `(-c, c)`.
pub type MarkDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum MarkLaw {
    /// Finite list of (mark, mass) pairs; every integral is an exact sum.
    Atoms(Vec<(Vec<f64>, f64)>),
    /// Unnormalised intensity density on `(-c, c)` with total mass
    /// `∫ density = total` and `envelope >= sup density` for rejection.
    Density {
        density: MarkDensity,
        total: f64,
        envelope: f64,
    },
}

/// Finite-activity jump measure supported strictly inside `{|x| < c}`.
///
/// Only `0 < c < ∞` with finite total mass is representable; the boundary
/// cases `c = 0` and `c = ∞` are rejected at construction.
#[derive(Clone)]
pub struct JumpMeasure {
    law: MarkLaw,
    cutoff: f64,
    dim: usize,
}

impl std::fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.law {
            MarkLaw::Atoms(atoms) => f
                .debug_struct("JumpMeasure")
                .field("atoms", &atoms.len())
                .field("mass", &self.total_mass())
                .field("cutoff", &self.cutoff)
                .finish(),
            MarkLaw::Density {
                total, envelope, ..
            } => f
                .debug_struct("JumpMeasure")
                .field("density_mass", total)
                .field("envelope", envelope)
                .field("cutoff", &self.cutoff)
                .finish(),
        }
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

impl JumpMeasure {
    /// The zero measure: no jumps ever. `dim` fixes the mark dimension for
    /// consumers that need one.
    pub fn empty(cutoff: f64, dim: usize) -> Result<Self> {
        Self::check_cutoff(cutoff)?;
        Ok(Self {
            law: MarkLaw::Atoms(Vec::new()),
            cutoff,
            dim,
        })
    }

    /// Atomic measure `ν = Σ massᵢ · δ_{markᵢ}`.
    pub fn atomic(atoms: Vec<(Vec<f64>, f64)>, cutoff: f64) -> Result<Self> {
        Self::check_cutoff(cutoff)?;
        if atoms.is_empty() {
            return Err(Error::Measure(
                "no atoms given; use JumpMeasure::empty for the zero measure".into(),
            ));
        }
        let dim = atoms[0].0.len();
        if dim == 0 {
            return Err(Error::Measure("marks must have dimension >= 1".into()));
        }
        for (mark, mass) in &atoms {
            if mark.len() != dim {
                return Err(Error::Measure(format!(
                    "inconsistent mark dimensions {} vs {dim}",
                    mark.len()
                )));
            }
            if !(mass.is_finite() && *mass > 0.0) {
                return Err(Error::Measure(format!("atom mass must be > 0, got {mass}")));
            }
            let n = norm_sq(mark).sqrt();
            if !(n.is_finite() && n < cutoff) {
                return Err(Error::Measure(format!(
                    "atom mark has |x| = {n}, outside {{|x| < {cutoff}}}"
                )));
            }
        }
        Ok(Self {
            law: MarkLaw::Atoms(atoms),
            cutoff,
            dim,
        })
    }

    /// One-dimensional measure with a bounded intensity density on `(-c, c)`.
    pub fn bounded_density(
        density: MarkDensity,
        total_mass: f64,
        envelope: f64,
        cutoff: f64,
    ) -> Result<Self> {
        Self::check_cutoff(cutoff)?;
        if !(total_mass.is_finite() && total_mass > 0.0) {
            return Err(Error::Measure(format!(
                "total mass must be a positive finite real, got {total_mass}"
            )));
        }
        if !(envelope.is_finite() && envelope > 0.0) {
            return Err(Error::Measure(format!(
                "rejection envelope must be > 0, got {envelope}"
            )));
        }
        Ok(Self {
            law: MarkLaw::Density {
                density,
                total: total_mass,
                envelope,
            },
            cutoff,
            dim: 1,
        })
    }

    fn check_cutoff(cutoff: f64) -> Result<()> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::Measure(format!(
                "cutoff must satisfy 0 < c < inf, got {cutoff}"
            )));
        }
        Ok(())
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Mark dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total mass `ν({|x| < c})`.
    pub fn total_mass(&self) -> f64 {
        match &self.law {
            MarkLaw::Atoms(atoms) => atoms.iter().map(|(_, m)| m).sum(),
            MarkLaw::Density { total, .. } => *total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total_mass() == 0.0
    }

    /// `∫ f(x) ν(dx)`: exact mass-weighted sum for atoms, adaptive quadrature
    /// for densities.
    pub fn integrate_against<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Result<f64> {
        match &self.law {
            MarkLaw::Atoms(atoms) => {
                let mut total = 0.0;
                for (mark, mass) in atoms {
                    total += mass * f(mark);
                }
                Ok(total)
            }
            MarkLaw::Density { density, .. } => {
                let g = |x: f64| f(&[x]) * density(x);
                quad::integrate(g, -self.cutoff, self.cutoff, MEASURE_QUAD_TOL)
            }
        }
    }

    /// `∫ x ν(dx)` — the per-unit-time drift removed by compensation.
    pub fn compensator_drift(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.integrate_against(|x| x[k])?;
        }
        Ok(out)
    }

    /// `∫ |x|² ν(dx)`.
    pub fn second_moment(&self) -> Result<f64> {
        self.integrate_against(norm_sq)
    }

    /// Draw one mark from the normalised law `ν / ν(total)`.
    pub fn sample_mark(&self, stream: &mut Substream) -> Result<Vec<f64>> {
        match &self.law {
            MarkLaw::Atoms(atoms) => {
                let total = self.total_mass();
                let u: f64 = stream.random::<f64>() * total;
                let mut acc = 0.0;
                for (mark, mass) in atoms {
                    acc += mass;
                    if u < acc {
                        return Ok(mark.clone());
                    }
                }
                // Rounding can leave u == total; the last atom owns that edge.
                Ok(atoms.last().expect("non-empty atoms").0.clone())
            }
            MarkLaw::Density {
                density, envelope, ..
            } => {
                for _ in 0..REJECTION_CAP {
                    let x = (2.0 * stream.random::<f64>() - 1.0) * self.cutoff;
                    let d = density(x);
                    if d > *envelope {
                        return Err(Error::Measure(format!(
                            "density {d} exceeds its declared envelope {envelope} at x = {x}"
                        )));
                    }
                    if stream.random::<f64>() * envelope < d {
                        return Ok(vec![x]);
                    }
                }
                Err(Error::SamplingFailure {
                    what: "jump mark".into(),
                    envelope: *envelope,
                    attempts: REJECTION_CAP,
                })
            }
        }
    }
}

/// Data of the driving process: jump measure with its cutoff, plus the
/// Brownian dimension.
#[derive(Debug, Clone)]
pub struct LevyModel {
    pub measure: JumpMeasure,
    pub brownian_dim: usize,
}

impl LevyModel {
    pub fn new(measure: JumpMeasure, brownian_dim: usize) -> Self {
        Self {
            measure,
            brownian_dim,
        }
    }

    /// Pure Brownian driver (empty jump measure).
    pub fn brownian(brownian_dim: usize) -> Self {
        Self {
            measure: JumpMeasure::empty(1.0, 1).expect("valid cutoff"),
            brownian_dim,
        }
    }
}

// ---------------------------------------------------------------------------
// Sampling operations
// ---------------------------------------------------------------------------

/// Number of jumps on `[0, horizon]`: a Poisson draw with mean
/// `ν(total) * horizon`.
pub fn sample_jump_count(
    measure: &JumpMeasure,
    horizon: f64,
    stream: &mut Substream,
) -> Result<u64> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be >= 0, got {horizon}"
        )));
    }
    let mean = measure.total_mass() * horizon;
    if mean == 0.0 {
        return Ok(0);
    }
    let pois =
        Poisson::new(mean).map_err(|e| Error::InvalidInput(format!("poisson mean {mean}: {e}")))?;
    Ok(pois.sample(stream) as u64)
}

/// One jump event: occurrence time in `(0, T]` and its mark.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: Vec<f64>,
}

/// Realise the Poisson random measure on `(0, T]`: Poisson count, i.i.d.
/// uniform times, i.i.d. marks, returned sorted by time.
///
/// Sampling is horizon-global, so the realisation depends on the seed, the
/// horizon, and the measure — never on the grid resolution.
pub fn sample_prm(
    measure: &JumpMeasure,
    grid: &TimeGrid,
    stream: &mut Substream,
) -> Result<Vec<JumpEvent>> {
    let horizon = grid.horizon();
    let count = sample_jump_count(measure, horizon, stream)?;
    let mut events = Vec::with_capacity(count as usize);
    for _ in 0..count {
        // 1 - U maps [0,1) onto (0,1]: times are strictly positive.
        let time = horizon * (1.0 - stream.random::<f64>());
        let mark = measure.sample_mark(stream)?;
        events.push(JumpEvent { time, mark });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(events)
}

/// Independent Gaussian increments, one `r`-vector per grid step, each
/// component N(0, Δt). `r = 0` yields empty vectors.
pub fn brownian_increments(grid: &TimeGrid, r: usize, stream: &mut Substream) -> Vec<Vec<f64>> {
    let scale = grid.dt().sqrt();
    (0..grid.steps())
        .map(|_| {
            (0..r)
                .map(|_| scale * stream.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Noise bundle
// ---------------------------------------------------------------------------

/// Frozen per-path noise: Brownian increments (flat, `steps × r` row-major)
/// and the path's jump events sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathNoise {
    increments: Vec<f64>,
    jumps: Vec<JumpEvent>,
}

impl PathNoise {
    /// Brownian increment vector for one grid step.
    pub fn increment(&self, step: usize, r: usize) -> &[f64] {
        &self.increments[step * r..(step + 1) * r]
    }

    pub fn jumps(&self) -> &[JumpEvent] {
        &self.jumps
    }
}

/// Identity of a bundle; ensembles computed on different bundles refuse to be
/// compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleFingerprint {
    pub seed: u64,
    pub horizon_bits: u64,
    pub steps: usize,
    pub brownian_dim: usize,
    pub path_count: usize,
    pub refinement_level: u32,
    pub indices_hash: u64,
}

/// Common random numbers for one ensemble: every Picard iterate (and every
/// coupled solution) replays exactly this noise. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    seed: u64,
    grid: TimeGrid,
    brownian_dim: usize,
    mark_dim: usize,
    /// `∫ x ν(dx)` of the generating measure, cached for path assembly.
    jump_compensator: Vec<f64>,
    /// How many times this bundle was coarsened since generation; 0 means
    /// the Brownian increments were drawn at this grid directly.
    refinement_level: u32,
    path_indices: Vec<u64>,
    paths: Vec<PathNoise>,
}

fn hash_indices(indices: &[u64]) -> u64 {
    // FNV-1a over the index words; only used to fingerprint permutations.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &i in indices {
        for b in i.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl NoiseBundle {
    /// Generate the bundle for paths `0..path_count`.
    pub fn generate(
        seed: u64,
        grid: TimeGrid,
        levy: &LevyModel,
        path_count: usize,
    ) -> Result<Self> {
        let indices: Vec<u64> = (0..path_count as u64).collect();
        Self::generate_with_indices(seed, grid, levy, &indices)
    }

    /// Generate with explicit path indices. Path `indices[i]` always carries
    /// the same noise no matter where it appears in the list, which is what
    /// makes the shuffled-order replay diagnostic possible.
    pub fn generate_with_indices(
        seed: u64,
        grid: TimeGrid,
        levy: &LevyModel,
        indices: &[u64],
    ) -> Result<Self> {
        let r = levy.brownian_dim;
        let paths: Vec<PathNoise> = indices
            .par_iter()
            .map(|&idx| Self::generate_path(seed, &grid, levy, idx))
            .collect::<Result<_>>()?;
        Ok(Self {
            seed,
            grid,
            brownian_dim: r,
            mark_dim: levy.measure.dim(),
            jump_compensator: levy.measure.compensator_drift()?,
            refinement_level: 0,
            path_indices: indices.to_vec(),
            paths,
        })
    }

    fn generate_path(seed: u64, grid: &TimeGrid, levy: &LevyModel, idx: u64) -> Result<PathNoise> {
        let r = levy.brownian_dim;
        let mut bstream = substream(seed, StreamPurpose::Brownian, idx);
        let scale = grid.dt().sqrt();
        let mut increments = vec![0.0; grid.steps() * r];
        for slot in increments.iter_mut() {
            *slot = scale * bstream.sample::<f64, _>(StandardNormal);
        }
        let mut jstream = substream(seed, StreamPurpose::Jumps, idx);
        let jumps = sample_prm(&levy.measure, grid, &mut jstream)?;
        Ok(PathNoise { increments, jumps })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn brownian_dim(&self) -> usize {
        self.brownian_dim
    }

    pub fn mark_dim(&self) -> usize {
        self.mark_dim
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, i: usize) -> &PathNoise {
        &self.paths[i]
    }

    pub fn path_indices(&self) -> &[u64] {
        &self.path_indices
    }

    pub fn jump_compensator(&self) -> &[f64] {
        &self.jump_compensator
    }

    pub fn refinement_level(&self) -> u32 {
        self.refinement_level
    }

    pub fn fingerprint(&self) -> BundleFingerprint {
        BundleFingerprint {
            seed: self.seed,
            horizon_bits: self.grid.horizon().to_bits(),
            steps: self.grid.steps(),
            brownian_dim: self.brownian_dim,
            path_count: self.paths.len(),
            refinement_level: self.refinement_level,
            indices_hash: hash_indices(&self.path_indices),
        }
    }

    /// Half-resolution view of the same underlying noise: consecutive
    /// Brownian increments are summed pairwise and jump events are shared.
    /// This is the common-random-numbers bridge for refinement studies; it is
    /// not the same as regenerating at the coarse grid.
    pub fn coarsened(&self) -> Result<Self> {
        let grid = self.grid.coarsened()?;
        let r = self.brownian_dim;
        let paths = self
            .paths
            .iter()
            .map(|p| {
                let mut increments = vec![0.0; grid.steps() * r];
                for step in 0..grid.steps() {
                    for k in 0..r {
                        increments[step * r + k] =
                            p.increments[(2 * step) * r + k] + p.increments[(2 * step + 1) * r + k];
                    }
                }
                PathNoise {
                    increments,
                    jumps: p.jumps.clone(),
                }
            })
            .collect();
        Ok(Self {
            seed: self.seed,
            grid,
            brownian_dim: r,
            mark_dim: self.mark_dim,
            jump_compensator: self.jump_compensator.clone(),
            refinement_level: self.refinement_level + 1,
            path_indices: self.path_indices.clone(),
            paths,
        })
    }

    /// Assemble the driving path `L(t_i) = b₁ t_i + B(t_i) + Σ_{τ ≤ t_i} mark
    /// − (∫ x ν) t_i` at the grid nodes from this bundle's stored noise.
    /// `L(0) = 0`.
    pub fn levy_ito_path(&self, path: usize, b1: &[f64]) -> Result<Vec<Vec<f64>>> {
        let dim = b1.len();
        if self.brownian_dim != 0 && self.brownian_dim != dim {
            return Err(Error::InvalidInput(format!(
                "b1 has dimension {dim} but the Brownian part has dimension {}",
                self.brownian_dim
            )));
        }
        let p = &self.paths[path];
        let jumps_active = !p.jumps.is_empty() || self.jump_compensator.iter().any(|&c| c != 0.0);
        if jumps_active && self.mark_dim != dim {
            return Err(Error::InvalidInput(format!(
                "b1 has dimension {dim} but marks have dimension {}",
                self.mark_dim
            )));
        }
        let m = self.grid.steps();
        let mut out = Vec::with_capacity(m + 1);
        let mut acc = vec![0.0; dim];
        out.push(acc.clone());
        let mut jptr = 0;
        for step in 0..m {
            if self.brownian_dim > 0 {
                let db = p.increment(step, self.brownian_dim);
                for (a, d) in acc.iter_mut().zip(db) {
                    *a += d;
                }
            }
            let t_next = self.grid.node(step + 1);
            while jptr < p.jumps.len() && p.jumps[jptr].time <= t_next {
                for (a, m) in acc.iter_mut().zip(&p.jumps[jptr].mark) {
                    *a += m;
                }
                jptr += 1;
            }
            let mut node_val = vec![0.0; dim];
            for k in 0..dim {
                let comp = if self.jump_compensator.len() == dim {
                    self.jump_compensator[k]
                } else {
                    0.0
                };
                node_val[k] = acc[k] + (b1[k] - comp) * t_next;
            }
            out.push(node_val);
        }
        Ok(out)
    }

    // -- snapshot ----------------------------------------------------------

    /// Write a bit-exact structured-text snapshot. Floats are serialised as
    /// their IEEE-754 bit patterns in hex, so a round trip reproduces every
    /// value exactly.
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "levy-noise-snapshot v1")?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "horizon {:016x}", self.grid.horizon().to_bits())?;
        writeln!(w, "steps {}", self.grid.steps())?;
        writeln!(w, "brownian_dim {}", self.brownian_dim)?;
        writeln!(w, "mark_dim {}", self.mark_dim)?;
        writeln!(w, "refinement_level {}", self.refinement_level)?;
        write!(w, "compensator")?;
        for v in &self.jump_compensator {
            write!(w, " {:016x}", v.to_bits())?;
        }
        writeln!(w)?;
        writeln!(w, "paths {}", self.paths.len())?;
        for (i, p) in self.paths.iter().enumerate() {
            writeln!(w, "path {}", self.path_indices[i])?;
            write!(w, "db")?;
            for v in &p.increments {
                write!(w, " {:016x}", v.to_bits())?;
            }
            writeln!(w)?;
            writeln!(w, "jumps {}", p.jumps.len())?;
            for j in &p.jumps {
                write!(w, "j {:016x}", j.time.to_bits())?;
                for v in &j.mark {
                    write!(w, " {:016x}", v.to_bits())?;
                }
                writeln!(w)?;
            }
        }
        writeln!(w, "end")?;
        Ok(())
    }

    /// Read a snapshot produced by [`NoiseBundle::write_snapshot`].
    pub fn read_snapshot<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Snapshot(format!("unexpected end of input, wanted {what}")))?
                .map_err(Error::Io)
        };
        fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| Error::Snapshot(format!("expected `{key} ...`, got `{line}`")))
        }
        fn parse_u64(s: &str) -> Result<u64> {
            s.parse()
                .map_err(|e| Error::Snapshot(format!("bad integer `{s}`: {e}")))
        }
        fn parse_f64_bits(s: &str) -> Result<f64> {
            u64::from_str_radix(s, 16)
                .map(f64::from_bits)
                .map_err(|e| Error::Snapshot(format!("bad hex float `{s}`: {e}")))
        }
        fn parse_f64_list(rest: &str) -> Result<Vec<f64>> {
            rest.split_whitespace().map(parse_f64_bits).collect()
        }

        let header = next("header")?;
        if header != "levy-noise-snapshot v1" {
            return Err(Error::Snapshot(format!("unknown header `{header}`")));
        }
        let seed = parse_u64(field(&next("seed")?, "seed")?)?;
        let horizon = parse_f64_bits(field(&next("horizon")?, "horizon")?)?;
        let steps = parse_u64(field(&next("steps")?, "steps")?)? as usize;
        let brownian_dim = parse_u64(field(&next("brownian_dim")?, "brownian_dim")?)? as usize;
        let mark_dim = parse_u64(field(&next("mark_dim")?, "mark_dim")?)? as usize;
        let refinement_level =
            parse_u64(field(&next("refinement_level")?, "refinement_level")?)? as u32;
        let comp_line = next("compensator")?;
        let jump_compensator = if comp_line == "compensator" {
            Vec::new()
        } else {
            parse_f64_list(field(&comp_line, "compensator")?)?
        };
        let path_count = parse_u64(field(&next("paths")?, "paths")?)? as usize;
        let grid = TimeGrid::new(horizon, steps)?;

        let mut path_indices = Vec::with_capacity(path_count);
        let mut paths = Vec::with_capacity(path_count);
        for _ in 0..path_count {
            path_indices.push(parse_u64(field(&next("path")?, "path")?)?);
            let db_line = next("db")?;
            let increments = if db_line == "db" {
                Vec::new()
            } else {
                parse_f64_list(field(&db_line, "db")?)?
            };
            if increments.len() != steps * brownian_dim {
                return Err(Error::Snapshot(format!(
                    "expected {} increments, got {}",
                    steps * brownian_dim,
                    increments.len()
                )));
            }
            let jump_count = parse_u64(field(&next("jumps")?, "jumps")?)? as usize;
            let mut jumps = Vec::with_capacity(jump_count);
            for _ in 0..jump_count {
                let vals = parse_f64_list(field(&next("jump")?, "j")?)?;
                if vals.len() != 1 + mark_dim {
                    return Err(Error::Snapshot(format!(
                        "jump record has {} fields, expected {}",
                        vals.len(),
                        1 + mark_dim
                    )));
                }
                jumps.push(JumpEvent {
                    time: vals[0],
                    mark: vals[1..].to_vec(),
                });
            }
            paths.push(PathNoise { increments, jumps });
        }
        let end = next("end")?;
        if end != "end" {
            return Err(Error::Snapshot(format!(
                "expected trailer `end`, got `{end}`"
            )));
        }
        Ok(Self {
            seed,
            grid,
            brownian_dim,
            mark_dim,
            jump_compensator,
            refinement_level,
            path_indices,
            paths,
        })
    }
}
