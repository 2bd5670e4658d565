//! Families of equilibria: tori built from partitions whose parts only see
//! each other through balanced neighbor sets, aligned equilibria, the
//! complete-bipartite case analysis, and a seeded numerical search.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{energy, residual};
use crate::error::{Error, Result};
use crate::graphs::{Graph, GraphFamily};
use crate::phasecfg::{
    circular_distance, distance_to_line, is_aligned, order_parameter, splay,
    torus_distance, wrap_angle, Configuration,
};
use crate::spectral::{classify, jacobian, spectrum, SpectrumReport, StabilityClass, ZeroTol};

/// Disjoint, non-empty parts covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    parts: Vec<Vec<usize>>,
    #[serde(skip)]
    owner: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut owner = vec![usize::MAX; n];
        for (p, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::InvalidPartition(format!("part {p} is empty")));
            }
            for &v in part {
                if v >= n {
                    return Err(Error::InvalidPartition(format!("vertex {v} out of range")));
                }
                if owner[v] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("vertex {v} in two parts")));
                }
                owner[v] = p;
            }
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidPartition(format!("vertex {v} not covered")));
        }
        Ok(Self { parts, owner })
    }

    /// Number of parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn vertex_count(&self) -> usize {
        self.owner.len()
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.owner[v]
    }
}

/// A partition together with base phases; shifting each part by its own
/// angle sweeps out a torus of configurations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusBase {
    partition: Partition,
    phases: Vec<f64>,
}

impl TorusBase {
    /// `per_part[p]` lists phases in the vertex order of part `p`.
    pub fn new(partition: Partition, per_part: &[Vec<f64>]) -> Result<Self> {
        if per_part.len() != partition.len() {
            return Err(Error::LengthMismatch { expected: partition.len(), got: per_part.len() });
        }
        let mut phases = vec![0.0; partition.vertex_count()];
        for (part, values) in partition.parts().iter().zip(per_part) {
            if part.len() != values.len() {
                return Err(Error::LengthMismatch { expected: part.len(), got: values.len() });
            }
            for (&v, &p) in part.iter().zip(values) {
                if !p.is_finite() {
                    return Err(Error::NonFinite);
                }
                phases[v] = wrap_angle(p);
            }
        }
        Ok(Self { partition, phases })
    }

    pub fn from_configuration(partition: Partition, c: &Configuration) -> Result<Self> {
        if c.len() != partition.vertex_count() {
            return Err(Error::LengthMismatch { expected: partition.vertex_count(), got: c.len() });
        }
        Ok(Self { partition, phases: c.phases().to_vec() })
    }

    /// The `d` six-cycles of the eye graph, each carrying `splay(6, 0)`.
    pub fn eye(d: usize) -> Self {
        let parts = (0..d).map(|i| (6 * i..6 * i + 6).collect()).collect();
        let partition = Partition::new(parts, 6 * d).expect("cycles partition the eye graph");
        let phases = (0..d).flat_map(|_| splay(6, 0.0).into_inner()).collect();
        Self { partition, phases }
    }

    /// The torus the family is built around, where one exists.
    pub fn for_family(family: &GraphFamily) -> Result<Self> {
        family.validate()?;
        match family {
            GraphFamily::Cycle { n } => {
                let partition = Partition::new(vec![(0..*n).collect()], *n)?;
                Ok(Self { partition, phases: splay(*n, 0.0).into_inner() })
            }
            GraphFamily::EyeGd { d } => Ok(Self::eye(*d)),
            GraphFamily::TwoFullyJoinedCycles { n } => {
                let n = *n;
                let partition = Partition::new(vec![(0..n).collect(), (n..2 * n).collect()], 2 * n)?;
                let phases = [splay(n, 0.0).into_inner(), splay(n, 0.0).into_inner()].concat();
                Ok(Self { partition, phases })
            }
            GraphFamily::ParallelJoinedCycles { n, copies } => {
                let half = n * copies;
                let partition =
                    Partition::new(vec![(0..half).collect(), (half..2 * half).collect()], 2 * half)?;
                let cycle = splay(*n, 0.0).into_inner();
                let phases = (0..2 * half).map(|v| cycle[v % n]).collect();
                Ok(Self { partition, phases })
            }
            GraphFamily::Blowup { base, k } => {
                let inner = Self::for_family(base)?;
                let k = *k;
                let parts = inner
                    .partition
                    .parts()
                    .iter()
                    .map(|part| part.iter().flat_map(|&u| (0..k).map(move |c| u * k + c)).collect())
                    .collect();
                let n = inner.phases.len() * k;
                let phases = (0..n).map(|v| inner.phases[v / k]).collect();
                Ok(Self { partition: Partition::new(parts, n)?, phases })
            }
            GraphFamily::AsymmetricEnlargement { base } => {
                let inner = Self::for_family(base)?;
                let mut parts = inner.partition.parts().to_vec();
                let mut phases = inner.phases.clone();
                let n = phases.len();
                let mut next = n;
                for j in 0..n {
                    let p = inner.partition.part_of(j);
                    for _ in 0..=j {
                        parts[p].push(next);
                        phases.push(inner.phases[j]);
                        next += 1;
                    }
                }
                Ok(Self { partition: Partition::new(parts, next)?, phases })
            }
            GraphFamily::Complete { .. } | GraphFamily::CompleteBipartite { .. } => Err(
                Error::Unsupported(format!("no standard torus of equilibria for {family}")),
            ),
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn base_configuration(&self) -> Configuration {
        Configuration::new(self.phases.clone()).expect("finite by construction")
    }

    /// Part `p` shifted by `shifts[p]`.
    pub fn build(&self, shifts: &[f64]) -> Result<Configuration> {
        if shifts.len() != self.partition.len() {
            return Err(Error::LengthMismatch { expected: self.partition.len(), got: shifts.len() });
        }
        let phases = (0..self.phases.len())
            .map(|v| self.phases[v] + shifts[self.partition.part_of(v)])
            .collect();
        Configuration::new(phases)
    }
}

/// Shifts each part's base phases by its own angle.
pub fn build_torus_config(
    base: &[Vec<f64>],
    partition: &Partition,
    shifts: &[f64],
) -> Result<Configuration> {
    TorusBase::new(partition.clone(), base)?.build(shifts)
}

/// How far a configuration is from satisfying the torus conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaDefects {
    /// Largest residual of a part's dynamics restricted to the part.
    pub internal_residual: f64,
    /// Largest `|Σ e^{iθ_k}|` over the neighbors of a vertex inside one
    /// foreign part.
    pub max_imbalance: f64,
}

pub fn lemma_defects(g: &Graph, p: &Partition, c: &Configuration) -> Result<LemmaDefects> {
    if p.vertex_count() != g.vertex_count() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} vertices, graph has {}",
            p.vertex_count(),
            g.vertex_count()
        )));
    }
    if c.len() != g.vertex_count() {
        return Err(Error::LengthMismatch { expected: g.vertex_count(), got: c.len() });
    }
    let th = c.phases();
    let mut internal = 0.0f64;
    let mut imbalance = 0.0f64;
    for j in 0..g.vertex_count() {
        let own = p.part_of(j);
        let mut inside = 0.0;
        let mut foreign: BTreeMap<usize, Complex64> = BTreeMap::new();
        for &k in g.neighbors(j)? {
            let q = p.part_of(k);
            if q == own {
                inside += (th[k] - th[j]).sin();
            } else {
                *foreign.entry(q).or_default() += Complex64::from_polar(1.0, th[k]);
            }
        }
        internal = internal.max(inside.abs());
        imbalance = foreign.values().fold(imbalance, |m, z| m.max(z.norm()));
    }
    Ok(LemmaDefects { internal_residual: internal, max_imbalance: imbalance })
}

/// Every part is an equilibrium of its own induced dynamics, and every
/// vertex sees a balanced set of neighbors in each other part (empty sets
/// count as balanced).
pub fn verify_lemma_conditions(g: &Graph, p: &Partition, c: &Configuration, tol: f64) -> Result<bool> {
    let d = lemma_defects(g, p, c)?;
    Ok(d.internal_residual <= tol && d.max_imbalance <= tol)
}

/// Largest vertex count accepted by [`aligned_equilibria`].
pub const MAX_ALIGNED_VERTICES: usize = 24;

/// One representative (first phase 0) of each of the `2^{n-1}` aligned
/// equilibria. Entry `m` puts vertex `j ≥ 1` at π iff bit `j - 1` of `m` is
/// set, so entry 0 is the synchronized state.
pub fn aligned_equilibria(g: &Graph) -> Result<Vec<Configuration>> {
    let n = g.vertex_count();
    if n > MAX_ALIGNED_VERTICES {
        return Err(Error::TooLarge { n, max: MAX_ALIGNED_VERTICES });
    }
    Ok((0u64..1 << (n - 1))
        .map(|m| {
            let phases =
                (0..n).map(|j| if j > 0 && m >> (j - 1) & 1 == 1 { PI } else { 0.0 }).collect();
            Configuration::new(phases).expect("finite")
        })
        .collect())
}

/// Energy change when the π-side of an aligned configuration is rotated by
/// `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignedDescent {
    /// Edges between the two sides.
    pub cut_edges: usize,
    /// `E(θ) − E(θ̃)`, measured.
    pub energy_drop: f64,
    /// `|E(J,K)| (1 − cos x)`.
    pub predicted_drop: f64,
}

pub fn aligned_descent(g: &Graph, c: &Configuration, x: f64) -> Result<AlignedDescent> {
    let n = g.vertex_count();
    let all: Vec<usize> = (0..n).collect();
    if !is_aligned(c, &all, 1e-8)? {
        return Err(Error::InvalidParameter("configuration is not aligned".into()));
    }
    let th = c.phases();
    let far: Vec<bool> = th.iter().map(|&t| circular_distance(t, th[0]) > PI / 2.0).collect();
    let cut_edges = g.edges().iter().filter(|&&(u, v)| far[u] != far[v]).count();
    let delta: Vec<f64> = far.iter().map(|&f| if f { x } else { 0.0 }).collect();
    let moved = c.displaced(&delta)?;
    Ok(AlignedDescent {
        cut_edges,
        energy_drop: energy(g, c)? - energy(g, &moved)?,
        predicted_drop: cut_edges as f64 * (1.0 - x.cos()),
    })
}

/// Which case of the complete-bipartite classification an equilibrium
/// falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BipartiteCase {
    BothBalanced,
    /// `K` balanced and aligned to the direction of `Σ_{j∈J} e^{iθ_j}`.
    KBalancedAlignedToJ,
    /// `J` balanced and aligned to the direction of `Σ_{k∈K} e^{iθ_k}`.
    JBalancedAlignedToK,
    Aligned,
    NotEquilibrium,
}

/// Classifies `c` as an equilibrium of the complete bipartite graph with
/// sides `j_side` and `k_side`.
///
/// The cases overlap; the first match in this order wins: residual above
/// `tol` gives `NotEquilibrium`, then `Aligned`, `BothBalanced`, and the
/// one-sided cases.
pub fn classify_bipartite(
    c: &Configuration,
    j_side: &[usize],
    k_side: &[usize],
    tol: f64,
) -> Result<BipartiteCase> {
    let n = c.len();
    let mut parts = vec![j_side.to_vec(), k_side.to_vec()];
    for part in &mut parts {
        part.sort_unstable();
    }
    Partition::new(parts, n)?;
    let th = c.phases();

    let side_residual = |a: &[usize], b: &[usize]| {
        a.iter()
            .map(|&j| b.iter().map(|&k| (th[k] - th[j]).sin()).sum::<f64>().abs())
            .fold(0.0, f64::max)
    };
    let res = side_residual(j_side, k_side).max(side_residual(k_side, j_side));
    if res > tol {
        return Ok(BipartiteCase::NotEquilibrium);
    }
    let all: Vec<usize> = (0..n).collect();
    if is_aligned(c, &all, tol)? {
        return Ok(BipartiteCase::Aligned);
    }
    let zj = order_parameter(c, j_side)?;
    let zk = order_parameter(c, k_side)?;
    let (jb, kb) = (zj.norm() <= tol, zk.norm() <= tol);
    let aligned_to = |side: &[usize], z: Complex64| {
        let axis = z.arg();
        side.iter().all(|&v| distance_to_line(th[v] - axis) <= tol / z.norm().min(1.0))
    };
    Ok(match (jb, kb) {
        (true, true) => BipartiteCase::BothBalanced,
        (false, true) if aligned_to(k_side, zj) => BipartiteCase::KBalancedAlignedToJ,
        (true, false) if aligned_to(j_side, zk) => BipartiteCase::JBalancedAlignedToK,
        _ => BipartiteCase::NotEquilibrium,
    })
}

/// Tuning for [`find_equilibria_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Explicit gradient steps applied to every seed before Newton.
    pub descent_steps: usize,
    pub descent_dt: f64,
    /// Results closer than this (up to phase shift) are merged.
    pub dedup_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { newton_tol: 1e-12, max_iter: 100, descent_steps: 5, descent_dt: 0.05, dedup_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub equilibria: Vec<Configuration>,
    pub failures: Vec<SeedFailure>,
}

/// Seeded search with default descent and deduplication settings.
pub fn find_equilibria(
    g: &Graph,
    seeds: &[Configuration],
    newton_tol: f64,
    max_iter: usize,
) -> Result<SearchOutcome> {
    let opts = SearchOptions { newton_tol, max_iter, ..SearchOptions::default() };
    find_equilibria_with(g, seeds, &opts)
}

pub fn find_equilibria_with(
    g: &Graph,
    seeds: &[Configuration],
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    for s in seeds {
        if s.len() != g.vertex_count() {
            return Err(Error::LengthMismatch { expected: g.vertex_count(), got: s.len() });
        }
    }
    let refined: Vec<std::result::Result<Configuration, f64>> =
        seeds.par_iter().map(|s| refine(g, s, opts)).collect();

    let mut out = SearchOutcome { equilibria: Vec::new(), failures: Vec::new() };
    for (seed_index, r) in refined.into_iter().enumerate() {
        match r {
            Ok(c) => {
                let dup = out
                    .equilibria
                    .iter()
                    .any(|e| torus_distance(e, &c).is_ok_and(|d| d <= opts.dedup_tol));
                if !dup {
                    out.equilibria.push(c);
                }
            }
            Err(residual) => out.failures.push(SeedFailure { seed_index, residual }),
        }
    }
    Ok(out)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `rhs` with each phase difference formed exactly (as an unevaluated sum)
/// and compensated accumulation. Near degenerate equilibria the residual
/// vanishes to high order, and the plain version bottoms out at rounding
/// level long before the configuration does.
fn accurate_rhs(g: &Graph, c: &Configuration) -> Vec<f64> {
    let th = c.phases();
    let n = th.len();
    let mut sum = vec![0.0; n];
    let mut comp = vec![0.0; n];
    let mut add = |j: usize, x: f64| {
        let t = sum[j] + x;
        comp[j] += if sum[j].abs() >= x.abs() { (sum[j] - t) + x } else { (x - t) + sum[j] };
        sum[j] = t;
    };
    for &(u, v) in g.edges() {
        // θ_v − θ_u = d + e exactly
        let (a, b) = (th[v], -th[u]);
        let d = a + b;
        let bb = d - a;
        let e = (a - (d - bb)) + (b - bb);
        let s = d.sin() + d.cos() * e;
        add(u, s);
        add(v, -s);
    }
    sum.iter().zip(&comp).map(|(s, c)| s + c).collect()
}

/// Short gradient descent, then damped Gauss–Newton on `rhs_1..rhs_{n-1}`
/// with `θ_0` held fixed. The reduced Jacobian stays singular on manifolds
/// of dimension above one, so steps use its pseudo-inverse. Once the
/// tolerance is met, iteration continues to pin down degenerate directions.
/// Returns the final residual on failure.
fn refine(g: &Graph, seed: &Configuration, opts: &SearchOptions) -> std::result::Result<Configuration, f64> {
    let mut c = seed.clone();
    let mut f = accurate_rhs(g, &c);
    let mut res = max_abs(&f);
    for _ in 0..opts.descent_steps {
        if res <= opts.newton_tol {
            break;
        }
        let step: Vec<f64> = f.iter().map(|x| opts.descent_dt * x).collect();
        c = c.displaced(&step).map_err(|_| f64::NAN)?;
        f = accurate_rhs(g, &c);
        res = max_abs(&f);
    }

    let n = g.vertex_count();
    if n == 1 {
        return Ok(c);
    }
    let mut last_len = f64::INFINITY;
    for _ in 0..opts.max_iter {
        if res == 0.0 {
            break;
        }
        let jac = jacobian(g, &c).map_err(|_| res)?;
        let reduced = jac.view((1, 1), (n - 1, n - 1)).into_owned();
        let rhs_reduced = DVector::from_iterator(n - 1, f[1..].iter().copied());
        let svd = reduced.svd(true, true);
        let cutoff = 1e-14 * svd.singular_values.max().max(1.0);
        let Ok(mut step) = svd.solve(&rhs_reduced, cutoff) else {
            break;
        };
        let len = step.amax();
        if len > 1.0 {
            step /= len;
        }
        let delta_for = |lambda: f64| {
            let mut delta = vec![0.0; n];
            for i in 1..n {
                delta[i] = -lambda * step[i - 1];
            }
            delta
        };

        if res <= opts.newton_tol {
            // Phase rounding leaves a residual floor near 1e-16 that a
            // descent test cannot see past, while the step along degenerate
            // directions is still accurate: take full steps while they stay
            // within tolerance.
            if len < 1e-15 || len >= last_len {
                break;
            }
            last_len = len;
            let trial = c.displaced(&delta_for(1.0)).map_err(|_| res)?;
            let ft = accurate_rhs(g, &trial);
            let rt = max_abs(&ft);
            if rt > opts.newton_tol {
                break;
            }
            (c, f, res) = (trial, ft, rt);
            continue;
        }

        let mut accepted = false;
        let mut lambda = 1.0;
        for _ in 0..30 {
            let trial = c.displaced(&delta_for(lambda)).map_err(|_| res)?;
            let ft = accurate_rhs(g, &trial);
            let rt = max_abs(&ft);
            if rt < res {
                (c, f, res) = (trial, ft, rt);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= opts.newton_tol {
        Ok(c)
    } else {
        Err(res)
    }
}

/// Seeds for [`find_equilibria`]: lattice points with phases in multiples
/// of π/3 (first phase 0, up to a quarter of `count`), then uniform random
/// configurations drawn from `rng_seed`.
pub fn standard_seeds(n: usize, count: usize, rng_seed: u64) -> Vec<Configuration> {
    let mut seeds = Vec::with_capacity(count);
    let lattice_size = 6usize.checked_pow(n.saturating_sub(1) as u32).unwrap_or(usize::MAX);
    let lattice = lattice_size.min(count / 4);
    for m in 0..lattice {
        let mut rest = m;
        let phases = (0..n)
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    let digit = rest % 6;
                    rest /= 6;
                    digit as f64 * PI / 3.0
                }
            })
            .collect();
        seeds.push(Configuration::new(phases).expect("finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    while seeds.len() < count {
        let phases = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        seeds.push(Configuration::new(phases).expect("finite"));
    }
    seeds
}

/// True iff every Jacobian eigenvalue at the equilibrium `c` is within
/// `tol` of zero.
pub fn is_completely_degenerate(g: &Graph, c: &Configuration, tol: f64) -> Result<bool> {
    let r = residual(g, c)?;
    if r > tol {
        return Err(Error::NotEquilibrium(r));
    }
    let report = spectrum(&jacobian(g, c)?, ZeroTol::Absolute(tol))?;
    Ok(report.zero_count == report.len())
}

/// A linear relation `Σ coeffs_k θ_k ≡ target (mod 2π)`. Coefficients sum
/// to zero, so the relation is invariant under phase shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRelation {
    pub coeffs: Vec<i32>,
    pub target: f64,
}

impl PhaseRelation {
    /// `θ_to − θ_from ≡ target`.
    pub fn difference(n: usize, from: usize, to: usize, target: f64) -> Self {
        let mut coeffs = vec![0; n];
        coeffs[to] += 1;
        coeffs[from] -= 1;
        Self { coeffs, target }
    }

    pub fn defect(&self, phases: &[f64]) -> f64 {
        let s: f64 = self.coeffs.iter().zip(phases).map(|(&a, p)| a as f64 * p).sum();
        circular_distance(s, self.target)
    }
}

/// A named, affinely parametrized family of equilibria,
/// `θ = origin + Σ_i params_i · directions_i`, together with the closed-form
/// relations that characterize membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumComponent {
    pub name: String,
    pub energy: f64,
    pub relations: Vec<PhaseRelation>,
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl EquilibriumComponent {
    pub fn new(
        name: &str,
        energy: f64,
        relations: Vec<PhaseRelation>,
        origin: Vec<f64>,
        directions: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = origin.len();
        for r in &relations {
            if r.coeffs.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: r.coeffs.len() });
            }
            if r.coeffs.iter().sum::<i32>() != 0 {
                return Err(Error::InvalidParameter(format!(
                    "relation of {name} is not shift invariant"
                )));
            }
        }
        for d in &directions {
            if d.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: d.len() });
            }
        }
        if directions.is_empty() {
            return Err(Error::InvalidParameter(format!("{name} has no parameters")));
        }
        Ok(Self { name: name.to_string(), energy, relations, origin, directions })
    }

    /// Number of free parameters, the phase shift included.
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.origin.len()
    }

    /// Largest violation of the membership relations.
    pub fn membership_distance(&self, c: &Configuration) -> Result<f64> {
        if c.len() != self.vertex_count() {
            return Err(Error::LengthMismatch { expected: self.vertex_count(), got: c.len() });
        }
        Ok(self.relations.iter().map(|r| r.defect(c.phases())).fold(0.0, f64::max))
    }

    pub fn contains(&self, c: &Configuration, tol: f64) -> bool {
        self.membership_distance(c).is_ok_and(|d| d <= tol)
    }

    pub fn sample(&self, params: &[f64]) -> Result<Configuration> {
        if params.len() != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), got: params.len() });
        }
        let mut phases = self.origin.clone();
        for (dir, t) in self.directions.iter().zip(params) {
            for (p, d) in phases.iter_mut().zip(dir) {
                *p += t * d;
            }
        }
        Configuration::new(phases)
    }

    /// Orthonormal basis of the tangent space.
    pub fn tangent_basis(&self) -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for d in &self.directions {
            let mut v = d.clone();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                basis.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        basis
    }
}

fn component(
    name: &str,
    energy: f64,
    relations: Vec<PhaseRelation>,
    origin: [f64; 4],
    directions: &[[f64; 4]],
) -> EquilibriumComponent {
    EquilibriumComponent::new(
        name,
        energy,
        relations,
        origin.to_vec(),
        directions.iter().map(|d| d.to_vec()).collect(),
    )
    .expect("catalog entries are well formed")
}

const SHIFT: [f64; 4] = [1.0, 1.0, 1.0, 1.0];

/// The synchronized orbit on `n` vertices, energy 0.
pub fn synchronized_component(n: usize) -> EquilibriumComponent {
    let relations = (1..n).map(|k| PhaseRelation::difference(n, 0, k, 0.0)).collect();
    EquilibriumComponent::new("S", 0.0, relations, vec![0.0; n], vec![vec![1.0; n]])
        .expect("well formed")
}

/// Components of the equilibrium set of the complete graph on four
/// vertices: three balanced 2-tori `B1..B3` (energy 8), the aligned orbits
/// `A1..A4` (energy 6) and `S`.
pub fn complete4_components() -> Vec<EquilibriumComponent> {
    let rel = |from, to, t| PhaseRelation::difference(4, from, to, t);
    let mut out = vec![
        component("B1", 8.0, vec![rel(0, 1, PI), rel(2, 3, PI)], [0.0, PI, 0.0, PI], &[
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
        ]),
        component("B2", 8.0, vec![rel(0, 2, PI), rel(1, 3, PI)], [0.0, 0.0, PI, PI], &[
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
        ]),
        component("B3", 8.0, vec![rel(0, 3, PI), rel(1, 2, PI)], [0.0, 0.0, PI, PI], &[
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 1.0, 1.0, 0.0],
        ]),
    ];
    for lone in 0..4 {
        let relations = (0..4).filter(|&k| k != lone).map(|k| rel(lone, k, PI)).collect();
        let mut origin = [PI; 4];
        origin[lone] = 0.0;
        out.push(component(&format!("A{}", lone + 1), 6.0, relations, origin, &[SHIFT]));
    }
    out.push(synchronized_component(4));
    out
}

/// Components of the equilibrium set of the four-cycle: `A5` (energy 8),
/// the 2-tori `B2`, `C1`, `C2` (energy 4) and `S`.
pub fn cycle4_components() -> Vec<EquilibriumComponent> {
    let rel = |from, to, t| PhaseRelation::difference(4, from, to, t);
    vec![
        component(
            "A5",
            8.0,
            vec![rel(0, 1, PI), rel(0, 2, 0.0), rel(0, 3, PI)],
            [0.0, PI, 0.0, PI],
            &[SHIFT],
        ),
        component("B2", 4.0, vec![rel(0, 2, PI), rel(1, 3, PI)], [0.0, 0.0, PI, PI], &[
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
        ]),
        component(
            "C1",
            4.0,
            vec![PhaseRelation { coeffs: vec![1, -2, 1, 0], target: 0.0 }, rel(1, 3, PI)],
            [0.0, 0.0, 0.0, PI],
            &[SHIFT, [-1.0, 0.0, 1.0, 0.0]],
        ),
        component(
            "C2",
            4.0,
            vec![rel(0, 2, PI), PhaseRelation { coeffs: vec![-2, 1, 0, 1], target: 0.0 }],
            [0.0, 0.0, PI, 0.0],
            &[SHIFT, [0.0, 1.0, 0.0, -1.0]],
        ),
        synchronized_component(4),
    ]
}

/// Known component catalog for a family, if there is one.
pub fn catalog_for(family: &GraphFamily) -> Option<Vec<EquilibriumComponent>> {
    match family {
        GraphFamily::Complete { n: 4 } => Some(complete4_components()),
        GraphFamily::Cycle { n: 4 } => Some(cycle4_components()),
        _ => None,
    }
}

/// Index of the unique component containing `c` within `tol`.
pub fn unique_component(c: &Configuration, components: &[EquilibriumComponent], tol: f64) -> Option<usize> {
    let mut hits = components.iter().enumerate().filter(|(_, k)| k.contains(c, tol)).map(|(i, _)| i);
    match (hits.next(), hits.next()) {
        (Some(i), None) => Some(i),
        _ => None,
    }
}

/// JSON record describing one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRecord {
    pub phases: Configuration,
    pub residual: f64,
    pub energy: f64,
    pub spectrum: SpectrumReport,
    pub class: Option<StabilityClass>,
    pub component: Option<String>,
}

/// Residual, energy, spectrum and classification of `c`. The expected
/// manifold dimension is the identified component's, or 1.
pub fn describe(
    g: &Graph,
    c: &Configuration,
    components: &[EquilibriumComponent],
    membership_tol: f64,
) -> Result<EquilibriumRecord> {
    let spectrum = spectrum(&jacobian(g, c)?, ZeroTol::default())?;
    let found = unique_component(c, components, membership_tol);
    let dim = found.map_or(1, |i| components[i].dim());
    Ok(EquilibriumRecord {
        phases: c.clone(),
        residual: residual(g, c)?,
        energy: energy(g, c)?,
        class: classify(&spectrum, dim).ok(),
        spectrum,
        component: found.map(|i| components[i].name.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::generate;
    use crate::phasecfg::DEFAULT_TOL;

    fn family(s: &str) -> Graph {
        generate(&s.parse::<GraphFamily>().unwrap()).unwrap()
    }

    fn cfg(v: &[f64]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0, 1], vec![2]], 3).is_ok());
        assert!(Partition::new(vec![vec![0, 1], vec![]], 2).is_err());
        assert!(Partition::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(Partition::new(vec![vec![0]], 2).is_err());
        assert!(Partition::new(vec![vec![0, 5]], 2).is_err());
    }

    #[test]
    fn lemma_conditions_examples() {
        let eye = family("eye:2");
        let base = TorusBase::eye(2);
        assert!(verify_lemma_conditions(&eye, base.partition(), &base.base_configuration(), DEFAULT_TOL).unwrap());

        let c6 = family("cycle:6");
        let single = Partition::new(vec![(0..6).collect()], 6).unwrap();
        assert!(verify_lemma_conditions(&c6, &single, &splay(6, 0.0), DEFAULT_TOL).unwrap());

        // move one cross-edge endpoint from vertex 3 to vertex 2 of the outer cycle
        let edges: Vec<_> = eye.edges().iter().map(|&(u, v)| if u == 3 && v == 6 { (2, 6) } else { (u, v) }).collect();
        let moved = Graph::new(12, edges).unwrap();
        assert!(!verify_lemma_conditions(&moved, base.partition(), &base.base_configuration(), DEFAULT_TOL).unwrap());

        let wrong = Partition::new(vec![(0..6).collect()], 6).unwrap();
        assert!(verify_lemma_conditions(&eye, &wrong, &base.base_configuration(), DEFAULT_TOL).is_err());
    }

    #[test]
    fn torus_build_examples() {
        let eye = family("eye:2");
        let base = TorusBase::eye(2);
        let c = base.build(&[0.0, PI / 2.0]).unwrap();
        assert!(residual(&eye, &c).unwrap() < 1e-12);
        let same = base.build(&[0.8, 0.8]).unwrap();
        assert!(torus_distance(&same, &base.base_configuration()).unwrap() < 1e-12);
        assert!(base.build(&[0.0]).is_err());

        let parts: Vec<Vec<f64>> = vec![splay(6, 0.0).into_inner(); 2];
        let built = build_torus_config(&parts, base.partition(), &[0.0, PI / 2.0]).unwrap();
        assert_eq!(built, c);
    }

    #[test]
    fn family_tori_satisfy_the_conditions() {
        for s in ["cycle:5", "eye:3", "two-cycles:5", "h36", "h90", "h90-parallel", "asym:eye:2", "blowup:2:asym:cycle:6"] {
            let fam: GraphFamily = s.parse().unwrap();
            let g = generate(&fam).unwrap();
            let base = TorusBase::for_family(&fam).unwrap();
            assert!(
                verify_lemma_conditions(&g, base.partition(), &base.base_configuration(), 1e-10).unwrap(),
                "{s}"
            );
            let shifts: Vec<f64> = (0..base.partition().len()).map(|p| 0.7 * p as f64 + 0.1).collect();
            assert!(residual(&g, &base.build(&shifts).unwrap()).unwrap() < 1e-10, "{s}");
        }
        assert!(TorusBase::for_family(&"complete:4".parse().unwrap()).is_err());
    }

    #[test]
    fn aligned_enumeration() {
        let tri = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let all = aligned_equilibria(&tri).unwrap();
        assert_eq!(all.len(), 4);
        for c in &all {
            assert!(residual(&tri, c).unwrap() < 1e-15);
        }
        let one = aligned_equilibria(&Graph::new(1, Vec::new()).unwrap()).unwrap();
        assert_eq!(one, vec![cfg(&[0.0])]);
        let k4 = aligned_equilibria(&family("complete:4")).unwrap();
        let a1 = cfg(&[0.0, PI, PI, PI]);
        assert!(k4.contains(&a1));
        assert!((energy(&family("complete:4"), &a1).unwrap() - 6.0).abs() < 1e-12);
        let big = Graph::new(25, (0..24).map(|i| (i, i + 1))).unwrap();
        assert_eq!(aligned_equilibria(&big), Err(Error::TooLarge { n: 25, max: 24 }));
    }

    #[test]
    fn aligned_descent_identity() {
        let c6 = family("cycle:6");
        let c = cfg(&[0.0, PI, PI, 0.0, 0.0, 0.0]);
        let d = aligned_descent(&c6, &c, 0.1).unwrap();
        assert_eq!(d.cut_edges, 2);
        assert!(d.energy_drop > 0.0);
        assert!((d.energy_drop - d.predicted_drop).abs() < 1e-12);
        assert!(aligned_descent(&c6, &splay(6, 0.0), 0.1).is_err());
    }

    #[test]
    fn bipartite_examples() {
        let (a, b) = (0.3, 1.9);
        let c4 = cfg(&[a, b, a + PI, b + PI]);
        assert_eq!(classify_bipartite(&c4, &[0, 2], &[1, 3], 1e-9).unwrap(), BipartiteCase::BothBalanced);

        let phi = 0.7;
        let k32 = cfg(&[-phi, 0.0, phi, 0.0, PI]);
        assert_eq!(
            classify_bipartite(&k32, &[0, 1, 2], &[3, 4], 1e-9).unwrap(),
            BipartiteCase::KBalancedAlignedToJ
        );
        let k23 = cfg(&[0.0, PI, -phi, 0.0, phi]);
        assert_eq!(
            classify_bipartite(&k23, &[0, 1], &[2, 3, 4], 1e-9).unwrap(),
            BipartiteCase::JBalancedAlignedToK
        );
        let aligned = cfg(&[0.0, PI, PI, 0.0, PI]);
        assert_eq!(classify_bipartite(&aligned, &[0, 1, 2], &[3, 4], 1e-9).unwrap(), BipartiteCase::Aligned);
        let off = cfg(&[0.0, 0.1, 0.2, 0.3]);
        assert_eq!(classify_bipartite(&off, &[0, 2], &[1, 3], 1e-9).unwrap(), BipartiteCase::NotEquilibrium);
        assert!(classify_bipartite(&off, &[0, 1], &[1, 2, 3], 1e-9).is_err());
        assert!(classify_bipartite(&off, &[0], &[1, 2], 1e-9).is_err());
    }

    #[test]
    fn degeneracy_examples() {
        assert!(is_completely_degenerate(&family("cycle:4"), &splay(4, 0.0), 1e-8).unwrap());
        assert!(!is_completely_degenerate(&family("cycle:6"), &splay(6, 0.0), 1e-8).unwrap());
        assert!(!is_completely_degenerate(&family("complete:4"), &Configuration::synchronized(4, 0.2), 1e-8).unwrap());
        assert!(matches!(
            is_completely_degenerate(&family("cycle:4"), &cfg(&[0.0, 0.1, 0.2, 0.3]), 1e-8),
            Err(Error::NotEquilibrium(_))
        ));
    }

    #[test]
    fn search_keeps_equilibrium_seeds() {
        let k4 = family("complete:4");
        let sync = Configuration::synchronized(4, 0.3);
        let out = find_equilibria(&k4, std::slice::from_ref(&sync), 1e-12, 50).unwrap();
        assert_eq!(out.equilibria, vec![sync]);
        assert!(out.failures.is_empty());
    }

    #[test]
    fn search_deduplicates_shifted_copies() {
        let c4 = family("cycle:4");
        let a5 = cfg(&[0.0, PI, 0.0, PI]);
        let out = find_equilibria(&c4, &[a5.clone(), a5.shifted(1.0), a5.shifted(2.0)], 1e-12, 50).unwrap();
        assert_eq!(out.equilibria.len(), 1);
    }

    #[test]
    fn search_resolves_torus_crossings() {
        // near the crossing of B2 and B3 the residual vanishes to third order
        let k4 = family("complete:4");
        let seed = cfg(&[0.0, 1e-3, PI + 2e-3, PI - 1e-3]);
        let out = find_equilibria(&k4, &[seed], 1e-12, 100).unwrap();
        let catalog = complete4_components();
        let best = catalog
            .iter()
            .map(|k| k.membership_distance(&out.equilibria[0]).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "{best}");
    }

    #[test]
    fn catalogs_are_consistent() {
        for (g, catalog) in [(family("complete:4"), complete4_components()), (family("cycle:4"), cycle4_components())] {
            for comp in &catalog {
                for params in [[0.3, 1.7], [2.2, 4.1], [5.0, 0.9]] {
                    let c = comp.sample(&params[..comp.dim()]).unwrap();
                    assert!(residual(&g, &c).unwrap() <= 1e-10, "{}", comp.name);
                    assert!((energy(&g, &c).unwrap() - comp.energy).abs() <= 1e-10, "{}", comp.name);
                    assert!(comp.contains(&c, 1e-12), "{}", comp.name);
                    assert!(comp.contains(&c.shifted(2.5), 1e-12), "{}", comp.name);
                }
            }
        }
        let k4 = complete4_components();
        let b1 = cfg(&[0.0, PI, 0.3, 0.3 + PI]);
        assert_eq!(unique_component(&b1, &k4, 1e-9).map(|i| k4[i].name.as_str()), Some("B1"));
        let c4 = cycle4_components();
        // the splay state lies on B2, C1 and C2 at once
        assert_eq!(c4.iter().filter(|k| k.contains(&splay(4, 0.0), 1e-9)).count(), 3);
        assert_eq!(unique_component(&splay(4, 0.0), &c4, 1e-9), None);
    }

    #[test]
    fn standard_seeds_are_deterministic() {
        let a = standard_seeds(4, 100, 7);
        assert_eq!(a, standard_seeds(4, 100, 7));
        assert_eq!(a.len(), 100);
        assert_eq!(a[0], Configuration::synchronized(4, 0.0));
        assert_ne!(a[99], standard_seeds(4, 100, 8)[99]);
    }
}
