//! Numerical mapping of the orbits that join equilibrium components.
//!
//! Each component is sampled at random points, perturbed off its tangent
//! space, and integrated in both time directions. A forward run that ends on
//! another component is an arc out of the source; a reversed run that ends on
//! another component is an arc into it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_with, residual, Direction, IntegrationOptions};
use crate::equilibria::{is_completely_degenerate, unique_component, EquilibriumComponent};
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::phasecfg::Configuration;

/// Name of the unique component containing `c` within `tol`; `None` if no
/// component or several match.
pub fn identify_component(c: &Configuration, components: &[EquilibriumComponent], tol: f64) -> Option<String> {
    unique_component(c, components, tol).map(|i| components[i].name.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub perturb_eps: f64,
    /// Used instead of `perturb_eps` at completely degenerate samples.
    pub degenerate_eps: f64,
    pub trials: usize,
    pub dt: f64,
    pub t_end: f64,
    pub stop_residual: f64,
    pub membership_tol: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            perturb_eps: 1e-3,
            degenerate_eps: 1e-2,
            trials: 64,
            dt: 1e-3,
            t_end: 200.0,
            stop_residual: 1e-8,
            membership_tol: 1e-3,
            seed: 0,
        }
    }
}

/// Evidence for one arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub direction: Direction,
    pub start: Configuration,
    pub perturbation: Vec<f64>,
    pub end: Configuration,
    pub final_time: f64,
    /// Membership distance of the endpoint to the component it was labeled
    /// with.
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arc {
    pub source: String,
    pub target: String,
    pub witness_count: usize,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigraphNode {
    pub name: String,
    pub energy: f64,
}

/// A probe run that produced no arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeMiss {
    pub component: String,
    pub trial: usize,
    pub direction: Direction,
    pub reason: String,
    pub final_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeteroclinicDigraph {
    /// Ordered by energy (descending), then name.
    pub nodes: Vec<DigraphNode>,
    /// Ordered by source then target, in node order.
    pub arcs: Vec<Arc>,
    pub misses: Vec<ProbeMiss>,
}

impl HeteroclinicDigraph {
    pub fn new(components: &[EquilibriumComponent]) -> Self {
        let mut nodes: Vec<DigraphNode> = components
            .iter()
            .map(|c| DigraphNode { name: c.name.clone(), energy: c.energy })
            .collect();
        nodes.sort_by(|a, b| b.energy.total_cmp(&a.energy).then_with(|| a.name.cmp(&b.name)));
        Self { nodes, arcs: Vec::new(), misses: Vec::new() }
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_arc(&self, source: &str, target: &str) -> bool {
        self.arcs.iter().any(|a| a.source == source && a.target == target)
    }

    pub fn arc_pairs(&self) -> Vec<(String, String)> {
        self.arcs.iter().map(|a| (a.source.clone(), a.target.clone())).collect()
    }

    fn rank(&self, name: &str) -> usize {
        self.nodes.iter().position(|n| n.name == name).unwrap_or(usize::MAX)
    }
}

/// DOT text with one node per component (annotated with its energy) and one
/// edge per arc (annotated with its witness count).
pub fn export_dot(h: &HeteroclinicDigraph) -> String {
    let mut out = String::from("digraph heteroclinic {\n");
    for node in &h.nodes {
        let _ = writeln!(out, "  \"{0}\" [label=\"{0}\\nE={1}\"];", node.name, node.energy);
    }
    for arc in &h.arcs {
        let _ = writeln!(out, "  \"{}\" -> \"{}\" [label=\"{}\"];", arc.source, arc.target, arc.witness_count);
    }
    out.push_str("}\n");
    out
}

enum Outcome {
    Arc { source: usize, target: usize, witness: Witness },
    Miss(ProbeMiss),
    SelfLoop,
}

/// Probes every component with `opts.trials` random perturbations, each
/// integrated forward and in reversed time.
///
/// Every component must be sampled on genuine equilibria (residual at most
/// `1e-10`), else `NotEquilibrium`.
pub fn probe(g: &Graph, components: &[EquilibriumComponent], opts: &ProbeOptions) -> Result<HeteroclinicDigraph> {
    for comp in components {
        if comp.vertex_count() != g.vertex_count() {
            return Err(Error::LengthMismatch { expected: g.vertex_count(), got: comp.vertex_count() });
        }
        for k in 0..3 {
            let params: Vec<f64> = (0..comp.dim()).map(|i| 0.37 * (i + 1) as f64 + 1.3 * k as f64).collect();
            let r = residual(g, &comp.sample(&params)?)?;
            if r > 1e-10 {
                return Err(Error::NotEquilibrium(r));
            }
        }
    }
    if !(opts.perturb_eps > 0.0 && opts.degenerate_eps > 0.0) {
        return Err(Error::InvalidParameter("perturbation sizes must be positive".into()));
    }

    let tasks: Vec<(usize, usize)> =
        (0..components.len()).flat_map(|c| (0..opts.trials).map(move |t| (c, t))).collect();
    let outcomes: Vec<Result<[Outcome; 2]>> =
        tasks.par_iter().map(|&(c, t)| run_trial(g, components, c, t, opts)).collect();

    let mut h = HeteroclinicDigraph::new(components);
    let mut found: BTreeMap<(usize, usize), Arc> = BTreeMap::new();
    for pair in outcomes {
        for outcome in pair? {
            match outcome {
                Outcome::Arc { source, target, witness } => {
                    let key = (h.rank(&components[source].name), h.rank(&components[target].name));
                    found
                        .entry(key)
                        .and_modify(|a| a.witness_count += 1)
                        .or_insert_with(|| Arc {
                            source: components[source].name.clone(),
                            target: components[target].name.clone(),
                            witness_count: 1,
                            witness,
                        });
                }
                Outcome::Miss(m) => h.misses.push(m),
                Outcome::SelfLoop => {}
            }
        }
    }
    h.arcs = found.into_values().collect();
    Ok(h)
}

fn run_trial(
    g: &Graph,
    components: &[EquilibriumComponent],
    ci: usize,
    trial: usize,
    opts: &ProbeOptions,
) -> Result<[Outcome; 2]> {
    let comp = &components[ci];
    let n = g.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(((ci as u64) << 32) | trial as u64);

    let params: Vec<f64> = (0..comp.dim()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let start = comp.sample(&params)?;
    let eps = if is_completely_degenerate(g, &start, 1e-8).unwrap_or(false) {
        opts.degenerate_eps
    } else {
        opts.perturb_eps
    };

    let mut perturbation: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    for b in comp.tangent_basis() {
        let dot: f64 = perturbation.iter().zip(&b).map(|(x, y)| x * y).sum();
        perturbation.iter_mut().zip(&b).for_each(|(x, y)| *x -= dot * y);
    }
    let norm = perturbation.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        let miss = |direction| {
            Outcome::Miss(ProbeMiss {
                component: comp.name.clone(),
                trial,
                direction,
                reason: "no normal direction".into(),
                final_residual: 0.0,
            })
        };
        return Ok([miss(Direction::Forward), miss(Direction::Reversed)]);
    }
    perturbation.iter_mut().for_each(|x| *x *= eps / norm);
    let c0 = start.displaced(&perturbation)?;

    let integ = IntegrationOptions {
        dt: opts.dt,
        t_end: opts.t_end,
        record_stride: usize::MAX,
        stop_residual: Some(opts.stop_residual),
        energy_ceiling: None,
    };
    let run = |direction: Direction| -> Result<Outcome> {
        let miss = |reason: &str, final_residual: f64| {
            Outcome::Miss(ProbeMiss {
                component: comp.name.clone(),
                trial,
                direction,
                reason: reason.to_string(),
                final_residual,
            })
        };
        let rec = match integrate_with(g, &c0, direction, &integ) {
            Ok(rec) => rec,
            Err(Error::Diverged(_)) => return Ok(miss("diverged", f64::NAN)),
            Err(e) => return Err(e),
        };
        let end = rec.final_state().clone();
        let final_residual = residual(g, &end)?;
        if final_residual >= opts.stop_residual {
            return Ok(miss("not converged", final_residual));
        }
        let Some(other) = unique_component(&end, components, opts.membership_tol) else {
            return Ok(miss("unlabeled endpoint", final_residual));
        };
        if other == ci {
            return Ok(Outcome::SelfLoop);
        }
        let (source, target) = match direction {
            Direction::Forward => (ci, other),
            Direction::Reversed => (other, ci),
        };
        if components[source].energy <= components[target].energy {
            return Ok(miss("energy does not decrease", final_residual));
        }
        if rec.max_energy_violation > 1e-9 {
            return Ok(miss("energy not monotone", final_residual));
        }
        let final_distance = components[other].membership_distance(&end)?;
        Ok(Outcome::Arc {
            source,
            target,
            witness: Witness {
                trial,
                direction,
                start: start.clone(),
                perturbation: perturbation.clone(),
                end,
                final_time: rec.final_time(),
                final_distance,
            },
        })
    };
    Ok([run(Direction::Forward)?, run(Direction::Reversed)?])
}
