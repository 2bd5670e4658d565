//! The coupled phase dynamics `θ̇_j = Σ_{k ∈ N(j)} sin(θ_k − θ_j)`, its
//! energy, and fixed-step RK4 trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::phasecfg::{check_len, wrap_angle, Configuration};

/// Right-hand side of the dynamics, accumulated vertex by vertex.
pub fn rhs(g: &Graph, c: &Configuration) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), c.len())?;
    let p = c.phases();
    Ok((0..g.vertex_count())
        .map(|j| {
            let nbrs = g.neighbors(j).expect("j < n");
            nbrs.iter().map(|&k| (p[k] - p[j]).sin()).sum()
        })
        .collect())
}

/// `E(θ) = Σ_{jk ∈ E} (1 − cos(θ_j − θ_k))`, each edge once.
pub fn energy(g: &Graph, c: &Configuration) -> Result<f64> {
    check_len(g.vertex_count(), c.len())?;
    Ok(energy_of(g, c.phases()))
}

fn energy_of(g: &Graph, p: &[f64]) -> f64 {
    g.edges().iter().map(|&(u, v)| 1.0 - (p[u] - p[v]).cos()).sum()
}

/// Analytic gradient of [`energy`], accumulated edge by edge. Equals
/// `-rhs` identically.
pub fn energy_gradient(g: &Graph, c: &Configuration) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), c.len())?;
    let p = c.phases();
    let mut grad = vec![0.0; p.len()];
    for &(u, v) in g.edges() {
        let s = (p[u] - p[v]).sin();
        grad[u] += s;
        grad[v] -= s;
    }
    Ok(grad)
}

/// Max-norm of the right-hand side; zero exactly at equilibria.
pub fn residual(g: &Graph, c: &Configuration) -> Result<f64> {
    Ok(rhs(g, c)?.iter().fold(0.0, |m, x| m.max(x.abs())))
}

// Edge-wise right-hand side on raw (unwrapped) phases; the integrator's
// inner loop.
fn rhs_into(g: &Graph, p: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for &(u, v) in g.edges() {
        let s = (p[v] - p[u]).sin();
        out[u] += s;
        out[v] -= s;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reversed,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reversed => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `record_stride`-th state; the first and last are always kept.
    pub record_stride: usize,
    /// Stop as soon as the residual drops below this value.
    pub stop_residual: Option<f64>,
    /// Stop once the energy exceeds this value. Defaults to `2·|E|`, the
    /// largest energy any configuration can reach.
    pub energy_ceiling: Option<f64>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 200.0, record_stride: 1, stop_residual: None, energy_ceiling: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ReachedEnd,
    Converged,
    EnergyCeiling,
}

/// A sampled trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub direction: Direction,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Configuration>,
    pub energies: Vec<f64>,
    pub stop: StopReason,
    /// Largest single-step energy change against the flow direction
    /// (an increase in forward time), over every step taken, not only the
    /// recorded ones.
    pub max_energy_violation: f64,
    pub final_residual: f64,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &Configuration {
        self.states.last().expect("a record always holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// CSV with columns `t, theta_0..theta_{n-1}, E`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Configuration::len);
        let mut out = String::from("t");
        for j in 0..n {
            out.push_str(&format!(",theta_{j}"));
        }
        out.push_str(",E\n");
        for ((t, s), e) in self.times.iter().zip(&self.states).zip(&self.energies) {
            out.push_str(&t.to_string());
            for p in s.phases() {
                out.push(',');
                out.push_str(&p.to_string());
            }
            out.push_str(&format!(",{e}\n"));
        }
        out
    }
}

/// Classical RK4 with fixed step `dt` up to `t_end`, using default options.
pub fn integrate(
    g: &Graph,
    c0: &Configuration,
    dt: f64,
    t_end: f64,
    direction: Direction,
) -> Result<TrajectoryRecord> {
    let opts = IntegrationOptions { dt, t_end, ..IntegrationOptions::default() };
    integrate_with(g, c0, direction, &opts)
}

/// Classical RK4 on `±rhs`. Phases are re-wrapped into `[0, 2π)` after every
/// step.
pub fn integrate_with(
    g: &Graph,
    c0: &Configuration,
    direction: Direction,
    opts: &IntegrationOptions,
) -> Result<TrajectoryRecord> {
    let n = g.vertex_count();
    check_len(n, c0.len())?;
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be positive, got {}", opts.t_end)));
    }
    let stride = opts.record_stride.max(1);
    let sign = direction.sign();
    let ceiling = opts.energy_ceiling.unwrap_or(2.0 * g.edge_count() as f64);

    let mut state = c0.phases().to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];

    let mut energy = energy_of(g, &state);
    let mut rec = TrajectoryRecord {
        direction,
        dt: opts.dt,
        times: vec![0.0],
        states: vec![c0.clone()],
        energies: vec![energy],
        stop: StopReason::ReachedEnd,
        max_energy_violation: 0.0,
        final_residual: 0.0,
    };

    let steps = (opts.t_end / opts.dt - 1e-9).ceil().max(1.0) as usize;
    let mut t = 0.0;
    let mut recorded_last = true;
    for step in 0..steps {
        rhs_into(g, &state, &mut k1);
        let res = k1.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        rec.final_residual = res;
        if opts.stop_residual.is_some_and(|tol| res < tol) {
            rec.stop = StopReason::Converged;
            break;
        }
        if energy > ceiling + 1e-9 {
            rec.stop = StopReason::EnergyCeiling;
            break;
        }

        let h = sign * (opts.dt.min(opts.t_end - t));
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * h * k1[i];
        }
        rhs_into(g, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * h * k2[i];
        }
        rhs_into(g, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = state[i] + h * k3[i];
        }
        rhs_into(g, &tmp, &mut k4);
        for i in 0..n {
            state[i] = wrap_angle(state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        t = if step + 1 == steps { opts.t_end } else { (step + 1) as f64 * opts.dt };
        if state.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged(t));
        }

        let next = energy_of(g, &state);
        let violation = match direction {
            Direction::Forward => next - energy,
            Direction::Reversed => energy - next,
        };
        rec.max_energy_violation = rec.max_energy_violation.max(violation);
        energy = next;

        recorded_last = (step + 1) % stride == 0;
        if recorded_last {
            rec.times.push(t);
            rec.states.push(Configuration::new(state.clone())?);
            rec.energies.push(energy);
        }
    }
    if !recorded_last {
        rec.times.push(t);
        rec.states.push(Configuration::new(state.clone())?);
        rec.energies.push(energy);
    }
    if rec.stop == StopReason::ReachedEnd {
        rhs_into(g, &state, &mut k1);
        rec.final_residual = k1.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate, GraphFamily};
    use crate::phasecfg::{splay, torus_distance};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn family(s: &str) -> Graph {
        generate(&s.parse::<GraphFamily>().unwrap()).unwrap()
    }

    fn edge() -> Graph {
        Graph::new(2, [(0, 1)]).unwrap()
    }

    fn cfg(v: &[f64]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let k5 = family("complete:5");
        assert!(rhs(&k5, &Configuration::synchronized(5, 0.3)).unwrap().iter().all(|&x| x == 0.0));
        for alpha in [0.0, 1.0, 4.0] {
            let r = rhs(&family("cycle:6"), &splay(6, alpha)).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-14), "{r:?}");
        }
        let r = rhs(&edge(), &cfg(&[0.0, PI / 2.0])).unwrap();
        assert_abs_diff_eq!(r[0], 1.0);
        assert_abs_diff_eq!(r[1], -1.0);
        assert!(rhs(&edge(), &cfg(&[0.0])).is_err());
    }

    #[test]
    fn energy_examples() {
        let k4 = family("complete:4");
        assert_eq!(energy(&k4, &Configuration::synchronized(4, 2.0)).unwrap(), 0.0);
        let (a, b) = (0.4, 2.1);
        assert_abs_diff_eq!(energy(&k4, &cfg(&[a, a + PI, b, b + PI])).unwrap(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(energy(&k4, &cfg(&[a, a + PI, a + PI, a + PI])).unwrap(), 6.0, epsilon = 1e-12);
        let c4 = family("cycle:4");
        assert_abs_diff_eq!(energy(&c4, &cfg(&[a, b, a + PI, b + PI])).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let g = energy_gradient(&edge(), &cfg(&[0.0, PI / 2.0])).unwrap();
        assert_abs_diff_eq!(g[0], -1.0);
        assert_abs_diff_eq!(g[1], 1.0);
        let sync = energy_gradient(&family("eye:2"), &Configuration::synchronized(12, 1.0)).unwrap();
        assert!(sync.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn residual_examples() {
        assert_eq!(residual(&family("complete:7"), &Configuration::synchronized(7, 0.0)).unwrap(), 0.0);
        assert!(residual(&family("cycle:6"), &splay(6, 0.0)).unwrap() < 1e-14);
        assert_abs_diff_eq!(residual(&edge(), &cfg(&[0.0, PI / 2.0])).unwrap(), 1.0);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let c6 = family("cycle:6");
        let c0 = splay(6, 0.3);
        let rec = integrate(&c6, &c0, 1e-3, 5.0, Direction::Forward).unwrap();
        assert!(torus_distance(rec.final_state(), &c0).unwrap() < 1e-9);
    }

    #[test]
    fn single_edge_synchronizes() {
        // oracle: the same run at a hundred times finer step
        let c0 = cfg(&[0.0, PI - 0.1]);
        let coarse = integrate(&edge(), &c0, 1e-3, 50.0, Direction::Forward).unwrap();
        let fine = integrate(&edge(), &c0, 1e-5, 50.0, Direction::Forward).unwrap();
        let sync = Configuration::synchronized(2, 0.0);
        assert!(torus_distance(coarse.final_state(), &sync).unwrap() < 1e-3);
        assert!(torus_distance(coarse.final_state(), fine.final_state()).unwrap() < 1e-9);
        assert_eq!(coarse.times.len(), 50_001);
        assert_abs_diff_eq!(coarse.final_time(), 50.0);
    }

    #[test]
    fn reversed_run_climbs_energy() {
        let k4 = family("complete:4");
        let start = cfg(&[0.01, PI - 0.02, PI + 0.015, PI]);
        let opts = IntegrationOptions { t_end: 40.0, record_stride: 100, ..Default::default() };
        let rec = integrate_with(&k4, &start, Direction::Reversed, &opts).unwrap();
        assert!(rec.energies[0] < 6.01);
        assert!(*rec.energies.last().unwrap() > 7.99);
        assert!(rec.max_energy_violation < 1e-9);
    }

    #[test]
    fn rejects_bad_steps() {
        let c0 = cfg(&[0.0, 1.0]);
        assert!(integrate(&edge(), &c0, 0.0, 1.0, Direction::Forward).is_err());
        assert!(integrate(&edge(), &c0, 1e-3, -1.0, Direction::Forward).is_err());
    }

    #[test]
    fn csv_layout() {
        let opts = IntegrationOptions { dt: 0.5, t_end: 1.0, ..Default::default() };
        let rec = integrate_with(&edge(), &cfg(&[0.0, 0.0]), Direction::Forward, &opts).unwrap();
        let csv = rec.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,theta_0,theta_1,E");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,0,0");
    }

    fn graphs() -> Vec<Graph> {
        ["cycle:6", "complete:4", "eye:2"].iter().map(|s| family(s)).collect()
    }

    proptest! {
        #[test]
        fn gradient_matches_negative_rhs(seed in prop::collection::vec(0.0..TAU, 12)) {
            for g in graphs() {
                let c = Configuration::new(seed[..g.vertex_count()].to_vec()).unwrap();
                let r = rhs(&g, &c).unwrap();
                let grad = energy_gradient(&g, &c).unwrap();
                for (a, b) in r.iter().zip(&grad) {
                    prop_assert!((a + b).abs() < 1e-13);
                }
                prop_assert!(r.iter().sum::<f64>().abs() < 1e-12);
            }
        }

        #[test]
        fn shift_equivariance(seed in prop::collection::vec(0.0..TAU, 12), s in -5.0..5.0f64) {
            for g in graphs() {
                let c = Configuration::new(seed[..g.vertex_count()].to_vec()).unwrap();
                let (r0, r1) = (rhs(&g, &c).unwrap(), rhs(&g, &c.shifted(s)).unwrap());
                for (a, b) in r0.iter().zip(&r1) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
                prop_assert!((energy(&g, &c).unwrap() - energy(&g, &c.shifted(s)).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn forward_energy_is_non_increasing(seed in prop::collection::vec(0.0..TAU, 6)) {
            let c = Configuration::new(seed).unwrap();
            let opts = IntegrationOptions { dt: 1e-2, t_end: 5.0, ..Default::default() };
            let rec = integrate_with(&family("cycle:6"), &c, Direction::Forward, &opts).unwrap();
            prop_assert!(rec.max_energy_violation <= 1e-9);
            for w in rec.energies.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }
}
