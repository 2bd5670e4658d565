//! Phase configurations on the torus.
//!
//! A [`Configuration`] stores every phase reduced to `[0, 2π)`. Comparisons
//! between phases always go through [`circular_distance`].

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the balanced and aligned predicates.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// Distance from an angle difference to the nearest of `{0, π}`.
pub fn distance_to_line(d: f64) -> f64 {
    circular_distance(d, 0.0).min(circular_distance(d, PI))
}

/// A vector of phases on the n-torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Configuration(Vec<f64>);

impl Configuration {
    /// Wraps every phase into `[0, 2π)`. Rejects non-finite input.
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(phases.into_iter().map(wrap_angle).collect()))
    }

    /// All phases equal to `alpha`.
    pub fn synchronized(n: usize, alpha: f64) -> Self {
        Self(vec![wrap_angle(alpha); n])
    }

    pub fn phases(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Adds `s` to every phase.
    pub fn shifted(&self, s: f64) -> Self {
        Self(self.0.iter().map(|p| wrap_angle(p + s)).collect())
    }

    /// Adds a per-vertex displacement.
    pub fn displaced(&self, delta: &[f64]) -> Result<Self> {
        check_len(self.len(), delta.len())?;
        Configuration::new(self.0.iter().zip(delta).map(|(p, d)| p + d).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Configuration {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Configuration::new(v)
    }
}

impl From<Configuration> for Vec<f64> {
    fn from(c: Configuration) -> Self {
        c.0
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut seen = vec![false; n];
    for &v in subset {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidSubset(format!("vertex {v} listed twice")));
        }
    }
    Ok(())
}

/// `Σ_{k ∈ subset} e^{iθ_k}`.
pub fn order_parameter(c: &Configuration, subset: &[usize]) -> Result<Complex64> {
    check_subset(c.len(), subset)?;
    Ok(subset.iter().map(|&k| Complex64::from_polar(1.0, c.0[k])).sum())
}

/// True iff `|Σ_{k ∈ subset} e^{iθ_k}| ≤ tol`.
pub fn is_balanced(c: &Configuration, subset: &[usize], tol: f64) -> Result<bool> {
    Ok(order_parameter(c, subset)?.norm() <= tol)
}

/// True iff every pairwise phase difference within `subset` is within `tol`
/// of 0 or π.
pub fn is_aligned(c: &Configuration, subset: &[usize], tol: f64) -> Result<bool> {
    check_subset(c.len(), subset)?;
    let p = &c.0;
    Ok(subset.iter().enumerate().all(|(i, &j)| {
        subset[i + 1..].iter().all(|&k| distance_to_line(p[j] - p[k]) <= tol)
    }))
}

/// Splay state with phases `2kπ/n + alpha` for `k = 1..=n`.
pub fn splay(n: usize, alpha: f64) -> Configuration {
    let phases = (1..=n).map(|k| wrap_angle(TAU * k as f64 / n as f64 + alpha)).collect();
    Configuration(phases)
}

/// Gauge-fixed representative: the first phase becomes 0.
pub fn canonicalize(c: &Configuration) -> Configuration {
    match c.0.first() {
        Some(&first) => Configuration(c.0.iter().map(|p| wrap_angle(p - first)).collect()),
        None => c.clone(),
    }
}

/// The shift `s` minimizing `max_k dist(a_k + s, b_k)` and the attained
/// value.
///
/// The componentwise offsets `b_k - a_k` are points on the circle; the
/// best shift is the center of the shortest arc covering them all, which is
/// the complement of the largest gap between consecutive offsets.
pub fn optimal_shift(a: &Configuration, b: &Configuration) -> Result<(f64, f64)> {
    check_len(a.len(), b.len())?;
    if a.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut offsets: Vec<f64> = a.0.iter().zip(&b.0).map(|(x, y)| wrap_angle(y - x)).collect();
    offsets.sort_by(f64::total_cmp);

    let last = offsets.len() - 1;
    // gap ending at index i (the arc from offsets[i-1] to offsets[i])
    let mut best_gap = offsets[0] + TAU - offsets[last];
    let mut best_end = 0;
    for i in 1..offsets.len() {
        let gap = offsets[i] - offsets[i - 1];
        if gap > best_gap {
            best_gap = gap;
            best_end = i;
        }
    }
    let start = offsets[best_end];
    let span = TAU - best_gap;
    Ok((wrap_angle(start + span / 2.0), span / 2.0))
}

/// Max-norm distance between `a` and `b` up to a global phase shift. Zero
/// exactly on phase-shift orbits.
pub fn torus_distance(a: &Configuration, b: &Configuration) -> Result<f64> {
    optimal_shift(a, b).map(|(_, d)| d)
}

/// The open chain of unit steps `u_m = Σ_{k ≤ m} e^{iθ_k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonLinkage {
    /// `u_1, …, u_n`; the chain starts at the origin `u_0`.
    pub points: Vec<[f64; 2]>,
    /// Whether the source configuration is balanced at [`DEFAULT_TOL`].
    pub closed: bool,
}

impl PolygonLinkage {
    /// `|u_n|`, which equals the modulus of the order parameter.
    pub fn closure_defect(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p[0].hypot(p[1]))
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let mut prev = [0.0, 0.0];
        self.points
            .iter()
            .map(|p| {
                let len = (p[0] - prev[0]).hypot(p[1] - prev[1]);
                prev = *p;
                len
            })
            .collect()
    }
}

pub fn linkage(c: &Configuration) -> PolygonLinkage {
    let mut acc = [0.0, 0.0];
    let points: Vec<[f64; 2]> = c
        .0
        .iter()
        .map(|t| {
            acc[0] += t.cos();
            acc[1] += t.sin();
            acc
        })
        .collect();
    let closed = acc[0].hypot(acc[1]) <= DEFAULT_TOL;
    PolygonLinkage { points, closed }
}

/// Rank of the differential of `θ ↦ (Σ cos θ_k, Σ sin θ_k)` at a balanced
/// configuration. Rank 2 means the balanced set is locally a manifold of
/// dimension `n - 2`; rank at most 1 marks a singular point.
pub fn balanced_tangent_rank(c: &Configuration, tol: f64) -> Result<usize> {
    let all: Vec<usize> = (0..c.len()).collect();
    let modulus = order_parameter(c, &all)?.norm();
    if modulus > tol {
        return Err(Error::NotBalanced(modulus));
    }
    let n = c.len();
    let differential = DMatrix::from_fn(2, n, |row, k| {
        let t = c.0[k];
        if row == 0 {
            -t.sin()
        } else {
            t.cos()
        }
    });
    let sv = differential.singular_values();
    let scale = sv.max().max(1.0);
    Ok(sv.iter().filter(|&&s| s > tol * scale).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(v: &[f64]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn balanced_examples() {
        assert!(is_balanced(&cfg(&[0.0, PI]), &[0, 1], DEFAULT_TOL).unwrap());
        for alpha in [0.0, 0.4, 2.0, 5.9] {
            assert!(is_balanced(&splay(6, alpha), &[0, 1, 2, 3, 4, 5], DEFAULT_TOL).unwrap());
        }
        assert!(!is_balanced(&cfg(&[0.0, 0.0, PI]), &[0, 1, 2], DEFAULT_TOL).unwrap());
        assert_eq!(is_balanced(&cfg(&[0.0]), &[], DEFAULT_TOL), Err(Error::EmptySubset));
        assert!(is_balanced(&cfg(&[0.0]), &[0, 0], DEFAULT_TOL).is_err());
    }

    #[test]
    fn aligned_examples() {
        assert!(is_aligned(&cfg(&[0.0, PI, 0.0]), &[0, 1, 2], DEFAULT_TOL).unwrap());
        assert!(!is_aligned(&cfg(&[0.0, PI / 2.0]), &[0, 1], DEFAULT_TOL).unwrap());
        let sync = Configuration::synchronized(5, 1.1);
        assert!(is_aligned(&sync, &[0, 1, 2, 3, 4], DEFAULT_TOL).unwrap());
        assert_eq!(is_aligned(&sync, &[], DEFAULT_TOL), Err(Error::EmptySubset));
    }

    #[test]
    fn splay_examples() {
        let s = splay(6, 0.0);
        let expected = [PI / 3.0, 2.0 * PI / 3.0, PI, 4.0 * PI / 3.0, 5.0 * PI / 3.0, 0.0];
        for (a, b) in s.phases().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(splay(1, 0.7).phases()[0], 0.7, epsilon = 1e-15);
        assert!(is_balanced(&splay(5, 0.0), &[0, 1, 2, 3, 4], DEFAULT_TOL).unwrap());
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&Configuration::synchronized(3, 2.5)).phases(), &[0.0; 3]);
        let c = canonicalize(&cfg(&[PI / 2.0, PI]));
        assert_abs_diff_eq!(c.phases()[0], 0.0);
        assert_abs_diff_eq!(c.phases()[1], PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn torus_distance_examples() {
        let a = cfg(&[0.1, 2.0, 4.0, 6.0]);
        assert_abs_diff_eq!(torus_distance(&a, &a.shifted(1.3)).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(torus_distance(&cfg(&[0.0, 0.0]), &cfg(&[0.0, PI])).unwrap(), PI / 2.0);
        let d = torus_distance(&splay(6, 0.0), &splay(6, PI / 7.0)).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        assert!(torus_distance(&cfg(&[0.0]), &cfg(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn linkage_examples() {
        let hex = linkage(&splay(6, 0.0));
        assert!(hex.closed);
        assert!(hex.closure_defect() < 1e-14);
        let back = linkage(&cfg(&[0.0, PI]));
        assert_abs_diff_eq!(back.points[0][0], 1.0);
        assert!(back.closure_defect() < 1e-15);
        let open = linkage(&cfg(&[0.0, 0.0, PI]));
        assert!(!open.closed);
        assert_abs_diff_eq!(open.closure_defect(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tangent_rank_examples() {
        assert_eq!(balanced_tangent_rank(&splay(5, 0.0), DEFAULT_TOL), Ok(2));
        assert_eq!(balanced_tangent_rank(&cfg(&[0.0, 0.0, PI, PI]), DEFAULT_TOL), Ok(1));
        let tri = cfg(&[0.0, TAU / 3.0, 2.0 * TAU / 3.0]);
        assert_eq!(balanced_tangent_rank(&tri, DEFAULT_TOL), Ok(2));
        assert!(matches!(
            balanced_tangent_rank(&cfg(&[0.0, 0.0]), DEFAULT_TOL),
            Err(Error::NotBalanced(_))
        ));
    }

    #[test]
    fn wrap_edge_cases() {
        assert_eq!(wrap_angle(-1e-18), 0.0);
        assert_eq!(wrap_angle(TAU), 0.0);
        assert!(Configuration::new(vec![f64::NAN]).is_err());
        let json = serde_json::to_string(&cfg(&[0.5, 1.0])).unwrap();
        assert_eq!(json, "[0.5,1.0]");
        let back: Configuration = serde_json::from_str("[7.0]").unwrap();
        assert_abs_diff_eq!(back.phases()[0], 7.0 - TAU, epsilon = 1e-15);
    }

    fn phases(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..TAU, n)
    }

    proptest! {
        #[test]
        fn predicates_are_shift_invariant(p in phases(1..9), s in -10.0..10.0f64) {
            let c = Configuration::new(p).unwrap();
            let all: Vec<usize> = (0..c.len()).collect();
            let z0 = order_parameter(&c, &all).unwrap().norm();
            let z1 = order_parameter(&c.shifted(s), &all).unwrap().norm();
            prop_assert!((z0 - z1).abs() < 1e-12);
            prop_assert_eq!(
                is_aligned(&c, &all, 1e-6).unwrap(),
                is_aligned(&c.shifted(s), &all, 1e-6).unwrap()
            );
        }

        #[test]
        fn canonicalize_is_idempotent(p in phases(1..9)) {
            let c = canonicalize(&Configuration::new(p).unwrap());
            prop_assert_eq!(canonicalize(&c), c);
        }

        #[test]
        fn torus_distance_is_a_shift_pseudometric(
            a in phases(4..5), b in phases(4..5), e in phases(4..5), s in -7.0..7.0f64
        ) {
            let (a, b, e) = (
                Configuration::new(a).unwrap(),
                Configuration::new(b).unwrap(),
                Configuration::new(e).unwrap(),
            );
            let ab = torus_distance(&a, &b).unwrap();
            prop_assert!((0.0..=PI).contains(&ab));
            prop_assert!((ab - torus_distance(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(ab <= torus_distance(&a, &e).unwrap() + torus_distance(&e, &b).unwrap() + 1e-12);
            prop_assert!(torus_distance(&a, &a.shifted(s)).unwrap() < 1e-12);
            prop_assert!((ab - torus_distance(&a.shifted(s), &b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn optimal_shift_beats_grid_search(a in phases(1..7), b in phases(1..7)) {
            let n = a.len().min(b.len());
            let a = Configuration::new(a[..n].to_vec()).unwrap();
            let b = Configuration::new(b[..n].to_vec()).unwrap();
            let (_, best) = optimal_shift(&a, &b).unwrap();
            let grid = (0..2000).map(|i| {
                let s = TAU * i as f64 / 2000.0;
                a.phases().iter().zip(b.phases())
                    .map(|(x, y)| circular_distance(x + s, *y))
                    .fold(0.0, f64::max)
            }).fold(f64::INFINITY, f64::min);
            prop_assert!(best <= grid + 1e-12);
            prop_assert!(grid - best <= TAU / 2000.0);
        }

        #[test]
        fn linkage_steps_have_unit_length(p in phases(1..12)) {
            let c = Configuration::new(p).unwrap();
            let link = linkage(&c);
            for len in link.edge_lengths() {
                prop_assert!((len - 1.0).abs() < 1e-12);
            }
            let all: Vec<usize> = (0..c.len()).collect();
            let z = order_parameter(&c, &all).unwrap().norm();
            prop_assert!((link.closure_defect() - z).abs() < 1e-12);
        }

        #[test]
        fn balanced_and_aligned_means_antipodal_halves(bits in prop::collection::vec(any::<bool>(), 1..10), s in 0.0..TAU) {
            let c = Configuration::new(
                bits.iter().map(|&b| if b { s + PI } else { s }).collect()
            ).unwrap();
            let all: Vec<usize> = (0..c.len()).collect();
            let flipped = bits.iter().filter(|&&b| b).count();
            let balanced = is_balanced(&c, &all, 1e-9).unwrap();
            prop_assert!(is_aligned(&c, &all, 1e-9).unwrap());
            prop_assert_eq!(balanced, 2 * flipped == bits.len());
        }
    }
}
