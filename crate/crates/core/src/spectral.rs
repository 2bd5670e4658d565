//! Jacobian spectra and stability of equilibrium manifolds.
//!
//! Stability of a d-dimensional torus of equilibria is certified by
//! counting: exactly `d` zero eigenvalues (the tangent directions) and no
//! positive ones.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::TorusBase;
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::phasecfg::{check_len, Configuration};

/// Symmetric Jacobian of the dynamics at `c`.
///
/// Off-diagonal `(j, k)` is `a_jk cos(θ_k − θ_j)`, the diagonal makes every
/// row sum to zero. Each edge is evaluated once and written to both
/// triangles, so the result is exactly symmetric.
pub fn jacobian(g: &Graph, c: &Configuration) -> Result<DMatrix<f64>> {
    let n = g.vertex_count();
    check_len(n, c.len())?;
    let p = c.phases();
    let mut m = DMatrix::zeros(n, n);
    for &(u, v) in g.edges() {
        let w = (p[v] - p[u]).cos();
        m[(u, v)] = w;
        m[(v, u)] = w;
        m[(u, u)] -= w;
        m[(v, v)] -= w;
    }
    Ok(m)
}

/// Threshold below which an eigenvalue counts as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroTol {
    Absolute(f64),
    /// Scaled by `max(1, spectral radius)`.
    Relative(f64),
}

impl Default for ZeroTol {
    fn default() -> Self {
        ZeroTol::Relative(1e-8)
    }
}

impl ZeroTol {
    fn resolve(self, eigenvalues: &[f64]) -> f64 {
        match self {
            ZeroTol::Absolute(t) => t,
            ZeroTol::Relative(t) => {
                let radius = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                t * radius.max(1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub zero_count: usize,
    pub positive_count: usize,
    pub zero_tol: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, zero_tol: ZeroTol) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let tol = zero_tol.resolve(&eigenvalues);
        let zero_count = eigenvalues.iter().filter(|x| x.abs() <= tol).count();
        let positive_count = eigenvalues.iter().filter(|&&x| x > tol).count();
        Self { eigenvalues, zero_count, positive_count, zero_tol: tol }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn negative_count(&self) -> usize {
        self.len() - self.zero_count - self.positive_count
    }

    /// Largest eigenvalue that is not counted as zero, if any.
    pub fn largest_nonzero(&self) -> Option<f64> {
        self.eigenvalues.iter().rev().copied().find(|x| x.abs() > self.zero_tol)
    }
}

/// Full spectrum of a symmetric matrix.
pub fn spectrum(m: &DMatrix<f64>, zero_tol: ZeroTol) -> Result<SpectrumReport> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let mut asym = 0.0f64;
    for j in 0..m.nrows() {
        for k in 0..j {
            asym = asym.max((m[(j, k)] - m[(k, j)]).abs());
        }
    }
    if asym > 1e-12 {
        return Err(Error::Asymmetric(asym));
    }
    let eigen = SymmetricEigen::new(m.clone());
    Ok(SpectrumReport::from_eigenvalues(eigen.eigenvalues.iter().copied().collect(), zero_tol))
}

/// Eigenvalues of the real symmetric circulant matrix with the given first
/// row, `λ_m = Σ_k row_k cos(2πmk/n)`, ascending.
pub fn circulant_eigenvalues(first_row: &[f64]) -> Vec<f64> {
    let n = first_row.len();
    let mut eig: Vec<f64> = (0..n)
        .map(|m| {
            first_row
                .iter()
                .enumerate()
                .map(|(k, r)| r * (TAU * ((m * k) % n) as f64 / n as f64).cos())
                .sum()
        })
        .collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Roots of `p(λ)^d` with `p(λ) = λ(λ+1/2)²(λ+3/2)²(λ+2)`, ascending: the
/// spectrum of `d` uncoupled splay six-cycles.
pub fn six_cycle_reference_roots(d: usize) -> Vec<f64> {
    let mut roots = Vec::with_capacity(6 * d);
    for (root, mult) in [(-2.0, 1), (-1.5, 2), (-0.5, 2), (0.0, 1)] {
        roots.extend(std::iter::repeat_n(root, mult * d));
    }
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum StabilityClass {
    TransversallyStable { d: usize },
    /// `positive` may be zero when the zero multiplicity exceeds the expected
    /// manifold dimension: stability is then not certified.
    Unstable { positive: usize },
    CompletelyDegenerate,
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityClass::TransversallyStable { d } => write!(f, "stable({d})"),
            StabilityClass::Unstable { positive } => write!(f, "unstable({positive})"),
            StabilityClass::CompletelyDegenerate => write!(f, "degenerate"),
        }
    }
}

/// Classifies an equilibrium expected to lie on a manifold of dimension
/// `expected_manifold_dim` (at least 1, for the phase-shift orbit).
pub fn classify(r: &SpectrumReport, expected_manifold_dim: usize) -> Result<StabilityClass> {
    if expected_manifold_dim < 1 {
        return Err(Error::InvalidParameter("expected manifold dimension must be >= 1".into()));
    }
    if r.zero_count < 1 {
        return Err(Error::NoZeroEigenvalue);
    }
    Ok(if r.zero_count == r.len() {
        StabilityClass::CompletelyDegenerate
    } else if r.zero_count == expected_manifold_dim && r.positive_count == 0 {
        StabilityClass::TransversallyStable { d: expected_manifold_dim }
    } else {
        StabilityClass::Unstable { positive: r.positive_count }
    })
}

/// One grid point of a torus scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub shifts: Vec<f64>,
    pub report: SpectrumReport,
    /// `None` when the spectrum has no zero eigenvalue.
    pub class: Option<StabilityClass>,
}

/// Jacobian spectra along a torus of equilibria, one report per shift tuple.
pub fn torus_scan(
    g: &Graph,
    base: &TorusBase,
    shift_grid: &[Vec<f64>],
    zero_tol: ZeroTol,
) -> Result<Vec<ScanRow>> {
    let d = base.partition().len();
    shift_grid
        .par_iter()
        .map(|shifts| {
            let c = base.build(shifts)?;
            let report = spectrum(&jacobian(g, &c)?, zero_tol)?;
            let class = classify(&report, d).ok();
            Ok(ScanRow { shifts: shifts.clone(), report, class })
        })
        .collect()
}

/// CSV with columns `shift_1..shift_d, lambda_0..lambda_{n-1}, zero_count,
/// class`.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut header: Vec<String> = (1..=first.shifts.len()).map(|i| format!("shift_{i}")).collect();
    header.extend((0..first.report.len()).map(|i| format!("lambda_{i}")));
    header.push("zero_count".into());
    header.push("class".into());
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut fields: Vec<String> = row.shifts.iter().map(f64::to_string).collect();
        fields.extend(row.report.eigenvalues.iter().map(f64::to_string));
        fields.push(row.report.zero_count.to_string());
        fields.push(row.class.map_or_else(|| "error".into(), |c| c.to_string()));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate, GraphFamily};
    use crate::phasecfg::splay;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn family(s: &str) -> Graph {
        generate(&s.parse::<GraphFamily>().unwrap()).unwrap()
    }

    const SPLAY_ROW: [f64; 6] = [-1.0, 0.5, 0.0, 0.0, 0.0, 0.5];
    const SPLAY_SPECTRUM: [f64; 6] = [-2.0, -1.5, -1.5, -0.5, -0.5, 0.0];

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn splay_jacobian_is_the_circulant() {
        let c6 = family("cycle:6");
        for alpha in [0.0, 0.9, 3.3] {
            let m = jacobian(&c6, &splay(6, alpha)).unwrap();
            for j in 0..6 {
                for k in 0..6 {
                    let expect = SPLAY_ROW[(k + 6 - j) % 6];
                    assert!((m[(j, k)] - expect).abs() < 1e-14, "({j},{k})");
                }
            }
        }
    }

    #[test]
    fn synchronized_jacobian_is_negative_laplacian() {
        let g = family("eye:2");
        let m = jacobian(&g, &Configuration::synchronized(12, 0.4)).unwrap();
        for j in 0..12 {
            assert_eq!(m[(j, j)], -(g.degree(j).unwrap() as f64));
            for k in 0..12 {
                if j != k {
                    assert_eq!(m[(j, k)], if g.has_edge(j, k) { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn four_cycle_splay_jacobian_vanishes() {
        let m = jacobian(&family("cycle:4"), &splay(4, 0.0)).unwrap();
        assert!(m.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn spectrum_examples() {
        let circ = DMatrix::from_fn(6, 6, |j, k| SPLAY_ROW[(k + 6 - j) % 6]);
        let r = spectrum(&circ, ZeroTol::default()).unwrap();
        assert!(close(&r.eigenvalues, &SPLAY_SPECTRUM, 1e-12));
        assert_eq!((r.zero_count, r.positive_count), (1, 0));

        let zero = spectrum(&DMatrix::zeros(4, 4), ZeroTol::default()).unwrap();
        assert_eq!(zero.zero_count, 4);
        assert_eq!(classify(&zero, 2).unwrap(), StabilityClass::CompletelyDegenerate);

        let mut asym = DMatrix::zeros(2, 2);
        asym[(0, 1)] = 1.0;
        assert!(matches!(spectrum(&asym, ZeroTol::default()), Err(Error::Asymmetric(_))));
        assert!(spectrum(&DMatrix::zeros(2, 3), ZeroTol::default()).is_err());
    }

    #[test]
    fn eye_spectrum_at_quarter_shift() {
        for d in 1..=4 {
            let g = family(&format!("eye:{d}"));
            let base = TorusBase::eye(d);
            let mut shifts = vec![PI / 2.0; d];
            shifts[0] = 0.0;
            let r = spectrum(&jacobian(&g, &base.build(&shifts).unwrap()).unwrap(), ZeroTol::default())
                .unwrap();
            assert_eq!(r.zero_count, d);
            assert!(close(&r.eigenvalues, &six_cycle_reference_roots(d), 1e-10));
        }
    }

    #[test]
    fn circulant_examples() {
        assert!(close(&circulant_eigenvalues(&SPLAY_ROW), &SPLAY_SPECTRUM, 1e-15));
        assert_eq!(circulant_eigenvalues(&[3.5]), vec![3.5]);
        assert!(close(&circulant_eigenvalues(&[0.0, 0.5, 0.0, 0.5]), &[-1.0, 0.0, 0.0, 1.0], 1e-15));
        assert!(circulant_eigenvalues(&[]).is_empty());
    }

    #[test]
    fn classify_examples() {
        let splay6 = SpectrumReport::from_eigenvalues(SPLAY_SPECTRUM.to_vec(), ZeroTol::default());
        assert_eq!(classify(&splay6, 1).unwrap(), StabilityClass::TransversallyStable { d: 1 });
        let pos = SpectrumReport::from_eigenvalues(vec![-1.0, 0.0, 0.7], ZeroTol::default());
        assert_eq!(classify(&pos, 1).unwrap(), StabilityClass::Unstable { positive: 1 });
        let none = SpectrumReport::from_eigenvalues(vec![-1.0, -2.0], ZeroTol::default());
        assert_eq!(classify(&none, 1), Err(Error::NoZeroEigenvalue));
        assert!(classify(&splay6, 0).is_err());
        let extra_zero = SpectrumReport::from_eigenvalues(vec![-1.0, 0.0, 0.0], ZeroTol::default());
        assert_eq!(classify(&extra_zero, 1).unwrap(), StabilityClass::Unstable { positive: 0 });
    }

    #[test]
    fn eye_scan_structure() {
        let g = family("eye:2");
        let rows = torus_scan(&g, &TorusBase::eye(2), &[vec![0.0, PI / 2.0], vec![0.0, 0.0]], ZeroTol::default())
            .unwrap();
        assert_eq!(rows[0].report.zero_count, 2);
        assert_eq!(rows[0].report.positive_count, 0);
        assert_eq!(rows[0].class, Some(StabilityClass::TransversallyStable { d: 2 }));
        assert!(rows[1].report.zero_count + rows[1].report.positive_count >= 3);
        let csv = scan_csv(&rows);
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("shift_1,shift_2,lambda_0,"));
        assert!(header.ends_with("lambda_11,zero_count,class"));
        assert_eq!(csv.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn jacobian_rows_sum_to_zero(seed in prop::collection::vec(0.0..TAU, 12)) {
            let g = family("eye:2");
            let m = jacobian(&g, &Configuration::new(seed).unwrap()).unwrap();
            for j in 0..12 {
                prop_assert!(m.row(j).sum().abs() < 1e-14);
                for k in 0..12 {
                    prop_assert_eq!(m[(j, k)], m[(k, j)]);
                }
            }
        }

        #[test]
        fn circulant_closed_form_matches_eigensolver(half in prop::collection::vec(-3.0..3.0f64, 1..33), odd in any::<bool>()) {
            // symmetric first row of length 2h or 2h-1
            let h = half.len();
            let n = if odd { 2 * h - 1 } else { 2 * h }.max(1);
            let mut row = vec![0.0; n];
            for (k, &x) in half.iter().enumerate() {
                if k < n {
                    row[k] = x;
                    row[(n - k) % n] = x;
                }
            }
            let m = DMatrix::from_fn(n, n, |j, k| row[(k + n - j) % n]);
            let numeric = spectrum(&m, ZeroTol::default()).unwrap().eigenvalues;
            let closed = circulant_eigenvalues(&row);
            prop_assert!(close(&numeric, &closed, 1e-10), "{numeric:?} vs {closed:?}");
        }
    }
}
