//! Finite-dimensional port-Hamiltonian systems
//!
//! ```text
//! M a' = J_d e + B u,   M e = Q_d a,   y = B^T e,   H = a^T Q_d a / 2
//! ```

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix, SpdFactor};

pub const STRUCTURE_TOL: f64 = 1e-12;

/// Named index ranges of the field blocks, in state order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub blocks: Vec<(String, Range<usize>)>,
}

impl BlockLayout {
    pub fn from_sizes(names: &[&str], sizes: &[usize]) -> Self {
        assert_eq!(names.len(), sizes.len());
        let mut start = 0;
        let blocks = names
            .iter()
            .zip(sizes)
            .map(|(name, &len)| {
                let r = start..start + len;
                start += len;
                (name.to_string(), r)
            })
            .collect();
        Self { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.last().map_or(0, |(_, r)| r.end)
    }

    pub fn range(&self, name: &str) -> Option<Range<usize>> {
        self.blocks.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().map(|(n, _)| n.as_str())
    }

    fn validate(&self, n: usize) -> Result<()> {
        let mut start = 0;
        for (name, r) in &self.blocks {
            if r.start != start || r.end < r.start {
                return Err(Error::Dimension(format!(
                    "block {name} does not continue the layout at {start}"
                )));
            }
            start = r.end;
        }
        if start != n {
            return Err(Error::Dimension(format!("layout covers {start} of {n} coordinates")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PHSystem {
    m: CsrMatrix,
    q: CsrMatrix,
    j: CsrMatrix,
    r: CsrMatrix,
    b: CsrMatrix,
    labels: Vec<String>,
    layout: BlockLayout,
    m_factor: SpdFactor,
}

/// Largest `|a_ij - s a_ji|` relative to `max |a_ij|`, with its location.
fn relative_defect(defect: (f64, usize, usize), scale: f64) -> (f64, usize, usize) {
    if scale == 0.0 {
        (0.0, defect.1, defect.2)
    } else {
        (defect.0 / scale, defect.1, defect.2)
    }
}

pub fn make_phsystem(
    m: CsrMatrix,
    q: CsrMatrix,
    j: CsrMatrix,
    b: CsrMatrix,
    labels: Vec<String>,
    layout: BlockLayout,
) -> Result<PHSystem> {
    let n = m.nrows();
    for (name, mat) in [("M", &m), ("Q_d", &q), ("J_d", &j)] {
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Dimension(format!(
                "{name} is {}x{}, expected {n}x{n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
    }
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
    }
    if labels.len() != b.ncols() {
        return Err(Error::Dimension(format!(
            "{} port labels for {} input columns",
            labels.len(),
            b.ncols()
        )));
    }
    layout.validate(n)?;
    for (name, mat) in [("M", &m), ("Q_d", &q), ("J_d", &j), ("B", &b)] {
        if mat.iter().any(|(_, _, v)| !v.is_finite()) {
            return Err(Error::Structure(format!("{name} has non-finite entries")));
        }
    }

    let jmax = j.max_abs();
    let (magnitude, row, col) = j.skew_defect();
    if magnitude > STRUCTURE_TOL * jmax {
        return Err(Error::SkewSymmetry {
            row,
            col,
            magnitude,
            tolerance: STRUCTURE_TOL * jmax,
        });
    }
    for (name, mat) in [("M", &m), ("Q_d", &q)] {
        let (d, r, c) = relative_defect(mat.symmetry_defect(), mat.max_abs());
        if d > STRUCTURE_TOL {
            return Err(Error::Structure(format!(
                "{name} is not symmetric at ({r}, {c}): relative defect {d:e}"
            )));
        }
    }
    let m_factor = SpdFactor::new(&m, "M")?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let qmax = q.max_abs();
    for _ in 0..8 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = q.quad_form(&x);
        if v < -STRUCTURE_TOL * qmax * dot(&x, &x) {
            return Err(Error::Structure(format!(
                "Q_d is not positive semidefinite (x^T Q x = {v:e})"
            )));
        }
    }

    Ok(PHSystem {
        r: CsrMatrix::zeros(n, n),
        m,
        q,
        j,
        b,
        labels,
        layout,
        m_factor,
    })
}

impl PHSystem {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn num_ports(&self) -> usize {
        self.b.ncols()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.m
    }

    pub fn energy(&self) -> &CsrMatrix {
        &self.q
    }

    pub fn interconnection(&self) -> &CsrMatrix {
        &self.j
    }

    pub fn dissipation(&self) -> &CsrMatrix {
        &self.r
    }

    pub fn input(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn port_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn mass_factor(&self) -> &SpdFactor {
        &self.m_factor
    }

    /// Solves `M e = Q_d a`.
    pub fn coenergy(&self, a: &[f64]) -> Vec<f64> {
        self.m_factor.solve(&self.q.mul_vec(a))
    }

    pub fn hamiltonian(&self, a: &[f64]) -> f64 {
        0.5 * self.q.quad_form(a)
    }

    /// Scaled energy variables `M a`.
    pub fn scaled_energy_variables(&self, a: &[f64]) -> Vec<f64> {
        self.m.mul_vec(a)
    }

    /// Collocated output `B^T e`.
    pub fn output(&self, e: &[f64]) -> Vec<f64> {
        self.b.tr_mul_vec(e)
    }

    /// Flow `J_d e + B u`.
    pub fn flow(&self, e: &[f64], u: &[f64]) -> Vec<f64> {
        let mut f = self.j.mul_vec(e);
        for (fi, bi) in f.iter_mut().zip(self.b.mul_vec(u)) {
            *fi += bi;
        }
        f
    }
}

pub fn power_product(e: &[f64], f: &[f64]) -> Result<f64> {
    if e.len() != f.len() {
        return Err(Error::Dimension(format!(
            "power product of lengths {} and {}",
            e.len(),
            f.len()
        )));
    }
    Ok(dot(e, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiracReport {
    /// Largest pairing residual divided by `sum |e_a||f_b| + |y_a||u_b|` over its terms.
    pub max_relative_residual: f64,
    pub max_absolute_residual: f64,
    pub samples: usize,
    pub worst_pair: (usize, usize),
}

/// Samples the symmetric pairing
/// `e_a^T f_b + e_b^T f_a - (y_a^T u_b + y_b^T u_a)` over random effort/input
/// pairs with `f = J e + B u`, `y = B^T e`.
pub fn dirac_pairing(j: &CsrMatrix, b: &CsrMatrix, n_samples: usize, seed: u64) -> Result<DiracReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("Dirac check needs at least one sample".into()));
    }
    let n = j.nrows();
    let m = b.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut es = Vec::with_capacity(n_samples);
    let mut us = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        es.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
        us.push((0..m).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
    }
    let fs: Vec<Vec<f64>> = es
        .iter()
        .zip(&us)
        .map(|(e, u)| {
            let mut f = j.mul_vec(e);
            for (fi, bi) in f.iter_mut().zip(b.mul_vec(u)) {
                *fi += bi;
            }
            f
        })
        .collect();
    let ys: Vec<Vec<f64>> = es.iter().map(|e| b.tr_mul_vec(e)).collect();

    let norm = |v: &Vec<f64>| dot(v, v).sqrt();
    let norms_e: Vec<f64> = es.iter().map(norm).collect();
    let norms_f: Vec<f64> = fs.iter().map(norm).collect();
    let norms_y: Vec<f64> = ys.iter().map(norm).collect();
    let norms_u: Vec<f64> = us.iter().map(norm).collect();
    let mut report = DiracReport {
        max_relative_residual: 0.0,
        max_absolute_residual: 0.0,
        samples: n_samples,
        worst_pair: (0, 0),
    };
    for a in 0..n_samples {
        for c in a..n_samples {
            let terms = [
                dot(&es[a], &fs[c]),
                dot(&es[c], &fs[a]),
                -dot(&ys[a], &us[c]),
                -dot(&ys[c], &us[a]),
            ];
            let residual = terms.iter().sum::<f64>().abs();
            let scale = norms_e[a] * norms_f[c] + norms_e[c] * norms_f[a] + norms_y[a] * norms_u[c] + norms_y[c] * norms_u[a];
            let rel = if scale > 0.0 { residual / scale } else { 0.0 };
            if rel > report.max_relative_residual {
                report.max_relative_residual = rel;
                report.worst_pair = (a, c);
            }
            report.max_absolute_residual = report.max_absolute_residual.max(residual);
        }
    }
    Ok(report)
}

pub fn check_dirac(sys: &PHSystem, n_samples: usize, tol: f64, seed: u64) -> Result<DiracReport> {
    let report = dirac_pairing(&sys.j, &sys.b, n_samples, seed)?;
    if report.max_relative_residual > tol {
        return Err(Error::DiracViolation {
            residual: report.max_relative_residual,
            tolerance: tol,
            sample_a: report.worst_pair.0,
            sample_b: report.worst_pair.1,
        });
    }
    Ok(report)
}

/// Nonzero pattern of `m` over a partition of its rows and columns.
pub fn block_pattern(m: &CsrMatrix, groups: &[Range<usize>]) -> Vec<Vec<bool>> {
    let group_of = |i: usize| groups.iter().position(|g| g.contains(&i));
    let mut pattern = vec![vec![false; groups.len()]; groups.len()];
    for (i, j, v) in m.iter() {
        if v != 0.0 {
            if let (Some(a), Some(b)) = (group_of(i), group_of(j)) {
                pattern[a][b] = true;
            }
        }
    }
    pattern
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn oscillator() -> PHSystem {
        make_phsystem(
            CsrMatrix::identity(2),
            CsrMatrix::identity(2),
            CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)]),
            CsrMatrix::zeros(2, 0),
            vec![],
            BlockLayout::from_sizes(&["p", "q"], &[1, 1]),
        )
        .unwrap()
    }

    #[test]
    fn harmonic_oscillator_is_valid() {
        let s = oscillator();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.dissipation().nnz(), 0);
        assert_eq!(s.hamiltonian(&[1.0, 0.0]), 0.5);
        assert_eq!(s.coenergy(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn skew_violation_is_rejected() {
        let err = make_phsystem(
            CsrMatrix::identity(2),
            CsrMatrix::identity(2),
            CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0 + 1e-6)]),
            CsrMatrix::zeros(2, 0),
            vec![],
            BlockLayout::from_sizes(&["x"], &[2]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SkewSymmetry { .. }), "{err}");
    }

    #[test]
    fn indefinite_mass_is_rejected() {
        let err = make_phsystem(
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]),
            CsrMatrix::identity(2),
            CsrMatrix::zeros(2, 2),
            CsrMatrix::zeros(2, 0),
            vec![],
            BlockLayout::from_sizes(&["x"], &[2]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Factorization { .. }), "{err}");
    }

    #[test]
    fn diagonal_coenergy() {
        let s = make_phsystem(
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 1.0)]),
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (1, 1, 3.0)]),
            CsrMatrix::zeros(2, 2),
            CsrMatrix::zeros(2, 0),
            vec![],
            BlockLayout::from_sizes(&["x"], &[2]),
        )
        .unwrap();
        let e = s.coenergy(&[1.0, 1.0]);
        assert!((e[0] - 2.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn power_product_examples() {
        assert_eq!(power_product(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(power_product(&[1.0], &[1.0]).unwrap(), 1.0);
        assert!(power_product(&[1.0], &[1.0, 2.0]).is_err());
        let s = oscillator();
        let e = [0.3, -1.7];
        assert_eq!(power_product(&e, &s.interconnection().mul_vec(&e)).unwrap(), 0.0);
    }

    #[test]
    fn dirac_on_zero_system_is_exact() {
        let r = dirac_pairing(&CsrMatrix::zeros(3, 3), &CsrMatrix::zeros(3, 2), 10, 1).unwrap();
        assert_eq!(r.max_absolute_residual, 0.0);
    }

    #[test]
    fn corrupted_interconnection_is_detected() {
        let j = CsrMatrix::from_triplets(3, 3, &[(0, 1, 1.0), (1, 0, -1.0), (1, 2, 2.0), (2, 1, -2.0 + 1e-3)]);
        let b = CsrMatrix::from_triplets(3, 1, &[(0, 0, 1.0)]);
        let r = dirac_pairing(&j, &b, 100, 7).unwrap();
        assert!(r.max_relative_residual > 1e-6);
    }

    fn random_system(n: usize, m: usize, seed: u64) -> PHSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut jt = Vec::new();
        let mut mt = Vec::new();
        let mut qt = Vec::new();
        for i in 0..n {
            mt.push((i, i, 2.0 + rng.gen::<f64>()));
            qt.push((i, i, 1.0 + rng.gen::<f64>()));
            for k in i + 1..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                jt.push((i, k, v));
                jt.push((k, i, -v));
                let w: f64 = 0.1 * rng.gen_range(-1.0..1.0);
                mt.push((i, k, w));
                mt.push((k, i, w));
            }
        }
        let bt: Vec<_> = (0..m).map(|c| (c % n, c, rng.gen_range(-1.0..1.0))).collect();
        let labels = (0..m).map(|c| format!("u{c}")).collect();
        make_phsystem(
            CsrMatrix::from_triplets(n, n, &mt),
            CsrMatrix::from_triplets(n, n, &qt),
            CsrMatrix::from_triplets(n, n, &jt),
            CsrMatrix::from_triplets(n, m, &bt),
            labels,
            BlockLayout::from_sizes(&["x"], &[n]),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn random_systems_pass_dirac(seed in 0u64..1000) {
            let s = random_system(6, 2, seed);
            let r = check_dirac(&s, 20, 1e-12, seed).unwrap();
            prop_assert!(r.max_relative_residual <= 1e-12);
        }

        #[test]
        fn unforced_energy_rate_vanishes(seed in 0u64..1000) {
            let s = random_system(6, 0, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let a: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let e = s.coenergy(&a);
            let adot = s.mass_factor().solve(&s.interconnection().mul_vec(&e));
            let rate = dot(&s.energy().mul_vec(&a), &adot);
            let scale = dot(&e, &e).sqrt() * s.interconnection().max_abs() * dot(&a, &a).sqrt() * s.energy().max_abs();
            prop_assert!(rate.abs() <= 1e-10 * scale);
        }

        #[test]
        fn forced_power_identity(seed in 0u64..1000) {
            let s = random_system(5, 3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdef);
            let a: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let e = s.coenergy(&a);
            let adot = s.mass_factor().solve(&s.flow(&e, &u));
            let hdot = dot(&s.mass().mul_vec(&e), &adot);
            let supplied = dot(&s.output(&e), &u);
            let me = s.mass().mul_vec(&e);
            let scale = dot(&me, &me).sqrt() * dot(&adot, &adot).sqrt() + dot(&s.output(&e), &s.output(&e)).sqrt() * dot(&u, &u).sqrt();
            prop_assert!((hdot - supplied).abs() <= 1e-12 * scale);
        }
    }
}
