//! Natural frequencies of the (constrained) system.
//!
//! With momentum block `p`, strain block `q`, `J_qp = D` and `e_p = Z_p xi`
//! spanning the admissible momentum co-energies, the undamped dynamics reduce to
//!
//! ```text
//! M_r xi'' + K_r xi = 0,   M_r = (M_p Z_p)^T Q_p^-1 (M_p Z_p),   K_r = (D Z_p)^T W (D Z_p)
//! ```
//!
//! where `W = M_q^-1 Q_q M_q^-1`, or `Z_q (Z_q^T M_q Q_q^-1 M_q Z_q)^-1 Z_q^T` when the
//! strain co-energies are constrained.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::Range;

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, MatRef, Par, Side};

use crate::boundary::ConstrainedPHSystem;
use crate::error::{Error, Result};
use crate::linalg::{format_g17, norm2, null_space, symmetric_eigen, CsrMatrix, SpdFactor, TripletBuilder};

/// Eigenvalues below this fraction of the largest are rigid-body modes.
pub const RIGID_TOL: f64 = 1e-10;
const NULL_SPACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ModalResult {
    /// Hz, ascending.
    pub frequencies: Vec<f64>,
    /// Squared angular frequencies before rigid-mode clamping.
    pub eigenvalues: Vec<f64>,
    /// Kinetic energy snapshots `a`, normalized to `a^T Q a = 1`.
    pub modes: Vec<Vec<f64>>,
    /// Relative residual of the reduced eigenproblem.
    pub residuals: Vec<f64>,
    /// `||G e||` of each mode.
    pub constraint_residuals: Vec<f64>,
    pub reduced_dim: usize,
}

impl ModalResult {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "mode,frequency_hz,residual")?;
        for (i, (f, r)) in self.frequencies.iter().zip(&self.residuals).enumerate() {
            writeln!(out, "{},{},{}", i + 1, format_g17(*f), format_g17(*r))?;
        }
        Ok(())
    }
}

/// Basis of `{x : g x = 0}`: identity on the columns `g` does not touch,
/// null space of `g` on the rest.
fn admissible_basis(g: &CsrMatrix) -> Result<CsrMatrix> {
    let n = g.ncols();
    let mut touched = vec![false; n];
    for (_, j, v) in g.iter() {
        if v != 0.0 {
            touched[j] = true;
        }
    }
    let active: Vec<usize> = (0..n).filter(|&j| touched[j]).collect();
    let null = null_space(g.select_columns(&active).to_dense().as_ref(), NULL_SPACE_TOL)?;
    let free = n - active.len();
    let mut t = TripletBuilder::new(n, free + null.ncols());
    let mut col = 0;
    for j in 0..n {
        if !touched[j] {
            t.push(j, col, 1.0);
            col += 1;
        }
    }
    for c in 0..null.ncols() {
        for (r, &j) in active.iter().enumerate() {
            t.push(j, free + c, null[(r, c)]);
        }
    }
    Ok(t.build())
}

fn require_zero(m: &CsrMatrix, what: &str) -> Result<()> {
    if m.max_abs() != 0.0 {
        return Err(Error::Structure(format!("modal reduction needs a zero {what} block")));
    }
    Ok(())
}

fn columns_used(g: &CsrMatrix, range: Range<usize>) -> bool {
    g.iter().any(|(_, j, v)| v != 0.0 && range.contains(&j))
}

/// `y^T x` for dense `y`, `x` of matching row count.
fn gram(y: MatRef<'_, f64>, x: MatRef<'_, f64>) -> Mat<f64> {
    y.transpose() * x
}

fn symmetrize(a: &mut Mat<f64>) {
    for i in 0..a.nrows() {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

pub fn modal_analysis(csys: &ConstrainedPHSystem, n_modes: usize) -> Result<ModalResult> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("at least one mode must be requested".into()));
    }
    let sys = &csys.system;
    let n = sys.dim();
    let np = csys.momentum_dim();
    let (p, q) = (0..np, np..n);
    let j = sys.interconnection();
    require_zero(&j.block(p.clone(), p.clone()), "momentum-momentum interconnection")?;
    require_zero(&j.block(q.clone(), q.clone()), "strain-strain interconnection")?;
    for m in [sys.mass(), sys.energy()] {
        require_zero(&m.block(p.clone(), q.clone()), "momentum-strain mass or energy")?;
    }
    let d = j.block(q.clone(), p.clone());
    let g = csys.constraint();
    let (on_p, on_q) = (columns_used(g, p.clone()), columns_used(g, q.clone()));
    if on_p && on_q {
        return Err(Error::Structure("constraints couple momentum and strain co-energies".into()));
    }
    let zp = if on_p {
        admissible_basis(&g.block(0..g.nrows(), p.clone()))?
    } else {
        CsrMatrix::identity(np)
    };

    let mp = sys.mass().block(p.clone(), p.clone());
    let qp = SpdFactor::new(&sys.energy().block(p.clone(), p.clone()), "momentum energy block")?;
    let mq_sparse = sys.mass().block(q.clone(), q.clone());
    let qq_sparse = sys.energy().block(q.clone(), q.clone());

    let mz = mp.matmul(&zp).to_dense();
    let snapshot = qp.solve_dense(mz.as_ref());
    let mut m_r = gram(mz.as_ref(), snapshot.as_ref());
    symmetrize(&mut m_r);

    let dz = d.matmul(&zp);
    let mut k_r = if on_q {
        let zq = admissible_basis(&g.block(0..g.nrows(), q.clone()))?;
        let qq = SpdFactor::new(&qq_sparse, "strain energy block")?;
        let mzq = mq_sparse.matmul(&zq).to_dense();
        let mut s = gram(mzq.as_ref(), qq.solve_dense(mzq.as_ref()).as_ref());
        symmetrize(&mut s);
        let v = zq.transpose().matmul(&dz).to_dense();
        let chol = s
            .llt(Side::Lower)
            .map_err(|e| Error::Solver(format!("reduced strain mass is not definite ({e:?})")))?;
        gram(v.as_ref(), chol.solve(v.as_ref()).as_ref())
    } else {
        let mq = SpdFactor::new(&mq_sparse, "strain mass block")?;
        let x = mq.solve_dense(dz.to_dense().as_ref());
        gram(x.as_ref(), qq_sparse.mul_dense(x.as_ref()).as_ref())
    };
    symmetrize(&mut k_r);

    let r = m_r.nrows();
    let chol = m_r
        .llt(Side::Lower)
        .map_err(|e| Error::Solver(format!("reduced kinetic mass is not definite ({e:?})")))?;
    let l = chol.L().to_owned();
    // A = L^-1 K L^-T
    let mut a = k_r.clone();
    solve_lower_triangular_in_place(l.as_ref(), a.as_mut(), Par::Seq);
    let mut a = a.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), a.as_mut(), Par::Seq);
    symmetrize(&mut a);
    let (lambda, u) = symmetric_eigen(a.as_ref())?;
    let lambda_max = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let count = n_modes.min(r);
    let mut xi = u.subcols(0, count).to_owned();
    solve_upper_triangular_in_place(l.transpose(), xi.as_mut(), Par::Seq);

    let kxi = &k_r * &xi;
    let mxi = &m_r * &xi;
    let ap = &snapshot * &xi;
    let mut out = ModalResult {
        frequencies: Vec::with_capacity(count),
        eigenvalues: lambda[..count].to_vec(),
        modes: Vec::with_capacity(count),
        residuals: Vec::with_capacity(count),
        constraint_residuals: Vec::with_capacity(count),
        reduced_dim: r,
    };
    for (i, &lam) in lambda.iter().enumerate().take(count) {
        let omega2 = if lam <= RIGID_TOL * lambda_max { 0.0 } else { lam };
        out.frequencies.push(omega2.sqrt() / (2.0 * PI));
        let res: Vec<f64> = (0..r).map(|k| kxi[(k, i)] - lam * mxi[(k, i)]).collect();
        let mcol: Vec<f64> = (0..r).map(|k| mxi[(k, i)]).collect();
        let denom = lambda_max * norm2(&mcol);
        out.residuals.push(if denom > 0.0 { norm2(&res) / denom } else { 0.0 });
        let mut mode = vec![0.0; n];
        for k in 0..np {
            mode[k] = ap[(k, i)];
        }
        out.constraint_residuals.push(csys.constraint_residual(&sys.coenergy(&mode)));
        out.modes.push(mode);
    }
    Ok(out)
}
