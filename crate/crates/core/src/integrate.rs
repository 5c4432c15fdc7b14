//! Implicit midpoint time stepping for the unconstrained and constrained systems.
//!
//! Each step solves for `(a1, e_m, lambda)`:
//!
//! ```text
//! [ M/dt   -J   -G^T ] [ a1  ]   [ M a0/dt + B_f f(t_m) ]
//! [ -Q/2    M    0   ] [ e_m ] = [ Q a0 / 2             ]
//! [  0      G    0   ] [ lam ]   [ 0                    ]
//! ```

use std::io::Write;

use crate::boundary::{consistent_initialize, ConstrainedPHSystem};
use crate::error::{Error, Result};
use crate::linalg::{dot, format_g17, norm2, norm_inf, CsrMatrix, LuFactor, TripletBuilder};
use crate::phcore::PHSystem;

const REFINEMENT_SWEEPS: usize = 2;

/// Factored midpoint system for a fixed step size.
#[derive(Debug, Clone)]
pub struct MidpointStepper {
    n: usize,
    k: usize,
    dt: f64,
    mass: CsrMatrix,
    energy: CsrMatrix,
    matrix: CsrMatrix,
    lu: LuFactor,
}

#[derive(Debug, Clone)]
pub struct MidpointStep {
    pub state: Vec<f64>,
    pub midpoint_coenergy: Vec<f64>,
    pub multipliers: Vec<f64>,
}

impl MidpointStepper {
    /// `g` has one row per multiplier and may be empty.
    pub fn new(sys: &PHSystem, g: &CsrMatrix, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter(format!("time step {dt} must be finite and nonzero")));
        }
        let n = sys.dim();
        let k = g.nrows();
        if g.ncols() != n {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} columns, expected {n}",
                g.ncols()
            )));
        }
        let mut t = TripletBuilder::new(2 * n + k, 2 * n + k);
        t.add_block(0, 0, sys.mass(), 1.0 / dt);
        t.add_block(0, n, sys.interconnection(), -1.0);
        t.add_block_transposed(0, 2 * n, g, -1.0);
        t.add_block(n, 0, sys.energy(), -0.5);
        t.add_block(n, n, sys.mass(), 1.0);
        t.add_block(2 * n, n, g, 1.0);
        let matrix = t.build();
        let lu = LuFactor::new(&matrix, "midpoint system")?;
        let probe = lu.solve(&vec![1.0; 2 * n + k]);
        if probe.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(
                "midpoint saddle-point matrix is singular; constraints are probably redundant".into(),
            ));
        }
        Ok(Self {
            n,
            k,
            dt,
            mass: sys.mass().clone(),
            energy: sys.energy().clone(),
            matrix,
            lu,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step from `a0` with midpoint forcing `forcing = B_f f(t_m)`.
    pub fn step(&self, a0: &[f64], forcing: &[f64]) -> MidpointStep {
        let (n, k) = (self.n, self.k);
        let mut rhs = vec![0.0; 2 * n + k];
        let ma = self.mass.mul_vec(a0);
        let qa = self.energy.mul_vec(a0);
        for i in 0..n {
            rhs[i] = ma[i] / self.dt + forcing[i];
            rhs[n + i] = 0.5 * qa[i];
        }
        let mut x = self.lu.solve(&rhs);
        for _ in 0..REFINEMENT_SWEEPS {
            let kx = self.matrix.mul_vec(&x);
            let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, y)| b - y).collect();
            if norm_inf(&r) == 0.0 {
                break;
            }
            let dx = self.lu.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        }
        MidpointStep {
            state: x[..n].to_vec(),
            midpoint_coenergy: x[n..2 * n].to_vec(),
            multipliers: x[2 * n..].to_vec(),
        }
    }
}

/// One unconstrained midpoint step with input `u` evaluated at `t_n + dt/2`.
pub fn step_midpoint_ode(sys: &PHSystem, a_n: &[f64], u: &dyn Fn(f64) -> Vec<f64>, t_n: f64, dt: f64) -> Result<Vec<f64>> {
    let stepper = MidpointStepper::new(sys, &CsrMatrix::zeros(0, sys.dim()), dt)?;
    let forcing = sys.input().mul_vec(&u(t_n + 0.5 * dt));
    Ok(stepper.step(a_n, &forcing).state)
}

/// One constrained midpoint step; returns the new state and the midpoint multipliers.
pub fn step_midpoint_dae(csys: &ConstrainedPHSystem, a_n: &[f64], t_n: f64, dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let stepper = MidpointStepper::new(&csys.system, csys.constraint(), dt)?;
    let forcing = csys.input_matrix().mul_vec(&csys.prescribed(t_n + 0.5 * dt));
    let s = stepper.step(a_n, &forcing);
    Ok((s.state, s.multipliers))
}

/// Simulation record. Every series has one entry per time point; entry 0 holds
/// the initial values and entry `n >= 1` the midpoint quantities of step `n-1`
/// (inputs, outputs, multipliers, power residual, work).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub port_labels: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub hamiltonian: Vec<f64>,
    pub power_residual: Vec<f64>,
    pub constraint_residual: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub multipliers: Vec<Vec<f64>>,
    /// `dt * y_f^T f` through the prescribed ports.
    pub injected_work: Vec<f64>,
    /// `dt * lambda^T G e_m`
    pub multiplier_work: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy_change(&self) -> f64 {
        self.hamiltonian[self.len() - 1] - self.hamiltonian[0]
    }

    pub fn total_injected_work(&self) -> f64 {
        self.injected_work.iter().sum()
    }

    pub fn total_multiplier_work(&self) -> f64 {
        self.multiplier_work.iter().sum()
    }

    /// `|r_n| / max(H(t_n), dt |y^T u|)` per step; zero when both scales vanish.
    pub fn relative_power_residuals(&self) -> Vec<f64> {
        (1..self.len())
            .map(|n| {
                let exchanged = self.dt * dot(&self.outputs[n], &self.inputs[n]).abs();
                let scale = self.hamiltonian[n - 1].max(exchanged);
                let r = self.power_residual[n].abs();
                if r == 0.0 {
                    0.0
                } else {
                    r / scale
                }
            })
            .collect()
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.constraint_residual.iter().fold(0.0, |m, &v| m.max(v))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("t,H,power_residual,constraint_residual");
        for l in &self.port_labels {
            header.push_str(&format!(",u_{l}"));
        }
        for l in &self.port_labels {
            header.push_str(&format!(",y_{l}"));
        }
        writeln!(out, "{header}")?;
        for n in 0..self.len() {
            let mut row = vec![
                format_g17(self.times[n]),
                format_g17(self.hamiltonian[n]),
                format_g17(self.power_residual[n]),
                format_g17(self.constraint_residual[n]),
            ];
            row.extend(self.inputs[n].iter().map(|&v| format_g17(v)));
            row.extend(self.outputs[n].iter().map(|&v| format_g17(v)));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn num_steps(t_end: f64, dt: f64) -> usize {
    (t_end / dt - 1e-9).ceil().max(0.0) as usize
}

/// Projects `a0` onto the constraints, then integrates over `[0, t_end]`.
pub fn simulate(csys: &ConstrainedPHSystem, a0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("final time {t_end} must be positive")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
    }
    let sys = &csys.system;
    let a0 = consistent_initialize(csys, a0)?;
    let stepper = MidpointStepper::new(sys, csys.constraint(), dt)?;
    let steps = num_steps(t_end, dt);
    let k = csys.num_multipliers();

    let e0 = sys.coenergy(&a0);
    if !sys.hamiltonian(&a0).is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let mut tr = Trajectory {
        dt,
        port_labels: sys.port_labels().to_vec(),
        times: vec![0.0],
        hamiltonian: vec![sys.hamiltonian(&a0)],
        power_residual: vec![0.0],
        constraint_residual: vec![csys.constraint_residual(&e0)],
        inputs: vec![csys.full_input(&csys.prescribed(0.0), &vec![0.0; k])],
        outputs: vec![sys.output(&e0)],
        multipliers: vec![vec![0.0; k]],
        injected_work: vec![0.0],
        multiplier_work: vec![0.0],
        states: vec![a0],
    };
    tr.states.reserve(steps);
    for step in 0..steps {
        let t_n = step as f64 * dt;
        let f = csys.prescribed(t_n + 0.5 * dt);
        let forcing = csys.input_matrix().mul_vec(&f);
        let s = stepper.step(&tr.states[step], &forcing);
        if s.state.iter().chain(&s.multipliers).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: step + 1 });
        }
        let h1 = sys.hamiltonian(&s.state);
        if !h1.is_finite() {
            return Err(Error::NonFinite { step: step + 1 });
        }
        let u = csys.full_input(&f, &s.multipliers);
        let y = sys.output(&s.midpoint_coenergy);
        let (y_f, _) = csys.split_outputs(&s.midpoint_coenergy);
        let ge = csys.constraint().mul_vec(&s.midpoint_coenergy);
        let e1 = sys.coenergy(&s.state);

        tr.power_residual.push(h1 - tr.hamiltonian[step] - dt * dot(&y, &u));
        tr.hamiltonian.push(h1);
        tr.constraint_residual.push(norm2(&csys.constraint().mul_vec(&e1)));
        tr.injected_work.push(dt * dot(&y_f, &f));
        tr.multiplier_work.push(dt * dot(&s.multipliers, &ge));
        tr.times.push((step + 1) as f64 * dt);
        tr.inputs.push(u);
        tr.outputs.push(y);
        tr.multipliers.push(s.multipliers);
        tr.states.push(s.state);
    }
    Ok(tr)
}
