//! Mixed boundary conditions: ports split into prescribed inputs and
//! Lagrange multipliers, giving the constrained system
//!
//! ```text
//! M a' = J e + B_f f(t) + G^T lambda,   0 = G e,   G = (B P_lambda)^T
//! ```

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{independent_rows, norm2, CsrMatrix};
use crate::phcore::PHSystem;
use crate::ports::{ControlVariant, PortComponent, PortInfo, PortedSystem};
use crate::signal::Signal;

/// Relative threshold for discarding redundant constraint rows.
pub const CONSTRAINT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Condition {
    Free,
    Clamped,
    /// Hard support: no deflection and no tangential rotation.
    SimplySupported {
        #[serde(default)]
        moment: Signal,
    },
    /// One signal per [`PortComponent::ALL`] entry.
    Forced {
        signals: [Signal; 3],
    },
}

impl Condition {
    /// Larger wins at nodes shared by differently conditioned sides.
    pub fn precedence(&self) -> u8 {
        match self {
            Condition::Clamped => 3,
            Condition::SimplySupported { .. } => 2,
            Condition::Forced { .. } => 1,
            Condition::Free => 0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Condition::Free => "free",
            Condition::Clamped => "clamped",
            Condition::SimplySupported { .. } => "simply_supported",
            Condition::Forced { .. } => "forced",
        }
    }
}

/// Role of a single port after the split.
#[derive(Debug, Clone, PartialEq)]
pub enum PortRole {
    Input(Signal),
    Multiplier,
}

fn component_index(c: PortComponent) -> usize {
    PortComponent::ALL.iter().position(|&x| x == c).expect("listed component")
}

/// Dynamic variant: constrained kinematics become multipliers. Kinematic
/// variant: constrained kinematics are zero inputs and prescribed dynamic
/// data becomes a homogeneous constraint.
pub fn port_role(variant: ControlVariant, condition: &Condition, component: PortComponent) -> Result<PortRole> {
    let constrained = match condition {
        Condition::Free | Condition::Forced { .. } => false,
        Condition::Clamped => true,
        Condition::SimplySupported { .. } => component != PortComponent::NormalRotation,
    };
    Ok(match (variant, condition) {
        (_, Condition::Forced { signals }) => PortRole::Input(signals[component_index(component)].clone()),
        (ControlVariant::Dynamic, _) if constrained => PortRole::Multiplier,
        (ControlVariant::Dynamic, Condition::SimplySupported { moment }) => PortRole::Input(moment.clone()),
        (ControlVariant::Dynamic, _) => PortRole::Input(Signal::zero()),
        (ControlVariant::Kinematic, _) if constrained => PortRole::Input(Signal::zero()),
        (ControlVariant::Kinematic, Condition::SimplySupported { moment }) => {
            if !moment.is_zero() {
                return Err(Error::BoundaryCondition(
                    "a nonzero simply supported moment cannot be imposed in the kinematic variant".into(),
                ));
            }
            PortRole::Multiplier
        }
        (ControlVariant::Kinematic, _) => PortRole::Multiplier,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BCSpec {
    pub conditions: BTreeMap<i64, Condition>,
}

impl BCSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(tags: &[i64], condition: Condition) -> Self {
        Self {
            conditions: tags.iter().map(|&t| (t, condition.clone())).collect(),
        }
    }

    pub fn with(mut self, tag: i64, condition: Condition) -> Self {
        self.conditions.insert(tag, condition);
        self
    }

    pub fn get(&self, tag: i64) -> Option<&Condition> {
        self.conditions.get(&tag)
    }

    /// Every tag in `tags` has a condition and no condition names another tag.
    pub fn validate(&self, tags: &[i64]) -> Result<()> {
        if let Some(&t) = self.conditions.keys().find(|t| !tags.contains(t)) {
            return Err(Error::UnknownTag(t));
        }
        if let Some(t) = tags.iter().find(|t| !self.conditions.contains_key(t)) {
            return Err(Error::BoundaryCondition(format!("tag {t} has no condition")));
        }
        for (tag, c) in &self.conditions {
            let finite = match c {
                Condition::Forced { signals } => signals.iter().all(Signal::is_finite),
                Condition::SimplySupported { moment } => moment.is_finite(),
                _ => true,
            };
            if !finite {
                return Err(Error::BoundaryCondition(format!("tag {tag}: non-finite signal")));
            }
        }
        Ok(())
    }

    /// Condition governing each port node, by precedence among the tags
    /// meeting there.
    pub fn resolve_node_conditions(&self, ports: &[PortInfo]) -> BTreeMap<usize, &Condition> {
        let mut out: BTreeMap<usize, &Condition> = BTreeMap::new();
        for p in ports {
            if let Some(c) = self.conditions.get(&p.tag) {
                let slot = out.entry(p.node).or_insert(c);
                if c.precedence() > slot.precedence() {
                    *slot = c;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedPHSystem {
    pub system: PHSystem,
    pub ports: Vec<PortInfo>,
    pub variant: ControlVariant,
    pub spec: BCSpec,
    momentum_dim: usize,
    /// Port indices of `P_f`, in port order.
    pub input_ports: Vec<usize>,
    /// Port indices of `P_lambda`, in port order.
    pub multiplier_ports: Vec<usize>,
    pub signals: Vec<Signal>,
    /// Subset of `multiplier_ports` kept after redundancy pruning.
    pub active_multipliers: Vec<usize>,
    /// Pruned multiplier ports; their multipliers are zero.
    pub dependent_multipliers: Vec<usize>,
    b_f: CsrMatrix,
    g: CsrMatrix,
}

pub fn split_ports<S: PortedSystem + ?Sized>(model: &S, spec: &BCSpec) -> Result<ConstrainedPHSystem> {
    let tags = model.boundary_tags();
    spec.validate(&tags)?;
    let variant = model.control_variant();
    let ports = model.ports();
    let present: Vec<PortComponent> = PortComponent::ALL
        .into_iter()
        .filter(|c| ports.iter().any(|p| p.component == *c))
        .collect();
    for (tag, c) in &spec.conditions {
        if let Condition::Forced { signals } = c {
            for (k, s) in signals.iter().enumerate() {
                if !present.contains(&PortComponent::ALL[k]) && !s.is_zero() {
                    return Err(Error::BoundaryCondition(format!(
                        "tag {tag}: signal {k} drives a component this model does not have"
                    )));
                }
            }
        }
    }

    let mut input_ports = Vec::new();
    let mut multiplier_ports = Vec::new();
    let mut signals = Vec::new();
    for (k, p) in ports.iter().enumerate() {
        let condition = &spec.conditions[&p.tag];
        match port_role(variant, condition, p.component)? {
            PortRole::Input(s) => {
                input_ports.push(k);
                signals.push(s);
            }
            PortRole::Multiplier => multiplier_ports.push(k),
        }
    }

    let system = model.system().clone();
    let b = system.input();
    let g_all = b.select_columns(&multiplier_ports).transpose();
    let keep = independent_rows(g_all.to_dense().as_ref(), CONSTRAINT_RANK_TOL);
    let active_multipliers: Vec<usize> = keep.iter().map(|&r| multiplier_ports[r]).collect();
    let dependent_multipliers: Vec<usize> = multiplier_ports
        .iter()
        .copied()
        .filter(|p| !active_multipliers.contains(p))
        .collect();
    let g = g_all.select_rows(&keep);
    let b_f = b.select_columns(&input_ports);
    Ok(ConstrainedPHSystem {
        momentum_dim: model.momentum_dim(),
        ports: ports.to_vec(),
        variant,
        spec: spec.clone(),
        input_ports,
        multiplier_ports,
        signals,
        active_multipliers,
        dependent_multipliers,
        b_f,
        g,
        system,
    })
}

impl ConstrainedPHSystem {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn momentum_dim(&self) -> usize {
        self.momentum_dim
    }

    pub fn num_multipliers(&self) -> usize {
        self.active_multipliers.len()
    }

    pub fn is_constrained(&self) -> bool {
        !self.active_multipliers.is_empty()
    }

    /// `G = (B P_lambda)^T` restricted to independent rows.
    pub fn constraint(&self) -> &CsrMatrix {
        &self.g
    }

    /// `B P_f`
    pub fn input_matrix(&self) -> &CsrMatrix {
        &self.b_f
    }

    /// Prescribed values on `P_f` at time `t`.
    pub fn prescribed(&self, t: f64) -> Vec<f64> {
        self.signals.iter().map(|s| s.eval(t)).collect()
    }

    pub fn is_forced(&self) -> bool {
        self.signals.iter().any(|s| !s.is_zero())
    }

    /// Full port input from prescribed values and active multipliers.
    pub fn full_input(&self, f: &[f64], lambda: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.ports.len()];
        for (&k, &v) in self.input_ports.iter().zip(f) {
            u[k] = v;
        }
        for (&k, &v) in self.active_multipliers.iter().zip(lambda) {
            u[k] = v;
        }
        u
    }

    /// `(y_f, y_lambda) = (P_f^T B^T e, P_lambda^T B^T e)`
    pub fn split_outputs(&self, e: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let y = self.system.output(e);
        (
            self.input_ports.iter().map(|&k| y[k]).collect(),
            self.multiplier_ports.iter().map(|&k| y[k]).collect(),
        )
    }

    /// `||G e||_2`
    pub fn constraint_residual(&self, e: &[f64]) -> f64 {
        norm2(&self.g.mul_vec(e))
    }

    /// Labels of the pruned constraints.
    pub fn dependent_labels(&self) -> Vec<String> {
        self.dependent_multipliers
            .iter()
            .map(|&k| self.ports[k].label.clone())
            .collect()
    }
}

/// Mass-weighted least-squares projection of `a0` onto `{a : G M^-1 Q a = 0}`.
pub fn consistent_initialize(csys: &ConstrainedPHSystem, a0: &[f64]) -> Result<Vec<f64>> {
    let n = csys.dim();
    if a0.len() != n {
        return Err(Error::Dimension(format!(
            "initial state has length {}, expected {n}",
            a0.len()
        )));
    }
    if a0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite initial state".into()));
    }
    if !csys.is_constrained() {
        return Ok(a0.to_vec());
    }
    let sys = &csys.system;
    let g = csys.constraint();
    let mf = sys.mass_factor();
    let x = mf.solve_dense(g.transpose().to_dense().as_ref());
    let y = sys.energy().mul_dense(x.as_ref());
    let z = mf.solve_dense(y.as_ref());
    let s: Mat<f64> = y.transpose() * &z;
    let chol = s.llt(faer::Side::Lower).map_err(|e| {
        Error::Solver(format!(
            "constraint projection is singular ({e:?}); dependent constraints: {:?}",
            csys.dependent_labels()
        ))
    })?;
    let mut a = a0.to_vec();
    // one correction plus one refinement sweep
    for _ in 0..2 {
        let r = g.mul_vec(&sys.coenergy(&a));
        if r.iter().all(|&v| v == 0.0) {
            break;
        }
        let nu = chol.solve(Mat::from_fn(r.len(), 1, |i, _| r[i]));
        for (i, ai) in a.iter_mut().enumerate() {
            let mut c = 0.0;
            for k in 0..nu.nrows() {
                c += z[(i, k)] * nu[(k, 0)];
            }
            *ai -= c;
        }
    }
    let e = sys.coenergy(&a);
    let scale = g.max_abs() * norm2(&e).max(norm2(&sys.coenergy(a0)));
    let residual = csys.constraint_residual(&e);
    if residual > 1e-12 * scale {
        return Err(Error::Solver(format!(
            "consistent initialization left constraint residual {residual:e}"
        )));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_plate, AssembledPlate, FESpaces, Formulation};
    use crate::material::PlateMaterial;
    use crate::mesh::structured_rectangle;
    use crate::ports::PortQuantity;

    fn plate(n: usize, variant: ControlVariant) -> AssembledPlate {
        let mesh = structured_rectangle(1.0, 1.0, n, n).unwrap();
        let mat = PlateMaterial::new(210e9, 0.3, 7850.0, 0.01).unwrap();
        assemble_plate(
            &mesh,
            &mat,
            FESpaces::default(),
            Formulation::Vectorial,
            variant,
            &[1, 2, 3, 4],
        )
        .unwrap()
    }

    fn sine(amplitude: f64) -> Signal {
        Signal::Sine {
            amplitude,
            frequency: 10.0,
            phase: 0.0,
        }
    }

    #[test]
    fn all_free_is_unconstrained() {
        let p = plate(3, ControlVariant::Dynamic);
        let c = split_ports(&p, &BCSpec::uniform(&[1, 2, 3, 4], Condition::Free)).unwrap();
        assert!(c.multiplier_ports.is_empty());
        assert_eq!(c.input_ports.len(), p.system.num_ports());
        assert_eq!(c.constraint().nrows(), 0);
    }

    #[test]
    fn fully_clamped_has_no_inputs() {
        let p = plate(3, ControlVariant::Dynamic);
        let c = split_ports(&p, &BCSpec::uniform(&[1, 2, 3, 4], Condition::Clamped)).unwrap();
        assert!(c.input_ports.is_empty());
        assert_eq!(c.multiplier_ports.len(), 3 * p.trace.len());
        // each of the 4 corners repeats w, theta_x, theta_y once
        assert_eq!(c.dependent_multipliers.len(), 12);
        assert_eq!(c.num_multipliers() + 12, 3 * p.trace.len());
    }

    #[test]
    fn mixed_clamped_and_forced() {
        let p = plate(3, ControlVariant::Dynamic);
        let forced = Condition::Forced {
            signals: [Signal::zero(), sine(1.0), sine(0.5)],
        };
        let spec = BCSpec::uniform(&[2, 3, 4], forced).with(1, Condition::Clamped);
        let c = split_ports(&p, &spec).unwrap();
        assert!(!c.input_ports.is_empty() && !c.multiplier_ports.is_empty());
        assert!(c.is_forced());
        assert!(c.multiplier_ports.iter().all(|&k| p.ports[k].tag == 1));
    }

    #[test]
    fn split_is_a_permutation() {
        let p = plate(2, ControlVariant::Dynamic);
        let spec = BCSpec::new()
            .with(1, Condition::Clamped)
            .with(2, Condition::SimplySupported { moment: sine(2.0) })
            .with(3, Condition::Free)
            .with(
                4,
                Condition::Forced {
                    signals: [sine(1.0), Signal::zero(), Signal::zero()],
                },
            );
        let c = split_ports(&p, &spec).unwrap();
        let mut all: Vec<usize> = c.input_ports.iter().chain(&c.multiplier_ports).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..p.system.num_ports()).collect::<Vec<_>>());
    }

    #[test]
    fn simple_support_keeps_flexural_moment_as_input() {
        let p = plate(2, ControlVariant::Dynamic);
        let spec = BCSpec::uniform(&[1, 2, 3, 4], Condition::SimplySupported { moment: Signal::zero() });
        let c = split_ports(&p, &spec).unwrap();
        assert!(c
            .input_ports
            .iter()
            .all(|&k| p.ports[k].quantity == PortQuantity::FlexuralMoment));
        assert!(c
            .multiplier_ports
            .iter()
            .all(|&k| p.ports[k].quantity != PortQuantity::FlexuralMoment));
        assert_eq!(c.input_ports.len(), p.trace.len());
    }

    #[test]
    fn kinematic_roles_are_swapped() {
        let p = plate(2, ControlVariant::Kinematic);
        let c = split_ports(&p, &BCSpec::uniform(&[1, 2, 3, 4], Condition::Clamped)).unwrap();
        assert!(c.multiplier_ports.is_empty());
        assert!(!c.is_forced());
        let c = split_ports(&p, &BCSpec::uniform(&[1, 2, 3, 4], Condition::Free)).unwrap();
        assert!(c.input_ports.is_empty());
        let bad = BCSpec::uniform(&[1, 2, 3, 4], Condition::SimplySupported { moment: sine(1.0) });
        assert!(matches!(split_ports(&p, &bad), Err(Error::BoundaryCondition(_))));
    }

    #[test]
    fn coverage_is_checked() {
        let p = plate(2, ControlVariant::Dynamic);
        let partial = BCSpec::uniform(&[1, 2, 3], Condition::Free);
        assert!(matches!(split_ports(&p, &partial), Err(Error::BoundaryCondition(_))));
        let extra = BCSpec::uniform(&[1, 2, 3, 4, 9], Condition::Free);
        assert!(matches!(split_ports(&p, &extra), Err(Error::UnknownTag(9))));
    }

    #[test]
    fn corner_precedence() {
        let p = plate(2, ControlVariant::Dynamic);
        let spec = BCSpec::uniform(&[2, 3, 4], Condition::Free).with(1, Condition::Clamped);
        let nodes = spec.resolve_node_conditions(&p.ports);
        // south-west and south-east corners
        assert_eq!(nodes[&0].name(), "clamped");
        assert_eq!(nodes[&2].name(), "clamped");
        assert_eq!(nodes[&8].name(), "free");
    }

    #[test]
    fn output_split_recombines() {
        let p = plate(2, ControlVariant::Dynamic);
        let spec = BCSpec::uniform(&[1, 3], Condition::Clamped)
            .with(2, Condition::Free)
            .with(4, Condition::Free);
        let c = split_ports(&p, &spec).unwrap();
        let e: Vec<f64> = (0..p.system.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = p.system.output(&e);
        let (yf, yl) = c.split_outputs(&e);
        let mut back = vec![0.0; y.len()];
        for (&k, v) in c.input_ports.iter().zip(&yf) {
            back[k] = *v;
        }
        for (&k, v) in c.multiplier_ports.iter().zip(&yl) {
            back[k] = *v;
        }
        assert_eq!(back, y);
    }

    #[test]
    fn initialization_projects_onto_constraints() {
        let p = plate(3, ControlVariant::Dynamic);
        let c = split_ports(&p, &BCSpec::uniform(&[1, 2, 3, 4], Condition::Clamped)).unwrap();
        let n = c.dim();
        let raw: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.61).cos()).collect();
        assert!(c.constraint_residual(&c.system.coenergy(&raw)) > 1e-3);
        let a = consistent_initialize(&c, &raw).unwrap();
        let e = c.system.coenergy(&a);
        assert!(c.constraint_residual(&e) <= 1e-12 * c.constraint().max_abs() * norm2(&e));
        // fixed point
        let again = consistent_initialize(&c, &a).unwrap();
        let diff = again.iter().zip(&a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-14 * a.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        assert_eq!(consistent_initialize(&c, &vec![0.0; n]).unwrap(), vec![0.0; n]);
    }
}
