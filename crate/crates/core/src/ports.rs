//! Boundary port metadata shared by plate and beam assemblies.

use serde::{Deserialize, Serialize};

use crate::linalg::CsrMatrix;
use crate::phcore::PHSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlVariant {
    /// Forces and momenta are inputs.
    Dynamic,
    /// Velocities are inputs.
    Kinematic,
}

/// Kinematic component a port is collocated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortComponent {
    Translation,
    NormalRotation,
    TangentialRotation,
}

impl PortComponent {
    pub const ALL: [PortComponent; 3] = [
        PortComponent::Translation,
        PortComponent::NormalRotation,
        PortComponent::TangentialRotation,
    ];
}

/// Physical meaning of a port input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortQuantity {
    ShearForce,
    FlexuralMoment,
    TorsionalMoment,
    Velocity,
    NormalRotationRate,
    TangentialRotationRate,
}

impl PortQuantity {
    pub fn of(variant: ControlVariant, component: PortComponent) -> Self {
        match (variant, component) {
            (ControlVariant::Dynamic, PortComponent::Translation) => PortQuantity::ShearForce,
            (ControlVariant::Dynamic, PortComponent::NormalRotation) => PortQuantity::FlexuralMoment,
            (ControlVariant::Dynamic, PortComponent::TangentialRotation) => PortQuantity::TorsionalMoment,
            (ControlVariant::Kinematic, PortComponent::Translation) => PortQuantity::Velocity,
            (ControlVariant::Kinematic, PortComponent::NormalRotation) => PortQuantity::NormalRotationRate,
            (ControlVariant::Kinematic, PortComponent::TangentialRotation) => PortQuantity::TangentialRotationRate,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            PortQuantity::ShearForce => "Qn",
            PortQuantity::FlexuralMoment => "Mnn",
            PortQuantity::TorsionalMoment => "Mns",
            PortQuantity::Velocity => "v",
            PortQuantity::NormalRotationRate => "omega_n",
            PortQuantity::TangentialRotationRate => "omega_s",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortInfo {
    pub label: String,
    pub tag: i64,
    /// Boundary side (maximal straight run of equally tagged edges).
    pub side: usize,
    pub node: usize,
    /// Distance from the start of the side.
    pub arc: f64,
    pub component: PortComponent,
    pub quantity: PortQuantity,
}

pub fn port_label(quantity: PortQuantity, tag: i64, side: usize, node: usize) -> String {
    format!("{}_t{tag}_s{side}_n{node}", quantity.symbol())
}

/// An assembled model exposing boundary ports.
pub trait PortedSystem {
    fn system(&self) -> &PHSystem;
    fn ports(&self) -> &[PortInfo];
    fn control_variant(&self) -> ControlVariant;
    /// All boundary tags of the underlying geometry.
    fn boundary_tags(&self) -> Vec<i64>;
    /// Size of the leading momentum block; the remaining coordinates are strains.
    fn momentum_dim(&self) -> usize;
    /// Pure first-order derivative blocks of `J_d`, named `row/col`.
    fn derivative_blocks(&self) -> Vec<(String, CsrMatrix)>;
}
