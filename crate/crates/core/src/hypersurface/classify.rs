use std::fmt;

use serde::{Deserialize, Serialize};

use super::shape::ShapePoint;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrappedClass {
    Ts,
    Mts,
    Tos,
    Mots,
    Untrapped,
}

impl TrappedClass {
    pub const ALL: [TrappedClass; 5] =
        [TrappedClass::Ts, TrappedClass::Mts, TrappedClass::Tos, TrappedClass::Mots, TrappedClass::Untrapped];

    pub fn as_str(self) -> &'static str {
        match self {
            TrappedClass::Ts => "TS",
            TrappedClass::Mts => "MTS",
            TrappedClass::Tos => "TOS",
            TrappedClass::Mots => "MOTS",
            TrappedClass::Untrapped => "UNTRAPPED",
        }
    }
}

impl fmt::Display for TrappedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class membership at one point. `label` is the most specific class that holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    pub label: TrappedClass,
    pub ts: bool,
    pub mts: bool,
    pub tos: bool,
    pub mots: bool,
    pub theta_xi_plus: f64,
    pub theta_n_plus: f64,
    pub band: f64,
}

/// Applies the trapped-class definitions to `(θ_ξ⁺, θ_N⁺)` with a zero band.
pub fn classify_expansions(theta_xi_plus: f64, theta_n_plus: f64, band: f64) -> PointClass {
    let xi_zero = theta_xi_plus.abs() <= band;
    let xi_neg = theta_xi_plus < -band;
    let n_neg = theta_n_plus < -band;
    let n_nonpos = theta_n_plus <= band;
    let ts = xi_neg && n_neg;
    let mts = xi_zero && n_nonpos;
    let tos = xi_neg;
    let mots = xi_zero;
    let label = if ts {
        TrappedClass::Ts
    } else if mts {
        TrappedClass::Mts
    } else if tos {
        TrappedClass::Tos
    } else if mots {
        TrappedClass::Mots
    } else {
        TrappedClass::Untrapped
    };
    PointClass { label, ts, mts, tos, mots, theta_xi_plus, theta_n_plus, band }
}

/// Classifies from the mean curvatures `(Ṡ₁, S₁)`.
pub fn classify_traces(s1_dot: f64, s1: f64, band: f64) -> PointClass {
    classify_expansions(s1_dot, -s1, band)
}

pub fn classify_point(shape: &ShapePoint, band: f64) -> Result<PointClass> {
    shape.frame().require_future()?;
    Ok(classify_traces(shape.s1_dot, shape.s1, band))
}
