//! EuroNCAP AEB/FCW car-to-car rear test rules: scenario families, test
//! speed sequencing and run validity over the tolerance window.

mod sequencing;
mod validity;

use serde::{Deserialize, Serialize};

pub use sequencing::{next_test_speed, speed_sequence, SequencingError};
pub use validity::{
    check_validity, Nominal, Parameter, SpeedBound, ToleranceSpec, ValidityError, ValidityReport, Violation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    /// Stationary target.
    CCRs,
    /// Moving target.
    CCRm,
    /// Braking target.
    CCRb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Function {
    Aeb,
    Fcw,
}

/// Headway and target deceleration variants of the braking-target family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcrbVariant {
    /// m
    pub gap: f64,
    /// m/s²
    pub decel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFamily {
    pub kind: FamilyKind,
    pub function: Function,
    /// Inclusive VUT speed range, km/h.
    pub vut_speed_range: (f64, f64),
    pub step_major: f64,
    pub step_minor: f64,
    /// km/h
    pub target_speed: f64,
    /// Allowed braking-target variants; empty for the other families.
    pub ccrb_variants: Vec<CcrbVariant>,
}

impl ScenarioFamily {
    pub fn new(kind: FamilyKind, function: Function) -> Self {
        let range = match (kind, function) {
            (FamilyKind::CCRs, Function::Aeb) => (10.0, 50.0),
            (FamilyKind::CCRs, Function::Fcw) => (30.0, 80.0),
            (FamilyKind::CCRm, Function::Aeb) => (30.0, 70.0),
            (FamilyKind::CCRm, Function::Fcw) => (50.0, 80.0),
            (FamilyKind::CCRb, _) => (50.0, 50.0),
        };
        let target_speed = match kind {
            FamilyKind::CCRs => 0.0,
            FamilyKind::CCRm => 20.0,
            FamilyKind::CCRb => 50.0,
        };
        let ccrb_variants = if kind == FamilyKind::CCRb {
            [40.0, 12.0]
                .into_iter()
                .flat_map(|gap| [2.0, 6.0].into_iter().map(move |decel| CcrbVariant { gap, decel }))
                .collect()
        } else {
            Vec::new()
        };
        Self { kind, function, vut_speed_range: range, step_major: 10.0, step_minor: 5.0, target_speed, ccrb_variants }
    }

    pub fn ccrs_aeb() -> Self {
        Self::new(FamilyKind::CCRs, Function::Aeb)
    }

    /// Whether the target-speed tolerance band applies to this family.
    pub fn has_moving_target(&self) -> bool {
        self.kind != FamilyKind::CCRs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_table() {
        let cases = [
            (FamilyKind::CCRs, Function::Aeb, (10.0, 50.0), 0.0),
            (FamilyKind::CCRs, Function::Fcw, (30.0, 80.0), 0.0),
            (FamilyKind::CCRm, Function::Aeb, (30.0, 70.0), 20.0),
            (FamilyKind::CCRm, Function::Fcw, (50.0, 80.0), 20.0),
            (FamilyKind::CCRb, Function::Aeb, (50.0, 50.0), 50.0),
            (FamilyKind::CCRb, Function::Fcw, (50.0, 50.0), 50.0),
        ];
        for (kind, func, range, target) in cases {
            let f = ScenarioFamily::new(kind, func);
            assert_eq!(f.vut_speed_range, range);
            assert_eq!(f.target_speed, target);
            assert_eq!((f.step_major, f.step_minor), (10.0, 5.0));
        }
        let b = ScenarioFamily::new(FamilyKind::CCRb, Function::Aeb);
        assert_eq!(b.ccrb_variants.len(), 4);
        assert!(b.ccrb_variants.contains(&CcrbVariant { gap: 12.0, decel: 6.0 }));
    }
}
