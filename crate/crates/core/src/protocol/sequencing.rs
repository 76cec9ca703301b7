use thiserror::Error;

use super::ScenarioFamily;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequencingError {
    #[error("history entry {index} tested {found} km/h but the protocol called for {}", expected.map(|e| format!("{e} km/h")).unwrap_or_else(|| "no further test".into()))]
    InconsistentHistory { index: usize, found: f64, expected: Option<f64> },
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Speed of the next test run, or `None` once the range is exhausted.
///
/// Major steps from the bottom of the range until the first collision at
/// `s`; then `s − minor` and minor steps upward from there. When `s − minor`
/// falls below the range (collision at the first speed), minor stepping
/// continues upward from `s` instead.
pub fn next_test_speed(family: &ScenarioFamily, history: &[(f64, bool)]) -> Result<Option<f64>, SequencingError> {
    let (min, max) = family.vut_speed_range;
    let mut expected = Some(min);
    let mut minor_mode = false;
    for (index, &(speed, collided)) in history.iter().enumerate() {
        match expected {
            Some(e) if same(e, speed) => {}
            _ => return Err(SequencingError::InconsistentHistory { index, found: speed, expected }),
        }
        let next = if minor_mode {
            speed + family.step_minor
        } else if collided {
            minor_mode = true;
            let back = speed - family.step_minor;
            if back >= min - 1e-9 {
                back
            } else {
                speed + family.step_minor
            }
        } else {
            speed + family.step_major
        };
        expected = (next <= max + 1e-9).then_some(next);
    }
    Ok(expected)
}

/// Drives the sequencing to completion with `collides` deciding each run.
pub fn speed_sequence(family: &ScenarioFamily, mut collides: impl FnMut(f64) -> bool) -> Vec<(f64, bool)> {
    let mut history = Vec::new();
    // span/minor + 2 bounds the number of runs
    let bound = ((family.vut_speed_range.1 - family.vut_speed_range.0) / family.step_minor).ceil() as usize + 3;
    while let Some(speed) = next_test_speed(family, &history).expect("self-generated history is consistent") {
        history.push((speed, collides(speed)));
        assert!(history.len() <= bound, "sequencing failed to terminate");
    }
    history
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{FamilyKind, Function};

    #[test]
    fn starts_at_bottom_of_range() {
        assert_eq!(next_test_speed(&ScenarioFamily::ccrs_aeb(), &[]), Ok(Some(10.0)));
        let fcw = ScenarioFamily::new(FamilyKind::CCRs, Function::Fcw);
        assert_eq!(next_test_speed(&fcw, &[]), Ok(Some(30.0)));
    }

    #[test]
    fn collision_at_40_steps_back_then_up() {
        let f = ScenarioFamily::ccrs_aeb();
        let mut h = vec![(10.0, false), (20.0, false), (30.0, false), (40.0, true)];
        let mut emitted = Vec::new();
        while let Some(s) = next_test_speed(&f, &h).unwrap() {
            emitted.push(s);
            h.push((s, false));
        }
        assert_eq!(emitted, vec![35.0, 40.0, 45.0, 50.0]);
    }

    #[test]
    fn pure_major_stepping() {
        let seq: Vec<f64> =
            speed_sequence(&ScenarioFamily::ccrs_aeb(), |_| false).into_iter().map(|(s, _)| s).collect();
        assert_eq!(seq, vec![10.0, 20.0, 30.0, 40.0, 50.0]);
    }

    #[test]
    fn collision_at_first_speed_continues_upward() {
        let seq: Vec<f64> =
            speed_sequence(&ScenarioFamily::ccrs_aeb(), |s| s == 10.0).into_iter().map(|(s, _)| s).collect();
        assert_eq!(seq, vec![10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0]);
    }

    #[test]
    fn inconsistent_history() {
        let f = ScenarioFamily::ccrs_aeb();
        assert_eq!(
            next_test_speed(&f, &[(10.0, false), (25.0, false)]),
            Err(SequencingError::InconsistentHistory { index: 1, found: 25.0, expected: Some(20.0) })
        );
        let done: Vec<_> = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0].iter().map(|&s| (s, false)).collect();
        assert!(next_test_speed(&f, &done).is_err());
    }

    #[test]
    fn braking_target_family_is_a_single_speed() {
        let f = ScenarioFamily::new(FamilyKind::CCRb, Function::Aeb);
        assert_eq!(speed_sequence(&f, |_| true), vec![(50.0, true)]);
    }
}
