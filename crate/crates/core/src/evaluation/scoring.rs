use std::collections::BTreeMap;
use std::sync::Arc;

use super::{EvaluationError, RunResult};

pub const DEFAULT_SCORING_POLICY: &str = "speed-reduction";

/// Maps one completed run to points.
pub trait ScoringPolicy: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, run: &RunResult) -> f64;
}

/// `(v_test − v_res) / v_test`, clamped to [0, 1]; invalid runs score 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpeedReductionPolicy;

impl ScoringPolicy for SpeedReductionPolicy {
    fn name(&self) -> &str {
        DEFAULT_SCORING_POLICY
    }

    fn score(&self, run: &RunResult) -> f64 {
        let v_test = run.label.test_case_kmh;
        if !run.valid || !(v_test > 0.0) {
            return 0.0;
        }
        ((v_test - run.v_res_kmh) / v_test).clamp(0.0, 1.0)
    }
}

/// 1 for a valid run without contact, else 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct AvoidancePolicy;

impl ScoringPolicy for AvoidancePolicy {
    fn name(&self) -> &str {
        "avoidance"
    }

    fn score(&self, run: &RunResult) -> f64 {
        if run.valid && !run.collided {
            1.0
        } else {
            0.0
        }
    }
}

/// Scoring policies by name.
#[derive(Clone)]
pub struct ScoringRegistry {
    policies: BTreeMap<String, Arc<dyn ScoringPolicy>>,
}

impl Default for ScoringRegistry {
    fn default() -> Self {
        let mut r = Self { policies: BTreeMap::new() };
        r.register(Arc::new(SpeedReductionPolicy)).expect("builtin");
        r.register(Arc::new(AvoidancePolicy)).expect("builtin");
        r
    }
}

impl ScoringRegistry {
    pub fn register(&mut self, policy: Arc<dyn ScoringPolicy>) -> Result<(), EvaluationError> {
        let name = policy.name().to_string();
        if self.policies.contains_key(&name) {
            return Err(EvaluationError::DuplicatePolicy(name));
        }
        self.policies.insert(name, policy);
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.policies.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ScoringPolicy>, EvaluationError> {
        self.policies
            .get(name)
            .cloned()
            .ok_or_else(|| EvaluationError::UnknownPolicy { name: name.into(), available: self.names() })
    }
}
