use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{residual_velocity, BrakeModel, EvaluationError, ScoringPolicy};
use crate::units::{kmh_to_ms, ms_to_kmh};

pub const RESULTS_CSV_HEADER: &str =
    "experiment,variant,test_case,v_aeb_kmh,t_aeb_s,d_x_m,v_res_kmh,collided,valid,score";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Exp1,
    Exp2,
    Custom(String),
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Experiment::Exp1 => f.write_str("exp1"),
            Experiment::Exp2 => f.write_str("exp2"),
            Experiment::Custom(name) => f.write_str(name),
        }
    }
}

/// Lateral variant of a run; orders Left < Ideal < Right < paths.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Left,
    Ideal,
    Right,
    /// A variation path, by its one-line mnemonic form.
    Path(String),
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Left => f.write_str("left"),
            Variant::Ideal => f.write_str("ideal"),
            Variant::Right => f.write_str("right"),
            Variant::Path(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLabel {
    pub experiment: Experiment,
    pub variant: Variant,
    /// Nominal test speed, km/h.
    pub test_case_kmh: f64,
}

impl RunLabel {
    fn sort_cmp(&self, other: &Self) -> Ordering {
        (&self.experiment, &self.variant)
            .cmp(&(&other.experiment, &other.variant))
            .then(self.test_case_kmh.total_cmp(&other.test_case_kmh))
    }
}

impl fmt::Display for RunLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{:.1} km/h", self.experiment, self.variant, self.test_case_kmh)
    }
}

/// One evaluated run. The trigger fields are `None` when the trigger never fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub label: RunLabel,
    pub v_aeb_kmh: Option<f64>,
    pub t_aeb: Option<f64>,
    pub d_x: Option<f64>,
    pub v_res_kmh: f64,
    pub collided: bool,
    pub valid: bool,
}

impl RunResult {
    /// Result whose residual speed follows from the trigger conditions via
    /// the analytic brake model against a constant-speed target.
    pub fn analytic(
        label: RunLabel,
        t_aeb: f64,
        v_aeb: f64,
        d_x: f64,
        target_v: f64,
        model: &BrakeModel,
        valid: bool,
    ) -> Result<Self, EvaluationError> {
        let v_res = residual_velocity(v_aeb, d_x, target_v, model)?;
        Ok(Self {
            label,
            v_aeb_kmh: Some(ms_to_kmh(v_aeb)),
            t_aeb: Some(t_aeb),
            d_x: Some(d_x),
            v_res_kmh: ms_to_kmh(v_res),
            collided: v_res > 0.0,
            valid,
        })
    }

    /// Residual speed in m/s.
    pub fn v_res(&self) -> f64 {
        kmh_to_ms(self.v_res_kmh)
    }
}

/// Ordered, scored results with CSV and aligned-text renderings.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<(RunResult, f64)>,
}

/// Sorts by (experiment, variant, test case) and scores every run.
pub fn build_table(results: &[RunResult], policy: &dyn ScoringPolicy) -> Result<ResultTable, EvaluationError> {
    let mut rows: Vec<RunResult> = results.to_vec();
    rows.sort_by(|a, b| a.label.sort_cmp(&b.label));
    if let Some(w) = rows.windows(2).find(|w| w[0].label.sort_cmp(&w[1].label) == Ordering::Equal) {
        return Err(EvaluationError::DuplicateLabel(w[0].label.to_string()));
    }
    Ok(ResultTable {
        rows: rows
            .into_iter()
            .map(|r| {
                let s = policy.score(&r);
                (r, s)
            })
            .collect(),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

const CELL: usize = 7;

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RESULTS_CSV_HEADER);
        out.push('\n');
        for (r, score) in &self.rows {
            let variant = r.label.variant.to_string();
            let variant =
                if variant.contains([',', '"']) { format!("\"{}\"", variant.replace('"', "\"\"")) } else { variant };
            writeln!(
                out,
                "{},{},{:.1},{},{},{},{:.6},{},{},{:.6}",
                r.label.experiment,
                variant,
                r.label.test_case_kmh,
                opt(r.v_aeb_kmh),
                opt(r.t_aeb),
                opt(r.d_x),
                r.v_res_kmh,
                r.collided,
                r.valid,
                score
            )
            .expect("writing to a String");
        }
        out
    }

    fn test_cases(&self) -> Vec<f64> {
        let mut cases: Vec<f64> = Vec::new();
        for (r, _) in &self.rows {
            if !cases.iter().any(|c| c.total_cmp(&r.label.test_case_kmh) == Ordering::Equal) {
                cases.push(r.label.test_case_kmh);
            }
        }
        cases.sort_by(f64::total_cmp);
        cases
    }

    /// One row per (experiment, variant) and a v_AEB / D_x / v_res column
    /// group per test case. Invalid runs carry a `*` after v_res.
    pub fn to_text(&self) -> String {
        let cases = self.test_cases();
        let name_w = self.rows.iter().map(|(r, _)| r.label.variant.to_string().len()).max().unwrap_or(0).max(7);
        let exp_w = self.rows.iter().map(|(r, _)| r.label.experiment.to_string().len()).max().unwrap_or(0).max(10);
        let lead = exp_w + 2 + name_w;

        let mut out = String::new();
        let mut line = format!("{:<lead$}", "Test case");
        for c in &cases {
            line.push_str(&format!("  {:^w$}", format!("{c:.1} km/h"), w = 3 * CELL));
        }
        out.push_str(line.trim_end());
        out.push('\n');
        let mut line = format!("{:<exp_w$}  {:<name_w$}", "Experiment", "Variant");
        for _ in &cases {
            line.push_str(&format!("  {:>CELL$}{:>CELL$}{:>CELL$}", "v_AEB", "D_x", "v_res"));
        }
        out.push_str(line.trim_end());
        out.push('\n');

        let mut keys: Vec<(&Experiment, &Variant)> = Vec::new();
        for (r, _) in &self.rows {
            let key = (&r.label.experiment, &r.label.variant);
            if keys.last() != Some(&key) {
                keys.push(key);
            }
        }
        for (exp, variant) in keys {
            let mut line = format!("{:<exp_w$}  {:<name_w$}", exp.to_string(), variant.to_string());
            for c in &cases {
                let cell = self.rows.iter().map(|(r, _)| r).find(|r| {
                    &r.label.experiment == exp
                        && &r.label.variant == variant
                        && r.label.test_case_kmh.total_cmp(c) == Ordering::Equal
                });
                match cell {
                    Some(r) => {
                        let fmt1 =
                            |x: Option<f64>, p: usize| x.map(|v| format!("{v:.p$}")).unwrap_or_else(|| "-".into());
                        let vres = format!("{:.1}{}", r.v_res_kmh, if r.valid { "" } else { "*" });
                        line.push_str(&format!(
                            "  {:>CELL$}{:>CELL$}{:>CELL$}",
                            fmt1(r.v_aeb_kmh, 1),
                            fmt1(r.d_x, 2),
                            vres
                        ));
                    }
                    None => line.push_str(&format!("  {:>CELL$}{:>CELL$}{:>CELL$}", "-", "-", "-")),
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

/// Which lateral variant triggered farther from the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DxOrdering {
    /// The ideal run fired at a larger gap than both oscillating runs.
    IdealLarger,
    /// Both oscillating runs fired at a larger gap than the ideal run.
    OscillatingLarger,
    Equal,
    /// The two oscillating runs fall on different sides of the ideal run.
    Mixed,
    /// A variant is missing or did not fire.
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    /// Test case (km/h) and its ordering.
    pub per_case: Vec<(f64, DxOrdering)>,
}

impl InversionReport {
    /// The ideal-vs-oscillating ordering flips between test cases.
    pub fn inverted(&self) -> bool {
        let has = |o| self.per_case.iter().any(|&(_, x)| x == o);
        has(DxOrdering::IdealLarger) && has(DxOrdering::OscillatingLarger)
    }
}

/// Compares trigger distances of the ideal and oscillating variants per test case.
pub fn detect_inversion(results: &[RunResult], experiment: &Experiment) -> InversionReport {
    const EPS: f64 = 1e-9;
    let mut cases: BTreeSet<u64> = BTreeSet::new();
    for r in results.iter().filter(|r| &r.label.experiment == experiment) {
        cases.insert(r.label.test_case_kmh.to_bits());
    }
    let mut per_case: Vec<(f64, DxOrdering)> = cases
        .into_iter()
        .map(f64::from_bits)
        .map(|case| {
            let dx = |v: Variant| {
                results
                    .iter()
                    .find(|r| {
                        &r.label.experiment == experiment && r.label.variant == v && r.label.test_case_kmh == case
                    })
                    .and_then(|r| r.d_x)
            };
            let ordering = match (dx(Variant::Left), dx(Variant::Ideal), dx(Variant::Right)) {
                (Some(l), Some(i), Some(r)) => {
                    let side = |o: f64| {
                        if (o - i).abs() <= EPS {
                            0
                        } else if o > i {
                            1
                        } else {
                            -1
                        }
                    };
                    match (side(l), side(r)) {
                        (1, 1) => DxOrdering::OscillatingLarger,
                        (-1, -1) => DxOrdering::IdealLarger,
                        (0, 0) => DxOrdering::Equal,
                        _ => DxOrdering::Mixed,
                    }
                }
                _ => DxOrdering::Incomplete,
            };
            (case, ordering)
        })
        .collect();
    per_case.sort_by(|a, b| a.0.total_cmp(&b.0));
    InversionReport { per_case }
}
