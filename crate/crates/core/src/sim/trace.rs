use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kinematic state of one vehicle. `x` runs along the test axis, `y` is
/// the lateral offset from the ideal trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub vut: VehicleState,
    pub target: VehicleState,
    pub ttc: Option<f64>,
    pub aeb_fired: bool,
    /// Steering-wheel rate, °/s. The kinematic simulator has no steering
    /// model and leaves this empty.
    #[serde(default)]
    pub steer_rate: Option<f64>,
}

impl TraceSample {
    pub fn t(&self) -> f64 {
        self.vut.t
    }

    pub fn gap(&self) -> f64 {
        self.target.x - self.vut.x
    }

    pub fn closing_speed(&self) -> f64 {
        self.vut.v - self.target.v
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub scenario: String,
    pub provenance: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub meta: TraceMeta,
}

pub const TRACE_CSV_HEADER: [&str; 11] =
    ["t", "x_vut", "y_vut", "v_vut", "a_vut", "yaw_rate", "x_tgt", "v_tgt", "gap", "ttc", "aeb_fired"];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace CSV lacks required channel `{0}`")]
    MissingChannel(String),
    #[error("trace CSV row {row}: bad value `{value}` in `{column}`")]
    BadValue { row: usize, column: String, value: String },
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

impl Trace {
    /// Writes the trace CSV. Fixed six-decimal formatting keeps identical
    /// runs byte-identical.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_CSV_HEADER)?;
        for s in &self.samples {
            w.write_record([
                num(s.vut.t),
                num(s.vut.x),
                num(s.vut.y),
                num(s.vut.v),
                num(s.vut.a),
                num(s.vut.yaw_rate),
                num(s.target.x),
                num(s.target.v),
                num(s.gap()),
                s.ttc.map(num).unwrap_or_default(),
                if s.aeb_fired { "1".into() } else { "0".into() },
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Reads a trace CSV. Every header column is required; an optional
    /// `steer_rate` column is picked up when present.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, TraceError> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let mut idx = [0usize; 11];
        for (slot, name) in idx.iter_mut().zip(TRACE_CSV_HEADER) {
            *slot = col(name).ok_or_else(|| TraceError::MissingChannel(name.into()))?;
        }
        let steer = col("steer_rate");
        let mut samples = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let parse = |i: usize, name: &str| -> Result<f64, TraceError> {
                field(i).parse::<f64>().map_err(|_| TraceError::BadValue {
                    row: row + 1,
                    column: name.into(),
                    value: field(i).into(),
                })
            };
            let opt = |i: usize, name: &str| -> Result<Option<f64>, TraceError> {
                if field(i).is_empty() {
                    Ok(None)
                } else {
                    parse(i, name).map(Some)
                }
            };
            let t = parse(idx[0], "t")?;
            let vut = VehicleState {
                t,
                x: parse(idx[1], "x_vut")?,
                y: parse(idx[2], "y_vut")?,
                v: parse(idx[3], "v_vut")?,
                a: parse(idx[4], "a_vut")?,
                yaw_rate: parse(idx[5], "yaw_rate")?,
            };
            let target =
                VehicleState { t, x: parse(idx[6], "x_tgt")?, v: parse(idx[7], "v_tgt")?, ..Default::default() };
            let aeb_fired = match field(idx[10]) {
                "1" | "true" => true,
                "0" | "false" => false,
                other => {
                    return Err(TraceError::BadValue { row: row + 1, column: "aeb_fired".into(), value: other.into() })
                }
            };
            samples.push(TraceSample {
                vut,
                target,
                ttc: opt(idx[9], "ttc")?,
                aeb_fired,
                steer_rate: match steer {
                    Some(i) => opt(i, "steer_rate")?,
                    None => None,
                },
            });
        }
        Ok(Trace { samples, meta: TraceMeta::default() })
    }

    /// First sample at which the trigger had fired.
    pub fn fire_index(&self) -> Option<usize> {
        self.samples.iter().position(|s| s.aeb_fired)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, fired: bool) -> TraceSample {
        TraceSample {
            vut: VehicleState { t, x: t * 7.0, v: 7.0, ..Default::default() },
            target: VehicleState { t, x: 50.0, ..Default::default() },
            ttc: Some((50.0 - t * 7.0) / 7.0),
            aeb_fired: fired,
            steer_rate: None,
        }
    }

    #[test]
    fn header_is_exact() {
        let trace = Trace { samples: vec![sample(0.0, false)], meta: TraceMeta::default() };
        let csv = trace.to_csv_string();
        assert!(csv.starts_with("t,x_vut,y_vut,v_vut,a_vut,yaw_rate,x_tgt,v_tgt,gap,ttc,aeb_fired\n"));
        assert_eq!(
            csv.lines().nth(1),
            Some("0.000000,0.000000,0.000000,7.000000,0.000000,0.000000,50.000000,0.000000,50.000000,7.142857,0")
        );
    }

    #[test]
    fn read_back_and_missing_channel() {
        let trace = Trace { samples: vec![sample(0.0, false), sample(0.5, true)], meta: TraceMeta::default() };
        let back = Trace::read_csv(trace.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back.samples.len(), 2);
        assert!(back.samples[1].aeb_fired);
        assert_eq!(back.fire_index(), Some(1));

        let err = Trace::read_csv("t,x_vut\n0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TraceError::MissingChannel(c) if c == "y_vut"));
    }
}
