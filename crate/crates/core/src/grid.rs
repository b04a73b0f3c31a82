//! Line-flow coupling constraints over the fleet.
//!
//! Each line carries a row of distribution factors over the loads and limits on
//! the flow attributable to them: `f_min <= h·(p_b + u) <= f_max`. Factors are
//! input data; nothing here derives them from network topology.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::Fleet;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("network expects {expected} TCLs but the fleet has {actual}")]
    FleetSize { expected: usize, actual: usize },
    #[error("line `{line}` has {len} distribution factors, expected {expected}")]
    RowLength {
        line: String,
        len: usize,
        expected: usize,
    },
    #[error("line `{line}` has f_min {f_min} above f_max {f_max}")]
    InvertedLimits {
        line: String,
        f_min: f64,
        f_max: f64,
    },
    #[error("line `{0}` has a non-finite distribution factor")]
    NonFinite(String),
    #[error("flexibility vector has {actual} entries, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

mod limit_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    /// `null` in JSON stands for an absent (infinite) limit.
    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize_min<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }

    pub fn deserialize_max<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub line_id: String,
    pub h: Vec<f64>,
    #[serde(
        rename = "f_min_kw",
        default = "neg_inf",
        serialize_with = "limit_serde::serialize",
        deserialize_with = "limit_serde::deserialize_min"
    )]
    pub f_min: f64,
    #[serde(
        rename = "f_max_kw",
        default = "pos_inf",
        serialize_with = "limit_serde::serialize",
        deserialize_with = "limit_serde::deserialize_max"
    )]
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkModel {
    pub tcl_count: usize,
    pub lines: Vec<Line>,
}

impl NetworkModel {
    /// A network with no coupling constraints.
    pub fn unconstrained(tcl_count: usize) -> Self {
        Self {
            tcl_count,
            lines: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for line in &self.lines {
            if line.h.len() != self.tcl_count {
                return Err(GridError::RowLength {
                    line: line.line_id.clone(),
                    len: line.h.len(),
                    expected: self.tcl_count,
                });
            }
            if line.h.iter().any(|v| !v.is_finite()) {
                return Err(GridError::NonFinite(line.line_id.clone()));
            }
            if line.f_min.is_nan() || line.f_max.is_nan() || line.f_min > line.f_max {
                return Err(GridError::InvertedLimits {
                    line: line.line_id.clone(),
                    f_min: line.f_min,
                    f_max: line.f_max,
                });
            }
        }
        Ok(())
    }

    pub fn validate_against(&self, fleet: &Fleet) -> Result<(), GridError> {
        self.validate()?;
        if self.tcl_count != fleet.len() {
            return Err(GridError::FleetSize {
                expected: self.tcl_count,
                actual: fleet.len(),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, crate::InputError> {
        let net: NetworkModel = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flow on every line for flexibility `u`: `h·(p_b + u)`.
pub fn line_flows(network: &NetworkModel, fleet: &Fleet, u: &[f64]) -> Result<Vec<f64>, GridError> {
    if u.len() != network.tcl_count || fleet.len() != network.tcl_count {
        return Err(GridError::LengthMismatch {
            expected: network.tcl_count,
            actual: u.len(),
        });
    }
    let power: Vec<f64> = fleet.tcls.iter().zip(u).map(|(t, ui)| t.p_b + ui).collect();
    Ok(network.lines.iter().map(|l| dot(&l.h, &power)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSide {
    Upper,
    Lower,
}

/// One side of a line limit, stated over the flexibility variables of a single
/// time step: `h·u <= rhs` (upper) or `h·u >= rhs` (lower).
#[derive(Debug, Clone, PartialEq)]
pub struct LineRow {
    pub line: usize,
    pub side: RowSide,
    pub h: Vec<f64>,
    /// `f_max - h·p_b` or `f_min - h·p_b`; infinite when the limit is absent.
    pub rhs: f64,
}

/// Two rows per line, identical for every time step.
pub fn build_line_rows(network: &NetworkModel, fleet: &Fleet) -> Vec<LineRow> {
    let p_b: Vec<f64> = fleet.tcls.iter().map(|t| t.p_b).collect();
    network
        .lines
        .iter()
        .enumerate()
        .flat_map(|(i, line)| {
            let base = dot(&line.h, &p_b);
            [
                LineRow {
                    line: i,
                    side: RowSide::Upper,
                    h: line.h.clone(),
                    rhs: line.f_max - base,
                },
                LineRow {
                    line: i,
                    side: RowSide::Lower,
                    h: line.h.clone(),
                    rhs: line.f_min - base,
                },
            ]
        })
        .collect()
}

/// True when the baseline itself satisfies every line limit.
pub fn baseline_within_limits(network: &NetworkModel, fleet: &Fleet, tol: f64) -> bool {
    build_line_rows(network, fleet)
        .iter()
        .all(|r| match r.side {
            RowSide::Upper => r.rhs >= -tol,
            RowSide::Lower => r.rhs <= tol,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::TclParams;
    use rand::{Rng, SeedableRng};

    fn fleet(p_b: &[f64]) -> Fleet {
        let tcls = p_b
            .iter()
            .enumerate()
            .map(|(i, &p)| TclParams {
                id: format!("t{i}"),
                p_b: p,
                p_m: p + 2.0,
                theta_r: 22.0,
                delta_theta: 0.5,
                c_th: 2.0,
                r_th: 2.0,
                eta: 2.5,
                f: None,
            })
            .collect();
        Fleet::new(tcls, 0.1).unwrap()
    }

    fn line(h: Vec<f64>, f_min: f64, f_max: f64) -> Line {
        Line {
            line_id: "l".into(),
            h,
            f_min,
            f_max,
        }
    }

    #[test]
    fn null_coupling() {
        let f = fleet(&[1.0, 2.0]);
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![line(vec![0.0, 0.0], -1.0, 1.0)],
        };
        assert_eq!(line_flows(&net, &f, &[3.0, -1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn aggregate_feeder() {
        let f = fleet(&[2.0, 3.0]);
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![line(vec![1.0, 1.0], f64::NEG_INFINITY, 10.0)],
        };
        assert_eq!(line_flows(&net, &f, &[0.5, 0.5]).unwrap(), vec![6.0]);
        assert!(matches!(
            line_flows(&net, &f, &[0.5]),
            Err(GridError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn flows_match_independent_dot_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..8);
            let p_b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
            let f = fleet(&p_b);
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let net = NetworkModel {
                tcl_count: n,
                lines: vec![line(h.clone(), -100.0, 100.0)],
            };
            let mut expected = 0.0;
            for i in 0..n {
                expected += h[i] * p_b[i] + h[i] * u[i];
            }
            let got = line_flows(&net, &f, &u).unwrap()[0];
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_for_feeder_line() {
        let f = fleet(&[2.0, 3.0]);
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![line(vec![1.0, 1.0], f64::NEG_INFINITY, 5.5)],
        };
        let rows = build_line_rows(&net, &f);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].side, RowSide::Upper);
        assert!((rows[0].rhs - 0.5).abs() < 1e-15);
        assert_eq!(rows[1].rhs, f64::NEG_INFINITY);
        assert!(build_line_rows(&NetworkModel::unconstrained(2), &f).is_empty());
    }

    #[test]
    fn breached_baseline_still_emits_rows() {
        let f = fleet(&[2.0, 3.0]);
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![line(vec![1.0, 1.0], f64::NEG_INFINITY, 4.0)],
        };
        let rows = build_line_rows(&net, &f);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].rhs < 0.0);
        assert!(!baseline_within_limits(&net, &f, 1e-9));
    }

    #[test]
    fn validation() {
        let f = fleet(&[2.0, 3.0]);
        let net = NetworkModel {
            tcl_count: 3,
            lines: vec![],
        };
        assert!(matches!(
            net.validate_against(&f),
            Err(GridError::FleetSize { .. })
        ));
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![line(vec![1.0], 0.0, 1.0)],
        };
        assert!(matches!(net.validate(), Err(GridError::RowLength { .. })));
        let net = NetworkModel {
            tcl_count: 1,
            lines: vec![line(vec![1.0], 2.0, 1.0)],
        };
        assert!(matches!(
            net.validate(),
            Err(GridError::InvertedLimits { .. })
        ));
    }

    #[test]
    fn json_limits_may_be_null_or_absent() {
        let net = NetworkModel::from_json(
            r#"{"tcl_count":2,"lines":[{"line_id":"a","h":[1,1],"f_max_kw":5.0},
                {"line_id":"b","h":[1,0],"f_min_kw":null,"f_max_kw":null}]}"#,
        )
        .unwrap();
        assert_eq!(net.lines[0].f_min, f64::NEG_INFINITY);
        assert_eq!(net.lines[1].f_max, f64::INFINITY);
        let back = serde_json::to_string(&net).unwrap();
        assert!(back.contains("\"f_min_kw\":null"));
        assert!(NetworkModel::from_json(r#"{"tcl_count":1,"lines":[],"extra":1}"#).is_err());
    }
}
