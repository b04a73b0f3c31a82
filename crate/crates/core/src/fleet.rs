//! Individual thermostatically controlled loads and their thermal-storage dynamics.
//!
//! Each load is tracked in the storage coordinate `x = C_th (θ - θ_r) / η` (kWh),
//! which evolves as `x_t = γ x_{t-1} + δ u_t` where `u` is the deviation from
//! baseline power (kW).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when checking per-load limits.
pub const LIMIT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FleetError {
    #[error("invalid parameter `{field}` for TCL `{id}`: {reason}")]
    InvalidParameter {
        id: String,
        field: &'static str,
        reason: String,
    },
    #[error("fleet must contain at least one TCL")]
    Empty,
    #[error("schedule interval must be positive, got {0}")]
    InvalidInterval(f64),
    #[error("duplicate TCL id `{0}`")]
    DuplicateId(String),
    #[error("length mismatch: u has {u} entries, x has {x}")]
    LengthMismatch { u: usize, x: usize },
}

/// Physical parameters of one load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TclParams {
    pub id: String,
    /// Baseline power (kW).
    pub p_b: f64,
    /// Rated power (kW).
    pub p_m: f64,
    /// Set-point temperature (°C).
    pub theta_r: f64,
    /// Dead-band half-width (°C).
    pub delta_theta: f64,
    /// Thermal capacitance (kWh/°C).
    pub c_th: f64,
    /// Thermal resistance (°C/kW).
    pub r_th: f64,
    /// Coefficient of performance.
    pub eta: f64,
    /// Optional override of the per-load energy capacity (kWh). Defaults to the
    /// thermal-storage bound `Δθ C_th / η`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
}

impl TclParams {
    pub fn validate(&self) -> Result<(), FleetError> {
        let bad = |field: &'static str, reason: String| FleetError::InvalidParameter {
            id: self.id.clone(),
            field,
            reason,
        };
        let positive = [
            ("p_b", self.p_b),
            ("delta_theta", self.delta_theta),
            ("c_th", self.c_th),
            ("r_th", self.r_th),
            ("eta", self.eta),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(bad(
                    field,
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        if !self.p_m.is_finite() || self.p_m < self.p_b {
            return Err(bad(
                "p_m",
                format!("must be at least p_b = {}, got {}", self.p_b, self.p_m),
            ));
        }
        if !self.theta_r.is_finite() {
            return Err(bad("theta_r", "must be finite".into()));
        }
        if let Some(f) = self.f {
            if !(f.is_finite() && f > 0.0) {
                return Err(bad("f", format!("must be positive and finite, got {f}")));
            }
        }
        Ok(())
    }

    /// Upper flexibility limit `p_m - p_b` (kW).
    pub fn u_max(&self) -> f64 {
        self.p_m - self.p_b
    }

    /// Lower flexibility limit `-p_b` (kW).
    pub fn u_min(&self) -> f64 {
        -self.p_b
    }
}

/// Coefficients derived from [`TclParams`] for a given schedule interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TclDerived {
    pub gamma: f64,
    pub delta: f64,
    /// Thermal rate `1 / (R_th C_th)` (1/h).
    pub a: f64,
    /// Input factor `η / C_th` (°C/kWh).
    pub b: f64,
    /// Energy capacity (kWh).
    pub f: f64,
    /// Thermal-storage bound `Δθ C_th / η` (kWh).
    pub x_max: f64,
}

pub fn derive_coefficients(tcl: &TclParams, dt: f64) -> Result<TclDerived, FleetError> {
    tcl.validate()?;
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(FleetError::InvalidInterval(dt));
    }
    let tau = tcl.r_th * tcl.c_th;
    let gamma = (-dt / tau).exp();
    let x_max = tcl.delta_theta * tcl.c_th / tcl.eta;
    Ok(TclDerived {
        gamma,
        delta: (1.0 - gamma) * tau,
        a: 1.0 / tau,
        b: tcl.eta / tcl.c_th,
        f: tcl.f.unwrap_or(x_max),
        x_max,
    })
}

/// Runs the storage recursion from `x0`; returns `x_1..x_T` without clamping.
pub fn simulate_tcl(derived: &TclDerived, x0: f64, u: &[f64]) -> Vec<f64> {
    u.iter()
        .scan(x0, |x, &ut| {
            *x = derived.gamma * *x + derived.delta * ut;
            Some(*x)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    PowerUpper,
    PowerLower,
    StateUpper,
    StateLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub kind: LimitKind,
    pub value: f64,
    pub bound: f64,
}

/// Lists every step at which `u` or `x` leaves the load's operating box.
pub fn check_tcl_limits(
    tcl: &TclParams,
    derived: &TclDerived,
    u: &[f64],
    x: &[f64],
) -> Result<Vec<Violation>, FleetError> {
    check_tcl_limits_with_tol(tcl, derived, u, x, LIMIT_TOL)
}

pub fn check_tcl_limits_with_tol(
    tcl: &TclParams,
    derived: &TclDerived,
    u: &[f64],
    x: &[f64],
    tol: f64,
) -> Result<Vec<Violation>, FleetError> {
    if u.len() != x.len() {
        return Err(FleetError::LengthMismatch {
            u: u.len(),
            x: x.len(),
        });
    }
    let mut out = Vec::new();
    for (step, (&ut, &xt)) in u.iter().zip(x).enumerate() {
        let checks = [
            (
                LimitKind::PowerUpper,
                ut,
                tcl.u_max(),
                ut > tcl.u_max() + tol,
            ),
            (
                LimitKind::PowerLower,
                ut,
                tcl.u_min(),
                ut < tcl.u_min() - tol,
            ),
            (
                LimitKind::StateUpper,
                xt,
                derived.x_max,
                xt > derived.x_max + tol,
            ),
            (
                LimitKind::StateLower,
                xt,
                -derived.x_max,
                xt < -derived.x_max - tol,
            ),
        ];
        out.extend(
            checks
                .into_iter()
                .filter(|c| c.3)
                .map(|(kind, value, bound, _)| Violation {
                    step,
                    kind,
                    value,
                    bound,
                }),
        );
    }
    Ok(out)
}

/// An ordered array of loads sharing one schedule interval. The index of a load
/// in `tcls` is the column index used by network distribution factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fleet {
    #[serde(rename = "dt_hours")]
    pub dt: f64,
    pub tcls: Vec<TclParams>,
}

impl Fleet {
    pub fn new(tcls: Vec<TclParams>, dt: f64) -> Result<Self, FleetError> {
        let fleet = Self { dt, tcls };
        fleet.validate()?;
        Ok(fleet)
    }

    pub fn validate(&self) -> Result<(), FleetError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(FleetError::InvalidInterval(self.dt));
        }
        if self.tcls.is_empty() {
            return Err(FleetError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        for tcl in &self.tcls {
            tcl.validate()?;
            if !seen.insert(tcl.id.as_str()) {
                return Err(FleetError::DuplicateId(tcl.id.clone()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, crate::InputError> {
        let fleet: Fleet = serde_json::from_str(text)?;
        fleet.validate()?;
        Ok(fleet)
    }

    pub fn len(&self) -> usize {
        self.tcls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tcls.is_empty()
    }

    /// Coefficients of every load, in fleet order.
    pub fn derived(&self) -> Result<Vec<TclDerived>, FleetError> {
        self.tcls
            .iter()
            .map(|t| derive_coefficients(t, self.dt))
            .collect()
    }

    pub fn total_baseline(&self) -> f64 {
        self.tcls.iter().map(|t| t.p_b).sum()
    }

    /// Baseline-weighted mean thermal rate, used as the shared dissipation rate
    /// of the fleet's battery models.
    pub fn baseline_weighted_alpha(&self) -> f64 {
        let weighted: f64 = self.tcls.iter().map(|t| t.p_b / (t.r_th * t.c_th)).sum();
        weighted / self.total_baseline()
    }
}
