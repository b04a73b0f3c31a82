//! Worst-case disaggregation mismatch of a candidate battery model.
//!
//! For an aggregate instruction `p_sys` the inner problem finds per-load
//! flexibility `u^i` with the least total slack `l⁺ + l⁻` needed to track it,
//! subject to every load's power and storage limits and the line limits. The
//! optimal value is a convex function of `p_sys`, so its maximum over a battery
//! polytope sits at a vertex: `Q(μ)` is evaluated by solving the inner problem
//! at every vertex of the candidate model. `Q(μ) = 0` certifies that every
//! trajectory the model admits can be dispatched across the fleet.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::battery::{self, BatteryError, BatteryParams, DEFAULT_MAX_HORIZON};
use crate::fleet::{self, Fleet, FleetError, TclDerived};
use crate::grid::{self, GridError, NetworkModel, RowSide};
use crate::lp::{solve_lp, LpError, LpProblem, LpStatus, Sense};

/// Total slack (kW) at or below which an instruction counts as tracked.
pub const Q_ZERO_TOL: f64 = 1e-6;
/// Tolerance on the tracking identity and limit checks of returned schedules.
pub const SCHEDULE_TOL: f64 = 1e-7;
/// Default horizon used when certifying models.
pub const DEFAULT_HORIZON: usize = 4;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid oracle instance: {0}")]
    InvalidInstance(String),
    #[error("baseline is infeasible for the network: {0}")]
    BaselineInfeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// How per-step slacks are folded into one mismatch value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackAggregation {
    /// Sum over the horizon.
    #[default]
    Total,
    /// Largest single-step slack.
    PerStepMax,
}

#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub fleet: Fleet,
    pub network: NetworkModel,
    pub horizon: usize,
    pub x0: Vec<f64>,
    pub aggregation: SlackAggregation,
    /// Horizons above this use sampled vertices instead of exact enumeration.
    pub max_vertex_horizon: usize,
    /// Random objectives used when sampling vertices.
    pub sample_count: usize,
    pub sample_seed: u64,
    derived: Vec<TclDerived>,
}

impl OracleInstance {
    pub fn new(fleet: Fleet, network: NetworkModel, horizon: usize) -> Result<Self, OracleError> {
        fleet.validate()?;
        network.validate_against(&fleet)?;
        if horizon == 0 {
            return Err(OracleError::InvalidInstance(
                "horizon must be at least 1".into(),
            ));
        }
        let derived = fleet.derived()?;
        Ok(Self {
            x0: vec![0.0; fleet.len()],
            fleet,
            network,
            horizon,
            aggregation: SlackAggregation::Total,
            max_vertex_horizon: DEFAULT_MAX_HORIZON,
            sample_count: 256,
            sample_seed: 0,
            derived,
        })
    }

    pub fn uncoupled(fleet: Fleet, horizon: usize) -> Result<Self, OracleError> {
        let n = fleet.len();
        Self::new(fleet, NetworkModel::unconstrained(n), horizon)
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Result<Self, OracleError> {
        if x0.len() != self.fleet.len() {
            return Err(OracleError::InvalidInstance(format!(
                "x0 has {} entries for {} TCLs",
                x0.len(),
                self.fleet.len()
            )));
        }
        for (i, (&x, d)) in x0.iter().zip(&self.derived).enumerate() {
            if !(x.abs() <= d.x_max) {
                return Err(OracleError::InvalidInstance(format!(
                    "x0[{i}] = {x} is outside ±{}",
                    d.x_max
                )));
            }
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn with_aggregation(mut self, aggregation: SlackAggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn dt(&self) -> f64 {
        self.fleet.dt
    }

    pub fn derived(&self) -> &[TclDerived] {
        &self.derived
    }

    /// Column layout of the inner problem.
    pub fn layout(&self) -> InnerLayout {
        InnerLayout {
            tcls: self.fleet.len(),
            steps: self.horizon,
        }
    }

    /// Power scale used to condition the inner problem.
    fn scale(&self) -> f64 {
        self.fleet.tcls.iter().map(|t| t.p_m).fold(1.0, f64::max)
    }
}

/// Variable indices of the inner problem: `u` then `x` (load-major), then
/// `l⁺`, then `l⁻`, then the per-step-max auxiliary when present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerLayout {
    pub tcls: usize,
    pub steps: usize,
}

impl InnerLayout {
    pub fn u(&self, i: usize, t: usize) -> usize {
        i * self.steps + t
    }
    pub fn x(&self, i: usize, t: usize) -> usize {
        (self.tcls + i) * self.steps + t
    }
    pub fn l_plus(&self, t: usize) -> usize {
        2 * self.tcls * self.steps + t
    }
    pub fn l_minus(&self, t: usize) -> usize {
        (2 * self.tcls + 1) * self.steps + t
    }
    pub fn num_core_vars(&self) -> usize {
        (2 * self.tcls + 2) * self.steps
    }
}

fn inner_lp(
    instance: &OracleInstance,
    p_sys: &[f64],
    scale: f64,
) -> Result<LpProblem, OracleError> {
    let lay = instance.layout();
    if p_sys.len() != lay.steps {
        return Err(OracleError::InvalidInstance(format!(
            "instruction has {} steps, instance horizon is {}",
            p_sys.len(),
            lay.steps
        )));
    }
    let extra = usize::from(instance.aggregation == SlackAggregation::PerStepMax);
    let nvars = lay.num_core_vars() + extra;
    let mut objective = vec![0.0; nvars];
    match instance.aggregation {
        SlackAggregation::Total => {
            for t in 0..lay.steps {
                objective[lay.l_plus(t)] = 1.0;
                objective[lay.l_minus(t)] = 1.0;
            }
        }
        SlackAggregation::PerStepMax => objective[nvars - 1] = 1.0,
    }
    let mut lp = LpProblem::new(objective);
    for (i, (tcl, d)) in instance
        .fleet
        .tcls
        .iter()
        .zip(instance.derived())
        .enumerate()
    {
        for t in 0..lay.steps {
            lp.set_bounds(lay.u(i, t), tcl.u_min() / scale, tcl.u_max() / scale);
            lp.set_bounds(lay.x(i, t), -d.x_max / scale, d.x_max / scale);
        }
    }
    // tracking identity
    for (t, &p) in p_sys.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = (0..lay.tcls).map(|i| (lay.u(i, t), 1.0)).collect();
        terms.push((lay.l_plus(t), 1.0));
        terms.push((lay.l_minus(t), -1.0));
        lp.add_sparse_row(&terms, Sense::Eq, p / scale);
    }
    // storage dynamics
    for (i, d) in instance.derived().iter().enumerate() {
        for t in 0..lay.steps {
            let mut terms = vec![(lay.x(i, t), 1.0), (lay.u(i, t), -d.delta)];
            let rhs = if t == 0 {
                d.gamma * instance.x0[i] / scale
            } else {
                terms.push((lay.x(i, t - 1), -d.gamma));
                0.0
            };
            lp.add_sparse_row(&terms, Sense::Eq, rhs);
        }
    }
    // line limits, repeated per step
    for row in grid::build_line_rows(&instance.network, &instance.fleet) {
        if !row.rhs.is_finite() {
            continue;
        }
        let sense = match row.side {
            RowSide::Upper => Sense::Le,
            RowSide::Lower => Sense::Ge,
        };
        for t in 0..lay.steps {
            let terms: Vec<(usize, f64)> = row
                .h
                .iter()
                .enumerate()
                .filter(|(_, &h)| h != 0.0)
                .map(|(i, &h)| (lay.u(i, t), h))
                .collect();
            lp.add_sparse_row(&terms, sense, row.rhs / scale);
        }
    }
    if extra == 1 {
        let z = nvars - 1;
        for t in 0..lay.steps {
            lp.add_sparse_row(
                &[(z, 1.0), (lay.l_plus(t), -1.0), (lay.l_minus(t), -1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }
    Ok(lp)
}

/// The inner disaggregation problem for one instruction, in kW/kWh.
pub fn build_inner_lp(instance: &OracleInstance, p_sys: &[f64]) -> Result<LpProblem, OracleError> {
    inner_lp(instance, p_sys, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerResult {
    /// Optimal total (or per-step-max) slack, kW.
    pub value: f64,
    /// `u[i][t]`, kW.
    pub u: Vec<Vec<f64>>,
    /// `x[i][t]`, kWh.
    pub x: Vec<Vec<f64>>,
    pub l_plus: Vec<f64>,
    pub l_minus: Vec<f64>,
}

impl InnerResult {
    pub fn is_tracked(&self) -> bool {
        self.value <= Q_ZERO_TOL
    }
}

pub fn inner_mismatch(
    instance: &OracleInstance,
    p_sys: &[f64],
) -> Result<InnerResult, OracleError> {
    let scale = instance.scale();
    let lp = inner_lp(instance, p_sys, scale)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible if !instance.network.lines.is_empty() => {
            return Err(OracleError::BaselineInfeasible(
                "no flexibility schedule satisfies the line limits".into(),
            ))
        }
        status => {
            return Err(OracleError::Internal(format!(
                "inner problem reported {status:?} despite slack variables"
            )))
        }
    }
    let lay = instance.layout();
    let pick = |f: &dyn Fn(usize) -> usize| -> Vec<f64> {
        (0..lay.steps).map(|t| sol.primal[f(t)] * scale).collect()
    };
    let u = (0..lay.tcls).map(|i| pick(&|t| lay.u(i, t))).collect();
    let x = (0..lay.tcls).map(|i| pick(&|t| lay.x(i, t))).collect();
    Ok(InnerResult {
        value: (sol.objective * scale).max(0.0),
        u,
        x,
        l_plus: pick(&|t| lay.l_plus(t)),
        l_minus: pick(&|t| lay.l_minus(t)),
    })
}

/// Like [`inner_mismatch`], then among schedules with that mismatch picks one
/// minimizing total deviation `Σ|u|` from baseline.
pub fn least_effort_disaggregation(
    instance: &OracleInstance,
    p_sys: &[f64],
) -> Result<InnerResult, OracleError> {
    let first = inner_mismatch(instance, p_sys)?;
    let scale = instance.scale();
    let base = inner_lp(instance, p_sys, scale)?;
    let lay = instance.layout();
    let n0 = base.num_vars();
    let cols = lay.tcls * lay.steps;
    let mut objective = vec![0.0; n0 + cols];
    objective[n0..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LpProblem::new(objective);
    for j in 0..n0 {
        lp.set_bounds(j, base.lower[j], base.upper[j]);
    }
    for ((row, sense), rhs) in base.rows.iter().zip(&base.senses).zip(&base.rhs) {
        let mut r = row.clone();
        r.resize(n0 + cols, 0.0);
        lp.add_row(r, *sense, *rhs);
    }
    let mut cap = base.objective.clone();
    cap.resize(n0 + cols, 0.0);
    lp.add_row(cap, Sense::Le, first.value / scale + SCHEDULE_TOL);
    for i in 0..lay.tcls {
        for t in 0..lay.steps {
            let a = n0 + i * lay.steps + t;
            lp.add_sparse_row(&[(a, 1.0), (lay.u(i, t), -1.0)], Sense::Ge, 0.0);
            lp.add_sparse_row(&[(a, 1.0), (lay.u(i, t), 1.0)], Sense::Ge, 0.0);
        }
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        log::warn!(
            "least-effort stage reported {:?}; keeping the first schedule",
            sol.status
        );
        return Ok(first);
    }
    let pick = |f: &dyn Fn(usize) -> usize| -> Vec<f64> {
        (0..lay.steps).map(|t| sol.primal[f(t)] * scale).collect()
    };
    Ok(InnerResult {
        value: first.value,
        u: (0..lay.tcls).map(|i| pick(&|t| lay.u(i, t))).collect(),
        x: (0..lay.tcls).map(|i| pick(&|t| lay.x(i, t))).collect(),
        l_plus: pick(&|t| lay.l_plus(t)),
        l_minus: pick(&|t| lay.l_minus(t)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexEvaluation {
    pub p_sys: Vec<f64>,
    pub mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub mu: f64,
    pub params: BatteryParams,
    /// Worst-case mismatch, kW; values at or below [`Q_ZERO_TOL`] are reported as 0.
    pub q_value: f64,
    pub worst_p_sys: Vec<f64>,
    /// Per-load flexibility at the worst instruction.
    pub disaggregation: Vec<Vec<f64>>,
    /// `(l⁺_t, l⁻_t)` at the worst instruction.
    pub slacks: Vec<(f64, f64)>,
    /// False when vertices were sampled rather than enumerated; the value is
    /// then a lower bound.
    pub certified: bool,
    pub vertices: Vec<VertexEvaluation>,
}

/// Vertices of the model's trajectory polytope over the instance horizon, and
/// whether the set is complete.
pub fn model_vertices(
    instance: &OracleInstance,
    params: &BatteryParams,
) -> Result<(Vec<Vec<f64>>, bool), OracleError> {
    match battery::enumerate_vertices(
        params,
        instance.horizon,
        instance.dt(),
        instance.max_vertex_horizon,
    ) {
        Ok(v) => Ok((v, true)),
        Err(BatteryError::BudgetExceeded { horizon, max }) => {
            log::warn!(
                "horizon {horizon} exceeds vertex budget {max}; sampling {} vertices (not certified)",
                instance.sample_count
            );
            let v = battery::sample_vertices(
                params,
                instance.horizon,
                instance.dt(),
                instance.sample_count,
                instance.sample_seed,
            )?;
            Ok((v, false))
        }
        Err(e) => Err(e.into()),
    }
}

/// Worst-case mismatch over a battery model's trajectory polytope.
pub fn worst_case(
    instance: &OracleInstance,
    params: &BatteryParams,
    mu: f64,
) -> Result<OracleResult, OracleError> {
    let (vertices, certified) = model_vertices(instance, params)?;
    let results: Vec<InnerResult> = vertices
        .par_iter()
        .map(|p| inner_mismatch(instance, p))
        .collect::<Result<_, _>>()?;
    // first maximum in lexicographic vertex order
    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.value > results[best].value {
            best = k;
        }
    }
    let worst = &results[best];
    let q_value = if worst.value <= Q_ZERO_TOL {
        0.0
    } else {
        worst.value
    };
    Ok(OracleResult {
        mu,
        params: *params,
        q_value,
        worst_p_sys: vertices[best].clone(),
        disaggregation: worst.u.clone(),
        slacks: worst
            .l_plus
            .iter()
            .copied()
            .zip(worst.l_minus.iter().copied())
            .collect(),
        certified,
        vertices: vertices
            .into_iter()
            .zip(&results)
            .map(|(p_sys, r)| VertexEvaluation {
                p_sys,
                mismatch: r.value,
            })
            .collect(),
    })
}

/// `Q(μ)` for the ESBM mixing `sbm` and `nbm`.
pub fn q_of_mu(
    instance: &OracleInstance,
    sbm: &BatteryParams,
    nbm: &BatteryParams,
    mu: f64,
) -> Result<OracleResult, OracleError> {
    let params = battery::combine(sbm, nbm, mu)?;
    worst_case(instance, &params, mu)
}

/// True when every instruction the model admits can be tracked with zero slack.
pub fn certify_sufficiency(
    instance: &OracleInstance,
    params: &BatteryParams,
) -> Result<bool, OracleError> {
    let r = worst_case(instance, params, f64::NAN)?;
    Ok(r.certified && r.q_value == 0.0)
}

/// Mismatch of the zero instruction; positive when the network rules out the
/// baseline itself.
pub fn baseline_mismatch(instance: &OracleInstance) -> Result<f64, OracleError> {
    Ok(inner_mismatch(instance, &vec![0.0; instance.horizon])?.value)
}

/// Limit breaches of a schedule returned by [`inner_mismatch`]: per-load power
/// and storage limits (re-simulated from `x0`), line limits, and the tracking
/// identity. Empty when the schedule is a valid dispatch.
pub fn schedule_violations(
    instance: &OracleInstance,
    p_sys: &[f64],
    result: &InnerResult,
) -> Result<Vec<String>, OracleError> {
    let mut out = Vec::new();
    for (i, (tcl, d)) in instance
        .fleet
        .tcls
        .iter()
        .zip(instance.derived())
        .enumerate()
    {
        let x = fleet::simulate_tcl(d, instance.x0[i], &result.u[i]);
        for v in fleet::check_tcl_limits_with_tol(tcl, d, &result.u[i], &x, SCHEDULE_TOL)? {
            out.push(format!(
                "tcl {} step {} {:?}: {} vs {}",
                tcl.id, v.step, v.kind, v.value, v.bound
            ));
        }
    }
    for t in 0..instance.horizon {
        let ut: Vec<f64> = result.u.iter().map(|u| u[t]).collect();
        let flows = grid::line_flows(&instance.network, &instance.fleet, &ut)?;
        for (line, flow) in instance.network.lines.iter().zip(flows) {
            if flow > line.f_max + SCHEDULE_TOL || flow < line.f_min - SCHEDULE_TOL {
                out.push(format!("line {} step {t}: flow {flow}", line.line_id));
            }
        }
        let tracked = ut.iter().sum::<f64>() + result.l_plus[t] - result.l_minus[t];
        if (tracked - p_sys[t]).abs() > SCHEDULE_TOL {
            out.push(format!(
                "step {t}: tracking residual {}",
                tracked - p_sys[t]
            ));
        }
    }
    Ok(out)
}

/// Per-vertex diagnostics: `vertex,p_0..p_{T-1},mismatch`.
pub fn vertex_csv(result: &OracleResult) -> String {
    let steps = result.worst_p_sys.len();
    let mut out = String::from("vertex");
    for t in 0..steps {
        let _ = write!(out, ",p_{t}");
    }
    out.push_str(",mismatch\n");
    for (k, v) in result.vertices.iter().enumerate() {
        let _ = write!(out, "{k}");
        for p in &v.p_sys {
            let _ = write!(out, ",{p}");
        }
        let _ = writeln!(out, ",{}", v.mismatch);
    }
    out
}

/// Random instruction trajectories inside a model, for spot checks.
pub fn random_admissible(params: &BatteryParams, horizon: usize, dt: f64, seed: u64) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..horizon)
        .map(|_| rng.gen_range(-params.n_minus..=params.n_plus))
        .collect();
    // shrink toward the origin until admissible
    let mut s = 1.0;
    loop {
        let p: Vec<f64> = raw.iter().map(|v| v * s).collect();
        if battery::admissible(params, &p, dt).admissible || s < 1e-6 {
            return p;
        }
        s *= 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::{nbm_params, sbm_params};
    use crate::fleet::TclParams;
    use crate::grid::Line;

    fn tcl(id: &str, p_b: f64, p_m: f64) -> TclParams {
        TclParams {
            id: id.into(),
            p_b,
            p_m,
            theta_r: 22.0,
            delta_theta: 0.8,
            c_th: 2.0,
            r_th: 2.0,
            eta: 2.5,
            f: None,
        }
    }

    fn pair() -> Fleet {
        Fleet::new(vec![tcl("a", 1.0, 4.0), tcl("b", 2.0, 3.0)], 1.0 / 6.0).unwrap()
    }

    #[test]
    fn counting_contract() {
        let fleet = Fleet::new(
            vec![tcl("a", 1.0, 4.0), tcl("b", 2.0, 3.0), tcl("c", 1.5, 3.0)],
            0.1,
        )
        .unwrap();
        let inst = OracleInstance::uncoupled(fleet, 4).unwrap();
        let lp = build_inner_lp(&inst, &[0.0; 4]).unwrap();
        assert_eq!(lp.num_vars(), 2 * 3 * 4 + 2 * 4);
        let eq = lp.senses.iter().filter(|s| **s == Sense::Eq).count();
        assert_eq!(eq, (3 + 1) * 4);
    }

    #[test]
    fn least_effort_keeps_mismatch_and_zeroes_idle_loads() {
        let inst = OracleInstance::uncoupled(pair(), 3).unwrap();
        let r = least_effort_disaggregation(&inst, &[0.0; 3]).unwrap();
        assert!(r.u.iter().flatten().all(|v| v.abs() < 1e-9));
        let p = [0.4, -0.2, 0.1];
        let a = inner_mismatch(&inst, &p).unwrap();
        let b = least_effort_disaggregation(&inst, &p).unwrap();
        assert_eq!(a.value, b.value);
        assert!(schedule_violations(&inst, &p, &b).unwrap().is_empty());
        let effort = |r: &InnerResult| r.u.iter().flatten().map(|v| v.abs()).sum::<f64>();
        assert!(effort(&b) <= effort(&a) + 1e-9);
    }

    #[test]
    fn origin_is_tracked() {
        let inst = OracleInstance::uncoupled(pair(), 3).unwrap();
        let r = inner_mismatch(&inst, &[0.0; 3]).unwrap();
        assert_eq!(r.value, 0.0);
        for t in 0..3 {
            let total: f64 = r.u.iter().map(|u| u[t]).sum();
            assert!(total.abs() < 1e-9);
        }
        assert!(schedule_violations(&inst, &[0.0; 3], &r)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn single_tcl_upper_bound() {
        let fleet = Fleet::new(vec![tcl("a", 1.0, 3.0)], 1.0 / 6.0).unwrap();
        let inst = OracleInstance::uncoupled(fleet, 1).unwrap();
        let r = inner_mismatch(&inst, &[2.0]).unwrap();
        assert!(r.value <= Q_ZERO_TOL);
        assert!((r.u[0][0] - 2.0).abs() < 1e-9);
        let r = inner_mismatch(&inst, &[3.0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!((r.l_plus[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beyond_outer_rate_is_not_tracked() {
        let fleet = pair();
        let nbm = nbm_params(&fleet, fleet.baseline_weighted_alpha()).unwrap();
        let inst = OracleInstance::uncoupled(fleet, 2).unwrap();
        let r = inner_mismatch(&inst, &[nbm.n_plus + 0.5, 0.0]).unwrap();
        assert!(r.value >= 0.5 - 1e-9);
    }

    #[test]
    fn zero_model_has_zero_q() {
        let fleet = pair();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let n = nbm_params(&fleet, alpha).unwrap();
        let inst = OracleInstance::uncoupled(fleet, 2).unwrap();
        let r = q_of_mu(&inst, &s, &n, -1.0).unwrap();
        assert_eq!(r.q_value, 0.0);
        assert_eq!(r.vertices.len(), 1);
    }

    #[test]
    fn identical_pair_sbm_is_sufficient() {
        let fleet = Fleet::new(vec![tcl("a", 1.5, 4.0), tcl("b", 1.5, 4.0)], 1.0 / 6.0).unwrap();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let n = nbm_params(&fleet, alpha).unwrap();
        let inst = OracleInstance::uncoupled(fleet, 2).unwrap();
        assert_eq!(q_of_mu(&inst, &s, &n, 0.0).unwrap().q_value, 0.0);
        assert!(certify_sufficiency(&inst, &s).unwrap());
    }

    #[test]
    fn outer_model_of_heterogeneous_pair_is_not_sufficient() {
        let fleet = pair();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let n = nbm_params(&fleet, alpha).unwrap();
        let inst = OracleInstance::uncoupled(fleet, 2).unwrap();
        let r = q_of_mu(&inst, &s, &n, 1.0).unwrap();
        assert!(r.q_value > 0.0, "{r:?}");
        let w = inner_mismatch(&inst, &r.worst_p_sys).unwrap();
        assert!((w.value - r.q_value).abs() < 1e-12);
        assert!(!certify_sufficiency(&inst, &n).unwrap());
    }

    #[test]
    fn feeder_cap_breaks_sufficiency() {
        let fleet = pair();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let cap = fleet.total_baseline() + 0.5 * s.n_plus;
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![Line {
                line_id: "feeder".into(),
                h: vec![1.0, 1.0],
                f_min: f64::NEG_INFINITY,
                f_max: cap,
            }],
        };
        let inst = OracleInstance::new(fleet.clone(), net, 2).unwrap();
        assert!(!certify_sufficiency(&inst, &s).unwrap());
        let free = OracleInstance::uncoupled(fleet, 2).unwrap();
        assert!(certify_sufficiency(&free, &s).unwrap());
    }

    #[test]
    fn tracked_schedules_respect_every_limit() {
        let fleet = pair();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let inst = OracleInstance::uncoupled(fleet, 3).unwrap();
        for seed in 0..10 {
            let p = random_admissible(&s, 3, inst.dt(), seed);
            let r = inner_mismatch(&inst, &p).unwrap();
            assert!(r.is_tracked());
            assert!(schedule_violations(&inst, &p, &r).unwrap().is_empty());
        }
    }

    #[test]
    fn unreachable_line_limits_are_baseline_infeasible() {
        let fleet = pair();
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![Line {
                line_id: "tight".into(),
                h: vec![1.0, 1.0],
                f_min: f64::NEG_INFINITY,
                f_max: -1.0,
            }],
        };
        let inst = OracleInstance::new(fleet, net, 1).unwrap();
        assert!(matches!(
            inner_mismatch(&inst, &[0.0]),
            Err(OracleError::BaselineInfeasible(_))
        ));
    }

    #[test]
    fn baseline_breach_shows_as_positive_origin_mismatch() {
        let fleet = pair();
        // baseline 3 kW exceeds the 2.5 kW cap, but loads can curtail
        let net = NetworkModel {
            tcl_count: 2,
            lines: vec![Line {
                line_id: "cap".into(),
                h: vec![1.0, 1.0],
                f_min: f64::NEG_INFINITY,
                f_max: 2.5,
            }],
        };
        let inst = OracleInstance::new(fleet, net, 2).unwrap();
        assert!(baseline_mismatch(&inst).unwrap() > Q_ZERO_TOL);
    }

    #[test]
    fn per_step_max_agrees_on_zero_set() {
        let fleet = pair();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let n = nbm_params(&fleet, alpha).unwrap();
        let total = OracleInstance::uncoupled(fleet.clone(), 2).unwrap();
        let per_step = OracleInstance::uncoupled(fleet, 2)
            .unwrap()
            .with_aggregation(SlackAggregation::PerStepMax);
        for mu in [-0.5, 0.0, 0.5, 1.0] {
            let a = q_of_mu(&total, &s, &n, mu).unwrap().q_value;
            let b = q_of_mu(&per_step, &s, &n, mu).unwrap().q_value;
            assert_eq!(a == 0.0, b == 0.0, "mu {mu}");
            assert!(b <= a + 1e-9);
        }
    }

    #[test]
    fn x0_outside_band_is_rejected() {
        let inst = OracleInstance::uncoupled(pair(), 2).unwrap();
        assert!(inst.clone().with_x0(vec![10.0, 0.0]).is_err());
        assert!(inst.with_x0(vec![0.1, -0.1]).is_ok());
    }

    #[test]
    fn vertex_dump_has_header_and_rows() {
        let fleet = pair();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let n = nbm_params(&fleet, alpha).unwrap();
        let inst = OracleInstance::uncoupled(fleet, 2).unwrap();
        let r = q_of_mu(&inst, &s, &n, 0.5).unwrap();
        let csv = vertex_csv(&r);
        assert!(csv.starts_with("vertex,p_0,p_1,mismatch\n"));
        assert_eq!(csv.lines().count(), r.vertices.len() + 1);
    }
}
