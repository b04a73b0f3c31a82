//! Rolling-horizon economic dispatch with a virtual battery.
//!
//! Each step solves a deterministic LP over a lookahead window (generation cost
//! plus a curtailment penalty), commits the first interval and rolls forward.
//! The battery follows the discrete semantics of [`crate::battery`]:
//! positive battery power is extra consumption by the fleet, so the balance is
//! `Σ g + w - p = load`. Each window ends with a non-negative battery state.
//!
//! Internally the LP is stated in MW/MWh with a normalized objective.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{self, BatteryError, BatteryParams};
use crate::fleet::{Fleet, TclParams};
use crate::lp::{solve_lp, LpError, LpProblem, Sense};

pub const DEFAULT_CURTAILMENT_PENALTY: f64 = 1e4;
pub const DEFAULT_LOOKAHEAD: usize = 12;
const BALANCE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("dispatch window starting at step {step} is infeasible")]
    Infeasible { step: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Battery(#[from] BatteryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub name: String,
    pub p_min_kw: f64,
    pub p_max_kw: f64,
    /// Largest change between consecutive steps (kW).
    pub ramp_kw_per_step: f64,
    pub cost_per_kwh: f64,
}

fn default_penalty() -> f64 {
    DEFAULT_CURTAILMENT_PENALTY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispatchScenario {
    pub dt_hours: f64,
    pub load_kw: Vec<f64>,
    pub wind_kw: Vec<f64>,
    pub generators: Vec<Generator>,
    #[serde(default = "default_penalty")]
    pub curtailment_penalty_per_kwh: f64,
    /// Flexibility model used when none is supplied separately.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<BatteryParams>,
}

impl DispatchScenario {
    pub fn steps(&self) -> usize {
        self.load_kw.len()
    }

    pub fn validate(&self) -> Result<(), DispatchError> {
        let bad = |m: String| Err(DispatchError::InvalidScenario(m));
        if !(self.dt_hours.is_finite() && self.dt_hours > 0.0) {
            return bad(format!("dt_hours must be positive, got {}", self.dt_hours));
        }
        if self.load_kw.is_empty() {
            return bad("load series is empty".into());
        }
        if self.wind_kw.len() != self.load_kw.len() {
            return bad(format!(
                "wind series has {} steps, load has {}",
                self.wind_kw.len(),
                self.load_kw.len()
            ));
        }
        if self
            .load_kw
            .iter()
            .chain(&self.wind_kw)
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return bad("load and wind must be finite and non-negative".into());
        }
        if self.generators.is_empty() {
            return bad("at least one generator is required".into());
        }
        for g in &self.generators {
            let ok = g.p_min_kw.is_finite()
                && g.p_max_kw.is_finite()
                && 0.0 <= g.p_min_kw
                && g.p_min_kw <= g.p_max_kw
                && g.ramp_kw_per_step >= 0.0
                && g.cost_per_kwh.is_finite();
            if !ok {
                return bad(format!("generator `{}` has inconsistent limits", g.name));
            }
        }
        if !(self.curtailment_penalty_per_kwh.is_finite()
            && self.curtailment_penalty_per_kwh >= 0.0)
        {
            return bad("curtailment penalty must be non-negative".into());
        }
        if let Some(b) = &self.battery {
            b.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, crate::InputError> {
        let s: DispatchScenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchReport {
    /// `generation[j][t]`, kW.
    pub generation: Vec<Vec<f64>>,
    pub wind_used: Vec<f64>,
    pub wind_curtailed: Vec<f64>,
    pub battery_power: Vec<f64>,
    pub battery_state: Vec<f64>,
    /// Used over available wind energy.
    pub eta_w: f64,
    /// False when the scenario has no wind, in which case `eta_w` is 1.
    pub eta_w_defined: bool,
    pub generation_cost: f64,
    pub curtailment_penalty: f64,
}

impl DispatchReport {
    /// `step,load,wind_available,wind_used,wind_curtailed,battery_kw,battery_kwh,g_*`.
    pub fn to_csv(&self, scenario: &DispatchScenario) -> String {
        let mut out = String::from(
            "step,load_kw,wind_available_kw,wind_used_kw,wind_curtailed_kw,battery_kw,battery_kwh",
        );
        for g in &scenario.generators {
            out.push_str(&format!(",{}_kw", g.name));
        }
        out.push('\n');
        for t in 0..scenario.steps() {
            out.push_str(&format!(
                "{t},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                scenario.load_kw[t],
                scenario.wind_kw[t],
                self.wind_used[t],
                self.wind_curtailed[t],
                self.battery_power[t],
                self.battery_state[t]
            ));
            for g in &self.generation {
                out.push_str(&format!(",{:.6}", g[t]));
            }
            out.push('\n');
        }
        out
    }
}

struct Window {
    start: usize,
    len: usize,
    ngen: usize,
}

impl Window {
    fn g(&self, j: usize, k: usize) -> usize {
        k * (self.ngen + 3) + j
    }
    fn w(&self, k: usize) -> usize {
        k * (self.ngen + 3) + self.ngen
    }
    fn p(&self, k: usize) -> usize {
        k * (self.ngen + 3) + self.ngen + 1
    }
    fn e(&self, k: usize) -> usize {
        k * (self.ngen + 3) + self.ngen + 2
    }
    fn nvars(&self) -> usize {
        self.len * (self.ngen + 3)
    }
}

const MW: f64 = 1000.0;

fn window_lp(
    scenario: &DispatchScenario,
    battery: &BatteryParams,
    win: &Window,
    prev_gen: Option<&[f64]>,
    e_prev: f64,
) -> LpProblem {
    let dt = scenario.dt_hours;
    let rho = battery.retention(dt);
    let mut objective = vec![0.0; win.nvars()];
    for k in 0..win.len {
        for (j, g) in scenario.generators.iter().enumerate() {
            objective[win.g(j, k)] = g.cost_per_kwh * dt;
        }
        objective[win.w(k)] = -scenario.curtailment_penalty_per_kwh * dt;
    }
    let norm = objective
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    objective.iter_mut().for_each(|v| *v /= norm);
    let mut lp = LpProblem::new(objective);
    for k in 0..win.len {
        let t = win.start + k;
        for (j, g) in scenario.generators.iter().enumerate() {
            lp.set_bounds(win.g(j, k), g.p_min_kw / MW, g.p_max_kw / MW);
        }
        lp.set_bounds(win.w(k), 0.0, scenario.wind_kw[t] / MW);
        lp.set_bounds(win.p(k), -battery.n_minus / MW, battery.n_plus / MW);
        lp.set_bounds(win.e(k), -battery.c / MW, battery.c / MW);

        let mut balance: Vec<(usize, f64)> = (0..win.ngen).map(|j| (win.g(j, k), 1.0)).collect();
        balance.push((win.w(k), 1.0));
        balance.push((win.p(k), -1.0));
        lp.add_sparse_row(&balance, Sense::Eq, scenario.load_kw[t] / MW);

        let mut dynamics = vec![(win.e(k), 1.0), (win.p(k), -dt)];
        let rhs = if k == 0 {
            rho * e_prev / MW
        } else {
            dynamics.push((win.e(k - 1), -rho));
            0.0
        };
        lp.add_sparse_row(&dynamics, Sense::Eq, rhs);

        for (j, g) in scenario.generators.iter().enumerate() {
            let ramp = g.ramp_kw_per_step / MW;
            if k == 0 {
                if let Some(prev) = prev_gen {
                    lp.add_sparse_row(&[(win.g(j, 0), 1.0)], Sense::Le, prev[j] / MW + ramp);
                    lp.add_sparse_row(&[(win.g(j, 0), 1.0)], Sense::Ge, prev[j] / MW - ramp);
                }
            } else {
                let terms = [(win.g(j, k), 1.0), (win.g(j, k - 1), -1.0)];
                lp.add_sparse_row(&terms, Sense::Le, ramp);
                lp.add_sparse_row(&terms, Sense::Ge, -ramp);
            }
        }
    }
    lp.add_sparse_row(&[(win.e(win.len - 1), 1.0)], Sense::Ge, 0.0);
    lp
}

pub fn rolling_dispatch(
    scenario: &DispatchScenario,
    battery: &BatteryParams,
    lookahead: usize,
) -> Result<DispatchReport, DispatchError> {
    scenario.validate()?;
    battery.validate()?;
    if lookahead == 0 {
        return Err(DispatchError::InvalidScenario(
            "lookahead must be at least 1".into(),
        ));
    }
    let steps = scenario.steps();
    let ngen = scenario.generators.len();
    let dt = scenario.dt_hours;
    let mut generation = vec![Vec::with_capacity(steps); ngen];
    let mut wind_used = Vec::with_capacity(steps);
    let mut battery_power = Vec::with_capacity(steps);
    let mut e_prev = 0.0;
    let mut prev_gen: Option<Vec<f64>> = None;
    for start in 0..steps {
        let win = Window {
            start,
            len: lookahead.min(steps - start),
            ngen,
        };
        let lp = window_lp(scenario, battery, &win, prev_gen.as_deref(), e_prev);
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            return Err(DispatchError::Infeasible { step: start });
        }
        let g: Vec<f64> = (0..ngen).map(|j| sol.primal[win.g(j, 0)] * MW).collect();
        for (j, v) in g.iter().enumerate() {
            generation[j].push(*v);
        }
        wind_used.push(sol.primal[win.w(0)] * MW);
        let p = sol.primal[win.p(0)] * MW;
        battery_power.push(p);
        e_prev = battery.retention(dt) * e_prev + dt * p;
        prev_gen = Some(g);
    }
    let battery_state = battery.states(&battery_power, dt);
    let wind_curtailed: Vec<f64> = scenario
        .wind_kw
        .iter()
        .zip(&wind_used)
        .map(|(a, u)| (a - u).max(0.0))
        .collect();
    for t in 0..steps {
        let supply: f64 =
            generation.iter().map(|g| g[t]).sum::<f64>() + wind_used[t] - battery_power[t];
        let residual = supply - scenario.load_kw[t];
        debug_assert!(
            residual.abs() <= BALANCE_TOL * (1.0 + scenario.load_kw[t]),
            "balance residual {residual} at {t}"
        );
    }
    let available: f64 = scenario.wind_kw.iter().sum();
    let used: f64 = wind_used.iter().sum();
    let (eta_w, eta_w_defined) = if available > 0.0 {
        ((used / available).clamp(0.0, 1.0), true)
    } else {
        (1.0, false)
    };
    let generation_cost = scenario
        .generators
        .iter()
        .zip(&generation)
        .map(|(g, series)| g.cost_per_kwh * dt * series.iter().sum::<f64>())
        .sum();
    let curtailment_penalty =
        scenario.curtailment_penalty_per_kwh * dt * wind_curtailed.iter().sum::<f64>();
    Ok(DispatchReport {
        generation,
        wind_used,
        wind_curtailed,
        battery_power,
        battery_state,
        eta_w,
        eta_w_defined,
        generation_cost,
        curtailment_penalty,
    })
}

/// Objective of one LP over the whole horizon (generation cost plus
/// curtailment penalty, in the scenario's currency).
pub fn full_horizon_cost(
    scenario: &DispatchScenario,
    battery: &BatteryParams,
) -> Result<f64, DispatchError> {
    let r = rolling_dispatch(scenario, battery, scenario.steps())?;
    Ok(r.generation_cost + r.curtailment_penalty)
}

/// Cost of the single full-horizon LP, without rolling.
pub fn single_solve_cost(
    scenario: &DispatchScenario,
    battery: &BatteryParams,
) -> Result<f64, DispatchError> {
    scenario.validate()?;
    let win = Window {
        start: 0,
        len: scenario.steps(),
        ngen: scenario.generators.len(),
    };
    let lp = window_lp(scenario, battery, &win, None, 0.0);
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Err(DispatchError::Infeasible { step: 0 });
    }
    let dt = scenario.dt_hours;
    let mut cost = 0.0;
    for k in 0..win.len {
        for (j, g) in scenario.generators.iter().enumerate() {
            cost += g.cost_per_kwh * dt * sol.primal[win.g(j, k)] * MW;
        }
        let curtailed = (scenario.wind_kw[k] - sol.primal[win.w(k)] * MW).max(0.0);
        cost += scenario.curtailment_penalty_per_kwh * dt * curtailed;
    }
    Ok(cost)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedModel {
    pub name: String,
    pub mu: Option<f64>,
    pub params: BatteryParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub mu: Option<f64>,
    pub params: BatteryParams,
    pub eta_w: f64,
}

/// Runs the same scenario under each model.
pub fn compare_models(
    scenario: &DispatchScenario,
    models: &[NamedModel],
    lookahead: usize,
) -> Result<Vec<ComparisonRow>, DispatchError> {
    if let Some(first) = models.first() {
        if models.iter().any(|m| m.params.alpha != first.params.alpha) {
            return Err(DispatchError::InvalidScenario(
                "all compared models must share alpha".into(),
            ));
        }
    }
    models
        .par_iter()
        .map(|m| {
            let r = rolling_dispatch(scenario, &m.params, lookahead)?;
            Ok(ComparisonRow {
                name: m.name.clone(),
                mu: m.mu,
                params: m.params,
                eta_w: r.eta_w,
            })
        })
        .collect()
}

/// Four arrays of identical loads on one bus, each collapsed into a single
/// equivalent record (`n·p_b`, `n·p_m`, `n·C_th`, `R_th/n`), which leaves the
/// time constant unchanged and scales the storage band by `n`.
pub fn synthetic_fleet() -> Fleet {
    // (count, p_b, p_m, delta_theta, c_th, r_th, eta)
    let arrays = [
        (1000.0, 1.8, 6.5, 1.0, 2.0, 2.0, 2.5),
        (2000.0, 1.4, 4.6, 0.5, 1.5, 2.5, 3.0),
        (3000.0, 1.6, 5.2, 0.8, 2.5, 1.8, 2.6),
        (4000.0, 1.5, 3.4, 0.7, 2.2, 2.2, 2.8),
    ];
    let tcls = arrays
        .iter()
        .enumerate()
        .map(|(k, &(n, p_b, p_m, dth, c, r, eta))| TclParams {
            id: format!("array{}", k + 1),
            p_b: n * p_b,
            p_m: n * p_m,
            theta_r: 24.0,
            delta_theta: dth,
            c_th: n * c,
            r_th: r / n,
            eta,
            f: None,
        })
        .collect();
    Fleet::new(tcls, 1.0 / 6.0).expect("synthetic fleet is valid")
}

/// 24 h at 10-minute resolution: load within 189–339 MW, wind within 0–75 MW,
/// three thermal units.
pub fn synthetic_scenario(seed: u64) -> DispatchScenario {
    let steps = 144;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let load_kw = (0..steps)
        .map(|t| {
            let phase = t as f64 / steps as f64;
            let base = 264.0 - 75.0 * (tau * (phase + 0.1)).cos();
            let mw = (base + rng.gen_range(-2.0..2.0)).clamp(189.0, 339.0);
            mw * MW
        })
        .collect();
    let mut noise = 0.0;
    let wind_kw = (0..steps)
        .map(|t| {
            let phase = t as f64 / steps as f64;
            noise = 0.8 * noise + rng.gen_range(-6.0..6.0);
            let mw = (40.0 + 30.0 * (tau * phase).cos() + noise).clamp(0.0, 75.0);
            mw * MW
        })
        .collect();
    let gen = |name: &str, p_min: f64, p_max: f64, ramp: f64, cost: f64| Generator {
        name: name.into(),
        p_min_kw: p_min * MW,
        p_max_kw: p_max * MW,
        ramp_kw_per_step: ramp * MW,
        cost_per_kwh: cost,
    };
    DispatchScenario {
        dt_hours: 1.0 / 6.0,
        load_kw,
        wind_kw,
        generators: vec![
            gen("g1", 100.0, 180.0, 4.0, 0.020),
            gen("g2", 60.0, 120.0, 3.0, 0.035),
            gen("g3", 20.0, 80.0, 10.0, 0.060),
        ],
        curtailment_penalty_per_kwh: DEFAULT_CURTAILMENT_PENALTY,
        battery: None,
    }
}

/// SBM and NBM of the synthetic fleet.
pub fn synthetic_models() -> Result<(BatteryParams, BatteryParams), BatteryError> {
    let fleet = synthetic_fleet();
    let alpha = fleet.baseline_weighted_alpha();
    Ok((
        battery::sbm_params(&fleet, alpha)?,
        battery::nbm_params(&fleet, alpha)?,
    ))
}
