//! Generalized battery models of aggregate flexibility.
//!
//! A battery `B(φ)` with `φ = (C, n₊, n₋, α)` admits the power trajectories
//! `p ∈ Rᵀ` with `-n₋ <= p_t <= n₊` and `|e_t| <= C`, where
//! `e_t = ρ e_{t-1} + Δt p_t`, `e_0 = 0` and `ρ = exp(-α Δt)`. Positive `p`
//! is aggregate consumption above baseline.
//!
//! The sufficient (inner) and necessary (outer) models are computed from the
//! fleet under the largest-charge-rate criterion. When thermal time constants
//! differ across loads, the per-load capacities are corrected by the mismatch
//! between each load's decay `γ_i` and the shared battery decay `ρ`:
//!
//! * inner: `f_i / (1 + |γ_i - ρ| / (1 - γ_i))`, which guarantees that the
//!   proportional split `u_i = (p_b_i / Σ p_b) p` of any admissible trajectory
//!   keeps every load inside its storage band;
//! * outer: `f_i (1 + |γ_i - ρ| / (1 - ρ))`.
//!
//! Both corrections vanish for a thermally homogeneous fleet, leaving
//! `C₁ = Σp_b · min f_i/p_b_i` and `C₂ = Σ f_i`.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::{Fleet, FleetError};
use crate::lp::{solve_lp, LpProblem, Sense};

/// Tolerance on admissibility checks.
pub const ADMISSIBLE_TOL: f64 = 1e-9;
/// Max-norm distance under which two vertices are the same.
pub const VERTEX_DEDUP_TOL: f64 = 1e-8;
/// Default bound on the horizon handed to exact vertex enumeration.
pub const DEFAULT_MAX_HORIZON: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum BatteryError {
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error("mu = {0} is outside [-1, 1]")]
    MuOutOfRange(f64),
    #[error("invalid combination: {0}")]
    InvalidCombination(String),
    #[error("invalid battery parameters: {0}")]
    InvalidParams(String),
    #[error(
        "horizon {horizon} exceeds the vertex-enumeration budget of {max}; \
         reduce the horizon or use sampled vertices"
    )]
    BudgetExceeded { horizon: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryParams {
    /// Energy capacity (kWh).
    #[serde(rename = "c_kwh")]
    pub c: f64,
    /// Discharge rate limit (kW), bounding positive `p`.
    #[serde(rename = "n_plus_kw")]
    pub n_plus: f64,
    /// Charge rate limit (kW), bounding negative `p`.
    #[serde(rename = "n_minus_kw")]
    pub n_minus: f64,
    /// Dissipation rate (1/h).
    #[serde(rename = "alpha_per_h")]
    pub alpha: f64,
}

impl BatteryParams {
    pub fn zero(alpha: f64) -> Self {
        Self {
            c: 0.0,
            n_plus: 0.0,
            n_minus: 0.0,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<(), BatteryError> {
        for (name, v) in [
            ("c", self.c),
            ("n_plus", self.n_plus),
            ("n_minus", self.n_minus),
            ("alpha", self.alpha),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(BatteryError::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Componentwise `self <= other` in `(c, n_plus, n_minus)`.
    pub fn le(&self, other: &Self, tol: f64) -> bool {
        self.c <= other.c + tol
            && self.n_plus <= other.n_plus + tol
            && self.n_minus <= other.n_minus + tol
    }

    /// Per-step energy retention `ρ = exp(-α Δt)`.
    pub fn retention(&self, dt: f64) -> f64 {
        (-self.alpha * dt).exp()
    }

    /// `e_t` for every step of `p`.
    pub fn states(&self, p: &[f64], dt: f64) -> Vec<f64> {
        let rho = self.retention(dt);
        p.iter()
            .scan(0.0, |e, &pt| {
                *e = rho * *e + dt * pt;
                Some(*e)
            })
            .collect()
    }
}

/// Flexibility criterion used to pick among the inner/outer model families.
/// Only the largest-charge-rate family is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[non_exhaustive]
pub enum Criterion {
    #[default]
    LargestChargeRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `(1 - μ) B(φ₁) + μ B(φ₂)`, `μ > 0`.
    Expand,
    /// `(1 + μ) B(φ₁)`, `μ < 0`.
    Shrink,
    /// `μ = 0`: the sufficient model itself.
    Identity,
}

impl Branch {
    pub fn of(mu: f64) -> Self {
        if mu > 0.0 {
            Branch::Expand
        } else if mu < 0.0 {
            Branch::Shrink
        } else {
            Branch::Identity
        }
    }
}

struct FleetSums {
    total_pb: f64,
    rows: Vec<(f64, f64, f64, f64)>, // (p_b, u_max, inner f, outer f)
}

fn fleet_sums(fleet: &Fleet, alpha: f64) -> Result<FleetSums, BatteryError> {
    fleet.validate()?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(BatteryError::InvalidParams(format!(
            "fleet dissipation rate must be positive, got {alpha}"
        )));
    }
    let rho = (-alpha * fleet.dt).exp();
    let derived = fleet.derived()?;
    let rows = fleet
        .tcls
        .iter()
        .zip(&derived)
        .map(|(t, d)| {
            let spread = (d.gamma - rho).abs();
            let inner = d.f / (1.0 + spread / (1.0 - d.gamma));
            let outer = d.f * (1.0 + spread / (1.0 - rho));
            (t.p_b, t.u_max(), inner, outer)
        })
        .collect();
    Ok(FleetSums {
        total_pb: fleet.total_baseline(),
        rows,
    })
}

pub fn sbm_params(fleet: &Fleet, alpha: f64) -> Result<BatteryParams, BatteryError> {
    let s = fleet_sums(fleet, alpha)?;
    let min_ratio = s
        .rows
        .iter()
        .map(|r| r.1 / r.0)
        .fold(f64::INFINITY, f64::min);
    let min_energy = s
        .rows
        .iter()
        .map(|r| r.2 / r.0)
        .fold(f64::INFINITY, f64::min);
    Ok(BatteryParams {
        c: s.total_pb * min_energy,
        n_plus: s.total_pb * min_ratio,
        n_minus: s.total_pb,
        alpha,
    })
}

pub fn nbm_params(fleet: &Fleet, alpha: f64) -> Result<BatteryParams, BatteryError> {
    let s = fleet_sums(fleet, alpha)?;
    Ok(BatteryParams {
        c: s.rows.iter().map(|r| r.3).sum(),
        n_plus: s.rows.iter().map(|r| r.1).sum(),
        n_minus: s.total_pb,
        alpha,
    })
}

/// ESBM parameters for a given `μ`.
pub fn combine(
    sbm: &BatteryParams,
    nbm: &BatteryParams,
    mu: f64,
) -> Result<BatteryParams, BatteryError> {
    if !(-1.0..=1.0).contains(&mu) {
        return Err(BatteryError::MuOutOfRange(mu));
    }
    sbm.validate()?;
    nbm.validate()?;
    if sbm.alpha != nbm.alpha {
        return Err(BatteryError::InvalidCombination(format!(
            "alpha differs: {} vs {}",
            sbm.alpha, nbm.alpha
        )));
    }
    let tol = 1e-9 * (1.0 + nbm.c.max(nbm.n_plus).max(nbm.n_minus));
    if !sbm.le(nbm, tol) {
        return Err(BatteryError::InvalidCombination(
            "inner model must be componentwise below the outer model".into(),
        ));
    }
    let mix = |inner: f64, outer: f64| {
        if mu >= 0.0 {
            (1.0 - mu) * inner + mu * outer
        } else {
            (1.0 + mu) * inner
        }
    };
    Ok(BatteryParams {
        c: mix(sbm.c, nbm.c),
        n_plus: mix(sbm.n_plus, nbm.n_plus),
        n_minus: mix(sbm.n_minus, nbm.n_minus),
        alpha: sbm.alpha,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    pub states: Vec<f64>,
    /// First step violating a rate or energy limit.
    pub first_violation: Option<usize>,
}

pub fn admissible(params: &BatteryParams, p_sys: &[f64], dt: f64) -> Admissibility {
    let states = params.states(p_sys, dt);
    let first_violation = p_sys.iter().zip(&states).position(|(&p, &e)| {
        p > params.n_plus + ADMISSIBLE_TOL
            || p < -params.n_minus - ADMISSIBLE_TOL
            || e.abs() > params.c + ADMISSIBLE_TOL
    });
    Admissibility {
        admissible: first_violation.is_none(),
        states,
        first_violation,
    }
}

/// Inequality rows `g·p <= h` describing the trajectory polytope, in the order
/// rate-upper, rate-lower, energy-upper, energy-lower for each step.
fn polytope_rows(params: &BatteryParams, horizon: usize, dt: f64) -> Vec<(Vec<f64>, f64)> {
    let rho = params.retention(dt);
    let mut rows = Vec::with_capacity(4 * horizon);
    for t in 0..horizon {
        let mut unit = vec![0.0; horizon];
        unit[t] = 1.0;
        rows.push((unit.clone(), params.n_plus));
        rows.push((unit.iter().map(|v| -v).collect(), params.n_minus));
        let energy: Vec<f64> = (0..horizon)
            .map(|s| {
                if s <= t {
                    dt * rho.powi((t - s) as i32)
                } else {
                    0.0
                }
            })
            .collect();
        rows.push((energy.clone(), params.c));
        rows.push((energy.iter().map(|v| -v).collect(), params.c));
    }
    rows
}

/// Lexicographic successor of a k-combination of `0..n`.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn dedup_sorted(mut points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points.drain(..) {
        let dup = kept.iter().any(|q| {
            q.iter()
                .zip(&p)
                .all(|(a, b)| (a - b).abs() <= VERTEX_DEDUP_TOL)
        });
        if !dup {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| lex_cmp(a, b));
    kept
}

/// All vertices of the trajectory polytope of `params` over `horizon` steps,
/// sorted lexicographically.
pub fn enumerate_vertices(
    params: &BatteryParams,
    horizon: usize,
    dt: f64,
    max_horizon: usize,
) -> Result<Vec<Vec<f64>>, BatteryError> {
    params.validate()?;
    if horizon == 0 {
        return Err(BatteryError::InvalidParams(
            "horizon must be at least 1".into(),
        ));
    }
    if horizon > max_horizon {
        return Err(BatteryError::BudgetExceeded {
            horizon,
            max: max_horizon,
        });
    }
    let rows = polytope_rows(params, horizon, dt);
    let n = rows.len();
    let mut subsets = Vec::new();
    let mut idx: Vec<usize> = (0..horizon).collect();
    loop {
        subsets.push(idx.clone());
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    let scale = 1.0 + params.c.max(params.n_plus).max(params.n_minus);
    let candidates: Vec<Vec<f64>> = subsets
        .par_iter()
        .filter_map(|subset| {
            let a: Vec<Vec<f64>> = subset.iter().map(|&r| rows[r].0.clone()).collect();
            let b: Vec<f64> = subset.iter().map(|&r| rows[r].1).collect();
            let p = crate::linalg::solve(a, b, 1e-10)?;
            let feasible = rows.iter().all(|(g, h)| {
                let gp: f64 = g.iter().zip(&p).map(|(x, y)| x * y).sum();
                gp <= h + 1e-9 * scale
            });
            feasible.then_some(p)
        })
        .collect();
    Ok(dedup_sorted(candidates))
}

/// Vertices reached by maximizing `count` seeded random linear objectives over
/// the trajectory polytope. A subset of the true vertex set, for horizons beyond
/// the enumeration budget.
pub fn sample_vertices(
    params: &BatteryParams,
    horizon: usize,
    dt: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, BatteryError> {
    params.validate()?;
    let rows = polytope_rows(params, horizon, dt);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let directions: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..horizon).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let points: Vec<Vec<f64>> = directions
        .par_iter()
        .filter_map(|dir| {
            let mut lp = LpProblem::new(dir.iter().map(|v| -v).collect());
            for t in 0..horizon {
                lp.set_bounds(t, -params.n_minus, params.n_plus);
            }
            // energy rows only; rate rows are carried as bounds
            for (g, h) in rows
                .iter()
                .skip(2)
                .step_by(4)
                .chain(rows.iter().skip(3).step_by(4))
            {
                lp.add_row(g.clone(), Sense::Le, *h);
            }
            solve_lp(&lp)
                .ok()
                .filter(|s| s.is_optimal())
                .map(|s| s.primal)
        })
        .collect();
    Ok(dedup_sorted(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::TclParams;

    fn tcl(id: &str, p_b: f64, p_m: f64, f: f64) -> TclParams {
        TclParams {
            id: id.into(),
            p_b,
            p_m,
            theta_r: 22.0,
            delta_theta: 0.5,
            c_th: 2.0,
            r_th: 2.0,
            eta: 2.5,
            f: Some(f),
        }
    }

    fn bp(n_plus: f64, n_minus: f64, c: f64) -> BatteryParams {
        BatteryParams {
            c,
            n_plus,
            n_minus,
            alpha: 0.25,
        }
    }

    #[test]
    fn homogeneous_fleet() {
        for n in [1usize, 3, 7] {
            let tcls = (0..n)
                .map(|i| tcl(&format!("t{i}"), 2.0, 5.0, 0.4))
                .collect();
            let fleet = Fleet::new(tcls, 1.0 / 6.0).unwrap();
            let alpha = fleet.baseline_weighted_alpha();
            let s = sbm_params(&fleet, alpha).unwrap();
            let o = nbm_params(&fleet, alpha).unwrap();
            let nf = n as f64;
            assert!((s.n_plus - 3.0 * nf).abs() < 1e-12);
            assert!((s.n_minus - 2.0 * nf).abs() < 1e-12);
            // (Σ p_b) · min f/p_b = 2N · 0.2
            assert!((s.c - 0.4 * nf).abs() < 1e-9);
            assert!((o.n_plus - s.n_plus).abs() < 1e-12);
            assert!((o.c - 0.4 * nf).abs() < 1e-9);
        }
    }

    #[test]
    fn heterogeneous_pair() {
        let fleet =
            Fleet::new(vec![tcl("a", 1.0, 4.0, 0.2), tcl("b", 2.0, 3.0, 0.8)], 0.1).unwrap();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        assert!((s.n_plus - 1.5).abs() < 1e-12);
        assert!((s.n_minus - 3.0).abs() < 1e-12);
        assert!((s.c - 0.6).abs() < 1e-12);
        let o = nbm_params(&fleet, alpha).unwrap();
        assert!((o.n_plus - 4.0).abs() < 1e-12);
        assert!((o.n_minus - 3.0).abs() < 1e-12);
        assert!((o.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fleet_has_no_upward_flexibility() {
        let fleet =
            Fleet::new(vec![tcl("a", 1.0, 1.0, 0.2), tcl("b", 2.0, 2.0, 0.8)], 0.1).unwrap();
        let o = nbm_params(&fleet, 0.25).unwrap();
        assert_eq!(o.n_plus, 0.0);
        assert_eq!(sbm_params(&fleet, 0.25).unwrap().n_plus, 0.0);
    }

    #[test]
    fn thermal_heterogeneity_shrinks_inner_and_grows_outer_capacity() {
        let mut slow = tcl("b", 1.0, 3.0, 0.4);
        slow.r_th = 6.0;
        let fleet = Fleet::new(vec![tcl("a", 1.0, 3.0, 0.4), slow], 1.0 / 6.0).unwrap();
        let alpha = fleet.baseline_weighted_alpha();
        let s = sbm_params(&fleet, alpha).unwrap();
        let o = nbm_params(&fleet, alpha).unwrap();
        assert!(s.c < 2.0 * 0.4 - 1e-3);
        assert!(o.c > 0.8 + 1e-3);
    }

    #[test]
    fn sbm_requires_positive_alpha() {
        let fleet = Fleet::new(vec![tcl("a", 1.0, 4.0, 0.2)], 0.1).unwrap();
        assert!(matches!(
            sbm_params(&fleet, 0.0),
            Err(BatteryError::InvalidParams(_))
        ));
    }

    #[test]
    fn combine_endpoints_and_errors() {
        let s = bp(19.12, 15.29, 2.52);
        let n = bp(30.31, 15.29, 6.28);
        assert_eq!(combine(&s, &n, 0.0).unwrap(), s);
        assert_eq!(combine(&s, &n, 1.0).unwrap(), n);
        assert_eq!(combine(&s, &n, -1.0).unwrap(), BatteryParams::zero(0.25));
        assert_eq!(combine(&s, &n, 1.5), Err(BatteryError::MuOutOfRange(1.5)));
        let other = BatteryParams { alpha: 0.3, ..n };
        assert!(matches!(
            combine(&s, &other, 0.5),
            Err(BatteryError::InvalidCombination(_))
        ));
        assert!(matches!(
            combine(&n, &s, 0.5),
            Err(BatteryError::InvalidCombination(_))
        ));
    }

    #[test]
    fn combine_reproduces_published_rows() {
        let s = bp(19.12, 15.29, 2.52);
        let n = bp(30.31, 15.29, 6.28);
        let cases = [
            (0.72, (27.17, 15.29, 5.23)),
            (0.18, (21.13, 15.29, 3.20)),
            (-0.33, (12.81, 10.24, 1.69)),
        ];
        for (mu, (np, nm, c)) in cases {
            let e = combine(&s, &n, mu).unwrap();
            assert!((e.n_plus - np).abs() <= 0.01, "mu {mu}: {e:?}");
            assert!((e.n_minus - nm).abs() <= 0.01, "mu {mu}: {e:?}");
            assert!((e.c - c).abs() <= 0.01, "mu {mu}: {e:?}");
        }
    }

    #[test]
    fn admissibility_examples() {
        let b = bp(1.0, 1.0, 1.0);
        let r = admissible(&b, &[0.0; 4], 0.5);
        assert!(r.admissible);
        assert_eq!(r.states, vec![0.0; 4]);

        let r = admissible(&BatteryParams::zero(0.0), &[0.1], 0.5);
        assert!(!r.admissible);

        let b = BatteryParams {
            c: 1.0,
            n_plus: 10.0,
            n_minus: 10.0,
            alpha: 0.0,
        };
        let r = admissible(&b, &[1.0, 1.0, 1.0], 0.5);
        assert_eq!(r.states, vec![0.5, 1.0, 1.5]);
        assert!(!r.admissible);
        assert_eq!(r.first_violation, Some(2));
    }

    #[test]
    fn one_step_vertices_are_interval_ends() {
        let b = BatteryParams {
            c: 0.5,
            n_plus: 3.0,
            n_minus: 2.0,
            alpha: 0.1,
        };
        let v = enumerate_vertices(&b, 1, 0.25, DEFAULT_MAX_HORIZON).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0][0] + 2.0).abs() < 1e-12);
        assert!((v[1][0] - 2.0).abs() < 1e-12); // c / dt = 2 < n_plus
    }

    #[test]
    fn two_step_vertices_without_dissipation() {
        let b = BatteryParams {
            c: 1.0,
            n_plus: 2.0,
            n_minus: 2.0,
            alpha: 0.0,
        };
        let v = enumerate_vertices(&b, 2, 1.0, DEFAULT_MAX_HORIZON).unwrap();
        // |p1| <= 1, |p1 + p2| <= 1, |p2| <= 2: a parallelogram
        let expected = [[-1.0, 0.0], [-1.0, 2.0], [1.0, -2.0], [1.0, 0.0]];
        assert_eq!(v.len(), expected.len(), "{v:?}");
        for (got, want) in v.iter().zip(expected) {
            assert!(
                got.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12),
                "{v:?}"
            );
        }
    }

    #[test]
    fn large_capacity_gives_box_corners() {
        let b = BatteryParams {
            c: 1e6,
            n_plus: 2.0,
            n_minus: 1.0,
            alpha: 0.2,
        };
        let v = enumerate_vertices(&b, 3, 0.5, DEFAULT_MAX_HORIZON).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v
            .iter()
            .flatten()
            .all(|&x| (x - 2.0).abs() < 1e-9 || (x + 1.0).abs() < 1e-9));
    }

    #[test]
    fn zero_battery_has_single_vertex() {
        let v = enumerate_vertices(&BatteryParams::zero(0.3), 3, 0.5, DEFAULT_MAX_HORIZON).unwrap();
        assert_eq!(v, vec![vec![0.0; 3]]);
    }

    #[test]
    fn budget_and_finiteness() {
        let b = bp(1.0, 1.0, 1.0);
        assert_eq!(
            enumerate_vertices(&b, 7, 0.5, DEFAULT_MAX_HORIZON),
            Err(BatteryError::BudgetExceeded { horizon: 7, max: 6 })
        );
        let inf = BatteryParams {
            c: f64::INFINITY,
            ..b
        };
        assert!(matches!(
            enumerate_vertices(&inf, 2, 0.5, DEFAULT_MAX_HORIZON),
            Err(BatteryError::InvalidParams(_))
        ));
    }

    #[test]
    fn vertices_maximize_random_objectives_over_a_grid() {
        let b = BatteryParams {
            c: 0.7,
            n_plus: 2.5,
            n_minus: 1.5,
            alpha: 0.4,
        };
        let dt = 0.5;
        let v = enumerate_vertices(&b, 2, dt, DEFAULT_MAX_HORIZON).unwrap();
        for p in &v {
            assert!(admissible(&b, p, dt).admissible);
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let steps = 400;
        let grid: Vec<[f64; 2]> = (0..=steps)
            .flat_map(|i| (0..=steps).map(move |j| [i, j]))
            .map(|[i, j]| {
                let span = b.n_plus + b.n_minus;
                [
                    -b.n_minus + span * i as f64 / steps as f64,
                    -b.n_minus + span * j as f64 / steps as f64,
                ]
            })
            .filter(|p| admissible(&b, p, dt).admissible)
            .collect();
        for _ in 0..20 {
            let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let on_vertices = v
                .iter()
                .map(|p| w[0] * p[0] + w[1] * p[1])
                .fold(f64::MIN, f64::max);
            let on_grid = grid
                .iter()
                .map(|p| w[0] * p[0] + w[1] * p[1])
                .fold(f64::MIN, f64::max);
            assert!(on_vertices >= on_grid - 1e-9);
            assert!(on_vertices - on_grid < 2.0 * 4.0 / steps as f64);
        }
    }

    #[test]
    fn sampled_vertices_are_true_vertices() {
        let b = BatteryParams {
            c: 0.7,
            n_plus: 2.5,
            n_minus: 1.5,
            alpha: 0.4,
        };
        let exact = enumerate_vertices(&b, 3, 0.5, DEFAULT_MAX_HORIZON).unwrap();
        let sampled = sample_vertices(&b, 3, 0.5, 64, 11).unwrap();
        assert!(!sampled.is_empty());
        for s in &sampled {
            assert!(exact
                .iter()
                .any(|e| e.iter().zip(s).all(|(a, b)| (a - b).abs() < 1e-7)));
        }
    }
}
