//! Calibration of the ESBM mixing factor `μ*` by binary search on a grid.
//!
//! The grid is `μ_k = -1 + k·interval`, `k = 0..=K` with `K = 2/interval`.
//! Starting from `a = 0, b = K`, each round sets `c = ⌊(a+b)/2⌋` and moves `a`
//! up when `Q(μ_c) = 0` and `b` down otherwise, until `b - a = 1`; then
//! `μ* = μ_a`. The grid can be evaluated upfront in parallel or probed lazily.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::battery::{self, BatteryError, BatteryParams, Branch};
use crate::oracle::{self, OracleError, OracleInstance, Q_ZERO_TOL};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("Q(-1) = {0} > 0: the network rules out the baseline, no sufficient model exists")]
    BaselineInfeasible(f64),
    #[error("Q is not monotone: Q({mu_lo}) = {q_lo} > Q({mu_hi}) = {q_hi}")]
    NonMonotone {
        mu_lo: f64,
        q_lo: f64,
        mu_hi: f64,
        q_hi: f64,
    },
    #[error("interval must be in (0, 2], got {0}")]
    InvalidInterval(f64),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Battery(#[from] BatteryError),
}

/// A `Q(μ)` evaluator.
pub trait MuOracle: Sync {
    fn q(&self, mu: f64) -> Result<f64, SearchError>;
}

impl<F> MuOracle for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn q(&self, mu: f64) -> Result<f64, SearchError> {
        Ok(self(mu))
    }
}

/// `Q(μ)` from the disaggregation oracle of a fleet instance.
pub struct FleetOracle<'a> {
    pub instance: &'a OracleInstance,
    pub sbm: BatteryParams,
    pub nbm: BatteryParams,
}

impl MuOracle for FleetOracle<'_> {
    fn q(&self, mu: f64) -> Result<f64, SearchError> {
        Ok(oracle::q_of_mu(self.instance, &self.sbm, &self.nbm, mu)?.q_value)
    }
}

/// The `μ` grid for a given interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MuGrid {
    /// Number of intervals `K`; the grid has `K + 1` points.
    pub k: usize,
}

impl MuGrid {
    /// Grid with `K = 2/interval`. An interval that does not divide 2 is
    /// rounded down to the nearest divisor.
    pub fn new(interval: f64) -> Result<Self, SearchError> {
        if !(interval.is_finite() && interval > 0.0 && interval <= 2.0) {
            return Err(SearchError::InvalidInterval(interval));
        }
        let ratio = 2.0 / interval;
        let nearest = ratio.round();
        let k = if (ratio - nearest).abs() <= 1e-9 * ratio {
            nearest as usize
        } else {
            let k = ratio.ceil() as usize;
            log::warn!(
                "interval {interval} does not divide 2; using {} ({k} steps)",
                2.0 / k as f64
            );
            k
        };
        Ok(Self { k })
    }

    pub fn interval(&self) -> f64 {
        2.0 / self.k as f64
    }

    pub fn mu(&self, index: usize) -> f64 {
        (2.0 * index as f64 - self.k as f64) / self.k as f64
    }

    pub fn len(&self) -> usize {
        self.k + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Evaluates `Q` at every grid point, in parallel; output sorted by `μ`.
pub fn grid_eval(oracle: &dyn MuOracle, grid: MuGrid) -> Result<Vec<(f64, f64)>, SearchError> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let mu = grid.mu(k);
            oracle.q(mu).map(|q| (mu, q))
        })
        .collect()
}

fn is_zero(q: f64) -> bool {
    q <= Q_ZERO_TOL
}

fn monotone_tol(q: f64) -> f64 {
    Q_ZERO_TOL + 1e-6 * q.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Grid,
    Lazy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsbmResult {
    pub mu_star: f64,
    pub branch: Branch,
    pub params: BatteryParams,
    /// Evaluated `(μ, Q(μ))` pairs sorted by `μ`.
    pub evaluations: Vec<(f64, f64)>,
    pub oracle_calls: usize,
    /// Set when `Q` vanishes on the whole grid, so the outer model itself was
    /// returned.
    pub saturated: bool,
}

/// Outcome of the index search, before assembling the battery.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSearch {
    pub index: usize,
    pub mu_star: f64,
    pub evaluations: Vec<(f64, f64)>,
    pub oracle_calls: usize,
    pub saturated: bool,
}

fn bisect(
    grid: MuGrid,
    mut q_at: impl FnMut(usize) -> Result<f64, SearchError>,
) -> Result<(usize, bool), SearchError> {
    let q0 = q_at(0)?;
    if !is_zero(q0) {
        return Err(SearchError::BaselineInfeasible(q0));
    }
    let (mut a, mut b) = (0usize, grid.k);
    if is_zero(q_at(b)?) {
        log::warn!("Q vanishes on the whole grid; returning the outer model");
        return Ok((b, true));
    }
    while b - a > 1 {
        let c = (a + b) / 2;
        if is_zero(q_at(c)?) {
            a = c;
        } else {
            b = c;
        }
    }
    Ok((a, false))
}

/// Binary search over precomputed grid evaluations (sorted by `μ`).
pub fn search_evaluations(
    grid: MuGrid,
    evaluations: &[(f64, f64)],
) -> Result<MuSearch, SearchError> {
    assert_eq!(
        evaluations.len(),
        grid.len(),
        "one evaluation per grid point"
    );
    for w in evaluations.windows(2) {
        let ((mu_lo, q_lo), (mu_hi, q_hi)) = (w[0], w[1]);
        if q_lo > q_hi + monotone_tol(q_hi) {
            return Err(SearchError::NonMonotone {
                mu_lo,
                q_lo,
                mu_hi,
                q_hi,
            });
        }
    }
    let (index, saturated) = bisect(grid, |k| Ok(evaluations[k].1))?;
    Ok(MuSearch {
        index,
        mu_star: grid.mu(index),
        evaluations: evaluations.to_vec(),
        oracle_calls: evaluations.len(),
        saturated,
    })
}

/// Binary search that calls the oracle only at the points it visits.
pub fn search_lazy(oracle: &dyn MuOracle, grid: MuGrid) -> Result<MuSearch, SearchError> {
    let mut seen: BTreeMap<usize, f64> = BTreeMap::new();
    let mut calls = 0usize;
    let (index, saturated) = bisect(grid, |k| {
        if let Some(&q) = seen.get(&k) {
            return Ok(q);
        }
        calls += 1;
        let q = oracle.q(grid.mu(k))?;
        // probes must stay consistent with monotonicity
        let below = seen
            .range(..k)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let above = seen
            .range(k + 1..)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        if below > q + monotone_tol(q) || q > above + monotone_tol(above) {
            let (&kk, &qq) = if below > q + monotone_tol(q) {
                seen.range(..k).max_by(|x, y| x.1.total_cmp(y.1)).unwrap()
            } else {
                seen.range(k + 1..)
                    .min_by(|x, y| x.1.total_cmp(y.1))
                    .unwrap()
            };
            let ((mu_lo, q_lo), (mu_hi, q_hi)) = if kk < k {
                ((grid.mu(kk), qq), (grid.mu(k), q))
            } else {
                ((grid.mu(k), q), (grid.mu(kk), qq))
            };
            return Err(SearchError::NonMonotone {
                mu_lo,
                q_lo,
                mu_hi,
                q_hi,
            });
        }
        seen.insert(k, q);
        Ok(q)
    })?;
    Ok(MuSearch {
        index,
        mu_star: grid.mu(index),
        evaluations: seen.into_iter().map(|(k, q)| (grid.mu(k), q)).collect(),
        oracle_calls: calls,
        saturated,
    })
}

/// Runs the search in the given mode and assembles the ESBM.
pub fn binary_search_mu(
    oracle: &dyn MuOracle,
    sbm: &BatteryParams,
    nbm: &BatteryParams,
    interval: f64,
    mode: SearchMode,
) -> Result<EsbmResult, SearchError> {
    let grid = MuGrid::new(interval)?;
    let found = match mode {
        SearchMode::Grid => {
            let evaluations = grid_eval(oracle, grid)?;
            search_evaluations(grid, &evaluations)?
        }
        SearchMode::Lazy => search_lazy(oracle, grid)?,
    };
    assemble(sbm, nbm, found)
}

pub fn assemble(
    sbm: &BatteryParams,
    nbm: &BatteryParams,
    found: MuSearch,
) -> Result<EsbmResult, SearchError> {
    let params = battery::combine(sbm, nbm, found.mu_star)?;
    Ok(EsbmResult {
        mu_star: found.mu_star,
        branch: Branch::of(found.mu_star),
        params,
        evaluations: found.evaluations,
        oracle_calls: found.oracle_calls,
        saturated: found.saturated,
    })
}

/// Full ESBM calibration for a fleet instance using its own SBM/NBM.
pub fn calibrate(
    instance: &OracleInstance,
    alpha: f64,
    interval: f64,
    mode: SearchMode,
) -> Result<EsbmResult, SearchError> {
    let sbm = battery::sbm_params(&instance.fleet, alpha)?;
    let nbm = battery::nbm_params(&instance.fleet, alpha)?;
    let oracle = FleetOracle { instance, sbm, nbm };
    binary_search_mu(&oracle, &sbm, &nbm, interval, mode)
}
