//! Dense two-phase primal simplex.
//!
//! Problems are stated as `minimize c·x` subject to row constraints with a sense
//! per row and per-variable bounds (either side may be infinite). Internally each
//! problem is rewritten in standard form `A y = b, y >= 0, b >= 0` and solved on
//! a dense tableau with Bland's smallest-index rule, so the pivot sequence is a
//! pure function of the input.

use std::fmt::{self, Write as _};

use thiserror::Error;

/// Pivot elements below this magnitude are never used.
pub const PIVOT_TOL: f64 = 1e-9;
/// Phase-one objective above this value means the problem is infeasible.
pub const INFEASIBLE_TOL: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("simplex hit the iteration cap of {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// An empty problem over `n` variables, each bounded below by zero.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    /// Adds a row given as sparse `(column, coefficient)` pairs.
    pub fn add_sparse_row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, v) in terms {
            row[j] += v;
        }
        self.add_row(row, sense, rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.lower[var] = lo;
        self.upper[var] = hi;
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.rows.len();
        if self.senses.len() != m || self.rhs.len() != m {
            return Err(LpError::InvalidProblem(format!(
                "{m} rows but {} senses and {} rhs entries",
                self.senses.len(),
                self.rhs.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidProblem(
                "bound vectors do not match objective".into(),
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::InvalidProblem(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) || !self.rhs[i].is_finite() {
                return Err(LpError::InvalidProblem(format!("row {i} is not finite")));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::InvalidProblem("objective is not finite".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
            {
                return Err(LpError::InvalidProblem(format!(
                    "variable {j} has bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text dump: objective, one line per row, one line per bound.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "vars {} rows {}", self.num_vars(), self.num_rows());
        let _ = writeln!(out, "min {}", join(&self.objective));
        for i in 0..self.num_rows() {
            let _ = writeln!(
                out,
                "row {} {} {:e}",
                join(&self.rows[i]),
                self.senses[i],
                self.rhs[i]
            );
        }
        for j in 0..self.num_vars() {
            let _ = writeln!(out, "bound {j} {:e} {:e}", self.lower[j], self.upper[j]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row multipliers with the convention `c - Aᵀy` = reduced costs; `<=` rows
    /// carry `y <= 0` and `>=` rows `y >= 0`.
    pub dual: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// How a problem variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lo + y
    Shift { col: usize, lo: f64 },
    /// x = hi - y
    Mirror { col: usize, hi: f64 },
    /// x = y⁺ - y⁻
    Split { pos: usize, neg: usize },
}

impl VarMap {
    fn offset(&self) -> f64 {
        match *self {
            VarMap::Shift { lo, .. } => lo,
            VarMap::Mirror { hi, .. } => hi,
            VarMap::Split { .. } => 0.0,
        }
    }
}

/// Origin of a standard-form row.
#[derive(Debug, Clone, Copy)]
enum RowOrigin {
    Problem { index: usize, sign: f64 },
    Bound,
}

struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    origins: Vec<RowOrigin>,
    vars: Vec<VarMap>,
    /// Column that can start in the basis for each row, if any.
    natural_basis: Vec<Option<usize>>,
    /// Number of structural + slack columns.
    width: usize,
}

fn to_standard_form(p: &LpProblem) -> StandardForm {
    let mut vars = Vec::with_capacity(p.num_vars());
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..p.num_vars() {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if lo.is_finite() {
            vars.push(VarMap::Shift { col: ncols, lo });
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            vars.push(VarMap::Mirror { col: ncols, hi });
            ncols += 1;
        } else {
            vars.push(VarMap::Split {
                pos: ncols,
                neg: ncols + 1,
            });
            ncols += 2;
        }
    }
    let structural = ncols;
    let mut cost = vec![0.0; structural];
    for (j, map) in vars.iter().enumerate() {
        let c = p.objective[j];
        match *map {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Mirror { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    // (coefficients over structural columns, slack sign or 0, rhs, origin)
    let mut pending: Vec<(Vec<f64>, f64, f64, RowOrigin)> = Vec::new();
    for i in 0..p.num_rows() {
        let mut coeffs = vec![0.0; structural];
        let mut rhs = p.rhs[i];
        for (j, map) in vars.iter().enumerate() {
            let v = p.rows[i][j];
            if v == 0.0 {
                continue;
            }
            rhs -= v * map.offset();
            match *map {
                VarMap::Shift { col, .. } => coeffs[col] += v,
                VarMap::Mirror { col, .. } => coeffs[col] -= v,
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += v;
                    coeffs[neg] -= v;
                }
            }
        }
        let slack = match p.senses[i] {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => 0.0,
        };
        pending.push((
            coeffs,
            slack,
            rhs,
            RowOrigin::Problem {
                index: i,
                sign: 1.0,
            },
        ));
    }
    for (col, width) in bound_rows {
        let mut coeffs = vec![0.0; structural];
        coeffs[col] = 1.0;
        pending.push((coeffs, 1.0, width, RowOrigin::Bound));
    }

    let num_slacks = pending.iter().filter(|r| r.1 != 0.0).count();
    let width = structural + num_slacks;
    let mut a = Vec::with_capacity(pending.len());
    let mut b = Vec::with_capacity(pending.len());
    let mut origins = Vec::with_capacity(pending.len());
    let mut natural_basis = Vec::with_capacity(pending.len());
    let mut next_slack = structural;
    for (coeffs, slack, rhs, origin) in pending {
        let mut row = coeffs;
        row.resize(width, 0.0);
        let mut slack_col = None;
        if slack != 0.0 {
            row[next_slack] = slack;
            slack_col = Some(next_slack);
            next_slack += 1;
        }
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        if sign < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        let origin = match origin {
            RowOrigin::Problem { index, .. } => RowOrigin::Problem { index, sign },
            o => o,
        };
        let basis = slack_col.filter(|&c| row[c] > 0.0);
        a.push(row);
        b.push(rhs * sign);
        origins.push(origin);
        natural_basis.push(basis);
    }
    cost.resize(width, 0.0);
    StandardForm {
        a,
        b,
        cost,
        origins,
        vars,
        natural_basis,
        width,
    }
}

struct Tableau {
    /// m rows of `ncols + 1` entries; the last entry is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let piv = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                row[c] = 0.0;
            }
        }
        let factor = obj[c];
        if factor != 0.0 {
            for (v, p) in obj.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row (with `-z` in the last slot) for the given costs.
    fn objective_row(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj = vec![0.0; self.ncols + 1];
        obj[..cost.len()].copy_from_slice(cost);
        for (row, &bj) in self.rows.iter().zip(&self.basis) {
            let cb = cost.get(bj).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
        obj
    }

    fn run(
        &mut self,
        obj: &mut [f64],
        allowed: usize,
        iterations: &mut usize,
        cap: usize,
    ) -> Result<PhaseOutcome, LpError> {
        loop {
            // Bland: smallest eligible entering index.
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -PIVOT_TOL) else {
                return Ok(PhaseOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[self.ncols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie {
                                Some((i, ratio))
                            } else if tie && self.basis[i] < self.basis[k] {
                                Some((i, ratio.min(best)))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            *iterations += 1;
            if *iterations > cap {
                return Err(LpError::IterationLimit(cap));
            }
            self.pivot(r, enter, obj);
            // keep rhs non-negative against round-off
            for row in &mut self.rows {
                let rhs = &mut row[self.ncols];
                if *rhs < 0.0 && *rhs > -PIVOT_TOL {
                    *rhs = 0.0;
                }
            }
        }
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let sf = to_standard_form(problem);
    let m = sf.a.len();
    let width = sf.width;
    let cap = 50 * (m + width).max(1);

    // artificial columns for rows without a natural basis column
    let needs_artificial: Vec<usize> = (0..m).filter(|&i| sf.natural_basis[i].is_none()).collect();
    let ncols = width + needs_artificial.len();
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = needs_artificial.iter().enumerate();
    let mut next_art = art.next();
    for i in 0..m {
        let mut row = Vec::with_capacity(ncols + 1);
        row.extend_from_slice(&sf.a[i]);
        row.resize(ncols, 0.0);
        row.push(sf.b[i]);
        match sf.natural_basis[i] {
            Some(c) => basis.push(c),
            None => {
                let (k, _) = next_art.expect("artificial bookkeeping");
                row[width + k] = 1.0;
                basis.push(width + k);
                next_art = art.next();
            }
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, ncols };
    let mut iterations = 0usize;

    if !needs_artificial.is_empty() {
        let mut phase1_cost = vec![0.0; ncols];
        phase1_cost[width..].iter_mut().for_each(|c| *c = 1.0);
        let mut obj = tab.objective_row(&phase1_cost);
        match tab.run(&mut obj, ncols, &mut iterations, cap)? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => unreachable!("phase one is bounded below by zero"),
        }
        let infeasibility = -obj[ncols];
        if infeasibility > INFEASIBLE_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                primal: Vec::new(),
                dual: Vec::new(),
                iterations,
            });
        }
        // drive remaining artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= width {
                let candidate = (0..width).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL);
                match candidate {
                    Some(j) => {
                        let mut scratch = vec![0.0; ncols + 1];
                        tab.pivot(i, j, &mut scratch);
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut obj = tab.objective_row(&sf.cost);
    if let PhaseOutcome::Unbounded = tab.run(&mut obj, width, &mut iterations, cap)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            primal: Vec::new(),
            dual: Vec::new(),
            iterations,
        });
    }

    let mut y = vec![0.0; width];
    for (row, &bj) in tab.rows.iter().zip(&tab.basis) {
        if bj < width {
            y[bj] = row[ncols].max(0.0);
        }
    }
    let primal: Vec<f64> = sf
        .vars
        .iter()
        .map(|map| match *map {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Mirror { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = problem
        .objective
        .iter()
        .zip(&primal)
        .map(|(c, x)| c * x)
        .sum();
    let dual = row_duals(problem, &sf, &tab);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        primal,
        dual,
        iterations,
    })
}

/// Solves `Bᵀ w = c_B` on the final basis and maps the multipliers back onto
/// the caller's rows.
fn row_duals(problem: &LpProblem, sf: &StandardForm, tab: &Tableau) -> Vec<f64> {
    let m_all = sf.a.len();
    let mut dual = vec![0.0; problem.num_rows()];
    if tab.basis.is_empty() {
        return dual;
    }
    // Rows that survived phase one are identified by their original index: the
    // tableau keeps rows in order and only removes redundant ones, so recover
    // the surviving set by matching the basis size against a rank-revealing
    // elimination over all rows.
    let k = tab.basis.len();
    let cols = &tab.basis;
    // B is m_all x k (rows of A restricted to basic columns). Pick k independent
    // rows with partial pivoting and solve the square transposed system.
    let b_full: Vec<Vec<f64>> = (0..m_all)
        .map(|i| {
            cols.iter()
                .map(|&c| if c < sf.width { sf.a[i][c] } else { 0.0 })
                .collect()
        })
        .collect();
    let chosen = independent_rows(&b_full, k);
    let square: Vec<Vec<f64>> = chosen.iter().map(|&i| b_full[i].clone()).collect();
    // Bᵀ w = c_B  with B = square (k x k), w indexed by chosen rows
    let transposed: Vec<Vec<f64>> = (0..k)
        .map(|c| (0..k).map(|r| square[r][c]).collect())
        .collect();
    let cb: Vec<f64> = cols
        .iter()
        .map(|&c| sf.cost.get(c).copied().unwrap_or(0.0))
        .collect();
    let Some(w) = crate::linalg::solve(transposed, cb, 1e-12) else {
        return dual;
    };
    for (&i, wi) in chosen.iter().zip(w) {
        if let RowOrigin::Problem { index, sign } = sf.origins[i] {
            dual[index] = sign * wi;
        }
    }
    dual
}

/// Greedy selection of `k` linearly independent rows of `mat`.
fn independent_rows(mat: &[Vec<f64>], k: usize) -> Vec<usize> {
    let ncols = mat.first().map_or(0, Vec::len);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut chosen = Vec::new();
    for (i, row) in mat.iter().enumerate() {
        if chosen.len() == k {
            break;
        }
        let mut r = row.clone();
        for (b, &p) in basis.iter().zip(&pivots) {
            let f = r[p] / b[p];
            if f != 0.0 {
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= f * y);
            }
        }
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if let Some((p, _)) = (0..ncols)
            .map(|j| (j, r[j].abs()))
            .filter(|&(_, v)| v > 1e-10 * scale)
            .max_by(|a, b| a.1.total_cmp(&b.1))
        {
            basis.push(r);
            pivots.push(p);
            chosen.push(i);
        }
    }
    chosen
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualReport {
    /// Largest violation of a row or bound by the primal point.
    pub primal_residual: f64,
    /// Largest sign violation of a row multiplier or reduced cost.
    pub dual_residual: f64,
    /// Sum of |multiplier x slack| over rows and bounds.
    pub complementarity: f64,
    /// |c·x - dual objective|.
    pub duality_gap: f64,
}

impl DualReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_residual
            .max(self.dual_residual)
            .max(self.complementarity)
            .max(self.duality_gap)
    }
}

/// Residuals of a claimed optimal primal/dual pair.
pub fn dual_check(problem: &LpProblem, solution: &LpSolution) -> DualReport {
    const ZERO: f64 = 1e-9;
    let x = &solution.primal;
    let y = &solution.dual;
    let mut primal_residual = 0.0f64;
    let mut dual_residual = 0.0f64;
    let mut complementarity = 0.0f64;
    let mut dual_objective = 0.0;
    for i in 0..problem.num_rows() {
        let ax: f64 = problem.rows[i].iter().zip(x).map(|(a, v)| a * v).sum();
        let slack = ax - problem.rhs[i];
        let (viol, sign_viol) = match problem.senses[i] {
            Sense::Le => (slack.max(0.0), y[i].max(0.0)),
            Sense::Ge => ((-slack).max(0.0), (-y[i]).max(0.0)),
            Sense::Eq => (slack.abs(), 0.0),
        };
        primal_residual = primal_residual.max(viol);
        dual_residual = dual_residual.max(sign_viol);
        complementarity += (y[i] * slack).abs();
        dual_objective += y[i] * problem.rhs[i];
    }
    for j in 0..problem.num_vars() {
        let (lo, hi) = (problem.lower[j], problem.upper[j]);
        primal_residual = primal_residual
            .max((lo - x[j]).max(0.0))
            .max((x[j] - hi).max(0.0));
        let aty: f64 = (0..problem.num_rows())
            .map(|i| problem.rows[i][j] * y[i])
            .sum();
        let d = problem.objective[j] - aty;
        if d > ZERO {
            if lo.is_finite() {
                dual_objective += d * lo;
                complementarity += d * (x[j] - lo).abs();
            } else {
                dual_residual = dual_residual.max(d);
            }
        } else if d < -ZERO {
            if hi.is_finite() {
                dual_objective += d * hi;
                complementarity += (-d) * (hi - x[j]).abs();
            } else {
                dual_residual = dual_residual.max(-d);
            }
        }
    }
    let primal_objective: f64 = problem.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    DualReport {
        primal_residual,
        dual_residual,
        complementarity,
        duality_gap: (primal_objective - dual_objective).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bound() {
        let mut p = LpProblem::new(vec![1.0]);
        p.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        p.add_row(vec![1.0], Sense::Ge, 3.0);
        let s = solve_lp(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.dual[0] - 1.0).abs() < 1e-12);
        assert!(dual_check(&p, &s).max_residual() < 1e-9);
    }

    #[test]
    fn simplex_edge() {
        let mut p = LpProblem::new(vec![-1.0, -1.0]);
        p.add_row(vec![1.0, 1.0], Sense::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective + 1.0).abs() < 1e-12);
        assert!(dual_check(&p, &s).duality_gap < 1e-12);
    }

    #[test]
    fn empty_feasible_set() {
        let mut p = LpProblem::new(vec![0.0]);
        p.add_row(vec![1.0], Sense::Le, -1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new(vec![-1.0, 0.0]);
        p.add_row(vec![1.0, -1.0], Sense::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min x - y, x free, y <= 2, x + y = 1, x >= -5
        let mut p = LpProblem::new(vec![1.0, -1.0]);
        p.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        p.set_bounds(1, f64::NEG_INFINITY, 2.0);
        p.add_row(vec![1.0, 1.0], Sense::Eq, 1.0);
        p.add_row(vec![1.0, 0.0], Sense::Ge, -5.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - (-1.0 - 2.0)).abs() < 1e-12);
        assert!((s.primal[0] + 1.0).abs() < 1e-12);
        let r = dual_check(&p, &s);
        assert!(r.max_residual() < 1e-9, "{r:?}");
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::new(vec![1.0, 2.0]);
        p.add_row(vec![1.0, 1.0], Sense::Eq, 2.0);
        p.add_row(vec![2.0, 2.0], Sense::Eq, 4.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(dual_check(&p, &s).max_residual() < 1e-9);
    }

    #[test]
    fn perturbed_primal_is_detected() {
        let mut p = LpProblem::new(vec![-1.0, -2.0]);
        p.set_bounds(0, 0.0, 3.0);
        p.set_bounds(1, 0.0, 3.0);
        p.add_row(vec![1.0, 1.0], Sense::Le, 4.0);
        let mut s = solve_lp(&p).unwrap();
        assert!(dual_check(&p, &s).max_residual() < 1e-9);
        s.primal[0] += 0.1;
        let r = dual_check(&p, &s);
        assert!(r.primal_residual > 0.05);
        assert!(r.duality_gap > 0.05);
    }

    #[test]
    fn dimension_mismatch() {
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.add_row(vec![1.0], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&p), Err(LpError::InvalidProblem(_))));
        let mut p = LpProblem::new(vec![1.0]);
        p.set_bounds(0, 2.0, 1.0);
        assert!(matches!(solve_lp(&p), Err(LpError::InvalidProblem(_))));
    }

    #[test]
    fn text_dump_is_stable() {
        let mut p = LpProblem::new(vec![1.0, -1.0]);
        p.add_row(vec![1.0, 1.0], Sense::Le, 2.0);
        let text = p.to_text();
        assert!(text.starts_with("vars 2 rows 1\nmin 1e0 -1e0\nrow 1e0 1e0 <= 2e0\n"));
        assert_eq!(text, p.clone().to_text());
    }

    #[test]
    fn objective_scaling_preserves_status() {
        let mut p = LpProblem::new(vec![-1.0, -3.0]);
        p.set_bounds(0, 0.0, 2.0);
        p.add_row(vec![1.0, 2.0], Sense::Le, 4.0);
        p.add_row(vec![1.0, -1.0], Sense::Ge, -1.0);
        let base = solve_lp(&p).unwrap();
        for lambda in [0.5, 3.0, 1e3] {
            let mut q = p.clone();
            q.objective.iter_mut().for_each(|c| *c *= lambda);
            let s = solve_lp(&q).unwrap();
            assert_eq!(s.status, base.status);
            assert!((s.objective - lambda * base.objective).abs() < 1e-9 * lambda);
        }
    }
}
