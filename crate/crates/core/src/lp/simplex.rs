//! Bounded-variable two-phase revised simplex with a dense basis inverse.
//!
//! Small and deterministic: Dantzig pricing with smallest-index tie breaks,
//! falling back to Bland's rule when the objective stalls. All variables carry
//! finite or infinite box bounds; `<=` rows get slacks, equality rows get
//! phase-one artificials that are pinned to zero afterwards.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct SimplexRow {
    pub kind: RowKind,
    pub rhs: f64,
    /// Sparse (column, coefficient) terms over structural variables.
    pub terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct SimplexProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<SimplexRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    /// Values of the structural variables (meaningful when Optimal).
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-9;
const DJ_TOL: f64 = 1e-9;
const STALL_LIMIT: usize = 60;
const REFACTOR_PERIOD: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    n_struct: usize,
    n_total: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    values: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    iterations: usize,
}

pub fn solve_simplex(p: &SimplexProblem, max_iterations: usize) -> SimplexResult {
    let n = p.objective.len();
    debug_assert_eq!(p.lower.len(), n);
    debug_assert_eq!(p.upper.len(), n);

    let minimize_obj: Vec<f64> = match p.sense {
        Sense::Minimize => p.objective.clone(),
        Sense::Maximize => p.objective.iter().map(|c| -c).collect(),
    };

    if p.rows.is_empty() {
        // Every variable independently sits at its cheaper bound.
        let mut values = vec![0.0; n];
        for j in 0..n {
            values[j] = if minimize_obj[j] > 0.0 || (minimize_obj[j] == 0.0 && p.lower[j].is_finite())
            {
                p.lower[j]
            } else {
                p.upper[j]
            };
            if !values[j].is_finite() {
                return SimplexResult {
                    status: SimplexStatus::Unbounded,
                    values,
                    objective: f64::NEG_INFINITY,
                    iterations: 0,
                };
            }
        }
        let raw: f64 = (0..n).map(|j| minimize_obj[j] * values[j]).sum();
        return SimplexResult {
            status: SimplexStatus::Optimal,
            objective: signed(p.sense, raw),
            values,
            iterations: 0,
        };
    }

    let m = p.rows.len();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in p.rows.iter().enumerate() {
        for &(j, a) in &row.terms {
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
    }
    let mut lower = p.lower.clone();
    let mut upper = p.upper.clone();
    let mut values = vec![0.0; n];
    let mut state = vec![VarState::AtLower; n];
    for j in 0..n {
        if lower[j].is_finite() {
            values[j] = lower[j];
            state[j] = VarState::AtLower;
        } else if upper[j].is_finite() {
            values[j] = upper[j];
            state[j] = VarState::AtUpper;
        } else {
            values[j] = 0.0;
            state[j] = VarState::AtLower;
        }
    }

    // Activities under the initial nonbasic point decide slack/artificial setup.
    let mut activity = vec![0.0; m];
    for j in 0..n {
        if values[j] != 0.0 {
            for &(i, a) in &cols[j] {
                activity[i] += a * values[j];
            }
        }
    }

    let rhs: Vec<f64> = p.rows.iter().map(|r| r.rhs).collect();
    let mut basis = vec![usize::MAX; m];
    let mut artificial_cols: Vec<usize> = Vec::new();

    for (i, row) in p.rows.iter().enumerate() {
        let residual = rhs[i] - activity[i];
        match row.kind {
            RowKind::Le => {
                let slack = cols.len();
                cols.push(vec![(i, 1.0)]);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                if residual >= 0.0 {
                    values.push(residual);
                    state.push(VarState::Basic(i));
                    basis[i] = slack;
                } else {
                    values.push(0.0);
                    state.push(VarState::AtLower);
                    let art = cols.len();
                    cols.push(vec![(i, -1.0)]);
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                    values.push(-residual);
                    state.push(VarState::Basic(i));
                    basis[i] = art;
                    artificial_cols.push(art);
                }
            }
            RowKind::Eq => {
                let sign = if residual < 0.0 { -1.0 } else { 1.0 };
                let art = cols.len();
                cols.push(vec![(i, sign)]);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                values.push(residual.abs());
                state.push(VarState::Basic(i));
                basis[i] = art;
                artificial_cols.push(art);
            }
        }
    }

    let n_total = cols.len();
    let mut binv = vec![vec![0.0; m]; m];
    for (i, row) in binv.iter_mut().enumerate() {
        // The starting basis is signed-identity; invert the artificial signs.
        let j = basis[i];
        let sign = cols[j][0].1;
        row[i] = 1.0 / sign;
    }

    let mut tab = Tableau {
        n_struct: n,
        n_total,
        m,
        cols,
        lower,
        upper,
        rhs,
        values,
        state,
        basis,
        binv,
        iterations: 0,
    };

    // Phase one: drive the artificial variables to zero.
    if !artificial_cols.is_empty() {
        let mut phase1_cost = vec![0.0; tab.n_total];
        for &j in &artificial_cols {
            phase1_cost[j] = 1.0;
        }
        let status = tab.run(&phase1_cost, max_iterations, true);
        if status == SimplexStatus::IterationLimit {
            return tab.result(p.sense, &minimize_obj, status);
        }
        let infeasibility: f64 = artificial_cols.iter().map(|&j| tab.values[j]).sum();
        let feas_tol = 1e-7 * (1.0 + tab.rhs.iter().fold(0.0f64, |acc, r| acc.max(r.abs())));
        if infeasibility > feas_tol {
            return tab.result(p.sense, &minimize_obj, SimplexStatus::Infeasible);
        }
        for &j in &artificial_cols {
            tab.lower[j] = 0.0;
            tab.upper[j] = 0.0;
            tab.values[j] = 0.0;
        }
    }

    let mut phase2_cost = vec![0.0; tab.n_total];
    phase2_cost[..n].copy_from_slice(&minimize_obj);
    let status = tab.run(&phase2_cost, max_iterations, false);
    tab.result(p.sense, &minimize_obj, status)
}

fn signed(sense: Sense, minimized: f64) -> f64 {
    // + 0.0 keeps a zero objective positively signed after negation
    match sense {
        Sense::Minimize => minimized + 0.0,
        Sense::Maximize => -minimized + 0.0,
    }
}

impl Tableau {
    fn result(&self, sense: Sense, obj: &[f64], status: SimplexStatus) -> SimplexResult {
        let mut values = self.values[..self.n_struct].to_vec();
        for (j, v) in values.iter_mut().enumerate() {
            // Shave round-off that strays just outside the box.
            if self.lower[j].is_finite() && *v < self.lower[j] {
                *v = self.lower[j];
            }
            if self.upper[j].is_finite() && *v > self.upper[j] {
                *v = self.upper[j];
            }
        }
        let raw: f64 = (0..self.n_struct).map(|j| obj[j] * values[j]).sum();
        SimplexResult {
            status,
            objective: signed(sense, raw),
            values,
            iterations: self.iterations,
        }
    }

    fn run(&mut self, cost: &[f64], max_iterations: usize, phase1: bool) -> SimplexStatus {
        // Dantzig pricing with largest-pivot ratio ties by default; after the
        // objective stalls, Bland's rule (smallest entering index, smallest
        // leaving variable index on ratio ties) guarantees escape from cycles.
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::INFINITY;
        let mut since_refactor = 0usize;

        loop {
            if self.iterations >= max_iterations {
                return SimplexStatus::IterationLimit;
            }
            self.iterations += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_PERIOD {
                self.refactorize();
                since_refactor = 0;
            }

            // Duals for the current basis.
            let mut y = vec![0.0; self.m];
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    for k in 0..self.m {
                        y[k] += cb * self.binv[i][k];
                    }
                }
            }

            // Pricing.
            let mut entering: Option<(usize, f64, bool)> = None; // (col, |d|, increasing)
            for j in 0..self.n_total {
                if matches!(self.state[j], VarState::Basic(_)) || self.upper[j] - self.lower[j] <= 0.0
                {
                    continue;
                }
                let mut d = cost[j];
                for &(i, a) in &self.cols[j] {
                    d -= y[i] * a;
                }
                let eligible_up = self.state[j] == VarState::AtLower && d < -DJ_TOL;
                let eligible_down = self.state[j] == VarState::AtUpper && d > DJ_TOL;
                if !eligible_up && !eligible_down {
                    continue;
                }
                if bland {
                    entering = Some((j, d.abs(), eligible_up));
                    break;
                }
                if entering.is_none() || d.abs() > entering.unwrap().1 {
                    entering = Some((j, d.abs(), eligible_up));
                }
            }
            let Some((j_in, _, increasing)) = entering else {
                return SimplexStatus::Optimal;
            };

            // Direction of the basic solution as the entering variable moves.
            let mut w = vec![0.0; self.m];
            for &(i, a) in &self.cols[j_in] {
                if a != 0.0 {
                    for k in 0..self.m {
                        w[k] += a * self.binv[k][i];
                    }
                }
            }
            let dir = if increasing { 1.0 } else { -1.0 };

            // Ratio test: keep every basic variable inside its box, allow a
            // bound flip of the entering variable itself.
            let mut theta = self.upper[j_in] - self.lower[j_in];
            let mut leaving: Option<(usize, f64, bool)> = None; // (row, |pivot|, hits_upper)
            let better_tie = |cand_row: usize, cand_pivot: f64, cur: &Option<(usize, f64, bool)>| {
                match cur {
                    None => true,
                    Some((row, pivot, _)) => {
                        if bland {
                            // Bland needs the smallest leaving variable index.
                            self.basis[cand_row] < self.basis[*row]
                        } else {
                            cand_pivot > *pivot
                        }
                    }
                }
            };
            for i in 0..self.m {
                let rate = -dir * w[i]; // d(x_basic_i)/d(theta)
                let bi = self.basis[i];
                let xi = self.values[bi];
                if rate < -PIVOT_TOL {
                    if self.lower[bi].is_finite() {
                        let t = (xi - self.lower[bi]) / -rate;
                        if t < theta - PIVOT_TOL
                            || (t < theta + PIVOT_TOL && better_tie(i, w[i].abs(), &leaving))
                        {
                            theta = t.max(0.0).min(theta);
                            leaving = Some((i, w[i].abs(), false));
                        }
                    }
                } else if rate > PIVOT_TOL && self.upper[bi].is_finite() {
                    let t = (self.upper[bi] - xi) / rate;
                    if t < theta - PIVOT_TOL
                        || (t < theta + PIVOT_TOL && better_tie(i, w[i].abs(), &leaving))
                    {
                        theta = t.max(0.0).min(theta);
                        leaving = Some((i, w[i].abs(), true));
                    }
                }
            }

            if theta.is_infinite() {
                return if phase1 {
                    // Phase-one objective is bounded below by zero; an
                    // unbounded ray here means numerical trouble. Treat as
                    // infeasible after a clean refactorization.
                    self.refactorize();
                    SimplexStatus::Infeasible
                } else {
                    SimplexStatus::Unbounded
                };
            }

            // Apply the step.
            for i in 0..self.m {
                let bi = self.basis[i];
                self.values[bi] += -dir * w[i] * theta;
            }
            self.values[j_in] += dir * theta;

            match leaving {
                None => {
                    // Bound flip: basis unchanged.
                    self.state[j_in] = if increasing {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.values[j_in] = if increasing {
                        self.upper[j_in]
                    } else {
                        self.lower[j_in]
                    };
                }
                Some((r, _, hits_upper)) => {
                    let j_out = self.basis[r];
                    self.state[j_out] = if hits_upper {
                        self.values[j_out] = self.upper[j_out];
                        VarState::AtUpper
                    } else {
                        self.values[j_out] = self.lower[j_out];
                        VarState::AtLower
                    };
                    self.state[j_in] = VarState::Basic(r);
                    self.basis[r] = j_in;
                    self.update_binv(r, &w);
                }
            }

            // Cycling watch: switch to Bland's rule while the objective stalls.
            let obj: f64 = (0..self.n_total)
                .map(|j| cost[j] * self.values[j])
                .sum();
            if obj < last_obj - 1e-12 {
                last_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            }
        }
    }

    /// Elementary row transformation of the inverse after a pivot on row `r`.
    fn update_binv(&mut self, r: usize, w: &[f64]) {
        let pivot = w[r];
        for k in 0..self.m {
            self.binv[r][k] /= pivot;
        }
        for i in 0..self.m {
            if i != r && w[i].abs() > 0.0 {
                let factor = w[i];
                for k in 0..self.m {
                    self.binv[i][k] -= factor * self.binv[r][k];
                }
            }
        }
    }

    /// Rebuilds the inverse from the basis columns and refreshes the basic values.
    fn refactorize(&mut self) {
        let m = self.m;
        let mut a = vec![vec![0.0; 2 * m]; m];
        for (pos, &j) in self.basis.iter().enumerate() {
            for &(i, coef) in &self.cols[j] {
                a[i][pos] = coef;
            }
        }
        for i in 0..m {
            a[i][m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting.
        for col in 0..m {
            let mut piv = col;
            for i in col + 1..m {
                if a[i][col].abs() > a[piv][col].abs() {
                    piv = i;
                }
            }
            if a[piv][col].abs() < 1e-12 {
                continue; // numerically singular direction; leave as-is
            }
            a.swap(col, piv);
            let d = a[col][col];
            for k in 0..2 * m {
                a[col][k] /= d;
            }
            for i in 0..m {
                if i != col && a[i][col] != 0.0 {
                    let f = a[i][col];
                    for k in 0..2 * m {
                        a[i][k] -= f * a[col][k];
                    }
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.binv[i][k] = a[i][m + k];
            }
        }
        // x_B = Binv (b - N x_N)
        let mut resid = self.rhs.clone();
        for j in 0..self.n_total {
            if !matches!(self.state[j], VarState::Basic(_)) && self.values[j] != 0.0 {
                for &(i, coef) in &self.cols[j] {
                    resid[i] -= coef * self.values[j];
                }
            }
        }
        for i in 0..m {
            let mut x = 0.0;
            for k in 0..m {
                x += self.binv[i][k] * resid[k];
            }
            self.values[self.basis[i]] = x;
        }
    }
}
