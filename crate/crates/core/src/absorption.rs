//! Expected absorption times of the diversity chain.
//!
//! With `Q` the transient block of the transition table, the fundamental
//! matrix is `N = (I - Q)^-1` and `N * 1` holds the expected absorption time
//! from each transient state. `I - Q` is tridiagonal with a positive diagonal
//! and non-positive off-diagonals, and is strictly diagonally dominant by row
//! whenever every exit probability is positive.
//!
//! Two independent routes are provided: Gaussian elimination of the
//! tridiagonal system, and the backward continued-fraction recursion that
//! yields the `(1,1)` entry of `N` directly.
//!
//! Indexing: the textbook presentation numbers matrix rows `1..=m` and chain
//! states `0..m`. Here everything is 0-based, so matrix row `r` is chain
//! state `r`, and `xi[r]` below corresponds to the quantity usually written
//! `xi_{r+2}`.

use serde::{Deserialize, Serialize};

use crate::chain::TransitionTable;
use crate::error::{Error, Result};

/// Relative slack used when comparing quantities that are equal in exact
/// arithmetic.
const ROUNDING: f64 = 1e-12;

/// `I - Q` in tridiagonal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalSystem {
    pub diag: Vec<f64>,
    /// `sub[r - 1]` is the entry at `(r, r - 1)`.
    pub sub: Vec<f64>,
    /// `sup[r]` is the entry at `(r, r + 1)`.
    pub sup: Vec<f64>,
    /// Exit probability of each row; equals the row's diagonal excess.
    pub exit: Vec<f64>,
    pub sdd: bool,
}

impl TridiagonalSystem {
    pub fn m(&self) -> usize {
        self.diag.len()
    }

    /// `A * x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m();
        (0..m)
            .map(|r| {
                let mut v = self.diag[r] * x[r];
                if r > 0 {
                    v += self.sub[r - 1] * x[r - 1];
                }
                if r + 1 < m {
                    v += self.sup[r] * x[r + 1];
                }
                v
            })
            .collect()
    }

    /// Solves `A x = rhs` by elimination without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.m();
        assert_eq!(rhs.len(), m, "right-hand side has the wrong length");
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::ZeroPivot { row: 0 });
        }
        if m > 1 {
            c[0] = self.sup[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for r in 1..m {
            pivot = self.diag[r] - self.sub[r - 1] * c[r - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::ZeroPivot { row: r });
            }
            if r + 1 < m {
                c[r] = self.sup[r] / pivot;
            }
            d[r] = (rhs[r] - self.sub[r - 1] * d[r - 1]) / pivot;
        }
        let mut x = d;
        for r in (0..m - 1).rev() {
            x[r] -= c[r] * x[r + 1];
        }
        Ok(x)
    }

    /// Dense inverse, one eliminated column at a time. `out[i][k]` is `N[i][k]`.
    pub fn inverse(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.m();
        let mut inv = vec![vec![0.0; m]; m];
        for k in 0..m {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            for (i, v) in self.solve(&e)?.into_iter().enumerate() {
                inv[i][k] = v;
            }
        }
        Ok(inv)
    }
}

/// Assembles `I - Q` from a transition table. Diagonal entries are formed as
/// the sum of the outgoing probabilities rather than `1 - p(i,i)`.
pub fn assemble_system(t: &TransitionTable) -> TridiagonalSystem {
    let m = t.m();
    let mut diag = Vec::with_capacity(m);
    let mut sub = Vec::with_capacity(m.saturating_sub(1));
    let mut sup = Vec::with_capacity(m.saturating_sub(1));
    let mut exit = Vec::with_capacity(m);
    for r in 0..m {
        let down = if r > 0 { t.p(r, r - 1) } else { 0.0 };
        let up = if r + 1 < m { t.p(r, r + 1) } else { 0.0 };
        diag.push(down + up + t.exit(r));
        exit.push(t.exit(r));
        if r > 0 {
            sub.push(-down);
        }
        if r + 1 < m {
            sup.push(-up);
        }
    }
    let sdd = (0..m).all(|r| {
        let off =
            if r > 0 { sub[r - 1].abs() } else { 0.0 } + if r + 1 < m { sup[r].abs() } else { 0.0 };
        diag[r] > off
    });
    TridiagonalSystem {
        diag,
        sub,
        sup,
        exit,
        sdd,
    }
}

/// Expected absorption times from every transient state: the solution of
/// `(I - Q) t = 1`.
pub fn solve_expected_times(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    sys.solve(&vec![1.0; sys.m()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiRecursion {
    /// `xi[r]` for rows `r = 1..m`, i.e. the usual `xi_2 ..= xi_m`.
    pub xi: Vec<f64>,
    /// `N[0][0]`.
    pub n11: f64,
}

impl XiRecursion {
    /// The usual `xi_2`: probability that diversity, once created, is lost
    /// before the chain absorbs. `None` for a single-state chain.
    pub fn xi2(&self) -> Option<f64> {
        self.xi.first().copied()
    }
}

/// Backward recursion `xi_r = |a(r,r-1)| / (a(r,r) + a(r,r+1) xi_{r+1})`, started
/// from the last row, and `N[0][0] = 1 / (a(0,0) + a(0,1) xi_1)`.
///
/// In chain terms `xi_r` is the probability that the chain started in state
/// `r` reaches state `r - 1` before absorbing.
pub fn xi_recursion(sys: &TridiagonalSystem) -> Result<XiRecursion> {
    let m = sys.m();
    let mut xi = vec![0.0; m.saturating_sub(1)];
    let mut next = 0.0;
    for r in (1..m).rev() {
        let up = if r + 1 < m { sys.sup[r] * next } else { 0.0 };
        let denom = sys.diag[r] + up;
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::DegenerateRecursion { row: r });
        }
        next = -sys.sub[r - 1] / denom;
        xi[r - 1] = next;
    }
    let denom = sys.diag[0] + if m > 1 { sys.sup[0] * xi[0] } else { 0.0 };
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateRecursion { row: 0 });
    }
    Ok(XiRecursion {
        xi,
        n11: 1.0 / denom,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub diagonal_positive: bool,
    pub nonnegative: bool,
    pub min_entry: f64,
    /// `|N[i][k]| <= N[k][k] <= 1 / (diagonal excess of row k)` for all `i, k`.
    pub varah_bound: bool,
    /// `N[0][k] <= 1 / exit(k)` for every `k` with a positive exit probability.
    pub first_row_bound: bool,
}

impl SignReport {
    pub fn ok(&self) -> bool {
        self.diagonal_positive && self.nonnegative && self.varah_bound && self.first_row_bound
    }
}

/// Inverts the system and checks that `N` is entrywise non-negative with a
/// positive diagonal, and that its entries obey the diagonal-dominance
/// bounds.
pub fn inverse_report(sys: &TridiagonalSystem) -> Result<SignReport> {
    let inv = sys.inverse()?;
    let m = sys.m();
    let min_entry = inv.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let diagonal_positive = (0..m).all(|k| inv[k][k] > 0.0);
    let nonnegative = min_entry >= 0.0;
    let slack = 1.0 + ROUNDING;
    let varah_bound = (0..m).all(|k| {
        let excess = sys.exit[k];
        let diag_ok = excess <= 0.0 || inv[k][k] <= slack / excess;
        diag_ok && (0..m).all(|i| inv[i][k].abs() <= inv[k][k] * slack)
    });
    let first_row_bound = (0..m).all(|k| sys.exit[k] <= 0.0 || inv[0][k] <= slack / sys.exit[k]);
    Ok(SignReport {
        diagonal_positive,
        nonnegative,
        min_entry,
        varah_bound,
        first_row_bound,
    })
}

/// Whether `(I - Q)^-1` has the sign structure required by the recursion.
pub fn check_sign_structure(sys: &TridiagonalSystem) -> bool {
    inverse_report(sys).is_ok_and(|r| r.ok())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionDiagnostics {
    pub sdd_ok: bool,
    pub signs_ok: bool,
    /// `||(I - Q) t - 1||_inf`.
    pub residual_norm: f64,
    /// Relative gap between `N[0][0]` from the recursion and from elimination.
    pub n11_relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionResult {
    /// `expected_times[i]` is `E[T_i]`, the expected number of steps to
    /// absorption from state `i`.
    pub expected_times: Vec<f64>,
    pub xi: Vec<f64>,
    pub n11: f64,
    pub diagnostics: AbsorptionDiagnostics,
}

impl AbsorptionResult {
    pub fn xi2(&self) -> Option<f64> {
        self.xi.first().copied()
    }
}

/// Solves the chain by both routes and collects the diagnostics.
pub fn analyze(t: &TransitionTable) -> Result<AbsorptionResult> {
    let sys = assemble_system(t);
    let expected_times = solve_expected_times(&sys)?;
    let rec = xi_recursion(&sys)?;
    let residual_norm = sys
        .apply(&expected_times)
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let mut e1 = vec![0.0; sys.m()];
    e1[0] = 1.0;
    let n11_elim = sys.solve(&e1)?[0];
    Ok(AbsorptionResult {
        expected_times,
        xi: rec.xi,
        n11: rec.n11,
        diagnostics: AbsorptionDiagnostics {
            sdd_ok: sys.sdd,
            signs_ok: check_sign_structure(&sys),
            residual_norm,
            n11_relative_gap: ((rec.n11 - n11_elim) / n11_elim).abs(),
        },
    })
}

/// `E[T_0] >= E[T_1] >= ... >= E[T_{m-1}] > 0`, up to rounding.
pub fn check_monotonicity(result: &AbsorptionResult) -> bool {
    let t = &result.expected_times;
    t.iter().all(|&v| v > 0.0 && v.is_finite())
        && t.windows(2).all(|w| w[0] >= w[1] * (1.0 - ROUNDING))
}
