//! The diversity Markov chain at a single fitness level.
//!
//! For population size `mu` the chain has `m = ceil(mu/2)` transient states
//! `0..m`, where state `i` means `i` individuals differ from the majority
//! genotype, and one absorbing state `m` meaning that an individual with more
//! than `j` one-bits has been sampled. Only nearest-neighbour moves and jumps
//! to the absorbing state are possible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mutation::FlipProbabilities;

const ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub mu: usize,
    /// Current level: number of one-bits shared by the population.
    pub j: usize,
    pub n: usize,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl ChainSpec {
    pub fn new(mu: usize, j: usize, n: usize, probs: FlipProbabilities) -> Result<Self> {
        let spec = Self {
            mu,
            j,
            n,
            p0: probs.p0,
            p1: probs.p1,
            p2: probs.p2,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Chain for standard bit mutation at rate `c/n`, using the large-`n`
    /// flip probabilities.
    pub fn with_rate(mu: usize, j: usize, n: usize, c: f64) -> Result<Self> {
        Self::new(mu, j, n, FlipProbabilities::from_rate(c))
    }

    pub fn m(&self) -> usize {
        self.mu.div_ceil(2)
    }

    pub fn probabilities(&self) -> FlipProbabilities {
        FlipProbabilities {
            p0: self.p0,
            p1: self.p1,
            p2: self.p2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu < 3 {
            return Err(Error::InvalidChain(format!(
                "population size mu = {} must be at least 3",
                self.mu
            )));
        }
        if self.n == 0 || self.j >= self.n {
            return Err(Error::InvalidChain(format!(
                "level j = {} must lie in [0, n - 1] for n = {}",
                self.j, self.n
            )));
        }
        FlipProbabilities::new(self.p0, self.p1, self.p2)
            .map_err(|e| Error::InvalidChain(e.to_string()))?;
        Ok(())
    }
}

/// Transition probabilities of the transient states.
///
/// Row `i` holds `p[i][k]` for `k` in `0..=m`; column `m` is the absorbing
/// state. The absorbing row itself is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    m: usize,
    rows: Vec<Vec<f64>>,
}

impl TransitionTable {
    /// Wraps an arbitrary dense `m x (m+1)` table without checking it; use
    /// [`validate_chain`] to inspect it.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidChain("table has no transient states".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != m + 1) {
            return Err(Error::InvalidChain(format!(
                "row {bad} has {} columns, expected {}",
                rows[bad].len(),
                m + 1
            )));
        }
        Ok(Self { m, rows })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `p(i, k)`; `k == m` is the absorbing state.
    pub fn p(&self, i: usize, k: usize) -> f64 {
        self.rows[i][k]
    }

    pub fn exit(&self, i: usize) -> f64 {
        self.rows[i][self.m]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Non-zero entries in row-major order.
    pub fn to_sparse(&self) -> Vec<Transition> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for (k, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    out.push(Transition { i, k, p });
                }
            }
        }
        out
    }

    pub fn from_sparse(m: usize, entries: &[Transition]) -> Result<Self> {
        let mut rows = vec![vec![0.0; m + 1]; m];
        for t in entries {
            if t.i >= m || t.k > m {
                return Err(Error::InvalidChain(format!(
                    "entry ({}, {}) outside a chain with m = {m}",
                    t.i, t.k
                )));
            }
            rows[t.i][t.k] = t.p;
        }
        Self::from_rows(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub i: usize,
    pub k: usize,
    pub p: f64,
}

#[derive(Serialize, Deserialize)]
struct SparseTable {
    m: usize,
    transitions: Vec<Transition>,
}

impl Serialize for TransitionTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SparseTable {
            m: self.m,
            transitions: self.to_sparse(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransitionTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SparseTable::deserialize(d)?;
        Self::from_sparse(raw.m, &raw.transitions).map_err(serde::de::Error::custom)
    }
}

/// Builds the transition table of the chain for `spec`.
///
/// Every formula is evaluated in the factored form in which it is usually
/// stated, so individual terms can be compared by hand.
pub fn build_chain(spec: &ChainSpec) -> Result<TransitionTable> {
    spec.validate()?;
    let ChainSpec {
        mu,
        j,
        n,
        p0,
        p1,
        p2,
        ..
    } = *spec;
    let m = spec.m();
    let muf = mu as f64;
    let (jf, nf) = (j as f64, n as f64);
    let mut rows = vec![vec![0.0; m + 1]; m];

    // state 0: no diversity
    rows[0][1] = muf / (muf + 1.0) * (2.0 * jf * (nf - jf) * p2) / (nf * nf);
    rows[0][m] = (nf - jf) * p1 / nf;

    for (i, row) in rows.iter_mut().enumerate().skip(1) {
        let fi = i as f64;
        row[m] = 2.0 * (fi / muf) * ((muf - fi) / muf) * (p0 / 4.0);
    }

    let inv = 1.0 / muf;
    let rest = (muf - 1.0) / muf;
    rows[1][0] = p0 * (rest * rest + 2.0 * inv * rest * 0.25) / (muf + 1.0);
    if m > 2 {
        let keep = (muf - 1.0) / (muf + 1.0);
        rows[1][2] = p0 * (inv * inv * keep + 2.0 * inv * rest * 0.25 * keep);
    }
    for (i, row) in rows.iter_mut().enumerate().take(m - 1).skip(2) {
        let fi = i as f64;
        let sel = fi / muf;
        let other = (muf - fi) / muf;
        let gain = (muf - fi) / (muf + 1.0);
        row[i + 1] = p0 * (sel * sel * gain.min(0.25) + 2.0 * sel * other * 0.25 * gain);
    }
    for (i, row) in rows.iter_mut().enumerate().skip(2) {
        let fi = i as f64;
        let sel = fi / muf;
        let other = (muf - fi) / muf;
        row[i - 1] =
            p0 * (other * other + 2.0 * sel * other * 0.25 + sel * sel / 16.0) * fi / (muf + 1.0);
    }

    for (i, row) in rows.iter_mut().enumerate() {
        let out: f64 = row
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, p)| p)
            .sum();
        row[i] = 1.0 - out;
    }

    for (i, row) in rows.iter().enumerate() {
        for (k, &p) in row.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidTransition {
                    from: i,
                    to: k,
                    value: p,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::RowSum { row: i, sum });
        }
    }
    TransitionTable::from_rows(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub max_row_residual: f64,
    pub row_sums_ok: bool,
    pub entries_in_range: bool,
    /// Non-zero entries only on the tridiagonal band and the exit column.
    pub topology_ok: bool,
    /// `p(i+1, m) >= p(i, m)` for every transient `1 <= i < m - 1`.
    pub exit_monotone: bool,
    /// Entries that violate range or topology, as `(i, k)`.
    pub offending: Vec<(usize, usize)>,
}

impl ChainDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.row_sums_ok && self.entries_in_range && self.topology_ok
    }
}

pub fn validate_chain(t: &TransitionTable) -> ChainDiagnostics {
    let m = t.m();
    let mut offending = Vec::new();
    let mut entries_in_range = true;
    let mut topology_ok = true;
    let mut max_row_residual = 0.0f64;
    for (i, row) in t.rows().iter().enumerate() {
        max_row_residual = max_row_residual.max((row.iter().sum::<f64>() - 1.0).abs());
        for (k, &p) in row.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                entries_in_range = false;
                offending.push((i, k));
            } else if p != 0.0 && k != m && i.abs_diff(k) > 1 {
                topology_ok = false;
                offending.push((i, k));
            }
        }
    }
    let exit_monotone = (1..m.saturating_sub(1)).all(|i| t.exit(i + 1) >= t.exit(i));
    ChainDiagnostics {
        max_row_residual,
        row_sums_ok: max_row_residual <= ROW_TOLERANCE,
        entries_in_range,
        topology_ok,
        exit_monotone,
        offending,
    }
}
