//! Absorption probabilities on (absorbing) Markov chains derived from
//! stochastic transition systems.
//!
//! A state value x_s is the probability that a walk from s ends in one of
//! the target states. Target rows are x = 1; states that cannot reach any
//! target are pinned to 0 (this subsumes livelock zeroing and keeps
//! sub-stochastic product systems non-singular); the remaining states get
//! flow rows x_k = sum p * x_k'.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::net::{Lsp, Marking};
use crate::reachability::{build_reachability_graph, Sts, StateInfo, DEFAULT_MAX_STATES};

/// Unknowns above this count switch the solver from dense LU to
/// Gauss-Seidel sweeps on x = Px + b.
const DENSE_LIMIT: usize = 2_000;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-12, max_sweeps: 1_000_000 }
    }
}

/// Label-free chain encoding of an STS: every final state gains a
/// probability-1 self-loop. State indexing is preserved.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    /// outgoing[s]: list of (target, probability).
    pub outgoing: Vec<Vec<(usize, f64)>>,
    pub absorbing: Vec<bool>,
}

pub fn embed_chain(sts: &Sts) -> MarkovChain {
    let n = sts.num_states();
    let mut outgoing = vec![Vec::new(); n];
    for e in sts.edges() {
        outgoing[e.source].push((e.target, e.probability));
    }
    let mut absorbing = vec![false; n];
    for &f in &sts.finals {
        outgoing[f].push((f, 1.0));
        absorbing[f] = true;
    }
    MarkovChain { outgoing, absorbing }
}

/// One equation per state.
#[derive(Debug, Clone)]
pub enum Row {
    /// x = 1 (targeted state).
    One,
    /// x = 0 (state that cannot reach any target).
    Zero,
    /// x = sum of p * x_target over the listed terms.
    Flow(Vec<(usize, f64)>),
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub rows: Vec<Row>,
}

impl LinearSystem {
    /// Plain-text rendering, one `x_s = ...` line per state.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for (s, row) in self.rows.iter().enumerate() {
            match row {
                Row::One => writeln!(out, "x_{s} = 1").unwrap(),
                Row::Zero => writeln!(out, "x_{s} = 0").unwrap(),
                Row::Flow(terms) => {
                    let rhs: Vec<String> =
                        terms.iter().map(|(t, p)| format!("{p}*x_{t}")).collect();
                    writeln!(out, "x_{s} = {}", rhs.join(" + ")).unwrap();
                }
            }
        }
        out
    }
}

/// Assembles the equation system for `targets` over `sts`. States from which
/// no target is reachable get x = 0 rows.
pub fn assemble_system(sts: &Sts, targets: &BTreeSet<usize>) -> Result<LinearSystem> {
    for &t in targets {
        if t >= sts.num_states() {
            return Err(Error::Analysis(format!("target state {t} out of range")));
        }
        if !sts.finals.contains(&t) {
            return Err(Error::Analysis(format!("target state {t} is not a final state")));
        }
    }
    let reaches = sts.can_reach(targets);
    let rows = (0..sts.num_states())
        .map(|s| {
            if targets.contains(&s) {
                Row::One
            } else if !reaches[s] {
                Row::Zero
            } else {
                Row::Flow(
                    sts.outgoing(s)
                        .iter()
                        .map(|e| (e.target, e.probability))
                        .collect(),
                )
            }
        })
        .collect();
    Ok(LinearSystem { rows })
}

/// Solves an assembled system; returns the full per-state vector.
pub fn solve_linear(system: &LinearSystem, opts: SolverOptions) -> Result<Vec<f64>> {
    let n = system.rows.len();
    // Index the flow unknowns.
    let mut unknown_of_state = vec![usize::MAX; n];
    let mut states_of_unknown = Vec::new();
    for (s, row) in system.rows.iter().enumerate() {
        if matches!(row, Row::Flow(_)) {
            unknown_of_state[s] = states_of_unknown.len();
            states_of_unknown.push(s);
        }
    }
    let m = states_of_unknown.len();

    let fixed = |s: usize| -> Option<f64> {
        match system.rows[s] {
            Row::One => Some(1.0),
            Row::Zero => Some(0.0),
            Row::Flow(_) => None,
        }
    };

    let solution_unknowns = if m == 0 {
        Vec::new()
    } else if m <= DENSE_LIMIT {
        // (I - P_uu) x = P_uf * fixed
        let mut a = vec![0.0f64; m * m];
        let mut b = vec![0.0f64; m];
        for (u, &s) in states_of_unknown.iter().enumerate() {
            a[u * m + u] = 1.0;
            if let Row::Flow(terms) = &system.rows[s] {
                for &(t, p) in terms {
                    match fixed(t) {
                        Some(v) => b[u] += p * v,
                        None => a[u * m + unknown_of_state[t]] -= p,
                    }
                }
            }
        }
        lu_solve(&mut a, &mut b, m)?
    } else {
        gauss_seidel(system, &states_of_unknown, &unknown_of_state, opts)?
    };

    let mut x = vec![0.0; n];
    for s in 0..n {
        x[s] = match fixed(s) {
            Some(v) => v,
            None => solution_unknowns[unknown_of_state[s]],
        };
    }

    // Residual check plus clamping of tiny numerical noise.
    let mut residual = 0.0f64;
    for (s, row) in system.rows.iter().enumerate() {
        if let Row::Flow(terms) = row {
            let rhs: f64 = terms.iter().map(|&(t, p)| p * x[t]).sum();
            residual = residual.max((x[s] - rhs).abs());
        }
    }
    if residual > opts.tolerance.max(1e-9) {
        return Err(Error::Solver(format!("residual {residual:e} above tolerance")));
    }
    for v in &mut x {
        if *v < 0.0 {
            if *v < -1e-6 {
                return Err(Error::Solver(format!("solution entry {v} out of range")));
            }
            *v = 0.0;
        } else if *v > 1.0 {
            if *v > 1.0 + 1e-6 {
                return Err(Error::Solver(format!("solution entry {v} out of range")));
            }
            *v = 1.0;
        }
    }
    Ok(x)
}

/// Dense LU with partial pivoting; `a` is row-major n x n, consumed in place.
fn lu_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return Err(Error::Solver("singular system after zeroing".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in row + 1..n {
            sum -= a[row * n + k] * x[k];
        }
        x[row] = sum / a[row * n + row];
    }
    Ok(x)
}

/// Gauss-Seidel sweeps on x = Px + b; after zeroing the flow matrix is
/// sub-stochastic on every cycle that matters, so the sweeps contract.
fn gauss_seidel(
    system: &LinearSystem,
    states_of_unknown: &[usize],
    unknown_of_state: &[usize],
    opts: SolverOptions,
) -> Result<Vec<f64>> {
    let m = states_of_unknown.len();
    let mut x = vec![0.0f64; m];
    for _ in 0..opts.max_sweeps {
        let mut max_update = 0.0f64;
        for (u, &s) in states_of_unknown.iter().enumerate() {
            if let Row::Flow(terms) = &system.rows[s] {
                let mut sum = 0.0;
                let mut self_coeff = 0.0;
                for &(t, p) in terms {
                    match &system.rows[t] {
                        Row::One => sum += p,
                        Row::Zero => {}
                        Row::Flow(_) => {
                            let v = unknown_of_state[t];
                            if v == u {
                                self_coeff += p;
                            } else {
                                sum += p * x[v];
                            }
                        }
                    }
                }
                // solve the row exactly for its own variable
                let denom = 1.0 - self_coeff;
                if denom <= 0.0 {
                    return Err(Error::Solver("non-contracting self-loop row".into()));
                }
                let next = sum / denom;
                max_update = max_update.max((next - x[u]).abs());
                x[u] = next;
            }
        }
        if max_update < opts.tolerance {
            return Ok(x);
        }
    }
    Err(Error::Solver("Gauss-Seidel did not converge".into()))
}

/// Per-state absorption probabilities toward `targets`.
pub fn state_values(sts: &Sts, targets: &BTreeSet<usize>) -> Result<Vec<f64>> {
    state_values_with(sts, targets, SolverOptions::default())
}

pub fn state_values_with(
    sts: &Sts,
    targets: &BTreeSet<usize>,
    opts: SolverOptions,
) -> Result<Vec<f64>> {
    let system = assemble_system(sts, targets)?;
    solve_linear(&system, opts)
}

/// Probability that the LSP evolves from its initial marking into one of the
/// `targets` (each must be a final marking).
pub fn outcome_probability(lsp: &Lsp, targets: &[Marking]) -> Result<f64> {
    outcome_probability_with(lsp, targets, DEFAULT_MAX_STATES, SolverOptions::default())
}

pub fn outcome_probability_with(
    lsp: &Lsp,
    targets: &[Marking],
    max_states: usize,
    opts: SolverOptions,
) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::Analysis("empty target set".into()));
    }
    let rg = build_reachability_graph(lsp, max_states)?;
    let mut target_states = BTreeSet::new();
    for m in targets {
        let found = rg.sts.states.iter().position(|info| match info {
            StateInfo::Marking(mm) => mm == m,
            _ => false,
        });
        match found {
            Some(s) if rg.sts.finals.contains(&s) => {
                target_states.insert(s);
            }
            Some(_) => {
                return Err(Error::Analysis(format!(
                    "{} is not a final marking",
                    lsp.format_marking(m)
                )))
            }
            None => {
                return Err(Error::Analysis(format!(
                    "{} is not reachable",
                    lsp.format_marking(m)
                )))
            }
        }
    }
    let x = state_values_with(&rg.sts, &target_states, opts)?;
    Ok(x[rg.sts.initial])
}

/// Probability of ending up in a livelock: 1 minus the outcome probability
/// over all final markings. Zero for livelock-free LSPs.
pub fn livelock_mass(lsp: &Lsp) -> Result<f64> {
    livelock_mass_with(lsp, DEFAULT_MAX_STATES, SolverOptions::default())
}

pub fn livelock_mass_with(
    lsp: &Lsp,
    max_states: usize,
    opts: SolverOptions,
) -> Result<f64> {
    let rg = build_reachability_graph(lsp, max_states)?;
    if rg.sts.finals.is_empty() {
        return Ok(1.0);
    }
    let x = state_values_with(&rg.sts, &rg.sts.finals.clone(), opts)?;
    Ok(1.0 - x[rg.sts.initial])
}
