//! Reference implementations used as oracles by the integration tests.
//!
//! Nothing here calls into the feasibility, relaxation or cycle modules:
//! the checks are brute force over the raw instance data.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wnd_core::model::{self, all_assignments, GeneratorParams, PowerLimit};
use wnd_core::{Instance, ServerAssignment};

/// Relative tolerance of the linear-feasibility oracle.
pub const ORACLE_REL_TOL: f64 = 1e-8;

/// Instance with log-uniform gains, a few inaudible pairs and a random
/// threshold; small enough for exhaustive enumeration.
pub fn random_instance(seed: u64, n_receivers: usize, n_transmitters: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fa1e);
    let fading = (0..n_receivers)
        .map(|_| {
            (0..n_transmitters)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        0.0
                    } else {
                        10f64.powf(-rng.random_range(0.0..3.0))
                    }
                })
                .collect()
        })
        .collect();
    let p_max = if rng.random_bool(0.3) {
        PowerLimit::PerTransmitter(
            (0..n_transmitters)
                .map(|_| 10f64.powf(-rng.random_range(0.0..2.0)))
                .collect(),
        )
    } else {
        PowerLimit::Uniform(1.0)
    };
    let revenue = (0..n_receivers)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { rng.random_range(1..4) as f64 })
        .collect();
    Instance {
        transmitters: (0..n_transmitters).map(|b| format!("b{b}")).collect(),
        receivers: (0..n_receivers).map(|t| format!("t{t}")).collect(),
        fading,
        sir_threshold: 10f64.powf(rng.random_range(-3.0..8.0) / 10.0),
        noise: 10f64.powf(-rng.random_range(2.0..4.0)),
        p_max,
        p_min: 1e-6,
        revenue,
    }
}

/// Path-loss instance from the library generator with a noise level that
/// leaves most receivers servable in a small square.
pub fn geometric_instance(seed: u64, n_receivers: usize, n_transmitters: usize, delta_db: f64) -> Instance {
    let params = GeneratorParams {
        sir_threshold: model::db_to_linear(delta_db),
        noise: 1e-8,
        shadowing_db: 4.0,
        ..GeneratorParams::default()
    };
    model::generate(seed, n_receivers, n_transmitters, &params).expect("valid generator parameters")
}

/// Rows `g·p ≥ h` of the activated system reduced to the active servers,
/// with power bounds.
fn activated_rows(instance: &Instance, x: &ServerAssignment, servers: &[usize]) -> Vec<(Vec<f64>, f64)> {
    let k = servers.len();
    let delta = instance.sir_threshold;
    let mut rows = Vec::new();
    for (t, beta) in x.pairs() {
        let g = servers
            .iter()
            .map(|&b| {
                if b == beta {
                    instance.fading[t][b]
                } else {
                    -delta * instance.fading[t][b]
                }
            })
            .collect();
        rows.push((g, delta * instance.noise));
    }
    for (i, &b) in servers.iter().enumerate() {
        let mut lo = vec![0.0; k];
        lo[i] = 1.0;
        rows.push((lo, 0.0));
        let mut hi = vec![0.0; k];
        hi[i] = -1.0;
        rows.push((hi, -instance.p_max.get(b)));
    }
    rows
}

fn satisfied(row: &(Vec<f64>, f64), p: &[f64], rel_tol: f64) -> bool {
    let (g, h) = row;
    let lhs: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
    let scale = g.iter().zip(p).map(|(a, b)| (a * b).abs()).sum::<f64>().max(h.abs());
    lhs - h >= -rel_tol * scale
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Vertex enumeration over the activated polytope. Returns the feasible
/// vertex of least total power (the least element when the system is
/// feasible), expanded to all transmitters with idle ones at zero.
pub fn oracle_min_powers(instance: &Instance, x: &ServerAssignment) -> Option<Vec<f64>> {
    let nb = instance.fading[0].len();
    let servers: Vec<usize> = x.pairs().map(|(_, b)| b).collect::<BTreeSet<_>>().into_iter().collect();
    let k = servers.len();
    if k == 0 {
        return Some(vec![0.0; nb]);
    }
    let rows = activated_rows(instance, x, &servers);
    let mut best: Option<Vec<f64>> = None;
    for subset in combinations(rows.len(), k) {
        let a = DMatrix::from_fn(k, k, |r, c| rows[subset[r]].0[c]);
        let rhs = DVector::from_fn(k, |r, _| rows[subset[r]].1);
        let Some(p) = a.lu().solve(&rhs) else { continue };
        let p: Vec<f64> = p.iter().copied().collect();
        if p.iter().any(|v| !v.is_finite()) {
            continue;
        }
        if !rows.iter().all(|row| satisfied(row, &p, ORACLE_REL_TOL)) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(q) => p.iter().sum::<f64>() < q.iter().sum::<f64>(),
        };
        if better {
            best = Some(p);
        }
    }
    best.map(|p| {
        let mut full = vec![0.0; nb];
        for (i, &b) in servers.iter().enumerate() {
            full[b] = p[i].max(0.0);
        }
        full
    })
}

pub fn oracle_feasible(instance: &Instance, x: &ServerAssignment) -> bool {
    oracle_min_powers(instance, x).is_some()
}

/// Maximum revenue over every assignment, with oracle feasibility.
pub fn brute_force_optimum(instance: &Instance) -> f64 {
    let nt = instance.fading.len();
    let nb = instance.fading[0].len();
    all_assignments(nt, nb)
        .filter(|x| oracle_feasible(instance, x))
        .map(|x| x.revenue(instance))
        .fold(0.0, f64::max)
}

/// Every SIR row `a_tβ p_β − δ Σ a_tb p_b ≥ δμ` holds at `p` within
/// `abs_tol`, and `0 ≤ p ≤ P_max`.
pub fn powers_satisfy(instance: &Instance, x: &ServerAssignment, p: &[f64], abs_tol: f64) -> bool {
    let delta = instance.sir_threshold;
    let rows_ok = x.pairs().all(|(t, beta)| {
        let interference: f64 = (0..p.len())
            .filter(|&b| b != beta)
            .map(|b| instance.fading[t][b] * p[b])
            .sum();
        instance.fading[t][beta] * p[beta] - delta * (instance.noise + interference) >= -abs_tol
    });
    let bounds_ok = p
        .iter()
        .enumerate()
        .all(|(b, &v)| v >= -abs_tol && v <= instance.p_max.get(b) + abs_tol);
    rows_ok && bounds_ok
}

/// Whether some simple directed cycle has negative total weight, by
/// exhaustive enumeration. Parallel arcs are kept, so the lightest counts.
pub fn has_negative_simple_cycle(node_count: usize, arcs: &[(usize, usize, i64)]) -> bool {
    let mut lightest: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for &(u, v, w) in arcs {
        let e = lightest.entry((u, v)).or_insert(w);
        *e = (*e).min(w);
    }
    let mut out: Vec<Vec<(usize, i64)>> = vec![Vec::new(); node_count];
    for (&(u, v), &w) in &lightest {
        out[u].push((v, w));
    }
    fn dfs(start: usize, v: usize, sum: i64, on_path: &mut [bool], out: &[Vec<(usize, i64)>]) -> bool {
        for &(h, w) in &out[v] {
            if h == start && sum + w < 0 {
                return true;
            }
            if h > start && !on_path[h] {
                on_path[h] = true;
                let found = dfs(start, h, sum + w, on_path, out);
                on_path[h] = false;
                if found {
                    return true;
                }
            }
        }
        false
    }
    (0..node_count).any(|s| {
        let mut on_path = vec![false; node_count];
        on_path[s] = true;
        dfs(s, s, 0, &mut on_path, &out)
    })
}

/// Independent dB weight of the pairwise interference constraint.
fn db_weight(instance: &Instance, t: usize, server: usize, other: usize) -> Option<i64> {
    let own = instance.fading[t][server];
    let oth = instance.fading[t][other];
    if own <= 0.0 || oth <= 0.0 {
        return None;
    }
    Some((10.0 * (own.log10() - oth.log10() - instance.sir_threshold.log10())).ceil() as i64)
}

/// All pairs `{(t₁,β), (t₂,b)}` with `t₁ ≠ t₂`, `β ≠ b` whose two opposite
/// interference weights sum to a negative value, by quadratic scan.
pub fn brute_force_two_cycles(instance: &Instance) -> BTreeSet<Vec<(usize, usize)>> {
    let nt = instance.fading.len();
    let nb = instance.fading[0].len();
    let mut found = BTreeSet::new();
    for t1 in 0..nt {
        for t2 in 0..nt {
            for beta in 0..nb {
                for b in 0..nb {
                    if t1 == t2 || beta == b {
                        continue;
                    }
                    let (Some(w1), Some(w2)) = (db_weight(instance, t1, beta, b), db_weight(instance, t2, b, beta))
                    else {
                        continue;
                    };
                    if w1 + w2 < 0 {
                        let mut pair = vec![(t1, beta), (t2, b)];
                        pair.sort();
                        found.insert(pair);
                    }
                }
            }
        }
    }
    found
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LpModel {
    pub objective: Vec<(String, f64)>,
    pub rows: Vec<LpRow>,
    /// `(lower, var, upper)`.
    pub bounds: Vec<(f64, String, f64)>,
    pub binaries: Vec<String>,
}

fn parse_terms(tokens: &[&str]) -> Vec<(String, f64)> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in tokens {
        match *tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            t => match t.parse::<f64>() {
                Ok(v) => coef = Some(v),
                Err(_) => {
                    terms.push((t.to_string(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            },
        }
    }
    terms
}

/// Reader for the subset of the CPLEX LP format the exporter writes.
pub fn parse_lp(text: &str) -> LpModel {
    #[derive(PartialEq)]
    enum Section {
        None,
        Objective,
        Rows,
        Bounds,
        Binary,
    }
    let mut model = LpModel::default();
    let mut section = Section::None;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('\\') {
            continue;
        }
        match trimmed {
            "Maximize" | "Minimize" => {
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Rows;
                continue;
            }
            "Bounds" => {
                section = Section::Bounds;
                continue;
            }
            "Binary" | "Binaries" => {
                section = Section::Binary;
                continue;
            }
            "End" => break,
            _ => {}
        }
        match section {
            Section::Objective => {
                let body = trimmed.split_once(':').map_or(trimmed, |(_, b)| b);
                let tokens: Vec<&str> = body.split_whitespace().collect();
                model.objective.extend(parse_terms(&tokens));
            }
            Section::Rows => {
                let (name, body) = trimmed.split_once(':').expect("named row");
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let at = tokens
                    .iter()
                    .position(|t| matches!(*t, ">=" | "<=" | "="))
                    .expect("row has a sense");
                let sense = match tokens[at] {
                    ">=" => Sense::Ge,
                    "<=" => Sense::Le,
                    _ => Sense::Eq,
                };
                let rhs: f64 = tokens[at + 1].parse().expect("numeric rhs");
                model.rows.push(LpRow {
                    name: name.trim().to_string(),
                    terms: parse_terms(&tokens[..at]),
                    sense,
                    rhs,
                });
            }
            Section::Bounds => {
                let tokens: Vec<&str> = trimmed.split_whitespace().collect();
                match tokens.as_slice() {
                    [lo, "<=", var, "<=", hi] => {
                        model.bounds.push((lo.parse().unwrap(), var.to_string(), hi.parse().unwrap()))
                    }
                    [var, "=", v] => {
                        let v: f64 = v.parse().unwrap();
                        model.bounds.push((v, var.to_string(), v));
                    }
                    other => panic!("unsupported bound line {other:?}"),
                }
            }
            Section::Binary => model.binaries.extend(trimmed.split_whitespace().map(str::to_string)),
            Section::None => panic!("text before the objective: {trimmed}"),
        }
    }
    model
}

impl LpModel {
    pub fn value(terms: &[(String, f64)], point: &BTreeMap<String, f64>) -> f64 {
        terms
            .iter()
            .map(|(v, c)| c * point.get(v).copied().unwrap_or_else(|| panic!("unknown variable {v}")))
            .sum()
    }

    /// Names of rows and bounds violated at `point` by more than `abs_tol`.
    pub fn violations(&self, point: &BTreeMap<String, f64>, abs_tol: f64) -> Vec<String> {
        let mut bad = Vec::new();
        for row in &self.rows {
            let lhs = Self::value(&row.terms, point);
            let ok = match row.sense {
                Sense::Ge => lhs >= row.rhs - abs_tol,
                Sense::Le => lhs <= row.rhs + abs_tol,
                Sense::Eq => (lhs - row.rhs).abs() <= abs_tol,
            };
            if !ok {
                bad.push(format!("{}: lhs {lhs} vs rhs {}", row.name, row.rhs));
            }
        }
        for (lo, var, hi) in &self.bounds {
            let v = point[var];
            if v < lo - abs_tol || v > hi + abs_tol {
                bad.push(format!("bound {var} = {v}"));
            }
        }
        for var in &self.binaries {
            let v = point[var];
            if v != 0.0 && v != 1.0 {
                bad.push(format!("binary {var} = {v}"));
            }
        }
        bad
    }
}

/// LP variable values for an assignment and a power vector.
pub fn lp_point(x: &ServerAssignment, p: &[f64], n_transmitters: usize) -> BTreeMap<String, f64> {
    let mut point = BTreeMap::new();
    for t in 0..x.len() {
        for b in 0..n_transmitters {
            point.insert(format!("x_t{t}_b{b}"), if x.is_active(t, b) { 1.0 } else { 0.0 });
        }
    }
    for (b, v) in p.iter().enumerate() {
        point.insert(format!("p_b{b}"), *v);
    }
    point
}
