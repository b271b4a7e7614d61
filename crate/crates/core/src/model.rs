//! Domain types, validation, synthetic instance generation and the JSON
//! instance/assignment formats.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Upper power bound, either shared by every transmitter or given per
/// transmitter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerLimit {
    Uniform(f64),
    PerTransmitter(Vec<f64>),
}

impl PowerLimit {
    pub fn get(&self, b: usize) -> f64 {
        match self {
            PowerLimit::Uniform(p) => *p,
            PowerLimit::PerTransmitter(ps) => ps[b],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            PowerLimit::Uniform(p) => *p,
            PowerLimit::PerTransmitter(ps) => ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// A power-assignment wireless network design instance.
///
/// All quantities are linear scale. `fading[t][b]` is the gain from
/// transmitter `b` to receiver `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub transmitters: Vec<String>,
    pub receivers: Vec<String>,
    pub fading: Vec<Vec<f64>>,
    pub sir_threshold: f64,
    pub noise: f64,
    pub p_max: PowerLimit,
    pub p_min: f64,
    pub revenue: Vec<f64>,
}

impl Instance {
    pub fn n_transmitters(&self) -> usize {
        self.transmitters.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    #[inline]
    pub fn gain(&self, t: usize, b: usize) -> f64 {
        self.fading[t][b]
    }

    #[inline]
    pub fn p_max_of(&self, b: usize) -> f64 {
        self.p_max.get(b)
    }

    /// Whether `b` can serve `t` on its own, every other transmitter silent.
    pub fn servable_alone(&self, t: usize, b: usize) -> bool {
        let a = self.gain(t, b);
        a > 0.0 && a * self.p_max_of(b) >= self.sir_threshold * self.noise
    }

    /// Transmitters able to serve `t` alone, in index order.
    pub fn candidate_servers(&self, t: usize) -> Vec<usize> {
        (0..self.n_transmitters())
            .filter(|&b| self.servable_alone(t, b))
            .collect()
    }

    pub fn total_revenue(&self) -> f64 {
        self.revenue.iter().sum()
    }

    pub fn transmitter_index(&self, name: &str) -> Option<usize> {
        self.transmitters.iter().position(|n| n == name)
    }

    pub fn receiver_index(&self, name: &str) -> Option<usize> {
        self.receivers.iter().position(|n| n == name)
    }
}

/// A single broken invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

fn violation(field: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        message: message.into(),
    }
}

/// Lists every invariant the instance breaks. Empty means valid.
pub fn validate(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let nb = instance.transmitters.len();
    let nt = instance.receivers.len();
    if nb == 0 {
        out.push(violation("transmitters", "must not be empty"));
    }
    if nt == 0 {
        out.push(violation("receivers", "must not be empty"));
    }
    if instance.fading.len() != nt {
        out.push(violation(
            "fading",
            format!("has {} rows, expected {}", instance.fading.len(), nt),
        ));
    }
    for (t, row) in instance.fading.iter().enumerate() {
        if row.len() != nb {
            out.push(violation(
                format!("fading[{t}]"),
                format!("has {} columns, expected {}", row.len(), nb),
            ));
        }
        for (b, &a) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                out.push(violation(format!("fading[{t}][{b}]"), "out of [0,1]"));
            }
        }
    }
    if !(instance.sir_threshold > 0.0 && instance.sir_threshold.is_finite()) {
        out.push(violation("sir_threshold", "must be > 0"));
    }
    if !(instance.noise > 0.0 && instance.noise.is_finite()) {
        out.push(violation("noise", "must be > 0"));
    }
    let limits: Vec<(String, f64)> = match &instance.p_max {
        PowerLimit::Uniform(p) => vec![("p_max".to_string(), *p)],
        PowerLimit::PerTransmitter(ps) => {
            if ps.len() != nb {
                out.push(violation(
                    "p_max",
                    format!("has {} entries, expected {}", ps.len(), nb),
                ));
            }
            ps.iter()
                .enumerate()
                .map(|(b, &p)| (format!("p_max[{b}]"), p))
                .collect()
        }
    };
    if !(instance.p_min > 0.0 && instance.p_min.is_finite()) {
        out.push(violation("p_min", "must be > 0"));
    }
    for (field, p) in limits {
        if !(p > 0.0 && p.is_finite()) {
            out.push(violation(field, "must be > 0"));
        } else if instance.p_min >= p {
            out.push(violation(field, "must exceed p_min"));
        }
    }
    if instance.revenue.len() != nt {
        out.push(violation(
            "revenue",
            format!("has {} entries, expected {}", instance.revenue.len(), nt),
        ));
    }
    for (t, &r) in instance.revenue.iter().enumerate() {
        if !(r > 0.0 && r.is_finite()) {
            out.push(violation(format!("revenue[{t}]"), "must be > 0"));
        }
    }
    out
}

/// Receiver → server map; `None` leaves the receiver unserved.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ServerAssignment {
    served: Vec<Option<usize>>,
}

impl ServerAssignment {
    pub fn unserved(n_receivers: usize) -> Self {
        ServerAssignment {
            served: vec![None; n_receivers],
        }
    }

    pub fn from_servers(served: Vec<Option<usize>>) -> Self {
        ServerAssignment { served }
    }

    pub fn len(&self) -> usize {
        self.served.len()
    }

    pub fn is_empty(&self) -> bool {
        self.served.is_empty()
    }

    pub fn server(&self, t: usize) -> Option<usize> {
        self.served[t]
    }

    pub fn set(&mut self, t: usize, server: Option<usize>) {
        self.served[t] = server;
    }

    pub fn is_active(&self, t: usize, b: usize) -> bool {
        self.served.get(t).copied().flatten() == Some(b)
    }

    pub fn servers(&self) -> &[Option<usize>] {
        &self.served
    }

    /// Activated `(receiver, transmitter)` pairs in receiver order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.served
            .iter()
            .enumerate()
            .filter_map(|(t, s)| s.map(|b| (t, b)))
    }

    pub fn served_count(&self) -> usize {
        self.served.iter().filter(|s| s.is_some()).count()
    }

    pub fn revenue(&self, instance: &Instance) -> f64 {
        self.pairs().map(|(t, _)| instance.revenue[t]).sum()
    }

    /// Dense 0/1 view `x[t][b]`.
    pub fn to_incidence(&self, n_transmitters: usize) -> Vec<Vec<u8>> {
        self.served
            .iter()
            .map(|s| {
                let mut row = vec![0u8; n_transmitters];
                if let Some(b) = s {
                    row[*b] = 1;
                }
                row
            })
            .collect()
    }

    pub fn check_against(&self, instance: &Instance) -> Result<(), ModelError> {
        if self.served.len() != instance.n_receivers() {
            return Err(ModelError::Dimension(format!(
                "assignment covers {} receivers, instance has {}",
                self.served.len(),
                instance.n_receivers()
            )));
        }
        for (t, b) in self.pairs() {
            if b >= instance.n_transmitters() {
                return Err(ModelError::Dimension(format!(
                    "receiver {t} assigned to transmitter index {b} out of range"
                )));
            }
        }
        Ok(())
    }
}

/// Every assignment of an instance, `(|B|+1)^|T|` of them, in lexicographic
/// order with "unserved" first.
pub fn all_assignments(n_receivers: usize, n_transmitters: usize) -> AllAssignments {
    AllAssignments {
        digits: vec![0; n_receivers],
        base: n_transmitters + 1,
        done: false,
    }
}

pub struct AllAssignments {
    digits: Vec<usize>,
    base: usize,
    done: bool,
}

impl Iterator for AllAssignments {
    type Item = ServerAssignment;

    fn next(&mut self) -> Option<ServerAssignment> {
        if self.done {
            return None;
        }
        let current = ServerAssignment::from_servers(
            self.digits
                .iter()
                .map(|&d| if d == 0 { None } else { Some(d - 1) })
                .collect(),
        );
        let mut i = 0;
        loop {
            if i == self.digits.len() {
                self.done = true;
                break;
            }
            self.digits[i] += 1;
            if self.digits[i] < self.base {
                break;
            }
            self.digits[i] = 0;
            i += 1;
        }
        Some(current)
    }
}

/// Per-transmitter linear emission powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerVector(pub Vec<f64>);

impl PowerVector {
    pub fn zeros(n: usize) -> Self {
        PowerVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Left-hand side margin of the SIR inequality `(t, server)`:
    /// `a[t][server]·p[server] − δ·(μ + Σ_{b≠server} a[t][b]·p[b])`.
    pub fn sir_margin(&self, instance: &Instance, t: usize, server: usize) -> f64 {
        let interference: f64 = (0..instance.n_transmitters())
            .filter(|&b| b != server)
            .map(|b| instance.gain(t, b) * self.0[b])
            .sum();
        instance.gain(t, server) * self.0[server]
            - instance.sir_threshold * (instance.noise + interference)
    }

    /// Signal-to-interference ratio at `t` when served by `server`.
    pub fn sir(&self, instance: &Instance, t: usize, server: usize) -> f64 {
        let interference: f64 = (0..instance.n_transmitters())
            .filter(|&b| b != server)
            .map(|b| instance.gain(t, b) * self.0[b])
            .sum();
        instance.gain(t, server) * self.0[server] / (instance.noise + interference)
    }
}

/// Knobs for [`generate`].
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    /// Path-loss exponent γ.
    pub gamma: f64,
    /// Reference distance d0; receivers closer than this get gain 1.
    pub d0: f64,
    /// Log-normal shadowing standard deviation in dB, 0 disables it.
    pub shadowing_db: f64,
    pub sir_threshold: f64,
    pub noise: f64,
    pub p_max: f64,
    /// Defaults to `1e-6 · p_max` when absent.
    pub p_min: Option<f64>,
    /// Per-receiver revenue; unit revenue counts covered receivers.
    pub revenue: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            gamma: 3.5,
            d0: 0.01,
            shadowing_db: 0.0,
            sir_threshold: db_to_linear(8.0),
            noise: 1e-5,
            p_max: 1.0,
            p_min: None,
            revenue: 1.0,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Seeded synthetic instance: transmitters and receivers uniform in the
/// unit square, gain `min(1, (d0/dist)^γ)` times optional shadowing.
pub fn generate(
    seed: u64,
    n_receivers: usize,
    n_transmitters: usize,
    params: &GeneratorParams,
) -> Result<Instance, ModelError> {
    if n_receivers == 0 || n_transmitters == 0 {
        return Err(ModelError::InvalidParams(
            "need at least one receiver and one transmitter".into(),
        ));
    }
    if !(params.gamma > 0.0) {
        return Err(ModelError::InvalidParams("gamma must be > 0".into()));
    }
    if !(params.d0 > 0.0) {
        return Err(ModelError::InvalidParams("d0 must be > 0".into()));
    }
    if !(params.shadowing_db >= 0.0) {
        return Err(ModelError::InvalidParams("shadowing_db must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| (rng.random::<f64>(), rng.random::<f64>());
    let sites: Vec<(f64, f64)> = (0..n_transmitters).map(|_| point(&mut rng)).collect();
    let points: Vec<(f64, f64)> = (0..n_receivers).map(|_| point(&mut rng)).collect();
    let shadow = if params.shadowing_db > 0.0 {
        Some(Normal::new(0.0, params.shadowing_db).expect("finite std"))
    } else {
        None
    };
    let fading = points
        .iter()
        .map(|&(x, y)| {
            sites
                .iter()
                .map(|&(bx, by)| {
                    let dist = ((x - bx).powi(2) + (y - by).powi(2)).sqrt();
                    let mut a = if dist <= params.d0 {
                        1.0
                    } else {
                        (params.d0 / dist).powf(params.gamma)
                    };
                    if let Some(normal) = &shadow {
                        a *= db_to_linear(normal.sample(&mut rng));
                    }
                    a.min(1.0)
                })
                .collect()
        })
        .collect();
    let instance = Instance {
        transmitters: (0..n_transmitters).map(|b| format!("b{b}")).collect(),
        receivers: (0..n_receivers).map(|t| format!("t{t}")).collect(),
        fading,
        sir_threshold: params.sir_threshold,
        noise: params.noise,
        p_max: PowerLimit::Uniform(params.p_max),
        p_min: params.p_min.unwrap_or(1e-6 * params.p_max),
        revenue: vec![params.revenue; n_receivers],
    };
    let violations = validate(&instance);
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }
    Ok(instance)
}

/// Parses and validates a JSON instance document.
pub fn read_instance(text: &str) -> Result<Instance, ModelError> {
    let instance: Instance = serde_json::from_str(text)?;
    let nt = instance.receivers.len();
    let nb = instance.transmitters.len();
    if instance.fading.len() != nt {
        return Err(ModelError::Dimension(format!(
            "fading has {} rows, expected |T| = {nt}",
            instance.fading.len()
        )));
    }
    if let Some((t, row)) = instance.fading.iter().enumerate().find(|(_, r)| r.len() != nb) {
        return Err(ModelError::Dimension(format!(
            "fading[{t}] has {} columns, expected |B| = {nb}",
            row.len()
        )));
    }
    if instance.revenue.len() != nt {
        return Err(ModelError::Dimension(format!(
            "revenue has {} entries, expected |T| = {nt}",
            instance.revenue.len()
        )));
    }
    let violations = validate(&instance);
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }
    Ok(instance)
}

pub fn write_instance(instance: &Instance) -> String {
    serde_json::to_string_pretty(instance).expect("instance serializes")
}

/// Parses a JSON map receiver-name → transmitter-name.
pub fn read_assignment(text: &str, instance: &Instance) -> Result<ServerAssignment, ModelError> {
    let map: BTreeMap<String, String> = serde_json::from_str(text)?;
    let mut x = ServerAssignment::unserved(instance.n_receivers());
    for (receiver, transmitter) in map {
        let t = instance
            .receiver_index(&receiver)
            .ok_or_else(|| ModelError::UnknownName(format!("receiver {receiver:?}")))?;
        let b = instance
            .transmitter_index(&transmitter)
            .ok_or_else(|| ModelError::UnknownName(format!("transmitter {transmitter:?}")))?;
        x.set(t, Some(b));
    }
    Ok(x)
}

pub fn assignment_to_map(x: &ServerAssignment, instance: &Instance) -> BTreeMap<String, String> {
    x.pairs()
        .map(|(t, b)| (instance.receivers[t].clone(), instance.transmitters[b].clone()))
        .collect()
}

pub fn write_assignment(x: &ServerAssignment, instance: &Instance) -> String {
    serde_json::to_string_pretty(&assignment_to_map(x, instance)).expect("map serializes")
}
