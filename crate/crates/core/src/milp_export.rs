//! Big-M MILP formulation in LP text format, optionally strengthened with
//! two-cycle cuts.
//!
//! Every SIR disjunct is linearized as
//! `a[t][β]·p_β − δ·Σ_{b≠β} a[t][b]·p_b − M·x_tβ ≥ δ·μ − M`
//! with the smallest `M` that leaves the row slack for `x_tβ = 0`.

use std::fmt::Write as _;

use crate::cycles::{self, CycleCut};
use crate::model::Instance;
use crate::relaxation::{self, Scope};

/// `δ·μ + δ·Σ_{b≠β} a[t][b]·P_max(b)`.
pub fn big_m_value(instance: &Instance, t: usize, server: usize) -> f64 {
    let delta = instance.sir_threshold;
    let interference: f64 = (0..instance.n_transmitters())
        .filter(|&b| b != server)
        .map(|b| instance.gain(t, b) * instance.p_max_of(b))
        .sum();
    delta * instance.noise + delta * interference
}

pub fn x_name(t: usize, b: usize) -> String {
    format!("x_t{t}_b{b}")
}

pub fn p_name(b: usize) -> String {
    format!("p_b{b}")
}

/// Shortest text that parses back to `v` exactly.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

struct Expr(String);

impl Expr {
    fn new() -> Self {
        Expr(String::new())
    }

    fn term(&mut self, coef: f64, var: &str) {
        if coef == 0.0 {
            return;
        }
        let sign = if coef < 0.0 { '-' } else { '+' };
        if self.0.is_empty() {
            if coef < 0.0 {
                self.0.push_str("- ");
            }
        } else {
            self.0.push(' ');
            self.0.push(sign);
            self.0.push(' ');
        }
        if coef.abs() == 1.0 {
            self.0.push_str(var);
        } else {
            write!(self.0, "{} {var}", num(coef.abs())).unwrap();
        }
    }

    fn finish(self) -> String {
        if self.0.is_empty() {
            "0 p_b0".into()
        } else {
            self.0
        }
    }
}

/// Whether `x[t][b]` is fixed to zero: zero gain or not servable alone.
pub fn fixed_to_zero(instance: &Instance, t: usize, b: usize) -> bool {
    !instance.servable_alone(t, b)
}

/// The (BM) model, or (S-BM) with `strengthen`.
pub fn export_bm(instance: &Instance, strengthen: bool) -> String {
    let cuts = if strengthen {
        cycles::enumerate_two_cycles(&relaxation::build_graph(instance, Scope::All))
    } else {
        Vec::new()
    };
    export_with_cuts(instance, &cuts)
}

/// The big-M model with an explicit extra cut block.
pub fn export_with_cuts(instance: &Instance, cuts: &[CycleCut]) -> String {
    let nb = instance.n_transmitters();
    let nt = instance.n_receivers();
    let delta = instance.sir_threshold;
    let mut out = String::new();

    out.push_str("\\ power-assignment wireless network design, big-M formulation\n");
    out.push_str("Maximize\n");
    let mut obj = Expr::new();
    for t in 0..nt {
        for b in 0..nb {
            obj.term(instance.revenue[t], &x_name(t, b));
        }
    }
    writeln!(out, " obj: {}", obj.finish()).unwrap();

    out.push_str("Subject To\n");
    for t in 0..nt {
        for server in 0..nb {
            let m = big_m_value(instance, t, server);
            let mut row = Expr::new();
            row.term(instance.gain(t, server), &p_name(server));
            for b in (0..nb).filter(|&b| b != server) {
                row.term(-delta * instance.gain(t, b), &p_name(b));
            }
            row.term(-m, &x_name(t, server));
            writeln!(
                out,
                " sir_t{t}_b{server}: {} >= {}",
                row.finish(),
                num(delta * instance.noise - m)
            )
            .unwrap();
        }
    }
    for t in 0..nt {
        let mut row = Expr::new();
        for b in 0..nb {
            row.term(1.0, &x_name(t, b));
        }
        writeln!(out, " one_t{t}: {} <= 1", row.finish()).unwrap();
    }
    for (k, cut) in cuts.iter().enumerate() {
        let mut row = Expr::new();
        for &(t, b) in cut.pairs() {
            row.term(1.0, &x_name(t, b));
        }
        writeln!(out, " cut{k}: {} <= {}", row.finish(), cut.rhs()).unwrap();
    }

    out.push_str("Bounds\n");
    for b in 0..nb {
        writeln!(out, " 0 <= {} <= {}", p_name(b), num(instance.p_max_of(b))).unwrap();
    }
    for t in 0..nt {
        for b in 0..nb {
            if fixed_to_zero(instance, t, b) {
                writeln!(out, " {} = 0", x_name(t, b)).unwrap();
            }
        }
    }

    out.push_str("Binary\n");
    for t in 0..nt {
        let names: Vec<String> = (0..nb).map(|b| x_name(t, b)).collect();
        writeln!(out, " {}", names.join(" ")).unwrap();
    }
    out.push_str("End\n");
    out
}
