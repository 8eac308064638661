//! Debug dump in a CPLEX-LP-like grammar:
//!
//! ```text
//! \ comment
//! Maximize
//!  obj: <coef> <name> + ... + <offset>
//! Subject To
//!  <row>: <coef> <name> ... (<=|>=|=) <rhs>
//! Bounds
//!  <lo> <= <name> <= <hi>
//! Binaries
//!  <name> ...
//! End
//! ```
//!
//! Names are sanitized to `[A-Za-z0-9_.]`; unnamed items get `x<i>`/`c<i>`.

use std::fmt::Write;

use super::{MilpModel, Sense, VarKind};

fn clean(name: &str, fallback: String) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        fallback
    } else {
        s
    }
}

fn push_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    for (a, name) in terms {
        if first {
            let _ = write!(out, " {a} {name}");
            first = false;
        } else if a < 0.0 {
            let _ = write!(out, " - {} {name}", -a);
        } else {
            let _ = write!(out, " + {a} {name}");
        }
    }
    if first {
        out.push_str(" 0");
    }
}

pub(super) fn write_lp(model: &MilpModel) -> String {
    let names: Vec<String> = model
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| clean(&v.name, format!("x{i}")))
        .collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} variables, {} constraints",
        model.vars.len(),
        model.constraints.len()
    );
    out.push_str("Maximize\n obj:");
    push_terms(
        &mut out,
        model
            .vars
            .iter()
            .zip(&names)
            .filter(|(v, _)| v.objective != 0.0)
            .map(|(v, n)| (v.objective, n.clone())),
    );
    if model.objective_offset != 0.0 {
        let _ = write!(out, " + {}", model.objective_offset);
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = write!(out, " {}:", clean(&c.name, format!("c{i}")));
        push_terms(&mut out, c.terms.iter().map(|&(v, a)| (a, names[v.0].clone())));
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for (v, n) in model.vars.iter().zip(&names) {
        if v.kind == VarKind::Continuous {
            let _ = writeln!(out, " {} <= {n} <= {}", v.lower, v.upper);
        }
    }
    let bins: Vec<&str> = model
        .vars
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
