//! Plain LP-text dump readable by common external solvers.

use std::fmt::Write;

use crate::model::{LpModel, MipModel};

fn term(out: &mut String, first: bool, coef: f64, var: usize) {
    if coef < 0.0 {
        out.push_str("- ");
    } else if !first {
        out.push_str("+ ");
    }
    let _ = write!(out, "{} x{}", coef.abs(), var);
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_lp(model: &LpModel) -> String {
    write_inner(model, &[], &[])
}

pub fn write_mip(model: &MipModel) -> String {
    write_inner(&model.lp, &model.binaries, &model.integers)
}

fn write_inner(model: &LpModel, binaries: &[usize], generals: &[usize]) -> String {
    let mut out = String::new();
    out.push_str("Maximize\n obj:");
    let mut first = true;
    for (j, &c) in model.objective.iter().enumerate() {
        if c != 0.0 {
            out.push(' ');
            term(&mut out, first, c, j);
            first = false;
        }
    }
    if first {
        out.push_str(" 0 x0");
    }
    out.push_str("\nSubject To\n");
    for (i, row) in model.rows.iter().enumerate() {
        let _ = write!(out, " c{i}:");
        let mut first = true;
        for &(j, a) in &row.coeffs {
            if a != 0.0 {
                out.push(' ');
                term(&mut out, first, a, j);
                first = false;
            }
        }
        if first {
            out.push_str(" 0 x0");
        }
        let _ = writeln!(out, " {} {}", row.relation.symbol(), row.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..model.num_vars {
        let (l, u) = (model.lower[j], model.upper[j]);
        if binaries.contains(&j) || (l == 0.0 && u == f64::INFINITY) {
            continue;
        }
        if l == u {
            let _ = writeln!(out, " x{j} = {l}");
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " x{j} free");
        } else {
            let _ = writeln!(out, " {} <= x{j} <= {}", bound(l), bound(u));
        }
    }
    for (title, vars) in [("Binaries", binaries), ("Generals", generals)] {
        if vars.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in vars.chunks(10) {
            let names: Vec<String> = chunk.iter().map(|b| format!("x{b}")).collect();
            let _ = writeln!(out, " {}", names.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
