//! Line format, one item per line; `#` starts a comment.
//!
//! ```text
//! WIRE <replica> <site> <dim> [<input_dim>]
//! GATE H <w> | GATE X <w> | GATE CX <control> <target> | GATE UC <w> <c>
//! GATE U <w>,<w>,... <re>,<im> <re>,<im> ...     (row-major entries)
//! MEASURE <w> <reg>
//! CGATE <reg>=<v>[&<reg>=<v>...] <gate as after GATE>
//! ASSIGN <reg> = <expr>        (expr: reg | int | "(" expr op expr ")", op in + - ^ &)
//! OUTPUT <reg> <reg> ...
//! ```

use std::fmt::Write as _;

use super::{Circuit, Condition, Expr, Gate, Instruction, Wire};
use crate::error::{Error, Result};
use crate::tensor::{c, ComplexMatrix};

fn gate_text(g: &Gate) -> String {
    match g {
        Gate::H(w) => format!("H {w}"),
        Gate::X(w) => format!("X {w}"),
        Gate::Cx { control, target } => format!("CX {control} {target}"),
        Gate::Uc { wire, c } => format!("UC {wire} {c}"),
        Gate::Unitary { wires, matrix } => {
            let ws: Vec<String> = wires.iter().map(|w| w.to_string()).collect();
            let mut s = format!("U {}", ws.join(","));
            for z in matrix.as_slice() {
                let _ = write!(s, " {:?},{:?}", z.re, z.im);
            }
            s
        }
    }
}

pub(super) fn write_circuit(circ: &Circuit) -> String {
    let mut out = String::new();
    for w in circ.wires() {
        if w.input_dim == w.dim {
            let _ = writeln!(out, "WIRE {} {} {}", w.replica, w.site, w.dim);
        } else {
            let _ = writeln!(out, "WIRE {} {} {} {}", w.replica, w.site, w.dim, w.input_dim);
        }
    }
    for ins in circ.instructions() {
        let _ = match ins {
            Instruction::Gate(g) => writeln!(out, "GATE {}", gate_text(g)),
            Instruction::Measure { wire, reg } => writeln!(out, "MEASURE {wire} {reg}"),
            Instruction::Controlled { condition, gate } => {
                let cond: Vec<String> = condition.0.iter().map(|(r, v)| format!("{r}={v}")).collect();
                writeln!(out, "CGATE {} {}", cond.join("&"), gate_text(gate))
            }
            Instruction::Assign { reg, expr } => writeln!(out, "ASSIGN {reg} = {expr}"),
        };
    }
    let _ = writeln!(out, "OUTPUT {}", circ.outputs().join(" "));
    out
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        position: line,
        message: message.into(),
    })
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    match tok.and_then(|t| t.parse().ok()) {
        Some(v) => Ok(v),
        None => perr(line, format!("expected {what}")),
    }
}

fn parse_gate<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Gate> {
    let name = toks.next();
    let gate = match name {
        Some("H") => Gate::H(num(toks.next(), line, "wire")?),
        Some("X") => Gate::X(num(toks.next(), line, "wire")?),
        Some("CX") => Gate::Cx {
            control: num(toks.next(), line, "control wire")?,
            target: num(toks.next(), line, "target wire")?,
        },
        Some("UC") => Gate::Uc {
            wire: num(toks.next(), line, "wire")?,
            c: num(toks.next(), line, "sum value")?,
        },
        Some("U") => {
            let wires = match toks.next() {
                Some(ws) => ws
                    .split(',')
                    .map(|w| num(Some(w), line, "wire"))
                    .collect::<Result<Vec<usize>>>()?,
                None => return perr(line, "expected wire list"),
            };
            let mut entries = Vec::new();
            for tok in toks.by_ref() {
                let Some((re, im)) = tok.split_once(',') else {
                    return perr(line, format!("bad matrix entry `{tok}`"));
                };
                entries.push(c(
                    num(Some(re), line, "real part")?,
                    num(Some(im), line, "imaginary part")?,
                ));
            }
            let dim = (entries.len() as f64).sqrt().round() as usize;
            let matrix = ComplexMatrix::from_vec(dim, dim, entries).or_else(|_| perr(line, "matrix is not square"))?;
            return Ok(Gate::Unitary { wires, matrix });
        }
        other => return perr(line, format!("unknown gate {other:?}")),
    };
    if toks.next().is_some() {
        return perr(line, "trailing tokens after gate");
    }
    Ok(gate)
}

fn parse_expr(src: &str, line: usize) -> Result<Expr> {
    let spaced = src.replace('(', " ( ").replace(')', " ) ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    let mut pos = 0;
    let e = expr_at(&toks, &mut pos, line)?;
    if pos != toks.len() {
        return perr(line, "trailing tokens after expression");
    }
    Ok(e)
}

fn expr_at(toks: &[&str], pos: &mut usize, line: usize) -> Result<Expr> {
    let Some(&tok) = toks.get(*pos) else {
        return perr(line, "unexpected end of expression");
    };
    *pos += 1;
    if tok != "(" {
        if let Ok(v) = tok.parse::<i64>() {
            return Ok(Expr::Const(v));
        }
        if tok.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
            return Ok(Expr::Reg(tok.to_string()));
        }
        return perr(line, format!("bad expression token `{tok}`"));
    }
    let a = expr_at(toks, pos, line)?;
    let op = toks.get(*pos).copied();
    *pos += 1;
    let b = expr_at(toks, pos, line)?;
    if toks.get(*pos) != Some(&")") {
        return perr(line, "expected `)`");
    }
    *pos += 1;
    Ok(match op {
        Some("+") => Expr::add(a, b),
        Some("-") => Expr::sub(a, b),
        Some("^") => Expr::xor(a, b),
        Some("&") => Expr::and(a, b),
        other => return perr(line, format!("unknown operator {other:?}")),
    })
}

/// Reads the format written by [`Circuit::to_text`] and validates the result.
pub fn parse_circuit(src: &str) -> Result<Circuit> {
    let mut wires = Vec::new();
    let mut ins = Vec::new();
    let mut outputs = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut toks = text.split_whitespace();
        match toks.next() {
            Some("WIRE") => {
                let replica = num(toks.next(), line, "replica")?;
                let site = num(toks.next(), line, "site")?;
                let dim = num(toks.next(), line, "dim")?;
                let input_dim = match toks.next() {
                    Some(t) => num(Some(t), line, "input dim")?,
                    None => dim,
                };
                wires.push(Wire {
                    replica,
                    site,
                    dim,
                    input_dim,
                });
            }
            Some("GATE") => ins.push(Instruction::Gate(parse_gate(toks, line)?)),
            Some("MEASURE") => {
                let wire = num(toks.next(), line, "wire")?;
                let Some(reg) = toks.next() else {
                    return perr(line, "expected register");
                };
                ins.push(Instruction::Measure {
                    wire,
                    reg: reg.to_string(),
                });
            }
            Some("CGATE") => {
                let Some(cond) = toks.next() else {
                    return perr(line, "expected condition");
                };
                let mut terms = Vec::new();
                for term in cond.split('&') {
                    let Some((reg, v)) = term.split_once('=') else {
                        return perr(line, format!("bad condition term `{term}`"));
                    };
                    terms.push((reg.to_string(), num(Some(v), line, "condition value")?));
                }
                ins.push(Instruction::Controlled {
                    condition: Condition(terms),
                    gate: parse_gate(toks, line)?,
                });
            }
            Some("ASSIGN") => {
                let Some((lhs, rhs)) = text["ASSIGN".len()..].split_once('=') else {
                    return perr(line, "expected `reg = expr`");
                };
                ins.push(Instruction::Assign {
                    reg: lhs.trim().to_string(),
                    expr: parse_expr(rhs, line)?,
                });
            }
            Some("OUTPUT") => outputs.extend(toks.map(str::to_string)),
            Some(other) => return perr(line, format!("unknown directive `{other}`")),
            None => {}
        }
    }
    Circuit::new(wires, ins, outputs)
}
