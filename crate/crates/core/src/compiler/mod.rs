//! Gate-level circuits for the `t = 2` replica measurement.
//!
//! A [`Circuit`] is an immutable list of instructions over typed wires:
//! unitary gates, mid-circuit computational-basis measurements that write an
//! integer register, gates guarded by a conjunction of register equalities,
//! and classical assignments. [`compile_r_single_qubit`], [`compile_r_qudit`]
//! and [`compile_r_many_qubit`] produce circuits whose output registers are
//! distributed exactly like a computational-basis measurement after `R`;
//! [`verify_equivalence`] checks that claim against the dense matrix.

mod compile;
mod simulate;
mod text;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{arg, contract, Result};
use crate::tensor::ComplexMatrix;

pub use compile::{
    compile_r_many_qubit, compile_r_qudit, compile_r_single_qubit, logical_hadamard_synthesis, logical_hadamard_target,
    uc_matrix,
};
pub use simulate::{
    simulate_circuit, simulate_exact, simulate_sample, verify_equivalence, EquivalenceReport, OutcomeDistribution,
    Simulation, SimulationMode,
};
pub use text::parse_circuit;

/// One quantum wire. `input_dim` levels are populated by the caller's state;
/// the remaining `dim - input_dim` levels start empty (the widened sum wire of
/// the qudit circuit uses this).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wire {
    pub replica: usize,
    pub site: usize,
    pub dim: usize,
    pub input_dim: usize,
}

impl Wire {
    pub fn new(replica: usize, site: usize, dim: usize) -> Self {
        Wire {
            replica,
            site,
            dim,
            input_dim: dim,
        }
    }

    pub fn widened(replica: usize, site: usize, input_dim: usize, dim: usize) -> Self {
        Wire {
            replica,
            site,
            dim,
            input_dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// Hadamard on a qubit wire.
    H(usize),
    /// Cyclic increment `|j⟩ ↦ |j+1 mod dim⟩`.
    X(usize),
    /// `|a⟩|b⟩ ↦ |a⟩|b + a mod dim(target)⟩`; the ordinary CNOT on qubits.
    Cx { control: usize, target: usize },
    /// The pair-superposing unitary selected by the sum register value `c`.
    Uc { wire: usize, c: usize },
    /// Arbitrary unitary on the listed wires (first wire most significant).
    Unitary { wires: Vec<usize>, matrix: ComplexMatrix },
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Gate::H(w) | Gate::X(w) => vec![*w],
            Gate::Cx { control, target } => vec![*control, *target],
            Gate::Uc { wire, .. } => vec![*wire],
            Gate::Unitary { wires, .. } => wires.clone(),
        }
    }
}

/// Conjunction of `register == value` tests. The empty condition always holds.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Condition(pub Vec<(String, i64)>);

impl Condition {
    pub fn equals(reg: impl Into<String>, value: i64) -> Self {
        Condition(vec![(reg.into(), value)])
    }

    pub fn and(mut self, reg: impl Into<String>, value: i64) -> Self {
        self.0.push((reg.into(), value));
        self
    }

    pub fn registers(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(r, _)| r.as_str())
    }

    pub fn holds(&self, lookup: impl Fn(&str) -> Option<i64>) -> Option<bool> {
        for (reg, value) in &self.0 {
            if lookup(reg)? != *value {
                return Some(false);
            }
        }
        Some(true)
    }
}

/// Integer expression over registers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Reg(String),
    Const(i64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn reg(name: impl Into<String>) -> Self {
        Expr::Reg(name.into())
    }

    pub fn xor(a: Expr, b: Expr) -> Self {
        Expr::Xor(Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn registers(&self, out: &mut Vec<String>) {
        match self {
            Expr::Reg(r) => out.push(r.clone()),
            Expr::Const(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Xor(a, b) | Expr::And(a, b) => {
                a.registers(out);
                b.registers(out);
            }
        }
    }

    pub fn eval(&self, lookup: &impl Fn(&str) -> Option<i64>) -> Option<i64> {
        Some(match self {
            Expr::Reg(r) => lookup(r)?,
            Expr::Const(v) => *v,
            Expr::Add(a, b) => a.eval(lookup)? + b.eval(lookup)?,
            Expr::Sub(a, b) => a.eval(lookup)? - b.eval(lookup)?,
            Expr::Xor(a, b) => a.eval(lookup)? ^ b.eval(lookup)?,
            Expr::And(a, b) => a.eval(lookup)? & b.eval(lookup)?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, op, b) = match self {
            Expr::Reg(r) => return write!(f, "{r}"),
            Expr::Const(v) => return write!(f, "{v}"),
            Expr::Add(a, b) => (a, '+', b),
            Expr::Sub(a, b) => (a, '-', b),
            Expr::Xor(a, b) => (a, '^', b),
            Expr::And(a, b) => (a, '&', b),
        };
        write!(f, "({a} {op} {b})")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    Measure { wire: usize, reg: String },
    Controlled { condition: Condition, gate: Gate },
    Assign { reg: String, expr: Expr },
}

/// A validated circuit. Build one with [`Circuit::new`] or one of the
/// `compile_r_*` functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    wires: Vec<Wire>,
    instructions: Vec<Instruction>,
    outputs: Vec<String>,
}

impl Circuit {
    /// Checks wire indices and gate dimensions, that no wire is used after it
    /// is measured, that registers are written once and read only after being
    /// written, and that every output register exists.
    pub fn new(wires: Vec<Wire>, instructions: Vec<Instruction>, outputs: Vec<String>) -> Result<Self> {
        if wires.is_empty() {
            return arg("circuit needs at least one wire");
        }
        for (i, w) in wires.iter().enumerate() {
            if w.dim < 2 || w.input_dim < 1 || w.input_dim > w.dim {
                return arg(format!("wire {i}: need 1 <= input_dim <= dim and dim >= 2"));
            }
        }
        let mut measured = vec![false; wires.len()];
        let mut written: BTreeSet<String> = BTreeSet::new();
        let read = |regs: Vec<String>, written: &BTreeSet<String>, at: usize| -> Result<()> {
            for r in regs {
                if !written.contains(&r) {
                    return contract(format!("instruction {at} reads register `{r}` before it is written"));
                }
            }
            Ok(())
        };
        let write = |reg: &str, written: &mut BTreeSet<String>, at: usize| -> Result<()> {
            if reg.is_empty() || !reg.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                return arg(format!("instruction {at}: bad register name `{reg}`"));
            }
            if !written.insert(reg.to_string()) {
                return contract(format!("instruction {at} writes register `{reg}` twice"));
            }
            Ok(())
        };
        for (at, ins) in instructions.iter().enumerate() {
            match ins {
                Instruction::Gate(g) => check_gate(g, &wires, &measured, at)?,
                Instruction::Controlled { condition, gate } => {
                    read(condition.registers().map(str::to_string).collect(), &written, at)?;
                    check_gate(gate, &wires, &measured, at)?;
                }
                Instruction::Measure { wire, reg } => {
                    if *wire >= wires.len() {
                        return arg(format!("instruction {at}: wire {wire} out of range"));
                    }
                    if measured[*wire] {
                        return contract(format!("instruction {at} measures wire {wire} twice"));
                    }
                    measured[*wire] = true;
                    write(reg, &mut written, at)?;
                }
                Instruction::Assign { reg, expr } => {
                    let mut regs = Vec::new();
                    expr.registers(&mut regs);
                    read(regs, &written, at)?;
                    write(reg, &mut written, at)?;
                }
            }
        }
        for out in &outputs {
            if !written.contains(out) {
                return contract(format!("output register `{out}` is never written"));
            }
        }
        Ok(Circuit {
            wires,
            instructions,
            outputs,
        })
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn input_dim(&self) -> usize {
        self.wires.iter().map(|w| w.input_dim).product()
    }

    /// Number of replicas the wires are spread over.
    pub fn replicas(&self) -> usize {
        self.wires.iter().map(|w| w.replica + 1).max().unwrap_or(0)
    }

    /// Layered depth of the quantum gates that fire when the registers hold
    /// the given values. Unset registers make a guarded gate count as not
    /// firing.
    pub fn quantum_depth(&self, lookup: impl Fn(&str) -> Option<i64>) -> usize {
        let mut layer = vec![0usize; self.wires.len()];
        for ins in &self.instructions {
            let gate = match ins {
                Instruction::Gate(g) => g,
                Instruction::Controlled { condition, gate } if condition.holds(&lookup) == Some(true) => gate,
                _ => continue,
            };
            let ws = gate.wires();
            let next = ws.iter().map(|&w| layer[w]).max().unwrap_or(0) + 1;
            for w in ws {
                layer[w] = next;
            }
        }
        layer.into_iter().max().unwrap_or(0)
    }

    /// Serializes to the line format read by [`parse_circuit`].
    pub fn to_text(&self) -> String {
        text::write_circuit(self)
    }
}

fn check_gate(g: &Gate, wires: &[Wire], measured: &[bool], at: usize) -> Result<()> {
    let ws = g.wires();
    for (i, &w) in ws.iter().enumerate() {
        if w >= wires.len() {
            return arg(format!("instruction {at}: wire {w} out of range"));
        }
        if measured[w] {
            return contract(format!("instruction {at} acts on wire {w} after it was measured"));
        }
        if ws[..i].contains(&w) {
            return arg(format!("instruction {at}: wire {w} repeated"));
        }
    }
    match g {
        Gate::H(w) if wires[*w].dim != 2 => arg(format!("instruction {at}: H needs a qubit wire")),
        Gate::Uc { wire, c } if *c > 2 * (wires[*wire].dim - 1) => {
            arg(format!("instruction {at}: U_c index {c} exceeds 2(d-1)"))
        }
        Gate::Unitary { wires: ws, matrix } => {
            let dim: usize = ws.iter().map(|&w| wires[w].dim).product();
            if matrix.rows() != dim || matrix.cols() != dim {
                return arg(format!(
                    "instruction {at}: unitary is {}x{}, wires need {dim}",
                    matrix.rows(),
                    matrix.cols()
                ));
            }
            if !matrix.is_unitary(1e-9) {
                return contract(format!("instruction {at}: matrix is not unitary"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}
