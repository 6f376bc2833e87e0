use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use super::compile::uc_matrix;
use super::{Circuit, Gate, Instruction};
use crate::error::{arg, contract, Result};
use crate::replica::build_r;
use crate::rng::{purpose, RngStream};
use crate::states::DensityMatrix;
use crate::tensor::{c, check_dense_dim, sample_index, ComplexMatrix, C64, ONE, ZERO};

/// Branches lighter than this are dropped during exact simulation.
const BRANCH_FLOOR: f64 = 1e-18;

/// Exact joint distribution of a circuit's output registers.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    /// Output register values, in the circuit's output order, mapped to probability.
    pub probs: BTreeMap<Vec<i64>, f64>,
    /// Number of measurement branches that survived to the end.
    pub branches: usize,
    /// Largest quantum depth over all surviving branches.
    pub max_depth: usize,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum SimulationMode<'a> {
    Exact,
    Sample(&'a RngStream),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Simulation {
    Exact(OutcomeDistribution),
    Sample(Vec<i64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceReport {
    /// Largest total-variation distance over the trials.
    pub tv: f64,
    /// Largest single-outcome probability deviation over the trials.
    pub max_dev: f64,
    pub trials: usize,
    /// Largest quantum depth seen in any branch.
    pub max_depth: usize,
}

struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl Layout {
    fn new(dims: Vec<usize>) -> Result<Self> {
        let mut strides = vec![1; dims.len()];
        for w in (0..dims.len().saturating_sub(1)).rev() {
            strides[w] = strides[w + 1] * dims[w + 1];
        }
        let dim = dims.iter().product();
        check_dense_dim("circuit state", dim)?;
        Ok(Layout { dims, strides, dim })
    }

    fn digit(&self, index: usize, wire: usize) -> usize {
        (index / self.strides[wire]) % self.dims[wire]
    }

    fn offsets(&self, wires: &[usize]) -> Vec<usize> {
        let mut offs = vec![0usize];
        for &w in wires {
            offs = offs
                .iter()
                .flat_map(|&o| (0..self.dims[w]).map(move |v| o + v * self.strides[w]))
                .collect();
        }
        offs
    }

    fn bases(&self, wires: &[usize]) -> Vec<usize> {
        (0..self.dim)
            .filter(|&i| wires.iter().all(|&w| self.digit(i, w) == 0))
            .collect()
    }
}

fn gate_matrix(gate: &Gate, dims: &[usize]) -> ComplexMatrix {
    match gate {
        Gate::H(_) => {
            let s = c(FRAC_1_SQRT_2, 0.0);
            ComplexMatrix::from_fn(2, 2, |r, col| if r == 1 && col == 1 { -s } else { s })
        }
        Gate::X(w) => {
            let d = dims[*w];
            ComplexMatrix::from_fn(d, d, |r, col| if r == (col + 1) % d { ONE } else { ZERO })
        }
        Gate::Cx { control, target } => {
            let (dc, dt) = (dims[*control], dims[*target]);
            let mut m = ComplexMatrix::zeros(dc * dt, dc * dt);
            for a in 0..dc {
                for b in 0..dt {
                    m[(a * dt + (b + a) % dt, a * dt + b)] = ONE;
                }
            }
            m
        }
        Gate::Uc { wire, c: cv } => uc_matrix(dims[*wire], *cv),
        Gate::Unitary { matrix, .. } => matrix.clone(),
    }
}

fn apply_block(data: &mut [C64], idx: &[usize], m: &ComplexMatrix, conj: bool, buf: &mut Vec<C64>) {
    buf.clear();
    buf.extend(idx.iter().map(|&i| data[i]));
    for (r, &i) in idx.iter().enumerate() {
        let row = m.row(r);
        let mut acc = ZERO;
        for (k, v) in buf.iter().enumerate() {
            acc += if conj { row[k].conj() } else { row[k] } * v;
        }
        data[i] = acc;
    }
}

/// `ρ ↦ UρU†` with `U` acting on `wires`.
fn conjugate(rho: &mut [C64], layout: &Layout, gate: &Gate) {
    let wires = gate.wires();
    let m = gate_matrix(gate, &layout.dims);
    let offs = layout.offsets(&wires);
    let bases = layout.bases(&wires);
    let d = layout.dim;
    let mut idx = vec![0usize; offs.len()];
    let mut buf = Vec::with_capacity(offs.len());
    for col in 0..d {
        for &b in &bases {
            for (j, &o) in offs.iter().enumerate() {
                idx[j] = (b + o) * d + col;
            }
            apply_block(rho, &idx, &m, false, &mut buf);
        }
    }
    for row in 0..d {
        for &b in &bases {
            for (j, &o) in offs.iter().enumerate() {
                idx[j] = row * d + b + o;
            }
            apply_block(rho, &idx, &m, true, &mut buf);
        }
    }
}

#[derive(Clone)]
struct Branch {
    rho: Vec<C64>,
    weight: f64,
    regs: BTreeMap<String, i64>,
    layer: Vec<usize>,
}

impl Branch {
    fn lookup(&self) -> impl Fn(&str) -> Option<i64> + '_ {
        |r| self.regs.get(r).copied()
    }

    fn fire(&mut self, layout: &Layout, gate: &Gate) {
        conjugate(&mut self.rho, layout, gate);
        let ws = gate.wires();
        let next = ws.iter().map(|&w| self.layer[w]).max().unwrap_or(0) + 1;
        for w in ws {
            self.layer[w] = next;
        }
    }

    fn outcome_weights(&self, layout: &Layout, wire: usize) -> Vec<f64> {
        let mut p = vec![0.0; layout.dims[wire]];
        for i in 0..layout.dim {
            p[layout.digit(i, wire)] += self.rho[i * layout.dim + i].re;
        }
        p
    }

    fn project(&mut self, layout: &Layout, wire: usize, value: usize, weight: f64, renormalize: bool) {
        let d = layout.dim;
        let scale = if renormalize { 1.0 / weight } else { 1.0 };
        for r in 0..d {
            let keep_r = layout.digit(r, wire) == value;
            for col in 0..d {
                let e = &mut self.rho[r * d + col];
                if keep_r && layout.digit(col, wire) == value {
                    *e *= scale;
                } else {
                    *e = ZERO;
                }
            }
        }
        self.weight = if renormalize { 1.0 } else { weight };
    }
}

fn initial_branch(circuit: &Circuit, input: &DensityMatrix) -> Result<(Layout, Branch)> {
    if input.dim() != circuit.input_dim() {
        return arg(format!(
            "input has dimension {}, circuit expects {}",
            input.dim(),
            circuit.input_dim()
        ));
    }
    let layout = Layout::new(circuit.wires().iter().map(|w| w.dim).collect())?;
    let in_layout = Layout::new(circuit.wires().iter().map(|w| w.input_dim).collect())?;
    let embed = |i: usize| -> usize {
        (0..layout.dims.len())
            .map(|w| in_layout.digit(i, w) * layout.strides[w])
            .sum()
    };
    let map: Vec<usize> = (0..in_layout.dim).map(embed).collect();
    let mut rho = vec![ZERO; layout.dim * layout.dim];
    let m = input.matrix();
    for (r, &er) in map.iter().enumerate() {
        for (col, &ec) in map.iter().enumerate() {
            rho[er * layout.dim + ec] = m[(r, col)];
        }
    }
    let branch = Branch {
        rho,
        weight: 1.0,
        regs: BTreeMap::new(),
        layer: vec![0; layout.dims.len()],
    };
    Ok((layout, branch))
}

fn finish(circuit: &Circuit, branch: &Branch) -> Result<Vec<i64>> {
    circuit
        .outputs()
        .iter()
        .map(|o| {
            branch
                .regs
                .get(o)
                .copied()
                .ok_or_else(|| crate::Error::Contract(format!("output `{o}` unset")))
        })
        .collect()
}

fn run_classical(ins: &Instruction, branch: &mut Branch) -> Result<bool> {
    match ins {
        Instruction::Assign { reg, expr } => {
            let v = expr.eval(&branch.lookup());
            match v {
                Some(v) => {
                    branch.regs.insert(reg.clone(), v);
                    Ok(true)
                }
                None => contract(format!("assignment to `{reg}` reads an unset register")),
            }
        }
        _ => Ok(false),
    }
}

fn controlled_fires(condition: &super::Condition, branch: &Branch) -> Result<bool> {
    condition
        .holds(branch.lookup())
        .ok_or_else(|| crate::Error::Contract("condition reads an unset register".into()))
}

/// Enumerates every measurement branch and returns the exact output distribution.
pub fn simulate_exact(circuit: &Circuit, input: &DensityMatrix) -> Result<OutcomeDistribution> {
    let (layout, start) = initial_branch(circuit, input)?;
    let mut branches = vec![start];
    for ins in circuit.instructions() {
        match ins {
            Instruction::Gate(g) => branches.iter_mut().for_each(|b| b.fire(&layout, g)),
            Instruction::Controlled { condition, gate } => {
                for b in branches.iter_mut() {
                    if controlled_fires(condition, b)? {
                        b.fire(&layout, gate);
                    }
                }
            }
            Instruction::Measure { wire, reg } => {
                let mut next = Vec::with_capacity(branches.len());
                for b in branches {
                    let weights = b.outcome_weights(&layout, *wire);
                    for (v, &w) in weights.iter().enumerate() {
                        if w <= BRANCH_FLOOR {
                            continue;
                        }
                        let mut child = b.clone();
                        child.project(&layout, *wire, v, w, false);
                        child.regs.insert(reg.clone(), v as i64);
                        next.push(child);
                    }
                }
                branches = next;
            }
            Instruction::Assign { .. } => {
                for b in branches.iter_mut() {
                    run_classical(ins, b)?;
                }
            }
        }
    }
    let mut probs = BTreeMap::new();
    let mut max_depth = 0;
    for b in &branches {
        *probs.entry(finish(circuit, b)?).or_insert(0.0) += b.weight;
        max_depth = max_depth.max(b.layer.iter().copied().max().unwrap_or(0));
    }
    Ok(OutcomeDistribution {
        probs,
        branches: branches.len(),
        max_depth,
    })
}

/// Runs one trajectory, sampling each mid-circuit measurement.
pub fn simulate_sample<R: Rng + ?Sized>(circuit: &Circuit, input: &DensityMatrix, rng: &mut R) -> Result<Vec<i64>> {
    let (layout, mut branch) = initial_branch(circuit, input)?;
    for ins in circuit.instructions() {
        match ins {
            Instruction::Gate(g) => branch.fire(&layout, g),
            Instruction::Controlled { condition, gate } => {
                if controlled_fires(condition, &branch)? {
                    branch.fire(&layout, gate);
                }
            }
            Instruction::Measure { wire, reg } => {
                let weights: Vec<f64> = branch
                    .outcome_weights(&layout, *wire)
                    .into_iter()
                    .map(|w| w.max(0.0))
                    .collect();
                let total: f64 = weights.iter().sum();
                let v = sample_index(&weights, total, rng);
                branch.project(&layout, *wire, v, weights[v], true);
                branch.regs.insert(reg.clone(), v as i64);
            }
            Instruction::Assign { .. } => {
                run_classical(ins, &mut branch)?;
            }
        }
    }
    finish(circuit, &branch)
}

pub fn simulate_circuit(circuit: &Circuit, input: &DensityMatrix, mode: SimulationMode<'_>) -> Result<Simulation> {
    match mode {
        SimulationMode::Exact => simulate_exact(circuit, input).map(Simulation::Exact),
        SimulationMode::Sample(stream) => simulate_sample(circuit, input, &mut stream.rng()).map(Simulation::Sample),
    }
}

/// Compares the circuit's exact output distribution with the computational
/// measurement of `RρR†` on `trials` random full-rank two-replica inputs.
///
/// The circuit must place replica 0 wires before replica 1 wires, both
/// replicas with the same input dimension, and list one output per wire in
/// wire order.
pub fn verify_equivalence(circuit: &Circuit, trials: usize, stream: &RngStream) -> Result<EquivalenceReport> {
    let wires = circuit.wires();
    if circuit.replicas() != 2 {
        return arg("equivalence check covers two replicas only");
    }
    if wires.windows(2).any(|p| p[0].replica > p[1].replica) {
        return arg("wires must be grouped by replica");
    }
    if circuit.outputs().len() != wires.len() {
        return arg("need one output register per wire");
    }
    let d0: usize = wires.iter().filter(|w| w.replica == 0).map(|w| w.input_dim).product();
    let d1: usize = wires.iter().filter(|w| w.replica == 1).map(|w| w.input_dim).product();
    if d0 != d1 {
        return arg(format!("replicas have input dimensions {d0} and {d1}"));
    }
    let r = build_r(d0, 2)?;
    let in_dims: Vec<usize> = wires.iter().map(|w| w.input_dim).collect();
    let mut report = EquivalenceReport {
        tv: 0.0,
        max_dev: 0.0,
        trials,
        max_depth: 0,
    };
    for trial in 0..trials {
        let mut rng = stream.child(purpose::REPETITION, trial as u64).rng();
        let rho = DensityMatrix::random_mixed(d0 * d1, &mut rng)?;
        let expected = rho.matrix().conjugate_by(&r)?.real_diagonal();
        let dist = simulate_exact(circuit, &rho)?;
        let mut got = vec![0.0; expected.len()];
        let mut stray = 0.0;
        for (vals, &p) in &dist.probs {
            let mut idx = 0usize;
            let mut ok = true;
            for (&v, &dim) in vals.iter().zip(&in_dims) {
                if v < 0 || v as usize >= dim {
                    ok = false;
                }
                idx = idx * dim + v.max(0) as usize;
            }
            if ok {
                got[idx] += p;
            } else {
                stray += p;
            }
        }
        let mut tv = stray;
        let mut dev: f64 = stray;
        for (g, e) in got.iter().zip(&expected) {
            tv += (g - e).abs();
            dev = dev.max((g - e).abs());
        }
        report.tv = report.tv.max(tv / 2.0);
        report.max_dev = report.max_dev.max(dev);
        report.max_depth = report.max_depth.max(dist.max_depth);
    }
    Ok(report)
}
