use std::f64::consts::FRAC_1_SQRT_2;

use super::{Circuit, Condition, Expr, Gate, Instruction, Wire};
use crate::error::{arg, Result};
use crate::tensor::{c, ComplexMatrix, ONE};

/// Two-qubit circuit: parity CX, measure the second qubit, Hadamard on the
/// first if the parity is odd, measure, and recover `x₂ = x₁ ⊕ c`.
///
/// Identical to `compile_r_many_qubit(1)`.
pub fn compile_r_single_qubit() -> Circuit {
    compile_r_many_qubit(1).expect("n = 1 is always valid")
}

/// Circuit for two `d`-level replicas. The second wire is widened to `2d`
/// levels so the controlled addition stores `c = a + b` without wrapping.
pub fn compile_r_qudit(d: usize) -> Result<Circuit> {
    if d < 2 {
        return arg(format!("qudit compilation needs d >= 2 (got {d})"));
    }
    let wires = vec![Wire::new(0, 0, d), Wire::widened(1, 0, d, 2 * d)];
    let mut ins = vec![
        Instruction::Gate(Gate::Cx { control: 0, target: 1 }),
        Instruction::Measure {
            wire: 1,
            reg: "c0".into(),
        },
    ];
    for value in 0..=2 * (d - 1) {
        ins.push(Instruction::Controlled {
            condition: Condition::equals("c0", value as i64),
            gate: Gate::Uc { wire: 0, c: value },
        });
    }
    ins.push(Instruction::Measure {
        wire: 0,
        reg: "x1_0".into(),
    });
    ins.push(Instruction::Assign {
        reg: "x2_0".into(),
        expr: Expr::sub(Expr::reg("c0"), Expr::reg("x1_0")),
    });
    Circuit::new(wires, ins, vec!["x1_0".into(), "x2_0".into()])
}

/// Circuit for two `n`-qubit replicas.
///
/// Wires `0..n` hold the first replica and `n..2n` the second, site `i` on
/// wire `i` and `n + i`. After the parity layer, the qubits with odd parity
/// `i₁ < … < i_l` receive the CX ladder `CX(i_{l-1}→i_l), …, CX(i₁→i₂)` and a
/// Hadamard on `i₁`. The closing ladder is a permutation of basis states, so
/// it is applied to the measured bits as a running XOR:
/// `x₁ⁱ = mⁱ ⊕ cⁱ·(⊕_{r<i} cʳ·mʳ)`.
///
/// Every ladder rung is guarded by "both ends odd, everything between even",
/// and the Hadamard on `p` by "`p` odd, everything before even", so exactly
/// the gates for the observed parity pattern fire.
pub fn compile_r_many_qubit(n: usize) -> Result<Circuit> {
    if n == 0 {
        return arg("many-qubit compilation needs n >= 1");
    }
    let mut wires: Vec<Wire> = (0..n).map(|i| Wire::new(0, i, 2)).collect();
    wires.extend((0..n).map(|i| Wire::new(1, i, 2)));
    let par = |i: usize| format!("c{i}");
    let raw = |i: usize| if i == 0 { "x1_0".to_string() } else { format!("m{i}") };

    let mut ins = Vec::new();
    for i in 0..n {
        ins.push(Instruction::Gate(Gate::Cx {
            control: i,
            target: n + i,
        }));
    }
    for i in 0..n {
        ins.push(Instruction::Measure {
            wire: n + i,
            reg: par(i),
        });
    }
    for q in (1..n).rev() {
        for p in (0..q).rev() {
            let mut cond = Condition::equals(par(p), 1).and(par(q), 1);
            for r in p + 1..q {
                cond = cond.and(par(r), 0);
            }
            ins.push(Instruction::Controlled {
                condition: cond,
                gate: Gate::Cx { control: p, target: q },
            });
        }
    }
    for p in 0..n {
        let mut cond = Condition::equals(par(p), 1);
        for r in 0..p {
            cond = cond.and(par(r), 0);
        }
        ins.push(Instruction::Controlled {
            condition: cond,
            gate: Gate::H(p),
        });
    }
    for i in 0..n {
        ins.push(Instruction::Measure { wire: i, reg: raw(i) });
    }
    let mut prefix: Option<Expr> = None;
    for i in 0..n {
        if i > 0 {
            let carry = Expr::and(Expr::reg(par(i)), prefix.clone().expect("set for i > 0"));
            ins.push(Instruction::Assign {
                reg: format!("x1_{i}"),
                expr: Expr::xor(Expr::reg(raw(i)), carry),
            });
        }
        if i + 1 < n {
            let term = Expr::and(Expr::reg(par(i)), Expr::reg(raw(i)));
            prefix = Some(match prefix {
                None => term,
                Some(p) => Expr::xor(p, term),
            });
        }
    }
    for i in 0..n {
        ins.push(Instruction::Assign {
            reg: format!("x2_{i}"),
            expr: Expr::xor(Expr::reg(format!("x1_{i}")), Expr::reg(par(i))),
        });
    }
    let mut outputs: Vec<String> = (0..n).map(|i| format!("x1_{i}")).collect();
    outputs.extend((0..n).map(|i| format!("x2_{i}")));
    Circuit::new(wires, ins, outputs)
}

/// `U_c` on one `d`-level replica: pairs `|j⟩, |c−j⟩` with `j < c−j` are
/// mixed by a Hadamard-like rotation, everything else is left alone.
pub fn uc_matrix(d: usize, c_val: usize) -> ComplexMatrix {
    let q1 = (c_val + 1).saturating_sub(d);
    let q2 = c_val.min(d - 1);
    let mut u = ComplexMatrix::zeros(d, d);
    let h = c(FRAC_1_SQRT_2, 0.0);
    for j in 0..d {
        if j < q1 || j > q2 || 2 * j == c_val {
            u[(j, j)] = ONE;
        } else if 2 * j < c_val {
            u[(j, j)] = h;
            u[(c_val - j, j)] = h;
        } else {
            u[(c_val - j, j)] = h;
            u[(j, j)] = -h;
        }
    }
    u
}

fn ladder_permutation(l: usize) -> ComplexMatrix {
    let dim = 1usize << l;
    let mut u = ComplexMatrix::zeros(dim, dim);
    for x in 0..dim {
        let mut y = 0;
        let mut acc = 0;
        for q in 0..l {
            acc ^= (x >> (l - 1 - q)) & 1;
            y |= acc << (l - 1 - q);
        }
        u[(y, x)] = ONE;
    }
    u
}

/// Dense `Ũ·H₁·Ũ†` with `Ũ = CX_{l-1→l}⋯CX_{1→2}`, qubit 1 most significant.
pub fn logical_hadamard_synthesis(l: usize) -> Result<ComplexMatrix> {
    if l == 0 || l > 12 {
        return arg(format!("logical Hadamard needs 1 <= l <= 12 (got {l})"));
    }
    let dim = 1usize << l;
    let half = dim / 2;
    let s = c(FRAC_1_SQRT_2, 0.0);
    let h1 = ComplexMatrix::from_fn(dim, dim, |r, col| {
        if r % half != col % half {
            crate::tensor::ZERO
        } else if r >= half && col >= half {
            -s
        } else {
            s
        }
    });
    let lad = ladder_permutation(l);
    lad.matmul(&h1)?.matmul(&lad.dagger())
}

/// `(X^{⊗l} + Z₁)/√2`.
pub fn logical_hadamard_target(l: usize) -> Result<ComplexMatrix> {
    if l == 0 || l > 12 {
        return arg(format!("logical Hadamard needs 1 <= l <= 12 (got {l})"));
    }
    let dim = 1usize << l;
    let half = dim / 2;
    let s = FRAC_1_SQRT_2;
    Ok(ComplexMatrix::from_fn(dim, dim, |r, col| {
        let mut v = 0.0;
        if r == dim - 1 - col {
            v += s;
        }
        if r == col {
            v += if r < half { s } else { -s };
        }
        c(v, 0.0)
    }))
}
