//! Reversible comparators on two n-bit operands.
//!
//! Default layout (see [`ComparatorLayout`]): operand A on qubits `0..n`,
//! operand B on `n..2n`, outcome on `2n`. Bit 0 of each operand is least
//! significant. Every comparator XORs its predicate into the outcome qubit
//! and leaves both operands as it found them.

use crate::error::{Error, Result};
use crate::qsim::Circuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Greater,
    Less,
    Equal,
}

impl Comparison {
    pub fn holds(self, a: u64, b: u64) -> bool {
        match self {
            Comparison::Greater => a > b,
            Comparison::Less => a < b,
            Comparison::Equal => a == b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComparatorLayout {
    pub n: usize,
}

impl ComparatorLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("comparator operands need at least one bit"));
        }
        Ok(ComparatorLayout { n })
    }

    pub fn a(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    pub fn b(&self) -> Vec<usize> {
        (self.n..2 * self.n).collect()
    }

    pub fn outcome(&self) -> usize {
        2 * self.n
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.n + 1
    }

    /// Basis index of |a⟩|b⟩|c⟩.
    pub fn encode(&self, a: u64, b: u64, c: bool) -> usize {
        (a as usize) | ((b as usize) << self.n) | ((c as usize) << (2 * self.n))
    }
}

fn check_operands(a: &[usize], b: &[usize], out: usize) -> Result<()> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::arg(format!(
            "operand registers must be non-empty and equal length (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
    all.push(out);
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::arg("comparator registers overlap"));
    }
    Ok(())
}

/// Greater-than on arbitrary registers of a `num_qubits` circuit:
/// `out ^= [a > b]`.
///
/// B is overwritten by `a XOR b`; level `i` (from the most significant bit
/// down) fires an MCX when `a_i = 1`, `b_i = 0` and all higher bits are
/// equal, which is the case for at most one level. Each diff bit is negated
/// after its level so the higher levels can control on equality. The last
/// two layers undo the negations and the XOR. Gate budget: 2n CX, n MCX,
/// 2n X.
pub fn gt_on(num_qubits: usize, a: &[usize], b: &[usize], out: usize) -> Result<Circuit> {
    check_operands(a, b, out)?;
    let n = a.len();
    let mut c = Circuit::new(num_qubits);
    for i in 0..n {
        c.cx(a[i], b[i])?;
    }
    for i in (0..n).rev() {
        let mut controls = vec![a[i], b[i]];
        controls.extend(&b[i + 1..]);
        c.mcx(&controls, out)?;
        c.x(b[i])?;
    }
    for &q in b {
        c.x(q)?;
    }
    for i in 0..n {
        c.cx(a[i], b[i])?;
    }
    Ok(c)
}

/// `out ^= [a < b]`, i.e. greater-than with the operands exchanged.
pub fn lt_on(num_qubits: usize, a: &[usize], b: &[usize], out: usize) -> Result<Circuit> {
    gt_on(num_qubits, b, a, out)
}

/// `out ^= [a == b]`: XOR A into B, negate B, one MCX over B, undo.
pub fn eq_on(num_qubits: usize, a: &[usize], b: &[usize], out: usize) -> Result<Circuit> {
    check_operands(a, b, out)?;
    let mut c = Circuit::new(num_qubits);
    for (&qa, &qb) in a.iter().zip(b) {
        c.cx(qa, qb)?;
    }
    for &q in b {
        c.x(q)?;
    }
    c.mcx(b, out)?;
    for &q in b {
        c.x(q)?;
    }
    for (&qa, &qb) in a.iter().zip(b) {
        c.cx(qa, qb)?;
    }
    Ok(c)
}

pub fn compare_on(
    cmp: Comparison,
    num_qubits: usize,
    a: &[usize],
    b: &[usize],
    out: usize,
) -> Result<Circuit> {
    match cmp {
        Comparison::Greater => gt_on(num_qubits, a, b, out),
        Comparison::Less => lt_on(num_qubits, a, b, out),
        Comparison::Equal => eq_on(num_qubits, a, b, out),
    }
}

fn on_default_layout(
    n: usize,
    f: fn(usize, &[usize], &[usize], usize) -> Result<Circuit>,
) -> Result<Circuit> {
    let l = ComparatorLayout::new(n)?;
    f(l.num_qubits(), &l.a(), &l.b(), l.outcome())
}

pub fn gt_circuit(n: usize) -> Result<Circuit> {
    on_default_layout(n, gt_on)
}

pub fn lt_circuit(n: usize) -> Result<Circuit> {
    on_default_layout(n, lt_on)
}

pub fn eq_circuit(n: usize) -> Result<Circuit> {
    on_default_layout(n, eq_on)
}

fn check_combiner(num_qubits: usize, inputs: &[usize], target: usize) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::arg("combiner needs at least one input"));
    }
    if inputs.contains(&target) {
        return Err(Error::arg(format!(
            "target qubit {target} is also an input"
        )));
    }
    if target >= num_qubits || inputs.iter().any(|&q| q >= num_qubits) {
        return Err(Error::arg("combiner qubit out of range"));
    }
    Ok(())
}

/// `target ^= AND(inputs)`, a single MCX.
pub fn and_combiner(num_qubits: usize, inputs: &[usize], target: usize) -> Result<Circuit> {
    check_combiner(num_qubits, inputs, target)?;
    let mut c = Circuit::new(num_qubits);
    c.mcx(inputs, target)?;
    Ok(c)
}

/// `target ^= OR(inputs)` via De Morgan: OR(x) = NOT AND(NOT x).
pub fn or_combiner(num_qubits: usize, inputs: &[usize], target: usize) -> Result<Circuit> {
    check_combiner(num_qubits, inputs, target)?;
    let mut c = Circuit::new(num_qubits);
    for &q in inputs {
        c.x(q)?;
    }
    c.mcx(inputs, target)?;
    for &q in inputs {
        c.x(q)?;
    }
    c.x(target)?;
    Ok(c)
}
