use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::error::{Error, Result};

const UNITARY_TOL: f64 = 1e-9;

/// 2x2 complex matrix, row-major.
pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    PauliX {
        target: usize,
    },
    Hadamard {
        target: usize,
    },
    Unitary {
        target: usize,
        matrix: Matrix2,
    },
    /// Diagonal unitary on a register: basis value `v` of the register
    /// (register[0] least significant) picks up `exp(2πi·turns[v])`.
    DiagonalPhase {
        register: Vec<usize>,
        turns: Vec<f64>,
    },
}

/// One gate application, optionally conditioned on a set of control qubits
/// all being |1⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub controls: Vec<usize>,
}

impl Gate {
    pub fn targets(&self) -> Vec<usize> {
        match &self.kind {
            GateKind::PauliX { target }
            | GateKind::Hadamard { target }
            | GateKind::Unitary { target, .. } => vec![*target],
            GateKind::DiagonalPhase { register, .. } => register.clone(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GateKind::PauliX { .. } => "X",
            GateKind::Hadamard { .. } => "H",
            GateKind::Unitary { .. } => "U",
            GateKind::DiagonalPhase { .. } => "DIAG",
        }
    }

    pub fn inverse(&self) -> Gate {
        let kind = match &self.kind {
            GateKind::Unitary { target, matrix } => GateKind::Unitary {
                target: *target,
                matrix: [
                    [matrix[0][0].conj(), matrix[1][0].conj()],
                    [matrix[0][1].conj(), matrix[1][1].conj()],
                ],
            },
            GateKind::DiagonalPhase { register, turns } => GateKind::DiagonalPhase {
                register: register.clone(),
                turns: turns.iter().map(|t| normalize_turn(-t)).collect(),
            },
            k => k.clone(),
        };
        Gate {
            kind,
            controls: self.controls.clone(),
        }
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        let targets = self.targets();
        if targets.is_empty() {
            return Err(Error::arg("gate has no target qubits"));
        }
        let mut seen = vec![false; num_qubits];
        for &q in targets.iter().chain(&self.controls) {
            if q >= num_qubits {
                return Err(Error::arg(format!(
                    "qubit {q} out of range for {num_qubits}-qubit circuit"
                )));
            }
            if seen[q] {
                return Err(Error::arg(format!("qubit {q} used twice in one gate")));
            }
            seen[q] = true;
        }
        match &self.kind {
            GateKind::Unitary { matrix, .. } => {
                if !is_unitary(matrix) {
                    return Err(Error::arg("single-qubit matrix is not unitary"));
                }
            }
            GateKind::DiagonalPhase { register, turns } => {
                if turns.len() != 1usize << register.len() {
                    return Err(Error::arg(format!(
                        "phase table has {} entries, register of {} qubits needs {}",
                        turns.len(),
                        register.len(),
                        1usize << register.len()
                    )));
                }
                if turns.iter().any(|t| !(0.0..1.0).contains(t)) {
                    return Err(Error::arg("phase table entries must lie in [0, 1) turns"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn relabel(&self, map: &[usize]) -> Gate {
        let kind = match &self.kind {
            GateKind::PauliX { target } => GateKind::PauliX {
                target: map[*target],
            },
            GateKind::Hadamard { target } => GateKind::Hadamard {
                target: map[*target],
            },
            GateKind::Unitary { target, matrix } => GateKind::Unitary {
                target: map[*target],
                matrix: *matrix,
            },
            GateKind::DiagonalPhase { register, turns } => GateKind::DiagonalPhase {
                register: register.iter().map(|&q| map[q]).collect(),
                turns: turns.clone(),
            },
        };
        Gate {
            kind,
            controls: self.controls.iter().map(|&q| map[q]).collect(),
        }
    }
}

/// Reduce a phase in turns into `[0, 1)`.
pub fn normalize_turn(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn is_unitary(m: &Matrix2) -> bool {
    // M·M† = I
    for i in 0..2 {
        for j in 0..2 {
            let v = m[i][0] * m[j][0].conj() + m[i][1] * m[j][1].conj();
            let want = if i == j { 1.0 } else { 0.0 };
            if (v.re - want).abs() > UNITARY_TOL || v.im.abs() > UNITARY_TOL {
                return false;
            }
        }
    }
    true
}

/// Ordered gate list over a fixed number of qubits. Every gate is validated
/// on insertion, so a `Circuit` is always applicable to a state of the same
/// width.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            ops: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.ops.push(gate);
        Ok(self)
    }

    pub fn x(&mut self, target: usize) -> Result<&mut Self> {
        self.mcx(&[], target)
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.mcx(&[control], target)
    }

    pub fn mcx(&mut self, controls: &[usize], target: usize) -> Result<&mut Self> {
        self.push(Gate {
            kind: GateKind::PauliX { target },
            controls: controls.to_vec(),
        })
    }

    pub fn h(&mut self, target: usize) -> Result<&mut Self> {
        self.push(Gate {
            kind: GateKind::Hadamard { target },
            controls: Vec::new(),
        })
    }

    pub fn unitary(&mut self, target: usize, matrix: Matrix2) -> Result<&mut Self> {
        self.push(Gate {
            kind: GateKind::Unitary { target, matrix },
            controls: Vec::new(),
        })
    }

    /// Diagonal phase gate; `turns` are reduced mod 1 before validation.
    pub fn diagonal_phase(
        &mut self,
        controls: &[usize],
        register: &[usize],
        turns: &[f64],
    ) -> Result<&mut Self> {
        self.push(Gate {
            kind: GateKind::DiagonalPhase {
                register: register.to_vec(),
                turns: turns.iter().map(|&t| normalize_turn(t)).collect(),
            },
            controls: controls.to_vec(),
        })
    }

    /// Phase `exp(2πi·turn)` on |1⟩ of `target`, conditioned on `controls`.
    pub fn phase(&mut self, controls: &[usize], target: usize, turn: f64) -> Result<&mut Self> {
        self.diagonal_phase(controls, &[target], &[0.0, turn])
    }

    /// Append all gates of `other`, which must have the same width.
    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::arg(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            ops: self.ops.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Every gate gains `controls`: the result acts as the identity unless
    /// all control qubits are |1⟩.
    pub fn controlled(&self, controls: &[usize]) -> Result<Circuit> {
        let used = self.qubits_used();
        for &c in controls {
            if c >= self.num_qubits {
                return Err(Error::arg(format!("control qubit {c} out of range")));
            }
            if used.contains(&c) {
                return Err(Error::arg(format!(
                    "control qubit {c} is already acted on by the circuit"
                )));
            }
        }
        let mut out = Circuit::new(self.num_qubits);
        for g in &self.ops {
            let mut g = g.clone();
            g.controls.extend_from_slice(controls);
            out.push(g)?;
        }
        Ok(out)
    }

    /// Relabel qubit `i` as `map[i]` inside a `num_qubits`-wide circuit.
    pub fn embed(&self, num_qubits: usize, map: &[usize]) -> Result<Circuit> {
        if map.len() != self.num_qubits {
            return Err(Error::arg(format!(
                "qubit map has {} entries, circuit has {} qubits",
                map.len(),
                self.num_qubits
            )));
        }
        let mut out = Circuit::new(num_qubits);
        for g in &self.ops {
            out.push(g.relabel(map))?;
        }
        Ok(out)
    }

    /// Sorted list of qubits touched by any gate (targets or controls).
    pub fn qubits_used(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_qubits];
        for g in &self.ops {
            for q in g.targets().into_iter().chain(g.controls.iter().copied()) {
                seen[q] = true;
            }
        }
        (0..self.num_qubits).filter(|&q| seen[q]).collect()
    }

    pub fn count_where(&self, pred: impl Fn(&Gate) -> bool) -> usize {
        self.ops.iter().filter(|g| pred(g)).count()
    }

    /// One gate per line: `KIND controls=[..] targets=[..]`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for g in &self.ops {
            let _ = writeln!(
                s,
                "{} controls={:?} targets={:?}",
                g.kind_name(),
                g.controls,
                g.targets()
            );
        }
        s
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}
