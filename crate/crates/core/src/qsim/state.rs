use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;

use super::circuit::{Circuit, GateKind, Matrix2};
use super::kernels;
use crate::error::{Error, Result};

/// Largest dense state built unless a caller asks for a different cap.
/// 2^26 amplitudes of 16 bytes is 1 GiB.
pub const DEFAULT_QUBIT_CAP: usize = 26;

/// Amplitude comparisons tolerance used throughout the crate.
pub const STATE_TOL: f64 = 1e-9;

const HADAMARD: Matrix2 = [
    [
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
    ],
    [
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(-FRAC_1_SQRT_2, 0.0),
    ],
];

/// Dense statevector over `num_qubits` qubits. Qubit 0 is the least
/// significant bit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |basis_index⟩ on `num_qubits` qubits, refusing widths above
    /// [`DEFAULT_QUBIT_CAP`].
    pub fn new_basis_state(num_qubits: usize, basis_index: usize) -> Result<Self> {
        Self::new_basis_state_with_cap(num_qubits, basis_index, DEFAULT_QUBIT_CAP)
    }

    pub fn new_basis_state_with_cap(
        num_qubits: usize,
        basis_index: usize,
        cap: usize,
    ) -> Result<Self> {
        check_capacity(num_qubits, cap)?;
        let dim = 1usize << num_qubits;
        if basis_index >= dim {
            return Err(Error::arg(format!(
                "basis index {basis_index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[basis_index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amps })
    }

    /// Build from raw amplitudes; the vector must have power-of-two length
    /// and unit norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::arg("amplitude count must be a power of two"));
        }
        let num_qubits = amps.len().trailing_zeros() as usize;
        check_capacity(num_qubits, DEFAULT_QUBIT_CAP)?;
        let s = StateVector { num_qubits, amps };
        if (s.norm() - 1.0).abs() > STATE_TOL {
            return Err(Error::arg(format!("state norm {} is not 1", s.norm())));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    /// Largest amplitude-wise distance to `other`.
    pub fn max_distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Apply every gate of `circuit` in order.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::arg(format!(
                "circuit has {} qubits, state has {}",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        for gate in circuit.ops() {
            let cmask = gate.controls.iter().fold(0usize, |m, &c| m | (1 << c));
            match &gate.kind {
                GateKind::PauliX { target } => kernels::apply_x(&mut self.amps, *target, cmask),
                GateKind::Hadamard { target } => {
                    kernels::apply_single(&mut self.amps, *target, cmask, &HADAMARD)
                }
                GateKind::Unitary { target, matrix } => {
                    kernels::apply_single(&mut self.amps, *target, cmask, matrix)
                }
                GateKind::DiagonalPhase { register, turns } => {
                    let factors: Vec<Complex64> = turns
                        .iter()
                        .map(|&t| Complex64::from_polar(1.0, TAU * t))
                        .collect();
                    kernels::apply_diagonal(&mut self.amps, register, &factors, cmask)
                }
            }
        }
        Ok(())
    }

    /// Exact marginal distribution of `qubits`; entry `v` is the probability
    /// that qubit `qubits[j]` reads bit `j` of `v` for every `j`.
    pub fn subregister_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_subregister(qubits)?;
        let mut dist = vec![0.0; 1usize << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            dist[kernels::gather_bits(i, qubits)] += a.norm_sqr();
        }
        Ok(dist)
    }

    /// Sample the sub-register and collapse the state onto the outcome.
    pub fn measure_subregister<R: Rng + ?Sized>(
        &mut self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<usize> {
        let dist = self.subregister_distribution(qubits)?;
        let outcome = sample_index(&dist, rng)
            .ok_or_else(|| Error::Internal("measured marginal has zero total mass".into()))?;
        let p = dist[outcome];
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if kernels::gather_bits(i, qubits) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(outcome)
    }

    fn check_subregister(&self, qubits: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.num_qubits];
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(Error::arg(format!("qubit {q} out of range")));
            }
            if seen[q] {
                return Err(Error::arg(format!("qubit {q} listed twice")));
            }
            seen[q] = true;
        }
        Ok(())
    }
}

fn check_capacity(num_qubits: usize, cap: usize) -> Result<()> {
    if num_qubits > cap {
        return Err(Error::Capacity {
            requested: num_qubits,
            cap,
        });
    }
    Ok(())
}

/// Draw an index from an unnormalized discrete distribution. `None` when the
/// total mass is not positive.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let mut u = rng.gen::<f64>() * total;
    let mut last_nonzero = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_nonzero = Some(i);
            if u < w {
                return Some(i);
            }
            u -= w;
        }
    }
    // rounding left u marginally above the final weight
    last_nonzero
}

/// Functional form of [`StateVector::apply_circuit`].
pub fn apply(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_circuit(circuit)?;
    Ok(out)
}

/// Measure `qubits` of `state` without modifying it; returns the outcome and
/// the collapsed copy.
pub fn measure_subregister<R: Rng + ?Sized>(
    state: &StateVector,
    qubits: &[usize],
    rng: &mut R,
) -> Result<(usize, StateVector)> {
    let mut collapsed = state.clone();
    let outcome = collapsed.measure_subregister(qubits, rng)?;
    Ok((outcome, collapsed))
}
