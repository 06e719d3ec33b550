use super::circuit::Circuit;
use crate::error::{Error, Result};

fn swap(c: &mut Circuit, a: usize, b: usize) -> Result<()> {
    c.cx(a, b)?.cx(b, a)?.cx(a, b)?;
    Ok(())
}

/// Quantum Fourier transform on `register` (register[0] least significant):
/// |x⟩ ↦ 2^{-t/2} Σ_y exp(2πi·x·y/2^t) |y⟩.
pub fn qft_circuit(num_qubits: usize, register: &[usize]) -> Result<Circuit> {
    if register.is_empty() {
        return Err(Error::arg("QFT register must be non-empty"));
    }
    let t = register.len();
    let mut c = Circuit::new(num_qubits);
    for k in (0..t).rev() {
        c.h(register[k])?;
        for l in (0..k).rev() {
            let turn = 1.0 / (1u64 << (k - l + 1)) as f64;
            c.phase(&[register[l]], register[k], turn)?;
        }
    }
    for i in 0..t / 2 {
        swap(&mut c, register[i], register[t - 1 - i])?;
    }
    Ok(c)
}

/// Inverse of [`qft_circuit`]; O(t²) gates.
pub fn inverse_qft_circuit(num_qubits: usize, register: &[usize]) -> Result<Circuit> {
    Ok(qft_circuit(num_qubits, register)?.inverse())
}

/// Phase estimation of the diagonal unitary `U = diag(exp(2πi·turns[k]))`
/// acting on `target`. Counting qubit `j` controls `U^(2^j)`, realized as a
/// single diagonal gate with every phase multiplied by `2^j` mod 1. When the
/// target holds |k⟩ and `turns[k] = b/2^t` exactly, the counting register
/// ends in |b⟩.
pub fn phase_estimation_circuit(
    num_qubits: usize,
    counting: &[usize],
    turns: &[f64],
    target: &[usize],
) -> Result<Circuit> {
    if turns.len() != 1usize << target.len() {
        return Err(Error::arg(format!(
            "phase table has {} entries, target register of {} qubits needs {}",
            turns.len(),
            target.len(),
            1usize << target.len()
        )));
    }
    if counting.is_empty() {
        return Err(Error::arg(
            "phase estimation needs at least one counting qubit",
        ));
    }
    let mut c = Circuit::new(num_qubits);
    for &q in counting {
        c.h(q)?;
    }
    for (j, &q) in counting.iter().enumerate() {
        let power = (1u64 << j) as f64;
        let powered: Vec<f64> = turns.iter().map(|&s| (s * power).rem_euclid(1.0)).collect();
        c.diagonal_phase(&[q], target, &powered)?;
    }
    c.extend(&inverse_qft_circuit(num_qubits, counting)?)?;
    Ok(c)
}

/// Counting qubits needed for `m` bits of accuracy with failure
/// probability at most `epsilon`: `m + ceil(log2(2 + 1/(2ε)))`.
pub fn qpe_register_size(m: usize, epsilon: f64) -> Result<usize> {
    if m < 1 {
        return Err(Error::arg("accuracy bits must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::arg(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let extra = (2.0 + 1.0 / (2.0 * epsilon)).log2();
    // exact powers of two must not round up through float noise
    let rounded = extra.round();
    let extra = if (extra - rounded).abs() < 1e-12 {
        rounded
    } else {
        extra.ceil()
    };
    Ok(m + extra as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{apply, StateVector, STATE_TOL};
    use num_complex::Complex64;
    use std::f64::consts::TAU;

    #[test]
    fn qpe_register_sizes() {
        assert_eq!(qpe_register_size(3, 0.25).unwrap(), 5);
        assert_eq!(qpe_register_size(4, 1.0 / 6.0).unwrap(), 7);
        assert_eq!(qpe_register_size(1, 0.5).unwrap(), 3);
        assert!(qpe_register_size(0, 0.5).is_err());
        assert!(qpe_register_size(2, 1.0).is_err());
        assert!(qpe_register_size(2, 0.0).is_err());
    }

    #[test]
    fn single_qubit_inverse_qft_is_a_hadamard() {
        let c = inverse_qft_circuit(1, &[0]).unwrap();
        assert_eq!(c.dump(), "H controls=[] targets=[0]\n");
    }

    #[test]
    fn qft_matches_dft_matrix() {
        for t in 1..=4usize {
            let dim = 1usize << t;
            let reg: Vec<usize> = (0..t).collect();
            let qft = qft_circuit(t, &reg).unwrap();
            for x in 0..dim {
                let s = apply(&StateVector::new_basis_state(t, x).unwrap(), &qft).unwrap();
                for y in 0..dim {
                    let want = Complex64::from_polar(
                        1.0 / (dim as f64).sqrt(),
                        TAU * (x * y) as f64 / dim as f64,
                    );
                    assert!((s.amplitude(y) - want).norm() < 1e-12, "t={t} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn inverse_qft_undoes_qft_on_embedded_register() {
        let reg = [1, 3, 4];
        let mut c = qft_circuit(5, &reg).unwrap();
        c.extend(&inverse_qft_circuit(5, &reg).unwrap()).unwrap();
        for x in 0..32 {
            let s = apply(&StateVector::new_basis_state(5, x).unwrap(), &c).unwrap();
            assert!((s.probability(x) - 1.0).abs() < STATE_TOL);
        }
    }

    #[test]
    fn qpe_table_length_checked() {
        assert!(phase_estimation_circuit(3, &[0, 1], &[0.0, 0.5, 0.25], &[2]).is_err());
    }

    #[test]
    fn qpe_recovers_three_eighths() {
        // counting qubits 0..3, one target qubit 3 prepared in |1⟩
        let c = phase_estimation_circuit(4, &[0, 1, 2], &[0.0, 0.375], &[3]).unwrap();
        let s = apply(&StateVector::new_basis_state(4, 0b1000).unwrap(), &c).unwrap();
        let d = s.subregister_distribution(&[0, 1, 2]).unwrap();
        assert!((d[3] - 1.0).abs() < STATE_TOL);

        // zero phase for |0⟩ of the target
        let s = apply(&StateVector::new_basis_state(4, 0).unwrap(), &c).unwrap();
        let d = s.subregister_distribution(&[0, 1, 2]).unwrap();
        assert!((d[0] - 1.0).abs() < STATE_TOL);
    }
}
