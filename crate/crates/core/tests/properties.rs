use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use grover_portfolio::comparator::Comparison;
use grover_portfolio::oracle::{
    condition_oracle, direct_marking_oracle, single_list_oracle_with, two_list_oracle,
    ConditionSpec, ValueTable,
};
use grover_portfolio::portfolio::{quantize, slice_portfolios, FrontierTable, PortfolioRecord};
use grover_portfolio::qsim::{apply, phase_estimation_circuit, Circuit, Matrix2, StateVector};
use grover_portfolio::search::{counting_distribution, grover_angle, Backend, EnumerateConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_unitary(rng: &mut ChaCha8Rng) -> Matrix2 {
    let (a, b, c, d): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
    let (th, ph, la, ga) = (a * PI, b * TAU, c * TAU, d * TAU);
    let g = Complex64::from_polar(1.0, ga);
    [
        [
            g * (th / 2.0).cos(),
            -g * Complex64::from_polar((th / 2.0).sin(), la),
        ],
        [
            g * Complex64::from_polar((th / 2.0).sin(), ph),
            g * Complex64::from_polar((th / 2.0).cos(), ph + la),
        ],
    ]
}

fn random_circuit(nq: usize, gates: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(nq);
    for _ in 0..gates {
        let mut qs: Vec<usize> = (0..nq).collect();
        for i in (1..qs.len()).rev() {
            qs.swap(i, rng.gen_range(0..=i));
        }
        let n_ctrl = rng.gen_range(0..nq.min(3));
        let (target, controls) = (qs[0], &qs[1..1 + n_ctrl]);
        match rng.gen_range(0..4) {
            0 => {
                c.mcx(controls, target).unwrap();
            }
            1 => {
                c.h(target).unwrap();
            }
            2 => {
                let mut g = Circuit::new(nq);
                g.unitary(target, random_unitary(&mut rng)).unwrap();
                c.extend(&g.controlled(controls).unwrap()).unwrap();
            }
            _ => {
                let width = rng.gen_range(1..=nq - n_ctrl);
                let reg = &qs[n_ctrl..n_ctrl + width];
                let turns: Vec<f64> = (0..1 << width).map(|_| rng.gen()).collect();
                c.diagonal_phase(&qs[..n_ctrl], reg, &turns).unwrap();
            }
        }
    }
    c
}

fn random_state(nq: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..1usize << nq)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

/// Probability of QPE outcome `b` for eigenphase `phi` on `m` qubits,
/// summed as a geometric series.
fn qpe_probability(phi: f64, m: usize, b: usize) -> f64 {
    let size = (1usize << m) as f64;
    let delta = phi - b as f64 / size;
    let amp: Complex64 = (0..1usize << m)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 * delta))
        .sum::<Complex64>()
        / size;
    amp.norm_sqr()
}

fn counting_oracle_formula(n_items: usize, marked: usize, m: usize) -> Vec<f64> {
    let theta = if marked == 0 {
        0.0
    } else {
        grover_angle(n_items, marked).unwrap()
    };
    let phi = theta / TAU;
    (0..1usize << m)
        .map(|b| 0.5 * qpe_probability(phi, m, b) + 0.5 * qpe_probability(-phi, m, b))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuits_are_reversible(nq in 1usize..=6, gates in 1usize..40, seed in any::<u64>()) {
        let c = random_circuit(nq, gates, seed);
        let s = random_state(nq, seed ^ 0x5eed);
        let fwd = apply(&s, &c).unwrap();
        prop_assert!((fwd.norm() - 1.0).abs() < 1e-9);
        let back = apply(&fwd, &c.inverse()).unwrap();
        prop_assert!(back.max_distance(&s) < 1e-9);
    }

    #[test]
    fn qpe_is_exact_on_representable_phases(m in 1usize..=6, seed in any::<u64>()) {
        let b = (seed % (1u64 << m)) as usize;
        let turns = [0.0, b as f64 / (1u64 << m) as f64];
        let counting: Vec<usize> = (0..m).collect();
        let c = phase_estimation_circuit(m + 1, &counting, &turns, &[m]).unwrap();
        let s = apply(&StateVector::new_basis_state(m + 1, 1 << m).unwrap(), &c).unwrap();
        let dist = s.subregister_distribution(&counting).unwrap();
        prop_assert!((dist[b] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qpe_matches_closed_form(m in 1usize..=6, phi in 0.0f64..1.0) {
        let counting: Vec<usize> = (0..m).collect();
        let c = phase_estimation_circuit(m + 1, &counting, &[0.0, phi], &[m]).unwrap();
        let s = apply(&StateVector::new_basis_state(m + 1, 1 << m).unwrap(), &c).unwrap();
        let dist = s.subregister_distribution(&counting).unwrap();
        for (b, p) in dist.iter().enumerate() {
            prop_assert!((p - qpe_probability(phi, m, b)).abs() < 1e-9);
        }
        // nearest outcome carries at least 4/π² of the mass
        let nearest = ((phi * (1u64 << m) as f64).round() as usize) % (1 << m);
        prop_assert!(dist[nearest] >= 4.0 / (PI * PI) - 1e-9);
    }

    #[test]
    fn oracle_marks_exactly_the_predicate(
        n in 1usize..=2,
        t in 1usize..=3,
        cmp in prop_oneof![Just(Comparison::Greater), Just(Comparison::Less), Just(Comparison::Equal)],
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<u64> = (0..1 << n).map(|_| rng.gen_range(0..1u64 << t)).collect();
        let threshold = rng.gen_range(0..1u64 << t);
        let table = ValueTable::new(t, values.clone()).unwrap();
        let oracle = single_list_oracle_with(&table, cmp, threshold).unwrap();
        let start = oracle.initial_state().unwrap();
        let after = apply(&start, oracle.circuit()).unwrap();
        let before = oracle.index_amplitudes(&start).unwrap();
        let amps = oracle.index_amplitudes(&after).unwrap();
        for k in 0..1 << n {
            let sign = if cmp.holds(values[k], threshold) { -1.0 } else { 1.0 };
            prop_assert!((amps[k] - before[k] * sign).norm() < 1e-9);
        }
        // the workspace returns to its reference state
        let mass: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_list_oracle_marks_conjunction(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, t) = (1, 2);
        let r: Vec<u64> = (0..2).map(|_| rng.gen_range(0..4)).collect();
        let s: Vec<u64> = (0..2).map(|_| rng.gen_range(0..4)).collect();
        let (s1, s2) = (rng.gen_range(0..4), rng.gen_range(0..4));
        let oracle = two_list_oracle(
            &ValueTable::new(t, r.clone()).unwrap(),
            &ValueTable::new(t, s.clone()).unwrap(),
            s1,
            s2,
        )
        .unwrap();
        prop_assert_eq!(oracle.num_qubits(), 2 * n + 4 * t + 3);
        let start = oracle.initial_state().unwrap();
        let after = apply(&start, oracle.circuit()).unwrap();
        let before = oracle.index_amplitudes(&start).unwrap();
        let amps = oracle.index_amplitudes(&after).unwrap();
        for k in 0..2 {
            let sign = if r[k] > s1 && s[k] < s2 { -1.0 } else { 1.0 };
            prop_assert!((amps[k] - before[k] * sign).norm() < 1e-9);
        }
    }

    #[test]
    fn quantization_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, t in 1usize..=20) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo, t).unwrap() <= quantize(hi, t).unwrap());
        prop_assert!(quantize(hi, t).unwrap() < 1 << t);
    }

    #[test]
    fn effective_counting_matches_closed_form(n in 1usize..=5, m in 1usize..=6, seed in any::<u64>()) {
        let n_items = 1usize << n;
        let marked_count = (seed as usize) % (n_items + 1);
        let marked: BTreeSet<usize> = (0..marked_count).collect();
        let oracle = direct_marking_oracle(n, &marked).unwrap();
        let dist = counting_distribution(&oracle, m, Backend::Effective).unwrap();
        let want = counting_oracle_formula(n_items, marked_count, m);
        for (p, q) in dist.iter().zip(&want) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn slicing_equals_classical_filter(
        rows in 1usize..=16,
        t in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<PortfolioRecord> = (0..rows)
            .map(|i| {
                let r = rng.gen_range(0.0..0.99);
                let s = rng.gen_range(0.01..0.99);
                PortfolioRecord::new(i as u64, r, s).unwrap()
            })
            .collect();
        let table = FrontierTable::from_records(records, t).unwrap();
        let lo = rng.gen_range(0.0..0.99);
        let hi = rng.gen_range(0.0..0.99);
        let out = slice_portfolios(&table, lo, hi, &mut rng, EnumerateConfig::default()).unwrap();
        let want = table.classical_filter(quantize(lo, t).unwrap(), quantize(hi, t).unwrap());
        prop_assert_eq!(&out.ids, &want);
        prop_assert!(out.ids.iter().all(|&id| (id as usize) < rows));
    }
}

#[test]
fn dense_counting_matches_effective() {
    for marked in [BTreeSet::from([1]), BTreeSet::from([0, 3]), BTreeSet::new()] {
        let oracle = direct_marking_oracle(2, &marked).unwrap();
        for m in 1..=4 {
            let d = counting_distribution(&oracle, m, Backend::Dense).unwrap();
            let e = counting_distribution(&oracle, m, Backend::Effective).unwrap();
            for (p, q) in d.iter().zip(&e) {
                assert!((p - q).abs() < 1e-9, "{marked:?} m={m}");
            }
        }
    }
    let table = ValueTable::new(2, vec![1, 3]).unwrap();
    let oracle = condition_oracle(&ConditionSpec::gt(table, 2)).unwrap();
    let d = counting_distribution(&oracle, 3, Backend::Dense).unwrap();
    let e = counting_distribution(&oracle, 3, Backend::Effective).unwrap();
    for (p, q) in d.iter().zip(&e) {
        assert!((p - q).abs() < 1e-9);
    }
}
