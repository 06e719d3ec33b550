//! Threshold oracles over phase-encoded value tables.
//!
//! A list of values `s_k = b_k / 2^t` is encoded as the diagonal unitary
//! `U = diag(exp(2πi·s_k))`. Phase estimation of `U` with the index register
//! as target writes `b_k` into a t-qubit estimate register exactly, a
//! comparator checks it against a constant threshold register, and the
//! decision is kicked back as a sign onto the index register through an
//! oracle qubit held in |−⟩. Everything except the final decision is then
//! uncomputed.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::comparator::{and_combiner, compare_on, or_combiner, Comparison};
use crate::error::{Error, Result};
use crate::qsim::{phase_estimation_circuit, Circuit, StateVector};

/// `N = 2^n` quantized values, each a t-bit integer `b_k` standing for
/// `b_k / 2^t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValueTable {
    t: usize,
    values: Vec<u64>,
}

impl ValueTable {
    pub fn new(t: usize, values: Vec<u64>) -> Result<Self> {
        if t == 0 || t > 52 {
            return Err(Error::arg(format!("resolution of {t} bits is unsupported")));
        }
        if values.len() < 2 || !values.len().is_power_of_two() {
            return Err(Error::arg(format!(
                "table length {} is not a power of two >= 2",
                values.len()
            )));
        }
        let limit = 1u64 << t;
        if let Some(v) = values.iter().find(|&&v| v >= limit) {
            return Err(Error::arg(format!("value {v} does not fit in {t} bits")));
        }
        Ok(ValueTable { t, values })
    }

    /// Pad `values` with `sentinel` up to the next power of two (at least 2).
    pub fn padded(t: usize, mut values: Vec<u64>, sentinel: u64) -> Result<Self> {
        let len = values.len().max(2).next_power_of_two();
        values.resize(len, sentinel);
        Self::new(t, values)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Index bits.
    pub fn n(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, k: usize) -> u64 {
        self.values[k]
    }

    pub fn max_value(&self) -> u64 {
        (1u64 << self.t) - 1
    }

    /// Phases `b_k / 2^t` in turns.
    pub fn turns(&self) -> Vec<f64> {
        let scale = (1u64 << self.t) as f64;
        self.values.iter().map(|&b| b as f64 / scale).collect()
    }

    fn doubled(&self, sentinel: u64) -> ValueTable {
        let mut values = self.values.clone();
        values.resize(2 * values.len(), sentinel);
        ValueTable { t: self.t, values }
    }
}

/// `table[k] <cmp> threshold`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    pub table: ValueTable,
    pub cmp: Comparison,
    pub threshold: u64,
}

impl Atom {
    pub fn holds(&self, k: usize) -> bool {
        self.cmp.holds(self.table.get(k), self.threshold)
    }

    /// A padding value that can never satisfy this atom.
    fn sentinel(&self) -> u64 {
        match self.cmp {
            Comparison::Greater => 0,
            Comparison::Less => self.table.max_value(),
            Comparison::Equal if self.threshold == 0 => self.table.max_value(),
            Comparison::Equal => 0,
        }
    }
}

/// Boolean combination of threshold atoms over lists that share an index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ConditionSpec {
    Atom(Atom),
    And(Vec<ConditionSpec>),
    Or(Vec<ConditionSpec>),
}

impl ConditionSpec {
    pub fn gt(table: ValueTable, threshold: u64) -> Self {
        Self::atom(table, Comparison::Greater, threshold)
    }

    pub fn lt(table: ValueTable, threshold: u64) -> Self {
        Self::atom(table, Comparison::Less, threshold)
    }

    pub fn eq(table: ValueTable, threshold: u64) -> Self {
        Self::atom(table, Comparison::Equal, threshold)
    }

    pub fn atom(table: ValueTable, cmp: Comparison, threshold: u64) -> Self {
        ConditionSpec::Atom(Atom {
            table,
            cmp,
            threshold,
        })
    }

    pub fn evaluate(&self, k: usize) -> bool {
        match self {
            ConditionSpec::Atom(a) => a.holds(k),
            ConditionSpec::And(cs) => cs.iter().all(|c| c.evaluate(k)),
            ConditionSpec::Or(cs) => cs.iter().any(|c| c.evaluate(k)),
        }
    }

    fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            ConditionSpec::Atom(a) => out.push(a),
            ConditionSpec::And(cs) | ConditionSpec::Or(cs) => {
                cs.iter().for_each(|c| c.collect_atoms(out))
            }
        }
    }

    /// Inner And/Or nodes below the root; each needs one ancilla.
    fn inner_nodes(&self, is_root: bool) -> usize {
        match self {
            ConditionSpec::Atom(_) => 0,
            ConditionSpec::And(cs) | ConditionSpec::Or(cs) => {
                usize::from(!is_root) + cs.iter().map(|c| c.inner_nodes(false)).sum::<usize>()
            }
        }
    }

    fn validate(&self) -> Result<(usize, usize)> {
        let atoms = self.atoms();
        if atoms.is_empty() {
            return Err(Error::arg("condition has no atoms"));
        }
        self.check_nonempty_nodes()?;
        let (n, t) = (atoms[0].table.n(), atoms[0].table.t());
        for a in &atoms {
            if a.table.n() != n || a.table.t() != t {
                return Err(Error::arg(format!(
                    "all tables must share n and t (expected n={n}, t={t}; got n={}, t={})",
                    a.table.n(),
                    a.table.t()
                )));
            }
            if a.threshold > a.table.max_value() {
                return Err(Error::arg(format!(
                    "threshold {} does not fit in {t} bits",
                    a.threshold
                )));
            }
        }
        Ok((n, t))
    }

    fn check_nonempty_nodes(&self) -> Result<()> {
        match self {
            ConditionSpec::Atom(_) => Ok(()),
            ConditionSpec::And(cs) | ConditionSpec::Or(cs) => {
                if cs.is_empty() {
                    return Err(Error::arg("empty AND/OR node"));
                }
                cs.iter().try_for_each(|c| c.check_nonempty_nodes())
            }
        }
    }

    fn doubled(&self) -> ConditionSpec {
        match self {
            ConditionSpec::Atom(a) => ConditionSpec::Atom(Atom {
                table: a.table.doubled(a.sentinel()),
                cmp: a.cmp,
                threshold: a.threshold,
            }),
            ConditionSpec::And(cs) => ConditionSpec::And(cs.iter().map(Self::doubled).collect()),
            ConditionSpec::Or(cs) => ConditionSpec::Or(cs.iter().map(Self::doubled).collect()),
        }
    }
}

/// Register map of an oracle circuit. Registers are disjoint and together
/// cover every qubit of the circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleLayout {
    pub num_qubits: usize,
    pub index: Vec<usize>,
    /// Fan-out copies of the index, one per atom after the first.
    pub index_copies: Vec<Vec<usize>>,
    pub estimates: Vec<Vec<usize>>,
    pub thresholds: Vec<Vec<usize>>,
    /// Per-atom comparison outcomes (empty when a single atom writes the
    /// oracle qubit directly).
    pub outcomes: Vec<usize>,
    /// Results of inner And/Or nodes.
    pub ancillas: Vec<usize>,
    /// Absent for pure phase oracles.
    pub oracle_qubit: Option<usize>,
}

impl OracleLayout {
    fn phase_only(n: usize) -> Self {
        OracleLayout {
            num_qubits: n,
            index: (0..n).collect(),
            index_copies: Vec::new(),
            estimates: Vec::new(),
            thresholds: Vec::new(),
            outcomes: Vec::new(),
            ancillas: Vec::new(),
            oracle_qubit: None,
        }
    }

    fn all_qubits(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.index.clone();
        for r in self
            .index_copies
            .iter()
            .chain(&self.estimates)
            .chain(&self.thresholds)
        {
            all.extend(r);
        }
        all.extend(&self.outcomes);
        all.extend(&self.ancillas);
        all.extend(self.oracle_qubit);
        all
    }
}

#[derive(Debug, Clone, PartialEq)]
enum OracleSource {
    Direct { marked: BTreeSet<usize> },
    Condition(ConditionSpec),
}

/// An oracle circuit together with its register layout and the classical
/// predicate it implements.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCircuit {
    circuit: Circuit,
    layout: OracleLayout,
    n: usize,
    marked: Vec<bool>,
    source: OracleSource,
}

impl OracleCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn layout(&self) -> &OracleLayout {
        &self.layout
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits
    }

    /// Index bits.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Search-space size `N = 2^n`.
    pub fn search_size(&self) -> usize {
        1 << self.n
    }

    pub fn predicate(&self, k: usize) -> bool {
        self.marked.get(k).copied().unwrap_or(false)
    }

    pub fn marked_mask(&self) -> &[bool] {
        &self.marked
    }

    pub fn marked_indices(&self) -> Vec<usize> {
        (0..self.marked.len()).filter(|&k| self.marked[k]).collect()
    }

    pub fn marked_count(&self) -> usize {
        self.marked.iter().filter(|&&m| m).count()
    }

    pub fn condition(&self) -> Option<&ConditionSpec> {
        match &self.source {
            OracleSource::Condition(c) => Some(c),
            OracleSource::Direct { .. } => None,
        }
    }

    /// Gates taking |0…0⟩ to the Grover start state: |+⟩^n on the index,
    /// threshold constants in their registers, |−⟩ on the oracle qubit.
    pub fn preparation_circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new(self.num_qubits());
        for &q in &self.layout.index {
            c.h(q)?;
        }
        for q in self.threshold_bits_set() {
            c.x(q)?;
        }
        if let Some(o) = self.layout.oracle_qubit {
            c.x(o)?.h(o)?;
        }
        Ok(c)
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        let mut s = StateVector::new_basis_state(self.num_qubits(), 0)?;
        s.apply_circuit(&self.preparation_circuit()?)?;
        Ok(s)
    }

    fn threshold_bits_set(&self) -> Vec<usize> {
        let Some(cond) = self.condition() else {
            return Vec::new();
        };
        cond.atoms()
            .iter()
            .zip(&self.layout.thresholds)
            .flat_map(|(a, reg)| {
                reg.iter()
                    .enumerate()
                    .filter(|(j, _)| (a.threshold >> j) & 1 == 1)
                    .map(|(_, &q)| q)
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Basis index of the workspace (all non-index qubits) in the reference
    /// configuration: thresholds loaded, everything else |0⟩.
    fn workspace_base(&self) -> usize {
        self.threshold_bits_set()
            .iter()
            .fold(0, |m, &q| m | (1 << q))
    }

    /// Index-register amplitudes of a dense state, obtained by projecting the
    /// workspace onto its reference state (thresholds, zeros, |−⟩).
    pub fn index_amplitudes(&self, state: &StateVector) -> Result<Vec<Complex64>> {
        if state.num_qubits() != self.num_qubits() {
            return Err(Error::arg("state width does not match the oracle layout"));
        }
        let base = self.workspace_base();
        Ok((0..self.search_size())
            .map(|k| {
                let i = k | base;
                match self.layout.oracle_qubit {
                    Some(o) => (state.amplitude(i) - state.amplitude(i | (1 << o))) * FRAC_1_SQRT_2,
                    None => state.amplitude(i),
                }
            })
            .collect())
    }

    /// Same oracle over one extra index qubit whose upper half is padded
    /// with entries that never satisfy the predicate. Used to guarantee
    /// `M <= N/2`.
    pub fn doubled(&self) -> Result<OracleCircuit> {
        match &self.source {
            OracleSource::Direct { marked } => direct_marking_oracle(self.n + 1, marked),
            OracleSource::Condition(c) => condition_oracle(&c.doubled()),
        }
    }
}

/// Single list: marks `k` with `s_k > threshold`. Layout `n + 2t + 1`.
pub fn single_list_oracle(table: &ValueTable, threshold: u64) -> Result<OracleCircuit> {
    condition_oracle(&ConditionSpec::gt(table.clone(), threshold))
}

/// Single list with an arbitrary comparison against the threshold.
pub fn single_list_oracle_with(
    table: &ValueTable,
    cmp: Comparison,
    threshold: u64,
) -> Result<OracleCircuit> {
    condition_oracle(&ConditionSpec::atom(table.clone(), cmp, threshold))
}

/// Two lists: marks `k` with `r_k > s1 AND σ_k < s2`. Layout `2n + 4t + 3`.
pub fn two_list_oracle(
    returns: &ValueTable,
    sigmas: &ValueTable,
    s1: u64,
    s2: u64,
) -> Result<OracleCircuit> {
    if returns.n() != sigmas.n() || returns.t() != sigmas.t() {
        return Err(Error::arg("return and risk tables must share n and t"));
    }
    condition_oracle(&ConditionSpec::And(vec![
        ConditionSpec::gt(returns.clone(), s1),
        ConditionSpec::lt(sigmas.clone(), s2),
    ]))
}

/// Phase flip on exactly the `marked` indices of an n-qubit index register.
pub fn direct_marking_oracle(n: usize, marked: &BTreeSet<usize>) -> Result<OracleCircuit> {
    if n == 0 {
        return Err(Error::arg("index register needs at least one qubit"));
    }
    let size = 1usize << n;
    if let Some(k) = marked.iter().find(|&&k| k >= size) {
        return Err(Error::arg(format!("marked index {k} outside [0, {size})")));
    }
    let mut mask = vec![false; size];
    marked.iter().for_each(|&k| mask[k] = true);
    let turns: Vec<f64> = mask.iter().map(|&m| if m { 0.5 } else { 0.0 }).collect();
    let index: Vec<usize> = (0..n).collect();
    let mut circuit = Circuit::new(n);
    circuit.diagonal_phase(&[], &index, &turns)?;
    Ok(OracleCircuit {
        circuit,
        layout: OracleLayout::phase_only(n),
        n,
        marked: mask,
        source: OracleSource::Direct {
            marked: marked.clone(),
        },
    })
}

struct Allocator(usize);

impl Allocator {
    fn take(&mut self, k: usize) -> Vec<usize> {
        let r = (self.0..self.0 + k).collect();
        self.0 += k;
        r
    }

    fn one(&mut self) -> usize {
        self.take(1)[0]
    }
}

/// General condition oracle. Each atom after the first reads its own
/// fan-out copy of the index; each atom has an estimate and a threshold
/// register; multi-atom conditions write per-atom outcome qubits that the
/// root combiner folds onto the oracle qubit.
pub fn condition_oracle(cond: &ConditionSpec) -> Result<OracleCircuit> {
    let (n, t) = cond.validate()?;
    let atoms = cond.atoms();
    let single = matches!(cond, ConditionSpec::Atom(_));

    let mut alloc = Allocator(0);
    let index = alloc.take(n);
    let index_copies: Vec<Vec<usize>> = (1..atoms.len()).map(|_| alloc.take(n)).collect();
    let mut estimates = Vec::new();
    let mut thresholds = Vec::new();
    for _ in &atoms {
        estimates.push(alloc.take(t));
        thresholds.push(alloc.take(t));
    }
    let outcomes = if single {
        Vec::new()
    } else {
        alloc.take(atoms.len())
    };
    let ancillas = alloc.take(cond.inner_nodes(true));
    let oracle_qubit = alloc.one();
    let layout = OracleLayout {
        num_qubits: alloc.0,
        index,
        index_copies,
        estimates,
        thresholds,
        outcomes,
        ancillas,
        oracle_qubit: Some(oracle_qubit),
    };
    let nq = layout.num_qubits;

    let mut compute = Circuit::new(nq);
    for copy in &layout.index_copies {
        for (&src, &dst) in layout.index.iter().zip(copy) {
            compute.cx(src, dst)?;
        }
    }
    for (j, atom) in atoms.iter().enumerate() {
        let target = if j == 0 {
            &layout.index
        } else {
            &layout.index_copies[j - 1]
        };
        compute.extend(&phase_estimation_circuit(
            nq,
            &layout.estimates[j],
            &atom.table.turns(),
            target,
        )?)?;
    }
    let mut mark = Circuit::new(nq);
    if single {
        let a = atoms[0];
        mark.extend(&compare_on(
            a.cmp,
            nq,
            &layout.estimates[0],
            &layout.thresholds[0],
            oracle_qubit,
        )?)?;
    } else {
        for (j, a) in atoms.iter().enumerate() {
            compute.extend(&compare_on(
                a.cmp,
                nq,
                &layout.estimates[j],
                &layout.thresholds[j],
                layout.outcomes[j],
            )?)?;
        }
        let mut next_atom = 0;
        let mut next_ancilla = 0;
        let root = combine_tree(
            cond,
            &layout,
            &mut compute,
            &mut next_atom,
            &mut next_ancilla,
        )?;
        // root is an And/Or: its inputs are ready, fold them onto the oracle
        let (inputs, is_and) = root;
        let combiner = if is_and {
            and_combiner(nq, &inputs, oracle_qubit)?
        } else {
            or_combiner(nq, &inputs, oracle_qubit)?
        };
        mark.extend(&combiner)?;
    }

    let mut circuit = compute.clone();
    circuit.extend(&mark)?;
    circuit.extend(&compute.inverse())?;

    let marked = (0..1usize << n).map(|k| cond.evaluate(k)).collect();
    debug_assert_eq!(
        {
            let mut q = layout.all_qubits();
            q.sort_unstable();
            q
        },
        (0..nq).collect::<Vec<_>>()
    );
    Ok(OracleCircuit {
        circuit,
        layout,
        n,
        marked,
        source: OracleSource::Condition(cond.clone()),
    })
}

/// Emit combiners for every inner node of `node` (depth first) and return
/// the root's input qubits and whether it is an AND.
fn combine_tree(
    node: &ConditionSpec,
    layout: &OracleLayout,
    compute: &mut Circuit,
    next_atom: &mut usize,
    next_ancilla: &mut usize,
) -> Result<(Vec<usize>, bool)> {
    fn child_qubit(
        node: &ConditionSpec,
        layout: &OracleLayout,
        compute: &mut Circuit,
        next_atom: &mut usize,
        next_ancilla: &mut usize,
    ) -> Result<usize> {
        match node {
            ConditionSpec::Atom(_) => {
                let q = layout.outcomes[*next_atom];
                *next_atom += 1;
                Ok(q)
            }
            ConditionSpec::And(_) | ConditionSpec::Or(_) => {
                let (inputs, is_and) =
                    combine_tree(node, layout, compute, next_atom, next_ancilla)?;
                let target = layout.ancillas[*next_ancilla];
                *next_ancilla += 1;
                let nq = compute.num_qubits();
                let c = if is_and {
                    and_combiner(nq, &inputs, target)?
                } else {
                    or_combiner(nq, &inputs, target)?
                };
                compute.extend(&c)?;
                Ok(target)
            }
        }
    }

    let (children, is_and) = match node {
        ConditionSpec::And(cs) => (cs, true),
        ConditionSpec::Or(cs) => (cs, false),
        ConditionSpec::Atom(_) => unreachable!("atoms are handled by the caller"),
    };
    let mut inputs = Vec::with_capacity(children.len());
    for c in children {
        inputs.push(child_qubit(c, layout, compute, next_atom, next_ancilla)?);
    }
    Ok((inputs, is_and))
}

/// Reflection `2|ψ⟩⟨ψ| − I` about the uniform superposition of `index`,
/// exact including global phase.
pub fn diffusion_on(num_qubits: usize, index: &[usize]) -> Result<Circuit> {
    if index.is_empty() {
        return Err(Error::arg("diffusion needs at least one index qubit"));
    }
    let mut c = Circuit::new(num_qubits);
    for &q in index {
        c.h(q)?;
    }
    let mut turns = vec![0.5; 1usize << index.len()];
    turns[0] = 0.0;
    c.diagonal_phase(&[], index, &turns)?;
    for &q in index {
        c.h(q)?;
    }
    Ok(c)
}

pub fn diffusion_circuit(n: usize) -> Result<Circuit> {
    diffusion_on(n, &(0..n).collect::<Vec<_>>())
}

/// Oracle followed by diffusion on the index register.
pub fn grover_operator(oracle: &OracleCircuit) -> Result<Circuit> {
    let mut g = oracle.circuit().clone();
    g.extend(&diffusion_on(oracle.num_qubits(), &oracle.layout().index)?)?;
    Ok(g)
}

/// Index-only Grover state. Valid whenever the oracle acts on the index as
/// an exact sign flip, which holds for quantized tables because phase
/// estimation of exact t-bit phases is exact and all workspace is
/// uncomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveState {
    amps: Vec<f64>,
}

impl EffectiveState {
    /// Uniform superposition over `2^n` indices.
    pub fn new(n: usize) -> Self {
        let size = 1usize << n;
        EffectiveState {
            amps: vec![1.0 / (size as f64).sqrt(); size],
        }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a * a).collect()
    }

    pub fn marked_mass(&self, marked: &[bool]) -> f64 {
        self.amps
            .iter()
            .zip(marked)
            .filter(|(_, &m)| m)
            .map(|(a, _)| a * a)
            .sum()
    }

    /// Negate marked amplitudes, then reflect everything about the mean.
    pub fn grover_step(&mut self, marked: &[bool]) {
        for (a, &m) in self.amps.iter_mut().zip(marked) {
            if m {
                *a = -*a;
            }
        }
        let mean = self.amps.iter().sum::<f64>() / self.amps.len() as f64;
        for a in &mut self.amps {
            *a = 2.0 * mean - *a;
        }
    }
}

pub fn effective_state_new(n: usize) -> EffectiveState {
    EffectiveState::new(n)
}

pub fn effective_grover_step(
    state: &EffectiveState,
    marked: &BTreeSet<usize>,
) -> Result<EffectiveState> {
    if let Some(k) = marked.iter().find(|&&k| k >= state.len()) {
        return Err(Error::arg(format!(
            "marked index {k} outside the search space"
        )));
    }
    let mut mask = vec![false; state.len()];
    marked.iter().for_each(|&k| mask[k] = true);
    let mut next = state.clone();
    next.grover_step(&mask);
    Ok(next)
}
