//! Grover iteration planning, exponential search, adaptive minimum/maximum
//! search, and quantum counting.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::comparator::Comparison;
use crate::error::{Error, Result};
use crate::oracle::{
    grover_operator, single_list_oracle_with, EffectiveState, OracleCircuit, ValueTable,
};
use crate::qsim::{inverse_qft_circuit, sample_index, Circuit, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Full statevector over every register of the oracle circuit.
    Dense,
    /// Index amplitudes only (see [`EffectiveState`]).
    #[default]
    Effective,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Backend::Dense),
            "effective" => Ok(Backend::Effective),
            other => Err(Error::arg(format!("unknown backend `{other}`"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Dense => "dense",
            Backend::Effective => "effective",
        })
    }
}

/// `θ = 2·arcsin√(M/N)`.
pub fn grover_angle(n_items: usize, n_solutions: usize) -> Result<f64> {
    if n_solutions == 0 {
        return Err(Error::arg("Grover angle is undefined without solutions"));
    }
    if n_solutions > n_items {
        return Err(Error::arg(format!(
            "{n_solutions} solutions among {n_items} items"
        )));
    }
    Ok(2.0 * (n_solutions as f64 / n_items as f64).sqrt().asin())
}

/// Closest integer, halves rounded down.
pub fn closest_integer(x: f64) -> i64 {
    (x - 0.5).ceil() as i64
}

/// `CI(π/(2θ) − 1/2)`.
pub fn iteration_count(n_items: usize, n_solutions: usize) -> Result<usize> {
    if n_solutions == 0 || 2 * n_solutions > n_items {
        return Err(Error::arg(format!(
            "iteration count needs 1 <= M <= N/2 (M={n_solutions}, N={n_items})"
        )));
    }
    let theta = grover_angle(n_items, n_solutions)?;
    Ok(closest_integer(FRAC_PI_2 / theta - 0.5).max(0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroverPlan {
    pub n_items: usize,
    pub n_solutions: usize,
    pub theta: f64,
    pub iterations: usize,
}

impl GroverPlan {
    pub fn new(n_items: usize, n_solutions: usize) -> Result<Self> {
        Ok(GroverPlan {
            n_items,
            n_solutions,
            theta: grover_angle(n_items, n_solutions)?,
            iterations: iteration_count(n_items, n_solutions)?,
        })
    }

    /// Probability of measuring a solution after `iterations` rotations.
    pub fn success_probability(&self) -> f64 {
        ((2 * self.iterations + 1) as f64 * self.theta / 2.0)
            .sin()
            .powi(2)
    }
}

/// Runs Grover iterations from |ψ⟩ on either backend. The dense Grover
/// circuit and start state are built once and reused.
pub struct GroverRunner<'a> {
    oracle: &'a OracleCircuit,
    dense: Option<(StateVector, Circuit)>,
}

impl<'a> GroverRunner<'a> {
    pub fn new(oracle: &'a OracleCircuit, backend: Backend) -> Result<Self> {
        let dense = match backend {
            Backend::Dense => Some((oracle.initial_state()?, grover_operator(oracle)?)),
            Backend::Effective => None,
        };
        Ok(GroverRunner { oracle, dense })
    }

    /// Exact distribution of the index register after `iterations` steps.
    pub fn index_distribution(&self, iterations: usize) -> Result<Vec<f64>> {
        match &self.dense {
            Some((init, g)) => {
                let s = self.dense_state(init, g, iterations)?;
                s.subregister_distribution(&self.oracle.layout().index)
            }
            None => Ok(self.effective_state(iterations).probabilities()),
        }
    }

    /// Index amplitudes after `iterations` steps.
    pub fn index_amplitudes(&self, iterations: usize) -> Result<Vec<Complex64>> {
        match &self.dense {
            Some((init, g)) => {
                let s = self.dense_state(init, g, iterations)?;
                self.oracle.index_amplitudes(&s)
            }
            None => Ok(self
                .effective_state(iterations)
                .amplitudes()
                .iter()
                .map(|&a| Complex64::new(a, 0.0))
                .collect()),
        }
    }

    /// Apply `iterations` Grover steps and measure the index register.
    pub fn sample<R: Rng + ?Sized>(&self, iterations: usize, rng: &mut R) -> Result<usize> {
        match &self.dense {
            Some((init, g)) => {
                let mut s = self.dense_state(init, g, iterations)?;
                s.measure_subregister(&self.oracle.layout().index, rng)
            }
            None => {
                let p = self.effective_state(iterations).probabilities();
                sample_index(&p, rng)
                    .ok_or_else(|| Error::Internal("index distribution has no mass".into()))
            }
        }
    }

    fn dense_state(
        &self,
        init: &StateVector,
        g: &Circuit,
        iterations: usize,
    ) -> Result<StateVector> {
        let mut s = init.clone();
        for _ in 0..iterations {
            s.apply_circuit(g)?;
        }
        Ok(s)
    }

    fn effective_state(&self, iterations: usize) -> EffectiveState {
        let mut s = EffectiveState::new(self.oracle.n());
        for _ in 0..iterations {
            s.grover_step(self.oracle.marked_mask());
        }
        s
    }
}

/// Apply `iterations` Grover steps to |ψ⟩ and measure the index register.
pub fn grover_search<R: Rng + ?Sized>(
    oracle: &OracleCircuit,
    iterations: usize,
    rng: &mut R,
    backend: Backend,
) -> Result<usize> {
    GroverRunner::new(oracle, backend)?.sample(iterations, rng)
}

/// Budget of `5·⌈√N⌉` Grover iterations per exponential search.
pub fn default_qes_budget(n_items: usize) -> usize {
    5 * (n_items as f64).sqrt().ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QesConfig {
    /// Cumulative Grover iterations allowed before giving up.
    pub budget: usize,
    pub backend: Backend,
}

impl QesConfig {
    pub fn for_size(n_items: usize, backend: Backend) -> Self {
        QesConfig {
            budget: default_qes_budget(n_items),
            backend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QesRound {
    pub iterations: usize,
    pub measured: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchOutcome {
    pub found_index: Option<usize>,
    /// Total Grover iterations executed.
    pub oracle_calls: usize,
    pub rounds: Vec<QesRound>,
}

impl SearchOutcome {
    pub fn timed_out(&self) -> bool {
        self.found_index.is_none()
    }
}

/// Exponential search with growth factor 8/7.
///
/// Each round draws `j` uniformly from `[0, m)`, runs `j` Grover
/// iterations, measures, and stops on a solution; otherwise
/// `m ← min(8m/7, √N)`. A round's `j` is clipped to what is left of the
/// budget, so `oracle_calls` never exceeds it; the search times out once
/// the budget is spent.
pub fn qes<R: Rng + ?Sized>(
    oracle: &OracleCircuit,
    rng: &mut R,
    config: QesConfig,
) -> Result<SearchOutcome> {
    if config.budget == 0 {
        return Err(Error::arg("exponential search budget must be positive"));
    }
    let runner = GroverRunner::new(oracle, config.backend)?;
    let sqrt_n = (oracle.search_size() as f64).sqrt();
    let lambda = 8.0 / 7.0;
    let mut m: f64 = 1.0;
    let mut calls = 0usize;
    let mut rounds = Vec::new();
    loop {
        let upper = (m.ceil() as usize).max(1);
        let j = rng.gen_range(0..upper).min(config.budget - calls);
        let measured = runner.sample(j, rng)?;
        calls += j;
        let accepted = oracle.predicate(measured);
        rounds.push(QesRound {
            iterations: j,
            measured,
            accepted,
        });
        if accepted {
            return Ok(SearchOutcome {
                found_index: Some(measured),
                oracle_calls: calls,
                rounds,
            });
        }
        if calls >= config.budget {
            return Ok(SearchOutcome {
                found_index: None,
                oracle_calls: calls,
                rounds,
            });
        }
        m = (lambda * m).min(sqrt_n);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    fn comparison(self) -> Comparison {
        match self {
            Direction::Min => Comparison::Less,
            Direction::Max => Comparison::Greater,
        }
    }

    fn better(self, a: u64, b: u64) -> bool {
        self.comparison().holds(a, b)
    }
}

/// `22.5·√N + 1.4·log₂²N` oracle calls.
pub fn gas_budget(n_items: usize) -> f64 {
    let log = (n_items as f64).log2();
    22.5 * (n_items as f64).sqrt() + 1.4 * log * log
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasConfig {
    pub repetitions: usize,
    pub backend: Backend,
    /// Per-invocation exponential search budget; defaults to `5·⌈√N⌉`.
    pub qes_budget: Option<usize>,
    /// Run a detect-mode count before every exponential search and stop
    /// when it reports no better item.
    pub counting_termination: bool,
}

impl Default for GasConfig {
    fn default() -> Self {
        GasConfig {
            repetitions: 1,
            backend: Backend::Effective,
            qes_budget: None,
            counting_termination: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GasRepetition {
    pub start: usize,
    pub index: usize,
    /// Grover iterations spent inside exponential searches.
    pub oracle_calls: usize,
    /// Controlled Grover applications spent on termination checks.
    pub counting_calls: usize,
    pub searches: usize,
    pub stopped_by_counting: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GasOutcome {
    pub index: usize,
    pub value: u64,
    pub repetitions: Vec<GasRepetition>,
}

impl GasOutcome {
    pub fn oracle_calls_total(&self) -> usize {
        self.repetitions.iter().map(|r| r.oracle_calls).sum()
    }
}

/// Adaptive search for the extremum of `values`, repeated `c` times with
/// the best result kept. Each repetition gets its own generator seeded from
/// `rng`, so repetitions run in parallel without affecting the result.
pub fn gas<R: Rng + ?Sized>(
    values: &ValueTable,
    direction: Direction,
    rng: &mut R,
    config: GasConfig,
) -> Result<GasOutcome> {
    if config.repetitions == 0 {
        return Err(Error::arg("at least one repetition is required"));
    }
    let seeds: Vec<u64> = (0..config.repetitions).map(|_| rng.gen()).collect();
    let reps = seeds
        .par_iter()
        .map(|&seed| {
            gas_once(
                values,
                direction,
                &mut ChaCha8Rng::seed_from_u64(seed),
                &config,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = reps[0].index;
    for r in &reps[1..] {
        if direction.better(values.get(r.index), values.get(best)) {
            best = r.index;
        }
    }
    Ok(GasOutcome {
        index: best,
        value: values.get(best),
        repetitions: reps,
    })
}

fn gas_once<R: Rng + ?Sized>(
    values: &ValueTable,
    direction: Direction,
    rng: &mut R,
    config: &GasConfig,
) -> Result<GasRepetition> {
    let n_items = values.len();
    let budget = gas_budget(n_items).floor() as usize;
    let qes_budget = config
        .qes_budget
        .unwrap_or_else(|| default_qes_budget(n_items));
    let start = rng.gen_range(0..n_items);
    let mut rep = GasRepetition {
        start,
        index: start,
        oracle_calls: 0,
        counting_calls: 0,
        searches: 0,
        stopped_by_counting: false,
    };
    while rep.oracle_calls < budget {
        let oracle =
            single_list_oracle_with(values, direction.comparison(), values.get(rep.index))?;
        if config.counting_termination {
            let m = m_detect(n_items)?;
            let est = quantum_counting(&oracle, m, config.backend, rng)?;
            rep.counting_calls += (1 << m) - 1;
            if est.m_rounded == 0 {
                rep.stopped_by_counting = true;
                break;
            }
        }
        let out = qes(
            &oracle,
            rng,
            QesConfig {
                budget: qes_budget.min(budget - rep.oracle_calls),
                backend: config.backend,
            },
        )?;
        rep.oracle_calls += out.oracle_calls;
        rep.searches += 1;
        if let Some(i) = out.found_index {
            if direction.better(values.get(i), values.get(rep.index)) {
                rep.index = i;
            }
        }
    }
    Ok(rep)
}

/// `⌈log₂N + 1/2⌉` counting qubits: rounding the estimate recovers `M`.
pub fn m_exact(n_items: usize) -> Result<usize> {
    check_power_of_two(n_items)?;
    Ok(((n_items as f64).log2() + 0.5).ceil() as usize)
}

/// `⌈log₂N / 2 + 1.583⌉` counting qubits: enough to tell zero, one and
/// several solutions apart.
pub fn m_detect(n_items: usize) -> Result<usize> {
    check_power_of_two(n_items)?;
    Ok(((n_items as f64).log2() / 2.0 + 1.583).ceil() as usize)
}

fn check_power_of_two(n_items: usize) -> Result<()> {
    if n_items < 2 || !n_items.is_power_of_two() {
        return Err(Error::arg(format!(
            "N={n_items} must be a power of two >= 2"
        )));
    }
    Ok(())
}

/// `2^{-m}·(√(N·M) + N/4·2^{-m})`.
pub fn delta_m_bound(n_items: usize, n_solutions: f64, m: usize) -> f64 {
    let scale = 0.5f64.powi(m as i32);
    scale * ((n_items as f64 * n_solutions).sqrt() + n_items as f64 / 4.0 * scale)
}

/// `⌈log₂(1/d)⌉` phase bits resolve values at distance `d`.
pub fn t_for_resolution(d: f64) -> Result<usize> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::arg(format!("resolution {d} must lie in (0, 1]")));
    }
    let bits = (1.0 / d).log2();
    let rounded = bits.round();
    // exact powers of two must not pick up a spurious extra bit
    if (bits - rounded).abs() < 1e-9 {
        Ok(rounded as usize)
    } else {
        Ok(bits.ceil() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionClass {
    None,
    Single,
    Multiple,
}

impl SolutionClass {
    pub fn of(count: usize) -> Self {
        match count {
            0 => SolutionClass::None,
            1 => SolutionClass::Single,
            _ => SolutionClass::Multiple,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountEstimate {
    pub n_items: usize,
    /// Counting qubits.
    pub m: usize,
    /// Measured counting register.
    pub b: usize,
    pub theta_est: f64,
    pub m_est: f64,
    pub m_rounded: usize,
    /// Error bound evaluated at the estimate.
    pub bound: f64,
    /// Exact outcome distribution over `b`.
    #[serde(skip)]
    pub distribution: Vec<f64>,
}

impl CountEstimate {
    pub fn from_outcome(n_items: usize, m: usize, b: usize) -> Self {
        let frac = b as f64 / (1u64 << m) as f64;
        let theta_est = TAU * frac;
        // N·sin²(πf) = N(1 - cos 2πf)/2 with f folded into [0, 1/2] so that
        // b and 2^m - b agree, and the cosine taken as -sin(2π(f - 1/4)) so
        // that f = 0, 1/4, 1/2 come out exact.
        let folded = frac.min(1.0 - frac);
        let m_est = n_items as f64 * (1.0 + (TAU * (folded - 0.25)).sin()) / 2.0;
        CountEstimate {
            n_items,
            m,
            b,
            theta_est,
            m_est,
            m_rounded: m_est.round() as usize,
            bound: delta_m_bound(n_items, m_est, m),
            distribution: Vec::new(),
        }
    }

    pub fn class(&self) -> SolutionClass {
        SolutionClass::of(self.m_rounded)
    }
}

/// Rounded solution count reported by outcome `b`.
pub fn rounded_count(n_items: usize, m: usize, b: usize) -> usize {
    CountEstimate::from_outcome(n_items, m, b).m_rounded
}

/// Exact distribution of the counting register after phase estimation of
/// the Grover operator with `m` counting qubits.
///
/// The effective backend simulates the counting register together with one
/// qubit spanning the Grover plane, where the operator is a rotation by θ.
/// The dense backend lifts the full oracle workspace and applies
/// `controlled-G` `2^j` times for counting qubit `j`.
pub fn counting_distribution(
    oracle: &OracleCircuit,
    m: usize,
    backend: Backend,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::arg("counting needs at least one qubit"));
    }
    match backend {
        Backend::Effective => {
            let theta = match oracle.marked_count() {
                0 => 0.0,
                k => grover_angle(oracle.search_size(), k)?,
            };
            plane_counting_distribution(theta, m)
        }
        Backend::Dense => dense_counting_distribution(oracle, m),
    }
}

fn rotation(angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// Counting on `m` qubits plus a plane qubit (|0⟩ = non-solutions,
/// |1⟩ = solutions) starting at angle θ/2.
fn plane_counting_distribution(theta: f64, m: usize) -> Result<Vec<f64>> {
    let plane = m;
    let counting: Vec<usize> = (0..m).collect();
    let mut c = Circuit::new(m + 1);
    c.unitary(plane, rotation(theta / 2.0))?;
    for &q in &counting {
        c.h(q)?;
    }
    for (j, &q) in counting.iter().enumerate() {
        let power = (1u64 << j) as f64;
        let mut g = Circuit::new(m + 1);
        g.unitary(plane, rotation((theta * power).rem_euclid(TAU)))?;
        c.extend(&g.controlled(&[q])?)?;
    }
    c.extend(&inverse_qft_circuit(m + 1, &counting)?)?;
    let mut s = StateVector::new_basis_state(m + 1, 0)?;
    s.apply_circuit(&c)?;
    s.subregister_distribution(&counting)
}

fn dense_counting_distribution(oracle: &OracleCircuit, m: usize) -> Result<Vec<f64>> {
    let base = oracle.num_qubits();
    let total = base + m;
    let identity: Vec<usize> = (0..base).collect();
    let counting: Vec<usize> = (base..total).collect();
    let mut s = StateVector::new_basis_state(total, 0)?;
    s.apply_circuit(&oracle.preparation_circuit()?.embed(total, &identity)?)?;
    let mut hs = Circuit::new(total);
    for &q in &counting {
        hs.h(q)?;
    }
    s.apply_circuit(&hs)?;
    let g = grover_operator(oracle)?.embed(total, &identity)?;
    for (j, &q) in counting.iter().enumerate() {
        let cg = g.controlled(&[q])?;
        for _ in 0..1u64 << j {
            s.apply_circuit(&cg)?;
        }
    }
    s.apply_circuit(&inverse_qft_circuit(total, &counting)?)?;
    s.subregister_distribution(&counting)
}

/// Quantum counting: exact outcome distribution plus one seeded sample.
pub fn quantum_counting<R: Rng + ?Sized>(
    oracle: &OracleCircuit,
    m: usize,
    backend: Backend,
    rng: &mut R,
) -> Result<CountEstimate> {
    let distribution = counting_distribution(oracle, m, backend)?;
    let b = sample_index(&distribution, rng)
        .ok_or_else(|| Error::Internal("counting distribution has no mass".into()))?;
    let mut est = CountEstimate::from_outcome(oracle.search_size(), m, b);
    est.distribution = distribution;
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnumerateConfig {
    pub backend: Backend,
    /// Independent counting runs; the median rounded estimate is used.
    pub counting_shots: usize,
    /// Consecutive Grover runs without a new solution before giving up
    /// short of the counted total.
    pub stall_limit: usize,
    /// Consecutive runs without a new solution required to stop once the
    /// counted total has been reached. Rounded counts can fall short of the
    /// true count, so collection only ends after this confirmation.
    pub confirm_runs: usize,
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        EnumerateConfig {
            backend: Backend::Effective,
            counting_shots: 5,
            stall_limit: 64,
            confirm_runs: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumeration {
    pub solutions: BTreeSet<usize>,
    pub count: CountEstimate,
    /// The search space was doubled because counting reported `M > N/2`.
    pub doubled: bool,
    pub grover_runs: usize,
    /// Grover iterations across all search runs.
    pub oracle_calls: usize,
    /// Controlled Grover applications across all counting runs.
    pub counting_calls: usize,
}

impl Enumeration {
    /// Counting promised more solutions than the searches found.
    pub fn incomplete(&self) -> bool {
        self.solutions.len() < self.count.m_rounded
    }
}

fn median_count<R: Rng + ?Sized>(
    oracle: &OracleCircuit,
    m: usize,
    config: &EnumerateConfig,
    rng: &mut R,
) -> Result<CountEstimate> {
    let distribution = counting_distribution(oracle, m, config.backend)?;
    let mut shots: Vec<CountEstimate> = (0..config.counting_shots.max(1))
        .map(|_| {
            let b = sample_index(&distribution, rng)
                .ok_or_else(|| Error::Internal("counting distribution has no mass".into()))?;
            Ok(CountEstimate::from_outcome(oracle.search_size(), m, b))
        })
        .collect::<Result<_>>()?;
    shots.sort_by_key(|e| e.m_rounded);
    let mut est = shots.swap_remove(shots.len() / 2);
    est.distribution = distribution;
    Ok(est)
}

/// Find every solution: count them with `m_exact(N)` counting qubits
/// (doubling the space when the count exceeds `N/2`), then repeat plain
/// Grover search with the matching iteration count until that many distinct
/// solutions have been seen and `confirm_runs` further runs turn up nothing
/// new.
pub fn enumerate_solutions<R: Rng + ?Sized>(
    oracle: &OracleCircuit,
    rng: &mut R,
    config: EnumerateConfig,
) -> Result<Enumeration> {
    let n_items = oracle.search_size();
    let shots = config.counting_shots.max(1);
    let mut m = m_exact(n_items)?;
    let mut count = median_count(oracle, m, &config, rng)?;
    let mut counting_calls = shots * ((1usize << m) - 1);
    let mut doubled_oracle = None;
    if 2 * count.m_rounded > n_items {
        let d = oracle.doubled()?;
        m = m_exact(d.search_size())?;
        count = median_count(&d, m, &config, rng)?;
        counting_calls += shots * ((1usize << m) - 1);
        doubled_oracle = Some(d);
    }
    let search_oracle = doubled_oracle.as_ref().unwrap_or(oracle);
    let space = search_oracle.search_size();
    let mut out = Enumeration {
        solutions: BTreeSet::new(),
        count,
        doubled: doubled_oracle.is_some(),
        grover_runs: 0,
        oracle_calls: 0,
        counting_calls,
    };
    let target = out.count.m_rounded.min(space / 2);
    if target == 0 {
        return Ok(out);
    }
    let iterations = iteration_count(space, target)?;
    let runner = GroverRunner::new(search_oracle, config.backend)?;
    let mut stall = 0;
    loop {
        let limit = if out.solutions.len() < target {
            config.stall_limit
        } else {
            config.confirm_runs
        };
        if stall >= limit {
            break;
        }
        let i = runner.sample(iterations, rng)?;
        out.grover_runs += 1;
        out.oracle_calls += iterations;
        if !search_oracle.predicate(i) {
            stall += 1;
            continue;
        }
        if i >= n_items {
            return Err(Error::Internal(format!(
                "padding index {i} reported as a solution"
            )));
        }
        if out.solutions.insert(i) {
            stall = 0;
        } else {
            stall += 1;
        }
    }
    Ok(out)
}

/// Probability mass of `distribution` on outcomes whose rounded count
/// equals `n_solutions`.
pub fn mass_rounding_to(distribution: &[f64], n_items: usize, m: usize, n_solutions: usize) -> f64 {
    distribution
        .iter()
        .enumerate()
        .filter(|&(b, _)| rounded_count(n_items, m, b) == n_solutions)
        .fold(0.0, |acc, (_, p)| acc + p)
}

/// Angle helper used by tests and the CLI: `θ/2π` for `M` of `N`.
pub fn grover_phase(n_items: usize, n_solutions: usize) -> f64 {
    if n_solutions == 0 {
        return 0.0;
    }
    2.0 * (n_solutions as f64 / n_items as f64).sqrt().asin() / TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{direct_marking_oracle, single_list_oracle};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn angles() {
        assert_abs_diff_eq!(grover_angle(4, 1).unwrap(), PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grover_angle(16, 16).unwrap(), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(grover_angle(8, 1).unwrap(), 0.722734, epsilon = 1e-6);
        assert!(grover_angle(8, 0).is_err());
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(iteration_count(4, 1).unwrap(), 1);
        assert_eq!(iteration_count(8, 1).unwrap(), 2);
        assert!(iteration_count(8, 0).is_err());
        assert!(iteration_count(8, 5).is_err());
    }

    #[test]
    fn halves_round_down() {
        assert_eq!(closest_integer(2.5), 2);
        assert_eq!(closest_integer(0.5), 0);
        assert_eq!(closest_integer(2.5000001), 3);
        assert_eq!(closest_integer(1.49), 1);
        assert_eq!(closest_integer(1.6733), 2);
    }

    #[test]
    fn grover_search_probabilities() {
        let o = direct_marking_oracle(2, &[1].into()).unwrap();
        for backend in [Backend::Dense, Backend::Effective] {
            let r = GroverRunner::new(&o, backend).unwrap();
            assert!((r.index_distribution(1).unwrap()[1] - 1.0).abs() < 1e-9);
            assert!(r
                .index_distribution(0)
                .unwrap()
                .iter()
                .all(|p| (p - 0.25).abs() < 1e-12));
            assert_eq!(grover_search(&o, 1, &mut rng(3), backend).unwrap(), 1);
        }
        let o = direct_marking_oracle(3, &[6].into()).unwrap();
        let p = GroverRunner::new(&o, Backend::Effective)
            .unwrap()
            .index_distribution(2)
            .unwrap()[6];
        let theta = grover_angle(8, 1).unwrap();
        assert_abs_diff_eq!(p, (2.5 * theta).sin().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.9453125, epsilon = 1e-9);
    }

    #[test]
    fn qes_edge_cases() {
        let all = direct_marking_oracle(3, &(0..8).collect()).unwrap();
        let out = qes(
            &all,
            &mut rng(1),
            QesConfig::for_size(8, Backend::Effective),
        )
        .unwrap();
        assert_eq!(out.oracle_calls, 0);
        assert_eq!(out.rounds.len(), 1);
        assert!(out.found_index.is_some());

        let none = direct_marking_oracle(3, &BTreeSet::new()).unwrap();
        let cfg = QesConfig::for_size(8, Backend::Effective);
        let out = qes(&none, &mut rng(1), cfg).unwrap();
        assert!(out.timed_out());
        assert_eq!(out.oracle_calls, cfg.budget);

        assert!(qes(
            &none,
            &mut rng(1),
            QesConfig {
                budget: 0,
                backend: Backend::Effective
            }
        )
        .is_err());
    }

    #[test]
    fn qes_regression_n64() {
        let o = direct_marking_oracle(6, &[17].into()).unwrap();
        let out = qes(
            &o,
            &mut rng(2024),
            QesConfig::for_size(64, Backend::Effective),
        )
        .unwrap();
        assert_eq!(out.found_index, Some(17));
        assert!(out.oracle_calls <= 40);
        assert_eq!(
            out.oracle_calls,
            out.rounds.iter().map(|r| r.iterations).sum::<usize>()
        );
    }

    #[test]
    fn qes_dense_matches_predicate() {
        let t = ValueTable::new(3, vec![1, 5, 3, 7]).unwrap();
        let o = single_list_oracle(&t, 4).unwrap();
        for seed in 0..5 {
            let out = qes(&o, &mut rng(seed), QesConfig::for_size(4, Backend::Dense)).unwrap();
            if let Some(i) = out.found_index {
                assert!(o.predicate(i));
            }
        }
    }

    #[test]
    fn gas_small_tables() {
        let t = ValueTable::new(3, vec![1, 5, 3, 7]).unwrap();
        let cfg = GasConfig {
            repetitions: 3,
            ..GasConfig::default()
        };
        assert_eq!(gas(&t, Direction::Max, &mut rng(5), cfg).unwrap().index, 3);
        assert_eq!(gas(&t, Direction::Min, &mut rng(5), cfg).unwrap().index, 0);

        let flat = ValueTable::new(3, vec![4; 8]).unwrap();
        let out = gas(&flat, Direction::Max, &mut rng(5), cfg).unwrap();
        assert_eq!(out.value, 4);

        let with_counting = GasConfig {
            counting_termination: true,
            ..cfg
        };
        let out = gas(&t, Direction::Max, &mut rng(9), with_counting).unwrap();
        assert_eq!(out.index, 3);
        assert!(out
            .repetitions
            .iter()
            .all(|r| r.stopped_by_counting || r.oracle_calls == gas_budget(4) as usize));
    }

    #[test]
    fn gas_respects_budget() {
        let t = ValueTable::new(4, (0..16).map(|v| (v * 7) % 16).collect()).unwrap();
        let cfg = GasConfig {
            repetitions: 4,
            ..GasConfig::default()
        };
        let out = gas(&t, Direction::Max, &mut rng(11), cfg).unwrap();
        for r in &out.repetitions {
            assert!(r.oracle_calls as f64 <= gas_budget(16));
        }
    }

    #[test]
    fn gas_is_deterministic_per_seed() {
        let t = ValueTable::new(4, (0..16).map(|v| (v * 5) % 16).collect()).unwrap();
        let cfg = GasConfig {
            repetitions: 4,
            ..GasConfig::default()
        };
        let a = gas(&t, Direction::Max, &mut rng(1), cfg).unwrap();
        let b = gas(&t, Direction::Max, &mut rng(1), cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn counting_qubit_formulas() {
        assert_eq!(m_exact(8).unwrap(), 4);
        assert_eq!(m_exact(16).unwrap(), 5);
        assert_eq!(m_exact(1024).unwrap(), 11);
        assert_eq!(m_detect(8).unwrap(), 4);
        assert_eq!(m_detect(16).unwrap(), 4);
        assert_eq!(m_detect(1024).unwrap(), 7);
        assert!(m_exact(12).is_err());
        assert!(m_detect(1).is_err());
    }

    #[test]
    fn delta_m_bounds() {
        assert_abs_diff_eq!(delta_m_bound(16, 4.0, 5), 0.25390625, epsilon = 1e-15);
        assert_abs_diff_eq!(
            delta_m_bound(64, 0.0, 3),
            64.0 / 4.0 / 64.0,
            epsilon = 1e-15
        );
        let b = delta_m_bound(8, 4.0, 4);
        assert_abs_diff_eq!(b, (32f64.sqrt() + 2.0 / 16.0) / 16.0, epsilon = 1e-15);
        assert!(b < 0.5);
        assert_abs_diff_eq!(b, 0.3614, epsilon = 1e-4);
    }

    #[test]
    fn resolution_bits() {
        assert_eq!(t_for_resolution(0.01).unwrap(), 7);
        assert_eq!(t_for_resolution(0.5).unwrap(), 1);
        assert_eq!(t_for_resolution(1.0 / 256.0).unwrap(), 8);
        assert_eq!(t_for_resolution(1.0).unwrap(), 0);
        assert!(t_for_resolution(0.0).is_err());
        assert!(t_for_resolution(1.5).is_err());
    }

    #[test]
    fn counting_with_no_solutions_reads_zero() {
        let o = direct_marking_oracle(3, &BTreeSet::new()).unwrap();
        for backend in [Backend::Dense, Backend::Effective] {
            let est = quantum_counting(&o, 3, backend, &mut rng(0)).unwrap();
            assert!((est.distribution[0] - 1.0).abs() < 1e-9);
            assert_eq!(est.b, 0);
            assert_eq!(est.m_est, 0.0);
            assert!(est.bound > 0.0);
        }
    }

    #[test]
    fn counting_quarter_turn_is_exact() {
        let o = direct_marking_oracle(2, &[0, 3].into()).unwrap();
        for backend in [Backend::Dense, Backend::Effective] {
            let d = counting_distribution(&o, 2, backend).unwrap();
            assert!((d[1] + d[3] - 1.0).abs() < 1e-9, "{backend}: {d:?}");
            for b in [1, 3] {
                assert_abs_diff_eq!(
                    CountEstimate::from_outcome(4, 2, b).m_est,
                    2.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn dense_and_effective_counting_agree() {
        let t = ValueTable::new(2, vec![0, 3, 1, 2]).unwrap();
        let o = single_list_oracle(&t, 1).unwrap();
        let a = counting_distribution(&o, 3, Backend::Dense).unwrap();
        let b = counting_distribution(&o, 3, Backend::Effective).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn enumeration() {
        let none = direct_marking_oracle(3, &BTreeSet::new()).unwrap();
        let out = enumerate_solutions(&none, &mut rng(0), EnumerateConfig::default()).unwrap();
        assert!(out.solutions.is_empty());
        assert_eq!(out.grover_runs, 0);

        let two = direct_marking_oracle(3, &[1, 3].into()).unwrap();
        let out = enumerate_solutions(&two, &mut rng(0), EnumerateConfig::default()).unwrap();
        assert_eq!(out.solutions, [1, 3].into());

        let half = direct_marking_oracle(3, &[0, 2, 4, 6].into()).unwrap();
        let out = enumerate_solutions(&half, &mut rng(0), EnumerateConfig::default()).unwrap();
        assert_eq!(out.solutions, [0, 2, 4, 6].into());
        assert!(!out.doubled);

        let most = direct_marking_oracle(3, &(0..7).collect()).unwrap();
        let out = enumerate_solutions(&most, &mut rng(0), EnumerateConfig::default()).unwrap();
        assert!(out.doubled);
        assert_eq!(out.solutions, (0..7).collect());
    }
}
