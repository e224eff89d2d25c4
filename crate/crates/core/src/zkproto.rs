//! The relativistic zero-knowledge protocol for Hamiltonian Cycle.
//!
//! One round: V1 sends a uniform matrix B; P1 answers Y = A + B∘M_{Π(G)}
//! (entry-wise product, all n² entries committed including the diagonal);
//! V2 sends a challenge bit; P2 opens either the whole preprocessing (Π, A)
//! or one cycle's worth of entries. The verifier checks the algebra, the
//! revealed object, and the timing gate: P2's answer must reach V2 strictly
//! before light could carry B there.
//!
//! Soundness against classical pairs is computed exactly by scanning P2's
//! answer pairs and counting consistent B fractions; the quantum bound
//! 1/2 + (64·n!/Q)^{1/3} comes from the coupled-game machinery and is
//! evaluated here as a formula. Quantum cheating provers are never executed.
//!
//! The zero-knowledge simulator is a single forward pass with no rewinding:
//! Y uniform, then a uniform permutation or cycle patched to match the
//! verifier's view. At enumerable sizes the simulated transcript
//! distribution is compared against the real one exactly, as rationals.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::fq::{next_prime_at_least, FieldElement, FieldModulus, FqError, FqMatrix};
use crate::graphs::{enumerate_cycles, sample_cycle, Cycle, Graph, GraphError, Permutation};
use crate::spacetime::{
    nss_check, AgentId, EventKind, EventLog, SiteLayout, SpacetimeError, Timeline,
};
use crate::{subseed, SeededRng};

#[derive(Debug, Error)]
pub enum ZkError {
    #[error("the supplied cycle is not a Hamiltonian cycle of the graph")]
    InvalidWitness,
    #[error("graph is Hamiltonian; the soundness game needs a no-instance")]
    GraphIsHamiltonian,
    #[error("n = {0} exceeds the exact-analysis guard {1}")]
    TooLarge(usize, usize),
    #[error("k must be at least 1")]
    SecurityParameterTooSmall,
    #[error("n must be at least 3 for a cycle to exist")]
    GraphTooSmall,
    #[error("malformed transcript: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] FqError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

/// Witness-side preprocessing shared by both prover agents.
#[derive(Debug, Clone)]
pub struct ProverWitness {
    pub graph: Graph,
    pub cycle: Cycle,
    pub pi: Permutation,
    pub a: FqMatrix,
}

impl ProverWitness {
    pub fn new(
        graph: Graph,
        cycle: Cycle,
        q: &Arc<FieldModulus>,
        rng: &mut SeededRng,
    ) -> Result<Self, ZkError> {
        if !cycle.is_hamiltonian_in(&graph) {
            return Err(ZkError::InvalidWitness);
        }
        let n = graph.n();
        Ok(ProverWitness {
            graph,
            cycle,
            pi: Permutation::sample_uniform(n, rng),
            a: FqMatrix::sample_uniform(n, n, q, rng),
        })
    }
}

/// P2's message, matching the challenge bit.
#[derive(Debug, Clone, PartialEq)]
pub enum ProverAnswer {
    /// chall = 0: the full preprocessing.
    Open { pi: Permutation, a: FqMatrix },
    /// chall = 1: a cycle plus one opening per directed couple, in the
    /// cycle's canonical couple order.
    CycleOpen {
        cycle: Cycle,
        openings: Vec<FieldElement>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// chall = 0 algebra fails at entry (i, j), 0-indexed.
    #[serde(rename = "algebra-0")]
    Algebra0 { i: usize, j: usize },
    /// chall = 1 algebra fails at matrix entry (u, v), 1-indexed vertices.
    #[serde(rename = "algebra-1")]
    Algebra1 { u: usize, v: usize },
    BadPermutation,
    BadCycle,
    Timing,
    Malformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Everything a protocol round produced.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub n: usize,
    pub q: Arc<FieldModulus>,
    pub b: FqMatrix,
    pub y: FqMatrix,
    pub chall: u8,
    pub answer: ProverAnswer,
    /// Declared-and-trusted agent positions for this run.
    pub layout: SiteLayout,
    pub timeline: Timeline,
    pub verdict: Verdict,
}

impl Transcript {
    /// {n, q, B, Y, chall, answer:{type, pi|cycle, openings}, timeline,
    /// verdict, reason}.
    pub fn to_json(&self) -> serde_json::Value {
        let answer = match &self.answer {
            ProverAnswer::Open { pi, a } => json!({
                "type": "open",
                "pi": (1..=self.n).map(|i| pi.apply(i)).collect::<Vec<_>>(),
                "openings": a,
            }),
            ProverAnswer::CycleOpen { cycle, openings } => json!({
                "type": "cycle-open",
                "cycle": cycle.vertices(),
                "openings": cycle
                    .couples()
                    .zip(openings)
                    .map(|((u, v), val)| json!({"u": u, "v": v, "value": val}))
                    .collect::<Vec<_>>(),
            }),
        };
        let (verdict, reason) = match &self.verdict {
            Verdict::Accept => ("accept", serde_json::Value::Null),
            Verdict::Reject(r) => ("reject", serde_json::to_value(r).expect("reason serializes")),
        };
        json!({
            "n": self.n,
            "q": self.q.q().to_string(),
            "B": self.b,
            "Y": self.y,
            "chall": self.chall,
            "answer": answer,
            "timeline": self.timeline.events(),
            "verdict": verdict,
            "reason": reason,
        })
    }
}

/// Timing configuration of a run.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolConfig {
    pub layout: SiteLayout,
    /// Processing delay of honest agents before they answer.
    pub honest_delay: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            layout: SiteLayout::default(),
            honest_delay: 0.0,
        }
    }
}

fn honest_timeline(config: &ProtocolConfig) -> Result<Timeline, ZkError> {
    let mut log = EventLog::new();
    let d = config.honest_delay;
    let (_, b_arrival) = log.message("B", AgentId::V1, AgentId::P1, 0.0, 0.0, &config.layout);
    log.message("Y", AgentId::P1, AgentId::V1, b_arrival + d, 0.0, &config.layout);
    let (_, c_arrival) = log.message("chall", AgentId::V2, AgentId::P2, 0.0, 0.0, &config.layout);
    log.message(
        "answer",
        AgentId::P2,
        AgentId::V2,
        c_arrival + d,
        0.0,
        &config.layout,
    );
    Ok(log.into_timeline(&config.layout)?)
}

/// Timeline in which P2's answer physically waits for B to be relayed from
/// P1's site: the relay covers the inter-site distance, so the answer can
/// never beat the light cone at V2.
fn leaking_timeline(config: &ProtocolConfig) -> Result<Timeline, ZkError> {
    let mut log = EventLog::new();
    let (_, b_arrival) = log.message("B", AgentId::V1, AgentId::P1, 0.0, 0.0, &config.layout);
    log.message("Y", AgentId::P1, AgentId::V1, b_arrival, 0.0, &config.layout);
    log.message("chall", AgentId::V2, AgentId::P2, 0.0, 0.0, &config.layout);
    let (_, leak_arrival) =
        log.message("leak", AgentId::P1, AgentId::P2, b_arrival, 0.0, &config.layout);
    log.message(
        "answer",
        AgentId::P2,
        AgentId::V2,
        leak_arrival,
        0.0,
        &config.layout,
    );
    Ok(log.into_timeline(&config.layout)?)
}

/// Honest P1 message: Y = A + B ∘ M_{Π(G)}.
pub fn prover_commit(witness: &ProverWitness, b: &FqMatrix) -> Result<FqMatrix, ZkError> {
    let permuted = witness.pi.apply_graph(&witness.graph)?;
    let m = permuted.adjacency_matrix(witness.a.modulus());
    Ok(witness.a.add(&b.hadamard(&m)?)?)
}

/// Honest P2 answer for a challenge bit.
pub fn prover_answer(witness: &ProverWitness, chall: u8) -> Result<ProverAnswer, ZkError> {
    match chall {
        0 => Ok(ProverAnswer::Open {
            pi: witness.pi.clone(),
            a: witness.a.clone(),
        }),
        1 => {
            let c_prime = witness.pi.apply_cycle(&witness.cycle)?;
            let openings = c_prime
                .couples()
                .map(|(u, v)| witness.a.get(u - 1, v - 1))
                .collect();
            Ok(ProverAnswer::CycleOpen {
                cycle: c_prime,
                openings,
            })
        }
        _ => Err(ZkError::Malformed(format!("challenge bit {chall}"))),
    }
}

/// Step-4 verification: timing gate first, then the revealed object, then
/// the per-entry algebra for the transcript's challenge.
pub fn verify(t: &Transcript, g: &Graph) -> Verdict {
    let n = g.n();
    if t.n != n
        || t.b.rows() != n
        || t.b.cols() != n
        || t.y.rows() != n
        || t.y.cols() != n
        || t.b.modulus().q() != t.q.q()
        || t.y.modulus().q() != t.q.q()
    {
        return Verdict::Reject(RejectReason::Malformed);
    }
    let (Some(b_send), Some(answer_recv)) = (
        t.timeline.find(EventKind::Send, "B"),
        t.timeline.find(EventKind::Receive, "answer"),
    ) else {
        return Verdict::Reject(RejectReason::Malformed);
    };
    // the events carry the times; the declared layout carries the trusted
    // verifier separation
    let timing = nss_check(b_send, answer_recv, &t.layout, (0, 0)).expect("same run");
    if !timing.pass {
        return Verdict::Reject(RejectReason::Timing);
    }
    match (t.chall, &t.answer) {
        (0, ProverAnswer::Open { pi, a }) => {
            if pi.n() != n {
                return Verdict::Reject(RejectReason::BadPermutation);
            }
            if a.rows() != n || a.cols() != n || a.modulus().q() != t.q.q() {
                return Verdict::Reject(RejectReason::Malformed);
            }
            let permuted = match pi.apply_graph(g) {
                Ok(p) => p,
                Err(_) => return Verdict::Reject(RejectReason::BadPermutation),
            };
            let m = permuted.adjacency_matrix(&t.q);
            for i in 0..n {
                for j in 0..n {
                    let rhs = a
                        .get(i, j)
                        .add(&t.b.get(i, j).mul(&m.get(i, j)).expect("same field"))
                        .expect("same field");
                    if t.y.get(i, j) != rhs {
                        return Verdict::Reject(RejectReason::Algebra0 { i, j });
                    }
                }
            }
            Verdict::Accept
        }
        (1, ProverAnswer::CycleOpen { cycle, openings }) => {
            if cycle.n() != n {
                return Verdict::Reject(RejectReason::BadCycle);
            }
            if openings.len() != n {
                return Verdict::Reject(RejectReason::Malformed);
            }
            for ((u, v), opening) in cycle.couples().zip(openings) {
                if opening.modulus().q() != t.q.q() {
                    return Verdict::Reject(RejectReason::Malformed);
                }
                let rhs = opening
                    .add(&t.b.get(u - 1, v - 1))
                    .expect("same field");
                if t.y.get(u - 1, v - 1) != rhs {
                    return Verdict::Reject(RejectReason::Algebra1 { u, v });
                }
            }
            Verdict::Accept
        }
        _ => Verdict::Reject(RejectReason::Malformed),
    }
}

/// Full honest round with the honest fair-coin verifier.
pub fn run_honest(
    g: &Graph,
    cycle: &Cycle,
    q: &Arc<FieldModulus>,
    seed: u64,
) -> Result<Transcript, ZkError> {
    run_honest_with_config(g, cycle, q, seed, &ProtocolConfig::default())
}

pub fn run_honest_with_config(
    g: &Graph,
    cycle: &Cycle,
    q: &Arc<FieldModulus>,
    seed: u64,
    config: &ProtocolConfig,
) -> Result<Transcript, ZkError> {
    use rand::SeedableRng;
    let mut rng = SeededRng::seed_from_u64(seed);
    let witness = ProverWitness::new(g.clone(), cycle.clone(), q, &mut rng)?;
    let n = g.n();
    let b = FqMatrix::sample_uniform(n, n, q, &mut rng);
    let chall = rng.random_range(0..2u8);
    let y = prover_commit(&witness, &b)?;
    let answer = prover_answer(&witness, chall)?;
    let timeline = honest_timeline(config)?;
    let mut t = Transcript {
        n,
        q: Arc::clone(q),
        b,
        y,
        chall,
        answer,
        layout: config.layout,
        timeline,
        verdict: Verdict::Accept,
    };
    t.verdict = verify(&t, g);
    Ok(t)
}

/// A prover pair that computes its answers from B but must physically relay
/// B from site 1 to site 2 to do so. The algebra comes out perfect; the
/// timing gate rejects the run.
pub fn run_with_b_leak(g: &Graph, q: &Arc<FieldModulus>, seed: u64) -> Result<Transcript, ZkError> {
    use rand::SeedableRng;
    let mut rng = SeededRng::seed_from_u64(seed);
    let n = g.n();
    let config = ProtocolConfig::default();
    let b = FqMatrix::sample_uniform(n, n, q, &mut rng);
    let chall = rng.random_range(0..2u8);
    let y = FqMatrix::sample_uniform(n, n, q, &mut rng);
    // with B in hand at site 2, both challenges have perfect answers even
    // on a no-instance
    let answer = match chall {
        0 => {
            let pi = Permutation::sample_uniform(n, &mut rng);
            let m = pi.apply_graph(g)?.adjacency_matrix(q);
            let a = y.sub(&b.hadamard(&m)?)?;
            ProverAnswer::Open { pi, a }
        }
        _ => {
            let cycle = sample_cycle(n, &mut rng)?;
            let openings = cycle
                .couples()
                .map(|(u, v)| y.get(u - 1, v - 1).sub(&b.get(u - 1, v - 1)).expect("same field"))
                .collect();
            ProverAnswer::CycleOpen { cycle, openings }
        }
    };
    let timeline = leaking_timeline(&config)?;
    let mut t = Transcript {
        n,
        q: Arc::clone(q),
        b,
        y,
        chall,
        answer,
        layout: config.layout,
        timeline,
        verdict: Verdict::Accept,
    };
    t.verdict = verify(&t, g);
    Ok(t)
}

/// Exhaustive completeness check: every B and both challenges at fixed
/// preprocessing (Π, A).
pub fn exhaustive_b_sweep(
    g: &Graph,
    cycle: &Cycle,
    q: &Arc<FieldModulus>,
    pi: &Permutation,
    a: &FqMatrix,
) -> Result<(u64, u64), ZkError> {
    if !cycle.is_hamiltonian_in(g) {
        return Err(ZkError::InvalidWitness);
    }
    let n = g.n();
    let q_u64 = q
        .q()
        .to_u64()
        .ok_or_else(|| ZkError::Malformed("modulus too large for exhaustive sweep".into()))?;
    let cells = n * n;
    let total = q_u64
        .checked_pow(cells as u32)
        .ok_or(ZkError::TooLarge(n, 3))?;
    let witness = ProverWitness {
        graph: g.clone(),
        cycle: cycle.clone(),
        pi: pi.clone(),
        a: a.clone(),
    };
    let config = ProtocolConfig::default();
    let accepted = (0..total)
        .into_par_iter()
        .map(|index| {
            let mut digits = index;
            let b = FqMatrix::from_fn(n, n, q, |_, _| {
                let d = digits % q_u64;
                digits /= q_u64;
                BigUint::from(d)
            });
            let y = prover_commit(&witness, &b).expect("shapes agree");
            let mut ok = 0u64;
            for chall in 0..2u8 {
                let answer = prover_answer(&witness, chall).expect("valid challenge");
                let t = Transcript {
                    n,
                    q: Arc::clone(q),
                    b: b.clone(),
                    y: y.clone(),
                    chall,
                    answer,
                    layout: config.layout,
                    timeline: honest_timeline(&config).expect("honest timeline is causal"),
                    verdict: Verdict::Accept,
                };
                if verify(&t, g).accepted() {
                    ok += 1;
                }
            }
            ok
        })
        .sum();
    Ok((2 * total, accepted))
}

const SOUNDNESS_SCAN_GUARD: usize = 7;

/// Exact optimal classical win probability of the two-prover soundness
/// game on a no-instance: scan every (Π, C') answer pair, count the exact
/// fraction of B that lets one Y satisfy both checks, and take
/// (1 + best fraction)/2. No closed form is assumed.
pub fn classical_soundness_value(g: &Graph, q: &Arc<FieldModulus>) -> Result<BigRational, ZkError> {
    let n = g.n();
    if n > SOUNDNESS_SCAN_GUARD {
        return Err(ZkError::TooLarge(n, SOUNDNESS_SCAN_GUARD));
    }
    if crate::graphs::find_hamiltonian_cycle(g)?.is_some() {
        return Err(ZkError::GraphIsHamiltonian);
    }
    let cycles = enumerate_cycles(n)?;
    let permutations = Permutation::enumerate(n);
    let q_big = BigInt::from_biguint(num_bigint::Sign::Plus, q.q().clone());
    let one = BigRational::one();
    let per_missing = BigRational::new(BigInt::one(), q_big);
    let best_fraction = permutations
        .par_iter()
        .map(|pi| {
            let permuted = pi.apply_graph(g).expect("sizes match");
            let mut best = BigRational::zero();
            for c_prime in &cycles {
                // P2's best openings match A on present edges for free; each
                // absent edge forces one exact B entry, an independent 1/Q
                // event
                let mut fraction = BigRational::one();
                for (u, v) in c_prime.couples() {
                    if !permuted.has_edge(u, v) {
                        fraction *= per_missing.clone();
                    }
                }
                if fraction > best {
                    best = fraction;
                }
            }
            best
        })
        .reduce(BigRational::zero, |a, b| if a > b { a } else { b });
    Ok((one + best_fraction) / BigRational::from_integer(BigInt::from(2)))
}

/// P1 side of a cheating pair: shared randomness in, B in, Y out.
pub type CommitStrategy = Box<dyn Fn(&mut SeededRng, &FqMatrix) -> FqMatrix + Send + Sync>;
/// P2 side: shared randomness and the challenge only. No B parameter
/// exists, so reading B is ruled out at the type level.
pub type AnswerStrategy = Box<dyn Fn(&mut SeededRng, u8) -> ProverAnswer + Send + Sync>;

/// A classical cheating pair: P1 maps B to Y, P2 maps the challenge to an
/// answer. Shared randomness is a common stream both sides read
/// identically.
pub struct CheatingProverPair {
    pub name: String,
    p1: CommitStrategy,
    p2: AnswerStrategy,
}

impl CheatingProverPair {
    /// Identity permutation, missing-edge-minimal cycle, shared uniform A.
    /// Wins chall = 0 always and chall = 1 exactly when B vanishes on the
    /// m* absent edges.
    pub fn optimal_classical(g: &Graph, q: &Arc<FieldModulus>) -> Result<Self, ZkError> {
        let n = g.n();
        let best_cycle = enumerate_cycles(n)?
            .into_iter()
            .min_by_key(|c| c.missing_edges_in(g))
            .expect("cycle set is non-empty");
        let m = g.adjacency_matrix(q);
        let g_clone = g.clone();
        let q1 = Arc::clone(q);
        let q2 = Arc::clone(q);
        let cycle2 = best_cycle.clone();
        Ok(CheatingProverPair {
            name: "optimal".into(),
            p1: Box::new(move |shared, b| {
                let a = FqMatrix::sample_uniform(g_clone.n(), g_clone.n(), &q1, shared);
                a.add(&b.hadamard(&m).expect("same shape")).expect("same field")
            }),
            p2: Box::new(move |shared, chall| {
                let n = cycle2.n();
                let a = FqMatrix::sample_uniform(n, n, &q2, shared);
                if chall == 0 {
                    ProverAnswer::Open {
                        pi: Permutation::identity(n),
                        a,
                    }
                } else {
                    let openings = cycle2
                        .couples()
                        .map(|(u, v)| a.get(u - 1, v - 1))
                        .collect();
                    ProverAnswer::CycleOpen {
                        cycle: cycle2.clone(),
                        openings,
                    }
                }
            }),
        })
    }

    /// Fresh random permutation per run, best cycle for that relabeling.
    /// Same win rate as `optimal_classical`, different shape.
    pub fn honest_style(g: &Graph, q: &Arc<FieldModulus>) -> Result<Self, ZkError> {
        let n = g.n();
        let cycles = enumerate_cycles(n)?;
        let g1 = g.clone();
        let g2 = g.clone();
        let q1 = Arc::clone(q);
        let q2 = Arc::clone(q);
        let cycles2 = cycles.clone();
        Ok(CheatingProverPair {
            name: "honest-style".into(),
            p1: Box::new(move |shared, b| {
                let pi = Permutation::sample_uniform(g1.n(), shared);
                let a = FqMatrix::sample_uniform(g1.n(), g1.n(), &q1, shared);
                let m = pi.apply_graph(&g1).expect("sizes match").adjacency_matrix(&q1);
                a.add(&b.hadamard(&m).expect("same shape")).expect("same field")
            }),
            p2: Box::new(move |shared, chall| {
                let pi = Permutation::sample_uniform(g2.n(), shared);
                let a = FqMatrix::sample_uniform(g2.n(), g2.n(), &q2, shared);
                if chall == 0 {
                    ProverAnswer::Open { pi, a }
                } else {
                    let permuted = pi.apply_graph(&g2).expect("sizes match");
                    let c_prime = cycles2
                        .iter()
                        .min_by_key(|c| c.missing_edges_in(&permuted))
                        .expect("cycle set is non-empty")
                        .clone();
                    let openings = c_prime
                        .couples()
                        .map(|(u, v)| a.get(u - 1, v - 1))
                        .collect();
                    ProverAnswer::CycleOpen {
                        cycle: c_prime,
                        openings,
                    }
                }
            }),
        })
    }

    /// Uninformed baseline: everything uniform.
    pub fn random_answers(g: &Graph, q: &Arc<FieldModulus>) -> Result<Self, ZkError> {
        let n = g.n();
        if n < 3 {
            return Err(ZkError::GraphTooSmall);
        }
        let q1 = Arc::clone(q);
        let q2 = Arc::clone(q);
        Ok(CheatingProverPair {
            name: "random".into(),
            p1: Box::new(move |shared, _b| FqMatrix::sample_uniform(n, n, &q1, shared)),
            p2: Box::new(move |shared, chall| {
                if chall == 0 {
                    ProverAnswer::Open {
                        pi: Permutation::sample_uniform(n, shared),
                        a: FqMatrix::sample_uniform(n, n, &q2, shared),
                    }
                } else {
                    let cycle = sample_cycle(n, shared).expect("n >= 3");
                    let openings = (0..n).map(|_| q2.sample(shared)).collect();
                    ProverAnswer::CycleOpen { cycle, openings }
                }
            }),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackReport {
    pub strategy: String,
    pub trials: u64,
    pub wins: u64,
    pub rate: f64,
    /// 99% normal-approximation confidence interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Monte Carlo win rate of a cheating pair under honest verifiers and
/// honest timing.
pub fn attack_harness(
    g: &Graph,
    q: &Arc<FieldModulus>,
    pair: &CheatingProverPair,
    trials: u64,
    seed: u64,
) -> Result<AttackReport, ZkError> {
    use rand::SeedableRng;
    let n = g.n();
    let config = ProtocolConfig::default();
    let timeline = honest_timeline(&config)?;
    let wins: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut verifier_rng = SeededRng::seed_from_u64(subseed(seed, 2 * trial));
            let shared_seed = subseed(seed, 2 * trial + 1);
            let b = FqMatrix::sample_uniform(n, n, q, &mut verifier_rng);
            let chall = verifier_rng.random_range(0..2u8);
            // both agents read the same pre-shared stream
            let mut shared_p1 = SeededRng::seed_from_u64(shared_seed);
            let mut shared_p2 = SeededRng::seed_from_u64(shared_seed);
            let y = (pair.p1)(&mut shared_p1, &b);
            let answer = (pair.p2)(&mut shared_p2, chall);
            let t = Transcript {
                n,
                q: Arc::clone(q),
                b,
                y,
                chall,
                answer,
                layout: config.layout,
                timeline: timeline.clone(),
                verdict: Verdict::Accept,
            };
            u64::from(verify(&t, g).accepted())
        })
        .sum();
    let rate = wins as f64 / trials as f64;
    let half_width = 2.5758 * (rate * (1.0 - rate) / trials as f64).sqrt();
    Ok(AttackReport {
        strategy: pair.name.clone(),
        trials,
        wins,
        rate,
        ci_low: (rate - half_width).max(0.0),
        ci_high: (rate + half_width).min(1.0),
    })
}

/// Witness extracted by replaying both challenge answers against one
/// commitment: on a no-instance some opened couple is absent from the
/// permuted graph, and there the two openings reveal B.
#[derive(Debug, Clone)]
pub struct CommitmentBreak {
    pub edge: (usize, usize),
    pub recovered: FieldElement,
    pub actual: FieldElement,
}

/// Checks both answers against (B, Y) and extracts B on a missing edge.
/// Both answers must verify; the graph must be a no-instance.
pub fn replay_both_answers(
    g: &Graph,
    q: &Arc<FieldModulus>,
    b: &FqMatrix,
    y: &FqMatrix,
    open: &ProverAnswer,
    cycle_open: &ProverAnswer,
) -> Result<CommitmentBreak, ZkError> {
    let (ProverAnswer::Open { pi, a }, ProverAnswer::CycleOpen { cycle, openings }) =
        (open, cycle_open)
    else {
        return Err(ZkError::Malformed("answers in the wrong variant order".into()));
    };
    let config = ProtocolConfig::default();
    for (chall, answer) in [(0u8, open.clone()), (1u8, cycle_open.clone())] {
        let t = Transcript {
            n: g.n(),
            q: Arc::clone(q),
            b: b.clone(),
            y: y.clone(),
            chall,
            answer,
            layout: config.layout,
            timeline: honest_timeline(&config)?,
            verdict: Verdict::Accept,
        };
        if !verify(&t, g).accepted() {
            return Err(ZkError::Malformed(format!(
                "chall = {chall} answer does not verify"
            )));
        }
    }
    let permuted = pi.apply_graph(g)?;
    let missing = cycle
        .couples()
        .enumerate()
        .find(|(_, (u, v))| !permuted.has_edge(*u, *v))
        .ok_or(ZkError::GraphIsHamiltonian)?;
    let (idx, (u, v)) = missing;
    // combining the two checks on an absent edge: A_{u,v} = Y_{u,v} and
    // A'_{u,v} = Y_{u,v} − B_{u,v}, so A − A' recovers B
    let recovered = a.get(u - 1, v - 1).sub(&openings[idx])?;
    Ok(CommitmentBreak {
        edge: (u, v),
        recovered,
        actual: b.get(u - 1, v - 1),
    })
}

/// 1/2 + (64·S/Q)^{1/3} with S = n!. Exact powers of two are detected so
/// sizing at Q = 64·n!·2^{3k} reproduces 1/2 + 2^{−k} without rounding.
pub fn soundness_bound(n: usize, q: &BigUint) -> f64 {
    let s_proj = (1..=n as u64).map(BigUint::from).product::<BigUint>();
    soundness_bound_for_projectivity(&s_proj, q)
}

pub fn soundness_bound_for_projectivity(s_proj: &BigUint, q: &BigUint) -> f64 {
    let ratio = BigRational::new(
        BigInt::from_biguint(num_bigint::Sign::Plus, BigUint::from(64u32) * s_proj),
        BigInt::from_biguint(num_bigint::Sign::Plus, q.clone()),
    );
    let (numer, denom) = (ratio.numer(), ratio.denom());
    if numer.is_one() {
        let d = denom.to_biguint().expect("positive");
        // power of two with exponent divisible by 3: exact cube root
        if d.count_ones() == 1 {
            let exp = d.trailing_zeros().unwrap_or(0);
            if exp % 3 == 0 {
                return 0.5 + (-((exp / 3) as f64)).exp2();
            }
        }
    }
    let approx = numer.to_f64().unwrap_or(f64::INFINITY) / denom.to_f64().unwrap_or(f64::INFINITY);
    0.5 + approx.cbrt()
}

/// ceil(log2 q).
fn ceil_log2(q: &BigUint) -> u64 {
    if q.count_ones() == 1 {
        q.bits() - 1
    } else {
        q.bits()
    }
}

/// Sizing for soundness 1/2 + 2^{−k}: Q0 = 64·n!·2^{3k}, rounded up to the
/// next prime for the working field.
#[derive(Debug, Clone)]
pub struct SoundnessParameters {
    pub n: usize,
    pub k: u32,
    pub q0: BigUint,
    pub q: Arc<FieldModulus>,
    pub bits_per_round: u64,
}

impl SoundnessParameters {
    pub fn to_json(&self) -> serde_json::Value {
        let big = |v: &BigUint| match v.to_u64() {
            Some(x) => json!(x),
            None => json!(v.to_string()),
        };
        json!({
            "n": self.n,
            "k": self.k,
            "q0": big(&self.q0),
            "q": big(self.q.q()),
            "bits": self.bits_per_round,
        })
    }
}

pub fn size_parameters(n: usize, k: u32) -> Result<SoundnessParameters, ZkError> {
    if n < 3 {
        return Err(ZkError::GraphTooSmall);
    }
    if k < 1 {
        return Err(ZkError::SecurityParameterTooSmall);
    }
    let factorial = (1..=n as u64).map(BigUint::from).product::<BigUint>();
    let q0 = (BigUint::from(64u32) * factorial) << (3 * k);
    let q = FieldModulus::new(next_prime_at_least(&q0).q().clone())?;
    let bits_per_round = (n * n) as u64 * ceil_log2(q.q());
    Ok(SoundnessParameters {
        n,
        k,
        q0,
        q,
        bits_per_round,
    })
}

// ---------------------------------------------------------------------------
// Zero-knowledge: forward simulator and exact distribution comparison.

/// Cheating verifier restricted to what the simulator needs to know:
/// a first message and a challenge that may depend on the view so far.
pub trait VerifierStrategy {
    fn choose_b(&mut self, rng: &mut SeededRng, n: usize, q: &Arc<FieldModulus>) -> FqMatrix;
    fn choose_chall(&mut self, rng: &mut SeededRng, b: &FqMatrix, y: &FqMatrix) -> u8;
}

/// The protocol's honest verifier: uniform B, fair coin.
pub struct HonestVerifier;

impl VerifierStrategy for HonestVerifier {
    fn choose_b(&mut self, rng: &mut SeededRng, n: usize, q: &Arc<FieldModulus>) -> FqMatrix {
        FqMatrix::sample_uniform(n, n, q, rng)
    }

    fn choose_chall(&mut self, rng: &mut SeededRng, _b: &FqMatrix, _y: &FqMatrix) -> u8 {
        rng.random_range(0..2u8)
    }
}

/// Real protocol against an arbitrary verifier strategy.
pub fn run_against_verifier(
    verifier: &mut dyn VerifierStrategy,
    g: &Graph,
    cycle: &Cycle,
    q: &Arc<FieldModulus>,
    seed: u64,
) -> Result<Transcript, ZkError> {
    use rand::SeedableRng;
    let mut rng = SeededRng::seed_from_u64(seed);
    let witness = ProverWitness::new(g.clone(), cycle.clone(), q, &mut rng)?;
    let n = g.n();
    let b = verifier.choose_b(&mut rng, n, q);
    let y = prover_commit(&witness, &b)?;
    let chall = verifier.choose_chall(&mut rng, &b, &y);
    let answer = prover_answer(&witness, chall)?;
    let config = ProtocolConfig::default();
    let mut t = Transcript {
        n,
        q: Arc::clone(q),
        b,
        y,
        chall,
        answer,
        layout: config.layout,
        timeline: honest_timeline(&config)?,
        verdict: Verdict::Accept,
    };
    t.verdict = verify(&t, g);
    Ok(t)
}

/// Which permutation distribution the simulator uses on challenge 0;
/// `BiasedPermutation` exists to prove the distance test can detect a
/// broken simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulatorKind {
    Faithful,
    BiasedPermutation,
}

/// One forward pass, no witness, no rewinding: Y uniform, the verifier is
/// invoked exactly once for the challenge, then the answer is patched from
/// (B, Y) alone. The equality with the real view is claimed for
/// yes-instances; the pass itself runs on any graph.
pub fn zk_simulate(
    verifier: &mut dyn VerifierStrategy,
    g: &Graph,
    q: &Arc<FieldModulus>,
    seed: u64,
    kind: SimulatorKind,
) -> Result<Transcript, ZkError> {
    use rand::SeedableRng;
    let mut rng = SeededRng::seed_from_u64(seed);
    let n = g.n();
    let b = verifier.choose_b(&mut rng, n, q);
    let y = FqMatrix::sample_uniform(n, n, q, &mut rng);
    let chall = verifier.choose_chall(&mut rng, &b, &y);
    let answer = match chall {
        0 => {
            let pi = match kind {
                SimulatorKind::Faithful => Permutation::sample_uniform(n, &mut rng),
                SimulatorKind::BiasedPermutation => Permutation::identity(n),
            };
            let m = pi.apply_graph(g)?.adjacency_matrix(q);
            let a = y.sub(&b.hadamard(&m)?)?;
            ProverAnswer::Open { pi, a }
        }
        _ => {
            let cycle = sample_cycle(n, &mut rng)?;
            let openings = cycle
                .couples()
                .map(|(u, v)| y.get(u - 1, v - 1).sub(&b.get(u - 1, v - 1)).expect("same field"))
                .collect();
            ProverAnswer::CycleOpen { cycle, openings }
        }
    };
    let config = ProtocolConfig::default();
    let mut t = Transcript {
        n,
        q: Arc::clone(q),
        b,
        y,
        chall,
        answer,
        layout: config.layout,
        timeline: honest_timeline(&config)?,
        verdict: Verdict::Accept,
    };
    t.verdict = verify(&t, g);
    Ok(t)
}

/// Deterministic-B verifier with an exactly weighted challenge rule, for
/// full enumeration.
pub trait EnumerableVerifier: Send + Sync {
    fn name(&self) -> &str;
    fn fixed_b(&self, n: usize, q: &Arc<FieldModulus>) -> FqMatrix;
    /// [w0, w1], summing to 1.
    fn chall_weights(&self, b: &FqMatrix, y: &FqMatrix) -> [BigRational; 2];
}

/// chall = 0 always / 1 always.
pub struct FixedChallengeVerifier(pub u8);

impl EnumerableVerifier for FixedChallengeVerifier {
    fn name(&self) -> &str {
        if self.0 == 0 {
            "fixed-chall-0"
        } else {
            "fixed-chall-1"
        }
    }

    fn fixed_b(&self, n: usize, q: &Arc<FieldModulus>) -> FqMatrix {
        FqMatrix::from_fn(n, n, q, |r, c| BigUint::from((r + 2 * c) as u64))
    }

    fn chall_weights(&self, _b: &FqMatrix, _y: &FqMatrix) -> [BigRational; 2] {
        let mut w = [BigRational::zero(), BigRational::zero()];
        w[self.0 as usize] = BigRational::one();
        w
    }
}

/// Adaptive: chall = parity of the sum of Y's entries.
pub struct ParityVerifier;

impl EnumerableVerifier for ParityVerifier {
    fn name(&self) -> &str {
        "parity-of-y"
    }

    fn fixed_b(&self, n: usize, q: &Arc<FieldModulus>) -> FqMatrix {
        FqMatrix::from_fn(n, n, q, |r, c| BigUint::from((r * c + 1) as u64))
    }

    fn chall_weights(&self, _b: &FqMatrix, y: &FqMatrix) -> [BigRational; 2] {
        let mut total = BigUint::zero();
        for r in 0..y.rows() {
            for c in 0..y.cols() {
                total += y.raw(r, c);
            }
        }
        let bit = (total % 2u32).to_u8().expect("parity bit");
        let mut w = [BigRational::zero(), BigRational::zero()];
        w[bit as usize] = BigRational::one();
        w
    }
}

/// Adaptive: chall = 1 iff Y_{1,1} = 0, with B = 0 (the degenerate
/// verifier; on challenge 0 the simulated opening collapses to A = Y).
pub struct ZeroBVerifier;

impl EnumerableVerifier for ZeroBVerifier {
    fn name(&self) -> &str {
        "zero-b-entry-test"
    }

    fn fixed_b(&self, n: usize, q: &Arc<FieldModulus>) -> FqMatrix {
        FqMatrix::zero(n, n, q)
    }

    fn chall_weights(&self, _b: &FqMatrix, y: &FqMatrix) -> [BigRational; 2] {
        if y.raw(0, 0).is_zero() {
            [BigRational::zero(), BigRational::one()]
        } else {
            [BigRational::one(), BigRational::zero()]
        }
    }
}

/// Adaptive: chall = parity of the trace of Y, with a dense fixed B.
pub struct TraceParityVerifier;

impl EnumerableVerifier for TraceParityVerifier {
    fn name(&self) -> &str {
        "trace-parity"
    }

    fn fixed_b(&self, n: usize, q: &Arc<FieldModulus>) -> FqMatrix {
        FqMatrix::from_fn(n, n, q, |r, c| BigUint::from((3 * r + c + 1) as u64))
    }

    fn chall_weights(&self, _b: &FqMatrix, y: &FqMatrix) -> [BigRational; 2] {
        let mut total = BigUint::zero();
        for i in 0..y.rows() {
            total += y.raw(i, i);
        }
        let bit = (total % 2u32).to_u8().expect("parity bit");
        let mut w = [BigRational::zero(), BigRational::zero()];
        w[bit as usize] = BigRational::one();
        w
    }
}

/// Fair coin regardless of the view.
pub struct CoinVerifier;

impl EnumerableVerifier for CoinVerifier {
    fn name(&self) -> &str {
        "fair-coin"
    }

    fn fixed_b(&self, n: usize, q: &Arc<FieldModulus>) -> FqMatrix {
        FqMatrix::from_fn(n, n, q, |r, c| BigUint::from((r + c) as u64))
    }

    fn chall_weights(&self, _b: &FqMatrix, _y: &FqMatrix) -> [BigRational; 2] {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        [half.clone(), half]
    }
}

const ZK_ENUM_N_GUARD: usize = 3;
const ZK_ENUM_Q_GUARD: u64 = 3;

type Distribution = BTreeMap<Vec<u8>, BigRational>;

fn add_mass(dist: &mut Distribution, key: Vec<u8>, mass: BigRational) {
    if mass.is_zero() {
        return;
    }
    dist.entry(key).and_modify(|m| *m += mass.clone()).or_insert(mass);
}

fn matrix_bytes(m: &FqMatrix, out: &mut Vec<u8>) {
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out.push(m.raw(r, c).to_u8().expect("enumeration keeps q <= 3"));
        }
    }
}

fn transcript_key(y: &FqMatrix, chall: u8, answer: &ProverAnswer) -> Vec<u8> {
    let mut key = Vec::with_capacity(2 * y.rows() * y.cols() + 8);
    matrix_bytes(y, &mut key);
    key.push(0xff);
    key.push(chall);
    match answer {
        ProverAnswer::Open { pi, a } => {
            for i in 1..=pi.n() {
                key.push(pi.apply(i) as u8);
            }
            key.push(0xfe);
            matrix_bytes(a, &mut key);
        }
        ProverAnswer::CycleOpen { cycle, openings } => {
            for v in cycle.vertices() {
                key.push(*v as u8);
            }
            key.push(0xfd);
            for o in openings {
                key.push(o.value().to_u8().expect("enumeration keeps q <= 3"));
            }
        }
    }
    key
}

fn enumerate_matrices(n: usize, q: &Arc<FieldModulus>) -> Vec<FqMatrix> {
    let q_u64 = q.q().to_u64().expect("enumeration modulus is tiny");
    let cells = n * n;
    let total = q_u64.pow(cells as u32);
    (0..total)
        .map(|index| {
            let mut digits = index;
            FqMatrix::from_fn(n, n, q, |_, _| {
                let d = digits % q_u64;
                digits /= q_u64;
                BigUint::from(d)
            })
        })
        .collect()
}

/// Exact total-variation distance between the real transcript distribution
/// (honest provers with the witness) and the simulator's, for a
/// deterministic-B enumerable verifier. Perfect simulation means zero.
pub fn zk_distance(
    verifier: &dyn EnumerableVerifier,
    g: &Graph,
    q: &Arc<FieldModulus>,
    kind: SimulatorKind,
) -> Result<BigRational, ZkError> {
    let cycle = crate::graphs::find_hamiltonian_cycle(g)?.ok_or(ZkError::InvalidWitness)?;
    zk_distance_with_witness(verifier, g, &cycle, q, kind)
}

/// Same comparison with the honest provers holding a caller-chosen witness
/// cycle. Zero distance for every witness pins the real view to one
/// witness-free distribution.
pub fn zk_distance_with_witness(
    verifier: &dyn EnumerableVerifier,
    g: &Graph,
    cycle: &Cycle,
    q: &Arc<FieldModulus>,
    kind: SimulatorKind,
) -> Result<BigRational, ZkError> {
    let n = g.n();
    if n > ZK_ENUM_N_GUARD {
        return Err(ZkError::TooLarge(n, ZK_ENUM_N_GUARD));
    }
    q.q()
        .to_u64()
        .filter(|&v| v <= ZK_ENUM_Q_GUARD)
        .ok_or(ZkError::TooLarge(n, ZK_ENUM_N_GUARD))?;
    if !cycle.is_hamiltonian_in(g) {
        return Err(ZkError::InvalidWitness);
    }
    let b = verifier.fixed_b(n, q);
    let matrices = enumerate_matrices(n, q);
    let permutations = Permutation::enumerate(n);
    let cycles = enumerate_cycles(n)?;

    // real side: uniform (Π, A), honest messages
    let mut real = Distribution::new();
    let real_base = BigRational::new(
        BigInt::one(),
        BigInt::from(permutations.len() as u64) * BigInt::from(matrices.len() as u64),
    );
    for pi in &permutations {
        let witness = ProverWitness {
            graph: g.clone(),
            cycle: cycle.clone(),
            pi: pi.clone(),
            a: FqMatrix::zero(n, n, q),
        };
        let m = pi.apply_graph(g)?.adjacency_matrix(q);
        let bm = b.hadamard(&m)?;
        for a in &matrices {
            let y = a.add(&bm)?;
            let weights = verifier.chall_weights(&b, &y);
            let witness = ProverWitness {
                a: a.clone(),
                ..witness.clone()
            };
            for chall in 0..2u8 {
                if weights[chall as usize].is_zero() {
                    continue;
                }
                let answer = prover_answer(&witness, chall)?;
                let key = transcript_key(&y, chall, &answer);
                add_mass(&mut real, key, &real_base * &weights[chall as usize]);
            }
        }
    }

    // simulated side: uniform Y, then a patched answer
    let mut sim = Distribution::new();
    let y_base = BigRational::new(BigInt::one(), BigInt::from(matrices.len() as u64));
    let perm_mass = BigRational::new(BigInt::one(), BigInt::from(permutations.len() as u64));
    let cycle_mass = BigRational::new(BigInt::one(), BigInt::from(cycles.len() as u64));
    for y in &matrices {
        let weights = verifier.chall_weights(&b, y);
        if !weights[0].is_zero() {
            match kind {
                SimulatorKind::Faithful => {
                    for pi in &permutations {
                        let m = pi.apply_graph(g)?.adjacency_matrix(q);
                        let a = y.sub(&b.hadamard(&m)?)?;
                        let answer = ProverAnswer::Open { pi: pi.clone(), a };
                        let key = transcript_key(y, 0, &answer);
                        add_mass(&mut sim, key, &y_base * &weights[0] * &perm_mass);
                    }
                }
                SimulatorKind::BiasedPermutation => {
                    let pi = Permutation::identity(n);
                    let m = pi.apply_graph(g)?.adjacency_matrix(q);
                    let a = y.sub(&b.hadamard(&m)?)?;
                    let answer = ProverAnswer::Open { pi, a };
                    let key = transcript_key(y, 0, &answer);
                    add_mass(&mut sim, key, &y_base * &weights[0]);
                }
            }
        }
        if !weights[1].is_zero() {
            for c_prime in &cycles {
                let openings: Vec<FieldElement> = c_prime
                    .couples()
                    .map(|(u, v)| y.get(u - 1, v - 1).sub(&b.get(u - 1, v - 1)))
                    .collect::<Result<_, _>>()?;
                let answer = ProverAnswer::CycleOpen {
                    cycle: c_prime.clone(),
                    openings,
                };
                let key = transcript_key(y, 1, &answer);
                add_mass(&mut sim, key, &y_base * &weights[1] * &cycle_mass);
            }
        }
    }

    let mut distance = BigRational::zero();
    let keys: std::collections::BTreeSet<_> =
        real.keys().chain(sim.keys()).cloned().collect();
    let zero = BigRational::zero();
    for key in keys {
        let p = real.get(&key).unwrap_or(&zero);
        let s = sim.get(&key).unwrap_or(&zero);
        let diff = if p > s { p - s } else { s - p };
        distance += diff;
    }
    Ok(distance / BigRational::from_integer(BigInt::from(2)))
}
