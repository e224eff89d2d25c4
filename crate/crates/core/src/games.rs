//! Two-player games on the uniform distribution, the coupled-game
//! construction, exact classical values at brute-force scale, and the
//! closed-form bounds for the field CHSH variants.
//!
//! In the coupled game Bob receives an ordered pair of distinct inputs and
//! must win both base instances against one Alice input/output pair. For an
//! S-projective game the value of the coupled game controls the entangled
//! value of the base game through the cubic consecutive-measurement bound;
//! `consecutive_strategy` realizes the sequential-measurement side of that
//! relation on explicit strategies.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fq::is_prime;
use crate::quantum::{CMatrix, DensityMatrix, Projector};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("game is not on the uniform distribution")]
    NotUniform,
    #[error("exhaustive scan needs {0} strategy evaluations, guard is {1}")]
    TooLarge(u128, u128),
    #[error("strategy shape does not match the game: {0}")]
    ShapeMismatch(String),
    #[error("P = {0} must not exceed Q = {1}")]
    ParameterOrder(u64, u64),
    #[error("measurement does not resolve the identity (defect {0:e})")]
    NotProjective(f64),
    #[error("joint dimension {0} exceeds the evaluation cap {1}")]
    DimensionCap(usize, usize),
}

type Valuation = Arc<dyn Fn(usize, usize, usize, usize) -> bool + Send + Sync>;

/// Finite two-player game; inputs and outputs are index spaces.
#[derive(Clone)]
pub struct Game {
    name: String,
    inputs_a: usize,
    inputs_b: usize,
    outputs_a: usize,
    outputs_b: usize,
    uniform: bool,
    valuation: Valuation,
}

impl std::fmt::Debug for Game {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Game")
            .field("name", &self.name)
            .field("inputs_a", &self.inputs_a)
            .field("inputs_b", &self.inputs_b)
            .field("outputs_a", &self.outputs_a)
            .field("outputs_b", &self.outputs_b)
            .field("uniform", &self.uniform)
            .finish()
    }
}

impl Game {
    pub fn new(
        name: impl Into<String>,
        inputs_a: usize,
        inputs_b: usize,
        outputs_a: usize,
        outputs_b: usize,
        valuation: impl Fn(usize, usize, usize, usize) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert!(inputs_a > 0 && inputs_b > 0 && outputs_a > 0 && outputs_b > 0);
        Game {
            name: name.into(),
            inputs_a,
            inputs_b,
            outputs_a,
            outputs_b,
            uniform: true,
            valuation: Arc::new(valuation),
        }
    }

    /// Marks the input distribution as non-uniform; the coupled construction
    /// then refuses the game.
    pub fn with_nonuniform_inputs(mut self) -> Self {
        self.uniform = false;
        self
    }

    /// CHSH over F_q with Bob inputs restricted to {0,...,p−1}: win iff
    /// a + b = x·y (mod q).
    pub fn chsh_q(q: u64, p: u64) -> Result<Self, GameError> {
        if p > q {
            return Err(GameError::ParameterOrder(p, q));
        }
        Ok(Game::new(
            format!("CHSH^{q}({p})"),
            q as usize,
            p as usize,
            q as usize,
            q as usize,
            move |x, y, a, b| (a as u64 + b as u64) % q == (x as u64 * y as u64) % q,
        ))
    }

    /// n-fold parallel repetition of CHSH^q(2); indices decode as base-q
    /// strings (Alice input, both outputs) and base-2 strings (Bob input).
    pub fn chsh_q_parallel(q: u64, reps: u32) -> Result<Self, GameError> {
        if 2 > q {
            return Err(GameError::ParameterOrder(2, q));
        }
        let qa = (q as usize).checked_pow(reps).expect("index space overflow");
        let nb = 2usize.checked_pow(reps).expect("index space overflow");
        Ok(Game::new(
            format!("CHSH^{q}(2)^x{reps}"),
            qa,
            nb,
            qa,
            qa,
            move |x, y, a, b| {
                let (mut x, mut y, mut a, mut b) = (x as u64, y as u64, a as u64, b as u64);
                for _ in 0..reps {
                    let (xi, yi, ai, bi) = (x % q, y % 2, a % q, b % q);
                    if (ai + bi) % q != (xi * yi) % q {
                        return false;
                    }
                    x /= q;
                    y /= 2;
                    a /= q;
                    b /= q;
                }
                true
            },
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs_a(&self) -> usize {
        self.inputs_a
    }

    pub fn inputs_b(&self) -> usize {
        self.inputs_b
    }

    pub fn outputs_a(&self) -> usize {
        self.outputs_a
    }

    pub fn outputs_b(&self) -> usize {
        self.outputs_b
    }

    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        (self.valuation)(x, y, a, b)
    }
}

/// S = max over (x, y, a) of the number of winning Bob outputs, by
/// exhaustive scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProjectivityCertificate {
    pub s: usize,
}

pub fn projectivity_certificate(game: &Game) -> ProjectivityCertificate {
    let mut s = 0;
    for x in 0..game.inputs_a {
        for y in 0..game.inputs_b {
            for a in 0..game.outputs_a {
                let count = (0..game.outputs_b)
                    .filter(|&b| game.wins(x, y, a, b))
                    .count();
                s = s.max(count);
            }
        }
    }
    ProjectivityCertificate { s }
}

/// Bob gets an ordered pair of distinct inputs and answers both; the pair
/// index encodes (y, y') with y' ≠ y, Bob's output index encodes (b, b') in
/// base outputs_b.
pub fn couple_game(game: &Game) -> Result<Game, GameError> {
    if !game.uniform {
        return Err(GameError::NotUniform);
    }
    let nb = game.inputs_b;
    let ob = game.outputs_b;
    let base = Arc::clone(&game.valuation);
    Ok(Game {
        name: format!("{}_coup", game.name),
        inputs_a: game.inputs_a,
        inputs_b: nb * (nb - 1),
        outputs_a: game.outputs_a,
        outputs_b: ob * ob,
        uniform: true,
        valuation: Arc::new(move |x, pair, a, bb| {
            let (y, yp) = decode_pair(pair, nb);
            let (b, bp) = (bb / ob, bb % ob);
            base(x, y, a, b) && base(x, yp, a, bp)
        }),
    })
}

/// Pair index → (y, y'), y' ≠ y.
pub fn decode_pair(k: usize, nb: usize) -> (usize, usize) {
    let y = k / (nb - 1);
    let r = k % (nb - 1);
    let yp = if r < y { r } else { r + 1 };
    (y, yp)
}

/// Deterministic classical strategy: output tables indexed by input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalStrategy {
    pub f_a: Vec<usize>,
    pub f_b: Vec<usize>,
}

impl ClassicalStrategy {
    pub fn constant(game: &Game, a: usize, b: usize) -> Self {
        ClassicalStrategy {
            f_a: vec![a; game.inputs_a],
            f_b: vec![b; game.inputs_b],
        }
    }
}

/// Shared-randomness mixture of deterministic strategies; exact weights,
/// must sum to 1.
#[derive(Debug, Clone)]
pub struct ClassicalMixture {
    pub parts: Vec<(BigRational, ClassicalStrategy)>,
}

fn check_classical_shape(game: &Game, s: &ClassicalStrategy) -> Result<(), GameError> {
    if s.f_a.len() != game.inputs_a || s.f_b.len() != game.inputs_b {
        return Err(GameError::ShapeMismatch(format!(
            "tables {}x{} vs inputs {}x{}",
            s.f_a.len(),
            s.f_b.len(),
            game.inputs_a,
            game.inputs_b
        )));
    }
    if s.f_a.iter().any(|&a| a >= game.outputs_a) || s.f_b.iter().any(|&b| b >= game.outputs_b) {
        return Err(GameError::ShapeMismatch("output out of range".into()));
    }
    Ok(())
}

/// Exact win probability of a deterministic strategy.
pub fn evaluate_classical(game: &Game, s: &ClassicalStrategy) -> Result<BigRational, GameError> {
    check_classical_shape(game, s)?;
    let mut wins = 0u64;
    for x in 0..game.inputs_a {
        for y in 0..game.inputs_b {
            if game.wins(x, y, s.f_a[x], s.f_b[y]) {
                wins += 1;
            }
        }
    }
    Ok(BigRational::new(
        BigInt::from(wins),
        BigInt::from((game.inputs_a * game.inputs_b) as u64),
    ))
}

pub fn evaluate_mixture(game: &Game, mix: &ClassicalMixture) -> Result<BigRational, GameError> {
    let mut total = BigRational::zero();
    let mut weight = BigRational::zero();
    for (w, s) in &mix.parts {
        total += w * evaluate_classical(game, s)?;
        weight += w;
    }
    if weight != BigRational::one() {
        return Err(GameError::ShapeMismatch(format!(
            "mixture weights sum to {weight}"
        )));
    }
    Ok(total)
}

const STRATEGY_EVAL_GUARD: u128 = 10_000_000;

/// Exact optimal classical value over deterministic strategies: enumerate
/// Bob tables, pick Alice's best answer per input. Workers split the Bob
/// table space; the merge is a plain max.
pub fn classical_value(game: &Game) -> Result<BigRational, GameError> {
    let nb_tables = (game.outputs_b as u128)
        .checked_pow(game.inputs_b as u32)
        .ok_or(GameError::TooLarge(u128::MAX, STRATEGY_EVAL_GUARD))?;
    let inner = (game.inputs_a * game.inputs_b * game.outputs_a) as u128;
    let cost = nb_tables
        .checked_mul(inner)
        .ok_or(GameError::TooLarge(u128::MAX, STRATEGY_EVAL_GUARD))?;
    if cost > STRATEGY_EVAL_GUARD {
        return Err(GameError::TooLarge(cost, STRATEGY_EVAL_GUARD));
    }
    let best_wins = (0..nb_tables as u64)
        .into_par_iter()
        .map(|table| {
            let mut f_b = vec![0usize; game.inputs_b];
            let mut t = table;
            for slot in f_b.iter_mut() {
                *slot = (t % game.outputs_b as u64) as usize;
                t /= game.outputs_b as u64;
            }
            let mut wins = 0u64;
            for x in 0..game.inputs_a {
                let best_a = (0..game.outputs_a)
                    .map(|a| {
                        (0..game.inputs_b)
                            .filter(|&y| game.wins(x, y, a, f_b[y]))
                            .count() as u64
                    })
                    .max()
                    .expect("outputs_a > 0");
                wins += best_a;
            }
            wins
        })
        .max()
        .expect("at least one Bob table");
    Ok(BigRational::new(
        BigInt::from(best_wins),
        BigInt::from((game.inputs_a * game.inputs_b) as u64),
    ))
}

/// Projective strategy: shared state on d_A·d_B, one projective measurement
/// per input on each side.
#[derive(Debug, Clone)]
pub struct QuantumStrategy {
    state: DensityMatrix,
    dim_a: usize,
    dim_b: usize,
    alice: Vec<Vec<Projector>>, // [x][a]
    bob: Vec<Vec<Projector>>,   // [y][b]
}

pub const JOINT_DIM_CAP: usize = 64;

impl QuantumStrategy {
    pub fn new(
        state: DensityMatrix,
        dim_a: usize,
        dim_b: usize,
        alice: Vec<Vec<Projector>>,
        bob: Vec<Vec<Projector>>,
    ) -> Result<Self, GameError> {
        if dim_a * dim_b > JOINT_DIM_CAP {
            return Err(GameError::DimensionCap(dim_a * dim_b, JOINT_DIM_CAP));
        }
        if state.dim() != dim_a * dim_b {
            return Err(GameError::ShapeMismatch(format!(
                "state dim {} vs {}x{}",
                state.dim(),
                dim_a,
                dim_b
            )));
        }
        for (side, dim, measurements) in [("alice", dim_a, &alice), ("bob", dim_b, &bob)] {
            for m in measurements.iter() {
                let mut sum = CMatrix::zeros(dim, dim);
                for p in m {
                    if p.dim() != dim {
                        return Err(GameError::ShapeMismatch(format!(
                            "{side} projector dim {} vs {dim}",
                            p.dim()
                        )));
                    }
                    sum += p.matrix();
                }
                let defect = (&sum - CMatrix::identity(dim, dim)).norm();
                if defect > 1e-9 {
                    return Err(GameError::NotProjective(defect));
                }
            }
        }
        Ok(QuantumStrategy {
            state,
            dim_a,
            dim_b,
            alice,
            bob,
        })
    }

    fn check_game_shape(&self, game: &Game) -> Result<(), GameError> {
        if self.alice.len() != game.inputs_a
            || self.bob.len() != game.inputs_b
            || self.alice.iter().any(|m| m.len() != game.outputs_a)
            || self.bob.iter().any(|m| m.len() != game.outputs_b)
        {
            return Err(GameError::ShapeMismatch(
                "measurement tables do not match the game".into(),
            ));
        }
        Ok(())
    }

    /// Deterministic strategy on trivial one-dimensional registers.
    pub fn embed_classical(game: &Game, s: &ClassicalStrategy) -> Result<Self, GameError> {
        check_classical_shape(game, s)?;
        let point = |hit: bool| {
            if hit {
                Projector::identity(1)
            } else {
                Projector::zero(1)
            }
        };
        let alice = (0..game.inputs_a)
            .map(|x| (0..game.outputs_a).map(|a| point(s.f_a[x] == a)).collect())
            .collect();
        let bob = (0..game.inputs_b)
            .map(|y| (0..game.outputs_b).map(|b| point(s.f_b[y] == b)).collect())
            .collect();
        let one = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        QuantumStrategy::new(
            DensityMatrix::new(one).expect("1x1 unit trace"),
            1,
            1,
            alice,
            bob,
        )
    }

    /// The standard rotated-basis EPR strategy for binary CHSH.
    pub fn epr_chsh() -> Self {
        fn rotated(theta: f64) -> Vec<Projector> {
            let dir = |t: f64| {
                nalgebra::DVector::from_vec(vec![
                    Complex64::new(t.cos(), 0.0),
                    Complex64::new(t.sin(), 0.0),
                ])
            };
            (0..2)
                .map(|out| {
                    let v = dir(theta + out as f64 * std::f64::consts::FRAC_PI_2);
                    Projector::new(&v * v.adjoint()).expect("unit vector outer product")
                })
                .collect()
        }
        let mut phi_plus = nalgebra::DVector::zeros(4);
        phi_plus[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        phi_plus[3] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let state = DensityMatrix::new(&phi_plus * phi_plus.adjoint()).expect("pure Bell state");
        let alice = vec![rotated(0.0), rotated(std::f64::consts::FRAC_PI_4)];
        let pi_8 = std::f64::consts::FRAC_PI_8;
        let bob = vec![rotated(pi_8), rotated(-pi_8)];
        QuantumStrategy::new(state, 2, 2, alice, bob).expect("textbook strategy is well formed")
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    fn joint(&self, pa: &Projector, pb: &CMatrix) -> CMatrix {
        pa.matrix().kronecker(pb)
    }
}

/// Born-rule win probability of a projective strategy.
pub fn evaluate_quantum(game: &Game, s: &QuantumStrategy) -> Result<f64, GameError> {
    s.check_game_shape(game)?;
    let mut total = 0.0;
    for x in 0..game.inputs_a {
        for y in 0..game.inputs_b {
            for a in 0..game.outputs_a {
                for b in 0..game.outputs_b {
                    if !game.wins(x, y, a, b) {
                        continue;
                    }
                    let op = s.joint(&s.alice[x][a], s.bob[y][b].matrix());
                    total += (op * s.state.matrix())
                        .diagonal()
                        .iter()
                        .map(|z| z.re)
                        .sum::<f64>();
                }
            }
        }
    }
    Ok(total / (game.inputs_a * game.inputs_b) as f64)
}

/// Bob answers a coupled input (y, y') by measuring Q^y first and Q^{y'} on
/// the post-measurement state; Alice is unchanged.
#[derive(Debug, Clone)]
pub struct SequentialStrategy {
    base: QuantumStrategy,
}

/// Builds the sequential coupled strategy from a base-game strategy. The
/// composition is well defined because `QuantumStrategy` only admits
/// projective measurements.
pub fn consecutive_strategy(s: &QuantumStrategy) -> SequentialStrategy {
    SequentialStrategy { base: s.clone() }
}

impl SequentialStrategy {
    /// Win probability on the coupled game of `base_game`:
    /// E_{x,(y,y')} Σ_{a, winning (b,b')}
    /// tr[(A_x^a ⊗ Q^{y'}_{b'}Q^y_b) ρ (A_x^a ⊗ Q^y_b Q^{y'}_{b'})].
    pub fn evaluate_on_coupled(&self, base_game: &Game) -> Result<f64, GameError> {
        let s = &self.base;
        s.check_game_shape(base_game)?;
        let nb = base_game.inputs_b;
        if nb < 2 {
            return Err(GameError::ShapeMismatch(
                "coupled game needs |I_B| >= 2".into(),
            ));
        }
        let mut total = 0.0;
        for x in 0..base_game.inputs_a {
            for y in 0..nb {
                for yp in 0..nb {
                    if y == yp {
                        continue;
                    }
                    for a in 0..base_game.outputs_a {
                        for b in 0..base_game.outputs_b {
                            if !base_game.wins(x, y, a, b) {
                                continue;
                            }
                            for bp in 0..base_game.outputs_b {
                                if !base_game.wins(x, yp, a, bp) {
                                    continue;
                                }
                                let kraus = s.bob[yp][bp].matrix() * s.bob[y][b].matrix();
                                let op = s.joint(&s.alice[x][a], &kraus);
                                let evolved = &op * s.state.matrix() * op.adjoint();
                                total +=
                                    evolved.diagonal().iter().map(|z| z.re).sum::<f64>();
                            }
                        }
                    }
                }
            }
        }
        Ok(total / (base_game.inputs_a * nb * (nb - 1)) as f64)
    }
}

fn rational_pow(base: BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp {
        acc *= base.clone();
    }
    acc
}

/// (1/2^n)·((1 + 1/Q)^n − 1): closed-form coupled value expression for the
/// n-fold parallel game.
pub fn parallel_coupled_closed_form(q: u64, n_rep: u32) -> BigRational {
    let one = BigRational::one();
    let base = &one + BigRational::new(BigInt::one(), BigInt::from(q));
    let numerator = rational_pow(base, n_rep) - &one;
    numerator / BigRational::from_integer(BigInt::from(2u64).pow(n_rep))
}

/// E_{y≠y'}[Q^{−|y−y'|_H}] over ordered distinct pairs, exactly:
/// ((1 + 1/Q)^n − 1)/(2^n − 1).
pub fn parallel_coupled_exact_expectation(q: u64, n_rep: u32) -> BigRational {
    let one = BigRational::one();
    let base = &one + BigRational::new(BigInt::one(), BigInt::from(q));
    let numerator = rational_pow(base, n_rep) - &one;
    numerator / BigRational::from_integer(BigInt::from(2u64).pow(n_rep) - BigInt::one())
}

/// Same expectation by explicit enumeration over Hamming distances; test
/// oracle for the closed forms.
pub fn parallel_coupled_enumerated(q: u64, n_rep: u32) -> BigRational {
    let n = n_rep as usize;
    let mut num = BigRational::zero();
    let mut pairs = 0u64;
    for y in 0u64..(1 << n) {
        for yp in 0u64..(1 << n) {
            if y == yp {
                continue;
            }
            let d = (y ^ yp).count_ones();
            num += BigRational::new(BigInt::one(), BigInt::from(q).pow(d));
            pairs += 1;
        }
    }
    num / BigRational::from_integer(BigInt::from(pairs))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub q: u64,
    pub p: u64,
    pub n_rep: u32,
    pub q_is_prime: bool,
    /// 1/P + 4/Q^{1/3} (approximate: cube root in doubles).
    pub single_game_bound: f64,
    /// (1/2^n)((1 + 1/Q)^n − 1), exact.
    pub parallel_coupled_closed_form: String,
    /// ((1 + 1/Q)^n − 1)/(2^n − 1), exact.
    pub parallel_coupled_exact: String,
    /// exact / closed form = 2^n/(2^n − 1), exact.
    pub normalization_ratio: String,
    /// 1/2^n + 4(2n/(Q·2^n))^{1/3} when Q > n (approximate).
    pub parallel_value_bound: Option<f64>,
}

/// Bound package for CHSH^Q(P) and the n-fold parallel repetition of
/// CHSH^Q(2). Rational expressions are exact; cube roots are approximate.
/// Primality of Q is reported rather than enforced: the expressions are
/// plain arithmetic in Q.
pub fn chsh_q_bounds(q: u64, p: u64, n_rep: u32) -> Result<BoundsReport, GameError> {
    if p > q {
        return Err(GameError::ParameterOrder(p, q));
    }
    assert!(n_rep >= 1, "n_rep must be at least 1");
    let closed = parallel_coupled_closed_form(q, n_rep);
    let exact = parallel_coupled_exact_expectation(q, n_rep);
    let ratio = &exact / &closed;
    let parallel_value_bound = if q > n_rep as u64 {
        let pow2 = 2f64.powi(n_rep as i32);
        Some(1.0 / pow2 + 4.0 * (2.0 * n_rep as f64 / (q as f64 * pow2)).cbrt())
    } else {
        None
    };
    Ok(BoundsReport {
        q,
        p,
        n_rep,
        q_is_prime: is_prime(&BigUint::from(q)),
        single_game_bound: 1.0 / p as f64 + 4.0 / (q as f64).cbrt(),
        parallel_coupled_closed_form: closed.to_string(),
        parallel_coupled_exact: exact.to_string(),
        normalization_ratio: ratio.to_string(),
        parallel_value_bound,
    })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let num = r.numer().to_f64().unwrap_or(if r.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    });
    num / r.denom().to_f64().unwrap_or(f64::INFINITY)
}
