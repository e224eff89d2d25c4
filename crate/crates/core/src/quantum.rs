//! Dense complex linear algebra and numerical certification of the
//! consecutive-measurement bounds.
//!
//! The headline inequality: for n projectors P_i = Σ_s P_i^s with orthogonal
//! blocks, any state σ, V = (1/n)Σ tr(P_i σ) and
//! E = (1/n(n−1)) Σ_{i,j≠i} Σ_{s,s'} tr(P_j^{s'} P_i^s σ P_i^s P_j^{s'}),
//! it holds that E ≥ (1/64S)(V − 1/n)³. The checks here evaluate both sides
//! on concrete instances and report margins; companion checks cover the
//! almost-orthogonality bound, the κ-threshold inequality, the pinching
//! inequality, and the older V(V² − 1/n) bound it improves on.
//!
//! All inequality checks use absolute tolerance 1e−9 (inputs are O(1));
//! eigenvalue positivity checks use 1e−10.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::{subseed, SeededRng};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const INEQUALITY_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-10;
pub const STATE_TOL: f64 = 1e-10;
pub const PROJECTOR_TOL: f64 = 1e-9;
const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("vector norm {0} is not 1 within tolerance")]
    NotNormalized(f64),
    #[error("matrix is not a density operator: {0}")]
    NotAState(String),
    #[error("matrix is not a projector: idempotency/hermiticity defect {0:e}")]
    NotAProjector(f64),
    #[error("projector blocks are not mutually orthogonal: ‖P_i P_j‖ = {0:e}")]
    BlocksNotOrthogonal(f64),
    #[error("κ must exceed 1, got {0}")]
    KappaOutOfRange(f64),
    #[error("projection of the state is numerically zero")]
    DegenerateProjection,
    #[error("supplied vector is not a fixed point of the projector (defect {0:e})")]
    FixedPointViolated(f64),
    #[error("need at least {0} members, got {1}")]
    FamilyTooSmall(usize, usize),
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// tr(A·B) without forming the product.
fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * c(0.5))
}

fn min_eigenvalue(hermitian: &CMatrix) -> f64 {
    hermitian
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn max_eigenvalue(hermitian: &CMatrix) -> f64 {
    hermitian
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One standard complex Gaussian via Box-Muller. Scale is irrelevant here:
/// everything downstream normalizes or orthonormalizes.
fn complex_gaussian(rng: &mut SeededRng) -> Complex64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    Complex64::new(r * theta.cos(), r * theta.sin())
}

/// Unit vector in C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self, QuantumError> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes the input; rejects the zero vector.
    pub fn normalized(v: CVector) -> Result<Self, QuantumError> {
        let norm = v.norm();
        if norm < DEGENERATE_NORM {
            return Err(QuantumError::DegenerateProjection);
        }
        Ok(PureState {
            amplitudes: v / c(norm),
        })
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0);
        PureState { amplitudes: v }
    }

    /// (1/√d) Σ_i |i⟩.
    pub fn uniform_superposition(dim: usize) -> Self {
        let amp = c(1.0 / (dim as f64).sqrt());
        PureState {
            amplitudes: CVector::from_element(dim, amp),
        }
    }

    pub fn random(dim: usize, rng: &mut SeededRng) -> Self {
        let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
        Self::normalized(v).expect("Gaussian vector is nonzero a.s.")
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// |ψ⟩⟨ψ|.
    pub fn outer(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Hermitian, PSD, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, QuantumError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QuantumError::DimensionMismatch(
                matrix.nrows(),
                matrix.ncols(),
            ));
        }
        let herm_defect = (&matrix - matrix.adjoint()).norm();
        if herm_defect > STATE_TOL {
            return Err(QuantumError::NotAState(format!(
                "hermiticity defect {herm_defect:e}"
            )));
        }
        let tr = trace_re(&matrix);
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::NotAState(format!("trace {tr}")));
        }
        let min_eig = min_eigenvalue(&hermitize(&matrix));
        if min_eig < -STATE_TOL {
            return Err(QuantumError::NotAState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn from_pure(state: &PureState) -> Self {
        DensityMatrix {
            matrix: state.outer(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
        }
    }

    /// Wishart draw G·G†/tr, full rank a.s.
    pub fn random_mixed(dim: usize, rng: &mut SeededRng) -> Self {
        let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
        let w = &g * g.adjoint();
        let tr = trace_re(&w);
        DensityMatrix {
            matrix: w.map(|z| z / c(tr)),
        }
    }

    /// Mixes pure and full-rank draws for instance-space coverage.
    pub fn random(dim: usize, rng: &mut SeededRng) -> Self {
        if rng.random_bool(0.5) {
            Self::from_pure(&PureState::random(dim, rng))
        } else {
            Self::random_mixed(dim, rng)
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Hermitian idempotent operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: CMatrix,
}

impl Projector {
    pub fn new(matrix: CMatrix) -> Result<Self, QuantumError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QuantumError::DimensionMismatch(
                matrix.nrows(),
                matrix.ncols(),
            ));
        }
        let herm = (&matrix - matrix.adjoint()).norm();
        let idem = (&matrix * &matrix - &matrix).norm();
        let defect = herm.max(idem);
        if defect > PROJECTOR_TOL {
            return Err(QuantumError::NotAProjector(defect));
        }
        Ok(Projector { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Projector {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Projector {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn onto_basis_state(dim: usize, index: usize) -> Self {
        Projector {
            matrix: PureState::basis_state(dim, index).outer(),
        }
    }

    /// Σ_k |u_k⟩⟨u_k| over orthonormal columns.
    pub fn from_orthonormal_columns(cols: &[CVector]) -> Result<Self, QuantumError> {
        if cols.is_empty() {
            return Err(QuantumError::FamilyTooSmall(1, 0));
        }
        let dim = cols[0].len();
        let mut m = CMatrix::zeros(dim, dim);
        for col in cols {
            if col.len() != dim {
                return Err(QuantumError::DimensionMismatch(col.len(), dim));
            }
            m += col * col.adjoint();
        }
        Projector::new(m)
    }

    /// Rank-`rank` projector with Haar-like range.
    pub fn random(dim: usize, rank: usize, rng: &mut SeededRng) -> Self {
        assert!(rank <= dim);
        if rank == 0 {
            return Self::zero(dim);
        }
        let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
        let q = g.qr().q();
        let cols: Vec<CVector> = (0..rank).map(|k| q.column(k).into_owned()).collect();
        Self::from_orthonormal_columns(&cols).expect("QR columns are orthonormal")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        trace_re(&self.matrix).round() as usize
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }
}

/// n projectors P_i = Σ_{s<S} P_i^s with orthogonal blocks per member.
#[derive(Debug, Clone)]
pub struct ProjectorFamily {
    dim: usize,
    blocks: Vec<Vec<Projector>>, // blocks[i][s]
}

impl ProjectorFamily {
    pub fn new(blocks: Vec<Vec<Projector>>) -> Result<Self, QuantumError> {
        if blocks.is_empty() || blocks[0].is_empty() {
            return Err(QuantumError::FamilyTooSmall(1, 0));
        }
        let s = blocks[0].len();
        let dim = blocks[0][0].dim();
        for row in &blocks {
            if row.len() != s {
                return Err(QuantumError::DimensionMismatch(row.len(), s));
            }
            for p in row {
                if p.dim() != dim {
                    return Err(QuantumError::DimensionMismatch(p.dim(), dim));
                }
            }
            for a in 0..s {
                for b in (a + 1)..s {
                    let cross = (row[a].matrix() * row[b].matrix()).norm();
                    if cross > PROJECTOR_TOL {
                        return Err(QuantumError::BlocksNotOrthogonal(cross));
                    }
                }
            }
        }
        Ok(ProjectorFamily { dim, blocks })
    }

    /// n copies of the identity, one block each.
    pub fn all_identity(dim: usize, n: usize) -> Self {
        ProjectorFamily {
            dim,
            blocks: (0..n).map(|_| vec![Projector::identity(dim)]).collect(),
        }
    }

    /// Gaussian columns orthonormalized per member and split into S blocks;
    /// cross-block orthogonality holds by construction.
    pub fn random(dim: usize, n: usize, s: usize, rng: &mut SeededRng) -> Self {
        Self::random_with_rank_range(dim, n, s, 1..=dim, rng)
    }

    pub fn random_with_rank_range(
        dim: usize,
        n: usize,
        s: usize,
        rank_range: std::ops::RangeInclusive<usize>,
        rng: &mut SeededRng,
    ) -> Self {
        let mut blocks = Vec::with_capacity(n);
        for _ in 0..n {
            let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
            let q = g.qr().q();
            let total_rank = rng.random_range(rank_range.clone()).min(dim);
            // random composition of total_rank into s nonnegative parts
            let mut cuts: Vec<usize> = (0..s.saturating_sub(1))
                .map(|_| rng.random_range(0..=total_rank))
                .collect();
            cuts.sort_unstable();
            cuts.insert(0, 0);
            cuts.push(total_rank);
            let mut row = Vec::with_capacity(s);
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if lo == hi {
                    row.push(Projector::zero(dim));
                } else {
                    let cols: Vec<CVector> = (lo..hi).map(|k| q.column(k).into_owned()).collect();
                    row.push(
                        Projector::from_orthonormal_columns(&cols)
                            .expect("QR columns are orthonormal"),
                    );
                }
            }
            blocks.push(row);
        }
        ProjectorFamily { dim, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> usize {
        self.blocks.len()
    }

    pub fn outcomes(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn block(&self, i: usize, s: usize) -> &Projector {
        &self.blocks[i][s]
    }

    /// P_i = Σ_s P_i^s.
    pub fn member_sum(&self, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for p in &self.blocks[i] {
            m += p.matrix();
        }
        m
    }

    /// Largest cross-block product norm within any member (generator
    /// postcondition).
    pub fn max_block_cross_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.blocks {
            for a in 0..row.len() {
                for b in (a + 1)..row.len() {
                    worst = worst.max((row[a].matrix() * row[b].matrix()).norm());
                }
            }
        }
        worst
    }
}

/// Extremal instance: φ uniform over n basis states, P_i = |i⟩⟨i|. Gives
/// V = 1/n and E = 0 exactly.
pub fn tightness_instance(n: usize) -> (DensityMatrix, ProjectorFamily) {
    let sigma = DensityMatrix::from_pure(&PureState::uniform_superposition(n));
    let blocks = (0..n)
        .map(|i| vec![Projector::onto_basis_state(n, i)])
        .collect();
    (
        sigma,
        ProjectorFamily::new(blocks).expect("basis projectors form a family"),
    )
}

/// V and E exactly as defined. The E terms use tr(Q·T·Q) = tr(Q·T) for the
/// outer projector Q, which is an identity for idempotent Q.
pub fn compute_v_e(
    sigma: &DensityMatrix,
    family: &ProjectorFamily,
) -> Result<(f64, f64), QuantumError> {
    if sigma.dim() != family.dim() {
        return Err(QuantumError::DimensionMismatch(sigma.dim(), family.dim()));
    }
    let n = family.members();
    let s = family.outcomes();
    if n < 2 {
        return Err(QuantumError::FamilyTooSmall(2, n));
    }
    let v = (0..n)
        .map(|i| trace_of_product(&family.member_sum(i), sigma.matrix()).re)
        .sum::<f64>()
        / n as f64;
    let mut e_sum = 0.0;
    for i in 0..n {
        for si in 0..s {
            let p = family.block(i, si).matrix();
            let t = p * sigma.matrix() * p; // P_i^s σ P_i^s
            for j in 0..n {
                if j == i {
                    continue;
                }
                for sj in 0..s {
                    e_sum += trace_of_product(family.block(j, sj).matrix(), &t).re;
                }
            }
        }
    }
    let e = e_sum / (n * (n - 1)) as f64;
    Ok((v, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginReport {
    pub theorem: String,
    pub dim: usize,
    pub n: usize,
    pub s: usize,
    pub v: f64,
    pub e: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// E ≥ (1/64S)·(V − 1/n)₊³.
pub fn check_theorem_multi(
    sigma: &DensityMatrix,
    family: &ProjectorFamily,
) -> Result<MarginReport, QuantumError> {
    let (v, e) = compute_v_e(sigma, family)?;
    let n = family.members();
    let s = family.outcomes();
    let bound = (v - 1.0 / n as f64).max(0.0).powi(3) / (64.0 * s as f64);
    let margin = e - bound;
    Ok(MarginReport {
        theorem: "multi".into(),
        dim: family.dim(),
        n,
        s,
        v,
        e,
        bound,
        margin,
        pass: margin >= -INEQUALITY_TOL,
    })
}

/// Lower bounds on E: the cubic one proved here and the earlier V(V² − 1/n)
/// bound, which needs S = 1 and V ≥ 1/√n.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundComparison {
    pub ours: f64,
    pub unruh: Option<f64>,
}

pub fn compare_bounds(v: f64, n: usize, s: usize) -> BoundComparison {
    let ours = (v - 1.0 / n as f64).max(0.0).powi(3) / (64.0 * s as f64);
    let unruh = if s == 1 && v >= 1.0 / (n as f64).sqrt() {
        Some(v * (v * v - 1.0 / n as f64))
    } else {
        None
    };
    BoundComparison { ours, unruh }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    /// Max pairwise deviation among |⟨φ|ψ⟩|², ‖Pφ‖², tr(P|φ⟩⟨φ|); None when
    /// the projection is degenerate and the identity part is skipped.
    pub identity_violation: Option<f64>,
    /// tr(P|φ⟩⟨φ|) − |⟨φ|ψ⟩|² for ψ = Pφ/‖Pφ‖.
    pub overlap_margin: Option<f64>,
    pub degenerate: bool,
}

/// Projection identities for ψ = Pφ/‖Pφ‖ plus the overlap bound at that
/// fixed point.
pub fn lemma_projection_identities(
    phi: &PureState,
    p: &Projector,
) -> Result<LemmaReport, QuantumError> {
    if phi.dim() != p.dim() {
        return Err(QuantumError::DimensionMismatch(phi.dim(), p.dim()));
    }
    let projected = p.apply(phi.amplitudes());
    let norm = projected.norm();
    if norm < DEGENERATE_NORM {
        return Ok(LemmaReport {
            identity_violation: None,
            overlap_margin: None,
            degenerate: true,
        });
    }
    let psi = PureState::normalized(projected).expect("norm checked above");
    let overlap = phi.inner(&psi).norm_sqr();
    let norm_sq = norm * norm;
    let trace = trace_of_product(p.matrix(), &phi.outer()).re;
    let violation = (overlap - norm_sq)
        .abs()
        .max((overlap - trace).abs())
        .max((norm_sq - trace).abs());
    Ok(LemmaReport {
        identity_violation: Some(violation),
        overlap_margin: Some(trace - overlap),
        degenerate: false,
    })
}

/// |⟨φ|ψ⟩|² ≤ tr(P|φ⟩⟨φ|) for an arbitrary fixed point ψ of P; returns the
/// slack.
pub fn fixed_point_overlap_bound(
    phi: &PureState,
    p: &Projector,
    psi: &PureState,
) -> Result<f64, QuantumError> {
    if phi.dim() != p.dim() || psi.dim() != p.dim() {
        return Err(QuantumError::DimensionMismatch(phi.dim(), p.dim()));
    }
    let defect = (p.apply(psi.amplitudes()) - psi.amplitudes()).norm();
    if defect > PROJECTOR_TOL {
        return Err(QuantumError::FixedPointViolated(defect));
    }
    let overlap = phi.inner(psi).norm_sqr();
    let trace = trace_of_product(p.matrix(), &phi.outer()).re;
    Ok(trace - overlap)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlmostOrthogonalReport {
    pub n: usize,
    pub s_hat: f64,
    pub c: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// λ_max(Σ|φ_i⟩⟨φ_i|) ≤ 1 + √((n−1)C/n) with C = Σ_{i≠j}|⟨φ_i|φ_j⟩|².
pub fn check_almost_orthogonal(
    states: &[PureState],
) -> Result<AlmostOrthogonalReport, QuantumError> {
    let n = states.len();
    if n < 2 {
        return Err(QuantumError::FamilyTooSmall(2, n));
    }
    let dim = states[0].dim();
    for st in states {
        if st.dim() != dim {
            return Err(QuantumError::DimensionMismatch(st.dim(), dim));
        }
    }
    let mut m = CMatrix::zeros(dim, dim);
    for st in states {
        m += st.outer();
    }
    let s_hat = max_eigenvalue(&hermitize(&m));
    let mut c_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                c_sum += states[i].inner(&states[j]).norm_sqr();
            }
        }
    }
    let bound = 1.0 + ((n as f64 - 1.0) * c_sum / n as f64).sqrt();
    let margin = bound - s_hat;
    Ok(AlmostOrthogonalReport {
        n,
        s_hat,
        c: c_sum,
        bound,
        margin,
        pass: margin >= -INEQUALITY_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MainPropositionReport {
    pub kappa: f64,
    pub v: f64,
    pub e: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    /// |{i : tr(P_i σ) ≥ V/κ}|, the proof-internal threshold set size.
    pub z_size: usize,
}

/// V ≤ (1 + 1/(κ−1))(1/n + √(κE/V)) for single-outcome families.
pub fn check_main_proposition(
    sigma: &DensityMatrix,
    family: &ProjectorFamily,
    kappa: f64,
) -> Result<MainPropositionReport, QuantumError> {
    if kappa <= 1.0 {
        return Err(QuantumError::KappaOutOfRange(kappa));
    }
    if family.outcomes() != 1 {
        return Err(QuantumError::DimensionMismatch(family.outcomes(), 1));
    }
    let (v, e) = compute_v_e(sigma, family)?;
    if v <= 1e-12 {
        return Err(QuantumError::DegenerateProjection);
    }
    let n = family.members() as f64;
    let rhs = (1.0 + 1.0 / (kappa - 1.0)) * (1.0 / n + (kappa * e.max(0.0) / v).sqrt());
    let margin = rhs - v;
    let z_size = (0..family.members())
        .filter(|&i| trace_of_product(&family.member_sum(i), sigma.matrix()).re >= v / kappa)
        .count();
    Ok(MainPropositionReport {
        kappa,
        v,
        e,
        rhs,
        margin,
        pass: margin >= -INEQUALITY_TOL,
        z_size,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PinchingReport {
    pub blocks: usize,
    /// tr(P|ψ⟩⟨ψ|P): weight of the state inside the block span.
    pub weight: f64,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Σ_i P_i|ψ⟩⟨ψ|P_i − (1/m)·P|ψ⟩⟨ψ|P ⪰ 0 for orthogonal blocks summing to P.
pub fn check_pinching(
    psi: &PureState,
    blocks: &[Projector],
) -> Result<PinchingReport, QuantumError> {
    let m = blocks.len();
    if m == 0 {
        return Err(QuantumError::FamilyTooSmall(1, 0));
    }
    let dim = psi.dim();
    for b in blocks {
        if b.dim() != dim {
            return Err(QuantumError::DimensionMismatch(b.dim(), dim));
        }
    }
    for a in 0..m {
        for b in (a + 1)..m {
            let cross = (blocks[a].matrix() * blocks[b].matrix()).norm();
            if cross > PROJECTOR_TOL {
                return Err(QuantumError::BlocksNotOrthogonal(cross));
            }
        }
    }
    let rho = psi.outer();
    let mut pinched = CMatrix::zeros(dim, dim);
    let mut p_total = CMatrix::zeros(dim, dim);
    for b in blocks {
        pinched += b.matrix() * &rho * b.matrix();
        p_total += b.matrix();
    }
    let coarse = &p_total * &rho * &p_total;
    let weight = trace_re(&coarse);
    let diff = hermitize(&(pinched - coarse.map(|z| z / c(m as f64))));
    let min_eig = min_eigenvalue(&diff);
    Ok(PinchingReport {
        blocks: m,
        weight,
        min_eigenvalue: min_eig,
        pass: min_eig >= -PSD_TOL,
    })
}

/// One line of a randomized verification sweep.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub theorem: String,
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub theorem: String,
    pub trials: usize,
    pub passes: usize,
    pub fails: usize,
    pub min_margin: f64,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

fn summarize(theorem: &str, records: Vec<TrialRecord>) -> SweepSummary {
    let passes = records.iter().filter(|r| r.pass).count();
    let min_margin = records
        .iter()
        .map(|r| r.margin)
        .fold(f64::INFINITY, f64::min);
    SweepSummary {
        theorem: theorem.into(),
        trials: records.len(),
        passes,
        fails: records.len() - passes,
        min_margin,
        records,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub trials: usize,
    pub max_dim: usize,
    pub max_n: usize,
    pub max_s: usize,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(trials: usize, max_dim: usize, max_n: usize, max_s: usize, seed: u64) -> Self {
        SweepConfig {
            trials,
            max_dim: max_dim.max(2),
            max_n: max_n.max(2),
            max_s: max_s.max(1),
            seed,
        }
    }
}

fn trial_rng(cfg: &SweepConfig, index: usize) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(subseed(cfg.seed, index as u64))
}

/// Randomized sweep of the cubic bound over (σ, family) instances; trials
/// run in parallel on independent streams.
pub fn sweep_theorem_multi(cfg: &SweepConfig) -> SweepSummary {
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg, t);
            let dim = rng.random_range(2..=cfg.max_dim);
            let n = rng.random_range(2..=cfg.max_n);
            let s = rng.random_range(1..=cfg.max_s);
            let sigma = DensityMatrix::random(dim, &mut rng);
            let family = ProjectorFamily::random(dim, n, s, &mut rng);
            let r = check_theorem_multi(&sigma, &family).expect("dimensions agree");
            TrialRecord {
                theorem: r.theorem,
                dim,
                n,
                s,
                v: r.v,
                e: r.e,
                bound: r.bound,
                margin: r.margin,
                pass: r.pass,
            }
        })
        .collect();
    summarize("multi", records)
}

pub fn sweep_almost_orthogonal(cfg: &SweepConfig) -> SweepSummary {
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg, t);
            let dim = rng.random_range(2..=cfg.max_dim);
            let n = rng.random_range(2..=cfg.max_n);
            let states: Vec<PureState> =
                (0..n).map(|_| PureState::random(dim, &mut rng)).collect();
            let r = check_almost_orthogonal(&states).expect("family is valid");
            TrialRecord {
                theorem: "almost-orthogonal".into(),
                dim,
                n,
                s: 1,
                v: r.s_hat,
                e: r.c,
                bound: r.bound,
                margin: r.margin,
                pass: r.pass,
            }
        })
        .collect();
    summarize("almost-orthogonal", records)
}

/// κ grid {1.5, 2, 4} per instance; one record per (instance, κ).
pub fn sweep_main_proposition(cfg: &SweepConfig) -> SweepSummary {
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .flat_map_iter(|t| {
            let mut rng = trial_rng(cfg, t);
            let dim = rng.random_range(2..=cfg.max_dim);
            let n = rng.random_range(2..=cfg.max_n);
            let sigma = DensityMatrix::random(dim, &mut rng);
            let family = ProjectorFamily::random(dim, n, 1, &mut rng);
            [1.5, 2.0, 4.0].into_iter().filter_map(move |kappa| {
                match check_main_proposition(&sigma, &family, kappa) {
                    Ok(r) => Some(TrialRecord {
                        theorem: "main-proposition".into(),
                        dim,
                        n,
                        s: 1,
                        v: r.v,
                        e: r.e,
                        bound: r.rhs,
                        margin: r.margin,
                        pass: r.pass,
                    }),
                    // V numerically zero: the inequality is vacuous
                    Err(QuantumError::DegenerateProjection) => None,
                    Err(e) => panic!("unexpected sweep failure: {e}"),
                }
            })
        })
        .collect();
    summarize("main-proposition", records)
}

pub fn sweep_pinching(cfg: &SweepConfig) -> SweepSummary {
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg, t);
            let dim = rng.random_range(2..=cfg.max_dim);
            let m = rng.random_range(1..=cfg.max_n.min(5));
            let psi = PureState::random(dim, &mut rng);
            // one orthonormal frame split into m disjoint blocks
            let family = ProjectorFamily::random_with_rank_range(dim, 1, m, 1..=dim, &mut rng);
            let blocks: Vec<Projector> = (0..m).map(|s| family.block(0, s).clone()).collect();
            let r = check_pinching(&psi, &blocks).expect("blocks orthogonal by construction");
            TrialRecord {
                theorem: "pinching".into(),
                dim,
                n: m,
                s: 1,
                v: r.weight,
                e: 0.0,
                bound: -PSD_TOL,
                margin: r.min_eigenvalue,
                pass: r.pass,
            }
        })
        .collect();
    summarize("pinching", records)
}

/// Regime counts for the two lower bounds on E over S = 1 instances.
#[derive(Debug, Clone, Serialize)]
pub struct BoundComparisonSummary {
    pub trials: usize,
    /// Instances with V ≥ 1/√n, where both bounds apply.
    pub high_v: usize,
    /// Instances with 1/n < V < 1/√n, where only the cubic bound applies.
    pub mid_v: usize,
    pub ours_violations: usize,
    pub unruh_violations: usize,
}

/// Half the draws use high-rank projectors so the V ≥ 1/√n regime is
/// populated.
pub fn sweep_bound_comparison(cfg: &SweepConfig) -> BoundComparisonSummary {
    let results: Vec<(f64, f64, usize)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg, t);
            let dim = rng.random_range(2..=cfg.max_dim);
            let n = rng.random_range(2..=cfg.max_n);
            let sigma = DensityMatrix::random(dim, &mut rng);
            let lo = if t % 2 == 0 { dim.div_ceil(2) } else { 1 };
            let family = ProjectorFamily::random_with_rank_range(dim, n, 1, lo..=dim, &mut rng);
            let (v, e) = compute_v_e(&sigma, &family).expect("dimensions agree");
            (v, e, n)
        })
        .collect();
    let mut summary = BoundComparisonSummary {
        trials: results.len(),
        high_v: 0,
        mid_v: 0,
        ours_violations: 0,
        unruh_violations: 0,
    };
    for (v, e, n) in results {
        let cmp = compare_bounds(v, n, 1);
        if e < cmp.ours - INEQUALITY_TOL {
            summary.ours_violations += 1;
        }
        match cmp.unruh {
            Some(u) => {
                summary.high_v += 1;
                if e < u - INEQUALITY_TOL {
                    summary.unruh_violations += 1;
                }
            }
            None => {
                if v > 1.0 / n as f64 {
                    summary.mid_v += 1;
                }
            }
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SeededRng {
        SeededRng::seed_from_u64(seed)
    }

    /// Naive oracle: V by direct entry sums, E by the full five-matrix
    /// product. Shares no code path with `compute_v_e`.
    fn naive_v_e(sigma: &DensityMatrix, family: &ProjectorFamily) -> (f64, f64) {
        let n = family.members();
        let s = family.outcomes();
        let d = family.dim();
        let mut v = 0.0;
        for i in 0..n {
            let p = family.member_sum(i);
            let mut tr = Complex64::ZERO;
            for a in 0..d {
                for b in 0..d {
                    tr += p[(a, b)] * sigma.matrix()[(b, a)];
                }
            }
            v += tr.re;
        }
        v /= n as f64;
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for si in 0..s {
                    for sj in 0..s {
                        let pi = family.block(i, si).matrix();
                        let pj = family.block(j, sj).matrix();
                        let prod = pj * pi * sigma.matrix() * pi * pj;
                        let mut tr = Complex64::ZERO;
                        for a in 0..d {
                            tr += prod[(a, a)];
                        }
                        e += tr.re;
                    }
                }
            }
        }
        (v, e / (n * (n - 1)) as f64)
    }

    #[test]
    fn identity_family_gives_v_e_one() {
        let sigma = DensityMatrix::random(6, &mut rng(1));
        let family = ProjectorFamily::all_identity(6, 4);
        let (v, e) = compute_v_e(&sigma, &family).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        assert!((e - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tightness_instance_is_extremal() {
        let (sigma, family) = tightness_instance(5);
        let (v, e) = compute_v_e(&sigma, &family).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        assert!(e.abs() < 1e-12);
        let report = check_theorem_multi(&sigma, &family).unwrap();
        assert!(report.pass);
        assert!(report.margin.abs() < 1e-12);
    }

    #[test]
    fn v_e_matches_naive_oracle() {
        for seed in 0..20 {
            let mut r = rng(100 + seed);
            let dim = r.random_range(2..=8);
            let n = r.random_range(2..=4);
            let s = r.random_range(1..=2);
            let sigma = DensityMatrix::random(dim, &mut r);
            let family = ProjectorFamily::random(dim, n, s, &mut r);
            let (v, e) = compute_v_e(&sigma, &family).unwrap();
            let (nv, ne) = naive_v_e(&sigma, &family);
            assert!((v - nv).abs() < 1e-10, "V {v} vs {nv}");
            assert!((e - ne).abs() < 1e-10, "E {e} vs {ne}");
        }
    }

    #[test]
    fn theorem_multi_holds_on_random_instances() {
        let cfg = SweepConfig::new(300, 16, 6, 3, 7);
        let summary = sweep_theorem_multi(&cfg);
        assert_eq!(summary.fails, 0, "min margin {}", summary.min_margin);
    }

    #[test]
    fn theorem_multi_identity_case() {
        let sigma = DensityMatrix::maximally_mixed(4);
        let family = ProjectorFamily::all_identity(4, 3);
        let r = check_theorem_multi(&sigma, &family).unwrap();
        // 1 ≥ (1/64)(1 − 1/3)³
        assert!(r.pass && (r.e - 1.0).abs() < 1e-12 && r.bound < 0.005);
    }

    #[test]
    fn generator_blocks_are_orthogonal() {
        for seed in 0..10 {
            let f = ProjectorFamily::random(12, 4, 3, &mut rng(200 + seed));
            assert!(f.max_block_cross_norm() < 1e-10);
        }
    }

    #[test]
    fn lemma_identities_on_identity_projector() {
        let phi = PureState::random(5, &mut rng(3));
        let p = Projector::identity(5);
        let r = lemma_projection_identities(&phi, &p).unwrap();
        assert!(r.identity_violation.unwrap() < 1e-12);
        assert!(r.overlap_margin.unwrap().abs() < 1e-12);
    }

    #[test]
    fn lemma_degenerate_projection_is_reported() {
        let phi = PureState::basis_state(3, 0);
        let p = Projector::onto_basis_state(3, 2);
        let r = lemma_projection_identities(&phi, &p).unwrap();
        assert!(r.degenerate && r.identity_violation.is_none());
        // the overlap bound still holds for ψ ⊥ φ fixed by P: 0 ≤ 0
        let psi = PureState::basis_state(3, 2);
        assert!(fixed_point_overlap_bound(&phi, &p, &psi).unwrap().abs() < 1e-15);
    }

    #[test]
    fn lemma_identities_on_random_pairs() {
        let mut worst = 0.0f64;
        for seed in 0..200 {
            let mut r = rng(300 + seed);
            let dim = r.random_range(2..=16);
            let phi = PureState::random(dim, &mut r);
            let p = Projector::random(dim, r.random_range(1..=dim), &mut r);
            let rep = lemma_projection_identities(&phi, &p).unwrap();
            if let Some(v) = rep.identity_violation {
                worst = worst.max(v);
                assert!(rep.overlap_margin.unwrap() > -1e-9);
            }
        }
        assert!(worst < 1e-9, "max violation {worst:e}");
    }

    #[test]
    fn fixed_point_rejects_non_fixed_vectors() {
        let phi = PureState::basis_state(3, 0);
        let p = Projector::onto_basis_state(3, 2);
        let bad = PureState::basis_state(3, 1);
        assert!(matches!(
            fixed_point_overlap_bound(&phi, &p, &bad),
            Err(QuantumError::FixedPointViolated(_))
        ));
    }

    #[test]
    fn almost_orthogonal_saturates_at_extremes() {
        // orthonormal: C = 0, Ŝ = 1
        let states: Vec<PureState> = (0..4).map(|i| PureState::basis_state(4, i)).collect();
        let r = check_almost_orthogonal(&states).unwrap();
        assert!(r.c.abs() < 1e-12 && (r.s_hat - 1.0).abs() < 1e-9 && r.pass);
        // identical: C = n(n−1), Ŝ = n, bound = 1 + (n−1)
        let same: Vec<PureState> = (0..4).map(|_| PureState::basis_state(4, 0)).collect();
        let r = check_almost_orthogonal(&same).unwrap();
        assert!((r.c - 12.0).abs() < 1e-9);
        assert!((r.s_hat - 4.0).abs() < 1e-9);
        assert!((r.bound - 4.0).abs() < 1e-9 && r.pass);
    }

    #[test]
    fn almost_orthogonal_matches_gram_oracle() {
        for seed in 0..50 {
            let mut r = rng(400 + seed);
            let dim = r.random_range(2..=16);
            let n = r.random_range(2..=8);
            let states: Vec<PureState> = (0..n).map(|_| PureState::random(dim, &mut r)).collect();
            let rep = check_almost_orthogonal(&states).unwrap();
            assert!(rep.pass, "margin {}", rep.margin);
            // Gram route: λ_max of K with K_ij = ⟨φ_i|φ_j⟩ equals λ_max of M
            let gram = CMatrix::from_fn(n, n, |i, j| states[i].inner(&states[j]));
            let lam = max_eigenvalue(&hermitize(&gram));
            assert!((lam - rep.s_hat).abs() < 1e-9, "{lam} vs {}", rep.s_hat);
        }
    }

    #[test]
    fn main_proposition_holds_on_random_instances() {
        let cfg = SweepConfig::new(200, 16, 6, 1, 8);
        let summary = sweep_main_proposition(&cfg);
        assert_eq!(summary.fails, 0, "min margin {}", summary.min_margin);
        assert!(summary.trials > 0);
    }

    #[test]
    fn main_proposition_rejects_bad_kappa() {
        let (sigma, family) = tightness_instance(3);
        assert!(matches!(
            check_main_proposition(&sigma, &family, 1.0),
            Err(QuantumError::KappaOutOfRange(_))
        ));
    }

    #[test]
    fn main_proposition_identity_case() {
        let sigma = DensityMatrix::maximally_mixed(4);
        let family = ProjectorFamily::all_identity(4, 3);
        let r = check_main_proposition(&sigma, &family, 2.0).unwrap();
        // RHS = 2(1/3 + √2) > 1 = V
        assert!(r.pass && (r.v - 1.0).abs() < 1e-12 && r.rhs > 1.0);
        assert_eq!(r.z_size, 3);
    }

    #[test]
    fn main_proposition_tightness_case() {
        let (sigma, family) = tightness_instance(4);
        let r = check_main_proposition(&sigma, &family, 2.0).unwrap();
        // RHS ≥ 2/n ≥ V = 1/n
        assert!(r.pass && r.rhs >= 2.0 / 4.0 - 1e-12);
    }

    #[test]
    fn pinching_single_block_is_exact_zero() {
        let psi = PureState::random(6, &mut rng(9));
        let p = Projector::random(6, 3, &mut rng(10));
        let r = check_pinching(&psi, &[p]).unwrap();
        assert!(r.pass && r.min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn pinching_on_basis_blocks() {
        // ψ uniform over m basis states, P_i = |i⟩⟨i|
        for m in 2..=5 {
            let psi = PureState::uniform_superposition(m);
            let blocks: Vec<Projector> =
                (0..m).map(|i| Projector::onto_basis_state(m, i)).collect();
            let r = check_pinching(&psi, &blocks).unwrap();
            assert!(r.pass, "m={m} min eig {}", r.min_eigenvalue);
            // LHS = (1/m)Σ|i⟩⟨i| touches the coarse term on the support
            // direction, so the smallest eigenvalue sits at 0
            assert!(r.min_eigenvalue.abs() < 1e-10);
        }
    }

    #[test]
    fn pinching_rejects_overlapping_blocks() {
        let psi = PureState::random(4, &mut rng(11));
        let p = Projector::identity(4);
        assert!(matches!(
            check_pinching(&psi, &[p.clone(), p]),
            Err(QuantumError::BlocksNotOrthogonal(_))
        ));
    }

    #[test]
    fn pinching_sweep_passes() {
        let cfg = SweepConfig::new(200, 16, 5, 1, 12);
        let summary = sweep_pinching(&cfg);
        assert_eq!(summary.fails, 0, "min margin {}", summary.min_margin);
    }

    #[test]
    fn bound_comparison_reference_points() {
        let b = compare_bounds(1.0, 2, 1);
        assert!((b.ours - 1.0 / 512.0).abs() < 1e-15);
        assert!((b.unruh.unwrap() - 0.5).abs() < 1e-15);
        // V = 1/n: cubic bound collapses; old bound needs V ≥ 1/√2 ≈ 0.707
        let b = compare_bounds(0.5, 2, 1);
        assert!(b.ours == 0.0);
        assert!(b.unruh.is_none());
        let b = compare_bounds(0.9, 100, 1);
        assert!((b.unruh.unwrap() - 0.72).abs() < 1e-12);
        assert!((b.ours - 0.89f64.powi(3) / 64.0).abs() < 1e-12);
    }

    #[test]
    fn both_bounds_hold_where_applicable() {
        let cfg = SweepConfig::new(400, 16, 6, 1, 13);
        let summary = sweep_bound_comparison(&cfg);
        assert_eq!(summary.ours_violations, 0);
        assert_eq!(summary.unruh_violations, 0);
        assert!(summary.high_v > 0, "no instances reached V ≥ 1/√n");
        assert!(summary.mid_v > 0, "no instances in the mid-V regime");
    }

    #[test]
    fn density_validation_rejects_bad_inputs() {
        let not_trace_one = CMatrix::identity(3, 3);
        assert!(DensityMatrix::new(not_trace_one).is_err());
        let mut not_hermitian = CMatrix::zeros(2, 2);
        not_hermitian[(0, 0)] = Complex64::new(1.0, 0.0);
        not_hermitian[(0, 1)] = Complex64::new(0.7, 0.0);
        assert!(DensityMatrix::new(not_hermitian).is_err());
    }

    #[test]
    fn projector_validation_rejects_non_idempotent() {
        let half = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(matches!(
            Projector::new(half),
            Err(QuantumError::NotAProjector(_))
        ));
    }
}
