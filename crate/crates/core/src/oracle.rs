//! Brute-force ground truth for the closed forms in [`crate::cloner`] and
//! [`crate::infotheory`].
//!
//! The attack is built explicitly as a state vector over Bob's copy `B`,
//! Eve's copy `E` and the cloning machine `E'` (`d³` amplitudes, stored with
//! `B` most significant). Fidelities come from partial traces, Eve's
//! information from explicit measurements. A seeded Monte Carlo simulator
//! reproduces the sifting and error statistics of both protocols.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloner::{amplitude_matrix, two_basis_optimal, universal_from_f, AmplitudeMatrix, ClonerKind, ClonerParams};
use crate::error::{check_dim, check_range, QkdError, Result};
use crate::hilbert::{bell_ket, computational_ket, fourier_dual_ket, inner, reduced_density, ErrorOp, Ket};
use crate::infotheory::Protocol;
use crate::{EXACT_TOL, NUMERIC_TOL};

/// Largest dimension the state-vector checks accept.
pub const ORACLE_MAX_DIM: usize = 8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn check_oracle_dim(d: usize) -> Result<()> {
    check_dim(d)?;
    if d > ORACLE_MAX_DIM {
        return Err(QkdError::Precondition(format!(
            "oracle supports d <= {ORACLE_MAX_DIM}, got {d}"
        )));
    }
    Ok(())
}

/// Output of a cloning attack on one input qudit, over registers `(B, E, E')`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    d: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, b: usize, e: usize, e2: usize) -> Complex64 {
        let d = self.d;
        self.amps[(b * d + e) * d + e2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn bob_density(&self) -> DMatrix<Complex64> {
        reduced_density(&self.amps, &[self.d; 3], 0)
    }

    pub fn eve_density(&self) -> DMatrix<Complex64> {
        reduced_density(&self.amps, &[self.d; 3], 1)
    }

    pub fn ancilla_density(&self) -> DMatrix<Complex64> {
        reduced_density(&self.amps, &[self.d; 3], 2)
    }

    /// The `d²` amplitudes of `(E, E')` with Bob's register fixed to `|b⟩`.
    fn eve_slice(&self, b: usize) -> &[Complex64] {
        let dd = self.d * self.d;
        &self.amps[b * dd..(b + 1) * dd]
    }
}

/// Applies the cloner with amplitude matrix `a` to `|ψ⟩`:
/// `Σ_{m,n} a_{m,n} U_{m,n}|ψ⟩_B ⊗ |B_{m,-n}⟩_{EE'}`.
pub fn clone_state_with_matrix(a: &AmplitudeMatrix, psi: &Ket) -> Result<JointState> {
    let d = a.dim();
    check_oracle_dim(d)?;
    if psi.dim() != d {
        return Err(QkdError::Dimension {
            expected: d,
            got: psi.dim(),
        });
    }
    let dd = d * d;
    let mut amps = vec![ZERO; d * dd];
    for m in 0..d {
        for n in 0..d {
            let coeff = a.get(m, n);
            if coeff == ZERO {
                continue;
            }
            let bob = ErrorOp::new(d, m, n)?.apply_slice(psi.amplitudes());
            let bell = bell_ket(d, m, (d - n) % d)?;
            for (b, &bv) in bob.iter().enumerate() {
                if bv == ZERO {
                    continue;
                }
                for (i, &ev) in bell.amplitudes().iter().enumerate() {
                    amps[b * dd + i] += coeff * bv * ev;
                }
            }
        }
    }
    let state = JointState { d, amps };
    let n = state.norm_sqr();
    if (n - 1.0).abs() > EXACT_TOL {
        return Err(QkdError::Precondition(format!("cloned state has squared norm {n}")));
    }
    Ok(state)
}

pub fn clone_state(p: &ClonerParams, psi: &Ket) -> Result<JointState> {
    clone_state_with_matrix(&amplitude_matrix(p), psi)
}

/// Bob's state written directly as the error mixture
/// `Σ |a_{m,n}|² U_{m,n}|ψ⟩⟨ψ|U_{m,n}†`.
pub fn error_mixture(a: &AmplitudeMatrix, psi: &Ket) -> Result<DMatrix<Complex64>> {
    let d = a.dim();
    let mut rho = DMatrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let w = a.get(m, n).norm_sqr();
            if w == 0.0 {
                continue;
            }
            let phi = ErrorOp::new(d, m, n)?.apply(psi)?;
            let v = phi.amplitudes();
            for i in 0..d {
                for j in 0..d {
                    rho[(i, j)] += v[i] * v[j].conj() * w;
                }
            }
        }
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Computational,
    FourierDual,
}

impl Basis {
    pub fn ket(self, d: usize, i: usize) -> Result<Ket> {
        match self {
            Basis::Computational => computational_ket(d, i),
            Basis::FourierDual => fourier_dual_ket(d, i),
        }
    }
}

/// Distribution of Bob's error read off the cloned state: the input is the
/// first basis state, and entry `j` is the probability that Bob finds basis
/// state `j` (a shift `j` in the computational basis, a phase step `j` in
/// the dual basis).
pub fn bob_error_distribution(p: &ClonerParams, basis: Basis) -> Result<Vec<f64>> {
    let d = p.d;
    let rho = clone_state(p, &basis.ket(d, 0)?)?.bob_density();
    (0..d)
        .map(|j| basis.ket(d, j).map(|k| crate::hilbert::expectation(&rho, &k)))
        .collect()
}

/// Eve's post-measurement states after she learns Bob's shift error `m`
/// from a partial Bell measurement on `(E, E')`, one per Alice input `|k⟩`.
#[derive(Debug, Clone)]
pub struct ConditionalStates {
    pub m: usize,
    /// Probability of observing `m` (identical for every input).
    pub probability: f64,
    /// Normalized `(E, E')` states, indexed by Alice's symbol.
    pub states: Vec<Vec<Complex64>>,
    /// Gram matrix `⟨ψ_i|ψ_j⟩`.
    pub overlaps: DMatrix<Complex64>,
}

pub fn eve_conditional_states_two_bases(p: &ClonerParams, m: usize) -> Result<ConditionalStates> {
    if p.kind != ClonerKind::TwoBases {
        return Err(QkdError::Precondition("two-basis cloner required".into()));
    }
    let d = p.d;
    check_oracle_dim(d)?;
    if m >= d {
        return Err(QkdError::Index { index: m, dim: d });
    }
    let bells: Vec<_> = (0..d).map(|n| bell_ket(d, m, n)).collect::<Result<_>>()?;
    let project = |phi: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![ZERO; d * d];
        for bell in &bells {
            let c = inner(bell.amplitudes(), phi);
            for (o, b) in out.iter_mut().zip(bell.amplitudes()) {
                *o += c * b;
            }
        }
        out
    };

    let mut states = Vec::with_capacity(d);
    let mut probability = 0.0;
    for k in 0..d {
        let joint = clone_state(p, &computational_ket(d, k)?)?;
        // Total weight of outcome m across all of Bob's values.
        let weight: f64 = (0..d)
            .map(|b| project(joint.eve_slice(b)).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        if weight < 1e-15 {
            return Err(QkdError::UndefinedConditional { outcome: m });
        }
        let mut phi = project(joint.eve_slice((k + m) % d));
        let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        phi.iter_mut().for_each(|z| *z /= norm);
        states.push(phi);
        probability = weight;
    }
    let overlaps = gram(&states);
    Ok(ConditionalStates {
        m,
        probability,
        states,
        overlaps,
    })
}

fn gram(states: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let n = states.len();
    DMatrix::from_fn(n, n, |i, j| inner(&states[i], &states[j]))
}

/// Mutual information between a uniformly chosen index and the outcome of
/// the square-root measurement on the corresponding state.
///
/// The states must be normalized with a common, real pairwise overlap.
/// Outcome probabilities are `P(j | i) = |(G^{1/2})_{ji}|²` where `G` is
/// the Gram matrix.
pub fn srm_mutual_information(states: &[Vec<Complex64>]) -> Result<f64> {
    let n = states.len();
    if n < 2 {
        return Err(QkdError::Precondition("need at least two states".into()));
    }
    let g = gram(states);
    let s = g[(0, 1)];
    for i in 0..n {
        if (g[(i, i)].re - 1.0).abs() > NUMERIC_TOL {
            return Err(QkdError::Precondition(format!("state {i} is not normalized")));
        }
        for j in 0..n {
            if i != j && (g[(i, j)] - s).norm() > NUMERIC_TOL {
                return Err(QkdError::Precondition(
                    "states are not symmetric: pairwise overlaps differ".into(),
                ));
            }
        }
    }
    if s.im.abs() > NUMERIC_TOL {
        return Err(QkdError::Precondition("pairwise overlap is not real".into()));
    }

    let eig = g.symmetric_eigen();
    let sqrt_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
    let root = &eig.eigenvectors * sqrt_vals * eig.eigenvectors.adjoint();

    let joint = JointDistribution::new(
        vec!["input", "outcome"],
        vec![n, n],
        (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                root[(j, i)].norm_sqr() / n as f64
            })
            .collect(),
    )?;
    Ok(joint.mutual_information(&[0], &[1]))
}

/// Eve's information against the two-basis protocol computed end to end:
/// partial Bell measurement, then the square-root measurement on each
/// conditional state set, averaged over Bob's error.
pub fn two_basis_eve_information(p: &ClonerParams) -> Result<f64> {
    let mut total = 0.0;
    for m in 0..p.d {
        match eve_conditional_states_two_bases(p, m) {
            Ok(cs) => total += cs.probability * srm_mutual_information(&cs.states)?,
            Err(QkdError::UndefinedConditional { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(total)
}

/// Probability table over several labelled discrete variables, stored
/// row-major with the first variable most significant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    labels: Vec<&'static str>,
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(labels: Vec<&'static str>, dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != dims.len() {
            return Err(QkdError::Precondition("one label per variable required".into()));
        }
        let size: usize = dims.iter().product();
        if probs.len() != size {
            return Err(QkdError::Dimension {
                expected: size,
                got: probs.len(),
            });
        }
        if probs.iter().any(|&p| p < -EXACT_TOL || !p.is_finite()) {
            return Err(QkdError::Precondition("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(QkdError::Precondition(format!("probabilities sum to {total}")));
        }
        Ok(JointDistribution { labels, dims, probs })
    }

    pub fn labels(&self) -> &[&'static str] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, &dim) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % dim;
            flat /= dim;
        }
        idx
    }

    /// Iterates `(outcome indices, probability)` over the full table.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.unravel(i), p))
    }

    /// Total probability of outcomes satisfying `pred`.
    pub fn probability_where<P: Fn(&[usize]) -> bool>(&self, pred: P) -> f64 {
        self.iter().filter(|(idx, _)| pred(idx)).map(|(_, p)| p).sum()
    }

    fn entropy_of(&self, vars: &[usize]) -> f64 {
        let size: usize = vars.iter().map(|&v| self.dims[v]).product();
        let mut marg = vec![0.0; size];
        for (idx, p) in self.iter() {
            let key = vars.iter().fold(0, |acc, &v| acc * self.dims[v] + idx[v]);
            marg[key] += p;
        }
        -marg.iter().map(|&p| crate::infotheory::xlog2x(p)).sum::<f64>()
    }

    /// `I(X; Y)` in bits for disjoint variable groups `x` and `y`.
    pub fn mutual_information(&self, x: &[usize], y: &[usize]) -> f64 {
        let xy: Vec<usize> = x.iter().chain(y).copied().collect();
        self.entropy_of(x) + self.entropy_of(y) - self.entropy_of(&xy)
    }
}

/// Exact outcome distribution of the (d+1)-basis attack: Alice sends a
/// uniform `|a⟩`, the universal cloner with Bob fidelity `f` acts, and Bob,
/// Eve and the ancilla are all read in the computational basis. Variables
/// are `(alice, bob, eve, ancilla)`.
pub fn all_bases_joint_distribution(d: usize, f: f64) -> Result<JointDistribution> {
    check_oracle_dim(d)?;
    let p = universal_from_f(d, f)?;
    let dd = d * d;
    let mut probs = vec![0.0; d * d * dd];
    for a in 0..d {
        let joint = clone_state(&p, &computational_ket(d, a)?)?;
        for (i, amp) in joint.amplitudes().iter().enumerate() {
            probs[a * d * dd + i] = amp.norm_sqr() / d as f64;
        }
    }
    JointDistribution::new(vec!["alice", "bob", "eve", "ancilla"], vec![d, d, d, d], probs)
}

/// Statistics of Eve's strategy read off [`all_bases_joint_distribution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllBasesAnalysis {
    /// `P(Bob error = 0)`.
    pub p_no_error: f64,
    /// `P(eve = alice | Bob error = 0)`.
    pub p_eve_correct_no_error: f64,
    /// Largest and smallest `P(eve = l | Bob error = 0)` over wrong `l`.
    pub p_eve_wrong_max: f64,
    pub p_eve_wrong_min: f64,
    /// `P(eve = alice | Bob error ≠ 0)`.
    pub p_eve_correct_with_error: f64,
    /// `P(ancilla - eve = bob - alice mod d)`.
    pub p_difference_reveals_error: f64,
    /// `I(alice; eve, ancilla)`.
    pub eve_information: f64,
}

pub fn analyze_all_bases(dist: &JointDistribution) -> AllBasesAnalysis {
    let d = dist.dims()[0];
    let err = |i: &[usize]| (i[1] + d - i[0]) % d;
    let p_no_error = dist.probability_where(|i| err(i) == 0);
    let p_correct0 = dist.probability_where(|i| err(i) == 0 && i[2] == i[0]) / p_no_error;
    let mut wrong_max = 0.0f64;
    let mut wrong_min = 1.0f64;
    for shift in 1..d {
        let w = dist.probability_where(|i| err(i) == 0 && (i[2] + d - i[0]) % d == shift) / p_no_error;
        wrong_max = wrong_max.max(w);
        wrong_min = wrong_min.min(w);
    }
    let p_err = 1.0 - p_no_error;
    let p_correct_err = if p_err > EXACT_TOL {
        dist.probability_where(|i| err(i) != 0 && i[2] == i[0]) / p_err
    } else {
        1.0
    };
    AllBasesAnalysis {
        p_no_error,
        p_eve_correct_no_error: p_correct0,
        p_eve_wrong_max: wrong_max,
        p_eve_wrong_min: wrong_min,
        p_eve_correct_with_error: p_correct_err,
        p_difference_reveals_error: dist.probability_where(|i| (i[3] + d - i[2]) % d == err(i)),
        eve_information: dist.mutual_information(&[0], &[2, 3]),
    }
}

/// Monte Carlo configuration for one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub d: usize,
    pub protocol: Protocol,
    /// Configured disturbance `D = 1 - F`.
    pub disturbance: f64,
    pub rounds: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.d)?;
        check_range("disturbance", self.disturbance, 0.0, 1.0 - 1.0 / self.d as f64)?;
        if self.rounds == 0 {
            return Err(QkdError::Precondition("rounds must be at least 1".into()));
        }
        Ok(())
    }

    /// Cloner that produces the configured disturbance.
    pub fn cloner(&self) -> Result<ClonerParams> {
        let f = (1.0 - self.disturbance).max(1.0 / self.d as f64);
        match self.protocol {
            Protocol::TwoBases => two_basis_optimal(self.d, f),
            Protocol::AllBases => universal_from_f(self.d, f),
        }
    }
}

/// Rounds handled by one RNG stream.
pub const SIM_CHUNK: u64 = 1 << 16;

pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng::seed_from_u64(seed), one stream per 65536-round chunk (stream id = chunk index)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub rounds_kept: u64,
    pub symbol_errors: u64,
    pub sift_fraction: f64,
    pub expected_sift_fraction: f64,
    /// Binomial standard error of the sift fraction at its expected value.
    pub sift_fraction_stderr: f64,
    pub qber: f64,
    pub expected_qber: f64,
    /// Binomial standard error of the QBER at the configured disturbance,
    /// over the kept rounds.
    pub qber_stderr: f64,
    pub rng: String,
}

impl SimReport {
    /// `|empirical - expected| <= k σ` for the sift fraction.
    pub fn sift_within(&self, k: f64) -> bool {
        (self.sift_fraction - self.expected_sift_fraction).abs() <= k * self.sift_fraction_stderr
    }

    pub fn qber_within(&self, k: f64) -> bool {
        (self.qber - self.expected_qber).abs() <= k * self.qber_stderr
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn sample(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Runs the sifting protocol with the channel modelled as the cloner's
/// stochastic error process.
///
/// Each round Alice and Bob pick bases uniformly and Alice picks a symbol
/// uniformly. Rounds with matching bases are kept; Bob's symbol is Alice's
/// shifted by an error drawn from the error distribution of the basis in
/// use. Bases beyond the first two only occur in the (d+1)-basis protocol,
/// whose universal cloner has the same error distribution in every basis.
///
/// Work is split into fixed chunks of [`SIM_CHUNK`] rounds, each with its
/// own RNG stream, so the result depends only on `(seed, rounds)` and not
/// on the number of worker threads.
pub fn run_protocol(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let d = cfg.d;
    let cloner = cfg.cloner()?;
    let a = amplitude_matrix(&cloner);
    let shift_cdf = cumulative(&(0..d).map(|m| a.shift_error_probability(m)).collect::<Vec<_>>());
    let phase_cdf = cumulative(&(0..d).map(|n| a.phase_error_probability(n)).collect::<Vec<_>>());
    let bases = cfg.protocol.basis_count(d);

    let chunks = cfg.rounds.div_ceil(SIM_CHUNK);
    let (kept, errors) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk);
            let n = SIM_CHUNK.min(cfg.rounds - chunk * SIM_CHUNK);
            let mut kept = 0u64;
            let mut errors = 0u64;
            for _ in 0..n {
                let alice_basis = rng.random_range(0..bases);
                let symbol = rng.random_range(0..d);
                let bob_basis = rng.random_range(0..bases);
                if alice_basis != bob_basis {
                    continue;
                }
                kept += 1;
                let cdf = if alice_basis == 1 { &phase_cdf } else { &shift_cdf };
                let shift = sample(cdf, rng.random::<f64>());
                if (symbol + shift) % d != symbol {
                    errors += 1;
                }
            }
            (kept, errors)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));

    let expected_sift = cfg.protocol.sift_yield(d);
    let expected_qber = 1.0 - cloner.bob_fidelity();
    let n = cfg.rounds as f64;
    let qber = if kept > 0 { errors as f64 / kept as f64 } else { 0.0 };
    let qber_stderr = if kept > 0 {
        (expected_qber * (1.0 - expected_qber) / kept as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimReport {
        config: *cfg,
        rounds_kept: kept,
        symbol_errors: errors,
        sift_fraction: kept as f64 / n,
        expected_sift_fraction: expected_sift,
        sift_fraction_stderr: (expected_sift * (1.0 - expected_sift) / n).sqrt(),
        qber,
        expected_qber,
        qber_stderr,
        rng: RNG_DESCRIPTION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloner::{eve_params, fidelities, two_basis_optimal};
    use crate::hilbert::expectation;
    use crate::infotheory::{eve_info_all_bases, eve_info_two_bases};
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_cloner_leaves_bell_pair() {
        let p = two_basis_optimal(3, 1.0).unwrap();
        let s = clone_state(&p, &computational_ket(3, 2).unwrap()).unwrap();
        let bell = bell_ket(3, 0, 0).unwrap();
        for b in 0..3 {
            for i in 0..9 {
                let want = if b == 2 { bell.amplitudes()[i] } else { ZERO };
                assert_abs_diff_eq!((s.amplitude(b, i / 3, i % 3) - want).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn cloned_fidelity_in_both_bases() {
        let p = two_basis_optimal(3, 0.8).unwrap();
        let k = computational_ket(3, 1).unwrap();
        let rho = clone_state(&p, &k).unwrap().bob_density();
        assert_abs_diff_eq!(expectation(&rho, &k), 0.8, epsilon = 1e-12);
        let l = fourier_dual_ket(3, 2).unwrap();
        let rho = clone_state(&p, &l).unwrap().bob_density();
        assert_abs_diff_eq!(expectation(&rho, &l), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn bob_state_is_error_mixture() {
        for d in 2..=5 {
            for &f in &[0.55, 0.7, 0.93] {
                for p in [two_basis_optimal(d, f).unwrap(), universal_from_f(d, f).unwrap()] {
                    let a = amplitude_matrix(&p);
                    for psi in [computational_ket(d, d - 1).unwrap(), fourier_dual_ket(d, 1).unwrap()] {
                        let rho = clone_state(&p, &psi).unwrap().bob_density();
                        let mix = error_mixture(&a, &psi).unwrap();
                        let dev = (rho - mix).iter().map(|z| z.norm()).fold(0.0, f64::max);
                        assert!(dev < 1e-12, "d={d} F={f} dev={dev}");
                    }
                }
            }
        }
    }

    #[test]
    fn eve_clone_fidelity_matches_primed_amplitudes() {
        for d in 2..=5 {
            for &f in &[0.6, 0.8, 1.0] {
                for p in [two_basis_optimal(d, f).unwrap(), universal_from_f(d, f).unwrap()] {
                    let want = eve_params(&p).bob_fidelity();
                    for k in 0..d {
                        let psi = computational_ket(d, k).unwrap();
                        let rho = clone_state(&p, &psi).unwrap().eve_density();
                        assert_abs_diff_eq!(expectation(&rho, &psi), want, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn error_distributions() {
        let p = two_basis_optimal(2, 1.0).unwrap();
        let dist = bob_error_distribution(&p, Basis::Computational).unwrap();
        assert_abs_diff_eq!(dist[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[1], 0.0, epsilon = 1e-12);

        let p = two_basis_optimal(3, 0.7).unwrap();
        for basis in [Basis::Computational, Basis::FourierDual] {
            let dist = bob_error_distribution(&p, basis).unwrap();
            for (got, want) in dist.iter().zip([0.7, 0.15, 0.15]) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
            }
        }

        let p = universal_from_f(2, 5.0 / 6.0).unwrap();
        let dist = bob_error_distribution(&p, Basis::Computational).unwrap();
        assert_abs_diff_eq!(dist[0], 5.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[1], 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_overlaps_at_qubit_crossing() {
        let f = 0.5 * (1.0 + 0.5f64.sqrt());
        let cs = eve_conditional_states_two_bases(&two_basis_optimal(2, f).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(cs.overlaps[(0, 1)].re, 0.5f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(cs.overlaps[(0, 1)].im, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cs.probability, f, epsilon = 1e-12);
    }

    #[test]
    fn conditional_states_identical_when_channel_is_perfect() {
        let cs = eve_conditional_states_two_bases(&two_basis_optimal(4, 1.0).unwrap(), 0).unwrap();
        for z in cs.overlaps.iter() {
            assert_abs_diff_eq!((z - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(srm_mutual_information(&cs.states).unwrap(), 0.0, epsilon = 1e-9);
        assert!(matches!(
            eve_conditional_states_two_bases(&two_basis_optimal(4, 1.0).unwrap(), 1),
            Err(QkdError::UndefinedConditional { outcome: 1 })
        ));
    }

    #[test]
    fn conditional_overlap_independent_of_error() {
        let d = 3;
        let f = 0.9;
        let want = (d as f64 * f - 1.0) / (d as f64 - 1.0);
        for m in 0..d {
            let cs = eve_conditional_states_two_bases(&two_basis_optimal(d, f).unwrap(), m).unwrap();
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        assert_abs_diff_eq!((cs.overlaps[(i, j)] - want).norm(), 0.0, epsilon = 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn conditional_states_need_two_basis_cloner() {
        assert!(matches!(
            eve_conditional_states_two_bases(&universal_from_f(3, 0.9).unwrap(), 0),
            Err(QkdError::Precondition(_))
        ));
    }

    #[test]
    fn srm_on_orthogonal_states_is_perfect() {
        for d in 2..=5 {
            let states: Vec<_> = (0..d)
                .map(|k| computational_ket(d, k).unwrap().amplitudes().to_vec())
                .collect();
            assert_abs_diff_eq!(
                srm_mutual_information(&states).unwrap(),
                (d as f64).log2(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn srm_rejects_asymmetric_sets() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let states = vec![
            vec![Complex64::new(1.0, 0.0), ZERO, ZERO],
            vec![ZERO, Complex64::new(1.0, 0.0), ZERO],
            vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0), ZERO],
        ];
        assert!(matches!(
            srm_mutual_information(&states),
            Err(QkdError::Precondition(_))
        ));
    }

    #[test]
    fn srm_reproduces_closed_form_for_qutrit() {
        let p = two_basis_optimal(3, 0.9).unwrap();
        let via_oracle = two_basis_eve_information(&p).unwrap();
        assert_abs_diff_eq!(via_oracle, eve_info_two_bases(3, 0.9).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn all_bases_distribution_properties() {
        let d = 2;
        let f = 0.9;
        let r = analyze_all_bases(&all_bases_joint_distribution(d, f).unwrap());
        let f_e = fidelities(&universal_from_f(d, f).unwrap()).f_e;
        assert_abs_diff_eq!(r.p_no_error, f, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_eve_correct_no_error, (f + f_e - 1.0) / f, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_eve_wrong_max, (1.0 - f_e) / f, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_eve_correct_with_error, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_difference_reveals_error, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eve_information, eve_info_all_bases(d, f).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn all_bases_perfect_channel_hides_symbol() {
        let d = 4;
        let r = analyze_all_bases(&all_bases_joint_distribution(d, 1.0).unwrap());
        assert_abs_diff_eq!(r.p_eve_correct_no_error, 1.0 / d as f64, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_eve_wrong_max, 1.0 / d as f64, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_eve_wrong_min, 1.0 / d as f64, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eve_information, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_dimension_cap() {
        let p = two_basis_optimal(9, 0.9).unwrap();
        assert!(clone_state(&p, &computational_ket(9, 0).unwrap()).is_err());
        assert!(all_bases_joint_distribution(9, 0.9).is_err());
    }

    #[test]
    fn joint_distribution_validation() {
        assert!(JointDistribution::new(vec!["a"], vec![2], vec![0.5, 0.6]).is_err());
        assert!(JointDistribution::new(vec!["a"], vec![2], vec![1.2, -0.2]).is_err());
        assert!(JointDistribution::new(vec!["a", "b"], vec![2], vec![0.5, 0.5]).is_err());
        let j = JointDistribution::new(vec!["a", "b"], vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(j.mutual_information(&[0], &[1]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn noiseless_qubit_run() {
        let cfg = SimConfig {
            d: 2,
            protocol: Protocol::TwoBases,
            disturbance: 0.0,
            rounds: 100_000,
            seed: 1,
        };
        let r = run_protocol(&cfg).unwrap();
        assert_eq!(r.symbol_errors, 0);
        assert_eq!(r.qber, 0.0);
        assert!(r.sift_within(3.0), "{r:?}");
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = SimConfig {
            d: 5,
            protocol: Protocol::AllBases,
            disturbance: 0.2,
            rounds: 200_001,
            seed: 99,
        };
        assert_eq!(run_protocol(&cfg).unwrap(), run_protocol(&cfg).unwrap());
        let other = SimConfig { seed: 100, ..cfg };
        assert_ne!(
            run_protocol(&cfg).unwrap().rounds_kept,
            run_protocol(&other).unwrap().rounds_kept
        );
    }

    #[test]
    fn config_validation() {
        let base = SimConfig {
            d: 3,
            protocol: Protocol::TwoBases,
            disturbance: 0.1,
            rounds: 10,
            seed: 0,
        };
        assert!(base.validate().is_ok());
        assert!(SimConfig {
            disturbance: 0.7,
            ..base
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            disturbance: -0.1,
            ..base
        }
        .validate()
        .is_err());
        assert!(SimConfig { rounds: 0, ..base }.validate().is_err());
        assert!(SimConfig { d: 1, ..base }.validate().is_err());
        // D = 1 - 1/d is allowed.
        assert!(run_protocol(&SimConfig {
            disturbance: 2.0 / 3.0,
            ..base
        })
        .is_ok());
    }
}
