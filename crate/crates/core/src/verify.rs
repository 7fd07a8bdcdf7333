//! Oracle-versus-closed-form checks, collected into a report.
//!
//! Every check records the worst residual it saw across all dimensions and
//! fidelity samples, and passes when that residual is within its tolerance.

use serde::{Deserialize, Serialize};

use crate::bounds::{threshold_two_bases_numeric, two_bases_crossing_fidelity};
use crate::cloner::{
    amplitude_matrix, eve_params, fidelities, fourier_dual_amplitudes, two_basis_eve_fidelity, two_basis_optimal,
    universal_from_f, ClonerParams,
};
use crate::error::{QkdError, Result};
use crate::hilbert::{computational_ket, expectation, fourier_dual_ket};
use crate::infotheory::{eve_info_all_bases, eve_info_two_bases, Protocol};
use crate::oracle::{
    all_bases_joint_distribution, analyze_all_bases, clone_state, error_mixture, two_basis_eve_information,
    ORACLE_MAX_DIM,
};
use crate::{EXACT_TOL, NUMERIC_TOL};

/// Tolerance for the grid-search optimality check.
pub const OPTIMALITY_TOL: f64 = 1e-6;
/// Grid points over the free amplitude in the optimality check.
pub const OPTIMALITY_GRID: usize = 20_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub d_max: usize,
    pub fidelity_samples: usize,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    samples: usize,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            worst: 0.0,
            samples: 0,
        }
    }

    fn record(&mut self, residual: f64) {
        // NaN must fail the check, so it wins over any finite residual.
        self.worst = if residual.is_nan() {
            f64::NAN
        } else {
            self.worst.max(residual)
        };
        self.samples += 1;
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.worst <= self.tolerance,
            worst_residual: self.worst,
            tolerance: self.tolerance,
            samples: self.samples,
        }
    }
}

/// `n` evenly spaced fidelities in `(lo, 1]`, ending at 1.
pub fn fidelity_grid(lo: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (1.0 - lo) * i as f64 / n as f64).collect()
}

/// Largest Eve fidelity over two-basis cloners with Bob fidelity `f`,
/// scanning `v` on a uniform grid of its admissible interval.
/// Returns `(best F_E, v at the best point)`.
pub fn grid_search_eve_fidelity(d: usize, f: f64, steps: usize) -> Result<(f64, f64)> {
    let lo = (2.0 * f - 1.0).max(0.0).sqrt();
    let hi = f.sqrt();
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..steps {
        let v = if steps == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (steps - 1) as f64
        };
        let p = ClonerParams::two_basis_with_v(d, f, v.min(hi))?;
        let f_e = eve_params(&p).bob_fidelity();
        if f_e > best.0 {
            best = (f_e, v);
        }
    }
    Ok(best)
}

fn max_abs(m: &nalgebra::DMatrix<num_complex::Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Runs every check for `2 <= d <= d_max`, with `fidelity_samples`
/// fidelities per cloner family and dimension.
pub fn run_verification(d_max: usize, fidelity_samples: usize) -> Result<VerificationReport> {
    if !(2..=ORACLE_MAX_DIM).contains(&d_max) {
        return Err(QkdError::Precondition(format!(
            "d_max must lie in [2, {ORACLE_MAX_DIM}], got {d_max}"
        )));
    }
    let mut normalization = Tally::new("normalization", EXACT_TOL);
    let mut fourier = Tally::new("fourier_dual_matches_closed_form", EXACT_TOL);
    let mut mixture = Tally::new("bob_state_is_error_mixture", EXACT_TOL);
    let mut bob_f = Tally::new("oracle_bob_fidelity", EXACT_TOL);
    let mut bob_f_bar = Tally::new("oracle_bob_dual_fidelity", EXACT_TOL);
    let mut eve_f = Tally::new("oracle_eve_fidelity", EXACT_TOL);
    let mut eve_closed = Tally::new("eve_fidelity_closed_form", EXACT_TOL);
    let mut sym_err = Tally::new("equiprobable_shift_errors", EXACT_TOL);
    let mut srm = Tally::new("srm_information_two_bases", NUMERIC_TOL);
    let mut joint = Tally::new("joint_distribution_information_all_bases", NUMERIC_TOL);
    let mut joint_probs = Tally::new("all_bases_eve_guess_probabilities", EXACT_TOL);
    let mut crossing = Tally::new("two_bases_crossing", NUMERIC_TOL);
    let mut optimality = Tally::new("grid_search_optimality", OPTIMALITY_TOL);

    for d in 2..=d_max {
        let df = d as f64;
        let two = fidelity_grid(1.0 / df, fidelity_samples);
        let all = fidelity_grid(Protocol::AllBases.min_fidelity(d), fidelity_samples);
        let families = two
            .iter()
            .map(|&f| two_basis_optimal(d, f))
            .chain(all.iter().map(|&f| universal_from_f(d, f)));
        for p in families {
            let p = p?;
            let f = p.bob_fidelity();
            let a = amplitude_matrix(&p);
            let eve = eve_params(&p);
            let report = fidelities(&p);
            normalization.record((a.norm_sqr() - 1.0).abs().max((eve.norm_sqr() - 1.0).abs()));
            let b = fourier_dual_amplitudes(&a);
            fourier.record(b.max_abs_diff(&amplitude_matrix(&eve)));

            for k in 0..d {
                let ket = computational_ket(d, k)?;
                let state = clone_state(&p, &ket)?;
                let rho_b = state.bob_density();
                mixture.record(max_abs(&(&rho_b - error_mixture(&a, &ket)?)));
                bob_f.record((expectation(&rho_b, &ket) - report.f).abs());
                eve_f.record((expectation(&state.eve_density(), &ket) - report.f_e).abs());

                let dual = fourier_dual_ket(d, k)?;
                let rho_dual = clone_state(&p, &dual)?.bob_density();
                bob_f_bar.record((expectation(&rho_dual, &dual) - report.f_bar).abs());
            }
            for m in 1..d {
                sym_err.record((a.shift_error_probability(m) - (1.0 - f) / (df - 1.0)).abs());
            }

            match p.kind {
                crate::cloner::ClonerKind::TwoBases => {
                    eve_closed.record((report.f_e - two_basis_eve_fidelity(d, f)?).abs());
                    srm.record((two_basis_eve_information(&p)? - eve_info_two_bases(d, f)?).abs());
                }
                crate::cloner::ClonerKind::Universal => {
                    let stats = analyze_all_bases(&all_bases_joint_distribution(d, f)?);
                    joint.record((stats.eve_information - eve_info_all_bases(d, f)?).abs());
                    let f_e = report.f_e;
                    joint_probs.record(
                        [
                            (stats.p_eve_correct_no_error - (f + f_e - 1.0) / f).abs(),
                            (stats.p_eve_wrong_max - (1.0 - f_e) / ((df - 1.0) * f)).abs(),
                            (stats.p_eve_wrong_min - (1.0 - f_e) / ((df - 1.0) * f)).abs(),
                            (stats.p_eve_correct_with_error - 1.0).abs(),
                            (stats.p_difference_reveals_error - 1.0).abs(),
                        ]
                        .into_iter()
                        .fold(0.0, f64::max),
                    );
                }
            }
        }

        crossing.record((threshold_two_bases_numeric(d)?.f_star - two_bases_crossing_fidelity(d)).abs());

        if [2, 3, 5].contains(&d) {
            for &f in &[0.55, 0.7, 0.8536, 0.9, 0.97] {
                if f < 1.0 / df {
                    continue;
                }
                let (best, _) = grid_search_eve_fidelity(d, f, OPTIMALITY_GRID)?;
                optimality.record((best - two_basis_eve_fidelity(d, f)?).max(0.0));
            }
        }
    }

    let checks = vec![
        normalization,
        fourier,
        mixture,
        bob_f,
        bob_f_bar,
        eve_f,
        eve_closed,
        sym_err,
        srm,
        joint,
        joint_probs,
        crossing,
        optimality,
    ]
    .into_iter()
    .filter(|t| t.samples > 0)
    .map(Tally::finish)
    .collect();

    Ok(VerificationReport {
        d_max,
        fidelity_samples,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let r = run_verification(4, 5).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(r.all_passed());
        assert!(r.checks.iter().any(|c| c.name == "grid_search_optimality"));
    }

    #[test]
    fn rejects_large_dimension() {
        assert!(run_verification(9, 3).is_err());
        assert!(run_verification(1, 3).is_err());
    }

    #[test]
    fn grid_search_peaks_at_optimal_cloner() {
        for d in [2, 3, 5] {
            let f = 0.8;
            let (best, v) = grid_search_eve_fidelity(d, f, 4001).unwrap();
            assert!(best <= two_basis_eve_fidelity(d, f).unwrap() + 1e-12);
            assert!((v - f).abs() < 1e-3, "d={d}: peak at v={v}");
        }
    }

    #[test]
    fn fidelity_grid_ends_at_one() {
        let g = fidelity_grid(0.5, 4);
        assert_eq!(g, vec![0.625, 0.75, 0.875, 1.0]);
    }
}
