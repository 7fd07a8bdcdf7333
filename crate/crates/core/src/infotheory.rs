//! Mutual information between Alice, Bob and Eve, plus the secret-key-rate
//! and uncertainty bounds built on it.
//!
//! Every quantity is in bits per sifted symbol. `0 · log 0` is taken as 0.

use serde::{Deserialize, Serialize};

use crate::cloner::{two_basis_eve_fidelity, universal_eve_fidelity};
use crate::error::{check_dim, check_range, QkdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    /// Computational and Fourier-dual bases.
    TwoBases,
    /// All `d + 1` mutually unbiased bases.
    AllBases,
}

impl Protocol {
    pub fn basis_count(self, d: usize) -> usize {
        match self {
            Protocol::TwoBases => 2,
            Protocol::AllBases => d + 1,
        }
    }

    /// Fraction of rounds that survive sifting.
    pub fn sift_yield(self, d: usize) -> f64 {
        1.0 / self.basis_count(d) as f64
    }

    /// Smallest Bob fidelity for which Eve's information is defined.
    pub fn min_fidelity(self, d: usize) -> f64 {
        match self {
            Protocol::TwoBases => 1.0 / d as f64,
            Protocol::AllBases => all_bases_min_fidelity(d),
        }
    }
}

/// `p log₂ p`, zero at `p = 0`.
pub fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// `p log₂(p / q)`, zero at `p = 0`.
fn xlog2_ratio(p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * (p / q).log2()
    }
}

/// Information of a d-ary symmetric channel with fidelity `f` and the
/// `d - 1` errors equiprobable:
/// `log₂d + F log₂F + (1-F) log₂((1-F)/(d-1))`.
pub fn info_symmetric(d: usize, f: f64) -> Result<f64> {
    check_dim(d)?;
    check_range("F", f, 0.0, 1.0)?;
    let f = f.clamp(0.0, 1.0);
    Ok((d as f64).log2() + xlog2x(f) + xlog2_ratio(1.0 - f, (d - 1) as f64))
}

/// Eve's information against the two-basis protocol: the symmetric-channel
/// formula evaluated at Eve's fidelity.
pub fn eve_info_two_bases(d: usize, f: f64) -> Result<f64> {
    let f_e = two_basis_eve_fidelity(d, f)?;
    info_symmetric(d, f_e.min(1.0))
}

/// Bob fidelity below which `F + F_E - 1` turns negative for the universal
/// cloner. Found by bisection; `F + F_E - 1` is increasing in `F`.
fn all_bases_min_fidelity(d: usize) -> f64 {
    let g = |f: f64| f + universal_eve_fidelity(d, f).unwrap_or(f64::NAN) - 1.0;
    let mut lo = 1.0 / (d + 1) as f64;
    let mut hi = 1.0;
    if g(lo) >= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    hi
}

/// Eve's information against the (d+1)-basis protocol when she attacks
/// with the universal cloner and reads both of her registers:
///
/// `log₂d + (F+F_E-1) log₂((F+F_E-1)/F) + (1-F_E) log₂((1-F_E)/((d-1)F))`.
pub fn eve_info_all_bases(d: usize, f: f64) -> Result<f64> {
    let f_e = universal_eve_fidelity(d, f)?;
    let correct = f + f_e - 1.0;
    if correct < -1e-14 || f <= 0.0 {
        return Err(QkdError::domain("F + F_E - 1", correct, 0.0, 1.0));
    }
    let correct = correct.max(0.0);
    let wrong = (1.0 - f_e).max(0.0);
    Ok((d as f64).log2() + xlog2_ratio(correct, f) + xlog2_ratio(wrong, (d - 1) as f64 * f))
}

/// Bob's and Eve's information for a protocol at fidelity `f`.
pub fn protocol_infos(d: usize, protocol: Protocol, f: f64) -> Result<(f64, f64)> {
    let i_ab = info_symmetric(d, f)?;
    let i_ae = match protocol {
        Protocol::TwoBases => eve_info_two_bases(d, f)?,
        Protocol::AllBases => eve_info_all_bases(d, f)?,
    };
    Ok((i_ab, i_ae))
}

/// One-way secret key rate lower bound `max(I_AB - I_AE, I_AB - I_BE)`;
/// without `I_BE` only the first difference is available.
pub fn ck_rate_lower(i_ab: f64, i_ae: f64, i_be: Option<f64>) -> f64 {
    let r = i_ab - i_ae;
    match i_be {
        Some(i_be) => r.max(i_ab - i_be),
        None => r,
    }
}

/// Uncertainty bound on `I_AB + I_AE` for observables whose eigenbases have
/// largest overlap `overlap_max`: `2 log₂(d · overlap_max)`.
pub fn hall_bound(d: usize, overlap_max: f64) -> Result<f64> {
    check_dim(d)?;
    check_range("overlap_max", overlap_max, 1.0 / (d as f64).sqrt(), 1.0)?;
    Ok(2.0 * (d as f64 * overlap_max).log2())
}

/// A sample on the information curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoPoint {
    pub d: usize,
    pub protocol: Protocol,
    pub f: f64,
    pub disturbance: f64,
    pub i_ab: f64,
    pub i_ae: f64,
    pub r_lower: f64,
}

impl InfoPoint {
    pub fn at(d: usize, protocol: Protocol, f: f64) -> Result<Self> {
        let (i_ab, i_ae) = protocol_infos(d, protocol, f)?;
        Ok(InfoPoint {
            d,
            protocol,
            f,
            disturbance: 1.0 - f,
            i_ab,
            i_ae,
            r_lower: ck_rate_lower(i_ab, i_ae, None),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h2(p: f64) -> f64 {
        -xlog2x(p) - xlog2x(1.0 - p)
    }

    #[test]
    fn symmetric_info_endpoints() {
        for d in 2..=10 {
            assert_eq!(info_symmetric(d, 1.0).unwrap(), (d as f64).log2());
            assert_abs_diff_eq!(info_symmetric(d, 1.0 / d as f64).unwrap(), 0.0, epsilon = 1e-14);
        }
        assert!(info_symmetric(2, 1.2).is_err());
        assert!(info_symmetric(2, -0.1).is_err());
        assert!(info_symmetric(2, f64::NAN).is_err());
    }

    #[test]
    fn qubit_info_is_one_minus_binary_entropy() {
        let f = 0.853553;
        assert_abs_diff_eq!(info_symmetric(2, f).unwrap(), 1.0 - h2(1.0 - f), epsilon = 1e-14);
    }

    #[test]
    fn eve_learns_nothing_from_perfect_channel() {
        for d in 2..=10 {
            assert_abs_diff_eq!(eve_info_two_bases(d, 1.0).unwrap(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(eve_info_all_bases(d, 1.0).unwrap(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn qubit_two_basis_crossing() {
        let f = 0.5 * (1.0 + 0.5f64.sqrt());
        let (ab, ae) = protocol_infos(2, Protocol::TwoBases, f).unwrap();
        assert_abs_diff_eq!(ab, ae, epsilon = 1e-9);
    }

    #[test]
    fn all_bases_leaks_less_than_two_bases() {
        let all = eve_info_all_bases(3, 0.85).unwrap();
        let two = eve_info_two_bases(3, 0.85).unwrap();
        assert!(all < two, "{all} !< {two}");
    }

    #[test]
    fn qubit_all_bases_crossing_near_table_value() {
        let f = 0.8436;
        let (ab, ae) = protocol_infos(2, Protocol::AllBases, f).unwrap();
        // 1e-4 in F moves the gap by ~3e-4 bits; the table value is rounded to 1e-4.
        assert!((ab - ae).abs() < 5e-4, "gap {}", ab - ae);
    }

    #[test]
    fn all_bases_domain_error_below_threshold() {
        for d in 2..=8 {
            let fmin = Protocol::AllBases.min_fidelity(d);
            assert!(eve_info_all_bases(d, fmin).unwrap().is_finite());
            if fmin - 1e-3 >= 1.0 / (d + 1) as f64 {
                assert!(matches!(
                    eve_info_all_bases(d, fmin - 1e-3),
                    Err(QkdError::Domain { .. })
                ));
            }
        }
    }

    #[test]
    fn key_rate_bound() {
        assert_abs_diff_eq!(ck_rate_lower(1.0, 0.3, None), 0.7, epsilon = 1e-15);
        assert_eq!(ck_rate_lower(0.4, 0.4, None), 0.0);
        assert_abs_diff_eq!(ck_rate_lower(0.3, 0.4, Some(0.1)), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn hall_bound_values() {
        assert_abs_diff_eq!(hall_bound(4, 0.5).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hall_bound(2, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hall_bound(3, 1.0 / 3f64.sqrt()).unwrap(), 3f64.log2(), epsilon = 1e-15);
        for d in 2..=16 {
            let b = hall_bound(d, 1.0 / (d as f64).sqrt()).unwrap();
            assert_abs_diff_eq!(b, (d as f64).log2(), epsilon = 1e-14);
        }
        assert!(hall_bound(4, 0.4).is_err());
        assert!(hall_bound(4, 1.1).is_err());
    }

    #[test]
    fn bob_info_strictly_increasing() {
        for d in 2..=10 {
            let lo = 1.0 / d as f64;
            let n = 10_000;
            let mut prev = info_symmetric(d, lo).unwrap();
            for i in 1..=n {
                let f = lo + (1.0 - lo) * i as f64 / n as f64;
                let cur = info_symmetric(d, f).unwrap();
                assert!(cur > prev, "d={d} F={f}");
                prev = cur;
            }
        }
    }

    #[test]
    fn eve_two_basis_info_decreasing_near_crossing() {
        for d in 2..=10 {
            let mut prev = eve_info_two_bases(d, 0.5).unwrap();
            for i in 1..1000 {
                let f = 0.5 + 0.5 * i as f64 / 1000.0;
                let cur = eve_info_two_bases(d, f).unwrap();
                assert!(cur < prev, "d={d} F={f}");
                prev = cur;
            }
        }
    }

    #[test]
    fn no_nan_at_domain_edges() {
        for d in 2..=12 {
            let edges = [
                0.0,
                1e-300,
                1.0 / d as f64,
                1.0 / d as f64 + 1e-15,
                1.0 - 1e-16,
                1.0 - f64::EPSILON,
                1.0,
            ];
            for &f in &edges {
                assert!(info_symmetric(d, f).unwrap().is_finite());
                if let Ok(v) = eve_info_two_bases(d, f) {
                    assert!(v.is_finite(), "two-bases d={d} F={f}");
                }
                if let Ok(v) = eve_info_all_bases(d, f) {
                    assert!(v.is_finite(), "all-bases d={d} F={f}");
                }
            }
            let fmin = Protocol::AllBases.min_fidelity(d);
            assert!(eve_info_all_bases(d, fmin).unwrap().is_finite());
        }
    }

    #[test]
    fn info_point_at_perfect_channel() {
        for protocol in [Protocol::TwoBases, Protocol::AllBases] {
            let p = InfoPoint::at(5, protocol, 1.0).unwrap();
            assert_eq!(p.i_ab, 5f64.log2());
            assert_abs_diff_eq!(p.i_ae, 0.0, epsilon = 1e-14);
            assert_eq!(p.disturbance, 0.0);
        }
        assert_eq!(Protocol::AllBases.sift_yield(3), 0.25);
        assert_eq!(Protocol::TwoBases.sift_yield(7), 0.5);
    }
}
