//! Phase-measurement analysis: how well a probe state serves as an N-photon
//! phase sensor.
//!
//! The projection probability onto a path-entangled target sets the success
//! rate of the measurement; the smallest phase that makes a state orthogonal
//! to itself sets the resolvable step; and the uncertainty formula
//! sqrt((2 - P)/P)/N ties the two together. Sweeping photon number exposes
//! the scaling law, which [`scaling_exponent`] extracts by log-log
//! regression.

use crate::error::{Error, Result};
use crate::fock::StateVector;
use crate::C64;
use rustfft::FftPlanner;

/// |<target|probe>|^2, optionally maximized over a relative mode phase
/// applied to the probe.
///
/// The optimized objective |sum_k conj(t_k) p_k e^{ik phi}|^2 is a
/// trigonometric polynomial of degree N, so a scan over 4N+1 equally spaced
/// phases cannot miss the global maximum's basin; a golden-section pass then
/// sharpens the winner.
pub fn projection_success(
    target: &StateVector,
    probe: &StateVector,
    optimize_phase: bool,
) -> Result<f64> {
    if !optimize_phase {
        return Ok(target.inner_product(probe)?.norm_sqr());
    }
    let n = target.n_total();
    if n != probe.n_total() {
        return Err(Error::PhotonMismatch {
            left: n,
            right: probe.n_total(),
        });
    }
    // Cross terms conj(t_k) p_k, contracted against e^{ik phi}.
    let cross: Vec<C64> = target
        .amps()
        .iter()
        .zip(probe.amps())
        .map(|(t, p)| t.conj() * p)
        .collect();
    let objective = |phi: f64| -> f64 {
        cross
            .iter()
            .enumerate()
            .map(|(k, c)| c * C64::from_polar(1.0, k as f64 * phi))
            .sum::<C64>()
            .norm_sqr()
    };

    let samples = 4 * n.max(1) + 1;
    let step = 2.0 * std::f64::consts::PI / samples as f64;
    let mut best_idx = 0;
    let mut best = f64::MIN;
    for i in 0..samples {
        let v = objective(i as f64 * step);
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    // Golden-section maximization on the winning basin.
    let mut lo = (best_idx as f64 - 1.0) * step;
    let mut hi = (best_idx as f64 + 1.0) * step;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..90 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    Ok(best.max(f1).max(f2).min(1.0))
}

/// Phase uncertainty sqrt((2 - P)/P) / N of a repeated projection
/// measurement with success probability P on N photons. Perfect projection
/// gives 1/N.
pub fn phase_uncertainty(p_success: f64, n_photons: usize) -> Result<f64> {
    if !(p_success > 0.0 && p_success <= 1.0) || !p_success.is_finite() {
        return Err(Error::BadParameter {
            name: "p_success",
            value: p_success,
            constraint: "within (0, 1]",
        });
    }
    if n_photons == 0 {
        return Err(Error::BadParameter {
            name: "n_photons",
            value: 0.0,
            constraint: "n_photons >= 1",
        });
    }
    Ok(((2.0 - p_success) / p_success).sqrt() / n_photons as f64)
}

/// Absolute overlap below which a phase counts as orthogonal.
const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Grid points per photon for the coarse scan of the overlap function.
const GRID_PER_PHOTON: usize = 10_000;

/// Smallest phi > 0 making the state orthogonal to its phase-shifted self.
///
/// The self-overlap f(phi) = sum_k |amps[k]|^2 e^{ik phi} depends only on
/// the occupation populations. It is evaluated on a dense grid (10^4 points
/// per photon, so oscillations at frequency up to N are well resolved) in a
/// single inverse FFT; each local minimum of |f| is then polished in
/// ascending order by a bracketed Newton iteration on d|f|^2/dphi, and the
/// first one that reaches |f| < 1e-10 wins. States whose overlap never
/// vanishes produce an error carrying the smallest |f| attained.
pub fn orthogonal_phase(s: &StateVector) -> Result<f64> {
    let n = s.n_total();
    let populations: Vec<f64> = s.amps().iter().map(|a| a.norm_sqr()).collect();
    if n == 0 {
        return Err(Error::NoOrthogonalPhase { min_overlap: 1.0 });
    }

    let grid = GRID_PER_PHOTON * n;
    let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); grid];
    for (k, &q) in populations.iter().enumerate() {
        buf[k] = C64::new(q, 0.0);
    }
    // Unnormalized inverse FFT: buf[j] = sum_k q_k e^{+2 pi i jk / grid},
    // i.e. f evaluated at phi_j = 2 pi j / grid.
    FftPlanner::new().plan_fft_inverse(grid).process(&mut buf);
    let magnitude: Vec<f64> = buf.iter().map(|v| v.norm()).collect();

    let phi_at = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
    let mut min_seen = f64::MAX;
    for j in 1..grid {
        let prev = magnitude[j - 1];
        let here = magnitude[j];
        let next = if j + 1 < grid { magnitude[j + 1] } else { magnitude[0] };
        min_seen = min_seen.min(here);
        if here < prev && here <= next {
            let (phi, residual) = polish_minimum(&populations, phi_at(j - 1), phi_at(j + 1));
            min_seen = min_seen.min(residual);
            if residual < ORTHOGONALITY_TOL {
                return Ok(phi);
            }
        }
    }
    Err(Error::NoOrthogonalPhase {
        min_overlap: min_seen,
    })
}

/// f, f', f'' of the overlap function at one phase.
fn overlap_derivatives(populations: &[f64], phi: f64) -> (C64, C64, C64) {
    let mut f = C64::new(0.0, 0.0);
    let mut df = C64::new(0.0, 0.0);
    let mut ddf = C64::new(0.0, 0.0);
    for (k, &q) in populations.iter().enumerate() {
        let kf = k as f64;
        let e = C64::from_polar(q, kf * phi);
        f += e;
        df += C64::new(0.0, kf) * e;
        ddf -= kf * kf * e;
    }
    (f, df, ddf)
}

/// Bracketed Newton descent on d|f|^2/dphi inside (a, b); returns the
/// refined phase and |f| there.
///
/// At a transversal zero of f the objective |f|^2 has a double root, where
/// plain minimization stalls around sqrt(eps); its derivative has a simple
/// zero there, so Newton on the derivative keeps quadratic convergence all
/// the way down.
fn polish_minimum(populations: &[f64], a: f64, b: f64) -> (f64, f64) {
    let slope = |phi: f64| {
        let (f, df, ddf) = overlap_derivatives(populations, phi);
        let g = 2.0 * (f.conj() * df).re;
        let dg = 2.0 * (df.norm_sqr() + (f.conj() * ddf).re);
        (g, dg, f.norm())
    };
    let (mut lo, mut hi) = (a, b);
    let (g_lo, _, mag_lo) = slope(lo);
    let (g_hi, _, mag_hi) = slope(hi);
    if g_lo > 0.0 || g_hi < 0.0 {
        // Not actually bracketing a descent-then-ascent valley; report the
        // better endpoint without refining.
        return if mag_lo < mag_hi { (lo, mag_lo) } else { (hi, mag_hi) };
    }
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::MAX);
    for _ in 0..80 {
        let (g, dg, mag) = slope(x);
        if mag < best.1 {
            best = (x, mag);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / dg;
        x = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    let (_, _, mag) = slope(x);
    if mag < best.1 {
        best = (x, mag);
    }
    best
}

/// Least-squares slope of log(dphi) against log(n): the empirical scaling
/// exponent of an uncertainty sweep.
pub fn scaling_exponent(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            what: "scaling regression",
            needed: 3,
            got: points.len(),
        });
    }
    for &(n, dphi) in points {
        if !(n > 0.0 && dphi > 0.0) || !n.is_finite() || !dphi.is_finite() {
            return Err(Error::BadParameter {
                name: "scaling point",
                value: if n > 0.0 { dphi } else { n },
                constraint: "positive and finite",
            });
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, d)| (n.ln(), d.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / logs.len() as f64;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / logs.len() as f64;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::BadParameter {
            name: "scaling points",
            value: mean_x.exp(),
            constraint: "at least two distinct photon numbers",
        });
    }
    let sxy: f64 = logs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    Ok(sxy / sxx)
}

/// One row of a phase-measurement budget: success probability, orthogonal
/// phase step, and the resulting uncertainty, tied together by construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhasePlan {
    pub n_photons: usize,
    pub p_success: f64,
    pub phi_orth: f64,
    pub dphi: f64,
}

impl PhasePlan {
    pub fn new(n_photons: usize, p_success: f64, phi_orth: f64) -> Result<Self> {
        if !(phi_orth > 0.0) || !phi_orth.is_finite() {
            return Err(Error::BadParameter {
                name: "phi_orth",
                value: phi_orth,
                constraint: "phi_orth > 0",
            });
        }
        let dphi = phase_uncertainty(p_success, n_photons)?;
        Ok(PhasePlan {
            n_photons,
            p_success,
            phi_orth,
            dphi,
        })
    }

    /// Builds the row for a probe measured against the path-entangled
    /// target of the same photon number.
    pub fn for_probe(probe: &StateVector) -> Result<Self> {
        let n = probe.n_total();
        let target = StateVector::noon(n, crate::fock::Sign::Minus)?;
        let p = projection_success(&target, probe, true)?;
        let phi = orthogonal_phase(probe)?;
        PhasePlan::new(n, p, phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{PhaseShift, Sign};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Exact combinatorial oracle for the pair-source projection
    /// probability: 2 C(2n, n) / 4^n, evaluated in log space.
    fn projection_oracle(n_pairs: usize) -> f64 {
        let ln_c: f64 = (1..=2 * n_pairs).map(|k| (k as f64).ln()).sum::<f64>()
            - 2.0 * (1..=n_pairs).map(|k| (k as f64).ln()).sum::<f64>();
        2.0 * (ln_c - (n_pairs as f64) * 4f64.ln()).exp()
    }

    #[test]
    fn self_projection_is_certain() {
        let s = StateVector::pdc4();
        assert_abs_diff_eq!(
            projection_success(&s, &s, false).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn quad_pair_source_projects_with_three_quarters_after_phasing() {
        let target = StateVector::noon(4, Sign::Minus).unwrap();
        let probe = StateVector::pdc4();
        // Unphased, the symmetric pair state is orthogonal to the
        // antisymmetric target...
        assert_abs_diff_eq!(
            projection_success(&target, &probe, false).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        // ...but a quarter-period phase aligns it to 2 * (3/8).
        assert_abs_diff_eq!(
            projection_success(&target, &probe, true).unwrap(),
            0.75,
            epsilon = 1e-12
        );
    }

    #[test]
    fn optimized_projection_matches_the_combinatorial_oracle() {
        for n_pairs in [1usize, 2, 4, 8, 32, 128] {
            let target = StateVector::noon(2 * n_pairs, Sign::Minus).unwrap();
            let probe = StateVector::pdc_n(n_pairs).unwrap();
            let got = projection_success(&target, &probe, true).unwrap();
            assert_relative_eq!(got, projection_oracle(n_pairs), max_relative = 1e-10);
        }
    }

    #[test]
    fn optimized_projection_approaches_the_inverse_sqrt_law() {
        let n_pairs = 128;
        let target = StateVector::noon(2 * n_pairs, Sign::Minus).unwrap();
        let probe = StateVector::pdc_n(n_pairs).unwrap();
        let p = projection_success(&target, &probe, true).unwrap();
        let scaled = p * (PI * n_pairs as f64).sqrt() / 2.0;
        assert!((scaled - 1.0).abs() < 0.02, "scaled = {scaled}");
    }

    #[test]
    fn optimizer_absorbs_any_pre_applied_phase() {
        let target = StateVector::noon(6, Sign::Minus).unwrap();
        let probe = StateVector::pdc_n(3).unwrap();
        let base = projection_success(&target, &probe, true).unwrap();
        for &phi in &[0.3, 1.7, -2.4, 5.9] {
            let shifted = probe.apply_phase(PhaseShift::new(phi).unwrap());
            let got = projection_success(&target, &shifted, true).unwrap();
            assert_abs_diff_eq!(got, base, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_rejects_mismatched_photon_numbers() {
        let a = StateVector::noon(4, Sign::Minus).unwrap();
        let b = StateVector::noon(6, Sign::Minus).unwrap();
        assert!(projection_success(&a, &b, true).is_err());
        assert!(projection_success(&a, &b, false).is_err());
    }

    #[test]
    fn uncertainty_formula_anchors() {
        for n in [1usize, 3, 17, 100] {
            assert_abs_diff_eq!(
                phase_uncertainty(1.0, n).unwrap(),
                1.0 / n as f64,
                epsilon = 1e-15
            );
        }
        assert_relative_eq!(
            phase_uncertainty(0.5, 4).unwrap(),
            3f64.sqrt() / 4.0,
            max_relative = 1e-15
        );
        assert!(phase_uncertainty(0.0, 4).is_err());
        assert!(phase_uncertainty(1.5, 4).is_err());
        assert!(phase_uncertainty(0.5, 0).is_err());
    }

    #[test]
    fn uncertainty_decreases_in_both_arguments() {
        let mut last = f64::MAX;
        for p in [0.1, 0.3, 0.6, 1.0] {
            let d = phase_uncertainty(p, 8).unwrap();
            assert!(d < last);
            last = d;
        }
        let mut last = f64::MAX;
        for n in [2, 4, 8, 16] {
            let d = phase_uncertainty(0.7, n).unwrap();
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn path_entangled_states_go_orthogonal_at_pi_over_n() {
        for n in [1usize, 2, 3, 5, 8, 16, 64] {
            let s = StateVector::noon(n, Sign::Minus).unwrap();
            let phi = orthogonal_phase(&s).unwrap();
            assert_abs_diff_eq!(phi, PI / n as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_pair_source_orthogonal_phase_matches_the_closed_form() {
        // Populations (3/8, 1/4, 3/8) over even occupations make the overlap
        // proportional to 3 + 2z + 3z^2 in z = e^{2 i phi}; its unit-circle
        // root gives phi = acos(-1/3)/2.
        let s = StateVector::pdc_n(2).unwrap();
        let got = orthogonal_phase(&s).unwrap();
        let oracle = (-1.0f64 / 3.0).acos() / 2.0;
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(got, 0.9553, epsilon = 1e-4);
    }

    #[test]
    fn orthogonal_phase_returns_the_smallest_zero() {
        // Amplitudes (0.5, 0, 0.5) normalize to equal end populations, so
        // f = (1 + e^{2 i phi})/2 with zeros at pi/2 and 3 pi/2; the first
        // one must be reported.
        let s = StateVector::new(vec![c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let got = orthogonal_phase(&s).unwrap();
        assert_abs_diff_eq!(got, PI / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn lopsided_states_never_reach_orthogonality() {
        let s = StateVector::new(vec![c(0.9f64.sqrt(), 0.0), c(0.1f64.sqrt(), 0.0)]).unwrap();
        match orthogonal_phase(&s) {
            Err(Error::NoOrthogonalPhase { min_overlap }) => {
                assert_abs_diff_eq!(min_overlap, 0.8, epsilon = 1e-6);
            }
            other => panic!("expected no orthogonal phase, got {other:?}"),
        }
    }

    #[test]
    fn pair_source_orthogonal_phase_approaches_its_bessel_constant() {
        // For n pairs the overlap tends to a zeroth-order Bessel profile in
        // the total photon number, whose first zero pins phi_m * 2n / pi
        // near 1.531.
        let expected = 2.0 * 2.404_825_557_695_773 / PI;
        let mut prev_err = f64::MAX;
        for n_pairs in [16usize, 32, 64] {
            let s = StateVector::pdc_n(n_pairs).unwrap();
            let phi = orthogonal_phase(&s).unwrap();
            let constant = phi * (2 * n_pairs) as f64 / PI;
            let err = (constant - expected).abs();
            assert!(err < prev_err, "constant not converging: {constant}");
            prev_err = err;
        }
        assert!(prev_err < 0.02 * expected);
    }

    #[test]
    fn scaling_exponent_on_exact_power_laws() {
        let inverse: Vec<(f64, f64)> = (1..=8).map(|n| (n as f64, 1.0 / n as f64)).collect();
        assert_abs_diff_eq!(scaling_exponent(&inverse).unwrap(), -1.0, epsilon = 1e-12);
        let three_quarters: Vec<(f64, f64)> = (2..=9)
            .map(|n| (n as f64, 2.7 * (n as f64).powf(-0.75)))
            .collect();
        assert_abs_diff_eq!(
            scaling_exponent(&three_quarters).unwrap(),
            -0.75,
            epsilon = 1e-12
        );
    }

    #[test]
    fn scaling_exponent_input_validation() {
        assert!(matches!(
            scaling_exponent(&[(1.0, 1.0), (2.0, 0.5)]),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(scaling_exponent(&[(1.0, 1.0), (2.0, 0.5), (3.0, -0.1)]).is_err());
        assert!(scaling_exponent(&[(2.0, 1.0), (2.0, 0.5), (2.0, 0.3)]).is_err());
    }

    #[test]
    fn phase_plan_ties_uncertainty_to_success() {
        let plan = PhasePlan::new(4, 0.75, PI / 4.0).unwrap();
        assert_relative_eq!(
            plan.dphi,
            phase_uncertainty(0.75, 4).unwrap(),
            max_relative = 1e-15
        );
        let from_probe = PhasePlan::for_probe(&StateVector::pdc4()).unwrap();
        assert_abs_diff_eq!(from_probe.p_success, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(
            from_probe.phi_orth,
            (-1.0f64 / 3.0).acos() / 2.0,
            epsilon = 1e-9
        );
    }
}
