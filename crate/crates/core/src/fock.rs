//! Two-mode photon-number states and the projective overlap that powers
//! every detection calculation in this crate.
//!
//! A [`StateVector`] holds amplitudes over the basis |N-k, k> where N is the
//! total photon number and k counts photons in the vertical mode. The key
//! primitive is [`vacuum_overlap`]: project a state onto N single-photon
//! detectors, each sensitive to its own linear combination of the two modes,
//! and return the transition amplitude into the vacuum.

use crate::error::{Error, Result};
use crate::math::sqrt_factorial;
use crate::C64;

/// A phase delay in radians, validated to be finite.
///
/// The value is kept exactly as given (no modular reduction) so that callers
/// sweeping a fringe keep their grid intact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShift(f64);

impl PhaseShift {
    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::NonFinite {
                context: "phase shift",
            });
        }
        Ok(PhaseShift(radians))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Relative sign between the two branches of a path-entangled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Normalized state of N photons split between two modes.
///
/// `amps[k]` multiplies the basis state |N-k, k> (k photons vertical), so the
/// vector length fixes the photon number: `len = N + 1`. Construction
/// normalizes, so downstream code can rely on unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    norm_deviation: f64,
}

impl StateVector {
    /// Builds a state from raw amplitudes, rescaling to unit norm.
    ///
    /// The deviation |sum of squares - 1| of the input is recorded and kept
    /// available through [`StateVector::norm_deviation`], so callers feeding
    /// in supposedly normalized vectors can see how far off they were.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::EmptyState);
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "state amplitudes",
            });
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let scale = norm_sq.sqrt().recip();
        Ok(StateVector {
            amps: amps.into_iter().map(|a| a * scale).collect(),
            norm_deviation: (norm_sq - 1.0).abs(),
        })
    }

    /// The basis state |n_h, n_v>.
    pub fn fock(n_h: usize, n_v: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); n_h + n_v + 1];
        amps[n_v] = C64::new(1.0, 0.0);
        StateVector {
            amps,
            norm_deviation: 0.0,
        }
    }

    /// The maximally path-entangled state (|N,0> + sign |0,N>) / sqrt(2).
    pub fn noon(n: usize, sign: Sign) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParameter {
                name: "n",
                value: 0.0,
                constraint: "n >= 1",
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); n + 1];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        amps[0] = C64::new(r, 0.0);
        amps[n] = C64::new(sign.as_f64() * r, 0.0);
        Ok(StateVector {
            amps,
            norm_deviation: 0.0,
        })
    }

    /// The 2n-photon state produced by n down-converted pairs emitted into a
    /// single spatiotemporal mode: only even vertical occupations appear,
    /// with amplitudes sqrt((2n-2m)! (2m)!) / (2^n (n-m)! m!).
    pub fn pdc_n(n_pairs: usize) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::BadParameter {
                name: "n_pairs",
                value: 0.0,
                constraint: "n_pairs >= 1",
            });
        }
        let n = n_pairs;
        let total = 2 * n;
        let mut amps = vec![C64::new(0.0, 0.0); total + 1];
        let scale = 2f64.powi(n as i32);
        for m in 0..=n {
            let num = sqrt_factorial(total - 2 * m) * sqrt_factorial(2 * m);
            let den = scale * crate::math::factorial(n - m) * crate::math::factorial(m);
            amps[2 * m] = C64::new(num / den, 0.0);
        }
        // The amplitudes above are normalized in exact arithmetic; still pass
        // through the constructor to scrub floating-point residue.
        StateVector::new(amps)
    }

    /// Two down-converted pairs: the four-photon workhorse state, with
    /// populations 3/8, 1/4, 3/8 on |4,0>, |2,2>, |0,4>.
    pub fn pdc4() -> Self {
        StateVector::pdc_n(2).expect("n_pairs = 2 is valid")
    }

    /// Total photon number N.
    pub fn n_total(&self) -> usize {
        self.amps.len() - 1
    }

    /// Amplitudes over |N-k, k>, indexed by the vertical occupation k.
    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// How far the pre-normalization input was from unit norm; zero for
    /// states built by the named constructors.
    pub fn norm_deviation(&self) -> f64 {
        self.norm_deviation
    }

    /// Applies a relative phase to the vertical mode: amps[k] picks up
    /// exp(i k phi). A NOON state acquires exp(i N phi) between its
    /// branches, N times faster than a single photon.
    pub fn apply_phase(&self, phi: PhaseShift) -> StateVector {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| a * C64::from_polar(1.0, k as f64 * phi.radians()))
            .collect();
        StateVector {
            amps,
            norm_deviation: self.norm_deviation,
        }
    }

    /// <self | other>, conjugating `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<C64> {
        if self.n_total() != other.n_total() {
            return Err(Error::PhotonMismatch {
                left: self.n_total(),
                right: other.n_total(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Amplitude for N detectors, with mode couplings `(alpha_j, beta_j)`, to
/// absorb every photon of `s` and leave the vacuum behind.
///
/// Expanding the product of the N forms, prod_j (alpha_j x + beta_j y) =
/// sum_k c_k x^(N-k) y^k, the amplitude is sum_k amps[k] sqrt((N-k)! k!) c_k.
/// The expansion runs as an iterative convolution, O(N^2) overall, which
/// keeps desk-scale photon numbers (N of a few hundred) cheap.
pub fn vacuum_overlap(forms: &[(C64, C64)], s: &StateVector) -> Result<C64> {
    let n = s.n_total();
    if forms.len() != n {
        return Err(Error::PhotonMismatch {
            left: forms.len(),
            right: n,
        });
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    coeffs[0] = C64::new(1.0, 0.0);
    for (j, &(alpha, beta)) in forms.iter().enumerate() {
        // After j forms only powers 0..=j are populated; sweep k downward so
        // the update stays in place.
        for k in (0..=j + 1).rev() {
            let from_x = if k <= j { coeffs[k] * alpha } else { C64::new(0.0, 0.0) };
            let from_y = if k > 0 { coeffs[k - 1] * beta } else { C64::new(0.0, 0.0) };
            coeffs[k] = from_x + from_y;
        }
    }
    Ok(s
        .amps
        .iter()
        .enumerate()
        .map(|(k, a)| a * sqrt_factorial(n - k) * sqrt_factorial(k) * coeffs[k])
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The four balanced forms of the standard four-detector analyzer,
    /// already normalized to |alpha|^2 + |beta|^2 = 1/2.
    fn quad_forms() -> Vec<(C64, C64)> {
        vec![
            (c(0.5, 0.0), c(-0.5, 0.0)),
            (c(0.5, 0.0), c(0.5, 0.0)),
            (c(0.5, 0.0), c(0.0, -0.5)),
            (c(0.5, 0.0), c(0.0, 0.5)),
        ]
    }

    #[test]
    fn new_normalizes_and_rejects_degenerate_input() {
        let s = StateVector::new(vec![c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        let norm: f64 = s.amps().iter().map(|a| a.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-15);
        assert_eq!(StateVector::new(vec![]), Err(Error::EmptyState));
        assert_eq!(
            StateVector::new(vec![c(0.0, 0.0); 3]),
            Err(Error::ZeroNorm)
        );
        assert!(matches!(
            StateVector::new(vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn noon_places_equal_weight_on_the_extreme_occupations() {
        let s = StateVector::noon(4, Sign::Minus).unwrap();
        assert_eq!(s.n_total(), 4);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amps()[0].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amps()[4].re, -r, epsilon = 1e-15);
        for k in 1..4 {
            assert_eq!(s.amps()[k], c(0.0, 0.0));
        }
        assert!(matches!(
            StateVector::noon(0, Sign::Plus),
            Err(Error::BadParameter { .. })
        ));
    }

    #[test]
    fn pdc4_populations_are_3_8_1_4_3_8() {
        let s = StateVector::pdc4();
        assert_eq!(s.n_total(), 4);
        assert_relative_eq!(s.amps()[0].norm_sqr(), 3.0 / 8.0, max_relative = 1e-14);
        assert_relative_eq!(s.amps()[2].norm_sqr(), 1.0 / 4.0, max_relative = 1e-14);
        assert_relative_eq!(s.amps()[4].norm_sqr(), 3.0 / 8.0, max_relative = 1e-14);
        assert_eq!(s.amps()[1], c(0.0, 0.0));
        assert_eq!(s.amps()[3], c(0.0, 0.0));
    }

    /// Independent oracle for the pair-emission state: expand
    /// (a_H^dag^2 + a_V^dag^2)^n / (2^n n!) |vac> term by term with exact
    /// integer factorials and normalize the resulting vector directly.
    fn pdc_amps_by_expansion(n: usize) -> Vec<f64> {
        fn fact(n: usize) -> f64 {
            (1..=n as u128).product::<u128>() as f64
        }
        let total = 2 * n;
        let mut amps = vec![0.0; total + 1];
        for m in 0..=n {
            let choose = fact(n) / (fact(m) * fact(n - m));
            amps[2 * m] = choose * (fact(total - 2 * m) * fact(2 * m)).sqrt();
        }
        let norm: f64 = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        amps.iter().map(|a| a / norm).collect()
    }

    #[test]
    fn pdc_n_matches_direct_operator_expansion() {
        for n_pairs in 1..=8 {
            let s = StateVector::pdc_n(n_pairs).unwrap();
            let oracle = pdc_amps_by_expansion(n_pairs);
            assert_eq!(s.n_total(), 2 * n_pairs);
            for (k, want) in oracle.iter().enumerate() {
                assert_abs_diff_eq!(s.amps()[k].re, want, epsilon = 1e-13);
                assert_abs_diff_eq!(s.amps()[k].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn pdc_n_norm_is_exact_to_working_precision() {
        for n_pairs in [1, 2, 3, 5, 10, 40] {
            let s = StateVector::pdc_n(n_pairs).unwrap();
            let norm: f64 = s.amps().iter().map(|a| a.norm_sqr()).sum();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quarter_period_phase_maps_noon_minus_to_noon_plus() {
        let minus = StateVector::noon(4, Sign::Minus).unwrap();
        let shifted = minus.apply_phase(PhaseShift::new(PI / 4.0).unwrap());
        let plus = StateVector::noon(4, Sign::Plus).unwrap();
        let ov = plus.inner_product(&shifted).unwrap();
        assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn noon_self_overlap_oscillates_at_n_times_the_phase() {
        let s = StateVector::noon(4, Sign::Minus).unwrap();
        for i in 0..24 {
            let phi = -2.0 * PI + 4.0 * PI * (i as f64) / 23.0;
            let shifted = s.apply_phase(PhaseShift::new(phi).unwrap());
            let got = s.inner_product(&shifted).unwrap();
            let want = 0.5 * (C64::new(1.0, 0.0) + C64::from_polar(1.0, 4.0 * phi));
            assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn phase_shift_rejects_non_finite_values() {
        assert!(PhaseShift::new(f64::NAN).is_err());
        assert!(PhaseShift::new(f64::INFINITY).is_err());
        assert_eq!(PhaseShift::new(7.25).unwrap().radians(), 7.25);
    }

    #[test]
    fn inner_product_requires_equal_photon_number() {
        let a = StateVector::noon(2, Sign::Plus).unwrap();
        let b = StateVector::noon(3, Sign::Plus).unwrap();
        assert_eq!(
            a.inner_product(&b),
            Err(Error::PhotonMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn quad_detector_overlap_picks_out_the_antisymmetric_noon_state() {
        // The balanced four-detector product expands to (x^4 - y^4)/16, so
        // only the |4,0> - |0,4> combination survives: amplitude sqrt(3)/4,
        // probability 3/16 — and the orthogonal combination gives zero.
        let forms = quad_forms();
        let minus = StateVector::noon(4, Sign::Minus).unwrap();
        let got = vacuum_overlap(&forms, &minus).unwrap();
        assert_abs_diff_eq!(got.re, 3f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);

        let plus = StateVector::noon(4, Sign::Plus).unwrap();
        let zero = vacuum_overlap(&forms, &plus).unwrap();
        assert_abs_diff_eq!(zero.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn single_photon_overlap_is_the_form_contracted_with_the_amplitudes() {
        // One photon, one detector: the overlap reduces to
        // alpha * amps[0] + beta * amps[1].
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::new(vec![c(r, 0.0), c(-r, 0.0)]).unwrap();
        let sym = vacuum_overlap(&[(c(r, 0.0), c(r, 0.0))], &s).unwrap();
        assert_abs_diff_eq!(sym.norm(), 0.0, epsilon = 1e-15);
        let anti = vacuum_overlap(&[(c(r, 0.0), c(-r, 0.0))], &s).unwrap();
        assert_abs_diff_eq!(anti.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_overlap_needs_one_form_per_photon() {
        let s = StateVector::pdc4();
        let forms = vec![(c(1.0, 0.0), c(0.0, 0.0)); 3];
        assert_eq!(
            vacuum_overlap(&forms, &s),
            Err(Error::PhotonMismatch { left: 3, right: 4 })
        );
    }

    #[test]
    fn vacuum_overlap_of_two_orthogonal_detectors_on_one_photon_each_mode() {
        // |1,1> with one H-only and one V-only detector: both orderings give
        // the same amplitude because the product of forms is symmetric.
        let s = StateVector::fock(1, 1);
        let hv = vacuum_overlap(&[(c(1.0, 0.0), c(0.0, 0.0)), (c(0.0, 0.0), c(1.0, 0.0))], &s);
        let vh = vacuum_overlap(&[(c(0.0, 0.0), c(1.0, 0.0)), (c(1.0, 0.0), c(0.0, 0.0))], &s);
        assert_eq!(hv, vh);
        assert_abs_diff_eq!(hv.unwrap().re, 1.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn phase_preserves_amplitude_magnitudes(
            res in proptest::collection::vec(-1.0f64..1.0, 2..8),
            ims in proptest::collection::vec(-1.0f64..1.0, 2..8),
            phi in -10.0f64..10.0,
        ) {
            let n = res.len().min(ims.len());
            let amps: Vec<C64> = res.iter().zip(&ims).take(n).map(|(&r, &i)| c(r, i)).collect();
            prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6);
            let s = StateVector::new(amps).unwrap();
            let shifted = s.apply_phase(PhaseShift::new(phi).unwrap());
            for (a, b) in s.amps().iter().zip(shifted.amps()) {
                prop_assert!((a.norm() - b.norm()).abs() < 1e-12);
            }
            // Global overlap magnitude with itself shifted is phase-symmetric.
            let fwd = s.inner_product(&shifted).unwrap().norm();
            let bwd = shifted.inner_product(&s).unwrap().norm();
            prop_assert!((fwd - bwd).abs() < 1e-12);
        }

        #[test]
        fn vacuum_overlap_ignores_detector_ordering(
            seeds in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..6),
            res in proptest::collection::vec(-1.0f64..1.0, 7),
        ) {
            let n = seeds.len();
            let forms: Vec<(C64, C64)> = seeds
                .iter()
                .map(|&(ar, ai, br, bi)| (c(ar, ai), c(br, bi)))
                .collect();
            let amps: Vec<C64> = res.iter().take(n + 1).map(|&r| c(r, 0.3 * r)).collect();
            prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6);
            let s = StateVector::new(amps).unwrap();
            let direct = vacuum_overlap(&forms, &s).unwrap();
            let mut reversed = forms.clone();
            reversed.reverse();
            let swapped = vacuum_overlap(&reversed, &s).unwrap();
            prop_assert!((direct - swapped).norm() < 1e-12);
        }
    }
}
