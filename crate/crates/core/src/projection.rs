//! Detector networks that implement projective N-photon measurements.
//!
//! A network is an ordered list of linear forms b_j = alpha_j a_H +
//! beta_j a_V, one per detector. The N-fold coincidence rate of a network on
//! an N-photon state is |vacuum_overlap|^2, and because the product of the
//! forms is a homogeneous polynomial of degree N in the two mode operators,
//! any target state can be compiled into such a network by factoring its
//! characteristic polynomial — see [`synthesize_network`].

mod polyroots;

use crate::error::{Error, Result};
use crate::fock::{vacuum_overlap, StateVector};
use crate::math::sqrt_factorial;
use crate::C64;

/// Tolerance for declaring a network isometric (lossless).
const ISOMETRY_TOL: f64 = 1e-9;

/// One detector's couplings to the two input modes.
///
/// Stored rescaled so |alpha|^2 + |beta|^2 = 1/2, matching the convention
/// where each of four detectors behind a balanced splitter tree sees each
/// input mode with amplitude 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearForm {
    alpha: C64,
    beta: C64,
}

impl LinearForm {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite() && beta.re.is_finite() && beta.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "linear form coefficients",
            });
        }
        let norm_sq = alpha.norm_sqr() + beta.norm_sqr();
        if norm_sq <= 0.0 {
            return Err(Error::ZeroForm {
                alpha: alpha.to_string(),
                beta: beta.to_string(),
            });
        }
        let scale = (2.0 * norm_sq).sqrt().recip();
        Ok(LinearForm {
            alpha: alpha * scale,
            beta: beta * scale,
        })
    }

    /// Coupling to the horizontal mode.
    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    /// Coupling to the vertical mode.
    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn as_pair(&self) -> (C64, C64) {
        (self.alpha, self.beta)
    }
}

/// How close a network's coefficient matrix is to an isometry.
///
/// For a lossless splitter tree both mode columns carry unit norm and are
/// mutually orthogonal; `holds` is the combined check within 1e-9.
#[derive(Debug, Clone, Copy)]
pub struct IsometryReport {
    /// Sum of |alpha_j|^2 (should be 1).
    pub col_h: f64,
    /// Sum of |beta_j|^2 (should be 1).
    pub col_v: f64,
    /// Sum of alpha_j * conj(beta_j) (should vanish).
    pub cross: C64,
    pub holds: bool,
}

/// An ordered list of detector forms, one per photon.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorNetwork {
    forms: Vec<LinearForm>,
    label: String,
}

impl DetectorNetwork {
    pub fn new(forms: Vec<LinearForm>, label: impl Into<String>) -> Result<Self> {
        if forms.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        Ok(DetectorNetwork {
            forms,
            label: label.into(),
        })
    }

    /// The standard four-detector analyzer: two detectors behind a
    /// plus/minus polarizer pair and two behind a circular pair, i.e. forms
    /// (1,-1), (1,1), (1,-i), (1,i) each scaled by 1/2. Its product
    /// polynomial is (x^4 - y^4)/16, so it projects onto the antisymmetric
    /// four-photon path-entangled state.
    pub fn noon4() -> Self {
        let c = |re: f64, im: f64| C64::new(re, im);
        let coeffs = [
            (c(1.0, 0.0), c(-1.0, 0.0)),
            (c(1.0, 0.0), c(1.0, 0.0)),
            (c(1.0, 0.0), c(0.0, -1.0)),
            (c(1.0, 0.0), c(0.0, 1.0)),
        ];
        let forms = coeffs
            .iter()
            .map(|&(a, b)| LinearForm::new(a, b).expect("nonzero form"))
            .collect();
        DetectorNetwork {
            forms,
            label: "noon4".to_owned(),
        }
    }

    pub fn forms(&self) -> &[LinearForm] {
        &self.forms
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub(crate) fn form_pairs(&self) -> Vec<(C64, C64)> {
        self.forms.iter().map(LinearForm::as_pair).collect()
    }

    /// Checks the lossless-network conditions: unit column norms and zero
    /// cross-column overlap.
    pub fn isometry_report(&self) -> IsometryReport {
        let col_h: f64 = self.forms.iter().map(|f| f.alpha.norm_sqr()).sum();
        let col_v: f64 = self.forms.iter().map(|f| f.beta.norm_sqr()).sum();
        let cross: C64 = self.forms.iter().map(|f| f.alpha * f.beta.conj()).sum();
        let holds = (col_h - 1.0).abs() <= ISOMETRY_TOL
            && (col_v - 1.0).abs() <= ISOMETRY_TOL
            && cross.norm() <= ISOMETRY_TOL;
        IsometryReport {
            col_h,
            col_v,
            cross,
            holds,
        }
    }
}

/// Probability that all N detectors of `net` fire simultaneously on `s`:
/// |vacuum_overlap|^2. For the standard four-detector analyzer this equals
/// (3/16) |<noon_minus | s>|^2.
pub fn nfold_coincidence_prob(net: &DetectorNetwork, s: &StateVector) -> Result<f64> {
    let amp = vacuum_overlap(&net.form_pairs(), s)?;
    Ok(amp.norm_sqr())
}

/// Coincidence probability of one detector pair on a two-photon state.
pub fn pairwise_coincidence_prob(a: &LinearForm, b: &LinearForm, s2: &StateVector) -> Result<f64> {
    if s2.n_total() != 2 {
        return Err(Error::PhotonMismatch {
            left: 2,
            right: s2.n_total(),
        });
    }
    let amp = vacuum_overlap(&[a.as_pair(), b.as_pair()], s2)?;
    Ok(amp.norm_sqr())
}

/// Result of compiling a target state into a detector network.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub network: DetectorNetwork,
    /// Proportionality constant: vacuum_overlap(network, s) = kappa *
    /// <target|s> for every state s of the same photon number.
    pub kappa: C64,
    /// Whether the synthesized forms happen to satisfy the lossless-network
    /// conditions; when they do not, rates are meaningful only relatively.
    pub isometry: IsometryReport,
    /// True when two synthesized forms (polynomial roots) nearly coincide;
    /// precision degrades there.
    pub degenerate_roots: bool,
    /// Largest |overlap - kappa * <target|basis>| / |kappa| over the
    /// occupation basis — a direct self-check of the factorization.
    pub max_relative_residual: f64,
}

/// Compiles an arbitrary N-photon target state into N detector forms whose
/// simultaneous click projects onto it.
///
/// The target's amplitudes define the binary form F(x, y) = sum_k
/// conj(amps[k]) / sqrt((N-k)! k!) x^(N-k) y^k; any joint-click amplitude of
/// a network is the contraction of its product polynomial against the state,
/// so a network whose product is proportional to F reproduces <target|s> up
/// to one constant. F factors over the complex numbers: pure-mode factors
/// (leading/trailing zero amplitudes) split off as H-only or V-only
/// detectors, and the remaining univariate polynomial in t = y/x is solved
/// by companion-matrix eigenvalues polished with an Aberth pass. Roots are
/// sorted by (argument, modulus) so synthesis is deterministic.
pub fn synthesize_network(target: &StateVector) -> Result<Synthesis> {
    let n = target.n_total();
    if n == 0 {
        return Err(Error::BadParameter {
            name: "n_total",
            value: 0.0,
            constraint: "target must carry at least one photon",
        });
    }

    // Down-weighted, conjugated amplitudes: the polynomial coefficients.
    let coeffs: Vec<C64> = target
        .amps()
        .iter()
        .enumerate()
        .map(|(k, a)| a.conj() / (sqrt_factorial(n - k) * sqrt_factorial(k)))
        .collect();

    // Structural zeros at the ends become pure-mode detectors: a vanishing
    // x^N..x^(N-hi) range means y divides F, and vice versa.
    let k_lo = coeffs
        .iter()
        .position(|c| c.norm_sqr() > 0.0)
        .expect("normalized state has a nonzero amplitude");
    let k_hi = coeffs
        .iter()
        .rposition(|c| c.norm_sqr() > 0.0)
        .expect("normalized state has a nonzero amplitude");

    let mut forms: Vec<LinearForm> = Vec::with_capacity(n);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    for _ in 0..(n - k_hi) {
        forms.push(LinearForm::new(one, zero).expect("H form"));
    }
    for _ in 0..k_lo {
        forms.push(LinearForm::new(zero, one).expect("V form"));
    }

    let reduced = &coeffs[k_lo..=k_hi];
    let mut degenerate_roots = false;
    if reduced.len() > 1 {
        let mut roots = polyroots::all_roots(reduced)?;
        // Deterministic ordering; C64 arg() lands in (-pi, pi].
        roots.sort_by(|a, b| {
            (a.arg(), a.norm())
                .partial_cmp(&(b.arg(), b.norm()))
                .expect("finite roots")
        });
        for w in roots.windows(2) {
            if (w[0] - w[1]).norm() <= 1e-6 * (1.0 + w[0].norm()) {
                degenerate_roots = true;
            }
        }
        for &t in &roots {
            // g(t) = prod (t - t_i) corresponds to factors (y - t_i x).
            forms.push(LinearForm::new(-t, one)?);
        }
    }

    let network = DetectorNetwork::new(forms, "synthesized")?;
    let kappa = vacuum_overlap(&network.form_pairs(), target)?;

    // Self-check across the occupation basis; kappa is nonzero by
    // construction (it is the product of nonzero factor scales).
    let mut max_relative_residual: f64 = 0.0;
    for k in 0..=n {
        let basis = StateVector::fock(n - k, k);
        let got = vacuum_overlap(&network.form_pairs(), &basis)?;
        let want = kappa * target.amps()[k].conj();
        max_relative_residual = max_relative_residual.max((got - want).norm() / kappa.norm());
    }

    let isometry = network.isometry_report();
    Ok(Synthesis {
        network,
        kappa,
        isometry,
        degenerate_roots,
        max_relative_residual,
    })
}
