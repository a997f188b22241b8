//! Fringe fitting and background subtraction for coincidence sweeps.
//!
//! The fringe model bg + n0·(1 − vis·cos(k·phi + theta)) is linear in
//! (n0, n0·vis·cos theta, n0·vis·sin theta) once the background is pinned,
//! so the weighted least-squares problem is solved exactly through its
//! normal equations — no iteration and no starting guess, and the
//! Gauss–Newton covariance at the optimum is the very matrix the solve
//! factorizes. A free additive background is structurally unidentifiable
//! in this model (it enters only through bg + n0 next to the product
//! n0·vis), so fits pin bg = 0; real backgrounds are removed beforehand by
//! [`subtract_background`] with a no-signal run.

use crate::error::{Error, Result};
use crate::simkit::CountDataset;
use nalgebra::{DMatrix, DVector};

/// Fitted fringe parameters for one coincidence series, with the 1-sigma
/// visibility uncertainty propagated from the weighted covariance.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FringeFit {
    /// Fringe amplitude (mean counts at visibility zero-crossing).
    pub n0: f64,
    /// Raw fitted visibility; outside [0, 1] only with
    /// `vis_out_of_range` set.
    pub vis: f64,
    /// Phase offset in radians, in (-pi, pi].
    pub theta: f64,
    /// Residual additive background; always 0 from the fit itself (see the
    /// module docs), kept so the model evaluates as recorded.
    pub bg: f64,
    pub harmonic: u32,
    pub sigma_vis: f64,
    /// Unweighted root-mean-square of the fit residuals.
    pub residual_rms: f64,
    /// Set when the raw visibility falls outside [0, 1].
    pub vis_out_of_range: bool,
    /// Set when the fringe amplitude vanishes and theta is unidentifiable
    /// (theta is then reported as 0 and uncertainties are unreliable).
    pub degenerate_theta: bool,
}

impl FringeFit {
    /// The fitted model evaluated at one phase.
    pub fn model_at(&self, phi: f64) -> f64 {
        self.bg
            + self.n0 * (1.0 - self.vis * (self.harmonic as f64 * phi + self.theta).cos())
    }
}

/// Least-squares fringe fit with Poisson weighting (variance max(count, 1)
/// per point).
pub fn fit_fringe(points: &[(f64, f64)], harmonic: u32, fix_theta: Option<f64>) -> Result<FringeFit> {
    let weighted: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(phi, y)| (phi, y, y.max(1.0).sqrt()))
        .collect();
    fit_fringe_weighted(&weighted, harmonic, fix_theta)
}

/// Least-squares fringe fit with caller-supplied per-point uncertainties.
///
/// Requires at least four distinct phases spanning at least half a fringe
/// period pi/harmonic. With `fix_theta` the phase offset is held at the
/// given value and only amplitude and visibility are fitted (a flipped
/// fringe then shows up as a negative, flagged visibility).
pub fn fit_fringe_weighted(
    points: &[(f64, f64, f64)],
    harmonic: u32,
    fix_theta: Option<f64>,
) -> Result<FringeFit> {
    if harmonic == 0 {
        return Err(Error::BadParameter {
            name: "harmonic",
            value: 0.0,
            constraint: "at least 1",
        });
    }
    for &(phi, y, sigma) in points {
        if !phi.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite {
                context: "fringe data point",
            });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::BadParameter {
                name: "sigma",
                value: sigma,
                constraint: "positive and finite",
            });
        }
    }
    if let Some(theta) = fix_theta {
        if !theta.is_finite() {
            return Err(Error::NonFinite {
                context: "fixed phase offset",
            });
        }
    }
    check_phase_coverage(points, harmonic)?;

    let k = harmonic as f64;
    let n_params = if fix_theta.is_some() { 2 } else { 3 };
    let basis = |phi: f64| -> Vec<f64> {
        match fix_theta {
            Some(theta) => vec![1.0, -(k * phi + theta).cos()],
            None => vec![1.0, (k * phi).cos(), (k * phi).sin()],
        }
    };

    // Weighted normal equations sum w_i b_i b_i^T x = sum w_i y_i b_i.
    let mut normal = DMatrix::<f64>::zeros(n_params, n_params);
    let mut rhs = DVector::<f64>::zeros(n_params);
    for &(phi, y, sigma) in points {
        let b = basis(phi);
        let w = 1.0 / (sigma * sigma);
        for r in 0..n_params {
            rhs[r] += w * y * b[r];
            for c in 0..n_params {
                normal[(r, c)] += w * b[r] * b[c];
            }
        }
    }
    // A phase grid that aliases the harmonic (e.g. four points a quarter
    // period apart fitted at k = 4) leaves the normal matrix rank-deficient;
    // floating-point noise can make it technically invertible, so reject on
    // the reciprocal condition number rather than trusting try_inverse.
    let singular = normal.clone().svd(false, false).singular_values;
    let (s_max, s_min) = (singular.max(), singular.min());
    if !(s_min > s_max * 1e-12) {
        return Err(Error::NoConvergence {
            what: "fringe normal equations",
            iterations: 1,
            residual: if s_max > 0.0 { s_min / s_max } else { f64::INFINITY },
        });
    }
    let covariance = normal.clone().try_inverse().ok_or(Error::NoConvergence {
        what: "fringe normal equations",
        iterations: 1,
        residual: f64::INFINITY,
    })?;
    let solution = &covariance * rhs;

    let c0 = solution[0];
    let scale = points.iter().map(|p| p.1.abs()).fold(1.0f64, f64::max);
    let (vis, theta, sigma_vis, degenerate) = match fix_theta {
        Some(theta) => {
            let a = solution[1];
            if c0.abs() <= 1e-12 * scale {
                (0.0, theta, 0.0, true)
            } else {
                let vis = a / c0;
                // Delta method on vis = a / c0.
                let g = DVector::from_vec(vec![-a / (c0 * c0), 1.0 / c0]);
                let var = (g.transpose() * &covariance * &g)[(0, 0)];
                (vis, theta, var.max(0.0).sqrt(), false)
            }
        }
        None => {
            let (p, q) = (solution[1], solution[2]);
            let a = p.hypot(q);
            if c0.abs() <= 1e-12 * scale {
                (0.0, 0.0, 0.0, true)
            } else if a <= 1e-9 * c0.abs() {
                // No resolvable modulation: theta is meaningless; quote the
                // isotropic amplitude uncertainty.
                let var = (covariance[(1, 1)] + covariance[(2, 2)]) / (c0 * c0);
                (0.0, 0.0, var.max(0.0).sqrt(), true)
            } else {
                let vis = a / c0;
                let theta = q.atan2(-p);
                let g = DVector::from_vec(vec![
                    -a / (c0 * c0),
                    p / (a * c0),
                    q / (a * c0),
                ]);
                let var = (g.transpose() * &covariance * &g)[(0, 0)];
                (vis, theta, var.max(0.0).sqrt(), false)
            }
        }
    };

    let n0 = c0.max(0.0);
    let fit = FringeFit {
        n0,
        vis,
        theta,
        bg: 0.0,
        harmonic,
        sigma_vis,
        residual_rms: 0.0,
        vis_out_of_range: !(0.0..=1.0).contains(&vis),
        degenerate_theta: degenerate,
    };
    let ss: f64 = points
        .iter()
        .map(|&(phi, y, _)| (y - fit.model_at(phi)).powi(2))
        .sum();
    Ok(FringeFit {
        residual_rms: (ss / points.len() as f64).sqrt(),
        ..fit
    })
}

/// At least four distinct phases covering half a fringe period.
fn check_phase_coverage(points: &[(f64, f64, f64)], harmonic: u32) -> Result<()> {
    let mut phases: Vec<f64> = points.iter().map(|p| p.0).collect();
    phases.sort_by(|a, b| a.partial_cmp(b).expect("phases checked finite"));
    let mut distinct = 0usize;
    let mut last = f64::NEG_INFINITY;
    for &phi in &phases {
        if phi - last > 1e-12 {
            distinct += 1;
            last = phi;
        }
    }
    if distinct < 4 {
        return Err(Error::TooFewPoints {
            what: "distinct fringe phases",
            needed: 4,
            got: distinct,
        });
    }
    let span = phases.last().unwrap() - phases.first().unwrap();
    let needed = std::f64::consts::PI / harmonic as f64;
    if span < needed {
        return Err(Error::InsufficientSpan {
            span,
            points: points.len(),
            harmonic,
        });
    }
    Ok(())
}

/// One background-subtracted rate with its quadrature-combined Poisson
/// uncertainty, both per second.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RatePoint {
    pub rate: f64,
    pub sigma: f64,
    /// Set when the raw difference went negative and was clamped to zero.
    pub clamped: bool,
}

/// Background-subtracted rates for one phase point, series-ordered exactly
/// like the count columns.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SubtractedRecord {
    pub phase_rad: f64,
    /// AB, CD, AC, BD, AD, CB.
    pub pairs: [RatePoint; 6],
    pub fourfold: RatePoint,
    /// A, B, C, D.
    pub singles: [RatePoint; 4],
}

/// A phase sweep of background-subtracted rates ready for weighted fits.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SubtractedDataset {
    records: Vec<SubtractedRecord>,
}

impl SubtractedDataset {
    pub fn records(&self) -> &[SubtractedRecord] {
        &self.records
    }

    /// (phase, rate, sigma) triples for one pairwise series, indexed in the
    /// canonical column order.
    pub fn pair_points(&self, series: usize) -> Vec<(f64, f64, f64)> {
        assert!(series < 6, "six pairwise series");
        self.records
            .iter()
            .map(|r| (r.phase_rad, r.pairs[series].rate, r.pairs[series].sigma))
            .collect()
    }

    pub fn fourfold_points(&self) -> Vec<(f64, f64, f64)> {
        self.records
            .iter()
            .map(|r| (r.phase_rad, r.fourfold.rate, r.fourfold.sigma))
            .collect()
    }

    pub fn any_clamped(&self) -> bool {
        self.records.iter().any(|r| {
            r.fourfold.clamped
                || r.pairs.iter().any(|p| p.clamped)
                || r.singles.iter().any(|p| p.clamped)
        })
    }
}

/// Pointwise rate subtraction of a no-signal run from a signal run.
///
/// Counts are normalized per second first, so the two runs may use
/// different integration times; uncertainties combine in quadrature using
/// the Poisson variance max(count, 1) of each side, and differences that
/// go negative are clamped to zero with the point flagged.
pub fn subtract_background(
    signal: &CountDataset,
    background: &CountDataset,
) -> Result<SubtractedDataset> {
    if signal.len() != background.len() {
        return Err(Error::BadParameter {
            name: "background records",
            value: background.len() as f64,
            constraint: "one background point per signal point",
        });
    }
    let mut records = Vec::with_capacity(signal.len());
    for (sig, bg) in signal.records().iter().zip(background.records()) {
        if (sig.phase_rad - bg.phase_rad).abs() > 1e-9 {
            return Err(Error::BadParameter {
                name: "background phase grid",
                value: bg.phase_rad,
                constraint: "phases must match the signal grid",
            });
        }
        let point = |n: u64, m: u64| -> RatePoint {
            let diff = n as f64 / sig.duration_s - m as f64 / bg.duration_s;
            let var = (n.max(1) as f64) / (sig.duration_s * sig.duration_s)
                + (m.max(1) as f64) / (bg.duration_s * bg.duration_s);
            RatePoint {
                rate: diff.max(0.0),
                sigma: var.sqrt(),
                clamped: diff < 0.0,
            }
        };
        let sp = sig.pair_counts();
        let bp = bg.pair_counts();
        let ss = sig.singles();
        let bs = bg.singles();
        records.push(SubtractedRecord {
            phase_rad: sig.phase_rad,
            pairs: [
                point(sp[0], bp[0]),
                point(sp[1], bp[1]),
                point(sp[2], bp[2]),
                point(sp[3], bp[3]),
                point(sp[4], bp[4]),
                point(sp[5], bp[5]),
            ],
            fourfold: point(sig.n_4fold, bg.n_4fold),
            singles: [
                point(ss[0], bs[0]),
                point(ss[1], bs[1]),
                point(ss[2], bs[2]),
                point(ss[3], bs[3]),
            ],
        });
    }
    Ok(SubtractedDataset { records })
}
