//! The partial-distinguishability model connecting pairwise and four-fold
//! fringe visibilities.
//!
//! Two photon pairs overlapping in the same detection window interfere fully
//! only to the extent they are indistinguishable. The model weighs
//! accidental two-pair production (weight `a_acc`) against genuinely
//! overlapping emission (weight `e_ovl ≤ a_acc`); together with the pairwise
//! visibility v2 this fixes the four-fold visibility, and the relation
//! inverts cleanly, so a measured four-fold visibility yields the overlap
//! ratio. A second, independent route to the same ratio compares the
//! measured four-fold rate against the accidental rate predicted from
//! pairwise coincidences.

use crate::error::{Error, Result};

/// Weights of the two-pair emission model plus the pairwise visibility.
///
/// Only the ratio `e_ovl / a_acc` (written ratio below) affects visibilities;
/// the absolute scale of the weights is arbitrary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapParams {
    a_acc: f64,
    e_ovl: f64,
    v2: f64,
}

impl OverlapParams {
    pub fn new(a_acc: f64, e_ovl: f64, v2: f64) -> Result<Self> {
        if !a_acc.is_finite() || a_acc <= 0.0 {
            return Err(Error::BadParameter {
                name: "a_acc",
                value: a_acc,
                constraint: "a_acc > 0",
            });
        }
        if !e_ovl.is_finite() || e_ovl < 0.0 || e_ovl > a_acc {
            return Err(Error::BadParameter {
                name: "e_ovl",
                value: e_ovl,
                constraint: "0 <= e_ovl <= a_acc",
            });
        }
        check_unit_interval("v2", v2)?;
        Ok(OverlapParams { a_acc, e_ovl, v2 })
    }

    /// Builds params from the ratio e_ovl/a_acc directly (a_acc = 1).
    pub fn from_ratio(ratio: f64, v2: f64) -> Result<Self> {
        check_unit_interval("ratio", ratio)?;
        OverlapParams::new(1.0, ratio, v2)
    }

    pub fn a_acc(&self) -> f64 {
        self.a_acc
    }

    pub fn e_ovl(&self) -> f64 {
        self.e_ovl
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }

    pub fn ratio(&self) -> f64 {
        self.e_ovl / self.a_acc
    }

    /// Four-fold fringe visibility:
    /// V4 = 3(a + 2e) v2^2 / [(6 + v2^2) a + 2e (3 - 2 v2)].
    ///
    /// Fully overlapping pairs at perfect pairwise visibility give 1;
    /// independent pairs at v2 = 1 give only 3/7 — the residual modulation
    /// that survives pure accidental four-fold coincidences.
    pub fn v4(&self) -> f64 {
        let v2sq = self.v2 * self.v2;
        let num = 3.0 * (self.a_acc + 2.0 * self.e_ovl) * v2sq;
        let den = (6.0 + v2sq) * self.a_acc + 2.0 * self.e_ovl * (3.0 - 2.0 * self.v2);
        num / den
    }

    /// Unit-mean four-fold fringe shape, 1 - V4 cos(4 phi). Scaling to
    /// counted rates lives in the simulation layer.
    pub fn fringe(&self, phi: f64) -> f64 {
        1.0 - self.v4() * (4.0 * phi).cos()
    }
}

fn check_unit_interval(name: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(Error::BadParameter {
            name,
            value: x,
            constraint: "within [0, 1]",
        });
    }
    Ok(())
}

/// Attainable four-fold visibility interval [at ratio 0, at ratio 1] for a
/// given pairwise visibility — the closed-form bounds of the model.
pub fn v4_range(v2: f64) -> Result<(f64, f64)> {
    check_unit_interval("v2", v2)?;
    let v2sq = v2 * v2;
    let lo = 3.0 * v2sq / (6.0 + v2sq);
    let hi = 9.0 * v2sq / (12.0 - 4.0 * v2 + v2sq);
    Ok((lo, hi))
}

/// Slack accepted on the attainable range before declaring a visibility
/// unreachable, so values that sit on a bound up to rounding still invert.
const RANGE_SLACK: f64 = 1e-9;

/// Inverts the visibility relation: the overlap ratio that reproduces a
/// measured four-fold visibility at the given pairwise visibility.
pub fn ea_from_visibility(v4: f64, v2: f64) -> Result<f64> {
    if !(0.0 < v2 && v2 <= 1.0) {
        return Err(Error::BadParameter {
            name: "v2",
            value: v2,
            constraint: "within (0, 1]",
        });
    }
    check_unit_interval("v4", v4)?;
    let (lo, hi) = v4_range(v2)?;
    if v4 < lo - RANGE_SLACK || v4 > hi + RANGE_SLACK {
        return Err(Error::VisibilityUnreachable { v4, v2, lo, hi });
    }
    let v2sq = v2 * v2;
    let num = 3.0 * v2sq - v4 * (6.0 + v2sq);
    let den = 2.0 * v4 * (3.0 - 2.0 * v2) - 6.0 * v2sq;
    // Within the attainable range the denominator is strictly negative
    // (its zero sits above the upper bound); clamp only rounding residue.
    Ok((num / den).clamp(0.0, 1.0))
}

/// [`ea_from_visibility`] with first-order uncertainty propagation from the
/// visibility's 1-sigma error (the pairwise visibility is treated as exact).
pub fn ea_from_visibility_sigma(v4: f64, sigma_v4: f64, v2: f64) -> Result<(f64, f64)> {
    if !sigma_v4.is_finite() || sigma_v4 < 0.0 {
        return Err(Error::BadParameter {
            name: "sigma_v4",
            value: sigma_v4,
            constraint: "sigma_v4 >= 0",
        });
    }
    let ratio = ea_from_visibility(v4, v2)?;
    // d(ratio)/d(v4) for ratio = P/Q with P = 3 v2^2 - v4 (6 + v2^2),
    // Q = 2 v4 (3 - 2 v2) - 6 v2^2.
    let v2sq = v2 * v2;
    let p = 3.0 * v2sq - v4 * (6.0 + v2sq);
    let q = 2.0 * v4 * (3.0 - 2.0 * v2) - 6.0 * v2sq;
    let dp = -(6.0 + v2sq);
    let dq = 2.0 * (3.0 - 2.0 * v2);
    let derivative = (dp * q - p * dq) / (q * q);
    Ok((ratio, derivative.abs() * sigma_v4))
}

/// The six two-detector coincidence rates (counts/second) plus the source
/// repetition rate, validated so every rate is a sub-unity probability per
/// cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRates {
    pub ab: f64,
    pub cd: f64,
    pub ac: f64,
    pub bd: f64,
    pub ad: f64,
    pub cb: f64,
    rep_rate: f64,
}

impl PairRates {
    #[allow(clippy::too_many_arguments)]
    pub fn new(ab: f64, cd: f64, ac: f64, bd: f64, ad: f64, cb: f64, rep_rate: f64) -> Result<Self> {
        if !rep_rate.is_finite() || rep_rate <= 0.0 {
            return Err(Error::BadParameter {
                name: "rep_rate",
                value: rep_rate,
                constraint: "rep_rate > 0",
            });
        }
        for (name, r) in [
            ("ab", ab),
            ("cd", cd),
            ("ac", ac),
            ("bd", bd),
            ("ad", ad),
            ("cb", cb),
        ] {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::BadParameter {
                    name: "pair rate",
                    value: r,
                    constraint: "finite and nonnegative",
                });
            }
            if r >= rep_rate {
                let _ = name;
                return Err(Error::BadParameter {
                    name: "pair rate",
                    value: r,
                    constraint: "below the repetition rate",
                });
            }
        }
        Ok(PairRates {
            ab,
            cd,
            ac,
            bd,
            ad,
            cb,
            rep_rate,
        })
    }

    pub fn rep_rate(&self) -> f64 {
        self.rep_rate
    }
}

/// Four-fold rate expected from statistically independent pairs: the three
/// complementary pairings of the four detectors, each a product of two
/// pairwise rates, divided by the repetition rate.
pub fn accidental_fourfold(rates: &PairRates) -> f64 {
    (rates.ab * rates.cd + rates.ac * rates.bd + rates.ad * rates.cb) / rates.rep_rate
}

/// Overlap ratio from the rate route: a measured four-fold rate exceeding
/// its accidental floor by a factor (1 + 2 ratio).
pub fn ea_from_rates(r4_measured: f64, r4_accidental: f64) -> Result<f64> {
    if !r4_accidental.is_finite() || r4_accidental <= 0.0 {
        return Err(Error::BadParameter {
            name: "r4_accidental",
            value: r4_accidental,
            constraint: "r4_accidental > 0",
        });
    }
    if !r4_measured.is_finite() || r4_measured < r4_accidental {
        return Err(Error::InconsistentRates {
            context: format!(
                "measured four-fold rate {r4_measured} is below its accidental floor {r4_accidental}"
            ),
        });
    }
    Ok((r4_measured / r4_accidental - 1.0) / 2.0)
}

/// [`ea_from_rates`] with first-order propagation of both rates'
/// uncertainties (treated as independent).
pub fn ea_from_rates_sigma(
    r4_measured: f64,
    sigma_measured: f64,
    r4_accidental: f64,
    sigma_accidental: f64,
) -> Result<(f64, f64)> {
    for (name, s) in [("sigma_measured", sigma_measured), ("sigma_accidental", sigma_accidental)] {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::BadParameter {
                name,
                value: s,
                constraint: "sigma >= 0",
            });
        }
    }
    let ratio = ea_from_rates(r4_measured, r4_accidental)?;
    let d_meas = 1.0 / (2.0 * r4_accidental);
    let d_acc = r4_measured / (2.0 * r4_accidental * r4_accidental);
    let sigma =
        ((d_meas * sigma_measured).powi(2) + (d_acc * sigma_accidental).powi(2)).sqrt();
    Ok((ratio, sigma))
}
