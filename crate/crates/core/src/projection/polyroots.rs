//! Complex polynomial root finding for network synthesis: companion-matrix
//! eigenvalues for seeds, then an Aberth simultaneous-refinement pass.
//!
//! The polynomials here come from quantum state amplitudes, so degrees stay
//! small (tens at most) and coefficients are well scaled after the caller's
//! factorial down-weighting; the companion seeds land close enough that the
//! Aberth pass converges in a handful of sweeps.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::{DMatrix, Schur};

/// Backward-error acceptance: a point counts as a root when |p(z)| is below
/// this multiple of the evaluation noise bound sum |c_j| |z|^j.
const BACKWARD_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 120;

/// All complex roots of sum_j coeffs[j] t^j, in no particular order.
///
/// The caller must strip structural zeros first: coeffs must have nonzero
/// first and last entries and degree >= 1.
pub(crate) fn all_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let degree = coeffs.len() - 1;
    assert!(degree >= 1, "degree must be at least 1");
    assert!(coeffs[degree].norm_sqr() > 0.0, "leading coefficient must be nonzero");

    // Monic form keeps the companion matrix and Horner evaluations tame.
    let lead = coeffs[degree];
    let monic: Vec<C64> = coeffs.iter().map(|c| c / lead).collect();

    match degree {
        1 => Ok(vec![-monic[0]]),
        2 => Ok(quadratic_roots(monic[0], monic[1])),
        _ => {
            // Companion-matrix seeds first; if the eigensolver stalls or the
            // refined set fails to rebuild the polynomial (conjugate
            // duplication can plant two seeds on one root), rerun from
            // deterministic circle seeds before giving up.
            if let Some(seeds) = companion_eigenvalues(&monic) {
                if let Ok(roots) = aberth_refine(&monic, seeds) {
                    if reconstruction_ok(&monic, &roots) {
                        return Ok(roots);
                    }
                }
            }
            let roots = aberth_refine(&monic, circle_seeds(&monic))?;
            if reconstruction_ok(&monic, &roots) {
                Ok(roots)
            } else {
                Err(Error::NoConvergence {
                    what: "polynomial root refinement",
                    iterations: MAX_SWEEPS,
                    residual: reconstruction_error(&monic, &roots),
                })
            }
        }
    }
}

/// Multiplies the claimed roots back together and compares against the
/// monic input. Root sets that collapsed onto one another (losing a root
/// entirely) miss by order one; legitimate tight clusters from genuinely
/// multiple roots still reconstruct well because their perturbations cancel
/// in the symmetric functions — hence the deliberately loose tolerance.
fn reconstruction_ok(monic: &[C64], roots: &[C64]) -> bool {
    let scale = 1.0 + monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    reconstruction_error(monic, roots) <= 1e-4 * scale
}

fn reconstruction_error(monic: &[C64], roots: &[C64]) -> f64 {
    let mut rebuilt = vec![C64::new(0.0, 0.0); roots.len() + 1];
    rebuilt[0] = C64::new(1.0, 0.0);
    let mut used = 0;
    for &r in roots {
        used += 1;
        for j in (0..=used).rev() {
            let keep = if j < used { rebuilt[j] } else { C64::new(0.0, 0.0) };
            let shifted = if j > 0 { rebuilt[j - 1] } else { C64::new(0.0, 0.0) };
            rebuilt[j] = shifted - keep * r;
        }
    }
    monic
        .iter()
        .zip(&rebuilt)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// Roots of t^2 + b t + c, using the numerically stable pairing: the larger
/// root from the sign choice that avoids cancellation, the smaller from the
/// product relation c = r1 * r2.
fn quadratic_roots(c: C64, b: C64) -> Vec<C64> {
    let disc = (b * b - 4.0 * c).sqrt();
    // Pick the sign that enlarges |b -/+ disc|.
    let q = if (b + disc).norm() >= (b - disc).norm() {
        -(b + disc) * 0.5
    } else {
        -(b - disc) * 0.5
    };
    if q.norm_sqr() > 0.0 {
        vec![q, c / q]
    } else {
        // b = c = 0: double root at the origin (excluded by the caller's
        // stripping, but kept correct regardless).
        vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
    }
}

/// Eigenvalues of the companion matrix of a monic polynomial, computed by
/// embedding the complex matrix as a real one of twice the size (the real
/// Schur path is what the linear-algebra backend provides). The 2M real
/// eigenvalues come out as the M true eigenvalues plus their conjugates;
/// the pairing is undone by repeatedly taking the remaining value with the
/// smallest polynomial residual and discarding its closest conjugate.
///
/// The QR iteration is given a bounded iteration budget: highly symmetric
/// polynomials (t^4 - 1 from the standard four-detector target, say) produce
/// permutation-structured companion matrices on which unshifted/Francis QR
/// can cycle indefinitely. When the budget runs out this returns None and
/// the caller falls back to circle seeding, which Aberth handles fine.
fn companion_eigenvalues(monic: &[C64]) -> Option<Vec<C64>> {
    let m = monic.len() - 1;

    // Real coefficients need no embedding: the plain companion matrix
    // already yields each root exactly once (conjugate pairs included),
    // sidestepping the duplicated-spectrum pairing below.
    let scale = monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if monic.iter().all(|c| c.im.abs() <= 1e-14 * scale) {
        let mut comp = DMatrix::<f64>::zeros(m, m);
        for i in 1..m {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..m {
            comp[(i, m - 1)] = -monic[i].re;
        }
        let schur = Schur::try_new(comp, f64::EPSILON, 200 * m.max(4))?;
        return Some(
            schur
                .complex_eigenvalues()
                .iter()
                .map(|e| C64::new(e.re, e.im))
                .collect(),
        );
    }

    let mut re = DMatrix::<f64>::zeros(2 * m, 2 * m);
    // Complex companion C: subdiagonal ones, last column -a_i. Real
    // embedding [[X, -Y], [Y, X]] for C = X + iY.
    for i in 1..m {
        re[(i, i - 1)] = 1.0;
        re[(m + i, m + i - 1)] = 1.0;
    }
    for i in 0..m {
        let a = monic[i];
        re[(i, m - 1)] = -a.re;
        re[(m + i, m - 1)] = -a.im;
        re[(i, 2 * m - 1)] = a.im;
        re[(m + i, 2 * m - 1)] = -a.re;
    }
    let schur = Schur::try_new(re, f64::EPSILON, 200 * m.max(4))?;
    let eigs = schur.complex_eigenvalues();

    let mut pool: Vec<C64> = eigs.iter().map(|e| C64::new(e.re, e.im)).collect();
    pool.sort_by(|a, b| {
        let ra = eval(monic, *a).0.norm();
        let rb = eval(monic, *b).0.norm();
        ra.partial_cmp(&rb).expect("finite residuals")
    });
    let mut seeds = Vec::with_capacity(m);
    while seeds.len() < m {
        let z = pool.remove(0);
        // Drop the conjugate partner so it is not selected twice.
        if let Some(idx) = pool
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (*a - z.conj()).norm();
                let db = (*b - z.conj()).norm();
                da.partial_cmp(&db).expect("finite distances")
            })
            .map(|(i, _)| i)
        {
            pool.remove(idx);
        }
        seeds.push(z);
    }
    Some(seeds)
}

/// Classic fallback seeding: points on a circle whose radius is the
/// geometric mean of the root moduli, |c_0 / c_M|^(1/M), with an irrational
/// angular offset so the seeds never sit in a symmetric configuration that
/// Aberth's repulsion term cannot break.
fn circle_seeds(monic: &[C64]) -> Vec<C64> {
    let m = monic.len() - 1;
    let radius = monic[0].norm().powf(1.0 / m as f64).max(1e-3);
    (0..m)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.379_763) / m as f64;
            C64::from_polar(radius * (1.0 + 0.05 * (k as f64) / m as f64), angle)
        })
        .collect()
}

/// p(z) and p'(z) for a monic polynomial, one Horner pass.
fn eval(monic: &[C64], z: C64) -> (C64, C64) {
    let m = monic.len() - 1;
    let mut p = C64::new(1.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for j in (0..m).rev() {
        dp = dp * z + p;
        p = p * z + monic[j];
    }
    (p, dp)
}

/// Noise bound for evaluating the monic polynomial at z: sum |c_j| |z|^j.
fn eval_scale(monic: &[C64], z: C64) -> f64 {
    let r = z.norm();
    let mut scale = 1.0;
    for j in (0..monic.len() - 1).rev() {
        scale = scale * r + monic[j].norm();
    }
    scale
}

/// Aberth-Ehrlich simultaneous iteration from the given seeds.
fn aberth_refine(monic: &[C64], mut z: Vec<C64>) -> Result<Vec<C64>> {
    let m = z.len();
    let mut worst_residual = f64::MAX;
    for _ in 0..MAX_SWEEPS {
        let mut done = true;
        for i in 0..m {
            let (p, dp) = eval(monic, z[i]);
            if p.norm() <= BACKWARD_TOL * eval_scale(monic, z[i]) {
                continue;
            }
            done = false;
            let newton = if dp.norm_sqr() > 0.0 {
                p / dp
            } else {
                // Flat spot: nudge off it.
                C64::new(1e-8, 1e-8)
            };
            let mut repulsion = C64::new(0.0, 0.0);
            for j in 0..m {
                if i != j {
                    let mut diff = z[i] - z[j];
                    if diff.norm_sqr() == 0.0 {
                        diff = C64::new(1e-12, 0.0);
                    }
                    repulsion += diff.inv();
                }
            }
            let denom = C64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm_sqr() > 0.0 {
                newton / denom
            } else {
                newton
            };
            z[i] -= step;
        }
        if done {
            return Ok(z);
        }
        worst_residual = z
            .iter()
            .map(|&zi| eval(monic, zi).0.norm() / eval_scale(monic, zi))
            .fold(0.0, f64::max);
    }
    // Accept anything within the documented root tolerance; otherwise
    // report the sticking point honestly.
    if worst_residual <= 1e-10 {
        Ok(z)
    } else {
        Err(Error::NoConvergence {
            what: "polynomial root refinement",
            iterations: MAX_SWEEPS,
            residual: worst_residual,
        })
    }
}
