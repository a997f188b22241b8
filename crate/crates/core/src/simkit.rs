//! Monte Carlo generation of synthetic count datasets.
//!
//! Two layers stack here. The exact layer ([`OutcomeDistribution`],
//! [`sample_pattern`]) samples detector occupation patterns from the true
//! quantum distribution of a state behind an isometric network. The
//! phenomenological layer ([`simulate_counts`]) reproduces a pulsed
//! coincidence measurement: Poissonian pair emission, a two-photon fringe
//! model with visibility `v2`, a four-photon sector mixing independent pair
//! events with fully coherent quadruple events so that the aggregate
//! fourfold visibility lands exactly on the overlap model's prediction,
//! detector efficiency thinning, and dark counts. Everything is drawn from
//! per-phase-point ChaCha streams, so datasets are bit-reproducible for a
//! given seed no matter how the points are scheduled.

use crate::error::{Error, Result};
use crate::fock::{vacuum_overlap, PhaseShift, StateVector};
use crate::projection::DetectorNetwork;
use crate::vismodel::{accidental_fourfold, v4_range, OverlapParams, PairRates};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

/// Pair-emission numbers above this are folded into the truncated Poisson
/// tail; at realistic pump levels the discarded mass is below 1e-13.
pub const MAX_PAIRS_PER_PULSE: usize = 16;

/// Detector labels in the column order used throughout (pairs first by
/// fringe family, then the quadrature family).
pub const PAIR_LABELS: [&str; 6] = ["AB", "CD", "AC", "BD", "AD", "CB"];

/// Full description of one synthetic run: phase sweep, pulse budget, source
/// brightness, distinguishability parameters, and detector imperfections.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Single-photon phases (radians); pair fringes appear at 2 phi, the
    /// fourfold fringe at 4 phi.
    pub phases: Vec<f64>,
    pub pulses_per_point: u64,
    /// Pulse repetition rate in Hz; fixes the duration of each point.
    pub rep_rate: f64,
    /// Mean pairs per pulse (Poisson intensity).
    pub pair_prob: f64,
    /// Pair-overlap ratio in [0, 1]: 0 keeps emitted pairs fully
    /// independent, 1 makes every two-pair pulse fully coherent.
    pub ea_ratio: f64,
    /// Two-photon fringe visibility in [0, 1].
    pub v2: f64,
    /// Per-detector survival probability in (0, 1].
    pub det_efficiency: f64,
    /// Per-detector dark-fire probability per pulse window, in [0, 1).
    pub dark_prob: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::TooFewPoints {
                what: "phase sweep",
                needed: 1,
                got: 0,
            });
        }
        for &phi in &self.phases {
            if !phi.is_finite() {
                return Err(Error::NonFinite {
                    context: "phase value",
                });
            }
        }
        if self.pulses_per_point == 0 {
            return Err(Error::BadParameter {
                name: "pulses_per_point",
                value: 0.0,
                constraint: "at least one pulse",
            });
        }
        check_range("rep_rate", self.rep_rate, 1e-9, f64::MAX, "positive")?;
        check_range("pair_prob", self.pair_prob, 0.0, 1.0, "within [0, 1]")?;
        check_range("ea_ratio", self.ea_ratio, 0.0, 1.0, "within [0, 1]")?;
        check_range("v2", self.v2, 0.0, 1.0, "within [0, 1]")?;
        if !(self.det_efficiency > 0.0 && self.det_efficiency <= 1.0) {
            return Err(Error::BadParameter {
                name: "det_efficiency",
                value: self.det_efficiency,
                constraint: "within (0, 1]",
            });
        }
        if !(self.dark_prob >= 0.0 && self.dark_prob < 1.0) {
            return Err(Error::BadParameter {
                name: "dark_prob",
                value: self.dark_prob,
                constraint: "within [0, 1)",
            });
        }
        Ok(())
    }

    /// Wall-clock seconds spent on each phase point.
    pub fn duration_per_point(&self) -> f64 {
        self.pulses_per_point as f64 / self.rep_rate
    }
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, constraint: &'static str) -> Result<()> {
    if !value.is_finite() || value < lo || value > hi {
        return Err(Error::BadParameter {
            name,
            value,
            constraint,
        });
    }
    Ok(())
}

/// Tallies for one phase point: six pairwise coincidence counters, the
/// fourfold counter, and per-detector singles, all over `duration_s`
/// seconds of pulses.
///
/// A pulse window in which detectors X and Y both fire increments n_XY (and
/// every other satisfied counter), so the fourfold count can never exceed
/// any pairwise count.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CountRecord {
    pub phase_rad: f64,
    pub duration_s: f64,
    pub n_ab: u64,
    pub n_cd: u64,
    pub n_ac: u64,
    pub n_bd: u64,
    pub n_ad: u64,
    pub n_cb: u64,
    pub n_4fold: u64,
    pub s_a: u64,
    pub s_b: u64,
    pub s_c: u64,
    pub s_d: u64,
}

impl CountRecord {
    pub fn pair_counts(&self) -> [u64; 6] {
        [self.n_ab, self.n_cd, self.n_ac, self.n_bd, self.n_ad, self.n_cb]
    }

    pub fn singles(&self) -> [u64; 4] {
        [self.s_a, self.s_b, self.s_c, self.s_d]
    }
}

/// A phase-ordered collection of [`CountRecord`]s constituting one run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CountDataset {
    records: Vec<CountRecord>,
}

impl CountDataset {
    /// Validates the structural invariants: finite phases, positive
    /// durations, and a fourfold counter bounded by every pairwise counter.
    pub fn new(records: Vec<CountRecord>) -> Result<Self> {
        for rec in &records {
            if !rec.phase_rad.is_finite() {
                return Err(Error::NonFinite {
                    context: "record phase",
                });
            }
            if !(rec.duration_s > 0.0) || !rec.duration_s.is_finite() {
                return Err(Error::BadParameter {
                    name: "duration_s",
                    value: rec.duration_s,
                    constraint: "positive and finite",
                });
            }
            if rec.pair_counts().iter().any(|&c| rec.n_4fold > c) {
                return Err(Error::InconsistentRates {
                    context: format!(
                        "fourfold count {} exceeds a pairwise count at phase {}",
                        rec.n_4fold, rec.phase_rad
                    ),
                });
            }
        }
        Ok(CountDataset { records })
    }

    pub fn records(&self) -> &[CountRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// The exact occupation-pattern distribution of a photon-number state
/// behind an isometric four-detector network.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    patterns: Vec<[u16; 4]>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OutcomeDistribution {
    /// Expands the state in detector modes and collects
    /// Pr(pattern) = |overlap|^2 / prod(n_j!) over every composition of the
    /// photon number into four occupations. The network must be isometric,
    /// otherwise the probabilities are not a distribution.
    pub fn new(s: &StateVector, net: &DetectorNetwork) -> Result<Self> {
        let report = net.isometry_report();
        if !report.holds {
            return Err(Error::NotIsometric {
                col_h: report.col_h,
                col_v: report.col_v,
                cross: report.cross.norm(),
            });
        }
        let forms = net.form_pairs();
        let n = s.n_total();
        let mut patterns = Vec::new();
        let mut probs = Vec::new();
        for pattern in compositions_of(n, forms.len()) {
            let mut multiset = Vec::with_capacity(n);
            let mut ln_perm = 0.0;
            for (j, &occ) in pattern.iter().enumerate() {
                for _ in 0..occ {
                    multiset.push(forms[j]);
                }
                ln_perm += crate::math::ln_factorial(occ as usize);
            }
            let amp = vacuum_overlap(&multiset, s)?;
            let mut fixed = [0u16; 4];
            for (slot, &occ) in fixed.iter_mut().zip(&pattern) {
                *slot = occ;
            }
            patterns.push(fixed);
            probs.push(amp.norm_sqr() * (-ln_perm).exp());
        }
        Self::from_parts(patterns, probs)
    }

    /// Convex mixture of distributions that share a pattern list (same
    /// photon number, same network).
    pub(crate) fn mixture(parts: &[(f64, &OutcomeDistribution)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or(Error::TooFewPoints {
                what: "mixture components",
                needed: 1,
                got: 0,
            })?
            .1;
        let mut probs = vec![0.0; first.probs.len()];
        for &(weight, dist) in parts {
            if dist.patterns != first.patterns {
                return Err(Error::PhotonMismatch {
                    left: first.patterns.len(),
                    right: dist.patterns.len(),
                });
            }
            for (acc, &p) in probs.iter_mut().zip(&dist.probs) {
                *acc += weight * p;
            }
        }
        Self::from_parts(first.patterns.clone(), probs)
    }

    fn from_parts(patterns: Vec<[u16; 4]>, probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if !(total.is_finite()) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::NonFinite {
                context: "outcome probabilities do not sum to one",
            });
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc / total);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(OutcomeDistribution {
            patterns,
            probs,
            cumulative,
        })
    }

    pub fn patterns(&self) -> &[[u16; 4]] {
        &self.patterns
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of one specific occupation pattern (zero if it is not in
    /// the support, e.g. wrong total).
    pub fn prob_of(&self, pattern: [u16; 4]) -> f64 {
        self.patterns
            .iter()
            .position(|p| *p == pattern)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [u16; 4] {
        let u: f64 = rng.random();
        let idx = self
            .cumulative
            .partition_point(|&c| c < u)
            .min(self.patterns.len() - 1);
        self.patterns[idx]
    }
}

/// All ways to place `n` photons on `parts` detectors, in a fixed
/// deterministic order.
fn compositions_of(n: usize, parts: usize) -> Vec<Vec<u16>> {
    fn recurse(remaining: u16, slots: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for take in 0..=remaining {
            prefix.push(take);
            recurse(remaining - take, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    recurse(n as u16, parts.max(1), &mut Vec::new(), &mut out);
    out
}

/// Draws one occupation pattern from the exact distribution of `s` behind
/// `net`. For repeated sampling build an [`OutcomeDistribution`] once and
/// call [`OutcomeDistribution::sample`] instead.
pub fn sample_pattern<R: Rng + ?Sized>(
    s: &StateVector,
    net: &DetectorNetwork,
    rng: &mut R,
) -> Result<[u16; 4]> {
    Ok(OutcomeDistribution::new(s, net)?.sample(rng))
}

/// Ten ways a single emitted pair can land on the detectors: six distinct
/// pairs in the canonical order, then the four double-occupations.
const PAIR_OUTCOME_OCCUPANCY: [[u16; 4]; 10] = [
    [1, 1, 0, 0], // AB
    [0, 0, 1, 1], // CD
    [1, 0, 1, 0], // AC
    [0, 1, 0, 1], // BD
    [1, 0, 0, 1], // AD
    [0, 1, 1, 0], // CB
    [2, 0, 0, 0], // AA
    [0, 2, 0, 0], // BB
    [0, 0, 2, 0], // CC
    [0, 0, 0, 2], // DD
];

/// Landing probabilities for one pair at single-photon phase phi with
/// two-photon visibility v; matches the exact quantum distribution of one
/// pair behind the standard network at v = 1.
fn pair_outcome_probs(phi: f64, v: f64) -> [f64; 10] {
    let c = v * (2.0 * phi).cos();
    let s = v * (2.0 * phi).sin();
    [
        (1.0 - c) / 8.0, // AB
        (1.0 + c) / 8.0, // CD
        (1.0 - s) / 8.0, // AC
        (1.0 - s) / 8.0, // BD
        (1.0 + s) / 8.0, // AD
        (1.0 + s) / 8.0, // CB
        (1.0 + c) / 16.0, // AA
        (1.0 + c) / 16.0, // BB
        (1.0 - c) / 16.0, // CC
        (1.0 - c) / 16.0, // DD
    ]
}

/// Probability that a two-pair pulse is emitted as one fully coherent
/// quadruple rather than two independent pairs, chosen so the aggregate
/// fourfold visibility equals the overlap model's prediction exactly.
///
/// Independent pairs produce a fourfold fringe with visibility
/// 3 v^2/(6 + v^2) and mean (6 + v^2)/64; coherent quadruples give
/// 9 v^2/(12 - 4v + v^2) around mean 9/128. Matching the mixture's
/// visibility to the model fixes the weight. As v -> 0 every term vanishes
/// together and the weight tends to 8r/(3 + 5r), which is used directly in
/// that limit.
fn coherent_weight(v: f64, ratio: f64) -> Result<f64> {
    if v * v < 1e-12 {
        return Ok(8.0 * ratio / (3.0 + 5.0 * ratio));
    }
    let v4 = OverlapParams::from_ratio(ratio, v)?.v4();
    let (v22, v41) = v4_range(v)?;
    let m22 = (6.0 + v * v) / 64.0;
    let m41 = 9.0 / 128.0;
    let num = m22 * (v4 - v22);
    let den = m41 * (v41 - v4) + num;
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Poisson weights over 0..=MAX_PAIRS_PER_PULSE pairs, renormalized over
/// the kept range.
fn truncated_poisson(mean: f64) -> Vec<f64> {
    let mut probs = Vec::with_capacity(MAX_PAIRS_PER_PULSE + 1);
    let mut term = (-mean).exp();
    let mut total = 0.0;
    for m in 0..=MAX_PAIRS_PER_PULSE {
        if m > 0 {
            term *= mean / m as f64;
        }
        probs.push(term);
        total += term;
    }
    for p in &mut probs {
        *p /= total;
    }
    probs
}

/// Splits `n` draws over `probs` categories by chained conditional
/// binomials; the counts always sum to `n`.
fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut left = n;
    let mut rest = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || rest <= p {
            out[i] = left;
            break;
        }
        let q = (p / rest).clamp(0.0, 1.0);
        let draw = if q <= 0.0 {
            0
        } else if q >= 1.0 {
            left
        } else {
            Binomial::new(left, q)
                .expect("probability already clamped to [0, 1]")
                .sample(rng)
        };
        out[i] = draw;
        left -= draw;
        rest -= p;
    }
    out
}

/// Window fire-pattern bookkeeping: index bit 0 = A, 1 = B, 2 = C, 3 = D.
#[derive(Debug, Default)]
struct FireTally {
    subsets: [u64; 16],
}

impl FireTally {
    /// Per-detector fire probability given `occ` signal photons on it:
    /// at least one survivor, or a dark fire.
    fn fire_probs(occ: [u16; 4], efficiency: f64, dark: f64) -> [f64; 4] {
        let mut p = [0.0; 4];
        for (slot, &n) in p.iter_mut().zip(&occ) {
            let all_lost = (1.0 - efficiency).powi(n as i32);
            *slot = 1.0 - all_lost * (1.0 - dark);
        }
        p
    }

    /// Distributes `count` identical pulses with the given per-detector
    /// fire probabilities over the 16 window patterns in one multinomial.
    fn add_aggregate<R: Rng + ?Sized>(&mut self, rng: &mut R, count: u64, fire: [f64; 4]) {
        if count == 0 {
            return;
        }
        // Nothing can fire: all pulses land in the empty pattern.
        if fire.iter().all(|&p| p == 0.0) {
            self.subsets[0] += count;
            return;
        }
        let mut probs = [0.0f64; 16];
        for (subset, slot) in probs.iter_mut().enumerate() {
            let mut p = 1.0;
            for (det, &f) in fire.iter().enumerate() {
                p *= if subset & (1 << det) != 0 { f } else { 1.0 - f };
            }
            *slot = p;
        }
        for (subset, extra) in multinomial(rng, count, &probs).into_iter().enumerate() {
            self.subsets[subset] += extra;
        }
    }

    /// Samples one pulse window directly (used for rare high-order pulses).
    fn add_single<R: Rng + ?Sized>(&mut self, rng: &mut R, fire: [f64; 4]) {
        let mut subset = 0usize;
        for (det, &f) in fire.iter().enumerate() {
            if rng.random::<f64>() < f {
                subset |= 1 << det;
            }
        }
        self.subsets[subset] += 1;
    }

    fn into_record(self, phase_rad: f64, duration_s: f64) -> CountRecord {
        let count_where = |mask: usize| -> u64 {
            self.subsets
                .iter()
                .enumerate()
                .filter(|(s, _)| s & mask == mask)
                .map(|(_, &c)| c)
                .sum()
        };
        CountRecord {
            phase_rad,
            duration_s,
            n_ab: count_where(0b0011),
            n_cd: count_where(0b1100),
            n_ac: count_where(0b0101),
            n_bd: count_where(0b1010),
            n_ad: count_where(0b1001),
            n_cb: count_where(0b0110),
            n_4fold: count_where(0b1111),
            s_a: count_where(0b0001),
            s_b: count_where(0b0010),
            s_c: count_where(0b0100),
            s_d: count_where(0b1000),
        }
    }
}

/// Independent ChaCha stream for one phase point, derived from the run seed
/// and the point index so results do not depend on evaluation order.
fn point_rng(seed: u64, index: usize) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(index as u64).to_le_bytes());
    key[16..24].copy_from_slice(&0x6e6f6f6e_73696d21u64.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Runs the full synthetic experiment described by `cfg` and returns the
/// tallied counts; identical configs give identical datasets.
///
/// Per pulse, the number of emitted pairs is Poissonian with mean
/// `pair_prob`. Single pairs land according to the two-photon fringe
/// model; two-pair pulses are either one coherent quadruple (with
/// probability [`coherent_weight`]) sampled from the exact four-photon
/// distribution blended to its reduced visibility, or two independent
/// pairs sharing the window; rarer multi-pair pulses are routed as
/// independent pairs per pulse. Every signal photon then survives to its
/// detector with probability `det_efficiency`, darks fire independently,
/// and the window's fire pattern feeds the coincidence counters.
pub fn simulate_counts(cfg: &ExperimentConfig) -> Result<CountDataset> {
    cfg.validate()?;
    let duration = cfg.duration_per_point();
    let eff = cfg.det_efficiency;
    let dark = cfg.dark_prob;
    let poisson = truncated_poisson(cfg.pair_prob);
    let w_coherent = coherent_weight(cfg.v2, cfg.ea_ratio)?;
    let (_, v41) = if cfg.v2 > 0.0 {
        v4_range(cfg.v2)?
    } else {
        (0.0, 0.0)
    };

    let net = DetectorNetwork::noon4();
    let quad = StateVector::pdc4();
    // Phase-independent pattern distributions of the bare four-photon
    // basis states; their population-weighted mixture is the fully
    // dephased limit of a coherent quadruple.
    let inc_parts = [
        (0.375, OutcomeDistribution::new(&StateVector::fock(4, 0), &net)?),
        (0.25, OutcomeDistribution::new(&StateVector::fock(2, 2), &net)?),
        (0.375, OutcomeDistribution::new(&StateVector::fock(0, 4), &net)?),
    ];
    let incoherent = OutcomeDistribution::mixture(&[
        (inc_parts[0].0, &inc_parts[0].1),
        (inc_parts[1].0, &inc_parts[1].1),
        (inc_parts[2].0, &inc_parts[2].1),
    ])?;

    let mut records = Vec::with_capacity(cfg.phases.len());
    for (index, &phi) in cfg.phases.iter().enumerate() {
        let mut rng = point_rng(cfg.seed, index);
        let mut tally = FireTally::default();

        let by_pairs = multinomial(&mut rng, cfg.pulses_per_point, &poisson);

        // Pulses with no emission can still fire darks.
        tally.add_aggregate(
            &mut rng,
            by_pairs[0],
            FireTally::fire_probs([0, 0, 0, 0], eff, dark),
        );

        // Single-pair pulses follow the two-photon fringe model.
        let pair_probs = pair_outcome_probs(phi, cfg.v2);
        let by_outcome = multinomial(&mut rng, by_pairs[1], &pair_probs);
        for (outcome, &count) in by_outcome.iter().enumerate() {
            tally.add_aggregate(
                &mut rng,
                count,
                FireTally::fire_probs(PAIR_OUTCOME_OCCUPANCY[outcome], eff, dark),
            );
        }

        // Two-pair pulses: coherent quadruples vs independent pairs.
        let n_coherent = if by_pairs[2] == 0 || w_coherent <= 0.0 {
            0
        } else if w_coherent >= 1.0 {
            by_pairs[2]
        } else {
            Binomial::new(by_pairs[2], w_coherent)
                .expect("weight already clamped")
                .sample(&mut rng)
        };
        if n_coherent > 0 {
            let shifted = quad.apply_phase(PhaseShift::new(phi)?);
            let exact = OutcomeDistribution::new(&shifted, &net)?;
            let blended =
                OutcomeDistribution::mixture(&[(v41, &exact), (1.0 - v41, &incoherent)])?;
            let by_pattern = multinomial(&mut rng, n_coherent, blended.probs());
            for (i, &count) in by_pattern.iter().enumerate() {
                tally.add_aggregate(
                    &mut rng,
                    count,
                    FireTally::fire_probs(blended.patterns()[i], eff, dark),
                );
            }
        }
        let n_independent = by_pairs[2] - n_coherent;
        if n_independent > 0 {
            // Joint outcome of two pairs sharing one window: outer product
            // of the single-pair table.
            let mut joint = vec![0.0f64; 100];
            for (i, &pi) in pair_probs.iter().enumerate() {
                for (j, &pj) in pair_probs.iter().enumerate() {
                    joint[i * 10 + j] = pi * pj;
                }
            }
            for (cell, &count) in multinomial(&mut rng, n_independent, &joint)
                .iter()
                .enumerate()
            {
                if count == 0 {
                    continue;
                }
                let (i, j) = (cell / 10, cell % 10);
                let mut occ = PAIR_OUTCOME_OCCUPANCY[i];
                for (slot, &extra) in occ.iter_mut().zip(&PAIR_OUTCOME_OCCUPANCY[j]) {
                    *slot += extra;
                }
                tally.add_aggregate(&mut rng, count, FireTally::fire_probs(occ, eff, dark));
            }
        }

        // Higher-order pulses are rare; sample them individually as
        // independent pairs.
        for (m, &count) in by_pairs.iter().enumerate().skip(3) {
            for _ in 0..count {
                let mut occ = [0u16; 4];
                for _ in 0..m {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = pair_probs.len() - 1;
                    for (o, &p) in pair_probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = o;
                            break;
                        }
                    }
                    for (slot, &extra) in occ.iter_mut().zip(&PAIR_OUTCOME_OCCUPANCY[pick]) {
                        *slot += extra;
                    }
                }
                tally.add_single(&mut rng, FireTally::fire_probs(occ, eff, dark));
            }
        }

        records.push(tally.into_record(phi, duration));
    }
    CountDataset::new(records)
}

/// Per-point accidental fourfold rate (per second) implied by the six
/// pairwise rates: the sum of disjoint-pairing rate products over the
/// repetition rate.
pub fn derive_accidental_dataset(ds: &CountDataset, rep_rate: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(ds.len());
    for rec in ds.records() {
        if !(rec.duration_s > 0.0) {
            return Err(Error::BadParameter {
                name: "duration_s",
                value: rec.duration_s,
                constraint: "positive",
            });
        }
        let d = rec.duration_s;
        let rates = PairRates::new(
            rec.n_ab as f64 / d,
            rec.n_cd as f64 / d,
            rec.n_ac as f64 / d,
            rec.n_bd as f64 / d,
            rec.n_ad as f64 / d,
            rec.n_cb as f64 / d,
            rep_rate,
        )?;
        out.push((rec.phase_rad, accidental_fourfold(&rates)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Sign;
    use crate::projection::{nfold_coincidence_prob, LinearForm};
    use crate::C64;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            phases: (0..8).map(|i| i as f64 * PI / 8.0).collect(),
            pulses_per_point: 1_000_000,
            rep_rate: 76e6,
            pair_prob: 0.01,
            ea_ratio: 0.49,
            v2: 0.88,
            det_efficiency: 0.8,
            dark_prob: 1e-4,
            seed: 11,
        }
    }

    #[test]
    fn single_photon_spreads_uniformly_over_the_four_detectors() {
        let dist =
            OutcomeDistribution::new(&StateVector::fock(1, 0), &DetectorNetwork::noon4()).unwrap();
        assert_eq!(dist.patterns().len(), 4);
        for det in 0..4 {
            let mut pattern = [0u16; 4];
            pattern[det] = 1;
            assert_abs_diff_eq!(dist.prob_of(pattern), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn all_distinct_pattern_reproduces_the_projective_probability() {
        let net = DetectorNetwork::noon4();
        let noon = StateVector::noon(4, Sign::Minus).unwrap();
        let dist = OutcomeDistribution::new(&noon, &net).unwrap();
        assert_eq!(dist.patterns().len(), 35);
        assert_abs_diff_eq!(
            dist.prob_of([1, 1, 1, 1]),
            nfold_coincidence_prob(&net, &noon).unwrap(),
            epsilon = 1e-12
        );

        // The symmetric quadruple at zero phase never fires all four.
        let quad = OutcomeDistribution::new(&StateVector::pdc4(), &net).unwrap();
        assert_abs_diff_eq!(quad.prob_of([1, 1, 1, 1]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pattern_probabilities_sum_to_one_even_off_the_design_photon_number() {
        let net = DetectorNetwork::noon4();
        for s in [
            StateVector::noon(4, Sign::Minus).unwrap(),
            StateVector::pdc4().apply_phase(PhaseShift::new(0.7).unwrap()),
            StateVector::noon(5, Sign::Plus).unwrap(),
            StateVector::fock(3, 2),
        ] {
            let dist = OutcomeDistribution::new(&s, &net).unwrap();
            let total: f64 = dist.probs().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sampling_tracks_the_exact_distribution() {
        let net = DetectorNetwork::noon4();
        let s = StateVector::pdc4().apply_phase(PhaseShift::new(0.9).unwrap());
        let dist = OutcomeDistribution::new(&s, &net).unwrap();
        let mut rng = point_rng(42, 0);
        let samples = 1_000_000usize;
        let mut freq = vec![0u64; dist.patterns().len()];
        for _ in 0..samples {
            let drawn = dist.sample(&mut rng);
            let idx = dist.patterns().iter().position(|p| *p == drawn).unwrap();
            freq[idx] += 1;
        }
        let tv: f64 = freq
            .iter()
            .zip(dist.probs())
            .map(|(&f, &p)| (f as f64 / samples as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 3.0 / (samples as f64).sqrt(), "tv distance {tv}");
    }

    #[test]
    fn sample_pattern_conserves_photon_number() {
        let net = DetectorNetwork::noon4();
        let s = StateVector::noon(5, Sign::Minus).unwrap();
        let mut rng = point_rng(3, 7);
        for _ in 0..200 {
            let pattern = sample_pattern(&s, &net, &mut rng).unwrap();
            assert_eq!(pattern.iter().map(|&x| x as usize).sum::<usize>(), 5);
        }
    }

    #[test]
    fn non_isometric_networks_cannot_be_sampled() {
        let forms = vec![
            LinearForm::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap(),
            LinearForm::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0)).unwrap(),
        ];
        let net = DetectorNetwork::new(forms, "two-port").unwrap();
        let s = StateVector::fock(1, 0);
        assert!(matches!(
            OutcomeDistribution::new(&s, &net),
            Err(Error::NotIsometric { .. })
        ));
    }

    #[test]
    fn identical_seeds_reproduce_identical_datasets() {
        let cfg = base_config();
        let a = simulate_counts(&cfg).unwrap();
        let b = simulate_counts(&cfg).unwrap();
        assert_eq!(a.records(), b.records());

        let mut other = cfg.clone();
        other.seed = 12;
        let c = simulate_counts(&other).unwrap();
        assert_ne!(a.records(), c.records());
    }

    #[test]
    fn fourfold_counter_never_exceeds_any_pairwise_counter() {
        let ds = simulate_counts(&base_config()).unwrap();
        for rec in ds.records() {
            for &pair in rec.pair_counts().iter() {
                assert!(rec.n_4fold <= pair);
            }
        }
    }

    #[test]
    fn ideal_source_modulates_the_fourfold_counter_with_phase() {
        // Fully coherent, lossless, dark-free: the fourfold rate must
        // vanish at phi = 0 (up to rare multi-pair pulses) and peak at
        // phi = pi/4.
        let cfg = ExperimentConfig {
            phases: vec![0.0, PI / 4.0],
            pulses_per_point: 4_000_000,
            rep_rate: 76e6,
            pair_prob: 0.01,
            ea_ratio: 1.0,
            v2: 1.0,
            det_efficiency: 1.0,
            dark_prob: 0.0,
            seed: 5,
        };
        let ds = simulate_counts(&cfg).unwrap();
        let at_zero = ds.records()[0].n_4fold;
        let at_peak = ds.records()[1].n_4fold;
        assert!(at_zero <= 3, "fourfolds at the fringe zero: {at_zero}");
        assert!(at_peak >= 8, "fourfolds at the fringe peak: {at_peak}");
        assert!(at_peak > at_zero);
    }

    #[test]
    fn independent_pairs_match_the_accidental_formula() {
        // With ea_ratio = 0 every two-pair pulse is independent, which is
        // exactly the regime the pairwise-rate product formula describes;
        // the directly tallied fourfold total must agree within Poisson
        // error.
        let cfg = ExperimentConfig {
            phases: (0..8).map(|i| i as f64 * PI / 8.0).collect(),
            pulses_per_point: 30_000_000,
            rep_rate: 76e6,
            pair_prob: 0.01,
            ea_ratio: 0.0,
            v2: 0.88,
            det_efficiency: 0.7,
            dark_prob: 0.0,
            seed: 21,
        };
        let ds = simulate_counts(&cfg).unwrap();
        let derived = derive_accidental_dataset(&ds, cfg.rep_rate).unwrap();
        let duration = cfg.duration_per_point();
        let predicted: f64 = derived.iter().map(|&(_, r)| r * duration).sum();
        let observed: f64 = ds.records().iter().map(|r| r.n_4fold as f64).sum();
        assert!(
            (observed - predicted).abs() < 4.0 * observed.max(1.0).sqrt(),
            "observed {observed}, predicted {predicted}"
        );
    }

    #[test]
    fn accidental_series_of_silence_is_zero() {
        let records = vec![CountRecord {
            phase_rad: 0.3,
            duration_s: 2.0,
            n_ab: 0,
            n_cd: 0,
            n_ac: 0,
            n_bd: 0,
            n_ad: 0,
            n_cb: 0,
            n_4fold: 0,
            s_a: 0,
            s_b: 0,
            s_c: 0,
            s_d: 0,
        }];
        let ds = CountDataset::new(records).unwrap();
        let derived = derive_accidental_dataset(&ds, 76e6).unwrap();
        assert_eq!(derived.len(), 1);
        assert_abs_diff_eq!(derived[0].1, 0.0);
    }

    #[test]
    fn datasets_reject_zero_durations_and_impossible_fourfolds() {
        let rec = CountRecord {
            phase_rad: 0.0,
            duration_s: 1.0,
            n_ab: 1,
            n_cd: 1,
            n_ac: 1,
            n_bd: 1,
            n_ad: 1,
            n_cb: 1,
            n_4fold: 0,
            s_a: 0,
            s_b: 0,
            s_c: 0,
            s_d: 0,
        };
        let mut no_time = rec;
        no_time.duration_s = 0.0;
        assert!(CountDataset::new(vec![no_time]).is_err());

        let mut impossible = rec;
        impossible.n_4fold = 2;
        assert!(matches!(
            CountDataset::new(vec![impossible]),
            Err(Error::InconsistentRates { .. })
        ));
    }

    #[test]
    fn config_validation_names_the_offending_field() {
        let mut cfg = base_config();
        cfg.phases.clear();
        assert!(matches!(cfg.validate(), Err(Error::TooFewPoints { .. })));

        let check = |mutate: fn(&mut ExperimentConfig), name: &str| {
            let mut cfg = base_config();
            mutate(&mut cfg);
            match cfg.validate() {
                Err(Error::BadParameter { name: got, .. }) => assert_eq!(got, name),
                other => panic!("expected BadParameter for {name}, got {other:?}"),
            }
        };
        check(|c| c.pulses_per_point = 0, "pulses_per_point");
        check(|c| c.pair_prob = 1.5, "pair_prob");
        check(|c| c.ea_ratio = -0.1, "ea_ratio");
        check(|c| c.v2 = f64::NAN, "v2");
        check(|c| c.det_efficiency = 0.0, "det_efficiency");
        check(|c| c.dark_prob = 1.0, "dark_prob");
        check(|c| c.rep_rate = 0.0, "rep_rate");
    }

    #[test]
    fn coherent_weight_spans_its_limits() {
        // Fully independent pairs never get replaced; a fully coherent
        // source always is.
        assert_abs_diff_eq!(coherent_weight(0.88, 0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(coherent_weight(0.88, 1.0).unwrap(), 1.0, epsilon = 1e-9);
        // Vanishing two-photon visibility falls back to the analytic limit.
        assert_relative_eq!(
            coherent_weight(0.0, 0.49).unwrap(),
            8.0 * 0.49 / (3.0 + 5.0 * 0.49),
            max_relative = 1e-12
        );
        let w = coherent_weight(0.88, 0.49).unwrap();
        assert!(w > 0.0 && w < 1.0);
    }

    #[test]
    fn mixture_weights_blend_fourfold_probabilities() {
        let net = DetectorNetwork::noon4();
        let phi = 0.6;
        let exact = OutcomeDistribution::new(
            &StateVector::pdc4().apply_phase(PhaseShift::new(phi).unwrap()),
            &net,
        )
        .unwrap();
        let flat = OutcomeDistribution::mixture(&[
            (0.375, &OutcomeDistribution::new(&StateVector::fock(4, 0), &net).unwrap()),
            (0.25, &OutcomeDistribution::new(&StateVector::fock(2, 2), &net).unwrap()),
            (0.375, &OutcomeDistribution::new(&StateVector::fock(0, 4), &net).unwrap()),
        ])
        .unwrap();
        let veff = 0.7;
        let blend = OutcomeDistribution::mixture(&[(veff, &exact), (1.0 - veff, &flat)]).unwrap();
        // The exact quadruple fringes as (9/128)(1 - cos 4 phi); the flat
        // mixture sits at 9/128; the blend interpolates linearly.
        let expected =
            veff * (9.0 / 128.0) * (1.0 - (4.0 * phi).cos()) + (1.0 - veff) * 9.0 / 128.0;
        assert_abs_diff_eq!(blend.prob_of([1, 1, 1, 1]), expected, epsilon = 1e-12);
    }

    #[test]
    fn multinomial_counts_always_total_the_draw_budget() {
        let mut rng = point_rng(9, 1);
        let probs = [0.1, 0.25, 0.3, 0.05, 0.3];
        for n in [0u64, 1, 17, 10_000] {
            let counts = multinomial(&mut rng, n, &probs);
            assert_eq!(counts.iter().sum::<u64>(), n);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn multinomial_is_exhaustive_for_random_probability_vectors(
            raw in proptest::collection::vec(1e-3..1.0f64, 2..8),
            n in 0u64..5000,
            seed in 0u64..1000,
        ) {
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let mut rng = point_rng(seed, 0);
            let counts = multinomial(&mut rng, n, &probs);
            prop_assert_eq!(counts.iter().sum::<u64>(), n);
        }

        #[test]
        fn outcome_distributions_are_normalized_for_random_states(
            res in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..7),
        ) {
            let amps: Vec<C64> = res.iter().map(|&(re, im)| C64::new(re, im)).collect();
            prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6);
            let s = StateVector::new(amps).unwrap();
            let dist = OutcomeDistribution::new(&s, &DetectorNetwork::noon4()).unwrap();
            let total: f64 = dist.probs().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
