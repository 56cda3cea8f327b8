//! Binomial absorption data, joint maximum-likelihood estimation of the coin
//! angles, Cramér-Rao bounds and a Monte Carlo harness that compares the two.
//!
//! Absorption data depend on `beta` only through `cos(beta)`, so `beta` and
//! `2pi - beta` are indistinguishable: estimation works on `[0, pi]^2` and
//! every report carries both mirror partners.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::fisher::fisher_total;
use crate::grid::golden_max;
use crate::par;
use crate::spectral::{xi_table, Boundary, EscapeCoefficients};

/// Coarse grid nodes per axis.
pub const DEFAULT_GRID_RESOLUTION: usize = 41;
/// Largest coordinate step accepted as converged.
pub const DEFAULT_REFINE_TOL: f64 = 1e-8;
/// Fewest replicates accepted by [`monte_carlo`].
pub const MIN_REPLICATES: usize = 100;
/// Name of the generator recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha20, stream = replicate * 2^16 + placement index";

const MAX_PLACEMENTS: usize = 1 << 16;
const MAX_PASSES: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentDesign {
    pub placements: Vec<Boundary>,
    pub trials_per_placement: u64,
    pub seed: u64,
}

impl ExperimentDesign {
    pub fn new(placements: Vec<Boundary>, trials_per_placement: u64, seed: u64) -> Result<Self> {
        let design = Self {
            placements,
            trials_per_placement,
            seed,
        };
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        if self.placements.is_empty() {
            return Err(Error::domain("experiment design needs at least one placement"));
        }
        if self.placements.len() > MAX_PLACEMENTS {
            return Err(Error::domain(format!("at most {MAX_PLACEMENTS} placements are supported")));
        }
        if self.trials_per_placement == 0 {
            return Err(Error::domain("trials per placement must be at least 1"));
        }
        for &m in &self.placements {
            xi_table(m)?;
        }
        Ok(())
    }
}

/// Escapes observed at one placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlacementCount {
    pub m: Boundary,
    pub escapes: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountRecord {
    pub counts: Vec<PlacementCount>,
}

impl CountRecord {
    pub fn new(counts: Vec<PlacementCount>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("count record needs at least one placement"));
        }
        for c in &counts {
            if c.trials == 0 || c.escapes > c.trials {
                return Err(Error::domain(format!(
                    "invalid count {} of {} at M={}",
                    c.escapes, c.trials, c.m
                )));
            }
            xi_table(c.m)?;
        }
        Ok(Self { counts })
    }
}

fn stream_rng(seed: u64, replicate: u64, placement: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((replicate << 16) | placement as u64);
    rng
}

fn sample_replicate(state: &BlochState, design: &ExperimentDesign, replicate: u64) -> Result<CountRecord> {
    design.validate()?;
    let mut counts = Vec::with_capacity(design.placements.len());
    for (idx, &m) in design.placements.iter().enumerate() {
        let p = xi_table(m)?.escape_prob(state).clamp(0.0, 1.0);
        let dist = Binomial::new(design.trials_per_placement, p)
            .map_err(|e| Error::Estimation(format!("binomial parameter p={p}: {e}")))?;
        let escapes = dist.sample(&mut stream_rng(design.seed, replicate, idx));
        counts.push(PlacementCount {
            m,
            escapes,
            trials: design.trials_per_placement,
        });
    }
    Ok(CountRecord { counts })
}

/// Draws `k ~ Binomial(N, P_E(state; M))` per placement. Each placement has
/// its own ChaCha stream, so the record is a pure function of the seed.
pub fn sample_counts(state: &BlochState, design: &ExperimentDesign) -> Result<CountRecord> {
    sample_replicate(state, design, 0)
}

fn ln_term(k: u64, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        k as f64 * p.ln()
    }
}

/// Log-likelihood at raw angles, with resolved coefficient tables.
fn log_likelihood_at(tables: &[(EscapeCoefficients, u64, u64)], alpha: f64, beta: f64) -> f64 {
    tables
        .iter()
        .map(|(c, k, n)| {
            let p = c.escape_prob_at(alpha, beta).clamp(0.0, 1.0);
            ln_term(*k, p) + ln_term(n - k, 1.0 - p)
        })
        .sum()
}

fn tables(counts: &CountRecord) -> Result<Vec<(EscapeCoefficients, u64, u64)>> {
    counts
        .counts
        .iter()
        .map(|c| Ok((xi_table(c.m)?, c.escapes, c.trials)))
        .collect()
}

/// `sum_l k_l ln P_E(M_l) + (N - k_l) ln(1 - P_E(M_l))`, with `0 ln 0 = 0`.
pub fn log_likelihood(counts: &CountRecord, state: &BlochState) -> Result<f64> {
    Ok(log_likelihood_at(&tables(counts)?, state.alpha(), state.beta()))
}

/// Conditions noticed while estimating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EstimationFlags {
    /// Fisher information at the estimate has rank below two; only the
    /// gradient direction is identified.
    pub rank_deficient: bool,
    /// Some count is `0` or `N`, or the maximizer lies on the edge of
    /// `[0, pi]^2`.
    pub boundary_solution: bool,
    /// No information about either angle at the relevant state.
    pub degenerate: bool,
}

impl EstimationFlags {
    fn merge(self, other: EstimationFlags) -> EstimationFlags {
        EstimationFlags {
            rank_deficient: self.rank_deficient || other.rank_deficient,
            boundary_solution: self.boundary_solution || other.boundary_solution,
            degenerate: self.degenerate || other.degenerate,
        }
    }
}

/// Output of [`mle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MleEstimate {
    pub mle_primary: BlochState,
    pub mle_mirror: BlochState,
    pub log_likelihood_at_max: f64,
    pub flags: EstimationFlags,
}

fn information_flags(state: &BlochState, placements: &[Boundary]) -> Result<(bool, bool)> {
    let total = fisher_total(state, placements)?;
    let degenerate = total.matrix.norm() == 0.0;
    Ok((total.matrix.is_rank_deficient(), degenerate))
}

/// Joint maximum-likelihood estimate over `alpha in [0, pi]`, `beta in [0, pi]`.
///
/// A `grid_resolution x grid_resolution` node grid locates the basin; then
/// coordinate-wise golden-section passes, each followed by a line search
/// along the pass displacement, run until no coordinate moves by more than
/// `refine_tol`.
pub fn mle(counts: &CountRecord, grid_resolution: usize, refine_tol: f64) -> Result<MleEstimate> {
    if grid_resolution < 2 {
        return Err(Error::domain("MLE grid needs at least 2 nodes per axis"));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::domain("refine tolerance must be positive"));
    }
    let tabs = tables(counts)?;
    if tabs.is_empty() {
        return Err(Error::Estimation("no placements in count record".into()));
    }
    let ll = |a: f64, b: f64| log_likelihood_at(&tabs, a, b);
    let h = PI / (grid_resolution - 1) as f64;

    let (mut best, mut best_val, mut worst_val) = ((0.0, 0.0), f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..grid_resolution {
        for j in 0..grid_resolution {
            let (a, b) = (i as f64 * h, j as f64 * h);
            let v = ll(a, b);
            if v > best_val {
                best = (a, b);
                best_val = v;
            }
            worst_val = worst_val.min(v);
        }
    }
    if best_val == f64::NEG_INFINITY {
        return Err(Error::Estimation("likelihood is zero everywhere on the grid".into()));
    }
    if best_val == worst_val {
        return Err(Error::Estimation("likelihood is flat; the data carry no information".into()));
    }

    let line_tol = refine_tol / 4.0;
    let (mut a, mut b) = best;
    for _ in 0..MAX_PASSES {
        let (a0, b0) = (a, b);
        let (na, fa) = golden_max(|x| ll(x, b), (a - h).max(0.0), (a + h).min(PI), line_tol);
        if fa >= ll(a, b) {
            a = na;
        }
        let (nb, fb) = golden_max(|y| ll(a, y), (b - h).max(0.0), (b + h).min(PI), line_tol);
        if fb >= ll(a, b) {
            b = nb;
        }
        let (da, db) = (a - a0, b - b0);
        let moved = da.abs().max(db.abs());
        if moved < refine_tol {
            break;
        }
        // extrapolate along the pass displacement to follow curved ridges
        let t_max = [(da, a0), (db, b0)]
            .iter()
            .map(|&(d, x0)| {
                if d > 0.0 {
                    (PI - x0) / d
                } else if d < 0.0 {
                    -x0 / d
                } else {
                    f64::INFINITY
                }
            })
            .fold(8.0f64, f64::min);
        if t_max > 1.0 {
            let (t, ft) = golden_max(|t| ll(a0 + t * da, b0 + t * db), 1.0, t_max, line_tol / moved);
            if ft > ll(a, b) {
                a = (a0 + t * da).clamp(0.0, PI);
                b = (b0 + t * db).clamp(0.0, PI);
            }
        }
    }

    let primary = BlochState::new(a, b)?;
    let placements: Vec<Boundary> = counts.counts.iter().map(|c| c.m).collect();
    let (rank_deficient, degenerate) = information_flags(&primary, &placements)?;
    let edge = 2.0 * refine_tol;
    let boundary_solution = counts.counts.iter().any(|c| c.escapes == 0 || c.escapes == c.trials)
        || a <= edge
        || a >= PI - edge
        || b <= edge
        || b >= PI - edge;
    Ok(MleEstimate {
        mle_primary: primary,
        mle_mirror: primary.mirror(),
        log_likelihood_at_max: ll(a, b),
        flags: EstimationFlags {
            rank_deficient,
            boundary_solution,
            degenerate,
        },
    })
}

/// Per-parameter bounds `1 / (N F_theta,theta)`; `None` where the diagonal
/// information vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarBounds {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// Cramér-Rao lower bound on the covariance of unbiased estimators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CramerRao {
    /// `[N F_tot]^{-1}`, present only when `F_tot` has full rank.
    pub covariance: Option<[[f64; 2]; 2]>,
    pub scalar: ScalarBounds,
    /// Numerical rank of `F_tot` (0, 1 or 2).
    pub rank: u8,
}

impl CramerRao {
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < 2
    }
}

/// Bound for `N = trials_per_placement` trials at every placement.
pub fn crb(state: &BlochState, design: &ExperimentDesign) -> Result<CramerRao> {
    design.validate()?;
    let total = fisher_total(state, &design.placements)?;
    let info = total.matrix.scaled(design.trials_per_placement as f64);
    let rank = if info.norm() == 0.0 {
        0
    } else if info.is_rank_deficient() {
        1
    } else {
        2
    };
    let inv = |f: f64| if f > 0.0 { Some(1.0 / f) } else { None };
    Ok(CramerRao {
        covariance: if rank == 2 { info.inverse() } else { None },
        scalar: ScalarBounds {
            alpha: inv(info.f_aa),
            beta: inv(info.f_bb),
        },
        rank,
    })
}

/// Result of an estimation run, single-shot or Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    /// Single shot: the maximizer. Monte Carlo: mean of the folded estimates.
    pub mle_primary: BlochState,
    pub mle_mirror: BlochState,
    /// Single shot: value at the maximizer. Monte Carlo: replicate mean.
    pub log_likelihood_at_max: f64,
    /// `None` when the design's information matrix is singular.
    pub crb_covariance: Option<[[f64; 2]; 2]>,
    pub crb_scalar: ScalarBounds,
    /// Sample covariance of the folded estimates (Monte Carlo only).
    pub empirical_covariance: Option<[[f64; 2]; 2]>,
    pub n_replicates: usize,
    pub flags: EstimationFlags,
    pub rng: &'static str,
    pub seed: u64,
}

fn report_from(
    primary: BlochState,
    ll: f64,
    bound: &CramerRao,
    empirical: Option<[[f64; 2]; 2]>,
    replicates: usize,
    flags: EstimationFlags,
    seed: u64,
) -> EstimationReport {
    let flags = flags.merge(EstimationFlags {
        rank_deficient: bound.is_rank_deficient(),
        boundary_solution: false,
        degenerate: bound.rank == 0,
    });
    EstimationReport {
        mle_primary: primary,
        mle_mirror: primary.mirror(),
        log_likelihood_at_max: ll,
        crb_covariance: bound.covariance,
        crb_scalar: bound.scalar,
        empirical_covariance: empirical,
        n_replicates: replicates,
        flags,
        rng: RNG_ALGORITHM,
        seed,
    }
}

/// One sample-and-estimate cycle with the bound at the true state.
pub fn estimate_once(true_state: &BlochState, design: &ExperimentDesign) -> Result<EstimationReport> {
    let counts = sample_counts(true_state, design)?;
    let est = mle(&counts, DEFAULT_GRID_RESOLUTION, DEFAULT_REFINE_TOL)?;
    let bound = crb(true_state, design)?;
    Ok(report_from(
        est.mle_primary,
        est.log_likelihood_at_max,
        &bound,
        None,
        1,
        est.flags,
        design.seed,
    ))
}

/// Unbiased sample covariance of `(alpha, beta)` pairs.
pub fn sample_covariance(points: &[(f64, f64)]) -> Option<[[f64; 2]; 2]> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let ma = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mb = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in points {
        saa += (a - ma) * (a - ma);
        sab += (a - ma) * (b - mb);
        sbb += (b - mb) * (b - mb);
    }
    let d = nf - 1.0;
    Some([[saa / d, sab / d], [sab / d, sbb / d]])
}

/// `R` independent sample-and-estimate cycles. Replicate `r` draws from the
/// streams keyed by `(seed, r)`, so the report does not depend on how the
/// replicates are scheduled.
pub fn monte_carlo(true_state: &BlochState, design: &ExperimentDesign, replicates: usize) -> Result<EstimationReport> {
    if replicates < MIN_REPLICATES {
        return Err(Error::domain(format!(
            "Monte Carlo needs at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    design.validate()?;
    let estimates = par::map_range(replicates, |r| {
        let counts = sample_replicate(true_state, design, r as u64)?;
        mle(&counts, DEFAULT_GRID_RESOLUTION, DEFAULT_REFINE_TOL)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let folded: Vec<(f64, f64)> = estimates
        .iter()
        .map(|e| {
            let s = e.mle_primary.folded();
            (s.alpha(), s.beta())
        })
        .collect();
    let rf = replicates as f64;
    let mean_a = folded.iter().map(|p| p.0).sum::<f64>() / rf;
    let mean_b = folded.iter().map(|p| p.1).sum::<f64>() / rf;
    let mean_ll = estimates.iter().map(|e| e.log_likelihood_at_max).sum::<f64>() / rf;
    let flags = estimates
        .iter()
        .fold(EstimationFlags::default(), |acc, e| acc.merge(e.flags));
    let bound = crb(true_state, design)?;
    Ok(report_from(
        BlochState::new(mean_a, mean_b)?,
        mean_ll,
        &bound,
        sample_covariance(&folded),
        replicates,
        flags,
        design.seed,
    ))
}

/// Measurement-setting counts for mode-resolved tomography versus absorption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TomographyComparison {
    pub modes: u64,
    pub settings_tomo: u64,
    pub settings_abs: u64,
    pub ratio: f64,
}

/// A `T`-step walk occupies `K = 2T + 1` sites, each needing three Pauli
/// settings; absorption needs one setting per placement.
pub fn tomography_comparison(walk_steps: u64, placements_used: u64) -> Result<TomographyComparison> {
    if walk_steps == 0 || placements_used == 0 {
        return Err(Error::domain("walk steps and placements must both be at least 1"));
    }
    let modes = 2 * walk_steps + 1;
    let settings_tomo = 3 * modes;
    Ok(TomographyComparison {
        modes,
        settings_tomo,
        settings_abs: placements_used,
        ratio: settings_tomo as f64 / placements_used as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    fn design(ms: &[u32], n: u64, seed: u64) -> ExperimentDesign {
        ExperimentDesign::new(ms.iter().map(|&m| Boundary::Finite(m)).collect(), n, seed).unwrap()
    }

    #[test]
    fn design_validation() {
        assert!(ExperimentDesign::new(vec![], 10, 0).is_err());
        assert!(ExperimentDesign::new(vec![Boundary::Finite(1)], 0, 0).is_err());
        assert!(ExperimentDesign::new(vec![Boundary::Finite(7)], 5, 0).is_err());
        assert!(ExperimentDesign::new(vec![Boundary::Infinite], 5, 0).is_ok());
    }

    #[test]
    fn zero_probability_never_escapes() {
        let s = BlochState::new(FRAC_PI_2, PI).unwrap();
        for seed in 0..5 {
            let c = sample_counts(&s, &design(&[1], 100_000, seed)).unwrap();
            assert_eq!(c.counts[0].escapes, 0);
        }
    }

    #[test]
    fn frequency_concentrates() {
        let n = 1_000_000;
        let c = sample_counts(&BlochState::left(), &design(&[1], n, 11)).unwrap();
        let p = 1.0 - 2.0 / PI;
        let freq = c.counts[0].escapes as f64 / n as f64;
        assert!((freq - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = BlochState::new(1.0, 2.0).unwrap();
        let d = design(&[1, 2, 3], 5000, 42);
        assert_eq!(sample_counts(&s, &d).unwrap(), sample_counts(&s, &d).unwrap());
        let other = sample_counts(&s, &design(&[1, 2, 3], 5000, 43)).unwrap();
        assert_ne!(sample_counts(&s, &d).unwrap(), other);
    }

    #[test]
    fn placement_streams_are_independent_of_order() {
        let s = BlochState::new(1.0, 2.0).unwrap();
        let a = sample_counts(&s, &design(&[2, 2], 10_000, 3)).unwrap();
        // same placement twice draws from two streams
        assert_ne!(a.counts[0].escapes, a.counts[1].escapes);
    }

    #[test]
    fn impossible_data_has_zero_likelihood() {
        let counts = CountRecord::new(vec![PlacementCount {
            m: Boundary::Finite(1),
            escapes: 3,
            trials: 10,
        }])
        .unwrap();
        let s = BlochState::new(FRAC_PI_2, PI).unwrap();
        assert_eq!(log_likelihood(&counts, &s).unwrap(), f64::NEG_INFINITY);
        let ok = CountRecord::new(vec![PlacementCount {
            m: Boundary::Finite(1),
            escapes: 0,
            trials: 10,
        }])
        .unwrap();
        assert_eq!(log_likelihood(&ok, &s).unwrap(), 0.0);
    }

    #[test]
    fn empirical_frequency_is_stationary_along_gradient() {
        let m = Boundary::Finite(2);
        let c = xi_table(m).unwrap();
        let n = 1000u64;
        // find a state whose P_E is exactly k/N along alpha at fixed beta
        let k = 700u64;
        let target = k as f64 / n as f64;
        let beta = 0.8;
        let (mut lo, mut hi) = (0.0, PI);
        let p0 = c.escape_prob_at(lo, beta);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (c.escape_prob_at(mid, beta) - target) * (p0 - target) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let alpha = 0.5 * (lo + hi);
        let counts = CountRecord::new(vec![PlacementCount { m, escapes: k, trials: n }]).unwrap();
        let s = BlochState::new(alpha, beta).unwrap();
        let (ga, gb) = c.gradient(&s);
        let norm = (ga * ga + gb * gb).sqrt();
        let (ua, ub) = (ga / norm, gb / norm);
        let e = 1e-5;
        let at = |t: f64| log_likelihood(&counts, &BlochState::new(alpha + t * ua, beta + t * ub).unwrap()).unwrap();
        let slope = (at(e) - at(-e)) / (2.0 * e);
        assert!(slope.abs() < 1e-4, "slope {slope}");
    }

    #[test]
    fn mirror_states_have_equal_likelihood() {
        let s = BlochState::new(1.2, 0.7).unwrap();
        let counts = sample_counts(&s, &design(&[1, 2, 5], 1000, 9)).unwrap();
        for &(a, b) in &[(0.3, 0.2), (2.0, 1.0), (1.0, 3.0)] {
            let p = BlochState::new(a, b).unwrap();
            let l1 = log_likelihood(&counts, &p).unwrap();
            let l2 = log_likelihood(&counts, &p.mirror()).unwrap();
            assert!((l1 - l2).abs() <= 1e-9 * l1.abs());
        }
    }

    #[test]
    fn mle_is_consistent_at_large_n() {
        let truth = BlochState::new(FRAC_PI_4, FRAC_PI_3).unwrap();
        let counts = sample_counts(&truth, &design(&[1, 2], 1_000_000, 2026)).unwrap();
        let est = mle(&counts, DEFAULT_GRID_RESOLUTION, DEFAULT_REFINE_TOL).unwrap();
        assert!((est.mle_primary.alpha() - FRAC_PI_4).abs() < 0.01, "{est:?}");
        assert!((est.mle_primary.beta() - FRAC_PI_3).abs() < 0.01, "{est:?}");
        assert!((est.mle_mirror.beta() - (2.0 * PI - est.mle_primary.beta())).abs() < 1e-12);
        assert!(!est.flags.rank_deficient);
        assert!(!est.flags.boundary_solution);
    }

    #[test]
    fn single_placement_is_rank_deficient() {
        let truth = BlochState::new(1.0, 1.0).unwrap();
        let counts = sample_counts(&truth, &design(&[1], 10_000, 5)).unwrap();
        let est = mle(&counts, DEFAULT_GRID_RESOLUTION, DEFAULT_REFINE_TOL).unwrap();
        assert!(est.flags.rank_deficient);
        // the maximizer reproduces the observed frequency
        let c = xi_table(Boundary::Finite(1)).unwrap();
        let freq = counts.counts[0].escapes as f64 / 10_000.0;
        assert!((c.escape_prob(&est.mle_primary) - freq).abs() < 1e-6);
    }

    #[test]
    fn all_escapes_hits_the_maximum() {
        let counts = CountRecord::new(vec![PlacementCount {
            m: Boundary::Finite(1),
            escapes: 500,
            trials: 500,
        }])
        .unwrap();
        let est = mle(&counts, DEFAULT_GRID_RESOLUTION, DEFAULT_REFINE_TOL).unwrap();
        assert!(est.flags.boundary_solution);
        let p = xi_table(Boundary::Finite(1)).unwrap().escape_prob(&est.mle_primary);
        assert!((p - 2.0 * (1.0 - 2.0 / PI)).abs() < 1e-9);
    }

    #[test]
    fn mle_rejects_bad_arguments() {
        let counts = sample_counts(&BlochState::left(), &design(&[1], 10, 0)).unwrap();
        assert!(mle(&counts, 1, 1e-6).is_err());
        assert!(mle(&counts, 11, 0.0).is_err());
    }

    #[test]
    fn crb_matrix_and_scalar_cases() {
        let s = BlochState::new(FRAC_PI_4, FRAC_PI_3).unwrap();
        let two = crb(&s, &design(&[1, 2], 1000, 0)).unwrap();
        let cov = two.covariance.unwrap();
        assert_eq!(two.rank, 2);
        assert!(cov[0][0] > 0.0 && cov[1][1] > 0.0);
        assert!(cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0] > 0.0);

        let one = crb(&s, &design(&[1], 1000, 0)).unwrap();
        assert!(one.covariance.is_none());
        assert_eq!(one.rank, 1);
        assert!(one.scalar.alpha.is_some() && one.scalar.beta.is_some());

        let doubled = crb(&s, &design(&[1, 2], 2000, 0)).unwrap().covariance.unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((doubled[i][j] - cov[i][j] / 2.0).abs() <= 1e-12 * cov[i][j].abs());
            }
        }

        let dead = crb(&BlochState::new(FRAC_PI_2, PI).unwrap(), &design(&[1], 10, 0)).unwrap();
        assert_eq!(dead.rank, 0);
        assert_eq!(dead.scalar, ScalarBounds { alpha: None, beta: None });
    }

    #[test]
    fn monte_carlo_is_deterministic_and_flags_degeneracy() {
        let s = BlochState::new(FRAC_PI_2, FRAC_PI_2).unwrap();
        let d = design(&[1, 2], 2000, 7);
        let a = monte_carlo(&s, &d, 100).unwrap();
        let b = monte_carlo(&s, &d, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(monte_carlo(&s, &d, 99).is_err());

        let dead = monte_carlo(&BlochState::new(FRAC_PI_2, PI).unwrap(), &design(&[1], 1000, 1), 100).unwrap();
        assert!(dead.flags.degenerate);
        assert!(dead.crb_covariance.is_none());
    }

    #[test]
    fn single_shot_matches_replicate_zero() {
        let s = BlochState::new(1.0, 1.0).unwrap();
        let d = design(&[1, 2], 500, 3);
        assert_eq!(sample_counts(&s, &d).unwrap(), sample_replicate(&s, &d, 0).unwrap());
        let r = estimate_once(&s, &d).unwrap();
        assert_eq!(r.n_replicates, 1);
        assert!(r.empirical_covariance.is_none());
    }

    #[test]
    fn covariance_of_known_points() {
        let cov = sample_covariance(&[(0.0, 0.0), (2.0, 2.0), (4.0, 1.0)]).unwrap();
        assert_eq!(cov[0][0], 4.0);
        assert_eq!(cov[0][1], 1.0);
        assert!((cov[1][1] - 1.0).abs() < 1e-15);
        assert!(sample_covariance(&[(1.0, 1.0)]).is_none());
    }

    #[test]
    fn tomography_counts() {
        let t = tomography_comparison(50, 2).unwrap();
        assert_eq!((t.modes, t.settings_tomo, t.settings_abs, t.ratio), (101, 303, 2, 151.5));
        let t = tomography_comparison(1, 1).unwrap();
        assert_eq!((t.modes, t.settings_tomo, t.settings_abs), (3, 9, 1));
        let r1 = tomography_comparison(10, 3).unwrap().ratio;
        let r2 = tomography_comparison(20, 3).unwrap().ratio;
        let r3 = tomography_comparison(30, 3).unwrap().ratio;
        assert!(((r3 - r2) - (r2 - r1)).abs() < 1e-12);
        assert!(tomography_comparison(0, 1).is_err());
        assert!(tomography_comparison(1, 0).is_err());
    }
}
