//! Time-domain evolution of the walk with an absorbing site at `j = M`.
//!
//! The walker starts at `j = 0` and moves one site per step, so at step `t`
//! only sites `j` with `j = t (mod 2)` and `-t <= j < M` carry amplitude.
//! [`AmplitudeField`] stores exactly those sites, indexed by
//! `n = (j + t) / 2`. In that frame a left move keeps `n` and a right move
//! increments it, which turns one step into an in-place coin application
//! followed by a one-slot shift of the `R` column.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::bloch::{initial_amplitudes, BlochState, CoinMatrix, ComplexAmplitudePair};
use crate::error::{Error, Result};

/// Number of steps used when the caller does not choose one.
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Fraction of the run used by [`SurvivalTrace::certify`] as tail window.
pub const TAIL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkConfig {
    rho: f64,
    boundary_m: u32,
    max_steps: usize,
}

impl WalkConfig {
    pub fn new(rho: f64, boundary_m: u32, max_steps: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::domain(format!("coin bias rho={rho} outside [0, 1]")));
        }
        if boundary_m < 1 {
            return Err(Error::domain("absorbing site must satisfy M >= 1"));
        }
        if max_steps < 1 {
            return Err(Error::domain("max_steps must be at least 1"));
        }
        Ok(Self {
            rho,
            boundary_m,
            max_steps,
        })
    }

    /// Unbiased Hadamard coin with the default step count.
    pub fn hadamard(boundary_m: u32) -> Result<Self> {
        Self::new(0.5, boundary_m, DEFAULT_MAX_STEPS)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn boundary_m(&self) -> u32 {
        self.boundary_m
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// Leftmost lattice site of the simulation window.
    pub fn left_edge(&self) -> i64 {
        -(self.max_steps as i64) - 1
    }
}

/// Site probability below which the trailing edge is treated as empty.
const FLUSH_PROB: f64 = 1e-300;

/// Highest compact index that can hold amplitude at step `t`.
fn top_index(t: usize, boundary_m: u32) -> usize {
    t.min((boundary_m as usize + t - 1) / 2)
}

/// Live `(L, R)` amplitudes of the walker plus the absorbed probability.
#[derive(Debug, Clone)]
pub struct AmplitudeField {
    l: Vec<Complex64>,
    r: Vec<Complex64>,
    boundary_m: u32,
    capacity: usize,
    step_index: usize,
    absorbed_cumulative: f64,
    /// Every compact index below this holds exact zeros.
    lo: usize,
}

impl AmplitudeField {
    /// Field holding `state` at `j = 0`, sized for `capacity` steps.
    pub fn new(state: &BlochState, boundary_m: u32, capacity: usize) -> Result<Self> {
        let mut field = Self::zero(boundary_m, capacity)?;
        let amp = initial_amplitudes(state);
        field.l[0] = amp.l;
        field.r[0] = amp.r;
        Ok(field)
    }

    pub fn zero(boundary_m: u32, capacity: usize) -> Result<Self> {
        if boundary_m < 1 {
            return Err(Error::domain("absorbing site must satisfy M >= 1"));
        }
        let len = top_index(capacity, boundary_m) + 2;
        Ok(Self {
            l: vec![Complex64::new(0.0, 0.0); len],
            r: vec![Complex64::new(0.0, 0.0); len],
            boundary_m,
            capacity,
            step_index: 0,
            absorbed_cumulative: 0.0,
            lo: 0,
        })
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn boundary_m(&self) -> u32 {
        self.boundary_m
    }

    pub fn absorbed_cumulative(&self) -> f64 {
        self.absorbed_cumulative
    }

    /// Amplitudes at lattice site `j` for the current step.
    pub fn get(&self, j: i64) -> ComplexAmplitudePair {
        let t = self.step_index as i64;
        let zero = ComplexAmplitudePair::default();
        if j >= self.boundary_m as i64 || j < -t || (j + t).rem_euclid(2) != 0 {
            return zero;
        }
        let n = ((j + t) / 2) as usize;
        match (self.l.get(n), self.r.get(n)) {
            (Some(&l), Some(&r)) => ComplexAmplitudePair::new(l, r),
            _ => zero,
        }
    }

    /// Occupied sites `(j, amplitudes)` in increasing `j`.
    pub fn sites(&self) -> impl Iterator<Item = (i64, ComplexAmplitudePair)> + '_ {
        let t = self.step_index as i64;
        let top = top_index(self.step_index, self.boundary_m);
        (0..=top).map(move |n| {
            (
                2 * n as i64 - t,
                ComplexAmplitudePair::new(self.l[n], self.r[n]),
            )
        })
    }

    /// `sum_j |L(j)|^2 + |R(j)|^2` over the live lattice.
    pub fn surviving_norm(&self) -> f64 {
        self.l
            .iter()
            .zip(&self.r)
            .map(|(l, r)| l.norm_sqr() + r.norm_sqr())
            .sum()
    }

    /// Applies coin and conditional shift once, removing whatever lands on
    /// `j = M`. Returns the probability absorbed during this step.
    pub fn step(&mut self, coin: &CoinMatrix) -> Result<f64> {
        if self.step_index >= self.capacity {
            return Err(Error::LatticeOverflow {
                step: self.step_index,
                capacity: self.capacity,
            });
        }
        let (a, b) = (coin.diag(), coin.off_diag());
        let t = self.step_index;
        let top = top_index(t, self.boundary_m);
        let lo = self.lo.min(top);

        for (l, r) in self.l[lo..=top].iter_mut().zip(&mut self.r[lo..=top]) {
            let (l0, r0) = (*l, *r);
            *l = l0 * a + r0 * b;
            *r = l0 * b - r0 * a;
        }
        self.r.copy_within(lo..=top, lo + 1);
        self.r[lo] = Complex64::new(0.0, 0.0);
        self.flush_leading(top);

        // The slot past the old top either is a new live site or is the barrier.
        let next = top + 1;
        let j_next = 2 * next as i64 - (t as i64 + 1);
        let mut absorbed = 0.0;
        if j_next == self.boundary_m as i64 {
            absorbed = self.r[next].norm_sqr();
            self.r[next] = Complex64::new(0.0, 0.0);
            self.l[next] = Complex64::new(0.0, 0.0);
        }
        self.absorbed_cumulative += absorbed;
        self.step_index += 1;
        Ok(absorbed)
    }
}

impl AmplitudeField {
    /// Zeroes the exponentially small tail behind the left light-cone front.
    ///
    /// Amplitude only flows toward higher compact index, so a zero prefix
    /// stays zero and later steps can skip it. Without this the tail decays
    /// into subnormal floats, which are an order of magnitude slower.
    fn flush_leading(&mut self, top: usize) {
        while self.lo < top {
            let n = self.lo;
            if self.l[n].norm_sqr() + self.r[n].norm_sqr() >= FLUSH_PROB {
                break;
            }
            self.l[n] = Complex64::new(0.0, 0.0);
            self.r[n] = Complex64::new(0.0, 0.0);
            self.lo += 1;
        }
    }
}

/// Per-step record of probability flux into the absorbing site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalTrace {
    pub absorbed_per_step: Vec<f64>,
    pub absorbed_cumulative_final: f64,
    pub escape_estimate: f64,
    pub steps_run: usize,
}

impl SurvivalTrace {
    fn from_steps(absorbed_per_step: Vec<f64>, absorbed_cumulative_final: f64) -> Self {
        Self {
            steps_run: absorbed_per_step.len(),
            absorbed_per_step,
            absorbed_cumulative_final,
            escape_estimate: 1.0 - absorbed_cumulative_final,
        }
    }

    /// Running totals of absorbed probability, one per step.
    pub fn cumulative(&self) -> Vec<f64> {
        self.absorbed_per_step
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// Absorbed mass over the final `window` steps (clamped to the run).
    pub fn tail_residual(&self, window: usize) -> f64 {
        tail_residual(self, window)
    }

    /// Tail residual over the last [`TAIL_FRACTION`] of the run.
    pub fn certify(&self) -> f64 {
        let window = ((self.steps_run as f64 * TAIL_FRACTION).ceil() as usize).max(1);
        self.tail_residual(window)
    }

    /// Writes `t,absorbed_step,absorbed_cum,survival`, one row per step.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,absorbed_step,absorbed_cum,survival")?;
        for (i, (step, cum)) in self
            .absorbed_per_step
            .iter()
            .zip(self.cumulative())
            .enumerate()
        {
            writeln!(
                out,
                "{},{:.12e},{:.12e},{:.12e}",
                i + 1,
                step,
                cum,
                1.0 - cum
            )?;
        }
        Ok(())
    }
}

pub fn tail_residual(trace: &SurvivalTrace, window: usize) -> f64 {
    let window = window.min(trace.steps_run);
    if window == trace.steps_run {
        return trace.absorbed_per_step.iter().sum();
    }
    trace.absorbed_per_step[trace.steps_run - window..].iter().sum()
}

/// Runs the quantum walk for `config.max_steps()` steps from `state` at `j = 0`.
pub fn run(config: &WalkConfig, state: &BlochState) -> Result<SurvivalTrace> {
    let coin = crate::bloch::coin_matrix(config.rho)?;
    let mut field = AmplitudeField::new(state, config.boundary_m, config.max_steps)?;
    let mut per_step = Vec::with_capacity(config.max_steps);
    for _ in 0..config.max_steps {
        per_step.push(field.step(&coin)?);
    }
    Ok(SurvivalTrace::from_steps(per_step, field.absorbed_cumulative()))
}

/// Classical random walk with hop-right probability `p_right`, absorbed at `j = M`.
pub fn simulate_classical(p_right: f64, boundary_m: u32, max_steps: usize) -> Result<SurvivalTrace> {
    if !(0.0..=1.0).contains(&p_right) {
        return Err(Error::domain(format!("p_right={p_right} outside [0, 1]")));
    }
    if boundary_m < 1 {
        return Err(Error::domain("absorbing site must satisfy M >= 1"));
    }
    let q = 1.0 - p_right;
    // Same compact indexing as the quantum field.
    let mut occ = vec![0.0_f64; top_index(max_steps, boundary_m) + 2];
    occ[0] = 1.0;
    let mut per_step = Vec::with_capacity(max_steps);
    let mut total = 0.0;
    for t in 0..max_steps {
        let top = top_index(t, boundary_m);
        let next = top + 1;
        // new[n] = q old[n] + p old[n-1], computed right to left in place
        occ[next] = p_right * occ[top];
        for n in (1..=top).rev() {
            occ[n] = q * occ[n] + p_right * occ[n - 1];
        }
        occ[0] *= q;
        let j_next = 2 * next as i64 - (t as i64 + 1);
        let mut absorbed = 0.0;
        if j_next == boundary_m as i64 {
            absorbed = occ[next];
            occ[next] = 0.0;
        }
        total += absorbed;
        per_step.push(absorbed);
    }
    Ok(SurvivalTrace::from_steps(per_step, total))
}
