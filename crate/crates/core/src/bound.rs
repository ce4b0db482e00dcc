//! Worst-case detection-probability bounds and the reset-cycle solver.
//!
//! Symbols: θ minor cycles since reset; c_l, c_b flow segments accumulated by
//! the overuse and the benign flow; F_l, F_b their bytes over θ; M the
//! largest segment any other flow can add in one minor cycle.

use rayon::prelude::*;
use statrs::function::beta::checked_beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{LoftError, Result};
use crate::model::FlowSpec;

/// Largest mass of Binomial(Nθ, 1/W) allowed outside the summation window.
pub const MAX_OMITTED_MASS: f64 = 1e-9;

/// Parameters of the analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    /// N.
    pub flows: u64,
    /// W.
    pub counters: u64,
    /// W_fm.
    pub monitors: u64,
    /// ω.
    pub minor_per_second: u32,
    /// Z: θ is searched in multiples of Z.
    pub minors_per_major: u32,
    pub spec: FlowSpec,
    /// ℓ.
    pub overuse_ratio: f64,
    /// Largest θ the solver tries.
    pub theta_cap: u64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.flows == 0 || self.counters == 0 || self.monitors == 0 {
            return Err(LoftError::Config("N, W and W_fm must be positive".into()));
        }
        if self.minor_per_second == 0 || self.minors_per_major == 0 {
            return Err(LoftError::Config("ω and Z must be positive".into()));
        }
        if !(self.overuse_ratio > 1.0) {
            return Err(LoftError::Config(format!(
                "overuse ratio must exceed 1, got {}",
                self.overuse_ratio
            )));
        }
        if self.theta_cap < u64::from(self.minors_per_major) {
            return Err(LoftError::Config("θ cap is below one major cycle".into()));
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        f64::from(self.minor_per_second)
    }

    /// M = γ/ω + β.
    pub fn max_segment(&self) -> f64 {
        self.spec.gamma_bytes_per_s / self.omega() + self.spec.beta_bytes
    }

    /// F_l = ℓγθ/ω.
    pub fn overuse_volume(&self, theta: u64) -> f64 {
        self.overuse_ratio * self.spec.gamma_bytes_per_s * theta as f64 / self.omega()
    }

    /// Worst-case benign volume F_b = γθ/ω + β.
    pub fn benign_volume(&self, theta: u64) -> f64 {
        self.spec.gamma_bytes_per_s * theta as f64 / self.omega() + self.spec.beta_bytes
    }
}

/// Shared numerator `θE(c_l - c_b) + c_b F_l - c_l F_b`.
#[inline]
fn v_numerator(theta: f64, e: f64, c_l: f64, c_b: f64, f_l: f64, f_b: f64) -> f64 {
    theta * e * (c_l - c_b) + c_b * f_l - c_l * f_b
}

/// (v_b, v_l) at a given E[X].
pub fn v_at(theta: f64, e: f64, c_l: f64, c_b: f64, f_l: f64, f_b: f64) -> (f64, f64) {
    let num = v_numerator(theta, e, c_l, c_b, f_l, f_b);
    (
        num / (2.0 * c_l * (c_b - theta)),
        num / (2.0 * c_b * (c_l - theta)),
    )
}

/// (min v_b, min v_l) over E[X] in [0, M]. Both are affine in E[X] with the
/// sign of `c_l - c_b`, so the minimum sits at E[X] = 0 when `c_l >= c_b` and
/// at E[X] = M otherwise. Needs `c_b > θ` and `c_l > θ`.
#[inline]
pub fn worst_case_v(theta: f64, c_l: f64, c_b: f64, f_l: f64, f_b: f64, m: f64) -> (f64, f64) {
    let e = if c_l >= c_b { 0.0 } else { m };
    v_at(theta, e, c_l, c_b, f_l, f_b)
}

/// Worst-case (P̂_b, P̂_l): upper bounds on the benign flow reaching the
/// midpoint threshold and on the overuse flow staying below it.
#[inline]
pub fn p_hat(theta: f64, c_b: f64, c_l: f64, f_b: f64, f_l: f64, m: f64) -> (f64, f64) {
    let bound = |c: f64, v: f64| {
        if c - theta < 1.0 || v < 0.0 {
            1.0
        } else {
            (-2.0 * (c - theta) * v * v / (m * m)).exp()
        }
    };
    if c_b - theta < 1.0 && c_l - theta < 1.0 {
        return (1.0, 1.0);
    }
    let (vb, vl) = worst_case_v(theta, c_l, c_b, f_l, f_b, m);
    (bound(c_b, vb), bound(c_l, vl))
}

/// Error term of Stirling's approximation:
/// `ln(n!) - ln(sqrt(2πn) (n/e)^n)`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n
            - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, accurate when x is close to np.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// ln P(Binomial(n, p) = k), by the saddle-point expansion.
pub fn ln_binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    assert!(k <= n && (0.0..=1.0).contains(&p));
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return nf * (-p).ln_1p();
    }
    if k == n {
        return nf * p.ln();
    }
    let (kf, rf) = (k as f64, (n - k) as f64);
    stirlerr(nf) - stirlerr(kf) - stirlerr(rf) - bd0(kf, nf * p) - bd0(rf, nf * q)
        + 0.5 * (nf / (2.0 * std::f64::consts::PI * kf * rf)).ln()
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.c
    }
}

/// pmf of Binomial(n, p) over the window `lo..=hi`.
#[derive(Clone, Debug)]
pub struct PmfWindow {
    pub lo: u64,
    pub pmf: Vec<f64>,
    /// Mass of `1..=n` outside the window.
    pub omitted: f64,
}

/// Window of Binomial(n, p) over mean ± max(12σ, 50), clipped to `1..=n`.
pub fn truncated_pmf(n: u64, p: f64) -> Result<PmfWindow> {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    let half = (12.0 * sd).max(50.0);
    let lo = ((mean - half).floor().max(1.0)) as u64;
    let hi = ((mean + half).ceil() as u64).min(n);
    if n == 0 || lo > hi {
        return Ok(PmfWindow {
            lo: 1,
            pmf: Vec::new(),
            omitted: 0.0,
        });
    }
    let w = full_pmf_range(n, p, lo, hi);
    let mut total = CompensatedSum::default();
    for &x in &w {
        total.add(x);
    }
    let zero = ln_binomial_pmf(0, n, p).exp();
    let omitted = ((1.0 - zero) - total.value()).max(0.0);
    if omitted > MAX_OMITTED_MASS {
        return Err(LoftError::Numeric(format!(
            "binomial window {lo}..={hi} of B({n}, {p}) misses mass {omitted:e}"
        )));
    }
    Ok(PmfWindow {
        lo,
        pmf: w,
        omitted,
    })
}

/// pmf of Binomial(n, p) at every k in `lo..=hi`.
pub fn full_pmf_range(n: u64, p: f64, lo: u64, hi: u64) -> Vec<f64> {
    (lo..=hi).map(|k| ln_binomial_pmf(k, n, p).exp()).collect()
}

/// P̂_win: lower bound on the overuse flow's estimate beating one benign
/// flow's, summed over Binomial(Nθ, 1/W) cardinalities for both flows.
pub fn p_win_lower(theta: u64, f_l: f64, f_b: f64, params: &BoundParams) -> Result<f64> {
    let trials = params
        .flows
        .checked_mul(theta)
        .ok_or_else(|| LoftError::Numeric("Nθ overflows".into()))?;
    let p = 1.0 / params.counters as f64;
    let w = truncated_pmf(trials, p)?;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    let stride = ((sd / BLOCKS_PER_SD).floor() as usize).max(1);
    let points = block_points(w.lo, &w.pmf, stride);
    Ok(p_win_over(
        theta as f64,
        f_l,
        f_b,
        params.max_segment(),
        &points,
    ))
}

/// Cardinality blocks per standard deviation once σ exceeds this many
/// integers; below that the double sum runs over every integer.
pub const BLOCKS_PER_SD: f64 = 64.0;

/// Groups consecutive pmf entries into blocks of `stride`, each reduced to
/// (mass-weighted mean cardinality, block mass).
pub fn block_points(lo: u64, pmf: &[f64], stride: usize) -> Vec<(f64, f64)> {
    pmf.chunks(stride.max(1))
        .enumerate()
        .filter_map(|(i, chunk)| {
            let first = lo + (i * stride) as u64;
            let mut mass = CompensatedSum::default();
            let mut moment = CompensatedSum::default();
            for (j, &x) in chunk.iter().enumerate() {
                mass.add(x);
                moment.add(x * (first + j as u64) as f64);
            }
            let m = mass.value();
            (m > 0.0).then(|| (moment.value() / m, m))
        })
        .collect()
}

/// The double sum over (cardinality, mass) points shared by both flows.
pub fn p_win_over(theta: f64, f_l: f64, f_b: f64, m: f64, points: &[(f64, f64)]) -> f64 {
    let rows: Vec<f64> = points
        .par_iter()
        .map(|&(c_l, pl)| {
            let mut row = CompensatedSum::default();
            for &(c_b, pb) in points {
                let (hb, hl) = p_hat(theta, c_b, c_l, f_b, f_l, m);
                let t = (1.0 - hb) * (1.0 - hl);
                if t > 0.0 {
                    row.add(t * pb);
                }
            }
            row.value() * pl
        })
        .collect();
    let mut total = CompensatedSum::default();
    for r in rows {
        total.add(r);
    }
    total.value().clamp(0.0, 1.0)
}

/// P(Binomial(n, 1 - p_win) <= monitors - 1): the overuse flow loses to
/// fewer than W_fm of the n benign flows.
pub fn p_mon_from_win(p_win: f64, n: u64, monitors: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_win) {
        return Err(LoftError::Numeric(format!(
            "probability {p_win} out of range"
        )));
    }
    if monitors > n {
        return Ok(1.0);
    }
    if p_win == 1.0 {
        return Ok(1.0);
    }
    if p_win == 0.0 {
        return Ok(0.0);
    }
    // P(X <= k) for X ~ B(n, q) equals I_{1-q}(n - k, k + 1).
    let k = monitors - 1;
    let v = checked_beta_reg((n - k) as f64, (k + 1) as f64, p_win)
        .map_err(|e| LoftError::Numeric(e.to_string()))?;
    Ok(v.clamp(0.0, 1.0))
}

/// The same tail as a direct log-space sum of the W_fm terms.
pub fn p_mon_from_win_direct(p_win: f64, n: u64, monitors: u64) -> f64 {
    let kmax = (monitors - 1).min(n);
    let terms: Vec<f64> = (0..=kmax)
        .map(|k| ln_binomial_pmf(k, n, 1.0 - p_win))
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut s = CompensatedSum::default();
    for t in terms {
        s.add((t - peak).exp());
    }
    (s.value().ln() + peak).exp().clamp(0.0, 1.0)
}

/// P_mon lower bound at θ for an overuse volume `f_l`, against worst-case
/// benign flows.
pub fn p_mon_lower(theta: u64, f_l: f64, params: &BoundParams) -> Result<f64> {
    let p_win = p_win_lower(theta, f_l, params.benign_volume(theta), params)?;
    p_mon_from_win(p_win, params.flows, params.monitors)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResetCycle {
    Achieved {
        theta: u64,
        t_reset_s: f64,
        p_mon: f64,
    },
    Unachievable {
        theta_cap: u64,
        best_p_mon: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResetSolution {
    pub outcome: ResetCycle,
    /// Every (θ, P_mon) evaluated, in evaluation order.
    pub evaluations: Vec<(u64, f64)>,
    /// Whether the evaluated points were non-decreasing in θ.
    pub monotone: bool,
}

impl ResetSolution {
    pub fn theta(&self) -> Option<u64> {
        match self.outcome {
            ResetCycle::Achieved { theta, .. } => Some(theta),
            ResetCycle::Unachievable { .. } => None,
        }
    }

    pub fn t_reset_s(&self) -> Option<f64> {
        match self.outcome {
            ResetCycle::Achieved { t_reset_s, .. } => Some(t_reset_s),
            ResetCycle::Unachievable { .. } => None,
        }
    }
}

/// Smallest θ, a multiple of Z, with P_mon(θ, ℓγθ/ω) >= `target`: doubling
/// search followed by bisection.
pub fn solve_reset_cycle(target: f64, params: &BoundParams) -> Result<ResetSolution> {
    params.validate()?;
    if !(target > 0.0 && target < 1.0) {
        return Err(LoftError::Config(format!(
            "target probability must lie in (0, 1), got {target}"
        )));
    }
    let z = u64::from(params.minors_per_major);
    let max_k = params.theta_cap / z;
    let mut evaluations = Vec::new();
    let mut eval = |k: u64| -> Result<f64> {
        let theta = k * z;
        let p = p_mon_lower(theta, params.overuse_volume(theta), params)?;
        evaluations.push((theta, p));
        Ok(p)
    };
    let mut lo = 0u64;
    let mut hi = 1u64;
    let mut p_hi = eval(hi)?;
    let mut best = p_hi;
    while p_hi < target {
        if hi == max_k {
            let monotone = is_monotone(&evaluations);
            return Ok(ResetSolution {
                outcome: ResetCycle::Unachievable {
                    theta_cap: params.theta_cap,
                    best_p_mon: best,
                },
                evaluations,
                monotone,
            });
        }
        lo = hi;
        hi = (hi * 2).min(max_k);
        p_hi = eval(hi)?;
        best = best.max(p_hi);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let p = eval(mid)?;
        if p >= target {
            hi = mid;
            p_hi = p;
        } else {
            lo = mid;
        }
    }
    let theta = hi * z;
    let monotone = is_monotone(&evaluations);
    Ok(ResetSolution {
        outcome: ResetCycle::Achieved {
            theta,
            t_reset_s: theta as f64 / f64::from(params.minor_per_second),
            p_mon: p_hi,
        },
        evaluations,
        monotone,
    })
}

fn is_monotone(evals: &[(u64, f64)]) -> bool {
    let mut sorted = evals.to_vec();
    sorted.sort_by_key(|e| e.0);
    sorted.windows(2).all(|w| w[1].1 >= w[0].1)
}
