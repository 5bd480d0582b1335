//! Design-parameter selection for MCPM: the concentration split `alpha` by
//! minimizing a convex union-bound cost for a hypothetical ISI-free link,
//! and the threshold `gamma` by crossing worst-case conditional Gaussian
//! densities; plus exhaustive grid-search baselines over simulated or
//! analytic error rates.
//!
//! The cost treats the winning slot's count as Gaussian with mean equal to
//! variance and bounds the symbol error by `2K` pairwise Q-terms: two for
//! the threshold test against the high/low levels and, per competing bin,
//! two for position confusions at either level. Within the validated
//! regime (`alpha` in (0.5,1), threshold between the level means, dominant
//! first tap, level gap above 3 counts) the cost is convex in the threshold
//! for fixed split and, at the per-split optimal threshold, convex in the
//! split — so golden-section search is exact. Outside the regime the
//! closed form is not extrapolated; a dense 2-D grid takes over and the
//! result is marked accordingly.

use crate::analysis::{win_probability_profile, ConditionalContext};
use crate::channel::{simulate_arrivals, ChannelCoefficients};
use crate::detection::window_argmax;
use crate::modulation::{modulate, McpmSymbol, Scheme, SchemeConfig};
use crate::numerics::{golden_section_min, q_function, KahanSum};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Golden-section tolerance on the concentration split.
const ALPHA_TOL: f64 = 1e-4;
/// Search bracket clearance from the open interval's ends.
const ALPHA_MARGIN: f64 = 1e-3;

/// Inputs of the ISI-free union-bound cost: total molecules per symbol at
/// the mean level and the first `K` channel coefficients.
#[derive(Debug, Clone)]
pub struct CostContext {
    /// `B = 2 M (1 + log2 K)`, the symbol budget at the mean level.
    pub b: f64,
    /// `h_1..h_K`: the current symbol window's own-tap coefficients.
    pub h_bins: Vec<f64>,
}

impl CostContext {
    pub fn new(b: f64, h_bins: Vec<f64>) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::invalid("symbol budget must be positive and finite"));
        }
        if h_bins.is_empty() {
            return Err(Error::invalid("need at least the first channel coefficient"));
        }
        let h1 = h_bins[0];
        if !(h1 > 0.0) {
            return Err(Error::invalid("first channel coefficient must be positive"));
        }
        for &hi in &h_bins[1..] {
            if !(hi > 0.0 && hi < h1) {
                return Err(Error::invalid(
                    "first channel coefficient must strictly dominate the others",
                ));
            }
        }
        Ok(Self { b, h_bins })
    }

    /// Cost inputs for a scheme over a computed channel: `B` from the
    /// scheme's per-bit budget and the first `K` taps.
    pub fn from_scheme(cfg: &SchemeConfig, h: &ChannelCoefficients) -> Result<Self> {
        if cfg.scheme != Scheme::Mcpm {
            return Err(Error::invalid("design cost applies to MCPM"));
        }
        if h.len() < cfg.k {
            return Err(Error::invalid(format!(
                "need at least K = {} channel taps, have {}",
                cfg.k,
                h.len()
            )));
        }
        Self::new(
            2.0 * cfg.m_per_bit * cfg.bits_per_symbol() as f64,
            h.taps()[..cfg.k].to_vec(),
        )
    }

    fn h1(&self) -> f64 {
        self.h_bins[0]
    }

    /// Threshold validity interval for a given split: the two level means.
    fn gamma_interval(&self, alpha_u: f64) -> (f64, f64) {
        (self.b * (1.0 - alpha_u) * self.h1(), self.b * alpha_u * self.h1())
    }

    /// Smallest split satisfying the level-gap condition
    /// `B h1 (2 alpha - 1) > 3`.
    fn alpha_gap_floor(&self) -> f64 {
        0.5 + 1.5 / (self.b * self.h1())
    }
}

fn check_alpha(alpha_u: f64) -> Result<()> {
    if !(alpha_u > 0.5 && alpha_u < 1.0) {
        return Err(Error::domain("split must lie in the open interval (0.5, 1)"));
    }
    Ok(())
}

/// The ISI-free union-bound cost: `2K` Q-terms covering the threshold test
/// at both levels and position confusion against each competing bin at
/// both levels.
pub fn cost_c(alpha_u: f64, gamma_u: f64, ctx: &CostContext) -> Result<f64> {
    check_alpha(alpha_u)?;
    let (g_lo, g_hi) = ctx.gamma_interval(alpha_u);
    if !(gamma_u > g_lo && gamma_u < g_hi) {
        return Err(Error::domain(format!(
            "threshold {gamma_u} outside the meaningful interval ({g_lo}, {g_hi})"
        )));
    }
    let b = ctx.b;
    let h1 = ctx.h1();
    let mu_hi = b * alpha_u * h1;
    let mu_lo = b * (1.0 - alpha_u) * h1;
    let mut c = q_function((mu_hi - gamma_u) / mu_hi.sqrt())
        + q_function((gamma_u - mu_lo) / mu_lo.sqrt());
    for &hi in &ctx.h_bins[1..] {
        let d = h1 - hi;
        let s = h1 + hi;
        c += q_function(b * alpha_u * d / (b * alpha_u * s).sqrt());
        c += q_function(b * (1.0 - alpha_u) * d / (b * (1.0 - alpha_u) * s).sqrt());
    }
    Ok(c)
}

/// Closed-form threshold minimizing [`cost_c`] for a fixed split: the
/// vanishing point of the cost's threshold derivative, equivalently the
/// crossing of the two level-mean Gaussian densities. Errs when the value
/// falls outside the meaningful interval (the regime is then invalid for
/// the closed-form path).
pub fn gamma_star_u(alpha_u: f64, ctx: &CostContext) -> Result<f64> {
    check_alpha(alpha_u)?;
    let b = ctx.b;
    let h1 = ctx.h1();
    let num = b * h1 + ((1.0 - alpha_u) / alpha_u).ln() - 2.0 * b * alpha_u * h1;
    let den = 1.0 / (b * alpha_u * (1.0 - alpha_u) * h1) - 2.0 / (b * (1.0 - alpha_u) * h1);
    let radicand = num / den;
    if !(radicand > 0.0) {
        return Err(Error::Numerical(format!(
            "no closed-form threshold at split {alpha_u}: radicand {radicand} not positive"
        )));
    }
    let gamma = radicand.sqrt();
    let (g_lo, g_hi) = ctx.gamma_interval(alpha_u);
    if !(gamma > g_lo && gamma < g_hi) {
        return Err(Error::Numerical(format!(
            "closed-form threshold {gamma} left the interval ({g_lo}, {g_hi})"
        )));
    }
    Ok(gamma)
}

/// Result of the split optimization.
#[derive(Debug, Clone, Copy)]
pub struct AlphaOpt {
    pub alpha: f64,
    /// Cost at the optimum (with the per-split optimal threshold).
    pub cost: f64,
    /// Whether the convex closed-form path produced the value; `false`
    /// means the dense-grid fallback ran because the validated regime's
    /// conditions failed somewhere on the bracket.
    pub theoretical: bool,
}

/// Minimize the split: golden-section search on
/// `alpha -> cost_c(alpha, gamma_star_u(alpha))` over the regime where the
/// closed form is valid (convexity makes the search exact). If the regime
/// conditions fail at the bracket ends or midpoint, fall back to a dense
/// 2-D grid over (split, threshold) and mark the result non-theoretical.
pub fn optimize_alpha(ctx: &CostContext) -> Result<AlphaOpt> {
    let lo = (0.5 + ALPHA_MARGIN).max(ctx.alpha_gap_floor() + 1e-6);
    let hi = 1.0 - ALPHA_MARGIN;
    let valid = lo < hi
        && [lo, 0.5 * (lo + hi), hi].iter().all(|&a| {
            gamma_star_u(a, ctx)
                .and_then(|g| cost_c(a, g, ctx))
                .is_ok()
        });
    if valid {
        let (alpha, cost) = golden_section_min(
            |a| {
                // Convexity holds on the bracket; isolated evaluation
                // failures (cannot happen once the ends and midpoint are
                // valid) would surface as an infinite cost.
                gamma_star_u(a, ctx)
                    .and_then(|g| cost_c(a, g, ctx))
                    .unwrap_or(f64::INFINITY)
            },
            lo,
            hi,
            ALPHA_TOL,
        );
        if cost.is_finite() {
            return Ok(AlphaOpt { alpha, cost, theoretical: true });
        }
    }
    // Dense-grid fallback for regimes the theory does not cover.
    let mut best = AlphaOpt { alpha: f64::NAN, cost: f64::INFINITY, theoretical: false };
    for ai in 0..250 {
        let a = 0.501 + ai as f64 * 0.002;
        if a >= 1.0 {
            break;
        }
        let (g_lo, g_hi) = ctx.gamma_interval(a);
        for gi in 0..100 {
            let g = g_lo + (gi as f64 + 0.5) / 100.0 * (g_hi - g_lo);
            let c = cost_c(a, g, ctx)?;
            if c < best.cost {
                best = AlphaOpt { alpha: a, cost: c, theoretical: false };
            }
        }
    }
    if best.alpha.is_nan() {
        return Err(Error::Numerical("no valid design point on the fallback grid".into()));
    }
    Ok(best)
}

/// Worst-case conditional mean of the winning slot's count for bin `i`
/// (1-based) at level bit `j`: own pulse at the given level plus the
/// extremal ISI pattern — every past symbol at the opposite level, placed
/// on the bins whose taps land in slot `i`.
pub fn worst_case_means(
    i: usize,
    j: u8,
    alpha_star: f64,
    b: f64,
    h: &ChannelCoefficients,
    k: usize,
    ls: usize,
) -> Result<f64> {
    if i < 1 || i > k {
        return Err(Error::invalid(format!("bin {i} outside 1..={k}")));
    }
    if j > 1 {
        return Err(Error::invalid("level bit must be 0 or 1"));
    }
    if ls == 0 {
        return Err(Error::invalid("memory must be at least one symbol"));
    }
    check_alpha(alpha_star)?;
    if !(b > 0.0) {
        return Err(Error::invalid("symbol budget must be positive"));
    }
    let taps = h.taps();
    let tap = |n_one_based: usize| -> Result<f64> {
        taps.get(n_one_based - 1).copied().ok_or_else(|| {
            Error::domain(format!(
                "worst-case mean needs tap {n_one_based}, have {}",
                taps.len()
            ))
        })
    };
    let own = if j == 1 { b * alpha_star } else { b * (1.0 - alpha_star) };
    let isi_level = if j == 1 { b * (1.0 - alpha_star) } else { b * alpha_star };
    let mut mu = own * tap(1)?;
    for c in 1..ls {
        let n = if j == 1 { c * k + i } else { (c - 1) * k + i + 1 };
        mu += isi_level * tap(n)?;
    }
    Ok(mu)
}

/// Unique positive crossing of the Gaussian densities `N(mu1, mu1)` and
/// `N(mu0, mu0)`. Their log-density difference has no linear term — it is
/// `(mu1-mu0)/(2 mu0 mu1) x^2 - [(mu1-mu0) + ln(mu1/mu0)]/2`, even in `x`
/// and monotone in `x^2` — so the positive quadratic root is the single
/// point where one density overtakes the other. It always exceeds the
/// geometric mean of the two means, and can exceed the larger mean itself
/// when the means sit within about one count of each other. Swapping the
/// arguments flips the sign of both the numerator and the denominator of
/// the radicand, so the crossing does not depend on argument order; only
/// equal means (identical densities, no crossing) are rejected.
pub fn gamma_crossing(mu1: f64, mu0: f64) -> Result<f64> {
    if !(mu1 > 0.0 && mu0 > 0.0) {
        return Err(Error::domain("crossing needs positive means"));
    }
    if mu1 == mu0 {
        return Err(Error::domain("equal means have no density crossing"));
    }
    Ok((mu0 * mu1 * (mu1 - mu0 + (mu1 / mu0).ln()) / (mu1 - mu0)).sqrt())
}

/// Threshold selection for a designed split: per bin, cross the worst-case
/// high/low conditional densities; average the crossings over bins and
/// floor to the nearest half-integer below, so integer counts never land
/// exactly on the threshold. Under heavy ISI a bin's worst-case high mean
/// can drop below its low mean; the crossing formula is order-symmetric,
/// so the bin still contributes the point where its two extremal densities
/// exchange dominance.
pub fn select_gamma(
    alpha_star: f64,
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
) -> Result<f64> {
    if cfg.scheme != Scheme::Mcpm {
        return Err(Error::invalid("threshold selection applies to MCPM"));
    }
    let b = 2.0 * cfg.m_per_bit * cfg.bits_per_symbol() as f64;
    let mut acc = KahanSum::new();
    for i in 1..=cfg.k {
        let mu1 = worst_case_means(i, 1, alpha_star, b, h, cfg.k, ls)?;
        let mu0 = worst_case_means(i, 0, alpha_star, b, h, cfg.k, ls)?;
        acc.add(gamma_crossing(mu1, mu0)?);
    }
    Ok((acc.value() / cfg.k as f64).floor() + 0.5)
}

/// How a design point was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMethod {
    /// Convex closed-form path (split search + worst-case crossing).
    Theoretical,
    /// Dense cost-grid fallback for regimes the theory does not validate.
    CostGrid,
    /// Exhaustive grid search over evaluated error rates.
    Exhaustive,
}

impl DesignMethod {
    pub fn token(&self) -> &'static str {
        match self {
            DesignMethod::Theoretical => "theoretical",
            DesignMethod::CostGrid => "cost-grid",
            DesignMethod::Exhaustive => "exhaustive",
        }
    }
}

/// A designed `(alpha, gamma)` pair.
#[derive(Debug, Clone, Copy)]
pub struct DesignPoint {
    pub alpha: f64,
    pub gamma: f64,
    pub method: DesignMethod,
    /// Error rate the exhaustive evaluator measured, when one ran.
    pub predicted_ber: Option<f64>,
}

/// Full theoretical design: optimized split, then worst-case threshold.
pub fn theoretical_design(
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
) -> Result<DesignPoint> {
    let ctx = CostContext::from_scheme(cfg, h)?;
    let opt = optimize_alpha(&ctx)?;
    let gamma = select_gamma(opt.alpha, cfg, h, ls)?;
    Ok(DesignPoint {
        alpha: opt.alpha,
        gamma,
        method: if opt.theoretical { DesignMethod::Theoretical } else { DesignMethod::CostGrid },
        predicted_ber: None,
    })
}

/// Error-rate evaluator behind the exhaustive design search.
#[derive(Debug, Clone, Copy)]
pub enum DesignEvaluator {
    /// Conditional-sequence analysis (deterministic, approximate).
    Analytic,
    /// Seeded simulation; every split reuses the same symbol stream, and
    /// one pass serves the whole threshold grid.
    MonteCarlo { seed: u64, symbols: u64 },
}

/// Grid search over splits (step 0.01) and half-integer thresholds,
/// returning the pair with the lowest evaluated error rate (first minimum
/// wins, so the result is deterministic).
pub fn exhaustive_design_search(
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
    evaluator: &DesignEvaluator,
) -> Result<DesignPoint> {
    if cfg.scheme != Scheme::Mcpm {
        return Err(Error::invalid("design search applies to MCPM"));
    }
    if h.len() < cfg.k * ls {
        return Err(Error::invalid(format!(
            "need at least K*Ls = {} channel taps, have {}",
            cfg.k * ls,
            h.len()
        )));
    }
    // Threshold grid: half-integers up to the largest level mean plus slack.
    let b = 2.0 * cfg.m_per_bit * cfg.bits_per_symbol() as f64;
    let mu_cap = b * 0.99 * h.taps()[0];
    let n_cuts = ((mu_cap + 4.0 * mu_cap.sqrt()).ceil() as usize).max(2);
    let cuts: Vec<f64> = (0..n_cuts).map(|i| i as f64 + 0.5).collect();

    let mut best: Option<DesignPoint> = None;
    for ai in 1..50 {
        let alpha = 0.5 + ai as f64 * 0.01;
        let cfg_a = cfg.with_alpha(alpha)?;
        let bers = match evaluator {
            DesignEvaluator::Analytic => analytic_threshold_sweep(&cfg_a, h, ls, &cuts)?,
            DesignEvaluator::MonteCarlo { seed, symbols } => {
                simulated_threshold_sweep(&cfg_a, h, ls, &cuts, *seed, *symbols)?
            }
        };
        for (g, &ber) in cuts.iter().zip(&bers) {
            if best.map_or(true, |bp| ber < bp.predicted_ber.unwrap()) {
                best = Some(DesignPoint {
                    alpha,
                    gamma: *g,
                    method: DesignMethod::Exhaustive,
                    predicted_ber: Some(ber),
                });
            }
        }
    }
    best.ok_or_else(|| Error::Numerical("empty design grid".into()))
}

/// Analytic error rate at every threshold in one pass per context: the
/// win-probability profiles make each threshold an O(K) update.
fn analytic_threshold_sweep(
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
    cuts: &[f64],
) -> Result<Vec<f64>> {
    let a = cfg.alphabet_size();
    let n_contexts = (a as u128).checked_pow(ls as u32).filter(|&n| n <= 1_000_000).ok_or_else(
        || Error::Guard(format!("context enumeration {a}^{ls} exceeds 1000000")),
    )? as f64;
    let bits = cfg.bits_per_symbol() as f64;
    let mut err = vec![KahanSum::new(); cuts.len()];
    let mut idx = vec![0usize; ls];
    loop {
        let seq: Result<Vec<McpmSymbol>> =
            idx.iter().map(|&i| McpmSymbol::from_index(i, cfg)).collect();
        let ctx = ConditionalContext::new(seq?, cfg, h)?;
        let true_idx = ctx.true_symbol().index(cfg);
        for bin in 1..=cfg.k {
            let w1 = f64::from((true_idx ^ (2 * (bin - 1) + 1)).count_ones()) / bits;
            let w0 = f64::from((true_idx ^ (2 * (bin - 1))).count_ones()) / bits;
            let (total, above) = win_probability_profile(&ctx, bin, cuts)?;
            for (e, &ab) in err.iter_mut().zip(&above) {
                e.add(w0 * total + (w1 - w0) * ab);
            }
        }
        let mut pos = ls;
        loop {
            if pos == 0 {
                return Ok(err.iter().map(|e| e.value() / n_contexts).collect());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < a {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Simulated error rate at every threshold from one run: record each
/// symbol's winning bin and count, then classify under all thresholds.
fn simulated_threshold_sweep(
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
    cuts: &[f64],
    seed: u64,
    symbols: u64,
) -> Result<Vec<f64>> {
    if symbols == 0 {
        return Err(Error::invalid("simulation needs at least one symbol"));
    }
    let a = cfg.alphabet_size();
    // The symbol stream comes from its own generator so every split sees
    // the same data (common random numbers across the grid).
    let mut sym_rng = ChaCha12Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha12Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    let total = ls as u64 + symbols;
    let seq: Vec<McpmSymbol> = (0..total)
        .map(|_| McpmSymbol::from_index(sym_rng.gen_range(0..a), cfg))
        .collect::<Result<_>>()?;
    let em = modulate(&seq, cfg)?;
    let trace = simulate_arrivals(&em.counts, h, &mut noise_rng);

    // Winning bin and count per counted symbol, aggregated by outcome.
    let mut hist: std::collections::HashMap<(usize, usize, u64), u64> =
        std::collections::HashMap::new();
    for s in ls as usize..total as usize {
        let window = &trace.counts[s * cfg.k..(s + 1) * cfg.k];
        let (bin0, count) = window_argmax(window);
        let true_idx = seq[s].index(cfg);
        *hist.entry((true_idx, bin0, count)).or_insert(0) += 1;
    }
    let bits = cfg.bits_per_symbol() as f64;
    let total_bits = symbols as f64 * bits;
    let mut bers = vec![0.0; cuts.len()];
    for (g, ber) in cuts.iter().zip(bers.iter_mut()) {
        let mut errs = 0.0;
        for (&(true_idx, bin0, count), &n) in &hist {
            let det = 2 * bin0 + usize::from(count as f64 > *g);
            errs += n as f64 * (true_idx ^ det).count_ones() as f64;
        }
        *ber = errs / total_bits;
    }
    Ok(bers)
}

/// Pick the BCSK slot threshold by seeded simulation: run a random bit
/// stream through the channel and take the half-integer minimizing the
/// error count (first minimum wins).
pub fn calibrate_bcsk_threshold(
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    seed: u64,
    symbols: u64,
) -> Result<f64> {
    if cfg.scheme != Scheme::Bcsk {
        return Err(Error::invalid("slot-threshold calibration applies to BCSK"));
    }
    if symbols == 0 {
        return Err(Error::invalid("calibration needs at least one symbol"));
    }
    let warmup = h.len() as u64;
    let mut sym_rng = ChaCha12Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha12Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    let total = warmup + symbols;
    let seq: Vec<McpmSymbol> = (0..total)
        .map(|_| McpmSymbol::from_index(sym_rng.gen_range(0..2), cfg))
        .collect::<Result<_>>()?;
    let em = modulate(&seq, cfg)?;
    let trace = simulate_arrivals(&em.counts, h, &mut noise_rng);

    let mut max_count = 0u64;
    let mut outcomes: Vec<(u8, u64)> = Vec::with_capacity(symbols as usize);
    for s in warmup as usize..total as usize {
        let count = trace.counts[s];
        max_count = max_count.max(count);
        outcomes.push((seq[s].csk_bit, count));
    }
    let mut best_gamma = 0.5;
    let mut best_errs = u64::MAX;
    for gi in 0..=max_count {
        let gamma = gi as f64 + 0.5;
        let errs = outcomes
            .iter()
            .filter(|&&(bit, count)| u8::from(count as f64 > gamma) != bit)
            .count() as u64;
        if errs < best_errs {
            best_errs = errs;
            best_gamma = gamma;
        }
    }
    Ok(best_gamma)
}
