//! Seed-reproducible Monte Carlo link simulation: BER experiments over one
//! or more schemes sharing a molecule and time budget, and sweeps over the
//! budget `M`, the bit interval `tb`, or the reception offset `tau`.
//!
//! Work is cut into fixed-size frames of symbols, each prefixed with a
//! warm-up block that is modulated and transmitted but excluded from error
//! counting, so counted symbols see the conditioning ISI of a running
//! stream rather than a cold start. Every frame draws its symbol and noise
//! randomness from generators seeded by a counter-based derivation of
//! (master seed, scheme, frame, purpose); totals are sums of per-frame
//! integer counts, so serial and parallel execution produce identical
//! results, and adding a scheme to an experiment never changes another
//! scheme's numbers. The stopping rule runs whole batches of frames until
//! both the bit budget and the error-event floor are met, bounded by a
//! hard bit cap for configurations whose error rate is effectively zero.

use crate::channel::{
    channel_coefficients, simulate_arrivals, ChannelCoefficients, ChannelParams, SlotGrid,
};
use crate::detection::{detect, Detector};
use crate::modulation::{modulate, McpmSymbol, Scheme, SchemeConfig};
use crate::numerics::splitmix64;
use crate::optimizer::{
    calibrate_bcsk_threshold, exhaustive_design_search, theoretical_design, DesignEvaluator,
};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const Z_95: f64 = 1.959963984540054;
/// Counted symbols per frame.
const FRAME_SYMBOLS: usize = 256;
/// Frames between stopping-rule checks; totals are batch sums, so this
/// also fixes the granularity at which runs can stop.
const FRAMES_PER_BATCH: u64 = 16;
/// Symbols behind the seeded BCSK threshold calibration.
const CALIBRATION_SYMBOLS: u64 = 20_000;

/// How the channel truncation horizon follows the bit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TotalPolicy {
    /// Horizon = multiplier x `tb`; tracks the symbol clock across sweeps.
    MultipleOfTb(f64),
    /// Fixed horizon in seconds.
    Seconds(f64),
}

impl TotalPolicy {
    pub fn t_total(&self, tb_s: f64) -> f64 {
        match *self {
            TotalPolicy::MultipleOfTb(mult) => mult * tb_s,
            TotalPolicy::Seconds(s) => s,
        }
    }
}

/// Detector used for MCPM schemes; baselines always use their natural
/// detectors (per-slot threshold for BCSK, window argmax for PPM).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McpmDetector {
    Mlsd,
    Tpcd,
}

/// How `(alpha, gamma)` are chosen for MCPM schemes before a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignPolicy {
    /// Convex cost optimization plus worst-case threshold crossing.
    Theoretical,
    /// Seeded grid search over simulated error rates.
    Exhaustive { symbols: u64 },
    /// Take the values as given: `alpha` falls back to the scheme's own,
    /// `gamma` must be present when a threshold detector needs it. BCSK
    /// uses `gamma` too when set, otherwise calibrates.
    Fixed { alpha: Option<f64>, gamma: Option<f64> },
}

/// A reproducible BER measurement over one or more schemes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub schemes: Vec<SchemeConfig>,
    pub channel: ChannelParams,
    /// Reception offset applied to every counting window, s.
    pub tau_s: f64,
    pub total: TotalPolicy,
    pub mcpm_detector: McpmDetector,
    /// Conditioning memory, symbols: MLSD trellis depth, TPCD design
    /// depth, and the warm-up length.
    pub ls: usize,
    pub design: DesignPolicy,
    /// Counted bits to accumulate before the run may stop.
    pub bit_budget: u64,
    /// Bit-error events to accumulate before the run may stop.
    pub min_error_events: u64,
    /// Unconditional stop: counted bits never exceed this by more than
    /// one batch.
    pub hard_cap_bits: u64,
    pub seed: u64,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::invalid("experiment needs at least one scheme"));
        }
        let (m, tb) = (self.schemes[0].m_per_bit, self.schemes[0].tb_s);
        for cfg in &self.schemes {
            if cfg.m_per_bit != m || cfg.tb_s != tb {
                return Err(Error::invalid(
                    "all compared schemes must share the molecule and time budget",
                ));
            }
        }
        if !(self.tau_s.is_finite() && self.tau_s >= 0.0) {
            return Err(Error::invalid("reception offset must be nonnegative"));
        }
        if self.ls == 0 {
            return Err(Error::invalid("conditioning memory must be at least one symbol"));
        }
        if self.bit_budget == 0 {
            return Err(Error::invalid("bit budget must be positive"));
        }
        if self.hard_cap_bits < self.bit_budget {
            return Err(Error::invalid("hard bit cap cannot undercut the bit budget"));
        }
        Ok(())
    }

    /// Slot grid and channel coefficients for one scheme under this
    /// experiment's channel, offset, and horizon policy.
    pub fn scheme_channel(&self, cfg: &SchemeConfig) -> Result<(SlotGrid, ChannelCoefficients)> {
        let grid = SlotGrid::new(cfg.slot_s(), self.total.t_total(cfg.tb_s), self.tau_s)?;
        let h = channel_coefficients(&self.channel, &grid)?;
        Ok((grid, h))
    }
}

/// BER point estimate with a 95% Wilson interval half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ci95: f64,
}

impl BerEstimate {
    pub fn from_counts(bit_errors: u64, bits: u64) -> Result<Self> {
        if bits == 0 {
            return Err(Error::invalid("an estimate needs at least one bit"));
        }
        let (lo, hi) = wilson_interval(bit_errors, bits);
        Ok(Self {
            ber: bit_errors as f64 / bits as f64,
            bit_errors,
            bits,
            ci95: 0.5 * (hi - lo),
        })
    }
}

/// 95% Wilson score interval for a binomial proportion. The interval is
/// centered on the score midpoint, not the raw proportion, so it stays
/// inside [0, 1] and keeps coverage at small counts.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let hw = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - hw).max(0.0), (center + hw).min(1.0))
}

/// One scheme's outcome within an experiment.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    /// Effective configuration (the designed split substituted for MCPM).
    pub cfg: SchemeConfig,
    pub detector: Detector,
    /// Designed split, for the result table; `None` off MCPM.
    pub alpha: Option<f64>,
    /// Threshold in use, when the detector has one.
    pub gamma: Option<f64>,
    pub estimate: BerEstimate,
    /// Molecules emitted by counted symbols.
    pub emissions: u64,
    /// Emission audit: counted molecules per counted bit.
    pub emissions_per_bit: f64,
}

/// Counter-based stream derivation: collision-resistant mixing of the
/// master seed with the scheme identity, frame index, and purpose tag, so
/// any frame can be regenerated independently of execution order.
fn derive_seed(master: u64, scheme_tag: u64, frame: u64, purpose: u64) -> u64 {
    let s = splitmix64(master);
    let s = splitmix64(s ^ scheme_tag);
    splitmix64(s ^ (frame << 2 | purpose))
}

fn scheme_tag(cfg: &SchemeConfig) -> u64 {
    let kind = match cfg.scheme {
        Scheme::Bcsk => 0u64,
        Scheme::Ppm => 1,
        Scheme::Mcpm => 2,
    };
    kind << 4 | cfg.k as u64
}

/// Resolve the effective configuration, detector, and recorded design
/// parameters for one scheme under the experiment's policies.
fn resolve_design(
    exp: &Experiment,
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
) -> Result<(SchemeConfig, Detector, Option<f64>, Option<f64>)> {
    match cfg.scheme {
        Scheme::Ppm => Ok((*cfg, Detector::PpmArgmax, None, None)),
        Scheme::Bcsk => {
            let gamma = match exp.design {
                DesignPolicy::Fixed { gamma: Some(g), .. } => g,
                _ => calibrate_bcsk_threshold(
                    cfg,
                    h,
                    derive_seed(exp.seed, scheme_tag(cfg), 0, 3),
                    CALIBRATION_SYMBOLS,
                )?,
            };
            Ok((*cfg, Detector::BcskThreshold { gamma }, None, Some(gamma)))
        }
        Scheme::Mcpm => {
            let (alpha, gamma) = match exp.design {
                DesignPolicy::Theoretical => {
                    let d = theoretical_design(cfg, h, exp.ls)?;
                    (d.alpha, Some(d.gamma))
                }
                DesignPolicy::Exhaustive { symbols } => {
                    let ev = DesignEvaluator::MonteCarlo {
                        seed: derive_seed(exp.seed, scheme_tag(cfg), 0, 2),
                        symbols,
                    };
                    let d = exhaustive_design_search(cfg, h, exp.ls, &ev)?;
                    (d.alpha, Some(d.gamma))
                }
                DesignPolicy::Fixed { alpha, gamma } => (
                    alpha.or(cfg.alpha).ok_or_else(|| {
                        Error::invalid("fixed design needs a split for MCPM")
                    })?,
                    gamma,
                ),
            };
            let eff = cfg.with_alpha(alpha)?;
            let det = match exp.mcpm_detector {
                McpmDetector::Mlsd => Detector::Mlsd { ls: exp.ls },
                McpmDetector::Tpcd => Detector::Tpcd {
                    gamma: gamma.ok_or_else(|| {
                        Error::invalid("the two-phase detector needs a threshold")
                    })?,
                },
            };
            Ok((eff, det, Some(alpha), gamma))
        }
    }
}

/// Simulate one frame: warm-up plus counted symbols through modulation,
/// channel, and detection. Returns (bit errors, counted bits, counted
/// emissions).
fn run_frame(
    exp: &Experiment,
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    det: &Detector,
    frame: u64,
) -> Result<(u64, u64, u64)> {
    let tag = scheme_tag(cfg);
    let mut sym_rng = ChaCha12Rng::seed_from_u64(derive_seed(exp.seed, tag, frame, 0));
    let mut noise_rng = ChaCha12Rng::seed_from_u64(derive_seed(exp.seed, tag, frame, 1));
    let a = cfg.alphabet_size();
    let total = exp.ls + FRAME_SYMBOLS;
    let symbols: Vec<McpmSymbol> = (0..total)
        .map(|_| McpmSymbol::from_index(sym_rng.gen_range(0..a), cfg))
        .collect::<Result<_>>()?;
    let emissions = modulate(&symbols, cfg)?;
    let trace = simulate_arrivals(&emissions.counts, h, &mut noise_rng);
    let detected = detect(&trace.counts, cfg, h, det)?;

    let mut bit_errors = 0u64;
    let mut molecules = 0u64;
    for s in exp.ls..total {
        bit_errors += u64::from(
            ((symbols[s].index(cfg) ^ detected[s].index(cfg)) as u32).count_ones(),
        );
        molecules += cfg.emission_count(symbols[s]);
    }
    let bits = (FRAME_SYMBOLS * cfg.bits_per_symbol()) as u64;
    Ok((bit_errors, bits, molecules))
}

fn run_scheme(exp: &Experiment, cfg: &SchemeConfig) -> Result<SchemeRun> {
    let (_grid, h) = exp.scheme_channel(cfg)?;
    let (eff, det, alpha, gamma) = resolve_design(exp, cfg, &h)?;
    let mut bits = 0u64;
    let mut bit_errors = 0u64;
    let mut emissions = 0u64;
    let mut next_frame = 0u64;
    loop {
        let batch: Vec<(u64, u64, u64)> = (next_frame..next_frame + FRAMES_PER_BATCH)
            .into_par_iter()
            .map(|f| run_frame(exp, &eff, &h, &det, f))
            .collect::<Result<_>>()?;
        for (e, b, m) in batch {
            bit_errors += e;
            bits += b;
            emissions += m;
        }
        next_frame += FRAMES_PER_BATCH;
        let satisfied = bits >= exp.bit_budget && bit_errors >= exp.min_error_events;
        if satisfied || bits >= exp.hard_cap_bits {
            break;
        }
    }
    Ok(SchemeRun {
        cfg: eff,
        detector: det,
        alpha,
        gamma,
        estimate: BerEstimate::from_counts(bit_errors, bits)?,
        emissions,
        emissions_per_bit: emissions as f64 / bits as f64,
    })
}

/// Run every scheme in the experiment to its stopping point.
pub fn run_ber(exp: &Experiment) -> Result<Vec<SchemeRun>> {
    exp.validate()?;
    exp.schemes.iter().map(|cfg| run_scheme(exp, cfg)).collect()
}

/// Swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Molecule budget per bit.
    M,
    /// Bit interval, s.
    Tb,
    /// Reception offset, s.
    Tau,
}

impl SweepAxis {
    pub fn token(&self) -> &'static str {
        match self {
            SweepAxis::M => "m",
            SweepAxis::Tb => "tb",
            SweepAxis::Tau => "tau",
        }
    }

    pub fn parse_token(tok: &str) -> Result<Self> {
        match tok {
            "m" => Ok(SweepAxis::M),
            "tb" => Ok(SweepAxis::Tb),
            "tau" => Ok(SweepAxis::Tau),
            _ => Err(Error::config(format!("unknown sweep axis '{tok}'"))),
        }
    }
}

/// One sweep value's results.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub runs: Vec<SchemeRun>,
}

/// Apply one axis value to a base experiment, rebuilding scheme
/// configurations so derived quantities stay consistent.
pub(crate) fn apply_axis(base: &Experiment, axis: SweepAxis, value: f64) -> Result<Experiment> {
    let mut exp = base.clone();
    match axis {
        SweepAxis::Tau => exp.tau_s = value,
        SweepAxis::M => {
            for cfg in &mut exp.schemes {
                *cfg = SchemeConfig::new(cfg.scheme, cfg.k, value, cfg.tb_s, cfg.alpha)?;
            }
        }
        SweepAxis::Tb => {
            for cfg in &mut exp.schemes {
                *cfg = SchemeConfig::new(cfg.scheme, cfg.k, cfg.m_per_bit, value, cfg.alpha)?;
            }
        }
    }
    Ok(exp)
}

/// Sweep an axis over ascending values. Per value the slot grids and
/// channel coefficients are rebuilt and the design policy re-applied — a
/// `Fixed` policy therefore reuses its parameters across the sweep, while
/// the optimizing policies re-design at every point. Symbol streams
/// derive from (scheme, frame) only, so differences between points come
/// from the physics, not from resampled data.
pub fn sweep(axis: SweepAxis, values: &[f64], base: &Experiment) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("sweep values must be strictly ascending"));
    }
    values
        .iter()
        .map(|&value| {
            let exp = apply_axis(base, axis, value)?;
            Ok(SweepPoint { value, runs: run_ber(&exp)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn channel() -> ChannelParams {
        ChannelParams::new(10.0, 5.0, 79.4).unwrap()
    }

    fn base_experiment(schemes: Vec<SchemeConfig>) -> Experiment {
        Experiment {
            schemes,
            channel: channel(),
            tau_s: 0.0,
            total: TotalPolicy::MultipleOfTb(12.0),
            mcpm_detector: McpmDetector::Tpcd,
            ls: 3,
            design: DesignPolicy::Theoretical,
            bit_budget: 4096,
            min_error_events: 20,
            hard_cap_bits: 40_960,
            seed: 17,
        }
    }

    fn bcsk(m: f64, tb: f64) -> SchemeConfig {
        SchemeConfig::new(Scheme::Bcsk, 1, m, tb, None).unwrap()
    }

    fn mcpm(k: usize, m: f64, tb: f64) -> SchemeConfig {
        SchemeConfig::new(Scheme::Mcpm, k, m, tb, Some(0.7)).unwrap()
    }

    fn ppm(k: usize, m: f64, tb: f64) -> SchemeConfig {
        SchemeConfig::new(Scheme::Ppm, k, m, tb, None).unwrap()
    }

    #[test]
    fn same_seed_reproduces_bit_identical_results() {
        let exp = base_experiment(vec![bcsk(40.0, 0.3), mcpm(2, 40.0, 0.3)]);
        let a = run_ber(&exp).unwrap();
        let b = run_ber(&exp).unwrap();
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.estimate, y.estimate);
            assert_eq!(x.emissions, y.emissions);
            assert_eq!(x.alpha, y.alpha);
            assert_eq!(x.gamma, y.gamma);
        }
    }

    #[test]
    fn adding_a_scheme_leaves_others_untouched() {
        let solo = run_ber(&base_experiment(vec![bcsk(40.0, 0.3)])).unwrap();
        let joint =
            run_ber(&base_experiment(vec![bcsk(40.0, 0.3), ppm(4, 40.0, 0.3)])).unwrap();
        assert_eq!(solo[0].estimate, joint[0].estimate);
        assert_eq!(solo[0].emissions, joint[0].emissions);
    }

    #[test]
    fn parallel_pool_matches_serial_totals() {
        let exp = base_experiment(vec![mcpm(4, 40.0, 0.3), bcsk(40.0, 0.3)]);
        let serial = run_ber(&exp).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let parallel = pool.install(|| run_ber(&exp)).unwrap();
        for (x, y) in serial.iter().zip(&parallel) {
            assert_eq!(x.estimate, y.estimate);
            assert_eq!(x.emissions, y.emissions);
        }
    }

    #[test]
    fn generous_budget_and_clean_channel_give_zero_ber() {
        // Long bit interval and a huge budget: every detector sees a
        // near-noiseless channel, so no scheme records a single error.
        let mut exp = base_experiment(vec![
            bcsk(5000.0, 3.0),
            ppm(2, 5000.0, 3.0),
            mcpm(2, 5000.0, 3.0),
        ]);
        exp.bit_budget = 1024;
        exp.min_error_events = 0;
        exp.hard_cap_bits = 1024;
        for run in run_ber(&exp).unwrap() {
            assert_eq!(run.estimate.bit_errors, 0, "{:?}", run.cfg.scheme);
            assert_eq!(run.estimate.ber, 0.0);
        }
    }

    #[test]
    fn stopping_rule_honors_budget_floor_and_cap() {
        // Noisy regime: the error floor is met almost immediately, so the
        // run stops at the first batch boundary past the bit budget.
        let mut exp = base_experiment(vec![bcsk(5.0, 0.06)]);
        exp.bit_budget = 2000;
        exp.min_error_events = 10;
        exp.hard_cap_bits = 100_000;
        let run = &run_ber(&exp).unwrap()[0];
        let batch_bits = FRAME_SYMBOLS as u64 * FRAMES_PER_BATCH;
        assert!(run.estimate.bits >= 2000);
        assert!(run.estimate.bits < 2000 + batch_bits);
        assert!(run.estimate.bit_errors >= 10);

        // Clean regime: the error floor is unreachable and the cap binds.
        let mut exp = base_experiment(vec![bcsk(3000.0, 3.0)]);
        exp.bit_budget = 1000;
        exp.min_error_events = 100;
        exp.hard_cap_bits = 9000;
        let run = &run_ber(&exp).unwrap()[0];
        assert!(run.estimate.bits >= 9000);
        assert!(run.estimate.bits < 9000 + batch_bits);
        assert!(run.estimate.bit_errors < 100);
    }

    #[test]
    fn wilson_interval_matches_exact_binomial_coverage() {
        // Exact binomial check: at n=50, p=0.1 the Wilson interval's true
        // coverage must sit near its nominal 95%.
        let (n, p) = (50u64, 0.1f64);
        let mut pmf = (1.0 - p).powi(n as i32);
        let mut coverage = 0.0;
        for k in 0..=n {
            if k > 0 {
                pmf *= (n - k + 1) as f64 / k as f64 * p / (1.0 - p);
            }
            let (lo, hi) = wilson_interval(k, n);
            assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
            if lo <= p && p <= hi {
                coverage += pmf;
            }
        }
        assert!(coverage >= 0.93, "coverage {coverage}");
        // Degenerate corners stay inside [0, 1]; at zero successes the
        // lower bound collapses to zero up to rounding.
        assert!(wilson_interval(0, 100).0 < 1e-12);
        assert!(wilson_interval(100, 100).1 <= 1.0);
    }

    #[test]
    fn confidence_intervals_cover_the_pooled_rate() {
        // Fifty independent runs of the same noisy link; the pooled rate
        // stands in for the truth and must fall inside at least 90% of
        // the per-run intervals.
        let mut runs = Vec::new();
        for seed in 0..50 {
            let mut exp = base_experiment(vec![bcsk(30.0, 0.3)]);
            exp.seed = 1000 + seed;
            exp.bit_budget = 1536;
            exp.min_error_events = 5;
            exp.hard_cap_bits = 30_000;
            runs.push(run_ber(&exp).unwrap().remove(0).estimate);
        }
        let pooled = runs.iter().map(|e| e.bit_errors).sum::<u64>() as f64
            / runs.iter().map(|e| e.bits).sum::<u64>() as f64;
        let covered = runs
            .iter()
            .filter(|e| {
                let (lo, hi) = wilson_interval(e.bit_errors, e.bits);
                lo <= pooled && pooled <= hi
            })
            .count();
        assert!(covered >= 45, "covered {covered}/50, pooled {pooled}");
    }

    #[test]
    fn every_scheme_spends_the_molecule_budget() {
        let mut exp = base_experiment(vec![
            bcsk(40.0, 0.3),
            ppm(2, 40.0, 0.3),
            ppm(4, 40.0, 0.3),
            ppm(8, 40.0, 0.3),
            mcpm(2, 40.0, 0.3),
            mcpm(4, 40.0, 0.3),
            mcpm(8, 40.0, 0.3),
        ]);
        exp.bit_budget = 20_000;
        exp.min_error_events = 0;
        exp.hard_cap_bits = 20_480;
        for run in run_ber(&exp).unwrap() {
            let drift = (run.emissions_per_bit - 40.0).abs() / 40.0;
            assert!(drift <= 0.01, "{} drift {drift}", run.cfg.token());
        }
    }

    #[test]
    fn single_value_sweep_equals_run_ber() {
        let base = base_experiment(vec![bcsk(40.0, 0.3), mcpm(2, 40.0, 0.3)]);
        let points = sweep(SweepAxis::M, &[40.0], &base).unwrap();
        assert_eq!(points.len(), 1);
        let direct = run_ber(&base).unwrap();
        for (s, d) in points[0].runs.iter().zip(&direct) {
            assert_eq!(s.estimate, d.estimate);
            assert_eq!(s.gamma, d.gamma);
        }
    }

    #[test]
    fn sweep_applies_axis_and_orders_values() {
        let base = base_experiment(vec![mcpm(2, 40.0, 0.3)]);
        let points = sweep(SweepAxis::Tb, &[0.18, 0.3], &base).unwrap();
        assert_abs_diff_eq!(points[0].runs[0].cfg.tb_s, 0.18);
        assert_abs_diff_eq!(points[1].runs[0].cfg.tb_s, 0.3);
        assert!(sweep(SweepAxis::Tb, &[0.3, 0.18], &base).is_err());
        assert!(sweep(SweepAxis::Tb, &[], &base).is_err());

        // More molecules cannot hurt: BER is non-increasing in M here.
        let points = sweep(SweepAxis::M, &[10.0, 160.0], &base).unwrap();
        assert!(points[1].runs[0].estimate.ber <= points[0].runs[0].estimate.ber);
    }

    #[test]
    fn fixed_policy_pins_design_across_the_sweep() {
        let mut base = base_experiment(vec![mcpm(2, 40.0, 0.3)]);
        base.design = DesignPolicy::Fixed { alpha: Some(0.8), gamma: Some(12.5) };
        let points = sweep(SweepAxis::Tau, &[0.0, 0.05, 0.1], &base).unwrap();
        for p in &points {
            assert_eq!(p.runs[0].alpha, Some(0.8));
            assert_eq!(p.runs[0].gamma, Some(12.5));
            assert_abs_diff_eq!(p.runs[0].cfg.alpha.unwrap(), 0.8);
        }
        // The offset still changes the physics.
        assert_ne!(
            points[0].runs[0].estimate.bit_errors,
            points[2].runs[0].estimate.bit_errors
        );
    }

    #[test]
    fn mlsd_does_not_lose_to_tpcd() {
        let mut exp = base_experiment(vec![mcpm(2, 30.0, 0.3)]);
        exp.ls = 2;
        exp.bit_budget = 6000;
        exp.min_error_events = 30;
        exp.hard_cap_bits = 30_000;
        exp.mcpm_detector = McpmDetector::Mlsd;
        let mlsd = run_ber(&exp).unwrap().remove(0);
        exp.mcpm_detector = McpmDetector::Tpcd;
        let tpcd = run_ber(&exp).unwrap().remove(0);
        assert_eq!(mlsd.detector.token(), "mlsd");
        assert_eq!(tpcd.detector.token(), "tpcd");
        // Loose gate at desk scale; the acceptance run measures the gap
        // with confidence intervals.
        assert!(
            mlsd.estimate.ber <= tpcd.estimate.ber + 0.02,
            "mlsd {} vs tpcd {}",
            mlsd.estimate.ber,
            tpcd.estimate.ber
        );
    }

    #[test]
    fn invalid_experiments_are_rejected() {
        let mut exp = base_experiment(vec![]);
        assert!(run_ber(&exp).is_err());
        exp = base_experiment(vec![bcsk(40.0, 0.3), mcpm(2, 50.0, 0.3)]);
        assert!(run_ber(&exp).is_err());
        exp = base_experiment(vec![bcsk(40.0, 0.3), mcpm(2, 40.0, 0.4)]);
        assert!(run_ber(&exp).is_err());
        exp = base_experiment(vec![bcsk(40.0, 0.3)]);
        exp.bit_budget = 0;
        assert!(run_ber(&exp).is_err());
        exp = base_experiment(vec![bcsk(40.0, 0.3)]);
        exp.hard_cap_bits = exp.bit_budget - 1;
        assert!(run_ber(&exp).is_err());
        exp = base_experiment(vec![bcsk(40.0, 0.3)]);
        exp.ls = 0;
        assert!(run_ber(&exp).is_err());
        exp = base_experiment(vec![mcpm(2, 40.0, 0.3)]);
        exp.tau_s = -0.1;
        assert!(run_ber(&exp).is_err());
    }
}
