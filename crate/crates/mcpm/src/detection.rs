//! Detectors: maximum likelihood sequence detection (Viterbi and exhaustive
//! reference), the reduced-complexity two-phase detector for MCPM, and the
//! single-shot threshold/argmax detectors for the baselines.
//!
//! The sequence likelihood treats the first `K * Ls` channel taps as the
//! detector's memory: the Poisson rate of slot `m` under a candidate symbol
//! sequence is the candidate's emission history convolved with those taps.
//! The log-likelihood of a candidate is `sum_m R_m ln(rate_m) - rate_m`
//! (the `ln R_m!` term is common to all candidates and dropped), with the
//! conventions: a zero rate with a nonzero observed count makes a candidate
//! impossible (score -inf), and a zero rate with a zero count contributes 0.
//!
//! Both MLSD implementations assemble per-stage metrics through one shared
//! routine, in the identical floating-point order, and accumulate path
//! scores with compensated summation, so the Viterbi search is bit-exact
//! against exhaustive enumeration, ties included. The compensation matters:
//! two paths can re-partition the same total rate across stages differently,
//! and with plain summation mathematically tied prefixes can differ by an
//! ULP that a later addition absorbs, leaving the trellis committed to the
//! wrong survivor. Ties are broken toward the lexicographically smallest
//! symbol-index sequence; since symbol indices equal their bit groups read
//! as binary, this is also lexicographic bit order.
//!
//! Candidate emission levels are the rounded molecule counts the modulator
//! actually releases, so the detector's generative model matches the
//! simulator exactly.

use crate::channel::ChannelCoefficients;
use crate::modulation::{McpmSymbol, Scheme, SchemeConfig};
use crate::{Error, Result};

/// Upper bound on enumerated sequences in the exhaustive detector.
const EXHAUSTIVE_GUARD: u128 = 1_000_000;
/// Upper bound on the Viterbi state count.
const STATE_GUARD: u128 = 1 << 22;

/// Path score under compensated (Neumaier) accumulation. Both MLSD
/// implementations add the same stage terms in the same order through this
/// type, so a path's score is one well-defined float in either detector.
#[derive(Debug, Clone, Copy)]
struct PathMetric {
    s: f64,
    c: f64,
}

impl PathMetric {
    const ZERO: Self = Self { s: 0.0, c: 0.0 };

    fn add(mut self, x: f64) -> Self {
        let t = self.s + x;
        if t.is_finite() {
            self.c += if self.s.abs() >= x.abs() { (self.s - t) + x } else { (x - t) + self.s };
        } else {
            // An impossible branch pins the path at -inf; compensation
            // would turn into NaN arithmetic, so drop it.
            self.c = 0.0;
        }
        self.s = t;
        self
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Detector selection, carried by experiments and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    /// Viterbi sequence detector with a memory of `ls` symbols.
    Mlsd { ls: usize },
    /// Brute-force sequence detector, for validation on short blocks.
    ExhaustiveMlsd { ls: usize },
    /// Two-phase position-then-concentration detector for MCPM.
    Tpcd { gamma: f64 },
    /// Per-slot threshold detector for BCSK.
    BcskThreshold { gamma: f64 },
    /// Per-window argmax detector for PPM.
    PpmArgmax,
}

impl Detector {
    /// Token used in CSV output.
    pub fn token(&self) -> &'static str {
        match self {
            Detector::Mlsd { .. } => "mlsd",
            Detector::ExhaustiveMlsd { .. } => "exhaustive-mlsd",
            Detector::Tpcd { .. } => "tpcd",
            Detector::BcskThreshold { .. } => "bcsk-threshold",
            Detector::PpmArgmax => "ppm-argmax",
        }
    }

    /// Detection threshold if this detector carries one.
    pub fn gamma(&self) -> Option<f64> {
        match self {
            Detector::Tpcd { gamma } | Detector::BcskThreshold { gamma } => Some(*gamma),
            _ => None,
        }
    }
}

/// Run the detector matching the scheme on a slot-count trace.
pub fn detect(
    trace: &[u64],
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    det: &Detector,
) -> Result<Vec<McpmSymbol>> {
    match (det, cfg.scheme) {
        (Detector::Mlsd { ls }, _) => mlsd_detect(trace, cfg, h, *ls),
        (Detector::ExhaustiveMlsd { ls }, _) => exhaustive_mlsd_detect(trace, cfg, h, *ls),
        (Detector::Tpcd { gamma }, Scheme::Mcpm) => tpcd_detect(trace, cfg, *gamma),
        (Detector::BcskThreshold { gamma }, Scheme::Bcsk) => bcsk_detect(trace, *gamma),
        (Detector::PpmArgmax, Scheme::Ppm) => ppm_detect(trace, cfg),
        (d, s) => Err(Error::invalid(format!(
            "detector {} does not apply to scheme {s:?}",
            d.token()
        ))),
    }
}

// ---------------------------------------------------------------------------
// Shared MLSD machinery
// ---------------------------------------------------------------------------

/// Precomputed per-symbol rate contributions.
///
/// `contrib(d, sym, j)` is the rate a pulse of symbol `sym`, transmitted `d`
/// symbols before the current one, adds to sub-slot `j` of the current
/// symbol. With `K * Ls` taps the oldest contributor is `d = Ls` (its late
/// bins still reach into the current symbol), which is why the trellis
/// state must hold `Ls` whole symbols.
struct MlsdTables {
    k: usize,
    ls: usize,
    a: usize,
    contrib: Vec<f64>,
    /// Per-symbol total current-slot rate, for the `-rate` metric part.
    csum0: Vec<f64>,
}

impl MlsdTables {
    fn build(cfg: &SchemeConfig, h: &ChannelCoefficients, ls: usize) -> Result<Self> {
        if ls == 0 {
            return Err(Error::invalid("MLSD memory must be at least one symbol"));
        }
        let k = cfg.k;
        let taps_needed = k * ls;
        if h.len() < taps_needed {
            return Err(Error::invalid(format!(
                "need at least K*Ls = {taps_needed} channel taps, have {}",
                h.len()
            )));
        }
        let taps = &h.taps()[..taps_needed];
        let a = cfg.alphabet_size();
        let mut contrib = vec![0.0; (ls + 1) * a * k];
        let mut csum0 = vec![0.0; a];
        for d in 0..=ls {
            for sym_idx in 0..a {
                let sym = McpmSymbol::from_index(sym_idx, cfg)?;
                let level = cfg.emission_count(sym) as f64;
                let q = sym.pulse_slot();
                for j in 0..k {
                    // Tap index for a pulse d symbols and (j - q) slots away.
                    let lag = d * k + j;
                    if lag >= q {
                        let tap = lag - q;
                        if tap < taps_needed {
                            contrib[(d * a + sym_idx) * k + j] = level * taps[tap];
                        }
                    }
                }
            }
        }
        for sym_idx in 0..a {
            let mut s = 0.0;
            for j in 0..k {
                s += contrib[sym_idx * k + j];
            }
            csum0[sym_idx] = s;
        }
        Ok(Self { k, ls, a, contrib, csum0 })
    }

    #[inline]
    fn contrib(&self, d: usize, sym: usize, j: usize) -> f64 {
        self.contrib[(d * self.a + sym) * self.k + j]
    }

    /// Fill `srate` with the history part of each sub-slot rate (everything
    /// except the current symbol) and return its total. `hist` lists symbol
    /// indices most recent first; older history is silence.
    fn history_rates(&self, hist: &[usize], srate: &mut [f64]) -> f64 {
        srate.fill(0.0);
        for (back, &sy) in hist.iter().enumerate() {
            let d = back + 1;
            for j in 0..self.k {
                srate[j] += self.contrib(d, sy, j);
            }
        }
        let mut sum = 0.0;
        for &v in srate.iter() {
            sum += v;
        }
        sum
    }

    /// Log-likelihood contribution of one symbol interval given the history
    /// rates, the current symbol, and the nonzero observed counts
    /// `(sub-slot, count)`. This is the single place metric arithmetic
    /// happens, keeping Viterbi and exhaustive search bit-identical.
    fn stage_term(
        &self,
        srate: &[f64],
        srate_sum: f64,
        sym: usize,
        observed: &[(usize, f64)],
    ) -> f64 {
        let mut term = -(srate_sum + self.csum0[sym]);
        for &(j, r) in observed {
            let lam = srate[j] + self.contrib(0, sym, j);
            if lam <= 0.0 {
                return f64::NEG_INFINITY;
            }
            term += r * lam.ln();
        }
        term
    }
}

/// Nonzero counts of each symbol interval as `(sub-slot, count)` lists.
fn observed_per_stage(trace: &[u64], k: usize) -> Vec<Vec<(usize, f64)>> {
    trace
        .chunks(k)
        .map(|w| {
            w.iter()
                .enumerate()
                .filter(|(_, &r)| r > 0)
                .map(|(j, &r)| (j, r as f64))
                .collect()
        })
        .collect()
}

fn check_trace(trace: &[u64], k: usize) -> Result<usize> {
    if trace.len() % k != 0 {
        return Err(Error::invalid(format!(
            "trace length {} is not a multiple of {k} slots per symbol",
            trace.len()
        )));
    }
    Ok(trace.len() / k)
}

/// Log-likelihood of a candidate sequence for an observed trace.
///
/// The trace must cover exactly the candidate's symbol intervals. Returns
/// `-inf` when the candidate makes an observed count impossible.
pub fn sequence_log_likelihood(
    trace: &[u64],
    seq: &[McpmSymbol],
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
) -> Result<f64> {
    let tables = MlsdTables::build(cfg, h, ls)?;
    let s_count = check_trace(trace, tables.k)?;
    if s_count != seq.len() {
        return Err(Error::invalid(format!(
            "trace covers {s_count} symbols but candidate has {}",
            seq.len()
        )));
    }
    let idx: Vec<usize> = seq.iter().map(|s| s.index(cfg)).collect();
    if idx.iter().any(|&i| i >= tables.a) {
        return Err(Error::invalid("candidate symbol outside the alphabet"));
    }
    let observed = observed_per_stage(trace, tables.k);
    let mut srate = vec![0.0; tables.k];
    let mut hist = Vec::with_capacity(tables.ls);
    let mut total = PathMetric::ZERO;
    for stage in 0..s_count {
        hist.clear();
        for d in 1..=tables.ls.min(stage) {
            hist.push(idx[stage - d]);
        }
        let srate_sum = tables.history_rates(&hist, &mut srate);
        total = total.add(tables.stage_term(&srate, srate_sum, idx[stage], &observed[stage]));
    }
    Ok(total.value())
}

/// Brute-force MLSD: scan all `A^S` candidate sequences in lexicographic
/// order and keep the first maximum. Guarded to short blocks.
pub fn exhaustive_mlsd_detect(
    trace: &[u64],
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
) -> Result<Vec<McpmSymbol>> {
    let tables = MlsdTables::build(cfg, h, ls)?;
    let s_count = check_trace(trace, tables.k)?;
    if s_count == 0 {
        return Ok(Vec::new());
    }
    let total = (tables.a as u128).checked_pow(s_count as u32);
    match total {
        Some(t) if t <= EXHAUSTIVE_GUARD => {}
        _ => {
            return Err(Error::Guard(format!(
                "exhaustive search over {}^{s_count} sequences exceeds {EXHAUSTIVE_GUARD}",
                tables.a
            )))
        }
    }
    let observed = observed_per_stage(trace, tables.k);
    let mut srate = vec![0.0; tables.k];
    let mut hist = Vec::with_capacity(tables.ls);
    let mut idx = vec![0usize; s_count];
    let mut best_idx = idx.clone();
    let mut best_score = f64::NEG_INFINITY;
    let mut first = true;
    loop {
        let mut acc = PathMetric::ZERO;
        for stage in 0..s_count {
            hist.clear();
            for d in 1..=tables.ls.min(stage) {
                hist.push(idx[stage - d]);
            }
            let srate_sum = tables.history_rates(&hist, &mut srate);
            acc = acc.add(tables.stage_term(&srate, srate_sum, idx[stage], &observed[stage]));
        }
        let score = acc.value();
        if first || score > best_score {
            best_score = score;
            best_idx.copy_from_slice(&idx);
            first = false;
        }
        // Advance the odometer, most significant digit first means the last
        // position increments fastest; scan order is lexicographic.
        let mut pos = s_count;
        loop {
            if pos == 0 {
                return best_idx
                    .iter()
                    .map(|&i| McpmSymbol::from_index(i, cfg))
                    .collect();
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < tables.a {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Viterbi MLSD, exact argmax of [`sequence_log_likelihood`].
///
/// The trellis state holds the last `Ls` symbols: with `K * Ls` taps the
/// oldest of them still contributes to the current interval's rates through
/// its late bins, so a shorter state could not represent the branch metric
/// exactly. Path metrics accumulate through the same shared stage routine
/// as the exhaustive detector; equal-metric merges keep the survivor whose
/// decoded prefix is lexicographically smallest, making the output of the
/// two detectors identical on every input.
pub fn mlsd_detect(
    trace: &[u64],
    cfg: &SchemeConfig,
    h: &ChannelCoefficients,
    ls: usize,
) -> Result<Vec<McpmSymbol>> {
    let tables = MlsdTables::build(cfg, h, ls)?;
    let s_count = check_trace(trace, tables.k)?;
    if s_count == 0 {
        return Ok(Vec::new());
    }
    let a = tables.a;
    match (a as u128).checked_pow(ls as u32) {
        Some(t) if t <= STATE_GUARD => {}
        _ => {
            return Err(Error::Guard(format!(
                "MLSD state space {a}^{ls} exceeds {STATE_GUARD}"
            )))
        }
    }
    let full_states = a.pow(ls as u32);
    let observed = observed_per_stage(trace, tables.k);

    // Back-pointers: bp[stage][state] = (previous state, symbol index).
    let mut bp: Vec<Vec<(u32, u16)>> = Vec::with_capacity(s_count);
    let mut metric: Vec<PathMetric> = vec![PathMetric::ZERO; 1];
    let mut hist_buf = vec![0usize; ls];
    let mut srate = vec![0.0; tables.k];
    // Per-state history rates for the current stage.
    let mut srates: Vec<f64> = Vec::new();
    let mut srate_sums: Vec<f64> = Vec::new();

    for stage in 0..s_count {
        let hist_len = ls.min(stage);
        let n_states = a.pow(hist_len as u32);
        debug_assert_eq!(metric.len(), n_states);
        let next_len = ls.min(stage + 1);
        let n_next = a.pow(next_len as u32);

        srates.resize(n_states * tables.k, 0.0);
        srate_sums.resize(n_states, 0.0);
        for v in 0..n_states {
            // Digit d-1 of the state is the symbol d intervals back.
            let mut rem = v;
            for item in hist_buf.iter_mut().take(hist_len) {
                *item = rem % a;
                rem /= a;
            }
            let sum = tables
                .history_rates(&hist_buf[..hist_len], &mut srate);
            srates[v * tables.k..(v + 1) * tables.k].copy_from_slice(&srate);
            srate_sums[v] = sum;
        }

        let mut next_metric = vec![PathMetric::ZERO; n_next];
        let mut next_val = vec![f64::NEG_INFINITY; n_next];
        let mut next_bp = vec![(u32::MAX, 0u16); n_next];
        let drop_mod = if hist_len == ls { full_states / a } else { usize::MAX };
        for v in 0..n_states {
            let base = metric[v];
            let sr = &srates[v * tables.k..(v + 1) * tables.k];
            let ssum = srate_sums[v];
            for s in 0..a {
                let cand = base.add(tables.stage_term(sr, ssum, s, &observed[stage]));
                let cand_val = cand.value();
                let tgt = if hist_len == ls { (v % drop_mod) * a + s } else { v * a + s };
                let better = if next_bp[tgt].0 == u32::MAX {
                    true
                } else if cand_val > next_val[tgt] {
                    true
                } else if cand_val == next_val[tgt] {
                    // Both candidates append the same symbol (it is encoded
                    // in the target state), so compare the prefixes.
                    prefix_less(&bp, stage, v as u32, next_bp[tgt].0)
                } else {
                    false
                };
                if better {
                    next_metric[tgt] = cand;
                    next_val[tgt] = cand_val;
                    next_bp[tgt] = (v as u32, s as u16);
                }
            }
        }
        metric = next_metric;
        bp.push(next_bp);
    }

    // Pick the best final state; on ties the lexicographically smallest
    // decoded sequence wins.
    let mut best_state = 0usize;
    for v in 1..metric.len() {
        let (cur, best) = (metric[v].value(), metric[best_state].value());
        if cur > best {
            best_state = v;
        } else if cur == best && seq_less(&bp, s_count, v as u32, best_state as u32) {
            best_state = v;
        }
    }
    let idx = reconstruct(&bp, s_count, best_state as u32);
    idx.iter().map(|&i| McpmSymbol::from_index(i as usize, cfg)).collect()
}

/// Decode the symbol sequence ending in `state` after `stages` stages.
fn reconstruct(bp: &[Vec<(u32, u16)>], stages: usize, state: u32) -> Vec<u16> {
    let mut seq = vec![0u16; stages];
    let mut v = state;
    for t in (0..stages).rev() {
        let (pv, s) = bp[t][v as usize];
        seq[t] = s;
        v = pv;
    }
    seq
}

/// Is the prefix (of length `stages`) ending at `va` lexicographically
/// smaller than the one ending at `vb`? Only called on exact metric ties.
fn prefix_less(bp: &[Vec<(u32, u16)>], stages: usize, va: u32, vb: u32) -> bool {
    seq_less(bp, stages, va, vb)
}

fn seq_less(bp: &[Vec<(u32, u16)>], stages: usize, va: u32, vb: u32) -> bool {
    reconstruct(bp, stages, va) < reconstruct(bp, stages, vb)
}

// ---------------------------------------------------------------------------
// Single-pass detectors
// ---------------------------------------------------------------------------

/// Stage one of the two-phase detector: the winning sub-slot of one symbol
/// window (first maximum, so ties go to the lowest index) and its count.
pub(crate) fn window_argmax(window: &[u64]) -> (usize, u64) {
    let mut best = 0usize;
    for (j, &r) in window.iter().enumerate() {
        if r > window[best] {
            best = j;
        }
    }
    (best, window[best])
}

/// Two-phase position-then-concentration detection for MCPM: per symbol,
/// pick the sub-slot with the largest count (ties toward the earliest),
/// then decide the concentration bit by `count > gamma` (a count equal to
/// the threshold decides low).
pub fn tpcd_detect(trace: &[u64], cfg: &SchemeConfig, gamma: f64) -> Result<Vec<McpmSymbol>> {
    if cfg.scheme != Scheme::Mcpm {
        return Err(Error::invalid("TPCD applies to MCPM"));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::invalid("threshold must be finite and nonnegative"));
    }
    check_trace(trace, cfg.k)?;
    Ok(trace
        .chunks(cfg.k)
        .map(|w| {
            let (bin0, count) = window_argmax(w);
            McpmSymbol { ppm_bin: bin0 + 1, csk_bit: u8::from(count as f64 > gamma) }
        })
        .collect())
}

/// Per-slot threshold detection for BCSK.
pub fn bcsk_detect(trace: &[u64], gamma: f64) -> Result<Vec<McpmSymbol>> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::invalid("threshold must be finite and nonnegative"));
    }
    Ok(trace
        .iter()
        .map(|&r| McpmSymbol { ppm_bin: 1, csk_bit: u8::from(r as f64 > gamma) })
        .collect())
}

/// Per-window argmax detection for PPM (ties toward the earliest bin).
pub fn ppm_detect(trace: &[u64], cfg: &SchemeConfig) -> Result<Vec<McpmSymbol>> {
    if cfg.scheme != Scheme::Ppm {
        return Err(Error::invalid("argmax detection applies to PPM"));
    }
    check_trace(trace, cfg.k)?;
    Ok(trace
        .chunks(cfg.k)
        .map(|w| McpmSymbol { ppm_bin: window_argmax(w).0 + 1, csk_bit: 0 })
        .collect())
}
