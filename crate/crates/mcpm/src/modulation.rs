//! Modulation schemes: BCSK, pulse position modulation, and the hybrid
//! concentration/position scheme (MCPM).
//!
//! All schemes are normalized to the same average molecule budget `M` per
//! information bit. A symbol occupies `K` equal sub-slots of the symbol
//! interval (one slot for BCSK). MCPM carries `log2(K)` bits in the pulse
//! position and one more bit in the pulse amplitude, splitting the per-symbol
//! budget `2 (1 + log2 K) M` between a high level (fraction `alpha`) and a
//! low level (fraction `1 - alpha`).
//!
//! Bit mapping follows natural binary, most significant bit first: the first
//! `log2 K` bits of a group select the position bin (value + 1), the last bit
//! selects the concentration level. Symbol indices order the alphabet the
//! same way, so index order, lexicographic bit order, and the detectors'
//! tie-breaking all agree.

use crate::{Error, Result};

/// Modulation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Bcsk,
    Ppm,
    Mcpm,
}

impl Scheme {
    /// Parse a scheme token as used in config files and CSV output:
    /// `bcsk`, `<K>-ppm`, `<K>-mcpm`. Returns the family and bin count.
    pub fn parse_token(tok: &str) -> Result<(Scheme, usize)> {
        let t = tok.trim().to_ascii_lowercase();
        if t == "bcsk" {
            return Ok((Scheme::Bcsk, 1));
        }
        let (num, kind) = t
            .split_once('-')
            .ok_or_else(|| Error::config(format!("unknown scheme token '{tok}'")))?;
        let k: usize = num
            .parse()
            .map_err(|_| Error::config(format!("bad bin count in scheme token '{tok}'")))?;
        match kind {
            "ppm" => Ok((Scheme::Ppm, k)),
            "mcpm" => Ok((Scheme::Mcpm, k)),
            _ => Err(Error::config(format!("unknown scheme token '{tok}'"))),
        }
    }
}

/// A fully specified modulation instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Position bins per symbol; 1 for BCSK, a power of two >= 2 otherwise.
    pub k: usize,
    /// Average molecule budget per information bit.
    pub m_per_bit: f64,
    /// Time budget per information bit, s.
    pub tb_s: f64,
    /// Concentration split for MCPM, in (0.5, 1). `None` for BCSK and PPM.
    pub alpha: Option<f64>,
}

impl SchemeConfig {
    pub fn new(
        scheme: Scheme,
        k: usize,
        m_per_bit: f64,
        tb_s: f64,
        alpha: Option<f64>,
    ) -> Result<Self> {
        if !(m_per_bit.is_finite() && m_per_bit > 0.0) {
            return Err(Error::invalid("molecule budget M must be positive"));
        }
        if !(tb_s.is_finite() && tb_s > 0.0) {
            return Err(Error::invalid("bit interval tb must be positive"));
        }
        match scheme {
            Scheme::Bcsk => {
                if k != 1 {
                    return Err(Error::invalid("BCSK uses exactly one slot per symbol"));
                }
                if alpha.is_some() {
                    return Err(Error::invalid("alpha is only meaningful for MCPM"));
                }
            }
            Scheme::Ppm => {
                if !(k >= 2 && k.is_power_of_two()) {
                    return Err(Error::invalid(format!(
                        "PPM bin count must be a power of two >= 2, got {k}"
                    )));
                }
                if alpha.is_some() {
                    return Err(Error::invalid("alpha is only meaningful for MCPM"));
                }
            }
            Scheme::Mcpm => {
                if !(k >= 2 && k.is_power_of_two()) {
                    return Err(Error::invalid(format!(
                        "MCPM bin count must be a power of two >= 2, got {k}"
                    )));
                }
                let a = alpha.ok_or_else(|| Error::invalid("MCPM requires alpha"))?;
                if !(a > 0.5 && a < 1.0) {
                    return Err(Error::invalid(format!(
                        "alpha must lie in (0.5, 1), got {a}"
                    )));
                }
            }
        }
        Ok(Self { scheme, k, m_per_bit, tb_s, alpha })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.scheme, self.k, self.m_per_bit, self.tb_s, Some(alpha))
    }

    /// Information bits carried by one symbol.
    pub fn bits_per_symbol(&self) -> usize {
        match self.scheme {
            Scheme::Bcsk => 1,
            Scheme::Ppm => self.k.trailing_zeros() as usize,
            Scheme::Mcpm => 1 + self.k.trailing_zeros() as usize,
        }
    }

    /// Symbol duration: the per-bit budget times the bits per symbol.
    pub fn symbol_s(&self) -> f64 {
        self.bits_per_symbol() as f64 * self.tb_s
    }

    /// Sub-slot duration: the symbol interval split into K bins.
    pub fn slot_s(&self) -> f64 {
        self.symbol_s() / self.k as f64
    }

    /// Number of distinct symbols.
    pub fn alphabet_size(&self) -> usize {
        match self.scheme {
            Scheme::Bcsk => 2,
            Scheme::Ppm => self.k,
            Scheme::Mcpm => 2 * self.k,
        }
    }

    /// Emission level (expected molecule count, real valued) for a symbol.
    pub fn emission_rate(&self, sym: McpmSymbol) -> f64 {
        let bps = self.bits_per_symbol() as f64;
        match self.scheme {
            Scheme::Bcsk => {
                if sym.csk_bit == 1 {
                    2.0 * self.m_per_bit
                } else {
                    0.0
                }
            }
            Scheme::Ppm => bps * self.m_per_bit,
            Scheme::Mcpm => {
                let a = self.alpha.expect("validated");
                let budget = 2.0 * bps * self.m_per_bit;
                if sym.csk_bit == 1 {
                    a * budget
                } else {
                    (1.0 - a) * budget
                }
            }
        }
    }

    /// Emission level rounded to a whole molecule count, as released on air.
    pub fn emission_count(&self, sym: McpmSymbol) -> u64 {
        self.emission_rate(sym).round() as u64
    }

    /// Scheme token used in configs and CSV: `bcsk`, `4-ppm`, `8-mcpm`, ..
    pub fn token(&self) -> String {
        match self.scheme {
            Scheme::Bcsk => "bcsk".to_string(),
            Scheme::Ppm => format!("{}-ppm", self.k),
            Scheme::Mcpm => format!("{}-mcpm", self.k),
        }
    }
}

/// One modulated symbol: a position bin (1-based) and a concentration bit.
///
/// Every scheme uses this view: BCSK fixes the bin to 1 and carries its bit
/// in `csk_bit`; PPM carries everything in the bin and keeps `csk_bit` at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct McpmSymbol {
    /// Pulse position, 1..=K.
    pub ppm_bin: usize,
    /// Concentration bit, 0 or 1.
    pub csk_bit: u8,
}

impl McpmSymbol {
    /// Alphabet index. Equals the symbol's bit group read as a big-endian
    /// integer, so index order is lexicographic bit order.
    pub fn index(&self, cfg: &SchemeConfig) -> usize {
        match cfg.scheme {
            Scheme::Bcsk => self.csk_bit as usize,
            Scheme::Ppm => self.ppm_bin - 1,
            Scheme::Mcpm => (self.ppm_bin - 1) * 2 + self.csk_bit as usize,
        }
    }

    /// Inverse of [`McpmSymbol::index`].
    pub fn from_index(idx: usize, cfg: &SchemeConfig) -> Result<Self> {
        if idx >= cfg.alphabet_size() {
            return Err(Error::invalid(format!(
                "symbol index {idx} out of range for alphabet of {}",
                cfg.alphabet_size()
            )));
        }
        Ok(match cfg.scheme {
            Scheme::Bcsk => McpmSymbol { ppm_bin: 1, csk_bit: idx as u8 },
            Scheme::Ppm => McpmSymbol { ppm_bin: idx + 1, csk_bit: 0 },
            Scheme::Mcpm => McpmSymbol { ppm_bin: idx / 2 + 1, csk_bit: (idx % 2) as u8 },
        })
    }

    /// 0-based sub-slot carrying this symbol's pulse.
    pub fn pulse_slot(&self) -> usize {
        self.ppm_bin - 1
    }

    /// The symbol's bit group, most significant bit first.
    pub fn bits(&self, cfg: &SchemeConfig) -> Vec<u8> {
        let bps = cfg.bits_per_symbol();
        let idx = self.index(cfg);
        (0..bps).map(|i| ((idx >> (bps - 1 - i)) & 1) as u8).collect()
    }
}

/// Group a bit stream into symbols. The length must be a whole number of
/// symbol groups and every element must be 0 or 1.
pub fn bits_to_symbols(bits: &[u8], cfg: &SchemeConfig) -> Result<Vec<McpmSymbol>> {
    let bps = cfg.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::invalid(format!(
            "bit count {} is not a multiple of {} bits per symbol",
            bits.len(),
            bps
        )));
    }
    if let Some(bad) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::invalid(format!("bits must be 0 or 1, got {bad}")));
    }
    Ok(bits
        .chunks(bps)
        .map(|group| {
            let idx = group.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            McpmSymbol::from_index(idx, cfg).expect("index within alphabet")
        })
        .collect())
}

/// Flatten symbols back into their bit groups.
pub fn symbols_to_bits(syms: &[McpmSymbol], cfg: &SchemeConfig) -> Vec<u8> {
    syms.iter().flat_map(|s| s.bits(cfg)).collect()
}

/// Per-slot emission counts for a symbol block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmissionFrame {
    pub counts: Vec<u64>,
}

impl EmissionFrame {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Place each symbol's pulse into its sub-slot: symbol `k` (1-based) with
/// bin `q` emits in slot `(k-1) K + q`. Counts are rounded to whole
/// molecules at this point; all analytic code keeps real-valued rates.
pub fn modulate(syms: &[McpmSymbol], cfg: &SchemeConfig) -> Result<EmissionFrame> {
    let k = cfg.k;
    let mut counts = vec![0u64; syms.len() * k];
    for (i, sym) in syms.iter().enumerate() {
        if sym.ppm_bin < 1 || sym.ppm_bin > k || sym.csk_bit > 1 {
            return Err(Error::invalid(format!(
                "symbol {{bin {}, csk {}}} outside scheme with K = {k}",
                sym.ppm_bin, sym.csk_bit
            )));
        }
        counts[i * k + sym.pulse_slot()] = cfg.emission_count(*sym);
    }
    Ok(EmissionFrame { counts })
}
