//! File-backed run configuration: one TOML file fully determines an
//! experiment — channel geometry, shared budgets, the scheme list,
//! detector and design policies, stopping rule, and optional sweep and
//! coefficient-grid sections. Unknown keys are rejected so typos fail
//! loudly instead of silently running a default. Units are encoded in the
//! key names: `_s` seconds, `_um` micrometers, `_um2_s` square micrometers
//! per second.

use crate::channel::{ChannelParams, SlotGrid};
use crate::modulation::{Scheme, SchemeConfig};
use crate::simulator::{DesignPolicy, Experiment, McpmDetector, SweepAxis, TotalPolicy};
use crate::{Error, Result};
use serde::Deserialize;
use std::path::Path;

/// Placeholder split for MCPM schemes that leave `alpha` to a designing
/// policy; it is replaced before any symbol is modulated.
const DEFAULT_ALPHA: f64 = 0.7;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelSection,
    pub timing: TimingSection,
    pub budget: BudgetSection,
    pub schemes: Vec<SchemeSection>,
    pub detector: DetectorSection,
    #[serde(default)]
    pub design: DesignSection,
    pub experiment: ExperimentSection,
    pub sweep: Option<SweepSection>,
    pub grid: Option<GridSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Transmitter-to-receiver-center distance, micrometers.
    pub r0_um: f64,
    /// Receiver radius, micrometers.
    pub rr_um: f64,
    /// Diffusion coefficient, square micrometers per second.
    pub d_um2_s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    /// Time budget per information bit, seconds.
    pub tb_s: f64,
    /// Channel truncation horizon as a multiple of `tb_s`.
    pub t_total_mult: Option<f64>,
    /// Channel truncation horizon, seconds; overrides `t_total_mult`.
    pub t_total_s: Option<f64>,
    /// Reception offset, seconds.
    #[serde(default)]
    pub tau_s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    /// Average molecules per information bit, shared by every scheme.
    pub m_per_bit: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    /// Scheme token: `bcsk`, `<K>-ppm`, or `<K>-mcpm`.
    pub token: String,
    /// Concentration split; MCPM only. Optional under designing policies.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// Detector for MCPM schemes: `mlsd` or `tpcd`.
    pub mcpm: String,
    /// Conditioning memory, symbols.
    pub ls: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    /// `theoretical` (default), `exhaustive`, or `fixed`.
    pub policy: Option<String>,
    /// Symbols per grid point for the exhaustive policy.
    pub search_symbols: Option<u64>,
    /// Split pinned by the fixed policy.
    pub alpha: Option<f64>,
    /// Threshold pinned by the fixed policy.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Counted bits to accumulate before a run may stop.
    pub bit_budget: u64,
    /// Error events to accumulate before a run may stop.
    #[serde(default = "default_min_errors")]
    pub min_error_events: u64,
    /// Unconditional stop in counted bits.
    pub hard_cap_bits: Option<u64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_min_errors() -> u64 {
    100
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `m`, `tb`, or `tau`.
    pub axis: String,
    /// Strictly ascending axis values.
    pub values: Vec<f64>,
}

/// Stand-alone slot grid for the coefficient table command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Slot length, seconds.
    pub ts_s: f64,
    /// Number of slots; exclusive with `t_total_s`.
    pub l: Option<usize>,
    /// Horizon, seconds; exclusive with `l`.
    pub t_total_s: Option<f64>,
    /// Reception offset, seconds.
    #[serde(default)]
    pub tau_s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Destination the CLI writes CSV rows to.
    pub path: String,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("config read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn channel_params(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.channel.r0_um, self.channel.rr_um, self.channel.d_um2_s)
    }

    pub fn total_policy(&self) -> Result<TotalPolicy> {
        match (self.timing.t_total_s, self.timing.t_total_mult) {
            (Some(s), None) => Ok(TotalPolicy::Seconds(s)),
            (None, Some(m)) => Ok(TotalPolicy::MultipleOfTb(m)),
            (None, None) => Ok(TotalPolicy::MultipleOfTb(12.0)),
            (Some(_), Some(_)) => {
                Err(Error::config("give either t_total_s or t_total_mult, not both"))
            }
        }
    }

    pub fn scheme_configs(&self) -> Result<Vec<SchemeConfig>> {
        if self.schemes.is_empty() {
            return Err(Error::config("the scheme list is empty"));
        }
        self.schemes
            .iter()
            .map(|s| {
                let (scheme, k) = Scheme::parse_token(&s.token)?;
                let alpha = match scheme {
                    Scheme::Mcpm => Some(s.alpha.unwrap_or(DEFAULT_ALPHA)),
                    _ => {
                        if s.alpha.is_some() {
                            return Err(Error::config(format!(
                                "scheme '{}' does not take alpha",
                                s.token
                            )));
                        }
                        None
                    }
                };
                SchemeConfig::new(scheme, k, self.budget.m_per_bit, self.timing.tb_s, alpha)
            })
            .collect()
    }

    pub fn mcpm_detector(&self) -> Result<McpmDetector> {
        match self.detector.mcpm.as_str() {
            "mlsd" => Ok(McpmDetector::Mlsd),
            "tpcd" => Ok(McpmDetector::Tpcd),
            other => Err(Error::config(format!("unknown MCPM detector '{other}'"))),
        }
    }

    pub fn design_policy(&self) -> Result<DesignPolicy> {
        match self.design.policy.as_deref().unwrap_or("theoretical") {
            "theoretical" => Ok(DesignPolicy::Theoretical),
            "exhaustive" => Ok(DesignPolicy::Exhaustive {
                symbols: self.design.search_symbols.unwrap_or(20_000),
            }),
            "fixed" => Ok(DesignPolicy::Fixed {
                alpha: self.design.alpha,
                gamma: self.design.gamma,
            }),
            other => Err(Error::config(format!("unknown design policy '{other}'"))),
        }
    }

    /// Assemble the full experiment this file describes.
    pub fn experiment(&self) -> Result<Experiment> {
        let exp = Experiment {
            schemes: self.scheme_configs()?,
            channel: self.channel_params()?,
            tau_s: self.timing.tau_s,
            total: self.total_policy()?,
            mcpm_detector: self.mcpm_detector()?,
            ls: self.detector.ls,
            design: self.design_policy()?,
            bit_budget: self.experiment.bit_budget,
            min_error_events: self.experiment.min_error_events,
            hard_cap_bits: self
                .experiment
                .hard_cap_bits
                .unwrap_or_else(|| self.experiment.bit_budget.saturating_mul(10)),
            seed: self.experiment.seed,
        };
        exp.validate()?;
        Ok(exp)
    }

    pub fn sweep_axis_values(&self) -> Result<(SweepAxis, Vec<f64>)> {
        let sw = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::config("this command needs a [sweep] section"))?;
        Ok((SweepAxis::parse_token(&sw.axis)?, sw.values.clone()))
    }

    /// Slot grid for the coefficient table; falls back to the experiment
    /// timing when no [grid] section is present.
    pub fn coeff_grid(&self) -> Result<SlotGrid> {
        match &self.grid {
            Some(g) => {
                let t_total = match (g.l, g.t_total_s) {
                    (Some(l), None) => {
                        if l == 0 {
                            return Err(Error::config("grid needs at least one slot"));
                        }
                        g.ts_s * l as f64
                    }
                    (None, Some(t)) => t,
                    _ => return Err(Error::config("give either grid.l or grid.t_total_s")),
                };
                SlotGrid::new(g.ts_s, t_total, g.tau_s)
            }
            None => {
                let schemes = self.scheme_configs()?;
                SlotGrid::new(
                    schemes[0].slot_s(),
                    self.total_policy()?.t_total(self.timing.tb_s),
                    self.timing.tau_s,
                )
            }
        }
    }
}
