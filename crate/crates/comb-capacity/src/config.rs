//! Experiment configuration: a single JSON document describing the channel,
//! the per-subchannel SNR grid, the curves to compute, and the Monte Carlo,
//! optimizer and trellis settings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use comb_core::channel::ChannelParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("snr grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("no curves requested")]
    NoCurves,
    #[error("unknown curve name '{0}'")]
    UnknownCurve(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("channel: {0}")]
    Channel(#[from] comb_core::channel::ChannelError),
    #[error("trellis: {0}")]
    Trellis(#[from] comb_core::air::AirError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Channel description: either the wrapped-normal increment variances
/// directly, or normalized linewidths v = B/Rs with sigma^2 = 2 pi v.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Sigma {
        m: usize,
        sigma2_c: f64,
        sigma2_r: f64,
    },
    Linewidth {
        m: usize,
        v_c: f64,
        v_r: f64,
    },
}

impl ChannelSpec {
    pub fn to_params(&self) -> Result<ChannelParams, ConfigError> {
        let (m, s2c, s2r) = match *self {
            ChannelSpec::Sigma {
                m,
                sigma2_c,
                sigma2_r,
            } => (m, sigma2_c, sigma2_r),
            ChannelSpec::Linewidth { m, v_c, v_r } => (
                m,
                2.0 * std::f64::consts::PI * v_c,
                2.0 * std::f64::consts::PI * v_r,
            ),
        };
        Ok(ChannelParams::new(m, s2c, s2r)?)
    }
}

/// One curve of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    Upper,
    Lower,
    UpperHsnr,
    LowerHsnr,
    CAwgn,
    AirQam(usize),
}

impl CurveKind {
    pub fn name(&self) -> String {
        match self {
            CurveKind::Upper => "U".into(),
            CurveKind::Lower => "L".into(),
            CurveKind::UpperHsnr => "U_hsnr".into(),
            CurveKind::LowerHsnr => "L_hsnr".into(),
            CurveKind::CAwgn => "C_awgn".into(),
            CurveKind::AirQam(order) => format!("AIR:{order}"),
        }
    }

    pub fn file_stem(&self) -> String {
        match self {
            CurveKind::AirQam(order) => format!("air_{order}"),
            other => other.name().to_lowercase(),
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let t = s.trim();
        Ok(match t {
            "U" => CurveKind::Upper,
            "L" => CurveKind::Lower,
            "U_hsnr" => CurveKind::UpperHsnr,
            "L_hsnr" => CurveKind::LowerHsnr,
            "C_awgn" => CurveKind::CAwgn,
            _ => {
                let order = t
                    .strip_prefix("AIR:")
                    .and_then(|o| o.parse::<usize>().ok())
                    .ok_or_else(|| ConfigError::UnknownCurve(t.to_string()))?;
                CurveKind::AirQam(order)
            }
        })
    }
}

impl Serialize for CurveKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for CurveKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CurveKind::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Monte Carlo settings for the entropy-estimated bound terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McSettings {
    pub n_samples: usize,
    pub n_search: usize,
    pub k_nn: usize,
    /// draws for the high-SNR gap terms
    pub hsnr_samples: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            n_samples: 200_000,
            n_search: 20_000,
            k_nn: 4,
            hsnr_samples: 1_000_000,
        }
    }
}

/// Optimizer budgets for the bound minimization/maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimSettings {
    pub inner_evals: usize,
    pub outer_evals: usize,
    pub n_starts: usize,
}

impl Default for OptimSettings {
    fn default() -> Self {
        let d = comb_core::bounds::BoundOptConfig::default();
        Self {
            inner_evals: d.inner_evals,
            outer_evals: d.outer_evals,
            n_starts: d.n_starts,
        }
    }
}

impl OptimSettings {
    pub fn to_core(self) -> comb_core::bounds::BoundOptConfig {
        comb_core::bounds::BoundOptConfig {
            inner_evals: self.inner_evals,
            outer_evals: self.outer_evals,
            n_starts: self.n_starts,
        }
    }
}

/// Phase-trellis settings for the AIR curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrellisSettings {
    pub levels: usize,
    pub block_len: usize,
    pub n_blocks: usize,
}

impl Default for TrellisSettings {
    fn default() -> Self {
        let d = comb_core::air::TrellisConfig::desk();
        Self {
            levels: d.levels,
            block_len: d.block_len,
            n_blocks: d.n_blocks,
        }
    }
}

impl TrellisSettings {
    pub fn to_core(self) -> comb_core::air::TrellisConfig {
        comb_core::air::TrellisConfig {
            levels: self.levels,
            block_len: self.block_len,
            n_blocks: self.n_blocks,
        }
    }
}

/// The complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub channel: ChannelSpec,
    /// per-subchannel SNR grid in dB, strictly increasing
    pub snr_grid_db: Vec<f64>,
    pub curves: Vec<CurveKind>,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub optimizer: OptimSettings,
    #[serde(default)]
    pub trellis: TrellisSettings,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.snr_grid_db.is_empty()
            || self.snr_grid_db.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(ConfigError::BadGrid);
        }
        if self.curves.is_empty() {
            return Err(ConfigError::NoCurves);
        }
        self.channel.to_params()?;
        if self.curves.iter().any(|c| matches!(c, CurveKind::AirQam(_))) {
            self.trellis.to_core().validate()?;
            for c in &self.curves {
                if let CurveKind::AirQam(order) = c {
                    comb_core::air::make_qam(*order)?;
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Keep only the curves whose names appear in `names`.
    pub fn filter_curves(&mut self, names: &[String]) -> Result<(), ConfigError> {
        let mut wanted = Vec::new();
        for n in names {
            wanted.push(CurveKind::parse(n)?);
        }
        self.curves.retain(|c| wanted.contains(c));
        if self.curves.is_empty() {
            return Err(ConfigError::NoCurves);
        }
        Ok(())
    }
}
