//! Bundled experiment presets mirroring the three reference sweeps.

use crate::config::{
    ChannelSpec, ConfigError, CurveKind, ExperimentConfig, McSettings, OptimSettings,
    TrellisSettings,
};

/// SNR-per-subchannel grid used by the reference figures:
/// 10 log10(0.5 * 10^(0.2 k)) dB for k = 0..25.
pub fn figure_grid_db() -> Vec<f64> {
    (0..26)
        .map(|k| 10.0 * (0.5 * 10f64.powf(0.2 * k as f64)).log10())
        .collect()
}

fn full_curves() -> Vec<CurveKind> {
    vec![
        CurveKind::CAwgn,
        CurveKind::Upper,
        CurveKind::Lower,
        CurveKind::UpperHsnr,
        CurveKind::LowerHsnr,
        CurveKind::AirQam(64),
        CurveKind::AirQam(1024),
    ]
}

fn preset(m: usize, v_c: f64, v_r: f64) -> ExperimentConfig {
    let full = comb_core::air::TrellisConfig::full();
    ExperimentConfig {
        channel: ChannelSpec::Linewidth { m, v_c, v_r },
        snr_grid_db: figure_grid_db(),
        curves: full_curves(),
        mc: McSettings::default(),
        optimizer: OptimSettings::default(),
        trellis: TrellisSettings {
            levels: full.levels,
            block_len: full.block_len,
            n_blocks: full.n_blocks,
        },
        seed: 1,
    }
}

/// Names of the bundled presets.
pub const PRESET_NAMES: [&str; 3] = ["fig-M2", "fig-M21-practical", "fig-M21"];

/// Look up a preset by name.
pub fn preset_by_name(name: &str) -> Result<ExperimentConfig, ConfigError> {
    match name {
        "fig-M2" => Ok(preset(2, 5e-3, 5e-5)),
        "fig-M21-practical" => Ok(preset(21, 5e-6, 5e-9)),
        "fig-M21" => Ok(preset(21, 5e-3, 5e-5)),
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_valid() {
        for name in PRESET_NAMES {
            let cfg = preset_by_name(name).unwrap();
            cfg.validate().unwrap();
        }
        assert!(preset_by_name("fig-M3").is_err());
    }

    #[test]
    fn grid_hits_reference_points() {
        let grid = figure_grid_db();
        assert_eq!(grid.len(), 26);
        assert!((grid[0] + 3.01029995663981).abs() < 1e-9);
        assert!((grid[22] - 40.9897000433602).abs() < 1e-9);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fig_m2_noise_matches_figure_caption() {
        let cfg = preset_by_name("fig-M2").unwrap();
        let p = cfg.channel.to_params().unwrap();
        assert_eq!(p.m, 2);
        assert!((p.sigma2_c - std::f64::consts::PI * 1e-2).abs() < 1e-12);
        assert!((p.sigma2_r - std::f64::consts::PI * 1e-4).abs() < 1e-12);
    }
}
