//! Sweep runner: dispatches one job per (SNR point, curve) to a worker pool,
//! assembles rows in grid order, and writes the CSV/manifest outputs.
//!
//! Determinism: every job derives its RNG stream from (seed, grid index,
//! curve index), so results do not depend on scheduling; rerunning with the
//! same config and seed reproduces the results CSV byte for byte. Wall-clock
//! timings go to the manifest only.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use comb_core::air::{air_estimate, make_qam};
use comb_core::bounds::{
    awgn_capacity, lower_bound_at, maximize_lower_bound, minimize_upper_bound,
    upper_bound_objective, LowerBoundParams, McConfig,
};
use comb_core::channel::ChannelParams;
use comb_core::highsnr::{hsnr_gap, u_hsnr, HsnrConfig};
use comb_core::rngdist::RngStream;

use crate::config::{ConfigError, CurveKind, ExperimentConfig};

/// One output record of the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub snr_per_sub_db: f64,
    pub curve: CurveKind,
    pub bits_total: Option<f64>,
    pub bits_per_subchannel: Option<f64>,
    pub stderr: Option<f64>,
    pub error: Option<String>,
}

/// Per-row optimizer/runtime diagnostics (manifest only; keeping the CSV
/// free of timings preserves byte-identical reruns).
#[derive(Debug, Clone, Serialize)]
pub struct RowDiagnostics {
    pub snr_per_sub_db: f64,
    pub curve: CurveKind,
    pub params: Vec<(String, f64)>,
    pub converged: Option<bool>,
    pub evals: Option<usize>,
    pub wall_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub library_version: String,
    pub seed: u64,
    /// the fully resolved configuration, defaults included
    pub config: ExperimentConfig,
    pub rows: Vec<RowDiagnostics>,
}

pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub manifest: Manifest,
}

fn job_stream(seed: u64, grid_idx: usize, curve_idx: usize) -> RngStream {
    RngStream::new(seed, 1 + grid_idx as u64 * 64 + curve_idx as u64)
}

fn compute_row(
    cfg: &ExperimentConfig,
    ch: &ChannelParams,
    grid_idx: usize,
    curve_idx: usize,
) -> (ResultRow, RowDiagnostics) {
    let snr_db = cfg.snr_grid_db[grid_idx];
    let curve = cfg.curves[curve_idx];
    let rho = ch.m as f64 * 10f64.powf(snr_db / 10.0);
    let stream = job_stream(cfg.seed, grid_idx, curve_idx);
    let started = Instant::now();
    let m = ch.m as f64;

    let mut params = Vec::new();
    let mut converged = None;
    let mut evals = None;
    let outcome: Result<(f64, f64), String> = match curve {
        CurveKind::CAwgn => Ok((awgn_capacity(rho, ch.m), 0.0)),
        CurveKind::UpperHsnr => {
            let hc = HsnrConfig {
                channel: *ch,
                mc_samples: cfg.mc.hsnr_samples,
                stream,
            };
            u_hsnr(rho, &hc).map(|u| (u, 0.0)).map_err(|e| e.to_string())
        }
        CurveKind::LowerHsnr => {
            let hc = HsnrConfig {
                channel: *ch,
                mc_samples: cfg.mc.hsnr_samples,
                stream,
            };
            u_hsnr(rho, &hc)
                .and_then(|u| {
                    hsnr_gap(ch.m, cfg.mc.hsnr_samples, stream).map(|(gap, se)| (u - gap, se))
                })
                .map_err(|e| e.to_string())
        }
        CurveKind::Upper => match mc_config(cfg, stream).and_then(|mc| {
            minimize_upper_bound(rho, ch, &mc, &cfg.optimizer.to_core()).map(|b| (b, mc))
        }) {
            Ok((bound, mc)) => {
                params = bound.params.clone();
                converged = Some(bound.converged);
                evals = Some(bound.evals);
                let se = upper_stderr(rho, ch, &bound.params, &mc);
                Ok((bound.bits, se))
            }
            Err(e) => Err(e.to_string()),
        },
        CurveKind::Lower => match mc_config(cfg, stream).and_then(|mc| {
            maximize_lower_bound(rho, ch, &mc, &cfg.optimizer.to_core()).map(|b| (b, mc))
        }) {
            Ok((bound, mc)) => {
                params = bound.params.clone();
                converged = Some(bound.converged);
                evals = Some(bound.evals);
                let se = lower_stderr(rho, ch, &bound.params, &mc);
                Ok((bound.bits, se))
            }
            Err(e) => Err(e.to_string()),
        },
        CurveKind::AirQam(order) => make_qam(order)
            .and_then(|c| air_estimate(&c, ch, rho, &cfg.trellis.to_core(), stream))
            .map(|est| (est.bits_total, est.stderr * m))
            .map_err(|e| e.to_string()),
    };

    let wall_ms = started.elapsed().as_millis();
    let row = match outcome {
        Ok((bits_total, stderr)) => ResultRow {
            snr_per_sub_db: snr_db,
            curve,
            bits_total: Some(bits_total),
            bits_per_subchannel: Some(bits_total / m),
            stderr: Some(stderr / m),
            error: None,
        },
        Err(msg) => ResultRow {
            snr_per_sub_db: snr_db,
            curve,
            bits_total: None,
            bits_per_subchannel: None,
            stderr: None,
            error: Some(msg),
        },
    };
    let diag = RowDiagnostics {
        snr_per_sub_db: snr_db,
        curve,
        params,
        converged,
        evals,
        wall_ms,
    };
    (row, diag)
}

fn mc_config(cfg: &ExperimentConfig, stream: RngStream) -> Result<McConfig, comb_core::bounds::BoundError> {
    let mut mc = McConfig::new(cfg.mc.n_samples, stream)?;
    mc.n_search = cfg.mc.n_search.max(10_000);
    mc.k_nn = cfg.mc.k_nn;
    Ok(mc)
}

fn param(params: &[(String, f64)], name: &str) -> Option<f64> {
    params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
}

// spread of two half-sample evaluations at the returned optimum
fn upper_stderr(rho: f64, ch: &ChannelParams, params: &[(String, f64)], mc: &McConfig) -> f64 {
    let (Some(lambda), Some(a0), Some(a1)) = (
        param(params, "lambda"),
        param(params, "alpha0"),
        param(params, "alpha1"),
    ) else {
        return f64::NAN;
    };
    let mut alpha = vec![a0, a1];
    if ch.m > 2 {
        let rest = param(params, "alpha2").unwrap_or(1.0);
        alpha.extend(std::iter::repeat(rest).take(ch.m - 2));
    }
    let mut s = vec![
        param(params, "s0").unwrap_or(0.0),
        param(params, "s1").unwrap_or(0.0),
    ];
    if ch.m > 2 {
        let t = param(params, "s2").unwrap_or(0.0);
        s.extend(std::iter::repeat(t).take(ch.m - 2));
    }
    let n_half = mc.n_samples / 2;
    let eval = |tag: u64| {
        upper_bound_objective(
            rho,
            ch,
            lambda,
            &alpha,
            &s,
            n_half,
            mc.k_nn,
            mc.stream.substream(0xE0 + tag),
        )
    };
    match (eval(0), eval(1)) {
        (Ok(a), Ok(b)) => (a - b).abs() / 2.0,
        _ => f64::NAN,
    }
}

fn lower_stderr(rho: f64, ch: &ChannelParams, params: &[(String, f64)], mc: &McConfig) -> f64 {
    let (Some(mu), Some(gamma), Some(a0), Some(a1)) = (
        param(params, "mu"),
        param(params, "gamma"),
        param(params, "alpha0"),
        param(params, "alpha1"),
    ) else {
        return f64::NAN;
    };
    let mut alpha = vec![a0, a1];
    if ch.m > 2 {
        let rest = param(params, "alpha_rest").unwrap_or(1.0);
        alpha.extend(std::iter::repeat(rest).take(ch.m - 2));
    }
    let lb = LowerBoundParams { mu, alpha, gamma };
    let n_half = mc.n_samples / 2;
    let eval = |tag: u64| {
        lower_bound_at(rho, ch, &lb, n_half, mc.k_nn, mc.stream.substream(0xD0 + tag))
            .map(|e| e.bits)
    };
    match (eval(0), eval(1)) {
        (Ok(a), Ok(b)) => (a - b).abs() / 2.0,
        _ => f64::NAN,
    }
}

/// Run the configured sweep. Jobs execute on the rayon pool; rows come back
/// in grid-major order regardless of completion order. Per-row failures are
/// recorded in the row's error field rather than aborting the sweep.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ConfigError> {
    cfg.validate()?;
    let ch = cfg.channel.to_params()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.snr_grid_db.len())
        .flat_map(|g| (0..cfg.curves.len()).map(move |c| (g, c)))
        .collect();
    let results: Vec<(ResultRow, RowDiagnostics)> = jobs
        .par_iter()
        .map(|&(g, c)| compute_row(cfg, &ch, g, c))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut diags = Vec::with_capacity(results.len());
    for (row, diag) in results {
        rows.push(row);
        diags.push(diag);
    }
    Ok(ExperimentOutput {
        rows,
        manifest: Manifest {
            schema_version: 1,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            config: cfg.clone(),
            rows: diags,
        },
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

/// Serialize the result rows as CSV.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("snr_per_sub_db,curve,bits_total,bits_per_subchannel,stderr,error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.snr_per_sub_db,
            r.curve.name(),
            fmt_opt(r.bits_total),
            fmt_opt(r.bits_per_subchannel),
            fmt_opt(r.stderr),
            r.error.clone().unwrap_or_default()
        ));
    }
    out
}

/// One CSV per curve with columns (snr_per_sub_db, bits_per_subchannel,
/// stderr); rows with errors are skipped, so an all-failed curve leaves a
/// header-only file.
pub fn emit_figure_data(rows: &[ResultRow]) -> Vec<(String, String)> {
    let mut curves: Vec<CurveKind> = Vec::new();
    for r in rows {
        if !curves.contains(&r.curve) {
            curves.push(r.curve);
        }
    }
    curves
        .into_iter()
        .map(|curve| {
            let mut text = String::from("snr_per_sub_db,bits_per_subchannel,stderr\n");
            for r in rows.iter().filter(|r| r.curve == curve && r.error.is_none()) {
                text.push_str(&format!(
                    "{},{},{}\n",
                    r.snr_per_sub_db,
                    fmt_opt(r.bits_per_subchannel),
                    fmt_opt(r.stderr)
                ));
            }
            (format!("{}.csv", curve.file_stem()), text)
        })
        .collect()
}

/// Write results.csv, the per-curve files, and manifest.json into `dir`.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<(), ConfigError> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join("results.csv"))?;
    f.write_all(results_csv(&out.rows).as_bytes())?;
    let curves_dir = dir.join("curves");
    std::fs::create_dir_all(&curves_dir)?;
    for (name, text) in emit_figure_data(&out.rows) {
        let mut f = std::fs::File::create(curves_dir.join(name))?;
        f.write_all(text.as_bytes())?;
    }
    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    f.write_all(serde_json::to_string_pretty(&out.manifest)?.as_bytes())?;
    Ok(())
}
