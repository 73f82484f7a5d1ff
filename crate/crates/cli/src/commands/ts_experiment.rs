use clap::Args;
use neighborly::tslatent::{run_ts_trial, TsExperimentConfig, TsMethod};
use neighborly::par;
use serde_json::json;

use crate::error::{usage, CliResult};
use crate::report::Report;

#[derive(Debug, Clone, Args)]
pub struct TsExperimentArgs {
    /// Latent sources.
    #[arg(long, default_value_t = 20)]
    pub r: usize,
    /// Training-set size as a multiple of `r ln r`.
    #[arg(long, default_value_t = 8.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Largest time shift.
    #[arg(long, default_value_t = 20)]
    pub dmax: usize,
    /// Observed horizons to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,40,80,150")]
    pub horizons: Vec<usize>,
    /// Keep only horizons up to this one, and add it if missing.
    #[arg(long)]
    pub tmax: Option<usize>,
    /// Kernel bandwidth; twice --sigma when omitted.
    #[arg(long)]
    pub h: Option<f64>,
    /// Vote ratio needed to answer label 1.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Width of the Gaussian smoothing applied to the sources.
    #[arg(long, default_value_t = 6.0)]
    pub smooth_scale: f64,
    #[arg(long, default_value_t = 200)]
    pub n_test: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

impl TsExperimentArgs {
    pub fn config(&self) -> CliResult<TsExperimentConfig> {
        let mut horizons = self.horizons.clone();
        if let Some(t) = self.tmax {
            horizons.retain(|&h| h <= t);
            if !horizons.contains(&t) {
                horizons.push(t);
            }
        }
        horizons.sort_unstable();
        horizons.dedup();
        if horizons.is_empty() || horizons[0] == 0 {
            return Err(usage("horizons must be positive"));
        }
        if self.trials == 0 {
            return Err(usage("--trials must be at least 1"));
        }
        Ok(TsExperimentConfig {
            r: self.r,
            beta: self.beta,
            sigma: self.sigma,
            max_shift: self.dmax,
            smooth_scale: self.smooth_scale,
            horizons,
            h: self.h,
            tau: self.tau,
            n_test: self.n_test,
            trials: self.trials,
        })
    }
}

pub fn run(args: &TsExperimentArgs, report: &mut Report) -> CliResult<()> {
    let cfg = args.config()?;
    let seed = report.seed();
    report.emit(json!({
        "record": "config",
        "r": cfg.r,
        "n_train": cfg.n_train(),
        "n_test": cfg.n_test,
        "sigma": cfg.sigma,
        "dmax": cfg.max_shift,
        "h": cfg.bandwidth(),
        "tau": cfg.tau,
        "trials": cfg.trials,
    }))?;
    let results = par::map_indexed(cfg.trials, |t| run_ts_trial(&cfg, seed, t))
        .into_iter()
        .collect::<neighborly::Result<Vec<_>>>()?;
    for res in &results {
        for (j, &horizon) in cfg.horizons.iter().enumerate() {
            for method in TsMethod::ALL {
                report.emit(json!({
                    "record": "trial",
                    "trial": res.trial,
                    "horizon": horizon,
                    "method": method.name(),
                    "error_rate": res.error_rate(method, j),
                }))?;
            }
        }
    }
    for (j, &horizon) in cfg.horizons.iter().enumerate() {
        for method in TsMethod::ALL {
            let rates: Vec<f64> = results.iter().map(|r| r.error_rate(method, j)).collect();
            let mean = rates.iter().sum::<f64>() / rates.len() as f64;
            let var = rates.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / rates.len().max(2).saturating_sub(1) as f64;
            report.emit(json!({
                "record": "summary",
                "horizon": horizon,
                "method": method.name(),
                "mean_error": mean,
                "std_error": var.sqrt(),
                "trials": rates.len(),
            }))?;
        }
    }
    Ok(())
}
