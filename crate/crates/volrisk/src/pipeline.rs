//! The commands behind the binary. Each returns the files it would write;
//! [`write_artifacts`] is the single writer.

use std::path::Path;

use rayon::prelude::*;
use volrisk_core::dcc::{fit_dcc_with, DccParams};
use volrisk_core::distributions::{InnovationDist, JointDist};
use volrisk_core::egarch::{fit_egarch_with, fit_garch11_with, EgarchFit, EgarchParams, FitOptions, Garch11Fit, MeanParams, MeanSpec};
use volrisk_core::optimize::Tolerances;
use volrisk_core::market_data::{align_panel, log_returns, PriceSeries, ReturnPanel, ReturnSeries};
use volrisk_core::risk::{asset_risk, drawdown};
use volrisk_core::simulate::{equicorrelation, simulate_dcc_egarch};
use volrisk_core::stats::{adf_test, describe, jarque_bera, kpss_test, pearson_correlation, BandwidthPolicy, LagPolicy};

use crate::config::{AssetConfig, ConfigError, RunConfig, VarianceModel};
use crate::ingest::{load_price_series, IngestError};
use crate::output::{self, Artifact, SummaryBlock};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{symbol}: {source}")]
    Ingest {
        symbol: String,
        #[source]
        source: IngestError,
    },
    #[error("{context}: {source}")]
    Data {
        context: String,
        #[source]
        source: volrisk_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    /// 3 for configuration problems, 2 for everything about the inputs.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 3,
            _ => 2,
        }
    }
}

fn data_err(context: impl Into<String>) -> impl FnOnce(volrisk_core::Error) -> AppError {
    let context = context.into();
    move |source| AppError::Data { context, source }
}

/// Files produced by a command plus whether every model converged.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub all_converged: bool,
}

impl Outcome {
    fn files(artifacts: Vec<Artifact>) -> Self {
        Self { artifacts, all_converged: true }
    }

    fn merge(mut self, other: Outcome) -> Self {
        self.artifacts.extend(other.artifacts);
        self.all_converged &= other.all_converged;
        self
    }
}

/// Prices and log returns of every configured asset, in config order.
pub struct Inputs {
    pub prices: Vec<PriceSeries>,
    pub returns: Vec<ReturnSeries>,
}

impl Inputs {
    pub fn symbols(&self) -> Vec<String> {
        self.returns.iter().map(|r| r.symbol().to_string()).collect()
    }

    /// Returns on the common calendar; a single asset is its own panel.
    pub fn panel(&self) -> Result<ReturnPanel, AppError> {
        if self.returns.len() == 1 {
            ReturnPanel::new(self.returns.clone()).map_err(data_err("panel"))
        } else {
            align_panel(&self.returns).map_err(data_err("aligning calendars"))
        }
    }
}

fn load_asset(a: &AssetConfig) -> Result<(PriceSeries, ReturnSeries), AppError> {
    let ingest = |source| AppError::Ingest { symbol: a.symbol.clone(), source };
    let prices = load_price_series(&a.symbol, &a.source, &a.columns).map_err(ingest)?;
    let returns = log_returns(&prices).map_err(|e| ingest(IngestError::Series(e)))?;
    log::info!("{}: {} prices, {} .. {}", a.symbol, prices.len(), prices.dates()[0], prices.dates()[prices.len() - 1]);
    Ok((prices, returns))
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, AppError> {
    let loaded: Vec<_> = cfg.assets.par_iter().map(load_asset).collect::<Result<_, _>>()?;
    let (prices, returns) = loaded.into_iter().unzip();
    Ok(Inputs { prices, returns })
}

/// Jarque–Bera and unit-root tables.
pub fn cmd_test(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, AppError> {
    let sig = cfg.tests.significance;
    let mut jb = Vec::new();
    let mut unit = Vec::new();
    for r in &inputs.returns {
        let sym = r.symbol().to_string();
        let st = describe(r, cfg.risk_free_rate).map_err(data_err(format!("{sym}: describe")))?;
        jb.push((sym.clone(), jarque_bera(&st, sig).map_err(data_err(format!("{sym}: Jarque-Bera")))?));
        unit.push((sym.clone(), adf_test(r, LagPolicy::Schwert, sig).map_err(data_err(format!("{sym}: ADF")))?));
        unit.push((sym.clone(), kpss_test(r, BandwidthPolicy::NeweyWest, sig).map_err(data_err(format!("{sym}: KPSS")))?));
    }
    let mut files = Vec::new();
    files.extend(output::test_table("jarque_bera", &jb));
    files.extend(output::test_table("unit_root", &unit));
    Ok(Outcome::files(files))
}

/// Descriptive statistics, correlation matrix and the test battery.
pub fn cmd_describe(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, AppError> {
    let mut rows = Vec::new();
    for r in &inputs.returns {
        let st = describe(r, cfg.risk_free_rate).map_err(data_err(format!("{}: describe", r.symbol())))?;
        rows.push((r.symbol().to_string(), st));
    }
    let mut files: Vec<Artifact> = output::stats_table(&rows).into();
    if inputs.returns.len() >= 2 {
        let panel = inputs.panel()?;
        let m = pearson_correlation(&panel).map_err(data_err("correlation"))?;
        files.extend(output::correlation_table(&inputs.symbols(), &m));
    } else {
        log::warn!("one asset: no correlation table");
    }
    Ok(Outcome::files(files).merge(cmd_test(cfg, inputs)?))
}

enum StageOne {
    Egarch(Vec<EgarchFit>),
    Garch(Vec<Garch11Fit>),
}

fn model_label(cfg: &RunConfig, mean: MeanSpec) -> String {
    let dist = serde_json::to_value(cfg.model.distribution).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    match cfg.model.variance {
        VarianceModel::Egarch => format!("ARMA({},{})-EGARCH(1,1), {dist}", mean.ar, mean.ma),
        VarianceModel::Garch11 => format!("GARCH(1,1), {dist}"),
    }
}

/// Stage-one fits per asset on the common calendar, then the joint DCC
/// fit when there are at least two assets.
pub fn cmd_fit(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, AppError> {
    let panel = inputs.panel()?;
    let family = cfg.model.distribution;
    let specs: Vec<(&ReturnSeries, MeanSpec)> =
        panel.series().iter().zip(&cfg.assets).map(|(r, a)| (r, cfg.mean_for(a))).collect();
    let fit_err = |r: &ReturnSeries| data_err(format!("{}: fit", r.symbol()));
    let tol = Tolerances { max_iter: cfg.model.max_iter, ..Tolerances::default() };
    let opts = FitOptions { tolerances: tol };
    let stage_one = match cfg.model.variance {
        VarianceModel::Egarch => StageOne::Egarch(
            specs.par_iter().map(|(r, m)| fit_egarch_with(r, *m, family, &opts).map_err(fit_err(r))).collect::<Result<_, _>>()?,
        ),
        VarianceModel::Garch11 => {
            StageOne::Garch(specs.par_iter().map(|(r, _)| fit_garch11_with(r, family, &opts).map_err(fit_err(r))).collect::<Result<_, _>>()?)
        }
    };

    let mut files = Vec::new();
    let mut blocks = Vec::new();
    let mut all_converged = true;
    let mut push_fit = |files: &mut Vec<Artifact>, label: &str, fit_json: Artifact, paths: String, symbol: &str, converged: bool| {
        if !converged {
            log::warn!("{symbol}: {label} fit did not converge");
        }
        all_converged &= converged;
        files.push(fit_json);
        files.push(Artifact { name: format!("fit_{}_paths.csv", output::file_stem(symbol)), contents: paths });
    };
    let labels: Vec<String> = specs.iter().map(|(_, m)| model_label(cfg, *m)).collect();
    let dcc = match &stage_one {
        StageOne::Egarch(fits) => {
            for ((f, (r, _)), label) in fits.iter().zip(&specs).zip(&labels) {
                let doc = Artifact::json(format!("fit_{}.json", output::file_stem(&f.symbol)), &output::fit_doc(f, label));
                push_fit(&mut files, label, doc, output::fit_paths_csv(f, r.values()), &f.symbol, f.converged);
            }
            (fits.len() >= 2).then(|| fit_dcc_with(fits, cfg.model.joint, tol))
        }
        StageOne::Garch(fits) => {
            for ((f, (r, _)), label) in fits.iter().zip(&specs).zip(&labels) {
                let doc = Artifact::json(format!("fit_{}.json", output::file_stem(&f.symbol)), &output::fit_doc(f, label));
                push_fit(&mut files, label, doc, output::fit_paths_csv(f, r.values()), &f.symbol, f.converged);
            }
            (fits.len() >= 2).then(|| fit_dcc_with(fits, cfg.model.joint, tol))
        }
    };
    let dcc = dcc.transpose().map_err(data_err("joint DCC fit"))?;

    macro_rules! stage_blocks {
        ($fits:expr) => {
            for (f, label) in $fits.iter().zip(&labels) {
                blocks.push(SummaryBlock {
                    title: format!("{}: {}", f.symbol, label),
                    estimates: &f.estimates,
                    loglik: f.loglik,
                    aic_per_obs: f.aic_per_obs,
                    nobs: f.nobs,
                    converged: f.converged,
                });
            }
        };
    }
    match &stage_one {
        StageOne::Egarch(fits) => stage_blocks!(fits),
        StageOne::Garch(fits) => stage_blocks!(fits),
    }
    if let Some(d) = &dcc {
        if !d.converged {
            log::warn!("joint DCC fit did not converge");
        }
        all_converged &= d.converged;
        files.extend(output::dcc_tables(d, cfg.export_paths));
        blocks.push(SummaryBlock {
            title: format!("joint DCC(1,1): {}", d.symbols.join(", ")),
            estimates: &d.estimates,
            loglik: d.loglik_joint,
            aic_per_obs: d.aic_per_obs,
            nobs: d.nobs,
            converged: d.converged,
        });
    }
    files.push(Artifact { name: "summary.txt".into(), contents: output::summary_text(&blocks) });
    Ok(Outcome { artifacts: files, all_converged })
}

/// VaR table per asset and period plus one drawdown file per asset.
pub fn cmd_risk(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, AppError> {
    let spec = cfg.risk_spec();
    let cells: Vec<_> = inputs
        .returns
        .par_iter()
        .map(|r| {
            let mut warnings = Vec::new();
            asset_risk(r, &spec, &mut warnings).map(|rows| (r.symbol().to_string(), rows, warnings)).map_err(data_err(format!("{}: risk", r.symbol())))
        })
        .collect::<Result<_, _>>()?;
    let mut report = std::collections::BTreeMap::new();
    let mut warnings = Vec::new();
    for (sym, rows, w) in cells {
        for msg in &w {
            log::warn!("{msg}");
        }
        warnings.extend(w);
        report.insert(sym, rows);
    }
    let mut files: Vec<Artifact> = output::risk_tables(&report, &warnings).into();
    for r in &inputs.returns {
        let dd = drawdown(r);
        files.push(Artifact { name: format!("drawdown_{}.csv", output::file_stem(r.symbol())), contents: output::drawdown_csv(&dd.series) });
    }
    Ok(Outcome::files(files))
}

/// `describe`, `fit` and `risk` in one run.
pub fn cmd_report(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, AppError> {
    let d = cmd_describe(cfg, inputs)?;
    let f = cmd_fit(cfg, inputs)?;
    let r = cmd_risk(cfg, inputs)?;
    Ok(d.merge(f).merge(r))
}

/// A seeded DCC-EGARCH panel as price CSVs, the true parameters, and a
/// config that points at the CSVs.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, AppError> {
    let s = &cfg.simulate;
    let asset = EgarchParams {
        mean: MeanParams::constant(0.0),
        omega: s.omega,
        a_mag: s.a_mag,
        xi: s.xi,
        b_pers: s.b_pers,
        dist: InnovationDist::StudentT { shape: s.shape },
    };
    let assets = vec![asset.clone(); s.assets];
    let dcc = DccParams::new(s.alpha, s.beta, JointDist::StudentT { shape: s.shape }).map_err(data_err("simulate"))?;
    let panel = simulate_dcc_egarch(&assets, &dcc, &equicorrelation(s.assets, s.rho), s.n, s.burn, cfg.seed)
        .map_err(data_err("simulate"))?;
    let mut files = Vec::new();
    let mut sim_cfg = RunConfig { seed: cfg.seed, output_dir: "out".into(), ..RunConfig::default() };
    sim_cfg.model.distribution = volrisk_core::distributions::DistFamily::StudentT;
    for (k, path) in panel.assets.iter().enumerate() {
        let symbol = format!("SIM{}", k + 1);
        let mut text = String::from("date,close\n");
        let mut log_p = 100f64.ln();
        text.push_str(&format!("{},{:.10}\n", s.start, 100.0));
        for (t, r) in path.returns.iter().enumerate() {
            log_p += r;
            let d = s.start + chrono::Days::new(t as u64 + 1);
            text.push_str(&format!("{d},{:.10}\n", log_p.exp()));
        }
        let name = format!("{symbol}.csv");
        sim_cfg.assets.push(AssetConfig { symbol, source: name.clone(), columns: Default::default(), mean: None });
        files.push(Artifact { name, contents: text });
    }
    #[derive(serde::Serialize)]
    struct Truth<'a> {
        seed: u64,
        asset: &'a EgarchParams,
        dcc: &'a DccParams,
        target_correlation: f64,
    }
    files.push(Artifact::json("simulate_truth.json", &Truth { seed: cfg.seed, asset: &asset, dcc: &dcc, target_correlation: s.rho }));
    let toml = toml::to_string(&sim_cfg).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    files.push(Artifact { name: "simulate.toml".into(), contents: toml });
    Ok(Outcome::files(files))
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), AppError> {
    let werr = |p: &Path| {
        let path = p.display().to_string();
        move |source| AppError::Write { path, source }
    };
    std::fs::create_dir_all(dir).map_err(werr(dir))?;
    for a in artifacts {
        let p = dir.join(&a.name);
        std::fs::write(&p, &a.contents).map_err(werr(&p))?;
        log::debug!("wrote {}", p.display());
    }
    Ok(())
}
