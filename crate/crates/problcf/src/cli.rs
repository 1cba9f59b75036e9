//! Command-line interface.
//!
//! Five subcommands cover the workflow: `fit` calibrates a model from a
//! campaign CSV, `curve` tabulates life quantiles (optionally for a meshed
//! component), `diagnose` runs the goodness-of-fit battery, `simulate`
//! draws synthetic campaigns, and `bootstrap` wraps a fit with resampling
//! intervals. Everything run-specific lives in a TOML config; `--seed`,
//! `--out-dir` and `--strain-unit` override it per invocation.
//!
//! Output artifacts carry a schema version and the tool version, and never
//! a timestamp: running the same command on the same inputs must produce
//! byte-identical files.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{parametric_bootstrap, BootstrapOptions, BootstrapResult, LifeQuery};
use crate::calibration::{fit_mle, FitResult};
use crate::campaign::Campaign;
use crate::cmb::MaterialModel;
use crate::config::RunConfig;
use crate::diagnostics::{diagnose, DiagnoseOptions, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::io::{
    read_campaign, read_mesh, write_campaign_csv, write_curve_csv, write_interval_csv,
    write_json, CurveRow, IntervalRow, StrainUnit,
};
use crate::simulate::{sample_campaign, CampaignDesign};
use crate::surface::mesh_life_distribution;
use crate::{SCHEMA_VERSION, VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "problcf",
    version,
    about = "Probabilistic low-cycle-fatigue life modeling",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "problcf.toml")]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the config's (or design's) seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Unit of strain columns in input files.
    #[arg(long, global = true, value_enum)]
    strain_unit: Option<StrainUnit>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate the material parameters from a campaign CSV.
    Fit {
        /// Campaign CSV
        /// (specimen_id,strain_amplitude,cycles_to_initiation,gauge_area_mm2).
        campaign: PathBuf,
    },
    /// Tabulate life quantiles over the [curve] grid of the config.
    Curve {
        /// Take the model from a fit artifact instead of [material].
        #[arg(long)]
        model: Option<PathBuf>,
        /// Also evaluate the first-crack distribution of a meshed component
        /// (element_id,area_mm2,strain_amplitude).
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Check a model against a campaign (KS, Q-Q, strain trend).
    Diagnose {
        campaign: PathBuf,
        /// Take the model from a fit artifact instead of [material].
        #[arg(long)]
        model: Option<PathBuf>,
        /// Re-estimate the quotient Weibull instead of using the fitted
        /// shape with scale 1.
        #[arg(long)]
        refit_shape: bool,
    },
    /// Draw a synthetic campaign from a model under a design JSON.
    Simulate {
        /// Design JSON: {"rows": [{"strain_amplitude", "gauge_area_mm2",
        /// "replicates"}], "seed"}.
        design: PathBuf,
        /// Take the model from a fit artifact instead of [material].
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Fit a campaign, then bootstrap intervals over the [curve] grid.
    Bootstrap {
        campaign: PathBuf,
        /// Override [bootstrap] replicates.
        #[arg(long)]
        replicates: Option<usize>,
    },
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = RunConfig::from_path(&cli.config)
        .map_err(|e| annotate_config_error(e, &cli.config))?;
    if let Some(out_dir) = cli.out_dir {
        config.out_dir = Some(out_dir);
    }
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(unit) = cli.strain_unit {
        config.strain_unit = Some(unit);
    }
    let out_dir = config.out_dir();
    std::fs::create_dir_all(&out_dir)?;

    match cli.command {
        Command::Fit { campaign } => cmd_fit(&config, &campaign, &out_dir),
        Command::Curve { model, mesh } => {
            cmd_curve(&config, model.as_deref(), mesh.as_deref(), &out_dir)
        }
        Command::Diagnose {
            campaign,
            model,
            refit_shape,
        } => cmd_diagnose(&config, &campaign, model.as_deref(), refit_shape, &out_dir),
        Command::Simulate { design, model } => {
            cmd_simulate(&config, &design, model.as_deref(), cli.seed, &out_dir)
        }
        Command::Bootstrap {
            campaign,
            replicates,
        } => cmd_bootstrap(&config, &campaign, replicates, &out_dir),
    }
}

fn annotate_config_error(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::InvalidParameter(format!(
            "cannot read config {}: {io} (pass --config)",
            path.display()
        )),
        other => other,
    }
}

/// `fit` artifact (`fit.json`).
#[derive(Debug, Serialize, Deserialize)]
struct FitArtifact {
    schema_version: u32,
    tool_version: String,
    command: String,
    input: String,
    records: usize,
    model: MaterialModel,
    log_likelihood: f64,
    converged: bool,
    iterations: usize,
    warnings: Vec<String>,
    record_scales: Vec<RecordScale>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordScale {
    specimen_id: String,
    eta: f64,
}

fn fit_artifact(input: &Path, campaign: &Campaign, fit: &FitResult) -> FitArtifact {
    FitArtifact {
        schema_version: SCHEMA_VERSION,
        tool_version: VERSION.to_string(),
        command: "fit".into(),
        input: input.display().to_string(),
        records: campaign.len(),
        model: fit.model,
        log_likelihood: fit.log_likelihood,
        converged: fit.converged,
        iterations: fit.iterations,
        warnings: fit.warnings.clone(),
        record_scales: campaign
            .records
            .iter()
            .zip(&fit.record_scales)
            .map(|(r, &eta)| RecordScale {
                specimen_id: r.specimen_id.clone(),
                eta,
            })
            .collect(),
    }
}

fn cmd_fit(config: &RunConfig, campaign_path: &Path, out_dir: &Path) -> Result<()> {
    let campaign = read_campaign(campaign_path, config.strain_unit())?;
    let fit_config = config.fit_config()?;
    let fit = fit_mle(&campaign, &fit_config)?;
    let artifact = fit_artifact(campaign_path, &campaign, &fit);
    let path = out_dir.join("fit.json");
    write_json(&path, &artifact)?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "fit: {} records at {} strain level(s); wrote {}",
        campaign.len(),
        campaign.strain_levels().len(),
        path.display()
    );
    let p = &fit.model.cmb;
    for (name, value) in [
        ("E (MPa)", format!("{}", p.elastic_modulus)),
        ("sigma_f' (MPa)", format!("{:.4}", p.sigma_f)),
        ("b", format!("{:.6}", p.b)),
        ("eps_f'", format!("{:.6}", p.eps_f)),
        ("c", format!("{:.6}", p.c)),
        ("m", format!("{:.4}", fit.model.m)),
        ("a_ref (mm^2)", format!("{}", fit.model.a_ref)),
        ("log-likelihood", format!("{:.4}", fit.log_likelihood)),
        ("iterations", format!("{}", fit.iterations)),
        ("converged", format!("{}", fit.converged)),
    ] {
        println!("  {name:<16} {value}");
    }
    if !fit.converged {
        return Err(Error::NonConvergence(format!(
            "fit did not satisfy the gradient criterion; {} documents the \
             best point found",
            path.display()
        )));
    }
    Ok(())
}

/// Model source for evaluating subcommands: a fit artifact or `[material]`.
fn load_model(config: &RunConfig, model_path: Option<&Path>) -> Result<MaterialModel> {
    match model_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            #[derive(Deserialize)]
            struct Carrier {
                model: MaterialModel,
            }
            let carrier: Carrier = serde_json::from_str(&text).map_err(|e| {
                Error::schema(
                    e.line() as u64,
                    format!("{}: not a fit artifact: {e}", path.display()),
                )
            })?;
            carrier.model.cmb.validate()?;
            MaterialModel::new(carrier.model.cmb, carrier.model.m, carrier.model.a_ref)
        }
        None => config.material_model(),
    }
}

/// `curve --mesh` artifact (`mesh_distribution.json`).
#[derive(Debug, Serialize)]
struct MeshArtifact {
    schema_version: u32,
    tool_version: String,
    command: String,
    input: String,
    elements: usize,
    total_area_mm2: f64,
    eta: f64,
    m: f64,
    median: f64,
    quantiles: Vec<MeshQuantile>,
}

#[derive(Debug, Serialize)]
struct MeshQuantile {
    probability: f64,
    cycles: f64,
}

/// Sidecar describing a CSV artifact.
#[derive(Debug, Serialize)]
struct MetaArtifact {
    schema_version: u32,
    tool_version: String,
    command: String,
    inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    rows: usize,
}

fn write_meta(
    csv_path: &Path,
    command: &str,
    inputs: &[&Path],
    seed: Option<u64>,
    rows: usize,
) -> Result<()> {
    let meta = MetaArtifact {
        schema_version: SCHEMA_VERSION,
        tool_version: VERSION.to_string(),
        command: command.into(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        seed,
        rows,
    };
    write_json(&csv_path.with_extension("meta.json"), &meta)
}

/// Writes a header plus string rows as CSV.
fn write_plain_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    writer
        .write_record(header)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for row in rows {
        writer
            .write_record(&row)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_curve(
    config: &RunConfig,
    model_path: Option<&Path>,
    mesh_path: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let model = load_model(config, model_path)?;
    let grid = config.curve_grid()?;
    let mut rows = Vec::new();
    for &strain in &grid.strains {
        for &area in &grid.areas_mm2 {
            let dist = model.life_distribution(strain, area)?;
            for &quantile in &grid.quantiles {
                rows.push(CurveRow {
                    strain,
                    area_mm2: area,
                    quantile,
                    cycles: dist.quantile(quantile)?,
                });
            }
        }
    }
    let csv_path = out_dir.join("quantile_curve.csv");
    write_curve_csv(&csv_path, &rows)?;
    let mut inputs: Vec<&Path> = Vec::new();
    if let Some(p) = model_path {
        inputs.push(p);
    }
    write_meta(&csv_path, "curve", &inputs, None, rows.len())?;
    println!(
        "curve: {} rows ({} strains x {} areas x {} quantiles); wrote {}",
        rows.len(),
        grid.strains.len(),
        grid.areas_mm2.len(),
        grid.quantiles.len(),
        csv_path.display()
    );

    if let Some(mesh_path) = mesh_path {
        let mesh = read_mesh(mesh_path, config.strain_unit())?;
        let dist = mesh_life_distribution(&model, &mesh)?;
        let artifact = MeshArtifact {
            schema_version: SCHEMA_VERSION,
            tool_version: VERSION.to_string(),
            command: "curve".into(),
            input: mesh_path.display().to_string(),
            elements: mesh.elements.len(),
            total_area_mm2: mesh.total_area(),
            eta: dist.eta,
            m: dist.m,
            median: dist.median(),
            quantiles: grid
                .quantiles
                .iter()
                .map(|&probability| {
                    Ok(MeshQuantile {
                        probability,
                        cycles: dist.quantile(probability)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let json_path = out_dir.join("mesh_distribution.json");
        write_json(&json_path, &artifact)?;

        // survival table for plotting: 200 log-spaced points across the
        // central 99.8% of the distribution
        let (lo, hi) = (dist.quantile(0.001)?, dist.quantile(0.999)?);
        let survival_rows: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = i as f64 / 199.0;
                let n = (lo.ln() + t * (hi.ln() - lo.ln())).exp();
                (n, dist.survival(n))
            })
            .collect();
        let survival_path = out_dir.join("mesh_survival.csv");
        write_plain_csv(
            &survival_path,
            &["cycles", "survival"],
            survival_rows
                .iter()
                .map(|(n, s)| vec![format!("{n}"), format!("{s}")]),
        )?;
        println!(
            "mesh: {} elements, first-crack scale {:.1} cycles (shape {:.3}); wrote {} and {}",
            mesh.elements.len(),
            dist.eta,
            dist.m,
            json_path.display(),
            survival_path.display()
        );
    }
    Ok(())
}

/// `diagnose` artifact (`diagnostics.json`).
#[derive(Debug, Serialize)]
struct DiagnoseArtifact {
    schema_version: u32,
    tool_version: String,
    command: String,
    input: String,
    seed: u64,
    permutations: usize,
    report: DiagnosticsReport,
}

fn cmd_diagnose(
    config: &RunConfig,
    campaign_path: &Path,
    model_path: Option<&Path>,
    refit_flag: bool,
    out_dir: &Path,
) -> Result<()> {
    let campaign = read_campaign(campaign_path, config.strain_unit())?;
    let model = load_model(config, model_path)?;
    let section = config.diagnostics.clone().unwrap_or_default();
    let opts = DiagnoseOptions {
        refit_shape: refit_flag || section.refit_shape.unwrap_or(false),
        permutations: section.permutations.unwrap_or(10_000),
        seed: config.seed(),
    };
    let report = diagnose(&model, &campaign, &opts)?;
    let artifact = DiagnoseArtifact {
        schema_version: SCHEMA_VERSION,
        tool_version: VERSION.to_string(),
        command: "diagnose".into(),
        input: campaign_path.display().to_string(),
        seed: opts.seed,
        permutations: opts.permutations,
        report,
    };
    let path = out_dir.join("diagnostics.json");
    write_json(&path, &artifact)?;
    let report = &artifact.report;

    // flat tables for plotting tools that won't dig into the JSON
    let quotients_path = out_dir.join("quotients.csv");
    write_plain_csv(
        &quotients_path,
        &["specimen_id", "strain_amplitude", "quotient"],
        report.quotients.iter().map(|q| {
            vec![
                q.specimen_id.clone(),
                format!("{}", q.strain_amplitude),
                format!("{}", q.quotient),
            ]
        }),
    )?;
    let qq_path = out_dir.join("qq_points.csv");
    write_plain_csv(
        &qq_path,
        &["probability", "theoretical", "empirical"],
        report.qq.iter().map(|p| {
            vec![
                format!("{}", p.probability),
                format!("{}", p.theoretical),
                format!("{}", p.empirical),
            ]
        }),
    )?;

    let trend = match &report.trend {
        Some(t) => format!("trend rho {:.3} (p {:.4})", t.rho, t.p_value),
        None => "trend skipped (single strain level)".into(),
    };
    println!(
        "diagnose: {} quotients, KS D {:.4} (p {:.4}), {}; wrote {}, {} and {}",
        report.quotients.len(),
        report.ks.statistic,
        report.ks.p_value,
        trend,
        path.display(),
        quotients_path.display(),
        qq_path.display()
    );
    Ok(())
}

fn cmd_simulate(
    config: &RunConfig,
    design_path: &Path,
    model_path: Option<&Path>,
    seed_flag: Option<u64>,
    out_dir: &Path,
) -> Result<()> {
    let model = load_model(config, model_path)?;
    let text = std::fs::read_to_string(design_path)?;
    let mut design: CampaignDesign = serde_json::from_str(&text).map_err(|e| {
        Error::schema(
            e.line() as u64,
            format!("{}: invalid design: {e}", design_path.display()),
        )
    })?;
    // the design file owns its seed; an explicit --seed beats it
    if let Some(seed) = seed_flag {
        design.seed = seed;
    }
    let campaign = sample_campaign(&model, &design)?;
    let csv_path = out_dir.join("campaign.csv");
    write_campaign_csv(&csv_path, &campaign)?;
    write_meta(
        &csv_path,
        "simulate",
        &[design_path],
        Some(design.seed),
        campaign.len(),
    )?;
    println!(
        "simulate: {} specimens from {} design row(s), seed {}; wrote {}",
        campaign.len(),
        design.rows.len(),
        design.seed,
        csv_path.display()
    );
    Ok(())
}

/// `bootstrap` artifact (`bootstrap.json`).
#[derive(Debug, Serialize)]
struct BootstrapArtifact {
    schema_version: u32,
    tool_version: String,
    command: String,
    input: String,
    seed: u64,
    result: BootstrapResult,
}

fn cmd_bootstrap(
    config: &RunConfig,
    campaign_path: &Path,
    replicates_flag: Option<usize>,
    out_dir: &Path,
) -> Result<()> {
    let campaign = read_campaign(campaign_path, config.strain_unit())?;
    let fit_config = config.fit_config()?;
    let fit = fit_mle(&campaign, &fit_config)?;
    let fit_path = out_dir.join("fit.json");
    write_json(&fit_path, &fit_artifact(campaign_path, &campaign, &fit))?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    if !fit.converged {
        return Err(Error::NonConvergence(
            "base fit did not satisfy the gradient criterion; not \
             bootstrapping from a doubtful optimum"
                .into(),
        ));
    }

    let grid = config.curve_grid()?;
    let mut queries = Vec::new();
    for &strain in &grid.strains {
        for &area in &grid.areas_mm2 {
            for &quantile in &grid.quantiles {
                queries.push(LifeQuery {
                    strain_amplitude: strain,
                    gauge_area_mm2: area,
                    quantile,
                });
            }
        }
    }
    let section = config.bootstrap.clone().unwrap_or_default();
    let opts = BootstrapOptions {
        replicates: replicates_flag
            .or(section.replicates)
            .unwrap_or(BootstrapOptions::default().replicates),
        level: section.level.unwrap_or(BootstrapOptions::default().level),
        seed: config.seed(),
        keep_models: false,
    };
    let result = parametric_bootstrap(&campaign, &fit_config, &fit.model, &queries, &opts)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let rows: Vec<IntervalRow> = result
        .intervals
        .iter()
        .map(|iv| IntervalRow {
            strain: iv.query.strain_amplitude,
            area_mm2: iv.query.gauge_area_mm2,
            quantile: iv.query.quantile,
            lower: iv.lower,
            point: iv.point,
            upper: iv.upper,
        })
        .collect();
    let csv_path = out_dir.join("bootstrap.csv");
    write_interval_csv(&csv_path, &rows)?;
    write_meta(
        &csv_path,
        "bootstrap",
        &[campaign_path],
        Some(opts.seed),
        rows.len(),
    )?;
    let json_path = out_dir.join("bootstrap.json");
    write_json(
        &json_path,
        &BootstrapArtifact {
            schema_version: SCHEMA_VERSION,
            tool_version: VERSION.to_string(),
            command: "bootstrap".into(),
            input: campaign_path.display().to_string(),
            seed: opts.seed,
            result,
        },
    )?;
    println!(
        "bootstrap: {} interval(s) at level {} from {} replicate(s), seed {}; wrote {} and {}",
        rows.len(),
        opts.level,
        opts.replicates,
        opts.seed,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}
