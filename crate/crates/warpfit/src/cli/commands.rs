use std::path::{Path, PathBuf};
use std::time::Instant;

use warpfit_core::discriminate::{cross_validate_pipeline, feature_rows, fold_assignment, CvReport, FeatureSet};
use warpfit_core::model::{e_step, fit_em_with, register_curve};
use warpfit_core::{cross_validate, fit_logistic, simulate, CvOptions, Curve, Executor, FitConfig, LogisticModel, SubjectEffects, TemplateModel};

use super::config::RunConfig;
use super::simulate::{SimulationSpec, TruthFile};
use super::{Cli, Command, CvArgs, FitArgs, FitFlags, PlotArgs, RegisterArgs, SimulateArgs};
use crate::error::{Error, Result};
use crate::exec::Rayon;
use crate::io::{
    load_dataset, read_json, read_model, save_dataset_json, write_cv_csv, write_cv_table, write_effects_csv, write_json, write_labels,
    write_long_csv, write_model, write_trace_csv,
};
use crate::manifest::RunManifest;
use crate::plot::{self, PlotKind};

pub const MODEL_FILE: &str = "model.json";
pub const EFFECTS_FILE: &str = "effects.json";

struct Context {
    config: RunConfig,
    seed_flag: Option<u64>,
    out: PathBuf,
    arguments: Vec<String>,
    exec: Rayon,
}

impl Context {
    fn manifest(&self, command: &str) -> RunManifest {
        let config = serde_json::to_value(&self.config).unwrap_or(serde_json::Value::Null);
        RunManifest::new(command, self.arguments.clone(), config, Some(self.config.seed))
    }
}

pub(super) fn dispatch(cli: Cli, arguments: Vec<String>) -> Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.fit.seed = config.seed;
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    let exec = if config.threads == 0 {
        Rayon::global()
    } else {
        Rayon::with_threads(config.threads).map_err(|e| Error::Validation(format!("cannot start {} threads: {e}", config.threads)))?
    };
    let mut ctx = Context { config, seed_flag: cli.seed, out: cli.out, arguments, exec };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, &a),
        Command::Fit(a) => {
            apply_flags(&mut ctx.config, &a.flags);
            cmd_fit(&ctx, &a)
        }
        Command::Register(a) => cmd_register(&ctx, &a),
        Command::Cv(a) => {
            apply_flags(&mut ctx.config, &a.flags);
            if let Some(r) = a.ridge {
                ctx.config.cv.ridge = r;
            }
            if let Some(k) = a.folds {
                ctx.config.cv.folds = k;
            }
            cmd_cv(&ctx, &a)
        }
        Command::Plot(a) => cmd_plot(&ctx, &a),
    }
}

fn apply_flags(config: &mut RunConfig, f: &FitFlags) {
    let fit = &mut config.fit;
    if let Some(t) = &f.tau0 {
        fit.tau0 = t.clone();
    }
    if let Some(k) = f.knots {
        fit.n_interior_knots = k;
    }
    if let Some(v) = f.max_iters {
        fit.max_em_iters = v;
    }
    if let Some(v) = f.min_iters {
        fit.min_em_iters = v;
    }
    if let Some(v) = f.tol {
        fit.em_tol = v;
    }
    if let Some(v) = f.quad {
        fit.quad_points_per_dim = v;
    }
    if let Some(m) = f.mode {
        fit.estep_mode = m.into();
    }
    if let Some(v) = f.warp_var {
        fit.initial_warp_var = v;
    }
    if f.truncate.is_some() {
        config.data.truncate = f.truncate;
    }
    if let Some(d) = f.downsample {
        config.data.downsample = d;
    }
}

fn cmd_simulate(ctx: &Context, a: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let spec: SimulationSpec = read_json(&a.spec)?;
    let sim_spec = spec.resolve(&a.spec, ctx.seed_flag, ctx.config.seed)?;
    let sim = simulate(&sim_spec)?;
    let out = &ctx.out;
    let mut manifest = ctx.manifest("simulate");
    manifest.seed = Some(sim_spec.seed);
    manifest.config = serde_json::to_value(&spec).unwrap_or_default();
    manifest.inputs.push(a.spec.clone());
    let csv = out.join("dataset.csv");
    write_long_csv(&csv, &sim.dataset.curves)?;
    manifest.outputs.push(csv);
    if let Some(labels) = &sim.dataset.labels {
        let ids: Vec<&str> = sim.dataset.curves.iter().map(|c| c.id.as_str()).collect();
        let path = out.join("labels.csv");
        write_labels(&path, &ids, labels)?;
        manifest.outputs.push(path);
    }
    let json = out.join("dataset.json");
    save_dataset_json(&json, &sim.dataset)?;
    let truth = out.join("truth.json");
    write_json(&truth, &TruthFile::new(&sim_spec.model, sim.truth))?;
    manifest.outputs.extend([json, truth]);
    manifest.write(out, start.elapsed())?;
    log::info!("simulated {} curves into {}", sim.dataset.len(), out.display());
    Ok(())
}

fn cmd_fit(ctx: &Context, a: &FitArgs) -> Result<()> {
    let dataset = load_dataset(&a.data, None)?;
    let prepared = ctx.config.prepare(&dataset, true)?;
    let ps = a.p.clone().unwrap_or_else(|| vec![ctx.config.fit.p]);
    if ps.is_empty() {
        return Err(Error::Validation("--p needs at least one component count".into()));
    }
    let nested = ps.len() > 1;
    let overall = Instant::now();
    for &p in &ps {
        let start = Instant::now();
        let dir = if nested { ctx.out.join(format!("p{p}")) } else { ctx.out.clone() };
        let mut config = ctx.config.clone();
        config.fit.p = p;
        log::info!("fitting p = {p} on {} curves", prepared.len());
        let fit = fit_em_with(&prepared.curves, &config.fit, &ctx.exec)?;
        if let Some(w) = fit.trace.windows(2).find(|w| w[1] < w[0] - 10.0 * config.fit.em_tol * w[0].abs().max(1.0)) {
            log::warn!("log-likelihood decreased from {} to {}", w[0], w[1]);
        }
        if !fit.diagnostics.flagged.is_empty() {
            log::warn!("{} subjects flagged for unconverged warp posteriors", fit.diagnostics.flagged.len());
        }
        let mut manifest = RunManifest::new("fit", ctx.arguments.clone(), serde_json::to_value(&config).unwrap_or_default(), Some(config.seed));
        manifest.inputs.push(a.data.clone());
        let files = [dir.join(MODEL_FILE), dir.join("trace.csv"), dir.join("effects.csv"), dir.join(EFFECTS_FILE), dir.join("diagnostics.json")];
        write_model(&files[0], &fit.model)?;
        write_trace_csv(&files[1], &fit.trace)?;
        write_effects_csv(&files[2], &fit.effects)?;
        write_json(&files[3], &fit.effects)?;
        write_json(&files[4], &fit.diagnostics)?;
        manifest.outputs.extend(files);
        manifest.write(&dir, start.elapsed())?;
        log::info!("p = {p}: log-likelihood {} after {} iterations", fit.diagnostics.final_loglik, fit.diagnostics.iterations);
    }
    if nested {
        let mut manifest = ctx.manifest("fit");
        manifest.inputs.push(a.data.clone());
        manifest.outputs = ps.iter().map(|p| ctx.out.join(format!("p{p}"))).collect();
        manifest.write(&ctx.out, overall.elapsed())?;
    }
    Ok(())
}

/// Posterior effects for every curve, under `config`'s E-step settings.
fn compute_effects(curves: &[Curve], model: &TemplateModel, config: &FitConfig, exec: &impl Executor) -> Result<Vec<SubjectEffects>> {
    let out = exec.map(curves.len(), |i| e_step(&curves[i], model, config).map(|s| s.effects));
    Ok(out.into_iter().collect::<std::result::Result<_, _>>()?)
}

fn cmd_register(ctx: &Context, a: &RegisterArgs) -> Result<()> {
    let start = Instant::now();
    let model = read_model(&a.fit.join(MODEL_FILE))?;
    let effects_path = a.fit.join(EFFECTS_FILE);
    let stored: Vec<SubjectEffects> = if effects_path.exists() { read_json(&effects_path)? } else { Vec::new() };
    let mut config = ctx.config.clone();
    config.data.truncate = Some(config.data.truncate.unwrap_or(model.interval().lo).max(model.interval().lo));
    let dataset = config.prepare(&load_dataset(&a.data, None)?, false)?;
    let missing: Vec<Curve> = dataset.curves.iter().filter(|c| !stored.iter().any(|e| e.id == c.id)).cloned().collect();
    let mut effects = stored;
    if !missing.is_empty() {
        log::info!("estimating warps for {} curves absent from the fit", missing.len());
        effects.extend(compute_effects(&missing, &model, &config.fit, &ctx.exec)?);
    }
    let registered = dataset
        .curves
        .iter()
        .map(|c| {
            let e = effects.iter().find(|e| e.id == c.id).expect("effects exist for every curve");
            register_curve(c, e, &model)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let path = ctx.out.join("registered.csv");
    write_long_csv(&path, &registered)?;
    let mut manifest = ctx.manifest("register");
    manifest.inputs.extend([a.data.clone(), a.fit.clone()]);
    manifest.outputs.push(path);
    manifest.write(&ctx.out, start.elapsed())?;
    Ok(())
}

fn find_model(dir: &Path, p: usize) -> Result<TemplateModel> {
    let nested = dir.join(format!("p{p}")).join(MODEL_FILE);
    let flat = dir.join(MODEL_FILE);
    let hint = || Error::Validation(format!("no fitted model with p = {p} under {}; run `warpfit fit --p {p} ...` there first", dir.display()));
    let model = if nested.exists() {
        read_model(&nested)?
    } else if flat.exists() {
        read_model(&flat)?
    } else {
        return Err(hint());
    };
    if model.p() != p {
        return Err(hint());
    }
    Ok(model)
}

fn cmd_cv(ctx: &Context, a: &CvArgs) -> Result<()> {
    let start = Instant::now();
    let dataset = load_dataset(&a.data, a.labels.as_deref())?;
    if dataset.labels.is_none() {
        return Err(Error::Validation("cross-validation needs labels; pass --labels <id,group CSV>".into()));
    }
    let prepared = ctx.config.prepare(&dataset, true)?;
    let labels = prepared.labels.clone().expect("labels survive preprocessing");
    let config = &ctx.config;
    let options = CvOptions { folds: config.cv.folds(config.seed), ridge: config.cv.ridge };
    let mut manifest = ctx.manifest("cv");
    manifest.inputs.push(a.data.clone());
    manifest.inputs.extend(a.labels.clone());
    let mut full_rows = Vec::new();
    let report = if a.full_pipeline {
        let mut rows = Vec::new();
        for &p in &a.p {
            let mut fit = config.fit.clone();
            fit.p = p;
            for features in feature_sets(p) {
                rows.push(cross_validate_pipeline(&prepared.curves, &labels, &fit, features, options, &ctx.exec)?);
            }
        }
        CvReport { fold_of: fold_assignment(prepared.len(), options.folds)?, rows }
    } else {
        let Some(dir) = &a.models else {
            return Err(Error::Validation("--models is required unless --full-pipeline is given; fit models with `warpfit fit --p 0,1,2 --out <dir>`".into()));
        };
        manifest.inputs.push(dir.clone());
        let mut sets = Vec::new();
        for &p in &a.p {
            let model = find_model(dir, p)?;
            let effects = compute_effects(&prepared.curves, &model, &config.fit, &ctx.exec)?;
            sets.push((p, feature_rows(&effects, &labels)?));
        }
        let report = cross_validate(&sets, options, &ctx.exec)?;
        full_rows = sets;
        report
    };
    for (p, rows) in &full_rows {
        for features in feature_sets(*p) {
            match fit_logistic(rows, features.includes_tau(), config.cv.ridge) {
                Ok(model) => {
                    let path = ctx.out.join(logistic_file(*p, features));
                    write_json(&path, &model)?;
                    manifest.outputs.push(path);
                }
                Err(e) => log::warn!("full-data logistic fit for p = {p}, {} failed: {e}", features.name()),
            }
        }
    }
    let files = [ctx.out.join("cv.csv"), ctx.out.join("cv_table.csv"), ctx.out.join("cv.json")];
    write_cv_csv(&files[0], &report)?;
    write_cv_table(&files[1], &report)?;
    write_json(&files[2], &report)?;
    manifest.outputs.extend(files);
    manifest.write(&ctx.out, start.elapsed())?;
    print_table(&report);
    Ok(())
}

fn feature_sets(p: usize) -> Vec<FeatureSet> {
    if p > 0 {
        vec![FeatureSet::Scores, FeatureSet::ScoresAndWarp]
    } else {
        vec![FeatureSet::ScoresAndWarp]
    }
}

/// File name of the full-data logistic model for one table cell.
pub fn logistic_file(p: usize, features: FeatureSet) -> String {
    format!("logistic_p{p}_{}.json", features.name())
}

fn print_table(report: &CvReport) {
    let mut ps: Vec<usize> = report.rows.iter().map(|r| r.p).collect();
    ps.dedup();
    println!("{:>3}  {:>12}  {:>12}", "p", "without tau", "with tau");
    let cell = |p, f| report.row(p, f).map_or("-".to_string(), |r| format!("{:.1}%", 100.0 * r.cmr));
    for p in ps {
        println!("{p:>3}  {:>12}  {:>12}", cell(p, FeatureSet::Scores), cell(p, FeatureSet::ScoresAndWarp));
    }
}

fn cmd_plot(ctx: &Context, a: &PlotArgs) -> Result<()> {
    let start = Instant::now();
    let need = |what: &Option<PathBuf>, flag: &str| -> Result<PathBuf> {
        what.clone().ok_or_else(|| Error::Validation(format!("plot kind '{}' needs {flag}", a.kind.name())))
    };
    let mut manifest = ctx.manifest("plot");
    let figure = match a.kind {
        PlotKind::Curves => {
            let data = need(&a.data, "--data")?;
            manifest.inputs.push(data.clone());
            plot::curves_figure(&load_dataset(&data, None)?.curves)
        }
        PlotKind::Registered => {
            let (data, fit) = (need(&a.data, "--data")?, need(&a.fit, "--fit")?);
            manifest.inputs.extend([data.clone(), fit.clone()]);
            let model = read_model(&fit.join(MODEL_FILE))?;
            let effects: Vec<SubjectEffects> = read_json(&fit.join(EFFECTS_FILE))?;
            let mut config = ctx.config.clone();
            config.data.truncate = Some(config.data.truncate.unwrap_or(model.interval().lo).max(model.interval().lo));
            let dataset = config.prepare(&load_dataset(&data, None)?, false)?;
            plot::registered_figure(&dataset.curves, &effects, &model)?
        }
        PlotKind::Components => {
            let fit = need(&a.fit, "--fit")?;
            manifest.inputs.push(fit.clone());
            plot::components_figure(&read_model(&fit.join(MODEL_FILE))?, a.scale)?
        }
        PlotKind::Warps => {
            let fit = need(&a.fit, "--fit")?;
            manifest.inputs.push(fit.clone());
            let effects: Vec<SubjectEffects> = read_json(&fit.join(EFFECTS_FILE))?;
            plot::warps_figure(&effects, &read_model(&fit.join(MODEL_FILE))?)?
        }
        PlotKind::Beta => {
            let (fit, logistic) = (need(&a.fit, "--fit")?, need(&a.logistic, "--logistic")?);
            manifest.inputs.extend([fit.clone(), logistic.clone()]);
            let lm: LogisticModel = read_json(&logistic)?;
            plot::beta_figure(&read_model(&fit.join(MODEL_FILE))?, &lm)?
        }
    };
    let csv = ctx.out.join(format!("{}.csv", a.kind.name()));
    let svg = ctx.out.join(format!("{}.svg", a.kind.name()));
    figure.write_csv(&csv)?;
    figure.write_svg(&svg)?;
    manifest.outputs.extend([csv, svg]);
    manifest.write(&ctx.out, start.elapsed())?;
    Ok(())
}
