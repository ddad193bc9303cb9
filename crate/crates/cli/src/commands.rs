use std::fs;

use ircsc_core::seed::{derive_seed, domain};
use ircsc_core::{
    clean_accuracy, generate_dataset, importance_weights, monte_carlo_ber, quantize, run_curve_fit,
    run_sweep, sort_importance, summarize_sweep, sweep_to_csv, theoretical_ber, ChannelFamily,
    ChannelSpec, Error as CoreError, ImportanceVector, MappingFunction, RateConfig,
    RateDecisionReport, StiiConfig, TaskModel,
};

use crate::config::AppConfig;
use crate::{CliError, DecideRequest};

/// `train` failures before any computation are input errors; a diverging
/// loss is a runtime failure.
pub fn train(
    config_path: &str,
    out_model_path: &str,
    export_test_data: Option<&str>,
) -> Result<(), CliError> {
    let config = AppConfig::load(config_path)?;
    let task_cfg = config.task_config()?;

    let train_seed = derive_seed(config.seed, &[domain::DATASET, 1]);
    let test_seed = derive_seed(config.seed, &[domain::DATASET, 2]);
    let train_set = generate_dataset(config.data.train_samples, &task_cfg, train_seed)
        .map_err(CliError::usage_from)?;
    let test_set = generate_dataset(config.data.test_samples, &task_cfg, test_seed)
        .map_err(CliError::usage_from)?;

    let model = match ircsc_core::train(&task_cfg, &train_set) {
        Ok(model) => model,
        Err(e @ CoreError::TrainingDiverged { .. }) => return Err(CliError::runtime_from(e)),
        Err(e) => return Err(CliError::usage_from(e)),
    };

    let train_acc = clean_accuracy(&model, &train_set).map_err(CliError::runtime_from)?;
    let test_acc = clean_accuracy(&model, &test_set).map_err(CliError::runtime_from)?;

    fs::write(out_model_path, model.to_json())
        .map_err(|e| CliError::usage(format!("cannot write model '{out_model_path}': {e}")))?;
    if let Some(path) = export_test_data {
        fs::write(path, ircsc_core::dataset_to_csv(&test_set))
            .map_err(|e| CliError::usage(format!("cannot write dataset '{path}': {e}")))?;
        println!("test split written to {path}");
    }
    println!("model written to {out_model_path}");
    println!("clean train accuracy: {train_acc:.4}");
    println!("clean test accuracy:  {test_acc:.4}");
    Ok(())
}

pub fn ber(family: &str, snr_db: &[f64], n_bits: usize, seed: u64) -> Result<(), CliError> {
    let family: ChannelFamily = family.parse().map_err(CliError::usage_from)?;
    if n_bits == 0 {
        return Err(CliError::usage("--n-bits must be at least 1"));
    }
    println!("snr_db,theoretical,empirical");
    for (i, &db) in snr_db.iter().enumerate() {
        let spec = ChannelSpec::from_db(family, db);
        let theoretical = theoretical_ber(&spec);
        let empirical = monte_carlo_ber(&spec, n_bits, derive_seed(seed, &[i as u64]))
            .map_err(CliError::runtime_from)?;
        println!("{db},{theoretical},{empirical}");
    }
    Ok(())
}

pub fn fit(
    model_path: Option<&str>,
    config_path: Option<&str>,
    out_mapping: &str,
    out_points: Option<&str>,
    preset: Option<&str>,
) -> Result<(), CliError> {
    if let Some(name) = preset {
        let mapping = MappingFunction::preset(name).map_err(CliError::usage_from)?;
        fs::write(out_mapping, mapping.to_json())
            .map_err(|e| CliError::usage(format!("cannot write mapping '{out_mapping}': {e}")))?;
        println!("preset '{name}' written to {out_mapping}");
        return Ok(());
    }

    let model_path = model_path
        .ok_or_else(|| CliError::usage("--model is required unless --preset is given"))?;
    let config_path = config_path
        .ok_or_else(|| CliError::usage("--config is required unless --preset is given"))?;
    let model = load_model(model_path)?;
    let config = AppConfig::load(config_path)?;
    let stii_cfg = config.stii_config()?;
    let fit_cfg = config.curve_fit_config();

    // Algorithm input: a labeled dataset of one sample per evaluation slot,
    // drawn from the same task the model was trained on.
    let data_seed = derive_seed(config.seed, &[domain::FIT_DATA]);
    let dataset = generate_dataset(
        fit_cfg.samples_per_target,
        &model_config_checked(&model, &config)?,
        data_seed,
    )
    .map_err(CliError::usage_from)?;

    let (mapping, points) = run_curve_fit(&model, &dataset, &fit_cfg, &stii_cfg)
        .map_err(|e| CliError::runtime(format!("curve fit failed: {e}")))?;

    fs::write(out_mapping, mapping.to_json())
        .map_err(|e| CliError::usage(format!("cannot write mapping '{out_mapping}': {e}")))?;
    println!("mapping written to {out_mapping}");
    if let Some(points_path) = out_points {
        fs::write(points_path, ircsc_core::fit_points_to_csv(&points))
            .map_err(|e| CliError::usage(format!("cannot write points '{points_path}': {e}")))?;
        println!("fit points written to {points_path}");
    }
    for p in &points {
        println!("eta {:.4} -> performance {:.2}", p.eta, p.performance);
    }
    Ok(())
}

pub fn decide(args: &DecideRequest) -> Result<(), CliError> {
    let family: ChannelFamily = args.family.parse().map_err(CliError::usage_from)?;
    let mapping = load_mapping(&args.mapping)?;
    let stii_cfg = StiiConfig::new(args.p0).map_err(CliError::usage_from)?;
    let rate_cfg = RateConfig::new(args.ts, 2).map_err(CliError::usage_from)?;
    let spec = ChannelSpec::from_db(family, args.snr_db);

    let (sorted, shape) = if let Some(weights_path) = &args.weights {
        let weights = load_weights_csv(weights_path)?;
        let shape = ircsc_core::FeatureShape::new(args.length, weights.len(), 1)
            .map_err(CliError::usage_from)?;
        (sort_importance(&weights), shape)
    } else if let (Some(model_path), Some(dataset_path)) = (&args.model, &args.dataset) {
        let model = load_model(model_path)?;
        let samples = fs::read_to_string(dataset_path)
            .map_err(|e| CliError::usage(format!("cannot read dataset '{dataset_path}': {e}")))
            .and_then(|text| ircsc_core::dataset_from_csv(&text).map_err(CliError::usage_from))?;
        let sample = samples.get(args.sample).ok_or_else(|| {
            CliError::usage(format!(
                "sample index {} out of range for {} rows",
                args.sample,
                samples.len()
            ))
        })?;
        let x = model
            .encode(sample)
            .and_then(|a| quantize(&a, model.shape()))
            .map_err(CliError::usage_from)?;
        // Runtime semantics: rank against the model's own clean prediction.
        let reference = model
            .infer_clean(sample, None)
            .map_err(CliError::runtime_from)?
            .predicted_class;
        let weights = importance_weights(&model, &x, reference).map_err(CliError::runtime_from)?;
        (sort_importance(&weights), model.shape())
    } else {
        return Err(CliError::usage(
            "provide either --weights or --model with --dataset",
        ));
    };

    let decision = ircsc_core::decide(
        &sorted, &spec, args.tau, &mapping, &shape, &rate_cfg, &stii_cfg,
    )
    .map_err(CliError::runtime_from)?;
    println!(
        "{}",
        RateDecisionReport::new(&decision, args.snr_db, args.tau).to_json()
    );
    Ok(())
}

pub fn sweep(
    model_path: &str,
    mapping_path: &str,
    config_path: &str,
    out_csv: &str,
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let mapping = load_mapping(mapping_path)?;
    let config = AppConfig::load(config_path)?;
    let stii_cfg = config.stii_config()?;
    let rate_cfg = config.rate_config()?;
    let sweep_cfg = config.sweep_config()?;

    let eval_seed = derive_seed(config.seed, &[domain::SWEEP_DATA]);
    let eval_set = generate_dataset(
        config.sweep.eval_samples,
        &model_config_checked(&model, &config)?,
        eval_seed,
    )
    .map_err(CliError::usage_from)?;

    let records = run_sweep(
        &model, &eval_set, &sweep_cfg, &mapping, &stii_cfg, &rate_cfg,
    )
    .map_err(CliError::runtime_from)?;
    fs::write(out_csv, sweep_to_csv(&records))
        .map_err(|e| CliError::usage(format!("cannot write sweep '{out_csv}': {e}")))?;
    println!("sweep records written to {out_csv}");
    println!(
        "{:<8} {:>8} {:>10} {:>12}",
        "scheme", "snr_db", "accuracy", "rate_bps"
    );
    for s in summarize_sweep(&records) {
        println!(
            "{:<8} {:>8.1} {:>10.4} {:>12.1}",
            s.scheme, s.snr_db, s.mean_accuracy, s.mean_rate_bps
        );
    }
    Ok(())
}

fn load_model(path: &str) -> Result<TaskModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read model '{path}': {e}")))?;
    TaskModel::from_json(&text)
        .map_err(|e| CliError::usage(format!("model '{path}' is invalid: {e}")))
}

fn load_mapping(path: &str) -> Result<MappingFunction, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read mapping '{path}': {e}")))?;
    MappingFunction::from_json(&text)
        .map_err(|e| CliError::usage(format!("mapping '{path}' is invalid: {e}")))
}

/// Importance weights from the `channel,weight,rank` CSV, ordered by channel.
fn load_weights_csv(path: &str) -> Result<ImportanceVector, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read weights '{path}': {e}")))?;
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("channel,weight,rank") => {}
        other => {
            return Err(CliError::usage(format!(
                "weights file must start with 'channel,weight,rank', got {other:?}"
            )))
        }
    }
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::usage(format!(
                "weights row {i} has {} fields",
                fields.len()
            )));
        }
        let channel: usize = fields[0]
            .trim()
            .parse()
            .map_err(|e| CliError::usage(format!("weights row {i} channel: {e}")))?;
        let weight: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|e| CliError::usage(format!("weights row {i} weight: {e}")))?;
        rows.push((channel, weight));
    }
    rows.sort_by_key(|&(channel, _)| channel);
    if rows
        .iter()
        .enumerate()
        .any(|(i, &(channel, _))| channel != i)
    {
        return Err(CliError::usage(
            "weights file must cover channels 0..C exactly once",
        ));
    }
    ImportanceVector::new(rows.into_iter().map(|(_, w)| w).collect()).map_err(CliError::usage_from)
}

/// The model's own config, cross-checked against the experiment config so a
/// model trained under one task is not silently evaluated under another.
fn model_config_checked(
    model: &TaskModel,
    config: &AppConfig,
) -> Result<ircsc_core::TaskModelConfig, CliError> {
    let from_file = config.task_config()?;
    let own = *model.config();
    if own.input_dim != from_file.input_dim
        || own.num_classes != from_file.num_classes
        || own.shape != from_file.shape
    {
        return Err(CliError::usage(
            "model dimensions disagree with the config's task section".to_string(),
        ));
    }
    Ok(own)
}
