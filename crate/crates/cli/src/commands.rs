use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sadsp::analysis::{
    accumulate_outputs, frequency_tables, leakage_report, prototype_report, topk_feasible, Conditioning, Direction,
    PairSpace, ProbeConfig,
};
use sadsp::data::{generate_synthetic, load_feature_file, write_feature_file, write_pair_sidecar, Dataset, Sample};
use sadsp::eval::{
    ablation_csv, check_dims, gamma_sweep, gamma_sweep_csv, run_ablation_suite, EvalSummary, TestOutputs,
};
use sadsp::model::{infer, load_checkpoint, save_checkpoint, ModelParams};
use sadsp::trainer::train;

use crate::config::RunConfig;
use crate::CliError;

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    Ok(path.to_path_buf())
}

/// Creates the run directory and echoes the effective configuration into it.
fn prepare(cfg: &RunConfig, command: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io { path: cfg.out.clone(), source: e })?;
    write(&cfg.out.join(format!("config.{command}.txt")), cfg.to_text())
}

fn load_inputs(cfg: &RunConfig) -> Result<(Dataset, ModelParams), CliError> {
    let dataset = load_feature_file(cfg.data_path())?;
    let params = load_checkpoint(&cfg.checkpoint_path())?;
    check_dims(&params, &dataset)?;
    Ok((dataset, params))
}

/// Sidecar path next to a feature file: `data.bin` → `data.pairs.txt`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("pairs.txt")
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![prepare(cfg, "gen")?];
    let (world, dataset) = generate_synthetic(&cfg.synthetic_config(), &cfg.world)?;
    let data = cfg.data_path();
    write_feature_file(&data, &dataset)?;
    let sidecar = sidecar_path(&data);
    write_pair_sidecar(&sidecar, &dataset, Some(&world.feasible))?;
    written.extend([data, sidecar]);
    Ok(written)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![prepare(cfg, "train")?];
    let dataset = load_feature_file(cfg.data_path())?;
    dataset.validate()?;
    let spec = &dataset.spec;
    let dims = cfg.model_dims(spec.num_states, spec.num_objects, spec.feature_dim);
    let params = ModelParams::init(dims, cfg.seed);
    let mut tc = cfg.train_config();
    if tc.checkpoint_every > 0 {
        let dir = cfg.out.join("checkpoints");
        fs::create_dir_all(&dir).map_err(|e| CliError::Io { path: dir.clone(), source: e })?;
        tc.checkpoint_dir = Some(dir);
    }
    let (params, log) = train(params, &dataset, &tc)?;
    let ckpt = cfg.checkpoint_path();
    save_checkpoint(&params, &ckpt)?;
    let log_path = cfg.out.join("train_log.csv");
    log.write_csv(&log_path, cfg.log_seconds)?;
    written.extend([ckpt, log_path]);
    written.extend(log.checkpoint_paths);
    Ok(written)
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<(EvalSummary, Vec<PathBuf>), CliError> {
    let mut written = vec![prepare(cfg, "eval")?];
    let (dataset, params) = load_inputs(cfg)?;
    let table = TestOutputs::compute(&params, &dataset)?.score_table(&dataset, &cfg.gamma, &cfg.mask)?;
    let summary = table.evaluate(&cfg.sweep)?;
    let out = &cfg.out;
    written.push(write(&out.join("eval.csv"), summary.to_csv())?);
    written.push(write(&out.join("eval_sweep.csv"), summary.sweep_csv())?);
    written.push(write(&out.join("eval_curve.csv"), summary.curve_csv())?);
    let scores = out.join("scores.bin");
    table.write(&scores)?;
    written.push(scores);
    Ok((summary, written))
}

pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![prepare(cfg, "ablate")?];
    let (dataset, params) = load_inputs(cfg)?;
    let rows = run_ablation_suite(&params, &dataset, &cfg.gamma, &cfg.sweep)?;
    written.push(write(&cfg.out.join("ablation.csv"), ablation_csv(&rows))?);
    Ok(written)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![prepare(cfg, "sweep")?];
    let (dataset, params) = load_inputs(cfg)?;
    let (points, best) = gamma_sweep(&params, &dataset, &cfg.gamma_grid, &cfg.sweep)?;
    written.push(write(&cfg.out.join("gamma_sweep.csv"), gamma_sweep_csv(&points, best))?);
    Ok(written)
}

fn topk_csv(cfg: &RunConfig, dataset: &Dataset, tables: &sadsp::analysis::FrequencyTables) -> Result<String, CliError> {
    let spec = &dataset.spec;
    let mut out = String::from("conditioning,primitive,direction,space,rank,state,object,count,short\n");
    let groups = [
        (Conditioning::ObjectsGivenState, "state", spec.num_states),
        (Conditioning::StatesGivenObject, "object", spec.num_objects),
    ];
    for (conditioning, label, n) in groups {
        for primitive in 0..n {
            for (direction, dname) in [(Direction::Top, "top"), (Direction::Bottom, "bottom")] {
                for (space, sname) in [(PairSpace::OpenWorld, "open_world"), (PairSpace::UnseenOnly, "unseen_only")] {
                    let ranked = topk_feasible(tables, conditioning, primitive, cfg.top_k, direction, space, &spec.seen_pairs)?;
                    for (rank, ((s, o), count)) in ranked.pairs.iter().enumerate() {
                        let _ = writeln!(
                            out,
                            "{label},{primitive},{dname},{sname},{},{s},{o},{count},{}",
                            rank + 1,
                            ranked.short
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![prepare(cfg, "analyze")?];
    let (dataset, params) = load_inputs(cfg)?;
    let spec = &dataset.spec;
    let samples: Vec<&Sample> = dataset
        .samples
        .iter()
        .filter(|s| cfg.analysis_split.includes(s.split))
        .collect();
    let out = infer(&params, samples.iter().map(|s| s.features.as_slice()))?;
    let items = || {
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.state, s.object, out.a_s[i].as_slice(), out.a_o[i].as_slice()))
    };
    let matrix = accumulate_outputs(spec.num_states, spec.num_objects, items(), cfg.accumulation)?;
    let tables = frequency_tables(spec.num_states, spec.num_objects, items());
    let dir = &cfg.out;
    written.push(write(&dir.join("feasibility.csv"), matrix.to_csv())?);
    written.push(write(&dir.join("feasibility_grid.csv"), matrix.grid_csv(cfg.min_max))?);
    written.push(write(&dir.join("frequency.csv"), tables.to_csv())?);
    written.push(write(&dir.join("topk.csv"), topk_csv(cfg, &dataset, &tables)?)?);

    let report = prototype_report(&params, &dataset)?;
    written.push(write(&dir.join("prototypes.csv"), report.to_csv())?);
    written.push(write(&dir.join("prototypes.txt"), report.to_text())?);

    let probe = ProbeConfig {
        epochs: cfg.probe_epochs,
        learning_rate: cfg.probe_learning_rate,
    };
    let leakage = leakage_report(&params, &dataset, &probe)?;
    written.push(write(&dir.join("leakage.csv"), leakage.to_csv())?);
    Ok(written)
}
