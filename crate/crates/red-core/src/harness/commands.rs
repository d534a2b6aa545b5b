//! The five pipeline operations behind the CLI: fit, score, train,
//! experiment, report.
//!
//! `train` runs the full loop: fit a support scorer on the expert data,
//! calibrate the fixed reward, train RL against it, and evaluate against the
//! true reward. Outputs are plain JSON/CSV/SVG files named by a
//! deterministic run stem; identical config and seed reproduce identical
//! CSV bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::dataset::ExpertDataset;
use crate::envs::{
    generate_expert_dataset, grid_expert_index, simple_expert_index, DatasetSize, GridWorld,
    SimpleDomain, SIMPLE_ACTIONS,
};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_autoencoder, fit_exact, fit_rnd, SupportScorer, DEFAULT_EMBED_DIM,
};
use crate::jsonio;
use crate::kernel::{fit_kernel_support, median_bandwidth, ComponentCount, KernelSpec};
use crate::nn::{Activation, MlpSpec};
use crate::reward::{calibrate_sigma1, red_reward, viz_reward, RewardModel, TerminalParams};
use crate::rl::{argmax, dqn_train, tabular_q_train, DqnConfig, TabularConfig};
use crate::seeding::split_seed;
use crate::stats;

use super::artifacts::{
    read_score_csv, run_stem, write_curve_csv, write_score_csv, write_text, FitStats,
    RewardModelFile, RunRecord, ScoreRow, ScorerModel,
};
use super::config::{
    DatasetConfig, EnvConfig, EstimatorConfig, GenerateConfig, RunConfig, ScoreGridConfig,
};
use super::svg::{line_chart, Series};

fn resolve_dataset(cfg: &RunConfig) -> Result<ExpertDataset> {
    cfg.dataset.validate()?;
    if let Some(path) = &cfg.dataset.path {
        return ExpertDataset::load(path);
    }
    let gen = cfg.dataset.generate.expect("validated");
    let seed = gen.seed.unwrap_or_else(|| split_seed(cfg.master_seed, "dataset"));
    match cfg.env {
        EnvConfig::Simple { episode_len } => {
            let env = SimpleDomain::new(episode_len, 0);
            generate_expert_dataset(&env, &simple_expert_index, DatasetSize::Pairs(gen.n), seed)
        }
        EnvConfig::Grid {} => {
            let env = GridWorld::new();
            generate_expert_dataset(
                &env,
                &grid_expert_index,
                DatasetSize::Trajectories(gen.n),
                seed,
            )
        }
    }
}

fn fit_scorer(cfg: &RunConfig, data: &ExpertDataset) -> Result<ScorerModel> {
    let seed = split_seed(cfg.master_seed, "estimator");
    let dim = data.joint_dim();
    match &cfg.estimator {
        EstimatorConfig::Kernel {
            bandwidth,
            exponent_form,
            m,
            ridge,
        } => {
            let points = data.joint_inputs();
            let bw = match bandwidth {
                Some(b) => *b,
                None => median_bandwidth(&points)?,
            };
            let spec = KernelSpec::new(bw, *exponent_form)?;
            let count = match m {
                Some(m) => ComponentCount::Fixed(*m),
                None => ComponentCount::Auto,
            };
            Ok(ScorerModel::Kernel(fit_kernel_support(
                &points, &spec, count, *ridge,
            )?))
        }
        EstimatorConfig::Rnd {
            target_hidden,
            predictor_hidden,
            embed_dim,
            steps,
        } => {
            let embed = if *embed_dim == 0 { DEFAULT_EMBED_DIM } else { *embed_dim };
            let target = MlpSpec::new(dim, target_hidden.clone(), embed, Activation::Tanh, 1.0)?;
            let predictor =
                MlpSpec::new(dim, predictor_hidden.clone(), embed, Activation::Tanh, 1.0)?;
            Ok(ScorerModel::Rnd(fit_rnd(data, &target, &predictor, *steps, seed)?))
        }
        EstimatorConfig::Ae {
            hidden,
            weight_decay,
            steps,
        } => {
            let spec = MlpSpec::new(dim, hidden.clone(), dim, Activation::Tanh, 1.0)?;
            Ok(ScorerModel::Ae(fit_autoencoder(
                data,
                &spec,
                *weight_decay,
                *steps,
                seed,
            )?))
        }
        EstimatorConfig::Exact {} => Ok(ScorerModel::Exact(fit_exact(data)?)),
    }
}

fn expert_losses(model: &ScorerModel, data: &ExpertDataset) -> Result<Vec<f64>> {
    data.joint_inputs().iter().map(|x| model.score(x)).collect()
}

pub struct FitOutput {
    pub model_path: PathBuf,
    pub stats_path: PathBuf,
    pub stats: FitStats,
    pub summary: String,
}

/// Fit the configured scorer on the expert data; write the model JSON and a
/// stats JSON with per-pair losses and quantiles.
pub fn fit(cfg: &RunConfig) -> Result<FitOutput> {
    let data = resolve_dataset(cfg)?;
    let model = fit_scorer(cfg, &data)?;
    let stats = FitStats::from_losses(expert_losses(&model, &data)?);
    let stem = run_stem(cfg, data.n());
    let model_path = cfg.out_dir.join(format!("{stem}.model.json"));
    let stats_path = cfg.out_dir.join(format!("{stem}.stats.json"));
    model.save(&model_path)?;
    jsonio::write_json(&stats_path, &stats)?;
    let summary = format!(
        "fit {} on {} pairs: loss mean {:.3e}, q50 {:.3e}, q90 {:.3e}, max {:.3e}",
        model.descriptor(),
        data.n(),
        stats.mean,
        stats.quantiles.q50,
        stats.quantiles.q90,
        stats.quantiles.max
    );
    log::info!("{summary}");
    Ok(FitOutput {
        model_path,
        stats_path,
        stats,
        summary,
    })
}

pub struct ScoreOutput {
    pub csv_path: PathBuf,
    pub rows: usize,
    pub summary: String,
}

/// Score a grid of state-action pairs with a previously fitted model and
/// write the reward-map CSV (`s,a,score,reward,viz_reward`).
pub fn score(cfg: &RunConfig) -> Result<ScoreOutput> {
    let data = resolve_dataset(cfg)?;
    let stem = run_stem(cfg, data.n());
    let model_path = cfg.out_dir.join(format!("{stem}.model.json"));
    let stats_path = cfg.out_dir.join(format!("{stem}.stats.json"));
    let model = ScorerModel::load(&model_path)?;
    if !stats_path.exists() {
        return Err(Error::ModelNotFound(stats_path));
    }
    let fit_stats: FitStats = jsonio::read_json(&stats_path)?;
    let sigma1 = calibrate_sigma1(&fit_stats.losses, cfg.reward.rho, cfg.reward.q)?;
    let alpha1 = cfg.reward.viz_alpha1;

    // (display state, display action, joint input) per grid cell.
    let mut cells: Vec<(String, f64, Vec<f64>)> = Vec::new();
    let n_actions = match cfg.env {
        EnvConfig::Simple { .. } => 2,
        EnvConfig::Grid {} => 4,
    };
    let one_hot = |a: usize| {
        let mut e = vec![0.0; n_actions];
        e[a] = 1.0;
        e
    };
    let display_action = |a: usize| match cfg.env {
        EnvConfig::Simple { .. } => SIMPLE_ACTIONS[a],
        EnvConfig::Grid {} => a as f64,
    };
    match cfg.score_grid {
        ScoreGridConfig::Linspace { min, max, points } => {
            if points == 0 {
                return Err(Error::EmptyGrid);
            }
            if !matches!(cfg.env, EnvConfig::Simple { .. }) {
                return Err(Error::InvalidConfig(
                    "linspace score grid requires the simple domain".into(),
                ));
            }
            for i in 0..points {
                let s = if points == 1 {
                    min
                } else {
                    min + (max - min) * i as f64 / (points - 1) as f64
                };
                for a in 0..n_actions {
                    let mut joint = vec![s];
                    joint.extend(one_hot(a));
                    cells.push((s.to_string(), display_action(a), joint));
                }
            }
        }
        ScoreGridConfig::Dataset => {
            for (state, enc) in &data.pairs {
                let a = argmax(enc);
                let mut joint = state.clone();
                joint.extend(enc.clone());
                let s = state
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(";");
                cells.push((s, display_action(a), joint));
            }
        }
    }

    let mut rows = Vec::with_capacity(cells.len());
    for (s, a, joint) in &cells {
        let loss = model.score(joint)?;
        rows.push(ScoreRow {
            s: s.clone(),
            a: *a,
            score: loss,
            reward: red_reward(sigma1, loss)?,
            viz_reward: viz_reward(alpha1, loss),
        });
    }
    let csv_path = cfg.out_dir.join(format!("{stem}.score.csv"));
    write_score_csv(&csv_path, &rows)?;
    let summary = format!(
        "scored {} grid cells with {} (sigma1 {:.4})",
        rows.len(),
        model.descriptor(),
        sigma1
    );
    log::info!("{summary}");
    Ok(ScoreOutput {
        csv_path,
        rows: rows.len(),
        summary,
    })
}

pub struct TrainOutput {
    pub record: RunRecord,
    pub record_path: PathBuf,
    pub curve_path: PathBuf,
    pub policy_path: PathBuf,
    pub model_path: PathBuf,
    pub summary: String,
}

/// Full pipeline: fit scorer, calibrate reward, train RL against it,
/// evaluate against the true reward, and persist every artifact.
pub fn train(cfg: &RunConfig) -> Result<TrainOutput> {
    let started = Instant::now();
    let data = resolve_dataset(cfg)?;
    let stem = run_stem(cfg, data.n());
    let model = fit_scorer(cfg, &data)?;
    let fit_stats = FitStats::from_losses(expert_losses(&model, &data)?);
    let model_path = cfg.out_dir.join(format!("{stem}.model.json"));
    let stats_path = cfg.out_dir.join(format!("{stem}.stats.json"));
    model.save(&model_path)?;
    jsonio::write_json(&stats_path, &fit_stats)?;

    let estimator_kind = model.kind().to_string();
    let scorer_descriptor = model.descriptor();
    let terminal = if cfg.reward.terminal_enabled {
        Some(TerminalParams::new(cfg.reward.sigma2, cfg.reward.sigma3)?)
    } else {
        None
    };
    let (reward_model, _) = RewardModel::calibrate(
        Box::new(model),
        &data,
        cfg.reward.rho,
        cfg.reward.q,
        terminal,
    )?;

    let rl_seed = split_seed(cfg.master_seed, "rl");
    let (curve, policy_path) = match cfg.env {
        EnvConfig::Simple { episode_len } => {
            let d = cfg.rl.dqn;
            let dqn_cfg = DqnConfig {
                q_spec: MlpSpec::new(1, d.hidden.to_vec(), 2, Activation::Tanh, 1.0)?,
                gamma: d.gamma,
                eps_start: d.eps_start,
                eps_end: d.eps_end,
                eps_decay_steps: d.eps_decay_steps,
                replay_capacity: d.replay_capacity,
                batch_size: d.batch_size,
                target_sync: d.target_sync,
                total_steps: d.total_steps,
                lr: d.lr,
                eval_interval: d.eval_interval,
                eval_episodes: d.eval_episodes,
                seed: rl_seed,
            };
            let mut env = SimpleDomain::new(episode_len, split_seed(cfg.master_seed, "env"));
            let out = dqn_train(&mut env, &reward_model, &dqn_cfg)?;
            let policy_path = cfg.out_dir.join(format!("{stem}.policy.json"));
            jsonio::write_json(&policy_path, &out.policy.params)?;
            (out.curve, policy_path)
        }
        EnvConfig::Grid {} => {
            let t = cfg.rl.tabular;
            let tab_cfg = TabularConfig {
                alpha: t.alpha,
                gamma: t.gamma,
                epsilon: t.epsilon,
                total_steps: t.total_steps,
                eval_interval: t.eval_interval,
                seed: rl_seed,
            };
            let mut env = GridWorld::new();
            let out = tabular_q_train(&mut env, &reward_model, &tab_cfg)?;
            let policy_path = cfg.out_dir.join(format!("{stem}.policy.json"));
            jsonio::write_json(&policy_path, &out.table)?;
            (out.curve, policy_path)
        }
    };

    let reward_path = cfg.out_dir.join(format!("{stem}.reward.json"));
    jsonio::write_json(
        &reward_path,
        &RewardModelFile {
            scorer_path: model_path.clone(),
            sigma1: reward_model.sigma1,
            r_bar: reward_model.r_bar,
            sigma2: cfg.reward.sigma2,
            sigma3: cfg.reward.sigma3,
            terminal_enabled: cfg.reward.terminal_enabled,
            format_version: 1,
        },
    )?;

    let curve_path = cfg.out_dir.join(format!("{stem}.curve.csv"));
    write_curve_csv(&curve_path, &curve, cfg.master_seed)?;

    let record = RunRecord {
        config: cfg.clone(),
        estimator_kind,
        scorer_descriptor,
        n_pairs: data.n(),
        sigma1: reward_model.sigma1,
        r_bar: reward_model.r_bar,
        final_per_step: curve.last().map(|p| p.true_reward_per_step),
        final_per_episode: curve.last().map(|p| p.true_reward_per_episode),
        curve,
        wall_clock_s: started.elapsed().as_secs_f64(),
        format_version: 1,
    };
    let record_path = cfg.out_dir.join(format!("{stem}.run.json"));
    jsonio::write_json(&record_path, &record)?;

    let summary = format!(
        "train {stem}: sigma1 {:.4}, r_bar {:.4}, final per-step {}",
        record.sigma1,
        record.r_bar,
        record
            .final_per_step
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "n/a".into())
    );
    log::info!("{summary}");
    Ok(TrainOutput {
        record,
        record_path,
        curve_path,
        policy_path,
        model_path,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub estimator: String,
    pub n: usize,
    pub seed: usize,
    pub final_per_step: Option<f64>,
    pub final_per_episode: Option<f64>,
    pub status: String,
}

pub struct ExperimentOutput {
    pub csv_path: PathBuf,
    pub summary_csv_path: PathBuf,
    pub rows: Vec<CellRow>,
    pub n_failed: usize,
    pub summary: String,
}

/// Run the sweep cross product (estimators x sizes x seeds) with up to
/// `jobs` cells in parallel; write per-cell and aggregated CSVs. Failed
/// cells are recorded with their error kind in the status column.
pub fn experiment(cfg: &RunConfig, jobs: usize) -> Result<ExperimentOutput> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("experiment requires a `sweep` section".into()))?;
    if sweep.sizes.is_empty() || sweep.estimators.is_empty() || sweep.seeds == 0 {
        return Err(Error::EmptySweep);
    }

    let mut cells: Vec<(String, usize, usize, RunConfig)> = Vec::new();
    for est in &sweep.estimators {
        for &n in &sweep.sizes {
            for seed_idx in 0..sweep.seeds {
                let mut cell = cfg.clone();
                cell.sweep = None;
                cell.estimator = if cfg.estimator.kind() == est {
                    cfg.estimator.clone()
                } else {
                    EstimatorConfig::default_for_kind(est)?
                };
                cell.dataset = DatasetConfig {
                    path: None,
                    generate: Some(GenerateConfig { n, seed: None }),
                };
                cell.master_seed =
                    split_seed(cfg.master_seed, &format!("cell:{est}:{n}:{seed_idx}"));
                cell.out_dir = cfg.out_dir.join("cells");
                cells.push((est.clone(), n, seed_idx, cell));
            }
        }
    }

    let results: Mutex<Vec<Option<CellRow>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(cells.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= cells.len() {
                    break;
                }
                let (est, n, seed_idx, cell_cfg) = &cells[idx];
                let row = match train(cell_cfg) {
                    Ok(out) => CellRow {
                        estimator: est.clone(),
                        n: *n,
                        seed: *seed_idx,
                        final_per_step: out.record.final_per_step,
                        final_per_episode: out.record.final_per_episode,
                        status: "ok".into(),
                    },
                    Err(e) => {
                        log::warn!("cell {est}/n={n}/seed={seed_idx} failed: {e}");
                        CellRow {
                            estimator: est.clone(),
                            n: *n,
                            seed: *seed_idx,
                            final_per_step: None,
                            final_per_episode: None,
                            status: e.kind().to_string(),
                        }
                    }
                };
                results.lock().expect("poisoned")[idx] = Some(row);
            });
        }
    });

    let rows: Vec<CellRow> = results
        .into_inner()
        .expect("poisoned")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect();
    let n_failed = rows.iter().filter(|r| r.status != "ok").count();

    let mut body = String::from("estimator,n,seed,final_per_step,final_per_episode,status\n");
    for r in &rows {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.estimator,
            r.n,
            r.seed,
            r.final_per_step.map(|v| v.to_string()).unwrap_or_default(),
            r.final_per_episode
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.status
        ));
    }
    let csv_path = cfg.out_dir.join("experiment.csv");
    write_text(&csv_path, &body)?;

    let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        if let Some(v) = r.final_per_step {
            groups.entry((r.estimator.clone(), r.n)).or_default().push(v);
        }
    }
    let mut summary_body = String::from("estimator,n,mean_final_per_step,std_final_per_step,n_ok\n");
    let mut summary = String::from("estimator      n   final per-step (mean +/- std over seeds)\n");
    for ((est, n), vals) in &groups {
        summary_body.push_str(&format!(
            "{},{},{},{},{}\n",
            est,
            n,
            stats::mean(vals),
            stats::std_dev(vals),
            vals.len()
        ));
        summary.push_str(&format!(
            "{est:<12} {n:>4}   {:.4} +/- {:.4}  ({} ok)\n",
            stats::mean(vals),
            stats::std_dev(vals),
            vals.len()
        ));
    }
    if n_failed > 0 {
        summary.push_str(&format!("{n_failed} cell(s) failed; see status column\n"));
    }
    let summary_csv_path = cfg.out_dir.join("experiment_summary.csv");
    write_text(&summary_csv_path, &summary_body)?;

    Ok(ExperimentOutput {
        csv_path,
        summary_csv_path,
        rows,
        n_failed,
        summary,
    })
}

pub struct ReportOutput {
    pub curve_svg_path: PathBuf,
    pub reward_map_svg_paths: Vec<PathBuf>,
    pub n_valid: usize,
    pub n_skipped: usize,
    pub summary: String,
}

/// Summarize every run record under the output directory; render the
/// learning-curve SVG (mean +/- std per estimator) and a reward-map SVG per
/// score CSV found. Corrupted records are skipped with a warning line.
pub fn report(cfg: &RunConfig) -> Result<ReportOutput> {
    let dir = &cfg.out_dir;
    let record_paths = collect_files(dir, ".run.json");
    if record_paths.is_empty() {
        return Err(Error::NoRuns(dir.clone()));
    }
    let mut summary = String::new();
    let mut records: Vec<RunRecord> = Vec::new();
    let mut n_skipped = 0usize;
    for path in &record_paths {
        match jsonio::read_json::<RunRecord>(path) {
            Ok(r) => records.push(r),
            Err(e) => {
                n_skipped += 1;
                summary.push_str(&format!("warning: skipped {}: {e}\n", path.display()));
            }
        }
    }
    if records.is_empty() {
        return Err(Error::NoRuns(dir.clone()));
    }

    // Group curves by estimator kind; aggregate mean +/- std per env step.
    let mut by_estimator: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in &records {
        let group = by_estimator.entry(r.estimator_kind.clone()).or_default();
        for p in &r.curve {
            group.entry(p.env_step).or_default().push(p.true_reward_per_step);
        }
    }
    let series: Vec<Series> = by_estimator
        .iter()
        .map(|(est, steps)| {
            let points: Vec<(f64, f64)> = steps
                .iter()
                .map(|(&x, vals)| (x as f64, stats::mean(vals)))
                .collect();
            let band: Vec<(f64, f64, f64)> = steps
                .iter()
                .map(|(&x, vals)| {
                    let m = stats::mean(vals);
                    let s = stats::std_dev(vals);
                    (x as f64, m - s, m + s)
                })
                .collect();
            Series {
                label: est.clone(),
                points,
                band: Some(band),
            }
        })
        .collect();
    let curve_svg_path = dir.join("learning_curves.svg");
    write_text(
        &curve_svg_path,
        &line_chart(
            "true per-step reward during training",
            "environment step",
            "true reward per step",
            &series,
        ),
    )?;

    // Reward maps from any score CSVs with 1-D states.
    let mut reward_map_svg_paths = Vec::new();
    for score_path in collect_files(dir, ".score.csv") {
        let rows = match read_score_csv(&score_path) {
            Ok(r) => r,
            Err(e) => {
                summary.push_str(&format!(
                    "warning: skipped {}: {e}\n",
                    score_path.display()
                ));
                continue;
            }
        };
        let mut by_action: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for row in &rows {
            if let Ok(s) = row.s.parse::<f64>() {
                by_action
                    .entry(format!("a = {}", row.a))
                    .or_default()
                    .push((s, row.reward));
            }
        }
        if by_action.is_empty() {
            continue;
        }
        let series: Vec<Series> = by_action
            .into_iter()
            .map(|(label, mut points)| {
                points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
                Series {
                    label,
                    points,
                    band: None,
                }
            })
            .collect();
        let name = score_path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("scores")
            .trim_end_matches(".score.csv")
            .to_string();
        let svg_path = dir.join(format!("{name}.reward_map.svg"));
        write_text(
            &svg_path,
            &line_chart(&format!("reward map: {name}"), "state", "reward", &series),
        )?;
        reward_map_svg_paths.push(svg_path);
    }

    summary.push_str(&format!(
        "{} run record(s), {} skipped\n",
        records.len(),
        n_skipped
    ));
    let mut by_est_final: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &records {
        if let Some(v) = r.final_per_step {
            by_est_final.entry(r.estimator_kind.clone()).or_default().push(v);
        }
    }
    for (est, vals) in &by_est_final {
        summary.push_str(&format!(
            "{est:<12} {} run(s), final per-step {:.4} +/- {:.4}\n",
            vals.len(),
            stats::mean(vals),
            stats::std_dev(vals)
        ));
    }

    Ok(ReportOutput {
        curve_svg_path,
        reward_map_svg_paths,
        n_valid: records.len(),
        n_skipped,
        summary,
    })
}

/// Recursively collect files whose names end with `suffix`, sorted by path.
fn collect_files(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    fn walk(dir: &Path, suffix: &str, out: &mut Vec<PathBuf>) {
        let Ok(entries) = std::fs::read_dir(dir) else {
            return;
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(&path, suffix, out);
            } else if path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(suffix))
            {
                out.push(path);
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, suffix, &mut out);
    out.sort();
    out
}
