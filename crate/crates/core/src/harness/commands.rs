//! The five harness commands and the planning glue they share.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, RngCore};

use super::config::{ExperimentConfig, ImportanceKind, Method, SamplerTag};
use super::io::{dataset_csv, parse_dataset, stream, EpisodeSample, RunDir};
use crate::adversarial::{gandi, train_gan, Checkpoint, GandiConfig, Generator, TrainOutcome};
use crate::analysis::{
    exact_instance, normalized_reverse_kl, random_generator_density, random_theorem1_instance,
    random_theorem2_instance, select_checkpoint, success_stats_from_counts, verify_lemma1, verify_theorem1,
    verify_theorem2, BoundCheck, SuccessStats, BOUND_TOL,
};
use crate::domains::{BinPackInstance, DomainKind, GmmSpec, LearnedSampler, ReconfigState, UniformSampler};
use crate::importance::{fit_importance, FitConfig, ImportanceModel, Label, LabeledSample, NetworkConfig, TabularConfig};
use crate::planner::{extract_experience, search, ActionSampler, NodeOrdering, SearchBudget, SearchProblem};
use crate::resampler::{bootstrap, build_plan};
use crate::{BoxBounds, Error, Result};

/// Largest closed-form vs numeric gap accepted for the optimal discriminator.
pub const LEMMA_TOL: f64 = 1e-6;

/// One planning instance of either planning domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    BinPack(BinPackInstance),
    Reconfig(ReconfigState),
}

impl Instance {
    pub fn sample(cfg: &ExperimentConfig, rng: &mut impl Rng) -> Result<Self> {
        match cfg.domain {
            DomainKind::BinPack => Ok(Instance::BinPack(cfg.binpack.sample_instance(rng))),
            DomainKind::Reconfig => Ok(Instance::Reconfig(cfg.reconfig.sample_instance(rng))),
            DomainKind::Gmm => Err(Error::InvalidConfig("the gmm domain has no planning instances".into())),
        }
    }

    /// Short `key=value` summary for episode tables.
    pub fn describe(&self) -> String {
        match self {
            Instance::BinPack(i) => format!("n_obj={};size={}", i.n_obj, i.object_size),
            Instance::Reconfig(s) => {
                let t = s.target();
                format!("target_x={};target_y={}", t[0], t[1])
            }
        }
    }
}

/// Outcome of one planner run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRun {
    pub solved: bool,
    pub expansions: usize,
    pub plan_length: usize,
    pub on_target: Vec<LabeledSample>,
    pub off_target: Vec<LabeledSample>,
}

fn run_search<P, A>(problem: &P, sampler: &mut A, k: usize, budget: usize, keep: bool, mut rng: &mut dyn RngCore) -> Result<EpisodeRun>
where
    P: SearchProblem,
    A: ActionSampler<P>,
{
    let result = search(problem, k, NodeOrdering::greedy(), sampler, SearchBudget::expansions(budget), &mut rng)?;
    let (on_target, off_target) =
        if keep && result.solved() { extract_experience(problem, &result)? } else { (Vec::new(), Vec::new()) };
    Ok(EpisodeRun {
        solved: result.solved(),
        expansions: result.expansions,
        plan_length: result.plan.len(),
        on_target,
        off_target,
    })
}

/// Runs the planner on `instance` with the uniform sampler, or with
/// `generator` when given. Experience is extracted only when `keep` is set.
pub fn solve_instance(
    cfg: &ExperimentConfig,
    instance: &Instance,
    generator: Option<&Generator>,
    budget: usize,
    keep: bool,
    rng: &mut dyn RngCore,
) -> Result<EpisodeRun> {
    match instance {
        Instance::BinPack(i) => {
            let p = cfg.binpack.problem(*i);
            match generator {
                None => run_search(&p, &mut UniformSampler, cfg.k, budget, keep, rng),
                Some(g) => run_search(&p, &mut LearnedSampler::new(g), cfg.k, budget, keep, rng),
            }
        }
        Instance::Reconfig(s) => {
            let p = cfg.reconfig.problem(s.clone());
            match generator {
                None => run_search(&p, &mut UniformSampler, cfg.k, budget, keep, rng),
                Some(g) => run_search(&p, &mut LearnedSampler::new(g), cfg.k, budget, keep, rng),
            }
        }
    }
}

/// Context and action dimensions of the learned sampler for the domain.
pub fn learning_dims(cfg: &ExperimentConfig) -> (usize, usize) {
    match cfg.domain {
        DomainKind::Gmm => (0, 2),
        DomainKind::BinPack => (cfg.binpack.context_dim(), 2),
        DomainKind::Reconfig => (cfg.reconfig.context_dim(), 2),
    }
}

/// Box the generator's actions live in.
pub fn action_bounds(cfg: &ExperimentConfig) -> BoxBounds {
    match cfg.domain {
        DomainKind::Gmm => GmmSpec::default().sample_box(),
        DomainKind::BinPack | DomainKind::Reconfig => BoxBounds::symmetric_unit(2),
    }
}

pub fn importance_config(cfg: &ExperimentConfig) -> FitConfig {
    let (context_dim, action_dim) = learning_dims(cfg);
    let input_bounds = match cfg.domain {
        DomainKind::Gmm => Some(GmmSpec::default().sample_box()),
        _ => None,
    };
    match cfg.importance {
        ImportanceKind::Network => FitConfig::Network(NetworkConfig {
            batch_size: cfg.importance_batch_size,
            max_epochs: cfg.importance_epochs,
            learning_rate: cfg.importance_learning_rate,
            input_bounds,
            holdout: cfg.importance_holdout,
            ..NetworkConfig::default()
        }),
        ImportanceKind::Tabular => {
            let bounds = input_bounds.unwrap_or_else(|| BoxBounds::symmetric_unit(context_dim + action_dim));
            FitConfig::Tabular(TabularConfig { bins: cfg.importance_bins, bounds })
        }
    }
}

pub fn gandi_config(cfg: &ExperimentConfig) -> GandiConfig {
    GandiConfig {
        importance: importance_config(cfg),
        bootstrap_size: (cfg.bootstrap_size > 0).then_some(cfg.bootstrap_size),
        train: cfg.train.clone(),
    }
}

fn write_config(run: &mut RunDir, cfg: &ExperimentConfig) -> Result<()> {
    run.write("config.txt", &cfg.canonical_text()).map(|_| ())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectSummary {
    pub attempts: usize,
    pub solved: usize,
    pub on_target: usize,
    pub off_target: usize,
}

/// Collects experience with the uniform sampler until `collect.episodes`
/// instances are solved or `collect.max_attempts` are used up. Unsolved
/// episodes contribute nothing. Writes `on_target.csv`, `off_target.csv` and
/// `episodes.csv`. For the gmm domain the two sets are drawn from the toy
/// mixtures instead.
pub fn cmd_collect(cfg: &ExperimentConfig, out: &Path) -> Result<CollectSummary> {
    let mut run = RunDir::create(out, &cfg.hash())?;
    write_config(&mut run, cfg)?;
    let (context_dim, action_dim) = learning_dims(cfg);
    let mut on = Vec::new();
    let mut off = Vec::new();
    let mut rows = Vec::new();
    let mut attempts = 0;
    let mut solved = 0;

    if cfg.domain == DomainKind::Gmm {
        let spec = GmmSpec::default();
        let mut rng = stream(cfg.seed, "collect-gmm", 0);
        let sample = |x: [f64; 2], label| EpisodeSample { episode: 0, sample: LabeledSample::new(vec![], x.to_vec(), label) };
        on = (0..cfg.toy_on_target).map(|_| sample(spec.sample_p(&mut rng), Label::OnTarget)).collect();
        off = (0..cfg.toy_off_target).map(|_| sample(spec.sample_q(&mut rng), Label::OffTarget)).collect();
        attempts = 1;
        solved = 1;
        rows.push(vec!["0".into(), "0".into(), "true".into(), "0".into(), "0".into(), on.len().to_string(), off.len().to_string(), "gmm".into()]);
    } else {
        while solved < cfg.collect_episodes && attempts < cfg.collect_max_attempts {
            let mut rng = stream(cfg.seed, "collect", attempts as u64);
            let instance = Instance::sample(cfg, &mut rng)?;
            let ep = solve_instance(cfg, &instance, None, cfg.collect_expansions, true, &mut rng)?;
            let episode = if ep.solved { solved.to_string() } else { String::new() };
            rows.push(vec![
                attempts.to_string(),
                episode,
                ep.solved.to_string(),
                ep.expansions.to_string(),
                ep.plan_length.to_string(),
                ep.on_target.len().to_string(),
                ep.off_target.len().to_string(),
                instance.describe(),
            ]);
            if ep.solved {
                on.extend(ep.on_target.into_iter().map(|sample| EpisodeSample { episode: solved, sample }));
                off.extend(ep.off_target.into_iter().map(|sample| EpisodeSample { episode: solved, sample }));
                solved += 1;
            }
            attempts += 1;
        }
        if solved == 0 {
            return Err(Error::Runtime(format!(
                "no episode solved in {attempts} attempts; raise collect.expansions"
            )));
        }
    }
    let hash = run.config_hash().to_string();
    run.write("on_target.csv", &dataset_csv(&hash, context_dim, action_dim, &on))?;
    run.write("off_target.csv", &dataset_csv(&hash, context_dim, action_dim, &off))?;
    run.write_csv(
        "episodes.csv",
        &["attempt", "episode", "solved", "expansions", "plan_length", "on_target", "off_target", "instance"],
        &rows,
    )?;
    run.finish("collect")?;
    Ok(CollectSummary { attempts, solved, on_target: on.len(), off_target: off.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub episodes: usize,
    pub method: Method,
    pub selected_epoch: usize,
    /// Validation successes per checkpoint; empty for the gmm domain.
    pub scores: Vec<usize>,
    pub model_path: std::path::PathBuf,
}

/// Directory holding the artifacts of `method` trained on `episodes` episodes.
pub fn model_dir(method: Method, episodes: usize) -> String {
    format!("{}_e{episodes}", method.tag())
}

/// Validation successes of a generator on the fixed validation instances.
pub fn validation_score(cfg: &ExperimentConfig, generator: &Generator) -> Result<usize> {
    let mut score = 0;
    for i in 0..cfg.validation_instances as u64 {
        let instance = Instance::sample(cfg, &mut stream(cfg.seed, "validation", i))?;
        let mut rng = stream(cfg.seed, "validation-search", i);
        score += usize::from(solve_instance(cfg, &instance, Some(generator), cfg.expansions, false, &mut rng)?.solved);
    }
    Ok(score)
}

/// Trains `cfg.method` on the first `e` episodes of the dataset in `data`, for
/// each `e` in `train.episodes`, and keeps the checkpoint that solves the
/// most validation instances (the final one for gmm).
pub fn cmd_train(cfg: &ExperimentConfig, data: &Path, out: &Path) -> Result<Vec<TrainSummary>> {
    let mut run = RunDir::create(out, &cfg.hash())?;
    write_config(&mut run, cfg)?;
    let on_all = parse_dataset(&run.read_input("on_target.csv", &data.join("on_target.csv"))?)?;
    let off_all = parse_dataset(&run.read_input("off_target.csv", &data.join("off_target.csv"))?)?;
    let (context_dim, action_dim) = learning_dims(cfg);
    if let Some(s) = on_all.iter().chain(&off_all).find(|s| s.sample.context.len() != context_dim || s.sample.action.len() != action_dim) {
        return Err(Error::Dimension(format!(
            "dataset rows have {} context and {} action values; the configured domain needs {context_dim} and {action_dim}",
            s.sample.context.len(),
            s.sample.action.len()
        )));
    }
    let available: BTreeSet<usize> = on_all.iter().map(|s| s.episode).collect();
    let bounds = action_bounds(cfg);
    let mut summaries = Vec::new();

    for &e in &cfg.train_episodes {
        if cfg.domain != DomainKind::Gmm && available.len() < e {
            return Err(Error::Runtime(format!("dataset holds {} solved episodes, {e} requested", available.len())));
        }
        let keep = |v: &[EpisodeSample]| -> Vec<LabeledSample> {
            v.iter().filter(|s| cfg.domain == DomainKind::Gmm || s.episode < e).map(|s| s.sample.clone()).collect()
        };
        let (on, off) = (keep(&on_all), keep(&off_all));
        let mut rng = stream(cfg.seed, &format!("train-{}", cfg.method), e as u64);
        let dir = model_dir(cfg.method, e);
        let (training, importance): (TrainOutcome, Option<ImportanceModel>) = match cfg.method {
            Method::Gan => (train_gan(&on, &bounds, &cfg.train, &mut rng)?, None),
            Method::Gandi => {
                let g = gandi(&on, &off, &bounds, &gandi_config(cfg), &mut rng)?;
                (g.training, Some(g.importance))
            }
        };
        if let Some(model) = &importance {
            run.write(&format!("{dir}/importance.txt"), &model.to_text())?;
        }
        let curve: Vec<Vec<String>> =
            training.curve.iter().map(|c| vec![c.epoch.to_string(), c.d_loss.to_string(), c.g_loss.to_string()]).collect();
        run.write_csv(&format!("{dir}/curve.csv"), &["epoch", "d_loss", "g_loss"], &curve)?;
        for c in &training.checkpoints {
            run.write(&format!("{dir}/checkpoints/epoch_{:05}.txt", c.epoch), &c.generator.to_text())?;
        }

        let (best, scores) = if cfg.domain == DomainKind::Gmm {
            (training.checkpoints.len() - 1, Vec::new())
        } else {
            select_checkpoint(&training.checkpoints, |c: &Checkpoint| validation_score(cfg, &c.generator))?
        };
        let rows: Vec<Vec<String>> = training
            .checkpoints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                vec![
                    c.epoch.to_string(),
                    scores.get(i).map(|s| s.to_string()).unwrap_or_default(),
                    (i == best).to_string(),
                ]
            })
            .collect();
        run.write_csv(&format!("{dir}/selection.csv"), &["epoch", "validation_successes", "selected"], &rows)?;
        let chosen = &training.checkpoints[best];
        let model_path = run.write(&format!("{dir}/model.txt"), &chosen.generator.to_text())?;
        summaries.push(TrainSummary { episodes: e, method: cfg.method, selected_epoch: chosen.epoch, scores, model_path });
    }
    run.finish(&format!("train_{}", cfg.method))?;
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub sampler: SamplerTag,
    pub episodes: usize,
    pub stats: SuccessStats,
}

/// Success counts of one sampler on the fixed test instances.
pub fn evaluate_sampler(cfg: &ExperimentConfig, instances: &[Instance], generator: Option<&Generator>) -> Result<usize> {
    let mut successes = 0;
    for (i, instance) in instances.iter().enumerate() {
        let mut rng = stream(cfg.seed, "test-search", i as u64);
        successes += usize::from(solve_instance(cfg, instance, generator, cfg.expansions, false, &mut rng)?.solved);
    }
    Ok(successes)
}

/// Evaluates every sampler tag at every training-episode count on the same
/// `eval.trials` fresh instances. The uniform sampler needs no model; its
/// row is repeated for each episode count.
pub fn cmd_eval(cfg: &ExperimentConfig, models: &Path, out: &Path) -> Result<Vec<EvalRow>> {
    if cfg.domain == DomainKind::Gmm {
        return Err(Error::InvalidConfig("evaluation needs a planning domain".into()));
    }
    let mut run = RunDir::create(out, &cfg.hash())?;
    write_config(&mut run, cfg)?;
    let mut generators = Vec::new();
    for &tag in &cfg.samplers {
        for &e in &cfg.train_episodes {
            let g = match tag {
                SamplerTag::Uniform => None,
                SamplerTag::Learned(m) => {
                    let rel = format!("{}/model.txt", model_dir(m, e));
                    let path = models.join(&rel);
                    if !path.exists() {
                        return Err(Error::Runtime(format!("missing model for sampler '{}': {}", tag.tag(), path.display())));
                    }
                    Some(Generator::from_text(&run.read_input(&rel, &path)?)?)
                }
            };
            generators.push((tag, e, g));
        }
    }
    let instances = (0..cfg.eval_trials as u64)
        .map(|i| Instance::sample(cfg, &mut stream(cfg.seed, "test", i)))
        .collect::<Result<Vec<_>>>()?;

    let mut uniform: Option<usize> = None;
    let mut results = Vec::new();
    for (tag, e, g) in &generators {
        let successes = match (tag, g) {
            (SamplerTag::Uniform, _) => match uniform {
                Some(s) => s,
                None => *uniform.insert(evaluate_sampler(cfg, &instances, None)?),
            },
            (_, g) => evaluate_sampler(cfg, &instances, g.as_ref())?,
        };
        results.push(EvalRow { sampler: *tag, episodes: *e, stats: success_stats_from_counts(instances.len(), successes)? });
    }
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let s = &r.stats;
            vec![
                r.sampler.tag().to_string(),
                r.episodes.to_string(),
                s.trials.to_string(),
                s.successes.to_string(),
                s.rate.to_string(),
                s.ci_low.to_string(),
                s.ci_high.to_string(),
            ]
        })
        .collect();
    run.write_csv("results.csv", &["sampler", "episodes", "trials", "successes", "rate", "ci_low", "ci_high"], &rows)?;
    run.finish("eval")?;
    Ok(results)
}

/// Fraction of `n` generated reconfiguration placements whose center lies in
/// the corridor region in front of the target, each drawn for the initial
/// state of a fresh instance.
pub fn front_region_fraction(cfg: &ExperimentConfig, generator: &Generator, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyInput("no placements requested".into()));
    }
    let rc = &cfg.reconfig;
    let placement = rc.placement_box();
    let mut inside = 0usize;
    let mut rng = stream(seed, "front-region", 0);
    for _ in 0..n {
        let state = rc.sample_instance(&mut rng);
        let a = generator.sample_action(&rc.featurize(&state), &mut rng)?.action;
        let pose = placement.from_unit(&a);
        inside += usize::from(rc.target_front_region(state.target()).contains_point(pose[0], pose[1]));
    }
    Ok(inside as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub instance_id: String,
    pub epsilon: f64,
    pub rho: f64,
    pub first: Option<BoundCheck>,
    pub second: Option<BoundCheck>,
    pub normalized_lhs2: f64,
    /// `None` when the instance was rejected for failing a precondition.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub rows: Vec<VerifyRow>,
    pub lemma_errors: Vec<f64>,
    pub violations: usize,
    pub rejected: usize,
}

fn bound_row(id: String, inst: &crate::analysis::DiscreteInstance, require_first: bool, tight: bool) -> VerifyRow {
    let first = verify_theorem1(inst).ok();
    let second = verify_theorem2(inst).ok();
    let applicable = [first, second].into_iter().flatten();
    let holds = if second.is_none() || (require_first && first.is_none()) {
        None
    } else {
        Some(applicable.clone().all(|c| c.holds) && (!tight || applicable.clone().all(|c| (c.lhs - c.bound).abs() <= BOUND_TOL)))
    };
    VerifyRow {
        instance_id: id,
        epsilon: inst.epsilon(),
        rho: inst.rho(),
        first,
        second,
        normalized_lhs2: normalized_reverse_kl(inst),
        holds,
    }
}

/// Runs both bound suites, the tightness rows at zero error, one injected
/// instance whose claimed error is too small, and the optimal-discriminator
/// check. Writes `report.csv` and `lemma.csv`.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> Result<VerifySummary> {
    let mut run = RunDir::create(out, &cfg.hash())?;
    write_config(&mut run, cfg)?;
    let mut rows = Vec::new();
    for i in 0..cfg.verify_instances as u64 {
        let inst = random_theorem1_instance(&mut stream(cfg.seed, "verify-first", i));
        rows.push(bound_row(format!("first-{i}"), &inst, true, false));
    }
    for i in 0..cfg.verify_instances as u64 {
        let inst = random_theorem2_instance(&mut stream(cfg.seed, "verify-second", i));
        rows.push(bound_row(format!("second-{i}"), &inst, false, false));
    }
    for i in 0..10u64 {
        let inst = exact_instance(&mut stream(cfg.seed, "verify-exact", i));
        rows.push(bound_row(format!("exact-{i}"), &inst, true, true));
    }
    let mut rng = stream(cfg.seed, "verify-faulty", 0);
    let faulty = loop {
        let inst = random_theorem1_instance(&mut rng);
        if inst.exact_j() > 0.0 {
            let claimed = inst.exact_j().sqrt() / 2.0;
            break inst.with_epsilon(claimed);
        }
    };
    rows.push(bound_row("faulty-0".into(), &faulty, true, false));

    let mut lemma_errors = Vec::new();
    for i in 0..cfg.lemma_instances as u64 {
        let mut rng = stream(cfg.seed, "verify-lemma", i);
        let inst = random_theorem2_instance(&mut rng);
        let pg = random_generator_density(inst.p().len(), &mut rng);
        lemma_errors.push(verify_lemma1(&inst, &pg)?);
    }

    let violations =
        rows.iter().filter(|r| r.holds == Some(false)).count() + lemma_errors.iter().filter(|&&e| e.is_nan() || e > LEMMA_TOL).count();
    let rejected = rows.iter().filter(|r| r.holds.is_none()).count();
    let opt = |c: Option<BoundCheck>, f: fn(BoundCheck) -> f64| c.map(|c| f(c).to_string()).unwrap_or_else(|| "NA".into());
    let text_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.instance_id.clone(),
                r.epsilon.to_string(),
                r.rho.to_string(),
                opt(r.first, |c| c.lhs),
                opt(r.first, |c| c.bound),
                opt(r.second, |c| c.lhs),
                opt(r.second, |c| c.bound),
                match r.holds {
                    Some(h) => h.to_string(),
                    None => "rejected".into(),
                },
                r.normalized_lhs2.to_string(),
            ]
        })
        .collect();
    run.write_csv(
        "report.csv",
        &["instance_id", "epsilon", "rho", "lhs1", "bound1", "lhs2", "bound2", "holds", "normalized_lhs2"],
        &text_rows,
    )?;
    let lemma_rows: Vec<Vec<String>> = lemma_errors
        .iter()
        .enumerate()
        .map(|(i, e)| vec![format!("lemma-{i}"), e.to_string(), (*e <= LEMMA_TOL).to_string()])
        .collect();
    run.write_csv("lemma.csv", &["instance_id", "max_abs_error", "holds"], &lemma_rows)?;
    run.finish("verify")?;
    Ok(VerifySummary { rows, lemma_errors, violations, rejected })
}

/// Everything produced by one run of the mixture toy pipeline.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub spec: GmmSpec,
    pub on_target: Vec<[f64; 2]>,
    pub off_target: Vec<[f64; 2]>,
    /// Estimated weight of every on-target then off-target sample; `None` for gan.
    pub weights: Option<Vec<f64>>,
    pub importance: Option<ImportanceModel>,
    pub bootstrapped: Vec<[f64; 2]>,
    pub generated: Vec<[f64; 2]>,
    pub generator: Generator,
}

fn point(s: &LabeledSample) -> [f64; 2] {
    [s.action[0], s.action[1]]
}

/// Samples the toy mixtures, fits and bootstraps (gandi only), trains the
/// generator with `cfg.method` and draws `toy.generated` points from it.
pub fn run_toy(cfg: &ExperimentConfig) -> Result<ToyRun> {
    let spec = GmmSpec::default();
    let mut rng = stream(cfg.seed, "toy-data", 0);
    let on: Vec<LabeledSample> =
        (0..cfg.toy_on_target).map(|_| LabeledSample::new(vec![], spec.sample_p(&mut rng).to_vec(), Label::OnTarget)).collect();
    let off: Vec<LabeledSample> =
        (0..cfg.toy_off_target).map(|_| LabeledSample::new(vec![], spec.sample_q(&mut rng).to_vec(), Label::OffTarget)).collect();
    let mut toy_cfg = cfg.clone();
    toy_cfg.domain = DomainKind::Gmm;
    let bounds = spec.sample_box();
    let mut rng = stream(cfg.seed, "toy-train", 0);

    let (generator, weights, importance, bootstrapped) = match cfg.method {
        Method::Gan => (train_gan(&on, &bounds, &cfg.train, &mut rng)?.generator, None, None, on.iter().map(point).collect()),
        Method::Gandi => {
            let gc = gandi_config(&toy_cfg);
            let model = fit_importance(&on, &off, &gc.importance, &mut rng)?;
            let merged: Vec<LabeledSample> = on.iter().chain(&off).cloned().collect();
            let weights = merged.iter().map(|s| model.weight_of(s)).collect::<Result<Vec<_>>>()?;
            let plan = build_plan(merged, &model)?;
            let n = gc.bootstrap_size.unwrap_or(plan.len());
            let boot = bootstrap(&plan, n, &mut rng);
            let generator = train_gan(&boot, &bounds, &gc.train, &mut rng)?.generator;
            (generator, Some(weights), Some(model), boot.iter().map(point).collect())
        }
    };
    let mut rng = stream(cfg.seed, "toy-generate", 0);
    let generated = (0..cfg.toy_generated)
        .map(|_| generator.sample_action(&[], &mut rng).map(|a| [a.action[0], a.action[1]]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ToyRun {
        spec,
        on_target: on.iter().map(point).collect(),
        off_target: off.iter().map(point).collect(),
        weights,
        importance,
        bootstrapped,
        generated,
        generator,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Dimension("rank correlation needs two equally long series of length 2 or more".into()));
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut start = 0;
        while start < idx.len() {
            let mut end = start + 1;
            while end < idx.len() && v[idx[end]] == v[idx[start]] {
                end += 1;
            }
            let avg = (start + end - 1) as f64 / 2.0 + 1.0;
            for &i in &idx[start..end] {
                r[i] = avg;
            }
            start = end;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va * vb).sqrt())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Exact probability of each cell of a `bins x bins` grid over the sample
/// box under `p`, with the out-of-box tail folded into the edge cells.
pub fn p_cell_masses(spec: &GmmSpec, bins: usize) -> Vec<f64> {
    let b = spec.sample_box();
    let sd = spec.p_variance.sqrt();
    let edges = |axis: usize| -> Vec<f64> {
        let (lo, hi) = (b.lower()[axis], b.upper()[axis]);
        (0..=bins)
            .map(|i| match i {
                0 => f64::NEG_INFINITY,
                i if i == bins => f64::INFINITY,
                i => lo + (hi - lo) * i as f64 / bins as f64,
            })
            .collect()
    };
    let (ex, ey) = (edges(0), edges(1));
    let mut cells = vec![0.0; bins * bins];
    for m in &spec.p_means {
        for i in 0..bins {
            let px = normal_cdf((ex[i + 1] - m[0]) / sd) - normal_cdf((ex[i] - m[0]) / sd);
            for j in 0..bins {
                let py = normal_cdf((ey[j + 1] - m[1]) / sd) - normal_cdf((ey[j] - m[1]) / sd);
                cells[i * bins + j] += px * py / spec.p_means.len() as f64;
            }
        }
    }
    cells
}

/// Normalized histogram on the same grid as [`p_cell_masses`].
pub fn histogram(spec: &GmmSpec, points: &[[f64; 2]], bins: usize) -> Vec<f64> {
    let b = spec.sample_box();
    let cell = |v: f64, axis: usize| {
        let u = (v - b.lower()[axis]) / (b.upper()[axis] - b.lower()[axis]);
        ((u * bins as f64).floor().max(0.0) as usize).min(bins - 1)
    };
    let mut h = vec![0.0; bins * bins];
    for p in points {
        h[cell(p[0], 0) * bins + cell(p[1], 1)] += 1.0 / points.len() as f64;
    }
    h
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Fraction of `points` within `radius` of `center`.
pub fn disc_fraction(points: &[[f64; 2]], center: [f64; 2], radius: f64) -> f64 {
    let n = points.iter().filter(|p| (p[0] - center[0]).hypot(p[1] - center[1]) <= radius).count();
    n as f64 / points.len().max(1) as f64
}

/// Grid used for the histogram comparisons in the toy summary.
pub const TOY_HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ToySummary {
    /// Rank correlation of the estimated and exact ratio on fresh `q` points;
    /// `NaN` for gan.
    pub spearman: f64,
    pub tv_raw: f64,
    pub tv_bootstrap: f64,
    pub near_center: f64,
    pub near_left: f64,
    pub near_right: f64,
}

/// Scores a toy run against the analytic mixtures.
pub fn summarize_toy(cfg: &ExperimentConfig, toy: &ToyRun) -> Result<ToySummary> {
    let spearman_value = match &toy.importance {
        Some(model) => {
            let mut rng = stream(cfg.seed, "toy-ratio-check", 0);
            let pts: Vec<[f64; 2]> = (0..1000).map(|_| toy.spec.sample_q(&mut rng)).collect();
            let est = pts.iter().map(|p| model.weight(&[], p)).collect::<Result<Vec<_>>>()?;
            let exact: Vec<f64> = pts.iter().map(|&p| toy.spec.ratio(p)).collect();
            spearman(&est, &exact)?
        }
        None => f64::NAN,
    };
    let target = p_cell_masses(&toy.spec, TOY_HISTOGRAM_BINS);
    Ok(ToySummary {
        spearman: spearman_value,
        tv_raw: total_variation(&histogram(&toy.spec, &toy.off_target, TOY_HISTOGRAM_BINS), &target),
        tv_bootstrap: total_variation(&histogram(&toy.spec, &toy.bootstrapped, TOY_HISTOGRAM_BINS), &target),
        near_center: disc_fraction(&toy.generated, [2.0, 2.0], 0.5),
        near_left: disc_fraction(&toy.generated, [1.0, 1.0], 0.5),
        near_right: disc_fraction(&toy.generated, [3.0, 1.0], 0.5),
    })
}

/// Runs the toy pipeline and writes its five point clouds plus a summary:
/// `toy_density.csv` (x, y, p, q on a grid), `toy_samples.csv` (x, y,
/// label), `toy_weighted.csv` (x, y, label, weight), `toy_bootstrap.csv` and
/// `toy_generated.csv` (x, y).
pub fn cmd_toy(cfg: &ExperimentConfig, out: &Path) -> Result<ToySummary> {
    let mut run = RunDir::create(out, &cfg.hash())?;
    write_config(&mut run, cfg)?;
    let toy = run_toy(cfg)?;
    let b = toy.spec.sample_box();
    let g = cfg.toy_grid;
    let mut density = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            let x = b.lower()[0] + (b.upper()[0] - b.lower()[0]) * (i as f64 + 0.5) / g as f64;
            let y = b.lower()[1] + (b.upper()[1] - b.lower()[1]) * (j as f64 + 0.5) / g as f64;
            density.push(vec![x.to_string(), y.to_string(), toy.spec.density_p([x, y]).to_string(), toy.spec.density_q([x, y]).to_string()]);
        }
    }
    run.write_csv("toy_density.csv", &["x", "y", "p", "q"], &density)?;
    let labeled: Vec<([f64; 2], &str)> = toy
        .on_target
        .iter()
        .map(|&p| (p, Label::OnTarget.tag()))
        .chain(toy.off_target.iter().map(|&p| (p, Label::OffTarget.tag())))
        .collect();
    let samples: Vec<Vec<String>> = labeled.iter().map(|(p, l)| vec![p[0].to_string(), p[1].to_string(), l.to_string()]).collect();
    run.write_csv("toy_samples.csv", &["x", "y", "label"], &samples)?;
    let weighted: Vec<Vec<String>> = labeled
        .iter()
        .enumerate()
        .map(|(i, (p, l))| {
            let w = toy.weights.as_ref().map(|w| w[i].to_string()).unwrap_or_else(|| "NA".into());
            vec![p[0].to_string(), p[1].to_string(), l.to_string(), w]
        })
        .collect();
    run.write_csv("toy_weighted.csv", &["x", "y", "label", "weight"], &weighted)?;
    let xy = |v: &[[f64; 2]]| -> Vec<Vec<String>> { v.iter().map(|p| vec![p[0].to_string(), p[1].to_string()]).collect() };
    run.write_csv("toy_bootstrap.csv", &["x", "y"], &xy(&toy.bootstrapped))?;
    run.write_csv("toy_generated.csv", &["x", "y"], &xy(&toy.generated))?;
    let summary = summarize_toy(cfg, &toy)?;
    let metrics = [
        ("ratio_spearman", summary.spearman),
        ("tv_raw_q", summary.tv_raw),
        ("tv_bootstrap", summary.tv_bootstrap),
        ("generated_near_2_2", summary.near_center),
        ("generated_near_1_1", summary.near_left),
        ("generated_near_3_1", summary.near_right),
    ];
    let rows: Vec<Vec<String>> = metrics.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
    run.write_csv("toy_summary.csv", &["metric", "value"], &rows)?;
    run.write("toy_generator.txt", &toy.generator.to_text())?;
    run.finish("toy")?;
    Ok(summary)
}
