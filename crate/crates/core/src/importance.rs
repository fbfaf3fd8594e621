//! Direct estimation of the importance ratio `w = p/q` between the on-target
//! (solution trajectory) and off-target (rest of the search tree) action
//! distributions.
//!
//! The estimate minimizes the sample least-squares objective
//!
//! ```text
//! J(w) = sum_{a in A_q} w(a)^2 - 2 sum_{a in A_p} w(a)
//! ```
//!
//! either exactly on a discretized grid (the tabular backend, whose per-bin
//! minimizer is `n_p(bin) / n_q(bin)`) or by mini-batch Adadelta on a dense
//! network with a linear output. Negative raw outputs are clamped to zero at
//! query time.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::neuralnet::{Activation, DenseNet, Gradients, OptimizerKind, OptimizerState};
use crate::{BoxBounds, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    OnTarget,
    OffTarget,
}

impl Label {
    pub fn tag(self) -> &'static str {
        match self {
            Label::OnTarget => "on",
            Label::OffTarget => "off",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "on" => Ok(Label::OnTarget),
            "off" => Ok(Label::OffTarget),
            other => Err(Error::Format(format!("unknown label '{other}'"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A (context, action) pair from search experience.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub context: Vec<f64>,
    pub action: Vec<f64>,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(context: Vec<f64>, action: Vec<f64>, label: Label) -> Self {
        Self { context, action, label }
    }

    /// Concatenated `(context, action)` feature vector.
    pub fn features(&self) -> Vec<f64> {
        concat(&self.context, &self.action)
    }
}

fn concat(context: &[f64], action: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(context.len() + action.len());
    v.extend_from_slice(context);
    v.extend_from_slice(action);
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularConfig {
    /// Bins per dimension of the concatenated `(context, action)` vector.
    pub bins: usize,
    pub bounds: BoxBounds,
}

impl TabularConfig {
    pub fn new(bounds: BoxBounds) -> Self {
        Self { bins: 20, bounds }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// Bounds of the concatenated `(context, action)` vector. When set, inputs
    /// are mapped to `[-1, 1]` before entering the network; when `None` they
    /// are assumed to be normalized already.
    pub input_bounds: Option<BoxBounds>,
    /// Fraction of each set held out from training. When positive, the fit
    /// keeps the epoch with the lowest held-out objective instead of the last.
    pub holdout: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32, 32],
            batch_size: 32,
            max_epochs: 500,
            learning_rate: 1.0,
            input_bounds: None,
            holdout: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitConfig {
    Tabular(TabularConfig),
    Network(NetworkConfig),
}

/// Grid-discretized ratio table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRatio {
    bins: usize,
    bounds: BoxBounds,
    table: BTreeMap<Vec<usize>, f64>,
}

impl TabularRatio {
    pub fn key(&self, features: &[f64]) -> Vec<usize> {
        bin_key(self.bins, &self.bounds, features)
    }

    pub fn table(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.table
    }
}

fn bin_key(bins: usize, bounds: &BoxBounds, features: &[f64]) -> Vec<usize> {
    features
        .iter()
        .zip(bounds.lower().iter().zip(bounds.upper()))
        .map(|(x, (l, u))| {
            let t = ((x - l) / (u - l) * bins as f64).floor();
            t.clamp(0.0, (bins - 1) as f64) as usize
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRatio {
    net: DenseNet,
    input_bounds: Option<BoxBounds>,
}

impl NetworkRatio {
    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    fn input(&self, features: &[f64]) -> Vec<f64> {
        match &self.input_bounds {
            Some(b) => b.to_unit(features),
            None => features.to_vec(),
        }
    }

    /// Unclamped network output.
    pub fn raw(&self, features: &[f64]) -> Result<f64> {
        Ok(self.net.forward(&self.input(features))?[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImportanceModel {
    Tabular(TabularRatio),
    Network(NetworkRatio),
}

/// Per-epoch objective values recorded while fitting the network backend.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    /// Training objective after each epoch.
    pub epoch_objective: Vec<f64>,
    /// Held-out objective after each epoch (empty without a holdout).
    pub holdout_objective: Vec<f64>,
    /// Epoch whose weights were kept, counted from 1; 0 when no epoch ran.
    pub selected_epoch: usize,
}

pub fn fit_importance<R: Rng + ?Sized>(
    on_target: &[LabeledSample],
    off_target: &[LabeledSample],
    config: &FitConfig,
    rng: &mut R,
) -> Result<ImportanceModel> {
    fit_importance_with_report(on_target, off_target, config, rng).map(|(m, _)| m)
}

pub fn fit_importance_with_report<R: Rng + ?Sized>(
    on_target: &[LabeledSample],
    off_target: &[LabeledSample],
    config: &FitConfig,
    rng: &mut R,
) -> Result<(ImportanceModel, FitReport)> {
    if on_target.is_empty() {
        return Err(Error::EmptyInput("on-target set is empty".into()));
    }
    if off_target.is_empty() {
        return Err(Error::EmptyInput("off-target set is empty".into()));
    }
    let dim = on_target[0].context.len() + on_target[0].action.len();
    let ctx_dim = on_target[0].context.len();
    if on_target.iter().chain(off_target).any(|s| s.context.len() != ctx_dim || s.context.len() + s.action.len() != dim) {
        return Err(Error::Dimension("samples disagree in context or action length".into()));
    }
    match config {
        FitConfig::Tabular(cfg) => {
            if cfg.bounds.dim() != dim {
                return Err(Error::Dimension(format!("tabular bounds cover {} dims, samples have {dim}", cfg.bounds.dim())));
            }
            if cfg.bins == 0 {
                return Err(Error::InvalidConfig("tabular backend needs at least one bin".into()));
            }
            Ok((ImportanceModel::Tabular(fit_tabular(on_target, off_target, cfg)), FitReport::default()))
        }
        FitConfig::Network(cfg) => fit_network(on_target, off_target, cfg, dim, rng),
    }
}

fn fit_tabular(on_target: &[LabeledSample], off_target: &[LabeledSample], cfg: &TabularConfig) -> TabularRatio {
    let mut counts: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
    for s in on_target {
        counts.entry(bin_key(cfg.bins, &cfg.bounds, &s.features())).or_default().0 += 1;
    }
    for s in off_target {
        counts.entry(bin_key(cfg.bins, &cfg.bounds, &s.features())).or_default().1 += 1;
    }
    // Per bin, n_q * w^2 - 2 * n_p * w is minimized at w = n_p / n_q. A bin with
    // on-target mass but no off-target mass has an unbounded minimizer; it is
    // capped by using a unit denominator.
    let table = counts
        .into_iter()
        .map(|(k, (n_p, n_q))| (k, n_p as f64 / n_q.max(1) as f64))
        .collect();
    TabularRatio { bins: cfg.bins, bounds: cfg.bounds.clone(), table }
}

fn fit_network<R: Rng + ?Sized>(
    on_target: &[LabeledSample],
    off_target: &[LabeledSample],
    cfg: &NetworkConfig,
    dim: usize,
    rng: &mut R,
) -> Result<(ImportanceModel, FitReport)> {
    if cfg.batch_size == 0 || cfg.hidden.contains(&0) {
        return Err(Error::InvalidConfig("batch size and hidden widths must be positive".into()));
    }
    if let Some(b) = &cfg.input_bounds {
        if b.dim() != dim {
            return Err(Error::Dimension(format!("input bounds cover {} dims, samples have {dim}", b.dim())));
        }
    }
    let mut sizes = vec![dim];
    sizes.extend(&cfg.hidden);
    sizes.push(1);
    let mut activations = vec![Activation::Relu; cfg.hidden.len()];
    activations.push(Activation::Linear);
    let net = DenseNet::new(&sizes, &activations, rng)?;
    let mut model = NetworkRatio { net, input_bounds: cfg.input_bounds.clone() };

    if !(0.0..1.0).contains(&cfg.holdout) {
        return Err(Error::InvalidConfig("holdout fraction must lie in [0, 1)".into()));
    }
    let encode = |set: &[LabeledSample], on: bool| -> Vec<(Vec<f64>, bool)> {
        set.iter().map(|s| (model.input(&s.features()), on)).collect()
    };
    let (on_fit, on_held) = split_holdout(encode(on_target, true), cfg.holdout, rng);
    let (off_fit, off_held) = split_holdout(encode(off_target, false), cfg.holdout, rng);
    // The training sums estimate (n_p / n_q) * p / q; the held-out objective
    // uses means rescaled by the same ratio so both share a minimizer.
    let ratio = on_fit.len() as f64 / off_fit.len() as f64;
    let held_out = !on_held.is_empty() && !off_held.is_empty();

    // (features, is_on_target)
    let data: Vec<(Vec<f64>, bool)> = on_fit.into_iter().chain(off_fit).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut state = OptimizerState::new(OptimizerKind::adadelta(cfg.learning_rate), &model.net);
    let mut report = FitReport::default();
    let mut grads = Gradients::zeros_like(&model.net);
    let mut best: Option<(f64, DenseNet)> = None;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.scale(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (x, on) = &data[i];
                let trace = model.net.forward_trace(x)?;
                let out = trace.output()[0];
                // d/dw of w^2 for off-target, of -2w for on-target.
                let g = if *on { -2.0 } else { 2.0 * out };
                model.net.backward_accumulate(&trace, &[g], &mut grads, scale)?;
            }
            state.apply(&mut model.net, &grads)?;
            if !model.net.is_finite() {
                return Err(Error::Runtime("importance network diverged to non-finite weights".into()));
            }
        }
        report.epoch_objective.push(sum_objective(&model.net, &data)?);
        report.selected_epoch = epoch;
        if held_out {
            let (mut sq, mut lin) = (0.0, 0.0);
            for (x, _) in &off_held {
                let w = model.net.forward(x)?[0].max(0.0);
                sq += w * w;
            }
            for (x, _) in &on_held {
                lin += model.net.forward(x)?[0].max(0.0);
            }
            let j = sq / off_held.len() as f64 - 2.0 * ratio * lin / on_held.len() as f64;
            report.holdout_objective.push(j);
            if best.as_ref().is_none_or(|(b, _)| j < *b) {
                best = Some((j, model.net.clone()));
            }
        }
    }
    if let Some((j, net)) = best {
        model.net = net;
        report.selected_epoch = 1 + report.holdout_objective.iter().position(|&v| v == j).unwrap_or(0);
    }
    Ok((ImportanceModel::Network(model), report))
}

fn sum_objective(net: &DenseNet, data: &[(Vec<f64>, bool)]) -> Result<f64> {
    data.iter().try_fold(0.0, |acc, (x, on)| -> Result<f64> {
        let w = net.forward(x)?[0].max(0.0);
        Ok(acc + if *on { -2.0 * w } else { w * w })
    })
}

/// Shuffles `set` and moves `fraction` of it, rounded down, to the second half.
/// At least one point always stays in the training part.
fn split_holdout<T, R: Rng + ?Sized>(mut set: Vec<T>, fraction: f64, rng: &mut R) -> (Vec<T>, Vec<T>) {
    if fraction <= 0.0 {
        return (set, Vec::new());
    }
    set.shuffle(rng);
    let n_held = ((set.len() as f64 * fraction) as usize).min(set.len() - 1);
    let held = set.split_off(set.len() - n_held);
    (set, held)
}

impl ImportanceModel {
    /// Non-negative importance weight of `action` under `context`.
    pub fn weight(&self, context: &[f64], action: &[f64]) -> Result<f64> {
        let features = concat(context, action);
        match self {
            ImportanceModel::Tabular(t) => {
                if features.len() != t.bounds.dim() {
                    return Err(Error::Dimension(format!(
                        "query has {} features, table expects {}",
                        features.len(),
                        t.bounds.dim()
                    )));
                }
                Ok(t.table.get(&t.key(&features)).copied().unwrap_or(0.0))
            }
            ImportanceModel::Network(n) => {
                let raw = n.raw(&features)?;
                if !raw.is_finite() {
                    return Err(Error::Runtime("importance network produced a non-finite output".into()));
                }
                Ok(raw.max(0.0))
            }
        }
    }

    pub fn weight_of(&self, sample: &LabeledSample) -> Result<f64> {
        self.weight(&sample.context, &sample.action)
    }

    pub fn to_text(&self) -> String {
        match self {
            ImportanceModel::Tabular(t) => {
                let mut out = format!("IMPORTANCE tabular\nbins {}\n", t.bins);
                out.push_str(&format!("lower {}\n", join_reals(t.bounds.lower())));
                out.push_str(&format!("upper {}\n", join_reals(t.bounds.upper())));
                for (k, w) in &t.table {
                    let key = k.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
                    out.push_str(&format!("{key}\t{}\n", crate::neuralnet::format_real(*w)));
                }
                out
            }
            ImportanceModel::Network(n) => {
                let mut out = String::from("IMPORTANCE network\n");
                match &n.input_bounds {
                    Some(b) => {
                        out.push_str(&format!("lower {}\n", join_reals(b.lower())));
                        out.push_str(&format!("upper {}\n", join_reals(b.upper())));
                    }
                    None => out.push_str("unbounded\n"),
                }
                out.push_str(&n.net.to_text());
                out
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let tag = lines.next().ok_or_else(|| Error::Truncated("missing backend tag".into()))?;
        match tag.trim() {
            "IMPORTANCE tabular" => {
                let bins_line = lines.next().ok_or_else(|| Error::Truncated("missing bins line".into()))?;
                let bins = bins_line
                    .strip_prefix("bins ")
                    .and_then(|v| v.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::Format(format!("bad bins line '{bins_line}'")))?;
                let bounds = read_bounds(&mut lines)?;
                let mut table = BTreeMap::new();
                for line in lines.filter(|l| !l.trim().is_empty()) {
                    let (k, w) = line.split_once('\t').ok_or_else(|| Error::Format(format!("bad table line '{line}'")))?;
                    let key = k
                        .split(',')
                        .map(|t| t.parse::<usize>().map_err(|_| Error::Format(format!("bad key '{k}'"))))
                        .collect::<Result<Vec<_>>>()?;
                    if key.len() != bounds.dim() {
                        return Err(Error::Dimension(format!("key '{k}' does not match {} dims", bounds.dim())));
                    }
                    let w = w.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad weight '{w}'")))?;
                    table.insert(key, w);
                }
                Ok(ImportanceModel::Tabular(TabularRatio { bins, bounds, table }))
            }
            "IMPORTANCE network" => {
                let mut peek = lines.clone();
                let first = peek.next().ok_or_else(|| Error::Truncated("missing bounds".into()))?;
                let input_bounds = if first.trim() == "unbounded" {
                    lines.next();
                    None
                } else {
                    Some(read_bounds(&mut lines)?)
                };
                let net = DenseNet::read_lines(&mut lines, true)?;
                if net.output_dim() != 1 {
                    return Err(Error::Dimension("importance network must have a single output".into()));
                }
                Ok(ImportanceModel::Network(NetworkRatio { net, input_bounds }))
            }
            other => Err(Error::Version(format!("unknown importance backend tag '{other}'"))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn join_reals(v: &[f64]) -> String {
    v.iter().map(|x| crate::neuralnet::format_real(*x)).collect::<Vec<_>>().join(" ")
}

fn read_bounds<'a, I: Iterator<Item = &'a str>>(lines: &mut I) -> Result<BoxBounds> {
    let mut parse = |prefix: &str| -> Result<Vec<f64>> {
        let line = lines.next().ok_or_else(|| Error::Truncated(format!("missing {prefix} line")))?;
        let rest = line.strip_prefix(prefix).ok_or_else(|| Error::Format(format!("expected '{prefix}' line")))?;
        rest.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad bound '{t}'"))))
            .collect()
    };
    let lower = parse("lower")?;
    let upper = parse("upper")?;
    BoxBounds::new(lower, upper)
}

/// Sample objective `sum_{A_q} w^2 - 2 sum_{A_p} w` of a fitted model.
pub fn empirical_j(model: &ImportanceModel, on_target: &[LabeledSample], off_target: &[LabeledSample]) -> Result<f64> {
    let q_term = off_target.iter().try_fold(0.0, |acc, s| model.weight_of(s).map(|w| acc + w * w))?;
    let p_term = on_target.iter().try_fold(0.0, |acc, s| model.weight_of(s).map(|w| acc + w))?;
    Ok(q_term - 2.0 * p_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point(x: f64, label: Label) -> LabeledSample {
        LabeledSample::new(vec![], vec![x], label)
    }

    fn ab_dataset() -> (Vec<LabeledSample>, Vec<LabeledSample>, FitConfig) {
        // Two bins on [0, 2): "a" around 0.5 and "b" around 1.5.
        let off = vec![
            point(0.5, Label::OffTarget),
            point(0.5, Label::OffTarget),
            point(0.5, Label::OffTarget),
            point(1.5, Label::OffTarget),
        ];
        let on = vec![
            point(0.5, Label::OnTarget),
            point(1.5, Label::OnTarget),
            point(1.5, Label::OnTarget),
            point(1.5, Label::OnTarget),
        ];
        let cfg = FitConfig::Tabular(TabularConfig { bins: 2, bounds: BoxBounds::new(vec![0.0], vec![2.0]).unwrap() });
        (on, off, cfg)
    }

    #[test]
    fn tabular_closed_form_per_bin() {
        let (on, off, cfg) = ab_dataset();
        let model = fit_importance(&on, &off, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((model.weight(&[], &[0.5]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((model.weight(&[], &[1.5]).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tabular_objective_at_optimum() {
        let (on, off, cfg) = ab_dataset();
        let model = fit_importance(&on, &off, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let j = empirical_j(&model, &on, &off).unwrap();
        let expected = 3.0 * (1.0 / 9.0) + 9.0 - 2.0 * (1.0 / 3.0 + 9.0);
        assert!((j - expected).abs() < 1e-12);
        assert!((j + 9.333_333_333_333_334).abs() < 1e-9);
    }

    #[test]
    fn identical_multisets_give_unit_weights() {
        let xs = [0.1, 0.1, 0.7, 1.2, 1.9];
        let on: Vec<_> = xs.iter().map(|&x| point(x, Label::OnTarget)).collect();
        let off: Vec<_> = xs.iter().map(|&x| point(x, Label::OffTarget)).collect();
        let cfg = FitConfig::Tabular(TabularConfig::new(BoxBounds::new(vec![0.0], vec![2.0]).unwrap()));
        let model = fit_importance(&on, &off, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for x in xs {
            assert_eq!(model.weight(&[], &[x]).unwrap(), 1.0);
        }
    }

    #[test]
    fn unseen_bin_has_zero_weight() {
        let (on, off, cfg) = ab_dataset();
        let cfg = match cfg {
            FitConfig::Tabular(mut t) => {
                t.bins = 4;
                FitConfig::Tabular(t)
            }
            other => other,
        };
        let model = fit_importance(&on, &off, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(model.weight(&[], &[0.2]).unwrap(), 0.0);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let (on, off, cfg) = ab_dataset();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(fit_importance(&[], &off, &cfg, &mut rng), Err(Error::EmptyInput(_))));
        assert!(matches!(fit_importance(&on, &[], &cfg, &mut rng), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let (mut on, off, cfg) = ab_dataset();
        on.push(LabeledSample::new(vec![1.0], vec![0.5], Label::OnTarget));
        assert!(matches!(
            fit_importance(&on, &off, &cfg, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn objective_of_constant_weights() {
        let on: Vec<_> = (0..4).map(|i| point(i as f64 * 0.1, Label::OnTarget)).collect();
        let off: Vec<_> = (0..4).map(|i| point(i as f64 * 0.1, Label::OffTarget)).collect();
        let zero = ImportanceModel::Network(NetworkRatio {
            net: DenseNet::zeros(&[1, 1], &[Activation::Linear]).unwrap(),
            input_bounds: None,
        });
        assert_eq!(empirical_j(&zero, &on, &off).unwrap(), 0.0);
        let mut net = DenseNet::zeros(&[1, 1], &[Activation::Linear]).unwrap();
        net.layers_mut()[0].bias_mut()[0] = 1.0;
        let one = ImportanceModel::Network(NetworkRatio { net, input_bounds: None });
        assert_eq!(empirical_j(&one, &on, &off).unwrap(), -4.0);
    }

    #[test]
    fn negative_raw_output_is_clamped() {
        let mut net = DenseNet::zeros(&[1, 1], &[Activation::Linear]).unwrap();
        net.layers_mut()[0].bias_mut()[0] = -0.3;
        let model = ImportanceModel::Network(NetworkRatio { net, input_bounds: None });
        assert_eq!(model.weight(&[], &[0.2]).unwrap(), 0.0);
    }

    #[test]
    fn network_objective_decreases_during_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let on: Vec<_> = (0..60).map(|_| point(rng.random_range(0.5..1.0), Label::OnTarget)).collect();
        let off: Vec<_> = (0..120).map(|_| point(rng.random_range(-1.0..1.0), Label::OffTarget)).collect();
        let cfg = FitConfig::Network(NetworkConfig { max_epochs: 40, ..NetworkConfig::default() });
        let (model, report) = fit_importance_with_report(&on, &off, &cfg, &mut rng).unwrap();
        let first = report.epoch_objective[0];
        let last = *report.epoch_objective.last().unwrap();
        assert!(last <= first, "{first} -> {last}");
        assert!(model.weight(&[], &[0.75]).unwrap() > model.weight(&[], &[-0.75]).unwrap());
    }

    #[test]
    fn text_round_trip_for_both_backends() {
        let (on, off, cfg) = ab_dataset();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tab = fit_importance(&on, &off, &cfg, &mut rng).unwrap();
        assert_eq!(ImportanceModel::from_text(&tab.to_text()).unwrap(), tab);
        let net_cfg = FitConfig::Network(NetworkConfig {
            max_epochs: 2,
            input_bounds: Some(BoxBounds::new(vec![0.0], vec![2.0]).unwrap()),
            ..NetworkConfig::default()
        });
        let net = fit_importance(&on, &off, &net_cfg, &mut rng).unwrap();
        assert_eq!(ImportanceModel::from_text(&net.to_text()).unwrap(), net);
    }
}
