//! Conditional GAN training and the importance-weighted pipeline (GANDI).
//!
//! Both networks work in unit coordinates: the generator emits a vector in
//! `[-1, 1]^d` that is rescaled into the action box only when an action is
//! sampled for use, and the discriminator scores `(context, unit action)`.
//! Losses follow the standard convention, with the discriminator minimizing
//! `-mean[ln D(real) + ln(1 - D(fake))]` and the generator minimizing
//! `-mean ln D(fake)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::importance::{fit_importance, FitConfig, ImportanceModel, LabeledSample};
use crate::neuralnet::{format_real, Activation, DenseNet, Gradients, OptimizerKind, OptimizerState};
use crate::resampler::{bootstrap, build_plan};
use crate::{BoxBounds, Error, Result};

/// Lower bound applied to log arguments.
pub const LOG_FLOOR: f64 = 1e-12;

fn safe_ln(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// An action drawn from a generator, with a flag telling whether the raw
/// network output had to be clamped into the action box.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    pub action: Vec<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    net: DenseNet,
    noise_dim: usize,
    context_dim: usize,
    action_bounds: BoxBounds,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(
        context_dim: usize,
        noise_dim: usize,
        hidden: &[usize],
        action_bounds: BoxBounds,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = vec![context_dim + noise_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(action_bounds.dim());
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Linear);
        let net = DenseNet::new(&sizes, &acts, rng)?;
        Ok(Self { net, noise_dim, context_dim, action_bounds })
    }

    pub fn from_parts(net: DenseNet, noise_dim: usize, context_dim: usize, action_bounds: BoxBounds) -> Result<Self> {
        if net.input_dim() != context_dim + noise_dim || net.output_dim() != action_bounds.dim() {
            return Err(Error::Dimension(format!(
                "generator network {}->{} does not fit context {context_dim} + noise {noise_dim} -> action {}",
                net.input_dim(),
                net.output_dim(),
                action_bounds.dim()
            )));
        }
        Ok(Self { net, noise_dim, context_dim, action_bounds })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_bounds.dim()
    }

    pub fn action_bounds(&self) -> &BoxBounds {
        &self.action_bounds
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.noise_dim).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn input(&self, context: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        if context.len() != self.context_dim {
            return Err(Error::Dimension(format!("context has length {}, generator expects {}", context.len(), self.context_dim)));
        }
        let mut x = Vec::with_capacity(self.context_dim + self.noise_dim);
        x.extend_from_slice(context);
        x.extend_from_slice(noise);
        Ok(x)
    }

    /// Raw unit-coordinate output for a given noise vector, before clamping.
    pub fn raw_output(&self, context: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(&self.input(context, noise)?)
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, context: &[f64], rng: &mut R) -> Result<SampledAction> {
        let noise = self.draw_noise(rng);
        let raw = self.raw_output(context, &noise)?;
        let mut clamped = false;
        let unit: Vec<f64> = raw
            .iter()
            .map(|&u| {
                let c = if u.is_nan() { 0.0 } else { u.clamp(-1.0, 1.0) };
                clamped |= c != u;
                c
            })
            .collect();
        Ok(SampledAction { action: self.action_bounds.from_unit(&unit), clamped })
    }

    /// Fraction of `n` draws per context whose raw output left the unit box.
    pub fn clamp_rate<R: Rng + ?Sized>(&self, contexts: &[Vec<f64>], n: usize, rng: &mut R) -> Result<f64> {
        let mut clamped = 0usize;
        let mut total = 0usize;
        for c in contexts {
            for _ in 0..n {
                clamped += usize::from(self.sample_action(c, rng)?.clamped);
                total += 1;
            }
        }
        Ok(if total == 0 { 0.0 } else { clamped as f64 / total as f64 })
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format_real(*x)).collect::<Vec<_>>().join(" ");
        let mut out = String::from("GANDI-GENERATOR v1\n");
        let _ = writeln!(out, "noise_dim {}", self.noise_dim);
        let _ = writeln!(out, "context_dim {}", self.context_dim);
        let _ = writeln!(out, "lower {}", join(self.action_bounds.lower()));
        let _ = writeln!(out, "upper {}", join(self.action_bounds.upper()));
        out.push_str(&self.net.to_text());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "GANDI-GENERATOR v1" => {}
            Some(h) => return Err(Error::Version(format!("unexpected generator header '{h}'"))),
            None => return Err(Error::Truncated("empty generator file".into())),
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Truncated(format!("missing {name} line")))?;
            line.strip_prefix(name)
                .map(|r| r.trim().to_string())
                .ok_or_else(|| Error::Format(format!("expected '{name}' line, found '{line}'")))
        };
        let parse_usize = |s: String| s.parse::<usize>().map_err(|_| Error::Format(format!("bad integer '{s}'")));
        let parse_reals = |s: String| {
            s.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad real '{t}'"))))
                .collect::<Result<Vec<_>>>()
        };
        let noise_dim = parse_usize(field("noise_dim")?)?;
        let context_dim = parse_usize(field("context_dim")?)?;
        let lower = parse_reals(field("lower")?)?;
        let upper = parse_reals(field("upper")?)?;
        let net = DenseNet::read_lines(&mut lines, true)?;
        Self::from_parts(net, noise_dim, context_dim, BoxBounds::new(lower, upper)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    net: DenseNet,
    context_dim: usize,
    action_dim: usize,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(context_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let mut sizes = vec![context_dim + action_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Sigmoid);
        Ok(Self { net: DenseNet::new(&sizes, &acts, rng)?, context_dim, action_dim })
    }

    pub fn from_net(net: DenseNet, context_dim: usize) -> Result<Self> {
        if net.output_dim() != 1 || net.input_dim() < context_dim {
            return Err(Error::Dimension("discriminator needs one output and room for the context".into()));
        }
        if net.activations().last() != Some(&Activation::Sigmoid) {
            return Err(Error::InvalidConfig("discriminator output must be a sigmoid".into()));
        }
        let action_dim = net.input_dim() - context_dim;
        Ok(Self { net, context_dim, action_dim })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    fn input(&self, context: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        if context.len() != self.context_dim || action.len() != self.action_dim {
            return Err(Error::Dimension(format!(
                "discriminator expects context {} and action {}, got {} and {}",
                self.context_dim,
                self.action_dim,
                context.len(),
                action.len()
            )));
        }
        let mut x = Vec::with_capacity(self.context_dim + self.action_dim);
        x.extend_from_slice(context);
        x.extend_from_slice(action);
        Ok(x)
    }

    /// Probability in (0, 1) that `action` (unit coordinates) is on-target.
    pub fn prob(&self, context: &[f64], action: &[f64]) -> Result<f64> {
        Ok(self.net.forward(&self.input(context, action)?)?[0])
    }
}

fn check_pairs(contexts: &[Vec<f64>], a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    if contexts.len() != a.len() || a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "need equal counts of contexts, real and fake actions, got {}, {} and {}",
            contexts.len(),
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("no samples for the discriminator loss".into()));
    }
    Ok(())
}

/// `-(1/n) sum_i [ln D(c_i, real_i) + ln(1 - D(c_i, fake_i))]`.
pub fn discriminator_loss(
    d: &Discriminator,
    contexts: &[Vec<f64>],
    real_actions: &[Vec<f64>],
    fake_actions: &[Vec<f64>],
) -> Result<f64> {
    let ones = vec![1.0; real_actions.len()];
    weighted_discriminator_loss(d, contexts, real_actions, &ones, fake_actions)
}

/// Reweighted discriminator loss over off-target reals,
/// `-(1/n) sum_i [w_i ln D(c_i, a_i) + ln(1 - D(c_i, fake_i))]`.
///
/// Reference implementation only; training goes through the bootstrap.
pub fn weighted_discriminator_loss(
    d: &Discriminator,
    contexts: &[Vec<f64>],
    off_target_actions: &[Vec<f64>],
    weights: &[f64],
    fake_actions: &[Vec<f64>],
) -> Result<f64> {
    check_pairs(contexts, off_target_actions, fake_actions)?;
    if weights.len() != off_target_actions.len() {
        return Err(Error::Dimension("one weight per off-target action is required".into()));
    }
    if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
        return Err(Error::InvalidConfig(format!("negative or undefined weight {w}")));
    }
    let mut total = 0.0;
    for (((c, real), w), fake) in contexts.iter().zip(off_target_actions).zip(weights).zip(fake_actions) {
        if *w != 0.0 {
            total += w * safe_ln(d.prob(c, real)?);
        }
        total += safe_ln(1.0 - d.prob(c, fake)?);
    }
    Ok(-total / off_target_actions.len() as f64)
}

/// `-(1/n) sum_i ln D(c_i, fake_i)`.
pub fn generator_loss(d: &Discriminator, contexts: &[Vec<f64>], fake_actions: &[Vec<f64>]) -> Result<f64> {
    if contexts.len() != fake_actions.len() {
        return Err(Error::Dimension("need one context per fake action".into()));
    }
    if fake_actions.is_empty() {
        return Err(Error::EmptyInput("no samples for the generator loss".into()));
    }
    let mut total = 0.0;
    for (c, fake) in contexts.iter().zip(fake_actions) {
        total += safe_ln(d.prob(c, fake)?);
    }
    Ok(-total / fake_actions.len() as f64)
}

/// Optimal discriminator for a fixed generator: `wq / (wq + p_G)`.
pub fn optimal_discriminator_value(w_hat_q_density: f64, pg_density: f64) -> Result<f64> {
    if !(w_hat_q_density >= 0.0 && pg_density >= 0.0) {
        return Err(Error::Precondition("densities must be non-negative".into()));
    }
    let total = w_hat_q_density + pg_density;
    if total == 0.0 {
        return Err(Error::Precondition("optimal discriminator is 0/0 where both densities vanish".into()));
    }
    Ok(w_hat_q_density / total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub d_learning_rate: f64,
    pub g_learning_rate: f64,
    /// First-moment decay shared by both Adam optimizers. The usual 0.9 lets
    /// small datasets collapse onto one mode late in training.
    pub adam_beta1: f64,
    /// Checkpoint period in epochs; the final epoch is always checkpointed.
    pub checkpoint_every: usize,
    pub noise_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 500,
            d_learning_rate: 0.001,
            g_learning_rate: 0.001,
            adam_beta1: 0.5,
            checkpoint_every: 50,
            noise_dim: 4,
            generator_hidden: vec![32, 32, 32],
            discriminator_hidden: vec![32, 256, 32],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig("batch size must be at least 2".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidConfig("checkpoint period must be at least one epoch".into()));
        }
        if self.noise_dim == 0 {
            return Err(Error::InvalidConfig("noise dimension must be positive".into()));
        }
        if !(self.d_learning_rate > 0.0 && self.g_learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) {
            return Err(Error::InvalidConfig("Adam beta1 must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    pub generator: Generator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLosses {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub checkpoints: Vec<Checkpoint>,
    pub curve: Vec<EpochLosses>,
}

impl TrainOutcome {
    /// Training curve as CSV rows `epoch,d_loss,g_loss` with a header.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("epoch,d_loss,g_loss\n");
        for e in &self.curve {
            let _ = writeln!(out, "{},{},{}", e.epoch, format_real(e.d_loss), format_real(e.g_loss));
        }
        out
    }
}

/// Trains a conditional GAN on `dataset` (actions in `action_bounds`
/// coordinates). Each full mini-batch gets one discriminator step followed by
/// one generator step; a trailing partial batch is skipped so every
/// discriminator batch holds equally many real and generated actions.
pub fn train_gan<R: Rng + ?Sized>(
    dataset: &[LabeledSample],
    action_bounds: &BoxBounds,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.len() < config.batch_size {
        return Err(Error::EmptyInput(format!(
            "dataset has {} samples, fewer than one batch of {}",
            dataset.len(),
            config.batch_size
        )));
    }
    let context_dim = dataset[0].context.len();
    if dataset.iter().any(|s| s.context.len() != context_dim || s.action.len() != action_bounds.dim()) {
        return Err(Error::Dimension("dataset samples disagree with each other or with the action box".into()));
    }
    let mut generator =
        Generator::new(context_dim, config.noise_dim, &config.generator_hidden, action_bounds.clone(), rng)?;
    let mut disc = Discriminator::new(context_dim, action_bounds.dim(), &config.discriminator_hidden, rng)?;
    let reals: Vec<(Vec<f64>, Vec<f64>)> =
        dataset.iter().map(|s| (s.context.clone(), action_bounds.to_unit(&s.action))).collect();

    let adam = |learning_rate| OptimizerKind::Adam { learning_rate, beta1: config.adam_beta1, beta2: 0.999, epsilon: 1e-8 };
    let mut d_opt = OptimizerState::new(adam(config.d_learning_rate), &disc.net);
    let mut g_opt = OptimizerState::new(adam(config.g_learning_rate), &generator.net);
    let mut d_grads = Gradients::zeros_like(&disc.net);
    let mut g_grads = Gradients::zeros_like(&generator.net);
    let mut order: Vec<usize> = (0..reals.len()).collect();
    let mut checkpoints = Vec::new();
    let mut curve = Vec::new();

    if config.max_epochs == 0 {
        checkpoints.push(Checkpoint { epoch: 0, generator: generator.clone() });
    }
    for epoch in 1..=config.max_epochs {
        order.shuffle(rng);
        let mut d_sum = 0.0;
        let mut g_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks_exact(config.batch_size) {
            let scale = 1.0 / batch.len() as f64;

            // Discriminator step on (real, generated) pairs sharing contexts.
            d_grads.scale(0.0);
            let mut d_loss = 0.0;
            for &i in batch {
                let (ctx, real) = &reals[i];
                let trace = disc.net.forward_trace(&disc.input(ctx, real)?)?;
                let y = trace.output()[0];
                d_loss -= safe_ln(y);
                disc.net.backward_accumulate(&trace, &[-1.0 / y.max(LOG_FLOOR)], &mut d_grads, scale)?;

                let noise = generator.draw_noise(rng);
                let fake = generator.raw_output(ctx, &noise)?;
                let trace = disc.net.forward_trace(&disc.input(ctx, &fake)?)?;
                let y = trace.output()[0];
                d_loss -= safe_ln(1.0 - y);
                disc.net.backward_accumulate(&trace, &[1.0 / (1.0 - y).max(LOG_FLOOR)], &mut d_grads, scale)?;
            }
            d_opt.apply(&mut disc.net, &d_grads)?;

            // Generator step through the updated discriminator.
            g_grads.scale(0.0);
            let mut g_loss = 0.0;
            for &i in batch {
                let ctx = &reals[i].0;
                let noise = generator.draw_noise(rng);
                let g_trace = generator.net.forward_trace(&generator.input(ctx, &noise)?)?;
                let d_trace = disc.net.forward_trace(&disc.input(ctx, g_trace.output())?)?;
                let y = d_trace.output()[0];
                g_loss -= safe_ln(y);
                let (_, input_grad) = disc.net.backward(&d_trace, &[-1.0 / y.max(LOG_FLOOR)])?;
                generator.net.backward_accumulate(&g_trace, &input_grad[context_dim..], &mut g_grads, scale)?;
            }
            g_opt.apply(&mut generator.net, &g_grads)?;

            if !disc.net.is_finite() || !generator.net.is_finite() {
                return Err(Error::Runtime(format!("adversarial training diverged at epoch {epoch}")));
            }
            d_sum += d_loss * scale;
            g_sum += g_loss * scale;
            batches += 1;
        }
        curve.push(EpochLosses { epoch, d_loss: d_sum / batches as f64, g_loss: g_sum / batches as f64 });
        if epoch % config.checkpoint_every == 0 || epoch == config.max_epochs {
            checkpoints.push(Checkpoint { epoch, generator: generator.clone() });
        }
    }
    Ok(TrainOutcome { generator, discriminator: disc, checkpoints, curve })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GandiConfig {
    pub importance: FitConfig,
    /// Bootstrap size; `None` uses the merged dataset size.
    pub bootstrap_size: Option<usize>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone)]
pub struct GandiOutcome {
    pub importance: ImportanceModel,
    pub effective_sample_size: f64,
    pub bootstrapped: Vec<LabeledSample>,
    pub training: TrainOutcome,
}

/// Fit the importance ratio, bootstrap the merged dataset in proportion to it,
/// then train a GAN with the bootstrapped set as its on-target data.
pub fn gandi<R: Rng + ?Sized>(
    on_target: &[LabeledSample],
    off_target: &[LabeledSample],
    action_bounds: &BoxBounds,
    config: &GandiConfig,
    rng: &mut R,
) -> Result<GandiOutcome> {
    let importance = fit_importance(on_target, off_target, &config.importance, rng)?;
    let merged: Vec<LabeledSample> = on_target.iter().chain(off_target).cloned().collect();
    let n = config.bootstrap_size.unwrap_or(merged.len());
    let plan = build_plan(merged, &importance)?;
    let bootstrapped = bootstrap(&plan, n, rng);
    let training = train_gan(&bootstrapped, action_bounds, &config.train, rng)?;
    Ok(GandiOutcome { importance, effective_sample_size: plan.effective_sample_size(), bootstrapped, training })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::importance::Label;
    use crate::neuralnet::DenseLayer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Discriminator whose output is sigmoid(a * x + b) on a 1D action.
    fn fixed_disc(a: f64, b: f64) -> Discriminator {
        let layer = DenseLayer::from_parts(1, 1, vec![a], vec![b], Activation::Sigmoid).unwrap();
        Discriminator::from_net(DenseNet::from_layers(vec![layer]).unwrap(), 0).unwrap()
    }

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    #[test]
    fn losses_at_half() {
        let d = fixed_disc(0.0, 0.0);
        let c = vec![vec![]];
        let l = discriminator_loss(&d, &c, &[vec![0.1]], &[vec![0.9]]).unwrap();
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((generator_loss(&d, &c, &[vec![0.3]]).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_values_from_probabilities() {
        // D(x) = sigmoid(x) so the action value is the logit.
        let d = fixed_disc(1.0, 0.0);
        let c = vec![vec![]];
        let l = discriminator_loss(&d, &c, &[vec![logit(0.9)]], &[vec![logit(0.2)]]).unwrap();
        assert!((l + (0.9f64.ln() + 0.8f64.ln())).abs() < 1e-12);
        assert!((l - 0.328_504_066_972_036).abs() < 1e-9);
        let g = generator_loss(&d, &c, &[vec![logit(0.25)]]).unwrap();
        assert!((g - 4f64.ln()).abs() < 1e-12);
        let near = discriminator_loss(&d, &c, &[vec![25.0]], &[vec![-25.0]]).unwrap();
        assert!(near < 1e-10);
        assert!(generator_loss(&d, &c, &[vec![25.0]]).unwrap() < 1e-10);
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let d = fixed_disc(1.0, 0.0);
        let r = discriminator_loss(&d, &[vec![], vec![]], &[vec![0.0], vec![1.0]], &[vec![0.0]]);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn weighted_loss_reductions() {
        let d = fixed_disc(1.3, -0.2);
        let c = vec![vec![]; 2];
        let reals = vec![vec![0.4], vec![-0.7]];
        let fakes = vec![vec![1.1], vec![0.2]];
        let plain = discriminator_loss(&d, &c, &reals, &fakes).unwrap();
        let weighted = weighted_discriminator_loss(&d, &c, &reals, &[1.0, 1.0], &fakes).unwrap();
        assert!((plain - weighted).abs() < 1e-15);

        let zero = weighted_discriminator_loss(&d, &c, &reals, &[0.0, 0.0], &fakes).unwrap();
        let fake_only = -(fakes.iter().map(|f| (1.0 - d.prob(&[], f).unwrap()).ln()).sum::<f64>()) / 2.0;
        assert!((zero - fake_only).abs() < 1e-12);

        let a = weighted_discriminator_loss(&d, &c, &reals, &[2.0, 0.0], &fakes).unwrap();
        let dup = vec![reals[0].clone(), reals[0].clone()];
        let b = weighted_discriminator_loss(&d, &c, &dup, &[1.0, 1.0], &fakes).unwrap();
        assert!((a - b).abs() < 1e-12);

        assert!(weighted_discriminator_loss(&d, &c, &reals, &[1.0, -0.5], &fakes).is_err());
    }

    #[test]
    fn bootstrap_expectation_matches_weighted_loss() {
        // Exact expectation of the plain real-term over an n-draw bootstrap
        // is sum_i p_i ln D(a_i), which is the weighted term with w = n p.
        let d = fixed_disc(0.8, 0.1);
        let actions = [vec![-0.5], vec![0.0], vec![0.6], vec![0.9]];
        let raw_w = [0.0, 1.5, 0.5, 2.0];
        let total: f64 = raw_w.iter().sum();
        let n = actions.len();
        let c = vec![vec![]; n];
        let fakes = vec![vec![0.3]; n];
        let expected_plain = {
            let real: f64 = actions.iter().zip(&raw_w).map(|(a, w)| w / total * d.prob(&[], a).unwrap().ln()).sum();
            let fake: f64 = fakes.iter().map(|f| (1.0 - d.prob(&[], f).unwrap()).ln()).sum::<f64>() / n as f64;
            -(real + fake)
        };
        let scaled: Vec<f64> = raw_w.iter().map(|w| w / total * n as f64).collect();
        let weighted = weighted_discriminator_loss(&d, &c, &actions, &scaled, &fakes).unwrap();
        assert!((expected_plain - weighted).abs() < 1e-12);
    }

    #[test]
    fn optimal_discriminator_closed_form() {
        assert_eq!(optimal_discriminator_value(0.3, 0.3).unwrap(), 0.5);
        assert!((optimal_discriminator_value(0.6, 0.2).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(optimal_discriminator_value(0.4, 0.0).unwrap(), 1.0);
        assert!(optimal_discriminator_value(0.0, 0.0).is_err());
    }

    fn gaussian_data(n: usize, seed: u64) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                LabeledSample::new(vec![], vec![1.0 + 0.1 * x, 1.0 + 0.1 * y], Label::OnTarget)
            })
            .collect()
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let data = gaussian_data(64, 1);
        let bounds = BoxBounds::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let cfg = TrainConfig { max_epochs: 0, ..TrainConfig::default() };
        let out = train_gan(&data, &bounds, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let init = Generator::new(0, 4, &[32, 32, 32], bounds, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(out.generator, init);
        assert_eq!(out.checkpoints.len(), 1);
    }

    #[test]
    fn training_is_deterministic() {
        let data = gaussian_data(96, 2);
        let bounds = BoxBounds::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let cfg = TrainConfig { max_epochs: 3, checkpoint_every: 1, ..TrainConfig::default() };
        let a = train_gan(&data, &bounds, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = train_gan(&data, &bounds, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a.generator, b.generator);
        assert_eq!(a.checkpoints.len(), 3);
        assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn too_small_dataset_fails() {
        let data = gaussian_data(10, 3);
        let bounds = BoxBounds::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        assert!(train_gan(&data, &bounds, &TrainConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn samples_stay_in_box_and_round_trip() {
        let bounds = BoxBounds::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap();
        let g = Generator::new(2, 4, &[8], bounds.clone(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let s = g.sample_action(&[3.0, -2.0], &mut rng).unwrap();
            assert!(bounds.contains(&s.action));
        }
        let a = g.sample_action(&[0.1, 0.2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = g.sample_action(&[0.1, 0.2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(Generator::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn gandi_rejects_empty_on_target() {
        let off = gaussian_data(40, 4);
        let bounds = BoxBounds::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let cfg = GandiConfig {
            importance: FitConfig::Network(Default::default()),
            bootstrap_size: None,
            train: TrainConfig::default(),
        };
        assert!(matches!(
            gandi(&[], &off, &bounds, &cfg, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::EmptyInput(_))
        ));
    }
}
