//! Planning domains and their action samplers.

pub mod binpack;
pub mod geometry;
pub mod gmm;
pub mod reconfig;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::adversarial::Generator;
use crate::planner::ActionSampler;
use crate::{Error, Result};

pub use binpack::{AccessModel, BinPackConfig, BinPackInstance, BinPackProblem, BinPackState};
pub use gmm::GmmSpec;
pub use reconfig::{ReconfigConfig, ReconfigMove, ReconfigProblem, ReconfigState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Gmm,
    BinPack,
    Reconfig,
}

impl DomainKind {
    pub fn tag(self) -> &'static str {
        match self {
            DomainKind::Gmm => "gmm",
            DomainKind::BinPack => "binpack",
            DomainKind::Reconfig => "reconfig",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmm" => Ok(DomainKind::Gmm),
            "binpack" => Ok(DomainKind::BinPack),
            "reconfig" => Ok(DomainKind::Reconfig),
            other => Err(Error::InvalidConfig(format!("unknown domain '{other}'"))),
        }
    }
}

/// Uniform over the action box; for reconfiguration the obstacle is also
/// drawn uniformly.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSampler;

impl ActionSampler<BinPackProblem<'_>> for UniformSampler {
    fn sample(&mut self, problem: &BinPackProblem<'_>, _: &BinPackState, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Ok(problem.uniform_action(rng))
    }
}

impl ActionSampler<ReconfigProblem<'_>> for UniformSampler {
    fn sample(&mut self, problem: &ReconfigProblem<'_>, _: &ReconfigState, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Ok(problem.uniform_action(rng))
    }
}

/// Draws actions from a trained generator and counts clamp events.
#[derive(Debug, Clone)]
pub struct LearnedSampler<'g> {
    pub generator: &'g Generator,
    pub draws: usize,
    pub clamped: usize,
}

impl<'g> LearnedSampler<'g> {
    pub fn new(generator: &'g Generator) -> Self {
        Self { generator, draws: 0, clamped: 0 }
    }

    pub fn clamp_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.clamped as f64 / self.draws as f64
        }
    }

    fn draw(&mut self, context: &[f64], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let s = self.generator.sample_action(context, rng)?;
        self.draws += 1;
        self.clamped += usize::from(s.clamped);
        Ok(s.action)
    }
}

impl ActionSampler<BinPackProblem<'_>> for LearnedSampler<'_> {
    fn sample(&mut self, problem: &BinPackProblem<'_>, state: &BinPackState, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let context = problem.config.featurize(&problem.instance, state);
        self.draw(&context, rng)
    }
}

impl ActionSampler<ReconfigProblem<'_>> for LearnedSampler<'_> {
    fn sample(&mut self, problem: &ReconfigProblem<'_>, state: &ReconfigState, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let selector = rng.random_range(-1.0..=1.0);
        let placement = self.draw(&problem.config.featurize(state), rng)?;
        let mut action = vec![selector];
        action.extend(placement);
        Ok(action)
    }
}
