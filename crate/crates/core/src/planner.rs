//! Best-first search over continuous actions.
//!
//! Each expansion pops the node with the smallest ordering key, returns it if
//! it satisfies the goal, and otherwise draws `k` actions from a sampler,
//! pushes every feasible child and pushes the popped node back so it can be
//! expanded again later with fresh samples. There is no closed list.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::RngCore;

use crate::importance::{Label, LabeledSample};
use crate::{Error, Result};

/// A planning problem for a single instance.
pub trait SearchProblem {
    type State: Clone;

    fn initial_state(&self) -> Self::State;
    fn is_goal(&self, state: &Self::State) -> bool;
    fn heuristic(&self, state: &Self::State) -> f64;
    /// Successor of `state` under `action`, or `None` if the action is infeasible.
    fn step(&self, state: &Self::State, action: &[f64]) -> Option<Self::State>;
    /// Learning representation of a sampled pair: `(context, action)`.
    fn experience(&self, state: &Self::State, action: &[f64]) -> (Vec<f64>, Vec<f64>);
}

pub trait ActionSampler<P: SearchProblem + ?Sized> {
    fn sample(&mut self, problem: &P, state: &P::State, rng: &mut dyn RngCore) -> Result<Vec<f64>>;
}

impl<P, F> ActionSampler<P> for F
where
    P: SearchProblem + ?Sized,
    F: FnMut(&P, &P::State, &mut dyn RngCore) -> Result<Vec<f64>>,
{
    fn sample(&mut self, problem: &P, state: &P::State, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        self(problem, state, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub max_expansions: Option<usize>,
    pub max_wall_seconds: Option<f64>,
}

impl SearchBudget {
    pub fn expansions(n: usize) -> Self {
        Self { max_expansions: Some(n), max_wall_seconds: None }
    }

    fn validate(&self) -> Result<()> {
        if self.max_expansions.is_none() && self.max_wall_seconds.is_none() {
            return Err(Error::InvalidConfig("search budget needs an expansion or time limit".into()));
        }
        if let Some(s) = self.max_wall_seconds {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidConfig(format!("bad time limit {s}")));
            }
        }
        Ok(())
    }
}

/// Node ordering key `(1 - lambda) * H + lambda * depth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeOrdering {
    path_cost_weight: f64,
}

impl NodeOrdering {
    pub fn greedy() -> Self {
        Self { path_cost_weight: 0.0 }
    }

    pub fn path_cost_weight(&self) -> f64 {
        self.path_cost_weight
    }

    pub fn key(&self, h: f64, depth: usize) -> f64 {
        let l = self.path_cost_weight;
        if l == 0.0 {
            h
        } else {
            (1.0 - l) * h + l * depth as f64
        }
    }
}

impl Default for NodeOrdering {
    fn default() -> Self {
        Self::greedy()
    }
}

pub fn greedy_heuristic_with_weight(path_cost_weight: f64) -> Result<NodeOrdering> {
    if !(0.0..=1.0).contains(&path_cost_weight) {
        return Err(Error::InvalidConfig(format!("path cost weight {path_cost_weight} outside [0, 1]")));
    }
    Ok(NodeOrdering { path_cost_weight })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode<S> {
    pub state: S,
    pub parent: Option<usize>,
    pub action_in: Option<Vec<f64>>,
    pub depth: usize,
    pub h_value: f64,
}

/// One sampled action. `child` is `None` when the action was infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub node: usize,
    pub action: Vec<f64>,
    pub child: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Solved,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<S> {
    pub outcome: Outcome,
    /// `(state, action)` pairs from the root to the goal.
    pub plan: Vec<(S, Vec<f64>)>,
    pub expansions: usize,
    pub nodes: Vec<SearchNode<S>>,
    pub samples: Vec<SampleRecord>,
    pub goal_node: Option<usize>,
    /// Number of times each node was popped and expanded.
    pub expansions_per_node: Vec<usize>,
}

impl<S> SearchResult<S> {
    pub fn solved(&self) -> bool {
        self.outcome == Outcome::Solved
    }
}

struct QueueEntry {
    key: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    // BinaryHeap is a max-heap: smaller key, then earlier insertion, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.seq.cmp(&self.seq))
    }
}

pub fn search<P, A, R>(
    problem: &P,
    k: usize,
    ordering: NodeOrdering,
    sampler: &mut A,
    budget: SearchBudget,
    rng: &mut R,
) -> Result<SearchResult<P::State>>
where
    P: SearchProblem + ?Sized,
    A: ActionSampler<P> + ?Sized,
    R: RngCore,
{
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    budget.validate()?;
    let deadline = budget.max_wall_seconds.map(|s| Instant::now() + Duration::from_secs_f64(s));

    let root_state = problem.initial_state();
    let h = problem.heuristic(&root_state);
    let mut nodes = vec![SearchNode { state: root_state, parent: None, action_in: None, depth: 0, h_value: h }];
    let mut expansions_per_node = vec![0usize];
    let mut samples = Vec::new();
    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    queue.push(QueueEntry { key: ordering.key(h, 0), seq, node: 0 });
    let mut expansions = 0usize;

    while let Some(entry) = queue.pop() {
        let idx = entry.node;
        if problem.is_goal(&nodes[idx].state) {
            let plan = plan_to(&nodes, idx);
            return Ok(SearchResult {
                outcome: Outcome::Solved,
                plan,
                expansions,
                nodes,
                samples,
                goal_node: Some(idx),
                expansions_per_node,
            });
        }
        let out_of_expansions = budget.max_expansions.is_some_and(|m| expansions >= m);
        let out_of_time = deadline.is_some_and(|d| Instant::now() >= d);
        if out_of_expansions || out_of_time {
            break;
        }
        expansions += 1;
        expansions_per_node[idx] += 1;
        for _ in 0..k {
            let action = sampler.sample(problem, &nodes[idx].state, rng)?;
            let child = problem.step(&nodes[idx].state, &action).map(|state| {
                let depth = nodes[idx].depth + 1;
                let h_value = problem.heuristic(&state);
                nodes.push(SearchNode { state, parent: Some(idx), action_in: Some(action.clone()), depth, h_value });
                expansions_per_node.push(0);
                let c = nodes.len() - 1;
                seq += 1;
                queue.push(QueueEntry { key: ordering.key(h_value, depth), seq, node: c });
                c
            });
            samples.push(SampleRecord { node: idx, action, child });
        }
        seq += 1;
        queue.push(QueueEntry { key: entry.key, seq, node: idx });
    }
    Ok(SearchResult {
        outcome: Outcome::BudgetExhausted,
        plan: Vec::new(),
        expansions,
        nodes,
        samples,
        goal_node: None,
        expansions_per_node,
    })
}

fn plan_to<S: Clone>(nodes: &[SearchNode<S>], goal: usize) -> Vec<(S, Vec<f64>)> {
    let mut plan = Vec::new();
    let mut cur = goal;
    while let Some(parent) = nodes[cur].parent {
        let action = nodes[cur].action_in.clone().expect("non-root node has an action");
        plan.push((nodes[parent].state.clone(), action));
        cur = parent;
    }
    plan.reverse();
    plan
}

/// Indices into `result.samples` of the actions on the returned plan.
pub fn plan_sample_indices<S>(result: &SearchResult<S>) -> Result<Vec<usize>> {
    let goal = result.goal_node.ok_or(Error::Unsolved)?;
    let mut on_plan = vec![false; result.nodes.len()];
    let mut cur = goal;
    while let Some(p) = result.nodes[cur].parent {
        on_plan[cur] = true;
        cur = p;
    }
    Ok(result
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.child.is_some_and(|c| on_plan[c]))
        .map(|(i, _)| i)
        .collect())
}

/// Splits the feasible samples of a solved search into on-target (plan)
/// and off-target (everything else). Infeasible samples are dropped.
pub fn extract_experience<P>(problem: &P, result: &SearchResult<P::State>) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>)>
where
    P: SearchProblem + ?Sized,
{
    let plan_idx = plan_sample_indices(result)?;
    let mut on_plan = vec![false; result.samples.len()];
    for i in plan_idx {
        on_plan[i] = true;
    }
    let mut on = Vec::new();
    let mut off = Vec::new();
    for (i, s) in result.samples.iter().enumerate() {
        if s.child.is_none() {
            continue;
        }
        let (context, action) = problem.experience(&result.nodes[s.node].state, &s.action);
        if on_plan[i] {
            on.push(LabeledSample::new(context, action, Label::OnTarget));
        } else {
            off.push(LabeledSample::new(context, action, Label::OffTarget));
        }
    }
    Ok((on, off))
}

/// Replays the plan through the problem's transition from its initial state.
pub fn replay_reaches_goal<P>(problem: &P, plan: &[(P::State, Vec<f64>)]) -> bool
where
    P: SearchProblem + ?Sized,
{
    let mut state = problem.initial_state();
    for (_, action) in plan {
        match problem.step(&state, action) {
            Some(next) => state = next,
            None => return false,
        }
    }
    problem.is_goal(&state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// State is (running sum, depth); one action in [0, 1] adds to the sum.
    struct Chain {
        max_depth: usize,
    }

    impl SearchProblem for Chain {
        type State = (f64, usize);
        fn initial_state(&self) -> Self::State {
            (0.0, 0)
        }
        fn is_goal(&self, s: &Self::State) -> bool {
            s.0 >= 0.5
        }
        fn heuristic(&self, s: &Self::State) -> f64 {
            (0.5 - s.0).max(0.0)
        }
        fn step(&self, s: &Self::State, a: &[f64]) -> Option<Self::State> {
            (s.1 < self.max_depth && (0.0..=1.0).contains(&a[0])).then(|| (s.0 + a[0], s.1 + 1))
        }
        fn experience(&self, s: &Self::State, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
            (vec![s.0], a.to_vec())
        }
    }

    fn uniform(_: &Chain, _: &(f64, usize), rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Ok(vec![rng.random::<f64>()])
    }

    #[test]
    fn goal_at_root_needs_no_expansion() {
        struct Done;
        impl SearchProblem for Done {
            type State = ();
            fn initial_state(&self) {}
            fn is_goal(&self, _: &()) -> bool {
                true
            }
            fn heuristic(&self, _: &()) -> f64 {
                0.0
            }
            fn step(&self, _: &(), _: &[f64]) -> Option<()> {
                None
            }
            fn experience(&self, _: &(), a: &[f64]) -> (Vec<f64>, Vec<f64>) {
                (vec![], a.to_vec())
            }
        }
        let mut s = |_: &Done, _: &(), _: &mut dyn RngCore| -> Result<Vec<f64>> { Ok(vec![0.0]) };
        let r = search(&Done, 3, NodeOrdering::greedy(), &mut s, SearchBudget::expansions(5), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!(r.solved());
        assert_eq!(r.plan.len(), 0);
        assert_eq!(r.expansions, 0);
    }

    #[test]
    fn single_expansion_success_rate() {
        let problem = Chain { max_depth: 1 };
        let mut wins = 0;
        for seed in 0..2000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = search(&problem, 3, NodeOrdering::greedy(), &mut uniform, SearchBudget::expansions(1), &mut rng).unwrap();
            wins += usize::from(r.solved());
        }
        let rate = wins as f64 / 2000.0;
        assert!((rate - 0.875).abs() <= 0.02, "{rate}");
    }

    #[test]
    fn infeasible_sampler_repushes_root() {
        let problem = Chain { max_depth: 3 };
        let mut bad = |_: &Chain, _: &(f64, usize), _: &mut dyn RngCore| -> Result<Vec<f64>> { Ok(vec![2.0]) };
        let r = search(&problem, 3, NodeOrdering::greedy(), &mut bad, SearchBudget::expansions(10), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(r.outcome, Outcome::BudgetExhausted);
        assert_eq!(r.expansions, 10);
        assert_eq!(r.expansions_per_node, vec![10]);
        assert_eq!(r.samples.len(), 30);
        assert!(r.samples.iter().all(|s| s.child.is_none()));
    }

    #[test]
    fn zero_budget_and_zero_k_are_rejected() {
        let problem = Chain { max_depth: 1 };
        let none = SearchBudget { max_expansions: None, max_wall_seconds: None };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(search(&problem, 3, NodeOrdering::greedy(), &mut uniform, none, &mut rng).is_err());
        assert!(search(&problem, 0, NodeOrdering::greedy(), &mut uniform, SearchBudget::expansions(1), &mut rng).is_err());
    }

    #[test]
    fn ordering_keys() {
        let g = greedy_heuristic_with_weight(0.0).unwrap();
        assert_eq!(g.key(2.5, 7), 2.5);
        let half = greedy_heuristic_with_weight(0.5).unwrap();
        assert_eq!(half.key(2.0, 0), 1.0);
        assert_eq!(half.key(1.0, 4), 2.5);
        let bfs = greedy_heuristic_with_weight(1.0).unwrap();
        assert!(bfs.key(9.0, 1) < bfs.key(0.0, 2));
        assert!(greedy_heuristic_with_weight(1.5).is_err());
        assert!(greedy_heuristic_with_weight(-0.1).is_err());
    }

    #[test]
    fn unit_weight_orders_by_depth_and_keeps_reexpanding_the_root() {
        // With lambda = 1 the key is the depth, so shallower nodes always win.
        // Since the popped node is pushed back, the root is never left behind.
        struct Flat;
        impl SearchProblem for Flat {
            type State = usize;
            fn initial_state(&self) -> usize {
                0
            }
            fn is_goal(&self, _: &usize) -> bool {
                false
            }
            fn heuristic(&self, _: &usize) -> f64 {
                1.0
            }
            fn step(&self, s: &usize, _: &[f64]) -> Option<usize> {
                Some(s + 1)
            }
            fn experience(&self, _: &usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
                (vec![], a.to_vec())
            }
        }
        let mut s = |_: &Flat, _: &usize, _: &mut dyn RngCore| -> Result<Vec<f64>> { Ok(vec![0.0]) };
        let bfs = greedy_heuristic_with_weight(1.0).unwrap();
        let r = search(&Flat, 2, bfs, &mut s, SearchBudget::expansions(3), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let expanded: Vec<usize> = r.samples.iter().map(|s| r.nodes[s.node].depth).collect();
        assert_eq!(expanded, vec![0; 6]);
        let mut keys: Vec<(f64, usize)> = (0..5).rev().map(|d| (bfs.key(1.0, d), d)).collect();
        keys.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(keys.iter().map(|k| k.1).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn experience_partitions_feasible_samples() {
        let problem = Chain { max_depth: 6 };
        let mut sampler = |_: &Chain, _: &(f64, usize), rng: &mut dyn RngCore| -> Result<Vec<f64>> {
            Ok(vec![rng.random_range(-0.1..0.2)])
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = search(&problem, 3, NodeOrdering::greedy(), &mut sampler, SearchBudget::expansions(500), &mut rng).unwrap();
        assert!(r.solved());
        assert!(replay_reaches_goal(&problem, &r.plan));
        let (on, off) = extract_experience(&problem, &r).unwrap();
        let feasible = r.samples.iter().filter(|s| s.child.is_some()).count();
        assert_eq!(on.len(), r.plan.len());
        assert_eq!(on.len() + off.len(), feasible);
        for idx in plan_sample_indices(&r).unwrap() {
            let s = &r.samples[idx];
            let child = s.child.unwrap();
            assert_eq!(problem.step(&r.nodes[s.node].state, &s.action), Some(r.nodes[child].state));
        }
    }

    #[test]
    fn unsolved_result_has_no_experience() {
        let problem = Chain { max_depth: 1 };
        let mut zero = |_: &Chain, _: &(f64, usize), _: &mut dyn RngCore| -> Result<Vec<f64>> { Ok(vec![0.0]) };
        let r = search(&problem, 3, NodeOrdering::greedy(), &mut zero, SearchBudget::expansions(2), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!(matches!(extract_experience(&problem, &r), Err(Error::Unsolved)));
    }

    #[test]
    fn search_is_deterministic() {
        let problem = Chain { max_depth: 4 };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            let mut s = |_: &Chain, _: &(f64, usize), rng: &mut dyn RngCore| -> Result<Vec<f64>> {
                Ok(vec![rng.random_range(0.0..0.2)])
            };
            search(&problem, 3, NodeOrdering::greedy(), &mut s, SearchBudget::expansions(50), &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }
}
