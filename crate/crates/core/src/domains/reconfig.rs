//! Reconfiguration: clear access to a target object by moving obstacles.
//!
//! Same side-access geometry as bin packing, in a bin spanning `x` in
//! `[0, depth]` and `y` in `[0, width]` with the opening along `x = 0`. The
//! target sits against the back wall; movable obstacles may stand in its
//! access corridor. Moving an obstacle needs a clear corridor both where it
//! is and where it goes. Any move that leaves a different obstacle in the
//! target's corridor makes no progress.

use rand::{Rng, RngCore};

use super::geometry::Rect;
use crate::planner::SearchProblem;
use crate::{BoxBounds, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReconfigConfig {
    pub depth: f64,
    pub width: f64,
    pub n_movable: usize,
    pub movable_size: f64,
    pub target_size: f64,
    /// Corridor inflation on each side, in metres.
    pub clearance: f64,
    /// Obstacles initially placed inside the target corridor.
    pub initial_blockers: usize,
}

impl Default for ReconfigConfig {
    fn default() -> Self {
        Self {
            depth: 0.4,
            width: 0.7,
            n_movable: 5,
            movable_size: 0.05,
            target_size: 0.07,
            clearance: 0.005,
            initial_blockers: 2,
        }
    }
}

/// Object centers; movable obstacles first, the target last.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconfigState {
    pub poses: Vec<[f64; 2]>,
}

impl ReconfigState {
    pub fn target(&self) -> [f64; 2] {
        *self.poses.last().expect("state holds the target")
    }
}

/// Move obstacle `object` to `pose`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconfigMove {
    pub object: usize,
    pub pose: [f64; 2],
}

impl ReconfigConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.depth > self.target_size
            && self.width > self.target_size
            && self.movable_size > 0.0
            && self.movable_size < self.depth.min(self.width)
            && self.clearance >= 0.0
            && self.initial_blockers <= self.n_movable
            && self.n_movable >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("inconsistent reconfiguration parameters".into()))
        }
    }

    pub fn bin(&self) -> Rect {
        Rect::new(0.0, 0.0, self.depth, self.width)
    }

    pub fn size_of(&self, index: usize) -> f64 {
        if index == self.n_movable {
            self.target_size
        } else {
            self.movable_size
        }
    }

    fn square(&self, state: &ReconfigState, index: usize) -> Rect {
        let p = state.poses[index];
        Rect::square(p[0], p[1], self.size_of(index))
    }

    /// Access corridor of an object of `size` at `pose`.
    pub fn corridor(&self, pose: [f64; 2], size: f64) -> Rect {
        let h = size / 2.0;
        Rect::new(0.0, pose[1] - h - self.clearance, pose[0] + h, pose[1] + h + self.clearance)
    }

    /// Corridor of the target in `state`.
    pub fn target_corridor(&self, state: &ReconfigState) -> Rect {
        self.corridor(state.target(), self.target_size)
    }

    /// The part of the target corridor strictly in front of the target.
    pub fn target_front_region(&self, target: [f64; 2]) -> Rect {
        let c = self.corridor(target, self.target_size);
        Rect::new(0.0, c.min_y, target[0] - self.target_size / 2.0, c.max_y)
    }

    /// Centers that keep a movable obstacle inside the bin.
    pub fn placement_box(&self) -> BoxBounds {
        let h = self.movable_size / 2.0;
        BoxBounds::new(vec![h, h], vec![self.depth - h, self.width - h]).expect("obstacle smaller than bin")
    }

    fn corridor_clear(&self, state: &ReconfigState, pose: [f64; 2], size: f64, skip: usize) -> bool {
        let corridor = self.corridor(pose, size);
        (0..state.poses.len()).filter(|&j| j != skip).all(|j| !corridor.overlaps(&self.square(state, j)))
    }

    /// Obstacles whose squares intersect the target corridor.
    pub fn blockers(&self, state: &ReconfigState) -> Vec<usize> {
        let corridor = self.target_corridor(state);
        (0..self.n_movable).filter(|&j| corridor.overlaps(&self.square(state, j))).collect()
    }

    pub fn feasible(&self, state: &ReconfigState, mv: ReconfigMove) -> bool {
        if mv.object >= self.n_movable || !mv.pose.iter().all(|v| v.is_finite()) {
            return false;
        }
        let s = self.movable_size;
        let dest = Rect::square(mv.pose[0], mv.pose[1], s);
        if !self.bin().contains_rect(&dest) {
            return false;
        }
        if !self.corridor_clear(state, state.poses[mv.object], s, mv.object) {
            return false;
        }
        if (0..state.poses.len()).any(|j| j != mv.object && dest.overlaps(&self.square(state, j))) {
            return false;
        }
        self.corridor_clear(state, mv.pose, s, mv.object)
    }

    pub fn transition(&self, state: &ReconfigState, mv: ReconfigMove) -> Result<ReconfigState> {
        if !self.feasible(state, mv) {
            return Err(Error::Infeasible(format!("moving object {} to ({}, {})", mv.object, mv.pose[0], mv.pose[1])));
        }
        let mut next = state.clone();
        next.poses[mv.object] = mv.pose;
        Ok(next)
    }

    pub fn goal(&self, state: &ReconfigState) -> bool {
        self.blockers(state).is_empty()
    }

    /// Number of obstacles in the target corridor.
    pub fn heuristic(&self, state: &ReconfigState) -> f64 {
        self.blockers(state).len() as f64
    }

    /// Normalized centers of all objects in storage order.
    pub fn featurize(&self, state: &ReconfigState) -> Vec<f64> {
        state
            .poses
            .iter()
            .flat_map(|p| [2.0 * p[0] / self.depth - 1.0, 2.0 * p[1] / self.width - 1.0])
            .collect()
    }

    pub fn context_dim(&self) -> usize {
        2 * (self.n_movable + 1)
    }

    pub fn state_is_valid(&self, state: &ReconfigState) -> bool {
        let n = state.poses.len();
        n == self.n_movable + 1
            && (0..n).all(|i| self.bin().contains_rect(&self.square(state, i)))
            && (0..n).all(|i| (i + 1..n).all(|j| !self.square(state, i).overlaps(&self.square(state, j))))
    }

    /// Random instance with the target on the back wall and the first
    /// `initial_blockers` obstacles inside its corridor.
    pub fn sample_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> ReconfigState {
        let ht = self.target_size / 2.0;
        let hm = self.movable_size / 2.0;
        let target = [self.depth - ht, rng.random_range(ht..=self.width - ht)];
        'retry: loop {
            let mut poses: Vec<[f64; 2]> = Vec::with_capacity(self.n_movable + 1);
            for i in 0..self.n_movable {
                let mut placed = false;
                for _ in 0..1000 {
                    let pose = if i < self.initial_blockers {
                        let reach = ht + self.clearance + hm * 0.8;
                        let lo = (target[1] - reach).max(hm);
                        let hi = (target[1] + reach).min(self.width - hm);
                        [rng.random_range(hm..=self.depth - self.target_size - hm), rng.random_range(lo..=hi)]
                    } else {
                        [rng.random_range(hm..=self.depth - hm), rng.random_range(hm..=self.width - hm)]
                    };
                    let sq = Rect::square(pose[0], pose[1], self.movable_size);
                    let clashes = poses.iter().any(|p| sq.overlaps(&Rect::square(p[0], p[1], self.movable_size)))
                        || sq.overlaps(&Rect::square(target[0], target[1], self.target_size));
                    if !clashes {
                        poses.push(pose);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    continue 'retry;
                }
            }
            poses.push(target);
            let state = ReconfigState { poses };
            if self.initial_blockers == 0 || !self.goal(&state) {
                return state;
            }
        }
    }

    pub fn problem(&self, initial: ReconfigState) -> ReconfigProblem<'_> {
        ReconfigProblem { config: self, initial }
    }
}

/// A reconfiguration instance as a search problem. Actions are
/// `[selector, u, v]` in `[-1, 1]^3`: the selector picks the obstacle and
/// `(u, v)` is the destination in unit coordinates of the placement box.
#[derive(Debug, Clone)]
pub struct ReconfigProblem<'a> {
    pub config: &'a ReconfigConfig,
    pub initial: ReconfigState,
}

impl ReconfigProblem<'_> {
    pub fn object_from_selector(&self, selector: f64) -> usize {
        let n = self.config.n_movable;
        (((selector + 1.0) / 2.0 * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    /// Selector value at the middle of the slot for `object`.
    pub fn selector_for(&self, object: usize) -> f64 {
        (object as f64 + 0.5) / self.config.n_movable as f64 * 2.0 - 1.0
    }

    pub fn decode(&self, action: &[f64]) -> Option<ReconfigMove> {
        if action.len() != 3 || action.iter().any(|u| !(-1.0..=1.0).contains(u)) {
            return None;
        }
        let pose = self.config.placement_box().from_unit(&action[1..]);
        Some(ReconfigMove { object: self.object_from_selector(action[0]), pose: [pose[0], pose[1]] })
    }

    pub fn encode(&self, mv: ReconfigMove) -> Vec<f64> {
        let mut a = vec![self.selector_for(mv.object)];
        a.extend(self.config.placement_box().to_unit(&mv.pose));
        a
    }

    pub fn uniform_action(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }
}

impl SearchProblem for ReconfigProblem<'_> {
    type State = ReconfigState;

    fn initial_state(&self) -> ReconfigState {
        self.initial.clone()
    }

    fn is_goal(&self, state: &ReconfigState) -> bool {
        self.config.goal(state)
    }

    fn heuristic(&self, state: &ReconfigState) -> f64 {
        self.config.heuristic(state)
    }

    fn step(&self, state: &ReconfigState, action: &[f64]) -> Option<ReconfigState> {
        let mv = self.decode(action)?;
        self.config.transition(state, mv).ok()
    }

    /// The learned part of an action is the destination only; the obstacle
    /// is always chosen uniformly.
    fn experience(&self, state: &ReconfigState, action: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.config.featurize(state), action[1..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> ReconfigConfig {
        ReconfigConfig { n_movable: 1, initial_blockers: 0, ..ReconfigConfig::default() }
    }

    #[test]
    fn clear_target_is_already_solved() {
        let c = cfg();
        let s = ReconfigState { poses: vec![[0.1, 0.05], [0.365, 0.5]] };
        assert!(c.goal(&s));
    }

    #[test]
    fn sideways_move_clears_the_target() {
        let c = cfg();
        let s = ReconfigState { poses: vec![[0.1, 0.5], [0.365, 0.5]] };
        assert!(!c.goal(&s));
        let shift = 0.035 + 0.005 + 0.025 + 0.001;
        let next = c.transition(&s, ReconfigMove { object: 0, pose: [0.1, 0.5 + shift] }).unwrap();
        assert!(c.goal(&next));
        let not_enough = c.transition(&s, ReconfigMove { object: 0, pose: [0.1, 0.5 + shift - 0.01] }).unwrap();
        assert!(!c.goal(&not_enough));
    }

    #[test]
    fn moving_a_bystander_makes_no_progress() {
        let c = ReconfigConfig { n_movable: 2, initial_blockers: 0, ..ReconfigConfig::default() };
        let s = ReconfigState { poses: vec![[0.1, 0.5], [0.1, 0.1], [0.365, 0.5]] };
        let next = c.transition(&s, ReconfigMove { object: 1, pose: [0.1, 0.25] }).unwrap();
        assert!(!c.goal(&next));
        assert_eq!(c.heuristic(&next), c.heuristic(&s));
    }

    #[test]
    fn blocked_obstacle_cannot_move() {
        let c = ReconfigConfig { n_movable: 2, initial_blockers: 0, ..ReconfigConfig::default() };
        // Obstacle 0 sits behind obstacle 1 in the same lane.
        let s = ReconfigState { poses: vec![[0.2, 0.2], [0.05, 0.2], [0.365, 0.5]] };
        assert!(!c.feasible(&s, ReconfigMove { object: 0, pose: [0.2, 0.6] }));
        assert!(c.feasible(&s, ReconfigMove { object: 1, pose: [0.05, 0.6] }));
    }

    #[test]
    fn sampled_instances_are_valid_and_blocked() {
        let c = ReconfigConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = c.sample_instance(&mut rng);
            assert!(c.state_is_valid(&s));
            assert!(!c.goal(&s));
            assert!((s.target()[0] - 0.365).abs() < 1e-12);
        }
    }

    #[test]
    fn features_follow_storage_order() {
        let c = ReconfigConfig::default();
        let s = c.sample_instance(&mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(c.featurize(&s).len(), 12);
        let mut swapped = s.clone();
        swapped.poses.swap(0, 1);
        assert_ne!(c.featurize(&s), c.featurize(&swapped));
    }

    #[test]
    fn action_codec() {
        let c = ReconfigConfig::default();
        let p = c.problem(c.sample_instance(&mut ChaCha8Rng::seed_from_u64(3)));
        for obj in 0..5 {
            assert_eq!(p.object_from_selector(p.selector_for(obj)), obj);
        }
        assert_eq!(p.object_from_selector(1.0), 4);
        assert_eq!(p.object_from_selector(-1.0), 0);
        let mv = ReconfigMove { object: 2, pose: [0.2, 0.3] };
        let back = p.decode(&p.encode(mv)).unwrap();
        assert_eq!(back.object, 2);
        assert!((back.pose[0] - 0.2).abs() < 1e-12 && (back.pose[1] - 0.3).abs() < 1e-12);
    }
}
