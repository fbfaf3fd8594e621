//! Side-access bin packing.
//!
//! The bin spans `x` in `[0, depth]` and `y` in `[0, width]`, open along the
//! `x = 0` edge. Square objects of one size are inserted through the opening,
//! so every placement needs a collision-free access path from the opening to
//! its final pose. Objects placed near the opening can cut off the space
//! behind them, which is what turns early placements into dead ends.

use rand::{Rng, RngCore};

use super::geometry::Rect;
use crate::planner::SearchProblem;
use crate::{BoxBounds, Error, Result};

/// How an object travels from the opening to its placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessModel {
    /// The object slides straight in along `x`; its path is the rectangle from
    /// the opening to the placement, widened in `y` by the clearance.
    Straight,
    /// The object is carried along a straight segment from a fixed entry
    /// point on the opening edge; the path collides with a placed square when
    /// the segment enters that square grown by the object half-size, plus the
    /// clearance in `y`.
    FixedBase { base: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinPackConfig {
    pub depth: f64,
    pub width: f64,
    pub access: AccessModel,
    /// Extra gripper clearance on each side of the path, in metres.
    pub clearance: f64,
    pub min_objects: usize,
    pub max_objects: usize,
    pub min_size: f64,
    pub max_size: f64,
    /// Append the fraction of objects already placed to the context.
    pub progress_feature: bool,
}

impl Default for BinPackConfig {
    fn default() -> Self {
        Self {
            depth: 0.3,
            width: 1.0,
            access: AccessModel::Straight,
            clearance: 0.0,
            min_objects: 5,
            max_objects: 8,
            min_size: 0.05,
            max_size: 0.11,
            progress_feature: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinPackInstance {
    pub n_obj: usize,
    pub object_size: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinPackState {
    /// Centers of the placed squares, in placement order.
    pub placed: Vec<[f64; 2]>,
}

impl BinPackConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.depth > 0.0
            && self.width > 0.0
            && self.clearance >= 0.0
            && self.min_objects >= 1
            && self.min_objects <= self.max_objects
            && self.min_size > 0.0
            && self.min_size <= self.max_size
            && self.max_size < self.depth.min(self.width);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("inconsistent bin packing parameters".into()))
        }
    }

    pub fn bin(&self) -> Rect {
        Rect::new(0.0, 0.0, self.depth, self.width)
    }

    pub fn sample_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> BinPackInstance {
        let n_obj = rng.random_range(self.min_objects..=self.max_objects);
        let object_size = if self.max_size > self.min_size { rng.random_range(self.min_size..=self.max_size) } else { self.min_size };
        BinPackInstance { n_obj, object_size }
    }

    /// Centers that keep the square inside the bin.
    pub fn action_box(&self, instance: &BinPackInstance) -> BoxBounds {
        let h = instance.object_size / 2.0;
        BoxBounds::new(vec![h, h], vec![self.depth - h, self.width - h]).expect("object smaller than bin")
    }

    /// Does the access path to `(x, y)` collide with the placed square at `p`?
    pub fn path_blocked_by(&self, size: f64, target: [f64; 2], p: [f64; 2]) -> bool {
        let h = size / 2.0;
        match self.access {
            AccessModel::Straight => {
                let corridor = Rect::new(0.0, target[1] - h - self.clearance, target[0] + h, target[1] + h + self.clearance);
                corridor.overlaps(&Rect::square(p[0], p[1], size))
            }
            AccessModel::FixedBase { base } => {
                Rect::centered(p[0], p[1], size, size + self.clearance).hit_by_segment(base, target)
            }
        }
    }

    pub fn feasible(&self, instance: &BinPackInstance, state: &BinPackState, action: [f64; 2]) -> bool {
        let s = instance.object_size;
        if state.placed.len() >= instance.n_obj {
            return false;
        }
        let square = Rect::square(action[0], action[1], s);
        if !action.iter().all(|v| v.is_finite()) || !self.bin().contains_rect(&square) {
            return false;
        }
        state
            .placed
            .iter()
            .all(|&p| !square.overlaps(&Rect::square(p[0], p[1], s)) && !self.path_blocked_by(s, action, p))
    }

    pub fn transition(&self, instance: &BinPackInstance, state: &BinPackState, action: [f64; 2]) -> Result<BinPackState> {
        if !self.feasible(instance, state, action) {
            return Err(Error::Infeasible(format!("placement ({}, {}) is blocked or outside the bin", action[0], action[1])));
        }
        let mut next = state.clone();
        next.placed.push(action);
        Ok(next)
    }

    pub fn goal(&self, instance: &BinPackInstance, state: &BinPackState) -> bool {
        state.placed.len() == instance.n_obj
    }

    /// Objects still to place.
    pub fn heuristic(&self, instance: &BinPackInstance, state: &BinPackState) -> f64 {
        instance.n_obj.saturating_sub(state.placed.len()) as f64
    }

    /// Instance parameters mapped to `[-1, 1]`, optionally followed by the
    /// placed fraction.
    pub fn featurize(&self, instance: &BinPackInstance, state: &BinPackState) -> Vec<f64> {
        let unit = |v: f64, lo: f64, hi: f64| if hi > lo { 2.0 * (v - lo) / (hi - lo) - 1.0 } else { 0.0 };
        let mut f = vec![
            unit(instance.n_obj as f64, self.min_objects as f64, self.max_objects as f64),
            unit(instance.object_size, self.min_size, self.max_size),
        ];
        if self.progress_feature {
            f.push(unit(state.placed.len() as f64, 0.0, instance.n_obj as f64));
        }
        f
    }

    pub fn context_dim(&self) -> usize {
        if self.progress_feature {
            3
        } else {
            2
        }
    }

    pub fn problem(&self, instance: BinPackInstance) -> BinPackProblem<'_> {
        BinPackProblem { config: self, instance }
    }
}

/// One instance as a search problem. Actions are unit-box coordinates in
/// `[-1, 1]^2` mapped onto the instance's action box.
#[derive(Debug, Clone)]
pub struct BinPackProblem<'a> {
    pub config: &'a BinPackConfig,
    pub instance: BinPackInstance,
}

impl BinPackProblem<'_> {
    pub fn decode(&self, unit: &[f64]) -> Option<[f64; 2]> {
        if unit.len() != 2 || unit.iter().any(|u| !(-1.0..=1.0).contains(u)) {
            return None;
        }
        let v = self.config.action_box(&self.instance).from_unit(unit);
        Some([v[0], v[1]])
    }

    pub fn encode(&self, action: [f64; 2]) -> Vec<f64> {
        self.config.action_box(&self.instance).to_unit(&action)
    }

    pub fn uniform_action(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]
    }
}

impl SearchProblem for BinPackProblem<'_> {
    type State = BinPackState;

    fn initial_state(&self) -> BinPackState {
        BinPackState::default()
    }

    fn is_goal(&self, state: &BinPackState) -> bool {
        self.config.goal(&self.instance, state)
    }

    fn heuristic(&self, state: &BinPackState) -> f64 {
        self.config.heuristic(&self.instance, state)
    }

    fn step(&self, state: &BinPackState, action: &[f64]) -> Option<BinPackState> {
        let a = self.decode(action)?;
        self.config.transition(&self.instance, state, a).ok()
    }

    fn experience(&self, state: &BinPackState, action: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.config.featurize(&self.instance, state), action.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(n: usize, s: f64) -> BinPackInstance {
        BinPackInstance { n_obj: n, object_size: s }
    }

    #[test]
    fn first_placement_and_overlap() {
        let c = BinPackConfig::default();
        let i = inst(5, 0.1);
        let empty = BinPackState::default();
        assert!(c.feasible(&i, &empty, [0.2, 0.5]));
        let one = c.transition(&i, &empty, [0.2, 0.5]).unwrap();
        assert!(!c.feasible(&i, &one, [0.25, 0.55]));
        assert!(c.feasible(&i, &one, [0.2, 0.6]));
        assert!(!c.feasible(&i, &empty, [0.26, 0.5]));
    }

    #[test]
    fn front_square_blocks_corridor_behind_it() {
        let c = BinPackConfig::default();
        let i = inst(5, 0.1);
        let front = c.transition(&i, &BinPackState::default(), [0.05, 0.5]).unwrap();
        assert!(!c.feasible(&i, &front, [0.2, 0.5]));
        assert!(c.feasible(&i, &front, [0.2, 0.65]));
    }

    #[test]
    fn back_to_front_rows_solve_the_largest_objects() {
        let c = BinPackConfig::default();
        let i = inst(5, 0.11);
        let mut state = BinPackState::default();
        for y in [0.1, 0.3, 0.5, 0.7, 0.9] {
            state = c.transition(&i, &state, [0.3 - 0.055, y]).unwrap();
        }
        assert!(c.goal(&i, &state));
        assert!(!c.goal(&i, &BinPackState::default()));
    }

    #[test]
    fn features_are_state_independent_by_default() {
        let c = BinPackConfig::default();
        let i = inst(5, 0.11);
        let s1 = BinPackState { placed: vec![[0.1, 0.1]] };
        assert_eq!(c.featurize(&i, &BinPackState::default()), vec![-1.0, 1.0]);
        assert_eq!(c.featurize(&i, &s1), c.featurize(&i, &BinPackState::default()));
    }

    #[test]
    fn instances_follow_ranges() {
        let c = BinPackConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let i = c.sample_instance(&mut rng);
            assert!((5..=8).contains(&i.n_obj));
            assert!((0.05..=0.11).contains(&i.object_size));
        }
    }

    #[test]
    fn fixed_base_fans_out_from_entry_point() {
        let c = BinPackConfig { access: AccessModel::FixedBase { base: [0.0, 0.5] }, ..BinPackConfig::default() };
        let i = inst(5, 0.06);
        let front = c.transition(&i, &BinPackState::default(), [0.1, 0.5]).unwrap();
        // Directly behind and diagonally behind are both shadowed.
        assert!(!c.feasible(&i, &front, [0.25, 0.5]));
        assert!(!c.feasible(&i, &front, [0.25, 0.6]));
        assert!(c.feasible(&i, &front, [0.05, 0.9]));
        // A square over the entry point shadows everything.
        let plug = c.transition(&i, &BinPackState::default(), [0.03, 0.5]).unwrap();
        assert!(!c.feasible(&i, &plug, [0.05, 0.9]));
    }

    #[test]
    fn unit_actions_round_trip() {
        let c = BinPackConfig::default();
        let p = c.problem(inst(6, 0.08));
        let a = p.decode(&[0.2, -0.4]).unwrap();
        let u = p.encode(a);
        assert!((u[0] - 0.2).abs() < 1e-12 && (u[1] + 0.4).abs() < 1e-12);
        assert!(p.decode(&[1.2, 0.0]).is_none());
    }
}
