//! Divergences, numerical checks of the importance-estimation bounds, and
//! experiment statistics.

use rand::Rng;
use rand_distr::Exp1;

use crate::adversarial::{optimal_discriminator_value, Checkpoint};
use crate::{Error, Result};

/// `sum_i p_i ln(p_i / m_i)` with `0 ln(0/x) = 0` and `+inf` where
/// `p_i > 0 = m_i`. `m` may be an unnormalized non-negative measure.
pub fn discrete_kl(p: &[f64], m: &[f64]) -> f64 {
    assert_eq!(p.len(), m.len(), "discrete_kl needs vectors of equal length");
    let mut total = 0.0;
    for (&pi, &mi) in p.iter().zip(m) {
        if pi == 0.0 {
            continue;
        }
        if mi <= 0.0 {
            return f64::INFINITY;
        }
        total += pi * (pi / mi).ln();
    }
    total
}

/// Finite-support instance of the bound checks: target `p`, behaviour `q`,
/// estimated ratio `w_hat`, plus the derived exact ratio, error and mismatch.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteInstance {
    p: Vec<f64>,
    q: Vec<f64>,
    w_hat: Vec<f64>,
    w: Vec<f64>,
    epsilon: f64,
    rho: f64,
}

fn check_distribution(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Precondition(format!("{name} has negative or non-finite entries")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

impl DiscreteInstance {
    /// Builds an instance with `epsilon = max_i |w_hat_i - w_i|` over the
    /// support of `q`. Requires the support of `p` inside the support of `q`.
    pub fn new(p: Vec<f64>, q: Vec<f64>, w_hat: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() || p.len() != w_hat.len() || p.is_empty() {
            return Err(Error::Dimension("p, q and w_hat must be non-empty and equally long".into()));
        }
        check_distribution("p", &p)?;
        check_distribution("q", &q)?;
        if w_hat.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Precondition("w_hat must be finite and non-negative".into()));
        }
        if p.iter().zip(&q).any(|(&pi, &qi)| pi > 0.0 && qi == 0.0) {
            return Err(Error::Precondition("support of p is not contained in the support of q".into()));
        }
        let w: Vec<f64> = p.iter().zip(&q).map(|(&pi, &qi)| if qi > 0.0 { pi / qi } else { 0.0 }).collect();
        let epsilon = q
            .iter()
            .zip(w_hat.iter().zip(&w))
            .filter(|(&qi, _)| qi > 0.0)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max);
        let rho = p
            .iter()
            .zip(&q)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(pi, qi)| qi / pi)
            .fold(0.0, f64::max);
        Ok(Self { p, q, w_hat, w, epsilon, rho })
    }

    /// Overrides the error level, e.g. to test a claimed bound that the
    /// estimate does not actually meet.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Exact objective gap `sum_i q_i (w_hat_i - w_i)^2`.
    pub fn exact_j(&self) -> f64 {
        self.q.iter().zip(self.w_hat.iter().zip(&self.w)).map(|(q, (a, b))| q * (a - b) * (a - b)).sum()
    }

    /// Unnormalized model density `w_hat * q`.
    pub fn pg(&self) -> Vec<f64> {
        self.w_hat.iter().zip(&self.q).map(|(a, b)| a * b).collect()
    }

    fn check_j(&self) -> Result<()> {
        let eps2 = self.epsilon * self.epsilon;
        if self.exact_j() > eps2 * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Precondition(format!("J = {} exceeds epsilon^2 = {eps2}", self.exact_j())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Tolerance used when comparing a divergence with its bound.
pub const BOUND_TOL: f64 = 1e-12;

/// `KL(p || w_hat q) <= ln(1 / (1 - epsilon rho))`.
pub fn verify_theorem1(inst: &DiscreteInstance) -> Result<BoundCheck> {
    inst.check_j()?;
    let er = inst.epsilon * inst.rho;
    if er >= 1.0 {
        return Err(Error::Precondition(format!("epsilon * rho = {er} is not below 1")));
    }
    // epsilon * rho < 1 already forces w > epsilon; checking it directly keeps
    // rounding at the boundary from admitting an estimate that hits zero.
    if inst.q.iter().zip(&inst.w).any(|(&qi, &wi)| qi > 0.0 && wi <= inst.epsilon) {
        return Err(Error::Precondition("exact ratio is not above epsilon on the support of q".into()));
    }
    let lhs = discrete_kl(&inst.p, &inst.pg());
    let bound = (1.0 / (1.0 - er)).ln();
    Ok(BoundCheck { lhs, bound, holds: lhs <= bound + BOUND_TOL })
}

/// `sum_i (w_hat q)_i ln((w_hat q)_i / p_i) <= (1 + epsilon) ln(1 + epsilon rho)`,
/// with the unnormalized `w_hat q`.
pub fn verify_theorem2(inst: &DiscreteInstance) -> Result<BoundCheck> {
    inst.check_j()?;
    let lhs = discrete_kl(&inst.pg(), &inst.p);
    let bound = (1.0 + inst.epsilon) * (1.0 + inst.epsilon * inst.rho).ln();
    Ok(BoundCheck { lhs, bound, holds: lhs <= bound + BOUND_TOL })
}

/// `KL(p_G || p)` after normalizing `w_hat q`; reported for information.
pub fn normalized_reverse_kl(inst: &DiscreteInstance) -> f64 {
    let pg = inst.pg();
    let z: f64 = pg.iter().sum();
    if z <= 0.0 {
        return f64::NAN;
    }
    let pg: Vec<f64> = pg.iter().map(|v| v / z).collect();
    discrete_kl(&pg, &inst.p)
}

/// Maximizer of `a ln d + b ln(1 - d)` over `(0, 1)` by golden-section search.
pub fn golden_section_discriminator(a: f64, b: f64) -> f64 {
    let f = |d: f64| {
        let t1 = if a > 0.0 { a * d.ln() } else { 0.0 };
        let t2 = if b > 0.0 { b * (1.0 - d).ln() } else { 0.0 };
        t1 + t2
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

/// Largest gap, over support points, between the closed-form optimal
/// discriminator `w_hat q / (w_hat q + p_G)` and a numeric maximizer of the
/// pointwise log-likelihood. Points where both densities vanish are skipped.
pub fn verify_lemma1(inst: &DiscreteInstance, pg: &[f64]) -> Result<f64> {
    if pg.len() != inst.p.len() {
        return Err(Error::Dimension("generator density has the wrong length".into()));
    }
    let mut worst: f64 = 0.0;
    for (a, &b) in inst.pg().into_iter().zip(pg) {
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let closed = optimal_discriminator_value(a, b)?;
        worst = worst.max((closed - golden_section_discriminator(a, b)).abs());
    }
    Ok(worst)
}

fn dirichlet_ones<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let s: f64 = g.iter().sum();
    g.iter().map(|x| x / s).collect()
}

/// Renormalizes so the entries sum to 1 up to rounding.
fn renormalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Random instance meeting the first bound's preconditions. Supports of `p`
/// and `q` coincide, since `w >= epsilon > 0` must hold wherever `q > 0`.
pub fn random_theorem1_instance<R: Rng + ?Sized>(rng: &mut R) -> DiscreteInstance {
    loop {
        let n = rng.random_range(2..=16);
        let mut p = dirichlet_ones(n, rng);
        let mut q = dirichlet_ones(n, rng);
        renormalize(&mut p);
        renormalize(&mut q);
        let w: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a / b).collect();
        let rho = p.iter().zip(&q).map(|(a, b)| b / a).fold(0.0, f64::max);
        let w_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let cap = w_min.min(1.0 / rho) * 0.999;
        let eps = rng.random::<f64>() * cap;
        let mut w_hat: Vec<f64> = w.iter().map(|&wi| wi + eps * rng.random_range(-1.0..=1.0)).collect();
        let pin = rng.random_range(0..n);
        w_hat[pin] = w[pin] + if rng.random::<bool>() { eps } else { -eps };
        if let Ok(inst) = DiscreteInstance::new(p, q, w_hat) {
            if inst.epsilon * inst.rho < 1.0 && inst.w.iter().all(|&wi| wi > inst.epsilon) {
                return inst;
            }
        }
    }
}

/// Random instance meeting the second bound's precondition. The support of
/// `p` may be a strict subset of the support of `q`; the estimate is zero
/// outside the support of `p`.
pub fn random_theorem2_instance<R: Rng + ?Sized>(rng: &mut R) -> DiscreteInstance {
    loop {
        let n = rng.random_range(2..=16);
        let mut q = dirichlet_ones(n, rng);
        renormalize(&mut q);
        let support_p: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
        if !support_p.iter().any(|&b| b) {
            continue;
        }
        let mut p: Vec<f64> = dirichlet_ones(n, rng).into_iter().zip(&support_p).map(|(v, &on)| if on { v } else { 0.0 }).collect();
        renormalize(&mut p);
        let w: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a / b).collect();
        let eps = rng.random::<f64>() * 2.0;
        let w_hat: Vec<f64> = w
            .iter()
            .zip(&support_p)
            .map(|(&wi, &on)| if on { (wi + eps * rng.random_range(-1.0..=1.0)).max(0.0) } else { 0.0 })
            .collect();
        if let Ok(inst) = DiscreteInstance::new(p, q, w_hat) {
            return inst;
        }
    }
}

/// Instance whose estimate equals the exact ratio.
pub fn exact_instance<R: Rng + ?Sized>(rng: &mut R) -> DiscreteInstance {
    let n = rng.random_range(2..=16);
    let mut p = dirichlet_ones(n, rng);
    let mut q = dirichlet_ones(n, rng);
    renormalize(&mut p);
    renormalize(&mut q);
    let w: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a / b).collect();
    DiscreteInstance::new(p, q, w).expect("valid by construction")
}

/// Random generator density for the discriminator check, with occasional
/// exact zeros.
pub fn random_generator_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut g = dirichlet_ones(n, rng);
    for v in g.iter_mut() {
        if rng.random::<f64>() < 0.1 {
            *v = 0.0;
        }
    }
    g
}

/// 2D Gaussian-kernel estimate of `KL(a || b)` on a 60x60 grid over the
/// joint bounding box padded by 10%. `bandwidth` is per-axis; `None` applies
/// Scott's rule separately to each sample set. Cells are floored at 1e-12
/// before normalization so far tails stay finite.
pub fn kde_kl_estimate(samples_a: &[[f64; 2]], samples_b: &[[f64; 2]], bandwidth: Option<[f64; 2]>) -> Result<f64> {
    const GRID: usize = 60;
    if samples_a.len() < 100 || samples_b.len() < 100 {
        return Err(Error::EmptyInput("kernel estimate needs at least 100 samples per set".into()));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in samples_a.iter().chain(samples_b) {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    for d in 0..2 {
        let span = hi[d] - lo[d];
        if span.is_nan() || span <= 0.0 {
            return Err(Error::Precondition("degenerate samples: zero spread along an axis".into()));
        }
        lo[d] -= 0.1 * span;
        hi[d] += 0.1 * span;
    }
    let grid_a = kde_grid(samples_a, bandwidth, lo, hi, GRID)?;
    let grid_b = kde_grid(samples_b, bandwidth, lo, hi, GRID)?;
    Ok(discrete_kl(&grid_a, &grid_b))
}

fn scott_bandwidth(samples: &[[f64; 2]]) -> [f64; 2] {
    let n = samples.len() as f64;
    let mut bw = [0.0; 2];
    for (d, b) in bw.iter_mut().enumerate() {
        let mean = samples.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = samples.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        *b = var.sqrt() * n.powf(-1.0 / 6.0);
    }
    bw
}

fn kde_grid(samples: &[[f64; 2]], bandwidth: Option<[f64; 2]>, lo: [f64; 2], hi: [f64; 2], cells: usize) -> Result<Vec<f64>> {
    let bw = bandwidth.unwrap_or_else(|| scott_bandwidth(samples));
    if !(bw[0] > 0.0 && bw[1] > 0.0) {
        return Err(Error::Precondition("degenerate samples: zero bandwidth".into()));
    }
    let centers = |d: usize| -> Vec<f64> {
        let step = (hi[d] - lo[d]) / cells as f64;
        (0..cells).map(|i| lo[d] + (i as f64 + 0.5) * step).collect()
    };
    let (cx, cy) = (centers(0), centers(1));
    // Separable kernel: per-sample factors along each axis, then outer sums.
    let mut grid = vec![0.0; cells * cells];
    let mut kx = vec![0.0; cells];
    let mut ky = vec![0.0; cells];
    for s in samples {
        for (k, c) in kx.iter_mut().zip(&cx) {
            *k = (-0.5 * ((c - s[0]) / bw[0]).powi(2)).exp();
        }
        for (k, c) in ky.iter_mut().zip(&cy) {
            *k = (-0.5 * ((c - s[1]) / bw[1]).powi(2)).exp();
        }
        for (i, &a) in kx.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &mut grid[i * cells..(i + 1) * cells];
            for (g, &b) in row.iter_mut().zip(&ky) {
                *g += a * b;
            }
        }
    }
    let total: f64 = grid.iter().sum();
    grid.iter_mut().for_each(|g| *g = (*g / total).max(1e-12));
    renormalize(&mut grid);
    Ok(grid)
}

/// 1.96, the two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessStats {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Success rate with a 95% Wilson score interval.
pub fn success_stats(outcomes: &[bool]) -> Result<SuccessStats> {
    let successes = outcomes.iter().filter(|&&o| o).count();
    success_stats_from_counts(outcomes.len(), successes)
}

pub fn success_stats_from_counts(trials: usize, successes: usize) -> Result<SuccessStats> {
    if trials == 0 {
        return Err(Error::EmptyInput("no trials".into()));
    }
    if successes > trials {
        return Err(Error::InvalidConfig("more successes than trials".into()));
    }
    let n = trials as f64;
    let rate = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (rate + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (rate * (1.0 - rate) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let ci_low = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, rate) };
    let ci_high = if successes == trials { 1.0 } else { (center + half).clamp(rate, 1.0) };
    Ok(SuccessStats { trials, successes, rate, ci_low, ci_high })
}

/// Picks the checkpoint with the highest score (validation successes); ties
/// go to the earliest epoch. Returns its index and all scores.
pub fn select_checkpoint<F>(checkpoints: &[Checkpoint], mut score: F) -> Result<(usize, Vec<usize>)>
where
    F: FnMut(&Checkpoint) -> Result<usize>,
{
    if checkpoints.is_empty() {
        return Err(Error::EmptyInput("no checkpoints to select from".into()));
    }
    let scores = checkpoints.iter().map(&mut score).collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for i in 1..checkpoints.len() {
        let better = scores[i] > scores[best];
        let tie_earlier = scores[i] == scores[best] && checkpoints[i].epoch < checkpoints[best].epoch;
        if better || tie_earlier {
            best = i;
        }
    }
    Ok((best, scores))
}
