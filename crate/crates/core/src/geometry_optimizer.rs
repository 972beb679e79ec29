//! Coordinate descent through a frozen surrogate, either with a hard
//! minimum-distance check or a log-barrier repulsion penalty.

use arrayopt_autodiff::{AdamConfig, AdamState};
use serde::{Deserialize, Serialize};

use crate::array_factor::{elements_cost, CostParams, UVGrid};
use crate::error::{Error, Result};
use crate::geometry::{canonical_order, min_distance_of, Element, ElementLayout};
use crate::surrogate::{Arch, Surrogate};

/// Halvings tried when a penalty-mode step would cross the threshold.
const MAX_BACKTRACKS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub theta: f64,
    pub epsilon: f64,
    pub barrier_clamp: f64,
    /// Pairs farther apart than this are left out of the sum.
    pub pair_cutoff: Option<f64>,
}

impl PenaltyConfig {
    pub fn for_arch(arch: Arch) -> Self {
        Self {
            theta: 0.5,
            epsilon: match arch {
                Arch::Fnn => 12.5,
                Arch::SetTransformer => 1.0,
            },
            barrier_clamp: 1e-6,
            pair_cutoff: Some(1.5),
        }
    }

    /// `epsilon = 0` is accepted and turns the penalty off.
    pub fn validate(&self) -> Result<()> {
        let ok = self.theta > 0.0
            && self.theta.is_finite()
            && self.epsilon >= 0.0
            && self.epsilon.is_finite()
            && self.barrier_clamp > 0.0
            && self.pair_cutoff.is_none_or(|c| c > self.theta);
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid penalty configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    HardCheck,
    Penalty,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub max_iterations: usize,
    pub lr: f64,
    pub mode: ConstraintMode,
    pub clamp_to_aperture: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            lr: 1e-3,
            mode: ConstraintMode::Penalty,
            clamp_to_aperture: true,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "iterations and learning rate must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Grid and exponent used for the exact before/after costs.
#[derive(Clone, Debug)]
pub struct Scoring {
    pub grid: UVGrid,
    pub params: CostParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIters,
    ConstraintRevert,
    Divergence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Surrogate prediction plus penalty, before the step.
    pub loss: f64,
    pub penalty: f64,
    pub min_dist: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config_id: Option<u64>,
    pub termination: Termination,
    pub history: Vec<IterRecord>,
    pub initial: ElementLayout,
    pub final_layout: ElementLayout,
    pub cost_before: f64,
    pub cost_after: f64,
    pub min_dist_before: f64,
    pub min_dist_after: f64,
}

/// JSON form of a [`RunRecord`] (layouts are written as separate files).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunExport {
    pub config_id: Option<u64>,
    pub termination: Termination,
    pub cost_before: f64,
    pub cost_after: f64,
    pub pct_change: f64,
    pub min_dist_before: f64,
    pub min_dist_after: f64,
    pub history: Vec<IterRecord>,
}

impl RunRecord {
    pub fn pct_change(&self) -> f64 {
        percent_change(self.cost_before, self.cost_after).unwrap_or(f64::NAN)
    }

    pub fn export(&self) -> RunExport {
        RunExport {
            config_id: self.config_id,
            termination: self.termination,
            cost_before: self.cost_before,
            cost_after: self.cost_after,
            pct_change: self.pct_change(),
            min_dist_before: self.min_dist_before,
            min_dist_after: self.min_dist_after,
            history: self.history.clone(),
        }
    }
}

/// `100 * (after - before) / |before|`; negative means the cost went down.
pub fn percent_change(cost_before: f64, cost_after: f64) -> Result<f64> {
    if cost_before == 0.0 {
        return Err(Error::InvalidConfig("percent change from a zero cost".into()));
    }
    Ok(100.0 * (cost_after - cost_before) / cost_before.abs())
}

/// Calls `f(i, j, d)` for every pair with `d <= cutoff` (all pairs when
/// `cutoff` is `None`), in an order fixed by the element positions.
fn for_each_pair(elements: &[Element], cutoff: Option<f64>, mut f: impl FnMut(usize, usize, f64)) {
    match cutoff {
        None => {
            for i in 0..elements.len() {
                for j in i + 1..elements.len() {
                    f(i, j, elements[i].distance(&elements[j]));
                }
            }
        }
        Some(c) => {
            let mut idx: Vec<usize> = (0..elements.len()).collect();
            idx.sort_by(|&a, &b| elements[a].y.total_cmp(&elements[b].y).then(a.cmp(&b)));
            for (s, &i) in idx.iter().enumerate() {
                for &j in &idx[s + 1..] {
                    if elements[j].y - elements[i].y > c {
                        break;
                    }
                    let d = elements[i].distance(&elements[j]);
                    if d <= c {
                        f(i.min(j), i.max(j), d);
                    }
                }
            }
        }
    }
}

fn need_pairs(elements: &[Element]) -> Result<()> {
    if elements.len() < 2 {
        return Err(Error::TooFewElements {
            needed: 2,
            found: elements.len(),
        });
    }
    Ok(())
}

/// `epsilon * sum log(1 / max(D - theta, clamp))` over the selected pairs.
pub fn penalty(elements: &[Element], cfg: &PenaltyConfig) -> Result<f64> {
    need_pairs(elements)?;
    let mut total = 0.0;
    for_each_pair(elements, cfg.pair_cutoff, |_, _, d| {
        total -= (d - cfg.theta).max(cfg.barrier_clamp).ln();
    });
    Ok(cfg.epsilon * total)
}

/// Gradient of [`penalty`]. Pairs sitting on the clamp contribute nothing.
pub fn penalty_grad(elements: &[Element], cfg: &PenaltyConfig) -> Result<Vec<[f64; 2]>> {
    need_pairs(elements)?;
    let mut grad = vec![[0.0; 2]; elements.len()];
    for_each_pair(elements, cfg.pair_cutoff, |i, j, d| {
        let gap = d - cfg.theta;
        if gap <= cfg.barrier_clamp {
            return;
        }
        let s = -cfg.epsilon / (gap * d);
        let dy = s * (elements[i].y - elements[j].y);
        let dz = s * (elements[i].z - elements[j].z);
        grad[i][0] += dy;
        grad[i][1] += dz;
        grad[j][0] -= dy;
        grad[j][1] -= dz;
    });
    Ok(grad)
}

fn to_elements(x: &[f64]) -> Vec<Element> {
    x.chunks_exact(2).map(|c| Element::new(c[0], c[1])).collect()
}

enum Guard {
    /// Revert and stop when the candidate drops below theta.
    Revert(f64),
    /// Shrink the step until the candidate stays strictly above theta.
    Backtrack(f64),
    None,
}

fn descend(
    start: &ElementLayout,
    model: &Surrogate,
    run: &RunConfig,
    pen: Option<&PenaltyConfig>,
    guard: Guard,
    scoring: &Scoring,
) -> Result<RunRecord> {
    let initial = canonical_order(start);
    let aperture = initial.aperture();
    let n = initial.len();
    let mut x = initial.flat_coords();
    let mut adam = AdamState::new(AdamConfig::with_lr(run.lr), &[2 * n])?;
    let mut history = Vec::with_capacity(run.max_iterations);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut termination = Termination::MaxIters;
    let names = ["coords"];

    for iter in 0..run.max_iterations {
        let els = to_elements(&x);
        let (pred, mut grad) = model.value_and_grad_ordered(&els)?;
        let mut p = 0.0;
        if let Some(cfg) = pen.filter(|c| c.epsilon > 0.0) {
            p = penalty(&els, cfg)?;
            for (g, q) in grad.iter_mut().zip(penalty_grad(&els, cfg)?) {
                g[0] += q[0];
                g[1] += q[1];
            }
        }
        let loss = pred + p;
        let flat: Vec<f64> = grad.iter().flatten().copied().collect();
        if !loss.is_finite() || flat.iter().any(|v| !v.is_finite()) {
            termination = Termination::Divergence;
            if let Some((_, bx)) = best.take() {
                x = bx;
            }
            break;
        }
        history.push(IterRecord {
            iter,
            loss,
            penalty: p,
            min_dist: min_distance_of(&els)?,
        });
        if best.as_ref().is_none_or(|(l, _)| loss < *l) {
            best = Some((loss, x.clone()));
        }

        let mut candidate = x.clone();
        adam.step_slices(&mut [candidate.as_mut_slice()], &[flat.as_slice()], &names)?;
        if run.clamp_to_aperture {
            for c in candidate.chunks_exact_mut(2) {
                let e = aperture.clamp(Element::new(c[0], c[1]));
                c[0] = e.y;
                c[1] = e.z;
            }
        }
        match guard {
            Guard::Revert(theta) => {
                if min_distance_of(&to_elements(&candidate))? < theta {
                    termination = Termination::ConstraintRevert;
                    break;
                }
            }
            Guard::Backtrack(theta) => {
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..=MAX_BACKTRACKS {
                    let trial: Vec<f64> = x.iter().zip(&candidate).map(|(a, b)| a + t * (b - a)).collect();
                    if min_distance_of(&to_elements(&trial))? > theta {
                        candidate = trial;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    candidate = x.clone();
                }
            }
            Guard::None => {}
        }
        x = candidate;
    }

    let final_layout = ElementLayout::new(aperture, to_elements(&x))
        .or_else(|_| ElementLayout::enclosing(aperture, to_elements(&x)))?;
    let cost_before = elements_cost(initial.elements(), &scoring.grid, scoring.params)?;
    let cost_after = elements_cost(final_layout.elements(), &scoring.grid, scoring.params)?;
    Ok(RunRecord {
        config_id: None,
        termination,
        history,
        min_dist_before: min_distance_of(initial.elements())?,
        min_dist_after: min_distance_of(final_layout.elements())?,
        initial,
        final_layout,
        cost_before,
        cost_after,
    })
}

/// Adam descent on the surrogate prediction alone; the first step that
/// would bring any pair closer than `theta` is discarded and the run stops.
pub fn optimize_hard_check(
    layout: &ElementLayout,
    model: &Surrogate,
    run: &RunConfig,
    theta: f64,
    scoring: &Scoring,
) -> Result<RunRecord> {
    run.validate()?;
    need_pairs(layout.elements())?;
    let d = min_distance_of(layout.elements())?;
    if d < theta {
        return Err(Error::ConstraintViolated { min_distance: d, theta });
    }
    descend(layout, model, run, None, Guard::Revert(theta), scoring)
}

/// Adam descent on `prediction + penalty`. With `epsilon > 0`, steps that
/// would cross `theta` are shortened (halved until feasible, or dropped), so
/// every iterate stays strictly inside the barrier's domain.
pub fn optimize_with_penalty(
    layout: &ElementLayout,
    model: &Surrogate,
    run: &RunConfig,
    pen: &PenaltyConfig,
    scoring: &Scoring,
) -> Result<RunRecord> {
    run.validate()?;
    pen.validate()?;
    need_pairs(layout.elements())?;
    let guard = if pen.epsilon > 0.0 {
        let d = min_distance_of(layout.elements())?;
        if d <= pen.theta {
            return Err(Error::ConstraintViolated {
                min_distance: d,
                theta: pen.theta,
            });
        }
        Guard::Backtrack(pen.theta)
    } else {
        Guard::None
    };
    descend(layout, model, run, Some(pen), guard, scoring)
}
