//! Maximum block improvement over the rank-constrained blocks.
//!
//! Each sweep solves every block problem with the other blocks held fixed,
//! then commits only the single replacement with the smallest objective.

use alloc::vec::Vec;

use super::bank::CompressorBank;
use super::block::Uniqueness;
use super::problem::ReducedProblem;
use crate::error::{invalid, Result};
use crate::linalg::{frobenius_sq, Matrix};

/// Sweeps between full recomputations of the running total `sum_j F_j G_j`.
const RESYNC_PERIOD: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbiConfig {
    /// Stop once a sweep improves the objective by at most this much.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Keep a copy of every iterate in [`MbiTrace::iterates`].
    pub record_trace: bool,
}

impl Default for MbiConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_iterations: 100,
            record_trace: false,
        }
    }
}

impl MbiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon must be non-negative"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct MbiTrace {
    /// `f` at the initial bank followed by one entry per committed step.
    pub objective_per_iteration: Vec<f64>,
    /// Sensor index replaced at each committed step.
    pub chosen_block_per_iteration: Vec<usize>,
    pub converged: bool,
    /// Committed steps.
    pub iterations_used: usize,
    /// Every iterate, starting with the initial bank; empty unless
    /// `record_trace` is set.
    pub iterates: Vec<CompressorBank>,
}

impl MbiTrace {
    pub fn final_objective(&self) -> f64 {
        *self.objective_per_iteration.last().expect("trace always has the initial entry")
    }
}

/// Best response of one block with the others held fixed.
#[derive(Debug, Clone)]
pub struct BlockCandidate {
    pub sensor: usize,
    pub block: Matrix,
    /// `block * G_j`.
    pub product: Matrix,
    /// Objective with this block swapped in.
    pub objective: f64,
    pub uniqueness: Uniqueness,
}

/// Evaluates the per-block candidates of a sweep. Implementations may run
/// them concurrently but must return results in sensor order.
pub trait CandidateEvaluator {
    fn evaluate(
        &self,
        sensors: usize,
        eval: &(dyn Fn(usize) -> Result<BlockCandidate> + Sync),
    ) -> Vec<Result<BlockCandidate>>;
}

/// Evaluates candidates one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl CandidateEvaluator for Sequential {
    fn evaluate(
        &self,
        sensors: usize,
        eval: &(dyn Fn(usize) -> Result<BlockCandidate> + Sync),
    ) -> Vec<Result<BlockCandidate>> {
        (0..sensors).map(eval).collect()
    }
}

struct SweepState {
    blocks: Vec<Matrix>,
    products: Vec<Matrix>,
    total: Matrix,
}

impl SweepState {
    fn new(rp: &ReducedProblem, blocks: Vec<Matrix>) -> Self {
        let products: Vec<Matrix> = blocks.iter().zip(rp.g_blocks()).map(|(f, g)| f * g).collect();
        let total = sum_products(rp, &products);
        Self {
            blocks,
            products,
            total,
        }
    }

    fn resync(&mut self, rp: &ReducedProblem) {
        self.total = sum_products(rp, &self.products);
    }

    fn objective(&self, rp: &ReducedProblem) -> f64 {
        frobenius_sq(&(rp.h() - &self.total))
    }

    fn candidate(&self, rp: &ReducedProblem, j: usize) -> Result<BlockCandidate> {
        // S_j = H - sum_{i != j} F_i G_i
        let s_j = rp.h() - &self.total + &self.products[j];
        let sol = rp.factors[j].solve(&s_j, rp.partition().rank(j))?;
        let product = &sol.block * rp.g_block(j);
        let objective = frobenius_sq(&(s_j - &product));
        Ok(BlockCandidate {
            sensor: j,
            block: sol.block,
            product,
            objective,
            uniqueness: sol.uniqueness,
        })
    }

    fn best(&self, rp: &ReducedProblem, evaluator: &dyn CandidateEvaluator) -> Result<BlockCandidate> {
        let eval = |j: usize| self.candidate(rp, j);
        let mut best: Option<BlockCandidate> = None;
        for c in evaluator.evaluate(rp.partition().sensor_count(), &eval) {
            let c = c?;
            // strict comparison keeps the lowest index on ties
            if best.as_ref().is_none_or(|b| c.objective < b.objective) {
                best = Some(c);
            }
        }
        Ok(best.expect("at least one sensor"))
    }

    fn commit(&mut self, c: BlockCandidate) {
        let j = c.sensor;
        self.total -= &self.products[j];
        self.total += &c.product;
        self.products[j] = c.product;
        self.blocks[j] = c.block;
    }

    fn bank(&self, rp: &ReducedProblem) -> CompressorBank {
        CompressorBank::from_parts(rp.partition().clone(), self.blocks.clone())
    }
}

fn sum_products(rp: &ReducedProblem, products: &[Matrix]) -> Matrix {
    let mut total = Matrix::zeros(rp.h().nrows(), rp.h().ncols());
    for p in products {
        total += p;
    }
    total
}

/// Result of a single sweep.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub bank: CompressorBank,
    pub chosen: usize,
    pub objective: f64,
    pub previous_objective: f64,
    pub uniqueness: Uniqueness,
}

/// One sweep from `bank`: computes every single-block best response and
/// returns the bank with the best one swapped in.
pub fn mbi_step(rp: &ReducedProblem, bank: &CompressorBank) -> Result<StepOutcome> {
    rp.check_bank(bank)?;
    let state = SweepState::new(rp, bank.blocks().to_vec());
    let previous_objective = state.objective(rp);
    let best = state.best(rp, &Sequential)?;
    let (chosen, objective, uniqueness) = (best.sensor, best.objective, best.uniqueness);
    let mut state = state;
    state.commit(best);
    Ok(StepOutcome {
        bank: state.bank(rp),
        chosen,
        objective,
        previous_objective,
        uniqueness,
    })
}

pub fn mbi_solve(
    rp: &ReducedProblem,
    init: &CompressorBank,
    cfg: &MbiConfig,
) -> Result<(CompressorBank, MbiTrace)> {
    mbi_solve_with(rp, init, cfg, &Sequential)
}

/// Runs sweeps until one improves `f` by at most `epsilon` (that sweep is
/// not committed) or `max_iterations` sweeps have been evaluated.
pub fn mbi_solve_with(
    rp: &ReducedProblem,
    init: &CompressorBank,
    cfg: &MbiConfig,
    evaluator: &dyn CandidateEvaluator,
) -> Result<(CompressorBank, MbiTrace)> {
    cfg.validate()?;
    rp.check_bank(init)?;
    let mut state = SweepState::new(rp, init.blocks().to_vec());
    let mut current = state.objective(rp);

    let mut trace = MbiTrace {
        objective_per_iteration: alloc::vec![current],
        ..MbiTrace::default()
    };
    if cfg.record_trace {
        trace.iterates.push(state.bank(rp));
    }

    for sweep in 1..=cfg.max_iterations {
        let best = state.best(rp, evaluator)?;
        let improvement = current - best.objective;
        if improvement <= cfg.epsilon {
            trace.converged = true;
            break;
        }
        current = best.objective;
        trace.chosen_block_per_iteration.push(best.sensor);
        trace.objective_per_iteration.push(current);
        trace.iterations_used += 1;
        state.commit(best);
        if sweep % RESYNC_PERIOD == 0 {
            state.resync(rp);
        }
        if cfg.record_trace {
            trace.iterates.push(state.bank(rp));
        }
    }
    Ok((state.bank(rp), trace))
}
