//! A finite engine for elementary transfinite recursion.
//!
//! An instance fixes a length, a domain of HF sets, a parameter class and a
//! step rule. The solution `S` has one slice per stage with
//! `S_α = {x : step(x, S↾α, A)}`. The step only ever sees `S↾α`: reads of
//! slices at or after the current stage fail with [`Error::FutureRead`].
//!
//! Composite lengths such as `Γ·k` are flattened stage-major with [`flatten`].

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use fixedbitset::FixedBitSet;
use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::formula::{Formula, Term, Var};
use crate::hfset::HFSet;
use crate::truth::{Evaluator, HfModel};

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

/// Free variable naming the candidate element in formula-driven steps.
pub const STEP_VAR_X: &str = "x";
/// Free variable naming the current stage (a von Neumann ordinal).
pub const STEP_VAR_STAGE: &str = "stage";
/// Class holding `S↾α` as pairs `⟨β, x⟩`.
pub const SOLUTION_CLASS: &str = "S";
/// Class holding the parameter.
pub const PARAM_CLASS: &str = "A";

/// Stage-major flattening of the pair `(outer, inner)` with `inner < inner_len`.
pub fn flatten(outer: usize, inner: usize, inner_len: usize) -> usize {
    outer * inner_len + inner
}

pub fn unflatten(stage: usize, inner_len: usize) -> (usize, usize) {
    (stage / inner_len, stage % inner_len)
}

/// Read access to the slices strictly below the current stage.
pub struct SliceView<'a> {
    slices: &'a [FixedBitSet],
    stage: usize,
    index: &'a HashMap<HFSet, usize>,
}

impl fmt::Debug for SliceView<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SliceView").field("stage", &self.stage).finish()
    }
}

impl SliceView<'_> {
    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Is the domain element with index `x` in slice `beta`?
    pub fn contains(&self, beta: usize, x: usize) -> Result<bool> {
        if beta >= self.stage {
            return Err(Error::FutureRead {
                stage: self.stage,
                read: beta,
            });
        }
        Ok(self.slices[beta].contains(x))
    }

    /// Membership by value; values outside the domain are never in a slice.
    pub fn contains_set(&self, beta: usize, x: &HFSet) -> Result<bool> {
        match self.index.get(x) {
            Some(&i) => self.contains(beta, i),
            None => {
                if beta >= self.stage {
                    return Err(Error::FutureRead {
                        stage: self.stage,
                        read: beta,
                    });
                }
                Ok(false)
            }
        }
    }
}

pub type StepFn<'a> = dyn Fn(usize, &HFSet, &SliceView<'_>) -> Result<bool> + 'a;

pub enum Step<'a> {
    /// `(index of x, x, S↾α) ↦ x ∈ S_α`; the parameter is captured by the closure.
    Callable(Box<StepFn<'a>>),
    /// A formula in the free variables `x` and `stage`, evaluated over the
    /// domain extended by the stage ordinals, with classes `S` (as
    /// `⟨β, y⟩` pairs for `β < α`) and `A`.
    Formula(Formula),
}

impl fmt::Debug for Step<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Callable(_) => f.write_str("Callable"),
            Step::Formula(phi) => f.debug_tuple("Formula").field(phi).finish(),
        }
    }
}

#[derive(Debug)]
pub struct RecursionInstance<'a> {
    pub length: usize,
    pub domain: Vec<HFSet>,
    pub param: BTreeSet<HFSet>,
    pub step: Step<'a>,
    pub budget: u64,
}

impl<'a> RecursionInstance<'a> {
    pub fn new(length: usize, domain: Vec<HFSet>, step: Step<'a>) -> Self {
        RecursionInstance {
            length,
            domain,
            param: BTreeSet::new(),
            step,
            budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_param(mut self, param: BTreeSet<HFSet>) -> Self {
        self.param = param;
        self
    }

    pub fn callable<F>(length: usize, domain: Vec<HFSet>, f: F) -> Self
    where
        F: Fn(usize, &HFSet, &SliceView<'_>) -> Result<bool> + 'a,
    {
        Self::new(length, domain, Step::Callable(Box::new(f)))
    }

    fn check_budget(&self) -> Result<()> {
        let needed = self.length as u128 * self.domain.len() as u128;
        if needed > self.budget as u128 {
            return Err(Error::budget("recursion steps", needed, self.budget));
        }
        Ok(())
    }

    fn index(&self) -> HashMap<HFSet, usize> {
        self.domain.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect()
    }

    /// Computes slice `stage` from the given earlier slices.
    fn slice(&self, slices: &[FixedBitSet], stage: usize, index: &HashMap<HFSet, usize>) -> Result<FixedBitSet> {
        let view = SliceView {
            slices: &slices[..stage],
            stage,
            index,
        };
        let mut out = FixedBitSet::with_capacity(self.domain.len());
        match &self.step {
            Step::Callable(f) => {
                for (i, x) in self.domain.iter().enumerate() {
                    if f(i, x, &view)? {
                        out.insert(i);
                    }
                }
            }
            Step::Formula(phi) => {
                let model = self.stage_model(&view)?;
                let mut ev = Evaluator::new(&model);
                let stage_var = Var::from(STEP_VAR_STAGE);
                let x_var = Var::from(STEP_VAR_X);
                for (i, x) in self.domain.iter().enumerate() {
                    let env = [(x_var.clone(), x.clone()), (stage_var.clone(), HFSet::nat(stage))];
                    if ev.eval_in(phi, &env)? {
                        out.insert(i);
                    }
                }
            }
        }
        Ok(out)
    }

    fn stage_model(&self, view: &SliceView<'_>) -> Result<HfModel<'static>> {
        let mut universe: BTreeSet<HFSet> = self.domain.iter().cloned().collect();
        universe.extend((0..=self.length).map(HFSet::nat));
        let mut s = BTreeSet::new();
        for beta in 0..view.stage {
            for i in view.slices[beta].ones() {
                s.insert(HFSet::kpair(HFSet::nat(beta), self.domain[i].clone()));
            }
        }
        let mut model = HfModel::new(universe.into_iter().collect());
        model.set_class(SOLUTION_CLASS, s);
        model.set_class(PARAM_CLASS, self.param.clone());
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub slices: Vec<FixedBitSet>,
}

impl Solution {
    pub fn contains(&self, stage: usize, x: usize) -> bool {
        self.slices[stage].contains(x)
    }

    pub fn slice<'d>(&self, stage: usize, domain: &'d [HFSet]) -> Vec<&'d HFSet> {
        self.slices[stage].ones().map(|i| &domain[i]).collect()
    }
}

pub fn etr_solve(inst: &RecursionInstance<'_>) -> Result<Solution> {
    inst.check_budget()?;
    let index = inst.index();
    let mut slices: Vec<FixedBitSet> = Vec::with_capacity(inst.length);
    for stage in 0..inst.length {
        let s = inst.slice(&slices, stage, &index)?;
        slices.push(s);
    }
    Ok(Solution { slices })
}

/// `None` if every slice satisfies the recursion equation, else the first
/// failing `(stage, domain index)`.
pub fn verify_solution(inst: &RecursionInstance<'_>, sol: &Solution) -> Result<Option<(usize, usize)>> {
    inst.check_budget()?;
    if sol.slices.len() != inst.length {
        return Err(Error::Invalid("solution length does not match the instance".into()));
    }
    let index = inst.index();
    for stage in 0..inst.length {
        let expect = inst.slice(&sol.slices, stage, &index)?;
        if let Some(x) = (0..inst.domain.len()).find(|&x| expect.contains(x) != sol.slices[stage].contains(x)) {
            return Ok(Some((stage, x)));
        }
    }
    Ok(None)
}

/// `x ∈ S_α` iff every element of `x` lies in some earlier slice: the
/// cumulative hierarchy, slice `α` holding the sets of rank `≤ α`.
pub fn cumulative_instance(domain: Vec<HFSet>, length: usize) -> RecursionInstance<'static> {
    let index: HashMap<HFSet, usize> = domain.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
    RecursionInstance::callable(length, domain, move |_, x, view| {
        for y in x.children() {
            let mut seen = false;
            for beta in 0..view.stage() {
                let hit = match index.get(y) {
                    Some(&j) => view.contains(beta, j)?,
                    None => false,
                };
                if hit {
                    seen = true;
                    break;
                }
            }
            if !seen {
                return Ok(false);
            }
        }
        Ok(true)
    })
}

/// The same recursion as a formula: `∀y (y ∈ x → ∃b (b ∈ stage ∧ ⟨b, y⟩ ∈ S))`.
pub fn cumulative_formula() -> Formula {
    let x = Term::var(STEP_VAR_X);
    let y = Term::var("y");
    let b = Term::var("b");
    let stage = Term::var(STEP_VAR_STAGE);
    Formula::forall(
        alloc::vec![Var::from("y")],
        Formula::implies(
            Formula::mem(y.clone(), x),
            Formula::exists(
                alloc::vec![Var::from("b")],
                Formula::and(alloc::vec![
                    Formula::mem(b.clone(), stage),
                    Formula::in_class(Term::pair(b, y), SOLUTION_CLASS),
                ]),
            ),
        ),
    )
}

/// `x ∈ S_α` iff `x ∈ A`.
pub fn constant_instance(domain: Vec<HFSet>, length: usize, a: BTreeSet<HFSet>) -> RecursionInstance<'static> {
    let a2 = a.clone();
    RecursionInstance::callable(length, domain, move |_, x, _| Ok(a2.contains(x))).with_param(a)
}
