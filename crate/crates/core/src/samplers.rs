//! Turning allocations into sampled subject indices.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::models::FisherAtoms;
use crate::optimizer::{constrained_lift_one, round_off, LiftOneConfig};
use crate::region::{Allocation, FeasibleRegion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub covariates: Vec<f64>,
    pub members: Vec<usize>,
}

/// Finite population split into strata with distinct member indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    strata: Vec<Stratum>,
    total: usize,
}

impl Population {
    pub fn new(strata: Vec<Stratum>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &strata {
            for &m in &s.members {
                if !seen.insert(m) {
                    return Err(Error::Invalid(format!(
                        "member {m} appears in more than one stratum"
                    )));
                }
            }
        }
        let total = seen.len();
        Ok(Self { strata, total })
    }

    /// Members numbered consecutively, stratum by stratum.
    pub fn from_counts(covariates: &[Vec<f64>], counts: &[u64]) -> Result<Self> {
        check_len(covariates.len(), counts.len(), "stratum counts")?;
        let mut next = 0;
        let strata = covariates
            .iter()
            .zip(counts)
            .map(|(x, &c)| {
                let members = (next..next + c as usize).collect();
                next += c as usize;
                Stratum {
                    covariates: x.clone(),
                    members,
                }
            })
            .collect();
        Self::new(strata)
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn counts(&self) -> Vec<u64> {
        self.strata.iter().map(|s| s.members.len() as u64).collect()
    }

    /// Stratum of every member index, or `None` for unused indices.
    pub fn membership(&self) -> Vec<Option<usize>> {
        let len = self
            .strata
            .iter()
            .flat_map(|s| s.members.iter())
            .max()
            .map_or(0, |m| m + 1);
        let mut out = vec![None; len];
        for (i, s) in self.strata.iter().enumerate() {
            for &m in &s.members {
                out[m] = Some(i);
            }
        }
        out
    }
}

fn draw<R: Rng + ?Sized>(items: &[usize], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n > items.len() {
        return Err(Error::Invalid(format!(
            "cannot draw {n} from {} units",
            items.len()
        )));
    }
    let mut pool = items.to_vec();
    let (chosen, _) = pool.partial_shuffle(rng, n);
    Ok(chosen.to_vec())
}

/// `n` distinct members, uniform over all `n`-subsets.
pub fn srswor<R: Rng + ?Sized>(pop: &Population, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let all: Vec<usize> = pop
        .strata
        .iter()
        .flat_map(|s| s.members.iter().copied())
        .collect();
    draw(&all, n, rng)
}

/// Union of independent SRSWOR draws of size `exact[i]` within stratum `i`.
pub fn stratified_sample<R: Rng + ?Sized>(
    pop: &Population,
    exact: &[u64],
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_len(pop.strata.len(), exact.len(), "exact allocation")?;
    let mut out = Vec::with_capacity(exact.iter().sum::<u64>() as usize);
    for (s, &n) in pop.strata.iter().zip(exact) {
        out.extend(draw(&s.members, n as usize, rng)?);
    }
    Ok(out)
}

fn check_budget(counts: &[u64], n: u64) -> Result<()> {
    let total: u64 = counts.iter().sum();
    if n > total {
        return Err(Error::Invalid(format!(
            "budget {n} exceeds population size {total}"
        )));
    }
    Ok(())
}

/// `n_i ∝ N_i`, rounded by largest remainder with ties to the lowest index.
pub fn proportional_counts(counts: &[u64], n: u64) -> Result<Vec<u64>> {
    check_budget(counts, n)?;
    let total: u64 = counts.iter().sum();
    let mut out: Vec<u64> = counts.iter().map(|&c| c * n / total).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(counts[i] * n % total));
    let short = n - out.iter().sum::<u64>();
    for &i in order.iter().take(short as usize) {
        out[i] += 1;
    }
    Ok(out)
}

/// `n_i = min(k, N_i)` with `Σ min(k, N_i) ≤ n < Σ min(k + 1, N_i)`, the
/// remaining units going one each to the lowest-index strata with `N_i > k`.
pub fn uniform_counts(counts: &[u64], n: u64) -> Result<Vec<u64>> {
    check_budget(counts, n)?;
    let filled = |k: u64| counts.iter().map(|&c| c.min(k)).sum::<u64>();
    let (mut lo, mut hi) = (0, counts.iter().copied().max().unwrap_or(0));
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if filled(mid) <= n {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let mut out: Vec<u64> = counts.iter().map(|&c| c.min(lo)).collect();
    let mut left = n - filled(lo);
    for (o, &c) in out.iter_mut().zip(counts) {
        if left == 0 {
            break;
        }
        if c > lo {
            *o += 1;
            left -= 1;
        }
    }
    Ok(out)
}

/// How a sampler selects subjects.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Plan {
    Simple(u64),
    Stratified(Vec<u64>),
}

impl Plan {
    pub fn draw<R: Rng + ?Sized>(&self, pop: &Population, rng: &mut R) -> Result<Vec<usize>> {
        match self {
            Plan::Simple(n) => srswor(pop, *n as usize, rng),
            Plan::Stratified(exact) => stratified_sample(pop, exact, rng),
        }
    }

    pub fn allocation(&self) -> Option<&[u64]> {
        match self {
            Plan::Simple(_) => None,
            Plan::Stratified(exact) => Some(exact),
        }
    }
}

/// Inputs available to every sampler.
#[derive(Debug, Clone, Copy)]
pub struct SamplingContext<'a> {
    pub counts: &'a [u64],
    pub budget: u64,
    pub region: &'a FeasibleRegion,
    pub local_atoms: Option<&'a FisherAtoms>,
    pub ew_atoms: Option<&'a FisherAtoms>,
    pub optimizer: &'a LiftOneConfig,
}

pub trait Sampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn plan(&self, ctx: &SamplingContext) -> Result<Plan>;
}

struct Srswor;
struct Proportional;
struct Uniform;
struct DOptimal;
struct EwDOptimal;

impl Sampler for Srswor {
    fn name(&self) -> &'static str {
        "srswor"
    }

    fn plan(&self, ctx: &SamplingContext) -> Result<Plan> {
        check_budget(ctx.counts, ctx.budget)?;
        Ok(Plan::Simple(ctx.budget))
    }
}

impl Sampler for Proportional {
    fn name(&self) -> &'static str {
        "proportional"
    }

    fn plan(&self, ctx: &SamplingContext) -> Result<Plan> {
        proportional_counts(ctx.counts, ctx.budget).map(Plan::Stratified)
    }
}

impl Sampler for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn plan(&self, ctx: &SamplingContext) -> Result<Plan> {
        uniform_counts(ctx.counts, ctx.budget).map(Plan::Stratified)
    }
}

fn optimal_plan(atoms: Option<&FisherAtoms>, ctx: &SamplingContext, what: &str) -> Result<Plan> {
    let atoms = atoms.ok_or_else(|| Error::Invalid(format!("{what} sampler needs a model")))?;
    check_budget(ctx.counts, ctx.budget)?;
    let result = constrained_lift_one(atoms, ctx.region, ctx.optimizer)?;
    round_off(atoms, ctx.region, &result.allocation, ctx.budget).map(Plan::Stratified)
}

impl Sampler for DOptimal {
    fn name(&self) -> &'static str {
        "d_optimal"
    }

    fn plan(&self, ctx: &SamplingContext) -> Result<Plan> {
        optimal_plan(ctx.local_atoms, ctx, "d_optimal")
    }
}

impl Sampler for EwDOptimal {
    fn name(&self) -> &'static str {
        "ew_d_optimal"
    }

    fn plan(&self, ctx: &SamplingContext) -> Result<Plan> {
        optimal_plan(ctx.ew_atoms, ctx, "ew_d_optimal")
    }
}

pub fn samplers() -> Vec<Box<dyn Sampler>> {
    vec![
        Box::new(Srswor),
        Box::new(Proportional),
        Box::new(Uniform),
        Box::new(DOptimal),
        Box::new(EwDOptimal),
    ]
}

pub fn sampler(name: &str) -> Result<Box<dyn Sampler>> {
    samplers()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::Unknown {
            kind: "sampler",
            name: name.to_string(),
        })
}

/// Weights `n_i / n` of an exact allocation.
pub fn exact_weights(exact: &[u64]) -> Result<Allocation> {
    Allocation::from_counts(exact)
}
