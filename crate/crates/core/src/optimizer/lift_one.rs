use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::line_search::{fit_h_polynomial, maximize_h};
use super::univariate::{
    lift_profile_coeffs, lift_profile_derivative, maximize_lift_general, maximize_log_det_segment,
};
use super::{objective, LiftOneConfig, OptimResult};
use crate::error::{check_len, Error, Result};
use crate::linalg::{log_det_ratio, trace_solve, SquareMatrix};
use crate::models::FisherAtoms;
use crate::region::{Allocation, FeasibleRegion, FEASIBILITY_TOL};

/// `(1 − w_i) f_i'(w_i) / f(w) = tr(F(w)⁻¹ F_i) − p` for every stratum.
pub fn directional_derivatives(
    atoms: &FisherAtoms,
    w: &Allocation,
    analytic: bool,
) -> Result<Vec<f64>> {
    check_len(atoms.len(), w.len(), "allocation")?;
    let ws = w.as_slice();
    let f = objective(atoms, w);
    if !(f > 0.0) {
        return Err(Error::Invalid(
            "derivatives need a positive objective".into(),
        ));
    }
    let p = atoms.dim();
    if analytic && atoms.is_rank_one() {
        return (0..atoms.len())
            .map(|i| {
                let (a, b) = lift_profile_coeffs(atoms, w, i)?;
                Ok((1.0 - ws[i]) * lift_profile_derivative(a / f, b / f, p, ws[i]))
            })
            .collect();
    }
    let info = atoms.information(ws);
    atoms
        .atoms()
        .iter()
        .map(|a| Ok(trace_solve(&info, a)? - p as f64))
        .collect()
}

struct Run<'a> {
    atoms: &'a FisherAtoms,
    cfg: &'a LiftOneConfig,
    w: Allocation,
    info: SquareMatrix,
    log_f: f64,
    trace: Vec<f64>,
    sweeps: usize,
    order: Vec<usize>,
    rng: ChaCha8Rng,
}

impl<'a> Run<'a> {
    fn new(atoms: &'a FisherAtoms, start: Allocation, cfg: &'a LiftOneConfig) -> Result<Self> {
        cfg.validate()?;
        check_len(atoms.len(), start.len(), "start allocation")?;
        let f = objective(atoms, &start);
        if !(f > 0.0) {
            return Err(Error::NoPositiveStart);
        }
        Ok(Self {
            atoms,
            cfg,
            info: atoms.information(start.as_slice()),
            w: start,
            log_f: f.ln(),
            trace: vec![f.ln()],
            sweeps: 0,
            order: (0..atoms.len()).collect(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    /// Moves to `candidate` if the exact log-increment of `f` is positive.
    fn try_move(&mut self, candidate: Allocation) -> Result<bool> {
        let step: Vec<f64> = candidate
            .as_slice()
            .iter()
            .zip(self.w.as_slice())
            .map(|(c, w)| c - w)
            .collect();
        let delta = self.atoms.information(&step);
        let gain = log_det_ratio(&self.info, &delta)?;
        if !(gain > 0.0) {
            return Ok(false);
        }
        self.info = self.atoms.information(candidate.as_slice());
        self.w = candidate;
        self.log_f += gain;
        self.trace.push(self.log_f);
        Ok(true)
    }

    fn lift(&mut self, i: usize, region: Option<&FeasibleRegion>) -> Result<()> {
        let wi = self.w.as_slice()[i];
        if wi >= 1.0 {
            return Ok(());
        }
        let (r1, r2) = match region {
            Some(r) => r.lift_interval(&self.w, i)?,
            None => (0.0, 1.0),
        };
        let z = maximize_lift_general(self.atoms, &self.w, i, r1, r2, self.cfg.analytic_glm)?;
        if z == wi {
            return Ok(());
        }
        self.try_move(Allocation::normalized(self.w.lifted(i, z))?)?;
        Ok(())
    }

    /// Sweeps in random order until one improves the objective by at most
    /// `sweep_tol` relative. Returns false if the sweep budget runs out.
    fn sweep_until_converged(&mut self, region: Option<&FeasibleRegion>) -> Result<bool> {
        loop {
            if self.sweeps >= self.cfg.max_sweeps {
                return Ok(false);
            }
            let before = self.log_f;
            let mut order = std::mem::take(&mut self.order);
            order.shuffle(&mut self.rng);
            for &i in &order {
                self.lift(i, region)?;
            }
            self.order = order;
            self.sweeps += 1;
            if self.log_f - before <= self.cfg.sweep_tol {
                return Ok(true);
            }
        }
    }

    /// Moves along `[w*, w_o]`; false if no strict improvement was found.
    fn line_search(&mut self, w_o: &Allocation) -> Result<bool> {
        let ws = self.w.as_slice().to_vec();
        let alpha = fit_h_polynomial(self.atoms, &ws, w_o.as_slice())
            .and_then(|c| maximize_h(&c))
            .ok();
        let mix = |a: f64| {
            Allocation::normalized(
                ws.iter()
                    .zip(w_o.as_slice())
                    .map(|(s, o)| (1.0 - a) * s + a * o)
                    .collect(),
            )
        };
        if let Some(a) = alpha {
            if self.try_move(mix(a)?)? {
                return Ok(true);
            }
        }
        let end = self.atoms.information(w_o.as_slice());
        let a = maximize_log_det_segment(&self.info, &end, 0.0, 1.0);
        self.try_move(mix(a)?)
    }

    /// Pairwise mass transfers `w + t (e_i − e_j)` along the steepest
    /// feasible pair, each with an exact line search.
    fn exchange_pass(&mut self, region: &FeasibleRegion) -> Result<()> {
        let m = self.atoms.len();
        for _ in 0..20 * m {
            let d = directional_derivatives(self.atoms, &self.w, false)?;
            let ws = self.w.as_slice();
            let mut best: Option<(usize, usize, f64, f64)> = None;
            for i in 0..m {
                for j in 0..m {
                    let gap = d[i] - d[j];
                    if gap <= 1e-3 * self.cfg.certificate_tol || best.is_some_and(|b| gap <= b.2) {
                        continue;
                    }
                    let t = region.exchange_limit(ws, i, j);
                    if t > 1e-15 {
                        best = Some((i, j, gap, t));
                    }
                }
            }
            let Some((i, j, _, t)) = best else {
                return Ok(());
            };
            let mut far = ws.to_vec();
            far[i] += t;
            far[j] -= t;
            let end = self.atoms.information(&far);
            let s = maximize_log_det_segment(&self.info, &end, 0.0, 1.0);
            let mut next = ws.to_vec();
            next[i] += s * t;
            next[j] = (next[j] - s * t).max(0.0);
            if !self.try_move(Allocation::new(next)?)? {
                return Ok(());
            }
        }
        Ok(())
    }

    fn finish(self, lp_value: Option<f64>, outer: usize, converged: bool) -> Result<OptimResult> {
        let derivatives = directional_derivatives(self.atoms, &self.w, self.cfg.analytic_glm)?;
        let f = objective(self.atoms, &self.w);
        Ok(OptimResult {
            log_objective: f.ln(),
            objective: f,
            allocation: self.w,
            derivatives,
            lp_value,
            outer_iterations: outer,
            sweeps: self.sweeps,
            converged,
            trace: self.trace,
        })
    }
}

fn start_in(region: &FeasibleRegion, cfg: &LiftOneConfig) -> Result<Allocation> {
    match &cfg.start {
        Some(w) => {
            if !region.contains(w.as_slice(), FEASIBILITY_TOL)? {
                return Err(Error::OutsideRegion(format!("start {:?}", w.as_slice())));
            }
            Ok(w.clone())
        }
        None => region.interior_start(),
    }
}

/// Lift-one with exact feasible intervals, derivative screen, LP ascent
/// check and line-search restarts.
pub fn constrained_lift_one(
    atoms: &FisherAtoms,
    region: &FeasibleRegion,
    cfg: &LiftOneConfig,
) -> Result<OptimResult> {
    check_len(region.strata(), atoms.len(), "region strata")?;
    let mut run = Run::new(atoms, start_in(region, cfg)?, cfg)?;
    let tol = cfg.certificate_tol;
    let mut outer = 0;
    loop {
        if !run.sweep_until_converged(Some(region))? {
            return run.finish(None, outer, false);
        }
        let d = directional_derivatives(atoms, &run.w, cfg.analytic_glm)?;
        if d.iter().all(|&v| v <= tol) {
            return run.finish(None, outer, true);
        }
        let w_o = region.maximize_linear(&d)?;
        let g: f64 = w_o.as_slice().iter().zip(&d).map(|(w, v)| w * v).sum();
        if g <= tol {
            return run.finish(Some(g), outer, true);
        }
        if outer >= cfg.max_outer {
            return run.finish(Some(g), outer, false);
        }
        let moved = run.line_search(&w_o)?;
        let before = run.log_f;
        if cfg.exchange_steps {
            run.exchange_pass(region)?;
        }
        if !moved && run.log_f <= before {
            return run.finish(Some(g), outer, false);
        }
        outer += 1;
    }
}

/// Unconstrained lift-one over the whole simplex.
pub fn original_lift_one(atoms: &FisherAtoms, cfg: &LiftOneConfig) -> Result<OptimResult> {
    let start = cfg
        .start
        .clone()
        .unwrap_or_else(|| Allocation::uniform(atoms.len()));
    let mut run = Run::new(atoms, start, cfg)?;
    let converged = run.sweep_until_converged(None)?;
    run.finish(None, 0, converged)
}

/// Lift-one sweeps with intervals clipped to `region` and no certificate
/// steps; may stop at a point that is not optimal in `region`.
pub fn original_lift_one_within(
    atoms: &FisherAtoms,
    region: &FeasibleRegion,
    cfg: &LiftOneConfig,
) -> Result<OptimResult> {
    check_len(region.strata(), atoms.len(), "region strata")?;
    let mut run = Run::new(atoms, start_in(region, cfg)?, cfg)?;
    let converged = run.sweep_until_converged(Some(region))?;
    run.finish(None, 0, converged)
}
