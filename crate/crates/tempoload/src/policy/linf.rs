//! Exponential-potential rule for the maximum-load objective: loads are
//! normalized by a guess `Λ` of the offline optimum and each job goes to the
//! machine minimizing `Σ_t a^{x̄+p̄} − a^{x̄}` with `a = 1 + 1/(2μ)`.

use crate::error::{Error, Result};
use crate::model::LoadLedger;
use crate::policy::potential::improves;
use crate::policy::{AlgParams, ArrivingJob, OnlinePolicy};

pub struct LinfPolicy {
    params: AlgParams,
    pseudo: LoadLedger,
}

impl LinfPolicy {
    pub fn new(machines: usize, params: AlgParams) -> Self {
        debug_assert!(params.lambda > 0.0, "linf rule needs a positive lambda");
        LinfPolicy {
            params,
            pseudo: LoadLedger::new(machines),
        }
    }

    pub fn pseudo(&self) -> &LoadLedger {
        &self.pseudo
    }
}

impl OnlinePolicy for LinfPolicy {
    fn on_arrival(&mut self, job: &ArrivingJob<'_>) -> Result<usize> {
        let (lo, hi) = job.pseudo_slots(self.params.mu1);
        let a = self.params.growth();
        let lam = self.params.lambda;
        let segments = self.pseudo.segments_in(lo, hi);
        let mut best: Option<(usize, f64)> = None;
        for (machine, &load) in job.loads.iter().enumerate() {
            if !load.is_finite() {
                continue;
            }
            let mut cost = 0.0;
            for &(s, e) in &segments {
                let len = (e - s + 1) as f64;
                let cur = self.pseudo.value(machine, s) / lam;
                cost += len * (a.powf(cur + load / lam) - a.powf(cur));
            }
            match best {
                Some((_, bc)) if !improves(cost, bc) => {}
                _ => best = Some((machine, cost)),
            }
        }
        let (machine, _) = best.ok_or(Error::NoFeasibleMachine(job.id))?;
        self.pseudo.add(machine, lo, hi, job.loads[machine]);
        Ok(machine)
    }

    fn estimation_only(&self) -> bool {
        true
    }
}
