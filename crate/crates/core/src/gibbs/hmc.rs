//! Hamiltonian Monte Carlo on `θ = log τ` with dual-averaging step size adaptation.

use rand::Rng;

use crate::distributions::standard_normal;

/// Log density of `θ = log τ` when `τ` has kernel `τ^{k-1} exp(-b τ - c/τ)`:
/// `k θ - b e^θ - c e^{-θ}` (the Jacobian is included).
#[derive(Clone, Copy, Debug)]
pub struct LogTauTarget {
    pub k: f64,
    pub b: f64,
    pub c: f64,
}

impl LogTauTarget {
    pub fn log_density(&self, theta: f64) -> f64 {
        self.k * theta - self.b * theta.exp() - self.c * (-theta).exp()
    }

    pub fn gradient(&self, theta: f64) -> f64 {
        self.k - self.b * theta.exp() + self.c * (-theta).exp()
    }

    fn curvature(&self, theta: f64) -> f64 {
        self.b * theta.exp() + self.c * (-theta).exp()
    }
}

#[derive(Clone, Debug)]
struct DualAveraging {
    mu: f64,
    h_bar: f64,
    log_eps_bar: f64,
    m: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64) -> Self {
        DualAveraging { mu: (10.0 * eps).ln(), h_bar: 0.0, log_eps_bar: eps.ln(), m: 0.0 }
    }

    fn update(&mut self, accept_prob: f64, target: f64) -> f64 {
        self.m += 1.0;
        let w = 1.0 / (self.m + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (target - accept_prob);
        let log_eps = self.mu - self.m.sqrt() / Self::GAMMA * self.h_bar;
        let eta = self.m.powf(-Self::KAPPA);
        self.log_eps_bar = eta * log_eps + (1.0 - eta) * self.log_eps_bar;
        log_eps.exp()
    }
}

#[derive(Clone, Debug)]
pub struct LogTauHmc {
    leapfrog_steps: usize,
    target_accept: f64,
    eps: Option<f64>,
    adapt: Option<DualAveraging>,
    adapting: bool,
    accepted: u64,
    proposed: u64,
}

impl LogTauHmc {
    pub fn new(leapfrog_steps: usize, target_accept: f64) -> Self {
        LogTauHmc {
            leapfrog_steps: leapfrog_steps.max(1),
            target_accept,
            eps: None,
            adapt: None,
            adapting: true,
            accepted: 0,
            proposed: 0,
        }
    }

    pub fn step_size(&self) -> Option<f64> {
        self.eps
    }

    /// Freezes the step size at the dual-averaging estimate.
    pub fn end_adaptation(&mut self) {
        if let Some(da) = &self.adapt {
            self.eps = Some(da.log_eps_bar.exp());
        }
        self.adapting = false;
        self.accepted = 0;
        self.proposed = 0;
    }

    /// Acceptance rate since adaptation ended (or since the start while adapting).
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    pub fn transition<R: Rng + ?Sized>(&mut self, theta: f64, target: &LogTauTarget, rng: &mut R) -> f64 {
        let eps = *self.eps.get_or_insert_with(|| 0.5 / target.curvature(theta).sqrt().max(1e-8));
        if self.adapt.is_none() {
            self.adapt = Some(DualAveraging::new(eps));
        }
        let p0 = standard_normal(rng);
        let mut q = theta;
        let mut p = p0 + 0.5 * eps * target.gradient(q);
        for i in 0..self.leapfrog_steps {
            q += eps * p;
            let g = target.gradient(q);
            if i + 1 < self.leapfrog_steps {
                p += eps * g;
            } else {
                p += 0.5 * eps * g;
            }
        }
        let h0 = -target.log_density(theta) + 0.5 * p0 * p0;
        let h1 = -target.log_density(q) + 0.5 * p * p;
        let log_ratio = h0 - h1;
        let accept_prob = if log_ratio.is_nan() { 0.0 } else { log_ratio.exp().min(1.0) };
        self.proposed += 1;
        let next = if rng.random::<f64>() < accept_prob {
            self.accepted += 1;
            q
        } else {
            theta
        };
        if self.adapting {
            let da = self.adapt.as_mut().expect("initialized above");
            self.eps = Some(da.update(accept_prob, self.target_accept));
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Gig;
    use crate::rng::{stream, Purpose};

    #[test]
    fn gradient_matches_finite_difference() {
        let t = LogTauTarget { k: -3.5, b: 2.0, c: 4.0 };
        for &th in &[-1.0, 0.0, 0.7] {
            let fd = (t.log_density(th + 1e-6) - t.log_density(th - 1e-6)) / 2e-6;
            assert!((fd - t.gradient(th)).abs() < 1e-6);
        }
    }

    #[test]
    fn chain_targets_the_gig_conditional() {
        // τ kernel τ^{k-1} e^{-bτ - c/τ} is GiG(k, 2b, 2c)
        let t = LogTauTarget { k: 1.5, b: 2.0, c: 0.8 };
        let gig = Gig::new(1.5, 4.0, 1.6).unwrap();
        let mut hmc = LogTauHmc::new(10, 0.7);
        let mut rng = stream(8, 0, Purpose::Sampler);
        let mut theta = 0.0;
        for _ in 0..2000 {
            theta = hmc.transition(theta, &t, &mut rng);
        }
        hmc.end_adaptation();
        let n = 40_000;
        let mut sum = 0.0;
        for _ in 0..n {
            theta = hmc.transition(theta, &t, &mut rng);
            sum += theta.exp();
        }
        let acc = hmc.acceptance_rate().unwrap();
        assert!((0.5..=0.95).contains(&acc), "acceptance {acc}");
        let mean = sum / n as f64;
        assert!((mean - gig.mean()).abs() < 0.03 * gig.mean(), "{mean} vs {}", gig.mean());
    }
}
