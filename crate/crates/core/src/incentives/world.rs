use rand::Rng;

use super::IncentiveError;

/// Two-state generative model: a question is good (`H`) with probability
/// `w`; each agent independently observes 1 with probability `h` in state
/// `H` and `l` in state `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerativeWorld {
    pub w: f64,
    pub h: f64,
    pub l: f64,
}

impl GenerativeWorld {
    pub fn new(w: f64, h: f64, l: f64) -> Result<Self, IncentiveError> {
        for p in [w, h, l] {
            if !(0.0..=1.0).contains(&p) {
                return Err(IncentiveError::InvalidProbability(p));
            }
        }
        Ok(Self { w, h, l })
    }

    /// `P(x = 1)`.
    pub fn prior_1(&self) -> f64 {
        self.w * self.h + (1.0 - self.w) * self.l
    }

    /// `P(x_p = 1 | x_i = 1)` for two distinct agents.
    pub fn post_1_given_1(&self) -> f64 {
        (self.w * self.h * self.h + (1.0 - self.w) * self.l * self.l) / self.prior_1()
    }

    /// `P(x_p = 0 | x_i = 0)` for two distinct agents.
    pub fn post_0_given_0(&self) -> f64 {
        let (h0, l0) = (1.0 - self.h, 1.0 - self.l);
        (self.w * h0 * h0 + (1.0 - self.w) * l0 * l0) / (1.0 - self.prior_1())
    }

    /// Draws the hidden state and returns `P(x = 1)` given that state.
    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.w {
            self.h
        } else {
            self.l
        }
    }

    /// Fills `out` with independent observations for one question.
    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [bool]) {
        let p = self.sample_state(rng);
        for x in out {
            *x = rng.random::<f64>() < p;
        }
    }
}

const TOLERANCE: f64 = 1e-12;

/// Fits a symmetric mixture (`l = 1 - h`) to a prior `P(1)` and posterior
/// `P(1|1)`.
///
/// With `l = 1 - h` the prior fixes `w = (p - 1 + h) / (2h - 1)`; `h` is then
/// found by bisection on `[max(p, 1 - p), 1]`, where the implied posterior
/// rises from `p` to 1.
pub fn calibrate_world(prior_1: f64, post_1_given_1: f64) -> Result<GenerativeWorld, IncentiveError> {
    let p = prior_1;
    let q = post_1_given_1;
    if !(p > 0.0 && p < 1.0) {
        return Err(IncentiveError::DegeneratePrior(p));
    }
    let no_solution = || IncentiveError::NoSolution { prior: p, posterior: q };
    if !(q >= p && q <= 1.0) {
        return Err(no_solution());
    }
    let weight = |h: f64| {
        if (2.0 * h - 1.0).abs() < TOLERANCE {
            0.5
        } else {
            ((p - 1.0 + h) / (2.0 * h - 1.0)).clamp(0.0, 1.0)
        }
    };
    let posterior = |h: f64| GenerativeWorld { w: weight(h), h, l: 1.0 - h }.post_1_given_1();

    let mut lo = p.max(1.0 - p);
    let mut hi = 1.0;
    if posterior(lo) >= q {
        return GenerativeWorld::new(weight(lo), lo, 1.0 - lo);
    }
    while hi - lo > TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if posterior(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = if q == 1.0 { 1.0 } else { 0.5 * (lo + hi) };
    let world = GenerativeWorld::new(weight(h), h, 1.0 - h)?;
    if (world.prior_1() - p).abs() > 1e-9 || (world.post_1_given_1() - q).abs() > 1e-9 {
        return Err(no_solution());
    }
    Ok(world)
}
