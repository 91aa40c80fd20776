//! Exponential mechanism over persistence diagram tuples, sampled with a
//! random-walk Metropolis–Hastings chain.
//!
//! The chain targets the density proportional to `exp(beta * u(P))` where
//! `u(P) = -sum_q d_B(P_q, target_q)` and `beta = epsilon / (2 * delta)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::metric::BottleneckConfig;
use crate::persistence::{Diagram, DiagramTuple, PersistencePair};

/// Privacy budget and the quantities that fix the utility's sensitivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    pub epsilon: f64,
    /// DTM resolution.
    pub m: f64,
    /// Maximum number of points per released diagram.
    pub big_m: usize,
    /// Top homological dimension.
    pub ell: usize,
    /// Diameter of the ambient set.
    pub diam_e: f64,
    pub delta_override: Option<f64>,
}

impl PrivacyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::param(format!("m = {} must lie in (0, 1)", self.m)));
        }
        if self.big_m == 0 {
            return Err(Error::param("M must be a positive integer"));
        }
        if !(self.diam_e > 0.0) || !self.diam_e.is_finite() {
            return Err(Error::param(format!("diam E = {} must be positive", self.diam_e)));
        }
        if let Some(d) = self.delta_override {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::param(format!("delta override {d} must be positive")));
            }
        }
        Ok(())
    }

    /// Utility sensitivity `(ell + 1) diam_e / (m n)` unless overridden.
    pub fn delta(&self, n: usize) -> f64 {
        self.delta_override
            .unwrap_or((self.ell + 1) as f64 * self.diam_e / (self.m * n as f64))
    }

    /// Inverse temperature `epsilon / (2 delta)`.
    pub fn beta(&self, n: usize) -> f64 {
        self.epsilon / (2.0 * self.delta(n))
    }
}

/// Sensitivity `2 sqrt 2 / (m n)`, free of `ell` and of the diameter.
pub fn fixed_scale_delta(m: f64, n: usize) -> f64 {
    2.0 * std::f64::consts::SQRT_2 / (m * n as f64)
}

/// Negative sum of per-dimension bottleneck distances to the target.
pub fn utility(target: &DiagramTuple, candidate: &DiagramTuple, cfg: &BottleneckConfig, big_m: usize) -> Result<f64> {
    Ok(-utility_terms(target, candidate, cfg, big_m)?.iter().sum::<f64>())
}

/// Per-dimension bottleneck distances between target and candidate.
pub fn utility_terms(
    target: &DiagramTuple,
    candidate: &DiagramTuple,
    cfg: &BottleneckConfig,
    big_m: usize,
) -> Result<Vec<f64>> {
    if let Some(d) = candidate.diagrams().iter().find(|d| d.len() > big_m) {
        return Err(Error::Support {
            got: d.len(),
            limit: big_m,
        });
    }
    crate::metric::tuple_bottleneck_per_dim(target, candidate, cfg)
}

/// `M` points per dimension in the triangle `{0 <= x <= y <= s}`:
/// `x ~ U[0, s]` then `y ~ U[x, s]`, i.e. `y = x + (s - x) z` with `z ~ U[0, 1]`.
///
/// Births are uniform on `[0, s]`, so the joint density `1 / (s (s - x))`
/// is not uniform on the triangle; it piles up near the corner `(s, s)`.
pub fn init_diagram_tuple<R: Rng + ?Sized>(big_m: usize, s: f64, ell: usize, rng: &mut R) -> DiagramTuple {
    let diagrams = (0..=ell)
        .map(|q| {
            let pairs = (0..big_m)
                .map(|_| {
                    let x = s * rng.random::<f64>();
                    let z = rng.random::<f64>();
                    PersistencePair::new(x, (x + (s - x) * z).min(s))
                })
                .collect();
            Diagram::new(q, pairs).expect("sampled points lie in the support")
        })
        .collect();
    DiagramTuple::new(diagrams).expect("dimensions are consecutive")
}

/// Regular lattice on the support triangle `{0 <= x <= y <= s}` with step
/// `s / levels`; it has `(levels + 1)(levels + 2) / 2` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleLattice {
    pub levels: usize,
    pub step: f64,
}

impl TriangleLattice {
    /// The finest lattice with at most `n_points` points.
    pub fn with_at_most(n_points: usize, s: f64) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::param("a triangle lattice needs at least 3 points"));
        }
        let mut levels = 1usize;
        while (levels + 2) * (levels + 3) / 2 <= n_points {
            levels += 1;
        }
        Ok(Self {
            levels,
            step: s / levels as f64,
        })
    }

    pub fn len(&self) -> usize {
        (self.levels + 1) * (self.levels + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nearest lattice point, or `None` if it falls outside the triangle.
    pub fn snap(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let i = (x / self.step).round();
        let j = (y / self.step).round();
        let top = self.levels as f64;
        (0.0 <= i && i <= j && j <= top).then_some((i * self.step, j * self.step))
    }
}

/// Gaussian perturbation of every point, or `None` when some perturbed point
/// leaves the support triangle.
pub fn propose<R: Rng + ?Sized>(
    current: &DiagramTuple,
    sigma: f64,
    s: f64,
    lattice: Option<&TriangleLattice>,
    rng: &mut R,
) -> Option<DiagramTuple> {
    let noise = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    let mut inside = true;
    let mut diagrams = Vec::with_capacity(current.diagrams().len());
    // All noise is drawn even after a point leaves the support so the random
    // stream does not depend on where the first violation happens.
    for d in current.diagrams() {
        let mut pairs = Vec::with_capacity(d.len());
        for p in d.pairs() {
            let x = p.birth + noise.sample(rng);
            let y = p.death + noise.sample(rng);
            let moved = match lattice {
                Some(l) => l.snap(x, y),
                None => (0.0 <= x && x <= y && y <= s).then_some((x, y)),
            };
            match moved {
                Some((x, y)) => pairs.push(PersistencePair::new(x, y)),
                None => inside = false,
            }
        }
        if inside {
            diagrams.push(Diagram::new(d.dim(), pairs).expect("points lie in the support"));
        }
    }
    inside.then(|| DiagramTuple::new(diagrams).expect("dimensions are preserved"))
}

/// Which symmetric proposal the chain uses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ProposalKernel {
    /// Every point takes an independent Gaussian step of scale `sigma`; one
    /// accept/reject per iteration.
    #[default]
    Joint,
    /// Each iteration visits every point in turn with its own accept/reject.
    /// With probability `redraw` the visited point is replaced by a uniform
    /// draw from the support; otherwise it takes a Gaussian step of scale
    /// `sigma / 4^j` with `j` uniform in `0..scales`.
    PointSweep { redraw: f64, scales: usize },
}

impl ProposalKernel {
    fn validate(&self) -> Result<()> {
        if let ProposalKernel::PointSweep { redraw, scales } = *self {
            if !(0.0..=1.0).contains(&redraw) {
                return Err(Error::param(format!("redraw probability {redraw} must lie in [0, 1]")));
            }
            if scales == 0 {
                return Err(Error::param("at least one step scale is needed"));
            }
        }
        Ok(())
    }
}

/// Uniform draw from the support triangle, or from the lattice points.
fn uniform_support_point<R: Rng + ?Sized>(s: f64, lattice: Option<&TriangleLattice>, rng: &mut R) -> (f64, f64) {
    match lattice {
        Some(l) => {
            let mut k = rng.random_range(0..l.len());
            // row j holds the j + 1 points (0..=j, j)
            let mut j = 0;
            while k > j {
                k -= j + 1;
                j += 1;
            }
            (k as f64 * l.step, j as f64 * l.step)
        }
        None => {
            let a = s * rng.random::<f64>();
            let b = s * rng.random::<f64>();
            (a.min(b), a.max(b))
        }
    }
}

/// Symmetric move of one point; `None` when it leaves the support.
pub fn propose_point<R: Rng + ?Sized>(
    point: (f64, f64),
    sigma: f64,
    s: f64,
    lattice: Option<&TriangleLattice>,
    redraw: f64,
    scales: usize,
    rng: &mut R,
) -> Option<(f64, f64)> {
    if rng.random::<f64>() < redraw {
        return Some(uniform_support_point(s, lattice, rng));
    }
    let j = rng.random_range(0..scales) as i32;
    let noise = Normal::new(0.0, sigma / 4f64.powi(j)).expect("sigma is positive and finite");
    let x = point.0 + noise.sample(rng);
    let y = point.1 + noise.sample(rng);
    match lattice {
        Some(l) => l.snap(x, y),
        None => (0.0 <= x && x <= y && y <= s).then_some((x, y)),
    }
}

fn replace_point(d: &Diagram, i: usize, p: (f64, f64)) -> Diagram {
    let mut pairs = d.pairs().to_vec();
    pairs[i] = PersistencePair::new(p.0, p.1);
    Diagram::new(d.dim(), pairs).expect("points lie in the support")
}

/// `min(0, beta * (u_proposed - u_current))`.
pub fn log_accept(beta: f64, u_current: f64, u_proposed: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    (beta * (u_proposed - u_current)).min(0.0)
}

/// Result of one Metropolis–Hastings transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<S> {
    pub state: S,
    pub utility: f64,
    pub accepted: bool,
    /// Log acceptance probability; `-inf` for out-of-support proposals.
    pub log_accept: f64,
}

/// One transition of a random-walk chain targeting `exp(beta * u)`. The
/// proposal kernel must be symmetric; `None` marks a proposal outside the
/// support, which is always rejected.
pub fn metropolis_step<S, R, U>(
    current: S,
    current_utility: f64,
    proposal: Option<S>,
    beta: f64,
    utility: U,
    rng: &mut R,
) -> Step<S>
where
    R: Rng + ?Sized,
    U: FnOnce(&S) -> f64,
{
    let Some(candidate) = proposal else {
        return Step {
            state: current,
            utility: current_utility,
            accepted: false,
            log_accept: f64::NEG_INFINITY,
        };
    };
    let u = utility(&candidate);
    let p = log_accept(beta, current_utility, u);
    let draw: f64 = rng.random();
    if draw.ln() <= p {
        Step {
            state: candidate,
            utility: u,
            accepted: true,
            log_accept: p,
        }
    } else {
        Step {
            state: current,
            utility: current_utility,
            accepted: false,
            log_accept: p,
        }
    }
}

/// Sampler settings that are not privacy parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub sigma: f64,
    /// Upper edge `S` of the support triangle.
    pub cap: f64,
    /// When set, states live on a triangle lattice with at most this many points.
    pub snap_grid: Option<usize>,
    pub bottleneck: BottleneckConfig,
    pub kernel: ProposalKernel,
}

/// One row of the chain trace, recorded after each transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub utility: f64,
    pub accepted: bool,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismTrace {
    pub records: Vec<TraceRecord>,
    pub final_state: DiagramTuple,
}

impl MechanismTrace {
    pub fn acceptance_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.accepted).count() as f64 / self.records.len() as f64
    }
}

/// Runs the exponential mechanism for a dataset of `n` points and returns the
/// last state of the chain with the full trace.
pub fn privatize<R: Rng + ?Sized>(
    target: &DiagramTuple,
    params: &PrivacyParams,
    n: usize,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<(DiagramTuple, MechanismTrace)> {
    params.validate()?;
    if n == 0 {
        return Err(Error::NoPoints);
    }
    if config.iterations == 0 {
        return Err(Error::param("the chain needs at least one iteration"));
    }
    if !(config.sigma > 0.0) || !config.sigma.is_finite() {
        return Err(Error::param(format!("sigma = {} must be positive", config.sigma)));
    }
    if !(config.cap > 0.0) || !config.cap.is_finite() {
        return Err(Error::param(format!("support cap S = {} must be positive", config.cap)));
    }
    config.kernel.validate()?;
    if target.ell() != params.ell {
        return Err(Error::param(format!(
            "target has top dimension {} but ell = {}",
            target.ell(),
            params.ell
        )));
    }
    let lattice = config
        .snap_grid
        .map(|g| TriangleLattice::with_at_most(g, config.cap))
        .transpose()?;
    let beta = params.beta(n);
    let bcfg = config.bottleneck;
    // Apply the essential-class policy once; candidates carry no essentials.
    let prepared = DiagramTuple::new(
        target
            .diagrams()
            .iter()
            .map(|d| bcfg.prepare(d, &Diagram::empty(d.dim())).0)
            .collect(),
    )?;
    let inner = BottleneckConfig {
        keep_essential: true,
        ..bcfg
    };
    let terms = |c: &DiagramTuple| utility_terms(&prepared, c, &inner, params.big_m);

    let mut state = init_diagram_tuple(params.big_m, config.cap, params.ell, rng);
    if let Some(l) = &lattice {
        state = snap_tuple(&state, l);
    }
    let mut dists = terms(&state)?;
    let mut u = -dists.iter().sum::<f64>();
    let mut records = Vec::with_capacity(config.iterations);
    for iteration in 1..=config.iterations {
        let accepted = match config.kernel {
            ProposalKernel::Joint => {
                let proposal = propose(&state, config.sigma, config.cap, lattice.as_ref(), rng);
                let mut cand_dists = None;
                let step = metropolis_step(
                    state,
                    u,
                    proposal,
                    beta,
                    |c| {
                        let d = terms(c).expect("proposals keep M points per dimension");
                        let total = -d.iter().sum::<f64>();
                        cand_dists = Some(d);
                        total
                    },
                    rng,
                );
                if step.accepted {
                    dists = cand_dists.expect("accepted proposals were evaluated");
                }
                state = step.state;
                u = step.utility;
                step.accepted
            }
            ProposalKernel::PointSweep { redraw, scales } => {
                let mut diagrams = state.diagrams().to_vec();
                let mut any = false;
                for q in 0..diagrams.len() {
                    for i in 0..diagrams[q].len() {
                        let p = diagrams[q].pairs()[i];
                        let moved = propose_point(
                            (p.birth, p.death),
                            config.sigma,
                            config.cap,
                            lattice.as_ref(),
                            redraw,
                            scales,
                            rng,
                        )
                        .map(|m| replace_point(&diagrams[q], i, m));
                        let others = u + dists[q];
                        let mut cand_dq = 0.0;
                        let step = metropolis_step(
                            diagrams[q].clone(),
                            u,
                            moved,
                            beta,
                            |d| {
                                cand_dq = inner.distance(&prepared.diagrams()[q], d);
                                others - cand_dq
                            },
                            rng,
                        );
                        if step.accepted {
                            dists[q] = cand_dq;
                            any = true;
                        }
                        diagrams[q] = step.state;
                        u = step.utility;
                    }
                }
                state = DiagramTuple::new(diagrams)?;
                any
            }
        };
        records.push(TraceRecord {
            iteration,
            utility: u,
            accepted,
            distances: dists.clone(),
        });
    }
    let trace = MechanismTrace {
        records,
        final_state: state.clone(),
    };
    Ok((state, trace))
}

fn snap_tuple(t: &DiagramTuple, lattice: &TriangleLattice) -> DiagramTuple {
    let diagrams = t
        .diagrams()
        .iter()
        .map(|d| {
            let pairs = d
                .pairs()
                .iter()
                .map(|p| {
                    // initial points are inside the triangle, so the nearest
                    // lattice point is too (up to the boundary rounding below)
                    let (x, y) = lattice
                        .snap(p.birth, p.death)
                        .unwrap_or((p.birth.min(p.death), p.death));
                    PersistencePair::new(x, y)
                })
                .collect();
            Diagram::new(d.dim(), pairs).expect("snapped points lie in the support")
        })
        .collect();
    DiagramTuple::new(diagrams).expect("dimensions are preserved")
}
