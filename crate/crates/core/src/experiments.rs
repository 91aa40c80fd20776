//! Simulation harness: two-circle sweeps over the privacy budget and the
//! sample size, and the single-dataset walker run.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dtm::{DtmParams, GridSpec};
use crate::error::{Error, Result};
use crate::geometry::{diameter, PointCloud};
use crate::mechanism::{fixed_scale_delta, privatize, MechanismTrace, PrivacyParams, ProposalKernel, SamplerConfig};
use crate::metric::{tuple_bottleneck_per_dim, BottleneckConfig};
use crate::persistence::DiagramTuple;
use crate::pipeline::dtm_diagrams;

/// Centres and radii of the two circles.
pub const CIRCLES: [([f64; 2], f64); 2] = [([1.5, 1.5], 1.5), ([-1.5, -1.5], 1.0)];

/// `n / 2` points uniform on the first circle, the rest on the second.
pub fn generate_two_circles<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PointCloud {
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (c, r) = CIRCLES[usize::from(i >= n / 2)];
        let t = 2.0 * PI * rng.random::<f64>();
        coords.extend_from_slice(&[c[0] + r * t.cos(), c[1] + r * t.sin()]);
    }
    PointCloud::new(2, coords).expect("two-circle coordinates are finite")
}

/// Copy of `cloud` with one extra point midway between the circle centres.
pub fn with_midpoint_outlier(cloud: &PointCloud) -> PointCloud {
    let mut out = cloud.clone();
    let mid = [
        0.5 * (CIRCLES[0].0[0] + CIRCLES[1].0[0]),
        0.5 * (CIRCLES[0].0[1] + CIRCLES[1].0[1]),
    ];
    out.push(&mid).expect("planar cloud");
    out
}

/// A 3-D stand-in for indoor walking traces: a noisy walk around a
/// rectangular corridor loop with two floors joined by a stairwell.
pub fn corridor_walk<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PointCloud {
    let (w, h, floor) = (40.0, 20.0, 3.5);
    let perimeter = 2.0 * (w + h);
    let mut coords = Vec::with_capacity(3 * n);
    let mut s = 0.0f64;
    for i in 0..n {
        s = (s + 0.5 + 0.2 * rng.random::<f64>()) % perimeter;
        let (x, y) = if s < w {
            (s, 0.0)
        } else if s < w + h {
            (w, s - w)
        } else if s < 2.0 * w + h {
            (2.0 * w + h - s, h)
        } else {
            (0.0, perimeter - s)
        };
        // every other lap is walked one floor up
        let lap = (i as f64 * 0.6 / perimeter).floor() as u64;
        let z = if lap.is_multiple_of(2) { 0.0 } else { floor };
        coords.extend_from_slice(&[
            x + 0.4 * (rng.random::<f64>() - 0.5),
            y + 0.4 * (rng.random::<f64>() - 0.5),
            z + 0.1 * (rng.random::<f64>() - 0.5),
        ]);
    }
    PointCloud::new(3, coords).expect("walk coordinates are finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    N,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::N => "n",
        }
    }
}

/// How the utility sensitivity is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    /// `(ell + 1) diam_e / (m n)`.
    Sensitivity,
    /// `2 sqrt 2 / (m n)`.
    FixedScale,
    Value(f64),
}

impl DeltaRule {
    fn override_for(self, m: f64, n: usize) -> Option<f64> {
        match self {
            DeltaRule::Sensitivity => None,
            DeltaRule::FixedScale => Some(fixed_scale_delta(m, n)),
            DeltaRule::Value(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    /// Fresh two-circle data for every replicate.
    TwoCircles,
    /// A fixed cloud; the `n` axis subsamples it without replacement.
    Cloud(PointCloud),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub reps: usize,
    pub epsilon: f64,
    pub n: usize,
    pub m: f64,
    pub big_m: usize,
    pub ell: usize,
    pub iterations: usize,
    /// Proposal scale; `diam_e / 50` when unset.
    pub sigma: Option<f64>,
    pub grid_resolution: usize,
    pub delta: DeltaRule,
    /// Ambient diameter; the observed diameter of each dataset when unset.
    pub diam_e: Option<f64>,
    pub kernel: ProposalKernel,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: Dataset::TwoCircles,
            axis: SweepAxis::Epsilon,
            values: vec![0.1, 1.0, 10.0],
            reps: 50,
            epsilon: 1.0,
            n: 4000,
            m: 0.2,
            big_m: 5,
            ell: 1,
            iterations: 2000,
            sigma: None,
            grid_resolution: 64,
            delta: DeltaRule::FixedScale,
            diam_e: None,
            kernel: SWEEP_KERNEL,
            seed: 0,
        }
    }
}

/// Default proposal for simulation sweeps.
pub const SWEEP_KERNEL: ProposalKernel = ProposalKernel::PointSweep { redraw: 0.3, scales: 4 };

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::param("at least one replicate is needed"));
        }
        if self.values.is_empty() {
            return Err(Error::param("sweep needs at least one value"));
        }
        if self.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::param("sweep values must be positive"));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("sweep values must be strictly increasing"));
        }
        if self.axis == SweepAxis::N && self.values.iter().any(|v| v.fract() != 0.0 || *v < 2.0) {
            return Err(Error::param("sample sizes must be integers >= 2"));
        }
        Ok(())
    }
}

/// One privatised replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub rep: usize,
    /// Bottleneck distance to the true diagram in each dimension.
    pub db: Vec<f64>,
    pub total: f64,
}

/// Quantiles of the total distance at one sweep value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub value: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
    /// Least-squares slope of log median against log sweep value.
    pub slope: f64,
}

/// Seed salt separating chain streams from data streams.
const CHAIN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Everything one chain needs, resolved from the configuration and data.
struct ChainSetup {
    target: DiagramTuple,
    privacy: PrivacyParams,
    sampler: SamplerConfig,
    n: usize,
}

fn setup_chain(cloud: &PointCloud, c: &WalkerConfig) -> Result<ChainSetup> {
    let WalkerConfig {
        epsilon,
        m,
        big_m,
        ell,
        iterations,
        sigma,
        grid_resolution,
        delta,
        diam_e,
        ..
    } = *c;
    let n = cloud.len();
    let diam_e = match diam_e {
        Some(d) => d,
        None => diameter(cloud)?,
    };
    let grid = GridSpec::padded_for(cloud, grid_resolution)?;
    let (target, field) = dtm_diagrams(cloud, &grid, &DtmParams::new(m, 1.0)?, ell)?;
    let privacy = PrivacyParams {
        epsilon,
        m,
        big_m,
        ell,
        diam_e,
        delta_override: delta.override_for(m, n),
    };
    let sampler = SamplerConfig {
        iterations,
        sigma: sigma.unwrap_or(diam_e / 50.0),
        cap: field.max(),
        snap_grid: None,
        bottleneck: BottleneckConfig::default(),
        kernel: c.kernel,
    };
    Ok(ChainSetup {
        target,
        privacy,
        sampler,
        n,
    })
}

fn run_replicate(config: &ExperimentConfig, vi: usize, rep: usize) -> Result<SweepRow> {
    let value = config.values[vi];
    let (epsilon, n) = match config.axis {
        SweepAxis::Epsilon => (value, config.n),
        SweepAxis::N => (config.epsilon, value as usize),
    };
    let job = (vi * config.reps + rep) as u64;
    // Along the epsilon axis replicate r sees the same data at every value.
    let data_stream = match config.axis {
        SweepAxis::Epsilon => rep as u64,
        SweepAxis::N => job,
    };
    let mut data_rng = stream_rng(config.seed, data_stream);
    let cloud = match &config.dataset {
        Dataset::TwoCircles => generate_two_circles(n, &mut data_rng),
        Dataset::Cloud(c) => {
            if n > c.len() {
                return Err(Error::param(format!(
                    "cannot subsample {n} points from a cloud of {}",
                    c.len()
                )));
            }
            if n == c.len() {
                c.clone()
            } else {
                let mut idx = sample(&mut data_rng, c.len(), n).into_vec();
                idx.sort_unstable();
                let rows: Vec<&[f64]> = idx.iter().map(|&i| c.point(i)).collect();
                PointCloud::from_rows(&rows)?
            }
        }
    };
    let chain = WalkerConfig {
        epsilon,
        m: config.m,
        big_m: config.big_m,
        ell: config.ell,
        iterations: config.iterations,
        sigma: config.sigma,
        grid_resolution: config.grid_resolution,
        delta: config.delta,
        diam_e: config.diam_e,
        kernel: config.kernel,
        seed: config.seed,
    };
    let setup = setup_chain(&cloud, &chain)?;
    let mut chain_rng = stream_rng(config.seed ^ CHAIN_SALT, job);
    let (private, _) = privatize(&setup.target, &setup.privacy, setup.n, &setup.sampler, &mut chain_rng)?;
    let db = tuple_bottleneck_per_dim(&setup.target, &private, &BottleneckConfig::default())?;
    let total = db.iter().sum();
    Ok(SweepRow { value, rep, db, total })
}

/// Linear-interpolation quantile of sorted data (`q` in [0, 1]).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs every replicate (in parallel) and summarises each sweep value by the
/// 2.5%, 50% and 97.5% quantiles of the total distance.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.values.len())
        .flat_map(|vi| (0..config.reps).map(move |rep| (vi, rep)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(vi, rep)| run_replicate(config, vi, rep))
        .collect::<Result<_>>()?;
    let summary: Vec<SweepSummary> = config
        .values
        .iter()
        .enumerate()
        .map(|(vi, &value)| {
            let mut totals: Vec<f64> = rows[vi * config.reps..(vi + 1) * config.reps]
                .iter()
                .map(|r| r.total)
                .collect();
            totals.sort_by(f64::total_cmp);
            SweepSummary {
                value,
                lower: quantile(&totals, 0.025),
                median: quantile(&totals, 0.5),
                upper: quantile(&totals, 0.975),
            }
        })
        .collect();
    let slope = if summary.len() >= 2 {
        let x: Vec<f64> = summary.iter().map(|s| s.value.ln()).collect();
        let y: Vec<f64> = summary.iter().map(|s| s.median.ln()).collect();
        ls_slope(&x, &y)
    } else {
        f64::NAN
    };
    Ok(SweepResult {
        axis: config.axis,
        rows,
        summary,
        slope,
    })
}

/// Log-log plot of the median with its quantile band.
pub fn sweep_svg(result: &SweepResult) -> String {
    let (w, h, pad) = (480.0, 360.0, 50.0);
    let xs: Vec<f64> = result.summary.iter().map(|s| s.value.ln()).collect();
    let lows: Vec<f64> = result.summary.iter().map(|s| s.lower.max(1e-300).ln()).collect();
    let highs: Vec<f64> = result.summary.iter().map(|s| s.upper.max(1e-300).ln()).collect();
    let meds: Vec<f64> = result.summary.iter().map(|s| s.median.max(1e-300).ln()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&[lows.as_slice(), highs.as_slice()].concat());
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let mut band = String::new();
    for (x, y) in xs.iter().zip(&highs) {
        let _ = write!(band, "{:.2},{:.2} ", px(*x), py(*y));
    }
    for (x, y) in xs.iter().zip(&lows).rev() {
        let _ = write!(band, "{:.2},{:.2} ", px(*x), py(*y));
    }
    let _ = writeln!(
        svg,
        r#"<polygon points="{}" fill="steelblue" fill-opacity="0.3"/>"#,
        band.trim_end()
    );
    let line: Vec<String> = xs
        .iter()
        .zip(&meds)
        .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        line.join(" ")
    );
    for (x, y) in xs.iter().zip(&meds) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            px(*x),
            py(*y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{pad}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{b}" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    for s in &result.summary {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            px(s.value.ln()),
            h - pad + 16.0,
            s.value
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">log {} (slope {:.3})</text>"#,
        w / 2.0,
        h - 10.0,
        result.axis.name(),
        result.slope
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-size="12" transform="rotate(-90 14 {:.2})" text-anchor="middle">log bottleneck distance</text>"#,
        h / 2.0,
        h / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Settings for a single privatised dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerConfig {
    pub epsilon: f64,
    pub m: f64,
    pub big_m: usize,
    pub ell: usize,
    pub iterations: usize,
    pub sigma: Option<f64>,
    pub grid_resolution: usize,
    pub delta: DeltaRule,
    pub diam_e: Option<f64>,
    pub kernel: ProposalKernel,
    pub seed: u64,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            m: 0.05,
            big_m: 5,
            ell: 1,
            iterations: 50_000,
            sigma: None,
            grid_resolution: 32,
            delta: DeltaRule::Sensitivity,
            diam_e: None,
            kernel: ProposalKernel::Joint,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerResult {
    pub target: DiagramTuple,
    pub private: DiagramTuple,
    pub trace: MechanismTrace,
    /// Support cap of the sampler: the largest DTM value on the grid.
    pub cap: f64,
    /// Final bottleneck distance per dimension.
    pub distances: Vec<f64>,
}

/// Full pipeline on one dataset: DTM diagrams, then the mechanism.
pub fn run_walker(cloud: &PointCloud, config: &WalkerConfig) -> Result<WalkerResult> {
    let setup = setup_chain(cloud, config)?;
    let mut rng = stream_rng(config.seed ^ CHAIN_SALT, 0);
    let (private, trace) = privatize(&setup.target, &setup.privacy, setup.n, &setup.sampler, &mut rng)?;
    let distances = tuple_bottleneck_per_dim(&setup.target, &private, &BottleneckConfig::default())?;
    Ok(WalkerResult {
        target: setup.target,
        private,
        trace,
        cap: setup.sampler.cap,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circles_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = generate_two_circles(1000, &mut rng);
        assert_eq!(c.len(), 1000);
        for (i, p) in c.points().enumerate() {
            let (ctr, r) = CIRCLES[usize::from(i >= 500)];
            let res = ((p[0] - ctr[0]).powi(2) + (p[1] - ctr[1]).powi(2)).sqrt() - r;
            assert!(res.abs() <= 1e-12);
        }
        // centres recovered as per-circle means
        for (half, (ctr, _)) in CIRCLES.iter().enumerate() {
            let pts: Vec<&[f64]> = c.points().skip(half * 500).take(500).collect();
            for a in 0..2 {
                let mean = pts.iter().map(|p| p[a]).sum::<f64>() / 500.0;
                assert!((mean - ctr[a]).abs() < 4.0 * 1.5 / (500f64).sqrt());
            }
        }
        let o = with_midpoint_outlier(&c);
        assert_eq!(o.point(1000), &[0.0, 0.0]);
    }

    #[test]
    fn quantiles_and_slope() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 5.0);
        assert!((quantile(&v, 0.025) - 1.1).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.975), 7.0);
        let x = [0.0, 1.0, 2.0];
        assert!((ls_slope(&x, &[3.0, 1.0, -1.0]) + 2.0).abs() < 1e-12);
    }

    fn small_config(axis: SweepAxis, values: Vec<f64>, reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            axis,
            values,
            reps,
            n: 200,
            iterations: 50,
            grid_resolution: 16,
            seed: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = small_config(SweepAxis::Epsilon, vec![0.5, 5.0], 3);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 6);
        for r in &a.rows {
            assert_eq!(r.db.len(), 2);
            assert!((r.total - r.db.iter().sum::<f64>()).abs() < 1e-15);
        }
        assert!(sweep_svg(&a).starts_with("<svg"));
    }

    #[test]
    fn single_replicate_quantiles_collapse() {
        let cfg = small_config(SweepAxis::N, vec![100.0, 200.0], 1);
        let res = run_sweep(&cfg).unwrap();
        for s in &res.summary {
            assert_eq!(s.lower, s.median);
            assert_eq!(s.median, s.upper);
        }
    }

    #[test]
    fn sweep_validation() {
        assert!(run_sweep(&small_config(SweepAxis::Epsilon, vec![1.0, 0.5], 2)).is_err());
        assert!(run_sweep(&small_config(SweepAxis::N, vec![10.5], 2)).is_err());
        assert!(run_sweep(&small_config(SweepAxis::Epsilon, vec![1.0], 0)).is_err());
    }

    #[test]
    fn walker_stand_in_completes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cloud = corridor_walk(600, &mut rng);
        assert_eq!(cloud.dim(), 3);
        let cfg = WalkerConfig {
            iterations: 100,
            grid_resolution: 10,
            ..WalkerConfig::default()
        };
        let a = run_walker(&cloud, &cfg).unwrap();
        let b = run_walker(&cloud, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace.records.len(), 100);
        assert_eq!(a.distances.len(), 2);
    }
}
