use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{detect, DetectorModel, EventRecord, PixelGeometry};
use super::positions::PositionSampler;
use super::rng::{stream, Domain};
use super::stats::{histogram_variance_with_ci, VarianceEstimate};
use crate::error::{Error, Result};
use crate::lattice::Grid;
use crate::measurement::Distribution;
use crate::states::{PhotonSuperposition, State};

/// Trials handled by one work item. Fixed so that chunk boundaries never
/// depend on the worker count.
const CHUNK: u64 = 2048;

/// Light source for repeated trials: a fixed-number state, or a photon-number
/// superposition from which `N` is drawn first (vacuum included).
#[derive(Debug, Clone)]
pub struct Source {
    grid: Grid,
    /// Cumulative `|C_N|²` and the sampler for that component; `None` is vacuum.
    branches: Vec<(f64, Option<PositionSampler>)>,
    max_photons: usize,
}

impl Source {
    pub fn new(state: &State) -> Result<Self> {
        Ok(Source {
            grid: *state.grid(),
            branches: vec![(1.0, Some(PositionSampler::new(state)?))],
            max_photons: state.photons(),
        })
    }

    pub fn superposition(sup: &PhotonSuperposition) -> Result<Self> {
        let mut acc = sup.vacuum_probability();
        let mut branches = vec![(acc, None)];
        let mut grid = None;
        let mut max_photons = 0;
        for (c, s) in sup.components() {
            acc += c.norm_sqr();
            grid = Some(*s.grid());
            max_photons = max_photons.max(s.photons());
            branches.push((acc, Some(PositionSampler::new(s)?)));
        }
        let grid = grid.ok_or_else(|| Error::pre("superposition has no photon-number components"))?;
        Ok(Source { grid, branches, max_photons })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn max_photons(&self) -> usize {
        self.max_photons
    }

    fn emit(&self, rng: &mut impl Rng, out: &mut Vec<usize>) -> Result<()> {
        let branch = if self.branches.len() == 1 {
            &self.branches[0].1
        } else {
            let u = rng.random::<f64>() * self.branches.last().unwrap().0;
            let i = self.branches.partition_point(|b| b.0 <= u).min(self.branches.len() - 1);
            &self.branches[i].1
        };
        match branch {
            Some(s) => s.sample(rng, out),
            None => {
                out.clear();
                Ok(())
            }
        }
    }
}

/// Centroid counts on the exact lattices `offset + a·S/m`, one stratum per
/// detected photon number `m`.
///
/// `Σ counts + discarded + rejected = trials`, where `discarded` counts the
/// zero-photon trials and `rejected` the saturated events dropped by a
/// detector that does not keep them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidHistogram {
    pub geometry: PixelGeometry,
    /// Counts indexed by the pixel sum `S = Σ count·pixel`.
    pub strata: BTreeMap<u32, Vec<u64>>,
    pub trials: u64,
    pub discarded: u64,
    pub rejected: u64,
    pub saturated: u64,
}

impl CentroidHistogram {
    pub fn new(geometry: PixelGeometry) -> Self {
        CentroidHistogram { geometry, strata: BTreeMap::new(), trials: 0, discarded: 0, rejected: 0, saturated: 0 }
    }

    pub fn record(&mut self, e: &EventRecord, keep_saturated: bool) {
        self.trials += 1;
        if e.saturated {
            self.saturated += 1;
            if !keep_saturated {
                self.rejected += 1;
                return;
            }
        }
        let m = e.m();
        if m == 0 {
            self.discarded += 1;
            return;
        }
        let bins = m as usize * (self.geometry.pixels - 1) + 1;
        let s = e.pixel_sum() as usize;
        let stratum = self.strata.entry(m).or_insert_with(|| vec![0; bins]);
        if s >= stratum.len() {
            // dark counts can push m past the source photon number only, never S past m(P-1)
            stratum.resize(s + 1, 0);
        }
        stratum[s] += 1;
    }

    /// Integer addition, so any merge order gives the same result.
    pub fn merge(&mut self, other: &CentroidHistogram) {
        self.trials += other.trials;
        self.discarded += other.discarded;
        self.rejected += other.rejected;
        self.saturated += other.saturated;
        for (m, counts) in &other.strata {
            let mine = self.strata.entry(*m).or_insert_with(|| vec![0; counts.len()]);
            if mine.len() < counts.len() {
                mine.resize(counts.len(), 0);
            }
            for (a, b) in mine.iter_mut().zip(counts) {
                *a += b;
            }
        }
    }

    pub fn retained(&self) -> u64 {
        self.strata.values().flatten().sum()
    }

    pub fn stratum_count(&self, m: u32) -> u64 {
        self.strata.get(&m).map_or(0, |c| c.iter().sum())
    }

    /// Normalized stratum `m` on its `a/m` lattice.
    pub fn stratum(&self, m: u32) -> Result<Distribution> {
        let counts = self.strata.get(&m).ok_or(Error::AllDiscarded)?;
        let g = &self.geometry;
        Distribution::from_weights(
            g.pitch / m as f64,
            g.offset,
            counts.iter().map(|&c| c as f64).collect(),
            Some(g.pixels),
        )
    }

    /// All retained events as distinct centroid values with counts, merged
    /// across strata by exact rational comparison of `S/m`.
    pub fn pooled(&self) -> Vec<(f64, u64)> {
        let mut keys: Vec<(u64, u64, u64)> = Vec::new();
        for (&m, counts) in &self.strata {
            for (s, &c) in counts.iter().enumerate() {
                if c > 0 {
                    let g = gcd(s as u64, m as u64);
                    keys.push((s as u64 / g, m as u64 / g, c));
                }
            }
        }
        keys.sort_by(|a, b| (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128)));
        let mut out: Vec<((u64, u64), u64)> = Vec::new();
        for (s, m, c) in keys {
            match out.last_mut() {
                Some(((ps, pm), pc)) if *ps == s && *pm == m => *pc += c,
                _ => out.push(((s, m), c)),
            }
        }
        out.into_iter().map(|((s, m), c)| (self.geometry.center(s as f64 / m as f64), c)).collect()
    }

    /// Pooled statistics over every `m ≥ 1` event.
    pub fn statistics(&self, seed: u64) -> Result<VarianceEstimate> {
        histogram_variance_with_ci(&self.pooled(), seed)
    }

    /// Statistics for a single detected-photon stratum.
    pub fn stratum_statistics(&self, m: u32, seed: u64) -> Result<VarianceEstimate> {
        let g = &self.geometry;
        let points: Vec<(f64, u64)> = self
            .strata
            .get(&m)
            .map(|c| c.iter().enumerate().map(|(s, &n)| (g.center(s as f64 / m as f64), n)).collect())
            .unwrap_or_default();
        histogram_variance_with_ci(&points, seed)
    }

    /// Pooled histogram as `X_bin,count` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# trials={}\n# discarded={}\n# rejected={}\n# saturated={}\nX_bin,count\n",
            self.trials, self.discarded, self.rejected, self.saturated
        );
        for (x, c) in self.pooled() {
            s.push_str(&format!("{x:.16e},{c}\n"));
        }
        s
    }

    /// Per-stratum histogram as `m,X_bin,count` CSV over each stratum's
    /// occupied range.
    pub fn to_stratified_csv(&self) -> String {
        let mut s = String::from("m,X_bin,count\n");
        let g = &self.geometry;
        for (&m, counts) in &self.strata {
            let first = counts.iter().position(|&c| c > 0);
            let last = counts.iter().rposition(|&c| c > 0);
            if let (Some(a), Some(b)) = (first, last) {
                for (i, c) in counts.iter().enumerate().take(b + 1).skip(a) {
                    s.push_str(&format!("{m},{:.16e},{c}\n", g.center(i as f64 / m as f64)));
                }
            }
        }
        s
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Histogram and optional newline-delimited event log of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub histogram: CentroidHistogram,
    pub events: Option<String>,
}

fn log_line(trial: u64, e: &EventRecord, geometry: &PixelGeometry) -> String {
    let x = match super::detector::centroid_of_event(e, geometry) {
        Some(x) => serde_json::json!(x),
        None => serde_json::json!("discarded"),
    };
    let line = serde_json::json!({
        "trial": trial,
        "m": e.m(),
        "hits": e.hits,
        "saturated": e.saturated,
        "X": x,
    });
    format!("{line}\n")
}

/// Runs `trials` independent detection events. Trial `t` draws from the
/// stream `(seed, t)`, and partial histograms merge by integer addition, so
/// the output is identical for any thread pool.
pub fn run_histogram_logged(
    source: &Source,
    det: &DetectorModel,
    trials: u64,
    seed: u64,
    log_events: bool,
) -> Result<RunOutput> {
    if trials == 0 {
        return Err(Error::pre("trials must be at least 1"));
    }
    det.validate(source.grid())?;
    let geometry = det.geometry(source.grid());
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Result<(CentroidHistogram, String)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut h = CentroidHistogram::new(geometry);
            let mut log = String::new();
            let mut positions = Vec::new();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = stream(seed, Domain::Trials, t);
                source.emit(&mut rng, &mut positions)?;
                let e = detect(&positions, det, &geometry, &mut rng);
                h.record(&e, det.keep_saturated);
                if log_events {
                    log.push_str(&log_line(t, &e, &geometry));
                }
            }
            Ok((h, log))
        })
        .collect();
    let mut histogram = CentroidHistogram::new(geometry);
    let mut events = log_events.then(String::new);
    for part in parts {
        let (h, log) = part?;
        histogram.merge(&h);
        if let Some(ev) = events.as_mut() {
            ev.push_str(&log);
        }
    }
    Ok(RunOutput { histogram, events })
}

pub fn run_histogram(source: &Source, det: &DetectorModel, trials: u64, seed: u64) -> Result<CentroidHistogram> {
    Ok(run_histogram_logged(source, det, trials, seed, false)?.histogram)
}

/// Displacement estimation: translate, detect, and report the mean centroid
/// (the estimate of `d`) with its per-trial variance.
#[derive(Debug, Clone)]
pub struct ShiftResult {
    pub d: f64,
    pub estimate: VarianceEstimate,
    pub histogram: CentroidHistogram,
}

pub fn shift_experiment(state: &State, d: f64, det: &DetectorModel, trials: u64, seed: u64) -> Result<ShiftResult> {
    let moved = state.clone().translate(d);
    let histogram = run_histogram(&Source::new(&moved)?, det, trials, seed)?;
    let estimate = histogram.statistics(seed)?;
    Ok(ShiftResult { d, estimate, histogram })
}
