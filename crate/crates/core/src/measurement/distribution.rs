use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability vector on the lattice `offset + i * spacing`.
///
/// `period_bins` is the number of bins after which the underlying state
/// repeats (the grid is periodic), used to fold the distribution before
/// spectral analysis. `None` means "treat the support as one period".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub spacing: f64,
    pub offset: f64,
    #[serde(default)]
    pub period_bins: Option<usize>,
    pub p: Vec<f64>,
}

impl Distribution {
    /// Normalizes nonnegative `weights` into a distribution.
    pub fn from_weights(spacing: f64, offset: f64, weights: Vec<f64>, period_bins: Option<usize>) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Mismatch(format!("support spacing {spacing} must be positive")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::IdenticallyZero("all weights are zero".into()));
        }
        let p = weights.into_iter().map(|w| w.max(0.0) / total).collect();
        Ok(Distribution { spacing, offset, period_bins, p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn support(&self, i: usize) -> f64 {
        self.offset + i as f64 * self.spacing
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(i, p)| p * self.support(i)).sum::<f64>() / self.total()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.p
            .iter()
            .enumerate()
            .map(|(i, p)| p * (self.support(i) - mu).powi(2))
            .sum::<f64>()
            / self.total()
    }

    /// Keeps every `factor`-th bin starting at bin `first`, then renormalizes:
    /// the restriction of a refined centroid lattice to a coarser sublattice.
    pub fn restrict(&self, factor: usize, first: usize) -> Result<Distribution> {
        let w: Vec<f64> = self.p.iter().skip(first).step_by(factor).copied().collect();
        Distribution::from_weights(
            self.spacing * factor as f64,
            self.support(first),
            w,
            self.period_bins.map(|p| p / factor.max(1)),
        )
    }

    /// Writes `# key=value` metadata lines, an `X,p` header and one row per bin.
    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# spacing={:.16e}", self.spacing);
        let _ = writeln!(s, "# offset={:.16e}", self.offset);
        if let Some(p) = self.period_bins {
            let _ = writeln!(s, "# period_bins={p}");
        }
        for (k, v) in meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        s.push_str("X,p\n");
        for (i, p) in self.p.iter().enumerate() {
            let _ = writeln!(s, "{:.16e},{:.16e}", self.support(i), p);
        }
        s
    }

    /// Parses the CSV layout written by [`Distribution::to_csv`].
    pub fn from_csv(text: &str) -> Result<Distribution> {
        let (mut spacing, mut offset, mut period) = (None, None, None);
        let mut p = Vec::new();
        let mut xs = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    match k.trim() {
                        "spacing" => spacing = v.trim().parse::<f64>().ok(),
                        "offset" => offset = v.trim().parse::<f64>().ok(),
                        "period_bins" => period = v.trim().parse::<usize>().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("X,") || line.starts_with("X_bin,") {
                continue;
            }
            let mut cols = line.split(',');
            let x: f64 = parse_col(cols.next(), line)?;
            let v: f64 = parse_col(cols.next(), line)?;
            xs.push(x);
            p.push(v);
        }
        if p.is_empty() {
            return Err(Error::Mismatch("no data rows".into()));
        }
        let spacing = match spacing {
            Some(s) => s,
            None if xs.len() >= 2 => xs[1] - xs[0],
            None => return Err(Error::Mismatch("cannot infer support spacing".into())),
        };
        let offset = offset.unwrap_or(xs[0]);
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() <= 1e-12 && p.iter().all(|&v| v >= 0.0) && spacing > 0.0 {
            // already normalized; keep the written values bit for bit
            return Ok(Distribution { spacing, offset, period_bins: period, p });
        }
        Distribution::from_weights(spacing, offset, p, period)
    }
}

fn parse_col(col: Option<&str>, line: &str) -> Result<f64> {
    col.and_then(|c| c.trim().parse::<f64>().ok())
        .ok_or_else(|| Error::Mismatch(format!("malformed row `{line}`")))
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale
}

/// Brings two distributions onto a common lattice.
///
/// Equal spacings are aligned by offset; when one spacing is an integer
/// multiple of the other, the finer distribution is restricted to the coarser
/// sublattice and renormalized.
pub fn align(a: &Distribution, b: &Distribution) -> Result<(Vec<f64>, Vec<f64>)> {
    let (fine, coarse, swapped) = if a.spacing <= b.spacing { (a, b, false) } else { (b, a, true) };
    let ratio = coarse.spacing / fine.spacing;
    let r = ratio.round();
    if r < 1.0 || !close(ratio, r, r) {
        return Err(Error::IncompatibleSupport(format!(
            "spacings {} and {} are not integer multiples",
            a.spacing, b.spacing
        )));
    }
    let r = r as usize;
    let fine = if r > 1 {
        let shift = (coarse.offset - fine.offset) / fine.spacing;
        let first = shift.rem_euclid(r as f64);
        let f = first.round();
        if !close(first, f, r as f64) && !close(first, r as f64, r as f64) {
            return Err(Error::IncompatibleSupport("coarse lattice is not a sublattice of the fine one".into()));
        }
        fine.restrict(r, (f as usize) % r)?
    } else {
        fine.clone()
    };
    let s = coarse.spacing;
    let shift = (fine.offset - coarse.offset) / s;
    let k = shift.round();
    if !close(shift, k, 1.0 + shift.abs()) {
        return Err(Error::IncompatibleSupport(format!(
            "offsets {} and {} are not on a common lattice",
            fine.offset, coarse.offset
        )));
    }
    let k = k as i64;
    // union range in coarse-lattice units
    let lo = k.min(0);
    let hi = (k + fine.len() as i64).max(coarse.len() as i64);
    let n = (hi - lo) as usize;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for (i, p) in fine.p.iter().enumerate() {
        u[(k + i as i64 - lo) as usize] = *p;
    }
    for (i, p) in coarse.p.iter().enumerate() {
        v[(i as i64 - lo) as usize] = *p;
    }
    Ok(if swapped { (v, u) } else { (u, v) })
}

/// Total variation distance `½ Σ|p - q|` after [`align`].
pub fn total_variation(a: &Distribution, b: &Distribution) -> Result<f64> {
    let (u, v) = align(a, b)?;
    Ok(0.5 * u.iter().zip(&v).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Largest pointwise difference after [`align`].
pub fn max_abs_deviation(a: &Distribution, b: &Distribution) -> Result<f64> {
    let (u, v) = align(a, b)?;
    Ok(u.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
