//! Rebuilding the Weibull prior from subjective critical-point votes.
//!
//! Each image receives one vote per participant: the smallest component
//! count at which the reconstruction became indistinguishable from the
//! original. Votes outside `μ ± 3σ` are discarded, the rounded-up mean of
//! the rest is the image's critical point, and the cumulative energies at
//! those points across images are fitted with a two-parameter Weibull by
//! maximum likelihood.

use std::io::{Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;

use crate::critical_point::{analyze, WeibullParams};
use crate::error::{JndError, Result};
use crate::image_io::load_image;

/// All votes cast for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord {
    pub image_id: String,
    pub votes: Vec<u32>,
}

impl VoteRecord {
    pub fn new(image_id: impl Into<String>, votes: Vec<u32>, max: usize) -> Result<Self> {
        let image_id = image_id.into();
        if votes.is_empty() {
            return Err(JndError::Votes(format!("{image_id}: no votes")));
        }
        if let Some(v) = votes.iter().find(|&&v| v == 0 || v as usize > max) {
            return Err(JndError::Votes(format!(
                "{image_id}: vote {v} outside [1, {max}]"
            )));
        }
        Ok(VoteRecord { image_id, votes })
    }
}

/// One row of the per-image aggregation table.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationResult {
    pub image_id: String,
    pub mu: f64,
    pub sigma: f64,
    pub bounds: (f64, f64),
    pub mu_filtered: f64,
    pub critical: usize,
    pub cumulative_at_critical: Option<f64>,
}

/// Mean and sample (`n − 1`) standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn three_sigma_bounds(mu: f64, sigma: f64) -> (f64, f64) {
    (mu - 3.0 * sigma, mu + 3.0 * sigma)
}

/// Keeps votes inside `[μ − 3σ, μ + 3σ]` of the raw votes, in order.
pub fn sigma_filter(votes: &[u32]) -> Result<Vec<u32>> {
    if votes.len() < 2 {
        return Err(JndError::TooFewSamples {
            needed: 2,
            got: votes.len(),
        });
    }
    let as_f64: Vec<f64> = votes.iter().map(|&v| f64::from(v)).collect();
    let (mu, sigma) = mean_and_std(&as_f64);
    let (lo, hi) = three_sigma_bounds(mu, sigma);
    Ok(votes
        .iter()
        .zip(&as_f64)
        .filter(|(_, &v)| lo <= v && v <= hi)
        .map(|(&v, _)| v)
        .collect())
}

pub fn round_up_mean(mean: f64) -> usize {
    mean.ceil() as usize
}

/// Rounded-up mean of the retained votes.
pub fn aggregate_critical_point(filtered: &[u32]) -> Result<usize> {
    if filtered.is_empty() {
        return Err(JndError::Votes("no votes left after filtering".into()));
    }
    let mean = filtered.iter().map(|&v| f64::from(v)).sum::<f64>() / filtered.len() as f64;
    Ok(round_up_mean(mean))
}

pub fn aggregate(record: &VoteRecord) -> Result<AggregationResult> {
    let as_f64: Vec<f64> = record.votes.iter().map(|&v| f64::from(v)).collect();
    let (mu, sigma) = mean_and_std(&as_f64);
    let filtered = sigma_filter(&record.votes)?;
    let mu_filtered =
        filtered.iter().map(|&v| f64::from(v)).sum::<f64>() / filtered.len().max(1) as f64;
    Ok(AggregationResult {
        image_id: record.image_id.clone(),
        mu,
        sigma,
        bounds: three_sigma_bounds(mu, sigma),
        mu_filtered,
        critical: aggregate_critical_point(&filtered)?,
        cumulative_at_critical: None,
    })
}

/// Cumulative normalized energy at each image's critical point.
pub fn collect_energy_thresholds(entries: &[(PathBuf, usize)], block: usize) -> Result<Vec<f64>> {
    entries
        .par_iter()
        .map(|(path, critical)| {
            let wrap = |e: JndError| JndError::InImage {
                image_id: path.display().to_string(),
                source: Box::new(e),
            };
            let img = load_image(path).map_err(wrap)?;
            let analysis = analyze(&img, block).map_err(wrap)?;
            match &analysis.profile {
                Some(profile) => profile.cumulative_at(*critical).map_err(wrap),
                None => Err(wrap(JndError::DegenerateEnergy(0.0))),
            }
        })
        .collect()
}

pub fn weibull_log_likelihood(samples: &[f64], params: &WeibullParams) -> f64 {
    let WeibullParams { beta, eta } = *params;
    samples
        .iter()
        .map(|&x| {
            let z = (x / eta).ln();
            (beta / eta).ln() + (beta - 1.0) * z - (beta * z).exp()
        })
        .sum()
}

const FIT_REL_TOL: f64 = 1e-10;
const FIT_MAX_ITER: usize = 500;

/// Maximum-likelihood two-parameter Weibull fit.
///
/// The shape solves `Σ xᵝ ln x / Σ xᵝ − 1/β − mean(ln x) = 0` by Newton
/// steps kept inside a bisection bracket; the scale follows in closed form.
/// Powers are taken relative to the largest sample so shapes in the
/// hundreds do not underflow.
pub fn fit_weibull(samples: &[f64]) -> Result<WeibullParams> {
    if samples.len() < 10 {
        return Err(JndError::TooFewSamples {
            needed: 10,
            got: samples.len(),
        });
    }
    if let Some(x) = samples.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(JndError::InvalidParameter(format!(
            "Weibull samples must be positive, got {x}"
        )));
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    let max_log = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let centered: Vec<f64> = logs.iter().map(|l| l - max_log).collect();
    if centered.iter().all(|&c| c == 0.0) {
        return Err(JndError::InvalidParameter(
            "all samples equal: Weibull shape is unbounded".into(),
        ));
    }
    let mean_c = centered.iter().sum::<f64>() / centered.len() as f64;

    // g(β) and g'(β); shifting ln x by a constant leaves g unchanged
    let eval = |beta: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &c in &centered {
            let w = (beta * c).exp();
            s0 += w;
            s1 += w * c;
            s2 += w * c * c;
        }
        let m1 = s1 / s0;
        let g = m1 - 1.0 / beta - mean_c;
        let dg = s2 / s0 - m1 * m1 + 1.0 / (beta * beta);
        (g, dg)
    };

    let spread = {
        let n = centered.len() as f64;
        (centered.iter().map(|c| (c - mean_c).powi(2)).sum::<f64>() / n).sqrt()
    };
    let mut beta = (1.2825 / spread).max(1e-6);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut converged = false;
    for _ in 0..FIT_MAX_ITER {
        let (g, dg) = eval(beta);
        if g < 0.0 {
            lo = lo.max(beta);
        } else {
            hi = hi.min(beta);
        }
        let mut next = beta - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * beta.max(lo)
            };
        }
        if (next - beta).abs() <= FIT_REL_TOL * beta {
            beta = next;
            converged = true;
            break;
        }
        beta = next;
    }
    if !converged {
        return Err(JndError::InvalidParameter(
            "Weibull shape equation did not converge".into(),
        ));
    }
    let mean_w = centered.iter().map(|&c| (beta * c).exp()).sum::<f64>() / centered.len() as f64;
    let eta = (max_log + mean_w.ln() / beta).exp();
    WeibullParams::new(beta, eta)
}

/// Parses vote CSV in wide (`image_id,vote_1,..,vote_P`) or long
/// (`image_id,participant,vote`) form. Records keep first-seen order.
pub fn read_votes<R: Read>(reader: R, max: usize) -> Result<Vec<VoteRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| JndError::Votes(e.to_string()))?
        .clone();
    let long_form = headers.len() == 3
        && headers[1].eq_ignore_ascii_case("participant")
        && headers[2].eq_ignore_ascii_case("vote");

    let mut order: Vec<String> = Vec::new();
    let mut votes: std::collections::HashMap<String, Vec<u32>> = Default::default();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| JndError::Votes(e.to_string()))?;
        let id = row
            .get(0)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| JndError::Votes(format!("row {}: missing image_id", line + 2)))?
            .to_string();
        let cells: Vec<&str> = if long_form {
            row.get(2).into_iter().collect()
        } else {
            row.iter().skip(1).filter(|c| !c.is_empty()).collect()
        };
        let parsed = cells
            .iter()
            .map(|c| {
                c.parse::<u32>()
                    .map_err(|_| JndError::Votes(format!("row {}: bad vote {c:?}", line + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        if !votes.contains_key(&id) {
            order.push(id.clone());
        }
        votes.entry(id).or_default().extend(parsed);
    }
    order
        .into_iter()
        .map(|id| {
            let v = votes.remove(&id).unwrap_or_default();
            VoteRecord::new(id, v, max)
        })
        .collect()
}

pub fn write_aggregation_table<W: Write>(writer: W, rows: &[AggregationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| JndError::Votes(e.to_string());
    w.write_record([
        "image_id",
        "mu",
        "sigma",
        "lower",
        "upper",
        "mu_filtered",
        "L",
        "P_L",
    ])
    .map_err(to_err)?;
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            format!("{:.4}", r.mu),
            format!("{:.4}", r.sigma),
            format!("{:.4}", r.bounds.0),
            format!("{:.4}", r.bounds.1),
            format!("{:.4}", r.mu_filtered),
            r.critical.to_string(),
            r.cumulative_at_critical
                .map(|p| format!("{p:.8}"))
                .unwrap_or_default(),
        ])
        .map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| JndError::Votes(format!("cannot write table: {e}")))
}
