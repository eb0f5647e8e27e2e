//! Subjective-score screening, metric performance statistics and content
//! complexity (SI/TI).

use std::collections::HashMap;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::StereoSequence;
use crate::signal::sobel_gradient;

/// Item × subject score matrix on a `[0, 100]` scale; gaps allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectiveTable {
    items: Vec<String>,
    subjects: Vec<String>,
    scores: Vec<Vec<Option<f64>>>,
}

#[derive(Deserialize)]
struct ScoreRecord {
    item_id: String,
    subject_id: String,
    score: f64,
}

impl SubjectiveTable {
    pub fn new(items: Vec<String>, subjects: Vec<String>, scores: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if scores.len() != items.len() || scores.iter().any(|row| row.len() != subjects.len()) {
            return Err(Error::DimensionMismatch(format!(
                "score matrix does not match {} items x {} subjects",
                items.len(),
                subjects.len()
            )));
        }
        if let Some(bad) = scores.iter().flatten().flatten().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(Error::Range(format!("subjective score {bad} outside [0, 100]")));
        }
        Ok(SubjectiveTable { items, subjects, scores })
    }

    /// Builds a table from `(item, subject, score)` triples, keeping
    /// first-appearance order. A repeated pair keeps the last score.
    pub fn from_records<I, S>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        let mut items = Vec::new();
        let mut subjects = Vec::new();
        let mut item_ix: HashMap<String, usize> = HashMap::new();
        let mut subj_ix: HashMap<String, usize> = HashMap::new();
        let mut cells = Vec::new();
        for (item, subject, score) in records {
            let (item, subject) = (item.into(), subject.into());
            let i = *item_ix.entry(item.clone()).or_insert_with(|| {
                items.push(item);
                items.len() - 1
            });
            let j = *subj_ix.entry(subject.clone()).or_insert_with(|| {
                subjects.push(subject);
                subjects.len() - 1
            });
            cells.push((i, j, score));
        }
        let mut scores = vec![vec![None; subjects.len()]; items.len()];
        for (i, j, v) in cells {
            scores[i][j] = Some(v);
        }
        SubjectiveTable::new(items, subjects, scores)
    }

    /// Reads `item_id,subject_id,score` rows.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut records = Vec::new();
        for row in reader.deserialize::<ScoreRecord>() {
            let r = row?;
            records.push((r.item_id, r.subject_id, r.score));
        }
        SubjectiveTable::from_records(records)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn score(&self, item: usize, subject: usize) -> Option<f64> {
        self.scores[item][subject]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MosTable {
    pub items: Vec<String>,
    pub mos: Vec<f64>,
    /// Sample standard deviation over the retained subjects.
    pub std: Vec<f64>,
    pub retained: Vec<usize>,
    pub rejected_subjects: Vec<String>,
    /// False when the table was too small to screen.
    pub screened: bool,
    /// Every subject failed screening; MOS falls back to all subjects.
    pub screening_degenerate: bool,
}

impl MosTable {
    pub fn index_of(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item)
    }
}

/// Distribution summary of one item's scores from the other subjects.
struct ItemBand {
    mean: f64,
    bound: f64,
}

fn item_band(values: &[f64]) -> Option<ItemBand> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n as f64;
    let sd = (m2 * n as f64 / (n - 1) as f64).sqrt();
    let kurtosis = if m2 > 0.0 { m4 / (m2 * m2) } else { 3.0 };
    let k = if (2.0..=4.0).contains(&kurtosis) { 2.0 } else { 20f64.sqrt() };
    Some(ItemBand { mean, bound: k * sd })
}

/// Subject screening after the BT.500 outlier rule, then MOS per item.
///
/// Each subject's score on an item is compared with the band formed by the
/// remaining subjects. A subject is rejected when more than 5 % of their
/// scores fall outside and the excursions are either two-sided
/// (`|P−Q|/(P+Q) < 0.3`) or affect at least half the items.
pub fn screen_and_mos(table: &SubjectiveTable) -> Result<MosTable> {
    let (ni, ns) = (table.items.len(), table.subjects.len());
    if ni == 0 || ns == 0 {
        return Err(Error::EmptyReport);
    }
    let screened = ns >= 3 && ni >= 2;
    let mut rejected = vec![false; ns];
    if screened {
        for (j, flag) in rejected.iter_mut().enumerate() {
            let (mut p, mut q, mut rated) = (0usize, 0usize, 0usize);
            for i in 0..ni {
                let Some(x) = table.scores[i][j] else { continue };
                let others: Vec<f64> = (0..ns).filter(|&k| k != j).filter_map(|k| table.scores[i][k]).collect();
                let Some(band) = item_band(&others) else { continue };
                rated += 1;
                if x > band.mean + band.bound {
                    p += 1;
                } else if x < band.mean - band.bound {
                    q += 1;
                }
            }
            if rated == 0 || p + q == 0 {
                continue;
            }
            let frac = (p + q) as f64 / rated as f64;
            let skew = p.abs_diff(q) as f64 / (p + q) as f64;
            *flag = frac > 0.05 && (skew < 0.3 || frac >= 0.5);
        }
    }
    let degenerate = rejected.iter().all(|&r| r);
    if degenerate {
        warn!("every subject failed screening; using unscreened scores");
        rejected.iter_mut().for_each(|r| *r = false);
    }

    let mut mos = Vec::with_capacity(ni);
    let mut std = Vec::with_capacity(ni);
    let mut retained = Vec::with_capacity(ni);
    for (i, row) in table.scores.iter().enumerate() {
        let mut vals: Vec<f64> = row.iter().zip(&rejected).filter(|(_, r)| !**r).filter_map(|(v, _)| *v).collect();
        if vals.is_empty() {
            vals = row.iter().flatten().copied().collect();
        }
        if vals.is_empty() {
            return Err(Error::Param(format!("item {} has no scores", table.items[i])));
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let s = if vals.len() > 1 {
            (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        mos.push(m);
        std.push(s);
        retained.push(vals.len());
    }
    Ok(MosTable {
        items: table.items.clone(),
        mos,
        std,
        retained,
        rejected_subjects: table
            .subjects
            .iter()
            .zip(&rejected)
            .filter(|(_, r)| **r)
            .map(|(s, _)| s.clone())
            .collect(),
        screened,
        screening_degenerate: degenerate,
    })
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("series of {} and {} values", a.len(), b.len())));
    }
    Ok(())
}

pub fn pearson_cc(x: &[f64], y: &[f64]) -> Result<f64> {
    same_len(x, y)?;
    if x.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!("{} points, need 3", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman_cc(x: &[f64], y: &[f64]) -> Result<f64> {
    same_len(x, y)?;
    pearson_cc(&midranks(x), &midranks(y))
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    if a.is_empty() {
        return Err(Error::EmptyReport);
    }
    Ok((a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt())
}

/// Fraction of items whose prediction error exceeds twice the item's
/// subject deviation; items with zero deviation use twice the RMSE.
pub fn outlier_ratio(objective: &[f64], mos: &[f64], per_item_std: &[f64]) -> Result<f64> {
    same_len(objective, mos)?;
    same_len(objective, per_item_std)?;
    let fallback = 2.0 * rmse(objective, mos)?;
    let outliers = objective
        .iter()
        .zip(mos)
        .zip(per_item_std)
        .filter(|((o, m), s)| {
            let band = if **s > 0.0 { 2.0 * **s } else { fallback };
            (*o - *m).abs() > band
        })
        .count();
    Ok(outliers as f64 / objective.len() as f64)
}

/// `b1 + b2 / (1 + exp(−b4 (x − b3)))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub params: [f64; 4],
    pub converged: bool,
    pub evaluations: usize,
}

impl LogisticFit {
    pub fn apply(&self, x: f64) -> f64 {
        let [b1, b2, b3, b4] = self.params;
        b1 + b2 / (1.0 + (-b4 * (x - b3)).exp())
    }

    pub fn map(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }
}

const MAX_EVALUATIONS: usize = 2000;

/// Least-squares logistic fit by Nelder–Mead simplex descent. Starts from
/// the MOS range, the median objective value and the end-to-end slope.
pub fn logistic_fit(objective: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    same_len(objective, mos)?;
    if objective.len() < 4 {
        return Err(Error::Param("logistic fit needs at least 4 points".into()));
    }
    let lo = mos.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sorted: Vec<usize> = (0..objective.len()).collect();
    sorted.sort_by(|&a, &b| objective[a].total_cmp(&objective[b]));
    let (first, last) = (sorted[0], sorted[sorted.len() - 1]);
    let span = objective[last] - objective[first];
    if hi - lo == 0.0 || span == 0.0 {
        return Ok(LogisticFit {
            params: [mos.iter().sum::<f64>() / mos.len() as f64, 0.0, 0.0, 0.0],
            converged: false,
            evaluations: 0,
        });
    }
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        objective[sorted[mid]]
    } else {
        0.5 * (objective[sorted[mid - 1]] + objective[sorted[mid]])
    };
    let slope = (mos[last] - mos[first]) / span;
    let b4 = if slope == 0.0 { 4.0 / span } else { 4.0 * slope.abs() / (hi - lo) };
    let (b1, b2) = if slope >= 0.0 { (lo, hi - lo) } else { (hi, lo - hi) };
    let start = [b1, b2, median, b4];
    let scale = [0.1 * (hi - lo), 0.1 * (hi - lo), 0.1 * span, 0.5 * b4];
    let sse = |p: &[f64; 4]| -> f64 {
        let fit = LogisticFit {
            params: *p,
            converged: true,
            evaluations: 0,
        };
        objective.iter().zip(mos).map(|(&x, &m)| (fit.apply(x) - m).powi(2)).sum()
    };
    let tol = 1e-12 * mos.iter().map(|m| m * m).sum::<f64>().max(1.0);
    let (params, evaluations, converged) = nelder_mead(sse, start, scale, tol, MAX_EVALUATIONS);
    Ok(LogisticFit {
        params,
        converged,
        evaluations,
    })
}

/// Minimizes `f` from `start`; stops when the simplex values agree within
/// `tol` or after `max_evals` evaluations.
fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(
    f: F,
    start: [f64; 4],
    scale: [f64; 4],
    tol: f64,
    max_evals: usize,
) -> ([f64; 4], usize, bool) {
    const N: usize = 4;
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, f(&start)));
    for i in 0..N {
        let mut p = start;
        p[i] += if scale[i] != 0.0 { scale[i] } else { 1e-3 };
        simplex.push((p, f(&p)));
    }
    let mut evals = N + 1;
    let lerp = |a: &[f64; N], b: &[f64; N], t: f64| -> [f64; N] { std::array::from_fn(|k| a[k] + t * (b[k] - a[k])) };
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[N].1 - simplex[0].1 <= tol {
            return (simplex[0].0, evals, true);
        }
        if evals >= max_evals {
            return (simplex[0].0, evals, false);
        }
        let centroid: [f64; N] = std::array::from_fn(|k| simplex[..N].iter().map(|s| s.0[k]).sum::<f64>() / N as f64);
        let worst = simplex[N].0;
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
        } else {
            let (target, ft) = if fr < simplex[N].1 { (reflected, fr) } else { (worst, simplex[N].1) };
            let contracted = lerp(&centroid, &target, 0.5);
            let fc = f(&contracted);
            evals += 1;
            if fc < ft {
                simplex[N] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    s.0 = lerp(&best, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
                evals += N;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    #[default]
    Raw,
    Logistic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub pcc: f64,
    pub scc: f64,
    pub rmse: f64,
    pub outlier_ratio: f64,
    pub n: usize,
    pub mapping: Mapping,
    pub logistic: Option<LogisticFit>,
}

/// Correlation, error and consistency of objective scores against MOS.
/// With `Mapping::Logistic` a non-converged fit falls back to raw scores
/// and is reported with `converged = false`.
pub fn evaluate(objective: &[f64], mos: &[f64], per_item_std: &[f64], mapping: Mapping) -> Result<PerfReport> {
    same_len(objective, mos)?;
    let (mapped, logistic) = match mapping {
        Mapping::Raw => (objective.to_vec(), None),
        Mapping::Logistic => {
            let fit = logistic_fit(objective, mos)?;
            let mapped = if fit.converged { fit.map(objective) } else { objective.to_vec() };
            (mapped, Some(fit))
        }
    };
    Ok(PerfReport {
        pcc: pearson_cc(&mapped, mos)?,
        scc: spearman_cc(objective, mos)?,
        rmse: rmse(&mapped, mos)?,
        outlier_ratio: outlier_ratio(&mapped, mos, per_item_std)?,
        n: objective.len(),
        mapping,
        logistic,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfRow {
    pub metric: String,
    pub saliency_mode: String,
    pub distortion: String,
    pub perf: PerfReport,
}

/// Flat row with the fixed column order of the performance tables.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct PerfRecord {
    metric: String,
    saliency_mode: String,
    distortion: String,
    pcc: String,
    scc: String,
    rmse: String,
    or: String,
    n: usize,
}

impl From<&PerfRow> for PerfRecord {
    fn from(r: &PerfRow) -> Self {
        let f = |v: f64| format!("{v:.4}");
        PerfRecord {
            metric: r.metric.clone(),
            saliency_mode: r.saliency_mode.clone(),
            distortion: r.distortion.clone(),
            pcc: f(r.perf.pcc),
            scc: f(r.perf.scc),
            rmse: f(r.perf.rmse),
            or: f(r.perf.outlier_ratio),
            n: r.perf.n,
        }
    }
}

pub const PERF_COLUMNS: [&str; 8] = ["metric", "saliency_mode", "distortion", "pcc", "scc", "rmse", "or", "n"];

pub fn perf_csv(rows: &[PerfRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(PerfRecord::from(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn perf_json(rows: &[PerfRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let values: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let rec = PerfRecord::from(r);
            let num = |s: &str| serde_json::Value::from(s.parse::<f64>().expect("formatted number"));
            serde_json::json!({
                "metric": rec.metric,
                "saliency_mode": rec.saliency_mode,
                "distortion": rec.distortion,
                "pcc": num(&rec.pcc),
                "scc": num(&rec.scc),
                "rmse": num(&rec.rmse),
                "or": num(&rec.or),
                "n": rec.n,
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&values)? + "\n")
}

/// Writes CSV, or JSON when the path ends in `.json`.
pub fn emit_report(rows: &[PerfRow], path: &Path) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "json") {
        perf_json(rows)?
    } else {
        perf_csv(rows)?
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiTi {
    pub si: f64,
    pub ti: f64,
    /// False for single-frame sequences, where `ti` is reported as 0.
    pub ti_defined: bool,
}

/// Spatial and temporal information of the left view: maxima over frames
/// of the deviation of the Sobel magnitude and of the frame difference.
pub fn si_ti(seq: &StereoSequence) -> Result<SiTi> {
    let frames = seq.frames();
    let mut si = 0.0f64;
    for f in frames {
        si = si.max(sobel_gradient(&f.left.luma)?.magnitude.std_dev());
    }
    let mut ti = 0.0f64;
    for pair in frames.windows(2) {
        ti = ti.max(pair[1].left.luma.zip_map(&pair[0].left.luma, |a, b| a - b).std_dev());
    }
    Ok(SiTi {
        si,
        ti,
        ti_defined: frames.len() > 1,
    })
}
