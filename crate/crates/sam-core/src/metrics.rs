//! Saliency evaluation metrics and the composite training loss.
//!
//! Location-based metrics (NSS, AUC variants) score the prediction at binary
//! fixation cells; distribution-based metrics (CC, KL, SIM, EMD) compare the
//! prediction against a continuous groundtruth density. NSS and CC use
//! population statistics; KL regularizes with a fixed epsilon and always
//! normalizes both operands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Result, SamError};
use crate::tensor::Tensor;
use crate::transport::min_cost_transport;

/// Epsilon of the KL divergence.
pub const KL_EPS: f64 = 1e-7;

/// Largest EMD grid solved directly; bigger maps get downsampled first.
pub const EMD_MAX_CELLS: usize = 4096;

/// Continuous non-negative saliency/groundtruth map.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DensityMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(SamError::Shape(format!(
                "density map {height}x{width} with {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(SamError::Degenerate(format!(
                "density map values must be finite and non-negative, found {v}"
            )));
        }
        Ok(DensityMap {
            height,
            width,
            values,
        })
    }

    /// Accepts a rank-2 `H x W` tensor or a single-channel `1 x H x W` one.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match t.shape() {
            [h, w] => DensityMap::new(*h, *w, t.data().to_vec()),
            [1, h, w] => DensityMap::new(*h, *w, t.data().to_vec()),
            other => Err(SamError::Shape(format!(
                "expected H x W or 1 x H x W map, got {other:?}"
            ))),
        }
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.height, self.width], self.values.clone()).expect("validated map")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rescale to sum 1. Errors on an all-zero map.
    pub fn normalized(&self) -> Result<DensityMap> {
        let s = self.sum();
        if s <= 0.0 {
            return Err(SamError::Degenerate("cannot normalize a zero-sum map".into()));
        }
        DensityMap::new(
            self.height,
            self.width,
            self.values.iter().map(|v| v / s).collect(),
        )
    }

    fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }
}

/// Binary fixation locations.
#[derive(Clone, Debug, PartialEq)]
pub struct FixationMap {
    height: usize,
    width: usize,
    fixated: Vec<bool>,
}

impl FixationMap {
    pub fn new(height: usize, width: usize, fixated: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || fixated.len() != height * width {
            return Err(SamError::Shape(format!(
                "fixation map {height}x{width} with {} cells",
                fixated.len()
            )));
        }
        Ok(FixationMap {
            height,
            width,
            fixated,
        })
    }

    /// Any strictly positive cell counts as fixated.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let (h, w, data) = match t.shape() {
            [h, w] => (*h, *w, t.data()),
            [1, h, w] => (*h, *w, t.data()),
            other => {
                return Err(SamError::Shape(format!(
                    "expected H x W or 1 x H x W map, got {other:?}"
                )))
            }
        };
        FixationMap::new(h, w, data.iter().map(|&v| v > 0.0).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn fixated(&self) -> &[bool] {
        &self.fixated
    }

    pub fn count(&self) -> usize {
        self.fixated.iter().filter(|&&b| b).count()
    }

    /// Linear indices of fixated cells.
    pub fn indices(&self) -> Vec<usize> {
        self.fixated
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

fn check_same_extent(h1: usize, w1: usize, h2: usize, w2: usize) -> Result<()> {
    if (h1, w1) != (h2, w2) {
        return Err(SamError::Shape(format!(
            "map extents differ: {h1}x{w1} vs {h2}x{w2}"
        )));
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
fn pop_std(values: &[f64], mu: f64) -> f64 {
    (values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Normalized scanpath saliency: mean of the standardized prediction at
/// fixated cells (population statistics).
pub fn nss(pred: &DensityMap, fix: &FixationMap) -> Result<f64> {
    check_same_extent(pred.height, pred.width, fix.height, fix.width)?;
    if fix.count() == 0 {
        return Err(SamError::Degenerate("no fixations".into()));
    }
    if pred.is_constant() {
        return Err(SamError::Degenerate(
            "constant prediction has zero variance; NSS undefined".into(),
        ));
    }
    let mu = mean(&pred.values);
    let sd = pop_std(&pred.values, mu);
    let sum: f64 = fix
        .indices()
        .iter()
        .map(|&i| (pred.values[i] - mu) / sd)
        .sum();
    Ok(sum / fix.count() as f64)
}

/// Pearson's correlation coefficient between the two maps
/// (population statistics).
pub fn cc(pred: &DensityMap, gt: &DensityMap) -> Result<f64> {
    check_same_extent(pred.height, pred.width, gt.height, gt.width)?;
    if pred.is_constant() || gt.is_constant() {
        return Err(SamError::Degenerate(
            "constant map has zero variance; CC undefined".into(),
        ));
    }
    let mp = mean(&pred.values);
    let mg = mean(&gt.values);
    let n = pred.values.len() as f64;
    let cov: f64 = pred
        .values
        .iter()
        .zip(&gt.values)
        .map(|(p, g)| (p - mp) * (g - mg))
        .sum::<f64>()
        / n;
    Ok(cov / (pop_std(&pred.values, mp) * pop_std(&gt.values, mg)))
}

/// Regularized KL divergence of the groundtruth from the prediction:
/// `sum gt * log(gt / (pred + eps) + eps)`. Both operands are normalized to
/// sum 1 internally.
pub fn kl_div(pred: &DensityMap, gt: &DensityMap) -> Result<f64> {
    check_same_extent(pred.height, pred.width, gt.height, gt.width)?;
    let p = pred.normalized()?;
    let g = gt.normalized()?;
    Ok(g.values
        .iter()
        .zip(&p.values)
        .map(|(gv, pv)| {
            if *gv == 0.0 {
                0.0
            } else {
                gv * (gv / (pv + KL_EPS) + KL_EPS).ln()
            }
        })
        .sum())
}

/// Loss combination weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LossWeights {
    /// NSS, CC and KL weights used throughout training.
    pub const PAPER: LossWeights = LossWeights {
        alpha: -1.0,
        beta: -2.0,
        gamma: 10.0,
    };
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights::PAPER
    }
}

/// `alpha * NSS + beta * CC + gamma * KL`.
pub fn combined_loss(
    pred: &DensityMap,
    gt_den: &DensityMap,
    gt_fix: &FixationMap,
    w: &LossWeights,
) -> Result<f64> {
    let n = nss(pred, gt_fix)?;
    let c = cc(pred, gt_den)?;
    let k = kl_div(pred, gt_den)?;
    Ok(w.alpha * n + w.beta * c + w.gamma * k)
}

/// Trapezoidal ROC area for positive/negative score samples.
///
/// Thresholds sweep the distinct positive scores (descending) plus sentinels
/// at both ends; at threshold `t` a cell with score `>= t` is predicted
/// positive. A constant prediction therefore scores exactly 0.5.
pub(crate) fn roc_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = pos.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();

    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    let mut points = vec![(0.0f64, 0.0f64)];
    for &t in &thresholds {
        let tp = pos.iter().filter(|&&v| v >= t).count() as f64;
        let fp = neg.iter().filter(|&&v| v >= t).count() as f64;
        points.push((fp / nn, tp / np));
    }
    points.push((1.0, 1.0));

    let mut area = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    area
}

/// AUC-Judd: fixated cells are positives, every other cell a negative.
pub fn auc_judd(pred: &DensityMap, fix: &FixationMap) -> Result<f64> {
    check_same_extent(pred.height, pred.width, fix.height, fix.width)?;
    let pos: Vec<f64> = fix.indices().iter().map(|&i| pred.values[i]).collect();
    let neg: Vec<f64> = pred
        .values
        .iter()
        .zip(&fix.fixated)
        .filter_map(|(&v, &f)| (!f).then_some(v))
        .collect();
    if pos.is_empty() {
        return Err(SamError::Degenerate("no fixations".into()));
    }
    if neg.is_empty() {
        return Err(SamError::Degenerate("every cell is fixated; AUC undefined".into()));
    }
    Ok(roc_auc(&pos, &neg))
}

/// Shuffled AUC: negatives are sampled (seeded, uniform, positive-count
/// matched) from the union of other images' fixation cells, excluding this
/// image's own fixated cells. Sampling is without replacement whenever the
/// pool is large enough.
pub fn sauc(
    pred: &DensityMap,
    fix: &FixationMap,
    shuffle_negatives: &[FixationMap],
    seed: u64,
) -> Result<f64> {
    check_same_extent(pred.height, pred.width, fix.height, fix.width)?;
    let pos: Vec<f64> = fix.indices().iter().map(|&i| pred.values[i]).collect();
    if pos.is_empty() {
        return Err(SamError::Degenerate("no fixations".into()));
    }
    let mut in_pool = vec![false; pred.values.len()];
    for other in shuffle_negatives {
        check_same_extent(pred.height, pred.width, other.height, other.width)?;
        for (cell, &f) in in_pool.iter_mut().zip(&other.fixated) {
            *cell |= f;
        }
    }
    for (cell, &own) in in_pool.iter_mut().zip(&fix.fixated) {
        *cell &= !own;
    }
    let pool: Vec<usize> = in_pool
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    if pool.is_empty() {
        return Err(SamError::Degenerate(
            "shuffled-AUC negative pool is empty after excluding own fixations".into(),
        ));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut neg = Vec::with_capacity(pos.len());
    if pool.len() >= pos.len() {
        // partial Fisher-Yates: uniform without replacement
        let mut idx: Vec<usize> = pool.clone();
        for k in 0..pos.len() {
            let swap = rng.gen_range(k..idx.len());
            idx.swap(k, swap);
            neg.push(pred.values[idx[k]]);
        }
    } else {
        for _ in 0..pos.len() {
            neg.push(pred.values[pool[rng.gen_range(0..pool.len())]]);
        }
    }
    Ok(roc_auc(&pos, &neg))
}

/// Histogram intersection of the two normalized maps.
pub fn sim(pred: &DensityMap, gt: &DensityMap) -> Result<f64> {
    check_same_extent(pred.height, pred.width, gt.height, gt.width)?;
    let p = pred.normalized()?;
    let g = gt.normalized()?;
    Ok(p.values.iter().zip(&g.values).map(|(a, b)| a.min(*b)).sum())
}

/// Earth mover's distance under Euclidean ground distance in pixel units,
/// solved exactly as a transportation program. Grids larger than `max_cells`
/// are bilinearly downsampled first (distances stay in original pixel
/// units); the boolean reports whether that happened.
pub fn emd_guarded(pred: &DensityMap, gt: &DensityMap, max_cells: usize) -> Result<(f64, bool)> {
    check_same_extent(pred.height, pred.width, gt.height, gt.width)?;
    if max_cells == 0 {
        return Err(SamError::Config("max_cells must be positive".into()));
    }
    let cells = pred.height * pred.width;
    let (p, g, sy, sx, downsampled) = if cells > max_cells {
        let scale = (max_cells as f64 / cells as f64).sqrt();
        let mut nh = ((pred.height as f64 * scale).floor() as usize).max(1);
        let mut nw = ((pred.width as f64 * scale).floor() as usize).max(1);
        while nh * nw > max_cells {
            if nh >= nw {
                nh -= 1;
            } else {
                nw -= 1;
            }
        }
        let down = |m: &DensityMap| -> Result<DensityMap> {
            let t = Tensor::new(vec![1, m.height, m.width], m.values.clone())?;
            let r = crate::tensor::bilinear_resize(&t, nh, nw)?;
            // bilinear output of a non-negative map stays non-negative
            DensityMap::from_tensor(&r)
        };
        (
            down(pred)?,
            down(gt)?,
            pred.height as f64 / nh as f64,
            pred.width as f64 / nw as f64,
            true,
        )
    } else {
        (pred.clone(), gt.clone(), 1.0, 1.0, false)
    };

    let p = p.normalized()?;
    let g = g.normalized()?;
    let w = p.width;

    let sources: Vec<(usize, f64)> = p
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i, v))
        .collect();
    let sinks: Vec<(usize, f64)> = g
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i, v))
        .collect();
    let supply: Vec<f64> = sources.iter().map(|&(_, v)| v).collect();
    let mut demand: Vec<f64> = sinks.iter().map(|&(_, v)| v).collect();
    // remove rounding drift so the problem is exactly balanced
    let ratio = supply.iter().sum::<f64>() / demand.iter().sum::<f64>();
    for d in demand.iter_mut() {
        *d *= ratio;
    }

    let dist = |a: usize, b: usize| {
        let (ia, ja) = (sources[a].0 / w, sources[a].0 % w);
        let (ib, jb) = (sinks[b].0 / w, sinks[b].0 % w);
        // cell centers mapped back to original pixel coordinates
        let dy = (ia as f64 - ib as f64) * sy;
        let dx = (ja as f64 - jb as f64) * sx;
        (dy * dy + dx * dx).sqrt()
    };
    let cost = min_cost_transport(&supply, &demand, dist)?;
    Ok((cost, downsampled))
}

/// [`emd_guarded`] with the downsampling flag dropped.
pub fn emd(pred: &DensityMap, gt: &DensityMap, max_cells: usize) -> Result<f64> {
    emd_guarded(pred, gt, max_cells).map(|(v, _)| v)
}

/// Metric identifiers used in reports and on the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Nss,
    Cc,
    Kl,
    AucJudd,
    Sauc,
    Sim,
    Emd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Nss,
        MetricKind::Cc,
        MetricKind::Kl,
        MetricKind::AucJudd,
        MetricKind::Sauc,
        MetricKind::Sim,
        MetricKind::Emd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Nss => "nss",
            MetricKind::Cc => "cc",
            MetricKind::Kl => "kl",
            MetricKind::AucJudd => "auc_judd",
            MetricKind::Sauc => "sauc",
            MetricKind::Sim => "sim",
            MetricKind::Emd => "emd",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        MetricKind::ALL
            .iter()
            .find(|m| m.name() == name)
            .copied()
            .ok_or_else(|| SamError::Config(format!("unknown metric {name:?}")))
    }
}

/// Report metadata recording the conventions behind the numbers.
#[derive(Clone, Debug, Serialize)]
pub struct ReportMeta {
    /// KL always normalizes both operands to sum 1.
    pub kl_normalizes_operands: bool,
    /// Negative-sampling protocol for the shuffled AUC.
    pub sauc_protocol: &'static str,
    pub sauc_seed: Option<u64>,
    /// Whether any EMD evaluation ran on a downsampled grid.
    pub emd_downsampled: bool,
    pub emd_ground_distance: &'static str,
    /// Preprocessing padding is cropped out before the final resize.
    pub padding_cropped_before_resize: bool,
}

impl Default for ReportMeta {
    fn default() -> Self {
        ReportMeta {
            kl_normalizes_operands: true,
            sauc_protocol: "uniform from other-image fixations, positive-count matched, seeded",
            sauc_seed: None,
            emd_downsampled: false,
            emd_ground_distance: "euclidean, pixel units",
            padding_cropped_before_resize: true,
        }
    }
}

/// Per-image metric values plus aggregate means.
#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub metrics: Vec<MetricKind>,
    pub rows: Vec<ReportRow>,
    pub means: Vec<f64>,
    pub meta: ReportMeta,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub id: String,
    pub values: Vec<f64>,
}

impl MetricReport {
    /// Assemble a report; aggregates are arithmetic means over images.
    pub fn new(metrics: Vec<MetricKind>, rows: Vec<ReportRow>, meta: ReportMeta) -> Result<Self> {
        for row in &rows {
            if row.values.len() != metrics.len() {
                return Err(SamError::Shape(format!(
                    "row {} has {} values for {} metrics",
                    row.id,
                    row.values.len(),
                    metrics.len()
                )));
            }
            if row.id.contains([',', '"', '\n']) {
                return Err(SamError::Config(format!(
                    "image id {:?} cannot be written to CSV",
                    row.id
                )));
            }
        }
        if rows.is_empty() {
            return Err(SamError::Config("report needs at least one image".into()));
        }
        let n = rows.len() as f64;
        let means = (0..metrics.len())
            .map(|k| rows.iter().map(|r| r.values[k]).sum::<f64>() / n)
            .collect();
        Ok(MetricReport {
            metrics,
            rows,
            means,
            meta,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.id);
            for v in &row.values {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out.push_str("MEAN");
        for v in &self.means {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SamError::Format(e.to_string()))
    }
}
