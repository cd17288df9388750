//! Endpoint and angular errors, and relative-rank aggregation over datasets.

use std::collections::BTreeMap;

use crate::error::{FlowError, Result};
use crate::grid::FlowField;

/// Errors of one model on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub model_name: String,
    pub dataset_name: String,
    pub alpha: f64,
    pub alpha1: f64,
    pub iterations: usize,
    /// Average endpoint error in pixels.
    pub aee: f64,
    /// Average angular error in radians.
    pub ae: f64,
    /// Pixels that entered the averages.
    pub n_pixels: usize,
}

fn pairs<'a>(
    v: &'a FlowField,
    gt: &'a FlowField,
) -> Result<impl Iterator<Item = ([f64; 2], [f64; 2])> + 'a> {
    gt.check_dims(v.dims())?;
    let it = (0..v.v1.len())
        .filter(move |&k| v.is_valid(k) && gt.is_valid(k))
        .map(move |k| {
            (
                [v.v1.as_slice()[k], v.v2.as_slice()[k]],
                [gt.v1.as_slice()[k], gt.v2.as_slice()[k]],
            )
        });
    Ok(it)
}

fn mean(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        (0.0, 0)
    } else {
        (sum / n as f64, n)
    }
}

#[inline]
pub fn endpoint_error(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Angle between the 3-D vectors `(a, 1)` and `(b, 1)`.
///
/// Evaluated as `atan2(|a x b|, a . b)`, which equals the arccosine of the
/// normalized dot product but stays exact for nearly parallel vectors.
#[inline]
pub fn angular_error(a: [f64; 2], b: [f64; 2]) -> f64 {
    // scaling both lifted vectors by one factor leaves the angle unchanged
    // and keeps the products below overflow
    let s = a.iter().chain(&b).fold(1.0f64, |m, x| m.max(x.abs()));
    let (a, b, one) = ([a[0] / s, a[1] / s], [b[0] / s, b[1] / s], 1.0 / s);
    let cx = one * (a[1] - b[1]);
    let cy = one * (b[0] - a[0]);
    let cz = a[0] * b[1] - a[1] * b[0];
    let cross = cx.hypot(cy).hypot(cz);
    let dot = a[0] * b[0] + a[1] * b[1] + one * one;
    cross.atan2(dot)
}

/// Mean endpoint error and the number of pixels used.
pub fn aee_counted(v: &FlowField, gt: &FlowField) -> Result<(f64, usize)> {
    Ok(mean(pairs(v, gt)?.map(|(a, b)| endpoint_error(a, b))))
}

pub fn aee(v: &FlowField, gt: &FlowField) -> Result<f64> {
    aee_counted(v, gt).map(|(e, _)| e)
}

pub fn ae_counted(v: &FlowField, gt: &FlowField) -> Result<(f64, usize)> {
    Ok(mean(pairs(v, gt)?.map(|(a, b)| angular_error(a, b))))
}

pub fn ae(v: &FlowField, gt: &FlowField) -> Result<f64> {
    ae_counted(v, gt).map(|(e, _)| e)
}

/// Both errors for `v` against `gt`, ready to be labelled.
pub fn evaluate(v: &FlowField, gt: &FlowField) -> Result<(f64, f64, usize)> {
    let (e, n) = aee_counted(v, gt)?;
    let (a, _) = ae_counted(v, gt)?;
    Ok((e, a, n))
}

/// Mean relative errors of one model over all datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub model_name: String,
    pub mean_rel_aee: f64,
    pub mean_rel_ae: f64,
    pub datasets: usize,
    /// Set when some dataset had a zero minimum error that this model did
    /// not attain; its ratio there is infinite.
    pub degenerate: bool,
}

fn ratio(value: f64, min: f64) -> (f64, bool) {
    if min > 0.0 {
        (value / min, false)
    } else if value == min {
        (1.0, false)
    } else {
        (f64::INFINITY, true)
    }
}

/// Averages `error / min error of that dataset` per model.
///
/// Rows come back sorted by model name.
pub fn aggregate_ranks(reports: &[ErrorReport]) -> Result<Vec<RankRow>> {
    if reports.is_empty() {
        return Err(FlowError::Aggregation("no reports to aggregate".into()));
    }
    let mut by_dataset: BTreeMap<&str, Vec<&ErrorReport>> = BTreeMap::new();
    for r in reports {
        if !(r.aee.is_finite() && r.ae.is_finite()) {
            return Err(FlowError::Aggregation(format!(
                "non-finite error for {} on {}",
                r.model_name, r.dataset_name
            )));
        }
        by_dataset.entry(&r.dataset_name).or_default().push(r);
    }

    // (sum aee ratio, sum ae ratio, count, degenerate)
    let mut acc: BTreeMap<&str, (f64, f64, usize, bool)> = BTreeMap::new();
    for group in by_dataset.values() {
        let min_aee = group.iter().map(|r| r.aee).fold(f64::INFINITY, f64::min);
        let min_ae = group.iter().map(|r| r.ae).fold(f64::INFINITY, f64::min);
        for r in group {
            let (ra, da) = ratio(r.aee, min_aee);
            let (rb, db) = ratio(r.ae, min_ae);
            let e = acc.entry(&r.model_name).or_insert((0.0, 0.0, 0, false));
            e.0 += ra;
            e.1 += rb;
            e.2 += 1;
            e.3 |= da || db;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(name, (a, b, n, degenerate))| RankRow {
            model_name: name.to_string(),
            mean_rel_aee: a / n as f64,
            mean_rel_ae: b / n as f64,
            datasets: n,
            degenerate,
        })
        .collect())
}
