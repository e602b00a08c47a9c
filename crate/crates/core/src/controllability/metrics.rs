use crate::error::{Error, Result};

/// The four per-position curves over a set of graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBundle {
    /// Mean true curve.
    pub tc: Vec<f64>,
    /// Mean predicted curve.
    pub pc: Vec<f64>,
    /// Mean absolute error per position.
    pub er: Vec<f64>,
    /// Population standard deviation of the absolute error per position.
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveMetrics {
    pub bundle: CurveBundle,
    /// Mean of `er`.
    pub er_bar: f64,
    /// Mean of `sigma`.
    pub sigma_bar: f64,
}

/// Column-wise error statistics of predicted curves `pv` against true curves
/// `tv` (one row per graph).
pub fn curve_metrics<T: AsRef<[f64]>, P: AsRef<[f64]>>(tv: &[T], pv: &[P]) -> Result<CurveMetrics> {
    if tv.is_empty() {
        return Err(Error::invalid("curve metrics need at least one graph"));
    }
    if tv.len() != pv.len() {
        return Err(Error::invalid(format!("{} true curves vs {} predicted", tv.len(), pv.len())));
    }
    let len = tv[0].as_ref().len();
    for (i, (t, p)) in tv.iter().zip(pv).enumerate() {
        if t.as_ref().len() != len || p.as_ref().len() != len {
            return Err(Error::invalid(format!(
                "row {i}: curve lengths {} / {} differ from {len}",
                t.as_ref().len(),
                p.as_ref().len()
            )));
        }
    }
    let m = tv.len() as f64;
    let mut tc = vec![0.0; len];
    let mut pc = vec![0.0; len];
    let mut er = vec![0.0; len];
    for (t, p) in tv.iter().zip(pv) {
        for (j, (&a, &b)) in t.as_ref().iter().zip(p.as_ref()).enumerate() {
            tc[j] += a;
            pc[j] += b;
            er[j] += (b - a).abs();
        }
    }
    for j in 0..len {
        tc[j] /= m;
        pc[j] /= m;
        er[j] /= m;
    }
    let mut sigma = vec![0.0; len];
    for (t, p) in tv.iter().zip(pv) {
        for (j, (&a, &b)) in t.as_ref().iter().zip(p.as_ref()).enumerate() {
            let d = (b - a).abs() - er[j];
            sigma[j] += d * d;
        }
    }
    for s in sigma.iter_mut() {
        *s = (*s / m).sqrt();
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let er_bar = mean(&er);
    let sigma_bar = mean(&sigma);
    Ok(CurveMetrics { bundle: CurveBundle { tc, pc, er, sigma }, er_bar, sigma_bar })
}
