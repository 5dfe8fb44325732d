use crate::error::{Error, Result};

/// Triplet hinge loss `max(0, |a-p| - |a-n| + alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletLoss {
    pub loss: f64,
    pub grad_anchor: Vec<f64>,
    pub grad_positive: Vec<f64>,
    pub grad_negative: Vec<f64>,
}

impl TripletLoss {
    pub fn active(&self) -> bool {
        self.loss > 0.0
    }
}

/// Loss and gradients for one triplet. Inactive triplets, including the
/// hinge point itself, get zero gradients; a zero-length distance
/// contributes a zero subgradient.
pub fn triplet_loss(a: &[f64], p: &[f64], n: &[f64], alpha: f64) -> Result<TripletLoss> {
    if a.len() != p.len() || a.len() != n.len() {
        return Err(Error::Config("triplet members differ in dimension".into()));
    }
    if !a.iter().chain(p).chain(n).all(|v| v.is_finite()) || !alpha.is_finite() {
        return Err(Error::NonFinite("triplet loss input".into()));
    }
    let d_ap = crate::graph_build::squared_distance(a, p).sqrt();
    let d_an = crate::graph_build::squared_distance(a, n).sqrt();
    let raw = d_ap - d_an + alpha;
    let dim = a.len();
    let mut out = TripletLoss {
        loss: raw.max(0.0),
        grad_anchor: vec![0.0; dim],
        grad_positive: vec![0.0; dim],
        grad_negative: vec![0.0; dim],
    };
    if raw <= 0.0 {
        return Ok(out);
    }
    for i in 0..dim {
        let gp = if d_ap > 0.0 { (a[i] - p[i]) / d_ap } else { 0.0 };
        let gn = if d_an > 0.0 { (a[i] - n[i]) / d_an } else { 0.0 };
        out.grad_anchor[i] = gp - gn;
        out.grad_positive[i] = -gp;
        out.grad_negative[i] = gn;
    }
    Ok(out)
}
