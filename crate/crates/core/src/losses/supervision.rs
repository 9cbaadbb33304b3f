use serde::{Deserialize, Serialize};

use super::{pairwise_sum, ScalarLoss};
use crate::error::Result;
use crate::raster::{ensure_same_dims, ConfidenceMap, DepthMap, Grid, Provenance};

/// How the per-pixel squared errors are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// `sum(w * e) / sum(w)`.
    #[default]
    WeightedMean,
    /// `sum(w * e)`.
    Sum,
}

pub fn physics_supervision_loss(pred: &DepthMap, phys: &DepthMap, weights: &ConfidenceMap) -> Result<ScalarLoss> {
    physics_supervision_loss_with(pred, phys, weights, Reduction::WeightedMean)
}

/// Weighted squared error between a predicted depth map and the physics
/// prior over pixels valid in both. `count` is the number of pixels with a
/// positive weight.
pub fn physics_supervision_loss_with(
    pred: &DepthMap,
    phys: &DepthMap,
    weights: &ConfidenceMap,
    reduction: Reduction,
) -> Result<ScalarLoss> {
    ensure_same_dims(pred.dims(), phys.dims(), "physics loss: prediction vs prior")?;
    ensure_same_dims(pred.dims(), weights.dims(), "physics loss: prediction vs weights")?;
    let mut terms = Vec::new();
    let mut ws = Vec::new();
    for i in 0..pred.len() {
        let (Some(p), Some(g)) = (pred.depth_at(i), phys.depth_at(i)) else {
            continue;
        };
        let w = weights.at(i) as f64;
        if w <= 0.0 {
            continue;
        }
        let e = g as f64 - p as f64;
        terms.push(w * e * e);
        ws.push(w);
    }
    if ws.is_empty() {
        return Ok(ScalarLoss::EMPTY);
    }
    let total = pairwise_sum(&terms);
    let value = match reduction {
        Reduction::Sum => total,
        Reduction::WeightedMean => total / pairwise_sum(&ws),
    };
    Ok(ScalarLoss {
        value,
        count: ws.len(),
    })
}

/// Confidence assigned to each provenance class. Missing JSON keys keep
/// their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProvenanceWeights {
    pub road: f32,
    pub flat: f32,
    pub edge_extended: f32,
    pub inpainted: f32,
    pub sky: f32,
    pub external: f32,
}

impl Default for ProvenanceWeights {
    fn default() -> Self {
        ProvenanceWeights {
            road: 1.0,
            flat: 0.8,
            edge_extended: 0.5,
            inpainted: 0.2,
            sky: 0.0,
            external: 1.0,
        }
    }
}

impl ProvenanceWeights {
    pub fn weight(&self, p: Provenance) -> f32 {
        match p {
            Provenance::None => 0.0,
            Provenance::Road => self.road,
            Provenance::Flat => self.flat,
            Provenance::EdgeExtended => self.edge_extended,
            Provenance::Inpainted => self.inpainted,
            Provenance::Sky => self.sky,
            Provenance::External => self.external,
        }
    }
}

/// Per-pixel confidence of a physics prior, looked up by provenance.
pub fn confidence_map(prior: &DepthMap, table: &ProvenanceWeights) -> Result<ConfidenceMap> {
    let (w, h) = prior.dims();
    let grid = Grid::from_vec(
        w,
        h,
        prior.provenance_plane().iter().map(|&p| table.weight(p)).collect(),
    )?;
    ConfidenceMap::new(grid)
}
