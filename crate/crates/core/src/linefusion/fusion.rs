use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

use super::soft_edges::SoftEdgeMap;

/// Per-layer gains for the weighted-max fusion rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionWeights {
    pub double: f64,
    pub single: f64,
    pub soft: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        Self {
            double: 1.0,
            single: 1.0,
            soft: 0.4,
        }
    }
}

impl FusionWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("double", self.double), ("single", self.single), ("soft", self.soft)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::param(format!("fusion weight {name}={w} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Content digests of the layers that went into a condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub double: String,
    pub single: String,
    /// Absent for a two-layer condition built before the initial pass.
    pub soft: Option<String>,
}

/// Fused structural condition, bright strokes on black.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryCondition {
    pub image: GrayImage,
    pub layer_weights: FusionWeights,
    pub provenance: Provenance,
}

/// Per-pixel `max(w_d * double, w_s * single, w_e * soft)`, clamped to `[0, 1]`.
///
/// All layers are in stroke-bright polarity: pass the inverted output of
/// [`double_lines`](super::double_lines).
pub fn fuse(
    l_double: &GrayImage,
    l_single: &BinaryMask,
    s_soft: Option<&SoftEdgeMap>,
    weights: FusionWeights,
) -> Result<GeometryCondition> {
    weights.validate()?;
    let dims = l_double.dims();
    if l_single.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: l_single.dims(),
        });
    }
    let soft = match s_soft {
        Some(map) if map.source_dims() != dims => {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: map.source_dims(),
            })
        }
        Some(map) => Some(map.rasterize()),
        None => None,
    };

    let data = (0..dims.0 * dims.1)
        .map(|i| {
            let d = weights.double * l_double.data()[i];
            let s = if l_single.data()[i] { weights.single } else { 0.0 };
            let e = soft.as_ref().map_or(0.0, |img| weights.soft * img.data()[i]);
            d.max(s).max(e).clamp(0.0, 1.0)
        })
        .collect();

    let provenance = Provenance {
        double: format!("sha256:{}", sha256_hex(&l_double.to_u8())),
        single: format!("sha256:{}", sha256_hex(&l_single.to_gray().to_u8())),
        soft: s_soft
            .map(|m| m.to_json().map(|j| format!("sha256:{}", sha256_hex(j.as_bytes()))))
            .transpose()?,
    };
    Ok(GeometryCondition {
        image: GrayImage::new(dims.0, dims.1, data)?,
        layer_weights: weights,
        provenance,
    })
}
