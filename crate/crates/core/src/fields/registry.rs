use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::{
    FieldModel, HillVortex, PerturbationModel, PositiveRadial, RadialGr, ThetaOnly,
    ZeroPerturbation,
};

/// Named numeric parameters for a registered model (e.g. `R0`).
pub type FieldParams = BTreeMap<String, f64>;

pub const FIELD_NAMES: &[&str] = &["hill-classical", "hill-swirl"];
pub const PERTURBATION_NAMES: &[&str] = &["gr", "none", "theta-only", "positive-radial"];

/// Default Rossby number for `hill-swirl`.
pub const DEFAULT_ROSSBY: f64 = 0.1;

pub fn field_from_name(name: &str, params: &FieldParams) -> Result<Arc<dyn FieldModel>> {
    let allowed: &[&str] = match name {
        "hill-classical" => &[],
        "hill-swirl" => &["R0"],
        _ => {
            return Err(Error::Unknown {
                what: "model".into(),
                name: name.into(),
            })
        }
    };
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidParameter(format!(
            "model {name} does not take parameter {bad}"
        )));
    }
    Ok(match name {
        "hill-classical" => Arc::new(HillVortex::classical()),
        _ => Arc::new(HillVortex::swirl(
            params.get("R0").copied().unwrap_or(DEFAULT_ROSSBY),
        )?),
    })
}

pub fn perturbation_from_name(name: &str) -> Result<Arc<dyn PerturbationModel>> {
    Ok(match name {
        "gr" => Arc::new(RadialGr),
        "none" => Arc::new(ZeroPerturbation),
        "theta-only" => Arc::new(ThetaOnly),
        "positive-radial" => Arc::new(PositiveRadial),
        _ => {
            return Err(Error::Unknown {
                what: "perturbation".into(),
                name: name.into(),
            })
        }
    })
}
