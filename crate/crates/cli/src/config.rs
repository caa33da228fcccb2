//! Run configuration: defaults per command, overlaid by a JSON file and then
//! by command-line flags. The merged result is what every output embeds.

use std::path::PathBuf;

use melnikov3d::fields::{field_from_name, perturbation_from_name, FieldParams};
use melnikov3d::quadrature::QuadratureSpec;
use melnikov3d::surface::ValidityWindow;
use melnikov3d::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl std::str::FromStr for PRange {
    type Err = String;

    /// `min:max:n`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, n] = parts[..] else {
            return Err(format!("expected min:max:n, got {s:?}"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        Ok(PRange {
            min: num(min)?,
            max: num(max)?,
            n: n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Unstable,
    Stable,
    Heteroclinic,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Melnikov,
    Surface,
    Contours,
    Lobes,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: String,
    /// Rossby number of `hill-swirl`.
    #[serde(rename = "R0")]
    pub r0: Option<f64>,
    pub perturbation: String,
    pub t: f64,
    pub eps: Vec<f64>,
    pub p_range: PRange,
    pub n_alpha: usize,
    pub kind: Kind,
    pub quadrature: QuadratureSpec,
    /// Transversality threshold relative to `max |grad M|`.
    pub grad_threshold: f64,
    /// Polish contour vertices by re-quadrature along grid edges.
    pub refine: bool,
    pub refine_iterations: usize,
    pub window: ValidityWindow,
    /// `(p, alpha, t)` tuples for `verify`.
    pub points: Vec<[f64; 3]>,
    /// Extra `verify` tuples drawn from `seed`.
    pub random_points: usize,
    pub seed: u64,
    /// `|p - p_launch|` for `verify`.
    pub launch_depth: f64,
    pub out_dir: PathBuf,
    pub mesh: bool,
    pub emit_plot_script: bool,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let (p_range, n_alpha) = match command {
            Command::Surface => (PRange { min: -2.0, max: 2.0, n: 81 }, 64),
            _ => (PRange { min: -2.0, max: 2.0, n: 200 }, 192),
        };
        RunConfig {
            command,
            model: "hill-classical".into(),
            r0: None,
            perturbation: "gr".into(),
            t: 0.0,
            eps: match command {
                Command::Verify => vec![1e-2, 3e-3, 1e-3],
                _ => vec![0.1],
            },
            p_range,
            n_alpha,
            kind: match command {
                Command::Surface => Kind::Both,
                Command::Verify => Kind::Unstable,
                _ => Kind::Heteroclinic,
            },
            quadrature: QuadratureSpec::default(),
            grad_threshold: 1e-6,
            refine: false,
            refine_iterations: 30,
            window: ValidityWindow::default(),
            points: vec![[0.0, 1.0 / 12.0, 0.0]],
            random_points: 0,
            seed: 0,
            launch_depth: 8.0,
            out_dir: PathBuf::from("."),
            mesh: true,
            emit_plot_script: false,
        }
    }

    pub fn field_params(&self) -> FieldParams {
        self.r0.map(|r| FieldParams::from([("R0".to_string(), r)])).unwrap_or_default()
    }

    /// Checks names against the registries and the ranges each command
    /// needs.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        field_from_name(&self.model, &self.field_params())?;
        perturbation_from_name(&self.perturbation)?;
        self.quadrature.validate()?;
        if !self.t.is_finite() {
            return bad(format!("t must be finite, got {}", self.t));
        }
        let PRange { min, max, n } = self.p_range;
        if !(min.is_finite() && max.is_finite() && min < max) || n < 8 {
            return bad(format!("p range {min}:{max}:{n} needs min < max and at least 8 nodes"));
        }
        if self.n_alpha < 8 {
            return bad(format!("need at least 8 alpha nodes, got {}", self.n_alpha));
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !e.is_finite()) {
            return bad("eps must be a non-empty list of finite values".into());
        }
        if !(self.grad_threshold >= 0.0) {
            return bad(format!("grad_threshold must be non-negative, got {}", self.grad_threshold));
        }
        let kinds: &[Kind] = match self.command {
            Command::Melnikov | Command::Contours => &[Kind::Unstable, Kind::Stable, Kind::Heteroclinic],
            Command::Surface => &[Kind::Unstable, Kind::Stable, Kind::Both],
            Command::Lobes => &[Kind::Heteroclinic],
            Command::Verify => &[Kind::Unstable, Kind::Stable],
        };
        if !kinds.contains(&self.kind) {
            return bad(format!("kind {:?} is not available for {:?}", self.kind, self.command).to_lowercase());
        }
        match self.command {
            Command::Surface | Command::Lobes if self.eps.len() != 1 => {
                bad(format!("{:?} takes a single eps", self.command).to_lowercase())
            }
            Command::Verify if !(self.launch_depth > 0.0) => {
                bad(format!("launch_depth must be positive, got {}", self.launch_depth))
            }
            Command::Verify if self.points.is_empty() && self.random_points == 0 => {
                bad("verify needs at least one point".into())
            }
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Overlays `patch` onto `base`. Keys missing from `base` are rejected.
/// Objects recurse, except tagged enums (with a `policy` key), which are
/// replaced whole, as are all other values.
pub fn merge(base: &mut Value, patch: &Value, path: &str) -> Result<()> {
    let (Value::Object(b), Value::Object(p)) = (&mut *base, patch) else {
        *base = patch.clone();
        return Ok(());
    };
    for (k, v) in p {
        let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        match b.get_mut(k) {
            None => return Err(Error::InvalidParameter(format!("unknown config key {here}"))),
            Some(slot @ Value::Object(_)) if v.is_object() && !slot.as_object().is_some_and(|o| o.contains_key("policy")) => {
                merge(slot, v, &here)?
            }
            Some(slot) => *slot = v.clone(),
        }
    }
    Ok(())
}

/// Defaults for `command`, then `file`, then `flags`.
pub fn resolve(command: Command, file: Option<&Value>, flags: &Map<String, Value>) -> Result<RunConfig> {
    let mut merged = RunConfig::defaults(command).to_json();
    if let Some(f) = file {
        if !f.is_object() {
            return Err(Error::InvalidParameter("config file must hold a JSON object".into()));
        }
        let mut f = f.clone();
        // the subcommand decides what runs
        f.as_object_mut().expect("object").remove("command");
        merge(&mut merged, &f, "")?;
    }
    merge(&mut merged, &Value::Object(flags.clone()), "")?;
    let cfg: RunConfig =
        serde_json::from_value(merged).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}
