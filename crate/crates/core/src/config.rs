//! Fractal configuration files.
//!
//! ```json
//! {
//!   "ambient_dim": 1,
//!   "exact": true,
//!   "maps": [
//!     { "ratio": "1/4", "translation": "0" },
//!     { "ratio": "1/2", "translation": "1/2" }
//!   ],
//!   "sigma": "1/4"
//! }
//! ```
//!
//! Rationals are strings "p/q"; reals are plain JSON numbers. Exact mode
//! engages only when `exact` is true and every parameter is rational. In
//! ambient dimension >= 2, `translation` is an array, `rotation` an
//! optional row-major matrix, and `sigma` is required.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{FractalSystem, Rotation, Similitude};
use crate::rational::{format_rational, parse_rational, rational_from_f64, to_f64, Rational};

/// A number that is either an exact rational string or a float.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NumberLit {
    Real(f64),
    Ratio(String),
}

impl NumberLit {
    pub fn as_rational(&self) -> Result<Rational> {
        match self {
            NumberLit::Real(x) => rational_from_f64(*x),
            NumberLit::Ratio(s) => parse_rational(s),
        }
    }

    pub fn as_f64(&self) -> Result<f64> {
        Ok(to_f64(&self.as_rational()?))
    }

    fn is_declared_rational(&self) -> bool {
        matches!(self, NumberLit::Ratio(_))
    }

    fn canonicalize(&mut self) -> Result<()> {
        if let NumberLit::Ratio(s) = self {
            *s = format_rational(&parse_rational(s)?);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TranslationLit {
    Scalar(NumberLit),
    Vector(Vec<NumberLit>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MapConfig {
    pub ratio: NumberLit,
    pub translation: TranslationLit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FractalConfig {
    pub ambient_dim: usize,
    #[serde(default)]
    pub exact: bool,
    pub maps: Vec<MapConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<NumberLit>,
}

impl FractalConfig {
    pub fn from_json(text: &str) -> Result<FractalConfig> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config JSON: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<FractalConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical serialized form: rationals reduced, fixed field order.
    /// Semantically equal configs share this form (and thus cache keys).
    pub fn canonical_json(&self) -> Result<String> {
        let mut c = self.clone();
        for map in &mut c.maps {
            map.ratio.canonicalize()?;
            match &mut map.translation {
                TranslationLit::Scalar(n) => n.canonicalize()?,
                TranslationLit::Vector(v) => {
                    for n in v {
                        n.canonicalize()?;
                    }
                }
            }
            let is_identity = map.rotation.as_ref().is_some_and(|rows| {
                rows.iter().enumerate().all(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .all(|(j, &x)| x == if i == j { 1.0 } else { 0.0 })
                })
            });
            if is_identity {
                map.rotation = None;
            }
        }
        if let Some(s) = &mut c.sigma {
            s.canonicalize()?;
        }
        serde_json::to_string(&c).map_err(|e| Error::Internal(format!("serialize: {e}")))
    }

    /// Builds and validates the fractal system described by this config.
    pub fn build(&self) -> Result<FractalSystem> {
        if self.ambient_dim == 0 {
            return Err(Error::Parse("ambient_dim must be >= 1".into()));
        }
        if self.maps.len() < 2 {
            return Err(Error::Parse("need at least 2 maps".into()));
        }

        if self.ambient_dim == 1 {
            let mut exact_maps = Vec::with_capacity(self.maps.len());
            let mut all_rational = true;
            for map in &self.maps {
                if map.rotation.is_some() {
                    return Err(Error::Parse(
                        "rotation not supported in ambient dimension 1".into(),
                    ));
                }
                let t = match &map.translation {
                    TranslationLit::Scalar(n) => n,
                    TranslationLit::Vector(v) if v.len() == 1 => &v[0],
                    TranslationLit::Vector(_) => {
                        return Err(Error::Parse(
                            "translation must be scalar in ambient dimension 1".into(),
                        ))
                    }
                };
                all_rational &=
                    map.ratio.is_declared_rational() && t.is_declared_rational();
                exact_maps.push((map.ratio.as_rational()?, t.as_rational()?));
            }
            let declared_exact = self.exact && all_rational;
            if self.exact && !all_rational {
                return Err(Error::Parse(
                    "exact mode requires all parameters as rational strings".into(),
                ));
            }
            let sys = FractalSystem::from_exact_1d(exact_maps, declared_exact)?;
            if let Some(sigma) = &self.sigma {
                let declared = sigma.as_rational()?;
                let computed = sys.sigma_exact()?;
                // Exact mode demands equality; float configs get a
                // representation allowance.
                let consistent = if declared_exact {
                    &declared == computed
                } else {
                    (to_f64(&declared) - to_f64(computed)).abs()
                        <= 1e-12 * to_f64(computed).abs()
                };
                if !consistent {
                    return Err(Error::Geometry(format!(
                        "declared sigma {} differs from computed gap {}",
                        format_rational(&declared),
                        format_rational(computed)
                    )));
                }
            }
            Ok(sys)
        } else {
            if self.exact {
                return Err(Error::Parse(
                    "exact mode is only available in ambient dimension 1".into(),
                ));
            }
            let sigma = self
                .sigma
                .as_ref()
                .ok_or_else(|| {
                    Error::Geometry("sigma must be supplied in ambient dimension >= 2".into())
                })?
                .as_f64()?;
            let mut sims = Vec::with_capacity(self.maps.len());
            for map in &self.maps {
                let translation: Vec<f64> = match &map.translation {
                    TranslationLit::Vector(v) => {
                        v.iter().map(|n| n.as_f64()).collect::<Result<_>>()?
                    }
                    TranslationLit::Scalar(_) => {
                        return Err(Error::Parse(
                            "translation must be a vector in ambient dimension >= 2".into(),
                        ))
                    }
                };
                if translation.len() != self.ambient_dim {
                    return Err(Error::Parse(format!(
                        "translation length {} != ambient_dim {}",
                        translation.len(),
                        self.ambient_dim
                    )));
                }
                let rotation = match &map.rotation {
                    None => Rotation::Identity,
                    Some(rows) => Rotation::Matrix(rows.clone()),
                };
                sims.push(Similitude::new(map.ratio.as_f64()?, rotation, translation)?);
            }
            FractalSystem::new_general(sims, sigma)
        }
    }
}

/// Reads, parses, and validates a fractal config file.
pub fn load_system(path: &Path) -> Result<FractalSystem> {
    FractalConfig::from_path(path)?.build()
}
