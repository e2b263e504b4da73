use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Precomputed per-layer vectors of one document, ordered first to last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFeatures {
    pub id: String,
    pub layers: Vec<Vec<f64>>,
}

impl LayerFeatures {
    pub fn validate(&self) -> Result<usize> {
        let Some(first) = self.layers.first() else {
            return Err(Error::NotEnoughLayers { needed: 1, got: 0 });
        };
        let d = first.len();
        if let Some(bad) = self.layers.iter().find(|l| l.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        if self.layers.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("layer features of {:?}", self.id)));
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerStrategy {
    First,
    #[default]
    Last,
    /// The final four layers concatenated, fourth-from-last first.
    #[serde(rename = "concat4")]
    ConcatLast4,
}

impl FromStr for LayerStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(LayerStrategy::First),
            "last" => Ok(LayerStrategy::Last),
            "concat4" => Ok(LayerStrategy::ConcatLast4),
            other => Err(Error::Invalid(format!("unknown layer strategy {other:?} (first|last|concat4)"))),
        }
    }
}

impl fmt::Display for LayerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerStrategy::First => "first",
            LayerStrategy::Last => "last",
            LayerStrategy::ConcatLast4 => "concat4",
        })
    }
}

pub fn select_layers(features: &LayerFeatures, strategy: LayerStrategy) -> Result<Vec<f64>> {
    features.validate()?;
    let layers = &features.layers;
    match strategy {
        LayerStrategy::First => Ok(layers[0].clone()),
        LayerStrategy::Last => Ok(layers[layers.len() - 1].clone()),
        LayerStrategy::ConcatLast4 => {
            if layers.len() < 4 {
                return Err(Error::NotEnoughLayers {
                    needed: 4,
                    got: layers.len(),
                });
            }
            Ok(layers[layers.len() - 4..].concat())
        }
    }
}

/// Load a layer-features JSONL file, checking every record and that all
/// records share one layer count and width.
pub fn load_layer_features(path: &Path) -> Result<Vec<LayerFeatures>> {
    let context = path.display().to_string();
    let mut out: Vec<LayerFeatures> = Vec::new();
    let mut shape = None;
    for (line, rec) in io::read_jsonl::<LayerFeatures>(path)? {
        let d = rec.validate().map_err(|e| Error::parse(&context, line, e))?;
        let this = (rec.layers.len(), d);
        if *shape.get_or_insert(this) != this {
            return Err(Error::parse(&context, line, "layer shape differs from earlier records"));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(n: usize, d: usize) -> LayerFeatures {
        LayerFeatures {
            id: "doc".into(),
            layers: (0..n).map(|l| vec![l as f64; d]).collect(),
        }
    }

    #[test]
    fn concat_last_four_of_twelve() {
        let f = stack(12, 768);
        let v = select_layers(&f, LayerStrategy::ConcatLast4).unwrap();
        assert_eq!(v.len(), 3072);
        assert_eq!(v[0], 8.0);
        assert_eq!(v[3071], 11.0);
        assert_eq!(select_layers(&f, LayerStrategy::Last).unwrap(), f.layers[11]);
        assert_eq!(select_layers(&f, LayerStrategy::First).unwrap(), f.layers[0]);
    }

    #[test]
    fn concat_needs_four_layers() {
        assert!(matches!(
            select_layers(&stack(2, 3), LayerStrategy::ConcatLast4),
            Err(Error::NotEnoughLayers { needed: 4, got: 2 })
        ));
    }

    #[test]
    fn ragged_layers_are_rejected() {
        let f = LayerFeatures {
            id: "x".into(),
            layers: vec![vec![1.0, 2.0], vec![1.0]],
        };
        assert!(select_layers(&f, LayerStrategy::First).is_err());
    }

    #[test]
    fn strategy_names_parse() {
        for s in ["first", "last", "concat4"] {
            assert_eq!(s.parse::<LayerStrategy>().unwrap().to_string(), s);
        }
        assert!("middle".parse::<LayerStrategy>().is_err());
    }
}
