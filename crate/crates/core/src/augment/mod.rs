//! Label-preserving data augmentation: TF-IDF word replacement and back
//! translation. Each strategy produces exactly one synthetic document per
//! original.

mod replace;
mod translate;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::Result;

pub use replace::{tfidf_replace, AugmentConfig, TfIdfReplacer};
pub use translate::{back_translate, HttpTranslator, MockTranslator, Translator};

/// Suffix appended to the id of a TF-IDF-replaced document.
pub const TFIDF_SUFFIX: &str = "#aug";
/// Suffix appended to the id of a back-translated document.
pub const BACK_TRANSLATION_SUFFIX: &str = "#bt";

pub enum Augmentation<'a> {
    TfIdf(&'a TfIdfReplacer),
    BackTranslation {
        translator: &'a dyn Translator,
        source: &'a str,
        pivot: &'a str,
    },
}

/// One line of the augmented-pairs file joining an original to its augmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedPair {
    pub id: String,
    pub aug_id: String,
}

/// Originals followed by one augmented document per original, in the same order.
pub fn augment_dataset(dataset: &Dataset, strategy: &Augmentation<'_>) -> Result<Dataset> {
    let synthetic = match strategy {
        Augmentation::TfIdf(replacer) => dataset
            .docs
            .iter()
            .map(|d| replacer.replace(d))
            .collect::<Result<Vec<_>>>()?,
        Augmentation::BackTranslation {
            translator,
            source,
            pivot,
        } => back_translate(&dataset.docs, *translator, source, pivot)?,
    };
    let mut docs = dataset.docs.clone();
    docs.extend(synthetic);
    Ok(Dataset {
        docs,
        classes: dataset.classes.clone(),
    })
}

/// Pairs for a dataset laid out as returned by [`augment_dataset`].
pub fn augmented_pairs(augmented: &Dataset) -> Vec<AugmentedPair> {
    let half = augmented.docs.len() / 2;
    augmented.docs[..half]
        .iter()
        .zip(&augmented.docs[half..])
        .map(|(orig, aug)| AugmentedPair {
            id: orig.id.clone(),
            aug_id: aug.id.clone(),
        })
        .collect()
}
