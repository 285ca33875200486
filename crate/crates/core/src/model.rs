//! Persisted model bundle: everything needed to embed and classify new
//! CSV files without the training data — the string-level categorical
//! schema (for re-encoding), the spectral basis, and the fitted
//! per-class KDE. Stored as canonical JSON so saved models are
//! byte-reproducible and diffable.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::SpectralEmbedding;
use crate::error::{Error, Result};
use crate::kde::KdeModel;
use crate::report::{canonical_json, SCHEMA_VERSION};
use crate::survey::CategoricalSchema;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub tool_version: String,
    /// String-level column/category/label vocabulary of the training file.
    pub categorical: CategoricalSchema,
    pub embedding: SpectralEmbedding,
    pub kde: KdeModel,
}

impl ModelFile {
    pub fn new(
        categorical: CategoricalSchema,
        embedding: SpectralEmbedding,
        kde: KdeModel,
    ) -> Self {
        ModelFile {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            categorical,
            embedding,
            kde,
        }
    }

    /// Structural consistency between the three parts.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported model schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let survey = self.categorical.survey_schema()?;
        if survey.q() != self.embedding.q {
            return Err(Error::Dimension { expected: survey.q(), got: self.embedding.q });
        }
        if survey.d() != self.embedding.basis.rows() {
            return Err(Error::Dimension {
                expected: survey.d(),
                got: self.embedding.basis.rows(),
            });
        }
        if self.kde.r != self.embedding.basis.cols() {
            return Err(Error::Dimension {
                expected: self.embedding.basis.cols(),
                got: self.kde.r,
            });
        }
        if self.kde.k() != self.categorical.labels.len() {
            return Err(Error::Dimension {
                expected: self.categorical.labels.len(),
                got: self.kde.k(),
            });
        }
        self.kde.validate()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, canonical_json(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path)?;
        let model: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: invalid model file: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }
}
