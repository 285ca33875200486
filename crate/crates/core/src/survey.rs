//! Blockwise categorical survey space: schemas, one-hot survey vectors,
//! and labeled dataset loading.
//!
//! A survey response answers q categorical questions; question i has m_i
//! possible modalities (each m_i ≥ 2). Its one-hot expansion lives in
//! dimension d = Σ m_i and has exactly one active coordinate per block,
//! so ‖x‖₂² = q and the normalized vector x/√q is a unit vector.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block layout of the one-hot space: sizes m_1..m_q and their offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveySchema {
    block_sizes: Vec<usize>,
    block_offsets: Vec<usize>,
}

impl SurveySchema {
    /// Validates m_i ≥ 2 for every block and precomputes offsets.
    pub fn from_block_sizes(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::Config("schema needs at least one block".into()));
        }
        let mut block_offsets = Vec::with_capacity(block_sizes.len() + 1);
        let mut total = 0usize;
        for (i, &m) in block_sizes.iter().enumerate() {
            if m < 2 {
                return Err(Error::Config(format!(
                    "block {i} has {m} modalities; each block needs at least 2"
                )));
            }
            block_offsets.push(total);
            total += m;
        }
        block_offsets.push(total);
        Ok(SurveySchema { block_sizes, block_offsets })
    }

    /// Number of question blocks q.
    pub fn q(&self) -> usize {
        self.block_sizes.len()
    }

    /// Total one-hot dimension d = Σ m_i.
    pub fn d(&self) -> usize {
        *self.block_offsets.last().unwrap()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Start of block i inside [0, d).
    pub fn offset(&self, block: usize) -> usize {
        self.block_offsets[block]
    }

    pub fn block_size(&self, block: usize) -> usize {
        self.block_sizes[block]
    }

    /// Dense coordinate of (block, modality).
    pub fn position(&self, block: usize, modality: usize) -> usize {
        self.block_offsets[block] + modality
    }
}

/// One survey response: the active modality index for each block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyVector {
    active: Vec<usize>,
}

impl SurveyVector {
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Modality list; inverse of `encode`.
    pub fn decode(&self) -> &[usize] {
        &self.active
    }

    /// Dense {0,1}^d expansion.
    pub fn to_dense(&self, schema: &SurveySchema) -> Vec<f64> {
        let mut x = vec![0.0; schema.d()];
        for (block, &modality) in self.active.iter().enumerate() {
            x[schema.position(block, modality)] = 1.0;
        }
        x
    }

    /// Normalized dense expansion x̃ = x/√q, a unit vector.
    pub fn normalized(&self, schema: &SurveySchema) -> Vec<f64> {
        let inv = 1.0 / (schema.q() as f64).sqrt();
        let mut x = vec![0.0; schema.d()];
        for (block, &modality) in self.active.iter().enumerate() {
            x[schema.position(block, modality)] = inv;
        }
        x
    }

    /// Dense coordinates of the active entries, ascending; lets callers
    /// touch q coordinates instead of d.
    pub fn active_positions<'a>(
        &'a self,
        schema: &'a SurveySchema,
    ) -> impl Iterator<Item = usize> + 'a {
        self.active
            .iter()
            .enumerate()
            .map(|(block, &modality)| schema.position(block, modality))
    }
}

/// Checks lengths and ranges, then wraps the modality list.
pub fn encode(schema: &SurveySchema, modalities: &[usize]) -> Result<SurveyVector> {
    if modalities.len() != schema.q() {
        return Err(Error::Dimension { expected: schema.q(), got: modalities.len() });
    }
    for (block, &modality) in modalities.iter().enumerate() {
        let m = schema.block_size(block);
        if modality >= m {
            return Err(Error::Encoding(format!(
                "modality {modality} out of range for block {block} (size {m})"
            )));
        }
    }
    Ok(SurveyVector { active: modalities.to_vec() })
}

/// Labeled samples under one shared schema.
#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub schema: SurveySchema,
    pub samples: Vec<SurveyVector>,
    pub labels: Vec<usize>,
    pub k: usize,
}

impl LabeledDataset {
    pub fn new(
        schema: SurveySchema,
        samples: Vec<SurveyVector>,
        labels: Vec<usize>,
        k: usize,
    ) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Dimension { expected: samples.len(), got: labels.len() });
        }
        if k == 0 {
            return Err(Error::Config("class count must be positive".into()));
        }
        for (i, &y) in labels.iter().enumerate() {
            if y >= k {
                return Err(Error::Data(format!("sample {i} has label {y}, but k = {k}")));
            }
        }
        for (i, s) in samples.iter().enumerate() {
            if s.active.len() != schema.q() {
                return Err(Error::Data(format!(
                    "sample {i} answers {} blocks, schema has {}",
                    s.active.len(),
                    schema.q()
                )));
            }
        }
        Ok(LabeledDataset { schema, samples, labels, k })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// Per-class sample counts, length k.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Named categorical column: category strings in modality order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub categories: Vec<String>,
}

/// String-level schema for CSV ingestion: feature columns plus the label
/// vocabulary. Serializable so a fitted model can re-encode new files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSchema {
    pub blocks: Vec<ColumnSchema>,
    pub labels: Vec<String>,
}

impl CategoricalSchema {
    /// Block layout induced by the category counts.
    pub fn survey_schema(&self) -> Result<SurveySchema> {
        SurveySchema::from_block_sizes(self.blocks.iter().map(|c| c.categories.len()).collect())
    }

    fn modality_of(&self, block: usize, value: &str) -> Result<usize> {
        let col = &self.blocks[block];
        col.categories
            .iter()
            .position(|c| c == value)
            .ok_or_else(|| {
                Error::Data(format!("unknown category \"{value}\" in column \"{}\"", col.name))
            })
    }

    fn label_of(&self, value: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == value)
            .ok_or_else(|| Error::Data(format!("unknown label \"{value}\"")))
    }

    /// Encodes one row of category strings (feature columns only, in
    /// schema order) into a survey vector.
    pub fn encode_row(&self, values: &[&str]) -> Result<SurveyVector> {
        if values.len() != self.blocks.len() {
            return Err(Error::Dimension { expected: self.blocks.len(), got: values.len() });
        }
        let modalities = values
            .iter()
            .enumerate()
            .map(|(i, v)| self.modality_of(i, v))
            .collect::<Result<Vec<usize>>>()?;
        encode(&self.survey_schema()?, &modalities)
    }
}

/// How `load_dataset` resolves column values to modality indices.
pub enum SchemaSpec<'a> {
    /// Collect categories from the file itself; modality order is
    /// lexicographic by category string for determinism.
    Infer,
    /// Use a fixed vocabulary; unseen values are data errors.
    Explicit(&'a CategoricalSchema),
}

/// Options for CSV ingestion.
pub struct LoadOptions<'a> {
    pub schema: SchemaSpec<'a>,
    /// Label column name; defaults to a column named "label" if present,
    /// otherwise the last column.
    pub label_column: Option<&'a str>,
}

impl Default for LoadOptions<'_> {
    fn default() -> Self {
        LoadOptions { schema: SchemaSpec::Infer, label_column: None }
    }
}

/// Loads a comma-separated file with a header row: q categorical feature
/// columns plus one label column. Returns the dataset together with the
/// string-level schema actually used (inferred or echoed back).
pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<(LabeledDataset, CategoricalSchema)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad header row: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.len() < 2 {
        return Err(Error::Data(
            "need at least one feature column and one label column".into(),
        ));
    }

    let label_idx = match opts.label_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("label column \"{name}\" not found")))?,
        None => headers
            .iter()
            .position(|h| h == "label")
            .unwrap_or(headers.len() - 1),
    };
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != label_idx).collect();

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut label_values: Vec<String> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", line + 1)))?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "row {}: expected {} fields, got {}",
                line + 1,
                headers.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let value = &record[i];
            if value.is_empty() {
                return Err(Error::Data(format!(
                    "row {}: missing value in column \"{}\"",
                    line + 1,
                    headers[i]
                )));
            }
            row.push(value.to_owned());
        }
        let label = &record[label_idx];
        if label.is_empty() {
            return Err(Error::Data(format!("row {}: missing label", line + 1)));
        }
        rows.push(row);
        label_values.push(label.to_owned());
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }

    let cat_schema = match &opts.schema {
        SchemaSpec::Explicit(s) => {
            if s.blocks.len() != feature_idx.len() {
                return Err(Error::Dimension {
                    expected: s.blocks.len(),
                    got: feature_idx.len(),
                });
            }
            (*s).clone()
        }
        SchemaSpec::Infer => {
            let mut blocks = Vec::with_capacity(feature_idx.len());
            for (j, &i) in feature_idx.iter().enumerate() {
                let distinct: BTreeSet<&str> = rows.iter().map(|r| r[j].as_str()).collect();
                if distinct.len() < 2 {
                    return Err(Error::Data(format!(
                        "column \"{}\" has {} distinct value(s); need at least 2",
                        headers[i],
                        distinct.len()
                    )));
                }
                blocks.push(ColumnSchema {
                    name: headers[i].clone(),
                    categories: distinct.into_iter().map(str::to_owned).collect(),
                });
            }
            let labels: BTreeSet<&str> = label_values.iter().map(String::as_str).collect();
            CategoricalSchema {
                blocks,
                labels: labels.into_iter().map(str::to_owned).collect(),
            }
        }
    };

    let schema = cat_schema.survey_schema()?;
    let mut samples = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (row, label) in rows.iter().zip(&label_values) {
        let mut modalities = Vec::with_capacity(row.len());
        for (block, value) in row.iter().enumerate() {
            modalities.push(cat_schema.modality_of(block, value)?);
        }
        samples.push(encode(&schema, &modalities)?);
        labels.push(cat_schema.label_of(label)?);
    }
    let k = cat_schema.labels.len();
    let dataset = LabeledDataset::new(schema, samples, labels, k)?;
    Ok((dataset, cat_schema))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write as _;

    fn schema(sizes: &[usize]) -> SurveySchema {
        SurveySchema::from_block_sizes(sizes.to_vec()).unwrap()
    }

    #[test]
    fn encodes_two_block_example() {
        let s = schema(&[2, 3]);
        assert_eq!(s.d(), 5);
        let v = encode(&s, &[0, 2]).unwrap();
        assert_eq!(v.to_dense(&s), vec![1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn encodes_single_binary_block() {
        let s = schema(&[2]);
        let v = encode(&s, &[1]).unwrap();
        assert_eq!(v.to_dense(&s), vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_out_of_range_modality() {
        let s = schema(&[2, 3]);
        match encode(&s, &[0, 3]) {
            Err(Error::Encoding(_)) => {}
            other => panic!("expected encoding error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_length_mismatch() {
        let s = schema(&[2, 3]);
        match encode(&s, &[0]) {
            Err(Error::Dimension { expected: 2, got: 1 }) => {}
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unary_blocks() {
        assert!(SurveySchema::from_block_sizes(vec![2, 1]).is_err());
        assert!(SurveySchema::from_block_sizes(vec![]).is_err());
    }

    #[test]
    fn normalizes_q4_to_half_entries() {
        let s = schema(&[2, 2, 2, 2]);
        let v = encode(&s, &[0, 1, 0, 1]).unwrap();
        let x = v.normalized(&s);
        for pos in v.active_positions(&s) {
            assert_eq!(x[pos], 0.5);
        }
    }

    #[test]
    fn normalize_is_identity_for_single_block() {
        let s = schema(&[3]);
        let v = encode(&s, &[2]).unwrap();
        assert_eq!(v.normalized(&s), v.to_dense(&s));
    }

    #[test]
    fn normalized_vectors_are_unit_at_q9() {
        let s = schema(&[2, 3, 4, 2, 2, 3, 5, 2, 2]);
        let v = encode(&s, &[1, 2, 3, 0, 1, 0, 4, 1, 0]).unwrap();
        let norm: f64 = v.normalized(&s).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_inferred_csv() {
        let f = write_csv("color,size,label\nr,s,0\ng,m,1\nr,l,0\n");
        let (ds, cat) = load_dataset(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.schema.q(), 2);
        assert_eq!(ds.schema.d(), 5);
        assert_eq!(ds.k, 2);
        assert_eq!(ds.n(), 3);
        // Lexicographic category order: color (g, r), size (l, m, s).
        assert_eq!(cat.blocks[0].categories, vec!["g", "r"]);
        assert_eq!(cat.blocks[1].categories, vec!["l", "m", "s"]);
        assert_eq!(ds.samples[0].active(), &[1, 2]);
        assert_eq!(ds.labels, vec![0, 1, 0]);
    }

    #[test]
    fn empty_file_is_a_data_error() {
        let f = write_csv("color,size,label\n");
        match load_dataset(f.path(), &LoadOptions::default()) {
            Err(Error::Data(_)) => {}
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn unseen_category_names_column_and_value() {
        let f = write_csv("color,size,label\nr,s,0\nblue,m,1\n");
        let explicit = CategoricalSchema {
            blocks: vec![
                ColumnSchema { name: "color".into(), categories: vec!["g".into(), "r".into()] },
                ColumnSchema {
                    name: "size".into(),
                    categories: vec!["l".into(), "m".into(), "s".into()],
                },
            ],
            labels: vec!["0".into(), "1".into()],
        };
        let opts = LoadOptions { schema: SchemaSpec::Explicit(&explicit), label_column: None };
        match load_dataset(f.path(), &opts) {
            Err(Error::Data(msg)) => {
                assert!(msg.contains("blue"), "message should name the value: {msg}");
                assert!(msg.contains("color"), "message should name the column: {msg}");
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn schema_file_uses_blocks_and_labels_keys() {
        let schema = CategoricalSchema {
            blocks: vec![ColumnSchema {
                name: "color".into(),
                categories: vec!["g".into(), "r".into()],
            }],
            labels: vec!["no".into(), "yes".into()],
        };
        let json = serde_json::to_value(&schema).unwrap();
        assert!(json.get("blocks").is_some());
        assert!(json.get("labels").is_some());
        let parsed: CategoricalSchema = serde_json::from_str(
            r#"{"blocks":[{"name":"color","categories":["g","r"]}],"labels":["no","yes"]}"#,
        )
        .unwrap();
        assert_eq!(parsed, schema);
    }

    #[test]
    fn encode_row_maps_strings_to_block_positions() {
        let schema = CategoricalSchema {
            blocks: vec![
                ColumnSchema { name: "color".into(), categories: vec!["g".into(), "r".into()] },
                ColumnSchema {
                    name: "size".into(),
                    categories: vec!["l".into(), "m".into(), "s".into()],
                },
            ],
            labels: vec!["no".into(), "yes".into()],
        };
        let x = schema.encode_row(&["r", "s"]).unwrap();
        assert_eq!(x.active(), &[1, 2]);
        let survey = schema.survey_schema().unwrap();
        assert_eq!(x.active_positions(&survey).collect::<Vec<_>>(), vec![1, 4]);
        assert!(matches!(schema.encode_row(&["r"]), Err(Error::Dimension { .. })));
        assert!(matches!(schema.encode_row(&["blue", "s"]), Err(Error::Data(_))));
    }

    #[test]
    fn missing_value_is_a_data_error() {
        let f = write_csv("color,size,label\nr,,0\n");
        match load_dataset(f.path(), &LoadOptions::default()) {
            Err(Error::Data(msg)) => assert!(msg.contains("size")),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn label_column_override_is_honored() {
        let f = write_csv("y,color,size\n0,r,s\n1,g,m\n");
        let opts = LoadOptions { schema: SchemaSpec::Infer, label_column: Some("y") };
        let (ds, cat) = load_dataset(f.path(), &opts).unwrap();
        assert_eq!(ds.schema.q(), 2);
        assert_eq!(cat.labels, vec!["0", "1"]);
    }

    proptest! {
        #[test]
        fn dense_expansion_has_one_hot_blocks(
            sizes in proptest::collection::vec(2usize..6, 1..8),
            seed in 0u64..1000,
        ) {
            let s = schema(&sizes);
            let mut state = seed;
            let modalities: Vec<usize> = sizes
                .iter()
                .map(|&m| (crate::rng::splitmix64(&mut state) % m as u64) as usize)
                .collect();
            let v = encode(&s, &modalities).unwrap();
            let dense = v.to_dense(&s);
            prop_assert_eq!(dense.iter().filter(|&&x| x == 1.0).count(), s.q());
            for block in 0..s.q() {
                let ones = (0..s.block_size(block))
                    .filter(|&j| dense[s.offset(block) + j] == 1.0)
                    .count();
                prop_assert_eq!(ones, 1);
            }
            let norm: f64 = v.normalized(&s).iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert_eq!(v.decode(), modalities.as_slice());
        }
    }
}
