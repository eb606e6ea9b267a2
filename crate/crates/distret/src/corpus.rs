//! Knowledge-base data model and ingestion.
//!
//! A corpus is a JSON Lines file, one function entry per line. Each entry
//! pairs free-text documentation with a structured [`DataProfile`] describing
//! the data the function expects (modality, feature type, distribution
//! assumption, dimensionality, missing-data handling, extra constraints).
//! Queries carry the same profile shape inferred from the user's dataset.
//!
//! Both sides are flattened to text with the same fusion rule before
//! encoding: the trimmed source text, a newline, the `[DATA PROFILE] `
//! sentinel, and the canonical single-line profile serialization.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;
use crate::Result;

/// Sentinel inserted between source text and the serialized profile so fused
/// strings stay auditable by eye.
pub const DATA_PROFILE_TAG: &str = "\n[DATA PROFILE] ";

/// Kind of data a function consumes or a query carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataModality {
    #[serde(rename = "tabular")]
    Tabular,
    #[serde(rename = "time-series")]
    TimeSeries,
    #[serde(rename = "text")]
    Text,
    #[serde(rename = "image")]
    Image,
    #[serde(rename = "graph")]
    Graph,
    #[serde(rename = "genomic/sequence")]
    GenomicSequence,
    #[serde(rename = "other")]
    Other,
}

impl DataModality {
    pub const ALL: [Self; 7] = [
        Self::Tabular,
        Self::TimeSeries,
        Self::Text,
        Self::Image,
        Self::Graph,
        Self::GenomicSequence,
        Self::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tabular => "tabular",
            Self::TimeSeries => "time-series",
            Self::Text => "text",
            Self::Image => "image",
            Self::Graph => "graph",
            Self::GenomicSequence => "genomic/sequence",
            Self::Other => "other",
        }
    }
}

/// Feature type of the expected data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureType {
    #[serde(rename = "numerical")]
    Numerical,
    #[serde(rename = "categorical")]
    Categorical,
    #[serde(rename = "mixed")]
    Mixed,
    #[serde(rename = "binary")]
    Binary,
    #[serde(rename = "text-token")]
    TextToken,
    #[serde(rename = "any")]
    Any,
}

impl FeatureType {
    pub const ALL: [Self; 6] = [
        Self::Numerical,
        Self::Categorical,
        Self::Mixed,
        Self::Binary,
        Self::TextToken,
        Self::Any,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Numerical => "numerical",
            Self::Categorical => "categorical",
            Self::Mixed => "mixed",
            Self::Binary => "binary",
            Self::TextToken => "text-token",
            Self::Any => "any",
        }
    }
}

/// Dimensionality regime of the expected data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimensionality {
    #[serde(rename = "low")]
    Low,
    #[serde(rename = "high")]
    High,
    #[serde(rename = "any")]
    Any,
}

impl Dimensionality {
    pub const ALL: [Self; 3] = [Self::Low, Self::High, Self::Any];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::High => "high",
            Self::Any => "any",
        }
    }
}

macro_rules! enum_from_str {
    ($ty:ty) => {
        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| {
                        let expected: Vec<&str> = <$ty>::ALL.iter().map(|v| v.as_str()).collect();
                        format!("unknown value {s:?} (expected one of {expected:?})")
                    })
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

enum_from_str!(DataModality);
enum_from_str!(FeatureType);
enum_from_str!(Dimensionality);

fn default_modality() -> DataModality {
    DataModality::Other
}
fn default_feature_type() -> FeatureType {
    FeatureType::Any
}
fn default_dimensionality() -> Dimensionality {
    Dimensionality::Any
}
fn default_token() -> String {
    "unknown".to_owned()
}

/// Structured constraint record attached to every corpus entry and query.
///
/// On the query side, fields that cannot be inferred from the user's data may
/// be omitted; they default to the neutral sentinels (`other`/`any`/
/// `"unknown"`/empty constraints). Corpus-side entries must spell out every
/// field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    #[serde(default = "default_modality")]
    pub data_modality: DataModality,
    #[serde(default = "default_feature_type")]
    pub feature_type: FeatureType,
    #[serde(default = "default_token")]
    pub distribution_assumption: String,
    #[serde(default = "default_dimensionality")]
    pub dimensionality: Dimensionality,
    #[serde(default = "default_token")]
    pub missing_data_handling: String,
    #[serde(default)]
    pub specific_constraints: Vec<String>,
}

impl Default for DataProfile {
    fn default() -> Self {
        Self {
            data_modality: default_modality(),
            feature_type: default_feature_type(),
            distribution_assumption: default_token(),
            dimensionality: default_dimensionality(),
            missing_data_handling: default_token(),
            specific_constraints: Vec::new(),
        }
    }
}

impl DataProfile {
    /// Deterministic single-line serialization in fixed field order.
    ///
    /// Fields render as `key: value` joined by ` | `; constraints are joined
    /// by `; `. Structurally equal profiles produce byte-identical output.
    pub fn to_canonical_text(&self) -> String {
        format!(
            "data_modality: {} | feature_type: {} | distribution_assumption: {} | \
             dimensionality: {} | missing_data_handling: {} | specific_constraints: {}",
            self.data_modality,
            self.feature_type,
            self.distribution_assumption,
            self.dimensionality,
            self.missing_data_handling,
            self.specific_constraints.join("; "),
        )
    }
}

/// One knowledge-base item: documentation text plus its data profile and
/// usage metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub id: u64,
    /// `"<PackageName>::<functionName>"`, unique within a corpus.
    pub fc_id: String,
    /// Natural-language documentation (package + function description).
    pub ground_truth_doc: String,
    pub data_profile: DataProfile,
    /// Function signature text.
    pub usage_guidance: String,
    /// May be empty.
    pub example_code: String,
    pub task_type: String,
    pub domain: String,
}

impl FunctionEntry {
    /// Package half of the fc_id.
    pub fn package_name(&self) -> &str {
        self.fc_id.split_once("::").map(|(p, _)| p).unwrap_or("")
    }

    /// Function half of the fc_id.
    pub fn function_name(&self) -> &str {
        self.fc_id.split_once("::").map(|(_, n)| n).unwrap_or("")
    }
}

/// A user request: free-text query plus the profile inferred from the
/// accompanying dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_text: String,
    pub query_profile: DataProfile,
}

impl QueryRecord {
    /// Build a record, rejecting query text that trims to nothing.
    pub fn new(query_text: impl Into<String>, query_profile: DataProfile) -> Result<Self> {
        let query_text = query_text.into();
        if query_text.trim().is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            query_text,
            query_profile,
        })
    }
}

/// Validated, immutable knowledge base. Iteration order is file order.
#[derive(Debug, Clone)]
pub struct Corpus {
    entries: Vec<FunctionEntry>,
    by_fc_id: HashMap<String, usize>,
}

impl Corpus {
    /// Assemble a corpus from entries, enforcing the per-entry schema rules
    /// and fc_id/id uniqueness. Entry `i` is reported as line `i + 1`.
    pub fn from_entries(entries: Vec<FunctionEntry>) -> Result<Self> {
        let mut corpus = Self {
            entries: Vec::with_capacity(entries.len()),
            by_fc_id: HashMap::with_capacity(entries.len()),
        };
        for (i, entry) in entries.into_iter().enumerate() {
            corpus.push_validated(entry, i + 1)?;
        }
        if corpus.entries.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(corpus)
    }

    fn push_validated(&mut self, entry: FunctionEntry, line: usize) -> Result<()> {
        validate_entry(&entry, line)?;
        if self.by_fc_id.contains_key(&entry.fc_id) {
            return Err(Error::DuplicateFcId {
                line,
                fc_id: entry.fc_id,
            });
        }
        if self.entries.iter().any(|e| e.id == entry.id) {
            return Err(Error::SchemaViolation {
                line,
                field: "id".into(),
                message: format!("duplicate id {}", entry.id),
            });
        }
        self.by_fc_id
            .insert(entry.fc_id.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    /// Load and validate a JSON Lines corpus file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file))
    }

    /// Load from any reader. Blank lines are skipped; line numbers are
    /// 1-based over the raw input.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let reader = BufReader::new(reader);
        let mut corpus = Self {
            entries: Vec::new(),
            by_fc_id: HashMap::new(),
        };
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let text = line.map_err(|e| Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
            if text.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(&text).map_err(|e| Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
            let entry = entry_from_value(&value, line_no)?;
            corpus.push_validated(entry, line_no)?;
        }
        if corpus.entries.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(corpus)
    }

    /// Serialize back to JSON Lines. Reloading the output yields a
    /// structurally equal corpus.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        self.write_jsonl(&mut writer)
            .map_err(|e| Error::io(path, e))
    }

    /// Write one JSON object per line to an arbitrary writer.
    pub fn write_jsonl(&self, writer: &mut impl Write) -> std::io::Result<()> {
        for entry in &self.entries {
            let line = serde_json::to_string(entry).expect("entry serializes");
            writer.write_all(line.as_bytes())?;
            writer.write_all(b"\n")?;
        }
        writer.flush()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FunctionEntry] {
        &self.entries
    }

    pub fn get(&self, fc_id: &str) -> Option<&FunctionEntry> {
        self.by_fc_id.get(fc_id).map(|&i| &self.entries[i])
    }

    pub fn index_of(&self, fc_id: &str) -> Option<usize> {
        self.by_fc_id.get(fc_id).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FunctionEntry> {
        self.entries.iter()
    }
}

fn validate_entry(entry: &FunctionEntry, line: usize) -> Result<()> {
    let violation = |field: &str, message: String| Error::SchemaViolation {
        line,
        field: field.into(),
        message,
    };
    let separators = entry.fc_id.matches("::").count();
    if separators != 1 {
        return Err(violation(
            "fc_id",
            format!(
                "expected exactly one \"::\" separator, found {separators} in {:?}",
                entry.fc_id
            ),
        ));
    }
    let (package, function) = entry.fc_id.split_once("::").expect("one separator");
    if package.is_empty() || function.is_empty() {
        return Err(violation(
            "fc_id",
            format!(
                "package and function names must be non-empty in {:?}",
                entry.fc_id
            ),
        ));
    }
    if entry.ground_truth_doc.trim().is_empty() {
        return Err(violation(
            "ground_truth_doc",
            "must be non-empty after trimming".into(),
        ));
    }
    Ok(())
}

/// Strict field-by-field validation of one corpus line. Unknown extra fields
/// are ignored; missing fields and out-of-enum values are errors naming the
/// line and field.
fn entry_from_value(value: &Value, line: usize) -> Result<FunctionEntry> {
    let obj = value.as_object().ok_or_else(|| Error::SchemaViolation {
        line,
        field: "<root>".into(),
        message: "line must be a JSON object".into(),
    })?;

    let violation = |field: &str, message: String| Error::SchemaViolation {
        line,
        field: field.into(),
        message,
    };
    let get = |field: &'static str| -> Result<&Value> {
        obj.get(field)
            .ok_or_else(|| violation(field, "missing field".into()))
    };
    let get_str = |field: &'static str| -> Result<String> {
        get(field)?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| violation(field, "must be a string".into()))
    };

    let id = get("id")?
        .as_u64()
        .ok_or_else(|| violation("id", "must be a non-negative integer".into()))?;

    let profile_value = get("data_profile")?;
    let profile_obj = profile_value
        .as_object()
        .ok_or_else(|| violation("data_profile", "must be an object".into()))?;
    let profile_str = |field: &'static str| -> Result<String> {
        let qualified = format!("data_profile.{field}");
        profile_obj
            .get(field)
            .ok_or_else(|| violation(&qualified, "missing field".into()))?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| violation(&qualified, "must be a string".into()))
    };
    let parse_enum = |field: &'static str,
                      raw: &str,
                      parse: &dyn Fn(&str) -> std::result::Result<(), String>|
     -> Result<()> {
        parse(raw).map_err(|message| violation(&format!("data_profile.{field}"), message))
    };

    let modality_raw = profile_str("data_modality")?;
    parse_enum("data_modality", &modality_raw, &|s| {
        DataModality::from_str(s).map(|_| ())
    })?;
    let feature_raw = profile_str("feature_type")?;
    parse_enum("feature_type", &feature_raw, &|s| {
        FeatureType::from_str(s).map(|_| ())
    })?;
    let dim_raw = profile_str("dimensionality")?;
    parse_enum("dimensionality", &dim_raw, &|s| {
        Dimensionality::from_str(s).map(|_| ())
    })?;

    let constraints_value = profile_obj
        .get("specific_constraints")
        .ok_or_else(|| violation("data_profile.specific_constraints", "missing field".into()))?;
    let constraints = constraints_value
        .as_array()
        .ok_or_else(|| {
            violation(
                "data_profile.specific_constraints",
                "must be an array of strings".into(),
            )
        })?
        .iter()
        .map(|v| {
            v.as_str().map(str::to_owned).ok_or_else(|| {
                violation(
                    "data_profile.specific_constraints",
                    "must be an array of strings".into(),
                )
            })
        })
        .collect::<Result<Vec<String>>>()?;

    let data_profile = DataProfile {
        data_modality: modality_raw.parse().expect("validated above"),
        feature_type: feature_raw.parse().expect("validated above"),
        distribution_assumption: profile_str("distribution_assumption")?,
        dimensionality: dim_raw.parse().expect("validated above"),
        missing_data_handling: profile_str("missing_data_handling")?,
        specific_constraints: constraints,
    };

    Ok(FunctionEntry {
        id,
        fc_id: get_str("fc_id")?,
        ground_truth_doc: get_str("ground_truth_doc")?,
        data_profile,
        usage_guidance: get_str("usage_guidance")?,
        example_code: get_str("example_code")?,
        task_type: get_str("task_type")?,
        domain: get_str("domain")?,
    })
}

/// Fuse documentation text with its profile: trimmed doc, the
/// [`DATA_PROFILE_TAG`] sentinel, then the canonical profile text.
pub fn fuse_document_text(entry: &FunctionEntry) -> String {
    fuse(&entry.ground_truth_doc, &entry.data_profile)
}

/// Same fusion rule applied to a query. Errors if the query text trims to
/// nothing.
pub fn fuse_query_text(record: &QueryRecord) -> Result<String> {
    if record.query_text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(fuse(&record.query_text, &record.query_profile))
}

fn fuse(text: &str, profile: &DataProfile) -> String {
    format!(
        "{}{}{}",
        text.trim(),
        DATA_PROFILE_TAG,
        profile.to_canonical_text()
    )
}

/// One line of a query batch file.
#[derive(Debug, Clone, Deserialize)]
struct QueryBatchLine {
    query: String,
    #[serde(default)]
    profile: DataProfile,
    #[serde(default)]
    ground_truth: Option<String>,
}

/// A parsed query batch row: the query record plus its optional ground truth.
#[derive(Debug, Clone)]
pub struct QueryBatchItem {
    pub record: QueryRecord,
    pub ground_truth: Option<String>,
}

/// Load a query batch: JSON Lines of `{"query", "profile", "ground_truth"?}`.
/// Absent profile fields take the neutral defaults.
pub fn load_query_batch(path: impl AsRef<Path>) -> Result<Vec<QueryBatchItem>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    query_batch_from_reader(BufReader::new(file))
}

/// Reader-based variant of [`load_query_batch`].
pub fn query_batch_from_reader(reader: impl Read) -> Result<Vec<QueryBatchItem>> {
    let reader = BufReader::new(reader);
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: QueryBatchLine =
            serde_json::from_str(&text).map_err(|e| Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        let record =
            QueryRecord::new(parsed.query, parsed.profile).map_err(|_| Error::SchemaViolation {
                line: line_no,
                field: "query".into(),
                message: "must be non-empty after trimming".into(),
            })?;
        items.push(QueryBatchItem {
            record,
            ground_truth: parsed.ground_truth,
        });
    }
    Ok(items)
}
