//! Exact top-k retrieval over precomputed, L2-normalized embeddings.
//!
//! Document vectors are normalized once at build time, so the inner product
//! with a normalized query equals the cosine of the original vectors and
//! maximum-inner-product search is exact cosine search. Flat scan with a
//! bounded heap; at knowledge-base scale exactness is cheap and keeps every
//! evaluation number deterministic.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{fuse_document_text, Corpus};
use crate::encoder::{Embedding, Matrix, TextEncoder, NORM_EPSILON};
use crate::error::Error;
use crate::persist;
use crate::Result;

/// Immutable store of unit-norm document embeddings, aligned with their
/// fc_ids in corpus order.
#[derive(Debug, Clone)]
pub struct VectorStore {
    dim: usize,
    ids: Vec<String>,
    matrix: Matrix,
    id_index: HashMap<String, usize>,
}

/// One retrieval hit. Within a result list ranks run 1..k and scores are
/// non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub rank: usize,
    pub fc_id: String,
    /// Cosine similarity between the query and the stored document.
    pub score: f64,
}

impl VectorStore {
    /// Assemble a store from raw rows, normalizing each to unit length.
    /// Errors name the fc_id of any row without a usable direction.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::invalid("ids and rows must have equal length"));
        }
        let mut matrix = Matrix::zeros(rows.len(), dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row for {:?} has dimension {}, expected {dim}",
                    ids[i],
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("embedding for {:?}", ids[i]),
                });
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < NORM_EPSILON {
                return Err(Error::ZeroNorm {
                    context: format!("embedding for {:?}", ids[i]),
                });
            }
            for (j, v) in row.iter().enumerate() {
                matrix.set(i, j, v / norm);
            }
        }
        let mut id_index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate id {id:?} in store")));
            }
        }
        Ok(Self {
            dim,
            ids,
            matrix,
            id_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, fc_id: &str) -> bool {
        self.id_index.contains_key(fc_id)
    }

    /// The normalized embedding row for position `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    /// Persist as a JSON header line, a JSON id-array line, and the raw
    /// matrix block. Round-trips are bit-exact.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        let header = IndexHeader {
            format: INDEX_FORMAT.into(),
            version: INDEX_VERSION,
            dim: self.dim,
            count: self.ids.len(),
            ids_checksum: format!("{:016x}", ids_checksum(&self.ids)),
        };
        persist::write_json_line(&mut writer, &header, path)?;
        persist::write_json_line(&mut writer, &self.ids, path)?;
        persist::write_f64_block(&mut writer, self.matrix.as_slice(), path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let header: IndexHeader = persist::read_json_line(&mut reader, path)?;
        if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
            return Err(Error::FileFormat {
                path: path.to_owned(),
                message: format!(
                    "expected {INDEX_FORMAT} v{INDEX_VERSION}, found {} v{}",
                    header.format, header.version
                ),
            });
        }
        let ids: Vec<String> = persist::read_json_line(&mut reader, path)?;
        if ids.len() != header.count {
            return Err(Error::FileFormat {
                path: path.to_owned(),
                message: format!("header count {} but {} ids", header.count, ids.len()),
            });
        }
        let checksum = format!("{:016x}", ids_checksum(&ids));
        if checksum != header.ids_checksum {
            return Err(Error::FileFormat {
                path: path.to_owned(),
                message: "id checksum mismatch".into(),
            });
        }
        let data = persist::read_f64_block(&mut reader, header.count * header.dim, path)?;
        let matrix = Matrix::from_vec(header.count, header.dim, data);
        let mut id_index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            id_index.insert(id.clone(), i);
        }
        Ok(Self {
            dim: header.dim,
            ids,
            matrix,
            id_index,
        })
    }
}

const INDEX_FORMAT: &str = "distret-index";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
    dim: usize,
    count: usize,
    ids_checksum: String,
}

/// FNV-1a over every id with a newline separator, so id order matters.
fn ids_checksum(ids: &[String]) -> u64 {
    let mut bytes = Vec::new();
    for id in ids {
        bytes.extend_from_slice(id.as_bytes());
        bytes.push(b'\n');
    }
    persist::fnv1a64(&bytes)
}

/// Encode every corpus entry's fused document text and build the normalized
/// store, preserving corpus order.
pub fn build_index<E: TextEncoder>(corpus: &Corpus, encoder: &E) -> Result<VectorStore> {
    let mut ids = Vec::with_capacity(corpus.len());
    let mut rows = Vec::with_capacity(corpus.len());
    for entry in corpus.iter() {
        let fused = fuse_document_text(entry);
        let embedding = encoder.encode_text(&fused).map_err(|e| match e {
            Error::EmptyInput => Error::ZeroNorm {
                context: format!("embedding for {:?}", entry.fc_id),
            },
            other => other,
        })?;
        ids.push(entry.fc_id.clone());
        rows.push(embedding.values);
    }
    VectorStore::from_rows(ids, rows, encoder.embed_dim())
}

/// Candidate ordering: higher score first, ties broken by ascending
/// lexicographic fc_id.
fn better(score_a: f64, id_a: &str, score_b: f64, id_b: &str) -> bool {
    match score_a.partial_cmp(&score_b).expect("finite scores") {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => id_a < id_b,
    }
}

/// Max-heap entry ordered so the WORST candidate is at the top, letting a
/// bounded heap keep the best k seen so far.
struct HeapEntry {
    score: f64,
    idx: usize,
}

struct HeapOrd<'a> {
    ids: &'a [String],
    entry: HeapEntry,
}

impl PartialEq for HeapOrd<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapOrd<'_> {}
impl PartialOrd for HeapOrd<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapOrd<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: the heap's max is the worst candidate
        if better(
            self.entry.score,
            &self.ids[self.entry.idx],
            other.entry.score,
            &self.ids[other.entry.idx],
        ) {
            Ordering::Less
        } else if better(
            other.entry.score,
            &self.ids[other.entry.idx],
            self.entry.score,
            &self.ids[self.entry.idx],
        ) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }
}

/// Exact top-min(k, |store|) by inner product against the normalized query.
/// Scores are reported as cosine. Ties break by ascending fc_id.
pub fn search(store: &VectorStore, query: &Embedding, k: usize) -> Result<Vec<RankedResult>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if query.dim() != store.dim() {
        return Err(Error::invalid(format!(
            "query dimension {} does not match store dimension {}",
            query.dim(),
            store.dim()
        )));
    }
    if query.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "query embedding".into(),
        });
    }
    let norm = query.norm();
    if norm < NORM_EPSILON {
        return Err(Error::ZeroNorm {
            context: "query embedding".into(),
        });
    }
    let normalized: Vec<f64> = query.values.iter().map(|v| v / norm).collect();

    let k = k.min(store.len());
    let mut heap: BinaryHeap<HeapOrd<'_>> = BinaryHeap::with_capacity(k + 1);
    for idx in 0..store.len() {
        let row = store.row(idx);
        let score: f64 = row.iter().zip(&normalized).map(|(a, b)| a * b).sum();
        if heap.len() < k {
            heap.push(HeapOrd {
                ids: &store.ids,
                entry: HeapEntry { score, idx },
            });
        } else if let Some(worst) = heap.peek() {
            if better(
                score,
                &store.ids[idx],
                worst.entry.score,
                &store.ids[worst.entry.idx],
            ) {
                heap.pop();
                heap.push(HeapOrd {
                    ids: &store.ids,
                    entry: HeapEntry { score, idx },
                });
            }
        }
    }

    let mut selected: Vec<HeapEntry> = heap.into_iter().map(|h| h.entry).collect();
    selected.sort_by(|a, b| {
        if better(a.score, &store.ids[a.idx], b.score, &store.ids[b.idx]) {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    });
    Ok(selected
        .into_iter()
        .enumerate()
        .map(|(i, e)| RankedResult {
            rank: i + 1,
            fc_id: store.ids[e.idx].clone(),
            score: e.score,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn store_from(ids: &[&str], rows: Vec<Vec<f64>>) -> VectorStore {
        VectorStore::from_rows(ids.iter().map(|s| s.to_string()).collect(), rows, 3).unwrap()
    }

    fn random_unit(rng: &mut SplitMix64, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.next_symmetric(1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                return v.iter().map(|x| x / norm).collect();
            }
        }
    }

    /// Independent reference: score every row with a plain cosine loop and
    /// sort with the documented tie rule.
    fn brute_force(store: &VectorStore, query: &[f64]) -> Vec<(String, f64)> {
        let qn = query.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut scored: Vec<(String, f64)> = (0..store.len())
            .map(|i| {
                let row = store.row(i);
                let dot: f64 = row.iter().zip(query).map(|(a, b)| a * b).sum();
                let rn = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                (store.ids()[i].clone(), dot / (qn * rn))
            })
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        scored
    }

    #[test]
    fn rows_are_unit_norm_and_order_preserved() {
        let store = store_from(
            &["A::a", "B::b", "C::c"],
            vec![
                vec![3.0, 0.0, 0.0],
                vec![0.0, 5.0, 0.0],
                vec![1.0, 1.0, 1.0],
            ],
        );
        assert_eq!(store.len(), 3);
        assert_eq!(store.ids()[1], "B::b");
        for i in 0..3 {
            let norm: f64 = store.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_row_names_its_id() {
        let err = VectorStore::from_rows(
            vec!["A::a".into(), "Bad::zero".into()],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
            3,
        )
        .unwrap_err();
        match err {
            Error::ZeroNorm { context } => assert!(context.contains("Bad::zero")),
            other => panic!("expected zero-norm error, got {other:?}"),
        }
    }

    #[test]
    fn self_retrieval_ranks_first_with_unit_score() {
        let store = store_from(
            &["A::a", "B::b", "C::c"],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        );
        let q = Embedding {
            values: vec![0.0, 2.0, 0.0],
        };
        let hits = search(&store, &q, 2).unwrap();
        assert_eq!(hits[0].fc_id, "B::b");
        assert_eq!(hits[0].rank, 1);
        assert!((hits[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_break_by_ascending_fc_id() {
        let store = store_from(
            &["B::g", "A::f"],
            vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        );
        let q = Embedding {
            values: vec![1.0, 0.0, 0.0],
        };
        let hits = search(&store, &q, 2).unwrap();
        assert_eq!(hits[0].fc_id, "A::f");
        assert_eq!(hits[1].fc_id, "B::g");
    }

    #[test]
    fn k_is_clamped_to_store_size() {
        let store = store_from(
            &["A::a", "B::b", "C::c"],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        );
        let q = Embedding {
            values: vec![1.0, 1.0, 1.0],
        };
        assert_eq!(search(&store, &q, 8).unwrap().len(), 3);
        assert!(matches!(
            search(&store, &q, 0),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn zero_norm_query_is_rejected() {
        let store = store_from(&["A::a"], vec![vec![1.0, 0.0, 0.0]]);
        let q = Embedding {
            values: vec![0.0, 0.0, 0.0],
        };
        assert!(matches!(search(&store, &q, 1), Err(Error::ZeroNorm { .. })));
    }

    #[test]
    fn search_matches_brute_force_on_random_stores() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..30 {
            let n = 2 + rng.next_below(60);
            let dim = 2 + rng.next_below(16);
            let ids: Vec<String> = (0..n).map(|i| format!("P{i:03}::f{trial}")).collect();
            let rows: Vec<Vec<f64>> = (0..n).map(|_| random_unit(&mut rng, dim)).collect();
            let store = VectorStore::from_rows(ids, rows, dim).unwrap();
            let query = random_unit(&mut rng, dim);
            let hits = search(
                &store,
                &Embedding {
                    values: query.clone(),
                },
                n,
            )
            .unwrap();
            let reference = brute_force(&store, &query);
            for (hit, (ref_id, ref_score)) in hits.iter().zip(&reference) {
                assert_eq!(&hit.fc_id, ref_id);
                assert!((hit.score - ref_score).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn top_k_is_a_prefix_of_top_k_plus_one() {
        let mut rng = SplitMix64::new(5);
        let n = 40;
        let dim = 8;
        let ids: Vec<String> = (0..n).map(|i| format!("P{i:02}::f")).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_unit(&mut rng, dim)).collect();
        let store = VectorStore::from_rows(ids, rows, dim).unwrap();
        let q = Embedding {
            values: random_unit(&mut rng, dim),
        };
        for k in 1..n {
            let small = search(&store, &q, k).unwrap();
            let large = search(&store, &q, k + 1).unwrap();
            assert_eq!(&large[..k], &small[..]);
        }
    }

    #[test]
    fn full_scale_corpus_builds_one_row_per_entry() {
        use crate::encoder::{EncoderConfig, HashedEncoder};
        let corpus = crate::synthetic::demo_corpus(8191, 1).unwrap();
        let encoder = HashedEncoder::init(EncoderConfig::default()).unwrap();
        let store = build_index(&corpus, &encoder).unwrap();
        assert_eq!(store.len(), 8191);
        assert_eq!(store.dim(), 64);
    }

    #[test]
    fn store_round_trip_is_bit_exact() {
        let mut rng = SplitMix64::new(77);
        let ids: Vec<String> = (0..10).map(|i| format!("Pkg{i}::fn{i}")).collect();
        let rows: Vec<Vec<f64>> = (0..10).map(|_| random_unit(&mut rng, 6)).collect();
        let store = VectorStore::from_rows(ids, rows, 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        store.save(&path).unwrap();
        let loaded = VectorStore::load(&path).unwrap();
        assert_eq!(loaded.ids(), store.ids());
        for i in 0..store.len() {
            for (a, b) in store.row(i).iter().zip(loaded.row(i)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        let path2 = dir.path().join("index2.bin");
        loaded.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn corrupted_checksum_is_detected() {
        let store = store_from(&["A::a"], vec![vec![1.0, 0.0, 0.0]]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        store.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // flip a byte inside the id line
        let pos = bytes.iter().position(|&b| b == b'A').unwrap();
        bytes[pos] = b'Z';
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            VectorStore::load(&path),
            Err(Error::FileFormat { .. })
        ));
    }
}
