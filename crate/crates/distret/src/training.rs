//! Contrastive fine-tuning of the hashed encoder.
//!
//! Each batch row pairs a query with its ground-truth function; every other
//! function in the batch serves as a negative. Row-wise softmax over
//! temperature-scaled cosines gives the InfoNCE loss, averaged over the
//! batch. Gradients are derived analytically through the softmax, the cosine,
//! and the linear encoder; the temperature is learned in log space so it
//! stays positive by construction. Parameters follow AdamW with decoupled
//! weight decay applied to the projection only.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    fuse_document_text, fuse_query_text, query_batch_from_reader, Corpus, QueryRecord,
};
use crate::encoder::{
    encode, Checkpoint, EncoderConfig, EncoderParams, HashedEncoder, Matrix, SparseFeatures,
    NORM_EPSILON,
};
use crate::error::Error;
use crate::evaluation::{ndcg_at_k, recall_at_k};
use crate::index::{search, VectorStore};
use crate::rng::SplitMix64;
use crate::Result;

/// One supervision record: a query and the fc_id it should retrieve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTriple {
    pub query: QueryRecord,
    pub target_fc_id: String,
}

/// Training hyperparameters. Fields omitted from a JSON config take their
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// In-batch negatives need at least 2 rows.
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Decoupled decay, applied to the projection and never to the
    /// temperature.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Initial temperature; optimized as log(tau).
    pub tau_init: f64,
    /// Fraction of triples used for training; the rest is held out.
    pub split_fraction: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            epochs: 100,
            learning_rate: 1e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            tau_init: 0.07,
            split_fraction: 0.85,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch_size must be at least 2"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::invalid("weight_decay must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if !self.tau_init.is_finite() || self.tau_init <= 0.0 {
            return Err(Error::invalid("tau_init must be positive"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid("split_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Mutable training state: parameters, log-temperature, and AdamW moments.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: EncoderParams,
    /// tau = exp(log_tau) > 0 for any real value.
    pub log_tau: f64,
    pub step_count: u64,
    moment1: Matrix,
    moment2: Matrix,
    tau_moment1: f64,
    tau_moment2: f64,
}

impl TrainState {
    pub fn init(encoder_config: &EncoderConfig, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let params = EncoderParams::init(encoder_config)?;
        let (rows, cols) = (params.embed_dim(), params.hash_dim());
        Ok(Self {
            params,
            log_tau: config.tau_init.ln(),
            step_count: 0,
            moment1: Matrix::zeros(rows, cols),
            moment2: Matrix::zeros(rows, cols),
            tau_moment1: 0.0,
            tau_moment2: 0.0,
        })
    }

    pub fn tau(&self) -> f64 {
        self.log_tau.exp()
    }
}

/// Gradients of the batch loss with respect to the projection and log(tau).
#[derive(Debug, Clone)]
pub struct Gradients {
    pub projection: Matrix,
    pub log_tau: f64,
}

/// Loss value and its partials with respect to the similarity matrix and tau.
#[derive(Debug, Clone)]
pub struct InfoNce {
    pub loss: f64,
    pub grad_sim: Matrix,
    pub grad_tau: f64,
}

/// Deterministic seeded shuffle, then the first `floor(fraction * M)` triples
/// train and the rest are held out; both halves are clamped non-empty.
pub fn split_dataset(
    triples: &[TrainingTriple],
    config: &TrainConfig,
) -> Result<(Vec<TrainingTriple>, Vec<TrainingTriple>)> {
    config.validate()?;
    let m = triples.len();
    if m < 2 {
        return Err(Error::invalid(
            "splitting requires at least 2 triples so both halves are non-empty",
        ));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = SplitMix64::fork(config.shuffle_seed, 0x5B11);
    rng.shuffle(&mut order);
    let n_train = ((config.split_fraction * m as f64).floor() as usize).clamp(1, m - 1);
    let train = order[..n_train]
        .iter()
        .map(|&i| triples[i].clone())
        .collect();
    let test = order[n_train..]
        .iter()
        .map(|&i| triples[i].clone())
        .collect();
    Ok((train, test))
}

struct BatchForward {
    q_emb: Matrix,
    d_emb: Matrix,
    q_norm: Vec<f64>,
    d_norm: Vec<f64>,
    sim: Matrix,
}

#[allow(clippy::needless_range_loop)] // index math mirrors the similarity formula
fn batch_forward(
    params: &EncoderParams,
    queries: &[SparseFeatures],
    docs: &[SparseFeatures],
) -> Result<BatchForward> {
    let n = queries.len();
    if n == 0 {
        return Err(Error::invalid("batch must be non-empty"));
    }
    if docs.len() != n {
        return Err(Error::invalid("query and document counts differ"));
    }
    let m = params.embed_dim();
    let mut q_emb = Matrix::zeros(n, m);
    let mut d_emb = Matrix::zeros(n, m);
    let mut q_norm = vec![0.0; n];
    let mut d_norm = vec![0.0; n];
    for (side, feats, emb, norms) in [
        ("query", queries, &mut q_emb, &mut q_norm),
        ("document", docs, &mut d_emb, &mut d_norm),
    ] {
        for (i, f) in feats.iter().enumerate() {
            let e = encode(params, f).map_err(|err| match err {
                Error::EmptyInput => Error::ZeroNorm {
                    context: format!("{side} row {i}"),
                },
                other => other,
            })?;
            let norm = e.norm();
            if norm < NORM_EPSILON {
                return Err(Error::ZeroNorm {
                    context: format!("{side} row {i}"),
                });
            }
            emb.row_mut(i).copy_from_slice(&e.values);
            norms[i] = norm;
        }
    }
    let mut sim = Matrix::zeros(n, n);
    for i in 0..n {
        let u = q_emb.row(i);
        for j in 0..n {
            let v = d_emb.row(j);
            let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            sim.set(i, j, dot / (q_norm[i] * d_norm[j]));
        }
    }
    Ok(BatchForward {
        q_emb,
        d_emb,
        q_norm,
        d_norm,
        sim,
    })
}

/// Pairwise cosine similarities for a batch; `sim[i][j]` scores query `i`
/// against document `j`, so the diagonal holds the positives.
pub fn batch_similarity_matrix(
    params: &EncoderParams,
    queries: &[SparseFeatures],
    docs: &[SparseFeatures],
) -> Result<Matrix> {
    Ok(batch_forward(params, queries, docs)?.sim)
}

/// Row-wise softmax cross-entropy over `sim / tau` with the diagonal as the
/// target, averaged over rows. Stabilized by subtracting each row's maximum
/// before exponentiation. Also returns d(loss)/d(sim) and d(loss)/d(tau).
pub fn info_nce_loss(sim: &Matrix, tau: f64) -> Result<InfoNce> {
    let n = sim.rows();
    if n == 0 || sim.cols() != n {
        return Err(Error::invalid(
            "similarity matrix must be square and non-empty",
        ));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau must be positive and finite"));
    }
    if !sim.is_finite() {
        return Err(Error::NonFinite {
            context: "similarity matrix".into(),
        });
    }
    let mut loss_sum = 0.0;
    let mut grad_sim = Matrix::zeros(n, n);
    let mut grad_tau = 0.0;
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        let row = sim.row(i);
        let max_z = row
            .iter()
            .map(|s| s / tau)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum_exp = 0.0;
        for &s in row {
            sum_exp += ((s / tau) - max_z).exp();
        }
        let lse = max_z + sum_exp.ln();
        loss_sum += lse - row[i] / tau;
        let grad_row = grad_sim.row_mut(i);
        for (j, &s) in row.iter().enumerate() {
            let z = s / tau;
            let p = (z - lse).exp();
            let delta = if i == j { 1.0 } else { 0.0 };
            let grad_z = (p - delta) * inv_n;
            grad_row[j] = grad_z / tau;
            grad_tau -= grad_z * s / (tau * tau);
        }
    }
    Ok(InfoNce {
        loss: loss_sum * inv_n,
        grad_sim,
        grad_tau,
    })
}

/// Batch loss and its gradients, chained analytically through the cosine,
/// the linear encoder, and log(tau).
pub fn loss_gradients(
    params: &EncoderParams,
    log_tau: f64,
    queries: &[SparseFeatures],
    docs: &[SparseFeatures],
) -> Result<(f64, Gradients)> {
    let tau = log_tau.exp();
    let fwd = batch_forward(params, queries, docs)?;
    let nce = info_nce_loss(&fwd.sim, tau)?;

    let n = queries.len();
    let m = params.embed_dim();
    let mut d_queries = Matrix::zeros(n, m);
    let mut d_docs = Matrix::zeros(n, m);
    for i in 0..n {
        let u = fwd.q_emb.row(i);
        let nu = fwd.q_norm[i];
        let mut du = vec![0.0; m];
        for j in 0..n {
            let g = nce.grad_sim.get(i, j);
            if g == 0.0 {
                continue;
            }
            let v = fwd.d_emb.row(j);
            let nv = fwd.d_norm[j];
            let s = fwd.sim.get(i, j);
            let inv = 1.0 / (nu * nv);
            let dv = d_docs.row_mut(j);
            for r in 0..m {
                du[r] += g * (v[r] * inv - s * u[r] / (nu * nu));
                dv[r] += g * (u[r] * inv - s * v[r] / (nv * nv));
            }
        }
        d_queries.row_mut(i).copy_from_slice(&du);
    }

    // back through the linear map: sparse outer products
    let mut projection = Matrix::zeros(m, params.hash_dim());
    for (emb_grad, feats) in [(&d_queries, queries), (&d_docs, docs)] {
        for (i, f) in feats.iter().enumerate() {
            let row_grad = emb_grad.row(i);
            for (idx, val) in f.iter() {
                for (r, &g) in row_grad.iter().enumerate() {
                    let cell = r * params.hash_dim() + idx;
                    projection.as_mut_slice()[cell] += g * val;
                }
            }
        }
    }

    // d tau / d log_tau = tau
    let grad_log_tau = nce.grad_tau * tau;
    Ok((
        nce.loss,
        Gradients {
            projection,
            log_tau: grad_log_tau,
        },
    ))
}

/// One AdamW update with bias correction. Decoupled weight decay touches the
/// projection only. Gradients are validated first; on error the state is
/// unchanged.
pub fn adamw_step(state: &mut TrainState, grads: &Gradients, config: &TrainConfig) -> Result<()> {
    config.validate()?;
    if grads.projection.rows() != state.params.embed_dim()
        || grads.projection.cols() != state.params.hash_dim()
    {
        return Err(Error::invalid("gradient shape does not match parameters"));
    }
    if !grads.projection.is_finite() || !grads.log_tau.is_finite() {
        return Err(Error::NonFinite {
            context: "gradients".into(),
        });
    }
    let t = state.step_count + 1;
    let bias1 = 1.0 - config.beta1.powf(t as f64);
    let bias2 = 1.0 - config.beta2.powf(t as f64);
    let lr = config.learning_rate;

    let params = state.params.projection.as_mut_slice();
    let m1 = state.moment1.as_mut_slice();
    let m2 = state.moment2.as_mut_slice();
    for (idx, &g) in grads.projection.as_slice().iter().enumerate() {
        m1[idx] = config.beta1 * m1[idx] + (1.0 - config.beta1) * g;
        m2[idx] = config.beta2 * m2[idx] + (1.0 - config.beta2) * g * g;
        let m_hat = m1[idx] / bias1;
        let v_hat = m2[idx] / bias2;
        params[idx] -=
            lr * (m_hat / (v_hat.sqrt() + config.epsilon) + config.weight_decay * params[idx]);
    }

    let g = grads.log_tau;
    state.tau_moment1 = config.beta1 * state.tau_moment1 + (1.0 - config.beta1) * g;
    state.tau_moment2 = config.beta2 * state.tau_moment2 + (1.0 - config.beta2) * g * g;
    let m_hat = state.tau_moment1 / bias1;
    let v_hat = state.tau_moment2 / bias2;
    state.log_tau -= lr * m_hat / (v_hat.sqrt() + config.epsilon);

    state.step_count = t;
    Ok(())
}

/// One epoch line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    #[serde(rename = "ndcg@10")]
    pub ndcg_at_10: f64,
    #[serde(rename = "recall@1")]
    pub recall_at_1: f64,
}

/// Result of a training run: the best checkpoint by held-out NDCG@10 and the
/// per-epoch log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochRecord>,
}

/// Full training loop.
///
/// The triples are split with the seeded 85/15 rule, shuffled again each
/// epoch, and consumed in batches; a trailing batch with fewer than 2 rows is
/// dropped because it carries no negatives. After every epoch the held-out
/// split is evaluated against the whole corpus and the checkpoint with the
/// best NDCG@10 is retained (ties keep the earliest epoch). With zero epochs
/// the returned checkpoint is the untouched initialization.
pub fn train(
    corpus: &Corpus,
    triples: &[TrainingTriple],
    encoder_config: &EncoderConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    encoder_config.validate()?;
    config.validate()?;
    if triples.is_empty() {
        return Err(Error::invalid("training requires at least one triple"));
    }

    // resolve targets and featurize both sides once; parameters change during
    // training, features never do
    let mut doc_features = Vec::with_capacity(corpus.len());
    for entry in corpus.iter() {
        let features = featurize_text(encoder_config, &fuse_document_text(entry));
        if features.is_empty() {
            return Err(Error::ZeroNorm {
                context: format!("embedding for {:?}", entry.fc_id),
            });
        }
        doc_features.push(features);
    }

    let state = TrainState::init(encoder_config, config)?;
    if config.epochs == 0 {
        return finish(corpus, encoder_config, state, Vec::new(), None);
    }

    let (train_split, test_split) = split_dataset(triples, config)?;
    let train_targets = resolve_targets(corpus, &train_split)?;
    let test_targets = resolve_targets(corpus, &test_split)?;
    let train_features = featurize_queries(encoder_config, &train_split)?;
    let test_features = featurize_queries(encoder_config, &test_split)?;

    let mut state = state;
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, TrainState)> = None;
    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_split.len()).collect();
        let mut rng = SplitMix64::fork(config.shuffle_seed, 0xE90C ^ epoch as u64);
        rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut rows_seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let queries: Vec<SparseFeatures> =
                chunk.iter().map(|&i| train_features[i].clone()).collect();
            let docs: Vec<SparseFeatures> = chunk
                .iter()
                .map(|&i| doc_features[train_targets[i]].clone())
                .collect();
            let (loss, grads) = loss_gradients(&state.params, state.log_tau, &queries, &docs)?;
            adamw_step(&mut state, &grads, config)?;
            loss_sum += loss * chunk.len() as f64;
            rows_seen += chunk.len();
        }
        if rows_seen == 0 {
            return Err(Error::invalid(
                "training split cannot form a batch of at least 2 rows",
            ));
        }

        let (recall1, ndcg10) = held_out_metrics(
            corpus,
            &doc_features,
            &state.params,
            &test_features,
            &test_targets,
        )?;
        log.push(EpochRecord {
            epoch,
            loss: loss_sum / rows_seen as f64,
            ndcg_at_10: ndcg10,
            recall_at_1: recall1,
        });
        let improved = best
            .as_ref()
            .is_none_or(|(best_ndcg, _)| ndcg10 > *best_ndcg);
        if improved {
            best = Some((ndcg10, state.clone()));
        }
    }

    finish(corpus, encoder_config, state, log, best)
}

fn finish(
    _corpus: &Corpus,
    encoder_config: &EncoderConfig,
    fallback: TrainState,
    log: Vec<EpochRecord>,
    best: Option<(f64, TrainState)>,
) -> Result<TrainOutcome> {
    let state = best.map(|(_, s)| s).unwrap_or(fallback);
    let encoder = HashedEncoder::new(encoder_config.clone(), state.params)?;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            encoder,
            log_tau: state.log_tau,
            step_count: state.step_count,
        },
        log,
    })
}

fn featurize_text(config: &EncoderConfig, text: &str) -> SparseFeatures {
    crate::encoder::featurize(&crate::encoder::tokenize(text), config)
}

fn featurize_queries(
    config: &EncoderConfig,
    triples: &[TrainingTriple],
) -> Result<Vec<SparseFeatures>> {
    triples
        .iter()
        .map(|t| {
            let fused = fuse_query_text(&t.query)?;
            let features = featurize_text(config, &fused);
            if features.is_empty() {
                return Err(Error::EmptyInput);
            }
            Ok(features)
        })
        .collect()
}

fn resolve_targets(corpus: &Corpus, triples: &[TrainingTriple]) -> Result<Vec<usize>> {
    triples
        .iter()
        .map(|t| {
            corpus
                .index_of(&t.target_fc_id)
                .ok_or_else(|| Error::UnresolvedTarget {
                    fc_id: t.target_fc_id.clone(),
                })
        })
        .collect()
}

/// Recall@1 and NDCG@10 of the held-out split against the whole corpus under
/// the current parameters.
fn held_out_metrics(
    corpus: &Corpus,
    doc_features: &[SparseFeatures],
    params: &EncoderParams,
    query_features: &[SparseFeatures],
    targets: &[usize],
) -> Result<(f64, f64)> {
    let ids: Vec<String> = corpus.iter().map(|e| e.fc_id.clone()).collect();
    let rows: Vec<Vec<f64>> = doc_features
        .iter()
        .map(|f| encode(params, f).map(|e| e.values))
        .collect::<Result<_>>()?;
    let store = VectorStore::from_rows(ids, rows, params.embed_dim())?;
    let mut recall_sum = 0.0;
    let mut ndcg_sum = 0.0;
    for (features, &target) in query_features.iter().zip(targets) {
        let embedding = encode(params, features)?;
        let results = search(&store, &embedding, 10)?;
        let gt = &corpus.entries()[target].fc_id;
        recall_sum += recall_at_k(&results, gt, 1);
        ndcg_sum += ndcg_at_k(&results, gt, 10);
    }
    let n = query_features.len() as f64;
    Ok((recall_sum / n, ndcg_sum / n))
}

// ---------------------------------------------------------------------------
// synthetic query generation
// ---------------------------------------------------------------------------

/// Render one of five query styles (each with two surface forms) for an
/// entry. Every style embeds the task type and profile values; none mentions
/// the package or function name.
fn render_query(entry: &crate::corpus::FunctionEntry, variant: usize) -> String {
    let p = &entry.data_profile;
    let task = &entry.task_type;
    let constraints = if p.specific_constraints.is_empty() {
        "none".to_string()
    } else {
        p.specific_constraints.join("; ")
    };
    match variant % 10 {
        0 => format!(
            "I am working with a {}-dimensional {} dataset of {} features that follows a {} \
             distribution; missing data handling is {}. I need an approach for {}. Constraints: {}.",
            p.dimensionality,
            p.data_modality,
            p.feature_type,
            p.distribution_assumption,
            p.missing_data_handling,
            task,
            constraints
        ),
        1 => format!(
            "How can I perform {} when my {} data has {} features and a {} distribution?",
            task, p.data_modality, p.feature_type, p.distribution_assumption
        ),
        2 => format!(
            "Help me find a tool for {}; the data is {}, {}, {} distributed, {}-dimensional, \
             missing handling {}.",
            task,
            p.data_modality,
            p.feature_type,
            p.distribution_assumption,
            p.dimensionality,
            p.missing_data_handling
        ),
        3 => format!(
            "Find a routine for {}. Data Information: modality={}, features={}, distribution={}, \
             dimensionality={}, missing={}, constraints={}.",
            task,
            p.data_modality,
            p.feature_type,
            p.distribution_assumption,
            p.dimensionality,
            p.missing_data_handling,
            constraints
        ),
        4 => format!(
            "{} {} {} {}-dimensional {}",
            task, p.distribution_assumption, p.data_modality, p.dimensionality, p.feature_type
        ),
        5 => format!(
            "We collected a {} dataset with {} features, {} distributed and {}-dimensional; \
             missing values policy: {}. Looking for a method that performs {}. Constraints: {}.",
            p.data_modality,
            p.feature_type,
            p.distribution_assumption,
            p.dimensionality,
            p.missing_data_handling,
            task,
            constraints
        ),
        6 => format!(
            "What is the right way to do {} for {}-dimensional {} data with {} values?",
            task, p.dimensionality, p.data_modality, p.distribution_assumption
        ),
        7 => format!(
            "I need a way to run {} on {} {} data that is {} and {}-dimensional.",
            task, p.feature_type, p.data_modality, p.distribution_assumption, p.dimensionality
        ),
        8 => format!("Task: {}. Data Information: {}.", task, p.to_canonical_text()),
        _ => format!(
            "{} for {} {} data",
            task, p.distribution_assumption, p.data_modality
        ),
    }
}

/// Generate `per_entry` template queries for every corpus entry. Queries
/// cycle deterministically through the style bank with a seeded per-entry
/// offset; each query carries its entry's profile and targets its entry.
pub fn generate_synthetic_triples(
    corpus: &Corpus,
    per_entry: usize,
    seed: u64,
) -> Result<Vec<TrainingTriple>> {
    if per_entry == 0 {
        return Err(Error::invalid("per_entry must be positive"));
    }
    let mut rng = SplitMix64::fork(seed, 0x9E4);
    let mut triples = Vec::with_capacity(corpus.len() * per_entry);
    for entry in corpus.iter() {
        let offset = rng.next_below(10);
        for q in 0..per_entry {
            let text = render_query(entry, offset + q);
            let query = QueryRecord::new(text, entry.data_profile.clone())?;
            triples.push(TrainingTriple {
                query,
                target_fc_id: entry.fc_id.clone(),
            });
        }
    }
    Ok(triples)
}

#[derive(Serialize)]
struct TripleLine<'a> {
    query: &'a str,
    profile: &'a crate::corpus::DataProfile,
    ground_truth: &'a str,
}

/// Write triples as query-batch JSON Lines
/// (`{"query", "profile", "ground_truth"}`).
pub fn write_triples_jsonl(
    triples: &[TrainingTriple],
    writer: &mut impl Write,
) -> std::io::Result<()> {
    for t in triples {
        let line = serde_json::to_string(&TripleLine {
            query: &t.query.query_text,
            profile: &t.query.query_profile,
            ground_truth: &t.target_fc_id,
        })
        .expect("triple serializes");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Load triples from a query-batch file; every line must carry a
/// ground_truth.
pub fn load_triples(path: impl AsRef<Path>) -> Result<Vec<TrainingTriple>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let items = query_batch_from_reader(BufReader::new(file))?;
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let target_fc_id = item.ground_truth.ok_or_else(|| Error::SchemaViolation {
                line: i + 1,
                field: "ground_truth".into(),
                message: "required for training triples".into(),
            })?;
            Ok(TrainingTriple {
                query: item.record,
                target_fc_id,
            })
        })
        .collect()
}
