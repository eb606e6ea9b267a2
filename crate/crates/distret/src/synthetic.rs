//! Deterministic synthetic corpora for demos, tests, and benchmarks.
//!
//! [`demo_corpus`] fabricates a knowledge base whose entries differ in a
//! unique combination of task type and profile attributes, mimicking the
//! shape of a real statistical-function corpus without shipping one.
//! [`distribution_twin_corpus`] builds pairs of entries whose documentation
//! is identical and whose profiles differ only in the distribution
//! assumption — retrieval can only separate a pair by using the profile.

use crate::corpus::{
    Corpus, DataModality, DataProfile, Dimensionality, FeatureType, FunctionEntry,
};
use crate::error::Error;
use crate::rng::SplitMix64;
use crate::Result;

const TASKS: [&str; 12] = [
    "density estimation",
    "two-sample hypothesis test",
    "hierarchical clustering",
    "survival analysis",
    "dimension reduction",
    "count regression",
    "time-series forecasting",
    "binary classification",
    "anomaly detection",
    "graphical model estimation",
    "mixed-effects modeling",
    "quantile normalization",
];

const DISTRIBUTIONS: [&str; 8] = [
    "normal",
    "poisson",
    "sparse",
    "non-gaussian",
    "log-concave",
    "heavy-tailed",
    "binomial",
    "exponential",
];

const MISSING: [&str; 3] = ["handles_na", "must_be_complete", "unknown"];

const CONSTRAINTS: [&str; 6] = [
    "numeric matrix",
    "requires complete cases",
    "long format observations",
    "two samples for comparison",
    "non-negative counts",
    "unit-variance scaling recommended",
];

// Shared across every generated doc so that lexical overlap alone is a weak
// retrieval signal and the profile has to carry weight.
const BOILERPLATE: &str = "The implementation accepts standard input containers, validates its \
arguments, supports weights and grouping variables, and returns a structured result object with \
parameter estimates, diagnostics, residuals, and plotting hooks for downstream reporting.";

fn task_slug(task: &str) -> String {
    task.split_whitespace().collect::<Vec<_>>().join("_")
}

fn title_slug(task: &str) -> String {
    task.split_whitespace()
        .map(|w| {
            let mut chars = w.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Clone, Copy)]
struct AttributeCombo {
    task: &'static str,
    distribution: &'static str,
    modality: DataModality,
    feature: FeatureType,
    dimensionality: Dimensionality,
    missing: &'static str,
}

/// Balanced pool sizes whose product is at least twice the entry count, so
/// attribute values are shared by many entries and most entries have close
/// variants differing in only one or two profile fields — the regime a real
/// statistical-function corpus lives in.
fn pool_sizes(n_entries: usize) -> [usize; 6] {
    let caps = [
        TASKS.len(),
        DISTRIBUTIONS.len(),
        DataModality::ALL.len(),
        FeatureType::ALL.len(),
        Dimensionality::ALL.len(),
        MISSING.len(),
    ];
    let mut sizes = [2usize; 6];
    let target = 2 * n_entries.max(1);
    loop {
        let product: usize = sizes.iter().product();
        if product >= target {
            break;
        }
        // grow the smallest pool still below its cap; ties take the lowest index
        let mut pick: Option<usize> = None;
        for i in 0..6 {
            if sizes[i] < caps[i] && pick.is_none_or(|p| sizes[i] < sizes[p]) {
                pick = Some(i);
            }
        }
        match pick {
            Some(i) => sizes[i] += 1,
            None => break,
        }
    }
    sizes
}

fn seeded_subset<T: Copy>(pool: &[T], size: usize, rng: &mut SplitMix64) -> Vec<T> {
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    rng.shuffle(&mut indices);
    indices.truncate(size);
    indices.into_iter().map(|i| pool[i]).collect()
}

/// Distinct attribute combinations drawn from seed-restricted pools, in a
/// seed-shuffled order.
fn shuffled_combos(n_entries: usize, seed: u64) -> Vec<AttributeCombo> {
    let sizes = pool_sizes(n_entries);
    let mut rng = SplitMix64::fork(seed, 0xC0DB);
    let tasks = seeded_subset(&TASKS, sizes[0], &mut rng);
    let distributions = seeded_subset(&DISTRIBUTIONS, sizes[1], &mut rng);
    let modalities = seeded_subset(&DataModality::ALL, sizes[2], &mut rng);
    let features = seeded_subset(&FeatureType::ALL, sizes[3], &mut rng);
    let dims = seeded_subset(&Dimensionality::ALL, sizes[4], &mut rng);
    let missing = seeded_subset(&MISSING, sizes[5], &mut rng);
    let mut combos = Vec::new();
    for &task in &tasks {
        for &distribution in &distributions {
            for &modality in &modalities {
                for &feature in &features {
                    for &dimensionality in &dims {
                        for &missing in &missing {
                            combos.push(AttributeCombo {
                                task,
                                distribution,
                                modality,
                                feature,
                                dimensionality,
                                missing,
                            });
                        }
                    }
                }
            }
        }
    }
    rng.shuffle(&mut combos);
    combos
}

fn entry_from_combo(id: u64, combo: &AttributeCombo, rng: &mut SplitMix64) -> FunctionEntry {
    let slug = task_slug(combo.task);
    let package = format!("{}_Suite_{:04}", title_slug(combo.task), id);
    let function = format!("run_{slug}_{id:04}");
    let n_constraints = rng.next_below(3);
    let start = rng.next_below(CONSTRAINTS.len());
    let constraints: Vec<String> = (0..n_constraints)
        .map(|k| CONSTRAINTS[(start + k) % CONSTRAINTS.len()].to_string())
        .collect();
    let profile = DataProfile {
        data_modality: combo.modality,
        feature_type: combo.feature,
        distribution_assumption: combo.distribution.into(),
        dimensionality: combo.dimensionality,
        missing_data_handling: combo.missing.into(),
        specific_constraints: constraints,
    };
    let doc = format!(
        "Provides {function} for {task}. Intended for {modality} data with {feature} features \
         under a {distribution} distribution; dimensionality regime {dim}; missing data policy \
         {missing}. {BOILERPLATE}",
        task = combo.task,
        modality = combo.modality,
        feature = combo.feature,
        distribution = combo.distribution,
        dim = combo.dimensionality,
        missing = combo.missing,
    );
    FunctionEntry {
        id,
        fc_id: format!("{package}::{function}"),
        ground_truth_doc: doc,
        data_profile: profile,
        usage_guidance: format!("{function}(data, ..., verbose = FALSE)"),
        example_code: format!("res <- {function}(df)\nsummary(res)"),
        task_type: combo.task.into(),
        domain: "Synthetic Statistics".into(),
    }
}

/// A deterministic corpus of `n_entries` synthetic functions with pairwise
/// distinct attribute combinations drawn from deliberately narrow pools.
pub fn demo_corpus(n_entries: usize, seed: u64) -> Result<Corpus> {
    if n_entries == 0 {
        return Err(Error::invalid("demo corpus needs at least one entry"));
    }
    let combos = shuffled_combos(n_entries, seed);
    if n_entries > combos.len() {
        return Err(Error::invalid(format!(
            "demo corpus supports at most {} entries",
            combos.len()
        )));
    }
    let mut rng = SplitMix64::fork(seed, 0xE17);
    let entries = combos[..n_entries]
        .iter()
        .enumerate()
        .map(|(i, combo)| entry_from_combo(i as u64, combo, &mut rng))
        .collect();
    Corpus::from_entries(entries)
}

/// Pairs of entries with byte-identical documentation whose profiles differ
/// only in `distribution_assumption`. The pair member a query should hit is
/// decidable only through the profile.
pub fn distribution_twin_corpus(n_pairs: usize, seed: u64) -> Result<Corpus> {
    if n_pairs == 0 {
        return Err(Error::invalid("twin corpus needs at least one pair"));
    }
    let mut rng = SplitMix64::fork(seed, 0x7111);
    let mut entries = Vec::with_capacity(n_pairs * 2);
    for pair in 0..n_pairs {
        let task = TASKS[pair % TASKS.len()];
        let first = rng.next_below(DISTRIBUTIONS.len());
        let second = (first + 1 + rng.next_below(DISTRIBUTIONS.len() - 1)) % DISTRIBUTIONS.len();
        let modality = DataModality::ALL[rng.next_below(DataModality::ALL.len())];
        let feature = FeatureType::ALL[rng.next_below(FeatureType::ALL.len())];
        let dimensionality = Dimensionality::ALL[rng.next_below(Dimensionality::ALL.len())];
        let missing = MISSING[rng.next_below(MISSING.len())];
        let slug = task_slug(task);
        // one doc text for both twins: no distribution words, no per-entry tokens
        let doc = format!(
            "Implements {task} for {modality} data with {feature} features in the \
             {dimensionality} dimensionality regime. {BOILERPLATE}",
            modality = modality,
            feature = feature,
        );
        for (twin, dist_idx) in [(0usize, first), (1usize, second)] {
            let id = (pair * 2 + twin) as u64;
            let profile = DataProfile {
                data_modality: modality,
                feature_type: feature,
                distribution_assumption: DISTRIBUTIONS[dist_idx].into(),
                dimensionality,
                missing_data_handling: missing.into(),
                specific_constraints: vec![],
            };
            entries.push(FunctionEntry {
                id,
                fc_id: format!(
                    "{}_Twins_{:03}::variant_{slug}_{id:03}",
                    title_slug(task),
                    pair
                ),
                ground_truth_doc: doc.clone(),
                data_profile: profile,
                usage_guidance: format!("variant_{slug}_{id:03}(data, ...)"),
                example_code: String::new(),
                task_type: task.into(),
                domain: "Synthetic Statistics".into(),
            });
        }
    }
    Corpus::from_entries(entries)
}
