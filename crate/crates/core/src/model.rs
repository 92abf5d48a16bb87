//! The PPNet classifier: architecture assembly, stratified splitting,
//! training, evaluation, and prediction over feature matrices.
//!
//! Class layout follows the corpus convention: indices 0-22 are
//! consonants, 23-28 vowels, and 29 silence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::container::{self, ContainerError, TensorRecord};
use crate::metrics::{MetricsError, MetricsReport};
use crate::nn::{
    AdamParams, AdamState, LayerSpec, Mode, Network, NnError, Scalar, Tensor,
};
use crate::stft::FeatureMatrix;

/// Total classes in the canonical layout.
pub const NUM_CLASSES: usize = 30;
/// Consonant classes occupy indices `0..NUM_CONSONANTS`.
pub const NUM_CONSONANTS: usize = 23;
/// Vowel classes occupy indices `NUM_CONSONANTS..NUM_CONSONANTS + NUM_VOWELS`.
pub const NUM_VOWELS: usize = 6;
/// The final class is silence.
pub const SILENCE_CLASS: usize = 29;

/// Canonical class index of consonant `i`.
pub fn consonant_class(i: usize) -> usize {
    debug_assert!(i < NUM_CONSONANTS);
    i
}

/// Canonical class index of vowel `j`.
pub fn vowel_class(j: usize) -> usize {
    debug_assert!(j < NUM_VOWELS);
    NUM_CONSONANTS + j
}

/// Display name of a canonical class index.
pub fn canonical_class_name(class: usize) -> String {
    if class < NUM_CONSONANTS {
        format!("c{class:02}")
    } else if class < NUM_CONSONANTS + NUM_VOWELS {
        format!("v{}", class - NUM_CONSONANTS)
    } else if class == SILENCE_CLASS {
        "sil".to_string()
    } else {
        format!("class{class}")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("class {class} has {count} samples; more than {minimum} are required")]
    InsufficientClass {
        class: usize,
        count: usize,
        minimum: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("evaluation set is empty")]
    EmptySet,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Nn(#[from] NnError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error(transparent)]
    Container(#[from] ContainerError),
}

/// Classifier hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpnetConfig {
    pub num_classes: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Rate of the four dropout layers among the conv blocks (incl. the
    /// post-flatten one).
    pub conv_dropout: f64,
    /// Rate of the two dropout layers between dense layers.
    pub dense_dropout: f64,
    /// Widths of the two hidden dense layers.
    pub dense_units: [usize; 2],
    pub optimizer: AdamParams,
    pub seed: u64,
    /// Input rows (time frames).
    pub input_frames: usize,
    /// Input columns (frequency ranges).
    pub input_ranges: usize,
}

impl Default for PpnetConfig {
    fn default() -> Self {
        Self {
            num_classes: NUM_CLASSES,
            batch_size: 16,
            epochs: 50,
            conv_dropout: 0.25,
            dense_dropout: 0.5,
            dense_units: [1024, 128],
            optimizer: AdamParams::default(),
            seed: 42,
            input_frames: 100,
            input_ranges: 150,
        }
    }
}

impl PpnetConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_classes < 2 {
            return Err(ModelError::ConfigInvalid(
                "num_classes must be >= 2".into(),
            ));
        }
        if self.batch_size < 1 {
            return Err(ModelError::ConfigInvalid("batch_size must be >= 1".into()));
        }
        for rate in [self.conv_dropout, self.dense_dropout] {
            if !(0.0..1.0).contains(&rate) {
                return Err(ModelError::ConfigInvalid(format!(
                    "dropout rate {rate} must be in [0, 1)"
                )));
            }
        }
        if self.dense_units.iter().any(|&u| u == 0) {
            return Err(ModelError::ConfigInvalid("dense widths must be > 0".into()));
        }
        if self.input_frames == 0 || self.input_ranges == 0 {
            return Err(ModelError::ConfigInvalid("input shape must be nonzero".into()));
        }
        Ok(())
    }

    /// The layer stack: three conv blocks (32, 64, 128 kernels, all 3x3
    /// stride 1) with batch norm after the first conv, max pooling after
    /// each block, then the dense classifier head.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        vec![
            LayerSpec::conv_same(32, false),
            LayerSpec::BatchNorm {
                epsilon: 1e-3,
                momentum: 0.99,
            },
            LayerSpec::Relu,
            LayerSpec::Dropout {
                rate: self.conv_dropout,
            },
            LayerSpec::conv_same(32, true),
            LayerSpec::MaxPool,
            LayerSpec::conv_same(64, true),
            LayerSpec::Dropout {
                rate: self.conv_dropout,
            },
            LayerSpec::conv_same(64, true),
            LayerSpec::MaxPool,
            LayerSpec::conv_same(128, true),
            LayerSpec::Dropout {
                rate: self.conv_dropout,
            },
            LayerSpec::conv_same(128, true),
            LayerSpec::MaxPool,
            LayerSpec::Flatten,
            LayerSpec::Dropout {
                rate: self.conv_dropout,
            },
            LayerSpec::Dense {
                units: self.dense_units[0],
            },
            LayerSpec::Dropout {
                rate: self.dense_dropout,
            },
            LayerSpec::Dense {
                units: self.dense_units[1],
            },
            LayerSpec::Dropout {
                rate: self.dense_dropout,
            },
            LayerSpec::Dense {
                units: self.num_classes,
            },
            LayerSpec::SoftmaxCrossEntropy,
        ]
    }
}

/// Builds the classifier network for the given config.
pub fn build_ppnet<T: Scalar>(cfg: &PpnetConfig) -> Result<Network<T>, ModelError> {
    cfg.validate()?;
    Ok(Network::from_specs(
        &cfg.layer_specs(),
        &[cfg.input_frames, cfg.input_ranges, 1],
        cfg.seed,
    )?)
}

/// One labeled feature matrix.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub features: FeatureMatrix,
    pub label: usize,
    pub speaker: String,
}

/// A set of labeled feature matrices with class names.
#[derive(Debug, Clone, Default)]
pub struct LabeledDataset {
    pub items: Vec<DatasetItem>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, item) in self.items.iter().enumerate() {
            if item.label >= self.class_names.len() {
                return Err(ModelError::ConfigInvalid(format!(
                    "item {i} has label {} but only {} classes are named",
                    item.label,
                    self.class_names.len()
                )));
            }
        }
        Ok(())
    }
}

/// Maps sparse canonical labels onto dense indices `0..k`, preserving
/// ascending canonical order. Returns the dense label per item and the
/// canonical id behind each dense class.
pub fn compact_classes(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut kept: Vec<usize> = {
        let mut set: Vec<usize> = labels.to_vec();
        set.sort_unstable();
        set.dedup();
        set
    };
    kept.shrink_to_fit();
    let dense = labels
        .iter()
        .map(|l| kept.binary_search(l).expect("label present"))
        .collect();
    (dense, kept)
}

/// Per-class test allocation: `clamp(round(fraction * class_size), min, max)`.
fn per_class_take(class_size: usize, fraction: f64, min: usize, max: usize) -> usize {
    ((fraction * class_size as f64).round() as usize).clamp(min, max)
}

/// Splits item indices into train/test with the per-class clamp rule.
///
/// Every class must hold strictly more than `per_class_min` items. The
/// split is a pure function of the label ordering and the seed; both index
/// lists come back sorted.
pub fn stratified_split_indices(
    labels: &[usize],
    num_classes: usize,
    test_fraction: f64,
    per_class_min: usize,
    per_class_max: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), ModelError> {
    if labels.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if !(0.0..1.0).contains(&test_fraction) || per_class_min > per_class_max {
        return Err(ModelError::ConfigInvalid(format!(
            "bad split parameters: fraction {test_fraction}, clamp {per_class_min}..{per_class_max}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &label) in labels.iter().enumerate() {
        if label >= num_classes {
            return Err(ModelError::ConfigInvalid(format!(
                "label {label} out of range for {num_classes} classes"
            )));
        }
        by_class[label].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.len() <= per_class_min {
            return Err(ModelError::InsufficientClass {
                class,
                count: members.len(),
                minimum: per_class_min,
            });
        }
        let take = per_class_take(members.len(), test_fraction, per_class_min, per_class_max);
        if 2 * take > members.len() {
            log::warn!(
                "class {class}: test takes {take} of {} items, leaving only {}",
                members.len(),
                members.len() - take
            );
        }
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits a dataset into disjoint train and test sets whose union is the
/// input.
pub fn stratified_split(
    data: &LabeledDataset,
    test_fraction: f64,
    per_class_min: usize,
    per_class_max: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), ModelError> {
    data.validate()?;
    let labels: Vec<usize> = data.items.iter().map(|i| i.label).collect();
    let (train_idx, test_idx) = stratified_split_indices(
        &labels,
        data.num_classes(),
        test_fraction,
        per_class_min,
        per_class_max,
        seed,
    )?;
    let pick = |indices: &[usize]| LabeledDataset {
        items: indices.iter().map(|&i| data.items[i].clone()).collect(),
        class_names: data.class_names.clone(),
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

/// Per-epoch loss and accuracy of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

fn batch_tensor(
    items: &[&DatasetItem],
    frames: usize,
    ranges: usize,
) -> Result<Tensor<f32>, ModelError> {
    let mut data = Vec::with_capacity(items.len() * frames * ranges);
    for item in items {
        if item.features.n_frames() != frames || item.features.n_ranges() != ranges {
            return Err(ModelError::ShapeMismatch(format!(
                "feature matrix is {}x{}, network expects {}x{}",
                item.features.n_frames(),
                item.features.n_ranges(),
                frames,
                ranges
            )));
        }
        data.extend_from_slice(item.features.values());
    }
    Ok(Tensor::from_vec(&[items.len(), frames, ranges, 1], data)?)
}

fn argmax_lowest(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn network_feature_shape(net: &Network<f32>) -> Result<(usize, usize), ModelError> {
    match *net.input_dims() {
        [frames, ranges, 1] => Ok((frames, ranges)),
        ref dims => Err(ModelError::ShapeMismatch(format!(
            "network input {dims:?} is not (frames, ranges, 1)"
        ))),
    }
}

/// Trains in shuffled mini-batches for `cfg.epochs` epochs (the last
/// partial batch is kept). Shuffling and dropout streams derive from
/// `cfg.seed`, so a rerun with the same seed reproduces the history
/// exactly.
pub fn train(
    net: &mut Network<f32>,
    train_set: &LabeledDataset,
    cfg: &PpnetConfig,
) -> Result<TrainHistory, ModelError> {
    cfg.validate()?;
    train_set.validate()?;
    if train_set.items.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let (frames, ranges) = network_feature_shape(net)?;
    let num_classes = *net.output_dims().last().unwrap();
    if let Some(bad) = train_set.items.iter().find(|i| i.label >= num_classes) {
        return Err(ModelError::ConfigInvalid(format!(
            "label {} out of range for a {num_classes}-way classifier",
            bad.label
        )));
    }

    net.reseed_dropout(cfg.seed);
    net.set_mode(Mode::Train);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new();
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_set.items.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let items: Vec<&DatasetItem> = chunk.iter().map(|&i| &train_set.items[i]).collect();
            let targets: Vec<usize> = items.iter().map(|i| i.label).collect();
            let batch = batch_tensor(&items, frames, ranges)?;

            let probs = net.forward(&batch)?;
            let loss = net.loss(&targets)?.to_f64s();
            if !loss.is_finite() {
                return Err(ModelError::NonFinite(format!(
                    "loss {loss} at epoch {epoch}"
                )));
            }
            loss_sum += loss * items.len() as f64;
            for (row, &target) in probs.data().chunks_exact(num_classes).zip(&targets) {
                if argmax_lowest(row) == target {
                    correct += 1;
                }
            }

            let grads = net.backward(&targets)?;
            net.apply_gradients(&grads, &mut adam, &cfg.optimizer)?;
        }
        let n = train_set.items.len() as f64;
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
        };
        log::info!(
            "epoch {:>3}: loss {:.4}, accuracy {:.4}",
            stats.epoch,
            stats.mean_loss,
            stats.train_accuracy
        );
        history.epochs.push(stats);
    }
    Ok(history)
}

/// Scores a frozen network on a labeled set.
pub fn evaluate(
    net: &mut Network<f32>,
    test_set: &LabeledDataset,
) -> Result<MetricsReport, ModelError> {
    test_set.validate()?;
    if test_set.items.is_empty() {
        return Err(ModelError::EmptySet);
    }
    let (frames, ranges) = network_feature_shape(net)?;
    let num_classes = *net.output_dims().last().unwrap();
    if test_set.num_classes() != num_classes {
        return Err(ModelError::ShapeMismatch(format!(
            "dataset names {} classes, network has {num_classes} outputs",
            test_set.num_classes()
        )));
    }
    net.set_mode(Mode::Eval);

    let mut pairs = Vec::with_capacity(test_set.items.len());
    for chunk in test_set.items.chunks(32) {
        let items: Vec<&DatasetItem> = chunk.iter().collect();
        let batch = batch_tensor(&items, frames, ranges)?;
        let probs = net.forward(&batch)?;
        for (row, item) in probs.data().chunks_exact(num_classes).zip(chunk) {
            pairs.push((item.label, argmax_lowest(row)));
        }
    }
    Ok(MetricsReport::from_pairs(
        &pairs,
        test_set.class_names.clone(),
    )?)
}

/// Class distribution and argmax label for one feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub distribution: Vec<f32>,
    pub label: usize,
}

impl Prediction {
    /// Class indices of the `k` largest probabilities, descending, ties
    /// toward the lower index.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.distribution.len()).collect();
        order.sort_by(|&a, &b| {
            self.distribution[b]
                .partial_cmp(&self.distribution[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        order.truncate(k);
        order
    }
}

/// Runs one feature matrix through a frozen network.
pub fn predict(net: &mut Network<f32>, features: &FeatureMatrix) -> Result<Prediction, ModelError> {
    let (frames, ranges) = network_feature_shape(net)?;
    if features.n_frames() != frames || features.n_ranges() != ranges {
        return Err(ModelError::ShapeMismatch(format!(
            "feature matrix is {}x{}, network expects {frames}x{ranges}",
            features.n_frames(),
            features.n_ranges()
        )));
    }
    net.set_mode(Mode::Eval);
    let batch = Tensor::from_vec(
        &[1, frames, ranges, 1],
        features.values().to_vec(),
    )?;
    let probs = net.forward(&batch)?;
    let row = probs.data();
    Ok(Prediction {
        distribution: row.to_vec(),
        label: argmax_lowest(row),
    })
}

/// Serializes every named parameter (including batch-norm running
/// statistics) to a checkpoint file.
pub fn save_checkpoint<P: AsRef<std::path::Path>>(
    net: &Network<f32>,
    path: P,
) -> Result<(), ModelError> {
    let records: Vec<TensorRecord> = net
        .named_params()
        .into_iter()
        .map(|(name, tensor)| TensorRecord {
            name,
            dims: tensor.dims().to_vec(),
            values: tensor.data().to_vec(),
        })
        .collect();
    container::write_checkpoint(path, &records)?;
    Ok(())
}

/// Loads a checkpoint into an architecturally identical network. Every
/// parameter must be present with matching dims.
pub fn load_checkpoint<P: AsRef<std::path::Path>>(
    net: &mut Network<f32>,
    path: P,
) -> Result<(), ModelError> {
    let records = container::read_checkpoint(path)?;
    let expected = net.named_params().len();
    if records.len() != expected {
        return Err(ModelError::ConfigInvalid(format!(
            "checkpoint holds {} tensors, network has {expected} parameters",
            records.len()
        )));
    }
    for record in records {
        let param = net
            .param_tensor_mut(&record.name)
            .ok_or_else(|| NnError::NameMismatch(record.name.clone()))?;
        if param.dims() != record.dims {
            return Err(ModelError::ShapeMismatch(format!(
                "checkpoint tensor {} has dims {:?}, parameter has {:?}",
                record.name,
                record.dims,
                param.dims()
            )));
        }
        param.data_mut().copy_from_slice(&record.values);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fig.-4-equivalent expectations: (name, output shape, params).
    fn expected_summary() -> Vec<(&'static str, Vec<usize>, usize)> {
        vec![
            ("conv2d_1", vec![100, 150, 32], 320),
            ("batch_normalization_1", vec![100, 150, 32], 128),
            ("activation_1", vec![100, 150, 32], 0),
            ("dropout_1", vec![100, 150, 32], 0),
            ("conv2d_2", vec![100, 150, 32], 9_248),
            ("max_pooling2d_1", vec![50, 75, 32], 0),
            ("conv2d_3", vec![50, 75, 64], 18_496),
            ("dropout_2", vec![50, 75, 64], 0),
            ("conv2d_4", vec![50, 75, 64], 36_928),
            ("max_pooling2d_2", vec![25, 37, 64], 0),
            ("conv2d_5", vec![25, 37, 128], 73_856),
            ("dropout_3", vec![25, 37, 128], 0),
            ("conv2d_6", vec![25, 37, 128], 147_584),
            ("max_pooling2d_3", vec![12, 18, 128], 0),
            ("flatten_1", vec![27_648], 0),
            ("dropout_4", vec![27_648], 0),
            ("dense_1", vec![1024], 28_312_576),
            ("dropout_5", vec![1024], 0),
            ("dense_2", vec![128], 131_200),
            ("dropout_6", vec![128], 0),
            ("dense_3", vec![30], 3_870),
            ("softmax_1", vec![30], 0),
        ]
    }

    #[test]
    fn default_architecture_matches_layer_table_exactly() {
        let net = build_ppnet::<f32>(&PpnetConfig::default()).unwrap();
        let expected = expected_summary();
        assert_eq!(net.summary().len(), expected.len());
        for (summary, (name, shape, params)) in net.summary().iter().zip(&expected) {
            assert_eq!(&summary.name, name);
            assert_eq!(&summary.output_shape, shape, "{name}");
            assert_eq!(summary.params, *params, "{name}");
        }
        assert_eq!(net.total_params(), 28_734_206);
    }

    #[test]
    fn class_count_only_resizes_the_head() {
        let cfg = PpnetConfig {
            num_classes: 10,
            ..PpnetConfig::default()
        };
        let net = build_ppnet::<f32>(&cfg).unwrap();
        for (summary, (name, _, params)) in net.summary().iter().zip(&expected_summary()) {
            if *name == "dense_3" {
                assert_eq!(summary.params, 128 * 10 + 10);
            } else if *name == "softmax_1" {
                assert_eq!(summary.output_shape, vec![10]);
            } else {
                assert_eq!(summary.params, *params, "{name}");
            }
        }
    }

    fn flat_dataset(per_class: &[usize]) -> LabeledDataset {
        // 2x3 feature "matrices" with a distinct active cell per class.
        let mut items = Vec::new();
        for (class, &count) in per_class.iter().enumerate() {
            for k in 0..count {
                let mut values = vec![0.0f32; 6];
                values[class % 6] = 1.0 + 0.1 * (k % 3) as f32;
                values[(class + 3) % 6] = -0.5;
                items.push(DatasetItem {
                    features: FeatureMatrix::from_values(2, 3, values, 0.0, 1.0).unwrap(),
                    label: class,
                    speaker: format!("s{k}"),
                });
            }
        }
        LabeledDataset {
            items,
            class_names: (0..per_class.len()).map(|c| format!("k{c}")).collect(),
        }
    }

    fn tiny_net(classes: usize, seed: u64) -> Network<f32> {
        Network::from_specs(
            &[
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 16 },
                LayerSpec::Relu,
                LayerSpec::Dense { units: classes },
                LayerSpec::SoftmaxCrossEntropy,
            ],
            &[2, 3, 1],
            seed,
        )
        .unwrap()
    }

    #[test]
    fn clamp_rule_takes_twelve_of_eighty() {
        let labels: Vec<usize> = (0..30).flat_map(|c| vec![c; 80]).collect();
        let (train, test) = stratified_split_indices(&labels, 30, 0.15, 8, 16, 7).unwrap();
        assert_eq!(test.len(), 30 * 12);
        assert_eq!(train.len() + test.len(), labels.len());
        for c in 0..30 {
            let count = test.iter().filter(|&&i| labels[i] == c).count();
            assert_eq!(count, 12);
        }
        // Disjoint
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), labels.len());
    }

    #[test]
    fn nine_samples_is_enough_eight_is_not() {
        let mut labels = vec![0usize; 9];
        labels.extend(vec![1usize; 80]);
        let (train, test) = stratified_split_indices(&labels, 2, 0.15, 8, 16, 1).unwrap();
        assert_eq!(test.iter().filter(|&&i| labels[i] == 0).count(), 8);
        assert_eq!(train.iter().filter(|&&i| labels[i] == 0).count(), 1);

        let mut labels = vec![0usize; 8];
        labels.extend(vec![1usize; 80]);
        assert!(matches!(
            stratified_split_indices(&labels, 2, 0.15, 8, 16, 1),
            Err(ModelError::InsufficientClass {
                class: 0,
                count: 8,
                minimum: 8
            })
        ));
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let labels: Vec<usize> = (0..5).flat_map(|c| vec![c; 40]).collect();
        let a = stratified_split_indices(&labels, 5, 0.15, 8, 16, 9).unwrap();
        let b = stratified_split_indices(&labels, 5, 0.15, 8, 16, 9).unwrap();
        assert_eq!(a, b);
        let c = stratified_split_indices(&labels, 5, 0.15, 8, 16, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_epochs_leaves_parameters_at_initialization() {
        let data = flat_dataset(&[12, 12]);
        let mut net = tiny_net(2, 5);
        let reference = tiny_net(2, 5);
        let cfg = PpnetConfig {
            epochs: 0,
            num_classes: 2,
            input_frames: 2,
            input_ranges: 3,
            ..PpnetConfig::default()
        };
        let history = train(&mut net, &data, &cfg).unwrap();
        assert!(history.epochs.is_empty());
        for ((_, a), (_, b)) in net.named_params().iter().zip(reference.named_params()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn same_seed_reproduces_history_and_learns_the_toy_problem() {
        let data = flat_dataset(&[20, 20, 20]);
        let cfg = PpnetConfig {
            epochs: 40,
            num_classes: 3,
            batch_size: 8,
            input_frames: 2,
            input_ranges: 3,
            seed: 11,
            optimizer: AdamParams {
                lr: 0.01,
                ..AdamParams::default()
            },
            ..PpnetConfig::default()
        };
        let mut net_a = tiny_net(3, 11);
        let hist_a = train(&mut net_a, &data, &cfg).unwrap();
        let mut net_b = tiny_net(3, 11);
        let hist_b = train(&mut net_b, &data, &cfg).unwrap();
        assert_eq!(hist_a, hist_b);
        assert!(
            hist_a.epochs.last().unwrap().train_accuracy >= 0.95,
            "final accuracy {}",
            hist_a.epochs.last().unwrap().train_accuracy
        );

        let report = evaluate(&mut net_a, &data).unwrap();
        assert!(report.accuracy >= 0.95);
        assert_eq!(report.class_names, data.class_names);
    }

    #[test]
    fn evaluate_rejects_empty_sets() {
        let mut net = tiny_net(2, 1);
        let empty = LabeledDataset {
            items: Vec::new(),
            class_names: vec!["a".into(), "b".into()],
        };
        assert!(matches!(evaluate(&mut net, &empty), Err(ModelError::EmptySet)));
    }

    #[test]
    fn prediction_distribution_sums_to_one_and_repeats() {
        let data = flat_dataset(&[10]);
        let mut net = tiny_net(4, 3);
        let a = predict(&mut net, &data.items[0].features).unwrap();
        let b = predict(&mut net, &data.items[0].features).unwrap();
        assert_eq!(a, b);
        let sum: f32 = a.distribution.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert_eq!(a.top_k(2).len(), 2);
        assert_eq!(a.top_k(2)[0], a.label);
    }

    #[test]
    fn checkpoint_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ppnt");
        let net = tiny_net(3, 8);
        save_checkpoint(&net, &path).unwrap();
        let mut other = tiny_net(3, 99);
        load_checkpoint(&mut other, &path).unwrap();
        for ((name, a), (_, b)) in net.named_params().iter().zip(other.named_params()) {
            assert_eq!(a.data(), b.data(), "{name}");
        }
    }

    #[test]
    fn compact_classes_preserves_order() {
        let (dense, kept) = compact_classes(&[29, 3, 23, 3, 29]);
        assert_eq!(kept, vec![3, 23, 29]);
        assert_eq!(dense, vec![2, 0, 1, 0, 2]);
    }

    #[test]
    fn canonical_names_cover_the_layout() {
        assert_eq!(canonical_class_name(consonant_class(0)), "c00");
        assert_eq!(canonical_class_name(consonant_class(22)), "c22");
        assert_eq!(canonical_class_name(vowel_class(0)), "v0");
        assert_eq!(canonical_class_name(vowel_class(5)), "v5");
        assert_eq!(canonical_class_name(SILENCE_CLASS), "sil");
    }
}
