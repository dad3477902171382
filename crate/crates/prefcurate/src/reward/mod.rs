//! Bradley-Terry reward models over hashed text features.
//!
//! The model maps a (context, summary) pair to a scalar reward; the training
//! loss is the pairwise cross-entropy `-log sigma(r_winner - r_loser)`, so a
//! reward difference is the log odds that the first summary is preferred.
//! The default model is linear in the hashed features, which keeps training
//! deterministic and the gradient checkable against finite differences; a
//! single-hidden-layer variant is available behind [`ModelKind::Mlp`].

mod checkpoint;
mod featurizer;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use featurizer::{featurize, FeaturizerConfig, SparseVec, MIN_DIMENSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::corpus::{Comparison, PostIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Mlp { hidden: usize },
}

impl Default for ModelKind {
    fn default() -> Self {
        ModelKind::Linear
    }
}

/// One ordered training pair; the winner is the preferred completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceExample {
    pub post_id: String,
    pub winner_text: String,
    pub loser_text: String,
    pub weight: f64,
}

impl PreferenceExample {
    pub fn new(
        post_id: impl Into<String>,
        winner_text: impl Into<String>,
        loser_text: impl Into<String>,
        weight: f64,
    ) -> Result<Self> {
        let (winner_text, loser_text) = (winner_text.into(), loser_text.into());
        if winner_text.trim() == loser_text.trim() {
            return Err(Error::InvalidConfig(
                "preference example with identical texts".into(),
            ));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "preference weight {weight} must be positive and finite"
            )));
        }
        Ok(PreferenceExample {
            post_id: post_id.into(),
            winner_text,
            loser_text,
            weight,
        })
    }
}

/// One training example per individual judgement: `votes_a` examples with
/// side a winning and `votes_b` with side b, weight 1 each. Tied comparisons
/// contribute symmetric, mutually cancelling pairs rather than being
/// dropped.
pub fn expand_to_examples(comparisons: &[Comparison]) -> Vec<PreferenceExample> {
    let mut out = Vec::new();
    for c in comparisons {
        for _ in 0..c.votes_a {
            out.push(PreferenceExample {
                post_id: c.post_id.clone(),
                winner_text: c.summary_a.clone(),
                loser_text: c.summary_b.clone(),
                weight: 1.0,
            });
        }
        for _ in 0..c.votes_b {
            out.push(PreferenceExample {
                post_id: c.post_id.clone(),
                winner_text: c.summary_b.clone(),
                loser_text: c.summary_a.clone(),
                weight: 1.0,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    pub seed: u64,
    /// Steps between learning-curve points.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 4,
            batch_size: 32,
            l2_penalty: 1e-6,
            seed: 0,
            eval_every: 200,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and eval_every must be positive".into(),
            ));
        }
        if self.l2_penalty < 0.0 || self.learning_rate * self.l2_penalty >= 1.0 {
            return Err(Error::InvalidConfig(
                "l2 penalty must satisfy 0 <= lr * l2 < 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub config: TrainConfig,
    pub examples: usize,
    pub steps: usize,
    pub final_train_loss: f64,
    pub final_test_accuracy: Option<f64>,
}

/// An immutable trained (or zero-initialized) reward model.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    featurizer: FeaturizerConfig,
    kind: ModelKind,
    theta: Vec<f64>,
    meta: Option<TrainMeta>,
}

fn parameter_count(kind: ModelKind, dimension: usize) -> usize {
    match kind {
        ModelKind::Linear => dimension,
        ModelKind::Mlp { hidden } => hidden * dimension + hidden + hidden + 1,
    }
}

impl RewardModel {
    pub fn zeroed(featurizer: FeaturizerConfig, kind: ModelKind) -> Result<Self> {
        featurizer.validate()?;
        if let ModelKind::Mlp { hidden } = kind {
            if hidden == 0 {
                return Err(Error::InvalidConfig("mlp hidden width must be positive".into()));
            }
        }
        let theta = vec![0.0; parameter_count(kind, featurizer.dimension)];
        Ok(RewardModel { featurizer, kind, theta, meta: None })
    }

    pub(crate) fn from_parts(
        featurizer: FeaturizerConfig,
        kind: ModelKind,
        theta: Vec<f64>,
        meta: Option<TrainMeta>,
    ) -> Result<Self> {
        featurizer.validate()?;
        if theta.len() != parameter_count(kind, featurizer.dimension) {
            return Err(Error::InvalidConfig(format!(
                "theta length {} does not match {:?} over dimension {}",
                theta.len(),
                kind,
                featurizer.dimension
            )));
        }
        Ok(RewardModel { featurizer, kind, theta, meta })
    }

    pub fn featurizer(&self) -> &FeaturizerConfig {
        &self.featurizer
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn meta(&self) -> Option<&TrainMeta> {
        self.meta.as_ref()
    }

    /// Scalar reward for a (context, summary) pair.
    pub fn score(&self, context: &str, summary: &str) -> f64 {
        self.forward(&featurize(&self.featurizer, context, summary))
    }

    fn forward(&self, features: &SparseVec) -> f64 {
        forward(self.kind, &self.theta, self.featurizer.dimension, features).0
    }
}

/// Forward pass; returns the score and, for the MLP, the hidden activations.
fn forward(
    kind: ModelKind,
    theta: &[f64],
    dimension: usize,
    features: &SparseVec,
) -> (f64, Vec<f64>) {
    match kind {
        ModelKind::Linear => (features.dot(theta), Vec::new()),
        ModelKind::Mlp { hidden } => {
            let (w1, rest) = theta.split_at(hidden * dimension);
            let (b1, rest) = rest.split_at(hidden);
            let (w2, b2) = rest.split_at(hidden);
            let mut z = Vec::with_capacity(hidden);
            let mut out = b2[0];
            for j in 0..hidden {
                let row = &w1[j * dimension..(j + 1) * dimension];
                let a = features.dot(row) + b1[j];
                let zj = a.tanh();
                out += w2[j] * zj;
                z.push(zj);
            }
            (out, z)
        }
    }
}

fn sigma(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `softplus(x) = ln(1 + e^x)`, stable for |x| up to 1e3 and beyond.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// A featurized batch: texts deduplicated so repeated judgements of the same
/// pair featurize once.
pub struct PreparedBatch {
    features: Vec<SparseVec>,
    /// `(winner feature index, loser feature index, weight)`.
    pairs: Vec<(usize, usize, f64)>,
}

impl PreparedBatch {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Featurize preference examples against their posts' bodies.
pub fn prepare(
    featurizer: &FeaturizerConfig,
    examples: &[PreferenceExample],
    posts: &PostIndex,
) -> Result<PreparedBatch> {
    let mut cache: HashMap<(String, String), usize> = HashMap::new();
    let mut features = Vec::new();
    let mut pairs = Vec::with_capacity(examples.len());
    for ex in examples {
        let context = posts
            .body(&ex.post_id)
            .ok_or_else(|| Error::UnknownPost(ex.post_id.clone()))?;
        let mut index_of = |text: &str| -> usize {
            let key = (ex.post_id.clone(), text.to_string());
            if let Some(&i) = cache.get(&key) {
                return i;
            }
            let i = features.len();
            features.push(featurize(featurizer, context, text));
            cache.insert(key, i);
            i
        };
        let w = index_of(&ex.winner_text);
        let l = index_of(&ex.loser_text);
        pairs.push((w, l, ex.weight));
    }
    Ok(PreparedBatch { features, pairs })
}

/// Weighted mean Bradley-Terry loss `-log sigma(r_w - r_l)` over a batch.
pub fn pairwise_loss(
    model: &RewardModel,
    examples: &[PreferenceExample],
    posts: &PostIndex,
) -> Result<f64> {
    let batch = prepare(&model.featurizer, examples, posts)?;
    pairwise_loss_prepared(model, &batch)
}

/// [`pairwise_loss`] over an already-featurized batch.
pub fn pairwise_loss_prepared(model: &RewardModel, batch: &PreparedBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut loss = 0.0;
    let mut total_weight = 0.0;
    for &(w, l, weight) in &batch.pairs {
        let delta = model.forward(&batch.features[w]) - model.forward(&batch.features[l]);
        loss += weight * softplus(-delta);
        total_weight += weight;
    }
    Ok(loss / total_weight)
}

/// Analytic gradient of `pairwise_loss + l2/2 * |theta|^2` w.r.t. theta.
pub fn gradient(
    model: &RewardModel,
    examples: &[PreferenceExample],
    posts: &PostIndex,
    l2_penalty: f64,
) -> Result<Vec<f64>> {
    let batch = prepare(&model.featurizer, examples, posts)?;
    gradient_prepared(model, &batch, l2_penalty)
}

/// [`gradient`] over an already-featurized batch.
pub fn gradient_prepared(
    model: &RewardModel,
    batch: &PreparedBatch,
    l2_penalty: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut grad = vec![0.0; model.theta.len()];
    let total_weight: f64 = batch.pairs.iter().map(|&(_, _, w)| w).sum();
    let dimension = model.featurizer.dimension;
    for &(w, l, weight) in &batch.pairs {
        let (score_w, z_w) = forward(model.kind, &model.theta, dimension, &batch.features[w]);
        let (score_l, z_l) = forward(model.kind, &model.theta, dimension, &batch.features[l]);
        let delta = score_w - score_l;
        let coef = -weight * (1.0 - sigma(delta)) / total_weight;
        accumulate_score_grad(model.kind, &model.theta, dimension, &batch.features[w], &z_w, coef, &mut grad);
        accumulate_score_grad(model.kind, &model.theta, dimension, &batch.features[l], &z_l, -coef, &mut grad);
    }
    if l2_penalty != 0.0 {
        for (g, t) in grad.iter_mut().zip(&model.theta) {
            *g += l2_penalty * t;
        }
    }
    Ok(grad)
}

/// Adds `coef * d(score)/d(theta)` for one input to a dense gradient.
fn accumulate_score_grad(
    kind: ModelKind,
    theta: &[f64],
    dimension: usize,
    features: &SparseVec,
    z: &[f64],
    coef: f64,
    grad: &mut [f64],
) {
    match kind {
        ModelKind::Linear => {
            for &(i, v) in features.entries() {
                grad[i as usize] += coef * v;
            }
        }
        ModelKind::Mlp { hidden } => {
            let w2_off = hidden * dimension + hidden;
            for j in 0..hidden {
                let zj = z[j];
                let dz = 1.0 - zj * zj;
                let back = coef * theta[w2_off + j] * dz;
                let row = j * dimension;
                for &(i, v) in features.entries() {
                    grad[row + i as usize] += back * v;
                }
                grad[hidden * dimension + j] += back; // b1
                grad[w2_off + j] += coef * zj; // w2
            }
            grad[w2_off + hidden] += coef; // b2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub train_loss: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RewardModel,
    pub curve: Vec<CurvePoint>,
}

fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}

fn initial_theta(kind: ModelKind, dimension: usize, seed: u64) -> Vec<f64> {
    match kind {
        ModelKind::Linear => vec![0.0; dimension],
        ModelKind::Mlp { hidden } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0x1b17);
            let mut theta = vec![0.0; parameter_count(kind, dimension)];
            // small random init breaks hidden-unit symmetry; biases stay 0
            for t in theta[..hidden * dimension].iter_mut() {
                *t = rng.random_range(-0.05..0.05);
            }
            let w2_off = hidden * dimension + hidden;
            for t in theta[w2_off..w2_off + hidden].iter_mut() {
                *t = rng.random_range(-0.05..0.05);
            }
            theta
        }
    }
}

/// Mini-batch gradient descent with a fixed learning rate and L2 decay.
///
/// Deterministic for a fixed seed: the per-epoch shuffle, the batch
/// gradient accumulation order and the L2 scale factor are all pinned.
/// With zero epochs the initial model is returned untouched (all-zero for
/// the linear kind).
pub fn train(
    featurizer: &FeaturizerConfig,
    kind: ModelKind,
    examples: &[PreferenceExample],
    posts: &PostIndex,
    eval_comparisons: Option<&[Comparison]>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    featurizer.validate()?;
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyRecords);
    }

    let batch = prepare(featurizer, examples, posts)?;
    let dimension = featurizer.dimension;
    let mut weights = initial_theta(kind, dimension, config.seed);
    let mut scale = 1.0f64; // theta = scale * weights (linear lazy-L2 trick)

    let mut curve = Vec::new();
    let record = |step: usize,
                  train_loss: f64,
                  weights: &[f64],
                  scale: f64,
                  curve: &mut Vec<CurvePoint>|
     -> Result<()> {
        let theta: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let model = RewardModel::from_parts(featurizer.clone(), kind, theta, None)?;
        let test_accuracy = match eval_comparisons {
            Some(cs) => Some(accuracy(&model, cs, posts)?.accuracy),
            None => None,
        };
        curve.push(CurvePoint { step, train_loss, test_accuracy });
        Ok(())
    };

    // initial point: full-batch loss at the starting parameters
    let init_model = RewardModel::from_parts(featurizer.clone(), kind, weights.clone(), None)?;
    let init_loss = pairwise_loss_prepared(&init_model, &batch)?;
    record(0, init_loss, &weights, scale, &mut curve)?;
    drop(init_model);

    let mut indices: Vec<usize> = (0..batch.pairs.len()).collect();
    let mut step = 0usize;
    let mut window_loss = 0.0;
    let mut window_steps = 0usize;
    let lr = config.learning_rate;

    for epoch in 0..config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(0x5487 ^ epoch as u64);
        shuffle(&mut indices, &mut rng);

        for chunk in indices.chunks(config.batch_size) {
            step += 1;
            let total_weight: f64 = chunk.iter().map(|&i| batch.pairs[i].2).sum();

            // batch loss and gradient at theta = scale * weights
            let mut batch_loss = 0.0;
            match kind {
                ModelKind::Linear => {
                    let mut sparse_grad: Vec<(u32, f64)> = Vec::new();
                    for &i in chunk {
                        let (wi, li, weight) = batch.pairs[i];
                        let delta = scale
                            * (batch.features[wi].dot(&weights) - batch.features[li].dot(&weights));
                        batch_loss += weight * softplus(-delta);
                        let coef = -weight * (1.0 - sigma(delta)) / total_weight;
                        for &(ix, v) in batch.features[wi].entries() {
                            sparse_grad.push((ix, coef * v));
                        }
                        for &(ix, v) in batch.features[li].entries() {
                            sparse_grad.push((ix, -coef * v));
                        }
                    }
                    // L2 decay folds into the scale; the sparse part applies
                    // in index order so float sums stay deterministic
                    scale *= 1.0 - lr * config.l2_penalty;
                    sparse_grad.sort_unstable_by_key(|&(ix, _)| ix);
                    for (ix, g) in sparse_grad {
                        weights[ix as usize] -= lr * g / scale;
                    }
                    if scale < 1e-100 {
                        for w in weights.iter_mut() {
                            *w *= scale;
                        }
                        scale = 1.0;
                    }
                }
                ModelKind::Mlp { .. } => {
                    let mut grad = vec![0.0; weights.len()];
                    for &i in chunk {
                        let (wi, li, weight) = batch.pairs[i];
                        let (sw, zw) = forward(kind, &weights, dimension, &batch.features[wi]);
                        let (sl, zl) = forward(kind, &weights, dimension, &batch.features[li]);
                        let delta = sw - sl;
                        batch_loss += weight * softplus(-delta);
                        let coef = -weight * (1.0 - sigma(delta)) / total_weight;
                        accumulate_score_grad(kind, &weights, dimension, &batch.features[wi], &zw, coef, &mut grad);
                        accumulate_score_grad(kind, &weights, dimension, &batch.features[li], &zl, -coef, &mut grad);
                    }
                    let decay = 1.0 - lr * config.l2_penalty;
                    for (w, g) in weights.iter_mut().zip(&grad) {
                        *w = *w * decay - lr * g;
                    }
                }
            }

            batch_loss /= total_weight;
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite { quantity: "training loss".into(), step });
            }
            window_loss += batch_loss;
            window_steps += 1;

            if step % config.eval_every == 0 {
                record(step, window_loss / window_steps as f64, &weights, scale, &mut curve)?;
                window_loss = 0.0;
                window_steps = 0;
            }
        }
    }

    if window_steps > 0 {
        record(step, window_loss / window_steps as f64, &weights, scale, &mut curve)?;
    }

    let theta: Vec<f64> = weights.iter().map(|w| w * scale).collect();
    let last = *curve.last().expect("curve has the initial point");
    let meta = TrainMeta {
        config: *config,
        examples: examples.len(),
        steps: step,
        final_train_loss: last.train_loss,
        final_test_accuracy: last.test_accuracy,
    };
    let model = RewardModel::from_parts(featurizer.clone(), kind, theta, Some(meta))?;
    Ok(TrainOutcome { model, curve })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    /// Fraction of decidable comparisons where the vote-majority side scores
    /// higher; score ties earn half credit.
    pub accuracy: f64,
    pub decidable: usize,
    /// Vote-tied comparisons excluded from the denominator.
    pub vote_ties: usize,
}

/// Accuracy under an arbitrary pair scorer (`comparison -> (score_a, score_b)`).
pub fn accuracy_with<F>(mut pair_scores: F, comparisons: &[Comparison]) -> Result<AccuracyReport>
where
    F: FnMut(&Comparison) -> Result<(f64, f64)>,
{
    let mut credit = 0.0;
    let mut decidable = 0usize;
    let mut vote_ties = 0usize;
    for c in comparisons {
        if c.votes_a == c.votes_b {
            vote_ties += 1;
            continue;
        }
        let (score_a, score_b) = pair_scores(c)?;
        let (winner, loser) = if c.votes_a > c.votes_b {
            (score_a, score_b)
        } else {
            (score_b, score_a)
        };
        decidable += 1;
        credit += if winner > loser {
            1.0
        } else if winner == loser {
            0.5
        } else {
            0.0
        };
    }
    if decidable == 0 {
        return Err(Error::NoDecidableItems);
    }
    Ok(AccuracyReport { accuracy: credit / decidable as f64, decidable, vote_ties })
}

/// Test-set accuracy of a reward model over strict-majority comparisons.
pub fn accuracy(
    model: &RewardModel,
    comparisons: &[Comparison],
    posts: &PostIndex,
) -> Result<AccuracyReport> {
    accuracy_with(
        |c| {
            let context = posts
                .body(&c.post_id)
                .ok_or_else(|| Error::UnknownPost(c.post_id.clone()))?;
            Ok((model.score(context, &c.summary_a), model.score(context, &c.summary_b)))
        },
        comparisons,
    )
}
