use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Model;
use crate::adam::{adam_step, AdamState};
use crate::data::{Dataset, EmbeddingTable, Sentence, Split};
use crate::layers::argmax;
use crate::{Error, Mode, Result, Tensor};

/// ChaCha stream reserved for shuffling and dropout, so training draws never
/// overlap the initialization stream of the same seed.
const TRAINING_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean of the mini-batch losses seen during the epoch.
    pub train_loss: f64,
    /// Accuracy on the test split after the epoch, when one exists.
    pub test_accuracy: Option<f64>,
}

/// Optimizer state plus the generator driving shuffling and dropout.
pub struct Trainer {
    adam: Vec<AdamState>,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(model: &Model) -> Self {
        let adam = model
            .trainable()
            .iter()
            .map(|p| AdamState::new(p.len(), model.config.adam))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
        rng.set_stream(TRAINING_STREAM);
        Trainer { adam, rng }
    }

    /// One Adam update on a mini-batch. Returns the batch loss measured
    /// before the update.
    pub fn step(&mut self, model: &mut Model, inputs: &[Tensor], labels: &[usize]) -> Result<f64> {
        let lg = model.loss_and_gradients(inputs, labels, Mode::Train, Some(&mut self.rng))?;
        if !lg.loss.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        model.update_running_stats(&lg.stats);
        for ((param, grad), state) in model
            .trainable_mut()
            .into_iter()
            .zip(&lg.gradients.tensors)
            .zip(&mut self.adam)
        {
            adam_step(param, grad, state)?;
        }
        Ok(lg.loss)
    }

    /// One pass over `sentences` in a freshly shuffled order.
    pub fn epoch(&mut self, model: &mut Model, sentences: &[&Sentence], table: &EmbeddingTable) -> Result<f64> {
        if sentences.is_empty() {
            return Err(Error::Empty("train split"));
        }
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(model.config.batch_size) {
            let inputs = chunk
                .iter()
                .map(|&i| model.embed(&sentences[i].tokens, table))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<usize> = chunk.iter().map(|&i| sentences[i].label).collect();
            total += self.step(model, &inputs, &labels)?;
            batches += 1;
        }
        Ok(total / batches as f64)
    }
}

/// Trains for `model.config.epochs` epochs on the train split, calling
/// `on_epoch` after each one.
pub fn train<F>(model: &mut Model, dataset: &Dataset, table: &EmbeddingTable, mut on_epoch: F) -> Result<Vec<EpochRecord>>
where
    F: FnMut(&EpochRecord),
{
    if dataset.num_classes() != model.config.num_classes {
        return Err(Error::shape("dataset classes", model.config.num_classes, dataset.num_classes()));
    }
    let train: Vec<&Sentence> = dataset.split(Split::Train).collect();
    if train.is_empty() {
        return Err(Error::Empty("train split"));
    }
    let has_test = dataset.count(Split::Test) > 0;
    let mut trainer = Trainer::new(model);
    let mut history = Vec::with_capacity(model.config.epochs);
    for _ in 0..model.config.epochs {
        let train_loss = trainer.epoch(model, &train, table)?;
        model.epoch += 1;
        let test_accuracy = if has_test {
            Some(evaluate(model, dataset, table, Split::Test)?)
        } else {
            None
        };
        let record = EpochRecord {
            epoch: model.epoch,
            train_loss,
            test_accuracy,
        };
        on_epoch(&record);
        history.push(record);
    }
    Ok(history)
}

/// Predicted class per sentence, inference mode.
pub fn predict_all<'a, I>(model: &Model, sentences: I, table: &EmbeddingTable) -> Result<Vec<usize>>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    const CHUNK: usize = 256;
    let sentences: Vec<&Sentence> = sentences.into_iter().collect();
    let mut out = Vec::with_capacity(sentences.len());
    for chunk in sentences.chunks(CHUNK) {
        let inputs = chunk
            .iter()
            .map(|s| model.embed(&s.tokens, table))
            .collect::<Result<Vec<_>>>()?;
        let forward = model.forward_batch(&inputs, Mode::Infer, None)?;
        out.extend(forward.probs.iter().map(|p| argmax(p)));
    }
    Ok(out)
}

/// Top-1 accuracy on one split. Ties in the argmax go to the lowest class.
pub fn evaluate(model: &Model, dataset: &Dataset, table: &EmbeddingTable, split: Split) -> Result<f64> {
    let sentences: Vec<&Sentence> = dataset.split(split).collect();
    if sentences.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    let predictions = predict_all(model, sentences.iter().copied(), table)?;
    let correct = predictions
        .iter()
        .zip(&sentences)
        .filter(|(p, s)| **p == s.label)
        .count();
    Ok(correct as f64 / sentences.len() as f64)
}
