use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::net::data::Dataset;
use crate::net::loss::{binary_accuracy, LossKind};
use crate::net::network::{Mode, Network};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub lr: f64,
    #[serde(default)]
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the shuffle order; the network carries its own init seed.
    pub seed: u64,
    /// Epochs (1-based) after which the parameter vector is saved.
    #[serde(default)]
    pub snapshot_epochs: Vec<usize>,
}

/// Per-epoch training record. All vectors have one entry per completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub initial_loss: f64,
    pub train_loss: Vec<f64>,
    pub eval_loss: Vec<f64>,
    /// Only for BCE.
    pub accuracy: Vec<Option<f64>>,
    pub wall_time_per_step: Vec<f64>,
    /// `[epoch][layer]` condition numbers of the stored weights.
    pub kappa_w: Vec<Vec<f64>>,
    /// `[epoch][layer]` condition numbers of the row-equilibrated weights.
    pub kappa_ew: Vec<Vec<f64>>,
    pub diverged: bool,
    /// sha256 over every batch's sample indices, in order.
    pub order_hash: String,
    #[serde(skip)]
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl TrainTrace {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    /// First epoch (1-based) whose training loss is ≤ `target`.
    pub fn epochs_to_loss(&self, target: f64) -> Option<usize> {
        self.train_loss.iter().position(|l| *l <= target).map(|i| i + 1)
    }

    pub fn final_loss(&self) -> f64 {
        self.train_loss.last().copied().unwrap_or(self.initial_loss)
    }

    pub fn mean_wall_time_per_step(&self) -> f64 {
        if self.wall_time_per_step.is_empty() {
            return 0.0;
        }
        self.wall_time_per_step.iter().sum::<f64>() / self.wall_time_per_step.len() as f64
    }
}

/// The per-epoch batch index lists for a dataset of `n` samples.
pub fn batch_schedule(n: usize, batch_size: usize, epochs: usize, seed: u64) -> Vec<Vec<Vec<usize>>> {
    let mut r = rng::stream(seed, rng::label_id("order"));
    let mut idx: Vec<usize> = (0..n).collect();
    (0..epochs)
        .map(|_| {
            idx.shuffle(&mut r);
            idx.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
        })
        .collect()
}

fn is_instability(e: &Error) -> bool {
    matches!(e, Error::NonFiniteActivation { .. } | Error::NonFinite { .. })
}

/// Mini-batch SGD with optional heavy-ball momentum.
///
/// A non-finite loss or activation stops training and flags the trace; the
/// epochs completed so far are kept.
pub fn train(net: &mut Network, data: &Dataset, eval: Option<&Dataset>, cfg: &TrainConfig) -> Result<TrainTrace> {
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) || !(0.0..1.0).contains(&cfg.momentum) {
        return Err(Error::invalid("lr must be finite and >= 0, momentum in [0, 1)"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch_size must be positive"));
    }
    let eval = eval.unwrap_or(data);
    let schedule = batch_schedule(data.len(), cfg.batch_size, cfg.epochs, cfg.seed);
    let mut hasher = Sha256::new();
    for batch in schedule.iter().flatten() {
        for i in batch {
            hasher.update((*i as u64).to_le_bytes());
        }
        hasher.update(b"|");
    }
    let mut trace = TrainTrace {
        initial_loss: net.loss(&data.x, &data.y, cfg.loss, Mode::Eval).unwrap_or(f64::NAN),
        train_loss: Vec::new(),
        eval_loss: Vec::new(),
        accuracy: Vec::new(),
        wall_time_per_step: Vec::new(),
        kappa_w: Vec::new(),
        kappa_ew: Vec::new(),
        diverged: false,
        order_hash: hex::encode(hasher.finalize()),
        snapshots: Vec::new(),
    };
    let mut theta = net.params();
    let mut velocity = vec![0.0; theta.len()];

    'epochs: for (epoch, batches) in schedule.iter().enumerate() {
        let start = Instant::now();
        for batch in batches {
            let (x, y) = data.batch(batch);
            let step = net.forward(&x, Mode::Train).and_then(|cache| {
                let (v, d) = cfg.loss.value_and_grad(&cache.output, &y)?;
                let g = net.backward(&cache, &d)?;
                Ok((v, g, cache))
            });
            let (value, grad, cache) = match step {
                Ok(s) => s,
                Err(e) if is_instability(&e) => {
                    trace.diverged = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                trace.diverged = true;
                break 'epochs;
            }
            net.update_running_stats(&cache);
            for ((t, v), g) in theta.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v + g;
                *t -= cfg.lr * *v;
            }
            if let Err(e) = net.set_params(&theta) {
                if is_instability(&e) {
                    trace.diverged = true;
                    break 'epochs;
                }
                return Err(e);
            }
        }
        let per_step = start.elapsed().as_secs_f64() / batches.len().max(1) as f64;

        let eval_out = net.predict(&data.x, Mode::Eval).and_then(|p| {
            let tl = cfg.loss.value(&p, &data.y)?;
            let q = net.predict(&eval.x, Mode::Eval)?;
            let el = cfg.loss.value(&q, &eval.y)?;
            let acc = (cfg.loss == LossKind::Bce).then(|| binary_accuracy(&q, &eval.y));
            Ok((tl, el, acc))
        });
        let (tl, el, acc) = match eval_out {
            Ok(v) if v.0.is_finite() => v,
            Ok(_) => {
                trace.diverged = true;
                break;
            }
            Err(e) if is_instability(&e) => {
                trace.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let kappas = net.weight_kappas();
        trace.train_loss.push(tl);
        trace.eval_loss.push(el);
        trace.accuracy.push(acc);
        trace.wall_time_per_step.push(per_step);
        trace.kappa_w.push(kappas.iter().map(|k| k.0).collect());
        trace.kappa_ew.push(kappas.iter().map(|k| k.1).collect());
        if cfg.snapshot_epochs.contains(&(epoch + 1)) {
            trace.snapshots.push((epoch + 1, theta.clone()));
        }
    }
    if trace.diverged {
        log::info!("training diverged after {} epochs (lr {})", trace.epochs(), cfg.lr);
    }
    Ok(trace)
}
