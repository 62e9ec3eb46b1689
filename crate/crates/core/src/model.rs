//! L2-regularized logistic regression trained by full-batch gradient
//! descent.
//!
//! Training is sequential with a fixed summation order so that identical
//! inputs give bitwise-identical models.

use serde::{Deserialize, Serialize};

use crate::corpus::DocId;
use crate::error::{Error, Result};
use crate::featurize::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            l2_lambda: 1e-4,
            learning_rate: 1.0,
            max_iters: 300,
            tol: 1e-7,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::InvalidConfig("l2_lambda must be >= 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig("tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// One labeled training example.
pub type Example<'a> = (&'a SparseVector, bool);

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyperparams: Hyperparams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: DocId,
    /// Probability in the open interval (0, 1).
    pub score: f64,
    pub label: bool,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<DocId>, score: f64, label: bool) -> Self {
        ScoredDoc {
            doc_id: doc_id.into(),
            score,
            label,
        }
    }
}

/// Largest f64 strictly below one.
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, clamped into the open unit interval.
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, ONE_MINUS)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Model {
    pub fn zeros(dim: usize, hyperparams: Hyperparams) -> Self {
        Model {
            weights: vec![0.0; dim],
            bias: 0.0,
            hyperparams,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseVector) -> f64 {
        sigmoid(self.decision(x))
    }

    fn check_dim(&self, x: &SparseVector) -> Result<()> {
        if x.min_dim() > self.dim() {
            return Err(Error::DimensionMismatch {
                position: x.min_dim() - 1,
                dim: self.dim(),
            });
        }
        Ok(())
    }

    /// Scores documents in input order.
    pub fn score<'a, I>(&self, docs: I) -> Result<Vec<ScoredDoc>>
    where
        I: IntoIterator<Item = (DocId, &'a SparseVector, bool)>,
    {
        docs.into_iter()
            .map(|(doc_id, x, label)| {
                self.check_dim(x)?;
                Ok(ScoredDoc {
                    doc_id,
                    score: self.predict(x),
                    label,
                })
            })
            .collect()
    }

    /// Writes `position,weight` rows followed by a `bias` row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["position", "weight"])?;
        for (i, v) in self.weights.iter().enumerate() {
            if *v != 0.0 {
                w.write_record([i.to_string(), v.to_string()])?;
            }
        }
        w.write_record(["bias".to_string(), self.bias.to_string()])?;
        w.flush().map_err(|e| Error::io("<model csv>", e))?;
        Ok(())
    }
}

/// Mean regularized logistic loss over `batch` and its analytic gradient.
///
/// The bias is not regularized.
pub fn loss_and_gradient(model: &Model, batch: &[Example<'_>], l2_lambda: f64) -> (f64, Vec<f64>, f64) {
    let mut grad_w = vec![0.0; model.dim()];
    let (loss, grad_b) = accumulate(model, batch, l2_lambda, &mut grad_w);
    (loss, grad_w, grad_b)
}

fn accumulate(model: &Model, batch: &[Example<'_>], l2_lambda: f64, grad_w: &mut [f64]) -> (f64, f64) {
    assert!(!batch.is_empty(), "batch must be nonempty");
    grad_w.iter_mut().for_each(|g| *g = 0.0);
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grad_b = 0.0;
    for &(x, y) in batch {
        let z = model.decision(x);
        let t = if y { 1.0 } else { 0.0 };
        loss += softplus(z) - t * z;
        let residual = sigmoid_unclamped(z) - t;
        grad_b += residual;
        x.add_scaled_to(grad_w, residual / n);
    }
    let mut penalty = 0.0;
    for (g, w) in grad_w.iter_mut().zip(&model.weights) {
        penalty += w * w;
        *g += l2_lambda * w;
    }
    (loss / n + 0.5 * l2_lambda * penalty, grad_b / n)
}

fn sigmoid_unclamped(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains from zero initialization. See [`train_traced`].
pub fn train(training: &[Example<'_>], dim: usize, hp: Hyperparams) -> Result<Model> {
    train_traced(training, dim, hp).map(|(m, _)| m)
}

/// Trains and returns the loss evaluated before each update.
///
/// Stops after `max_iters` updates or once the loss changes by less than
/// `tol` between consecutive evaluations.
pub fn train_traced(training: &[Example<'_>], dim: usize, hp: Hyperparams) -> Result<(Model, Vec<f64>)> {
    hp.validate()?;
    let positives = training.iter().filter(|e| e.1).count();
    if positives == 0 || positives == training.len() {
        return Err(Error::DegenerateTraining);
    }
    if let Some(x) = training.iter().map(|e| e.0).find(|x| x.min_dim() > dim) {
        return Err(Error::DimensionMismatch {
            position: x.min_dim() - 1,
            dim,
        });
    }

    let mut model = Model::zeros(dim, hp);
    let mut grad_w = vec![0.0; dim];
    let mut losses: Vec<f64> = Vec::new();
    for iter in 0..hp.max_iters {
        let (loss, grad_b) = accumulate(&model, training, hp.l2_lambda, &mut grad_w);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(iter));
        }
        if let Some(&prev) = losses.last() {
            if (prev - loss).abs() < hp.tol {
                losses.push(loss);
                break;
            }
        }
        losses.push(loss);
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= hp.learning_rate * g;
        }
        model.bias -= hp.learning_rate * grad_b;
    }
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(Error::NonFiniteLoss(hp.max_iters));
    }
    Ok((model, losses))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn zero_iterations_gives_zero_model() {
        let a = sv(&[(0, 1.0)]);
        let b = sv(&[(1, 1.0)]);
        let hp = Hyperparams {
            max_iters: 0,
            ..Default::default()
        };
        let m = train(&[(&a, true), (&b, false)], 2, hp).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert_eq!(m.bias, 0.0);
        assert_eq!(m.predict(&a), 0.5);
    }

    #[test]
    fn separable_pair() {
        let a = sv(&[(0, 1.0)]);
        let b = sv(&[(1, 1.0)]);
        let (m, losses) = train_traced(&[(&a, true), (&b, false)], 2, Hyperparams::default()).unwrap();
        assert!(m.predict(&a) > 0.5);
        assert!(m.predict(&b) < 0.5);
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(losses.last().unwrap() < &losses[0]);
    }

    #[test]
    fn single_class_is_degenerate() {
        let a = sv(&[(0, 1.0)]);
        assert!(matches!(
            train(&[(&a, true), (&a, true)], 2, Hyperparams::default()),
            Err(Error::DegenerateTraining)
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let a = sv(&[(0, 1.0)]);
        let b = sv(&[(0, 1.0)]);
        let hp = Hyperparams {
            learning_rate: 1e308,
            l2_lambda: 1.0,
            ..Default::default()
        };
        let r = train(&[(&a, true), (&b, false), (&sv(&[(1, 0.5)]), true)], 2, hp);
        assert!(matches!(r, Err(Error::NonFiniteLoss(_))));
    }

    #[test]
    fn loss_at_zero_model() {
        let m = Model::zeros(3, Hyperparams::default());
        let x = SparseVector::default();
        let (loss, gw, gb) = loss_and_gradient(&m, &[(&x, true)], 0.0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(gb, -0.5);
        assert!(gw.iter().all(|&g| g == 0.0));

        let y = sv(&[(0, 0.3), (2, 0.7)]);
        let (_, _, gb) = loss_and_gradient(&m, &[(&y, true), (&y, false)], 0.0);
        assert_eq!(gb, 0.0);
    }

    #[test]
    fn scoring() {
        let m = Model::zeros(2, Hyperparams::default());
        let x = sv(&[(1, 0.5)]);
        let s = m.score([(DocId::from("a"), &x, true)]).unwrap();
        assert_eq!(s[0].score, 0.5);

        let big = Model {
            weights: vec![1e6, 0.0],
            bias: 0.0,
            hyperparams: Hyperparams::default(),
        };
        let p = big.predict(&sv(&[(0, 1.0)]));
        assert!(p < 1.0 && p > 0.999);
        let q = big.predict(&sv(&[(0, -1.0)]));
        assert!(q > 0.0 && q < 1e-300);

        let far = sv(&[(5, 1.0)]);
        assert!(matches!(
            m.score([(DocId::from("b"), &far, false)]),
            Err(Error::DimensionMismatch { position: 5, dim: 2 })
        ));
    }
}
