//! Classifiers, losses, optimiser, schedule, augmentation and metrics.

mod augment;
mod checkpoint;
mod loss;
mod metrics;
mod mlp;
mod optim;
mod trainer;

pub use augment::{augment_eeg, circular_shift, AugmentDraw, AugmentSpec};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use loss::{cross_entropy_logits, double_softmax_ce};
pub use metrics::{evaluate_metrics, MetricsReport};
pub use mlp::{BatchNorm, MlpClassifier};
pub use optim::{cosine_lr, AdamW};
pub use trainer::{
    fit, mlp_for, predict, train_classifier, Augmenter, Classifier, History, Standardizer, TrainConfig, TrainedMlp,
};

use crate::attention::gradcheck::{make_case, DifferentiableOp};
use crate::attention::Parameterized;
use crate::numkit::{Rng, Tensor};

/// Gradient-check cases for the training-side ops.
pub(crate) fn gradcheck_cases(rng: &mut Rng) -> Vec<(String, Box<dyn DifferentiableOp>, Vec<f64>)> {
    let labels = vec![0, 3, 4];
    let logits = Tensor::randn(&[3, 5], 1.5, rng);
    let l2 = labels.clone();
    let ce = make_case(
        "cross_entropy",
        logits.data().to_vec(),
        move |v| Ok(cross_entropy_logits(&Tensor::new(vec![3, 5], v.to_vec())?, &labels, 0.1)?.0),
        move |v| Ok(cross_entropy_logits(&Tensor::new(vec![3, 5], v.to_vec())?, &l2, 0.1)?.1.into_data()),
    );

    let x = Tensor::randn(&[6, 3], 1.0, rng);
    let up = Tensor::randn(&[6, 3], 1.0, rng);
    let bn = BatchNorm {
        gamma: Tensor::randn(&[3], 1.0, rng),
        beta: Tensor::randn(&[3], 1.0, rng),
        ..BatchNorm::new(3)
    };
    let mut init = x.data().to_vec();
    init.extend(bn.flat_params());
    let (bn1, bn2, up2) = (bn.clone(), bn, up.clone());
    let unpack = |v: &[f64], t: &BatchNorm| -> (Tensor, BatchNorm) {
        let mut b = t.clone();
        b.set_flat_params(&v[18..]);
        (Tensor::new(vec![6, 3], v[..18].to_vec()).expect("fixed shape"), b)
    };
    let batch_norm = make_case(
        "batch_norm",
        init,
        move |v| {
            let (x, mut b) = unpack(v, &bn1);
            Ok(b.forward_train(&x)?.0.dot(&up))
        },
        move |v| {
            let (x, mut b) = unpack(v, &bn2);
            let (_, cache) = b.forward_train(&x)?;
            let mut g = b.zeros_like();
            let mut out = b.backward(&cache, &up2, &mut g).into_data();
            out.extend(g.flat_params());
            Ok(out)
        },
    );

    let mlp = MlpClassifier::new(&[4, 6, 5, 5], 0.5, rng).expect("valid widths");
    let x = Tensor::randn(&[5, 4], 1.0, rng);
    let up = Tensor::randn(&[5, 5], 1.0, rng);
    let (m1, m2, x2, up2) = (mlp.clone(), mlp.clone(), x.clone(), up.clone());
    let mlp_case = make_case(
        "mlp",
        mlp.flat_params(),
        move |v| {
            let mut m = m1.clone();
            m.set_flat_params(v);
            Ok(m.forward_train(&x, &mut Rng::new(17))?.0.dot(&up))
        },
        move |v| {
            let mut m = m2.clone();
            m.set_flat_params(v);
            let (_, cache) = m.forward_train(&x2, &mut Rng::new(17))?;
            Ok(m.backward(&cache, &up2).iter().flat_map(|t| t.data().iter().copied()).collect())
        },
    );
    vec![ce, batch_norm, mlp_case]
}
