//! Central finite-difference verification of analytic gradients.
//!
//! Every differentiable op is wrapped as a scalar loss
//! `L(θ) = Σ upstream ⊙ op(θ)` over a flat parameter vector `θ` with a fixed
//! random `upstream`, so the analytic gradient is exactly the op's backward
//! pass applied to `upstream`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{conv1d, conv1d_backward, softmax_backward_slice, softmax_slice, Rng, Tensor};

use super::dual::{DualAttention, DualAttentionConfig};
use super::gate::{skip_gate_backward, skip_gate_fuse, SkipGate};
use super::layers::Linear;
use super::mha::{scaled_dot_attention, scaled_dot_attention_backward, AttentionParams};
use super::se::SeBlock;
use super::space_time::{SpaceTimeAttention, SpaceTimeConfig};
use super::tri_stream::{TriStreamConfig, TriStreamModel};
use super::Parameterized;

/// Finite-difference step.
pub const STEP: f64 = 1e-5;
/// Coordinates probed per check (all of them when there are fewer).
pub const PROBES: usize = 24;

/// A scalar function of a flat parameter vector with an analytic gradient.
pub trait DifferentiableOp {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Adapts a pair of closures to [`DifferentiableOp`].
pub struct FnOp<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> DifferentiableOp for FnOp<V, G>
where
    V: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn value(&self, x: &[f64]) -> Result<f64> {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.gradient)(x)
    }
}

/// Max over probed coordinates of `|analytic − numeric| / max(1, |numeric|)`.
pub fn grad_check(op: &dyn DifferentiableOp, params: &[f64], probe: &mut Rng) -> Result<f64> {
    if params.is_empty() {
        return Err(Error::invalid("grad_check needs at least one parameter"));
    }
    let analytic = op.gradient(params)?;
    if analytic.len() != params.len() {
        return Err(Error::shape(format!(
            "gradient has {} entries for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    let mut coords: Vec<usize> = (0..params.len()).collect();
    probe.shuffle(&mut coords);
    coords.truncate(PROBES);
    let mut x = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in coords {
        let orig = x[i];
        x[i] = orig + STEP;
        let up = op.value(&x)?;
        x[i] = orig - STEP;
        let down = op.value(&x)?;
        x[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        if !numeric.is_finite() || !analytic[i].is_finite() {
            return Err(Error::NonFinite(format!("gradient at coordinate {i}")));
        }
        worst = worst.max((analytic[i] - numeric).abs() / numeric.abs().max(1.0));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckResult {
    pub op: String,
    pub params: usize,
    pub probes: usize,
    pub max_rel_error: f64,
}

fn split<'a>(x: &'a [f64], sizes: &[usize]) -> Vec<&'a [f64]> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut off = 0;
    for &n in sizes {
        out.push(&x[off..off + n]);
        off += n;
    }
    out
}

fn tensor(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::new(shape.to_vec(), data.to_vec()).expect("registry shapes are consistent")
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

type Case = (String, Box<dyn DifferentiableOp>, Vec<f64>);

fn case<V, G>(name: &str, x: Vec<f64>, value: V, gradient: G) -> Case
where
    V: Fn(&[f64]) -> Result<f64> + 'static,
    G: Fn(&[f64]) -> Result<Vec<f64>> + 'static,
{
    (name.to_string(), Box::new(FnOp { value, gradient }), x)
}

/// Builds a model from a template and a flat vector.
fn with_params<M: Parameterized + Clone>(template: &M, flat: &[f64]) -> M {
    let mut m = template.clone();
    m.set_flat_params(flat);
    m
}

fn flat_grads<M: Parameterized + Clone>(g: M) -> Vec<f64> {
    g.params().iter().flat_map(|t| t.data().iter().copied()).collect()
}

fn linear_case(rng: &mut Rng) -> Case {
    let lin = Linear::new(4, 3, rng);
    let x = Tensor::randn(&[3, 4], 1.0, rng);
    let up = Tensor::randn(&[3, 3], 1.0, rng);
    let n_x = x.len();
    let init = concat(&[x.data(), &lin.flat_params()]);
    let (l1, l2) = (lin.clone(), lin);
    let up2 = up.clone();
    case(
        "linear",
        init,
        move |v| {
            let m = with_params(&l1, &v[n_x..]);
            Ok(m.forward(&tensor(&[3, 4], &v[..n_x]))?.dot(&up))
        },
        move |v| {
            let m = with_params(&l2, &v[n_x..]);
            let mut g = m.zeros_like();
            let dx = m.backward(&tensor(&[3, 4], &v[..n_x]), &up2, &mut g);
            Ok(concat(&[dx.data(), &flat_grads(g)]))
        },
    )
}

fn softmax_case(rng: &mut Rng) -> Case {
    let x: Vec<f64> = (0..7).map(|_| 2.0 * rng.normal()).collect();
    let up: Vec<f64> = (0..7).map(|_| rng.normal()).collect();
    let up2 = up.clone();
    case(
        "softmax",
        x,
        move |v| {
            let mut p = v.to_vec();
            softmax_slice(&mut p);
            Ok(p.iter().zip(&up).map(|(a, b)| a * b).sum())
        },
        move |v| {
            let mut p = v.to_vec();
            softmax_slice(&mut p);
            Ok(softmax_backward_slice(&p, &up2))
        },
    )
}

fn sdpa_case(rng: &mut Rng) -> Case {
    let init: Vec<f64> = (0..36).map(|_| rng.normal()).collect();
    let up = Tensor::randn(&[3, 4], 1.0, rng);
    let up2 = up.clone();
    let unpack = |v: &[f64]| {
        let s = split(v, &[12, 12, 12]);
        (tensor(&[3, 4], s[0]), tensor(&[3, 4], s[1]), tensor(&[3, 4], s[2]))
    };
    case(
        "scaled_dot_attention",
        init,
        move |v| {
            let (q, k, vv) = unpack(v);
            Ok(scaled_dot_attention(&q, &k, &vv)?.0.dot(&up))
        },
        move |v| {
            let (q, k, vv) = unpack(v);
            let (_, p) = scaled_dot_attention(&q, &k, &vv)?;
            let (dq, dk, dv) = scaled_dot_attention_backward(&q, &k, &vv, &p, &up2);
            Ok(concat(&[dq.data(), dk.data(), dv.data()]))
        },
    )
}

fn mha_case(rng: &mut Rng) -> Case {
    let att = AttentionParams::new(8, 2, rng).expect("valid heads");
    let x = Tensor::randn(&[5, 8], 1.0, rng);
    let up = Tensor::randn(&[5, 8], 1.0, rng);
    let bias = vec![0.0, 1.2f64.ln(), 0.0, 0.0, -0.3];
    let n_x = x.len();
    let init = concat(&[x.data(), &att.flat_params()]);
    let (a1, a2, up2, b2) = (att.clone(), att, up.clone(), bias.clone());
    case(
        "mha",
        init,
        move |v| {
            let m = with_params(&a1, &v[n_x..]);
            Ok(m.forward(&tensor(&[5, 8], &v[..n_x]), Some(&bias))?.0.dot(&up))
        },
        move |v| {
            let m = with_params(&a2, &v[n_x..]);
            let (_, cache) = m.forward(&tensor(&[5, 8], &v[..n_x]), Some(&b2))?;
            let mut g = m.zeros_like();
            let dx = m.backward(&cache, &up2, &mut g);
            Ok(concat(&[dx.data(), &flat_grads(g)]))
        },
    )
}

fn se_case(rng: &mut Rng) -> Case {
    let se = SeBlock::new(8, 2, rng).expect("valid SE config");
    let x = Tensor::randn(&[8, 5], 1.0, rng);
    let up = Tensor::randn(&[8, 5], 1.0, rng);
    let n_x = x.len();
    let init = concat(&[x.data(), &se.flat_params()]);
    let (s1, s2, up2) = (se.clone(), se, up.clone());
    case(
        "se_block",
        init,
        move |v| {
            let m = with_params(&s1, &v[n_x..]);
            Ok(m.forward(&tensor(&[8, 5], &v[..n_x]))?.0.dot(&up))
        },
        move |v| {
            let m = with_params(&s2, &v[n_x..]);
            let x = tensor(&[8, 5], &v[..n_x]);
            let (_, cache) = m.forward(&x)?;
            let mut g = m.zeros_like();
            let dx = m.backward(&x, &cache, &up2, &mut g);
            Ok(concat(&[dx.data(), &flat_grads(g)]))
        },
    )
}

fn skip_gate_case(rng: &mut Rng) -> Case {
    let mut init: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
    init.push(SkipGate::PRETRAINED_INIT);
    let up = Tensor::randn(&[4], 1.0, rng);
    let up2 = up.clone();
    let unpack = |v: &[f64]| (tensor(&[4], &v[..4]), tensor(&[4], &v[4..8]), SkipGate::new(v[8]));
    case(
        "skip_gate",
        init,
        move |v| {
            let (p, a, g) = unpack(v);
            Ok(skip_gate_fuse(&p, &a, g)?.dot(&up))
        },
        move |v| {
            let (p, a, g) = unpack(v);
            let (dp, da, dw) = skip_gate_backward(&p, &a, g, &up2);
            Ok(concat(&[dp.data(), da.data(), &[dw]]))
        },
    )
}

fn conv_case(rng: &mut Rng) -> Case {
    let init: Vec<f64> = (0..18 + 18).map(|_| rng.normal()).collect();
    let up = Tensor::randn(&[3, 9], 1.0, rng);
    let up2 = up.clone();
    let unpack = |v: &[f64]| (tensor(&[2, 9], &v[..18]), tensor(&[3, 2, 3], &v[18..]));
    case(
        "conv1d",
        init,
        move |v| {
            let (x, w) = unpack(v);
            Ok(conv1d(&x, &w, 1)?.dot(&up))
        },
        move |v| {
            let (x, w) = unpack(v);
            let (dx, dw) = conv1d_backward(&x, &w, 1, &up2)?;
            Ok(concat(&[dx.data(), dw.data()]))
        },
    )
}

fn tri_stream_case(rng: &mut Rng) -> Case {
    let cfg = TriStreamConfig::tiny();
    let model = TriStreamModel::new(cfg.clone(), rng).expect("tiny config is valid");
    let trial = Tensor::randn(&[cfg.channels, cfg.samples], 1.0, rng);
    let up: Vec<f64> = (0..crate::NUM_CLASSES).map(|_| rng.normal()).collect();
    let init = model.flat_params();
    let (m1, m2, t2, up2) = (model.clone(), model, trial.clone(), up.clone());
    case(
        "tri_stream",
        init,
        move |v| {
            let m = with_params(&m1, v);
            let (logits, _) = m.forward(&trial)?;
            Ok(logits.data().iter().zip(&up).map(|(a, b)| a * b).sum())
        },
        move |v| {
            let m = with_params(&m2, v);
            let (_, cache) = m.forward(&t2)?;
            let mut g = m.zeros_like();
            m.backward(&cache, &up2, &mut g)?;
            Ok(flat_grads(g))
        },
    )
}

fn dual_case(rng: &mut Rng) -> Case {
    let cfg = DualAttentionConfig {
        time: 4,
        freq: 3,
        dim: 4,
        heads: 2,
        ..Default::default()
    };
    let model = DualAttention::new(cfg, rng).expect("valid config");
    let grid = Tensor::randn(&[4, 3, 4], 1.0, rng);
    let cls = Tensor::randn(&[4], 1.0, rng);
    let up = Tensor::randn(&[4], 1.0, rng);
    let init = concat(&[grid.data(), cls.data(), &model.flat_params()]);
    let (m1, m2, up2) = (model.clone(), model, up.clone());
    let unpack = |v: &[f64]| (tensor(&[4, 3, 4], &v[..48]), tensor(&[4], &v[48..52]));
    case(
        "dual_attention",
        init,
        move |v| {
            let (g, c) = unpack(v);
            Ok(with_params(&m1, &v[52..]).forward(&g, &c)?.0.dot(&up))
        },
        move |v| {
            let (g, c) = unpack(v);
            let m = with_params(&m2, &v[52..]);
            let (_, cache) = m.forward(&g, &c)?;
            let mut gr = m.zeros_like();
            let (dg, dc) = m.backward(&cache, &up2, &mut gr)?;
            Ok(concat(&[dg.data(), dc.data(), &flat_grads(gr)]))
        },
    )
}

fn space_time_case(rng: &mut Rng) -> Case {
    let cfg = SpaceTimeConfig {
        frames: 3,
        patches: 4,
        dim: 4,
        heads: 2,
        blocks: 2,
    };
    let model = SpaceTimeAttention::new(cfg, rng).expect("valid config");
    let grid = Tensor::randn(&[3, 4, 4], 1.0, rng);
    let up = Tensor::randn(&[4], 1.0, rng);
    let init = concat(&[grid.data(), &model.flat_params()]);
    let (m1, m2, up2) = (model.clone(), model, up.clone());
    case(
        "space_time",
        init,
        move |v| Ok(with_params(&m1, &v[48..]).forward(&tensor(&[3, 4, 4], &v[..48]))?.0.dot(&up)),
        move |v| {
            let m = with_params(&m2, &v[48..]);
            let (_, cache) = m.forward(&tensor(&[3, 4, 4], &v[..48]))?;
            let mut gr = m.zeros_like();
            let dg = m.backward(&cache, &up2, &mut gr)?;
            Ok(concat(&[dg.data(), &flat_grads(gr)]))
        },
    )
}

/// Names of every registered op, in report order.
pub fn registered_ops() -> Vec<String> {
    registry(&mut Rng::new(0)).into_iter().map(|(n, _, _)| n).collect()
}

fn registry(rng: &mut Rng) -> Vec<Case> {
    let mut cases = vec![
        linear_case(rng),
        softmax_case(rng),
        sdpa_case(rng),
        mha_case(rng),
        se_case(rng),
        skip_gate_case(rng),
        conv_case(rng),
    ];
    cases.extend(crate::train::gradcheck_cases(rng));
    cases.extend([tri_stream_case(rng), dual_case(rng), space_time_case(rng)]);
    cases
}

pub(crate) fn make_case<V, G>(name: &str, x: Vec<f64>, value: V, gradient: G) -> (String, Box<dyn DifferentiableOp>, Vec<f64>)
where
    V: Fn(&[f64]) -> Result<f64> + 'static,
    G: Fn(&[f64]) -> Result<Vec<f64>> + 'static,
{
    case(name, x, value, gradient)
}

/// Runs [`grad_check`] over every registered op at seeded toy shapes.
pub fn gradcheck_suite(seed: u64) -> Result<Vec<GradCheckResult>> {
    let mut rng = Rng::stream(seed, 0);
    let mut probe = Rng::stream(seed, 1);
    registry(&mut rng)
        .into_iter()
        .map(|(name, op, x)| {
            let err = grad_check(op.as_ref(), &x, &mut probe)?;
            Ok(GradCheckResult {
                op: name,
                params: x.len(),
                probes: x.len().min(PROBES),
                max_rel_error: err,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_op_passes() {
        for r in gradcheck_suite(11).unwrap() {
            assert!(r.max_rel_error < 1e-4, "{} failed: {}", r.op, r.max_rel_error);
            assert!(r.probes >= PROBES.min(r.params));
        }
    }

    #[test]
    fn linear_is_near_exact() {
        let mut rng = Rng::new(2);
        let (_, op, x) = linear_case(&mut rng);
        assert!(grad_check(op.as_ref(), &x, &mut rng).unwrap() < 1e-7);
    }

    #[test]
    fn attention_on_random_3x4() {
        let mut rng = Rng::new(3);
        let (_, op, x) = sdpa_case(&mut rng);
        assert!(grad_check(op.as_ref(), &x, &mut rng).unwrap() < 1e-4);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let op = FnOp {
            value: |v: &[f64]| Ok(v.iter().map(|a| a * a).sum()),
            gradient: |v: &[f64]| Ok(v.iter().map(|a| 3.0 * a).collect()),
        };
        let x: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        assert!(grad_check(&op, &x, &mut Rng::new(0)).unwrap() > 0.1);
    }

    #[test]
    fn non_finite_is_an_error() {
        let op = FnOp {
            value: |_: &[f64]| Ok(f64::NAN),
            gradient: |v: &[f64]| Ok(vec![0.0; v.len()]),
        };
        assert!(matches!(grad_check(&op, &[1.0], &mut Rng::new(0)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn registry_covers_the_mechanisms() {
        let ops = registered_ops();
        for name in [
            "linear",
            "softmax",
            "scaled_dot_attention",
            "mha",
            "se_block",
            "skip_gate",
            "conv1d",
            "cross_entropy",
            "batch_norm",
            "mlp",
            "tri_stream",
            "dual_attention",
            "space_time",
        ] {
            assert!(ops.iter().any(|o| o == name), "missing {name}");
        }
    }
}
