use super::Parameterized;

/// Named trainable weight shapes of a model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelDescriptor {
    pub tensors: Vec<(String, Vec<usize>)>,
}

impl ModelDescriptor {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> &mut Self {
        self.tensors.push((name.into(), shape.to_vec()));
        self
    }

    /// Fully connected stack with biases; `batchnorm` adds scale and shift
    /// after every hidden layer.
    pub fn mlp(widths: &[usize], batchnorm: bool) -> Self {
        let mut d = Self::empty();
        for (i, w) in widths.windows(2).enumerate() {
            d.push(format!("fc{i}.weight"), &[w[0], w[1]]);
            d.push(format!("fc{i}.bias"), &[w[1]]);
            if batchnorm && i + 2 < widths.len() {
                d.push(format!("bn{i}.gamma"), &[w[1]]);
                d.push(format!("bn{i}.beta"), &[w[1]]);
            }
        }
        d
    }

    pub fn se_block(channels: usize, reduction: usize) -> Self {
        let hidden = channels / reduction.max(1);
        let mut d = Self::empty();
        d.push("se.w1", &[hidden, channels]).push("se.w2", &[channels, hidden]);
        d
    }

    pub fn from_model(model: &impl Parameterized) -> Self {
        let mut d = Self::empty();
        for (i, t) in model.params().iter().enumerate() {
            d.push(format!("param{i}"), t.shape());
        }
        d
    }
}

/// Sum of trainable element counts.
pub fn param_count(desc: &ModelDescriptor) -> usize {
    desc.tensors.iter().map(|(_, s)| s.iter().product::<usize>()).sum()
}
