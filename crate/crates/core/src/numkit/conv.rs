use crate::error::{Error, Result};

use super::Tensor;

struct ConvDims {
    c_in: usize,
    c_out: usize,
    k: usize,
    t_in: usize,
    t_out: usize,
}

fn conv_dims(signal: &Tensor, kernels: &Tensor, padding: usize) -> Result<ConvDims> {
    if signal.rank() != 2 || kernels.rank() != 3 {
        return Err(Error::shape(format!(
            "conv1d expects signal [C_in, T] and kernels [C_out, C_in, K], got {:?} and {:?}",
            signal.shape(),
            kernels.shape()
        )));
    }
    let (c_in, t_in) = signal.dims2();
    let (c_out, kc_in, k) = (kernels.shape()[0], kernels.shape()[1], kernels.shape()[2]);
    if kc_in != c_in {
        return Err(Error::shape(format!(
            "conv1d: signal has {c_in} channels but kernels expect {kc_in}"
        )));
    }
    if k % 2 == 0 {
        return Err(Error::invalid(format!("conv1d kernel size must be odd, got {k}")));
    }
    if t_in + 2 * padding < k {
        return Err(Error::shape(format!(
            "conv1d: kernel {k} longer than padded signal {}",
            t_in + 2 * padding
        )));
    }
    Ok(ConvDims {
        c_in,
        c_out,
        k,
        t_in,
        t_out: t_in + 2 * padding + 1 - k,
    })
}

/// Valid range of output positions `t` for which `t + tap - padding` lands
/// inside the signal.
fn tap_range(tap: usize, padding: usize, t_in: usize, t_out: usize) -> (usize, usize) {
    let lo = padding.saturating_sub(tap);
    let hi = (t_in + padding).saturating_sub(tap).min(t_out);
    (lo, hi.max(lo))
}

/// Multi-channel 1-D cross-correlation with zero padding on both sides.
///
/// Output length is `T + 2·padding − K + 1`, so `padding = (K−1)/2` keeps
/// the sequence length.
pub fn conv1d(signal: &Tensor, kernels: &Tensor, padding: usize) -> Result<Tensor> {
    let d = conv_dims(signal, kernels, padding)?;
    let x = signal.data();
    let w = kernels.data();
    let mut out = vec![0.0; d.c_out * d.t_out];
    for o in 0..d.c_out {
        let orow = &mut out[o * d.t_out..(o + 1) * d.t_out];
        for i in 0..d.c_in {
            let xrow = &x[i * d.t_in..(i + 1) * d.t_in];
            for tap in 0..d.k {
                let wv = w[(o * d.c_in + i) * d.k + tap];
                if wv == 0.0 {
                    continue;
                }
                let (lo, hi) = tap_range(tap, padding, d.t_in, d.t_out);
                let shift = tap as isize - padding as isize;
                for t in lo..hi {
                    orow[t] += wv * xrow[(t as isize + shift) as usize];
                }
            }
        }
    }
    Tensor::new(vec![d.c_out, d.t_out], out)
}

/// Gradients of [`conv1d`] with respect to its signal and kernels.
pub fn conv1d_backward(
    signal: &Tensor,
    kernels: &Tensor,
    padding: usize,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let d = conv_dims(signal, kernels, padding)?;
    if grad_out.shape() != [d.c_out, d.t_out] {
        return Err(Error::shape(format!(
            "conv1d backward: upstream {:?}, expected [{}, {}]",
            grad_out.shape(),
            d.c_out,
            d.t_out
        )));
    }
    let x = signal.data();
    let w = kernels.data();
    let g = grad_out.data();
    let mut gx = vec![0.0; d.c_in * d.t_in];
    let mut gw = vec![0.0; d.c_out * d.c_in * d.k];
    for o in 0..d.c_out {
        let grow = &g[o * d.t_out..(o + 1) * d.t_out];
        for i in 0..d.c_in {
            let xrow = &x[i * d.t_in..(i + 1) * d.t_in];
            let gxrow = &mut gx[i * d.t_in..(i + 1) * d.t_in];
            for tap in 0..d.k {
                let widx = (o * d.c_in + i) * d.k + tap;
                let wv = w[widx];
                let (lo, hi) = tap_range(tap, padding, d.t_in, d.t_out);
                let shift = tap as isize - padding as isize;
                let mut acc = 0.0;
                for t in lo..hi {
                    let s = (t as isize + shift) as usize;
                    acc += grow[t] * xrow[s];
                    gxrow[s] += grow[t] * wv;
                }
                gw[widx] += acc;
            }
        }
    }
    Ok((
        Tensor::new(vec![d.c_in, d.t_in], gx)?,
        Tensor::new(vec![d.c_out, d.c_in, d.k], gw)?,
    ))
}
