use crate::error::{Error, Result};
use crate::numkit::{Rng, Tensor};

/// Number and width of time/frequency masks. Widths are exact; positions
/// are drawn uniformly so that each mask fits inside its axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SpecAugmentConfig {
    pub time_masks: usize,
    pub freq_masks: usize,
    pub time_width: usize,
    pub freq_width: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskAxis {
    Time,
    Frequency,
}

/// One applied mask, `[start, start + width)` along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mask {
    pub axis: MaskAxis,
    pub start: usize,
    pub width: usize,
}

/// Zeroes random contiguous time rows and frequency columns of a `[T, F]`
/// spectrogram. Returns the masked copy and the list of applied masks.
pub fn spec_augment(
    mel: &Tensor,
    rng: &mut Rng,
    cfg: &SpecAugmentConfig,
) -> Result<(Tensor, Vec<Mask>)> {
    if mel.rank() != 2 {
        return Err(Error::shape(format!("spec_augment expects [T, F], got {:?}", mel.shape())));
    }
    let (frames, bins) = mel.dims2();
    if cfg.time_masks > 0 && cfg.time_width > frames {
        return Err(Error::invalid(format!(
            "time mask width {} exceeds {frames} frames",
            cfg.time_width
        )));
    }
    if cfg.freq_masks > 0 && cfg.freq_width > bins {
        return Err(Error::invalid(format!(
            "frequency mask width {} exceeds {bins} bins",
            cfg.freq_width
        )));
    }
    let mut out = mel.clone();
    let mut log = Vec::with_capacity(cfg.time_masks + cfg.freq_masks);
    for _ in 0..cfg.time_masks {
        let start = rng.below(frames - cfg.time_width + 1);
        for t in start..start + cfg.time_width {
            out.row_mut(t).fill(0.0);
        }
        log.push(Mask { axis: MaskAxis::Time, start, width: cfg.time_width });
    }
    for _ in 0..cfg.freq_masks {
        let start = rng.below(bins - cfg.freq_width + 1);
        for t in 0..frames {
            out.row_mut(t)[start..start + cfg.freq_width].fill(0.0);
        }
        log.push(Mask { axis: MaskAxis::Frequency, start, width: cfg.freq_width });
    }
    Ok((out, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(t: usize) -> Tensor {
        Tensor::full(&[t, 128], 1.0)
    }

    #[test]
    fn no_masks_is_identity() {
        let mut rng = Rng::new(0);
        let x = Tensor::randn(&[50, 128], 1.0, &mut rng);
        let (y, log) = spec_augment(&x, &mut rng, &SpecAugmentConfig::default()).unwrap();
        assert!(log.is_empty());
        assert!(x.data().iter().zip(y.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn full_width_time_mask_zeroes_everything() {
        let cfg = SpecAugmentConfig { time_masks: 1, time_width: 50, ..Default::default() };
        let (y, _) = spec_augment(&ones(50), &mut Rng::new(1), &cfg).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn masked_count_matches_enumeration() {
        let t = 498;
        let cfg = SpecAugmentConfig { time_masks: 1, freq_masks: 1, time_width: 10, freq_width: 8 };
        for seed in 0..20 {
            let (y, log) = spec_augment(&ones(t), &mut Rng::new(seed), &cfg).unwrap();
            let zeros = y.data().iter().filter(|&&v| v == 0.0).count();
            // enumerate the cells covered by the logged masks
            let mut covered = 0;
            for r in 0..t {
                for c in 0..128 {
                    let hit = log.iter().any(|m| match m.axis {
                        MaskAxis::Time => (m.start..m.start + m.width).contains(&r),
                        MaskAxis::Frequency => (m.start..m.start + m.width).contains(&c),
                    });
                    covered += hit as usize;
                }
            }
            assert_eq!(zeros, covered);
            // one time and one frequency mask always intersect in 10·8 cells
            assert_eq!(zeros, 10 * 128 + 8 * t - 10 * 8);
        }
    }

    #[test]
    fn untouched_cells_are_bit_identical() {
        let mut rng = Rng::new(5);
        let x = Tensor::randn(&[40, 128], 1.0, &mut rng);
        let cfg = SpecAugmentConfig { time_masks: 2, freq_masks: 2, time_width: 3, freq_width: 5 };
        let (y, log) = spec_augment(&x, &mut Rng::new(9), &cfg).unwrap();
        for r in 0..40 {
            for c in 0..128 {
                let masked = log.iter().any(|m| match m.axis {
                    MaskAxis::Time => (m.start..m.start + m.width).contains(&r),
                    MaskAxis::Frequency => (m.start..m.start + m.width).contains(&c),
                });
                let (a, b) = (x.get(&[r, c]), y.get(&[r, c]));
                if masked {
                    assert_eq!(b, 0.0);
                } else {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn oversize_mask_rejected() {
        let cfg = SpecAugmentConfig { time_masks: 1, time_width: 51, ..Default::default() };
        assert!(spec_augment(&ones(50), &mut Rng::new(0), &cfg).is_err());
        let cfg = SpecAugmentConfig { freq_masks: 1, freq_width: 129, ..Default::default() };
        assert!(spec_augment(&ones(50), &mut Rng::new(0), &cfg).is_err());
    }
}
