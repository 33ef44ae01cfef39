//! Binary weight blocks.
//!
//! Layout: `u8` tag length, UTF-8 model tag, `u32` LE dimension count, that many
//! `u32` LE dimensions, then the parameters as little-endian `f64`s.
//!
//! | model    | dims             | parameters                                           |
//! |----------|------------------|------------------------------------------------------|
//! | `lin`    | `[5]`            | 5 coefficients, intercept                            |
//! | `ridge2` | `[F]`            | F feature means, F feature scales, F coefs, intercept |
//! | `mlp`    | `[5, H]`         | 5 input means, 5 input scales, 5×H input weights (row per input), H biases, H output weights, output bias, target mean, target scale |

use super::{ModelId, LAGS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeights {
    pub coef: [f64; LAGS],
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeWeights {
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub coef: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub hidden: usize,
    pub input_mean: [f64; LAGS],
    pub input_scale: [f64; LAGS],
    /// Row-major, `w1[i * hidden + h]`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub target_mean: f64,
    pub target_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Lin(LinearWeights),
    Ridge2(RidgeWeights),
    Mlp(MlpWeights),
}

impl Weights {
    pub fn model_id(&self) -> ModelId {
        match self {
            Weights::Lin(_) => ModelId::Lin,
            Weights::Ridge2(_) => ModelId::Ridge2,
            Weights::Mlp(_) => ModelId::Mlp,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (dims, params): (Vec<u32>, Vec<f64>) = match self {
            Weights::Lin(w) => {
                let mut p = w.coef.to_vec();
                p.push(w.intercept);
                (vec![LAGS as u32], p)
            }
            Weights::Ridge2(w) => {
                let mut p = Vec::with_capacity(3 * w.coef.len() + 1);
                p.extend(&w.feature_mean);
                p.extend(&w.feature_scale);
                p.extend(&w.coef);
                p.push(w.intercept);
                (vec![w.coef.len() as u32], p)
            }
            Weights::Mlp(w) => {
                let mut p = Vec::new();
                p.extend(w.input_mean);
                p.extend(w.input_scale);
                p.extend(&w.w1);
                p.extend(&w.b1);
                p.extend(&w.w2);
                p.extend([w.b2, w.target_mean, w.target_scale]);
                (vec![LAGS as u32, w.hidden as u32], p)
            }
        };
        let tag = self.model_id().as_str().as_bytes();
        let mut out = Vec::with_capacity(1 + tag.len() + 4 * (dims.len() + 1) + 8 * params.len());
        out.push(tag.len() as u8);
        out.extend_from_slice(tag);
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in &dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for p in &params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let tag_len = r.take(1)?[0] as usize;
        let tag = std::str::from_utf8(r.take(tag_len)?)
            .map_err(|_| Error::InvalidWeights("model tag is not UTF-8".into()))?;
        let model: ModelId = tag.parse()?;
        let ndims = r.u32()? as usize;
        if ndims > 8 {
            return Err(Error::InvalidWeights(format!("{ndims} dimensions")));
        }
        let dims = (0..ndims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let rest = r.remaining();
        if !rest.len().is_multiple_of(8) {
            return Err(Error::InvalidWeights("trailing bytes".into()));
        }
        let params: Vec<f64> = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();

        let expect_len = |want: usize| {
            if params.len() == want {
                Ok(())
            } else {
                Err(Error::InvalidWeights(format!(
                    "{model}: expected {want} parameters, found {}",
                    params.len()
                )))
            }
        };
        match (model, dims.as_slice()) {
            (ModelId::Lin, [LAGS]) => {
                expect_len(LAGS + 1)?;
                Ok(Weights::Lin(LinearWeights {
                    coef: params[..LAGS].try_into().expect("5 coefficients"),
                    intercept: params[LAGS],
                }))
            }
            (ModelId::Ridge2, &[f]) if f > 0 => {
                expect_len(3 * f + 1)?;
                Ok(Weights::Ridge2(RidgeWeights {
                    feature_mean: params[..f].to_vec(),
                    feature_scale: params[f..2 * f].to_vec(),
                    coef: params[2 * f..3 * f].to_vec(),
                    intercept: params[3 * f],
                }))
            }
            (ModelId::Mlp, &[LAGS, h]) if h > 0 => {
                expect_len(2 * LAGS + LAGS * h + 2 * h + 3)?;
                let mut it = params.into_iter();
                let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<f64>>();
                let input_mean = take(LAGS).try_into().expect("5 means");
                let input_scale = take(LAGS).try_into().expect("5 scales");
                let w1 = take(LAGS * h);
                let b1 = take(h);
                let w2 = take(h);
                let tail = take(3);
                Ok(Weights::Mlp(MlpWeights {
                    hidden: h,
                    input_mean,
                    input_scale,
                    w1,
                    b1,
                    w2,
                    b2: tail[0],
                    target_mean: tail[1],
                    target_scale: tail[2],
                }))
            }
            (m, d) => Err(Error::InvalidWeights(format!("{m}: unexpected shape {d:?}"))),
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::InvalidWeights("truncated weight block".into()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lin_layout_is_exact() {
        let w = Weights::Lin(LinearWeights { coef: [0.0, 0.0, 0.0, 0.0, 1.0], intercept: -0.5 });
        let bytes = w.encode();
        assert_eq!(&bytes[..4], b"\x03lin");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &5u32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 6 * 8);
        assert_eq!(&bytes[bytes.len() - 8..], &(-0.5f64).to_le_bytes());
    }

    #[test]
    fn unknown_tag_and_truncation_are_rejected() {
        let mut bytes = vec![7u8];
        bytes.extend_from_slice(b"unknown");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&5u32.to_le_bytes());
        assert!(matches!(Weights::decode(&bytes), Err(Error::UnknownModel(_))));

        let good = Weights::Lin(LinearWeights { coef: [1.0; 5], intercept: 0.0 }).encode();
        assert!(Weights::decode(&good[..good.len() - 3]).is_err());
    }

    proptest! {
        #[test]
        fn mlp_blocks_round_trip_bit_exactly(
            hidden in 1usize..6,
            seed in proptest::collection::vec(proptest::num::f64::ANY, 64),
        ) {
            let mut vals = seed.into_iter().cycle();
            let mut next = |n: usize| (&mut vals).take(n).collect::<Vec<f64>>();
            let w = Weights::Mlp(MlpWeights {
                hidden,
                input_mean: next(5).try_into().unwrap(),
                input_scale: next(5).try_into().unwrap(),
                w1: next(5 * hidden),
                b1: next(hidden),
                w2: next(hidden),
                b2: next(1)[0],
                target_mean: next(1)[0],
                target_scale: next(1)[0],
            });
            let bytes = w.encode();
            let back = Weights::decode(&bytes).unwrap();
            prop_assert_eq!(back.encode(), bytes);
        }
    }
}
