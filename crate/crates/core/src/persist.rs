//! Text record for a trained network and its input normalization.
//!
//! ```text
//! noma-mlp 1
//! squash <lo> <hi>
//! norm_mean <v>...
//! norm_scale <v>...
//! layers <count>
//! layer <out> <in>
//! w <in values>        (repeated <out> times, row-major)
//! b <out values>
//! ...
//! end
//! ```
//!
//! Reals are written in Rust's shortest round-trip form, so decoding an
//! encoded record rebuilds every parameter bit for bit.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::dataset::Normalization;
use crate::error::{Error, Result};
use crate::nn::{Layer, Mlp, Squash};

pub const FORMAT_TAG: &str = "noma-mlp";
pub const FORMAT_VERSION: u32 = 1;

/// Caps that keep a hostile record from requesting huge allocations.
const MAX_LAYERS: usize = 64;
const MAX_WIDTH: usize = 1 << 14;
const MAX_PARAMS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub net: Mlp,
    pub norm: Normalization,
}

impl Model {
    pub fn new(net: Mlp, norm: Normalization) -> Result<Self> {
        norm.validate()?;
        if norm.dim() != net.input_dim() {
            return Err(Error::Dimension {
                expected: net.input_dim(),
                got: norm.dim(),
            });
        }
        Ok(Self { net, norm })
    }

    /// Normalizes raw feature rows and runs the network.
    pub fn predict(&self, raw: &Array2<f64>) -> Result<Array1<f64>> {
        self.net.forward_batch(self.norm.apply(raw)?.view())
    }

    pub fn encode(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, key: &str, vals: &mut dyn Iterator<Item = &f64>| {
            s.push_str(key);
            for v in vals {
                let _ = write!(s, " {v:?}");
            }
            s.push('\n');
        };
        let _ = writeln!(s, "{FORMAT_TAG} {FORMAT_VERSION}");
        let _ = writeln!(s, "squash {:?} {:?}", self.net.squash.lo, self.net.squash.hi);
        row(&mut s, "norm_mean", &mut self.norm.mean.iter());
        row(&mut s, "norm_scale", &mut self.norm.scale.iter());
        let _ = writeln!(s, "layers {}", self.net.layers.len());
        for l in &self.net.layers {
            let _ = writeln!(s, "layer {} {}", l.outputs(), l.inputs());
            for r in l.weights.rows() {
                row(&mut s, "w", &mut r.iter());
            }
            row(&mut s, "b", &mut l.bias.iter());
        }
        s.push_str("end\n");
        s
    }

    /// Hex SHA-256 of the encoded record.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.encode().as_bytes()))
    }

    pub fn decode(text: &str) -> Result<Self> {
        let mut p = Parser {
            lines: text.lines().enumerate(),
            line: 0,
        };
        let head = p.fields("header")?;
        if head.len() != 2 || head[0] != FORMAT_TAG {
            return Err(p.err(format!("expected `{FORMAT_TAG} <version>`")));
        }
        match head[1].parse::<u32>() {
            Ok(FORMAT_VERSION) => {}
            _ => return Err(p.err(format!("unsupported version `{}`", head[1]))),
        }
        let sq = p.reals("squash", Some(2))?;
        if !(sq[0] < sq[1]) {
            return Err(p.err("squash range must satisfy lo < hi"));
        }
        let mean = p.reals("norm_mean", None)?;
        let scale = p.reals("norm_scale", None)?;
        if mean.len() != scale.len() || mean.is_empty() || mean.len() > MAX_WIDTH {
            return Err(p.err("normalization vectors must have equal, nonzero length"));
        }
        let count = p.counts("layers", 1)?[0];
        if count == 0 || count > MAX_LAYERS {
            return Err(p.err(format!("layer count {count} outside 1..={MAX_LAYERS}")));
        }
        let mut layers = Vec::with_capacity(count);
        let mut total = 0usize;
        for _ in 0..count {
            let d = p.counts("layer", 2)?;
            let (out, inp) = (d[0], d[1]);
            if out == 0 || inp == 0 || out > MAX_WIDTH || inp > MAX_WIDTH {
                return Err(p.err(format!("layer shape {out}x{inp} outside 1..={MAX_WIDTH}")));
            }
            total += out * inp + out;
            if total > MAX_PARAMS {
                return Err(p.err("record exceeds the parameter limit"));
            }
            let mut w = Vec::with_capacity(out * inp);
            for _ in 0..out {
                w.extend(p.reals("w", Some(inp))?);
            }
            let b = p.reals("b", Some(out))?;
            layers.push(Layer {
                weights: Array2::from_shape_vec((out, inp), w).expect("row lengths checked"),
                bias: Array1::from(b),
            });
        }
        if p.fields("end")? != ["end"] {
            return Err(p.err("expected `end`"));
        }
        if let Some((i, extra)) = p.lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::ModelFormat {
                line: i + 1,
                reason: format!("trailing content `{}`", truncate(extra)),
            });
        }
        let net = Mlp::from_layers(layers, Squash { lo: sq[0], hi: sq[1] })
            .map_err(|e| Error::ModelFormat { line: p.line, reason: e.to_string() })?;
        Model::new(net, Normalization { mean, scale })
            .map_err(|e| Error::ModelFormat { line: p.line, reason: e.to_string() })
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(40).collect()
}

struct Parser<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: I,
    line: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Parser<'a, I> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn fields(&mut self, what: &str) -> Result<Vec<&'a str>> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.split_ascii_whitespace().collect())
            }
            None => Err(Error::ModelFormat {
                line: self.line + 1,
                reason: format!("unexpected end of record, expected `{what}`"),
            }),
        }
    }

    fn keyed(&mut self, key: &str, expect: Option<usize>) -> Result<Vec<&'a str>> {
        let f = self.fields(key)?;
        if f.first() != Some(&key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        let vals = f[1..].to_vec();
        if let Some(n) = expect {
            if vals.len() != n {
                return Err(self.err(format!("`{key}` needs {n} values, found {}", vals.len())));
            }
        }
        Ok(vals)
    }

    fn reals(&mut self, key: &str, expect: Option<usize>) -> Result<Vec<f64>> {
        let vals = self.keyed(key, expect)?;
        vals.iter()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.err(format!("`{}` is not a finite real", truncate(t)))),
            })
            .collect()
    }

    fn counts(&mut self, key: &str, expect: usize) -> Result<Vec<usize>> {
        let vals = self.keyed(key, Some(expect))?;
        vals.iter()
            .map(|t| t.parse::<usize>().map_err(|_| self.err(format!("`{}` is not a count", truncate(t)))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn model() -> Model {
        let net = Mlp::new(6, &[7, 3], 4).unwrap();
        let norm = Normalization {
            mean: vec![0.1, -0.2, 1.0 / 3.0, 0.0, 5e-300, 0.5],
            scale: vec![1.0, 2.0, 0.1, 3.3, 1e-3, 0.25],
        };
        Model::new(net, norm).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = model();
        let back = Model::decode(&m.encode()).unwrap();
        assert_eq!(back, m);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((50, 6), |_| rng.gen_range(-3.0..3.0));
        let a = m.predict(&x).unwrap();
        let b = back.predict(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert_eq!(back.digest(), m.digest());
        assert_eq!(m.digest().len(), 64);
    }

    #[test]
    fn digest_tracks_parameters() {
        let m = model();
        let mut n = m.clone();
        n.net.layers[0].weights[[0, 0]] = f64::from_bits(n.net.layers[0].weights[[0, 0]].to_bits() ^ 1);
        assert_ne!(m.digest(), n.digest());
    }

    fn line_of(text: &str) -> usize {
        match Model::decode(text) {
            Err(Error::ModelFormat { line, .. }) => line,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_records_name_the_line() {
        let good = model().encode();
        assert_eq!(line_of(""), 1);
        assert_eq!(line_of(&good.replacen("noma-mlp 1", "noma-mlp 2", 1)), 1);
        assert_eq!(line_of(&good.replacen("squash 0.5 1.0", "squash 1.0 0.5", 1)), 2);
        let lines: Vec<&str> = good.lines().collect();
        // drop one weight from the first row
        let mut cut = lines.clone();
        let short = lines[6].rsplit_once(' ').unwrap().0.to_string();
        cut[6] = &short;
        assert_eq!(line_of(&cut.join("\n")), 7);
        let nan = good.replacen("w ", "w NaN ", 1);
        assert_eq!(line_of(&nan), 7);
        assert_eq!(line_of(&good.replace("end\n", "")), lines.len());
        assert_eq!(line_of(&format!("{good}junk\n")), lines.len() + 1);
        assert!(line_of(&good.replacen("layers 3", "layers 100000", 1)) == 5);
    }

    #[test]
    fn input_width_must_match_normalization() {
        let net = Mlp::new(4, &[2], 1).unwrap();
        assert!(Model::new(net, Normalization::identity(6)).is_err());
    }
}
