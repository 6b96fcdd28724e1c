use std::io::{BufRead, Write};
use std::path::Path;

use super::kernel::rbf_kernel;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Penalties for the positive and negative class and the kernel width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub c_plus: f64,
    pub c_minus: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(c_plus: f64, c_minus: f64, gamma: f64) -> Result<Self> {
        let p = ModelParams { c_plus, c_minus, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C+", self.c_plus), ("C-", self.c_minus), ("gamma", self.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// Box constraint scale for a label.
    pub fn penalty(&self, label: i8) -> f64 {
        if label > 0 {
            self.c_plus
        } else {
            self.c_minus
        }
    }
}

/// Kernel expansion `f(x) = sum_i coef_i K(sv_i, x) + bias`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    /// Row-major support vectors.
    pub support_vectors: Vec<f64>,
    pub n_features: usize,
    /// `alpha_i * y_i` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub params: ModelParams,
    /// Row of each support vector in the training set it was fitted on.
    pub sv_indices: Vec<usize>,
}

const HEADER: &str = "amgsvm-model 1";

impl TrainedModel {
    pub fn n_sv(&self) -> usize {
        self.dual_coefs.len()
    }

    pub fn support_vector(&self, s: usize) -> &[f64] {
        &self.support_vectors[s * self.n_features..(s + 1) * self.n_features]
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .dual_coefs
            .iter()
            .enumerate()
            .map(|(s, &c)| c * rbf_kernel(self.support_vector(s), x, self.params.gamma))
            .sum();
        sum + self.bias
    }

    /// Sign of the decision value; exactly zero maps to +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<i8>> {
        self.predict_rows(ds.points(), ds.n_features())
    }

    pub fn predict_rows(&self, points: &[f64], dim: usize) -> Result<Vec<i8>> {
        if dim != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: dim,
            });
        }
        if dim == 0 {
            return Err(Error::InvalidInput("points have no features".into()));
        }
        Ok(points
            .chunks_exact(dim)
            .map(|x| if self.decision_unchecked(x) >= 0.0 { 1 } else { -1 })
            .collect())
    }

    /// Text form: header, parameters, then one `alpha_y idx:val ...` line per
    /// support vector with 1-based feature indices.
    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{HEADER}")?;
        writeln!(out, "c_plus {}", self.params.c_plus)?;
        writeln!(out, "c_minus {}", self.params.c_minus)?;
        writeln!(out, "gamma {}", self.params.gamma)?;
        writeln!(out, "bias {}", self.bias)?;
        writeln!(out, "n_features {}", self.n_features)?;
        writeln!(out, "n_sv {}", self.n_sv())?;
        write!(out, "sv_indices")?;
        for i in &self.sv_indices {
            write!(out, " {i}")?;
        }
        writeln!(out)?;
        writeln!(out, "vectors")?;
        for s in 0..self.n_sv() {
            write!(out, "{}", self.dual_coefs[s])?;
            for (j, v) in self.support_vector(s).iter().enumerate() {
                if *v != 0.0 {
                    write!(out, " {}:{}", j + 1, v)?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(input: impl BufRead) -> Result<TrainedModel> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((n, Err(e))) => Err(Error::Parse {
                    line: n,
                    msg: e.to_string(),
                }),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of model file, expected {what}"),
                }),
            }
        };
        let (n, h) = next("header")?;
        if h.trim() != HEADER {
            return Err(Error::Parse {
                line: n,
                msg: "not a model file".into(),
            });
        }
        let c_plus = keyed(next("c_plus")?, "c_plus")?;
        let c_minus = keyed(next("c_minus")?, "c_minus")?;
        let gamma = keyed(next("gamma")?, "gamma")?;
        let bias = keyed(next("bias")?, "bias")?;
        let n_features: usize = keyed(next("n_features")?, "n_features")?;
        let n_sv: usize = keyed(next("n_sv")?, "n_sv")?;
        let (n, idx_line) = next("sv_indices")?;
        let mut toks = idx_line.split_whitespace();
        if toks.next() != Some("sv_indices") {
            return Err(Error::Parse {
                line: n,
                msg: "expected sv_indices".into(),
            });
        }
        let sv_indices = toks
            .map(|t| t.parse::<usize>().map_err(|e| parse_err(n, e)))
            .collect::<Result<Vec<_>>>()?;
        if sv_indices.len() != n_sv {
            return Err(Error::Parse {
                line: n,
                msg: format!("{} indices for {n_sv} support vectors", sv_indices.len()),
            });
        }
        let (n, v) = next("vectors")?;
        if v.trim() != "vectors" {
            return Err(Error::Parse {
                line: n,
                msg: "expected vectors".into(),
            });
        }
        let mut support_vectors = vec![0.0; n_sv * n_features];
        let mut dual_coefs = Vec::with_capacity(n_sv);
        for s in 0..n_sv {
            let (n, line) = next("support vector")?;
            let mut toks = line.split_whitespace();
            let coef: f64 = toks
                .next()
                .ok_or_else(|| Error::Parse {
                    line: n,
                    msg: "empty support vector line".into(),
                })?
                .parse()
                .map_err(|e| parse_err(n, e))?;
            dual_coefs.push(coef);
            for tok in toks {
                let (j, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                    line: n,
                    msg: format!("bad feature `{tok}`"),
                })?;
                let j: usize = j.parse().map_err(|e| parse_err(n, e))?;
                if j == 0 || j > n_features {
                    return Err(Error::Parse {
                        line: n,
                        msg: format!("feature index {j} out of range"),
                    });
                }
                support_vectors[s * n_features + j - 1] = val.parse().map_err(|e| parse_err(n, e))?;
            }
        }
        let params = ModelParams::new(c_plus, c_minus, gamma).map_err(|e| Error::Parse {
            line: 2,
            msg: e.to_string(),
        })?;
        Ok(TrainedModel {
            support_vectors,
            n_features,
            dual_coefs,
            bias,
            params,
            sv_indices,
        })
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        TrainedModel::read(std::io::BufReader::new(file))
    }
}

fn parse_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

fn keyed<T: std::str::FromStr>((n, line): (usize, String), key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match line.split_once(' ') {
        Some((k, v)) if k == key => v.trim().parse().map_err(|e| parse_err(n, e)),
        _ => Err(Error::Parse {
            line: n,
            msg: format!("expected `{key}`"),
        }),
    }
}
