//! Named parameter collections, gradient maps and the text checkpoint format.
//!
//! A checkpoint looks like
//!
//! ```text
//! casgcn-ckpt-v1
//! kind casgcn
//! param conv.w_r 3 6
//! 0.12 -0.5 ...
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::tensor::Tensor;

pub const CHECKPOINT_HEADER: &str = "casgcn-ckpt-v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("checkpoint kind is {found:?}, expected {expected:?}")]
    Kind { expected: String, found: String },
    #[error("parameter {name}: {message}")]
    Mismatch { name: String, message: String },
}

/// Ordered, named parameter tensors. Indices into the set are stable and
/// are what the tape refers to.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub const EMPTY: ParamSet = ParamSet {
        names: Vec::new(),
        tensors: Vec::new(),
    };

    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a parameter and returns its index.
    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> usize {
        let name = name.into();
        assert!(
            !self.names.contains(&name),
            "duplicate parameter name {name}"
        );
        self.names.push(name);
        self.tensors.push(value);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, index: usize) -> &Tensor {
        &self.tensors[index]
    }

    pub fn get_mut(&mut self, index: usize) -> &mut Tensor {
        &mut self.tensors[index]
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            names: self.names.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.rows(), t.cols()))
                .collect(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|x| *x = value);
        }
    }

    /// Uniform initialization in `[-bound, bound]`.
    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Tensor {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Tensor::new(rows, cols, data).expect("shape is consistent")
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    pub fn write_checkpoint(&self, kind: &str, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_checkpoint_string(kind)).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_checkpoint_string(&self, kind: &str) -> String {
        let mut out = String::new();
        writeln!(out, "{CHECKPOINT_HEADER}").unwrap();
        writeln!(out, "kind {kind}").unwrap();
        for (name, t) in self.iter() {
            writeln!(out, "param {name} {} {}", t.rows(), t.cols()).unwrap();
            let values: Vec<String> = t.data().iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", values.join(" ")).unwrap();
        }
        out
    }

    /// Reads a checkpoint, returning its kind tag and parameters.
    pub fn read_checkpoint(path: &Path) -> Result<(String, ParamSet), CheckpointError> {
        let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_checkpoint(&text)
    }

    pub fn parse_checkpoint(text: &str) -> Result<(String, ParamSet), CheckpointError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let perr = |line: usize, message: &str| CheckpointError::Parse {
            line,
            message: message.to_string(),
        };
        match lines.next() {
            Some((_, h)) if h.trim() == CHECKPOINT_HEADER => {}
            _ => return Err(perr(1, "missing casgcn-ckpt-v1 header")),
        }
        let kind = match lines.next() {
            Some((_, l)) if l.starts_with("kind ") => l["kind ".len()..].trim().to_string(),
            _ => return Err(perr(2, "missing kind line")),
        };
        let mut set = ParamSet::new();
        while let Some((ln, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "param" {
                return Err(perr(ln, "expected `param <name> <rows> <cols>`"));
            }
            let rows: usize = parts[2].parse().map_err(|_| perr(ln, "bad row count"))?;
            let cols: usize = parts[3].parse().map_err(|_| perr(ln, "bad column count"))?;
            let (vln, values) = lines.next().ok_or_else(|| perr(ln + 1, "missing values"))?;
            let data = values
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| perr(vln, "bad number"))?;
            let tensor =
                Tensor::new(rows, cols, data).map_err(|e| perr(vln, &e.to_string()))?;
            if set.index_of(parts[1]).is_some() {
                return Err(perr(ln, "duplicate parameter"));
            }
            set.push(parts[1], tensor);
        }
        Ok((kind, set))
    }

    /// Checks that `other` has exactly the same names and shapes.
    pub fn check_compatible(&self, other: &ParamSet) -> Result<(), CheckpointError> {
        if self.names != other.names {
            return Err(CheckpointError::Mismatch {
                name: "*".into(),
                message: format!("names {:?} vs {:?}", self.names, other.names),
            });
        }
        for (i, (a, b)) in self.tensors.iter().zip(&other.tensors).enumerate() {
            if a.shape() != b.shape() {
                return Err(CheckpointError::Mismatch {
                    name: self.names[i].clone(),
                    message: format!("shape {:?} vs {:?}", a.shape(), b.shape()),
                });
            }
        }
        Ok(())
    }
}

/// Per-parameter gradients, shaped like the [`ParamSet`] they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap {
    grads: Vec<Tensor>,
}

impl GradientMap {
    pub fn zeros_for(params: &ParamSet) -> Self {
        Self {
            grads: params
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.rows(), t.cols()))
                .collect(),
        }
    }

    pub fn get(&self, index: usize) -> &Tensor {
        &self.grads[index]
    }

    pub(crate) fn get_mut(&mut self, index: usize) -> &mut Tensor {
        &mut self.grads[index]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.grads.iter()
    }

    /// `self += scale * other`.
    pub fn accumulate(&mut self, other: &GradientMap, scale: f64) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_scaled(b, scale);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Tensor::is_finite)
    }
}
