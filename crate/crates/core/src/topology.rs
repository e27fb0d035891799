//! Layered network models named like `2r-2r-2`.
//!
//! Every token is a layer size; an `r` suffix removes the links inside that
//! layer. The last layer holds the sinks. Nodes are numbered layer-major
//! starting from the input layer, with the sinks last.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    layer_sizes: Vec<usize>,
    reduced: Vec<bool>,
}

impl ModelSpec {
    pub fn new(layer_sizes: Vec<usize>, reduced: Vec<bool>) -> Result<Self> {
        if layer_sizes.len() < 3 {
            return Err(Error::TooFewLayers(layer_sizes.len()));
        }
        if reduced.len() != layer_sizes.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} reduced flags for {} non-sink layers",
                reduced.len(),
                layer_sizes.len() - 1
            )));
        }
        if let Some(i) = layer_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter(format!("layer {i} is empty")));
        }
        let sinks = *layer_sizes.last().unwrap();
        let sinkers = layer_sizes[layer_sizes.len() - 2];
        if sinkers < sinks {
            return Err(Error::TooFewSinkers { sinks, sinkers });
        }
        Ok(ModelSpec {
            layer_sizes,
            reduced,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// One flag per non-sink layer.
    pub fn reduced(&self) -> &[bool] {
        &self.reduced
    }

    pub fn n_sinks(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.trim().split('-').collect();
        let mut sizes = Vec::with_capacity(tokens.len());
        let mut reduced = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            let (digits, r) = match tok.strip_suffix('r') {
                Some(d) => (d, true),
                None => (*tok, false),
            };
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::MalformedToken((*tok).to_string()));
            }
            let n: usize = digits
                .parse()
                .map_err(|_| Error::MalformedToken((*tok).to_string()))?;
            sizes.push(n);
            reduced.push(r);
        }
        if sizes.len() < 3 {
            return Err(Error::TooFewLayers(sizes.len()));
        }
        if reduced.pop() == Some(true) {
            return Err(Error::ReducedSinkLayer);
        }
        ModelSpec::new(sizes, reduced)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, size) in self.layer_sizes.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{size}")?;
            if self.reduced.get(i).copied().unwrap_or(false) {
                f.write_str("r")?;
            }
        }
        Ok(())
    }
}

/// A layered graph ready for simulation. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    spec: ModelSpec,
    pub n_total: usize,
    pub n_network: usize,
    /// Allowed undirected links among non-sink nodes.
    pub mask: DMatrix<bool>,
    /// `(sinker, sink)` node pairs, one per sink in sink order.
    pub sink_pairs: Vec<(usize, usize)>,
    pub layer_of: Vec<usize>,
}

pub fn build_topology(spec: &ModelSpec) -> Topology {
    let sizes = spec.layer_sizes();
    let n_layers = sizes.len();
    let n_network: usize = sizes[..n_layers - 1].iter().sum();
    let n_total = n_network + spec.n_sinks();

    let mut starts = Vec::with_capacity(n_layers);
    let mut layer_of = Vec::with_capacity(n_total);
    let mut offset = 0;
    for (l, &size) in sizes.iter().enumerate() {
        starts.push(offset);
        layer_of.extend(std::iter::repeat_n(l, size));
        offset += size;
    }

    let mut mask = DMatrix::from_element(n_network, n_network, false);
    for l in 0..n_layers - 1 {
        let here = starts[l]..starts[l] + sizes[l];
        if !spec.reduced()[l] {
            for i in here.clone() {
                for j in here.clone() {
                    mask[(i, j)] = i != j;
                }
            }
        }
        if l + 2 < n_layers {
            for i in here.clone() {
                for j in starts[l + 1]..starts[l + 1] + sizes[l + 1] {
                    mask[(i, j)] = true;
                    mask[(j, i)] = true;
                }
            }
        }
    }

    let sinker_start = starts[n_layers - 2];
    let sink_pairs = (0..spec.n_sinks())
        .map(|k| (sinker_start + k, n_network + k))
        .collect();

    Topology {
        spec: spec.clone(),
        n_total,
        n_network,
        mask,
        sink_pairs,
        layer_of,
    }
}

impl Topology {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n_sinks(&self) -> usize {
        self.sink_pairs.len()
    }

    pub fn input_nodes(&self) -> Range<usize> {
        0..self.spec.n_inputs()
    }

    pub fn sink_nodes(&self) -> Range<usize> {
        self.n_network..self.n_total
    }

    pub fn is_sink(&self, node: usize) -> bool {
        node >= self.n_network
    }

    /// Upper-triangle linked pairs `(i, j)` with `i < j`, row-major.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let n = self.n_network;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.mask[(i, j)] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Directed arcs `(i, j)` meaning `j -> i`, grouped by source column `j`.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let n = self.n_network;
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if self.mask[(i, j)] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn degree(&self, node: usize) -> usize {
        self.mask.column(node).iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}", self.spec)?;
        writeln!(
            f,
            "nodes {} (network {}, sinks {})",
            self.n_total,
            self.n_network,
            self.n_sinks()
        )?;
        let links: Vec<String> = self
            .links()
            .iter()
            .map(|(i, j)| format!("{}-{}", i + 1, j + 1))
            .collect();
        writeln!(f, "links {}", links.join(" "))?;
        let arcs: Vec<String> = self
            .sink_pairs
            .iter()
            .map(|(s, k)| format!("{}->{}", s + 1, k + 1))
            .collect();
        write!(f, "sink arcs {}", arcs.join(" "))
    }
}

/// Classical random-walk transition matrix `T = A D⁻¹`.
pub fn classical_transition_from_adjacency(mask: &DMatrix<bool>) -> Result<DMatrix<f64>> {
    if !mask.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "adjacency is {}x{}",
            mask.nrows(),
            mask.ncols()
        )));
    }
    let n = mask.nrows();
    let mut t = DMatrix::zeros(n, n);
    for j in 0..n {
        let deg = mask.column(j).iter().filter(|&&b| b).count();
        if deg == 0 {
            return Err(Error::IsolatedNode(j));
        }
        for i in 0..n {
            if mask[(i, j)] {
                t[(i, j)] = 1.0 / deg as f64;
            }
        }
    }
    Ok(t)
}
