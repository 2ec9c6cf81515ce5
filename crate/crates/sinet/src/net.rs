//! The network data model: explicit layered affine + ReLU functions with
//! exact rational weights, size accounting, composition, stacking, and a
//! versioned JSON wire format.
//!
//! Evaluation semantics are `T_L ∘ σ ∘ T_{L-1} ∘ … ∘ σ ∘ T_1`: ReLU applied
//! coordinate-wise between affine maps, never after the last. Depth counts
//! affine layers; width is the largest hidden-layer output dimension.
//!
//! Weights are stored as exact rationals so that structural operations
//! (boundary-merging composition, block stacking) introduce no rounding. A
//! dense `f64` shadow of each layer is materialised lazily for the fast
//! float evaluator; the rational evaluator reads the weights directly.

use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{rat_from_f64, rat_to_f64, relu, Rat};

/// One sparse row of an affine map: (column, weight) pairs, columns strictly
/// increasing, zero weights omitted.
pub type SparseRow = Vec<(usize, Rat)>;

/// A single affine layer `x ↦ A x + b`, rows stored sparsely.
#[derive(Debug, Clone)]
pub struct AffineLayer {
    pub in_dim: usize,
    pub rows: Vec<SparseRow>,
    pub bias: Vec<Rat>,
}

impl AffineLayer {
    pub fn new(in_dim: usize, rows: Vec<SparseRow>, bias: Vec<Rat>) -> Self {
        assert_eq!(rows.len(), bias.len(), "bias length must equal row count");
        for r in &rows {
            debug_assert!(r.windows(2).all(|w| w[0].0 < w[1].0), "row columns must increase");
            debug_assert!(r.iter().all(|(c, _)| *c < in_dim), "column out of range");
        }
        AffineLayer { in_dim, rows, bias }
    }

    pub fn from_dense(weights: Vec<Vec<Rat>>, bias: Vec<Rat>) -> Self {
        let in_dim = weights.first().map_or(0, |r| r.len());
        let rows = weights
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .enumerate()
                    .filter(|(_, w)| !w.is_zero())
                    .collect::<SparseRow>()
            })
            .collect();
        AffineLayer::new(in_dim, rows, bias)
    }

    /// Identity map on `dim` channels.
    pub fn identity(dim: usize) -> Self {
        let rows = (0..dim).map(|i| vec![(i, Rat::from_integer(1.into()))]).collect();
        AffineLayer::new(dim, rows, vec![Rat::zero(); dim])
    }

    pub fn out_dim(&self) -> usize {
        self.rows.len()
    }

    fn apply_exact(&self, x: &[Rat]) -> Vec<Rat> {
        self.rows
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let mut acc = b.clone();
                for (c, w) in row {
                    acc += w * &x[*c];
                }
                acc
            })
            .collect()
    }

    /// Merge with a following layer: returns `next ∘ self` as one affine map.
    fn merge_into(&self, next: &AffineLayer) -> AffineLayer {
        assert_eq!(self.out_dim(), next.in_dim, "merged layers must chain");
        let mut rows = Vec::with_capacity(next.out_dim());
        let mut bias = Vec::with_capacity(next.out_dim());
        for (nrow, nb) in next.rows.iter().zip(&next.bias) {
            let mut acc: std::collections::BTreeMap<usize, Rat> = Default::default();
            let mut b = nb.clone();
            for (mid, w) in nrow {
                b += w * &self.bias[*mid];
                for (c, w2) in &self.rows[*mid] {
                    let slot = acc.entry(*c).or_insert_with(Rat::zero);
                    *slot += w * w2;
                }
            }
            rows.push(acc.into_iter().filter(|(_, w)| !w.is_zero()).collect());
            bias.push(b);
        }
        AffineLayer::new(self.in_dim, rows, bias)
    }

    /// Place layers block-diagonally.
    fn block_diag(layers: &[&AffineLayer]) -> AffineLayer {
        let in_dim = layers.iter().map(|l| l.in_dim).sum();
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        let mut col_off = 0;
        for l in layers {
            for (row, b) in l.rows.iter().zip(&l.bias) {
                rows.push(row.iter().map(|(c, w)| (c + col_off, w.clone())).collect());
                bias.push(b.clone());
            }
            col_off += l.in_dim;
        }
        AffineLayer::new(in_dim, rows, bias)
    }
}

/// Dense f64 mirror of one layer, used by the float evaluator.
#[derive(Debug, Clone)]
struct ShadowLayer {
    rows: Vec<Vec<(usize, f64)>>,
    bias: Vec<f64>,
}

/// Size triple reported by [`ReluNet::size`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetSize {
    pub width: usize,
    pub depth: usize,
    pub params: usize,
}

/// Width/depth budget a construction promises to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBudget {
    pub width_bound: usize,
    pub depth_bound: usize,
}

impl SizeBudget {
    pub fn new(width_bound: usize, depth_bound: usize) -> Self {
        assert!(width_bound >= 1 && depth_bound >= 1, "budget bounds must be >= 1");
        SizeBudget { width_bound, depth_bound }
    }
}

/// Explicit ReLU network: an ordered list of affine layers with ReLU between.
#[derive(Debug)]
pub struct ReluNet {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<AffineLayer>,
    shadow: OnceLock<Vec<ShadowLayer>>,
}

impl Clone for ReluNet {
    fn clone(&self) -> Self {
        ReluNet {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            layers: self.layers.clone(),
            shadow: OnceLock::new(),
        }
    }
}

impl PartialEq for ReluNet {
    /// Structural equality: equal shapes and equal weights under the f64 view.
    fn eq(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim
            && self.output_dim == other.output_dim
            && self.layers.len() == other.layers.len()
            && self
                .shadow()
                .iter()
                .zip(other.shadow())
                .all(|(a, b)| a.rows == b.rows && a.bias == b.bias)
    }
}

/// How shallower nets are lifted to a common depth when stacking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadSign {
    /// One neuron per channel; exact only for nonnegative intermediate values.
    Nonneg,
    /// Two neurons per channel (σ(x) − σ(−x)); exact on all reals.
    Signed,
}

impl ReluNet {
    pub fn from_layers(layers: Vec<AffineLayer>) -> Self {
        assert!(!layers.is_empty(), "a network has at least one affine layer");
        for w in layers.windows(2) {
            assert_eq!(
                w[0].out_dim(),
                w[1].in_dim,
                "consecutive layer dimensions must chain"
            );
        }
        let input_dim = layers[0].in_dim;
        let output_dim = layers.last().unwrap().out_dim();
        ReluNet { input_dim, output_dim, layers, shadow: OnceLock::new() }
    }

    /// Depth-1 network consisting of a single affine map.
    pub fn affine(layer: AffineLayer) -> Self {
        ReluNet::from_layers(vec![layer])
    }

    /// The 1×1 identity network.
    pub fn identity(dim: usize) -> Self {
        ReluNet::affine(AffineLayer::identity(dim))
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[AffineLayer] {
        &self.layers
    }

    pub fn width(&self) -> usize {
        if self.layers.len() == 1 {
            return self.input_dim.max(self.output_dim);
        }
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim())
            .max()
            .unwrap()
    }

    /// (width, depth, parameter count); parameters counted densely.
    pub fn size(&self) -> NetSize {
        let params = self
            .layers
            .iter()
            .map(|l| l.out_dim() * l.in_dim + l.out_dim())
            .sum();
        NetSize { width: self.width(), depth: self.depth(), params }
    }

    pub fn fits(&self, budget: SizeBudget) -> bool {
        self.width() <= budget.width_bound && self.depth() <= budget.depth_bound
    }

    fn shadow(&self) -> &Vec<ShadowLayer> {
        self.shadow.get_or_init(|| {
            self.layers
                .iter()
                .map(|l| ShadowLayer {
                    rows: l
                        .rows
                        .iter()
                        .map(|r| r.iter().map(|(c, w)| (*c, rat_to_f64(w))).collect())
                        .collect(),
                    bias: l.bias.iter().map(rat_to_f64).collect(),
                })
                .collect()
        })
    }

    /// Float evaluation via the f64 shadow weights.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::InputShape { expected: self.input_dim, got: x.len() });
        }
        let layers = self.shadow();
        let mut cur = x.to_vec();
        for (i, l) in layers.iter().enumerate() {
            let mut next: Vec<f64> = l
                .rows
                .iter()
                .zip(&l.bias)
                .map(|(row, b)| row.iter().fold(*b, |acc, (c, w)| acc + w * cur[*c]))
                .collect();
            if i + 1 < layers.len() {
                for v in &mut next {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Exact evaluation over the rational weights.
    pub fn eval_exact(&self, x: &[Rat]) -> Result<Vec<Rat>> {
        if x.len() != self.input_dim {
            return Err(Error::InputShape { expected: self.input_dim, got: x.len() });
        }
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut next = l.apply_exact(&cur);
            if i < last {
                for v in &mut next {
                    *v = relu(v);
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Convenience for single-output networks.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        let out = self.eval(x)?;
        debug_assert_eq!(out.len(), 1);
        Ok(out[0])
    }

    /// Upper bound on the Lipschitz constant: product of layer ∞-norms.
    pub fn lipschitz_inf(&self) -> f64 {
        self.shadow()
            .iter()
            .map(|l| {
                l.rows
                    .iter()
                    .map(|r| r.iter().map(|(_, w)| w.abs()).sum::<f64>())
                    .fold(0.0_f64, f64::max)
            })
            .product()
    }
}

/// Serial composition `second ∘ first`. The boundary affine pair is merged
/// into one layer, so depth(result) = depth(first) + depth(second) − 1.
pub fn compose(first: &ReluNet, second: &ReluNet) -> Result<ReluNet> {
    if first.output_dim != second.input_dim {
        return Err(Error::DimMismatch(format!(
            "compose: first outputs {} values, second expects {}",
            first.output_dim, second.input_dim
        )));
    }
    let mut layers: Vec<AffineLayer> = first.layers[..first.layers.len() - 1].to_vec();
    let merged = first.layers.last().unwrap().merge_into(&second.layers[0]);
    layers.push(merged);
    layers.extend_from_slice(&second.layers[1..]);
    Ok(ReluNet::from_layers(layers))
}

/// Left-to-right serial composition of a chain.
pub fn compose_all(nets: &[&ReluNet]) -> Result<ReluNet> {
    assert!(!nets.is_empty());
    let mut acc = nets[0].clone();
    for n in &nets[1..] {
        acc = compose(&acc, n)?;
    }
    Ok(acc)
}

/// Block-diagonal parallel stack of equal-depth networks: inputs and outputs
/// concatenate, width adds up.
pub fn stack(nets: &[ReluNet]) -> Result<ReluNet> {
    assert!(!nets.is_empty());
    let depth = nets[0].depth();
    for n in nets {
        if n.depth() != depth {
            return Err(Error::UnequalDepths(depth, n.depth()));
        }
    }
    let layers = (0..depth)
        .map(|i| AffineLayer::block_diag(&nets.iter().map(|n| &n.layers[i]).collect::<Vec<_>>()))
        .collect();
    Ok(ReluNet::from_layers(layers))
}

/// Stack with automatic depth padding: shallower nets are extended by
/// passthrough layers of the requested sign before stacking.
pub fn stack_padded(nets: &[ReluNet], sign: PadSign) -> Result<ReluNet> {
    assert!(!nets.is_empty());
    let depth = nets.iter().map(|n| n.depth()).max().unwrap();
    let padded: Vec<ReluNet> = nets
        .iter()
        .map(|n| {
            if n.depth() == depth {
                Ok(n.clone())
            } else {
                let pad = passthrough_depth(n.output_dim, sign, depth - n.depth() + 1);
                compose(n, &pad)
            }
        })
        .collect::<Result<_>>()?;
    stack(&padded)
}

/// Identity-carrying network of the given depth. The nonneg variant spends
/// one neuron per channel and is exact only on nonnegative inputs; the signed
/// variant spends two (σ(x) − σ(−x)) and is exact on all reals.
pub fn passthrough_depth(dim: usize, sign: PadSign, depth: usize) -> ReluNet {
    assert!(depth >= 1);
    if depth == 1 {
        return ReluNet::identity(dim);
    }
    match sign {
        PadSign::Nonneg => {
            let layers = (0..depth).map(|_| AffineLayer::identity(dim)).collect();
            ReluNet::from_layers(layers)
        }
        PadSign::Signed => {
            let one = || Rat::from_integer(1.into());
            let neg = || -Rat::from_integer(1.into());
            // split: x -> (σ(x), σ(−x)) per channel
            let mut rows = Vec::new();
            for i in 0..dim {
                rows.push(vec![(i, one())]);
                rows.push(vec![(i, neg())]);
            }
            let split = AffineLayer::new(dim, rows, vec![Rat::zero(); 2 * dim]);
            let mut layers = vec![split];
            for _ in 0..depth.saturating_sub(2) {
                layers.push(AffineLayer::identity(2 * dim));
            }
            // rejoin: x = p − n
            let rows = (0..dim).map(|i| vec![(2 * i, one()), (2 * i + 1, neg())]).collect();
            layers.push(AffineLayer::new(2 * dim, rows, vec![Rat::zero(); dim]));
            ReluNet::from_layers(layers)
        }
    }
}

/// Default passthrough of depth 2 per the construction conventions.
pub fn passthrough(dim: usize, sign: PadSign) -> ReluNet {
    passthrough_depth(dim, sign, 2)
}

/// Prepend an exact input translation x ↦ x + shift.
pub fn with_input_shift(net: &ReluNet, shift: &[Rat]) -> Result<ReluNet> {
    let layer = AffineLayer::new(
        shift.len(),
        (0..shift.len()).map(|i| vec![(i, Rat::from_integer(1.into()))]).collect(),
        shift.to_vec(),
    );
    compose(&ReluNet::affine(layer), net)
}

/// Append an affine output map.
pub fn with_output_affine(net: &ReluNet, layer: AffineLayer) -> Result<ReluNet> {
    compose(net, &ReluNet::affine(layer))
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WireNet {
    version: u32,
    input_dim: usize,
    layers: Vec<WireLayer>,
}

impl ReluNet {
    /// Versioned JSON document; weights row-major as decimal doubles.
    pub fn to_json(&self) -> String {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut weights = vec![vec![0.0; l.in_dim]; l.out_dim()];
                for (r, row) in l.rows.iter().enumerate() {
                    for (c, w) in row {
                        weights[r][*c] = rat_to_f64(w);
                    }
                }
                WireLayer { weights, bias: l.bias.iter().map(rat_to_f64).collect() }
            })
            .collect();
        let wire = WireNet { version: 1, input_dim: self.input_dim, layers };
        serde_json::to_string(&wire).expect("network serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<ReluNet> {
        let wire: WireNet = serde_json::from_str(s)
            .map_err(|e| Error::Parse { layer: None, msg: e.to_string() })?;
        if wire.version != 1 {
            return Err(Error::Parse {
                layer: None,
                msg: format!("unsupported version {}", wire.version),
            });
        }
        if wire.layers.is_empty() {
            return Err(Error::Parse { layer: None, msg: "no layers".into() });
        }
        let mut layers = Vec::with_capacity(wire.layers.len());
        let mut prev_out = wire.input_dim;
        for (i, wl) in wire.layers.iter().enumerate() {
            if wl.weights.is_empty() || wl.weights.len() != wl.bias.len() {
                return Err(Error::Parse {
                    layer: Some(i),
                    msg: "bias length must equal weight row count".into(),
                });
            }
            let in_dim = wl.weights[0].len();
            if in_dim != prev_out {
                return Err(Error::Parse {
                    layer: Some(i),
                    msg: format!("layer expects {in_dim} inputs but previous produces {prev_out}"),
                });
            }
            if wl.weights.iter().any(|r| r.len() != in_dim) {
                return Err(Error::Parse { layer: Some(i), msg: "ragged weight rows".into() });
            }
            if wl.weights.iter().flatten().chain(wl.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Parse { layer: Some(i), msg: "non-finite weight".into() });
            }
            let rows = wl
                .weights
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, w)| **w != 0.0)
                        .map(|(c, w)| (c, rat_from_f64(*w)))
                        .collect()
                })
                .collect();
            let bias = wl.bias.iter().map(|b| rat_from_f64(*b)).collect();
            prev_out = wl.weights.len();
            layers.push(AffineLayer::new(in_dim, rows, bias));
        }
        Ok(ReluNet::from_layers(layers))
    }
}
