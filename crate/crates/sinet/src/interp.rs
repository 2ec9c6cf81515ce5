//! Exact data fitting: interpolation of real-valued samples by a pipelined
//! piecewise-linear ladder, and binary table lookup by packing bit rows into
//! one real value and composing with the bit selector.
//!
//! The real-sample interpolator keeps its contract — exact at every sample,
//! width ≤ 4N+4, depth ≤ L+2 for up to N²L samples — while its internals are
//! a free design choice: sorted samples are reduced to one dimension by a
//! deterministic lexicographic projection, and the slope-change knots of the
//! piecewise-linear interpolant are spread across the hidden layers, with the
//! running value carried in a signed two-neuron channel.

use num_traits::Zero;

use crate::bits::select_bit;
use crate::error::{Error, Result};
use crate::net::{compose, passthrough_depth, stack, AffineLayer, PadSign, ReluNet, SizeBudget};
use crate::scalar::{pow2, rat_from_f64, rat_int, Rat};

/// Distinct sample points with nonnegative target values.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::Validation(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        if let Some(d) = points.first().map(Vec::len) {
            if points.iter().any(|p| p.len() != d) {
                return Err(Error::Validation("points have mixed dimensions".into()));
            }
        }
        if values.iter().any(|v| *v < 0.0) {
            return Err(Error::Validation("sample values must be nonnegative".into()));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::Validation(format!(
                        "duplicate sample point at {i} and {j}"
                    )));
                }
            }
        }
        Ok(SampleSet { points, values })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(1, Vec::len)
    }
}

/// Distinct sample points with a binary table: one row of bits per point.
#[derive(Debug, Clone)]
pub struct BitTable {
    pub points: Vec<Vec<f64>>,
    pub bits: Vec<Vec<u8>>,
}

impl BitTable {
    pub fn new(points: Vec<Vec<f64>>, bits: Vec<Vec<u8>>) -> Result<Self> {
        if points.len() != bits.len() {
            return Err(Error::Validation(format!(
                "{} points but {} bit rows",
                points.len(),
                bits.len()
            )));
        }
        let cols = bits.first().map_or(0, Vec::len);
        if bits.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("ragged bit rows".into()));
        }
        if bits.iter().flatten().any(|b| *b > 1) {
            return Err(Error::Validation("bit entries must be 0 or 1".into()));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::Validation(format!(
                        "duplicate table point at {i} and {j}"
                    )));
                }
            }
        }
        Ok(BitTable { points, bits })
    }

    pub fn cols(&self) -> usize {
        self.bits.first().map_or(0, Vec::len)
    }

    /// Parses the CSV schema `x_1,…,x_d,b_1,…,b_L`, one row per point.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header =
            lines.next().ok_or_else(|| Error::Parse { layer: None, msg: "empty CSV".into() })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let d = cols.iter().take_while(|c| c.starts_with("x_")).count();
        let l = cols.len() - d;
        if d == 0 || !cols[d..].iter().all(|c| c.starts_with("b_")) {
            return Err(Error::Parse {
                layer: None,
                msg: "CSV header must be x_1,…,x_d,b_1,…,b_L".into(),
            });
        }
        let mut points = Vec::new();
        let mut bits = Vec::new();
        for (ln, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + l {
                return Err(Error::Parse {
                    layer: None,
                    msg: format!("row {} has {} fields, expected {}", ln + 2, fields.len(), d + l),
                });
            }
            let p: Vec<f64> = fields[..d]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { layer: None, msg: format!("row {}: {e}", ln + 2) })?;
            let b: Vec<u8> = fields[d..]
                .iter()
                .map(|f| f.parse::<u8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { layer: None, msg: format!("row {}: {e}", ln + 2) })?;
            points.push(p);
            bits.push(b);
        }
        BitTable::new(points, bits)
    }
}

/// Budget quoted for [`fit_point_samples`].
pub fn fit_point_budget(n: usize, l: usize) -> SizeBudget {
    SizeBudget::new(4 * n + 4, l + 2)
}

/// Budget quoted for [`fit_bit_samples`].
pub fn fit_bit_budget(n: usize, l: usize) -> SizeBudget {
    SizeBudget::new(4 * n + 5, 5 * l + 2)
}

/// Deterministic 1D reduction: lexicographic weights 1, P, P², … with
/// P = 1 + ⌈max coordinate spread⌉, bumped until projections are distinct.
fn project_points(points: &[Vec<f64>]) -> Result<(Vec<Rat>, Vec<Rat>)> {
    let d = points.first().map_or(1, Vec::len);
    if d == 1 {
        return Ok((points.iter().map(|p| rat_from_f64(p[0])).collect(), vec![rat_int(1)]));
    }
    let mut spread: f64 = 0.0;
    for m in 0..d {
        let lo = points.iter().map(|p| p[m]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[m]).fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
    }
    let base = 1 + spread.ceil() as i64;
    'outer: for bump in 0..10i64 {
        let p = rat_int(base + bump);
        let mut w = vec![rat_int(1)];
        for _ in 1..d {
            w.push(w.last().unwrap() * &p);
        }
        let proj: Vec<Rat> = points
            .iter()
            .map(|pt| {
                pt.iter().zip(&w).fold(Rat::zero(), |acc, (x, wm)| acc + rat_from_f64(*x) * wm)
            })
            .collect();
        for i in 0..proj.len() {
            for j in (i + 1)..proj.len() {
                if proj[i] == proj[j] {
                    continue 'outer;
                }
            }
        }
        return Ok((proj, w));
    }
    Err(Error::Validation("no collision-free projection found".into()))
}

/// Exact interpolation of nonnegative real samples: eval(net, x_i) = y_i with
/// width ≤ 4N+4 and depth ≤ L+2 for up to N²L samples.
pub fn fit_point_samples(samples: &SampleSet, n: usize, l: usize) -> Result<ReluNet> {
    if n < 1 || l < 1 {
        return Err(Error::Params("fit_point_samples needs N, L >= 1".into()));
    }
    let m = samples.len();
    let limit = n * n * l;
    if m > limit {
        return Err(Error::Capacity { samples: m, limit });
    }
    let d = samples.dim();
    if m == 0 {
        // vacuous contract: the zero network
        return Ok(ReluNet::affine(AffineLayer::new(d, vec![vec![]], vec![Rat::zero()])));
    }
    let values: Vec<Rat> = samples.values.iter().map(|v| rat_from_f64(*v)).collect();
    fit_points_exact(&samples.points, &values, n)
}

/// Core ladder shared by the real and packed-table entry points.
fn fit_points_exact(points: &[Vec<f64>], values: &[Rat], n: usize) -> Result<ReluNet> {
    let d = points.first().map_or(1, Vec::len);
    let m = points.len();
    let (proj, w) = project_points(points)?;

    // sort samples by projected coordinate
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|a, b| proj[*a].cmp(&proj[*b]));
    let t0 = proj[order[0]].clone();
    let t: Vec<Rat> = order.iter().map(|i| &proj[*i] - &t0).collect();
    let y: Vec<Rat> = order.iter().map(|i| values[*i].clone()).collect();

    if m == 1 {
        return Ok(ReluNet::affine(AffineLayer::new(d, vec![vec![]], vec![y[0].clone()])));
    }

    // slope changes of the piecewise-linear interpolant (flat outside)
    let mut slopes = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        slopes.push((&y[i + 1] - &y[i]) / (&t[i + 1] - &t[i]));
    }
    let mut knots = Vec::with_capacity(m);
    knots.push(slopes[0].clone());
    for i in 1..m - 1 {
        knots.push(&slopes[i] - &slopes[i - 1]);
    }
    knots.push(-slopes[m - 2].clone());

    // distribute knots over hidden layers; channels per layer:
    // [t-carry, acc+, acc−, chunk of knot neurons]
    let cap = 4 * n + 1;
    let chunks: Vec<&[Rat]> = knots.chunks(cap).collect();
    let tpos: Vec<&[Rat]> = t.chunks(cap).collect();
    let h = chunks.len();

    let mut layers = Vec::with_capacity(h + 1);
    for step in 0..h {
        let csize = chunks[step].len();
        let mut rows: Vec<Vec<(usize, Rat)>> = Vec::with_capacity(3 + csize);
        let mut bias: Vec<Rat> = Vec::with_capacity(3 + csize);
        if step == 0 {
            // t-carry: t̂ = w·x − t0; knots live at t̂ = t_i ≥ 0
            let trow: Vec<(usize, Rat)> = w.iter().cloned().enumerate().collect();
            rows.push(trow.clone());
            bias.push(-t0.clone());
            rows.push(vec![]);
            bias.push(Rat::zero());
            rows.push(vec![]);
            bias.push(Rat::zero());
            for ti in tpos[0] {
                rows.push(trow.clone());
                bias.push(-&t0 - ti);
            }
            layers.push(AffineLayer::new(d, rows, bias));
        } else {
            let prev_chunk = chunks[step - 1];
            // signed accumulator folds in the previous layer's knot neurons
            let mut acc_row: Vec<(usize, Rat)> = vec![(1, rat_int(1)), (2, rat_int(-1))];
            for (i, c) in prev_chunk.iter().enumerate() {
                if !c.is_zero() {
                    acc_row.push((3 + i, c.clone()));
                }
            }
            rows.push(vec![(0, rat_int(1))]);
            bias.push(Rat::zero());
            rows.push(acc_row.clone());
            bias.push(Rat::zero());
            rows.push(acc_row.into_iter().map(|(c, w)| (c, -w)).collect());
            bias.push(Rat::zero());
            for ti in tpos[step] {
                rows.push(vec![(0, rat_int(1))]);
                bias.push(-ti.clone());
            }
            layers.push(AffineLayer::new(3 + prev_chunk.len(), rows, bias));
        }
    }
    // readout: y_0 + acc + last chunk
    let last_chunk = chunks[h - 1];
    let mut row: Vec<(usize, Rat)> = vec![(1, rat_int(1)), (2, rat_int(-1))];
    for (i, c) in last_chunk.iter().enumerate() {
        if !c.is_zero() {
            row.push((3 + i, c.clone()));
        }
    }
    layers.push(AffineLayer::new(3 + last_chunk.len(), vec![row], vec![y[0].clone()]));
    Ok(ReluNet::from_layers(layers))
}

/// Exact binary table lookup: net inputs (x, k), output y_{i,k} for x = x_i.
/// Packs each row into y_i = Bin 0.y_{i,1}…y_{i,L}, fits the packed reals,
/// and composes with the single-bit selector. Width ≤ 4N+5, depth ≤ 5L+2.
pub fn fit_bit_samples(table: &BitTable, n: usize, l: usize) -> Result<ReluNet> {
    if n < 1 || l < 1 {
        return Err(Error::Params("fit_bit_samples needs N, L >= 1".into()));
    }
    if l > 52 {
        return Err(Error::Params("bit columns beyond 52 exceed exact f64 packing".into()));
    }
    let m = table.points.len();
    let limit = n * n * l;
    if m > limit {
        return Err(Error::Capacity { samples: m, limit });
    }
    let cols = table.cols();
    if cols > l {
        return Err(Error::Validation(format!("{cols} bit columns exceed L = {l}")));
    }
    if m == 0 {
        return Ok(ReluNet::affine(AffineLayer::new(2, vec![vec![]], vec![Rat::zero()])));
    }

    // pack rows as L-bit fractions
    let packed: Vec<Rat> = table
        .bits
        .iter()
        .map(|row| {
            let mut v = Rat::zero();
            for (i, b) in row.iter().enumerate() {
                if *b == 1 {
                    v += pow2(-(i as i32) - 1);
                }
            }
            v
        })
        .collect();
    let fit = fit_points_exact(&table.points, &packed, n)?;

    // carry k beside the fitted value, then select the k-th bit
    let kpass = passthrough_depth(1, PadSign::Nonneg, fit.depth());
    let front = stack(&[fit, kpass])?;
    let selector = select_bit(1, l as u32)?;
    compose(&front, &selector)
}
