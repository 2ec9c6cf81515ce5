//! Shift-invariant space machinery: exact ground-truth evaluation, the
//! localized representation over the active shifts, coefficient bit tables,
//! the low-bit packing index, and the assembled approximant networks (single
//! term, punctured-domain sum, and the uniform mid-shift lift).

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::split_weighted_bits;
use crate::error::{Error, Result};
use crate::gadgets::mid3;
use crate::interp::{fit_bit_samples, BitTable};
use crate::net::{
    compose, compose_all, passthrough_depth, stack, stack_padded, AffineLayer, PadSign, ReluNet,
    SizeBudget,
};
use crate::scalar::{binary_digits, pow2, rat_from_f64, rat_int, ratio, Rat};
use crate::splines::{bspline_exact, bspline_sup_norm};

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum GeneratorKind {
    Bspline { k: usize },
    Custom {
        f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        exact: Option<Arc<dyn Fn(&[Rat]) -> Rat + Send + Sync>>,
    },
}

/// A compactly supported generator: an exact scalar oracle together with its
/// support box, sup-norm, and an optional continuous pre-shift (used by the
/// mid-shift lift, which works with φ(· ± 2^j δ e)).
///
/// The shift set assumes the generator does not vanish identically on any
/// unit interval inside its support box, which holds for B-splines.
#[derive(Clone)]
pub struct Generator {
    name: String,
    dim: usize,
    base_support: Vec<(f64, f64)>,
    offset: Vec<f64>,
    sup_norm: f64,
    kind: GeneratorKind,
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Generator")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("offset", &self.offset)
            .finish()
    }
}

impl Generator {
    /// Tensor cardinal B-spline of order k in dimension d.
    pub fn bspline(k: usize, d: usize) -> Result<Self> {
        if k < 1 || d < 1 {
            return Err(Error::Params("generator needs k >= 1 and d >= 1".into()));
        }
        Ok(Generator {
            name: format!("bspline:k={k}"),
            dim: d,
            base_support: vec![(0.0, k as f64); d],
            offset: vec![0.0; d],
            sup_norm: bspline_sup_norm(k),
            kind: GeneratorKind::Bspline { k },
        })
    }

    /// Registers a custom oracle with its support box and sup-norm.
    pub fn custom(
        name: &str,
        dim: usize,
        support: Vec<(f64, f64)>,
        sup_norm: f64,
        f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        exact: Option<Arc<dyn Fn(&[Rat]) -> Rat + Send + Sync>>,
    ) -> Result<Self> {
        if support.len() != dim {
            return Err(Error::Params("support box must match dimension".into()));
        }
        if !(sup_norm > 0.0) {
            return Err(Error::Params("sup-norm must be positive".into()));
        }
        Ok(Generator {
            name: name.to_string(),
            dim,
            base_support: support,
            offset: vec![0.0; dim],
            sup_norm,
            kind: GeneratorKind::Custom { f, exact },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// The same generator with an additional continuous pre-shift:
    /// the result evaluates x ↦ φ(x + extra).
    pub fn shifted(&self, extra: &[f64]) -> Generator {
        let mut g = self.clone();
        for (o, e) in g.offset.iter_mut().zip(extra) {
            *o += e;
        }
        g
    }

    /// Effective (open) support interval per dimension.
    pub fn support(&self) -> Vec<(f64, f64)> {
        self.base_support
            .iter()
            .zip(&self.offset)
            .map(|((a, b), o)| (a - o, b - o))
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let arg: Vec<f64> = x.iter().zip(&self.offset).map(|(v, o)| v + o).collect();
        match &self.kind {
            GeneratorKind::Bspline { k } => arg.iter().map(|v| crate::splines::bspline(*k, *v)).product(),
            GeneratorKind::Custom { f, .. } => f(&arg),
        }
    }

    /// Exact evaluation when the oracle supports it (B-splines always do).
    pub fn eval_exact(&self, x: &[Rat]) -> Option<Rat> {
        debug_assert_eq!(x.len(), self.dim);
        let arg: Vec<Rat> =
            x.iter().zip(&self.offset).map(|(v, o)| v + rat_from_f64(*o)).collect();
        match &self.kind {
            GeneratorKind::Bspline { k } => {
                let mut acc = rat_int(1);
                for v in &arg {
                    acc *= bspline_exact(*k, v);
                    if acc.is_zero() {
                        break;
                    }
                }
                Some(acc)
            }
            GeneratorKind::Custom { exact, .. } => exact.as_ref().map(|e| e(&arg)),
        }
    }

    /// Integer shifts whose translate meets the unit cube: the product over
    /// dimensions of the ranges (−b, 1−a) ∩ Z for support (a, b).
    pub fn shift_set(&self) -> Vec<Vec<i64>> {
        let ranges: Vec<Vec<i64>> = self
            .support()
            .iter()
            .map(|(a, b)| {
                let lo = (-b).floor() as i64 + 1;
                let hi = (1.0 - a).ceil() as i64 - 1;
                (lo..=hi).collect()
            })
            .collect();
        let mut out = vec![vec![]];
        for r in &ranges {
            let mut next = Vec::with_capacity(out.len() * r.len());
            for partial in &out {
                for v in r {
                    let mut p = partial.clone();
                    p.push(*v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    /// Cardinality of the shift set.
    pub fn c_phi(&self) -> usize {
        self.support()
            .iter()
            .map(|(a, b)| {
                let lo = (-b).floor() + 1.0;
                let hi = (1.0 - a).ceil() - 1.0;
                (hi - lo + 1.0).max(0.0) as usize
            })
            .product()
    }
}

// ---------------------------------------------------------------------------
// SisFunction
// ---------------------------------------------------------------------------

/// A function in the dilated shift-invariant space: finitely many bounded
/// coefficients against dilated shifts of the generator. The direct sum is
/// the ground-truth oracle for every error measurement.
#[derive(Debug, Clone)]
pub struct SisFunction {
    pub j: u32,
    pub generator: Generator,
    pub coeffs: BTreeMap<Vec<i64>, f64>,
    pub bound_m: f64,
}

impl SisFunction {
    pub fn new(
        j: u32,
        generator: Generator,
        coeffs: BTreeMap<Vec<i64>, f64>,
        bound_m: f64,
    ) -> Result<Self> {
        if !(bound_m > 0.0) {
            return Err(Error::Validation("coefficient bound must be positive".into()));
        }
        for (n, c) in &coeffs {
            if n.len() != generator.dim() {
                return Err(Error::Validation("coefficient index dimension mismatch".into()));
            }
            if !(c.abs() < bound_m) {
                return Err(Error::Validation(format!(
                    "coefficient {c} at {n:?} violates |c| < {bound_m}"
                )));
            }
        }
        Ok(SisFunction { j, generator, coeffs, bound_m })
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    /// Same coefficients against a continuously pre-shifted generator.
    pub fn with_generator_offset(&self, extra: &[f64]) -> SisFunction {
        SisFunction {
            j: self.j,
            generator: self.generator.shifted(extra),
            coeffs: self.coeffs.clone(),
            bound_m: self.bound_m,
        }
    }

    /// Ground truth: the direct sum over the finitely many active shifts.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let scale = 2f64.powi(self.j as i32);
        let mut acc = 0.0;
        for (n, c) in &self.coeffs {
            let arg: Vec<f64> =
                x.iter().zip(n).map(|(xi, ni)| scale * xi - *ni as f64).collect();
            acc += c * self.generator.eval(&arg);
        }
        acc
    }

    /// Exact-rational direct sum, when the generator supports it.
    pub fn eval_exact(&self, x: &[Rat]) -> Option<Rat> {
        let scale = pow2(self.j as i32);
        let mut acc = Rat::zero();
        for (n, c) in &self.coeffs {
            let arg: Vec<Rat> =
                x.iter().zip(n).map(|(xi, ni)| xi * &scale - rat_int(*ni)).collect();
            acc += rat_from_f64(*c) * self.generator.eval_exact(&arg)?;
        }
        Some(acc)
    }

    /// Localized form: the sum over the shift set of c_{m_j(x)+k} φ(r_j(x)−k).
    /// Equals the direct sum on [0,1)^d; that equality is itself a test.
    pub fn localize(&self, x: &[f64]) -> Result<f64> {
        let (m, r) = m_r_split(x, self.j)?;
        let mut acc = 0.0;
        for k in self.generator.shift_set() {
            let idx: Vec<i64> = m.iter().zip(&k).map(|(mi, ki)| mi + ki).collect();
            if let Some(c) = self.coeffs.get(&idx) {
                let arg: Vec<f64> = r.iter().zip(&k).map(|(ri, ki)| ri - *ki as f64).collect();
                acc += c * self.generator.eval(&arg);
            }
        }
        Ok(acc)
    }

    pub fn localize_exact(&self, x: &[Rat]) -> Result<Option<Rat>> {
        let (m, r) = m_r_split_exact(x, self.j)?;
        let mut acc = Rat::zero();
        for k in self.generator.shift_set() {
            let idx: Vec<i64> = m.iter().zip(&k).map(|(mi, ki)| mi + ki).collect();
            if let Some(c) = self.coeffs.get(&idx) {
                let arg: Vec<Rat> = r.iter().zip(&k).map(|(ri, ki)| ri - rat_int(*ki)).collect();
                match self.generator.eval_exact(&arg) {
                    Some(v) => acc += rat_from_f64(*c) * v,
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(acc))
    }

    /// JSON document per the wire schema.
    pub fn to_json(&self) -> String {
        let wire = WireSis {
            j: self.j,
            d: self.dim(),
            m: self.bound_m,
            generator: self.generator.name().to_string(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(n, c)| WireCoeff { n: n.clone(), c: *c })
                .collect(),
        };
        serde_json::to_string(&wire).expect("sis serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_with(s, &|_| None)
    }

    /// Parses the wire schema; `resolve` supplies registered custom oracles.
    pub fn from_json_with(
        s: &str,
        resolve: &dyn Fn(&str) -> Option<Generator>,
    ) -> Result<Self> {
        let wire: WireSis =
            serde_json::from_str(s).map_err(|e| Error::Parse { layer: None, msg: e.to_string() })?;
        let generator = if let Some(rest) = wire.generator.strip_prefix("bspline:k=") {
            let k: usize = rest
                .parse()
                .map_err(|_| Error::Parse { layer: None, msg: "bad bspline order".into() })?;
            Generator::bspline(k, wire.d)?
        } else if let Some(g) = resolve(&wire.generator) {
            g
        } else {
            return Err(Error::Parse {
                layer: None,
                msg: format!("unknown generator '{}'", wire.generator),
            });
        };
        let coeffs: BTreeMap<Vec<i64>, f64> =
            wire.coeffs.into_iter().map(|wc| (wc.n, wc.c)).collect();
        SisFunction::new(wire.j, generator, coeffs, wire.m)
    }
}

#[derive(Serialize, Deserialize)]
struct WireCoeff {
    n: Vec<i64>,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct WireSis {
    j: u32,
    d: usize,
    #[serde(rename = "M")]
    m: f64,
    generator: String,
    coeffs: Vec<WireCoeff>,
}

// ---------------------------------------------------------------------------
// Cell decomposition and coefficient bits
// ---------------------------------------------------------------------------

/// Cell index and in-cell coordinate: m = ⌊2^j x⌋, r = 2^j x − m per
/// coordinate; domain error outside [0,1)^d.
pub fn m_r_split(x: &[f64], j: u32) -> Result<(Vec<i64>, Vec<f64>)> {
    let scale = 2f64.powi(j as i32);
    let mut m = Vec::with_capacity(x.len());
    let mut r = Vec::with_capacity(x.len());
    for xi in x {
        if !(0.0..1.0).contains(xi) {
            return Err(Error::Domain(format!("coordinate {xi} outside [0,1)")));
        }
        let v = scale * xi;
        let mi = v.floor();
        m.push(mi as i64);
        r.push(v - mi);
    }
    Ok((m, r))
}

pub fn m_r_split_exact(x: &[Rat], j: u32) -> Result<(Vec<i64>, Vec<Rat>)> {
    let scale = pow2(j as i32);
    let mut m = Vec::with_capacity(x.len());
    let mut r = Vec::with_capacity(x.len());
    for xi in x {
        if xi.is_negative() || *xi >= Rat::one() {
            return Err(Error::Domain(format!("coordinate {xi} outside [0,1)")));
        }
        let v = xi * &scale;
        let mi = v.floor();
        let int = mi.to_integer().to_i64().expect("cell index fits i64");
        r.push(&v - &mi);
        m.push(int);
    }
    Ok((m, r))
}

/// First `depth` bits of (c_m/M)/2 + 1/2 for every cell index m ∈ [0,2^j)^d;
/// absent coefficients contribute the bits of 1/2. Truncation error of the
/// reconstruction Σ 2^{1−i} b_i − 1 is at most 2^{1−depth}.
pub fn coeff_bits(g: &SisFunction, depth: usize) -> Result<BitTable> {
    coeff_bits_shifted(g, &vec![0; g.dim()], depth)
}

/// Shifted variant used by the term networks: bits of c_{m+shift}.
pub fn coeff_bits_shifted(g: &SisFunction, shift: &[i64], depth: usize) -> Result<BitTable> {
    if depth < 1 {
        return Err(Error::Params("coeff_bits needs depth >= 1".into()));
    }
    let d = g.dim();
    let cells = 1i64 << g.j;
    let m_bound = rat_from_f64(g.bound_m);
    let mut points = Vec::new();
    let mut bits = Vec::new();
    let mut idx = vec![0i64; d];
    loop {
        let key: Vec<i64> = idx.iter().zip(shift).map(|(m, s)| m + s).collect();
        let c = g.coeffs.get(&key).copied().unwrap_or(0.0);
        let q = rat_from_f64(c) / &m_bound / rat_int(2) + ratio(1, 2);
        points.push(idx.iter().map(|v| *v as f64).collect());
        bits.push(binary_digits(&q, depth));
        let mut done = true;
        for m in 0..d {
            idx[m] += 1;
            if idx[m] < cells {
                done = false;
                break;
            }
            idx[m] = 0;
        }
        if done {
            break;
        }
    }
    BitTable::new(points, bits)
}

/// Bijective packing of per-coordinate low-bit lists into {1,…,2^s} with
/// s = Σ (j − k_m); bit lists are MSB-first slices x_{k_m+1} … x_j.
pub fn q_index(low_bits: &[Vec<u8>], split_points: &[u32], j: u32) -> Result<u64> {
    if low_bits.len() != split_points.len() {
        return Err(Error::Params("one bit list per coordinate required".into()));
    }
    let mut q = 1u64;
    let mut offset = 0u32;
    for (m, (bits, km)) in low_bits.iter().zip(split_points).enumerate() {
        if *km > j {
            return Err(Error::Params(format!("split point {km} exceeds j = {j}")));
        }
        let width = j - km;
        if bits.len() != width as usize {
            return Err(Error::Params(format!(
                "coordinate {m}: expected {width} low bits, got {}",
                bits.len()
            )));
        }
        let mut low = 0u64;
        for b in bits {
            if *b > 1 {
                return Err(Error::Params("bits must be 0 or 1".into()));
            }
            low = 2 * low + *b as u64;
        }
        q += low << offset;
        offset += width;
    }
    Ok(q)
}

/// Even split of s = Σ (j − k_m) across coordinates, remainder to the
/// leading ones.
pub fn split_points(j: u32, d: usize, s: u32) -> Result<Vec<u32>> {
    if s > j * d as u32 {
        return Err(Error::Params(format!("cannot split s={s} low bits across {d} coords at j={j}")));
    }
    let base = s / d as u32;
    let extra = (s % d as u32) as usize;
    Ok((0..d)
        .map(|m| {
            let share = base + if m < extra { 1 } else { 0 };
            j - share
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Approximation parameters
// ---------------------------------------------------------------------------

/// Parameters of the assembled approximant networks.
#[derive(Debug, Clone, Copy)]
pub struct ApproxParams {
    pub r: u32,
    pub s: u32,
    pub r_tilde: u32,
    pub s_tilde: u32,
    pub epsilon: f64,
    pub delta: f64,
}

/// Number of coefficient bits kept: ⌈log2(1/ε)⌉ + 1, computed exactly.
pub fn bits_needed(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Params(format!("epsilon must be in (0,1), got {epsilon}")));
    }
    let eps = rat_from_f64(epsilon);
    let mut q = 0usize;
    while pow2(-(q as i32)) > eps {
        q += 1;
    }
    Ok(q + 1)
}

impl ApproxParams {
    pub fn validate(&self, j: u32, d: usize, uniform: bool) -> Result<()> {
        if self.r < 1 || self.s < 1 || self.r_tilde < 1 || self.s_tilde < 1 {
            return Err(Error::Params("r, s, r~, s~ must be >= 1".into()));
        }
        if 2 * (self.s + self.r) < d as u32 * j {
            return Err(Error::Params(format!(
                "need 2(s+r) >= d*j: 2({}+{}) < {}*{}",
                self.s, self.r, d, j
            )));
        }
        let t = bits_needed(self.epsilon)?;
        if (self.r_tilde as usize) * (self.s_tilde as usize) < t {
            return Err(Error::Params(format!(
                "need r~*s~ >= {t} coefficient bits, got {}*{}",
                self.r_tilde, self.s_tilde
            )));
        }
        if self.s > j * d as u32 {
            return Err(Error::Params("s exceeds the total number of cell bits".into()));
        }
        let cell = 2f64.powi(-(j as i32));
        let cap = if uniform { cell / 3.0 } else { cell };
        if !(self.delta > 0.0 && self.delta < cap) {
            return Err(Error::Params(format!(
                "delta {} outside (0, {cap}) for j = {j}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Width/depth budget quoted for a single term network.
pub fn term_budget(d: usize, params: &ApproxParams, n_phi: usize, l_phi: usize) -> SizeBudget {
    let w = (7 * d as u64 * params.r_tilde as u64 * (1u64 << params.r)).max(n_phi as u64)
        + 4 * d as u64;
    let depth = 14 * params.s_tilde as u64 * (1u64 << params.s) + l_phi as u64;
    SizeBudget::new(w as usize, depth as usize)
}

/// Budget quoted for the punctured-domain approximant.
pub fn q_net_budget(
    c_phi: usize,
    d: usize,
    params: &ApproxParams,
    n_phi: usize,
    l_phi: usize,
) -> SizeBudget {
    let t = term_budget(d, params, n_phi, l_phi);
    SizeBudget::new(c_phi * t.width_bound, t.depth_bound)
}

/// Budget quoted for the uniform approximant.
pub fn uniform_budget(
    c_phi: usize,
    d: usize,
    params: &ApproxParams,
    n_phi: usize,
    l_phi: usize,
) -> SizeBudget {
    let t = term_budget(d, params, n_phi, l_phi);
    SizeBudget::new(
        3usize.pow(d as u32) * 2 * c_phi * t.width_bound,
        t.depth_bound + 2 * d,
    )
}

// ---------------------------------------------------------------------------
// Term network
// ---------------------------------------------------------------------------

/// Interpolator size for the coefficient-bit tables: the smallest power of
/// two N with N² · 2^s covering the 2^{dj−s} table points and enough ladder
/// capacity; must stay within 2^r to respect the width budget.
fn fit_width_param(j: u32, d: usize, params: &ApproxParams) -> Result<usize> {
    let dj = d as u32 * j;
    let points: u64 = 1u64 << (dj - params.s);
    let l_fit = 1u64 << params.s;
    let mut n = if dj > 2 * params.s { 1usize << ((dj - 2 * params.s).div_ceil(2)) } else { 1 };
    loop {
        let capacity = (n as u64) * (n as u64) * l_fit;
        let ladder = (l_fit + 1) * (4 * n as u64 + 1);
        if capacity >= points && ladder >= points {
            break;
        }
        n *= 2;
    }
    if n > (1usize << params.r) {
        return Err(Error::Params(format!(
            "coefficient table needs fit width {n} > 2^r; raise r or s"
        )));
    }
    Ok(n)
}

/// Network approximating the single term c_{m_j(x)+k} φ(r_j(x)−k) on the
/// punctured cube, with sup-error at most 3 ε M ‖φ‖∞.
///
/// The stages follow the assembled architecture: stacked weighted-bit
/// splitters per coordinate, the generator surrogate applied to the shifted
/// in-cell coordinate, then coefficient-bit interpolators fused one by one
/// into the running sum through the exact binary product gate.
pub fn build_term_net(
    g: &SisFunction,
    shift: &[i64],
    params: &ApproxParams,
    phi0: &ReluNet,
    phi0_err: f64,
) -> Result<ReluNet> {
    let d = g.dim();
    params.validate(g.j, d, false)?;
    if shift.len() != d {
        return Err(Error::Params("shift dimension mismatch".into()));
    }
    if phi0.input_dim() != d || phi0.output_dim() != 1 {
        return Err(Error::Params("phi0 must map R^d to R".into()));
    }
    let sup = g.generator.sup_norm();
    if !(phi0_err >= 0.0) || phi0_err > params.epsilon * sup * (1.0 + 1e-12) {
        return Err(Error::Params(format!(
            "phi0 certificate {phi0_err} exceeds epsilon * sup-norm = {}",
            params.epsilon * sup
        )));
    }
    let j = g.j;
    let splits = split_points(j, d, params.s)?;

    // stage A: per-coordinate weighted-bit splitters
    let splitters: Vec<ReluNet> = splits
        .iter()
        .map(|km| split_weighted_bits(j, params.delta, params.r, *km))
        .collect::<Result<_>>()?;
    let stage_a = stack(&splitters)?;

    // glue: [tails(d) | his(d) | q]
    let mut rows: Vec<Vec<(usize, Rat)>> = Vec::new();
    let mut bias: Vec<Rat> = Vec::new();
    for m in 0..d {
        rows.push(vec![(3 * m + 2, rat_int(1))]);
        bias.push(Rat::zero());
    }
    for m in 0..d {
        rows.push(vec![(3 * m, rat_int(1))]);
        bias.push(Rat::zero());
    }
    let mut q_row = Vec::new();
    let mut off = 0u32;
    for (m, km) in splits.iter().enumerate() {
        q_row.push((3 * m + 1, pow2(off as i32)));
        off += j - km;
    }
    rows.push(q_row);
    bias.push(rat_int(1));
    let glue_ab = AffineLayer::new(3 * d, rows, bias);

    // stage B: generator surrogate (input-shifted by −k, output normalised)
    // beside nonneg passthrough of (his, q)
    let shift_rat: Vec<Rat> = shift.iter().map(|k| -rat_int(*k)).collect();
    let phi0_shifted = crate::net::with_input_shift(phi0, &shift_rat)?;
    let norm_row = AffineLayer::new(
        1,
        vec![vec![(0, rat_from_f64(sup).recip())]],
        vec![Rat::zero()],
    );
    let phi0_norm = crate::net::with_output_affine(&phi0_shifted, norm_row)?;
    let carry = passthrough_depth(d + 1, PadSign::Nonneg, phi0_norm.depth());
    let stage_b = stack(&[phi0_norm, carry])?;
    // stage_b output: [phiv, hi.., q]

    // glue into block order [hi.., q, phiv_sh, acc_sh]
    let mut rows: Vec<Vec<(usize, Rat)>> = Vec::new();
    let mut bias: Vec<Rat> = Vec::new();
    for m in 0..d {
        rows.push(vec![(1 + m, rat_int(1))]);
        bias.push(Rat::zero());
    }
    rows.push(vec![(1 + d, rat_int(1))]);
    bias.push(Rat::zero());
    rows.push(vec![(0, rat_int(1))]);
    bias.push(rat_int(2)); // phiv + 2 >= 0
    rows.push(vec![]);
    bias.push(rat_int(4)); // acc starts at 0, carried as acc + 4
    let glue_bc = AffineLayer::new(d + 2, rows, bias);

    // stage C: the gated bit interpolators in blocks of r~
    let t_total = bits_needed(params.epsilon)?;
    let n_fit = fit_width_param(j, d, params)?;
    let l_fit = 1usize << params.s;
    let mut net = compose_all(&[
        &stage_a,
        &ReluNet::affine(glue_ab),
        &stage_b,
        &ReluNet::affine(glue_bc),
    ])?;

    let mut gi = 1usize;
    while gi <= t_total {
        let hi_bit = (gi + params.r_tilde as usize - 1).min(t_total);
        let block_bits: Vec<usize> = (gi..=hi_bit).collect();
        let block = gate_block(g, shift, &splits, &block_bits, n_fit, l_fit, d)?;
        net = compose(&net, &block)?;
        gi = hi_bit + 1;
    }

    // readout: M ‖φ‖∞ ((acc_sh − 4) − (phiv_sh − 2))
    let unscale = rat_from_f64(g.bound_m) * rat_from_f64(sup);
    let row = vec![(d + 1, -unscale.clone()), (d + 2, unscale.clone())];
    let b0 = &unscale * rat_int(2) - &unscale * rat_int(4);
    let readout = AffineLayer::new(d + 3, vec![row], vec![b0]);
    crate::net::with_output_affine(&net, readout)
}

/// One gate block: interpolates a run of coefficient bits in parallel and
/// folds each into the running sum through the product gate.
fn gate_block(
    g: &SisFunction,
    shift: &[i64],
    splits: &[u32],
    block_bits: &[usize],
    n_fit: usize,
    l_fit: usize,
    d: usize,
) -> Result<ReluNet> {
    let j = g.j;
    let depth_bits = block_bits[block_bits.len() - 1];
    let table_full = coeff_bits_shifted(g, shift, depth_bits)?;

    // regroup the per-cell table into (hi-tuple, q) indexed tables per bit
    let mut hi_points: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let cells = table_full.points.len();
    let mut assignments = Vec::with_capacity(cells); // (hi row, q) per cell
    for p in &table_full.points {
        let m: Vec<i64> = p.iter().map(|v| *v as i64).collect();
        let mut hi = Vec::with_capacity(d);
        let mut lows = Vec::with_capacity(d);
        for (mm, km) in m.iter().zip(splits) {
            let low_width = j - km;
            let mask = (1i64 << low_width) - 1;
            hi.push(mm & !mask);
            let low = (mm & mask) as u64;
            let bits: Vec<u8> =
                (0..low_width).rev().map(|b| ((low >> b) & 1) as u8).collect();
            lows.push(bits);
        }
        let q = q_index(&lows, splits, j)?;
        let next = hi_points.len();
        let row = *hi_points.entry(hi).or_insert(next);
        assignments.push((row, q as usize));
    }
    let n_rows = hi_points.len();
    let mut points = vec![vec![0.0; d]; n_rows];
    for (hi, row) in &hi_points {
        points[*row] = hi.iter().map(|v| *v as f64).collect();
    }

    let mut fits = Vec::with_capacity(block_bits.len());
    for &bit in block_bits {
        let mut bits = vec![vec![0u8; l_fit]; n_rows];
        for (cell, (row, q)) in assignments.iter().enumerate() {
            bits[*row][*q - 1] = table_full.bits[cell][bit - 1];
        }
        let table = BitTable::new(points.clone(), bits)?;
        fits.push(fit_bit_samples(&table, n_fit, l_fit)?);
    }

    let b = fits.len();
    let fit_depth = fits[0].depth();
    debug_assert!(fits.iter().all(|f| f.depth() == fit_depth));

    // fan [hi.., q, phiv_sh, acc_sh] to the interpolators plus carries
    let mut rows: Vec<Vec<(usize, Rat)>> = Vec::new();
    for _ in 0..b {
        for m in 0..d {
            rows.push(vec![(m, rat_int(1))]);
        }
        rows.push(vec![(d, rat_int(1))]);
    }
    for c in 0..d + 3 {
        rows.push(vec![(c, rat_int(1))]);
    }
    let nbias = rows.len();
    let fan = AffineLayer::new(d + 3, rows, vec![Rat::zero(); nbias]);

    let mut parts = fits;
    parts.push(passthrough_depth(d + 3, PadSign::Nonneg, fit_depth));
    let stacked = stack_padded(&parts, PadSign::Nonneg)?;
    // stacked output: [bit_1..bit_b, hi.., q, phiv_sh, acc_sh]

    // gate hidden layer
    let phiv_col = b + d + 1;
    let acc_col = b + d + 2;
    let mut rows: Vec<Vec<(usize, Rat)>> = Vec::new();
    let mut bias: Vec<Rat> = Vec::new();
    for i in 0..b {
        // σ((phiv_sh − 2)/4 + bit_i − 1/2)
        rows.push(vec![(i, rat_int(1)), (phiv_col, ratio(1, 4))]);
        bias.push(ratio(-1, 1));
    }
    for c in 0..d + 1 {
        rows.push(vec![(b + c, rat_int(1))]);
        bias.push(Rat::zero());
    }
    rows.push(vec![(phiv_col, rat_int(1))]);
    bias.push(Rat::zero());
    // acc_partial_sh = acc_sh − Σ 2^{2−gi} bit_i + 4 (≥ 0)
    let mut acc_row = vec![(acc_col, rat_int(1))];
    for (i, &gbit) in block_bits.iter().enumerate() {
        acc_row.push((i, -pow2(2 - gbit as i32)));
    }
    acc_row.sort_by_key(|e| e.0);
    rows.push(acc_row);
    bias.push(rat_int(4));
    let gate_hidden = AffineLayer::new(b + d + 3, rows, bias);

    // post affine: [hi.., q, phiv_sh, acc_new_sh]
    let mut rows: Vec<Vec<(usize, Rat)>> = Vec::new();
    let mut bias: Vec<Rat> = Vec::new();
    for c in 0..d + 1 {
        rows.push(vec![(b + c, rat_int(1))]);
        bias.push(Rat::zero());
    }
    rows.push(vec![(b + d + 1, rat_int(1))]);
    bias.push(Rat::zero());
    let mut acc_row = vec![(b + d + 2, rat_int(1))];
    for (i, &gbit) in block_bits.iter().enumerate() {
        acc_row.push((i, pow2(3 - gbit as i32)));
    }
    acc_row.sort_by_key(|e| e.0);
    rows.push(acc_row);
    bias.push(rat_int(-4));
    let post = AffineLayer::new(b + d + 3, rows, bias);

    let gate = ReluNet::from_layers(vec![gate_hidden, post]);
    compose_all(&[&ReluNet::affine(fan), &stacked, &gate])
}

// ---------------------------------------------------------------------------
// Assembled approximants
// ---------------------------------------------------------------------------

/// Sum of term networks over the whole shift set: approximates g on the
/// punctured cube with sup-error at most 3 C_φ M ‖φ‖∞ ε.
pub fn build_q_net(
    g: &SisFunction,
    params: &ApproxParams,
    phi0: &ReluNet,
    phi0_err: f64,
) -> Result<ReluNet> {
    let shifts = g.generator.shift_set();
    let terms: Vec<ReluNet> = shifts
        .iter()
        .map(|k| build_term_net(g, k, params, phi0, phi0_err))
        .collect::<Result<_>>()?;
    let depth = terms[0].depth();
    debug_assert!(terms.iter().all(|t| t.depth() == depth));
    let stacked = stack(&terms)?;
    let d = g.dim();
    // fan the input to every term, then sum
    let fan_rows: Vec<Vec<(usize, Rat)>> = (0..shifts.len())
        .flat_map(|_| (0..d).map(|m| vec![(m, rat_int(1))]))
        .collect();
    let bias = vec![Rat::zero(); fan_rows.len()];
    let fan = AffineLayer::new(d, fan_rows, bias);
    let sum_row: Vec<(usize, Rat)> = (0..shifts.len()).map(|i| (i, rat_int(1))).collect();
    let sum = AffineLayer::new(shifts.len(), vec![sum_row], vec![Rat::zero()]);
    compose_all(&[&ReluNet::affine(fan), &stacked, &ReluNet::affine(sum)])
}

/// Uniform approximant on [0,1]^d: the mid-shift induction lifts the
/// punctured-domain accuracy to the whole cube, one coordinate at a time,
/// taking the middle value of the straight and the two δ-shifted builds.
/// Sup-error at most 6 C_φ M ‖φ‖∞ ε; depth grows by exactly 2 per dimension.
pub fn build_uniform_net(
    g: &SisFunction,
    params: &ApproxParams,
    phi0: &ReluNet,
    phi0_err: f64,
) -> Result<ReluNet> {
    let d = g.dim();
    params.validate(g.j, d, true)?;
    build_level(g, params, phi0, phi0_err, d)
}

fn build_level(
    g: &SisFunction,
    params: &ApproxParams,
    phi0: &ReluNet,
    phi0_err: f64,
    level: usize,
) -> Result<ReluNet> {
    if level == 0 {
        return build_q_net(g, params, phi0, phi0_err);
    }
    let d = g.dim();
    let axis = level - 1;
    let big = 2f64.powi(g.j as i32) * params.delta;
    let mut gen_off = vec![0.0; d];
    gen_off[axis] = big;
    let gen_off_neg: Vec<f64> = gen_off.iter().map(|v| -v).collect();

    let center = build_level(g, params, phi0, phi0_err, level - 1)?;

    let off_rat: Vec<Rat> = gen_off.iter().map(|v| rat_from_f64(*v)).collect();
    let off_rat_neg: Vec<Rat> = off_rat.iter().map(|v| -v.clone()).collect();
    let g_plus = g.with_generator_offset(&gen_off);
    let phi0_plus = crate::net::with_input_shift(phi0, &off_rat)?;
    let plus_inner = build_level(&g_plus, params, &phi0_plus, phi0_err, level - 1)?;
    let g_minus = g.with_generator_offset(&gen_off_neg);
    let phi0_minus = crate::net::with_input_shift(phi0, &off_rat_neg)?;
    let minus_inner = build_level(&g_minus, params, &phi0_minus, phi0_err, level - 1)?;

    // evaluate the shifted builds at x ∓ δe
    let mut dshift = vec![Rat::zero(); d];
    dshift[axis] = -rat_from_f64(params.delta);
    let plus = crate::net::with_input_shift(&plus_inner, &dshift)?;
    dshift[axis] = rat_from_f64(params.delta);
    let minus = crate::net::with_input_shift(&minus_inner, &dshift)?;

    let stacked = stack(&[center, plus, minus])?;
    let fan_rows: Vec<Vec<(usize, Rat)>> =
        (0..3 * d).map(|i| vec![(i % d, rat_int(1))]).collect();
    let fan = AffineLayer::new(d, fan_rows, vec![Rat::zero(); 3 * d]);
    compose_all(&[&ReluNet::affine(fan), &stacked, &mid3()])
}

/// The order-2 spline as an exact width-3 depth-2 network:
/// σ(x) − 2σ(x−1) + σ(x−2). Serves as a zero-error generator surrogate.
pub fn exact_hat() -> ReluNet {
    let l1 = AffineLayer::new(
        1,
        vec![vec![(0, rat_int(1))], vec![(0, rat_int(1))], vec![(0, rat_int(1))]],
        vec![Rat::zero(), rat_int(-1), rat_int(-2)],
    );
    let l2 = AffineLayer::new(
        3,
        vec![vec![(0, rat_int(1)), (1, rat_int(-2)), (2, rat_int(1))]],
        vec![Rat::zero()],
    );
    ReluNet::from_layers(vec![l1, l2])
}

/// Predicted error scale of the order-composition rate: branches on whether
/// the generator order α or the space order 2β/d limits the rate.
pub fn rate_compose(alpha: f64, beta: f64, d: usize, n: usize, l: usize) -> Result<f64> {
    if n < 2 || l < 2 {
        return Err(Error::Params("rate_compose needs N, L >= 2".into()));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Params("orders must be positive".into()));
    }
    let nl = (n * l) as f64;
    let two_beta_d = 2.0 * beta / d as f64;
    let case1 = (nl / ((n as f64).log2() * (l as f64).log2())).powf(-two_beta_d);
    let case2 = nl.powf(-alpha);
    Ok(if alpha > two_beta_d {
        case1
    } else if alpha < two_beta_d {
        case2
    } else {
        case1.max(case2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::hat;
    use rand::{Rng, SeedableRng};

    use super::exact_hat as exact_hat_net;

    fn random_sis(j: u32, d: usize, seed: u64) -> SisFunction {
        let gen = Generator::bspline(2, d).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = BTreeMap::new();
        let cells = 1i64 << j;
        let mut idx = vec![-1i64; d];
        loop {
            coeffs.insert(idx.clone(), rng.gen_range(-0.99..0.99));
            let mut done = true;
            for m in 0..d {
                idx[m] += 1;
                if idx[m] < cells {
                    done = false;
                    break;
                }
                idx[m] = -1;
            }
            if done {
                break;
            }
        }
        SisFunction::new(j, gen, coeffs, 1.0).unwrap()
    }

    /// Dyadic-coefficient variant for exactness tests.
    fn dyadic_sis(j: u32, d: usize, frac_bits: usize, seed: u64) -> SisFunction {
        let gen = Generator::bspline(2, d).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = BTreeMap::new();
        let cells = 1i64 << j;
        let scale = 1i64 << frac_bits;
        let mut idx = vec![-1i64; d];
        loop {
            let num = rng.gen_range(-(scale - 1)..scale);
            coeffs.insert(idx.clone(), num as f64 / scale as f64);
            let mut done = true;
            for m in 0..d {
                idx[m] += 1;
                if idx[m] < cells {
                    done = false;
                    break;
                }
                idx[m] = -1;
            }
            if done {
                break;
            }
        }
        SisFunction::new(j, gen, coeffs, 1.0).unwrap()
    }

    #[test]
    fn shift_set_of_hat() {
        let g = Generator::bspline(2, 1).unwrap();
        assert_eq!(g.shift_set(), vec![vec![-1], vec![0]]);
        assert_eq!(g.c_phi(), 2);
        let g2 = Generator::bspline(2, 2).unwrap();
        assert_eq!(g2.c_phi(), 4);
    }

    #[test]
    fn shifted_generator_grows_by_one() {
        let g = Generator::bspline(2, 1).unwrap();
        let gp = g.shifted(&[0.25]);
        assert_eq!(gp.c_phi(), 3);
        let gm = g.shifted(&[-0.25]);
        assert_eq!(gm.c_phi(), 3);
        // value shift identity: φ_+(x) = φ(x + 1/4)
        assert_eq!(gp.eval(&[0.75]), g.eval(&[1.0]));
    }

    #[test]
    fn m_r_split_examples() {
        let (m, r) = m_r_split(&[0.8125], 2).unwrap();
        assert_eq!(m, vec![3]);
        assert!((r[0] - 0.25).abs() < 1e-15);
        let (m, r) = m_r_split(&[0.0], 3).unwrap();
        assert_eq!(m, vec![0]);
        assert_eq!(r, vec![0.0]);
        let (m, r) = m_r_split(&[0.5, 0.25], 1).unwrap();
        assert_eq!(m, vec![1, 0]);
        assert_eq!(r, vec![0.0, 0.5]);
        assert!(m_r_split(&[1.0], 2).is_err());
    }

    #[test]
    fn localize_equals_direct_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
        for (j, d) in [(3u32, 1usize), (2, 2)] {
            let g = random_sis(j, d, 100 + j as u64 + d as u64);
            for _ in 0..2000 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
                let direct = g.eval(&x);
                let local = g.localize(&x).unwrap();
                assert!((direct - local).abs() < 1e-12, "j={j} d={d} x={x:?}");
            }
        }
    }

    #[test]
    fn localize_exact_in_rational_mode() {
        let g = dyadic_sis(3, 1, 6, 7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(56);
        for _ in 0..300 {
            let num = rng.gen_range(0..4096i64);
            let x = vec![ratio(num, 4096)];
            let direct = g.eval_exact(&x).unwrap();
            let local = g.localize_exact(&x).unwrap().unwrap();
            assert_eq!(direct, local);
        }
    }

    #[test]
    fn single_term_localization() {
        // single coefficient, generator supported in the unit cell
        let gen = Generator::bspline(1, 1).unwrap();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![3i64], 0.5);
        let g = SisFunction::new(2, gen, coeffs, 1.0).unwrap();
        // at x = 0.8: m = 3, r = 0.2: only k = 0 contributes
        assert!((g.localize(&[0.8]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coeff_bits_reconstruction() {
        let g = random_sis(2, 1, 77);
        let depth = 20;
        let table = coeff_bits(&g, depth).unwrap();
        for (p, bits) in table.points.iter().zip(&table.bits) {
            let m = vec![p[0] as i64];
            let c = g.coeffs.get(&m).copied().unwrap_or(0.0);
            let mut recon = -1.0;
            for (i, b) in bits.iter().enumerate() {
                recon += 2f64.powi(-(i as i32)) * *b as f64;
            }
            assert!((c - recon).abs() <= 2f64.powi(1 - depth as i32), "m={m:?}");
        }
    }

    #[test]
    fn coeff_bits_of_zero_is_half() {
        let gen = Generator::bspline(2, 1).unwrap();
        let g = SisFunction::new(1, gen, BTreeMap::new(), 1.0).unwrap();
        let table = coeff_bits(&g, 5).unwrap();
        for bits in &table.bits {
            assert_eq!(bits, &vec![1, 0, 0, 0, 0]);
        }
    }

    #[test]
    fn q_index_bijective() {
        let j = 3u32;
        let splits = split_points(j, 2, 4).unwrap();
        assert_eq!(splits, vec![1, 1]);
        let mut seen = std::collections::HashSet::new();
        for a in 0..4u64 {
            for b in 0..4u64 {
                let la: Vec<u8> = (0..2).rev().map(|t| ((a >> t) & 1) as u8).collect();
                let lb: Vec<u8> = (0..2).rev().map(|t| ((b >> t) & 1) as u8).collect();
                let q = q_index(&[la, lb], &splits, j).unwrap();
                assert!((1..=16).contains(&q));
                assert!(seen.insert(q));
            }
        }
        assert_eq!(seen.len(), 16);
        // all-zero pattern packs to 1
        assert_eq!(q_index(&[vec![0, 0], vec![0, 0]], &splits, j).unwrap(), 1);
        // all-one pattern packs to 2^s
        assert_eq!(q_index(&[vec![1, 1], vec![1, 1]], &splits, j).unwrap(), 16);
    }

    #[test]
    fn params_validation() {
        let p = ApproxParams {
            r: 2,
            s: 2,
            r_tilde: 4,
            s_tilde: 4,
            epsilon: 1.0 / 16.0,
            delta: 1.0 / 256.0,
        };
        assert!(p.validate(3, 1, false).is_ok());
        assert!(p.validate(5, 2, false).is_err()); // 2(s+r) < dj
        let tight = ApproxParams { delta: 0.05, ..p };
        assert!(tight.validate(3, 1, true).is_err()); // delta >= 2^-j/3
        let few = ApproxParams { r_tilde: 1, s_tilde: 1, ..p };
        assert!(few.validate(3, 1, false).is_err()); // not enough bits
    }

    #[test]
    fn term_net_exact_for_dyadic_coefficients() {
        // exact surrogate + coefficients representable in the kept bits:
        // both error sources vanish on the punctured cube
        let j = 3u32;
        let g = dyadic_sis(j, 1, 4, 9);
        let params = ApproxParams {
            r: 2,
            s: 2,
            r_tilde: 3,
            s_tilde: 2,
            epsilon: 1.0 / 16.0,
            delta: 1.0 / 256.0,
        };
        let phi0 = exact_hat_net();
        for shift in [vec![-1i64], vec![0]] {
            let net = build_term_net(&g, &shift, &params, &phi0, 0.0).unwrap();
            // dyadic grid points inside the kept cells
            for cell in 0..(1i64 << j) {
                for t in 0..4 {
                    let x = ratio(cell, 1 << j) + ratio(t, 1 << (j + 3));
                    let out = net.eval_exact(&[x.clone()]).unwrap();
                    // oracle: c_{m+k} φ(r − k)
                    let (m, r) = m_r_split_exact(&[x.clone()], j).unwrap();
                    let key = vec![m[0] + shift[0]];
                    let c = g.coeffs.get(&key).copied().unwrap_or(0.0);
                    let arg = vec![&r[0] - rat_int(shift[0])];
                    let expect = rat_from_f64(c) * bspline_exact(2, &arg[0]);
                    assert_eq!(out[0], expect, "shift={shift:?} x={x}");
                }
            }
        }
    }

    #[test]
    fn term_net_budget_holds() {
        let j = 3u32;
        let g = random_sis(j, 1, 11);
        let params = ApproxParams {
            r: 2,
            s: 2,
            r_tilde: 4,
            s_tilde: 4,
            epsilon: 1.0 / 16.0,
            delta: 1.0 / 256.0,
        };
        let phi0 = exact_hat_net();
        let net = build_term_net(&g, &[0], &params, &phi0, 0.0).unwrap();
        let b = term_budget(1, &params, phi0.width(), phi0.depth());
        assert!(net.fits(b), "size {:?} vs budget {:?}", net.size(), b);
    }

    #[test]
    fn q_net_error_bound_random_coefficients() {
        let j = 3u32;
        let g = random_sis(j, 1, 13);
        let eps = 1.0 / 16.0;
        let params = ApproxParams {
            r: 2,
            s: 2,
            r_tilde: 4,
            s_tilde: 2,
            epsilon: eps,
            delta: 1.0 / 256.0,
        };
        let phi0 = exact_hat_net();
        let net = build_q_net(&g, &params, &phi0, 0.0).unwrap();
        let c_phi = g.generator.c_phi() as f64;
        let bound = 3.0 * c_phi * 1.0 * 1.0 * eps;
        // dyadic grid avoiding the gaps
        let mut worst: f64 = 0.0;
        for cell in 0..(1i64 << j) {
            for t in 0..8 {
                let x = cell as f64 / (1 << j) as f64 + t as f64 / (1 << (j + 4)) as f64;
                let diff = (net.eval(&[x]).unwrap()[0] - g.eval(&[x])).abs();
                worst = worst.max(diff);
            }
        }
        assert!(worst <= bound + 1e-9, "{worst} > {bound}");
        let b = q_net_budget(g.generator.c_phi(), 1, &params, phi0.width(), phi0.depth());
        assert!(net.fits(b), "size {:?} vs budget {:?}", net.size(), b);
    }

    #[test]
    fn q_net_exact_for_dyadic_case() {
        let j = 3u32;
        let g = dyadic_sis(j, 1, 4, 15);
        let params = ApproxParams {
            r: 2,
            s: 2,
            r_tilde: 3,
            s_tilde: 2,
            epsilon: 1.0 / 16.0,
            delta: 1.0 / 256.0,
        };
        let phi0 = exact_hat_net();
        let net = build_q_net(&g, &params, &phi0, 0.0).unwrap();
        for cell in 0..(1i64 << j) {
            for t in 0..4 {
                let x = ratio(cell, 1 << j) + ratio(t, 1 << (j + 3));
                let out = net.eval_exact(&[x.clone()]).unwrap();
                let expect = g.eval_exact(&[x.clone()]).unwrap();
                assert_eq!(out[0], expect, "x={x}");
            }
        }
    }

    #[test]
    fn uniform_net_depth_and_bound() {
        let j = 3u32;
        let g = dyadic_sis(j, 1, 4, 17);
        let eps = 1.0 / 16.0;
        let params = ApproxParams {
            r: 2,
            s: 2,
            r_tilde: 3,
            s_tilde: 2,
            epsilon: eps,
            delta: 1.0 / 64.0, // < 2^-3/3
        };
        let phi0 = exact_hat_net();
        let qnet = build_q_net(&g, &params, &phi0, 0.0).unwrap();
        let unet = build_uniform_net(&g, &params, &phi0, 0.0).unwrap();
        assert_eq!(unet.depth(), qnet.depth() + 2);
        let c_phi = g.generator.c_phi() as f64;
        let bound = 6.0 * c_phi * eps;
        // uniform grid including the gaps and the endpoint 1
        let mut worst: f64 = 0.0;
        let grid = 1 << 10;
        for i in 0..=grid {
            let x = i as f64 / grid as f64;
            let diff = (unet.eval(&[x]).unwrap()[0] - g.eval(&[x])).abs();
            worst = worst.max(diff);
        }
        assert!(worst <= bound + 1e-9, "{worst} > {bound}");
        let b = uniform_budget(g.generator.c_phi(), 1, &params, phi0.width(), phi0.depth());
        assert!(unet.fits(b), "size {:?} vs budget {:?}", unet.size(), b);
    }

    #[test]
    fn sis_json_round_trip() {
        let g = random_sis(2, 1, 23);
        let s = g.to_json();
        let back = SisFunction::from_json(&s).unwrap();
        assert_eq!(back.j, g.j);
        assert_eq!(back.coeffs, g.coeffs);
        assert_eq!(back.generator.name(), g.generator.name());
        assert!(SisFunction::from_json("{\"j\":1,\"d\":1,\"M\":1.0,\"generator\":\"mystery\",\"coeffs\":[]}").is_err());
    }

    #[test]
    fn rate_compose_branches() {
        // case: generator order dominates (α ≥ 2β/d)
        let v = rate_compose(2.0, 0.5, 1, 4, 4).unwrap();
        let expect = (16.0f64 / (2.0 * 2.0)).powf(-1.0);
        assert!((v - expect).abs() < 1e-15);
        // case: space order dominates (α < 2β/d)
        let v = rate_compose(0.5, 2.0, 1, 4, 4).unwrap();
        assert!((v - 16f64.powf(-0.5)).abs() < 1e-15);
        // boundary returns the larger branch
        let v = rate_compose(2.0, 1.0, 1, 4, 4).unwrap();
        let c1 = (16.0f64 / 4.0).powf(-2.0);
        let c2 = 16f64.powf(-2.0);
        assert!((v - c1.max(c2)).abs() < 1e-18);
        assert!(rate_compose(1.0, 1.0, 1, 1, 4).is_err());
    }

    #[test]
    fn hat_gadget_matches_spline_on_unit_interval() {
        // the teeth hat is the dilated order-2 spline on [0,1]
        let h = hat();
        for i in 0..=16 {
            let x = i as f64 / 16.0;
            assert!((h.eval_scalar(&[x]).unwrap() - crate::splines::bspline(2, 2.0 * x)).abs() < 1e-12);
        }
    }
}
