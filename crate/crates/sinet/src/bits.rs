//! Bit-extraction networks: leading-bit extraction, weighted bit sums with
//! running carries, and selection of an indexed bit.
//!
//! All three constructions are exact on the punctured domain (or on
//! terminating expansions for the selector); behaviour inside the δ-gaps is
//! unspecified and never tested. Weights are dyadic, so rational-mode
//! evaluation is equality-grade.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::net::{AffineLayer, ReluNet, SizeBudget};
use crate::scalar::{bits_value, pow2, rat_from_f64, rat_int, rat_to_f64, Rat};

/// Exact binary-expansion input x = Bin 0.b_1 b_2 … b_n ∈ [0,1).
///
/// The stored list is finite, so the expansion terminates; dyadic rationals
/// are always represented by their terminating form (no trailing ones).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicPoint {
    bits: Vec<u8>,
}

impl DyadicPoint {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|b| *b > 1) {
            return Err(Error::Validation("dyadic bits must be 0 or 1".into()));
        }
        Ok(DyadicPoint { bits })
    }

    pub fn zero() -> Self {
        DyadicPoint { bits: vec![] }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// The i-th bit (1-indexed); zero beyond the stored expansion.
    pub fn bit(&self, i: usize) -> u8 {
        self.bits.get(i - 1).copied().unwrap_or(0)
    }

    pub fn value(&self) -> Rat {
        bits_value(&self.bits)
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.value())
    }

    /// Leading r bits and the remaining fraction Bin 0.b_{r+1}… .
    pub fn split(&self, r: usize) -> (Vec<u8>, Rat) {
        let head: Vec<u8> = (1..=r).map(|i| self.bit(i)).collect();
        let tail = if self.bits.len() > r { bits_value(&self.bits[r..]) } else { Rat::zero() };
        (head, tail)
    }
}

/// The punctured cube Q(j,δ,d): the unit cube with the open slab
/// (k 2^{−j} − δ, k 2^{−j}) removed left of each interior dyadic hyperplane.
#[derive(Debug, Clone, Copy)]
pub struct QDomain {
    pub j: u32,
    pub delta: f64,
    pub d: usize,
}

impl QDomain {
    pub fn new(j: u32, delta: f64, d: usize) -> Result<Self> {
        if j < 1 || d < 1 {
            return Err(Error::Params("QDomain needs j >= 1 and d >= 1".into()));
        }
        if !(delta > 0.0 && delta < 2f64.powi(-(j as i32))) {
            return Err(Error::Params(format!("QDomain needs 0 < delta < 2^-{j}, got {delta}")));
        }
        Ok(QDomain { j, delta, d })
    }

    pub fn contains_1d(&self, x: f64) -> bool {
        if !(0.0..1.0).contains(&x) {
            return false;
        }
        let cell = 2f64.powi(-(self.j as i32));
        for k in 1..(1u64 << self.j) {
            let edge = k as f64 * cell;
            if x > edge - self.delta && x < edge {
                return false;
            }
        }
        true
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.d && x.iter().all(|&v| self.contains_1d(v))
    }

    /// Measure of the removed part of [0,1]^d: 1 − (1 − (2^j − 1)δ)^d.
    pub fn removed_measure(&self) -> f64 {
        let kept = 1.0 - ((1u64 << self.j) - 1) as f64 * self.delta;
        1.0 - kept.powi(self.d as i32)
    }
}

/// Budget quoted for [`extract_bits`].
pub fn extract_bits_budget(r: u32) -> SizeBudget {
    SizeBudget::new((1 << (r + 1)) + 1, 3)
}

/// Budget quoted for [`split_weighted_bits`].
pub fn split_weighted_bits_budget(j: u32, r: u32) -> SizeBudget {
    SizeBudget::new((1 << (r + 1)) + 3, 2 * j.div_ceil(r) as usize + 1)
}

/// Budget quoted for [`select_bit`].
pub fn select_bit_budget(r: u32, cap: u32) -> SizeBudget {
    SizeBudget::new((1 << (r + 1)) + 3, 4 * cap.div_ceil(r) as usize + 1)
}

/// Interval bank shared by the extraction stages: 2^r soft indicators over
/// the dyadic intervals of generation r, the last interval closing at 1.
///
/// Layer 1 emits the two pre-activations of every indicator; layer 2 the two
/// saturation neurons. The caller appends carries and the affine readout.
struct IndicatorBank {
    r: u32,
    delta: Rat,
}

impl IndicatorBank {
    fn intervals(&self) -> Vec<(Rat, Rat)> {
        let n = 1u64 << self.r;
        let cell = pow2(-(self.r as i32));
        (0..n)
            .map(|k| {
                let a = &cell * rat_int(k as i64);
                let b = if k + 1 == n {
                    rat_int(1)
                } else {
                    &cell * rat_int(k as i64 + 1) - &self.delta
                };
                (a, b)
            })
            .collect()
    }

    /// Pre-activation rows σ((a−x)/δ), σ((x−b)/δ) for input channel `x_col`.
    fn layer1_rows(&self, x_col: usize) -> (Vec<Vec<(usize, Rat)>>, Vec<Rat>) {
        let inv_d = self.delta.clone().recip();
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        for (a, b) in self.intervals() {
            rows.push(vec![(x_col, -inv_d.clone())]);
            bias.push(&a * &inv_d);
            rows.push(vec![(x_col, inv_d.clone())]);
            bias.push(-(&b * &inv_d));
        }
        (rows, bias)
    }

    /// Saturation rows σ(1 − u), σ(1 − v) over the layer-1 block at `base`.
    fn layer2_rows(&self, base: usize) -> (Vec<Vec<(usize, Rat)>>, Vec<Rat>) {
        let n = 1usize << self.r;
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        for k in 0..(2 * n) {
            rows.push(vec![(base + k, rat_int(-1))]);
            bias.push(rat_int(1));
        }
        (rows, bias)
    }

    /// Readout of bit i (1-indexed, MSB first) over the layer-2 block: the sum
    /// of (p_k + q_k − 1) over intervals whose index has bit i set.
    fn bit_readout(&self, base: usize, i: u32) -> (Vec<(usize, Rat)>, Rat) {
        let n = 1u64 << self.r;
        let mut row = Vec::new();
        let mut bias = Rat::zero();
        for k in 0..n {
            if (k >> (self.r - i)) & 1 == 1 {
                row.push((base + 2 * k as usize, rat_int(1)));
                row.push((base + 2 * k as usize + 1, rat_int(1)));
                bias -= rat_int(1);
            }
        }
        (row, bias)
    }
}

fn check_gap(j: u32, delta: f64) -> Result<()> {
    if j < 1 {
        return Err(Error::Params("need j >= 1".into()));
    }
    if !(delta > 0.0 && delta < 2f64.powi(-(j as i32))) {
        return Err(Error::Params(format!("need 0 < delta < 2^-{j}, got {delta}")));
    }
    Ok(())
}

/// Leading-bit extractor: on Q(j,δ,1) maps x = Bin 0.x_1x_2… to
/// (x_1, …, x_r, Bin 0.x_{r+1}x_{r+2}…). Width 2^{r+1}+1, depth 3; one
/// neuron per hidden layer remembers the input.
pub fn extract_bits(j: u32, delta: f64, r: u32) -> Result<ReluNet> {
    check_gap(j, delta)?;
    if r < 1 || r > j {
        return Err(Error::Params(format!("extract_bits needs 1 <= r <= j, got r={r}, j={j}")));
    }
    let bank = IndicatorBank { r, delta: rat_from_f64(delta) };
    let n = 1usize << r;

    let (mut rows1, mut bias1) = bank.layer1_rows(0);
    rows1.push(vec![(0, rat_int(1))]); // x carried in one nonneg neuron
    bias1.push(Rat::zero());
    let l1 = AffineLayer::new(1, rows1, bias1);

    let (mut rows2, mut bias2) = bank.layer2_rows(0);
    rows2.push(vec![(2 * n, rat_int(1))]);
    bias2.push(Rat::zero());
    let l2 = AffineLayer::new(2 * n + 1, rows2, bias2);

    let mut rows3 = Vec::new();
    let mut bias3 = Vec::new();
    for i in 1..=r {
        let (row, b) = bank.bit_readout(0, i);
        rows3.push(row);
        bias3.push(b);
    }
    // tail = 2^r x − Σ_k k (p_k + q_k − 1)
    let mut tail_row = vec![(2 * n, pow2(r as i32))];
    let mut tail_bias = Rat::zero();
    for k in 1..n {
        tail_row.push((2 * k, rat_int(-(k as i64))));
        tail_row.push((2 * k + 1, rat_int(-(k as i64))));
        tail_bias += rat_int(k as i64);
    }
    tail_row.sort_by_key(|e| e.0);
    rows3.push(tail_row);
    bias3.push(tail_bias);
    let l3 = AffineLayer::new(2 * n + 1, rows3, bias3);

    Ok(ReluNet::from_layers(vec![l1, l2, l3]))
}

/// Weighted bit splitter: on Q(j,δ,1) maps x to
/// (Σ_{i≤k} 2^{j−i}x_i, Σ_{k<i≤j} 2^{j−i}x_i, Bin 0.x_{j+1}…).
/// Width 2^{r+1}+3, depth 2⌈j/r⌉+1: r bits per stage, the two running sums
/// carried in two extra neurons.
pub fn split_weighted_bits(j: u32, delta: f64, r: u32, k: u32) -> Result<ReluNet> {
    check_gap(j, delta)?;
    if r < 1 {
        return Err(Error::Params("split_weighted_bits needs r >= 1".into()));
    }
    if k > j {
        return Err(Error::Params(format!("split point k={k} exceeds j={j}")));
    }
    let stages = j.div_ceil(r);
    // entry: x -> (tail, s1, s2)
    let entry = AffineLayer::new(
        1,
        vec![vec![(0, rat_int(1))], vec![], vec![]],
        vec![Rat::zero(), Rat::zero(), Rat::zero()],
    );
    let mut net = ReluNet::affine(entry);
    for t in 0..stages {
        let done = t * r;
        let rt = r.min(j - done);
        // gaps scale by 2^{done} once `done` bits are consumed
        let delta_t = rat_from_f64(delta) * pow2(done as i32);
        let bank = IndicatorBank { r: rt, delta: delta_t };
        let n = 1usize << rt;

        let (mut rows1, mut bias1) = bank.layer1_rows(0);
        for c in 0..3 {
            rows1.push(vec![(c, rat_int(1))]);
            bias1.push(Rat::zero());
        }
        let l1 = AffineLayer::new(3, rows1, bias1);

        let (mut rows2, mut bias2) = bank.layer2_rows(0);
        for c in 0..3 {
            rows2.push(vec![(2 * n + c, rat_int(1))]);
            bias2.push(Rat::zero());
        }
        let l2 = AffineLayer::new(2 * n + 3, rows2, bias2);

        // readout: (tail', s1', s2')
        let mut tail_row = vec![(2 * n, pow2(rt as i32))];
        let mut tail_bias = Rat::zero();
        for kk in 1..n {
            tail_row.push((2 * kk, rat_int(-(kk as i64))));
            tail_row.push((2 * kk + 1, rat_int(-(kk as i64))));
            tail_bias += rat_int(kk as i64);
        }
        tail_row.sort_by_key(|e| e.0);

        let mut s1_row = vec![(2 * n + 1, rat_int(1))];
        let mut s1_bias = Rat::zero();
        let mut s2_row = vec![(2 * n + 2, rat_int(1))];
        let mut s2_bias = Rat::zero();
        for i in 1..=rt {
            let gi = done + i; // global bit index
            let weight = pow2((j - gi) as i32);
            let (row, b) = bank.bit_readout(0, i);
            let (target_row, target_bias) = if gi <= k {
                (&mut s1_row, &mut s1_bias)
            } else {
                (&mut s2_row, &mut s2_bias)
            };
            for (c, w) in row {
                target_row.push((c, w * &weight));
            }
            *target_bias += b * &weight;
        }
        s1_row.sort_by_key(|e| e.0);
        s2_row.sort_by_key(|e| e.0);
        let l3 = AffineLayer::new(
            2 * n + 3,
            vec![tail_row, merge_dups(s1_row), merge_dups(s2_row)],
            vec![tail_bias, s1_bias, s2_bias],
        );

        let stage = ReluNet::from_layers(vec![l1, l2, l3]);
        net = crate::net::compose(&net, &stage)?;
    }
    // final order per the contract: (s1, s2, tail)
    let reorder = AffineLayer::new(
        3,
        vec![vec![(1, rat_int(1))], vec![(2, rat_int(1))], vec![(0, rat_int(1))]],
        vec![Rat::zero(); 3],
    );
    crate::net::with_output_affine(&net, reorder)
}

fn merge_dups(row: Vec<(usize, Rat)>) -> Vec<(usize, Rat)> {
    let mut out: Vec<(usize, Rat)> = Vec::with_capacity(row.len());
    for (c, w) in row {
        match out.last_mut() {
            Some((lc, lw)) if *lc == c => *lw += w,
            _ => out.push((c, w)),
        }
    }
    out.into_iter().filter(|(_, w)| !w.is_zero()).collect()
}

/// Indexed bit selector: for x = Bin 0.x_1…x_K (terminating K-bit expansion)
/// and integer k ∈ [1, K], returns x_k exactly. Inputs (x, k).
/// Width 2^{r+1}+3, depth 4⌈K/r⌉+1.
///
/// Uses δ_{ki} = σ(k−i+1) + σ(k−i−1) − 2σ(k−i) and the Boolean product
/// t₁t₂ = σ(t₁ + t₂ − 1).
pub fn select_bit(r: u32, cap: u32) -> Result<ReluNet> {
    if r < 1 || cap < r {
        return Err(Error::Params(format!("select_bit needs 1 <= r <= K, got r={r}, K={cap}")));
    }
    let stages = cap.div_ceil(r);
    // entry: (x, k) -> (tail, k, acc)
    let entry = AffineLayer::new(
        2,
        vec![vec![(0, rat_int(1))], vec![(1, rat_int(1))], vec![]],
        vec![Rat::zero(); 3],
    );
    let mut net = ReluNet::affine(entry);
    for t in 0..stages {
        let done = t * r;
        let rt = r.min(cap - done);
        let kt = cap - done; // remaining expansion length
        let bank = IndicatorBank { r: rt, delta: pow2(-(kt as i32) - 1) };
        let n = 1usize << rt;

        // L1/L2: indicators on the tail, carries (tail, k, acc)
        let (mut rows1, mut bias1) = bank.layer1_rows(0);
        for c in 0..3 {
            rows1.push(vec![(c, rat_int(1))]);
            bias1.push(Rat::zero());
        }
        let l1 = AffineLayer::new(3, rows1, bias1);
        let (mut rows2, mut bias2) = bank.layer2_rows(0);
        for c in 0..3 {
            rows2.push(vec![(2 * n + c, rat_int(1))]);
            bias2.push(Rat::zero());
        }
        let l2 = AffineLayer::new(2 * n + 3, rows2, bias2);

        // L3: per extracted bit: σ(k−gi+1), σ(k−gi−1), σ(k−gi), σ(bit_gi);
        // then carries (tail', k, acc).
        let k_col = 2 * n + 1;
        let acc_col = 2 * n + 2;
        let mut rows3: Vec<Vec<(usize, Rat)>> = Vec::new();
        let mut bias3: Vec<Rat> = Vec::new();
        for i in 1..=rt {
            let gi = (done + i) as i64;
            for off in [1i64, -1, 0] {
                rows3.push(vec![(k_col, rat_int(1))]);
                bias3.push(rat_int(-gi + off));
            }
            let (row, b) = bank.bit_readout(0, i);
            rows3.push(row);
            bias3.push(b);
        }
        let mut tail_row = vec![(2 * n, pow2(rt as i32))];
        let mut tail_bias = Rat::zero();
        for kk in 1..n {
            tail_row.push((2 * kk, rat_int(-(kk as i64))));
            tail_row.push((2 * kk + 1, rat_int(-(kk as i64))));
            tail_bias += rat_int(kk as i64);
        }
        tail_row.sort_by_key(|e| e.0);
        rows3.push(tail_row);
        bias3.push(tail_bias);
        rows3.push(vec![(k_col, rat_int(1))]);
        bias3.push(Rat::zero());
        rows3.push(vec![(acc_col, rat_int(1))]);
        bias3.push(Rat::zero());
        let l3 = AffineLayer::new(2 * n + 3, rows3, bias3);

        // L4: gates σ(δ_{k,gi} + bit − 1) + carries (tail, k, acc)
        let base_carry = 4 * rt as usize;
        let mut rows4: Vec<Vec<(usize, Rat)>> = Vec::new();
        let mut bias4: Vec<Rat> = Vec::new();
        for i in 0..rt as usize {
            rows4.push(vec![
                (4 * i, rat_int(1)),
                (4 * i + 1, rat_int(1)),
                (4 * i + 2, rat_int(-2)),
                (4 * i + 3, rat_int(1)),
            ]);
            bias4.push(rat_int(-1));
        }
        for c in 0..3 {
            rows4.push(vec![(base_carry + c, rat_int(1))]);
            bias4.push(Rat::zero());
        }
        let l4 = AffineLayer::new(4 * rt as usize + 3, rows4, bias4);

        // readout: (tail, k, acc + Σ gates)
        let gate_cols = rt as usize;
        let mut acc_row = vec![(gate_cols + 2, rat_int(1))];
        for i in 0..gate_cols {
            acc_row.push((i, rat_int(1)));
        }
        acc_row.sort_by_key(|e| e.0);
        let l5 = AffineLayer::new(
            gate_cols + 3,
            vec![vec![(gate_cols, rat_int(1))], vec![(gate_cols + 1, rat_int(1))], acc_row],
            vec![Rat::zero(); 3],
        );

        let stage = ReluNet::from_layers(vec![l1, l2, l3, l4, l5]);
        net = crate::net::compose(&net, &stage)?;
    }
    let out = AffineLayer::new(3, vec![vec![(2, rat_int(1))]], vec![Rat::zero()]);
    crate::net::with_output_affine(&net, out)
}
