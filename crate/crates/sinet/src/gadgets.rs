//! Small reusable network constructions: soft interval indicators, the exact
//! binary product gate, min/max/mid networks, teeth functions, square and
//! product approximators, and the spline support window.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::net::{
    compose, compose_all, stack, stack_padded, AffineLayer, PadSign, ReluNet, SizeBudget,
};
use crate::scalar::{pow2, rat_from_f64, rat_int, ratio, Rat};

/// Parameters of the soft indicator f_[a,b] with ramp width δ.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorSpec {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl IndicatorSpec {
    pub fn new(a: f64, b: f64, delta: f64) -> Result<Self> {
        if !(a <= b) {
            return Err(Error::Validation(format!("indicator needs a <= b, got [{a}, {b}]")));
        }
        if !(delta > 0.0) {
            return Err(Error::Validation(format!("indicator needs delta > 0, got {delta}")));
        }
        Ok(IndicatorSpec { a, b, delta })
    }
}

/// σ(1 − σ(a/δ − x/δ)) + σ(1 − σ(x/δ − b/δ)) − 1: equals 1 on [a,b], 0 outside
/// (a−δ, b+δ), and lies in [0,1] everywhere. Width 2, depth 3.
pub fn soft_indicator(spec: &IndicatorSpec) -> ReluNet {
    let a = rat_from_f64(spec.a);
    let b = rat_from_f64(spec.b);
    let inv_d = rat_from_f64(spec.delta).recip();
    let l1 = AffineLayer::new(
        1,
        vec![vec![(0, -inv_d.clone())], vec![(0, inv_d.clone())]],
        vec![&a * &inv_d, -(&b * &inv_d)],
    );
    let l2 = AffineLayer::new(
        2,
        vec![vec![(0, rat_int(-1))], vec![(1, rat_int(-1))]],
        vec![rat_int(1), rat_int(1)],
    );
    let l3 = AffineLayer::new(2, vec![vec![(0, rat_int(1)), (1, rat_int(1))]], vec![rat_int(-1)]);
    ReluNet::from_layers(vec![l1, l2, l3])
}

/// Exact product gate for a ∈ {0,1}, b ∈ [−2,2]: 4σ(b/4 + a − 1/2) − 2σ(a).
/// Inputs ordered (a, b); width 2, depth 2.
pub fn binary_gate() -> ReluNet {
    let l1 = AffineLayer::new(
        2,
        vec![vec![(0, rat_int(1)), (1, ratio(1, 4))], vec![(0, rat_int(1))]],
        vec![ratio(-1, 2), Rat::zero()],
    );
    let l2 = AffineLayer::new(
        2,
        vec![vec![(0, rat_int(4)), (1, rat_int(-2))]],
        vec![Rat::zero()],
    );
    ReluNet::from_layers(vec![l1, l2])
}

fn pairwise_layer1() -> AffineLayer {
    // σ(x1+x2), σ(−x1−x2), σ(x1−x2), σ(x2−x1)
    AffineLayer::new(
        2,
        vec![
            vec![(0, rat_int(1)), (1, rat_int(1))],
            vec![(0, rat_int(-1)), (1, rat_int(-1))],
            vec![(0, rat_int(1)), (1, rat_int(-1))],
            vec![(0, rat_int(-1)), (1, rat_int(1))],
        ],
        vec![Rat::zero(); 4],
    )
}

/// max(x1,x2) = ½σ(x1+x2) − ½σ(−x1−x2) + ½σ(x1−x2) + ½σ(x2−x1); width 4, depth 2.
pub fn max2() -> ReluNet {
    let l2 = AffineLayer::new(
        4,
        vec![vec![(0, ratio(1, 2)), (1, ratio(-1, 2)), (2, ratio(1, 2)), (3, ratio(1, 2))]],
        vec![Rat::zero()],
    );
    ReluNet::from_layers(vec![pairwise_layer1(), l2])
}

/// min(x1,x2) = ½σ(x1+x2) − ½σ(−x1−x2) − ½σ(x1−x2) − ½σ(x2−x1); width 4, depth 2.
pub fn min2() -> ReluNet {
    let l2 = AffineLayer::new(
        4,
        vec![vec![(0, ratio(1, 2)), (1, ratio(-1, 2)), (2, ratio(-1, 2)), (3, ratio(-1, 2))]],
        vec![Rat::zero()],
    );
    ReluNet::from_layers(vec![pairwise_layer1(), l2])
}

fn extreme3(is_max: bool) -> ReluNet {
    // layer 1 on (x1,x2,x3): pairwise parts of (x1,x2) plus σ(x3), σ(−x3)
    let l1 = AffineLayer::new(
        3,
        vec![
            vec![(0, rat_int(1)), (1, rat_int(1))],
            vec![(0, rat_int(-1)), (1, rat_int(-1))],
            vec![(0, rat_int(1)), (1, rat_int(-1))],
            vec![(0, rat_int(-1)), (1, rat_int(1))],
            vec![(2, rat_int(1))],
            vec![(2, rat_int(-1))],
        ],
        vec![Rat::zero(); 6],
    );
    // m = extreme(x1,x2), z = x3 reassembled; then pairwise parts of (m, z)
    let s = if is_max { rat_int(1) } else { rat_int(-1) };
    let m_row = |sign: i64| {
        vec![
            (0usize, ratio(sign, 2)),
            (1, ratio(-sign, 2)),
            (2, &s * ratio(sign, 2)),
            (3, &s * ratio(sign, 2)),
        ]
    };
    let add_z = |mut row: Vec<(usize, Rat)>, zsign: i64| {
        row.push((4, rat_int(zsign)));
        row.push((5, rat_int(-zsign)));
        row
    };
    let l2 = AffineLayer::new(
        6,
        vec![
            add_z(m_row(1), 1),   // σ(m+z)
            add_z(m_row(-1), -1), // σ(−m−z)
            add_z(m_row(1), -1),  // σ(m−z)
            add_z(m_row(-1), 1),  // σ(z−m)
        ],
        vec![Rat::zero(); 4],
    );
    let l3 = AffineLayer::new(
        4,
        vec![vec![
            (0, ratio(1, 2)),
            (1, ratio(-1, 2)),
            (2, &s * ratio(1, 2)),
            (3, &s * ratio(1, 2)),
        ]],
        vec![Rat::zero()],
    );
    ReluNet::from_layers(vec![l1, l2, l3])
}

/// max of three reals; width 6, depth 3.
pub fn max3() -> ReluNet {
    extreme3(true)
}

/// min of three reals; width 6, depth 3.
pub fn min3() -> ReluNet {
    extreme3(false)
}

/// Middle value of three reals: σ(s) − σ(−s) − max3 − min3 with s = x1+x2+x3.
/// Width 14, depth 3, exact on all reals including ties.
pub fn mid3() -> ReluNet {
    let maxn = max3();
    let minn = min3();
    // signed carry of s = x1 + x2 + x3 at depth 3
    let sum_row = vec![(0usize, rat_int(1)), (1, rat_int(1)), (2, rat_int(1))];
    let neg_row = vec![(0usize, rat_int(-1)), (1, rat_int(-1)), (2, rat_int(-1))];
    let carry = ReluNet::from_layers(vec![
        AffineLayer::new(3, vec![sum_row, neg_row], vec![Rat::zero(), Rat::zero()]),
        AffineLayer::identity(2),
        AffineLayer::new(
            2,
            vec![vec![(0, rat_int(1)), (1, rat_int(-1))]],
            vec![Rat::zero()],
        ),
    ]);
    // fan the 3 inputs to all three branches, stack, and combine
    let fan = AffineLayer::new(
        3,
        (0..9).map(|i| vec![(i % 3, rat_int(1))]).collect(),
        vec![Rat::zero(); 9],
    );
    let stacked = stack(&[maxn, minn, carry]).expect("equal depths");
    let combine = AffineLayer::new(
        3,
        vec![vec![(0, rat_int(-1)), (1, rat_int(-1)), (2, rat_int(1))]],
        vec![Rat::zero()],
    );
    compose_all(&[&ReluNet::affine(fan), &stacked, &ReluNet::affine(combine)]).unwrap()
}

/// The unit hat T_1: 2x on [0,1/2], 2(1−x) on [1/2,1], 0 outside [0,1].
/// Realised as 2σ(x) − 4σ(x−1/2) + 2σ(x−1); width 3, depth 2.
pub fn hat() -> ReluNet {
    let l1 = AffineLayer::new(
        1,
        vec![vec![(0, rat_int(1))], vec![(0, rat_int(1))], vec![(0, rat_int(1))]],
        vec![Rat::zero(), ratio(-1, 2), rat_int(-1)],
    );
    let l2 = AffineLayer::new(
        3,
        vec![vec![(0, rat_int(2)), (1, rat_int(-4)), (2, rat_int(2))]],
        vec![Rat::zero()],
    );
    ReluNet::from_layers(vec![l1, l2])
}

/// i-fold self-composition of the hat: 2^{i−1} teeth on [0,1], width 3, depth i+1.
pub fn teeth(i: usize) -> ReluNet {
    assert!(i >= 1, "teeth index starts at 1");
    let h = hat();
    let mut net = h.clone();
    for _ in 1..i {
        net = compose(&net, &h).unwrap();
    }
    net
}

/// Piecewise-linear interpolant of x² on the grid {k 2^{−s}}: computes
/// x − Σ_{i=1..s} T_i(x)/4^i via parallel teeth towers. Sup-error on [0,1]
/// is at most 2^{−2s−2}; exact at multiples of 2^{−s}. Input domain [0,1].
pub fn square_approx(s: usize) -> Result<ReluNet> {
    if s < 1 {
        return Err(Error::Params("square_approx needs s >= 1".into()));
    }
    let mut parts = vec![crate::net::passthrough_depth(1, PadSign::Nonneg, s + 1)];
    for i in 1..=s {
        parts.push(teeth(i));
    }
    let stacked = stack_padded(&parts, PadSign::Nonneg)?;
    let mut row = vec![(0usize, rat_int(1))];
    for i in 1..=s {
        row.push((i, -pow2(-(2 * i as i32))));
    }
    let readout = AffineLayer::new(s + 1, vec![row], vec![Rat::zero()]);
    let fan = AffineLayer::new(
        1,
        (0..=s).map(|_| vec![(0usize, rat_int(1))]).collect(),
        vec![Rat::zero(); s + 1],
    );
    compose_all(&[&ReluNet::affine(fan), &stacked, &ReluNet::affine(readout)])
}

/// Product on [0, range]² by polarization of three square blocks:
/// xy = 2a²(sq((x'+y')/2) − sq(x'/2) − sq(y'/2)) with x' = x/a.
/// Sup-error at most 6·range²·2^{−2s−2}.
pub fn mul_approx(s: usize, range: f64) -> Result<ReluNet> {
    if !(range > 0.0) {
        return Err(Error::Params("mul_approx needs range > 0".into()));
    }
    let a = rat_from_f64(range);
    let inv2a = (&a * rat_int(2)).recip();
    let sq = square_approx(s)?;
    let stacked = stack(&[sq.clone(), sq.clone(), sq])?;
    let pre = AffineLayer::new(
        2,
        vec![
            vec![(0, inv2a.clone()), (1, inv2a.clone())],
            vec![(0, inv2a.clone())],
            vec![(1, inv2a)],
        ],
        vec![Rat::zero(); 3],
    );
    let two_a2 = rat_int(2) * &a * &a;
    let post = AffineLayer::new(
        3,
        vec![vec![(0, two_a2.clone()), (1, -two_a2.clone()), (2, -two_a2)]],
        vec![Rat::zero()],
    );
    compose_all(&[&ReluNet::affine(pre), &stacked, &ReluNet::affine(post)])
}

/// Number of teeth per hidden layer affordable inside the k-ary product
/// budget: 2^g ≤ 3N.
fn teeth_group(n: usize) -> usize {
    let mut g = 1usize;
    while (1usize << (g + 1)) <= 3 * n {
        g += 1;
    }
    g
}

/// Teeth count for a square block targeting error (N+1)^{−7·kl}: the
/// smallest s with 2^{2s+2} ≥ (N+1)^{7·kl}, found by exact integer search.
fn square_teeth(n: usize, kl: usize) -> usize {
    use num_bigint::BigUint;
    let target = BigUint::from(n as u64 + 1).pow(7 * kl as u32);
    let mut s = 1usize;
    while (BigUint::from(1u8) << (2 * s + 2)) < target {
        s += 1;
    }
    s
}

/// One product stage on inputs (a, b) with `npass` extra channels carried:
/// clamps both inputs to [0,1], then computes 2 sq(u1) − 2 sq(u2) − 2 sq(u3)
/// for u1 = (a'+b')/2, u2 = a'/2, u3 = b'/2 with grouped serial teeth.
///
/// Output channels: [stage value, passthrough...].
fn product_stage(n: usize, s: usize, npass: usize) -> ReluNet {
    let g = teeth_group(n);
    let tooth_count = (1usize << g) + 1;
    let in_dim = 2 + npass;

    // entry layer: clamp neurons for a and b, plus nonneg passthrough
    let mut rows: Vec<Vec<(usize, Rat)>> = vec![
        vec![(0, rat_int(1))],
        vec![(0, rat_int(1))],
        vec![(1, rat_int(1))],
        vec![(1, rat_int(1))],
    ];
    let mut bias = vec![Rat::zero(), rat_int(-1), Rat::zero(), rat_int(-1)];
    for p in 0..npass {
        rows.push(vec![(2 + p, rat_int(1))]);
        bias.push(Rat::zero());
    }
    let entry = AffineLayer::new(in_dim, rows, bias);
    let ew = entry.out_dim();

    // u_block as affine of the clamp neurons: a' = c0 − c1, b' = c2 − c3
    // u1 = (a'+b')/2, u2 = a'/2, u3 = b'/2
    let u_rows: [Vec<(usize, Rat)>; 3] = [
        vec![(0, ratio(1, 2)), (1, ratio(-1, 2)), (2, ratio(1, 2)), (3, ratio(-1, 2))],
        vec![(0, ratio(1, 2)), (1, ratio(-1, 2))],
        vec![(2, ratio(1, 2)), (3, ratio(-1, 2))],
    ];

    // Teeth layers: each block carries [tooth neurons.., u, acc]; passthrough
    // channels ride behind the three blocks.
    //
    // Tooth neurons at a layer: σ(t − m 2^{−g}) for m = 0..2^g where t is the
    // current folded value T_{done}(u). From these, T_1(t)..T_g(t) are affine.
    //
    // T_i(t) as a combination of σ(t − m/2^i′)… all teeth with i ≤ g are
    // piecewise linear with knots on the 2^{-g} grid, so expressible.
    let steps = s.div_ceil(g);
    let mut layers: Vec<AffineLayer> = vec![entry];

    // helper: coefficients of T_i on the σ(t − m/2^g) ladder
    // T_i is PL with slopes ±2^i alternating every 2^{g-i} ladder steps.
    let tooth_coeff = |i: usize| -> Vec<Rat> {
        // slope of T_i on [m/2^g, (m+1)/2^g): +2^i if ⌊m / 2^{g-i}⌋ even else −2^i
        let seg = 1usize << (g - i);
        let mut slopes: Vec<i64> = Vec::with_capacity(1 << g);
        for m in 0..(1usize << g) {
            let up = (m / seg) % 2 == 0;
            slopes.push(if up { 1 << i } else { -(1i64 << i) });
        }
        // σ-ladder coefficients: c_0 = slope_0; c_m = slope_m − slope_{m−1}; the
        // final knot at 1 returns the function to slope 0 beyond 1.
        let mut coeffs: Vec<Rat> = Vec::with_capacity((1 << g) + 1);
        coeffs.push(rat_int(slopes[0]));
        for m in 1..(1usize << g) {
            coeffs.push(rat_int(slopes[m] - slopes[m - 1]));
        }
        coeffs.push(rat_int(-slopes[(1 << g) - 1]));
        coeffs
    };

    // per-block channel offsets inside a teeth layer
    let block_w = tooth_count + 2; // teeth + u-carry + acc-carry
    let teeth_w = 3 * block_w + npass;

    for step in 0..steps {
        let prev_w = if step == 0 { ew } else { teeth_w };
        let mut rows: Vec<Vec<(usize, Rat)>> = Vec::with_capacity(teeth_w);
        let mut bias: Vec<Rat> = Vec::with_capacity(teeth_w);
        for blk in 0..3 {
            // the folded value t entering this layer
            let t_row: Vec<(usize, Rat)> = if step == 0 {
                u_rows[blk].clone()
            } else {
                // T_g of previous layer's teeth: affine over the previous
                // block's tooth neurons
                let base = blk * block_w;
                tooth_coeff(g)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(m, c)| (base + m, c))
                    .collect()
            };
            // tooth neurons σ(t − m/2^g)
            for m in 0..tooth_count {
                rows.push(t_row.clone());
                bias.push(-pow2(-(g as i32)) * rat_int(m as i64));
            }
            // u carry (u ∈ [0,1] so nonneg)
            if step == 0 {
                rows.push(u_rows[blk].clone());
                bias.push(Rat::zero());
            } else {
                rows.push(vec![(blk * block_w + tooth_count, rat_int(1))]);
                bias.push(Rat::zero());
            }
            // acc carry: previous acc plus the teeth completed at the previous
            // layer (T_1..T_g of the previous fold, scaled by their 4^{-i})
            if step == 0 {
                rows.push(vec![]);
                bias.push(Rat::zero());
            } else {
                let base = blk * block_w;
                let mut row: std::collections::BTreeMap<usize, Rat> = Default::default();
                row.insert(base + tooth_count + 1, rat_int(1));
                let done_before = g * (step - 1);
                for i in 1..=g {
                    let scale = pow2(-(2 * (done_before + i) as i32));
                    for (m, c) in tooth_coeff(i).into_iter().enumerate() {
                        if !c.is_zero() {
                            let slot = row.entry(base + m).or_insert_with(Rat::zero);
                            *slot += c * &scale;
                        }
                    }
                }
                rows.push(row.into_iter().filter(|(_, c)| !c.is_zero()).collect());
                bias.push(Rat::zero());
            }
        }
        // passthrough channels
        let pbase = if step == 0 { 4 } else { 3 * block_w };
        for p in 0..npass {
            rows.push(vec![(pbase + p, rat_int(1))]);
            bias.push(Rat::zero());
        }
        layers.push(AffineLayer::new(prev_w, rows, bias));
    }

    // collapse layer: one neuron per block holding sq(u_b) = u − acc − (last
    // teeth), identical fold sequences across blocks so equal inputs give
    // bit-identical values and the polarization cancels exactly.
    {
        let done_before = g * (steps - 1);
        let last_teeth = s - done_before;
        let mut rows: Vec<Vec<(usize, Rat)>> = Vec::new();
        let mut bias: Vec<Rat> = Vec::new();
        for blk in 0..3 {
            let base = blk * block_w;
            let mut row: std::collections::BTreeMap<usize, Rat> = Default::default();
            row.insert(base + tooth_count, rat_int(1));
            row.insert(base + tooth_count + 1, rat_int(-1));
            for i in 1..=last_teeth {
                let scale = pow2(-(2 * (done_before + i) as i32));
                for (m, c) in tooth_coeff(i).into_iter().enumerate() {
                    if !c.is_zero() {
                        let slot = row.entry(base + m).or_insert_with(Rat::zero);
                        *slot -= c * &scale;
                    }
                }
            }
            rows.push(row.into_iter().filter(|(_, c)| !c.is_zero()).collect());
            bias.push(Rat::zero());
        }
        for p in 0..npass {
            rows.push(vec![(3 * block_w + p, rat_int(1))]);
            bias.push(Rat::zero());
        }
        layers.push(AffineLayer::new(teeth_w, rows, bias));
    }
    // exit affine: stage value = 2 sq0 − 2 sq1 − 2 sq2
    let mut out_rows: Vec<Vec<(usize, Rat)>> =
        vec![vec![(0, rat_int(2)), (1, rat_int(-2)), (2, rat_int(-2))]];
    let mut out_bias = vec![Rat::zero()];
    for p in 0..npass {
        out_rows.push(vec![(3 + p, rat_int(1))]);
        out_bias.push(Rat::zero());
    }
    layers.push(AffineLayer::new(3 + npass, out_rows, out_bias));
    ReluNet::from_layers(layers)
}

/// k-ary product approximator Φ_k on [0,1]^k, built inductively as
/// Φ_2(Φ_{k−1}(x_1..x_{k−1}), x_k). Width ≤ 9N+k+7, depth ≤ 7k(k−1)L,
/// sup-error ≤ 9(k−1)(N+1)^{−7kL}; any zero coordinate forces exact 0.
pub fn product_approx(k: usize, n: usize, l: usize) -> Result<ReluNet> {
    if k < 2 {
        return Err(Error::Params("product_approx needs k >= 2".into()));
    }
    if n < 1 || l < 1 {
        return Err(Error::Params("product_approx needs N, L >= 1".into()));
    }
    let s = square_teeth(n, k * l);
    // stage for consuming x_{m+1}: remaining passthroughs x_{m+2}..x_k
    let mut net: Option<ReluNet> = None;
    for m in 1..k {
        let npass = k - m - 1;
        let stage = product_stage(n, s, npass);
        net = Some(match net {
            None => stage,
            Some(prev) => {
                // prev outputs [value, x_{m+1}, ..]; stage wants (a, b, pass..)
                compose(&prev, &stage)?
            }
        });
    }
    net.ok_or_else(|| Error::Params("empty product".into()))
}

/// Budget quoted for [`product_approx`].
pub fn product_budget(k: usize, n: usize, l: usize) -> SizeBudget {
    SizeBudget::new(9 * n + k + 7, 7 * k * (k - 1) * l)
}

/// Sup-error bound quoted for [`product_approx`].
pub fn product_error_bound(k: usize, n: usize, l: usize) -> f64 {
    9.0 * (k as f64 - 1.0) * ((n + 1) as f64).powi(-((7 * k * l) as i32))
}

/// Support window χ for the spline clamp: 1 on [0,k], 0 outside [−1,k+1],
/// linear ramps between; width 2, depth 3.
pub fn support_window(k: usize) -> Result<ReluNet> {
    if k < 1 {
        return Err(Error::Params("support_window needs k >= 1".into()));
    }
    let spec = IndicatorSpec::new(0.0, k as f64, 1.0)?;
    Ok(soft_indicator(&spec))
}
