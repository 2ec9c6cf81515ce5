//! Cardinal B-splines and their tensor products, the spline approximation
//! network (product gadgets + support clamp), and the quasi-interpolation
//! operator onto dilated spline spaces.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::gadgets::{min2, product_approx, support_window};
use crate::net::{
    compose, compose_all, stack, stack_padded, AffineLayer, PadSign, ReluNet, SizeBudget,
};
use crate::scalar::{rat_int, ratio, Rat};

/// Order and dimension of a tensor B-spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsplineSpec {
    pub k: usize,
    pub d: usize,
}

impl BsplineSpec {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k < 1 || d < 1 {
            return Err(Error::Params("BsplineSpec needs k >= 1 and d >= 1".into()));
        }
        Ok(BsplineSpec { k, d })
    }
}

fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let mut acc = 1u64;
    for i in 0..r.min(n - r) {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product::<u64>().max(1)
}

/// Univariate cardinal B-spline of order k via the power form
/// N_k(x) = 1/(k−1)! Σ_l (−1)^l C(k,l) σ(x−l)^{k−1}; N_1 is the unit
/// indicator on [0,1].
pub fn bspline(k: usize, x: f64) -> f64 {
    assert!(k >= 1, "spline order starts at 1");
    if k == 1 {
        return if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
    }
    if !(0.0..=(k as f64)).contains(&x) {
        return 0.0;
    }
    let mut acc = 0.0;
    for l in 0..=k {
        let t = (x - l as f64).max(0.0);
        let term = binomial(k, l) as f64 * t.powi(k as i32 - 1);
        if l % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc / factorial(k - 1) as f64
}

/// Exact-rational evaluation of N_k; the k = 1 base keeps the closed
/// interval convention of [`bspline`].
pub fn bspline_exact(k: usize, x: &Rat) -> Rat {
    assert!(k >= 1);
    if k == 1 {
        return if !x.is_negative() && *x <= rat_int(1) { rat_int(1) } else { Rat::zero() };
    }
    if x.is_negative() || *x >= rat_int(k as i64) {
        return Rat::zero();
    }
    let mut acc = Rat::zero();
    for l in 0..=k {
        let t = x - rat_int(l as i64);
        if t.is_negative() {
            continue;
        }
        let mut p = rat_int(1);
        for _ in 0..k - 1 {
            p *= &t;
        }
        let term = rat_int(binomial(k, l) as i64) * p;
        if l % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc / rat_int(factorial(k - 1) as i64)
}

/// Convolution-recurrence evaluation, the independent oracle:
/// N_k(x) = (x N_{k−1}(x) + (k−x) N_{k−1}(x−1)) / (k−1), with the
/// half-open indicator base so the recurrence telescopes.
pub fn bspline_conv(k: usize, x: f64) -> f64 {
    fn rec(k: usize, x: f64) -> f64 {
        if k == 1 {
            return if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
        }
        let km1 = (k - 1) as f64;
        (x * rec(k - 1, x) + (k as f64 - x) * rec(k - 1, x - 1.0)) / km1
    }
    if k == 1 {
        return if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
    }
    rec(k, x)
}

/// Tensor product B-spline.
pub fn bspline_d(k: usize, d: usize, x: &[f64]) -> f64 {
    assert_eq!(x.len(), d);
    x.iter().map(|xi| bspline(k, *xi)).product()
}

pub fn bspline_d_exact(k: usize, d: usize, x: &[Rat]) -> Rat {
    assert_eq!(x.len(), d);
    let mut acc = rat_int(1);
    for xi in x {
        acc *= bspline_exact(k, xi);
        if acc.is_zero() {
            return acc;
        }
    }
    acc
}

/// Sup-norm of N_k: 1 for k ≤ 2, otherwise the central value N_k(k/2)
/// (cardinal B-splines are symmetric about k/2 and unimodal).
pub fn bspline_sup_norm(k: usize) -> f64 {
    if k <= 2 {
        1.0
    } else {
        bspline(k, k as f64 / 2.0)
    }
}

/// Budget quoted for [`bspline_net`].
pub fn bspline_net_budget(k: usize, d: usize, n: usize, l: usize) -> SizeBudget {
    SizeBudget::new(d * (k + 1) * (9 * (n + 1) + k), 7 * (k * k + d * d) * l)
}

/// Sup-error bound quoted for [`bspline_net`].
pub fn bspline_net_error_bound(k: usize, d: usize, n: usize, l: usize) -> f64 {
    let a = 9.0 * d as f64 * (2.0 * k as f64 + 2.0).powi(k as i32) / factorial(k - 1) as f64
        * ((n + 1) as f64).powi(-((7 * (k - 1) * l) as i32));
    let b = 9.0 * (d as f64 - 1.0) * ((n + 1) as f64).powi(-((7 * d * l) as i32));
    a + b
}

/// One-dimensional spline block: min(σ(φ̃), χ) where φ̃ is the alternating
/// sum of (k−1)-fold products of σ(x−l), rescaled to the ramp range [0, k+1],
/// and χ is the support window. Output lies in [0,1] and vanishes exactly
/// outside [0, k+1].
fn bspline_block(k: usize, n: usize, l: usize) -> Result<ReluNet> {
    let a = k as i64 + 1; // ramp range
    let prod = product_approx(k - 1, n, l)?;

    // pre layer: u_l = σ((x−l)/(k+1)) for l = 0..k
    let inv_a = ratio(1, a);
    let pre_rows: Vec<Vec<(usize, Rat)>> = (0..=k).map(|_| vec![(0, inv_a.clone())]).collect();
    let pre_bias: Vec<Rat> = (0..=k).map(|li| -ratio(li as i64, a)).collect();
    let pre = ReluNet::from_layers(vec![AffineLayer::new(1, pre_rows, pre_bias)]);

    // fan each u_l into k−1 product inputs, then stack the k+1 product blocks
    let fan_rows: Vec<Vec<(usize, Rat)>> = (0..=k)
        .flat_map(|li| std::iter::repeat(vec![(li, rat_int(1))]).take(k - 1))
        .collect();
    let fan = AffineLayer::new(k + 1, fan_rows, vec![Rat::zero(); (k + 1) * (k - 1)]);
    let blocks: Vec<ReluNet> = (0..=k).map(|_| prod.clone()).collect();
    let stacked = stack(&blocks)?;

    // alternating readout with the (k+1)^{k−1} range unscale
    let mut scale = rat_int(1);
    for _ in 0..k - 1 {
        scale *= rat_int(a);
    }
    scale /= rat_int(factorial(k - 1) as i64);
    let row: Vec<(usize, Rat)> = (0..=k)
        .map(|li| {
            let c = rat_int(binomial(k, li) as i64) * &scale;
            (li, if li % 2 == 0 { c } else { -c })
        })
        .collect();
    let readout = AffineLayer::new(k + 1, vec![row], vec![Rat::zero()]);
    let tilde = compose_all(&[&pre, &ReluNet::affine(fan), &stacked, &ReluNet::affine(readout)])?;

    // clamp: min(σ(φ̃), χ), both branches fed the same input
    let chi = support_window(k)?;
    assert!(tilde.depth() >= chi.depth(), "product pipeline is the deep branch");
    let pair = stack_padded(&[tilde, chi], PadSign::Nonneg)?;
    let fan = AffineLayer::new(
        1,
        vec![vec![(0, rat_int(1))], vec![(0, rat_int(1))]],
        vec![Rat::zero(), Rat::zero()],
    );
    let relu_pair = ReluNet::from_layers(vec![AffineLayer::identity(2), AffineLayer::identity(2)]);
    compose_all(&[&ReluNet::affine(fan), &pair, &relu_pair, &min2()])
}

/// Spline approximation network for the tensor B-spline N_k^d, k ≥ 3:
/// per-coordinate clamped blocks combined through the product approximator.
/// Width ≤ d(k+1)(9(N+1)+k), depth ≤ 7(k²+d²)L, and the output vanishes
/// exactly outside [0, k+1]^d.
pub fn bspline_net(k: usize, d: usize, n: usize, l: usize) -> Result<ReluNet> {
    if k < 3 {
        return Err(Error::Params("bspline_net needs k >= 3".into()));
    }
    if d < 1 || n < 1 || l < 1 {
        return Err(Error::Params("bspline_net needs d, N, L >= 1".into()));
    }
    let block = bspline_block(k, n, l)?;
    if d == 1 {
        return Ok(block);
    }
    let blocks: Vec<ReluNet> = (0..d).map(|_| block.clone()).collect();
    let front = stack(&blocks)?;
    let tensor = product_approx(d, n, l)?;
    compose(&front, &tensor)
}

// ---------------------------------------------------------------------------
// Quasi-interpolation
// ---------------------------------------------------------------------------

/// Solves for point-evaluation quasi-interpolation weights at the integer
/// nodes 0..k−1: the functional c_n(f) = Σ_i w_i f(n+i) reproduces every
/// polynomial of degree ≤ k−1 in the spline synthesis.
pub fn quasi_weights(k: usize) -> Result<Vec<f64>> {
    if k < 1 {
        return Err(Error::Params("quasi_weights needs k >= 1".into()));
    }
    // equations: for t, q in 0..k: Σ_i w_i Σ_n (n+i)^t N_k(x_q − n) = x_q^t
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for t in 0..k {
        for q in 0..k {
            let xq = (q as f64 + 0.5) / k as f64;
            let mut row = vec![0.0; k];
            for (i, slot) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for n in -(k as i64 - 1)..=0 {
                    let base = n as f64 + i as f64;
                    let p = if t == 0 { 1.0 } else { base.powi(t as i32) };
                    acc += p * bspline(k, xq - n as f64);
                }
                *slot = acc;
            }
            rows.push(row);
            rhs.push(if t == 0 { 1.0 } else { xq.powi(t as i32) });
        }
    }
    // normal equations of the consistent overdetermined system
    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for (row, b) in rows.iter().zip(&rhs) {
        for i in 0..k {
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * b;
        }
    }
    let w = solve_dense(&mut ata, &mut atb)?;
    let mut residual: f64 = 0.0;
    for (row, b) in rows.iter().zip(&rhs) {
        let v: f64 = row.iter().zip(&w).map(|(r, wi)| r * wi).sum();
        residual = residual.max((v - b).abs());
    }
    if residual > 1e-9 {
        return Err(Error::Params(format!("quasi-interpolation weights residual {residual}")));
    }
    Ok(w)
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs())).unwrap();
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Params("singular quasi-interpolation system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = b[col];
        for c in col + 1..n {
            v -= a[col][c] * x[c];
        }
        x[col] = v / a[col][col];
    }
    Ok(x)
}

/// Quasi-interpolation of a scalar oracle onto the dilated spline space at
/// level j: c_n(f) = Σ_i w_i f(2^{−j}(n + τ_i)) with τ_i = i, tensorised per
/// coordinate. The oracle must accept arguments slightly outside [0,1]^d.
pub fn quasi_interpolate(
    f: &dyn Fn(&[f64]) -> f64,
    j: u32,
    spec: BsplineSpec,
) -> Result<crate::sis::SisFunction> {
    let w = quasi_weights(spec.k)?;
    let k = spec.k;
    let d = spec.d;
    let h = 2f64.powi(-(j as i32));
    let lo = -(k as i64) + 1;
    let hi = (1i64 << j) - 1;
    let width = (hi - lo + 1) as usize;

    let mut coeffs = std::collections::BTreeMap::new();
    let mut idx = vec![0usize; d];
    loop {
        let n: Vec<i64> = idx.iter().map(|i| lo + *i as i64).collect();
        // tensor sum over node offsets
        let mut c = 0.0;
        let mut off = vec![0usize; d];
        'inner: loop {
            let mut wprod = 1.0;
            let mut arg = vec![0.0; d];
            for m in 0..d {
                wprod *= w[off[m]];
                arg[m] = h * (n[m] as f64 + off[m] as f64);
            }
            if wprod != 0.0 {
                c += wprod * f(&arg);
            }
            for m in 0..d {
                off[m] += 1;
                if off[m] < k {
                    continue 'inner;
                }
                off[m] = 0;
            }
            break;
        }
        if c != 0.0 {
            coeffs.insert(n, c);
        }
        let mut done = true;
        for m in 0..d {
            idx[m] += 1;
            if idx[m] < width {
                done = false;
                break;
            }
            idx[m] = 0;
        }
        if done {
            break;
        }
    }

    let bound = coeffs.values().fold(0.0f64, |acc, c| acc.max(c.abs())) + 1.0;
    crate::sis::SisFunction::new(j, crate::sis::Generator::bspline(k, d)?, coeffs, bound)
}
