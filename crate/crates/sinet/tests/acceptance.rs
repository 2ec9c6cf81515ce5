//! Acceptance suite: one test per criterion, each printing a pass line.
//! Every tolerance and threshold is pinned here; rational-mode checks use
//! exact equality, float-mode bound checks use the 1e-9 absolute slack.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sinet::bits::{
    extract_bits, extract_bits_budget, select_bit, select_bit_budget, split_weighted_bits,
    split_weighted_bits_budget, DyadicPoint, QDomain,
};
use sinet::gadgets::{
    binary_gate, mid3, product_approx, product_budget, product_error_bound, square_approx,
};
use sinet::harness::{measure, rate_experiment, Grid, FLOAT_SLACK};
use sinet::interp::{
    fit_bit_budget, fit_bit_samples, fit_point_budget, fit_point_samples, BitTable, SampleSet,
};
use sinet::scalar::{rat_from_f64, rat_int, ratio, Rat};
use sinet::sis::{
    build_q_net, build_uniform_net, exact_hat, q_net_budget, rate_compose, uniform_budget,
    ApproxParams, Generator, SisFunction,
};
use sinet::splines::{
    bspline_d, bspline_net, bspline_net_budget, bspline_net_error_bound, quasi_interpolate,
    BsplineSpec,
};

const J6: u32 = 6;
const DELTA8: f64 = 1.0 / 256.0;

/// All 2^j leading patterns with random tails kept out of the removed slabs.
fn q_points(j: u32, delta: f64, tails: usize, seed: u64) -> Vec<DyadicPoint> {
    let q = QDomain::new(j, delta, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for pattern in 0..(1u64 << j) {
        for _ in 0..tails {
            loop {
                let mut bits: Vec<u8> =
                    (0..j).map(|i| ((pattern >> (j - 1 - i)) & 1) as u8).collect();
                for _ in 0..4 {
                    bits.push(rng.gen_range(0..=1));
                }
                let p = DyadicPoint::new(bits).unwrap();
                if q.contains_1d(p.to_f64()) {
                    out.push(p);
                    break;
                }
            }
        }
    }
    out
}

#[test]
fn criterion_01_bit_extraction_exactness() {
    let start = Instant::now();
    let points = q_points(J6, DELTA8, 8, 0xC1);
    for r in 1..=3u32 {
        let net = extract_bits(J6, DELTA8, r).unwrap();
        assert!(net.fits(extract_bits_budget(r)), "extract r={r}: {:?}", net.size());
        for p in &points {
            let out = net.eval_exact(&[p.value()]).unwrap();
            let (head, tail) = p.split(r as usize);
            for (i, b) in head.iter().enumerate() {
                assert_eq!(out[i], rat_int(*b as i64), "extract r={r} bit {i} at {:?}", p.bits());
            }
            assert_eq!(out[r as usize], tail, "extract r={r} tail at {:?}", p.bits());
        }
        for k in [0, J6 / 2, J6] {
            let net = split_weighted_bits(J6, DELTA8, r, k).unwrap();
            assert!(net.fits(split_weighted_bits_budget(J6, r)), "split r={r}: {:?}", net.size());
            for p in &points {
                let out = net.eval_exact(&[p.value()]).unwrap();
                let s1: i64 =
                    (1..=k as usize).map(|i| (p.bit(i) as i64) << (J6 as usize - i)).sum();
                let s2: i64 = (k as usize + 1..=J6 as usize)
                    .map(|i| (p.bit(i) as i64) << (J6 as usize - i))
                    .sum();
                let (_, tail) = p.split(J6 as usize);
                assert_eq!(out[0], rat_int(s1), "split r={r} k={k}");
                assert_eq!(out[1], rat_int(s2), "split r={r} k={k}");
                assert_eq!(out[2], tail, "split r={r} k={k}");
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "runtime {elapsed:?} exceeds 10 s");
    println!("acceptance 01 bit extraction exactness: PASS ({elapsed:?})");
}

#[test]
fn criterion_02_select_bit_exhaustive() {
    let start = Instant::now();
    let cap = 10u32;
    let r = 3u32;
    let net = select_bit(r, cap).unwrap();
    assert!(net.fits(select_bit_budget(r, cap)), "{:?}", net.size());
    for pattern in 0..(1u64 << cap) {
        let bits: Vec<u8> = (0..cap).map(|i| ((pattern >> (cap - 1 - i)) & 1) as u8).collect();
        let p = DyadicPoint::new(bits).unwrap();
        let v = p.value();
        for k in 1..=cap {
            let out = net.eval_exact(&[v.clone(), rat_int(k as i64)]).unwrap();
            assert_eq!(out[0], rat_int(p.bit(k as usize) as i64), "pattern {pattern:b} k={k}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "runtime {elapsed:?} exceeds 30 s");
    println!("acceptance 02 select-bit exhaustive: PASS ({elapsed:?})");
}

#[test]
fn criterion_03_interpolation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    for n in 1..=4usize {
        for l in 1..=4usize {
            for m in [n * n * l, (n * n * l).div_ceil(2)] {
                let mut pts: Vec<Vec<f64>> = Vec::new();
                while pts.len() < m {
                    let x: f64 = rng.gen_range(-8.0..8.0);
                    if pts.iter().all(|p| p[0] != x) {
                        pts.push(vec![x]);
                    }
                }
                let vals: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..50.0)).collect();
                let set = SampleSet::new(pts, vals).unwrap();
                let net = fit_point_samples(&set, n, l).unwrap();
                assert!(net.fits(fit_point_budget(n, l)), "N={n} L={l} m={m}: {:?}", net.size());
                for (p, v) in set.points.iter().zip(&set.values) {
                    let out = net.eval_exact(&[rat_from_f64(p[0])]).unwrap();
                    assert_eq!(out[0], rat_from_f64(*v), "N={n} L={l} m={m}");
                }
            }
            // bit tables at full capacity
            let m = n * n * l;
            let pts: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64]).collect();
            let bits: Vec<Vec<u8>> =
                (0..m).map(|_| (0..l).map(|_| rng.gen_range(0..=1)).collect()).collect();
            let table = BitTable::new(pts, bits).unwrap();
            let net = fit_bit_samples(&table, n, l).unwrap();
            assert!(net.fits(fit_bit_budget(n, l)), "bits N={n} L={l}: {:?}", net.size());
            for (i, p) in table.points.iter().enumerate() {
                for k in 1..=l {
                    let out =
                        net.eval_exact(&[rat_from_f64(p[0]), rat_int(k as i64)]).unwrap();
                    assert_eq!(out[0], rat_int(table.bits[i][k - 1] as i64));
                }
            }
        }
    }
    println!("acceptance 03 interpolation exactness and budgets: PASS");
}

#[test]
fn criterion_04_gadget_bounds() {
    // squaring block
    for s in 1..=6usize {
        let net = square_approx(s).unwrap();
        let bound = 2f64.powi(-(2 * s as i32) - 2);
        let grid = Grid::UnitCube { d: 1, per_axis: 4096 };
        let rep = measure("square", &net, &|x| x[0] * x[0], &grid, bound).unwrap();
        assert!(rep.bound_satisfied, "square s={s}: {rep:?}");
    }
    // exact binary gate at 1e-3 resolution
    let gate = binary_gate();
    for a in [0i64, 1] {
        for i in -2000..=2000i64 {
            let b = ratio(i, 1000);
            let out = gate.eval_exact(&[rat_int(a), b.clone()]).unwrap();
            assert_eq!(out[0], rat_int(a) * b);
        }
    }
    // middle-value network against the sort oracle
    let mid = mid3();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    for _ in 0..100_000 {
        let t = [
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        ];
        let mut sorted = t;
        sorted.sort_by(f64::total_cmp);
        let xs: Vec<Rat> = t.iter().map(|v| rat_from_f64(*v)).collect();
        assert_eq!(mid.eval_exact(&xs).unwrap()[0], rat_from_f64(sorted[1]));
    }
    // k-ary product: error bound, exact zero absorption, budgets
    for k in 2..=4usize {
        for n in 1..=2usize {
            for l in 1..=2usize {
                let net = product_approx(k, n, l).unwrap();
                assert!(net.fits(product_budget(k, n, l)), "k={k} n={n} l={l}");
                let bound = product_error_bound(k, n, l);
                let mut worst: f64 = 0.0;
                for _ in 0..3000 {
                    let x: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
                    let want: f64 = x.iter().product();
                    worst = worst.max((net.eval(&x).unwrap()[0] - want).abs());
                }
                assert!(worst <= bound + FLOAT_SLACK, "k={k} n={n} l={l}: {worst} > {bound}");
                for zero_at in 0..k {
                    let mut x = vec![0.7; k];
                    x[zero_at] = 0.0;
                    assert_eq!(net.eval(&x).unwrap()[0], 0.0, "k={k} zero at {zero_at}");
                }
            }
        }
    }
    println!("acceptance 04 gadget bounds: PASS");
}

#[test]
fn criterion_05_bspline_net() {
    for k in [3usize, 4] {
        for d in [1usize, 2] {
            for n in [1usize, 2] {
                let l = 1usize;
                let net = bspline_net(k, d, n, l).unwrap();
                assert!(net.fits(bspline_net_budget(k, d, n, l)), "k={k} d={d} n={n}");
                let bound = bspline_net_error_bound(k, d, n, l);
                let per_axis = if d == 1 { 10_000 } else { 100 };
                let grid =
                    Grid::Box { lo: vec![-1.0; d], hi: vec![k as f64 + 2.0; d], per_axis };
                let rep = measure(
                    "spline",
                    &net,
                    &move |x: &[f64]| bspline_d(k, d, x),
                    &grid,
                    bound,
                )
                .unwrap();
                assert!(rep.bound_satisfied, "k={k} d={d} n={n}: {rep:?}");
                // exact vanishing outside [0, k+1]^d
                for probe in [-5.0, -1.001, k as f64 + 1.0 + 1e-9, k as f64 + 7.0] {
                    let mut x = vec![0.5; d];
                    x[d - 1] = probe;
                    assert_eq!(net.eval(&x).unwrap()[0], 0.0, "k={k} d={d} probe {probe}");
                }
            }
        }
    }
    println!("acceptance 05 spline network bound and support: PASS");
}

fn random_hat_sis(j: u32, seed: u64) -> SisFunction {
    let gen = Generator::bspline(2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = BTreeMap::new();
    for n in -1..(1i64 << j) {
        coeffs.insert(vec![n], rng.gen_range(-0.99..0.99));
    }
    SisFunction::new(j, gen, coeffs, 1.0).unwrap()
}

fn dyadic_hat_sis(j: u32, frac_bits: usize, seed: u64) -> SisFunction {
    let gen = Generator::bspline(2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = BTreeMap::new();
    let scale = 1i64 << frac_bits;
    for n in -1..(1i64 << j) {
        coeffs.insert(vec![n], rng.gen_range(-(scale - 1)..scale) as f64 / scale as f64);
    }
    SisFunction::new(j, gen, coeffs, 1.0).unwrap()
}

fn desk_params(j: u32, eps: f64) -> ApproxParams {
    let s = (j.saturating_sub(4)).div_ceil(2).max(1);
    let r = j.div_ceil(2).saturating_sub(s).max(1);
    let t = sinet::sis::bits_needed(eps).unwrap() as u32;
    let r_tilde = t.clamp(1, 7);
    let s_tilde = t.div_ceil(r_tilde).max(1);
    ApproxParams { r, s, r_tilde, s_tilde, epsilon: eps, delta: 2f64.powi(-(j as i32) - 2) }
}

#[test]
fn criterion_06_punctured_approximation() {
    let start = Instant::now();
    let phi0 = exact_hat();
    for j in [3u32, 4] {
        for eps in [1.0 / 16.0, 1.0 / 64.0] {
            let params = desk_params(j, eps);
            // random coefficients: float-mode bound 3 C_φ ε with C_φ = 2
            let g = random_hat_sis(j, 0xC6 + j as u64);
            let net = build_q_net(&g, &params, &phi0, 0.0).unwrap();
            assert!(
                net.fits(q_net_budget(2, 1, &params, phi0.width(), phi0.depth())),
                "j={j} eps={eps}: {:?}",
                net.size()
            );
            let q = QDomain::new(j, params.delta, 1).unwrap();
            let grid = Grid::Punctured { q, per_axis: 1 << 12 };
            let gg = g.clone();
            let rep =
                measure("q-net", &net, &move |x: &[f64]| gg.eval(x), &grid, 6.0 * eps).unwrap();
            assert!(rep.bound_satisfied, "j={j} eps={eps}: sup {} > {}", rep.sup_error, 6.0 * eps);

            // dyadic coefficients + exact surrogate: exact zero error;
            // c/2 + 1/2 uses one more fractional bit than c, so coefficients
            // carry at most (kept bits − 1) fractional bits
            let t = sinet::sis::bits_needed(eps).unwrap();
            let gd = dyadic_hat_sis(j, (t - 1).min(8), 0xD6 + j as u64);
            let net = build_q_net(&gd, &params, &phi0, 0.0).unwrap();
            for cell in 0..(1i64 << j) {
                for tt in 0..4 {
                    let x = ratio(cell, 1 << j) + ratio(tt, 1 << (j + 3));
                    let out = net.eval_exact(std::slice::from_ref(&x)).unwrap();
                    let want = gd.eval_exact(std::slice::from_ref(&x)).unwrap();
                    assert_eq!(out[0], want, "exact case j={j} eps={eps} x={x}");
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 120, "runtime {elapsed:?} exceeds 2 min");
    println!("acceptance 06 punctured-domain approximation: PASS ({elapsed:?})");
}

#[test]
fn criterion_07_uniform_approximation() {
    let phi0 = exact_hat();
    for j in [3u32, 4] {
        for eps in [1.0 / 16.0, 1.0 / 64.0] {
            let params = desk_params(j, eps);
            let g = random_hat_sis(j, 0xC7 + j as u64);
            let qnet = build_q_net(&g, &params, &phi0, 0.0).unwrap();
            let unet = build_uniform_net(&g, &params, &phi0, 0.0).unwrap();
            assert_eq!(unet.depth(), qnet.depth() + 2, "depth grows by exactly 2d");
            assert!(
                unet.fits(uniform_budget(2, 1, &params, phi0.width(), phi0.depth())),
                "j={j} eps={eps}: {:?}",
                unet.size()
            );
            // uniform grid including the gaps and the endpoint 1
            let grid = Grid::UnitCube { d: 1, per_axis: 1 << 12 };
            let gg = g.clone();
            let rep = measure("uniform", &unet, &move |x: &[f64]| gg.eval(x), &grid, 12.0 * eps)
                .unwrap();
            assert!(
                rep.bound_satisfied,
                "j={j} eps={eps}: sup {} > {}",
                rep.sup_error,
                12.0 * eps
            );
        }
    }
    println!("acceptance 07 uniform approximation: PASS");
}

#[test]
fn criterion_08_localized_representation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut done = 0;
    'outer: for d in [1usize, 2] {
        for j in [2u32, 3, 4] {
            for rep in 0..4 {
                if done >= 20 {
                    break 'outer;
                }
                let gen = Generator::bspline(2, d).unwrap();
                let mut coeffs = BTreeMap::new();
                let cells = 1i64 << j;
                let mut idx = vec![-1i64; d];
                loop {
                    coeffs.insert(idx.clone(), rng.gen_range(-0.95..0.95));
                    let mut carry = true;
                    for m in 0..d {
                        idx[m] += 1;
                        if idx[m] < cells {
                            carry = false;
                            break;
                        }
                        idx[m] = -1;
                    }
                    if carry {
                        break;
                    }
                }
                let g = SisFunction::new(j, gen, coeffs, 1.0).unwrap();
                let points = if d == 1 { 10_000 } else { 5_000 };
                for _ in 0..points {
                    let x: Vec<Rat> = (0..d)
                        .map(|_| ratio(rng.gen_range(0..(1i64 << 20)), 1 << 20))
                        .collect();
                    let direct = g.eval_exact(&x).unwrap();
                    let local = g.localize_exact(&x).unwrap().unwrap();
                    assert_eq!(direct, local, "d={d} j={j} rep={rep}");
                }
                done += 1;
            }
        }
    }
    assert!(done >= 20, "only {done} functions tested");
    println!("acceptance 08 localized representation: PASS ({done} functions)");
}

#[test]
fn criterion_09_quasi_interpolation() {
    // polynomial reproduction on interior cells
    for k in [2usize, 3, 4] {
        let spec = BsplineSpec::new(k, 1).unwrap();
        for t in 0..k {
            let target = move |x: &[f64]| x[0].powi(t as i32);
            let g = quasi_interpolate(&target, 4, spec).unwrap();
            let mut residual: f64 = 0.0;
            for i in 0..=1000 {
                let x = 0.25 + 0.5 * i as f64 / 1000.0;
                residual = residual.max((g.eval(&[x]) - target(&[x])).abs());
            }
            assert!(residual <= 1e-10, "k={k} degree {t}: residual {residual}");
        }
    }
    // empirical rate for the sine through the full network pipeline
    let spec = BsplineSpec::new(3, 1).unwrap();
    let target = |x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).sin();
    let fit = rate_experiment(&target, spec, &[4, 5, 6, 7], -3.0).unwrap();
    assert!(!fit.exact, "sine is not reproduced exactly");
    assert!(fit.slope <= -2.5, "slope {} above -2.5 (errors {:?})", fit.slope, fit.errors);
    println!(
        "acceptance 09 quasi-interpolation: PASS (slope {:.3}, errors {:?})",
        fit.slope, fit.errors
    );
}

#[test]
fn criterion_10_rate_compose_branches() {
    // hand-evaluated formulas for both branches
    let case1 = |beta: f64, d: usize, n: usize, l: usize| {
        let nl = (n * l) as f64;
        (nl / ((n as f64).log2() * (l as f64).log2())).powf(-2.0 * beta / d as f64)
    };
    let case2 = |alpha: f64, n: usize, l: usize| ((n * l) as f64).powf(-alpha);
    let tuples: [(f64, f64, usize, usize, usize); 20] = [
        (1.0, 0.25, 1, 4, 4),
        (2.0, 0.5, 1, 4, 8),
        (3.0, 1.0, 1, 8, 8),
        (1.5, 0.5, 2, 4, 4),
        (2.5, 1.0, 2, 8, 4),
        (4.0, 1.5, 3, 4, 4),
        (1.0, 0.4, 1, 16, 4),
        (2.0, 0.9, 2, 16, 16),
        (0.5, 1.0, 1, 4, 4),
        (0.25, 1.0, 1, 8, 8),
        (1.0, 2.0, 1, 4, 8),
        (0.75, 2.0, 2, 4, 4),
        (1.5, 4.0, 2, 8, 8),
        (0.3, 0.6, 3, 4, 4),
        (0.1, 3.0, 1, 16, 4),
        (2.0, 8.0, 2, 16, 16),
        (1.0, 0.5, 1, 4, 4),
        (2.0, 2.0, 2, 8, 8),
        (3.0, 4.5, 3, 4, 8),
        (0.5, 0.25, 1, 8, 4),
    ];
    for (alpha, beta, d, n, l) in tuples {
        let got = rate_compose(alpha, beta, d, n, l).unwrap();
        let tbd = 2.0 * beta / d as f64;
        let want = if alpha > tbd {
            case1(beta, d, n, l)
        } else if alpha < tbd {
            case2(alpha, n, l)
        } else {
            case1(beta, d, n, l).max(case2(alpha, n, l))
        };
        assert!(
            (got - want).abs() <= 1e-15 * want.max(1.0),
            "alpha={alpha} beta={beta} d={d}: {got} vs {want}"
        );
    }
    println!("acceptance 10 rate composition branches: PASS");
}
