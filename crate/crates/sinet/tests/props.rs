//! Property tests for the structural invariants: composition semantics,
//! size arithmetic, wire-format round trips, the mid-lifting containment
//! property, and report determinism.

use proptest::prelude::*;

use sinet::gadgets::{mid3, soft_indicator, IndicatorSpec};
use sinet::harness::{csv_row, measure, Grid};
use sinet::net::{compose, stack, AffineLayer, ReluNet};
use sinet::scalar::{rat_from_f64, Rat};

fn arb_layer(in_dim: usize, out_dim: usize) -> impl Strategy<Value = AffineLayer> {
    let weights = proptest::collection::vec(
        proptest::collection::vec(-2.0f64..2.0, in_dim),
        out_dim,
    );
    let bias = proptest::collection::vec(-1.0f64..1.0, out_dim);
    (weights, bias).prop_map(move |(w, b)| {
        let rows = w
            .into_iter()
            .map(|row| row.into_iter().map(rat_from_f64).collect::<Vec<Rat>>())
            .collect();
        AffineLayer::from_dense(rows, b.into_iter().map(rat_from_f64).collect())
    })
}

fn arb_net(in_dim: usize, out_dim: usize) -> impl Strategy<Value = ReluNet> {
    proptest::collection::vec(1usize..4, 0..3).prop_flat_map(move |hidden| {
        let mut dims = vec![in_dim];
        dims.extend(hidden);
        dims.push(out_dim);
        let layers: Vec<BoxedStrategy<AffineLayer>> = dims
            .windows(2)
            .map(|w| arb_layer(w[0], w[1]).boxed())
            .collect();
        layers.prop_map(ReluNet::from_layers)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_evaluates_pointwise(
        a in arb_net(2, 3),
        b in arb_net(3, 1),
        x0 in -3.0f64..3.0,
        x1 in -3.0f64..3.0,
    ) {
        let c = compose(&a, &b).unwrap();
        prop_assert_eq!(c.depth(), a.depth() + b.depth() - 1);
        let x = [x0, x1];
        let direct = b.eval(&a.eval(&x).unwrap()).unwrap()[0];
        let composed = c.eval(&x).unwrap()[0];
        let tol = 1e-12 * direct.abs().max(1.0);
        prop_assert!((direct - composed).abs() <= tol, "{direct} vs {composed}");
        // exact agreement in rational mode
        let xr = [rat_from_f64(x0), rat_from_f64(x1)];
        let mid = a.eval_exact(&xr).unwrap();
        let d2 = b.eval_exact(&mid).unwrap();
        let c2 = c.eval_exact(&xr).unwrap();
        prop_assert_eq!(&d2[0], &c2[0]);
    }

    #[test]
    fn stack_width_adds_and_concatenates(
        a in arb_net(1, 1),
        b in arb_net(1, 2),
        x0 in -2.0f64..2.0,
        x1 in -2.0f64..2.0,
    ) {
        // equalize depths by trivial identity extension before stacking
        let (a, b) = if a.depth() == b.depth() {
            (a, b)
        } else {
            return Ok(());
        };
        let s = stack(std::slice::from_ref(&a)).unwrap();
        prop_assert_eq!(s.width(), a.width());
        let st = stack(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(st.width(), a.width() + b.width());
        let out = st.eval(&[x0, x1]).unwrap();
        prop_assert_eq!(out[0], a.eval(&[x0]).unwrap()[0]);
        prop_assert_eq!(out[1], b.eval(&[x1]).unwrap()[0]);
    }

    #[test]
    fn wire_format_round_trips(net in arb_net(2, 2)) {
        let json = net.to_json();
        let back = ReluNet::from_json(&json).unwrap();
        if net != back {
            eprintln!("JSON was: {json}");
        }
        prop_assert!(net == back, "round trip changed the network");
        prop_assert_eq!(net.size(), back.size());
    }

    #[test]
    fn lipschitz_bound_holds(net in arb_net(1, 1), x in -2.0f64..2.0) {
        let lip = net.lipschitz_inf();
        let h = 1e-9;
        let d = (net.eval(&[x + h]).unwrap()[0] - net.eval(&[x]).unwrap()[0]).abs();
        prop_assert!(d <= lip * h * (1.0 + 1e-6) + 1e-15);
    }

    #[test]
    fn mid_lifting_containment(
        y in -5.0f64..5.0,
        eps in 0.01f64..1.0,
        good1 in -1.0f64..1.0,
        good2 in -1.0f64..1.0,
        stray in -20.0f64..20.0,
        perm in 0usize..6,
    ) {
        // two entries within [y−ε, y+ε] force the middle value inside too
        let g1 = y + good1 * eps;
        let g2 = y + good2 * eps;
        let tri = match perm {
            0 => [g1, g2, stray],
            1 => [g1, stray, g2],
            2 => [stray, g1, g2],
            3 => [g2, g1, stray],
            4 => [g2, stray, g1],
            _ => [stray, g2, g1],
        };
        let m = mid3().eval(&tri).unwrap()[0];
        prop_assert!(m >= y - eps - 1e-12 && m <= y + eps + 1e-12, "mid {m} outside");
    }

    #[test]
    fn indicator_range(a in -1.0f64..1.0, width in 0.0f64..1.0, x in -3.0f64..3.0) {
        let spec = IndicatorSpec::new(a, a + width, 1.0 / 128.0).unwrap();
        let f = soft_indicator(&spec);
        let v = f.eval(&[x]).unwrap()[0];
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
    }
}

#[test]
fn reports_are_deterministic() {
    let net = sinet::gadgets::square_approx(3).unwrap();
    let grid = Grid::UnitCube { d: 1, per_axis: 512 };
    let r1 = measure("square", &net, &|x| x[0] * x[0], &grid, 2f64.powi(-8)).unwrap();
    let r2 = measure("square", &net, &|x| x[0] * x[0], &grid, 2f64.powi(-8)).unwrap();
    assert_eq!(csv_row(&r1, "{}"), csv_row(&r2, "{}"));
    assert!(r1.grid_size >= 1);
}
