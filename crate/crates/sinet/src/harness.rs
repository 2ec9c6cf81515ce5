//! Error measurement, budget auditing, rate experiments, and report
//! emission: the backbone that turns every construction into a pass/fail
//! check against its exact oracle.

use crate::bits::QDomain;
use crate::error::{Error, Result};
use crate::net::{ReluNet, SizeBudget};
use crate::sis::{build_uniform_net, bits_needed, ApproxParams};
use crate::splines::{
    bspline_net, bspline_net_error_bound, bspline_sup_norm, quasi_interpolate, BsplineSpec,
};

/// Absolute slack absorbing float evaluation noise in bound checks;
/// rational-mode checks use zero slack.
pub const FLOAT_SLACK: f64 = 1e-9;

/// Grid-based error report for one construction against its oracle.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub construct: String,
    pub sup_error: f64,
    pub l1_error: f64,
    pub l2_error: f64,
    pub grid_size: usize,
    pub domain: String,
    pub width: usize,
    pub depth: usize,
    pub params: usize,
    pub bound_claimed: f64,
    pub bound_satisfied: bool,
}

/// Deterministic measurement grids. Default resolution is 2^12 points per
/// dimension for d = 1 and 2^7 per axis for d = 2; every report records the
/// grid actually used.
#[derive(Debug, Clone)]
pub enum Grid {
    /// Uniform grid on [0,1]^d including endpoints (and hence the δ-gaps).
    UnitCube { d: usize, per_axis: usize },
    /// Dyadic points of [0,1)^d strictly avoiding the removed slabs.
    Punctured { q: QDomain, per_axis: usize },
    /// Uniform grid on a general box.
    Box { lo: Vec<f64>, hi: Vec<f64>, per_axis: usize },
}

impl Grid {
    pub fn default_per_axis(d: usize) -> usize {
        match d {
            1 => 1 << 12,
            2 => 1 << 7,
            _ => 1 << 5,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::UnitCube { d, .. } => *d,
            Grid::Punctured { q, .. } => q.d,
            Grid::Box { lo, .. } => lo.len(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Grid::UnitCube { d, per_axis } => format!("unit-cube d={d} n={per_axis}"),
            Grid::Punctured { q, per_axis } => {
                format!("Q(j={},delta={},d={}) n={per_axis}", q.j, q.delta, q.d)
            }
            Grid::Box { lo, hi, per_axis } => format!("box {lo:?}..{hi:?} n={per_axis}"),
        }
    }

    fn axis_points(&self) -> Vec<Vec<f64>> {
        match self {
            Grid::UnitCube { d, per_axis } => {
                let axis: Vec<f64> = (0..=*per_axis).map(|i| i as f64 / *per_axis as f64).collect();
                vec![axis; *d]
            }
            Grid::Punctured { q, per_axis } => {
                // dyadic ladder at the next power of two, filtered by membership
                let pow = (*per_axis as f64).log2().ceil() as u32;
                let n = 1u64 << pow;
                let axis: Vec<f64> = (0..n)
                    .map(|i| i as f64 / n as f64)
                    .filter(|x| q.contains_1d(*x))
                    .collect();
                vec![axis; q.d]
            }
            Grid::Box { lo, hi, per_axis } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| {
                    (0..=*per_axis).map(|i| a + (b - a) * i as f64 / *per_axis as f64).collect()
                })
                .collect(),
        }
    }

    /// Full product grid in deterministic axis order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes = self.axis_points();
        let mut out: Vec<Vec<f64>> = vec![vec![]];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for partial in &out {
                for v in axis {
                    let mut p = partial.clone();
                    p.push(*v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

/// Sup and L^p error of a network against a scalar oracle over a grid,
/// with the quoted bound recorded and checked under the float slack.
pub fn measure(
    name: &str,
    net: &ReluNet,
    oracle: &dyn Fn(&[f64]) -> f64,
    grid: &Grid,
    bound_claimed: f64,
) -> Result<ErrorReport> {
    if net.input_dim() != grid.dim() {
        return Err(Error::DimMismatch(format!(
            "net expects {} inputs, grid has {}",
            net.input_dim(),
            grid.dim()
        )));
    }
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::Validation("empty measurement grid".into()));
    }
    let mut sup: f64 = 0.0;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for p in &points {
        let diff = (net.eval(p)?[0] - oracle(p)).abs();
        sup = sup.max(diff);
        l1 += diff;
        l2 += diff * diff;
    }
    let n = points.len() as f64;
    let size = net.size();
    Ok(ErrorReport {
        construct: name.to_string(),
        sup_error: sup,
        l1_error: l1 / n,
        l2_error: (l2 / n).sqrt(),
        grid_size: points.len(),
        domain: grid.label(),
        width: size.width,
        depth: size.depth,
        params: size.params,
        bound_claimed,
        bound_satisfied: sup <= bound_claimed + FLOAT_SLACK,
    })
}

/// True iff the network fits the budget.
pub fn audit_budget(net: &ReluNet, budget: SizeBudget) -> bool {
    net.fits(budget)
}

/// Least-squares rate fit of log2(error) against the level j.
#[derive(Debug, Clone)]
pub struct RateFit {
    pub levels: Vec<u32>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub slope_expected: f64,
    /// Set when every error sits at the exactness floor, making a slope fit
    /// meaningless (polynomial reproduction).
    pub exact: bool,
}

/// Floor below which errors are treated as exact reproduction.
pub const EXACT_FLOOR: f64 = 1e-10;

fn fit_slope(levels: &[u32], errors: &[f64]) -> f64 {
    let n = levels.len() as f64;
    let xs: Vec<f64> = levels.iter().map(|j| *j as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).log2()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Parameter policy for [`rate_experiment`]: accuracy per level is chosen so
/// the construction error stays well below the expected projection error.
pub fn rate_params(j: u32, d: usize, k: usize) -> Result<(ApproxParams, ReluNet, f64)> {
    let dj = d as u32 * j;
    let s = ((dj.saturating_sub(4)).div_ceil(2)).max(1);
    let r = (dj.div_ceil(2)).saturating_sub(s).max(1);
    let epsilon = 2f64.powi(-((k as u32 * j + 6) as i32));
    let t = bits_needed(epsilon)?;
    let r_tilde = (t as u32).min(7).max(1);
    let s_tilde = (t as u32).div_ceil(r_tilde).max(1);
    let delta = 2f64.powi(-(j as i32) - 2);
    let params = ApproxParams { r, s, r_tilde, s_tilde, epsilon, delta };

    let sup = bspline_sup_norm(k);
    let (phi0, cert) = if k == 2 {
        (crate::sis::exact_hat(), 0.0)
    } else {
        let mut l = 1usize;
        while bspline_net_error_bound(k, d, 1, l) > epsilon * sup {
            l += 1;
        }
        let net = bspline_net(k, d, 1, l)?;
        (net, bspline_net_error_bound(k, d, 1, l))
    };
    Ok((params, phi0, cert))
}

/// Full-pipeline rate experiment: quasi-interpolate the target at each level,
/// build the uniform approximant, and measure the interior sup error against
/// the target itself.
pub fn rate_experiment(
    target: &dyn Fn(&[f64]) -> f64,
    spec: BsplineSpec,
    levels: &[u32],
    slope_expected: f64,
) -> Result<RateFit> {
    if levels.len() < 3 {
        return Err(Error::Params("rate fit needs at least 3 levels".into()));
    }
    let mut errors = Vec::with_capacity(levels.len());
    for &j in levels {
        let g = quasi_interpolate(target, j, spec)?;
        let (params, phi0, cert) = rate_params(j, spec.d, spec.k)?;
        let net = build_uniform_net(&g, &params, &phi0, cert)?;
        // interior grid keeps boundary truncation out of the fit
        let per_axis = 1usize << 10;
        let mut sup: f64 = 0.0;
        for i in 0..=per_axis {
            let x = 0.125 + 0.75 * i as f64 / per_axis as f64;
            let p = vec![x; spec.d];
            sup = sup.max((net.eval(&p)?[0] - target(&p)).abs());
        }
        errors.push(sup);
    }
    let exact = errors.iter().all(|e| *e <= EXACT_FLOOR);
    let slope = if exact { 0.0 } else { fit_slope(levels, &errors) };
    Ok(RateFit { levels: levels.to_vec(), errors, slope, slope_expected, exact })
}

/// Projection-only rate measurement: sup |Q_{2^{−j}} f − f| on the interior,
/// the cheap cross-check for the same slopes.
pub fn rate_experiment_projection(
    target: &dyn Fn(&[f64]) -> f64,
    spec: BsplineSpec,
    levels: &[u32],
    slope_expected: f64,
) -> Result<RateFit> {
    if levels.len() < 3 {
        return Err(Error::Params("rate fit needs at least 3 levels".into()));
    }
    let mut errors = Vec::with_capacity(levels.len());
    for &j in levels {
        let g = quasi_interpolate(target, j, spec)?;
        let per_axis = 1usize << 10;
        let mut sup: f64 = 0.0;
        for i in 0..=per_axis {
            let x = 0.125 + 0.75 * i as f64 / per_axis as f64;
            let p = vec![x; spec.d];
            sup = sup.max((g.eval(&p) - target(&p)).abs());
        }
        errors.push(sup);
    }
    let exact = errors.iter().all(|e| *e <= EXACT_FLOOR);
    let slope = if exact { 0.0 } else { fit_slope(levels, &errors) };
    Ok(RateFit { levels: levels.to_vec(), errors, slope, slope_expected, exact })
}

/// Named scalar targets shared by the CLI and the experiments.
pub fn target_by_name(name: &str) -> Option<Box<dyn Fn(&[f64]) -> f64>> {
    match name {
        "sin2pix" => Some(Box::new(|x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).sin())),
        "poly-x-1mx" => Some(Box::new(|x: &[f64]| x[0] * (1.0 - x[0]))),
        "zero" => Some(Box::new(|_x: &[f64]| 0.0)),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

/// CSV header matching the report schema.
pub const CSV_HEADER: &str = "construct,param_json,width,depth,params,sup_error,bound,pass";

/// One CSV row per report; `param_json` is the caller's parameter record.
pub fn csv_row(report: &ErrorReport, param_json: &str) -> String {
    format!(
        "{},\"{}\",{},{},{},{:e},{:e},{}",
        report.construct,
        param_json.replace('"', "\"\""),
        report.width,
        report.depth,
        report.params,
        report.sup_error,
        report.bound_claimed,
        report.bound_satisfied
    )
}

/// Static SVG log-error plot, a pure function of the rows (level, error).
pub fn svg_rate_plot(levels: &[u32], errors: &[f64]) -> String {
    let w = 480.0;
    let h = 320.0;
    let margin = 40.0;
    let logs: Vec<f64> = errors.iter().map(|e| e.max(1e-300).log2()).collect();
    let (ymin, ymax) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (ymin, ymax) = if (ymax - ymin).abs() < 1e-12 { (ymin - 1.0, ymax + 1.0) } else { (ymin, ymax) };
    let (xmin, xmax) =
        (*levels.first().unwrap_or(&0) as f64, *levels.last().unwrap_or(&1) as f64);
    let xspan = (xmax - xmin).max(1.0);
    let px = |j: f64| margin + (j - xmin) / xspan * (w - 2.0 * margin);
    let py = |v: f64| h - margin - (v - ymin) / (ymax - ymin) * (h - 2.0 * margin);
    let mut path = String::new();
    for (i, (j, v)) in levels.iter().zip(&logs).enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        path.push_str(&format!("{cmd}{:.2},{:.2} ", px(*j as f64), py(*v)));
    }
    let mut circles = String::new();
    for (j, v) in levels.iter().zip(&logs) {
        circles.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#d33\"/>",
            px(*j as f64),
            py(*v)
        ));
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\
         <path d=\"{path}\" stroke=\"#36c\" fill=\"none\" stroke-width=\"1.5\"/>{circles}\
         <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"11\">level j vs log2 error</text></svg>",
        margin,
        margin - 10.0
    )
}
