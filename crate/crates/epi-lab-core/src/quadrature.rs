//! Adaptive deterministic integration over boxes in R^d (d <= 3) plus a
//! seeded Monte Carlo fallback.
//!
//! The deterministic engine is a panel-based adaptive scheme with an embedded
//! Gauss(7)/Kronrod(15) pair per panel. Panels are seeded from declared split
//! points so that kinks and integrable endpoint singularities sit on panel
//! boundaries, where the rule never evaluates. Multi-dimensional integrals are
//! iterated one axis at a time with tighter tolerances on inner levels.

use crate::distributions::MixedDistribution;
use crate::error::{Error, Result};
use crate::geom::BoxDomain;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// How the integrand's rough points are declared to the engine.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SingularityPolicy {
    /// Integrand is smooth on the whole domain.
    #[default]
    None,
    /// Integrable logarithmic singularities may sit at box corners; panels
    /// are graded geometrically toward the ends of every axis.
    CornerLog,
    /// Kink/singularity coordinates per axis; panel edges are placed there.
    SplitPoints(Vec<Vec<f64>>),
}

/// Tolerances and budgets for one integration call.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Truncation radius for unbounded supports, in units of the natural
    /// scale (standard deviations per axis for Gaussians).
    pub truncation_radius: f64,
    pub singularity_policy: SingularityPolicy,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            truncation_radius: 8.0,
            singularity_policy: SingularityPolicy::None,
            mc_samples: 100_000,
            mc_seed: 0,
        }
    }
}

impl QuadratureConfig {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidParameter(
                "maxSubdivisions must be at least 1".into(),
            ));
        }
        if self.mc_samples < 1000 {
            return Err(Error::InvalidParameter(
                "mcSamples must be at least 1000".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one integration call. `converged` implies
/// `error_estimate <= max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

/// A value with an accumulated error estimate (nested integrals fold their
/// inner estimates into `error`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_6,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod value, scaled error estimate, for one panel.
fn gk15(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |f: &mut dyn FnMut(f64) -> Result<f64>, x: f64| -> Result<f64> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { point: vec![x] });
        }
        Ok(v)
    };

    let fc = eval(f, center)?;
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = resk.abs();
    let mut f1 = [0.0f64; 7];
    let mut f2 = [0.0f64; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let v1 = eval(f, center - dx)?;
        let v2 = eval(f, center + dx)?;
        f1[j] = v1;
        f2[j] = v2;
        resk += WGK[j] * (v1 + v2);
        resabs += WGK[j] * (v1.abs() + v2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (v1 + v2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((f1[j] - reskh).abs() + (f2[j] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((value, err))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive 1D integration of a fallible integrand over [a, b].
///
/// `splits` lists known kink/singularity coordinates; values outside (a, b)
/// are ignored. The integrand is never evaluated at panel edges.
pub fn adaptive_1d(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
    splits: &[f64],
) -> Result<QuadratureResult> {
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions_used: 0,
            converged: true,
        });
    }
    debug_assert!(a < b, "adaptive_1d needs a < b");

    let mut edges: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|s| *s > a && *s < b && s.is_finite())
        .collect();
    edges.push(a);
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut total_value = 0.0;
    let mut total_error = 0.0;
    for w in edges.windows(2) {
        let (val, err) = gk15(f, w[0], w[1])?;
        total_value += val;
        total_error += err;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: val,
            error: err,
        });
    }

    let width_floor = (b - a).abs() * f64::EPSILON * 4.0;
    let mut used = 0;
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    while total_error + frozen_error > abs_tol.max(rel_tol * (total_value + frozen_value).abs()) {
        if used >= max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if (worst.b - worst.a) <= width_floor {
            // cannot refine further; account for it outside the active heap
            frozen_value += worst.value;
            frozen_error += worst.error;
            total_value -= worst.value;
            total_error -= worst.error;
            continue;
        }
        total_value -= worst.value;
        total_error -= worst.error;
        let mid = 0.5 * (worst.a + worst.b);
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (val, err) = gk15(f, lo, hi)?;
            total_value += val;
            total_error += err;
            heap.push(Panel {
                a: lo,
                b: hi,
                value: val,
                error: err,
            });
        }
        used += 1;
    }

    let value = total_value + frozen_value;
    let error_estimate = total_error + frozen_error;
    Ok(QuadratureResult {
        value,
        error_estimate,
        subdivisions_used: used,
        converged: error_estimate <= abs_tol.max(rel_tol * value.abs()),
    })
}

fn policy_splits(policy: &SingularityPolicy, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
    match policy {
        SingularityPolicy::None => vec![],
        SingularityPolicy::CornerLog => {
            let w = hi - lo;
            let mut v = Vec::with_capacity(24);
            for k in 1..=12 {
                let step = w * 0.5f64.powi(k);
                v.push(lo + step);
                v.push(hi - step);
            }
            v
        }
        SingularityPolicy::SplitPoints(per_axis) => {
            per_axis.get(axis).cloned().unwrap_or_default()
        }
    }
}

/// Deterministic integration of `f` over a box, iterating one axis at a time.
/// Only d <= 3 is supported; use [`integrate_mc`] beyond that.
pub fn integrate(
    f: &dyn Fn(&[f64]) -> f64,
    domain: &BoxDomain,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    cfg.validate()?;
    let d = domain.dim();
    if d == 0 || d > 3 {
        return Err(Error::Unsupported(format!(
            "deterministic quadrature supports 1 <= d <= 3, got {d}"
        )));
    }
    let mut point = vec![0.0; d];
    let mut inner_unconverged = false;
    let res = integrate_axis(f, domain, cfg, 0, &mut point, &mut inner_unconverged)?;
    // inner levels contribute at most their tolerance times the outer measure
    let mut extra = 0.0;
    let mut measure = 1.0;
    for k in 1..d {
        let (lo, hi) = domain.axis(k - 1);
        measure *= hi - lo;
        extra += measure * cfg.abs_tol * 0.1f64.powi(k as i32);
    }
    let error_estimate = res.error_estimate + extra;
    Ok(QuadratureResult {
        converged: !inner_unconverged
            && error_estimate <= cfg.abs_tol.max(cfg.rel_tol * res.value.abs()),
        error_estimate,
        ..res
    })
}

fn integrate_axis(
    f: &dyn Fn(&[f64]) -> f64,
    domain: &BoxDomain,
    cfg: &QuadratureConfig,
    axis: usize,
    point: &mut Vec<f64>,
    inner_unconverged: &mut bool,
) -> Result<QuadratureResult> {
    let d = domain.dim();
    let (lo, hi) = domain.axis(axis);
    let splits = policy_splits(&cfg.singularity_policy, axis, lo, hi);
    let scale = 0.1f64.powi(axis as i32);
    let abs_tol = cfg.abs_tol * scale;
    let rel_tol = cfg.rel_tol * scale;
    if axis == d - 1 {
        let mut g = |x: f64| -> Result<f64> {
            point[axis] = x;
            let v = f(point);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand {
                    point: point.clone(),
                });
            }
            Ok(v)
        };
        adaptive_1d(
            &mut g,
            lo,
            hi,
            abs_tol,
            rel_tol,
            cfg.max_subdivisions,
            &splits,
        )
    } else {
        let mut subdiv = 0usize;
        let mut g = |x: f64| -> Result<f64> {
            point[axis] = x;
            let inner = integrate_axis(f, domain, cfg, axis + 1, point, inner_unconverged)?;
            subdiv = subdiv.max(inner.subdivisions_used);
            if !inner.converged {
                *inner_unconverged = true;
            }
            Ok(inner.value)
        };
        let mut res = adaptive_1d(
            &mut g,
            lo,
            hi,
            abs_tol,
            rel_tol,
            cfg.max_subdivisions,
            &splits,
        )?;
        res.subdivisions_used += subdiv;
        Ok(res)
    }
}

/// Iterated adaptive integration of a fallible integrand over a box, with
/// per-axis split points that may depend on the outer coordinates fixed so
/// far. Inner axes run at tolerances tightened by `inner_factor` per level;
/// their error estimates are folded into the returned estimate.
pub(crate) fn nested_quadrature(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    domain: &BoxDomain,
    splits_for: &dyn Fn(usize, &[f64]) -> Vec<f64>,
    abs_tol: f64,
    rel_tol: f64,
    inner_factor: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    let mut point = vec![0.0; domain.dim()];
    nested_axis(
        f,
        domain,
        splits_for,
        0,
        &mut point,
        abs_tol,
        rel_tol,
        inner_factor,
        max_subdivisions,
    )
}

#[allow(clippy::too_many_arguments)]
fn nested_axis(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    domain: &BoxDomain,
    splits_for: &dyn Fn(usize, &[f64]) -> Vec<f64>,
    axis: usize,
    point: &mut Vec<f64>,
    abs_tol: f64,
    rel_tol: f64,
    inner_factor: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    let d = domain.dim();
    let (lo, hi) = domain.axis(axis);
    let splits = splits_for(axis, &point[..axis]);
    if axis == d - 1 {
        let mut g = |x: f64| -> Result<f64> {
            point[axis] = x;
            f(point)
        };
        let r = adaptive_1d(&mut g, lo, hi, abs_tol, rel_tol, max_subdivisions, &splits)?;
        Ok(Estimate {
            value: r.value,
            error: r.error_estimate,
        })
    } else {
        let mut inner_err_sum = 0.0f64;
        let mut inner_count = 0u64;
        let mut g = |x: f64| -> Result<f64> {
            point[axis] = x;
            let inner = nested_axis(
                f,
                domain,
                splits_for,
                axis + 1,
                point,
                abs_tol * inner_factor,
                rel_tol * inner_factor,
                inner_factor,
                max_subdivisions,
            )?;
            inner_err_sum += inner.error;
            inner_count += 1;
            Ok(inner.value)
        };
        let r = adaptive_1d(&mut g, lo, hi, abs_tol, rel_tol, max_subdivisions, &splits)?;
        let propagated = if inner_count > 0 {
            (hi - lo) * inner_err_sum / inner_count as f64
        } else {
            0.0
        };
        Ok(Estimate {
            value: r.value,
            error: r.error_estimate + propagated,
        })
    }
}

/// Monte Carlo estimate of `E[f(X)]` for `X ~ dist`, with the standard error
/// of the mean as the error estimate. Deterministic given `cfg.mc_seed`.
pub fn integrate_mc(
    f: &dyn Fn(&[f64]) -> f64,
    dist: &MixedDistribution,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    cfg.validate()?;
    let dim = dist.dim();
    integrate_mc_with(
        f,
        &mut |rng, buf| dist.sample_into(rng, buf),
        dim,
        cfg.mc_samples,
        cfg.mc_seed,
        cfg.abs_tol,
        cfg.rel_tol,
    )
}

/// Monte Carlo with a caller-supplied sampler (for joint laws).
pub fn integrate_mc_with(
    f: &dyn Fn(&[f64]) -> f64,
    sample: &mut dyn FnMut(&mut ChaCha8Rng, &mut [f64]),
    dim: usize,
    n: usize,
    seed: u64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; dim];
    let mut kept = 0u64;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for _ in 0..n {
        sample(&mut rng, &mut buf);
        let v = f(&buf);
        if !v.is_finite() {
            continue;
        }
        kept += 1;
        let delta = v - mean;
        mean += delta / kept as f64;
        m2 += delta * (v - mean);
    }
    if kept == 0 {
        return Err(Error::AllSamplesNonFinite);
    }
    let se = if kept > 1 {
        (m2 / (kept as f64 - 1.0) / kept as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(QuadratureResult {
        value: mean,
        error_estimate: se,
        subdivisions_used: 0,
        converged: se <= abs_tol.max(rel_tol * mean.abs()),
    })
}

/// A box holding at least `1 - mass_tol` of the density mass of `dist`.
/// Exact for compact families, mean +/- k sigma per axis for Gaussians.
pub fn truncate_support(dist: &MixedDistribution, mass_tol: f64) -> Result<BoxDomain> {
    let density = dist.density().ok_or(Error::NoDensity)?;
    Ok(density.support(mass_tol))
}

/// Logarithmic gamma grid from `min` to `max` (inclusive, ascending).
pub fn log_grid(min: f64, max: f64, points_per_decade: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && points_per_decade >= 1);
    let decades = (max / min).log10();
    let n = (decades * points_per_decade as f64).round() as usize;
    let lmin = min.log10();
    let step = decades / n as f64;
    (0..=n).map(|k| 10f64.powf(lmin + step * k as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DensityFamily;

    fn quad1(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadratureConfig) -> QuadratureResult {
        integrate(&|x: &[f64]| f(x[0]), &BoxDomain::interval(a, b), cfg).unwrap()
    }

    #[test]
    fn constant_is_exact() {
        let cfg = QuadratureConfig::default();
        let r = quad1(|_| 1.0, 0.0, 1.0, &cfg);
        assert!((r.value - 1.0).abs() < 1e-15 && r.converged);
    }

    #[test]
    fn kronrod_rule_is_exact_on_high_degree_polynomials() {
        // K15 integrates degree <= 22 exactly on a single panel; a wrong
        // node or weight in the tables would break this at 1e-13.
        let cfg = QuadratureConfig::default();
        let exact = 2.0 / 23.0; // int_{-1}^{1} x^22 dx
        let r = quad1(|x| x.powi(22), -1.0, 1.0, &cfg);
        assert!((r.value - exact).abs() < 1e-13, "got {}", r.value);
        let r = quad1(|x| x.powi(21), -1.0, 1.0, &cfg);
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn smooth_oracle_battery_respects_error_contract() {
        let cfg = QuadratureConfig::default();
        let cases: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64, f64)> = vec![
            (Box::new(|x: f64| x.exp()), 0.0, 1.0, std::f64::consts::E - 1.0),
            (Box::new(|x: f64| x.sin()), 0.0, std::f64::consts::PI, 2.0),
            (Box::new(|x: f64| 1.0 / (1.0 + x * x)), -1.0, 1.0, std::f64::consts::FRAC_PI_2),
        ];
        for (f, a, b, truth) in cases {
            let r = quad1(&*f, a, b, &cfg);
            assert!(r.converged);
            assert!(
                (r.value - truth).abs() <= 10.0 * r.error_estimate.max(1e-15),
                "value {} truth {truth} err {}",
                r.value,
                r.error_estimate
            );
        }
    }

    #[test]
    fn gaussian_normalization_tight() {
        let cfg = QuadratureConfig::with_abs_tol(1e-12);
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let r = quad1(phi, -8.0, 8.0, &cfg);
        assert!((r.value - 1.0).abs() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn endpoint_log_singularity_converges() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            singularity_policy: SingularityPolicy::CornerLog,
            ..Default::default()
        };
        let r = quad1(|x| x.ln(), 0.0, 1.0, &cfg);
        assert!((r.value + 1.0).abs() < 1e-9, "int ln = -1, got {}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn kink_with_declared_split_is_cheap() {
        let cfg = QuadratureConfig {
            singularity_policy: SingularityPolicy::SplitPoints(vec![vec![0.3]]),
            ..Default::default()
        };
        let r = quad1(|x| (x - 0.3).abs(), 0.0, 1.0, &cfg);
        let truth = 0.3f64.powi(2) / 2.0 + 0.7f64.powi(2) / 2.0;
        assert!((r.value - truth).abs() < 1e-14);
        assert_eq!(r.subdivisions_used, 0, "split point should suffice");
    }

    // Corner-singular integrand over the triangle y < 1 - x, embedded in the
    // unit box. Analytic value: inner integral is -1 + x - x ln x, so the
    // double integral is -1 + 1/2 + 1/4 = -1/4.
    #[test]
    fn corner_log_double_integral() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 400,
            singularity_policy: SingularityPolicy::CornerLog,
            ..Default::default()
        };
        let f = |p: &[f64]| {
            if p[0] + p[1] < 1.0 {
                (p[0] + p[1]).ln()
            } else {
                0.0
            }
        };
        let domain = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let r = integrate(&f, &domain, &cfg).unwrap();
        assert!(
            (r.value + 0.25).abs() < 1e-6,
            "triangle corner-log integral: got {}, want -0.25",
            r.value
        );
        assert!(r.subdivisions_used <= 400);

        // independent oracles: 1D quadrature of the symbolic inner integral,
        // and plain Monte Carlo over the box
        let inner = quad1(
            |x| -1.0 + x - x * x.ln(),
            0.0,
            1.0,
            &QuadratureConfig {
                singularity_policy: SingularityPolicy::CornerLog,
                ..Default::default()
            },
        );
        assert!((inner.value + 0.25).abs() < 1e-10);

        let cube = MixedDistribution::from_density(
            DensityFamily::uniform_box(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
        );
        let mc_cfg = QuadratureConfig {
            mc_samples: 2_000_000,
            mc_seed: 1,
            ..Default::default()
        };
        let mc = integrate_mc(&f, &cube, &mc_cfg).unwrap();
        assert!(
            (mc.value + 0.25).abs() <= 4.0 * mc.error_estimate,
            "MC oracle {} +- {}",
            mc.value,
            mc.error_estimate
        );
        assert!(
            (mc.value - r.value).abs() <= 4.0 * (mc.error_estimate + r.error_estimate),
            "MC and deterministic disagree"
        );
    }

    #[test]
    fn non_finite_integrand_names_the_point() {
        let cfg = QuadratureConfig::default();
        let err = integrate(
            &|p: &[f64]| if p[0] > 0.5 { f64::NAN } else { 1.0 },
            &BoxDomain::interval(0.0, 1.0),
            &cfg,
        )
        .unwrap_err();
        match err {
            Error::NonFiniteIntegrand { point } => assert!(point[0] > 0.5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn honest_converged_flag_when_budget_exhausted() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_subdivisions: 3,
            ..Default::default()
        };
        // needs many panels at this tolerance
        let r = quad1(|x: f64| (40.0 * x).sin().abs(), 0.0, 1.0, &cfg);
        assert!(!r.converged);
        assert!(r.error_estimate > 1e-13);
    }

    #[test]
    fn mc_uniform_mean() {
        let u = MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0));
        let cfg = QuadratureConfig {
            mc_samples: 100_000,
            mc_seed: 3,
            ..Default::default()
        };
        let r = integrate_mc(&|p: &[f64]| p[0], &u, &cfg).unwrap();
        assert!((r.value - 0.5).abs() <= 3.0 * r.error_estimate);
    }

    #[test]
    fn mc_gaussian_entropy_oracle() {
        let g = MixedDistribution::from_density(DensityFamily::gaussian1(0.0, 1.0));
        let cfg = QuadratureConfig {
            mc_samples: 200_000,
            mc_seed: 4,
            ..Default::default()
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let r = integrate_mc(
            &|p: &[f64]| 0.5 * two_pi.ln() + 0.5 * p[0] * p[0],
            &g,
            &cfg,
        )
        .unwrap();
        let truth = 0.5 * (two_pi * std::f64::consts::E).ln();
        assert!((r.value - truth).abs() <= 3.0 * r.error_estimate);
    }

    #[test]
    fn mc_constant_has_zero_se() {
        let u = MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0));
        let cfg = QuadratureConfig {
            mc_samples: 1000,
            ..Default::default()
        };
        let r = integrate_mc(&|_: &[f64]| 2.5, &u, &cfg).unwrap();
        assert_eq!(r.value, 2.5);
        assert_eq!(r.error_estimate, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn mc_all_non_finite_errors() {
        let u = MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0));
        let cfg = QuadratureConfig {
            mc_samples: 1000,
            ..Default::default()
        };
        let err = integrate_mc(&|_: &[f64]| f64::NAN, &u, &cfg).unwrap_err();
        assert!(matches!(err, Error::AllSamplesNonFinite));
    }

    #[test]
    fn truncate_support_cases() {
        let u = MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0));
        assert_eq!(
            truncate_support(&u, 1e-6).unwrap(),
            BoxDomain::interval(0.0, 1.0)
        );
        let p = MixedDistribution::from_density(DensityFamily::pyramid1(1.0, 0.0));
        assert_eq!(
            truncate_support(&p, 1e-6).unwrap(),
            BoxDomain::interval(-1.0, 1.0)
        );
        let g = MixedDistribution::from_density(DensityFamily::gaussian1(0.0, 1.0));
        let b = truncate_support(&g, 1e-10).unwrap();
        assert!((b.hi[0] - 6.4669).abs() < 1e-3, "got {:?}", b.hi);
        let atoms = MixedDistribution::atoms1(&[(0.0, 1.0)]).unwrap();
        assert!(truncate_support(&atoms, 1e-6).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-4, 1e4, 2);
        assert_eq!(g.len(), 17);
        assert!((g[0] - 1e-4).abs() < 1e-19);
        assert!((g[16] - 1e4).abs() < 1e-9);
        assert!((g[8] - 1.0).abs() < 1e-12);
    }
}
