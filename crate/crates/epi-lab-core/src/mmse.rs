//! Gaussian-noise specialization: conditional means, the MMSE curve
//! `M(X;gamma) = E ||X - E(X|X sqrt(g) + N)||^2` in the `Sigma^{-1}`-weighted
//! norm, the derivative identity tying it to mutual information, and entropy
//! representations as SNR integrals of the MMSE.

use crate::channel::{output_entropy, ChannelModel, OutputDensity};
use crate::distributions::DensityFamily;
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::quadrature::{log_grid, nested_quadrature, Estimate, QuadratureConfig};
use serde::{Deserialize, Serialize};

/// MMSE values along an ascending gamma grid, with the noise covariance that
/// defines the norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmseCurve {
    pub gamma_grid: Vec<f64>,
    pub m: Vec<f64>,
    pub errors: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// Entropy recovered from an MMSE integral, with a tail diagnostic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MmseEntropy {
    pub value: f64,
    pub error: f64,
    /// Set when `gamma * M(gamma)` has not settled near d at the grid end,
    /// so the analytic tail estimate is unreliable.
    pub tail_warning: bool,
}

fn gaussian_noise(ch: &ChannelModel) -> Result<&SpdMatrix> {
    match &ch.noise {
        DensityFamily::Gaussian(g) if g.mean.iter().all(|m| *m == 0.0) => Ok(&g.cov),
        DensityFamily::Gaussian(_) => Err(Error::Unsupported(
            "MMSE identities require centered Gaussian noise".into(),
        )),
        _ => Err(Error::Unsupported(
            "MMSE identities require Gaussian noise".into(),
        )),
    }
}

/// Posterior mean `E(X | X sqrt(g) + N = y)` via the ratio of quadratures.
pub fn conditional_mean(
    ch: &ChannelModel,
    gamma: f64,
    y: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    gaussian_noise(ch)?;
    if y.len() != ch.dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim(),
            got: y.len(),
        });
    }
    let out = OutputDensity::new(ch, gamma, cfg)?;
    let mut numerator = vec![0.0; ch.dim()];
    let fy = out.eval_numerator(y, &mut numerator)?;
    if !(fy > 1e-280) {
        return Err(Error::DenominatorUnderflow { y: y.to_vec() });
    }
    Ok(numerator.iter().map(|n| n / fy).collect())
}

/// `M(X;gamma)` by the total-variance route:
/// `E||X||^2 - int ||N(y)||^2 / f_Y(y) dy`, all in the `Sigma^{-1}` norm.
/// The subtracted integral is `E||E(X|Y)||^2`.
pub fn mmse(ch: &ChannelModel, gamma: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let sigma = gaussian_noise(ch)?;
    mmse_of_parts(
        ch.signal.atoms(),
        ch.signal
            .density()
            .map(|f| (f as &dyn crate::channel::SignalDensity, ch.signal.density_mass())),
        sigma,
        gamma,
        cfg,
    )
}

/// MMSE of a signal given as atoms plus an evaluable density part, against
/// noise `N(0, sigma)`. This is the entry point for derived laws (scaled
/// convolutions) that are not `MixedDistribution`s.
pub fn mmse_of_parts(
    atoms: &[crate::distributions::Atom],
    density: Option<(&dyn crate::channel::SignalDensity, f64)>,
    sigma: &SpdMatrix,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let d = sigma.dim();
    if d > 3 {
        return Err(Error::Unsupported(
            "deterministic MMSE supports d <= 3".into(),
        ));
    }
    // E <X, Sigma^{-1} X> from exact moments
    let mut second_moment = 0.0;
    for a in atoms {
        second_moment += a.mass * sigma.quad_form_inv(&a.location);
    }
    if let Some((f, w)) = &density {
        second_moment += w * (sigma.trace_inv_times(&f.covariance()) + sigma.quad_form_inv(&f.mean()));
    }

    let noise = DensityFamily::Gaussian(crate::distributions::Gaussian {
        mean: vec![0.0; d],
        cov: sigma.clone(),
    });
    let out = OutputDensity::from_parts(atoms, density, &noise, gamma, cfg)?;
    let boxes = out.y_boxes();
    let mut posterior_sq = 0.0;
    let mut error = 0.0;
    let mut numerator = vec![0.0; d];
    for b in &boxes {
        let mut integrand = |y: &[f64]| -> Result<f64> {
            let fy = out.eval_numerator(y, &mut numerator)?;
            if !(fy > 1e-280) {
                return Ok(0.0);
            }
            Ok(sigma.quad_form_inv(&numerator) / fy)
        };
        let est = nested_quadrature(
            &mut integrand,
            b,
            &|axis, _| out.y_axis_splits(axis),
            cfg.abs_tol,
            cfg.rel_tol,
            0.1,
            cfg.max_subdivisions,
        )?;
        posterior_sq += est.value;
        error += est.error;
    }
    Ok(Estimate {
        value: second_moment - posterior_sq,
        error: error + cfg.abs_tol * 0.1,
    })
}

/// MMSE along an ascending gamma grid.
pub fn mmse_curve(ch: &ChannelModel, grid: &[f64], cfg: &QuadratureConfig) -> Result<MmseCurve> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.is_empty() {
        return Err(Error::InvalidParameter(
            "gamma grid must be non-empty and strictly ascending".into(),
        ));
    }
    let sigma = gaussian_noise(ch)?.rows();
    let mut m = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    for &g in grid {
        let e = mmse(ch, g, cfg)?;
        m.push(e.value);
        errors.push(e.error);
    }
    Ok(MmseCurve {
        gamma_grid: grid.to_vec(),
        m,
        errors,
        sigma,
    })
}

/// `I(X : X sqrt(g) + N) + h(N / sqrt(g))` up to the constant `h(N) - h(U)`
/// bookkeeping: since `h(X,Y) = h(X) + h(N)`, the sum equals
/// `h(Y) - (d/2) ln g` exactly. One quadrature per evaluation.
fn info_plus_scaled_noise_entropy(
    ch: &ChannelModel,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let hy = output_entropy(ch, gamma, cfg)?;
    Ok(Estimate {
        value: hy.value - 0.5 * ch.dim() as f64 * gamma.ln(),
        error: hy.error,
    })
}

/// Absolute defect of the derivative identity
/// `d/dg [I + h(N/sqrt(g))] = M(X;g)/2 - d/(2g)`,
/// with a centered finite difference of width `fd_step` in log-gamma.
/// The scalar case is the classic identity; for d > 1 the right-hand side
/// carries the d-dimensional scaling of `h(N/sqrt(g))`.
pub fn debruijn_residual(
    ch: &ChannelModel,
    gamma: f64,
    fd_step: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    gaussian_noise(ch)?;
    if !(fd_step > 0.0 && gamma > fd_step) {
        return Err(Error::InvalidParameter("need gamma > fd_step > 0".into()));
    }
    let hi = info_plus_scaled_noise_entropy(ch, gamma * fd_step.exp(), cfg)?;
    let lo = info_plus_scaled_noise_entropy(ch, gamma * (-fd_step).exp(), cfg)?;
    let lhs = (hi.value - lo.value) / (2.0 * fd_step * gamma);
    let m = mmse(ch, gamma, cfg)?;
    let rhs = 0.5 * m.value - ch.dim() as f64 / (2.0 * gamma);
    Ok((lhs - rhs).abs())
}

fn tightened(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: cfg.abs_tol.min(1e-9),
        rel_tol: cfg.rel_tol.min(1e-9),
        ..cfg.clone()
    }
}

/// Trapezoid in log-gamma: `int g(x) dx = int x g(x) dlnx`.
fn trapezoid_log(grid: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..grid.len() {
        let dl = (grid[k] / grid[k - 1]).ln();
        acc += 0.5 * dl * (grid[k] * values[k] + grid[k - 1] * values[k - 1]);
    }
    acc
}

const GRID_POINTS_PER_DECADE: usize = 40;
const GRID_GAMMA_MIN: f64 = 1e-4;

/// Analytic tail `int_{gmax}^inf g(t) dt` for an integrand decaying like
/// `t^{-p}`: `g(gmax) gmax / (p - 1)`, with p fitted from the last two grid
/// values. Edge-of-support signals have p = 3/2 rather than the smooth-case
/// p = 2, so the exponent is measured rather than assumed.
fn power_tail(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    let g_end = values[n - 1];
    let g_prev = values[n - 2];
    let fallback = g_end * grid[n - 1];
    if g_end == 0.0 || g_prev == 0.0 || g_end.signum() != g_prev.signum() {
        return fallback;
    }
    let p = -(g_end.abs() / g_prev.abs()).ln() / (grid[n - 1] / grid[n - 2]).ln();
    if p > 1.1 {
        g_end * grid[n - 1] / (p - 1.0)
    } else {
        fallback
    }
}

/// `h(X) = h(N) + (1/2) int_0^inf [M(X;g) - 1(g>1) d/g] dg` for a
/// pure-density signal and N(0, I) noise. The grid covers
/// `[1e-4, gamma_max]` at 40 points per decade with `g = 1` as a grid point;
/// the head is `M(X;0) gamma_min`, the tail uses `g M -> d`.
pub fn entropy_via_mmse(
    ch: &ChannelModel,
    cfg: &QuadratureConfig,
    gamma_max: f64,
) -> Result<MmseEntropy> {
    let sigma = gaussian_noise(ch)?;
    if !sigma.is_diagonal() || (0..sigma.dim()).any(|i| sigma.get(i, i) != 1.0) {
        return Err(Error::Unsupported(
            "the MMSE entropy representation requires N(0, I) noise".into(),
        ));
    }
    if !ch.signal.is_pure_density() {
        // the differential-entropy route breaks for laws with atoms
        return Err(Error::Unsupported(
            "the MMSE entropy representation requires a pure-density signal".into(),
        ));
    }
    if !(gamma_max > 1.0) {
        return Err(Error::InvalidParameter("gamma_max must exceed 1".into()));
    }
    let d = ch.dim() as f64;
    let inner = tightened(cfg);

    let mut grid = log_grid(GRID_GAMMA_MIN, gamma_max, GRID_POINTS_PER_DECADE);
    if !grid.iter().any(|g| (*g - 1.0).abs() < 1e-12) {
        grid.push(1.0);
        grid.sort_by(f64::total_cmp);
    }
    let split = grid.iter().position(|g| (*g - 1.0).abs() < 1e-12).unwrap();

    let mut m = Vec::with_capacity(grid.len());
    let mut m_err_weighted = 0.0;
    for (k, &g) in grid.iter().enumerate() {
        let e = mmse(ch, g, &inner)?;
        m.push(e.value);
        let w = if k == 0 {
            (grid[1] / grid[0]).ln()
        } else if k + 1 == grid.len() {
            (grid[k] / grid[k - 1]).ln()
        } else {
            (grid[k + 1] / grid[k - 1]).ln()
        };
        m_err_weighted += 0.5 * w * g * e.error;
    }

    // int_0^1 M dg  (head below the grid: M is continuous at 0)
    let m0 = ch.signal.centered_second_moment_quad_form(sigma);
    let head = m0 * grid[0];
    let i_low = trapezoid_log(&grid[..=split], &m[..=split]);
    // int_1^inf (M - d/g) dg, tail from M - d/g ~ -kappa/g^2
    let shifted: Vec<f64> = grid[split..]
        .iter()
        .zip(&m[split..])
        .map(|(g, mv)| mv - d / g)
        .collect();
    let i_high = trapezoid_log(&grid[split..], &shifted);
    let gm_end = grid.last().unwrap() * m.last().unwrap();
    let tail = power_tail(&grid[split..], &shifted);

    let h_noise = 0.5 * d * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    Ok(MmseEntropy {
        value: h_noise + 0.5 * (head + i_low + i_high + tail),
        error: m_err_weighted + 0.1 * (head.abs() + tail.abs()),
        tail_warning: (gm_end / d - 1.0).abs() > 0.1,
    })
}

/// Scalar alternative centered on the signal variance:
/// `h(X) = (1/2) ln(2 pi e s2) - (1/2) int_0^inf [s2/(1+g s2) - M(X;g)] dg`.
/// Must agree with [`entropy_via_mmse`] within combined tolerance.
pub fn entropy_via_mmse_centered(ch: &ChannelModel, cfg: &QuadratureConfig) -> Result<MmseEntropy> {
    let sigma = gaussian_noise(ch)?;
    if ch.dim() != 1 {
        return Err(Error::Unsupported(
            "the variance-centered representation is stated for d = 1".into(),
        ));
    }
    if sigma.get(0, 0) != 1.0 {
        return Err(Error::Unsupported(
            "the variance-centered representation requires N(0, 1) noise".into(),
        ));
    }
    if !ch.signal.is_pure_density() {
        return Err(Error::Unsupported(
            "the MMSE entropy representation requires a pure-density signal".into(),
        ));
    }
    let s2 = ch.signal.covariance()[0][0];
    let inner = tightened(cfg);
    let grid = log_grid(GRID_GAMMA_MIN, 1e4, GRID_POINTS_PER_DECADE);
    let mut vals = Vec::with_capacity(grid.len());
    let mut err_weighted = 0.0;
    let mut m_end = 0.0;
    for &g in &grid {
        let e = mmse(ch, g, &inner)?;
        vals.push(s2 / (1.0 + g * s2) - e.value);
        err_weighted += 0.06 * g * e.error;
        m_end = e.value;
    }
    let integral = trapezoid_log(&grid, &vals);
    // integrand vanishes linearly at 0; the tail exponent is measured
    let head = 0.5 * vals[0] * grid[0];
    let tail = power_tail(&grid, &vals);
    let gm_end = grid.last().unwrap() * m_end;
    Ok(MmseEntropy {
        value: 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s2).ln()
            - 0.5 * (head + integral + tail),
        error: err_weighted + 0.1 * (head.abs() + tail.abs()),
        tail_warning: (gm_end - 1.0).abs() > 0.1,
    })
}
