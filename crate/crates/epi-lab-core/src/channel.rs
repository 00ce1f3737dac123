//! The additive channel `Y = X sqrt(gamma) + U`: output density, joint,
//! conditional, and mutual entropies for continuous, discrete, and mixed
//! signal laws.
//!
//! Entropies use the general convention throughout: Shannon sums over atoms,
//! differential integrals over densities, in nats. Under this parametrization
//! `h(Y|X) = h(U)` exactly (translation invariance), so the joint entropy is
//! assembled as `h(X,Y) = h(X) + h(U)` rather than integrated.

use crate::distributions::{Atom, DensityFamily, MixedDistribution};
use crate::error::{Error, Result};
use crate::geom::{disjoint_cover, BoxDomain};
use crate::quadrature::{
    adaptive_1d, integrate_mc_with, nested_quadrature, Estimate, QuadratureConfig,
};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// How a result was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

/// Additive-noise channel: signal law X, noise density U, `Y = X sqrt(g) + U`.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub signal: MixedDistribution,
    pub noise: DensityFamily,
}

impl ChannelModel {
    pub fn new(signal: MixedDistribution, noise: DensityFamily) -> Result<Self> {
        if signal.dim() != noise.dim() {
            return Err(Error::DimensionMismatch {
                expected: signal.dim(),
                got: noise.dim(),
            });
        }
        Ok(Self { signal, noise })
    }

    pub fn dim(&self) -> usize {
        self.signal.dim()
    }
}

/// Per-gamma entropy bundle for one channel evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyBreakdown {
    pub h_x: f64,
    pub h_y: f64,
    pub h_xy: f64,
    pub h_x_given_y: f64,
    /// Mutual information `h(X) - h(X|Y)`, the primary route. The alternative
    /// route `h(X) + h(Y) - h(X,Y)` is reconstructable from the fields.
    pub i: f64,
    pub gamma: f64,
    pub method: Method,
    pub error_estimate: f64,
}

impl EntropyBreakdown {
    /// Mutual information via the joint-entropy route.
    pub fn i_via_joint(&self) -> f64 {
        self.h_x + self.h_y - self.h_xy
    }
}

/// Probability mass left outside a `radius`-sigma Gaussian truncation box.
fn truncation_mass_tol(radius: f64, dim: usize) -> f64 {
    (dim as f64 * erfc(radius / std::f64::consts::SQRT_2)).max(1e-300)
}

/// An evaluable pure density: what the channel machinery needs from a signal's
/// absolutely continuous part. Implemented by [`DensityFamily`] and by derived
/// laws such as convolutions of families.
pub trait SignalDensity: Sync {
    fn dim(&self) -> usize;
    fn pdf_at(&self, x: &[f64]) -> Result<f64>;
    fn support(&self, mass_tol: f64) -> BoxDomain;
    fn axis_splits(&self, axis: usize) -> Vec<f64>;
    fn mean(&self) -> Vec<f64>;
    fn covariance(&self) -> Vec<Vec<f64>>;
}

impl SignalDensity for DensityFamily {
    fn dim(&self) -> usize {
        DensityFamily::dim(self)
    }
    fn pdf_at(&self, x: &[f64]) -> Result<f64> {
        Ok(self.pdf(x))
    }
    fn support(&self, mass_tol: f64) -> BoxDomain {
        DensityFamily::support(self, mass_tol)
    }
    fn axis_splits(&self, axis: usize) -> Vec<f64> {
        DensityFamily::axis_splits(self, axis)
    }
    fn mean(&self) -> Vec<f64> {
        DensityFamily::mean(self)
    }
    fn covariance(&self) -> Vec<Vec<f64>> {
        DensityFamily::covariance(self)
    }
}

/// Prepared evaluator for the marginal density of `Y = X sqrt(g) + U`:
/// `f_Y(t) = sum_i p_i f_U(t - x_i sqrt(g)) + int f_X(u) f_U(t - u sqrt(g)) du`.
pub struct OutputDensity<'a> {
    atoms: &'a [Atom],
    density: Option<(&'a dyn SignalDensity, f64)>,
    noise: &'a DensityFamily,
    gamma: f64,
    sqrt_gamma: f64,
    dim: usize,
    x_box: Option<BoxDomain>,
    noise_box: BoxDomain,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
}

impl<'a> OutputDensity<'a> {
    pub fn new(ch: &'a ChannelModel, gamma: f64, cfg: &QuadratureConfig) -> Result<Self> {
        Self::from_parts(
            ch.signal.atoms(),
            ch.signal
                .density()
                .map(|f| (f as &dyn SignalDensity, ch.signal.density_mass())),
            &ch.noise,
            gamma,
            cfg,
        )
    }

    pub fn from_parts(
        atoms: &'a [Atom],
        density: Option<(&'a dyn SignalDensity, f64)>,
        noise: &'a DensityFamily,
        gamma: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        let dim = noise.dim();
        let mass_tol = truncation_mass_tol(cfg.truncation_radius, dim);
        let x_box = density.as_ref().map(|(f, _)| f.support(mass_tol));
        let noise_box = noise.support(mass_tol);
        Ok(Self {
            atoms,
            density,
            noise,
            gamma,
            sqrt_gamma: gamma.sqrt(),
            dim,
            x_box,
            noise_box,
            // the inner convolution runs well below the caller's tolerance
            abs_tol: cfg.abs_tol * 1e-3,
            rel_tol: cfg.rel_tol * 1e-2,
            max_subdivisions: cfg.max_subdivisions,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn atom_sum(&self, t: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut diff = [0.0f64; 8];
        for a in self.atoms {
            for i in 0..self.dim {
                diff[i] = t[i] - a.location[i] * self.sqrt_gamma;
            }
            acc += a.mass * self.noise.pdf(&diff[..self.dim]);
        }
        acc
    }

    /// Integration window in u-space: supp f_X intersected with the preimage
    /// of the truncated noise support. Empty window means zero contribution.
    fn window(&self, t: &[f64]) -> Option<BoxDomain> {
        let x_box = self.x_box.as_ref()?;
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let a = (t[i] - self.noise_box.hi[i]) / self.sqrt_gamma;
            let b = (t[i] - self.noise_box.lo[i]) / self.sqrt_gamma;
            let l = a.max(x_box.lo[i]);
            let h = b.min(x_box.hi[i]);
            if !(l < h) {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        Some(BoxDomain { lo, hi })
    }

    fn window_splits(&self, axis: usize, t: &[f64]) -> Vec<f64> {
        let mut v = match &self.density {
            Some((f, _)) => f.axis_splits(axis),
            None => vec![],
        };
        for s in self.noise.axis_splits(axis) {
            v.push((t[axis] - s) / self.sqrt_gamma);
        }
        v
    }

    /// `f_Y(t)`.
    pub fn eval(&self, t: &[f64]) -> Result<f64> {
        let mut total = self.atom_sum(t);
        if let Some((f, mass)) = &self.density {
            if let Some(window) = self.window(t) {
                let sg = self.sqrt_gamma;
                let mut noise_arg = vec![0.0; self.dim];
                let mut integrand = |u: &[f64]| -> Result<f64> {
                    for i in 0..self.dim {
                        noise_arg[i] = t[i] - u[i] * sg;
                    }
                    Ok(f.pdf_at(u)? * self.noise.pdf(&noise_arg))
                };
                let est = nested_quadrature(
                    &mut integrand,
                    &window,
                    &|axis, _| self.window_splits(axis, t),
                    self.abs_tol,
                    self.rel_tol,
                    0.1,
                    self.max_subdivisions,
                )?;
                total += mass * est.value;
            }
        }
        Ok(total)
    }

    /// `f_Y(t)` together with the posterior-mean numerator
    /// `N_i(t) = sum_j p_j x_{j,i} f_U(t - x_j sqrt(g)) + int u_i f_X(u) f_U(t - u sqrt(g)) du`.
    pub fn eval_numerator(&self, t: &[f64], numerator: &mut [f64]) -> Result<f64> {
        let mut diff = [0.0f64; 8];
        numerator.fill(0.0);
        let mut total = 0.0;
        for a in self.atoms {
            for i in 0..self.dim {
                diff[i] = t[i] - a.location[i] * self.sqrt_gamma;
            }
            let w = a.mass * self.noise.pdf(&diff[..self.dim]);
            total += w;
            for i in 0..self.dim {
                numerator[i] += w * a.location[i];
            }
        }
        if let Some((f, mass)) = &self.density {
            if let Some(window) = self.window(t) {
                let sg = self.sqrt_gamma;
                // component -1 is the density itself, k >= 0 weights by u_k
                for k in 0..=self.dim {
                    let mut noise_arg = vec![0.0; self.dim];
                    let mut integrand = |u: &[f64]| -> Result<f64> {
                        for i in 0..self.dim {
                            noise_arg[i] = t[i] - u[i] * sg;
                        }
                        let base = f.pdf_at(u)? * self.noise.pdf(&noise_arg);
                        Ok(if k == 0 { base } else { base * u[k - 1] })
                    };
                    let est = nested_quadrature(
                        &mut integrand,
                        &window,
                        &|axis, _| self.window_splits(axis, t),
                        self.abs_tol,
                        self.rel_tol,
                        0.1,
                        self.max_subdivisions,
                    )?;
                    if k == 0 {
                        total += mass * est.value;
                    } else {
                        numerator[k - 1] += mass * est.value;
                    }
                }
            }
        }
        Ok(total)
    }

    /// Disjoint boxes covering the effective support of `f_Y`: one per atom
    /// bump plus the image of the density support, merged where they overlap.
    pub fn y_boxes(&self) -> Vec<BoxDomain> {
        let mut boxes = Vec::new();
        for a in self.atoms {
            boxes.push(BoxDomain {
                lo: (0..self.dim)
                    .map(|i| a.location[i] * self.sqrt_gamma + self.noise_box.lo[i])
                    .collect(),
                hi: (0..self.dim)
                    .map(|i| a.location[i] * self.sqrt_gamma + self.noise_box.hi[i])
                    .collect(),
            });
        }
        if let Some(xb) = &self.x_box {
            boxes.push(BoxDomain {
                lo: (0..self.dim)
                    .map(|i| xb.lo[i] * self.sqrt_gamma + self.noise_box.lo[i])
                    .collect(),
                hi: (0..self.dim)
                    .map(|i| xb.hi[i] * self.sqrt_gamma + self.noise_box.hi[i])
                    .collect(),
            });
        }
        disjoint_cover(boxes)
    }

    /// Kink coordinates of `f_Y` along an axis: convolution kinks sit at sums
    /// of signal and noise kinks; atom bumps inherit the noise kinks.
    pub fn y_axis_splits(&self, axis: usize) -> Vec<f64> {
        let noise_splits = self.noise.axis_splits(axis);
        let mut v = Vec::new();
        for a in self.atoms {
            for s in &noise_splits {
                v.push(a.location[axis] * self.sqrt_gamma + s);
            }
        }
        if let Some((f, _)) = &self.density {
            for sx in f.axis_splits(axis) {
                for s in &noise_splits {
                    v.push(sx * self.sqrt_gamma + s);
                }
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Marginal density of Y at a point (the generalized convolution form).
pub fn output_density(
    ch: &ChannelModel,
    gamma: f64,
    y: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if y.len() != ch.dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim(),
            got: y.len(),
        });
    }
    OutputDensity::new(ch, gamma, cfg)?.eval(y)
}

/// `-int f ln f` for a fallible density evaluator over disjoint boxes.
/// `0 ln 0 = 0` throughout.
pub(crate) fn entropy_of_eval(
    eval: &mut dyn FnMut(&[f64]) -> Result<f64>,
    boxes: &[BoxDomain],
    splits_for: &dyn Fn(usize, &[f64]) -> Vec<f64>,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    let mut value = 0.0;
    let mut error = 0.0;
    for b in boxes {
        let mut integrand = |p: &[f64]| -> Result<f64> {
            let v = eval(p)?;
            Ok(if v > 0.0 { -v * v.ln() } else { 0.0 })
        };
        let est = nested_quadrature(
            &mut integrand,
            b,
            splits_for,
            abs_tol,
            rel_tol,
            0.1,
            max_subdivisions,
        )?;
        value += est.value;
        error += est.error;
    }
    Ok(Estimate { value, error })
}

/// Differential entropy of the noise, closed form where available.
pub fn noise_entropy(noise: &DensityFamily, cfg: &QuadratureConfig) -> Result<Estimate> {
    if let Some(h) = noise.entropy_closed() {
        return Ok(Estimate::exact(h));
    }
    let mass_tol = truncation_mass_tol(cfg.truncation_radius, noise.dim());
    let boxes = [noise.support(mass_tol)];
    entropy_of_eval(
        &mut |p| Ok(noise.pdf(p)),
        &boxes,
        &|axis, _| noise.axis_splits(axis),
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )
}

/// General entropy of a mixed law: Shannon part over atoms plus the
/// differential part over the density; closed forms preferred.
pub fn general_entropy(dist: &MixedDistribution, cfg: &QuadratureConfig) -> Result<Estimate> {
    if let Some(h) = dist.closed_form_entropy() {
        return Ok(Estimate::exact(h));
    }
    let shannon: f64 = -dist
        .atoms()
        .iter()
        .map(|a| a.mass * a.mass.ln())
        .sum::<f64>();
    let density = dist.density().ok_or(Error::NoDensity)?;
    let mass_tol = truncation_mass_tol(cfg.truncation_radius, dist.dim());
    let boxes = [density.support(mass_tol)];
    let w = dist.density_mass();
    let est = entropy_of_eval(
        &mut |p| Ok(w * density.pdf(p)),
        &boxes,
        &|axis, _| density.axis_splits(axis),
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;
    Ok(Estimate {
        value: shannon + est.value,
        error: est.error,
    })
}

/// Differential entropy of the channel output `h(Y)` by quadrature over the
/// union of atom-bump boxes and the density image box.
pub fn output_entropy(ch: &ChannelModel, gamma: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let d = ch.dim();
    if d > 2 {
        if let Some(axes) = per_axis_channels(ch) {
            return axes.iter().try_fold(Estimate::exact(0.0), |acc, ch1| {
                let e = output_entropy(ch1, gamma, cfg)?;
                Ok(Estimate {
                    value: acc.value + e.value,
                    error: acc.error + e.error,
                })
            });
        }
        return Err(Error::Unsupported(
            "output entropy beyond d = 2 needs a coordinate-factorizable channel".into(),
        ));
    }
    let out = OutputDensity::new(ch, gamma, cfg)?;
    let boxes = out.y_boxes();
    let mut est = entropy_of_eval(
        &mut |p| out.eval(p),
        &boxes,
        &|axis, _| out.y_axis_splits(axis),
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;
    est.error += cfg.abs_tol * 0.1; // inner f_Y evaluations run 1e-3 below
    Ok(est)
}

/// Split the channel into independent scalar channels when both the signal
/// density and the noise factorize across axes (and there are no atoms).
pub fn per_axis_channels(ch: &ChannelModel) -> Option<Vec<ChannelModel>> {
    if !ch.signal.is_pure_density() {
        return None;
    }
    let sig = ch.signal.density()?.axis_marginals()?;
    let noi = ch.noise.axis_marginals()?;
    Some(
        sig.into_iter()
            .zip(noi)
            .map(|(s, n)| ChannelModel {
                signal: MixedDistribution::from_density(s),
                noise: n,
            })
            .collect(),
    )
}

/// Boundary-layer seed points: each support edge or kink `s` of the signal
/// density generates structure of width ~ 1/sqrt(gamma) in the outer x
/// integral at high SNR. Seeding panel edges there protects the adaptive rule
/// from false convergence on very thin layers.
fn layer_seeds(splits: &[f64], sqrt_gamma: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(splits.len() * 7);
    for s in splits {
        v.push(*s);
        if sqrt_gamma > 4.0 {
            for k in [1.0, 4.0, 16.0] {
                v.push(s + k / sqrt_gamma);
                v.push(s - k / sqrt_gamma);
            }
        }
    }
    v
}

/// `h(X|Y) - h(U/sqrt(g))` for a pure-density signal: the double integral
/// `int f_X(x) int f_U(y) ln [ J(x,y) / f_X(x) ] dy dx` with
/// `J(x,y) = g^{d/2} f_Y(y + x sqrt(g))`, which is the noise-smoothed signal
/// density. Vanishes as gamma grows; equals `h(X) - h(U) - I - (d/2) ln g`...
/// in all regimes the direct integral avoids catastrophic cancellation.
///
/// Deterministic nested quadrature for d = 1; seeded Monte Carlo over
/// `f_X x f_U` for d >= 2 (the nested integral would be 3d-dimensional).
pub fn conditional_gap_continuous(
    ch: &ChannelModel,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<(Estimate, Method)> {
    if !ch.signal.is_pure_density() {
        return Err(Error::Unsupported(
            "the continuous conditional entropy needs a pure-density signal".into(),
        ));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let d = ch.dim();
    if d == 1 {
        Ok((gap_deterministic_1d(ch, gamma, cfg)?, Method::Quadrature))
    } else {
        Ok((gap_monte_carlo(ch, gamma, cfg)?, Method::MonteCarlo))
    }
}

fn gap_deterministic_1d(
    ch: &ChannelModel,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let sg = gamma.sqrt();
    let out = OutputDensity::new(ch, gamma, cfg)?;
    let signal_density = ch.signal.density().expect("pure density");
    let mass_tol = truncation_mass_tol(cfg.truncation_radius, 1);
    let x_box = signal_density.support(mass_tol);
    let noise_box = ch.noise.support(mass_tol);

    let mut x_splits = signal_density.axis_splits(0);
    x_splits.push(x_box.lo[0]);
    x_splits.push(x_box.hi[0]);
    let x_seeds = layer_seeds(&x_splits, sg);
    let noise_splits = ch.noise.axis_splits(0);
    let sig_splits = signal_density.axis_splits(0);

    let mut inner_err_sum = 0.0;
    let mut inner_count = 0u64;
    let y_abs = cfg.abs_tol * 0.1;
    let y_rel = cfg.rel_tol * 0.1;

    let mut outer = |x: f64| -> Result<f64> {
        let fx = ch.signal.density_at(&[x])?;
        if fx <= 0.0 {
            return Ok(0.0);
        }
        let ln_fx = fx.ln();
        // kinks of y -> f_Y(y + x sqrt(g)) sit at sums of mapped kinks
        let mut y_splits = noise_splits.clone();
        for s in &sig_splits {
            for u in noise_splits.iter().chain(std::iter::once(&0.0)) {
                y_splits.push(sg * (s - x) + u);
            }
        }
        let mut inner = |y: f64| -> Result<f64> {
            let fu = ch.noise.pdf(&[y]);
            if fu <= 0.0 {
                return Ok(0.0);
            }
            let t = y + x * sg;
            let fy = out.eval(&[t]).map_err(|e| Error::InnerIntegral {
                x: vec![x],
                y: vec![y],
                source: Box::new(e),
            })?;
            let j = (sg * fy).max(1e-300);
            Ok(fu * (j.ln() - ln_fx))
        };
        let r = adaptive_1d(
            &mut inner,
            noise_box.lo[0],
            noise_box.hi[0],
            y_abs,
            y_rel,
            cfg.max_subdivisions,
            &y_splits,
        )?;
        inner_err_sum += r.error_estimate;
        inner_count += 1;
        Ok(fx * r.value)
    };

    let r = adaptive_1d(
        &mut outer,
        x_box.lo[0],
        x_box.hi[0],
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
        &x_seeds,
    )?;
    let propagated = if inner_count > 0 {
        (x_box.hi[0] - x_box.lo[0]) * inner_err_sum / inner_count as f64
    } else {
        0.0
    };
    Ok(Estimate {
        value: r.value,
        error: r.error_estimate + propagated + cfg.abs_tol * 0.1,
    })
}

fn gap_monte_carlo(ch: &ChannelModel, gamma: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let d = ch.dim();
    let sg = gamma.sqrt();
    let inner_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol.min(1e-8),
        rel_tol: cfg.rel_tol.min(1e-7),
        ..cfg.clone()
    };
    let axis_channels = per_axis_channels(ch);
    let axis_outs: Option<Vec<OutputDensity>> = match &axis_channels {
        Some(chs) => Some(
            chs.iter()
                .map(|c| OutputDensity::new(c, gamma, &inner_cfg))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let full_out = if axis_outs.is_none() {
        Some(OutputDensity::new(ch, gamma, &inner_cfg)?)
    } else {
        None
    };
    if full_out.is_some() && d > 3 {
        return Err(Error::Unsupported(
            "d > 3 needs a coordinate-factorizable channel for the Monte Carlo path".into(),
        ));
    }

    let signal = &ch.signal;
    let noise = &ch.noise;
    let first_error = std::cell::RefCell::new(None::<Error>);
    let g = |p: &[f64]| -> f64 {
        let (x, y) = p.split_at(d);
        let fx = match signal.density_at(x) {
            Ok(v) => v,
            Err(e) => {
                first_error.borrow_mut().get_or_insert(e);
                return f64::NAN;
            }
        };
        if fx <= 0.0 {
            return f64::NAN; // measure-zero boundary draw, skipped
        }
        let mut t = [0.0f64; 8];
        for i in 0..d {
            t[i] = y[i] + x[i] * sg;
        }
        let fy = if let Some(outs) = &axis_outs {
            let mut prod = 1.0;
            for (i, o) in outs.iter().enumerate() {
                match o.eval(&t[i..=i]) {
                    Ok(v) => prod *= v,
                    Err(e) => {
                        first_error.borrow_mut().get_or_insert(e);
                        return f64::NAN;
                    }
                }
            }
            prod
        } else {
            match full_out.as_ref().unwrap().eval(&t[..d]) {
                Ok(v) => v,
                Err(e) => {
                    first_error.borrow_mut().get_or_insert(e);
                    return f64::NAN;
                }
            }
        };
        let j = (sg.powi(d as i32) * fy).max(1e-300);
        j.ln() - fx.ln()
    };

    let mut sample = |rng: &mut rand_chacha::ChaCha8Rng, buf: &mut [f64]| {
        let (x, y) = buf.split_at_mut(d);
        signal.sample_into(rng, x);
        noise.sample_into(rng, y);
    };
    let r = integrate_mc_with(
        &g,
        &mut sample,
        2 * d,
        cfg.mc_samples,
        cfg.mc_seed,
        cfg.abs_tol,
        cfg.rel_tol,
    )?;
    if let Some(e) = first_error.into_inner() {
        return Err(e);
    }
    Ok(Estimate {
        value: r.value,
        error: r.error_estimate,
    })
}

/// `h(X|Y)` for a pure-density signal.
pub fn conditional_entropy_continuous(
    ch: &ChannelModel,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let (gap, _) = conditional_gap_continuous(ch, gamma, cfg)?;
    let hu = noise_entropy(&ch.noise, cfg)?;
    let d = ch.dim() as f64;
    Ok(Estimate {
        value: gap.value + hu.value - 0.5 * d * gamma.ln(),
        error: gap.error + hu.error,
    })
}

fn softplus(ln_t: f64) -> f64 {
    if ln_t > 700.0 {
        ln_t
    } else {
        ln_t.exp().ln_1p()
    }
}

/// `h(X|Y)` for a finite pure-atom signal, via the translated log-ratio form:
/// `sum_i p_i int f_U(y) ln [1 + sum_{j != i} (p_j/p_i)
///  f_U(y - (x_j - x_i) sqrt(g)) / f_U(y)] dy`, evaluated in log space.
pub fn conditional_entropy_discrete(
    ch: &ChannelModel,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !ch.signal.is_pure_atoms() {
        return Err(Error::Unsupported(
            "the discrete conditional entropy needs a pure-atom signal".into(),
        ));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let d = ch.dim();
    if d > 3 {
        return Err(Error::Unsupported(
            "deterministic quadrature supports d <= 3".into(),
        ));
    }
    let atoms = ch.signal.atoms();
    let sg = gamma.sqrt();
    if atoms.len() == 1 {
        return Ok(Estimate::exact(0.0)); // constant signal: h(X|Y) = 0
    }
    let mass_tol = truncation_mass_tol(cfg.truncation_radius, d);
    let noise_box = ch.noise.support(mass_tol);
    let noise = &ch.noise;

    let mut value = 0.0;
    let mut error = 0.0;
    for (i, ai) in atoms.iter().enumerate() {
        let ln_pi = ai.mass.ln();
        // translates x_j - x_i, scaled
        let shifts: Vec<(f64, Vec<f64>)> = atoms
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, aj)| {
                (
                    aj.mass.ln(),
                    (0..d)
                        .map(|k| (aj.location[k] - ai.location[k]) * sg)
                        .collect(),
                )
            })
            .collect();
        let splits_for = |axis: usize, _partial: &[f64]| -> Vec<f64> {
            let mut v = noise.axis_splits(axis);
            for (_, sh) in &shifts {
                for s in noise.axis_splits(axis) {
                    v.push(s + sh[axis]);
                }
            }
            v
        };
        let mut buf = vec![0.0; d];
        let mut integrand = |y: &[f64]| -> Result<f64> {
            let fu = noise.pdf(y);
            if fu <= 0.0 {
                return Ok(0.0);
            }
            let psi_y = noise.log_pdf(y);
            // ln T via log-sum-exp over the translated terms
            let mut max_term = f64::NEG_INFINITY;
            let mut terms = Vec::with_capacity(shifts.len());
            for (ln_pj, sh) in &shifts {
                for k in 0..d {
                    buf[k] = y[k] - sh[k];
                }
                let term = ln_pj - ln_pi + noise.log_pdf(&buf) - psi_y;
                terms.push(term);
                if term > max_term {
                    max_term = term;
                }
            }
            let ln_t = if max_term == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                max_term
                    + terms
                        .iter()
                        .map(|t| (t - max_term).exp())
                        .sum::<f64>()
                        .ln()
            };
            let lg = if ln_t == f64::NEG_INFINITY {
                0.0
            } else {
                softplus(ln_t)
            };
            Ok(fu * lg)
        };
        let est = nested_quadrature(
            &mut integrand,
            &noise_box,
            &splits_for,
            cfg.abs_tol,
            cfg.rel_tol,
            0.1,
            cfg.max_subdivisions,
        )?;
        value += ai.mass * est.value;
        error += ai.mass * est.error;
    }
    Ok(Estimate { value, error })
}

/// `h(X|Y)` for a general mixed signal. Reduces to the continuous and
/// discrete forms exactly (identical code paths) when the signal is pure.
pub fn conditional_entropy_mixed(
    ch: &ChannelModel,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if ch.signal.is_pure_density() {
        return conditional_entropy_continuous(ch, gamma, cfg);
    }
    if ch.signal.is_pure_atoms() {
        return conditional_entropy_discrete(ch, gamma, cfg);
    }
    let d = ch.dim();
    if d > 3 {
        return Err(Error::Unsupported(
            "deterministic quadrature supports d <= 3".into(),
        ));
    }
    let sg = gamma.sqrt();
    let out = OutputDensity::new(ch, gamma, cfg)?;
    let mass_tol = truncation_mass_tol(cfg.truncation_radius, d);
    let noise_box = ch.noise.support(mass_tol);
    let noise = &ch.noise;
    let signal = &ch.signal;

    let noise_splits_for =
        |axis: usize, _p: &[f64]| -> Vec<f64> { noise.axis_splits(axis) };

    // atom rows: p_i * int f_U(y) ln [ f_Y(y + x_i sqrt(g)) / (p_i f_U(y)) ] dy
    let mut value = 0.0;
    let mut error = 0.0;
    for a in signal.atoms() {
        let ln_pi = a.mass.ln();
        let mut t = vec![0.0; d];
        let mut integrand = |y: &[f64]| -> Result<f64> {
            let fu = noise.pdf(y);
            if fu <= 0.0 {
                return Ok(0.0);
            }
            for k in 0..d {
                t[k] = y[k] + a.location[k] * sg;
            }
            let fy = out.eval(&t)?.max(1e-300);
            Ok(fu * (fy.ln() - ln_pi - fu.ln()))
        };
        let est = nested_quadrature(
            &mut integrand,
            &noise_box,
            &noise_splits_for,
            cfg.abs_tol,
            cfg.rel_tol,
            0.1,
            cfg.max_subdivisions,
        )?;
        value += a.mass * est.value;
        error += a.mass * est.error;
    }

    // density row: int f_X(x) int f_U(y) ln [ f_Y(y + x sqrt(g)) / (f_X(x) f_U(y)) ] dy dx
    if let Some(density) = signal.density() {
        let x_box = density.support(mass_tol);
        let mut x_splits = density.axis_splits(0);
        x_splits.push(x_box.lo[0]);
        x_splits.push(x_box.hi[0]);
        if d != 1 {
            return Err(Error::Unsupported(
                "mixed signals with a density part are deterministic for d = 1 only".into(),
            ));
        }
        let x_seeds = layer_seeds(&x_splits, sg);
        let mut inner_err_sum = 0.0;
        let mut inner_count = 0u64;
        let mut outer = |x: f64| -> Result<f64> {
            let fx = signal.density_at(&[x])?;
            if fx <= 0.0 {
                return Ok(0.0);
            }
            let ln_fx = fx.ln();
            let mut inner = |y: f64| -> Result<f64> {
                let fu = noise.pdf(&[y]);
                if fu <= 0.0 {
                    return Ok(0.0);
                }
                let fy = out
                    .eval(&[y + x * sg])
                    .map_err(|e| Error::InnerIntegral {
                        x: vec![x],
                        y: vec![y],
                        source: Box::new(e),
                    })?
                    .max(1e-300);
                Ok(fu * (fy.ln() - ln_fx - fu.ln()))
            };
            let r = adaptive_1d(
                &mut inner,
                noise_box.lo[0],
                noise_box.hi[0],
                cfg.abs_tol * 0.1,
                cfg.rel_tol * 0.1,
                cfg.max_subdivisions,
                &noise.axis_splits(0),
            )?;
            inner_err_sum += r.error_estimate;
            inner_count += 1;
            Ok(fx * r.value)
        };
        let r = adaptive_1d(
            &mut outer,
            x_box.lo[0],
            x_box.hi[0],
            cfg.abs_tol,
            cfg.rel_tol,
            cfg.max_subdivisions,
            &x_seeds,
        )?;
        value += r.value;
        error += r.error_estimate
            + if inner_count > 0 {
                (x_box.hi[0] - x_box.lo[0]) * inner_err_sum / inner_count as f64
            } else {
                0.0
            };
    }
    Ok(Estimate {
        value,
        error: error + cfg.abs_tol * 0.1,
    })
}

/// Full entropy bundle at one gamma. `I` uses the `h(X) - h(X|Y)` route;
/// `h(Y)` is computed independently so the joint route can be cross-checked.
pub fn mutual_information(
    ch: &ChannelModel,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<EntropyBreakdown> {
    let h_x = general_entropy(&ch.signal, cfg)?;
    let h_u = noise_entropy(&ch.noise, cfg)?;
    let (h_x_given_y, method) = if ch.signal.is_pure_density() {
        let (gap, m) = conditional_gap_continuous(ch, gamma, cfg)?;
        (
            Estimate {
                value: gap.value + h_u.value - 0.5 * ch.dim() as f64 * gamma.ln(),
                error: gap.error + h_u.error,
            },
            m,
        )
    } else {
        (
            conditional_entropy_mixed(ch, gamma, cfg)?,
            Method::Quadrature,
        )
    };
    let h_y = if ch.dim() == 1 {
        output_entropy(ch, gamma, cfg)?
    } else if let Some(axes) = per_axis_channels(ch) {
        let mut acc = Estimate::exact(0.0);
        for c in &axes {
            let e = output_entropy(c, gamma, cfg)?;
            acc.value += e.value;
            acc.error += e.error;
        }
        acc
    } else if ch.dim() == 2 {
        output_entropy(ch, gamma, cfg)?
    } else {
        return Err(Error::Unsupported(
            "h(Y) beyond d = 2 needs a coordinate-factorizable channel".into(),
        ));
    };
    let h_xy = Estimate {
        value: h_x.value + h_u.value,
        error: h_x.error + h_u.error,
    };
    Ok(EntropyBreakdown {
        h_x: h_x.value,
        h_y: h_y.value,
        h_xy: h_xy.value,
        h_x_given_y: h_x_given_y.value,
        i: h_x.value - h_x_given_y.value,
        gamma,
        method,
        error_estimate: h_x.error + h_u.error + h_x_given_y.error + h_y.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DensityFamily, MixedDistribution};

    fn n01() -> DensityFamily {
        DensityFamily::gaussian1(0.0, 1.0)
    }

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn output_density_degenerate_signal_is_noise() {
        let ch = ChannelModel::new(
            MixedDistribution::atoms1(&[(0.0, 1.0)]).unwrap(),
            n01(),
        )
        .unwrap();
        let cfg = QuadratureConfig::default();
        for y in [-1.5, 0.0, 2.0] {
            let f = output_density(&ch, 3.7, &[y], &cfg).unwrap();
            assert!((f - phi(y)).abs() < 1e-15);
        }
    }

    #[test]
    fn output_density_gaussian_convolution() {
        let ch = ChannelModel::new(MixedDistribution::from_density(n01()), n01()).unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-12);
        for y in [-2.0, 0.0, 0.7, 3.1] {
            let f = output_density(&ch, 1.0, &[y], &cfg).unwrap();
            let expect = (-0.25 * y * y).exp() / (4.0 * std::f64::consts::PI).sqrt();
            assert!(
                (f - expect).abs() < 1e-8,
                "f_Y({y}) = {f}, want {expect} (N(0,2))"
            );
        }
    }

    #[test]
    fn output_density_low_snr_tends_to_noise() {
        let ch = ChannelModel::new(
            MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0)),
            n01(),
        )
        .unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-12);
        let f = output_density(&ch, 1e-12, &[0.3], &cfg).unwrap();
        assert!((f - phi(0.3)).abs() < 1e-5);
    }

    #[test]
    fn conditional_entropy_gaussian_posterior() {
        // posterior variance 1/(1+gamma); at gamma = 1, h(X|Y) = 0.5 ln(pi e)
        let ch = ChannelModel::new(MixedDistribution::from_density(n01()), n01()).unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-9);
        let h = conditional_entropy_continuous(&ch, 1.0, &cfg).unwrap();
        let expect = 0.5 * (std::f64::consts::PI * std::f64::consts::E).ln();
        assert!(
            (h.value - expect).abs() < 1e-6,
            "h(X|Y) = {}, want {expect}",
            h.value
        );
    }

    #[test]
    fn conditional_entropy_high_snr_tracks_scaled_noise() {
        let ch = ChannelModel::new(
            MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0)),
            n01(),
        )
        .unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-7);
        let gamma = 1e4;
        let h = conditional_entropy_continuous(&ch, gamma, &cfg).unwrap();
        let h_scaled_noise =
            0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E / gamma).ln();
        // the gap decays as C/sqrt(gamma) with C = 1.80639 for this pair
        // (oracle: closed-form J = Phi(y + x sg) - Phi(y + (x-1) sg), checked
        // by adaptive quadrature and 4e6-sample Monte Carlo)
        let gap = h.value - h_scaled_noise;
        assert!(
            (gap + 1.80639e-2).abs() < 2e-4,
            "gap {gap}, want about -1.80639e-2"
        );
    }

    #[test]
    fn conditional_entropy_low_snr_tends_to_prior() {
        let ch = ChannelModel::new(MixedDistribution::from_density(n01()), n01()).unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-9);
        let h = conditional_entropy_continuous(&ch, 1e-4, &cfg).unwrap();
        let h_x = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h.value - h_x).abs() < 1e-3, "got {}", h.value);
    }

    #[test]
    fn discrete_conditional_entropy_limits() {
        let cfg = QuadratureConfig::with_abs_tol(1e-9);
        let single = ChannelModel::new(
            MixedDistribution::atoms1(&[(0.0, 1.0)]).unwrap(),
            n01(),
        )
        .unwrap();
        assert_eq!(
            conditional_entropy_discrete(&single, 5.0, &cfg)
                .unwrap()
                .value,
            0.0
        );

        let coin = ChannelModel::new(
            MixedDistribution::atoms1(&[(0.0, 0.5), (1.0, 0.5)]).unwrap(),
            n01(),
        )
        .unwrap();
        let high = conditional_entropy_discrete(&coin, 1e4, &cfg).unwrap();
        assert!(high.value >= 0.0 && high.value < 1e-3, "got {}", high.value);
        let low = conditional_entropy_discrete(&coin, 1e-4, &cfg).unwrap();
        assert!((low.value - 2f64.ln()).abs() < 1e-3, "got {}", low.value);
    }

    #[test]
    fn mixed_reduces_to_pure_paths() {
        let cfg = QuadratureConfig::with_abs_tol(1e-8);
        let cont = ChannelModel::new(
            MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0)),
            n01(),
        )
        .unwrap();
        let a = conditional_entropy_mixed(&cont, 2.0, &cfg).unwrap();
        let b = conditional_entropy_continuous(&cont, 2.0, &cfg).unwrap();
        assert_eq!(a.value, b.value, "identical code path expected");

        let disc = ChannelModel::new(
            MixedDistribution::atoms1(&[(0.0, 0.5), (1.0, 0.5)]).unwrap(),
            n01(),
        )
        .unwrap();
        let a = conditional_entropy_mixed(&disc, 2.0, &cfg).unwrap();
        let b = conditional_entropy_discrete(&disc, 2.0, &cfg).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn mixed_low_snr_recovers_general_entropy() {
        // half atom at 0, half uniform density: h(X) = ln 2
        let signal = MixedDistribution::new(
            vec![crate::distributions::Atom::new(vec![0.0], 0.5).unwrap()],
            Some(DensityFamily::uniform1(0.0, 1.0)),
            0.5,
        )
        .unwrap();
        let ch = ChannelModel::new(signal, n01()).unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-8);
        let h = conditional_entropy_mixed(&ch, 1e-4, &cfg).unwrap();
        assert!(
            (h.value - 2f64.ln()).abs() < 1e-3,
            "h(X|Y) = {} want ln 2",
            h.value
        );
    }

    #[test]
    fn mutual_information_gaussian_closed_form() {
        let ch = ChannelModel::new(MixedDistribution::from_density(n01()), n01()).unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-9);
        let b = mutual_information(&ch, 1.0, &cfg).unwrap();
        let expect = 0.5 * 2f64.ln();
        assert!((b.i - expect).abs() < 1e-6, "I = {}, want {expect}", b.i);
        // the two routes agree
        assert!(
            (b.i - b.i_via_joint()).abs() <= 3.0 * b.error_estimate,
            "routes differ: {} vs {}",
            b.i,
            b.i_via_joint()
        );
        assert!(b.i >= -b.error_estimate);
    }

    #[test]
    fn mutual_information_vanishes_at_tiny_snr() {
        let ch = ChannelModel::new(
            MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0)),
            n01(),
        )
        .unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-9);
        let b = mutual_information(&ch, 1e-8, &cfg).unwrap();
        assert!(b.i.abs() < 1e-6, "I = {}", b.i);
    }

    #[test]
    fn mutual_information_discrete_saturates() {
        let ch = ChannelModel::new(
            MixedDistribution::atoms1(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
            n01(),
        )
        .unwrap();
        let cfg = QuadratureConfig::with_abs_tol(1e-9);
        let b = mutual_information(&ch, 1e4, &cfg).unwrap();
        assert!((b.i - 2f64.ln()).abs() < 1e-3, "I = {}", b.i);
    }
}
