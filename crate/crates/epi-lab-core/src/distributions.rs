//! Signal and noise laws: analytic density families, point masses, and
//! mixtures of both.
//!
//! A `MixedDistribution` carries a list of atoms (the discrete part) plus an
//! optional absolutely continuous part. The discrete part is weighted by the
//! counting measure, the continuous part by Lebesgue measure, so the total
//! entropy of a mixed law is the Shannon sum over atoms plus the differential
//! integral over the density. All entropies are in nats.

use crate::error::{Error, Result};
use crate::geom::BoxDomain;
use crate::linalg::SpdMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

const MASS_SUM_TOL: f64 = 1e-9;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Smallest k with `2 Phi(-k) <= mass_tol`, found by bisection on erfc.
pub fn gaussian_tail_radius(mass_tol: f64) -> f64 {
    assert!(mass_tol > 0.0 && mass_tol < 1.0, "mass_tol must be in (0,1)");
    let f = |k: f64| erfc(k / std::f64::consts::SQRT_2) - mass_tol;
    let (mut lo, mut hi) = (0.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A point mass of the discrete part of a law.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(location: Vec<f64>, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass <= 1.0) {
            return Err(Error::InvalidAtomMass(mass));
        }
        Ok(Self { location, mass })
    }
}

/// Multivariate normal with strictly positive-definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub cov: SpdMatrix,
}

/// Uniform law on a box `[[A,B]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBox {
    pub bounds: BoxDomain,
}

/// Product of per-axis triangular kernels: height `1/a_i` at the center,
/// support `[b_i - a_i, b_i + a_i]` on axis i.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    pub scale: Vec<f64>,
    pub center: Vec<f64>,
}

/// Convex combination of density families.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMixture {
    pub weights: Vec<f64>,
    pub components: Vec<DensityFamily>,
}

/// Piecewise-constant density on disjoint cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub cells: Vec<BoxDomain>,
    pub heights: Vec<f64>,
}

/// Analytic density descriptors. Every variant integrates to one.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityFamily {
    Gaussian(Gaussian),
    UniformBox(UniformBox),
    Pyramid(Pyramid),
    FiniteMixture(FiniteMixture),
    PiecewiseConstant(PiecewiseConstant),
}

impl DensityFamily {
    pub fn gaussian(mean: Vec<f64>, cov_rows: &[Vec<f64>]) -> Result<Self> {
        let cov = SpdMatrix::new(cov_rows)?;
        if cov.dim() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.dim(),
            });
        }
        Ok(Self::Gaussian(Gaussian { mean, cov }))
    }

    /// Scalar normal N(mean, sigma2).
    pub fn gaussian1(mean: f64, sigma2: f64) -> Self {
        Self::gaussian(vec![mean], &[vec![sigma2]]).expect("scalar gaussian")
    }

    pub fn standard_gaussian(d: usize) -> Self {
        Self::Gaussian(Gaussian {
            mean: vec![0.0; d],
            cov: SpdMatrix::identity(d),
        })
    }

    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Self::UniformBox(UniformBox {
            bounds: BoxDomain::new(lo, hi)?,
        }))
    }

    pub fn uniform1(lo: f64, hi: f64) -> Self {
        Self::uniform_box(vec![lo], vec![hi]).expect("interval")
    }

    pub fn pyramid(scale: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if scale.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: scale.len(),
                got: center.len(),
            });
        }
        if scale.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidParameter(
                "pyramid scales must be positive".into(),
            ));
        }
        Ok(Self::Pyramid(Pyramid { scale, center }))
    }

    pub fn pyramid1(scale: f64, center: f64) -> Self {
        Self::pyramid(vec![scale], vec![center]).expect("scalar pyramid")
    }

    pub fn finite_mixture(weights: Vec<f64>, components: Vec<DensityFamily>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidParameter(
                "mixture needs one weight per component".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter(
                "mixture weights must be positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::MassMismatch(total));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: components.iter().map(|c| c.dim()).find(|x| *x != d).unwrap(),
            });
        }
        Ok(Self::FiniteMixture(FiniteMixture {
            weights,
            components,
        }))
    }

    pub fn piecewise_constant(cells: Vec<BoxDomain>, heights: Vec<f64>) -> Result<Self> {
        if cells.is_empty() || cells.len() != heights.len() {
            return Err(Error::InvalidParameter(
                "piecewise-constant law needs one height per cell".into(),
            ));
        }
        let d = cells[0].dim();
        if cells.iter().any(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: 0 });
        }
        if heights.iter().any(|h| !(*h >= 0.0) || !h.is_finite()) {
            return Err(Error::InvalidParameter(
                "cell heights must be finite and nonnegative".into(),
            ));
        }
        for i in 0..cells.len() {
            for j in (i + 1)..cells.len() {
                let overlap: f64 = (0..d)
                    .map(|k| {
                        let (alo, ahi) = cells[i].axis(k);
                        let (blo, bhi) = cells[j].axis(k);
                        (ahi.min(bhi) - alo.max(blo)).max(0.0)
                    })
                    .product();
                if overlap > 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "cells {i} and {j} overlap"
                    )));
                }
            }
        }
        let mass: f64 = cells
            .iter()
            .zip(&heights)
            .map(|(c, h)| c.volume() * h)
            .sum();
        if (mass - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::MassMismatch(mass));
        }
        Ok(Self::PiecewiseConstant(PiecewiseConstant { cells, heights }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.mean.len(),
            Self::UniformBox(u) => u.bounds.dim(),
            Self::Pyramid(p) => p.scale.len(),
            Self::FiniteMixture(m) => m.components[0].dim(),
            Self::PiecewiseConstant(p) => p.cells[0].dim(),
        }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        match self {
            Self::Gaussian(g) => {
                let d = g.mean.len();
                let mut diff = [0.0f64; 8];
                for i in 0..d {
                    diff[i] = x[i] - g.mean[i];
                }
                let q = g.cov.quad_form_inv(&diff[..d]);
                let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln()
                    + g.cov.log_det());
                (log_norm - 0.5 * q).exp()
            }
            Self::UniformBox(u) => {
                if u.bounds.contains(x) {
                    1.0 / u.bounds.volume()
                } else {
                    0.0
                }
            }
            Self::Pyramid(p) => {
                let mut v = 1.0;
                for i in 0..p.scale.len() {
                    let a = p.scale[i];
                    let t = 1.0 - (x[i] - p.center[i]).abs() / a;
                    if t <= 0.0 {
                        return 0.0;
                    }
                    v *= t / a;
                }
                v
            }
            Self::FiniteMixture(m) => m
                .weights
                .iter()
                .zip(&m.components)
                .map(|(w, c)| w * c.pdf(x))
                .sum(),
            Self::PiecewiseConstant(p) => {
                for (cell, h) in p.cells.iter().zip(&p.heights) {
                    if cell.contains(x) {
                        return *h;
                    }
                }
                0.0
            }
        }
    }

    /// Natural log of the density; `-inf` outside the support. Exact in log
    /// space for Gaussians, where the density itself underflows far out.
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        match self {
            Self::Gaussian(g) => {
                let d = g.mean.len();
                let mut diff = [0.0f64; 8];
                for i in 0..d {
                    diff[i] = x[i] - g.mean[i];
                }
                let q = g.cov.quad_form_inv(&diff[..d]);
                -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + g.cov.log_det() + q)
            }
            _ => self.pdf(x).ln(),
        }
    }

    /// A box carrying at least `1 - mass_tol` of the probability mass.
    /// Exact for compact families; mean +/- k sigma per axis for Gaussians.
    pub fn support(&self, mass_tol: f64) -> BoxDomain {
        match self {
            Self::Gaussian(g) => {
                let d = g.mean.len();
                let k = gaussian_tail_radius(mass_tol / d as f64);
                let lo = (0..d)
                    .map(|i| g.mean[i] - k * g.cov.get(i, i).sqrt())
                    .collect();
                let hi = (0..d)
                    .map(|i| g.mean[i] + k * g.cov.get(i, i).sqrt())
                    .collect();
                BoxDomain { lo, hi }
            }
            Self::UniformBox(u) => u.bounds.clone(),
            Self::Pyramid(p) => BoxDomain {
                lo: p
                    .center
                    .iter()
                    .zip(&p.scale)
                    .map(|(b, a)| b - a)
                    .collect(),
                hi: p
                    .center
                    .iter()
                    .zip(&p.scale)
                    .map(|(b, a)| b + a)
                    .collect(),
            },
            Self::FiniteMixture(m) => {
                let mut hull = m.components[0].support(mass_tol);
                for c in &m.components[1..] {
                    hull = hull.hull(&c.support(mass_tol));
                }
                hull
            }
            Self::PiecewiseConstant(p) => {
                let mut hull = p.cells[0].clone();
                for c in &p.cells[1..] {
                    hull = hull.hull(c);
                }
                hull
            }
        }
    }

    /// Kink locations of the density along one axis (integration split points).
    pub fn axis_splits(&self, axis: usize) -> Vec<f64> {
        match self {
            Self::Gaussian(_) => vec![],
            Self::UniformBox(u) => {
                let (lo, hi) = u.bounds.axis(axis);
                vec![lo, hi]
            }
            Self::Pyramid(p) => {
                let (a, b) = (p.scale[axis], p.center[axis]);
                vec![b - a, b, b + a]
            }
            Self::FiniteMixture(m) => {
                let mut v: Vec<f64> = m
                    .components
                    .iter()
                    .flat_map(|c| c.axis_splits(axis))
                    .collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            Self::PiecewiseConstant(p) => {
                let mut v: Vec<f64> = p
                    .cells
                    .iter()
                    .flat_map(|c| {
                        let (lo, hi) = c.axis(axis);
                        [lo, hi]
                    })
                    .collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
        }
    }

    /// Differential entropy in nats, where a closed form exists.
    pub fn entropy_closed(&self) -> Option<f64> {
        match self {
            Self::Gaussian(g) => {
                let d = g.mean.len() as f64;
                Some(0.5 * (d * (2.0 * std::f64::consts::PI).ln() + d + g.cov.log_det()))
            }
            Self::UniformBox(u) => Some(u.bounds.volume().ln()),
            Self::Pyramid(p) => Some(p.scale.iter().map(|a| 0.5 + a.ln()).sum()),
            Self::FiniteMixture(_) => None,
            Self::PiecewiseConstant(p) => Some(
                -p.cells
                    .iter()
                    .zip(&p.heights)
                    .filter(|(_, h)| **h > 0.0)
                    .map(|(c, h)| c.volume() * h * h.ln())
                    .sum::<f64>(),
            ),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            Self::Gaussian(g) => g.mean.clone(),
            Self::UniformBox(u) => u
                .bounds
                .lo
                .iter()
                .zip(&u.bounds.hi)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
            Self::Pyramid(p) => p.center.clone(),
            Self::FiniteMixture(m) => {
                let d = self.dim();
                let mut out = vec![0.0; d];
                for (w, c) in m.weights.iter().zip(&m.components) {
                    for (o, v) in out.iter_mut().zip(c.mean()) {
                        *o += w * v;
                    }
                }
                out
            }
            Self::PiecewiseConstant(p) => {
                let d = self.dim();
                let mut out = vec![0.0; d];
                for (cell, h) in p.cells.iter().zip(&p.heights) {
                    let mass = h * cell.volume();
                    for i in 0..d {
                        out[i] += mass * 0.5 * (cell.lo[i] + cell.hi[i]);
                    }
                }
                out
            }
        }
    }

    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        match self {
            Self::Gaussian(g) => g.cov.rows(),
            Self::UniformBox(u) => diag_matrix(
                &(0..d)
                    .map(|i| {
                        let (lo, hi) = u.bounds.axis(i);
                        (hi - lo) * (hi - lo) / 12.0
                    })
                    .collect::<Vec<_>>(),
            ),
            Self::Pyramid(p) => {
                diag_matrix(&p.scale.iter().map(|a| a * a / 6.0).collect::<Vec<_>>())
            }
            Self::FiniteMixture(m) => {
                let mu = self.mean();
                let mut c = vec![vec![0.0; d]; d];
                for (w, comp) in m.weights.iter().zip(&m.components) {
                    let ci = comp.covariance();
                    let mi = comp.mean();
                    for i in 0..d {
                        for j in 0..d {
                            c[i][j] += w * (ci[i][j] + mi[i] * mi[j]);
                        }
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        c[i][j] -= mu[i] * mu[j];
                    }
                }
                c
            }
            Self::PiecewiseConstant(p) => {
                let mu = self.mean();
                let mut c = vec![vec![0.0; d]; d];
                for (cell, h) in p.cells.iter().zip(&p.heights) {
                    let mass = h * cell.volume();
                    let mid: Vec<f64> =
                        (0..d).map(|i| 0.5 * (cell.lo[i] + cell.hi[i])).collect();
                    for i in 0..d {
                        for j in 0..d {
                            let second = if i == j {
                                let w = cell.hi[i] - cell.lo[i];
                                w * w / 12.0 + mid[i] * mid[i]
                            } else {
                                mid[i] * mid[j]
                            };
                            c[i][j] += mass * second;
                        }
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        c[i][j] -= mu[i] * mu[j];
                    }
                }
                c
            }
        }
    }

    /// Per-axis marginals when the family factorizes across axes.
    pub fn axis_marginals(&self) -> Option<Vec<DensityFamily>> {
        match self {
            Self::Gaussian(g) => {
                if !g.cov.is_diagonal() {
                    return None;
                }
                Some(
                    (0..g.mean.len())
                        .map(|i| DensityFamily::gaussian1(g.mean[i], g.cov.get(i, i)))
                        .collect(),
                )
            }
            Self::UniformBox(u) => Some(
                (0..u.bounds.dim())
                    .map(|i| {
                        let (lo, hi) = u.bounds.axis(i);
                        DensityFamily::uniform1(lo, hi)
                    })
                    .collect(),
            ),
            Self::Pyramid(p) => Some(
                p.scale
                    .iter()
                    .zip(&p.center)
                    .map(|(a, b)| DensityFamily::pyramid1(*a, *b))
                    .collect(),
            ),
            Self::FiniteMixture(_) | Self::PiecewiseConstant(_) => None,
        }
    }

    /// Law of `c X` for `c != 0`.
    pub fn scale(&self, c: f64) -> Result<DensityFamily> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::ZeroScale);
        }
        Ok(match self {
            Self::Gaussian(g) => DensityFamily::Gaussian(Gaussian {
                mean: g.mean.iter().map(|m| c * m).collect(),
                cov: g.cov.scaled(c * c)?,
            }),
            Self::UniformBox(u) => {
                let a: Vec<f64> = u.bounds.lo.iter().map(|v| c * v).collect();
                let b: Vec<f64> = u.bounds.hi.iter().map(|v| c * v).collect();
                let (lo, hi) = if c > 0.0 { (a, b) } else { (b, a) };
                DensityFamily::uniform_box(lo, hi)?
            }
            Self::Pyramid(p) => DensityFamily::Pyramid(Pyramid {
                scale: p.scale.iter().map(|a| a * c.abs()).collect(),
                center: p.center.iter().map(|b| b * c).collect(),
            }),
            Self::FiniteMixture(m) => DensityFamily::FiniteMixture(FiniteMixture {
                weights: m.weights.clone(),
                components: m
                    .components
                    .iter()
                    .map(|comp| comp.scale(c))
                    .collect::<Result<_>>()?,
            }),
            Self::PiecewiseConstant(p) => {
                let d = self.dim();
                let scale_vol = c.abs().powi(d as i32);
                DensityFamily::PiecewiseConstant(PiecewiseConstant {
                    cells: p
                        .cells
                        .iter()
                        .map(|cell| {
                            let a: Vec<f64> = cell.lo.iter().map(|v| c * v).collect();
                            let b: Vec<f64> = cell.hi.iter().map(|v| c * v).collect();
                            let (lo, hi) = if c > 0.0 { (a, b) } else { (b, a) };
                            BoxDomain { lo, hi }
                        })
                        .collect(),
                    heights: p.heights.iter().map(|h| h / scale_vol).collect(),
                })
            }
        })
    }

    /// Law of `X + v`.
    pub fn translate(&self, v: &[f64]) -> DensityFamily {
        match self {
            Self::Gaussian(g) => DensityFamily::Gaussian(Gaussian {
                mean: g.mean.iter().zip(v).map(|(m, t)| m + t).collect(),
                cov: g.cov.clone(),
            }),
            Self::UniformBox(u) => DensityFamily::UniformBox(UniformBox {
                bounds: BoxDomain {
                    lo: u.bounds.lo.iter().zip(v).map(|(a, t)| a + t).collect(),
                    hi: u.bounds.hi.iter().zip(v).map(|(a, t)| a + t).collect(),
                },
            }),
            Self::Pyramid(p) => DensityFamily::Pyramid(Pyramid {
                scale: p.scale.clone(),
                center: p.center.iter().zip(v).map(|(b, t)| b + t).collect(),
            }),
            Self::FiniteMixture(m) => DensityFamily::FiniteMixture(FiniteMixture {
                weights: m.weights.clone(),
                components: m.components.iter().map(|c| c.translate(v)).collect(),
            }),
            Self::PiecewiseConstant(p) => DensityFamily::PiecewiseConstant(PiecewiseConstant {
                cells: p
                    .cells
                    .iter()
                    .map(|cell| BoxDomain {
                        lo: cell.lo.iter().zip(v).map(|(a, t)| a + t).collect(),
                        hi: cell.hi.iter().zip(v).map(|(a, t)| a + t).collect(),
                    })
                    .collect(),
                heights: p.heights.clone(),
            }),
        }
    }

    pub fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            Self::Gaussian(g) => {
                let d = g.mean.len();
                let mut z = [0.0f64; 8];
                let mut i = 0;
                while i < d {
                    let (a, b) = box_muller(rng);
                    z[i] = a;
                    if i + 1 < d {
                        z[i + 1] = b;
                    }
                    i += 2;
                }
                g.cov.chol_mul(&z[..d], out);
                for (o, m) in out.iter_mut().zip(&g.mean) {
                    *o += m;
                }
            }
            Self::UniformBox(u) => {
                for i in 0..u.bounds.dim() {
                    let (lo, hi) = u.bounds.axis(i);
                    out[i] = lo + (hi - lo) * rng.gen::<f64>();
                }
            }
            Self::Pyramid(p) => {
                // sum of two uniforms gives the triangular kernel exactly
                for i in 0..p.scale.len() {
                    let t = rng.gen::<f64>() + rng.gen::<f64>() - 1.0;
                    out[i] = p.center[i] + p.scale[i] * t;
                }
            }
            Self::FiniteMixture(m) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (w, c) in m.weights.iter().zip(&m.components) {
                    acc += w;
                    if u < acc {
                        c.sample_into(rng, out);
                        return;
                    }
                }
                m.components.last().unwrap().sample_into(rng, out);
            }
            Self::PiecewiseConstant(p) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut idx = p.cells.len() - 1;
                for (i, (cell, h)) in p.cells.iter().zip(&p.heights).enumerate() {
                    acc += h * cell.volume();
                    if u < acc {
                        idx = i;
                        break;
                    }
                }
                let cell = &p.cells[idx];
                for i in 0..cell.dim() {
                    let (lo, hi) = cell.axis(i);
                    out[i] = lo + (hi - lo) * rng.gen::<f64>();
                }
            }
        }
    }

    /// CDF for one-dimensional families.
    pub fn cdf1(&self, x: f64) -> Option<f64> {
        if self.dim() != 1 {
            return None;
        }
        Some(match self {
            Self::Gaussian(g) => normal_cdf((x - g.mean[0]) / g.cov.get(0, 0).sqrt()),
            Self::UniformBox(u) => {
                let (lo, hi) = u.bounds.axis(0);
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            }
            Self::Pyramid(p) => {
                let t = (x - p.center[0]) / p.scale[0];
                if t <= -1.0 {
                    0.0
                } else if t <= 0.0 {
                    0.5 * (1.0 + t) * (1.0 + t)
                } else if t < 1.0 {
                    1.0 - 0.5 * (1.0 - t) * (1.0 - t)
                } else {
                    1.0
                }
            }
            Self::FiniteMixture(m) => m
                .weights
                .iter()
                .zip(&m.components)
                .map(|(w, c)| w * c.cdf1(x).unwrap())
                .sum(),
            Self::PiecewiseConstant(p) => {
                let mut acc = 0.0;
                for (cell, h) in p.cells.iter().zip(&p.heights) {
                    let (lo, hi) = cell.axis(0);
                    acc += h * (x.min(hi) - lo).max(0.0);
                }
                acc.clamp(0.0, 1.0)
            }
        })
    }
}

fn diag_matrix(diag: &[f64]) -> Vec<Vec<f64>> {
    let d = diag.len();
    let mut m = vec![vec![0.0; d]; d];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = diag[i];
    }
    m
}

fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// A law with a discrete part (atoms, counting measure) and an absolutely
/// continuous part (density, Lebesgue measure).
///
/// Values are immutable after construction and safe to share across threads;
/// samplers take an explicit seed and own their generator state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDistribution {
    atoms: Vec<Atom>,
    density: Option<DensityFamily>,
    density_mass: f64,
    dim: usize,
}

impl MixedDistribution {
    pub fn new(
        atoms: Vec<Atom>,
        density: Option<DensityFamily>,
        density_mass: f64,
    ) -> Result<Self> {
        let eta: f64 = atoms.iter().map(|a| a.mass).sum();
        if (eta + density_mass - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::MassMismatch(eta + density_mass));
        }
        if density_mass > 0.0 && density.is_none() {
            return Err(Error::NoDensity);
        }
        if density_mass <= 0.0 && density.is_some() {
            return Err(Error::InvalidParameter(
                "density present but carries no mass".into(),
            ));
        }
        let dim = match (&density, atoms.first()) {
            (Some(f), _) => f.dim(),
            (None, Some(a)) => a.location.len(),
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "distribution needs atoms or a density".into(),
                ))
            }
        };
        for a in &atoms {
            if a.location.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.location.len(),
                });
            }
            if !(a.mass > 0.0) {
                return Err(Error::InvalidAtomMass(a.mass));
            }
        }
        // exact coordinate equality; constructing duplicates is rejected
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if atoms[i].location == atoms[j].location {
                    return Err(Error::DuplicateAtom(atoms[i].location.clone()));
                }
            }
        }
        Ok(Self {
            atoms,
            density,
            density_mass,
            dim,
        })
    }

    pub fn from_density(density: DensityFamily) -> Self {
        let dim = density.dim();
        Self {
            atoms: vec![],
            density: Some(density),
            density_mass: 1.0,
            dim,
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms, None, 0.0)
    }

    /// Convenience: scalar atoms from (location, mass) pairs.
    pub fn atoms1(points: &[(f64, f64)]) -> Result<Self> {
        Self::from_atoms(
            points
                .iter()
                .map(|(x, p)| Atom::new(vec![*x], *p))
                .collect::<Result<_>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&DensityFamily> {
        self.density.as_ref()
    }

    pub fn density_mass(&self) -> f64 {
        self.density_mass
    }

    /// Total probability carried by the atoms.
    pub fn eta(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn is_pure_density(&self) -> bool {
        self.atoms.is_empty() && self.density.is_some()
    }

    pub fn is_pure_atoms(&self) -> bool {
        self.density.is_none()
    }

    /// Density of the absolutely continuous part at `x`, scaled by its mass.
    /// Zero when there is no density.
    pub fn density_at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(match &self.density {
            Some(f) => self.density_mass * f.pdf(x),
            None => 0.0,
        })
    }

    /// General entropy in nats where all parts admit closed forms:
    /// Shannon sum over atoms plus the weighted differential part.
    pub fn closed_form_entropy(&self) -> Option<f64> {
        let mut h: f64 = -self.atoms.iter().map(|a| a.mass * a.mass.ln()).sum::<f64>();
        if self.density_mass > 0.0 {
            let h0 = self.density.as_ref()?.entropy_closed()?;
            let w = self.density_mass;
            h += -w * w.ln() + w * h0;
        }
        Some(h)
    }

    /// i.i.d. draws, deterministic given the seed.
    pub fn sample(&self, rng_seed: u64, n: usize) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut out = Vec::with_capacity(n);
        let mut buf = vec![0.0; self.dim];
        for _ in 0..n {
            self.sample_into(&mut rng, &mut buf);
            out.push(buf.clone());
        }
        Ok(out)
    }

    pub fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.mass;
            if u < acc {
                out.copy_from_slice(&a.location);
                return;
            }
        }
        match &self.density {
            Some(f) => f.sample_into(rng, out),
            // numerical slack in the atom masses: fall back to the last atom
            None => out.copy_from_slice(&self.atoms.last().unwrap().location),
        }
    }

    /// Law of `c X`: atom locations scale, masses stay; the density transforms
    /// as `f_{cX}(x) = f_X(x/c) / |c|^d`, shifting its entropy by `d ln |c|`.
    pub fn scale(&self, c: f64) -> Result<MixedDistribution> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::ZeroScale);
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location.iter().map(|v| c * v).collect(),
                mass: a.mass,
            })
            .collect();
        let density = match &self.density {
            Some(f) => Some(f.scale(c)?),
            None => None,
        };
        Ok(MixedDistribution {
            atoms,
            density,
            density_mass: self.density_mass,
            dim: self.dim,
        })
    }

    /// Law of `X + v`.
    pub fn translate(&self, v: &[f64]) -> MixedDistribution {
        MixedDistribution {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.iter().zip(v).map(|(x, t)| x + t).collect(),
                    mass: a.mass,
                })
                .collect(),
            density: self.density.as_ref().map(|f| f.translate(v)),
            density_mass: self.density_mass,
            dim: self.dim,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.dim];
        for a in &self.atoms {
            for (m, x) in mu.iter_mut().zip(&a.location) {
                *m += a.mass * x;
            }
        }
        if let Some(f) = &self.density {
            for (m, x) in mu.iter_mut().zip(f.mean()) {
                *m += self.density_mass * x;
            }
        }
        mu
    }

    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        let mu = self.mean();
        let mut c = vec![vec![0.0; d]; d];
        for a in &self.atoms {
            for i in 0..d {
                for j in 0..d {
                    c[i][j] += a.mass * a.location[i] * a.location[j];
                }
            }
        }
        if let Some(f) = &self.density {
            let cf = f.covariance();
            let mf = f.mean();
            for i in 0..d {
                for j in 0..d {
                    c[i][j] += self.density_mass * (cf[i][j] + mf[i] * mf[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                c[i][j] -= mu[i] * mu[j];
            }
        }
        c
    }

    /// `E <X, A^{-1} X>`.
    pub fn second_moment_quad_form(&self, a: &SpdMatrix) -> f64 {
        let c = self.covariance();
        let mu = self.mean();
        a.trace_inv_times(&c) + a.quad_form_inv(&mu)
    }

    /// `E <X - EX, A^{-1} (X - EX)>`.
    pub fn centered_second_moment_quad_form(&self, a: &SpdMatrix) -> f64 {
        a.trace_inv_times(&self.covariance())
    }
}

/// Kolmogorov-Smirnov distance between `n` seeded samples of a scalar law
/// and its closed-form CDF. Test helper for sampler/density consistency.
pub fn ks_distance_1d(dist: &MixedDistribution, seed: u64, n: usize) -> Result<f64> {
    if dist.dim() != 1 {
        return Err(Error::Unsupported("KS distance is scalar-only".into()));
    }
    let density = dist.density().ok_or(Error::NoDensity)?;
    if !dist.is_pure_density() {
        return Err(Error::Unsupported(
            "KS distance applies to pure densities".into(),
        ));
    }
    let mut xs: Vec<f64> = dist.sample(seed, n)?.into_iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let c = density.cdf1(*x).unwrap();
        let lo = i as f64 / nf;
        let hi = (i + 1) as f64 / nf;
        d = d.max((c - lo).abs()).max((hi - c).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform01() -> MixedDistribution {
        MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0))
    }

    #[test]
    fn density_values() {
        assert_eq!(uniform01().density_at(&[0.5]).unwrap(), 1.0);
        let g = MixedDistribution::from_density(DensityFamily::gaussian1(0.0, 1.0));
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((g.density_at(&[0.0]).unwrap() - phi0).abs() < 1e-15);
        let p = MixedDistribution::from_density(DensityFamily::pyramid1(1.0, 0.0));
        assert_eq!(p.density_at(&[0.25]).unwrap(), 0.75);
    }

    #[test]
    fn density_dimension_mismatch() {
        let err = uniform01().density_at(&[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn closed_entropies() {
        assert_eq!(uniform01().closed_form_entropy().unwrap(), 0.0);
        let coin = MixedDistribution::atoms1(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!((coin.closed_form_entropy().unwrap() - 2f64.ln()).abs() < 1e-15);
        let g = MixedDistribution::from_density(DensityFamily::gaussian1(0.0, 1.0));
        let h = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((g.closed_form_entropy().unwrap() - h).abs() < 1e-15);
        // half atom + half uniform: two fair-coin contributions, zero density part
        let mixed = MixedDistribution::new(
            vec![Atom::new(vec![0.0], 0.5).unwrap()],
            Some(DensityFamily::uniform1(0.0, 1.0)),
            0.5,
        )
        .unwrap();
        assert!((mixed.closed_form_entropy().unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pyramid_entropy_formula() {
        let p = DensityFamily::pyramid(vec![0.5, 2.0], vec![0.0, 1.0]).unwrap();
        let expect = (0.5 + 0.5f64.ln()) + (0.5 + 2f64.ln());
        assert!((p.entropy_closed().unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn sampling_degenerate_atom() {
        let d = MixedDistribution::atoms1(&[(3.0, 1.0)]).unwrap();
        let s = d.sample(7, 5).unwrap();
        assert_eq!(s, vec![vec![3.0]; 5]);
    }

    #[test]
    fn sampling_moments() {
        let u = uniform01();
        let s = u.sample(42, 1_000_000).unwrap();
        let mean: f64 = s.iter().map(|p| p[0]).sum::<f64>() / 1e6;
        assert!((mean - 0.5).abs() < 2e-3, "uniform mean {mean}");

        let g = MixedDistribution::from_density(DensityFamily::gaussian1(0.0, 1.0));
        let s = g.sample(43, 1_000_000).unwrap();
        let m: f64 = s.iter().map(|p| p[0]).sum::<f64>() / 1e6;
        let var: f64 = s.iter().map(|p| (p[0] - m) * (p[0] - m)).sum::<f64>() / 1e6;
        assert!((var - 1.0).abs() < 1e-2, "gaussian variance {var}");
    }

    #[test]
    fn sampling_deterministic() {
        let g = MixedDistribution::from_density(DensityFamily::gaussian1(1.0, 4.0));
        assert_eq!(g.sample(9, 100).unwrap(), g.sample(9, 100).unwrap());
    }

    #[test]
    fn atom_frequencies_converge() {
        let d = MixedDistribution::atoms1(&[(0.0, 0.25), (1.0, 0.75)]).unwrap();
        let s = d.sample(5, 200_000).unwrap();
        let f1 = s.iter().filter(|p| p[0] == 1.0).count() as f64 / 2e5;
        assert!((f1 - 0.75).abs() < 5e-3);
    }

    #[test]
    fn scaling_box_and_entropy_shift() {
        let u = uniform01();
        let scaled = u.scale(2.0).unwrap();
        match scaled.density().unwrap() {
            DensityFamily::UniformBox(b) => {
                assert_eq!(b.bounds.lo, vec![0.0]);
                assert_eq!(b.bounds.hi, vec![2.0]);
            }
            other => panic!("unexpected family {other:?}"),
        }
        // identity scaling leaves entropy alone
        assert_eq!(
            u.scale(1.0).unwrap().closed_form_entropy().unwrap(),
            u.closed_form_entropy().unwrap()
        );
        // gaussian scaled by 1/sqrt(gamma) with gamma = 4 drops entropy by ln 2
        let g = MixedDistribution::from_density(DensityFamily::gaussian1(0.0, 1.0));
        let gs = g.scale(0.5).unwrap();
        let dh = g.closed_form_entropy().unwrap() - gs.closed_form_entropy().unwrap();
        assert!((dh - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_scaling_rule_d2() {
        // d-dimensional rule: entropy shifts by d ln|c|
        let f = DensityFamily::uniform_box(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let fs = f.scale(-3.0).unwrap();
        let dh = fs.entropy_closed().unwrap() - f.entropy_closed().unwrap();
        assert!((dh - 2.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_scale() {
        assert!(matches!(uniform01().scale(0.0), Err(Error::ZeroScale)));
    }

    #[test]
    fn rejects_duplicate_atoms_and_bad_mass() {
        assert!(matches!(
            MixedDistribution::atoms1(&[(1.0, 0.5), (1.0, 0.5)]),
            Err(Error::DuplicateAtom(_))
        ));
        assert!(Atom::new(vec![0.0], 0.0).is_err());
        assert!(matches!(
            MixedDistribution::atoms1(&[(0.0, 0.3), (1.0, 0.3)]),
            Err(Error::MassMismatch(_))
        ));
    }

    #[test]
    fn eta_bookkeeping() {
        let mixed = MixedDistribution::new(
            vec![Atom::new(vec![0.0], 0.5).unwrap()],
            Some(DensityFamily::uniform1(0.0, 1.0)),
            0.5,
        )
        .unwrap();
        assert_eq!(mixed.eta(), 0.5);
        assert!(uniform01().eta() == 0.0 && uniform01().is_pure_density());
        let atoms = MixedDistribution::atoms1(&[(0.0, 1.0)]).unwrap();
        assert!(atoms.eta() == 1.0 && atoms.is_pure_atoms());
        // eta = 1 forbids a density, eta = 0 forbids zero-mass densities
        assert!(MixedDistribution::new(
            vec![Atom::new(vec![0.0], 1.0).unwrap()],
            Some(DensityFamily::uniform1(0.0, 1.0)),
            0.0,
        )
        .is_err());
    }

    #[test]
    fn gaussian_support_radius() {
        // solve 2 Phi(-k) = 1e-10
        let k = gaussian_tail_radius(1e-10);
        assert!(
            (k - 6.466951).abs() < 1e-4,
            "tail radius {k} should be about 6.4669"
        );
        let g = DensityFamily::gaussian1(0.0, 1.0);
        let b = g.support(1e-10);
        assert!((b.hi[0] - k).abs() < 1e-12 && (b.lo[0] + k).abs() < 1e-12);
    }

    #[test]
    fn compact_supports_exact() {
        let u = DensityFamily::uniform1(0.0, 1.0);
        assert_eq!(u.support(1e-6), BoxDomain::interval(0.0, 1.0));
        let p = DensityFamily::pyramid1(1.0, 0.0);
        assert_eq!(p.support(1e-6), BoxDomain::interval(-1.0, 1.0));
    }

    #[test]
    fn mixture_moments() {
        let m = DensityFamily::finite_mixture(
            vec![0.5, 0.5],
            vec![
                DensityFamily::gaussian1(-1.0, 0.25),
                DensityFamily::gaussian1(1.0, 0.25),
            ],
        )
        .unwrap();
        assert!((m.mean()[0]).abs() < 1e-15);
        assert!((m.covariance()[0][0] - 1.25).abs() < 1e-12);
    }

    #[test]
    fn piecewise_constant_rejects_overlap_and_bad_mass() {
        let cells = vec![
            BoxDomain::interval(0.0, 1.0),
            BoxDomain::interval(0.5, 1.5),
        ];
        assert!(DensityFamily::piecewise_constant(cells, vec![0.5, 0.5]).is_err());
        let cells = vec![BoxDomain::interval(0.0, 1.0)];
        assert!(DensityFamily::piecewise_constant(cells, vec![0.9]).is_err());
    }

    #[test]
    fn ks_statistic_small_for_true_law() {
        for fam in [
            DensityFamily::gaussian1(0.3, 2.0),
            DensityFamily::uniform1(-1.0, 2.0),
            DensityFamily::pyramid1(0.7, 0.2),
            DensityFamily::finite_mixture(
                vec![0.5, 0.5],
                vec![
                    DensityFamily::gaussian1(-1.0, 0.25),
                    DensityFamily::gaussian1(1.0, 0.25),
                ],
            )
            .unwrap(),
        ] {
            let dist = MixedDistribution::from_density(fam);
            let d = ks_distance_1d(&dist, 11, 100_000).unwrap();
            assert!(d < 0.01, "KS distance {d} too large");
        }
    }
}
