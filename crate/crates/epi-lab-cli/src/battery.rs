//! The acceptance battery: every quantitative claim the toolkit is expected
//! to reproduce, as numbered criteria with pinned tolerances. `verify-all`
//! prints one pass/fail line per criterion; the acceptance test suite asserts
//! them individually.

use crate::report::Row;
use crate::CliError;
use epi_lab_core::channel::{
    conditional_entropy_discrete, conditional_entropy_mixed, conditional_gap_continuous,
    general_entropy, mutual_information, ChannelModel,
};
use epi_lab_core::distributions::{Atom, DensityFamily, MixedDistribution};
use epi_lab_core::epi::{
    discrete_violation_demo, epi_gaussian_comparison, epi_power_form, lieb_form, mmse_inequality,
    EpiVerdict,
};
use epi_lab_core::limits::{
    domination_check, fit_rate, highsnr_grid, pyramid_j_closed_form, pyramid_j_quadrature,
    verify_highsnr_continuous, verify_highsnr_mixed, LimitVerdict, SweepPoint,
};
use epi_lab_core::mmse::{debruijn_residual, entropy_via_mmse, entropy_via_mmse_centered, mmse};
use epi_lab_core::quadrature::QuadratureConfig;
use epi_lab_core::SpdMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub rows: Vec<Row>,
}

fn nerr(e: epi_lab_core::Error) -> CliError {
    CliError::Numerical {
        gamma: f64::NAN,
        reason: e.to_string(),
    }
}

fn n01() -> DensityFamily {
    DensityFamily::gaussian1(0.0, 1.0)
}

fn u01() -> MixedDistribution {
    MixedDistribution::from_density(DensityFamily::uniform1(0.0, 1.0))
}

fn pyr() -> MixedDistribution {
    MixedDistribution::from_density(DensityFamily::pyramid1(1.0, 0.0))
}

fn coin() -> MixedDistribution {
    MixedDistribution::atoms1(&[(0.0, 0.5), (1.0, 0.5)]).unwrap()
}

fn half_atom_half_uniform() -> MixedDistribution {
    MixedDistribution::new(
        vec![Atom::new(vec![0.0], 0.5).unwrap()],
        Some(DensityFamily::uniform1(0.0, 1.0)),
        0.5,
    )
    .unwrap()
}

fn gaussian_mixture() -> MixedDistribution {
    MixedDistribution::from_density(
        DensityFamily::finite_mixture(
            vec![0.5, 0.5],
            vec![
                DensityFamily::gaussian1(-1.0, 0.25),
                DensityFamily::gaussian1(1.0, 0.25),
            ],
        )
        .unwrap(),
    )
}

const LN_2PI_E: f64 = 2.837877066409345; // ln(2 pi e)

/// Criterion 1: Gaussian channel closed forms, `I = ln(1+g)/2` and
/// `M = 1/(1+g)`, reproduced by quadrature to 1e-6 at g in {0.1, 1, 10}.
pub fn criterion_01(_quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    const TOL: f64 = 1e-6;
    let ch = ChannelModel::new(MixedDistribution::from_density(n01()), n01()).map_err(nerr)?;
    let cfg = QuadratureConfig::with_abs_tol(3e-9);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &g in &[0.1, 1.0, 10.0] {
        let b = mutual_information(&ch, g, &cfg).map_err(nerr)?;
        let m = mmse(&ch, g, &cfg).map_err(nerr)?;
        let di = (b.i - 0.5 * (1.0 + g).ln()).abs();
        let dm = (m.value - 1.0 / (1.0 + g)).abs();
        worst = worst.max(di).max(dm);
        rows.push(Row {
            gamma: g,
            i: Some(b.i),
            h_x_given_y: Some(b.h_x_given_y),
            mmse: Some(m.value),
            residual: Some(di.max(dm)),
            error_estimate: b.error_estimate + m.error,
        });
    }
    Ok(CriterionOutcome {
        id: 1,
        name: "gaussian channel closed forms (I and M) to 1e-6",
        passed: worst < TOL,
        details: format!("worst |delta| = {worst:.3e} (tolerance {TOL:.0e})"),
        rows,
    })
}

/// Criterion 2: derivative-identity residual below 1e-3 for
/// X in {N(0,1), U[0,1], Pyramid(1,0)} at g in {0.1, 0.5, 1, 5, 10}.
pub fn criterion_02(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    const TOL: f64 = 1e-3;
    const FD_STEP: f64 = 1e-3;
    let signals: Vec<(&str, MixedDistribution)> = if quick {
        vec![("uniform", u01())]
    } else {
        vec![
            ("gaussian", MixedDistribution::from_density(n01())),
            ("uniform", u01()),
            ("pyramid", pyr()),
        ]
    };
    let gammas: Vec<f64> = if quick {
        vec![1.0]
    } else {
        vec![0.1, 0.5, 1.0, 5.0, 10.0]
    };
    let cfg = QuadratureConfig::with_abs_tol(1e-9);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (_, signal) in &signals {
        let ch = ChannelModel::new(signal.clone(), n01()).map_err(nerr)?;
        for &g in &gammas {
            let r = debruijn_residual(&ch, g, FD_STEP, &cfg).map_err(nerr)?;
            worst = worst.max(r);
            rows.push(Row {
                gamma: g,
                i: None,
                h_x_given_y: None,
                mmse: None,
                residual: Some(r),
                error_estimate: cfg.abs_tol,
            });
        }
    }
    rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    Ok(CriterionOutcome {
        id: 2,
        name: "derivative identity residual < 1e-3 across the battery",
        passed: worst < TOL,
        details: format!("worst residual = {worst:.3e} (tolerance {TOL:.0e})"),
        rows,
    })
}

/// Criterion 3: the SNR-integral entropy representation recovers the closed
/// forms within 1e-2, and its two variants agree within 2e-2.
pub fn criterion_03(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    const TOL_CLOSED: f64 = 1e-2;
    const TOL_CROSS: f64 = 2e-2;
    let cases: Vec<(&str, MixedDistribution, f64)> = if quick {
        vec![("uniform", u01(), 0.0)]
    } else {
        vec![
            (
                "gaussian(0,1)",
                MixedDistribution::from_density(n01()),
                0.5 * LN_2PI_E,
            ),
            (
                "gaussian(0,4)",
                MixedDistribution::from_density(DensityFamily::gaussian1(0.0, 4.0)),
                0.5 * LN_2PI_E + 0.5 * 4f64.ln(),
            ),
            ("uniform", u01(), 0.0),
        ]
    };
    let cfg = QuadratureConfig::with_abs_tol(1e-8);
    let mut details = String::new();
    let mut passed = true;
    for (name, signal, h_closed) in cases {
        let ch = ChannelModel::new(signal, n01()).map_err(nerr)?;
        let via = entropy_via_mmse(&ch, &cfg, 1e4).map_err(nerr)?;
        let centered = entropy_via_mmse_centered(&ch, &cfg).map_err(nerr)?;
        let d_closed = (via.value - h_closed).abs();
        let d_cross = (via.value - centered.value).abs();
        passed &= d_closed < TOL_CLOSED && d_cross < TOL_CROSS;
        details.push_str(&format!(
            "{name}: |h_int - h_closed| = {d_closed:.2e}, |routes| = {d_cross:.2e}; "
        ));
    }
    Ok(CriterionOutcome {
        id: 3,
        name: "MMSE-integral entropy matches closed forms (1e-2 / 2e-2)",
        passed,
        details,
        rows: Vec::new(),
    })
}

/// Criterion 4: high-SNR continuous limit for U[0,1] with standard normal
/// noise: residual below 1e-2 at g = 1e4 and monotone decreasing residuals.
pub fn criterion_04(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    const TOL: f64 = 1e-2;
    let ch = ChannelModel::new(u01(), n01()).map_err(nerr)?;
    let grid = if quick {
        vec![1e2, 1e3, 1e4]
    } else {
        highsnr_grid()
    };
    let cfg = QuadratureConfig::with_abs_tol(1e-8);
    let v = verify_highsnr_continuous(&ch, &grid, &cfg).map_err(nerr)?;
    let res = v.residuals();
    let monotone = res.windows(2).all(|w| w[1] < w[0]);
    let passed = v.final_residual < TOL && monotone;
    let rows = sweep_rows(&v);
    Ok(CriterionOutcome {
        id: 4,
        name: "high-SNR continuous limit: residual < 1e-2 at 1e4, monotone",
        passed,
        details: format!(
            "final residual = {:.4e} (tolerance {TOL:.0e}, measured constant 1.806/sqrt(g)), monotone = {monotone}",
            v.final_residual
        ),
        rows,
    })
}

/// Criterion 5: Bernoulli(1/2) signal reaches `|I - ln 2| < 1e-3` at g = 1e4.
pub fn criterion_05(_quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    const TOL: f64 = 1e-3;
    let ch = ChannelModel::new(coin(), n01()).map_err(nerr)?;
    let cfg = QuadratureConfig::with_abs_tol(1e-9);
    let h = conditional_entropy_discrete(&ch, 1e4, &cfg).map_err(nerr)?;
    let i = 2f64.ln() - h.value;
    let dev = (i - 2f64.ln()).abs();
    Ok(CriterionOutcome {
        id: 5,
        name: "high-SNR discrete limit: |I - ln 2| < 1e-3 at 1e4",
        passed: dev < TOL,
        details: format!("I = {i:.9}, |I - ln 2| = {dev:.3e}"),
        rows: vec![Row {
            gamma: 1e4,
            i: Some(i),
            h_x_given_y: Some(h.value),
            mmse: None,
            residual: Some(dev),
            error_estimate: h.error,
        }],
    })
}

/// Criterion 6: eta-weighted mixed limit: residuals decrease monotonically
/// for the half-atom/half-uniform signal; final residual reported, no
/// tolerance asserted.
pub fn criterion_06(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    let ch = ChannelModel::new(half_atom_half_uniform(), n01()).map_err(nerr)?;
    let grid = if quick {
        vec![1e2, 1e3, 1e4]
    } else {
        highsnr_grid()
    };
    let cfg = QuadratureConfig::with_abs_tol(1e-8);
    let v = verify_highsnr_mixed(&ch, &grid, &cfg).map_err(nerr)?;
    let res = v.residuals();
    let monotone = res.windows(2).all(|w| w[1] < w[0]);
    Ok(CriterionOutcome {
        id: 6,
        name: "mixed limit: eta-weighted residuals decrease monotonically",
        passed: monotone,
        details: format!(
            "final residual = {:.4e} (reported, not asserted), monotone = {monotone}",
            v.final_residual
        ),
        rows: sweep_rows(&v),
    })
}

/// Criterion 7: `I < 1e-3` at g = 1e-4 for every battery signal.
pub fn criterion_07(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    const TOL: f64 = 1e-3;
    const GAMMA: f64 = 1e-4;
    let signals: Vec<(&str, MixedDistribution)> = if quick {
        vec![("uniform", u01()), ("coin", coin())]
    } else {
        vec![
            ("gaussian", MixedDistribution::from_density(n01())),
            ("uniform", u01()),
            ("pyramid", pyr()),
            ("coin", coin()),
            ("half-atom/half-uniform", half_atom_half_uniform()),
        ]
    };
    let cfg = QuadratureConfig::with_abs_tol(1e-9);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut details = String::new();
    for (name, signal) in signals {
        let ch = ChannelModel::new(signal, n01()).map_err(nerr)?;
        let h_x = general_entropy(&ch.signal, &cfg).map_err(nerr)?;
        let h_xy = conditional_entropy_mixed(&ch, GAMMA, &cfg).map_err(nerr)?;
        let i = h_x.value - h_xy.value;
        worst = worst.max(i.abs());
        details.push_str(&format!("{name}: I = {i:.2e}; "));
        rows.push(Row {
            gamma: GAMMA,
            i: Some(i),
            h_x_given_y: Some(h_xy.value),
            mmse: None,
            residual: Some(i.abs()),
            error_estimate: h_x.error + h_xy.error,
        });
    }
    Ok(CriterionOutcome {
        id: 7,
        name: "low-SNR limit: I < 1e-3 at 1e-4 for all battery signals",
        passed: worst < TOL,
        details,
        rows,
    })
}

fn sweep_rows(v: &LimitVerdict) -> Vec<Row> {
    v.sweep
        .iter()
        .map(|p| Row {
            gamma: p.gamma,
            i: None,
            h_x_given_y: None,
            mmse: None,
            residual: Some((p.value - v.target).abs()),
            error_estimate: p.error_estimate,
        })
        .collect()
}

fn rate_outcome(
    id: usize,
    name: &'static str,
    v: &LimitVerdict,
    expected: f64,
    tolerance: f64,
) -> Result<CriterionOutcome, CliError> {
    let fit = fit_rate(v).map_err(nerr)?;
    let passed = (fit.exponent - expected).abs() < tolerance;
    Ok(CriterionOutcome {
        id,
        name,
        passed,
        details: format!(
            "fitted exponent = {:.4} +- {:.4} (expected {expected} +- {tolerance}), constant = {:.4}",
            fit.exponent, fit.exponent_stderr, fit.constant
        ),
        rows: sweep_rows(v),
    })
}

/// Criterion 8a: uniform/uniform d = 1 residual decays with exponent
/// -0.5 +- 0.1.
pub fn criterion_08a(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    let ch = ChannelModel::new(u01(), DensityFamily::uniform1(0.0, 1.0)).map_err(nerr)?;
    let grid = if quick {
        epi_lab_core::log_grid(10.0, 10f64.powf(2.5), 2)
    } else {
        highsnr_grid()
    };
    let cfg = QuadratureConfig::with_abs_tol(1e-8);
    let v = verify_highsnr_continuous(&ch, &grid, &cfg).map_err(nerr)?;
    rate_outcome(
        8,
        "rate fit, uniform/uniform d=1: exponent -0.5 +- 0.1",
        &v,
        -0.5,
        0.1,
    )
}

/// Criterion 8b: pyramid/pyramid d = 1, expected exponent -0.5 +- 0.1 as
/// stated. The measured decay of the signed residual is ~ g^{-0.9}
/// (symmetric noise cancels the first-order term), so this fails; the
/// O(1/sqrt g) bound holds for the absolute-value integral instead.
pub fn criterion_08b(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    let ch = ChannelModel::new(pyr(), DensityFamily::pyramid1(1.0, 0.0)).map_err(nerr)?;
    let grid = if quick {
        epi_lab_core::log_grid(10.0, 10f64.powf(2.5), 2)
    } else {
        highsnr_grid()
    };
    let cfg = QuadratureConfig::with_abs_tol(1e-8);
    let v = verify_highsnr_continuous(&ch, &grid, &cfg).map_err(nerr)?;
    rate_outcome(
        8,
        "rate fit, pyramid/pyramid d=1: exponent -0.5 +- 0.1 as stated",
        &v,
        -0.5,
        0.1,
    )
}

/// Criterion 8c: uniform/uniform d = 2, expected exponent -1.0 +- 0.15 as
/// stated. Mutual information adds over independent coordinates, so the true
/// decay is gamma^{-1/2} and this fails by construction of the expectation.
pub fn criterion_08c(quick: bool, seed: u64) -> Result<CriterionOutcome, CliError> {
    let signal = MixedDistribution::from_density(
        DensityFamily::uniform_box(vec![0.0, 0.0], vec![1.0, 1.0]).map_err(nerr)?,
    );
    let noise = DensityFamily::uniform_box(vec![0.0, 0.0], vec![1.0, 1.0]).map_err(nerr)?;
    let ch = ChannelModel::new(signal, noise).map_err(nerr)?;
    let grid = if quick {
        epi_lab_core::log_grid(10.0, 10f64.powf(2.5), 2)
    } else {
        highsnr_grid()
    };
    let mc_samples = if quick { 150_000 } else { 1_000_000 };
    let h_x = 0.0; // ln of the unit square volume
    let mut sweep = Vec::with_capacity(grid.len());
    for (idx, &g) in grid.iter().enumerate() {
        let cfg = QuadratureConfig {
            mc_samples,
            mc_seed: seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(idx as u64 + 1)),
            ..QuadratureConfig::with_abs_tol(1e-8)
        };
        let (gap, _) = conditional_gap_continuous(&ch, g, &cfg)
            .map_err(|e| CliError::Numerical {
                gamma: g,
                reason: e.to_string(),
            })?;
        sweep.push(SweepPoint {
            gamma: g,
            value: h_x - gap.value,
            error_estimate: gap.error,
        });
    }
    let v = LimitVerdict {
        target: h_x,
        final_residual: (sweep.last().unwrap().value - h_x).abs(),
        sweep,
        fitted_exponent: None,
        fitted_constant: None,
    };
    rate_outcome(
        8,
        "rate fit, uniform/uniform d=2: exponent -1.0 +- 0.15 as stated",
        &v,
        -1.0,
        0.15,
    )
}

/// Criterion 9: pyramidal closed form against quadrature to 1e-8 on 100
/// random parallelogram points at (gamma, a) in {(100, 0.5), (400, 1)}.
pub fn criterion_09(quick: bool, seed: u64) -> Result<CriterionOutcome, CliError> {
    const TOL: f64 = 1e-8;
    let points = if quick { 25 } else { 100 };
    let cfg = QuadratureConfig::with_abs_tol(1e-12);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(9));
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for (gamma, a) in [(100.0, 0.5), (400.0, 1.0)] {
        let mut tested = 0;
        let mut max_diff: f64 = 0.0;
        while tested < points {
            let x = rng.gen_range(-1.0..1.0);
            let y = rng.gen_range(-a..a);
            if let Some(j) = pyramid_j_closed_form(&[x], &[y], gamma, &[a], &[0.0]) {
                let jq =
                    pyramid_j_quadrature(&[x], &[y], gamma, &[a], &[0.0], &cfg).map_err(nerr)?;
                max_diff = max_diff.max((j - jq).abs());
                tested += 1;
            }
        }
        worst = worst.max(max_diff);
        rows.push(Row {
            gamma,
            i: None,
            h_x_given_y: None,
            mmse: None,
            residual: Some(max_diff),
            error_estimate: cfg.abs_tol,
        });
    }
    Ok(CriterionOutcome {
        id: 9,
        name: "pyramidal closed form vs quadrature to 1e-8",
        passed: worst < TOL,
        details: format!("max |closed - quadrature| = {worst:.3e} over {points} points/case"),
        rows,
    })
}

/// Criterion 10: the Gaussian domination bound holds on a 21x21 probe grid
/// over [-3,3]^2 for gamma in {1, 10, 100} with f_X = phi, alpha = 1.
pub fn criterion_10(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    let n = if quick { 7 } else { 21 };
    let mut probes = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = -3.0 + 6.0 * i as f64 / (n - 1) as f64;
            let y = -3.0 + 6.0 * j as f64 / (n - 1) as f64;
            probes.push((vec![x], vec![y]));
        }
    }
    let cfg = QuadratureConfig::with_abs_tol(1e-10);
    let sigma = SpdMatrix::identity(1);
    let checks = domination_check(
        &n01(),
        &n01(),
        1.0,
        &sigma,
        &probes,
        &[1.0, 10.0, 100.0],
        &cfg,
    )
    .map_err(nerr)?;
    let violations = checks.iter().filter(|c| !c.ok).count();
    let worst_margin = checks
        .iter()
        .map(|c| c.bound - c.negative_part)
        .fold(f64::INFINITY, f64::min);
    Ok(CriterionOutcome {
        id: 10,
        name: "Gaussian domination bound on the probe grid",
        passed: violations == 0,
        details: format!(
            "{} probes, {violations} violations, smallest margin = {worst_margin:.3e}",
            checks.len()
        ),
        rows: Vec::new(),
    })
}

fn battery_pairs(quick: bool) -> Vec<(&'static str, MixedDistribution, MixedDistribution)> {
    let g = || MixedDistribution::from_density(n01());
    let mut pairs = vec![
        ("gaussian x gaussian", g(), g()),
        ("uniform x uniform", u01(), u01()),
    ];
    if !quick {
        pairs.push(("uniform x gaussian", u01(), g()));
        pairs.push(("pyramid x pyramid", pyr(), pyr()));
        pairs.push(("pyramid x gaussian", pyr(), g()));
        pairs.push(("mixture x gaussian", gaussian_mixture(), g()));
    }
    pairs
}

/// Criterion 11: all four inequality forms hold on the six-pair battery;
/// the Gaussian pair sits at equality to 1e-6; the uniform pair's power
/// slack is e - 2 within 1e-3.
pub fn criterion_11(quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    let cfg = QuadratureConfig::with_abs_tol(1e-10);
    let theta = std::f64::consts::FRAC_PI_4;
    let gammas = if quick { vec![1.0] } else { vec![0.5, 1.0, 2.0] };
    let mut passed = true;
    let mut details = String::new();
    for (name, x1, x2) in battery_pairs(quick) {
        let mut verdicts: Vec<EpiVerdict> = vec![
            epi_power_form(&x1, &x2, &cfg).map_err(nerr)?,
            epi_gaussian_comparison(&x1, &x2, &cfg).map_err(nerr)?,
            lieb_form(&x1, &x2, theta, &cfg).map_err(nerr)?,
        ];
        verdicts.extend(mmse_inequality(&x1, &x2, theta, &gammas, &cfg).map_err(nerr)?);
        let all_hold = verdicts.iter().all(|v| v.holds);
        passed &= all_hold;
        let min_slack = verdicts
            .iter()
            .map(|v| v.slack)
            .fold(f64::INFINITY, f64::min);
        details.push_str(&format!("{name}: holds = {all_hold}, min slack = {min_slack:.2e}; "));
        if name == "gaussian x gaussian" {
            let max_abs = verdicts
                .iter()
                .map(|v| v.slack.abs())
                .fold(0.0f64, f64::max);
            passed &= max_abs <= 1e-6;
            details.push_str(&format!("equality case max |slack| = {max_abs:.2e}; "));
        }
        if name == "uniform x uniform" {
            let power_slack = verdicts[0].slack;
            let dev = (power_slack - (std::f64::consts::E - 2.0)).abs();
            passed &= dev < 1e-3;
            details.push_str(&format!("power slack - (e-2) = {dev:.2e}; "));
        }
    }
    Ok(CriterionOutcome {
        id: 11,
        name: "entropy-power battery: all four forms hold on all pairs",
        passed,
        details,
        rows: Vec::new(),
    })
}

/// Criterion 12: the demonstration mode exhibits two-atom pairs violating
/// the exponentiated form.
pub fn criterion_12(_quick: bool, _seed: u64) -> Result<CriterionOutcome, CliError> {
    let demos = discrete_violation_demo();
    let all_violate = !demos.is_empty() && demos.iter().all(|d| !d.verdict.holds);
    let details = demos
        .iter()
        .map(|d| format!("{}: lhs = {:.4}, rhs = {:.4}", d.description, d.verdict.lhs, d.verdict.rhs))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(CriterionOutcome {
        id: 12,
        name: "discrete violation demonstration",
        passed: all_violate,
        details,
        rows: Vec::new(),
    })
}

/// Criterion 13 (in-process half): the Monte Carlo bearing sub-battery run
/// twice with one seed yields byte-identical CSV. The full end-to-end check
/// (the `verify-all` subcommand run twice) lives in the acceptance suite.
pub fn criterion_13(_quick: bool, seed: u64) -> Result<CriterionOutcome, CliError> {
    let once = criterion_08c(true, seed)?;
    let twice = criterion_08c(true, seed)?;
    let csv_a = rows_to_csv(&once.rows);
    let csv_b = rows_to_csv(&twice.rows);
    Ok(CriterionOutcome {
        id: 13,
        name: "determinism: identical seed, identical CSV bytes",
        passed: csv_a == csv_b,
        details: format!("{} bytes compared", csv_a.len()),
        rows: once.rows,
    })
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut s = String::from("gamma,I,h_x_given_y,mmse,residual,error_estimate\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.gamma,
            cell(r.i),
            cell(r.h_x_given_y),
            cell(r.mmse),
            cell(r.residual),
            r.error_estimate
        ));
    }
    s
}

/// Run the full battery in order. Criteria 8b and 8c encode stated
/// expectations that the measured decay contradicts; they are reported as
/// failures with the measured exponents in the details.
pub fn run_all(quick: bool, seed: u64) -> Result<Vec<CriterionOutcome>, CliError> {
    Ok(vec![
        criterion_01(quick, seed)?,
        criterion_02(quick, seed)?,
        criterion_03(quick, seed)?,
        criterion_04(quick, seed)?,
        criterion_05(quick, seed)?,
        criterion_06(quick, seed)?,
        criterion_07(quick, seed)?,
        criterion_08a(quick, seed)?,
        criterion_08b(quick, seed)?,
        criterion_08c(quick, seed)?,
        criterion_09(quick, seed)?,
        criterion_10(quick, seed)?,
        criterion_11(quick, seed)?,
        criterion_12(quick, seed)?,
        criterion_13(quick, seed)?,
    ])
}
