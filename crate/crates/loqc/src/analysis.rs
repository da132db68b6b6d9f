//! Worst-case fidelity machinery: the three-angle input family, per-input
//! fidelity, the minimum-fidelity search (coarse grid plus Nelder–Mead
//! refinement), and efficiency sweeps.

use std::f64::consts::PI;

use crate::fock::{C64, FockError};
use crate::gates::{build_channel, ConditionalChannel, EfficiencyConfig, GateSpec};
use crate::optim::nelder_mead;

/// Angles of the real-amplitude input family
/// cos α |00⟩ + sin α sin β cos γ |01⟩ + sin α cos β |10⟩
/// + sin α sin β sin γ |11⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl InputParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }
}

/// Logical amplitudes (|00⟩, |01⟩, |10⟩, |11⟩) of the input family; unit
/// norm by construction.
pub fn input_amplitudes(p: InputParams) -> Vec<C64> {
    let (sa, ca) = p.alpha.sin_cos();
    let (sb, cb) = p.beta.sin_cos();
    let (sg, cg) = p.gamma.sin_cos();
    vec![
        C64::new(ca, 0.0),
        C64::new(sa * sb * cg, 0.0),
        C64::new(sa * cb, 0.0),
        C64::new(sa * sb * sg, 0.0),
    ]
}

/// Input amplitudes with extra local phases e^{iφ₁} (qubit 1) and e^{iφ₂}
/// (qubit 2) on the single-photon rails; used by the opt-in extended search.
pub fn input_amplitudes_phased(p: InputParams, phi1: f64, phi2: f64) -> Vec<C64> {
    let base = input_amplitudes(p);
    let e1 = C64::from_polar(1.0, phi1);
    let e2 = C64::from_polar(1.0, phi2);
    vec![base[0], base[1] * e2, base[2] * e1, base[3] * e1 * e2]
}

/// Amplitudes of the ideal C-sign output: the input with the |11⟩ term
/// negated.
pub fn expected_amplitudes(p: InputParams) -> Vec<C64> {
    let mut a = input_amplitudes(p);
    a[3] = -a[3];
    a
}

/// One evaluated efficiency point.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub eta_src: f64,
    pub eta_det: f64,
    pub min_fidelity: f64,
    pub argmin: InputParams,
    pub success_at_argmin: f64,
    pub success_avg_basis: f64,
    /// True when the refined argmin lies on the angle-domain boundary.
    pub boundary: bool,
}

/// Fidelity and success probability for one input.
pub fn fidelity_at(
    gate: &GateSpec,
    eff: EfficiencyConfig,
    p: InputParams,
) -> Result<(f64, f64), FockError> {
    let chan = build_channel(gate, eff)?;
    Ok(chan.evaluate(&input_amplitudes(p)))
}

/// Search configuration for [`min_fidelity`].
#[derive(Debug, Clone, Copy)]
pub struct MinFidelityConfig {
    /// Points per angle on the coarse grid over [0, π].
    pub grid_density: usize,
    /// Number of best grid points used to seed refinement.
    pub refine_starts: usize,
    /// Fidelity convergence tolerance of the refinement.
    pub ftol: f64,
    /// Also search over two local input phases (robustness check).
    pub extended_phases: bool,
}

impl Default for MinFidelityConfig {
    fn default() -> Self {
        Self {
            grid_density: 17,
            refine_starts: 5,
            ftol: 1e-7,
            extended_phases: false,
        }
    }
}

/// Coarser configuration for use inside outer optimization loops.
pub fn coarse_config() -> MinFidelityConfig {
    MinFidelityConfig {
        grid_density: 9,
        ..Default::default()
    }
}

fn clamp_angles(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.clamp(0.0, PI)).collect()
}

fn eval_point(chan: &ConditionalChannel, v: &[f64], extended: bool) -> f64 {
    let p = InputParams::new(v[0], v[1], v[2]);
    let amps = if extended {
        input_amplitudes_phased(p, v[3], v[4])
    } else {
        input_amplitudes(p)
    };
    let (f, _) = chan.evaluate(&amps);
    if f.is_nan() {
        1.0
    } else {
        f
    }
}

/// Minimum fidelity over the input family for a prebuilt channel.
pub fn min_fidelity_channel(
    chan: &ConditionalChannel,
    eff: EfficiencyConfig,
    cfg: &MinFidelityConfig,
) -> SweepRow {
    let g = cfg.grid_density.max(2);
    let angle = |i: usize| PI * i as f64 / (g - 1) as f64;
    let phase_grid = 8usize;
    let dims = if cfg.extended_phases { 5 } else { 3 };

    // Coarse deterministic grid.
    let mut evaluated: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut idx = vec![0usize; dims];
    loop {
        let v: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                if k < 3 {
                    angle(i)
                } else {
                    2.0 * PI * i as f64 / phase_grid as f64
                }
            })
            .collect();
        evaluated.push((eval_point(chan, &v, cfg.extended_phases), v));
        let mut k = dims;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            idx[k] += 1;
            let cap = if k < 3 { g } else { phase_grid };
            if idx[k] < cap {
                break;
            }
            idx[k] = 0;
            if k == 0 {
                k = usize::MAX;
                break;
            }
        }
        if k == usize::MAX {
            break;
        }
    }
    evaluated.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| a.1.partial_cmp(&b.1).unwrap())
    });
    let best_grid = evaluated[0].clone();

    // Refine from the K best grid points.
    let step = PI / (g - 1) as f64 * 0.5;
    let mut best: (f64, Vec<f64>) = best_grid.clone();
    for (_, start) in evaluated.iter().take(cfg.refine_starts) {
        let (x, fx) = nelder_mead(
            |v| {
                let mut w = clamp_angles(&v[..3]);
                if cfg.extended_phases {
                    w.extend_from_slice(&v[3..]);
                }
                eval_point(chan, &w, cfg.extended_phases)
            },
            start,
            step,
            cfg.ftol,
            400,
        );
        let x = {
            let mut w = clamp_angles(&x[..3]);
            if cfg.extended_phases {
                w.extend_from_slice(&x[3..]);
            }
            w
        };
        if fx < best.0 - 1e-9 || (fx < best.0 + 1e-9 && x < best.1) {
            best = (fx, x);
        }
    }
    // Monotone improvement: never report above the best grid value.
    if best_grid.0 < best.0 {
        best = best_grid;
    }

    let argmin = InputParams::new(best.1[0], best.1[1], best.1[2]);
    let amps = if cfg.extended_phases {
        input_amplitudes_phased(argmin, best.1[3], best.1[4])
    } else {
        input_amplitudes(argmin)
    };
    let (_, success_at_argmin) = chan.evaluate(&amps);
    let mut success_avg = 0.0;
    for l in 0..4 {
        let mut e = vec![C64::new(0.0, 0.0); 4];
        e[l] = C64::new(1.0, 0.0);
        success_avg += chan.evaluate(&e).1 / 4.0;
    }
    let boundary = best.1[..3]
        .iter()
        .any(|&x| x < 1e-9 || (PI - x).abs() < 1e-9);
    SweepRow {
        eta_src: eff.eta_src,
        eta_det: eff.eta_det,
        min_fidelity: best.0,
        argmin,
        success_at_argmin,
        success_avg_basis: success_avg,
        boundary,
    }
}

/// Minimum fidelity over the input family.
pub fn min_fidelity(
    gate: &GateSpec,
    eff: EfficiencyConfig,
    cfg: &MinFidelityConfig,
) -> Result<SweepRow, FockError> {
    let chan = build_channel(gate, eff)?;
    Ok(min_fidelity_channel(&chan, eff, cfg))
}

/// Which efficiency the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Detector,
    Source,
    JointEqual,
}

impl SweepAxis {
    pub fn efficiencies(&self, eta: f64) -> EfficiencyConfig {
        match self {
            SweepAxis::Detector => EfficiencyConfig::new(1.0, eta),
            SweepAxis::Source => EfficiencyConfig::new(eta, 1.0),
            SweepAxis::JointEqual => EfficiencyConfig::new(eta, eta),
        }
    }
}

/// Minimum fidelity along an efficiency grid, rows in grid order.
pub fn sweep_efficiency(
    gate: &GateSpec,
    axis: SweepAxis,
    grid: &[f64],
    cfg: &MinFidelityConfig,
) -> Result<Vec<SweepRow>, FockError> {
    grid.iter()
        .map(|&eta| min_fidelity(gate, axis.efficiencies(eta), cfg))
        .collect()
}
