//! KLM reflectivity tuning: the (Δη₁, Δη₂) fidelity landscape, optimization
//! of η₂ with η₁ pinned at 1, joint (η₁, η₂) optimization, the efficiency
//! beyond which tuning stops helping, and the success-probability cost.
//!
//! All optimizations are minimax: the inner problem is the worst-case
//! fidelity over the input family, the outer maximizes it over reflectivity.
//! The inner search uses a coarsened grid during outer iterations; reported
//! fidelities are always re-verified at full grid density.

use crate::analysis::{
    coarse_config, min_fidelity, MinFidelityConfig, SweepRow,
};
use crate::fock::FockError;
use crate::gates::{build_klm, ns_nominal_etas, EfficiencyConfig};
use crate::optim::{golden_section, nelder_mead};

/// Outcome of one tuning run.
#[derive(Debug, Clone, Copy)]
pub struct TuneResult {
    pub eff: EfficiencyConfig,
    pub eta1: f64,
    pub eta2: f64,
    pub min_fidelity: f64,
    /// Worst-case fidelity at the nominal reflectivities and the same
    /// efficiencies.
    pub baseline_min_fidelity: f64,
    /// Success probability at the optimum, averaged over the four logical
    /// basis inputs.
    pub success_at_optimum: f64,
    /// Success probability of the nominal lossless gate.
    pub success_nominal_lossless: f64,
}

fn klm_row(
    eta1: f64,
    eta2: f64,
    eff: EfficiencyConfig,
    cfg: &MinFidelityConfig,
) -> Result<SweepRow, FockError> {
    min_fidelity(&build_klm(eta1, eta2), eff, cfg)
}

/// Coarse worst-case fidelity used inside outer loops; invalid or
/// zero-success points evaluate to 0.
fn coarse_fid(eta1: f64, eta2: f64, eff: EfficiencyConfig) -> f64 {
    if !(0.0..=1.0).contains(&eta1) || !(0.0..=1.0).contains(&eta2) {
        return 0.0;
    }
    match klm_row(eta1, eta2, eff, &coarse_config()) {
        Ok(row) if row.min_fidelity.is_finite() => row.min_fidelity,
        _ => 0.0,
    }
}

/// Worst-case fidelity of `build_klm(η₁+Δη₁, η₂+Δη₂)` over a grid of
/// reflectivity offsets; out-of-range points are NaN. Row index follows
/// `d_eta1_grid`, column index `d_eta2_grid`.
pub fn landscape(
    eff: EfficiencyConfig,
    d_eta1_grid: &[f64],
    d_eta2_grid: &[f64],
    cfg: &MinFidelityConfig,
) -> Result<Vec<Vec<f64>>, FockError> {
    let (n1, n2) = ns_nominal_etas();
    let mut out = Vec::with_capacity(d_eta1_grid.len());
    for &d1 in d_eta1_grid {
        let mut row = Vec::with_capacity(d_eta2_grid.len());
        for &d2 in d_eta2_grid {
            let (e1, e2) = (n1 + d1, n2 + d2);
            if !(0.0..=1.0).contains(&e1) || !(0.0..=1.0).contains(&e2) {
                row.push(f64::NAN);
                continue;
            }
            row.push(klm_row(e1, e2, eff, cfg)?.min_fidelity);
        }
        out.push(row);
    }
    Ok(out)
}

/// Default landscape offset grids: from the nominal reflectivity to each
/// [0, 1] boundary in 21 steps per axis.
pub fn default_landscape_grids() -> (Vec<f64>, Vec<f64>) {
    let (n1, n2) = ns_nominal_etas();
    let grid = |nominal: f64| -> Vec<f64> {
        (0..21)
            .map(|i| -nominal + i as f64 * (1.0 / 20.0))
            .filter(|d| (nominal + d) <= 1.0 + 1e-12)
            .collect()
    };
    (grid(n1), grid(n2))
}

fn finish(
    eff: EfficiencyConfig,
    eta1: f64,
    eta2: f64,
) -> Result<TuneResult, FockError> {
    let full = MinFidelityConfig::default();
    let opt_row = klm_row(eta1, eta2, eff, &full)?;
    let (n1, n2) = ns_nominal_etas();
    let baseline = klm_row(n1, n2, eff, &full)?;
    Ok(TuneResult {
        eff,
        eta1,
        eta2,
        min_fidelity: opt_row.min_fidelity,
        baseline_min_fidelity: baseline.min_fidelity,
        success_at_optimum: opt_row.success_avg_basis,
        success_nominal_lossless: n2 * n2,
    })
}

/// Maximizes worst-case fidelity over η₂ with η₁ fixed at 1: a coarse scan
/// brackets the optimum, golden-section refines it to 1e-5 in η₂, and the
/// result is re-verified at full grid density.
pub fn optimize_eta2(eff: EfficiencyConfig) -> Result<TuneResult, FockError> {
    let scan: Vec<f64> = (1..50).map(|i| i as f64 / 50.0).collect();
    let mut best_i = 0;
    let mut best_f = f64::NEG_INFINITY;
    for (i, &e2) in scan.iter().enumerate() {
        let f = coarse_fid(1.0, e2, eff);
        if f > best_f {
            best_f = f;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { 0.0 } else { scan[best_i - 1] };
    let hi = if best_i + 1 == scan.len() {
        1.0
    } else {
        scan[best_i + 1]
    };
    let (eta2, _) = golden_section(|e2| -coarse_fid(1.0, e2, eff), lo, hi, 1e-5);
    finish(eff, 1.0, eta2)
}

/// Maximizes worst-case fidelity over (η₁, η₂) jointly: a deterministic 9×9
/// seed grid is evaluated coarsely, Nelder–Mead refines from the best seeds
/// (plus the nominal point and the η₁=1 line optimum), and ties are broken
/// toward larger η₁.
pub fn optimize_joint(eff: EfficiencyConfig) -> Result<TuneResult, FockError> {
    let mut seeds: Vec<(f64, [f64; 2])> = Vec::new();
    for i in 1..=9 {
        for j in 1..=9 {
            let p = [i as f64 / 10.0, j as f64 / 10.0];
            seeds.push((-coarse_fid(p[0], p[1], eff), p));
        }
    }
    let (n1, n2) = ns_nominal_etas();
    let eta2_line = optimize_eta2(eff)?;
    for p in [[n1, n2], [1.0, eta2_line.eta2]] {
        seeds.push((-coarse_fid(p[0], p[1], eff), p));
    }
    seeds.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| b.1[0].partial_cmp(&a.1[0]).unwrap())
    });

    let mut best: (f64, [f64; 2]) = seeds[0];
    for &(seed_val, seed) in seeds.iter().take(7) {
        let (x, fx) = nelder_mead(
            |v| -coarse_fid(v[0].clamp(0.0, 1.0), v[1].clamp(0.0, 1.0), eff),
            &seed,
            0.05,
            1e-10,
            300,
        );
        let x = [x[0].clamp(0.0, 1.0), x[1].clamp(0.0, 1.0)];
        for cand in [(fx, x), (seed_val, seed)] {
            if cand.0 < best.0 - 1e-9
                || ((cand.0 - best.0).abs() <= 1e-9 && cand.1[0] > best.1[0])
            {
                best = cand;
            }
        }
    }
    finish(eff, best.1[0], best.1[1])
}

/// One row of the tuning-benefit table at equal source and detector
/// efficiency.
#[derive(Debug, Clone, Copy)]
pub struct CrossoverRow {
    pub efficiency: f64,
    pub baseline: f64,
    pub eta2_optimized: f64,
    pub joint_optimized: f64,
}

/// Compares nominal, η₁=1-optimized and jointly optimized fidelities on a
/// grid of equal efficiencies near 1, and locates the efficiency where the
/// η₁=1 strategy stops beating the nominal gate (expected near 0.995).
pub fn crossover_scan(grid: &[f64]) -> Result<(Vec<CrossoverRow>, Option<f64>), FockError> {
    let mut rows = Vec::with_capacity(grid.len());
    for &eta in grid {
        let eff = EfficiencyConfig::new(eta, eta);
        let line = optimize_eta2(eff)?;
        let joint = optimize_joint(eff)?;
        rows.push(CrossoverRow {
            efficiency: eta,
            baseline: line.baseline_min_fidelity,
            eta2_optimized: line.min_fidelity,
            joint_optimized: joint.min_fidelity,
        });
    }
    // First grid point at which the η₁=1 optimum no longer improves on the
    // baseline.
    let crossover = rows
        .iter()
        .find(|r| r.eta2_optimized <= r.baseline + 1e-9)
        .map(|r| r.efficiency);
    Ok((rows, crossover))
}

/// One row of the success-probability cost table.
#[derive(Debug, Clone, Copy)]
pub struct SuccessCostRow {
    pub efficiency: f64,
    pub success_at_optimum: f64,
    pub success_nominal_lossless: f64,
    pub ratio: f64,
}

/// Ratio of the η₂-optimized gate's success probability to the nominal
/// lossless success, at equal source and detector efficiencies.
pub fn success_cost(grid: &[f64]) -> Result<Vec<SuccessCostRow>, FockError> {
    grid.iter()
        .map(|&eta| {
            let r = optimize_eta2(EfficiencyConfig::new(eta, eta))?;
            Ok(SuccessCostRow {
                efficiency: eta,
                success_at_optimum: r.success_at_optimum,
                success_nominal_lossless: r.success_nominal_lossless,
                ratio: r.success_at_optimum / r.success_nominal_lossless,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{
        build_klm_nominal, run_gate_with_detector_efficiencies, EfficiencyConfig,
    };
    use crate::fock::C64;

    #[test]
    fn landscape_ideal_origin_is_one() {
        let v = landscape(
            EfficiencyConfig::ideal(),
            &[0.0],
            &[0.0],
            &coarse_config(),
        )
        .unwrap();
        assert!(v[0][0] > 1.0 - 1e-9);
    }

    #[test]
    fn landscape_monotone_in_eta1_under_detector_loss() {
        // Fidelity increases along Δη₁ up to the η₁=1 boundary.
        let eff = EfficiencyConfig::new(1.0, 0.9);
        let (n1, _) = ns_nominal_etas();
        let d1: Vec<f64> = (0..6).map(|i| (1.0 - n1) * i as f64 / 5.0).collect();
        let v = landscape(eff, &d1, &[0.0], &coarse_config()).unwrap();
        for w in v.windows(2) {
            assert!(w[1][0] >= w[0][0] - 1e-9, "{v:?}");
        }
    }

    #[test]
    fn optimize_eta2_ideal_hits_quarter_reflectivity_ceiling() {
        // With η₁ = 1 the NS amplitude conditions t₀ = t₁ = −t₂ have no
        // solution; the lossless optimum is η₂ = 1/4 (which equalizes t₀ and
        // t₁) with a worst-case fidelity strictly below 1. This is why
        // pinning η₁ = 1 stops paying off at near-perfect efficiencies.
        let r = optimize_eta2(EfficiencyConfig::ideal()).unwrap();
        assert_eq!(r.eta1, 1.0);
        assert!((r.eta2 - 0.25).abs() < 5e-3, "{r:?}");
        assert!(r.min_fidelity > 0.98 && r.min_fidelity < 1.0 - 1e-6, "{r:?}");
        assert!(r.baseline_min_fidelity > 1.0 - 1e-9);
    }

    #[test]
    fn optimize_joint_ideal_recovers_nominal_perfection() {
        let r = optimize_joint(EfficiencyConfig::ideal()).unwrap();
        assert!(r.min_fidelity > 1.0 - 1e-9, "{r:?}");
    }

    #[test]
    fn joint_beats_line_and_baseline() {
        for eta in [0.9, 0.95] {
            let eff = EfficiencyConfig::new(eta, eta);
            let line = optimize_eta2(eff).unwrap();
            let joint = optimize_joint(eff).unwrap();
            assert!(joint.min_fidelity >= line.min_fidelity - 1e-9);
            assert!(line.min_fidelity >= line.baseline_min_fidelity - 1e-9);
            assert!(joint.min_fidelity >= joint.baseline_min_fidelity - 1e-9);
        }
    }

    #[test]
    fn eta1_one_decouples_vacuum_detector() {
        // With η₁ = 1 the vacuum-ancilla beamsplitters are the identity on
        // the occupied sector, so the zero-photon detectors (modes 3 and 5)
        // cannot influence the output however lossy they are.
        let spec = build_klm(1.0, 0.3);
        let input: Vec<C64> = vec![C64::new(0.5, 0.0); 4];
        let base = run_gate_with_detector_efficiencies(
            &spec,
            &input,
            0.9,
            &[0.9, 1.0, 0.9, 1.0],
        )
        .unwrap();
        let varied = run_gate_with_detector_efficiencies(
            &spec,
            &input,
            0.9,
            &[0.9, 0.3, 0.9, 0.55],
        )
        .unwrap();
        assert!(
            (base.success_probability - varied.success_probability).abs() < 1e-12
        );
        let dev = (&base.rho_out.mat - &varied.rho_out.mat)
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-12, "decoupled detector changed the output: {dev}");
    }

    #[test]
    fn optimizers_deterministic() {
        let eff = EfficiencyConfig::new(0.95, 0.95);
        let a = optimize_eta2(eff).unwrap();
        let b = optimize_eta2(eff).unwrap();
        assert_eq!(a.eta2.to_bits(), b.eta2.to_bits());
        assert_eq!(a.min_fidelity.to_bits(), b.min_fidelity.to_bits());
    }

    #[test]
    fn nominal_baseline_sanity() {
        let (n1, n2) = ns_nominal_etas();
        let _ = build_klm_nominal();
        assert!((n1 - 0.757_359_312_880_714_8).abs() < 1e-12);
        assert!((n2 - 0.226_540_919_660_986_55).abs() < 1e-12);
    }
}
