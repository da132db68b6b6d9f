//! Self-verification suite backing `loqc verify`.
//!
//! Each criterion checks one published or derived property of the three
//! C-sign gates. Two criteria (5 and 13) record reference claims this model
//! does not reproduce; they are reported honestly as failures and the
//! `expected` flag marks which outcome the suite itself anticipates, so that
//! regressions are still caught. See the criterion comments for the
//! quantitative analysis.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    fidelity_at, min_fidelity, sweep_efficiency, InputParams, MinFidelityConfig, SweepAxis,
};
use crate::fock::{enumerate_basis, DensityOperator, PureState};
use crate::gates::{
    build_channel, build_by_name, build_klm, build_klm_dual_rail, build_klm_nominal, build_ns,
    ideal_truth_check, ns_nominal_etas, EfficiencyConfig,
};
use crate::optics::{apply_loss, LossMethod};
use crate::optim::golden_section;
use crate::tuner::{crossover_scan, optimize_eta2, optimize_joint, success_cost};

/// Outcome of one verification criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Whether the suite expects this criterion to pass. A mismatch between
    /// `passed` and `expected` means the model changed.
    pub expected: bool,
    pub detail: String,
}

fn outcome(id: usize, name: &'static str, expected: bool, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed,
        expected,
        detail,
    }
}

const GATES: [&str; 3] = ["klm", "knill", "pjf"];

fn c1_ideal_truth_tables() -> CriterionOutcome {
    let start = Instant::now();
    let mut detail = String::new();
    let mut pass = true;
    for name in GATES {
        let spec = build_by_name(name).unwrap();
        match ideal_truth_check(&spec) {
            Ok(rep) => {
                let worst = rep.fidelities.iter().cloned().fold(1.0f64, f64::min);
                if worst < 1.0 - 1e-9 {
                    pass = false;
                }
                write!(detail, "{name} worst_f={worst:.12} ").unwrap();
            }
            Err(e) => {
                pass = false;
                write!(detail, "{name} error={e:?} ").unwrap();
            }
        }
    }
    if start.elapsed().as_secs_f64() >= 10.0 {
        pass = false;
        detail.push_str("overtime ");
    }
    outcome(1, "ideal-truth-tables", true, pass, detail)
}

fn c2_ideal_success() -> CriterionOutcome {
    let mut detail = String::new();
    let mut pass = true;
    for (name, target, tol) in [
        ("knill", 2.0 / 27.0, 1e-9),
        ("pjf", 0.25, 1e-9),
        ("klm", 0.05, 3e-3),
    ] {
        let spec = build_by_name(name).unwrap();
        let rep = ideal_truth_check(&spec).unwrap();
        let dev = rep
            .success_probabilities
            .iter()
            .map(|s| (s - target).abs())
            .fold(0.0f64, f64::max);
        if dev > tol {
            pass = false;
        }
        write!(detail, "{name} max|s-{target:.6}|={dev:.3e} ").unwrap();
    }
    outcome(2, "ideal-success-probabilities", true, pass, detail)
}

fn c3_ns_conditional_map() -> CriterionOutcome {
    let (e1, e2) = ns_nominal_etas();
    let spec = build_ns(e1, e2);
    let chan = build_channel(&spec, EfficiencyConfig::ideal()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut successes = Vec::new();
    let mut worst_f = 1.0f64;
    for _ in 0..20 {
        let mut amp: Vec<C64> = (0..3)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amp {
            *a /= norm;
        }
        let (f, s) = chan.evaluate(&amp);
        successes.push(s);
        worst_f = worst_f.min(f);
    }
    let mean = successes.iter().sum::<f64>() / successes.len() as f64;
    let var = successes
        .iter()
        .map(|s| (s - mean) * (s - mean))
        .sum::<f64>()
        / successes.len() as f64;
    let pass = var < 1e-18 && worst_f >= 1.0 - 1e-9;
    outcome(
        3,
        "ns-conditional-map",
        true,
        pass,
        format!("success_var={var:.3e} worst_f={worst_f:.12} mean_s={mean:.9}"),
    )
}

fn c4_loss_oracles() -> CriterionOutcome {
    let start = Instant::now();
    let basis = enumerate_basis(3, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut amp: Vec<C64> = (0..basis.dimension())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amp {
            *a /= norm;
        }
        let psi = PureState::from_amplitudes(basis.clone(), amp).unwrap();
        let rho = DensityOperator::from_pure(&psi);
        let mode = rng.gen_range(0..3);
        let eta = rng.gen_range(0.0..1.0);
        let a = apply_loss(&rho, mode, eta, LossMethod::Kraus).unwrap();
        let b = apply_loss(&rho, mode, eta, LossMethod::AncillaTrace).unwrap();
        let dev = a
            .mat
            .iter()
            .zip(b.mat.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        worst = worst.max(dev);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 1e-10 && elapsed < 5.0;
    outcome(
        4,
        "loss-channel-oracle",
        true,
        pass,
        format!("max_deviation={worst:.3e}"),
    )
}

/// Detector-efficiency comparison of the Knill and KLM gates.
///
/// The reference claim is that the Knill gate pulls ahead of the KLM gate
/// for detector efficiencies above roughly 0.93. This model does not
/// reproduce that: to first order in the loss (1-eta_det), the worst-case
/// infidelity is (1-eta)*c with c = (1-eta1) + 4*eta1*(1-eta2) = 2.586 for
/// the KLM gate (verified analytically against the simulation) and c = 3.0
/// for the Knill gate — a constant pinned across all 1024 beamsplitter
/// orderings, orientations and sign conventions that realize the Knill gate
/// at its quoted reflectivities. With 2.586 < 3.0 the KLM curve stays above
/// the Knill curve at every detector efficiency and the curves only meet at
/// 1, so no crossing exists. Reported as an expected failure.
fn c5_detector_crossover() -> CriterionOutcome {
    let klm = build_klm_nominal();
    let knill = build_by_name("knill").unwrap();
    let cfg = MinFidelityConfig::default();
    let mut detail = String::new();
    let mut high_ok = true;
    let mut low_ok = true;
    let mut diffs: Vec<(f64, f64)> = Vec::new();
    for i in 0..=13 {
        let eta = 0.86 + 0.01 * i as f64;
        let eff = EfficiencyConfig::new(1.0, eta);
        let k = min_fidelity(&klm, eff, &cfg).unwrap().min_fidelity;
        let n = min_fidelity(&knill, eff, &cfg).unwrap().min_fidelity;
        diffs.push((eta, n - k));
        if eta >= 0.95 - 1e-12 && n <= k {
            high_ok = false;
        }
        if eta <= 0.90 + 1e-12 && n >= k {
            low_ok = false;
        }
    }
    let crossing = diffs
        .windows(2)
        .find(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| w[1].0);
    let crossing_ok = matches!(crossing, Some(x) if (0.91..=0.95).contains(&x));
    write!(
        detail,
        "knill-klm at 0.90: {:+.6}, at 0.95: {:+.6}, crossing: {:?}",
        diffs.iter().find(|d| (d.0 - 0.90).abs() < 1e-9).unwrap().1,
        diffs.iter().find(|d| (d.0 - 0.95).abs() < 1e-9).unwrap().1,
        crossing
    )
    .unwrap();
    outcome(
        5,
        "detector-efficiency-crossover",
        false,
        high_ok && low_ok && crossing_ok,
        detail,
    )
}

fn c6_source_ordering() -> CriterionOutcome {
    let cfg = MinFidelityConfig::default();
    let grid: Vec<f64> = (0..=10).map(|i| 0.8 + 0.02 * i as f64).collect();
    let mut rows = Vec::new();
    for name in GATES {
        let spec = build_by_name(name).unwrap();
        rows.push(sweep_efficiency(&spec, SweepAxis::Source, &grid, &cfg).unwrap());
    }
    let mut pass = true;
    let mut worst_margin = f64::INFINITY;
    for i in 0..grid.len() {
        let klm = rows[0][i].min_fidelity;
        for other in &rows[1..] {
            let margin = klm - other[i].min_fidelity;
            worst_margin = worst_margin.min(margin);
            if margin < -1e-12 {
                pass = false;
            }
        }
    }
    outcome(
        6,
        "source-efficiency-ordering",
        true,
        pass,
        format!("min margin klm-vs-others={worst_margin:.3e}"),
    )
}

fn c7_klm_bias_structure() -> CriterionOutcome {
    let spec = build_klm_nominal();
    let eff = EfficiencyConfig::new(1.0, 0.9);
    use std::f64::consts::FRAC_PI_2;
    let (f00, _) = fidelity_at(&spec, eff, InputParams::new(0.0, 0.0, 0.0)).unwrap();
    let (f01, _) = fidelity_at(&spec, eff, InputParams::new(FRAC_PI_2, FRAC_PI_2, 0.0)).unwrap();
    let (f10, _) = fidelity_at(&spec, eff, InputParams::new(FRAC_PI_2, 0.0, 0.0)).unwrap();
    let row = min_fidelity(&spec, eff, &MinFidelityConfig::default()).unwrap();
    let pass = (f00 - 1.0).abs() <= 1e-9
        && (f01 - f10).abs() <= 1e-9
        && (row.min_fidelity - f01).abs() <= 1e-6;
    outcome(
        7,
        "klm-bias-structure",
        true,
        pass,
        format!(
            "f00={f00:.12} f01={f01:.9} f10={f10:.9} min={:.9}",
            row.min_fidelity
        ),
    )
}

fn c8_tuning_optima() -> CriterionOutcome {
    let line98 = optimize_eta2(EfficiencyConfig::new(0.98, 1.0)).unwrap();
    let joint98 = optimize_joint(EfficiencyConfig::new(0.98, 1.0)).unwrap();
    let line80 = optimize_eta2(EfficiencyConfig::new(0.8, 1.0)).unwrap();
    let joint80 = optimize_joint(EfficiencyConfig::new(0.8, 1.0)).unwrap();
    let pass = (line98.min_fidelity - 0.956).abs() <= 0.005
        && (joint98.min_fidelity - 0.959).abs() <= 0.005
        && (joint98.eta1 - 0.7703).abs() <= 0.02
        && (joint98.eta2 - 0.1838).abs() <= 0.02
        && (line80.min_fidelity - 0.723).abs() <= 0.005
        && (joint80.min_fidelity - line80.min_fidelity) < 0.001;
    outcome(
        8,
        "tuning-optima",
        true,
        pass,
        format!(
            "line98={:.6} joint98={:.6}@({:.4},{:.4}) line80={:.6} joint80={:.6}",
            line98.min_fidelity,
            joint98.min_fidelity,
            joint98.eta1,
            joint98.eta2,
            line80.min_fidelity,
            joint80.min_fidelity
        ),
    )
}

/// Best worst-case fidelity over eta2 at a fixed eta1.
fn best_over_eta2(eta1: f64, eff: EfficiencyConfig) -> f64 {
    let coarse = crate::analysis::coarse_config();
    let score = |e2: f64| -> f64 {
        if !(0.0..=1.0).contains(&e2) {
            return 0.0;
        }
        match min_fidelity(&build_klm(eta1, e2), eff, &coarse) {
            Ok(r) if r.min_fidelity.is_finite() => r.min_fidelity,
            _ => 0.0,
        }
    };
    let mut best = (0.0f64, 0.0f64);
    for i in 1..50 {
        let e2 = i as f64 / 50.0;
        let f = score(e2);
        if f > best.1 {
            best = (e2, f);
        }
    }
    let (e2, _) = golden_section(
        |x| -score(x),
        (best.0 - 0.02).max(0.0),
        (best.0 + 0.02).min(1.0),
        1e-5,
    );
    min_fidelity(&build_klm(eta1, e2), eff, &MinFidelityConfig::default())
        .unwrap()
        .min_fidelity
}

fn c9_landscape_monotonicity() -> CriterionOutcome {
    let eff = EfficiencyConfig::new(1.0, 0.9);
    let (e1_nom, _) = ns_nominal_etas();
    let steps = 10;
    let mut prev = f64::NEG_INFINITY;
    let mut pass = true;
    let mut first = 0.0;
    let mut last = 0.0;
    for i in 0..=steps {
        let eta1 = e1_nom + (1.0 - e1_nom) * i as f64 / steps as f64;
        let f = best_over_eta2(eta1, eff);
        if i == 0 {
            first = f;
        }
        last = f;
        if f < prev - 1e-6 {
            pass = false;
        }
        prev = f;
    }
    outcome(
        9,
        "landscape-monotonicity",
        true,
        pass,
        format!("f(eta1_nominal)={first:.6} f(eta1=1)={last:.6}"),
    )
}

fn c10_eta1_crossover() -> CriterionOutcome {
    let grid: Vec<f64> = (0..=10).map(|i| 0.99 + 0.001 * i as f64).collect();
    let (_, crossover) = crossover_scan(&grid).unwrap();
    let pass = matches!(crossover, Some(x) if (x - 0.995).abs() <= 0.002);
    outcome(
        10,
        "eta1-removal-crossover",
        true,
        pass,
        format!("crossover={crossover:?}"),
    )
}

fn c11_success_floor() -> CriterionOutcome {
    let grid: Vec<f64> = (0..=10).map(|i| 0.8 + 0.02 * i as f64).collect();
    let rows = success_cost(&grid).unwrap();
    let worst = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    outcome(
        11,
        "success-probability-floor",
        true,
        worst >= 0.18,
        format!("min success ratio={worst:.6}"),
    )
}

fn c12_dual_rail_equivalence() -> CriterionOutcome {
    let start = Instant::now();
    let (e1, e2) = ns_nominal_etas();
    let cfg = MinFidelityConfig::default();
    let mut pass = true;
    let mut detail = String::new();
    for eta_det in [1.0, 0.9] {
        let eff = EfficiencyConfig::new(1.0, eta_det);
        let single = min_fidelity(&build_klm(e1, e2), eff, &cfg)
            .unwrap()
            .min_fidelity;
        let dual = min_fidelity(&build_klm_dual_rail(e1, e2), eff, &cfg)
            .unwrap()
            .min_fidelity;
        if (single - dual).abs() > 1e-9 {
            pass = false;
        }
        write!(detail, "det={eta_det}: |single-dual|={:.3e} ", (single - dual).abs()).unwrap();
    }
    if start.elapsed().as_secs_f64() >= 300.0 {
        pass = false;
        detail.push_str("overtime ");
    }
    outcome(12, "dual-rail-equivalence", true, pass, detail)
}

/// Headline claim: at source and detector efficiency 0.9 the tuned KLM gate
/// reaches worst-case fidelity 0.8. The measured optimum in this model is
/// 0.772 (a dense scan over both reflectivities, with the golden-section and
/// joint optimizers agreeing, tops out there; the worst case sits at the
/// |01⟩ input). The single-axis anchors — 0.956 at source 0.98 and 0.723 at
/// source 0.8 — are reproduced to three decimals, so the shortfall is a
/// property of the model, not of the optimizer. Reported as an expected
/// failure.
fn c13_headline_sanity() -> CriterionOutcome {
    let line = optimize_eta2(EfficiencyConfig::new(0.9, 0.9)).unwrap();
    let joint = optimize_joint(EfficiencyConfig::new(0.9, 0.9)).unwrap();
    let best = line.min_fidelity.max(joint.min_fidelity);
    outcome(
        13,
        "headline-sanity",
        false,
        best >= 0.8,
        format!(
            "optimized min_fidelity={best:.6} (eta2-line {:.6}, joint {:.6})",
            line.min_fidelity, joint.min_fidelity
        ),
    )
}

fn c14_determinism() -> CriterionOutcome {
    let spec = build_klm_nominal();
    let eff = EfficiencyConfig::new(0.95, 0.93);
    let cfg = MinFidelityConfig::default();
    let a = min_fidelity(&spec, eff, &cfg).unwrap();
    let b = min_fidelity(&spec, eff, &cfg).unwrap();
    let fid_ok = a.min_fidelity.to_bits() == b.min_fidelity.to_bits()
        && a.argmin.alpha.to_bits() == b.argmin.alpha.to_bits()
        && a.argmin.beta.to_bits() == b.argmin.beta.to_bits()
        && a.argmin.gamma.to_bits() == b.argmin.gamma.to_bits();
    let t1 = optimize_eta2(eff).unwrap();
    let t2 = optimize_eta2(eff).unwrap();
    let tune_ok = t1.min_fidelity.to_bits() == t2.min_fidelity.to_bits()
        && t1.eta2.to_bits() == t2.eta2.to_bits();
    outcome(
        14,
        "determinism",
        true,
        fid_ok && tune_ok,
        format!("repeat-evaluation bit-identical: fidelity={fid_ok} tuner={tune_ok}"),
    )
}

/// Run all verification criteria in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        c1_ideal_truth_tables(),
        c2_ideal_success(),
        c3_ns_conditional_map(),
        c4_loss_oracles(),
        c5_detector_crossover(),
        c6_source_ordering(),
        c7_klm_bias_structure(),
        c8_tuning_optima(),
        c9_landscape_monotonicity(),
        c10_eta1_crossover(),
        c11_success_floor(),
        c12_dual_rail_equivalence(),
        c13_headline_sanity(),
        c14_determinism(),
    ]
}

/// Deterministic plain-text report, one line per criterion.
pub fn report(outcomes: &[CriterionOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        let note = if o.passed == o.expected {
            ""
        } else if o.expected {
            " (regression)"
        } else {
            " (unexpected pass)"
        };
        let expected_note = if !o.expected && !o.passed {
            " [known]"
        } else {
            note
        };
        writeln!(
            out,
            "{:>2} {status}{expected_note} {} — {}",
            o.id,
            o.name,
            o.detail.trim_end()
        )
        .unwrap();
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    writeln!(out, "{passed}/{} criteria passed", outcomes.len()).unwrap();
    out
}
