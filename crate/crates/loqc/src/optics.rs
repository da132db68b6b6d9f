//! Linear-optical circuit elements over truncated Fock space.
//!
//! Beamsplitters are real orthogonal 2x2 mode transformations under one of
//! two sign conventions: a sign change on reflection off the marked side, or
//! a sign change on transmission through the marked side. [`lift_unitary`]
//! carries an arbitrary M-mode transformation to the multi-photon Fock space
//! via the standard permanent formula; beamsplitters additionally have a fast
//! structured application path that avoids building the full lifted matrix.
//!
//! Photon loss is a single-mode channel available in two interchangeable
//! implementations: an operator-sum (Kraus) form, and the literal model of a
//! beamsplitter coupling to an appended vacuum mode that is then traced out.

use std::sync::Arc;

use ndarray::Array2;

use crate::fock::{
    partial_trace, C64, DensityOperator, FockBasis, FockError, PureState,
};

/// Which amplitude carries the sign flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Minus sign on the reflection amplitude of the marked-side input.
    SignOnReflection,
    /// Minus sign on the transmission amplitude of the marked-side input.
    SignOnTransmission,
}

/// Which of the two coupled modes faces the marked side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Second mode of the pair is marked.
    Ab,
    /// First mode of the pair is marked.
    Ba,
}

#[derive(Debug, Clone, Copy)]
pub struct BeamsplitterSpec {
    /// Reflectivity in [0, 1].
    pub eta: f64,
    pub convention: Convention,
    pub orientation: Orientation,
    /// The two coupled mode indices.
    pub modes: (usize, usize),
}

impl BeamsplitterSpec {
    pub fn new(
        eta: f64,
        convention: Convention,
        orientation: Orientation,
        modes: (usize, usize),
    ) -> Self {
        assert!((0.0..=1.0).contains(&eta), "reflectivity out of range");
        assert_ne!(modes.0, modes.1);
        Self {
            eta,
            convention,
            orientation,
            modes,
        }
    }
}

/// The 2x2 mode matrix of a beamsplitter, acting on amplitude column vectors
/// over the ordered mode pair.
pub fn bs_mode_matrix(spec: &BeamsplitterSpec) -> [[f64; 2]; 2] {
    let r = spec.eta.sqrt();
    let t = (1.0 - spec.eta).sqrt();
    match (spec.convention, spec.orientation) {
        // Reflection amplitudes sit on the diagonal, transmission off it.
        (Convention::SignOnReflection, Orientation::Ab) => [[r, t], [t, -r]],
        (Convention::SignOnReflection, Orientation::Ba) => [[-r, t], [t, r]],
        (Convention::SignOnTransmission, Orientation::Ab) => [[r, -t], [t, r]],
        (Convention::SignOnTransmission, Orientation::Ba) => [[r, t], [-t, r]],
    }
}

/// Single-mode photon-loss channel of the given efficiency.
#[derive(Debug, Clone, Copy)]
pub struct LossChannel {
    pub efficiency: f64,
    pub mode: usize,
}

/// A step in a linear-optical circuit.
#[derive(Debug, Clone)]
pub enum CircuitElement {
    Beamsplitter(BeamsplitterSpec),
    Loss(LossChannel),
    /// `perm[new_mode] = old_mode`.
    Permutation(Vec<usize>),
}

/// Permanent of a small square matrix (Ryser's formula).
pub fn permanent(m: &Array2<C64>) -> C64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    for subset in 1u32..(1 << n) {
        let mut prod = C64::new(1.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                if subset & (1 << j) != 0 {
                    row += m[(i, j)];
                }
            }
            prod *= row;
        }
        let sign = if (n as u32 - subset.count_ones()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        total += prod * sign;
    }
    total
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

fn unitarity_deviation(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += m[(k, i)].conj() * m[(k, j)];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((acc - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Multi-photon transition amplitude `⟨out|U_F|in⟩` for a mode matrix `m`,
/// via the permanent of the row/column-repeated matrix.
pub fn transition_amplitude(m: &Array2<C64>, out_occ: &[u8], in_occ: &[u8]) -> C64 {
    let n_out: u32 = out_occ.iter().map(|&x| x as u32).sum();
    let n_in: u32 = in_occ.iter().map(|&x| x as u32).sum();
    if n_out != n_in {
        return C64::new(0.0, 0.0);
    }
    if n_in == 0 {
        return C64::new(1.0, 0.0);
    }
    let k = n_in as usize;
    let mut rep = Array2::zeros((k, k));
    let mut r = 0;
    for (i, &mi) in out_occ.iter().enumerate() {
        for _ in 0..mi {
            let mut c = 0;
            for (j, &nj) in in_occ.iter().enumerate() {
                for _ in 0..nj {
                    rep[(r, c)] = m[(i, j)];
                    c += 1;
                }
            }
            r += 1;
        }
    }
    let norm: f64 = out_occ
        .iter()
        .chain(in_occ.iter())
        .map(|&x| factorial(x))
        .product();
    permanent(&rep) / norm.sqrt()
}

/// Lifts an M-mode transformation to the full Fock-space matrix over `basis`.
///
/// The result is block-diagonal in total photon number and unitary on each
/// block whenever the mode matrix is unitary.
pub fn lift_unitary(
    mode_matrix: &Array2<C64>,
    basis: &FockBasis,
) -> Result<Array2<C64>, FockError> {
    assert_eq!(mode_matrix.nrows(), basis.mode_count());
    let dev = unitarity_deviation(mode_matrix);
    if dev > 1e-10 {
        return Err(FockError::NotUnitary(dev));
    }
    let d = basis.dimension();
    let mut out = Array2::zeros((d, d));
    for i in 0..d {
        let occ_i = basis.occupation(i);
        let ni: u32 = occ_i.iter().map(|&x| x as u32).sum();
        for j in 0..d {
            let occ_j = basis.occupation(j);
            let nj: u32 = occ_j.iter().map(|&x| x as u32).sum();
            if ni != nj {
                continue;
            }
            out[(i, j)] = transition_amplitude(mode_matrix, occ_i, occ_j);
        }
    }
    Ok(out)
}

/// Two-mode photon blocks of a 2x2 mode matrix: `blocks[n][(k_out, k_in)]` is
/// the amplitude from `|k_in, n-k_in⟩` to `|k_out, n-k_out⟩`.
fn two_mode_blocks(m: [[f64; 2]; 2], max_n: usize) -> Vec<Array2<f64>> {
    let (u00, u01, u10, u11) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let mut blocks = Vec::with_capacity(max_n + 1);
    for n in 0..=max_n {
        let mut b = Array2::zeros((n + 1, n + 1));
        for k_in in 0..=n {
            for k_out in 0..=n {
                // Coefficient of a†^k_out b†^(n-k_out) in
                // (u00 a† + u10 b†)^k_in (u01 a† + u11 b†)^(n-k_in).
                let mut acc = 0.0;
                for i in 0..=k_in.min(k_out) {
                    let j = k_out - i; // a† power from the second factor
                    if j > n - k_in {
                        continue;
                    }
                    acc += choose(k_in, i)
                        * u00.powi(i as i32)
                        * u10.powi((k_in - i) as i32)
                        * choose(n - k_in, j)
                        * u01.powi(j as i32)
                        * u11.powi((n - k_in - j) as i32);
                }
                let norm = (factorial(k_out as u8) * factorial((n - k_out) as u8)
                    / (factorial(k_in as u8) * factorial((n - k_in) as u8)))
                .sqrt();
                b[(k_out, k_in)] = acc * norm;
            }
        }
        blocks.push(b);
    }
    blocks
}

fn choose(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Applies a beamsplitter to a Fock amplitude vector in place.
pub fn apply_bs_vec(basis: &FockBasis, amp: &mut [C64], spec: &BeamsplitterSpec) {
    let blocks = two_mode_blocks(bs_mode_matrix(spec), basis.max_total_photons());
    apply_bs_vec_with_blocks(basis, amp, spec.modes, &blocks);
}

/// Same as [`apply_bs_vec`] with precomputed photon blocks.
pub fn apply_bs_vec_with_blocks(
    basis: &FockBasis,
    amp: &mut [C64],
    modes: (usize, usize),
    blocks: &[Array2<f64>],
) {
    let (p, q) = modes;
    let d = basis.dimension();
    let mut out = vec![C64::new(0.0, 0.0); d];
    let mut scratch: Vec<u8> = Vec::new();
    for i in 0..d {
        if amp[i].norm_sqr() == 0.0 {
            continue;
        }
        let occ = basis.occupation(i);
        let (kp, kq) = (occ[p] as usize, occ[q] as usize);
        let n = kp + kq;
        if n == 0 {
            out[i] += amp[i];
            continue;
        }
        let b = &blocks[n];
        scratch.clear();
        scratch.extend_from_slice(occ);
        for k_out in 0..=n {
            let coef = b[(k_out, kp)];
            if coef == 0.0 {
                continue;
            }
            scratch[p] = k_out as u8;
            scratch[q] = (n - k_out) as u8;
            let j = basis.index_of(&scratch).expect("photon-conserving move");
            out[j] += amp[i] * coef;
        }
    }
    amp.copy_from_slice(&out);
}

/// Applies a mode permutation (`perm[new] = old`) to an amplitude vector.
pub fn apply_permutation_vec(basis: &FockBasis, amp: &mut [C64], perm: &[usize]) {
    assert_eq!(perm.len(), basis.mode_count());
    let d = basis.dimension();
    let mut out = vec![C64::new(0.0, 0.0); d];
    let mut occ_new = vec![0u8; perm.len()];
    for i in 0..d {
        if amp[i].norm_sqr() == 0.0 {
            continue;
        }
        let occ = basis.occupation(i);
        for (new, &old) in perm.iter().enumerate() {
            occ_new[new] = occ[old];
        }
        let j = basis.index_of(&occ_new).unwrap();
        out[j] += amp[i];
    }
    amp.copy_from_slice(&out);
}

/// Kraus coefficient for losing `k` of `n` photons at efficiency `eta`.
pub fn kraus_coef(n: u8, k: u8, eta: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    (choose(n as usize, k as usize)
        * eta.powi((n - k) as i32)
        * (1.0 - eta).powi(k as i32))
    .sqrt()
}

/// Single-mode loss Kraus operators over the basis {|0⟩..|max_n⟩}:
/// `K_k|n⟩ = √(C(n,k) η^(n-k) (1-η)^k) |n-k⟩`.
pub fn loss_kraus(eta: f64, max_n: usize) -> Vec<Array2<C64>> {
    assert!((0.0..=1.0).contains(&eta));
    (0..=max_n)
        .map(|k| {
            let mut m = Array2::zeros((max_n + 1, max_n + 1));
            for n in k..=max_n {
                m[(n - k, n)] = C64::new(kraus_coef(n as u8, k as u8, eta), 0.0);
            }
            m
        })
        .collect()
}

/// Applies one loss Kraus operator `K_k` on `mode` to an amplitude vector.
pub fn apply_loss_kraus_vec(
    basis: &FockBasis,
    amp: &[C64],
    mode: usize,
    k: u8,
    eta: f64,
) -> Vec<C64> {
    let d = basis.dimension();
    let mut out = vec![C64::new(0.0, 0.0); d];
    let mut scratch: Vec<u8> = Vec::new();
    for i in 0..d {
        if amp[i].norm_sqr() == 0.0 {
            continue;
        }
        let occ = basis.occupation(i);
        let n = occ[mode];
        if k > n {
            continue;
        }
        scratch.clear();
        scratch.extend_from_slice(occ);
        scratch[mode] = n - k;
        let j = basis.index_of(&scratch).unwrap();
        out[j] += amp[i] * kraus_coef(n, k, eta);
    }
    out
}

/// How [`apply_loss`] realizes the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMethod {
    /// Operator-sum form on the lossy mode.
    Kraus,
    /// Append a vacuum mode, couple it via a beamsplitter of reflectivity
    /// `eta`, and trace the appended mode out.
    AncillaTrace,
}

/// Photon loss of efficiency `eta` on one mode of a density operator.
pub fn apply_loss(
    rho: &DensityOperator,
    mode: usize,
    eta: f64,
    method: LossMethod,
) -> Result<DensityOperator, FockError> {
    let modes = rho.basis.mode_count();
    if mode >= modes {
        return Err(FockError::InvalidMode(mode, modes));
    }
    assert!((0.0..=1.0).contains(&eta));
    match method {
        LossMethod::Kraus => {
            let max_n = rho.basis.max_total_photons() as u8;
            let mut out = DensityOperator::zero(rho.basis.clone());
            for k in 0..=max_n {
                conjugate_accumulate(rho, &mut out, |basis, amp| {
                    apply_loss_kraus_vec(basis, amp, mode, k, eta)
                });
            }
            Ok(out)
        }
        LossMethod::AncillaTrace => {
            // Embed into a basis with one extra (vacuum) mode.
            let ext_basis =
                FockBasis::new(modes + 1, rho.basis.max_total_photons())?;
            let d = rho.basis.dimension();
            let mut ext = DensityOperator::zero(ext_basis.clone());
            let mut map = Vec::with_capacity(d);
            for i in 0..d {
                let mut occ = rho.basis.occupation(i).to_vec();
                occ.push(0);
                map.push(ext_basis.index_of(&occ).unwrap());
            }
            for i in 0..d {
                for j in 0..d {
                    ext.mat[(map[i], map[j])] = rho.mat[(i, j)];
                }
            }
            // Reflectivity = efficiency keeps the reflected mode in the
            // system; the transmitted (appended) mode is lost. The traced
            // mode makes the channel independent of the sign convention.
            let bs = BeamsplitterSpec::new(
                eta,
                Convention::SignOnReflection,
                Orientation::Ab,
                (mode, modes),
            );
            let ext = apply_element(&ext, &CircuitElement::Beamsplitter(bs))?;
            partial_trace(&ext, &[modes])
        }
    }
}

/// Accumulates `A ρ A†` into `out` for a linear map given as a vector action.
fn conjugate_accumulate<F>(rho: &DensityOperator, out: &mut DensityOperator, op: F)
where
    F: Fn(&FockBasis, &[C64]) -> Vec<C64>,
{
    let d = rho.basis.dimension();
    // Apply to columns, then (conjugated) to rows. All element matrices used
    // here are real, so the row pass reuses the same action.
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<C64> = (0..d).map(|i| rho.mat[(i, j)]).collect();
        cols.push(op(&rho.basis, &col));
    }
    for i in 0..d {
        let row: Vec<C64> = (0..d).map(|j| cols[j][i]).collect();
        let row = op(&rho.basis, &row);
        for j in 0..d {
            out.mat[(i, j)] += row[j].conj();
        }
    }
}

/// Applies a single circuit element to a density operator.
pub fn apply_element(
    rho: &DensityOperator,
    element: &CircuitElement,
) -> Result<DensityOperator, FockError> {
    match element {
        CircuitElement::Beamsplitter(spec) => {
            let modes = rho.basis.mode_count();
            if spec.modes.0 >= modes || spec.modes.1 >= modes {
                return Err(FockError::InvalidMode(
                    spec.modes.0.max(spec.modes.1),
                    modes,
                ));
            }
            let blocks =
                two_mode_blocks(bs_mode_matrix(spec), rho.basis.max_total_photons());
            let mut out = DensityOperator::zero(rho.basis.clone());
            conjugate_accumulate(rho, &mut out, |basis, amp| {
                let mut v = amp.to_vec();
                apply_bs_vec_with_blocks(basis, &mut v, spec.modes, &blocks);
                v
            });
            Ok(out)
        }
        CircuitElement::Loss(loss) => {
            apply_loss(rho, loss.mode, loss.efficiency, LossMethod::Kraus)
        }
        CircuitElement::Permutation(perm) => {
            let mut out = DensityOperator::zero(rho.basis.clone());
            conjugate_accumulate(rho, &mut out, |basis, amp| {
                let mut v = amp.to_vec();
                apply_permutation_vec(basis, &mut v, perm);
                v
            });
            Ok(out)
        }
    }
}

/// Applies circuit elements in list order.
pub fn apply_elements(
    rho: &DensityOperator,
    elements: &[CircuitElement],
) -> Result<DensityOperator, FockError> {
    let mut state = rho.clone();
    for e in elements {
        state = apply_element(&state, e)?;
    }
    Ok(state)
}

/// The full M-mode matrix of a unitary element (identity off its support).
pub fn element_mode_matrix(element: &CircuitElement, modes: usize) -> Array2<C64> {
    let mut m = Array2::eye(modes);
    match element {
        CircuitElement::Beamsplitter(spec) => {
            let b = bs_mode_matrix(spec);
            let (p, q) = spec.modes;
            m[(p, p)] = C64::new(b[0][0], 0.0);
            m[(p, q)] = C64::new(b[0][1], 0.0);
            m[(q, p)] = C64::new(b[1][0], 0.0);
            m[(q, q)] = C64::new(b[1][1], 0.0);
        }
        CircuitElement::Permutation(perm) => {
            m.fill(C64::new(0.0, 0.0));
            for (new, &old) in perm.iter().enumerate() {
                m[(new, old)] = C64::new(1.0, 0.0);
            }
        }
        CircuitElement::Loss(_) => panic!("loss has no mode matrix"),
    }
    m
}

/// Applies a unitary element to a pure state (loss elements are rejected).
pub fn apply_element_vec(
    basis: &Arc<FockBasis>,
    state: &mut PureState,
    element: &CircuitElement,
) {
    assert_eq!(&state.basis, basis);
    match element {
        CircuitElement::Beamsplitter(spec) => {
            apply_bs_vec(basis, &mut state.amp, spec)
        }
        CircuitElement::Permutation(perm) => {
            apply_permutation_vec(basis, &mut state.amp, perm)
        }
        CircuitElement::Loss(_) => panic!("loss is not a pure-state operation"),
    }
}
