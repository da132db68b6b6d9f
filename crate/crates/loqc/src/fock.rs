//! Exact state algebra over a truncated multimode Fock space.
//!
//! A [`FockBasis`] enumerates all occupation-number vectors for a fixed mode
//! count with a bound on the total photon number. The ordering is
//! lexicographic in the occupation vector, so state indices are reproducible
//! across runs. [`PureState`] and [`DensityOperator`] are dense amplitude
//! vectors / matrices over such a basis; sub-normalized values are allowed
//! (post-selection produces them) and normalization is an explicit step.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
pub use num_complex::Complex64 as C64;
use thiserror::Error;

/// Default cap on the basis dimension; guards accidental blow-ups.
pub const DEFAULT_DIMENSION_CAP: usize = 1_000_000;

/// Trace below this is treated as an impossible detection pattern.
pub const TRACE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("basis dimension {0} exceeds cap {1}")]
    DimensionOverflow(usize, usize),
    #[error("mode index {0} out of range for {1} modes")]
    InvalidMode(usize, usize),
    #[error("operand bases do not match")]
    BasisMismatch,
    #[error("tensor product would drop a nonzero amplitude (truncation violation)")]
    TruncationViolation,
    #[error("trace {0:.3e} below threshold; detection pattern is numerically impossible")]
    NearZeroTrace(f64),
    #[error("state is not normalized (norm deviation {0:.3e})")]
    NotNormalized(f64),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
}

/// Ordered enumeration of occupation-number vectors for `mode_count` modes
/// with total photon number at most `max_total_photons`.
#[derive(Debug)]
pub struct FockBasis {
    mode_count: usize,
    max_total_photons: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.mode_count == other.mode_count
            && self.max_total_photons == other.max_total_photons
    }
}
impl Eq for FockBasis {}

/// Binomial coefficient, saturating at `usize::MAX`.
fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

impl FockBasis {
    /// Enumerates the basis with the default dimension cap.
    pub fn new(mode_count: usize, max_total_photons: usize) -> Result<Arc<Self>, FockError> {
        Self::with_cap(mode_count, max_total_photons, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(
        mode_count: usize,
        max_total_photons: usize,
        cap: usize,
    ) -> Result<Arc<Self>, FockError> {
        assert!(mode_count >= 1, "mode_count must be positive");
        let dim = binomial(max_total_photons + mode_count, mode_count);
        if dim > cap {
            return Err(FockError::DimensionOverflow(dim, cap));
        }
        let mut states = Vec::with_capacity(dim);
        let mut occ = vec![0u8; mode_count];
        gen_lex(&mut states, &mut occ, 0, max_total_photons);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Arc::new(Self {
            mode_count,
            max_total_photons,
            states,
            index,
        }))
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn max_total_photons(&self) -> usize {
        self.max_total_photons
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }
}

fn gen_lex(out: &mut Vec<Vec<u8>>, occ: &mut Vec<u8>, mode: usize, budget: usize) {
    if mode == occ.len() {
        out.push(occ.clone());
        return;
    }
    for n in 0..=budget {
        occ[mode] = n as u8;
        gen_lex(out, occ, mode + 1, budget - n);
    }
    occ[mode] = 0;
}

/// Convenience wrapper matching the operation name used throughout the docs.
pub fn enumerate_basis(
    mode_count: usize,
    max_total_photons: usize,
) -> Result<Arc<FockBasis>, FockError> {
    FockBasis::new(mode_count, max_total_photons)
}

/// Complex amplitude vector over a [`FockBasis`]. May be sub-normalized.
#[derive(Debug, Clone)]
pub struct PureState {
    pub basis: Arc<FockBasis>,
    pub amp: Vec<C64>,
}

impl PureState {
    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let amp = vec![C64::new(0.0, 0.0); basis.dimension()];
        Self { basis, amp }
    }

    /// The number state `|occ⟩`.
    pub fn from_occupation(basis: Arc<FockBasis>, occ: &[u8]) -> Self {
        let mut s = Self::zero(basis);
        let i = s
            .basis
            .index_of(occ)
            .expect("occupation outside basis");
        s.amp[i] = C64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(basis: Arc<FockBasis>, amp: Vec<C64>) -> Result<Self, FockError> {
        assert_eq!(amp.len(), basis.dimension());
        let s = Self { basis, amp };
        let n2 = s.norm_sq();
        if !(0.0..=1.0 + 1e-12).contains(&n2) {
            return Err(FockError::NotNormalized(n2 - 1.0));
        }
        Ok(s)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self, FockError> {
        let n2 = self.norm_sq();
        if n2 < TRACE_THRESHOLD {
            return Err(FockError::NearZeroTrace(n2));
        }
        let inv = 1.0 / n2.sqrt();
        let amp = self.amp.iter().map(|a| a * inv).collect();
        Ok(Self {
            basis: self.basis.clone(),
            amp,
        })
    }

    pub fn inner(&self, other: &Self) -> Result<C64, FockError> {
        if self.basis != other.basis {
            return Err(FockError::BasisMismatch);
        }
        Ok(self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Tensor product `a ⊗ b` with an explicit photon bound on the result.
///
/// Errors if any nonzero joint amplitude would fall outside the truncated
/// output basis.
pub fn tensor_with_max(
    a: &PureState,
    b: &PureState,
    max_total_photons: usize,
) -> Result<PureState, FockError> {
    let modes = a.basis.mode_count() + b.basis.mode_count();
    let basis = FockBasis::new(modes, max_total_photons)?;
    let mut out = PureState::zero(basis);
    for (i, ai) in a.amp.iter().enumerate() {
        if ai.norm_sqr() == 0.0 {
            continue;
        }
        let occ_a = a.basis.occupation(i);
        for (j, bj) in b.amp.iter().enumerate() {
            if bj.norm_sqr() == 0.0 {
                continue;
            }
            let occ_b = b.basis.occupation(j);
            let mut occ = Vec::with_capacity(modes);
            occ.extend_from_slice(occ_a);
            occ.extend_from_slice(occ_b);
            match out.basis.index_of(&occ) {
                Some(k) => out.amp[k] = ai * bj,
                None => return Err(FockError::TruncationViolation),
            }
        }
    }
    Ok(out)
}

/// Tensor product with the combined photon bound (never truncates).
pub fn tensor(a: &PureState, b: &PureState) -> PureState {
    tensor_with_max(
        a,
        b,
        a.basis.max_total_photons() + b.basis.max_total_photons(),
    )
    .expect("combined bound cannot truncate")
}

/// Hermitian matrix over a [`FockBasis`]; trace in [0, 1].
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub basis: Arc<FockBasis>,
    pub mat: Array2<C64>,
}

impl DensityOperator {
    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let d = basis.dimension();
        Self {
            basis,
            mat: Array2::zeros((d, d)),
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let d = psi.basis.dimension();
        let mut mat = Array2::zeros((d, d));
        for i in 0..d {
            if psi.amp[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..d {
                mat[(i, j)] = psi.amp[i] * psi.amp[j].conj();
            }
        }
        Self {
            basis: psi.basis.clone(),
            mat,
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.basis.dimension())
            .map(|i| self.mat[(i, i)].re)
            .sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.basis.dimension();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Checks Hermiticity (1e-10) and positive semidefiniteness up to a
    /// -1e-10 eigenvalue tolerance, via a Cholesky factorization of
    /// `mat + tol·I`.
    pub fn is_valid(&self) -> bool {
        if self.hermiticity_deviation() > 1e-10 {
            return false;
        }
        let tol = 1e-10 * self.basis.dimension() as f64;
        cholesky_psd(&self.mat, tol)
    }
}

/// Attempts a Cholesky factorization of `m + shift·I`; success certifies
/// eigenvalues above `-shift`.
fn cholesky_psd(m: &Array2<C64>, shift: f64) -> bool {
    let d = m.nrows();
    let mut l = m.clone();
    for i in 0..d {
        l[(i, i)] += C64::new(shift, 0.0);
    }
    for j in 0..d {
        let mut diag = l[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if diag < 0.0 {
            return false;
        }
        let diag = diag.sqrt();
        if diag == 0.0 {
            // Zero pivot: the remaining column must vanish too.
            for i in (j + 1)..d {
                let mut v = l[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)].conj();
                }
                if v.norm() > shift.sqrt() {
                    return false;
                }
                l[(i, j)] = C64::new(0.0, 0.0);
            }
            l[(j, j)] = C64::new(0.0, 0.0);
            continue;
        }
        l[(j, j)] = C64::new(diag, 0.0);
        for i in (j + 1)..d {
            let mut v = l[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / diag;
        }
    }
    true
}

/// Partial trace over `traced_modes`; the result acts on the remaining modes
/// in their original order.
pub fn partial_trace(
    rho: &DensityOperator,
    traced_modes: &[usize],
) -> Result<DensityOperator, FockError> {
    let modes = rho.basis.mode_count();
    for &m in traced_modes {
        if m >= modes {
            return Err(FockError::InvalidMode(m, modes));
        }
    }
    let kept: Vec<usize> = (0..modes).filter(|m| !traced_modes.contains(m)).collect();
    assert!(
        !kept.is_empty() && kept.len() < modes,
        "traced modes must be a proper subset"
    );
    let out_basis = FockBasis::new(kept.len(), rho.basis.max_total_photons())?;
    // Map each input index to (traced occupation, reduced index).
    let d = rho.basis.dimension();
    let mut traced_occ: Vec<Vec<u8>> = Vec::with_capacity(d);
    let mut reduced_idx: Vec<usize> = Vec::with_capacity(d);
    for i in 0..d {
        let occ = rho.basis.occupation(i);
        traced_occ.push(traced_modes.iter().map(|&m| occ[m]).collect());
        let kept_occ: Vec<u8> = kept.iter().map(|&m| occ[m]).collect();
        reduced_idx.push(out_basis.index_of(&kept_occ).unwrap());
    }
    let mut out = DensityOperator::zero(out_basis);
    for i in 0..d {
        for j in 0..d {
            if traced_occ[i] == traced_occ[j] {
                let (ri, rj) = (reduced_idx[i], reduced_idx[j]);
                out.mat[(ri, rj)] += rho.mat[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Projects a mode onto the number state `|n⟩⟨n|`.
///
/// Returns the unnormalized `P ρ P` (same basis) and its trace.
pub fn project_number(
    rho: &DensityOperator,
    mode: usize,
    n: u8,
) -> Result<(DensityOperator, f64), FockError> {
    let modes = rho.basis.mode_count();
    if mode >= modes {
        return Err(FockError::InvalidMode(mode, modes));
    }
    let d = rho.basis.dimension();
    let keep: Vec<bool> = (0..d)
        .map(|i| rho.basis.occupation(i)[mode] == n)
        .collect();
    let mut out = DensityOperator::zero(rho.basis.clone());
    for i in 0..d {
        if !keep[i] {
            continue;
        }
        for j in 0..d {
            if keep[j] {
                out.mat[(i, j)] = rho.mat[(i, j)];
            }
        }
    }
    let p = out.trace();
    Ok((out, p))
}

/// Removes a mode known to be in the definite number state `n` (e.g. after
/// [`project_number`]), renumbering the remaining modes.
pub fn drop_definite_mode(
    rho: &DensityOperator,
    mode: usize,
    n: u8,
) -> Result<DensityOperator, FockError> {
    let modes = rho.basis.mode_count();
    if mode >= modes {
        return Err(FockError::InvalidMode(mode, modes));
    }
    let kept: Vec<usize> = (0..modes).filter(|&m| m != mode).collect();
    let out_basis = FockBasis::new(kept.len(), rho.basis.max_total_photons())?;
    let d = rho.basis.dimension();
    let mut out = DensityOperator::zero(out_basis);
    let mut map: Vec<Option<usize>> = Vec::with_capacity(d);
    for i in 0..d {
        let occ = rho.basis.occupation(i);
        if occ[mode] == n {
            let kept_occ: Vec<u8> = kept.iter().map(|&m| occ[m]).collect();
            map.push(out.basis.index_of(&kept_occ));
        } else {
            map.push(None);
        }
    }
    for i in 0..d {
        let Some(ri) = map[i] else { continue };
        for j in 0..d {
            if let Some(rj) = map[j] {
                out.mat[(ri, rj)] = rho.mat[(i, j)];
            }
        }
    }
    Ok(out)
}

/// `⟨ψ|ρ|ψ⟩` for a normalized `ρ` and `ψ`, clamped to [0, 1] within 1e-12.
pub fn fidelity(rho: &DensityOperator, psi: &PureState) -> Result<f64, FockError> {
    if rho.basis != psi.basis {
        return Err(FockError::BasisMismatch);
    }
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(FockError::NotNormalized(tr - 1.0));
    }
    let n2 = psi.norm_sq();
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(FockError::NotNormalized(n2 - 1.0));
    }
    let d = rho.basis.dimension();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        if psi.amp[i].norm_sqr() == 0.0 {
            continue;
        }
        for j in 0..d {
            acc += psi.amp[i].conj() * rho.mat[(i, j)] * psi.amp[j];
        }
    }
    Ok(acc.re.clamp(-1e-12, 1.0 + 1e-12).clamp(0.0, 1.0))
}

/// Rescales `rho` to unit trace.
pub fn normalize(rho: &DensityOperator) -> Result<DensityOperator, FockError> {
    let tr = rho.trace();
    if tr < TRACE_THRESHOLD {
        return Err(FockError::NearZeroTrace(tr));
    }
    let mut out = rho.clone();
    out.mat.mapv_inplace(|v| v / tr);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn basis_small_examples() {
        let b = enumerate_basis(1, 2).unwrap();
        assert_eq!(b.dimension(), 3);
        assert_eq!(b.states(), &[vec![0], vec![1], vec![2]]);

        let b = enumerate_basis(2, 0).unwrap();
        assert_eq!(b.dimension(), 1);
        assert_eq!(b.occupation(0), &[0, 0]);
    }

    #[test]
    fn basis_dimension_brute_force() {
        // Independent oracle: count all occupation vectors of 6 modes with
        // total at most 4 by direct enumeration.
        let mut count = 0usize;
        for a in 0..=4u8 {
            for b in 0..=4u8 {
                for cc in 0..=4u8 {
                    for d in 0..=4u8 {
                        for e in 0..=4u8 {
                            for f in 0..=4u8 {
                                if a + b + cc + d + e + f <= 4 {
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(count, 210);
        let basis = enumerate_basis(6, 4).unwrap();
        assert_eq!(basis.dimension(), 210);
    }

    #[test]
    fn basis_dimension_cap() {
        assert!(matches!(
            FockBasis::with_cap(6, 4, 100),
            Err(FockError::DimensionOverflow(210, 100))
        ));
    }

    #[test]
    fn basis_index_roundtrip() {
        let b = enumerate_basis(3, 3).unwrap();
        for i in 0..b.dimension() {
            assert_eq!(b.index_of(b.occupation(i)), Some(i));
        }
    }

    #[test]
    fn tensor_examples() {
        let b1 = enumerate_basis(1, 1).unwrap();
        let one = PureState::from_occupation(b1.clone(), &[1]);
        let zero = PureState::from_occupation(b1.clone(), &[0]);
        let t = tensor(&one, &zero);
        assert_eq!(t.basis.mode_count(), 2);
        let i = t.basis.index_of(&[1, 0]).unwrap();
        assert_eq!(t.amp[i], c(1.0));
        assert!((t.norm_sq() - 1.0).abs() < 1e-12);

        // (α|0⟩+β|1⟩) ⊗ |1⟩
        let (alpha, beta) = (0.6, 0.8);
        let sup =
            PureState::from_amplitudes(b1.clone(), vec![c(alpha), c(beta)]).unwrap();
        let t = tensor(&sup, &one);
        assert_eq!(t.amp[t.basis.index_of(&[0, 1]).unwrap()], c(alpha));
        assert_eq!(t.amp[t.basis.index_of(&[1, 1]).unwrap()], c(beta));
    }

    #[test]
    fn tensor_bell_pair_product() {
        // ((|01⟩+|10⟩)/√2) ⊗ ((|01⟩+|10⟩)/√2): four equal amplitudes 1/2,
        // expanded by hand.
        let b2 = enumerate_basis(2, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let mut bell = PureState::zero(b2.clone());
        bell.amp[b2.index_of(&[0, 1]).unwrap()] = c(s);
        bell.amp[b2.index_of(&[1, 0]).unwrap()] = c(s);
        let t = tensor(&bell, &bell);
        for occ in [[0, 1, 0, 1], [0, 1, 1, 0], [1, 0, 0, 1], [1, 0, 1, 0]] {
            let i = t.basis.index_of(&occ).unwrap();
            assert!((t.amp[i] - c(0.5)).norm() < 1e-15);
        }
        assert!((t.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_truncation_violation() {
        let b1 = enumerate_basis(1, 1).unwrap();
        let one = PureState::from_occupation(b1.clone(), &[1]);
        assert!(matches!(
            tensor_with_max(&one, &one, 1),
            Err(FockError::TruncationViolation)
        ));
    }

    #[test]
    fn partial_trace_product_state() {
        let b = enumerate_basis(2, 1).unwrap();
        let psi = PureState::from_occupation(b, &[1, 0]);
        let rho = DensityOperator::from_pure(&psi);
        let red = partial_trace(&rho, &[1]).unwrap();
        let i1 = red.basis.index_of(&[1]).unwrap();
        assert!((red.mat[(i1, i1)] - c(1.0)).norm() < 1e-15);
        assert!((red.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_entangled() {
        let b = enumerate_basis(2, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let mut bell = PureState::zero(b.clone());
        bell.amp[b.index_of(&[0, 1]).unwrap()] = c(s);
        bell.amp[b.index_of(&[1, 0]).unwrap()] = c(s);
        let rho = DensityOperator::from_pure(&bell);
        let red = partial_trace(&rho, &[1]).unwrap();
        let i0 = red.basis.index_of(&[0]).unwrap();
        let i1 = red.basis.index_of(&[1]).unwrap();
        assert!((red.mat[(i0, i0)] - c(0.5)).norm() < 1e-12);
        assert!((red.mat[(i1, i1)] - c(0.5)).norm() < 1e-12);
        assert!(red.mat[(i0, i1)].norm() < 1e-12);
    }

    #[test]
    fn project_examples() {
        let b = enumerate_basis(1, 1).unwrap();
        let one = PureState::from_occupation(b, &[1]);
        let rho = DensityOperator::from_pure(&one);
        let (p1, pr1) = project_number(&rho, 0, 1).unwrap();
        assert!((pr1 - 1.0).abs() < 1e-12);
        assert!((p1.trace() - 1.0).abs() < 1e-12);
        let (_, pr0) = project_number(&rho, 0, 0).unwrap();
        assert!(pr0.abs() < 1e-12);

        // Diagonal mixture on two modes.
        let b2 = enumerate_basis(2, 2).unwrap();
        let mut rho = DensityOperator::zero(b2.clone());
        let i11 = b2.index_of(&[1, 1]).unwrap();
        let i10 = b2.index_of(&[1, 0]).unwrap();
        rho.mat[(i11, i11)] = c(0.6);
        rho.mat[(i10, i10)] = c(0.4);
        let (out, p) = project_number(&rho, 1, 1).unwrap();
        assert!((p - 0.6).abs() < 1e-12);
        assert!((out.mat[(i11, i11)] - c(0.6)).norm() < 1e-12);
        assert!(out.mat[(i10, i10)].norm() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let b = enumerate_basis(1, 1).unwrap();
        let zero = PureState::from_occupation(b.clone(), &[0]);
        let one = PureState::from_occupation(b.clone(), &[1]);
        let s = 1.0 / 2f64.sqrt();
        let plus = PureState::from_amplitudes(b.clone(), vec![c(s), c(s)]).unwrap();

        let rho = DensityOperator::from_pure(&plus);
        assert!((fidelity(&rho, &plus).unwrap() - 1.0).abs() < 1e-12);

        let rho0 = DensityOperator::from_pure(&zero);
        assert!(fidelity(&rho0, &one).unwrap().abs() < 1e-12);

        let mut mixed = DensityOperator::zero(b);
        mixed.mat[(0, 0)] = c(0.5);
        mixed.mat[(1, 1)] = c(0.5);
        assert!((fidelity(&mixed, &plus).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        let b = enumerate_basis(1, 1).unwrap();
        let one = PureState::from_occupation(b.clone(), &[1]);
        let mut rho = DensityOperator::from_pure(&one);
        rho.mat.mapv_inplace(|v| v * 0.05);
        let n = normalize(&rho).unwrap();
        assert!((n.trace() - 1.0).abs() < 1e-12);
        let again = normalize(&n).unwrap();
        assert!((&again.mat - &n.mat).iter().all(|v| v.norm() < 1e-15));

        rho.mat.mapv_inplace(|v| v * (1e-15 / 0.05));
        assert!(matches!(normalize(&rho), Err(FockError::NearZeroTrace(_))));
    }

    #[test]
    fn density_validity_check() {
        let b = enumerate_basis(1, 2).unwrap();
        let s = PureState::from_amplitudes(
            b.clone(),
            vec![c(0.5), c(0.5), C64::new(0.0, 0.5 * 2f64.sqrt())],
        )
        .unwrap();
        let rho = DensityOperator::from_pure(&s);
        assert!(rho.is_valid());
        let mut bad = rho.clone();
        bad.mat[(0, 0)] = c(-1e-3);
        assert!(!bad.is_valid());
        let mut non_herm = rho;
        non_herm.mat[(0, 1)] += c(1e-3);
        assert!(!non_herm.is_valid());
    }
}
