//! Schrieffer-Wolff machinery for the gradient Heisenberg chain: the
//! first-order generator, the Ising/flip-flop split, exact and truncated
//! transforms, the leading correction, spectral distance, dressed
//! magnetizations and the perturbative Fisher information.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{FieldProfile, GradientAxis, ModelSpec};
use crate::spinops::{expectation, sigma, DenseOperator, PauliAxis, SpinBasis, StateVector};

/// Denominators at or below this magnitude are resonant.
pub const RESONANCE_FLOOR: f64 = 1e-6;
const ANTIHERMITIAN_TOL: f64 = 1e-12;
const DRESSED_HERMITIAN_TOL: f64 = 1e-10;

/// How the bond field difference `Delta_{j,j+1}` enters the denominators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeltaMode {
    /// `B_{j+1} - B_j` from the realized fields, disorder included.
    #[default]
    Exact,
    /// `Delta = g` for every bond.
    Uniform,
}

/// First-order generator
/// `S = -J sum_j (s+_j s-_{j+1} - s-_j s+_{j+1}) / (2 Delta_{j,j+1} - J (sz_{j-1} - sz_{j+2}))`
/// with `sz_0 = sz_{L+1} = 0`. Anti-Hermitian with zero diagonal.
#[derive(Clone, Debug)]
pub struct SwGenerator {
    s: DenseOperator,
    /// `J / g`.
    pub lambda: f64,
    /// `Delta_{j,j+1}` used for bond `j` (index 0 is bond (1, 2)).
    pub bond_gaps_mhz: Vec<f64>,
    pub mode: DeltaMode,
}

impl SwGenerator {
    pub fn operator(&self) -> &DenseOperator {
        &self.s
    }

    pub fn basis(&self) -> SpinBasis {
        self.s.basis()
    }

    /// `max |S^dagger + S|`.
    pub fn antihermiticity_error(&self) -> f64 {
        let m = self.s.matrix();
        linalg::max_abs((&linalg::adjoint(m) + &m).view())
    }
}

/// Builds the first-order generator for `spec` with realized `fields`.
pub fn build_s1(spec: &ModelSpec, fields: &FieldProfile, mode: DeltaMode) -> Result<SwGenerator> {
    spec.validate()?;
    if spec.gradient_axis != GradientAxis::Z {
        return Err(Error::invalid("the generator is defined for a z-axis gradient"));
    }
    if fields.fields_mhz.len() != spec.sites {
        return Err(Error::Dimension { expected: spec.sites, found: fields.fields_mhz.len() });
    }
    let basis = spec.basis()?;
    let l = spec.sites;
    let j_c = spec.coupling_mhz;
    let gaps: Vec<f64> = (1..l)
        .map(|j| match mode {
            DeltaMode::Exact => fields.field(j + 1) - fields.field(j),
            DeltaMode::Uniform => spec.gradient_mhz,
        })
        .collect();
    let mut m = Array2::<C64>::zeros((basis.dim(), basis.dim()));
    if j_c != 0.0 {
        let edge = |a: usize, site: usize| if (1..=l).contains(&site) { basis.sz(a, site) } else { 0.0 };
        for a in 0..basis.dim() {
            for j in 1..l {
                if !(basis.is_up(a, j) && !basis.is_up(a, j + 1)) {
                    continue;
                }
                let d = 2.0 * gaps[j - 1] - j_c * (edge(a, j - 1) - edge(a, j + 2));
                if d.abs() <= RESONANCE_FLOOR {
                    return Err(Error::ResonantDenominator { site: j, value: d });
                }
                // a has (up, down) on (j, j+1); b is the swapped configuration.
                let b = basis.flip(basis.flip(a, j), j + 1);
                m[[b, a]] = C64::new(j_c / d, 0.0);
                m[[a, b]] = C64::new(-j_c / d, 0.0);
            }
        }
    }
    let s = DenseOperator::new(basis, m)?;
    let gen = SwGenerator { s, lambda: spec.lambda(), bond_gaps_mhz: gaps, mode };
    let err = gen.antihermiticity_error();
    if err > ANTIHERMITIAN_TOL {
        return Err(Error::NotAntiHermitian(err));
    }
    Ok(gen)
}

/// `(H0, H1)`: the z-diagonal part and the remainder.
pub fn split_h0_h1(h: &DenseOperator) -> (DenseOperator, DenseOperator) {
    (h.diagonal_part(), h.off_diagonal_part())
}

/// `||H1 + [S, H0]||_F / ||H1||_F` (zero when `H1 = 0`).
pub fn exactness_residual(gen: &SwGenerator, h: &DenseOperator) -> f64 {
    let (h0, h1) = split_h0_h1(h);
    let n1 = h1.frobenius_norm();
    if n1 == 0.0 {
        return 0.0;
    }
    (&h1 + &gen.s.commutator(&h0)).frobenius_norm() / n1
}

/// `e^S H e^{-S}` with the exact matrix exponential, Hermitian-symmetrized.
pub fn transformed_hamiltonian(h: &DenseOperator, gen: &SwGenerator) -> Result<DenseOperator> {
    let u = linalg::expm_antihermitian(gen.s.matrix())?;
    let conj = u.dot(&h.matrix()).dot(&linalg::adjoint(u.view()));
    Ok(DenseOperator::new(h.basis(), conj)?.hermitian_part())
}

/// `H0 + sum_{n=1}^{order} n/(n+1)! ad_S^n H1`, the transform truncated using
/// `[S, H0] = -H1`. Order 1 is `H0 + [S, H1]/2`; order 2 adds `[S, [S, H1]]/3`.
pub fn truncated_transform(h0: &DenseOperator, h1: &DenseOperator, gen: &SwGenerator, order: usize) -> DenseOperator {
    let mut out = h0.clone();
    let mut ad = h1.clone();
    let mut factorial = 1.0;
    for n in 1..=order {
        ad = gen.s.commutator(&ad);
        factorial *= (n + 1) as f64;
        out = &out + &ad.scale_real(n as f64 / factorial);
    }
    out
}

/// `[S, H1] / 2`.
pub fn leading_correction(gen: &SwGenerator, h1: &DenseOperator) -> DenseOperator {
    gen.s.commutator(h1).scale_real(0.5)
}

/// `-(J lambda / 8)(sz_1 - sz_L)`.
pub fn end_spin_correction(basis: SpinBasis, coupling_mhz: f64, lambda: f64) -> Result<DenseOperator> {
    let d = &sigma(basis, 1, PauliAxis::Z)? - &sigma(basis, basis.sites(), PauliAxis::Z)?;
    Ok(d.scale_real(-coupling_mhz * lambda / 8.0))
}

/// Leading correction assembled termwise from spin operators, with each
/// denominator expanded as
/// `1/(2g - J c_j) = (1/2g)(1 + (lambda/2) c_j) + O(lambda^2)`,
/// `c_j = sz_{j-1} - sz_{j+2}`, for a uniform gap `g`. Agrees with
/// [`leading_correction`] up to `O(J lambda^3)`.
pub fn explicit_leading_correction(basis: SpinBasis, coupling_mhz: f64, gap_mhz: f64) -> Result<DenseOperator> {
    let l = basis.sites();
    if l < 2 {
        return Err(Error::invalid("the correction needs at least 2 sites"));
    }
    if gap_mhz == 0.0 {
        return Err(Error::ResonantDenominator { site: 1, value: 0.0 });
    }
    let lambda = coupling_mhz / gap_mhz;
    let half = C64::new(0.5, 0.0);
    let i_half = C64::new(0.0, 0.5);
    let mut raise = Vec::with_capacity(l);
    let mut lower = Vec::with_capacity(l);
    let mut z = Vec::with_capacity(l);
    for j in 1..=l {
        let x = sigma(basis, j, PauliAxis::X)?;
        let y = sigma(basis, j, PauliAxis::Y)?;
        raise.push(&x.scale(half) + &y.scale(i_half));
        lower.push(&x.scale(half) - &y.scale(i_half));
        z.push(sigma(basis, j, PauliAxis::Z)?);
    }
    let zero = DenseOperator::zeros(basis);
    let zs = |site: usize| if (1..=l).contains(&site) { &z[site - 1] } else { &zero };
    let mut s = DenseOperator::zeros(basis);
    let mut h1 = DenseOperator::zeros(basis);
    for j in 1..l {
        let pm = &raise[j - 1] * &lower[j];
        let mp = &lower[j - 1] * &raise[j];
        let k = &pm - &mp;
        let c = zs(j - 1) - zs(j + 2);
        let term = &k.scale_real(-lambda / 2.0) + &(&k * &c).scale_real(-lambda * lambda / 4.0);
        s = &s + &term;
        h1 = &h1 + &(&pm + &mp).scale_real(coupling_mhz / 2.0);
    }
    Ok(s.commutator(&h1).scale_real(0.5))
}

/// `(1/2^N) sqrt(sum_i (E^H_i - E^I_i)^2)` over both spectra sorted ascending.
pub fn spectral_distance(h_heis: &DenseOperator, h_ising: &DenseOperator) -> Result<f64> {
    if h_heis.dim() != h_ising.dim() {
        return Err(Error::Dimension { expected: h_heis.dim(), found: h_ising.dim() });
    }
    let a = h_heis.eigenvalues()?;
    let b = h_ising.eigenvalues()?;
    let ss: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(ss.sqrt() / h_heis.dim() as f64)
}

/// `Z_j = sz_j + ad_S sz_j + ad_S^2 sz_j / 2` and its Neel normalization
/// `N_j = sqrt(<Z_j^2>)`.
#[derive(Clone, Debug)]
pub struct DressedObservable {
    pub site: usize,
    pub z: DenseOperator,
    pub normalization: f64,
}

impl DressedObservable {
    /// `<Z_j> / N_j`.
    pub fn normalized_expectation(&self, state: &StateVector) -> Result<f64> {
        Ok(expectation(state, &self.z)? / self.normalization)
    }
}

fn neel(basis: SpinBasis) -> StateVector {
    StateVector::basis_state(basis, basis.neel_index()).expect("Neel index is in range")
}

pub fn dressed_sz(gen: &SwGenerator, site: usize) -> Result<DressedObservable> {
    let basis = gen.basis();
    let sz = sigma(basis, site, PauliAxis::Z)?;
    let ad1 = gen.s.commutator(&sz);
    let ad2 = gen.s.commutator(&ad1);
    let z = &(&sz + &ad1) + &ad2.scale_real(0.5);
    let herm = z.hermiticity_error();
    if herm > DRESSED_HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let z = z.hermitian_part();
    let n2 = expectation(&neel(basis), &(&z * &z))?;
    if !(n2 > 0.0) {
        return Err(Error::InvariantBreach { name: "dressed normalization positivity", value: n2, tolerance: 0.0 });
    }
    Ok(DressedObservable { site, z, normalization: n2.sqrt() })
}

/// Normalized connected correlators
/// `N_m^{-1} N_n^{-1} (<Z_m Z_n> - <Z_m><Z_n>)` in the Neel state;
/// entry `[m-1, n-1]`.
pub fn dressed_connected_correlators(gen: &SwGenerator) -> Result<Array2<f64>> {
    let basis = gen.basis();
    let l = basis.sites();
    let psi = neel(basis);
    let dressed = (1..=l).map(|j| dressed_sz(gen, j)).collect::<Result<Vec<_>>>()?;
    let means = dressed.iter().map(|d| expectation(&psi, &d.z)).collect::<Result<Vec<_>>>()?;
    let mut c = Array2::zeros((l, l));
    for m in 0..l {
        for n in 0..l {
            // <Z_m Z_n> is real for the symmetrized product.
            let prod = &dressed[m].z * &dressed[n].z;
            let sym = (&prod + &prod.adjoint()).scale_real(0.5);
            let two = expectation(&psi, &sym)?;
            c[[m, n]] = (two - means[m] * means[n]) / (dressed[m].normalization * dressed[n].normalization);
        }
    }
    Ok(c)
}

/// `(1/L) sum_{m,n} (-1)^{m+n} C_{mn}` from [`dressed_connected_correlators`].
pub fn qfi_dressed_twopoint(gen: &SwGenerator) -> Result<f64> {
    let c = dressed_connected_correlators(gen)?;
    let l = c.nrows();
    let mut total = 0.0;
    for ((m, n), v) in c.indexed_iter() {
        total += if (m + n) % 2 == 0 { *v } else { -*v };
    }
    Ok(total / l as f64)
}

/// Prefactor `alpha(L) = 8 - 8/L` of the perturbative Fisher information.
pub fn qfi_alpha(sites: usize) -> f64 {
    8.0 - 8.0 / sites as f64
}

/// `f_Q = alpha(L) lambda^2`; meaningful for `|lambda| < 0.2`.
pub fn qfi_perturbative(sites: usize, lambda: f64) -> f64 {
    qfi_alpha(sites) * lambda * lambda
}

/// Period in ns of the `|udd u> <-> |duud>` oscillation of `<sz_1>` for
/// `L = 4`: the matrix element `J^3 / (4 g^2)` MHz gives `2e3 g^2 / J^3` ns.
pub fn resonance_period_l4(gradient_mhz: f64, coupling_mhz: f64) -> Result<f64> {
    if !(coupling_mhz > 0.0) || gradient_mhz == 0.0 || !gradient_mhz.is_finite() {
        return Err(Error::invalid("resonance period needs J > 0 and g != 0"));
    }
    Ok(2e3 * gradient_mhz * gradient_mhz / coupling_mhz.powi(3))
}
