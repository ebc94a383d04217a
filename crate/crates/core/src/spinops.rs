//! Hilbert-space bookkeeping for chains of spin-1/2 sites and the dense
//! operator algebra built on it.
//!
//! Basis convention: for a chain of `L` sites, bit `L - j` of a basis index
//! holds site `j` (site 1 is the most significant bit); a clear bit is spin up
//! (`sigma_z = +1`). Every other module goes through [`SpinBasis`] for bit
//! manipulation so this convention lives in one place.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};

/// Largest supported chain length.
pub const MAX_SITES: usize = 14;

/// Tolerance on `max |A - A^dagger|`, relative to `max(1, max |A|)`.
const HERMITIAN_TOL: f64 = 1e-12;
/// Density-matrix eigenvalues in `[-CLIP_TOL, 0)` are treated as zero.
const CLIP_TOL: f64 = 1e-9;
/// Density-matrix eigenvalues below `-CORRUPT_TOL` are an error.
const CORRUPT_TOL: f64 = 1e-6;
/// Imaginary parts of expectation values up to this size are discarded.
const IMAG_TOL: f64 = 1e-9;

/// Product basis of `sites` spin-1/2 sites in the `sigma_z` eigenbasis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinBasis {
    sites: usize,
}

impl SpinBasis {
    pub fn new(sites: usize) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::SiteCount(sites));
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Hilbert-space dimension `2^L`.
    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.sites {
            return Err(Error::SiteOutOfRange { site, sites: self.sites });
        }
        Ok(())
    }

    /// Checks a site list is nonempty, in range, and free of duplicates.
    pub fn check_sites(&self, sites: &[usize]) -> Result<()> {
        if sites.is_empty() {
            return Err(Error::EmptySites);
        }
        let mut seen = 0usize;
        for &s in sites {
            self.check_site(s)?;
            let m = self.site_mask(s);
            if seen & m != 0 {
                return Err(Error::DuplicateSite(s));
            }
            seen |= m;
        }
        Ok(())
    }

    /// Bit mask selecting `site` (1-based). Caller guarantees range.
    #[inline]
    pub fn site_mask(&self, site: usize) -> usize {
        debug_assert!(site >= 1 && site <= self.sites);
        1 << (self.sites - site)
    }

    pub fn sites_mask(&self, sites: &[usize]) -> usize {
        sites.iter().fold(0, |m, &s| m | self.site_mask(s))
    }

    #[inline]
    pub fn is_up(&self, index: usize, site: usize) -> bool {
        index & self.site_mask(site) == 0
    }

    /// `sigma_z` eigenvalue (+1 or -1) of `site` in basis state `index`.
    #[inline]
    pub fn sz(&self, index: usize, site: usize) -> f64 {
        if self.is_up(index, site) {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    pub fn flip(&self, index: usize, site: usize) -> usize {
        index ^ self.site_mask(site)
    }

    /// Index of the globally spin-flipped configuration.
    #[inline]
    pub fn flip_all(&self, index: usize) -> usize {
        index ^ (self.dim() - 1)
    }

    /// Number of down spins among the sites selected by `mask`.
    #[inline]
    pub fn down_count(&self, index: usize, mask: usize) -> u32 {
        (index & mask).count_ones()
    }

    /// Basis index for a configuration given as per-site "up" flags.
    pub fn index_of(&self, up: &[bool]) -> Result<usize> {
        if up.len() != self.sites {
            return Err(Error::Dimension { expected: self.sites, found: up.len() });
        }
        Ok(up
            .iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .fold(0, |acc, (k, _)| acc | self.site_mask(k + 1)))
    }

    /// Per-site "up" flags of a basis index.
    pub fn configuration(&self, index: usize) -> Vec<bool> {
        (1..=self.sites).map(|s| self.is_up(index, s)).collect()
    }

    /// The alternating state with site 1 up.
    pub fn neel_index(&self) -> usize {
        (1..=self.sites).filter(|s| s % 2 == 0).fold(0, |acc, s| acc | self.site_mask(s))
    }

    /// Packs the states of `sites` (in the given order, first = most
    /// significant) into a compact index.
    pub fn sub_index(&self, index: usize, sites: &[usize]) -> usize {
        sites
            .iter()
            .fold(0, |acc, &s| (acc << 1) | usize::from(!self.is_up(index, s)))
    }

    /// Sites `1..=L` not contained in `sites`, ascending.
    pub fn complement(&self, sites: &[usize]) -> Vec<usize> {
        (1..=self.sites).filter(|s| !sites.contains(s)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// Tensor product of single-site Pauli matrices, stored as bit masks.
///
/// Acting on basis state `b`, the string yields `phase(b) |b ^ flip_mask>`
/// with `phase(b) = i^{n_y} (-1)^{popcount(b & sign_mask)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    basis: SpinBasis,
    flip_mask: usize,
    sign_mask: usize,
    y_count: u32,
}

impl PauliString {
    pub fn new(basis: SpinBasis, factors: &[(usize, PauliAxis)]) -> Result<Self> {
        let mut flip_mask = 0;
        let mut sign_mask = 0;
        let mut y_count = 0;
        let mut seen = 0usize;
        for &(site, axis) in factors {
            basis.check_site(site)?;
            let m = basis.site_mask(site);
            if seen & m != 0 {
                return Err(Error::DuplicateSite(site));
            }
            seen |= m;
            match axis {
                PauliAxis::X => flip_mask |= m,
                PauliAxis::Y => {
                    flip_mask |= m;
                    sign_mask |= m;
                    y_count += 1;
                }
                PauliAxis::Z => sign_mask |= m,
            }
        }
        Ok(Self { basis, flip_mask, sign_mask, y_count })
    }

    pub fn identity(basis: SpinBasis) -> Self {
        Self { basis, flip_mask: 0, sign_mask: 0, y_count: 0 }
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    pub fn is_diagonal(&self) -> bool {
        self.flip_mask == 0
    }

    /// Image of basis state `col`: returns `(row, amplitude)`.
    #[inline]
    pub fn act(&self, col: usize) -> (usize, C64) {
        let base = match self.y_count % 4 {
            0 => ONE,
            1 => C64::new(0.0, 1.0),
            2 => -ONE,
            _ => C64::new(0.0, -1.0),
        };
        let sign = if (col & self.sign_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        (col ^ self.flip_mask, base * sign)
    }

    /// Adds `coeff * P` to a dense matrix.
    pub fn add_to(&self, target: &mut Array2<C64>, coeff: C64) {
        for col in 0..self.basis.dim() {
            let (row, amp) = self.act(col);
            target[[row, col]] += coeff * amp;
        }
    }

    pub fn to_operator(&self) -> DenseOperator {
        let mut m = Array2::zeros((self.basis.dim(), self.basis.dim()));
        self.add_to(&mut m, ONE);
        DenseOperator::from_parts(self.basis, m, Some(true))
    }

    /// Matrix-free application to a state.
    pub fn apply(&self, state: &StateVector) -> StateVector {
        let mut out = Array1::zeros(self.basis.dim());
        for (col, &a) in state.amplitudes().iter().enumerate() {
            let (row, amp) = self.act(col);
            out[row] += amp * a;
        }
        StateVector { basis: self.basis, amps: out }
    }
}

/// Dense matrix of the named Pauli tensor product.
pub fn pauli_string(basis: SpinBasis, factors: &[(usize, PauliAxis)]) -> Result<DenseOperator> {
    Ok(PauliString::new(basis, factors)?.to_operator())
}

/// Single-site Pauli operator.
pub fn sigma(basis: SpinBasis, site: usize, axis: PauliAxis) -> Result<DenseOperator> {
    pauli_string(basis, &[(site, axis)])
}

/// Eigen-decomposition `A = V diag(values) V^dagger` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

/// Complex `2^L x 2^L` matrix over a [`SpinBasis`].
///
/// The Hermiticity test and the eigen-decomposition are computed lazily and
/// cached, so a Hamiltonian shared across many propagators is diagonalized
/// once. Arithmetic operators panic on mismatched bases.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    basis: SpinBasis,
    matrix: Array2<C64>,
    hermitian: OnceLock<bool>,
    spectrum: OnceLock<Spectrum>,
}

impl DenseOperator {
    pub fn new(basis: SpinBasis, matrix: Array2<C64>) -> Result<Self> {
        let d = basis.dim();
        if matrix.dim() != (d, d) {
            return Err(Error::Dimension { expected: d, found: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self::from_parts(basis, matrix, None))
    }

    pub(crate) fn from_parts(basis: SpinBasis, matrix: Array2<C64>, hermitian: Option<bool>) -> Self {
        let flag = OnceLock::new();
        if let Some(h) = hermitian {
            let _ = flag.set(h);
        }
        Self { basis, matrix, hermitian: flag, spectrum: OnceLock::new() }
    }

    pub fn zeros(basis: SpinBasis) -> Self {
        Self::from_parts(basis, Array2::zeros((basis.dim(), basis.dim())), Some(true))
    }

    pub fn identity(basis: SpinBasis) -> Self {
        Self::from_parts(basis, linalg::identity(basis.dim()), Some(true))
    }

    /// Diagonal operator with real entries.
    pub fn diagonal(basis: SpinBasis, entries: &[f64]) -> Result<Self> {
        if entries.len() != basis.dim() {
            return Err(Error::Dimension { expected: basis.dim(), found: entries.len() });
        }
        let diag = Array1::from_iter(entries.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self::from_parts(basis, Array2::from_diag(&diag), Some(true)))
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.matrix.view()
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(self.matrix.view())
    }

    fn scale_of(&self) -> f64 {
        linalg::max_abs(self.matrix.view()).max(1.0)
    }

    pub fn is_hermitian(&self) -> bool {
        *self.hermitian.get_or_init(|| self.hermiticity_error() <= HERMITIAN_TOL * self.scale_of())
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian(self.hermiticity_error()))
        }
    }

    /// `(A + A^dagger) / 2`, flagged Hermitian.
    pub fn hermitian_part(&self) -> Self {
        let m = (&self.matrix + &linalg::adjoint(self.matrix.view())).mapv(|x| x * 0.5);
        Self::from_parts(self.basis, m, Some(true))
    }

    /// Cached eigen-decomposition; requires a Hermitian operator.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        self.ensure_hermitian()?;
        let (values, vectors) = linalg::eigh(self.matrix.view(), true)?;
        let computed = Spectrum { values, vectors: vectors.expect("vectors requested") };
        Ok(self.spectrum.get_or_init(|| computed))
    }

    /// Eigenvalues in ascending order; requires a Hermitian operator.
    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s.values.clone());
        }
        self.ensure_hermitian()?;
        Ok(linalg::eigh(self.matrix.view(), false)?.0)
    }

    pub fn adjoint(&self) -> Self {
        let h = self.hermitian.get().copied();
        Self::from_parts(self.basis, linalg::adjoint(self.matrix.view()), h)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_parts(self.basis, self.matrix.mapv(|x| x * c), None)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        let h = self.hermitian.get().copied();
        Self::from_parts(self.basis, self.matrix.mapv(|x| x * c), h)
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        assert_eq!(self.basis, other.basis, "basis mismatch");
        Self::from_parts(self.basis, linalg::commutator(self.matrix.view(), other.matrix.view()), None)
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius_norm(self.matrix.view())
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(self.matrix.view())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(self.matrix.view(), other.matrix.view())
    }

    /// `max |U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        linalg::unitarity_error(self.matrix.view())
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    /// Diagonal part in the product basis.
    pub fn diagonal_part(&self) -> Self {
        let h = self.is_hermitian();
        Self::from_parts(self.basis, Array2::from_diag(&self.matrix.diag().to_owned()), Some(h))
    }

    /// Everything except the diagonal.
    pub fn off_diagonal_part(&self) -> Self {
        let h = self.is_hermitian();
        let mut m = self.matrix.clone();
        m.diag_mut().fill(ZERO);
        Self::from_parts(self.basis, m, Some(h))
    }

    /// Hilbert-Schmidt coefficient `Tr[P^dagger A] / 2^L` of a Pauli string.
    pub fn pauli_coefficient(&self, pauli: &PauliString) -> C64 {
        assert_eq!(self.basis, pauli.basis(), "basis mismatch");
        let mut acc = ZERO;
        for col in 0..self.dim() {
            let (row, amp) = pauli.act(col);
            // (P^dagger)_{col,row} = conj(P_{row,col}).
            acc += amp.conj() * self.matrix[[row, col]];
        }
        acc / self.dim() as f64
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        assert_eq!(self.basis, state.basis, "basis mismatch");
        StateVector { basis: self.basis, amps: self.matrix.dot(&state.amps) }
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.basis, rhs.basis, "basis mismatch");
        let h = match (self.hermitian.get(), rhs.hermitian.get()) {
            (Some(true), Some(true)) => Some(true),
            _ => None,
        };
        DenseOperator::from_parts(self.basis, &self.matrix + &rhs.matrix, h)
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.basis, rhs.basis, "basis mismatch");
        let h = match (self.hermitian.get(), rhs.hermitian.get()) {
            (Some(true), Some(true)) => Some(true),
            _ => None,
        };
        DenseOperator::from_parts(self.basis, &self.matrix - &rhs.matrix, h)
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.basis, rhs.basis, "basis mismatch");
        DenseOperator::from_parts(self.basis, self.matrix.dot(&rhs.matrix), None)
    }
}

/// Pure state over a [`SpinBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: SpinBasis,
    amps: Array1<C64>,
}

impl StateVector {
    pub fn new(basis: SpinBasis, amps: Array1<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::Dimension { expected: basis.dim(), found: amps.len() });
        }
        Ok(Self { basis, amps })
    }

    pub fn basis_state(basis: SpinBasis, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::Dimension { expected: basis.dim(), found: index });
        }
        let mut amps = Array1::zeros(basis.dim());
        amps[index] = ONE;
        Ok(Self { basis, amps })
    }

    /// Product state from per-site amplitudes `[up, down]` (site 1 first).
    pub fn product(basis: SpinBasis, local: &[[C64; 2]]) -> Result<Self> {
        if local.len() != basis.sites() {
            return Err(Error::Dimension { expected: basis.sites(), found: local.len() });
        }
        let amps = Array1::from_shape_fn(basis.dim(), |b| {
            local
                .iter()
                .enumerate()
                .fold(ONE, |acc, (k, amp)| acc * amp[usize::from(!basis.is_up(b, k + 1))])
        });
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> ArrayView1<'_, C64> {
        self.amps.view()
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("state has zero or non-finite norm"));
        }
        Ok(Self { basis: self.basis, amps: self.amps.mapv(|a| a / n) })
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.basis, other.basis, "basis mismatch");
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probabilities(&self) -> Array1<f64> {
        self.amps.mapv(|a| a.norm_sqr())
    }

    /// `<sigma_z>` of one site, evaluated on the diagonal.
    pub fn sz(&self, site: usize) -> Result<f64> {
        self.basis.check_site(site)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| self.basis.sz(b, site) * a.norm_sqr())
            .sum())
    }

    /// `<sigma_z>` of every site, site 1 first.
    pub fn sz_all(&self) -> Vec<f64> {
        let l = self.basis.sites();
        let mut out = vec![0.0; l];
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.basis.sz(b, k + 1) * p;
            }
        }
        out
    }
}

/// Reduced density matrix over an ordered list of kept sites.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    sites: Vec<usize>,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.matrix.view()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|x| x.re).sum()
    }

    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        Ok(linalg::eigh(self.matrix.view(), false)?.0)
    }
}

/// Reduced density matrix of `state` over `keep` (first listed site is the
/// most significant bit of the reduced index).
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let basis = state.basis();
    basis.check_sites(keep)?;
    let rest = basis.complement(keep);
    let mut m = Array2::<C64>::zeros((1 << keep.len(), 1 << rest.len()));
    for (b, &a) in state.amps.iter().enumerate() {
        m[[basis.sub_index(b, keep), basis.sub_index(b, &rest)]] = a;
    }
    let rho = m.dot(&linalg::adjoint(m.view()));
    Ok(DensityMatrix { sites: keep.to_vec(), matrix: rho })
}

/// Von Neumann entropy `-Tr rho ln rho` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(rho.eigenvalues()?.view())
}

pub(crate) fn entropy_of_spectrum(values: ArrayView1<'_, f64>) -> Result<f64> {
    let mut s = 0.0;
    for &p in values {
        if p < -CORRUPT_TOL {
            return Err(Error::NegativeEigenvalue(p));
        }
        if p < -CLIP_TOL {
            return Err(Error::InvariantBreach {
                name: "density-matrix eigenvalue nonnegativity",
                value: p,
                tolerance: CLIP_TOL,
            });
        }
        if p > 0.0 {
            s -= p * p.ln();
        }
    }
    Ok(s.max(0.0))
}

/// `<psi|A|psi>` for Hermitian `A`.
pub fn expectation(state: &StateVector, op: &DenseOperator) -> Result<f64> {
    op.ensure_hermitian()?;
    let v = state.inner(&op.apply(state));
    if v.im.abs() > IMAG_TOL * v.re.abs().max(1.0) {
        return Err(Error::InvariantBreach {
            name: "real expectation value",
            value: v.im,
            tolerance: IMAG_TOL,
        });
    }
    Ok(v.re)
}

/// `prod_j exp(-i angle sigma_x_j / 2)`.
pub fn global_rotation_x(basis: SpinBasis, angle: f64) -> DenseOperator {
    let c = (angle / 2.0).cos();
    let ms = C64::new(0.0, -(angle / 2.0).sin());
    let l = basis.sites() as u32;
    let table: Vec<C64> = (0..=l).map(|k| ms.powu(k) * c.powi((l - k) as i32)).collect();
    let d = basis.dim();
    let m = Array2::from_shape_fn((d, d), |(a, b)| table[basis.down_count(a ^ b, d - 1) as usize]);
    DenseOperator::from_parts(basis, m, None)
}
