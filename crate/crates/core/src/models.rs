//! Hamiltonians of the gradient-field chain, disorder sampling and initial
//! states.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spinops::{DenseOperator, PauliAxis, PauliString, SpinBasis, StateVector};

/// Phase per (MHz x ns): evolving for `t` ns under `H` in MHz multiplies by
/// `exp(-i PHASE_PER_MHZ_NS H t)`.
pub const PHASE_PER_MHZ_NS: f64 = TAU * 1e-3;

/// Domain tag mixed into every disorder-stream key.
const FIELD_STREAM_TAG: &[u8; 16] = b"gdtc/fields/v1\0\0";

/// Distribution of the on-site field offsets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Disorder {
    /// Zero-mean normal with the given standard deviation.
    Gaussian { sigma_mhz: f64 },
    /// Uniform on `[-half_width, +half_width]`.
    Uniform { half_width_mhz: f64 },
}

impl Disorder {
    pub fn none() -> Self {
        Disorder::Gaussian { sigma_mhz: 0.0 }
    }

    pub fn width_mhz(&self) -> f64 {
        match *self {
            Disorder::Gaussian { sigma_mhz } => sigma_mhz,
            Disorder::Uniform { half_width_mhz } => half_width_mhz,
        }
    }
}

/// Axis carrying the linear field gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientAxis {
    #[default]
    Z,
    Y,
}

/// Physical parameters of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub sites: usize,
    /// Exchange coupling `J`.
    pub coupling_mhz: f64,
    /// Uniform applied field `B0`.
    pub field_mhz: f64,
    /// Field increment per site `g`.
    pub gradient_mhz: f64,
    pub disorder: Disorder,
    pub gradient_axis: GradientAxis,
}

impl ModelSpec {
    /// Disorder-free chain with a z-axis gradient.
    pub fn new(sites: usize, coupling_mhz: f64, field_mhz: f64, gradient_mhz: f64) -> Self {
        Self {
            sites,
            coupling_mhz,
            field_mhz,
            gradient_mhz,
            disorder: Disorder::none(),
            gradient_axis: GradientAxis::Z,
        }
    }

    pub fn with_disorder(mut self, disorder: Disorder) -> Self {
        self.disorder = disorder;
        self
    }

    pub fn with_gradient_axis(mut self, axis: GradientAxis) -> Self {
        self.gradient_axis = axis;
        self
    }

    pub fn basis(&self) -> Result<SpinBasis> {
        SpinBasis::new(self.sites)
    }

    /// Coupling-to-gradient ratio `J / g`.
    pub fn lambda(&self) -> f64 {
        self.coupling_mhz / self.gradient_mhz
    }

    pub fn validate(&self) -> Result<()> {
        SpinBasis::new(self.sites)?;
        if self.sites < 2 {
            return Err(Error::invalid("interacting chain needs at least 2 sites"));
        }
        let finite = [self.coupling_mhz, self.field_mhz, self.gradient_mhz, self.disorder.width_mhz()];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        if self.coupling_mhz < 0.0 {
            return Err(Error::invalid("coupling must be nonnegative"));
        }
        if self.disorder.width_mhz() < 0.0 {
            return Err(Error::invalid("disorder width must be nonnegative"));
        }
        Ok(())
    }

    /// Clean field `B0 + g (j - 1)` at `site`.
    pub fn clean_field(&self, site: usize) -> f64 {
        self.field_mhz + self.gradient_mhz * (site as f64 - 1.0)
    }
}

/// One disorder realization of the on-site fields.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldProfile {
    /// `B_j` for sites `1..=L` (index 0 is site 1).
    pub fields_mhz: Vec<f64>,
    pub seed: u64,
    pub realization: u64,
}

impl FieldProfile {
    /// Disorder-free fields of `spec`.
    pub fn clean(spec: &ModelSpec) -> Self {
        Self {
            fields_mhz: (1..=spec.sites).map(|j| spec.clean_field(j)).collect(),
            seed: 0,
            realization: 0,
        }
    }

    pub fn field(&self, site: usize) -> f64 {
        self.fields_mhz[site - 1]
    }
}

fn field_rng(master_seed: u64, realization: u64, site: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&realization.to_le_bytes());
    key[16..].copy_from_slice(FIELD_STREAM_TAG);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(site as u64);
    rng
}

/// Samples `B_j = B0 + g (j - 1) + dB_j`, each `dB_j` from an independent
/// counter-based stream keyed by `(master_seed, realization, j)`.
pub fn sample_fields(spec: &ModelSpec, master_seed: u64, realization: u64) -> FieldProfile {
    let fields_mhz = (1..=spec.sites)
        .map(|j| {
            let mut rng = field_rng(master_seed, realization, j);
            let offset = match spec.disorder {
                Disorder::Gaussian { sigma_mhz } => {
                    let z: f64 = rng.sample(StandardNormal);
                    sigma_mhz * z
                }
                Disorder::Uniform { half_width_mhz } => {
                    let u: f64 = rng.random();
                    half_width_mhz * (2.0 * u - 1.0)
                }
            };
            spec.clean_field(j) + offset
        })
        .collect();
    FieldProfile { fields_mhz, seed: master_seed, realization }
}

fn check_fields(spec: &ModelSpec, fields: &FieldProfile) -> Result<SpinBasis> {
    spec.validate()?;
    if fields.fields_mhz.len() != spec.sites {
        return Err(Error::Dimension { expected: spec.sites, found: fields.fields_mhz.len() });
    }
    spec.basis()
}

/// Diagonal entries of `(J/4) sum_j s_j s_{j+1} + (1/2) sum_j c_j s_j`.
fn ising_diagonal(basis: SpinBasis, coupling: f64, zcoef: &[f64]) -> Vec<f64> {
    let l = basis.sites();
    (0..basis.dim())
        .map(|b| {
            let bonds: f64 = (1..l).map(|j| basis.sz(b, j) * basis.sz(b, j + 1)).sum();
            let zeeman: f64 = (1..=l).map(|j| zcoef[j - 1] * basis.sz(b, j)).sum();
            0.25 * coupling * bonds + 0.5 * zeeman
        })
        .collect()
}

/// Adds `(J/4) sum_j (X_j X_{j+1} + Y_j Y_{j+1})` (open chain).
fn add_flip_flop(basis: SpinBasis, coupling: f64, m: &mut Array2<C64>) -> Result<()> {
    let c = C64::new(0.25 * coupling, 0.0);
    for j in 1..basis.sites() {
        PauliString::new(basis, &[(j, PauliAxis::X), (j + 1, PauliAxis::X)])?.add_to(m, c);
        PauliString::new(basis, &[(j, PauliAxis::Y), (j + 1, PauliAxis::Y)])?.add_to(m, c);
    }
    Ok(())
}

/// Gradient-field Heisenberg Hamiltonian
/// `(J/4) sum_j sigma_j . sigma_{j+1} + (1/2) sum_j B_j sigma^z_j` on an open
/// chain. With [`GradientAxis::Y`] the gradient part `g (j - 1)` multiplies
/// `sigma^y_j` instead of `sigma^z_j`.
pub fn build_heisenberg(spec: &ModelSpec, fields: &FieldProfile) -> Result<DenseOperator> {
    let basis = check_fields(spec, fields)?;
    let zcoef: Vec<f64> = match spec.gradient_axis {
        GradientAxis::Z => fields.fields_mhz.clone(),
        GradientAxis::Y => (1..=spec.sites)
            .map(|j| fields.field(j) - spec.gradient_mhz * (j as f64 - 1.0))
            .collect(),
    };
    let mut m = Array2::from_diag(&ndarray::Array1::from_iter(
        ising_diagonal(basis, spec.coupling_mhz, &zcoef).into_iter().map(|x| C64::new(x, 0.0)),
    ));
    add_flip_flop(basis, spec.coupling_mhz, &mut m)?;
    if spec.gradient_axis == GradientAxis::Y {
        for j in 2..=spec.sites {
            let c = C64::new(0.5 * spec.gradient_mhz * (j as f64 - 1.0), 0.0);
            PauliString::new(basis, &[(j, PauliAxis::Y)])?.add_to(&mut m, c);
        }
    }
    DenseOperator::new(basis, m)
}

/// Effective Ising Hamiltonian
/// `(J/4) sum_{j<L} sigma^z_j sigma^z_{j+1} + (1/2) sum_j B_j sigma^z_j`.
pub fn build_ising(spec: &ModelSpec, fields: &FieldProfile) -> Result<DenseOperator> {
    let basis = check_fields(spec, fields)?;
    DenseOperator::diagonal(basis, &ising_diagonal(basis, spec.coupling_mhz, &fields.fields_mhz))
}

/// Spatial part of the heating drive: `sum_j sigma^x_{2j}`.
pub fn build_heating_operator(basis: SpinBasis) -> Result<DenseOperator> {
    if basis.sites() < 2 {
        return Err(Error::invalid("heating drive needs at least 2 sites"));
    }
    let mut m = Array2::zeros((basis.dim(), basis.dim()));
    for j in (2..=basis.sites()).step_by(2) {
        PauliString::new(basis, &[(j, PauliAxis::X)])?.add_to(&mut m, C64::new(1.0, 0.0));
    }
    DenseOperator::new(basis, m)
}

/// Initial-state recipe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialPattern {
    /// Alternating z configuration starting with up on site 1.
    Neel,
    /// Product of `sigma^y = +1` eigenstates.
    NeelY,
    /// Explicit z configuration, site 1 first (`true` = up).
    Arrows(Vec<bool>),
    /// Lowest-energy eigenvector of a supplied Hamiltonian.
    Ground,
}

impl FromStr for InitialPattern {
    type Err = Error;

    /// Accepts `neel`, `neel_y`, `ground`, or an arrow string built from
    /// `u`/`d` or `↑`/`↓`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neel" => return Ok(Self::Neel),
            "neel_y" => return Ok(Self::NeelY),
            "ground" => return Ok(Self::Ground),
            _ => {}
        }
        let arrows = s
            .chars()
            .map(|c| match c {
                'u' | 'U' | '↑' => Ok(true),
                'd' | 'D' | '↓' => Ok(false),
                _ => Err(Error::InvalidPattern(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if arrows.is_empty() {
            return Err(Error::InvalidPattern(s.to_string()));
        }
        Ok(Self::Arrows(arrows))
    }
}

/// Builds a normalized initial state. `hamiltonian` is required for
/// [`InitialPattern::Ground`] and ignored otherwise.
pub fn initial_state(
    basis: SpinBasis,
    pattern: &InitialPattern,
    hamiltonian: Option<&DenseOperator>,
) -> Result<StateVector> {
    match pattern {
        InitialPattern::Neel => StateVector::basis_state(basis, basis.neel_index()),
        InitialPattern::NeelY => {
            let up_y = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)];
            StateVector::product(basis, &vec![up_y; basis.sites()])
        }
        InitialPattern::Arrows(up) => {
            if up.len() != basis.sites() {
                return Err(Error::InvalidPattern(format!(
                    "pattern has {} sites, chain has {}",
                    up.len(),
                    basis.sites()
                )));
            }
            StateVector::basis_state(basis, basis.index_of(up)?)
        }
        InitialPattern::Ground => {
            let h = hamiltonian.ok_or_else(|| Error::InvalidPattern("ground state needs a Hamiltonian".into()))?;
            if h.basis() != basis {
                return Err(Error::Dimension { expected: basis.dim(), found: h.dim() });
            }
            let spec = h.spectrum()?;
            StateVector::new(basis, spec.vectors.column(0).to_owned())
        }
    }
}
