//! Propagators and time evolution: static evolution through the cached
//! eigen-decomposition, instantaneous-pulse Floquet cycles, lab-frame EDSR
//! pulses, the square-wave heating drive, and Floquet eigen-analysis.

use std::f64::consts::PI;

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{build_heating_operator, ModelSpec, PHASE_PER_MHZ_NS};
use crate::spinops::{global_rotation_x, DenseOperator, PauliAxis, PauliString, SpinBasis, StateVector};

/// Tolerance on `max |U^dagger U - I|` for every propagator.
pub const UNITARITY_TOL: f64 = 1e-9;
/// Tolerance on the norm of evolved states.
pub const NORM_TOL: f64 = 1e-9;
/// Minimum number of integrator steps per cycle of the fastest carrier.
pub const MIN_STEPS_PER_CYCLE: usize = 40;
/// Default step density; halving the step from here changes the final state
/// by less than 1e-6 in fidelity.
pub const DEFAULT_STEPS_PER_CYCLE: usize = 80;

/// Floquet eigenvectors whose residual `|U v - lambda v|` exceeds this are rejected.
const FLOQUET_RESIDUAL_TOL: f64 = 1e-7;
/// Eigenvalue moduli must lie within this of 1.
const FLOQUET_MODULUS_TOL: f64 = 1e-8;
/// Neighbouring eigenvalues of the Hermitian part closer than this are
/// resolved jointly with the anti-Hermitian part.
const FLOQUET_CLUSTER_GAP: f64 = 1e-6;
/// Generic phase rotation applied before splitting `U` into Hermitian parts;
/// avoids systematic collisions of conjugate eigenvalue pairs.
const FLOQUET_SPLIT_PHASE: f64 = 0.618_033_988_749_894_9;

/// Instantaneous rotation `R_x(pi - 2 epsilon)` once per period.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaDrive {
    pub epsilon: f64,
    pub period_ns: f64,
}

/// Finite resonant pulse `a sum_j sigma^x_j cos(2 pi 1e-3 Omega_j t)` during
/// the final `duty` fraction of every period.
#[derive(Clone, Debug, PartialEq)]
pub struct EdsrDrive {
    pub epsilon: f64,
    pub period_ns: f64,
    pub duty: f64,
    /// Carrier frequencies `Omega_j`, one per site.
    pub carriers_mhz: Vec<f64>,
    /// Integrator steps per cycle of the fastest carrier (at least
    /// [`MIN_STEPS_PER_CYCLE`]).
    pub steps_per_cycle: usize,
}

impl EdsrDrive {
    /// Carriers tuned to the clean Zeeman frequencies `B0 + g (j - 1)`.
    pub fn resonant(spec: &ModelSpec, epsilon: f64, period_ns: f64, duty: f64) -> Self {
        Self {
            epsilon,
            period_ns,
            duty,
            carriers_mhz: (1..=spec.sites).map(|j| spec.clean_field(j)).collect(),
            steps_per_cycle: DEFAULT_STEPS_PER_CYCLE,
        }
    }

    /// Carrier amplitude that rotates a resonant spin by `pi - 2 epsilon`
    /// within the rotating-wave approximation.
    pub fn amplitude_mhz(&self) -> f64 {
        (PI - 2.0 * self.epsilon) / (PHASE_PER_MHZ_NS * self.duty * self.period_ns)
    }

    pub fn pulse_ns(&self) -> f64 {
        self.duty * self.period_ns
    }

    /// Integration step count for one pulse.
    pub fn steps_per_pulse(&self) -> usize {
        let f_max = self.carriers_mhz.iter().fold(0.0f64, |m, &f| m.max(f));
        let dt_max = 1e3 / (self.steps_per_cycle as f64 * f_max);
        (self.pulse_ns() / dt_max).ceil().max(1.0) as usize
    }

    pub fn validate(&self, sites: usize) -> Result<()> {
        check_period(self.period_ns)?;
        check_duty(self.duty)?;
        if self.carriers_mhz.len() != sites {
            return Err(Error::Dimension { expected: sites, found: self.carriers_mhz.len() });
        }
        if self.carriers_mhz.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::invalid("EDSR carrier frequencies must be positive"));
        }
        if self.steps_per_cycle < MIN_STEPS_PER_CYCLE {
            return Err(Error::invalid(format!(
                "EDSR step rule needs at least {MIN_STEPS_PER_CYCLE} steps per carrier cycle, got {}",
                self.steps_per_cycle
            )));
        }
        Ok(())
    }

    /// True when every carrier completes an integer number of cycles per
    /// period, so all pulses are identical.
    fn is_commensurate(&self) -> bool {
        self.carriers_mhz.iter().all(|&f| {
            let cycles = f * self.period_ns * 1e-3;
            (cycles - cycles.round()).abs() <= 1e-9 * cycles.max(1.0)
        })
    }
}

/// Square pulses of `amplitude * sum_j sigma^x_{2j}` during the final `duty`
/// fraction of every period.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareDrive {
    pub amplitude_mhz: f64,
    pub period_ns: f64,
    pub duty: f64,
}

impl SquareDrive {
    pub fn validate(&self) -> Result<()> {
        check_period(self.period_ns)?;
        check_duty(self.duty)?;
        if !self.amplitude_mhz.is_finite() {
            return Err(Error::invalid("square-drive amplitude must be finite"));
        }
        Ok(())
    }
}

/// Drive protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum Drive {
    Delta(DeltaDrive),
    Edsr(EdsrDrive),
    Square(SquareDrive),
    /// Free evolution, sampled at multiples of `period_ns`.
    None { period_ns: f64 },
}

impl Drive {
    pub fn period_ns(&self) -> f64 {
        match self {
            Drive::Delta(d) => d.period_ns,
            Drive::Edsr(d) => d.period_ns,
            Drive::Square(d) => d.period_ns,
            Drive::None { period_ns } => *period_ns,
        }
    }
}

/// Drive protocol plus run length.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveSpec {
    pub drive: Drive,
    pub n_periods: usize,
}

impl DriveSpec {
    pub fn validate(&self, sites: usize) -> Result<()> {
        match &self.drive {
            Drive::Delta(d) => {
                check_period(d.period_ns)?;
                if !d.epsilon.is_finite() {
                    return Err(Error::invalid("pulse error epsilon must be finite"));
                }
                Ok(())
            }
            Drive::Edsr(d) => d.validate(sites),
            Drive::Square(d) => d.validate(),
            Drive::None { period_ns } => check_period(*period_ns),
        }
    }
}

fn check_period(period_ns: f64) -> Result<()> {
    if period_ns > 0.0 && period_ns.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("period must be positive, got {period_ns}")))
    }
}

fn check_duty(duty: f64) -> Result<()> {
    if duty > 0.0 && duty < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("duty fraction must lie in (0, 1), got {duty}")))
    }
}

/// Disorder seed and realization that produced a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub realization: u64,
}

/// Stroboscopic record of an evolution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    /// Strictly increasing sample times.
    pub times_ns: Vec<f64>,
    /// `sz[k][j - 1]` is `<sigma^z_j>` at sample `k`.
    pub sz: Vec<Vec<f64>>,
    /// `<H>` per sample, when recorded.
    pub energy: Option<Vec<f64>>,
    /// States per sample, when recorded.
    pub snapshots: Option<Vec<StateVector>>,
    pub provenance: Option<Provenance>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times_ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_ns.is_empty()
    }

    /// `<sigma^z_site>` over all samples.
    pub fn site_series(&self, site: usize) -> Result<Vec<f64>> {
        let sites = self.sz.first().map_or(0, Vec::len);
        if site == 0 || site > sites {
            return Err(Error::SiteOutOfRange { site, sites });
        }
        Ok(self.sz.iter().map(|row| row[site - 1]).collect())
    }

    pub fn with_provenance(mut self, seed: u64, realization: u64) -> Self {
        self.provenance = Some(Provenance { seed, realization });
        self
    }

    fn record(&mut self, time_ns: f64, state: &StateVector) -> Result<()> {
        check_norm(state)?;
        let sz = state.sz_all();
        if let Some(&v) = sz.iter().find(|v| v.abs() > 1.0 + 1e-9) {
            return Err(Error::InvariantBreach { name: "|<sigma_z>| <= 1", value: v, tolerance: 1e-9 });
        }
        self.times_ns.push(time_ns);
        self.sz.push(sz);
        Ok(())
    }
}

fn check_norm(state: &StateVector) -> Result<()> {
    let dev = (state.norm() - 1.0).abs();
    if dev > NORM_TOL {
        return Err(Error::InvariantBreach { name: "state normalization", value: dev, tolerance: NORM_TOL });
    }
    Ok(())
}

fn check_unitary(u: &DenseOperator) -> Result<()> {
    let err = u.unitarity_error();
    if err > UNITARITY_TOL {
        return Err(Error::NotUnitary(err));
    }
    Ok(())
}

fn check_same_basis(h: &DenseOperator, psi: &StateVector) -> Result<()> {
    if h.basis() != psi.basis() {
        return Err(Error::Dimension { expected: h.dim(), found: psi.basis().dim() });
    }
    Ok(())
}

fn phase_factor(energy_mhz: f64, t_ns: f64) -> C64 {
    C64::from_polar(1.0, -PHASE_PER_MHZ_NS * energy_mhz * t_ns)
}

/// `exp(-i 2 pi 1e-3 H t)` from the (cached) eigen-decomposition of `H`.
pub fn static_propagator(h: &DenseOperator, t_ns: f64) -> Result<DenseOperator> {
    let sp = h.spectrum()?;
    let m = linalg::spectral_function(sp.values.view(), sp.vectors.view(), |e| phase_factor(e, t_ns));
    DenseOperator::new(h.basis(), m)
}

/// Evolves `psi` under static `H` for `t_ns` without forming the propagator.
pub fn evolve_static(h: &DenseOperator, psi: &StateVector, t_ns: f64) -> Result<StateVector> {
    Ok(evolve_static_many(h, psi, &[t_ns])?.pop().expect("one time requested"))
}

/// Evolves `psi` under static `H` to each of `times_ns`.
pub fn evolve_static_many(h: &DenseOperator, psi: &StateVector, times_ns: &[f64]) -> Result<Vec<StateVector>> {
    check_same_basis(h, psi)?;
    let sp = h.spectrum()?;
    let coeffs = linalg::adjoint(sp.vectors.view()).dot(&psi.amplitudes());
    times_ns
        .iter()
        .map(|&t| {
            let rotated = Array1::from_iter(
                coeffs.iter().zip(sp.values.iter()).map(|(&c, &e)| c * phase_factor(e, t)),
            );
            let out = StateVector::new(h.basis(), sp.vectors.dot(&rotated))?;
            check_norm(&out)?;
            Ok(out)
        })
        .collect()
}

/// Single-period Floquet operator `R_x(pi - 2 epsilon) exp(-i H T)`.
pub fn floquet_operator_delta(h: &DenseOperator, epsilon: f64, period_ns: f64) -> Result<DenseOperator> {
    check_period(period_ns)?;
    let free = static_propagator(h, period_ns)?;
    let u = &global_rotation_x(h.basis(), PI - 2.0 * epsilon) * &free;
    check_unitary(&u)?;
    Ok(u)
}

/// `U^n` by binary exponentiation.
fn matrix_power(u: &DenseOperator, mut n: usize) -> DenseOperator {
    let mut result = DenseOperator::identity(u.basis());
    let mut base = u.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Lazily applies a one-period propagator; yields `(periods elapsed, state)`
/// every `sample_every` periods, starting with the initial state.
pub struct Stroboscopic {
    step: Array2<C64>,
    state: Array1<C64>,
    basis: SpinBasis,
    sample_every: usize,
    periods: usize,
    started: bool,
}

impl Stroboscopic {
    pub fn new(u_period: &DenseOperator, psi0: &StateVector, sample_every: usize) -> Result<Self> {
        if sample_every == 0 {
            return Err(Error::invalid("sample_every must be at least 1"));
        }
        if u_period.basis() != psi0.basis() {
            return Err(Error::Dimension { expected: u_period.dim(), found: psi0.basis().dim() });
        }
        check_unitary(u_period)?;
        let step = matrix_power(u_period, sample_every).into_matrix();
        Ok(Self {
            step,
            state: psi0.amplitudes().to_owned(),
            basis: psi0.basis(),
            sample_every,
            periods: 0,
            started: false,
        })
    }

    /// Advances to the next sample and returns it.
    pub fn advance(&mut self) -> Result<(usize, StateVector)> {
        if self.started {
            self.state = self.step.dot(&self.state);
            self.periods += self.sample_every;
        }
        self.started = true;
        let s = StateVector::new(self.basis, self.state.clone())?;
        check_norm(&s)?;
        Ok((self.periods, s))
    }
}

/// Repeatedly applies `u_period`, recording `<sigma^z_j>` every
/// `sample_every` periods (the initial state is sample 0). `n_periods` must be
/// a multiple of `sample_every`.
pub fn evolve_stroboscopic(
    u_period: &DenseOperator,
    period_ns: f64,
    psi0: &StateVector,
    n_periods: usize,
    sample_every: usize,
) -> Result<Trajectory> {
    check_period(period_ns)?;
    if sample_every == 0 || n_periods % sample_every != 0 {
        return Err(Error::invalid(format!(
            "sample spacing {sample_every} does not divide run length {n_periods}"
        )));
    }
    let mut it = Stroboscopic::new(u_period, psi0, sample_every)?;
    let mut traj = Trajectory::default();
    for _ in 0..=n_periods / sample_every {
        let (p, s) = it.advance()?;
        traj.record(p as f64 * period_ns, &s)?;
    }
    Ok(traj)
}

/// Eigen-decomposition of a unitary one-period operator.
#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    pub eigenvalues: Vec<C64>,
    /// `-arg(lambda)` in `(-pi, pi]`.
    pub quasienergies: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl FloquetSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Full eigen-decomposition of a unitary.
///
/// The Hermitian part of `e^{-i phi} U` is diagonalized first; clusters of
/// (near-)degenerate eigenvalues are then resolved with the anti-Hermitian
/// part restricted to the cluster. Both parts commute for a normal matrix, so
/// the eigenvectors are orthonormal by construction.
pub fn floquet_eigenstates(u: &DenseOperator) -> Result<FloquetSpectrum> {
    check_unitary(u)?;
    let basis = u.basis();
    let d = u.dim();
    let rot = C64::from_polar(1.0, -FLOQUET_SPLIT_PHASE);
    let um = u.matrix();
    let ud = linalg::adjoint(um);
    let herm = (&um.mapv(|x| rot * x) + &ud.mapv(|x| rot.conj() * x)).mapv(|x| 0.5 * x);
    let (w, v) = linalg::eigh(herm.view(), true)?;
    let mut v = v.expect("vectors requested");

    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && w[end] - w[end - 1] < FLOQUET_CLUSTER_GAP {
            end += 1;
        }
        if end - start > 1 {
            let vc = v.slice(s![.., start..end]).to_owned();
            let uc = linalg::adjoint(vc.view()).dot(&um.dot(&vc));
            let ucd = linalg::adjoint(uc.view());
            let anti = (&uc.mapv(|x| rot * x) - &ucd.mapv(|x| rot.conj() * x)).mapv(|x| x / C64::new(0.0, 2.0));
            let (_, r) = linalg::eigh(anti.view(), true)?;
            let refined = vc.dot(&r.expect("vectors requested"));
            v.slice_mut(s![.., start..end]).assign(&refined);
        }
        start = end;
    }

    let uv = um.dot(&v);
    let mut eigenvalues = Vec::with_capacity(d);
    let mut quasienergies = Vec::with_capacity(d);
    let mut states = Vec::with_capacity(d);
    for k in 0..d {
        let col = v.column(k);
        let ucol = uv.column(k);
        let lam: C64 = col.iter().zip(ucol.iter()).map(|(a, b)| a.conj() * b).sum();
        let resid = col
            .iter()
            .zip(ucol.iter())
            .map(|(a, b)| (b - lam * a).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if resid > FLOQUET_RESIDUAL_TOL {
            return Err(Error::Decomposition(resid));
        }
        let modulus_err = (lam.norm() - 1.0).abs();
        if modulus_err > FLOQUET_MODULUS_TOL {
            return Err(Error::InvariantBreach {
                name: "unit-modulus Floquet eigenvalue",
                value: modulus_err,
                tolerance: FLOQUET_MODULUS_TOL,
            });
        }
        let mut q = -lam.arg();
        if q <= -PI {
            q += 2.0 * PI;
        }
        eigenvalues.push(lam);
        quasienergies.push(q);
        states.push(StateVector::new(basis, col.to_owned())?);
    }
    Ok(FloquetSpectrum { eigenvalues, quasienergies, states })
}

/// Fixed-step midpoint-exponential integrator for the EDSR pulse.
struct EdsrIntegrator<'a> {
    h: &'a DenseOperator,
    drive: &'a EdsrDrive,
    amplitude: f64,
    flips: Vec<PauliString>,
    steps: usize,
    dt: f64,
}

impl<'a> EdsrIntegrator<'a> {
    fn new(h: &'a DenseOperator, drive: &'a EdsrDrive) -> Result<Self> {
        drive.validate(h.basis().sites())?;
        let steps = drive.steps_per_pulse();
        let flips = (1..=h.basis().sites())
            .map(|j| PauliString::new(h.basis(), &[(j, PauliAxis::X)]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            h,
            drive,
            amplitude: drive.amplitude_mhz(),
            flips,
            steps,
            dt: drive.pulse_ns() / steps as f64,
        })
    }

    /// `H + V(t)` at absolute time `t_ns`.
    fn hamiltonian_at(&self, t_ns: f64) -> Result<DenseOperator> {
        let mut m = self.h.matrix().to_owned();
        for (x, &f) in self.flips.iter().zip(&self.drive.carriers_mhz) {
            x.add_to(&mut m, C64::new(self.amplitude * (PHASE_PER_MHZ_NS * f * t_ns).cos(), 0.0));
        }
        DenseOperator::new(self.h.basis(), m)
    }

    fn step_midpoints(&self, period_index: usize) -> impl Iterator<Item = f64> + '_ {
        let start = (period_index as f64 + 1.0 - self.drive.duty) * self.drive.period_ns;
        (0..self.steps).map(move |k| start + (k as f64 + 0.5) * self.dt)
    }

    /// Propagator of the whole pulse in period `period_index` (0-based).
    fn pulse_unitary(&self, period_index: usize) -> Result<DenseOperator> {
        let mut u = DenseOperator::identity(self.h.basis());
        for t in self.step_midpoints(period_index) {
            let step = static_propagator(&self.hamiltonian_at(t)?, self.dt)?;
            u = &step * &u;
        }
        Ok(u)
    }

    /// Applies the pulse of period `period_index` directly to a state.
    fn pulse_state(&self, period_index: usize, psi: StateVector) -> Result<StateVector> {
        let mut psi = psi;
        for t in self.step_midpoints(period_index) {
            psi = evolve_static(&self.hamiltonian_at(t)?, &psi, self.dt)?;
        }
        Ok(psi)
    }
}

/// Lab-frame EDSR evolution: per period, free evolution for `(1 - duty) T`
/// followed by the carrier pulse, integrated with midpoint exponentials.
/// Samples every `sample_every` periods including `t = 0`.
pub fn evolve_edsr(
    h: &DenseOperator,
    drive: &EdsrDrive,
    psi0: &StateVector,
    n_periods: usize,
    sample_every: usize,
) -> Result<Trajectory> {
    check_same_basis(h, psi0)?;
    if sample_every == 0 || n_periods % sample_every != 0 {
        return Err(Error::invalid(format!(
            "sample spacing {sample_every} does not divide run length {n_periods}"
        )));
    }
    let integrator = EdsrIntegrator::new(h, drive)?;
    let free = static_propagator(h, (1.0 - drive.duty) * drive.period_ns)?;
    let mut traj = Trajectory::default();
    traj.record(0.0, psi0)?;

    if drive.is_commensurate() {
        let u = &integrator.pulse_unitary(0)? * &free;
        check_unitary(&u)?;
        let mut it = Stroboscopic::new(&u, psi0, sample_every)?;
        it.advance()?;
        for _ in 0..n_periods / sample_every {
            let (p, s) = it.advance()?;
            traj.record(p as f64 * drive.period_ns, &s)?;
        }
        return Ok(traj);
    }

    let mut psi = psi0.clone();
    for p in 0..n_periods {
        psi = integrator.pulse_state(p, free.apply(&psi))?;
        check_norm(&psi)?;
        if (p + 1) % sample_every == 0 {
            traj.record((p + 1) as f64 * drive.period_ns, &psi)?;
        }
    }
    Ok(traj)
}

/// Square-wave heating drive: per period, `(1 - duty) T` under `H` then
/// `duty T` under `H + A sum_j sigma^x_{2j}`. Records `<sigma^z_j>` and `<H>`
/// at every period boundary.
pub fn evolve_square_drive(
    h: &DenseOperator,
    drive: &SquareDrive,
    psi0: &StateVector,
    n_periods: usize,
) -> Result<Trajectory> {
    check_same_basis(h, psi0)?;
    drive.validate()?;
    let free = static_propagator(h, (1.0 - drive.duty) * drive.period_ns)?;
    let kick = build_heating_operator(h.basis())?.scale_real(drive.amplitude_mhz);
    let pulse = static_propagator(&(h + &kick), drive.duty * drive.period_ns)?;
    let u = &pulse * &free;
    check_unitary(&u)?;

    let mut it = Stroboscopic::new(&u, psi0, 1)?;
    let mut traj = Trajectory::default();
    let mut energy = Vec::with_capacity(n_periods + 1);
    for _ in 0..=n_periods {
        let (p, s) = it.advance()?;
        let e = s.inner(&h.apply(&s));
        energy.push(e.re);
        traj.record(p as f64 * drive.period_ns, &s)?;
    }
    traj.energy = Some(energy);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_heisenberg, build_ising, initial_state, sample_fields, Disorder, FieldProfile, InitialPattern};
    use crate::spinops::{pauli_string, sigma};
    use proptest::prelude::*;

    fn basis(l: usize) -> SpinBasis {
        SpinBasis::new(l).unwrap()
    }

    fn neel(l: usize) -> StateVector {
        initial_state(basis(l), &InitialPattern::Neel, None).unwrap()
    }

    fn dtc_model(sites: usize) -> ModelSpec {
        ModelSpec::new(sites, 2.5, 5000.0, 600.0).with_disorder(Disorder::Gaussian { sigma_mhz: 9.0 })
    }

    #[test]
    fn zero_time_is_identity() {
        let spec = ModelSpec::new(3, 1.0, 3.0, 2.0);
        let h = build_heisenberg(&spec, &FieldProfile::clean(&spec)).unwrap();
        let u = static_propagator(&h, 0.0).unwrap();
        assert!(u.max_abs_diff(&DenseOperator::identity(h.basis())) < 1e-12);
    }

    #[test]
    fn unit_convention_full_turn() {
        let b1 = basis(1);
        let h = sigma(b1, 1, PauliAxis::Z).unwrap().scale_real(5.0);
        let u = static_propagator(&h, 100.0).unwrap();
        let minus_one = DenseOperator::identity(b1).scale_real(-1.0);
        assert!(u.max_abs_diff(&minus_one) < 1e-12);
    }

    #[test]
    fn two_site_swap_period() {
        let spec = ModelSpec::new(2, 4.0, 0.0, 0.0);
        let h = build_heisenberg(&spec, &FieldProfile::clean(&spec)).unwrap();
        let b2 = basis(2);
        let ud = StateVector::basis_state(b2, 0b01).unwrap();
        let du = StateVector::basis_state(b2, 0b10).unwrap();
        assert!((evolve_static(&h, &ud, 250.0).unwrap().fidelity(&ud) - 1.0).abs() < 1e-12);
        assert!((evolve_static(&h, &ud, 125.0).unwrap().fidelity(&du) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagator_composition() {
        let spec = dtc_model(4);
        let h = build_heisenberg(&spec, &sample_fields(&spec, 3, 1)).unwrap();
        let a = static_propagator(&h, 13.7).unwrap();
        let b = static_propagator(&h, 41.1).unwrap();
        let ab = static_propagator(&h, 54.8).unwrap();
        assert!((&a * &b).max_abs_diff(&ab) < 1e-9);
        assert!(ab.unitarity_error() < 1e-12);
    }

    #[test]
    fn static_state_evolution_matches_propagator() {
        let spec = dtc_model(4);
        let h = build_heisenberg(&spec, &sample_fields(&spec, 3, 2)).unwrap();
        let psi = neel(4);
        let direct = evolve_static(&h, &psi, 77.0).unwrap();
        let via = static_propagator(&h, 77.0).unwrap().apply(&psi);
        assert!((direct.fidelity(&via) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_generator_rejected() {
        let b1 = basis(1);
        let bad = pauli_string(b1, &[(1, PauliAxis::X)]).unwrap().scale(C64::new(0.0, 1.0));
        assert!(matches!(static_propagator(&bad, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn zero_angle_pulse_is_free_evolution() {
        let spec = dtc_model(3);
        let h = build_heisenberg(&spec, &sample_fields(&spec, 1, 0)).unwrap();
        let u = floquet_operator_delta(&h, PI / 2.0, 100.0).unwrap();
        assert!(u.max_abs_diff(&static_propagator(&h, 100.0).unwrap()) < 1e-12);
    }

    #[test]
    fn exact_decoupling_identity() {
        for l in [3usize, 4] {
            let spec = ModelSpec::new(l, 2.5, 300.0, 40.0).with_disorder(Disorder::Gaussian { sigma_mhz: 5.0 });
            let h = build_ising(&spec, &sample_fields(&spec, 8, 0)).unwrap();
            let u = floquet_operator_delta(&h, 0.0, 100.0).unwrap();
            let u2 = &u * &u;
            let b = basis(l);
            let zz: Vec<f64> = (0..b.dim())
                .map(|k| (1..l).map(|j| b.sz(k, j) * b.sz(k, j + 1)).sum::<f64>())
                .collect();
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let expect = Array2::from_diag(&Array1::from_iter(
                zz.iter().map(|&z| sign * phase_factor(0.5 * 2.5 * z, 100.0)),
            ));
            let expect = DenseOperator::new(b, expect).unwrap();
            assert!(u2.max_abs_diff(&expect) < 1e-9, "L = {l}");
        }
    }

    #[test]
    fn end_spin_preserved_deep_in_crystal_phase() {
        let spec = dtc_model(4);
        let realizations = 20;
        let mut mean_of_averages = 0.0;
        for r in 0..realizations {
            let h = build_heisenberg(&spec, &sample_fields(&spec, 42, r)).unwrap();
            let u = floquet_operator_delta(&h, 0.1, 100.0).unwrap();
            let traj = evolve_stroboscopic(&u, 100.0, &neel(4), 400, 2).unwrap();
            let z1 = traj.site_series(1).unwrap();
            assert_eq!(z1.len(), 201);
            mean_of_averages += z1[..200].iter().sum::<f64>() / 200.0 / realizations as f64;
        }
        assert!(mean_of_averages > 0.9, "{mean_of_averages}");
    }

    #[test]
    fn stroboscopic_limit_cases() {
        let b3 = basis(3);
        let psi = neel(3);
        let id = DenseOperator::identity(b3);
        let t0 = evolve_stroboscopic(&id, 100.0, &psi, 0, 2).unwrap();
        assert_eq!(t0.len(), 1);
        assert_eq!(t0.sz[0], vec![1.0, -1.0, 1.0]);
        let t = evolve_stroboscopic(&id, 100.0, &psi, 10, 2).unwrap();
        assert_eq!(t.times_ns, vec![0.0, 200.0, 400.0, 600.0, 800.0, 1000.0]);
        assert!(t.sz.iter().all(|row| row == &vec![1.0, -1.0, 1.0]));
        assert!(evolve_stroboscopic(&id, 100.0, &psi, 9, 2).is_err());
        let not_unitary = id.scale_real(2.0);
        assert!(matches!(evolve_stroboscopic(&not_unitary, 100.0, &psi, 2, 2), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn sampling_spacing_matches_single_steps() {
        let spec = dtc_model(3);
        let h = build_heisenberg(&spec, &sample_fields(&spec, 5, 5)).unwrap();
        let u = floquet_operator_delta(&h, 0.2, 100.0).unwrap();
        let every = evolve_stroboscopic(&u, 100.0, &neel(3), 12, 1).unwrap();
        let third = evolve_stroboscopic(&u, 100.0, &neel(3), 12, 3).unwrap();
        for (k, row) in third.sz.iter().enumerate() {
            for (a, b) in row.iter().zip(&every.sz[3 * k]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn floquet_of_identity() {
        let fs = floquet_eigenstates(&DenseOperator::identity(basis(3))).unwrap();
        assert_eq!(fs.len(), 8);
        assert!(fs.eigenvalues.iter().all(|l| (l - C64::new(1.0, 0.0)).norm() < 1e-12));
        assert!(fs.quasienergies.iter().all(|q| q.abs() < 1e-12));
    }

    #[test]
    fn floquet_of_pi_rotation() {
        let u = global_rotation_x(basis(1), PI);
        let fs = floquet_eigenstates(&u).unwrap();
        for (lam, v) in fs.eigenvalues.iter().zip(&fs.states) {
            let a = v.amplitudes();
            let ratio = a[1] / a[0];
            // |+> has eigenvalue -i, |-> has +i.
            if ratio.re > 0.0 {
                assert!((lam - C64::new(0.0, -1.0)).norm() < 1e-12);
            } else {
                assert!((lam - C64::new(0.0, 1.0)).norm() < 1e-12);
            }
            assert!((ratio.norm() - 1.0).abs() < 1e-12 && ratio.im.abs() < 1e-12);
        }
        let mut q = fs.quasienergies.clone();
        q.sort_by(f64::total_cmp);
        assert!((q[0] + PI / 2.0).abs() < 1e-12 && (q[1] - PI / 2.0).abs() < 1e-12);
    }

    fn check_floquet(u: &DenseOperator, fs: &FloquetSpectrum) {
        let d = u.dim();
        for i in 0..d {
            for j in 0..d {
                let o = fs.states[i].inner(&fs.states[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((o - C64::new(expect, 0.0)).norm() < 1e-8);
            }
            let uv = u.apply(&fs.states[i]);
            let r: f64 = uv
                .amplitudes()
                .iter()
                .zip(fs.states[i].amplitudes())
                .map(|(a, b)| (a - fs.eigenvalues[i] * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-9);
            assert!((fs.eigenvalues[i].norm() - 1.0).abs() < 1e-8);
            assert!(fs.quasienergies[i] > -PI && fs.quasienergies[i] <= PI);
        }
    }

    #[test]
    fn floquet_decomposition_of_degenerate_and_generic_unitaries() {
        // Highly degenerate: a product of commuting Pauli rotations.
        let u = global_rotation_x(basis(4), PI);
        check_floquet(&u, &floquet_eigenstates(&u).unwrap());
        let spec = dtc_model(5);
        let h = build_heisenberg(&spec, &sample_fields(&spec, 2, 2)).unwrap();
        let u = floquet_operator_delta(&h, 0.05, 100.0).unwrap();
        check_floquet(&u, &floquet_eigenstates(&u).unwrap());
    }

    #[test]
    fn floquet_states_are_cat_like_deep_in_crystal_phase() {
        let spec = ModelSpec::new(4, 4.0, 5000.0, 600.0).with_disorder(Disorder::Gaussian { sigma_mhz: 9.0 });
        let b = basis(4);
        for r in 0..3 {
            let h = build_heisenberg(&spec, &sample_fields(&spec, 17, r)).unwrap();
            let u = floquet_operator_delta(&h, 0.05, 100.0).unwrap();
            let fs = floquet_eigenstates(&u).unwrap();
            for v in &fs.states {
                let p = v.probabilities();
                let top = (0..b.dim()).max_by(|&x, &y| p[x].total_cmp(&p[y])).unwrap();
                let ratio = p[top] / p[b.flip_all(top)];
                assert!((0.3..=3.0).contains(&ratio), "ratio {ratio}");
            }
        }
    }

    #[test]
    fn edsr_amplitude_rule() {
        let spec = ModelSpec::new(1, 0.0, 100.0, 0.0);
        let d = EdsrDrive::resonant(&spec, 0.0, 100.0, 0.1);
        // pi rotation in 10 ns: 2 pi 1e-3 a 10 = pi.
        assert!((d.amplitude_mhz() - 50.0).abs() < 1e-12);
        assert_eq!(d.steps_per_pulse(), 80);
        let bad = EdsrDrive { steps_per_cycle: 20, ..d };
        assert!(bad.validate(1).is_err());
    }

    fn single_spin(field: f64) -> (DenseOperator, ModelSpec) {
        let spec = ModelSpec::new(1, 0.0, field, 0.0);
        let h = sigma(basis(1), 1, PauliAxis::Z).unwrap().scale_real(0.5 * field);
        (h, spec)
    }

    #[test]
    fn edsr_rabi_oracle() {
        let (h, spec) = single_spin(1000.0);
        let drive = EdsrDrive::resonant(&spec, 0.0, 100.0, 0.1);
        let up = StateVector::basis_state(basis(1), 0).unwrap();
        let traj = evolve_edsr(&h, &drive, &up, 1, 1).unwrap();
        let z = traj.sz[1][0];
        assert!((z + 1.0).abs() < 0.01, "final <sz> = {z}");
    }

    #[test]
    fn edsr_zero_angle_is_free_evolution() {
        let spec = ModelSpec::new(3, 2.5, 100.0, 60.0);
        let h = build_heisenberg(&spec, &FieldProfile::clean(&spec)).unwrap();
        let drive = EdsrDrive::resonant(&spec, PI / 2.0, 100.0, 0.1);
        let psi = neel(3);
        let driven = evolve_edsr(&h, &drive, &psi, 4, 1).unwrap();
        let free = evolve_stroboscopic(&static_propagator(&h, 100.0).unwrap(), 100.0, &psi, 4, 1).unwrap();
        for (a, b) in driven.sz.iter().flatten().zip(free.sz.iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn edsr_step_halving_converges() {
        let spec = ModelSpec::new(2, 2.5, 100.0, 50.0);
        let h = build_heisenberg(&spec, &FieldProfile::clean(&spec)).unwrap();
        let drive = EdsrDrive::resonant(&spec, 0.1, 100.0, 0.1);
        let fine = EdsrDrive { steps_per_cycle: 2 * DEFAULT_STEPS_PER_CYCLE, ..drive.clone() };
        let psi = neel(2);
        let a = EdsrIntegrator::new(&h, &drive).unwrap().pulse_state(0, psi.clone()).unwrap();
        let b = EdsrIntegrator::new(&h, &fine).unwrap().pulse_state(0, psi).unwrap();
        assert!(1.0 - a.fidelity(&b) < 1e-6, "infidelity {}", 1.0 - a.fidelity(&b));
    }

    #[test]
    fn edsr_cached_pulse_matches_stepping() {
        let spec = ModelSpec::new(2, 2.5, 100.0, 50.0);
        let h = build_heisenberg(&spec, &FieldProfile::clean(&spec)).unwrap();
        let drive = EdsrDrive::resonant(&spec, 0.1, 100.0, 0.1);
        assert!(drive.is_commensurate());
        let integ = EdsrIntegrator::new(&h, &drive).unwrap();
        let psi = neel(2);
        let stepped = integ.pulse_state(3, psi.clone()).unwrap();
        let cached = integ.pulse_unitary(0).unwrap().apply(&psi);
        assert!((stepped.fidelity(&cached) - 1.0).abs() < 1e-10);

        // Off-grid carriers take the per-period stepping path.
        let off = EdsrDrive { carriers_mhz: vec![100.3, 150.3], ..drive };
        assert!(!off.is_commensurate());
        let traj = evolve_edsr(&h, &off, &psi, 2, 1).unwrap();
        assert_eq!(traj.len(), 3);
    }

    #[test]
    fn square_drive_without_amplitude_conserves_energy() {
        let spec = ModelSpec::new(4, 4.0, 100.0, 0.0).with_disorder(Disorder::Gaussian { sigma_mhz: 5.0 });
        let h = build_heisenberg(&spec, &sample_fields(&spec, 1, 1)).unwrap();
        let drive = SquareDrive { amplitude_mhz: 0.0, period_ns: 1e4, duty: 0.5 };
        let traj = evolve_square_drive(&h, &drive, &neel(4), 20).unwrap();
        let e = traj.energy.unwrap();
        assert!(e.iter().all(|x| (x - e[0]).abs() < 1e-9));

        let ground = initial_state(basis(4), &InitialPattern::Ground, Some(&h)).unwrap();
        let traj = evolve_square_drive(&h, &drive, &ground, 10).unwrap();
        assert!(traj.sz.iter().all(|row| row.iter().zip(&traj.sz[0]).all(|(a, b)| (a - b).abs() < 1e-9)));
    }

    #[test]
    fn square_drive_heats() {
        let spec = ModelSpec::new(4, 4.0, 100.0, 0.0).with_disorder(Disorder::Gaussian { sigma_mhz: 5.0 });
        let h = build_heisenberg(&spec, &sample_fields(&spec, 1, 1)).unwrap();
        let ground = initial_state(basis(4), &InitialPattern::Ground, Some(&h)).unwrap();
        let drive = SquareDrive { amplitude_mhz: 50.0, period_ns: 1e4, duty: 0.5 };
        let traj = evolve_square_drive(&h, &drive, &ground, 50).unwrap();
        let e = traj.energy.unwrap();
        assert!(e.last().unwrap() > &(e[0] + 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn propagators_are_unitary(seed in 0u64..1000, eps in -1.0f64..1.0, t in 1.0f64..500.0, l in 2usize..6) {
            let spec = ModelSpec::new(l, 3.0, 50.0, 20.0).with_disorder(Disorder::Gaussian { sigma_mhz: 4.0 });
            let h = build_heisenberg(&spec, &sample_fields(&spec, seed, 0)).unwrap();
            prop_assert!(static_propagator(&h, t).unwrap().unitarity_error() < 1e-9);
            prop_assert!(floquet_operator_delta(&h, eps, t).unwrap().unitarity_error() < 1e-9);
            prop_assert!(global_rotation_x(h.basis(), eps * 3.0).unitarity_error() < 1e-9);
        }

        #[test]
        fn evolution_preserves_norm(seed in 0u64..1000, eps in -0.5f64..0.5) {
            let spec = ModelSpec::new(4, 2.5, 500.0, 100.0).with_disorder(Disorder::Gaussian { sigma_mhz: 9.0 });
            let h = build_heisenberg(&spec, &sample_fields(&spec, seed, 1)).unwrap();
            let u = floquet_operator_delta(&h, eps, 100.0).unwrap();
            let traj = evolve_stroboscopic(&u, 100.0, &neel(4), 50, 1).unwrap();
            prop_assert!(traj.times_ns.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(traj.sz.iter().flatten().all(|z| z.abs() <= 1.0 + 1e-9));
        }
    }
}
