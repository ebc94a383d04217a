//! Observables: stroboscopic and disorder averages, spin-reversal time,
//! mutual information, quantum Fisher information of the staggered
//! magnetization, heating ratio, entanglement entropy, participation ratio,
//! resonance predictions and simple fits.

use crate::error::{Error, Result};
use crate::evolve::{evolve_static_many, FloquetSpectrum, Stroboscopic, Trajectory};
use crate::linalg;
use crate::models::PHASE_PER_MHZ_NS;
use crate::spinops::{partial_trace, von_neumann_entropy, DenseOperator, SpinBasis, StateVector};

/// Samples with `|<sigma^z>|` below this never count as a sign change.
pub const REVERSAL_THRESHOLD: f64 = 1e-6;
/// Mutual information may dip below zero by at most this much.
const MI_FLOOR: f64 = 1e-8;

/// Mean and spread of a quantity over disorder realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStat {
    pub mean: f64,
    /// Sample standard deviation (zero for a single realization).
    pub std: f64,
    pub count: usize,
    /// Grid coordinates `(name, value)` this statistic belongs to.
    pub coords: Vec<(String, f64)>,
}

impl EnsembleStat {
    /// Statistic of `samples`, summed in the given order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let count = samples.len();
        if count == 0 {
            return Err(Error::InsufficientSamples { needed: 1, available: 0 });
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, std, count, coords: Vec::new() })
    }

    pub fn with_coord(mut self, name: impl Into<String>, value: f64) -> Self {
        self.coords.push((name.into(), value));
        self
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}

/// `(1/s_max) sum_{s < s_max} <sigma^z_site>(s)` over the first `s_max`
/// samples of one trajectory.
pub fn time_average_sz(traj: &Trajectory, site: usize, s_max: usize) -> Result<f64> {
    if s_max == 0 || traj.len() < s_max {
        return Err(Error::InsufficientSamples { needed: s_max.max(1), available: traj.len() });
    }
    let series = traj.site_series(site)?;
    Ok(series[..s_max].iter().sum::<f64>() / s_max as f64)
}

/// Per-realization time average of `<sigma^z_site>`, then mean and spread over
/// realizations (in slice order).
pub fn time_disorder_avg_sz(trajectories: &[Trajectory], site: usize, s_max: usize) -> Result<EnsembleStat> {
    let averages = trajectories
        .iter()
        .map(|t| time_average_sz(t, site, s_max))
        .collect::<Result<Vec<_>>>()?;
    EnsembleStat::from_samples(&averages)
}

/// Index of the first value whose sign differs from the first value's sign.
/// Values with magnitude below [`REVERSAL_THRESHOLD`] are ignored.
fn first_sign_change(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut it = values.into_iter().enumerate();
    let (_, first) = it.next()?;
    if first.abs() < REVERSAL_THRESHOLD {
        return None;
    }
    it.find(|&(_, v)| v.abs() >= REVERSAL_THRESHOLD && v.signum() != first.signum())
        .map(|(k, _)| k)
}

/// Time of the first sample at which `<sigma^z_site>` has the opposite sign
/// to its initial value, or `None` if it never does within the record.
pub fn spin_reversal_time(traj: &Trajectory, site: usize) -> Result<Option<f64>> {
    let series = traj.site_series(site)?;
    Ok(first_sign_change(series).map(|k| traj.times_ns[k]))
}

/// Like [`spin_reversal_time`] but evolves on the fly, sampling every
/// `sample_every` periods and stopping at the first reversal or after
/// `max_periods` periods.
pub fn spin_reversal_time_streaming(
    u_period: &DenseOperator,
    period_ns: f64,
    psi0: &StateVector,
    site: usize,
    max_periods: usize,
    sample_every: usize,
) -> Result<Option<f64>> {
    psi0.basis().check_site(site)?;
    let mut it = Stroboscopic::new(u_period, psi0, sample_every)?;
    let mut first = None;
    loop {
        let (periods, state) = it.advance()?;
        if periods > max_periods {
            return Ok(None);
        }
        let z = state.sz(site)?;
        match first {
            None => {
                if z.abs() < REVERSAL_THRESHOLD {
                    return Ok(None);
                }
                first = Some(z.signum());
            }
            Some(sign) => {
                if z.abs() >= REVERSAL_THRESHOLD && z.signum() != sign {
                    return Ok(Some(periods as f64 * period_ns));
                }
            }
        }
    }
}

fn region_entropy(state: &StateVector, sites: &[usize]) -> Result<f64> {
    von_neumann_entropy(&partial_trace(state, sites)?)
}

/// `I(A, B) = S(A) + S(B) - S(A u B)` in nats.
pub fn mutual_information(state: &StateVector, a: &[usize], b: &[usize]) -> Result<f64> {
    let basis = state.basis();
    basis.check_sites(a)?;
    basis.check_sites(b)?;
    if let Some(&s) = a.iter().find(|s| b.contains(s)) {
        return Err(Error::OverlappingRegions(s));
    }
    let joint: Vec<usize> = a.iter().chain(b).copied().collect();
    let i = region_entropy(state, a)? + region_entropy(state, b)? - region_entropy(state, &joint)?;
    if i < -MI_FLOOR {
        return Err(Error::InvariantBreach { name: "mutual information nonnegativity", value: i, tolerance: MI_FLOOR });
    }
    Ok(i.max(0.0))
}

/// Unweighted mean of `I(A, B)` over every Floquet eigenstate.
pub fn eigenstate_mutual_information(spectrum: &FloquetSpectrum, a: &[usize], b: &[usize]) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, available: 0 });
    }
    let total = spectrum
        .states
        .iter()
        .map(|s| mutual_information(s, a, b))
        .sum::<Result<f64>>()?;
    Ok(total / spectrum.len() as f64)
}

/// Eigenvalue of `O = sum_j (-1)^j sigma^z_j` on basis state `index`.
fn staggered_value(basis: SpinBasis, index: usize) -> f64 {
    (1..=basis.sites())
        .map(|j| if j % 2 == 0 { basis.sz(index, j) } else { -basis.sz(index, j) })
        .sum()
}

/// Staggered magnetization `O = sum_j (-1)^j sigma^z_j` (diagonal).
pub fn staggered_magnetization(basis: SpinBasis) -> DenseOperator {
    let diag: Vec<f64> = (0..basis.dim()).map(|b| staggered_value(basis, b)).collect();
    DenseOperator::diagonal(basis, &diag).expect("diagonal has basis dimension")
}

/// Normalized quantum Fisher information `(<O^2> - <O>^2) / L` of the
/// staggered magnetization.
pub fn qfi_staggered(state: &StateVector) -> f64 {
    let basis = state.basis();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (b, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        let o = staggered_value(basis, b);
        m1 += p * o;
        m2 += p * o * o;
    }
    ((m2 - m1 * m1) / basis.sites() as f64).max(0.0)
}

/// Heating ratio `Q = (E_t - E_0) / (E_inf - E_0)` with the infinite-
/// temperature energy `E_inf = Tr H / 2^L`.
pub fn dimensionless_energy(e_t: f64, e_0: f64, h: &DenseOperator) -> Result<f64> {
    let e_inf = h.trace().re / h.dim() as f64;
    let scale = h.frobenius_norm() / (h.dim() as f64).sqrt();
    let denom = e_inf - e_0;
    if denom.abs() < 1e-9 * scale.max(f64::MIN_POSITIVE) || denom == 0.0 {
        return Err(Error::DegenerateEnergy(denom.abs()));
    }
    Ok((e_t - e_0) / denom)
}

/// Mean of `series[end - window .. end]`.
pub fn trailing_mean(series: &[f64], end: usize, window: usize) -> Result<f64> {
    if window == 0 || end > series.len() || window > end {
        return Err(Error::InsufficientSamples { needed: end.max(window), available: series.len() });
    }
    Ok(series[end - window..end].iter().sum::<f64>() / window as f64)
}

/// Half-chain entanglement entropy per site: `S(left floor(L/2) sites) / L`.
pub fn bipartite_entropy_density(state: &StateVector) -> Result<f64> {
    let l = state.basis().sites();
    let left: Vec<usize> = (1..=(l / 2).max(1)).collect();
    Ok(region_entropy(state, &left)? / l as f64)
}

/// `1 / sum_k |<E_k|psi0>|^4` over the eigenbasis of `H`.
pub fn participation_ratio(psi0: &StateVector, h: &DenseOperator) -> Result<f64> {
    if psi0.basis() != h.basis() {
        return Err(Error::Dimension { expected: h.dim(), found: psi0.basis().dim() });
    }
    let sp = h.spectrum()?;
    let c = linalg::adjoint(sp.vectors.view()).dot(&psi0.amplitudes());
    let norm2: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    let ipr: f64 = c.iter().map(|x| x.norm_sqr().powi(2)).sum::<f64>() / (norm2 * norm2);
    Ok(1.0 / ipr)
}

/// Mean of `S(left half) / L` over all eigenstates of `H`.
pub fn eigenstate_entropy_density(h: &DenseOperator) -> Result<f64> {
    let sp = h.spectrum()?;
    let mut total = 0.0;
    for k in 0..h.dim() {
        let v = StateVector::new(h.basis(), sp.vectors.column(k).to_owned())?;
        total += bipartite_entropy_density(&v)?;
    }
    Ok(total / h.dim() as f64)
}

/// Position of a spin in the chain, which sets its resonance condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    End,
    Bulk,
}

/// Coupling at which the `n`-th resonance dip appears for drive period
/// `period_ns`: `n 1e3 / T` for end spins, `n 1e3 / (2T)` for bulk spins.
pub fn predicted_resonance_coupling(period_ns: f64, kind: SiteKind, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("resonance order must be at least 1"));
    }
    if !(period_ns > 0.0) {
        return Err(Error::invalid("period must be positive"));
    }
    let base = 1e3 / period_ns;
    Ok(match kind {
        SiteKind::End => n as f64 * base,
        SiteKind::Bulk => n as f64 * base / 2.0,
    })
}

/// Sampling window in the dimensionless time `Jt` (phase units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LateTimeWindow {
    pub start_jt: f64,
    pub end_jt: f64,
    pub samples: usize,
}

impl Default for LateTimeWindow {
    fn default() -> Self {
        Self { start_jt: 1e3, end_jt: 1e4, samples: 24 }
    }
}

impl LateTimeWindow {
    /// Midpoints of `samples` equal sub-intervals, converted to ns for
    /// coupling `J`: `t = Jt / (2 pi 1e-3 J)`.
    pub fn times_ns(&self, coupling_mhz: f64) -> Result<Vec<f64>> {
        if !(coupling_mhz > 0.0) {
            return Err(Error::invalid("late-time window needs a positive coupling"));
        }
        if self.samples == 0 || !(self.end_jt > self.start_jt) || self.start_jt < 0.0 {
            return Err(Error::invalid("late-time window must be a nonempty increasing range"));
        }
        let width = (self.end_jt - self.start_jt) / self.samples as f64;
        Ok((0..self.samples)
            .map(|k| (self.start_jt + (k as f64 + 0.5) * width) / (PHASE_PER_MHZ_NS * coupling_mhz))
            .collect())
    }
}

/// Average of `f` over states evolved under static `H` to each window time.
pub fn late_time_average(
    h: &DenseOperator,
    psi0: &StateVector,
    coupling_mhz: f64,
    window: &LateTimeWindow,
    f: impl Fn(&StateVector) -> Result<f64>,
) -> Result<f64> {
    let times = window.times_ns(coupling_mhz)?;
    let states = evolve_static_many(h, psi0, &times)?;
    let total = states.iter().map(&f).sum::<Result<f64>>()?;
    Ok(total / states.len() as f64)
}

/// Least-squares line through `(ln x, ln y)`: `y = prefactor x^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, available: xs.len() });
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("power-law fit needs positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("power-law fit needs distinct abscissae"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    Ok(PowerLawFit { prefactor: (my - exponent * mx).exp(), exponent })
}

/// Least-squares slope of `ys` against `xs`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, available: xs.len().min(ys.len()) });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Period of the slow oscillation of `<sigma^z_site>(t)` under static `H`:
/// twice the interval between the first downward zero crossing and the
/// following upward one (after the signal has passed half of its initial
/// magnitude on the far side). Scans `samples` equally spaced times up to
/// `t_max_ns`; `None` if no full half-cycle is found.
pub fn oscillation_period(
    h: &DenseOperator,
    psi0: &StateVector,
    site: usize,
    t_max_ns: f64,
    samples: usize,
) -> Result<Option<f64>> {
    psi0.basis().check_site(site)?;
    if samples < 2 || !(t_max_ns > 0.0) {
        return Err(Error::invalid("oscillation scan needs a positive range and at least two samples"));
    }
    let times: Vec<f64> = (0..samples).map(|k| t_max_ns * k as f64 / (samples - 1) as f64).collect();
    let states = evolve_static_many(h, psi0, &times)?;
    let z = states.iter().map(|s| s.sz(site)).collect::<Result<Vec<_>>>()?;
    let z0 = z[0];
    if z0.abs() < REVERSAL_THRESHOLD {
        return Ok(None);
    }
    let sign = z0.signum();
    let crossing = |k: usize| {
        let (a, b) = (z[k - 1], z[k]);
        times[k - 1] + (times[k] - times[k - 1]) * a / (a - b)
    };
    let mut down = None;
    let mut armed = false;
    for k in 1..samples {
        let s = sign * z[k];
        match down {
            None if s <= 0.0 => down = Some(crossing(k)),
            Some(_) if !armed && s < -0.5 * z0.abs() => armed = true,
            Some(t1) if armed && s >= 0.0 => return Ok(Some(2.0 * (crossing(k) - t1))),
            _ => {}
        }
    }
    Ok(None)
}
