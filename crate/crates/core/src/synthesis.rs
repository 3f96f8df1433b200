//! Spacetime fields `Psi(s, z, t)` built from a paraxial spectrum under a
//! dispersion map, plus wave-operator residuals.
//!
//! Each `(z, t)` station is an inverse transform of
//! `F(q) exp(i kappa(q, k) z - i omega(q, k) t)`; nothing is time-stepped.

use ndarray::Array2;
use rayon::prelude::*;

use crate::dispersion::{positive_frequency_residual, DispersionMap};
use crate::error::{Error, Result};
use crate::grid::{
    cis, forward_transform, inverse_transform, same_grid, SampledEnvelope, SpectralAmplitude,
    TransverseGrid,
};
use crate::scalar::{Cplx, Scalar};

/// Spectral samples below this fraction of the peak are treated as absent.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

pub(crate) fn check_stations<T: Scalar>(what: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} stations are empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} stations must be finite")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "{what} stations must be strictly increasing"
        )));
    }
    Ok(())
}

/// Uniform step of `values`, or an error naming the axis.
pub(crate) fn uniform_step<T: Scalar>(what: &str, values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::UnequalSpacing(format!("{what}: need at least two stations")));
    }
    let h = values[1] - values[0];
    for w in values.windows(2) {
        if ((w[1] - w[0]) - h).abs() > T::lit(1e-9) * h.abs() {
            return Err(Error::UnequalSpacing(format!(
                "{what}: step {} differs from {}",
                w[1] - w[0],
                h
            )));
        }
    }
    Ok(h)
}

/// Transverse grid plus the longitudinal and temporal stations to sample.
#[derive(Clone, Debug)]
pub struct SpacetimeSampling<T: Scalar> {
    grid: TransverseGrid<T>,
    z_stations: Vec<T>,
    t_stations: Vec<T>,
}

impl<T: Scalar> SpacetimeSampling<T> {
    pub fn new(grid: TransverseGrid<T>, z_stations: Vec<T>, t_stations: Vec<T>) -> Result<Self> {
        check_stations("z", &z_stations)?;
        check_stations("t", &t_stations)?;
        Ok(Self {
            grid,
            z_stations,
            t_stations,
        })
    }

    /// `count` stations `centre + (i - (count-1)/2) h`.
    pub fn centred(centre: T, h: T, count: usize) -> Vec<T> {
        let mid = T::from_count(count.saturating_sub(1)) / T::lit(2.0);
        (0..count)
            .map(|i| centre + (T::from_count(i) - mid) * h)
            .collect()
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }

    pub fn z_stations(&self) -> &[T] {
        &self.z_stations
    }

    pub fn t_stations(&self) -> &[T] {
        &self.t_stations
    }
}

/// Sampled spacetime field; station `(iz, it)` holds an `n x n` transverse slice.
#[derive(Clone, Debug)]
pub struct SpacetimeField<T: Scalar> {
    sampling: SpacetimeSampling<T>,
    slices: Vec<Array2<Cplx<T>>>,
    carrier: T,
    map_name: String,
    c: T,
}

impl<T: Scalar> SpacetimeField<T> {
    pub fn sampling(&self) -> &SpacetimeSampling<T> {
        &self.sampling
    }

    pub fn carrier(&self) -> T {
        self.carrier
    }

    pub fn map_name(&self) -> &str {
        &self.map_name
    }

    pub fn speed_of_light(&self) -> T {
        self.c
    }

    pub fn slice(&self, iz: usize, it: usize) -> &Array2<Cplx<T>> {
        &self.slices[iz * self.sampling.t_stations.len() + it]
    }

    /// Transverse slice at `(iz, it)` as an envelope tagged with its `z`.
    pub fn envelope(&self, iz: usize, it: usize) -> Result<SampledEnvelope<T>> {
        SampledEnvelope::new(
            self.sampling.grid.clone(),
            self.slice(iz, it).clone(),
            self.sampling.z_stations[iz],
        )
    }
}

/// Per-lattice-point `(kappa, omega)` for every point in the support of `amp`.
pub(crate) struct PhaseTable<T: Scalar> {
    pub entries: Array2<Option<(T, T)>>,
}

impl<T: Scalar> PhaseTable<T> {
    pub fn build(amp: &SpectralAmplitude<T>, carrier: T, map: &DispersionMap<T>) -> Result<Self> {
        let grid = amp.grid();
        let floor = amp.max_abs() * T::lit(SUPPORT_THRESHOLD);
        let qs = grid.q_lattice();
        let mut entries = Array2::from_elem((grid.n(), grid.n()), None);
        for ((i, j), v) in amp.values().indexed_iter() {
            if v.norm() <= floor {
                continue;
            }
            let q = qs[i].hypot(qs[j]);
            let kappa = map.kappa(q, carrier);
            let omega = map.omega(q, carrier);
            match (kappa, omega) {
                (Ok(kp), Ok(om)) => entries[[i, j]] = Some((kp, om)),
                (Err(e), _) | (_, Err(e)) => {
                    return Err(match e {
                        Error::Domain { map, k, .. } => Error::Domain {
                            map,
                            q: q.as_f64(),
                            k,
                        },
                        other => other,
                    })
                }
            }
        }
        Ok(Self { entries })
    }

    /// `F(q) * m(omega) * exp(i kappa z - i omega t)` accumulated into `out`.
    pub fn accumulate(
        &self,
        amp: &SpectralAmplitude<T>,
        z: T,
        t: T,
        weight: Cplx<T>,
        time_derivative: bool,
        out: &mut Array2<Cplx<T>>,
    ) {
        for (entry, (v, o)) in self.entries.iter().zip(amp.values().iter().zip(out.iter_mut())) {
            if let Some((kappa, omega)) = entry {
                let mut term = *v * cis(*kappa * z - *omega * t) * weight;
                if time_derivative {
                    term *= Cplx::new(T::zero(), -*omega);
                }
                *o += term;
            }
        }
    }
}

fn synthesize_impl<T: Scalar>(
    amp: &SpectralAmplitude<T>,
    carrier: T,
    map: &DispersionMap<T>,
    sampling: &SpacetimeSampling<T>,
    time_derivative: bool,
) -> Result<SpacetimeField<T>> {
    same_grid(amp.grid(), &sampling.grid)?;
    if !(carrier.is_finite() && carrier > T::zero()) {
        return Err(Error::InvalidParameter(format!("carrier {carrier} must be positive")));
    }
    let table = PhaseTable::build(amp, carrier, map)?;
    let n = sampling.grid.n();
    let stations: Vec<(T, T)> = sampling
        .z_stations
        .iter()
        .flat_map(|&z| sampling.t_stations.iter().map(move |&t| (z, t)))
        .collect();
    let slices = stations
        .par_iter()
        .map(|&(z, t)| {
            let mut spec = Array2::zeros((n, n));
            table.accumulate(amp, z, t, Cplx::new(T::one(), T::zero()), time_derivative, &mut spec);
            let spec = SpectralAmplitude::new(sampling.grid.clone(), spec)?;
            Ok(inverse_transform(&spec, z)?.into_values())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpacetimeField {
        sampling: sampling.clone(),
        slices,
        carrier,
        map_name: map.name().to_string(),
        c: map.speed_of_light(),
    })
}

/// `Psi(s, z, t) = int d^2q/(2 pi) F(q) exp(i q.s + i kappa z - i omega t)`.
pub fn synthesize<T: Scalar>(
    amp: &SpectralAmplitude<T>,
    carrier: T,
    map: &DispersionMap<T>,
    sampling: &SpacetimeSampling<T>,
) -> Result<SpacetimeField<T>> {
    synthesize_impl(amp, carrier, map, sampling, false)
}

/// `d Psi / dt`, taken spectrally as multiplication by `-i omega`.
pub fn synthesize_time_derivative<T: Scalar>(
    amp: &SpectralAmplitude<T>,
    carrier: T,
    map: &DispersionMap<T>,
    sampling: &SpacetimeSampling<T>,
) -> Result<SpacetimeField<T>> {
    synthesize_impl(amp, carrier, map, sampling, true)
}

/// Eigenvalue of the d'Alembertian on one synthesized component,
/// `omega^2/c^2 - |q|^2 - kappa^2`.
pub fn wave_residual_spectral<T: Scalar>(map: &DispersionMap<T>, q: T, k: T) -> Result<T> {
    positive_frequency_residual(map, q, k)
}

/// `sqrt(sum_q dq^2 |res(q)|^2 |F(q)|^2)`: the transverse L2 norm of the
/// d'Alembertian of the synthesized field at any station.
pub fn wave_residual_spectral_norm<T: Scalar>(
    amp: &SpectralAmplitude<T>,
    carrier: T,
    map: &DispersionMap<T>,
) -> Result<T> {
    let table = PhaseTable::build(amp, carrier, map)?;
    let qs = amp.grid().q_lattice();
    let mut acc = T::zero();
    for (((i, j), v), entry) in amp.values().indexed_iter().zip(table.entries.iter()) {
        if entry.is_some() {
            let r = wave_residual_spectral(map, qs[i].hypot(qs[j]), carrier)?;
            acc += r * r * v.norm_sqr();
        }
    }
    Ok((acc * amp.grid().spectral_cell_area()).sqrt())
}

/// Finite-difference d'Alembertian of a sampled field: spectral in `s`,
/// centered second differences in `z` and `t`.
///
/// Returns the root mean square, over interior `(z, t)` stations, of the
/// transverse L2 norm of the residual.
pub fn wave_residual_grid<T: Scalar>(field: &SpacetimeField<T>) -> Result<T> {
    let zs = &field.sampling.z_stations;
    let ts = &field.sampling.t_stations;
    if zs.len() < 3 || ts.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least three z and three t stations".into(),
        ));
    }
    let hz = uniform_step("z", zs)?;
    let ht = uniform_step("t", ts)?;
    let c = field.c;
    let grid = &field.sampling.grid;
    let two = T::lit(2.0);
    let inv_hz2 = T::one() / (hz * hz);
    let inv_ht2 = T::one() / (c * c * ht * ht);
    let interior: Vec<(usize, usize)> = (1..zs.len() - 1)
        .flat_map(|iz| (1..ts.len() - 1).map(move |it| (iz, it)))
        .collect();
    let norms = interior
        .par_iter()
        .map(|&(iz, it)| {
            let centre = field.envelope(iz, it)?;
            let amp = forward_transform(&centre)?;
            let lap = amp.map_lattice(|qx, qy, v| v * -(qx * qx + qy * qy));
            let lap = inverse_transform(&lap, zs[iz])?;
            let mid = field.slice(iz, it);
            let (zlo, zhi) = (field.slice(iz - 1, it), field.slice(iz + 1, it));
            let (tlo, thi) = (field.slice(iz, it - 1), field.slice(iz, it + 1));
            let mut acc = T::zero();
            for idx in 0..mid.len() {
                let (i, j) = (idx / grid.n(), idx % grid.n());
                let m = mid[[i, j]];
                let dzz = (zhi[[i, j]] - m * two + zlo[[i, j]]) * inv_hz2;
                let dtt = (thi[[i, j]] - m * two + tlo[[i, j]]) * inv_ht2;
                acc += (lap.values()[[i, j]] + dzz - dtt).norm_sqr();
            }
            Ok(acc * grid.cell_area())
        })
        .collect::<Result<Vec<T>>>()?;
    let mean = norms.iter().copied().sum::<T>() / T::from_count(norms.len());
    Ok(mean.sqrt())
}

/// Spectrum shifted so the synthesized field moves by `(dx, dy)`.
pub fn translate_spectrum<T: Scalar>(amp: &SpectralAmplitude<T>, dx: T, dy: T) -> SpectralAmplitude<T> {
    amp.map_lattice(|qx, qy, v| v * cis(-(qx * dx + qy * dy)))
}
