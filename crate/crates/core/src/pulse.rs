//! Null-coordinate synthesis and decomposition of henochromatic comb
//! superpositions, and the henochromatic/paraxial pulse comparison.
//!
//! Null coordinates are `u = z - c t` and `v = (z + c t) / 2`. On a comb,
//! `Psi(s, u, v) = dk sum_j exp(i k_j u) Xi_j(s, v)` with each `Xi_j` a
//! paraxial envelope at carrier `k_j`.

use ndarray::Array2;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::DispersionMap;
use crate::error::{Error, Result};
use crate::grid::{cis, forward_transform, inverse_transform, SampledEnvelope, SpectralAmplitude, TransverseGrid};
use crate::modes::{propagate_paraxial, ModeSpec, ParaxialBeam};
use crate::quantum::{CarrierComb, CarrierSpectra};
use crate::scalar::{Cplx, Scalar};
use crate::synthesis::{check_stations, synthesize, uniform_step, SpacetimeSampling};

/// Transverse grid plus `u` and `v` stations.
#[derive(Clone, Debug)]
pub struct NullSampling<T: Scalar> {
    grid: TransverseGrid<T>,
    u_values: Vec<T>,
    v_values: Vec<T>,
}

impl<T: Scalar> NullSampling<T> {
    pub fn new(grid: TransverseGrid<T>, u_values: Vec<T>, v_values: Vec<T>) -> Result<Self> {
        check_stations("u", &u_values)?;
        check_stations("v", &v_values)?;
        Ok(Self { grid, u_values, v_values })
    }

    /// `count` equally spaced `u` stations covering one comb period `2 pi / dk`.
    pub fn period_stations(comb: &CarrierComb<T>, count: usize) -> Vec<T> {
        let du = T::TAU() / (comb.spacing() * T::from_count(count));
        let half = T::from_count(count / 2);
        (0..count).map(|i| (T::from_count(i) - half) * du).collect()
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }

    pub fn u_values(&self) -> &[T] {
        &self.u_values
    }

    pub fn v_values(&self) -> &[T] {
        &self.v_values
    }
}

/// Field sampled at `(v, u)` stations; slice `(iv, iu)` is transverse.
#[derive(Clone, Debug)]
pub struct NullField<T: Scalar> {
    sampling: NullSampling<T>,
    slices: Vec<Array2<Cplx<T>>>,
}

impl<T: Scalar> NullField<T> {
    pub fn sampling(&self) -> &NullSampling<T> {
        &self.sampling
    }

    pub fn slice(&self, iv: usize, iu: usize) -> &Array2<Cplx<T>> {
        &self.slices[iv * self.sampling.u_values.len() + iu]
    }

    /// All `u` slices at `v = v_values[iv]`.
    pub fn at_v(&self, iv: usize) -> &[Array2<Cplx<T>>] {
        let nu = self.sampling.u_values.len();
        &self.slices[iv * nu..(iv + 1) * nu]
    }
}

/// `Psi(s, u, v) = dk sum_j exp(i k_j u) Xi_j(s, v)`, with `Xi_j` the paraxial
/// propagation of `F_j` to `v`. Only the henochromatic map has this form.
pub fn synthesize_multicarrier<T: Scalar>(
    spectra: &CarrierSpectra<T>,
    map: &DispersionMap<T>,
    sampling: &NullSampling<T>,
) -> Result<NullField<T>> {
    if !map.is_henochromatic() {
        return Err(Error::InvalidParameter(format!(
            "null-coordinate synthesis needs the henochromatic map, got `{}`",
            map.name()
        )));
    }
    crate::grid::same_grid(spectra.grid(), &sampling.grid)?;
    let comb = spectra.comb();
    let dk = comb.spacing();
    let n = sampling.grid.n();
    let per_v = sampling
        .v_values
        .par_iter()
        .map(|&v| {
            let envelopes = spectra
                .spectra()
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let moved = propagate_paraxial(f, v, comb.carrier(j))?;
                    Ok(inverse_transform(&moved, v)?.into_values())
                })
                .collect::<Result<Vec<_>>>()?;
            let slices: Vec<Array2<Cplx<T>>> = sampling
                .u_values
                .iter()
                .map(|&u| {
                    let mut acc = Array2::zeros((n, n));
                    for (j, xi) in envelopes.iter().enumerate() {
                        let phase = cis(comb.carrier(j) * u) * dk;
                        acc.zip_mut_with(xi, |a, &x| *a += x * phase);
                    }
                    acc
                })
                .collect();
            Ok(slices)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NullField {
        sampling: sampling.clone(),
        slices: per_v.into_iter().flatten().collect(),
    })
}

/// Recovers `F_j(q)` from samples of `Psi` over one comb period in `u` at
/// fixed `v`:
/// `Xi_j = 1/(dk N_u) sum_m Psi(u_m) exp(-i k_j u_m)`, then paraxial
/// back-propagation by `-v`.
pub fn decompose_henochromatic<T: Scalar>(
    grid: &TransverseGrid<T>,
    u_values: &[T],
    samples: &[Array2<Cplx<T>>],
    v: T,
    comb: &CarrierComb<T>,
) -> Result<CarrierSpectra<T>> {
    if samples.len() != u_values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples for {} u stations",
            samples.len(),
            u_values.len()
        )));
    }
    let nu = u_values.len();
    if nu < comb.count() {
        return Err(Error::CombMismatch(format!(
            "{nu} u samples cannot resolve {} carriers",
            comb.count()
        )));
    }
    // A lone carrier is recovered from any single sample.
    if nu > 1 {
        let du = uniform_step("u", u_values)?;
        let period = T::TAU() / comb.spacing();
        let covered = du * T::from_count(nu);
        if (covered - period).abs() > T::lit(1e-9) * period {
            return Err(Error::CombMismatch(format!(
                "u samples cover {covered}, one comb period is {period}"
            )));
        }
    }
    let n = grid.n();
    let norm = T::one() / (comb.spacing() * T::from_count(nu));
    let spectra = (0..comb.count())
        .into_par_iter()
        .map(|j| {
            let k = comb.carrier(j);
            let mut xi = Array2::zeros((n, n));
            for (&u, psi) in u_values.iter().zip(samples) {
                let phase = cis(-k * u) * norm;
                xi.zip_mut_with(psi, |a, &p| *a += p * phase);
            }
            let env = SampledEnvelope::new(grid.clone(), xi, v)?;
            propagate_paraxial(&forward_transform(&env)?, -v, k)
        })
        .collect::<Result<Vec<_>>>()?;
    CarrierSpectra::new(*comb, spectra)
}

impl<T: Scalar> NullField<T> {
    /// [`decompose_henochromatic`] applied to the slices at `v_values[iv]`.
    pub fn decompose_at(&self, iv: usize, comb: &CarrierComb<T>) -> Result<CarrierSpectra<T>> {
        decompose_henochromatic(
            &self.sampling.grid,
            &self.sampling.u_values,
            self.at_v(iv),
            self.sampling.v_values[iv],
            comb,
        )
    }
}

/// Number of comb carriers spanning `k0 +- 4 sigma`.
pub const PULSE_CARRIERS: usize = 33;
/// Half-width of the carrier comb in units of the spectral width.
pub const PULSE_HALF_WIDTH_SIGMAS: f64 = 4.0;
/// Pulse points with `|Psi_pa| < MASK_FRACTION * max |Psi_pa|` are ignored.
pub const MASK_FRACTION: f64 = 1e-3;

/// A Gaussian-spectrum pulse `g(k) F0(q)` around the carrier of `base_mode`.
#[derive(Clone, Debug)]
pub struct PulseSpec<T: Scalar> {
    base_mode: ModeSpec<T>,
    dk_sigma: T,
}

impl<T: Scalar> PulseSpec<T> {
    /// `dk_sigma` is the spectral standard deviation; it must stay below a
    /// tenth of the carrier.
    pub fn new(base_mode: ModeSpec<T>, dk_sigma: T) -> Result<Self> {
        let k0 = base_mode.carrier;
        if !(dk_sigma.is_finite() && dk_sigma > T::zero() && dk_sigma < k0 / T::lit(10.0)) {
            return Err(Error::InvalidParameter(format!(
                "spectral width {dk_sigma} must lie in (0, k0/10) with k0 = {k0}"
            )));
        }
        Ok(Self { base_mode, dk_sigma })
    }

    pub fn carrier(&self) -> T {
        self.base_mode.carrier
    }

    pub fn spectral_width(&self) -> T {
        self.dk_sigma
    }

    pub fn base_mode(&self) -> &ModeSpec<T> {
        &self.base_mode
    }

    pub fn comb(&self) -> CarrierComb<T> {
        let span = T::lit(2.0 * PULSE_HALF_WIDTH_SIGMAS) * self.dk_sigma;
        let dk = span / T::from_count(PULSE_CARRIERS - 1);
        CarrierComb::centred(self.carrier(), dk, PULSE_CARRIERS).expect("k0 > 4 sigma")
    }

    /// `g(k) = exp(-(k - k0)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)`.
    pub fn spectral_profile(&self, k: T) -> T {
        let x = (k - self.carrier()) / self.dk_sigma;
        (-(x * x) / T::lit(2.0)).exp() / (T::TAU().sqrt() * self.dk_sigma)
    }

    /// Longitudinal envelope `|dk sum_j g(k_j) exp(i (k_j - k0) u)|`.
    pub fn envelope(&self, u: T) -> T {
        let comb = self.comb();
        let k0 = self.carrier();
        let sum: Cplx<T> = comb
            .carriers()
            .into_iter()
            .map(|k| cis((k - k0) * u) * self.spectral_profile(k))
            .fold(Cplx::zero(), |a, b| a + b);
        (sum * comb.spacing()).norm()
    }

    pub fn spectra(&self, grid: &TransverseGrid<T>) -> Result<CarrierSpectra<T>> {
        let base = ParaxialBeam::from_mode(&self.base_mode, grid)?;
        Ok(CarrierSpectra::separable(self.comb(), base.spectrum(), |k| self.spectral_profile(k)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub u: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimePoint {
    pub t: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PulseReport {
    pub k0: f64,
    pub dk_sigma: f64,
    pub mode: String,
    pub discrepancy_time: f64,
    /// `max |Psi_hc - Psi_pa|` over the sampled points of the plane `z = c t`.
    pub null_plane_residual: f64,
    /// Masked relative discrepancy `||Psi_hc - Psi_pa|| / ||Psi_pa||` per `u`.
    pub discrepancy_curve: Vec<CurvePoint>,
    /// Masked relative discrepancy over all sampled `u`, per `t`.
    pub discrepancy_vs_t: Vec<TimePoint>,
}

impl PulseReport {
    pub fn write_curve_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "u,discrepancy")?;
        for p in &self.discrepancy_curve {
            writeln!(w, "{:.16e},{:.16e}", p.u, p.value)?;
        }
        Ok(())
    }
}

/// Henochromatic and paraxial single-carrier fields at `(z, t)`.
fn field_pair<T: Scalar>(
    base: &SpectralAmplitude<T>,
    k0: T,
    z: T,
    t: T,
) -> Result<(Array2<Cplx<T>>, Array2<Cplx<T>>)> {
    let sampling = SpacetimeSampling::new(base.grid().clone(), vec![z], vec![t])?;
    let hc = synthesize(base, k0, &DispersionMap::henochromatic(), &sampling)?;
    let pa = synthesize(base, k0, &DispersionMap::paraxial(), &sampling)?;
    Ok((hc.slice(0, 0).clone(), pa.slice(0, 0).clone()))
}

/// Compares the henochromatic pulse with the paraxial one it starts from.
///
/// Both fields are single-carrier syntheses of the base mode at `k0`
/// weighted by the longitudinal envelope of the comb; the mask keeps points
/// where the weighted paraxial field exceeds [`MASK_FRACTION`] of its peak
/// at the same `t`.
pub fn pulse_compare<T: Scalar>(
    spec: &PulseSpec<T>,
    grid: &TransverseGrid<T>,
    u_values: &[T],
    t_values: &[T],
    discrepancy_time: T,
) -> Result<PulseReport> {
    check_stations("u", u_values)?;
    check_stations("t", t_values)?;
    let base = ParaxialBeam::from_mode(&spec.base_mode, grid)?;
    let base = base.spectrum();
    let k0 = spec.carrier();
    let c = T::one();

    let null_plane_residual = t_values
        .par_iter()
        .map(|&t| {
            let (hc, pa) = field_pair(base, k0, c * t, t)?;
            Ok(hc.iter().zip(pa.iter()).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max))
        })
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::zero(), T::max);

    let weights: Vec<T> = u_values.iter().map(|&u| spec.envelope(u)).collect();
    let per_time = |t: T| -> Result<Vec<(T, T, T)>> {
        let pairs = u_values
            .par_iter()
            .map(|&u| field_pair(base, k0, u + c * t, t))
            .collect::<Result<Vec<_>>>()?;
        let peak = pairs
            .iter()
            .zip(&weights)
            .flat_map(|((_, pa), &g)| pa.iter().map(move |v| v.norm() * g))
            .fold(T::zero(), T::max);
        let floor = peak * T::lit(MASK_FRACTION);
        Ok(pairs
            .iter()
            .zip(&weights)
            .map(|((hc, pa), &g)| {
                let (mut diff, mut refn) = (T::zero(), T::zero());
                for (a, b) in hc.iter().zip(pa.iter()) {
                    if b.norm() * g >= floor {
                        diff += (a - b).norm_sqr() * g * g;
                        refn += b.norm_sqr() * g * g;
                    }
                }
                (diff, refn, g)
            })
            .collect())
    };

    let discrepancy_curve = per_time(discrepancy_time)?
        .into_iter()
        .zip(u_values)
        .map(|((d, r, _), &u)| CurvePoint {
            u: u.as_f64(),
            value: if r > T::zero() { (d / r).sqrt().as_f64() } else { 0.0 },
        })
        .collect();
    let discrepancy_vs_t = t_values
        .iter()
        .map(|&t| {
            let rows = per_time(t)?;
            let (d, r) = rows.iter().fold((T::zero(), T::zero()), |(a, b), (d, r, _)| (a + *d, b + *r));
            Ok(TimePoint {
                t: t.as_f64(),
                value: if r > T::zero() { (d / r).sqrt().as_f64() } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PulseReport {
        k0: k0.as_f64(),
        dk_sigma: spec.dk_sigma.as_f64(),
        mode: spec.base_mode.to_string(),
        discrepancy_time: discrepancy_time.as_f64(),
        null_plane_residual: null_plane_residual.as_f64(),
        discrepancy_curve,
        discrepancy_vs_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Array2<Cplx<f64>>, b: &Array2<Cplx<f64>>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn two_mode_spectra(grid: &TransverseGrid<f64>, comb: CarrierComb<f64>) -> CarrierSpectra<f64> {
        let spectra = comb
            .carriers()
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let a = ParaxialBeam::from_mode(&ModeSpec::hermite_gauss(1, 0, 1.0, k).unwrap(), grid).unwrap();
                let b = ParaxialBeam::from_mode(&ModeSpec::laguerre_gauss(1, 0, 1.3, k).unwrap(), grid).unwrap();
                let w = Cplx::new(1.0 / (1.0 + j as f64), 0.3 * j as f64);
                a.spectrum().combine(w, b.spectrum(), Cplx::new(0.0, 0.5)).unwrap()
            })
            .collect();
        CarrierSpectra::new(comb, spectra).unwrap()
    }

    #[test]
    fn null_synthesis_matches_spacetime_synthesis() {
        let g = TransverseGrid::new(32, 16.0).unwrap();
        let comb = CarrierComb::new(1.0, 0.25, 3).unwrap();
        let spectra = two_mode_spectra(&g, comb);
        let (u, v) = (0.7, 1.9);
        let ns = NullSampling::new(g.clone(), vec![u], vec![v]).unwrap();
        let field = synthesize_multicarrier(&spectra, &DispersionMap::henochromatic(), &ns).unwrap();
        let (z, t) = (v + u / 2.0, v - u / 2.0);
        let ss = SpacetimeSampling::new(g.clone(), vec![z], vec![t]).unwrap();
        let mut direct = Array2::zeros((32, 32));
        for (j, f) in spectra.spectra().iter().enumerate() {
            let s = synthesize(f, comb.carrier(j), &DispersionMap::henochromatic(), &ss).unwrap();
            direct = direct + s.slice(0, 0).mapv(|x| x * comb.spacing());
        }
        assert!(max_diff(field.slice(0, 0), &direct) < 1e-12);
    }

    #[test]
    fn decomposition_round_trips() {
        let g = TransverseGrid::new(32, 16.0).unwrap();
        let comb = CarrierComb::new(1.0, 0.25, 5).unwrap();
        let spectra = two_mode_spectra(&g, comb);
        let us = NullSampling::period_stations(&comb, 8);
        let ns = NullSampling::new(g.clone(), us, vec![-1.0, 2.5]).unwrap();
        let field = synthesize_multicarrier(&spectra, &DispersionMap::henochromatic(), &ns).unwrap();
        for iv in 0..2 {
            let back = field.decompose_at(iv, &comb).unwrap();
            for (a, b) in back.spectra().iter().zip(spectra.spectra()) {
                assert!(max_diff(a.values(), b.values()) < 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_rejects_bad_sampling() {
        let g = TransverseGrid::new(16, 16.0).unwrap();
        let comb = CarrierComb::new(1.0, 0.25, 5).unwrap();
        let spectra = two_mode_spectra(&g, comb);
        let hc = DispersionMap::henochromatic();
        let short = NullSampling::new(g.clone(), NullSampling::period_stations(&comb, 4), vec![0.0]).unwrap();
        let f = synthesize_multicarrier(&spectra, &hc, &short).unwrap();
        assert!(matches!(f.decompose_at(0, &comb), Err(Error::CombMismatch(_))));
        let wrong = NullSampling::new(g.clone(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![0.0]).unwrap();
        let f = synthesize_multicarrier(&spectra, &hc, &wrong).unwrap();
        assert!(matches!(f.decompose_at(0, &comb), Err(Error::CombMismatch(_))));
        let uneven = NullSampling::new(g.clone(), vec![0.0, 1.0, 3.0, 4.0, 5.0, 6.0], vec![0.0]).unwrap();
        let f = synthesize_multicarrier(&spectra, &hc, &uneven).unwrap();
        assert!(matches!(f.decompose_at(0, &comb), Err(Error::UnequalSpacing(_))));
        assert!(synthesize_multicarrier(&spectra, &DispersionMap::paraxial(), &short).is_err());
    }

    #[test]
    fn pulse_spec_limits() {
        let mode = ModeSpec::<f64>::hermite_gauss(0, 0, 20.0, 1.0).unwrap();
        assert!(PulseSpec::new(mode.clone(), 0.1).is_err());
        assert!(PulseSpec::new(mode.clone(), 0.0).is_err());
        let p = PulseSpec::new(mode, 0.01).unwrap();
        let comb = p.comb();
        assert_eq!(comb.count(), PULSE_CARRIERS);
        assert!((comb.carrier(0) - 0.96).abs() < 1e-14);
        assert!((comb.carrier(32) - 1.04).abs() < 1e-14);
        assert!((p.envelope(0.0) - 1.0).abs() < 1e-4);
        let u = 1.0 / 0.01;
        assert!((p.envelope(u) - (-0.5f64).exp()).abs() < 1e-4);
    }
}
