//! Quantum (Klein-Gordon) inner product between synthesized beams, its
//! spectral weight, and the checks built on it.

use std::collections::HashMap;

use ndarray::Array2;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{unitarity_weight, DispersionMap};
use crate::error::{Error, Result};
use crate::grid::{inverse_transform, same_grid, SpectralAmplitude, TransverseGrid};
use crate::scalar::{Cplx, Scalar};
use crate::synthesis::{check_stations, uniform_step, PhaseTable, SUPPORT_THRESHOLD};

/// Evenly spaced carriers `k_j = k_min + j dk`, `j = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CarrierComb<T: Scalar> {
    k_min: T,
    dk: T,
    count: usize,
}

impl<T: Scalar> CarrierComb<T> {
    pub fn new(k_min: T, dk: T, count: usize) -> Result<Self> {
        if !(k_min.is_finite() && k_min > T::zero()) {
            return Err(Error::InvalidParameter(format!("k_min {k_min} must be positive")));
        }
        if !(dk.is_finite() && dk > T::zero()) {
            return Err(Error::InvalidParameter(format!("comb spacing {dk} must be positive")));
        }
        if count == 0 {
            return Err(Error::InvalidParameter("comb needs at least one carrier".into()));
        }
        Ok(Self { k_min, dk, count })
    }

    /// Comb spanning `[k_min, k_max]`. A single carrier takes the cell width
    /// `k_max - k_min` as its spacing.
    pub fn from_range(k_min: T, k_max: T, count: usize) -> Result<Self> {
        if !(k_max > k_min) {
            return Err(Error::InvalidParameter(format!(
                "k_max {k_max} must exceed k_min {k_min}"
            )));
        }
        let dk = if count > 1 {
            (k_max - k_min) / T::from_count(count - 1)
        } else {
            k_max - k_min
        };
        Self::new(k_min, dk, count)
    }

    /// `count` carriers centred on `k0` with spacing `dk`.
    pub fn centred(k0: T, dk: T, count: usize) -> Result<Self> {
        let half = T::from_count(count.saturating_sub(1)) / T::lit(2.0);
        Self::new(k0 - half * dk, dk, count)
    }

    pub fn k_min(&self) -> T {
        self.k_min
    }

    pub fn spacing(&self) -> T {
        self.dk
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn carrier(&self, j: usize) -> T {
        self.k_min + T::from_count(j) * self.dk
    }

    pub fn carriers(&self) -> Vec<T> {
        (0..self.count).map(|j| self.carrier(j)).collect()
    }

    /// Index of `k` on the comb, to within `1e-9 dk`.
    pub fn index_of(&self, k: T) -> Result<usize> {
        let x = (k - self.k_min) / self.dk;
        let j = x.round();
        if !x.is_finite() || j < T::zero() || j >= T::from_count(self.count) {
            return Err(Error::NotOnComb(k.as_f64()));
        }
        let j = j.to_usize().ok_or(Error::NotOnComb(k.as_f64()))?;
        if (self.carrier(j) - k).abs() > T::lit(1e-9) * self.dk {
            return Err(Error::NotOnComb(k.as_f64()));
        }
        Ok(j)
    }
}

/// Density-of-states convention used for plane-wave amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DensityOfStates {
    /// `rho(K) = 1`
    Unit,
    /// `rho(K) = 1 / (2 |K|)`
    InverseTwoK,
}

impl DensityOfStates {
    pub fn eval<T: Scalar>(self, k_norm: T) -> T {
        match self {
            DensityOfStates::Unit => T::one(),
            DensityOfStates::InverseTwoK => T::one() / (T::lit(2.0) * k_norm),
        }
    }
}

impl std::str::FromStr for DensityOfStates {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" | "1" => Ok(Self::Unit),
            "inverse_two_k" | "1/2k" => Ok(Self::InverseTwoK),
            other => Err(Error::Parse(format!("unknown density of states `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhysicalConstants<T: Scalar> {
    pub c: T,
    pub hbar: T,
    pub rho: DensityOfStates,
}

impl<T: Scalar> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self {
            c: T::one(),
            hbar: T::one(),
            rho: DensityOfStates::Unit,
        }
    }
}

impl<T: Scalar> PhysicalConstants<T> {
    pub fn new(c: T, hbar: T, rho: DensityOfStates) -> Result<Self> {
        if !(c.is_finite() && c > T::zero() && hbar.is_finite() && hbar > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "c = {c} and hbar = {hbar} must be positive"
            )));
        }
        Ok(Self { c, hbar, rho })
    }

    fn check_map(&self, map: &DispersionMap<T>) -> Result<()> {
        if map.speed_of_light() != self.c {
            return Err(Error::InvalidParameter(format!(
                "map `{}` uses c = {} but the constants use c = {}",
                map.name(),
                map.speed_of_light(),
                self.c
            )));
        }
        Ok(())
    }
}

/// Transverse momentum below which the weight is replaced by its value at
/// `AXIS_PROBE_RATIO * k` when the map is singular on the axis.
pub const AXIS_PROBE_RATIO: f64 = 1e-8;

/// `unitarity_weight`, continued to `|q| -> 0` for maps singular on the axis.
pub fn weight_near_axis<T: Scalar>(map: &DispersionMap<T>, q: T, k: T) -> Result<T> {
    let probe = T::lit(AXIS_PROBE_RATIO) * k;
    match unitarity_weight(map, q, k) {
        Ok(w) if w.is_finite() => Ok(w),
        Ok(_) | Err(Error::Domain { .. }) | Err(Error::SingularWeight { .. }) if q < probe => {
            unitarity_weight(map, probe, k)
        }
        Ok(_) => Err(Error::SingularWeight {
            map: map.name().to_string(),
            q: q.as_f64(),
            k: k.as_f64(),
        }),
        Err(e) => Err(e),
    }
}

/// `sum_q dq^2 conj(F1) F2 w(q, k)` over the joint support.
fn weighted_overlap<T: Scalar>(
    f1: &SpectralAmplitude<T>,
    f2: &SpectralAmplitude<T>,
    k: T,
    map: &DispersionMap<T>,
) -> Result<Cplx<T>> {
    same_grid(f1.grid(), f2.grid())?;
    let floor = f1.max_abs() * f2.max_abs() * T::lit(SUPPORT_THRESHOLD);
    let qs = f1.grid().q_lattice();
    let mut acc = Cplx::zero();
    for (((i, j), a), b) in f1.values().indexed_iter().zip(f2.values().iter()) {
        let prod = a.conj() * *b;
        if prod.norm() <= floor {
            continue;
        }
        let q = qs[i].hypot(qs[j]);
        acc += prod * weight_near_axis(map, q, k)?;
    }
    Ok(acc * f1.grid().spectral_cell_area())
}

fn check_pair_maps<T: Scalar>(a: &DispersionMap<T>, b: &DispersionMap<T>) -> Result<()> {
    if !a.same_as(b) {
        return Err(Error::MapMismatch(a.name().into(), b.name().into()));
    }
    Ok(())
}

/// Quantum inner product of two single-carrier beams given by their
/// spectra at `z = 0`:
/// `4 pi / (hbar c^2 dk) sum_q dq^2 conj(F1) F2 omega / |d kappa / d k|`.
///
/// Beams on different comb carriers are orthogonal.
#[allow(clippy::too_many_arguments)]
pub fn inner_product_spectral<T: Scalar>(
    f1: &SpectralAmplitude<T>,
    k1: T,
    map1: &DispersionMap<T>,
    f2: &SpectralAmplitude<T>,
    k2: T,
    map2: &DispersionMap<T>,
    comb: &CarrierComb<T>,
    consts: &PhysicalConstants<T>,
) -> Result<Cplx<T>> {
    check_pair_maps(map1, map2)?;
    consts.check_map(map1)?;
    same_grid(f1.grid(), f2.grid())?;
    let (j1, j2) = (comb.index_of(k1)?, comb.index_of(k2)?);
    if j1 != j2 {
        return Ok(Cplx::zero());
    }
    let k = comb.carrier(j1);
    let pref = T::lit(4.0) * T::PI() / (consts.hbar * consts.c * consts.c * comb.spacing());
    Ok(weighted_overlap(f1, f2, k, map1)? * pref)
}

/// `4 pi k / (hbar c dk)`: the ratio of the henochromatic quantum inner
/// product to the paraxial one at carrier `k`.
pub fn proportionality_constant<T: Scalar>(k: T, comb: &CarrierComb<T>, consts: &PhysicalConstants<T>) -> T {
    T::lit(4.0) * T::PI() * k / (consts.hbar * consts.c * comb.spacing())
}

/// Spectra `F(q; k_j)` on a shared grid for every carrier of a comb.
#[derive(Clone, Debug)]
pub struct CarrierSpectra<T: Scalar> {
    comb: CarrierComb<T>,
    spectra: Vec<SpectralAmplitude<T>>,
}

impl<T: Scalar> CarrierSpectra<T> {
    pub fn new(comb: CarrierComb<T>, spectra: Vec<SpectralAmplitude<T>>) -> Result<Self> {
        if spectra.len() != comb.count() {
            return Err(Error::CombMismatch(format!(
                "{} spectra for {} carriers",
                spectra.len(),
                comb.count()
            )));
        }
        for s in &spectra[1..] {
            same_grid(spectra[0].grid(), s.grid())?;
        }
        Ok(Self { comb, spectra })
    }

    /// `F(q; k_j) = g(k_j) F0(q)`.
    pub fn separable(comb: CarrierComb<T>, base: &SpectralAmplitude<T>, g: impl Fn(T) -> T) -> Self {
        let spectra = comb
            .carriers()
            .into_iter()
            .map(|k| {
                let gk = g(k);
                base.map_lattice(|_, _, v| v * gk)
            })
            .collect();
        Self { comb, spectra }
    }

    pub fn comb(&self) -> &CarrierComb<T> {
        &self.comb
    }

    pub fn spectra(&self) -> &[SpectralAmplitude<T>] {
        &self.spectra
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        self.spectra[0].grid()
    }
}

/// Quantum inner product of comb superpositions,
/// `4 pi / (hbar c^2) dk sum_j sum_q dq^2 conj(F1_j) F2_j w(q, k_j)`.
pub fn inner_product_multicarrier<T: Scalar>(
    a: &CarrierSpectra<T>,
    b: &CarrierSpectra<T>,
    map: &DispersionMap<T>,
    consts: &PhysicalConstants<T>,
) -> Result<Cplx<T>> {
    consts.check_map(map)?;
    if a.comb != b.comb {
        return Err(Error::CombMismatch("operands use different combs".into()));
    }
    let mut acc = Cplx::zero();
    for (j, (fa, fb)) in a.spectra.iter().zip(&b.spectra).enumerate() {
        acc += weighted_overlap(fa, fb, a.comb.carrier(j), map)?;
    }
    let pref = T::lit(4.0) * T::PI() * a.comb.spacing() / (consts.hbar * consts.c * consts.c);
    Ok(acc * pref)
}

/// One positive-frequency plane wave of a single-carrier beam.
#[derive(Clone, Copy, Debug)]
pub struct PlaneWave<T: Scalar> {
    /// `(q_x, q_y, kappa)`
    pub wavevector: [T; 3],
    pub amplitude: Cplx<T>,
    /// `dq^2 |d kappa / d k| dk`
    pub measure: T,
    pub density: T,
}

/// Expands a single-carrier beam into plane-wave amplitudes
/// `A(K) = F / dk * sqrt((2 pi)^3 2 |K|) / (2 pi |d kappa / d k| sqrt(rho(K)))`.
pub fn plane_wave_amplitudes<T: Scalar>(
    f: &SpectralAmplitude<T>,
    k: T,
    map: &DispersionMap<T>,
    comb: &CarrierComb<T>,
    consts: &PhysicalConstants<T>,
) -> Result<Vec<PlaneWave<T>>> {
    if !map.is_exact_solution() {
        return Err(Error::NotExactSolution(map.name().into()));
    }
    consts.check_map(map)?;
    let k = comb.carrier(comb.index_of(k)?);
    let floor = f.max_abs() * T::lit(SUPPORT_THRESHOLD);
    let qs = f.grid().q_lattice();
    let dq2 = f.grid().spectral_cell_area();
    let dk = comb.spacing();
    let two_pi = T::TAU();
    let mut out = Vec::new();
    for ((i, j), v) in f.values().indexed_iter() {
        if v.norm() <= floor {
            continue;
        }
        let q = qs[i].hypot(qs[j]);
        let kappa = map.kappa(q, k)?;
        let k_norm = map.omega(q, k)? / consts.c;
        let slope = match map.dkappa_dk(q, k) {
            Ok(s) if s != T::zero() && s.is_finite() => s.abs(),
            _ => map.dkappa_dk(T::lit(AXIS_PROBE_RATIO) * k, k)?.abs(),
        };
        let density = consts.rho.eval(k_norm);
        let scale = (two_pi * two_pi * two_pi * T::lit(2.0) * k_norm).sqrt()
            / (two_pi * slope * density.sqrt() * dk);
        out.push(PlaneWave {
            wavevector: [qs[i], qs[j], kappa],
            amplitude: *v * scale,
            measure: dq2 * slope * dk,
            density,
        });
    }
    Ok(out)
}

/// `1/(hbar c) sum rho(K) conj(A1) A2 d^3K` over matching plane waves.
pub fn inner_product_plane_waves<T: Scalar>(
    a: &[PlaneWave<T>],
    b: &[PlaneWave<T>],
    consts: &PhysicalConstants<T>,
) -> Result<Cplx<T>> {
    let key = |w: &PlaneWave<T>| w.wavevector.map(|v| v.as_f64().to_bits());
    let lookup: HashMap<_, _> = b.iter().map(|w| (key(w), w)).collect();
    let mut acc = Cplx::zero();
    for pa in a {
        if let Some(pb) = lookup.get(&key(pa)) {
            acc += pa.amplitude.conj() * pb.amplitude * pa.density * pa.measure;
        }
    }
    Ok(acc / (consts.hbar * consts.c))
}

/// Relative spread of the plane-wave inner product `<F|F>` between the two
/// density-of-states conventions.
pub fn rho_invariance_check<T: Scalar>(
    f: &SpectralAmplitude<T>,
    k: T,
    map: &DispersionMap<T>,
    comb: &CarrierComb<T>,
    consts: &PhysicalConstants<T>,
) -> Result<T> {
    let mut values = Vec::with_capacity(2);
    for rho in [DensityOfStates::Unit, DensityOfStates::InverseTwoK] {
        let c = PhysicalConstants { rho, ..*consts };
        let waves = plane_wave_amplitudes(f, k, map, comb, &c)?;
        values.push(inner_product_plane_waves(&waves, &waves, &c)?);
    }
    Ok((values[0] - values[1]).norm() / values[0].norm())
}

/// One sample of the weight sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSample {
    pub q: f64,
    pub weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub map: String,
    pub k: f64,
    pub q_max: f64,
    /// `max_q |w(q, k) / w(0, k) - 1|` over the samples where `w` is defined.
    pub defect: f64,
    pub weight_samples: Vec<WeightSample>,
}

impl DefectReport {
    pub fn flagged(&self) -> usize {
        self.weight_samples.iter().filter(|s| s.error.is_some()).count()
    }
}

/// Number of logarithmically spaced samples in a weight sweep.
pub const WEIGHT_SAMPLES: usize = 200;
/// Lower end of the weight sweep, relative to the carrier.
pub const WEIGHT_Q_MIN_RATIO: f64 = 1e-4;

/// Samples `w(q, k)` at log-spaced `q` in `[1e-4 k, q_max]`; points where the
/// map is undefined or singular are flagged rather than fatal.
pub fn weight_sweep<T: Scalar>(map: &DispersionMap<T>, k: T, q_max: T) -> Result<DefectReport> {
    let q_min = T::lit(WEIGHT_Q_MIN_RATIO) * k;
    if !(q_max.is_finite() && q_max > q_min) {
        return Err(Error::InvalidParameter(format!(
            "q_max {q_max} must exceed {q_min}"
        )));
    }
    let reference = weight_near_axis(map, T::zero(), k)?;
    let ratio = (q_max / q_min).ln();
    let mut defect = T::zero();
    let weight_samples = (0..WEIGHT_SAMPLES)
        .map(|i| {
            let frac = T::from_count(i) / T::from_count(WEIGHT_SAMPLES - 1);
            let q = if i + 1 == WEIGHT_SAMPLES { q_max } else { q_min * (frac * ratio).exp() };
            match unitarity_weight(map, q, k) {
                Ok(w) => {
                    defect = defect.max((w / reference - T::one()).abs());
                    WeightSample { q: q.as_f64(), weight: Some(w.as_f64()), error: None }
                }
                Err(e) => WeightSample { q: q.as_f64(), weight: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(DefectReport {
        map: map.name().to_string(),
        k: k.as_f64(),
        q_max: q_max.as_f64(),
        defect: defect.as_f64(),
        weight_samples,
    })
}

/// As [`weight_sweep`], but any flagged sample is an error.
pub fn unitarity_defect<T: Scalar>(map: &DispersionMap<T>, k: T, q_max: T) -> Result<DefectReport> {
    let report = weight_sweep(map, k, q_max)?;
    if let Some(bad) = report.weight_samples.iter().find(|s| s.error.is_some()) {
        return match unitarity_weight(map, T::lit(bad.q), k) {
            Err(e) => Err(e),
            Ok(_) => Err(Error::InvalidParameter(bad.error.clone().unwrap_or_default())),
        };
    }
    Ok(report)
}

/// `Psi` and `d Psi / dt` of a comb superposition on a fixed-`t` slice,
/// sampled at stations `z`.
#[derive(Clone, Debug)]
pub struct SliceField<T: Scalar> {
    grid: TransverseGrid<T>,
    z_stations: Vec<T>,
    t: T,
    map_name: String,
    exact: bool,
    psi: Vec<Array2<Cplx<T>>>,
    dpsi_dt: Vec<Array2<Cplx<T>>>,
}

impl<T: Scalar> SliceField<T> {
    pub fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }

    pub fn z_stations(&self) -> &[T] {
        &self.z_stations
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn psi(&self, iz: usize) -> &Array2<Cplx<T>> {
        &self.psi[iz]
    }

    pub fn dpsi_dt(&self, iz: usize) -> &Array2<Cplx<T>> {
        &self.dpsi_dt[iz]
    }
}

/// `Psi(s, z, t) = dk sum_j int d^2q/(2 pi) F_j(q) exp(i q.s + i kappa_j z - i omega_j t)`
/// and its time derivative on the slice `t`.
pub fn synthesize_slice<T: Scalar>(
    spectra: &CarrierSpectra<T>,
    map: &DispersionMap<T>,
    z_stations: Vec<T>,
    t: T,
) -> Result<SliceField<T>> {
    check_stations("z", &z_stations)?;
    let grid = spectra.grid().clone();
    let n = grid.n();
    let dk = Cplx::new(spectra.comb.spacing(), T::zero());
    let tables = spectra
        .spectra
        .iter()
        .enumerate()
        .map(|(j, f)| PhaseTable::build(f, spectra.comb.carrier(j), map))
        .collect::<Result<Vec<_>>>()?;
    let pairs = z_stations
        .par_iter()
        .map(|&z| {
            let mut psi = Array2::zeros((n, n));
            let mut dt = Array2::zeros((n, n));
            for (table, f) in tables.iter().zip(&spectra.spectra) {
                table.accumulate(f, z, t, dk, false, &mut psi);
                table.accumulate(f, z, t, dk, true, &mut dt);
            }
            let psi = inverse_transform(&SpectralAmplitude::new(grid.clone(), psi)?, z)?;
            let dt = inverse_transform(&SpectralAmplitude::new(grid.clone(), dt)?, z)?;
            Ok((psi.into_values(), dt.into_values()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (psi, dpsi_dt) = pairs.into_iter().unzip();
    Ok(SliceField {
        grid,
        z_stations,
        t,
        map_name: map.name().to_string(),
        exact: map.is_exact_solution(),
        psi,
        dpsi_dt,
    })
}

/// `(i / hbar c^2) int dx^2 dz (conj(Psi1) dPsi2/dt - conj(dPsi1/dt) Psi2)`
/// on a fixed-`t` slice, with a rectangle rule in `z`.
pub fn inner_product_slice<T: Scalar>(
    a: &SliceField<T>,
    b: &SliceField<T>,
    consts: &PhysicalConstants<T>,
) -> Result<Cplx<T>> {
    for f in [a, b] {
        if !f.exact {
            return Err(Error::NotExactSolution(f.map_name.clone()));
        }
    }
    if a.map_name != b.map_name {
        return Err(Error::MapMismatch(a.map_name.clone(), b.map_name.clone()));
    }
    same_grid(&a.grid, &b.grid)?;
    if a.z_stations != b.z_stations || a.t != b.t {
        return Err(Error::InvalidParameter("slices are sampled differently".into()));
    }
    let dz = uniform_step("z", &a.z_stations)?;
    let mut acc: Cplx<T> = Cplx::zero();
    for iz in 0..a.z_stations.len() {
        for (((p1, d1), p2), d2) in a.psi[iz]
            .iter()
            .zip(a.dpsi_dt[iz].iter())
            .zip(b.psi[iz].iter())
            .zip(b.dpsi_dt[iz].iter())
        {
            acc += p1.conj() * *d2 - d1.conj() * *p2;
        }
    }
    let i = Cplx::new(T::zero(), T::one());
    Ok(acc * i * (dz * a.grid.cell_area() / (consts.hbar * consts.c * consts.c)))
}
