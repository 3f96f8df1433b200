//! Hermite-Gauss and Laguerre-Gauss initial data, paraxial propagation along
//! `z`, and the cross-section inner product of paraxial solutions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    cis, forward_transform, inverse_transform, l2_inner_product, l2_norm, same_grid,
    spectral_laplacian, SampledEnvelope, SpectralAmplitude, TransverseGrid,
};
use crate::scalar::{Cplx, Scalar};

/// Transverse mode family and its discrete indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeFamily {
    HermiteGauss { m: u32, n: u32 },
    LaguerreGauss { l: i32, p: u32 },
}

impl ModeFamily {
    /// Hermite-Gauss indices with `m + n <= max_order`, ordered by total order.
    pub fn hermite_gauss_up_to(max_order: u32) -> Vec<Self> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            for m in (0..=order).rev() {
                out.push(Self::HermiteGauss { m, n: order - m });
            }
        }
        out
    }

    /// Laguerre-Gauss indices with `|l| + 2p <= max_order`, ordered by total order.
    pub fn laguerre_gauss_up_to(max_order: u32) -> Vec<Self> {
        let mut out = Vec::new();
        for order in 0..=max_order as i32 {
            let mut l = -order;
            while l <= order {
                let p = (order - l.abs()) / 2;
                out.push(Self::LaguerreGauss { l, p: p as u32 });
                l += 2;
            }
        }
        out
    }
}

/// A mode family member together with its waist and carrier wavenumber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec<T: Scalar> {
    pub family: ModeFamily,
    pub waist: T,
    pub carrier: T,
}

impl<T: Scalar> ModeSpec<T> {
    pub fn new(family: ModeFamily, waist: T, carrier: T) -> Result<Self> {
        if !(waist.is_finite() && waist > T::zero()) {
            return Err(Error::InvalidParameter(format!("waist {waist} must be positive")));
        }
        if !(carrier.is_finite() && carrier > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "carrier {carrier} must be positive"
            )));
        }
        Ok(Self {
            family,
            waist,
            carrier,
        })
    }

    pub fn hermite_gauss(m: u32, n: u32, waist: T, carrier: T) -> Result<Self> {
        Self::new(ModeFamily::HermiteGauss { m, n }, waist, carrier)
    }

    pub fn laguerre_gauss(l: i32, p: u32, waist: T, carrier: T) -> Result<Self> {
        Self::new(ModeFamily::LaguerreGauss { l, p }, waist, carrier)
    }

    /// Unit-norm envelope value at transverse point `(x, y)` on the waist plane.
    pub fn evaluate(&self, x: T, y: T) -> Cplx<T> {
        let w = self.waist;
        let (xs, ys) = (x / w, y / w);
        let t = xs * xs + ys * ys;
        let gauss = (-t / T::lit(2.0)).exp() / (T::PI().sqrt() * w);
        match self.family {
            ModeFamily::HermiteGauss { m, n } => {
                Cplx::new(hermite_normalized(m, xs) * hermite_normalized(n, ys) * gauss, T::zero())
            }
            ModeFamily::LaguerreGauss { l, p } => {
                let al = l.unsigned_abs();
                let radial = lg_norm::<T>(al, p)
                    * t.powf(T::from_count(al as usize) / T::lit(2.0))
                    * laguerre(p, al, t);
                let phi = y.atan2(x);
                cis(T::lit(l as f64) * phi) * (radial * gauss)
            }
        }
    }
}

impl<T: Scalar> fmt::Display for ModeSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            ModeFamily::HermiteGauss { m, n } => {
                write!(f, "hg:{m},{n}:{}:{}", self.waist, self.carrier)
            }
            ModeFamily::LaguerreGauss { l, p } => {
                write!(f, "lg:{l},{p}:{}:{}", self.waist, self.carrier)
            }
        }
    }
}

/// Parses `hg:m,n:W:k` and `lg:l,p:W:k`.
impl<T: Scalar> FromStr for ModeSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("mode `{s}`: {why}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 4 {
            return Err(bad("expected family:i,j:waist:carrier"));
        }
        let (i, j) = parts[1]
            .split_once(',')
            .ok_or_else(|| bad("indices must be `i,j`"))?;
        let real = |v: &str, what: &str| {
            v.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| bad(&format!("{what} `{v}` is not a number")))
        };
        let waist = real(parts[2], "waist")?;
        let carrier = real(parts[3], "carrier")?;
        let family = match parts[0].trim().to_ascii_lowercase().as_str() {
            "hg" => ModeFamily::HermiteGauss {
                m: i.trim().parse().map_err(|_| bad("m must be a natural number"))?,
                n: j.trim().parse().map_err(|_| bad("n must be a natural number"))?,
            },
            "lg" => ModeFamily::LaguerreGauss {
                l: i.trim().parse().map_err(|_| bad("l must be an integer"))?,
                p: j.trim().parse().map_err(|_| bad("p must be a natural number"))?,
            },
            other => return Err(bad(&format!("unknown family `{other}`"))),
        };
        Self::new(family, waist, carrier).map_err(|e| bad(&e.to_string()))
    }
}

/// `H_n(x) / sqrt(2^n n!)` by the three-term recurrence.
pub fn hermite_normalized<T: Scalar>(order: u32, x: T) -> T {
    let two = T::lit(2.0);
    let mut prev = T::one();
    if order == 0 {
        return prev;
    }
    let mut cur = two.sqrt() * x;
    for k in 1..order {
        let kf = T::from_count(k as usize);
        let next = (two / (kf + T::one())).sqrt() * x * cur - (kf / (kf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Associated Laguerre polynomial `L_p^alpha(x)` by the three-term recurrence.
pub fn laguerre<T: Scalar>(p: u32, alpha: u32, x: T) -> T {
    let a = T::from_count(alpha as usize);
    let mut prev = T::one();
    if p == 0 {
        return prev;
    }
    let mut cur = T::one() + a - x;
    for k in 1..p {
        let kf = T::from_count(k as usize);
        let next = ((T::lit(2.0) * kf + T::one() + a - x) * cur - (kf + a) * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// `sqrt(p! / (p + |l|)!)`.
fn lg_norm<T: Scalar>(abs_l: u32, p: u32) -> T {
    let mut ratio = T::one();
    for j in (p + 1)..=(p + abs_l) {
        ratio /= T::from_count(j as usize);
    }
    ratio.sqrt()
}

/// Samples the unit-norm initial data of `spec` at station `z = 0`.
pub fn make_initial_data<T: Scalar>(
    spec: &ModeSpec<T>,
    grid: &TransverseGrid<T>,
) -> Result<SampledEnvelope<T>> {
    grid.check_waist(spec.waist);
    SampledEnvelope::from_fn(grid, T::zero(), |x, y| spec.evaluate(x, y))
}

/// Multiplies by the free paraxial propagator `exp(-i |q|^2 z / 2k)`.
pub fn propagate_paraxial<T: Scalar>(
    amp: &SpectralAmplitude<T>,
    z: T,
    carrier: T,
) -> Result<SpectralAmplitude<T>> {
    if !(carrier.is_finite() && carrier > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "carrier {carrier} must be positive"
        )));
    }
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("distance {z} is not finite")));
    }
    let scale = z / (T::lit(2.0) * carrier);
    Ok(amp.map_lattice(|qx, qy, v| v * cis(-(qx * qx + qy * qy) * scale)))
}

/// A solution of the paraxial equation, stored as its spectrum at `station`.
#[derive(Clone, Debug)]
pub struct ParaxialBeam<T: Scalar> {
    spectrum: SpectralAmplitude<T>,
    station: T,
    carrier: T,
}

impl<T: Scalar> ParaxialBeam<T> {
    pub fn new(spectrum: SpectralAmplitude<T>, station: T, carrier: T) -> Result<Self> {
        if !(carrier.is_finite() && carrier > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "carrier {carrier} must be positive"
            )));
        }
        Ok(Self {
            spectrum,
            station,
            carrier,
        })
    }

    pub fn from_mode(spec: &ModeSpec<T>, grid: &TransverseGrid<T>) -> Result<Self> {
        let env = make_initial_data(spec, grid)?;
        Self::from_envelope(&env, spec.carrier)
    }

    pub fn from_envelope(env: &SampledEnvelope<T>, carrier: T) -> Result<Self> {
        Self::new(forward_transform(env)?, env.station(), carrier)
    }

    pub fn spectrum(&self) -> &SpectralAmplitude<T> {
        &self.spectrum
    }

    pub fn station(&self) -> T {
        self.station
    }

    pub fn carrier(&self) -> T {
        self.carrier
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        self.spectrum.grid()
    }

    /// The same solution, re-expressed at station `z`.
    pub fn at(&self, z: T) -> Result<Self> {
        Ok(Self {
            spectrum: propagate_paraxial(&self.spectrum, z - self.station, self.carrier)?,
            station: z,
            carrier: self.carrier,
        })
    }

    /// Spectrum `F(q)` referred to `z = 0`.
    pub fn initial_spectrum(&self) -> Result<SpectralAmplitude<T>> {
        if self.station == T::zero() {
            return Ok(self.spectrum.clone());
        }
        propagate_paraxial(&self.spectrum, -self.station, self.carrier)
    }

    pub fn envelope(&self) -> Result<SampledEnvelope<T>> {
        inverse_transform(&self.spectrum, self.station)
    }

    pub fn envelope_at(&self, z: T) -> Result<SampledEnvelope<T>> {
        self.at(z)?.envelope()
    }

    /// Superposition `a * self + b * other` of beams sharing a carrier.
    pub fn superpose(&self, a: Cplx<T>, other: &Self, b: Cplx<T>) -> Result<Self> {
        check_carriers(self.carrier, other.carrier)?;
        let other = other.at(self.station)?;
        Ok(Self {
            spectrum: self.spectrum.combine(a, &other.spectrum, b)?,
            station: self.station,
            carrier: self.carrier,
        })
    }

    pub fn norm(&self) -> T {
        l2_norm(&self.spectrum)
    }
}

pub(crate) fn check_carriers<T: Scalar>(a: T, b: T) -> Result<()> {
    if (a - b).abs() > T::lit(1e-12) * a.abs().max(b.abs()) {
        return Err(Error::CarrierMismatch(a.as_f64(), b.as_f64()));
    }
    Ok(())
}

/// Cross-section inner product of two paraxial solutions with a common carrier.
///
/// `b` is carried to `a`'s station before the spectral-side sum, so the value
/// does not depend on which cross-section either beam was stored at.
pub fn paraxial_inner_product<T: Scalar>(
    a: &ParaxialBeam<T>,
    b: &ParaxialBeam<T>,
) -> Result<Cplx<T>> {
    check_carriers(a.carrier, b.carrier)?;
    same_grid(a.grid(), b.grid())?;
    let b = b.at(a.station)?;
    l2_inner_product(&a.spectrum, &b.spectrum)
}

/// Gram matrix `G[i][j] = <beams[i] | beams[j]>`.
pub fn gram_matrix<T: Scalar>(beams: &[ParaxialBeam<T>]) -> Result<Vec<Vec<Cplx<T>>>> {
    beams
        .iter()
        .map(|a| beams.iter().map(|b| paraxial_inner_product(a, b)).collect())
        .collect()
}

/// L2 norm of `(2ik d/dz + laplacian) Xi` with a centered difference in `z`
/// and a spectral transverse Laplacian.
pub fn paraxial_residual_grid<T: Scalar>(
    before: &SampledEnvelope<T>,
    centre: &SampledEnvelope<T>,
    after: &SampledEnvelope<T>,
    carrier: T,
) -> Result<T> {
    same_grid(before.grid(), centre.grid())?;
    same_grid(centre.grid(), after.grid())?;
    let h_lo = centre.station() - before.station();
    let h_hi = after.station() - centre.station();
    if !(h_lo > T::zero()) || (h_hi - h_lo).abs() > T::lit(1e-9) * h_lo {
        return Err(Error::UnequalSpacing(format!(
            "stations {}, {}, {}",
            before.station(),
            centre.station(),
            after.station()
        )));
    }
    let h = (h_lo + h_hi) / T::lit(2.0);
    let lap = spectral_laplacian(centre)?;
    let coeff = Cplx::new(T::zero(), T::lit(2.0) * carrier / (T::lit(2.0) * h));
    let residual: T = before
        .values()
        .iter()
        .zip(after.values())
        .zip(lap.values())
        .map(|((lo, hi), l)| (coeff * (hi - lo) + l).norm_sqr())
        .sum();
    Ok((residual * centre.grid().cell_area()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid256() -> TransverseGrid<f64> {
        TransverseGrid::new(256, 16.0).unwrap()
    }

    #[test]
    fn hermite_recurrence_matches_explicit_polynomials() {
        // H_3(x) = 8x^3 - 12x, normalised by sqrt(2^3 3!) = sqrt(48)
        for &x in &[-1.3, 0.0, 0.4, 2.2] {
            let h3 = (8.0 * x * x * x - 12.0 * x) / 48f64.sqrt();
            assert!((hermite_normalized(3, x) - h3).abs() < 1e-13);
            let h2 = (4.0 * x * x - 2.0) / 8f64.sqrt();
            assert!((hermite_normalized(2, x) - h2).abs() < 1e-13);
        }
    }

    #[test]
    fn laguerre_recurrence_matches_explicit_polynomials() {
        // L_2^1(x) = (x^2 - 6x + 6)/2
        for &x in &[0.0f64, 0.7, 3.1] {
            let l21 = (x * x - 6.0 * x + 6.0) / 2.0;
            assert!((laguerre(2, 1, x) - l21).abs() < 1e-13);
            assert!((laguerre(1, 3, x) - (4.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn fundamental_mode_is_the_normalized_gaussian() {
        let spec = ModeSpec::hermite_gauss(0, 0, 1.5, 2.0).unwrap();
        let w = 1.5f64;
        for &(x, y) in &[(0.0, 0.0), (0.3, -1.2), (2.0, 1.0)] {
            let expected =
                (-(x * x + y * y) / (2.0 * w * w)).exp() / (std::f64::consts::PI.sqrt() * w);
            assert!((spec.evaluate(x, y).re - expected).abs() < 1e-15);
        }
        let env = make_initial_data(&spec, &TransverseGrid::new(128, 24.0).unwrap()).unwrap();
        assert!((env.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_and_azimuthal_orthogonality() {
        let g = grid256();
        let a = ParaxialBeam::from_mode(&ModeSpec::hermite_gauss(0, 0, 1.0, 1.0).unwrap(), &g).unwrap();
        let b = ParaxialBeam::from_mode(&ModeSpec::hermite_gauss(1, 0, 1.0, 1.0).unwrap(), &g).unwrap();
        assert!(paraxial_inner_product(&a, &b).unwrap().norm() < 1e-12);
        let p = ParaxialBeam::from_mode(&ModeSpec::laguerre_gauss(1, 0, 1.0, 1.0).unwrap(), &g).unwrap();
        let m = ParaxialBeam::from_mode(&ModeSpec::laguerre_gauss(-1, 0, 1.0, 1.0).unwrap(), &g).unwrap();
        assert!(paraxial_inner_product(&p, &m).unwrap().norm() < 1e-10);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(ModeSpec::hermite_gauss(0, 0, 0.0, 1.0).is_err());
        assert!(ModeSpec::hermite_gauss(0, 0, 1.0, -1.0).is_err());
        assert!(ModeSpec::<f64>::laguerre_gauss(2, 0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn parses_mode_strings() {
        let s: ModeSpec<f64> = "hg:2,1:1.5:3".parse().unwrap();
        assert_eq!(s.family, ModeFamily::HermiteGauss { m: 2, n: 1 });
        assert_eq!((s.waist, s.carrier), (1.5, 3.0));
        let l: ModeSpec<f64> = "lg:-1,0:1:1".parse().unwrap();
        assert_eq!(l.family, ModeFamily::LaguerreGauss { l: -1, p: 0 });
        for bad in ["hg:0:1:1", "hg:0,0:1", "xx:0,0:1:1", "hg:-1,0:1:1", "lg:1,0:0:1", "hg:a,0:1:1"] {
            assert!(bad.parse::<ModeSpec<f64>>().is_err(), "{bad}");
        }
        assert_eq!(l.to_string().parse::<ModeSpec<f64>>().unwrap(), l);
    }

    #[test]
    fn family_orders_have_ten_members() {
        let hg = ModeFamily::hermite_gauss_up_to(3);
        let lg = ModeFamily::laguerre_gauss_up_to(3);
        assert_eq!(hg.len(), 10);
        assert_eq!(lg.len(), 10);
        assert!(lg.contains(&ModeFamily::LaguerreGauss { l: 0, p: 1 }));
        assert!(lg.contains(&ModeFamily::LaguerreGauss { l: -3, p: 0 }));
    }

    #[test]
    fn propagation_is_identity_at_zero_and_unitary() {
        let g = TransverseGrid::new(64, 16.0).unwrap();
        let beam = ParaxialBeam::from_mode(&ModeSpec::laguerre_gauss(2, 1, 1.0, 1.5).unwrap(), &g).unwrap();
        let same = propagate_paraxial(beam.spectrum(), 0.0, 1.5).unwrap();
        assert_eq!(same.values(), beam.spectrum().values());
        for &z in &[0.5f64, 7.0, -30.0] {
            let moved = propagate_paraxial(beam.spectrum(), z, 1.5).unwrap();
            assert!((moved.norm() - beam.norm()).abs() < 1e-13);
        }
        assert!(propagate_paraxial(beam.spectrum(), 1.0, 0.0).is_err());
    }

    #[test]
    fn propagation_composes() {
        let g = TransverseGrid::new(64, 16.0).unwrap();
        let beam = ParaxialBeam::from_mode(&ModeSpec::hermite_gauss(1, 2, 1.0, 1.0).unwrap(), &g).unwrap();
        let two_step = propagate_paraxial(&propagate_paraxial(beam.spectrum(), 1.3, 1.0).unwrap(), 2.4, 1.0).unwrap();
        let one_step = propagate_paraxial(beam.spectrum(), 3.7, 1.0).unwrap();
        for (a, b) in two_step.values().iter().zip(one_step.values()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn carrier_mismatch_rejected() {
        let g = TransverseGrid::new(32, 16.0).unwrap();
        let a = ParaxialBeam::from_mode(&ModeSpec::hermite_gauss(0, 0, 1.0, 1.0).unwrap(), &g).unwrap();
        let b = ParaxialBeam::from_mode(&ModeSpec::hermite_gauss(0, 0, 1.0, 2.0).unwrap(), &g).unwrap();
        assert!(matches!(paraxial_inner_product(&a, &b), Err(Error::CarrierMismatch(..))));
    }

    #[test]
    fn residual_vanishes_for_constant_and_plane_envelopes() {
        let g = TransverseGrid::new(32, 10.0).unwrap();
        let k = 2.0;
        let flat: Vec<_> = [0.9, 1.0, 1.1]
            .iter()
            .map(|&z| SampledEnvelope::from_fn(&g, z, |_, _| Cplx::new(1.0, 0.0)).unwrap())
            .collect();
        let r = paraxial_residual_grid(&flat[0], &flat[1], &flat[2], k).unwrap();
        assert!(r < 1e-12, "{r}");

        // slow plane envelope: |q0| = 0.1, k = 5, so the z-phase rate is 1e-3
        let g = TransverseGrid::new(16, 20.0 * std::f64::consts::PI).unwrap();
        let k = 5.0;
        let (qx, qy) = (g.wavenumber(1), g.wavenumber(0));
        let q2 = qx * qx + qy * qy;
        let h = 1e-2;
        let plane: Vec<_> = [-h, 0.0, h]
            .iter()
            .map(|&z| {
                SampledEnvelope::from_fn(&g, z, |x, y| cis(qx * x + qy * y - q2 * z / (2.0 * k)))
                    .unwrap()
            })
            .collect();
        let r = paraxial_residual_grid(&plane[0], &plane[1], &plane[2], k).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn residual_rejects_unequal_spacing() {
        let g = TransverseGrid::new(16, 10.0).unwrap();
        let e = |z| SampledEnvelope::from_fn(&g, z, |_, _| Cplx::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            paraxial_residual_grid(&e(0.0), &e(1.0), &e(2.5), 1.0),
            Err(Error::UnequalSpacing(_))
        ));
    }
}
