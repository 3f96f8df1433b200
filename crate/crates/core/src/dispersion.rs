//! Candidate mappings `(kappa(q, k), omega(q, k))` from paraxial spectra to
//! spacetime fields, and the functionals used to rank them.
//!
//! Every map is isotropic, so the primitive evaluators take the transverse
//! wave-vector magnitude `|q|`; the `*_vec` variants accept a 2-vector.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::unitarity_defect;
use crate::scalar::Scalar;

/// User-supplied rapidity profile `eta(r)`, `r = |q| / k`.
pub type EtaFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// The four mappings proposed in the literature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BuiltinMap {
    Paraxial,
    Monochromatic,
    InitiallyParaxial,
    Henochromatic,
}

impl BuiltinMap {
    pub const ALL: [BuiltinMap; 4] = [
        BuiltinMap::Paraxial,
        BuiltinMap::Monochromatic,
        BuiltinMap::InitiallyParaxial,
        BuiltinMap::Henochromatic,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            BuiltinMap::Paraxial => "pa",
            BuiltinMap::Monochromatic => "mc",
            BuiltinMap::InitiallyParaxial => "ip",
            BuiltinMap::Henochromatic => "hc",
        }
    }
}

#[derive(Clone)]
enum Kind<T: Scalar> {
    Builtin(BuiltinMap),
    Family { alpha: T, beta: T },
    Eta(EtaFn<T>),
}

/// One candidate mapping, evaluated in units where the wave speed is `c`.
#[derive(Clone)]
pub struct DispersionMap<T: Scalar> {
    name: String,
    kind: Kind<T>,
    c: T,
}

impl<T: Scalar> fmt::Debug for DispersionMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DispersionMap")
            .field("name", &self.name)
            .field("c", &self.c)
            .finish()
    }
}

impl<T: Scalar> DispersionMap<T> {
    pub fn builtin(which: BuiltinMap) -> Self {
        Self {
            name: which.tag().to_string(),
            kind: Kind::Builtin(which),
            c: T::one(),
        }
    }

    pub fn paraxial() -> Self {
        Self::builtin(BuiltinMap::Paraxial)
    }

    pub fn monochromatic() -> Self {
        Self::builtin(BuiltinMap::Monochromatic)
    }

    pub fn initially_paraxial() -> Self {
        Self::builtin(BuiltinMap::InitiallyParaxial)
    }

    pub fn henochromatic() -> Self {
        Self::builtin(BuiltinMap::Henochromatic)
    }

    /// The unitary two-parameter family
    /// `kappa = e^a k^b q^(1-b) / 2 - e^-a q^(1+b) / (2 k^b)`,
    /// `omega / c = e^a k^b q^(1-b) / 2 + e^-a q^(1+b) / (2 k^b)`.
    pub fn family(alpha: T, beta: T) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter("family parameters must be finite".into()));
        }
        if beta == T::zero() {
            return Err(Error::InvalidParameter(
                "beta = 0 makes eta' vanish identically".into(),
            ));
        }
        Ok(Self {
            name: format!("family:{alpha},{beta}"),
            kind: Kind::Family { alpha, beta },
            c: T::one(),
        })
    }

    /// `kappa = |q| sinh eta(r)`, `omega = c |q| cosh eta(r)` with `r = |q| / k`.
    pub fn eta(name: impl Into<String>, eta: EtaFn<T>) -> Self {
        Self {
            name: name.into(),
            kind: Kind::Eta(eta),
            c: T::one(),
        }
    }

    pub fn with_speed_of_light(mut self, c: T) -> Result<Self> {
        if !(c.is_finite() && c > T::zero()) {
            return Err(Error::InvalidParameter(format!("c = {c} must be positive")));
        }
        self.c = c;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn speed_of_light(&self) -> T {
        self.c
    }

    pub fn as_builtin(&self) -> Option<BuiltinMap> {
        match self.kind {
            Kind::Builtin(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_henochromatic(&self) -> bool {
        self.as_builtin() == Some(BuiltinMap::Henochromatic)
    }

    /// False only for the paraxial map, whose fields miss the wave equation.
    pub fn is_exact_solution(&self) -> bool {
        self.as_builtin() != Some(BuiltinMap::Paraxial)
    }

    /// Same underlying map (name and wave speed).
    pub fn same_as(&self, other: &Self) -> bool {
        self.name == other.name && self.c == other.c
    }

    fn domain_error(&self, q: T, k: T) -> Error {
        Error::Domain {
            map: self.name.clone(),
            q: q.as_f64(),
            k: k.as_f64(),
        }
    }

    fn check_args(&self, q: T, k: T) -> Result<()> {
        if !(q.is_finite() && q >= T::zero() && k.is_finite() && k > T::zero()) {
            return Err(self.domain_error(q, k));
        }
        match &self.kind {
            Kind::Builtin(BuiltinMap::Monochromatic) if q >= k => Err(self.domain_error(q, k)),
            Kind::Eta(_) if q == T::zero() => Err(self.domain_error(q, k)),
            _ => Ok(()),
        }
    }

    fn finite(&self, v: T, q: T, k: T) -> Result<T> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain_error(q, k))
        }
    }

    /// Whether `(|q|, k)` lies in the map's domain.
    pub fn in_domain(&self, q: T, k: T) -> bool {
        self.kappa(q, k).is_ok() && self.omega(q, k).is_ok()
    }

    /// Family terms `(e^a k^b q^(1-b) / 2, e^-a q^(1+b) / (2 k^b))`.
    fn family_terms(alpha: T, beta: T, q: T, k: T) -> (T, T) {
        let half = T::lit(0.5);
        let grow = alpha.exp() * k.powf(beta) * q.powf(T::one() - beta) * half;
        let decay = (-alpha).exp() * q.powf(T::one() + beta) / k.powf(beta) * half;
        (grow, decay)
    }

    /// Longitudinal wavenumber `kappa(|q|, k)`.
    pub fn kappa(&self, q: T, k: T) -> Result<T> {
        self.check_args(q, k)?;
        let two = T::lit(2.0);
        let v = match &self.kind {
            Kind::Builtin(BuiltinMap::Paraxial | BuiltinMap::InitiallyParaxial) => {
                k - q * q / (two * k)
            }
            Kind::Builtin(BuiltinMap::Monochromatic) => (k * k - q * q).sqrt(),
            Kind::Builtin(BuiltinMap::Henochromatic) => k - q * q / (two * two * k),
            Kind::Family { alpha, beta } => {
                let (grow, decay) = Self::family_terms(*alpha, *beta, q, k);
                grow - decay
            }
            Kind::Eta(eta) => q * eta(q / k).sinh(),
        };
        self.finite(v, q, k)
    }

    /// Angular frequency `omega(|q|, k)`.
    pub fn omega(&self, q: T, k: T) -> Result<T> {
        self.check_args(q, k)?;
        let c = self.c;
        let four = T::lit(4.0);
        let v = match &self.kind {
            Kind::Builtin(BuiltinMap::Paraxial | BuiltinMap::Monochromatic) => c * k,
            Kind::Builtin(BuiltinMap::InitiallyParaxial) => {
                let q2 = q * q;
                c * (k * k + q2 * q2 / (four * k * k)).sqrt()
            }
            Kind::Builtin(BuiltinMap::Henochromatic) => c * (k + q * q / (four * k)),
            Kind::Family { alpha, beta } => {
                let (grow, decay) = Self::family_terms(*alpha, *beta, q, k);
                c * (grow + decay)
            }
            Kind::Eta(eta) => c * q * eta(q / k).cosh(),
        };
        self.finite(v, q, k)
    }

    /// `d kappa / d k` at fixed `|q|`: analytic except for `eta` maps, which
    /// use a centered difference with step `1e-6 k`.
    pub fn dkappa_dk(&self, q: T, k: T) -> Result<T> {
        self.check_args(q, k)?;
        let one = T::one();
        let two = T::lit(2.0);
        let v = match &self.kind {
            Kind::Builtin(BuiltinMap::Paraxial | BuiltinMap::InitiallyParaxial) => {
                one + q * q / (two * k * k)
            }
            Kind::Builtin(BuiltinMap::Monochromatic) => k / (k * k - q * q).sqrt(),
            Kind::Builtin(BuiltinMap::Henochromatic) => one + q * q / (two * two * k * k),
            Kind::Family { alpha, beta } => {
                let half = T::lit(0.5);
                let (a, b) = (*alpha, *beta);
                b * half
                    * (a.exp() * k.powf(b - one) * q.powf(one - b)
                        + (-a).exp() * q.powf(one + b) * k.powf(-b - one))
            }
            Kind::Eta(_) => {
                let h = T::lit(1e-6) * k;
                (self.kappa(q, k + h)? - self.kappa(q, k - h)?) / (two * h)
            }
        };
        self.finite(v, q, k)
    }

    pub fn kappa_vec(&self, q: [T; 2], k: T) -> Result<T> {
        self.kappa(q[0].hypot(q[1]), k)
    }

    pub fn omega_vec(&self, q: [T; 2], k: T) -> Result<T> {
        self.omega(q[0].hypot(q[1]), k)
    }
}

/// Parses `pa`, `mc`, `ip`, `hc` and `family:alpha,beta`.
impl<T: Scalar> FromStr for DispersionMap<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(b) = BuiltinMap::ALL.iter().find(|b| b.tag() == s) {
            return Ok(Self::builtin(*b));
        }
        if let Some(params) = s.strip_prefix("family:") {
            let (a, b) = params
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("map `{s}`: expected family:alpha,beta")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Parse(format!("map `{s}`: `{v}` is not a number")))
            };
            return Self::family(num(a)?, num(b)?);
        }
        Err(Error::Parse(format!(
            "unknown map `{s}` (expected pa, mc, ip, hc or family:alpha,beta)"
        )))
    }
}

/// `omega^2 / c^2 - |q|^2 - kappa^2`; zero exactly when each synthesized
/// component solves the positive-frequency wave equation.
pub fn positive_frequency_residual<T: Scalar>(map: &DispersionMap<T>, q: T, k: T) -> Result<T> {
    let kappa = map.kappa(q, k)?;
    let w = map.omega(q, k)? / map.c;
    Ok(w * w - q * q - kappa * kappa)
}

/// Spectral weight `omega / |d kappa / d k|` of the quantum inner product.
pub fn unitarity_weight<T: Scalar>(map: &DispersionMap<T>, q: T, k: T) -> Result<T> {
    let slope = map.dkappa_dk(q, k)?.abs();
    if slope == T::zero() || !slope.is_finite() {
        return Err(Error::SingularWeight {
            map: map.name.clone(),
            q: q.as_f64(),
            k: k.as_f64(),
        });
    }
    Ok(map.omega(q, k)? / slope)
}

/// Default small-`|q|` probe relative to the carrier.
pub const DEFAULT_PROBE_RATIO: f64 = 1e-6;

/// `(|kappa(p, k) - k| / k, |omega(p, k) - c k| / (c k))` at a small probe `p`.
pub fn consistency_residual<T: Scalar>(
    map: &DispersionMap<T>,
    k: T,
    probe_q: Option<T>,
) -> Result<(T, T)> {
    let p = probe_q.unwrap_or_else(|| T::lit(DEFAULT_PROBE_RATIO) * k);
    let kappa = map.kappa(p, k)?;
    let omega = map.omega(p, k)?;
    let ck = map.c * k;
    Ok(((kappa - k).abs() / k, (omega - ck).abs() / ck))
}

/// Evenly spaced lattice `min..=max` with `count` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LatticeRange {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let r = Self { min, max, count };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let degenerate = |why: &str| Err(Error::InvalidParameter(format!("range {self:?}: {why}")));
        if !(self.min.is_finite() && self.max.is_finite()) {
            return degenerate("bounds must be finite");
        }
        match self.count {
            0 => degenerate("count must be positive"),
            1 if self.min != self.max => degenerate("a single point needs min == max"),
            n if n > 1 && self.min >= self.max => degenerate("min must be below max"),
            _ => Ok(()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    fn nearest(&self, x: f64) -> f64 {
        self.values()
            .into_iter()
            .min_by(|a, b| (a - x).abs().partial_cmp(&(b - x).abs()).expect("finite"))
            .expect("non-empty range")
    }
}

/// Upper end of the transverse sweep used for the unitarity defect, as a
/// fraction of the carrier.
pub const SWEEP_Q_MAX_RATIO: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub beta: f64,
    pub unitarity_defect: f64,
    pub kappa_residual: f64,
    pub omega_residual: f64,
    /// `unitarity_defect + max(kappa_residual, omega_residual)`.
    pub combined: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub k: f64,
    pub alpha_range: LatticeRange,
    pub beta_range: LatticeRange,
    pub points: Vec<SweepPoint>,
    pub argmin: (f64, f64),
    pub min_combined: f64,
    /// Lattice point closest to `(ln 2, 1)`.
    pub nearest_to_target: (f64, f64),
    pub target_in_range: bool,
    pub max_unitarity_defect: f64,
}

impl UniquenessReport {
    /// The minimum of the combined residual sits on the lattice point nearest
    /// `(ln 2, 1)`, and that point is inside the scanned box.
    pub fn consistency_attained(&self) -> bool {
        self.target_in_range && self.argmin == self.nearest_to_target
    }
}

/// The unique consistent member of the unitary family.
pub fn target_parameters() -> (f64, f64) {
    (std::f64::consts::LN_2, 1.0)
}

/// Scans the `(alpha, beta)` lattice of unitary family maps, recording the
/// weight spread and the small-`|q|` consistency residual at each point.
pub fn uniqueness_sweep<T: Scalar>(
    alpha_range: LatticeRange,
    beta_range: LatticeRange,
    k: T,
) -> Result<UniquenessReport> {
    alpha_range.validate()?;
    beta_range.validate()?;
    let q_max = T::lit(SWEEP_Q_MAX_RATIO) * k;
    let mut points = Vec::with_capacity(alpha_range.count * beta_range.count);
    for &alpha in &alpha_range.values() {
        for &beta in &beta_range.values() {
            let map = DispersionMap::family(T::lit(alpha), T::lit(beta))?;
            let defect = unitarity_defect(&map, k, q_max)?.defect;
            let (kr, wr) = match consistency_residual(&map, k, None) {
                Ok((a, b)) => (a.as_f64(), b.as_f64()),
                Err(Error::Domain { .. }) => (f64::INFINITY, f64::INFINITY),
                Err(e) => return Err(e),
            };
            points.push(SweepPoint {
                alpha,
                beta,
                unitarity_defect: defect,
                kappa_residual: kr,
                omega_residual: wr,
                combined: defect + kr.max(wr),
            });
        }
    }
    let best = points
        .iter()
        .min_by(|a, b| a.combined.total_cmp(&b.combined))
        .expect("non-empty lattice");
    let (ta, tb) = target_parameters();
    Ok(UniquenessReport {
        k: k.as_f64(),
        alpha_range,
        beta_range,
        argmin: (best.alpha, best.beta),
        min_combined: best.combined,
        nearest_to_target: (alpha_range.nearest(ta), beta_range.nearest(tb)),
        target_in_range: alpha_range.contains(ta) && beta_range.contains(tb),
        max_unitarity_defect: points.iter().map(|p| p.unitarity_defect).fold(0.0, f64::max),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hc() -> DispersionMap<f64> {
        DispersionMap::henochromatic()
    }

    #[test]
    fn henochromatic_values() {
        let m = hc();
        assert!((m.kappa(0.2, 1.0).unwrap() - 0.99).abs() < 1e-15);
        assert!((m.omega(0.2, 1.0).unwrap() - 1.01).abs() < 1e-15);
    }

    #[test]
    fn paraxial_values_and_dropped_term() {
        let m = DispersionMap::<f64>::paraxial();
        assert!((m.kappa(0.2, 1.0).unwrap() - 0.98).abs() < 1e-15);
        assert_eq!(m.omega(0.2, 1.0).unwrap(), 1.0);
        let r = positive_frequency_residual(&m, 0.2, 1.0).unwrap();
        assert!((r + 0.0004).abs() < 1e-12);
    }

    #[test]
    fn monochromatic_rejects_evanescent_shell() {
        let m = DispersionMap::<f64>::monochromatic();
        assert!(matches!(m.kappa(1.2, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(m.kappa(1.0, 1.0), Err(Error::Domain { .. })));
        assert!(positive_frequency_residual(&m, 1.2, 1.0).is_err());
        assert!(m.kappa(0.6, 1.0).is_ok());
        assert!(!m.in_domain(1.5, 1.0));
    }

    #[test]
    fn family_reproduces_henochromatic_constants() {
        let m = DispersionMap::family(std::f64::consts::LN_2, 1.0).unwrap();
        for &(q, k) in &[(0.0, 1.0), (0.3, 2.0), (1.7, 0.4)] {
            assert!((m.kappa(q, k).unwrap() - (k - q * q / (4.0 * k))).abs() < 1e-13);
            assert!((m.omega(q, k).unwrap() - (k + q * q / (4.0 * k))).abs() < 1e-13);
        }
        assert!(DispersionMap::<f64>::family(0.1, 0.0).is_err());
    }

    #[test]
    fn family_weight_is_ck_over_abs_beta() {
        for &(a, b) in &[(0.2, 0.7), (1.0, -1.3), (0.0, 2.0)] {
            let m = DispersionMap::family(a, b).unwrap().with_speed_of_light(3.0).unwrap();
            let k = 1.7;
            let expected = 3.0 * k / f64::abs(b);
            let ws: Vec<f64> = (0..100)
                .map(|i| 1e-3 * 10f64.powf(3.0 * i as f64 / 99.0) * k)
                .map(|q| unitarity_weight(&m, q, k).unwrap())
                .collect();
            let spread = ws.iter().map(|w| (w / expected - 1.0).abs()).fold(0.0, f64::max);
            assert!(spread < 1e-12, "({a},{b}) spread {spread}");
        }
    }

    #[test]
    fn family_with_beta_two_is_inconsistent() {
        let m = DispersionMap::family(0.0, 2.0).unwrap();
        let (kr, _) = consistency_residual(&m, 1.0, None).unwrap();
        assert!(kr > 1e5);
        let (kr_coarse, _) = consistency_residual(&m, 1.0, Some(1e-2)).unwrap();
        assert!(kr > kr_coarse, "residual grows as the probe shrinks");
        assert!(m.kappa(0.0, 1.0).is_err());
    }

    #[test]
    fn eta_reproduces_henochromatic() {
        let m = DispersionMap::<f64>::eta("log", Arc::new(|r: f64| -(r / 2.0).ln()));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let k = rng.gen_range(0.5..3.0);
            let q = rng.gen_range(0.01..1.0) * k;
            let kc = k - q * q / (4.0 * k);
            assert!((m.kappa(q, k).unwrap() - kc).abs() < 1e-12 * k);
            assert!((m.omega(q, k).unwrap() - (k + q * q / (4.0 * k))).abs() < 1e-12 * k);
        }
        assert!(m.kappa(0.0, 1.0).is_err());
    }

    #[test]
    fn eta_maps_satisfy_positive_frequency_exactly() {
        let profiles: Vec<EtaFn<f64>> = vec![
            Arc::new(|r: f64| 1.0 - 2.0 * r),
            Arc::new(|r: f64| (1.0 / r).ln() + r * r),
            Arc::new(|_| 0.4),
        ];
        for eta in profiles {
            let m = DispersionMap::eta("custom", eta);
            for &q in &[0.05, 0.3, 0.9] {
                let r = positive_frequency_residual(&m, q, 1.0).unwrap();
                let scale = m.omega(q, 1.0).unwrap().powi(2);
                assert!(r.abs() <= 1e-12 * scale, "{r}");
            }
        }
    }

    #[test]
    fn constant_eta_fails_consistency() {
        let m = DispersionMap::<f64>::eta("flat", Arc::new(|_| 0.4));
        let ratios: Vec<f64> = [0.1, 0.5]
            .iter()
            .map(|&q| m.omega(q, 1.0).unwrap() / m.kappa(q, 1.0).unwrap())
            .collect();
        assert!((ratios[0] - ratios[1]).abs() < 1e-14);
        let (kr, _) = consistency_residual(&m, 1.0, None).unwrap();
        assert!(kr > 0.99);
    }

    #[test]
    fn positive_frequency_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let k: f64 = rng.gen_range(0.2..5.0);
            let q = rng.gen_range(0.0..0.95) * k;
            for m in [hc(), DispersionMap::initially_paraxial(), DispersionMap::monochromatic()] {
                let r = positive_frequency_residual(&m, q, k).unwrap();
                assert!(r.abs() <= 1e-12 * k * k, "{} {r}", m.name());
            }
            let p = positive_frequency_residual(&DispersionMap::paraxial(), q, k).unwrap();
            let exact = -q.powi(4) / (4.0 * k * k);
            assert!(p < 0.0 || q == 0.0);
            assert!((p - exact).abs() <= 1e-12 * k * k);
        }
    }

    #[test]
    fn henochromatic_weight_is_constant() {
        let m = hc().with_speed_of_light(2.0).unwrap();
        let k = 1.3;
        let spread = (0..200)
            .map(|i| 1e-3 * 10f64.powf(3.0 * i as f64 / 199.0) * k)
            .map(|q| (unitarity_weight(&m, q, k).unwrap() / (2.0 * k) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(spread < 1e-13, "{spread}");
    }

    #[test]
    fn initially_paraxial_weight_oracle() {
        // omega = sqrt(1 + 0.3^4/4), d kappa/dk = 1 + 0.3^2/2, both at k = 1
        let w = unitarity_weight(&DispersionMap::<f64>::initially_paraxial(), 0.3, 1.0).unwrap();
        let oracle = (1.0f64 + 0.0081 / 4.0).sqrt() / 1.045;
        assert!((w - oracle).abs() < 1e-15);
        assert!((w - 0.957_906_208_555_219_6).abs() < 1e-12);
        assert!(1.0 - w > 1e-2);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let maps = [
            DispersionMap::<f64>::paraxial(),
            DispersionMap::monochromatic(),
            DispersionMap::initially_paraxial(),
            hc(),
            DispersionMap::family(0.3, 1.4).unwrap(),
            DispersionMap::family(-0.5, 0.6).unwrap(),
        ];
        for m in &maps {
            for &(q, k) in &[(0.1, 1.0), (0.5, 2.0), (0.7, 0.9)] {
                let h = 1e-6 * k;
                let fd = (m.kappa(q, k + h).unwrap() - m.kappa(q, k - h).unwrap()) / (2.0 * h);
                let an = m.dkappa_dk(q, k).unwrap();
                assert!((fd - an).abs() <= 1e-6 * an.abs(), "{}: {fd} vs {an}", m.name());
            }
        }
    }

    #[test]
    fn consistency_limits() {
        let (kr, wr) = consistency_residual(&hc(), 1.0, None).unwrap();
        assert!((kr - 2.5e-13).abs() < 1e-16 && (wr - 2.5e-13).abs() < 1e-16);
        let (kr, wr) = consistency_residual(&DispersionMap::<f64>::family(0.0, 1.0).unwrap(), 1.0, None).unwrap();
        assert!((kr - 0.5).abs() < 1e-12 && (wr - 0.5).abs() < 1e-12);
        let (kr, wr) = consistency_residual(&DispersionMap::<f64>::monochromatic(), 1.0, None).unwrap();
        assert!((kr - 5e-13).abs() < 1e-16 && wr == 0.0);
    }

    #[test]
    fn singular_weight_is_reported() {
        // eta' = 0 gives d kappa / dk = 0
        let m = DispersionMap::<f64>::eta("flat", Arc::new(|_| 0.4));
        assert!(matches!(unitarity_weight(&m, 0.3, 1.0), Err(Error::SingularWeight { .. })));
    }

    #[test]
    fn parses_map_strings() {
        for tag in ["pa", "mc", "ip", "hc"] {
            assert_eq!(tag.parse::<DispersionMap<f64>>().unwrap().name(), tag);
        }
        let f: DispersionMap<f64> = "family:0.5,1.5".parse().unwrap();
        assert_eq!(f.name(), "family:0.5,1.5");
        assert!("family:0.5".parse::<DispersionMap<f64>>().is_err());
        assert!("family:1,0".parse::<DispersionMap<f64>>().is_err());
        assert!("xx".parse::<DispersionMap<f64>>().is_err());
    }

    #[test]
    fn lattice_ranges() {
        let r = LatticeRange::new(0.0, 1.4, 15).unwrap();
        let v = r.values();
        assert_eq!(v.len(), 15);
        assert_eq!(v[14], 1.4);
        assert!((v[7] - 0.7).abs() < 1e-15);
        assert!(LatticeRange::new(1.0, 0.0, 3).is_err());
        assert!(LatticeRange::new(0.0, 1.0, 0).is_err());
        assert!(LatticeRange::new(0.0, 1.0, 1).is_err());
        assert_eq!(LatticeRange::new(0.5, 0.5, 1).unwrap().values(), vec![0.5]);
    }

    #[test]
    fn sweep_singles_out_ln2_and_one() {
        let rep = uniqueness_sweep(
            LatticeRange::new(0.0, 1.4, 15).unwrap(),
            LatticeRange::new(0.5, 1.5, 15).unwrap(),
            1.0f64,
        )
        .unwrap();
        assert_eq!(rep.points.len(), 225);
        assert!(rep.max_unitarity_defect < 1e-12);
        assert!((rep.argmin.0 - 0.7).abs() < 1e-12 && rep.argmin.1 == 1.0);
        assert!(rep.consistency_attained());
    }

    #[test]
    fn sweep_without_beta_one_is_not_attained() {
        let rep = uniqueness_sweep(
            LatticeRange::new(0.0, 1.4, 15).unwrap(),
            LatticeRange::new(1.2, 1.5, 4).unwrap(),
            1.0f64,
        )
        .unwrap();
        assert!(!rep.target_in_range);
        assert!(!rep.consistency_attained());
    }
}
