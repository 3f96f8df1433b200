//! Sampled transverse fields and the continuum-normalized Fourier pair.
//!
//! Positions sit at `x_i = (i - n/2) * dx` so the origin is a lattice point.
//! Wave vectors use DFT ordering, `q_m = m * dq` for `m < n/2` and
//! `(m - n) * dq` above, with `dq = 2 pi / L`.
//!
//! The transform pair is
//!
//! ```text
//! F(q) = 1/(2 pi) * sum_s  dx^2 Xi(s) exp(-i q.s)
//! Xi(s) = 1/(2 pi) * sum_q dq^2 F(q)  exp(+i q.s)
//! ```
//!
//! which is exactly unitary between the two lattice inner products.
//! Arrays are indexed `[ix, iy]`.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::sync::Arc;

use ndarray::Array2;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Scalar};

/// Smallest window-to-waist ratio that keeps periodic wrap-around negligible.
pub const MIN_EXTENT_PER_WAIST: f64 = 8.0;

/// Square periodic window of `n x n` samples and its conjugate lattice.
#[derive(Clone)]
pub struct TransverseGrid<T: Scalar> {
    n: usize,
    extent: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> fmt::Debug for TransverseGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransverseGrid")
            .field("n", &self.n)
            .field("extent", &self.extent)
            .finish()
    }
}

impl<T: Scalar> PartialEq for TransverseGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.extent == other.extent
    }
}

impl<T: Scalar> TransverseGrid<T> {
    /// `n` must be a power of two no smaller than 8, `extent` positive.
    pub fn new(n: usize, extent: T) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two >= 8"
            )));
        }
        if !(extent.is_finite() && extent > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "extent = {extent} must be positive and finite"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            extent,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    /// Sample spacing `L / n`.
    pub fn spacing(&self) -> T {
        self.extent / T::from_count(self.n)
    }

    /// Wave-vector lattice spacing `2 pi / L`.
    pub fn q_step(&self) -> T {
        T::TAU() / self.extent
    }

    /// Largest wave-vector component magnitude, `pi n / L`.
    pub fn q_max(&self) -> T {
        T::PI() * T::from_count(self.n) / self.extent
    }

    pub fn cell_area(&self) -> T {
        let dx = self.spacing();
        dx * dx
    }

    pub fn spectral_cell_area(&self) -> T {
        let dq = self.q_step();
        dq * dq
    }

    /// Signed DFT index of lattice slot `m`.
    pub fn signed_index(&self, m: usize) -> isize {
        if m < self.n / 2 {
            m as isize
        } else {
            m as isize - self.n as isize
        }
    }

    pub fn position(&self, i: usize) -> T {
        (T::from_count(i) - T::from_count(self.n / 2)) * self.spacing()
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.n).map(|i| self.position(i)).collect()
    }

    pub fn wavenumber(&self, m: usize) -> T {
        T::lit(self.signed_index(m) as f64) * self.q_step()
    }

    /// Wave-vector components per axis in DFT order.
    pub fn q_lattice(&self) -> Vec<T> {
        (0..self.n).map(|m| self.wavenumber(m)).collect()
    }

    /// Wave-vector components sorted ascending, for reporting.
    pub fn q_sorted(&self) -> Vec<T> {
        let mut q = self.q_lattice();
        q.sort_by(|a, b| a.partial_cmp(b).expect("finite lattice"));
        q
    }

    /// `|q|^2` at lattice slot `(mx, my)`.
    pub fn q_norm_sq(&self, mx: usize, my: usize) -> T {
        let qx = self.wavenumber(mx);
        let qy = self.wavenumber(my);
        qx * qx + qy * qy
    }

    /// Emits a warning when the window is too narrow for a beam of waist `waist`.
    pub fn check_waist(&self, waist: T) -> bool {
        let ok = self.extent >= T::lit(MIN_EXTENT_PER_WAIST) * waist;
        if !ok {
            log::warn!(
                "window extent {} is below {}x the waist {}; wrap-around may exceed tolerances",
                self.extent,
                MIN_EXTENT_PER_WAIST,
                waist
            );
        }
        ok
    }

    fn check_shape(&self, values: &Array2<Cplx<T>>) -> Result<()> {
        if values.dim() != (self.n, self.n) {
            return Err(Error::InvalidGrid(format!(
                "sample array {:?} does not match {}x{} grid",
                values.dim(),
                self.n,
                self.n
            )));
        }
        Ok(())
    }

    /// Unnormalized 2D DFT in place, `exp(-i..)` when `forward`.
    fn fft2(&self, values: &mut Array2<Cplx<T>>, forward: bool) {
        let plan = if forward { &self.forward } else { &self.inverse };
        let n = self.n;
        let mut scratch = vec![Cplx::zero(); plan.get_inplace_scratch_len()];
        {
            let buf = values.as_slice_mut().expect("standard layout");
            plan.process_with_scratch(buf, &mut scratch);
        }
        let mut transposed = Array2::from_shape_fn((n, n), |(i, j)| values[[j, i]]);
        {
            let buf = transposed.as_slice_mut().expect("standard layout");
            plan.process_with_scratch(buf, &mut scratch);
        }
        for ((i, j), v) in values.indexed_iter_mut() {
            *v = transposed[[j, i]];
        }
    }
}

fn parity_sign<T: Scalar>(mx: usize, my: usize) -> T {
    if (mx + my).is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

fn ensure_finite<T: Scalar>(values: &Array2<Cplx<T>>) -> Result<()> {
    for ((i, j), v) in values.indexed_iter() {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(i, j));
        }
    }
    Ok(())
}

/// Complex envelope samples at one longitudinal station.
#[derive(Clone, Debug)]
pub struct SampledEnvelope<T: Scalar> {
    grid: TransverseGrid<T>,
    values: Array2<Cplx<T>>,
    station: T,
}

impl<T: Scalar> SampledEnvelope<T> {
    pub fn new(grid: TransverseGrid<T>, values: Array2<Cplx<T>>, station: T) -> Result<Self> {
        grid.check_shape(&values)?;
        ensure_finite(&values)?;
        if !station.is_finite() {
            return Err(Error::InvalidParameter(format!("station {station} is not finite")));
        }
        Ok(Self {
            grid,
            values,
            station,
        })
    }

    /// Samples `f(x, y)` on the grid positions.
    pub fn from_fn(
        grid: &TransverseGrid<T>,
        station: T,
        f: impl Fn(T, T) -> Cplx<T>,
    ) -> Result<Self> {
        let xs = grid.positions();
        let values = Array2::from_shape_fn((grid.n, grid.n), |(i, j)| f(xs[i], xs[j]));
        Self::new(grid.clone(), values, station)
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Cplx<T>> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Cplx<T>> {
        self.values
    }

    pub fn station(&self) -> T {
        self.station
    }

    pub fn with_station(mut self, station: T) -> Self {
        self.station = station;
        self
    }

    pub fn norm(&self) -> T {
        l2_norm(self)
    }
}

/// Complex spectral samples `F(q)` on the wave-vector lattice.
#[derive(Clone, Debug)]
pub struct SpectralAmplitude<T: Scalar> {
    grid: TransverseGrid<T>,
    values: Array2<Cplx<T>>,
}

impl<T: Scalar> SpectralAmplitude<T> {
    pub fn new(grid: TransverseGrid<T>, values: Array2<Cplx<T>>) -> Result<Self> {
        grid.check_shape(&values)?;
        ensure_finite(&values)?;
        Ok(Self { grid, values })
    }

    /// Samples `f(qx, qy)` on the lattice (DFT order).
    pub fn from_fn(grid: &TransverseGrid<T>, f: impl Fn(T, T) -> Cplx<T>) -> Result<Self> {
        let qs = grid.q_lattice();
        let values = Array2::from_shape_fn((grid.n, grid.n), |(i, j)| f(qs[i], qs[j]));
        Self::new(grid.clone(), values)
    }

    pub fn zeros(grid: &TransverseGrid<T>) -> Self {
        Self {
            grid: grid.clone(),
            values: Array2::zeros((grid.n, grid.n)),
        }
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Cplx<T>> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Cplx<T>> {
        self.values
    }

    /// Pointwise product with a lattice function of `(qx, qy)`.
    pub fn map_lattice(&self, f: impl Fn(T, T, Cplx<T>) -> Cplx<T>) -> Self {
        let qs = self.grid.q_lattice();
        let mut values = self.values.clone();
        for ((i, j), v) in values.indexed_iter_mut() {
            *v = f(qs[i], qs[j], *v);
        }
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `a * self + b * other` on a common grid.
    pub fn combine(&self, a: Cplx<T>, other: &Self, b: Cplx<T>) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let mut values = self.values.clone();
        for (v, w) in values.iter_mut().zip(other.values.iter()) {
            *v = a * *v + b * *w;
        }
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn norm(&self) -> T {
        l2_norm(self)
    }
}

/// Common view of lattice-sampled fields for the discrete inner product.
pub trait LatticeField<T: Scalar> {
    fn grid(&self) -> &TransverseGrid<T>;
    fn samples(&self) -> &Array2<Cplx<T>>;
    /// Area weight of one lattice cell.
    fn cell_measure(&self) -> T;
}

impl<T: Scalar> LatticeField<T> for SampledEnvelope<T> {
    fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }
    fn samples(&self) -> &Array2<Cplx<T>> {
        &self.values
    }
    fn cell_measure(&self) -> T {
        self.grid.cell_area()
    }
}

impl<T: Scalar> LatticeField<T> for SpectralAmplitude<T> {
    fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }
    fn samples(&self) -> &Array2<Cplx<T>> {
        &self.values
    }
    fn cell_measure(&self) -> T {
        self.grid.spectral_cell_area()
    }
}

pub(crate) fn same_grid<T: Scalar>(a: &TransverseGrid<T>, b: &TransverseGrid<T>) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!(
            "n = {}, L = {} vs n = {}, L = {}",
            a.n, a.extent, b.n, b.extent
        )));
    }
    Ok(())
}

/// Riemann sum of `conj(a) * b` weighted by the cell measure.
pub fn l2_inner_product<T: Scalar, F: LatticeField<T>>(a: &F, b: &F) -> Result<Cplx<T>> {
    same_grid(a.grid(), b.grid())?;
    let sum: Cplx<T> = a
        .samples()
        .iter()
        .zip(b.samples().iter())
        .map(|(x, y)| x.conj() * y)
        .fold(Cplx::zero(), |acc, v| acc + v);
    Ok(sum * a.cell_measure())
}

pub fn l2_norm<T: Scalar, F: LatticeField<T>>(a: &F) -> T {
    let s: T = a.samples().iter().map(|v| v.norm_sqr()).sum();
    (s * a.cell_measure()).sqrt()
}

/// Continuum-normalized forward transform `Xi(s) -> F(q)`.
pub fn forward_transform<T: Scalar>(env: &SampledEnvelope<T>) -> Result<SpectralAmplitude<T>> {
    ensure_finite(&env.values)?;
    let grid = &env.grid;
    let mut values = env.values.clone();
    grid.fft2(&mut values, true);
    let scale = grid.cell_area() / T::TAU();
    for ((mx, my), v) in values.indexed_iter_mut() {
        *v *= scale * parity_sign::<T>(mx, my);
    }
    Ok(SpectralAmplitude {
        grid: grid.clone(),
        values,
    })
}

/// Continuum-normalized inverse transform `F(q) -> Xi(s)`, tagged with `station`.
pub fn inverse_transform<T: Scalar>(
    amp: &SpectralAmplitude<T>,
    station: T,
) -> Result<SampledEnvelope<T>> {
    ensure_finite(&amp.values)?;
    let grid = &amp.grid;
    let scale = grid.spectral_cell_area() / T::TAU();
    let mut values = amp.values.clone();
    for ((mx, my), v) in values.indexed_iter_mut() {
        *v *= scale * parity_sign::<T>(mx, my);
    }
    grid.fft2(&mut values, false);
    SampledEnvelope::new(grid.clone(), values, station)
}

/// Transverse Laplacian evaluated spectrally (multiplication by `-|q|^2`).
pub fn spectral_laplacian<T: Scalar>(env: &SampledEnvelope<T>) -> Result<SampledEnvelope<T>> {
    let amp = forward_transform(env)?;
    let lap = amp.map_lattice(|qx, qy, v| v * -(qx * qx + qy * qy));
    inverse_transform(&lap, env.station)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes an envelope as CSV: a metadata row, a column header, then one
/// `(ix, iy, x, y, re, im)` row per sample with 17 significant digits.
pub fn write_envelope_csv<T: Scalar, W: Write>(env: &SampledEnvelope<T>, mut w: W) -> io::Result<()> {
    let grid = &env.grid;
    writeln!(
        w,
        "# n={} extent={} station={}",
        grid.n,
        sci(grid.extent.as_f64()),
        sci(env.station.as_f64())
    )?;
    writeln!(w, "ix,iy,x,y,re,im")?;
    let xs = grid.positions();
    for ix in 0..grid.n {
        for iy in 0..grid.n {
            let v = env.values[[ix, iy]];
            writeln!(
                w,
                "{ix},{iy},{},{},{},{}",
                sci(xs[ix].as_f64()),
                sci(xs[iy].as_f64()),
                sci(v.re.as_f64()),
                sci(v.im.as_f64())
            )?;
        }
    }
    Ok(())
}

/// Reads back a dump written by [`write_envelope_csv`].
pub fn read_envelope_csv<T: Scalar, R: BufRead>(r: R) -> Result<SampledEnvelope<T>> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of csv".into()))?
            .map_err(|e| Error::Parse(e.to_string()))
    };
    let meta = next()?;
    let mut n = None;
    let mut extent = None;
    let mut station = None;
    for item in meta.trim_start_matches('#').split_whitespace() {
        let (key, val) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad metadata item `{item}`")))?;
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        match key {
            "n" => n = Some(val.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
            "extent" => extent = Some(parse_f(val)?),
            "station" => station = Some(parse_f(val)?),
            _ => return Err(Error::Parse(format!("unknown metadata key `{key}`"))),
        }
    }
    let (n, extent, station) = match (n, extent, station) {
        (Some(n), Some(e), Some(s)) => (n, e, s),
        _ => return Err(Error::Parse("incomplete metadata row".into())),
    };
    let grid = TransverseGrid::new(n, T::lit(extent))?;
    if next()?.trim() != "ix,iy,x,y,re,im" {
        return Err(Error::Parse("missing column header".into()));
    }
    let mut values = Array2::<Cplx<T>>::zeros((n, n));
    let mut seen = 0usize;
    for line in lines {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Parse(format!("expected 6 columns, got {}", cols.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
        let (ix, iy) = (idx(cols[0])?, idx(cols[1])?);
        if ix >= n || iy >= n {
            return Err(Error::Parse(format!("index ({ix}, {iy}) out of range")));
        }
        values[[ix, iy]] = Cplx::new(T::lit(num(cols[4])?), T::lit(num(cols[5])?));
        seen += 1;
    }
    if seen != n * n {
        return Err(Error::Parse(format!("expected {} rows, got {seen}", n * n)));
    }
    SampledEnvelope::new(grid, values, T::lit(station))
}

/// `exp(i theta)` helper.
#[inline]
pub(crate) fn cis<T: Scalar>(theta: T) -> Cplx<T> {
    let (s, c) = theta.sin_cos();
    Cplx::new(c, s)
}
