use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use henochromatic::grid::write_envelope_csv;
use henochromatic::modes::ModeFamily;
use henochromatic::pulse::NullSampling;
use henochromatic::quantum::{CarrierSpectra, DefectReport, WeightSample};
use henochromatic::synthesis::wave_residual_spectral_norm;
use henochromatic::*;
use log::info;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{GridConfig, RunConfig};
use crate::{CliError, ModesArgs, MapsArgs, PulseArgs, RoundtripArgs, SynthArgs, UniquenessArgs, UnitarityArgs};

/// Module-level tolerances enforced by the exit status.
const NORM_TOL: f64 = 1e-8;
const PROPORTIONALITY_TOL: f64 = 1e-10;
const ROUNDTRIP_TOL: f64 = 1e-10;
const NULL_PLANE_TOL: f64 = 1e-13;

fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<(), CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_envelope(path: &Path, env: &SampledEnvelope) -> Result<(), CliError> {
    let file = BufWriter::new(File::create(path)?);
    write_envelope_csv(env, file)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn pair(c: Complex) -> [f64; 2] {
    [c.re, c.im]
}

fn parse_mode(s: &str) -> Result<ModeSpec, CliError> {
    s.parse::<ModeSpec>().map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_map(s: &str) -> Result<DispersionMap, CliError> {
    s.parse::<DispersionMap>().map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_triple(what: &str, s: &str) -> Result<(f64, f64, usize), CliError> {
    let bad = || CliError::Usage(format!("{what}: expected `start,stop,count`, got `{s}`"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    Ok((
        a.parse().map_err(|_| bad())?,
        b.parse().map_err(|_| bad())?,
        n.parse().map_err(|_| bad())?,
    ))
}

fn linspace(what: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let (a, b, n) = parse_triple(what, s)?;
    match n {
        0 => Err(CliError::Usage(format!("{what}: count must be positive"))),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn file_tag(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

#[derive(Serialize)]
struct ModesReport<'a> {
    seed: u64,
    grid: &'a GridConfig,
    modes: Vec<String>,
    norms: Vec<f64>,
    /// Entries as `[re, im]`.
    gram: Vec<Vec<[f64; 2]>>,
}

pub fn modes(cfg: &RunConfig, args: &ModesArgs) -> Result<(), CliError> {
    let grid = cfg.transverse_grid()?;
    let specs = args.modes.iter().map(|s| parse_mode(s)).collect::<Result<Vec<_>, _>>()?;
    let beams = specs
        .iter()
        .map(|s| ParaxialBeam::from_mode(s, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    write_envelope(&cfg.output_dir.join("modes_envelope.csv"), &beams[0].envelope()?)?;
    let gram = gram_matrix(&beams)?;
    let report = ModesReport {
        seed: cfg.seed,
        grid: &cfg.grid,
        modes: specs.iter().map(ToString::to_string).collect(),
        norms: beams.iter().map(|b| b.norm()).collect(),
        gram: gram.iter().map(|row| row.iter().map(|&c| pair(c)).collect()).collect(),
    };
    write_json(&cfg.output_dir, "modes.json", &report)?;
    if let Some((m, n)) = report.modes.iter().zip(&report.norms).find(|(_, n)| (*n - 1.0).abs() > NORM_TOL) {
        return Err(CliError::Breach(format!("norm of {m} is {n}, expected 1 within {NORM_TOL:e}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ResidualSample {
    q: f64,
    residual: Option<f64>,
}

#[derive(Serialize)]
struct MapsReport {
    seed: u64,
    #[serde(flatten)]
    sweep: DefectReport,
    residual_samples: Vec<ResidualSample>,
}

pub fn maps(cfg: &RunConfig, args: &MapsArgs) -> Result<(), CliError> {
    let map = parse_map(&args.map)?;
    let sweep = weight_sweep(&map, args.k, args.q_max)?;
    let residual_samples = sweep
        .weight_samples
        .iter()
        .map(|WeightSample { q, .. }| ResidualSample {
            q: *q,
            residual: positive_frequency_residual(&map, *q, args.k).ok(),
        })
        .collect();
    let flagged = sweep.flagged();
    let report = MapsReport {
        seed: cfg.seed,
        sweep,
        residual_samples,
    };
    write_json(&cfg.output_dir, &format!("maps_{}.json", file_tag(map.name())), &report)?;
    if flagged > 0 {
        log::warn!("{flagged} samples of `{}` fall outside its domain", map.name());
    }
    Ok(())
}

fn parse_range(what: &str, s: &str) -> Result<LatticeRange, CliError> {
    let (a, b, n) = parse_triple(what, s)?;
    LatticeRange::new(a, b, n).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Serialize)]
struct UniquenessOutput {
    seed: u64,
    #[serde(flatten)]
    report: UniquenessReport,
    consistency_attained: bool,
}

pub fn uniqueness(cfg: &RunConfig, args: &UniquenessArgs) -> Result<(), CliError> {
    let alpha = parse_range("--alpha", &args.alpha)?;
    let beta = parse_range("--beta", &args.beta)?;
    let report = uniqueness_sweep(alpha, beta, args.k)?;
    let attained = report.consistency_attained();
    let (a, b) = report.argmin;
    let min = report.min_combined;
    write_json(
        &cfg.output_dir,
        "uniqueness.json",
        &UniquenessOutput {
            seed: cfg.seed,
            report,
            consistency_attained: attained,
        },
    )?;
    if !attained {
        let (ta, tb) = target_parameters();
        return Err(CliError::Breach(format!(
            "consistency unattained: minimum {min:.3e} at ({a}, {b}), which is not the lattice point nearest ({ta}, {tb}) inside the scanned box"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PairReport {
    a: String,
    b: String,
    carrier: f64,
    quantum_gram: [[[f64; 2]; 2]; 2],
    paraxial_gram: [[[f64; 2]; 2]; 2],
}

#[derive(Serialize)]
struct CarrierSummary {
    k: f64,
    pairs: usize,
    constant: f64,
    relative_spread: f64,
    offdiag_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_constant: Option<f64>,
}

#[derive(Serialize)]
struct UnitarityReport {
    seed: u64,
    map: String,
    comb: CarrierComb,
    constants: PhysicalConstants,
    pairs: Vec<PairReport>,
    carriers: Vec<CarrierSummary>,
    relative_spread: f64,
    offdiag_residual: f64,
}

fn random_hg_pairs(rng: &mut ChaCha8Rng, comb: &CarrierComb, count: usize) -> Vec<(ModeSpec, ModeSpec)> {
    let mut draw = |k: f64| {
        let (m, n) = (rng.gen_range(0..4), rng.gen_range(0..4));
        ModeSpec::new(ModeFamily::HermiteGauss { m, n }, rng.gen_range(1.0..1.5), k).expect("valid mode")
    };
    let carriers = comb.carriers();
    (0..count)
        .map(|i| {
            let k = carriers[i % carriers.len()];
            (draw(k), draw(k))
        })
        .collect()
}

pub fn unitarity(cfg: &RunConfig, args: &UnitarityArgs) -> Result<(), CliError> {
    let grid = cfg.transverse_grid()?;
    let comb = cfg.carrier_comb()?;
    let consts = cfg.physical_constants()?;
    let map = parse_map(&args.map)?.with_speed_of_light(consts.c)?;
    let specs = if args.pairs.is_empty() {
        random_hg_pairs(&mut ChaCha8Rng::seed_from_u64(cfg.seed), &comb, 5)
    } else {
        args.pairs
            .iter()
            .map(|p| match p.split_whitespace().collect::<Vec<_>>().as_slice() {
                [a, b] => Ok((parse_mode(a)?, parse_mode(b)?)),
                _ => Err(CliError::Usage(format!("--pair expects two mode strings, got `{p}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?
    };

    let mut pairs = Vec::new();
    // (carrier, diagonal ratios, off-diagonal (quantum, paraxial) entries)
    let mut groups: Vec<(f64, Vec<f64>, Vec<(Complex, Complex)>)> = Vec::new();
    for (sa, sb) in &specs {
        if sa.carrier != sb.carrier {
            return Err(CliError::Usage(format!("pair {sa} / {sb} mixes carriers")));
        }
        let k = sa.carrier;
        let beams = [ParaxialBeam::from_mode(sa, &grid)?, ParaxialBeam::from_mode(sb, &grid)?];
        let mut qg = [[Complex::new(0.0, 0.0); 2]; 2];
        let mut pg = qg;
        for i in 0..2 {
            for j in 0..2 {
                qg[i][j] = inner_product_spectral(
                    beams[i].spectrum(), k, &map, beams[j].spectrum(), k, &map, &comb, &consts,
                )?;
                pg[i][j] = paraxial_inner_product(&beams[i], &beams[j])?;
            }
        }
        let idx = match groups.iter().position(|g| g.0 == k) {
            Some(i) => i,
            None => {
                groups.push((k, Vec::new(), Vec::new()));
                groups.len() - 1
            }
        };
        let g = &mut groups[idx];
        g.1.extend([qg[0][0].re / pg[0][0].re, qg[1][1].re / pg[1][1].re]);
        g.2.extend([(qg[0][1], pg[0][1]), (qg[1][0], pg[1][0])]);
        let conv = |m: [[Complex; 2]; 2]| m.map(|row| row.map(pair));
        pairs.push(PairReport {
            a: sa.to_string(),
            b: sb.to_string(),
            carrier: k,
            quantum_gram: conv(qg),
            paraxial_gram: conv(pg),
        });
    }

    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    let carriers: Vec<CarrierSummary> = groups
        .iter()
        .map(|(k, ratios, off)| {
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));
            let offdiag = off.iter().map(|(q, p)| (q - p * mean).norm() / mean.abs()).fold(0.0, f64::max);
            let expected = map.is_henochromatic().then(|| proportionality_constant(*k, &comb, &consts));
            let spread = match expected {
                Some(e) => ((hi - lo) / mean.abs()).max((mean - e).abs() / e),
                None => (hi - lo) / mean.abs(),
            };
            CarrierSummary {
                k: *k,
                pairs: ratios.len() / 2,
                constant: mean,
                relative_spread: spread,
                offdiag_residual: offdiag,
                expected_constant: expected,
            }
        })
        .collect();
    let relative_spread = carriers.iter().map(|c| c.relative_spread).fold(0.0, f64::max);
    let offdiag_residual = carriers.iter().map(|c| c.offdiag_residual).fold(0.0, f64::max);
    write_json(
        &cfg.output_dir,
        "unitarity.json",
        &UnitarityReport {
            seed: cfg.seed,
            map: map.name().to_string(),
            comb,
            constants: consts,
            pairs,
            carriers,
            relative_spread,
            offdiag_residual,
        },
    )?;
    if relative_spread > PROPORTIONALITY_TOL {
        return Err(CliError::Breach(format!(
            "relative_spread {relative_spread:.3e} exceeds {PROPORTIONALITY_TOL:e}"
        )));
    }
    if offdiag_residual > PROPORTIONALITY_TOL {
        return Err(CliError::Breach(format!(
            "offdiag_residual {offdiag_residual:.3e} exceeds {PROPORTIONALITY_TOL:e}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct RoundtripReport<'a> {
    seed: u64,
    grid: &'a GridConfig,
    comb: CarrierComb,
    v: f64,
    u_samples: usize,
    per_carrier_error: Vec<f64>,
    max_error: f64,
}

pub fn roundtrip(cfg: &RunConfig, args: &RoundtripArgs) -> Result<(), CliError> {
    let grid = cfg.transverse_grid()?;
    let comb = cfg.carrier_comb()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = grid.n();
    let spectra = (0..comb.count())
        .map(|_| {
            let values = Array2::from_shape_fn((n, n), |_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            SpectralAmplitude::new(grid.clone(), values)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spectra = CarrierSpectra::new(comb, spectra)?;
    let us = NullSampling::period_stations(&comb, comb.count());
    let u_samples = us.len();
    let sampling = NullSampling::new(grid.clone(), us, vec![args.v])?;
    let field = synthesize_multicarrier(&spectra, &DispersionMap::henochromatic(), &sampling)?;
    let back = field.decompose_at(0, &comb)?;
    let per_carrier_error: Vec<f64> = back
        .spectra()
        .iter()
        .zip(spectra.spectra())
        .map(|(a, b)| {
            let diff = a.combine(Complex::new(1.0, 0.0), b, Complex::new(-1.0, 0.0))?;
            Ok(diff.norm() / b.norm())
        })
        .collect::<Result<_, henochromatic::Error>>()?;
    let max_error = per_carrier_error.iter().copied().fold(0.0, f64::max);
    write_json(
        &cfg.output_dir,
        "roundtrip.json",
        &RoundtripReport {
            seed: cfg.seed,
            grid: &cfg.grid,
            comb,
            v: args.v,
            u_samples,
            per_carrier_error,
            max_error,
        },
    )?;
    if max_error > ROUNDTRIP_TOL {
        return Err(CliError::Breach(format!("max_error {max_error:.3e} exceeds {ROUNDTRIP_TOL:e}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct PulseOutput {
    seed: u64,
    grid: GridConfig,
    #[serde(flatten)]
    report: PulseReport,
}

pub fn pulse(cfg: &RunConfig, args: &PulseArgs) -> Result<(), CliError> {
    let mode = parse_mode(&args.mode)?;
    let spec = PulseSpec::new(mode, args.sigma)?;
    let grid_cfg = GridConfig {
        n: cfg.grid.n,
        extent: args.extent.unwrap_or(16.0 * mode.waist),
    };
    let grid = TransverseGrid::new(grid_cfg.n, grid_cfg.extent)?;
    if args.u_points < 2 {
        return Err(CliError::Usage("--u-points must be at least 2".into()));
    }
    let span = 2.0 / args.sigma;
    let us: Vec<f64> = (0..args.u_points)
        .map(|i| -span + 2.0 * span * i as f64 / (args.u_points - 1) as f64)
        .collect();
    let times = args
        .times
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--times: bad value `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let report = pulse_compare(&spec, &grid, &us, &times, 0.0)?;
    let csv = BufWriter::new(File::create(cfg.output_dir.join("pulse_curve.csv"))?);
    report.write_curve_csv(csv)?;
    let residual = report.null_plane_residual;
    write_json(
        &cfg.output_dir,
        "pulse.json",
        &PulseOutput {
            seed: cfg.seed,
            grid: grid_cfg,
            report,
        },
    )?;
    if residual > NULL_PLANE_TOL {
        return Err(CliError::Breach(format!(
            "null_plane_residual {residual:.3e} exceeds {NULL_PLANE_TOL:e}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct StationFile {
    iz: usize,
    it: usize,
    z: f64,
    t: f64,
    file: String,
}

#[derive(Serialize)]
struct SynthManifest<'a> {
    seed: u64,
    mode: String,
    carrier: f64,
    map: String,
    grid: &'a GridConfig,
    z_stations: Vec<f64>,
    t_stations: Vec<f64>,
    stations: Vec<StationFile>,
    wave_residual_spectral_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wave_residual_grid: Option<f64>,
}

pub fn synth(cfg: &RunConfig, args: &SynthArgs) -> Result<(), CliError> {
    let grid = cfg.transverse_grid()?;
    let mode = parse_mode(&args.mode)?;
    let map = parse_map(&args.map)?;
    let zs = linspace("--z", &args.z)?;
    let ts = linspace("--t", &args.t)?;
    let beam = ParaxialBeam::from_mode(&mode, &grid)?;
    let sampling = SpacetimeSampling::new(grid, zs.clone(), ts.clone())?;
    let field = synthesize(beam.spectrum(), mode.carrier, &map, &sampling)?;
    let dir = cfg.output_dir.join("synth");
    fs::create_dir_all(&dir)?;
    let mut stations = Vec::new();
    for (iz, &z) in zs.iter().enumerate() {
        for (it, &t) in ts.iter().enumerate() {
            let name = format!("station_{iz}_{it}.csv");
            write_envelope(&dir.join(&name), &field.envelope(iz, it)?)?;
            stations.push(StationFile {
                iz,
                it,
                z,
                t,
                file: format!("synth/{name}"),
            });
        }
    }
    let grid_residual = if zs.len() >= 3 && ts.len() >= 3 {
        Some(wave_residual_grid(&field)?)
    } else {
        None
    };
    write_json(
        &cfg.output_dir,
        "synth.json",
        &SynthManifest {
            seed: cfg.seed,
            mode: mode.to_string(),
            carrier: mode.carrier,
            map: map.name().to_string(),
            grid: &cfg.grid,
            z_stations: zs,
            t_stations: ts,
            stations,
            wave_residual_spectral_norm: wave_residual_spectral_norm(beam.spectrum(), mode.carrier, &map)?,
            wave_residual_grid: grid_residual,
        },
    )
}
