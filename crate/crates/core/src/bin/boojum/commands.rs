use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use boojum::closedform_inf::{d_inf_exact, n_exact_from};
use boojum::geodesic::{
    abmap as trace_heatmap, build_frame, minimize_lambda0, write_abmap_csv, write_angle_path_csv, AnglePath,
    AnglePathHeader,
};
use boojum::profile1d::io::write_profile_csv;
use boojum::profile1d::{d_lambda, Grid1D, SolveOptions, SolveReport, StartOutcome};
use boojum::qtensor::uniaxial;
use boojum::recovery::{
    energy_report_inf, FinConstruction, InfConstruction, RecoveryParamsFin, RecoveryParamsInf, RegionEnergyReport,
};
use boojum::sphere::{
    integrate_d_sphere, longitudinal_inf_exact, optimal_tangent_scan, radial_inf_exact, BoundaryCondition,
    DensitySource, QuadratureSpec, ScanResult, SphereReport, SurfacePoint,
};
use boojum::{Director, Error, Lambda, PotentialParams, Result, S0Tensor, SCHEMA_VERSION};
use nalgebra::Vector3;
use serde::Serialize;

use crate::{AbmapArgs, Bc, Common, Density, DlambdaArgs, Failure, Format, GridArgs, Mode, RecoveryArgs, ScanArgs, SphereArgs};

/// `Ok(false)` means the output was written but a solver reported non-convergence.
type Outcome = std::result::Result<bool, Failure>;

fn grid(g: &GridArgs) -> Result<Grid1D> {
    Grid1D::new(g.t_max, g.nodes)
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(common: &Common, f: impl FnOnce(&mut Box<dyn Write>) -> Result<()>) -> Result<()> {
    let mut out = open(common.output.as_deref())?;
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// `dir/stem_suffix.csv` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidArgument(format!("{name} = {x} must be finite")))
    }
}

fn source(density: Option<Density>, lambda: Lambda, g: &GridArgs) -> Result<DensitySource> {
    let exact = density.unwrap_or(if lambda.is_infinite() { Density::Exact } else { Density::Minimized });
    Ok(match exact {
        Density::Exact => {
            if !lambda.is_infinite() {
                return Err(Error::InvalidArgument("--density exact requires --lambda inf".into()));
            }
            DensitySource::Exact
        }
        Density::Minimized => DensitySource::Minimized { grid: grid(g)?, opts: SolveOptions::default() },
    })
}

#[derive(Serialize)]
struct ReducedCheck {
    energy: f64,
    converged: bool,
    difference: f64,
}

#[derive(Serialize)]
struct DlambdaOut<'a> {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    lambda: Lambda,
    #[serde(skip_serializing_if = "Option::is_none")]
    v3: Option<f64>,
    q0: [f64; 5],
    grid: Grid1D,
    d: f64,
    converged: bool,
    best_start: usize,
    starts: &'a [StartOutcome],
    report: &'a SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced_lambda0: Option<ReducedCheck>,
}

pub fn dlambda(a: &DlambdaArgs) -> Outcome {
    let g = grid(&a.grid)?;
    let opts = SolveOptions::default();
    let (q0, director) = match (a.v3, a.q0) {
        (Some(v3), _) => {
            let v = Director::from_v3(finite("v3", v3)?)?;
            (uniaxial(&v, opts.params.s_star), Some(v))
        }
        (None, Some(c)) => {
            let q = S0Tensor::from_upper(c[0], c[1], c[2], c[3], c[4]);
            if !q.is_finite() {
                return Err(Error::InvalidArgument("q0 entries must be finite".into()).into());
            }
            (q, None)
        }
        (None, None) => unreachable!("clap requires --v3 or --q0"),
    };
    let d = d_lambda(&q0, a.lambda, &g, &opts)?;
    if a.format == Format::Csv {
        let profile = d.profile.as_ref().ok_or_else(|| Error::NotConverged("no profile returned".into()))?;
        emit(&a.common, |out| write_profile_csv(out, profile, a.lambda, Some(d.value)))?;
        return Ok(d.converged);
    }
    let reduced_lambda0 = match (a.lambda, &director) {
        (Lambda::Finite(0.0), Some(v)) => minimize_lambda0(v, &g)
            .ok()
            .map(|r| ReducedCheck { energy: r.energy, converged: r.converged, difference: r.energy - d.value }),
        _ => None,
    };
    let out = DlambdaOut {
        schema_version: SCHEMA_VERSION,
        command: "dlambda",
        seed: a.common.seed,
        lambda: a.lambda,
        v3: a.v3,
        q0: q0.upper(),
        grid: g,
        d: d.value,
        converged: d.converged,
        best_start: d.best_start,
        starts: &d.starts,
        report: &d.report,
        reduced_lambda0,
    };
    emit(&a.common, |w| write_json(w, &out))?;
    Ok(d.converged)
}

#[derive(Serialize)]
struct SphereOut<'a> {
    command: &'static str,
    seed: u64,
    #[serde(flatten)]
    report: &'a SphereReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_reference: Option<f64>,
}

pub fn sphere(a: &SphereArgs) -> Outcome {
    let bc = match a.bc {
        Bc::Longitudinal => BoundaryCondition::Longitudinal,
        Bc::RadialReference => BoundaryCondition::RadialReference,
        Bc::FixedFrame => {
            let psi = a.psi.ok_or_else(|| Error::InvalidArgument("--bc fixed-frame needs --psi".into()))?;
            BoundaryCondition::FixedFrame { psi: finite("psi", psi)? }
        }
        Bc::Uniform => {
            let [x, y, z] = a.dir.ok_or_else(|| Error::InvalidArgument("--bc uniform needs --dir x,y,z".into()))?;
            BoundaryCondition::Uniform(Director::normalize(Vector3::new(x, y, z))?)
        }
    };
    let src = source(a.density, a.lambda, &a.grid)?;
    let quad = QuadratureSpec { nodes_per_hemisphere: a.polar_nodes, n_theta: a.azimuthal_nodes };
    let report = integrate_d_sphere(a.lambda, &bc, &quad, &src)?;
    let exact_reference = match (a.lambda, a.bc) {
        (Lambda::Infinite, Bc::Longitudinal) => Some(longitudinal_inf_exact()),
        (Lambda::Infinite, Bc::RadialReference) => Some(radial_inf_exact()),
        _ => None,
    };
    let out = SphereOut { command: "sphere", seed: a.common.seed, report: &report, exact_reference };
    emit(&a.common, |w| write_json(w, &out))?;
    Ok(report.converged)
}

#[derive(Serialize)]
struct ScanOut<'a> {
    command: &'static str,
    seed: u64,
    longitudinal: bool,
    #[serde(flatten)]
    result: &'a ScanResult,
}

#[derive(Serialize)]
struct ScanHeader {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    theta: f64,
    phi: f64,
    lambda: Lambda,
    best_psi: f64,
    best_density: f64,
    longitudinal: bool,
}

pub fn scan(a: &ScanArgs) -> Outcome {
    let p = SurfacePoint::new(a.theta, a.phi)?;
    let src = source(a.density, a.lambda, &a.grid)?;
    let r = optimal_tangent_scan(&p, a.lambda, a.ndirs, &src)?;
    let longitudinal = r.distance_to_longitudinal() < 0.5 * PI / a.ndirs as f64;
    let converged = r.table.iter().all(|row| row.converged);
    match a.format {
        Format::Json => {
            let out = ScanOut { command: "scan", seed: a.common.seed, longitudinal, result: &r };
            emit(&a.common, |w| write_json(w, &out))?;
        }
        Format::Csv => {
            let header = ScanHeader {
                schema_version: SCHEMA_VERSION,
                command: "scan",
                seed: a.common.seed,
                theta: r.theta,
                phi: r.phi,
                lambda: r.lambda,
                best_psi: r.best_psi,
                best_density: r.best_density,
                longitudinal,
            };
            emit(&a.common, |w| {
                writeln!(w, "# {}", serde_json::to_string(&header)?)?;
                writeln!(w, "psi,density,converged")?;
                for row in &r.table {
                    writeln!(w, "{:.16e},{:.16e},{}", row.psi, row.density, u8::from(row.converged))?;
                }
                Ok(())
            })?;
        }
    }
    Ok(converged)
}

/// The `lambda = inf` optimal path in frame angles, from the closed-form director profile.
fn inf_path(v: &Director, g: &Grid1D) -> Result<AnglePath> {
    let frame = build_frame(v)?;
    let s = PotentialParams::default().s_star;
    let (mut alpha, mut beta, mut amplitude) = (Vec::new(), Vec::new(), Vec::new());
    for t in g.nodes() {
        let q = uniaxial(&n_exact_from(v, t), s);
        let (al, be) = frame.angles_of(&q).unwrap_or((FRAC_PI_2, 0.0));
        alpha.push(al);
        beta.push(be);
        amplitude.push(q.norm());
    }
    AnglePath::new(*g, alpha, beta, amplitude)
}

pub fn abmap(a: &AbmapArgs) -> Outcome {
    let cells = trace_heatmap(finite("v3", a.v3)?, a.res)?;
    emit(&a.common, |w| write_abmap_csv(w, &cells))?;
    if a.no_overlay {
        return Ok(true);
    }
    let Some(path) = a.common.output.as_deref() else {
        eprintln!("boojum: overlays are written only together with --output");
        return Ok(true);
    };
    let g = grid(&a.grid)?;
    let v = Director::from_v3(a.v3)?;
    let zero = minimize_lambda0(&v, &g)?;
    let inf = inf_path(&v, &g)?;
    let overlays = [
        ("path_lambda0", &zero.path, Lambda::Finite(0.0), zero.energy),
        ("path_inf", &inf, Lambda::Infinite, d_inf_exact(&v)),
    ];
    for (suffix, p, lambda, energy) in overlays {
        let header = AnglePathHeader { schema_version: SCHEMA_VERSION, grid: g, v3: a.v3, lambda, energy: Some(energy) };
        let mut out = open(Some(&sibling(path, suffix)))?;
        write_angle_path_csv(&mut out, p, &header).and_then(|_| Ok(out.flush()?))?;
    }
    Ok(zero.converged)
}

#[derive(Serialize)]
struct RecoveryOut<'a> {
    command: &'static str,
    seed: u64,
    #[serde(flatten)]
    report: &'a RegionEnergyReport,
}

pub fn recovery(a: &RecoveryArgs) -> Outcome {
    let samples = match a.samples {
        Some(n) if n < 2 => return Err(Error::InvalidArgument("--samples must be at least 2".into()).into()),
        Some(n) => {
            let out = a.common.output.as_deref().ok_or_else(|| Error::InvalidArgument("--samples needs --output".into()))?;
            Some((n, sibling(out, "samples")))
        }
        None => None,
    };
    let report = match a.mode {
        Mode::Inf => {
            let p = RecoveryParamsInf::new(a.eta)?;
            if let Some((n, path)) = &samples {
                write_inf_samples(&InfConstruction::new(p), *n, path)?;
            }
            energy_report_inf(&p)?
        }
        Mode::Fin => {
            let xi = a.xi.unwrap_or(if a.lambda > 0.0 { a.eta / a.lambda } else { f64::INFINITY });
            let eps = a.eps.unwrap_or(a.h / 5.0);
            let p = RecoveryParamsFin::new(a.eta, xi, a.h, eps, a.lambda)?.with_grid(grid(&a.grid)?);
            let c = FinConstruction::build(&p)?;
            if let Some((n, path)) = &samples {
                write_fin_samples(&c, a.eta, 1.0 + (2.0 * a.h + 6.0) * a.eta, *n, path)?;
            }
            c.energy_report(a.eta, xi, p.quadrature())?
        }
    };
    let out = RecoveryOut { command: "recovery", seed: a.common.seed, report: &report };
    emit(&a.common, |w| write_json(w, &out))?;
    Ok(true)
}

fn write_inf_samples(c: &InfConstruction, n: usize, path: &Path) -> Result<()> {
    let eta = c.params().eta();
    let mut w = open(Some(path))?;
    writeln!(w, "r,phi,region,angle,n1,n3")?;
    for i in 0..n {
        let r = 1.0 + 6.0 * eta * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let phi = PI * j as f64 / (n - 1) as f64;
            let a = c.angle(r, phi)?;
            let d = c.director(r, phi)?;
            writeln!(w, "{r:.16e},{phi:.16e},{:?},{:.16e},{:.16e},{:.16e}", c.region_of(r, phi), a.value, d.x, d.z)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_fin_samples(c: &FinConstruction, eta: f64, r_max: f64, n: usize, path: &Path) -> Result<()> {
    let rows = c.sample(eta, r_max, n, n)?;
    let mut w = open(Some(path))?;
    writeln!(w, "r,phi,Q11,Q12,Q13,Q22,Q23")?;
    for (r, phi, q) in rows {
        let [a, b, c, d, e] = q.upper();
        writeln!(w, "{r:.16e},{phi:.16e},{a:.16e},{b:.16e},{c:.16e},{d:.16e},{e:.16e}")?;
    }
    w.flush()?;
    Ok(())
}
