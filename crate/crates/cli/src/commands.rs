use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde_json::json;
use sps_core::experiments::{run_experiment, Overrides};
use sps_core::geometry::{ellipse_trace, unit_circle_directions};
use sps_core::region::{DEFAULT_RAYS, DEFAULT_RESOLUTION};
use sps_core::{
    asymptotic_ellipsoid, f_ellipsoid, outer_approximation, raster_region, region_bounds, trace_region, Dataset,
    Ellipsoid, RegressionSummary, SpsError, SpsEvaluator, SpsSetup,
};

use crate::config::{resolve_seed, RunConfig};
use crate::error::{CliError, Context};

struct Prepared {
    data: Dataset,
    summary: RegressionSummary,
    setup: SpsSetup,
    eval: SpsEvaluator,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let data = cfg.source.load()?;
    let summary = RegressionSummary::compute(&data).context("least squares")?;
    let setup = SpsSetup::generate(cfg.sps, data.n()).context("SPS initialization")?;
    let eval = SpsEvaluator::new(&setup, &summary, &data).context("SPS initialization")?;
    Ok(Prepared { data, summary, setup, eval })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).context(format!("creating {}", path.display()))?))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let mut w = create(dir, name)?;
    w.write_all(text.as_bytes()).context(format!("writing {name}"))?;
    w.flush().context(format!("writing {name}"))?;
    Ok(dir.join(name))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).context(format!("creating {}", dir.display()))
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

/// Prints the verdict; 0 if member, 3 if not.
pub fn check(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let theta = cfg.theta.clone().ok_or_else(|| CliError::config("check needs --theta v1,v2,..."))?;
    let p = prepare(cfg)?;
    if theta.len() != p.data.dim() {
        return Err(CliError::config(format!(
            "theta has {} entries but the regressors have {}",
            theta.len(),
            p.data.dim()
        )));
    }
    let v = p.eval.verdict(&theta);
    let out = json!({
        "theta": theta,
        "rank": v.rank,
        "member": v.member,
        "m": cfg.sps.m,
        "q": cfg.sps.q,
        "p": cfg.sps.confidence().value(),
        "confidence": cfg.sps.confidence().to_string(),
        "seed": cfg.sps.seed,
    });
    println!("{}", pretty(&out));
    Ok(if v.member { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn comparison_ellipsoids(cfg: &RunConfig, p: &Prepared) -> Result<(Ellipsoid, Ellipsoid), CliError> {
    let level = cfg.sps.confidence().value();
    let n = p.data.n();
    let asym = asymptotic_ellipsoid(&p.summary, n, level).context("asymptotic ellipsoid")?;
    let f = f_ellipsoid(&p.summary, n, level).context("F ellipsoid")?;
    Ok((asym, f))
}

/// `Ok(None)` with a warning when the norm has no over-bound.
fn overbound(p: &Prepared) -> Result<Option<Ellipsoid>, CliError> {
    match outer_approximation(&p.setup, &p.summary, &p.data) {
        Ok(e) => Ok(Some(e)),
        Err(e @ SpsError::NormUnsupported(_)) => {
            eprintln!("warning: {e}; skipping the over-bound");
            Ok(None)
        }
        Err(e) => Err(CliError::Core { context: "over-bound".into(), source: e }),
    }
}

fn ellipse_csv(dir: &Path, name: &str, e: &Ellipsoid, comment: &str) -> Result<(), CliError> {
    if !e.is_bounded() {
        eprintln!("warning: {name} is unbounded; no polyline written");
        return Ok(());
    }
    let trace = ellipse_trace(e, DEFAULT_RAYS).context(name.to_string())?;
    let mut w = create(dir, name)?;
    trace.write_csv(&mut w, Some(comment)).context(format!("writing {name}"))?;
    w.flush().context(format!("writing {name}"))
}

/// Writes every ellipsoid as JSON to stdout (and `--out`, when given).
pub fn ellipsoid(cfg: &RunConfig, write_files: bool) -> Result<ExitCode, CliError> {
    let p = prepare(cfg)?;
    let (asym, f) = comparison_ellipsoids(cfg, &p)?;
    let over = overbound(&p)?;
    let out = json!({
        "config": cfg.echo(),
        "level": cfg.sps.confidence().value(),
        "overbound": over.as_ref().map(Ellipsoid::to_json_value),
        "asymptotic": asym.to_json_value(),
        "f": f.to_json_value(),
    });
    println!("{}", pretty(&out));
    if write_files {
        ensure_dir(&cfg.out)?;
        write_text(&cfg.out, "ellipsoids.json", &pretty(&out))?;
        if p.data.dim() == 2 {
            let comment = cfg.echo().to_string();
            if let Some(e) = &over {
                ellipse_csv(&cfg.out, "overbound.csv", e, &comment)?;
            }
            ellipse_csv(&cfg.out, "chi2.csv", &asym, &comment)?;
            ellipse_csv(&cfg.out, "f.csv", &f, &comment)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Boundary trace, raster and ellipse polylines of a planar region.
pub fn region(cfg: &RunConfig, rays: Option<usize>, resolution: Option<usize>) -> Result<ExitCode, CliError> {
    let rays = rays.unwrap_or(DEFAULT_RAYS);
    let resolution = resolution.unwrap_or(DEFAULT_RESOLUTION);
    if rays < 3 || resolution < 2 {
        return Err(CliError::config("need at least 3 rays and 2 raster cells per axis"));
    }
    let p = prepare(cfg)?;
    if p.data.dim() != 2 {
        return Err(CliError::config(format!("region needs d = 2, the data has d = {}", p.data.dim())));
    }
    let (asym, f) = comparison_ellipsoids(cfg, &p)?;
    let over = overbound(&p)?;
    let center: Vec<f64> = p.summary.theta_hat.iter().copied().collect();

    let echo = json!({"run": cfg.echo(), "rays": rays, "resolution": resolution});
    let comment = echo.to_string();
    ensure_dir(&cfg.out)?;
    write_text(&cfg.out, "config.json", &pretty(&echo))?;

    let trace = trace_region(&p.eval, &center, &unit_circle_directions(rays)).context("boundary trace")?;
    let mut w = create(&cfg.out, "boundary.csv")?;
    trace.write_csv(&mut w, Some(&comment)).context("writing boundary.csv")?;
    w.flush().context("writing boundary.csv")?;

    let mut bounds = region_bounds(&p.eval, &center, over.as_ref()).context("raster bounds")?;
    for axis in bounds.iter_mut() {
        let pad = 0.05 * (axis[1] - axis[0]);
        axis[0] -= pad;
        axis[1] += pad;
    }
    let raster = raster_region(&p.eval, bounds, (resolution, resolution)).context("raster")?;
    let mut w = create(&cfg.out, "raster.pgm")?;
    raster.write_pgm(&mut w, Some(&comment)).context("writing raster.pgm")?;
    w.flush().context("writing raster.pgm")?;
    let mut w = create(&cfg.out, "raster_members.csv")?;
    raster.write_member_csv(&mut w, Some(&comment)).context("writing raster_members.csv")?;
    w.flush().context("writing raster_members.csv")?;

    if let Some(e) = &over {
        ellipse_csv(&cfg.out, "overbound.csv", e, &comment)?;
    }
    ellipse_csv(&cfg.out, "chi2.csv", &asym, &comment)?;
    ellipse_csv(&cfg.out, "f.csv", &f, &comment)?;
    let ellipsoids = json!({
        "config": echo,
        "overbound": over.as_ref().map(Ellipsoid::to_json_value),
        "asymptotic": asym.to_json_value(),
        "f": f.to_json_value(),
    });
    write_text(&cfg.out, "ellipsoids.json", &pretty(&ellipsoids))?;

    let area = sps_core::raster_area(&raster);
    println!(
        "{}",
        pretty(&json!({"out": cfg.out, "raster_area": area, "unbounded_rays": trace.has_unbounded_ray()}))
    );
    Ok(ExitCode::SUCCESS)
}

/// Runs a catalog study, writes `<name>.json` plus one CSV per report, and
/// prints the summary table.
pub fn experiment(
    name: &str,
    trials: Option<usize>,
    seed: Option<u64>,
    n: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let seed = match seed {
        Some(s) => Some(s),
        None if std::env::var_os(crate::config::SEED_ENV).is_some() => Some(resolve_seed(None, None)?),
        None => None,
    };
    let overrides = Overrides { trials, seed, n };
    let run = run_experiment(name, overrides).map_err(|e| match e {
        SpsError::BadConfig(msg) => CliError::Config(msg),
        other => CliError::Core { context: format!("experiment {name}"), source: other },
    })?;
    let dir = out.unwrap_or_else(|| PathBuf::from(crate::config::DEFAULT_OUT));
    ensure_dir(&dir)?;
    let full = serde_json::to_string_pretty(&run).map_err(|e| CliError::config(e.to_string()))?;
    write_text(&dir, &format!("{name}.json"), &full)?;
    for (label, report) in &run.reports {
        let file = format!("{name}-{label}.csv");
        let mut w = create(&dir, &file)?;
        report.write_csv(&mut w).context(format!("writing {file}"))?;
        w.flush().context(format!("writing {file}"))?;
    }
    println!("{}", pretty(&json!({"experiment": name, "overrides": overrides, "summary": run.summary})));
    Ok(ExitCode::SUCCESS)
}
