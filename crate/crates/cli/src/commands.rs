use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use treeharm::eigenproject::eigen_decompose;
use treeharm::harness::{verify_strichartz, StrichartzReport, Verdict};
use treeharm::multipliers::MultiplierOperator;
use treeharm::norms::{ball_sum_diagnostic, hardy_norm, lp_norm, schwartz_seminorm, weak_lp_norm, NormReport};
use treeharm::spectral::{
    conjugate, phi_table, symbol_extrema_on_grid, ExtremaReport, SpectralSymbol, StripParams, SymbolSpec,
};
use treeharm::transforms::{read_csv, synthesize_kernel, synthesize_kernel_adaptive, write_csv, Operand, RadialFunction};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// `re,im` or a bare real number.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("'{s}' is not a complex number (expected re,im)"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("'{s}' is not a complex number (expected re,im)")),
    }
}

/// A JSON object, or one of `laplacian`, `sphere:N`, `ball:N`, `heat:RE,IM`.
pub fn parse_symbol(s: &str) -> Result<SymbolSpec, String> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| format!("symbol: {e}"));
    }
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let count = || arg.parse::<usize>().map_err(|_| format!("symbol '{s}': expected a nonnegative integer after ':'"));
    match name {
        "laplacian" if arg.is_empty() => Ok(SymbolSpec::Laplacian),
        "sphere" => Ok(SymbolSpec::SphereAvg { n: count()? }),
        "ball" => Ok(SymbolSpec::BallAvg { n: count()? }),
        "heat" => Ok(SymbolSpec::Heat { xi: parse_complex(arg)? }),
        _ => Err(format!("unknown symbol '{s}' (laplacian, sphere:N, ball:N, heat:RE,IM or a JSON object)")),
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(treeharm::Error::from)?;
    writeln!(out, "{text}").map_err(|e| CliError::io("stdout", e))
}

fn emit_xy(out: &mut dyn Write, rows: impl IntoIterator<Item = (f64, f64)>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y"]).map_err(treeharm::Error::from)?;
    for (x, y) in rows {
        w.write_record([format!("{x:e}"), format!("{y:e}")]).map_err(treeharm::Error::from)?;
    }
    w.flush().map_err(|e| CliError::io("stdout", e))
}

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub format: Format,
    pub plot_data: bool,
}

#[derive(Serialize)]
struct PhiRow {
    n: usize,
    re: f64,
    im: f64,
}

pub fn phi(ctx: &Ctx, z: Complex64, n_max: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let table = phi_table(ctx.cfg.q, z, n_max);
    if ctx.plot_data {
        return emit_xy(out, table.iter().enumerate().map(|(n, v)| (n as f64, v.norm())));
    }
    match ctx.format {
        Format::Json => {
            let rows: Vec<PhiRow> = table.iter().enumerate().map(|(n, v)| PhiRow { n, re: v.re, im: v.im }).collect();
            emit_json(out, &rows)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for (n, v) in table.iter().enumerate() {
                w.serialize(PhiRow { n, re: v.re, im: v.im }).map_err(treeharm::Error::from)?;
            }
            w.flush().map_err(|e| CliError::io("stdout", e))
        }
    }
}

#[derive(Serialize)]
struct SymbolRow {
    alpha: f64,
    re: f64,
    im: f64,
    modulus: f64,
}

pub fn symbols(ctx: &Ctx, spec: SymbolSpec, grid: usize, out: &mut dyn Write) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Config { field: "grid".into(), message: format!("{grid} < 2") });
    }
    let sym = SpectralSymbol::new(ctx.cfg.q, spec)?;
    let strip = StripParams::new(ctx.cfg.q, ctx.cfg.p)?;
    let tau = strip.tau();
    let rows: Vec<SymbolRow> = (0..grid)
        .map(|k| {
            let alpha = -tau / 2.0 + tau * (k + 1) as f64 / grid as f64;
            let v = sym.eval(strip.boundary_point(alpha));
            SymbolRow { alpha, re: v.re, im: v.im, modulus: v.norm() }
        })
        .collect();
    if ctx.plot_data {
        return emit_xy(out, rows.iter().map(|r| (r.alpha, r.modulus)));
    }
    match ctx.format {
        Format::Json => emit_json(out, &rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in &rows {
                w.serialize(r).map_err(treeharm::Error::from)?;
            }
            w.flush().map_err(|e| CliError::io("stdout", e))
        }
    }
}

#[derive(Serialize)]
struct ExtremaOutput {
    symbol: String,
    q: usize,
    #[serde(flatten)]
    report: ExtremaReport,
}

pub fn extrema(ctx: &Ctx, spec: SymbolSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let label = spec.label();
    let sym = SpectralSymbol::new(ctx.cfg.q, spec)?;
    let report = symbol_extrema_on_grid(&sym, ctx.cfg.p, ctx.cfg.tolerances.extrema_grid)?;
    emit_json(out, &ExtremaOutput { symbol: label, q: ctx.cfg.q, report })
}

#[derive(Serialize)]
struct KernelOutput {
    symbol: String,
    q: usize,
    p: f64,
    support: usize,
    samples: usize,
    residual: f64,
    tolerance: f64,
    kernel: Vec<Complex64>,
}

pub fn kernel(ctx: &Ctx, spec: SymbolSpec, support: Option<usize>, out: &mut dyn Write) -> Result<(), CliError> {
    let label = spec.label();
    let sym = SpectralSymbol::new(ctx.cfg.q, spec)?;
    let (p, tol) = (ctx.cfg.p, ctx.cfg.tolerances.kernel_synthesis);
    let k = match support {
        Some(s) => synthesize_kernel(&sym, s, p, tol)?,
        None => synthesize_kernel_adaptive(&sym, p, tol, ctx.cfg.tolerances.kernel_max_support)?,
    };
    if ctx.plot_data {
        return emit_xy(out, k.kernel.values.iter().enumerate().map(|(n, v)| (n as f64, v.norm())));
    }
    match ctx.format {
        Format::Csv => write_csv(&k.kernel.values, out).map_err(CliError::from),
        Format::Json => emit_json(
            out,
            &KernelOutput {
                symbol: label,
                q: ctx.cfg.q,
                p,
                support: k.support,
                samples: k.samples,
                residual: k.residual,
                tolerance: k.tolerance,
                kernel: k.kernel.values,
            },
        ),
    }
}

fn read_profile(q: usize, path: &Path) -> Result<RadialFunction, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config {
        field: "input".into(),
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(RadialFunction::new(q, read_csv(file)?)?)
}

#[derive(Serialize)]
struct DecomposeOutput {
    symbol: String,
    q: usize,
    #[serde(flatten)]
    report: treeharm::eigenproject::DecompositionReport,
}

pub fn decompose(
    ctx: &Ctx,
    input: &Path,
    spec: SymbolSpec,
    a: &[Complex64],
    order: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let label = spec.label();
    let f = read_profile(ctx.cfg.q, input)?;
    let op = MultiplierOperator::with_heat_tol(ctx.cfg.q, spec, ctx.cfg.tolerances.heat_series)?;
    let dec = eigen_decompose(&f, &op, a, order)?;
    if ctx.plot_data {
        // one (n, |f_i(n)|) block per component, in the order of the eigenvalue list
        let valid = dec.components.first().and_then(|c| c.valid_radius()).unwrap_or(0);
        let rows = dec.components.iter().flat_map(|c| (0..=valid).map(move |n| (n as f64, c.values[n].norm())));
        return emit_xy(out, rows);
    }
    emit_json(out, &DecomposeOutput { symbol: label, q: ctx.cfg.q, report: dec.report() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NormChoice {
    Weak,
    Lp,
    Hardy,
    Schwartz,
}

pub fn norms(
    ctx: &Ctx,
    input: &Path,
    kind: NormChoice,
    r: f64,
    m: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let f = read_profile(ctx.cfg.q, input)?;
    let p = ctx.cfg.p;
    if ctx.plot_data {
        let table = ball_sum_diagnostic(&f, p)?.table;
        return emit_xy(out, table.into_iter().map(|(n, v)| (n as f64, v)));
    }
    let report: NormReport = match kind {
        // the tracked quantity is the weak-L^{p'} norm
        NormChoice::Weak => weak_lp_norm(&f, conjugate(p))?,
        NormChoice::Lp => lp_norm(&f, p)?,
        NormChoice::Hardy => hardy_norm(&f, p, r)?,
        NormChoice::Schwartz => schwartz_seminorm(&f, p, m)?,
    };
    emit_json(out, &report)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    name: &'a str,
    verdict: Verdict,
    predicted: Verdict,
    matches_prediction: bool,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn plot_table(r: &StrichartzReport) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["series", "x", "y"]).map_err(treeharm::Error::from)?;
        for (j, label) in r.norm_labels.iter().enumerate() {
            for row in &r.norms {
                w.write_record([label.clone(), row.k.to_string(), format!("{:e}", row.values[j])])
                    .map_err(treeharm::Error::from)?;
            }
        }
        w.flush().map_err(|e| CliError::io("plot table", e))?;
    }
    Ok(buf)
}

/// Run every scenario and write the report files. Returns the number of mismatches.
pub fn strichartz(ctx: &Ctx, out_dir: &Path, out: &mut dyn Write) -> Result<usize, CliError> {
    let cfg = ctx.cfg;
    if cfg.scenarios.is_empty() {
        return Err(CliError::Config { field: "scenarios".into(), message: "no scenarios to run".into() });
    }
    // reports come back in scenario order whatever the thread count
    let reports: Vec<StrichartzReport> = cfg
        .scenarios
        .par_iter()
        .map(|s| verify_strichartz(s, cfg.seed))
        .collect::<treeharm::Result<_>>()?;

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir.display().to_string(), e))?;
    for r in &reports {
        if cfg.wants(Format::Json) {
            let mut text = serde_json::to_string_pretty(r).map_err(treeharm::Error::from)?;
            text.push('\n');
            write_file(&out_dir.join(format!("{}.json", r.name)), text.as_bytes())?;
        }
        if cfg.wants(Format::Csv) {
            let mut buf = Vec::new();
            r.write_norm_table(&mut buf)?;
            write_file(&out_dir.join(format!("{}.norms.csv", r.name)), &buf)?;
        }
        if ctx.plot_data {
            write_file(&out_dir.join(format!("{}.plot.csv", r.name)), &plot_table(r)?)?;
        }
    }
    let summary: Vec<SummaryRow> = reports
        .iter()
        .map(|r| SummaryRow {
            name: &r.name,
            verdict: r.verdict,
            predicted: r.prediction.verdict,
            matches_prediction: r.matches_prediction,
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&summary).map_err(treeharm::Error::from)?;
    text.push('\n');
    write_file(&out_dir.join("summary.json"), text.as_bytes())?;
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))?;
    Ok(reports.iter().filter(|r| !r.matches_prediction).count())
}
