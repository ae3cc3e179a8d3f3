use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use lame::continuation::{self, CycleSpec, ScanOptions};
use lame::hk::{hk_closed_form, hk_from_bethe, multipliers_hk, solve_bethe};
use lame::monodromy::{multipliers_direct, multipliers_hyperelliptic, MonodromyResult};
use lame::parse::{parse_complex, parse_hermite, parse_labels};
use lame::perturbation::{build_basis, matrix_elements, series_coefficients};
use lame::{finite_gap, reduction, EllipticContext, LameError, C};

const SIG_DIGITS: usize = 15;

#[derive(Parser)]
#[command(name = "lame", version, about = "Spectral computations for the Lame operator")]
struct Cli {
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<std::path::PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Lattice {
    #[arg(long)]
    n: usize,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    tau: C,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Hyper,
    Hk,
    Direct,
    All,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice constants for periods (1, tau).
    Context {
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        tau: C,
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Coefficients of the product solution Xi in both bases.
    Xi(Lattice),
    /// Spectral polynomial Q(E) and its roots.
    Qpoly(Lattice),
    /// Floquet multipliers at one energy.
    Monodromy {
        #[command(flatten)]
        lat: Lattice,
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        energy: C,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
    },
    /// Bethe roots and the derived Hermite-Krichever data.
    Bethe {
        #[command(flatten)]
        lat: Lattice,
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        energy: C,
    },
    /// Check the reduction of hyperelliptic to elliptic integrals.
    Reduce {
        #[command(flatten)]
        lat: Lattice,
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        energy: C,
        /// a,b,z0,z1 for Hermite's formulas.
        #[arg(long, value_parser = hermite_arg, allow_hyphen_values = true)]
        hermite: Option<[C; 4]>,
    },
    /// Band edges and gaps for purely imaginary tau.
    Bands {
        #[command(flatten)]
        lat: Lattice,
        #[arg(long, default_value_t = 40)]
        samples: usize,
    },
    /// Perturbation series of the lowest eigenvalues in the nome.
    Perturb {
        #[arg(long)]
        n: usize,
        /// Number of levels, starting from 0.
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Continue eigenvalues around the cycle through a branch-point candidate.
    Continue {
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        a: C,
        #[arg(long, value_parser = labels_arg)]
        labels: Labels,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.02)]
        radius: f64,
        #[arg(long, default_value_t = 1)]
        turns: u32,
        #[arg(long)]
        clockwise: bool,
        /// Print the full tracks as CSV instead of the permutation.
        #[arg(long)]
        track: bool,
    },
    /// Locate branch points of the n = 1 eigenvalues.
    BranchScan {
        #[arg(long, default_value_t = 0.9)]
        rmax: f64,
        #[arg(long, default_value_t = 90)]
        rays: usize,
        #[arg(long, value_parser = labels_arg, default_value = "0,1,2,3,4,5,6,7")]
        labels: Labels,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn complex_arg(s: &str) -> Result<C, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

fn hermite_arg(s: &str) -> Result<[C; 4], String> {
    parse_hermite(s).map_err(|e| e.to_string())
}

#[derive(Clone)]
struct Labels(Vec<usize>);

fn labels_arg(s: &str) -> Result<Labels, String> {
    parse_labels(s).map(Labels).map_err(|e| e.to_string())
}

fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    let mut v = serde_json::to_value(v).expect("serialisable");
    round_value(&mut v);
    v
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{}", round_sig(x))
    } else {
        format!("{x}")
    }
}

fn ctx(tau: C) -> lame::Result<EllipticContext> {
    EllipticContext::new(tau)
}

fn curve_for(lat: &Lattice) -> lame::Result<(lame::XiData, lame::SpectralCurve)> {
    if lat.n == 0 || lat.n > 12 {
        return Err(LameError::Domain(format!("n must be in 1..=12, got {}", lat.n)));
    }
    let xi = lame::compute_xi(&ctx(lat.tau)?, lat.n)?;
    let curve = lame::compute_q(&xi)?;
    Ok((xi, curve))
}

fn pair_residual(a: &MonodromyResult, b: &MonodromyResult) -> f64 {
    (a.rho1 - b.rho1).norm().max((a.rho_tau - b.rho_tau).norm())
}

fn run(cmd: Command) -> lame::Result<String> {
    let v = match cmd {
        Command::Context { tau, terms } => {
            let c = match terms {
                Some(t) => EllipticContext::with_terms(tau, t)?,
                None => ctx(tau)?,
            };
            to_json(&c)
        }
        Command::Xi(lat) => {
            let (xi, _) = curve_for(&lat)?;
            to_json(&json!({
                "n": xi.n,
                "tau": xi.ctx.tau,
                "b": xi.b,
                "c0": xi.c0,
                "a": xi.a,
                "c": xi.c,
                "a_tilde": xi.a_tilde,
            }))
        }
        Command::Qpoly(lat) => {
            let (_, curve) = curve_for(&lat)?;
            let mut roots = curve.roots.clone();
            roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            to_json(&json!({
                "n": curve.n,
                "tau": lat.tau,
                "coefficients": curve.q_poly.coeffs,
                "roots": roots,
            }))
        }
        Command::Monodromy { lat, energy, method } => {
            let (xi, curve) = curve_for(&lat)?;
            let c = &xi.ctx;
            let mut results: Vec<MonodromyResult> = Vec::new();
            let mut skipped = serde_json::Map::new();
            let want = |m: MethodArg| matches!(method, MethodArg::All) || std::mem::discriminant(&method) == std::mem::discriminant(&m);
            let mut hyper = None;
            if want(MethodArg::Hyper) || want(MethodArg::Direct) {
                match multipliers_hyperelliptic(&xi, &curve, energy) {
                    Ok(r) => hyper = Some(r),
                    Err(e) if matches!(method, MethodArg::All) => {
                        skipped.insert("hyperelliptic".into(), json!(e.to_string()));
                    }
                    Err(e) if want(MethodArg::Hyper) => return Err(e),
                    Err(_) => {}
                }
            }
            if want(MethodArg::Hyper) {
                results.extend(hyper.clone());
            }
            if want(MethodArg::Hk) {
                match hk_closed_form(c, &curve, energy) {
                    Ok(hk) => results.push(multipliers_hk(c, &hk)),
                    Err(e) if matches!(method, MethodArg::All) => {
                        skipped.insert("hermite_krichever".into(), json!(e.to_string()));
                    }
                    Err(e) => return Err(e),
                }
            }
            if want(MethodArg::Direct) {
                let hint = hyper.as_ref().map(|h| (h.rho1, h.rho_tau));
                match multipliers_direct(c, &curve, energy, hint) {
                    Ok((r, _)) => results.push(r),
                    Err(e) if matches!(method, MethodArg::All) => {
                        skipped.insert("direct_ode".into(), json!(e.to_string()));
                    }
                    Err(e) => return Err(e),
                }
            }
            let mut cross = Vec::new();
            for i in 0..results.len() {
                for j in i + 1..results.len() {
                    cross.push(json!({
                        "methods": [results[i].method, results[j].method],
                        "residual": pair_residual(&results[i], &results[j]),
                    }));
                }
            }
            to_json(&json!({ "results": results, "cross_residuals": cross, "skipped": skipped }))
        }
        Command::Bethe { lat, energy } => {
            let (xi, curve) = curve_for(&lat)?;
            let sol = solve_bethe(&xi, &curve, energy, None)?;
            let residual = sol.residuals(&xi.ctx)?.iter().map(|r| r.norm()).fold(0.0, f64::max);
            let hk = hk_from_bethe(&xi.ctx, &sol)?;
            to_json(&json!({ "solution": sol, "bethe_residual": residual, "hermite_krichever": hk }))
        }
        Command::Reduce { lat, energy, hermite } => {
            if !(1..=3).contains(&lat.n) {
                return Err(LameError::Domain(format!("reduce supports n = 1, 2, 3, got {}", lat.n)));
            }
            let (xi, curve) = curve_for(&lat)?;
            let first = reduction::verify_first_kind(&xi, &curve, energy)?;
            let second = reduction::verify_second_kind(&xi, &curve, energy)?;
            let (d1, d2) = reduction::differentiated_residuals(&xi, &curve, energy)?;
            let herm = match hermite {
                Some([a, b, z0, z1]) => Some(reduction::hermite_formula(a, b, z0, z1)?),
                None => None,
            };
            to_json(&json!({
                "first_kind": first,
                "second_kind": second,
                "differentiated_first": d1,
                "differentiated_second": d2,
                "hermite": herm,
            }))
        }
        Command::Bands { lat, samples } => {
            if lat.n == 0 || lat.n > 12 {
                return Err(LameError::Domain(format!("n must be in 1..=12, got {}", lat.n)));
            }
            let bs = finite_gap::band_scan(&ctx(lat.tau)?, lat.n, samples.clamp(1, 10_000))?;
            to_json(&json!({
                "n": bs.n,
                "tau": bs.tau,
                "edges": bs.edges,
                "bands": bs.bands().iter().map(|(a, b)| json!([a, if b.is_finite() { json!(b) } else { json!("+inf") }])).collect::<Vec<_>>(),
                "gaps": bs.gaps.iter().map(|(a, b)| json!([if a.is_finite() { json!(a) } else { json!("-inf") }, b])).collect::<Vec<_>>(),
                "mismatches": bs.mismatches,
            }))
        }
        Command::Perturb { n, levels, order, format } => return perturb(n, levels, order, format),
        Command::Continue { a, labels, steps, radius, turns, clockwise, track } => {
            let spec = CycleSpec { a, steps, radius, turns, clockwise };
            let rep = continuation::permutation(&spec, &labels.0)?;
            if track {
                let mut s = String::from("label,step,re_p,im_p,re_E,im_E\n");
                for path in &rep.paths {
                    for (k, t) in path.track.iter().enumerate() {
                        let _ = writeln!(s, "{},{k},{},{},{},{}", path.label, num(t.p.re), num(t.p.im), num(t.e.re), num(t.e.im));
                    }
                }
                return Ok(s);
            }
            let max_res = rep.paths.iter().map(|p| p.max_residual()).fold(0.0, f64::max);
            to_json(&json!({
                "a": a,
                "radius": radius,
                "labels": rep.labels,
                "images": rep.images,
                "permutation": rep.describe(),
                "max_residual": max_res,
            }))
        }
        Command::BranchScan { rmax, rays, labels, format } => {
            let opts = ScanOptions { rmax, labels: labels.0, rays, ..ScanOptions::default() };
            let pts = continuation::locate_branch_points(&opts)?;
            if format == Format::Json {
                to_json(&pts)
            } else {
                let mut s = String::from("re_p,im_p,abs_p,re_E,im_E,m_prime,found_on\n");
                for b in &pts {
                    let on: Vec<String> = b.found_on.iter().map(|m| m.to_string()).collect();
                    let _ = writeln!(s, "{},{},{},{},{},{},{}", num(b.p.re), num(b.p.im), num(b.p.norm()), num(b.e.re), num(b.e.im), b.m_prime, on.join(";"));
                }
                return Ok(s);
            }
        }
    };
    Ok(serde_json::to_string_pretty(&v).expect("json") + "\n")
}

fn perturb(n: usize, levels: usize, order: usize, format: Format) -> lame::Result<String> {
    if n == 0 || n > 12 || levels == 0 || levels > 200 || order > 400 {
        return Err(LameError::Domain("need 1 <= n <= 12, 1 <= levels <= 200, order <= 400".into()));
    }
    let basis = build_basis(n, levels - 1 + 2 * order)?;
    let mat = matrix_elements(&basis, order.max(1))?;
    let series = (0..levels).map(|m| series_coefficients(&mat, m, order)).collect::<lame::Result<Vec<_>>>()?;
    if format == Format::Json {
        let v = to_json(&series);
        return Ok(serde_json::to_string_pretty(&v).expect("json") + "\n");
    }
    let pi2 = std::f64::consts::PI.powi(2);
    let mut s = String::from("level,k,coefficient_over_pi2,rational\n");
    for ser in &series {
        for (k, (c, r)) in ser.coeffs.iter().zip(&ser.rational_over_pi2).enumerate() {
            let rat = match r {
                Some((p, 1)) => p.to_string(),
                Some((p, q)) => format!("{p}/{q}"),
                None => String::new(),
            };
            let _ = writeln!(s, "{},{k},{},{rat}", ser.m, num(c / pi2));
        }
    }
    if series.iter().any(|s| s.radius.is_some()) {
        s.push_str("\nlevel,radius,method,low_confidence\n");
        for ser in &series {
            if let Some(r) = &ser.radius {
                let _ = writeln!(s, "{},{},{},{}", ser.m, num(r.radius), r.method, r.low_confidence);
            }
        }
    }
    Ok(s)
}

fn fail(code: u8, kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            return fail(1, "usage", first);
        }
    };
    match run(cli.cmd) {
        Ok(text) => match cli.out {
            Some(path) => match std::fs::write(&path, text) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(1, "io", &format!("cannot write {}: {e}", path.display())),
            },
            None => {
                print!("{text}");
                ExitCode::SUCCESS
            }
        },
        Err(e) if e.is_domain() => fail(2, e.kind(), &e.to_string()),
        Err(e) => fail(3, e.kind(), &e.to_string()),
    }
}
