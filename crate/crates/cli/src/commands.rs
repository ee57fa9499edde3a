use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use phc_core::cone_dynamics::*;
use phc_core::energetics::{mu_profile, sigma_profile, Cutoff};
use phc_core::geometry::identity_suite;
use phc_core::limits::{classify_limit, cloud, dilate, geometric_distance, ClassifyOptions, KRegion};
use phc_core::local_graphs::{extract_graph, residual_convergence, taylor_fit, vertex_mode, GraphEquation};
use phc_core::surfaces::{holomorphy_residual, Surface};
use phc_core::{Circle, PhcError};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::family::{FamilyArgs, FamilyName};

/// Spread allowed in `s⁻³σ(s)` for a cone centred at its vertex.
const CONE_SPREAD_TOL: f64 = 1e-6;
/// Largest accepted `|4c_ν − φ′₀| / |4c_ν − φ″₀|`.
const TAYLOR_RATIO_TOL: f64 = 1e-2;

pub struct Report {
    pub command: &'static str,
    pub summary: Value,
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn new(command: &'static str, summary: Value) -> Self {
        Self {
            command,
            summary,
            failures: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, holds: bool, msg: impl FnOnce() -> String) {
        if !holds {
            self.failures.push(msg());
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "ok": self.ok(),
            "summary": self.summary,
            "failures": self.failures,
            "files": self.files,
        })
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
#[group(id = "mode", required = true, multiple = false)]
pub struct PeriodArgs {
    /// Single cone constant.
    #[arg(long, group = "mode")]
    pub c: Option<f64>,
    /// Table of N values of c across the scanned range.
    #[arg(long, group = "mode")]
    pub scan: Option<usize>,
    /// Find c with period 2πA/B.
    #[arg(long, group = "mode", num_args = 2, value_names = ["A", "B"])]
    pub rational: Option<Vec<u32>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn period(args: &PeriodArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    if let Some(c) = args.c {
        return period_single(c, cfg);
    }
    if let Some(n) = args.scan {
        return period_scan(n, args.out.as_deref(), cfg);
    }
    let ab = args.rational.as_deref().unwrap_or_default();
    let (a, b) = (ab[0], ab[1]);
    let p = find_c_for_period(a, b)?;
    let target = 2.0 * std::f64::consts::PI * a as f64 / b as f64;
    let ode = period_from_ode(p)?.period;
    let mut r = Report::new(
        "period",
        json!({ "a": a, "b": b, "c": p.c, "target": target, "period_ode": ode, "error": (ode - target).abs() }),
    );
    r.check((ode - target).abs() < cfg.quad_tol, || {
        format!("ODE period {ode} misses 2π·{a}/{b} = {target} by more than {}", cfg.quad_tol)
    });
    Ok(r)
}

fn period_single(c: f64, cfg: &RunConfig) -> anyhow::Result<Report> {
    let p = ConeParam::new(c)?;
    if p.is_degenerate() {
        let Err(PhcError::EndpointDegenerate { limit }) = half_period_quad(p) else {
            bail!("expected the degenerate endpoint at c = {c}");
        };
        return Ok(Report::new(
            "period",
            json!({ "c": c, "alpha": 0.0, "degenerate": true, "period": 2.0 * limit, "note": "analytic limit √3π" }),
        ));
    }
    let quad = period_quad(p)?;
    let half = half_period_quad(p)?.period;
    let ode = period_from_ode(p)?.period;
    let alpha = p.alpha();
    let series = period_series(alpha).period;
    let roots = cubic_roots(p)?;
    let drift = integrate(c, roots.u_min, 0.0, (0.0, 10.0 * quad.period))?.energy_drift();
    let mut r = Report::new(
        "period",
        json!({
            "c": c,
            "alpha": alpha,
            "degenerate": false,
            "period_quad": quad.period,
            "quad_error": quad.error,
            "half_period_quad": half,
            "period_ode": ode,
            "period_series": series,
            "series_gap": (quad.period - series).abs(),
            "alpha_pow_1_5": alpha.powf(1.5),
            "energy_drift_10_periods": drift,
        }),
    );
    r.check((2.0 * half - ode).abs() < cfg.quad_tol, || {
        format!("|2·half − ODE| = {:e} exceeds {}", (2.0 * half - ode).abs(), cfg.quad_tol)
    });
    r.check(drift < cfg.ode_tol, || format!("energy drift {drift:e} exceeds {}", cfg.ode_tol));
    Ok(r)
}

fn period_scan(n: usize, out: Option<&Path>, cfg: &RunConfig) -> anyhow::Result<Report> {
    let table = PeriodTable::build(n)?;
    let rows = table
        .c
        .par_iter()
        .zip(&table.period)
        .map(|(&c, &quad)| {
            let p = ConeParam::new(c)?;
            let half = half_period_quad(p)?.period;
            let ode = period_from_ode(p)?.period;
            Ok(vec![c, p.alpha(), quad, 2.0 * half, ode, (2.0 * half - ode).abs()])
        })
        .collect::<phc_core::Result<Vec<_>>>()?;
    let path = cfg.out_path(out, "period_scan.csv");
    write_csv(&path, &["c", "alpha", "period_quad", "two_half_period", "period_ode", "gap"], rows.iter().cloned())?;
    let gap = rows.iter().map(|r| r[5]).fold(0.0, f64::max);
    let increasing = table.period.windows(2).all(|w| w[1] > w[0]);
    let (lo, hi) = table.range();
    let mut r = Report::new(
        "period",
        json!({ "points": n, "period_min": lo, "period_max": hi, "increasing": increasing, "max_gap": gap }),
    );
    r.files.push(path);
    r.check(gap < cfg.quad_tol, || format!("max |2·half − ODE| = {gap:e} exceeds {}", cfg.quad_tol));
    Ok(r)
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Samples per parameter (default: config grid).
    #[arg(long)]
    pub n: Option<usize>,
    /// Append the two tangent vectors.
    #[arg(long)]
    pub frame: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn surface(args: &SurfaceArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    let s = args.family.build(cfg.circle_length)?;
    let n = args.n.unwrap_or(cfg.grid);
    let rows = s
        .grid(n, n)
        .par_iter()
        .map(|&(a, b)| {
            let smp = s.sample(a, b)?;
            let mut row = vec![a, b];
            row.extend(smp.point.as_array());
            if args.frame {
                row.extend(smp.t1.0.iter());
                row.extend(smp.t2.0.iter());
            }
            Ok(row)
        })
        .collect::<phc_core::Result<Vec<_>>>()?;
    let mut header = vec!["s1", "s2", "t", "x", "y", "z"];
    if args.frame {
        header.extend(["t1_t", "t1_x", "t1_y", "t1_z", "t2_t", "t2_x", "t2_y", "t2_z"]);
    }
    let path = cfg.out_path(args.out.as_deref(), "surface.csv");
    write_csv(&path, &header, rows)?;
    let mut r = Report::new("surface", json!({ "family": s.label(), "samples": n * n }));
    r.files.push(path);
    Ok(r)
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
}

pub fn verify(args: &VerifyArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    let s = args.family.build(cfg.circle_length)?;
    let rep = holomorphy_residual(&s, &s.grid(cfg.grid, cfg.grid))?;
    let mut r = Report::new(
        "verify",
        json!({ "family": s.label(), "samples": rep.samples, "max_residual": rep.max, "mean_residual": rep.mean, "worst": rep.worst }),
    );
    r.check(rep.max < cfg.residual_tol, || {
        format!("holomorphy residual {:e} exceeds {} at {:?}", rep.max, cfg.residual_tol, rep.worst)
    });
    Ok(r)
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Time of the centre on the circle.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub center: f64,
    /// Cubic smoothstep cutoff instead of the ball indicator.
    #[arg(long)]
    pub smooth: bool,
    /// Radii, comma separated and increasing.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.15, 0.2, 0.25])]
    pub s: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn energy(args: &EnergyArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    let surf = args.family.build(cfg.circle_length)?;
    let cutoff = if args.smooth { Cutoff::Smooth } else { Cutoff::Sharp };
    let sig = sigma_profile(&surf, args.center, &args.s, cutoff)?;
    let mu = mu_profile(&surf, &args.s, cfg.delta)?;
    let rows = (0..args.s.len()).map(|i| vec![args.s[i], sig.sigma[i], sig.scaled[i], mu.mu[i], mu.scaled[i], sig.sigma_err[i]]);
    let path = cfg.out_path(args.out.as_deref(), "energy.csv");
    write_csv(&path, &["s", "sigma", "sigma_over_s3", "mu", "mu_over_s3", "err"], rows)?;
    let centred_cone = args.family.is_cone() && (args.center - args.family.cone_t).abs() < 1e-12;
    let mut r = Report::new(
        "energy",
        json!({
            "family": surf.label(),
            "cutoff": format!("{cutoff:?}").to_lowercase(),
            "monotone": sig.monotone,
            "scaled_spread": sig.scaled_spread(),
            "zeta_sigma": sig.zeta_sigma,
            "zeta_area": sig.zeta_area,
            "sup_mu_over_s3": mu.sup_scaled,
        }),
    );
    r.files.push(path);
    r.check(sig.monotone, || "s⁻³σ(s) decreases beyond the quadrature error".into());
    if centred_cone {
        let spread = sig.scaled_spread();
        r.check(spread < CONE_SPREAD_TOL, || format!("cone s⁻³σ(s) spread {spread:e} exceeds {CONE_SPREAD_TOL}"));
    }
    Ok(r)
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Point of the circle where the dilations are centred.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Scales at which the dilations are compared with the one used for the
/// limit data.
const DK_SCALES: [f64; 3] = [0.1, 0.03, 0.01];
const DK_CLOUD: usize = 200;

pub fn limit(args: &LimitArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    let surf = args.family.build(cfg.circle_length)?;
    let opts = ClassifyOptions::default();
    let data = classify_limit(&surf, args.t0, &opts)?;
    let reference = cloud(&dilate(&surf, data.s_used, args.t0)?, 0.0, 2.5, DK_CLOUD)?;
    let dk = DK_SCALES
        .iter()
        .map(|&s| {
            let c = cloud(&dilate(&surf, s, args.t0)?, 0.0, 2.5, DK_CLOUD)?;
            match geometric_distance(&c, &reference, &KRegion::default()) {
                Ok(d) => Ok(Some(d)),
                Err(PhcError::EmptyIntersection) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<phc_core::Result<Vec<_>>>()?;
    let mut summary = serde_json::to_value(&data)?;
    summary["family"] = json!(surf.label());
    summary["dK_scales"] = json!(DK_SCALES);
    summary["dK_sequence"] = json!(dk);
    let path = cfg.out_path(args.out.as_deref(), "limit.json");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    let mut r = Report::new("limit", summary);
    r.files.push(path);
    r.check(data.is_consistent(), || {
        format!("p − q = {} disagrees with the linking number {}", data.p_minus_q(), data.linking)
    });
    Ok(r)
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.5, 1.5], allow_negative_numbers = true)]
    pub t_range: Vec<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.01, 0.3])]
    pub u_range: Vec<f64>,
    /// Grid sizes of the refinement sequence, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128])]
    pub levels: Vec<usize>,
    /// Number of sheets (default: q for e17, else 1).
    #[arg(long)]
    pub sheets: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn graph(args: &GraphArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    let surf = args.family.build(cfg.circle_length)?;
    let sheets = args
        .sheets
        .unwrap_or(if args.family.family == FamilyName::E17 { args.family.q as usize } else { 1 });
    let (tr, ur) = ([args.t_range[0], args.t_range[1]], [args.u_range[0], args.u_range[1]]);
    let grids = args
        .levels
        .iter()
        .map(|&n| extract_graph(&surf, tr, ur, n, n, sheets))
        .collect::<phc_core::Result<Vec<_>>>()?;
    let finest = grids.last().context("at least one grid level is required")?;

    let mut failures = Vec::new();
    let mut equations = serde_json::Map::new();
    for eq in GraphEquation::ALL {
        let v = match residual_convergence(&grids, eq) {
            Ok(c) => serde_json::to_value(&c)?,
            Err(e) => {
                failures.push(format!("{}: {e}", eq.label()));
                json!({ "error": e.to_string() })
            }
        };
        equations.insert(eq.label().to_string(), v);
    }
    let taylor = match taylor_fit(finest) {
        Ok(fit) => {
            if fit.ratio >= TAYLOR_RATIO_TOL {
                failures.push(format!("Taylor ratio {:e} is not below {TAYLOR_RATIO_TOL}", fit.ratio));
            }
            json!({
                "selected": fit.selected,
                "ratio": fit.ratio,
                "mismatch_first": fit.mismatch_first,
                "mismatch_second": fit.mismatch_second,
                "c_phi_defect": fit.c_phi_defect,
            })
        }
        Err(e) => {
            failures.push(format!("taylor fit: {e}"));
            json!({ "error": e.to_string() })
        }
    };

    let nu = finest.u.len();
    let rows = finest.sheets.iter().enumerate().flat_map(|(k, sh)| {
        finest.t.iter().enumerate().flat_map(move |(i, &t)| {
            finest
                .u
                .iter()
                .enumerate()
                .map(move |(j, &u)| vec![t, u, k as f64, sh.phi[i * nu + j], sh.nu[i * nu + j]])
        })
    });
    let path = cfg.out_path(args.out.as_deref(), "graph.csv");
    write_csv(&path, &["t", "u", "sheet", "phi", "nu"], rows)?;

    let mut r = Report::new(
        "graph",
        json!({ "family": surf.label(), "sheets": sheets, "levels": args.levels, "equations": equations, "taylor": taylor }),
    );
    r.failures = failures;
    r.files.push(path);
    Ok(r)
}

#[derive(Debug, Args)]
pub struct VertexArgs {
    /// Mode index N (eigenvalue (N+1)(N+4)).
    #[arg(long = "N")]
    pub n: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn vertex(args: &VertexArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    let mode = vertex_mode(args.n)?;
    let sol = mode.sample(cfg.vertex_points)?;
    let scale = (args.n + 4) as f64;
    let rows = (0..sol.theta.len()).map(|i| vec![sol.theta[i], sol.f[i], sol.g[i] * scale]);
    let path = cfg.out_path(args.out.as_deref(), &format!("vertex_N{}.csv", args.n));
    write_csv(&path, &["theta", "f", "f_theta"], rows)?;
    let zeros = mode.derivative_zero_count(4000)?;
    let mut r = Report::new(
        "vertex",
        json!({
            "N": args.n,
            "lambda": mode.lambda,
            "residual": sol.residual,
            "mismatch": sol.mismatch,
            "collocation_diff": sol.collocation_diff,
            "f_theta_zeros": zeros,
        }),
    );
    r.files.push(path);
    r.check(sol.residual < cfg.residual_tol, || {
        format!("equation residual {:e} exceeds {}", sol.residual, cfg.residual_tol)
    });
    Ok(r)
}

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    /// Number of random points (default: config identity_points).
    #[arg(long)]
    pub points: Option<usize>,
}

pub fn identities(args: &IdentitiesArgs, cfg: &RunConfig) -> anyhow::Result<Report> {
    let n = args.points.unwrap_or(cfg.identity_points);
    let circle = cfg.circle_length.map_or_else(Circle::default, Circle::new);
    let rep = identity_suite(n, cfg.seed, circle)?;
    let mut r = Report::new("identities", serde_json::to_value(rep)?);
    r.check(rep.max() < cfg.identity_tol, || {
        format!("identity residual {:e} exceeds {}", rep.max(), cfg.identity_tol)
    });
    Ok(r)
}
