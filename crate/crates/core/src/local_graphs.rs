//! Near a regular point the surface is a union of graphs `(φ_j, ν_j)` over
//! the `(t, u)` half plane, `u = (2f)^{1/2}` and `ν = h/u³`. This module
//! extracts those graphs, checks the first- and second-order equations they
//! satisfy, fits their leading Taylor coefficients at `u = 0`, and solves the
//! angular eigenproblem of the vertex model.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PhcError, Result};
use crate::geometry::{to_action_coords, Circle};
use crate::limits::{intersections_at, TestSurfaceSpec};
use crate::numerics::fd::uniform_derivative;
use crate::numerics::ode::{DenseTrajectory, OdeOptions};
use crate::numerics::quad::composite_gauss;
use crate::numerics::roots::newton2;
use crate::surfaces::{ResidualReport, Surface};

/// Radius of convergence of `w(ν)` as a series in ν: the branch points of
/// `ν = w + 2w³` sit at `w = ±i/√6`, where `|ν| = 2/(3√6)`.
pub const NU_MAX: f64 = 0.272_165_526_975_908_7;

/// Solves `ν = (1 + 2w²)w` for `w = z/u`.
pub fn w_of_nu(nu: f64) -> Result<f64> {
    if !(nu.abs() < NU_MAX) {
        return Err(PhcError::OutOfRadius { nu, radius: NU_MAX });
    }
    let mut w = nu;
    for _ in 0..50 {
        let r = w + 2.0 * w * w * w - nu;
        let step = r / (1.0 + 6.0 * w * w);
        w -= step;
        if step.abs() <= 1e-17 * w.abs().max(1e-300) {
            break;
        }
    }
    Ok(w)
}

/// `κ₁ = ρ²/u² − 1 = 2w²` and `κ₂ = g²ρ²/u⁴ − 1 = 8w² + 12w⁴`.
pub fn kappas(nu: f64) -> Result<(f64, f64)> {
    let w2 = w_of_nu(nu)?.powi(2);
    Ok((2.0 * w2, 8.0 * w2 + 12.0 * w2 * w2))
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSheet {
    /// Row-major over `(t_i, u_j)`.
    pub phi: Vec<f64>,
    pub nu: Vec<f64>,
}

/// Multivalued graph data on a uniform `(t, u)` grid.
#[derive(Debug, Clone, Serialize)]
pub struct GraphGrid {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub sheets: Vec<GraphSheet>,
}

fn linspace(r: [f64; 2], n: usize) -> Vec<f64> {
    (0..n).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64).collect()
}

impl GraphGrid {
    /// A single sheet from closed-form `(φ, ν)`.
    pub fn from_fn<F: Fn(f64, f64) -> (f64, f64)>(t: [f64; 2], u: [f64; 2], nt: usize, nu: usize, f: F) -> Self {
        let t = linspace(t, nt);
        let u = linspace(u, nu);
        let mut sheet = GraphSheet {
            phi: Vec::with_capacity(nt * nu),
            nu: Vec::with_capacity(nt * nu),
        };
        for &ti in &t {
            for &uj in &u {
                let (p, n) = f(ti, uj);
                sheet.phi.push(p);
                sheet.nu.push(n);
            }
        }
        Self {
            t,
            u,
            sheets: vec![sheet],
        }
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.u.len() + j
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.t[1] - self.t[0], self.u[1] - self.u[0])
    }

    /// Smallest `c` with `|ν_j| ≤ c·u` at every node.
    pub fn nu_bound(&self) -> f64 {
        let mut c: f64 = 0.0;
        for s in &self.sheets {
            for i in 0..self.t.len() {
                for (j, &u) in self.u.iter().enumerate() {
                    c = c.max(s.nu[self.idx(i, j)].abs() / u);
                }
            }
        }
        c
    }
}

const FOLD_TOL: f64 = 1e-8;

/// Reads off the sheets of `surface` over a uniform `(t, u)` grid. All
/// sheets are located at the first node, then continued node to node by
/// Newton's method.
pub fn extract_graph(
    surface: &dyn Surface,
    t_range: [f64; 2],
    u_range: [f64; 2],
    nt: usize,
    nu: usize,
    sheets: usize,
) -> Result<GraphGrid> {
    if nt < 2 || nu < 2 || !(u_range[0] > 0.0) || u_range[1] <= u_range[0] || t_range[1] <= t_range[0] {
        return Err(PhcError::InvalidInput("graph grid needs u > 0 and at least 2×2 nodes".into()));
    }
    ensure_t_varies(surface)?;
    let circle = surface.circle();
    let t = linspace(t_range, nt);
    let u = linspace(u_range, nu);

    let cylinder = |ti: f64, uj: f64| TestSurfaceSpec::Cylinder {
        t0: ti,
        level: 0.5 * uj * uj,
        delta: f64::INFINITY,
    };
    let first = intersections_at(surface, &cylinder(t[0], u[0]), t[0], 10.0, 128)?;
    if first.len() != sheets {
        return Err(PhcError::SheetCountMismatch {
            expected: sheets,
            found: first.len(),
            t: t[0],
            u: u[0],
        });
    }

    let mut bounds = surface.domain();
    for (i, periodic) in surface.periodic_axes().into_iter().enumerate() {
        if periodic {
            bounds[i] = [f64::NEG_INFINITY, f64::INFINITY];
        }
    }
    let solve = |seed: [f64; 2], ti: f64, uj: f64| -> Result<([f64; 2], f64, f64)> {
        let eval = |x: [f64; 2]| {
            let smp = surface.sample(x[0], x[1]).ok()?;
            let p = smp.point;
            // f is measured relative to its target so the tolerance is relative in u.
            let k = 1.0 / (uj * uj);
            let f = [circle.offset(p.t, ti), (0.5 * p.rho2() - p.z * p.z) * k - 0.5];
            let df = |v: &crate::geometry::TangentVector4| (p.x * v.0[1] + p.y * v.0[2] - 2.0 * p.z * v.0[3]) * k;
            Some((f, [[smp.t1.0[0], smp.t2.0[0]], [df(&smp.t1), df(&smp.t2)]]))
        };
        let sol = newton2(eval, seed, bounds, 1e-15, 50).ok_or(PhcError::FoldDetected { t: ti, u: uj })?;
        let (_, j) = eval(sol.x).ok_or(PhcError::FoldDetected { t: ti, u: uj })?;
        let scale = (j[0][0].hypot(j[0][1])) * (j[1][0].hypot(j[1][1]));
        if sol.det.abs() <= FOLD_TOL * scale {
            return Err(PhcError::FoldDetected { t: ti, u: uj });
        }
        let p = surface.point(sol.x[0], sol.x[1])?;
        let a = to_action_coords(&p);
        Ok((sol.x, p.y.atan2(p.x), a.h / (uj * uj * uj)))
    };

    let out = first
        .par_iter()
        .map(|root| {
            let mut params = vec![[0.0; 2]; nt * nu];
            let mut sheet = GraphSheet {
                phi: vec![0.0; nt * nu],
                nu: vec![0.0; nt * nu],
            };
            let mut seed = [root.s1, root.s2];
            let mut prev_phi = None;
            for i in 0..nt {
                if i > 0 {
                    seed = params[(i - 1) * nu];
                    prev_phi = Some(sheet.phi[(i - 1) * nu]);
                }
                for j in 0..nu {
                    if j > 0 {
                        seed = params[i * nu + j - 1];
                        prev_phi = Some(sheet.phi[i * nu + j - 1]);
                    }
                    let (x, mut phi, n) = solve(seed, t[i], u[j])?;
                    if let Some(prev) = prev_phi {
                        phi = prev + (phi - prev + PI).rem_euclid(2.0 * PI) - PI;
                        if (phi - prev).abs() > 0.5 * PI {
                            return Err(PhcError::FoldDetected { t: t[i], u: u[j] });
                        }
                    }
                    params[i * nu + j] = x;
                    sheet.phi[i * nu + j] = phi;
                    sheet.nu[i * nu + j] = n;
                }
            }
            Ok((sheet, params))
        })
        .collect::<Result<Vec<_>>>()?;

    // Sheets that merged during continuation.
    for k in 0..nt * nu {
        for a in 0..out.len() {
            for b in a + 1..out.len() {
                let pa = surface.point(out[a].1[k][0], out[a].1[k][1])?;
                let pb = surface.point(out[b].1[k][0], out[b].1[k][1])?;
                let d = circle.offset(pa.t, pb.t).hypot(pa.x - pb.x).hypot(pa.y - pb.y).hypot(pa.z - pb.z);
                if d < 1e-9 {
                    return Err(PhcError::SheetCountMismatch {
                        expected: sheets,
                        found: sheets - 1,
                        t: t[k / nu],
                        u: u[k % nu],
                    });
                }
            }
        }
    }
    Ok(GraphGrid {
        t,
        u,
        sheets: out.into_iter().map(|(s, _)| s).collect(),
    })
}

fn ensure_t_varies(surface: &dyn Surface) -> Result<()> {
    let circle = surface.circle();
    let d = surface.sample_domain();
    let mut t_ref = None;
    for i in 0..5 {
        for j in 0..5 {
            let a = d[0][0] + (d[0][1] - d[0][0]) * (i as f64 + 0.5) / 5.0;
            let b = d[1][0] + (d[1][1] - d[1][0]) * (j as f64 + 0.5) / 5.0;
            let t = surface.point(a, b)?.t;
            match t_ref {
                None => t_ref = Some(t),
                Some(t0) if Circle::offset(&circle, t, t0).abs() > 1e-12 => return Ok(()),
                _ => {}
            }
        }
    }
    Err(PhcError::NotAGraph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GraphEquation {
    /// `h_u = ρ²uφ_t`, `h_t = −g²ρ²u⁻¹φ_u`.
    FirstOrderH,
    /// `ν_u + 3ν/u − (1+κ₁)φ_t = 0`, `ν_t + (1+κ₂)φ_u = 0`.
    FirstOrderNu,
    /// `((1+κ₁)⁻¹(ν_u + 3ν/u))_u + ((1+κ₂)⁻¹ν_t)_t = 0`.
    SecondOrderNu,
    /// `u⁻³((1+κ₂)u³φ_u)_u + ((1+κ₁)φ_t)_t = 0`.
    SecondOrderPhi,
}

impl GraphEquation {
    pub const ALL: [GraphEquation; 4] = [
        GraphEquation::FirstOrderH,
        GraphEquation::FirstOrderNu,
        GraphEquation::SecondOrderNu,
        GraphEquation::SecondOrderPhi,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            GraphEquation::FirstOrderH => "h-system",
            GraphEquation::FirstOrderNu => "nu-system",
            GraphEquation::SecondOrderNu => "nu-second-order",
            GraphEquation::SecondOrderPhi => "phi-second-order",
        }
    }
}

/// Centered differences on the node grid; `None` on the boundary.
struct Diff<'a> {
    grid: &'a GraphGrid,
    ht: f64,
    hu: f64,
}

impl Diff<'_> {
    fn dt(&self, v: &[f64], i: usize, j: usize) -> f64 {
        (v[self.grid.idx(i + 1, j)] - v[self.grid.idx(i - 1, j)]) / (2.0 * self.ht)
    }

    fn du(&self, v: &[f64], i: usize, j: usize) -> f64 {
        (v[self.grid.idx(i, j + 1)] - v[self.grid.idx(i, j - 1)]) / (2.0 * self.hu)
    }
}

/// Pointwise residual of `eq` at interior nodes, all sheets.
pub fn graph_residual(grid: &GraphGrid, eq: GraphEquation) -> Result<ResidualReport> {
    let (nt, nu) = (grid.t.len(), grid.u.len());
    let margin = match eq {
        GraphEquation::FirstOrderH | GraphEquation::FirstOrderNu => 1,
        _ => 2,
    };
    if nt <= 2 * margin || nu <= 2 * margin {
        return Err(PhcError::InvalidInput("graph grid too small for the stencil".into()));
    }
    let (ht, hu) = grid.spacing();
    let d = Diff { grid, ht, hu };
    let mut values = Vec::new();
    for sheet in &grid.sheets {
        let ks = sheet.nu.iter().map(|&n| kappas(n)).collect::<Result<Vec<_>>>()?;
        let k1: Vec<f64> = ks.iter().map(|k| k.0).collect();
        let k2: Vec<f64> = ks.iter().map(|k| k.1).collect();
        let (phi, nuv) = (&sheet.phi, &sheet.nu);
        let u_at = |k: usize| grid.u[k % nu];
        // Fluxes of the divergence-form equations, on all nodes with a centered stencil.
        let (mut fa, mut fb) = (vec![0.0; nt * nu], vec![0.0; nt * nu]);
        if margin == 2 {
            for i in 1..nt - 1 {
                for j in 1..nu - 1 {
                    let k = grid.idx(i, j);
                    let u = u_at(k);
                    let (a, b) = match eq {
                        GraphEquation::SecondOrderNu => (
                            (d.du(nuv, i, j) + 3.0 * nuv[k] / u) / (1.0 + k1[k]),
                            d.dt(nuv, i, j) / (1.0 + k2[k]),
                        ),
                        _ => (
                            (1.0 + k2[k]) * u.powi(3) * d.du(phi, i, j),
                            (1.0 + k1[k]) * d.dt(phi, i, j),
                        ),
                    };
                    fa[k] = a;
                    fb[k] = b;
                }
            }
        }
        for i in margin..nt - margin {
            for j in margin..nu - margin {
                let k = grid.idx(i, j);
                let u = u_at(k);
                let r = match eq {
                    GraphEquation::FirstOrderH => {
                        let h: Vec<f64> = (0..3)
                            .flat_map(|di| (0..3).map(move |dj| (i + di - 1, j + dj - 1)))
                            .map(|(a, b)| nuv[grid.idx(a, b)] * grid.u[b].powi(3))
                            .collect();
                        let h_u = (h[5] - h[3]) / (2.0 * hu);
                        let h_t = (h[7] - h[1]) / (2.0 * ht);
                        let rho2 = u * u * (1.0 + k1[k]);
                        let g2rho2 = u.powi(4) * (1.0 + k2[k]);
                        let r1 = h_u - rho2 * u * d.dt(phi, i, j);
                        let r2 = h_t + g2rho2 / u * d.du(phi, i, j);
                        r1.abs().max(r2.abs())
                    }
                    GraphEquation::FirstOrderNu => {
                        let r1 = d.du(nuv, i, j) + 3.0 * nuv[k] / u - (1.0 + k1[k]) * d.dt(phi, i, j);
                        let r2 = d.dt(nuv, i, j) + (1.0 + k2[k]) * d.du(phi, i, j);
                        r1.abs().max(r2.abs())
                    }
                    GraphEquation::SecondOrderNu => (d.du(&fa, i, j) + d.dt(&fb, i, j)).abs(),
                    GraphEquation::SecondOrderPhi => (d.du(&fa, i, j) / u.powi(3) + d.dt(&fb, i, j)).abs(),
                };
                values.push((r, (grid.t[i], u)));
            }
        }
    }
    Ok(ResidualReport::from_values(&values))
}

/// Residuals below this are treated as exact: the stencil reproduces the
/// solution up to rounding and there is no order to fit.
pub const ROUNDOFF_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub equation: GraphEquation,
    pub h: Vec<f64>,
    pub residual: Vec<f64>,
    /// Least-squares slope of `log residual` against `log h`.
    pub order: Option<f64>,
    pub exact: bool,
}

/// Fitted order of the residual of `eq` over grids of decreasing spacing;
/// [`PhcError::GridTooCoarse`] unless the order lies in `[1.7, 2.3]` or the
/// residual sits at rounding level throughout.
pub fn residual_convergence(grids: &[GraphGrid], eq: GraphEquation) -> Result<Convergence> {
    let mut h = Vec::new();
    let mut residual = Vec::new();
    for g in grids {
        let (ht, hu) = g.spacing();
        h.push(ht.max(hu));
        residual.push(graph_residual(g, eq)?.max);
    }
    let exact = residual.iter().all(|r| *r < ROUNDOFF_RESIDUAL);
    let order = if exact || grids.len() < 2 {
        None
    } else {
        let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = residual.iter().map(|v| v.max(1e-300).ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Some(sxy / sxx)
    };
    if let Some(o) = order {
        if !(1.7..=2.3).contains(&o) {
            return Err(PhcError::GridTooCoarse { order: o });
        }
    }
    Ok(Convergence {
        equation: eq,
        h,
        residual,
        order,
        exact,
    })
}

/// Which Taylor law `4c_ν = φ₀^{(k)}` the data follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TaylorLaw {
    FirstDerivative,
    SecondDerivative,
    /// Both comparisons vanish (e.g. `φ₀` constant).
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SheetFit {
    pub phi0: Vec<f64>,
    pub c_phi: Vec<f64>,
    pub c_nu: Vec<f64>,
    pub phi0_t: Vec<f64>,
    pub phi0_tt: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorFit {
    pub t: Vec<f64>,
    pub sheets: Vec<SheetFit>,
    /// `max |4c_ν − φ′₀|`.
    pub mismatch_first: f64,
    /// `max |4c_ν − φ″₀|`.
    pub mismatch_second: f64,
    /// `max |c_φ + φ″₀/8|`.
    pub c_phi_defect: f64,
    pub ratio: f64,
    pub selected: TaylorLaw,
}

/// Nodes with `u` at most this are used in the per-column fits.
pub const TAYLOR_U_MAX: f64 = 0.1;

fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let svd = m.svd(true, true);
    let sv = &svd.singular_values;
    let (mx, mn) = (sv.max(), sv.min());
    if !(mn > 1e-12 * mx) {
        return Err(PhcError::FitIllConditioned(format!("singular values {mx:e} / {mn:e}")));
    }
    let x = svd
        .solve(&DVector::from_column_slice(rhs), 0.0)
        .map_err(|e| PhcError::FitIllConditioned(e.to_string()))?;
    Ok(x.iter().copied().collect())
}

/// Per `t`-column fits `φ ≈ φ₀ + c_φu² + d u⁴`, `ν ≈ c_νu + e u³`; `φ₀′` and
/// `φ₀″` by 7-point differences along `t`.
pub fn taylor_fit(grid: &GraphGrid) -> Result<TaylorFit> {
    let nu = grid.u.len();
    if grid.u[0] > 0.01 {
        return Err(PhcError::FitIllConditioned(format!(
            "grid starts at u = {}, needs u ≤ 0.01",
            grid.u[0]
        )));
    }
    let cols: Vec<usize> = (0..nu).filter(|&j| grid.u[j] <= TAYLOR_U_MAX).collect();
    let cols: Vec<usize> = if cols.len() >= 6 { cols } else { (0..nu).collect() };
    if cols.len() < 4 || grid.t.len() < 7 {
        return Err(PhcError::FitIllConditioned("too few nodes for the fit".into()));
    }
    let ht = grid.spacing().0;
    let phi_rows: Vec<Vec<f64>> = cols.iter().map(|&j| vec![1.0, grid.u[j].powi(2), grid.u[j].powi(4)]).collect();
    let nu_rows: Vec<Vec<f64>> = cols.iter().map(|&j| vec![grid.u[j], grid.u[j].powi(3)]).collect();

    let mut sheets = Vec::new();
    let (mut m1, mut m2, mut dphi) = (0.0f64, 0.0f64, 0.0f64);
    for sheet in &grid.sheets {
        let mut fit = SheetFit {
            phi0: Vec::new(),
            c_phi: Vec::new(),
            c_nu: Vec::new(),
            phi0_t: Vec::new(),
            phi0_tt: Vec::new(),
        };
        for i in 0..grid.t.len() {
            let phis: Vec<f64> = cols.iter().map(|&j| sheet.phi[grid.idx(i, j)]).collect();
            let nus: Vec<f64> = cols.iter().map(|&j| sheet.nu[grid.idx(i, j)]).collect();
            let a = least_squares(&phi_rows, &phis)?;
            let b = least_squares(&nu_rows, &nus)?;
            fit.phi0.push(a[0]);
            fit.c_phi.push(a[1]);
            fit.c_nu.push(b[0]);
        }
        for i in 0..grid.t.len() {
            fit.phi0_t.push(uniform_derivative(&fit.phi0, ht, i, 1, 7));
            fit.phi0_tt.push(uniform_derivative(&fit.phi0, ht, i, 2, 7));
        }
        for i in 0..grid.t.len() {
            m1 = m1.max((4.0 * fit.c_nu[i] - fit.phi0_t[i]).abs());
            m2 = m2.max((4.0 * fit.c_nu[i] - fit.phi0_tt[i]).abs());
            dphi = dphi.max((fit.c_phi[i] + fit.phi0_tt[i] / 8.0).abs());
        }
        sheets.push(fit);
    }
    let scale = m1.max(m2);
    let (ratio, selected) = if scale < 1e-10 {
        (f64::NAN, TaylorLaw::Indeterminate)
    } else if m1 <= m2 {
        (m1 / m2, TaylorLaw::FirstDerivative)
    } else {
        (m2 / m1, TaylorLaw::SecondDerivative)
    };
    Ok(TaylorFit {
        t: grid.t.clone(),
        sheets,
        mismatch_first: m1,
        mismatch_second: m2,
        c_phi_defect: dphi,
        ratio,
        selected,
    })
}

/// Start of the shooting integration away from the poles.
pub const VERTEX_EPS: f64 = 1e-6;
pub const COLLOCATION_NODES: usize = 128;

type ModeRhs = Box<dyn Fn(f64, &[f64; 2]) -> [f64; 2] + Send + Sync>;

/// Regular solution of `sin⁻³θ (sin³θ f_θ)_θ + (N+1)(N+4) f = 0` with
/// `f_θ(0) = f_θ(π) = 0`, normalized by `f(0) = 1`.
pub struct VertexMode {
    pub n: u32,
    pub lambda: f64,
    left: DenseTrajectory<ModeRhs, 2>,
    right: DenseTrajectory<ModeRhs, 2>,
    right_scale: f64,
    /// Normalized Wronskian of the two shots at `π/2`.
    pub mismatch: f64,
}

fn mode_rhs(lambda: f64) -> ModeRhs {
    Box::new(move |th: f64, y: &[f64; 2]| [y[1], -3.0 * th.cos() / th.sin() * y[1] - lambda * y[0]])
}

impl VertexMode {
    /// `(f, f_θ)`, from the series at the poles.
    pub fn eval(&self, theta: f64) -> Result<[f64; 2]> {
        let l = self.lambda;
        if theta < VERTEX_EPS {
            return Ok([1.0 - l * theta * theta / 8.0, -l * theta / 4.0]);
        }
        if theta > PI - VERTEX_EPS {
            let e = PI - theta;
            let s = self.right_scale * self.parity();
            return Ok([s * (1.0 - l * e * e / 8.0), s * l * e / 4.0]);
        }
        if theta <= 0.5 * PI {
            self.left.eval(theta)
        } else {
            let y = self.right.eval(theta)?;
            Ok([self.right_scale * y[0], self.right_scale * y[1]])
        }
    }

    fn parity(&self) -> f64 {
        if (self.n + 1).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

pub fn vertex_mode(n: u32) -> Result<VertexMode> {
    let lambda = ((n + 1) * (n + 4)) as f64;
    // Dense knots keep re-evaluation between them to a step or two.
    let opts = OdeOptions {
        rtol: 1e-13,
        atol: 1e-15,
        h_init: 1e-3,
        h_max: 0.01,
        max_steps: 1_000_000,
    };
    let e = VERTEX_EPS;
    let start = [1.0 - lambda * e * e / 8.0, -lambda * e / 4.0];
    let left = DenseTrajectory::build(mode_rhs(lambda), opts, e, start, 0.5 * PI)?;
    let sigma = if (n + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let start_r = [sigma * start[0], -sigma * start[1]];
    let right = DenseTrajectory::build(mode_rhs(lambda), opts, PI - e, start_r, 0.5 * PI)?;
    let a = left.eval(0.5 * PI)?;
    let b = right.eval(0.5 * PI)?;
    let w = a[0] * b[1] - a[1] * b[0];
    let mismatch = w.abs() / (a[0].hypot(a[1]) * b[0].hypot(b[1])).max(1e-300);
    if !(mismatch < 1e-8) {
        return Err(PhcError::NoSolution { n, mismatch });
    }
    let right_scale = (a[0] * b[0] + a[1] * b[1]) / (b[0] * b[0] + b[1] * b[1]);
    Ok(VertexMode {
        n,
        lambda,
        left,
        right,
        right_scale,
        mismatch,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexModeSolution {
    pub n: u32,
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    /// `g = f_θ/(N+4)`.
    pub g: Vec<f64>,
    /// `max_θ |sin³θ f_θ + λ∫₀^θ sin³ f|` over the grid, which includes θ = π.
    pub residual: f64,
    pub mismatch: f64,
    /// Max difference against Chebyshev collocation in `cos θ`.
    pub collocation_diff: f64,
}

impl VertexMode {
    pub fn sample(&self, points: usize) -> Result<VertexModeSolution> {
        let theta = linspace([0.0, PI], points);
        let vals = theta.iter().map(|&th| self.eval(th)).collect::<Result<Vec<_>>>()?;
        let f: Vec<f64> = vals.iter().map(|v| v[0]).collect();
        let g: Vec<f64> = vals.iter().map(|v| v[1] / (self.n as f64 + 4.0)).collect();
        Ok(VertexModeSolution {
            n: self.n,
            theta,
            f,
            g,
            residual: self.equation_residual(64)?,
            mismatch: self.mismatch,
            collocation_diff: self.collocation_diff()?,
        })
    }

    /// Integrated form of the equation, checked at `panels + 1` angles.
    pub fn equation_residual(&self, panels: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut integral = 0.0;
        let mut err = None;
        for k in 0..panels {
            let a = PI * k as f64 / panels as f64;
            let b = PI * (k + 1) as f64 / panels as f64;
            integral += composite_gauss(
                |th| match self.eval(th) {
                    Ok(v) => th.sin().powi(3) * v[0],
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                a,
                b,
                1,
                20,
            );
            let v = self.eval(b)?;
            let r = (b.sin().powi(3) * v[1] + self.lambda * integral).abs();
            worst = worst.max(r);
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok(worst)
    }

    /// Chebyshev collocation of `(1 − x²)P″ − 4xP′ + λP = 0` in `x = cos θ`;
    /// the null vector is normalized by `P(1) = 1` and compared at the nodes.
    pub fn collocation_diff(&self) -> Result<f64> {
        let p = collocation_mode(self.lambda, COLLOCATION_NODES);
        let m = p.len() - 1;
        let mut worst: f64 = 0.0;
        for (k, pk) in p.iter().enumerate() {
            let x = (PI * k as f64 / m as f64).cos();
            let f = self.eval(x.clamp(-1.0, 1.0).acos())?[0];
            worst = worst.max((f - pk).abs());
        }
        Ok(worst)
    }

    /// Zeros of `f_θ` on `[0, π]`, counting both poles.
    pub fn derivative_zero_count(&self, samples: usize) -> Result<usize> {
        let mut count = 2;
        let mut prev: Option<f64> = None;
        for k in 1..samples {
            let th = PI * k as f64 / samples as f64;
            let d = self.eval(th)?[1];
            if let Some(p) = prev {
                if p * d < 0.0 {
                    count += 1;
                }
            }
            if d != 0.0 {
                prev = Some(d);
            }
        }
        Ok(count)
    }

    /// `∫₀^π f_θ w(θ) dθ` by composite Gauss–Legendre.
    fn moment<W: Fn(f64) -> f64>(&self, w: W, other: Option<&VertexMode>) -> Result<f64> {
        let mut err = None;
        let v = composite_gauss(
            |th| {
                let a = self.eval(th);
                let b = other.map(|o| o.eval(th)).transpose();
                match (a, b) {
                    (Ok(a), Ok(b)) => a[1] * b.map_or(1.0, |b| b[1]) * w(th),
                    (Err(e), _) | (_, Err(e)) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            PI,
            32,
            20,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `∫ f_θ sin⁴θ dθ` divided by `(∫ f_θ² sin³θ dθ)^{1/2}`.
    pub fn sin4_moment(&self) -> Result<f64> {
        let norm = self.moment(|th| th.sin().powi(3), Some(self))?.sqrt();
        Ok(self.moment(|th| th.sin().powi(4), None)? / norm)
    }
}

fn collocation_mode(lambda: f64, m: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..=m).map(|k| (PI * k as f64 / m as f64).cos()).collect();
    let c = |k: usize| if k == 0 || k == m { 2.0 } else { 1.0 } * if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut d = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..=m {
        for j in 0..=m {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=m {
        let s: f64 = (0..=m).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    let d2 = &d * &d;
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..=m {
        for j in 0..=m {
            a[(i, j)] = (1.0 - x[i] * x[i]) * d2[(i, j)] - 4.0 * x[i] * d[(i, j)];
        }
        a[(i, i)] += lambda;
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (k, _) = svd.singular_values.argmin();
    let row = vt.row(k);
    let norm = row[0];
    row.iter().map(|v| v / norm).collect()
}

/// `∫₀^π f_θ^{(N)} f_θ^{(N′)} sin³θ dθ` for modes normalized to unit
/// `sin³`-weighted norm of `f_θ`.
pub fn mode_orthogonality(a: &VertexMode, b: &VertexMode) -> Result<f64> {
    let w = |th: f64| th.sin().powi(3);
    let na = a.moment(w, Some(a))?.sqrt();
    let nb = b.moment(w, Some(b))?.sqrt();
    Ok(a.moment(w, Some(b))? / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{make_e13, make_e16, E16Variant};

    #[test]
    fn kappas_at_zero_and_small_nu() {
        assert_eq!(kappas(0.0).unwrap(), (0.0, 0.0));
        let (k1, k2) = kappas(1e-4).unwrap();
        assert!((k2 / k1 - 4.0).abs() < 1e-6);
        assert!(matches!(kappas(0.3), Err(PhcError::OutOfRadius { .. })));
    }

    #[test]
    fn nu_round_trip() {
        for nu in [-0.27, -0.1, 0.0, 0.05, 0.2] {
            let w = w_of_nu(nu).unwrap();
            assert!((w * (1.0 + 2.0 * w * w) - nu).abs() < 1e-15);
        }
    }

    #[test]
    fn plane_graph_is_flat() {
        let g = extract_graph(&make_e13(0.4), [0.1, 0.4], [0.01, 0.3], 9, 9, 1).unwrap();
        for s in &g.sheets {
            assert!(s.phi.iter().all(|p| (p - 0.4).abs() < 1e-12));
            assert!(s.nu.iter().all(|n| n.abs() < 1e-12));
        }
        for eq in GraphEquation::ALL {
            assert!(graph_residual(&g, eq).unwrap().max < 1e-12);
        }
    }

    #[test]
    fn constant_t_level_is_not_a_graph() {
        let s = make_e16(E16Variant::TfPositive, 0.2, 0.1).unwrap();
        assert!(matches!(
            extract_graph(&s, [0.1, 0.3], [0.01, 0.2], 5, 5, 1),
            Err(PhcError::NotAGraph)
        ));
    }

    #[test]
    fn non_solution_is_flagged() {
        let g = GraphGrid::from_fn([0.0, 1.0], [0.05, 0.5], 33, 33, |t, u| (t * u, 0.0));
        assert!(graph_residual(&g, GraphEquation::FirstOrderNu).unwrap().max > 0.1);
    }

    #[test]
    fn low_modes_match_polynomials() {
        let m0 = vertex_mode(0).unwrap();
        let m1 = vertex_mode(1).unwrap();
        for k in 0..=50 {
            let th = PI * k as f64 / 50.0;
            assert!((m0.eval(th).unwrap()[0] - th.cos()).abs() < 1e-8);
            let c = th.cos();
            assert!((m1.eval(th).unwrap()[0] - (c * c - 0.2) / 0.8).abs() < 1e-7);
        }
        assert_eq!(m1.derivative_zero_count(2000).unwrap(), 3);
        assert!(mode_orthogonality(&m0, &m1).unwrap().abs() < 1e-7);
        assert!(m1.sin4_moment().unwrap().abs() < 1e-7);
    }
}
