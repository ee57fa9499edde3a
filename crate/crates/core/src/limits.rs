//! Dilations about a point of the vanishing circle, the two-sided distance
//! between sampled surfaces on an annulus, intersection counts with the
//! standard test surfaces, and the resulting limit data `(p, q±, n±)`.

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::cone_dynamics::C_MAX;
use crate::error::{PhcError, Result};
use crate::geometry::{omega_at, to_action_coords, CartesianPoint4, Circle, TangentVector4};
use crate::numerics::roots::newton2;
use crate::surfaces::{ResidualReport, Surface, SurfaceSample};

/// `C_s`: the image of `C` under `(t, x, y, z) ↦ ((t − t0)/s, x/s, y/s, z/s)`.
pub struct DilatedSurface<'a> {
    pub base: &'a dyn Surface,
    pub scale: f64,
    pub t0: f64,
}

impl<'a> DilatedSurface<'a> {
    pub fn new(base: &'a dyn Surface, scale: f64, t0: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(PhcError::OutOfRange {
                name: "scale",
                value: scale,
                detail: "dilation scale must be positive".into(),
            });
        }
        Ok(Self { base, scale, t0 })
    }
}

pub fn dilate(base: &dyn Surface, scale: f64, t0: f64) -> Result<DilatedSurface<'_>> {
    DilatedSurface::new(base, scale, t0)
}

impl Surface for DilatedSurface<'_> {
    fn sample(&self, s1: f64, s2: f64) -> Result<SurfaceSample> {
        let b = self.base.sample(s1, s2)?;
        let k = 1.0 / self.scale;
        let dt = self.base.circle().offset(b.point.t, self.t0);
        Ok(SurfaceSample {
            point: CartesianPoint4::new(dt * k, b.point.x * k, b.point.y * k, b.point.z * k),
            t1: b.t1.scaled(k),
            t2: b.t2.scaled(k),
        })
    }

    fn domain(&self) -> [[f64; 2]; 2] {
        self.base.domain()
    }

    /// The base floor away from the vanishing circle, shrunk with the scale.
    fn sample_domain(&self) -> [[f64; 2]; 2] {
        let (d, mut sd) = (self.base.domain(), self.base.sample_domain());
        for i in 0..2 {
            sd[i][0] = d[i][0] + (sd[i][0] - d[i][0]) * self.scale.min(1.0);
        }
        sd
    }

    fn periodic_axes(&self) -> [bool; 2] {
        self.base.periodic_axes()
    }

    fn circle(&self) -> Circle {
        Circle::new(self.base.circle().length / self.scale)
    }

    fn label(&self) -> String {
        format!("dilate({}, s={}, t0={})", self.base.label(), self.scale, self.t0)
    }

    fn windows(&self, t0: f64, radius: f64) -> Vec<[[f64; 2]; 2]> {
        self.base.windows(self.t0 + self.scale * t0, self.scale * radius)
    }
}

/// Points in the local chart `(t − t0, x, y, z)` with an orthonormal basis of
/// the tangent plane at each point.
#[derive(Debug, Clone, Default)]
pub struct Cloud {
    pub points: Vec<Vector4<f64>>,
    pub planes: Vec<[Vector4<f64>; 2]>,
}

impl Cloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn extend(&mut self, other: Cloud) {
        self.points.extend(other.points);
        self.planes.extend(other.planes);
    }

    /// Rotation `φ ↦ φ + angle` about the z-axis.
    pub fn rotated(&self, angle: f64) -> Cloud {
        let (c, s) = (angle.cos(), angle.sin());
        let rot = |v: &Vector4<f64>| Vector4::new(v[0], c * v[1] - s * v[2], s * v[1] + c * v[2], v[3]);
        Cloud {
            points: self.points.iter().map(rot).collect(),
            planes: self.planes.iter().map(|[a, b]| [rot(a), rot(b)]).collect(),
        }
    }
}

fn orthonormal_plane(a: &TangentVector4, b: &TangentVector4) -> Option<[Vector4<f64>; 2]> {
    let na = a.norm();
    if na == 0.0 {
        return None;
    }
    let e1 = a.0 / na;
    let bp = b.0 - e1 * e1.dot(&b.0);
    let nb = bp.norm();
    if nb < 1e-12 * b.norm() || nb == 0.0 {
        return None;
    }
    Some([e1, bp / nb])
}

/// A window clipped to the sample domain, with periodic parameters padded by
/// `pad` of the window width on both sides.
fn search_box<S: Surface + ?Sized>(surface: &S, w: [[f64; 2]; 2], pad: f64) -> Option<[[f64; 2]; 2]> {
    let sd = surface.sample_domain();
    let periodic = surface.periodic_axes();
    let mut b = w;
    for i in 0..2 {
        if periodic[i] {
            let m = pad * (w[i][1] - w[i][0]);
            b[i] = [w[i][0] - m, w[i][1] + m];
        } else {
            b[i][0] = w[i][0].max(sd[i][0]);
            b[i][1] = w[i][1].min(sd[i][1]);
        }
        if b[i][1] <= b[i][0] {
            return None;
        }
    }
    Some(b)
}

/// Samples an `n × n` grid over each window of `surface` about `t0`, keeping
/// points within `radius` of `(t0, 0)`.
pub fn cloud<S: Surface + ?Sized>(surface: &S, t0: f64, radius: f64, n: usize) -> Result<Cloud> {
    let circle = surface.circle();
    let mut out = Cloud::default();
    for w in surface.windows(t0, radius) {
        let Some([[lo1, hi1], [lo2, hi2]]) = search_box(surface, w, 0.0) else {
            continue;
        };
        let rows = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = lo1 + (hi1 - lo1) * (i as f64 + 0.5) / n as f64;
                let mut part = Cloud::default();
                for j in 0..n {
                    let b = lo2 + (hi2 - lo2) * (j as f64 + 0.5) / n as f64;
                    let smp = surface.sample(a, b)?;
                    let p = smp.point;
                    let v = Vector4::new(circle.offset(p.t, t0), p.x, p.y, p.z);
                    if v.norm() > radius {
                        continue;
                    }
                    if let Some(pl) = orthonormal_plane(&smp.t1, &smp.t2) {
                        part.points.push(v);
                        part.planes.push(pl);
                    }
                }
                Ok(part)
            })
            .collect::<Result<Vec<_>>>()?;
        for r in rows {
            out.extend(r);
        }
    }
    Ok(out)
}

/// The comparison set `1/4 ≤ ρ² + z² ≤ 1` inside the ball of radius 2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KRegion {
    pub inner2: f64,
    pub outer2: f64,
    pub ball: f64,
}

impl Default for KRegion {
    fn default() -> Self {
        Self {
            inner2: 0.25,
            outer2: 1.0,
            ball: 2.0,
        }
    }
}

impl KRegion {
    pub fn contains(&self, v: &Vector4<f64>) -> bool {
        let r2 = v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
        r2 >= self.inner2 && r2 <= self.outer2 && v.norm() <= self.ball
    }
}

/// Nearest-neighbour index structure: points sorted by their first
/// coordinate, searched outward until the coordinate gap exceeds the best
/// distance found.
struct SortedByT<'a> {
    cloud: &'a Cloud,
    order: Vec<usize>,
}

impl<'a> SortedByT<'a> {
    fn new(cloud: &'a Cloud) -> Self {
        let mut order: Vec<usize> = (0..cloud.len()).collect();
        order.sort_by(|&a, &b| cloud.points[a][0].total_cmp(&cloud.points[b][0]));
        Self { cloud, order }
    }

    fn nearest(&self, q: &Vector4<f64>) -> usize {
        let pts = &self.cloud.points;
        let start = self.order.partition_point(|&i| pts[i][0] < q[0]);
        let mut best = (f64::INFINITY, 0usize);
        let mut consider = |k: usize| -> bool {
            let i = self.order[k];
            let gap = pts[i][0] - q[0];
            if gap * gap > best.0 {
                return false;
            }
            let d = (pts[i] - q).norm_squared();
            if d < best.0 {
                best = (d, i);
            }
            true
        };
        let mut up = start;
        let mut down = start;
        let (mut go_up, mut go_down) = (true, true);
        while go_up || go_down {
            if go_up {
                if up < self.order.len() {
                    go_up = consider(up);
                    up += 1;
                } else {
                    go_up = false;
                }
            }
            if go_down {
                if down > 0 {
                    down -= 1;
                    go_down = consider(down);
                } else {
                    go_down = false;
                }
            }
        }
        best.1
    }

    /// Distance from `q` to the tangent plane at its nearest sample.
    fn distance(&self, q: &Vector4<f64>) -> f64 {
        let i = self.nearest(q);
        let v = q - self.cloud.points[i];
        let [e1, e2] = &self.cloud.planes[i];
        (v - e1 * e1.dot(&v) - e2 * e2.dot(&v)).norm()
    }
}

/// `d_K(A, B) = sup_{x ∈ A∩K} dist(x, B) + sup_{y ∈ B∩K} dist(y, A)`; the
/// nearest-sample distance is refined to the distance to that sample's
/// tangent plane, which removes the first-order sampling error.
pub fn geometric_distance(a: &Cloud, b: &Cloud, k: &KRegion) -> Result<f64> {
    let one_sided = |from: &Cloud, to: &Cloud| -> Result<f64> {
        let index = SortedByT::new(to);
        let inside: Vec<&Vector4<f64>> = from.points.iter().filter(|p| k.contains(p)).collect();
        if inside.is_empty() || to.is_empty() {
            return Err(PhcError::EmptyIntersection);
        }
        Ok(inside.par_iter().map(|p| index.distance(p)).reduce(|| 0.0, f64::max))
    };
    Ok(one_sided(a, b)? + one_sided(b, a)?)
}

/// Pseudo-holomorphic test surfaces used to read off the limit data, and the
/// linking sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestSurfaceSpec {
    /// `{t = t0, f = level > 0, |z| < δ}`.
    Cylinder { t0: f64, level: f64, delta: f64 },
    /// `{t = t0, f = level < 0, ρ < δ, sign·z > 0}`.
    Disk { t0: f64, level: f64, delta: f64, sign: i8 },
    /// `{φ = phi0, h = level}`.
    HSlice { level: f64, phi0: f64 },
    /// `{t = t0, ρ² + z² = radius2}`, oriented by its outward normal.
    LinkingSphere { t0: f64, radius2: f64 },
}

pub const TEST_LEVEL: f64 = 0.01;
pub const TEST_DELTA: f64 = 1e-3;

impl TestSurfaceSpec {
    /// Defining equations and their gradients in `(t, x, y, z)`.
    fn equations(&self, p: &CartesianPoint4, circle: Circle) -> ([f64; 2], [[f64; 4]; 2]) {
        let CartesianPoint4 { x, y, z, .. } = *p;
        match *self {
            TestSurfaceSpec::Cylinder { t0, level, .. } | TestSurfaceSpec::Disk { t0, level, .. } => (
                [circle.offset(p.t, t0), 0.5 * (x * x + y * y) - z * z - level],
                [[1.0, 0.0, 0.0, 0.0], [0.0, x, y, -2.0 * z]],
            ),
            TestSurfaceSpec::HSlice { level, phi0 } => {
                let (sn, cs) = phi0.sin_cos();
                (
                    [y * cs - x * sn, z * (x * x + y * y) - level],
                    [[0.0, -sn, cs, 0.0], [0.0, 2.0 * x * z, 2.0 * y * z, x * x + y * y]],
                )
            }
            TestSurfaceSpec::LinkingSphere { t0, radius2 } => (
                [circle.offset(p.t, t0), x * x + y * y + z * z - radius2],
                [[1.0, 0.0, 0.0, 0.0], [0.0, 2.0 * x, 2.0 * y, 2.0 * z]],
            ),
        }
    }

    fn admits(&self, p: &CartesianPoint4) -> bool {
        match *self {
            TestSurfaceSpec::Cylinder { delta, .. } => p.z.abs() < delta,
            TestSurfaceSpec::Disk { delta, sign, .. } => p.rho() < delta && sign as f64 * p.z > 0.0,
            TestSurfaceSpec::HSlice { phi0, .. } => p.x * phi0.cos() + p.y * phi0.sin() > 0.0,
            TestSurfaceSpec::LinkingSphere { .. } => true,
        }
    }

    /// Orientation sign of the intersection with a surface whose tangent
    /// plane is `(T1, T2)`; only the sphere carries a sign.
    fn sign(&self, smp: &SurfaceSample) -> i32 {
        let TestSurfaceSpec::LinkingSphere { .. } = *self else {
            return 1;
        };
        let (mut a, mut b) = (smp.t1.0, smp.t2.0);
        if omega_at(&smp.point).eval(&smp.t1, &smp.t2) < 0.0 {
            std::mem::swap(&mut a, &mut b);
        }
        let n = nalgebra::Vector3::new(smp.point.x, smp.point.y, smp.point.z).normalize();
        let helper = if n.z.abs() < 0.9 {
            nalgebra::Vector3::z()
        } else {
            nalgebra::Vector3::x()
        };
        let s1 = helper.cross(&n).normalize();
        let s2 = n.cross(&s1);
        let m = Matrix4::from_columns(&[
            a,
            b,
            Vector4::new(0.0, s1.x, s1.y, s1.z),
            Vector4::new(0.0, s2.x, s2.y, s2.z),
        ]);
        if m.determinant() >= 0.0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntersectionRoot {
    pub s1: f64,
    pub s2: f64,
    pub point: [f64; 4],
    pub det: f64,
    pub sign: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntersectionCount {
    pub count: usize,
    pub signed: i32,
    pub roots: Vec<IntersectionRoot>,
    /// Seed grid sizes tried and the counts found at each.
    pub refinement: Vec<(usize, usize)>,
}

pub const TRANSVERSALITY_TOL: f64 = 1e-8;

/// Roots of the test-surface equations on `surface`, restricted to the ball
/// of radius `radius` about `(t0, 0)`, from one seed grid of `n × n` cells
/// per window.
pub fn intersections_at<S: Surface + ?Sized>(
    surface: &S,
    test: &TestSurfaceSpec,
    t0: f64,
    radius: f64,
    n: usize,
) -> Result<Vec<IntersectionRoot>> {
    let circle = surface.circle();
    let eval = |s1: f64, s2: f64| -> Result<(SurfaceSample, [f64; 2], [[f64; 2]; 2])> {
        let smp = surface.sample(s1, s2)?;
        let (f, g) = test.equations(&smp.point, circle);
        let dot = |gi: &[f64; 4], t: &TangentVector4| (0..4).map(|k| gi[k] * t.0[k]).sum::<f64>();
        let j = [
            [dot(&g[0], &smp.t1), dot(&g[0], &smp.t2)],
            [dot(&g[1], &smp.t1), dot(&g[1], &smp.t2)],
        ];
        Ok((smp, f, j))
    };
    let mut roots: Vec<IntersectionRoot> = Vec::new();
    for w in surface.windows(t0, radius) {
        let Some([[lo1, hi1], [lo2, hi2]]) = search_box(surface, w, 0.02) else {
            continue;
        };
        // Newton may leave the seed window as long as it stays in the domain.
        let mut bounds = surface.domain();
        let periodic = surface.periodic_axes();
        for (i, (lo, hi)) in [(lo1, hi1), (lo2, hi2)].into_iter().enumerate() {
            if periodic[i] {
                bounds[i] = [lo, hi];
            }
        }
        let xs: Vec<f64> = (0..=n).map(|i| lo1 + (hi1 - lo1) * i as f64 / n as f64).collect();
        let ys: Vec<f64> = (0..=n).map(|j| lo2 + (hi2 - lo2) * j as f64 / n as f64).collect();
        let vals = xs
            .par_iter()
            .map(|&a| ys.iter().map(|&b| eval(a, b).map(|r| r.1)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let changes = |k: usize, i: usize, j: usize| {
            let c = [vals[i][j][k], vals[i + 1][j][k], vals[i][j + 1][k], vals[i + 1][j + 1][k]];
            c.iter().any(|v| *v <= 0.0) && c.iter().any(|v| *v >= 0.0)
        };
        let seeds: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| changes(0, i, j) && changes(1, i, j))
            .collect();
        let found = seeds
            .par_iter()
            .filter_map(|&(i, j)| {
                let x0 = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
                let sol = newton2(
                    |x| eval(x[0], x[1]).ok().map(|(_, f, j)| (f, j)),
                    x0,
                    bounds,
                    1e-12,
                    60,
                )?;
                let (smp, _, _) = eval(sol.x[0], sol.x[1]).ok()?;
                Some((sol, smp))
            })
            .collect::<Vec<_>>();
        for (sol, smp) in found {
            let p = smp.point;
            let off = circle.offset(p.t, t0);
            if off * off + p.rho2() + p.z * p.z >= radius * radius || !test.admits(&p) {
                continue;
            }
            let arr = [p.t, p.x, p.y, p.z];
            let dup = roots.iter().any(|r| {
                let dt = circle.offset(r.point[0], arr[0]);
                (dt * dt + (1..4).map(|k| (r.point[k] - arr[k]).powi(2)).sum::<f64>()).sqrt() < 1e-8
            });
            if dup {
                continue;
            }
            if sol.det.abs() <= TRANSVERSALITY_TOL {
                return Err(PhcError::NonTransverse {
                    s1: sol.x[0],
                    s2: sol.x[1],
                    det: sol.det,
                });
            }
            roots.push(IntersectionRoot {
                s1: sol.x[0],
                s2: sol.x[1],
                point: arr,
                det: sol.det,
                sign: test.sign(&smp),
            });
        }
    }
    Ok(roots)
}

/// Intersection count inside the ball of radius `radius` about `(t0, 0)`,
/// repeated on seed grids of 64, 128 and 256 cells; a count that still
/// changes between the two finest grids is reported as
/// [`PhcError::IncompleteSearch`].
pub fn count_intersections<S: Surface + ?Sized>(
    surface: &S,
    test: &TestSurfaceSpec,
    t0: f64,
    radius: f64,
) -> Result<IntersectionCount> {
    let mut refinement = Vec::new();
    let mut last = Vec::new();
    for n in [64, 128, 256] {
        last = intersections_at(surface, test, t0, radius, n)?;
        refinement.push((n, last.len()));
    }
    if refinement[1].1 != refinement[2].1 {
        return Err(PhcError::IncompleteSearch {
            counts: refinement.iter().map(|r| r.1).collect(),
        });
    }
    Ok(IntersectionCount {
        count: last.len(),
        signed: last.iter().map(|r| r.sign).sum(),
        roots: last,
        refinement,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeConstant {
    pub c: f64,
    /// Jump of the h-slice count at `c` (the φ-winding of that cone).
    pub winding: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitData {
    pub p: usize,
    pub q_plus: usize,
    pub q_minus: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub cone_constants: Vec<ConeConstant>,
    /// Signed count with the linking sphere `{t = t0, ρ² + z² = 1/2}`.
    pub linking: i32,
    pub s_used: f64,
}

impl LimitData {
    /// `p − (q₊ + q₋)`.
    pub fn p_minus_q(&self) -> i64 {
        self.p as i64 - (self.q_plus + self.q_minus) as i64
    }

    pub fn is_consistent(&self) -> bool {
        self.p_minus_q() == self.linking as i64
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub scale: f64,
    /// Smallest h-slice level probed for cones.
    pub c_floor: f64,
    pub c_levels: usize,
    pub seed_grid: usize,
    /// Angle of the h-slice half-plane; the count does not depend on it.
    pub slice_angle: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            scale: 1e-3,
            c_floor: 1e-3,
            c_levels: 40,
            seed_grid: 64,
            slice_angle: 1.0,
        }
    }
}

/// Cone constants of one sign from the jumps of the h-slice count
/// `N(c) = Σ_{c_i > c} b(c_i)` on `(c_floor, 2/3^{3/2}]`.
fn cone_constants<S: Surface + ?Sized>(surface: &S, sign: i8, opts: &ClassifyOptions) -> Result<Vec<ConeConstant>> {
    let count = |c: f64| -> Result<usize> {
        let test = TestSurfaceSpec::HSlice {
            level: sign as f64 * c,
            phi0: opts.slice_angle,
        };
        Ok(intersections_at(surface, &test, 0.0, 1.0, opts.seed_grid)?.len())
    };
    let m = opts.c_levels;
    let levels: Vec<f64> = (0..=m)
        .map(|i| opts.c_floor + (C_MAX * 1.001 - opts.c_floor) * i as f64 / m as f64)
        .collect();
    let counts = levels.par_iter().map(|&c| count(c)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for i in 0..m {
        if counts[i] == counts[i + 1] {
            continue;
        }
        let (mut lo, mut hi) = (levels[i], levels[i + 1]);
        let (n_lo, n_hi) = (counts[i], counts[i + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let nm = count(mid)?;
            if nm == n_lo {
                lo = mid;
            } else if nm == n_hi {
                hi = mid;
            } else {
                // several cones in one bracket; keep the upper jump
                lo = mid;
            }
        }
        out.push(ConeConstant {
            c: 0.5 * (lo + hi),
            winding: n_lo.saturating_sub(n_hi),
            sign,
        });
    }
    Ok(out)
}

/// Limit data of the dilations of `surface` about `t0`, read off at one
/// small scale.
pub fn classify_limit(surface: &dyn Surface, t0: f64, opts: &ClassifyOptions) -> Result<LimitData> {
    let d = DilatedSurface::new(surface, opts.scale, t0)?;
    let cyl = TestSurfaceSpec::Cylinder {
        t0: 0.0,
        level: TEST_LEVEL,
        delta: TEST_DELTA,
    };
    let disk = |sign| TestSurfaceSpec::Disk {
        t0: 0.0,
        level: -TEST_LEVEL,
        delta: TEST_DELTA,
        sign,
    };
    let p = count_intersections(&d, &cyl, 0.0, 1.0)?.count;
    let q_plus = count_intersections(&d, &disk(1), 0.0, 1.0)?.count;
    let q_minus = count_intersections(&d, &disk(-1), 0.0, 1.0)?.count;
    let linking = linking_number(&d)?;
    let mut cones = cone_constants(&d, 1, opts)?;
    let n_plus = cones.len();
    let minus = cone_constants(&d, -1, opts)?;
    let n_minus = minus.len();
    cones.extend(minus);
    Ok(LimitData {
        p,
        q_plus,
        q_minus,
        n_plus,
        n_minus,
        cone_constants: cones,
        linking,
        s_used: opts.scale,
    })
}

/// Signed intersection number with `{t = 0, ρ² + z² = 1/2}` in the chart of
/// `surface`.
pub fn linking_number<S: Surface + ?Sized>(surface: &S) -> Result<i32> {
    let sphere = TestSurfaceSpec::LinkingSphere { t0: 0.0, radius2: 0.5 };
    Ok(count_intersections(surface, &sphere, 0.0, 1.0)?.signed)
}

/// `h/r³` at a sample, `r` the distance to `(t0, 0)`; constant and equal to
/// `±c` on a cone with vertex `t0`.
pub fn h_over_r3(p: &CartesianPoint4, t0: f64, circle: Circle) -> f64 {
    let off = circle.offset(p.t, t0);
    let r2 = off * off + p.rho2() + p.z * p.z;
    to_action_coords(p).h / r2.powf(1.5)
}

/// Tangency defect of the radial field `(t − t0)∂t + x∂x + y∂y + z∂z`:
/// `‖(1 − Π)R‖ / ‖R‖` at each sample.
pub fn cone_field_residual<S: Surface + ?Sized>(surface: &S, t0: f64, samples: &[(f64, f64)]) -> Result<ResidualReport> {
    let circle = surface.circle();
    let vals = samples
        .par_iter()
        .map(|&(a, b)| {
            let smp = surface.sample(a, b)?;
            let p = smp.point;
            let r = Vector4::new(circle.offset(p.t, t0), p.x, p.y, p.z);
            let [e1, e2] = orthonormal_plane(&smp.t1, &smp.t2).ok_or(PhcError::DegenerateFrame { s1: a, s2: b })?;
            let perp = r - e1 * e1.dot(&r) - e2 * e2.dot(&r);
            Ok((perp.norm() / r.norm(), (a, b)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_values(&vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_dynamics::ConeSolution;
    use crate::surfaces::{make_e13, make_e14, make_e15, make_e17};

    #[test]
    fn classify_plane_and_spiral() {
        let opts = ClassifyOptions::default();
        let d = classify_limit(&make_e13(0.7), 0.2, &opts).unwrap();
        assert_eq!((d.p, d.q_plus, d.q_minus, d.n_plus, d.n_minus), (1, 0, 0, 0, 0));
        assert!(d.is_consistent());
        let d = classify_limit(&make_e17(2, 1, 0.0).unwrap(), 0.0, &opts).unwrap();
        assert_eq!((d.p, d.q_plus, d.q_minus, d.n_plus), (2, 0, 0, 0));
    }

    #[test]
    fn classify_cone() {
        let cone = ConeSolution::rational(4, 5).unwrap();
        let c = cone.c();
        let s = make_e15(cone, 1, 0.25).unwrap();
        let d = classify_limit(&s, 0.25, &ClassifyOptions::default()).unwrap();
        assert_eq!((d.p, d.q_plus + d.q_minus, d.n_plus, d.n_minus, d.linking), (0, 0, 1, 0, 0));
        assert!((d.cone_constants[0].c - c).abs() < 1e-9);
        assert_eq!(d.cone_constants[0].winding, 4);
    }

    #[test]
    fn e13_counts() {
        let s = make_e13(0.4);
        let cyl = TestSurfaceSpec::Cylinder {
            t0: 0.3,
            level: TEST_LEVEL,
            delta: TEST_DELTA,
        };
        assert_eq!(count_intersections(&s, &cyl, 0.3, 1.0).unwrap().count, 1);
        let disk = TestSurfaceSpec::Disk {
            t0: 0.3,
            level: -TEST_LEVEL,
            delta: TEST_DELTA,
            sign: 1,
        };
        assert_eq!(count_intersections(&s, &disk, 0.3, 1.0).unwrap().count, 0);
    }

    #[test]
    fn e14_disk_counts() {
        let s = make_e14(1);
        for (sign, expect) in [(1, 1), (-1, 0)] {
            let disk = TestSurfaceSpec::Disk {
                t0: 0.6,
                level: -TEST_LEVEL,
                delta: TEST_DELTA,
                sign,
            };
            assert_eq!(count_intersections(&s, &disk, 0.6, 1.0).unwrap().count, expect);
        }
    }

    #[test]
    fn linking_signs() {
        assert_eq!(linking_number(&dilate(&make_e13(0.0), 1.0, 0.2).unwrap()).unwrap(), 1);
        assert_eq!(linking_number(&dilate(&make_e14(1), 1.0, 0.2).unwrap()).unwrap(), -1);
        assert_eq!(linking_number(&dilate(&make_e14(-1), 1.0, 0.2).unwrap()).unwrap(), -1);
    }

    #[test]
    fn planes_are_radial() {
        let s = make_e13(1.0);
        let r = cone_field_residual(&s, 0.5, &s.grid(16, 16)).unwrap();
        assert!(r.max < 1e-15);
    }

    #[test]
    fn self_distance_vanishes() {
        let s = make_e13(0.2);
        let d = dilate(&s, 0.5, 0.0).unwrap();
        let a = cloud(&d, 0.0, 2.5, 60).unwrap();
        assert!(geometric_distance(&a, &a, &KRegion::default()).unwrap() < 1e-15);
    }
}
