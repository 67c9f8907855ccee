//! Strictly convex obstacle curves and billiard tables.
//!
//! Curves are parametrized internally by a polar/elliptic angle t in
//! [0, 2π); arclength is recovered from local Taylor series of the speed,
//! so orbit solves never touch global quadrature. Boundaries run
//! counterclockwise; the outward normal (T.y, -T.x) points into the
//! billiard domain.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::series::Series;

/// Plain-number description of a curve, as parsed from a table file.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_major: f64,
        semi_minor: f64,
        #[serde(default)]
        rotation: f64,
    },
    FourierCircle {
        center: [f64; 2],
        base_radius: f64,
        /// (harmonic k >= 2, amplitude ε_k, phase φ_k)
        harmonics: Vec<(u32, f64, f64)>,
    },
}

/// Nodes in the cached cumulative-arclength grid (non-circular curves).
const ARC_GRID: usize = 128;
/// Taylor order used for the per-interval arclength series.
const ARC_ORDER: usize = 24;

#[derive(Clone, Debug)]
pub struct ObstacleCurve {
    pub spec: CurveSpec,
    prec: u32,
    center: (Real, Real),
    /// Cumulative arclength at t = i·2π/ARC_GRID (empty for circles).
    arc_grid: Vec<Real>,
    pub perimeter: Real,
    /// Lazily cached per-node (arclength series, inverse) pairs; the
    /// order-24 series are expensive to rebuild on every s ↔ t change
    /// of variables.
    node_cache: NodeCache,
}

#[derive(Debug, Default)]
struct NodeCache(std::sync::Mutex<std::collections::HashMap<usize, std::sync::Arc<(Series, Series)>>>);

impl Clone for NodeCache {
    fn clone(&self) -> Self {
        NodeCache(std::sync::Mutex::new(self.0.lock().unwrap().clone()))
    }
}

impl ObstacleCurve {
    pub fn new(spec: CurveSpec, prec: u32) -> Result<Self> {
        let center = match &spec {
            CurveSpec::Circle { center, .. }
            | CurveSpec::Ellipse { center, .. }
            | CurveSpec::FourierCircle { center, .. } => {
                (Real::from_f64(center[0], prec), Real::from_f64(center[1], prec))
            }
        };
        match &spec {
            CurveSpec::Circle { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::Validation("circle radius must be positive".into()));
                }
            }
            CurveSpec::Ellipse {
                semi_major,
                semi_minor,
                ..
            } => {
                if !(*semi_major >= *semi_minor && *semi_minor > 0.0) {
                    return Err(Error::Validation(
                        "ellipse needs semi_major >= semi_minor > 0".into(),
                    ));
                }
            }
            CurveSpec::FourierCircle {
                base_radius,
                harmonics,
                ..
            } => {
                if *base_radius <= 0.0 {
                    return Err(Error::Validation("base radius must be positive".into()));
                }
                for (k, _, _) in harmonics {
                    if *k < 2 {
                        return Err(Error::Validation(
                            "fourier harmonics start at k = 2".into(),
                        ));
                    }
                }
            }
        }
        let mut curve = ObstacleCurve {
            spec,
            prec,
            center,
            arc_grid: Vec::new(),
            perimeter: Real::zero(prec),
            node_cache: NodeCache::default(),
        };
        curve.build_arc_grid();
        curve.validate_convexity()?;
        Ok(curve)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    fn build_arc_grid(&mut self) {
        if let CurveSpec::Circle { radius, .. } = &self.spec {
            let two_pi = Real::pi(self.prec).mul_pow2(1);
            self.perimeter = &two_pi * &Real::from_f64(*radius, self.prec);
            return;
        }
        let prec = self.prec;
        let two_pi = Real::pi(prec).mul_pow2(1);
        let h = two_pi.div_i64(ARC_GRID as i64);
        let half = h.mul_pow2(-1);
        let mut acc = Real::zero(prec);
        let mut grid = vec![Real::zero(prec)];
        for i in 0..ARC_GRID {
            let mid = &(&h * &Real::from_i64(i as i64, prec)) + &half;
            let sigma = self.arclength_series(&mid, ARC_ORDER);
            let seg = &sigma.eval(&half) - &sigma.eval(&(-&half));
            acc += &seg;
            grid.push(acc.clone());
        }
        self.perimeter = acc;
        self.arc_grid = grid;
    }

    fn validate_convexity(&self) -> Result<()> {
        for i in 0..720 {
            let t = Real::from_f64(i as f64 * std::f64::consts::PI / 360.0, 64);
            let k = self.curvature_t(&t).to_f64();
            if k <= 1e-9 {
                return Err(Error::Validation(format!(
                    "curvature {k:.3e} not strictly positive at t = {:.4}",
                    t.to_f64()
                )));
            }
        }
        Ok(())
    }

    /// Taylor series of the position in δt around t0.
    pub fn pos_series(&self, t0: &Real, order: usize) -> (Series, Series) {
        let prec = self.prec.max(t0.prec());
        match &self.spec {
            CurveSpec::Circle { radius, .. } => {
                let r = Real::from_f64(*radius, prec);
                let cx = crate::series::taylor_cos(t0, order).scale(&r);
                let sx = crate::series::taylor_sin(t0, order).scale(&r);
                (
                    cx.add(&Series::constant(self.center.0.with_prec(prec), order)),
                    sx.add(&Series::constant(self.center.1.with_prec(prec), order)),
                )
            }
            CurveSpec::Ellipse {
                semi_major,
                semi_minor,
                rotation,
                ..
            } => {
                let a = Real::from_f64(*semi_major, prec);
                let b = Real::from_f64(*semi_minor, prec);
                let rot = Real::from_f64(*rotation, prec);
                let (sr, cr) = rot.sin_cos();
                let xe = crate::series::taylor_cos(t0, order).scale(&a);
                let ye = crate::series::taylor_sin(t0, order).scale(&b);
                let x = xe.scale(&cr).sub(&ye.scale(&sr));
                let y = xe.scale(&sr).add(&ye.scale(&cr));
                (
                    x.add(&Series::constant(self.center.0.with_prec(prec), order)),
                    y.add(&Series::constant(self.center.1.with_prec(prec), order)),
                )
            }
            CurveSpec::FourierCircle {
                base_radius,
                harmonics,
                ..
            } => {
                let r0 = Real::from_f64(*base_radius, prec);
                // r(t) = R (1 + Σ ε_k cos(k t + φ_k))
                let mut r = Series::constant(Real::one(prec), order);
                for (k, eps, phase) in harmonics {
                    let kk = Real::from_i64(*k as i64, prec);
                    let at = &(&kk * t0) + &Real::from_f64(*phase, prec);
                    let term = crate::series::taylor_cos(&at, order)
                        .scale_var(&kk)
                        .scale(&Real::from_f64(*eps, prec));
                    r = r.add(&term);
                }
                let r = r.scale(&r0);
                let ct = crate::series::taylor_cos(t0, order);
                let st = crate::series::taylor_sin(t0, order);
                (
                    r.mul(&ct)
                        .add(&Series::constant(self.center.0.with_prec(prec), order)),
                    r.mul(&st)
                        .add(&Series::constant(self.center.1.with_prec(prec), order)),
                )
            }
        }
    }

    /// Series of |dγ/dt| in δt around t0 (order coefficients).
    pub fn speed_series(&self, t0: &Real, order: usize) -> Series {
        let (x, y) = self.pos_series(t0, order + 1);
        let xp = x.derivative();
        let yp = y.derivative();
        xp.mul(&xp).add(&yp.mul(&yp)).truncate(order).sqrt()
    }

    /// Arclength accumulated from t0: σ(δt) with σ(0) = 0.
    pub fn arclength_series(&self, t0: &Real, order: usize) -> Series {
        if order == 0 {
            return Series::constant(Real::zero(self.prec), 0);
        }
        self.speed_series(t0, order - 1).integral()
    }

    pub fn point(&self, t: &Real) -> (Real, Real) {
        let (x, y) = self.pos_series(t, 0);
        (x.c[0].clone(), y.c[0].clone())
    }

    /// Unit tangent at t.
    pub fn tangent(&self, t: &Real) -> (Real, Real) {
        let (x, y) = self.pos_series(t, 1);
        let dx = x.c[1].clone();
        let dy = y.c[1].clone();
        let n = (&(&dx * &dx) + &(&dy * &dy)).sqrt();
        (&dx / &n, &dy / &n)
    }

    /// Outward unit normal at t (points into the billiard domain).
    pub fn normal(&self, t: &Real) -> (Real, Real) {
        let (tx, ty) = self.tangent(t);
        (ty, -&tx)
    }

    /// Curvature at parameter t (positive for these convex curves).
    pub fn curvature_t(&self, t: &Real) -> Real {
        let (x, y) = self.pos_series(t, 2);
        let xp = &x.c[1];
        let yp = &y.c[1];
        let xpp = x.c[2].mul_i64(2);
        let ypp = y.c[2].mul_i64(2);
        let cross = &(xp * &ypp) - &(yp * &xpp);
        let sp2 = &(xp * xp) + &(yp * yp);
        &cross / &(&sp2 * &sp2.sqrt())
    }

    /// Curvature at arclength s.
    pub fn curvature(&self, s: &Real) -> Real {
        let t = self.t_of_s(s);
        self.curvature_t(&t)
    }

    /// Cached (arclength series, inverse) at grid node i.
    fn node_series(&self, node: usize) -> std::sync::Arc<(Series, Series)> {
        if let Some(hit) = self.node_cache.0.lock().unwrap().get(&node) {
            return hit.clone();
        }
        let two_pi = Real::pi(self.prec).mul_pow2(1);
        let h = two_pi.div_i64(ARC_GRID as i64);
        let t_node = &h * &Real::from_i64(node as i64, self.prec);
        let sigma = self.arclength_series(&t_node, ARC_ORDER);
        let inv = sigma.inverse();
        let entry = std::sync::Arc::new((sigma, inv));
        self.node_cache.0.lock().unwrap().insert(node, entry.clone());
        entry
    }

    /// Global arclength from t = 0, for t in [0, 2π). Exact for circles,
    /// grid + local series otherwise.
    pub fn arclength(&self, t: &Real) -> Real {
        let prec = self.prec;
        if let CurveSpec::Circle { radius, .. } = &self.spec {
            return t * &Real::from_f64(*radius, prec);
        }
        let two_pi = Real::pi(prec).mul_pow2(1);
        let h = two_pi.div_i64(ARC_GRID as i64);
        let fi = (t / &h).floor_i64().clamp(0, ARC_GRID as i64 - 1);
        let t_node = &h * &Real::from_i64(fi, prec);
        let dt = t - &t_node;
        let sigma = &self.node_series(fi as usize).0;
        &self.arc_grid[fi as usize] + &sigma.eval(&dt)
    }

    /// Invert arclength: t with arclength(t) = s (s reduced mod perimeter).
    pub fn t_of_s(&self, s: &Real) -> Real {
        let prec = self.prec;
        if let CurveSpec::Circle { radius, .. } = &self.spec {
            return s / &Real::from_f64(*radius, prec);
        }
        let per = &self.perimeter;
        let mut s = s.clone();
        while s.is_negative() {
            s += per;
        }
        while &s >= per {
            s -= per;
        }
        // bracket on the grid
        let mut lo = 0usize;
        let mut hi = ARC_GRID;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.arc_grid[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let two_pi = Real::pi(prec).mul_pow2(1);
        let h = two_pi.div_i64(ARC_GRID as i64);
        let t_node = &h * &Real::from_i64(lo as i64, prec);
        // invert the local series: δs -> δt
        let inv = &self.node_series(lo).1;
        let ds = &s - &self.arc_grid[lo];
        &t_node + &inv.eval(&ds)
    }

    /// Position and derivatives w.r.t. arclength up to `order`, at
    /// arclength s: returns [(x, y), (dx/ds, dy/ds), ...].
    pub fn eval_arclength_jet(&self, s: &Real, order: usize) -> Vec<(Real, Real)> {
        let t = self.t_of_s(s);
        let (x, y) = self.pos_series(&t, order + 1);
        let sigma = self.arclength_series(&t, order + 1);
        let dt_of_ds = sigma.inverse();
        let xs = x.compose(&dt_of_ds);
        let ys = y.compose(&dt_of_ds);
        (0..=order)
            .map(|j| {
                let f = factorial_real(j, self.prec);
                (&xs.c[j] * &f, &ys.c[j] * &f)
            })
            .collect()
    }

    pub fn center_f64(&self) -> (f64, f64) {
        match &self.spec {
            CurveSpec::Circle { center, .. }
            | CurveSpec::Ellipse { center, .. }
            | CurveSpec::FourierCircle { center, .. } => (center[0], center[1]),
        }
    }

    pub fn point_f64(&self, t: f64) -> (f64, f64) {
        let tr = Real::from_f64(t, 64);
        let (x, y) = self.point(&tr);
        (x.to_f64(), y.to_f64())
    }

    pub fn tangent_f64(&self, t: f64) -> (f64, f64) {
        let tr = Real::from_f64(t, 64);
        let (x, y) = self.tangent(&tr);
        (x.to_f64(), y.to_f64())
    }
}

fn factorial_real(n: usize, prec: u32) -> Real {
    let mut f = Real::one(prec);
    for i in 2..=n as i64 {
        f = f.mul_i64(i);
    }
    f
}

/// Non-eclipse check report.
#[derive(Clone, Debug)]
pub struct NonEclipseReport {
    pub pass: bool,
    pub margin: f64,
    /// (i, j, k): obstacle k realizes the minimum distance to the hull of i∪j.
    pub witness: (usize, usize, usize),
}

#[derive(Clone, Debug)]
pub struct BilliardTable {
    pub obstacles: Vec<ObstacleCurve>,
    pub non_eclipse_margin: f64,
    pub grazing_guard: f64,
    /// Cached boundary samples (t, x, y) used for collision prescans.
    scan: Vec<Vec<(f64, f64, f64)>>,
}

/// Default required clearance between obstacles and two-obstacle hulls.
pub const DEFAULT_NON_ECLIPSE_MARGIN: f64 = 1e-6;
pub const DEFAULT_GRAZING_GUARD: f64 = 1e-3;
/// Samples per obstacle in the hull check.
const HULL_SAMPLES: usize = 512;

impl BilliardTable {
    pub fn new(obstacles: Vec<ObstacleCurve>) -> Result<Self> {
        Self::with_margin(obstacles, DEFAULT_NON_ECLIPSE_MARGIN)
    }

    pub fn with_margin(obstacles: Vec<ObstacleCurve>, margin: f64) -> Result<Self> {
        let mut table = BilliardTable {
            obstacles,
            non_eclipse_margin: margin,
            grazing_guard: DEFAULT_GRAZING_GUARD,
            scan: Vec::new(),
        };
        if table.obstacles.len() < 3 {
            return Err(Error::Validation(format!(
                "need at least 3 obstacles, got {}",
                table.obstacles.len()
            )));
        }
        table.check_disjoint()?;
        let rep = table.non_eclipse_check()?;
        if !rep.pass {
            let (i, j, k) = rep.witness;
            return Err(Error::Validation(format!(
                "non-eclipse fails: obstacle {k} is within {:.3e} of the hull of {i} and {j}",
                rep.margin
            )));
        }
        table.scan = (0..table.m())
            .map(|i| {
                (0..HULL_SAMPLES)
                    .map(|k| {
                        let t = param_of(k);
                        let (x, y) = table.obstacles[i].point_f64(t);
                        (t, x, y)
                    })
                    .collect()
            })
            .collect();
        Ok(table)
    }

    /// Cached boundary samples (t, x, y) of obstacle i.
    pub fn scan_samples(&self, i: usize) -> &[(f64, f64, f64)] {
        &self.scan[i]
    }

    pub fn m(&self) -> usize {
        self.obstacles.len()
    }

    fn samples(&self, i: usize) -> Vec<(f64, f64)> {
        (0..HULL_SAMPLES)
            .map(|k| {
                self.obstacles[i].point_f64(k as f64 * 2.0 * std::f64::consts::PI / HULL_SAMPLES as f64)
            })
            .collect()
    }

    fn check_disjoint(&self) -> Result<()> {
        let pts: Vec<_> = (0..self.m()).map(|i| self.samples(i)).collect();
        for i in 0..self.m() {
            for j in i + 1..self.m() {
                let mut dmin = f64::INFINITY;
                for p in &pts[i] {
                    for q in &pts[j] {
                        let d = (p.0 - q.0).hypot(p.1 - q.1);
                        if d < dmin {
                            dmin = d;
                        }
                    }
                }
                if dmin < self.non_eclipse_margin {
                    return Err(Error::Validation(format!(
                        "obstacles {i} and {j} are within {dmin:.3e} of each other"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Outer common tangent parameters of obstacles (i, j), refined by a
    /// 2-variable Newton on the tangency conditions.
    fn outer_tangents(&self, i: usize, j: usize) -> Result<Vec<((f64, f64), (f64, f64))>> {
        let ci = &self.obstacles[i];
        let cj = &self.obstacles[j];
        // seed from the convex hull of the sampled union: hull edges that
        // connect the two obstacles approximate the tangent segments
        let si = self.samples(i);
        let sj = self.samples(j);
        let mut tagged: Vec<(f64, f64, usize, usize)> = Vec::new();
        for (k, p) in si.iter().enumerate() {
            tagged.push((p.0, p.1, 0, k));
        }
        for (k, p) in sj.iter().enumerate() {
            tagged.push((p.0, p.1, 1, k));
        }
        let hull = convex_hull(&tagged);
        let mut seeds = Vec::new();
        for w in 0..hull.len() {
            let a = &hull[w];
            let b = &hull[(w + 1) % hull.len()];
            if a.2 != b.2 {
                let (ti, tj) = if a.2 == 0 {
                    (param_of(a.3), param_of(b.3))
                } else {
                    (param_of(b.3), param_of(a.3))
                };
                seeds.push((ti, tj));
            }
        }
        if seeds.len() != 2 {
            return Err(Error::Internal(format!(
                "expected 2 hull crossings between obstacles {i} and {j}, found {}",
                seeds.len()
            )));
        }
        let mut out = Vec::new();
        for (mut ti, mut tj) in seeds {
            // Newton on F = (cross(Ti, q - p), cross(Tj, q - p)) = 0
            for _ in 0..60 {
                let p = ci.point_f64(ti);
                let q = cj.point_f64(tj);
                let tti = ci.tangent_f64(ti);
                let ttj = cj.tangent_f64(tj);
                let d = (q.0 - p.0, q.1 - p.1);
                let f1 = tti.0 * d.1 - tti.1 * d.0;
                let f2 = ttj.0 * d.1 - ttj.1 * d.0;
                if f1.abs() < 1e-13 && f2.abs() < 1e-13 {
                    break;
                }
                let h = 1e-7;
                let jac = {
                    let fi = |ti: f64, tj: f64| {
                        let p = ci.point_f64(ti);
                        let q = cj.point_f64(tj);
                        let tti = ci.tangent_f64(ti);
                        let ttj = cj.tangent_f64(tj);
                        let d = (q.0 - p.0, q.1 - p.1);
                        (tti.0 * d.1 - tti.1 * d.0, ttj.0 * d.1 - ttj.1 * d.0)
                    };
                    let (a1, a2) = fi(ti + h, tj);
                    let (b1, b2) = fi(ti - h, tj);
                    let (c1, c2) = fi(ti, tj + h);
                    let (d1, d2) = fi(ti, tj - h);
                    [
                        [(a1 - b1) / (2.0 * h), (c1 - d1) / (2.0 * h)],
                        [(a2 - b2) / (2.0 * h), (c2 - d2) / (2.0 * h)],
                    ]
                };
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det.abs() < 1e-14 {
                    return Err(Error::NonConvergence(format!(
                        "tangent solver singular for pair ({i},{j})"
                    )));
                }
                let du = (f1 * jac[1][1] - f2 * jac[0][1]) / det;
                let dv = (f2 * jac[0][0] - f1 * jac[1][0]) / det;
                ti -= du;
                tj -= dv;
            }
            let p = ci.point_f64(ti);
            let q = cj.point_f64(tj);
            out.push((p, q));
        }
        Ok(out)
    }

    pub fn non_eclipse_check(&self) -> Result<NonEclipseReport> {
        if self.m() < 3 {
            return Err(Error::Validation("non-eclipse needs at least 3 obstacles".into()));
        }
        let mut min_margin = f64::INFINITY;
        let mut witness = (0, 0, 0);
        let mut pass = true;
        for i in 0..self.m() {
            for j in i + 1..self.m() {
                // hull of the two obstacles: sampled boundary points plus
                // the refined tangent endpoints
                let mut tagged: Vec<(f64, f64, usize, usize)> = Vec::new();
                for p in self.samples(i).into_iter().chain(self.samples(j)) {
                    tagged.push((p.0, p.1, 0, 0));
                }
                for (p, q) in self.outer_tangents(i, j)? {
                    tagged.push((p.0, p.1, 0, 0));
                    tagged.push((q.0, q.1, 0, 0));
                }
                let hull = convex_hull(&tagged);
                let poly: Vec<(f64, f64)> = hull.iter().map(|h| (h.0, h.1)).collect();
                for k in 0..self.m() {
                    if k == i || k == j {
                        continue;
                    }
                    for p in self.samples(k) {
                        let d = signed_distance_to_convex(&poly, p);
                        if d < min_margin {
                            min_margin = d;
                            witness = (i, j, k);
                        }
                        if d < self.non_eclipse_margin {
                            pass = false;
                        }
                    }
                }
            }
        }
        Ok(NonEclipseReport {
            pass,
            margin: min_margin,
            witness,
        })
    }
}

fn param_of(sample_index: usize) -> f64 {
    sample_index as f64 * 2.0 * std::f64::consts::PI / HULL_SAMPLES as f64
}

/// Monotone-chain convex hull over tagged points (x, y, owner, index).
fn convex_hull(pts: &[(f64, f64, usize, usize)]) -> Vec<(f64, f64, usize, usize)> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    p.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let n = p.len();
    if n < 3 {
        return p;
    }
    let cross = |o: &(f64, f64, usize, usize), a: &(f64, f64, usize, usize), b: &(f64, f64, usize, usize)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64, usize, usize)> = Vec::with_capacity(2 * n);
    for pt in p.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(*pt);
    }
    let lower_len = hull.len() + 1;
    for pt in p.iter().rev() {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(*pt);
    }
    hull.pop();
    hull
}

/// Distance from a point to the boundary of a convex polygon; negative if
/// the point lies inside.
fn signed_distance_to_convex(poly: &[(f64, f64)], p: (f64, f64)) -> f64 {
    let n = poly.len();
    let mut dmin = f64::INFINITY;
    let mut inside = true;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let e = (b.0 - a.0, b.1 - a.1);
        let w = (p.0 - a.0, p.1 - a.1);
        // hull is counterclockwise: inside means left of every edge
        if e.0 * w.1 - e.1 * w.0 < 0.0 {
            inside = false;
        }
        let t = ((w.0 * e.0 + w.1 * e.1) / (e.0 * e.0 + e.1 * e.1)).clamp(0.0, 1.0);
        let proj = (a.0 + t * e.0, a.1 + t * e.1);
        let d = (p.0 - proj.0).hypot(p.1 - proj.1);
        if d < dmin {
            dmin = d;
        }
    }
    if inside {
        -dmin
    } else {
        dmin
    }
}
