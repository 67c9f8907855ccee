//! Periodic and near-homoclinic billiard orbits for prescribed symbol
//! words, found by variational length minimization.
//!
//! The collision chain is parametrized by the internal curve parameter of
//! each obstacle; the length functional is parametrization invariant, so
//! stationarity in these variables is stationarity in arclength. A f64
//! coordinate-descent pass seeds an extended-precision Newton iteration on
//! the gradient with the (cyclic) tridiagonal Hessian of the chain.

use crate::billiard::{step_jet_t, TPoint};
use crate::error::{Error, Result};
use crate::geometry::BilliardTable;
use crate::jet2::{mat_mul, mat_trace};
use crate::real::Real;
use crate::symbolic::SymbolicWord;

#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub word: SymbolicWord,
    /// Obstacle index per collision (word symbol − 1).
    pub obstacles: Vec<usize>,
    /// Internal curve parameter per collision.
    pub t: Vec<Real>,
    /// Arclength coordinate per collision.
    pub s: Vec<Real>,
    /// Reflection angle per collision.
    pub phi: Vec<Real>,
    /// Flight length of the segment leaving collision j.
    pub flights: Vec<Real>,
    pub monodromy: [[Real; 2]; 2],
    /// Contracting Floquet multiplier (|λ| < 1; sign retained).
    pub lambda: Real,
    /// Map Lyapunov exponent −(1/p) log |λ|.
    pub le: Real,
    pub flow_period: Real,
    /// Max-norm of the length gradient at the solution.
    pub grad_residual: Real,
}

#[derive(Clone, Debug)]
pub struct HomoclinicSegment {
    pub core: PeriodicOrbit,
    pub connector: SymbolicWord,
    pub depth: usize,
    /// Obstacle indices of the finite segment realizing w_O^m w_c w_O^m.
    pub obstacles: Vec<usize>,
    pub t: Vec<Real>,
    pub phi: Vec<Real>,
    /// Index of the anchor on the incoming side (start of the last block
    /// before the excursion).
    pub anchor1: usize,
    /// Index of the anchor on the outgoing side (start of the first block
    /// after the excursion).
    pub anchor2: usize,
    pub grad_residual: Real,
}

/// Residual target exponent relative to working precision: Newton is run
/// until the gradient drops below 2^(margin − prec).
const RESIDUAL_MARGIN: i64 = 24;

fn word_obstacles(table: &BilliardTable, word: &SymbolicWord) -> Result<Vec<usize>> {
    if !word.is_admissible(table.m()) {
        return Err(Error::Validation(format!(
            "word {word} is not admissible on a table with {} obstacles",
            table.m()
        )));
    }
    Ok(word.symbols.iter().map(|&s| s as usize - 1).collect())
}

/// f64 seed for the collision parameters: aim at the neighboring
/// obstacles, then coordinate-descent sweeps on the chain length.
fn seed_chain(
    table: &BilliardTable,
    obstacles: &[usize],
    cyclic: bool,
    pinned: Option<(f64, f64)>,
) -> Vec<f64> {
    let p = obstacles.len();
    let mut t: Vec<f64> = (0..p)
        .map(|j| {
            let c = table.obstacles[obstacles[j]].center_f64();
            let prev = table.obstacles[obstacles[(j + p - 1) % p]].center_f64();
            let next = table.obstacles[obstacles[(j + 1) % p]].center_f64();
            let dx = (prev.0 - c.0) + (next.0 - c.0);
            let dy = (prev.1 - c.1) + (next.1 - c.1);
            dy.atan2(dx).rem_euclid(2.0 * std::f64::consts::PI)
        })
        .collect();
    if let Some((a, b)) = pinned {
        t[0] = a;
        t[p - 1] = b;
    }
    let lo = if cyclic || pinned.is_none() { 0 } else { 1 };
    let hi = if cyclic || pinned.is_none() { p } else { p - 1 };
    for _ in 0..200 {
        let mut moved = 0.0f64;
        for j in lo..hi {
            let prev = {
                let k = (j + p - 1) % p;
                table.obstacles[obstacles[k]].point_f64(t[k])
            };
            let next = {
                let k = (j + 1) % p;
                table.obstacles[obstacles[k]].point_f64(t[k])
            };
            let curve = &table.obstacles[obstacles[j]];
            // a few 1D Newton steps on d/dt of the two-segment length
            for _ in 0..4 {
                let h = 1e-6;
                let f = |tt: f64| {
                    let q = curve.point_f64(tt);
                    ((q.0 - prev.0).hypot(q.1 - prev.1)) + ((q.0 - next.0).hypot(q.1 - next.1))
                };
                let d1 = (f(t[j] + h) - f(t[j] - h)) / (2.0 * h);
                let d2 = (f(t[j] + h) - 2.0 * f(t[j]) + f(t[j] - h)) / (h * h);
                if d2.abs() < 1e-12 {
                    break;
                }
                let step = (d1 / d2).clamp(-0.5, 0.5);
                t[j] -= step;
                moved = moved.max(step.abs());
            }
        }
        if moved < 1e-13 {
            break;
        }
    }
    t
}

struct ChainGeometry {
    /// Per collision: position, first and second parameter derivatives.
    pos: Vec<((Real, Real), (Real, Real), (Real, Real))>,
}

fn chain_geometry(table: &BilliardTable, obstacles: &[usize], t: &[Real]) -> ChainGeometry {
    let pos = t
        .iter()
        .zip(obstacles)
        .map(|(tj, &oj)| {
            let (xs, ys) = table.obstacles[oj].pos_series(tj, 2);
            (
                (xs.c[0].clone(), ys.c[0].clone()),
                (xs.c[1].clone(), ys.c[1].clone()),
                (xs.c[2].mul_pow2(1), ys.c[2].mul_pow2(1)),
            )
        })
        .collect();
    ChainGeometry { pos }
}

/// Gradient and Hessian of the chain length in the free parameters.
/// For a cyclic chain all p parameters are free; for a pinned chain the
/// first and last are fixed and only the interior enters.
fn length_gradient_hessian(
    geo: &ChainGeometry,
    cyclic: bool,
    prec: u32,
) -> (Vec<Real>, Vec<Vec<Real>>) {
    let p = geo.pos.len();
    let zero = || Real::zero(prec);
    // edge data between consecutive collisions (cyclically)
    let edges: Vec<(Real, (Real, Real))> = (0..if cyclic { p } else { p - 1 })
        .map(|j| {
            let a = &geo.pos[j].0;
            let b = &geo.pos[(j + 1) % p].0;
            let e = (&b.0 - &a.0, &b.1 - &a.1);
            let len = (&(&e.0 * &e.0) + &(&e.1 * &e.1)).sqrt();
            let u = (&e.0 / &len, &e.1 / &len);
            (len, u)
        })
        .collect();
    let dot = |a: &(Real, Real), b: &(Real, Real)| &(&a.0 * &b.0) + &(&a.1 * &b.1);
    // projector application: (I − uuᵀ) w
    let proj = |u: &(Real, Real), w: &(Real, Real)| {
        let uw = dot(u, w);
        (&w.0 - &(&u.0 * &uw), &w.1 - &(&u.1 * &uw))
    };
    let (lo, hi) = if cyclic { (0, p) } else { (1, p - 1) };
    let nfree = hi - lo;
    let mut grad = vec![zero(); nfree];
    let mut hess = vec![vec![zero(); nfree]; nfree];
    for j in lo..hi {
        let g1 = &geo.pos[j].1;
        let g2 = &geo.pos[j].2;
        // incoming edge j−1 → j, outgoing edge j → j+1
        let ein = &edges[(j + p - 1) % p];
        let eout = &edges[j];
        let gj = dot(g1, &ein.1) - dot(g1, &eout.1);
        grad[j - lo] = gj;
        // diagonal
        let pin = proj(&ein.1, g1);
        let pout = proj(&eout.1, g1);
        let hd = dot(g2, &ein.1) - dot(g2, &eout.1)
            + &dot(g1, &pin) / &ein.0
            + &dot(g1, &pout) / &eout.0;
        hess[j - lo][j - lo] = hd;
        // off-diagonal with the next collision (shared edge j → j+1)
        let jn = (j + 1) % p;
        if cyclic || (jn >= lo && jn < hi && jn > j) {
            let gnext = &geo.pos[jn].1;
            let off = -&(&dot(g1, &proj(&eout.1, gnext)) / &eout.0);
            let col = (jn + p - lo) % p;
            if col < nfree {
                hess[j - lo][col] += &off;
                hess[col][j - lo] += &off;
            }
        }
    }
    (grad, hess)
}

/// Dense linear solve with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<Real>>, mut b: Vec<Real>) -> Result<Vec<Real>> {
    let n = b.len();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if a[i][k].abs() > a[piv][k].abs() {
                piv = i;
            }
        }
        if a[piv][k].is_zero() {
            return Err(Error::NonConvergence("singular Newton system".into()));
        }
        a.swap(k, piv);
        b.swap(k, piv);
        let inv = a[k][k].recip();
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] * &inv;
            for j in k..n {
                let upd = &a[k][j] * &f;
                a[i][j] -= &upd;
            }
            let upd = &b[k] * &f;
            b[i] -= &upd;
        }
    }
    let prec = b[0].prec();
    let mut x = vec![Real::zero(prec); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc -= &(&a[i][j] * &x[j]);
        }
        x[i] = &acc / &a[i][i];
    }
    Ok(x)
}

/// Newton-refine the chain parameters to near machine epsilon at the
/// working precision. Returns (parameters, final gradient max-norm).
fn refine_chain(
    table: &BilliardTable,
    obstacles: &[usize],
    seed: &[f64],
    cyclic: bool,
    pinned: Option<(&Real, &Real)>,
    prec: u32,
) -> Result<(Vec<Real>, Real)> {
    let p = obstacles.len();
    let mut t: Vec<Real> = seed.iter().map(|v| Real::from_f64(*v, prec)).collect();
    if let Some((a, b)) = pinned {
        t[0] = a.clone();
        t[p - 1] = b.clone();
    }
    let target_exp = RESIDUAL_MARGIN - prec as i64;
    let (lo, _hi) = if cyclic { (0, p) } else { (1, p - 1) };
    let mut residual = Real::zero(prec);
    let mut converged = false;
    for _ in 0..80 {
        let geo = chain_geometry(table, obstacles, &t);
        let (grad, hess) = length_gradient_hessian(&geo, cyclic, prec);
        residual = grad
            .iter()
            .fold(Real::zero(prec), |m, g| Real::max(&m, &g.abs()));
        if residual.is_zero() || residual.mag_exp() < target_exp {
            converged = true;
            break;
        }
        let step = solve_dense(hess, grad)?;
        for (k, ds) in step.iter().enumerate() {
            t[lo + k] -= ds;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "orbit Newton stalled at residual {:.3e}",
            residual.to_f64()
        )));
    }
    Ok((t, residual))
}

/// Reflection angles and flights along a solved chain.
fn chain_angles(
    table: &BilliardTable,
    obstacles: &[usize],
    t: &[Real],
    cyclic: bool,
) -> (Vec<Real>, Vec<Real>) {
    let p = obstacles.len();
    let n_edges = if cyclic { p } else { p - 1 };
    let mut phi = Vec::with_capacity(p);
    let mut flights = Vec::with_capacity(n_edges);
    for j in 0..n_edges {
        let a = table.obstacles[obstacles[j]].point(&t[j]);
        let b = table.obstacles[obstacles[(j + 1) % p]].point(&t[(j + 1) % p]);
        let e = (&b.0 - &a.0, &b.1 - &a.1);
        flights.push((&(&e.0 * &e.0) + &(&e.1 * &e.1)).sqrt());
    }
    for j in 0..p {
        // outgoing direction: towards the next collision (for the final
        // point of a pinned chain, reuse the incoming direction reflected)
        let dir = if cyclic || j < p - 1 {
            let a = table.obstacles[obstacles[j]].point(&t[j]);
            let b = table.obstacles[obstacles[(j + 1) % p]].point(&t[(j + 1) % p]);
            (&b.0 - &a.0, &b.1 - &a.1)
        } else {
            let a = table.obstacles[obstacles[j - 1]].point(&t[j - 1]);
            let b = table.obstacles[obstacles[j]].point(&t[j]);
            let (tx, ty) = table.obstacles[obstacles[j]].tangent(&t[j]);
            let n = (ty, -&tx);
            let v = (&b.0 - &a.0, &b.1 - &a.1);
            let vdotn = &(&v.0 * &n.0) + &(&v.1 * &n.1);
            let tw = vdotn.mul_pow2(1);
            (&v.0 - &(&tw * &n.0), &v.1 - &(&tw * &n.1))
        };
        let (tx, ty) = table.obstacles[obstacles[j]].tangent(&t[j]);
        let n = (ty, -&tx);
        let cross = &(&n.0 * &dir.1) - &(&n.1 * &dir.0);
        let dotv = &(&n.0 * &dir.0) + &(&n.1 * &dir.1);
        phi.push(Real::atan2(&cross, &dotv));
    }
    (phi, flights)
}

/// Monodromy of the cyclic chain by composing order-1 collision jets.
pub(crate) fn chain_monodromy(
    table: &BilliardTable,
    obstacles: &[usize],
    t: &[Real],
    phi: &[Real],
) -> Result<[[Real; 2]; 2]> {
    let prec = t[0].prec();
    let mut m = [
        [Real::one(prec), Real::zero(prec)],
        [Real::zero(prec), Real::one(prec)],
    ];
    for j in 0..t.len() {
        let x = TPoint {
            obstacle: obstacles[j],
            t: t[j].clone(),
            phi: phi[j].clone(),
        };
        let jet = step_jet_t(table, &x, 1)?;
        let expect = obstacles[(j + 1) % t.len()];
        if jet.to.obstacle != expect {
            return Err(Error::Internal(format!(
                "collision {j} lands on obstacle {} instead of {expect}",
                jet.to.obstacle
            )));
        }
        m = mat_mul(&jet.map.linear(), &m);
    }
    Ok(m)
}

/// Contracting eigenvalue of a unit-determinant 2×2 matrix (trace/det
/// quadratic formula; sign retained).
pub fn contracting_eigenvalue(m: &[[Real; 2]; 2]) -> Result<Real> {
    let tr = mat_trace(m);
    let two = Real::from_i64(2, tr.prec());
    if tr.abs() <= two {
        return Err(Error::Internal(format!(
            "non-hyperbolic monodromy, |trace| = {:.6}",
            tr.abs().to_f64()
        )));
    }
    // det = 1 is exact for collision-chain monodromies (the per-collision
    // cos-ratio determinants telescope around the cycle); the numerically
    // evaluated det would cancel to zero once the entries dwarf it
    let one = Real::one(tr.prec());
    let disc = (&(&tr * &tr) - &one.mul_pow2(2)).sqrt();
    // cancellation-free form: the small root is 1/(large root), i.e.
    // 2/(tr ± disc) with the same-signed root in the denominator —
    // direct subtraction tr ∓ disc loses all bits once |tr| ≫ 1
    let lam = if tr.is_positive() {
        (&(&tr + &disc).recip()).mul_pow2(1)
    } else {
        (&(&tr - &disc).recip()).mul_pow2(1)
    };
    Ok(lam)
}

pub fn find_periodic_orbit(
    table: &BilliardTable,
    word: &SymbolicWord,
    prec: u32,
) -> Result<PeriodicOrbit> {
    if !word.cyclic {
        return Err(Error::Validation("periodic orbits need a cyclic word".into()));
    }
    if word.len() < 2 {
        return Err(Error::Validation("periodic words have length ≥ 2".into()));
    }
    let obstacles = word_obstacles(table, word)?;
    let seed = seed_chain(table, &obstacles, true, None);
    let (t, residual) = refine_chain(table, &obstacles, &seed, true, None, prec)?;
    let (phi, flights) = chain_angles(table, &obstacles, &t, true);
    let guard = Real::from_f64(table.grazing_guard, 64);
    let limit = &Real::pi(prec).mul_pow2(-1) - &guard;
    for (j, ph) in phi.iter().enumerate() {
        if ph.abs() >= limit {
            return Err(Error::Grazing(format!(
                "collision {j} of word {word} is near grazing"
            )));
        }
    }
    let monodromy = chain_monodromy(table, &obstacles, &t, &phi)?;
    let lambda = contracting_eigenvalue(&monodromy)?;
    let p = word.len() as i64;
    let le = -&lambda.abs().ln().div_i64(p);
    let flow_period = flights
        .iter()
        .fold(Real::zero(prec), |acc, f| &acc + f);
    let s = t
        .iter()
        .zip(&obstacles)
        .map(|(tj, &oj)| table.obstacles[oj].arclength(tj))
        .collect();
    Ok(PeriodicOrbit {
        word: word.clone(),
        obstacles,
        t,
        s,
        phi,
        flights,
        monodromy,
        lambda,
        le,
        flow_period,
        grad_residual: residual,
    })
}

/// Flow Lyapunov exponent: log of the unstable Floquet multiplier per unit
/// flow time.
pub fn orbit_flow_exponent(orbit: &PeriodicOrbit) -> Real {
    let p = orbit.word.len() as i64;
    &orbit.le.mul_i64(p) / &orbit.flow_period
}

pub fn find_homoclinic_segment(
    table: &BilliardTable,
    w_o: &SymbolicWord,
    w_c: &SymbolicWord,
    depth: usize,
) -> Result<HomoclinicSegment> {
    if w_o.symbols == w_c.symbols {
        return Err(Error::Validation(
            "connector must differ from the reference block".into(),
        ));
    }
    let prec = {
        // inherit the precision the core orbit will use
        crate::real::DEFAULT_PREC
    };
    find_homoclinic_segment_prec(table, w_o, w_c, depth, prec)
}

pub fn find_homoclinic_segment_prec(
    table: &BilliardTable,
    w_o: &SymbolicWord,
    w_c: &SymbolicWord,
    depth: usize,
    prec: u32,
) -> Result<HomoclinicSegment> {
    if w_o.symbols == w_c.symbols {
        return Err(Error::Validation(
            "connector must differ from the reference block".into(),
        ));
    }
    if depth < 2 {
        return Err(Error::Validation("depth must be at least 2".into()));
    }
    let core = find_periodic_orbit(table, w_o, prec)?;
    // linear word w_O^m w_c w_O^m
    let mut symbols = Vec::new();
    for _ in 0..depth {
        symbols.extend_from_slice(&w_o.symbols);
    }
    symbols.extend_from_slice(&w_c.symbols);
    for _ in 0..depth {
        symbols.extend_from_slice(&w_o.symbols);
    }
    let word = SymbolicWord::linear(symbols);
    if !word.is_admissible(table.m()) {
        return Err(Error::Validation(format!(
            "segment word {word} is not admissible"
        )));
    }
    let obstacles = word_obstacles(table, &word)?;
    // pin both ends to the periodic orbit's collisions
    let t_first = core.t[0].clone();
    let t_last = core.t[w_o.len() - 1].clone();
    let seed = seed_chain(
        table,
        &obstacles,
        false,
        Some((t_first.to_f64(), t_last.to_f64())),
    );
    let (t, residual) = refine_chain(
        table,
        &obstacles,
        &seed,
        false,
        Some((&t_first, &t_last)),
        prec,
    )?;
    let (phi, _) = chain_angles(table, &obstacles, &t, false);
    let rho = w_o.len();
    let anchor1 = (depth - 1) * rho;
    let anchor2 = depth * rho + w_c.len();
    Ok(HomoclinicSegment {
        core,
        connector: w_c.clone(),
        depth,
        obstacles,
        t,
        phi,
        anchor1,
        anchor2,
        grad_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurveSpec, ObstacleCurve};

    const P: u32 = 256;

    fn circle(cx: f64, cy: f64, r: f64) -> ObstacleCurve {
        ObstacleCurve::new(
            CurveSpec::Circle {
                center: [cx, cy],
                radius: r,
            },
            P,
        )
        .unwrap()
    }

    fn three_circles(side: f64) -> BilliardTable {
        let h = side * 3f64.sqrt() / 2.0;
        BilliardTable::new(vec![
            circle(0.0, 0.0, 1.0),
            circle(side, 0.0, 1.0),
            circle(side / 2.0, h, 1.0),
        ])
        .unwrap()
    }

    fn w(s: &str) -> SymbolicWord {
        SymbolicWord::parse(s, true).unwrap()
    }

    use crate::jet2::mat_det;

    #[test]
    fn bouncing_orbit_closed_form() {
        let table = three_circles(6.0);
        let orb = find_periodic_orbit(&table, &w("12"), P).unwrap();
        // flow period 2(d − 2R) = 8
        let eight = Real::from_i64(8, P);
        let rel = (&(&orb.flow_period - &eight) / &eight).abs();
        assert!(rel.to_f64() < 1e-60, "period rel err {:.3e}", rel.to_f64());
        assert!(orb.grad_residual.to_f64() < 1e-40);
        // Jacobi-product oracle: per bounce [[1, τ],[0,1]]·[[1,0],[2K/cosφ,1]]
        // with τ = 4, K = 1, cos φ = 1 → per-period multiplier (5+2√6)²
        let sqrt6 = Real::from_i64(6, P).sqrt();
        let big = &Real::from_i64(5, P) + &sqrt6.mul_pow2(1);
        let mult = &big * &big;
        let lam_expect = mult.recip();
        let rel = (&(&orb.lambda - &lam_expect) / &lam_expect).abs();
        assert!(rel.to_f64() < 1e-25, "multiplier rel err {:.3e}", rel.to_f64());
        // LE per map step = log(5+2√6)
        let le_expect = big.ln();
        assert!((&orb.le - &le_expect).abs().to_f64() < 1e-25);
        // det(monodromy) = 1
        assert!((&mat_det(&orb.monodromy) - &Real::one(P)).abs().to_f64() < 1e-60);
    }

    #[test]
    fn inadmissible_and_short_words_rejected() {
        let table = three_circles(6.0);
        assert!(find_periodic_orbit(&table, &w("11"), P).is_err());
        assert!(find_periodic_orbit(&table, &SymbolicWord::parse("1", true).unwrap(), P).is_err());
    }

    #[test]
    fn rotation_and_reversal_invariance() {
        let table = three_circles(6.0);
        let a = find_periodic_orbit(&table, &w("1213"), P).unwrap();
        let b = find_periodic_orbit(&table, &w("1312"), P).unwrap();
        let c = find_periodic_orbit(&table, &w("3121"), P).unwrap();
        for other in [&b, &c] {
            assert!((&a.lambda - &other.lambda).abs().to_f64() < 1e-30);
            assert!((&a.flow_period - &other.flow_period).abs().to_f64() < 1e-30);
        }
    }

    #[test]
    fn doubled_word_same_flow_exponent() {
        let table = three_circles(6.0);
        let a = find_periodic_orbit(&table, &w("12"), P).unwrap();
        let b = find_periodic_orbit(&table, &w("1212"), P).unwrap();
        let ea = orbit_flow_exponent(&a);
        let eb = orbit_flow_exponent(&b);
        assert!((&ea - &eb).abs().to_f64() < 1e-30);
    }

    #[test]
    fn scaled_table_scales_flow_exponent() {
        let t1 = three_circles(6.0);
        let t2 = {
            let h = 12.0 * 3f64.sqrt() / 2.0;
            BilliardTable::new(vec![
                circle(0.0, 0.0, 2.0),
                circle(12.0, 0.0, 2.0),
                circle(6.0, h, 2.0),
            ])
            .unwrap()
        };
        let a = find_periodic_orbit(&t1, &w("1213"), P).unwrap();
        let b = find_periodic_orbit(&t2, &w("1213"), P).unwrap();
        assert!((&a.lambda - &b.lambda).abs().to_f64() < 1e-40);
        let ea = orbit_flow_exponent(&a);
        let eb = orbit_flow_exponent(&b).mul_i64(2);
        assert!((&ea - &eb).abs().to_f64() < 1e-40);
    }

    #[test]
    fn homoclinic_depth_consistency() {
        let table = three_circles(6.0);
        let wo = w("12");
        let wc = w("13");
        let h1 = find_homoclinic_segment_prec(&table, &wo, &wc, 10, P).unwrap();
        let h2 = find_homoclinic_segment_prec(&table, &wo, &wc, 13, P).unwrap();
        // anchors (matched by offset from the connector) should agree to
        // O(λ^{2m}) in the chain parameters; λ per block ≈ 0.0102
        let d_in = (&h1.t[h1.anchor1] - &h2.t[h2.anchor1]).abs();
        let d_out = (&h1.t[h1.anchor2] - &h2.t[h2.anchor2]).abs();
        assert!(d_in.to_f64() < 1e-30, "incoming anchor drift {:.3e}", d_in.to_f64());
        assert!(d_out.to_f64() < 1e-30, "outgoing anchor drift {:.3e}", d_out.to_f64());
        assert!(find_homoclinic_segment_prec(&table, &wo, &wo, 5, P).is_err());
    }
}
