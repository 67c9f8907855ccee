//! The billiard map on the collision space: stepping, derivatives, and
//! truncated Taylor jets of one collision step.
//!
//! A phase point is (obstacle, arclength s, reflection angle φ), with φ the
//! oriented angle from the outward normal to the outgoing velocity. Jets
//! are computed by implicit differentiation of the collision condition at
//! series level, never from hand-copied closed forms; the determinant
//! identity det D𝓕 = cos φ / cos φ' is a test, not an input.

use crate::error::{Error, Result};
use crate::geometry::BilliardTable;
use crate::jet2::{series_of_jet, Jet2, MapJet};
use crate::real::Real;
use crate::series::{taylor_atan, taylor_cos, taylor_sin};

#[derive(Clone, Debug)]
pub struct PhasePoint {
    pub obstacle: usize,
    pub s: Real,
    pub phi: Real,
}

impl PhasePoint {
    pub fn new(obstacle: usize, s: Real, phi: Real) -> Self {
        PhasePoint { obstacle, s, phi }
    }
}

/// One collision step with full jet data in displacement coordinates
/// (δs, δφ) at the source and target collisions.
#[derive(Clone, Debug)]
pub struct CollisionJet {
    pub map: MapJet,
    pub to: PhasePoint,
    /// Curve parameter of the target collision (internal coordinate).
    pub to_t: Real,
    pub flight: Real,
}

/// Internal state in curve-parameter coordinates.
#[derive(Clone, Debug)]
pub(crate) struct TPoint {
    pub obstacle: usize,
    pub t: Real,
    pub phi: Real,
}

pub(crate) fn t_of_phase(table: &BilliardTable, x: &PhasePoint) -> TPoint {
    TPoint {
        obstacle: x.obstacle,
        t: table.obstacles[x.obstacle].t_of_s(&x.s),
        phi: x.phi.clone(),
    }
}

pub(crate) fn phase_of_t(table: &BilliardTable, x: &TPoint) -> PhasePoint {
    PhasePoint {
        obstacle: x.obstacle,
        s: table.obstacles[x.obstacle].arclength(&x.t),
        phi: x.phi.clone(),
    }
}

/// Outgoing unit velocity at (obstacle i, parameter t, angle φ):
/// v = cos φ · n + sin φ · T with n the outward normal.
pub(crate) fn outgoing_velocity(
    table: &BilliardTable,
    i: usize,
    t: &Real,
    phi: &Real,
) -> ((Real, Real), (Real, Real), (Real, Real)) {
    let curve = &table.obstacles[i];
    let (tx, ty) = curve.tangent(t);
    let n = (ty.clone(), -&tx);
    let (sp, cp) = phi.sin_cos();
    let v = (
        &(&cp * &n.0) + &(&sp * &tx),
        &(&cp * &n.1) + &(&sp * &ty),
    );
    (v, n, (tx, ty))
}

/// Locate the next collision along the ray p + u·v: returns
/// (obstacle, parameter, flight). Brackets on the cached f64 scan, then
/// refines by Newton in extended precision.
pub(crate) fn next_collision(
    table: &BilliardTable,
    from: usize,
    p: &(Real, Real),
    v: &(Real, Real),
) -> Result<(usize, Real, Real)> {
    let prec = p.0.prec().max(v.0.prec());
    let pf = (p.0.to_f64(), p.1.to_f64());
    let vf = (v.0.to_f64(), v.1.to_f64());
    // f64 screening pass: bracket every forward, entry-side crossing and
    // keep only the candidates worth refining at extended precision
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    for j in 0..table.m() {
        if j == from {
            // strictly convex obstacle: an outgoing ray cannot return
            continue;
        }
        let scan = table.scan_samples(j);
        let n = scan.len();
        let g = |q: &(f64, f64, f64)| vf.0 * (q.2 - pf.1) - vf.1 * (q.1 - pf.0);
        for k in 0..n {
            let a = &scan[k];
            let b = &scan[(k + 1) % n];
            let ga = g(a);
            let gb = g(b);
            // a root seed: either the sample itself (exact zero, which
            // happens on symmetric orbits) or a sign change in (a, b)
            let seed = if ga == 0.0 {
                a.0
            } else if gb != 0.0 && ga.signum() != gb.signum() {
                // f64 bisection inside the bracket
                let curve = &table.obstacles[j];
                let mut lo = a.0;
                let mut hi = if k + 1 == n {
                    a.0 + 2.0 * std::f64::consts::PI / n as f64
                } else {
                    b.0
                };
                let mut glo = ga;
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    let (qx, qy) = curve.point_f64(mid);
                    let gm = vf.0 * (qy - pf.1) - vf.1 * (qx - pf.0);
                    if gm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if gm.signum() == glo.signum() {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            } else {
                continue;
            };
            // forward side only
            let dot = vf.0 * (a.1 - pf.0) + vf.1 * (a.2 - pf.1);
            if dot <= 0.0 {
                continue;
            }
            let curve = &table.obstacles[j];
            // entry side only (ray against the outward normal); keep
            // near-tangent seeds for the extended-precision decision
            let (tfx, tfy) = curve.tangent_f64(seed);
            let vdotn_f = vf.0 * tfy - vf.1 * tfx;
            if vdotn_f > 1e-9 {
                continue;
            }
            let (qx, qy) = curve.point_f64(seed);
            let flight_f = vf.0 * (qx - pf.0) + vf.1 * (qy - pf.1);
            if flight_f <= -1e-9 {
                continue;
            }
            candidates.push((j, seed, flight_f));
        }
    }
    // refine nearest-first; the first candidate that survives the
    // extended-precision checks is the collision
    candidates.sort_by(|a, b| a.2.total_cmp(&b.2));
    for (j, seed, _) in candidates {
        let curve = &table.obstacles[j];
        let mut t = Real::from_f64(seed, prec);
        for _ in 0..8 {
            let (xs, ys) = curve.pos_series(&t, 1);
            let gv = &(&v.0 * &(&ys.c[0] - &p.1)) - &(&v.1 * &(&xs.c[0] - &p.0));
            let gp = &(&v.0 * &ys.c[1]) - &(&v.1 * &xs.c[1]);
            if gp.is_zero() {
                break;
            }
            let step = &gv / &gp;
            t = &t - &step;
            if step.abs().mag_exp() < -(prec as i64) {
                break;
            }
        }
        let (ntx, nty) = curve.tangent(&t);
        let nrm = (nty, -&ntx);
        let (qx, qy) = curve.point(&t);
        let vdotn = &(&v.0 * &nrm.0) + &(&v.1 * &nrm.1);
        if !vdotn.is_negative() {
            continue;
        }
        let flight = &(&(&qx - &p.0) * &v.0) + &(&(&qy - &p.1) * &v.1);
        if !flight.is_positive() {
            continue;
        }
        return Ok((j, t, flight));
    }
    Err(Error::Escape(format!(
        "ray from obstacle {from} with direction ({:.6}, {:.6}) hits nothing",
        vf.0, vf.1
    )))
}

pub(crate) fn step_t(table: &BilliardTable, x: &TPoint) -> Result<(TPoint, Real)> {
    let curve = &table.obstacles[x.obstacle];
    let p = curve.point(&x.t);
    let (v, _, _) = outgoing_velocity(table, x.obstacle, &x.t, &x.phi);
    let (j, t1, flight) = next_collision(table, x.obstacle, &p, &v)?;
    let target = &table.obstacles[j];
    let (tx, ty) = target.tangent(&t1);
    let n1 = (ty.clone(), -&tx);
    // reflect: v_r = v − 2 (v·n) n
    let vdotn = &(&v.0 * &n1.0) + &(&v.1 * &n1.1);
    let two_vdotn = vdotn.mul_pow2(1);
    let vr = (&v.0 - &(&two_vdotn * &n1.0), &v.1 - &(&two_vdotn * &n1.1));
    let cross = &(&n1.0 * &vr.1) - &(&n1.1 * &vr.0);
    let dot = &(&n1.0 * &vr.0) + &(&n1.1 * &vr.1);
    let phi1 = Real::atan2(&cross, &dot);
    let guard = Real::from_f64(table.grazing_guard, 64);
    let limit = &Real::pi(phi1.prec()).mul_pow2(-1) - &guard;
    if phi1.abs() >= limit {
        return Err(Error::Grazing(format!(
            "|φ'| = {:.6} beyond the grazing guard",
            phi1.abs().to_f64()
        )));
    }
    Ok((
        TPoint {
            obstacle: j,
            t: t1,
            phi: phi1,
        },
        flight,
    ))
}

pub fn billiard_step(table: &BilliardTable, x: &PhasePoint) -> Result<(PhasePoint, Real)> {
    let (y, flight) = step_t(table, &t_of_phase(table, x))?;
    Ok((phase_of_t(table, &y), flight))
}

/// Jet of one collision step in (δs, δφ) displacement coordinates, by
/// order-by-order solution of the implicit collision condition.
pub(crate) fn step_jet_t(table: &BilliardTable, x: &TPoint, order: usize) -> Result<CollisionJet> {
    let prec = x.t.prec().max(x.phi.prec());
    let curve = &table.obstacles[x.obstacle];
    let k = order;

    // position as a function of δs: compose the δt-series with δt(δs)
    let (xs_t, ys_t) = curve.pos_series(&x.t, k + 1);
    let sigma = curve.arclength_series(&x.t, k + 1);
    let dt_ds = sigma.inverse();
    let xs = xs_t.compose(&dt_ds);
    let ys = ys_t.compose(&dt_ds);
    // unit tangent in δs (unit speed after reparametrization)
    let txs = xs.derivative();
    let tys = ys.derivative();

    let u = Jet2::var(0, prec, k);
    let w2 = Jet2::var(1, prec, k);
    let px = series_of_jet(&xs.truncate(k), &u);
    let py = series_of_jet(&ys.truncate(k), &u);
    let tx = series_of_jet(&txs, &u);
    let ty = series_of_jet(&tys, &u);
    let nx = ty.clone();
    let ny = tx.neg();

    // velocity jet: cos(φ0+δφ) n + sin(φ0+δφ) T
    let cphi = series_of_jet(&taylor_cos(&x.phi, k), &w2);
    let sphi = series_of_jet(&taylor_sin(&x.phi, k), &w2);
    let vx = cphi.mul(&nx).add(&sphi.mul(&tx));
    let vy = cphi.mul(&ny).add(&sphi.mul(&ty));

    // refine the target collision at the base point
    let (y0, flight0) = step_t(table, x)?;
    let target = &table.obstacles[y0.obstacle];

    // implicit solve: cross(v, Q(δt') − P) = 0 for δt' as a jet
    let (qx_full, qy_full) = target.pos_series(&y0.t, k + 1);
    let qxp = qx_full.derivative();
    let qyp = qy_full.derivative();
    let qx_t = qx_full.truncate(k);
    let qy_t = qy_full.truncate(k);
    let mut w = Jet2::zero(prec, k);
    for _ in 0..=k {
        let qx = series_of_jet(&qx_t, &w);
        let qy = series_of_jet(&qy_t, &w);
        let g = vx.mul(&qy.sub(&py)).sub(&vy.mul(&qx.sub(&px)));
        let gp = vx
            .mul(&series_of_jet(&qyp, &w))
            .sub(&vy.mul(&series_of_jet(&qxp, &w)));
        w = w.sub(&g.div(&gp));
        // the base collision is already refined; keep the germ centered
        w.c[0] = Real::zero(prec);
    }

    // reflected direction and outgoing angle at the target
    let sigma1 = target.arclength_series(&y0.t, k + 1);
    // δs' = σ(δt'); tangent via the arclength series of the target
    let ds1 = series_of_jet(&sigma1.truncate(k), &w);
    // target unit tangent as a function of δt': (dx/dt / |γ'|)
    let speed1 = target.speed_series(&y0.t, k);
    let t1x_t = qxp.div(&speed1);
    let t1y_t = qyp.div(&speed1);
    let t1x = series_of_jet(&t1x_t, &w);
    let t1y = series_of_jet(&t1y_t, &w);
    let n1x = t1y.clone();
    let n1y = t1x.neg();
    let vdotn = vx.mul(&n1x).add(&vy.mul(&n1y));
    let two = Real::from_i64(2, prec);
    let vrx = vx.sub(&vdotn.scale(&two).mul(&n1x));
    let vry = vy.sub(&vdotn.scale(&two).mul(&n1y));
    let cross = n1x.mul(&vry).sub(&n1y.mul(&vrx));
    let dot = n1x.mul(&vrx).add(&n1y.mul(&vry));
    // φ' = atan(cross/dot); dot = cos φ' > 0 away from grazing, so no
    // branch correction is needed
    let mut dphi1 = atan_jet(&cross.div(&dot));
    let phi1 = dphi1.constant_term().clone();
    dphi1.c[0] = Real::zero(prec);

    let map = MapJet { x: ds1, y: dphi1 };
    Ok(CollisionJet {
        map,
        to: phase_of_t(
            table,
            &TPoint {
                obstacle: y0.obstacle,
                t: y0.t.clone(),
                phi: phi1,
            },
        ),
        to_t: y0.t,
        flight: flight0,
    })
}

pub fn jet_collision_step(
    table: &BilliardTable,
    x: &PhasePoint,
    order: usize,
) -> Result<CollisionJet> {
    step_jet_t(table, &t_of_phase(table, x), order)
}

/// Derivative D𝓕 as a 2×2 matrix, from the order-1 jet.
pub fn billiard_derivative(table: &BilliardTable, x: &PhasePoint) -> Result<[[Real; 2]; 2]> {
    let j = jet_collision_step(table, x, 1)?;
    Ok(j.map.linear())
}

/// Time reversal on the collision space: (s, φ) ↦ (s, −φ).
pub fn reverse(x: &PhasePoint) -> PhasePoint {
    PhasePoint {
        obstacle: x.obstacle,
        s: x.s.clone(),
        phi: -&x.phi,
    }
}

/// atan applied at jet level: expand around the ratio's constant term.
pub(crate) fn atan_jet(ratio: &Jet2) -> Jet2 {
    let prec = ratio.prec();
    let r0 = ratio.constant_term().clone();
    let mut d = ratio.clone();
    d.c[0] = Real::zero(prec);
    series_of_jet(&taylor_atan(&r0, ratio.order), &d)
}
