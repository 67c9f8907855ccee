//! Birkhoff normal forms at hyperbolic periodic orbits, and the
//! mirror-normalized homoclinic frame.
//!
//! The return map of a periodic orbit is conjugated, degree by degree, to
//! the area-preserving model N_Δ: (ξ,η) ↦ (Δ(ξη)ξ, Δ(ξη)⁻¹η) with
//! Δ(z) = λ + a₁z + a₂z² + …; the aₖ are the Birkhoff invariants. On top
//! of that, a homoclinic excursion determines two arcs in normal-form
//! coordinates; a diagonal correction N_D makes them mirror images of each
//! other through {ξ = η}, which pins the frame quantities ξ_∞, γₖ, gₖ, w₁
//! entering the Lyapunov-exponent asymptotics.

use crate::billiard::{step_jet_t, TPoint};
use crate::error::{Error, Result};
use crate::geometry::BilliardTable;
use crate::jet2::{mat_det, mat_mul, series_of_jet, Jet2, MapJet};
use crate::orbits::{
    contracting_eigenvalue, find_periodic_orbit, solve_dense, HomoclinicSegment, PeriodicOrbit,
};
use crate::real::Real;
use crate::series::{taylor_sin, Series};
use crate::symbolic::horseshoe_word;

/// Birkhoff data at a hyperbolic fixed point of a planar map germ.
#[derive(Clone, Debug)]
pub struct NormalForm {
    /// Contracting multiplier λ ∈ (0,1).
    pub lambda: Real,
    /// Invariants a₁..a_K (a₀ = λ).
    pub a: Vec<Real>,
    /// Conjugacy R with R∘G∘R⁻¹ = N_Δ (truncated).
    pub conjugacy: MapJet,
    pub conjugacy_inv: MapJet,
    /// The conjugated jet itself (resonant monomials only, up to residual).
    pub normalized: MapJet,
    /// Max coefficient deviation of the conjugated jet from N_Δ.
    pub residual: Real,
    pub order: usize,
}

/// Frame data of a mirror-normalized homoclinic excursion.
#[derive(Clone, Debug)]
pub struct HomoclinicFrame {
    /// ξ_∞ = γ₀ ≠ 0, the homoclinic point (0, ξ_∞) on the unstable axis.
    pub xi_inf: Real,
    /// Taylor coefficients γ₀..γ_J of the incoming arc graph ξ = γ(η).
    pub gamma: Vec<Real>,
    /// Coefficients g₀..g_J of the gluing function (lower-right entry of
    /// the gluing differential along the arc).
    pub g: Vec<Real>,
    /// Slope of the stable arc through (0, ξ_∞).
    pub w1: Real,
    /// Angle between the stable arc and the local unstable axis there.
    pub transversality_angle: Real,
    /// Scaled invariants ā₀..ā_K, āₖ = λ⁻¹ aₖ ξ_∞^{2k} (ā₀ = 1).
    pub a_bar: Vec<Real>,
    /// γ̄ₖ = γₖ ξ_∞^{k-1} (γ̄₀ = 1).
    pub gamma_bar: Vec<Real>,
    /// ḡₖ = gₖ ξ_∞^k.
    pub g_bar: Vec<Real>,
    /// Max pointwise deviation of the two arcs from exact mirror symmetry.
    pub mirror_residual: Real,
    /// Max residual of the polynomial arc fits.
    pub fit_residual: Real,
    /// |g₀(γ₁ − w₁) − 1|.
    pub identity_residual: Real,
    /// Mirror-normalized sample points on the two arcs.
    pub samples_arc1: Vec<(Real, Real)>,
    pub samples_arc2: Vec<(Real, Real)>,
}

/// Jet of the return map 𝓕^p of a periodic orbit at the collision with
/// index `base`, in (δs, δφ) displacement coordinates.
pub fn return_map_jet(
    table: &BilliardTable,
    orbit: &PeriodicOrbit,
    base: usize,
    order: usize,
) -> Result<MapJet> {
    let p = orbit.t.len();
    if base >= p {
        return Err(Error::Validation(format!(
            "base index {base} out of range for a period-{p} orbit"
        )));
    }
    let prec = orbit.t[0].prec();
    let mut m = MapJet::identity(prec, order);
    for j in 0..p {
        let i = (base + j) % p;
        let x = TPoint {
            obstacle: orbit.obstacles[i],
            t: orbit.t[i].clone(),
            phi: orbit.phi[i].clone(),
        };
        let jet = step_jet_t(table, &x, order)?;
        let expect = orbit.obstacles[(i + 1) % p];
        if jet.to.obstacle != expect {
            return Err(Error::Internal(format!(
                "collision {i} lands on obstacle {} instead of {expect}",
                jet.to.obstacle
            )));
        }
        m = jet.map.compose(&m);
    }
    Ok(m)
}

/// Displacement substitution (δs, δφ) ↦ (δs, sin(φ₀+δφ) − sin φ₀). In the
/// (arclength, sin-of-reflection-angle) chart the billiard map is exactly
/// area-preserving, which normal-form extraction relies on.
fn momentum_chart(phi0: &Real, prec: u32, order: usize) -> MapJet {
    let s = taylor_sin(phi0, order);
    let mut y = series_of_jet(&s, &Jet2::var(1, prec, order));
    y.c[0] = Real::zero(prec);
    MapJet {
        x: Jet2::var(0, prec, order),
        y,
    }
}

/// Return-map jet of `return_map_jet` pushed to the area-preserving
/// (δs, δ sin φ) chart at the base collision.
pub fn return_map_jet_symplectic(
    table: &BilliardTable,
    orbit: &PeriodicOrbit,
    base: usize,
    order: usize,
) -> Result<MapJet> {
    let jet = return_map_jet(table, orbit, base, order)?;
    let u = momentum_chart(&orbit.phi[base], orbit.phi[base].prec(), order);
    Ok(u.compose(&jet.compose(&u.inverse())))
}

/// The model jet N_Δ with Δ(z) = λ + a₁z + … (a beyond the order ignored).
pub fn normal_form_jet(lambda: &Real, a: &[Real], order: usize) -> MapJet {
    let prec = lambda.prec();
    let kmax = order.saturating_sub(1) / 2;
    let mut dc = vec![Real::zero(prec); kmax + 1];
    dc[0] = lambda.clone();
    for k in 1..=kmax {
        if k <= a.len() {
            dc[k] = a[k - 1].clone();
        }
    }
    let delta = Series::new(dc);
    let dinv = Series::constant(Real::one(prec), kmax).div(&delta);
    let mut x = Jet2::zero(prec, order);
    let mut y = Jet2::zero(prec, order);
    for k in 0..=kmax {
        x.set_coeff(k + 1, k, delta.c[k].clone());
        y.set_coeff(k, k + 1, dinv.c[k].clone());
    }
    MapJet { x, y }
}

/// Extract the Birkhoff normal form of a planar area-preserving germ with
/// a real hyperbolic fixed point at the origin. Reports a₁..a_k; the jet
/// order must be at least 2k+1.
pub fn extract_birkhoff(g: &MapJet, k: usize) -> Result<NormalForm> {
    let order = g.order();
    if order < 2 * k + 1 {
        return Err(Error::Validation(format!(
            "jet order {order} too low for {k} invariants (need {})",
            2 * k + 1
        )));
    }
    if !g.x.constant_term().is_zero() || !g.y.constant_term().is_zero() {
        return Err(Error::Validation(
            "normal-form extraction needs a germ fixing the origin".into(),
        ));
    }
    let prec = g.prec();
    let m = g.linear();
    let lam = contracting_eigenvalue(&m)?;
    if !lam.is_positive() {
        return Err(Error::Degenerate(format!(
            "orientation-reversing multiplier {:.6e}; only λ ∈ (0,1) is supported",
            lam.to_f64()
        )));
    }
    let mu = &mat_det(&m) / &lam; // expanding eigenvalue

    // eigenvectors from the better-conditioned row of M − eI
    let eigvec = |e: &Real| -> (Real, Real) {
        let c1 = (m[0][1].clone(), e - &m[0][0]);
        let c2 = (e - &m[1][1], m[1][0].clone());
        let n1 = Real::max(&c1.0.abs(), &c1.1.abs());
        let n2 = Real::max(&c2.0.abs(), &c2.1.abs());
        if n1 >= n2 {
            c1
        } else {
            c2
        }
    };
    let mut vs = eigvec(&lam);
    let mut vu = eigvec(&mu);
    let cross = &(&vs.0 * &vu.1) - &(&vs.1 * &vu.0);
    if cross.is_zero() {
        return Err(Error::Degenerate("parallel eigenvectors".into()));
    }
    let s = cross.abs().sqrt().recip();
    vs = (&vs.0 * &s, &vs.1 * &s);
    vu = (&vu.0 * &s, &vu.1 * &s);
    if cross.is_negative() {
        vu = (-&vu.0, -&vu.1);
    }
    // deterministic overall sign (the (ξ,η) ↦ (−ξ,−η) gauge)
    if vs.0.is_negative() || (vs.0.is_zero() && vs.1.is_negative()) {
        vs = (-&vs.0, -&vs.1);
        vu = (-&vu.0, -&vu.1);
    }
    let cmat = [[vs.0.clone(), vu.0.clone()], [vs.1.clone(), vu.1.clone()]];
    let cinv = [
        [vu.1.clone(), -&vu.0],
        [-&vs.1, vs.0.clone()],
    ];
    let cmap = MapJet::from_linear(&cmat, order);
    let cinv_map = MapJet::from_linear(&cinv, order);

    let mut f = cinv_map.compose(&g.compose(&cmap));
    let mut r_acc = cinv_map;

    for d in 2..=order {
        let mut r = MapJet {
            x: Jet2::zero(prec, order),
            y: Jet2::zero(prec, order),
        };
        let mut any = false;
        // Each correction is the divergence-free field of a stream
        // monomial s·ξ^p η^q, i.e. (qs ξ^p η^{q−1}, −ps ξ^{p−1} η^q).
        // Keeping the corrections volume-preserving is what makes the
        // higher invariants canonical: a generic correction reparametrizes
        // ξη. For an area-preserving jet one parameter kills the x term
        // at (p, q−1) and the paired y term at (p−1, q) simultaneously.
        for q in 0..=(d + 1) {
            let p = d + 1 - q;
            if p == q {
                continue; // resonant: untouched, carries the invariant
            }
            let e = p as i64 - q as i64;
            let denom = &lam.powi(e) - &Real::one(prec); // λ^{p−q} − 1
            let s = if q >= 1 && !f.x.coeff(p, q - 1).is_zero() {
                -&(f.x.coeff(p, q - 1) / &(&lam * &denom).mul_i64(q as i64))
            } else if p >= 1 && !f.y.coeff(p - 1, q).is_zero() {
                &(f.y.coeff(p - 1, q) * &lam) / &denom.mul_i64(p as i64)
            } else {
                continue;
            };
            if q >= 1 {
                r.x.set_coeff(p, q - 1, s.mul_i64(q as i64));
            }
            if p >= 1 {
                r.y.set_coeff(p - 1, q, -&s.mul_i64(p as i64));
            }
            any = true;
        }
        if !any {
            continue;
        }
        // Conjugate by the exact time-1 flow of r, not by Id + r: the
        // latter is area-preserving only to first order and its quadratic
        // volume defect would leak into the higher invariants.
        let flow = hamiltonian_flow(&r, prec, order);
        let flow_inv = hamiltonian_flow(
            &MapJet {
                x: r.x.neg(),
                y: r.y.neg(),
            },
            prec,
            order,
        );
        f = flow.compose(&f.compose(&flow_inv));
        r_acc = flow.compose(&r_acc);
    }

    let kmax = (order - 1) / 2;
    let a_all: Vec<Real> = (1..=kmax).map(|j| f.x.coeff(j + 1, j).clone()).collect();
    let model = normal_form_jet(&lam, &a_all, order);
    let residual = Real::max(
        &f.x.sub(&model.x).max_coeff_mag(0, order),
        &f.y.sub(&model.y).max_coeff_mag(0, order),
    );
    let conjugacy_inv = r_acc.inverse();
    Ok(NormalForm {
        lambda: lam,
        a: a_all[..k].to_vec(),
        conjugacy: r_acc,
        conjugacy_inv,
        normalized: f,
        residual,
        order,
    })
}

/// Time-1 flow of the polynomial vector field `v` (lowest degree ≥ 2) as
/// a terminating Lie series on jets. For a divergence-free `v` the flow
/// is exactly area-preserving through the truncation order.
fn hamiltonian_flow(v: &MapJet, prec: u32, order: usize) -> MapJet {
    let mut acc = MapJet::identity(prec, order);
    let mut term = MapJet::identity(prec, order);
    for m in 1..=order {
        let inv_m = Real::from_i64(m as i64, prec).recip();
        let tx = term
            .x
            .partial(0)
            .mul(&v.x)
            .add(&term.x.partial(1).mul(&v.y))
            .scale(&inv_m);
        let ty = term
            .y
            .partial(0)
            .mul(&v.x)
            .add(&term.y.partial(1).mul(&v.y))
            .scale(&inv_m);
        term = MapJet { x: tx, y: ty };
        if term.x.max_coeff_mag(0, order).is_zero() && term.y.max_coeff_mag(0, order).is_zero() {
            break;
        }
        acc = MapJet {
            x: acc.x.add(&term.x),
            y: acc.y.add(&term.y),
        };
    }
    acc
}

/// Value of the cohomological obstruction at the orbit: −a₁/λ.
pub fn anosov_cocycle_value(nf: &NormalForm) -> Real {
    -&(&nf.a[0] / &nf.lambda)
}

/// Parameters of the mirror normalization: which horseshoe orbits sample
/// the arcs, how many blocks the evaluation points are pulled toward the
/// fixed point, and the arc-fit degree.
#[derive(Clone, Debug)]
pub struct MirrorOptions {
    pub n_lo: usize,
    pub n_hi: usize,
    pub pullback: usize,
    pub fit_degree: usize,
}

impl Default for MirrorOptions {
    fn default() -> Self {
        MirrorOptions {
            n_lo: 4,
            n_hi: 9,
            pullback: 3,
            fit_degree: 3,
        }
    }
}

fn poly_eval(c: &[Real], x: &Real) -> Real {
    let prec = x.prec();
    let mut acc = Real::zero(prec);
    for ci in c.iter().rev() {
        acc = &(&acc * x) + ci;
    }
    acc
}

fn poly_deriv(c: &[Real]) -> Vec<Real> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, ci)| ci.mul_i64(i as i64))
        .collect()
}

/// Least-squares polynomial fit by normal equations in extended precision.
/// Returns (coefficients, max pointwise residual).
fn polyfit(xs: &[Real], ys: &[Real], deg: usize) -> Result<(Vec<Real>, Real)> {
    if xs.len() < deg + 1 {
        return Err(Error::Validation(format!(
            "{} points cannot determine a degree-{deg} fit",
            xs.len()
        )));
    }
    let prec = xs[0].prec();
    let n = deg + 1;
    let mut ata = vec![vec![Real::zero(prec); n]; n];
    let mut atb = vec![Real::zero(prec); n];
    for (x, y) in xs.iter().zip(ys) {
        let mut pows = vec![Real::one(prec)];
        for i in 1..=2 * deg {
            pows.push(&pows[i - 1] * x);
        }
        for i in 0..n {
            for j in 0..n {
                ata[i][j] += &pows[i + j];
            }
            atb[i] += &(&pows[i] * y);
        }
    }
    let c = solve_dense(ata, atb)?;
    let mut res = Real::zero(prec);
    for (x, y) in xs.iter().zip(ys) {
        res = Real::max(&res, &(&poly_eval(&c, x) - y).abs());
    }
    Ok((c, res))
}

/// Jacobian of the diagonal model N_Δ^n at (ξ, η), given Δ = d and
/// Δ' = dp evaluated at z = ξη.
fn dn_jacobian(d: &Real, dp: &Real, xi: &Real, eta: &Real, n: i64) -> [[Real; 2]; 2] {
    let prec = d.prec();
    let z = xi * eta;
    let dn = d.powi(n);
    let dmn = d.powi(-n);
    let nn = Real::from_i64(n, prec);
    let f = &(&nn * dp) * &d.powi(n - 1);
    let fm = &(&nn * dp) * &d.powi(-n - 1);
    [
        [&dn + &(&f * &z), &f * &(xi * xi)],
        [-&(&fm * &(eta * eta)), &dmn - &(&fm * &z)],
    ]
}

fn mat_inv(m: &[[Real; 2]; 2]) -> Result<[[Real; 2]; 2]> {
    let det = mat_det(m);
    if det.is_zero() {
        return Err(Error::Degenerate("singular 2×2 matrix".into()));
    }
    let inv = det.recip();
    Ok([
        [&m[1][1] * &inv, -&(&m[0][1] * &inv)],
        [-&(&m[1][0] * &inv), &m[0][0] * &inv],
    ])
}

fn mat_apply(m: &[[Real; 2]; 2], v: &(Real, Real)) -> (Real, Real) {
    (
        &(&m[0][0] * &v.0) + &(&m[0][1] * &v.1),
        &(&m[1][0] * &v.0) + &(&m[1][1] * &v.1),
    )
}

/// Product of one-collision derivative matrices along a chain, starting at
/// `from` and taking `count` steps, expressed in the area-preserving
/// (δs, δ sin φ) chart at both endpoints.
fn linear_chain(
    table: &BilliardTable,
    obstacles: &[usize],
    t: &[Real],
    phi: &[Real],
    cyclic: bool,
    from: usize,
    count: usize,
) -> Result<[[Real; 2]; 2]> {
    let len = t.len();
    let prec = t[0].prec();
    let mut m = [
        [Real::one(prec), Real::zero(prec)],
        [Real::zero(prec), Real::one(prec)],
    ];
    for j in 0..count {
        let i = if cyclic { (from + j) % len } else { from + j };
        let x = TPoint {
            obstacle: obstacles[i],
            t: t[i].clone(),
            phi: phi[i].clone(),
        };
        let jet = step_jet_t(table, &x, 1)?;
        m = mat_mul(&jet.map.linear(), &m);
    }
    let end = if cyclic { (from + count) % len } else { from + count };
    let c0 = phi[from].cos();
    let c1 = phi[end].cos();
    m[1][0] = &m[1][0] * &c1;
    m[1][1] = &(&m[1][1] * &c1) / &c0;
    m[0][1] = &m[0][1] / &c0;
    Ok(m)
}

/// Fitted graphs of the two pre-correction arcs: ξ ↦ γ̂₁(ξ) near ξ = 0,
/// and ξ ↦ γ̂₂(ξ) near ξ = center2 (stored in the centered variable).
pub(crate) struct ArcFit {
    pub c1: Vec<Real>,
    pub c2: Vec<Real>,
    pub center2: Real,
}

/// Solve (offset + w)·p(w) = z for w by Newton iteration.
fn solve_hyperbola(coeffs: &[Real], offset: &Real, z: &Real, seed: &Real) -> Result<Real> {
    let prec = z.prec();
    let dp = poly_deriv(coeffs);
    let mut w = seed.clone();
    for _ in 0..80 {
        let pv = poly_eval(coeffs, &w);
        let dv = poly_eval(&dp, &w);
        let xw = offset + &w;
        let h = &(&xw * &pv) - z;
        let hp = &pv + &(&xw * &dv);
        if hp.is_zero() {
            return Err(Error::NonConvergence(
                "degenerate arc while inverting ξγ(ξ)".into(),
            ));
        }
        let step = &h / &hp;
        w = &w - &step;
        if step.is_zero() {
            break;
        }
        let scale = Real::max(&Real::one(prec), &xw.abs());
        if step.mag_exp() < scale.mag_exp() + 48 - prec as i64 {
            break;
        }
    }
    Ok(w)
}

/// The mirror correction function: D(z) and D'(z) with
/// D(ξγ̂₁(ξ)) = √(γ̂₁(ξ)/ξ̂(ξ)) where ξ̂γ̂₂(ξ̂) = ξγ̂₁(ξ) = z.
pub(crate) fn mirror_correction(fit: &ArcFit, z: &Real) -> Result<(Real, Real)> {
    let prec = z.prec();
    let zero = Real::zero(prec);
    let seed1 = z / &fit.c1[0];
    let xi = solve_hyperbola(&fit.c1, &zero, z, &seed1)?;
    let w = solve_hyperbola(&fit.c2, &fit.center2, z, &zero)?;
    let xihat = &fit.center2 + &w;
    let g1v = poly_eval(&fit.c1, &xi);
    let ratio = &g1v / &xihat;
    if !ratio.is_positive() {
        return Err(Error::Degenerate(
            "homoclinic arcs have incompatible orientations; mirror correction undefined".into(),
        ));
    }
    let dval = ratio.sqrt();
    let g1p = poly_eval(&poly_deriv(&fit.c1), &xi);
    let g2v = poly_eval(&fit.c2, &w);
    let g2p = poly_eval(&poly_deriv(&fit.c2), &w);
    let xi_p = (&g1v + &(&xi * &g1p)).recip();
    let xihat_p = (&g2v + &(&xihat * &g2p)).recip();
    let dprime = &dval.mul_pow2(-1) * &(&(&(&g1p * &xi_p) / &g1v) - &(&xihat_p / &xihat));
    Ok((dval, dprime))
}

struct ArcSample {
    /// Pre-correction point on the incoming arc and its frame Jacobian.
    p1: (Real, Real),
    j1: [[Real; 2]; 2],
    /// Pre-correction point on the outgoing arc and its frame Jacobian.
    p2: (Real, Real),
    j2: [[Real; 2]; 2],
    /// Derivative of the excursion 𝓕^{ρ+c} from the first point to the
    /// second, in phase coordinates.
    dconn: [[Real; 2]; 2],
}

/// Chart of phase displacements at a reference collision: (δs, δφ) from
/// the curve-parameter difference, wrapped to the short way around.
struct Chart {
    t0: Real,
    sin_phi0: Real,
    sigma: Series,
    pi: Real,
    two_pi: Real,
}

impl Chart {
    fn new(table: &BilliardTable, obstacle: usize, t0: &Real, phi0: &Real, prec: u32) -> Chart {
        Chart {
            t0: t0.clone(),
            sin_phi0: phi0.sin(),
            sigma: table.obstacles[obstacle].arclength_series(t0, 16),
            pi: Real::pi(prec),
            two_pi: Real::pi(prec).mul_pow2(1),
        }
    }

    /// (δs, δ sin φ) displacement; δs goes the short way around the curve.
    fn displacement(&self, t: &Real, phi: &Real) -> (Real, Real) {
        let mut dt = t - &self.t0;
        if dt > self.pi {
            dt -= &self.two_pi;
        } else if dt < -&self.pi {
            dt += &self.two_pi;
        }
        (self.sigma.eval(&dt), &phi.sin() - &self.sin_phi0)
    }
}

fn map_jacobian_at(px: &[Jet2; 2], py: &[Jet2; 2], u: &Real, v: &Real) -> [[Real; 2]; 2] {
    [
        [px[0].eval(u, v), px[1].eval(u, v)],
        [py[0].eval(u, v), py[1].eval(u, v)],
    ]
}

/// Mirror-normalize the homoclinic frame of a reference orbit. The normal
/// form must have been extracted from `return_map_jet_symplectic` at
/// collision 0 of `hs.core` (the chart the segment anchors live in).
pub fn mirror_normalize(
    table: &BilliardTable,
    nf: &NormalForm,
    hs: &HomoclinicSegment,
    opts: &MirrorOptions,
) -> Result<HomoclinicFrame> {
    let prec = hs.t[0].prec();
    let core = &hs.core;
    let rho = core.word.len();
    let conn = hs.connector.len();
    if opts.n_lo < 3 || opts.n_hi < opts.n_lo + opts.fit_degree {
        return Err(Error::Validation(
            "horseshoe sampling range too small for the requested fit degree".into(),
        ));
    }

    let chart = Chart::new(table, core.obstacles[0], &core.t[0], &core.phi[0], prec);
    let rx = [nf.conjugacy.x.partial(0), nf.conjugacy.x.partial(1)];
    let ry = [nf.conjugacy.y.partial(0), nf.conjugacy.y.partial(1)];

    // Δ and Δ' as polynomials in z = ξη
    let mut delta = vec![nf.lambda.clone()];
    delta.extend(nf.a.iter().cloned());
    let delta_p = poly_deriv(&delta);

    // normal-form coordinates and frame Jacobian of a collision that sits
    // `shift` blocks away from the point of interest (negative shift: the
    // evaluation point is pulled backward along the orbit; the model map
    // is applied `|shift|` times to come back)
    let eval_frame = |t: &[Real],
                      phi: &[Real],
                      obstacles: &[usize],
                      cyclic: bool,
                      idx: usize,
                      k: i64|
     -> Result<((Real, Real), [[Real; 2]; 2])> {
        // idx is the evaluation collision; the point of interest is at
        // idx + k·ρ (k may be negative)
        let (ds, dphi) = chart.displacement(&t[idx], &phi[idx]);
        let xi = nf.conjugacy.x.eval(&ds, &dphi);
        let eta = nf.conjugacy.y.eval(&ds, &dphi);
        let z = &xi * &eta;
        let d = poly_eval(&delta, &z);
        let dp = poly_eval(&delta_p, &z);
        let dk = d.powi(k);
        let point = (&xi * &dk, &eta / &dk);
        let dn = dn_jacobian(&d, &dp, &xi, &eta, k);
        let jr = map_jacobian_at(&rx, &ry, &ds, &dphi);
        let steps = (k.unsigned_abs() as usize) * rho;
        let jac = if k >= 0 {
            // point of interest is k·ρ steps ahead of idx
            let chain = linear_chain(table, obstacles, t, phi, cyclic, idx, steps)?;
            mat_mul(&dn, &mat_mul(&jr, &mat_inv(&chain)?))
        } else {
            // point of interest is |k|·ρ steps behind idx
            let len = t.len();
            let from = if cyclic {
                (idx + len - steps % len) % len
            } else {
                idx - steps
            };
            let chain = linear_chain(table, obstacles, t, phi, cyclic, from, steps)?;
            mat_mul(&dn, &mat_mul(&jr, &chain))
        };
        Ok((point, jac))
    };

    let mut samples = Vec::new();
    for n in opts.n_lo..=opts.n_hi {
        let word = horseshoe_word(&core.word, &hs.connector, n)?;
        let orb = find_periodic_orbit(table, &word, prec)?;
        let k = opts.pullback.min(n - 2).max(1);
        // incoming point x¹ at collision n·ρ, evaluated k blocks earlier
        let (p1, j1) = eval_frame(
            &orb.t,
            &orb.phi,
            &orb.obstacles,
            true,
            (n - k) * rho,
            k as i64,
        )?;
        // outgoing point x² at collision 0, evaluated k blocks later
        let (p2, j2) = eval_frame(&orb.t, &orb.phi, &orb.obstacles, true, k * rho, -(k as i64))?;
        let dconn = linear_chain(table, &orb.obstacles, &orb.t, &orb.phi, true, n * rho, rho + conn)?;
        samples.push(ArcSample {
            p1,
            j1,
            p2,
            j2,
            dconn,
        });
    }

    // pre-correction arc fits, both parametrized by the first coordinate
    let u1: Vec<Real> = samples.iter().map(|s| s.p1.0.clone()).collect();
    let v1: Vec<Real> = samples.iter().map(|s| s.p1.1.clone()).collect();
    let (c1, res1) = polyfit(&u1, &v1, opts.fit_degree)?;
    let center2 = samples.last().unwrap().p2.0.clone();
    let u2: Vec<Real> = samples.iter().map(|s| &s.p2.0 - &center2).collect();
    let v2: Vec<Real> = samples.iter().map(|s| s.p2.1.clone()).collect();
    let (c2, res2) = polyfit(&u2, &v2, opts.fit_degree)?;
    let fit = ArcFit { c1, c2, center2 };

    // apply the mirror correction N_D to the samples and their Jacobians
    let mut arc1 = Vec::new();
    let mut arc2 = Vec::new();
    let mut gvals = Vec::new();
    let mut mirror_residual = Real::zero(prec);
    for s in &samples {
        let z1 = &s.p1.0 * &s.p1.1;
        let (d1, dp1) = mirror_correction(&fit, &z1)?;
        let q1 = (&s.p1.0 * &d1, &s.p1.1 / &d1);
        let nd1 = dn_jacobian(&d1, &dp1, &s.p1.0, &s.p1.1, 1);
        let j1 = mat_mul(&nd1, &s.j1);
        let z2 = &s.p2.0 * &s.p2.1;
        let (d2, dp2) = mirror_correction(&fit, &z2)?;
        let q2 = (&s.p2.0 * &d2, &s.p2.1 / &d2);
        let nd2 = dn_jacobian(&d2, &dp2, &s.p2.0, &s.p2.1, 1);
        let j2 = mat_mul(&nd2, &s.j2);

        let dg = mat_mul(&j2, &mat_mul(&s.dconn, &mat_inv(&j1)?));
        gvals.push(dg[1][1].clone());

        mirror_residual = Real::max(
            &mirror_residual,
            &Real::max(&(&q2.1 - &q1.0).abs(), &(&q2.0 - &q1.1).abs()),
        );
        arc1.push(q1);
        arc2.push(q2);
    }

    // corrected arc graph ξ = γ(η) and gluing function g(η)
    let eta1: Vec<Real> = arc1.iter().map(|p| p.0.clone()).collect();
    let xi1: Vec<Real> = arc1.iter().map(|p| p.1.clone()).collect();
    let (gamma, res3) = polyfit(&eta1, &xi1, opts.fit_degree)?;
    let (gfun, res4) = polyfit(&eta1, &gvals, opts.fit_degree)?;
    let fit_residual = Real::max(&Real::max(&res1, &res2), &Real::max(&res3, &res4));

    let xi_inf = gamma[0].clone();
    if xi_inf.is_zero() {
        return Err(Error::Degenerate("vanishing ξ_∞".into()));
    }

    // stable-arc slope w₁ at (0, ξ_∞), from the homoclinic segment: seed
    // the stable direction deep in the outgoing tail and transport it
    // backward to the incoming anchor, then push through the frame.
    let depth = hs.depth;
    let seg_len = hs.t.len();
    let kb = (depth - 1).min(6);
    let late = hs.anchor2 + kb * rho;
    if late >= seg_len {
        return Err(Error::Validation("segment too short for the stable-slope transport".into()));
    }
    let fwd = linear_chain(
        table,
        &hs.obstacles,
        &hs.t,
        &hs.phi,
        false,
        hs.anchor1,
        late - hs.anchor1,
    )?;
    // contracting eigendirection of the core in phase coordinates: first
    // column of the eigenbasis (inverse of the conjugacy's linear part)
    let cl = nf.conjugacy_inv.linear();
    let vs = (cl[0][0].clone(), cl[1][0].clone());
    let dvec = mat_apply(&mat_inv(&fwd)?, &vs);
    let kinf = opts.pullback.min(depth - 1).max(1);
    let (pinf, jinf_pre) = eval_frame(
        &hs.t,
        &hs.phi,
        &hs.obstacles,
        false,
        (depth - 1 - kinf) * rho,
        kinf as i64,
    )?;
    let zinf = &pinf.0 * &pinf.1;
    let (dv, dpv) = mirror_correction(&fit, &zinf)?;
    let ndinf = dn_jacobian(&dv, &dpv, &pinf.0, &pinf.1, 1);
    let jinf = mat_mul(&ndinf, &jinf_pre);
    let tvec = mat_apply(&jinf, &dvec);
    if tvec.0.is_zero() {
        return Err(Error::Degenerate("stable arc tangent to the unstable axis".into()));
    }
    let w1 = &tvec.1 / &tvec.0;
    // angle to the unstable axis (0, 1)
    let transversality_angle = Real::atan2(&Real::one(prec), &w1.abs());

    let identity_residual = (&(&gfun[0] * &(&gamma[1] - &w1)) - &Real::one(prec)).abs();

    let xi2 = &xi_inf * &xi_inf;
    let mut a_bar = vec![Real::one(prec)];
    let mut zpow = Real::one(prec);
    for ak in &nf.a {
        zpow = &zpow * &xi2;
        a_bar.push(&(ak / &nf.lambda) * &zpow);
    }
    let gamma_bar: Vec<Real> = gamma
        .iter()
        .enumerate()
        .map(|(j, gj)| gj * &xi_inf.powi(j as i64 - 1))
        .collect();
    let g_bar: Vec<Real> = gfun
        .iter()
        .enumerate()
        .map(|(j, gj)| gj * &xi_inf.powi(j as i64))
        .collect();

    Ok(HomoclinicFrame {
        xi_inf,
        gamma,
        g: gfun,
        w1,
        transversality_angle,
        a_bar,
        gamma_bar,
        g_bar,
        mirror_residual,
        fit_residual,
        identity_residual,
        samples_arc1: arc1,
        samples_arc2: arc2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{billiard_step, PhasePoint};
    use crate::geometry::{CurveSpec, ObstacleCurve};
    use crate::orbits::find_homoclinic_segment_prec;
    use crate::symbolic::SymbolicWord;

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

    fn rnd(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    /// Random volume-preserving polynomial germ: shears composed with a
    /// unit-determinant linear map.
    fn random_volume_preserving(seed: u64, order: usize) -> MapJet {
        let mut st = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let shear = |st: &mut u64, which: usize| -> MapJet {
            let mut p = Jet2::zero(P, order);
            for d in 1..=order.min(4) {
                let coef = 0.4 * rnd(st);
                if which == 0 {
                    p.set_coeff(0, d, Real::from_f64(coef, P));
                } else {
                    p.set_coeff(d, 0, Real::from_f64(coef, P));
                }
            }
            if which == 0 {
                MapJet {
                    x: Jet2::var(0, P, order).add(&p),
                    y: Jet2::var(1, P, order),
                }
            } else {
                MapJet {
                    x: Jet2::var(0, P, order),
                    y: Jet2::var(1, P, order).add(&p),
                }
            }
        };
        let a = Real::from_f64(1.0 + 0.5 * rnd(&mut st), P);
        let b = Real::from_f64(0.5 * rnd(&mut st), P);
        let c = Real::from_f64(0.5 * rnd(&mut st), P);
        // unit determinant to working precision
        let d = &(&(&b * &c) + &Real::one(P)) / &a;
        let lin = MapJet::from_linear(&[[a, b], [c, d]], order);
        lin.compose(&shear(&mut st, 0).compose(&shear(&mut st, 1)))
    }

    fn model(lam: f64, a: &[f64], order: usize) -> MapJet {
        let l = Real::from_f64(lam, P);
        let av: Vec<Real> = a.iter().map(|x| Real::from_f64(*x, P)).collect();
        normal_form_jet(&l, &av, order)
    }

    #[test]
    fn diagonal_linear_map_has_zero_invariants() {
        let g = model(0.5, &[], 7);
        let nf = extract_birkhoff(&g, 3).unwrap();
        assert!((&nf.lambda - &Real::from_f64(0.5, P)).abs().to_f64() < 1e-60);
        for ak in &nf.a {
            assert!(ak.abs().to_f64() < 1e-45);
        }
        assert!(nf.residual.to_f64() < 1e-45);
        assert!(anosov_cocycle_value(&nf).abs().to_f64() < 1e-40);
    }

    #[test]
    fn construct_then_recover_known_invariants() {
        let a_true = [1.0, -0.3, 0.07];
        let n = model(0.5, &a_true, 7);
        for seed in 0..5u64 {
            let r0 = random_volume_preserving(seed * 13 + 3, 7);
            let g = r0.compose(&n.compose(&r0.inverse()));
            let nf = extract_birkhoff(&g, 3).unwrap();
            assert!((&nf.lambda - &Real::from_f64(0.5, P)).abs().to_f64() < 1e-30);
            for (k, at) in a_true.iter().enumerate() {
                let err = (&nf.a[k] - &Real::from_f64(*at, P)).abs().to_f64();
                assert!(err < 1e-25, "a_{} err {err:.3e}", k + 1);
            }
            assert!(nf.residual.to_f64() < 1e-30, "residual {:.3e}", nf.residual.to_f64());
            // sign convention: ξ²η coefficient in the first component is
            // a₁; the ξη² coefficient in the second is −a₁/λ² (opposite
            // sign to a₁)
            let c1 = nf.normalized.x.coeff(2, 1).to_f64();
            let c2 = nf.normalized.y.coeff(1, 2).to_f64();
            assert!((c1 - 1.0).abs() < 1e-20);
            assert!((c2 + 1.0 / 0.25).abs() < 1e-20);
            assert!(c2 < 0.0);
            // conjugacy is volume-preserving at the base point
            let det = mat_det(&nf.conjugacy.linear());
            assert!((det.abs().to_f64() - 1.0).abs() < 1e-30);
        }
    }

    #[test]
    fn invariants_stable_under_volume_preserving_conjugation() {
        let n = model(0.6, &[0.8, 0.1], 7);
        let base = random_volume_preserving(42, 7);
        let g0 = base.compose(&n.compose(&base.inverse()));
        let nf0 = extract_birkhoff(&g0, 3).unwrap();
        for seed in 0..5u64 {
            let s = random_volume_preserving(seed * 7 + 100, 7);
            let g = s.compose(&g0.compose(&s.inverse()));
            let nf = extract_birkhoff(&g, 3).unwrap();
            for k in 0..3 {
                let d = (&nf.a[k] - &nf0.a[k]).abs().to_f64();
                assert!(d < 1e-20, "a_{} drift {d:.3e}", k + 1);
            }
        }
    }

    #[test]
    fn return_map_matches_monodromy_and_dynamics() {
        let table = three_circles(6.0);
        let orb = find_periodic_orbit(&table, &w("12"), P).unwrap();
        let jet = return_map_jet(&table, &orb, 0, 2).unwrap();
        let lin = jet.linear();
        for i in 0..2 {
            for j in 0..2 {
                let d = (&lin[i][j] - &orb.monodromy[i][j]).abs().to_f64();
                assert!(d < 1e-40, "linear part entry ({i},{j}) off by {d:.3e}");
            }
        }
        // jet vs the composed map at a small displacement
        let h = 1e-4;
        let (ds, dphi) = (Real::from_f64(h, P), Real::from_f64(-0.7 * h, P));
        let s0 = orb.s[0].clone();
        let phi0 = orb.phi[0].clone();
        let mut x = PhasePoint::new(orb.obstacles[0], &s0 + &ds, &phi0 + &dphi);
        for _ in 0..2 {
            let (y, _) = billiard_step(&table, &x).unwrap();
            x = y;
        }
        let (js, jphi) = jet.eval(&ds, &dphi);
        let per = {
            // arclength period of the base obstacle for wrap-safe compare
            let two_pi = Real::pi(P).mul_pow2(1);
            table.obstacles[orb.obstacles[0]].arclength(&(&two_pi - &Real::from_f64(1e-30, P)))
        };
        let mut derr = &x.s - &(&s0 + &js);
        while derr.abs().mul_pow2(1) > per {
            derr = if derr.is_positive() { &derr - &per } else { &derr + &per };
        }
        assert!(derr.abs().to_f64() < 1e-8, "s error {:.3e}", derr.to_f64());
        let perr = (&x.phi - &(&phi0 + &jphi)).abs().to_f64();
        assert!(perr < 1e-8, "phi error {perr:.3e}");
        // the (δs, δ sin φ) chart makes the return map area-preserving as
        // a jet, not only at the fixed point
        let sym = return_map_jet_symplectic(&table, &orb, 0, 4).unwrap();
        let dev = sym
            .jacobian_det()
            .add_scalar(&-&Real::one(P))
            .max_coeff_mag(0, 3);
        assert!(dev.to_f64() < 1e-40, "jet volume defect {:.3e}", dev.to_f64());
    }

    #[test]
    fn base_point_choice_does_not_change_invariants() {
        let table = three_circles(6.0);
        let orb = find_periodic_orbit(&table, &w("12"), P).unwrap();
        let nf0 =
            extract_birkhoff(&return_map_jet_symplectic(&table, &orb, 0, 7).unwrap(), 3).unwrap();
        let nf1 =
            extract_birkhoff(&return_map_jet_symplectic(&table, &orb, 1, 7).unwrap(), 3).unwrap();
        assert!((&nf0.lambda - &nf1.lambda).abs().to_f64() < 1e-40);
        for k in 0..3 {
            let d = (&nf0.a[k] - &nf1.a[k]).abs().to_f64();
            assert!(d < 1e-25, "a_{} base drift {d:.3e}", k + 1);
        }
    }

    #[test]
    fn anosov_identity() {
        // direct substitution
        let nf = extract_birkhoff(&model(0.5, &[1.0], 5), 1).unwrap();
        assert!((anosov_cocycle_value(&nf).to_f64() + 2.0).abs() < 1e-30);
        // ½ λ ∂_ξηη of the second component, on an extracted billiard form
        let table = three_circles(6.0);
        let orb = find_periodic_orbit(&table, &w("12"), P).unwrap();
        let nf =
            extract_birkhoff(&return_map_jet_symplectic(&table, &orb, 0, 7).unwrap(), 3).unwrap();
        let partial = nf.normalized.y.coeff(1, 2).mul_i64(2);
        let half = &(&nf.lambda * &partial).mul_pow2(-1);
        let d = (&anosov_cocycle_value(&nf) - half).abs().to_f64();
        assert!(d < 1e-18, "identity residual {d:.3e}");
        assert!(nf.a[0].abs().to_f64() > 1e-6, "flagship a1 unexpectedly small");
    }

    #[test]
    fn mirror_correction_is_identity_for_symmetric_arcs() {
        // γ̂₁(ξ) = c + mξ; its mirror is the graph ξ̂ ↦ (ξ̂ − c)/m
        let c = Real::from_f64(0.8, P);
        let m = Real::from_f64(0.3, P);
        let center2 = c.clone();
        let c2 = vec![Real::zero(P), m.recip()];
        let fit = ArcFit {
            c1: vec![c, m],
            c2,
            center2,
        };
        for z in [1e-6, 1e-9, -5e-7] {
            let (d, dp) = mirror_correction(&fit, &Real::from_f64(z, P)).unwrap();
            assert!((d.to_f64() - 1.0).abs() < 1e-40);
            assert!(dp.abs().to_f64() < 1e-30);
        }
    }

    #[test]
    fn mirror_normalized_frame_flagship() {
        let table = three_circles(6.0);
        let hs = find_homoclinic_segment_prec(&table, &w("12"), &w("13"), 10, P).unwrap();
        let g = return_map_jet_symplectic(&table, &hs.core, 0, 9).unwrap();
        let nf = extract_birkhoff(&g, 3).unwrap();
        assert!(nf.residual.to_f64() < 1e-30);
        let frame = mirror_normalize(&table, &nf, &hs, &MirrorOptions::default()).unwrap();
        assert!(frame.xi_inf.abs().to_f64() > 1e-4, "xi_inf {:.3e}", frame.xi_inf.to_f64());
        assert!((frame.a_bar[0].to_f64() - 1.0).abs() < 1e-40);
        assert!((frame.gamma_bar[0].to_f64() - 1.0).abs() < 1e-40);
        assert!(
            frame.mirror_residual.to_f64() < 1e-8,
            "mirror residual {:.3e}",
            frame.mirror_residual.to_f64()
        );
        assert!(
            frame.identity_residual.to_f64() < 1e-6,
            "g0(γ1 − w1) − 1 = {:.3e}",
            frame.identity_residual.to_f64()
        );
        assert!(frame.g[0].abs().to_f64() > 1e-6, "g0 {:.3e}", frame.g[0].to_f64());
        assert!(frame.transversality_angle.to_f64() > 1e-3);
    }
}
