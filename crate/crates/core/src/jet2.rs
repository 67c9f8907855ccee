//! Truncated bivariate Taylor jets and 2D map jets over `Real`.
//!
//! A `Jet2` holds coefficients c_{ab} of a series Σ c_{ab} u^a v^b with
//! a+b ≤ K in two displacement variables around a base point. A `MapJet`
//! is a pair of jets representing a planar map germ; composition and
//! Newton inversion at jet level give exact truncated Taylor data for
//! collision maps, monodromies, and normal-form conjugacies.

use crate::real::Real;
use crate::series::Series;

/// Flat index of the (a,b) coefficient: degree-major, then by b.
pub fn idx(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

pub fn ncoef(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

#[derive(Clone, Debug)]
pub struct Jet2 {
    pub order: usize,
    pub c: Vec<Real>,
}

impl Jet2 {
    pub fn zero(prec: u32, order: usize) -> Self {
        Jet2 {
            order,
            c: vec![Real::zero(prec); ncoef(order)],
        }
    }

    pub fn constant(v: Real, order: usize) -> Self {
        let mut j = Jet2::zero(v.prec(), order);
        j.c[0] = v;
        j
    }

    /// The displacement variable: 0 for u, 1 for v.
    pub fn var(which: usize, prec: u32, order: usize) -> Self {
        let mut j = Jet2::zero(prec, order);
        if order >= 1 {
            let i = if which == 0 { idx(1, 0) } else { idx(0, 1) };
            j.c[i] = Real::one(prec);
        }
        j
    }

    pub fn prec(&self) -> u32 {
        self.c[0].prec()
    }

    pub fn coeff(&self, a: usize, b: usize) -> &Real {
        &self.c[idx(a, b)]
    }

    pub fn set_coeff(&mut self, a: usize, b: usize, v: Real) {
        self.c[idx(a, b)] = v;
    }

    pub fn constant_term(&self) -> &Real {
        &self.c[0]
    }

    /// Max coefficient magnitude at degrees in [lo, hi].
    pub fn max_coeff_mag(&self, lo: usize, hi: usize) -> Real {
        let prec = self.prec();
        let mut m = Real::zero(prec);
        for d in lo..=hi.min(self.order) {
            for b in 0..=d {
                let v = self.c[idx(d - b, b)].abs();
                if v > m {
                    m = v;
                }
            }
        }
        m
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        self.zip(o, |a, b| a - b)
    }

    fn zip(&self, o: &Jet2, f: impl Fn(&Real, &Real) -> Real) -> Jet2 {
        assert_eq!(self.order, o.order);
        Jet2 {
            order: self.order,
            c: self.c.iter().zip(&o.c).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            order: self.order,
            c: self.c.iter().map(|x| -x).collect(),
        }
    }

    pub fn scale(&self, k: &Real) -> Jet2 {
        Jet2 {
            order: self.order,
            c: self.c.iter().map(|x| x * k).collect(),
        }
    }

    pub fn add_scalar(&self, k: &Real) -> Jet2 {
        let mut j = self.clone();
        j.c[0] += k;
        j
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        assert_eq!(self.order, o.order);
        let k = self.order;
        let prec = self.prec().max(o.prec());
        let mut out = Jet2::zero(prec, k);
        for d1 in 0..=k {
            for b1 in 0..=d1 {
                let a1 = d1 - b1;
                let x = &self.c[idx(a1, b1)];
                if x.is_zero() {
                    continue;
                }
                for d2 in 0..=k - d1 {
                    for b2 in 0..=d2 {
                        let a2 = d2 - b2;
                        let y = &o.c[idx(a2, b2)];
                        if y.is_zero() {
                            continue;
                        }
                        out.c[idx(a1 + a2, b1 + b2)] += &(x * y);
                    }
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Jet2 {
        let f = crate::series::taylor_recip(&self.c[0], self.order);
        apply_series(&f, self)
    }

    pub fn div(&self, o: &Jet2) -> Jet2 {
        self.mul(&o.recip())
    }

    pub fn sqrt(&self) -> Jet2 {
        let f = crate::series::taylor_sqrt(&self.c[0], self.order);
        apply_series(&f, self)
    }

    pub fn sin(&self) -> Jet2 {
        let f = crate::series::taylor_sin(&self.c[0], self.order);
        apply_series(&f, self)
    }

    pub fn cos(&self) -> Jet2 {
        let f = crate::series::taylor_cos(&self.c[0], self.order);
        apply_series(&f, self)
    }

    /// Substitute jets (x, y) with zero constant term for the variables.
    pub fn compose(&self, x: &Jet2, y: &Jet2) -> Jet2 {
        assert!(x.constant_term().is_zero() && y.constant_term().is_zero());
        let k = self.order;
        let prec = self.prec().max(x.prec()).max(y.prec());
        // powers of x and y
        let one = Jet2::constant(Real::one(prec), k);
        let mut px = vec![one.clone()];
        let mut py = vec![one];
        for a in 1..=k {
            px.push(px[a - 1].mul(x));
            py.push(py[a - 1].mul(y));
        }
        let mut out = Jet2::zero(prec, k);
        for d in 0..=k {
            for b in 0..=d {
                let a = d - b;
                let cc = &self.c[idx(a, b)];
                if cc.is_zero() {
                    continue;
                }
                out = out.add(&px[a].mul(&py[b]).scale(cc));
            }
        }
        out
    }

    /// Partial derivative jet (loses one order of reliable data but keeps
    /// the same truncation; top-degree coefficients are set to zero).
    pub fn partial(&self, which: usize) -> Jet2 {
        let k = self.order;
        let prec = self.prec();
        let mut out = Jet2::zero(prec, k);
        for d in 1..=k {
            for b in 0..=d {
                let a = d - b;
                let cc = &self.c[idx(a, b)];
                if cc.is_zero() {
                    continue;
                }
                if which == 0 && a >= 1 {
                    out.c[idx(a - 1, b)] += &cc.mul_i64(a as i64);
                } else if which == 1 && b >= 1 {
                    out.c[idx(a, b - 1)] += &cc.mul_i64(b as i64);
                }
            }
        }
        out
    }

    pub fn eval(&self, u: &Real, v: &Real) -> Real {
        let prec = self.prec().max(u.prec()).max(v.prec());
        let mut acc = Real::zero(prec);
        // powers
        let mut pu = vec![Real::one(prec)];
        let mut pv = vec![Real::one(prec)];
        for i in 1..=self.order {
            pu.push(&pu[i - 1] * u);
            pv.push(&pv[i - 1] * v);
        }
        for d in 0..=self.order {
            for b in 0..=d {
                let a = d - b;
                let cc = &self.c[idx(a, b)];
                if !cc.is_zero() {
                    acc += &(&(cc * &pu[a]) * &pv[b]);
                }
            }
        }
        acc
    }

    /// Drop coefficients of degree above `d`.
    pub fn truncate_degree(&self, d: usize) -> Jet2 {
        let mut out = self.clone();
        for deg in d + 1..=self.order {
            for b in 0..=deg {
                out.c[idx(deg - b, b)] = Real::zero(self.prec());
            }
        }
        out
    }
}

/// Apply a univariate Taylor expansion (taken at the jet's constant term)
/// to a jet: result = Σ f_k (j − j_0)^k, truncated.
pub fn apply_series(f: &Series, j: &Jet2) -> Jet2 {
    let k = j.order;
    let prec = j.prec().max(f.prec());
    let mut dj = j.clone();
    dj.c[0] = Real::zero(prec);
    let mut acc = Jet2::zero(prec, k);
    let kk = f.order().min(k);
    for i in (0..=kk).rev() {
        acc = acc.mul(&dj);
        acc.c[0] += &f.c[i];
    }
    acc
}

/// Evaluate a univariate series at a jet argument: f(w), truncated in the
/// jet variables. Exact polynomial arithmetic; accurate as a Taylor jet of
/// the underlying function only when w's constant term is negligible at
/// the series' truncation order (enforced upstream by root refinement).
pub fn series_of_jet(f: &Series, w: &Jet2) -> Jet2 {
    let k = w.order;
    let prec = w.prec().max(f.prec());
    let mut acc = Jet2::zero(prec, k);
    let kk = f.order().min(k);
    for i in (0..=kk).rev() {
        acc = acc.mul(w);
        acc.c[0] += &f.c[i];
    }
    acc
}

/// A planar map germ as a pair of jets in the displacement variables.
/// The constant terms are the image-point offset (zero for germs fixing
/// the base point).
#[derive(Clone, Debug)]
pub struct MapJet {
    pub x: Jet2,
    pub y: Jet2,
}

impl MapJet {
    pub fn identity(prec: u32, order: usize) -> Self {
        MapJet {
            x: Jet2::var(0, prec, order),
            y: Jet2::var(1, prec, order),
        }
    }

    pub fn order(&self) -> usize {
        self.x.order
    }

    pub fn prec(&self) -> u32 {
        self.x.prec()
    }

    /// Linear part as [[a,b],[c,d]] acting on (u,v).
    pub fn linear(&self) -> [[Real; 2]; 2] {
        [
            [self.x.coeff(1, 0).clone(), self.x.coeff(0, 1).clone()],
            [self.y.coeff(1, 0).clone(), self.y.coeff(0, 1).clone()],
        ]
    }

    pub fn from_linear(m: &[[Real; 2]; 2], order: usize) -> Self {
        let prec = m[0][0].prec();
        let mut x = Jet2::zero(prec, order);
        let mut y = Jet2::zero(prec, order);
        x.set_coeff(1, 0, m[0][0].clone());
        x.set_coeff(0, 1, m[0][1].clone());
        y.set_coeff(1, 0, m[1][0].clone());
        y.set_coeff(0, 1, m[1][1].clone());
        MapJet { x, y }
    }

    /// self ∘ other (apply other first). Both germs must fix the origin.
    pub fn compose(&self, other: &MapJet) -> MapJet {
        assert!(other.x.constant_term().is_zero() && other.y.constant_term().is_zero());
        MapJet {
            x: self.x.compose(&other.x, &other.y),
            y: self.y.compose(&other.x, &other.y),
        }
    }

    /// Jet of the determinant of the Jacobian.
    pub fn jacobian_det(&self) -> Jet2 {
        let fx = self.x.partial(0);
        let fy = self.x.partial(1);
        let gx = self.y.partial(0);
        let gy = self.y.partial(1);
        fx.mul(&gy).sub(&fy.mul(&gx))
    }

    /// Compositional inverse of a germ fixing the origin with invertible
    /// linear part.
    pub fn inverse(&self) -> MapJet {
        assert!(self.x.constant_term().is_zero() && self.y.constant_term().is_zero());
        let k = self.order();
        let prec = self.prec();
        let l = self.linear();
        let det = &(&l[0][0] * &l[1][1]) - &(&l[0][1] * &l[1][0]);
        assert!(!det.is_zero(), "singular linear part");
        let inv_det = det.recip();
        let linv = [
            [&l[1][1] * &inv_det, -&(&l[0][1] * &inv_det)],
            [-&(&l[1][0] * &inv_det), &l[0][0] * &inv_det],
        ];
        // higher-order part H = self − L
        let lmap = MapJet::from_linear(&l, k);
        let h = MapJet {
            x: self.x.sub(&lmap.x),
            y: self.y.sub(&lmap.y),
        };
        // N solves L∘N = Id − H∘N; iterate, gaining one order each pass
        let linv_map = MapJet::from_linear(&linv, k);
        let mut n = linv_map.clone();
        for _ in 0..k {
            let hn = h.compose(&n);
            let rhs = MapJet {
                x: MapJet::identity(prec, k).x.sub(&hn.x),
                y: MapJet::identity(prec, k).y.sub(&hn.y),
            };
            n = linv_map.compose(&rhs);
        }
        n
    }

    pub fn eval(&self, u: &Real, v: &Real) -> (Real, Real) {
        (self.x.eval(u, v), self.y.eval(u, v))
    }
}

/// 2x2 extended-precision matrix helpers used for monodromies.
pub fn mat_mul(a: &[[Real; 2]; 2], b: &[[Real; 2]; 2]) -> [[Real; 2]; 2] {
    [
        [
            &(&a[0][0] * &b[0][0]) + &(&a[0][1] * &b[1][0]),
            &(&a[0][0] * &b[0][1]) + &(&a[0][1] * &b[1][1]),
        ],
        [
            &(&a[1][0] * &b[0][0]) + &(&a[1][1] * &b[1][0]),
            &(&a[1][0] * &b[0][1]) + &(&a[1][1] * &b[1][1]),
        ],
    ]
}

pub fn mat_det(a: &[[Real; 2]; 2]) -> Real {
    &(&a[0][0] * &a[1][1]) - &(&a[0][1] * &a[1][0])
}

pub fn mat_trace(a: &[[Real; 2]; 2]) -> Real {
    &a[0][0] + &a[1][1]
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 192;

    fn rjet(seed: u64, order: usize, zero_const: bool) -> Jet2 {
        // cheap deterministic pseudo-random coefficients in [-1, 1]
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut j = Jet2::zero(P, order);
        for i in 0..j.c.len() {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let v = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            j.c[i] = Real::from_f64(v, P);
        }
        if zero_const {
            j.c[0] = Real::zero(P);
        }
        j
    }

    fn rmap(seed: u64, order: usize) -> MapJet {
        MapJet {
            x: rjet(seed, order, true),
            y: rjet(seed.wrapping_add(7), order, true),
        }
    }

    fn assert_jets_close(a: &Jet2, b: &Jet2, tol: f64) {
        for i in 0..a.c.len() {
            let d = (&a.c[i] - &b.c[i]).abs().to_f64();
            assert!(d < tol, "coeff {i}: {d}");
        }
    }

    #[test]
    fn compose_associativity() {
        for seed in 0..5u64 {
            let a = rmap(seed * 31 + 1, 6);
            let b = rmap(seed * 31 + 2, 6);
            let c = rmap(seed * 31 + 3, 6);
            let lhs = a.compose(&b).compose(&c);
            let rhs = a.compose(&b.compose(&c));
            assert_jets_close(&lhs.x, &rhs.x, 1e-38);
            assert_jets_close(&lhs.y, &rhs.y, 1e-38);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        for seed in 0..5u64 {
            let mut m = rmap(seed * 17 + 5, 6);
            // make the linear part well-conditioned
            m.x.set_coeff(1, 0, Real::from_f64(2.0, P));
            m.y.set_coeff(0, 1, Real::from_f64(1.5, P));
            let n = m.inverse();
            let id = m.compose(&n);
            let expect = MapJet::identity(P, 6);
            assert_jets_close(&id.x, &expect.x, 1e-35);
            assert_jets_close(&id.y, &expect.y, 1e-35);
        }
    }

    #[test]
    fn scalar_functions_match_eval() {
        let mut j = rjet(99, 5, false);
        j.c[0] = Real::from_f64(1.7, P);
        let u = Real::from_f64(0.003, P);
        let v = Real::from_f64(-0.002, P);
        let jv = j.eval(&u, &v).to_f64();
        assert!((j.sqrt().eval(&u, &v).to_f64() - jv.sqrt()).abs() < 1e-13);
        assert!((j.sin().eval(&u, &v).to_f64() - jv.sin()).abs() < 1e-13);
        assert!((j.cos().eval(&u, &v).to_f64() - jv.cos()).abs() < 1e-13);
        assert!((j.recip().eval(&u, &v).to_f64() - 1.0 / jv).abs() < 1e-13);
    }

    #[test]
    fn jacobian_det_of_composition_multiplies() {
        let a = rmap(3, 5);
        let b = rmap(4, 5);
        let comp = a.compose(&b);
        let d_comp = comp.jacobian_det().constant_term().clone();
        let d_prod = a.jacobian_det().constant_term() * b.jacobian_det().constant_term();
        assert!((&d_comp - &d_prod).abs().to_f64() < 1e-40);
    }

    #[test]
    fn partial_derivative_consistency() {
        let j = rjet(12, 6, false);
        let h = 1e-20;
        let hv = Real::from_f64(h, P);
        let z = Real::zero(P);
        let fd = (&j.eval(&hv, &z) - &j.eval(&(-&hv), &z)).to_f64() / (2.0 * h);
        let px = j.partial(0).constant_term().to_f64();
        assert!((fd - px).abs() < 1e-12);
    }
}
