//! Univariate truncated power series over `Real`.
//!
//! Used for local arclength/parameter conversion on obstacle boundaries and
//! as the scalar-function engine behind bivariate jets (cos, sin, sqrt of a
//! jet are built by composing a univariate Taylor expansion with the jet).

use crate::real::Real;

/// Truncated power series c_0 + c_1 x + ... + c_n x^n. All arithmetic
/// truncates to the shorter operand's order.
#[derive(Clone, Debug)]
pub struct Series {
    pub c: Vec<Real>,
}

impl Series {
    pub fn new(c: Vec<Real>) -> Self {
        assert!(!c.is_empty());
        Series { c }
    }

    pub fn constant(v: Real, order: usize) -> Self {
        let prec = v.prec();
        let mut c = vec![Real::zero(prec); order + 1];
        c[0] = v;
        Series { c }
    }

    /// The identity series x, to the given truncation order.
    pub fn identity(prec: u32, order: usize) -> Self {
        let mut c = vec![Real::zero(prec); order + 1];
        if order >= 1 {
            c[1] = Real::one(prec);
        }
        Series { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn prec(&self) -> u32 {
        self.c[0].prec()
    }

    pub fn truncate(&self, order: usize) -> Series {
        let n = (order + 1).min(self.c.len());
        Series::new(self.c[..n].to_vec())
    }

    pub fn add(&self, other: &Series) -> Series {
        let n = self.c.len().min(other.c.len());
        Series::new((0..n).map(|i| &self.c[i] + &other.c[i]).collect())
    }

    pub fn sub(&self, other: &Series) -> Series {
        let n = self.c.len().min(other.c.len());
        Series::new((0..n).map(|i| &self.c[i] - &other.c[i]).collect())
    }

    pub fn neg(&self) -> Series {
        Series::new(self.c.iter().map(|x| -x).collect())
    }

    pub fn scale(&self, k: &Real) -> Series {
        Series::new(self.c.iter().map(|x| x * k).collect())
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.c.len().min(other.c.len());
        let prec = self.prec().max(other.prec());
        let mut out = vec![Real::zero(prec); n];
        for i in 0..n {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                if other.c[j].is_zero() {
                    continue;
                }
                out[i + j] += &(&self.c[i] * &other.c[j]);
            }
        }
        Series::new(out)
    }

    pub fn div(&self, other: &Series) -> Series {
        assert!(!other.c[0].is_zero(), "series division by zero constant term");
        let n = self.c.len().min(other.c.len());
        let prec = self.prec().max(other.prec());
        let inv0 = other.c[0].recip();
        let mut out = vec![Real::zero(prec); n];
        for i in 0..n {
            let mut acc = self.c[i].clone();
            for j in 1..=i {
                acc -= &(&other.c[j] * &out[i - j]);
            }
            out[i] = &acc * &inv0;
        }
        Series::new(out)
    }

    pub fn derivative(&self) -> Series {
        let prec = self.prec();
        if self.c.len() == 1 {
            return Series::constant(Real::zero(prec), 0);
        }
        Series::new(
            (1..self.c.len())
                .map(|i| self.c[i].mul_i64(i as i64))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term; gains one order.
    pub fn integral(&self) -> Series {
        let prec = self.prec();
        let mut out = vec![Real::zero(prec)];
        for (i, ci) in self.c.iter().enumerate() {
            out.push(ci.div_i64(i as i64 + 1));
        }
        Series::new(out)
    }

    /// Compose self ∘ inner; inner must have zero constant term.
    pub fn compose(&self, inner: &Series) -> Series {
        assert!(inner.c[0].is_zero(), "composition needs zero constant term");
        let n = self.c.len().min(inner.c.len());
        let prec = self.prec().max(inner.prec());
        // Horner on the truncated inner
        let inner_t = inner.truncate(n - 1);
        let mut acc = Series::constant(Real::zero(prec), n - 1);
        for k in (0..self.c.len().min(n)).rev() {
            acc = acc.mul(&inner_t);
            acc.c[0] += &self.c[k];
        }
        acc
    }

    /// Compositional inverse: returns g with g(self(x)) = x. Requires
    /// c_0 = 0 and c_1 ≠ 0.
    pub fn inverse(&self) -> Series {
        assert!(self.c[0].is_zero() && !self.c[1].is_zero());
        let n = self.order();
        let prec = self.prec();
        let mut g = Series::constant(Real::zero(prec), n);
        g.c[1] = self.c[1].recip();
        // Newton at series level: g <- g - (f∘g - id) / (f'∘g)
        let fp = self.derivative();
        let mut known = 1usize;
        while known < n {
            let fg = self.compose(&g);
            let mut err = fg;
            err.c[1] -= &Real::one(prec);
            let fpg = fp.compose(&g.truncate(n - 1)).truncate(n);
            // pad derivative composition back to order n
            let mut fpg_c = fpg.c;
            fpg_c.resize(n + 1, Real::zero(prec));
            let corr = err.div(&Series::new(fpg_c));
            g = g.sub(&corr);
            known = (2 * known).min(n);
        }
        g
    }

    /// sqrt of a series with positive constant term.
    pub fn sqrt(&self) -> Series {
        assert!(self.c[0].is_positive());
        let n = self.order();
        let prec = self.prec();
        let r0 = self.c[0].sqrt();
        let mut out = vec![Real::zero(prec); n + 1];
        out[0] = r0.clone();
        let half_inv = r0.mul_pow2(1).recip();
        for i in 1..=n {
            // c_i = sum_{j=0..i} out_j out_{i-j}
            let mut acc = self.c[i].clone();
            for j in 1..i {
                acc -= &(&out[j] * &out[i - j]);
            }
            out[i] = &acc * &half_inv;
        }
        Series::new(out)
    }

    /// Substitute x -> k*x: c_i gets multiplied by k^i.
    pub fn scale_var(&self, k: &Real) -> Series {
        let prec = self.prec().max(k.prec());
        let mut pw = Real::one(prec);
        let mut out = Vec::with_capacity(self.c.len());
        for (i, c) in self.c.iter().enumerate() {
            if i > 0 {
                pw = &pw * k;
            }
            out.push(c * &pw);
        }
        Series::new(out)
    }

    pub fn eval(&self, x: &Real) -> Real {
        let prec = self.prec().max(x.prec());
        let mut acc = Real::zero(prec);
        for c in self.c.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }
}

/// Taylor coefficients of elementary functions at a point, used to apply
/// scalar functions to series and jets.
pub fn taylor_sin(at: &Real, order: usize) -> Series {
    let (s, c) = at.sin_cos();
    cycle_taylor(order, [s.clone(), c.clone(), -&s, -&c])
}

pub fn taylor_cos(at: &Real, order: usize) -> Series {
    let (s, c) = at.sin_cos();
    cycle_taylor(order, [c.clone(), -&s, -&c, s.clone()])
}

fn cycle_taylor(order: usize, cycle: [Real; 4]) -> Series {
    let prec = cycle[0].prec();
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = Real::one(prec);
    for k in 0..=order {
        if k > 0 {
            fact = fact.div_i64(k as i64);
        }
        out.push(&cycle[k % 4] * &fact);
    }
    Series::new(out)
}

/// Taylor of sqrt at a positive point.
pub fn taylor_sqrt(at: &Real, order: usize) -> Series {
    let prec = at.prec();
    let r = at.sqrt();
    // d/dx sqrt = 1/2 x^{-1/2}; coefficient recurrence for (at + u)^{1/2}
    let mut out = Vec::with_capacity(order + 1);
    out.push(r.clone());
    let inv_at = at.recip();
    // c_{k+1} = c_k * (1/2 - k) / ((k+1) at)
    let mut ck = r;
    for k in 0..order {
        let num = Real::one(prec).mul_pow2(-1) - Real::from_i64(k as i64, prec);
        ck = &(&ck * &num) * &inv_at.div_i64(k as i64 + 1);
        out.push(ck.clone());
    }
    Series::new(out)
}

/// Taylor of 1/x at a nonzero point.
pub fn taylor_recip(at: &Real, order: usize) -> Series {
    let inv = at.recip();
    let mut out = Vec::with_capacity(order + 1);
    let mut ck = inv.clone();
    out.push(ck.clone());
    for _ in 0..order {
        ck = -&(&ck * &inv);
        out.push(ck.clone());
    }
    Series::new(out)
}

/// Taylor of atan at a point.
pub fn taylor_atan(at: &Real, order: usize) -> Series {
    // atan'(x) = 1/(1+x^2); expand the derivative as a series in u around
    // `at` and integrate.
    let prec = at.prec();
    let one = Real::one(prec);
    if order == 0 {
        return Series::new(vec![at.atan()]);
    }
    // denom(u) = 1 + (at+u)^2 = (1+at^2) + 2at u + u^2
    let mut denom = vec![Real::zero(prec); order];
    denom[0] = &one + &(at * at);
    if order >= 2 {
        denom[1] = at.mul_pow2(1);
    }
    if order >= 3 {
        denom[2] = one.clone();
    }
    let num = Series::constant(one, order - 1);
    let deriv = num.div(&Series::new(denom));
    let mut res = deriv.integral();
    res.c[0] = at.atan();
    res
}
