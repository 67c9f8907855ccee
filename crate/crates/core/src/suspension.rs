//! Thermodynamic formalism on subshifts of finite type: entropy,
//! pressure, equilibrium Markov measures, suspension-flow entropy via the
//! root of s ↦ P(−s·r), Abramov's formula, the entropy-flexibility
//! samplers, and the three-measure separating bump.
//!
//! Roofs and potentials are locally constant on edges (2-cylinders) — the
//! coarsest class for which pressure reduces to a matrix spectral radius.
//! Finer cylinder dependence is handled by recoding to a higher block
//! presentation. Matrices are small and double precision suffices here;
//! the extended-precision machinery lives in the billiard modules.

use crate::error::{Error, Result};

/// An irreducible aperiodic subshift of finite type with optional
/// edge-indexed roof and potential.
#[derive(Clone, Debug)]
pub struct MarkovSystem {
    pub adjacency: Vec<Vec<u8>>,
    pub roof: Option<Vec<Vec<f64>>>,
    pub potential: Option<Vec<Vec<f64>>>,
}

/// A stationary Markov measure compatible with the shift.
#[derive(Clone, Debug)]
pub struct MarkovMeasure {
    /// Stochastic transition matrix.
    pub p: Vec<Vec<f64>>,
    /// Stationary row vector, πP = π, Σπ = 1.
    pub pi: Vec<f64>,
}

const STATIONARITY_TOL: f64 = 1e-14;
const PERRON_TOL: f64 = 4.0 * f64::EPSILON;

fn check_square(a: &[Vec<f64>]) -> Result<usize> {
    let m = a.len();
    if m == 0 || a.iter().any(|r| r.len() != m) {
        return Err(Error::Validation("matrix must be square and nonempty".into()));
    }
    Ok(m)
}

impl MarkovSystem {
    pub fn new(adjacency: Vec<Vec<u8>>) -> Result<Self> {
        let m = adjacency.len();
        if m == 0 || adjacency.iter().any(|r| r.len() != m) {
            return Err(Error::Validation("adjacency matrix must be square and nonempty".into()));
        }
        if adjacency.iter().flatten().any(|&v| v > 1) {
            return Err(Error::Validation("adjacency entries must be 0 or 1".into()));
        }
        // primitivity: some boolean power strictly positive (Wielandt
        // bound (m−1)² + 1 on the exponent)
        let mut pow = adjacency.clone();
        let limit = (m - 1) * (m - 1) + 1;
        let mut ok = pow.iter().flatten().all(|&v| v == 1);
        for _ in 1..=limit {
            if ok {
                break;
            }
            let mut next = vec![vec![0u8; m]; m];
            for i in 0..m {
                for k in 0..m {
                    if pow[i][k] == 1 {
                        for j in 0..m {
                            if adjacency[k][j] == 1 {
                                next[i][j] = 1;
                            }
                        }
                    }
                }
            }
            pow = next;
            ok = pow.iter().flatten().all(|&v| v == 1);
        }
        if !ok {
            return Err(Error::Degenerate(
                "adjacency matrix is not irreducible and aperiodic".into(),
            ));
        }
        Ok(MarkovSystem {
            adjacency,
            roof: None,
            potential: None,
        })
    }

    pub fn size(&self) -> usize {
        self.adjacency.len()
    }

    pub fn with_roof(mut self, roof: Vec<Vec<f64>>) -> Result<Self> {
        let m = check_square(&roof)?;
        if m != self.size() {
            return Err(Error::Validation("roof size mismatch".into()));
        }
        for i in 0..m {
            for j in 0..m {
                if self.adjacency[i][j] == 1 && roof[i][j] <= 0.0 {
                    return Err(Error::Validation(format!(
                        "roof must be strictly positive on edges; r[{i}][{j}] = {}",
                        roof[i][j]
                    )));
                }
            }
        }
        self.roof = Some(roof);
        Ok(self)
    }

    pub fn with_potential(mut self, potential: Vec<Vec<f64>>) -> Result<Self> {
        if check_square(&potential)? != self.size() {
            return Err(Error::Validation("potential size mismatch".into()));
        }
        self.potential = Some(potential);
        Ok(self)
    }

    pub fn constant_roof(&self, c: f64) -> Vec<Vec<f64>> {
        vec![vec![c; self.size()]; self.size()]
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let m = self.size();
        let mut e = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if self.adjacency[i][j] == 1 {
                    e.push((i, j));
                }
            }
        }
        e
    }
}

/// Perron root with right and left eigenvectors of a nonnegative
/// primitive matrix, by power iteration; the Collatz–Wielandt bounds
/// certify convergence.
fn perron(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = m.len();
    let mt: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect();
    let iterate = |mat: &[Vec<f64>]| -> Result<(f64, Vec<f64>)> {
        let mut v = vec![1.0f64; n];
        let mut fallback: Option<(f64, Vec<f64>)> = None;
        for _ in 0..50_000 {
            let mut w = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += mat[i][j] * v[j];
                }
            }
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..n {
                if v[i] > 0.0 {
                    let q = w[i] / v[i];
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
            let norm: f64 = w.iter().sum();
            if norm <= 0.0 || !norm.is_finite() {
                return Err(Error::NonConvergence("power iteration degenerated".into()));
            }
            for x in &mut w {
                *x /= norm;
            }
            v = w;
            if hi - lo < PERRON_TOL * hi {
                return Ok((0.5 * (lo + hi), v));
            }
            if hi - lo < 1e-13 * hi {
                fallback = Some((0.5 * (lo + hi), v.clone()));
            }
        }
        fallback.ok_or_else(|| Error::NonConvergence("Perron iteration did not certify".into()))
    };
    let (rho, right) = iterate(m)?;
    let (_, left) = iterate(&mt)?;
    Ok((rho, right, left))
}

/// log of the Perron root of the adjacency matrix.
pub fn sft_entropy(sys: &MarkovSystem) -> Result<f64> {
    let a: Vec<Vec<f64>> = sys
        .adjacency
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let (rho, _, _) = perron(&a)?;
    Ok(rho.ln())
}

impl MarkovMeasure {
    /// Build from a stochastic matrix; the stationary vector is computed
    /// and the invariants are verified.
    pub fn from_transition(p: Vec<Vec<f64>>) -> Result<Self> {
        check_square(&p)?;
        for (i, row) in p.iter().enumerate() {
            if row.iter().any(|&x| x < 0.0) {
                return Err(Error::Validation(format!("negative transition in row {i}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("row {i} sums to {s}, not 1")));
            }
        }
        let (_, _, left) = perron(&p)?;
        let total: f64 = left.iter().sum();
        let pi: Vec<f64> = left.iter().map(|x| x / total).collect();
        let mm = MarkovMeasure { p, pi };
        let res = mm.stationarity_residual();
        if res > STATIONARITY_TOL {
            return Err(Error::NonConvergence(format!(
                "stationarity residual {res:.3e} exceeds {STATIONARITY_TOL:.0e}"
            )));
        }
        Ok(mm)
    }

    pub fn size(&self) -> usize {
        self.p.len()
    }

    pub fn stationarity_residual(&self) -> f64 {
        let m = self.size();
        let mut worst = 0.0f64;
        for j in 0..m {
            let mut s = 0.0;
            for i in 0..m {
                s += self.pi[i] * self.p[i][j];
            }
            worst = worst.max((s - self.pi[j]).abs());
        }
        worst
    }

    /// Integral of an edge-indexed locally constant function.
    pub fn edge_integral(&self, g: &[Vec<f64>]) -> f64 {
        let m = self.size();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                if self.p[i][j] > 0.0 {
                    s += self.pi[i] * self.p[i][j] * g[i][j];
                }
            }
        }
        s
    }

    /// Measure of the cylinder defined by a state path x_0 x_1 … x_n.
    pub fn path_measure(&self, path: &[usize]) -> f64 {
        let mut w = self.pi[path[0]];
        for k in 1..path.len() {
            w *= self.p[path[k - 1]][path[k]];
        }
        w
    }
}

/// −Σ_i π_i Σ_j P_{ij} log P_{ij}.
pub fn markov_entropy(mu: &MarkovMeasure) -> f64 {
    let m = mu.size();
    let mut h = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = mu.p[i][j];
            if p > 0.0 {
                h -= mu.pi[i] * p * p.ln();
            }
        }
    }
    h
}

/// Measure of maximal entropy: P_{ij} = A_{ij} u_j / (ρ u_i).
pub fn parry_measure(sys: &MarkovSystem) -> Result<MarkovMeasure> {
    equilibrium_measure(sys, &vec![vec![0.0; sys.size()]; sys.size()])
}

fn weighted_matrix(sys: &MarkovSystem, psi: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = sys.size();
    if check_square(psi)? != m {
        return Err(Error::Validation("potential size mismatch".into()));
    }
    Ok((0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if sys.adjacency[i][j] == 1 {
                        psi[i][j].exp()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

/// Topological pressure of a locally constant potential: log Perron root
/// of M_{ij} = A_{ij} e^{ψ_{ij}}.
pub fn pressure(sys: &MarkovSystem, psi: &[Vec<f64>]) -> Result<f64> {
    let (rho, _, _) = perron(&weighted_matrix(sys, psi)?)?;
    Ok(rho.ln())
}

/// The unique equilibrium state of a locally constant potential, as a
/// Markov measure built from the Perron data of the weighted matrix.
pub fn equilibrium_measure(sys: &MarkovSystem, psi: &[Vec<f64>]) -> Result<MarkovMeasure> {
    let m = sys.size();
    let w = weighted_matrix(sys, psi)?;
    let (rho, u, v) = perron(&w)?;
    let mut p = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            p[i][j] = w[i][j] * u[j] / (rho * u[i]);
        }
        // renormalize away the iteration error so rows sum to 1 exactly
        let s: f64 = p[i].iter().sum();
        for x in &mut p[i] {
            *x /= s;
        }
    }
    let total: f64 = (0..m).map(|i| u[i] * v[i]).sum();
    let pi: Vec<f64> = (0..m).map(|i| u[i] * v[i] / total).collect();
    let mm = MarkovMeasure { p, pi };
    let res = mm.stationarity_residual();
    if res > 1e-12 {
        return Err(Error::NonConvergence(format!(
            "equilibrium stationarity residual {res:.3e}"
        )));
    }
    Ok(mm)
}

/// h_μ(f) / ∫ r dμ.
pub fn abramov(mu: &MarkovMeasure, roof: &[Vec<f64>]) -> Result<f64> {
    let mean = mu.edge_integral(roof);
    if mean <= 0.0 {
        return Err(Error::Validation("roof integral must be positive".into()));
    }
    Ok(markov_entropy(mu) / mean)
}

/// Topological entropy of the suspension flow with roof r: the unique
/// s ≥ 0 with P(−s·r) = 0, by bisection sharpened with Newton steps
/// (P'(s) = −∫r dμ_{−sr} at the equilibrium measure).
pub fn suspension_htop(sys: &MarkovSystem) -> Result<f64> {
    let roof = sys
        .roof
        .as_ref()
        .ok_or_else(|| Error::Validation("suspension entropy needs a roof".into()))?
        .clone();
    suspension_htop_with(sys, &roof)
}

pub fn suspension_htop_with(sys: &MarkovSystem, roof: &[Vec<f64>]) -> Result<f64> {
    let m = sys.size();
    if check_square(roof)? != m {
        return Err(Error::Validation("roof size mismatch".into()));
    }
    for (i, j) in sys.edges() {
        if roof[i][j] <= 0.0 {
            return Err(Error::Validation("roof must be strictly positive on edges".into()));
        }
    }
    let scaled = |s: f64| -> Vec<Vec<f64>> {
        roof.iter()
            .map(|row| row.iter().map(|r| -s * r).collect())
            .collect()
    };
    let p_at = |s: f64| -> Result<f64> { pressure(sys, &scaled(s)) };
    let mut lo = 0.0f64;
    let p0 = p_at(0.0)?;
    if p0 <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0f64;
    while p_at(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonConvergence("no pressure root below s = 1e6".into()));
        }
    }
    // monotonicity spot check on the bracket
    let mid = 0.5 * (lo + hi);
    if !(p_at(mid)? < p0) {
        return Err(Error::Internal("pressure not decreasing in s".into()));
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let p = p_at(s)?;
        if p > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        // Newton step from the equilibrium measure of −s·r
        let mu = equilibrium_measure(sys, &scaled(s))?;
        let slope = -mu.edge_integral(roof);
        let mut next = s - p / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() < 1e-15 * s.max(1.0) {
            return Ok(next);
        }
        s = next;
    }
    Ok(s)
}

/// Flexibility target region at symbolic level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlexRegion {
    /// c_μ < c_top ≤ h: roof inflated away from the measure's cycle.
    I,
    /// c_top ≥ h: roof concentrated near δ off a distinguished edge.
    II,
}

#[derive(Clone, Debug)]
pub struct FlexibilitySolution {
    pub measure: MarkovMeasure,
    /// Roof, normalized to ∫r dμ = 1.
    pub roof: Vec<Vec<f64>>,
    pub achieved: (f64, f64),
    pub residual: f64,
    /// Homotopy parameters (measure tempering β, roof parameter t).
    pub beta: f64,
    pub t: f64,
}

/// A short cycle through state 0, as an edge set (used to concentrate or
/// starve measures and roofs).
fn distinguished_cycle(sys: &MarkovSystem) -> Result<Vec<(usize, usize)>> {
    let m = sys.size();
    // BFS from 0 back to 0
    let mut prev = vec![usize::MAX; m];
    let mut queue = std::collections::VecDeque::new();
    for j in 0..m {
        if sys.adjacency[0][j] == 1 {
            if j == 0 {
                return Ok(vec![(0, 0)]);
            }
            prev[j] = 0;
            queue.push_back(j);
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in 0..m {
            if sys.adjacency[i][j] == 1 {
                if j == 0 {
                    let mut edges = vec![(i, 0)];
                    let mut cur = i;
                    while cur != 0 {
                        edges.push((prev[cur], cur));
                        cur = prev[cur];
                    }
                    edges.reverse();
                    return Ok(edges);
                }
                if prev[j] == usize::MAX {
                    prev[j] = i;
                    queue.push_back(j);
                }
            }
        }
    }
    Err(Error::Degenerate("no cycle through state 0".into()))
}

/// Tempered measure family: equilibrium state of −β·(off-cycle
/// indicator). β = 0 is the Parry measure (entropy h); β → ∞ concentrates
/// on the distinguished cycle (entropy → 0).
fn tempered_measure(sys: &MarkovSystem, cycle: &[(usize, usize)], beta: f64) -> Result<MarkovMeasure> {
    let m = sys.size();
    let mut psi = vec![vec![-beta; m]; m];
    for &(i, j) in cycle {
        psi[i][j] = 0.0;
    }
    equilibrium_measure(sys, &psi)
}

fn bisect(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    iters: usize,
) -> Result<f64> {
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.abs() < 1e-11 {
        return Ok(lo);
    }
    if fhi.abs() < 1e-11 {
        return Ok(hi);
    }
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::NonConvergence(format!(
            "no sign change on bracket [{lo}, {hi}] ({flo:.3e}, {fhi:.3e})"
        )));
    }
    let rising = fhi > 0.0;
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Realize a (base flow entropy, flow topological entropy) target on a
/// one-parameter Markov family and a one-parameter roof homotopy, with
/// roofs normalized to ∫r dμ = 1 (so abramov(μ, r) = h_μ(f)).
pub fn solve_flexibility(
    sys: &MarkovSystem,
    c_mu: f64,
    c_top: f64,
    region: FlexRegion,
) -> Result<FlexibilitySolution> {
    let h = sft_entropy(sys)?;
    if !(c_mu > 0.0 && c_mu < c_top) {
        return Err(Error::Infeasible(format!(
            "need 0 < c_mu < c_top; got ({c_mu}, {c_top})"
        )));
    }
    if c_mu >= h {
        return Err(Error::Infeasible(format!(
            "c_mu = {c_mu} is not below the base entropy h = {h:.12}; achievable interval (0, {h:.12})"
        )));
    }
    match region {
        FlexRegion::I => {
            if c_top > h * (1.0 + 1e-12) {
                return Err(Error::Infeasible(format!(
                    "region I needs c_top ≤ h = {h:.12}; achievable interval ({c_mu}, {h:.12}]"
                )));
            }
        }
        FlexRegion::II => {
            if c_top < h * (1.0 - 1e-12) {
                return Err(Error::Infeasible(format!(
                    "region II needs c_top ≥ h = {h:.12}; achievable interval [{h:.12}, ∞)"
                )));
            }
        }
    }
    let cycle = distinguished_cycle(sys)?;

    // measure with base entropy c_mu
    let mut beta_hi = 1.0;
    while markov_entropy(&tempered_measure(sys, &cycle, beta_hi)?) > c_mu {
        beta_hi *= 2.0;
        if beta_hi > 1e4 {
            return Err(Error::NonConvergence(
                "measure tempering cannot reach the target entropy".into(),
            ));
        }
    }
    let beta = bisect(
        |b| Ok(markov_entropy(&tempered_measure(sys, &cycle, b)?) - c_mu),
        0.0,
        beta_hi,
        80,
    )?;
    let mu = tempered_measure(sys, &cycle, beta)?;

    // roof archetype per region; t = 0 is the constant roof (h_top = h
    // after normalization)
    let m = sys.size();
    let on_cycle = |i: usize, j: usize| cycle.contains(&(i, j));
    let make_roof = |t: f64, conc: f64| -> Vec<Vec<f64>> {
        let mut r = vec![vec![1.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                let weight = match region {
                    // inflate the roof off the measure's cycle: entropy
                    // elsewhere is taxed, pushing h_top down toward c_mu
                    FlexRegion::I => {
                        if on_cycle(i, j) {
                            1.0
                        } else {
                            1.0 + conc
                        }
                    }
                    // shrink the roof toward δ off a distinguished edge:
                    // orbits accumulate entropy per unit time, pushing
                    // h_top up like h/δ
                    FlexRegion::II => {
                        if on_cycle(i, j) {
                            1.0
                        } else {
                            1.0 / (1.0 + conc)
                        }
                    }
                };
                r[i][j] = 1.0 - t + t * weight;
            }
        }
        r
    };
    let normalized_htop = |t: f64, conc: f64| -> Result<f64> {
        let r = make_roof(t, conc);
        let mean = mu.edge_integral(&r);
        let rn: Vec<Vec<f64>> = r.iter().map(|row| row.iter().map(|x| x / mean).collect()).collect();
        suspension_htop_with(sys, &rn)
    };
    // escalate the concentration strength until the target is bracketed
    let mut conc = 4.0;
    let mut bracketed = false;
    for _ in 0..24 {
        let end = normalized_htop(1.0, conc)?;
        let reach = match region {
            FlexRegion::I => end <= c_top,
            FlexRegion::II => end >= c_top,
        };
        if reach {
            bracketed = true;
            break;
        }
        conc *= 2.0;
    }
    if !bracketed {
        let end = normalized_htop(1.0, conc)?;
        let lo = end.min(h);
        let hi = end.max(h);
        return Err(Error::Infeasible(format!(
            "c_top = {c_top} outside the reachable interval [{lo:.12}, {hi:.12}] of this roof family"
        )));
    }
    let t = bisect(|t| Ok(normalized_htop(t, conc)? - c_top), 0.0, 1.0, 80)?;
    let r = make_roof(t, conc);
    let mean = mu.edge_integral(&r);
    let roof: Vec<Vec<f64>> = r.iter().map(|row| row.iter().map(|x| x / mean).collect()).collect();
    let achieved_mu = abramov(&mu, &roof)?;
    let achieved_top = suspension_htop_with(sys, &roof)?;
    let residual = (achieved_mu - c_mu).abs().max((achieved_top - c_top).abs());
    Ok(FlexibilitySolution {
        measure: mu,
        roof,
        achieved: (achieved_mu, achieved_top),
        residual,
        beta,
        t,
    })
}

/// A locally constant function on N-cylinders (state paths of length
/// n_edges), defaulting to `floor` off the listed cylinders.
#[derive(Clone, Debug)]
pub struct CylinderFunction {
    pub n_edges: usize,
    /// (state path of length n_edges + 1, value)
    pub values: Vec<(Vec<usize>, f64)>,
    pub floor: f64,
}

impl CylinderFunction {
    pub fn integral(&self, mu: &MarkovMeasure) -> f64 {
        let mut s = self.floor;
        for (path, v) in &self.values {
            s += (v - self.floor) * mu.path_measure(path);
        }
        s
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .map(|(_, v)| *v)
            .fold(self.floor, f64::min)
    }
}

fn enumerate_paths(sys: &MarkovSystem, n_edges: usize) -> Result<Vec<Vec<usize>>> {
    let m = sys.size();
    let mut paths: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    for _ in 0..n_edges {
        let mut next = Vec::new();
        for p in &paths {
            let last = *p.last().unwrap();
            for j in 0..m {
                if sys.adjacency[last][j] == 1 {
                    let mut q = p.clone();
                    q.push(j);
                    next.push(q);
                }
            }
        }
        paths = next;
        if paths.len() > 5_000_000 {
            return Err(Error::Capability(format!(
                "cylinder enumeration exceeds 5e6 paths at N = {n_edges}"
            )));
        }
    }
    Ok(paths)
}

fn solve3(b: &[[f64; 3]; 3], rhs: &[f64; 3]) -> Result<[f64; 3]> {
    let mut a = *b;
    let mut x = *rhs;
    for k in 0..3 {
        let mut piv = k;
        for i in k + 1..3 {
            if a[i][k].abs() > a[piv][k].abs() {
                piv = i;
            }
        }
        a.swap(k, piv);
        x.swap(k, piv);
        if a[k][k].abs() < 1e-300 {
            return Err(Error::Degenerate("singular cylinder-class matrix".into()));
        }
        for i in k + 1..3 {
            let f = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= f * a[k][j];
            }
            x[i] -= f * x[k];
        }
    }
    let mut out = [0.0; 3];
    for k in (0..3).rev() {
        let mut s = x[k];
        for j in k + 1..3 {
            s -= a[k][j] * out[j];
        }
        out[k] = s / a[k][k];
    }
    Ok(out)
}

/// Build a locally constant q ≥ γ/2 with ∫q dω₁ = ∫q dω₂ = 1 and
/// ∫q dω₃ = γ, by separating the measures with Birkhoff-average cylinder
/// classes and solving the 3×3 class-mass system.
pub fn separating_bump(
    sys: &MarkovSystem,
    omegas: &[MarkovMeasure; 3],
    gamma: f64,
) -> Result<CylinderFunction> {
    if gamma <= 0.0 {
        return Err(Error::Validation(format!(
            "the construction needs γ > 0 (the additive γ/2 floor); got {gamma}"
        )));
    }
    let m = sys.size();
    // degenerate shortcut: identical measures and γ = 1 admit q ≡ 1
    let identical = |a: &MarkovMeasure, b: &MarkovMeasure| -> bool {
        let mut d = 0.0f64;
        for i in 0..m {
            d = d.max((a.pi[i] - b.pi[i]).abs());
            for j in 0..m {
                d = d.max((a.p[i][j] - b.p[i][j]).abs());
            }
        }
        d < 1e-12
    };
    let all_same = identical(&omegas[0], &omegas[1]) && identical(&omegas[1], &omegas[2]);
    if all_same {
        if (gamma - 1.0).abs() < 1e-12 {
            return Ok(CylinderFunction {
                n_edges: 1,
                values: Vec::new(),
                floor: 1.0,
            });
        }
        return Err(Error::Degenerate(
            "identical measures with γ ≠ 1 cannot be separated".into(),
        ));
    }
    if identical(&omegas[0], &omegas[1])
        || identical(&omegas[1], &omegas[2])
        || identical(&omegas[0], &omegas[2])
    {
        return Err(Error::Degenerate(
            "two of the three measures coincide; no cylinder class matrix is invertible".into(),
        ));
    }

    if gamma >= 2.0 {
        return Err(Error::Infeasible(format!(
            "the γ/2 floor with unit integrals forces γ < 2; got {gamma}"
        )));
    }
    // Classify each N-cylinder to the measure assigning it the largest
    // (prior-weighted) mass — a Birkhoff classification by log-likelihood
    // averages. Misclassified mass decays exponentially in N, so the
    // class-mass matrix B_{ki} = ω_k(class i) contracts to the identity.
    // The small-target class (∫q dω₃ = γ/2) tolerates almost no ω₃
    // leakage, so its prior is escalated until the solved masses turn
    // positive; the large-target rows have slack to absorb the cost.
    let targets = [1.0 - gamma / 2.0, 1.0 - gamma / 2.0, gamma / 2.0];
    for n_edges in (2..=20).step_by(2) {
        let paths = enumerate_paths(sys, n_edges)?;
        let weights: Vec<[f64; 3]> = paths
            .iter()
            .map(|p| {
                [
                    omegas[0].path_measure(p),
                    omegas[1].path_measure(p),
                    omegas[2].path_measure(p),
                ]
            })
            .collect();
        for bias_pow in 0..=8 {
            let bias = 10f64.powi(bias_pow);
            let mut class_of: Vec<usize> = Vec::with_capacity(paths.len());
            for w in &weights {
                let scored = [w[0], w[1], w[2] * bias];
                let mut k = 0;
                for i in 1..3 {
                    if scored[i] > scored[k] {
                        k = i;
                    }
                }
                class_of.push(k);
            }
            let mut b = [[0.0f64; 3]; 3];
            for (w, &k) in weights.iter().zip(&class_of) {
                for row in 0..3 {
                    b[row][k] += w[row];
                }
            }
            let Ok(a) = solve3(&b, &targets) else { continue };
            if a.iter().any(|&x| !(x >= 0.0)) {
                continue;
            }
            let floor = gamma / 2.0;
            let mut values = Vec::new();
            for (p, k) in paths.iter().cloned().zip(class_of) {
                values.push((p, a[k] + floor));
            }
            let q = CylinderFunction {
                n_edges,
                values,
                floor,
            };
            // verify the three integrals
            let worst = (q.integral(&omegas[0]) - 1.0)
                .abs()
                .max((q.integral(&omegas[1]) - 1.0).abs())
                .max((q.integral(&omegas[2]) - gamma).abs());
            if worst > 1e-10 {
                return Err(Error::NonConvergence(format!(
                    "separating bump integral residual {worst:.3e}"
                )));
            }
            return Ok(q);
        }
    }
    Err(Error::Capability(
        "cylinder length ceiling reached before the class matrix contracted; \
         measures may be too close"
            .into(),
    ))
}

/// Boundary sweep of a two-parameter roof family built from the constant,
/// concentration, and potential-proportional archetypes. Emits rows
/// (s, t, base-measure flow entropy, flow topological entropy).
pub fn flexibility_sweep(sys: &MarkovSystem, grid: usize) -> Result<Vec<(f64, f64, f64, f64)>> {
    if grid < 2 {
        return Err(Error::Validation("sweep needs a grid of at least 2".into()));
    }
    let m = sys.size();
    let mu = parry_measure(sys)?;
    let cycle = distinguished_cycle(sys)?;
    let mut conc = vec![vec![0.25; m]; m];
    let mut prop = vec![vec![1.0; m]; m];
    for &(i, j) in &cycle {
        conc[i][j] = 1.0;
        prop[i][j] = 2.0;
    }
    let roof_at = |s: f64, t: f64| -> Vec<Vec<f64>> {
        let mut r = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                r[i][j] = (1.0 - s - t).max(0.0) + s * conc[i][j] + t * prop[i][j];
                r[i][j] = r[i][j].max(1e-6);
            }
        }
        r
    };
    let mut rows = Vec::new();
    // walk the boundary of the (s,t) unit square
    let mut points = Vec::new();
    for k in 0..grid {
        let u = k as f64 / (grid - 1) as f64;
        points.push((u, 0.0));
        points.push((1.0, u));
        points.push((1.0 - u, 1.0));
        points.push((0.0, 1.0 - u));
    }
    for (s, t) in points {
        let r = roof_at(s, t);
        let h_mu = abramov(&mu, &r)?;
        let h_top = suspension_htop_with(sys, &r)?;
        rows.push((s, t, h_mu, h_top));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2() -> MarkovSystem {
        MarkovSystem::new(vec![vec![1, 1], vec![1, 1]]).unwrap()
    }

    fn golden() -> MarkovSystem {
        MarkovSystem::new(vec![vec![1, 1], vec![1, 0]]).unwrap()
    }

    const PHI: f64 = 1.618033988749894848;

    #[test]
    fn entropy_of_standard_shifts() {
        assert!((sft_entropy(&full2()).unwrap() - 2.0f64.ln()).abs() < 1e-13);
        assert!((sft_entropy(&golden()).unwrap() - PHI.ln()).abs() < 1e-13);
        // coding of the cat-map-like matrix [[2,1],[1,1]]: 5-state edge
        // presentation with spectral radius (3+√5)/2
        let a = vec![
            vec![1, 1, 1, 0, 0],
            vec![0, 0, 0, 1, 1],
            vec![1, 1, 1, 0, 0],
            vec![1, 1, 1, 0, 0],
            vec![0, 0, 0, 1, 1],
        ];
        let sys = MarkovSystem::new(a).unwrap();
        let expect = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        assert!((sft_entropy(&sys).unwrap() - expect).abs() < 1e-12);
        // reducible matrix rejected
        assert!(MarkovSystem::new(vec![vec![1, 0], vec![0, 1]]).is_err());
        // periodic (irreducible but not aperiodic) rejected
        assert!(MarkovSystem::new(vec![vec![0, 1], vec![1, 0]]).is_err());
    }

    #[test]
    fn markov_entropy_examples() {
        let b = MarkovMeasure::from_transition(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((markov_entropy(&b) - 2.0f64.ln()).abs() < 1e-14);
        let b9 = MarkovMeasure::from_transition(vec![vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        let expect = 0.9 * (1.0 / 0.9f64).ln() + 0.1 * (1.0 / 0.1f64).ln();
        assert!((markov_entropy(&b9) - expect).abs() < 1e-14);
    }

    #[test]
    fn parry_achieves_topological_entropy() {
        for sys in [full2(), golden()] {
            let mu = parry_measure(&sys).unwrap();
            assert!(mu.stationarity_residual() < 1e-14);
            assert!((markov_entropy(&mu) - sft_entropy(&sys).unwrap()).abs() < 1e-12);
        }
        // golden-mean Parry rows from the Perron vector (φ, 1)
        let mu = parry_measure(&golden()).unwrap();
        assert!((mu.p[0][0] - 1.0 / PHI).abs() < 1e-12);
        assert!((mu.p[0][1] - 1.0 / (PHI * PHI)).abs() < 1e-12);
        assert!((mu.p[1][0] - 1.0).abs() < 1e-12);
        // full shift → uniform Bernoulli
        let mu = parry_measure(&full2()).unwrap();
        assert!((mu.p[0][0] - 0.5).abs() < 1e-13 && (mu.pi[0] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn pressure_and_equilibrium() {
        let sys = golden();
        let h = sft_entropy(&sys).unwrap();
        let zero = vec![vec![0.0; 2]; 2];
        assert!((pressure(&sys, &zero).unwrap() - h).abs() < 1e-13);
        let c = vec![vec![0.7; 2]; 2];
        assert!((pressure(&sys, &c).unwrap() - (h + 0.7)).abs() < 1e-13);
        // normalized Bernoulli potential on the full shift
        let psi = vec![
            vec![0.9f64.ln(), 0.1f64.ln()],
            vec![0.9f64.ln(), 0.1f64.ln()],
        ];
        let f2 = full2();
        assert!(pressure(&f2, &psi).unwrap().abs() < 1e-13);
        let mu = equilibrium_measure(&f2, &psi).unwrap();
        assert!((mu.p[0][0] - 0.9).abs() < 1e-12);

        // variational principle against random measures
        let psi2 = vec![vec![0.4, -0.3], vec![0.2, 0.0]];
        let p = pressure(&sys, &psi2).unwrap();
        let eq = equilibrium_measure(&sys, &psi2).unwrap();
        let attained = markov_entropy(&eq) + eq.edge_integral(&psi2);
        assert!((p - attained).abs() < 1e-10);
        let mut state = 7u64;
        let mut rnd = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..100 {
            let a = 0.02 + 0.96 * rnd();
            let mu = MarkovMeasure::from_transition(vec![vec![a, 1.0 - a], vec![1.0, 0.0]]).unwrap();
            let val = markov_entropy(&mu) + mu.edge_integral(&psi2);
            assert!(val <= p + 1e-10);
        }
    }

    #[test]
    fn suspension_and_abramov() {
        let sys = golden();
        let h = sft_entropy(&sys).unwrap();
        let s1 = suspension_htop_with(&sys, &sys.constant_roof(1.0)).unwrap();
        assert!((s1 - h).abs() < 1e-13);
        let s3 = suspension_htop_with(&sys, &sys.constant_roof(3.0)).unwrap();
        assert!((s3 - h / 3.0).abs() < 1e-13);

        let roof = vec![vec![1.0, 2.0], vec![0.5, 1.0]];
        let s = suspension_htop_with(&sys, &roof).unwrap();
        // Abramov consistency: the equilibrium of −s*·r is the flow MME
        let psi: Vec<Vec<f64>> = roof.iter().map(|r| r.iter().map(|x| -s * x).collect()).collect();
        let mme = equilibrium_measure(&sys, &psi).unwrap();
        assert!((abramov(&mme, &roof).unwrap() - s).abs() < 1e-10);
        // r ≡ 1 → Abramov is the identity on base entropy
        let mu = parry_measure(&sys).unwrap();
        assert!((abramov(&mu, &sys.constant_roof(1.0)).unwrap() - markov_entropy(&mu)).abs() < 1e-13);
        assert!(
            (abramov(&mu, &sys.constant_roof(2.0)).unwrap() - markov_entropy(&mu) / 2.0).abs()
                < 1e-13
        );

        // variational principle over random measures and roofs
        let mut state = 99u64;
        let mut rnd = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..200 {
            let a = 0.02 + 0.96 * rnd();
            let mu = MarkovMeasure::from_transition(vec![vec![a, 1.0 - a], vec![1.0, 0.0]]).unwrap();
            let roof = vec![
                vec![0.2 + 2.0 * rnd(), 0.2 + 2.0 * rnd()],
                vec![0.2 + 2.0 * rnd(), 1.0],
            ];
            let top = suspension_htop_with(&sys, &roof).unwrap();
            assert!(abramov(&mu, &roof).unwrap() <= top + 1e-10);
        }
    }

    #[test]
    fn pressure_in_s_is_decreasing_and_convex() {
        let sys = golden();
        let roof = vec![vec![1.0, 2.0], vec![0.5, 1.0]];
        let p = |s: f64| {
            let psi: Vec<Vec<f64>> =
                roof.iter().map(|r| r.iter().map(|x| -s * x).collect()).collect();
            pressure(&sys, &psi).unwrap()
        };
        let grid: Vec<f64> = (0..40).map(|k| 0.05 * k as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&s| p(s)).collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0]);
        }
        for w in vals.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] > -1e-12);
        }
    }

    #[test]
    fn flexibility_targets() {
        let sys = golden();
        let h = sft_entropy(&sys).unwrap();

        // boundary case: c_top = h is the constant roof
        let sol = solve_flexibility(&sys, 0.3, h, FlexRegion::II).unwrap();
        assert!(sol.residual < 1e-6, "residual {:.3e}", sol.residual);
        assert!(sol.t.abs() < 1e-6 || (sol.achieved.1 - h).abs() < 1e-6);

        // region II: c_top = 3h
        let sol = solve_flexibility(&sys, 0.2, 3.0 * h, FlexRegion::II).unwrap();
        assert!(sol.residual < 1e-6, "residual {:.3e}", sol.residual);

        // region I: c_top strictly inside (c_mu, h)
        let sol = solve_flexibility(&sys, 0.15, 0.35, FlexRegion::I).unwrap();
        assert!(sol.residual < 1e-6, "residual {:.3e}", sol.residual);

        // infeasible: c_mu above base entropy
        assert!(matches!(
            solve_flexibility(&sys, h + 0.1, h + 0.2, FlexRegion::II),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            solve_flexibility(&sys, 0.4, 0.3, FlexRegion::I),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn roof_homotopy_is_continuous() {
        let sys = golden();
        let mu = parry_measure(&sys).unwrap();
        let bump = vec![vec![1.0, 0.2], vec![0.2, 1.0]];
        let mut prev: Option<(f64, f64)> = None; // (htop, sup-norm position)
        let mut max_modulus = 0.0f64;
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            let r: Vec<Vec<f64>> = (0..2)
                .map(|i| (0..2).map(|j| 1.0 - t + t * bump[i][j]).collect())
                .collect();
            let _ = mu; // measure fixed; only the roof moves
            let htop = suspension_htop_with(&sys, &r).unwrap();
            if let Some((h0, t0)) = prev {
                let dsup = (t - t0) * 0.8; // sup-difference of successive roofs
                max_modulus = max_modulus.max((htop - h0).abs() / dsup);
            }
            prev = Some((htop, t));
        }
        // empirical modulus stays bounded: no jumps along the homotopy
        assert!(max_modulus < 10.0, "empirical modulus {max_modulus}");
    }

    #[test]
    fn separating_bump_cases() {
        let sys = full2();
        let w1 = MarkovMeasure::from_transition(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let w2 = MarkovMeasure::from_transition(vec![vec![0.8, 0.2], vec![0.8, 0.2]]).unwrap();
        let w3 = MarkovMeasure::from_transition(vec![vec![0.95, 0.05], vec![0.6, 0.4]]).unwrap();
        let gamma = 0.1;
        let q = separating_bump(&sys, &[w1.clone(), w2.clone(), w3.clone()], gamma).unwrap();
        assert!((q.integral(&w1) - 1.0).abs() < 1e-10);
        assert!((q.integral(&w2) - 1.0).abs() < 1e-10);
        assert!((q.integral(&w3) - gamma).abs() < 1e-10);
        assert!(q.min_value() >= gamma / 2.0 - 1e-14);

        // identical measures, γ = 1 → the constant shortcut
        let q1 = separating_bump(&sys, &[w1.clone(), w1.clone(), w1.clone()], 1.0).unwrap();
        assert!((q1.integral(&w1) - 1.0).abs() < 1e-14);
        assert!(q1.values.is_empty() && (q1.floor - 1.0).abs() < 1e-14);

        // γ = 0 rejected
        assert!(matches!(
            separating_bump(&sys, &[w1.clone(), w2, w3], 0.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn sweep_emits_boundary_rows() {
        let rows = flexibility_sweep(&golden(), 6).unwrap();
        assert_eq!(rows.len(), 24);
        for (_, _, h_mu, h_top) in &rows {
            assert!(*h_mu > 0.0 && *h_top > 0.0);
            assert!(h_mu <= &(h_top + 1e-10));
        }
    }
}
