//! Horseshoe orbit families and asymptotic fits.
//!
//! For a reference periodic word w_O and a connector w_c, the orbits h_n
//! coded by w_O^{n+1} w_c shadow a homoclinic excursion and satisfy, as
//! n → ∞,
//!
//!   ℓ_n        = n L⁽⁰⁾ + L⁽¹⁾ + O(λⁿ)               (flow periods)
//!   2cosh 𝔗_n  = C₀ λ⁻ⁿ + n C₁a₁ + O(1)              (total expansion)
//!   λⁿ·2cosh 𝔗_n = Σ_{q≤p} L_{q,p} nᑫ λⁿᵖ            (full series)
//!
//! where 𝔗_n is the total log-multiplier of h_n and λ the contracting
//! multiplier of the reference orbit. The fits below recover these
//! constants from extended-precision orbit solves, and the rigidity
//! report turns exponent dispersion and the first Birkhoff invariant into
//! an equality-of-measures verdict.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::BilliardTable;
use crate::normalform::{extract_birkhoff, return_map_jet_symplectic};
use crate::orbits::{find_periodic_orbit, orbit_flow_exponent, solve_dense};
use crate::real::Real;
use crate::symbolic::{horseshoe_word, SymbolicWord};

/// One member h_n of the horseshoe family.
#[derive(Clone, Debug)]
pub struct FamilyRow {
    pub n: usize,
    pub map_period: usize,
    /// Per-collision Lyapunov exponent of h_n.
    pub le: Real,
    /// Flow period ℓ_n.
    pub flow_period: Real,
    /// Total log-multiplier 𝔗_n = map_period · le.
    pub total_log: Real,
    /// Stationarity residual of the orbit solve.
    pub residual: Real,
}

#[derive(Clone, Debug)]
pub struct HorseshoeFamily {
    pub w_o: SymbolicWord,
    pub w_c: SymbolicWord,
    pub rows: Vec<FamilyRow>,
    /// |contracting multiplier| of the reference orbit w_O.
    pub lambda: Real,
    /// Per-collision Lyapunov exponent of the reference orbit.
    pub le_ref: Real,
    /// Flow period of the reference orbit (the expected L⁽⁰⁾).
    pub l0_ref: Real,
    /// Noise floor: max orbit residual, floored by the working precision.
    pub residual_floor: Real,
}

/// One fitted model: named coefficients with uncertainty estimates,
/// per-n residuals, and the tail decay ratio of those residuals (which
/// should track λ when the model captures everything above the tail).
#[derive(Clone, Debug)]
pub struct FitReport {
    pub model: String,
    /// (name, value, uncertainty)
    pub coefficients: Vec<(String, Real, Real)>,
    pub residuals: Vec<(usize, Real)>,
    pub residual_ratio: Option<Real>,
    /// Largest |residual| over the rows used.
    pub residual_floor: Real,
    pub n_used: Vec<usize>,
}

impl FitReport {
    pub fn coefficient(&self, name: &str) -> Option<&(String, Real, Real)> {
        self.coefficients.iter().find(|(n, _, _)| n == name)
    }
}

/// Solve the horseshoe family h_0..h_{n_max}.
pub fn horseshoe_family(
    table: &BilliardTable,
    w_o: &SymbolicWord,
    w_c: &SymbolicWord,
    n_max: usize,
    prec: u32,
) -> Result<HorseshoeFamily> {
    let reference = find_periodic_orbit(table, w_o, prec)?;
    let lambda = reference.lambda.abs();
    // precision ceiling: λ^{n_max} must stay well above the rounding floor
    let bits_per_n = -lambda.ln().to_f64() / std::f64::consts::LN_2;
    let ceiling = ((prec as f64 - 40.0) / bits_per_n).floor() as usize;
    if n_max > ceiling {
        return Err(Error::Validation(format!(
            "n_max {n_max} exceeds the precision-supported ceiling {ceiling} \
             at {prec} bits (λ ≈ {:.3e})",
            lambda.to_f64()
        )));
    }
    let mut rows: Vec<FamilyRow> = (0..=n_max)
        .into_par_iter()
        .map(|n| -> Result<FamilyRow> {
            let word = horseshoe_word(w_o, w_c, n)?;
            let orbit = find_periodic_orbit(table, &word, prec).map_err(|e| {
                Error::NonConvergence(format!("horseshoe member n={n}: {e}"))
            })?;
            let p = word.len();
            Ok(FamilyRow {
                n,
                map_period: p,
                total_log: orbit.le.mul_i64(p as i64),
                le: orbit.le,
                flow_period: orbit.flow_period,
                residual: orbit.grad_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    let mut floor = Real::one(prec).mul_pow2(30 - prec as i64);
    for r in &rows {
        floor = Real::max(&floor, &r.residual);
        if !r.le.is_positive() {
            return Err(Error::Degenerate(format!("non-hyperbolic member n={}", r.n)));
        }
    }
    for w in rows.windows(2) {
        if w[1].flow_period <= w[0].flow_period {
            return Err(Error::Degenerate(format!(
                "flow periods not increasing at n={}",
                w[1].n
            )));
        }
    }
    Ok(HorseshoeFamily {
        w_o: w_o.clone(),
        w_c: w_c.clone(),
        lambda,
        le_ref: reference.le,
        l0_ref: reference.flow_period,
        rows,
        residual_floor: floor,
    })
}

/// Geometric mean of consecutive residual ratios over rows whose residual
/// clears the noise floor.
fn decay_ratio(residuals: &[(usize, Real)], floor: &Real) -> Option<Real> {
    let prec = floor.prec();
    let threshold = floor.mul_i64(10);
    let mut logs = Vec::new();
    for w in residuals.windows(2) {
        let (n0, r0) = &w[0];
        let (n1, r1) = &w[1];
        if *n1 == n0 + 1 && r0.abs() > threshold && r1.abs() > threshold {
            logs.push((&r1.abs() / &r0.abs()).ln());
        }
    }
    if logs.len() < 2 {
        return None;
    }
    let mut sum = Real::zero(prec);
    for l in &logs {
        sum += l;
    }
    Some(sum.div_i64(logs.len() as i64).exp())
}

/// Generic least squares by normal equations in extended precision.
/// Returns (coefficients, per-row residuals, 1σ uncertainty estimates).
fn least_squares(design: &[Vec<Real>], y: &[Real]) -> Result<(Vec<Real>, Vec<Real>, Vec<Real>)> {
    let m = design.len();
    let k = design[0].len();
    if m < k {
        return Err(Error::Validation(format!("{m} rows cannot determine {k} coefficients")));
    }
    let prec = y[0].prec();
    let mut ata = vec![vec![Real::zero(prec); k]; k];
    let mut atb = vec![Real::zero(prec); k];
    for (row, yi) in design.iter().zip(y) {
        for i in 0..k {
            for j in i..k {
                ata[i][j] += &(&row[i] * &row[j]);
            }
            atb[i] += &(&row[i] * yi);
        }
    }
    for i in 0..k {
        for j in 0..i {
            ata[i][j] = ata[j][i].clone();
        }
    }
    let coeffs = solve_dense(ata.clone(), atb)?;
    let mut residuals = Vec::with_capacity(m);
    let mut ss = Real::zero(prec);
    for (row, yi) in design.iter().zip(y) {
        let mut pred = Real::zero(prec);
        for i in 0..k {
            pred += &(&row[i] * &coeffs[i]);
        }
        let r = yi - &pred;
        ss += &(&r * &r);
        residuals.push(r);
    }
    let dof = (m - k).max(1) as i64;
    let s2 = ss.div_i64(dof);
    let mut unc = Vec::with_capacity(k);
    for i in 0..k {
        let mut e = vec![Real::zero(prec); k];
        e[i] = Real::one(prec);
        let col = solve_dense(ata.clone(), e)?;
        let v = &s2 * &col[i];
        unc.push(if v.is_positive() { v.sqrt() } else { Real::zero(prec) });
    }
    Ok((coeffs, residuals, unc))
}

/// Fit ℓ_n = n L⁽⁰⁾ + L⁽¹⁾ + O(λⁿ). The constants are taken as the tail
/// limit (anchored at the two deepest rows, where the geometric tail is
/// negligible); the remaining rows then exhibit the O(λⁿ) decay.
pub fn fit_period_expansion(family: &HorseshoeFamily) -> Result<FitReport> {
    let rows = &family.rows;
    if rows.len() < 8 {
        return Err(Error::Validation(format!(
            "period fit needs at least 8 rows, got {}",
            rows.len()
        )));
    }
    let prec = family.lambda.prec();
    let m = rows.len();
    let last = &rows[m - 1];
    let prev = &rows[m - 2];
    let dn = (last.n - prev.n) as i64;
    let l0 = (&last.flow_period - &prev.flow_period).div_i64(dn);
    let l1 = &last.flow_period - &l0.mul_i64(last.n as i64);
    let residuals: Vec<(usize, Real)> = rows
        .iter()
        .map(|r| {
            (
                r.n,
                &r.flow_period - &(&l0.mul_i64(r.n as i64) + &l1),
            )
        })
        .collect();
    let ratio = decay_ratio(&residuals, &family.residual_floor);
    if let Some(q) = &ratio {
        let lo = family.lambda.div_i64(10);
        let hi = family.lambda.mul_i64(10);
        if *q < lo || *q > hi {
            return Err(Error::NonConvergence(format!(
                "period residuals decay at ratio {:.3e}, not geometric in λ ≈ {:.3e}",
                q.to_f64(),
                family.lambda.to_f64()
            )));
        }
    }
    // uncertainty: scale of the first neglected tail term
    let unc = residuals
        .iter()
        .rev()
        .map(|(_, r)| r.abs())
        .find(|r| *r > family.residual_floor.mul_i64(10))
        .unwrap_or_else(|| family.residual_floor.clone());
    let floor = residuals
        .iter()
        .fold(Real::zero(prec), |acc, (_, r)| Real::max(&acc, &r.abs()));
    Ok(FitReport {
        model: "period: l_n = n*L0 + L1".into(),
        coefficients: vec![
            ("L0".into(), l0, unc.clone()),
            ("L1".into(), l1, unc.mul_i64(rows[m - 1].n as i64)),
        ],
        residuals,
        residual_ratio: ratio,
        residual_floor: floor,
        n_used: rows.iter().map(|r| r.n).collect(),
    })
}

fn row_cosh(r: &FamilyRow) -> Real {
    r.total_log.cosh().mul_pow2(1)
}

/// Fit 2cosh 𝔗_n = C₀λ⁻ⁿ + Bn + C (B = C₁a₁) by weighted least squares
/// (each row scaled by λⁿ so the design stays O(1)).
pub fn fit_trace_expansion(family: &HorseshoeFamily, lambda: &Real) -> Result<FitReport> {
    let rows = &family.rows;
    if rows.len() < 10 {
        return Err(Error::Validation(format!(
            "trace fit needs at least 10 rows, got {}",
            rows.len()
        )));
    }
    if lambda.to_f64() > 0.5 {
        return Err(Error::Validation(format!(
            "λ ≈ {:.3} too close to 1: the λ⁻ⁿ column is not separable from the drift terms",
            lambda.to_f64()
        )));
    }
    let prec = lambda.prec();
    let mut design = Vec::new();
    let mut y = Vec::new();
    let mut lam_n = Real::one(prec);
    let mut expect = 0usize;
    for r in rows {
        while expect < r.n {
            lam_n = &lam_n * lambda;
            expect += 1;
        }
        let nn = Real::from_i64(r.n as i64, prec);
        design.push(vec![Real::one(prec), &nn * &lam_n, lam_n.clone()]);
        y.push(&row_cosh(r) * &lam_n);
    }
    let (c, res, unc) = least_squares(&design, &y)?;
    let residuals: Vec<(usize, Real)> = rows.iter().map(|r| r.n).zip(res).collect();
    let floor = residuals
        .iter()
        .fold(Real::zero(prec), |acc, (_, r)| Real::max(&acc, &r.abs()));
    let ratio = decay_ratio(&residuals, &family.residual_floor);
    Ok(FitReport {
        model: "trace: 2cosh(T_n) = C0*lambda^-n + B*n + C".into(),
        coefficients: vec![
            ("C0".into(), c[0].clone(), unc[0].clone()),
            ("B".into(), c[1].clone(), unc[1].clone()),
            ("C".into(), c[2].clone(), unc[2].clone()),
        ],
        residuals,
        residual_ratio: ratio,
        residual_floor: floor,
        n_used: rows.iter().map(|r| r.n).collect(),
    })
}

/// Fit the full triangular series λⁿ·2cosh 𝔗_n = Σ_{q≤p≤P} L_{q,p} nᑫ λⁿᵖ.
/// Rows whose λⁿᴾ signal would drown in the orbit-solver noise are
/// dropped automatically.
pub fn fit_series(family: &HorseshoeFamily, lambda: &Real, p_max: usize) -> Result<FitReport> {
    let prec = lambda.prec();
    let ncoef = (p_max + 1) * (p_max + 2) / 2;
    // keep rows with λ^{nP} above 10× the solver floor
    let mut usable = Vec::new();
    for r in &family.rows {
        let sig = lambda.powi((r.n * p_max) as i64);
        if p_max == 0 || sig > family.residual_floor.mul_i64(10) {
            usable.push(r);
        }
    }
    if usable.len() < ncoef + 5 {
        return Err(Error::Validation(format!(
            "series fit with P={p_max} needs {} usable rows, got {} \
             (precision starvation: raise the precision or lower P)",
            ncoef + 5,
            usable.len()
        )));
    }
    let mut names = Vec::new();
    let mut design = Vec::new();
    let mut y = Vec::new();
    for p in 0..=p_max {
        for q in 0..=p {
            names.push(format!("L[{q},{p}]"));
        }
    }
    for r in &usable {
        let lam_n = lambda.powi(r.n as i64);
        let nn = Real::from_i64(r.n as i64, prec);
        let mut row = Vec::with_capacity(ncoef);
        for p in 0..=p_max {
            let lp = lam_n.powi(p as i64);
            let mut nq = Real::one(prec);
            for q in 0..=p {
                row.push(&nq * &lp);
                if q < p {
                    nq = &nq * &nn;
                }
            }
        }
        design.push(row);
        y.push(&row_cosh(r) * &lam_n);
    }
    let (c, res, unc) = least_squares(&design, &y)?;
    let residuals: Vec<(usize, Real)> = usable.iter().map(|r| r.n).zip(res).collect();
    let floor = residuals
        .iter()
        .fold(Real::zero(prec), |acc, (_, r)| Real::max(&acc, &r.abs()));
    let ratio = decay_ratio(&residuals, &family.residual_floor);
    Ok(FitReport {
        model: format!("series: lambda^n*2cosh(T_n) = sum L[q,p] n^q lambda^(n p), p <= {p_max}"),
        coefficients: names
            .into_iter()
            .zip(c.into_iter().zip(unc))
            .map(|(n, (v, u))| (n, v, u))
            .collect(),
        residuals,
        residual_ratio: ratio,
        residual_floor: floor,
        n_used: usable.iter().map(|r| r.n).collect(),
    })
}

/// Per-orbit diagnostic entering the rigidity report.
#[derive(Clone, Debug)]
pub struct OrbitDiagnostic {
    pub word: String,
    /// Flow Lyapunov exponent log J^u / ℓ.
    pub flow_exponent: Real,
    pub flow_period: Real,
    /// Total unstable log-Jacobian log J^u over one period.
    pub log_ju: Real,
    /// First Birkhoff invariant of the return map.
    pub a1: Real,
    pub a1_uncertainty: Real,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Some obstruction to MME = SRB fired.
    Obstructed,
    /// Every tested obstruction vanished (no claim beyond tested order).
    NoObstructionFound,
    /// Not enough data to decide.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Obstructed => write!(f, "MME=SRB obstructed"),
            Verdict::NoObstructionFound => write!(f, "no obstruction found at tested order"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RigidityReport {
    pub orbits: Vec<OrbitDiagnostic>,
    /// max − min of the flow exponents.
    pub dispersion: Real,
    /// Reference entropy candidate: ensemble mean flow exponent.
    pub h_ref: Real,
    /// Per-orbit periodic Livšic defect log J^u − h_ref·ℓ.
    pub cohomology_defects: Vec<Real>,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
}

/// Tolerance below which exponent dispersion is treated as zero.
const DISPERSION_TOL: f64 = 1e-20;

/// Assemble the verdict from per-orbit diagnostics. Exposed separately so
/// synthetic ensembles can be scored by the same rules.
pub fn assemble_rigidity_report(orbits: Vec<OrbitDiagnostic>) -> Result<RigidityReport> {
    if orbits.len() < 2 {
        let prec = orbits.first().map(|o| o.flow_exponent.prec()).unwrap_or(64);
        return Ok(RigidityReport {
            h_ref: orbits
                .first()
                .map(|o| o.flow_exponent.clone())
                .unwrap_or_else(|| Real::zero(prec)),
            cohomology_defects: vec![Real::zero(prec); orbits.len()],
            orbits,
            dispersion: Real::zero(prec),
            verdict: Verdict::Inconclusive,
            reasons: vec!["fewer than two orbits: dispersion test vacuous".into()],
        });
    }
    let prec = orbits[0].flow_exponent.prec();
    let mut lo = orbits[0].flow_exponent.clone();
    let mut hi = orbits[0].flow_exponent.clone();
    let mut sum = Real::zero(prec);
    for o in &orbits {
        lo = Real::min(&lo, &o.flow_exponent);
        hi = Real::max(&hi, &o.flow_exponent);
        sum += &o.flow_exponent;
    }
    let dispersion = &hi - &lo;
    let h_ref = sum.div_i64(orbits.len() as i64);
    let cohomology_defects: Vec<Real> = orbits
        .iter()
        .map(|o| &o.log_ju - &(&h_ref * &o.flow_period))
        .collect();
    let mut reasons = Vec::new();
    if dispersion.to_f64() > DISPERSION_TOL {
        reasons.push(format!(
            "flow-exponent dispersion {:.6e} > {DISPERSION_TOL:.0e}: \
             periodic data violate LE(orbit) = h for a common h",
            dispersion.to_f64()
        ));
    }
    for o in &orbits {
        if o.a1.abs() > o.a1_uncertainty {
            reasons.push(format!(
                "first Birkhoff invariant of \"{}\" is {:.6e} ± {:.1e} ≠ 0",
                o.word,
                o.a1.to_f64(),
                o.a1_uncertainty.to_f64()
            ));
        }
    }
    let verdict = if reasons.is_empty() {
        Verdict::NoObstructionFound
    } else {
        Verdict::Obstructed
    };
    Ok(RigidityReport {
        orbits,
        dispersion,
        h_ref,
        cohomology_defects,
        verdict,
        reasons,
    })
}

/// Compute the rigidity diagnostics for an ensemble of periodic words.
pub fn rigidity_report(
    table: &BilliardTable,
    words: &[SymbolicWord],
    prec: u32,
) -> Result<RigidityReport> {
    if words.len() < 2 {
        return Err(Error::Validation(
            "rigidity report needs at least two orbit words".into(),
        ));
    }
    let orbits: Vec<OrbitDiagnostic> = words
        .par_iter()
        .map(|word| -> Result<OrbitDiagnostic> {
            let orbit = find_periodic_orbit(table, word, prec)?;
            let jet = return_map_jet_symplectic(table, &orbit, 0, 5)?;
            let nf = extract_birkhoff(&jet, 1)?;
            let unc = Real::max(
                &nf.residual.mul_i64(100),
                &Real::one(prec).mul_pow2(60 - prec as i64),
            );
            Ok(OrbitDiagnostic {
                word: format!("{word}"),
                flow_exponent: orbit_flow_exponent(&orbit),
                log_ju: orbit.le.mul_i64(orbit.word.len() as i64),
                flow_period: orbit.flow_period,
                a1: nf.a[0].clone(),
                a1_uncertainty: unc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_rigidity_report(orbits)
}

/// Synthetic family realizing the rigid pattern exactly: total
/// log-multiplier 𝔗_n = (n+2)(−ln λ) and affine flow periods. Its series
/// fit is exactly L₀₀ = λ⁻², L₀₂ = λ².
pub fn synthetic_rigid_family(
    lambda: &Real,
    l0: &Real,
    l1: &Real,
    rho: usize,
    conn: usize,
    n_max: usize,
) -> HorseshoeFamily {
    let prec = lambda.prec();
    let neg_ln = -&lambda.ln();
    let rows = (0..=n_max)
        .map(|n| {
            let p = (n + 1) * rho + conn;
            let total = neg_ln.mul_i64(n as i64 + 2);
            FamilyRow {
                n,
                map_period: p,
                le: total.div_i64(p as i64),
                flow_period: &l0.mul_i64(n as i64) + l1,
                total_log: total,
                residual: Real::zero(prec),
            }
        })
        .collect();
    HorseshoeFamily {
        w_o: SymbolicWord::parse("12", true).unwrap(),
        w_c: SymbolicWord::parse("13", true).unwrap(),
        rows,
        lambda: lambda.clone(),
        le_ref: neg_ln.div_i64(rho as i64),
        l0_ref: l0.clone(),
        residual_floor: Real::one(prec).mul_pow2(40 - prec as i64),
    }
}

/// Synthetic family with uniform flow exponent h: 𝔗_n = h·ℓ_n with
/// ℓ_n = n L⁽⁰⁾ + L⁽¹⁾. Its trace fit against λ_f = e^{−h L⁽⁰⁾} has
/// C₀ = e^{h L⁽¹⁾} and no drift term.
pub fn synthetic_uniform_family(
    h: &Real,
    l0: &Real,
    l1: &Real,
    rho: usize,
    conn: usize,
    n_max: usize,
) -> HorseshoeFamily {
    let prec = h.prec();
    let lambda = (-&(h * l0)).exp();
    let rows = (0..=n_max)
        .map(|n| {
            let p = (n + 1) * rho + conn;
            let ell = &l0.mul_i64(n as i64) + l1;
            let total = h * &ell;
            FamilyRow {
                n,
                map_period: p,
                le: total.div_i64(p as i64),
                flow_period: ell,
                total_log: total,
                residual: Real::zero(prec),
            }
        })
        .collect();
    HorseshoeFamily {
        w_o: SymbolicWord::parse("12", true).unwrap(),
        w_c: SymbolicWord::parse("13", true).unwrap(),
        rows,
        lambda,
        le_ref: h * l0,
        l0_ref: l0.clone(),
        residual_floor: Real::one(prec).mul_pow2(40 - prec as i64),
    }
}
