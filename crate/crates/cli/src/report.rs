//! Shared formatting, serialization, and config-loading helpers.

use entroflex_core::asymptotics::{FamilyRow, FitReport, HorseshoeFamily, RigidityReport};
use entroflex_core::error::{Error as CoreError, Result as CoreResult};
use entroflex_core::real::Real;
use entroflex_core::suspension::MarkovSystem;
use serde::Deserialize;
use serde_json::json;
use std::path::Path;

/// Decimal rendering of an extended-precision value (never below 30
/// significant digits).
pub fn dec(r: &Real) -> String {
    r.to_decimal(crate::REPORT_DIGITS)
}

/// Map errors to the documented exit codes: 2 validation, 3 numerical
/// non-convergence, 4 infeasible target.
pub fn exit_code_of(e: &CoreError) -> u8 {
    match e {
        CoreError::Validation(_) | CoreError::Capability(_) => 2,
        CoreError::Infeasible(_) => 4,
        _ => 3,
    }
}

pub fn write_file(path: &Path, content: &str) -> CoreResult<()> {
    std::fs::write(path, content)
        .map_err(|e| CoreError::Validation(format!("cannot write {}: {e}", path.display())))
}

/// Symbolic system file: adjacency matrix with optional roof/potential.
#[derive(Debug, Deserialize)]
pub struct SuspensionConfig {
    pub schema: u32,
    pub adjacency: Vec<Vec<u8>>,
    #[serde(default)]
    pub roof: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub potential: Option<Vec<Vec<f64>>>,
}

impl SuspensionConfig {
    pub fn load(path: &Path) -> CoreResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CoreError::Validation(format!("cannot read system file {}: {e}", path.display()))
        })?;
        let cfg: SuspensionConfig = toml::from_str(&text)
            .map_err(|e| CoreError::Validation(format!("system file parse error: {e}")))?;
        if cfg.schema != 1 {
            return Err(CoreError::Validation(format!(
                "unsupported system schema version {}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn build(&self) -> CoreResult<MarkovSystem> {
        let mut sys = MarkovSystem::new(self.adjacency.clone())?;
        if let Some(r) = &self.roof {
            sys = sys.with_roof(r.clone())?;
        }
        if let Some(p) = &self.potential {
            sys = sys.with_potential(p.clone())?;
        }
        Ok(sys)
    }
}

pub fn row_to_json(r: &FamilyRow) -> serde_json::Value {
    json!({
        "n": r.n,
        "map_period": r.map_period,
        "le": dec(&r.le),
        "flow_period": dec(&r.flow_period),
        "total_log": dec(&r.total_log),
        "residual": dec(&r.residual),
    })
}

pub fn fit_to_json(rep: &FitReport) -> serde_json::Value {
    json!({
        "model": rep.model,
        "coefficients": rep.coefficients.iter().map(|(n, v, u)| {
            json!({ "name": n, "value": dec(v), "uncertainty": dec(u) })
        }).collect::<Vec<_>>(),
        "residual_ratio": rep.residual_ratio.as_ref().map(|r| dec(r)),
        "residual_floor": dec(&rep.residual_floor),
        "n_used": rep.n_used,
    })
}

pub fn family_csv(fam: &HorseshoeFamily) -> String {
    let mut out = String::from("n,map_period,le,flow_period,total_log,residual\n");
    for r in &fam.rows {
        out += &format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.map_period,
            dec(&r.le),
            dec(&r.flow_period),
            dec(&r.total_log),
            dec(&r.residual)
        );
    }
    out
}

pub fn rigidity_text(rep: &RigidityReport) -> String {
    let mut s = String::from("rigidity diagnostics\n");
    for (o, d) in rep.orbits.iter().zip(&rep.cohomology_defects) {
        s += &format!(
            "  {}: flow exponent = {} a_1 = {} +/- {} defect = {}\n",
            o.word,
            dec(&o.flow_exponent),
            dec(&o.a1),
            dec(&o.a1_uncertainty),
            dec(d)
        );
    }
    s += &format!("exponent dispersion = {}\n", dec(&rep.dispersion));
    s += &format!("reference entropy   = {}\n", dec(&rep.h_ref));
    for r in &rep.reasons {
        s += &format!("  obstruction: {r}\n");
    }
    s += &format!("verdict: {}", rep.verdict);
    s
}

pub fn rigidity_json(rep: &RigidityReport) -> serde_json::Value {
    json!({
        "orbits": rep.orbits.iter().zip(&rep.cohomology_defects).map(|(o, d)| json!({
            "word": o.word,
            "flow_exponent": dec(&o.flow_exponent),
            "flow_period": dec(&o.flow_period),
            "log_ju": dec(&o.log_ju),
            "a1": dec(&o.a1),
            "a1_uncertainty": dec(&o.a1_uncertainty),
            "cohomology_defect": dec(d),
        })).collect::<Vec<_>>(),
        "dispersion": dec(&rep.dispersion),
        "h_ref": dec(&rep.h_ref),
        "reasons": rep.reasons,
        "verdict": rep.verdict.to_string(),
    })
}
