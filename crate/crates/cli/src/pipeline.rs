//! Deterministic experiment pipeline: table → orbits → normal form →
//! horseshoe fits → rigidity report → suspension entropy → summary.
//!
//! Every stage writes its artifacts before the next starts, and a
//! MANIFEST records completeness, so a failed run retains everything
//! produced so far. All output is derived from computed values with fixed
//! formatting and iteration order — rerunning a config reproduces
//! byte-identical files.

use crate::report::{self, dec, SuspensionConfig};
use crate::Cli;
use entroflex_core::asymptotics::{
    fit_period_expansion, fit_series, fit_trace_expansion, horseshoe_family, rigidity_report,
    RigidityReport,
};
use entroflex_core::config::TableConfig;
use entroflex_core::error::{Error as CoreError, Result as CoreResult};
use entroflex_core::normalform::{
    anosov_cocycle_value, extract_birkhoff, return_map_jet_symplectic, NormalForm,
};
use entroflex_core::orbits::{find_periodic_orbit, orbit_flow_exponent};
use entroflex_core::symbolic::SymbolicWord;
use serde::Deserialize;
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    /// Table file, relative to the config file's directory.
    pub table: String,
    pub precision: u32,
    pub orbits: OrbitsSection,
    pub normal_form: NormalFormSection,
    pub horseshoe: HorseshoeSection,
    #[serde(default)]
    pub suspension: Option<SuspensionSection>,
}

#[derive(Debug, Deserialize)]
pub struct OrbitsSection {
    pub words: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct NormalFormSection {
    pub word: String,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_order() -> usize {
    5
}

#[derive(Debug, Deserialize)]
pub struct HorseshoeSection {
    pub block: String,
    pub connector: String,
    pub n_max: usize,
    #[serde(default = "default_series_degree")]
    pub series_degree: usize,
}

fn default_series_degree() -> usize {
    2
}

#[derive(Debug, Deserialize)]
pub struct SuspensionSection {
    pub adjacency: Vec<Vec<u8>>,
    #[serde(default)]
    pub roof: Option<Vec<Vec<f64>>>,
}

struct Manifest {
    path: PathBuf,
    stages: Vec<(String, String, Vec<String>)>,
    planned: Vec<&'static str>,
}

impl Manifest {
    fn new(path: PathBuf, planned: Vec<&'static str>) -> Self {
        Manifest {
            path,
            stages: Vec::new(),
            planned,
        }
    }

    fn record(&mut self, stage: &str, status: &str, files: Vec<String>) -> CoreResult<()> {
        self.stages.push((stage.into(), status.into(), files));
        self.flush()
    }

    fn flush(&self) -> CoreResult<()> {
        let mut text = String::from("# stage\tstatus\tartifacts\n");
        for (name, status, files) in &self.stages {
            text += &format!("{name}\t{status}\t{}\n", files.join(","));
        }
        for name in &self.planned[self.stages.len()..] {
            text += &format!("{name}\tpending\t\n");
        }
        report::write_file(&self.path, &text)
    }

    fn fail_rest(&mut self, stage: &str, err: &CoreError) -> CoreResult<()> {
        self.stages
            .push((stage.into(), format!("failed: {err}"), Vec::new()));
        while self.stages.len() < self.planned.len() {
            let name = self.planned[self.stages.len()];
            self.stages.push((name.into(), "skipped".into(), Vec::new()));
        }
        self.flush()
    }
}

/// Prefix an error with the failing stage name, preserving the variant so
/// the exit-code mapping stays faithful.
fn stage_err(stage: &str, e: CoreError) -> CoreError {
    use CoreError::*;
    let wrap = |m: String| format!("stage {stage}: {m}");
    match e {
        Validation(m) => Validation(wrap(m)),
        NonConvergence(m) => NonConvergence(wrap(m)),
        Escape(m) => Escape(wrap(m)),
        Grazing(m) => Grazing(wrap(m)),
        Capability(m) => Capability(wrap(m)),
        Degenerate(m) => Degenerate(wrap(m)),
        Infeasible(m) => Infeasible(wrap(m)),
        Internal(m) => Internal(wrap(m)),
    }
}

pub fn run(cli: &Cli, config_path: &Path) -> CoreResult<()> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CoreError::Validation(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let cfg: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| CoreError::Validation(format!("config parse error: {e}")))?;
    if cfg.schema != 1 {
        return Err(CoreError::Validation(format!(
            "unsupported experiment schema version {}",
            cfg.schema
        )));
    }
    if cfg.precision < 64 {
        return Err(CoreError::Validation("precision must be at least 64 bits".into()));
    }
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let table_path = base.join(&cfg.table);
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)
        .map_err(|e| CoreError::Validation(format!("cannot create out dir: {e}")))?;

    let planned = vec![
        "validate",
        "table",
        "orbits",
        "normal-form",
        "horseshoe",
        "rigidity",
        "suspension",
        "summary",
    ];
    let mut manifest = Manifest::new(out.join("MANIFEST"), planned);

    macro_rules! stage {
        ($name:expr, $body:expr) => {
            match $body {
                Ok(files) => manifest.record($name, "complete", files)?,
                Err(e) => {
                    manifest.fail_rest($name, &e)?;
                    return Err(stage_err($name, e));
                }
            }
        };
    }

    // --- validate: fail fast before any long computation ---
    let prec = cfg.precision;
    let table_cfg = TableConfig::load(&table_path)?;
    let words: Vec<SymbolicWord> = cfg
        .orbits
        .words
        .iter()
        .map(|w| SymbolicWord::parse(w, true))
        .collect::<CoreResult<_>>()?;
    let nf_word = SymbolicWord::parse(&cfg.normal_form.word, true)?;
    let w_o = SymbolicWord::parse(&cfg.horseshoe.block, true)?;
    let w_c = SymbolicWord::parse(&cfg.horseshoe.connector, true)?;
    let table = table_cfg.build(prec)?;
    // the n_max-vs-precision rule needs the block multiplier; the block
    // orbit solve is cheap compared to any later stage
    let block_orbit = find_periodic_orbit(&table, &w_o, prec)?;
    let bits_per_n = -block_orbit.lambda.abs().ln().to_f64() / std::f64::consts::LN_2;
    let ceiling = ((prec as f64 - 40.0) / bits_per_n).floor() as usize;
    if cfg.horseshoe.n_max > ceiling {
        let e = CoreError::Validation(format!(
            "horseshoe n_max {} exceeds the ceiling {ceiling} supported by {prec} bits",
            cfg.horseshoe.n_max
        ));
        manifest.fail_rest("validate", &e)?;
        return Err(e);
    }
    if let Some(s) = &cfg.suspension {
        // constructing the system runs the irreducibility/positivity checks
        let mut sys = entroflex_core::suspension::MarkovSystem::new(s.adjacency.clone())?;
        if let Some(r) = &s.roof {
            sys = sys.with_roof(r.clone())?;
        }
        let _ = sys;
    }
    manifest.record("validate", "complete", Vec::new())?;

    // --- table ---
    stage!("table", (|| -> CoreResult<Vec<String>> {
        let rep = table.non_eclipse_check()?;
        let doc = json!({
            "schema_version": crate::JSON_SCHEMA_VERSION,
            "path": cfg.table,
            "obstacles": table.m(),
            "non_eclipse_margin": format!("{:.6e}", rep.margin),
        });
        report::write_file(&out.join("table.json"), &serde_json::to_string_pretty(&doc).unwrap())?;
        Ok(vec!["table.json".into()])
    })());

    // --- orbits ---
    let mut solved = Vec::new();
    stage!("orbits", (|| -> CoreResult<Vec<String>> {
        let mut csv = String::from("word,flow_period,lambda,le,flow_exponent,residual\n");
        for w in &words {
            let orbit = find_periodic_orbit(&table, w, prec)?;
            csv += &format!(
                "{w},{},{},{},{},{}\n",
                dec(&orbit.flow_period),
                dec(&orbit.lambda),
                dec(&orbit.le),
                dec(&orbit_flow_exponent(&orbit)),
                dec(&orbit.grad_residual)
            );
            solved.push(orbit);
        }
        report::write_file(&out.join("orbits.csv"), &csv)?;
        Ok(vec!["orbits.csv".into()])
    })());

    // --- normal form ---
    let mut nf_result: Option<NormalForm> = None;
    stage!("normal-form", (|| -> CoreResult<Vec<String>> {
        let orbit = find_periodic_orbit(&table, &nf_word, prec)?;
        let jet = return_map_jet_symplectic(&table, &orbit, 0, cfg.normal_form.order)?;
        let k = (cfg.normal_form.order - 1) / 2;
        let nf = extract_birkhoff(&jet, k)?;
        let doc = json!({
            "schema_version": crate::JSON_SCHEMA_VERSION,
            "word": format!("{nf_word}"),
            "order": cfg.normal_form.order,
            "lambda": dec(&nf.lambda),
            "a": nf.a.iter().map(dec).collect::<Vec<_>>(),
            "anosov_cocycle": dec(&anosov_cocycle_value(&nf)),
            "residual": dec(&nf.residual),
        });
        report::write_file(
            &out.join("normal-form.json"),
            &serde_json::to_string_pretty(&doc).unwrap(),
        )?;
        nf_result = Some(nf);
        Ok(vec!["normal-form.json".into()])
    })());

    // --- horseshoe ---
    let mut fits_summary = Vec::new();
    stage!("horseshoe", (|| -> CoreResult<Vec<String>> {
        let fam = horseshoe_family(&table, &w_o, &w_c, cfg.horseshoe.n_max, prec)?;
        report::write_file(&out.join("horseshoe.csv"), &report::family_csv(&fam))?;
        let mut fits = Vec::new();
        for rep in [
            fit_period_expansion(&fam),
            fit_trace_expansion(&fam, &fam.lambda),
            fit_series(&fam, &fam.lambda, cfg.horseshoe.series_degree),
        ] {
            match rep {
                Ok(r) => {
                    fits_summary.extend(
                        r.coefficients
                            .iter()
                            .map(|(n, v, u)| (r.model.clone(), n.clone(), dec(v), dec(u))),
                    );
                    fits.push(report::fit_to_json(&r));
                }
                // a fit model can be starved of rows without invalidating
                // the family; record the reason and continue
                Err(e) => fits.push(json!({ "error": e.to_string() })),
            }
        }
        let doc = json!({
            "schema_version": crate::JSON_SCHEMA_VERSION,
            "block": format!("{w_o}"),
            "connector": format!("{w_c}"),
            "lambda": dec(&fam.lambda),
            "fits": fits,
        });
        report::write_file(&out.join("fits.json"), &serde_json::to_string_pretty(&doc).unwrap())?;
        Ok(vec!["horseshoe.csv".into(), "fits.json".into()])
    })());

    // --- rigidity ---
    let mut rigidity: Option<RigidityReport> = None;
    stage!("rigidity", (|| -> CoreResult<Vec<String>> {
        let rep = rigidity_report(&table, &words, prec)?;
        report::write_file(&out.join("rigidity.txt"), &report::rigidity_text(&rep))?;
        report::write_file(
            &out.join("rigidity.json"),
            &serde_json::to_string_pretty(&report::rigidity_json(&rep)).unwrap(),
        )?;
        rigidity = Some(rep);
        Ok(vec!["rigidity.txt".into(), "rigidity.json".into()])
    })());

    // --- suspension ---
    stage!("suspension", (|| -> CoreResult<Vec<String>> {
        let Some(s) = &cfg.suspension else {
            return Ok(Vec::new());
        };
        let scfg = SuspensionConfig {
            schema: 1,
            adjacency: s.adjacency.clone(),
            roof: s.roof.clone(),
            potential: None,
        };
        let sys = scfg.build()?;
        let h = entroflex_core::suspension::sft_entropy(&sys)?;
        let mu = entroflex_core::suspension::parry_measure(&sys)?;
        let mut doc = json!({
            "schema_version": crate::JSON_SCHEMA_VERSION,
            "states": sys.size(),
            "sft_entropy": format!("{h:.17e}"),
            "parry_entropy": format!("{:.17e}", entroflex_core::suspension::markov_entropy(&mu)),
        });
        if let Some(roof) = sys.roof.clone() {
            let htop = entroflex_core::suspension::suspension_htop_with(&sys, &roof)?;
            doc["suspension_htop"] = json!(format!("{htop:.17e}"));
            doc["abramov_parry"] =
                json!(format!("{:.17e}", entroflex_core::suspension::abramov(&mu, &roof)?));
        }
        report::write_file(
            &out.join("suspension.json"),
            &serde_json::to_string_pretty(&doc).unwrap(),
        )?;
        Ok(vec!["suspension.json".into()])
    })());

    // --- summary ---
    stage!("summary", (|| -> CoreResult<Vec<String>> {
        let rep = rigidity.as_ref().expect("rigidity stage completed");
        let mut text = String::from("experiment summary\n");
        text += &format!("table: {} ({} obstacles)\n", cfg.table, table.m());
        text += &format!("exponent dispersion = {}\n", dec(&rep.dispersion));
        text += &format!("reference entropy   = {}\n", dec(&rep.h_ref));
        for o in &rep.orbits {
            text += &format!(
                "a_1({}) = {} +/- {}\n",
                o.word,
                dec(&o.a1),
                dec(&o.a1_uncertainty)
            );
        }
        if let Some(nf) = &nf_result {
            text += &format!(
                "normal form at {}: lambda = {} a_1 = {}\n",
                cfg.normal_form.word,
                dec(&nf.lambda),
                dec(&nf.a[0])
            );
        }
        for (model, name, v, u) in &fits_summary {
            text += &format!("fit[{model}] {name} = {v} +/- {u}\n");
        }
        text += &format!("verdict: {}\n", rep.verdict);
        report::write_file(&out.join("summary.txt"), &text)?;
        let doc = json!({
            "schema_version": crate::JSON_SCHEMA_VERSION,
            "dispersion": dec(&rep.dispersion),
            "h_ref": dec(&rep.h_ref),
            "a1": rep.orbits.iter().map(|o| json!({
                "word": o.word,
                "value": dec(&o.a1),
                "uncertainty": dec(&o.a1_uncertainty),
            })).collect::<Vec<_>>(),
            "verdict": rep.verdict.to_string(),
        });
        report::write_file(
            &out.join("summary.json"),
            &serde_json::to_string_pretty(&doc).unwrap(),
        )?;
        Ok(vec!["summary.txt".into(), "summary.json".into()])
    })());

    if !cli.json {
        println!(
            "pipeline complete: artifacts in {} (see MANIFEST)",
            out.display()
        );
    } else {
        let doc = json!({
            "schema_version": crate::JSON_SCHEMA_VERSION,
            "command": "pipeline run",
            "result": { "out": out.display().to_string(), "status": "complete" },
        });
        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    }
    Ok(())
}
