//! File formats: study tables (CSV in), result documents (JSON out) and
//! simulation tables (CSV out).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::classic::ClassicTestResult;
use crate::error::{Error, Result};
use crate::model::{
    PredictiveInterval, PrpResult, ReferenceModel, ReplicationPair, Sidedness, StudySummary,
};
use crate::sim::{Design, ReplicateRecord, SweepRow};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const EXCHANGEABLE_HEADER: [&str; 3] = ["study_id", "beta_hat", "se"];
const TWO_GROUP_HEADER: [&str; 4] = ["study_id", "role", "beta_hat", "se"];

/// A parsed study table; the header decides the layout.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyTable {
    TwoGroup(ReplicationPair),
    Exchangeable(Vec<StudySummary>),
}

fn parse_err(line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        reason: reason.into(),
    }
}

fn parse_number(field: &str, name: &str, line: u64) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{name} is not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(
            line,
            format!("{name} must be finite, got {field:?}"),
        ));
    }
    Ok(v)
}

fn parse_row(id: &str, beta: &str, se: &str, line: u64) -> Result<StudySummary> {
    let beta_hat = parse_number(beta, "beta_hat", line)?;
    let se = parse_number(se, "se", line)?;
    if se <= 0.0 {
        return Err(parse_err(line, format!("se must be positive, got {se}")));
    }
    let id = id.trim();
    if id.is_empty() {
        return Err(parse_err(line, "empty study_id"));
    }
    StudySummary::new(id, beta_hat, se).map_err(|e| parse_err(line, e.to_string()))
}

/// Parses either table layout, dispatching on the header row.
pub fn parse_study_table<R: Read>(input: R) -> Result<StudyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let two_group = if header == TWO_GROUP_HEADER {
        true
    } else if header == EXCHANGEABLE_HEADER {
        false
    } else {
        return Err(parse_err(
            1,
            format!(
                "header must be `{}` or `{}`",
                EXCHANGEABLE_HEADER.join(","),
                TWO_GROUP_HEADER.join(",")
            ),
        ));
    };

    let mut studies = Vec::new();
    let mut orig = None;
    let mut rep = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if two_group {
            let study = parse_row(&record[0], &record[2], &record[3], line)?;
            let slot = match record[1].trim() {
                "orig" => &mut orig,
                "rep" => &mut rep,
                other => {
                    return Err(parse_err(
                        line,
                        format!("role must be orig or rep, got {other:?}"),
                    ))
                }
            };
            if slot.is_some() {
                return Err(parse_err(
                    line,
                    format!("duplicate role {:?}", record[1].trim()),
                ));
            }
            *slot = Some(study);
        } else {
            studies.push(parse_row(&record[0], &record[1], &record[2], line)?);
        }
    }
    if two_group {
        match (orig, rep) {
            (Some(o), Some(r)) => Ok(StudyTable::TwoGroup(ReplicationPair::new(o, r))),
            _ => Err(parse_err(
                0,
                "two-group table needs one orig row and one rep row",
            )),
        }
    } else if studies.is_empty() {
        Err(parse_err(0, "no study rows"))
    } else {
        Ok(StudyTable::Exchangeable(studies))
    }
}

pub fn parse_two_group_table<R: Read>(input: R) -> Result<ReplicationPair> {
    match parse_study_table(input)? {
        StudyTable::TwoGroup(pair) => Ok(pair),
        StudyTable::Exchangeable(_) => Err(parse_err(
            1,
            format!("expected header `{}`", TWO_GROUP_HEADER.join(",")),
        )),
    }
}

pub fn parse_exchangeable_table<R: Read>(input: R) -> Result<Vec<StudySummary>> {
    match parse_study_table(input)? {
        StudyTable::Exchangeable(studies) => Ok(studies),
        StudyTable::TwoGroup(_) => Err(parse_err(
            1,
            format!("expected header `{}`", EXCHANGEABLE_HEADER.join(",")),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PriorPrp,
    PriorPrpPubBias,
    PosteriorPrp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatisticDocument {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDocument {
    pub omega_sq: f64,
    pub phi_sq: f64,
    pub gamma: f64,
    pub prior_weight: f64,
    pub posterior_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub components: Vec<ComponentDocument>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicDocument {
    pub cochran_q: Option<ClassicTestResult>,
    pub egger: Option<ClassicTestResult>,
}

/// Forest-plot row: estimate with a `level` normal interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestRow {
    pub study_id: String,
    pub beta_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunnelPoint {
    pub study_id: String,
    pub beta_hat: f64,
    pub se: f64,
}

/// Data behind forest and funnel plots; no rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotData {
    pub level: f64,
    pub forest: Vec<ForestRow>,
    pub funnel: Vec<FunnelPoint>,
}

impl PlotData {
    pub fn from_studies(studies: &[StudySummary], level: f64) -> Self {
        let z = crate::special::normal_quantile(0.5 + level / 2.0);
        Self {
            level,
            forest: studies
                .iter()
                .map(|s| ForestRow {
                    study_id: s.id.clone(),
                    beta_hat: s.beta_hat,
                    lower: s.beta_hat - z * s.se,
                    upper: s.beta_hat + z * s.se,
                })
                .collect(),
            funnel: studies
                .iter()
                .map(|s| FunnelPoint {
                    study_id: s.id.clone(),
                    beta_hat: s.beta_hat,
                    se: s.se,
                })
                .collect(),
        }
    }
}

/// Equal-width histogram over `[lo, hi]`; values outside are clamped into the end bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let idx = ((v - lo) / width).floor();
            let idx = if idx.is_nan() {
                0
            } else {
                (idx.max(0.0) as usize).min(bins - 1)
            };
            counts[idx] += 1;
        }
        Self { edges, counts }
    }
}

/// The JSON document emitted for one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub method: Method,
    pub scenario: Design,
    pub p_value: f64,
    pub sidedness: Sidedness,
    pub statistic: StatisticDocument,
    pub mc_stderr: Option<f64>,
    pub predictive_interval: Option<PredictiveInterval>,
    pub model: ModelDocument,
    pub seed: u64,
    pub draws: Option<usize>,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classic: Option<ClassicDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<PlotData>,
}

impl ResultDocument {
    pub fn new(
        method: Method,
        scenario: Design,
        result: &PrpResult,
        model: &ReferenceModel,
        seed: u64,
        draws: Option<usize>,
    ) -> Self {
        let components = model
            .components()
            .iter()
            .zip(&result.component_posteriors)
            .map(|(c, &post)| ComponentDocument {
                omega_sq: c.omega_sq,
                phi_sq: c.phi_sq,
                gamma: c.gamma,
                prior_weight: c.weight,
                posterior_weight: post,
            })
            .collect();
        Self {
            method,
            scenario,
            p_value: result.p_value,
            sidedness: result.sidedness,
            statistic: StatisticDocument {
                name: result.statistic_name.clone(),
                value: result.statistic_value,
            },
            mc_stderr: result.mc_stderr,
            predictive_interval: result.predictive_interval,
            model: ModelDocument { components },
            seed,
            draws,
            tool_version: TOOL_VERSION.to_string(),
            classic: None,
            plot_data: None,
        }
    }

    /// Schema check run before emission and after parsing.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Numeric(format!("result document: {what}")));
        if !(0.0..=1.0).contains(&self.p_value) {
            return fail("p_value outside [0, 1]");
        }
        if !self.statistic.value.is_finite() {
            return fail("statistic is not finite");
        }
        if self.statistic.name.is_empty() {
            return fail("statistic name is empty");
        }
        if let Some(se) = self.mc_stderr {
            if !(se.is_finite() && se >= 0.0) {
                return fail("mc_stderr must be finite and non-negative");
            }
        }
        if let Some(pi) = &self.predictive_interval {
            if !(pi.lower.is_finite() && pi.upper.is_finite() && pi.lower <= pi.upper) {
                return fail("predictive interval endpoints");
            }
            if !(pi.level > 0.0 && pi.level < 1.0) {
                return fail("predictive interval level outside (0, 1)");
            }
        }
        let comps = &self.model.components;
        if comps.is_empty() {
            return fail("model has no components");
        }
        for c in comps {
            let finite = [
                c.omega_sq,
                c.phi_sq,
                c.gamma,
                c.prior_weight,
                c.posterior_weight,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite || c.omega_sq < 0.0 || c.phi_sq < 0.0 || !(0.0..=1.0).contains(&c.gamma) {
                return fail("invalid model component");
            }
            if !(0.0..=1.0).contains(&c.prior_weight) || !(0.0..=1.0).contains(&c.posterior_weight)
            {
                return fail("component weight outside [0, 1]");
            }
        }
        for (name, total) in [
            ("prior", comps.iter().map(|c| c.prior_weight).sum::<f64>()),
            (
                "posterior",
                comps.iter().map(|c| c.posterior_weight).sum::<f64>(),
            ),
        ] {
            if (total - 1.0).abs() > 1e-9 {
                return fail(&format!("{name} weights sum to {total}"));
            }
        }
        match (self.method, self.draws, self.mc_stderr) {
            (Method::PosteriorPrp, Some(d), Some(_)) if d > 0 => {}
            (Method::PosteriorPrp, _, _) => {
                return fail("posterior result needs draws and mc_stderr")
            }
            (_, None, None) => {}
            _ => return fail("prior result has no Monte Carlo fields"),
        }
        if let Some(classic) = &self.classic {
            for r in [&classic.cochran_q, &classic.egger].into_iter().flatten() {
                if !(0.0..=1.0).contains(&r.p_value) || !r.statistic.is_finite() {
                    return fail("classic test result");
                }
            }
        }
        if let Some(plot) = &self.plot_data {
            let ok = plot
                .forest
                .iter()
                .all(|r| r.lower.is_finite() && r.upper.is_finite())
                && plot
                    .funnel
                    .iter()
                    .all(|p| p.beta_hat.is_finite() && p.se > 0.0);
            if !ok {
                return fail("plot data");
            }
        }
        Ok(())
    }

    /// Validated, pretty-printed JSON. Floats use the shortest representation
    /// that parses back to the identical value.
    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })?;
        doc.validate().map_err(|e| Error::Parse {
            line: 0,
            reason: e.to_string(),
        })?;
        Ok(doc)
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("writing CSV: {e}"))
}

/// Replicate-level table: `replicate,magnitude,p_value,method`.
pub fn write_replicates_csv<W: Write>(records: &[ReplicateRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Summary table: `magnitude,method,n_reps,flag_rate,mean_p`.
pub fn write_summary_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
