//! Report JSON for a single `cluster` invocation.

use serde::{Deserialize, Serialize};

use super::pipeline::{BestOfSeeds, CoresetChoice, CoresetInfo, PipelineConfig, RunStatus, SeedRun};
use crate::error::Result;
use crate::eval::{precision, recall};
use crate::geometry::CenterSet;
use crate::objective::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub z: usize,
    pub coreset: CoresetChoice,
    pub refine_coreset: bool,
    pub opt_guess: String,
    pub improvement_factor: f64,
    pub max_iters: usize,
    pub timeout_seconds: f64,
}

/// Field order here is the key order of the emitted JSON.
///
/// `wall_ms` is `null` unless timing was requested, so reports are
/// byte-identical across repeated runs by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub algo: String,
    pub status: RunStatus,
    pub seed: Option<u64>,
    pub seeds: Vec<u64>,
    pub params: ReportParams,
    pub objective: Option<f64>,
    pub objective_2z: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub wall_ms: Option<f64>,
    pub coreset: Option<CoresetInfo>,
    pub discarded_pre: Option<usize>,
    pub opt_guess_used: Option<f64>,
    pub runs: Vec<SeedRun>,
    pub error: Option<String>,
    pub centers: Vec<Vec<f64>>,
    pub discarded: Vec<usize>,
}

impl Report {
    pub fn build(
        inst: &Instance<'_>,
        cfg: &PipelineConfig,
        seeds: &[u64],
        timeout_seconds: f64,
        runs: &BestOfSeeds,
        truth: Option<&[usize]>,
        timing: bool,
    ) -> Result<Self> {
        let params = ReportParams {
            n: inst.n(),
            d: inst.data.dim(),
            k: inst.k,
            z: inst.z,
            coreset: cfg.coreset,
            refine_coreset: cfg.refine_coreset,
            opt_guess: cfg.opt_guess.to_string(),
            improvement_factor: cfg.improvement_factor,
            max_iters: cfg.max_iters,
            timeout_seconds,
        };
        let mut report = Report {
            algo: cfg.algo.name().into(),
            status: RunStatus::Ok,
            seed: None,
            seeds: seeds.to_vec(),
            params,
            objective: None,
            objective_2z: None,
            precision: None,
            recall: None,
            wall_ms: timing.then_some(runs.total_wall_ms),
            coreset: None,
            discarded_pre: None,
            opt_guess_used: None,
            runs: runs.runs.clone(),
            error: runs.first_error.as_ref().map(ToString::to_string),
            centers: Vec::new(),
            discarded: Vec::new(),
        };
        match &runs.best {
            None => {
                report.status = runs.first_error.as_ref().map_or(RunStatus::Error, RunStatus::of);
            }
            Some((seed, o)) => {
                if let Some(truth) = truth {
                    report.precision = Some(precision(&o.result.discarded, truth)?);
                    report.recall = Some(recall(&o.result.discarded, truth)?);
                }
                report.seed = Some(*seed);
                report.objective = Some(o.result.objective);
                report.objective_2z = o.objective_2z;
                report.coreset = o.coreset.clone();
                report.discarded_pre = o.discarded_pre;
                report.opt_guess_used = o.opt_guess_used;
                report.centers = o.result.centers.to_rows();
                report.discarded = o.result.discarded.clone();
            }
        }
        Ok(report)
    }

    pub fn centers(&self) -> Result<CenterSet> {
        CenterSet::from_rows(&self.centers)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
