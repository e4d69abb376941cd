//! Stratified accuracy at IoU thresholds.

use std::collections::{BTreeMap, BTreeSet};

use oltground_agent::AnswerRecord;
use oltground_core::geo::aabb_iou;
use oltground_core::olt::SceneOlt;
use serde::Serialize;

use crate::error::EvalError;
use crate::query::{derive_strata, QueryRecord, Stratum};

pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.25, 0.5];

/// Key used for a threshold in `acc_at` maps, e.g. `"0.25"`.
pub fn threshold_key(t: f64) -> String {
    format!("{t}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumScore {
    pub n: usize,
    /// `None` when `n` is zero.
    pub acc_at: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRow {
    pub query_id: String,
    pub scene_id: String,
    pub predicted_id: Option<u64>,
    pub gt_object_id: Option<u64>,
    pub iou: f64,
    pub correct_at: BTreeMap<String, bool>,
    pub strata: Vec<Stratum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub thresholds: Vec<f64>,
    pub overall: StratumScore,
    /// Always carries every stratum, including empty ones.
    pub strata: BTreeMap<Stratum, StratumScore>,
    pub rows: Vec<QueryRow>,
}

impl MetricsReport {
    pub fn acc(&self, stratum: Option<Stratum>, t: f64) -> Option<f64> {
        let s = match stratum {
            None => &self.overall,
            Some(s) => &self.strata[&s],
        };
        s.acc_at.get(&threshold_key(t)).copied().flatten()
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("report serializes")
    }

    /// The two benchmark table layouts as plain text.
    pub fn tables(&self) -> String {
        let cell = |s: Option<Stratum>, t: f64| match self.acc(s, t) {
            Some(a) => format!("{:>6.1}", 100.0 * a),
            None => format!("{:>6}", "-"),
        };
        let mut out = String::new();
        out.push_str("Unique/Multiple\n");
        let mut header = "        ".to_string();
        for name in ["Unique", "Multiple", "Overall"] {
            for t in &self.thresholds {
                header.push_str(&format!(" {:>14}", format!("{name}@{t}")));
            }
        }
        out.push_str(&header);
        out.push('\n');
        let mut row = "acc(%)  ".to_string();
        for s in [Some(Stratum::Unique), Some(Stratum::Multiple), None] {
            for &t in &self.thresholds {
                row.push_str(&format!(" {:>14}", cell(s, t)));
            }
        }
        out.push_str(&row);
        out.push_str("\n\nEasy/Hard/Dep/Indep\n");
        out.push_str(&format!("{:<8} {:>6} {:>6} {:>6} {:>6} {:>7}\n", "IoU", "Easy", "Hard", "Dep", "Indep", "Overall"));
        for &t in &self.thresholds {
            out.push_str(&format!(
                "{:<8} {} {} {} {} {:>7}\n",
                t,
                cell(Some(Stratum::Easy), t),
                cell(Some(Stratum::Hard), t),
                cell(Some(Stratum::ViewDep), t),
                cell(Some(Stratum::ViewIndep), t),
                cell(None, t).trim()
            ));
        }
        out.push_str(&format!("\nn = {}", self.overall.n));
        for s in Stratum::ALL {
            out.push_str(&format!(", {} {}", s.as_str(), self.strata[&s].n));
        }
        out.push('\n');
        out
    }
}

/// Fills missing ground-truth boxes from the scene tables by object id, and
/// any strata the records leave out.
pub fn resolve_gt(queries: &mut [QueryRecord], olts: &BTreeMap<String, SceneOlt>) -> Result<(), EvalError> {
    for q in queries.iter_mut() {
        derive_strata(q, olts.get(&q.scene_id));
    }
    for q in queries.iter_mut().filter(|q| q.gt_bbox.is_none()) {
        let Some(id) = q.gt_object_id else { return Err(EvalError::MissingGroundTruth(q.query_id.clone())) };
        let olt = olts.get(&q.scene_id).ok_or_else(|| EvalError::UnknownScene(q.scene_id.clone()))?;
        let rec = olt.get(id).ok_or_else(|| EvalError::UnknownObject { scene: q.scene_id.clone(), id })?;
        q.gt_bbox = Some(rec.bbox());
    }
    Ok(())
}

fn score(n: usize, hits: &[usize], thresholds: &[f64]) -> StratumScore {
    let acc_at = thresholds
        .iter()
        .zip(hits)
        .map(|(&t, &h)| (threshold_key(t), (n > 0).then(|| h as f64 / n as f64)))
        .collect();
    StratumScore { n, acc_at }
}

/// Scores answers against ground truth. Queries without an answer, and
/// failed answers, count as incorrect.
pub fn evaluate(answers: &[AnswerRecord], gts: &[QueryRecord], thresholds: &[f64]) -> Result<MetricsReport, EvalError> {
    for &t in thresholds {
        if !(t > 0.0 && t <= 1.0) {
            return Err(EvalError::InvalidThreshold(t));
        }
    }
    let ids: BTreeSet<&str> = gts.iter().map(|q| q.query_id.as_str()).collect();
    let mut by_id: BTreeMap<&str, &AnswerRecord> = BTreeMap::new();
    for a in answers {
        if !ids.contains(a.query_id.as_str()) {
            return Err(EvalError::UnmatchedQueryId(a.query_id.clone()));
        }
        if by_id.insert(a.query_id.as_str(), a).is_some() {
            return Err(EvalError::DuplicateAnswer(a.query_id.clone()));
        }
    }

    let k = thresholds.len();
    let mut overall = vec![0usize; k];
    let mut per: BTreeMap<Stratum, (usize, Vec<usize>)> = Stratum::ALL.iter().map(|&s| (s, (0, vec![0; k]))).collect();
    let mut rows = Vec::with_capacity(gts.len());
    for q in gts {
        let gt = q.gt_bbox.ok_or_else(|| EvalError::MissingGroundTruth(q.query_id.clone()))?;
        let ans = by_id.get(q.query_id.as_str());
        let iou = ans.and_then(|a| a.bbox).map(|b| aabb_iou(&b, &gt)).unwrap_or(0.0);
        let correct: Vec<bool> = thresholds.iter().map(|&t| ans.is_some_and(|a| a.bbox.is_some()) && iou >= t).collect();
        for (i, &c) in correct.iter().enumerate() {
            if c {
                overall[i] += 1;
                for s in &q.strata {
                    per.get_mut(s).expect("all strata present").1[i] += 1;
                }
            }
        }
        for s in &q.strata {
            per.get_mut(s).expect("all strata present").0 += 1;
        }
        let failure = match ans {
            None => Some("no answer".to_string()),
            Some(a) => a.failure.as_ref().map(|f| f.code.clone()),
        };
        rows.push(QueryRow {
            query_id: q.query_id.clone(),
            scene_id: q.scene_id.clone(),
            predicted_id: ans.and_then(|a| a.object_id),
            gt_object_id: q.gt_object_id,
            iou,
            correct_at: thresholds.iter().zip(&correct).map(|(&t, &c)| (threshold_key(t), c)).collect(),
            strata: q.strata.iter().copied().collect(),
            failure,
        });
    }
    Ok(MetricsReport {
        thresholds: thresholds.to_vec(),
        overall: score(gts.len(), &overall, thresholds),
        strata: per.into_iter().map(|(s, (n, hits))| (s, score(n, &hits, thresholds))).collect(),
        rows,
    })
}
