//! Binding a parsed plan to the labels that actually exist in a scene.

use std::collections::BTreeMap;

use crate::error::{OltError, PlanError};
use crate::olt::{retrieve_by_label, SceneOlt};
use crate::plan::ast::PredicatePlan;
use crate::segmentation::normalize_label;
use crate::vocab::{resolve_label, LabelVocabulary, Resolution, ResolutionMethod};

/// A plan whose labels are all canonical scene labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedPlan {
    pub plan: PredicatePlan,
    /// One entry per distinct term, in first-seen order.
    pub resolutions: Vec<Resolution>,
    /// Roles (`"target"` or `"anchor <name>"`) with no matching record.
    pub empty_roles: Vec<String>,
}

impl CheckedPlan {
    /// Short human-readable account of non-exact label mappings.
    pub fn resolution_summary(&self) -> String {
        let notes: Vec<String> = self
            .resolutions
            .iter()
            .filter(|r| r.method != ResolutionMethod::Exact)
            .map(|r| format!("{:?} -> {:?} ({})", r.term, r.label, r.method.as_str()))
            .collect();
        notes.join("; ")
    }
}

fn resolve_all(
    labels: &[String],
    vocab: &LabelVocabulary,
    context: &BTreeMap<String, String>,
    seen: &mut Vec<Resolution>,
) -> Result<Vec<String>, OltError> {
    let mut out: Vec<String> = Vec::new();
    for term in labels {
        let res = match seen.iter().find(|r| &r.term == term) {
            Some(r) => r.clone(),
            None => {
                let hinted = context.get(&normalize_label(term)).filter(|l| vocab.labels.contains(*l));
                let r = match hinted {
                    Some(label) if *label != normalize_label(term) => {
                        Resolution { term: term.clone(), label: label.clone(), method: ResolutionMethod::Context }
                    }
                    _ => resolve_label(term, vocab)?,
                };
                seen.push(r.clone());
                r
            }
        };
        if !out.contains(&res.label) {
            out.push(res.label);
        }
    }
    Ok(out)
}

/// Resolves every target and anchor label with [`resolve_label`].
pub fn validate_plan(plan: &PredicatePlan, olt: &SceneOlt, vocab: &LabelVocabulary) -> Result<CheckedPlan, PlanError> {
    validate_plan_with_context(plan, olt, vocab, &BTreeMap::new())
}

/// Like [`validate_plan`], but `context` maps a query term directly onto a
/// scene label chosen by the language model. Hints naming labels absent
/// from the scene are ignored.
pub fn validate_plan_with_context(
    plan: &PredicatePlan,
    olt: &SceneOlt,
    vocab: &LabelVocabulary,
    context: &BTreeMap<String, String>,
) -> Result<CheckedPlan, PlanError> {
    plan.check()?;
    let mut resolutions = Vec::new();
    let mut resolved = plan.clone();
    resolved.target_labels = resolve_all(&plan.target_labels, vocab, context, &mut resolutions)?;
    for a in &mut resolved.anchors {
        a.labels = resolve_all(&a.labels, vocab, context, &mut resolutions)?;
    }
    let mut empty_roles = Vec::new();
    if retrieve_by_label(olt, &resolved.target_labels).is_empty() {
        empty_roles.push("target".to_string());
    }
    for a in &resolved.anchors {
        if retrieve_by_label(olt, &a.labels).is_empty() {
            empty_roles.push(format!("anchor {}", a.name));
        }
    }
    Ok(CheckedPlan { plan: resolved, resolutions, empty_roles })
}
