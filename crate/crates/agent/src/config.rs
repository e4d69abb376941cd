use serde::{Deserialize, Serialize};

use crate::error::AgentError;

pub const DEFAULT_MAX_TOOL_CALLS: usize = 16;
/// Per-render cap on highlighted ids.
pub const MAX_RENDER_IDS: usize = 8;

/// Which tools the agent may use, plus geometric parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolConfig {
    pub retrieval: bool,
    pub distance: bool,
    pub planning: bool,
    pub rendering: bool,
    pub max_tool_calls: usize,
    /// Overrides the radius of every `next_to` constraint.
    pub next_to_radius: Option<f64>,
    pub render_width: usize,
    pub render_height: usize,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            retrieval: true,
            distance: true,
            planning: true,
            rendering: true,
            max_tool_calls: DEFAULT_MAX_TOOL_CALLS,
            next_to_radius: None,
            render_width: oltground_core::render::DEFAULT_WIDTH,
            render_height: oltground_core::render::DEFAULT_HEIGHT,
        }
    }
}

impl ToolConfig {
    /// Label retrieval only; the weakest ablation.
    pub fn retrieval_only() -> Self {
        Self { distance: false, planning: false, rendering: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !self.retrieval {
            return Err(AgentError::InvalidConfig("retrieval cannot be disabled".into()));
        }
        if self.max_tool_calls < 1 {
            return Err(AgentError::InvalidConfig("max_tool_calls must be at least 1".into()));
        }
        if let Some(r) = self.next_to_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(AgentError::InvalidConfig(format!("next_to radius must be > 0, got {r}")));
            }
        }
        if self.render_width < 16 || self.render_height < 16 {
            return Err(AgentError::InvalidConfig("render size must be at least 16x16".into()));
        }
        Ok(())
    }

    pub(crate) fn scoring_options(&self) -> oltground_core::geo::ScoringOptions {
        use oltground_core::geo::{Composition, ScoringOptions};
        ScoringOptions {
            composition: if self.planning { Composition::Ordered } else { Composition::Conjunction },
            next_to_radius: self.next_to_radius,
            ..ScoringOptions::default()
        }
    }
}
