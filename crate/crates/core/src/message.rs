//! Human-readable semantic messages and overhead accounting.

use serde::Serialize;

use crate::post::Assessment;
use crate::scenario::Scenario;
use crate::schema::{DecisionClass, IndependentTags, TagGroup};
use crate::text;
use crate::wire::{self, WIRE_LEN};

/// Lowercase words of a tag name with the given scaffolding removed:
/// CamelCase is split and underscores become spaces.
fn tag_words(name: &str, prefix: &str, suffix: &str) -> String {
    let core = name
        .strip_prefix(prefix)
        .and_then(|n| n.strip_suffix(suffix))
        .unwrap_or(name);
    let mut out = String::with_capacity(core.len() + 4);
    let mut prev_lower = false;
    for c in core.chars() {
        if c == '_' {
            out.push(' ');
            prev_lower = false;
        } else {
            if c.is_ascii_uppercase() && prev_lower {
                out.push(' ');
            }
            prev_lower = c.is_ascii_lowercase();
            out.push(c.to_ascii_lowercase());
        }
    }
    out
}

fn headline(a: &Assessment, s: &Scenario) -> String {
    let t = s.target.bs_id;
    match a.decision {
        DecisionClass::ExecuteOptimal => {
            format!("UAV Assessment: Proposing handover to Target BS BS{t}.")
        }
        DecisionClass::RejectTargetWeak => {
            format!("UAV Assessment: Rejecting handover to Target BS BS{t} due to weak signal.")
        }
        DecisionClass::RejectCurrentBetter => format!(
            "UAV Assessment: Maintaining current connection with BS BS{}.",
            s.serving.bs_id
        ),
        DecisionClass::QuestionConflict => format!(
            "UAV Assessment: Handover to Target BS BS{t} requires review due to conflicting/unclear data."
        ),
    }
}

/// Composes the one-line message sent to the serving cell.
pub fn compose(a: &Assessment, s: &Scenario) -> String {
    let g = &a.groups;
    let advantage = tag_words(g.label_name(TagGroup::Advantage), "RT_", "_RSRP");
    let rsrp = tag_words(g.label_name(TagGroup::TargetRsrp), "RT_Target_", "_Signal_RSRP");
    let cqi = tag_words(g.label_name(TagGroup::TargetCqi), "RT_Target_CQI_", "");
    let speed = tag_words(g.label_name(TagGroup::Speed), "RT_", "");

    let mut msg = headline(a, s);
    msg.push_str(&format!(
        " Key Factors: RSRP Relation: {advantage}; Target Signal (RSRP {rsrp}, CQI {cqi})"
    ));
    if a.independents.contains(IndependentTags::CONFLICT_TARGET) {
        msg.push_str("; target RSRP/CQI conflicting");
    }
    if a.independents.contains(IndependentTags::UNCLEAR_BENEFIT) {
        msg.push_str("; unclear benefit (buffer/mission constraint)");
    }
    msg.push_str(&format!(
        ". UAV Context: Speed {}m/s (Interpreted as: {speed}), Buffer {}",
        s.speed, s.buffer
    ));
    msg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverheadReport {
    pub scenario_text_bytes: usize,
    pub message_bytes: usize,
    pub wire_bytes: usize,
    pub text_to_wire: f64,
    pub message_to_wire: f64,
}

pub fn overhead_report(s: &Scenario, a: &Assessment) -> OverheadReport {
    let scenario_text_bytes = text::render(s).len();
    let message_bytes = compose(a, s).len();
    // the frame is fixed-width whether or not this scenario is encodable
    let wire_bytes = wire::encode(a, s).map(|w| w.len()).unwrap_or(WIRE_LEN);
    OverheadReport {
        scenario_text_bytes,
        message_bytes,
        wire_bytes,
        text_to_wire: scenario_text_bytes as f64 / wire_bytes as f64,
        message_to_wire: message_bytes as f64 / wire_bytes as f64,
    }
}

/// Mean sizes and ratios over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverheadSummary {
    pub samples: usize,
    pub mean_scenario_text_bytes: f64,
    pub mean_message_bytes: f64,
    pub wire_bytes: usize,
    pub mean_text_to_wire: f64,
    pub mean_message_to_wire: f64,
}

pub fn summarize_overhead<'a>(
    items: impl IntoIterator<Item = (&'a Scenario, &'a Assessment)>,
) -> Option<OverheadSummary> {
    let reports: Vec<OverheadReport> = items
        .into_iter()
        .map(|(s, a)| overhead_report(s, a))
        .collect();
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&OverheadReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Some(OverheadSummary {
        samples: reports.len(),
        mean_scenario_text_bytes: mean(|r| r.scenario_text_bytes as f64),
        mean_message_bytes: mean(|r| r.message_bytes as f64),
        wire_bytes: WIRE_LEN,
        mean_text_to_wire: mean(|r| r.text_to_wire),
        mean_message_to_wire: mean(|r| r.message_to_wire),
    })
}
