//! Widget answers, annotation payloads, and the mapping from answers to
//! behavior labels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Choice, Conversation, Method, TaskDef, Widget};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResponseError {
    #[error("task {task:?} uses widget {expected}, got a {got} answer")]
    WidgetMismatch { task: String, expected: String, got: String },
    #[error("{0}")]
    IllegalAnswer(String),
    #[error("{location}: {message}")]
    Payload { location: String, message: String },
}

fn payload_err(location: impl Into<String>, message: impl Into<String>) -> ResponseError {
    ResponseError::Payload { location: location.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpathyChoice {
    Empathetic,
    Unempathetic,
    NotApplicable,
}

/// First-stage knowledge judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactUsage {
    Accurate,
    Inaccurate,
    Misleading,
    Uncertain,
}

/// Second-stage knowledge judgment, only after `FactUsage::Uncertain`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactResolution {
    Accurate,
    Inaccurate,
    Controversial,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyIssue {
    SelfContradiction,
    PartnerContradiction,
    Redundant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acknowledgement {
    Acknowledges,
    Ignores,
    NotNeeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicMove {
    NewTopic,
    NewPointSameTopic,
    FollowUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    Relevant,
    Irrelevant,
}

/// One bot turn's answer in a behavior task. The tag matches [`Widget`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "widget", rename_all = "snake_case")]
pub enum WidgetAnswer {
    Checkbox {
        checked: bool,
    },
    EmpathyRadio {
        choice: EmpathyChoice,
    },
    PersonalInfo {
        preference: bool,
        life: bool,
    },
    Knowledge {
        uses_knowledge: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        usage: Option<FactUsage>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<FactResolution>,
    },
    Consistency {
        selected: Vec<ConsistencyIssue>,
    },
    Flow {
        acknowledgement: Acknowledgement,
        topic: TopicMove,
        relevance: Relevance,
    },
}

impl WidgetAnswer {
    pub fn widget_name(&self) -> &'static str {
        match self {
            WidgetAnswer::Checkbox { .. } => "checkbox",
            WidgetAnswer::EmpathyRadio { .. } => "empathy_radio",
            WidgetAnswer::PersonalInfo { .. } => "personal_info",
            WidgetAnswer::Knowledge { .. } => "knowledge",
            WidgetAnswer::Consistency { .. } => "consistency",
            WidgetAnswer::Flow { .. } => "flow",
        }
    }

    fn matches(&self, widget: &Widget) -> bool {
        matches!(
            (self, widget),
            (WidgetAnswer::Checkbox { .. }, Widget::Checkbox)
                | (WidgetAnswer::EmpathyRadio { .. }, Widget::EmpathyRadio)
                | (WidgetAnswer::PersonalInfo { .. }, Widget::PersonalInfo)
                | (WidgetAnswer::Knowledge { .. }, Widget::Knowledge)
                | (WidgetAnswer::Consistency { .. }, Widget::Consistency)
                | (WidgetAnswer::Flow { .. }, Widget::Flow)
        )
    }
}

fn widget_name(w: &Widget) -> &'static str {
    match w {
        Widget::Checkbox => "checkbox",
        Widget::EmpathyRadio => "empathy_radio",
        Widget::PersonalInfo => "personal_info",
        Widget::Knowledge => "knowledge",
        Widget::Consistency => "consistency",
        Widget::Flow => "flow",
        Widget::Likert { .. } => "likert",
        Widget::PairChoice => "pair_choice",
    }
}

/// A single answer bound to its task (and turn, for per-turn tasks).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskResponse {
    pub task_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<usize>,
    pub answer: WidgetAnswer,
}

/// Behavior labels implied by one widget answer.
pub fn derive_behavior_labels(task: &TaskDef, answer: &WidgetAnswer) -> Result<BTreeSet<String>, ResponseError> {
    if !answer.matches(&task.widget) {
        return Err(ResponseError::WidgetMismatch {
            task: task.key.clone(),
            expected: widget_name(&task.widget).into(),
            got: answer.widget_name().into(),
        });
    }
    let mut out: BTreeSet<String> = BTreeSet::new();
    let mut add = |k: &str| {
        out.insert(k.to_string());
    };
    match answer {
        WidgetAnswer::Checkbox { checked } => {
            if *checked {
                add(&task.labels[0]);
            }
        }
        WidgetAnswer::EmpathyRadio { choice } => match choice {
            EmpathyChoice::Empathetic => add("Emp_b"),
            EmpathyChoice::Unempathetic => add("!Emp_b"),
            EmpathyChoice::NotApplicable => {}
        },
        WidgetAnswer::PersonalInfo { preference, life } => {
            if *preference {
                add("Pre_b");
            }
            if *life {
                add("Lif_b");
            }
        }
        WidgetAnswer::Knowledge { uses_knowledge, usage, resolution } => match (uses_knowledge, usage, resolution) {
            (false, None, None) => {}
            (false, _, _) => {
                return Err(ResponseError::IllegalAnswer("knowledge judgment given for a turn marked as not using knowledge".into()))
            }
            (true, None, _) => return Err(ResponseError::IllegalAnswer("knowledge usage judgment is required".into())),
            (true, Some(FactUsage::Uncertain), None) => {
                return Err(ResponseError::IllegalAnswer("an uncertain knowledge judgment needs a second-stage resolution".into()))
            }
            (true, Some(FactUsage::Uncertain), Some(r)) => match r {
                FactResolution::Accurate => add("Fac_b"),
                FactResolution::Inaccurate => add("!Fac_b"),
                FactResolution::Controversial | FactResolution::Inconclusive => {}
            },
            (true, Some(_), Some(_)) => {
                return Err(ResponseError::IllegalAnswer("second-stage resolution is only allowed after \"uncertain\"".into()))
            }
            (true, Some(FactUsage::Accurate), None) => add("Fac_b"),
            (true, Some(FactUsage::Inaccurate | FactUsage::Misleading), None) => add("!Fac_b"),
        },
        WidgetAnswer::Consistency { selected } => {
            let distinct: BTreeSet<_> = selected.iter().collect();
            if distinct.len() != selected.len() {
                return Err(ResponseError::IllegalAnswer("consistency option selected twice".into()));
            }
            for issue in selected {
                add(match issue {
                    ConsistencyIssue::SelfContradiction => "!Sel_b",
                    ConsistencyIssue::PartnerContradiction => "!Par_b",
                    ConsistencyIssue::Redundant => "Red_b",
                });
            }
        }
        WidgetAnswer::Flow { acknowledgement, topic, relevance } => {
            if *acknowledgement == Acknowledgement::Ignores {
                add("Ign_b");
            }
            match topic {
                TopicMove::NewTopic => add("Top_b"),
                TopicMove::FollowUp => add("Fol_b"),
                TopicMove::NewPointSameTopic => {}
            }
            if *relevance == Relevance::Irrelevant {
                add("!Rel_b");
            }
        }
    }
    Ok(out)
}

/// Every legal answer for a behavior widget, in a fixed order.
pub fn enumerate_answers(widget: &Widget) -> Vec<WidgetAnswer> {
    use WidgetAnswer as A;
    match widget {
        Widget::Checkbox => vec![A::Checkbox { checked: false }, A::Checkbox { checked: true }],
        Widget::EmpathyRadio => [EmpathyChoice::NotApplicable, EmpathyChoice::Empathetic, EmpathyChoice::Unempathetic]
            .into_iter()
            .map(|choice| A::EmpathyRadio { choice })
            .collect(),
        Widget::PersonalInfo => [(false, false), (true, false), (false, true), (true, true)]
            .into_iter()
            .map(|(preference, life)| A::PersonalInfo { preference, life })
            .collect(),
        Widget::Knowledge => {
            let mut out = vec![A::Knowledge { uses_knowledge: false, usage: None, resolution: None }];
            for usage in [FactUsage::Accurate, FactUsage::Inaccurate, FactUsage::Misleading] {
                out.push(A::Knowledge { uses_knowledge: true, usage: Some(usage), resolution: None });
            }
            for r in [FactResolution::Accurate, FactResolution::Inaccurate, FactResolution::Controversial, FactResolution::Inconclusive] {
                out.push(A::Knowledge { uses_knowledge: true, usage: Some(FactUsage::Uncertain), resolution: Some(r) });
            }
            out
        }
        Widget::Consistency => {
            let all = [ConsistencyIssue::SelfContradiction, ConsistencyIssue::PartnerContradiction, ConsistencyIssue::Redundant];
            (0u8..8)
                .map(|mask| A::Consistency {
                    selected: all.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, v)| *v).collect(),
                })
                .collect()
        }
        Widget::Flow => {
            let mut out = Vec::new();
            for acknowledgement in [Acknowledgement::Acknowledges, Acknowledgement::NotNeeded, Acknowledgement::Ignores] {
                for topic in [TopicMove::NewPointSameTopic, TopicMove::FollowUp, TopicMove::NewTopic] {
                    for relevance in [Relevance::Relevant, Relevance::Irrelevant] {
                        out.push(A::Flow { acknowledgement, topic, relevance });
                    }
                }
            }
            out
        }
        Widget::Likert { .. } | Widget::PairChoice => Vec::new(),
    }
}

/// First legal answer (in [`enumerate_answers`] order) whose derived labels
/// equal `labels`, if the widget can express that set.
pub fn answer_for_labels(task: &TaskDef, labels: &BTreeSet<String>) -> Option<WidgetAnswer> {
    enumerate_answers(&task.widget)
        .into_iter()
        .find(|a| derive_behavior_labels(task, a).ok().as_ref() == Some(labels))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnAnswer {
    pub turn: usize,
    pub answer: WidgetAnswer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRating {
    pub turn: usize,
    pub value: u8,
}

/// Body of one annotation. The shape is fixed by the task's method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    /// Behavior tasks: one answer per bot turn.
    Turns { responses: Vec<TurnAnswer> },
    /// Turn Likert: one rating per bot turn.
    TurnRatings { ratings: Vec<TurnRating> },
    /// Dialogue Likert: one rating per dimension label.
    DialogueRatings { ratings: BTreeMap<String, u8> },
    /// Comparative: one choice per dimension label.
    PairChoices { choices: BTreeMap<String, Choice> },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Turns { .. } => "turns",
            Payload::TurnRatings { .. } => "turn_ratings",
            Payload::DialogueRatings { .. } => "dialogue_ratings",
            Payload::PairChoices { .. } => "pair_choices",
        }
    }
}

fn expected_kind(method: Method) -> &'static str {
    match method {
        Method::AbcEval => "turns",
        Method::TurnLikert => "turn_ratings",
        Method::DialogueLikert => "dialogue_ratings",
        Method::Comparative => "pair_choices",
    }
}

fn likert_bounds(task: &TaskDef) -> (u8, u8) {
    match task.widget {
        Widget::Likert { min, max } => (min, max),
        _ => (crate::corpus::LIKERT_MIN, crate::corpus::LIKERT_MAX),
    }
}

fn check_turn_coverage(
    conversation: &Conversation,
    turns: impl Iterator<Item = usize>,
) -> Result<(), ResponseError> {
    let bot: BTreeSet<usize> = conversation.bot_turn_indices().into_iter().collect();
    let mut seen = BTreeSet::new();
    for t in turns {
        if !bot.contains(&t) {
            return Err(payload_err(format!("turn {t}"), "not a bot turn of this conversation"));
        }
        if !seen.insert(t) {
            return Err(payload_err(format!("turn {t}"), "answered twice"));
        }
    }
    if let Some(missing) = bot.difference(&seen).next() {
        return Err(payload_err(format!("turn {missing}"), "missing response for bot turn"));
    }
    Ok(())
}

/// Checks that `payload` has the shape, coverage and value ranges `task`
/// requires. `conversation` is the annotated conversation for per-turn tasks.
pub fn validate_payload(task: &TaskDef, conversation: Option<&Conversation>, payload: &Payload) -> Result<(), ResponseError> {
    let want = expected_kind(task.method);
    if payload.kind() != want {
        return Err(payload_err(format!("task {:?}", task.key), format!("expected a {want} payload, got {}", payload.kind())));
    }
    let label_set = |keys: Vec<&String>| -> Result<(), ResponseError> {
        let got: BTreeSet<&str> = keys.into_iter().map(String::as_str).collect();
        let need: BTreeSet<&str> = task.labels.iter().map(String::as_str).collect();
        if let Some(missing) = need.difference(&got).next() {
            return Err(payload_err(*missing, "missing answer for dimension"));
        }
        if let Some(extra) = got.difference(&need).next() {
            return Err(payload_err(*extra, format!("not a label of task {:?}", task.key)));
        }
        Ok(())
    };
    match payload {
        Payload::Turns { responses } => {
            let conv = conversation.ok_or_else(|| payload_err(format!("task {:?}", task.key), "per-turn task needs a conversation"))?;
            check_turn_coverage(conv, responses.iter().map(|r| r.turn))?;
            for r in responses {
                derive_behavior_labels(task, &r.answer).map_err(|e| payload_err(format!("turn {}", r.turn), e.to_string()))?;
            }
        }
        Payload::TurnRatings { ratings } => {
            let conv = conversation.ok_or_else(|| payload_err(format!("task {:?}", task.key), "per-turn task needs a conversation"))?;
            let (lo, hi) = likert_bounds(task);
            for r in ratings {
                if !(lo..=hi).contains(&r.value) {
                    return Err(payload_err(
                        format!("{}, turn {}", task.labels[0], r.turn),
                        format!("Likert value {} outside {lo}..{hi}", r.value),
                    ));
                }
            }
            check_turn_coverage(conv, ratings.iter().map(|r| r.turn))?;
        }
        Payload::DialogueRatings { ratings } => {
            label_set(ratings.keys().collect())?;
            let (lo, hi) = likert_bounds(task);
            for (k, v) in ratings {
                if !(lo..=hi).contains(v) {
                    return Err(payload_err(k.as_str(), format!("Likert value {v} outside {lo}..{hi}")));
                }
            }
        }
        Payload::PairChoices { choices } => label_set(choices.keys().collect())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin_schema;

    fn labels(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empathy_not_applicable_is_empty() {
        let s = builtin_schema();
        let a = WidgetAnswer::EmpathyRadio { choice: EmpathyChoice::NotApplicable };
        assert!(derive_behavior_labels(s.task("empathy").unwrap(), &a).unwrap().is_empty());
    }

    #[test]
    fn misleading_is_fact_contradiction() {
        let s = builtin_schema();
        let a = WidgetAnswer::Knowledge { uses_knowledge: true, usage: Some(FactUsage::Misleading), resolution: None };
        assert_eq!(derive_behavior_labels(s.task("knowledge").unwrap(), &a).unwrap(), labels(&["!Fac_b"]));
    }

    #[test]
    fn consistency_dropdown() {
        let s = builtin_schema();
        let a = WidgetAnswer::Consistency { selected: vec![ConsistencyIssue::SelfContradiction, ConsistencyIssue::Redundant] };
        assert_eq!(derive_behavior_labels(s.task("consistency").unwrap(), &a).unwrap(), labels(&["!Sel_b", "Red_b"]));
    }

    #[test]
    fn uncertain_requires_resolution() {
        let s = builtin_schema();
        let t = s.task("knowledge").unwrap();
        let bad = WidgetAnswer::Knowledge { uses_knowledge: true, usage: Some(FactUsage::Uncertain), resolution: None };
        assert!(derive_behavior_labels(t, &bad).is_err());
        let bad = WidgetAnswer::Knowledge { uses_knowledge: true, usage: Some(FactUsage::Accurate), resolution: Some(FactResolution::Accurate) };
        assert!(derive_behavior_labels(t, &bad).is_err());
        let ok = WidgetAnswer::Knowledge { uses_knowledge: true, usage: Some(FactUsage::Uncertain), resolution: Some(FactResolution::Controversial) };
        assert!(derive_behavior_labels(t, &ok).unwrap().is_empty());
    }

    #[test]
    fn widget_mismatch() {
        let s = builtin_schema();
        let a = WidgetAnswer::Checkbox { checked: true };
        assert!(matches!(derive_behavior_labels(s.task("flow").unwrap(), &a), Err(ResponseError::WidgetMismatch { .. })));
    }

    #[test]
    fn wire_format() {
        let a = WidgetAnswer::Flow { acknowledgement: Acknowledgement::Ignores, topic: TopicMove::FollowUp, relevance: Relevance::Relevant };
        let json = serde_json::to_value(&a).unwrap();
        assert_eq!(json, serde_json::json!({"widget": "flow", "acknowledgement": "ignores", "topic": "follow_up", "relevance": "relevant"}));
    }
}
