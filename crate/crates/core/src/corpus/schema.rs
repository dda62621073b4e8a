//! Evaluation schema: label definitions and the task decomposition that binds
//! labels to annotation widgets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CorpusError;

pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 5;

/// The eight Likert/comparative dimensions as `(abbreviation, name)`.
pub const DIMENSIONS: [(&str, &str); 8] = [
    ("Con", "Consistency"),
    ("Emo", "Emotional Understanding"),
    ("Eng", "Engagingness"),
    ("Gra", "Grammaticality"),
    ("Inf", "Informativeness"),
    ("Qua", "Quality"),
    ("Pro", "Proactivity"),
    ("Rel", "Relevance"),
];

pub const QUALITY_DIMENSION: &str = "Qua";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    BehaviorBinary,
    LikertTurn,
    LikertDialogue,
    Comparative,
}

impl LabelKind {
    pub fn suffix(self) -> &'static str {
        match self {
            LabelKind::BehaviorBinary => "b",
            LabelKind::LikertTurn => "t",
            LabelKind::LikertDialogue => "d",
            LabelKind::Comparative => "c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Desirable,
    Undesirable,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDef {
    pub key: String,
    pub kind: LabelKind,
    pub polarity: Polarity,
    pub in_final_set: bool,
    pub description: String,
    /// Dimension abbreviation for Likert and comparative labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<String>,
}

impl LabelDef {
    pub fn is_quality(&self) -> bool {
        self.dimension.as_deref() == Some(QUALITY_DIMENSION)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AbcEval,
    DialogueLikert,
    TurnLikert,
    Comparative,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::AbcEval, Method::TurnLikert, Method::DialogueLikert, Method::Comparative];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::AbcEval => "abc_eval",
            Method::DialogueLikert => "dialogue_likert",
            Method::TurnLikert => "turn_likert",
            Method::Comparative => "comparative",
        }
    }

    pub fn label_kind(self) -> LabelKind {
        match self {
            Method::AbcEval => LabelKind::BehaviorBinary,
            Method::DialogueLikert => LabelKind::LikertDialogue,
            Method::TurnLikert => LabelKind::LikertTurn,
            Method::Comparative => LabelKind::Comparative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    PerBotTurn,
    PerDialogue,
    PerPair,
}

/// Response form attached to a task. Behavior widgets have a fixed output
/// label set (see [`Widget::outputs`]); `Checkbox` emits the task's only label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Widget {
    Checkbox,
    EmpathyRadio,
    PersonalInfo,
    Knowledge,
    Consistency,
    Flow,
    Likert { min: u8, max: u8 },
    PairChoice,
}

impl Widget {
    /// Labels a behavior widget can emit, or `None` when the task decides.
    pub fn outputs(&self) -> Option<&'static [&'static str]> {
        match self {
            Widget::EmpathyRadio => Some(&["Emp_b", "!Emp_b"]),
            Widget::PersonalInfo => Some(&["Pre_b", "Lif_b"]),
            Widget::Knowledge => Some(&["Fac_b", "!Fac_b"]),
            Widget::Consistency => Some(&["!Sel_b", "!Par_b", "Red_b"]),
            Widget::Flow => Some(&["Ign_b", "!Rel_b", "Fol_b", "Top_b"]),
            Widget::Checkbox | Widget::Likert { .. } | Widget::PairChoice => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDef {
    pub key: String,
    pub method: Method,
    pub labels: Vec<String>,
    pub widget: Widget,
    pub unit: Unit,
    pub payment_usd: f64,
    /// Round-3 mistaken turns must stay strictly below this to pass screening.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screening_threshold: Option<u32>,
    #[serde(default)]
    pub requires_training: bool,
}

impl TaskDef {
    pub fn passes_screening(&self, mistakes: u32) -> bool {
        mistakes < self.screening_threshold.unwrap_or(DEFAULT_SCREENING_THRESHOLD)
    }

    pub fn has_label(&self, key: &str) -> bool {
        self.labels.iter().any(|l| l == key)
    }
}

pub const DEFAULT_SCREENING_THRESHOLD: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSchema {
    pub labels: Vec<LabelDef>,
    pub tasks: Vec<TaskDef>,
}

impl EvaluationSchema {
    pub fn label(&self, key: &str) -> Option<&LabelDef> {
        self.labels.iter().find(|l| l.key == key)
    }

    pub fn task(&self, key: &str) -> Option<&TaskDef> {
        self.tasks.iter().find(|t| t.key == key)
    }

    /// The task that produces `label`.
    pub fn task_for_label(&self, label: &str) -> Option<&TaskDef> {
        self.tasks.iter().find(|t| t.has_label(label))
    }

    pub fn tasks_for(&self, method: Method) -> impl Iterator<Item = &TaskDef> {
        self.tasks.iter().filter(move |t| t.method == method)
    }

    pub fn labels_of(&self, kind: LabelKind) -> impl Iterator<Item = &LabelDef> {
        self.labels.iter().filter(move |l| l.kind == kind)
    }

    /// Labels a conversation receives once every task has annotated it.
    pub fn labels_per_conversation(&self) -> usize {
        self.tasks.iter().map(|t| t.labels.len()).sum()
    }

    pub fn final_set(&self) -> impl Iterator<Item = &LabelDef> {
        self.labels.iter().filter(|l| l.in_final_set)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schema serializes");
        s.push('\n');
        s
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("schema serializes")))
    }

    /// Structural consistency: unique keys, every task label defined with the
    /// kind its method produces, each label owned by exactly one task, and
    /// widgets compatible with their labels and unit.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |location: String, message: String| CorpusError::Invalid { location, message };
        if self.tasks.is_empty() {
            return Err(invalid("schema".into(), "schema defines no tasks".into()));
        }
        let mut keys = BTreeSet::new();
        for (i, l) in self.labels.iter().enumerate() {
            if !keys.insert(l.key.as_str()) {
                return Err(invalid(format!("labels[{i}]"), format!("duplicate label key {:?}", l.key)));
            }
            if l.kind != LabelKind::BehaviorBinary && l.dimension.is_none() {
                return Err(invalid(format!("label {:?}", l.key), "Likert and comparative labels need a dimension".into()));
            }
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        let mut task_keys = BTreeSet::new();
        for t in &self.tasks {
            let loc = format!("task {:?}", t.key);
            if !task_keys.insert(t.key.as_str()) {
                return Err(invalid(loc, "duplicate task key".into()));
            }
            if t.labels.is_empty() {
                return Err(invalid(loc, "task has no labels".into()));
            }
            if !(t.payment_usd.is_finite() && t.payment_usd >= 0.0) {
                return Err(invalid(loc, "payment must be a non-negative amount".into()));
            }
            for key in &t.labels {
                let def = self
                    .label(key)
                    .ok_or_else(|| invalid(loc.clone(), format!("undefined label {key:?}")))?;
                if def.kind != t.method.label_kind() {
                    return Err(invalid(loc.clone(), format!("label {key:?} has kind {:?}, not produced by {}", def.kind, t.method.as_str())));
                }
                if let Some(prev) = owner.insert(key, &t.key) {
                    return Err(invalid(loc.clone(), format!("label {key:?} already belongs to task {prev:?}")));
                }
            }
            let expected_unit = match t.method {
                Method::AbcEval | Method::TurnLikert => Unit::PerBotTurn,
                Method::DialogueLikert => Unit::PerDialogue,
                Method::Comparative => Unit::PerPair,
            };
            if t.unit != expected_unit {
                return Err(invalid(loc, format!("unit {:?} does not fit method {}", t.unit, t.method.as_str())));
            }
            let widget_ok = match (&t.widget, t.method) {
                (Widget::Checkbox, Method::AbcEval) => t.labels.len() == 1,
                (Widget::Likert { min, max }, Method::TurnLikert) => t.labels.len() == 1 && min < max,
                (Widget::Likert { min, max }, Method::DialogueLikert) => min < max,
                (Widget::PairChoice, Method::Comparative) => true,
                (w, Method::AbcEval) => match w.outputs() {
                    Some(out) => {
                        let a: BTreeSet<&str> = out.iter().copied().collect();
                        let b: BTreeSet<&str> = t.labels.iter().map(String::as_str).collect();
                        a == b
                    }
                    None => false,
                },
                _ => false,
            };
            if !widget_ok {
                return Err(invalid(loc, format!("widget {:?} cannot produce labels {:?}", t.widget, t.labels)));
            }
            if t.screening_threshold == Some(0) {
                return Err(invalid(loc, "screening threshold 0 would fail every annotator".into()));
            }
        }
        if let Some(orphan) = self.labels.iter().find(|l| !owner.contains_key(l.key.as_str())) {
            return Err(invalid(format!("label {:?}", orphan.key), "label is not produced by any task".into()));
        }
        Ok(())
    }
}

pub fn load_schema(path: &Path) -> Result<EvaluationSchema, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    let schema: EvaluationSchema = serde_json::from_str(&text).map_err(|e| CorpusError::malformed(path, &e))?;
    schema.validate()?;
    Ok(schema)
}

fn behavior(key: &str, polarity: Polarity, final_set: bool, description: &str) -> LabelDef {
    LabelDef {
        key: key.into(),
        kind: LabelKind::BehaviorBinary,
        polarity,
        in_final_set: final_set,
        description: description.into(),
        dimension: None,
    }
}

fn dimension_label(abbr: &str, name: &str, kind: LabelKind) -> LabelDef {
    let description = match kind {
        LabelKind::LikertTurn => format!("{name} of one bot response, rated 1-5"),
        LabelKind::LikertDialogue => format!("{name} of the whole bot side of the dialogue, rated 1-5"),
        LabelKind::Comparative => format!("which of two dialogues shows better {}", name.to_lowercase()),
        LabelKind::BehaviorBinary => unreachable!(),
    };
    LabelDef {
        key: format!("{abbr}_{}", kind.suffix()),
        kind,
        polarity: Polarity::Desirable,
        in_final_set: false,
        description,
        dimension: Some(abbr.into()),
    }
}

fn task(key: &str, method: Method, labels: &[&str], widget: Widget, payment_usd: f64) -> TaskDef {
    let unit = match method {
        Method::AbcEval | Method::TurnLikert => Unit::PerBotTurn,
        Method::DialogueLikert => Unit::PerDialogue,
        Method::Comparative => Unit::PerPair,
    };
    let abc = method == Method::AbcEval;
    TaskDef {
        key: key.into(),
        method,
        labels: labels.iter().map(|s| s.to_string()).collect(),
        widget,
        unit,
        payment_usd,
        screening_threshold: abc.then_some(DEFAULT_SCREENING_THRESHOLD),
        requires_training: abc,
    }
}

/// The frozen default schema: 16 behavior labels in 8 tasks, and 8 dimensions
/// for each of turn Likert, dialogue Likert and comparative.
pub fn builtin_schema() -> EvaluationSchema {
    use Polarity::*;
    let mut labels = vec![
        behavior("!Int_b", Undesirable, false, "part or all of the response is hard to make sense of"),
        behavior("!Soc_b", Undesirable, false, "the response is hostile, demeaning or crude"),
        behavior("Pre_b", Neutral, false, "the bot states its own likes, wishes or values"),
        behavior("Lif_b", Neutral, false, "the bot tells something about its own life or experience"),
        behavior("Emp_b", Desirable, true, "the bot responds fittingly to the partner's feelings"),
        behavior("!Emp_b", Undesirable, true, "the bot misreads or mishandles the partner's feelings"),
        behavior("!Com_b", Undesirable, true, "the response goes against everyday world knowledge"),
        behavior("Fac_b", Desirable, false, "the response uses encyclopedic or expert facts correctly"),
        behavior("!Fac_b", Undesirable, true, "the response states encyclopedic or expert facts wrongly"),
        behavior("!Sel_b", Undesirable, true, "the bot contradicts one of its own earlier turns"),
        behavior("!Par_b", Undesirable, true, "the bot contradicts or misremembers what the partner said"),
        behavior("Red_b", Undesirable, true, "the response needlessly repeats earlier content"),
        behavior("Ign_b", Undesirable, true, "the response disregards the partner's last turn"),
        behavior("!Rel_b", Undesirable, true, "the response breaks into the topic with unrelated content"),
        behavior("Fol_b", Desirable, false, "the response builds on or asks about the previous turn"),
        behavior("Top_b", Neutral, false, "the response opens a new topic"),
    ];
    for kind in [LabelKind::LikertDialogue, LabelKind::LikertTurn, LabelKind::Comparative] {
        labels.extend(DIMENSIONS.iter().map(|(abbr, name)| dimension_label(abbr, name, kind)));
    }

    let mut tasks = vec![
        task("uninterpretable", Method::AbcEval, &["!Int_b"], Widget::Checkbox, 0.63),
        task("antisocial", Method::AbcEval, &["!Soc_b"], Widget::Checkbox, 0.44),
        task("personal_info", Method::AbcEval, &["Pre_b", "Lif_b"], Widget::PersonalInfo, 0.70),
        task("empathy", Method::AbcEval, &["Emp_b", "!Emp_b"], Widget::EmpathyRadio, 1.15),
        task("commonsense", Method::AbcEval, &["!Com_b"], Widget::Checkbox, 0.92),
        task("knowledge", Method::AbcEval, &["Fac_b", "!Fac_b"], Widget::Knowledge, 1.96),
        task("consistency", Method::AbcEval, &["!Sel_b", "!Par_b", "Red_b"], Widget::Consistency, 0.87),
        task("flow", Method::AbcEval, &["Ign_b", "!Rel_b", "Fol_b", "Top_b"], Widget::Flow, 1.87),
    ];
    for t in tasks.iter_mut().filter(|t| t.key == "uninterpretable" || t.key == "antisocial") {
        t.screening_threshold = Some(2);
    }
    let likert = Widget::Likert { min: LIKERT_MIN, max: LIKERT_MAX };
    let dialogue_labels: Vec<String> = DIMENSIONS.iter().map(|(a, _)| format!("{a}_d")).collect();
    let dl: Vec<&str> = dialogue_labels.iter().map(String::as_str).collect();
    tasks.push(task("dialogue_likert", Method::DialogueLikert, &dl, likert.clone(), 0.60));
    for (abbr, _) in DIMENSIONS {
        let label = format!("{abbr}_t");
        tasks.push(task(&format!("turn_likert_{}", abbr.to_lowercase()), Method::TurnLikert, &[&label], likert.clone(), 0.70));
    }
    let comparative_labels: Vec<String> = DIMENSIONS.iter().map(|(a, _)| format!("{a}_c")).collect();
    let cl: Vec<&str> = comparative_labels.iter().map(String::as_str).collect();
    tasks.push(task("comparative", Method::Comparative, &cl, Widget::PairChoice, 1.43));

    EvaluationSchema { labels, tasks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_valid() {
        builtin_schema().validate().unwrap();
    }

    #[test]
    fn counts() {
        let s = builtin_schema();
        assert_eq!(s.labels_of(LabelKind::BehaviorBinary).count(), 16);
        for kind in [LabelKind::LikertTurn, LabelKind::LikertDialogue, LabelKind::Comparative] {
            assert_eq!(s.labels_of(kind).count(), 8);
        }
        assert_eq!(s.tasks.len(), 18);
        assert_eq!(s.labels_per_conversation(), 40);
        assert_eq!(s.final_set().count(), 9);
    }

    #[test]
    fn group_sizes_in_table_order() {
        let s = builtin_schema();
        let sizes: Vec<usize> = s.tasks_for(Method::AbcEval).map(|t| t.labels.len()).collect();
        assert_eq!(sizes, vec![1, 1, 2, 2, 1, 2, 3, 4]);
    }

    #[test]
    fn thresholds() {
        let s = builtin_schema();
        let t = |k: &str| s.task(k).unwrap().screening_threshold.unwrap();
        assert_eq!(t("antisocial"), 2);
        assert_eq!(t("uninterpretable"), 2);
        assert_eq!(t("flow"), 3);
    }

    #[test]
    fn rejects_shared_label() {
        let mut s = builtin_schema();
        s.tasks[1].labels = vec!["!Int_b".into()];
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = builtin_schema();
        let back: EvaluationSchema = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
