//! Synthetic studies with known ground truth: corpus generation with planted
//! behavior rates, gold training bundles, scripted annotators and an
//! in-process campaign driver.
//!
//! Planted rates are realized exactly: a bot with rate `r` over `n` bot turns
//! gets `round(r * n)` flagged turns placed uniformly at random. Labels that
//! share a widget choice (e.g. `Emp_b` / `!Emp_b`) are assigned from one
//! shuffle so a turn never carries both.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::campaign::{
    CampaignConfig, CampaignError, Durability, GoldBundle, GoldConversation, GoldTurn, ManualClock, Store, StoreOptions, TrainingStep,
    Verdict,
};
use crate::corpus::{
    builtin_schema, Choice, Conversation, Corpus, CorpusError, CorpusFile, EvaluationSchema, InteractorJudgment, LabelKind, Method,
    Polarity, Speaker, TaskDef, Turn, LIKERT_MAX, LIKERT_MIN,
};
use crate::metrics::{answer_for_labels, derive_behavior_labels, enumerate_answers, Payload, TurnAnswer, TurnRating, WidgetAnswer};

/// Label groups realized by one widget choice; members are mutually exclusive.
pub const EXCLUSIVE_GROUPS: [[&str; 2]; 3] = [["Emp_b", "!Emp_b"], ["Fac_b", "!Fac_b"], ["Top_b", "Fol_b"]];

const LIKERT_WEIGHTS: [f64; 5] = [0.10, 0.20, 0.35, 0.25, 0.10];
const CHOICE_WEIGHTS: [(Choice, f64); 3] = [(Choice::First, 0.4), (Choice::Second, 0.4), (Choice::Neither, 0.2)];

const HUMAN_LINES: [&str; 8] = [
    "hi there, how has your week been going so far",
    "i just got back from a long hike with my dog",
    "do you have any favorite books or movies lately",
    "what do you think about learning a new language",
    "i am trying to cook more at home this year",
    "my sister is visiting next weekend and i need ideas",
    "have you ever been to the coast in winter",
    "i am not sure what to do about my job",
];
const BOT_LINES: [&str; 8] = [
    "that sounds lovely, tell me more about it",
    "i really enjoy mystery novels with a clever twist",
    "learning a language is a great way to meet people",
    "cooking at home can save a lot of money",
    "the coast is quiet and beautiful in the cold months",
    "what kind of activities does your sister enjoy",
    "i think it helps to write down what matters most to you",
    "my favorite food is pizza, what is yours",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub bots: Vec<String>,
    pub dialogues_per_bot: usize,
    pub min_bot_turns: usize,
    pub max_bot_turns: usize,
    /// Rate of every behavior label not listed in `planted`.
    pub base_rate: f64,
    /// Behavior label -> bot -> rate; bots missing from the map get `base_rate`.
    pub planted: BTreeMap<String, BTreeMap<String, f64>>,
    pub seed: u64,
}

impl StudyConfig {
    /// Four bots, 32 dialogues each, with two planted behavior contrasts:
    /// `!Com_b` 0.05 vs 0.30 and `Ign_b` 0.05 vs 0.30 along different splits.
    pub fn four_bots(seed: u64) -> Self {
        let bots: Vec<String> = ["bot-a", "bot-b", "bot-c", "bot-d"].map(String::from).to_vec();
        let split = |high: [&str; 2]| -> BTreeMap<String, f64> {
            bots.iter().map(|b| (b.clone(), if high.contains(&b.as_str()) { 0.30 } else { 0.05 })).collect()
        };
        let mut planted = BTreeMap::new();
        planted.insert("!Com_b".to_string(), split(["bot-c", "bot-d"]));
        planted.insert("Ign_b".to_string(), split(["bot-b", "bot-d"]));
        Self { bots, dialogues_per_bot: 32, min_bot_turns: 6, max_bot_turns: 10, base_rate: 0.10, planted, seed }
    }

    pub fn rate(&self, label: &str, bot: &str) -> f64 {
        self.planted.get(label).and_then(|m| m.get(bot)).copied().unwrap_or(self.base_rate)
    }

    /// Unordered bot pairs `(a, b)` with `a < b` in `bots` order.
    pub fn bot_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for i in 0..self.bots.len() {
            for j in i + 1..self.bots.len() {
                out.push((self.bots[i].clone(), self.bots[j].clone()));
            }
        }
        out
    }

    /// Whether `label` has different planted rates for `a` and `b`.
    pub fn differs(&self, label: &str, a: &str, b: &str) -> bool {
        (self.rate(label, a) - self.rate(label, b)).abs() > 1e-12
    }

    fn validate(&self, schema: &EvaluationSchema) -> Result<(), CorpusError> {
        let invalid = |m: String| CorpusError::Invalid { location: "study config".into(), message: m };
        if self.bots.len() < 2 {
            return Err(invalid("need at least two bots".into()));
        }
        if self.bots.iter().collect::<BTreeSet<_>>().len() != self.bots.len() {
            return Err(invalid("bot ids must be distinct".into()));
        }
        if (self.bots.len() * self.dialogues_per_bot) % 2 != 0 || self.dialogues_per_bot == 0 {
            return Err(invalid("dialogues must split into session pairs".into()));
        }
        if self.min_bot_turns == 0 || self.min_bot_turns > self.max_bot_turns {
            return Err(invalid("bot turn range must be non-empty and positive".into()));
        }
        for (label, per_bot) in &self.planted {
            match schema.label(label) {
                Some(d) if d.kind == LabelKind::BehaviorBinary => {}
                _ => return Err(invalid(format!("{label:?} is not a behavior label"))),
            }
            if let Some(b) = per_bot.keys().find(|b| !self.bots.contains(b)) {
                return Err(invalid(format!("rate for unknown bot {b:?}")));
            }
        }
        for bot in &self.bots {
            for l in schema.labels_of(LabelKind::BehaviorBinary) {
                let r = self.rate(&l.key, bot);
                if !(0.0..=1.0).contains(&r) {
                    return Err(invalid(format!("rate {r} for {} on {bot} outside [0, 1]", l.key)));
                }
            }
            for g in EXCLUSIVE_GROUPS {
                let total: f64 = g.iter().map(|l| self.rate(l, bot)).sum();
                if total > 1.0 + 1e-12 {
                    return Err(invalid(format!("exclusive labels {g:?} exceed 1 on {bot}")));
                }
            }
        }
        Ok(())
    }
}

/// Ground truth of a synthetic study.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Truth {
    /// Conversation -> bot turn index -> behavior labels present.
    pub behaviors: BTreeMap<String, BTreeMap<usize, BTreeSet<String>>>,
    /// Conversation -> dialogue Likert label -> rating.
    pub dialogue_likert: BTreeMap<String, BTreeMap<String, u8>>,
    /// Conversation -> turn Likert label -> bot turn index -> rating.
    pub turn_likert: BTreeMap<String, BTreeMap<String, BTreeMap<usize, u8>>>,
    /// Pair -> comparative label -> choice.
    pub comparative: BTreeMap<String, BTreeMap<String, Choice>>,
    /// Conversation -> latent quality behind the interactor's judgment.
    pub latent_quality: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticStudy {
    pub config: StudyConfig,
    pub corpus: Corpus,
    pub truth: Truth,
    pub gold: Vec<GoldBundle>,
}

/// Pairs `n` dialogues of every bot into cross-bot sessions, keeping the
/// per-combination counts within one of each other.
pub fn balanced_pairing(bots: usize, n: usize) -> Vec<(usize, usize)> {
    let mut remaining = vec![n; bots];
    let mut uses = vec![vec![0usize; bots]; bots];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..bots {
            for j in i + 1..bots {
                if remaining[i] == 0 || remaining[j] == 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bj)) => {
                        let (s, bs) = (remaining[i] + remaining[j], remaining[bi] + remaining[bj]);
                        s > bs || (s == bs && uses[i][j] < uses[bi][bj])
                    }
                };
                if better {
                    best = Some((i, j));
                }
            }
        }
        let Some((i, j)) = best else { break };
        remaining[i] -= 1;
        remaining[j] -= 1;
        uses[i][j] += 1;
        out.push((i, j));
    }
    out
}

fn likert_value(rng: &mut ChaCha8Rng) -> u8 {
    let w = WeightedIndex::new(LIKERT_WEIGHTS).expect("static weights");
    LIKERT_MIN + w.sample(rng) as u8
}

fn choice_value(rng: &mut ChaCha8Rng) -> Choice {
    CHOICE_WEIGHTS.choose_weighted(rng, |c| c.1).expect("static weights").0
}

fn make_conversation(id: String, bot: &str, interactor: String, pair: Option<String>, bot_turns: usize, rng: &mut ChaCha8Rng) -> Conversation {
    let mut turns = Vec::with_capacity(2 * bot_turns);
    for k in 0..bot_turns {
        let h = HUMAN_LINES.choose(rng).expect("non-empty");
        let b = BOT_LINES.choose(rng).expect("non-empty");
        turns.push(Turn::new(2 * k, Speaker::Human, *h));
        turns.push(Turn::new(2 * k + 1, Speaker::Bot, *b));
    }
    Conversation { id, bot_id: bot.into(), interactor_id: interactor, session_pair_id: pair, turns }
}

/// Generates corpus, truth and gold bundles for `config` over the builtin schema.
pub fn generate_study(config: &StudyConfig) -> Result<SyntheticStudy, CorpusError> {
    generate_study_with(config, builtin_schema())
}

pub fn generate_study_with(config: &StudyConfig, schema: EvaluationSchema) -> Result<SyntheticStudy, CorpusError> {
    config.validate(&schema)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counters = vec![0usize; config.bots.len()];
    let mut conversations = Vec::new();
    let mut pairs = Vec::new();
    for (k, (i, j)) in balanced_pairing(config.bots.len(), config.dialogues_per_bot).into_iter().enumerate() {
        let pid = format!("p{:03}", k + 1);
        let interactor = format!("u{:03}", k + 1);
        let (first, second) = if rng.random::<bool>() { (i, j) } else { (j, i) };
        let mut ids = Vec::new();
        for b in [first, second] {
            counters[b] += 1;
            let id = format!("{}-{:02}", config.bots[b], counters[b]);
            let n = rng.random_range(config.min_bot_turns..=config.max_bot_turns);
            conversations.push(make_conversation(id.clone(), &config.bots[b], interactor.clone(), Some(pid.clone()), n, &mut rng));
            ids.push(id);
        }
        pairs.push((pid, ids[0].clone(), ids[1].clone()));
    }

    let mut truth = Truth::default();
    for c in &conversations {
        truth.behaviors.insert(c.id.clone(), c.bot_turn_indices().into_iter().map(|t| (t, BTreeSet::new())).collect());
    }
    let behavior: Vec<String> = schema.labels_of(LabelKind::BehaviorBinary).map(|l| l.key.clone()).collect();
    let grouped: BTreeSet<&str> = EXCLUSIVE_GROUPS.iter().flatten().copied().collect();
    let mut groups: Vec<Vec<String>> = EXCLUSIVE_GROUPS
        .iter()
        .map(|g| g.iter().filter(|l| behavior.iter().any(|b| b == *l)).map(|l| l.to_string()).collect::<Vec<_>>())
        .filter(|g| !g.is_empty())
        .collect();
    groups.extend(behavior.iter().filter(|l| !grouped.contains(l.as_str())).map(|l| vec![l.clone()]));
    for bot in &config.bots {
        let slots: Vec<(String, usize)> = conversations
            .iter()
            .filter(|c| &c.bot_id == bot)
            .flat_map(|c| c.bot_turn_indices().into_iter().map(move |t| (c.id.clone(), t)))
            .collect();
        for group in &groups {
            let mut order = slots.clone();
            order.shuffle(&mut rng);
            let mut next = 0;
            for label in group {
                let k = ((config.rate(label, bot) * slots.len() as f64).round() as usize).min(slots.len() - next);
                for (cid, t) in &order[next..next + k] {
                    truth.behaviors.get_mut(cid).and_then(|m| m.get_mut(t)).expect("slot exists").insert(label.clone());
                }
                next += k;
            }
        }
    }

    let dialogue_labels: Vec<String> = schema.labels_of(LabelKind::LikertDialogue).map(|l| l.key.clone()).collect();
    let turn_labels: Vec<String> = schema.labels_of(LabelKind::LikertTurn).map(|l| l.key.clone()).collect();
    let comparative_labels: Vec<String> = schema.labels_of(LabelKind::Comparative).map(|l| l.key.clone()).collect();
    for c in &conversations {
        truth.dialogue_likert.insert(c.id.clone(), dialogue_labels.iter().map(|l| (l.clone(), likert_value(&mut rng))).collect());
        let per_label = turn_labels
            .iter()
            .map(|l| (l.clone(), c.bot_turn_indices().into_iter().map(|t| (t, likert_value(&mut rng))).collect()))
            .collect();
        truth.turn_likert.insert(c.id.clone(), per_label);
    }
    for (pid, _, _) in &pairs {
        truth.comparative.insert(pid.clone(), comparative_labels.iter().map(|l| (l.clone(), choice_value(&mut rng))).collect());
    }

    // interactor quality: behavior rates weighted by polarity, plus noise
    let noise = Normal::new(0.0, 0.5).expect("valid normal");
    let quality_d = dialogue_labels.iter().find(|l| schema.label(l).is_some_and(|d| d.is_quality())).cloned();
    let quality_c = comparative_labels.iter().find(|l| schema.label(l).is_some_and(|d| d.is_quality())).cloned();
    let mut judgments = Vec::new();
    for c in &conversations {
        let turns = &truth.behaviors[&c.id];
        let n = turns.len() as f64;
        let mut q = 3.5;
        for l in &behavior {
            let sign = match schema.label(l).map(|d| d.polarity) {
                Some(Polarity::Desirable) => 1.0,
                Some(Polarity::Undesirable) => -1.0,
                _ => 0.0,
            };
            q += 4.0 * sign * turns.values().filter(|s| s.contains(l)).count() as f64 / n;
        }
        q += noise.sample(&mut rng);
        truth.latent_quality.insert(c.id.clone(), q);
        if let Some(label) = &quality_d {
            let v = q.round().clamp(LIKERT_MIN as f64, LIKERT_MAX as f64) as u8;
            judgments.push(InteractorJudgment {
                conversation_id: Some(c.id.clone()),
                pair_id: None,
                dialogue_likert: BTreeMap::from([(label.clone(), v)]),
                comparative: BTreeMap::new(),
            });
        }
    }
    if let Some(label) = &quality_c {
        for (pid, a, b) in &pairs {
            let d = truth.latent_quality[b] - truth.latent_quality[a];
            let choice = if d.abs() < 0.15 {
                Choice::Neither
            } else if d > 0.0 {
                Choice::Second
            } else {
                Choice::First
            };
            judgments.push(InteractorJudgment {
                conversation_id: None,
                pair_id: Some(pid.clone()),
                dialogue_likert: BTreeMap::new(),
                comparative: BTreeMap::from([(label.clone(), choice)]),
            });
        }
    }
    let corpus = Corpus::new(CorpusFile { conversations, judgments }, schema.clone())?;
    let gold = gold_bundles(&schema, config.seed ^ 0x9e37_79b9_7f4a_7c15);
    Ok(SyntheticStudy { config: config.clone(), corpus, truth, gold })
}

/// Three-round gold bundles for every task that requires training.
pub fn gold_bundles(schema: &EvaluationSchema, seed: u64) -> Vec<GoldBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for task in schema.tasks.iter().filter(|t| t.requires_training) {
        let answers = enumerate_answers(&task.widget);
        let mut rounds = Vec::new();
        for round in 1..=crate::campaign::TRAINING_ROUNDS {
            let conv = make_conversation(format!("train-{}-{round}", task.key), "trainer", "trainer-user".into(), None, 6, &mut rng);
            let turns = conv
                .bot_turn_indices()
                .into_iter()
                .map(|turn| {
                    let a = if rng.random_bool(0.5) { &answers[0] } else { answers.choose(&mut rng).expect("non-empty") };
                    let flagged = derive_behavior_labels(task, a).expect("enumerated answers are legal");
                    let labels = task.labels.iter().map(|l| (l.clone(), flagged.contains(l))).collect();
                    let explanation = if flagged.is_empty() {
                        "none of the listed behaviors applies to this turn".to_string()
                    } else {
                        format!("this turn shows {}", flagged.iter().cloned().collect::<Vec<_>>().join(", "))
                    };
                    GoldTurn { turn, labels, explanation }
                })
                .collect();
            rounds.push(GoldConversation { task_key: task.key.clone(), round, conversation: conv, turns });
        }
        out.push(GoldBundle { task_key: task.key.clone(), rounds });
    }
    out
}

/// Answers matching the gold labels, except that the first `mistakes` bot
/// turns get an answer with a different label set.
pub fn training_answers(task: &TaskDef, gold: &GoldConversation, mistakes: usize) -> Vec<TurnAnswer> {
    let all = enumerate_answers(&task.widget);
    gold.turns
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let want = g.flagged();
            let answer = if i < mistakes {
                all.iter().find(|a| derive_behavior_labels(task, a).ok().as_ref() != Some(&want)).cloned()
            } else {
                answer_for_labels(task, &want)
            }
            .expect("validated gold is expressible");
            TurnAnswer { turn: g.turn, answer }
        })
        .collect()
}

impl SyntheticStudy {
    pub fn truth_labels(&self, conversation: &str, turn: usize) -> Option<&BTreeSet<String>> {
        self.truth.behaviors.get(conversation).and_then(|m| m.get(&turn))
    }

    /// Noise-free payload for `task` on `target` (conversation or pair id).
    pub fn scripted_payload(&self, task: &TaskDef, target: &str) -> Payload {
        self.noisy_payload(task, target, 0.0, &mut ChaCha8Rng::seed_from_u64(0))
    }

    /// Payload where each unit (turn, dimension) is replaced by a uniformly
    /// random legal value with probability `noise`.
    pub fn noisy_payload(&self, task: &TaskDef, target: &str, noise: f64, rng: &mut ChaCha8Rng) -> Payload {
        let flip = |rng: &mut ChaCha8Rng| noise > 0.0 && rng.random_bool(noise.min(1.0));
        match task.method {
            Method::AbcEval => {
                let all = enumerate_answers(&task.widget);
                let responses = self.truth.behaviors[target]
                    .iter()
                    .map(|(&turn, labels)| {
                        let answer: WidgetAnswer = if flip(rng) {
                            all.choose(rng).expect("non-empty").clone()
                        } else {
                            let own: BTreeSet<String> = labels.iter().filter(|l| task.has_label(l)).cloned().collect();
                            answer_for_labels(task, &own).expect("planted sets are expressible")
                        };
                        TurnAnswer { turn, answer }
                    })
                    .collect();
                Payload::Turns { responses }
            }
            Method::TurnLikert => {
                let label = &task.labels[0];
                let ratings = self.truth.turn_likert[target][label]
                    .iter()
                    .map(|(&turn, &v)| TurnRating { turn, value: if flip(rng) { rng.random_range(LIKERT_MIN..=LIKERT_MAX) } else { v } })
                    .collect();
                Payload::TurnRatings { ratings }
            }
            Method::DialogueLikert => {
                let ratings = self.truth.dialogue_likert[target]
                    .iter()
                    .filter(|(l, _)| task.has_label(l))
                    .map(|(l, &v)| (l.clone(), if flip(rng) { rng.random_range(LIKERT_MIN..=LIKERT_MAX) } else { v }))
                    .collect();
                Payload::DialogueRatings { ratings }
            }
            Method::Comparative => {
                let choices = self.truth.comparative[target]
                    .iter()
                    .filter(|(l, _)| task.has_label(l))
                    .map(|(l, &c)| {
                        let c = if flip(rng) { *[Choice::First, Choice::Second, Choice::Neither].choose(rng).expect("non-empty") } else { c };
                        (l.clone(), c)
                    })
                    .collect();
                Payload::PairChoices { choices }
            }
        }
    }
}

/// One simulated annotator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedAnnotator {
    pub id: String,
    /// Per-unit probability of a random answer.
    pub noise: f64,
    /// Mistaken turns in every screening round.
    pub screening_mistakes: u32,
}

impl ScriptedAnnotator {
    pub fn exact(id: &str) -> Self {
        Self { id: id.into(), noise: 0.0, screening_mistakes: 0 }
    }
}

/// Median minutes per target used to time simulated work; mirrors payment.
pub fn simulated_minutes(task: &TaskDef) -> f64 {
    (task.payment_usd * 3.0).max(0.5)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SimulationReport {
    pub submissions: usize,
    pub failed_screenings: Vec<(String, String)>,
    pub incomplete_tasks: Vec<String>,
}

/// Drives a campaign in-process: every annotator trains on every task that
/// requires it, then annotators take turns requesting work per task until
/// nothing is eligible. With a manual clock, each submission advances time by
/// a log-normal duration around [`simulated_minutes`].
pub fn simulate_campaign(
    store: &Store,
    study: &SyntheticStudy,
    annotators: &[ScriptedAnnotator],
    clock: Option<&ManualClock>,
    seed: u64,
) -> Result<SimulationReport, CampaignError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = store.schema().clone();
    let mut report = SimulationReport::default();
    for a in annotators {
        if store.annotator(&a.id).is_none() {
            store.create_annotator(&a.id, &a.id)?;
        }
    }
    for task in schema.tasks.iter().filter(|t| t.requires_training) {
        for a in annotators {
            loop {
                let r = match store.next_training(&a.id, &task.key) {
                    Ok(TrainingStep::Round(r)) => r,
                    Ok(TrainingStep::Passed { .. }) | Err(CampaignError::ScreeningFailed(_)) => break,
                    Err(e) => return Err(e),
                };
                let bundle = study.gold.iter().find(|b| b.task_key == task.key).ok_or_else(|| CampaignError::NoTrainingMaterial(task.key.clone()))?;
                let gold = bundle.round(r.round).expect("validated bundle");
                let answers = training_answers(task, gold, a.screening_mistakes as usize);
                let fb = store.submit_training(&a.id, &task.key, r.round, &answers)?;
                if fb.verdict == Verdict::Failed {
                    report.failed_screenings.push((a.id.clone(), task.key.clone()));
                }
            }
        }
    }
    for task in &schema.tasks {
        let mut active: Vec<&ScriptedAnnotator> = annotators.iter().collect();
        while !active.is_empty() {
            let mut still = Vec::new();
            for a in active {
                let asg = match store.assign(&a.id, &task.key) {
                    Ok(x) => x,
                    Err(CampaignError::NothingEligible(_) | CampaignError::CapReached { .. } | CampaignError::TrainingNotPassed(_)) => continue,
                    Err(e) => return Err(e),
                };
                let target = asg.conversation_id.as_deref().or(asg.pair_id.as_deref()).expect("assignment has a target");
                let payload = study.noisy_payload(task, target, a.noise, &mut rng);
                if let Some(c) = clock {
                    let d = LogNormal::new(simulated_minutes(task).ln(), 0.3).expect("valid log-normal");
                    c.advance(60.0 * d.sample(&mut rng));
                }
                store.submit_annotation(&a.id, &asg.id, payload, None)?;
                report.submissions += 1;
                still.push(a);
            }
            active = still;
        }
    }
    report.incomplete_tasks = store.status().tasks.into_iter().filter(|t| !t.complete).map(|t| t.task_key).collect();
    Ok(report)
}

/// Fixed start of simulated time so repeated simulations give identical records.
pub fn simulation_epoch() -> chrono::DateTime<chrono::Utc> {
    chrono::DateTime::parse_from_rfc3339("2024-01-01T00:00:00Z").expect("valid timestamp").with_timezone(&chrono::Utc)
}

/// Store, study and clock of a finished simulation.
pub struct SimulatedCampaign {
    pub store: Store,
    pub study: SyntheticStudy,
    pub clock: Arc<ManualClock>,
    pub report: SimulationReport,
}

/// Creates a store in `dir` for `study` (default config seeded from the
/// study, `double_pairs` doubly annotated pairs, buffered writes) and runs
/// every annotator to completion on a manual clock.
pub fn simulated_campaign(
    dir: &Path,
    study: SyntheticStudy,
    annotators: &[ScriptedAnnotator],
    double_pairs: usize,
) -> Result<SimulatedCampaign, CampaignError> {
    let seed = study.config.seed;
    let config = CampaignConfig::with_defaults("synthetic", &study.corpus, seed, double_pairs);
    let clock = Arc::new(ManualClock::new(simulation_epoch()));
    let options = StoreOptions { durability: Durability::Buffered, clock: clock.clone(), ..Default::default() };
    let store = Store::create(dir, &study.corpus, &config, &study.gold, options)?;
    let report = simulate_campaign(&store, &study, annotators, Some(&clock), seed)?;
    Ok(SimulatedCampaign { store, study, clock, report })
}

/// Writes `corpus.json` and `gold/<task>.json` under `dir`, the inputs the
/// CLI's `import` and `campaign create --gold` expect.
pub fn write_study(study: &SyntheticStudy, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("gold"))?;
    std::fs::write(dir.join("corpus.json"), study.corpus.to_json())?;
    for b in &study.gold {
        let text = serde_json::to_string_pretty(b).expect("gold serializes") + "\n";
        std::fs::write(dir.join("gold").join(format!("{}.json", b.task_key)), text)?;
    }
    Ok(())
}
