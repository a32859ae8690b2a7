//! Multi-hop search world with controllable retrieval noise.
//!
//! A task is a chain of facts `anchor -r1-> e1 -r2-> ... -> gold`. The agent
//! issues `Search(<entity> <relation>)` queries and finally `Answer(<entity>)`.
//! Every query returns three snippets; a snippet carries the true next-hop fact
//! with probability `(1 − ν)·q`, where `q` measures how well the query targets
//! the next unresolved hop, and otherwise names a plausible distractor entity.
//! Distractors enter the candidate-action set once observed, which is what
//! lets a poor query poison the following decisions.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{normalize, Difficulty, EnvDescription, EnvError, EnvKind, EnvView, Environment, StepOutcome};
use crate::policy::FeatureMap;
use crate::seeding;

pub const SNIPPETS_PER_QUERY: usize = 3;

const RELATIONS: [&str; 10] = [
    "director",
    "founder",
    "birthplace",
    "spouse",
    "employer",
    "mentor",
    "publisher",
    "headquarters",
    "rival",
    "successor",
];

const DISTRACTORS_PER_TASK: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Fact {
    fn sentence(&self) -> String {
        format!("The {} of {} is {}.", self.relation, self.subject, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTask {
    pub id: String,
    pub knowledge_base: Vec<Fact>,
    pub chain: Vec<Fact>,
    pub question: String,
    pub gold_answer: String,
    pub distractor_entities: Vec<String>,
    pub noise_level: f64,
}

impl SearchTask {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::InvalidTask(format!("{}: {m}", self.id)));
        if self.chain.is_empty() {
            return bad("empty chain");
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return bad("noise level outside [0, 1]");
        }
        if self.distractor_entities.is_empty() {
            return bad("no distractor entities");
        }
        for w in self.chain.windows(2) {
            if w[0].object != w[1].subject {
                return bad("chain is not contiguous");
            }
        }
        if self.chain.iter().any(|f| !self.knowledge_base.contains(f)) {
            return bad("chain fact missing from knowledge base");
        }
        if self.chain.last().map(|f| &f.object) != Some(&self.gold_answer) {
            return bad("chain does not end at the gold answer");
        }
        let gold = normalize(&self.gold_answer);
        if self.distractor_entities.iter().any(|d| normalize(d) == gold) {
            return bad("distractor equals gold answer");
        }
        Ok(())
    }

    pub fn hops(&self) -> usize {
        self.chain.len()
    }

    pub fn anchor(&self) -> &str {
        &self.chain[0].subject
    }

    /// Relations in the order the chain uses them.
    pub fn relations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.chain {
            if !out.contains(&f.relation) {
                out.push(f.relation.clone());
            }
        }
        out
    }
}

fn entity_name(rng: &mut ChaCha8Rng) -> String {
    const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr"];
    const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "ai"];
    const CODAS: [&str; 6] = ["", "n", "r", "s", "l", "nd"];
    let mut word = |syllables: usize| {
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
        }
        w.push_str(CODAS[rng.gen_range(0..CODAS.len())]);
        let mut c = w.chars();
        let first = c.next().expect("non-empty").to_ascii_uppercase();
        std::iter::once(first).chain(c).collect::<String>()
    };
    let first = word(2);
    let last = word(2);
    format!("{first} {last}")
}

pub(super) fn generate(id: String, difficulty: &Difficulty, seed: u64) -> Result<SearchTask, EnvError> {
    let (lo, hi) = difficulty.hops;
    if lo == 0 || lo > hi || hi > RELATIONS.len() {
        return Err(EnvError::InvalidTask(format!("hop range {lo}..={hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hops = rng.gen_range(lo..=hi);
    let mut names: Vec<String> = Vec::new();
    while names.len() < hops + 1 + DISTRACTORS_PER_TASK {
        let n = entity_name(&mut rng);
        // no name may contain another, so query matching is unambiguous
        let nn = normalize(&n);
        if names.iter().all(|m| {
            let mm = normalize(m);
            !mm.contains(&nn) && !nn.contains(&mm)
        }) {
            names.push(n);
        }
    }
    let mut rels: Vec<&str> = RELATIONS.to_vec();
    for i in 0..hops {
        let j = rng.gen_range(i..rels.len());
        rels.swap(i, j);
    }
    let chain: Vec<Fact> = (0..hops)
        .map(|k| Fact {
            subject: names[k].clone(),
            relation: rels[k].to_string(),
            object: names[k + 1].clone(),
        })
        .collect();
    let distractors: Vec<String> = names[hops + 1..].to_vec();
    let mut kb = chain.clone();
    for d in &distractors {
        let other = &distractors[rng.gen_range(0..distractors.len())];
        if other != d {
            kb.push(Fact {
                subject: d.clone(),
                relation: RELATIONS[rng.gen_range(0..RELATIONS.len())].to_string(),
                object: other.clone(),
            });
        }
    }
    let mut question = String::from("What is");
    for f in chain.iter().rev() {
        question.push_str(&format!(" the {} of", f.relation));
    }
    question.push_str(&format!(" {}?", chain[0].subject));
    let task = SearchTask {
        id,
        knowledge_base: kb,
        gold_answer: chain[hops - 1].object.clone(),
        chain,
        question,
        distractor_entities: distractors,
        noise_level: difficulty.noise_level,
    };
    task.validate()?;
    Ok(task)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snippet {
    pub text: String,
    pub entity: String,
    pub is_true: bool,
}

/// Draws the three result snippets for one query.
///
/// Each slot independently shows `true_fact` with probability `(1 − ν)·q`;
/// otherwise it shows `"The <relation> of <entity> is <d>."` for a
/// distractor `d`.
pub fn search_noise_model(
    quality: f64,
    nu: f64,
    true_fact: Option<&Fact>,
    queried: (&str, &str),
    distractors: &[String],
    rng: &mut dyn RngCore,
) -> Vec<Snippet> {
    let p_true = (1.0 - nu) * quality;
    (0..SNIPPETS_PER_QUERY)
        .map(|_| {
            let u: f64 = rng.gen();
            match true_fact {
                Some(f) if u < p_true => Snippet {
                    text: f.sentence(),
                    entity: f.object.clone(),
                    is_true: true,
                },
                _ => {
                    let d = &distractors[rng.gen_range(0..distractors.len())];
                    Snippet {
                        text: format!("The {} of {} is {}.", queried.1, queried.0, d),
                        entity: d.clone(),
                        is_true: false,
                    }
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Parsed {
    Search(String),
    Answer(String),
    Invalid,
}

fn parse_action(action: &str) -> Parsed {
    let a = action.trim();
    let inner = |prefix: &str| -> Option<String> {
        let head = a.get(..prefix.len())?;
        if head.eq_ignore_ascii_case(prefix) && a.ends_with(')') {
            a.get(prefix.len()..a.len() - 1).map(|s| s.trim().to_string())
        } else {
            None
        }
    };
    if let Some(q) = inner("search(") {
        Parsed::Search(q)
    } else if let Some(x) = inner("answer(") {
        Parsed::Answer(x)
    } else {
        Parsed::Invalid
    }
}

#[derive(Debug, Clone)]
pub struct SearchEnv {
    task: Arc<SearchTask>,
    relations: Arc<Vec<String>>,
    /// Every entity the task knows about, longest names first.
    entities: Arc<Vec<String>>,
    max_steps: usize,
    rng: ChaCha8Rng,
    steps_taken: usize,
    resolved: usize,
    seen: Vec<String>,
    last_observed: Vec<String>,
    issued: Vec<String>,
    last_observation: String,
    answered: Option<String>,
    done: bool,
    success: bool,
}

impl SearchEnv {
    pub fn new(task: SearchTask, max_steps: usize) -> Result<Self, EnvError> {
        task.validate()?;
        if max_steps == 0 {
            return Err(EnvError::InvalidTask("max_steps must be positive".into()));
        }
        let relations = task.relations();
        let mut entities: Vec<String> = task.chain.iter().map(|f| f.subject.clone()).collect();
        entities.push(task.gold_answer.clone());
        entities.extend(task.distractor_entities.iter().cloned());
        entities.sort_by_key(|e| std::cmp::Reverse(e.len()));
        let anchor = task.anchor().to_string();
        Ok(Self {
            relations: Arc::new(relations),
            entities: Arc::new(entities),
            max_steps,
            rng: ChaCha8Rng::seed_from_u64(0),
            steps_taken: 0,
            resolved: 0,
            seen: vec![anchor.clone()],
            last_observed: vec![anchor],
            issued: Vec::new(),
            last_observation: String::new(),
            answered: None,
            done: false,
            success: false,
            task: Arc::new(task),
        })
    }

    pub fn task(&self) -> &SearchTask {
        &self.task
    }

    /// Number of chain hops whose true fact has been observed.
    pub fn resolved_hops(&self) -> usize {
        self.resolved
    }

    pub fn seen_entities(&self) -> &[String] {
        &self.seen
    }

    fn analyze_query(&self, query: &str) -> (Option<&str>, Option<&str>) {
        let q = normalize(query);
        let entity = self
            .entities
            .iter()
            .find(|e| q.contains(&normalize(e)))
            .map(String::as_str);
        let relation = RELATIONS.iter().copied().find(|r| q.split(' ').any(|w| w == *r));
        (entity, relation)
    }

    /// 1 for the next hop's (entity, relation), 0.5 for its entity only, else 0.
    pub fn query_quality(&self, query: &str) -> f64 {
        if self.resolved >= self.task.hops() {
            return 0.0;
        }
        let hop = &self.task.chain[self.resolved];
        match self.analyze_query(query) {
            (Some(e), Some(r)) if e == hop.subject && r == hop.relation => 1.0,
            (Some(e), _) if e == hop.subject => 0.5,
            _ => 0.0,
        }
    }

    fn run_query(&mut self, query: &str) -> String {
        let quality = self.query_quality(query);
        let (entity, relation) = self.analyze_query(query);
        let entity = entity.map(str::to_string).unwrap_or_else(|| query.to_string());
        let relation = relation.unwrap_or("related entity").to_string();
        let true_fact = self.task.chain.get(self.resolved).cloned();
        let snippets = search_noise_model(
            quality,
            self.task.noise_level,
            true_fact.as_ref(),
            (&entity, &relation),
            &self.task.distractor_entities,
            &mut self.rng,
        );
        let mut obs = format!("Search results for \"{query}\":");
        self.last_observed.clear();
        let mut resolved_now = false;
        for (i, s) in snippets.iter().enumerate() {
            obs.push_str(&format!("\n[{}] {}", i + 1, s.text));
            if s.is_true {
                resolved_now = true;
            }
            if !self.seen.contains(&s.entity) {
                self.seen.push(s.entity.clone());
            }
            if !self.last_observed.contains(&s.entity) {
                self.last_observed.push(s.entity.clone());
            }
        }
        if resolved_now {
            self.resolved += 1;
        }
        let key = normalize(query);
        if !self.issued.contains(&key) {
            self.issued.push(key);
        }
        obs
    }
}

impl FeatureMap for SearchEnv {
    fn feature_map_id(&self) -> &'static str {
        "search-v1"
    }

    fn feature_dim(&self) -> usize {
        6
    }

    /// `[targets next unresolved hop, follows last observed entity,
    ///   is answer, answer matches resolved chain, answer × budget fraction,
    ///   repeats an issued query]`
    fn features(&self, action: &str) -> Vec<f64> {
        let mut f = vec![0.0; 6];
        match parse_action(action) {
            Parsed::Search(q) => {
                f[0] = if self.query_quality(&q) == 1.0 { 1.0 } else { 0.0 };
                if let (Some(e), _) = self.analyze_query(&q) {
                    if self.last_observed.iter().any(|x| x == e) {
                        f[1] = 1.0;
                    }
                }
                if self.issued.contains(&normalize(&q)) {
                    f[5] = 1.0;
                }
            }
            Parsed::Answer(x) => {
                f[2] = 1.0;
                if self.resolved >= self.task.hops() && normalize(&x) == normalize(&self.task.gold_answer) {
                    f[3] = 1.0;
                }
                f[4] = self.steps_taken as f64 / self.max_steps as f64;
            }
            Parsed::Invalid => {}
        }
        f
    }
}

impl EnvView for SearchEnv {
    fn candidates(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.seen.len() * (self.relations.len() + 1));
        for e in &self.seen {
            for r in self.relations.iter() {
                out.push(format!("Search({e} {r})"));
            }
        }
        for e in &self.seen {
            out.push(format!("Answer({e})"));
        }
        out
    }

    fn state_text(&self) -> String {
        format!(
            "Question: {}\nStep {} of {}\nKnown entities: {}\nLast observation: {}",
            self.task.question,
            self.steps_taken,
            self.max_steps,
            self.seen.join(", "),
            self.last_observation
        )
    }

    fn oracle_step_value(&self, action: &str) -> Result<u8, EnvError> {
        Ok(match parse_action(action) {
            Parsed::Search(q) => (10.0 * self.query_quality(&q)).round() as u8,
            Parsed::Answer(x) => {
                if normalize(&x) == normalize(&self.task.gold_answer) {
                    10
                } else {
                    0
                }
            }
            Parsed::Invalid => 0,
        })
    }

    fn describe(&self) -> EnvDescription {
        EnvDescription {
            kind: EnvKind::Search,
            task_description: self.task.question.clone(),
            environment_config: format!(
                "A search tool returns the top {SNIPPETS_PER_QUERY} result snippets per query. \
                 Actions: Search(<entity> <relation>) or Answer(<entity>). Step budget: {}.",
                self.max_steps
            ),
        }
    }

    fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn last_observation(&self) -> &str {
        &self.last_observation
    }
}

impl Environment for SearchEnv {
    fn reset(&mut self, seed: u64) -> Result<String, EnvError> {
        let anchor = self.task.anchor().to_string();
        self.rng = ChaCha8Rng::seed_from_u64(seeding::derive(&[seeding::hash_str(&self.task.id), seed]));
        self.steps_taken = 0;
        self.resolved = 0;
        self.seen = vec![anchor.clone()];
        self.last_observed = vec![anchor];
        self.issued.clear();
        self.answered = None;
        self.done = false;
        self.success = false;
        self.last_observation = format!(
            "Question: {}\nUse Search(<entity> <relation>) to look up facts and Answer(<entity>) to answer.",
            self.task.question
        );
        Ok(self.last_observation.clone())
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        self.steps_taken += 1;
        let mut obs = match parse_action(action) {
            Parsed::Search(q) => self.run_query(&q),
            Parsed::Answer(x) => {
                self.success = normalize(&x) == normalize(&self.task.gold_answer);
                self.answered = Some(x.clone());
                self.done = true;
                format!("Answer submitted: {x}.")
            }
            Parsed::Invalid => "Unrecognized action. Use Search(<query>) or Answer(<entity>).".to_string(),
        };
        if !self.done && self.steps_taken >= self.max_steps {
            self.done = true;
            obs.push_str("\nStep budget exhausted.");
        }
        self.last_observation = obs.clone();
        Ok(StepOutcome {
            observation: obs,
            done: self.done,
            success: self.success,
        })
    }

    fn rng_stream_position(&self) -> u64 {
        self.rng.get_word_pos() as u64
    }

    fn verify_success(&self) -> bool {
        self.answered
            .as_deref()
            .is_some_and(|a| normalize(a) == normalize(&self.task.gold_answer))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(hops: usize, nu: f64) -> SearchTask {
        let d = Difficulty {
            hops: (hops, hops),
            noise_level: nu,
            ..Difficulty::default()
        };
        generate("t".into(), &d, 17).unwrap()
    }

    fn best_query(env: &SearchEnv) -> String {
        let hop = &env.task.chain[env.resolved];
        format!("Search({} {})", hop.subject, hop.relation)
    }

    #[test]
    fn generated_chain_has_requested_hops() {
        for h in 2..=4 {
            let t = task(h, 0.3);
            assert_eq!(t.chain.len(), h);
            assert!(t.validate().is_ok());
        }
    }

    #[test]
    fn reset_is_deterministic_and_mentions_question() {
        let t = task(2, 0.5);
        let mut a = SearchEnv::new(t.clone(), 10).unwrap();
        let mut b = SearchEnv::new(t.clone(), 10).unwrap();
        let oa = a.reset(3).unwrap();
        assert_eq!(oa, b.reset(3).unwrap());
        assert!(oa.contains(&t.question));
        assert_eq!(a.steps_taken(), 0);
    }

    #[test]
    fn gold_answer_succeeds() {
        let t = task(2, 0.5);
        let mut env = SearchEnv::new(t.clone(), 10).unwrap();
        env.reset(0).unwrap();
        let out = env.step(&format!("answer(  {}  )", t.gold_answer.to_uppercase())).unwrap();
        assert!(out.done && out.success);
        assert!(env.verify_success());
        assert!(matches!(env.step("Answer(x)"), Err(EnvError::StepAfterDone)));
    }

    #[test]
    fn search_returns_three_snippets() {
        let mut env = SearchEnv::new(task(3, 0.5), 10).unwrap();
        env.reset(1).unwrap();
        let q = best_query(&env);
        let out = env.step(&q).unwrap();
        assert_eq!(out.observation.lines().filter(|l| l.starts_with('[')).count(), 3);
    }

    #[test]
    fn noiseless_exact_query_always_resolves() {
        let mut env = SearchEnv::new(task(3, 0.0), 10).unwrap();
        env.reset(5).unwrap();
        for k in 0..3 {
            let q = best_query(&env);
            assert_eq!(env.oracle_step_value(&q).unwrap(), 10);
            let out = env.step(&q).unwrap();
            let hop = &env.task.chain[k];
            assert_eq!(out.observation.matches(&hop.object).count(), 3);
        }
        assert_eq!(env.resolved_hops(), 3);
        let gold = env.task.gold_answer.clone();
        assert!(env.candidates().contains(&format!("Answer({gold})")));
        assert_eq!(env.features(&format!("Answer({gold})"))[3], 1.0);
    }

    #[test]
    fn zero_quality_query_yields_only_distractors() {
        let t = task(2, 0.0);
        let mut env = SearchEnv::new(t.clone(), 10).unwrap();
        env.reset(2).unwrap();
        let q = format!("Search({} {})", t.distractor_entities[0], t.chain[0].relation);
        assert_eq!(env.query_quality(&q.replace("Search(", "").replace(')', "")), 0.0);
        env.step(&q).unwrap();
        assert_eq!(env.resolved_hops(), 0);
        assert!(!env.seen_entities().contains(&t.chain[0].object));
    }

    #[test]
    fn partial_query_scores_five() {
        let t = task(2, 0.2);
        let mut env = SearchEnv::new(t.clone(), 10).unwrap();
        env.reset(0).unwrap();
        let wrong_rel = RELATIONS.iter().find(|r| **r != t.chain[0].relation).unwrap();
        assert_eq!(env.oracle_step_value(&format!("Search({} {wrong_rel})", t.anchor())).unwrap(), 5);
        assert_eq!(env.oracle_step_value(&format!("Answer({})", t.anchor())).unwrap(), 0);
    }

    #[test]
    fn budget_exhaustion_ends_episode() {
        let t = task(2, 0.5);
        let mut env = SearchEnv::new(t.clone(), 3).unwrap();
        env.reset(0).unwrap();
        let q = format!("Search({} {})", t.distractor_entities[0], t.chain[0].relation);
        assert!(!env.step(&q).unwrap().done);
        assert!(!env.step(&q).unwrap().done);
        let last = env.step(&q).unwrap();
        assert!(last.done && !last.success);
    }

    #[test]
    fn distractor_entities_never_gold() {
        for s in 0..50 {
            let t = generate(format!("t{s}"), &Difficulty::default(), s).unwrap();
            assert!(!t.distractor_entities.contains(&t.gold_answer));
        }
    }
}
