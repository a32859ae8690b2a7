use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proceed::critic::CritiqueRecord;
use proceed::llm::{parse_critic_response, ParseError};

fn record(score: u8, critique: &str, action: Option<&str>, reasoning: Option<&str>) -> CritiqueRecord {
    CritiqueRecord {
        score,
        critique: critique.into(),
        suggestion_action: action.map(Into::into),
        suggestion_reasoning: reasoning.map(Into::into),
    }
}

#[test]
fn search_critic_fixture() {
    let reply = "The query is too broad.\n``` json\n{\"score\": 3, \"critique\": \"The query names the wrong relation.\", \
\"suggestion_search_keywords\": \"[Ardenne founder, Ardenne founded by]\", \
\"suggestion_search_reasoning\": \"The question asks who founded it, so search for the founder.\"}\n```";
    assert_eq!(
        parse_critic_response(reply).unwrap(),
        record(
            3,
            "The query names the wrong relation.",
            Some("[Ardenne founder, Ardenne founded by]"),
            Some("The question asks who founded it, so search for the founder.")
        )
    );
}

#[test]
fn corridor_critic_fixture() {
    let reply = "```json\n{\"score\": 8, \"critique\": \"Moving toward the key is useful.\", \
\"suggestion_action\": \"take key\", \"suggestion_thought\": \"The key opens the locked door. \"}\n```";
    assert_eq!(
        parse_critic_response(reply).unwrap(),
        record(8, "Moving toward the key is useful.", Some("take key"), Some("The key opens the locked door. "))
    );
}

#[test]
fn list_valued_keywords_and_wrapped_object() {
    let reply = "```json\n[{\"score\": \"4\", \"critique\": \"meh\", \"suggestion_search_keywords\": [\"a\", \"b\"]}]\n```";
    assert_eq!(parse_critic_response(reply).unwrap(), record(4, "meh", Some("a; b"), None));
}

#[test]
fn out_of_range_and_missing_fields() {
    assert_eq!(
        parse_critic_response("```json\n{\"score\": 12}\n```"),
        Err(ParseError::ScoreOutOfRange(12.0))
    );
    assert!(matches!(
        parse_critic_response("```json\n{\"critique\": \"no score\"}\n```"),
        Err(ParseError::MalformedJson(_))
    ));
    assert_eq!(parse_critic_response(""), Err(ParseError::NoJsonBlock));
}

fn random_string(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "```", "json", "{", "}", "[", "]", "\"score\"", ":", ",", "\"critique\"", "1e400", "-3", "7.5", "\"", "\\",
        "null", "true", "é", "\u{0}", "\n", " ", "NaN", "```json", "\"suggestion_action\"",
    ];
    let n = rng.gen_range(0..40);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.8) {
                PIECES[rng.gen_range(0..PIECES.len())].to_string()
            } else {
                char::from_u32(rng.gen_range(0..0x11000)).map(String::from).unwrap_or_default()
            }
        })
        .collect()
}

#[test]
fn total_on_random_strings() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut parsed = 0;
    for _ in 0..10_000 {
        let s = random_string(&mut rng);
        if let Ok(r) = parse_critic_response(&s) {
            assert!(r.score <= 10);
            parsed += 1;
        }
    }
    // some random strings do form valid records; most do not
    assert!(parsed < 10_000);
}
