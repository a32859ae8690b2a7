pub mod env;
pub mod policy;
pub mod seeding;
pub mod trajectory;
pub mod critic;
pub mod optimizer;
pub mod rollout;
pub mod llm;
pub mod harness;
