//! Renders every prompt template with placeholder values and parses a sample
//! critic reply. No network access is needed.

use std::collections::BTreeMap;
use std::error::Error;

use proceed::llm::{parse_critic_response, render, TemplateId};

fn main() -> Result<(), Box<dyn Error>> {
    for t in TemplateId::ALL {
        let bindings: BTreeMap<String, String> =
            t.placeholders().into_iter().map(|p| (p.clone(), format!("<{p}>"))).collect();
        let text = render(t, &bindings)?;
        println!("--- {} ({} chars)\n{}\n", t.name(), text.len(), text.lines().take(4).collect::<Vec<_>>().join("\n"));
    }
    let reply = "```json\n{\"score\": 2, \"critique\": \"the door is still locked\", \"suggestion_action\": \"take key\"}\n```";
    println!("{:#?}", parse_critic_response(reply)?);
    Ok(())
}
