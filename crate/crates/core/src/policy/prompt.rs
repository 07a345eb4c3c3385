use std::fmt::Write;

use crate::action::ActionKind;
use crate::agent::VitalityBand;
use crate::policy::{PromptContext, ProposalContext};

/// Strategy vocabulary that must never appear in a rendered prompt.
pub const BANNED_HINT_WORDS: &[&str] = &["cooperate", "should", "tip", "hint", "recommend"];

fn action_line(kind: ActionKind) -> &'static str {
    match kind {
        ActionKind::Gather => "GATHER",
        ActionKind::Move => "MOVE [direction]",
        ActionKind::Attack => "ATTACK [target_id]",
        ActionKind::Trade => "TRADE [target_id] [offer] [request]",
        ActionKind::Rest => "REST",
        ActionKind::Train => "TRAIN [attribute]",
        ActionKind::Communicate => "COMMUNICATE [message]",
        ActionKind::Reproduce => "REPRODUCE [target_id]",
    }
}

/// Renders the decision prompt for one agent. Identical contexts give
/// identical bytes.
pub fn build_prompt(ctx: &PromptContext) -> String {
    let obs = &ctx.observation;
    let me = &obs.self_state;
    let mut p = String::new();
    // Writing into a String cannot fail.
    let _ = writeln!(p, "You are Agent {} in a survival arena.", me.id);
    p.push('\n');
    p.push_str("YOUR STATUS:\n");
    let _ = writeln!(p, "- Position: {}", me.position);
    let _ = writeln!(
        p,
        "- Food: {}, Tokens: {}, Health: {}/{}",
        me.food,
        me.tokens,
        me.health,
        me.max_health()
    );
    let _ = writeln!(p, "- Attributes: {}", me.attrs);
    if obs.variant == crate::config::EngineVariant::SexualSelection {
        let _ = writeln!(
            p,
            "- Role: {}, Vitality: {} ({})",
            me.role,
            me.vitality,
            VitalityBand::of(me.vitality).name()
        );
    }
    p.push('\n');

    p.push_str("NEARBY AGENTS (within 2 cells):\n");
    if obs.nearby.is_empty() {
        p.push_str("(none)\n");
    }
    for n in &obs.nearby {
        let _ = write!(
            p,
            "- Agent {} at {}: food ~{}, tokens ~{}",
            n.id, n.position, n.approx_food, n.approx_tokens
        );
        if let Some(role) = n.role {
            let _ = write!(p, ", role {role}");
        }
        if let Some(attrs) = n.attrs {
            let _ = write!(p, ", {attrs}");
        }
        if let Some(v) = n.vitality {
            let _ = write!(p, ", vitality {v}");
        }
        p.push('\n');
    }
    p.push('\n');

    p.push_str("RESOURCE NODES (within 2 cells):\n");
    if obs.nodes.is_empty() {
        p.push_str("(none)\n");
    }
    for n in &obs.nodes {
        let _ = writeln!(p, "- {} node at {}: stock {}", n.kind, n.position, n.stock);
    }
    p.push('\n');

    if !obs.recent_actions.is_empty() {
        let recent: Vec<String> = obs.recent_actions.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(p, "YOUR RECENT ACTIONS: {}", recent.join("; "));
        p.push('\n');
    }

    if !obs.messages.is_empty() {
        p.push_str("MESSAGES RECEIVED:\n");
        for m in &obs.messages {
            let _ = writeln!(p, "- Agent {}: \"{}\"", m.sender, m.text);
        }
        p.push('\n');
    }

    p.push_str("AVAILABLE ACTIONS:\n");
    let base: Vec<&str> = ctx
        .available_actions
        .iter()
        .filter(|k| ActionKind::SURVIVAL.contains(k))
        .map(|k| action_line(*k))
        .collect();
    // Two lines, as in the original layout.
    let split = base.len().min(3);
    let _ = writeln!(p, "{},", base[..split].join(", "));
    let _ = writeln!(p, "{}", base[split..].join(", "));
    for k in ctx
        .available_actions
        .iter()
        .filter(|k| !ActionKind::SURVIVAL.contains(k))
    {
        let _ = writeln!(p, "{}", action_line(*k));
    }
    p.push_str("Directions: N, E, S, W (two directions if SPD >= 5). Offer and request: <food>f<tokens>t, e.g. 4f0t.\n");
    p.push('\n');
    p.push_str("Choose exactly ONE action. Respond with the action name\nand parameters only.\n");
    p
}

/// Renders the chooser's accept/reject prompt.
pub fn build_proposal_prompt(ctx: &ProposalContext) -> String {
    let me = &ctx.chooser;
    let pr = &ctx.provider;
    let mut p = String::new();
    let _ = writeln!(p, "You are Agent {} in a survival arena.", me.id);
    p.push('\n');
    p.push_str("YOUR STATUS:\n");
    let _ = writeln!(p, "- Position: {}", me.position);
    let _ = writeln!(
        p,
        "- Food: {}, Tokens: {}, Health: {}/{}",
        me.food,
        me.tokens,
        me.health,
        me.max_health()
    );
    let _ = writeln!(p, "- Attributes: {}", me.attrs);
    let _ = writeln!(
        p,
        "- Role: {}, Vitality: {} ({})",
        me.role,
        me.vitality,
        VitalityBand::of(me.vitality).name()
    );
    p.push('\n');
    p.push_str("REPRODUCTION PROPOSAL:\n");
    let _ = writeln!(
        p,
        "Agent {} (provider) at {} proposes reproduction.",
        pr.id, pr.position
    );
    let _ = writeln!(
        p,
        "- Food: {}, Tokens: {}, Health: {}/{}",
        pr.food, pr.tokens, pr.health, pr.max_health
    );
    let _ = writeln!(p, "- Attributes: {}", pr.attrs);
    let _ = writeln!(
        p,
        "- Vitality: {} ({})",
        pr.vitality,
        VitalityBand::of(pr.vitality).name()
    );
    p.push('\n');
    if ctx.pays_on_reject {
        let _ = writeln!(
            p,
            "Evaluating costs you {} food + {} tokens whether you accept or reject.",
            ctx.chooser_food_cost, ctx.chooser_token_cost
        );
    } else {
        let _ = writeln!(
            p,
            "Accepting costs you {} food + {} tokens.",
            ctx.chooser_food_cost, ctx.chooser_token_cost
        );
    }
    p.push('\n');
    p.push_str("Respond with ACCEPT or REJECT only.\n");
    p
}

/// First line whose first word is ACCEPT or REJECT decides.
pub fn parse_verdict(text: &str) -> Option<bool> {
    text.lines().find_map(|line| {
        let word: String = line
            .trim()
            .trim_start_matches(['*', '`', '"', '\''])
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .collect();
        match word.to_ascii_uppercase().as_str() {
            "ACCEPT" => Some(true),
            "REJECT" => Some(false),
            _ => None,
        }
    })
}
