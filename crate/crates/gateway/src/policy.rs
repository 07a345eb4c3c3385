use arena_core::policy::{
    build_prompt, build_proposal_prompt, parse_verdict, PolicyDecision, PolicyError, PolicySet,
    PromptContext, ProposalContext,
};
use tracing::warn;

use crate::{Gateway, GatewayError};

/// Every agent decision and chooser verdict comes from one model call.
/// Decisions for a turn go out as one bounded-concurrency batch.
#[derive(Debug)]
pub struct LlmPolicySet {
    gateway: Gateway,
    runtime: tokio::runtime::Runtime,
}

impl LlmPolicySet {
    pub fn new(gateway: Gateway) -> Result<Self, GatewayError> {
        let runtime = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .map_err(|e| GatewayError::Config(format!("cannot start runtime: {e}")))?;
        Ok(Self { gateway, runtime })
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }
}

impl PolicySet for LlmPolicySet {
    fn decide_all(
        &mut self,
        contexts: &[PromptContext],
    ) -> Vec<Result<PolicyDecision, PolicyError>> {
        let prompts: Vec<String> = contexts.iter().map(build_prompt).collect();
        let replies = self.runtime.block_on(self.gateway.batch_complete(&prompts));
        replies
            .into_iter()
            .zip(contexts)
            .map(|(reply, ctx)| match reply {
                Ok(text) => Ok(PolicyDecision::from_response(text)),
                Err(e) => {
                    warn!(agent = %ctx.agent(), error = %e, "decision call failed");
                    Err(PolicyError(e.to_string()))
                }
            })
            .collect()
    }

    /// An answer that is neither ACCEPT nor REJECT counts as a rejection.
    fn evaluate_proposal(&mut self, ctx: &ProposalContext) -> Result<bool, PolicyError> {
        let prompt = build_proposal_prompt(ctx);
        let reply = self
            .runtime
            .block_on(self.gateway.complete(&prompt))
            .map_err(|e| PolicyError(e.to_string()))?;
        Ok(parse_verdict(&reply).unwrap_or(false))
    }
}
