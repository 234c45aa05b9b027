//! ReAct agent loop over the netlist tools.
//!
//! The loop assembles the initial domain prompt, asks a chat-completion
//! backend for the next Thought/Action, parses the action JSON blob,
//! dispatches it to the session tools, and feeds the observation back —
//! until the model emits a valid "Final Answer" or the iteration cap hits.
//! With the scripted backend the whole loop is a pure function of
//! (session, transcript, config), which is what the replay tests pin down.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_score, ClusterConstraints, RawConstraints};
use crate::error::Result;
use crate::prompts::{
    netlist_topology_prompt, physical_layout_prompt, routability_prompt, system_guidance,
    GuidanceConfig,
};
use crate::tools::{render_tool_descriptors, Observation, Session, ToolCall};

/// Environment variable holding the bearer credential for the HTTP backend.
pub const LLM_API_KEY_ENV: &str = "CELLCLUST_LLM_API_KEY";

const SCAFFOLD_INSTRUCTION: &str =
    "Begin. Respond with a Thought and exactly one action JSON blob per step.\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub max_iterations: usize,
    pub llm_temperature: f64,
    pub stop_sequences: Vec<String>,
    pub retry_attempts: u32,
    pub retry_backoff_ms: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            max_iterations: 15,
            llm_temperature: 0.1,
            stop_sequences: vec!["Observation:".to_string()],
            retry_attempts: 3,
            retry_backoff_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: String) -> Self {
        ChatMessage {
            role: "user".into(),
            content,
        }
    }

    pub fn assistant(content: String) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("http {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("scripted transcript exhausted")]
    Exhausted,
    #[error("missing credentials: set {0}")]
    MissingCredentials(&'static str),
}

impl BackendError {
    /// Only transient failures are worth retrying.
    pub fn retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A stateless chat-completion backend; callable from concurrent runs.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> std::result::Result<String, BackendError>;
}

/// Canned responses returned in order; exhaustion is a backend error.
pub struct ScriptedBackend {
    responses: Vec<String>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(responses: Vec<String>) -> Self {
        ScriptedBackend {
            responses,
            cursor: Mutex::new(0),
        }
    }

    /// Parses a JSON-lines transcript: one JSON string per line.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut responses = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            responses.push(serde_json::from_str::<String>(line)?);
        }
        Ok(Self::new(responses))
    }

    /// Renders responses as a JSON-lines transcript.
    pub fn to_jsonl(responses: &[String]) -> String {
        let mut out = String::new();
        for response in responses {
            out.push_str(&serde_json::to_string(response).expect("string serializes"));
            out.push('\n');
        }
        out
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, _messages: &[ChatMessage]) -> std::result::Result<String, BackendError> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        match self.responses.get(*cursor) {
            Some(response) => {
                *cursor += 1;
                Ok(response.clone())
            }
            None => Err(BackendError::Exhausted),
        }
    }
}

/// OpenAI-compatible chat-completions backend.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    api_key: String,
    temperature: f64,
    stop: Vec<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    /// Reads the bearer credential from [`LLM_API_KEY_ENV`].
    pub fn new(
        endpoint: String,
        model: String,
        config: &AgentConfig,
    ) -> std::result::Result<Self, BackendError> {
        let api_key = std::env::var(LLM_API_KEY_ENV)
            .map_err(|_| BackendError::MissingCredentials(LLM_API_KEY_ENV))?;
        Ok(Self::with_api_key(endpoint, model, api_key, config))
    }

    pub fn with_api_key(
        endpoint: String,
        model: String,
        api_key: String,
        config: &AgentConfig,
    ) -> Self {
        HttpBackend {
            endpoint,
            model,
            api_key,
            temperature: config.llm_temperature,
            stop: config.stop_sequences.clone(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[ChatMessage]) -> std::result::Result<String, BackendError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "stop": self.stop,
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Http {
                status: status.as_u16(),
                body: text,
            });
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::MalformedResponse("no choices[0].message.content".into()))
    }
}

/// Retries transient backend failures with exponential backoff.
pub fn complete_with_retries(
    backend: &dyn ChatBackend,
    messages: &[ChatMessage],
    config: &AgentConfig,
) -> std::result::Result<String, BackendError> {
    let attempts = config.retry_attempts.max(1);
    let mut delay = config.retry_backoff_ms;
    let mut attempt = 0;
    loop {
        match backend.complete(messages) {
            Ok(text) => return Ok(text),
            Err(err) => {
                attempt += 1;
                if !err.retryable() || attempt >= attempts {
                    return Err(err);
                }
                std::thread::sleep(Duration::from_millis(delay));
                delay = delay.saturating_mul(2);
            }
        }
    }
}

/// A parsed model response.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedAction {
    Tool {
        thought: String,
        call: ToolCall,
    },
    FinalAnswer {
        thought: String,
        constraints: RawConstraints,
    },
    /// No usable action; `message` is the corrective observation to feed back.
    Invalid {
        thought: String,
        message: String,
    },
}

const NO_BLOB_MESSAGE: &str =
    "no action blob found; respond with a JSON blob containing action and action_input";

/// Extracts the last well-formed `{"action": ..., "action_input": ...}`
/// object from the model output; code fences and surrounding prose are
/// tolerated.
pub fn parse_action(llm_output: &str) -> ParsedAction {
    let mut last: Option<(usize, usize, serde_json::Value)> = None;
    for (offset, ch) in llm_output.char_indices() {
        if ch != '{' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&llm_output[offset..])
            .into_iter::<serde_json::Value>();
        if let Some(Ok(value)) = stream.next() {
            if value.get("action").is_some() && value.get("action_input").is_some() {
                last = Some((offset, stream.byte_offset(), value));
            }
        }
    }

    let Some((start, _, value)) = last else {
        return ParsedAction::Invalid {
            thought: tidy_thought(llm_output),
            message: NO_BLOB_MESSAGE.to_string(),
        };
    };
    let thought = tidy_thought(&llm_output[..start]);

    let Some(action) = value["action"].as_str().map(str::to_string) else {
        return ParsedAction::Invalid {
            thought,
            message: "the \"action\" field must be a string".to_string(),
        };
    };
    let input = value["action_input"].clone();

    if action == "Final Answer" {
        return match serde_json::from_value::<RawConstraints>(input) {
            Ok(constraints) => ParsedAction::FinalAnswer {
                thought,
                constraints,
            },
            Err(err) => ParsedAction::Invalid {
                thought,
                message: format!(
                    "invalid Final Answer action_input (expected {{\"<cluster>\": [\"<device>\", ...]}}): {err}"
                ),
            },
        };
    }

    let known = crate::tools::list_tools()
        .iter()
        .any(|spec| spec.name == action);
    if !known {
        return ParsedAction::Invalid {
            thought,
            message: format!(
                "unknown action \"{action}\"; valid actions: evaluate_clusters, \
                 get_group_devices_from_nets, save_potential_cluster, \
                 get_best_cluster_result, Final Answer"
            ),
        };
    }

    match serde_json::from_value::<ToolCall>(serde_json::json!({
        "tool": action,
        "arguments": input,
    })) {
        Ok(call) => ParsedAction::Tool { thought, call },
        Err(err) => ParsedAction::Invalid {
            thought,
            message: format!("invalid arguments for {action}: {err}"),
        },
    }
}

/// Strips scaffold residue (`Thought:` prefix, trailing `Action:` label,
/// opening code fences) around the reasoning text.
fn tidy_thought(text: &str) -> String {
    let mut t = text.trim();
    t = t.strip_prefix("Thought:").unwrap_or(t).trim();
    for suffix in ["```json", "```"] {
        if let Some(stripped) = t.strip_suffix(suffix) {
            t = stripped.trim_end();
        }
    }
    t = t.strip_suffix("Action:").unwrap_or(t).trim_end();
    t.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentAction {
    Tool {
        #[serde(flatten)]
        call: ToolCall,
    },
    FinalAnswer {
        constraints: RawConstraints,
    },
    Invalid {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub thought: String,
    pub action: AgentAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentOutcome {
    FinalAnswer,
    IterationCap,
    BackendError,
}

/// The full Thought/Action/Observation record of one agent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub steps: Vec<AgentStep>,
    pub outcome: AgentOutcome,
    /// Present iff the run ended with a valid Final Answer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_constraints: Option<ClusterConstraints>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_score: Option<f64>,
    /// Best saved snapshot, reported for every outcome.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_constraints: Option<ClusterConstraints>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend_error: Option<String>,
}

impl AgentTrace {
    /// The run's result: the final answer when present, otherwise the best
    /// saved snapshot.
    pub fn result_constraints(&self) -> Option<(&ClusterConstraints, f64)> {
        match (&self.final_constraints, self.final_score) {
            (Some(cc), Some(score)) => Some((cc, score)),
            _ => match (&self.best_constraints, self.best_score) {
                (Some(cc), Some(score)) => Some((cc, score)),
                _ => None,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Concatenates guidance, netlist topology, layout and routability sections
/// (when present), the tool descriptors, and the scaffold instruction.
pub fn build_initial_prompt(session: &Session, guidance: &GuidanceConfig) -> String {
    let mut sections = vec![system_guidance(guidance)];
    sections.push(netlist_topology_prompt(
        session.netlist(),
        session.current(),
        session.current_score(),
    ));
    if let Some(layout) = session.layout() {
        sections.push(physical_layout_prompt(layout));
    }
    if let Some(report) = session.routability() {
        sections.push(routability_prompt(report));
    }
    sections.push(render_tool_descriptors());
    sections.push(SCAFFOLD_INSTRUCTION.to_string());
    sections.join("\n")
}

/// Runs the Thought-Action-Observation loop until a valid Final Answer, the
/// iteration cap, or a backend failure. Transport errors preserve the
/// partial trace.
pub fn run_agent(
    session: &mut Session,
    backend: &dyn ChatBackend,
    config: &AgentConfig,
    guidance: &GuidanceConfig,
) -> AgentTrace {
    let mut conversation = vec![ChatMessage::user(build_initial_prompt(session, guidance))];
    let mut steps: Vec<AgentStep> = Vec::new();

    for _ in 0..config.max_iterations {
        let output = match complete_with_retries(backend, &conversation, config) {
            Ok(output) => output,
            Err(err) => {
                let (_, best) = session.best_snapshot();
                return AgentTrace {
                    steps,
                    outcome: AgentOutcome::BackendError,
                    final_constraints: None,
                    final_score: None,
                    best_constraints: Some(best.constraints.clone()),
                    best_score: Some(best.score.total),
                    backend_error: Some(err.to_string()),
                };
            }
        };
        conversation.push(ChatMessage::assistant(output.clone()));

        match parse_action(&output) {
            ParsedAction::Tool { thought, call } => {
                let observation = session.invoke(&call);
                conversation.push(ChatMessage::user(format!(
                    "Observation: {}",
                    observation.text
                )));
                steps.push(AgentStep {
                    thought,
                    action: AgentAction::Tool { call },
                    observation: Some(observation),
                });
            }
            ParsedAction::FinalAnswer {
                thought,
                constraints,
            } => match ClusterConstraints::validated(session.netlist(), &constraints) {
                Ok(cc) => {
                    let score =
                        cluster_score(session.netlist(), &cc).expect("validated constraints score");
                    steps.push(AgentStep {
                        thought,
                        action: AgentAction::FinalAnswer { constraints },
                        observation: None,
                    });
                    let (_, best) = session.best_snapshot();
                    return AgentTrace {
                        steps,
                        outcome: AgentOutcome::FinalAnswer,
                        final_constraints: Some(cc),
                        final_score: Some(score.total),
                        best_constraints: Some(best.constraints.clone()),
                        best_score: Some(best.score.total),
                        backend_error: None,
                    };
                }
                Err(report) => {
                    let observation = Observation {
                        text: report.to_string(),
                        ok: false,
                    };
                    conversation.push(ChatMessage::user(format!(
                        "Observation: {}",
                        observation.text
                    )));
                    steps.push(AgentStep {
                        thought,
                        action: AgentAction::FinalAnswer { constraints },
                        observation: Some(observation),
                    });
                }
            },
            ParsedAction::Invalid { thought, message } => {
                let observation = Observation {
                    text: message.clone(),
                    ok: false,
                };
                conversation.push(ChatMessage::user(format!(
                    "Observation: {}",
                    observation.text
                )));
                steps.push(AgentStep {
                    thought,
                    action: AgentAction::Invalid { error: message },
                    observation: Some(observation),
                });
            }
        }
    }

    let (_, best) = session.best_snapshot();
    AgentTrace {
        steps,
        outcome: AgentOutcome::IterationCap,
        final_constraints: None,
        final_score: None,
        best_constraints: Some(best.constraints.clone()),
        best_score: Some(best.score.total),
        backend_error: None,
    }
}
