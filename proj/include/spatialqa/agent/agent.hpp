#pragma once

#include "spatialqa/common/errors.hpp"
#include "spatialqa/corpus/manifest.hpp"
#include "spatialqa/llm/client.hpp"
#include "spatialqa/tools/backends.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spatialqa::agent {

using json = nlohmann::json;

/// Prompt assets, reproduced verbatim and embedded at build time.
namespace prompts {
extern const std::string_view planner;          // slot {action_details}
extern const std::string_view executor;         // slots {tool_plan}, {tool_results}
extern const std::string_view summarizer;       // slot {cot_steps}
extern const std::string_view direct;           // no slots
extern const std::string_view observer;         // {USER REQUEST}, {for each action in actions}, {for each demo in demo_examples}
extern const std::string_view observation;      // {OBSERVATION}
extern const std::string_view all_observation;  // {ALL_OBSERVATION}
extern const std::string_view react_examples;   // the observer's in-context demos
}  // namespace prompts

enum class Paradigm { PlanExecute, ReAct };
std::string_view to_string(Paradigm p);
/// "plan-execute" or "react"; throws ConfigError otherwise.
Paradigm paradigm_from(std::string_view name);

enum class Status { Ok, FallbackDirect, DowngradedCore };
std::string_view to_string(Status s);

struct AgentConfig {
    Paradigm paradigm = Paradigm::PlanExecute;
    int max_attempts = 3;
    int max_turns = 10;
    int max_frames = 32;
    llm::ChatConfig core;

    AgentConfig() { core.max_tokens = llm::max_tokens_for(llm::TokenTier::Agent); }
    /// Throws ConfigError when a bound is below 1.
    void validate() const;
};

class PlanError : public ParseError {
public:
    using ParseError::ParseError;
};

class SummarizeError : public ParseError {
public:
    using ParseError::ParseError;
};

struct PlanStep {
    std::string name;
    json arguments;  // validated and normalized
};
using Plan = std::vector<PlanStep>;
json plan_to_json(const Plan& plan);

struct CoreCall {
    std::string stage;
    std::string prompt;  // newest user message
    std::vector<std::string> media;
    std::string output;
    std::string error;  // set when the core call itself failed
};

struct StepRecord {
    std::string name;
    json arguments;
    tools::ToolResult result;
};

struct AttemptRecord {
    int attempt = 0;
    Plan plan;
    std::vector<StepRecord> steps;
    std::string cot;
    std::string answer;
    std::string error;  // why the attempt failed, empty on success
};

/// One ReAct turn: observer decision and what came back.
struct MemoryEntry {
    int turn = 0;
    std::string thought;
    json actions = json::array();
    json observation = json::object();
};

struct AgentTrace {
    Paradigm paradigm = Paradigm::PlanExecute;
    std::string sample_id;
    std::string request;
    std::vector<std::string> media;
    std::vector<CoreCall> calls;
    std::vector<AttemptRecord> attempts;
    std::vector<MemoryEntry> memory;
    int turns = 0;
    bool summarized = false;
    bool fallback = false;
    bool downgraded = false;
    std::vector<std::string> warnings;
    std::string answer;
    Status status = Status::Ok;
    double elapsed_ms = 0.0;

    /// Timings are left out unless asked for, keeping traces reproducible.
    json to_json(bool include_timings = false) const;
};

struct AgentResult {
    std::string answer;
    Status status = Status::Ok;
    AgentTrace trace;
};

/// The question as shown to agent cores: multi-choice options follow as
/// "A. text" lines.
std::string user_request(const corpus::Sample& s);

/// Extracts the fenced JSON plan and validates every step; media must be
/// referenced as image-N within `media_count`. Throws PlanError.
Plan parse_plan(std::string_view core_output, const tools::Registry& registry, std::size_t media_count);

/// Observer output as {"thought": str, "actions": [{"name", "arguments"}]},
/// or nullopt when it is not usable.
std::optional<json> parse_decision(std::string_view core_output);

/// Trimmed content of the first <answer> span, or nullopt.
std::optional<std::string> answer_span(std::string_view text);

/// True for answers that dodge the question ("cannot be determined", ...).
bool is_refusal(std::string_view answer);

/// JSON parse that tolerates trailing commas. Throws ParseError.
json parse_lenient_json(std::string_view text);

/// Plan-Execute and ReAct over one core and one toolbox. Stateless between
/// runs, so one instance may serve concurrent samples.
class Agent {
public:
    Agent(AgentConfig cfg, llm::ChatClient& core, const tools::Toolbox& tools);

    const AgentConfig& config() const { return cfg_; }

    /// Runs the configured paradigm, then finalize(). Never throws for
    /// per-sample failures.
    AgentResult run(const corpus::Sample& sample, const std::filesystem::path& media_root) const;

    AgentResult run_plan_execute(const corpus::Sample& sample, const std::filesystem::path& media_root) const;
    AgentResult run_react(const corpus::Sample& sample, const std::filesystem::path& media_root) const;

    // Stages; each records its core calls into `trace`.
    Plan make_plan(AgentTrace& trace) const;
    std::string execute_plan(const Plan& plan, AgentTrace& trace, std::vector<StepRecord>& steps) const;
    std::string summarize(const std::string& cot, AgentTrace& trace) const;
    /// Direct answer without tools; empty string signals failure.
    std::string fallback_direct(AgentTrace& trace) const;
    /// Replaces an empty answer with a bare-core answer.
    AgentResult finalize(AgentResult result, const corpus::Sample& sample, const std::filesystem::path& media_root) const;

private:
    AgentTrace start_trace(const corpus::Sample& sample, const std::filesystem::path& media_root, Paradigm p) const;
    /// Sends `conversation`, records the call, and returns the reply. Throws
    /// what the core throws, after recording.
    std::string call(AgentTrace& trace, const std::string& stage, const std::vector<llm::ChatTurn>& conversation) const;

    AgentConfig cfg_;
    llm::ChatClient& core_;
    const tools::Toolbox& tools_;
    std::string toolbox_text_;
};

}  // namespace spatialqa::agent
