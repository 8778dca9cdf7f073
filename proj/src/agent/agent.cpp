#include "spatialqa/agent/agent.hpp"

#include "spatialqa/common/text.hpp"
#include "spatialqa/eval/eval.hpp"
#include "spatialqa/qagen/templates.hpp"

#include <array>
#include <chrono>
#include <regex>

namespace spatialqa::agent {

namespace {

// Repeated verbatim from the direct prompt when re-asking after a refusal.
constexpr std::string_view kNeverRefuse =
    "**CRITICAL: You MUST always provide a reasonable answer. Never respond with 'cannot be determined', "
    "'none of the above', or similar phrases.**";

constexpr std::string_view kCorrective =
    "Your previous response could not be parsed. Respond with one JSON object of the form "
    "{\"thought\": \"...\", \"actions\": [{\"name\": \"...\", \"arguments\": {...}}]} and nothing else.";

std::string with_question(std::string prompt, const std::string& request) {
    prompt += "\n\nQuestion: ";
    prompt += request;
    return prompt;
}

std::string fill_slots(std::string_view text, std::initializer_list<std::pair<std::string_view, std::string>> slots) {
    std::vector<std::pair<std::string_view, std::string>> v(slots);
    return qagen::fill(text, v);
}

json step_json(const StepRecord& s) {
    json j{{"name", s.name}, {"arguments", s.arguments}};
    if (s.result.ok)
        j["result"] = s.result.payload;
    else
        j["error"] = s.result.error;
    return j;
}

llm::ChatTurn user(std::string text, std::vector<std::string> media = {}) {
    return {llm::Role::User, std::move(text), std::move(media)};
}

llm::ChatTurn assistant(std::string text) { return {llm::Role::Assistant, std::move(text), {}}; }

}  // namespace

std::string_view to_string(Paradigm p) { return p == Paradigm::PlanExecute ? "plan-execute" : "react"; }

Paradigm paradigm_from(std::string_view name) {
    std::string n = to_lower(trim(name));
    if (n == "plan-execute" || n == "pe") return Paradigm::PlanExecute;
    if (n == "react") return Paradigm::ReAct;
    throw ConfigError("unknown agent paradigm '" + std::string(name) + "' (plan-execute | react)");
}

std::string_view to_string(Status s) {
    switch (s) {
        case Status::Ok: return "ok";
        case Status::FallbackDirect: return "fallback-direct";
        case Status::DowngradedCore: return "downgraded-core";
    }
    return "ok";
}

void AgentConfig::validate() const {
    if (max_attempts < 1) throw ConfigError("agent max_attempts must be at least 1");
    if (max_turns < 1) throw ConfigError("agent max_turns must be at least 1");
    if (max_frames < 1) throw ConfigError("agent max_frames must be at least 1");
    core.validate();
}

json plan_to_json(const Plan& plan) {
    json arr = json::array();
    for (const auto& s : plan) arr.push_back({{"name", s.name}, {"arguments", s.arguments}});
    return arr;
}

json AgentTrace::to_json(bool include_timings) const {
    json j;
    j["paradigm"] = std::string(agent::to_string(paradigm));
    j["sample_id"] = sample_id;
    j["request"] = request;
    j["media"] = media;
    j["status"] = std::string(agent::to_string(status));
    j["answer"] = answer;
    j["turns"] = turns;
    j["summarized"] = summarized;
    j["fallback"] = fallback;
    j["downgraded"] = downgraded;
    j["warnings"] = warnings;

    json att = json::array();
    for (const auto& a : attempts) {
        json steps = json::array();
        for (const auto& s : a.steps) steps.push_back(step_json(s));
        att.push_back({{"attempt", a.attempt},
                       {"plan", plan_to_json(a.plan)},
                       {"steps", steps},
                       {"cot", a.cot},
                       {"answer", a.answer},
                       {"error", a.error}});
    }
    j["attempts"] = att;

    json mem = json::array();
    for (const auto& m : memory)
        mem.push_back({{"turn", m.turn}, {"thought", m.thought}, {"actions", m.actions}, {"observation", m.observation}});
    j["memory"] = mem;

    json cs = json::array();
    for (const auto& c : calls) {
        json cj{{"stage", c.stage}, {"prompt", c.prompt}, {"media", c.media}, {"output", c.output}};
        if (!c.error.empty()) cj["error"] = c.error;
        cs.push_back(cj);
    }
    j["calls"] = cs;
    if (include_timings) j["elapsed_ms"] = elapsed_ms;
    return j;
}

std::string user_request(const corpus::Sample& s) {
    std::string out = s.question;
    if (s.format == qagen::Format::MultiChoice) {
        for (std::size_t i = 0; i < s.options.size(); ++i) {
            out += '\n';
            out += static_cast<char>('A' + i);
            out += ". ";
            out += s.options[i];
        }
    }
    return out;
}

json parse_lenient_json(std::string_view text) {
    // Drop commas that directly precede a closing bracket, outside strings.
    std::string cleaned;
    cleaned.reserve(text.size());
    bool in_string = false, escaped = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            cleaned += c;
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        if (c == ',') {
            std::size_t k = i + 1;
            while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
            if (k < text.size() && (text[k] == ']' || text[k] == '}')) continue;
        }
        cleaned += c;
    }
    try {
        return json::parse(cleaned);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

Plan parse_plan(std::string_view core_output, const tools::Registry& registry, std::size_t media_count) {
    static const std::regex fence(R"(```(?:json)?[ \t]*\r?\n([\s\S]*?)```)", std::regex::icase);
    std::string text(core_output);
    std::smatch m;
    if (!std::regex_search(text, m, fence)) throw PlanError("no fenced JSON block in planner output");

    json doc;
    try {
        doc = parse_lenient_json(m[1].str());
    } catch (const ParseError& e) {
        throw PlanError(std::string("plan is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw PlanError("plan must be a JSON list of tool calls");

    std::vector<std::string> media;
    for (std::size_t i = 0; i < media_count; ++i) media.push_back("image-" + std::to_string(i));

    Plan plan;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& step = doc[i];
        std::string where = "step " + std::to_string(i + 1);
        if (!step.is_object() || !step.contains("name") || !step["name"].is_string())
            throw PlanError(where + ": expected an object with a string \"name\"");
        std::string name = step["name"].get<std::string>();
        const tools::ToolSpec* spec = registry.find(name);
        if (!spec) throw PlanError(where + ": unknown tool '" + name + "'");
        json args = step.value("arguments", json::object());
        if (!args.is_object()) throw PlanError(where + ": arguments must be an object");
        try {
            args = tools::validate_arguments(*spec, args);
            tools::resolve_media_refs(*spec, args, media, true);
        } catch (const Error& e) {
            throw PlanError(where + " (" + name + "): " + e.what());
        }
        plan.push_back({name, std::move(args)});
    }
    return plan;
}

std::optional<json> parse_decision(std::string_view core_output) {
    std::string text(core_output);
    auto open = text.find('{');
    auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    json doc;
    try {
        doc = parse_lenient_json(std::string_view(text).substr(open, close - open + 1));
    } catch (const ParseError&) {
        return std::nullopt;
    }
    if (!doc.is_object() || !doc.contains("actions") || !doc["actions"].is_array()) return std::nullopt;
    json out{{"thought", ""}, {"actions", json::array()}};
    if (doc.contains("thought")) {
        if (doc["thought"].is_string())
            out["thought"] = doc["thought"];
        else if (!doc["thought"].is_null())
            return std::nullopt;
    }
    for (const auto& a : doc["actions"]) {
        if (!a.is_object() || !a.contains("name") || !a["name"].is_string()) return std::nullopt;
        json args = a.value("arguments", json::object());
        if (!args.is_object()) return std::nullopt;
        out["actions"].push_back({{"name", a["name"]}, {"arguments", args}});
    }
    return out;
}

std::optional<std::string> answer_span(std::string_view text) {
    static const std::regex span(R"(<answer>([\s\S]*?)</answer>)", std::regex::icase);
    std::string s(text);
    std::smatch m;
    if (!std::regex_search(s, m, span)) return std::nullopt;
    return trim(m[1].str());
}

bool is_refusal(std::string_view answer) {
    static constexpr std::array<std::string_view, 8> phrases{
        "cannot be determined", "can not be determined", "can't be determined", "none of the above",
        "cannot be decided",    "can not be decided",    "unable to determine", "cannot determine"};
    std::string a = normalize_space(answer);
    for (auto p : phrases)
        if (a.find(p) != std::string::npos) return true;
    return false;
}

Agent::Agent(AgentConfig cfg, llm::ChatClient& core, const tools::Toolbox& tools)
    : cfg_(std::move(cfg)), core_(core), tools_(tools), toolbox_text_(tools::render_toolbox_text(tools.registry())) {
    cfg_.validate();
}

AgentTrace Agent::start_trace(const corpus::Sample& sample, const std::filesystem::path& media_root,
                              Paradigm p) const {
    AgentTrace t;
    t.paradigm = p;
    t.sample_id = sample.id;
    t.request = user_request(sample);
    t.media = eval::build_turn(sample, media_root, false, cfg_.max_frames).media;
    return t;
}

std::string Agent::call(AgentTrace& trace, const std::string& stage,
                        const std::vector<llm::ChatTurn>& conversation) const {
    CoreCall rec;
    rec.stage = stage;
    if (!conversation.empty()) {
        rec.prompt = conversation.back().text;
        rec.media = conversation.back().media;
    }
    try {
        rec.output = core_.chat(conversation, cfg_.core);
    } catch (const std::exception& e) {
        rec.error = e.what();
        trace.calls.push_back(std::move(rec));
        throw;
    }
    trace.calls.push_back(rec);
    return rec.output;
}

Plan Agent::make_plan(AgentTrace& trace) const {
    std::string prompt = with_question(fill_slots(prompts::planner, {{"action_details", toolbox_text_}}), trace.request);
    std::string out = call(trace, "planner", {user(prompt, trace.media)});
    return parse_plan(out, tools_.registry(), trace.media.size());
}

std::string Agent::execute_plan(const Plan& plan, AgentTrace& trace, std::vector<StepRecord>& steps) const {
    steps.clear();
    if (plan.empty()) return {};
    json results = json::array();
    for (const auto& s : plan) {
        StepRecord rec{s.name, s.arguments, tools_.invoke(s.name, s.arguments, trace.media)};
        rec.result.latency_ms = 0.0;  // kept out of traces
        results.push_back(step_json(rec));
        steps.push_back(std::move(rec));
    }
    std::string prompt = with_question(fill_slots(prompts::executor, {{"tool_plan", tools::prompt_json(plan_to_json(plan))},
                                                                      {"tool_results", tools::prompt_json(results)}}),
                                       trace.request);
    return trim(call(trace, "executor", {user(prompt)}));
}

std::string Agent::summarize(const std::string& cot, AgentTrace& trace) const {
    std::string prompt = with_question(fill_slots(prompts::summarizer, {{"cot_steps", cot}}), trace.request);
    std::string out = call(trace, "summarizer", {user(prompt, trace.media)});
    auto ans = answer_span(out);
    if (!ans) throw SummarizeError("summarizer output has no <answer> span");
    if (ans->empty()) throw SummarizeError("summarizer <answer> span is empty");
    return *ans;
}

std::string Agent::fallback_direct(AgentTrace& trace) const {
    trace.fallback = true;
    std::vector<llm::ChatTurn> conv{user(with_question(std::string(prompts::direct), trace.request), trace.media)};
    auto extract = [](const std::string& out) {
        auto span = answer_span(out);
        return span ? *span : trim(out);
    };
    try {
        std::string out = call(trace, "direct", conv);
        std::string ans = extract(out);
        if (!ans.empty() && !is_refusal(ans)) return ans;
        trace.warnings.push_back("direct answer was empty or a refusal; asked again");
        conv.push_back(assistant(out));
        conv.push_back(user(std::string(kNeverRefuse)));
        out = call(trace, "direct-retry", conv);
        ans = extract(out);
        if (!ans.empty() && !is_refusal(ans)) return ans;
        trace.warnings.push_back("direct answer still empty or a refusal");
    } catch (const std::exception& e) {
        trace.warnings.push_back(std::string("direct call failed: ") + e.what());
    }
    return {};
}

AgentResult Agent::run_plan_execute(const corpus::Sample& sample, const std::filesystem::path& media_root) const {
    AgentResult res;
    res.trace = start_trace(sample, media_root, Paradigm::PlanExecute);
    AgentTrace& t = res.trace;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
        AttemptRecord rec;
        rec.attempt = attempt;
        try {
            rec.plan = make_plan(t);
            if (rec.plan.empty()) throw PlanError("empty plan");
            rec.cot = execute_plan(rec.plan, t, rec.steps);
            if (rec.cot.empty()) throw ParseError("executor returned no reasoning");
            rec.answer = summarize(rec.cot, t);
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        bool ok = rec.error.empty();
        t.attempts.push_back(std::move(rec));
        if (ok) {
            t.answer = t.attempts.back().answer;
            t.status = Status::Ok;
            res.answer = t.answer;
            res.status = t.status;
            return res;
        }
    }
    t.answer = fallback_direct(t);
    t.status = Status::FallbackDirect;
    res.answer = t.answer;
    res.status = t.status;
    return res;
}

AgentResult Agent::run_react(const corpus::Sample& sample, const std::filesystem::path& media_root) const {
    AgentResult res;
    res.trace = start_trace(sample, media_root, Paradigm::ReAct);
    AgentTrace& t = res.trace;

    std::vector<llm::ChatTurn> conv;
    std::string next = fill_slots(prompts::observer, {{"USER REQUEST", t.request},
                                                      {"for each action in actions", toolbox_text_},
                                                      {"for each demo in demo_examples", std::string(prompts::react_examples)}});
    std::vector<std::string> next_media = t.media;
    std::optional<std::string> final_answer;

    auto observe = [&](const json& obs) {
        next = fill_slots(prompts::observation, {{"OBSERVATION", tools::prompt_json(obs)}});
        next_media.clear();
    };

    try {
        for (int turn = 1; turn <= cfg_.max_turns && !final_answer; ++turn) {
            t.turns = turn;
            conv.push_back(user(next, next_media));
            std::string out = call(t, "observer", conv);
            conv.push_back(assistant(out));
            auto decision = parse_decision(out);
            if (!decision) {
                conv.push_back(user(std::string(kCorrective)));
                out = call(t, "observer-retry", conv);
                conv.push_back(assistant(out));
                decision = parse_decision(out);
            }
            if (!decision) {
                json obs{{"error", "response was not a valid action JSON"}};
                t.memory.push_back({turn, "", json::array(), obs});
                t.warnings.push_back("turn " + std::to_string(turn) + ": unparseable observer output");
                observe(obs);
                continue;
            }
            const json& actions = (*decision)["actions"];
            std::string thought = (*decision)["thought"].get<std::string>();
            if (actions.empty()) {
                t.memory.push_back({turn, thought, json::array(), json::object()});
                observe(json::object());
                continue;
            }
            if (actions.size() > 1)
                t.warnings.push_back("turn " + std::to_string(turn) + ": " + std::to_string(actions.size()) +
                                     " actions given, only the first was taken");
            const json& action = actions[0];
            std::string name = action["name"].get<std::string>();
            tools::ToolResult r = tools_.invoke(name, action["arguments"], t.media);
            if (name == "Terminate" && r.ok && r.payload.contains("answer") && r.payload["answer"].is_string()) {
                final_answer = r.payload["answer"].get<std::string>();
                break;
            }
            json obs = r.observation();
            t.memory.push_back({turn, thought, json::array({action}), obs});
            observe(obs);
        }

        if (!final_answer) {
            t.summarized = true;
            json all = json::array();
            for (const auto& m : t.memory)
                all.push_back({{"turn", m.turn}, {"actions", m.actions}, {"observation", m.observation}});
            conv.push_back(user(fill_slots(prompts::all_observation, {{"ALL_OBSERVATION", tools::prompt_json(all)}})));
            std::string out = call(t, "final", conv);
            std::string ans;
            if (auto d = parse_decision(out)) {
                for (const auto& a : (*d)["actions"]) {
                    if (a["name"] != "Terminate") continue;
                    auto r = tools_.invoke("Terminate", a["arguments"], t.media);
                    if (r.ok) ans = r.payload.value("answer", "");
                    break;
                }
            }
            if (ans.empty())
                if (auto span = answer_span(out)) ans = *span;
            final_answer = ans;
        }
    } catch (const std::exception& e) {
        t.warnings.push_back(std::string("core call failed: ") + e.what());
    }

    t.answer = trim(final_answer.value_or(""));
    t.status = Status::Ok;
    res.answer = t.answer;
    res.status = t.status;
    return res;
}

AgentResult Agent::finalize(AgentResult result, const corpus::Sample& sample,
                            const std::filesystem::path& media_root) const {
    AgentTrace& t = result.trace;
    if (!trim(result.answer).empty()) return result;
    t.downgraded = true;
    t.status = Status::DowngradedCore;
    std::string ans;
    try {
        llm::ChatTurn turn = eval::build_turn(sample, media_root, false, cfg_.max_frames);
        ans = trim(call(t, "bare-core", {turn}));
    } catch (const std::exception& e) {
        t.warnings.push_back(std::string("bare core call failed: ") + e.what());
    }
    t.answer = ans;
    result.answer = ans;
    result.status = t.status;
    return result;
}

AgentResult Agent::run(const corpus::Sample& sample, const std::filesystem::path& media_root) const {
    auto start = std::chrono::steady_clock::now();
    AgentResult res = cfg_.paradigm == Paradigm::PlanExecute ? run_plan_execute(sample, media_root)
                                                             : run_react(sample, media_root);
    res = finalize(std::move(res), sample, media_root);
    res.trace.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace spatialqa::agent
