#include <gtest/gtest.h>

#include "spatialqa/agent/agent.hpp"
#include "spatialqa/common/rng.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/eval/eval.hpp"
#include "support/agent_fixtures.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

using namespace spatialqa;
using namespace spatialqa::agent;
using llm::ScriptedClient;
using namespace spatialqa::testing;

namespace {

const std::string kData = SPATIALQA_TEST_DATA_DIR;

/// Responses that reproduce a recorded run: every successful call's output.
std::vector<std::string> replay_script(const AgentTrace& t) {
    std::vector<std::string> out;
    for (const auto& c : t.calls)
        if (c.error.empty()) out.push_back(c.output);
    return out;
}

void check_golden(const std::string& name, const json& trace) {
    const std::filesystem::path path = kData + "/golden/" + name;
    const std::string text = trace.dump(2) + "\n";
    if (std::getenv("SPATIALQA_UPDATE_GOLDEN")) {
        std::ofstream(path, std::ios::binary) << text;
        GTEST_SKIP() << "rewrote " << path;
    }
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(read_file(path), text) << "trace differs from " << path;
}

}  // namespace

// ---------------------------------------------------------------------------
// Prompt assets

TEST(Prompts, EmbeddedMatchAssetFiles) {
    const std::pair<std::string_view, std::string_view> items[] = {
        {"planner", prompts::planner},         {"executor", prompts::executor},
        {"summarizer", prompts::summarizer},   {"direct", prompts::direct},
        {"observer", prompts::observer},       {"observation", prompts::observation},
        {"all_observation", prompts::all_observation}, {"react_examples", prompts::react_examples}};
    for (auto [name, text] : items) {
        std::string file = read_file(kData + "/../assets/prompts/" + std::string(name) + ".txt");
        ASSERT_FALSE(file.empty()) << name;
        ASSERT_EQ(file.back(), '\n') << name;
        file.pop_back();
        EXPECT_EQ(text, file) << name;
    }
}

TEST(Prompts, PinnedHashes) {
    EXPECT_EQ(sha256_hex(prompts::planner), "bbb22c1ef0ce723d480c211568c20735e77e6e3d59b53e6f231208229dbbce7a");
    EXPECT_EQ(sha256_hex(prompts::executor), "8dfd39c593167eb93dcb9dddc64b97fa95ad5bd521be799ff01f629058ba672e");
    EXPECT_EQ(sha256_hex(prompts::summarizer), "3291cce0f3579a73c9b3a9be216282381bd395aa98c4a08ea09c1e1029ae237c");
    EXPECT_EQ(sha256_hex(prompts::direct), "aeaa5b4a6f6b25bc16522c9e4e457bb39c7b1f0bddf53a9cc13c9192d6c1fb7b");
    EXPECT_EQ(sha256_hex(prompts::observer), "9cd1944760b2ae1799642a455a89a0d9fbd09ea89e6c4ce3797f822a78fce47d");
    EXPECT_EQ(sha256_hex(prompts::observation), "27286aa6fbe859b718dd88a04df04d81f3c2326a50557bd6df9af9e5e2dcb57d");
    EXPECT_EQ(sha256_hex(prompts::all_observation),
              "8590566c8fc637af65f70f4b9832334f9f407efe4260690d20bfcc53f0ee5231");
    EXPECT_EQ(sha256_hex(prompts::react_examples), "c3d3744a7be5fed12c7759fa64e04534ec6f1221cc85f37f8ad3baa8e56ab6c9");
}

TEST(Prompts, SlotsPresentOnce) {
    auto count = [](std::string_view text, std::string_view slot) {
        std::size_t n = 0;
        for (auto p = text.find(slot); p != std::string_view::npos; p = text.find(slot, p + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count(prompts::planner, "{action_details}"), 1u);
    EXPECT_EQ(count(prompts::executor, "{tool_plan}"), 1u);
    EXPECT_EQ(count(prompts::executor, "{tool_results}"), 1u);
    EXPECT_EQ(count(prompts::summarizer, "{cot_steps}"), 1u);
    EXPECT_EQ(count(prompts::observer, "{USER REQUEST}"), 1u);
    EXPECT_EQ(count(prompts::observer, "{for each action in actions}"), 1u);
    EXPECT_EQ(count(prompts::observer, "{for each demo in demo_examples}"), 1u);
    EXPECT_EQ(count(prompts::observation, "{OBSERVATION}"), 1u);
    EXPECT_EQ(count(prompts::all_observation, "{ALL_OBSERVATION}"), 1u);
}

// ---------------------------------------------------------------------------
// Config and helpers

TEST(Config, DefaultsAndValidation) {
    AgentConfig cfg;
    EXPECT_EQ(cfg.max_attempts, 3);
    EXPECT_EQ(cfg.max_turns, 10);
    EXPECT_EQ(cfg.core.max_tokens, 4096);
    EXPECT_NO_THROW(cfg.validate());
    cfg.max_turns = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.max_turns = 10;
    cfg.max_attempts = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_EQ(paradigm_from("ReAct"), Paradigm::ReAct);
    EXPECT_EQ(paradigm_from("plan-execute"), Paradigm::PlanExecute);
    EXPECT_THROW(paradigm_from("tree-search"), ConfigError);
    EXPECT_EQ(to_string(Status::FallbackDirect), "fallback-direct");
    EXPECT_EQ(to_string(Status::DowngradedCore), "downgraded-core");
}

TEST(Helpers, UserRequestListsOptions) {
    EXPECT_EQ(user_request(dog_cat()),
              "Which object is closer to the camera, the dog or the cat?\nA. The dog\nB. The cat");
    corpus::Sample j = dog_cat();
    j.format = qagen::Format::Judgment;
    j.options.clear();
    EXPECT_EQ(user_request(j), j.question);
}

TEST(Helpers, AnswerSpan) {
    EXPECT_EQ(answer_span("<thinking>x</thinking><answer>  (B)\n</answer>"), "(B)");
    EXPECT_EQ(answer_span("<ANSWER>yes</ANSWER>"), "yes");
    EXPECT_EQ(answer_span("<answer>1</answer> <answer>2</answer>"), "1");
    EXPECT_EQ(answer_span("<answer></answer>"), "");
    EXPECT_FALSE(answer_span("the answer is (B)"));
    EXPECT_FALSE(answer_span("<answer>(B)"));
}

TEST(Helpers, Refusals) {
    EXPECT_TRUE(is_refusal("It cannot be determined from the image."));
    EXPECT_TRUE(is_refusal("None of the above"));
    EXPECT_TRUE(is_refusal("this can not be  decided"));
    EXPECT_FALSE(is_refusal("(C)"));
    EXPECT_FALSE(is_refusal("2.5 m"));
}

TEST(Helpers, LenientJson) {
    EXPECT_EQ(parse_lenient_json("[1, 2, ]"), json::array({1, 2}));
    EXPECT_EQ(parse_lenient_json("{\"a\": \"x, ]\", }"), json({{"a", "x, ]"}}));
    EXPECT_EQ(parse_lenient_json("{\"a\": \"q\\\", }\"}"), json({{"a", "q\", }"}}));
    EXPECT_THROW(parse_lenient_json("[1, 2"), ParseError);
}

// ---------------------------------------------------------------------------
// Plan parsing

TEST(PlanParse, GoldenPlanWithTrailingComma) {
    Plan p = parse_plan(kPlan, tools::register_catalog(), 1);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0].name, "LocalizeObjects");
    EXPECT_EQ(p[1].name, "EstimateObjectDepth");
    EXPECT_EQ(p[1].arguments["indoor_or_outdoor"], "outdoor");
    EXPECT_EQ(p[0].arguments["objects"], json::array({"dog", "cat"}));
}

TEST(PlanParse, Errors) {
    const auto& reg = tools::register_catalog();
    auto msg = [&](const std::string& text, std::size_t media = 1) -> std::string {
        try {
            parse_plan(text, reg, media);
        } catch (const PlanError& e) {
            return e.what();
        }
        return "";
    };
    EXPECT_NE(msg("I would localize the dog first."), "");
    EXPECT_NE(msg("```json\n{\"name\": \"LocalizeObjects\"}\n```"), "");
    EXPECT_NE(msg("```json\n[{\"name\": \"LocalizeObjects\",\n```"), "");
    std::string unknown = msg("```json\n[{\"name\": \"SegmentEverything\", \"arguments\": {}}]\n```");
    EXPECT_NE(unknown.find("SegmentEverything"), std::string::npos) << unknown;
    EXPECT_NE(unknown.find("step 1"), std::string::npos) << unknown;
    std::string bad_arg = msg(
        "```json\n[{\"name\": \"LocalizeObjects\", \"arguments\": {\"image\": \"image-0\", \"objects\": [\"a\"]}},"
        "{\"name\": \"LocalizeObjects\", \"arguments\": {\"image\": \"image-0\", \"color\": \"red\", \"objects\": [\"a\"]}}]\n```");
    EXPECT_NE(bad_arg.find("step 2"), std::string::npos) << bad_arg;
    EXPECT_NE(msg("```json\n[{\"name\": \"LocalizeObjects\", \"arguments\": {\"image\": \"image-3\", \"objects\": [\"a\"]}}]\n```"), "");
    EXPECT_NE(msg("```json\n[{\"name\": \"LocalizeObjects\", \"arguments\": {\"image\": \"/tmp/x.jpg\", \"objects\": [\"a\"]}}]\n```"), "");
    EXPECT_EQ(msg("```json\n[]\n```"), "");
    EXPECT_TRUE(parse_plan("```json\n[]\n```", reg, 1).empty());
}

TEST(DecisionParse, Shapes) {
    auto d = parse_decision("```json\n" + kFlowTurn + "\n```");
    ASSERT_TRUE(d);
    EXPECT_EQ((*d)["actions"].size(), 1u);
    EXPECT_EQ((*d)["actions"][0]["name"], "EstimateOpticalFlow");
    auto no_thought = parse_decision("{\"actions\": []}");
    ASSERT_TRUE(no_thought);
    EXPECT_EQ((*no_thought)["thought"], "");
    EXPECT_TRUE(parse_decision("{\"thought\": \"x\", \"actions\": [],}"));
    EXPECT_FALSE(parse_decision("I think the camera moved right."));
    EXPECT_FALSE(parse_decision("{\"thought\": \"x\"}"));
    EXPECT_FALSE(parse_decision("{\"thought\": \"x\", \"actions\": {\"name\": \"Terminate\"}}"));
    EXPECT_FALSE(parse_decision("{\"thought\": \"x\", \"actions\": [{\"arguments\": {}}]}"));
}

// ---------------------------------------------------------------------------
// Plan-Execute

TEST(PlanExecute, GoldenTrace) {
    Rig rig;
    ScriptedClient core({kPlan, kCot, kSummary});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    EXPECT_EQ(r.answer, "(A)");
    EXPECT_EQ(r.status, Status::Ok);
    EXPECT_EQ(stages(r.trace), (std::vector<std::string>{"planner", "executor", "summarizer"}));
    ASSERT_EQ(r.trace.attempts.size(), 1u);
    EXPECT_EQ(r.trace.attempts[0].steps.size(), 2u);
    EXPECT_EQ(core.remaining(), 0u);
    check_golden("pe_dog_cat.json", r.trace.to_json());
}

TEST(PlanExecute, PromptsCarryContext) {
    Rig rig;
    ScriptedClient core({kPlan, kCot, kSummary});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    agent.run(dog_cat(), kMediaRoot);
    auto rec = core.received();
    ASSERT_EQ(rec.size(), 3u);
    const std::string request = user_request(dog_cat());
    const std::string toolbox = tools::render_toolbox_text(tools::register_catalog());

    const auto& planner = rec[0].back();
    EXPECT_NE(planner.text.find(toolbox), std::string::npos);
    EXPECT_EQ(planner.text.find("{action_details}"), std::string::npos);
    EXPECT_NE(planner.text.find("Question: " + request), std::string::npos);
    EXPECT_EQ(planner.media, std::vector<std::string>{(kMediaRoot / "scenes/dog_cat.jpg").string()});

    const auto& executor = rec[1].back();
    EXPECT_TRUE(executor.media.empty());
    EXPECT_NE(executor.text.find("\"depth\": 1.2"), std::string::npos);
    EXPECT_NE(executor.text.find("\"confidence\": 0.87"), std::string::npos);
    EXPECT_NE(executor.text.find("Tool Plan: [{\"arguments\": {\"image\": \"image-0\", \"objects\": [\"dog\", \"cat\"]}, \"name\": \"LocalizeObjects\"}"), std::string::npos);

    const auto& summarizer = rec[2].back();
    EXPECT_NE(summarizer.text.find("CoT Steps:\n" + kCot), std::string::npos);
    EXPECT_EQ(summarizer.media.size(), 1u);
}

TEST(PlanExecute, ToolErrorsAreRecordedNotFatal) {
    Rig rig;
    const std::string plan =
        "```json\n[{\"name\": \"CountObjects\", \"arguments\": {\"image\": \"image-0\", \"objects\": [\"chair\"]}},"
        "{\"name\": \"LocalizeObjects\", \"arguments\": {\"image\": \"image-0\", \"objects\": [\"dog\", \"cat\"]}}]\n```";
    ScriptedClient core({plan, kCot, kSummary});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    EXPECT_EQ(r.status, Status::Ok);
    ASSERT_EQ(r.trace.attempts[0].steps.size(), 2u);
    EXPECT_FALSE(r.trace.attempts[0].steps[0].result.ok);
    EXPECT_TRUE(r.trace.attempts[0].steps[1].result.ok);
    EXPECT_NE(core.prompts()[1].find("\"error\": \"detector backend unavailable\""), std::string::npos);
}

TEST(PlanExecute, MissingSpanRetriesAttempt) {
    Rig rig;
    ScriptedClient core({kPlan, kCot, "The dog is closer.", kPlan, kCot, kSummary});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    EXPECT_EQ(r.answer, "(A)");
    EXPECT_EQ(r.status, Status::Ok);
    ASSERT_EQ(r.trace.attempts.size(), 2u);
    EXPECT_NE(r.trace.attempts[0].error.find("<answer>"), std::string::npos);
    EXPECT_TRUE(r.trace.attempts[1].error.empty());
}

TEST(PlanExecute, EmptySpanIsFailure) {
    Rig rig;
    ScriptedClient core({kPlan, kCot, "<answer> </answer>", kPlan, kCot, kSummary});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    EXPECT_EQ(agent.run(dog_cat(), kMediaRoot).trace.attempts.size(), 2u);
}

TEST(PlanExecute, TripleFailureFallsBackToDirect) {
    Rig rig;
    ScriptedClient core({"no plan", "still no plan", "```json\n[{\"name\": \"Nope\"}]\n```", "<answer>(C)</answer>"});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    EXPECT_EQ(r.answer, "(C)");
    EXPECT_EQ(r.status, Status::FallbackDirect);
    EXPECT_TRUE(r.trace.fallback);
    ASSERT_EQ(r.trace.attempts.size(), 3u);
    for (const auto& a : r.trace.attempts) EXPECT_FALSE(a.error.empty());
    EXPECT_EQ(stages(r.trace), (std::vector<std::string>{"planner", "planner", "planner", "direct"}));
    EXPECT_EQ(rig.box.dispatched(), 0u);
    auto direct = core.received().back().back();
    EXPECT_EQ(direct.text, std::string(prompts::direct) + "\n\nQuestion: " + user_request(dog_cat()));
    EXPECT_EQ(direct.media.size(), 1u);
}

TEST(PlanExecute, FallbackAcceptsUntaggedAnswer) {
    Rig rig;
    ScriptedClient core({"x", "y", "z", "(C)"});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    EXPECT_EQ(agent.run(dog_cat(), kMediaRoot).answer, "(C)");
}

TEST(PlanExecute, EmptyPlanNeverReachesTools) {
    Rig rig;
    const std::string empty = "```json\n[]\n```";
    ScriptedClient core({empty, empty, empty, "<answer>(B)</answer>"});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    EXPECT_EQ(r.status, Status::FallbackDirect);
    for (const auto& a : r.trace.attempts) {
        EXPECT_EQ(a.error, "empty plan");
        EXPECT_TRUE(a.steps.empty());
        EXPECT_TRUE(a.cot.empty());
    }
    EXPECT_EQ(rig.box.dispatched(), 0u);

    std::vector<StepRecord> steps{{"x", json::object(), {}}};
    AgentTrace t;
    EXPECT_EQ(agent.execute_plan({}, t, steps), "");
    EXPECT_TRUE(steps.empty());
    EXPECT_TRUE(t.calls.empty());
}

TEST(PlanExecute, EmptyReasoningIsFailure) {
    Rig rig;
    ScriptedClient core({kPlan, "   ", kPlan, kCot, kSummary});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    ASSERT_EQ(r.trace.attempts.size(), 2u);
    EXPECT_EQ(r.trace.attempts[0].error, "executor returned no reasoning");
}

TEST(PlanExecute, RefusalIsAskedAgain) {
    Rig rig;
    ScriptedClient core({"x", "y", "z", "<answer>It cannot be determined.</answer>", "<answer>(B)</answer>"});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    EXPECT_EQ(r.answer, "(B)");
    EXPECT_EQ(r.status, Status::FallbackDirect);
    auto last = core.received().back();
    ASSERT_EQ(last.size(), 3u);
    EXPECT_EQ(last[1].role, llm::Role::Assistant);
    EXPECT_NE(std::string(prompts::direct).find(last[2].text), std::string::npos);
    EXPECT_NE(last[2].text.find("CRITICAL"), std::string::npos);
}

TEST(PlanExecute, PersistentRefusalDowngradesToBareCore) {
    Rig rig;
    ScriptedClient core({"x", "y", "z", "none of the above", "<answer>cannot be determined</answer>", "(D)"});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r = agent.run(dog_cat(), kMediaRoot);
    EXPECT_EQ(r.answer, "(D)");
    EXPECT_EQ(r.status, Status::DowngradedCore);
    EXPECT_TRUE(r.trace.downgraded);
    EXPECT_TRUE(r.trace.fallback);
    EXPECT_EQ(r.trace.calls.back().stage, "bare-core");
    EXPECT_EQ(core.prompts().back(), eval::build_prompt(dog_cat()));
}

TEST(PlanExecute, CoreOutageNeverThrows) {
    Rig rig;
    ScriptedClient core({});
    Agent agent(config(Paradigm::PlanExecute), core, rig.box);
    AgentResult r;
    ASSERT_NO_THROW(r = agent.run(dog_cat(), kMediaRoot));
    EXPECT_EQ(r.answer, "");
    EXPECT_EQ(r.status, Status::DowngradedCore);
    EXPECT_EQ(r.trace.attempts.size(), 3u);
    EXPECT_FALSE(r.trace.warnings.empty());
    for (const auto& c : r.trace.calls) EXPECT_FALSE(c.error.empty());
}

// ---------------------------------------------------------------------------
// ReAct

TEST(ReAct, GoldenTrace) {
    Rig rig;
    ScriptedClient core({kFlowTurn, kTerminateA});
    Agent agent(config(Paradigm::ReAct), core, rig.box);
    AgentResult r = agent.run(camera_motion(), kMediaRoot);
    EXPECT_EQ(r.answer, "(A)");
    EXPECT_EQ(r.status, Status::Ok);
    EXPECT_EQ(r.trace.turns, 2);
    ASSERT_EQ(r.trace.memory.size(), 1u);
    EXPECT_EQ(r.trace.memory[0].observation, json::parse(R"({"output": {"mean_flow_x": 2.5, "mean_flow_y": -0.3}})"));
    EXPECT_FALSE(r.trace.summarized);
    check_golden("react_optical_flow.json", r.trace.to_json());
}

TEST(ReAct, ConversationShape) {
    Rig rig;
    ScriptedClient core({kFlowTurn, kTerminateA});
    Agent agent(config(Paradigm::ReAct), core, rig.box);
    agent.run(camera_motion(), kMediaRoot);
    auto rec = core.received();
    ASSERT_EQ(rec.size(), 2u);
    ASSERT_EQ(rec[0].size(), 1u);
    const auto& first = rec[0][0];
    EXPECT_EQ(first.media.size(), 2u);
    EXPECT_TRUE(starts_with(first.text, "USER REQUEST: " + user_request(camera_motion())));
    EXPECT_NE(first.text.find(tools::render_toolbox_text(tools::register_catalog())), std::string::npos);
    EXPECT_NE(first.text.find(prompts::react_examples), std::string::npos);
    ASSERT_EQ(rec[1].size(), 3u);
    EXPECT_EQ(rec[1][1].text, kFlowTurn);
    EXPECT_TRUE(starts_with(rec[1][2].text,
                            "OBSERVATION: {\"output\": {\"mean_flow_x\": 2.5, \"mean_flow_y\": -0.3}}\n"));
    EXPECT_TRUE(rec[1][2].media.empty());
}

TEST(ReAct, HaltsAtTurnLimitAndSummarizes) {
    for (int limit : {1, 3, 10}) {
        Rig rig;
        std::vector<std::string> script(limit, kFlowTurn);
        script.push_back(terminate("(B)"));
        ScriptedClient core(script);
        AgentConfig cfg = config(Paradigm::ReAct);
        cfg.max_turns = limit;
        Agent agent(cfg, core, rig.box);
        AgentResult r = agent.run(camera_motion(), kMediaRoot);
        EXPECT_EQ(r.trace.turns, limit);
        EXPECT_TRUE(r.trace.summarized);
        EXPECT_EQ(r.answer, "(B)");
        EXPECT_EQ(r.trace.memory.size(), static_cast<std::size_t>(limit));
        EXPECT_EQ(r.trace.calls.size(), static_cast<std::size_t>(limit + 1));
        EXPECT_EQ(r.trace.calls.back().stage, "final");
        EXPECT_TRUE(starts_with(core.prompts().back(), "ALL_OBSERVATION: [{\"actions\": [{\"arguments\": {\"images\": [\"image-0\", \"image-1\"]}"));
        EXPECT_EQ(rig.box.dispatched(), static_cast<std::size_t>(limit + 1));
    }
}

TEST(ReAct, FinalStepFallsBackToAnswerSpan) {
    Rig rig;
    AgentConfig cfg = config(Paradigm::ReAct);
    cfg.max_turns = 1;
    ScriptedClient core({kFlowTurn, "<answer>(A)</answer>"});
    Agent agent(cfg, core, rig.box);
    EXPECT_EQ(agent.run(camera_motion(), kMediaRoot).answer, "(A)");
}

TEST(ReAct, EmptyActionsKeepThoughtOnly) {
    Rig rig;
    ScriptedClient core({"{\"thought\": \"The views look similar.\", \"actions\": []}", kTerminateA});
    Agent agent(config(Paradigm::ReAct), core, rig.box);
    AgentResult r = agent.run(camera_motion(), kMediaRoot);
    ASSERT_EQ(r.trace.memory.size(), 1u);
    EXPECT_EQ(r.trace.memory[0].thought, "The views look similar.");
    EXPECT_TRUE(r.trace.memory[0].actions.empty());
    EXPECT_EQ(r.trace.memory[0].observation, json::object());
    EXPECT_TRUE(starts_with(core.prompts()[1], "OBSERVATION: {}\n"));
    EXPECT_EQ(r.answer, "(A)");
}

TEST(ReAct, OnlyFirstActionIsTaken) {
    Rig rig;
    const std::string two =
        "{\"thought\": \"both\", \"actions\": [{\"name\": \"EstimateOpticalFlow\", \"arguments\": {\"images\": "
        "[\"image-0\", \"image-1\"]}}, {\"name\": \"Terminate\", \"arguments\": {\"answer\": \"(D)\"}}]}";
    ScriptedClient core({two, kTerminateA});
    Agent agent(config(Paradigm::ReAct), core, rig.box);
    AgentResult r = agent.run(camera_motion(), kMediaRoot);
    EXPECT_EQ(r.answer, "(A)");
    ASSERT_EQ(r.trace.memory.size(), 1u);
    EXPECT_EQ(r.trace.memory[0].actions.size(), 1u);
    ASSERT_EQ(r.trace.warnings.size(), 1u);
    EXPECT_NE(r.trace.warnings[0].find("only the first"), std::string::npos);
}

TEST(ReAct, MalformedOutputGetsOneCorrection) {
    Rig rig;
    ScriptedClient core({"The camera moved right.", kFlowTurn, kTerminateA});
    Agent agent(config(Paradigm::ReAct), core, rig.box);
    AgentResult r = agent.run(camera_motion(), kMediaRoot);
    EXPECT_EQ(stages(r.trace), (std::vector<std::string>{"observer", "observer-retry", "observer"}));
    EXPECT_EQ(r.trace.turns, 2);
    EXPECT_EQ(r.answer, "(A)");

    Rig rig2;
    ScriptedClient bad({"nope", "still nope", kTerminateA});
    Agent agent2(config(Paradigm::ReAct), bad, rig2.box);
    AgentResult r2 = agent2.run(camera_motion(), kMediaRoot);
    EXPECT_EQ(r2.trace.turns, 2);
    ASSERT_EQ(r2.trace.memory.size(), 1u);
    EXPECT_TRUE(r2.trace.memory[0].observation.contains("error"));
    EXPECT_EQ(r2.answer, "(A)");
}

TEST(ReAct, ToolFailuresBecomeObservations) {
    Rig rig;
    const std::string unknown = "{\"thought\": \"t\", \"actions\": [{\"name\": \"Teleport\", \"arguments\": {}}]}";
    const std::string bad_ref =
        "{\"thought\": \"t\", \"actions\": [{\"name\": \"EstimateOpticalFlow\", \"arguments\": {\"images\": "
        "[\"image-0\", \"image-7\"]}}]}";
    const std::string empty_answer = terminate("");
    ScriptedClient core({unknown, bad_ref, empty_answer, kTerminateA});
    Agent agent(config(Paradigm::ReAct), core, rig.box);
    AgentResult r = agent.run(camera_motion(), kMediaRoot);
    EXPECT_EQ(r.answer, "(A)");
    ASSERT_EQ(r.trace.memory.size(), 3u);
    for (const auto& m : r.trace.memory) EXPECT_TRUE(m.observation.contains("error")) << m.observation;
    EXPECT_EQ(rig.box.dispatched(), 1u);  // only the final Terminate reached a backend
}

TEST(ReAct, EmptyFinalAnswerDowngrades) {
    Rig rig;
    AgentConfig cfg = config(Paradigm::ReAct);
    cfg.max_turns = 2;
    ScriptedClient core({kFlowTurn, kFlowTurn, "I am not sure.", "(B)"});
    Agent agent(cfg, core, rig.box);
    AgentResult r = agent.run(camera_motion(), kMediaRoot);
    EXPECT_EQ(r.status, Status::DowngradedCore);
    EXPECT_EQ(r.answer, "(B)");
    EXPECT_EQ(r.trace.calls.back().stage, "bare-core");
    EXPECT_EQ(r.trace.calls.back().media.size(), 2u);
}

// ---------------------------------------------------------------------------
// Determinism

TEST(Replay, GoldenRunsReproduceExactly) {
    struct Case {
        Paradigm p;
        corpus::Sample s;
        std::vector<std::string> script;
    };
    const Case cases[] = {{Paradigm::PlanExecute, dog_cat(), {kPlan, kCot, kSummary}},
                          {Paradigm::ReAct, camera_motion(), {kFlowTurn, kTerminateA}}};
    for (const auto& c : cases) {
        Rig a, b;
        ScriptedClient first(c.script);
        AgentTrace t1 = Agent(config(c.p), first, a.box).run(c.s, kMediaRoot).trace;
        ScriptedClient second(replay_script(t1));
        AgentTrace t2 = Agent(config(c.p), second, b.box).run(c.s, kMediaRoot).trace;
        EXPECT_EQ(t1.to_json().dump(), t2.to_json().dump());
    }
}

// Random scripts mixing good and broken outputs: every run respects its
// bounds and replays to an identical trace.
TEST(Replay, RandomScriptsProperty) {
    const std::vector<std::string> pe_pool = {kPlan,   kCot, kSummary, "prose", "```json\n[]\n```", "<answer>(B)</answer>",
                                              "none of the above", "", "```json\n[{\"name\": \"Nope\"}]\n```"};
    const std::vector<std::string> react_pool = {kFlowTurn, kTerminateA, terminate("(C)"), "garbage",
                                                 "{\"thought\": \"\", \"actions\": []}", "<answer>(D)</answer>",
                                                 "{\"actions\": [{\"name\": \"Teleport\"}]}"};
    Rng rng(20261017);
    for (int iter = 0; iter < 300; ++iter) {
        const bool pe = iter % 2 == 0;
        const auto& pool = pe ? pe_pool : react_pool;
        std::vector<std::string> script;
        const int n = static_cast<int>(rng.index(25));
        for (int i = 0; i < n; ++i) script.push_back(pool[rng.index(pool.size())]);
        AgentConfig cfg = config(pe ? Paradigm::PlanExecute : Paradigm::ReAct);
        cfg.max_attempts = 1 + static_cast<int>(rng.index(3));
        cfg.max_turns = 1 + static_cast<int>(rng.index(6));
        const corpus::Sample s = pe ? dog_cat() : camera_motion();

        Rig a, b;
        ScriptedClient first(script);
        AgentResult r;
        ASSERT_NO_THROW(r = Agent(cfg, first, a.box).run(s, kMediaRoot));
        const AgentTrace& t = r.trace;
        EXPECT_EQ(r.answer, t.answer);
        EXPECT_EQ(r.status, t.status);
        if (trim(r.answer).empty()) {
            EXPECT_TRUE(t.downgraded);
        }
        if (t.downgraded) {
            EXPECT_EQ(t.calls.back().stage, "bare-core");
        }
        EXPECT_EQ(t.status == Status::DowngradedCore, t.downgraded);
        if (pe) {
            EXPECT_GE(t.attempts.size(), 1u);
            EXPECT_LE(t.attempts.size(), static_cast<std::size_t>(cfg.max_attempts));
            const bool all_failed = std::all_of(t.attempts.begin(), t.attempts.end(),
                                                [](const AttemptRecord& at) { return !at.error.empty(); });
            EXPECT_EQ(t.fallback, all_failed);
            EXPECT_LE(t.calls.size(), static_cast<std::size_t>(3 * cfg.max_attempts + 3));
        } else {
            EXPECT_LE(t.turns, cfg.max_turns);
            EXPECT_LE(t.calls.size(), static_cast<std::size_t>(2 * cfg.max_turns + 2));
            EXPECT_TRUE(t.attempts.empty());
        }

        ScriptedClient second(replay_script(t));
        AgentTrace t2 = Agent(cfg, second, b.box).run(s, kMediaRoot).trace;
        ASSERT_EQ(t.to_json().dump(), t2.to_json().dump()) << "iteration " << iter;
    }
}

TEST(Replay, ConcurrentRunsMatchSerial) {
    // A core whose reply depends only on the conversation, shared by threads.
    llm::CallbackClient core([](const std::vector<llm::ChatTurn>& turns) -> std::string {
        if (turns.size() == 1) return kFlowTurn;
        return terminate(turns.size() % 4 == 3 ? "(A)" : "(B)");
    });
    Rig rig;
    Agent agent(config(Paradigm::ReAct), core, rig.box);
    std::vector<corpus::Sample> samples;
    for (int i = 0; i < 16; ++i) {
        corpus::Sample s = camera_motion();
        s.id = "s" + std::to_string(i);
        samples.push_back(s);
    }
    std::vector<std::string> serial, parallel(samples.size());
    for (const auto& s : samples) serial.push_back(agent.run(s, kMediaRoot).trace.to_json().dump());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < samples.size(); ++i)
        threads.emplace_back([&, i] { parallel[i] = agent.run(samples[i], kMediaRoot).trace.to_json().dump(); });
    for (auto& th : threads) th.join();
    EXPECT_EQ(serial, parallel);
}

TEST(Trace, JsonShape) {
    Rig rig;
    ScriptedClient core({kPlan, kCot, kSummary});
    AgentResult r = Agent(config(Paradigm::PlanExecute), core, rig.box).run(dog_cat(), kMediaRoot);
    json j = r.trace.to_json();
    for (const char* k : {"paradigm", "sample_id", "request", "media", "status", "answer", "turns", "fallback",
                          "downgraded", "warnings", "attempts", "memory", "calls"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_FALSE(j.contains("elapsed_ms"));
    EXPECT_TRUE(r.trace.to_json(true).contains("elapsed_ms"));
    EXPECT_EQ(j["attempts"][0]["steps"][0]["result"]["results"][0]["label"], "dog");
}
