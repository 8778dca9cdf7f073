#pragma once

// Samples, scripts and the mock-tool rig shared by the agent unit tests and
// the acceptance run. Needs SPATIALQA_TEST_DATA_DIR.
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spatialqa/agent/agent.hpp"
#include "spatialqa/tools/backends.hpp"
#include "spatialqa/tools/catalog.hpp"

namespace spatialqa::testing {

using agent::AgentConfig;
using agent::AgentTrace;
using agent::Paradigm;

inline const std::filesystem::path kMediaRoot = "golden-media";

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline corpus::Sample dog_cat() {
    corpus::Sample s;
    s.id = "golden-pe-0";
    s.question = "Which object is closer to the camera, the dog or the cat?";
    s.format = qagen::Format::MultiChoice;
    s.options = {"The dog", "The cat"};
    s.answer = "A";
    s.media = {"scenes/dog_cat.jpg"};
    s.task = "depth_order";
    s.category = "Depth Estimation";
    return s;
}

inline corpus::Sample camera_motion() {
    corpus::Sample s;
    s.id = "golden-react-0";
    s.question = "Between image-0 and image-1, what is the primary direction of the camera's movement?";
    s.format = qagen::Format::MultiChoice;
    s.options = {"The camera moved to the right", "The camera moved to the left", "The camera moved downward",
                 "The camera moved upward"};
    s.answer = "A";
    s.media = {"frames/view_0.jpg", "frames/view_1.jpg"};
    s.task = "camera_motion";
    s.category = "Camera";
    return s;
}

inline const std::string kPlan =
    "I will find both animals first and then measure their depth.\n"
    "```json\n[\n"
    "    {\"name\": \"LocalizeObjects\", \"arguments\": {\"image\": \"image-0\", \"objects\": [\"dog\", \"cat\"]}},\n"
    "    {\"name\": \"EstimateObjectDepth\", \"arguments\": {\"image\": \"image-0\", \"objects\": [\"dog\", \"cat\"], "
    "\"indoor_or_outdoor\": \"outdoor\"}},\n"
    "]\n```";
inline const std::string kCot =
    "<think> Both animals were localized, so their depths can be compared. </think>\n"
    "<think> The dog is 1.0 m away and the cat 1.2 m, so the dog is closer. </think>";
inline const std::string kSummary =
    "<thinking> The dog depth of 1.0 m is below the cat depth of 1.2 m. </thinking>\n<answer> (A) </answer>";

inline const std::string kFlowTurn =
    "{\"thought\": \"The mean optical flow between the two views gives the camera motion.\", "
    "\"actions\": [{\"name\": \"EstimateOpticalFlow\", \"arguments\": {\"images\": [\"image-0\", \"image-1\"]}}]}";
inline const std::string kTerminateA =
    "{\"thought\": \"mean_flow_x = 2.5 dominates, so the camera moved right.\", "
    "\"actions\": [{\"name\": \"Terminate\", \"arguments\": {\"answer\": \"(A)\"}}]}";

inline std::string terminate(const std::string& answer) {
    return "{\"thought\": \"done\", \"actions\": [{\"name\": \"Terminate\", \"arguments\": {\"answer\": \"" + answer +
           "\"}}]}";
}

/// Catalog toolbox: golden mocks by default, Terminate and SelfThinking native.
struct Rig {
    tools::Toolbox box{tools::register_catalog()};
    tools::MockBackend mock =
        tools::MockBackend::from_file(tools::register_catalog(), std::string(SPATIALQA_TEST_DATA_DIR) + "/fixtures/tools/golden_mocks.json");
    tools::NativeBackend native;
    Rig() {
        box.set_default(&mock);
        box.route("Terminate", &native);
    }
};

inline AgentConfig config(Paradigm p) {
    AgentConfig cfg;
    cfg.paradigm = p;
    cfg.core.model = "scripted";
    return cfg;
}

inline std::vector<std::string> stages(const AgentTrace& t) {
    std::vector<std::string> out;
    for (const auto& c : t.calls) out.push_back(c.stage);
    return out;
}

}  // namespace spatialqa::testing
