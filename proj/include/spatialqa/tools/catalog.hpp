#pragma once

#include <json.hpp>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spatialqa::tools {

using json = nlohmann::json;

/// Value shapes an argument may take.
enum class ArgKind {
    Image,        // one media reference
    ImageList,    // list of media references
    ImageOrList,  // either of the above
    Text,
    TextList,
    TextOrList,
    Int,
    Number,
    Point,    // [x, y]
    Boxes,    // [l, t, r, b] or a list of them
    Choice,   // one of ArgSpec::choices
    Matches,  // [[[x1, y1], [x2, y2]], ...]
};

bool is_media_kind(ArgKind k);

struct ArgSpec {
    std::string name;
    std::string description;
    ArgKind kind = ArgKind::Text;
    bool required = true;
    json default_value;  // null when the argument has no default
    std::vector<std::string> choices;
    std::size_t min_items = 0;  // list kinds; 0 leaves the bound open
    std::size_t max_items = 0;
    bool number_positive = false;
    bool number_unit_interval = false;  // (0, 1]
    /// Accepted and validated but left out of rendered toolbox text.
    bool hidden = false;
};

struct RetSpec {
    std::string name;
    std::string description;
};

struct ToolSpec {
    std::string name;
    std::vector<std::string> description;  // one entry per line
    std::vector<ArgSpec> args;
    std::vector<RetSpec> rets;
    /// Example calls, each {"name": ..., "arguments": {...}}.
    std::vector<json> examples;
    bool perception = true;

    const ArgSpec* arg(std::string_view name) const;
};

/// Immutable, ordered set of tool specs with unique names.
class Registry {
public:
    Registry() = default;
    /// Throws ValidationError on duplicate names or examples that fail their
    /// own argument spec.
    explicit Registry(std::vector<ToolSpec> specs);

    const ToolSpec* find(std::string_view name) const;
    /// Throws RegistryError for unknown names.
    const ToolSpec& at(std::string_view name) const;
    const std::vector<ToolSpec>& specs() const { return specs_; }
    std::vector<std::string> names() const;
    std::size_t size() const { return specs_.size(); }
    bool empty() const { return specs_.empty(); }
    /// Registry restricted to `names`, keeping catalog order.
    Registry subset(std::span<const std::string> names) const;

private:
    std::vector<ToolSpec> specs_;
};

/// The 13 perception tools followed by Terminate and SelfThinking.
const Registry& register_catalog();
/// Names of the perception tools in catalog order.
std::vector<std::string> perception_tool_names();

/// Stable text block describing every spec, spliced into agent prompts.
std::string render_toolbox_text(const Registry& registry);

/// Checks `arguments` against the spec and returns them normalized: "images"
/// folded into "image" where the spec only knows the latter, choices
/// lowercased, and defaults filled. Throws ValidationError naming the argument.
json validate_arguments(const ToolSpec& spec, const json& arguments);

/// Compact dump with sorted keys and integral floats written as integers,
/// so equal argument maps produce equal strings.
std::string canonical_json(const json& value);

/// Dump in the familiar `{"a": 1, "b": [1, 2]}` style used inside prompts.
std::string prompt_json(const json& value);

}  // namespace spatialqa::tools
