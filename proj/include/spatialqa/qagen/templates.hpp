#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spatialqa/common/rng.hpp"
#include "spatialqa/qagen/types.hpp"

namespace spatialqa::qagen {

struct TemplateFamily {
    std::string_view name;
    std::vector<std::string_view> texts;
};

/// Question templates for a task. CameraMotion has two families
/// ("multi_choice", "open_ended"); RelSize families are named
/// "<DIMENSION>_<LARGER|SMALLER>".
const std::vector<TemplateFamily>& templates_for(Task task);

struct ChosenTemplate {
    std::string id;  // "<task>/<family>/<index>"
    std::string_view family;
    std::string_view text;
};

/// Uniform over every template of the task (optionally restricted to one family).
ChosenTemplate choose_template(Task task, Rng& rng, std::string_view family = {});

/// Replaces each "{key}" with its value; unknown slots are left as is.
std::string fill(std::string_view text, std::span<const std::pair<std::string_view, std::string>> slots);

/// Compass rule appended to spatial-map questions.
extern const std::string_view kDirectionRule;
/// View-direction definitions appended to multi-view questions.
extern const std::string_view kViewRule;

}  // namespace spatialqa::qagen
