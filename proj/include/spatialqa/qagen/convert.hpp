#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "spatialqa/common/rng.hpp"
#include "spatialqa/llm/client.hpp"
#include "spatialqa/qagen/types.hpp"

namespace spatialqa::qagen {

namespace prompts {
extern const std::string_view kRephraseOpenEnded;
extern const std::string_view kRephraseMultiChoice;
extern const std::string_view kGenerateDistractors;
extern const std::string_view kConvertToJudgment;
}  // namespace prompts

/// Shuffles truth + distractors into lettered options. Throws GenerationError
/// when two options coincide after normalization, or when no distractor is given.
QAPair to_multiple_choice(const QAPair& qa, const std::vector<std::string>& distractors, Rng& rng);

/// Yes/no conversion with 50/50 polarity. The rule-based path fills
/// qa.judgment_stem with the truth ("yes") or a wrong value ("no"). With a
/// client, the conversion prompt is tried first and any unusable payload falls
/// back to the rule-based path.
QAPair to_judgment(const QAPair& qa, Rng& rng, llm::ChatClient* client = nullptr,
                   const llm::ChatConfig& cfg = {});

/// Replaces the question with the model's paraphrase; keeps the original (and
/// records a warning in meta["warnings"]) when the output is empty or the call fails.
QAPair rephrase_question(const QAPair& qa, llm::ChatClient& client, const llm::ChatConfig& cfg);

/// Asks the model for `num_options` options including the truth; returns the
/// wrong ones. Empty on any failure.
std::vector<std::string> llm_distractors(const QAPair& qa, int num_options, llm::ChatClient& client,
                                         const llm::ChatConfig& cfg);

}  // namespace spatialqa::qagen
