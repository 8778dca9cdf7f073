#include "spatialqa/qagen/convert.hpp"

#include <numeric>
#include <optional>
#include <set>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/qagen/templates.hpp"

namespace spatialqa::qagen {

namespace prompts {

const std::string_view kRephraseOpenEnded =
    R"(Please rephrase the following question while maintaining its original meaning. Requirements:
1. Keep the core meaning of the question unchanged
2. Use natural and fluent language
3. Return only the rephrased question, nothing else
Original question: {question}
Rephrased question:)";

const std::string_view kRephraseMultiChoice =
    R"(Please rephrase the following multiple-choice question while maintaining its original meaning. Requirements:
1. Keep the core meaning of the question unchanged
2. If there is an instruction phrase like "Select from the following choices", keep it
3. Use natural and fluent language
4. Return only the rephrased question, nothing else
Original question: {question}
Rephrased question:)";

const std::string_view kGenerateDistractors =
    R"(Based on the following question and correct answer, generate {num_options} options (including the correct answer). Requirements:
1. Options should be reasonable and have distraction value
2. The correct answer is: {correct_answer}
3. Other options should be incorrect but plausible answers
4. Return in JSON format: {"options": ["option1", "option2", ...]}
5. Return only JSON, nothing else
Question: {question}
Correct answer: {correct_answer}
Required answer: {required_ans}
Generated options:)";

const std::string_view kConvertToJudgment =
    R"(Convert the following question to a yes/no question format. Requirements:
1. Keep the core meaning unchanged.
2. The question should be answerable with yes or no.
3. The converted question should be as specific as possible, directly incorporating relevant details and data points (e.g., specific values, coordinates, identifiers) from the original question or answer. Avoid asking general questions about detection, presence, or existence if more specific information can be queried.
4. Based on the original answer "{correct_answer}", determine if the yes/no answer should be "yes" or "no".
5. Return in JSON format: {"question": "yes/no question", "answer": "yes or no"}.
6. Return only JSON, nothing else.
Original question: {question}
Original answer: {correct_answer}
Required answer: {required_ans}
Converted question:)";

}  // namespace prompts

namespace {

void add_warning(QAPair& qa, const std::string& w) {
    if (!qa.meta.contains("warnings")) qa.meta["warnings"] = nlohmann::json::array();
    qa.meta["warnings"].push_back(w);
}

// Pulls the first {...} object out of a model reply, tolerating code fences.
std::optional<nlohmann::json> first_json_object(const std::string& text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    try {
        auto j = nlohmann::json::parse(text.substr(open, close - open + 1));
        if (j.is_object()) return j;
    } catch (const nlohmann::json::exception&) {
    }
    return std::nullopt;
}

std::string strip_quotes(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        s = trim(s.substr(1, s.size() - 2));
    }
    return s;
}

}  // namespace

QAPair to_multiple_choice(const QAPair& qa, const std::vector<std::string>& distractors, Rng& rng) {
    if (distractors.empty()) throw GenerationError("multi-choice conversion needs at least one distractor");
    std::vector<std::string> opts;
    opts.push_back(qa.truth);
    opts.insert(opts.end(), distractors.begin(), distractors.end());
    std::set<std::string> seen;
    for (const auto& o : opts) {
        if (!seen.insert(normalize_space(o)).second) throw GenerationError("duplicate option: " + o);
    }
    std::vector<std::size_t> perm(opts.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));

    QAPair out = qa;
    out.format = Format::MultiChoice;
    out.open_subtype.clear();
    out.options.options.clear();
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.options.options.push_back(opts[perm[i]]);
        if (perm[i] == 0) out.options.correct = static_cast<int>(i);
    }
    out.answer = std::string(1, out.options.correct_letter());
    out.options.validate();
    return out;
}

QAPair to_judgment(const QAPair& qa, Rng& rng, llm::ChatClient* client, const llm::ChatConfig& cfg) {
    const bool positive = rng.bernoulli(0.5);
    std::string value = qa.truth;
    if (!positive) {
        if (qa.wrong.empty()) throw GenerationError("judgment conversion needs a wrong value");
        value = qa.wrong[rng.index(qa.wrong.size())];
    }

    QAPair out = qa;
    out.format = Format::Judgment;
    out.options = {};
    out.open_subtype.clear();
    out.meta["polarity"] = positive ? "positive" : "negative";

    if (client != nullptr) {
        const std::string required = positive ? "yes" : "no";
        const std::pair<std::string_view, std::string> slots[] = {
            {"question", qa.question}, {"correct_answer", qa.truth}, {"required_ans", required}};
        try {
            const std::string reply = client->ask(fill(prompts::kConvertToJudgment, slots), cfg);
            if (auto j = first_json_object(reply)) {
                const std::string q = trim(j->value("question", ""));
                const std::string a = to_lower(trim(j->value("answer", "")));
                if (!q.empty() && (a == "yes" || a == "no")) {
                    out.question = q;
                    out.answer = a;
                    out.meta["judgment_route"] = "llm";
                    return out;
                }
            }
            add_warning(out, "judgment conversion payload unusable; used rule-based path");
        } catch (const std::exception& e) {
            add_warning(out, std::string("judgment conversion failed: ") + e.what());
        }
    }

    const std::string stem = qa.judgment_stem.empty()
                                 ? "Is the answer to the question \"" + qa.question + "\" {value}?"
                                 : qa.judgment_stem;
    const std::pair<std::string_view, std::string> slot[] = {{"value", value}};
    out.question = fill(stem, slot);
    out.answer = positive ? "yes" : "no";
    out.meta["judgment_route"] = "rule";
    out.meta["judgment_value"] = value;
    return out;
}

QAPair rephrase_question(const QAPair& qa, llm::ChatClient& client, const llm::ChatConfig& cfg) {
    QAPair out = qa;
    const auto tmpl = qa.format == Format::MultiChoice ? prompts::kRephraseMultiChoice
                                                        : prompts::kRephraseOpenEnded;
    const std::pair<std::string_view, std::string> slots[] = {{"question", qa.question}};
    try {
        const std::string reply = strip_quotes(client.ask(fill(tmpl, slots), cfg));
        if (reply.empty()) {
            add_warning(out, "rephrase returned empty text; original kept");
        } else {
            out.question = reply;
            out.meta["rephrased"] = true;
        }
    } catch (const std::exception& e) {
        add_warning(out, std::string("rephrase failed: ") + e.what());
    }
    return out;
}

std::vector<std::string> llm_distractors(const QAPair& qa, int num_options, llm::ChatClient& client,
                                         const llm::ChatConfig& cfg) {
    const std::pair<std::string_view, std::string> slots[] = {{"num_options", std::to_string(num_options)},
                                                              {"correct_answer", qa.truth},
                                                              {"question", qa.question},
                                                              {"required_ans", qa.truth}};
    std::vector<std::string> out;
    try {
        const auto j = first_json_object(client.ask(fill(prompts::kGenerateDistractors, slots), cfg));
        if (!j || !j->contains("options") || !(*j)["options"].is_array()) return {};
        std::set<std::string> seen = {normalize_space(qa.truth)};
        for (const auto& o : (*j)["options"]) {
            if (!o.is_string()) continue;
            const std::string s = trim(o.get<std::string>());
            if (!s.empty() && seen.insert(normalize_space(s)).second) out.push_back(s);
        }
    } catch (const std::exception&) {
        return {};
    }
    return out;
}

}  // namespace spatialqa::qagen
