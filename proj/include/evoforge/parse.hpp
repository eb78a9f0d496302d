#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "evoforge/core.hpp"

namespace evoforge::parse {

enum class QuestionerParseError { MissingTag, DuplicateTag, InvalidType, EmptyField, ExtraText };

std::string to_string(QuestionerParseError e);

struct QuestionerParse {
    std::optional<QuestionRecord> record;
    std::optional<QuestionerParseError> error;

    bool ok() const { return record.has_value(); }
};

// Canonical answer form backing majority voting.
struct AnswerKey {
    enum class Kind { multiple_choice, numerical, regression, free_text };
    Kind kind = Kind::free_text;
    std::string canonical;
    std::optional<double> numeric_value;

    bool operator==(const AnswerKey&) const = default;
};

// Accepts exactly one <type>/<question>/<answer> triple, tags case-insensitive
// and in any order, with only whitespace allowed outside the blocks.
QuestionerParse parse_questioner_output(const std::string& raw);

// Answer = last balanced \boxed{...}; segment = last parseable
// <segment>...</segment>. Never fails; malformed parts yield absent fields.
SolverResponse parse_solver_output(const std::string& raw);

// Inner content of a segment tag: "Xs-Ys", "Xs--Ys" or en/em-dash variants,
// X and Y non-negative decimals with 0 <= X <= Y.
std::optional<Segment> parse_segment(const std::string& text);

AnswerKey normalize_answer(const std::string& text, QuestionType qtype);

// Symmetric and reflexive. Numeric kinds compare within tolerance
// (rel 1e-6 for numerical, rel 0.05 for regression, abs 1e-9 both);
// everything else compares canonical strings.
bool answers_equivalent(const AnswerKey& a, const AnswerKey& b);

// Canonical re-rendering of a parsed questioner record (used by round-trip
// checks and the mock).
std::string serialize_questioner_record(const QuestionRecord& q);
std::string serialize_solver_response(const SolverResponse& r);

}  // namespace evoforge::parse
