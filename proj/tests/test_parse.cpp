#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "evoforge/parse.hpp"
#include "evoforge/rng.hpp"

using namespace evoforge;
using namespace evoforge::parse;

TEST_CASE("questioner triple parses in canonical form") {
    auto p = parse_questioner_output(
        "<type>numerical</type><question>How many?</question><answer>3</answer>");
    REQUIRE(p.ok());
    CHECK(p.record->question_type == QuestionType::numerical);
    CHECK(p.record->question_text == "How many?");
    CHECK(p.record->reference_answer == "3");
}

TEST_CASE("questioner tags are case- and order-insensitive") {
    auto p = parse_questioner_output(
        "<ANSWER>Yes</ANSWER>\n<Question>Did it move?</Question>\n<TYPE>multiple "
        "choice</TYPE>");
    REQUIRE(p.ok());
    CHECK(p.record->question_type == QuestionType::multiple_choice);
    CHECK(p.record->question_text == "Did it move?");
}

TEST_CASE("questioner type spellings") {
    for (const char* t : {"multiple choice", "Multiple Choice", "multiple_choice"}) {
        auto p = parse_questioner_output(std::string("<type>") + t +
                                         "</type><question>q</question><answer>a</answer>");
        REQUIRE(p.ok());
        CHECK(p.record->question_type == QuestionType::multiple_choice);
    }
    auto p = parse_questioner_output(
        "<type>regression</type><question>q</question><answer>1.5</answer>");
    REQUIRE(p.ok());
    CHECK(p.record->question_type == QuestionType::regression);
}

TEST_CASE("questioner failure codes") {
    auto p = parse_questioner_output("The answer is 3.");
    CHECK_FALSE(p.ok());
    CHECK(p.error == QuestionerParseError::MissingTag);

    p = parse_questioner_output(
        "<type>numerical</type><question>a</question><question>b</question><answer>3</answer>");
    CHECK(p.error == QuestionerParseError::DuplicateTag);

    p = parse_questioner_output(
        "<type>open ended</type><question>q</question><answer>a</answer>");
    CHECK(p.error == QuestionerParseError::InvalidType);

    p = parse_questioner_output(
        "<type>numerical</type><question>  </question><answer>3</answer>");
    CHECK(p.error == QuestionerParseError::EmptyField);

    p = parse_questioner_output(
        "Sure! <type>numerical</type><question>q</question><answer>3</answer>");
    CHECK(p.error == QuestionerParseError::ExtraText);

    // surrounding whitespace is fine
    p = parse_questioner_output(
        "\n  <type>numerical</type>\n<question>q</question>\n<answer>3</answer>\n\n");
    CHECK(p.ok());
}

TEST_CASE("solver output extraction") {
    SolverResponse r = parse_solver_output(
        "Reasoning... so \\boxed{B} <segment>2.5s--5.0s</segment>");
    REQUIRE(r.answer.has_value());
    CHECK(*r.answer == "B");
    REQUIRE(r.segment.has_value());
    CHECK(r.segment->t_s == doctest::Approx(2.5));
    CHECK(r.segment->t_e == doctest::Approx(5.0));
    CHECK(r.format_valid_answer);
    CHECK(r.format_valid_segment);
}

TEST_CASE("solver: last occurrence wins") {
    SolverResponse r = parse_solver_output(
        "first \\boxed{1+1} then \\boxed{2} and <segment>0s-1s</segment> then "
        "<segment>3s--7s</segment>");
    CHECK(*r.answer == "2");
    CHECK(r.segment->t_s == doctest::Approx(3.0));
    CHECK(r.segment->t_e == doctest::Approx(7.0));
}

TEST_CASE("solver: missing or malformed parts yield absent fields") {
    SolverResponse r = parse_solver_output("...\\boxed{42}");
    CHECK(*r.answer == "42");
    CHECK_FALSE(r.segment.has_value());
    CHECK_FALSE(r.format_valid_segment);

    r = parse_solver_output("<segment>5.0s-2.5s</segment>");  // t_s > t_e
    CHECK_FALSE(r.segment.has_value());
    CHECK_FALSE(r.answer.has_value());

    r = parse_solver_output("\\boxed{unbalanced");
    CHECK_FALSE(r.answer.has_value());

    r = parse_solver_output("\\boxed{}");  // empty answer is not an answer
    CHECK_FALSE(r.answer.has_value());

    r = parse_solver_output("nested \\boxed{f(\\boxed{x})} done");
    CHECK(r.answer.has_value());
}

TEST_CASE("segment grammar") {
    auto check = [](const std::string& s, double a, double b) {
        auto seg = parse_segment(s);
        REQUIRE(seg.has_value());
        CHECK(seg->t_s == doctest::Approx(a));
        CHECK(seg->t_e == doctest::Approx(b));
    };
    check("2.5s--5.0s", 2.5, 5.0);
    check("0s-0s", 0.0, 0.0);
    check("3s\xE2\x80\x93"
          "7s",
          3.0, 7.0);  // en dash
    check("3s\xE2\x80\x94"
          "7s",
          3.0, 7.0);  // em dash
    check("  2.5s--5.0s  ", 2.5, 5.0);

    CHECK_FALSE(parse_segment("5.0s-2.5s").has_value());
    CHECK_FALSE(parse_segment("-1s-2s").has_value());
    CHECK_FALSE(parse_segment("2.5-5.0").has_value());      // missing 's'
    CHECK_FALSE(parse_segment("2.5s--").has_value());
    CHECK_FALSE(parse_segment("").has_value());
    CHECK_FALSE(parse_segment("as--bs").has_value());
}

TEST_CASE("answer normalization: multiple choice") {
    CHECK(normalize_answer("(B) the red cube", QuestionType::multiple_choice).canonical == "B");
    CHECK(normalize_answer("b", QuestionType::multiple_choice).canonical == "B");
    CHECK(normalize_answer("Yes", QuestionType::multiple_choice).canonical == "YES");
    CHECK(normalize_answer("no.", QuestionType::multiple_choice).canonical == "NO");
    CHECK(normalize_answer("D.", QuestionType::multiple_choice).canonical == "D");
    // not an option letter: falls back to collapsed case-folded text
    CHECK(normalize_answer("The  Red Cube", QuestionType::multiple_choice).canonical ==
          "the red cube");
}

TEST_CASE("answer normalization: numeric kinds") {
    auto k = normalize_answer("3.50 seconds", QuestionType::numerical);
    CHECK(k.kind == AnswerKey::Kind::numerical);
    CHECK(k.canonical == "3.5");
    CHECK(k.numeric_value == doctest::Approx(3.5));

    k = normalize_answer("1,234.5 m", QuestionType::regression);
    CHECK(k.kind == AnswerKey::Kind::regression);
    CHECK(k.numeric_value == doctest::Approx(1234.5));

    // unparseable numeric falls back to free-text normalization, keeping kind
    k = normalize_answer("about half", QuestionType::numerical);
    CHECK_FALSE(k.numeric_value.has_value());
    CHECK(k.canonical == "about half");
}

TEST_CASE("answers_equivalent tolerances") {
    auto num = [](const char* s) { return normalize_answer(s, QuestionType::numerical); };
    auto reg = [](const char* s) { return normalize_answer(s, QuestionType::regression); };

    CHECK(answers_equivalent(num("3.5"), num("3.5000001")));
    CHECK_FALSE(answers_equivalent(num("3.5"), num("3.6")));
    CHECK(answers_equivalent(reg("10.0"), reg("10.4")));
    CHECK_FALSE(answers_equivalent(reg("10.0"), reg("11.0")));

    auto mc = [](const char* s) { return normalize_answer(s, QuestionType::multiple_choice); };
    CHECK(answers_equivalent(mc("B"), mc("b")));
    CHECK_FALSE(answers_equivalent(mc("B"), mc("C")));
}

TEST_CASE("answers_equivalent is reflexive and symmetric on random keys") {
    Rng rng(11);
    std::vector<AnswerKey> keys;
    const char* texts[] = {"3.5", "yes", "B", "10.0", "10.4", "red car", "0", "1e3"};
    QuestionType types[] = {QuestionType::multiple_choice, QuestionType::numerical,
                            QuestionType::regression};
    for (int i = 0; i < 200; ++i)
        keys.push_back(normalize_answer(texts[rng.uniform_u64(8)], types[rng.uniform_u64(3)]));
    for (const auto& a : keys) CHECK(answers_equivalent(a, a));
    for (size_t i = 0; i < keys.size(); ++i)
        for (size_t j = i + 1; j < keys.size(); j += 17)
            CHECK(answers_equivalent(keys[i], keys[j]) == answers_equivalent(keys[j], keys[i]));
}

TEST_CASE("questioner round-trip: serialize(parse(x)) reparses identically") {
    const char* samples[] = {
        "<type>numerical</type><question>How many cars pass?</question><answer>4</answer>",
        "<TYPE>multiple choice</TYPE>\n<question>Is it day?</question>\n<answer>Yes</answer>",
        "<type>regression</type><question>Speed in m/s?</question><answer>3.2</answer>",
    };
    for (const char* s : samples) {
        auto p1 = parse_questioner_output(s);
        REQUIRE(p1.ok());
        auto p2 = parse_questioner_output(serialize_questioner_record(*p1.record));
        REQUIRE(p2.ok());
        CHECK(p2.record->question_type == p1.record->question_type);
        CHECK(p2.record->question_text == p1.record->question_text);
        CHECK(p2.record->reference_answer == p1.record->reference_answer);
    }
}

TEST_CASE("solver round-trip on generated corpus") {
    Rng rng(21);
    for (int i = 0; i < 500; ++i) {
        SolverResponse r;
        r.answer = "ans" + std::to_string(rng.uniform_u64(1000));
        r.format_valid_answer = true;
        if (rng.uniform_u64(2) == 0) {
            double a = static_cast<double>(rng.uniform_u64(60));
            double b = a + static_cast<double>(rng.uniform_u64(30));
            r.segment = Segment{a, b};
            r.format_valid_segment = true;
        }
        SolverResponse back = parse_solver_output(serialize_solver_response(r));
        CHECK(back.answer == r.answer);
        CHECK(back.segment.has_value() == r.segment.has_value());
        if (r.segment) {
            CHECK(back.segment->t_s == doctest::Approx(r.segment->t_s));
            CHECK(back.segment->t_e == doctest::Approx(r.segment->t_e));
        }
    }
}

// Mutation fuzz: parsers must never throw and never violate invariants.
TEST_CASE("parser fuzz resilience") {
    Rng rng(31);
    std::string qbase =
        "<type>numerical</type><question>How many birds?</question><answer>7</answer>";
    std::string sbase = "thinking \\boxed{7} <segment>2.5s--5.0s</segment>";
    for (int i = 0; i < 2000; ++i) {
        std::string victim = (i % 2 == 0) ? qbase : sbase;
        int edits = 1 + static_cast<int>(rng.uniform_u64(4));
        for (int e = 0; e < edits; ++e) {
            size_t pos = rng.uniform_u64(victim.size());
            switch (rng.uniform_u64(3)) {
                case 0: victim.erase(pos, 1); break;
                case 1: victim.insert(pos, 1, static_cast<char>(32 + rng.uniform_u64(95))); break;
                default: victim[pos] = static_cast<char>(32 + rng.uniform_u64(95)); break;
            }
            if (victim.empty()) victim = "x";
        }
        auto q = parse_questioner_output(victim);
        if (q.ok()) {
            CHECK_FALSE(q.record->question_text.empty());
            CHECK_FALSE(q.record->reference_answer.empty());
        } else {
            CHECK(q.error.has_value());
        }
        SolverResponse r = parse_solver_output(victim);
        CHECK(r.format_valid_answer == r.answer.has_value());
        CHECK(r.format_valid_segment == r.segment.has_value());
        if (r.segment) {
            CHECK(r.segment->t_s >= 0.0);
            CHECK(r.segment->t_s <= r.segment->t_e);
        }
    }
}
