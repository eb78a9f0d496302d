#include "evoforge/parse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

namespace evoforge::parse {

namespace {

std::string casefold(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    bool in_ws = true;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_ws && !out.empty()) out.push_back(' ');
            in_ws = true;
        } else {
            out.push_back(c);
            in_ws = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string strip_punct(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::ispunct(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

struct TagBlock {
    std::string content;
    size_t begin;  // of opening tag
    size_t end;    // one past closing tag
};

// All well-formed <tag>...</tag> blocks, case-insensitive tags.
std::vector<TagBlock> find_blocks(const std::string& raw, const std::string& lower_raw,
                                  const std::string& tag) {
    std::vector<TagBlock> out;
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    size_t pos = 0;
    while ((pos = lower_raw.find(open, pos)) != std::string::npos) {
        size_t body = pos + open.size();
        size_t closing = lower_raw.find(close, body);
        if (closing == std::string::npos) break;
        out.push_back({raw.substr(body, closing - body), pos, closing + close.size()});
        pos = closing + close.size();
    }
    return out;
}

size_t count_open_tags(const std::string& lower_raw, const std::string& tag) {
    const std::string open = "<" + tag + ">";
    size_t n = 0, pos = 0;
    while ((pos = lower_raw.find(open, pos)) != std::string::npos) {
        ++n;
        pos += open.size();
    }
    return n;
}

std::optional<double> parse_nonneg_decimal(std::string_view s, size_t& pos) {
    size_t start = pos;
    size_t digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        ++pos;
        ++digits;
    }
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            ++pos;
            ++digits;
        }
    }
    if (digits == 0) return std::nullopt;
    double value = 0.0;
    auto [p, ec] = std::from_chars(s.data() + start, s.data() + pos, value);
    if (ec != std::errc{} || p != s.data() + pos || !std::isfinite(value)) return std::nullopt;
    return value;
}

void skip_ws(std::string_view s, size_t& pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

}  // namespace

std::string to_string(QuestionerParseError e) {
    switch (e) {
        case QuestionerParseError::MissingTag: return "MissingTag";
        case QuestionerParseError::DuplicateTag: return "DuplicateTag";
        case QuestionerParseError::InvalidType: return "InvalidType";
        case QuestionerParseError::EmptyField: return "EmptyField";
        case QuestionerParseError::ExtraText: return "ExtraText";
    }
    return "MissingTag";
}

QuestionerParse parse_questioner_output(const std::string& raw) {
    const std::string lower = casefold(raw);
    auto fail = [](QuestionerParseError e) { return QuestionerParse{std::nullopt, e}; };

    const char* tags[3] = {"type", "question", "answer"};
    std::vector<TagBlock> blocks[3];
    for (int i = 0; i < 3; ++i) {
        blocks[i] = find_blocks(raw, lower, tags[i]);
        if (blocks[i].empty()) return fail(QuestionerParseError::MissingTag);
    }
    for (int i = 0; i < 3; ++i) {
        if (blocks[i].size() > 1 || count_open_tags(lower, tags[i]) > 1)
            return fail(QuestionerParseError::DuplicateTag);
    }

    std::string type_text = collapse_ws(casefold(trim(blocks[0][0].content)));
    std::replace(type_text.begin(), type_text.end(), '_', ' ');
    QuestionType qtype;
    if (type_text == "multiple choice") {
        qtype = QuestionType::multiple_choice;
    } else if (type_text == "numerical") {
        qtype = QuestionType::numerical;
    } else if (type_text == "regression") {
        qtype = QuestionType::regression;
    } else {
        return fail(QuestionerParseError::InvalidType);
    }

    std::string question = trim(blocks[1][0].content);
    std::string answer = trim(blocks[2][0].content);
    if (question.empty() || answer.empty()) return fail(QuestionerParseError::EmptyField);

    // Only whitespace may appear outside the three blocks.
    std::string outside = raw;
    std::vector<std::pair<size_t, size_t>> spans;
    for (int i = 0; i < 3; ++i) spans.emplace_back(blocks[i][0].begin, blocks[i][0].end);
    std::sort(spans.begin(), spans.end());
    for (auto it = spans.rbegin(); it != spans.rend(); ++it)
        outside.erase(it->first, it->second - it->first);
    if (!trim(outside).empty()) return fail(QuestionerParseError::ExtraText);

    QuestionRecord rec;
    rec.question_type = qtype;
    rec.question_text = question;
    rec.reference_answer = answer;
    rec.raw_output = raw;
    return QuestionerParse{rec, std::nullopt};
}

SolverResponse parse_solver_output(const std::string& raw) {
    SolverResponse resp;
    resp.raw_output = raw;

    // Last balanced \boxed{...}.
    const std::string marker = "\\boxed{";
    size_t pos = 0;
    std::optional<std::string> boxed;
    while ((pos = raw.find(marker, pos)) != std::string::npos) {
        size_t i = pos + marker.size();
        int depth = 1;
        while (i < raw.size() && depth > 0) {
            if (raw[i] == '{') ++depth;
            else if (raw[i] == '}') --depth;
            ++i;
        }
        if (depth == 0) {
            std::string content = trim(raw.substr(pos + marker.size(), i - 1 - pos - marker.size()));
            if (!content.empty()) boxed = content;
            pos = i;
        } else {
            break;  // unbalanced; nothing further can close
        }
    }
    if (boxed) {
        resp.answer = *boxed;
        resp.format_valid_answer = true;
    }

    const std::string lower = casefold(raw);
    auto segs = find_blocks(raw, lower, "segment");
    if (!segs.empty()) {
        if (auto s = parse_segment(segs.back().content)) {
            resp.segment = *s;
            resp.format_valid_segment = true;
        }
    }
    return resp;
}

std::optional<Segment> parse_segment(const std::string& text) {
    std::string_view s = text;
    size_t pos = 0;
    skip_ws(s, pos);
    auto x = parse_nonneg_decimal(s, pos);
    if (!x) return std::nullopt;
    skip_ws(s, pos);
    if (pos >= s.size() || (s[pos] != 's' && s[pos] != 'S')) return std::nullopt;
    ++pos;
    skip_ws(s, pos);
    // Separator: "-", "--", en dash (U+2013) or em dash (U+2014).
    if (pos < s.size() && s[pos] == '-') {
        ++pos;
        if (pos < s.size() && s[pos] == '-') ++pos;
    } else if (s.substr(pos, 3) == "\xE2\x80\x93" || s.substr(pos, 3) == "\xE2\x80\x94") {
        pos += 3;
    } else {
        return std::nullopt;
    }
    skip_ws(s, pos);
    auto y = parse_nonneg_decimal(s, pos);
    if (!y) return std::nullopt;
    skip_ws(s, pos);
    if (pos >= s.size() || (s[pos] != 's' && s[pos] != 'S')) return std::nullopt;
    ++pos;
    skip_ws(s, pos);
    if (pos != s.size()) return std::nullopt;
    if (!(*x <= *y)) return std::nullopt;
    return Segment{*x, *y};
}

AnswerKey normalize_answer(const std::string& text, QuestionType qtype) {
    AnswerKey key;
    if (qtype == QuestionType::multiple_choice) {
        key.kind = AnswerKey::Kind::multiple_choice;
        std::string folded = casefold(trim(text));
        // Yes/No as a leading word.
        for (const auto& [word, canon] : {std::pair{std::string("yes"), std::string("YES")},
                                          {std::string("no"), std::string("NO")}}) {
            if (folded.rfind(word, 0) == 0 &&
                (folded.size() == word.size() ||
                 !std::isalnum(static_cast<unsigned char>(folded[word.size()])))) {
                key.canonical = canon;
                return key;
            }
        }
        // Option letter, possibly wrapped: "B", "(B)", "B.", "B)".
        size_t i = 0;
        while (i < folded.size() && (folded[i] == '(' || folded[i] == '[')) ++i;
        if (i < folded.size() && folded[i] >= 'a' && folded[i] <= 'd' &&
            (i + 1 == folded.size() ||
             !std::isalnum(static_cast<unsigned char>(folded[i + 1])))) {
            key.canonical = std::string(1, static_cast<char>(std::toupper(folded[i])));
            return key;
        }
        key.canonical = collapse_ws(folded);
        return key;
    }

    if (qtype == QuestionType::numerical || qtype == QuestionType::regression) {
        key.kind = qtype == QuestionType::numerical ? AnswerKey::Kind::numerical
                                                    : AnswerKey::Kind::regression;
        std::string cleaned;
        cleaned.reserve(text.size());
        for (char c : text)
            if (c != ',') cleaned.push_back(c);
        std::string_view sv = cleaned;
        size_t b = sv.find_first_not_of(" \t\r\n$");
        if (b != std::string_view::npos) {
            double value = 0.0;
            auto [p, ec] = std::from_chars(sv.data() + b, sv.data() + sv.size(), value);
            if (ec == std::errc{} && p != sv.data() + b && std::isfinite(value)) {
                key.numeric_value = value;
                key.canonical = format_double(value);
                return key;
            }
        }
        // Unparseable numeric: free-text normalization of the raw string.
        key.canonical = collapse_ws(strip_punct(casefold(text)));
        return key;
    }

    key.kind = AnswerKey::Kind::free_text;
    key.canonical = collapse_ws(strip_punct(casefold(text)));
    return key;
}

bool answers_equivalent(const AnswerKey& a, const AnswerKey& b) {
    if (a.numeric_value && b.numeric_value) {
        double x = *a.numeric_value, y = *b.numeric_value;
        bool regression = a.kind == AnswerKey::Kind::regression ||
                          b.kind == AnswerKey::Kind::regression;
        double rel_tol = regression ? 0.05 : 1e-6;
        double tol = std::max(1e-9, rel_tol * std::max(std::fabs(x), std::fabs(y)));
        return std::fabs(x - y) <= tol;
    }
    return a.canonical == b.canonical;
}

std::string serialize_questioner_record(const QuestionRecord& q) {
    std::string type_text;
    switch (q.question_type) {
        case QuestionType::multiple_choice: type_text = "multiple choice"; break;
        case QuestionType::numerical: type_text = "numerical"; break;
        case QuestionType::regression: type_text = "regression"; break;
    }
    return "<type>" + type_text + "</type>\n<question>" + q.question_text +
           "</question>\n<answer>" + q.reference_answer + "</answer>";
}

std::string serialize_solver_response(const SolverResponse& r) {
    std::string out;
    if (r.answer) out += "\\boxed{" + *r.answer + "}";
    if (r.segment)
        out += " <segment>" + format_double(r.segment->t_s) + "s--" +
               format_double(r.segment->t_e) + "s</segment>";
    return out;
}

}  // namespace evoforge::parse
