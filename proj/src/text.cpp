#include "multicred/text.hpp"

#include <fstream>
#include <sstream>

#include "multicred/errors.hpp"
#include "multicred/generated/default_data.hpp"

namespace multicred {
namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
}

std::string_view trim_punct(std::string_view tok) {
    while (!tok.empty() && is_ascii_punct(static_cast<unsigned char>(tok.back()))) {
        tok.remove_suffix(1);
    }
    while (!tok.empty() && tok.front() != '#' && tok.front() != '@' &&
           is_ascii_punct(static_cast<unsigned char>(tok.front()))) {
        tok.remove_prefix(1);
    }
    // A bare sigil carries no word.
    if (tok == "#" || tok == "@") return {};
    return tok;
}

}  // namespace

const StopwordList& StopwordList::english() {
    static const StopwordList list = parse(data::kDefaultStopwords);
    return list;
}

StopwordList StopwordList::parse(std::string_view contents) {
    std::unordered_set<std::string> words;
    std::istringstream in{std::string(contents)};
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && is_space(static_cast<unsigned char>(line.back()))) line.pop_back();
        for (auto& ch : line) {
            if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
        }
        if (!line.empty()) words.insert(line);
    }
    return StopwordList(std::move(words));
}

StopwordList StopwordList::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open stopword list " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string sanitize_utf8(std::string_view text) {
    static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        }
        bool ok = len != 0 && i + len <= text.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80) {
                ok = false;
            } else {
                cp = (cp << 6) | (cc & 0x3F);
            }
        }
        // Reject overlong forms, surrogates and out-of-range code points.
        if (ok) {
            static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
            ok = cp >= kMin[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
        }
        if (ok) {
            out.append(text.substr(i, len));
            i += len;
        } else {
            out.append(kReplacement);
            ++i;
        }
    }
    return out;
}

bool is_url_token(std::string_view token) {
    return token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.");
}

CleanText preprocess(std::string_view text, const StopwordList& stopwords) {
    std::string lowered = sanitize_utf8(text);
    for (auto& ch : lowered) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }

    CleanText out;
    std::size_t i = 0;
    while (i < lowered.size()) {
        while (i < lowered.size() && is_space(static_cast<unsigned char>(lowered[i]))) ++i;
        const std::size_t start = i;
        while (i < lowered.size() && !is_space(static_cast<unsigned char>(lowered[i]))) ++i;
        if (start == i) break;

        const auto tok = trim_punct(std::string_view(lowered).substr(start, i - start));
        if (tok.empty()) continue;
        if (is_url_token(tok)) continue;
        if (tok.front() == '#') continue;
        if (tok.front() == '@') continue;
        if (stopwords.contains(tok)) continue;
        out.tokens.emplace_back(tok);
    }

    for (std::size_t k = 0; k < out.tokens.size(); ++k) {
        if (k) out.joined.push_back(' ');
        out.joined += out.tokens[k];
    }
    return out;
}

}  // namespace multicred
