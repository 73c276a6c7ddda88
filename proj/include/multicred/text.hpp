#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace multicred {

/// Lowercase stopword set, one word per line on disk.
class StopwordList {
public:
    StopwordList() = default;
    explicit StopwordList(std::unordered_set<std::string> words) : words_(std::move(words)) {}

    /// The list shipped with the library.
    static const StopwordList& english();
    static StopwordList from_file(const std::filesystem::path& path);
    static StopwordList parse(std::string_view contents);

    bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

struct CleanText {
    std::vector<std::string> tokens;
    std::string joined;

    bool operator==(const CleanText&) const = default;
};

/// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view text);

bool is_url_token(std::string_view token);

/// Lowercases, then drops links, hashtags, usernames and stopwords. Tokens are
/// whitespace separated; surrounding ASCII punctuation is trimmed (a leading
/// '#' or '@' is kept so the token is recognised) and punctuation-only tokens
/// vanish.
CleanText preprocess(std::string_view text, const StopwordList& stopwords = StopwordList::english());

}  // namespace multicred
