#include "multicred/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "multicred/errors.hpp"

namespace multicred {
namespace {

using namespace std::chrono;

std::optional<Timestamp> make_timestamp(int y, unsigned mo, unsigned d, unsigned h, unsigned mi,
                                        unsigned s) {
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

bool parse_uint(std::string_view s, unsigned& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && p == end;
}

std::optional<Timestamp> parse_iso(std::string_view t) {
    // YYYY-MM-DDTHH:MM:SS then optional .fff then Z / +00:00
    if (t.size() < 19 || t[4] != '-' || t[7] != '-' || (t[10] != 'T' && t[10] != ' ') ||
        t[13] != ':' || t[16] != ':') {
        return std::nullopt;
    }
    unsigned y, mo, d, h, mi, s;
    if (!parse_uint(t.substr(0, 4), y) || !parse_uint(t.substr(5, 2), mo) ||
        !parse_uint(t.substr(8, 2), d) || !parse_uint(t.substr(11, 2), h) ||
        !parse_uint(t.substr(14, 2), mi) || !parse_uint(t.substr(17, 2), s)) {
        return std::nullopt;
    }
    auto rest = t.substr(19);
    if (!rest.empty() && rest.front() == '.') {
        std::size_t i = 1;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
        if (i == 1) return std::nullopt;
        rest.remove_prefix(i);
    }
    if (!(rest.empty() || rest == "Z" || rest == "+00:00" || rest == "+0000")) return std::nullopt;
    return make_timestamp(static_cast<int>(y), mo, d, h, mi, s);
}

std::optional<Timestamp> parse_classic(std::string_view t) {
    // "Wed Oct 10 20:19:24 +0000 2018"
    static constexpr std::string_view kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                   "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    if (t.size() != 30 || t[3] != ' ' || t[7] != ' ' || t[10] != ' ' || t[19] != ' ' ||
        t[25] != ' ' || t.substr(20, 5) != "+0000") {
        return std::nullopt;
    }
    const auto mon = t.substr(4, 3);
    const auto it = std::find(std::begin(kMonths), std::end(kMonths), mon);
    if (it == std::end(kMonths)) return std::nullopt;
    unsigned d, h, mi, s, y;
    if (!parse_uint(t.substr(8, 2), d) || !parse_uint(t.substr(11, 2), h) ||
        !parse_uint(t.substr(14, 2), mi) || !parse_uint(t.substr(17, 2), s) ||
        !parse_uint(t.substr(26, 4), y) || t[13] != ':' || t[16] != ':') {
        return std::nullopt;
    }
    const auto mo = static_cast<unsigned>(it - std::begin(kMonths)) + 1;
    return make_timestamp(static_cast<int>(y), mo, d, h, mi, s);
}

// Code points, counting every byte that does not continue a sequence.
std::size_t utf8_length(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(
        s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

DateTimeParts decompose(Timestamp t) {
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const hh_mm_ss hms{t - day_start};
    return {static_cast<int>(ymd.year()),
            static_cast<unsigned>(ymd.month()),
            static_cast<unsigned>(ymd.day()),
            static_cast<unsigned>(hms.hours().count()),
            static_cast<unsigned>(hms.minutes().count()),
            static_cast<unsigned>(hms.seconds().count())};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    if (auto iso = parse_iso(text)) return iso;
    return parse_classic(text);
}

std::string format_timestamp(Timestamp t) {
    const auto p = decompose(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02uZ", p.year, p.month, p.day,
                  p.hour, p.minute, p.second);
    return buf;
}

ClassificationSystem::ClassificationSystem(int num_classes) : num_classes_(num_classes) {
    if (!is_supported(num_classes)) {
        throw DomainError("unsupported number of classes " + std::to_string(num_classes) +
                          " (expected 4, 6, 8 or 10)");
    }
}

bool ClassificationSystem::is_supported(int num_classes) {
    return num_classes == 4 || num_classes == 6 || num_classes == 8 || num_classes == 10;
}

int bin_score(double score, ClassificationSystem system) {
    if (!(score >= 0.0 && score <= 100.0)) {
        std::ostringstream msg;
        msg << "score " << score << " outside [0,100]";
        throw DomainError(msg.str());
    }
    const int c = system.num_classes();
    const int idx = static_cast<int>(std::floor(score * c / 100.0));
    return std::min(idx, c - 1);
}

double newsguard_score(const CriteriaFlags& flags) {
    double total = 0.0;
    for (std::size_t i = 0; i < kNumCriteria; ++i) {
        if (flags[i]) total += kCriterionWeights[i];
    }
    return total;
}

std::vector<std::string> validate_record(const UserRecord& record) {
    std::vector<std::string> out;
    if (record.user_id.empty()) out.emplace_back("user_id must be non-empty");
    if (record.score && !(*record.score >= 0.0 && *record.score <= 100.0)) {
        out.emplace_back("score out of [0,100]");
    }
    if (record.tweets.size() > kMaxTweets) {
        out.push_back("tweets exceed cap " + std::to_string(kMaxTweets));
    }
    if (record.comments.size() > kMaxComments) {
        out.push_back("comments exceed cap " + std::to_string(kMaxComments));
    }

    const auto& p = record.profile;
    const std::pair<const char*, std::int64_t> profile_counts[] = {
        {"followers_count", p.followers_count}, {"friends_count", p.friends_count},
        {"listed_count", p.listed_count},       {"favourites_count", p.favourites_count},
        {"statuses_count", p.statuses_count},
    };
    for (const auto& [name, v] : profile_counts) {
        if (v < 0) out.push_back(std::string("profile.") + name + " must be >= 0");
    }

    for (std::size_t i = 0; i < record.tweets.size(); ++i) {
        const auto& t = record.tweets[i];
        const std::string where = "tweets[" + std::to_string(i) + "].";
        const std::pair<const char*, std::int64_t> counts[] = {
            {"retweet_count", t.retweet_count}, {"favorite_count", t.favorite_count},
            {"hashtag_count", t.hashtag_count}, {"mention_count", t.mention_count},
            {"url_count", t.url_count},         {"symbol_count", t.symbol_count},
        };
        for (const auto& [name, v] : counts) {
            if (v < 0) out.push_back(where + name + " must be >= 0");
        }
        if (utf8_length(t.text) > kMaxTweetChars) {
            out.push_back(where + "text exceeds " + std::to_string(kMaxTweetChars) + " characters");
        }
    }
    return out;
}

}  // namespace multicred
