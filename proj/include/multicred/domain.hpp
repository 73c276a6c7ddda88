#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace multicred {

using Timestamp = std::chrono::sys_seconds;

/// Calendar fields of a UTC instant, the form the feature table consumes.
struct DateTimeParts {
    int year = 0;
    unsigned month = 0;
    unsigned day = 0;
    unsigned hour = 0;
    unsigned minute = 0;
    unsigned second = 0;
};

DateTimeParts decompose(Timestamp t);

/// Parses ISO-8601 UTC (`2019-03-04T05:06:07Z`, optional fractional seconds or
/// `+00:00`) and the classic API form (`Wed Oct 10 20:19:24 +0000 2018`).
/// Returns nullopt for anything else or for impossible calendar dates.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_timestamp(Timestamp t);

struct UserProfile {
    std::string name;
    std::string screen_name;
    std::optional<std::string> location;
    std::optional<std::string> description;
    std::optional<std::string> url;
    bool protected_account = false;
    std::int64_t followers_count = 0;
    std::int64_t friends_count = 0;
    std::int64_t listed_count = 0;
    Timestamp created_at{};
    std::int64_t favourites_count = 0;
    bool geo_enabled = false;
    bool verified = false;
    std::int64_t statuses_count = 0;
    bool profile_use_background_image = false;

    bool operator==(const UserProfile&) const = default;
};

struct Tweet {
    Timestamp created_at{};
    std::string text;
    bool truncated = false;
    std::int64_t retweet_count = 0;
    std::int64_t favorite_count = 0;
    bool favorited = false;
    bool retweeted = false;
    bool is_quote_status = false;
    std::int64_t hashtag_count = 0;
    std::int64_t mention_count = 0;
    std::int64_t url_count = 0;
    std::int64_t symbol_count = 0;
    bool has_poll = false;

    bool operator==(const Tweet&) const = default;
};

struct Comment {
    std::string text;

    bool operator==(const Comment&) const = default;
};

inline constexpr std::size_t kMaxTweets = 3250;
inline constexpr std::size_t kMaxComments = 800;
inline constexpr std::size_t kMaxTweetChars = 4000;

struct UserRecord {
    std::string user_id;
    UserProfile profile;
    std::vector<Tweet> tweets;
    std::vector<Comment> comments;
    std::optional<double> score;

    bool operator==(const UserRecord&) const = default;
};

/// Number of credibility levels; only 4, 6, 8 and 10 are valid.
class ClassificationSystem {
public:
    explicit ClassificationSystem(int num_classes);

    int num_classes() const { return num_classes_; }
    static bool is_supported(int num_classes);

    bool operator==(const ClassificationSystem&) const = default;

private:
    int num_classes_;
};

/// Equal-width bin of a [0,100] score; 100 folds into the top class and class 0
/// is the lowest credibility. Throws DomainError for scores outside [0,100].
int bin_score(double score, ClassificationSystem system);

/// The nine journalistic criteria, most heavily weighted first.
enum class Criterion : std::size_t {
    no_repeated_false_content,
    responsible_gathering,
    corrects_errors,
    separates_news_and_opinion,
    avoids_deceptive_headlines,
    discloses_ownership,
    labels_advertising,
    reveals_leadership,
    names_content_creators,
};

inline constexpr std::size_t kNumCriteria = 9;
inline constexpr std::array<double, kNumCriteria> kCriterionWeights = {22.0, 18.0, 12.5, 12.5, 10.0,
                                                                       7.5,  7.5,  5.0,  5.0};

using CriteriaFlags = std::array<bool, kNumCriteria>;

/// Sum of the weights of the satisfied criteria.
double newsguard_score(const CriteriaFlags& flags);

/// Every broken invariant, each naming the field and the rule; empty when valid.
std::vector<std::string> validate_record(const UserRecord& record);

}  // namespace multicred
