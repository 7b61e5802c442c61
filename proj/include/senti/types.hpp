#ifndef SENTI_TYPES_HPP
#define SENTI_TYPES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace senti {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Class indices are fixed: negative=0, neutral=1, positive=2.
enum class Sentiment : int { negative = 0, neutral = 1, positive = 2 };

inline constexpr int kNumClasses = 3;

const char* sentiment_name(Sentiment s);

// Case-insensitive match against the three class names; nullopt on miss.
std::optional<Sentiment> parse_sentiment(const std::string& raw);

struct LabeledExample {
    int64_t id = 0;
    std::string text;
    Sentiment label = Sentiment::neutral;
    // Extra input columns (e.g. category, rating) ride along but are never
    // fed to any model.
    std::map<std::string, std::string> metadata;
};

} // namespace senti

#endif
