#include "senti/text_prep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace senti {

namespace {

// --- minimal UTF-8 walking ------------------------------------------------

// Decodes the codepoint at s[i], advancing i. Invalid bytes decode as
// themselves (latin-1 fallback) so malformed input never throws.
uint32_t decode_utf8(const std::string& s, size_t& i) {
    unsigned char c0 = static_cast<unsigned char>(s[i]);
    if (c0 < 0x80) { i += 1; return c0; }
    auto cont = [&](size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    if ((c0 & 0xE0) == 0xC0 && cont(1)) {
        uint32_t cp = (c0 & 0x1Fu) << 6 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
        i += 2;
        return cp;
    }
    if ((c0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        uint32_t cp = (c0 & 0x0Fu) << 12 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
        i += 3;
        return cp;
    }
    if ((c0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        uint32_t cp = (c0 & 0x07u) << 18 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                      (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
        i += 4;
        return cp;
    }
    i += 1;
    return c0;
}

void encode_utf8(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Simple 1:1 lowercase for ASCII, Latin-1 and Latin Extended-A.
uint32_t lower_cp(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp == 0x130) return 'i';  // Turkish dotted capital I; dot dropped
    if (cp == 0x178) return 0xFF; // Y with diaeresis
    if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x179 || cp == 0x17B || cp == 0x17D) return cp + 1;
    return cp;
}

bool is_letter_cp(uint32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    if (cp >= 0xC0 && cp <= 0xFF && cp != 0xD7 && cp != 0xF7) return true;
    if (cp >= 0x100 && cp <= 0x17F) return true;
    return false;
}

bool is_digit_cp(uint32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_space_byte(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// --- emoji -> sentiment-token map ------------------------------------------

struct EmojiEntry {
    std::string bytes;
    const char* token;
};

const std::vector<EmojiEntry>& emoji_table() {
    static const std::vector<EmojiEntry> table = [] {
        std::vector<EmojiEntry> t = {
            {"\U0001F600", "emopos"}, {"\U0001F601", "emopos"}, {"\U0001F602", "emopos"},
            {"\U0001F603", "emopos"}, {"\U0001F604", "emopos"}, {"\U0001F606", "emopos"},
            {"\U0001F60A", "emopos"}, {"\U0001F60D", "emopos"}, {"\U0001F60E", "emopos"},
            {"\U0001F618", "emopos"}, {"\U0001F642", "emopos"}, {"\U0001F929", "emopos"},
            {"\U0001F970", "emopos"}, {"\U0001F44D", "emopos"}, {"\U0001F44F", "emopos"},
            {"\U0001F64F", "emopos"}, {"\U0001F4AF", "emopos"}, {"\U0001F525", "emopos"},
            {"❤️", "emopos"}, {"❤", "emopos"}, {"✨", "emopos"},
            {"\U0001F620", "emoneg"}, {"\U0001F621", "emoneg"}, {"\U0001F92C", "emoneg"},
            {"\U0001F622", "emoneg"}, {"\U0001F62D", "emoneg"}, {"\U0001F61E", "emoneg"},
            {"\U0001F614", "emoneg"}, {"\U0001F624", "emoneg"}, {"\U0001F612", "emoneg"},
            {"\U0001F615", "emoneg"}, {"\U0001F641", "emoneg"}, {"\U0001F616", "emoneg"},
            {"\U0001F629", "emoneg"}, {"\U0001F62B", "emoneg"}, {"\U0001F44E", "emoneg"},
            {"\U0001F494", "emoneg"}, {"☹️", "emoneg"}, {"☹", "emoneg"},
            {"\U0001F610", "emoneu"}, {"\U0001F611", "emoneu"}, {"\U0001F914", "emoneu"},
        };
        // Longest byte sequence first so "<heart><fe0f>" wins over "<heart>".
        std::stable_sort(t.begin(), t.end(), [](const EmojiEntry& a, const EmojiEntry& b) {
            return a.bytes.size() > b.bytes.size();
        });
        return t;
    }();
    return table;
}

std::string replace_emoji(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        bool replaced = false;
        if (c >= 0xE2) { // all mapped emoji are 3- or 4-byte sequences
            for (const auto& e : emoji_table()) {
                if (text.compare(i, e.bytes.size(), e.bytes) == 0) {
                    out.push_back(' ');
                    out.append(e.token);
                    out.push_back(' ');
                    i += e.bytes.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

bool token_is_clean(const std::string& tok) {
    if (tok.empty()) return false;
    size_t i = 0;
    while (i < tok.size()) {
        uint32_t cp = decode_utf8(tok, i);
        if (!is_letter_cp(cp) && !is_digit_cp(cp)) return false;
        if (lower_cp(cp) != cp) return false;
    }
    return true;
}

} // namespace

// --- SlangLexicon -----------------------------------------------------------

void SlangLexicon::insert(const std::string& key, const std::string& value,
                          const std::string& where) {
    if (!token_is_clean(key))
        throw Error("slang lexicon " + where + ": key '" + key +
                    "' must be a lowercase letters/digits token");
    if (!token_is_clean(value))
        throw Error("slang lexicon " + where + ": value '" + value +
                    "' must be a lowercase letters/digits token");
    if (key == value)
        throw Error("slang lexicon " + where + ": key '" + key + "' maps to itself");
    if (entries_.count(key))
        throw Error("slang lexicon " + where + ": duplicate key '" + key + "'");
    entries_.emplace(key, value);
}

void SlangLexicon::validate() const {
    // Values must not themselves be keys, otherwise a second pipeline pass
    // would rewrite them again and preprocessing would not be idempotent.
    for (const auto& [k, v] : entries_) {
        if (entries_.count(v))
            throw Error("slang lexicon: canonical form '" + v + "' (from '" + k +
                        "') is itself a slang key");
    }
}

SlangLexicon SlangLexicon::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open slang lexicon: " + path);
    SlangLexicon lex;
    lex.entries_.reserve(256);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error("slang lexicon " + path + ":" + std::to_string(lineno) +
                        ": expected slang<TAB>canonical");
        lex.insert(line.substr(0, tab), line.substr(tab + 1),
                   path + ":" + std::to_string(lineno));
    }
    lex.validate();
    return lex;
}

SlangLexicon SlangLexicon::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    SlangLexicon lex;
    for (const auto& [k, v] : pairs) lex.insert(k, v, "entry '" + k + "'");
    lex.validate();
    return lex;
}

const std::string& SlangLexicon::normalize(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? token : it->second;
}

// --- StopwordList -----------------------------------------------------------

StopwordList StopwordList::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open stopword list: " + path);
    StopwordList sw;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        sw.words_.insert(case_fold(line));
    }
    return sw;
}

StopwordList StopwordList::from_words(const std::vector<std::string>& words) {
    StopwordList sw;
    for (const auto& w : words) sw.words_.insert(case_fold(w));
    return sw;
}

// --- pipeline stages --------------------------------------------------------

std::string case_fold(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) encode_utf8(lower_cp(decode_utf8(text, i)), out);
    return out;
}

namespace {

bool ci_prefix(const std::string& s, size_t i, const char* lit) {
    for (size_t k = 0; lit[k]; ++k) {
        if (i + k >= s.size()) return false;
        char c = s[i + k];
        if (c >= 'A' && c <= 'Z') c += 0x20;
        if (c != lit[k]) return false;
    }
    return true;
}

// Matches a URL starting at i (token boundary assumed): either "www." or
// "<scheme>://". Returns one past the end of the URL, or i on no match.
size_t match_url(const std::string& s, size_t i) {
    bool hit = false;
    if (ci_prefix(s, i, "www.")) {
        hit = true;
    } else {
        size_t j = i;
        if (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) {
            ++j;
            while (j < s.size() && j - i < 32 &&
                   (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '+' ||
                    s[j] == '.' || s[j] == '-'))
                ++j;
            if (s.compare(j, 3, "://") == 0) hit = true;
        }
    }
    if (!hit) return i;
    size_t end = i;
    while (end < s.size() && !is_space_byte(s[end])) ++end;
    return end;
}

// Matches an HTML tag "<...>" starting at i; returns one past '>' or i.
size_t match_tag(const std::string& s, size_t i) {
    if (s[i] != '<') return i;
    size_t close = s.find('>', i + 1);
    return close == std::string::npos ? i : close + 1;
}

} // namespace

std::string strip_noise(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        size_t end = i;
        bool boundary = (i == 0) || is_space_byte(text[i - 1]);
        if (boundary) end = match_url(text, i);
        if (end == i) end = match_tag(text, i);
        if (end > i) {
            // Drop the span plus surrounding whitespace; keep one separator
            // only when text remains on both sides.
            while (!out.empty() && is_space_byte(out.back())) out.pop_back();
            i = end;
            while (i < text.size() && is_space_byte(text[i])) ++i;
            if (!out.empty() && i < text.size()) out.push_back(' ');
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

std::string filter_chars(const std::string& text) {
    std::string expanded = replace_emoji(text);
    std::string spaced;
    spaced.reserve(expanded.size());
    size_t i = 0;
    while (i < expanded.size()) {
        uint32_t cp = decode_utf8(expanded, i);
        if (is_letter_cp(cp) || is_digit_cp(cp))
            encode_utf8(cp, spaced);
        else
            spaced.push_back(' ');
    }
    std::string out;
    out.reserve(spaced.size());
    for (char c : spaced) {
        if (c == ' ') {
            if (!out.empty() && out.back() != ' ') out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    if (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> tokenize_whitespace(const std::string& text) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space_byte(text[i])) ++i;
        size_t start = i;
        while (i < text.size() && !is_space_byte(text[i])) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

std::vector<std::string> normalize_slang(const std::vector<std::string>& tokens,
                                         const SlangLexicon& lexicon) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lexicon.normalize(t));
    return out;
}

CleanDocument preprocess(const std::string& text, const SlangLexicon& lexicon,
                         const StopwordList& stopwords, int64_t original_id) {
    std::string s = filter_chars(strip_noise(case_fold(text)));
    std::vector<std::string> tokens = normalize_slang(tokenize_whitespace(s), lexicon);
    CleanDocument doc;
    doc.original_id = original_id;
    doc.tokens.reserve(tokens.size());
    for (auto& t : tokens)
        if (!stopwords.contains(t)) doc.tokens.push_back(std::move(t));
    return doc;
}

std::vector<CleanDocument> preprocess_corpus(const std::vector<LabeledExample>& corpus,
                                             const SlangLexicon& lexicon,
                                             const StopwordList& stopwords) {
    std::vector<CleanDocument> docs;
    docs.reserve(corpus.size());
    for (const auto& ex : corpus) docs.push_back(preprocess(ex.text, lexicon, stopwords, ex.id));
    return docs;
}

} // namespace senti
