#ifndef SENTI_TEXT_PREP_HPP
#define SENTI_TEXT_PREP_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "senti/types.hpp"

namespace senti {

// slang -> canonical token map. Keys and values are lowercase single tokens
// of letters/digits; no value may itself be a key (replacement is single
// pass, so chains would make the pipeline non-idempotent) and no key maps
// to itself. Lookup is total: a missing key normalizes to itself.
class SlangLexicon {
public:
    SlangLexicon() = default;

    // File format: one `slang<TAB>canonical` pair per line, '#' comments,
    // blank lines ignored. Throws Error on malformed or invalid entries.
    static SlangLexicon from_file(const std::string& path);
    static SlangLexicon from_pairs(
        const std::vector<std::pair<std::string, std::string>>& pairs);

    const std::string& normalize(const std::string& token) const;
    size_t size() const { return entries_.size(); }
    const std::unordered_map<std::string, std::string>& entries() const { return entries_; }

private:
    void insert(const std::string& key, const std::string& value, const std::string& where);
    void validate() const;
    std::unordered_map<std::string, std::string> entries_;
};

class StopwordList {
public:
    StopwordList() = default;

    // One token per line, '#' comments. Entries are lowercased on load.
    static StopwordList from_file(const std::string& path);
    static StopwordList from_words(const std::vector<std::string>& words);

    bool contains(const std::string& token) const { return words_.count(token) > 0; }
    size_t size() const { return words_.size(); }
    const std::unordered_set<std::string>& words() const { return words_; }

private:
    std::unordered_set<std::string> words_;
};

struct CleanDocument {
    std::vector<std::string> tokens;
    int64_t original_id = -1;
};

// Stage 1: unicode-aware lowercase. Covers ASCII, Latin-1 and Latin
// Extended-A; other codepoints pass through unchanged. Idempotent.
std::string case_fold(const std::string& text);

// Stage 2: removes URLs (scheme:// or www.-prefixed, up to whitespace) and
// HTML tags <...>. Whitespace around a removal collapses to one space;
// text without URLs/tags comes back unchanged.
std::string strip_noise(const std::string& text);

// Stage 3: mapped emoji become sentiment tokens (emopos/emoneg/emoneu)
// first, then every character outside {letters, digits, space} turns into
// a space, runs of spaces collapse, and the ends are trimmed.
std::string filter_chars(const std::string& text);

// Stage 4: single-pass lexicon replacement; replacements are not looked up
// again. Tokens must already be lowercase.
std::vector<std::string> normalize_slang(const std::vector<std::string>& tokens,
                                         const SlangLexicon& lexicon);

std::vector<std::string> tokenize_whitespace(const std::string& text);

// Full pipeline: case_fold -> strip_noise -> filter_chars -> tokenize ->
// normalize_slang -> stopword removal. An empty token list is legal output.
CleanDocument preprocess(const std::string& text, const SlangLexicon& lexicon,
                         const StopwordList& stopwords, int64_t original_id = -1);

std::vector<CleanDocument> preprocess_corpus(const std::vector<LabeledExample>& corpus,
                                             const SlangLexicon& lexicon,
                                             const StopwordList& stopwords);

} // namespace senti

#endif
