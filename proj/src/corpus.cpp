#include "senti/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "senti/rng.hpp"

namespace senti {

const char* sentiment_name(Sentiment s) {
    switch (s) {
        case Sentiment::negative: return "negative";
        case Sentiment::neutral: return "neutral";
        case Sentiment::positive: return "positive";
    }
    return "?";
}

std::optional<Sentiment> parse_sentiment(const std::string& raw) {
    std::string low;
    low.reserve(raw.size());
    for (char c : raw) low.push_back(c >= 'A' && c <= 'Z' ? char(c + 0x20) : c);
    if (low == "negative") return Sentiment::negative;
    if (low == "neutral") return Sentiment::neutral;
    if (low == "positive") return Sentiment::positive;
    return std::nullopt;
}

namespace {

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// RFC 4180: comma-separated, double-quote quoting with "" escapes, quoted
// fields may contain newlines. Returns one record per row.
std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };
    while (i < content.size()) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field.push_back(c);
                ++i;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
            ++i;
        } else if (c == ',') {
            end_field();
            ++i;
        } else if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
            end_row();
            i += 2;
        } else if (c == '\n' || c == '\r') {
            end_row();
            ++i;
        } else {
            field.push_back(c);
            field_started = true;
            ++i;
        }
    }
    if (in_quotes) throw Error("malformed CSV: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<LabeledExample> load_csv(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto rows = parse_csv(buf.str());
    if (rows.empty()) throw Error("empty corpus: " + path);

    const auto& header = rows[0];
    auto col_of = [&](const std::string& name) -> size_t {
        for (size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return c;
        throw Error("missing column: " + name);
    };
    size_t text_col = col_of(opts.text_field);
    size_t label_col = col_of(opts.label_field);

    std::vector<LabeledExample> corpus;
    corpus.reserve(rows.size() - 1);
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() == 1 && cells[0].empty()) continue; // trailing blank line
        if (cells.size() != header.size())
            throw Error("row " + std::to_string(r) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
        LabeledExample ex;
        ex.id = static_cast<int64_t>(corpus.size());
        ex.text = cells[text_col];
        if (blank(ex.text)) throw Error("row " + std::to_string(r) + ": empty text");
        auto label = parse_sentiment(cells[label_col]);
        if (!label)
            throw Error("unknown label '" + cells[label_col] + "' at row " + std::to_string(r));
        ex.label = *label;
        for (size_t c = 0; c < cells.size(); ++c)
            if (c != text_col && c != label_col) ex.metadata[header[c]] = cells[c];
        corpus.push_back(std::move(ex));
    }
    if (corpus.empty()) throw Error("empty corpus: " + path);
    return corpus;
}

std::vector<LabeledExample> load_jsonl(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file: " + path);
    std::vector<LabeledExample> corpus;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("row " + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
        if (!obj.contains(opts.text_field)) throw Error("missing key: " + opts.text_field);
        if (!obj.contains(opts.label_field)) throw Error("missing key: " + opts.label_field);
        LabeledExample ex;
        ex.id = static_cast<int64_t>(corpus.size());
        ex.text = obj[opts.text_field].get<std::string>();
        if (blank(ex.text)) throw Error("row " + std::to_string(lineno) + ": empty text");
        std::string raw_label = obj[opts.label_field].is_string()
                                    ? obj[opts.label_field].get<std::string>()
                                    : obj[opts.label_field].dump();
        auto label = parse_sentiment(raw_label);
        if (!label)
            throw Error("unknown label '" + raw_label + "' at row " + std::to_string(lineno));
        ex.label = *label;
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (it.key() == opts.text_field || it.key() == opts.label_field) continue;
            ex.metadata[it.key()] =
                it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        }
        corpus.push_back(std::move(ex));
    }
    if (corpus.empty()) throw Error("empty corpus: " + path);
    return corpus;
}

// Largest-remainder allocation of n items to parts with the given ratios.
std::array<int64_t, 3> largest_remainder(int64_t n, const std::array<double, 3>& ratios) {
    std::array<int64_t, 3> alloc{};
    std::array<double, 3> frac{};
    int64_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
        double quota = ratios[p] * static_cast<double>(n);
        alloc[p] = static_cast<int64_t>(std::floor(quota));
        frac[p] = quota - static_cast<double>(alloc[p]);
        assigned += alloc[p];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    for (int64_t r = 0; r < n - assigned; ++r) ++alloc[order[static_cast<size_t>(r)]];
    return alloc;
}

} // namespace

std::vector<LabeledExample> load_corpus(const std::string& path, CorpusFormat format,
                                        const LoadOptions& opts) {
    return format == CorpusFormat::csv ? load_csv(path, opts) : load_jsonl(path, opts);
}

DatasetSplit stratified_split(const std::vector<LabeledExample>& corpus,
                              const std::array<double, 3>& ratios, uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0)
        throw Error("split ratios must be positive");
    if (std::abs(sum - 1.0) > 1e-9) throw Error("split ratios must sum to 1");

    std::array<std::vector<int64_t>, 3> by_class;
    for (const auto& ex : corpus) by_class[static_cast<int>(ex.label)].push_back(ex.id);
    for (int c = 0; c < kNumClasses; ++c) {
        if (by_class[c].size() < 3)
            throw Error(std::string("class '") + sentiment_name(static_cast<Sentiment>(c)) +
                        "' has " + std::to_string(by_class[c].size()) +
                        " examples, fewer than the 3 split parts");
    }

    DatasetSplit split;
    split.seed = seed;
    split.ratios = ratios;
    for (int c = 0; c < kNumClasses; ++c) {
        auto ids = by_class[c];
        SplitMix64 rng(mix_seed(seed, static_cast<uint64_t>(c)));
        shuffle(ids, rng);
        auto alloc = largest_remainder(static_cast<int64_t>(ids.size()), ratios);
        size_t pos = 0;
        for (int64_t i = 0; i < alloc[0]; ++i) split.train.push_back(ids[pos++]);
        for (int64_t i = 0; i < alloc[1]; ++i) split.validation.push_back(ids[pos++]);
        for (int64_t i = 0; i < alloc[2]; ++i) split.test.push_back(ids[pos++]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

FoldPlan make_folds(const std::vector<int64_t>& ids, const std::vector<Sentiment>& labels,
                    int k, uint64_t seed) {
    if (k < 2) throw Error("fold count must be at least 2");
    if (ids.size() != labels.size()) throw Error("ids/labels length mismatch");

    std::array<std::vector<int64_t>, 3> by_class;
    for (size_t i = 0; i < ids.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(ids[i]);
    for (int c = 0; c < kNumClasses; ++c) {
        if (by_class[c].size() < static_cast<size_t>(k))
            throw Error(std::string("class '") + sentiment_name(static_cast<Sentiment>(c)) +
                        "' has " + std::to_string(by_class[c].size()) + " examples, fewer than k=" +
                        std::to_string(k));
    }

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    for (int c = 0; c < kNumClasses; ++c) {
        auto class_ids = by_class[c];
        SplitMix64 rng(mix_seed(seed, 0x10 + static_cast<uint64_t>(c)));
        shuffle(class_ids, rng);
        // Deal round-robin, rotating the starting fold per class so the
        // leftover examples do not all land in fold 0.
        for (size_t i = 0; i < class_ids.size(); ++i)
            plan.assignments[class_ids[i]] =
                static_cast<int>((i + static_cast<size_t>(c)) % static_cast<size_t>(k));
    }
    return plan;
}

std::vector<LabeledExample> subset(const std::vector<LabeledExample>& corpus,
                                   const std::vector<int64_t>& ids) {
    std::map<int64_t, const LabeledExample*> by_id;
    for (const auto& ex : corpus) by_id[ex.id] = &ex;
    std::vector<LabeledExample> out;
    out.reserve(ids.size());
    for (int64_t id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error("unknown example id: " + std::to_string(id));
        out.push_back(*it->second);
    }
    return out;
}

std::string split_to_json(const DatasetSplit& split) {
    nlohmann::json j;
    j["seed"] = split.seed;
    j["ratios"] = split.ratios;
    j["parts"]["train"] = split.train;
    j["parts"]["validation"] = split.validation;
    j["parts"]["test"] = split.test;
    return j.dump(2) + "\n";
}

std::string folds_to_json(const FoldPlan& plan) {
    std::vector<std::vector<int64_t>> folds(static_cast<size_t>(plan.k));
    for (const auto& [id, f] : plan.assignments) folds[static_cast<size_t>(f)].push_back(id);
    nlohmann::json j;
    j["seed"] = plan.seed;
    j["k"] = plan.k;
    j["folds"] = folds;
    return j.dump(2) + "\n";
}

DatasetSplit split_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    DatasetSplit s;
    s.seed = j.at("seed").get<uint64_t>();
    s.ratios = j.at("ratios").get<std::array<double, 3>>();
    s.train = j.at("parts").at("train").get<std::vector<int64_t>>();
    s.validation = j.at("parts").at("validation").get<std::vector<int64_t>>();
    s.test = j.at("parts").at("test").get<std::vector<int64_t>>();
    return s;
}

FoldPlan folds_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    FoldPlan p;
    p.seed = j.at("seed").get<uint64_t>();
    p.k = j.at("k").get<int>();
    auto folds = j.at("folds").get<std::vector<std::vector<int64_t>>>();
    for (size_t f = 0; f < folds.size(); ++f)
        for (int64_t id : folds[f]) p.assignments[id] = static_cast<int>(f);
    return p;
}

} // namespace senti
