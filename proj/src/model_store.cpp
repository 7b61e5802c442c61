#include "senti/model_store.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace senti {

const char* family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::logistic: return "logistic";
        case ModelFamily::svm_linear: return "svm_linear";
        case ModelFamily::gbdt: return "gbdt";
        case ModelFamily::bilstm: return "bilstm";
    }
    return "?";
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

constexpr char kMagic[8] = {'S', 'E', 'N', 'T', 'I', 'B', 'v', '1'};

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        buf_.append(s);
    }
    void f64s(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void f32s(const std::vector<float>& v) {
        u64(v.size());
        for (float x : v) f32(x);
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const std::string& data, std::string context)
        : data_(data), ctx_(std::move(context)) {}

    uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
    uint32_t u32() {
        const char* p = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    uint64_t u64() {
        const char* p = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        uint32_t n = u32();
        const char* p = take(n);
        return std::string(p, n);
    }
    std::vector<double> f64s() {
        uint64_t n = u64();
        check_room(n * 8);
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    std::vector<float> f32s() {
        uint64_t n = u64();
        check_room(n * 4);
        std::vector<float> v(n);
        for (auto& x : v) x = f32();
        return v;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void check_room(uint64_t n) const {
        if (pos_ + n > data_.size())
            throw Error("truncated model file in section '" + ctx_ + "'");
    }
    const char* take(uint64_t n) {
        check_room(n);
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    const std::string& data_;
    std::string ctx_;
    size_t pos_ = 0;
};

// --- section payloads -------------------------------------------------------

std::string write_prep(const ModelArtifact& a) {
    ByteWriter w;
    std::vector<std::pair<std::string, std::string>> entries(a.lexicon.entries().begin(),
                                                             a.lexicon.entries().end());
    std::sort(entries.begin(), entries.end());
    w.u64(entries.size());
    for (const auto& [k, v] : entries) {
        w.str(k);
        w.str(v);
    }
    std::vector<std::string> words(a.stopwords.words().begin(), a.stopwords.words().end());
    std::sort(words.begin(), words.end());
    w.u64(words.size());
    for (const auto& word : words) w.str(word);
    return w.bytes();
}

void read_prep(const std::string& payload, ModelArtifact& a) {
    ByteReader r(payload, "prep");
    uint64_t n = r.u64();
    std::vector<std::pair<std::string, std::string>> entries;
    entries.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        std::string k = r.str();
        std::string v = r.str();
        entries.emplace_back(std::move(k), std::move(v));
    }
    a.lexicon = SlangLexicon::from_pairs(entries);
    uint64_t m = r.u64();
    std::vector<std::string> words;
    words.reserve(m);
    for (uint64_t i = 0; i < m; ++i) words.push_back(r.str());
    a.stopwords = StopwordList::from_words(words);
}

std::string write_features(const ModelArtifact& a) {
    ByteWriter w;
    if (a.family == ModelFamily::bilstm) {
        const NeuralVocab& v = a.bilstm->vocab;
        w.u8(1);
        w.i32(v.max_size);
        w.i32(v.max_seq_len);
        std::vector<std::string> by_id(v.token_to_id.size());
        for (const auto& [tok, id] : v.token_to_id) by_id[static_cast<size_t>(id - 2)] = tok;
        w.u64(by_id.size());
        for (const auto& tok : by_id) w.str(tok);
    } else {
        const TfidfModel& t = *a.tfidf;
        w.u8(0);
        w.i32(t.max_features);
        w.u64(static_cast<uint64_t>(t.n_docs_fit));
        std::vector<std::string> by_col(t.vocab.size());
        for (const auto& [tok, col] : t.vocab) by_col[static_cast<size_t>(col)] = tok;
        w.u64(by_col.size());
        for (const auto& tok : by_col) w.str(tok);
        w.f64s(t.idf);
    }
    return w.bytes();
}

void read_features(const std::string& payload, ModelArtifact& a, NeuralVocab* vocab_out) {
    ByteReader r(payload, "features");
    const uint8_t kind = r.u8();
    if (kind == 1) {
        NeuralVocab v;
        v.max_size = r.i32();
        v.max_seq_len = r.i32();
        uint64_t n = r.u64();
        for (uint64_t i = 0; i < n; ++i)
            v.token_to_id.emplace(r.str(), static_cast<int32_t>(i) + 2);
        *vocab_out = std::move(v);
    } else {
        TfidfModel t;
        t.max_features = r.i32();
        t.n_docs_fit = static_cast<int64_t>(r.u64());
        uint64_t n = r.u64();
        for (uint64_t i = 0; i < n; ++i) t.vocab.emplace(r.str(), static_cast<int32_t>(i));
        t.idf = r.f64s();
        if (t.idf.size() != t.vocab.size())
            throw Error("truncated model file in section 'features'");
        a.tfidf = std::move(t);
    }
}

std::string write_params(const ModelArtifact& a) {
    ByteWriter w;
    switch (a.family) {
        case ModelFamily::logistic:
        case ModelFamily::svm_linear: {
            const LinearModel& m = *a.linear;
            w.u32(static_cast<uint32_t>(m.kind));
            w.i32(m.n_features);
            w.f64s(m.weights);
            for (double b : m.bias) w.f64(b);
            w.f64(m.l2);
            w.f64s(m.training_log);
            break;
        }
        case ModelFamily::gbdt: {
            const GbdtModel& m = *a.gbdt;
            w.i32(m.config.n_rounds);
            w.f64(m.config.learning_rate);
            w.i32(m.config.max_leaves);
            w.i32(m.config.min_samples_leaf);
            w.i32(m.config.n_bins);
            w.f64(m.config.l2_leaf);
            w.i32(m.config.max_depth);
            w.u64(m.config.seed);
            w.u64(m.bin_edges.size());
            for (const auto& e : m.bin_edges) w.f64s(e);
            w.u64(m.trees.size());
            for (const auto& tree : m.trees) {
                w.u32(static_cast<uint32_t>(tree.nodes.size()));
                for (const auto& nd : tree.nodes) {
                    w.u8(nd.is_leaf ? 1 : 0);
                    w.i32(nd.feature);
                    w.i32(nd.threshold_bin);
                    w.u8(nd.default_left ? 1 : 0);
                    w.i32(nd.left);
                    w.i32(nd.right);
                    w.f64(nd.value);
                }
            }
            w.f64s(m.training_log);
            break;
        }
        case ModelFamily::bilstm: {
            const BilstmModel& m = *a.bilstm;
            const BilstmConfig& c = m.config;
            w.i32(c.emb_dim);
            w.i32(c.hidden);
            w.i32(c.dense_hidden);
            w.i32(c.batch);
            w.i32(c.max_epochs);
            w.i32(c.patience);
            w.f64(c.dropout);
            w.f64(c.lr);
            w.f64(c.adam_beta1);
            w.f64(c.adam_beta2);
            w.f64(c.adam_eps);
            w.f64(c.grad_clip);
            w.u64(c.seed);
            w.i32(m.net.vocab_size);
            uint32_t tensor_count = 0;
            m.net.for_each_param([&](const std::string&, const std::vector<float>&) {
                ++tensor_count;
            });
            w.u32(tensor_count);
            m.net.for_each_param([&](const std::string& name, const std::vector<float>& v) {
                w.str(name);
                w.f32s(v);
            });
            w.u64(m.curves.size());
            for (const auto& e : m.curves) {
                w.f64(e.train_loss);
                w.f64(e.train_acc);
                w.f64(e.val_loss);
                w.f64(e.val_acc);
            }
            break;
        }
    }
    return w.bytes();
}

void read_params(const std::string& payload, ModelArtifact& a, NeuralVocab&& vocab) {
    ByteReader r(payload, "params");
    switch (a.family) {
        case ModelFamily::logistic:
        case ModelFamily::svm_linear: {
            LinearModel m;
            m.kind = static_cast<LinearKind>(r.u32());
            m.n_features = r.i32();
            m.weights = r.f64s();
            for (double& b : m.bias) b = r.f64();
            m.l2 = r.f64();
            m.training_log = r.f64s();
            if (m.weights.size() != 3 * static_cast<size_t>(m.n_features))
                throw Error("truncated model file in section 'params'");
            a.linear = std::move(m);
            break;
        }
        case ModelFamily::gbdt: {
            GbdtModel m;
            m.config.n_rounds = r.i32();
            m.config.learning_rate = r.f64();
            m.config.max_leaves = r.i32();
            m.config.min_samples_leaf = r.i32();
            m.config.n_bins = r.i32();
            m.config.l2_leaf = r.f64();
            m.config.max_depth = r.i32();
            m.config.seed = r.u64();
            uint64_t nf = r.u64();
            m.bin_edges.resize(nf);
            for (auto& e : m.bin_edges) e = r.f64s();
            uint64_t nt = r.u64();
            m.trees.resize(nt);
            for (auto& tree : m.trees) {
                uint32_t nn = r.u32();
                tree.nodes.resize(nn);
                for (auto& nd : tree.nodes) {
                    nd.is_leaf = r.u8() != 0;
                    nd.feature = r.i32();
                    nd.threshold_bin = r.i32();
                    nd.default_left = r.u8() != 0;
                    nd.left = r.i32();
                    nd.right = r.i32();
                    nd.value = r.f64();
                }
            }
            m.training_log = r.f64s();
            a.gbdt = std::move(m);
            break;
        }
        case ModelFamily::bilstm: {
            BilstmModel m;
            BilstmConfig& c = m.config;
            c.emb_dim = r.i32();
            c.hidden = r.i32();
            c.dense_hidden = r.i32();
            c.batch = r.i32();
            c.max_epochs = r.i32();
            c.patience = r.i32();
            c.dropout = r.f64();
            c.lr = r.f64();
            c.adam_beta1 = r.f64();
            c.adam_beta2 = r.f64();
            c.adam_eps = r.f64();
            c.grad_clip = r.f64();
            c.seed = r.u64();
            const int32_t vocab_size = r.i32();
            m.net = BilstmNet<float>::zeros(vocab_size, c);
            const uint32_t tensor_count = r.u32();
            std::map<std::string, std::vector<float>> tensors;
            for (uint32_t i = 0; i < tensor_count; ++i) {
                std::string name = r.str();
                tensors[name] = r.f32s();
            }
            m.net.for_each_param([&](const std::string& name, std::vector<float>& v) {
                auto it = tensors.find(name);
                if (it == tensors.end() || it->second.size() != v.size())
                    throw Error("truncated model file in section 'params'");
                v = std::move(it->second);
            });
            uint64_t ne = r.u64();
            m.curves.resize(ne);
            for (auto& e : m.curves) {
                e.train_loss = r.f64();
                e.train_acc = r.f64();
                e.val_loss = r.f64();
                e.val_acc = r.f64();
            }
            m.vocab = std::move(vocab);
            a.bilstm = std::move(m);
            break;
        }
    }
}

std::string write_meta(const ModelArtifact& a) {
    ByteWriter w;
    w.u64(a.created_at);
    w.u64(a.seed);
    w.u64(a.config_hash);
    return w.bytes();
}

} // namespace

void save_artifact(const ModelArtifact& artifact, const std::string& path) {
    switch (artifact.family) {
        case ModelFamily::logistic:
        case ModelFamily::svm_linear:
            if (!artifact.linear || !artifact.tfidf) throw Error("artifact missing linear payload");
            break;
        case ModelFamily::gbdt:
            if (!artifact.gbdt || !artifact.tfidf) throw Error("artifact missing gbdt payload");
            break;
        case ModelFamily::bilstm:
            if (!artifact.bilstm) throw Error("artifact missing bilstm payload");
            break;
    }

    ByteWriter w;
    ByteWriter labels;
    labels.u32(3);
    for (const auto& name : artifact.label_names) labels.str(name);

    const std::pair<const char*, std::string> sections[] = {
        {"labels", labels.bytes()},
        {"prep", write_prep(artifact)},
        {"features", write_features(artifact)},
        {"params", write_params(artifact)},
        {"meta", write_meta(artifact)},
    };
    w.u32(static_cast<uint32_t>(std::size(sections)));
    for (const auto& [name, payload] : sections) {
        w.str(name);
        w.u64(payload.size());
    }

    std::string body;
    body.append(kMagic, sizeof(kMagic));
    {
        ByteWriter fam;
        fam.u32(static_cast<uint32_t>(artifact.family));
        body.append(fam.bytes());
    }
    body.append(w.bytes());
    for (const auto& [name, payload] : sections) body.append(payload);

    const std::filesystem::path target(path);
    const std::filesystem::path tmp =
        target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write model file: " + tmp.string());
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot move model file into place: " + ec.message());
    }
}

ModelArtifact load_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (data.size() < 8 || std::memcmp(data.data(), "SENTIB", 6) != 0)
        throw Error("not a model file: " + path);
    if (std::memcmp(data.data() + 6, "v1", 2) != 0)
        throw Error("unsupported model file version '" + data.substr(6, 2) + "' (expected v1)");

    ByteReader header(data, "header");
    header.u64(); // skip magic
    const uint32_t family_raw = header.u32();
    if (family_raw > 3) throw Error("unknown model family id");
    ModelArtifact a;
    a.family = static_cast<ModelFamily>(family_raw);

    const uint32_t n_sections = header.u32();
    std::vector<std::pair<std::string, uint64_t>> toc;
    toc.reserve(n_sections);
    for (uint32_t i = 0; i < n_sections; ++i) {
        std::string name = header.str();
        uint64_t len = header.u64();
        toc.emplace_back(std::move(name), len);
    }
    // compute offset of the first payload byte
    size_t offset = 8 + 4 + 4;
    for (const auto& [name, len] : toc) offset += 4 + name.size() + 8;
    std::map<std::string, std::string> sections;
    for (const auto& [name, len] : toc) {
        if (offset + len > data.size())
            throw Error("truncated model file in section '" + name + "'");
        sections[name] = data.substr(offset, len);
        offset += len;
    }
    auto need = [&](const char* name) -> const std::string& {
        auto it = sections.find(name);
        if (it == sections.end()) throw Error(std::string("missing model section '") + name + "'");
        return it->second;
    };

    {
        ByteReader r(need("labels"), "labels");
        const uint32_t n = r.u32();
        if (n != 3) throw Error("label map must cover 3 classes");
        for (auto& name : a.label_names) name = r.str();
    }
    read_prep(need("prep"), a);
    NeuralVocab vocab;
    read_features(need("features"), a, &vocab);
    read_params(need("params"), a, std::move(vocab));
    {
        ByteReader r(need("meta"), "meta");
        a.created_at = r.u64();
        a.seed = r.u64();
        a.config_hash = r.u64();
    }
    return a;
}

} // namespace senti
