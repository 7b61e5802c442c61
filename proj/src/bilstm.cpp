#include "senti/bilstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "senti/mathutil.hpp"
#include "senti/metrics.hpp"
#include "senti/parallel.hpp"

namespace senti {

namespace {

// Fixed chunk count for mini-batch gradient accumulation. Partial sums are
// always formed per chunk and reduced in chunk order, which makes the
// OpenMP schedule irrelevant to the result bits.
constexpr int kGradChunks = 8;

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

} // namespace

NeuralVocab build_vocab(const std::vector<CleanDocument>& train_docs, int32_t max_size,
                        int32_t max_seq_len) {
    if (max_size < 3) throw Error("vocab: max_size must leave room for PAD/OOV");
    if (max_seq_len < 1) throw Error("vocab: max_seq_len must be >= 1");
    std::map<std::string, int64_t> freq;
    for (const auto& doc : train_docs)
        for (const auto& tok : doc.tokens) ++freq[tok];
    if (freq.empty()) throw Error("vocab: empty token stream");

    std::vector<std::pair<std::string, int64_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    NeuralVocab vocab;
    vocab.max_size = max_size;
    vocab.max_seq_len = max_seq_len;
    const size_t keep = std::min<size_t>(ranked.size(), static_cast<size_t>(max_size) - 2);
    for (size_t r = 0; r < keep; ++r)
        vocab.token_to_id.emplace(ranked[r].first, static_cast<int32_t>(r) + 2);
    return vocab;
}

std::vector<int32_t> encode(const NeuralVocab& vocab, const CleanDocument& doc) {
    std::vector<int32_t> ids(static_cast<size_t>(vocab.max_seq_len), kPadId);
    const size_t n = std::min<size_t>(doc.tokens.size(), static_cast<size_t>(vocab.max_seq_len));
    for (size_t t = 0; t < n; ++t) ids[t] = vocab.id_of(doc.tokens[t]);
    return ids;
}

int64_t param_count(int64_t vocab_size, const BilstmConfig& cfg) {
    const int64_t E = cfg.emb_dim, H = cfg.hidden, D = cfg.dense_hidden;
    return vocab_size * E + 2 * (4 * ((E + H) * H + H)) + ((2 * H) * D + D) + (D * 3 + 3);
}

// --- net construction -------------------------------------------------------

template <typename T>
BilstmNet<T> BilstmNet<T>::zeros(int32_t vocab_size, const BilstmConfig& cfg) {
    BilstmNet<T> net;
    net.vocab_size = vocab_size;
    net.cfg = cfg;
    const size_t E = static_cast<size_t>(cfg.emb_dim);
    const size_t H = static_cast<size_t>(cfg.hidden);
    const size_t D = static_cast<size_t>(cfg.dense_hidden);
    net.emb.assign(static_cast<size_t>(vocab_size) * E, T(0));
    for (auto& d : net.dir) {
        d.wi.assign((E + H) * H, T(0));
        d.wf.assign((E + H) * H, T(0));
        d.wg.assign((E + H) * H, T(0));
        d.wo.assign((E + H) * H, T(0));
        d.bi.assign(H, T(0));
        d.bf.assign(H, T(0));
        d.bg.assign(H, T(0));
        d.bo.assign(H, T(0));
    }
    net.d1w.assign(2 * H * D, T(0));
    net.d1b.assign(D, T(0));
    net.d2w.assign(D * 3, T(0));
    net.d2b.assign(3, T(0));
    return net;
}

template <typename T>
BilstmNet<T> BilstmNet<T>::glorot_init(int32_t vocab_size, const BilstmConfig& cfg,
                                       uint64_t seed) {
    BilstmNet<T> net = zeros(vocab_size, cfg);
    SplitMix64 rng(seed);
    auto fill_uniform = [&](std::vector<T>& v, double limit) {
        for (auto& x : v) x = static_cast<T>(rng.uniform(-limit, limit));
    };
    fill_uniform(net.emb, 0.05);
    const double E = cfg.emb_dim, H = cfg.hidden, D = cfg.dense_hidden;
    const double gate_limit = std::sqrt(6.0 / (E + H + H));
    for (auto& d : net.dir) {
        fill_uniform(d.wi, gate_limit);
        fill_uniform(d.wf, gate_limit);
        fill_uniform(d.wg, gate_limit);
        fill_uniform(d.wo, gate_limit);
        std::fill(d.bf.begin(), d.bf.end(), T(1)); // forget-gate bias starts open
    }
    fill_uniform(net.d1w, std::sqrt(6.0 / (2 * H + D)));
    fill_uniform(net.d2w, std::sqrt(6.0 / (D + 3)));
    return net;
}

template <typename T>
void BilstmNet<T>::for_each_param(
    const std::function<void(const std::string&, std::vector<T>&)>& fn) {
    fn("emb", emb);
    const char* dn[2] = {"fwd", "bwd"};
    for (int d = 0; d < 2; ++d) {
        auto& L = dir[static_cast<size_t>(d)];
        fn(std::string(dn[d]) + ".wi", L.wi);
        fn(std::string(dn[d]) + ".wf", L.wf);
        fn(std::string(dn[d]) + ".wg", L.wg);
        fn(std::string(dn[d]) + ".wo", L.wo);
        fn(std::string(dn[d]) + ".bi", L.bi);
        fn(std::string(dn[d]) + ".bf", L.bf);
        fn(std::string(dn[d]) + ".bg", L.bg);
        fn(std::string(dn[d]) + ".bo", L.bo);
    }
    fn("dense1.w", d1w);
    fn("dense1.b", d1b);
    fn("dense2.w", d2w);
    fn("dense2.b", d2b);
}

template <typename T>
void BilstmNet<T>::for_each_param(
    const std::function<void(const std::string&, const std::vector<T>&)>& fn) const {
    const_cast<BilstmNet<T>*>(this)->for_each_param(
        [&](const std::string& name, std::vector<T>& v) { fn(name, v); });
}

template <typename T>
int64_t BilstmNet<T>::stored_param_count() const {
    int64_t n = 0;
    for_each_param([&](const std::string&, const std::vector<T>& v) {
        n += static_cast<int64_t>(v.size());
    });
    return n;
}

template <typename T>
std::vector<T> dropout_mask(SplitMix64& rng, size_t n, double p) {
    std::vector<T> mask(n);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    for (size_t i = 0; i < n; ++i) mask[i] = rng.next_double() < p ? T(0) : scale;
    return mask;
}

template <typename T>
void BilstmGrads<T>::zero() {
    for (auto& t : tensors) std::fill(t.begin(), t.end(), T(0));
}

namespace {

template <typename T>
BilstmGrads<T> make_grads(const BilstmNet<T>& net) {
    BilstmGrads<T> g;
    net.for_each_param([&](const std::string&, const std::vector<T>& v) {
        g.tensors.emplace_back(v.size(), T(0));
    });
    return g;
}

// acc[u] += sum_j vec[j] * W[j*H + u]
template <typename T>
void matvec_acc(const T* W, const T* vec, size_t len, size_t H, T* acc) {
    for (size_t j = 0; j < len; ++j) {
        const T v = vec[j];
        const T* row = W + j * H;
        for (size_t u = 0; u < H; ++u) acc[u] += v * row[u];
    }
}

// gW[j*H + u] += vec[j] * dz[u]
template <typename T>
void outer_acc(const T* vec, size_t len, const T* dz, size_t H, T* gW) {
    for (size_t j = 0; j < len; ++j) {
        const T v = vec[j];
        if (v == T(0)) continue;
        T* row = gW + j * H;
        for (size_t u = 0; u < H; ++u) row[u] += v * dz[u];
    }
}

// dvec[j] += sum_u W[j*H + u] * dz[u]
template <typename T>
void backvec_acc(const T* W, size_t len, const T* dz, size_t H, T* dvec) {
    for (size_t j = 0; j < len; ++j) {
        const T* row = W + j * H;
        T s = 0;
        for (size_t u = 0; u < H; ++u) s += row[u] * dz[u];
        dvec[j] += s;
    }
}

// All per-sample state for one forward/backward; sized once per chunk and
// reused across its samples.
template <typename T>
struct SeqWork {
    std::vector<uint8_t> active;
    std::vector<T> x;                         // T x E (post spatial dropout)
    std::array<std::vector<T>, 2> h, c;       // (T+1) x H in processing order
    std::array<std::vector<T>, 2> gi, gf, gg, go, tc; // T x H (active steps)
    std::vector<T> u, u2, a1;
    std::vector<T> smask, dmask;
    std::array<double, 3> probs{};
    // backward scratch
    std::vector<T> dx, dh, dc, dzi, dzf, dzg, dzo, dhprev, du, da1;

    void resize(const BilstmConfig& cfg, size_t T_len) {
        const size_t E = static_cast<size_t>(cfg.emb_dim);
        const size_t H = static_cast<size_t>(cfg.hidden);
        const size_t D = static_cast<size_t>(cfg.dense_hidden);
        active.resize(T_len);
        x.resize(T_len * E);
        for (int d = 0; d < 2; ++d) {
            h[static_cast<size_t>(d)].resize((T_len + 1) * H);
            c[static_cast<size_t>(d)].resize((T_len + 1) * H);
            gi[static_cast<size_t>(d)].resize(T_len * H);
            gf[static_cast<size_t>(d)].resize(T_len * H);
            gg[static_cast<size_t>(d)].resize(T_len * H);
            go[static_cast<size_t>(d)].resize(T_len * H);
            tc[static_cast<size_t>(d)].resize(T_len * H);
        }
        u.resize(2 * H);
        u2.resize(2 * H);
        a1.resize(D);
        smask.assign(E, T(1));
        dmask.assign(2 * H, T(1));
        dx.resize(T_len * E);
        dh.resize(H);
        dc.resize(H);
        dzi.resize(H);
        dzf.resize(H);
        dzg.resize(H);
        dzo.resize(H);
        dhprev.resize(H);
        du.resize(2 * H);
        da1.resize(D);
    }
};

// Forward pass for one sequence; fills the caches needed by backward.
template <typename T>
double forward_sample(const BilstmNet<T>& net, const std::vector<int32_t>& ids, Sentiment label,
                      bool train_mode, uint64_t mask_seed, SeqWork<T>& w) {
    const auto& cfg = net.cfg;
    const size_t E = static_cast<size_t>(cfg.emb_dim);
    const size_t H = static_cast<size_t>(cfg.hidden);
    const size_t D = static_cast<size_t>(cfg.dense_hidden);
    const size_t T_len = ids.size();
    w.resize(cfg, T_len);

    if (train_mode && cfg.dropout > 0) {
        SplitMix64 rng(mask_seed);
        w.smask = dropout_mask<T>(rng, E, cfg.dropout);
        w.dmask = dropout_mask<T>(rng, 2 * H, cfg.dropout);
    } else {
        std::fill(w.smask.begin(), w.smask.end(), T(1));
        std::fill(w.dmask.begin(), w.dmask.end(), T(1));
    }

    for (size_t t = 0; t < T_len; ++t) {
        if (ids[t] < 0 || ids[t] >= net.vocab_size) throw Error("token id out of range");
        w.active[t] = ids[t] != kPadId;
        if (!w.active[t]) continue;
        const T* row = net.emb.data() + static_cast<size_t>(ids[t]) * E;
        T* xt = w.x.data() + t * E;
        for (size_t e = 0; e < E; ++e) xt[e] = row[e] * w.smask[e];
    }

    for (int d = 0; d < 2; ++d) {
        const size_t ds = static_cast<size_t>(d);
        const LstmDir<T>& L = net.dir[ds];
        std::fill(w.h[ds].begin(), w.h[ds].begin() + static_cast<long>(H), T(0));
        std::fill(w.c[ds].begin(), w.c[ds].begin() + static_cast<long>(H), T(0));
        for (size_t j = 0; j < T_len; ++j) {
            const size_t pos = (d == 0) ? j : T_len - 1 - j;
            const T* h_prev = w.h[ds].data() + j * H;
            const T* c_prev = w.c[ds].data() + j * H;
            T* h_new = w.h[ds].data() + (j + 1) * H;
            T* c_new = w.c[ds].data() + (j + 1) * H;
            if (!w.active[pos]) { // PAD: state carried through unchanged
                std::copy(h_prev, h_prev + H, h_new);
                std::copy(c_prev, c_prev + H, c_new);
                continue;
            }
            const T* xt = w.x.data() + pos * E;
            T* i_t = w.gi[ds].data() + j * H;
            T* f_t = w.gf[ds].data() + j * H;
            T* g_t = w.gg[ds].data() + j * H;
            T* o_t = w.go[ds].data() + j * H;
            T* tc_t = w.tc[ds].data() + j * H;
            std::copy(L.bi.begin(), L.bi.end(), i_t);
            std::copy(L.bf.begin(), L.bf.end(), f_t);
            std::copy(L.bg.begin(), L.bg.end(), g_t);
            std::copy(L.bo.begin(), L.bo.end(), o_t);
            matvec_acc(L.wi.data(), xt, E, H, i_t);
            matvec_acc(L.wf.data(), xt, E, H, f_t);
            matvec_acc(L.wg.data(), xt, E, H, g_t);
            matvec_acc(L.wo.data(), xt, E, H, o_t);
            matvec_acc(L.wi.data() + E * H, h_prev, H, H, i_t);
            matvec_acc(L.wf.data() + E * H, h_prev, H, H, f_t);
            matvec_acc(L.wg.data() + E * H, h_prev, H, H, g_t);
            matvec_acc(L.wo.data() + E * H, h_prev, H, H, o_t);
            for (size_t uu = 0; uu < H; ++uu) {
                i_t[uu] = sigmoid(i_t[uu]);
                f_t[uu] = sigmoid(f_t[uu]);
                g_t[uu] = std::tanh(g_t[uu]);
                o_t[uu] = sigmoid(o_t[uu]);
                c_new[uu] = f_t[uu] * c_prev[uu] + i_t[uu] * g_t[uu];
                tc_t[uu] = std::tanh(c_new[uu]);
                h_new[uu] = o_t[uu] * tc_t[uu];
            }
        }
    }

    // concat final states, dropout, dense head
    const T* hf = w.h[0].data() + T_len * H;
    const T* hb = w.h[1].data() + T_len * H;
    for (size_t uu = 0; uu < H; ++uu) {
        w.u[uu] = hf[uu];
        w.u[H + uu] = hb[uu];
    }
    for (size_t j = 0; j < 2 * H; ++j) w.u2[j] = w.u[j] * w.dmask[j];
    std::copy(net.d1b.begin(), net.d1b.end(), w.a1.begin());
    matvec_acc(net.d1w.data(), w.u2.data(), 2 * H, D, w.a1.data());
    for (size_t dd = 0; dd < D; ++dd) w.a1[dd] = std::max(T(0), w.a1[dd]);
    std::array<double, 3> scores{static_cast<double>(net.d2b[0]), static_cast<double>(net.d2b[1]),
                                 static_cast<double>(net.d2b[2])};
    for (size_t dd = 0; dd < D; ++dd)
        for (size_t k = 0; k < 3; ++k)
            scores[k] += static_cast<double>(w.a1[dd]) * static_cast<double>(net.d2w[dd * 3 + k]);
    w.probs = softmax3(scores);
    return logsumexp3(scores) - scores[static_cast<size_t>(label)];
}

// Backpropagation for the sample most recently run through forward_sample.
template <typename T>
void backward_sample(const BilstmNet<T>& net, const std::vector<int32_t>& ids, Sentiment label,
                     double grad_scale, SeqWork<T>& w, BilstmGrads<T>& g) {
    const auto& cfg = net.cfg;
    const size_t E = static_cast<size_t>(cfg.emb_dim);
    const size_t H = static_cast<size_t>(cfg.hidden);
    const size_t D = static_cast<size_t>(cfg.dense_hidden);
    const size_t T_len = ids.size();

    // tensor order from for_each_param
    enum {
        G_EMB = 0,
        G_FWD_WI, G_FWD_WF, G_FWD_WG, G_FWD_WO, G_FWD_BI, G_FWD_BF, G_FWD_BG, G_FWD_BO,
        G_BWD_WI, G_BWD_WF, G_BWD_WG, G_BWD_WO, G_BWD_BI, G_BWD_BF, G_BWD_BG, G_BWD_BO,
        G_D1W, G_D1B, G_D2W, G_D2B
    };

    T dscores[3];
    for (size_t k = 0; k < 3; ++k)
        dscores[k] = static_cast<T>(
            grad_scale * (w.probs[k] - (static_cast<size_t>(label) == k ? 1.0 : 0.0)));

    std::fill(w.da1.begin(), w.da1.end(), T(0));
    for (size_t dd = 0; dd < D; ++dd) {
        for (size_t k = 0; k < 3; ++k) {
            g.tensors[G_D2W][dd * 3 + k] += w.a1[dd] * dscores[k];
            w.da1[dd] += net.d2w[dd * 3 + k] * dscores[k];
        }
    }
    for (size_t k = 0; k < 3; ++k) g.tensors[G_D2B][k] += dscores[k];
    for (size_t dd = 0; dd < D; ++dd)
        if (w.a1[dd] <= T(0)) w.da1[dd] = T(0); // ReLU

    std::fill(w.du.begin(), w.du.end(), T(0));
    outer_acc(w.u2.data(), 2 * H, w.da1.data(), D, g.tensors[G_D1W].data());
    for (size_t dd = 0; dd < D; ++dd) g.tensors[G_D1B][dd] += w.da1[dd];
    backvec_acc(net.d1w.data(), 2 * H, w.da1.data(), D, w.du.data());
    for (size_t j = 0; j < 2 * H; ++j) w.du[j] *= w.dmask[j];

    std::fill(w.dx.begin(), w.dx.begin() + static_cast<long>(T_len * E), T(0));

    for (int d = 0; d < 2; ++d) {
        const size_t ds = static_cast<size_t>(d);
        const LstmDir<T>& L = net.dir[ds];
        const size_t base = static_cast<size_t>(d == 0 ? G_FWD_WI : G_BWD_WI);
        std::copy(w.du.begin() + static_cast<long>(ds * H),
                  w.du.begin() + static_cast<long>((ds + 1) * H), w.dh.begin());
        std::fill(w.dc.begin(), w.dc.end(), T(0));

        for (size_t jj = T_len; jj-- > 0;) {
            const size_t pos = (d == 0) ? jj : T_len - 1 - jj;
            if (!w.active[pos]) continue; // carried state: gradients pass through
            const T* i_t = w.gi[ds].data() + jj * H;
            const T* f_t = w.gf[ds].data() + jj * H;
            const T* g_t = w.gg[ds].data() + jj * H;
            const T* o_t = w.go[ds].data() + jj * H;
            const T* tc_t = w.tc[ds].data() + jj * H;
            const T* c_prev = w.c[ds].data() + jj * H;
            const T* h_prev = w.h[ds].data() + jj * H;

            for (size_t uu = 0; uu < H; ++uu) {
                const T dht = w.dh[uu];
                const T do_ = dht * tc_t[uu];
                const T dct = w.dc[uu] + dht * o_t[uu] * (T(1) - tc_t[uu] * tc_t[uu]);
                const T di = dct * g_t[uu];
                const T dg = dct * i_t[uu];
                const T df = dct * c_prev[uu];
                w.dzi[uu] = di * i_t[uu] * (T(1) - i_t[uu]);
                w.dzf[uu] = df * f_t[uu] * (T(1) - f_t[uu]);
                w.dzo[uu] = do_ * o_t[uu] * (T(1) - o_t[uu]);
                w.dzg[uu] = dg * (T(1) - g_t[uu] * g_t[uu]);
                w.dc[uu] = dct * f_t[uu]; // becomes dc_prev
            }

            const T* xt = w.x.data() + pos * E;
            T* dxt = w.dx.data() + pos * E;
            outer_acc(xt, E, w.dzi.data(), H, g.tensors[base + 0].data());
            outer_acc(xt, E, w.dzf.data(), H, g.tensors[base + 1].data());
            outer_acc(xt, E, w.dzg.data(), H, g.tensors[base + 2].data());
            outer_acc(xt, E, w.dzo.data(), H, g.tensors[base + 3].data());
            outer_acc(h_prev, H, w.dzi.data(), H, g.tensors[base + 0].data() + E * H);
            outer_acc(h_prev, H, w.dzf.data(), H, g.tensors[base + 1].data() + E * H);
            outer_acc(h_prev, H, w.dzg.data(), H, g.tensors[base + 2].data() + E * H);
            outer_acc(h_prev, H, w.dzo.data(), H, g.tensors[base + 3].data() + E * H);
            for (size_t uu = 0; uu < H; ++uu) {
                g.tensors[base + 4][uu] += w.dzi[uu];
                g.tensors[base + 5][uu] += w.dzf[uu];
                g.tensors[base + 6][uu] += w.dzg[uu];
                g.tensors[base + 7][uu] += w.dzo[uu];
            }
            backvec_acc(L.wi.data(), E, w.dzi.data(), H, dxt);
            backvec_acc(L.wf.data(), E, w.dzf.data(), H, dxt);
            backvec_acc(L.wg.data(), E, w.dzg.data(), H, dxt);
            backvec_acc(L.wo.data(), E, w.dzo.data(), H, dxt);
            std::fill(w.dhprev.begin(), w.dhprev.end(), T(0));
            backvec_acc(L.wi.data() + E * H, H, w.dzi.data(), H, w.dhprev.data());
            backvec_acc(L.wf.data() + E * H, H, w.dzf.data(), H, w.dhprev.data());
            backvec_acc(L.wg.data() + E * H, H, w.dzg.data(), H, w.dhprev.data());
            backvec_acc(L.wo.data() + E * H, H, w.dzo.data(), H, w.dhprev.data());
            std::copy(w.dhprev.begin(), w.dhprev.end(), w.dh.begin());
        }
        (void)L;
    }

    // embedding rows through the spatial-dropout mask
    for (size_t t = 0; t < T_len; ++t) {
        if (!w.active[t]) continue;
        T* grow = g.tensors[G_EMB].data() + static_cast<size_t>(ids[t]) * E;
        const T* dxt = w.dx.data() + t * E;
        for (size_t e = 0; e < E; ++e) grow[e] += dxt[e] * w.smask[e];
    }
}

} // namespace

template <typename T>
BatchStats bilstm_batch_grads(const BilstmNet<T>& net,
                              const std::vector<std::vector<int32_t>>& ids,
                              const std::vector<Sentiment>& labels,
                              const std::vector<uint64_t>& dropout_seeds, double loss_scale,
                              BilstmGrads<T>& grads, bool parallel) {
    if (ids.size() != labels.size()) throw Error("bilstm: ids/labels mismatch");
    const size_t n = ids.size();
    if (n == 0) throw Error("bilstm: empty batch");
    const bool use_dropout = !dropout_seeds.empty();
    if (use_dropout && dropout_seeds.size() != n) throw Error("bilstm: dropout seed count");

    if (grads.tensors.empty()) grads = make_grads(net);
    grads.zero();
    const double grad_scale = loss_scale / static_cast<double>(n);

    std::array<BilstmGrads<T>, kGradChunks> chunk_grads;
    std::array<BatchStats, kGradChunks> chunk_stats;
    const int nthreads = parallel ? effective_threads(kGradChunks) : 1;

#pragma omp parallel for schedule(static) num_threads(nthreads) if (parallel)
    for (int c = 0; c < kGradChunks; ++c) {
        const size_t lo = n * static_cast<size_t>(c) / kGradChunks;
        const size_t hi = n * (static_cast<size_t>(c) + 1) / kGradChunks;
        if (lo == hi) continue;
        chunk_grads[static_cast<size_t>(c)] = make_grads(net);
        SeqWork<T> w;
        for (size_t s = lo; s < hi; ++s) {
            const double ce = forward_sample(net, ids[s], labels[s], use_dropout,
                                             use_dropout ? dropout_seeds[s] : 0, w);
            chunk_stats[static_cast<size_t>(c)].loss_sum += loss_scale * ce;
            chunk_stats[static_cast<size_t>(c)].correct +=
                argmax3(w.probs) == static_cast<int>(labels[s]);
            backward_sample(net, ids[s], labels[s], grad_scale, w,
                            chunk_grads[static_cast<size_t>(c)]);
        }
    }

    BatchStats stats;
    for (int c = 0; c < kGradChunks; ++c) {
        stats.loss_sum += chunk_stats[static_cast<size_t>(c)].loss_sum;
        stats.correct += chunk_stats[static_cast<size_t>(c)].correct;
        if (chunk_grads[static_cast<size_t>(c)].tensors.empty()) continue;
        for (size_t t = 0; t < grads.tensors.size(); ++t) {
            const auto& src = chunk_grads[static_cast<size_t>(c)].tensors[t];
            auto& dst = grads.tensors[t];
            for (size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
    }
    return stats;
}

template <typename T>
BatchStats bilstm_eval(const BilstmNet<T>& net, const std::vector<std::vector<int32_t>>& ids,
                       const std::vector<Sentiment>& labels,
                       std::vector<std::array<double, 3>>* probs_out, bool parallel) {
    if (ids.size() != labels.size()) throw Error("bilstm: ids/labels mismatch");
    const size_t n = ids.size();
    if (n == 0) throw Error("bilstm: empty batch");
    if (probs_out) probs_out->assign(n, {0, 0, 0});

    std::array<BatchStats, kGradChunks> chunk_stats;
    const int nthreads = parallel ? effective_threads(kGradChunks) : 1;
#pragma omp parallel for schedule(static) num_threads(nthreads) if (parallel)
    for (int c = 0; c < kGradChunks; ++c) {
        const size_t lo = n * static_cast<size_t>(c) / kGradChunks;
        const size_t hi = n * (static_cast<size_t>(c) + 1) / kGradChunks;
        SeqWork<T> w;
        for (size_t s = lo; s < hi; ++s) {
            const double ce = forward_sample(net, ids[s], labels[s], false, 0, w);
            chunk_stats[static_cast<size_t>(c)].loss_sum += ce;
            chunk_stats[static_cast<size_t>(c)].correct +=
                argmax3(w.probs) == static_cast<int>(labels[s]);
            if (probs_out) (*probs_out)[s] = w.probs;
        }
    }
    BatchStats stats;
    for (const auto& cs : chunk_stats) {
        stats.loss_sum += cs.loss_sum;
        stats.correct += cs.correct;
    }
    return stats;
}

template <typename T>
std::array<double, 3> BilstmNet<T>::forward_probs(const std::vector<int32_t>& ids) const {
    SeqWork<T> w;
    forward_sample(*this, ids, Sentiment::negative, false, 0, w);
    return w.probs;
}

template <typename T>
std::pair<std::vector<std::vector<T>>, std::vector<std::vector<T>>> bilstm_hidden_states(
    const BilstmNet<T>& net, const std::vector<int32_t>& ids) {
    SeqWork<T> w;
    forward_sample(net, ids, Sentiment::negative, false, 0, w);
    const size_t H = static_cast<size_t>(net.cfg.hidden);
    const size_t T_len = ids.size();
    std::vector<std::vector<T>> fwd(T_len), bwd(T_len);
    for (size_t t = 0; t < T_len; ++t) {
        // forward processed position t at step t; backward at step T-1-t
        fwd[t].assign(w.h[0].begin() + static_cast<long>((t + 1) * H),
                      w.h[0].begin() + static_cast<long>((t + 2) * H));
        const size_t jb = T_len - 1 - t;
        bwd[t].assign(w.h[1].begin() + static_cast<long>((jb + 1) * H),
                      w.h[1].begin() + static_cast<long>((jb + 2) * H));
    }
    return {fwd, bwd};
}

// --- training ---------------------------------------------------------------

BilstmModel bilstm_train(const NeuralVocab& vocab, const std::vector<CleanDocument>& train_docs,
                         const std::vector<Sentiment>& train_labels,
                         const std::vector<CleanDocument>& val_docs,
                         const std::vector<Sentiment>& val_labels, const BilstmConfig& cfg) {
    if (train_docs.empty() || train_docs.size() != train_labels.size())
        throw Error("bilstm: empty or inconsistent training set");
    if (val_docs.empty() || val_docs.size() != val_labels.size())
        throw Error("bilstm: empty validation set");
    std::array<int64_t, 3> counts{};
    for (Sentiment s : train_labels) ++counts[static_cast<size_t>(s)];
    for (int k = 0; k < kNumClasses; ++k)
        if (counts[static_cast<size_t>(k)] == 0)
            throw Error(std::string("class '") + sentiment_name(static_cast<Sentiment>(k)) +
                        "' missing from training set");

    BilstmModel model;
    model.vocab = vocab;
    model.config = cfg;
    model.net = BilstmNet<float>::glorot_init(vocab.size(), cfg, cfg.seed);

    std::vector<std::vector<int32_t>> train_ids, val_ids;
    train_ids.reserve(train_docs.size());
    for (const auto& d : train_docs) train_ids.push_back(encode(vocab, d));
    val_ids.reserve(val_docs.size());
    for (const auto& d : val_docs) val_ids.push_back(encode(vocab, d));

    // Adam state
    BilstmGrads<float> grads = make_grads(model.net);
    BilstmGrads<float> m = make_grads(model.net);
    BilstmGrads<float> v = make_grads(model.net);
    std::vector<std::vector<float>*> params;
    model.net.for_each_param(
        [&](const std::string&, std::vector<float>& p) { params.push_back(&p); });
    int64_t adam_t = 0;

    const size_t n = train_ids.size();
    std::vector<size_t> order(n);
    std::vector<std::vector<int32_t>> batch_ids;
    std::vector<Sentiment> batch_labels;
    std::vector<uint64_t> batch_seeds;

    BilstmNet<float> best_net = model.net;
    double best_f1 = -1;
    int epochs_without_improvement = 0;
    const bool parallel = true;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), size_t{0});
        SplitMix64 rng(mix_seed(cfg.seed, 0xE000 + static_cast<uint64_t>(epoch)));
        shuffle(order, rng);

        double epoch_loss = 0;
        int64_t epoch_correct = 0;
        for (size_t start = 0; start < n; start += static_cast<size_t>(cfg.batch)) {
            const size_t stop = std::min(n, start + static_cast<size_t>(cfg.batch));
            batch_ids.clear();
            batch_labels.clear();
            batch_seeds.clear();
            for (size_t q = start; q < stop; ++q) {
                batch_ids.push_back(train_ids[order[q]]);
                batch_labels.push_back(train_labels[order[q]]);
                // Mask seed depends only on (seed, epoch, position), never
                // on the thread schedule.
                batch_seeds.push_back(mix_seed(mix_seed(cfg.seed, 0xD000 + static_cast<uint64_t>(epoch)),
                                               static_cast<uint64_t>(q)));
            }
            BatchStats bs = bilstm_batch_grads(model.net, batch_ids, batch_labels,
                                               cfg.dropout > 0 ? batch_seeds
                                                               : std::vector<uint64_t>{},
                                               1.0, grads, parallel);
            if (!std::isfinite(bs.loss_sum)) throw Error("diverged");
            epoch_loss += bs.loss_sum;
            epoch_correct += bs.correct;

            // global-norm clip
            double sq = 0;
            for (const auto& t : grads.tensors)
                for (float gv : t) sq += static_cast<double>(gv) * static_cast<double>(gv);
            const double norm = std::sqrt(sq);
            const float clip_scale =
                norm > cfg.grad_clip ? static_cast<float>(cfg.grad_clip / norm) : 1.0f;

            ++adam_t;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
            const float b1 = static_cast<float>(cfg.adam_beta1);
            const float b2 = static_cast<float>(cfg.adam_beta2);
            for (size_t t = 0; t < params.size(); ++t) {
                auto& p = *params[t];
                auto& mt = m.tensors[t];
                auto& vt = v.tensors[t];
                const auto& gt = grads.tensors[t];
                for (size_t j = 0; j < p.size(); ++j) {
                    const float gj = gt[j] * clip_scale;
                    mt[j] = b1 * mt[j] + (1.0f - b1) * gj;
                    vt[j] = b2 * vt[j] + (1.0f - b2) * gj * gj;
                    const double mhat = static_cast<double>(mt[j]) / bc1;
                    const double vhat = static_cast<double>(vt[j]) / bc2;
                    p[j] -= static_cast<float>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps));
                }
            }
        }

        std::vector<std::array<double, 3>> val_probs;
        BatchStats vs = bilstm_eval(model.net, val_ids, val_labels, &val_probs, parallel);
        EpochStats es;
        es.train_loss = epoch_loss / static_cast<double>(n);
        es.train_acc = static_cast<double>(epoch_correct) / static_cast<double>(n);
        es.val_loss = vs.loss_sum / static_cast<double>(val_ids.size());
        es.val_acc = static_cast<double>(vs.correct) / static_cast<double>(val_ids.size());
        model.curves.push_back(es);

        std::vector<int> y_true, y_pred;
        y_true.reserve(val_ids.size());
        y_pred.reserve(val_ids.size());
        for (size_t i = 0; i < val_ids.size(); ++i) {
            y_true.push_back(static_cast<int>(val_labels[i]));
            y_pred.push_back(argmax3(val_probs[i]));
        }
        const double f1 = report(confusion(y_true, y_pred)).macro_f1;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_net = model.net;
            epochs_without_improvement = 0;
        } else if (++epochs_without_improvement >= cfg.patience) {
            break;
        }
    }
    model.net = best_net;
    return model;
}

std::array<double, 3> bilstm_predict_proba(const BilstmModel& model, const CleanDocument& doc) {
    return model.net.forward_probs(encode(model.vocab, doc));
}

double backward_check() {
    BilstmConfig cfg;
    cfg.emb_dim = 3;
    cfg.hidden = 2;
    cfg.dense_hidden = 3;
    cfg.dropout = 0;
    auto net = BilstmNet<double>::glorot_init(7, cfg, 20240615);

    const std::vector<std::vector<int32_t>> ids = {{2, 3, 4, 6}, {5, 2, 0, 0}};
    const std::vector<Sentiment> labels = {Sentiment::negative, Sentiment::positive};

    BilstmGrads<double> grads;
    bilstm_batch_grads(net, ids, labels, {}, 1.0, grads, false);

    auto loss_of = [&]() {
        return bilstm_eval(net, ids, labels, nullptr, false).loss_sum /
               static_cast<double>(ids.size());
    };

    const double step = 1e-5;
    double max_rel = 0;
    std::vector<std::vector<double>*> params;
    net.for_each_param([&](const std::string&, std::vector<double>& p) { params.push_back(&p); });
    for (size_t t = 0; t < params.size(); ++t) {
        auto& p = *params[t];
        for (size_t j = 0; j < p.size(); ++j) {
            const double orig = p[j];
            p[j] = orig + step;
            const double lp = loss_of();
            p[j] = orig - step;
            const double lm = loss_of();
            p[j] = orig;
            const double numeric = (lp - lm) / (2 * step);
            const double analytic = grads.tensors[t][j];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
        }
    }
    return max_rel;
}

std::string curves_to_csv(const std::vector<EpochStats>& curves) {
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
    char line[160];
    for (size_t e = 0; e < curves.size(); ++e) {
        std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,%.6f,%.6f\n", e + 1,
                      curves[e].train_loss, curves[e].train_acc, curves[e].val_loss,
                      curves[e].val_acc);
        out += line;
    }
    return out;
}

// explicit instantiations: float for training, double for gradient checks
template struct BilstmNet<float>;
template struct BilstmNet<double>;
template struct BilstmGrads<float>;
template struct BilstmGrads<double>;
template std::vector<float> dropout_mask<float>(SplitMix64&, size_t, double);
template std::vector<double> dropout_mask<double>(SplitMix64&, size_t, double);
template BatchStats bilstm_batch_grads<float>(const BilstmNet<float>&,
                                              const std::vector<std::vector<int32_t>>&,
                                              const std::vector<Sentiment>&,
                                              const std::vector<uint64_t>&, double,
                                              BilstmGrads<float>&, bool);
template BatchStats bilstm_batch_grads<double>(const BilstmNet<double>&,
                                               const std::vector<std::vector<int32_t>>&,
                                               const std::vector<Sentiment>&,
                                               const std::vector<uint64_t>&, double,
                                               BilstmGrads<double>&, bool);
template BatchStats bilstm_eval<float>(const BilstmNet<float>&,
                                       const std::vector<std::vector<int32_t>>&,
                                       const std::vector<Sentiment>&,
                                       std::vector<std::array<double, 3>>*, bool);
template BatchStats bilstm_eval<double>(const BilstmNet<double>&,
                                        const std::vector<std::vector<int32_t>>&,
                                        const std::vector<Sentiment>&,
                                        std::vector<std::array<double, 3>>*, bool);
template std::pair<std::vector<std::vector<float>>, std::vector<std::vector<float>>>
bilstm_hidden_states<float>(const BilstmNet<float>&, const std::vector<int32_t>&);
template std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
bilstm_hidden_states<double>(const BilstmNet<double>&, const std::vector<int32_t>&);

} // namespace senti
