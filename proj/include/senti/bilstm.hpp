#ifndef SENTI_BILSTM_HPP
#define SENTI_BILSTM_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "senti/rng.hpp"
#include "senti/text_prep.hpp"
#include "senti/types.hpp"

namespace senti {

inline constexpr int32_t kPadId = 0;
inline constexpr int32_t kOovId = 1;

struct NeuralVocab {
    std::map<std::string, int32_t> token_to_id; // real tokens only, ids >= 2
    int32_t max_size = 10000;
    int32_t max_seq_len = 64;

    int32_t size() const { return static_cast<int32_t>(token_to_id.size()) + 2; }
    int32_t id_of(const std::string& tok) const {
        auto it = token_to_id.find(tok);
        return it == token_to_id.end() ? kOovId : it->second;
    }
};

// Top (max_size - 2) training tokens by frequency, ties lexicographic; ids
// assigned in rank order starting at 2 (0=PAD, 1=OOV).
NeuralVocab build_vocab(const std::vector<CleanDocument>& train_docs, int32_t max_size,
                        int32_t max_seq_len);

// Token ids, truncated right at max_seq_len and right-padded with PAD.
std::vector<int32_t> encode(const NeuralVocab& vocab, const CleanDocument& doc);

struct BilstmConfig {
    int emb_dim = 128;
    int hidden = 64;
    double dropout = 0.3;
    int dense_hidden = 64;
    int batch = 32;
    int max_epochs = 20;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 42;
    int patience = 3;
    double grad_clip = 5.0;
};

// V*E + 2*[4*((E+H)*H + H)] + (2H*D + D) + (D*3 + 3)
int64_t param_count(int64_t vocab_size, const BilstmConfig& cfg);

template <typename T>
struct LstmDir {
    // Gate weights over [x; h_prev], row-major (E+H) x H; i,f,o sigmoid,
    // g tanh.
    std::vector<T> wi, wf, wg, wo;
    std::vector<T> bi, bf, bg, bo;
};

template <typename T>
struct BilstmNet {
    int32_t vocab_size = 0;
    BilstmConfig cfg;
    std::vector<T> emb;               // V x E
    std::array<LstmDir<T>, 2> dir;    // [0]=forward, [1]=backward
    std::vector<T> d1w, d1b;          // (2H) x D, D
    std::vector<T> d2w, d2b;          // D x 3, 3

    static BilstmNet zeros(int32_t vocab_size, const BilstmConfig& cfg);
    static BilstmNet glorot_init(int32_t vocab_size, const BilstmConfig& cfg, uint64_t seed);

    void for_each_param(const std::function<void(const std::string&, std::vector<T>&)>& fn);
    void for_each_param(
        const std::function<void(const std::string&, const std::vector<T>&)>& fn) const;
    int64_t stored_param_count() const;

    // Eval-mode forward (dropout off) for one encoded sequence.
    std::array<double, 3> forward_probs(const std::vector<int32_t>& ids) const;
};

// Per-position hidden states of both directions, eval mode. For masked
// (PAD) positions the carried state is reported.
template <typename T>
std::pair<std::vector<std::vector<T>>, std::vector<std::vector<T>>> bilstm_hidden_states(
    const BilstmNet<T>& net, const std::vector<int32_t>& ids);

// Inverted dropout mask: entries are 1/(1-p) with probability 1-p, else 0.
template <typename T>
std::vector<T> dropout_mask(SplitMix64& rng, size_t n, double p);

template <typename T>
struct BilstmGrads {
    std::vector<std::vector<T>> tensors; // parallel to for_each_param order
    void zero();
};

struct BatchStats {
    double loss_sum = 0; // sum of per-sample CE (times loss_scale)
    int64_t correct = 0;
};

// Train-mode loss and gradients for a mini-batch. Per-sample work is
// chunked into a fixed number of chunks whose partial gradients are
// reduced in chunk order, so serial and OpenMP execution are
// bit-identical. dropout_seeds empty = dropout off; otherwise one mask
// seed per sample, independent of scheduling.
template <typename T>
BatchStats bilstm_batch_grads(const BilstmNet<T>& net,
                              const std::vector<std::vector<int32_t>>& ids,
                              const std::vector<Sentiment>& labels,
                              const std::vector<uint64_t>& dropout_seeds, double loss_scale,
                              BilstmGrads<T>& grads, bool parallel);

// Mean eval-mode loss/accuracy plus per-sample probabilities.
template <typename T>
BatchStats bilstm_eval(const BilstmNet<T>& net, const std::vector<std::vector<int32_t>>& ids,
                       const std::vector<Sentiment>& labels,
                       std::vector<std::array<double, 3>>* probs_out, bool parallel);

struct EpochStats {
    double train_loss = 0;
    double train_acc = 0;
    double val_loss = 0;
    double val_acc = 0;
};

struct BilstmModel {
    NeuralVocab vocab;
    BilstmConfig config;
    BilstmNet<float> net;
    std::vector<EpochStats> curves;
};

// Adam on mean cross-entropy with per-epoch seeded shuffling, global-norm
// gradient clipping at 5.0, checkpointing on best validation macro-F1 and
// early stop after `patience` epochs without improvement.
BilstmModel bilstm_train(const NeuralVocab& vocab, const std::vector<CleanDocument>& train_docs,
                         const std::vector<Sentiment>& train_labels,
                         const std::vector<CleanDocument>& val_docs,
                         const std::vector<Sentiment>& val_labels, const BilstmConfig& cfg);

std::array<double, 3> bilstm_predict_proba(const BilstmModel& model, const CleanDocument& doc);

// Analytic-vs-central-difference comparison over every parameter tensor on
// a tiny double-precision net (V=7, emb=3, hidden=2, T=4, batch=2,
// dropout off). Returns the max relative error.
double backward_check();

std::string curves_to_csv(const std::vector<EpochStats>& curves);

} // namespace senti

#endif
