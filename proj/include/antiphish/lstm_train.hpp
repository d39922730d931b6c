#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/lstm.hpp"
#include "antiphish/matrix.hpp"
#include "antiphish/optimizers.hpp"
#include "antiphish/rng.hpp"

namespace antiphish {

struct TrainSchedule {
    size_t batch_size = 32;
    int max_epochs = 0;  // 0 = the optimizer's own epoch schedule
    int patience = 10;
    double min_delta = 1e-4;
    double dropout_rate = 0.5;
    double val_fraction = 0.1;
    uint64_t seed = 42;
    double clip_norm = 5.0;

    void validate() const {
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw ConfigError("dropout_rate must be in [0,1)");
        if (val_fraction <= 0.0 || val_fraction > 0.5)
            throw ConfigError("val_fraction must be in (0,0.5]");
        if (patience < 1 || min_delta < 0.0) throw ConfigError("bad early-stop settings");
    }
};

// Character sequences or one-value-per-timestep numeric rows.
struct Phase2Data {
    const std::vector<std::vector<int>>* seqs = nullptr;
    const Matrix* numeric = nullptr;

    size_t size() const { return seqs ? seqs->size() : (numeric ? numeric->rows : 0); }
    bool char_mode() const { return seqs != nullptr; }

    SeqInput view(size_t i) const {
        SeqInput in;
        if (seqs) {
            in.idx = (*seqs)[i].data();
            in.len = (*seqs)[i].size();
        } else {
            in.vals = numeric->row(i);
            in.len = numeric->cols;
        }
        return in;
    }
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0, val_loss = 0.0;
    double train_acc = 0.0, val_acc = 0.0;
};

struct Phase2Result {
    LstmParams params;
    std::vector<EpochLog> log;
    int best_epoch = 0;
};

inline void save_train_log(const std::vector<EpochLog>& log, std::ostream& out) {
    out << "epoch\ttrain_loss\tval_loss\ttrain_acc\tval_acc\n";
    for (const auto& e : log)
        out << e.epoch << '\t' << fmt_double(e.train_loss) << '\t' << fmt_double(e.val_loss)
            << '\t' << fmt_double(e.train_acc) << '\t' << fmt_double(e.val_acc) << '\n';
}

inline Vec premier_prediction(const LstmParams& params, const Phase2Data& data) {
    Vec out(data.size());
    for (size_t i = 0; i < data.size(); ++i)
        out[i] = lstm_forward(params, data.view(i), false, 0, 0.0).prob;
    return out;
}

// Mini-batch BPTT with early stopping on validation loss. Returns the
// parameters of the best validation epoch.
inline Phase2Result train_phase2(const Phase2Data& data, const std::vector<int>& labels,
                                 LstmArch arch, const OptimizerConfig& opt,
                                 const TrainSchedule& sched) {
    sched.validate();
    opt.validate();
    const size_t n = data.size();
    if (n != labels.size()) throw LengthMismatch("train_phase2: labels do not match data");
    if (n < 2) throw TooFewSamples("train_phase2: need at least 2 samples");
    {
        bool has0 = false, has1 = false;
        for (int v : labels) (v == 1 ? has1 : has0) = true;
        if (!has0 || !has1) throw SingleClassError("train_phase2: single-class training set");
    }
    arch.char_mode = data.char_mode();
    if (!arch.char_mode && data.numeric) arch.max_len = std::max(arch.max_len, data.numeric->cols);

    Phase2Result res;
    res.params = init_lstm(arch, derive_seed(sched.seed, "lstm-init"));
    LstmParams& p = res.params;

    // fixed train/validation partition
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    {
        Rng rng(derive_seed(sched.seed, "val-split"));
        rng.shuffle(order);
    }
    size_t val_n = std::max<size_t>(1, static_cast<size_t>(sched.val_fraction *
                                                           static_cast<double>(n)));
    val_n = std::min(val_n, n - 1);
    std::vector<size_t> val_idx(order.end() - val_n, order.end());
    std::vector<size_t> train_idx(order.begin(), order.end() - val_n);

    const int total_epochs = sched.max_epochs > 0
                                 ? std::min(sched.max_epochs, opt.effective_epochs())
                                 : opt.effective_epochs();
    OptimizerState state;
    long step = 0;
    Rng shuffle_rng(derive_seed(sched.seed, "epoch-shuffle"));
    const uint64_t drop_base = derive_seed(sched.seed, "dropout");

    double best_val = 0.0;
    Vec best_theta;
    int since_best = 0;
    Vec grad_sum(p.theta.size());

    for (int epoch = 1; epoch <= total_epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        double train_loss = 0.0;
        size_t train_hits = 0;
        for (size_t start = 0; start < train_idx.size(); start += sched.batch_size) {
            size_t end = std::min(train_idx.size(), start + sched.batch_size);
            std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
            for (size_t b = start; b < end; ++b) {
                size_t i = train_idx[b];
                uint64_t mask_seed = mix64(drop_base, mix64(static_cast<uint64_t>(epoch), i));
                LstmCache cache = lstm_forward(p, data.view(i), true, mask_seed,
                                               sched.dropout_rate);
                train_loss += bce_loss(cache.prob, labels[i]);
                train_hits += (cache.prob >= 0.5 ? 1 : 0) == labels[i];
                Vec g = lstm_backward(p, cache, labels[i]);
                axpy(1.0, g, grad_sum);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (double& v : grad_sum) v *= inv;
            if (sched.clip_norm > 0.0) {
                double norm = std::sqrt(squared_norm(grad_sum));
                if (norm > sched.clip_norm)
                    for (double& v : grad_sum) v *= sched.clip_norm / norm;
            }
            try {
                optimizer_step(opt, p.theta, grad_sum, state, ++step);
            } catch (const NonFiniteUpdate& e) {
                throw NonFiniteUpdate(strfmt("epoch %d, step %ld: %s", epoch, step, e.what()));
            }
        }

        double val_loss = 0.0;
        size_t val_hits = 0;
        for (size_t i : val_idx) {
            double prob = lstm_forward(p, data.view(i), false, 0, 0.0).prob;
            val_loss += bce_loss(prob, labels[i]);
            val_hits += (prob >= 0.5 ? 1 : 0) == labels[i];
        }
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = train_loss / static_cast<double>(train_idx.size());
        log.train_acc = static_cast<double>(train_hits) / static_cast<double>(train_idx.size());
        log.val_loss = val_loss / static_cast<double>(val_idx.size());
        log.val_acc = static_cast<double>(val_hits) / static_cast<double>(val_idx.size());
        res.log.push_back(log);

        if (best_theta.empty() || log.val_loss < best_val - sched.min_delta) {
            best_val = log.val_loss;
            best_theta = p.theta;
            res.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= sched.patience) {
            log_info(strfmt("early stop at epoch %d (best %d)", epoch, res.best_epoch));
            break;
        }
    }
    if (!best_theta.empty()) p.theta = std::move(best_theta);
    return res;
}

}  // namespace antiphish
