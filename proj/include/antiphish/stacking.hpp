#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/learners.hpp"
#include "antiphish/matrix.hpp"
#include "antiphish/rng.hpp"

namespace antiphish {

// Phase I out-of-fold stacking. Every training sample gets, per base learner,
// a probability from a model whose training folds excluded that sample.

struct FoldPlan {
    int k = 10;
    uint64_t seed = 42;
    std::vector<int> fold_of;  // per sample

    std::vector<size_t> fold_sizes() const {
        std::vector<size_t> sizes(k, 0);
        for (int f : fold_of) sizes[f]++;
        return sizes;
    }
};

inline FoldPlan make_fold_plan(size_t n, int k, uint64_t seed) {
    if (k < 3 || k > 10) throw ConfigError("k must be in 3..10");
    if (n < static_cast<size_t>(k))
        throw TooFewSamples(strfmt("%zu samples cannot fill %d folds", n, k));
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.fold_of.resize(n);
    // first (n % k) folds take the extra sample
    size_t base = n / static_cast<size_t>(k), extra = n % static_cast<size_t>(k), pos = 0;
    for (int f = 0; f < k; ++f) {
        size_t take = base + (static_cast<size_t>(f) < extra ? 1 : 0);
        for (size_t i = 0; i < take; ++i) plan.fold_of[order[pos++]] = f;
    }
    return plan;
}

struct OofMatrix {
    Matrix probs;                           // rows = samples, cols = learners
    std::vector<std::string> learner_names;
    std::vector<int> fold_of;               // provenance: fold of each sample
    // provenance: folds each (learner, fold) model actually saw in training
    std::vector<std::vector<std::vector<int>>> trained_folds;  // [learner][fold]
};

// Arithmetic mean across learner columns, per sample.
inline Vec mean_prediction(const OofMatrix& m) {
    if (m.probs.cols == 0) throw EmptyEvaluation("mean_prediction: no learner columns");
    Vec out(m.probs.rows, 0.0);
    for (size_t r = 0; r < m.probs.rows; ++r) {
        double s = 0.0;
        for (size_t c = 0; c < m.probs.cols; ++c) s += m.probs(r, c);
        out[r] = s / static_cast<double>(m.probs.cols);
    }
    return out;
}

namespace detail {

// Deterministic parallel map: jobs land in preassigned slots, so the result
// is bit-identical to sequential execution.
template <typename Fn>
inline void run_jobs(size_t job_count, int jobs, Fn&& fn) {
    if (jobs <= 1 || job_count <= 1) {
        for (size_t i = 0; i < job_count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= job_count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    size_t nthreads = std::min<size_t>(jobs, job_count);
    pool.reserve(nthreads);
    for (size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace detail

inline OofMatrix kfold_oof(const Matrix& X, const std::vector<int>& y, const FoldPlan& plan,
                           const std::vector<LearnerConfig>& kinds, int jobs = 1) {
    if (plan.fold_of.size() != X.rows) throw LengthMismatch("kfold_oof: plan does not cover X");
    if (kinds.empty()) throw ConfigError("kfold_oof: no learners configured");

    OofMatrix out;
    out.probs = Matrix(X.rows, kinds.size());
    out.fold_of = plan.fold_of;
    out.trained_folds.assign(kinds.size(), std::vector<std::vector<int>>(plan.k));
    for (const auto& cfg : kinds) out.learner_names.push_back(learner_name(cfg.kind));

    struct Job {
        size_t kind_idx;
        int fold;
    };
    std::vector<Job> job_list;
    for (size_t c = 0; c < kinds.size(); ++c)
        for (int f = 0; f < plan.k; ++f) job_list.push_back({c, f});

    std::exception_ptr first_error;
    std::atomic<bool> failed{false};

    detail::run_jobs(job_list.size(), jobs, [&](size_t j) {
        if (failed.load()) return;
        const auto [kind_idx, fold] = job_list[j];
        try {
            std::vector<size_t> train_rows, test_rows;
            for (size_t r = 0; r < X.rows; ++r)
                (plan.fold_of[r] == fold ? test_rows : train_rows).push_back(r);
            Matrix Xtr(train_rows.size(), X.cols);
            std::vector<int> ytr(train_rows.size());
            std::vector<int> folds_seen;
            for (size_t i = 0; i < train_rows.size(); ++i) {
                std::copy_n(X.row(train_rows[i]), X.cols, Xtr.row(i));
                ytr[i] = y[train_rows[i]];
                int f = plan.fold_of[train_rows[i]];
                if (std::find(folds_seen.begin(), folds_seen.end(), f) == folds_seen.end())
                    folds_seen.push_back(f);
            }
            std::sort(folds_seen.begin(), folds_seen.end());

            uint64_t seed = derive_seed(plan.seed, strfmt("oof:%s:%d",
                learner_name(kinds[kind_idx].kind), fold));
            ModelPtr model = train_base(kinds[kind_idx], Xtr, ytr, seed);

            Matrix Xte(test_rows.size(), X.cols);
            for (size_t i = 0; i < test_rows.size(); ++i)
                std::copy_n(X.row(test_rows[i]), X.cols, Xte.row(i));
            Vec p = model->predict_proba(Xte);
            for (size_t i = 0; i < test_rows.size(); ++i)
                out.probs(test_rows[i], kind_idx) = p[i];
            out.trained_folds[kind_idx][fold] = std::move(folds_seen);
        } catch (const std::exception& e) {
            if (!failed.exchange(true))
                first_error = std::make_exception_ptr(DataError(strfmt(
                    "kfold_oof(%s, fold %d): %s",
                    learner_name(kinds[kind_idx].kind), fold, e.what())));
        }
    });
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// No-leakage audit from recorded provenance: the model that produced entry
// (s, c) must not have trained on the fold containing s, and every
// probability must be in [0, 1].
struct OofAuditResult {
    bool passed = true;
    std::vector<std::string> violations;
};

inline OofAuditResult audit_oof(const OofMatrix& m) {
    OofAuditResult res;
    auto flag = [&](std::string msg) {
        res.passed = false;
        if (res.violations.size() < 20) res.violations.push_back(std::move(msg));
    };
    for (size_t c = 0; c < m.probs.cols; ++c) {
        for (size_t s = 0; s < m.probs.rows; ++s) {
            int fold = m.fold_of[s];
            if (fold < 0 || static_cast<size_t>(fold) >= m.trained_folds[c].size()) {
                flag(strfmt("sample %zu has out-of-range fold %d", s, fold));
                continue;
            }
            const auto& seen = m.trained_folds[c][fold];
            if (seen.empty())
                flag(strfmt("no training provenance for (%s, fold %d)",
                            m.learner_names[c].c_str(), fold));
            if (std::find(seen.begin(), seen.end(), fold) != seen.end())
                flag(strfmt("leak: model (%s, fold %d) trained on its own fold",
                            m.learner_names[c].c_str(), fold));
            double p = m.probs(s, c);
            if (!(p >= 0.0 && p <= 1.0))
                flag(strfmt("entry (%zu, %s) = %g outside [0,1]", s,
                            m.learner_names[c].c_str(), p));
        }
    }
    return res;
}

// Persistence: `sample_id<TAB>fold<TAB><learner columns...><TAB>mean`.
inline void save_oof_matrix(const OofMatrix& m, std::ostream& out) {
    out << "sample_id\tfold";
    for (const auto& n : m.learner_names) out << '\t' << n;
    out << "\tmean\n";
    Vec mean = mean_prediction(m);
    for (size_t r = 0; r < m.probs.rows; ++r) {
        out << r << '\t' << m.fold_of[r];
        for (size_t c = 0; c < m.probs.cols; ++c) out << '\t' << fmt_double(m.probs(r, c));
        out << '\t' << fmt_double(mean[r]) << '\n';
    }
}

}  // namespace antiphish
