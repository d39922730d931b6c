#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/matrix.hpp"
#include "antiphish/meta_boost.hpp"
#include "antiphish/rng.hpp"

namespace antiphish {

// The six classical kinds plus XGBoost, which the configuration may add as an
// optional seventh base learner.
enum class LearnerKind {
    LinearSVM, GaussianNB, DecisionTree, LogisticRegression, KNN, SMO, XGBoost
};

inline const char* learner_name(LearnerKind k) {
    switch (k) {
        case LearnerKind::LinearSVM: return "linear_svm";
        case LearnerKind::GaussianNB: return "gaussian_nb";
        case LearnerKind::DecisionTree: return "decision_tree";
        case LearnerKind::LogisticRegression: return "logistic_regression";
        case LearnerKind::KNN: return "knn";
        case LearnerKind::SMO: return "smo";
        case LearnerKind::XGBoost: return "xgboost";
    }
    return "?";
}

inline LearnerKind learner_from_name(const std::string& s) {
    for (LearnerKind k : {LearnerKind::LinearSVM, LearnerKind::GaussianNB,
                          LearnerKind::DecisionTree, LearnerKind::LogisticRegression,
                          LearnerKind::KNN, LearnerKind::SMO, LearnerKind::XGBoost})
        if (s == learner_name(k)) return k;
    throw ConfigError(strfmt("unknown learner '%s'", s.c_str()));
}

struct LearnerConfig {
    LearnerKind kind = LearnerKind::LogisticRegression;
    int knn_k = 5;
    int tree_max_depth = 10;
    int tree_min_leaf = 1;
    double gd_learning_rate = 0.5;  // shared by LinearSVM and LogisticRegression
    int gd_epochs = 300;
    double gd_l2 = 1e-4;
    double smo_c = 1.0;
    double smo_tol = 1e-3;
    int smo_max_passes = 5;
    BoostParams boost;  // only for kind == XGBoost

    void validate() const {
        if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
        if (tree_max_depth < 0 || tree_min_leaf < 1)
            throw ConfigError("tree_max_depth must be >= 0, tree_min_leaf >= 1");
        if (gd_learning_rate <= 0 || gd_epochs < 1 || gd_l2 < 0)
            throw ConfigError("gradient-descent hyperparameters out of range");
        if (smo_c <= 0 || smo_tol <= 0 || smo_max_passes < 1)
            throw ConfigError("smo hyperparameters out of range");
        if (kind == LearnerKind::XGBoost) boost.validate();
    }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Common contract: phishing probability per row, label 1 iff p >= 0.5.
class BaseModel {
public:
    virtual ~BaseModel() = default;
    virtual LearnerKind kind() const = 0;
    virtual double predict_one(const double* x) const = 0;
    virtual void save(std::ostream& out) const = 0;

    size_t arity = 0;

    Vec predict_proba(const Matrix& X) const {
        if (X.cols != arity) throw ArityMismatch(strfmt(
            "model expects %zu features, got %zu", arity, X.cols));
        Vec p(X.rows);
        for (size_t r = 0; r < X.rows; ++r) p[r] = predict_one(X.row(r));
        return p;
    }
};

using ModelPtr = std::shared_ptr<const BaseModel>;

namespace detail {

inline void check_training_inputs(const Matrix& X, const std::vector<int>& y) {
    if (X.rows != y.size()) throw LengthMismatch("train: X rows != labels");
    if (X.rows == 0) throw TooFewSamples("train: empty training set");
    if (!X.all_finite()) throw NonFiniteFeature("train: non-finite feature value");
    bool has0 = false, has1 = false;
    for (int v : y) (v == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw SingleClassError("train: single-class training set");
}

}  // namespace detail

// ---- Gaussian naive Bayes ---------------------------------------------------

class GaussianNbModel final : public BaseModel {
public:
    Vec mean[2], var[2];
    double log_prior[2] = {0, 0};

    LearnerKind kind() const override { return LearnerKind::GaussianNB; }

    double predict_one(const double* x) const override {
        double ll[2];
        for (int c = 0; c < 2; ++c) {
            double s = log_prior[c];
            for (size_t j = 0; j < arity; ++j) {
                double d = x[j] - mean[c][j];
                s += -0.5 * std::log(6.283185307179586 * var[c][j]) - d * d / (2.0 * var[c][j]);
            }
            ll[c] = s;
        }
        return 1.0 / (1.0 + std::exp(ll[0] - ll[1]));
    }

    void save(std::ostream& out) const override {
        out << "gaussian_nb\tv1\t" << arity << '\t'
            << fmt_double(log_prior[0]) << '\t' << fmt_double(log_prior[1]) << '\n';
        for (int c = 0; c < 2; ++c)
            for (size_t j = 0; j < arity; ++j)
                out << fmt_double(mean[c][j]) << '\t' << fmt_double(var[c][j]) << '\n';
    }
};

inline ModelPtr train_gaussian_nb(const Matrix& X, const std::vector<int>& y) {
    auto m = std::make_shared<GaussianNbModel>();
    m->arity = X.cols;
    size_t n[2] = {0, 0};
    for (int c = 0; c < 2; ++c) {
        m->mean[c].assign(X.cols, 0.0);
        m->var[c].assign(X.cols, 0.0);
    }
    for (size_t r = 0; r < X.rows; ++r) {
        int c = y[r] == 1;
        ++n[c];
        for (size_t j = 0; j < X.cols; ++j) m->mean[c][j] += X(r, j);
    }
    for (int c = 0; c < 2; ++c)
        for (size_t j = 0; j < X.cols; ++j) m->mean[c][j] /= static_cast<double>(n[c]);
    for (size_t r = 0; r < X.rows; ++r) {
        int c = y[r] == 1;
        for (size_t j = 0; j < X.cols; ++j) {
            double d = X(r, j) - m->mean[c][j];
            m->var[c][j] += d * d;
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (size_t j = 0; j < X.cols; ++j)
            m->var[c][j] = std::max(m->var[c][j] / static_cast<double>(n[c]), 1e-9);
        m->log_prior[c] = std::log(static_cast<double>(n[c]) / static_cast<double>(X.rows));
    }
    return m;
}

// ---- k-nearest neighbours ---------------------------------------------------

class KnnModel final : public BaseModel {
public:
    Matrix train_x;
    std::vector<int> train_y;
    int k = 5;

    LearnerKind kind() const override { return LearnerKind::KNN; }

    double predict_one(const double* x) const override {
        // (distance, index) pairs; ties resolved by training index
        std::vector<std::pair<double, size_t>> d(train_x.rows);
        for (size_t r = 0; r < train_x.rows; ++r) {
            const double* t = train_x.row(r);
            double s = 0.0;
            for (size_t j = 0; j < arity; ++j) {
                double diff = x[j] - t[j];
                s += diff * diff;
            }
            d[r] = {s, r};
        }
        size_t kk = std::min<size_t>(k, d.size());
        std::partial_sort(d.begin(), d.begin() + kk, d.end());
        size_t votes = 0;
        for (size_t i = 0; i < kk; ++i) votes += train_y[d[i].second] == 1;
        return static_cast<double>(votes) / static_cast<double>(kk);
    }

    void save(std::ostream& out) const override {
        out << "knn\tv1\t" << arity << '\t' << k << '\t' << train_x.rows << '\n';
        for (size_t r = 0; r < train_x.rows; ++r) {
            out << train_y[r];
            for (size_t j = 0; j < arity; ++j) out << '\t' << fmt_double(train_x(r, j));
            out << '\n';
        }
    }
};

inline ModelPtr train_knn(const Matrix& X, const std::vector<int>& y, int k) {
    auto m = std::make_shared<KnnModel>();
    m->arity = X.cols;
    m->train_x = X;
    m->train_y = y;
    m->k = k;
    return m;
}

// ---- decision tree (CART, Gini) --------------------------------------------

class DecisionTreeModel final : public BaseModel {
public:
    struct Node {
        int feature = -1;        // -1 for leaf
        double threshold = 0.0;  // go left if x[feature] < threshold
        int left = -1, right = -1;
        double prob = 0.5;       // leaf positive fraction
    };
    std::vector<Node> nodes;

    LearnerKind kind() const override { return LearnerKind::DecisionTree; }

    double predict_one(const double* x) const override {
        int id = 0;
        while (nodes[id].feature >= 0)
            id = x[nodes[id].feature] < nodes[id].threshold ? nodes[id].left : nodes[id].right;
        return nodes[id].prob;
    }

    int depth() const { return depth_of(0); }

    void save(std::ostream& out) const override {
        out << "decision_tree\tv1\t" << arity << '\t' << nodes.size() << '\n';
        for (const auto& n : nodes)
            out << n.feature << '\t' << fmt_double(n.threshold) << '\t' << n.left << '\t'
                << n.right << '\t' << fmt_double(n.prob) << '\n';
    }

private:
    int depth_of(int id) const {
        if (nodes[id].feature < 0) return 0;
        return 1 + std::max(depth_of(nodes[id].left), depth_of(nodes[id].right));
    }
};

namespace detail {

struct GiniSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

inline double gini(size_t pos, size_t n) {
    if (n == 0) return 0.0;
    double p = static_cast<double>(pos) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
}

inline GiniSplit best_gini_split(const Matrix& X, const std::vector<int>& y,
                                 const std::vector<size_t>& rows, size_t min_leaf) {
    const size_t n = rows.size();
    size_t pos = 0;
    for (size_t r : rows) pos += y[r] == 1;
    const double parent = gini(pos, n);
    GiniSplit best;
    std::vector<std::pair<double, int>> col(n);
    for (size_t f = 0; f < X.cols; ++f) {
        for (size_t i = 0; i < n; ++i) col[i] = {X(rows[i], f), y[rows[i]]};
        std::sort(col.begin(), col.end());
        size_t left_pos = 0;
        for (size_t i = 1; i < n; ++i) {
            left_pos += col[i - 1].second == 1;
            if (col[i].first == col[i - 1].first) continue;
            if (i < min_leaf || n - i < min_leaf) continue;
            double w_left = static_cast<double>(i) / static_cast<double>(n);
            double child = w_left * gini(left_pos, i) +
                           (1.0 - w_left) * gini(pos - left_pos, n - i);
            double gain = parent - child;
            double threshold = col[i - 1].first + 0.5 * (col[i].first - col[i - 1].first);
            if (gain > best.gain + 1e-15) {
                best = {static_cast<int>(f), threshold, gain};
            }
        }
    }
    return best;
}

inline int grow_tree(DecisionTreeModel& model, const Matrix& X, const std::vector<int>& y,
                     std::vector<size_t> rows, int depth, const LearnerConfig& cfg) {
    size_t pos = 0;
    for (size_t r : rows) pos += y[r] == 1;
    int id = static_cast<int>(model.nodes.size());
    model.nodes.emplace_back();
    model.nodes[id].prob = static_cast<double>(pos) / static_cast<double>(rows.size());
    if (depth >= cfg.tree_max_depth || pos == 0 || pos == rows.size() ||
        rows.size() < 2 * static_cast<size_t>(cfg.tree_min_leaf))
        return id;
    GiniSplit s = best_gini_split(X, y, rows, cfg.tree_min_leaf);
    if (s.feature < 0 || s.gain <= 0.0) return id;
    std::vector<size_t> left, right;
    for (size_t r : rows)
        (X(r, s.feature) < s.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    model.nodes[id].feature = s.feature;
    model.nodes[id].threshold = s.threshold;
    int l = grow_tree(model, X, y, std::move(left), depth + 1, cfg);
    int r = grow_tree(model, X, y, std::move(right), depth + 1, cfg);
    model.nodes[id].left = l;
    model.nodes[id].right = r;
    return id;
}

}  // namespace detail

inline ModelPtr train_decision_tree(const Matrix& X, const std::vector<int>& y,
                                    const LearnerConfig& cfg) {
    auto m = std::make_shared<DecisionTreeModel>();
    m->arity = X.cols;
    std::vector<size_t> rows(X.rows);
    std::iota(rows.begin(), rows.end(), 0);
    detail::grow_tree(*m, X, y, std::move(rows), 0, cfg);
    return m;
}

// ---- linear models: logistic regression and hinge-loss SVM -----------------

class LinearModel final : public BaseModel {
public:
    Vec w;
    double b = 0.0;
    LearnerKind kind_ = LearnerKind::LogisticRegression;

    LearnerKind kind() const override { return kind_; }

    // SVM margins pass through the logistic squash so every learner emits a
    // comparable [0,1] score for stacking.
    double predict_one(const double* x) const override {
        return sigmoid(dot(w.data(), x, w.size()) + b);
    }

    void save(std::ostream& out) const override {
        out << learner_name(kind_) << "\tv1\t" << arity << '\t' << fmt_double(b) << '\n';
        for (double v : w) out << fmt_double(v) << '\n';
    }
};

inline ModelPtr train_logistic_regression(const Matrix& X, const std::vector<int>& y,
                                          const LearnerConfig& cfg) {
    auto m = std::make_shared<LinearModel>();
    m->kind_ = LearnerKind::LogisticRegression;
    m->arity = X.cols;
    m->w.assign(X.cols, 0.0);
    const double n = static_cast<double>(X.rows);
    Vec grad(X.cols);
    for (int epoch = 0; epoch < cfg.gd_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (size_t r = 0; r < X.rows; ++r) {
            double e = sigmoid(dot(m->w.data(), X.row(r), X.cols) + m->b) - y[r];
            const double* xr = X.row(r);
            for (size_t j = 0; j < X.cols; ++j) grad[j] += e * xr[j];
            grad_b += e;
        }
        for (size_t j = 0; j < X.cols; ++j)
            m->w[j] -= cfg.gd_learning_rate * (grad[j] / n + cfg.gd_l2 * m->w[j]);
        m->b -= cfg.gd_learning_rate * grad_b / n;
    }
    return m;
}

inline ModelPtr train_linear_svm(const Matrix& X, const std::vector<int>& y,
                                 const LearnerConfig& cfg) {
    auto m = std::make_shared<LinearModel>();
    m->kind_ = LearnerKind::LinearSVM;
    m->arity = X.cols;
    m->w.assign(X.cols, 0.0);
    const double n = static_cast<double>(X.rows);
    Vec grad(X.cols);
    for (int epoch = 0; epoch < cfg.gd_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (size_t r = 0; r < X.rows; ++r) {
            double ypm = y[r] == 1 ? 1.0 : -1.0;
            double margin = ypm * (dot(m->w.data(), X.row(r), X.cols) + m->b);
            if (margin < 1.0) {
                const double* xr = X.row(r);
                for (size_t j = 0; j < X.cols; ++j) grad[j] -= ypm * xr[j];
                grad_b -= ypm;
            }
        }
        for (size_t j = 0; j < X.cols; ++j)
            m->w[j] -= cfg.gd_learning_rate * (grad[j] / n + cfg.gd_l2 * m->w[j]);
        m->b -= cfg.gd_learning_rate * grad_b / n;
    }
    return m;
}

// ---- simplified sequential minimal optimization (linear kernel) ------------

inline ModelPtr train_smo(const Matrix& X, const std::vector<int>& y, const LearnerConfig& cfg,
                          uint64_t seed) {
    const size_t n = X.rows;
    Vec alpha(n, 0.0), ypm(n);
    for (size_t i = 0; i < n; ++i) ypm[i] = y[i] == 1 ? 1.0 : -1.0;
    Vec w(X.cols, 0.0);
    double b = 0.0;
    Rng rng(seed);
    auto f = [&](size_t i) { return dot(w.data(), X.row(i), X.cols) + b; };

    // hard sweep cap bounds runtime on slow-converging data
    int passes = 0, sweeps = 0;
    const int max_sweeps = std::max(100, 20 * cfg.smo_max_passes);
    while (passes < cfg.smo_max_passes && sweeps++ < max_sweeps) {
        int changed = 0;
        for (size_t i = 0; i < n; ++i) {
            double Ei = f(i) - ypm[i];
            if (!((ypm[i] * Ei < -cfg.smo_tol && alpha[i] < cfg.smo_c) ||
                  (ypm[i] * Ei > cfg.smo_tol && alpha[i] > 0)))
                continue;
            size_t j = rng.below(n - 1);
            if (j >= i) ++j;
            double Ej = f(j) - ypm[j];
            double ai_old = alpha[i], aj_old = alpha[j];
            double L, H;
            if (ypm[i] != ypm[j]) {
                L = std::max(0.0, aj_old - ai_old);
                H = std::min(cfg.smo_c, cfg.smo_c + aj_old - ai_old);
            } else {
                L = std::max(0.0, ai_old + aj_old - cfg.smo_c);
                H = std::min(cfg.smo_c, ai_old + aj_old);
            }
            if (L == H) continue;
            double kii = dot(X.row(i), X.row(i), X.cols);
            double kjj = dot(X.row(j), X.row(j), X.cols);
            double kij = dot(X.row(i), X.row(j), X.cols);
            double eta = 2.0 * kij - kii - kjj;
            if (eta >= 0) continue;
            double aj = aj_old - ypm[j] * (Ei - Ej) / eta;
            aj = std::clamp(aj, L, H);
            if (std::abs(aj - aj_old) < 1e-5) continue;
            double ai = ai_old + ypm[i] * ypm[j] * (aj_old - aj);
            // incremental update of the linear weight vector
            const double* xi = X.row(i);
            const double* xj = X.row(j);
            for (size_t c = 0; c < X.cols; ++c)
                w[c] += ypm[i] * (ai - ai_old) * xi[c] + ypm[j] * (aj - aj_old) * xj[c];
            double b1 = b - Ei - ypm[i] * (ai - ai_old) * kii - ypm[j] * (aj - aj_old) * kij;
            double b2 = b - Ej - ypm[i] * (ai - ai_old) * kij - ypm[j] * (aj - aj_old) * kjj;
            if (ai > 0 && ai < cfg.smo_c) b = b1;
            else if (aj > 0 && aj < cfg.smo_c) b = b2;
            else b = 0.5 * (b1 + b2);
            alpha[i] = ai;
            alpha[j] = aj;
            ++changed;
        }
        passes = changed == 0 ? passes + 1 : 0;
    }

    auto m = std::make_shared<LinearModel>();
    m->kind_ = LearnerKind::SMO;
    m->arity = X.cols;
    m->w = std::move(w);
    m->b = b;
    return m;
}

// ---- boosted trees as an optional base learner ------------------------------

class BoostedBaseModel final : public BaseModel {
public:
    BoostedEnsemble ensemble;

    LearnerKind kind() const override { return LearnerKind::XGBoost; }

    double predict_one(const double* x) const override {
        return 1.0 / (1.0 + std::exp(-ensemble.raw_score(x)));
    }

    void save(std::ostream& out) const override {
        out << "xgboost\tv1\t" << arity << '\n';
        save_ensemble(ensemble, out);
    }
};

// ---- persistence ------------------------------------------------------------

inline ModelPtr load_base_model(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty model file");
    std::vector<std::string> f;
    size_t pos = 0;
    while (pos <= header.size()) {
        size_t next = header.find('\t', pos);
        f.push_back(header.substr(pos, next == std::string::npos ? std::string::npos
                                                                 : next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (f.size() < 3 || f[1] != "v1") throw SchemaMismatch("bad model header");
    const std::string& tag = f[0];
    const size_t arity = std::stoull(f[2]);

    if (tag == "gaussian_nb") {
        if (f.size() != 5) throw SchemaMismatch("bad gaussian_nb header");
        auto m = std::make_shared<GaussianNbModel>();
        m->arity = arity;
        m->log_prior[0] = std::stod(f[3]);
        m->log_prior[1] = std::stod(f[4]);
        for (int c = 0; c < 2; ++c) {
            m->mean[c].resize(arity);
            m->var[c].resize(arity);
            for (size_t j = 0; j < arity; ++j) in >> m->mean[c][j] >> m->var[c][j];
        }
        if (!in) throw ParseError("truncated gaussian_nb model");
        return m;
    }
    if (tag == "knn") {
        if (f.size() != 5) throw SchemaMismatch("bad knn header");
        auto m = std::make_shared<KnnModel>();
        m->arity = arity;
        m->k = std::stoi(f[3]);
        size_t rows = std::stoull(f[4]);
        m->train_x = Matrix(rows, arity);
        m->train_y.resize(rows);
        for (size_t r = 0; r < rows; ++r) {
            in >> m->train_y[r];
            for (size_t j = 0; j < arity; ++j) in >> m->train_x(r, j);
        }
        if (!in) throw ParseError("truncated knn model");
        return m;
    }
    if (tag == "decision_tree") {
        if (f.size() != 4) throw SchemaMismatch("bad decision_tree header");
        auto m = std::make_shared<DecisionTreeModel>();
        m->arity = arity;
        size_t count = std::stoull(f[3]);
        m->nodes.resize(count);
        for (auto& n : m->nodes)
            in >> n.feature >> n.threshold >> n.left >> n.right >> n.prob;
        if (!in) throw ParseError("truncated decision_tree model");
        return m;
    }
    if (tag == "logistic_regression" || tag == "linear_svm" || tag == "smo") {
        if (f.size() != 4) throw SchemaMismatch("bad linear model header");
        auto m = std::make_shared<LinearModel>();
        m->kind_ = learner_from_name(tag);
        m->arity = arity;
        m->b = std::stod(f[3]);
        m->w.resize(arity);
        for (size_t j = 0; j < arity; ++j) in >> m->w[j];
        if (!in) throw ParseError("truncated linear model");
        return m;
    }
    if (tag == "xgboost") {
        auto m = std::make_shared<BoostedBaseModel>();
        m->arity = arity;
        m->ensemble = load_ensemble(in);
        return m;
    }
    throw SchemaMismatch(strfmt("unknown model tag '%s'", tag.c_str()));
}

// ---- facade -----------------------------------------------------------------

inline ModelPtr train_base(const LearnerConfig& cfg, const Matrix& X, const std::vector<int>& y,
                           uint64_t seed) {
    cfg.validate();
    detail::check_training_inputs(X, y);
    switch (cfg.kind) {
        case LearnerKind::GaussianNB: return train_gaussian_nb(X, y);
        case LearnerKind::KNN: return train_knn(X, y, cfg.knn_k);
        case LearnerKind::DecisionTree: return train_decision_tree(X, y, cfg);
        case LearnerKind::LogisticRegression: return train_logistic_regression(X, y, cfg);
        case LearnerKind::LinearSVM: return train_linear_svm(X, y, cfg);
        case LearnerKind::SMO: return train_smo(X, y, cfg, seed);
        case LearnerKind::XGBoost: {
            auto m = std::make_shared<BoostedBaseModel>();
            m->arity = X.cols;
            m->ensemble = boost_fit(X, y, cfg.boost);
            return m;
        }
    }
    throw ConfigError("train_base: unknown learner kind");
}

}  // namespace antiphish
