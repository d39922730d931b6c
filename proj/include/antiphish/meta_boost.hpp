#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/matrix.hpp"

namespace antiphish {

// Second-order gradient-boosted regression trees on logistic loss.
// Leaf-optimal weight w* = -G/(H + lambda); split gain
//   1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma.

struct BoostParams {
    int rounds = 100;             // M
    double learning_rate = 0.1;   // eta
    double lambda = 1.0;          // L2 leaf regularization
    double gamma = 0.0;           // per-leaf complexity penalty
    int max_depth = 3;
    double min_child_hessian = 1.0;

    void validate() const {
        if (rounds < 0) throw ConfigError("boost rounds must be >= 0");
        if (learning_rate <= 0.0 || learning_rate > 1.0)
            throw ConfigError("boost learning_rate must be in (0,1]");
        if (lambda < 0.0 || gamma < 0.0) throw ConfigError("lambda and gamma must be >= 0");
        if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
        if (min_child_hessian < 0.0) throw ConfigError("min_child_hessian must be >= 0");
    }
};

// g = p - y, h = p(1-p) for logistic loss at raw score; h floored at 1e-16
inline void grad_hess(const std::vector<int>& y, const Vec& raw, Vec& g, Vec& h) {
    if (y.size() != raw.size()) throw LengthMismatch("grad_hess: length mismatch");
    g.resize(y.size());
    h.resize(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(raw[i])) throw NonFiniteUpdate("grad_hess: non-finite raw score");
        double p = 1.0 / (1.0 + std::exp(-raw[i]));
        g[i] = p - static_cast<double>(y[i]);
        h[i] = std::max(p * (1.0 - p), 1e-16);
    }
}

struct RegressionTree {
    struct Node {
        int feature = -1;        // -1 for leaf
        double threshold = 0.0;  // go left if x < threshold
        int left = -1, right = -1;
        bool default_left = true;  // missing (NaN) routing: larger-hessian child
        double weight = 0.0;       // leaf value w*
    };
    std::vector<Node> nodes;

    double predict_one(const double* x) const {
        int id = 0;
        while (nodes[id].feature >= 0) {
            const Node& nd = nodes[id];
            double v = x[nd.feature];
            if (std::isnan(v))
                id = nd.default_left ? nd.left : nd.right;
            else
                id = v < nd.threshold ? nd.left : nd.right;
        }
        return nodes[id].weight;
    }

    size_t leaf_count() const {
        size_t c = 0;
        for (const auto& n : nodes) c += n.feature < 0;
        return c;
    }
};

namespace detail {

struct BoostSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

inline double leaf_objective_term(double G, double H, double lambda) {
    return G * G / (H + lambda);
}

// Exact greedy search over sorted column values. Ties in gain resolved by
// (lowest column id, lowest threshold).
inline BoostSplit best_boost_split(const Matrix& X, const Vec& g, const Vec& h,
                                   const std::vector<size_t>& rows, const BoostParams& p) {
    double G = 0.0, H = 0.0;
    for (size_t r : rows) {
        G += g[r];
        H += h[r];
    }
    const double parent = leaf_objective_term(G, H, p.lambda);
    BoostSplit best;
    std::vector<std::pair<double, size_t>> col(rows.size());
    for (size_t f = 0; f < X.cols; ++f) {
        for (size_t i = 0; i < rows.size(); ++i) col[i] = {X(rows[i], f), rows[i]};
        std::sort(col.begin(), col.end());
        double GL = 0.0, HL = 0.0;
        for (size_t i = 1; i < col.size(); ++i) {
            GL += g[col[i - 1].second];
            HL += h[col[i - 1].second];
            if (col[i].first == col[i - 1].first) continue;
            double GR = G - GL, HR = H - HL;
            if (HL < p.min_child_hessian || HR < p.min_child_hessian) continue;
            double gain = 0.5 * (leaf_objective_term(GL, HL, p.lambda) +
                                 leaf_objective_term(GR, HR, p.lambda) - parent) -
                          p.gamma;
            if (gain > best.gain) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = col[i - 1].first + 0.5 * (col[i].first - col[i - 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

inline int grow_boost_tree(RegressionTree& tree, const Matrix& X, const Vec& g, const Vec& h,
                           std::vector<size_t> rows, int depth, const BoostParams& p) {
    double G = 0.0, H = 0.0, HL_default = 0.0;
    for (size_t r : rows) {
        G += g[r];
        H += h[r];
    }
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[id].weight = -G / (H + p.lambda);
    if (depth >= p.max_depth) return id;
    BoostSplit s = best_boost_split(X, g, h, rows, p);
    if (!s.found || s.gain <= 0.0) return id;
    std::vector<size_t> left, right;
    for (size_t r : rows) {
        if (X(r, s.feature) < s.threshold) {
            left.push_back(r);
            HL_default += h[r];
        } else {
            right.push_back(r);
        }
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = s.feature;
    tree.nodes[id].threshold = s.threshold;
    tree.nodes[id].default_left = HL_default >= H - HL_default;
    int l = grow_boost_tree(tree, X, g, h, std::move(left), depth + 1, p);
    int r = grow_boost_tree(tree, X, g, h, std::move(right), depth + 1, p);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
}

}  // namespace detail

inline RegressionTree build_tree(const Matrix& X, const Vec& g, const Vec& h,
                                 const BoostParams& params) {
    if (g.size() != X.rows || h.size() != X.rows)
        throw LengthMismatch("build_tree: gradient arity mismatch");
    RegressionTree tree;
    std::vector<size_t> rows(X.rows);
    std::iota(rows.begin(), rows.end(), 0);
    detail::grow_boost_tree(tree, X, g, h, std::move(rows), 0, params);
    return tree;
}

struct BoostedEnsemble {
    double base_score = 0.0;  // initial log-odds
    BoostParams params;
    std::vector<RegressionTree> trees;
    std::vector<std::string> schema;  // meta-feature column names

    double raw_score(const double* x) const {
        double s = base_score;
        for (const auto& t : trees) s += params.learning_rate * t.predict_one(x);
        return s;
    }
};

inline BoostedEnsemble boost_fit(const Matrix& X, const std::vector<int>& y,
                                 const BoostParams& params,
                                 std::vector<std::string> schema = {}) {
    params.validate();
    if (X.rows != y.size()) throw LengthMismatch("boost_fit: X rows != labels");
    if (X.rows == 0) throw TooFewSamples("boost_fit: empty training set");
    size_t pos = 0;
    for (int v : y) pos += v == 1;
    if (pos == 0 || pos == y.size()) throw SingleClassError("boost_fit: single-class labels");

    BoostedEnsemble ens;
    ens.params = params;
    ens.schema = std::move(schema);
    double prior = static_cast<double>(pos) / static_cast<double>(y.size());
    ens.base_score = std::log(prior / (1.0 - prior));

    Vec raw(X.rows, ens.base_score), g, h;
    for (int m = 0; m < params.rounds; ++m) {
        grad_hess(y, raw, g, h);
        RegressionTree tree = build_tree(X, g, h, params);
        for (size_t r = 0; r < X.rows; ++r)
            raw[r] += params.learning_rate * tree.predict_one(X.row(r));
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

// Column-concatenation of stacked prediction columns. Training rows must be
// fed OOF-derived Phase-I values; test rows full-train base-model outputs —
// the pipeline owns that distinction, this is pure assembly.
inline Matrix assemble_meta_features(const Vec& mean_pred,
                                     const std::vector<std::pair<std::string, Vec>>& extra_columns,
                                     std::vector<std::string>* schema_out = nullptr) {
    const size_t n = mean_pred.size();
    for (const auto& [name, col] : extra_columns)
        if (col.size() != n)
            throw LengthMismatch(strfmt("meta column '%s' has %zu rows, expected %zu",
                                        name.c_str(), col.size(), n));
    Matrix X(n, 1 + extra_columns.size());
    std::vector<std::string> schema{"mean"};
    for (size_t r = 0; r < n; ++r) X(r, 0) = mean_pred[r];
    for (size_t c = 0; c < extra_columns.size(); ++c) {
        schema.push_back(extra_columns[c].first);
        for (size_t r = 0; r < n; ++r) X(r, c + 1) = extra_columns[c].second[r];
    }
    if (schema_out) *schema_out = std::move(schema);
    return X;
}

struct FinalPrediction {
    Vec probability;
    std::vector<int> label;
};

inline FinalPrediction final_predict(const BoostedEnsemble& ens, const Matrix& X) {
    if (!ens.schema.empty() && X.cols != ens.schema.size())
        throw SchemaMismatch(strfmt("meta features have %zu columns, ensemble expects %zu",
                                    X.cols, ens.schema.size()));
    FinalPrediction out;
    out.probability.resize(X.rows);
    out.label.resize(X.rows);
    for (size_t r = 0; r < X.rows; ++r) {
        double p = 1.0 / (1.0 + std::exp(-ens.raw_score(X.row(r))));
        out.probability[r] = p;
        out.label[r] = p >= 0.5 ? 1 : 0;
    }
    return out;
}

inline double total_logistic_loss(const std::vector<int>& y, const Vec& raw) {
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        // softplus(raw) - y*raw, stable for large |raw|
        double z = raw[i];
        double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        s += sp - static_cast<double>(y[i]) * z;
    }
    return s;
}

// ---- persistence: one line per node -----------------------------------------

inline void save_ensemble(const BoostedEnsemble& e, std::ostream& out) {
    out << "boosted_ensemble\tv1\t" << e.trees.size() << '\t' << fmt_double(e.base_score)
        << '\t' << e.params.rounds << '\t' << fmt_double(e.params.learning_rate) << '\t'
        << fmt_double(e.params.lambda) << '\t' << fmt_double(e.params.gamma) << '\t'
        << e.params.max_depth << '\t' << fmt_double(e.params.min_child_hessian) << '\n';
    out << "schema";
    for (const auto& s : e.schema) out << '\t' << s;
    out << '\n';
    for (size_t t = 0; t < e.trees.size(); ++t) {
        const auto& nodes = e.trees[t].nodes;
        for (size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            if (n.feature < 0)
                out << t << '\t' << i << "\tleaf\t" << fmt_double(n.weight) << "\t-\t-\t-\n";
            else
                out << t << '\t' << i << "\tsplit\t" << n.feature << '\t'
                    << fmt_double(n.threshold) << '\t' << n.left << ':' << n.right << '\t'
                    << (n.default_left ? 'L' : 'R') << '\n';
        }
    }
}

inline BoostedEnsemble load_ensemble(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty ensemble file");
    BoostedEnsemble e;
    {
        char tag[32], ver[8];
        unsigned long ntrees = 0;
        if (std::sscanf(line.c_str(), "%31[^\t]\t%7[^\t]\t%lu\t%lf\t%d\t%lf\t%lf\t%lf\t%d\t%lf",
                        tag, ver, &ntrees, &e.base_score, &e.params.rounds,
                        &e.params.learning_rate, &e.params.lambda, &e.params.gamma,
                        &e.params.max_depth, &e.params.min_child_hessian) != 10 ||
            std::string(tag) != "boosted_ensemble" || std::string(ver) != "v1")
            throw SchemaMismatch("bad ensemble header");
        e.trees.resize(ntrees);
    }
    if (!std::getline(in, line) || line.substr(0, 6) != "schema")
        throw SchemaMismatch("ensemble schema line missing");
    {
        size_t pos = 6;
        while (pos < line.size() && line[pos] == '\t') {
            size_t next = line.find('\t', pos + 1);
            e.schema.push_back(line.substr(pos + 1, next == std::string::npos
                                                        ? std::string::npos
                                                        : next - pos - 1));
            pos = next == std::string::npos ? line.size() : next;
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t next = line.find('\t', pos);
            f.push_back(line.substr(pos, next == std::string::npos ? std::string::npos
                                                                   : next - pos));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (f.size() != 7) throw ParseError("ensemble node line malformed");
        size_t t = std::stoull(f[0]);
        size_t i = std::stoull(f[1]);
        if (t >= e.trees.size()) throw ParseError("ensemble tree id out of range");
        auto& nodes = e.trees[t].nodes;
        if (nodes.size() <= i) nodes.resize(i + 1);
        if (f[2] == "leaf") {
            nodes[i].feature = -1;
            nodes[i].weight = std::stod(f[3]);
        } else {
            nodes[i].feature = std::stoi(f[3]);
            nodes[i].threshold = std::stod(f[4]);
            size_t colon = f[5].find(':');
            nodes[i].left = std::stoi(f[5].substr(0, colon));
            nodes[i].right = std::stoi(f[5].substr(colon + 1));
            nodes[i].default_left = f[6] == "L";
        }
    }
    return e;
}

}  // namespace antiphish
