#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/learners.hpp"
#include "antiphish/lstm_train.hpp"
#include "antiphish/meta_boost.hpp"
#include "antiphish/metrics.hpp"
#include "antiphish/optimizers.hpp"

namespace antiphish {

enum class FeatureMode { URLF, CLF, BOTH };

inline const char* feature_mode_name(FeatureMode m) {
    switch (m) {
        case FeatureMode::URLF: return "urlf";
        case FeatureMode::CLF: return "clf";
        case FeatureMode::BOTH: return "both";
    }
    return "?";
}

inline FeatureMode feature_mode_from_name(const std::string& s) {
    if (s == "urlf") return FeatureMode::URLF;
    if (s == "clf") return FeatureMode::CLF;
    if (s == "both") return FeatureMode::BOTH;
    throw ConfigError(strfmt("unknown feature mode '%s'", s.c_str()));
}

struct FeatureConfig {
    FeatureMode mode = FeatureMode::BOTH;
    int ngram_min = 1;
    int ngram_max = 3;
    size_t max_features = 5000;
    size_t max_len = 200;
};

struct ExperimentConfig {
    // data
    std::string dataset_path;
    size_t synthetic_n = 0;  // > 0 generates instead of reading dataset_path
    double synthetic_difficulty = 0.0;
    std::string benign_alias = "benign";
    std::string phishing_alias = "phishing";
    // split
    double train_fraction = 0.70;
    bool stratified = true;
    // features
    FeatureConfig features;
    // phase 1
    int k = 10;
    std::vector<LearnerKind> learners = {
        LearnerKind::LinearSVM, LearnerKind::GaussianNB, LearnerKind::DecisionTree,
        LearnerKind::LogisticRegression, LearnerKind::KNN, LearnerKind::SMO};
    LearnerConfig learner_defaults;
    bool meta_per_learner_columns = false;
    // phase 2
    OptimizerConfig optimizer;
    TrainSchedule schedule;
    size_t lstm_hidden = 128;
    size_t lstm_embed_dim = 32;
    std::vector<size_t> lstm_head = {64, 16};
    // meta
    BoostParams boost;
    bool meta_include_urlf = false;
    // run
    uint64_t seed = 42;
    int jobs = 1;
    MseForm mse_form = MseForm::Mean;

    void validate() const {
        if (dataset_path.empty() && synthetic_n == 0)
            throw ConfigError("config: either data.dataset or data.synthetic must be set");
        if (train_fraction <= 0.0 || train_fraction >= 1.0)
            throw ConfigError("split.train_fraction must be in (0,1)");
        if (k < 3 || k > 10) throw ConfigError("k must be in 3..10");
        if (learners.empty()) throw ConfigError("phase1.learners must not be empty");
        if (features.ngram_min < 1 || features.ngram_max < features.ngram_min ||
            features.ngram_max > 6)
            throw ConfigError("features: need 1 <= ngram_min <= ngram_max <= 6");
        if (features.max_features == 0) throw ConfigError("features.max_features must be positive");
        if (features.max_len == 0) throw ConfigError("features.max_len must be positive");
        if (lstm_hidden == 0 || lstm_embed_dim == 0)
            throw ConfigError("phase2.hidden and phase2.embed_dim must be positive");
        if (jobs < 1) throw ConfigError("run.jobs must be >= 1");
        learner_defaults.validate();
        optimizer.validate();
        schedule.validate();
        boost.validate();
    }
};

// ---- structured text config: `[section]` + `key = value` lines -------------

using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

inline ConfigMap parse_config_text(std::istream& in) {
    ConfigMap out;
    std::string line, section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#' || sv.front() == ';') continue;
        if (sv.front() == '[') {
            if (sv.back() != ']')
                throw ConfigError(strfmt("config line %zu: unterminated section", line_no));
            section = std::string(sv.substr(1, sv.size() - 2));
            out[section];
            continue;
        }
        size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(strfmt("config line %zu: expected key = value", line_no));
        std::string key(trim(sv.substr(0, eq)));
        std::string value(trim(sv.substr(eq + 1)));
        if (key.empty()) throw ConfigError(strfmt("config line %zu: empty key", line_no));
        out[section][key] = value;
    }
    return out;
}

namespace detail {

struct ConfigReader {
    ConfigMap map;
    std::map<std::string, std::map<std::string, bool>> used;

    bool has(const std::string& sec, const std::string& key) {
        auto s = map.find(sec);
        return s != map.end() && s->second.count(key) > 0;
    }

    std::string get(const std::string& sec, const std::string& key, const std::string& dflt) {
        if (!has(sec, key)) return dflt;
        used[sec][key] = true;
        return map[sec][key];
    }

    double get_num(const std::string& sec, const std::string& key, double dflt) {
        if (!has(sec, key)) return dflt;
        used[sec][key] = true;
        const std::string& v = map[sec][key];
        try {
            size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw ConfigError(strfmt("config %s.%s: '%s' is not a number",
                                     sec.c_str(), key.c_str(), v.c_str()));
        }
    }

    long long get_int(const std::string& sec, const std::string& key, long long dflt) {
        double d = get_num(sec, key, static_cast<double>(dflt));
        long long i = static_cast<long long>(d);
        if (static_cast<double>(i) != d)
            throw ConfigError(strfmt("config %s.%s must be an integer", sec.c_str(), key.c_str()));
        return i;
    }

    bool get_bool(const std::string& sec, const std::string& key, bool dflt) {
        std::string v = get(sec, key, dflt ? "1" : "0");
        if (v == "1" || v == "true" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "no") return false;
        throw ConfigError(strfmt("config %s.%s: '%s' is not a boolean",
                                 sec.c_str(), key.c_str(), v.c_str()));
    }

    void reject_unknown() const {
        for (const auto& [sec, kv] : map)
            for (const auto& [key, value] : kv) {
                auto s = used.find(sec);
                if (s == used.end() || s->second.count(key) == 0)
                    throw ConfigError(strfmt("config: unknown key %s.%s",
                                             sec.c_str(), key.c_str()));
            }
    }
};

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t comma = s.find(',', pos);
        std::string item(trim(s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                       : comma - pos)));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig config_from_map(const ConfigMap& raw) {
    detail::ConfigReader r{raw, {}};
    ExperimentConfig c;

    c.dataset_path = r.get("data", "dataset", "");
    c.synthetic_n = static_cast<size_t>(r.get_int("data", "synthetic", 0));
    c.synthetic_difficulty = r.get_num("data", "difficulty", 0.0);
    c.benign_alias = r.get("data", "benign_alias", c.benign_alias);
    c.phishing_alias = r.get("data", "phishing_alias", c.phishing_alias);

    c.train_fraction = r.get_num("split", "train_fraction", c.train_fraction);
    c.stratified = r.get_bool("split", "stratified", c.stratified);

    c.features.mode = feature_mode_from_name(r.get("features", "mode", "both"));
    c.features.ngram_min = static_cast<int>(r.get_int("features", "ngram_min", 1));
    c.features.ngram_max = static_cast<int>(r.get_int("features", "ngram_max", 3));
    c.features.max_features = static_cast<size_t>(r.get_int("features", "max_features", 5000));
    c.features.max_len = static_cast<size_t>(r.get_int("features", "max_len", 200));

    c.k = static_cast<int>(r.get_int("phase1", "k", 10));
    if (r.has("phase1", "learners")) {
        c.learners.clear();
        for (const auto& name : detail::split_csv(r.get("phase1", "learners", "")))
            c.learners.push_back(learner_from_name(name));
    }
    c.learner_defaults.knn_k = static_cast<int>(r.get_int("phase1", "knn_k", 5));
    c.learner_defaults.tree_max_depth =
        static_cast<int>(r.get_int("phase1", "tree_max_depth", 10));
    c.learner_defaults.tree_min_leaf =
        static_cast<int>(r.get_int("phase1", "tree_min_leaf", 1));
    c.learner_defaults.gd_learning_rate = r.get_num("phase1", "gd_learning_rate", 0.5);
    c.learner_defaults.gd_epochs = static_cast<int>(r.get_int("phase1", "gd_epochs", 300));
    c.learner_defaults.gd_l2 = r.get_num("phase1", "gd_l2", 1e-4);
    c.learner_defaults.smo_c = r.get_num("phase1", "smo_c", 1.0);
    c.learner_defaults.smo_tol = r.get_num("phase1", "smo_tol", 1e-3);
    c.learner_defaults.smo_max_passes =
        static_cast<int>(r.get_int("phase1", "smo_max_passes", 5));
    c.meta_per_learner_columns = r.get_bool("phase1", "include_in_meta", false);

    c.optimizer.kind = optimizer_from_name(r.get("phase2", "optimizer", "adam"));
    c.optimizer.learning_rate = r.get_num("phase2", "learning_rate", 0.0);
    c.optimizer.epochs = static_cast<int>(r.get_int("phase2", "epochs", 0));
    c.lstm_hidden = static_cast<size_t>(r.get_int("phase2", "hidden", 128));
    c.lstm_embed_dim = static_cast<size_t>(r.get_int("phase2", "embed_dim", 32));
    if (r.has("phase2", "head")) {
        c.lstm_head.clear();
        for (const auto& h : detail::split_csv(r.get("phase2", "head", "")))
            c.lstm_head.push_back(std::stoull(h));
    }
    c.schedule.batch_size = static_cast<size_t>(r.get_int("phase2", "batch_size", 32));
    c.schedule.max_epochs = static_cast<int>(r.get_int("phase2", "max_epochs", 0));
    c.schedule.patience = static_cast<int>(r.get_int("phase2", "patience", 10));
    c.schedule.min_delta = r.get_num("phase2", "min_delta", 1e-4);
    c.schedule.dropout_rate = r.get_num("phase2", "dropout", 0.5);
    c.schedule.val_fraction = r.get_num("phase2", "val_fraction", 0.1);
    c.schedule.clip_norm = r.get_num("phase2", "clip_norm", 5.0);

    c.boost.rounds = static_cast<int>(r.get_int("meta", "rounds", 100));
    c.boost.learning_rate = r.get_num("meta", "eta", 0.1);
    c.boost.lambda = r.get_num("meta", "lambda", 1.0);
    c.boost.gamma = r.get_num("meta", "gamma", 0.0);
    c.boost.max_depth = static_cast<int>(r.get_int("meta", "max_depth", 3));
    c.boost.min_child_hessian = r.get_num("meta", "min_child_hessian", 1.0);
    c.meta_include_urlf = r.get_bool("meta", "include_urlf", false);
    c.learner_defaults.boost = c.boost;

    c.seed = static_cast<uint64_t>(r.get_int("run", "seed", 42));
    c.jobs = static_cast<int>(r.get_int("run", "jobs", 1));
    std::string mf = r.get("run", "mse_form", "mean");
    if (mf == "mean") c.mse_form = MseForm::Mean;
    else if (mf == "half-sum") c.mse_form = MseForm::HalfSum;
    else throw ConfigError("run.mse_form must be 'mean' or 'half-sum'");

    r.reject_unknown();
    c.schedule.seed = c.seed;
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(strfmt("cannot open config file '%s'", path.c_str()));
    ConfigMap m = parse_config_text(f);
    return config_from_map(m);
}

// Canonical rendering: every effective setting in fixed order; the config
// hash is the FNV-1a of this text.
inline std::string canonical_config_text(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "[data]\n";
    o << "dataset = " << c.dataset_path << '\n';
    o << "synthetic = " << c.synthetic_n << '\n';
    o << "difficulty = " << fmt_double(c.synthetic_difficulty) << '\n';
    o << "benign_alias = " << c.benign_alias << '\n';
    o << "phishing_alias = " << c.phishing_alias << '\n';
    o << "[split]\n";
    o << "train_fraction = " << fmt_double(c.train_fraction) << '\n';
    o << "stratified = " << (c.stratified ? 1 : 0) << '\n';
    o << "[features]\n";
    o << "mode = " << feature_mode_name(c.features.mode) << '\n';
    o << "ngram_min = " << c.features.ngram_min << '\n';
    o << "ngram_max = " << c.features.ngram_max << '\n';
    o << "max_features = " << c.features.max_features << '\n';
    o << "max_len = " << c.features.max_len << '\n';
    o << "[phase1]\n";
    o << "k = " << c.k << '\n';
    o << "learners = ";
    for (size_t i = 0; i < c.learners.size(); ++i)
        o << (i ? "," : "") << learner_name(c.learners[i]);
    o << '\n';
    o << "knn_k = " << c.learner_defaults.knn_k << '\n';
    o << "tree_max_depth = " << c.learner_defaults.tree_max_depth << '\n';
    o << "tree_min_leaf = " << c.learner_defaults.tree_min_leaf << '\n';
    o << "gd_learning_rate = " << fmt_double(c.learner_defaults.gd_learning_rate) << '\n';
    o << "gd_epochs = " << c.learner_defaults.gd_epochs << '\n';
    o << "gd_l2 = " << fmt_double(c.learner_defaults.gd_l2) << '\n';
    o << "smo_c = " << fmt_double(c.learner_defaults.smo_c) << '\n';
    o << "smo_tol = " << fmt_double(c.learner_defaults.smo_tol) << '\n';
    o << "smo_max_passes = " << c.learner_defaults.smo_max_passes << '\n';
    o << "include_in_meta = " << (c.meta_per_learner_columns ? 1 : 0) << '\n';
    o << "[phase2]\n";
    o << "optimizer = " << optimizer_name(c.optimizer.kind) << '\n';
    o << "learning_rate = " << fmt_double(c.optimizer.effective_lr()) << '\n';
    o << "epochs = " << c.optimizer.effective_epochs() << '\n';
    o << "hidden = " << c.lstm_hidden << '\n';
    o << "embed_dim = " << c.lstm_embed_dim << '\n';
    o << "head = ";
    for (size_t i = 0; i < c.lstm_head.size(); ++i) o << (i ? "," : "") << c.lstm_head[i];
    o << '\n';
    o << "batch_size = " << c.schedule.batch_size << '\n';
    o << "max_epochs = " << c.schedule.max_epochs << '\n';
    o << "patience = " << c.schedule.patience << '\n';
    o << "min_delta = " << fmt_double(c.schedule.min_delta) << '\n';
    o << "dropout = " << fmt_double(c.schedule.dropout_rate) << '\n';
    o << "val_fraction = " << fmt_double(c.schedule.val_fraction) << '\n';
    o << "clip_norm = " << fmt_double(c.schedule.clip_norm) << '\n';
    o << "[meta]\n";
    o << "rounds = " << c.boost.rounds << '\n';
    o << "eta = " << fmt_double(c.boost.learning_rate) << '\n';
    o << "lambda = " << fmt_double(c.boost.lambda) << '\n';
    o << "gamma = " << fmt_double(c.boost.gamma) << '\n';
    o << "max_depth = " << c.boost.max_depth << '\n';
    o << "min_child_hessian = " << fmt_double(c.boost.min_child_hessian) << '\n';
    o << "include_urlf = " << (c.meta_include_urlf ? 1 : 0) << '\n';
    o << "[run]\n";
    o << "seed = " << c.seed << '\n';
    o << "mse_form = " << (c.mse_form == MseForm::Mean ? "mean" : "half-sum") << '\n';
    return o.str();
}

// jobs intentionally excluded: parallelism may not change results
inline std::string config_hash(const ExperimentConfig& c) {
    return hash_hex(fnv1a64(canonical_config_text(c)));
}

}  // namespace antiphish
