#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/config.hpp"
#include "antiphish/corpus.hpp"
#include "antiphish/learners.hpp"
#include "antiphish/lstm_train.hpp"
#include "antiphish/meta_boost.hpp"
#include "antiphish/metrics.hpp"
#include "antiphish/stacking.hpp"
#include "antiphish/synthetic.hpp"
#include "antiphish/tfidf.hpp"
#include "antiphish/urlf.hpp"

namespace antiphish {

// ---- train/test firewall audit ----------------------------------------------
//
// Every stage registers itself with a fit/non-fit flag; the test partition is
// only reachable through a guard that logs each access. A clean audit proves
// no featurizer or model fitting stage ever observed a test record.

class StageAudit {
public:
    struct Access {
        std::string stage;
        std::string partition;
        bool fit_stage = false;
    };

    void begin_stage(const std::string& name, bool is_fit) {
        stage_ = name;
        fit_ = is_fit;
        stages_.emplace_back(name, is_fit);
    }

    void record_access(const std::string& partition) {
        accesses_.push_back({stage_, partition, fit_});
        if (partition == "test" && fit_)
            violations_.push_back(strfmt("test partition accessed during fit stage '%s'",
                                         stage_.c_str()));
    }

    bool passed() const { return violations_.empty(); }
    const std::vector<std::string>& violations() const { return violations_; }
    const std::vector<Access>& accesses() const { return accesses_; }

    void save(std::ostream& out) const {
        out << "firewall_audit\t" << (passed() ? "pass" : "FAIL") << '\n';
        for (const auto& [name, fit] : stages_)
            out << "stage\t" << name << '\t' << (fit ? "fit" : "transform") << '\n';
        for (const auto& a : accesses_)
            out << "access\t" << a.partition << '\t' << a.stage << '\t'
                << (a.fit_stage ? "fit" : "transform") << '\n';
        for (const auto& v : violations_) out << "violation\t" << v << '\n';
    }

private:
    std::string stage_ = "init";
    bool fit_ = false;
    std::vector<std::pair<std::string, bool>> stages_;
    std::vector<Access> accesses_;
    std::vector<std::string> violations_;
};

struct GuardedDataset {
    const Dataset* ds = nullptr;
    StageAudit* audit = nullptr;
    std::string partition;

    const Dataset& get() const {
        audit->record_access(partition);
        return *ds;
    }
};

// ---- featurization -----------------------------------------------------------

struct Featurizers {
    FeatureConfig cfg;
    TokenTable token_table;
    MinMaxScaler urlf_scaler;
    TfidfVocabulary vocab;
    CharMap charmap;
};

struct FeatureBundle {
    Matrix X;            // base-learner matrix per the feature mode
    Matrix urlf_scaled;  // always present: 9 scaled lexical columns
    std::vector<std::vector<int>> char_seqs;  // CLF/BOTH modes
};

namespace detail {

inline Matrix urlf_matrix(const Dataset& ds, const TokenTable& table) {
    Matrix X(ds.size(), UrlfVector::kArity);
    for (size_t r = 0; r < ds.size(); ++r) {
        auto v = extract_urlf(ds.records[r].raw, ds.records[r].normalized, table).as_array();
        std::copy(v.begin(), v.end(), X.row(r));
    }
    return X;
}

inline Matrix clf_matrix(const Dataset& ds, const TfidfVocabulary& vocab) {
    Matrix X(ds.size(), vocab.n_columns());
    for (size_t r = 0; r < ds.size(); ++r)
        for (const auto& [col, w] : transform(ds.records[r].normalized, vocab))
            X(r, col) = w;
    return X;
}

}  // namespace detail

inline Featurizers fit_featurizers(const Dataset& train, const FeatureConfig& cfg) {
    Featurizers f;
    f.cfg = cfg;
    std::vector<std::string> corpus;
    corpus.reserve(train.size());
    for (const auto& r : train.records) corpus.push_back(r.normalized);
    f.token_table = build_token_table(corpus);
    Matrix urlf = detail::urlf_matrix(train, f.token_table);
    f.urlf_scaler.fit(urlf);
    if (cfg.mode != FeatureMode::URLF)
        f.vocab = fit_vocabulary(corpus, cfg.ngram_min, cfg.ngram_max, cfg.max_features);
    f.charmap = default_charmap();
    return f;
}

inline FeatureBundle featurize(const Dataset& ds, const Featurizers& f) {
    FeatureBundle b;
    b.urlf_scaled = detail::urlf_matrix(ds, f.token_table);
    f.urlf_scaler.apply(b.urlf_scaled);
    Matrix clf;
    if (f.cfg.mode != FeatureMode::URLF) {
        clf = detail::clf_matrix(ds, f.vocab);
        b.char_seqs.reserve(ds.size());
        for (const auto& r : ds.records)
            b.char_seqs.push_back(to_sequence(r.normalized, f.charmap, f.cfg.max_len));
    }
    switch (f.cfg.mode) {
        case FeatureMode::URLF:
            b.X = b.urlf_scaled;
            break;
        case FeatureMode::CLF:
            b.X = std::move(clf);
            break;
        case FeatureMode::BOTH: {
            b.X = Matrix(ds.size(), b.urlf_scaled.cols + clf.cols);
            for (size_t r = 0; r < ds.size(); ++r) {
                std::copy_n(b.urlf_scaled.row(r), b.urlf_scaled.cols, b.X.row(r));
                std::copy_n(clf.row(r), clf.cols, b.X.row(r) + b.urlf_scaled.cols);
            }
            break;
        }
    }
    return b;
}

// ---- experiment run -----------------------------------------------------------

struct PhaseReports {
    MetricReport phase1_test;  // thresholded mean prediction
    std::vector<std::pair<std::string, MetricReport>> phase2_test;  // per LSTM
    MetricReport final_train;
    MetricReport final_test;
};

struct RunArtifacts {
    std::string config_hash;
    std::string canonical_config;
    uint64_t seed = 0;
    Dataset train, test;
    Featurizers featurizers;
    OofMatrix oof;
    Vec mean_train, mean_test;
    std::vector<std::string> base_names;
    std::vector<ModelPtr> base_models;  // full-train refits
    Matrix base_test_probs;
    std::vector<std::string> premier_names;
    std::vector<Phase2Result> lstms;
    std::vector<Vec> premier_train, premier_test;
    std::vector<std::string> meta_schema;
    BoostedEnsemble ensemble;
    FinalPrediction test_prediction;
    PhaseReports reports;
    StageAudit audit;
    OofAuditResult oof_audit;
    std::map<std::string, double> timings;  // seconds, reported never asserted
};

namespace detail {

class StageTimer {
public:
    StageTimer(std::map<std::string, double>& sink, std::string key)
        : sink_(sink), key_(std::move(key)),
          start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        auto end = std::chrono::steady_clock::now();
        sink_[key_] += std::chrono::duration<double>(end - start_).count();
    }

private:
    std::map<std::string, double>& sink_;
    std::string key_;
    std::chrono::steady_clock::time_point start_;
};

inline std::vector<LearnerConfig> learner_configs(const ExperimentConfig& cfg) {
    std::vector<LearnerConfig> out;
    for (LearnerKind kind : cfg.learners) {
        LearnerConfig lc = cfg.learner_defaults;
        lc.kind = kind;
        out.push_back(lc);
    }
    return out;
}

inline LstmArch lstm_arch_for(const ExperimentConfig& cfg, bool char_mode) {
    LstmArch arch;
    arch.char_mode = char_mode;
    arch.alphabet_size = default_charmap().alphabet_size;
    arch.embed_dim = cfg.lstm_embed_dim;
    arch.hidden = cfg.lstm_hidden;
    arch.head_sizes = cfg.lstm_head;
    arch.max_len = char_mode ? cfg.features.max_len : UrlfVector::kArity;
    return arch;
}

}  // namespace detail

inline RunArtifacts run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunArtifacts art;
    art.config_hash = config_hash(cfg);
    art.canonical_config = canonical_config_text(cfg);
    art.seed = cfg.seed;
    log_info(strfmt("config hash %s", art.config_hash.c_str()));

    // stage: data
    Dataset full;
    {
        detail::StageTimer t(art.timings, "data");
        if (cfg.synthetic_n > 0) {
            SyntheticSpec spec;
            spec.n = cfg.synthetic_n;
            spec.seed = derive_seed(cfg.seed, "synthetic");
            spec.difficulty = cfg.synthetic_difficulty;
            full = generate_synthetic(spec);
        } else {
            IngestSchema schema{cfg.benign_alias, cfg.phishing_alias};
            full = load_dataset(cfg.dataset_path, schema);
        }
        SplitSpec split_spec{cfg.train_fraction, derive_seed(cfg.seed, "split"),
                             cfg.stratified};
        auto [train, test] = split(full, split_spec);
        art.train = std::move(train);
        art.test = std::move(test);
    }
    GuardedDataset train_g{&art.train, &art.audit, "train"};
    GuardedDataset test_g{&art.test, &art.audit, "test"};

    // stage: fit featurizers (train only)
    FeatureBundle train_features;
    {
        detail::StageTimer t(art.timings, "train:featurizers");
        art.audit.begin_stage("fit-featurizers", true);
        art.featurizers = fit_featurizers(train_g.get(), cfg.features);
        art.audit.begin_stage("featurize-train", false);
        train_features = featurize(train_g.get(), art.featurizers);
    }
    std::vector<int> y_train(art.train.size()), y_test(art.test.size());
    for (size_t i = 0; i < art.train.size(); ++i) y_train[i] = art.train.records[i].label;
    for (size_t i = 0; i < art.test.size(); ++i) y_test[i] = art.test.records[i].label;

    // stage: Phase I out-of-fold stacking
    const auto learner_cfgs = detail::learner_configs(cfg);
    {
        detail::StageTimer t(art.timings, "train:phase1-oof");
        art.audit.begin_stage("phase1-oof", true);
        FoldPlan plan = make_fold_plan(art.train.size(), cfg.k,
                                       derive_seed(cfg.seed, "folds"));
        art.oof = kfold_oof(train_features.X, y_train, plan, learner_cfgs, cfg.jobs);
        art.mean_train = mean_prediction(art.oof);
        art.oof_audit = audit_oof(art.oof);
    }

    // stage: Phase I full-train refits (for test-side prediction)
    {
        detail::StageTimer t(art.timings, "train:phase1-refit");
        art.audit.begin_stage("phase1-refit", true);
        for (const auto& lc : learner_cfgs) {
            uint64_t seed = derive_seed(cfg.seed, strfmt("refit:%s", learner_name(lc.kind)));
            art.base_names.push_back(learner_name(lc.kind));
            art.base_models.push_back(train_base(lc, train_features.X, y_train, seed));
        }
    }

    // stage: Phase II LSTM training (per feature set)
    {
        detail::StageTimer t(art.timings, "train:phase2");
        art.audit.begin_stage("phase2-train", true);
        auto train_lstm = [&](bool char_mode, const std::string& tag) {
            Phase2Data data;
            if (char_mode) data.seqs = &train_features.char_seqs;
            else data.numeric = &train_features.urlf_scaled;
            TrainSchedule sched = cfg.schedule;
            sched.seed = derive_seed(cfg.seed, strfmt("phase2:%s", tag.c_str()));
            Phase2Result res = train_phase2(data, y_train,
                                            detail::lstm_arch_for(cfg, char_mode),
                                            cfg.optimizer, sched);
            art.premier_names.push_back(tag);
            art.premier_train.push_back(premier_prediction(res.params, data));
            art.lstms.push_back(std::move(res));
        };
        switch (cfg.features.mode) {
            case FeatureMode::URLF: train_lstm(false, "premier"); break;
            case FeatureMode::CLF: train_lstm(true, "premier"); break;
            case FeatureMode::BOTH:
                train_lstm(true, "premier_clf");
                train_lstm(false, "premier_urlf");
                break;
        }
    }

    // all fitting except the meta level is done; test features may now exist
    FeatureBundle test_features;
    {
        detail::StageTimer t(art.timings, "test:featurize");
        art.audit.begin_stage("featurize-test", false);
        test_features = featurize(test_g.get(), art.featurizers);
    }
    {
        detail::StageTimer t(art.timings, "test:phase1-predict");
        art.audit.begin_stage("phase1-test-predict", false);
        art.base_test_probs = Matrix(art.test.size(), art.base_models.size());
        for (size_t c = 0; c < art.base_models.size(); ++c) {
            Vec p = art.base_models[c]->predict_proba(test_features.X);
            for (size_t r = 0; r < p.size(); ++r) art.base_test_probs(r, c) = p[r];
        }
        art.mean_test.assign(art.test.size(), 0.0);
        for (size_t r = 0; r < art.test.size(); ++r) {
            double s = 0.0;
            for (size_t c = 0; c < art.base_models.size(); ++c)
                s += art.base_test_probs(r, c);
            art.mean_test[r] = s / static_cast<double>(art.base_models.size());
        }
    }
    {
        detail::StageTimer t(art.timings, "test:phase2-predict");
        art.audit.begin_stage("phase2-test-predict", false);
        for (size_t l = 0; l < art.lstms.size(); ++l) {
            Phase2Data data;
            if (art.lstms[l].params.arch.char_mode) data.seqs = &test_features.char_seqs;
            else data.numeric = &test_features.urlf_scaled;
            art.premier_test.push_back(premier_prediction(art.lstms[l].params, data));
        }
    }

    // stage: meta-estimator fit on the training rows (OOF mean + premier)
    {
        detail::StageTimer t(art.timings, "train:meta");
        art.audit.begin_stage("meta-fit", true);
        std::vector<std::pair<std::string, Vec>> cols;
        if (cfg.meta_per_learner_columns)
            for (size_t c = 0; c < art.oof.probs.cols; ++c) {
                Vec col(art.oof.probs.rows);
                for (size_t r = 0; r < col.size(); ++r) col[r] = art.oof.probs(r, c);
                cols.emplace_back("base_" + art.oof.learner_names[c], std::move(col));
            }
        for (size_t l = 0; l < art.premier_names.size(); ++l)
            cols.emplace_back(art.premier_names[l], art.premier_train[l]);
        if (cfg.meta_include_urlf)
            for (size_t c = 0; c < train_features.urlf_scaled.cols; ++c) {
                Vec col(train_features.urlf_scaled.rows);
                for (size_t r = 0; r < col.size(); ++r)
                    col[r] = train_features.urlf_scaled(r, c);
                cols.emplace_back(std::string("urlf_") + UrlfVector::field_names()[c],
                                  std::move(col));
            }
        Matrix meta_train = assemble_meta_features(art.mean_train, cols, &art.meta_schema);
        art.ensemble = boost_fit(meta_train, y_train, cfg.boost, art.meta_schema);
    }

    // stage: final prediction + metrics
    {
        detail::StageTimer t(art.timings, "test:final");
        art.audit.begin_stage("final-predict", false);
        std::vector<std::pair<std::string, Vec>> cols;
        if (cfg.meta_per_learner_columns)
            for (size_t c = 0; c < art.base_test_probs.cols; ++c) {
                Vec col(art.base_test_probs.rows);
                for (size_t r = 0; r < col.size(); ++r) col[r] = art.base_test_probs(r, c);
                cols.emplace_back("base_" + art.base_names[c], std::move(col));
            }
        for (size_t l = 0; l < art.premier_names.size(); ++l)
            cols.emplace_back(art.premier_names[l], art.premier_test[l]);
        if (cfg.meta_include_urlf)
            for (size_t c = 0; c < test_features.urlf_scaled.cols; ++c) {
                Vec col(test_features.urlf_scaled.rows);
                for (size_t r = 0; r < col.size(); ++r)
                    col[r] = test_features.urlf_scaled(r, c);
                cols.emplace_back(std::string("urlf_") + UrlfVector::field_names()[c],
                                  std::move(col));
            }
        Matrix meta_test = assemble_meta_features(art.mean_test, cols);
        art.test_prediction = final_predict(art.ensemble, meta_test);

        art.audit.begin_stage("metrics", false);
        art.reports.phase1_test = evaluate_scores(y_test, art.mean_test, cfg.mse_form);
        for (size_t l = 0; l < art.premier_names.size(); ++l)
            art.reports.phase2_test.emplace_back(
                art.premier_names[l],
                evaluate_scores(y_test, art.premier_test[l], cfg.mse_form));
        art.reports.final_test =
            evaluate_scores(y_test, art.test_prediction.probability, cfg.mse_form);
        // train-side final report from the meta model's own training rows
        std::vector<std::pair<std::string, Vec>> train_cols;
        if (cfg.meta_per_learner_columns)
            for (size_t c = 0; c < art.oof.probs.cols; ++c) {
                Vec col(art.oof.probs.rows);
                for (size_t r = 0; r < col.size(); ++r) col[r] = art.oof.probs(r, c);
                train_cols.emplace_back("base_" + art.oof.learner_names[c], std::move(col));
            }
        for (size_t l = 0; l < art.premier_names.size(); ++l)
            train_cols.emplace_back(art.premier_names[l], art.premier_train[l]);
        if (cfg.meta_include_urlf)
            for (size_t c = 0; c < train_features.urlf_scaled.cols; ++c) {
                Vec col(train_features.urlf_scaled.rows);
                for (size_t r = 0; r < col.size(); ++r)
                    col[r] = train_features.urlf_scaled(r, c);
                train_cols.emplace_back(std::string("urlf_") + UrlfVector::field_names()[c],
                                        std::move(col));
            }
        Matrix meta_train = assemble_meta_features(art.mean_train, train_cols);
        FinalPrediction train_pred = final_predict(art.ensemble, meta_train);
        art.reports.final_train =
            evaluate_scores(y_train, train_pred.probability, cfg.mse_form);
    }

    if (!art.oof_audit.passed)
        throw DataError("stacking audit failed: " + (art.oof_audit.violations.empty()
                                                         ? std::string("unknown")
                                                         : art.oof_audit.violations[0]));
    if (!art.audit.passed())
        throw DataError("train/test firewall audit failed: " + art.audit.violations()[0]);
    return art;
}

}  // namespace antiphish
