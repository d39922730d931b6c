#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "antiphish/pipeline.hpp"

namespace antiphish {

namespace fs = std::filesystem;

// On-disk layout: <out>/<config-hash>/ holds every fitted artifact, metric
// table and PR dump of one run. `timings.tsv` is the only file allowed to
// differ between reruns of the same (config, seed).

namespace detail {

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw DataError(strfmt("cannot write '%s'", p.string().c_str()));
    return f;
}

inline std::ifstream open_in(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw DataError(strfmt("cannot open '%s'", p.string().c_str()));
    return f;
}

}  // namespace detail

inline void save_metric_report(const MetricReport& r, const fs::path& tsv_path,
                               const fs::path& json_path) {
    {
        auto out = detail::open_out(tsv_path);
        out << "metric\tvalue\n";
        out << "accuracy\t" << fmt_double(r.cls.accuracy) << '\n';
        out << "precision\t" << fmt_double(r.cls.precision) << '\n';
        out << "recall\t" << fmt_double(r.cls.recall) << '\n';
        out << "f_measure\t" << fmt_double(r.cls.f_measure) << '\n';
        out << "auc\t" << fmt_double(r.auc) << '\n';
        out << "mae\t" << fmt_double(r.mae_value) << '\n';
        out << "mse\t" << fmt_double(r.mse_value) << '\n';
        out << "tp\t" << r.cm.tp << '\n';
        out << "tn\t" << r.cm.tn << '\n';
        out << "fp\t" << r.cm.fp << '\n';
        out << "fn\t" << r.cm.fn << '\n';
        out << "degenerate\t" << (r.cls.degenerate ? 1 : 0) << '\n';
    }
    {
        nlohmann::json j;
        j["accuracy"] = r.cls.accuracy;
        j["precision"] = r.cls.precision;
        j["recall"] = r.cls.recall;
        j["f_measure"] = r.cls.f_measure;
        j["auc"] = r.auc;
        j["mae"] = r.mae_value;
        j["mse"] = r.mse_value;
        j["confusion"] = {{"tp", r.cm.tp}, {"tn", r.cm.tn}, {"fp", r.cm.fp}, {"fn", r.cm.fn}};
        j["degenerate"] = r.cls.degenerate;
        auto out = detail::open_out(json_path);
        out << j.dump(2) << '\n';
    }
}

inline MetricReport load_metric_report(const fs::path& json_path) {
    auto in = detail::open_in(json_path);
    nlohmann::json j;
    in >> j;
    MetricReport r;
    r.cls.accuracy = j.at("accuracy").get<double>();
    r.cls.precision = j.at("precision").get<double>();
    r.cls.recall = j.at("recall").get<double>();
    r.cls.f_measure = j.at("f_measure").get<double>();
    r.auc = j.at("auc").get<double>();
    r.mae_value = j.at("mae").get<double>();
    r.mse_value = j.at("mse").get<double>();
    r.cm.tp = j.at("confusion").at("tp").get<uint64_t>();
    r.cm.tn = j.at("confusion").at("tn").get<uint64_t>();
    r.cm.fp = j.at("confusion").at("fp").get<uint64_t>();
    r.cm.fn = j.at("confusion").at("fn").get<uint64_t>();
    r.cls.degenerate = j.at("degenerate").get<bool>();
    return r;
}

inline void save_pr_points(const std::vector<std::pair<double, double>>& points,
                           const fs::path& path) {
    auto out = detail::open_out(path);
    out << "recall\tprecision\n";
    for (const auto& [recall, precision] : points)
        out << fmt_double(recall) << '\t' << fmt_double(precision) << '\n';
}

// Returns the run directory <out>/<config-hash>/.
inline fs::path persist_artifacts(const RunArtifacts& art, const fs::path& out_dir) {
    fs::path dir = out_dir / art.config_hash;
    fs::create_directories(dir / "base_models");

    detail::open_out(dir / "hash.txt") << art.config_hash << '\n';
    detail::open_out(dir / "config.txt") << art.canonical_config;
    {
        auto f = detail::open_out(dir / "dataset_train.csv");
        save_dataset(art.train, f);
    }
    {
        auto f = detail::open_out(dir / "dataset_test.csv");
        save_dataset(art.test, f);
    }
    {
        auto f = detail::open_out(dir / "token_table.tsv");
        save_token_table(art.featurizers.token_table, f);
    }
    {
        auto f = detail::open_out(dir / "urlf_scaler.tsv");
        art.featurizers.urlf_scaler.save(f);
    }
    if (art.featurizers.cfg.mode != FeatureMode::URLF) {
        auto f = detail::open_out(dir / "tfidf_vocab.tsv");
        save_vocabulary(art.featurizers.vocab, f);
    }
    {
        auto f = detail::open_out(dir / "oof_matrix.tsv");
        save_oof_matrix(art.oof, f);
    }
    for (size_t i = 0; i < art.base_models.size(); ++i) {
        auto f = detail::open_out(dir / "base_models" / (art.base_names[i] + ".txt"));
        art.base_models[i]->save(f);
    }
    for (size_t l = 0; l < art.lstms.size(); ++l) {
        const std::string& tag = art.premier_names[l];
        save_lstm(art.lstms[l].params, (dir / ("lstm_" + tag + ".bin")).string(),
                  (dir / ("lstm_" + tag + ".manifest.tsv")).string(), art.config_hash);
        auto f = detail::open_out(dir / ("train_log_" + tag + ".tsv"));
        save_train_log(art.lstms[l].log, f);
    }
    {
        auto f = detail::open_out(dir / "meta_ensemble.txt");
        save_ensemble(art.ensemble, f);
    }

    save_metric_report(art.reports.phase1_test, dir / "metrics_phase1.tsv",
                       dir / "metrics_phase1.json");
    save_pr_points(art.reports.phase1_test.pr_points, dir / "pr_points_phase1.tsv");
    for (const auto& [tag, report] : art.reports.phase2_test) {
        save_metric_report(report, dir / ("metrics_phase2_" + tag + ".tsv"),
                           dir / ("metrics_phase2_" + tag + ".json"));
        save_pr_points(report.pr_points, dir / ("pr_points_phase2_" + tag + ".tsv"));
    }
    save_metric_report(art.reports.final_test, dir / "metrics_final.tsv",
                       dir / "metrics_final.json");
    save_metric_report(art.reports.final_train, dir / "metrics_final_train.tsv",
                       dir / "metrics_final_train.json");
    save_pr_points(art.reports.final_test.pr_points, dir / "pr_points_final.tsv");

    {
        auto f = detail::open_out(dir / "predictions_test.tsv");
        for (size_t i = 0; i < art.test.size(); ++i)
            f << art.test.records[i].normalized << '\t'
              << fmt_double(art.test_prediction.probability[i]) << '\t'
              << art.test_prediction.label[i] << '\n';
    }
    {
        auto f = detail::open_out(dir / "audit.txt");
        art.audit.save(f);
        f << "oof_audit\t" << (art.oof_audit.passed ? "pass" : "FAIL") << '\n';
        for (const auto& v : art.oof_audit.violations) f << "oof_violation\t" << v << '\n';
    }
    {
        auto f = detail::open_out(dir / "timings.tsv");
        f << "stage\tseconds\n";
        double train_total = 0.0, test_total = 0.0;
        for (const auto& [stage, sec] : art.timings) {
            f << stage << '\t' << fmt_double(sec) << '\n';
            if (stage.rfind("train:", 0) == 0) train_total += sec;
            if (stage.rfind("test:", 0) == 0) test_total += sec;
        }
        f << "total_train\t" << fmt_double(train_total) << '\n';
        f << "total_test\t" << fmt_double(test_total) << '\n';
    }
    return dir;
}

// ---- loading a persisted run for predict/evaluate ---------------------------

struct LoadedArtifacts {
    std::string hash;
    ExperimentConfig cfg;
    Featurizers featurizers;
    std::vector<std::string> base_names;
    std::vector<ModelPtr> base_models;
    std::vector<std::string> premier_names;
    std::vector<LstmParams> lstms;
    BoostedEnsemble ensemble;
};

inline LoadedArtifacts load_artifacts(const fs::path& dir) {
    if (!fs::exists(dir / "config.txt"))
        throw DataError(strfmt("no artifacts at '%s'", dir.string().c_str()));
    LoadedArtifacts la;
    {
        auto f = detail::open_in(dir / "config.txt");
        ConfigMap m = parse_config_text(f);
        la.cfg = config_from_map(m);
    }
    {
        auto f = detail::open_in(dir / "hash.txt");
        f >> la.hash;
    }
    if (la.hash != config_hash(la.cfg))
        throw SchemaMismatch("hash.txt does not match config.txt");

    la.featurizers.cfg = la.cfg.features;
    {
        auto f = detail::open_in(dir / "token_table.tsv");
        la.featurizers.token_table = load_token_table(f);
    }
    {
        auto f = detail::open_in(dir / "urlf_scaler.tsv");
        la.featurizers.urlf_scaler = MinMaxScaler::load(f);
    }
    if (la.cfg.features.mode != FeatureMode::URLF) {
        auto f = detail::open_in(dir / "tfidf_vocab.tsv");
        la.featurizers.vocab = load_vocabulary(f);
    }
    la.featurizers.charmap = default_charmap();

    for (LearnerKind kind : la.cfg.learners) {
        auto f = detail::open_in(dir / "base_models" / (std::string(learner_name(kind)) + ".txt"));
        la.base_names.push_back(learner_name(kind));
        la.base_models.push_back(load_base_model(f));
    }

    std::vector<std::string> tags;
    switch (la.cfg.features.mode) {
        case FeatureMode::URLF: tags = {"premier"}; break;
        case FeatureMode::CLF: tags = {"premier"}; break;
        case FeatureMode::BOTH: tags = {"premier_clf", "premier_urlf"}; break;
    }
    for (const auto& tag : tags) {
        fs::path man = dir / ("lstm_" + tag + ".manifest.tsv");
        fs::path bin = dir / ("lstm_" + tag + ".bin");
        // cross-check the stamp: artifacts from another run must not mix
        {
            auto f = detail::open_in(man);
            std::string line;
            std::string stamp;
            while (std::getline(f, line))
                if (line.rfind("config_hash\t", 0) == 0) stamp = line.substr(12);
            if (stamp != la.hash)
                throw SchemaMismatch(strfmt("lstm '%s' was trained under config %s, not %s",
                                            tag.c_str(), stamp.c_str(), la.hash.c_str()));
        }
        la.premier_names.push_back(tag);
        la.lstms.push_back(load_lstm(bin.string(), man.string()));
    }
    {
        auto f = detail::open_in(dir / "meta_ensemble.txt");
        la.ensemble = load_ensemble(f);
    }
    return la;
}

// Full prediction path for new URLs: featurize, base mean, premier, meta.
inline FinalPrediction predict_urls(const LoadedArtifacts& la,
                                    const std::vector<std::string>& raw_urls) {
    Dataset ds;
    for (const auto& u : raw_urls) ds.records.push_back({u, normalize_url(u), 0, "cli"});
    ds.recount();
    FeatureBundle features = featurize(ds, la.featurizers);

    Matrix base_probs(ds.size(), la.base_models.size());
    for (size_t c = 0; c < la.base_models.size(); ++c) {
        Vec p = la.base_models[c]->predict_proba(features.X);
        for (size_t r = 0; r < p.size(); ++r) base_probs(r, c) = p[r];
    }
    Vec mean(ds.size(), 0.0);
    for (size_t r = 0; r < ds.size(); ++r) {
        double s = 0.0;
        for (size_t c = 0; c < la.base_models.size(); ++c) s += base_probs(r, c);
        mean[r] = s / static_cast<double>(la.base_models.size());
    }
    std::vector<Vec> premier(la.lstms.size());
    for (size_t l = 0; l < la.lstms.size(); ++l) {
        Phase2Data data;
        if (la.lstms[l].arch.char_mode) data.seqs = &features.char_seqs;
        else data.numeric = &features.urlf_scaled;
        premier[l] = premier_prediction(la.lstms[l], data);
    }

    // reassemble meta columns by schema name
    Matrix meta(ds.size(), la.ensemble.schema.size());
    for (size_t c = 0; c < la.ensemble.schema.size(); ++c) {
        const std::string& name = la.ensemble.schema[c];
        Vec col;
        if (name == "mean") {
            col = mean;
        } else if (name.rfind("base_", 0) == 0) {
            std::string base = name.substr(5);
            bool found = false;
            for (size_t b = 0; b < la.base_names.size(); ++b)
                if (la.base_names[b] == base) {
                    col.resize(ds.size());
                    for (size_t r = 0; r < ds.size(); ++r) col[r] = base_probs(r, b);
                    found = true;
                }
            if (!found) throw SchemaMismatch(strfmt("no base model for column '%s'",
                                                    name.c_str()));
        } else if (name.rfind("premier", 0) == 0) {
            bool found = false;
            for (size_t l = 0; l < la.premier_names.size(); ++l)
                if (la.premier_names[l] == name) {
                    col = premier[l];
                    found = true;
                }
            if (!found) throw SchemaMismatch(strfmt("no LSTM for column '%s'", name.c_str()));
        } else if (name.rfind("urlf_", 0) == 0) {
            std::string field = name.substr(5);
            const auto& names = UrlfVector::field_names();
            bool found = false;
            for (size_t j = 0; j < names.size(); ++j)
                if (field == names[j]) {
                    col.resize(ds.size());
                    for (size_t r = 0; r < ds.size(); ++r) col[r] = features.urlf_scaled(r, j);
                    found = true;
                }
            if (!found) throw SchemaMismatch(strfmt("unknown urlf column '%s'", name.c_str()));
        } else {
            throw SchemaMismatch(strfmt("unknown meta column '%s'", name.c_str()));
        }
        for (size_t r = 0; r < ds.size(); ++r) meta(r, c) = col[r];
    }
    return final_predict(la.ensemble, meta);
}

}  // namespace antiphish
