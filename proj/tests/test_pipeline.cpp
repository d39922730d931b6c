#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "antiphish/artifacts.hpp"
#include "antiphish/config.hpp"
#include "antiphish/pipeline.hpp"
#include "antiphish/synthetic.hpp"

using namespace antiphish;
namespace fs = std::filesystem;

namespace {

// small, fast settings shared by the pipeline tests
ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.synthetic_n = 240;
    cfg.synthetic_difficulty = 0.0;
    cfg.features.mode = FeatureMode::URLF;
    cfg.k = 4;
    cfg.learners = {LearnerKind::LogisticRegression, LearnerKind::GaussianNB,
                    LearnerKind::DecisionTree};
    cfg.learner_defaults.gd_epochs = 120;
    cfg.lstm_hidden = 10;
    cfg.lstm_embed_dim = 4;
    cfg.lstm_head = {6};
    cfg.optimizer.kind = OptimizerKind::Adam;
    cfg.optimizer.learning_rate = 0.02;
    cfg.optimizer.epochs = 12;
    cfg.schedule.patience = 12;
    cfg.schedule.dropout_rate = 0.2;
    cfg.boost.rounds = 30;
    cfg.seed = 11;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("synthetic generator: balance, determinism, separability") {
    SyntheticSpec spec;
    spec.n = 2000;
    spec.seed = 5;
    Dataset ds = generate_synthetic(spec);
    CHECK(ds.size() == 2000);
    CHECK(ds.benign_count >= 960);
    CHECK(ds.benign_count <= 1040);
    CHECK(ds.phishing_count >= 960);
    CHECK(ds.phishing_count <= 1040);

    Dataset again = generate_synthetic(spec);
    REQUIRE(again.size() == ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(again.records[i].raw == ds.records[i].raw);
        CHECK(again.records[i].label == ds.records[i].label);
    }

    // difficulty 0 is separable by the overt lexical traits alone
    TokenTable table = build_token_table({"x.com"});
    for (const auto& r : ds.records) {
        UrlfVector v = extract_urlf(r.raw, r.normalized, table);
        bool overt = v.has_ip || v.has_at || r.normalized.size() > 60;
        CHECK(overt == (r.label == 1));
    }

    CHECK_THROWS_AS(generate_synthetic({10, 1, 0.0}), ConfigError);
}

TEST_CASE("config file parsing, overrides and strictness") {
    std::istringstream in(
        "# experiment\n"
        "[data]\n"
        "synthetic = 100\n"
        "[features]\n"
        "mode = urlf\n"
        "[phase1]\n"
        "k = 5\n"
        "learners = knn, gaussian_nb\n"
        "[phase2]\n"
        "optimizer = sgd\n"
        "learning_rate = 0.05\n"
        "[run]\n"
        "seed = 9\n");
    ExperimentConfig cfg = config_from_map(parse_config_text(in));
    CHECK(cfg.synthetic_n == 100);
    CHECK(cfg.features.mode == FeatureMode::URLF);
    CHECK(cfg.k == 5);
    REQUIRE(cfg.learners.size() == 2);
    CHECK(cfg.learners[0] == LearnerKind::KNN);
    CHECK(cfg.optimizer.kind == OptimizerKind::SGD);
    CHECK(cfg.seed == 9);
    CHECK(cfg.schedule.seed == 9);

    std::istringstream unknown("[data]\nsynthetic = 100\n[phase1]\nbogus_key = 1\n");
    CHECK_THROWS_AS(config_from_map(parse_config_text(unknown)), ConfigError);

    std::istringstream bad_k("[data]\nsynthetic = 100\n[phase1]\nk = 2\n");
    CHECK_THROWS_WITH(config_from_map(parse_config_text(bad_k)),
                      Catch::Matchers::ContainsSubstring("3..10"));

    std::istringstream no_data("[features]\nmode = urlf\n");
    CHECK_THROWS_AS(config_from_map(parse_config_text(no_data)), ConfigError);
}

TEST_CASE("canonical config text and hash round-trip") {
    ExperimentConfig cfg = small_config();
    std::string canon = canonical_config_text(cfg);
    std::istringstream in(canon);
    ExperimentConfig back = config_from_map(parse_config_text(in));
    CHECK(canonical_config_text(back) == canon);
    CHECK(config_hash(back) == config_hash(cfg));

    ExperimentConfig other = cfg;
    other.seed = cfg.seed + 1;
    CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("run_experiment on a separable corpus: accuracy, audits, firewall") {
    ExperimentConfig cfg = small_config();
    RunArtifacts art = run_experiment(cfg);

    CHECK(art.reports.final_test.cls.accuracy >= 0.95);
    CHECK(art.oof_audit.passed);
    CHECK(art.audit.passed());

    // every fit stage access targeted the train partition
    bool saw_test_transform = false;
    for (const auto& a : art.audit.accesses()) {
        if (a.fit_stage) CHECK(a.partition == "train");
        if (a.partition == "test" && !a.fit_stage) saw_test_transform = true;
    }
    CHECK(saw_test_transform);

    // meta schema: mean + premier for single-set mode
    REQUIRE(art.meta_schema == std::vector<std::string>{"mean", "premier"});
    CHECK(art.ensemble.schema == art.meta_schema);

    // provenance: every oof entry in range, fold ids present
    CHECK(art.oof.probs.rows == art.train.size());
    CHECK(art.mean_train.size() == art.train.size());
    CHECK(art.mean_test.size() == art.test.size());
}

TEST_CASE("the firewall flags a deliberate violation") {
    StageAudit audit;
    Dataset test;
    test.records.push_back({"x", "x.com", 0, "t"});
    test.recount();
    GuardedDataset guard{&test, &audit, "test"};
    audit.begin_stage("fit-featurizers", true);
    (void)guard.get();
    CHECK_FALSE(audit.passed());
    REQUIRE(audit.violations().size() == 1);
}

TEST_CASE("both-mode run emits two premier columns") {
    ExperimentConfig cfg = small_config();
    cfg.synthetic_n = 160;
    cfg.features.mode = FeatureMode::BOTH;
    cfg.features.ngram_max = 2;
    cfg.features.max_features = 120;
    cfg.features.max_len = 50;
    cfg.optimizer.epochs = 4;
    cfg.boost.rounds = 15;
    RunArtifacts art = run_experiment(cfg);
    REQUIRE(art.premier_names ==
            std::vector<std::string>{"premier_clf", "premier_urlf"});
    CHECK(art.meta_schema ==
          std::vector<std::string>{"mean", "premier_clf", "premier_urlf"});
    CHECK(art.reports.phase2_test.size() == 2);
}

TEST_CASE("persisted artifacts are byte-identical across reruns, timings aside") {
    ExperimentConfig cfg = small_config();
    cfg.synthetic_n = 120;
    cfg.optimizer.epochs = 6;

    fs::path tmp = fs::temp_directory_path() / "antiphish_det_test";
    fs::remove_all(tmp);
    RunArtifacts a = run_experiment(cfg);
    RunArtifacts b = run_experiment(cfg);
    fs::path da = persist_artifacts(a, tmp / "a");
    fs::path db = persist_artifacts(b, tmp / "b");

    size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(da)) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), da);
        if (rel.filename() == "timings.tsv") continue;
        INFO(rel.string());
        CHECK(slurp(entry.path()) == slurp(db / rel));
        ++compared;
    }
    CHECK(compared >= 15);
    fs::remove_all(tmp);
}

TEST_CASE("artifacts reload into a working predictor") {
    ExperimentConfig cfg = small_config();
    cfg.synthetic_n = 150;
    cfg.optimizer.epochs = 6;
    fs::path tmp = fs::temp_directory_path() / "antiphish_predict_test";
    fs::remove_all(tmp);
    RunArtifacts art = run_experiment(cfg);
    fs::path dir = persist_artifacts(art, tmp);

    LoadedArtifacts la = load_artifacts(dir);
    CHECK(la.hash == art.config_hash);

    // reloaded pipeline reproduces the persisted test predictions
    std::vector<std::string> urls;
    for (const auto& r : art.test.records) urls.push_back(r.raw);
    FinalPrediction pred = predict_urls(la, urls);
    REQUIRE(pred.probability.size() == art.test_prediction.probability.size());
    for (size_t i = 0; i < pred.probability.size(); ++i)
        CHECK(pred.probability[i] ==
              Catch::Approx(art.test_prediction.probability[i]).epsilon(1e-12));

    // a phishing-looking URL scores above a clean one
    FinalPrediction spot =
        predict_urls(la, {"http://192.168.4.4/login", "https://example.com/about"});
    CHECK(spot.probability[0] > spot.probability[1]);

    fs::remove_all(tmp);
}

TEST_CASE("loading mixed-run artifacts fails the schema guard") {
    ExperimentConfig cfg = small_config();
    cfg.synthetic_n = 120;
    cfg.optimizer.epochs = 4;
    fs::path tmp = fs::temp_directory_path() / "antiphish_mix_test";
    fs::remove_all(tmp);
    RunArtifacts a = run_experiment(cfg);
    fs::path da = persist_artifacts(a, tmp / "a");

    ExperimentConfig cfg2 = cfg;
    cfg2.seed = cfg.seed + 1;
    RunArtifacts b = run_experiment(cfg2);
    fs::path db = persist_artifacts(b, tmp / "b");

    // graft the other run's lstm manifest: stamp mismatch must be caught
    fs::copy_file(db / "lstm_premier.manifest.tsv", da / "lstm_premier.manifest.tsv",
                  fs::copy_options::overwrite_existing);
    CHECK_THROWS_AS(load_artifacts(da), SchemaMismatch);
    fs::remove_all(tmp);
}

TEST_CASE("fusion holds its ground when phase errors decorrelate") {
    // difficulty mixes overt lexical phishing with char-pattern phishing, so
    // phase I (urlf-led) and phase II (chars) err on different samples
    ExperimentConfig cfg;
    cfg.synthetic_n = 600;
    cfg.synthetic_difficulty = 0.5;
    cfg.features.mode = FeatureMode::BOTH;
    cfg.features.ngram_max = 2;
    cfg.features.max_features = 200;
    cfg.features.max_len = 60;
    cfg.k = 4;
    cfg.learners = {LearnerKind::LogisticRegression, LearnerKind::GaussianNB,
                    LearnerKind::DecisionTree};
    cfg.learner_defaults.gd_epochs = 150;
    cfg.lstm_hidden = 16;
    cfg.lstm_embed_dim = 8;
    cfg.lstm_head = {8};
    cfg.optimizer.kind = OptimizerKind::Adam;
    cfg.optimizer.learning_rate = 0.01;
    cfg.optimizer.epochs = 10;
    cfg.schedule.patience = 10;
    cfg.schedule.dropout_rate = 0.2;
    cfg.boost.rounds = 40;
    cfg.seed = 3;
    RunArtifacts art = run_experiment(cfg);

    double phase1 = art.reports.phase1_test.cls.accuracy;
    double best_phase2 = 0.0;
    for (const auto& [tag, rep] : art.reports.phase2_test)
        best_phase2 = std::max(best_phase2, rep.cls.accuracy);
    double fused = art.reports.final_test.cls.accuracy;
    CHECK(fused >= phase1 - 0.01);
    CHECK(fused >= best_phase2 - 0.01);
}
