// antiphish: two-phase stacked phishing-URL classifier.
// Subcommands: ingest, featurize, train, evaluate, predict, report.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure,
// 5 model/schema mismatch. Diagnostics go to stderr, data to stdout.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "antiphish/artifacts.hpp"
#include "antiphish/config.hpp"
#include "antiphish/pipeline.hpp"
#include "antiphish/synthetic.hpp"

namespace fs = std::filesystem;
using namespace antiphish;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitSchema = 5;

void print_flag_hash(const std::string& verb, const std::string& canon) {
    std::cerr << "config hash: " << hash_hex(fnv1a64(verb + "\n" + canon)) << "\n";
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out_path,
               const std::string& benign_alias, const std::string& phishing_alias,
               size_t synthetic_n, double difficulty, uint64_t seed) {
    Dataset ds;
    if (synthetic_n > 0) {
        SyntheticSpec spec;
        spec.n = synthetic_n;
        spec.seed = seed;
        spec.difficulty = difficulty;
        ds = generate_synthetic(spec);
    } else {
        if (inputs.empty()) throw ConfigError("ingest: need --input or --synthetic");
        IngestSchema schema{benign_alias, phishing_alias};
        std::unordered_set<std::string> seen;
        for (const auto& path : inputs) {
            Dataset part = load_dataset(path, schema);
            for (auto& r : part.records)
                if (seen.insert(r.normalized).second) ds.records.push_back(std::move(r));
        }
        ds.recount();
    }
    std::ostringstream canon;
    canon << "out=" << out_path << " n=" << synthetic_n << " difficulty=" << difficulty
          << " seed=" << seed;
    for (const auto& i : inputs) canon << " input=" << i;
    print_flag_hash("ingest", canon.str());

    if (out_path.empty() || out_path == "-") {
        save_dataset(ds, std::cout);
    } else {
        save_dataset(ds, out_path);
    }
    std::cerr << "ingested " << ds.size() << " records (" << ds.benign_count << " benign, "
              << ds.phishing_count << " phishing)\n";
    return 0;
}

int cmd_featurize(const std::string& data_path, const std::string& out_path,
                  const std::string& mode, int ngram_min, int ngram_max,
                  size_t max_features) {
    Dataset ds = load_dataset(data_path);
    if (ds.size() == 0) throw DataError("featurize: empty dataset");
    std::ostringstream canon;
    canon << "data=" << data_path << " mode=" << mode << " ngram=" << ngram_min << "-"
          << ngram_max << " max_features=" << max_features;
    print_flag_hash("featurize", canon.str());

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path);
        if (!file) throw DataError(strfmt("cannot write '%s'", out_path.c_str()));
        out = &file;
    }
    std::vector<std::string> corpus;
    for (const auto& r : ds.records) corpus.push_back(r.normalized);
    if (mode == "urlf") {
        TokenTable table = build_token_table(corpus);
        dump_urlf_header(*out);
        for (const auto& r : ds.records)
            dump_urlf_row(*out, r.normalized, extract_urlf(r.raw, r.normalized, table));
    } else if (mode == "clf") {
        TfidfVocabulary vocab = fit_vocabulary(corpus, ngram_min, ngram_max, max_features);
        *out << "url\tterm:weight...\n";
        for (const auto& r : ds.records) {
            *out << r.normalized;
            for (const auto& [col, w] : transform(r.normalized, vocab))
                *out << '\t' << vocab.terms[col] << ':' << fmt_double(w);
            *out << '\n';
        }
    } else {
        throw ConfigError("featurize: --mode must be urlf or clf");
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const CLI::App* sub, uint64_t seed, int jobs, const std::string& feature_mode,
              const std::string& optimizer, int k, const std::string& mse_form) {
    ExperimentConfig cfg = load_config(config_path);
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--jobs")) cfg.jobs = jobs;
    if (sub->count("--feature-mode")) cfg.features.mode = feature_mode_from_name(feature_mode);
    if (sub->count("--optimizer")) cfg.optimizer.kind = optimizer_from_name(optimizer);
    if (sub->count("--k")) cfg.k = k;
    if (sub->count("--mse-form")) {
        if (mse_form == "mean") cfg.mse_form = MseForm::Mean;
        else if (mse_form == "half-sum") cfg.mse_form = MseForm::HalfSum;
        else throw ConfigError("--mse-form must be mean or half-sum");
    }
    cfg.schedule.seed = cfg.seed;
    cfg.validate();
    std::cerr << "config hash: " << config_hash(cfg) << "\n";

    RunArtifacts art = run_experiment(cfg);
    fs::path dir = persist_artifacts(art, out_dir);

    const auto& f = art.reports.final_test;
    std::cout << "artifacts\t" << dir.string() << "\n";
    std::cout << "phase1_test_accuracy\t" << fmt_double(art.reports.phase1_test.cls.accuracy)
              << "\n";
    for (const auto& [tag, rep] : art.reports.phase2_test)
        std::cout << "phase2_" << tag << "_accuracy\t" << fmt_double(rep.cls.accuracy) << "\n";
    std::cout << "final_test_accuracy\t" << fmt_double(f.cls.accuracy) << "\n";
    std::cout << "final_test_precision\t" << fmt_double(f.cls.precision) << "\n";
    std::cout << "final_test_recall\t" << fmt_double(f.cls.recall) << "\n";
    std::cout << "final_test_f_measure\t" << fmt_double(f.cls.f_measure) << "\n";
    std::cout << "final_test_auc\t" << fmt_double(f.auc) << "\n";
    return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& url,
                const std::string& input_path) {
    LoadedArtifacts la = load_artifacts(model_dir);
    std::cerr << "config hash: " << la.hash << "\n";
    std::vector<std::string> urls;
    if (!url.empty()) {
        urls.push_back(url);
    } else {
        std::ifstream f(input_path);
        if (!f) throw DataError(strfmt("cannot open '%s'", input_path.c_str()));
        std::string line;
        while (std::getline(f, line)) {
            auto sv = trim(line);
            if (!sv.empty() && sv.front() != '#') urls.emplace_back(sv);
        }
    }
    if (urls.empty()) return 0;
    FinalPrediction pred = predict_urls(la, urls);
    for (size_t i = 0; i < urls.size(); ++i)
        std::cout << urls[i] << '\t' << fmt_double(pred.probability[i]) << '\t'
                  << pred.label[i] << '\n';
    return 0;
}

int cmd_evaluate(const std::string& model_dir, const std::string& data_path,
                 const std::string& out_dir, const std::string& mse_form) {
    LoadedArtifacts la = load_artifacts(model_dir);
    std::cerr << "config hash: " << la.hash << "\n";
    IngestSchema schema{la.cfg.benign_alias, la.cfg.phishing_alias};
    Dataset ds = load_dataset(data_path, schema);
    if (ds.size() == 0) throw DataError("evaluate: empty dataset");
    std::vector<std::string> urls;
    std::vector<int> y;
    for (const auto& r : ds.records) {
        urls.push_back(r.raw);
        y.push_back(r.label);
    }
    FinalPrediction pred = predict_urls(la, urls);
    MseForm form = la.cfg.mse_form;
    if (mse_form == "mean") form = MseForm::Mean;
    else if (mse_form == "half-sum") form = MseForm::HalfSum;
    MetricReport rep = evaluate_scores(y, pred.probability, form);
    std::cout << "accuracy\t" << fmt_double(rep.cls.accuracy) << "\n";
    std::cout << "precision\t" << fmt_double(rep.cls.precision) << "\n";
    std::cout << "recall\t" << fmt_double(rep.cls.recall) << "\n";
    std::cout << "f_measure\t" << fmt_double(rep.cls.f_measure) << "\n";
    std::cout << "auc\t" << fmt_double(rep.auc) << "\n";
    std::cout << "mae\t" << fmt_double(rep.mae_value) << "\n";
    std::cout << "mse\t" << fmt_double(rep.mse_value) << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        save_metric_report(rep, fs::path(out_dir) / "metrics_eval.tsv",
                           fs::path(out_dir) / "metrics_eval.json");
        save_pr_points(rep.pr_points, fs::path(out_dir) / "pr_points_eval.tsv");
    }
    return 0;
}

int cmd_report(const std::string& artifacts_dir, const std::string& out_dir) {
    fs::path src(artifacts_dir);
    if (!fs::exists(src / "hash.txt"))
        throw DataError(strfmt("no artifacts at '%s'", artifacts_dir.c_str()));
    {
        std::ifstream f(src / "hash.txt");
        std::string hash;
        f >> hash;
        std::cerr << "config hash: " << hash << "\n";
    }
    fs::path dst = out_dir.empty() ? src / "report" : fs::path(out_dir);
    fs::create_directories(dst);

    bool partial = false;
    auto emit = [&](const std::string& stem) {
        fs::path json = src / (stem + ".json");
        if (!fs::exists(json)) {
            partial = true;
            return;
        }
        MetricReport r = load_metric_report(json);
        save_metric_report(r, dst / (stem + ".tsv"), dst / (stem + ".json"));
    };
    emit("metrics_phase1");
    bool any_phase2 = false;
    for (const auto& entry : fs::directory_iterator(src)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("metrics_phase2_", 0) == 0 && name.size() > 5 &&
            name.substr(name.size() - 5) == ".json") {
            emit(name.substr(0, name.size() - 5));
            any_phase2 = true;
        }
        if (name.rfind("pr_points_", 0) == 0)
            fs::copy_file(entry.path(), dst / name, fs::copy_options::overwrite_existing);
    }
    if (!any_phase2) partial = true;
    emit("metrics_final");
    emit("metrics_final_train");
    if (partial)
        std::cerr << "warning: partial artifacts, some tables were skipped\n";
    std::cout << "report\t" << dst.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-phase stacked phishing-URL classifier"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "normalize + dedup raw URL datasets");
    std::vector<std::string> ingest_inputs;
    std::string ingest_out, benign_alias = "benign", phishing_alias = "phishing";
    size_t synthetic_n = 0;
    double difficulty = 0.0;
    uint64_t ingest_seed = 42;
    ingest->add_option("--input", ingest_inputs, "raw dataset file(s), label,url per line");
    ingest->add_option("--out", ingest_out, "output file, '-' for stdout");
    ingest->add_option("--benign-alias", benign_alias, "extra accepted benign label");
    ingest->add_option("--phishing-alias", phishing_alias, "extra accepted phishing label");
    ingest->add_option("--synthetic", synthetic_n, "generate N synthetic records instead");
    ingest->add_option("--difficulty", difficulty, "synthetic difficulty in [0,1]");
    ingest->add_option("--seed", ingest_seed, "generator seed");

    // featurize
    auto* featurize = app.add_subcommand("featurize", "dump lexical or tf-idf features");
    std::string fz_data, fz_out, fz_mode = "urlf";
    int fz_ngram_min = 1, fz_ngram_max = 3;
    size_t fz_max_features = 5000;
    featurize->add_option("--data", fz_data, "canonical dataset file")->required();
    featurize->add_option("--out", fz_out, "output file, '-' for stdout");
    featurize->add_option("--mode", fz_mode, "urlf or clf");
    featurize->add_option("--ngram-min", fz_ngram_min, "min char n-gram");
    featurize->add_option("--ngram-max", fz_ngram_max, "max char n-gram");
    featurize->add_option("--max-features", fz_max_features, "tf-idf vocabulary cap");

    // train
    auto* train = app.add_subcommand("train", "run the full two-phase experiment");
    std::string tr_config, tr_out = "artifacts";
    uint64_t tr_seed = 42;
    int tr_jobs = 1, tr_k = 10;
    std::string tr_feature_mode = "both", tr_optimizer = "adam", tr_mse = "mean";
    train->add_option("--config", tr_config, "experiment config file")->required();
    train->add_option("--out", tr_out, "artifacts output directory");
    train->add_option("--seed", tr_seed, "master seed override");
    train->add_option("--jobs", tr_jobs, "intra-stage parallelism");
    train->add_option("--feature-mode", tr_feature_mode, "urlf|clf|both override");
    train->add_option("--optimizer", tr_optimizer,
                      "adadelta|adam|rmsprop|adagrad|sgd override");
    train->add_option("--k", tr_k, "fold count override (3..10)");
    train->add_option("--mse-form", tr_mse, "mean|half-sum");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a labeled dataset with a trained run");
    std::string ev_model, ev_data, ev_out, ev_mse;
    evaluate->add_option("--model", ev_model, "artifacts directory (the hash dir)")->required();
    evaluate->add_option("--data", ev_data, "labeled dataset file")->required();
    evaluate->add_option("--out", ev_out, "directory for metric files");
    evaluate->add_option("--mse-form", ev_mse, "mean|half-sum");

    // predict
    auto* predict = app.add_subcommand("predict", "classify URLs with a trained run");
    std::string pr_model, pr_url, pr_input;
    predict->add_option("--model", pr_model, "artifacts directory (the hash dir)")->required();
    predict->add_option("--url", pr_url, "single URL");
    predict->add_option("--input", pr_input, "file with one URL per line");

    // report
    auto* report = app.add_subcommand("report", "re-emit metric tables and PR data");
    std::string rp_artifacts, rp_out;
    report->add_option("--artifacts", rp_artifacts, "artifacts directory")->required();
    report->add_option("--out", rp_out, "report output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*ingest)
            return cmd_ingest(ingest_inputs, ingest_out, benign_alias, phishing_alias,
                              synthetic_n, difficulty, ingest_seed);
        if (*featurize)
            return cmd_featurize(fz_data, fz_out, fz_mode, fz_ngram_min, fz_ngram_max,
                                 fz_max_features);
        if (*train)
            return cmd_train(tr_config, tr_out, train, tr_seed, tr_jobs, tr_feature_mode,
                             tr_optimizer, tr_k, tr_mse);
        if (*evaluate) return cmd_evaluate(ev_model, ev_data, ev_out, ev_mse);
        if (*predict) {
            if (pr_url.empty() == pr_input.empty())
                throw ConfigError("predict: exactly one of --url or --input");
            return cmd_predict(pr_model, pr_url, pr_input);
        }
        if (*report) return cmd_report(rp_artifacts, rp_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
