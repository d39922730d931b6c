// Minimal library walkthrough: synthetic corpus in, stacked prediction out.

#include <cstdio>

#include "antiphish/config.hpp"
#include "antiphish/pipeline.hpp"

using namespace antiphish;

int main() {
    ExperimentConfig cfg;
    cfg.synthetic_n = 400;
    cfg.synthetic_difficulty = 0.0;
    cfg.features.mode = FeatureMode::URLF;
    cfg.k = 5;
    cfg.learners = {LearnerKind::LogisticRegression, LearnerKind::GaussianNB,
                    LearnerKind::DecisionTree};
    cfg.lstm_hidden = 12;
    cfg.lstm_head = {8};
    cfg.optimizer.kind = OptimizerKind::Adam;
    cfg.optimizer.learning_rate = 0.01;
    cfg.optimizer.epochs = 15;
    cfg.schedule.patience = 15;
    cfg.boost.rounds = 40;
    cfg.seed = 7;

    RunArtifacts art = run_experiment(cfg);
    std::printf("train records: %zu, test records: %zu\n", art.train.size(), art.test.size());
    std::printf("phase1 mean-prediction accuracy: %.4f\n",
                art.reports.phase1_test.cls.accuracy);
    for (const auto& [tag, rep] : art.reports.phase2_test)
        std::printf("phase2 %s accuracy: %.4f\n", tag.c_str(), rep.cls.accuracy);
    std::printf("final stacked accuracy: %.4f (auc %.4f)\n",
                art.reports.final_test.cls.accuracy, art.reports.final_test.auc);
    return 0;
}
