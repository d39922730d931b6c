#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/matrix.hpp"

namespace antiphish {

enum class OptimizerKind { AdaDelta, Adam, RMSprop, AdaGrad, SGD };

inline const char* optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::AdaDelta: return "adadelta";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::RMSprop: return "rmsprop";
        case OptimizerKind::AdaGrad: return "adagrad";
        case OptimizerKind::SGD: return "sgd";
    }
    return "?";
}

inline OptimizerKind optimizer_from_name(const std::string& s) {
    for (OptimizerKind k : {OptimizerKind::AdaDelta, OptimizerKind::Adam, OptimizerKind::RMSprop,
                            OptimizerKind::AdaGrad, OptimizerKind::SGD})
        if (s == optimizer_name(k)) return k;
    throw ConfigError(strfmt("unknown optimizer '%s'", s.c_str()));
}

// Canonical update rules. Reference epochs follow the per-optimizer training
// schedules this model ships with (AdaDelta 200, Adam 100, RMSprop 150,
// AdaGrad 200, SGD 250).
struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 0.0;  // 0 = kind default
    int epochs = 0;              // 0 = kind default
    double beta1 = 0.9;          // Adam
    double beta2 = 0.999;        // Adam
    double rho = 0.9;            // RMSprop (AdaDelta uses 0.95)
    double adadelta_rho = 0.95;
    double epsilon = 1e-8;       // AdaDelta uses 1e-6
    double adadelta_epsilon = 1e-6;

    double effective_lr() const {
        if (learning_rate > 0.0) return learning_rate;
        switch (kind) {
            case OptimizerKind::AdaDelta: return 1.0;
            case OptimizerKind::Adam: return 0.001;
            case OptimizerKind::RMSprop: return 0.001;
            case OptimizerKind::AdaGrad: return 0.01;
            case OptimizerKind::SGD: return 0.01;
        }
        return 0.01;
    }

    int effective_epochs() const {
        if (epochs > 0) return epochs;
        switch (kind) {
            case OptimizerKind::AdaDelta: return 200;
            case OptimizerKind::Adam: return 100;
            case OptimizerKind::RMSprop: return 150;
            case OptimizerKind::AdaGrad: return 200;
            case OptimizerKind::SGD: return 250;
        }
        return 100;
    }

    void validate() const {
        double lr = learning_rate > 0.0 ? learning_rate : effective_lr();
        if (lr <= 0.0 || lr > 1.0) throw ConfigError("learning_rate must be in (0,1]");
        if (epochs < 0) throw ConfigError("epochs must be positive");
        if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
            throw ConfigError("adam betas must be in (0,1)");
        if (rho <= 0 || rho >= 1 || adadelta_rho <= 0 || adadelta_rho >= 1)
            throw ConfigError("rho must be in (0,1)");
    }
};

// Per-parameter accumulator buffers; meaning depends on the kind.
struct OptimizerState {
    Vec m1;  // Adam first moment / AdaGrad sum / RMSprop mean square / AdaDelta grad accum
    Vec m2;  // Adam second moment / AdaDelta update accum

    void reset(size_t n) {
        m1.assign(n, 0.0);
        m2.assign(n, 0.0);
    }
};

// One update over a flat parameter vector; t is the 1-based step count
// (Adam bias correction needs it).
inline void optimizer_step(const OptimizerConfig& cfg, Vec& params, const Vec& grads,
                           OptimizerState& state, long t) {
    if (params.size() != grads.size()) throw ShapeMismatch("optimizer_step: grad size mismatch");
    if (state.m1.size() != params.size()) state.reset(params.size());
    if (t < 1) throw ConfigError("optimizer_step: t must be >= 1");
    const double lr = cfg.effective_lr();
    const size_t n = params.size();

    switch (cfg.kind) {
        case OptimizerKind::SGD:
            for (size_t i = 0; i < n; ++i) params[i] -= lr * grads[i];
            break;
        case OptimizerKind::Adam: {
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            for (size_t i = 0; i < n; ++i) {
                double g = grads[i];
                state.m1[i] = cfg.beta1 * state.m1[i] + (1.0 - cfg.beta1) * g;
                state.m2[i] = cfg.beta2 * state.m2[i] + (1.0 - cfg.beta2) * g * g;
                double mhat = state.m1[i] / bc1;
                double vhat = state.m2[i] / bc2;
                params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
            }
            break;
        }
        case OptimizerKind::RMSprop:
            for (size_t i = 0; i < n; ++i) {
                double g = grads[i];
                state.m1[i] = cfg.rho * state.m1[i] + (1.0 - cfg.rho) * g * g;
                params[i] -= lr * g / (std::sqrt(state.m1[i]) + cfg.epsilon);
            }
            break;
        case OptimizerKind::AdaGrad:
            for (size_t i = 0; i < n; ++i) {
                double g = grads[i];
                state.m1[i] += g * g;
                params[i] -= lr * g / std::sqrt(state.m1[i] + cfg.epsilon);
            }
            break;
        case OptimizerKind::AdaDelta:
            // learning rate acts as an output multiplier on the RMS ratio
            for (size_t i = 0; i < n; ++i) {
                double g = grads[i];
                state.m1[i] = cfg.adadelta_rho * state.m1[i] + (1.0 - cfg.adadelta_rho) * g * g;
                double update = -std::sqrt(state.m2[i] + cfg.adadelta_epsilon) /
                                std::sqrt(state.m1[i] + cfg.adadelta_epsilon) * g;
                state.m2[i] = cfg.adadelta_rho * state.m2[i] +
                              (1.0 - cfg.adadelta_rho) * update * update;
                params[i] += lr * update;
            }
            break;
    }

    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(params[i]))
            throw NonFiniteUpdate(strfmt("optimizer produced non-finite parameter at index %zu", i));
}

}  // namespace antiphish
