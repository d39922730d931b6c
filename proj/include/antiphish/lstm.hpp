#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/matrix.hpp"
#include "antiphish/rng.hpp"

namespace antiphish {

// Two-layer LSTM over character (or numeric) sequences with a ReLU dense
// head and sigmoid output. Gate equations per timestep:
//   f = sigma(W_f [h, x] + b_f)      i = sigma(W_i [h, x] + b_i)
//   chat = tanh(W_c [h, x] + b_c)    C = f * C_prev + i * chat
//   o = sigma(W_o [h, x] + b_o)      h = o * tanh(C)
// Padding timesteps (index 0) never fire the recurrence.

struct LstmArch {
    bool char_mode = true;
    size_t alphabet_size = 97;  // pad + unknown + 95 printable ASCII
    size_t embed_dim = 32;
    size_t hidden = 128;
    std::vector<size_t> head_sizes = {64, 16};
    size_t max_len = 200;

    size_t input_dim() const { return char_mode ? embed_dim : 1; }

    void validate() const {
        if (hidden == 0) throw ConfigError("lstm hidden size must be positive");
        if (char_mode && (alphabet_size < 2 || embed_dim == 0))
            throw ConfigError("char mode needs alphabet >= 2 and embed_dim > 0");
        if (max_len == 0) throw ConfigError("max_len must be positive");
    }
};

struct TensorRef {
    size_t off = 0, rows = 0, cols = 0;
    size_t size() const { return rows * cols; }
};

struct LstmGateRefs {
    TensorRef w_f, w_i, w_o, w_c;
    TensorRef b_f, b_i, b_o, b_c;
};

// All weights live in one flat vector so the optimizers can treat the whole
// network as a single parameter set.
struct LstmParams {
    LstmArch arch;
    Vec theta;
    TensorRef embedding;
    LstmGateRefs layer1, layer2;
    std::vector<TensorRef> head_w, head_b;

    const double* at(const TensorRef& r) const { return theta.data() + r.off; }
    double* at(const TensorRef& r) { return theta.data() + r.off; }
};

namespace detail {

inline TensorRef alloc_tensor(size_t& off, size_t rows, size_t cols) {
    TensorRef r{off, rows, cols};
    off += rows * cols;
    return r;
}

inline LstmGateRefs alloc_layer(size_t& off, size_t hidden, size_t input) {
    LstmGateRefs g;
    g.w_f = alloc_tensor(off, hidden, hidden + input);
    g.w_i = alloc_tensor(off, hidden, hidden + input);
    g.w_o = alloc_tensor(off, hidden, hidden + input);
    g.w_c = alloc_tensor(off, hidden, hidden + input);
    g.b_f = alloc_tensor(off, hidden, 1);
    g.b_i = alloc_tensor(off, hidden, 1);
    g.b_o = alloc_tensor(off, hidden, 1);
    g.b_c = alloc_tensor(off, hidden, 1);
    return g;
}

inline void glorot_fill(double* p, size_t rows, size_t cols, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (size_t i = 0; i < rows * cols; ++i) p[i] = rng.uniform(-bound, bound);
}

}  // namespace detail

inline LstmParams init_lstm(const LstmArch& arch, uint64_t seed) {
    arch.validate();
    LstmParams p;
    p.arch = arch;
    size_t off = 0;
    if (arch.char_mode)
        p.embedding = detail::alloc_tensor(off, arch.alphabet_size, arch.embed_dim);
    p.layer1 = detail::alloc_layer(off, arch.hidden, arch.input_dim());
    p.layer2 = detail::alloc_layer(off, arch.hidden, arch.hidden);
    size_t in = arch.hidden;
    for (size_t h : arch.head_sizes) {
        p.head_w.push_back(detail::alloc_tensor(off, h, in));
        p.head_b.push_back(detail::alloc_tensor(off, h, 1));
        in = h;
    }
    p.head_w.push_back(detail::alloc_tensor(off, 1, in));
    p.head_b.push_back(detail::alloc_tensor(off, 1, 1));
    p.theta.assign(off, 0.0);

    Rng rng(seed);
    if (arch.char_mode)
        detail::glorot_fill(p.at(p.embedding), p.embedding.rows, p.embedding.cols, rng);
    for (const LstmGateRefs* g : {&p.layer1, &p.layer2}) {
        for (const TensorRef* w : {&g->w_f, &g->w_i, &g->w_o, &g->w_c})
            detail::glorot_fill(p.at(*w), w->rows, w->cols, rng);
        // forget-gate bias starts at 1
        for (size_t i = 0; i < g->b_f.size(); ++i) p.at(g->b_f)[i] = 1.0;
    }
    for (size_t l = 0; l < p.head_w.size(); ++l)
        detail::glorot_fill(p.at(p.head_w[l]), p.head_w[l].rows, p.head_w[l].cols, rng);
    return p;
}

// ---- forward ----------------------------------------------------------------

struct LstmLayerCache {
    // per processed timestep
    std::vector<Vec> z;       // [h_prev, x_t]
    std::vector<Vec> f, i, o, chat, c, tanh_c, h;
};

struct LstmCache {
    size_t len = 0;             // effective (non-padding) length
    std::vector<int> idx;       // char indices, empty in numeric mode
    std::vector<Vec> x;         // layer-1 inputs
    LstmLayerCache l1, l2;
    std::vector<Vec> drop_mask; // layer-1 output mask, already inverse-scaled
    std::vector<Vec> head_in;   // activation entering each dense layer
    std::vector<Vec> head_pre;  // pre-activation of each dense layer
    double logit = 0.0;
    double prob = 0.5;
    bool train_mode = false;
    double dropout_rate = 0.0;
};

namespace detail {

struct GateViews {
    const double *w_f, *w_i, *w_o, *w_c, *b_f, *b_i, *b_o, *b_c;
    size_t hidden, zdim;
};

inline GateViews gate_views(const LstmParams& p, const LstmGateRefs& g) {
    return {p.at(g.w_f), p.at(g.w_i), p.at(g.w_o), p.at(g.w_c),
            p.at(g.b_f), p.at(g.b_i), p.at(g.b_o), p.at(g.b_c),
            g.w_f.rows, g.w_f.cols};
}

inline void lstm_step(const GateViews& v, const Vec& z, Vec& f, Vec& i, Vec& o, Vec& chat,
                      const Vec& c_prev, Vec& c, Vec& tanh_c, Vec& h) {
    const size_t H = v.hidden, Z = v.zdim;
    f.resize(H); i.resize(H); o.resize(H); chat.resize(H);
    c.resize(H); tanh_c.resize(H); h.resize(H);
    for (size_t r = 0; r < H; ++r) {
        const double* zr = z.data();
        double af = v.b_f[r] + dot(v.w_f + r * Z, zr, Z);
        double ai = v.b_i[r] + dot(v.w_i + r * Z, zr, Z);
        double ao = v.b_o[r] + dot(v.w_o + r * Z, zr, Z);
        double ac = v.b_c[r] + dot(v.w_c + r * Z, zr, Z);
        f[r] = 1.0 / (1.0 + std::exp(-af));
        i[r] = 1.0 / (1.0 + std::exp(-ai));
        o[r] = 1.0 / (1.0 + std::exp(-ao));
        chat[r] = std::tanh(ac);
        c[r] = f[r] * c_prev[r] + i[r] * chat[r];
        tanh_c[r] = std::tanh(c[r]);
        h[r] = o[r] * tanh_c[r];
    }
}

}  // namespace detail

// Single-cell forward, exposed for the unit tests of the gate equations.
inline void cell_forward(const LstmParams& p, const LstmGateRefs& layer, const Vec& x,
                         const Vec& h_prev, const Vec& c_prev, Vec& h_out, Vec& c_out,
                         Vec* gates_out = nullptr) {
    auto v = detail::gate_views(p, layer);
    if (x.size() + h_prev.size() != v.zdim || c_prev.size() != v.hidden)
        throw ShapeMismatch("cell_forward: inconsistent shapes");
    Vec z(v.zdim);
    std::copy(h_prev.begin(), h_prev.end(), z.begin());
    std::copy(x.begin(), x.end(), z.begin() + h_prev.size());
    Vec f, i, o, chat, tanh_c;
    detail::lstm_step(v, z, f, i, o, chat, c_prev, c_out, tanh_c, h_out);
    for (double value : h_out)
        if (!std::isfinite(value)) throw NonFiniteActivation("cell_forward: non-finite h");
    if (gates_out) {
        gates_out->clear();
        for (const Vec* part : {&f, &i, &o, &chat})
            gates_out->insert(gates_out->end(), part->begin(), part->end());
    }
}

// Layer-1 input at step t: embedding row (char mode) or the raw value
// (numeric mode, one value per timestep).
struct SeqInput {
    const int* idx = nullptr;      // char mode
    const double* vals = nullptr;  // numeric mode
    size_t len = 0;
};

inline LstmCache lstm_forward(const LstmParams& p, const SeqInput& in, bool train_mode,
                              uint64_t dropout_mask_seed, double dropout_rate) {
    const LstmArch& arch = p.arch;
    LstmCache cache;
    cache.train_mode = train_mode;
    cache.dropout_rate = train_mode ? dropout_rate : 0.0;

    size_t L = std::min(in.len, arch.max_len);
    if (arch.char_mode) {
        // right-padded: stop at the first pad index
        size_t eff = 0;
        while (eff < L && in.idx[eff] != 0) ++eff;
        L = eff;
        cache.idx.assign(in.idx, in.idx + L);
    }
    cache.len = L;

    const size_t H = arch.hidden;
    auto v1 = detail::gate_views(p, p.layer1);
    auto v2 = detail::gate_views(p, p.layer2);
    Vec h1(H, 0.0), c1(H, 0.0), h2(H, 0.0), c2(H, 0.0);
    Rng drop_rng(dropout_mask_seed);
    const bool dropping = cache.dropout_rate > 0.0;
    const double keep = 1.0 - cache.dropout_rate;

    cache.x.resize(L);
    cache.drop_mask.resize(L);
    auto& l1 = cache.l1;
    auto& l2 = cache.l2;
    for (auto* lc : {&l1, &l2}) {
        lc->z.resize(L); lc->f.resize(L); lc->i.resize(L); lc->o.resize(L);
        lc->chat.resize(L); lc->c.resize(L); lc->tanh_c.resize(L); lc->h.resize(L);
    }

    for (size_t t = 0; t < L; ++t) {
        Vec& x = cache.x[t];
        if (arch.char_mode) {
            const double* row = p.at(p.embedding) + static_cast<size_t>(cache.idx[t]) * arch.embed_dim;
            x.assign(row, row + arch.embed_dim);
        } else {
            x.assign(1, in.vals[t]);
        }
        Vec& z1 = l1.z[t];
        z1.resize(H + x.size());
        std::copy(h1.begin(), h1.end(), z1.begin());
        std::copy(x.begin(), x.end(), z1.begin() + H);
        detail::lstm_step(v1, z1, l1.f[t], l1.i[t], l1.o[t], l1.chat[t], c1, l1.c[t],
                          l1.tanh_c[t], l1.h[t]);
        h1 = l1.h[t];
        c1 = l1.c[t];

        Vec dropped = h1;
        if (dropping) {
            Vec& mask = cache.drop_mask[t];
            mask.resize(H);
            for (size_t u = 0; u < H; ++u)
                mask[u] = drop_rng.uniform() < keep ? 1.0 / keep : 0.0;  // inverted dropout
            for (size_t u = 0; u < H; ++u) dropped[u] *= mask[u];
        }

        Vec& z2 = l2.z[t];
        z2.resize(2 * H);
        std::copy(h2.begin(), h2.end(), z2.begin());
        std::copy(dropped.begin(), dropped.end(), z2.begin() + H);
        detail::lstm_step(v2, z2, l2.f[t], l2.i[t], l2.o[t], l2.chat[t], c2, l2.c[t],
                          l2.tanh_c[t], l2.h[t]);
        h2 = l2.h[t];
        c2 = l2.c[t];
    }

    // dense ReLU head on the final hidden state (zero vector if L == 0)
    Vec act = h2;
    const size_t n_dense = p.head_w.size();
    cache.head_in.resize(n_dense);
    cache.head_pre.resize(n_dense);
    for (size_t d = 0; d < n_dense; ++d) {
        cache.head_in[d] = act;
        const TensorRef& w = p.head_w[d];
        Vec pre(w.rows);
        for (size_t r = 0; r < w.rows; ++r)
            pre[r] = p.at(p.head_b[d])[r] + dot(p.at(w) + r * w.cols, act.data(), w.cols);
        cache.head_pre[d] = pre;
        if (d + 1 < n_dense) {
            act.resize(pre.size());
            for (size_t r = 0; r < pre.size(); ++r) act[r] = pre[r] > 0.0 ? pre[r] : 0.0;
        } else {
            cache.logit = pre[0];
        }
    }
    if (!std::isfinite(cache.logit)) throw NonFiniteActivation("lstm_forward: non-finite logit");
    cache.prob = 1.0 / (1.0 + std::exp(-cache.logit));
    return cache;
}

// ---- backward (BPTT, exact gradients of binary cross-entropy) --------------

inline Vec lstm_backward(const LstmParams& p, const LstmCache& cache, int label) {
    const LstmArch& arch = p.arch;
    const size_t H = arch.hidden;
    Vec grad(p.theta.size(), 0.0);

    // head backward; d(loss)/d(logit) = p - y
    double dlogit = cache.prob - static_cast<double>(label);
    const size_t n_dense = p.head_w.size();
    Vec dact(1, dlogit);
    for (size_t d = n_dense; d-- > 0;) {
        const TensorRef& wr = p.head_w[d];
        const double* w = p.at(wr);
        const Vec& a_in = cache.head_in[d];
        Vec dpre;
        if (d + 1 == n_dense) {
            dpre = dact;  // final layer is linear into the sigmoid
        } else {
            dpre.resize(wr.rows);
            for (size_t r = 0; r < wr.rows; ++r)
                dpre[r] = cache.head_pre[d][r] > 0.0 ? dact[r] : 0.0;
        }
        double* gw = grad.data() + wr.off;
        double* gb = grad.data() + p.head_b[d].off;
        for (size_t r = 0; r < wr.rows; ++r) {
            gb[r] += dpre[r];
            const double s = dpre[r];
            for (size_t c = 0; c < wr.cols; ++c) gw[r * wr.cols + c] += s * a_in[c];
        }
        Vec dnext(wr.cols, 0.0);
        for (size_t r = 0; r < wr.rows; ++r) {
            const double s = dpre[r];
            for (size_t c = 0; c < wr.cols; ++c) dnext[c] += s * w[r * wr.cols + c];
        }
        dact = std::move(dnext);
    }

    const size_t L = cache.len;
    if (L == 0) return grad;  // recurrence never fired; only head gradients exist

    auto layer_backward = [&](const LstmGateRefs& refs, const LstmLayerCache& lc,
                              const std::vector<Vec>& dh_extra, Vec& dx_out_flat,
                              size_t input_dim) {
        auto v = detail::gate_views(p, refs);
        const size_t Z = v.zdim;
        const Vec zero_state(H, 0.0);
        Vec dh(H, 0.0), dc(H, 0.0);
        Vec dzf(H), dzi(H), dzo(H), dzc(H);
        double* g_wf = grad.data() + refs.w_f.off;
        double* g_wi = grad.data() + refs.w_i.off;
        double* g_wo = grad.data() + refs.w_o.off;
        double* g_wc = grad.data() + refs.w_c.off;
        double* g_bf = grad.data() + refs.b_f.off;
        double* g_bi = grad.data() + refs.b_i.off;
        double* g_bo = grad.data() + refs.b_o.off;
        double* g_bc = grad.data() + refs.b_c.off;
        for (size_t t = L; t-- > 0;) {
            for (size_t u = 0; u < H; ++u) dh[u] += dh_extra[t][u];
            const Vec& c_prev_v = t > 0 ? lc.c[t - 1] : zero_state;
            for (size_t u = 0; u < H; ++u) {
                double tc = lc.tanh_c[t][u];
                double dco = dc[u] + dh[u] * lc.o[t][u] * (1.0 - tc * tc);
                double f = lc.f[t][u], i = lc.i[t][u], o = lc.o[t][u], ch = lc.chat[t][u];
                dzo[u] = dh[u] * tc * o * (1.0 - o);
                dzf[u] = dco * c_prev_v[u] * f * (1.0 - f);
                dzi[u] = dco * ch * i * (1.0 - i);
                dzc[u] = dco * i * (1.0 - ch * ch);
                dc[u] = dco * f;
            }
            const Vec& z = lc.z[t];
            for (size_t r = 0; r < H; ++r) {
                g_bf[r] += dzf[r];
                g_bi[r] += dzi[r];
                g_bo[r] += dzo[r];
                g_bc[r] += dzc[r];
                const double sf = dzf[r], si = dzi[r], so = dzo[r], sc = dzc[r];
                double* wf = g_wf + r * Z;
                double* wi = g_wi + r * Z;
                double* wo = g_wo + r * Z;
                double* wc = g_wc + r * Z;
                const double* zp = z.data();
                for (size_t c = 0; c < Z; ++c) {
                    wf[c] += sf * zp[c];
                    wi[c] += si * zp[c];
                    wo[c] += so * zp[c];
                    wc[c] += sc * zp[c];
                }
            }
            // dz = W^T dz_gates; split into dh_prev and dx_t
            Vec dz(Z, 0.0);
            for (size_t r = 0; r < H; ++r) {
                const double sf = dzf[r], si = dzi[r], so = dzo[r], sc = dzc[r];
                const double* wf = v.w_f + r * Z;
                const double* wi = v.w_i + r * Z;
                const double* wo = v.w_o + r * Z;
                const double* wc = v.w_c + r * Z;
                for (size_t c = 0; c < Z; ++c)
                    dz[c] += sf * wf[c] + si * wi[c] + so * wo[c] + sc * wc[c];
            }
            for (size_t u = 0; u < H; ++u) dh[u] = dz[u];
            for (size_t c = 0; c < input_dim; ++c) dx_out_flat[t * input_dim + c] = dz[H + c];
        }
    };

    // layer 2 first: collects the gradient flowing into its inputs
    std::vector<Vec> dh2_extra(L, Vec(H, 0.0));
    for (size_t u = 0; u < H; ++u) dh2_extra[L - 1][u] = dact[u];
    Vec dx2(L * H, 0.0);
    layer_backward(p.layer2, cache.l2, dh2_extra, dx2, H);

    // through dropout into layer-1 output gradients
    std::vector<Vec> dh1_extra(L, Vec(H, 0.0));
    for (size_t t = 0; t < L; ++t)
        for (size_t u = 0; u < H; ++u) {
            double m = (cache.dropout_rate > 0.0) ? cache.drop_mask[t][u] : 1.0;
            dh1_extra[t][u] = dx2[t * H + u] * m;
        }
    const size_t in_dim = arch.input_dim();
    Vec dx1(L * in_dim, 0.0);
    layer_backward(p.layer1, cache.l1, dh1_extra, dx1, in_dim);

    if (arch.char_mode) {
        double* g_emb = grad.data() + p.embedding.off;
        for (size_t t = 0; t < L; ++t) {
            double* row = g_emb + static_cast<size_t>(cache.idx[t]) * arch.embed_dim;
            for (size_t c = 0; c < arch.embed_dim; ++c) row[c] += dx1[t * in_dim + c];
        }
    }
    return grad;
}

inline double bce_loss(double prob, int label) {
    const double eps = 1e-12;
    double p = std::min(std::max(prob, eps), 1.0 - eps);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// ---- persistence: binary container + text manifest --------------------------

inline void save_lstm(const LstmParams& p, const std::string& bin_path,
                      const std::string& manifest_path, const std::string& config_hash) {
    std::ofstream man(manifest_path);
    if (!man) throw DataError(strfmt("cannot write '%s'", manifest_path.c_str()));
    man << "lstm_params\tv1\n";
    man << "char_mode\t" << (p.arch.char_mode ? 1 : 0) << '\n';
    man << "alphabet_size\t" << p.arch.alphabet_size << '\n';
    man << "embed_dim\t" << p.arch.embed_dim << '\n';
    man << "hidden\t" << p.arch.hidden << '\n';
    man << "max_len\t" << p.arch.max_len << '\n';
    man << "head_sizes";
    for (size_t h : p.arch.head_sizes) man << '\t' << h;
    man << '\n';
    man << "theta_count\t" << p.theta.size() << '\n';
    man << "config_hash\t" << config_hash << '\n';

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw DataError(strfmt("cannot write '%s'", bin_path.c_str()));
    const char magic[8] = {'A', 'P', 'L', 'S', 'T', 'M', '1', '\n'};
    bin.write(magic, 8);
    bin.write(reinterpret_cast<const char*>(p.theta.data()),
              static_cast<std::streamsize>(p.theta.size() * sizeof(double)));
}

inline LstmParams load_lstm(const std::string& bin_path, const std::string& manifest_path) {
    std::ifstream man(manifest_path);
    if (!man) throw DataError(strfmt("cannot open '%s'", manifest_path.c_str()));
    LstmArch arch;
    arch.head_sizes.clear();
    size_t theta_count = 0;
    std::string key;
    std::string header;
    std::getline(man, header);
    if (header.rfind("lstm_params\tv1", 0) != 0) throw SchemaMismatch("bad lstm manifest");
    while (man >> key) {
        if (key == "char_mode") { int v; man >> v; arch.char_mode = v != 0; }
        else if (key == "alphabet_size") man >> arch.alphabet_size;
        else if (key == "embed_dim") man >> arch.embed_dim;
        else if (key == "hidden") man >> arch.hidden;
        else if (key == "max_len") man >> arch.max_len;
        else if (key == "head_sizes") {
            std::string rest;
            std::getline(man, rest);
            size_t pos = 0;
            while (pos < rest.size()) {
                size_t next = rest.find('\t', pos + 1);
                arch.head_sizes.push_back(std::stoull(rest.substr(pos + 1,
                    next == std::string::npos ? std::string::npos : next - pos - 1)));
                pos = next == std::string::npos ? rest.size() : next;
            }
        }
        else if (key == "theta_count") man >> theta_count;
        else { std::string rest; std::getline(man, rest); }
    }
    LstmParams p = init_lstm(arch, 0);
    if (p.theta.size() != theta_count)
        throw SchemaMismatch(strfmt("lstm manifest says %zu parameters, layout has %zu",
                                    theta_count, p.theta.size()));
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw DataError(strfmt("cannot open '%s'", bin_path.c_str()));
    char magic[8];
    bin.read(magic, 8);
    if (std::memcmp(magic, "APLSTM1\n", 8) != 0) throw SchemaMismatch("bad lstm binary magic");
    bin.read(reinterpret_cast<char*>(p.theta.data()),
             static_cast<std::streamsize>(p.theta.size() * sizeof(double)));
    if (!bin) throw ParseError("truncated lstm binary");
    return p;
}

}  // namespace antiphish
