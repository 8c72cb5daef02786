#include "dsa/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace dsa {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'A', '1'};
constexpr std::uint32_t kVersion = 1;

class ParamInit {
  public:
    explicit ParamInit(std::uint64_t seed) : rng_(seed) {}

    Tensor uniform(Shape shape, std::size_t fan_in) {
        // variance-preserving uniform bounds: Var(w) = 1/fan_in keeps the
        // pre-activation scale stable through the residual-free encoder
        // stack; the plain 1/sqrt(fan_in) bound shrinks activations by
        // sqrt(3) per affine stage, which collapses deep stacks
        const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        std::vector<double> v(n);
        for (double& x : v) x = dist(rng_);
        return Tensor::from(std::move(shape), std::move(v), true);
    }

    Tensor angles(Shape shape) {
        std::uniform_real_distribution<double> dist(-std::numbers::pi,
                                                    std::numbers::pi);
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        std::vector<double> v(n);
        for (double& x : v) x = dist(rng_);
        return Tensor::from(std::move(shape), std::move(v), true);
    }

    Tensor zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

  private:
    std::mt19937_64 rng_;
};

} // namespace

void ModelConfig::validate() const {
    if (feature_dim < 1 || hidden_dim < 1 || token_dim < 1 ||
        token_hidden_dim < 1 || input_expand_dim < 1) {
        throw ConfigError("model dimensions must be positive");
    }
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    if (num_tokens < 1) throw ConfigError("num_tokens must be >= 1");
    if (num_blocks < 1) throw ConfigError("num_blocks must be >= 1");
    if (hidden_dim % 2 != 0 || token_dim % 2 != 0) {
        throw ConfigError("hidden_dim and token_dim must be even for the "
                          "positional encoding");
    }
    if (token_hidden_dim != hidden_dim) {
        throw ConfigError("token_hidden_dim must equal hidden_dim so the "
                          "streams share an embedding space");
    }
    if (action_embed_source == ActionEmbedSource::RawTokens &&
        token_dim != hidden_dim) {
        throw ConfigError("raw-token embeddings require token_dim == "
                          "hidden_dim");
    }
    quantum().validate();
}

std::string ModelConfig::to_kv() const {
    std::ostringstream os;
    os << "feature_dim=" << feature_dim << '\n'
       << "hidden_dim=" << hidden_dim << '\n'
       << "token_dim=" << token_dim << '\n'
       << "token_hidden_dim=" << token_hidden_dim << '\n'
       << "num_tokens=" << num_tokens << '\n'
       << "num_blocks=" << num_blocks << '\n'
       << "num_classes=" << num_classes << '\n'
       << "n_qubits=" << n_qubits << '\n'
       << "n_qlayers=" << n_qlayers << '\n'
       << "input_expand_dim=" << input_expand_dim << '\n'
       << "ge_depth=" << ge_depth << '\n'
       << "variant="
       << (variant == ModulationVariant::Quantum ? "quantum" : "classical")
       << '\n'
       << "ring_entanglement=" << (ring_entanglement ? 1 : 0) << '\n'
       << "h_a_source="
       << (action_embed_source == ActionEmbedSource::GeOutput ? "ge_output"
                                                              : "raw_tokens")
       << '\n'
       << "seed=" << seed << '\n';
    return os.str();
}

ModelConfig ModelConfig::from_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("config line without '=': " + line);
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    ModelConfig cfg;
    auto num = [&](const char* key, std::size_t& field) {
        auto it = kv.find(key);
        if (it != kv.end()) field = std::stoull(it->second);
    };
    num("feature_dim", cfg.feature_dim);
    num("hidden_dim", cfg.hidden_dim);
    num("token_dim", cfg.token_dim);
    num("token_hidden_dim", cfg.token_hidden_dim);
    num("num_tokens", cfg.num_tokens);
    num("num_blocks", cfg.num_blocks);
    num("num_classes", cfg.num_classes);
    num("n_qubits", cfg.n_qubits);
    num("n_qlayers", cfg.n_qlayers);
    num("input_expand_dim", cfg.input_expand_dim);
    num("ge_depth", cfg.ge_depth);
    if (auto it = kv.find("variant"); it != kv.end()) {
        if (it->second == "quantum") {
            cfg.variant = ModulationVariant::Quantum;
        } else if (it->second == "classical") {
            cfg.variant = ModulationVariant::Classical;
        } else {
            throw FormatError("unknown variant: " + it->second);
        }
    }
    if (auto it = kv.find("ring_entanglement"); it != kv.end()) {
        cfg.ring_entanglement = it->second != "0";
    }
    if (auto it = kv.find("h_a_source"); it != kv.end()) {
        if (it->second == "ge_output") {
            cfg.action_embed_source = ActionEmbedSource::GeOutput;
        } else if (it->second == "raw_tokens") {
            cfg.action_embed_source = ActionEmbedSource::RawTokens;
        } else {
            throw FormatError("unknown h_a_source: " + it->second);
        }
    }
    if (auto it = kv.find("seed"); it != kv.end()) {
        cfg.seed = std::stoull(it->second);
    }
    return cfg;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    ParamInit init(cfg_.seed);
    auto reg = [this](const std::string& name, Tensor t) {
        params_.emplace_back(name, t);
        return t;
    };

    // action tokens start at zero; the positional encoding supplies the
    // only signal at initialisation
    tokens_ = reg("tokens", init.zeros({cfg_.num_tokens, cfg_.token_dim}));

    auto make_te = [&](const std::string& prefix, std::size_t d_in,
                       std::size_t d_e, std::size_t d_out) {
        TEParams te;
        const std::size_t d_s = d_e;
        te.proj_w = reg(prefix + ".proj_w", init.uniform({d_e, d_in}, d_in));
        te.proj_b = reg(prefix + ".proj_b", init.zeros({d_e}));
        te.state_w = reg(prefix + ".state_w", init.uniform({d_s, d_e}, d_e));
        te.mix_w = reg(prefix + ".mix_w", init.uniform({d_s, d_s}, d_s));
        te.mix_b = reg(prefix + ".mix_b", init.zeros({d_s}));
        te.gate_w = reg(prefix + ".gate_w", init.uniform({d_s, d_in}, d_in));
        te.gate_b = reg(prefix + ".gate_b", init.zeros({d_s}));
        te.out_w = reg(prefix + ".out_w", init.uniform({d_out, d_s}, d_s));
        te.out_b = reg(prefix + ".out_b", init.zeros({d_out}));
        return te;
    };

    input_te_ = make_te("input_te", cfg_.feature_dim, cfg_.input_expand_dim,
                        cfg_.hidden_dim);

    const std::size_t d_at = cfg_.token_hidden_dim;
    ge_.in_w = reg("ge.in_w", init.uniform({d_at, cfg_.token_dim},
                                           cfg_.token_dim));
    ge_.in_b = reg("ge.in_b", init.zeros({d_at}));
    for (std::size_t l = 0; l < cfg_.ge_depth; ++l) {
        const std::string prefix = "ge.layer" + std::to_string(l);
        GEParams::Layer layer;
        layer.conv_w =
            reg(prefix + ".conv_w", init.uniform({d_at, d_at, 3}, d_at * 3));
        layer.conv_b = reg(prefix + ".conv_b", init.zeros({d_at}));
        layer.pw_w = reg(prefix + ".pw_w", init.uniform({d_at, d_at}, d_at));
        layer.pw_b = reg(prefix + ".pw_b", init.zeros({d_at}));
        ge_.layers.push_back(layer);
    }

    const std::size_t d_h = cfg_.hidden_dim;
    const std::size_t nq = cfg_.n_qubits;
    for (std::size_t b = 0; b < cfg_.num_blocks; ++b) {
        const std::string prefix = "block" + std::to_string(b);
        TsaBlock block;
        block.te = make_te(prefix + ".te", d_h, 2 * d_h, d_h);
        TCParams& tc = block.tc;
        tc.query_w = reg(prefix + ".tc.query_w", init.uniform({d_h, d_h}, d_h));
        tc.query_b = reg(prefix + ".tc.query_b", init.zeros({d_h}));
        tc.key_w = reg(prefix + ".tc.key_w", init.uniform({d_h, d_at}, d_at));
        tc.key_b = reg(prefix + ".tc.key_b", init.zeros({d_h}));
        tc.value_w =
            reg(prefix + ".tc.value_w", init.uniform({d_h, d_at}, d_at));
        tc.value_b = reg(prefix + ".tc.value_b", init.zeros({d_h}));
        tc.pre_w = reg(prefix + ".tc.pre_w", init.uniform({nq, d_h}, d_h));
        tc.pre_b = reg(prefix + ".tc.pre_b", init.zeros({nq}));
        tc.variant = cfg_.variant;
        tc.qcfg = cfg_.quantum();
        if (cfg_.variant == ModulationVariant::Quantum) {
            tc.theta = reg(prefix + ".tc.theta",
                           init.angles({cfg_.n_qlayers, nq, 3}));
        } else {
            tc.mlp_hidden_w =
                reg(prefix + ".tc.mlp_hidden_w", init.uniform({nq, nq}, nq));
            tc.mlp_hidden_b = reg(prefix + ".tc.mlp_hidden_b", init.zeros({nq}));
            tc.mlp_out_w =
                reg(prefix + ".tc.mlp_out_w", init.uniform({nq, nq}, nq));
            tc.mlp_out_b = reg(prefix + ".tc.mlp_out_b", init.zeros({nq}));
        }
        tc.post_w = reg(prefix + ".tc.post_w", init.uniform({2 * d_h, nq}, nq));
        // identity modulation at the start: gamma ≈ 1, beta ≈ 0
        std::vector<double> post_bias(2 * d_h, 0.0);
        for (std::size_t i = 0; i < d_h; ++i) post_bias[i] = 1.0;
        tc.post_b = reg(prefix + ".tc.post_b",
                        Tensor::from({2 * d_h}, std::move(post_bias), true));
        blocks_.push_back(block);
    }

    frame_head_w_ = reg("frame_head.w",
                        init.uniform({cfg_.num_classes, d_h}, d_h));
    frame_head_b_ = reg("frame_head.b", init.zeros({cfg_.num_classes}));
    token_head_w_ = reg("token_head.w",
                        init.uniform({cfg_.num_classes, d_at}, d_at));
    token_head_b_ = reg("token_head.b", init.zeros({cfg_.num_classes}));
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
}

Tensor Model::parameter(const std::string& name) const {
    for (const auto& [key, t] : params_) {
        if (key == name) return t;
    }
    throw ContractError("unknown parameter: " + name);
}

Tensor Model::action_features() const {
    Tensor xa =
        add(tokens_, positional_encoding(cfg_.num_tokens, cfg_.token_dim));
    return ge_forward(xa, ge_);
}

ModelOutput Model::forward(const Tensor& features) const {
    return forward_with_actions(features, action_features());
}

ModelOutput Model::forward_with_actions(const Tensor& features,
                                        const Tensor& action_feats) const {
    if (features.cols() != cfg_.feature_dim) {
        throw ShapeError("forward: features " + shape_str(features.shape()) +
                         " do not match feature_dim " +
                         std::to_string(cfg_.feature_dim));
    }
    if (features.rows() < 1) {
        throw ContractError("forward: empty video");
    }
    const std::size_t len = features.rows();

    Tensor xf = te_forward(features, input_te_);
    xf = add(xf, positional_encoding(len, cfg_.hidden_dim));

    ModelOutput out;
    for (const TsaBlock& block : blocks_) {
        xf = te_forward(xf, block.te);
        TCOut tc = tc_forward(xf, action_feats, block.tc);
        xf = tc.fused;
        out.maps = tc.maps;
    }
    out.frame_embed = xf;
    out.frame_logits = classify_frames(xf);
    out.token_logits = classify_tokens(action_feats);
    out.action_embed = cfg_.action_embed_source == ActionEmbedSource::GeOutput
                           ? action_feats
                           : tokens_;
    return out;
}

Tensor Model::classify_frames(const Tensor& frame_embed) const {
    return linear(frame_embed, frame_head_w_, frame_head_b_);
}

Tensor Model::classify_tokens(const Tensor& action_feats) const {
    return linear(action_feats, token_head_w_, token_head_b_);
}

std::vector<int> predict_labels(const Tensor& logits) {
    const std::size_t m = logits.rows(), c = logits.cols();
    std::vector<int> labels(m, 0);
    const double* v = logits.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (v[i * c + j] > v[i * c + best]) best = j;
        }
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

// --- checkpoint I/O ---

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

class Reader {
  public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::size_t offset() const { return offset_; }

    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError("checkpoint truncated at byte " +
                              std::to_string(offset_));
        }
        offset_ += n;
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

  private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

} // namespace

void save_checkpoint(const Model& model, std::ostream& out) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const std::string cfg = model.config().to_kv();
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    put_u64(out, model.parameters().size());
    for (const auto& [name, t] : model.parameters()) {
        put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (std::size_t d : t.shape()) put_u64(out, d);
        for (double v : t.values()) put_f64(out, v);
    }
    if (!out) throw FormatError("checkpoint write failed");
}

void save_checkpoint(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open checkpoint for writing: " + path);
    save_checkpoint(model, out);
}

Model load_checkpoint(std::istream& in) {
    Reader r(in);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad checkpoint magic at byte 0");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " +
                          std::to_string(version));
    }
    const std::uint32_t cfg_len = r.u32();
    std::string cfg_text(cfg_len, '\0');
    r.bytes(cfg_text.data(), cfg_len);
    Model model(ModelConfig::from_kv(cfg_text));

    const std::uint64_t n_params = r.u64();
    if (n_params != model.parameters().size()) {
        throw FormatError("checkpoint stores " + std::to_string(n_params) +
                          " tensors, model declares " +
                          std::to_string(model.parameters().size()));
    }
    for (const auto& [name, t] : model.parameters()) {
        const std::uint32_t rank = r.u32();
        Shape shape(rank);
        for (std::uint32_t i = 0; i < rank; ++i) shape[i] = r.u64();
        if (shape != t.shape()) {
            throw FormatError("checkpoint tensor '" + name + "' has shape " +
                              shape_str(shape) + ", expected " +
                              shape_str(t.shape()));
        }
        Tensor dst = t;
        auto vals = dst.values_mut();
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = r.f64();
    }
    return model;
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path);
    return load_checkpoint(in);
}

std::string checkpoint_bytes(const Model& model) {
    std::ostringstream os(std::ios::binary);
    save_checkpoint(model, os);
    return os.str();
}

} // namespace dsa
