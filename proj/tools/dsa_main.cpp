#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "dsa/data.hpp"
#include "dsa/losses.hpp"
#include "dsa/metrics.hpp"
#include "dsa/model.hpp"
#include "dsa/timeline_svg.hpp"
#include "dsa/trainer.hpp"

namespace fs = std::filesystem;
using namespace dsa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct ModelOpts {
    std::size_t hidden = 64;
    std::size_t token_dim = 64;
    std::size_t token_hidden = 64;
    std::size_t tokens = 0; // 0 = derive from the training data
    std::size_t blocks = 3;
    std::size_t qubits = 4;
    std::size_t qlayers = 3;
    std::size_t input_expand = 128;
    std::size_t ge_depth = 10;
    std::string variant = "quantum";
    std::string h_a_source = "ge_output";
    bool ring = false;
    std::uint64_t seed = 1;
};

void add_model_options(CLI::App* cmd, ModelOpts& opts) {
    cmd->add_option("--hidden", opts.hidden, "frame stream width")
        ->capture_default_str();
    cmd->add_option("--token-dim", opts.token_dim, "action token width")
        ->capture_default_str();
    cmd->add_option("--token-hidden", opts.token_hidden,
                    "global encoder output width")
        ->capture_default_str();
    cmd->add_option("--tokens", opts.tokens,
                    "action token count (0 = derive from data)")
        ->capture_default_str();
    cmd->add_option("--blocks", opts.blocks, "stacked TSA blocks")
        ->capture_default_str();
    cmd->add_option("--qubits", opts.qubits, "circuit width")
        ->capture_default_str();
    cmd->add_option("--qlayers", opts.qlayers, "entangling layers")
        ->capture_default_str();
    cmd->add_option("--input-expand", opts.input_expand,
                    "input encoder expansion width")
        ->capture_default_str();
    cmd->add_option("--ge-depth", opts.ge_depth, "global encoder layers")
        ->capture_default_str();
    cmd->add_option("--variant", opts.variant, "modulation head")
        ->check(CLI::IsMember({"quantum", "classical"}))
        ->capture_default_str();
    cmd->add_option("--h-a-source", opts.h_a_source,
                    "action embedding the alignment losses use")
        ->check(CLI::IsMember({"ge_output", "raw_tokens"}))
        ->capture_default_str();
    cmd->add_flag("--ring-entanglement", opts.ring,
                  "close the CNOT chain into a ring");
    cmd->add_option("--seed", opts.seed, "parameter init seed")
        ->capture_default_str();
}

ModelConfig build_config(const ModelOpts& opts, std::size_t feature_dim,
                         std::size_t num_classes, std::size_t tokens) {
    ModelConfig cfg;
    cfg.feature_dim = feature_dim;
    cfg.hidden_dim = opts.hidden;
    cfg.token_dim = opts.token_dim;
    cfg.token_hidden_dim = opts.token_hidden;
    cfg.num_tokens = tokens;
    cfg.num_blocks = opts.blocks;
    cfg.num_classes = num_classes;
    cfg.n_qubits = opts.qubits;
    cfg.n_qlayers = opts.qlayers;
    cfg.input_expand_dim = opts.input_expand;
    cfg.ge_depth = opts.ge_depth;
    cfg.variant = opts.variant == "classical" ? ModulationVariant::Classical
                                              : ModulationVariant::Quantum;
    cfg.action_embed_source = opts.h_a_source == "raw_tokens"
                                  ? ActionEmbedSource::RawTokens
                                  : ActionEmbedSource::GeOutput;
    cfg.ring_entanglement = opts.ring;
    cfg.seed = opts.seed;
    return cfg;
}

struct LossOpts {
    bool ce_f = true, ce_a = true, rel = true, clc = true, cyc = true;
    double temperature = 1.0;
    bool clc_renormalize = true;
};

void add_loss_options(CLI::App* cmd, LossOpts& opts) {
    cmd->add_option("--loss-ce-f", opts.ce_f, "frame cross-entropy (A)")
        ->capture_default_str();
    cmd->add_option("--loss-ce-a", opts.ce_a, "token cross-entropy (B)")
        ->capture_default_str();
    cmd->add_option("--loss-rel", opts.rel, "relational consistency (C)")
        ->capture_default_str();
    cmd->add_option("--loss-clc", opts.clc, "cross-level contrastive (D)")
        ->capture_default_str();
    cmd->add_option("--loss-cyc", opts.cyc, "cycle reconstruction (E)")
        ->capture_default_str();
    cmd->add_option("--temperature", opts.temperature,
                    "contrastive temperature")
        ->capture_default_str();
    cmd->add_option("--clc-renormalize", opts.clc_renormalize,
                    "renormalise contrastive weights per token")
        ->capture_default_str();
}

LossConfig build_loss(const LossOpts& opts) {
    LossConfig cfg;
    cfg.temperature = opts.temperature;
    cfg.clc_renormalize = opts.clc_renormalize;
    cfg.flags = {opts.ce_f, opts.ce_a, opts.rel, opts.clc, opts.cyc};
    return cfg;
}

std::size_t derive_token_count(const std::vector<VideoSample>& videos) {
    // twice the mean segment count, rounded up
    double total = 0.0;
    for (const VideoSample& v : videos) {
        total += static_cast<double>(to_segments(v.labels).size());
    }
    const double mean = total / static_cast<double>(videos.size());
    return static_cast<std::size_t>(std::ceil(mean)) * 2;
}

void check_dataset_against(const ModelConfig& cfg, const Dataset& ds) {
    std::vector<std::string> mismatches;
    if (ds.classes.size() != cfg.num_classes) {
        mismatches.push_back("num_classes: checkpoint " +
                             std::to_string(cfg.num_classes) + " vs dataset " +
                             std::to_string(ds.classes.size()));
    }
    for (const VideoSample& v : ds.videos) {
        if (v.features.cols() != cfg.feature_dim) {
            mismatches.push_back("feature_dim: checkpoint " +
                                 std::to_string(cfg.feature_dim) + " vs " +
                                 v.id + " " +
                                 std::to_string(v.features.cols()));
            break;
        }
    }
    if (!mismatches.empty()) {
        std::string msg = "checkpoint/dataset mismatch:";
        for (const std::string& m : mismatches) msg += "\n  " + m;
        throw ConfigError(msg);
    }
}

// Flat key=value config support: the file's pairs become --key=value tokens
// spliced in right after the subcommand, so explicit command-line flags
// (parsed later under a take-last policy) override file values.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) {
                throw ConfigError("--config expects a file path");
            }
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw FormatError(path + ": expected key=value at line " +
                              std::to_string(line_no));
        }
        tokens.push_back("--" + line);
    }

    // insert after the subcommand token (the first non-option argument)
    auto at = args.begin();
    while (at != args.end() && !at->empty() && (*at)[0] == '-') ++at;
    if (at != args.end()) ++at;
    args.insert(at, tokens.begin(), tokens.end());
    return args;
}

// file values must be overridable by explicit flags appearing later
void take_last_options(CLI::App* cmd) {
    for (CLI::Option* opt : cmd->get_options()) {
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
}

std::vector<std::string> read_label_names(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open label file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw FormatError(path + ": no labels");
    return lines;
}

// --- train ---

struct TrainArgs {
    std::string data;
    std::string split;
    std::string out;
    std::string log;
    ModelOpts model;
    LossOpts loss;
    std::size_t epochs = 200;
    double lr = 1e-4;
    double clip_norm = 0.0;
    std::size_t checkpoint_every = 50;
    std::string checkpoint_dir;
    std::uint64_t shuffle_seed = 1;
    std::size_t progress_every = 10;
};

int run_train(const TrainArgs& args) {
    const std::string split = args.split.empty()
                                  ? (fs::path(args.data) / "splits" /
                                     "train.txt")
                                        .string()
                                  : args.split;
    Dataset ds = load_dataset(args.data, split);
    const std::size_t tokens = args.model.tokens > 0
                                   ? args.model.tokens
                                   : derive_token_count(ds.videos);
    ModelConfig cfg = build_config(args.model, ds.videos[0].features.cols(),
                                   ds.classes.size(), tokens);
    Model model(cfg);

    TrainOptions opts;
    opts.epochs = args.epochs;
    opts.learning_rate = args.lr;
    opts.clip_norm = args.clip_norm;
    opts.shuffle_seed = args.shuffle_seed;
    opts.checkpoint_every = args.checkpoint_every;
    opts.checkpoint_dir = args.checkpoint_dir;
    opts.log_every = args.progress_every;
    opts.loss = build_loss(args.loss);

    std::ofstream log;
    std::ostream* log_ptr = nullptr;
    if (!args.log.empty()) {
        log.open(args.log);
        if (!log) throw FormatError("cannot open log file: " + args.log);
        log_ptr = &log;
    }
    train_model(model, ds.videos, opts, log_ptr, &std::cout);
    save_checkpoint(model, args.out);
    std::cout << "saved checkpoint: " << args.out << "\n";
    return kExitOk;
}

// --- eval ---

struct EvalArgs {
    std::string data;
    std::string split;
    std::string checkpoint;
    std::string csv;
    int ignore_background = -1;
    bool background_acc = false;
    bool gt_as_pred = false;
};

int run_eval(const EvalArgs& args) {
    const std::string split = args.split.empty()
                                  ? (fs::path(args.data) / "splits" /
                                     "test.txt")
                                        .string()
                                  : args.split;
    Dataset ds = load_dataset(args.data, split);
    std::optional<int> ignore;
    if (args.ignore_background >= 0) ignore = args.ignore_background;

    std::optional<Model> model;
    std::optional<Tensor> action_feats;
    if (!args.gt_as_pred) {
        model.emplace(load_checkpoint(args.checkpoint));
        check_dataset_against(model->config(), ds);
        action_feats = model->action_features();
    }

    std::vector<VideoMetrics> rows;
    for (const VideoSample& v : ds.videos) {
        std::vector<int> pred;
        if (args.gt_as_pred) {
            pred = v.labels;
        } else {
            ModelOutput out =
                model->forward_with_actions(v.features, *action_feats);
            pred = predict_labels(out.frame_logits);
        }
        rows.push_back(evaluate_video(v.id, pred, v.labels, ignore));
        if (args.background_acc && ignore) {
            std::cout << v.id << " background acc: "
                      << background_accuracy(pred, v.labels, *ignore) << "\n";
        }
    }
    std::cout << metrics_table(rows);
    if (!args.csv.empty()) {
        std::ofstream out(args.csv);
        if (!out) throw FormatError("cannot open csv file: " + args.csv);
        out << metrics_csv(rows);
    }
    return kExitOk;
}

// --- predict ---

struct PredictArgs {
    std::string data;
    std::string split;
    std::string checkpoint;
    std::string out_dir;
    std::string embeddings;
};

int run_predict(const PredictArgs& args) {
    const std::string split = args.split.empty()
                                  ? (fs::path(args.data) / "splits" /
                                     "test.txt")
                                        .string()
                                  : args.split;
    Dataset ds = load_dataset(args.data, split);
    Model model = load_checkpoint(args.checkpoint);
    check_dataset_against(model.config(), ds);
    fs::create_directories(args.out_dir);

    std::ofstream embed;
    if (!args.embeddings.empty()) {
        embed.open(args.embeddings);
        if (!embed) {
            throw FormatError("cannot open embeddings file: " +
                              args.embeddings);
        }
        embed << "video_id,frame,label";
        for (std::size_t i = 0; i < model.config().hidden_dim; ++i) {
            embed << ",e" << i;
        }
        embed << "\n";
    }

    const Tensor action_feats = model.action_features();
    for (const VideoSample& v : ds.videos) {
        ModelOutput out = model.forward_with_actions(v.features, action_feats);
        const std::vector<int> pred = predict_labels(out.frame_logits);
        save_labels((fs::path(args.out_dir) / (v.id + ".txt")).string(), pred,
                    ds.classes);
        if (embed.is_open()) {
            for (std::size_t t = 0; t < pred.size(); ++t) {
                embed << v.id << ',' << t << ','
                      << ds.classes.name(v.labels[t]);
                for (std::size_t i = 0; i < out.frame_embed.cols(); ++i) {
                    embed << ',' << out.frame_embed.at(t, i);
                }
                embed << "\n";
            }
        }
    }
    std::cout << "wrote predictions for " << ds.videos.size()
              << " videos to " << args.out_dir << "\n";
    return kExitOk;
}

// --- visualize ---

struct VisualizeArgs {
    std::string gt;
    std::string pred;
    std::string mapping;
    std::string out;
};

int run_visualize(const VisualizeArgs& args) {
    ClassMap map;
    if (!args.mapping.empty()) {
        map = ClassMap::load(args.mapping);
    } else {
        // ids by first appearance: ground truth first, then prediction
        std::vector<std::string> names;
        for (const std::string& file : {args.gt, args.pred}) {
            for (const std::string& name : read_label_names(file)) {
                bool known = false;
                for (const std::string& n : names) known = known || n == name;
                if (!known) names.push_back(name);
            }
        }
        map = ClassMap(std::move(names));
    }
    const std::vector<int> gt = load_labels(args.gt, map);
    const std::vector<int> pred = load_labels(args.pred, map);
    const std::string svg = render_timeline_svg(gt, pred, map.names());
    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw FormatError("cannot open output file: " + args.out);
    out << svg;
    std::cout << "wrote " << args.out << "\n";
    return kExitOk;
}

// --- gen-synthetic ---

struct GenArgs {
    std::string out;
    std::size_t videos = 5;
    SyntheticSpec spec;
    std::string split_name = "train";
};

int run_gen(const GenArgs& args) {
    const auto videos = generate_synthetic(args.spec, args.videos);
    write_dataset(args.out, videos, synthetic_class_map(args.spec.num_classes),
                  args.split_name);
    std::cout << "wrote " << videos.size() << " videos to " << args.out
              << "\n";
    return kExitOk;
}

// --- gradcheck ---

struct GradcheckArgs {
    std::size_t frames = 8;
    std::size_t tokens = 2;
    std::size_t hidden = 4;
    std::size_t feature_dim = 6;
    std::size_t classes = 3;
    std::size_t blocks = 1;
    std::size_t qubits = 2;
    std::size_t qlayers = 1;
    std::string variant = "quantum";
    std::uint64_t seed = 1;
    double step = 1e-5;
    double tolerance = 1e-4;
};

int run_gradcheck(const GradcheckArgs& args) {
    ModelConfig cfg;
    cfg.feature_dim = args.feature_dim;
    cfg.hidden_dim = args.hidden;
    cfg.token_dim = args.hidden;
    cfg.token_hidden_dim = args.hidden;
    cfg.num_tokens = args.tokens;
    cfg.num_blocks = args.blocks;
    cfg.num_classes = args.classes;
    cfg.n_qubits = args.qubits;
    cfg.n_qlayers = args.qlayers;
    cfg.input_expand_dim = 2 * args.feature_dim;
    cfg.ge_depth = 2;
    cfg.variant = args.variant == "classical" ? ModulationVariant::Classical
                                              : ModulationVariant::Quantum;
    cfg.seed = args.seed;
    Model model(cfg);

    std::mt19937_64 rng(args.seed + 1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> values(args.frames * args.feature_dim);
    for (double& v : values) v = dist(rng);
    Tensor features =
        Tensor::from({args.frames, args.feature_dim}, std::move(values));
    std::uniform_int_distribution<int> label(0,
                                             static_cast<int>(args.classes) -
                                                 1);
    std::vector<int> frame_labels(args.frames);
    for (int& y : frame_labels) y = label(rng);

    std::vector<Tensor> params;
    for (const auto& [name, t] : model.parameters()) params.push_back(t);
    LossConfig loss;
    auto f = [&]() {
        ModelOutput out = model.forward(features);
        return total_loss(out, frame_labels, loss).total;
    };
    const double err = grad_check(f, params, args.step);
    std::cout << "max relative gradient error: " << err << " over "
              << model.parameter_count() << " parameters\n";
    if (err > args.tolerance) {
        std::cerr << "exceeds tolerance " << args.tolerance << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-stream action segmentation", "dsa"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a model");
    train->add_option("--config", "flat key=value config file");
    train->add_option("--data", train_args.data, "dataset root")->required();
    train->add_option("--split", train_args.split,
                      "split file (default <data>/splits/train.txt)");
    train->add_option("--out", train_args.out, "checkpoint path")->required();
    train->add_option("--log", train_args.log, "training csv path");
    train->add_option("--epochs", train_args.epochs, "training epochs")
        ->capture_default_str();
    train->add_option("--lr", train_args.lr, "learning rate")
        ->capture_default_str();
    train->add_option("--clip-norm", train_args.clip_norm,
                      "global gradient clip (0 = off)")
        ->capture_default_str();
    train->add_option("--checkpoint-every", train_args.checkpoint_every,
                      "checkpoint cadence in epochs (0 = off)")
        ->capture_default_str();
    train->add_option("--checkpoint-dir", train_args.checkpoint_dir,
                      "cadence checkpoint directory");
    train->add_option("--shuffle-seed", train_args.shuffle_seed,
                      "epoch shuffle seed")
        ->capture_default_str();
    train->add_option("--progress-every", train_args.progress_every,
                      "progress print cadence (0 = silent)")
        ->capture_default_str();
    add_model_options(train, train_args.model);
    add_loss_options(train, train_args.loss);

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--config", "flat key=value config file");
    eval->add_option("--data", eval_args.data, "dataset root")->required();
    eval->add_option("--split", eval_args.split,
                     "split file (default <data>/splits/test.txt)");
    eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path");
    eval->add_option("--csv", eval_args.csv, "metrics csv path");
    eval->add_option("--ignore-background", eval_args.ignore_background,
                     "exclude this class id from segment metrics");
    eval->add_flag("--background-acc", eval_args.background_acc,
                   "report accuracy over background frames");
    eval->add_flag("--gt-as-pred", eval_args.gt_as_pred,
                   "score ground truth against itself");

    PredictArgs predict_args;
    CLI::App* predict = app.add_subcommand("predict", "write predictions");
    predict->add_option("--config", "flat key=value config file");
    predict->add_option("--data", predict_args.data, "dataset root")
        ->required();
    predict->add_option("--split", predict_args.split,
                        "split file (default <data>/splits/test.txt)");
    predict->add_option("--checkpoint", predict_args.checkpoint,
                        "checkpoint path")
        ->required();
    predict->add_option("--out-dir", predict_args.out_dir,
                        "prediction directory")
        ->required();
    predict->add_option("--export-embeddings", predict_args.embeddings,
                        "frame embedding csv path");

    VisualizeArgs vis_args;
    CLI::App* visualize =
        app.add_subcommand("visualize", "render a timeline svg");
    visualize->add_option("--gt", vis_args.gt, "ground-truth label file")
        ->required();
    visualize->add_option("--pred", vis_args.pred, "prediction label file")
        ->required();
    visualize->add_option("--mapping", vis_args.mapping,
                          "class map (default: infer from the files)");
    visualize->add_option("--out", vis_args.out, "output svg path")
        ->required();

    GenArgs gen_args;
    CLI::App* gen =
        app.add_subcommand("gen-synthetic", "generate a synthetic dataset");
    gen->add_option("--config", "flat key=value config file");
    gen->add_option("--out", gen_args.out, "dataset root")->required();
    gen->add_option("--videos", gen_args.videos, "video count")
        ->capture_default_str();
    gen->add_option("--classes", gen_args.spec.num_classes, "class count")
        ->capture_default_str();
    gen->add_option("--segments", gen_args.spec.segments_per_video,
                    "segments per video")
        ->capture_default_str();
    gen->add_option("--min-dur", gen_args.spec.min_duration,
                    "min segment frames")
        ->capture_default_str();
    gen->add_option("--max-dur", gen_args.spec.max_duration,
                    "max segment frames")
        ->capture_default_str();
    gen->add_option("--feature-dim", gen_args.spec.feature_dim,
                    "feature width")
        ->capture_default_str();
    gen->add_option("--noise", gen_args.spec.noise_sigma, "feature noise")
        ->capture_default_str();
    gen->add_option("--seed", gen_args.spec.seed, "generator seed")
        ->capture_default_str();
    gen->add_option("--split-name", gen_args.split_name, "split file name")
        ->capture_default_str();

    GradcheckArgs gc_args;
    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "finite-difference check of the full loss gradient");
    gradcheck->add_option("--frames", gc_args.frames, "video length")
        ->capture_default_str();
    gradcheck->add_option("--tokens", gc_args.tokens, "token count")
        ->capture_default_str();
    gradcheck->add_option("--hidden", gc_args.hidden, "hidden width")
        ->capture_default_str();
    gradcheck->add_option("--feature-dim", gc_args.feature_dim,
                          "input feature width")
        ->capture_default_str();
    gradcheck->add_option("--classes", gc_args.classes, "class count")
        ->capture_default_str();
    gradcheck->add_option("--blocks", gc_args.blocks, "TSA blocks")
        ->capture_default_str();
    gradcheck->add_option("--qubits", gc_args.qubits, "circuit width")
        ->capture_default_str();
    gradcheck->add_option("--qlayers", gc_args.qlayers, "entangling layers")
        ->capture_default_str();
    gradcheck->add_option("--variant", gc_args.variant, "modulation head")
        ->check(CLI::IsMember({"quantum", "classical"}))
        ->capture_default_str();
    gradcheck->add_option("--seed", gc_args.seed, "seed")
        ->capture_default_str();
    gradcheck->add_option("--step", gc_args.step, "finite-difference step")
        ->capture_default_str();
    gradcheck->add_option("--tol", gc_args.tolerance, "pass tolerance")
        ->capture_default_str();

    for (CLI::App* sub : {train, eval, predict, visualize, gen, gradcheck}) {
        take_last_options(sub);
    }

    std::vector<std::string> args;
    try {
        args = expand_config_args(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed()) return run_train(train_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (predict->parsed()) return run_predict(predict_args);
        if (visualize->parsed()) return run_visualize(vis_args);
        if (gen->parsed()) return run_gen(gen_args);
        if (gradcheck->parsed()) return run_gradcheck(gc_args);
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
