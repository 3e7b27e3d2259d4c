// machan: command-line driver for the attention-LSTM popularity pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "machan/checkpoint.hpp"
#include "machan/evaluation.hpp"
#include "machan/kernels.hpp"
#include "machan/labels.hpp"
#include "machan/pooling.hpp"
#include "machan/pot.hpp"
#include "machan/svr.hpp"
#include "machan/synth.hpp"
#include "machan/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace machan;

namespace {

json read_json_file(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }
}

void echo(const std::string &command, const json &resolved) {
    std::cout << "config " << json{{"command", command}, {"resolved", resolved}}.dump() << std::endl;
}

std::array<bool, kChannelCount> parse_channels(const std::string &spec) {
    std::array<bool, kChannelCount> use{};
    if (spec.empty()) throw std::invalid_argument("--channels needs at least one of f, p, c");
    for (char ch : spec) {
        switch (ch) {
        case 'f': use[0] = true; break;
        case 'p': use[1] = true; break;
        case 'c': use[2] = true; break;
        case ',': break;
        default: throw std::invalid_argument(std::string("unknown channel '") + ch + "'; use f, p, c");
        }
    }
    return use;
}

std::string channels_text(const std::array<bool, kChannelCount> &use) {
    std::string s;
    if (use[0]) s += 'f';
    if (use[1]) s += 'p';
    if (use[2]) s += 'c';
    return s;
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
    std::string config, out;
    SynthConfig cfg;
    std::size_t frames = 0;
};

SynthConfig synth_config_from_json(const json &j) {
    SynthConfig c;
    for (const auto &[key, v] : j.items()) {
        if (key == "videos") c.videos = v.get<std::size_t>();
        else if (key == "t_min") c.t_min = v.get<std::size_t>();
        else if (key == "t_max") c.t_max = v.get<std::size_t>();
        else if (key == "dims") c.dims = v.get<ChannelDims>();
        else if (key == "segment_min") c.segment_min = v.get<std::size_t>();
        else if (key == "segment_max") c.segment_max = v.get<std::size_t>();
        else if (key == "marker") c.marker = v.get<double>();
        else if (key == "signal") c.signal = v.get<double>();
        else if (key == "sigma") c.sigma = v.get<double>();
        else if (key == "readout") c.readout = v.get<std::vector<double>>();
        else if (key == "absent_prob") c.absent_prob = v.get<double>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else throw std::invalid_argument("unknown synth config key " + key);
    }
    return c;
}

json synth_config_to_json(const SynthConfig &c) {
    return {{"videos", c.videos},           {"t_min", c.t_min},   {"t_max", c.t_max},
            {"dims", c.dims},               {"segment_min", c.segment_min},
            {"segment_max", c.segment_max}, {"marker", c.marker}, {"signal", c.signal},
            {"sigma", c.sigma},             {"readout", c.readout},
            {"absent_prob", c.absent_prob}, {"seed", c.seed}};
}

// --- train / eval -------------------------------------------------------------

struct ModelArgs {
    std::size_t align_dim = 1024, attention_dim = 128, state_dim = 50;
    std::string fusion = "hard", head = "last", channels = "fpc";
};

void add_model_flags(CLI::App *cmd, ModelArgs &m) {
    cmd->add_option("--fusion", m.fusion, "hard, hard-surrogate, soft, concat or aligned-concat")
        ->check(CLI::IsMember({"hard", "hard-surrogate", "soft", "concat", "aligned-concat"}));
    cmd->add_option("--channels", m.channels, "channel subset, e.g. fpc, fp, c");
    cmd->add_option("--align-dim", m.align_dim, "aligned space size m");
    cmd->add_option("--attention-dim", m.attention_dim, "attention hidden size n");
    cmd->add_option("--state-dim", m.state_dim, "LSTM state size");
    cmd->add_option("--head", m.head, "last or mean")->check(CLI::IsMember({"last", "mean"}));
}

ModelConfig model_config(const ModelArgs &m, const ChannelDims &dims) {
    ModelConfig c;
    c.input_dims = dims;
    c.align_dim = m.align_dim;
    c.attention_dim = m.attention_dim;
    c.state_dim = m.state_dim;
    c.fusion = parse_fusion(m.fusion);
    c.head = parse_head(m.head);
    c.channels = parse_channels(m.channels);
    c.validate();
    return c;
}

std::vector<VolumeSequence> load_dataset(const std::string &path, const std::string &labels) {
    auto seqs = load_volume_cache(path);
    if (!labels.empty()) apply_labels(seqs, load_labels(labels));
    if (seqs.empty()) throw std::invalid_argument(path + " holds no sequences");
    return seqs;
}

FeatureMatrix pot_matrix(std::span<const VolumeSequence> seqs, const PotConfig &cfg,
                         const std::array<bool, kChannelCount> &use) {
    FeatureMatrix x;
    for (const auto &s : seqs) {
        try {
            x.push_back(pot_features(s.channels, cfg, use).values);
        } catch (const std::invalid_argument &e) {
            throw std::invalid_argument(s.id + ": " + e.what());
        }
    }
    return x;
}

struct SvrArgs {
    SvrConfig cfg;
    std::size_t levels = 5;
    std::string grad = "sums";
};

void add_svr_flags(CLI::App *cmd, SvrArgs &s) {
    cmd->add_option("--svr-epsilon", s.cfg.epsilon, "SVR insensitive-zone width");
    cmd->add_option("--svr-lambda", s.cfg.lambda, "SVR L2 weight");
    cmd->add_option("--svr-steps", s.cfg.steps, "SVR subgradient steps");
    cmd->add_option("--svr-lr", s.cfg.learning_rate, "SVR base step size");
    cmd->add_option("--levels", s.levels, "PoT pyramid levels");
    cmd->add_option("--grad", s.grad, "PoT gradient pooling: sums or histogram")
        ->check(CLI::IsMember({"sums", "histogram"}));
}

PotConfig pot_config(const SvrArgs &s) {
    PotConfig c;
    c.levels = s.levels;
    c.grad = s.grad == "histogram" ? GradPooling::histogram : GradPooling::sums;
    return c;
}

struct TrainArgs {
    std::string data, labels, config, out = "runs", model = "lstm";
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::optional<std::size_t> epochs, warmup;
    double train_frac = 0.6, val_frac = 0.2, test_frac = 0.2;
    ModelArgs m;
    SvrArgs svr;
};

int run_train(const TrainArgs &a, CLI::App *cmd) {
    TrainConfig tc;
    if (!a.config.empty()) tc = train_config_from_json(read_json_file(a.config));
    if (cmd->count("--seed") || a.config.empty()) tc.seed = a.seed;
    if (a.epochs) tc.epochs = *a.epochs;
    if (a.warmup) tc.soft_warmup_epochs = *a.warmup;
    tc.validate();
    if (a.runs == 0) throw std::invalid_argument("--runs must be positive");

    auto seqs = load_dataset(a.data, a.labels);
    const bool svr = a.model == "svr";
    ModelConfig mc;
    if (!svr) mc = model_config(a.m, seqs.front().dims());
    const auto use = parse_channels(a.m.channels);

    json resolved = {{"data", a.data},   {"model", a.model}, {"runs", a.runs}, {"out", a.out},
                     {"split", {{"train", a.train_frac}, {"val", a.val_frac}, {"test", a.test_frac}}},
                     {"train", train_config_to_json(tc)}};
    if (svr) {
        resolved["svr"] = {{"epsilon", a.svr.cfg.epsilon}, {"lambda", a.svr.cfg.lambda},
                           {"steps", a.svr.cfg.steps},     {"learning_rate", a.svr.cfg.learning_rate},
                           {"levels", a.svr.levels},       {"grad", a.svr.grad},
                           {"channels", channels_text(use)}};
    } else {
        resolved["model_config"] = config_to_json(mc);
    }
    echo("train", resolved);

    std::vector<EvalReport> reports;
    fs::create_directories(a.out);
    std::ofstream lines(fs::path(a.out) / "reports.jsonl", std::ios::trunc);
    for (std::size_t r = 0; r < a.runs; ++r) {
        const std::uint64_t run_seed = tc.seed + r;
        SplitSpec spec{run_seed, a.train_frac, a.val_frac, a.test_frac};
        auto split = split_dataset(seqs, spec);
        auto norm = Normalizer::fit(labels_of(split.train));
        auto train_set = normalized(split.train, norm);
        auto val_set = normalized(split.val, norm);
        auto test_set = normalized(split.test, norm);

        const fs::path dir = fs::path(a.out) / ("run-" + std::to_string(r));
        fs::create_directories(dir);
        json run_json = {{"run", r}, {"seed", run_seed}};

        if (svr) {
            auto pc = pot_config(a.svr);
            SvrConfig sc = a.svr.cfg;
            sc.seed = run_seed;
            auto params = svr_train(pot_matrix(train_set, pc, use), labels_of(train_set), sc);
            save_svr(dir / "model.svr", params);
            std::vector<double> y_hat;
            for (const auto &x : pot_matrix(test_set, pc, use)) y_hat.push_back(svr_predict(params, x));
            reports.push_back(evaluate_predictions(labels_of(test_set), y_hat, "test", "svr", run_seed));
        } else {
            TrainConfig run_cfg = tc;
            run_cfg.seed = run_seed;
            auto result = train(train_set, val_set, mc, run_cfg, [&](const EpochStats &s) {
                std::cout << "run " << r << " epoch " << s.epoch << " train_mse " << s.train_loss << " val_mse "
                          << s.val_loss << '\n';
            });
            save_checkpoint(dir / "model.ckpt", result.params, norm);
            run_json["train_report"] = result.report.to_json();
            reports.push_back(evaluate(result.params, test_set, "test", a.m.fusion, run_seed, run_cfg.execution));
        }
        run_json["test"] = reports.back().to_json();
        lines << reports.back().to_json().dump() << '\n' << std::flush;
        std::ofstream(dir / "report.json") << run_json.dump(2) << '\n';
    }

    auto agg = aggregate(reports);
    std::cout << summary_table(agg);
    json summary = {{"mean_mse", agg.mean_mse}, {"runs", json::array()}};
    summary["mean_rho"] = agg.mean_rho ? json(*agg.mean_rho) : json(nullptr);
    for (const auto &rep : reports) summary["runs"].push_back(rep.to_json());
    std::ofstream(fs::path(a.out) / "summary.json") << summary.dump(2) << '\n';
    return 0;
}

struct EvalArgs {
    std::string checkpoint, svr_model, data, labels, split = "all";
    std::uint64_t seed = 0;
    std::string channels = "fpc";
    SvrArgs svr;
};

int run_eval(const EvalArgs &a) {
    auto seqs = load_dataset(a.data, a.labels);
    if (!a.svr_model.empty()) {
        echo("eval", {{"svr_model", a.svr_model}, {"data", a.data}, {"split", a.split}, {"levels", a.svr.levels},
                      {"grad", a.svr.grad}, {"channels", a.channels}});
        auto params = load_svr(a.svr_model);
        std::vector<double> y, y_hat;
        for (const auto &x : pot_matrix(seqs, pot_config(a.svr), parse_channels(a.channels)))
            y_hat.push_back(svr_predict(params, x));
        y = labels_of(seqs);
        std::cout << evaluate_predictions(y, y_hat, a.split, "svr", a.seed).to_json().dump() << '\n';
        return 0;
    }
    if (a.checkpoint.empty()) throw std::invalid_argument("eval needs --checkpoint or --svr-model");
    auto ckpt = load_checkpoint(a.checkpoint);
    echo("eval", {{"checkpoint", a.checkpoint}, {"data", a.data}, {"split", a.split},
                  {"model_config", config_to_json(ckpt.params.config)}});
    if (ckpt.normalizer) seqs = normalized(seqs, *ckpt.normalizer);
    auto report = evaluate(ckpt.params, seqs, a.split, to_string(ckpt.params.config.fusion), a.seed,
                           Execution::parallel);
    std::cout << report.to_json().dump() << '\n';
    return 0;
}

int run_trace(const std::string &checkpoint, const std::string &data, const std::string &id,
              const std::string &out) {
    auto ckpt = load_checkpoint(checkpoint);
    echo("trace", {{"checkpoint", checkpoint}, {"data", data}, {"id", id}, {"out", out}});
    auto seqs = load_volume_cache(data);
    auto it = std::find_if(seqs.begin(), seqs.end(), [&](const VolumeSequence &s) { return s.id == id; });
    if (it == seqs.end()) throw std::invalid_argument("no video with id " + id + " in " + data);
    auto pred = forward(*it, ckpt.params);

    std::ofstream os(out, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + out);
    os << "t,a_face,a_pose,a_hat,selected,dropped\n";
    os << std::setprecision(17);
    for (std::size_t t = 0; t < pred.trace.steps.size(); ++t) {
        const auto &s = pred.trace.steps[t];
        if (s.dropped) {
            os << t << ",0,0,0,-1,1\n";
            continue;
        }
        os << t << ',' << s.attention[0] << ',' << s.attention[1] << ',' << s.attention[2] << ',' << s.selected
           << ",0\n";
    }
    std::cout << "wrote " << pred.trace.steps.size() << " rows to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    apply_thread_limit_from_env();

    CLI::App app{"machan: attention-gated LSTM popularity regression"};
    app.require_subcommand(1);

    // synth
    SynthArgs sa;
    auto *synth = app.add_subcommand("synth", "generate a synthetic channel-switching dataset");
    synth->add_option("--config", sa.config, "flat JSON synth config");
    synth->add_option("--out", sa.out, "output directory")->required();
    synth->add_option("--videos", sa.cfg.videos, "number of videos");
    synth->add_option("--t-min", sa.cfg.t_min, "shortest video in steps");
    synth->add_option("--t-max", sa.cfg.t_max, "longest video in steps");
    synth->add_option("--sigma", sa.cfg.sigma, "noise std");
    synth->add_option("--absent-prob", sa.cfg.absent_prob, "chance an inactive channel is absent at a step");
    synth->add_option("--seed", sa.cfg.seed, "generator seed");
    synth->add_option("--frames", sa.frames, "also write frames.jsonl, repeating each step this many times");

    // pool
    std::string pool_in, pool_out, pool_labels;
    double pool_fps = 5.0;
    VolumeConfig vc;
    auto *pool = app.add_subcommand("pool", "downsample frame records and pool them into volumes");
    pool->add_option("--in", pool_in, "frame-level JSONL")->required();
    pool->add_option("--out", pool_out, "volume cache JSONL")->required();
    pool->add_option("--labels", pool_labels, "JSONL of {id, y} overriding likes/views");
    pool->add_option("--fps", pool_fps, "target frame rate");
    pool->add_option("--window", vc.window, "frames per volume");
    pool->add_option("--stride", vc.stride, "frames between volume starts");

    // pot
    std::string pot_in, pot_out, pot_labels, pot_channels = "fpc";
    SvrArgs pot_args;
    auto *pot = app.add_subcommand("pot", "compute pooled time series features from a volume cache");
    pot->add_option("--in", pot_in, "volume cache JSONL")->required();
    pot->add_option("--out", pot_out, "feature JSONL")->required();
    pot->add_option("--labels", pot_labels, "JSONL of {id, y}");
    pot->add_option("--channels", pot_channels, "channel subset");
    pot->add_option("--levels", pot_args.levels, "pyramid levels");
    pot->add_option("--grad", pot_args.grad, "sums or histogram")->check(CLI::IsMember({"sums", "histogram"}));

    // split
    std::string split_in, split_out;
    SplitSpec split_spec;
    auto *split = app.add_subcommand("split", "seeded train/val/test split of a volume cache");
    split->add_option("--in", split_in, "volume cache JSONL")->required();
    split->add_option("--out", split_out, "output directory")->required();
    split->add_option("--seed", split_spec.seed, "shuffle seed");
    split->add_option("--train", split_spec.train, "train fraction");
    split->add_option("--val", split_spec.val, "val fraction");
    split->add_option("--test", split_spec.test, "test fraction");

    // train
    TrainArgs ta;
    auto *trn = app.add_subcommand("train", "train over seeded random splits and report test metrics");
    trn->add_option("--data", ta.data, "volume cache JSONL")->required();
    trn->add_option("--labels", ta.labels, "JSONL of {id, y}");
    trn->add_option("--config", ta.config, "flat JSON training config");
    trn->add_option("--out", ta.out, "output directory");
    trn->add_option("--seed", ta.seed, "base seed; run r uses seed + r");
    trn->add_option("--runs", ta.runs, "number of random splits");
    trn->add_option("--epochs", ta.epochs, "override epochs");
    trn->add_option("--warmup", ta.warmup, "override soft warm-up epochs");
    trn->add_option("--model", ta.model, "lstm or svr")->check(CLI::IsMember({"lstm", "svr"}));
    trn->add_option("--train-frac", ta.train_frac, "train fraction");
    trn->add_option("--val-frac", ta.val_frac, "val fraction");
    trn->add_option("--test-frac", ta.test_frac, "test fraction");
    add_model_flags(trn, ta.m);
    add_svr_flags(trn, ta.svr);

    // eval
    EvalArgs ea;
    auto *ev = app.add_subcommand("eval", "evaluate a checkpoint or SVR model on a dataset");
    ev->add_option("--checkpoint", ea.checkpoint, "LSTM checkpoint");
    ev->add_option("--svr-model", ea.svr_model, "SVR model file");
    ev->add_option("--data", ea.data, "volume cache JSONL")->required();
    ev->add_option("--labels", ea.labels, "JSONL of {id, y}");
    ev->add_option("--split", ea.split, "split name for the report");
    ev->add_option("--seed", ea.seed, "seed recorded in the report");
    ev->add_option("--channels", ea.channels, "SVR channel subset");
    ev->add_option("--levels", ea.svr.levels, "SVR pyramid levels");
    ev->add_option("--grad", ea.svr.grad, "SVR gradient pooling")->check(CLI::IsMember({"sums", "histogram"}));

    // trace
    std::string tr_ckpt, tr_data, tr_id, tr_out;
    auto *tr = app.add_subcommand("trace", "export one video's attention timeline as CSV");
    tr->add_option("--checkpoint", tr_ckpt, "LSTM checkpoint")->required();
    tr->add_option("--data", tr_data, "volume cache JSONL")->required();
    tr->add_option("--id", tr_id, "video id")->required();
    tr->add_option("--out", tr_out, "CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        if (code != 0 && !e.get_name().empty() && e.get_name() != "CallForHelp") std::cerr << app.help();
        return code;
    }

    try {
        if (*synth) {
            SynthConfig cfg = sa.cfg;
            if (!sa.config.empty()) {
                cfg = synth_config_from_json(read_json_file(sa.config));
                for (auto *opt : synth->get_options()) {
                    const auto name = opt->get_name();
                    if (!opt->count() || name == "--config" || name == "--out" || name == "--frames") continue;
                    if (name == "--videos") cfg.videos = sa.cfg.videos;
                    else if (name == "--t-min") cfg.t_min = sa.cfg.t_min;
                    else if (name == "--t-max") cfg.t_max = sa.cfg.t_max;
                    else if (name == "--sigma") cfg.sigma = sa.cfg.sigma;
                    else if (name == "--absent-prob") cfg.absent_prob = sa.cfg.absent_prob;
                    else if (name == "--seed") cfg.seed = sa.cfg.seed;
                }
            }
            cfg.validate();
            echo("synth", {{"out", sa.out}, {"frames", sa.frames}, {"synth", synth_config_to_json(cfg)}});
            auto data = generate(cfg);
            write_synth(sa.out, data, sa.frames);
            std::cout << "wrote " << data.sequences.size() << " videos to " << sa.out << '\n';
        } else if (*pool) {
            echo("pool", {{"in", pool_in}, {"out", pool_out}, {"labels", pool_labels}, {"fps", pool_fps},
                          {"window", vc.window}, {"stride", vc.stride}});
            auto records = load_records(pool_in);
            auto seqs = pool_all(records, pool_fps, vc, Execution::parallel);
            if (!pool_labels.empty()) apply_labels(seqs, load_labels(pool_labels));
            save_volume_cache(pool_out, seqs);
            std::cout << "pooled " << seqs.size() << " videos into " << pool_out << '\n';
        } else if (*pot) {
            auto pc = pot_config(pot_args);
            auto use = parse_channels(pot_channels);
            echo("pot", {{"in", pot_in}, {"out", pot_out}, {"levels", pc.levels}, {"grad", pot_args.grad},
                         {"channels", channels_text(use)}});
            auto seqs = load_dataset(pot_in, pot_labels);
            auto x = pot_matrix(seqs, pc, use);
            std::ofstream os(pot_out, std::ios::trunc);
            if (!os) throw std::runtime_error("cannot write " + pot_out);
            for (std::size_t i = 0; i < seqs.size(); ++i)
                os << json{{"id", seqs[i].id}, {"y", seqs[i].y}, {"features", x[i]}}.dump() << '\n';
            std::cout << "wrote " << seqs.size() << " feature vectors of length " << (x.empty() ? 0 : x[0].size())
                      << " to " << pot_out << '\n';
        } else if (*split) {
            split_spec.validate();
            echo("split", {{"in", split_in}, {"out", split_out}, {"seed", split_spec.seed},
                           {"train", split_spec.train}, {"val", split_spec.val}, {"test", split_spec.test}});
            auto seqs = load_volume_cache(split_in);
            auto idx = split_indices(seqs.size(), split_spec);
            auto parts = split_by_indices(seqs, idx);
            fs::create_directories(split_out);
            save_volume_cache(fs::path(split_out) / "train.jsonl", parts.train);
            save_volume_cache(fs::path(split_out) / "val.jsonl", parts.val);
            save_volume_cache(fs::path(split_out) / "test.jsonl", parts.test);
            std::ofstream(fs::path(split_out) / "split.json")
                << json{{"seed", split_spec.seed}, {"train", idx.train}, {"val", idx.val}, {"test", idx.test}}.dump()
                << '\n';
            std::cout << "split " << seqs.size() << " videos: " << idx.train.size() << " train, " << idx.val.size()
                      << " val, " << idx.test.size() << " test\n";
        } else if (*trn) {
            return run_train(ta, trn);
        } else if (*ev) {
            ea.channels = ea.channels.empty() ? "fpc" : ea.channels;
            return run_eval(ea);
        } else if (*tr) {
            return run_trace(tr_ckpt, tr_data, tr_id, tr_out);
        }
    } catch (const TrainingDiverged &e) {
        std::cerr << "machan train: " << e.what() << " after " << e.report().updates << " updates\n";
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "machan " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
        return 2;
    }
    return 0;
}
