#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "depthkit/datapipe.hpp"
#include "depthkit/gradcheck_suite.hpp"
#include "depthkit/optim.hpp"

namespace fs = std::filesystem;
using namespace dk;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct SizeArg {
    int h = 0, w = 0;
};

SizeArg parse_size(const std::string& s) {
    SizeArg out;
    const auto x = s.find('x');
    if (x == std::string::npos) throw ValueError("size must look like 32x32, got '" + s + "'");
    try {
        out.h = std::stoi(s.substr(0, x));
        out.w = std::stoi(s.substr(x + 1));
    } catch (const std::exception&) {
        throw ValueError("size must look like 32x32, got '" + s + "'");
    }
    if (out.h < 1 || out.w < 1) throw ValueError("size components must be positive");
    return out;
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
}

// the manifest lands on disk before any heavy work starts
void write_manifest(const std::string& out, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
    ensure_out_dir(out);
    const auto path = fs::path(out) / "manifest.txt";
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write manifest '" + path.string() + "'");
    os << "command=" << command << "\n";
    for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
    os.flush();
    if (!os) throw IoError("manifest write failed");
}

// shared dataset selection: an on-disk directory or synthetic parameters
struct DataArgs {
    std::string data_dir;
    int synth_count = 0;
    std::string size_str;
    int shapes = 3;
    std::uint64_t synth_seed = 7;

    void add_options(CLI::App* cmd) {
        auto* d = cmd->add_option("--data", data_dir, "dataset directory (rgb/ + depth/)");
        auto* s = cmd->add_option("--synth-count", synth_count,
                                  "generate a synthetic dataset with this many samples");
        cmd->add_option("--size", size_str,
                        "sample size HxW (synthetic generation size, or resample target)");
        cmd->add_option("--shapes", shapes, "rectangles per synthetic scene");
        cmd->add_option("--synth-seed", synth_seed, "seed for the synthetic dataset");
        d->excludes(s);
        s->excludes(d);
    }

    std::vector<SamplePair> load() const {
        if (!data_dir.empty()) {
            auto set = load_dataset(data_dir);
            if (!size_str.empty()) {
                const SizeArg sz = parse_size(size_str);
                for (auto& s : set) {
                    s.rgb = resize_tensor(s.rgb, sz.h, sz.w);
                    s.depth = resize_tensor(s.depth, sz.h, sz.w);
                }
            }
            return set;
        }
        if (synth_count < 1)
            throw ValueError("no dataset: pass --data DIR or --synth-count N (with --size)");
        const SizeArg sz = parse_size(size_str.empty() ? "32x32" : size_str);
        return synth_dataset(synth_seed, synth_count, sz.h, sz.w, shapes);
    }

    std::vector<std::pair<std::string, std::string>> manifest() const {
        return {{"data", data_dir},
                {"synth_count", std::to_string(synth_count)},
                {"size", size_str.empty() ? "(native)" : size_str},
                {"shapes", std::to_string(shapes)},
                {"synth_seed", std::to_string(synth_seed)}};
    }
};

ModelConfig preset_config(const std::string& preset, int h, int w) {
    if (preset == "desk") return ModelConfig::desk(h, w);
    if (preset == "paper") return ModelConfig::paper(h, w);
    throw ValueError("unknown preset '" + preset + "' (expected desk or paper)");
}

void write_history(const std::string& out, const std::vector<LossBreakdown>& history) {
    const auto path = fs::path(out) / "history.txt";
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path.string() + "'");
    os << "# iteration depth grad ssim total\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        os << (i + 1) << " " << fmt(history[i].depth) << " " << fmt(history[i].grad) << " "
           << fmt(history[i].ssim) << " " << fmt(history[i].total) << "\n";
}

void write_eval_report(const std::string& out, const EvalResult& res) {
    {
        std::ofstream os(fs::path(out) / "report.txt", std::ios::trunc);
        os << res.metrics.to_text();
        os << "loss_depth=" << fmt(res.mean_loss.depth) << "\n"
           << "loss_grad=" << fmt(res.mean_loss.grad) << "\n"
           << "loss_ssim=" << fmt(res.mean_loss.ssim) << "\n"
           << "loss_total=" << fmt(res.mean_loss.total) << "\n"
           << "seconds_per_sample=" << fmt(res.seconds_per_sample) << "\n";
    }
    {
        std::ofstream os(fs::path(out) / "report.csv", std::ios::trunc);
        os << MetricsReport::csv_header() << "\n" << res.metrics.to_csv_row() << "\n";
    }
}

// ---- commands ----

int cmd_synth(std::uint64_t seed, int count, const std::string& size_str, int shapes,
              const std::string& out) {
    const SizeArg sz = parse_size(size_str);
    write_manifest(out, "synth",
                   {{"seed", std::to_string(seed)},
                    {"count", std::to_string(count)},
                    {"size", size_str},
                    {"shapes", std::to_string(shapes)}});
    auto set = synth_dataset(seed, count, sz.h, sz.w, shapes);
    save_dataset(set, out);
    std::cout << "wrote " << set.size() << " sample pairs under " << out << "\n";
    return 0;
}

int cmd_train(const DataArgs& data_args, const std::string& preset, TrainConfig cfg,
              const std::string& out) {
    auto data = data_args.load();
    const Shape s = data.at(0).rgb.shape();
    const ModelConfig mc = preset_config(preset, s.h, s.w);
    mc.validate();
    cfg.validate();

    auto kv = data_args.manifest();
    kv.insert(kv.end(), {{"preset", preset},
                         {"input", std::to_string(s.h) + "x" + std::to_string(s.w)},
                         {"iterations", std::to_string(cfg.iterations)},
                         {"batch_size", std::to_string(cfg.batch_size)},
                         {"lr", fmt(cfg.lr)},
                         {"beta1", fmt(cfg.beta1)},
                         {"beta2", fmt(cfg.beta2)},
                         {"eps", fmt(cfg.eps)},
                         {"w1", fmt(cfg.weights.w1)},
                         {"w2", fmt(cfg.weights.w2)},
                         {"w3", fmt(cfg.weights.w3)},
                         {"val_split", fmt(cfg.val_split)},
                         {"augment_hflip", cfg.augment_hflip ? "1" : "0"},
                         {"seed", std::to_string(cfg.seed)}});
    write_manifest(out, "train", kv);

    auto [train_set, val_set] = split_dataset(data, cfg.val_split);
    if (train_set.empty()) throw ValueError("train: empty training split");

    Model<float> model(mc, cfg.seed);
    auto result = train(model, train_set, cfg);
    write_history(out, result.history);
    save_checkpoint(model, (fs::path(out) / "checkpoint.dfkt").string());

    const double ratio = result.history.back().total / result.history.front().total;
    std::cout << "initial_loss=" << fmt(result.history.front().total)
              << " final_loss=" << fmt(result.history.back().total)
              << " final_initial_ratio=" << fmt(ratio) << "\n";

    if (!val_set.empty()) {
        auto ev = evaluate(model, val_set, cfg.weights);
        write_eval_report(out, ev);
        std::cout << "val_rmse=" << fmt(ev.metrics.rmse)
                  << " val_delta1=" << fmt(ev.metrics.delta1) << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& checkpoint, const DataArgs& data_args, const LossWeights& w,
             const std::string& out) {
    auto kv = data_args.manifest();
    kv.insert(kv.end(), {{"checkpoint", checkpoint},
                         {"w1", fmt(w.w1)},
                         {"w2", fmt(w.w2)},
                         {"w3", fmt(w.w3)}});
    write_manifest(out, "eval", kv);

    auto model = load_checkpoint(checkpoint);
    auto data = data_args.load();
    auto res = evaluate(model, data, w);
    write_eval_report(out, res);
    std::cout << res.metrics.to_text();
    std::cout << "seconds_per_sample=" << fmt(res.seconds_per_sample) << "\n";
    return 0;
}

int cmd_tune(const std::string& checkpoint, const DataArgs& data_args, double step, double floor,
             int tune_iters, int batch, double lr, double val_split, std::uint64_t seed,
             const std::string& out) {
    auto kv = data_args.manifest();
    kv.insert(kv.end(), {{"checkpoint", checkpoint},
                         {"step", fmt(step)},
                         {"floor", fmt(floor)},
                         {"tune_iters", std::to_string(tune_iters)},
                         {"batch_size", std::to_string(batch)},
                         {"lr", fmt(lr)},
                         {"val_split", fmt(val_split)},
                         {"seed", std::to_string(seed)}});
    write_manifest(out, "tune", kv);

    auto data = data_args.load();
    auto [train_set, val_set] = split_dataset(data, val_split);
    if (train_set.empty() || val_set.empty())
        throw ValueError("tune: needs both training and validation samples");

    // one candidate evaluation = fine-tune a fresh copy of the checkpointed
    // model under the candidate weights, then read the validation RMSE
    auto evaluator = [&](const LossWeights& w) {
        Model<float> model = load_checkpoint(checkpoint);
        TrainConfig cfg;
        cfg.iterations = tune_iters;
        cfg.batch_size = batch;
        cfg.lr = lr;
        cfg.seed = seed;
        cfg.weights = w;
        cfg.val_split = 0.0;
        train(model, train_set, cfg);
        return evaluate(model, val_set, w).metrics.rmse;
    };

    auto res = tune_weights(evaluator, step, floor);

    {
        std::ofstream os(fs::path(out) / "tune_trace.txt", std::ios::trunc);
        os << "# call w1 w2 w3 score accepted weight_index\n";
        for (std::size_t i = 0; i < res.trace.size(); ++i) {
            const auto& m = res.trace[i];
            os << (i + 1) << " " << fmt(m.weights.w1) << " " << fmt(m.weights.w2) << " "
               << fmt(m.weights.w3) << " " << fmt(m.score) << " " << (m.accepted ? 1 : 0) << " "
               << m.weight_index << "\n";
        }
    }
    {
        std::ofstream os(fs::path(out) / "tune_result.txt", std::ios::trunc);
        os << "w1=" << fmt(res.best.w1) << "\n"
           << "w2=" << fmt(res.best.w2) << "\n"
           << "w3=" << fmt(res.best.w3) << "\n"
           << "initial_score=" << fmt(res.initial_score) << "\n"
           << "best_score=" << fmt(res.best_score) << "\n"
           << "passes=" << res.passes << "\n"
           << "evaluator_calls=" << res.trace.size() << "\n";
    }
    std::cout << "tuned weights: w1=" << fmt(res.best.w1) << " w2=" << fmt(res.best.w2)
              << " w3=" << fmt(res.best.w3) << " (rmse " << fmt(res.initial_score) << " -> "
              << fmt(res.best_score) << ", " << res.trace.size() << " evaluator calls)\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& rgb_path,
                const std::string& out) {
    write_manifest(out, "predict", {{"checkpoint", checkpoint}, {"rgb", rgb_path}});

    auto model = load_checkpoint(checkpoint);
    const ImageU8 img = read_rgb8_png(rgb_path);
    TensorF rgb({1, 3, img.h, img.w});
    const std::size_t plane = static_cast<std::size_t>(img.h) * img.w;
    for (std::size_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c)
            rgb.raw()[c * plane + i] = img.rgb[3 * i + c] / 255.0f;

    const ModelConfig& mc = model.config();
    TensorF input =
        (img.h == mc.in_h && img.w == mc.in_w) ? rgb : resize_tensor(rgb, mc.in_h, mc.in_w);
    TensorF depth = model.predict(input);
    if (depth.shape().h != img.h || depth.shape().w != img.w)
        depth = resize_tensor(depth, img.h, img.w);

    const std::string stem = fs::path(rgb_path).stem().string();
    const auto depth_path = fs::path(out) / (stem + "_depth.png");
    const auto color_path = fs::path(out) / (stem + "_color.png");
    save_depth(depth, depth_path.string());
    write_rgb8_png(depth_to_color(depth, inferno_reversed()), color_path.string());
    std::cout << "wrote " << depth_path.string() << " and " << color_path.string() << "\n";
    return 0;
}

int cmd_ablate(const DataArgs& data_args, const std::string& preset, TrainConfig base,
               const std::string& out) {
    auto data = data_args.load();
    const Shape s = data.at(0).rgb.shape();
    const ModelConfig mc = preset_config(preset, s.h, s.w);

    auto kv = data_args.manifest();
    kv.insert(kv.end(), {{"preset", preset},
                         {"iterations", std::to_string(base.iterations)},
                         {"batch_size", std::to_string(base.batch_size)},
                         {"lr", fmt(base.lr)},
                         {"seed", std::to_string(base.seed)}});
    write_manifest(out, "ablate", kv);

    auto [train_set, val_set] = split_dataset(data, base.val_split);
    if (train_set.empty() || val_set.empty())
        throw ValueError("ablate: needs both training and validation samples");

    struct Combo {
        const char* label;
        LossWeights w;
    };
    const Combo combos[7] = {{"w1=0", {0, 1, 1}},      {"w2=0", {1, 0, 1}},
                             {"w3=0", {1, 1, 0}},      {"w1=0,w2=0", {0, 0, 1}},
                             {"w2=0,w3=0", {1, 0, 0}}, {"w1=0,w3=0", {0, 1, 0}},
                             {"all_nonzero", {1, 1, 1}}};

    std::ostringstream table, csv;
    table << "# combo w1 w2 w3 are rmse log10 delta1 delta2 delta3 r2 identity_ok\n";
    csv << "combo,w1,w2,w3," << MetricsReport::csv_header() << ",identity_ok\n";

    for (const auto& combo : combos) {
        Model<float> model(mc, base.seed);
        TrainConfig cfg = base;
        cfg.weights = combo.w;
        cfg.val_split = 0.0;
        train(model, train_set, cfg);
        auto ev = evaluate(model, val_set, combo.w);

        // the reported total must re-verify the weighted-sum identity
        const double recombined = combo.w.w1 * ev.mean_loss.depth +
                                  combo.w.w2 * ev.mean_loss.grad +
                                  combo.w.w3 * ev.mean_loss.ssim;
        const bool identity_ok = std::abs(ev.mean_loss.total - recombined) < 1e-9;
        const bool nested = ev.metrics.delta1 <= ev.metrics.delta2 + 1e-15 &&
                            ev.metrics.delta2 <= ev.metrics.delta3 + 1e-15;
        if (!nested) throw NumericError("ablate: delta nesting violated");

        table << combo.label << " " << fmt(combo.w.w1) << " " << fmt(combo.w.w2) << " "
              << fmt(combo.w.w3) << " " << fmt(ev.metrics.are) << " " << fmt(ev.metrics.rmse)
              << " " << fmt(ev.metrics.log10) << " " << fmt(ev.metrics.delta1) << " "
              << fmt(ev.metrics.delta2) << " " << fmt(ev.metrics.delta3) << " "
              << fmt(ev.metrics.r2) << " " << (identity_ok ? 1 : 0) << "\n";
        csv << combo.label << "," << fmt(combo.w.w1) << "," << fmt(combo.w.w2) << ","
            << fmt(combo.w.w3) << "," << ev.metrics.to_csv_row() << "," << (identity_ok ? 1 : 0)
            << "\n";
        std::cout << combo.label << ": rmse=" << fmt(ev.metrics.rmse)
                  << " delta1=" << fmt(ev.metrics.delta1) << "\n";
    }

    std::ofstream(fs::path(out) / "ablation.txt", std::ios::trunc) << table.str();
    std::ofstream(fs::path(out) / "ablation.csv", std::ios::trunc) << csv.str();
    return 0;
}

int cmd_gradcheck(const std::string& out) {
    if (!out.empty()) write_manifest(out, "gradcheck", {{"h", "1e-5"}, {"tol", "1e-4"}});
    auto rows = run_gradcheck_suite();
    bool all_ok = true;
    std::ostringstream report;
    for (const auto& r : rows) {
        std::ostringstream line;
        line << r.name << " max_rel_err=" << fmt(r.max_rel_err) << " coords=" << r.coords;
        if (r.expected_fail)
            line << (r.ok ? " sabotage_detected PASS" : " sabotage_missed FAIL");
        else
            line << (r.ok ? " PASS" : " FAIL");
        std::cout << line.str() << "\n";
        report << line.str() << "\n";
        all_ok = all_ok && r.ok;
    }
    std::cout << (all_ok ? "gradcheck: all ops PASS" : "gradcheck: FAILURES") << "\n";
    if (!out.empty()) std::ofstream(fs::path(out) / "gradcheck.txt", std::ios::trunc) << report.str();
    return all_ok ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale monocular depth estimation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a key=value file with [command] sections");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic RGB-D dataset");
    std::uint64_t synth_seed = 7;
    int synth_count = 0;
    std::string synth_size = "32x32";
    int synth_shapes = 3;
    std::string synth_out;
    synth->add_option("--seed", synth_seed, "generation seed");
    synth->add_option("--count", synth_count, "number of sample pairs")->required();
    synth->add_option("--size", synth_size, "sample size HxW");
    synth->add_option("--shapes", synth_shapes, "rectangles per scene");
    synth->add_option("--out", synth_out, "output dataset directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model");
    DataArgs train_data;
    train_data.add_options(train_cmd);
    std::string train_preset = "desk", train_out;
    TrainConfig train_cfg;
    train_cfg.iterations = 400;
    bool no_augment = false;
    train_cmd->add_option("--preset", train_preset, "model preset: desk or paper");
    train_cmd->add_option("--iterations", train_cfg.iterations, "training iterations T");
    train_cmd->add_option("--batch", train_cfg.batch_size, "batch size");
    train_cmd->add_option("--lr", train_cfg.lr, "learning rate");
    train_cmd->add_option("--beta1", train_cfg.beta1, "Adam beta1");
    train_cmd->add_option("--beta2", train_cfg.beta2, "Adam beta2");
    train_cmd->add_option("--eps", train_cfg.eps, "Adam epsilon");
    train_cmd->add_option("--w1", train_cfg.weights.w1, "depth loss weight");
    train_cmd->add_option("--w2", train_cfg.weights.w2, "gradient loss weight");
    train_cmd->add_option("--w3", train_cfg.weights.w3, "ssim loss weight");
    train_cmd->add_option("--val-split", train_cfg.val_split, "validation fraction");
    train_cmd->add_option("--seed", train_cfg.seed, "training seed");
    train_cmd->add_flag("--no-augment", no_augment, "disable horizontal-flip augmentation");
    train_cmd->add_option("--out", train_out, "output directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    DataArgs eval_data;
    eval_data.add_options(eval_cmd);
    std::string eval_ckpt, eval_out;
    LossWeights eval_w;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--w1", eval_w.w1, "depth loss weight");
    eval_cmd->add_option("--w2", eval_w.w2, "gradient loss weight");
    eval_cmd->add_option("--w3", eval_w.w3, "ssim loss weight");
    eval_cmd->add_option("--out", eval_out, "output directory")->required();

    // tune
    auto* tune_cmd = app.add_subcommand("tune", "greedy loss-weight search");
    DataArgs tune_data;
    tune_data.add_options(tune_cmd);
    std::string tune_ckpt, tune_out;
    double tune_step = 0.1, tune_floor = 0.1, tune_lr = 1e-4, tune_split = 0.2;
    int tune_iters = 60, tune_batch = 8;
    std::uint64_t tune_seed = 0;
    tune_cmd->add_option("--checkpoint", tune_ckpt, "starting checkpoint")->required();
    tune_cmd->add_option("--step", tune_step, "weight decrement");
    tune_cmd->add_option("--floor", tune_floor, "smallest allowed weight");
    tune_cmd->add_option("--tune-iters", tune_iters, "fine-tune iterations per evaluation");
    tune_cmd->add_option("--batch", tune_batch, "fine-tune batch size");
    tune_cmd->add_option("--lr", tune_lr, "fine-tune learning rate");
    tune_cmd->add_option("--val-split", tune_split, "validation fraction");
    tune_cmd->add_option("--seed", tune_seed, "fine-tune seed");
    tune_cmd->add_option("--out", tune_out, "output directory")->required();

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "predict a depth map for one image");
    std::string pred_ckpt, pred_rgb, pred_out;
    pred_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
    pred_cmd->add_option("--rgb", pred_rgb, "input RGB png")->required();
    pred_cmd->add_option("--out", pred_out, "output directory")->required();

    // ablate
    auto* abl_cmd = app.add_subcommand("ablate", "metrics per loss-weight combination");
    DataArgs abl_data;
    abl_data.add_options(abl_cmd);
    std::string abl_preset = "desk", abl_out;
    TrainConfig abl_cfg;
    abl_cfg.iterations = 120;
    abl_cmd->add_option("--preset", abl_preset, "model preset");
    abl_cmd->add_option("--iterations", abl_cfg.iterations, "training iterations per combo");
    abl_cmd->add_option("--batch", abl_cfg.batch_size, "batch size");
    abl_cmd->add_option("--lr", abl_cfg.lr, "learning rate");
    abl_cmd->add_option("--val-split", abl_cfg.val_split, "validation fraction");
    abl_cmd->add_option("--seed", abl_cfg.seed, "seed");
    abl_cmd->add_option("--out", abl_out, "output directory")->required();

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference checks for every op");
    std::string gc_out;
    gc_cmd->add_option("--out", gc_out, "optional report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed()) {
            if (synth_count < 1) throw ValueError("--count must be >= 1");
            return cmd_synth(synth_seed, synth_count, synth_size, synth_shapes, synth_out);
        }
        if (train_cmd->parsed()) {
            train_cfg.augment_hflip = !no_augment;
            return cmd_train(train_data, train_preset, train_cfg, train_out);
        }
        if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_w, eval_out);
        if (tune_cmd->parsed())
            return cmd_tune(tune_ckpt, tune_data, tune_step, tune_floor, tune_iters, tune_batch,
                            tune_lr, tune_split, tune_seed, tune_out);
        if (pred_cmd->parsed()) return cmd_predict(pred_ckpt, pred_rgb, pred_out);
        if (abl_cmd->parsed()) return cmd_ablate(abl_data, abl_preset, abl_cfg, abl_out);
        if (gc_cmd->parsed()) return cmd_gradcheck(gc_out);
        std::cerr << "usage error: no command\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const DimError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValueError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
