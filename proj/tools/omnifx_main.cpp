// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

// omnifx: data generation, training, sampling and evaluation from the shell.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "omnifx/conditioning.hpp"
#include "omnifx/diagnostics.hpp"
#include "omnifx/diffusion.hpp"
#include "omnifx/error.hpp"
#include "omnifx/io/checkpoint.hpp"
#include "omnifx/io/config.hpp"
#include "omnifx/io/frame_io.hpp"
#include "omnifx/io/manifest.hpp"
#include "omnifx/io/remote_judge.hpp"
#include "omnifx/io/report.hpp"
#include "omnifx/judge.hpp"
#include "omnifx/synthvfx.hpp"
#include "omnifx/trainer.hpp"

namespace {

using namespace omnifx;
namespace fs = std::filesystem;

struct Globals {
    std::string preset = "toy";
    std::string config_path;
    std::uint64_t seed = 0;
};

io::RunConfig resolve_config(const Globals& g) {
    io::RunConfig config = io::preset(g.preset);
    if (!g.config_path.empty()) {
        config = io::load_config_file(g.config_path, config);
    }
    config.train.seed = g.seed;
    config.sampler.seed = g.seed;
    config.validate();
    return config;
}

/// "effect=mask.pgm"
conditioning::ConditionPair parse_condition(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
        throw Error("condition '" + spec + "' is not of the form effect=mask.pgm");
    }
    auto kind = synth::parse_effect(spec.substr(0, eq));
    return {synth::effect_id(kind), io::load_mask(spec.substr(eq + 1))};
}

std::vector<conditioning::ConditionPair> parse_conditions(const std::vector<std::string>& specs) {
    std::vector<conditioning::ConditionPair> out;
    for (const auto& s : specs) {
        out.push_back(parse_condition(s));
    }
    return out;
}

// gen-data

struct GenDataArgs {
    std::string out;
    std::size_t count = 0;
};

int gen_data(const Globals& g, const GenDataArgs& a) {
    auto config = resolve_config(g);
    std::size_t count = a.count ? a.count : config.dataset_size;
    Rng rng(g.seed);
    synth::DatasetMix mix{config.kinds};
    auto records = synth::make_dataset(count, mix, rng, config.scene);
    fs::create_directories(a.out);
    auto manifest = io::write_dataset(a.out, records);
    std::cout << "wrote " << manifest.records.size() << " records to " << a.out << "\n";
    return 0;
}

// train

struct TrainArgs {
    std::string data;
    std::string out;
    std::string loss_csv;
    std::size_t log_every = 50;
};

int run_train(const Globals& g, const TrainArgs& a) {
    auto config = resolve_config(g);
    auto manifest = io::read_manifest(a.data);
    std::vector<synth::SampleRecord> pool;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        pool.push_back(io::load_record(manifest, i));
    }
    Rng rng(g.seed);
    auto params = model::init_denoiser(config.model, rng);
    std::cout << "parameters: " << params.parameter_count() << ", records: " << pool.size() << "\n";

    auto observer = [&](const train::LossRecord& r) {
        if (a.log_every && r.step % a.log_every == 0) {
            std::printf("step %zu stage %d loss %.5f mse %.5f aux %.5f\n", r.step, r.stage, r.total, r.mse, r.aux);
            std::fflush(stdout);
        }
    };
    auto result = train::train_dual_phase(pool, std::move(params), config.train, observer);

    io::save_checkpoint(a.out, {io::to_config_text(config), result.params.tensors});
    if (!a.loss_csv.empty()) {
        std::ofstream f(a.loss_csv);
        io::write_loss_csv(f, result.trace);
        if (!f) {
            throw Error("cannot write " + a.loss_csv);
        }
    }
    std::cout << "saved " << a.out << "\n";
    return 0;
}

// generate

struct GenerateArgs {
    std::string checkpoint;
    std::string reference;
    std::vector<std::string> conditions;
    std::string out;
    std::string stem = "frame";
};

model::DenoiserParams load_params(const std::string& path, io::RunConfig& config) {
    auto ckpt = io::load_checkpoint(path);
    io::apply_config(config, io::parse_config(ckpt.config, path), path);
    config.validate();
    return {config.model, std::move(ckpt.tensors)};
}

int generate(const Globals& g, const GenerateArgs& a) {
    auto config = resolve_config(g);
    auto params = load_params(a.checkpoint, config);
    const auto& mc = params.config;

    auto ref_frame = io::decode_pgm(io::read_file(a.reference));
    if (ref_frame.height != mc.height || ref_frame.width != mc.width) {
        throw Error("reference is " + std::to_string(ref_frame.height) + "x" + std::to_string(ref_frame.width) +
                    ", model expects " + std::to_string(mc.height) + "x" + std::to_string(mc.width));
    }
    Video reference(1, mc.height, mc.width);
    std::copy(ref_frame.pixels.begin(), ref_frame.pixels.end(), reference.values().begin());

    auto conditions = parse_conditions(a.conditions);
    auto schedule = diffusion::make_schedule(mc.timesteps);
    auto video = train::generate_video(params, reference, conditions, schedule, config.sampler);

    fs::create_directories(a.out);
    auto paths = io::save_video(video, a.out, a.stem);
    std::cout << "wrote " << paths.size() << " frames to " << a.out << "\n";
    return 0;
}

// eval

struct EvalArgs {
    std::string data;
    std::vector<std::string> frames;
    std::vector<std::string> conditions;
    std::string id = "sample";
    std::string judge = "procedural";
    std::size_t jobs = 0;
    std::string out;
};

struct EvalItem {
    std::string id;
    Video video;
    std::vector<conditioning::ConditionPair> conditions;
};

std::unique_ptr<metrics::Judge> make_judge(const std::string& spec, double timeout) {
    if (spec == "none") {
        return nullptr;
    }
    if (spec == "procedural") {
        return std::make_unique<metrics::ProceduralJudge>();
    }
    io::RemoteJudgeConfig rc;
    rc.endpoint = spec;
    rc.timeout_seconds = timeout;
    return std::make_unique<io::RemoteJudge>(rc);
}

int run_eval(const Globals& g, const EvalArgs& a) {
    auto config = resolve_config(g);
    std::vector<EvalItem> items;
    if (!a.data.empty()) {
        auto manifest = io::read_manifest(a.data);
        for (std::size_t i = 0; i < manifest.records.size(); ++i) {
            auto r = io::load_record(manifest, i);
            items.push_back({manifest.records[i].id, std::move(r.target), std::move(r.conditions)});
        }
    }
    if (!a.frames.empty()) {
        items.push_back({a.id, io::load_video(a.frames), parse_conditions(a.conditions)});
    }
    if (items.empty()) {
        throw Error("nothing to evaluate: pass --data or --frames");
    }

    auto judge = make_judge(a.judge, config.judge_timeout);
    std::vector<metrics::MetricReport> reports(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            reports[i] = metrics::evaluate_sample(items[i].id, items[i].video, items[i].conditions, judge.get(),
                                                  config.ecr);
        }
    };
    std::size_t jobs = std::clamp<std::size_t>(a.jobs ? a.jobs : config.eval_jobs, 1, items.size());
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }

    if (a.out.empty()) {
        io::write_metrics_csv(std::cout, reports);
    } else {
        std::ofstream f(a.out);
        io::write_metrics_csv(f, reports);
        if (!f) {
            throw Error("cannot write " + a.out);
        }
    }
    auto s = metrics::summarize(reports);
    std::fprintf(stderr, "samples %zu evaluable %zu eor %.4f ecr %.4f mean_rdd %.4f\n", s.samples, s.evaluable,
                 s.eor_rate, s.ecr_rate, s.mean_rdd);
    return 0;
}

// mask-dump

struct MaskDumpArgs {
    std::size_t conditions = 1;
    std::size_t text_len = 0;
    std::size_t spatial_len = 0;
    std::size_t latent_len = 0;
    bool full = false;
};

int mask_dump(const Globals& g, const MaskDumpArgs& a) {
    auto config = resolve_config(g);
    std::size_t text = a.text_len ? a.text_len : config.model.text_len;
    std::size_t spatial = a.spatial_len ? a.spatial_len : config.model.spatial_len();
    std::size_t latent = a.latent_len ? a.latent_len : config.model.latent_len();
    auto layout = conditioning::build_layout(a.conditions, text, spatial, latent);
    auto mask = a.full ? conditioning::full_attention_mask(layout.length()) : conditioning::build_iif_mask(layout);
    std::string row;
    for (std::size_t i = 0; i < layout.length(); ++i) {
        row.clear();
        for (std::size_t j = 0; j < layout.length(); ++j) {
            row += mask.attendable(i, j) ? '1' : '.';
        }
        std::cout << row << "\n";
    }
    return 0;
}

// gradcheck

struct GradcheckArgs {
    std::size_t trials = 10;
    double tolerance = 1e-4;
};

int gradcheck(const Globals& g, const GradcheckArgs& a) {
    resolve_config(g);
    auto results = diagnostics::run_gradient_suite(a.trials, g.seed);
    double worst = 0.0;
    for (const auto& r : results) {
        std::printf("%-22s trials %-4zu max error %.3e\n", r.name.c_str(), r.trials, r.max_error);
        worst = std::max(worst, r.max_error);
    }
    std::printf("max error %.3e (tolerance %.1e)\n", worst, a.tolerance);
    return worst <= a.tolerance ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"omnifx: multi-effect video diffusion toolkit"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--preset", g.preset, "Base configuration")
        ->check(CLI::IsMember({"toy", "paper-51-2"}))
        ->capture_default_str();
    app.add_option("--config", g.config_path, "key = value overrides applied after the preset");
    app.add_option("--seed", g.seed, "Seed for data, initialization, training and sampling")->capture_default_str();

    GenDataArgs gd;
    auto* cmd_gen = app.add_subcommand("gen-data", "Render a synthetic dataset with a manifest");
    cmd_gen->add_option("--out", gd.out, "Dataset directory")->required();
    cmd_gen->add_option("--count", gd.count, "Number of records (default: data.count)");

    TrainArgs tr;
    auto* cmd_train = app.add_subcommand("train", "Two-stage training on a dataset");
    cmd_train->add_option("--data", tr.data, "Dataset directory")->required();
    cmd_train->add_option("--out", tr.out, "Checkpoint path")->required();
    cmd_train->add_option("--loss-csv", tr.loss_csv, "Per-step loss trace");
    cmd_train->add_option("--log-every", tr.log_every, "Progress interval in steps, 0 for silence")
        ->capture_default_str();

    GenerateArgs ge;
    auto* cmd_generate = app.add_subcommand("generate", "Sample a video from a checkpoint");
    cmd_generate->add_option("--checkpoint", ge.checkpoint)->required();
    cmd_generate->add_option("--reference", ge.reference, "First frame as P5 graymap")->required();
    cmd_generate->add_option("--condition", ge.conditions, "effect=mask.pgm, repeatable");
    cmd_generate->add_option("--out", ge.out, "Output directory")->required();
    cmd_generate->add_option("--stem", ge.stem, "Frame file stem")->capture_default_str();

    EvalArgs ev;
    auto* cmd_eval = app.add_subcommand("eval", "Metrics CSV for videos and their trigger masks");
    cmd_eval->add_option("--data", ev.data, "Dataset directory; evaluates every record");
    cmd_eval->add_option("--frames", ev.frames, "Frame files of one video, in order");
    cmd_eval->add_option("--condition", ev.conditions, "effect=mask.pgm for --frames, repeatable");
    cmd_eval->add_option("--id", ev.id, "Row id for --frames")->capture_default_str();
    cmd_eval->add_option("--judge", ev.judge, "procedural, none, or an http:// endpoint")->capture_default_str();
    cmd_eval->add_option("-j,--jobs", ev.jobs, "Worker threads (default: eval.jobs)");
    cmd_eval->add_option("--out", ev.out, "CSV path (default: stdout)");

    MaskDumpArgs md;
    auto* cmd_mask = app.add_subcommand("mask-dump", "Print the attention mask grid, one row per query token");
    cmd_mask->add_option("-n,--conditions", md.conditions, "Condition pairs")->capture_default_str();
    cmd_mask->add_option("--text-len", md.text_len, "Text tokens per condition (default: model)");
    cmd_mask->add_option("--spatial-len", md.spatial_len, "Spatial tokens per condition (default: model)");
    cmd_mask->add_option("--latent-len", md.latent_len, "Latent tokens (default: model)");
    cmd_mask->add_flag("--full", md.full, "Dump the unrestricted mask instead");

    GradcheckArgs gc;
    auto* cmd_grad = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
    cmd_grad->add_option("--trials", gc.trials, "Random trials per case")->capture_default_str();
    cmd_grad->add_option("--tolerance", gc.tolerance, "Largest accepted error")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string message = e.what();
        if (!app.remaining().empty() && app.get_subcommands().empty()) {
            message = "unknown command '" + app.remaining().front() + "'";
        }
        std::cerr << "error: " << message << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*cmd_gen) return gen_data(g, gd);
        if (*cmd_train) return run_train(g, tr);
        if (*cmd_generate) return generate(g, ge);
        if (*cmd_eval) return run_eval(g, ev);
        if (*cmd_mask) return mask_dump(g, md);
        if (*cmd_grad) return gradcheck(g, gc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
