// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mavid/checkpoint.hpp"
#include "mavid/harness.hpp"
#include "mavid/sequence.hpp"

using namespace mavid;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2, kValidation = 3 };

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError:
        case ErrorCode::DecodeOverflow: return kRuntime;
        default: return kValidation;
    }
}

void print_error(const std::string& kind, const std::string& message, int code) {
    Json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << j.dump() << std::endl;
}

const char* kind_label(SegmentKind k) {
    switch (k) {
        case SegmentKind::text: return "text";
        case SegmentKind::speech_text: return "speech_text";
        case SegmentKind::motion_text: return "motion_text";
        case SegmentKind::audio_clip: return "audio_clip";
        case SegmentKind::video_clip: return "video_clip";
        case SegmentKind::directive: return "directive";
    }
    return "?";
}

// Paths may be overridden from the environment; nothing else is.
void apply_env(RunConfig& c) {
    if (const char* v = std::getenv("MAVID_DATASET")) c.dataset_path = v;
    if (const char* v = std::getenv("MAVID_CHECKPOINT_DIR")) c.checkpoint_dir = v;
    if (const char* v = std::getenv("MAVID_REPORT_DIR")) c.report_dir = v;
}

RunConfig resolve_config(const std::string& path) {
    RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
    apply_env(c);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mavid: conductor/creator training, generation and evaluation on synthetic streams"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("-c,--config", config_path, "run config file (key = value); defaults when omitted")
        ->check(CLI::ExistingFile);

    auto* train = app.add_subcommand("train", "train one stage: conductor, audio_ar or joint");
    std::string stage;
    int steps = -1;
    bool resume = false, quiet = false;
    train->add_option("--stage", stage, "override train.stage");
    train->add_option("--steps", steps, "override train.steps");
    train->add_flag("--resume", resume, "continue from <checkpoints>/<stage>.ckpt when present");
    train->add_flag("-q,--quiet", quiet, "no per-step output");

    auto* gen = app.add_subcommand("generate", "clip-autoregressive generation from a prompts file");
    GenerateRequest req;
    bool no_history = false;
    gen->add_option("--checkpoint", req.checkpoint, "creator checkpoint")->required();
    gen->add_option("--prompts", req.prompts_path, "one directive wire per line")->required();
    gen->add_option("--n-clips", req.n_clips, "clip count (default: number of prompt lines)");
    gen->add_option("--seed", req.seed, "generation seed (default 0)");
    gen->add_option("--ref", req.ref_path, "file with the reference latent for clip 1");
    gen->add_option("--out", req.out_dir, "output directory (default .)");
    gen->add_flag("--no-history", no_history, "drop the previous clip pair before every clip");

    auto* eval = app.add_subcommand("eval", "evaluate a creator checkpoint and write a report");
    std::string eval_ck, eval_data, eval_name = "eval";
    eval->add_option("--checkpoint", eval_ck, "creator checkpoint")->required();
    eval->add_option("--dataset", eval_data, "dataset file (default: held-out records from data.eval_seed)");
    eval->add_option("--name", eval_name, "report name (default eval)");

    auto* ablate = app.add_subcommand("ablate", "paired fusion and history ablations over ablate.seeds seeds");

    auto* mask = app.add_subcommand("inspect-mask", "print the segment layout and attention mask of a sequence");
    std::string layout = "creator", pbm_path;
    int clips = 2;
    mask->add_option("--layout", layout, "creator or conductor (default creator)")
        ->check(CLI::IsMember({"creator", "conductor"}));
    mask->add_option("--clips", clips, "clip count (default 2)")->check(CLI::NonNegativeNumber);
    mask->add_option("--pbm", pbm_path, "write the mask as a plain PBM image");

    auto* dump = app.add_subcommand("dump-dataset", "write a synthetic dataset, or print one as JSON lines");
    std::string dump_out = "data", dump_in;
    dump->add_option("--out", dump_out, "output directory for dataset.bin and manifest.jsonl (default data)");
    dump->add_option("--input", dump_in, "print this dataset file instead of writing one");

    auto* show = app.add_subcommand("show-config", "print the resolved run config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("UsageError", e.what(), kUsage);
        return kUsage;
    }

    try {
        RunConfig config = resolve_config(config_path);
        if (*train) {
            if (!stage.empty()) config.stage = parse_stage(stage);
            if (steps >= 0) config.steps = steps;
            TrainOptions o;
            o.resume = resume;
            o.log = quiet ? nullptr : &std::cout;
            TrainSummary s = run_train(config, o);
            Json j = {{"stage", stage_name(s.stage)},   {"first_step", s.first_step},
                      {"final_step", s.final_step},     {"checkpoint", s.checkpoint},
                      {"held_out_before", {{"l_ar", s.initial.l_ar}, {"l_diff", s.initial.l_diff}}},
                      {"held_out_after", {{"l_ar", s.final.l_ar}, {"l_diff", s.final.l_diff}}}};
            std::cout << j.dump() << std::endl;
        } else if (*gen) {
            req.use_history = !no_history;
            LongOutput out = run_generate(config, req);
            std::cout << Json{{"clips", out.audio.size()},
                              {"stream", (fs::path(req.out_dir) / "stream.bin").string()},
                              {"manifest", (fs::path(req.out_dir) / "stream.jsonl").string()}}
                             .dump()
                      << std::endl;
        } else if (*eval) {
            Json rep = run_eval(config, eval_ck, eval_data);
            write_report(config.report_dir, eval_name, rep);
            std::cout << report_table(rep);
        } else if (*ablate) {
            Json rep = run_ablate(config, &std::cerr);
            write_report(config.report_dir, "ablate", rep);
            std::cout << report_table(rep);
        } else if (*mask) {
            SegmentedSequence seq;
            if (layout == "creator") {
                const DirectivePair prompt = config.world.prompt(0, 0);
                std::vector<AudioClip> a(static_cast<size_t>(clips), AudioClip(config.model.codebooks, config.model.audio_len));
                std::vector<LatentClip> v(static_cast<size_t>(clips),
                                          LatentClip(Mat::Zero(config.model.latent_len, config.model.latent_dim)));
                seq = build_creator_sequence(prompt, a, v);
            } else {
                std::vector<AudioClip> a(static_cast<size_t>(clips), AudioClip(config.model.codebooks, 8));
                std::vector<LatentClip> v(static_cast<size_t>(clips), LatentClip(Mat::Zero(4, config.model.latent_dim)));
                seq = build_conductor_sequence(3, a, v, 6);
            }
            AttentionMask m = derive_masks(seq);
            Json segs = Json::array();
            for (const auto& s : seq.segments)
                segs.push_back({{"kind", kind_label(s.kind)}, {"clip", s.clip_index}, {"begin", s.begin}, {"end", s.end}});
            Json routes = Json::array();
            for (const auto& r : cross_attention_routes(seq)) routes.push_back({r.query_segment, r.key_segment});
            std::cout << Json{{"layout", layout}, {"total_len", seq.total_len}, {"visible_pairs", m.count_true()},
                              {"segments", segs}, {"cross_attention", routes}}
                             .dump(2)
                      << std::endl;
            if (!pbm_path.empty()) {
                std::ofstream out(pbm_path);
                if (!(out << m.to_pbm())) fail(ErrorCode::IoError, "cannot write " + pbm_path);
            }
        } else if (*dump) {
            if (!dump_in.empty()) {
                std::ifstream in(dump_in, std::ios::binary);
                if (!in) fail(ErrorCode::IoError, "cannot open " + dump_in);
                auto [spec, records] = read_dataset(in);
                write_manifest(std::cout, records);
            } else {
                const auto records = training_records(config);
                fs::create_directories(dump_out);
                std::ofstream data(fs::path(dump_out) / "dataset.bin", std::ios::binary);
                write_dataset(data, config.world, records);
                std::ofstream manifest(fs::path(dump_out) / "manifest.jsonl");
                write_manifest(manifest, records);
                if (!data || !manifest) fail(ErrorCode::IoError, "cannot write dataset into " + dump_out);
                std::cout << Json{{"records", records.size()}, {"dir", dump_out}}.dump() << std::endl;
            }
        } else if (*show) {
            std::cout << config.to_text();
        }
    } catch (const Error& e) {
        const int code = exit_code_for(e.code());
        print_error(std::string(error_name(e.code())), e.message(), code);
        return code;
    } catch (const std::exception& e) {
        print_error("RuntimeError", e.what(), kRuntime);
        return kRuntime;
    }
    return kOk;
}
