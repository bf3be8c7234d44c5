// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mavid/binary_io.hpp"
#include "mavid/checkpoint.hpp"
#include "mavid/directive.hpp"

namespace mavid {

namespace fs = std::filesystem;

namespace {

constexpr int kConductorEvalTasks = 64;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, mode);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    return out;
}

Checkpoint make_checkpoint(const std::string& component, const RunConfig& config, long long step,
                           const nn::ParamStore& store, const Optimizer& opt, const std::string& rng_state) {
    Checkpoint ck;
    ck.component = component;
    ck.stage = stage_name(config.stage);
    ck.step = static_cast<uint64_t>(step);
    ck.config_text = config.to_text();
    ck.config_hash = config.resume_hash();
    export_params(store, ck);
    for (auto& blob : opt.state()) ck.blobs.push_back(std::move(blob));
    ck.rng_state = rng_state;
    return ck;
}

Json loss_json(const LossValues& v) { return Json{{"l_ar", v.l_ar}, {"l_diff", v.l_diff}, {"l_all", v.l_all}}; }

std::optional<Checkpoint> resume_point(const RunConfig& config, const TrainOptions& options) {
    const std::string path = checkpoint_path(config, config.stage);
    if (!options.resume || !fs::exists(path)) return std::nullopt;
    Checkpoint ck = load_checkpoint(path);
    if (ck.config_hash != config.resume_hash())
        fail(ErrorCode::ConfigMismatch, "config differs from the one that produced " + path);
    if (ck.stage != stage_name(config.stage)) fail(ErrorCode::ConfigMismatch, path + " holds stage " + ck.stage);
    return ck;
}

void log_line(const TrainOptions& options, const std::string& line) {
    if (options.log) *options.log << line << '\n';
}

std::vector<ConductorTask> conductor_batch(const RunConfig& config, long long step) {
    return make_conductor_tasks(ConductorTaskSpec{}, config.model, config.batch,
                                record_seed(config.data_seed, static_cast<int>(step)));
}

TrainSummary train_conductor(const RunConfig& config, const TrainOptions& options, std::ofstream& metrics) {
    auto p = ConductorParams::create(config.model);
    Optimizer opt(p->store, config.optimizer);
    TrainSummary s;
    s.stage = config.stage;
    s.checkpoint = checkpoint_path(config, config.stage);
    if (auto ck = resume_point(config, options)) {
        if (ck->component != "conductor") fail(ErrorCode::ConfigMismatch, "checkpoint is not a conductor");
        import_params(p->store, *ck);
        opt.load_state(ck->blobs, static_cast<long long>(ck->step));
    }
    const auto held = make_conductor_tasks(ConductorTaskSpec{}, config.model, kConductorEvalTasks, config.eval_seed);
    auto evaluate = [&] {
        ag::NoGradGuard guard;
        double total = 0.0;
        for (const auto& t : held) total += conductor_loss(*p, t).scalar();
        LossValues v;
        v.l_ar = v.l_all = total / static_cast<double>(held.size());
        return v;
    };
    s.first_step = opt.steps();
    s.initial = evaluate();
    for (long long step = opt.steps(); step < config.steps;) {
        StepMetrics m;
        m.l_ar = m.l_all = conductor_train_step(*p, opt, conductor_batch(config, step));
        step = opt.steps();
        m.step = step;
        m.stage = stage_name(config.stage);
        m.lr = config.optimizer.lr;
        if (step % config.log_every == 0 || step == config.steps) {
            metrics << metrics_json(m) << '\n';
            log_line(options, metrics_json(m));
        }
        if (config.save_every > 0 && step % config.save_every == 0 && step < config.steps)
            save_checkpoint(s.checkpoint, make_checkpoint("conductor", config, step, p->store, opt, ""));
    }
    save_checkpoint(s.checkpoint, make_checkpoint("conductor", config, opt.steps(), p->store, opt, ""));
    s.final_step = opt.steps();
    s.final = evaluate();
    return s;
}

}  // namespace

std::string checkpoint_path(const RunConfig& config, Stage stage) {
    return (fs::path(config.checkpoint_dir) / (stage_name(stage) + ".ckpt")).string();
}

std::vector<WorldRecord> training_records(const RunConfig& config) {
    if (config.dataset_path.empty()) return gen_dataset(config.world, config.data_seed, config.train_records);
    std::ifstream in(config.dataset_path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open dataset " + config.dataset_path);
    auto [spec, records] = read_dataset(in);
    if (spec.to_key_values() != config.world.to_key_values())
        fail(ErrorCode::ConfigMismatch, "dataset world spec differs from the config");
    return records;
}

std::vector<WorldRecord> heldout_records(const RunConfig& config) {
    return gen_dataset(config.world, config.eval_seed, config.eval_records);
}

TrainSummary run_train(const RunConfig& config, const TrainOptions& options) {
    auto metrics = open_out((fs::path(config.report_dir) / "metrics.jsonl").string(), std::ios::app);
    if (config.stage == Stage::conductor) return train_conductor(config, options, metrics);

    auto p = CreatorParams::create(config.model);
    auto resume = resume_point(config, options);
    if (config.stage == Stage::joint && !resume) {
        const std::string prev = checkpoint_path(config, Stage::audio_ar);
        if (!fs::exists(prev)) fail(ErrorCode::StageOrderViolation, "joint stage needs " + prev);
        Checkpoint ck = load_checkpoint(prev);
        if (ck.component != "creator" || ck.stage != stage_name(Stage::audio_ar))
            fail(ErrorCode::StageOrderViolation, prev + " is not an audio_ar creator checkpoint");
        if (RunConfig::from_text(ck.config_text).model_hash() != config.model_hash())
            fail(ErrorCode::ConfigMismatch, "model config differs from the audio_ar checkpoint");
        import_params(p->store, ck);
    }
    CreatorTrainer trainer(p, config, training_records(config));
    if (resume) {
        if (resume->component != "creator") fail(ErrorCode::ConfigMismatch, "checkpoint is not a creator");
        import_params(p->store, *resume);
        trainer.optimizer().load_state(resume->blobs, static_cast<long long>(resume->step));
        trainer.set_rng_state(resume->rng_state);
    }
    const auto eval_set = make_eval_set(heldout_records(config), config.eval_seed, config.history);
    const ForwardOptions eval_opts = trainer.forward_options();

    TrainSummary s;
    s.stage = config.stage;
    s.checkpoint = checkpoint_path(config, config.stage);
    s.first_step = trainer.optimizer().steps();
    s.initial = evaluate_losses(*p, eval_set, eval_opts);
    log_line(options, "held-out before: " + loss_json(s.initial).dump());
    for (long long step = s.first_step; step < config.steps;) {
        StepMetrics m = trainer.step();
        step = m.step;
        if (step % config.log_every == 0 || step == config.steps) {
            metrics << metrics_json(m) << '\n';
            log_line(options, metrics_json(m));
        }
        if (config.save_every > 0 && step % config.save_every == 0 && step < config.steps)
            save_checkpoint(s.checkpoint,
                            make_checkpoint("creator", config, step, p->store, trainer.optimizer(), trainer.rng_state()));
    }
    metrics.flush();
    save_checkpoint(s.checkpoint, make_checkpoint("creator", config, trainer.optimizer().steps(), p->store,
                                                  trainer.optimizer(), trainer.rng_state()));
    s.final_step = trainer.optimizer().steps();
    s.final = evaluate_losses(*p, eval_set, eval_opts);
    log_line(options, "held-out after: " + loss_json(s.final).dump());
    return s;
}

std::shared_ptr<CreatorParams> load_creator(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.component != "creator") fail(ErrorCode::ConfigMismatch, path + " is not a creator checkpoint");
    auto p = CreatorParams::create(RunConfig::from_text(ck.config_text).model);
    import_params(p->store, ck);
    return p;
}

std::shared_ptr<ConductorParams> load_conductor(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.component != "conductor") fail(ErrorCode::ConfigMismatch, path + " is not a conductor checkpoint");
    auto p = ConductorParams::create(RunConfig::from_text(ck.config_text).model);
    import_params(p->store, ck);
    return p;
}

std::vector<DirectivePair> parse_prompts(const std::string& text, const ModelConfig& config) {
    std::vector<DirectivePair> out;
    std::istringstream is(text);
    std::string line;
    for (int n = 1; std::getline(is, line); ++n) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            DirectivePair p = decode_directives(parse_wire(line));
            validate_directives(p, config);
            out.push_back(std::move(p));
        } catch (const Error& e) {
            fail(e.code(), "prompts line " + std::to_string(n) + ": " + e.message());
        }
    }
    if (out.empty()) fail(ErrorCode::InvalidArgument, "prompts file holds no prompt");
    return out;
}

LongOutput run_generate(const RunConfig& config, const GenerateRequest& request) {
    auto p = load_creator(request.checkpoint);
    auto prompts = parse_prompts(read_file(request.prompts_path), p->config);
    const int n_clips = request.n_clips > 0 ? request.n_clips : static_cast<int>(prompts.size());
    std::optional<Vec> ref;
    if (!request.ref_path.empty()) {
        std::istringstream is(read_file(request.ref_path));
        std::vector<double> vals;
        for (double v; is >> v;) vals.push_back(v);
        if (!is.eof()) fail(ErrorCode::FormatError, "reference latent holds a non-number");
        if (static_cast<int>(vals.size()) != p->config.latent_dim)
            fail(ErrorCode::DimensionMismatch, "reference latent needs " + std::to_string(p->config.latent_dim) + " values");
        ref = Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    }
    GenerationOptions opts;
    opts.top_k = config.top_k;
    opts.use_history = request.use_history;
    opts.seed = request.seed;
    LongOutput out = generate_long(*p, prompts, n_clips, ref ? &*ref : nullptr, opts);
    const fs::path dir(request.out_dir);
    auto stream = open_out((dir / "stream.bin").string(), std::ios::binary);
    write_stream(stream, out);
    auto manifest = open_out((dir / "stream.jsonl").string());
    write_stream_manifest(manifest, out, request.seed);
    if (!stream || !manifest) fail(ErrorCode::IoError, "failed writing generation outputs");
    return out;
}

Json evaluate_model(const CreatorParams& params, const WorldSpec& world, const std::vector<WorldRecord>& records,
                    uint64_t eval_seed, const EvalSettings& settings) {
    if (records.empty()) fail(ErrorCode::InvalidArgument, "no evaluation records");
    ForwardOptions fo;
    fo.use_history = settings.use_history;
    const LossValues held = evaluate_losses(params, make_eval_set(records, eval_seed, settings.use_history), fo);

    const int n_clips = static_cast<int>(records[0].audio.size());
    std::vector<double> clip_oc(static_cast<size_t>(n_clips)), clip_match(clip_oc), clip_mean(clip_oc),
        clip_std(clip_oc), clip_jump(clip_oc);
    double oc = 0.0, bd = 0.0, data_oc = 0.0, data_bd = 0.0;
    GenerationOptions opts;
    opts.top_k = settings.top_k;
    opts.use_history = settings.use_history;
    for (const auto& r : records) {
        if (static_cast<int>(r.audio.size()) != n_clips) fail(ErrorCode::ClipCountMismatch, "records differ in clip count");
        opts.seed = r.seed;
        const Vec first = r.video[0].latents.row(0);
        LongOutput out = generate_long(params, r.prompts, n_clips, settings.use_ref ? &first : nullptr, opts);
        oc += oracle_consistency(out.audio, out.video, world);
        data_oc += oracle_consistency(r.audio, r.video, world);
        if (n_clips >= 2) {
            bd += boundary_discontinuity(out.video);
            data_bd += boundary_discontinuity(r.video);
        }
        for (int j = 0; j < n_clips; ++j) {
            const auto J = static_cast<size_t>(j);
            const Mat& v = out.video[J].latents;
            clip_oc[J] += oracle_consistency({out.audio[J]}, {out.video[J]}, world);
            clip_match[J] += classify_family(out.audio[J], world) == r.families[J];
            clip_mean[J] += v.mean();
            clip_std[J] += std::sqrt((v.array() - v.mean()).square().mean());
            if (j > 0) {
                const Mat& prev = out.video[J - 1].latents;
                clip_jump[J] += (v.row(0) - prev.row(prev.rows() - 1)).squaredNorm() / static_cast<double>(v.cols());
            }
        }
    }
    const double n = static_cast<double>(records.size());
    Json rep;
    rep["schema"] = kReportSchema;
    rep["kind"] = "eval";
    rep["records"] = records.size();
    rep["n_clips"] = n_clips;
    rep["eval_seed"] = eval_seed;
    rep["fusion"] = params.config.fusion;
    rep["history"] = settings.use_history;
    rep["reference_injection"] = settings.use_ref;
    rep["top_k"] = settings.top_k;
    rep["oracle_consistency"] = oc / n;
    rep["boundary_discontinuity"] = n_clips >= 2 ? Json(bd / n) : Json(nullptr);
    rep["held_out"] = loss_json(held);
    rep["ground_truth"] = {{"oracle_consistency", data_oc / n},
                           {"boundary_discontinuity", n_clips >= 2 ? Json(data_bd / n) : Json(nullptr)}};
    Json per = Json::array();
    for (int j = 0; j < n_clips; ++j) {
        const auto J = static_cast<size_t>(j);
        per.push_back({{"clip", j},
                       {"oracle_consistency", clip_oc[J] / n},
                       {"family_match", clip_match[J] / n},
                       {"latent_mean", clip_mean[J] / n},
                       {"latent_std", clip_std[J] / n},
                       {"boundary_jump", j > 0 ? Json(clip_jump[J] / n) : Json(nullptr)}});
    }
    rep["per_clip"] = per;
    return rep;
}

Json run_eval(const RunConfig& config, const std::string& checkpoint, const std::string& dataset) {
    auto p = load_creator(checkpoint);
    std::vector<WorldRecord> records;
    WorldSpec world = config.world;
    if (!dataset.empty()) {
        std::ifstream in(dataset, std::ios::binary);
        if (!in) fail(ErrorCode::IoError, "cannot open dataset " + dataset);
        std::tie(world, records) = read_dataset(in);
    } else {
        records = heldout_records(config);
    }
    EvalSettings s;
    s.use_history = config.history;
    s.use_ref = config.use_ref;
    s.top_k = config.top_k;
    Json rep = evaluate_model(*p, world, records, config.eval_seed, s);
    rep["checkpoint"] = checkpoint;
    rep["dataset"] = dataset.empty() ? Json("generated") : Json(dataset);
    return rep;
}

namespace {

std::shared_ptr<CreatorParams> train_two_stage(RunConfig config, const std::vector<WorldRecord>& records) {
    auto p = CreatorParams::create(config.model);
    for (auto [stage, steps] : {std::pair{Stage::audio_ar, config.ablate_ar_steps},
                                std::pair{Stage::joint, config.ablate_joint_steps}}) {
        config.stage = stage;
        CreatorTrainer trainer(p, config, records);
        for (int s = 0; s < steps; ++s) trainer.step();
    }
    return p;
}

Json metric_pair(const Json& eval) {
    return {{"oracle_consistency", eval["oracle_consistency"]},
            {"boundary_discontinuity", eval["boundary_discontinuity"]},
            {"l_ar", eval["held_out"]["l_ar"]},
            {"l_diff", eval["held_out"]["l_diff"]}};
}

}  // namespace

Json run_ablate(const RunConfig& config, std::ostream* log) {
    if (config.world.n_clips < 2) fail(ErrorCode::TooFewClips, "ablation needs at least two clips per record");
    Json rows = Json::array();
    double on_oc = 0, off_oc = 0, on_bd = 0, off_bd = 0, hist_bd = 0, nohist_bd = 0;
    int history_wins = 0;
    EvalSettings with_history;
    with_history.use_ref = config.use_ref;
    with_history.top_k = config.top_k;
    EvalSettings without_history = with_history;
    without_history.use_history = false;
    for (int s = 0; s < config.ablate_seeds; ++s) {
        RunConfig c = config;
        c.model.seed = config.model.seed + static_cast<uint64_t>(s);
        c.data_seed = config.data_seed + static_cast<uint64_t>(s);
        c.eval_seed = config.eval_seed + static_cast<uint64_t>(s);
        c.history = true;
        const auto train = training_records(c);
        const auto held = heldout_records(c);
        c.model.fusion = true;
        auto fused = train_two_stage(c, train);
        c.model.fusion = false;
        auto unfused = train_two_stage(c, train);
        Json on = metric_pair(evaluate_model(*fused, c.world, held, c.eval_seed, with_history));
        Json off = metric_pair(evaluate_model(*unfused, c.world, held, c.eval_seed, with_history));
        Json nohist = metric_pair(evaluate_model(*fused, c.world, held, c.eval_seed, without_history));
        on_oc += on["oracle_consistency"].get<double>();
        off_oc += off["oracle_consistency"].get<double>();
        on_bd += on["boundary_discontinuity"].get<double>();
        off_bd += off["boundary_discontinuity"].get<double>();
        hist_bd += on["boundary_discontinuity"].get<double>();
        nohist_bd += nohist["boundary_discontinuity"].get<double>();
        const bool win = on["boundary_discontinuity"].get<double>() < nohist["boundary_discontinuity"].get<double>();
        history_wins += win;
        Json row = {{"seed", s}, {"model_seed", c.model.seed}, {"data_seed", c.data_seed},
                    {"fusion_on", on}, {"fusion_off", off}, {"history_off", nohist}, {"history_lower_boundary", win}};
        if (log) *log << row.dump() << '\n';
        rows.push_back(row);
    }
    const double n = config.ablate_seeds;
    Json rep;
    rep["schema"] = kReportSchema;
    rep["kind"] = "ablate";
    rep["seeds"] = config.ablate_seeds;
    rep["ar_steps"] = config.ablate_ar_steps;
    rep["joint_steps"] = config.ablate_joint_steps;
    rep["records"] = config.eval_records;
    rep["n_clips"] = config.world.n_clips;
    rep["rows"] = rows;
    rep["mean"] = {{"fusion_on", {{"oracle_consistency", on_oc / n}, {"boundary_discontinuity", on_bd / n}}},
                   {"fusion_off", {{"oracle_consistency", off_oc / n}, {"boundary_discontinuity", off_bd / n}}},
                   {"history_on", {{"boundary_discontinuity", hist_bd / n}}},
                   {"history_off", {{"boundary_discontinuity", nohist_bd / n}}}};
    rep["fusion_higher_consistency"] = on_oc > off_oc;
    rep["fusion_lower_boundary"] = on_bd < off_bd;
    rep["history_wins"] = history_wins;
    return rep;
}

namespace {

std::string num(const Json& v) {
    if (v.is_null()) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
    return buf;
}

}  // namespace

std::string report_table(const Json& rep) {
    std::ostringstream os;
    char line[256];
    if (rep.value("kind", "") == "eval") {
        os << "eval  fusion=" << rep["fusion"] << "  history=" << rep["history"] << "  records=" << rep["records"]
           << "\n";
        os << "oracle_consistency      " << num(rep["oracle_consistency"]) << "  (ground truth "
           << num(rep["ground_truth"]["oracle_consistency"]) << ")\n";
        os << "boundary_discontinuity  " << num(rep["boundary_discontinuity"]) << "  (ground truth "
           << num(rep["ground_truth"]["boundary_discontinuity"]) << ")\n";
        os << "held-out L_AR " << num(rep["held_out"]["l_ar"]) << "  L_DIFF " << num(rep["held_out"]["l_diff"])
           << "  L_all " << num(rep["held_out"]["l_all"]) << "\n\n";
        os << "clip  consistency  family_match  latent_mean  latent_std  boundary_jump\n";
        for (const auto& c : rep["per_clip"]) {
            std::snprintf(line, sizeof line, "%4d  %11s  %12s  %11s  %10s  %13s\n", c["clip"].get<int>(),
                          num(c["oracle_consistency"]).c_str(), num(c["family_match"]).c_str(),
                          num(c["latent_mean"]).c_str(), num(c["latent_std"]).c_str(), num(c["boundary_jump"]).c_str());
            os << line;
        }
        return os.str();
    }
    if (rep.value("kind", "") == "ablate") {
        os << "ablate  seeds=" << rep["seeds"] << "  ar_steps=" << rep["ar_steps"]
           << "  joint_steps=" << rep["joint_steps"] << "\n";
        os << "seed  consist_on  consist_off  boundary_on  boundary_off  boundary_no_history\n";
        for (const auto& r : rep["rows"]) {
            std::snprintf(line, sizeof line, "%4d  %10s  %11s  %11s  %12s  %19s\n", r["seed"].get<int>(),
                          num(r["fusion_on"]["oracle_consistency"]).c_str(),
                          num(r["fusion_off"]["oracle_consistency"]).c_str(),
                          num(r["fusion_on"]["boundary_discontinuity"]).c_str(),
                          num(r["fusion_off"]["boundary_discontinuity"]).c_str(),
                          num(r["history_off"]["boundary_discontinuity"]).c_str());
            os << line;
        }
        const Json& m = rep["mean"];
        std::snprintf(line, sizeof line, "mean  %10s  %11s  %11s  %12s  %19s\n",
                      num(m["fusion_on"]["oracle_consistency"]).c_str(),
                      num(m["fusion_off"]["oracle_consistency"]).c_str(),
                      num(m["fusion_on"]["boundary_discontinuity"]).c_str(),
                      num(m["fusion_off"]["boundary_discontinuity"]).c_str(),
                      num(m["history_off"]["boundary_discontinuity"]).c_str());
        os << line;
        os << "history lowers boundary in " << rep["history_wins"] << " of " << rep["seeds"] << " seeds\n";
        return os.str();
    }
    return rep.dump(2) + "\n";
}

void write_report(const std::string& dir, const std::string& name, const Json& report) {
    const fs::path d(dir);
    open_out((d / (name + ".json")).string()) << report.dump(2) << '\n';
    open_out((d / (name + ".txt")).string()) << report_table(report);
    open_out((d / "reports.jsonl").string(), std::ios::app) << report.dump() << '\n';
}

}  // namespace mavid
