// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/world.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "mavid/binary_io.hpp"
#include "mavid/records.hpp"

namespace mavid {

namespace {

constexpr char kDatasetMagic[] = "MVDS";
constexpr uint32_t kDatasetVersion = 1;
constexpr int kSpeechBase = text_special::count;
constexpr int kMotionBase = 24;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Vec pattern(uint64_t seed, int dim, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Vec v(dim);
    for (int c = 0; c < dim; ++c) v(c) = n(rng);
    return v;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

WorldSpec WorldSpec::from_config(const ModelConfig& c) {
    WorldSpec s;
    s.codebooks = c.codebooks;
    s.audio_vocab = c.audio_vocab;
    s.text_vocab = c.text_vocab;
    s.audio_len = c.audio_len;
    s.latent_len = c.latent_len;
    s.latent_dim = c.latent_dim;
    s.windows = FusionWindows::from_config(c);
    return s;
}

void WorldSpec::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(ErrorCode::InvalidConfig, std::string("world spec: ") + what);
    };
    require(coupling_rule == 1, "unknown coupling_rule");
    require(families >= 1 && identities >= 1 && motions >= 1 && n_clips >= 1, "counts must be positive");
    require(classes >= 1 && 8 % classes == 0, "classes must divide 8");
    require(audio_special::count + 8 * families <= audio_vocab, "audio_vocab too small for the family token sets");
    require(kSpeechBase + 2 * families <= kMotionBase, "too many families for the speech directive ids");
    require(kMotionBase + motions <= text_vocab, "text_vocab too small for the motion directive ids");
    require(sigma >= 0.0 && tau > 0.0, "sigma must be >= 0 and tau > 0");
    require(markov_stay >= 0.0 && markov_stay <= 1.0, "markov_stay outside [0, 1]");
    require(family_switch >= 0.0 && family_switch <= 1.0, "family_switch outside [0, 1]");
    require(null_motion_ratio >= 0.0 && null_motion_ratio <= 1.0, "null_motion_ratio outside [0, 1]");
    require(codebooks >= 1 && audio_len >= 1 && latent_len >= 1 && latent_dim >= 1, "shapes must be positive");
    windows.validate();
}

KeyValues WorldSpec::to_key_values() const {
    KeyValues kv;
    kv["world.coupling_rule"] = std::to_string(coupling_rule);
    kv["world.families"] = std::to_string(families);
    kv["world.identities"] = std::to_string(identities);
    kv["world.motions"] = std::to_string(motions);
    kv["world.classes"] = std::to_string(classes);
    kv["world.n_clips"] = std::to_string(n_clips);
    kv["world.sigma"] = fmt_double(sigma);
    kv["world.drift_scale"] = fmt_double(drift_scale);
    kv["world.identity_scale"] = fmt_double(identity_scale);
    kv["world.motion_scale"] = fmt_double(motion_scale);
    kv["world.trend"] = fmt_double(trend);
    kv["world.tau"] = fmt_double(tau);
    kv["world.markov_stay"] = fmt_double(markov_stay);
    kv["world.family_switch"] = fmt_double(family_switch);
    kv["world.null_motion_ratio"] = fmt_double(null_motion_ratio);
    kv["world.codebooks"] = std::to_string(codebooks);
    kv["world.audio_vocab"] = std::to_string(audio_vocab);
    kv["world.text_vocab"] = std::to_string(text_vocab);
    kv["world.audio_len"] = std::to_string(audio_len);
    kv["world.latent_len"] = std::to_string(latent_len);
    kv["world.latent_dim"] = std::to_string(latent_dim);
    kv["world.f_v_len"] = std::to_string(windows.f_v_len);
    kv["world.f_a_len"] = std::to_string(windows.f_a_len);
    kv["world.frames_per_latent"] = std::to_string(windows.frames_per_latent);
    kv["world.ms_per_token"] = std::to_string(windows.ms_per_token);
    kv["world.fps"] = std::to_string(windows.fps);
    return kv;
}

WorldSpec WorldSpec::from_key_values(const KeyValues& kv) {
    WorldSpec s;
    s.coupling_rule = kv_int(kv, "world.coupling_rule", s.coupling_rule);
    s.families = kv_int(kv, "world.families", s.families);
    s.identities = kv_int(kv, "world.identities", s.identities);
    s.motions = kv_int(kv, "world.motions", s.motions);
    s.classes = kv_int(kv, "world.classes", s.classes);
    s.n_clips = kv_int(kv, "world.n_clips", s.n_clips);
    s.sigma = kv_double(kv, "world.sigma", s.sigma);
    s.drift_scale = kv_double(kv, "world.drift_scale", s.drift_scale);
    s.identity_scale = kv_double(kv, "world.identity_scale", s.identity_scale);
    s.motion_scale = kv_double(kv, "world.motion_scale", s.motion_scale);
    s.trend = kv_double(kv, "world.trend", s.trend);
    s.tau = kv_double(kv, "world.tau", s.tau);
    s.markov_stay = kv_double(kv, "world.markov_stay", s.markov_stay);
    s.family_switch = kv_double(kv, "world.family_switch", s.family_switch);
    s.null_motion_ratio = kv_double(kv, "world.null_motion_ratio", s.null_motion_ratio);
    s.codebooks = kv_int(kv, "world.codebooks", s.codebooks);
    s.audio_vocab = kv_int(kv, "world.audio_vocab", s.audio_vocab);
    s.text_vocab = kv_int(kv, "world.text_vocab", s.text_vocab);
    s.audio_len = kv_int(kv, "world.audio_len", s.audio_len);
    s.latent_len = kv_int(kv, "world.latent_len", s.latent_len);
    s.latent_dim = kv_int(kv, "world.latent_dim", s.latent_dim);
    s.windows.f_v_len = kv_int(kv, "world.f_v_len", s.windows.f_v_len);
    s.windows.f_a_len = kv_int(kv, "world.f_a_len", s.windows.f_a_len);
    s.windows.frames_per_latent = kv_int(kv, "world.frames_per_latent", s.windows.frames_per_latent);
    s.windows.ms_per_token = kv_int(kv, "world.ms_per_token", s.windows.ms_per_token);
    s.windows.fps = kv_int(kv, "world.fps", s.windows.fps);
    return s;
}

Vec WorldSpec::drift(int cls) const {
    Vec mean = Vec::Zero(latent_dim);
    for (int k = 0; k < classes; ++k) mean(k % latent_dim) += drift_scale / classes;
    Vec d = -mean;
    d(cls % latent_dim) += drift_scale;
    return d;
}

Vec WorldSpec::identity_mean(int identity) const { return pattern(0x1d000 + identity, latent_dim, identity_scale); }

Vec WorldSpec::motion_bias(int motion) const {
    if (motion < 0) return Vec::Zero(latent_dim);
    return pattern(0x3a000 + motion, latent_dim, motion_scale);
}

DirectivePair WorldSpec::prompt(int family, int motion) const {
    DirectivePair p;
    p.speech = {Token::text(kSpeechBase + 2 * family), Token::text(kSpeechBase + 2 * family + 1)};
    if (motion >= 0) p.motion = {Token::text(kMotionBase + motion)};
    return p;
}

WorldRecord gen_record(const WorldSpec& spec, uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> state(0, 7);
    std::normal_distribution<double> noise(0.0, 1.0);

    WorldRecord rec;
    rec.seed = seed;
    rec.identity = std::uniform_int_distribution<int>(0, spec.identities - 1)(rng);
    rec.motion = u(rng) < spec.null_motion_ratio ? -1 : std::uniform_int_distribution<int>(0, spec.motions - 1)(rng);
    const Vec level = spec.identity_mean(rec.identity) + spec.motion_bias(rec.motion);

    int family = std::uniform_int_distribution<int>(0, spec.families - 1)(rng);
    int r = state(rng);
    const int content = spec.audio_vocab - audio_special::count;
    for (int j = 0; j < spec.n_clips; ++j) {
        if (j > 0 && spec.families > 1 && u(rng) < spec.family_switch) {
            family = (family + 1 + std::uniform_int_distribution<int>(0, spec.families - 2)(rng)) % spec.families;
            r = state(rng);
        }
        AudioClip a(spec.codebooks, spec.audio_len);
        for (int t = 0; t < spec.audio_len; ++t) {
            const int32_t a0 = spec.family_token(family, r);
            a.at(0, t) = a0;
            for (int k = 1; k < spec.codebooks; ++k)
                a.at(k, t) = audio_special::count +
                             ((a0 - audio_special::count) * (k + 1) + 11 * rec.identity + 5 * k) % content;
            r = u(rng) < spec.markov_stay ? (3 * r + 1) % 8 : state(rng);
        }
        Mat g = coupling_signal(spec, a, spec.latent_len);
        Mat x(spec.latent_len, spec.latent_dim);
        for (int i = 0; i < spec.latent_len; ++i) {
            const double n = static_cast<double>(j * spec.latent_len + i);
            x.row(i) = level + g.row(i) + Vec::Constant(spec.latent_dim, spec.trend * n);
            for (int c = 0; c < spec.latent_dim; ++c) x(i, c) += spec.sigma * noise(rng);
        }
        rec.families.push_back(family);
        rec.prompts.push_back(spec.prompt(family, rec.motion));
        rec.audio.push_back(std::move(a));
        rec.video.emplace_back(std::move(x));
    }
    return rec;
}

Mat coupling_signal(const WorldSpec& spec, const AudioClip& audio, int latent_count) {
    Mat g(latent_count, spec.latent_dim);
    for (int i = 0; i < latent_count; ++i) {
        Span s = audio_window_span(i, latent_count, audio.length(), spec.windows);
        Vec acc = Vec::Zero(spec.latent_dim);
        for (int t = s.begin; t < s.end; ++t) {
            const int32_t id = audio.at(0, t);
            if (id >= audio_special::count) acc += spec.drift(spec.token_class(id));
        }
        g.row(i) = acc / s.length();
    }
    return g;
}

double oracle_consistency(const std::vector<AudioClip>& audio, const std::vector<LatentClip>& video,
                          const WorldSpec& spec) {
    if (audio.size() != video.size())
        fail(ErrorCode::ClipCountMismatch, "oracle_consistency needs equal audio and video clip counts");
    std::vector<Vec> x, g;
    for (size_t j = 0; j < audio.size(); ++j) {
        if (video[j].channels() != spec.latent_dim) fail(ErrorCode::DimensionMismatch, "latent width differs from spec");
        Mat gj = coupling_signal(spec, audio[j], video[j].length());
        for (int i = 0; i < video[j].length(); ++i) {
            x.push_back(video[j].latents.row(i));
            g.push_back(gj.row(i));
        }
    }
    if (x.size() < 2) fail(ErrorCode::InvalidArgument, "oracle_consistency needs at least two latents");
    int matched = 0;
    for (size_t n = 1; n < x.size(); ++n) {
        Vec predicted = g[n] - g[n - 1];
        predicted.array() += spec.trend;
        const double err = ((x[n] - x[n - 1]) - predicted).cwiseAbs().maxCoeff();
        matched += err <= spec.tau;
    }
    return static_cast<double>(matched) / static_cast<double>(x.size() - 1);
}

double boundary_discontinuity(const std::vector<LatentClip>& video) {
    if (video.size() < 2) fail(ErrorCode::TooFewClips, "boundary_discontinuity needs at least two clips");
    double jump = 0.0, intra = 0.0;
    int intra_n = 0;
    for (size_t j = 0; j < video.size(); ++j) {
        const Mat& m = video[j].latents;
        if (m.rows() == 0) fail(ErrorCode::ShapeMismatch, "empty latent clip");
        for (Eigen::Index i = 1; i < m.rows(); ++i, ++intra_n) intra += (m.row(i) - m.row(i - 1)).squaredNorm() / m.cols();
        if (j + 1 < video.size()) {
            const Mat& next = video[j + 1].latents;
            if (next.cols() != m.cols()) fail(ErrorCode::DimensionMismatch, "latent widths differ between clips");
            jump += (next.row(0) - m.row(m.rows() - 1)).squaredNorm() / m.cols();
        }
    }
    jump /= static_cast<double>(video.size() - 1);
    if (intra_n > 0) intra /= intra_n;
    return std::max(0.0, jump - intra);
}

int classify_family(const AudioClip& clip, const WorldSpec& spec) {
    std::vector<int> counts(static_cast<size_t>(spec.families), 0);
    for (int t = 0; t < clip.length(); ++t) {
        const int id = clip.at(0, t) - audio_special::count;
        if (id >= 0 && id < 8 * spec.families) ++counts[static_cast<size_t>(id / 8)];
    }
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

uint64_t record_seed(uint64_t dataset_seed, int index) {
    return splitmix64(dataset_seed ^ splitmix64(static_cast<uint64_t>(index) + 1));
}

std::vector<WorldRecord> gen_dataset(const WorldSpec& spec, uint64_t dataset_seed, int count) {
    std::vector<WorldRecord> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(gen_record(spec, record_seed(dataset_seed, i)));
    return out;
}

void write_dataset(std::ostream& os, const WorldSpec& spec, const std::vector<WorldRecord>& records) {
    io::write_magic(os, kDatasetMagic);
    io::write_u32(os, kDatasetVersion);
    io::write_string(os, format_key_values(spec.to_key_values()));
    io::write_u32(os, static_cast<uint32_t>(records.size()));
    for (const auto& r : records) {
        io::write_u64(os, r.seed);
        io::write_i32(os, r.identity);
        io::write_i32(os, r.motion);
        io::write_u32(os, static_cast<uint32_t>(r.audio.size()));
        for (size_t j = 0; j < r.audio.size(); ++j) {
            io::write_i32(os, r.families[j]);
            write_record(os, r.prompts[j].speech);
            write_record(os, r.prompts[j].motion);
            write_record(os, r.audio[j]);
            write_record(os, r.video[j]);
        }
    }
    if (!os) fail(ErrorCode::IoError, "dataset write failed");
}

void write_manifest(std::ostream& os, const std::vector<WorldRecord>& records) {
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        nlohmann::json line = {{"index", i},           {"seed", r.seed},     {"identity", r.identity},
                               {"motion", r.motion},   {"families", r.families}, {"n_clips", r.audio.size()}};
        os << line.dump() << '\n';
    }
}

std::pair<WorldSpec, std::vector<WorldRecord>> read_dataset(std::istream& is) {
    io::expect_magic(is, kDatasetMagic, "dataset");
    const uint32_t version = io::read_u32(is);
    if (version != kDatasetVersion) fail(ErrorCode::FormatError, "unsupported dataset version " + std::to_string(version));
    WorldSpec spec = WorldSpec::from_key_values(parse_key_values(io::read_string(is)));
    spec.validate();
    const uint32_t count = io::read_u32(is);
    std::vector<WorldRecord> records;
    for (uint32_t i = 0; i < count; ++i) {
        WorldRecord r;
        r.seed = io::read_u64(is);
        r.identity = io::read_i32(is);
        r.motion = io::read_i32(is);
        const uint32_t clips = io::read_u32(is);
        if (clips > 1u << 16) fail(ErrorCode::FormatError, "implausible clip count");
        for (uint32_t j = 0; j < clips; ++j) {
            r.families.push_back(io::read_i32(is));
            DirectivePair p;
            p.speech = read_record_as<TokenList>(is);
            p.motion = read_record_as<TokenList>(is);
            r.prompts.push_back(std::move(p));
            r.audio.push_back(read_record_as<AudioClip>(is));
            r.video.push_back(read_record_as<LatentClip>(is));
        }
        records.push_back(std::move(r));
    }
    return {spec, std::move(records)};
}

}  // namespace mavid
