#include "doctest.h"
#include "fixtures.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "mavid/world.hpp"

using namespace mavid;

namespace {

WorldSpec noiseless() {
    WorldSpec s;
    s.sigma = 0.0;
    return s;
}

}  // namespace

TEST_CASE("records are deterministic and satisfy core invariants") {
    WorldSpec spec;
    ModelConfig cfg;
    for (uint64_t seed = 0; seed < 30; ++seed) {
        WorldRecord a = gen_record(spec, seed), b = gen_record(spec, seed);
        CHECK(a == b);
        REQUIRE(a.audio.size() == static_cast<size_t>(spec.n_clips));
        for (int j = 0; j < spec.n_clips; ++j) {
            CHECK_NOTHROW(validate_clip(a.audio[j], cfg));
            CHECK_NOTHROW(validate_clip(a.video[j]));
            CHECK_NOTHROW(validate_directives(a.prompts[j], cfg));
            CHECK(a.video[j].length() == spec.latent_len);
            CHECK(a.audio[j].length() == spec.audio_len);
            CHECK(classify_family(a.audio[j], spec) == a.families[j]);
            CHECK(a.prompts[j] == spec.prompt(a.families[j], a.motion));
        }
    }
    CHECK_FALSE(gen_record(spec, 1) == gen_record(spec, 2));
}

TEST_CASE("identity stays constant across the clips of a record") {
    WorldSpec spec;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        WorldRecord r = gen_record(spec, seed);
        const int content = spec.audio_vocab - audio_special::count;
        for (const auto& a : r.audio)
            for (int t = 0; t < a.length(); ++t) {
                const int expect = audio_special::count + ((a.at(0, t) - 3) * 2 + 11 * r.identity + 5) % content;
                CHECK(a.at(1, t) == expect);
            }
    }
}

TEST_CASE("noiseless pairs score exactly one") {
    WorldSpec spec = noiseless();
    for (uint64_t seed = 0; seed < 50; ++seed) {
        WorldRecord r = gen_record(spec, seed);
        CHECK(oracle_consistency(r.audio, r.video, spec) == 1.0);
    }
}

TEST_CASE("consistency drops below one when the pair is modified or noisy") {
    WorldSpec spec = noiseless();
    std::mt19937_64 rng(3);
    for (uint64_t seed = 0; seed < 50; ++seed) {
        WorldRecord r = gen_record(spec, seed);
        // Permute the audio tokens of every clip in time.
        auto audio = r.audio;
        for (auto& a : audio) {
            std::vector<int> perm(static_cast<size_t>(a.length()));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            AudioClip p = a;
            for (int t = 0; t < a.length(); ++t)
                for (int k = 0; k < a.codebooks(); ++k) p.at(k, t) = a.at(k, perm[static_cast<size_t>(t)]);
            a = p;
        }
        CHECK(oracle_consistency(audio, r.video, spec) < 1.0);

        // Identical permutation of the clip order on both streams.
        auto a2 = r.audio;
        auto v2 = r.video;
        std::reverse(a2.begin(), a2.end());
        std::reverse(v2.begin(), v2.end());
        CHECK(oracle_consistency(a2, v2, spec) < oracle_consistency(r.audio, r.video, spec));
    }
    WorldSpec loud;
    loud.sigma = 0.5;
    CHECK(oracle_consistency(gen_record(loud, 1).audio, gen_record(loud, 1).video, loud) < 1.0);
}

TEST_CASE("independent noise video scores at or below the Monte-Carlo chance level") {
    WorldSpec spec;
    std::mt19937_64 rng(4);
    WorldRecord r = gen_record(spec, 9);
    auto noise_video = [&] {
        std::vector<LatentClip> v;
        for (int j = 0; j < spec.n_clips; ++j)
            v.emplace_back(fixtures::random_mat(spec.latent_len, spec.latent_dim, rng, spec.identity_scale));
        return v;
    };
    double chance = 0.0;
    for (int i = 0; i < 1000; ++i) chance += oracle_consistency(gen_record(spec, 1000 + i).audio, noise_video(), spec);
    chance /= 1000.0;
    double observed = 0.0;
    for (int i = 0; i < 50; ++i) observed += oracle_consistency(r.audio, noise_video(), spec);
    observed /= 50.0;
    MESSAGE("chance " << chance << " observed " << observed);
    CHECK(chance < 0.2);
    CHECK(observed <= chance + 0.02);
}

TEST_CASE("boundary discontinuity") {
    std::vector<LatentClip> flat(3, LatentClip(Mat::Constant(4, 2, 1.5)));
    CHECK(boundary_discontinuity(flat) == 0.0);
    CHECK_THROWS_AS(boundary_discontinuity({flat[0]}), Error);
    try {
        boundary_discontinuity({flat[0]});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooFewClips);
    }

    // Linear ramp with step 0.1 per latent and an extra jump m at the first boundary.
    auto ramp = [](double m) {
        std::vector<LatentClip> v;
        for (int j = 0; j < 3; ++j) {
            Mat x(4, 2);
            for (int i = 0; i < 4; ++i) x.row(i).setConstant(0.1 * (4 * j + i) + (j >= 1 ? m : 0.0));
            v.emplace_back(x);
        }
        return v;
    };
    double prev = -1.0;
    for (double m : {0.5, 1.0, 2.0, 4.0}) {
        const double expect = (((0.1 + m) * (0.1 + m)) + 0.01) / 2.0 - 0.01;
        const double got = boundary_discontinuity(ramp(m));
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
        CHECK(got > prev);
        prev = got;
    }
    CHECK(boundary_discontinuity(ramp(0.0)) == 0.0);
}

TEST_CASE("ground-truth data has a small boundary discontinuity") {
    WorldSpec spec;
    double total = 0.0;
    for (uint64_t seed = 0; seed < 40; ++seed) total += boundary_discontinuity(gen_record(spec, seed).video);
    CHECK(total / 40 < 0.5);
}

TEST_CASE("dataset and spec round trips") {
    WorldSpec spec;
    spec.sigma = 0.125;
    spec.n_clips = 3;
    CHECK(WorldSpec::from_key_values(parse_key_values(format_key_values(spec.to_key_values()))).to_key_values() ==
          spec.to_key_values());
    auto records = gen_dataset(spec, 42, 12);
    std::stringstream ss;
    write_dataset(ss, spec, records);
    auto [spec2, back] = read_dataset(ss);
    CHECK(back == records);
    CHECK(spec2.to_key_values() == spec.to_key_values());
    for (size_t i = 0; i < records.size(); ++i) CHECK(gen_record(spec, records[i].seed) == records[i]);

    std::stringstream manifest;
    write_manifest(manifest, records);
    std::string first;
    std::getline(manifest, first);
    CHECK(first.find("\"seed\":" + std::to_string(records[0].seed)) != std::string::npos);

    std::string bytes = ss.str();
    bytes[0] = 'X';
    std::stringstream bad(bytes);
    CHECK_THROWS_AS(read_dataset(bad), Error);
}

TEST_CASE("invalid specs are rejected") {
    WorldSpec s;
    s.families = 8;
    CHECK_THROWS_AS(s.validate(), Error);
    WorldSpec c;
    c.classes = 3;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK_THROWS_AS(oracle_consistency({AudioClip(3, 48)}, {}, WorldSpec{}), Error);
}
