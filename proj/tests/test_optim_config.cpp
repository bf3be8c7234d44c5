#include "doctest.h"
#include "fixtures.hpp"

#include <cmath>
#include <sstream>

#include "mavid/checkpoint.hpp"
#include "mavid/config.hpp"
#include "mavid/optim.hpp"

using namespace mavid;

namespace {

// Loss mse(p, target) has gradient 2 (p - target) / size.
struct Quadratic {
    nn::ParamStore store;
    ag::Var a, b;
    Mat ta, tb;

    Quadratic() {
        std::mt19937_64 rng(1);
        a = store.add("a", fixtures::random_mat(2, 3, rng));
        b = store.add("b", fixtures::random_mat(1, 4, rng));
        ta = fixtures::random_mat(2, 3, rng);
        tb = fixtures::random_mat(1, 4, rng);
    }

    void accumulate(int times) {
        for (int i = 0; i < times; ++i)
            ag::backward(ag::sum({ag::mse(a, ag::constant(ta)), ag::mse(b, ag::constant(tb))}));
    }

    Mat grad_a() const { return 2.0 * (a.value() - ta) / 6.0; }
    Mat grad_b() const { return 2.0 * (b.value() - tb) / 4.0; }
};

}  // namespace

TEST_CASE("sgd with momentum follows the recurrence") {
    Quadratic q;
    OptimizerConfig oc;
    oc.lr = 0.1;
    oc.momentum = 0.5;
    oc.clip_norm = 0.0;
    Optimizer opt(q.store, oc);
    Mat ma = Mat::Zero(2, 3), mb = Mat::Zero(1, 4);
    Mat wa = q.a.value(), wb = q.b.value();
    for (int s = 0; s < 5; ++s) {
        const Mat ga = q.grad_a(), gb = q.grad_b();
        q.store.zero_grad();
        q.accumulate(3);
        const double norm = opt.step(q.store, 3);
        CHECK(norm == doctest::Approx(std::sqrt(ga.squaredNorm() + gb.squaredNorm())).epsilon(1e-12));
        ma = 0.5 * ma + ga;
        mb = 0.5 * mb + gb;
        wa -= 0.1 * ma;
        wb -= 0.1 * mb;
        CHECK((q.a.value() - wa).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((q.b.value() - wb).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(opt.steps() == 5);
}

TEST_CASE("adam follows the bias-corrected recurrence") {
    Quadratic q;
    OptimizerConfig oc;
    oc.kind = OptimizerKind::adam;
    oc.lr = 0.01;
    oc.clip_norm = 0.0;
    Optimizer opt(q.store, oc);
    Mat m = Mat::Zero(2, 3), v = Mat::Zero(2, 3), w = q.a.value();
    for (int t = 1; t <= 4; ++t) {
        const Mat g = q.grad_a();
        q.store.zero_grad();
        q.accumulate(1);
        opt.step(q.store, 1);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g.cwiseProduct(g);
        const Mat mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
        w.array() -= 0.01 * mh.array() / (vh.array().sqrt() + 1e-8);
        CHECK((q.a.value() - w).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("gradient clipping bounds the update norm") {
    Quadratic q;
    OptimizerConfig oc;
    oc.lr = 1.0;
    oc.momentum = 0.0;
    oc.clip_norm = 0.01;
    Optimizer opt(q.store, oc);
    const Mat wa = q.a.value(), wb = q.b.value();
    q.accumulate(1);
    const double norm = opt.step(q.store, 1);
    CHECK(norm > 0.01);
    const double moved = std::sqrt((q.a.value() - wa).squaredNorm() + (q.b.value() - wb).squaredNorm());
    CHECK(moved == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("optimizer state restores the trajectory") {
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
        OptimizerConfig oc;
        oc.kind = kind;
        oc.lr = 0.05;
        Quadratic full, part;
        Optimizer o1(full.store, oc), o2(part.store, oc);
        for (int s = 0; s < 3; ++s) {
            full.store.zero_grad(), full.accumulate(1), o1.step(full.store, 1);
            part.store.zero_grad(), part.accumulate(1), o2.step(part.store, 1);
        }
        Quadratic resumed;
        resumed.a.mutable_value() = part.a.value();
        resumed.b.mutable_value() = part.b.value();
        Optimizer o3(resumed.store, oc);
        o3.load_state(o2.state(), o2.steps());
        for (int s = 0; s < 3; ++s) {
            full.store.zero_grad(), full.accumulate(1), o1.step(full.store, 1);
            resumed.store.zero_grad(), resumed.accumulate(1), o3.step(resumed.store, 1);
        }
        CHECK(full.a.value() == resumed.a.value());
        CHECK(full.b.value() == resumed.b.value());
    }
    Quadratic q;
    Optimizer opt(q.store, OptimizerConfig{});
    CHECK_THROWS_AS(opt.load_state({}, 1), Error);
    OptimizerConfig bad;
    bad.lr = 0.0;
    CHECK_THROWS_AS(Optimizer(q.store, bad), Error);
    CHECK(parse_optimizer("adam") == OptimizerKind::adam);
    CHECK_THROWS_AS(parse_optimizer("lbfgs"), Error);
}

TEST_CASE("run config text round trip") {
    RunConfig c;
    c.model.d_model = 32;
    c.model.fusion = false;
    c.world.sigma = 0.125;
    c.optimizer.kind = OptimizerKind::adam;
    c.optimizer.lr = 1.0 / 3.0;
    c.stage = Stage::joint;
    c.history = false;
    c.checkpoint_dir = "ck dir";
    RunConfig back = RunConfig::from_text(c.to_text());
    CHECK(back.to_key_values() == c.to_key_values());
    CHECK(back.optimizer.lr == c.optimizer.lr);
    CHECK(back.resume_hash() == c.resume_hash());
    CHECK(back.model_hash() == c.model_hash());

    RunConfig other = c;
    other.optimizer.lr = 0.5;
    CHECK(other.resume_hash() != c.resume_hash());
    CHECK(other.model_hash() == c.model_hash());
    other = c;
    other.steps = 9;
    other.report_dir = "elsewhere";
    CHECK(other.resume_hash() == c.resume_hash());
}

TEST_CASE("run config rejects bad input") {
    CHECK_THROWS_WITH_AS(RunConfig::from_text("train.stepz = 3\n"), doctest::Contains("unknown config key"), Error);
    CHECK_THROWS_WITH_AS(RunConfig::from_text("schema_version = 2\n"), doctest::Contains("schema_version"), Error);
    CHECK_THROWS_AS(RunConfig::from_text("train.steps = many\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_text("train.stage = warmup\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_text("world.audio_len = 24\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_text("train.batch = 0\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_text("model.d_model = 30\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_text("train.steps = 1\ntrain.steps = 2\n"), Error);
    CHECK_THROWS_AS(load_run_config("/nonexistent/run.cfg"), Error);
    RunConfig shaped = RunConfig::from_text("model.audio_len = 24\nmodel.latent_len = 6\n# comment\n");
    CHECK(shaped.world.audio_len == 24);
    CHECK(shaped.world.latent_len == 6);
}

TEST_CASE("checkpoint binary round trip") {
    Checkpoint ck;
    ck.component = "creator";
    ck.stage = "joint";
    ck.step = 1234567890123ull;
    ck.config_text = RunConfig{}.to_text();
    ck.config_hash = RunConfig{}.resume_hash();
    std::mt19937_64 rng(2);
    ck.blobs = {{"w", fixtures::random_mat(3, 5, rng)}, {"empty", Mat(0, 4)}, {"s", Mat::Constant(1, 1, -0.0)}};
    ck.rng_state = "1 2 3";
    std::stringstream ss;
    write_checkpoint(ss, ck);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "MVCK");
    Checkpoint back = read_checkpoint(ss);
    CHECK(back.component == ck.component);
    CHECK(back.stage == ck.stage);
    CHECK(back.step == ck.step);
    CHECK(back.config_text == ck.config_text);
    CHECK(back.config_hash == ck.config_hash);
    CHECK(back.rng_state == ck.rng_state);
    REQUIRE(back.blobs.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.blobs[i].first == ck.blobs[i].first);
        CHECK(back.blobs[i].second == ck.blobs[i].second);
    }
    CHECK(std::signbit(back.blobs[2].second(0, 0)));

    for (size_t cut : {size_t{0}, size_t{3}, size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        std::stringstream t(bytes.substr(0, cut));
        CHECK_THROWS_AS(read_checkpoint(t), Error);
    }
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream bm(bad_magic);
    CHECK_THROWS_WITH_AS(read_checkpoint(bm), doctest::Contains("magic"), Error);
    std::string bad_version = bytes;
    bad_version[4] = 9;
    std::stringstream bv(bad_version);
    CHECK_THROWS_WITH_AS(read_checkpoint(bv), doctest::Contains("version"), Error);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt"), Error);
}

TEST_CASE("parameter export and import") {
    nn::ParamStore a, b;
    std::mt19937_64 rng(5);
    a.normal("x", 2, 2, 1.0, rng);
    a.normal("y", 1, 3, 1.0, rng);
    b.zeros("x", 2, 2);
    b.zeros("y", 1, 3);
    Checkpoint ck;
    export_params(a, ck);
    import_params(b, ck);
    CHECK(a.find("x").value() == b.find("x").value());
    CHECK(a.find("y").value() == b.find("y").value());

    nn::ParamStore wrong;
    wrong.zeros("x", 3, 2);
    CHECK_THROWS_WITH_AS(import_params(wrong, ck), doctest::Contains("shape"), Error);
    nn::ParamStore extra;
    extra.zeros("z", 1, 1);
    CHECK_THROWS_WITH_AS(import_params(extra, ck), doctest::Contains("lacks"), Error);
}
