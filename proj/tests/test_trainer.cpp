#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "csmil/common.hpp"
#include "csmil/embedder.hpp"
#include "csmil/net.hpp"
#include "csmil/rng.hpp"
#include "csmil/toydata.hpp"
#include "csmil/trainer.hpp"

using namespace csmil;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    DatasetManifest manifest;
    FeatureSet feats;
};

// small micro dataset shared by the trainer tests
const Fixture& fixture() {
    static Fixture fx = [] {
        ToyConfig cfg;
        cfg.kind = DatasetKind::micro;
        cfg.regions_per_class = 6; // 3 train / 1 val / 2 test per class
        cfg.seed = 0;
        cfg.grid_step = 128;
        cfg.out_dir = (fs::temp_directory_path() / "toytrain").string();
        Fixture f;
        f.manifest = generate_toy(cfg);
        EmbedderSpec spec = EmbedderSpec::make(0, 16);
        f.feats = embed_dataset(f.manifest, spec, "");
        return f;
    }();
    return fx;
}

TrainConfig small_train_config() {
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.bags_per_group = 4;
    cfg.lr = 1e-4;
    cfg.weight_decay = 0.0; // convergence tests probe the bare optimizer
    cfg.bag_size = 4;
    cfg.k_clusters = 4;
    cfg.eval_every = 4;
    cfg.net.dim_in = 16;
    cfg.net.dim_hidden = 16;
    cfg.net.dim_attn = 8;
    cfg.net.bag_size = 4;
    return cfg;
}

} // namespace

TEST_CASE("lr zero leaves parameters unchanged") {
    const Fixture& fx = fixture();
    TrainConfig cfg = small_train_config();
    cfg.lr = 0.0;
    TrainResult r = train(fx.feats, fx.manifest, cfg);
    CsMilParams fresh = CsMilParams::init(cfg.net, derive_seed(cfg.seed, 0x1417));
    std::vector<Tensor> a = r.params.all(), b = fresh.all();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].values() == b[i].values());
}

TEST_CASE("training is deterministic") {
    const Fixture& fx = fixture();
    TrainConfig cfg = small_train_config();
    cfg.lr = 1e-3;
    TrainResult r1 = train(fx.feats, fx.manifest, cfg);
    TrainResult r2 = train(fx.feats, fx.manifest, cfg);
    CHECK(r1.log.train_loss == r2.log.train_loss);
    REQUIRE(r1.log.evals.size() == r2.log.evals.size());
    for (size_t i = 0; i < r1.log.evals.size(); ++i) {
        CHECK(r1.log.evals[i].loss == r2.log.evals[i].loss);
        CHECK(r1.log.evals[i].auc == r2.log.evals[i].auc);
    }
    CHECK(r1.log.best_epoch == r2.log.best_epoch);
    std::vector<Tensor> a = r1.params.all(), b = r2.params.all();
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].values() == b[i].values());
}

TEST_CASE("best epoch minimizes validation loss") {
    const Fixture& fx = fixture();
    TrainConfig cfg = small_train_config();
    cfg.epochs = 16;
    cfg.lr = 1e-3;
    TrainResult r = train(fx.feats, fx.manifest, cfg);
    REQUIRE(!r.log.evals.empty());
    double best = r.log.evals[0].loss;
    size_t best_epoch = r.log.evals[0].epoch;
    for (const EvalPoint& e : r.log.evals)
        if (e.loss < best) {
            best = e.loss;
            best_epoch = e.epoch;
        }
    CHECK(r.log.best_epoch == best_epoch);
}

TEST_CASE("separable toy groups reach low train loss") {
    const Fixture& fx = fixture();
    TrainConfig cfg = small_train_config();
    cfg.epochs = 100;
    cfg.lr = 1e-3;
    TrainResult r = train(fx.feats, fx.manifest, cfg);
    CHECK(r.log.train_loss.back() < 0.1);
}

TEST_CASE("training aborts on invalid config") {
    const Fixture& fx = fixture();
    TrainConfig cfg = small_train_config();
    cfg.eval_every = 0;
    CHECK_THROWS_AS(train(fx.feats, fx.manifest, cfg), ConfigError);
    cfg = small_train_config();
    cfg.epochs = 2;
    cfg.eval_every = 4;
    CHECK_THROWS_AS(train(fx.feats, fx.manifest, cfg), ConfigError);
    cfg = small_train_config();
    cfg.lr = -1.0;
    CHECK_THROWS_AS(train(fx.feats, fx.manifest, cfg), ConfigError);
}

TEST_CASE("one optimizer step does not increase the bag loss") {
    const Fixture& fx = fixture();
    GroupIndex groups = build_groups(fx.manifest, Split::train);
    size_t ok = 0;
    const size_t trials = 20;
    for (uint64_t seed = 0; seed < trials; ++seed) {
        NetConfig net;
        net.dim_in = 16;
        net.dim_hidden = 16;
        net.dim_attn = 8;
        CsMilParams p = CsMilParams::init(net, seed);
        std::vector<Bag> bags = make_naive_train_bags(groups, 4, 1, seed);
        const Bag& bag = bags[seed % bags.size()];
        AdamOptimizer opt(p.all(), 1e-4, 0.9, 0.999, 1e-8);
        Tape tape;
        Tensor loss = nll_loss(tape, forward_bag(tape, p, bag_inputs(fx.feats, bag, net)),
                               bag.label);
        double before = loss.scalar_value();
        tape.backward(loss);
        opt.step();
        tape.reset();
        Tensor after = nll_loss(tape, forward_bag(tape, p, bag_inputs(fx.feats, bag, net)),
                                bag.label);
        if (after.scalar_value() <= before) ++ok;
    }
    CHECK(ok >= trials * 9 / 10);
}

TEST_CASE("optimizer validates the decay mask") {
    NetConfig net;
    net.dim_in = 4;
    net.dim_hidden = 4;
    net.dim_attn = 2;
    CsMilParams p = CsMilParams::init(net, 1);
    CHECK_THROWS_AS(AdamOptimizer(p.all(), 1e-3, 0.9, 0.999, 1e-8, 0.1, {1.0, 0.0}),
                    ConfigError);
}

TEST_CASE("evaluate produces region-level metrics and clean attention sums") {
    const Fixture& fx = fixture();
    TrainConfig cfg = small_train_config();
    cfg.lr = 1e-3;
    TrainResult r = train(fx.feats, fx.manifest, cfg);
    EvalResult ev = evaluate(r.params, fx.feats, fx.manifest, Split::test, 10, 4, 99);
    CHECK(ev.region_scores.scores.size() == 4); // 2 test regions per class
    CHECK(ev.auc >= 0.0);
    CHECK(ev.auc <= 1.0);
    CHECK(ev.max_scale_attn_err <= 1e-6);
    CHECK(ev.max_pool_attn_err <= 1e-6);
    CHECK(ev.bags.size() == 40);
}
