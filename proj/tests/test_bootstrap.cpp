// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/bootstrap.hpp"
#include "gcot/dataset_io.hpp"
#include "gcot/synth_world.hpp"
#include "gcot/target_extractor.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

using namespace gcot;
using namespace gcot::testing;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    TempDir dir;
    std::shared_ptr<SynthWorld> world;
    std::vector<GroundingJob> jobs;

    Fixture(std::uint64_t seed, int images, int items)
        : world(std::make_shared<SynthWorld>(generate_world(seed, images, items, dir / "world"))) {
        for (const auto& s : world->qa) {
            const auto targets = extract_targets(synth_cot_text(*world, s, false));
            jobs.push_back({s, build_sub_questions(targets)});
        }
    }

    std::vector<replay::GroundingItem> items() const {
        std::vector<replay::GroundingItem> out;
        for (const auto& j : jobs)
            for (const auto& q : j.sub_questions) out.push_back({j.sample.image.id, q.target.surface});
        return out;
    }

    BootstrapConfig config(const std::string& state, int iterations = 3) const {
        BootstrapConfig c;
        c.max_iterations = iterations;
        c.state_dir = dir / state;
        c.base_model = "base";
        c.trainer = std::make_shared<NoopTrainer>();
        return c;
    }
};

OraclePolicy schedule_policy(std::vector<double> schedule, std::uint64_t seed) {
    OraclePolicy p;
    p.recall_schedule = std::move(schedule);
    p.seed = seed;
    return p;
}

struct CrashAfter {
    int iteration;
};

}  // namespace

TEST_CASE("perfect oracle verifies everything in one iteration") {
    Fixture f(1, 4, 4);
    const auto profile = oracle_configure(f.world, {});
    Gateway gw;
    const auto state = run_bootstrap(f.jobs, gw, profile, f.config("s", 1));
    CHECK(state.iteration == 1);
    CHECK(state.counts_per_iteration == std::vector<int>{16});
    CHECK(state.model_ref == "base@1");
    CHECK_FALSE(state.training_pending);
    for (const auto& job : f.jobs) {
        const auto& boxes = state.verified.at(job.sample.sample_id);
        REQUIRE(boxes.size() == job.sub_questions.size());
        const auto* img = f.world->find_image(job.sample.image.id);
        for (const auto& b : boxes) {
            CHECK(b.verdict == Verdict::match);
            CHECK(*b.box == quantize(cell_for_target(*img, b.sub_question.target.surface)->box));
        }
    }
}

TEST_CASE("counts follow the recall schedule replay") {
    for (std::uint64_t seed : {3ULL, 4ULL, 5ULL}) {
        CAPTURE(seed);
        Fixture f(seed, 25, 4);
        REQUIRE(f.items().size() == 100);
        const std::vector<double> schedule{0.4, 0.7, 0.9};
        const auto profile = oracle_configure(f.world, schedule_policy(schedule, seed * 7));
        Gateway gw;
        const auto state = run_bootstrap(f.jobs, gw, profile, f.config("s"));
        CHECK(state.counts_per_iteration == replay::expected_counts(f.items(), schedule, seed * 7, 3));
        CHECK(std::is_sorted(state.counts_per_iteration.begin(), state.counts_per_iteration.end()));
        CHECK(state.model_ref == "base@3");
    }
}

TEST_CASE("iteration files and manifest") {
    Fixture f(2, 3, 3);
    const auto profile = oracle_configure(f.world, schedule_policy({0.5, 1.0}, 9));
    Gateway gw;
    const auto cfg = f.config("s", 2);
    const auto state = run_bootstrap(f.jobs, gw, profile, cfg);
    for (int k : {1, 2}) {
        const auto k_str = std::to_string(k);
        CHECK(fs::exists(cfg.state_dir / ("verified_iter" + k_str + ".jsonl")));
        const auto conv = read_records<ConversationRecord>(cfg.state_dir / ("grounding_iter" + k_str + ".jsonl"));
        CHECK(static_cast<int>(conv.size()) == state.counts_per_iteration[k - 1]);
        for (const auto& c : conv) {
            CHECK(c.user_text.starts_with("Where is the "));
            CHECK(c.user_text.ends_with("? Please provide the bounding box coordinate of the region."));
            CHECK(find_quadruple(c.assistant_text).has_value());
        }
        const auto mpath = cfg.state_dir / ("train_iter" + k_str + ".json");
        const auto manifests = read_records<TrainingManifest>(mpath);
        REQUIRE(manifests.size() == 1);
        CHECK(manifests[0].task == TrainingTask::grounding);
        CHECK(manifests[0].base_model == "base");
        CHECK(fs::path(manifests[0].records_uri).is_absolute());
        CHECK(fs::path(manifests[0].records_uri).filename() == "grounding_iter" + k_str + ".jsonl");
        CHECK(read_text_file(fs::path(mpath).concat(".out")) == "base@" + k_str + "\n");
    }
    CHECK(state.counts_per_iteration.back() == 12);
    CHECK(load_state(cfg.state_dir) == state);
}

TEST_CASE("already matched targets are not asked again") {
    Fixture f(6, 3, 3);
    const auto profile = oracle_configure(f.world, schedule_policy({0.5, 0.5, 0.5}, 1));
    auto spy = std::make_shared<ScriptOracle>([&](const ChatRequest& r) { return profile.oracle->answer(r); });
    Gateway gw;
    const auto state = run_bootstrap(f.jobs, gw, oracle_profile(spy), f.config("s"));
    int grounding_calls = 0;
    for (const auto& r : spy->requests()) grounding_calls += r.all_text().find("Where is the") != std::string::npos;
    const auto& c = state.counts_per_iteration;
    CHECK(grounding_calls == 12 + (12 - c[0]) + (12 - c[1]));
}

TEST_CASE("crash after iteration two resumes to the same state") {
    Fixture f(8, 10, 4);
    const std::vector<double> schedule{0.4, 0.7, 0.9};
    const auto profile = oracle_configure(f.world, schedule_policy(schedule, 21));
    Gateway gw;
    const auto straight = run_bootstrap(f.jobs, gw, profile, f.config("straight"));

    auto crashing = f.config("crash");
    crashing.after_iteration = [](const BootstrapState& s) {
        if (s.iteration == 2) throw CrashAfter{2};
    };
    CHECK_THROWS_AS(run_bootstrap(f.jobs, gw, profile, crashing), CrashAfter);
    const auto partial = load_state(crashing.state_dir);
    CHECK(partial.iteration == 2);
    CHECK_FALSE(fs::exists(crashing.state_dir / "verified_iter3.jsonl"));

    const auto resumed = run_bootstrap(f.jobs, gw, profile, f.config("crash"));
    CHECK(resumed == straight);
    for (int k = 1; k <= 3; ++k) {
        const auto name = "verified_iter" + std::to_string(k) + ".jsonl";
        CHECK(slurp(f.dir / "straight" / name) == slurp(f.dir / "crash" / name));
    }
    // Running again is a no-op.
    CHECK(run_bootstrap(f.jobs, gw, profile, f.config("crash")) == straight);
}

TEST_CASE("trainer failure leaves a pending step that resume completes") {
    Fixture f(9, 4, 3);
    const auto profile = oracle_configure(f.world, schedule_policy({0.5, 0.8}, 2));
    Gateway gw;
    const auto straight = run_bootstrap(f.jobs, gw, profile, f.config("straight", 2));

    class FailOnce final : public Trainer {
    public:
        std::string train(const TrainRequest& r) override {
            if (r.iteration == 2 && !failed_) {
                failed_ = true;
                throw TrainerFailed("out of memory");
            }
            return NoopTrainer().train(r);
        }

    private:
        bool failed_ = false;
    };
    auto cfg = f.config("flaky", 2);
    cfg.trainer = std::make_shared<FailOnce>();
    CHECK_THROWS_AS(run_bootstrap(f.jobs, gw, profile, cfg), TrainerFailed);
    const auto pending = load_state(cfg.state_dir);
    CHECK(pending.training_pending);
    CHECK(pending.iteration == 2);
    CHECK(pending.model_ref == "base@1");
    int resumed_hooks = 0;
    cfg.after_iteration = [&](const BootstrapState&) { ++resumed_hooks; };
    CHECK(run_bootstrap(f.jobs, gw, profile, cfg) == straight);
    CHECK(resumed_hooks == 1);
}

TEST_CASE("command trainer contract") {
    TempDir dir;
    spit(dir / "ok.sh", "#!/bin/sh\necho \"tuned-$(basename \"$1\")\" > \"$1.out\"\n");
    spit(dir / "silent.sh", "#!/bin/sh\nexit 0\n");
    spit(dir / "fail.sh", "#!/bin/sh\necho nope >&2\nexit 3\n");
    spit(dir / "train iter1.json", "{}\n");
    TrainRequest req{{}, dir / "train iter1.json", "base", 1};

    CommandTrainer ok("sh " + (dir / "ok.sh").string());
    CHECK(ok.train(req) == "tuned-train iter1.json");
    spit(fs::path(req.manifest_path).concat(".out"), "stale\n");
    CHECK_THROWS_AS(CommandTrainer("sh " + (dir / "silent.sh").string()).train(req), TrainerFailed);
    CHECK_THROWS_AS(CommandTrainer("sh " + (dir / "fail.sh").string()).train(req), TrainerFailed);
    CHECK_THROWS_AS(CommandTrainer("  "), InvalidArgument);
}

TEST_CASE("state validation") {
    Fixture f(10, 2, 2);
    const auto profile = oracle_configure(f.world, {});
    Gateway gw;
    const auto cfg = f.config("s", 2);
    run_bootstrap(f.jobs, gw, profile, cfg);
    auto text = read_text_file(cfg.state_dir / "state.json");
    spit(cfg.state_dir / "state.json", "{\"v\":\"v1\",\"iteration\":2,\"counts_per_iteration\":[4,5],"
                                        "\"model_ref\":\"base@2\",\"training_pending\":false}");
    CHECK_THROWS_AS(load_state(cfg.state_dir), SchemaError);
    spit(cfg.state_dir / "state.json", "[]");
    CHECK_THROWS_AS(load_state(cfg.state_dir), SchemaError);
    spit(cfg.state_dir / "state.json", text);
    CHECK_NOTHROW(load_state(cfg.state_dir));

    BootstrapConfig bad = cfg;
    bad.trainer.reset();
    CHECK_THROWS_AS(run_bootstrap(f.jobs, gw, profile, bad), InvalidArgument);
    bad = cfg;
    CHECK_THROWS_AS(run_iteration(load_state(cfg.state_dir), f.jobs, gw, profile, bad), InvalidArgument);
}
