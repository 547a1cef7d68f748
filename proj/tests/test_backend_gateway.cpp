// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/backend_gateway.hpp"
#include "gcot/core_model.hpp"

#include "support/test_support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace gcot;
using namespace std::chrono_literals;

namespace {

/// Local chat-completions server; the handler decides each response.
class FakeServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    explicit FakeServer(Handler h) : handler_(std::move(h)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            handler_(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int hits() const { return hits_; }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    std::thread thread_;
};

BackendProfile http_profile(const std::string& url, int retries = 3, int in_flight = 4) {
    BackendProfile p;
    p.name = "http-test";
    p.endpoint_url = url;
    p.auth_env_var = "GCOT_TEST_TOKEN";
    p.timeout_s = 5;
    p.max_retries = retries;
    p.max_in_flight = in_flight;
    return p;
}

ChatRequest simple_request() { return make_user_request("m", "hello", std::nullopt); }

struct RecordingSleeper {
    std::shared_ptr<std::vector<std::chrono::milliseconds>> delays = std::make_shared<std::vector<std::chrono::milliseconds>>();
    Gateway::Sleeper fn() {
        auto d = delays;
        return [d](std::chrono::milliseconds ms) { d->push_back(ms); };
    }
};

}  // namespace

TEST_CASE("backoff doubles from one second") {
    CHECK(Gateway::backoff_delay(1) == 1000ms);
    CHECK(Gateway::backoff_delay(2) == 2000ms);
    CHECK(Gateway::backoff_delay(3) == 4000ms);
}

TEST_CASE("successful call sends a bearer token and returns the content") {
    ::setenv("GCOT_TEST_TOKEN", "sekrit", 1);
    std::string auth, body;
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        body = req.body;
        res.set_content(make_completion_body("m", "The answer *Answer*: 4"), "application/json");
    });
    Gateway gw;
    const auto profile = http_profile(server.url());
    CHECK(gw.complete(profile, simple_request()) == "The answer *Answer*: 4");
    CHECK(auth == "Bearer sekrit");
    CHECK(body == serialize_request(simple_request()));
    CHECK(request_from_wire(nlohmann::json::parse(body)) == simple_request());
    ::unsetenv("GCOT_TEST_TOKEN");
}

TEST_CASE("429 is retried and then succeeds") {
    std::atomic<int> calls{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        if (calls++ < 2) {
            res.status = 429;
            return;
        }
        res.set_content(make_completion_body("m", "ok"), "application/json");
    });
    RecordingSleeper sleeper;
    Gateway gw(sleeper.fn());
    CHECK(gw.complete(http_profile(server.url()), simple_request()) == "ok");
    CHECK(server.hits() == 3);
    CHECK(*sleeper.delays == std::vector<std::chrono::milliseconds>{1000ms, 2000ms});
    const auto c = gw.counters("http-test");
    CHECK(c.attempts == 3);
    CHECK(c.retries == 2);
    CHECK(c.failures == 0);
}

TEST_CASE("5xx exhausts retries with 1, 2, 4 second backoff") {
    FakeServer server([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    RecordingSleeper sleeper;
    Gateway gw(sleeper.fn());
    CHECK_THROWS_AS(gw.complete(http_profile(server.url(), 3), simple_request()), TransportError);
    CHECK(server.hits() == 4);
    CHECK(*sleeper.delays == std::vector<std::chrono::milliseconds>{1000ms, 2000ms, 4000ms});
    CHECK(gw.counters("http-test").failures == 1);
}

TEST_CASE("400 fails without retrying") {
    FakeServer server([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    RecordingSleeper sleeper;
    Gateway gw(sleeper.fn());
    CHECK_THROWS_AS(gw.complete(http_profile(server.url()), simple_request()), TransportError);
    CHECK(server.hits() == 1);
    CHECK(sleeper.delays->empty());
}

TEST_CASE("malformed body is a protocol error") {
    FakeServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    Gateway gw([](std::chrono::milliseconds) {});
    CHECK_THROWS_AS(gw.complete(http_profile(server.url()), simple_request()), ProtocolError);
    CHECK_THROWS_AS(extract_completion_text("<html>"), ProtocolError);
}

TEST_CASE("connection refused is a transport error after retries") {
    Gateway gw([](std::chrono::milliseconds) {});
    auto p = http_profile("http://127.0.0.1:1/v1", 1);
    p.timeout_s = 1;
    CHECK_THROWS_AS(gw.complete(p, simple_request()), TransportError);
    CHECK(gw.counters("http-test").attempts == 2);
}

TEST_CASE("in-flight bound holds under concurrency") {
    std::atomic<int> active{0}, peak{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        const int now = ++active;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {}
        std::this_thread::sleep_for(30ms);
        --active;
        res.set_content(make_completion_body("m", "ok"), "application/json");
    });
    Gateway gw;
    const auto profile = http_profile(server.url(), 0, 2);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { gw.complete(profile, simple_request()); });
    for (auto& t : threads) t.join();
    CHECK(peak.load() <= 2);
    CHECK(gw.counters("http-test").peak_in_flight == 2);
    CHECK(gw.counters("http-test").requests == 8);
}

TEST_CASE("oracle profiles bypass HTTP and propagate oracle exceptions") {
    auto oracle = std::make_shared<gcot::testing::ScriptOracle>([](const ChatRequest& r) -> std::string {
        if (r.all_text() == "boom") throw UnclassifiablePrompt("no rule");
        return "echo " + r.all_text();
    });
    Gateway gw;
    const auto p = gcot::testing::oracle_profile(oracle);
    CHECK(gw.complete(p, simple_request()) == "echo hello");
    CHECK_THROWS_AS(gw.complete(p, make_user_request("m", "boom", std::nullopt)), UnclassifiablePrompt);
    CHECK(oracle->requests().size() == 2);
}

TEST_CASE("profile validation") {
    BackendProfile p;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p.endpoint_url = "http://x";
    p.max_in_flight = 0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p.max_in_flight = 1;
    p.max_retries = -1;
    CHECK_THROWS_AS(validate(p), ConfigError);
}

TEST_CASE("wire body round trips with image and seed") {
    ImageAttachment img{"image/png", {1, 2, 3, 250}};
    auto req = make_user_request("m", "t", img, 0.8, 64);
    req.seed = 17;
    const auto body = to_wire_json(req);
    CHECK(body.at("seed") == 17);
    CHECK(body.at("messages")[0]["content"][1]["image_url"]["url"] == "data:image/png;base64,AQID+g==");
    CHECK(request_from_wire(body) == req);
    CHECK(req.image()->bytes == img.bytes);
}
