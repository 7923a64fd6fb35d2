#include "coz/metrics.hpp"
#include "coz/prompt_extraction.hpp"
#include "coz/rewards.hpp"
#include "coz/scale_chain.hpp"
#include "coz/sr_backends.hpp"

#include "stub_server.hpp"
#include "synthetic.hpp"

#include <doctest.h>

using namespace coz;
using testing::SrFault;
using testing::StubBehavior;
using testing::StubServer;

namespace {

StubBehavior faulty(SrFault fault) {
    StubBehavior b;
    b.sr_fault = fault;
    return b;
}

Endpoint quick(const StubServer& s, int timeout_ms = 2000) {
    return {s.url(), std::chrono::milliseconds(timeout_ms)};
}

SRRequest request(const Image& img, const std::string& id = "img:step1") {
    SRRequest r;
    r.image = img;
    r.prompt_text = "fur";
    r.scale_hint = 4;
    r.request_id = id;
    r.seed = 5;
    return r;
}

FailureKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const RemoteError& e) {
        return e.kind();
    }
    FAIL("no RemoteError thrown");
    return FailureKind::transport;
}

}  // namespace

TEST_CASE("remote backend sends the prepared window and validates the echo") {
    StubServer stub;
    const RemoteBackend backend(quick(stub));
    const Image img = testing::random_image(32, 1);
    const SRResponse resp = backend.upscale(request(img));
    const Image expected = quantize8(zoom_window(img, 4, ResizeKernel::bicubic));
    CHECK(resp.image == expected);
    CHECK(resp.backend_meta.at("stub") == "echo");

    const auto reqs = stub.requests("/v1/sr");
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0]["request_id"] == "img:step1");
    CHECK(reqs[0]["prompt"] == "fur");
    CHECK(reqs[0]["scale"] == 4);
    CHECK(reqs[0]["seed"] == 5);
    CHECK(stub.replies("/v1/sr")[0]["request_id"] == reqs[0]["request_id"]);
}

TEST_CASE("remote backend faults are typed") {
    StubServer stub;
    const Image img = testing::random_image(32, 2);

    stub.set_behavior(faulty(SrFault::wrong_dimension));
    CHECK(kind_of([&] { RemoteBackend(quick(stub)).upscale(request(img)); }) == FailureKind::wrong_dimension);

    stub.set_behavior(faulty(SrFault::http_500));
    stub.clear();
    CHECK(kind_of([&] { RemoteBackend(quick(stub)).upscale(request(img)); }) == FailureKind::http_status);
    CHECK(stub.requests("/v1/sr").size() == 1);

    stub.set_behavior(faulty(SrFault::malformed));
    CHECK(kind_of([&] { RemoteBackend(quick(stub)).upscale(request(img)); }) == FailureKind::malformed);

    stub.set_behavior(faulty(SrFault::wrong_request_id));
    CHECK(kind_of([&] { RemoteBackend(quick(stub)).upscale(request(img)); }) == FailureKind::malformed);

    StubBehavior slow;
    slow.sr_fault = SrFault::slow;
    slow.slow_ms = 500;
    stub.set_behavior(slow);
    stub.clear();
    try {
        RemoteBackend(quick(stub, 150)).upscale(request(img, "slow:step1"));
        FAIL("expected timeout");
    } catch (const BackendError& e) {
        CHECK(e.kind() == FailureKind::timeout);
        CHECK(e.request_id() == "slow:step1");
    }
    CHECK(stub.requests("/v1/sr").size() == 2);
}

TEST_CASE("unreachable endpoint is a transport error") {
    int port = 0;
    {
        StubServer gone;
        port = std::stoi(gone.url().substr(gone.url().rfind(':') + 1));
    }
    const Endpoint ep{"http://127.0.0.1:" + std::to_string(port), std::chrono::milliseconds(500)};
    CHECK(kind_of([&] { RemoteBackend(ep).upscale(request(testing::random_image(16, 1))); }) == FailureKind::transport);
}

TEST_CASE("chain over the stub records typed errors and truncates") {
    StubServer stub(faulty(SrFault::wrong_dimension));
    const RemoteBackend backend(quick(stub));
    ZoomConfig cfg;
    cfg.base_resolution = 32;
    cfg.recursions = 2;
    const NullPromptSource null_src;
    const auto t = run_chain(make_initial_state(testing::random_image(32, 3)), cfg, backend, null_src, "w");
    CHECK(t.states.size() == 1);
    REQUIRE(t.errors.size() == 1);
    CHECK(t.errors[0].kind == "wrong_dimension");
    CHECK(t.errors[0].request_id == "w:step1");
}

TEST_CASE("vlm prompt source and critic over the stub") {
    StubBehavior b;
    b.prompt_text = "fur";
    b.critic_text = "Rating (0-100): 88";
    StubServer stub(b);
    const VlmPromptSource src(VlmClient(quick(stub)), Decoding{});
    Image a = testing::random_image(16, 1), c = testing::random_image(16, 2);
    PromptContext ctx;
    ctx.step = 2;
    ctx.images = {{0, &a}, {1, &c}};
    ctx.image_id = "cat";
    ctx.seed = 3;
    const Prompt p = src.extract(ctx);
    CHECK(p.text == "fur");
    CHECK(p.length() == 1);
    CHECK(p.mode == PromptMode::vlm);
    CHECK(p.conditioning_indices == std::vector<int>{0, 1});
    const auto req = stub.requests("/v1/prompt").at(0);
    CHECK(req["request_id"] == "cat:prompt2");
    CHECK(req["prompt"] == base_vlm_template(2));
    CHECK(req["images_png_b64"].size() == 2);
    CHECK(image_from_png_b64(req["images_png_b64"][0].get<std::string>()) == a);

    const CriticClient critic{VlmClient(quick(stub))};
    const std::string reply = critic.rate(a, c, "fur", "cat:critic");
    CHECK(parse_critic_reply(reply) == 88.0);
    const auto creq = stub.requests("/v1/prompt").at(1);
    CHECK(creq["template_id"] == "critic");
    CHECK(creq["prompt"] == critic_template("fur"));

    b.prompt_text = " ... ";
    stub.set_behavior(b);
    CHECK(kind_of([&] { src.extract(ctx); }) == FailureKind::empty_output);
}

TEST_CASE("metric registry and remote metrics") {
    CHECK(metric_info("niqe").direction == MetricDirection::lower_is_better);
    CHECK(metric_info("niqe").worst_value == 100.0);
    for (const char* m : {"musiq", "maniqa", "clipiqa"}) {
        CHECK(metric_info(m).direction == MetricDirection::higher_is_better);
        CHECK(metric_info(m).worst_value == 0.0);
    }
    CHECK_THROWS(metric_info("psnr"));

    StubBehavior b;
    b.metric_scores = {{"musiq", 48.22}, {"niqe", 9.8260}};
    StubServer stub(b);
    const RemoteMetricClient client(quick(stub));
    CHECK(client.score(testing::random_image(8, 1), "musiq", "x") == 48.22);
    CHECK(client.score(testing::random_image(8, 1), "niqe", "x") == 9.8260);
    CHECK(stub.requests("/v1/metric")[0]["metric"] == "musiq");
    CHECK(kind_of([&] { client.score(testing::random_image(8, 1), "maniqa", "x"); }) == FailureKind::http_status);

    const MetricEvaluator eval(std::nullopt, quick(stub));
    const MetricReport rep = eval.evaluate_all(testing::random_image(8, 1), {"musiq", "maniqa", "niqe"}, "r");
    CHECK(rep.cells.at("musiq").value == 48.22);
    CHECK_FALSE(rep.cells.at("musiq").failed);
    CHECK(rep.cells.at("maniqa").value == 0.0);
    CHECK(rep.cells.at("maniqa").failed);
    CHECK(rep.cells.at("niqe").value == 100.0);
    CHECK(rep.cells.at("niqe").failed);
    CHECK_THROWS_AS(eval.check_available({"niqe"}), ConfigError);
    CHECK_NOTHROW(eval.check_available({"musiq"}));
}
