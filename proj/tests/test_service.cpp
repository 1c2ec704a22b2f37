#include <random>
#include <thread>

#include "clearing/enhance.hpp"
#include "clearing/errors.hpp"
#include "clearing/imaging_io.hpp"
#include "clearing/pnm.hpp"
#include "clearing/service.hpp"
#include "doctest.h"
#include "httplib.h"
#include "temp_dir.hpp"

using namespace clearing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    TempDir src{"src"};
    TempDir root{"ds"};
    Datastore store{root.path(), [] { return std::string("2026-01-01T00:00:00Z"); }};
    DatastoreService service{store};
    std::thread thread;
    int port = -1;
    std::vector<std::string> ids;

    explicit Fixture(int images = 3) {
        std::vector<fs::path> files;
        for (int i = 0; i < images; ++i) {
            std::mt19937_64 rng(i);
            Gray8Image img(40 + i, 30);
            for (auto& v : img.values()) v = static_cast<std::uint8_t>(rng() % 200);
            files.push_back(src / ("img" + std::to_string(i) + ".pgm"));
            write_file_atomic(files.back(), encode_pgm(img));
        }
        ids = store.ingest(files).added;
        port = service.bind_any_port();
        REQUIRE(port > 0);
        thread = std::thread([this] { service.serve(); });
        service.wait_until_ready();
    }
    ~Fixture() {
        service.stop();
        thread.join();
    }

    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

std::vector<Stroke> random_strokes(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<double> px(0, w - 1), py(0, h - 1), r(1, 6), in(0.1, 1.0);
    std::uniform_int_distribution<int> count(1, 6), points(1, 5), falloff(0, 2);
    std::vector<Stroke> out(count(rng));
    for (auto& s : out) {
        s.path.resize(points(rng));
        for (auto& p : s.path) p = {px(rng), py(rng)};
        s.radius = r(rng);
        s.intensity = in(rng);
        s.falloff = static_cast<Falloff>(falloff(rng));
    }
    return out;
}

}  // namespace

TEST_CASE("health, listing and image bytes") {
    Fixture fx;
    auto cli = fx.client();
    auto health = cli.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["images"] == 3);

    auto list = cli.Get("/images");
    REQUIRE(list);
    CHECK(json::parse(list->body).size() == 3);

    auto bytes = cli.Get("/images/" + fx.ids[1]);
    REQUIRE(bytes);
    const auto expected = fx.store.image_bytes(fx.ids[1]);
    CHECK(bytes->body == std::string(expected.begin(), expected.end()));
    CHECK(bytes->get_header_value("Content-Type") == "image/x-portable-graymap");

    auto missing = cli.Get("/images/abcdef");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["error"] == "not-found");
}

TEST_CASE("mask put and get") {
    Fixture fx;
    auto cli = fx.client();
    const auto& id = fx.ids[0];
    auto empty = cli.Get("/images/" + id + "/mask");
    REQUIRE(empty);
    CHECK(empty->status == 204);

    std::vector<std::uint8_t> raw(40 * 30);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::uint8_t>(i * 7);
    json body{{"width", 40}, {"height", 30}, {"confidence_u8", base64_encode(raw)}};
    auto put = cli.Put("/images/" + id + "/mask", body.dump(), "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    auto got = cli.Get("/images/" + id + "/mask");
    REQUIRE(got);
    CHECK(base64_decode(json::parse(got->body)["confidence_u8"].get<std::string>()) == raw);

    json wrong{{"width", 41}, {"height", 30}, {"confidence_u8", base64_encode(raw)}};
    auto bad = cli.Put("/images/" + id + "/mask", wrong.dump(), "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    auto junk = cli.Put("/images/" + id + "/mask", "{not json", "application/json");
    REQUIRE(junk);
    CHECK(junk->status == 400);
}

TEST_CASE("stroke-only uploads equal core replay") {
    Fixture fx(1);
    auto cli = fx.client();
    const auto& id = fx.ids[0];
    std::mt19937_64 rng(99);
    for (int session = 0; session < 20; ++session) {
        const auto strokes = random_strokes(rng, 40, 30);
        json log = json::array();
        for (const auto& s : strokes) log.push_back(to_json(s));
        auto put = cli.Put("/images/" + id + "/mask", json{{"strokes", log}}.dump(), "application/json");
        REQUIRE(put);
        INFO(put->body);
        REQUIRE(put->status == 200);
        auto got = cli.Get("/images/" + id + "/mask");
        REQUIRE(got);
        const auto served = base64_decode(json::parse(got->body)["confidence_u8"].get<std::string>());
        const auto expected = quantize(replay_strokes(40, 30, strokes));
        CHECK(served == std::vector<std::uint8_t>(expected.values().begin(), expected.values().end()));
        CHECK(json::parse(got->body)["strokes"].size() == strokes.size());
    }
}

TEST_CASE("instances put and get") {
    Fixture fx;
    auto cli = fx.client();
    const auto& id = fx.ids[2];
    CHECK(cli.Get("/images/" + id + "/instances")->status == 204);
    json rec{{"annotator", "ana"},
             {"timestamp", "t"},
             {"instances", {{{"bbox", {1, 2, 5, 6}}, {"instance_confidence", 0.7}}}}};
    CHECK(cli.Put("/images/" + id + "/instances", rec.dump(), "application/json")->status == 200);
    auto got = json::parse(cli.Get("/images/" + id + "/instances")->body);
    CHECK(got["image_id"] == id);
    CHECK(got["instances"][0]["instance_confidence"] == 0.7);
}

TEST_CASE("clahe preview matches the core filter") {
    Fixture fx(1);
    auto cli = fx.client();
    json body{{"id", fx.ids[0]}, {"params", {{"tiles_x", 2}, {"tiles_y", 2}, {"clip_limit", 2.0}}}};
    auto res = cli.Post("/enhance/clahe", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const auto original = std::get<Gray8Image>(decode_pnm(fx.store.image_bytes(fx.ids[0])));
    const auto expected = encode_pgm(clahe(original, {2, 2, 2.0, 256}).image);
    CHECK(res->body == std::string(expected.begin(), expected.end()));

    json bad{{"id", fx.ids[0]}, {"params", {{"tiles", 2}}}};
    CHECK(cli.Post("/enhance/clahe", bad.dump(), "application/json")->status == 400);
}

TEST_CASE("review decisions over http are exactly-once under retries") {
    Fixture fx(1);
    std::vector<ReviewRequest> batch;
    for (long f = 0; f < 4; ++f) {
        LoggedDetection d{{f, {2, 2, 8, 8}, 0.5, std::nullopt}, 0.0, fx.ids[0]};
        batch.push_back({make_detection_record(d), "single-frame-detection"});
    }
    const auto entries = fx.store.enqueue_reviews(batch);
    auto cli = fx.client();
    auto queue = json::parse(cli.Get("/review-queue?status=pending")->body);
    CHECK(queue.size() == 4);
    CHECK(queue[0].contains("detection"));

    json confirm{{"decision", "confirm"}, {"reviewer", "ana"}};
    for (int attempt = 0; attempt < 3; ++attempt) {
        auto res = cli.Post("/review-queue/" + entries[0].id, confirm.dump(), "application/json");
        REQUIRE(res);
        if (attempt == 0) {
            CHECK(res->status == 200);
        } else {
            CHECK(res->status == 409);
            CHECK(json::parse(res->body)["entry"]["status"] == "confirmed");
        }
    }
    CHECK(fx.store.load_instances(fx.ids[0])->instances.size() == 1);

    json reject{{"decision", "reject"}, {"reviewer", "bo"}};
    for (int i = 1; i < 4; ++i) {
        CHECK(cli.Post("/review-queue/" + entries[i].id, reject.dump(), "application/json")->status == 200);
    }
    CHECK(json::parse(cli.Get("/review-queue?status=pending")->body).empty());
    CHECK(cli.Post("/review-queue/rev-missing", reject.dump(), "application/json")->status == 404);
    CHECK(cli.Post("/review-queue/" + entries[1].id, json{{"decision", "maybe"}}.dump(), "application/json")->status ==
          400);
    CHECK(cli.Get("/review-queue?status=odd")->status == 400);
}

TEST_CASE("concurrent clients saving different masks") {
    Fixture fx(6);
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (std::size_t t = 0; t < fx.ids.size(); ++t) {
        threads.emplace_back([&, t] {
            auto cli = fx.client();
            const auto w = fx.store.image(fx.ids[t]).width;
            for (int round = 0; round < 5; ++round) {
                std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * 30, static_cast<std::uint8_t>(t * 10 + round));
                json body{{"confidence_u8", base64_encode(raw)}};
                auto res = cli.Put("/images/" + fx.ids[t] + "/mask", body.dump(), "application/json");
                if (res && res->status == 200) ++ok;
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(ok == 30);
    for (std::size_t t = 0; t < fx.ids.size(); ++t) {
        const auto m = fx.store.load_mask(fx.ids[t]);
        REQUIRE(m);
        CHECK(quantize(m->mask).values()[0] == t * 10 + 4);
    }
}
