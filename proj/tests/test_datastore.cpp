#include <random>
#include <thread>

#include "clearing/datastore.hpp"
#include "clearing/errors.hpp"
#include "clearing/pnm.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace clearing;
namespace fs = std::filesystem;

namespace {

fs::path write_random_pgm(const fs::path& path, int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Gray8Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img(x, y) = static_cast<std::uint8_t>(rng() & 0xff);
    write_file_atomic(path, encode_pgm(img));
    return path;
}

std::string file_text(const fs::path& p) {
    const auto b = read_file_bytes(p);
    return {b.begin(), b.end()};
}

Datastore::Clock fixed_clock() {
    return [] { return std::string("2026-01-01T00:00:00Z"); };
}

LoggedDetection logged(long frame, double score, std::optional<std::string> image = {}) {
    return {{frame, {10, 10, 20.0 + static_cast<double>(frame), 30}, score, std::nullopt}, frame * 0.1, std::move(image)};
}

}  // namespace

TEST_CASE("codec test vectors") {
    CHECK(sha256_hex(std::string_view("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const std::string foobar = "foobar";
    for (std::size_t n = 0; n <= foobar.size(); ++n) {
        const std::vector<std::uint8_t> bytes(foobar.begin(), foobar.begin() + n);
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
    const std::vector<std::uint8_t> fb(foobar.begin(), foobar.end());
    CHECK(base64_encode(fb) == "Zm9vYmFy");
    CHECK(base64_encode(std::vector<std::uint8_t>(fb.begin(), fb.begin() + 4)) == "Zm9vYg==");
    CHECK_THROWS_AS(base64_decode("abc"), FormatError);
}

TEST_CASE("ingest registers, dedupes and reports corrupt files") {
    TempDir src("src"), root("ds");
    std::vector<fs::path> files{write_random_pgm(src / "a.pgm", 8, 6, 1), write_random_pgm(src / "b.pgm", 8, 6, 2),
                                write_random_pgm(src / "c.pgm", 5, 5, 3)};
    Datastore store(root.path(), fixed_clock());
    auto r = store.ingest(files, {"picea abies", "autumn", "overcast"});
    CHECK(r.added.size() == 3);
    CHECK(r.errors.empty());
    CHECK(store.images().size() == 3);
    CHECK(store.image(r.added[0]).metadata.season == "autumn");
    CHECK(store.image(r.added[2]).width == 5);
    CHECK(store.image_bytes(r.added[1]) == read_file_bytes(files[1]));

    const auto before = file_text(root / "index.json");
    auto again = store.ingest(files);
    CHECK(again.added.empty());
    CHECK(again.existing.size() == 3);
    CHECK(file_text(root / "index.json") == before);

    TempDir root2("ds");
    write_file_atomic(src / "bad.pgm", std::string_view("P5\n4 4\n255\nxx"));
    Datastore store2(root2.path(), fixed_clock());
    std::vector<fs::path> mixed{files[0], src / "bad.pgm", files[1], src / "missing.pgm"};
    auto m = store2.ingest(mixed);
    CHECK(m.added.size() == 2);
    CHECK(m.errors.size() == 2);
    CHECK(m.errors[0].path == (src / "bad.pgm").string());

    // reopening sees the same index
    Datastore reopened(root.path(), fixed_clock());
    CHECK(reopened.images() == store.images());
    CHECK(reopened.dataset_id() == store.dataset_id());
}

TEST_CASE("masks round trip within quantization and report absence") {
    TempDir src("src"), root("ds");
    std::vector<fs::path> files{write_random_pgm(src / "a.pgm", 32, 24, 1)};
    Datastore store(root.path(), fixed_clock());
    const auto id = store.ingest(files).added.at(0);
    CHECK(!store.load_mask(id).has_value());
    CHECK_THROWS_AS(store.load_mask("0000"), NotFoundError);

    std::mt19937_64 rng(4);
    const auto mask = FuzzyMask(32, 24, oracle::random_mask_values(rng, 32, 24));
    const std::vector<Stroke> strokes{{{{1, 1}, {10, 5}}, 3, 0.7, Falloff::linear}};
    store.save_mask(id, mask, strokes);
    const auto loaded = store.load_mask(id);
    REQUIRE(loaded);
    for (std::size_t i = 0; i < mask.values().size(); ++i) {
        CHECK(std::abs(loaded->mask.values()[i] - mask.values()[i]) <= 0.5 / 255 + 1e-12);
    }
    REQUIRE(loaded->strokes.size() == 1);
    CHECK(loaded->strokes[0].radius == 3);
    CHECK(store.image(id).status == AnnotationStatus::annotated);
    CHECK_THROWS_AS(store.save_mask(id, FuzzyMask(31, 24)), std::invalid_argument);
    CHECK_THROWS_AS(store.save_mask("ffff", mask), NotFoundError);
}

TEST_CASE("concurrent saves to different images all persist") {
    TempDir src("src"), root("ds");
    std::vector<fs::path> files;
    for (int i = 0; i < 8; ++i) files.push_back(write_random_pgm(src / ("i" + std::to_string(i) + ".pgm"), 16, 16, i));
    Datastore store(root.path(), fixed_clock());
    const auto ids = store.ingest(files).added;
    REQUIRE(ids.size() == 8);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < ids.size(); ++t) {
        threads.emplace_back([&, t] {
            for (int round = 0; round < 10; ++round) {
                FuzzyMask m(16, 16);
                m.set(static_cast<int>(t), round, 1.0);
                store.save_mask(ids[t], m);
                store.save_instances(ids[t], {ids[t], {{{0, 0, 1, 1}, 0.5}}, "t" + std::to_string(t), ""});
            }
        });
    }
    for (auto& th : threads) th.join();
    Datastore reopened(root.path(), fixed_clock());
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto m = reopened.load_mask(ids[t]);
        REQUIRE(m);
        CHECK(m->mask.at(static_cast<int>(t), 9) == 1.0);
        CHECK(reopened.image(ids[t]).status == AnnotationStatus::annotated);
        CHECK(reopened.load_instances(ids[t])->annotator == "t" + std::to_string(t));
    }
}

TEST_CASE("review queue lifecycle") {
    TempDir src("src"), root("ds");
    std::vector<fs::path> files{write_random_pgm(src / "a.pgm", 64, 64, 1)};
    Datastore store(root.path(), fixed_clock());
    const auto image_id = store.ingest(files).added.at(0);

    std::vector<ReviewRequest> batch;
    for (long f = 0; f < 5; ++f) {
        batch.push_back({make_detection_record(logged(f, 0.4 + 0.1 * f, f == 0 ? std::optional(image_id) : std::nullopt)),
                         "single-frame-detection"});
    }
    const auto entries = store.enqueue_reviews(batch);
    REQUIRE(entries.size() == 5);
    CHECK(store.review_queue(ReviewStatus::pending).size() == 5);
    CHECK(store.enqueue_reviews(batch) == entries);
    CHECK(store.review_queue().size() == 5);

    auto decided = store.review(entries[0].id, ReviewDecision::confirm, "ana");
    CHECK(decided.status == ReviewStatus::confirmed);
    CHECK(decided.decided_by == "ana");
    CHECK(decided.decided_at == "2026-01-01T00:00:00Z");
    store.review(entries[1].id, ReviewDecision::confirm, "ana");
    for (int i = 2; i < 5; ++i) store.review(entries[i].id, ReviewDecision::reject, "bo");
    CHECK(store.review_queue(ReviewStatus::pending).empty());
    CHECK(store.review_queue(ReviewStatus::rejected).size() == 3);
    CHECK_THROWS_AS(store.review(entries[0].id, ReviewDecision::reject, "bo"), ConflictError);
    CHECK_THROWS_AS(store.review("rev-nope", ReviewDecision::reject, "bo"), NotFoundError);

    // the confirmed detection tied to the image became an instance stub
    const auto inst = store.load_instances(image_id);
    REQUIRE(inst);
    REQUIRE(inst->instances.size() == 1);
    CHECK(inst->instances[0].bbox == BBox{10, 10, 20, 30});

    // referential integrity and persistence
    Datastore reopened(root.path(), fixed_clock());
    for (const auto& e : reopened.review_queue()) CHECK(reopened.detection(e.detection_ref).has_value());
    CHECK(reopened.review_entry(entries[3].id).status == ReviewStatus::rejected);
    for (const auto& f : fs::directory_iterator(root / "masks")) {
        CHECK_NOTHROW(reopened.image(f.path().stem().string()));
    }
}

TEST_CASE("stabilizer review candidates become queue entries") {
    Stabilizer stab({3, 0.3, 0, PositionUpdate::mean});
    auto with_source = [](double x, long f, double score) {
        return WorldDetection{x, score, logged(f, score)};
    };
    std::vector<WorldDetection> f1{with_source(1.0, 1, 0.3), with_source(5.0, 1, 0.6)};
    std::vector<WorldDetection> f2{with_source(5.0, 2, 0.8)};
    stab.step(1, f1);
    stab.step(2, f2);
    stab.finish();
    const auto candidates = stab.review_candidates();
    const auto requests = review_requests(candidates);
    REQUIRE(requests.size() == 2);
    CHECK(requests[0].reason == "single-frame-detection");
    CHECK(requests[1].reason == "unconfirmed-track");
    CHECK(requests[1].detection.score == 0.8);

    TempDir root("ds");
    Datastore store(root.path(), fixed_clock());
    const auto entries = store.enqueue_reviews(requests);
    CHECK(entries.size() == 2);
    CHECK(store.detection(entries[1].detection_ref)->x_world_m == 5.0);
}
