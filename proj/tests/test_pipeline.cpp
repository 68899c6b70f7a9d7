#include "doctest.h"

#include "boardscan/fen.hpp"
#include "boardscan/pipeline.hpp"
#include "boardscan/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <unistd.h>

using namespace boardscan;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("boardscan_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

synth::RenderOptions plain_options(std::uint64_t seed) {
    synth::RenderOptions opt;
    opt.tilt_deg = 20;
    opt.blur_sigma = 0.6;
    opt.noise_sigma = 2.0;
    opt.seed = seed;
    return opt;
}

void check_timings(const StageTimings& t) {
    for (double v : {t.split_squares_s, t.probability_vectors_s, t.infer_plus_fen_s, t.total_s}) {
        CHECK(v >= 0.0);
    }
    CHECK(t.total_s >= t.stage_sum() - 1e-3);
    CHECK(t.total_s <= t.stage_sum() + 0.05);
}

} // namespace

TEST_CASE("config parsing") {
    const auto cfg = PipelineConfig::parse("# comment\n"
                                           "max_iters = 3\n"
                                           "  contrast=0.2   # trailing\n"
                                           "\n"
                                           "orientation = white-left\n"
                                           "fen_mode = lenient\n"
                                           "intersection_threshold = 256\n");
    CHECK(cfg.detect.max_iters == 3);
    CHECK(cfg.detect.contrast == 0.2);
    CHECK(cfg.orientation == Orientation::WhiteLeft);
    CHECK_FALSE(cfg.strict_fen);
    CHECK(cfg.detect.intersection_threshold == 256);
    CHECK(cfg.check_tolerance == 20);
    CHECK(cfg.square_px == 224);

    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            PipelineConfig::parse(text);
        } catch (const ParseError& e) {
            return e.offset();
        }
        return 0;
    };
    CHECK(line_of("max_iters = 3\ncolour = red\n") == 2);
    CHECK(line_of("check_tolerance = 50\n") == 1);
    CHECK(line_of("\n\npatch_size = 20\n") == 3);
    CHECK(line_of("square_px = 1e9\n") == 1);
    CHECK(line_of("top_extension = -0.1\n") == 1);
    CHECK(line_of("max_iters 3\n") == 1);
    CHECK(line_of("backend = cnn\n") == 1);
    CHECK(line_of("period = nan\n") == 1);
    CHECK(PipelineConfig::keys().size() == 17);
    for (const auto& key : PipelineConfig::keys()) {
        if (key == "probabilities") {
            continue;
        }
        CHECK_MESSAGE(line_of("\n" + key + " = ???\n") == 2, key);
    }
}

TEST_CASE("orientation remaps squares") {
    // Rectified square 0 is the image's top-left square.
    CHECK(oriented_index(0, Orientation::WhiteBottom) == 0);
    CHECK(oriented_index(0, Orientation::WhiteTop) == 63);
    // White on the left: the top-left image square is a1, the top-right a8.
    CHECK(square_name(oriented_index(0, Orientation::WhiteLeft)) == "a1");
    CHECK(square_name(oriented_index(7, Orientation::WhiteLeft)) == "a8");
    CHECK(square_name(oriented_index(56, Orientation::WhiteLeft)) == "h1");
    CHECK(square_name(oriented_index(0, Orientation::WhiteRight)) == "h8");
    CHECK(square_name(oriented_index(63, Orientation::WhiteRight)) == "a1");
    for (auto o : {Orientation::WhiteBottom, Orientation::WhiteTop, Orientation::WhiteLeft, Orientation::WhiteRight}) {
        std::vector<bool> seen(64, false);
        for (int sq = 0; sq < 64; ++sq) {
            seen[oriented_index(sq, o)] = true;
        }
        CHECK(std::count(seen.begin(), seen.end(), true) == 64);
    }
}

TEST_CASE("digitize: fresh, cached, and moved board") {
    synth::Rng rng(31);
    const BoardPosition pos = synth::random_legal_position(rng);
    const auto r = synth::render_board(pos, plain_options(5));

    PipelineConfig cfg;
    cfg.backend = "file";
    FileBackend backend(synth::one_hot(pos));

    const DigitizationResult fresh = digitize(r.image, cfg, std::nullopt, &backend);
    CHECK(fresh.mode == DetectionMode::Fresh);
    CHECK(fresh.fen == encode_fen(pos));
    CHECK(fresh.timings.board_detection_s.has_value());
    CHECK_FALSE(fresh.timings.board_check_s.has_value());
    CHECK(fresh.confidence.min == 1.0);
    check_timings(fresh.timings);

    const DigitizationResult cached = digitize(r.image, cfg, fresh.location, &backend);
    CHECK(cached.mode == DetectionMode::Cached);
    CHECK(cached.fen == fresh.fen);
    CHECK_FALSE(cached.timings.board_detection_s.has_value());
    CHECK(cached.timings.board_check_s.has_value());
    CHECK(cached.timings.total_s < fresh.timings.total_s);
    check_timings(cached.timings);

    synth::RenderOptions moved = plain_options(5);
    moved.offset = Point2{90.0, 10.0};
    const auto r2 = synth::render_board(pos, moved);
    const DigitizationResult again = digitize(r2.image, cfg, fresh.location, &backend);
    CHECK(again.mode == DetectionMode::Fresh);
    CHECK(again.timings.board_check_s.has_value());
    CHECK(again.timings.board_detection_s.has_value());
    CHECK(again.fen == fresh.fen);
    CHECK(distance(again.location.corners[0], r2.corners[0]) < 4.0);
    check_timings(again.timings);
}

TEST_CASE("digitize with the baseline classifier yields a legal FEN") {
    synth::Rng rng(12);
    const BoardPosition pos = synth::random_legal_position(rng);
    const auto r = synth::render_board(pos, plain_options(9));
    PipelineConfig cfg;
    cfg.square_px = 96;
    const auto res = digitize(r.image, cfg);
    CHECK(decode_fen(res.fen, {.strict = true, .enforce_census = true}) == res.position);
    int agree = 0;
    for (int sq = 0; sq < 64; ++sq) {
        agree += res.position[sq] == pos[sq] ? 1 : 0;
    }
    CHECK(agree >= 48);
    CHECK(res.to_json().find("\"fen\"") != std::string::npos);
}

TEST_CASE("errors carry their stage") {
    PipelineConfig cfg;
    try {
        digitize(synth::render_background(640, 480, 4, 3), cfg);
        FAIL("expected a detection failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == Stage::BoardDetection);
        CHECK(e.kind() == ErrorKind::DetectionFailure);
    }

    synth::Rng rng(2);
    const auto r = synth::render_board(synth::random_legal_position(rng), plain_options(2));
    BoardProbabilities bad = synth::random_probabilities(rng);
    bad[30].fill(0.5);
    FileBackend backend(bad);
    try {
        digitize(r.image, cfg, std::nullopt, &backend);
        FAIL("expected a classification failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == Stage::ProbabilityVectors);
        CHECK(e.kind() == ErrorKind::Classification);
        CHECK(std::string(e.what()).find("square 30") != std::string::npos);
    }

    try {
        digitize(fs::path("/nonexistent/board.png"), cfg);
        FAIL("expected a load failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == Stage::Load);
    }

    // Unconstrained argmax on random vectors breaks the census in strict mode.
    cfg.inference = InferenceMode::Argmax;
    FileBackend noisy(synth::random_probabilities(rng));
    CHECK_THROWS_AS(digitize(r.image, cfg, std::nullopt, &noisy), StageError);
    cfg.strict_fen = false;
    CHECK_NOTHROW(digitize(r.image, cfg, std::nullopt, &noisy));
}

TEST_CASE("location and sidecar files") {
    const fs::path dir = scratch_dir("files");
    const BoardLocation loc =
        BoardLocation::from_corners({Point2{10.5, 20.25}, Point2{300.125, 22}, Point2{310, 290.75}, Point2{5, 280}});
    const std::string line = format_location(loc);
    CHECK(std::count(line.begin(), line.end(), ' ') == 7);
    CHECK(line.find('\n') == std::string::npos);
    const BoardLocation back = parse_location(line);
    CHECK(back.corners == loc.corners);

    save_location(loc, dir / "cache.txt");
    CHECK(load_location(dir / "cache.txt")->corners == loc.corners);
    CHECK_FALSE(load_location(dir / "missing.txt").has_value());
    CHECK_THROWS_AS(parse_location("1 2 3 4 5 6 7"), ParseError);
    CHECK_THROWS_AS(parse_location("1 2 3 4 5 6 7 8 9"), ParseError);
    CHECK_THROWS_AS(parse_location("0 0 1 0 1 1 0 x"), Error);
    // Self-intersecting quadrilateral.
    CHECK_THROWS_AS(parse_location("0 0 10 10 10 0 0 10"), Error);

    write_corner_sidecar(loc.corners, dir / "truth.txt");
    CHECK(read_corner_sidecar(dir / "truth.txt") == loc.corners);
    std::ofstream(dir / "short.txt") << "1 2\n3 4\n5 6\n";
    CHECK_THROWS_AS(read_corner_sidecar(dir / "short.txt"), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("watch session") {
    synth::Rng rng(44);
    const BoardPosition first = synth::random_legal_position(rng);
    BoardPosition second = first;
    // Move some piece to an empty square.
    int from = 0;
    while (is_empty(second[from]) || type_of(second[from]) == PieceType::Pawn) {
        ++from;
    }
    int to = 27;
    while (!is_empty(second[to])) {
        ++to;
    }
    std::swap(second[from], second[to]);
    REQUIRE(constraint_violations(second).empty());

    PipelineConfig cfg;
    cfg.square_px = 96;

    SUBCASE("no-move flag and cache carry-over") {
        const auto a = synth::render_board(first, plain_options(1));
        const auto c = synth::render_board(second, plain_options(1));
        WatchSession session(cfg);
        const auto r1 = session.process(a.image, "1.png");
        const auto r2 = session.process(a.image, "2.png");
        const auto r3 = session.process(c.image, "3.png");
        REQUIRE(r1.result);
        REQUIRE(r2.result);
        REQUIRE(r3.result);
        CHECK(r1.result->mode == DetectionMode::Fresh);
        CHECK(r2.result->mode == DetectionMode::Cached);
        CHECK(r3.result->mode == DetectionMode::Cached);
        CHECK_FALSE(r1.no_move);
        CHECK(r2.no_move);
        CHECK_FALSE(r3.no_move);
        CHECK(r2.line().find("no-move") != std::string::npos);
    }

    SUBCASE("a hand over the board is skipped") {
        synth::RenderOptions covered = plain_options(1);
        const auto a = synth::render_board(first, covered);
        const Point2 mid = a.board_to_image.apply(Point2{0.5, 0.5});
        covered.hand = std::array<double, 4>{mid.x, mid.y, 210, 150};
        const auto b = synth::render_board(first, covered);
        WatchSession session(cfg);
        const auto r1 = session.process(a.image, "1.png");
        const auto cache = session.cached_location();
        const auto r2 = session.process(b.image, "2.png");
        const auto r3 = session.process(a.image, "3.png");
        REQUIRE(r1.result);
        CHECK(r2.skipped());
        CHECK(r2.error_kind == ErrorKind::DetectionFailure);
        CHECK(r2.line().find("skip") != std::string::npos);
        REQUIRE(r3.result);
        CHECK(r3.result->mode == DetectionMode::Cached);
        CHECK(r3.result->fen == r1.result->fen);
        CHECK(session.cached_location()->corners == cache->corners);
    }

    SUBCASE("after a failed check the cache holds the fresh location") {
        synth::RenderOptions moved = plain_options(1);
        moved.offset = Point2{-80.0, 0.0};
        const auto a = synth::render_board(first, plain_options(1));
        const auto b = synth::render_board(first, moved);
        WatchSession session(cfg);
        session.process(a.image, "1.png");
        const auto r2 = session.process(b.image, "2.png");
        REQUIRE(r2.result);
        CHECK(r2.result->mode == DetectionMode::Fresh);
        CHECK(session.cached_location()->corners == r2.result->location.corners);
    }
}

TEST_CASE("watch_directory") {
    const fs::path dir = scratch_dir("watch");
    PipelineConfig cfg;
    cfg.square_px = 96;
    cfg.period_s = 0.01;
    std::vector<WatchRecord> records;
    auto sink = [&](const WatchRecord& r) { records.push_back(r); };

    CHECK(watch_directory(dir, cfg, {}, sink) == 0);
    CHECK(records.empty());

    synth::Rng rng(5);
    const BoardPosition pos = synth::random_legal_position(rng);
    const auto r = synth::render_board(pos, plain_options(3));
    save_png(r.image, dir / "b_002.png");
    save_jpeg(r.image, dir / "a_001.jpg");
    save_png(synth::render_background(320, 240, 3, 1), dir / "c_003.png");
    std::ofstream(dir / "notes.txt") << "ignored\n";

    CHECK(watch_directory(dir, cfg, {}, sink) == 3);
    REQUIRE(records.size() == 3);
    CHECK(records[0].source.filename() == "a_001.jpg");
    CHECK(records[1].source.filename() == "b_002.png");
    CHECK(records[2].source.filename() == "c_003.png");
    CHECK(records[1].result->mode == DetectionMode::Cached);
    CHECK(records[2].skipped());

    CHECK_THROWS_AS(watch_directory(dir / "missing", cfg, {}, sink), Error);
    fs::remove_all(dir);
}

TEST_CASE("amortization report") {
    const auto r = amortization_report(3.30, 0.15);
    REQUIRE(r.breakeven.has_value());
    CHECK(*r.breakeven == 22);
    REQUIRE(r.with_split_stage.has_value());
    CHECK(*r.with_split_stage == 14);
    CHECK(r.text.find("1 out of 22") != std::string::npos);
    CHECK(r.text.find("1 out of 14") != std::string::npos);

    CHECK(*amortization_report(2, 1).breakeven == 2);
    const auto never = amortization_report(2, 3);
    CHECK_FALSE(never.breakeven.has_value());
    CHECK(never.text.find("never amortized") != std::string::npos);
    CHECK_FALSE(amortization_report(2, 2).breakeven.has_value());
    CHECK_THROWS_AS(amortization_report(0, 1), Error);
}

TEST_CASE("bench_intersections") {
    CHECK_THROWS_AS(bench_intersections({8, 16}, 0), Error);
    CHECK_THROWS_AS(bench_intersections({}, 3), Error);
    const auto report = bench_intersections({8, 32, 16}, 3);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].n == 8);
    CHECK(report.rows[2].n == 32);
    CHECK(report.mismatches == 0);
    for (const auto& row : report.rows) {
        CHECK(row.naive_s > 0);
        CHECK(row.sweep_s > 0);
    }
    CHECK(report.config_snippet().find("intersection_threshold = ") != std::string::npos);
    // The snippet parses as a config file.
    CHECK_NOTHROW(PipelineConfig::parse(report.config_snippet()));
}
