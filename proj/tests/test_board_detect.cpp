#include "doctest.h"

#include "boardscan/board_detect.hpp"
#include "boardscan/error.hpp"
#include "boardscan/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

using namespace boardscan;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Two straight boundaries through the patch center at angles 0 and `skew`
// degrees; opposite sectors share a color.
LatticePatch x_corner(double skew_deg, double blur_sigma, int size = 21) {
    GrayF g(101, 101);
    const double t = skew_deg * kPi / 180.0;
    for (int y = 0; y < 101; ++y) {
        for (int x = 0; x < 101; ++x) {
            const double dx = x - 50;
            const double dy = y - 50;
            const bool s1 = dy > 0;
            const bool s2 = -std::sin(t) * dx + std::cos(t) * dy > 0;
            g(x, y) = s1 == s2 ? 200.f : 60.f;
        }
    }
    if (blur_sigma > 0) {
        g = gaussian_blur(g, blur_sigma);
    }
    const int r = size / 2;
    std::vector<float> s;
    for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
            s.push_back(g(50 + i, 50 + j));
        }
    }
    return LatticePatch::from_samples(s, size);
}

LatticePatch patch_from(const std::function<float(int, int)>& f, int size = 21) {
    std::vector<float> s;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            s.push_back(f(x, y));
        }
    }
    return LatticePatch::from_samples(s, size);
}

synth::RenderedBoard frontal_board(std::uint64_t seed = 3) {
    synth::Rng rng(seed);
    synth::RenderOptions opt;
    opt.seed = seed;
    opt.blur_sigma = 0.6;
    opt.noise_sigma = 2.0;
    return synth::render_board(synth::random_legal_position(rng), opt);
}

double corner_error(const BoardLocation& loc, const std::array<Point2, 4>& truth) {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        worst = std::max(worst, distance(loc.corners[i], truth[i]));
    }
    return worst;
}

GridCandidate grid_of(const synth::RenderedBoard& r) {
    GridCandidate g;
    g.points = r.lattice;
    return g;
}

// Image shifted right by `dx` pixels, black where nothing maps.
Image shifted(const Image& image, double dx) {
    return warp(image, Homography::translation(dx, 0.0), image.width(), image.height());
}

} // namespace

TEST_CASE("patch preprocessing") {
    const LatticePatch flat = patch_from([](int, int) { return 128.f; });
    CHECK(std::all_of(flat.intensity.begin(), flat.intensity.end(), [](float v) { return v == 0.5f; }));
    CHECK(std::all_of(flat.edges.begin(), flat.edges.end(), [](float v) { return v == 0.f; }));

    const LatticePatch x = x_corner(90, 1.0);
    for (float v : x.intensity) {
        REQUIRE(v >= 0.f);
        REQUIRE(v <= 1.f);
    }
    for (float v : x.edges) {
        REQUIRE((v == 0.f || v == 1.f));
    }
    CHECK_THROWS_AS(LatticePatch::from_samples(std::vector<float>(20 * 20, 0.f), 20), Error);
}

TEST_CASE("geometric detector") {
    CHECK(geometric_detector(x_corner(90, 0.0)));
    CHECK(geometric_detector(x_corner(90, 1.5)));
    CHECK_FALSE(geometric_detector(patch_from([](int, int) { return 90.f; })));
    // A straight edge splits the quadrants 2:2 along a side, not a diagonal.
    CHECK_FALSE(geometric_detector(patch_from([](int x, int) { return x < 10 ? 30.f : 220.f; })));
    // Gradient without structure.
    CHECK_FALSE(geometric_detector(patch_from([](int x, int y) { return static_cast<float>(5 * (x + y)); })));
}

TEST_CASE("secondary detector") {
    CHECK(secondary_detector(x_corner(90, 0.0)));
    CHECK(secondary_detector(x_corner(60, 2.0)));
    CHECK_FALSE(secondary_detector(patch_from([](int, int) { return 90.f; })));
    CHECK_FALSE(secondary_detector(patch_from([](int x, int) { return x < 10 ? 30.f : 220.f; })));
    // A single bright stripe gives two bright arcs but no dark twin pairing
    // through the center.
    CHECK_FALSE(secondary_detector(patch_from([](int x, int y) {
        return (x > 8 && x < 12) || (y > 8 && y < 12) ? 220.f : 30.f;
    })));

    SUBCASE("blurred skewed corner rescued by the fallback") {
        const LatticePatch p = x_corner(25, 2.0);
        REQUIRE_FALSE(geometric_detector(p));
        CHECK(secondary_detector(p));
        CHECK(is_lattice_point(p));
    }
    SUBCASE("a registered detector replaces the fallback") {
        const LatticePatch p = x_corner(25, 2.0);
        DetectConfig cfg;
        cfg.secondary = [](const LatticePatch&) { return false; };
        CHECK_FALSE(is_lattice_point(p, cfg));
        CHECK(is_lattice_point(x_corner(90, 0.0), cfg));
    }
}

TEST_CASE("detect_lines") {
    SUBCASE("axis-aligned checkerboard") {
        Image img(480, 480, 1, 128);
        for (int y = 40; y < 440; ++y) {
            for (int x = 40; x < 440; ++x) {
                img.at(x, y, 0) = ((x - 40) / 50 + (y - 40) / 50) % 2 ? 30 : 225;
            }
        }
        const auto lines = detect_lines(img);
        REQUIRE(lines.size() >= 18);
        // Expected boundaries sit between pixels 39|40, 89|90, ..., 439|440.
        std::vector<bool> rows(9, false);
        std::vector<bool> cols(9, false);
        for (const Segment2& s : lines) {
            const Point2 d = s.b() - s.a();
            const Point2 m = 0.5 * (s.a() + s.b());
            if (std::abs(d.y) < 0.02 * norm(d)) {
                const double k = (m.y - 39.5) / 50.0;
                if (std::abs(k - std::round(k)) * 50.0 < 2.0 && k > -0.5 && k < 8.5) {
                    rows[static_cast<int>(std::round(k))] = true;
                }
            } else if (std::abs(d.x) < 0.02 * norm(d)) {
                const double k = (m.x - 39.5) / 50.0;
                if (std::abs(k - std::round(k)) * 50.0 < 2.0 && k > -0.5 && k < 8.5) {
                    cols[static_cast<int>(std::round(k))] = true;
                }
            }
        }
        CHECK(std::count(rows.begin(), rows.end(), true) == 9);
        CHECK(std::count(cols.begin(), cols.end(), true) == 9);
    }
    SUBCASE("uniform image") {
        CHECK(detect_lines(Image(200, 150, 3, 140)).empty());
    }
    SUBCASE("too small") {
        CHECK_THROWS_AS(detect_lines(Image(63, 200, 1, 0)), Error);
    }
    SUBCASE("tilted board gives two pencils") {
        synth::RenderOptions opt;
        opt.tilt_deg = 30;
        opt.roll_deg = 5;
        opt.blur_sigma = 0.5;
        const auto r = synth::render_board(empty_position(), opt);
        // Vanishing points of the rank and file directions, homogeneous.
        const Homography& h = r.board_to_image;
        const Eigen::Vector3d vp_rank(h(0, 0), h(1, 0), h(2, 0));
        const Eigen::Vector3d vp_file(h(0, 1), h(1, 1), h(2, 1));
        auto angle_to = [](const Segment2& s, const Eigen::Vector3d& vp) {
            const Point2 m = 0.5 * (s.a() + s.b());
            const Eigen::Vector2d toward = (vp.head<2>() - vp.z() * Eigen::Vector2d(m.x, m.y));
            const Eigen::Vector2d d(s.b().x - s.a().x, s.b().y - s.a().y);
            const double c = std::abs(toward.dot(d)) / (toward.norm() * d.norm());
            return std::acos(std::min(1.0, c)) * 180.0 / kPi;
        };
        const auto lines = detect_lines(r.image);
        int rank = 0;
        int file = 0;
        const std::size_t top = std::min<std::size_t>(lines.size(), 18);
        for (std::size_t i = 0; i < top; ++i) {
            const double ar = angle_to(lines[i], vp_rank);
            const double af = angle_to(lines[i], vp_file);
            if (ar < 1.0 && af > 10.0) {
                ++rank;
            } else if (af < 1.0 && ar > 10.0) {
                ++file;
            }
        }
        CHECK(rank >= 6);
        CHECK(file >= 6);
        CHECK(rank + file >= static_cast<int>(top) - 2);
    }
}

TEST_CASE("locate_board on a frontal render") {
    const auto r = frontal_board();
    const BoardLocation loc = locate_board(r.image);
    const double diag = std::hypot(r.image.width(), r.image.height());
    CHECK(corner_error(loc, r.corners) < 0.005 * diag);
    for (int i = 0; i < 4; ++i) {
        const Point2 u = loc.rectify.apply(loc.corners[i]);
        const Point2 want{i == 1 || i == 2 ? 1.0 : 0.0, i >= 2 ? 1.0 : 0.0};
        CHECK(distance(u, want) < 1e-6);
    }
    CHECK(check_board_location(r.image, GridCandidate::from_location(loc)));
}

TEST_CASE("locate_board is stable on its own rectified output") {
    const auto r = frontal_board(11);
    const BoardLocation loc = locate_board(r.image);
    // Rectified view with one square of margin around the playing area.
    const int size = 480;
    const Homography to_crop = Homography::scale(0.8 * size, 0.8 * size)
                                   .compose(Homography::translation(0.125, 0.125))
                                   .compose(loc.rectify);
    const Image crop = warp(r.image, to_crop, size, size);
    const BoardLocation again = locate_board(crop);
    const std::array<Point2, 4> expected = {Point2{0.1 * size, 0.1 * size}, Point2{0.9 * size, 0.1 * size},
                                            Point2{0.9 * size, 0.9 * size}, Point2{0.1 * size, 0.9 * size}};
    CHECK(corner_error(again, expected) < 0.005 * std::hypot(size, size));
}

TEST_CASE("locate_board without a board fails with the iteration index") {
    const Image bg = synth::render_background(640, 480, 5, 7);
    try {
        locate_board(bg);
        FAIL("expected a detection failure");
    } catch (const DetectionError& e) {
        CHECK(e.iteration() == 0);
        CHECK(e.kind() == ErrorKind::DetectionFailure);
    }
}

TEST_CASE("check_board_location") {
    const auto r = frontal_board(5);
    const GridCandidate grid = grid_of(r);

    CHECK(check_board_location(r.image, grid));

    const double square = distance(r.corners[0], r.corners[1]) / 8.0;
    CHECK_FALSE(check_board_location(shifted(r.image, 1.5 * square), grid));

    GridCandidate outside = grid;
    outside.points[10] = Point2{-3.0, 40.0};
    CHECK_THROWS_AS(check_board_location(r.image, outside), Error);

    // Monotone in the tolerance.
    bool previous = true;
    for (int t : {0, 5, 10, 20, 30, 45, 49}) {
        const bool now = check_board_location(r.image, grid, t);
        CHECK((previous || !now));
        previous = now;
    }
}

TEST_CASE("check_board_location under occlusion") {
    synth::Rng rng(21);
    const BoardPosition empty = empty_position();
    synth::RenderOptions opt;
    opt.blur_sigma = 0.5;
    opt.noise_sigma = 1.5;
    const auto clean = synth::render_board(empty, opt);

    auto occluded = [&](int hidden) {
        synth::RenderOptions o = opt;
        std::vector<int> idx(49);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i = 0; i < hidden; ++i) {
            const int k = idx[i];
            o.occluders.push_back({Point2{(k % 7 + 1) / 8.0, (k / 7 + 1) / 8.0}, 0.05, synth::Rgb{40, 40, 160}});
        }
        return synth::render_board(empty, o);
    };
    const auto r14 = occluded(35);
    const auto r24 = occluded(25);
    const auto hits = [](const synth::RenderedBoard& r) {
        const auto v = validate_grid(to_gray_f(r.image), grid_of(r));
        return static_cast<int>(std::count(v.begin(), v.end(), true));
    };
    CHECK(hits(r14) == 14);
    CHECK(hits(r24) == 24);
    CHECK_FALSE(check_board_location(r14.image, grid_of(clean)));
    CHECK(check_board_location(r24.image, grid_of(clean)));
}

TEST_CASE("split_squares") {
    // Each square painted its own color through a known perspective map.
    const std::array<Point2, 4> corners = {Point2{120, 60}, Point2{540, 90}, Point2{600, 430}, Point2{70, 400}};
    const BoardLocation loc = BoardLocation::from_corners(corners);
    auto color = [](int sq) {
        return std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(20 + 3 * sq),
                                           static_cast<std::uint8_t>(250 - 2 * sq),
                                           static_cast<std::uint8_t>(sq % 8 * 30)};
    };
    Image img(640, 480, 3, 0);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Point2 u = loc.rectify.apply(Point2{static_cast<double>(x), static_cast<double>(y)});
            if (u.x < 0 || u.x >= 1 || u.y < 0 || u.y >= 1) {
                continue;
            }
            const auto c = color(static_cast<int>(u.y * 8) * 8 + static_cast<int>(u.x * 8));
            for (int ch = 0; ch < 3; ++ch) {
                img.at(x, y, ch) = c[ch];
            }
        }
    }

    const auto squares = split_squares(img, loc, 48);
    REQUIRE(squares.size() == 64);
    for (int sq = 0; sq < 64; ++sq) {
        const Image& s = squares[sq];
        REQUIRE(s.width() == 48);
        REQUIRE(s.height() == 48);
        const auto want = color(sq);
        int bad = 0;
        for (int y = 5; y < 43; ++y) {
            for (int x = 5; x < 43; ++x) {
                for (int ch = 0; ch < 3; ++ch) {
                    bad += std::abs(s.at(x, y, ch) - want[ch]) > 2 ? 1 : 0;
                }
            }
        }
        CHECK_MESSAGE(bad == 0, "square " << sq);
    }

    SUBCASE("top extension reaches into the square above, clamped at the board edge") {
        const auto ext = split_squares(img, loc, 48, 0.5);
        REQUIRE(ext.size() == 64);
        // Row 0 cannot extend: identical to the plain split.
        CHECK(ext[3] == squares[3]);
        // Row 3: the top third of the crop comes from the square above.
        const auto above = color(2 * 8 + 4);
        const auto own = color(3 * 8 + 4);
        CHECK(std::abs(ext[28].at(24, 4, 0) - above[0]) <= 2);
        CHECK(std::abs(ext[28].at(24, 40, 0) - own[0]) <= 2);
    }
}
