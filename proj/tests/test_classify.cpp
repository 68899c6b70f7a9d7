#include "doctest.h"

#include "boardscan/classify.hpp"
#include "boardscan/error.hpp"
#include "boardscan/synth.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace boardscan;
using enum PieceClass;

namespace {

double sum(const SquareProbabilities& p) {
    return std::accumulate(p.begin(), p.end(), 0.0);
}

std::vector<Image> blank_squares(int n = 64, int size = 32) {
    return std::vector<Image>(n, Image(size, size, 3, 128));
}

class FixedBackend final : public ClassifierBackend {
public:
    std::vector<SquareProbabilities> out;
    bool fail = false;
    int calls = 0;

    std::vector<SquareProbabilities> classify_batch(std::span<const Image>) override {
        ++calls;
        if (fail) {
            throw std::runtime_error("model crashed");
        }
        return out;
    }
    std::string name() const override { return "fixed"; }
};

std::string text_of(const BoardProbabilities& probs, int rows = 64) {
    std::istringstream in(format_probabilities(probs));
    std::string out = "# header comment\n";
    std::string line;
    for (int i = 0; i < rows && std::getline(in, line); ++i) {
        out += line + '\n';
    }
    return out;
}

} // namespace

TEST_CASE("baseline on rendered empty squares") {
    for (bool light : {true, false}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Image sq = synth::render_square(Empty, light, {}, 96, {}, 2.0, seed);
            const auto p = baseline_classifier(sq);
            CHECK(p[ordinal(Empty)] > 0.9);
            CHECK(std::abs(sum(p) - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("baseline recognizes white pawns on dark squares") {
    int hits = 0;
    int total = 0;
    synth::Rng rng(4);
    for (int family = 0; family < 3; ++family) {
        for (int k = 0; k < 10; ++k) {
            const synth::PieceStyle style{family, 1.0};
            const Image sq = synth::render_square(WhitePawn, false, style, 96, synth::random_board_style(rng), 2.0,
                                                  100 + k);
            hits += argmax_class(baseline_classifier(sq)) == WhitePawn ? 1 : 0;
            ++total;
        }
    }
    CHECK(hits >= 0.7 * total);
}

TEST_CASE("baseline output is a probability vector on noise") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> u(0, 255);
    for (int t = 0; t < 20; ++t) {
        Image img(40, 40, 3);
        for (auto& v : img.samples()) {
            v = static_cast<std::uint8_t>(u(rng));
        }
        const auto p = baseline_classifier(img);
        CHECK(std::abs(sum(p) - 1.0) < 1e-6);
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    CHECK_THROWS_AS(baseline_classifier(Image(15, 40, 3)), Error);
}

TEST_CASE("baseline ignores a uniform brightness offset") {
    const PieceClass pieces[] = {Empty, WhiteKnight, BlackRook, WhitePawn, BlackQueen};
    for (PieceClass piece : pieces) {
        for (bool light : {true, false}) {
            Image sq = synth::render_square(piece, light, {}, 80, {}, 1.0, 3);
            Image brighter = sq;
            bool clipped = false;
            for (auto& v : brighter.samples()) {
                clipped |= v > 245;
                v = static_cast<std::uint8_t>(std::min(255, v + 10));
            }
            REQUIRE_FALSE(clipped);
            CHECK(baseline_classifier(sq) == baseline_classifier(brighter));
        }
    }
}

TEST_CASE("classify_squares") {
    synth::Rng rng(2);
    const BoardProbabilities truth = synth::random_probabilities(rng);
    FixedBackend backend;
    backend.out.assign(truth.begin(), truth.end());

    SUBCASE("one batch call, values passed through") {
        const auto got = classify_squares(backend, blank_squares());
        CHECK(backend.calls == 1);
        for (int sq = 0; sq < 64; ++sq) {
            CHECK(std::abs(sum(got[sq]) - 1.0) < 1e-6);
            for (int c = 0; c < kNumClasses; ++c) {
                CHECK(std::abs(got[sq][c] - truth[sq][c]) < 1e-12);
            }
        }
    }
    SUBCASE("small deviations are renormalized") {
        for (double& v : backend.out[5]) {
            v *= 1.0005;
        }
        const auto got = classify_squares(backend, blank_squares());
        CHECK(std::abs(sum(got[5]) - 1.0) < 1e-12);
    }
    SUBCASE("a vector summing to 0.5 names its square") {
        for (double& v : backend.out[17]) {
            v *= 0.5;
        }
        try {
            classify_squares(backend, blank_squares());
            FAIL("expected a classification error");
        } catch (const ClassificationError& e) {
            CHECK(e.square() == 17);
        }
    }
    SUBCASE("backend failure") {
        backend.fail = true;
        try {
            classify_squares(backend, blank_squares());
            FAIL("expected a classification error");
        } catch (const ClassificationError& e) {
            CHECK(e.square() == -1);
        }
    }
    SUBCASE("wrong vector count") {
        backend.out.pop_back();
        CHECK_THROWS_AS(classify_squares(backend, blank_squares()), ClassificationError);
    }
    SUBCASE("bad square input") {
        CHECK_THROWS_AS(classify_squares(backend, blank_squares(63)), Error);
        auto squares = blank_squares();
        squares[40] = Image(33, 32, 3);
        CHECK_THROWS_AS(classify_squares(backend, squares), Error);
    }
}

TEST_CASE("baseline backend is deterministic") {
    synth::Rng rng(8);
    std::vector<Image> squares;
    for (int sq = 0; sq < 64; ++sq) {
        squares.push_back(synth::render_square(piece_class(sq % 13), sq % 2 == 0, {}, 64, {}, 2.0, sq));
    }
    BaselineBackend backend;
    CHECK(classify_squares(backend, squares) == classify_squares(backend, squares));
}

TEST_CASE("probability files") {
    synth::Rng rng(6);
    const BoardProbabilities probs = synth::random_probabilities(rng);

    SUBCASE("file backend replays the file bit for bit") {
        const auto parsed = parse_probabilities(text_of(probs));
        CHECK(parsed == probs);
        FileBackend backend(parsed);
        CHECK(classify_squares(backend, blank_squares()) == probs);
    }
    SUBCASE("63 rows") {
        try {
            parse_probabilities(text_of(probs, 63));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("found 63 rows") != std::string::npos);
        }
    }
    SUBCASE("row of zeros") {
        BoardProbabilities bad = probs;
        bad[9].fill(0.0);
        try {
            parse_probabilities(text_of(bad));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            // One comment line precedes row 0.
            CHECK(e.offset() == 11);
            CHECK(std::string(e.what()).find("row 9") != std::string::npos);
        }
    }
    SUBCASE("wrong column count and non-finite values") {
        std::string text = text_of(probs);
        CHECK_THROWS_AS(parse_probabilities(text + "0 1\n"), ParseError);
        const auto first_row = text.find('\n') + 1;
        std::string nan_text = text;
        nan_text.replace(first_row, nan_text.find(' ', first_row) - first_row, "nan");
        CHECK_THROWS_AS(parse_probabilities(nan_text), ParseError);
        std::string short_row = text;
        short_row.erase(short_row.rfind(' ', short_row.find('\n', first_row)), short_row.find('\n', first_row) - short_row.rfind(' ', short_row.find('\n', first_row)));
        CHECK_THROWS_AS(parse_probabilities(short_row), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_probability_file("/nonexistent/probs.txt"), Error);
    }
}
