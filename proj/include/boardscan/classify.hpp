#pragma once

#include "boardscan/image.hpp"
#include "boardscan/position.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace boardscan {

/// Source of 13-way scores for a whole board. One call receives all 64
/// squares; implementations must tolerate concurrent calls on distinct boards.
class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;

    /// One raw vector per input square, in input order.
    virtual std::vector<SquareProbabilities> classify_batch(std::span<const Image> squares) = 0;
    virtual std::string name() const = 0;
};

/// Replays vectors computed elsewhere, ignoring the square images.
class FileBackend final : public ClassifierBackend {
public:
    explicit FileBackend(BoardProbabilities probabilities) : probs_(probabilities) {}
    explicit FileBackend(const std::filesystem::path& path);

    std::vector<SquareProbabilities> classify_batch(std::span<const Image> squares) override;
    std::string name() const override { return "file"; }

private:
    BoardProbabilities probs_;
};

/// Hand-tuned image features; see baseline_classifier.
class BaselineBackend final : public ClassifierBackend {
public:
    std::vector<SquareProbabilities> classify_batch(std::span<const Image> squares) override;
    std::string name() const override { return "baseline"; }
};

/// Measurements the baseline classifier scores.
struct SquareFeatures {
    /// Fraction of strong-gradient pixels in the central region.
    double edge_density = 0.0;
    /// Median piece intensity minus the square's background intensity.
    double color_contrast = 0.0;
    /// Silhouette height as a fraction of the square height (0 when none).
    double height = 0.0;
    /// Mean silhouette width over the top, middle and bottom thirds, divided
    /// by the widest row.
    std::array<double, 3> profile{};
};

SquareFeatures baseline_features(const Image& square);

/// Occupancy from edge density, color from the piece/background contrast,
/// type from the nearest silhouette template; softmax at temperature 1.
SquareProbabilities baseline_classifier(const Image& square);

/// Calls the backend once for the board and normalizes each vector. Throws
/// ClassificationError naming the square for vectors that cannot be
/// normalized, and for backend failures (square -1).
BoardProbabilities classify_squares(ClassifierBackend& backend, std::span<const Image> squares);

/// 64 rows of 13 space-separated reals in PieceClass order; lines starting
/// with '#' are comments. Throws ParseError carrying the 1-based line number.
BoardProbabilities parse_probabilities(std::string_view text);
BoardProbabilities load_probability_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form of every value.
std::string format_probabilities(const BoardProbabilities& probs);
void save_probability_file(const BoardProbabilities& probs, const std::filesystem::path& path);

} // namespace boardscan
