#pragma once

// Synthetic fixtures with known ground truth: random legal positions, noisy
// probability vectors, and rendered boards under perspective.

#include "boardscan/geometry.hpp"
#include "boardscan/image.hpp"
#include "boardscan/position.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace boardscan::synth {

using Rng = std::mt19937_64;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
};

/// Random position that satisfies every census rule: one king per side,
/// material drawn from a full set with random captures and occasional queen
/// promotions, pawns kept off the back ranks, bishop pairs on opposite colors.
BoardPosition random_legal_position(Rng& rng);

/// Probability 1 on the true class of every square.
BoardProbabilities one_hot(const BoardPosition& position);

/// Per square, a Dirichlet draw with parameter `concentration` on the true
/// class and `base` on each of the other twelve.
BoardProbabilities dirichlet_noised(const BoardPosition& position, double concentration, Rng& rng,
                                    double base = 1.0);

/// 64 independent Dirichlet(1, ..., 1) vectors: no relation to any position.
BoardProbabilities random_probabilities(Rng& rng);

struct BoardStyle {
    Rgb light{222, 206, 170};
    Rgb dark{120, 86, 58};
    Rgb frame{74, 52, 36};
    /// Frame width in squares.
    double frame_width = 0.45;
};

/// Silhouette family used for the pieces: 0 standard, 1 slim, 2 chunky.
struct PieceStyle {
    int family = 0;
    /// Height multiplier; values above 1 make pieces reach into the square above.
    double height_scale = 1.0;
};

BoardStyle random_board_style(Rng& rng);

struct Occluder {
    Point2 center; ///< board units ([0,1]^2 spans the playing area)
    double radius; ///< board units
    Rgb color;
};

struct RenderOptions {
    int width = 640;
    int height = 480;
    int channels = 3;
    /// Camera elevation tilt away from a frontal view, degrees.
    double tilt_deg = 0.0;
    /// In-plane rotation, degrees.
    double roll_deg = 0.0;
    /// Camera distance in board widths; smaller means stronger perspective.
    double camera_distance = 1.8;
    /// Fraction of the image spanned by the board including its frame.
    double fill = 0.8;
    /// Board center offset from the image center, pixels.
    Point2 offset{0.0, 0.0};
    double blur_sigma = 0.0;
    double noise_sigma = 0.0;
    int clutter = 0;
    BoardStyle board;
    PieceStyle pieces;
    std::vector<Occluder> occluders;
    /// Large image-space ellipse (center, radii) drawn over everything.
    std::optional<std::array<double, 4>> hand;
    std::uint64_t seed = 1;
};

struct RenderedBoard {
    Image image;
    /// Playing-area corners in image pixels: top-left, top-right,
    /// bottom-right, bottom-left (a8, h8, h1, a1).
    std::array<Point2, 4> corners;
    /// Board units ([0,1]^2) to image pixels.
    Homography board_to_image;
    /// The 49 interior lattice points in image pixels, row-major.
    std::array<Point2, 49> lattice;
    /// Whether each lattice point's neighbourhood is free of pieces and occluders.
    std::array<bool, 49> lattice_visible{};
};

RenderedBoard render_board(const BoardPosition& position, const RenderOptions& options);

/// Random scene parameters for the detection benchmarks: tilt within
/// [0, max_tilt_deg], mild blur and noise, random board and piece styles.
RenderOptions random_render_options(Rng& rng, double max_tilt_deg = 45.0);

/// One square seen head-on, `size` x `size` RGB.
Image render_square(PieceClass piece, bool light_square, const PieceStyle& style, int size,
                    const BoardStyle& board = {}, double noise_sigma = 0.0, std::uint64_t seed = 1);

/// Image with no board: background gradient plus clutter.
Image render_background(int width, int height, int clutter, std::uint64_t seed);

} // namespace boardscan::synth
