#pragma once

#include "boardscan/geometry.hpp"
#include "boardscan/image.hpp"

#include <array>
#include <functional>
#include <vector>

namespace boardscan {

/// Board corners in image pixels, clockwise from the top-left one, plus the
/// map from the image onto the unit board square.
struct BoardLocation {
    std::array<Point2, 4> corners;
    Homography rectify;

    /// Orders nothing: corners must already be clockwise from top-left.
    /// Throws Error(Geometry) unless they form a strictly convex quadrilateral.
    static BoardLocation from_corners(const std::array<Point2, 4>& corners);

    /// Unit board square to image pixels.
    Homography board_to_image() const { return rectify.inverse(); }
};

/// Puts four corners in clockwise order starting from the one with the
/// smallest x + y.
std::array<Point2, 4> order_corners(std::array<Point2, 4> corners);

inline constexpr int kDefaultPatchSize = 21;
inline constexpr double kDefaultContrast = 0.15;
inline constexpr int kDefaultCheckTolerance = 20;

/// Square neighbourhood of a candidate lattice point. `intensity` is
/// contrast-normalized to [0, 1]; `edges` is the binarized Sobel magnitude of
/// it (0 or 1). Both are row-major, size x size.
struct LatticePatch {
    int size = 0;
    std::vector<float> intensity;
    std::vector<float> edges;

    float value(int x, int y) const { return intensity[static_cast<std::size_t>(y) * size + x]; }
    float edge(int x, int y) const { return edges[static_cast<std::size_t>(y) * size + x]; }

    /// Builds a patch from raw 0..255 samples (row-major, size x size, size odd).
    static LatticePatch from_samples(std::vector<float> samples, int size);
};

/// Samples `size` x `size` points center + (i - r) * axis_u + (j - r) * axis_v,
/// r = size / 2, then preprocesses them. Points outside the image read as 0.
LatticePatch make_patch(const GrayF& gray, Point2 center, Point2 axis_u, Point2 axis_v,
                        int size = kDefaultPatchSize);

/// X-corner test: mean intensities of the two diagonal quadrant pairs must be
/// separated by at least `contrast`, in either polarity.
bool geometric_detector(const LatticePatch& patch, double contrast = kDefaultContrast);

/// Built-in fallback: the geometric test at contrast / 2, plus exactly four
/// light/dark transitions on a ring around the center and two edge lines
/// crossing the center.
bool secondary_detector(const LatticePatch& patch, double contrast = kDefaultContrast);

using CornerDetector = std::function<bool(const LatticePatch&)>;

struct DetectConfig {
    int max_iters = 5;
    int patch_size = kDefaultPatchSize;
    double contrast = kDefaultContrast;
    /// Naive/sweep dispatch threshold for candidate intersections.
    std::size_t intersection_threshold = kDefaultIntersectionThreshold;
    int max_lines = 128;
    /// Early stop when no corner moves more than this fraction of the diagonal.
    double stop_fraction = 0.002;
    /// Side of the rectified working crop, pixels.
    int crop_size = 400;
    /// Largest side of the first-pass working image.
    int working_size = 800;
    /// Final acceptance: validated lattice points among the 49.
    int min_final_hits = kDefaultCheckTolerance;
    /// Replaces the built-in secondary detector when set.
    CornerDetector secondary;
};

/// 49 interior lattice points (board coordinates 1..7), row-major.
struct GridCandidate {
    std::array<Point2, 49> points;

    static GridCandidate from_location(const BoardLocation& location);
};

struct LineDetectConfig {
    int max_lines = 128;
    /// Minimum Sobel magnitude (0..255 intensity scale) of an edge pixel.
    double edge_threshold = 40.0;
    int min_votes = 30;
};

/// Hough lines clipped to the image, strongest first.
std::vector<Segment2> detect_lines(const Image& image, const LineDetectConfig& config = {});
std::vector<Segment2> detect_lines(const GrayF& gray, const LineDetectConfig& config = {});

/// Runs the geometric detector and, on rejection, the secondary one.
bool is_lattice_point(const LatticePatch& patch, const DetectConfig& config = {});

/// Per-point verdicts for a grid. Patches are aligned with and scaled to the
/// local grid spacing. Throws Error(InvalidArgument) if a point is outside the image.
std::array<bool, 49> validate_grid(const GrayF& gray, const GridCandidate& grid, const DetectConfig& config = {});

BoardLocation locate_board(const Image& image, const DetectConfig& config = {});

bool check_board_location(const Image& image, const GridCandidate& grid, int tolerance = kDefaultCheckTolerance,
                          const DetectConfig& config = {});
bool check_board_location(const GrayF& gray, const GridCandidate& grid, int tolerance = kDefaultCheckTolerance,
                          const DetectConfig& config = {});

/// 64 square images, index 0 = top-left of the rectified board. With
/// top_extension > 0 each crop reaches that fraction of a square higher (never
/// past the board's top edge) and is resampled to out_px x out_px.
std::vector<Image> split_squares(const Image& image, const BoardLocation& location, int out_px = 224,
                                 double top_extension = 0.0);

} // namespace boardscan
