#pragma once

#include "boardscan/image.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace boardscan {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2 a, Point2 b) = default;

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Lexicographic (x, then y) ordering, the sweep's event order.
inline bool lex_less(Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

/// Non-degenerate segment with finite endpoints.
class Segment2 {
public:
    Segment2(Point2 a, Point2 b);

    Point2 a() const noexcept { return a_; }
    Point2 b() const noexcept { return b_; }

private:
    Point2 a_;
    Point2 b_;
};

/// Row-major 3x3 projective map, normalized so that m[8] == 1 whenever it
/// is nonzero.
class Homography {
public:
    static constexpr double kSingularEpsilon = 1e-14;

    Homography() : Homography(identity()) {}
    explicit Homography(const std::array<double, 9>& m);

    static Homography identity();
    static Homography scale(double sx, double sy);
    static Homography translation(double tx, double ty);

    const std::array<double, 9>& matrix() const noexcept { return m_; }
    double operator()(int row, int col) const { return m_[row * 3 + col]; }

    Point2 apply(Point2 p) const;
    double determinant() const;
    Homography inverse() const;

    /// `*this` applied after `first`.
    Homography compose(const Homography& first) const;

private:
    std::array<double, 9> m_;
};

/// |(y1 - x1)(x2 - z2) - (y2 - x2)(x1 - z1)|: twice the area of triangle
/// (x, y, z). For a fixed line (x, y) it orders points z by distance.
double triangle_area2(Point2 x, Point2 y, Point2 z);

/// Euclidean distance from `p` to the infinite line through `line_a` and
/// `line_b`. Throws on coincident line points.
double point_line_distance(Point2 p, Point2 line_a, Point2 line_b);

inline constexpr double kDefaultMergeRadius = 1e-7;
inline constexpr std::size_t kDefaultIntersectionThreshold = 64;

/// Raw intersections of one pair: zero, one, or two points (the overlap
/// endpoints of collinear segments).
std::vector<Point2> segment_intersection(const Segment2& s, const Segment2& t);

/// Sorts lexicographically and collapses points closer than `radius`.
std::vector<Point2> merge_points(std::vector<Point2> points, double radius);

/// O(n^2) all-pairs intersection.
std::vector<Point2> intersections_naive(std::span<const Segment2> segments,
                                        double merge_radius = kDefaultMergeRadius);

/// Bentley-Ottmann sweep, O((n + k) log n).
std::vector<Point2> intersections_sweep(std::span<const Segment2> segments,
                                        double merge_radius = kDefaultMergeRadius);

enum class IntersectionBranch { Naive, Sweep };

struct IntersectionOptions {
    std::size_t threshold = kDefaultIntersectionThreshold;
    double merge_radius = kDefaultMergeRadius;
    /// Called once per dispatch with the branch taken.
    std::function<void(IntersectionBranch)> observer;
};

/// Naive for |segments| <= threshold, sweep otherwise.
std::vector<Point2> intersections(std::span<const Segment2> segments,
                                  const IntersectionOptions& options = {});

/// Exact projective map taking the four `src` corners onto the four `dst`
/// corners. Throws when either quad has three collinear corners.
Homography homography_from_quad(std::span<const Point2, 4> src, std::span<const Point2, 4> dst);

/// Least-squares (normalized DLT) fit over >= 4 correspondences.
Homography fit_homography(std::span<const Point2> src, std::span<const Point2> dst);

/// out_w x out_h image sampled through the inverse of `h` (which maps source
/// pixels to output pixels) with bilinear interpolation; black outside.
Image warp(const Image& image, const Homography& h, int out_w, int out_h);

Image warp_crop(const Image& image, const Homography& h, int out_size);

GrayF warp_gray(const GrayF& gray, const Homography& h, int out_w, int out_h, float outside = 0.f);

} // namespace boardscan
