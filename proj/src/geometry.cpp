#include "boardscan/geometry.hpp"

#include "boardscan/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>

namespace boardscan {

Segment2::Segment2(Point2 a, Point2 b) : a_(a), b_(b) {
    if (!a.finite() || !b.finite()) {
        throw Error(ErrorKind::InvalidArgument, "segment endpoints must be finite");
    }
    if (a == b) {
        throw Error(ErrorKind::InvalidArgument, "zero-length segment");
    }
}

// ---------------------------------------------------------------------------
// Homography

Homography::Homography(const std::array<double, 9>& m) : m_(m) {
    for (double v : m_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Geometry, "homography has non-finite entries");
        }
    }
    if (m_[8] != 0.0) {
        const double s = m_[8];
        for (double& v : m_) {
            v /= s;
        }
    }
    double max_abs = 0.0;
    for (double v : m_) {
        max_abs = std::max(max_abs, std::abs(v));
    }
    if (max_abs == 0.0 || std::abs(determinant()) <= kSingularEpsilon * max_abs * max_abs * max_abs) {
        throw Error(ErrorKind::Geometry, "homography is not invertible");
    }
}

Homography Homography::identity() {
    return Homography(std::array<double, 9>{1, 0, 0, 0, 1, 0, 0, 0, 1});
}

Homography Homography::scale(double sx, double sy) {
    return Homography(std::array<double, 9>{sx, 0, 0, 0, sy, 0, 0, 0, 1});
}

Homography Homography::translation(double tx, double ty) {
    return Homography(std::array<double, 9>{1, 0, tx, 0, 1, ty, 0, 0, 1});
}

Point2 Homography::apply(Point2 p) const {
    const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
    return {(m_[0] * p.x + m_[1] * p.y + m_[2]) / w, (m_[3] * p.x + m_[4] * p.y + m_[5]) / w};
}

double Homography::determinant() const {
    const auto& m = m_;
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
         + m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::inverse() const {
    const auto& m = m_;
    const double det = determinant();
    std::array<double, 9> inv{
        (m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det, (m[1] * m[5] - m[2] * m[4]) / det,
        (m[5] * m[6] - m[3] * m[8]) / det, (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
        (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det, (m[0] * m[4] - m[1] * m[3]) / det,
    };
    return Homography(inv);
}

Homography Homography::compose(const Homography& first) const {
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) {
                acc += m_[r * 3 + k] * first.m_[k * 3 + c];
            }
            out[r * 3 + c] = acc;
        }
    }
    return Homography(out);
}

// ---------------------------------------------------------------------------
// Distance kernels

double triangle_area2(Point2 x, Point2 y, Point2 z) {
    return std::abs((y.x - x.x) * (x.y - z.y) - (y.y - x.y) * (x.x - z.x));
}

double point_line_distance(Point2 p, Point2 line_a, Point2 line_b) {
    const double len = distance(line_a, line_b);
    if (len == 0.0) {
        throw Error(ErrorKind::Geometry, "degenerate line: coincident endpoints");
    }
    return triangle_area2(p, line_a, line_b) / len;
}

// ---------------------------------------------------------------------------
// Segment intersection

namespace {

constexpr double kParamEps = 1e-12;

bool on_segment(Point2 p, const Segment2& s) {
    const Point2 d = s.b() - s.a();
    const double t = dot(p - s.a(), d) / dot(d, d);
    return t >= -kParamEps && t <= 1.0 + kParamEps;
}

Point2 snap(double t, Point2 a, Point2 b, Point2 fallback) {
    if (std::abs(t) <= kParamEps) {
        return a;
    }
    if (std::abs(t - 1.0) <= kParamEps) {
        return b;
    }
    return fallback;
}

} // namespace

std::vector<Point2> segment_intersection(const Segment2& s, const Segment2& t) {
    const Point2 p = s.a();
    const Point2 r = s.b() - s.a();
    const Point2 q = t.a();
    const Point2 sv = t.b() - t.a();
    const Point2 qp = q - p;
    if (std::max(s.a().x, s.b().x) < std::min(t.a().x, t.b().x)
        || std::max(t.a().x, t.b().x) < std::min(s.a().x, s.b().x)
        || std::max(s.a().y, s.b().y) < std::min(t.a().y, t.b().y)
        || std::max(t.a().y, t.b().y) < std::min(s.a().y, s.b().y)) {
        return {};
    }
    const double denom = cross(r, sv);
    const double rr = dot(r, r);
    const double ss = dot(sv, sv);

    if (denom * denom <= kParamEps * kParamEps * rr * ss) {
        const double rn = std::sqrt(rr);
        const double sn = std::sqrt(ss);
        // Parallel: only collinear overlaps intersect.
        const double off = std::abs(cross(qp, r)) / rn;
        const double off2 = std::abs(cross(t.b() - p, r)) / rn;
        if (off > kParamEps * std::max({rn, sn, 1.0}) || off2 > kParamEps * std::max({rn, sn, 1.0})) {
            return {};
        }
        std::vector<Point2> cand;
        if (on_segment(s.a(), t)) cand.push_back(s.a());
        if (on_segment(s.b(), t)) cand.push_back(s.b());
        if (on_segment(t.a(), s)) cand.push_back(t.a());
        if (on_segment(t.b(), s)) cand.push_back(t.b());
        if (cand.empty()) {
            return {};
        }
        auto key = [&](Point2 c) { return dot(c - p, r); };
        const auto [lo, hi] = std::minmax_element(cand.begin(), cand.end(),
                                                  [&](Point2 a, Point2 b) { return key(a) < key(b); });
        if (*lo == *hi) {
            return {*lo};
        }
        return {*lo, *hi};
    }

    const double ts = cross(qp, sv) / denom;
    const double us = cross(qp, r) / denom;
    if (ts < -kParamEps || ts > 1.0 + kParamEps || us < -kParamEps || us > 1.0 + kParamEps) {
        return {};
    }
    Point2 x = p + ts * r;
    x = snap(us, t.a(), t.b(), x);
    x = snap(ts, s.a(), s.b(), x);
    return {x};
}

std::vector<Point2> merge_points(std::vector<Point2> points, double radius) {
    std::sort(points.begin(), points.end(), lex_less);
    std::vector<Point2> kept;
    kept.reserve(points.size());
    for (const Point2& p : points) {
        bool dup = false;
        for (auto it = kept.rbegin(); it != kept.rend() && it->x >= p.x - radius; ++it) {
            if (distance(*it, p) <= radius) {
                dup = true;
                break;
            }
        }
        if (!dup) {
            kept.push_back(p);
        }
    }
    return kept;
}

std::vector<Point2> intersections_naive(std::span<const Segment2> segments, double merge_radius) {
    std::vector<Point2> found;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        for (std::size_t j = i + 1; j < segments.size(); ++j) {
            for (Point2 x : segment_intersection(segments[i], segments[j])) {
                found.push_back(x);
            }
        }
    }
    return merge_points(std::move(found), merge_radius);
}

namespace {

struct SweepSegment {
    Point2 lo;
    Point2 hi;
    bool vertical;
    double slope;
};

struct SweepState {
    std::vector<SweepSegment> segs;
    Point2 at;

    double y_at(int id) const {
        const SweepSegment& s = segs[id];
        if (s.vertical) {
            return std::clamp(at.y, s.lo.y, s.hi.y);
        }
        if (at.x <= s.lo.x) return s.lo.y;
        if (at.x >= s.hi.x) return s.hi.y;
        // Interpolate from the nearer endpoint.
        if (at.x - s.lo.x <= s.hi.x - at.x) {
            return s.lo.y + (at.x - s.lo.x) * s.slope;
        }
        return s.hi.y - (s.hi.x - at.x) * s.slope;
    }
};

// Orders active segments by height on the sweep line; segments meeting at the
// current event point are ordered by their position just right of it.
struct StatusLess {
    const SweepState* state;

    bool operator()(int a, int b) const {
        if (a == b) {
            return false;
        }
        const double ya = state->y_at(a);
        const double yb = state->y_at(b);
        const double tol = 1e-9 * std::max({1.0, std::abs(ya), std::abs(yb)});
        if (ya < yb - tol) return true;
        if (ya > yb + tol) return false;
        const double sa = state->segs[a].vertical ? std::numeric_limits<double>::infinity() : state->segs[a].slope;
        const double sb = state->segs[b].vertical ? std::numeric_limits<double>::infinity() : state->segs[b].slope;
        if (sa != sb) {
            return sa < sb;
        }
        return a < b;
    }
};

struct LexLess {
    bool operator()(Point2 a, Point2 b) const { return lex_less(a, b); }
};

struct Event {
    std::vector<int> starts;
    std::vector<int> ends;
    std::vector<int> through;
};

class Sweep {
public:
    Sweep(std::span<const Segment2> segments, double radius)
        : input_(segments), radius_(radius), status_(StatusLess{&state_}) {
        const int n = static_cast<int>(segments.size());
        state_.segs.reserve(segments.size() + 1);
        for (const Segment2& s : segments) {
            Point2 lo = s.a();
            Point2 hi = s.b();
            if (lex_less(hi, lo)) {
                std::swap(lo, hi);
            }
            const bool vertical = lo.x == hi.x;
            state_.segs.push_back({lo, hi, vertical, vertical ? 0.0 : (hi.y - lo.y) / (hi.x - lo.x)});
        }
        // Slot n is a probe standing for the current event point; its slope
        // sorts it below every segment tied with it.
        probe_ = n;
        state_.segs.push_back({{}, {}, false, -std::numeric_limits<double>::infinity()});
        where_.resize(segments.size());
        active_.assign(segments.size(), false);
        for (int i = 0; i < n; ++i) {
            events_[state_.segs[i].lo].starts.push_back(i);
            events_[state_.segs[i].hi].ends.push_back(i);
        }
    }

    std::vector<Point2> run() {
        while (!events_.empty()) {
            auto node = events_.extract(events_.begin());
            handle(node.key(), node.mapped());
        }
        return merge_points(std::move(reports_), radius_);
    }

private:
    using Status = std::set<int, StatusLess>;

    bool tied(int id, Point2 p) const {
        const double y = state_.y_at(id);
        return std::abs(y - p.y) <= 1e-9 * std::max({1.0, std::abs(y), std::abs(p.y)});
    }

    void handle(Point2 p, Event& ev) {
        std::sort(ev.ends.begin(), ev.ends.end());
        std::sort(ev.through.begin(), ev.through.end());
        ev.through.erase(std::unique(ev.through.begin(), ev.through.end()), ev.through.end());
        auto recorded = [&](int id) {
            return std::binary_search(ev.ends.begin(), ev.ends.end(), id)
                || std::binary_search(ev.through.begin(), ev.through.end(), id);
        };

        state_.at = p;
        state_.segs[probe_].lo = p;
        state_.segs[probe_].hi = p;

        // Every active segment through p forms a contiguous block around the probe.
        std::vector<int> block;
        const auto first = status_.lower_bound(probe_);
        auto up = first;
        for (; up != status_.end() && (tied(*up, p) || recorded(*up)); ++up) {
            block.push_back(*up);
        }
        auto down = first;
        while (down != status_.begin()) {
            auto prev = std::prev(down);
            if (!tied(*prev, p) && !recorded(*prev)) {
                break;
            }
            block.push_back(*prev);
            down = prev;
        }
        std::optional<int> below;
        std::optional<int> above;
        if (down != status_.begin()) below = *std::prev(down);
        if (up != status_.end()) above = *up;
        // Recorded segments the walk missed are stale positions; pull them too.
        for (int id : ev.ends) {
            if (active_[id] && std::find(block.begin(), block.end(), id) == block.end()) block.push_back(id);
        }
        for (int id : ev.through) {
            if (active_[id] && std::find(block.begin(), block.end(), id) == block.end()) block.push_back(id);
        }

        std::size_t genuine = ev.starts.size();
        for (int id : block) {
            if (recorded(id)) ++genuine;
        }
        if (genuine > 1) {
            reports_.push_back(p);
        }

        std::vector<int> entering = ev.starts;
        for (int id : block) {
            status_.erase(where_[id]);
            active_[id] = false;
            if (!std::binary_search(ev.ends.begin(), ev.ends.end(), id)) {
                entering.push_back(id);
            }
        }
        for (int id : entering) {
            where_[id] = status_.insert(id).first;
            active_[id] = true;
        }

        if (entering.empty()) {
            if (below && above) {
                check(*below, *above, p);
            }
            return;
        }
        for (int id : entering) {
            auto it = where_[id];
            if (it != status_.begin()) {
                check(*std::prev(it), id, p);
            }
            auto next = std::next(it);
            if (next != status_.end()) {
                check(id, *next, p);
            }
        }
    }

    void check(int a, int b, Point2 p) {
        for (Point2 q : segment_intersection(input_[a], input_[b])) {
            if (!lex_less(p, q)) {
                // At or numerically behind the current event: report only.
                reports_.push_back(q);
                continue;
            }
            Event& ev = events_[q];
            ev.through.push_back(a);
            ev.through.push_back(b);
        }
    }

    std::span<const Segment2> input_;
    double radius_;
    SweepState state_;
    Status status_;
    int probe_ = 0;
    std::map<Point2, Event, LexLess> events_;
    std::vector<Status::iterator> where_;
    std::vector<bool> active_;
    std::vector<Point2> reports_;
};

} // namespace

std::vector<Point2> intersections_sweep(std::span<const Segment2> segments, double merge_radius) {
    return Sweep(segments, merge_radius).run();
}

std::vector<Point2> intersections(std::span<const Segment2> segments, const IntersectionOptions& options) {
    const bool naive = segments.size() <= options.threshold;
    if (options.observer) {
        options.observer(naive ? IntersectionBranch::Naive : IntersectionBranch::Sweep);
    }
    return naive ? intersections_naive(segments, options.merge_radius)
                 : intersections_sweep(segments, options.merge_radius);
}

// ---------------------------------------------------------------------------
// Homography estimation

namespace {

bool quad_degenerate(std::span<const Point2, 4> q) {
    double scale = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            scale = std::max(scale, distance(q[i], q[j]));
        }
    }
    if (scale == 0.0) {
        return true;
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            for (int k = j + 1; k < 4; ++k) {
                if (triangle_area2(q[i], q[j], q[k]) <= 1e-9 * scale * scale) {
                    return true;
                }
            }
        }
    }
    return false;
}

// Similarity taking the centroid to the origin and the mean distance to sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Point2> pts) {
    double cx = 0.0;
    double cy = 0.0;
    for (Point2 p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double mean = 0.0;
    for (Point2 p : pts) {
        mean += std::hypot(p.x - cx, p.y - cy);
    }
    mean /= static_cast<double>(pts.size());
    const double s = mean > 0.0 ? std::sqrt(2.0) / mean : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

Homography from_eigen(const Eigen::Matrix3d& m) {
    std::array<double, 9> a{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            a[r * 3 + c] = m(r, c);
        }
    }
    return Homography(a);
}

} // namespace

Homography homography_from_quad(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) {
    if (quad_degenerate(src) || quad_degenerate(dst)) {
        throw Error(ErrorKind::Geometry, "degenerate quadrilateral: three collinear corners");
    }
    const Eigen::Matrix3d ts = normalizer(src);
    const Eigen::Matrix3d td = normalizer(dst);
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const double x = s.x();
        const double y = s.y();
        const double u = d.x();
        const double v = d.y();
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    return from_eigen(td.inverse() * hn * ts);
}

Homography fit_homography(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size() || src.size() < 4) {
        throw Error(ErrorKind::Geometry, "homography fit needs >= 4 matched correspondences");
    }
    const Eigen::Matrix3d ts = normalizer(src);
    const Eigen::Matrix3d td = normalizer(dst);
    const auto n = static_cast<Eigen::Index>(src.size());
    Eigen::MatrixXd a(2 * n, 9);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const double x = s.x();
        const double y = s.y();
        const double u = d.x();
        const double v = d.y();
        a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    return from_eigen(td.inverse() * hn * ts);
}

// ---------------------------------------------------------------------------
// Warping

Image warp(const Image& image, const Homography& h, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) {
        throw Error(ErrorKind::InvalidArgument, "warp output size must be positive");
    }
    const Homography inv = h.inverse();
    const int c = image.channels();
    Image out(out_w, out_h, c);
    const int w = image.width();
    const int hgt = image.height();
    for (int v = 0; v < out_h; ++v) {
        for (int u = 0; u < out_w; ++u) {
            const Point2 s = inv.apply({static_cast<double>(u), static_cast<double>(v)});
            if (!(s.x >= 0.0 && s.y >= 0.0 && s.x <= w - 1 && s.y <= hgt - 1)) {
                continue;
            }
            const int x0 = std::min(static_cast<int>(s.x), w - 1);
            const int y0 = std::min(static_cast<int>(s.y), hgt - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const int y1 = std::min(y0 + 1, hgt - 1);
            const double fx = s.x - x0;
            const double fy = s.y - y0;
            for (int ch = 0; ch < c; ++ch) {
                const double top = image.at(x0, y0, ch) + fx * (image.at(x1, y0, ch) - image.at(x0, y0, ch));
                const double bot = image.at(x0, y1, ch) + fx * (image.at(x1, y1, ch) - image.at(x0, y1, ch));
                out.at(u, v, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(top + fy * (bot - top)), 0L, 255L));
            }
        }
    }
    return out;
}

Image warp_crop(const Image& image, const Homography& h, int out_size) {
    return warp(image, h, out_size, out_size);
}

GrayF warp_gray(const GrayF& gray, const Homography& h, int out_w, int out_h, float outside) {
    if (out_w <= 0 || out_h <= 0) {
        throw Error(ErrorKind::InvalidArgument, "warp output size must be positive");
    }
    const Homography inv = h.inverse();
    GrayF out(out_w, out_h);
    for (int v = 0; v < out_h; ++v) {
        for (int u = 0; u < out_w; ++u) {
            const Point2 s = inv.apply({static_cast<double>(u), static_cast<double>(v)});
            out(u, v) = sample_bilinear(gray, s.x, s.y, outside);
        }
    }
    return out;
}

} // namespace boardscan
