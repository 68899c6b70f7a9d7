#include "boardscan/board_detect.hpp"

#include "boardscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>

namespace boardscan {

namespace {

constexpr double kPi = std::numbers::pi;

// Patch samples below this 2..98 percentile range count as flat.
constexpr float kFlatRange = 8.f;
// Half-width of a grid-aligned patch, in cells.
constexpr double kPatchExtent = 0.35;
// Hough resolution.
constexpr int kThetaBins = 360;
constexpr double kThetaStep = kPi / kThetaBins;
constexpr int kVoteSpread = 6; // bins either side of the gradient angle
constexpr double kNmsRho = 6.0;
constexpr double kNmsTheta = 2.0 * kPi / 180.0;

const std::array<Point2, 4> kUnitSquare = {Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0, 1}};

float percentile(std::vector<float> v, double q) {
    const auto k = static_cast<std::size_t>(q * (v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

// Mean of each quadrant (TL, TR, BL, BR), skipping the center row and column.
std::array<double, 4> quadrant_means(const LatticePatch& p) {
    const int r = p.size / 2;
    std::array<double, 4> sum{};
    for (int y = 0; y < p.size; ++y) {
        for (int x = 0; x < p.size; ++x) {
            if (x == r || y == r) {
                continue;
            }
            sum[(y > r ? 2 : 0) + (x > r ? 1 : 0)] += p.value(x, y);
        }
    }
    const double n = static_cast<double>(r) * r;
    for (double& s : sum) {
        s /= n;
    }
    return sum;
}

double x_corner_margin(const LatticePatch& p) {
    const auto q = quadrant_means(p);
    const double a = std::min(q[0], q[3]) - std::max(q[1], q[2]);
    const double b = std::min(q[1], q[2]) - std::max(q[0], q[3]);
    return std::max(a, b);
}

// Bilinear read inside the patch grid.
float patch_sample(const std::vector<float>& m, int size, double x, double y) {
    x = std::clamp(x, 0.0, size - 1.0);
    y = std::clamp(y, 0.0, size - 1.0);
    const int x0 = std::min(static_cast<int>(x), size - 2);
    const int y0 = std::min(static_cast<int>(y), size - 2);
    const double fx = x - x0;
    const double fy = y - y0;
    auto at = [&](int xx, int yy) { return m[static_cast<std::size_t>(yy) * size + xx]; };
    const double top = at(x0, y0) + fx * (at(x0 + 1, y0) - at(x0, y0));
    const double bot = at(x0, y0 + 1) + fx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
    return static_cast<float>(top + fy * (bot - top));
}

// Circular runs of `true` in a ring, ignoring runs shorter than `min_run`.
// Returns the center angle index of each run.
std::vector<double> ring_runs(const std::vector<bool>& ring, int min_run) {
    const int n = static_cast<int>(ring.size());
    std::vector<double> out;
    int start = -1;
    for (int i = 0; i < n; ++i) {
        if (ring[i] && !ring[(i + n - 1) % n]) {
            start = i;
            break;
        }
    }
    if (start < 0) {
        return out;
    }
    for (int k = 0; k < n;) {
        const int i = (start + k) % n;
        if (!ring[i]) {
            ++k;
            continue;
        }
        int len = 0;
        while (len < n && ring[(i + len) % n]) {
            ++len;
        }
        if (len >= min_run) {
            out.push_back(i + (len - 1) / 2.0);
        }
        k += len;
    }
    return out;
}

struct HoughLine {
    double theta;
    double rho;
    int votes;
};

bool same_line(const HoughLine& a, const HoughLine& b) {
    double dt = std::abs(a.theta - b.theta);
    double rb = b.rho;
    if (dt > kPi / 2) {
        dt = kPi - dt;
        rb = -rb;
    }
    return dt <= kNmsTheta && std::abs(a.rho - rb) <= kNmsRho;
}

std::vector<HoughLine> hough_lines(const GrayF& gray, const LineDetectConfig& cfg) {
    if (gray.width < 64 || gray.height < 64) {
        throw Error(ErrorKind::InvalidArgument, "image smaller than 64x64");
    }
    const int w = gray.width;
    const int h = gray.height;
    const Gradient g = sobel(gaussian_blur(gray, 1.0));

    static const auto tables = [] {
        std::array<std::array<double, kThetaBins>, 2> t{};
        for (int b = 0; b < kThetaBins; ++b) {
            t[0][b] = std::cos(b * kThetaStep);
            t[1][b] = std::sin(b * kThetaStep);
        }
        return t;
    }();
    const int d = static_cast<int>(std::ceil(std::hypot(w, h)));
    const int nrho = 2 * d + 1;
    std::vector<int> acc(static_cast<std::size_t>(kThetaBins) * nrho, 0);

    const float thr = static_cast<float>(cfg.edge_threshold);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const float m = g.magnitude(x, y);
            if (m < thr) {
                continue;
            }
            const float gx = g.gx(x, y);
            const float gy = g.gy(x, y);
            double phi = std::atan2(gy, gx);
            if (phi < 0) {
                phi += kPi;
            }
            // Thin to local maxima along the quantized gradient direction.
            static constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
            const int q = static_cast<int>(std::lround(phi / (kPi / 4))) % 4;
            const int ex = kStep[q][0];
            const int ey = kStep[q][1];
            if (m < g.magnitude(x + ex, y + ey) || m < g.magnitude(x - ex, y - ey)) {
                continue;
            }
            const int b0 = static_cast<int>(std::lround(phi / kThetaStep));
            for (int db = -kVoteSpread; db <= kVoteSpread; ++db) {
                const int b = ((b0 + db) % kThetaBins + kThetaBins) % kThetaBins;
                const double rho = x * tables[0][b] + y * tables[1][b];
                ++acc[static_cast<std::size_t>(b) * nrho + (std::lround(rho) + d)];
            }
        }
    }

    std::vector<HoughLine> peaks;
    for (int b = 0; b < kThetaBins; ++b) {
        for (int r = 1; r < nrho - 1; ++r) {
            const int v = acc[static_cast<std::size_t>(b) * nrho + r];
            if (v < cfg.min_votes) {
                continue;
            }
            bool is_max = true;
            for (int db = -1; db <= 1 && is_max; ++db) {
                int bb = b + db;
                int rr0 = r;
                if (bb < 0 || bb >= kThetaBins) {
                    bb = (bb + kThetaBins) % kThetaBins;
                    rr0 = nrho - 1 - r;
                }
                for (int dr = -1; dr <= 1; ++dr) {
                    const int rr = std::clamp(rr0 + dr, 0, nrho - 1);
                    if ((db != 0 || dr != 0) && acc[static_cast<std::size_t>(bb) * nrho + rr] > v) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) {
                peaks.push_back({b * kThetaStep, static_cast<double>(r - d), v});
            }
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const HoughLine& a, const HoughLine& b) { return a.votes > b.votes; });

    std::vector<HoughLine> kept;
    for (const HoughLine& p : peaks) {
        if (static_cast<int>(kept.size()) >= cfg.max_lines) {
            break;
        }
        if (std::none_of(kept.begin(), kept.end(), [&](const HoughLine& k) { return same_line(k, p); })) {
            kept.push_back(p);
        }
    }
    return kept;
}

std::optional<Segment2> clip_line(const HoughLine& l, int w, int h) {
    const Point2 n{std::cos(l.theta), std::sin(l.theta)};
    const Point2 p0 = l.rho * n;
    const Point2 dir{-n.y, n.x};
    double t0 = -1e18;
    double t1 = 1e18;
    auto clip = [&](double p, double dp, double lo, double hi) {
        if (std::abs(dp) < 1e-12) {
            return p >= lo && p <= hi;
        }
        double a = (lo - p) / dp;
        double b = (hi - p) / dp;
        if (a > b) {
            std::swap(a, b);
        }
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        return true;
    };
    if (!clip(p0.x, dir.x, 0.0, w - 1.0) || !clip(p0.y, dir.y, 0.0, h - 1.0) || t1 - t0 < 2.0) {
        return std::nullopt;
    }
    return Segment2(p0 + t0 * dir, p0 + t1 * dir);
}

// A validated candidate with the directions of the two lines through it.
struct Candidate {
    Point2 p;
    Point2 d1;
    Point2 d2;
};

bool inside(const GrayF& g, Point2 p, double margin) {
    return p.x >= margin && p.y >= margin && p.x <= g.width - 1 - margin && p.y <= g.height - 1 - margin;
}

std::vector<Candidate> lattice_candidates(const GrayF& gray, const std::vector<Segment2>& segs, const DetectConfig& cfg) {
    IntersectionOptions opt;
    opt.threshold = cfg.intersection_threshold;
    opt.merge_radius = 0.5;
    const std::vector<Point2> points = intersections(segs, opt);

    std::vector<Point2> dirs;
    dirs.reserve(segs.size());
    for (const Segment2& s : segs) {
        const Point2 v = s.b() - s.a();
        dirs.push_back((1.0 / norm(v)) * v);
    }
    const double margin = cfg.patch_size / 2 + 1.0;
    const double min_sin = std::sin(15.0 * kPi / 180.0);
    std::vector<Candidate> out;
    std::vector<int> through;
    for (Point2 p : points) {
        if (!inside(gray, p, margin)) {
            continue;
        }
        through.clear();
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (point_line_distance(p, segs[i].a(), segs[i].b()) < 0.75) {
                through.push_back(static_cast<int>(i));
            }
        }
        double best = min_sin;
        int bi = -1;
        int bj = -1;
        for (std::size_t i = 0; i < through.size(); ++i) {
            for (std::size_t j = i + 1; j < through.size(); ++j) {
                const double s = std::abs(cross(dirs[through[i]], dirs[through[j]]));
                if (s > best) {
                    best = s;
                    bi = through[i];
                    bj = through[j];
                }
            }
        }
        if (bi < 0) {
            continue;
        }
        const LatticePatch patch = make_patch(gray, p, dirs[bi], dirs[bj], cfg.patch_size);
        if (is_lattice_point(patch, cfg)) {
            out.push_back({p, dirs[bi], dirs[bj]});
        }
    }
    return out;
}

using Cell = std::array<int, 2>;

struct LatticeModel {
    Homography grid_to_image;
    std::vector<std::pair<Cell, Point2>> inliers;
};

std::vector<std::pair<Cell, Point2>> collect_inliers(const Homography& g2i, const std::vector<Point2>& pts, double radius,
                                                     double tol) {
    const Homography inv = g2i.inverse();
    std::map<Cell, std::pair<double, Point2>> best;
    for (Point2 p : pts) {
        const Point2 g = inv.apply(p);
        if (!std::isfinite(g.x) || !std::isfinite(g.y)) {
            continue;
        }
        const Cell c{static_cast<int>(std::lround(g.x)), static_cast<int>(std::lround(g.y))};
        const double res = std::max(std::abs(g.x - c[0]), std::abs(g.y - c[1]));
        if (res >= tol || std::max(std::abs(c[0]), std::abs(c[1])) > radius) {
            continue;
        }
        auto it = best.find(c);
        if (it == best.end() || res < it->second.first) {
            best[c] = {res, p};
        }
    }
    std::vector<std::pair<Cell, Point2>> out;
    for (const auto& [c, v] : best) {
        out.push_back({c, v.second});
    }
    return out;
}

std::optional<Homography> refit(const std::vector<std::pair<Cell, Point2>>& inliers) {
    if (inliers.size() < 4) {
        return std::nullopt;
    }
    std::vector<Point2> src;
    std::vector<Point2> dst;
    int min_x = inliers[0].first[0], max_x = min_x, min_y = inliers[0].first[1], max_y = min_y;
    for (const auto& [c, p] : inliers) {
        src.push_back({double(c[0]), double(c[1])});
        dst.push_back(p);
        min_x = std::min(min_x, c[0]);
        max_x = std::max(max_x, c[0]);
        min_y = std::min(min_y, c[1]);
        max_y = std::max(max_y, c[1]);
    }
    if (min_x == max_x || min_y == max_y) {
        return std::nullopt;
    }
    try {
        return fit_homography(src, dst);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::optional<LatticeModel> fit_lattice(const std::vector<Candidate>& cands) {
    if (cands.size() < 4) {
        return std::nullopt;
    }
    std::vector<Point2> pts;
    Point2 centroid{0, 0};
    for (const Candidate& c : cands) {
        pts.push_back(c.p);
        centroid = centroid + c.p;
    }
    centroid = (1.0 / pts.size()) * centroid;

    std::vector<std::size_t> order(cands.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return distance(pts[a], centroid) < distance(pts[b], centroid); });
    if (order.size() > 60) {
        order.resize(60);
    }

    auto neighbour = [&](Point2 p, Point2 dir) -> std::optional<Point2> {
        std::optional<Point2> best;
        double best_t = 1e18;
        for (Point2 q : pts) {
            const Point2 v = q - p;
            const double t = std::abs(dot(v, dir));
            if (t < 4.0 || std::abs(cross(v, dir)) > 1.5 + 0.08 * t) {
                continue;
            }
            if (t < best_t) {
                best_t = t;
                best = q;
            }
        }
        return best;
    };

    std::optional<LatticeModel> best;
    for (std::size_t s : order) {
        const Candidate& c = cands[s];
        const auto q = neighbour(c.p, c.d1);
        const auto r = neighbour(c.p, c.d2);
        if (!q || !r) {
            continue;
        }
        const Point2 expect = *q + *r - c.p;
        const double tol = 0.3 * std::min(distance(*q, c.p), distance(*r, c.p));
        std::optional<Point2> t;
        double td = tol;
        for (Point2 x : pts) {
            if (distance(x, expect) < td) {
                td = distance(x, expect);
                t = x;
            }
        }
        if (!t) {
            continue;
        }
        Homography h;
        try {
            const std::array<Point2, 4> dst = {c.p, *q, *t, *r};
            h = homography_from_quad(std::span<const Point2, 4>(kUnitSquare), std::span<const Point2, 4>(dst));
        } catch (const Error&) {
            continue;
        }
        bool ok = true;
        for (double radius : {1.5, 2.5, 4.0, 6.0, 8.0}) {
            const auto in = collect_inliers(h, pts, radius, 0.25);
            const auto fitted = refit(in);
            if (!fitted) {
                ok = radius > 1.5;
                break;
            }
            h = *fitted;
        }
        if (!ok) {
            continue;
        }
        LatticeModel model{h, collect_inliers(h, pts, 8.0, 0.25)};
        if (!best || model.inliers.size() > best->inliers.size()) {
            best = std::move(model);
            if (best->inliers.size() >= 45) {
                break;
            }
        }
    }
    return best;
}

// Patch axes from the grid spacing around a lattice point.
LatticePatch grid_patch(const GrayF& gray, Point2 center, Point2 cell_u, Point2 cell_v, int size) {
    const double k = kPatchExtent / (size / 2);
    return make_patch(gray, center, k * cell_u, k * cell_v, size);
}

bool grid_hit(const GrayF& gray, const Homography& g2i, double x, double y, const DetectConfig& cfg) {
    const Point2 p = g2i.apply({x, y});
    const Point2 u = 0.5 * (g2i.apply({x + 1, y}) - g2i.apply({x - 1, y}));
    const Point2 v = 0.5 * (g2i.apply({x, y + 1}) - g2i.apply({x, y - 1}));
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !inside(gray, p, 1.0)) {
        return false;
    }
    return is_lattice_point(grid_patch(gray, p, u, v, cfg.patch_size), cfg);
}

// Board unit square to working-frame pixels: chooses which 7 x 7 block of the
// fitted lattice is the board interior by detector hits at predicted points.
Homography choose_window(const GrayF& gray, const LatticeModel& m, const DetectConfig& cfg) {
    int imin = 1 << 20, imax = -(1 << 20), jmin = imin, jmax = imax;
    for (const auto& [c, p] : m.inliers) {
        imin = std::min(imin, c[0]);
        imax = std::max(imax, c[0]);
        jmin = std::min(jmin, c[1]);
        jmax = std::max(jmax, c[1]);
    }
    const int alo = std::min(imin, imax - 6) - 1;
    const int ahi = std::max(imin, imax - 6) + 1;
    const int blo = std::min(jmin, jmax - 6) - 1;
    const int bhi = std::max(jmin, jmax - 6) + 1;

    const int nx = ahi + 6 - alo + 1;
    const int ny = bhi + 6 - blo + 1;
    std::vector<int> hit(static_cast<std::size_t>(nx) * ny, 0);
    std::map<Cell, bool> is_inlier;
    for (const auto& [c, p] : m.inliers) {
        is_inlier[c] = true;
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Cell c{alo + i, blo + j};
            hit[static_cast<std::size_t>(j) * nx + i] =
                is_inlier.count(c) != 0 || grid_hit(gray, m.grid_to_image, c[0], c[1], cfg) ? 1 : 0;
        }
    }
    int best_score = -1;
    double best_off = 1e9;
    int ba = alo;
    int bb = blo;
    const double ci = (imin + imax) / 2.0;
    const double cj = (jmin + jmax) / 2.0;
    for (int a = alo; a <= ahi; ++a) {
        for (int b = blo; b <= bhi; ++b) {
            int score = 0;
            for (int j = 0; j < 7; ++j) {
                for (int i = 0; i < 7; ++i) {
                    score += hit[static_cast<std::size_t>(b - blo + j) * nx + (a - alo + i)];
                }
            }
            const double off = std::abs(a + 3 - ci) + std::abs(b + 3 - cj);
            if (score > best_score || (score == best_score && off < best_off)) {
                best_score = score;
                best_off = off;
                ba = a;
                bb = b;
            }
        }
    }
    const Homography board_to_grid =
        Homography::translation(ba - 1, bb - 1).compose(Homography::scale(8.0, 8.0));
    return m.grid_to_image.compose(board_to_grid);
}

// Gradient least-squares saddle refinement (the classic sub-pixel corner
// update) inside a (2 half + 1)^2 window.
Point2 refine_corner(const Gradient& g, Point2 p, int half) {
    const Point2 start = p;
    for (int iter = 0; iter < 6; ++iter) {
        double a = 0, b = 0, c = 0, bx = 0, by = 0;
        const int cx = static_cast<int>(std::lround(p.x));
        const int cy = static_cast<int>(std::lround(p.y));
        for (int y = cy - half; y <= cy + half; ++y) {
            for (int x = cx - half; x <= cx + half; ++x) {
                if (x < 1 || y < 1 || x >= g.gx.width - 1 || y >= g.gx.height - 1) {
                    continue;
                }
                const double gx = g.gx(x, y);
                const double gy = g.gy(x, y);
                a += gx * gx;
                b += gx * gy;
                c += gy * gy;
                bx += gx * gx * x + gx * gy * y;
                by += gx * gy * x + gy * gy * y;
            }
        }
        const double det = a * c - b * b;
        if (det <= 1e-9 * (a + c) * (a + c) || det <= 0) {
            return start;
        }
        const Point2 q{(c * bx - b * by) / det, (a * by - b * bx) / det};
        if (distance(q, start) > half) {
            return start;
        }
        const double step = distance(q, p);
        p = q;
        if (step < 0.01) {
            break;
        }
    }
    return p;
}

// Refines every confirmed interior lattice point of a board estimate and
// refits board units -> frame by least squares, dropping points that disagree
// with the fit.
Homography polish(const GrayF& frame, const Homography& b2f, const DetectConfig& cfg) {
    const Gradient g = sobel(gaussian_blur(frame, 0.7));
    const double cell = distance(b2f.apply({0.5, 0.5}), b2f.apply({0.625, 0.5}));
    const int half = std::max(2, static_cast<int>(0.2 * cell));
    std::vector<Point2> src;
    std::vector<Point2> dst;
    const Homography grid = b2f.compose(Homography::scale(0.125, 0.125));
    for (int i = 1; i <= 7; ++i) {
        for (int j = 1; j <= 7; ++j) {
            if (!grid_hit(frame, grid, j, i, cfg)) {
                continue;
            }
            const Point2 p = grid.apply({double(j), double(i)});
            const Point2 q = refine_corner(g, p, half);
            if (distance(p, q) < 0.15 * cell) {
                src.push_back({j / 8.0, i / 8.0});
                dst.push_back(q);
            }
        }
    }
    Homography h = b2f;
    for (int round = 0; round < 3 && src.size() >= 8; ++round) {
        try {
            h = fit_homography(src, dst);
        } catch (const Error&) {
            return b2f;
        }
        std::vector<double> res(src.size());
        for (std::size_t k = 0; k < src.size(); ++k) {
            res[k] = distance(h.apply(src[k]), dst[k]);
        }
        std::vector<double> sorted = res;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double limit = std::max(0.75, 3.0 * sorted[sorted.size() / 2]);
        std::vector<Point2> s2;
        std::vector<Point2> d2;
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (res[k] <= limit) {
                s2.push_back(src[k]);
                d2.push_back(dst[k]);
            }
        }
        if (s2.size() == src.size()) {
            break;
        }
        src = std::move(s2);
        dst = std::move(d2);
    }
    return h;
}

// Crop coordinates for a board with one square of margin on every side.
Homography board_to_crop(int size) {
    const double s = 0.8 * size;
    return Homography::translation(-0.5, -0.5)
        .compose(Homography::scale(s, s))
        .compose(Homography::translation(0.125, 0.125));
}

} // namespace

LatticePatch LatticePatch::from_samples(std::vector<float> samples, int size) {
    if (size < 3 || size % 2 == 0 || samples.size() != static_cast<std::size_t>(size) * size) {
        throw Error(ErrorKind::InvalidArgument, "patch side must be odd and match the sample count");
    }
    LatticePatch p;
    p.size = size;
    const float lo = percentile(samples, 0.02);
    const float hi = percentile(samples, 0.98);
    p.intensity.assign(samples.size(), 0.5f);
    p.edges.assign(samples.size(), 0.f);
    if (hi - lo < kFlatRange) {
        return p;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        p.intensity[i] = std::clamp((samples[i] - lo) / (hi - lo), 0.f, 1.f);
    }
    std::vector<float> mag(samples.size());
    float peak = 0.f;
    auto at = [&](int x, int y) {
        return p.intensity[static_cast<std::size_t>(std::clamp(y, 0, size - 1)) * size + std::clamp(x, 0, size - 1)];
    };
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const float gx = at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1) - at(x - 1, y - 1) - 2 * at(x - 1, y) - at(x - 1, y + 1);
            const float gy = at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1) - at(x - 1, y - 1) - 2 * at(x, y - 1) - at(x + 1, y - 1);
            const float m = std::hypot(gx, gy);
            mag[static_cast<std::size_t>(y) * size + x] = m;
            peak = std::max(peak, m);
        }
    }
    const float thr = std::max(0.3f * peak, 0.4f);
    for (std::size_t i = 0; i < mag.size(); ++i) {
        p.edges[i] = mag[i] >= thr ? 1.f : 0.f;
    }
    return p;
}

LatticePatch make_patch(const GrayF& gray, Point2 center, Point2 axis_u, Point2 axis_v, int size) {
    if (size < 3 || size % 2 == 0) {
        throw Error(ErrorKind::InvalidArgument, "patch side must be odd and at least 3");
    }
    const int r = size / 2;
    std::vector<float> s(static_cast<std::size_t>(size) * size);
    for (int j = 0; j < size; ++j) {
        for (int i = 0; i < size; ++i) {
            const Point2 q = center + (i - r) * axis_u + (j - r) * axis_v;
            s[static_cast<std::size_t>(j) * size + i] = sample_bilinear(gray, q.x, q.y, 0.f);
        }
    }
    return LatticePatch::from_samples(std::move(s), size);
}

bool geometric_detector(const LatticePatch& patch, double contrast) {
    return x_corner_margin(patch) >= contrast;
}

bool secondary_detector(const LatticePatch& patch, double contrast) {
    if (x_corner_margin(patch) < contrast / 2) {
        return false;
    }
    const int n = 48;
    const double c = patch.size / 2;
    auto on_ring = [&](const std::vector<float>& m, double radius, double k) {
        const double a = 2 * kPi * k / n;
        return patch_sample(m, patch.size, c + radius * std::cos(a), c + radius * std::sin(a));
    };
    std::vector<float> ring(n);
    for (int k = 0; k < n; ++k) {
        ring[k] = on_ring(patch.intensity, 0.7 * c, k);
    }
    const auto [lo, hi] = std::minmax_element(ring.begin(), ring.end());
    if (*hi - *lo < 0.25f) {
        return false;
    }
    const float mid = 0.5f * (*lo + *hi);
    std::vector<bool> bright(n);
    std::vector<bool> dark(n);
    for (int k = 0; k < n; ++k) {
        bright[k] = ring[k] > mid;
        dark[k] = !bright[k];
    }
    // Two lines crossing at the center: two bright and two dark sectors,
    // each facing its twin.
    const auto b = ring_runs(bright, 2);
    const auto d = ring_runs(dark, 2);
    if (b.size() != 2 || d.size() != 2) {
        return false;
    }
    const double tol = n / 10.0;
    auto opposite = [&](double u, double v) {
        const double gap = std::fmod(std::abs(u - v), static_cast<double>(n));
        return std::abs(gap - n / 2.0) < tol;
    };
    if (!opposite(b[0], b[1]) || !opposite(d[0], d[1])) {
        return false;
    }
    // Every sector boundary must be an edge all the way in towards the center.
    for (int k = 0; k < n; ++k) {
        if (bright[k] == bright[(k + 1) % n]) {
            continue;
        }
        int hits = 0;
        int total = 0;
        for (double r = 0.25 * c; r <= 0.8 * c; r += 0.5, ++total) {
            hits += on_ring(patch.edges, r, k + 0.5) >= 0.5f ? 1 : 0;
        }
        if (hits < 0.6 * total) {
            return false;
        }
    }
    return true;
}

bool is_lattice_point(const LatticePatch& patch, const DetectConfig& config) {
    if (geometric_detector(patch, config.contrast)) {
        return true;
    }
    return config.secondary ? config.secondary(patch) : secondary_detector(patch, config.contrast);
}

std::array<Point2, 4> order_corners(std::array<Point2, 4> c) {
    Point2 mid{0, 0};
    for (Point2 p : c) {
        mid = mid + 0.25 * p;
    }
    std::sort(c.begin(), c.end(), [&](Point2 a, Point2 b) {
        return std::atan2(a.y - mid.y, a.x - mid.x) < std::atan2(b.y - mid.y, b.x - mid.x);
    });
    const auto first = std::min_element(c.begin(), c.end(), [](Point2 a, Point2 b) { return a.x + a.y < b.x + b.y; });
    std::rotate(c.begin(), first, c.end());
    return c;
}

BoardLocation BoardLocation::from_corners(const std::array<Point2, 4>& corners) {
    for (int i = 0; i < 4; ++i) {
        const Point2 a = corners[i];
        const Point2 b = corners[(i + 1) % 4];
        const Point2 c = corners[(i + 2) % 4];
        if (!std::isfinite(a.x) || !std::isfinite(a.y) || cross(b - a, c - b) <= 0.0) {
            throw Error(ErrorKind::Geometry, "board corners are not a clockwise convex quadrilateral");
        }
    }
    BoardLocation loc;
    loc.corners = corners;
    loc.rectify = homography_from_quad(std::span<const Point2, 4>(corners), std::span<const Point2, 4>(kUnitSquare));
    return loc;
}

GridCandidate GridCandidate::from_location(const BoardLocation& location) {
    const Homography b2i = location.board_to_image();
    GridCandidate g;
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            g.points[i * 7 + j] = b2i.apply({(j + 1) / 8.0, (i + 1) / 8.0});
        }
    }
    return g;
}

std::vector<Segment2> detect_lines(const GrayF& gray, const LineDetectConfig& config) {
    std::vector<Segment2> out;
    for (const HoughLine& l : hough_lines(gray, config)) {
        if (auto s = clip_line(l, gray.width, gray.height)) {
            out.push_back(*s);
        }
    }
    return out;
}

std::vector<Segment2> detect_lines(const Image& image, const LineDetectConfig& config) {
    return detect_lines(to_gray_f(image), config);
}

std::array<bool, 49> validate_grid(const GrayF& gray, const GridCandidate& grid, const DetectConfig& config) {
    for (Point2 p : grid.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !inside(gray, p, 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "grid point outside the image");
        }
    }
    auto pt = [&](int i, int j) { return grid.points[i * 7 + j]; };
    std::array<bool, 49> out{};
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            const int j0 = std::max(j - 1, 0), j1 = std::min(j + 1, 6);
            const int i0 = std::max(i - 1, 0), i1 = std::min(i + 1, 6);
            const Point2 u = (1.0 / (j1 - j0)) * (pt(i, j1) - pt(i, j0));
            const Point2 v = (1.0 / (i1 - i0)) * (pt(i1, j) - pt(i0, j));
            out[i * 7 + j] = is_lattice_point(grid_patch(gray, pt(i, j), u, v, config.patch_size), config);
        }
    }
    return out;
}

bool check_board_location(const GrayF& gray, const GridCandidate& grid, int tolerance, const DetectConfig& config) {
    const auto hits = validate_grid(gray, grid, config);
    return std::count(hits.begin(), hits.end(), true) >= tolerance;
}

bool check_board_location(const Image& image, const GridCandidate& grid, int tolerance, const DetectConfig& config) {
    return check_board_location(to_gray_f(image), grid, tolerance, config);
}

BoardLocation locate_board(const Image& image, const DetectConfig& cfg) {
    if (cfg.max_iters < 1 || cfg.crop_size < 80 || cfg.working_size < 64) {
        throw Error(ErrorKind::InvalidArgument, "bad detection configuration");
    }
    const GrayF gray = to_gray_f(image);
    if (gray.width < 64 || gray.height < 64) {
        throw Error(ErrorKind::InvalidArgument, "image smaller than 64x64");
    }
    const double diag = std::hypot(gray.width, gray.height);
    LineDetectConfig lines_cfg;
    lines_cfg.max_lines = cfg.max_lines;

    std::optional<Homography> b2i;
    std::array<Point2, 4> corners{};
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
        GrayF frame;
        Homography f2i;
        if (iter == 0) {
            const double factor = std::max(1.0, std::max(gray.width, gray.height) / double(cfg.working_size));
            frame = factor > 1.0 ? downscale(gray, factor) : gray;
            f2i = Homography::translation(-0.5, -0.5)
                      .compose(Homography::scale(factor, factor))
                      .compose(Homography::translation(0.5, 0.5));
        } else {
            f2i = b2i->compose(board_to_crop(cfg.crop_size).inverse());
            frame = warp_gray(gray, f2i.inverse(), cfg.crop_size, cfg.crop_size);
        }
        const auto cands = lattice_candidates(frame, detect_lines(frame, lines_cfg), cfg);
        if (cands.size() < 4) {
            throw DetectionError(iter, std::to_string(cands.size()) + " validated lattice points");
        }
        auto model = fit_lattice(cands);
        if (!model || model->inliers.size() < 4) {
            throw DetectionError(iter, "no lattice fits the validated points");
        }
        Homography b2f = choose_window(frame, *model, cfg);
        if (iter > 0) {
            b2f = polish(frame, b2f, cfg);
        }
        const Homography next = f2i.compose(b2f);
        std::array<Point2, 4> next_corners;
        for (int k = 0; k < 4; ++k) {
            next_corners[k] = next.apply(kUnitSquare[k]);
        }
        double moved = 1e18;
        if (b2i) {
            moved = 0.0;
            for (int k = 0; k < 4; ++k) {
                moved = std::max(moved, distance(next_corners[k], corners[k]));
            }
        }
        b2i = next;
        corners = next_corners;
        if (moved < cfg.stop_fraction * diag) {
            break;
        }
    }
    iter = std::min(iter, cfg.max_iters - 1);

    BoardLocation loc;
    try {
        loc = BoardLocation::from_corners(order_corners(corners));
    } catch (const Error&) {
        throw DetectionError(iter, "fitted board is not convex");
    }
    const GridCandidate grid = GridCandidate::from_location(loc);
    int hits = 0;
    try {
        const auto v = validate_grid(gray, grid, cfg);
        hits = static_cast<int>(std::count(v.begin(), v.end(), true));
    } catch (const Error&) {
        throw DetectionError(iter, "fitted board leaves the image");
    }
    if (hits < cfg.min_final_hits) {
        throw DetectionError(iter, "only " + std::to_string(hits) + " of 49 lattice points confirmed");
    }
    return loc;
}

std::vector<Image> split_squares(const Image& image, const BoardLocation& location, int out_px, double top_extension) {
    if (out_px < 1) {
        throw Error(ErrorKind::InvalidArgument, "square size must be positive");
    }
    if (!(top_extension >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "top extension must be non-negative");
    }
    std::vector<Image> out;
    out.reserve(64);
    for (int sq = 0; sq < 64; ++sq) {
        const int row = sq / 8;
        const int col = sq % 8;
        const double ext = std::min(top_extension, static_cast<double>(row));
        // Board units to output pixels for this square's (extended) cell.
        const Homography b2o = Homography::translation(-0.5, -0.5)
                                   .compose(Homography::scale(8.0 * out_px, 8.0 * out_px / (1.0 + ext)))
                                   .compose(Homography::translation(-col / 8.0, -(row - ext) / 8.0));
        out.push_back(warp(image, b2o.compose(location.rectify), out_px, out_px));
    }
    return out;
}

} // namespace boardscan
