#include "boardscan/synth.hpp"

#include "boardscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace boardscan::synth {

namespace {

struct Knot {
    double t;
    double hw;
};

// Half-width profiles from the top of the piece (t = 0) down to its base (t = 1),
// in square widths. Heights are in square heights.
struct Profile {
    double height;
    std::vector<Knot> knots;
    double lean; // horizontal shift of the top relative to the base
};

const Profile& profile(PieceType type) {
    static const Profile kProfiles[6] = {
        {0.84, {{0, .04}, {.1, .04}, {.12, .11}, {.18, .11}, {.2, .05}, {.25, .15}, {.35, .16}, {.55, .09}, {.75, .12}, {.9, .22}, {1, .25}}, 0},
        {0.78, {{0, .18}, {.08, .2}, {.15, .14}, {.55, .08}, {.75, .12}, {.9, .22}, {1, .25}}, 0},
        {0.56, {{0, .19}, {.2, .19}, {.24, .14}, {.75, .15}, {.85, .21}, {1, .23}}, 0},
        {0.70, {{0, .03}, {.08, .05}, {.12, .09}, {.3, .13}, {.45, .1}, {.55, .06}, {.75, .1}, {.9, .19}, {1, .22}}, 0},
        {0.64, {{0, .08}, {.1, .16}, {.3, .2}, {.45, .17}, {.6, .12}, {.8, .16}, {.9, .21}, {1, .23}}, -0.06},
        {0.46, {{0, .05}, {.06, .12}, {.2, .15}, {.36, .12}, {.44, .07}, {.6, .08}, {.75, .13}, {.9, .2}, {1, .22}}, 0},
    };
    return kProfiles[static_cast<int>(type)];
}

constexpr double kFamilyWidth[3] = {1.0, 0.82, 1.15};
constexpr double kFamilyHeight[3] = {1.0, 1.06, 0.92};
constexpr double kPieceBase = 0.88;
constexpr double kOutline = 0.03;

double interp(const std::vector<Knot>& knots, double t) {
    if (t <= knots.front().t) {
        return knots.front().hw;
    }
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (t <= knots[i].t) {
            const double f = (t - knots[i - 1].t) / (knots[i].t - knots[i - 1].t);
            return knots[i - 1].hw + f * (knots[i].hw - knots[i - 1].hw);
        }
    }
    return knots.back().hw;
}

struct Vec3 {
    double r, g, b;
};

Vec3 vec(Rgb c) { return {double(c.r), double(c.g), double(c.b)}; }

constexpr Vec3 kWhiteFill{240, 236, 228};
constexpr Vec3 kWhiteLine{48, 44, 40};
constexpr Vec3 kBlackFill{34, 30, 28};
constexpr Vec3 kBlackLine{168, 160, 150};

// 0 outside, 1 outline, 2 interior.
int sprite_hit(PieceClass piece, const PieceStyle& style, double u, double v) {
    const Profile& p = profile(type_of(piece));
    const int fam = std::clamp(style.family, 0, 2);
    const double h = p.height * kFamilyHeight[fam] * style.height_scale;
    const double top = kPieceBase - h;
    if (v < top || v > kPieceBase) {
        return 0;
    }
    const double t = (v - top) / h;
    const double hw = interp(p.knots, t) * kFamilyWidth[fam];
    const double du = std::abs(u - 0.5 - p.lean * (1.0 - t));
    if (du > hw) {
        return 0;
    }
    const double inner = std::min({hw - du, v - top, kPieceBase - v});
    return inner < kOutline ? 1 : 2;
}

bool piece_color(PieceClass piece, const PieceStyle& style, double u, double v, Vec3& out) {
    const int hit = sprite_hit(piece, style, u, v);
    if (hit == 0) {
        return false;
    }
    const bool white = color_of(piece) == Color::White;
    if (hit == 1) {
        out = white ? kWhiteLine : kBlackLine;
    } else {
        // Soft left-to-right shading.
        const double s = 1.0 - 0.06 * (u - 0.3);
        const Vec3 f = white ? kWhiteFill : kBlackFill;
        out = {f.r * s, f.g * s, f.b * s};
    }
    return true;
}

struct Clutter {
    Point2 center;
    double hx, hy, angle;
    Vec3 color;
};

std::vector<Clutter> make_clutter(int count, int width, int height, Rng& rng) {
    std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height), size(8.0, 0.25 * std::min(width, height)),
        ang(0.0, std::numbers::pi), col(40.0, 220.0);
    std::vector<Clutter> out;
    for (int i = 0; i < count; ++i) {
        const double c = col(rng);
        out.push_back({{ux(rng), uy(rng)}, size(rng), size(rng) * 0.5, ang(rng), {c, c * 0.95, c * 0.9}});
    }
    return out;
}

Vec3 background_color(double x, double y, int width, int height, const std::vector<Clutter>& clutter) {
    for (auto it = clutter.rbegin(); it != clutter.rend(); ++it) {
        const double dx = x - it->center.x;
        const double dy = y - it->center.y;
        const double c = std::cos(it->angle);
        const double s = std::sin(it->angle);
        if (std::abs(c * dx + s * dy) <= it->hx && std::abs(-s * dx + c * dy) <= it->hy) {
            return it->color;
        }
    }
    const double g = 150.0 + 40.0 * (x / width) - 30.0 * (y / height);
    return {g, g * 0.97, g * 0.92};
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Adds noise, blurs and quantizes an RGB float buffer.
Image finish(std::vector<Vec3>& buf, int width, int height, int channels, double blur, double noise, Rng& rng) {
    if (blur > 0.0) {
        GrayF planes[3] = {GrayF(width, height), GrayF(width, height), GrayF(width, height)};
        for (std::size_t i = 0; i < buf.size(); ++i) {
            planes[0].data[i] = float(buf[i].r);
            planes[1].data[i] = float(buf[i].g);
            planes[2].data[i] = float(buf[i].b);
        }
        for (auto& p : planes) {
            p = gaussian_blur(p, blur);
        }
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] = {planes[0].data[i], planes[1].data[i], planes[2].data[i]};
        }
    }
    std::normal_distribution<double> n(0.0, noise > 0.0 ? noise : 1.0);
    Image img(width, height, channels);
    auto s = img.samples();
    for (std::size_t i = 0; i < buf.size(); ++i) {
        const double e = noise > 0.0 ? n(rng) : 0.0;
        const Vec3 v = buf[i];
        if (channels == 1) {
            s[i] = to_byte(0.299 * v.r + 0.587 * v.g + 0.114 * v.b + e);
        } else {
            s[3 * i] = to_byte(v.r + e);
            s[3 * i + 1] = to_byte(v.g + e);
            s[3 * i + 2] = to_byte(v.b + e);
        }
    }
    return img;
}

template <class Fn>
std::vector<Vec3> supersample(int width, int height, Fn&& color) {
    std::vector<Vec3> buf(static_cast<std::size_t>(width) * height);
    constexpr double off[2] = {-0.25, 0.25};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            Vec3 acc{0, 0, 0};
            for (double oy : off) {
                for (double ox : off) {
                    const Vec3 c = color(x + ox, y + oy);
                    acc.r += c.r;
                    acc.g += c.g;
                    acc.b += c.b;
                }
            }
            buf[static_cast<std::size_t>(y) * width + x] = {acc.r / 4, acc.g / 4, acc.b / 4};
        }
    }
    return buf;
}

} // namespace

BoardPosition random_legal_position(Rng& rng) {
    BoardPosition pos = empty_position();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<int> free_squares(kNumSquares);
    for (int i = 0; i < kNumSquares; ++i) {
        free_squares[i] = i;
    }
    auto take = [&](auto&& accept) {
        std::vector<int> candidates;
        for (int sq : free_squares) {
            if (accept(sq)) {
                candidates.push_back(sq);
            }
        }
        if (candidates.empty()) {
            return -1;
        }
        const int sq = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
        free_squares.erase(std::find(free_squares.begin(), free_squares.end(), sq));
        return sq;
    };
    auto any = [](int) { return true; };

    for (Color side : {Color::White, Color::Black}) {
        const double keep = std::uniform_real_distribution<double>(0.25, 1.0)(rng);
        auto kept = [&](int n) {
            int k = 0;
            for (int i = 0; i < n; ++i) {
                k += u01(rng) < keep ? 1 : 0;
            }
            return k;
        };
        int queens = kept(1);
        int pawns = kept(8);
        if (pawns > 0 && u01(rng) < 0.1) {
            const int promoted = std::min(pawns, 1 + int(u01(rng) * 2));
            pawns -= promoted;
            queens += promoted;
        }
        const int rooks = kept(2);
        const int bishops = kept(2);
        const int knights = kept(2);

        auto place = [&](PieceType type, int count, auto&& accept) {
            for (int i = 0; i < count; ++i) {
                const int sq = take(accept);
                if (sq >= 0) {
                    pos[sq] = make_piece(side, type);
                }
            }
        };
        place(PieceType::King, 1, any);
        place(PieceType::Pawn, pawns, [](int sq) { return square_row(sq) >= 1 && square_row(sq) <= 6; });
        if (bishops == 2) {
            place(PieceType::Bishop, 1, [](int sq) { return square_is_light(sq); });
            place(PieceType::Bishop, 1, [](int sq) { return !square_is_light(sq); });
        } else {
            place(PieceType::Bishop, bishops, any);
        }
        place(PieceType::Queen, queens, any);
        place(PieceType::Rook, rooks, any);
        place(PieceType::Knight, knights, any);
    }
    return pos;
}

BoardProbabilities one_hot(const BoardPosition& position) {
    BoardProbabilities probs{};
    for (int sq = 0; sq < kNumSquares; ++sq) {
        probs[sq].fill(0.0);
        probs[sq][ordinal(position[sq])] = 1.0;
    }
    return probs;
}

BoardProbabilities dirichlet_noised(const BoardPosition& position, double concentration, Rng& rng, double base) {
    if (!(concentration > 0.0) || !(base > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "concentration must be positive");
    }
    std::gamma_distribution<double> hit(concentration, 1.0);
    std::gamma_distribution<double> miss(base, 1.0);
    BoardProbabilities probs{};
    for (int sq = 0; sq < kNumSquares; ++sq) {
        double sum = 0.0;
        for (int c = 0; c < kNumClasses; ++c) {
            probs[sq][c] = c == ordinal(position[sq]) ? hit(rng) : miss(rng);
            sum += probs[sq][c];
        }
        for (double& v : probs[sq]) {
            v /= sum;
        }
    }
    return probs;
}

BoardProbabilities random_probabilities(Rng& rng) {
    std::gamma_distribution<double> g(1.0, 1.0);
    BoardProbabilities probs{};
    for (auto& sq : probs) {
        double sum = 0.0;
        for (double& v : sq) {
            v = g(rng);
            sum += v;
        }
        for (double& v : sq) {
            v /= sum;
        }
    }
    return probs;
}

BoardStyle random_board_style(Rng& rng) {
    static const BoardStyle kStyles[] = {
        {{222, 206, 170}, {120, 86, 58}, {74, 52, 36}, 0.45},
        {{212, 214, 190}, {96, 130, 84}, {60, 62, 58}, 0.35},
        {{208, 208, 204}, {110, 112, 118}, {40, 40, 44}, 0.5},
        {{214, 218, 222}, {88, 112, 150}, {150, 120, 90}, 0.3},
        {{226, 200, 160}, {140, 92, 60}, {200, 190, 170}, 0.4},
    };
    BoardStyle s = kStyles[std::uniform_int_distribution<int>(0, 4)(rng)];
    s.frame_width *= std::uniform_real_distribution<double>(0.8, 1.3)(rng);
    return s;
}

RenderedBoard render_board(const BoardPosition& position, const RenderOptions& o) {
    if (o.width < 16 || o.height < 16 || (o.channels != 1 && o.channels != 3)) {
        throw Error(ErrorKind::InvalidArgument, "bad render size");
    }
    Rng rng(o.seed);

    // Project the playing-area corners through a pinhole camera tilted about the
    // board's horizontal axis, then roll and fit the frame into the image.
    const double tilt = o.tilt_deg * std::numbers::pi / 180.0;
    const double roll = o.roll_deg * std::numbers::pi / 180.0;
    auto project = [&](Point2 b) {
        const double X = b.x - 0.5;
        const double Y = b.y - 0.5;
        const double yc = Y * std::cos(tilt);
        const double zc = o.camera_distance - Y * std::sin(tilt);
        const Point2 q{X / zc, yc / zc};
        return Point2{std::cos(roll) * q.x - std::sin(roll) * q.y, std::sin(roll) * q.x + std::cos(roll) * q.y};
    };
    const double f = o.board.frame_width / 8.0;
    const std::array<Point2, 4> unit = {Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0, 1}};
    const std::array<Point2, 4> outer = {Point2{-f, -f}, Point2{1 + f, -f}, Point2{1 + f, 1 + f}, Point2{-f, 1 + f}};
    double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
    for (Point2 p : outer) {
        const Point2 q = project(p);
        x0 = std::min(x0, q.x);
        x1 = std::max(x1, q.x);
        y0 = std::min(y0, q.y);
        y1 = std::max(y1, q.y);
    }
    const double scale = o.fill * std::min(o.width / (x1 - x0), o.height / (y1 - y0));
    const Point2 mid{(x0 + x1) / 2, (y0 + y1) / 2};
    const Point2 centre{(o.width - 1) / 2.0 + o.offset.x, (o.height - 1) / 2.0 + o.offset.y};
    std::array<Point2, 4> corners;
    for (int i = 0; i < 4; ++i) {
        corners[i] = centre + scale * (project(unit[i]) - mid);
    }

    RenderedBoard out;
    out.corners = corners;
    out.board_to_image = homography_from_quad(std::span<const Point2, 4>(unit), std::span<const Point2, 4>(corners));
    const Homography to_board = out.board_to_image.inverse();

    const auto clutter = make_clutter(o.clutter, o.width, o.height, rng);
    const Vec3 light = vec(o.board.light);
    const Vec3 dark = vec(o.board.dark);
    const Vec3 frame = vec(o.board.frame);

    auto in_hand = [&](double x, double y) {
        if (!o.hand) {
            return false;
        }
        const auto& h = *o.hand;
        const double dx = (x - h[0]) / h[2];
        const double dy = (y - h[1]) / h[3];
        return dx * dx + dy * dy <= 1.0;
    };
    // Piece or occluder color at a board point, if any covers it.
    auto cover = [&](Point2 b, Vec3& c) {
        for (auto it = o.occluders.rbegin(); it != o.occluders.rend(); ++it) {
            if (distance(b, it->center) <= it->radius) {
                c = vec(it->color);
                return true;
            }
        }
        const int col = static_cast<int>(std::floor(8 * b.x));
        const int row = static_cast<int>(std::floor(8 * b.y));
        if (col < 0 || col > 7) {
            return false;
        }
        // The piece on the square below is nearer the camera, so it wins.
        for (int r : {row + 1, row}) {
            if (r < 0 || r > 7) {
                continue;
            }
            const PieceClass p = position[r * 8 + col];
            if (!is_empty(p) && piece_color(p, o.pieces, 8 * b.x - col, 8 * b.y - r, c)) {
                return true;
            }
        }
        return false;
    };

    auto color = [&](double x, double y) -> Vec3 {
        if (in_hand(x, y)) {
            return {205, 160, 130};
        }
        const Point2 b = to_board.apply({x, y});
        Vec3 c;
        if (cover(b, c)) {
            return c;
        }
        if (b.x >= 0 && b.x < 1 && b.y >= 0 && b.y < 1) {
            const int sq = static_cast<int>(8 * b.y) * 8 + static_cast<int>(8 * b.x);
            return square_is_light(sq) ? light : dark;
        }
        if (b.x >= -f && b.x <= 1 + f && b.y >= -f && b.y <= 1 + f) {
            return frame;
        }
        return background_color(x, y, o.width, o.height, clutter);
    };

    auto buf = supersample(o.width, o.height, color);
    out.image = finish(buf, o.width, o.height, o.channels, o.blur_sigma, o.noise_sigma, rng);

    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            const Point2 b{(j + 1) / 8.0, (i + 1) / 8.0};
            const Point2 p = out.board_to_image.apply(b);
            out.lattice[i * 7 + j] = p;
            bool visible = true;
            for (int k = 0; k <= 16 && visible; ++k) {
                const double r = k == 16 ? 0.0 : 0.15 / 8.0;
                const double a = 2 * std::numbers::pi * k / 16;
                const Point2 q = b + Point2{r * std::cos(a), r * std::sin(a)};
                const Point2 qi = out.board_to_image.apply(q);
                Vec3 unused;
                visible = !cover(q, unused) && !in_hand(qi.x, qi.y);
            }
            out.lattice_visible[i * 7 + j] = visible;
        }
    }
    return out;
}

RenderOptions random_render_options(Rng& rng, double max_tilt_deg) {
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    RenderOptions o;
    o.tilt_deg = uni(0.0, max_tilt_deg);
    o.roll_deg = uni(-8.0, 8.0);
    o.camera_distance = uni(1.6, 2.6);
    o.fill = uni(0.6, 0.85);
    const double slack = (1.0 - o.fill) * 0.45;
    o.offset = {uni(-slack, slack) * o.width, uni(-slack, slack) * o.height};
    o.blur_sigma = uni(0.4, 1.0);
    o.noise_sigma = uni(1.0, 4.0);
    o.clutter = std::uniform_int_distribution<int>(0, 6)(rng);
    o.board = random_board_style(rng);
    o.pieces.family = std::uniform_int_distribution<int>(0, 2)(rng);
    o.pieces.height_scale = uni(0.0, 1.0) < 0.3 ? uni(1.2, 1.5) : 1.0;
    o.seed = rng();
    return o;
}

Image render_square(PieceClass piece, bool light_square, const PieceStyle& style, int size, const BoardStyle& board,
                    double noise_sigma, std::uint64_t seed) {
    if (size < 1) {
        throw Error(ErrorKind::InvalidArgument, "square size must be positive");
    }
    Rng rng(seed);
    const Vec3 bg = vec(light_square ? board.light : board.dark);
    auto color = [&](double x, double y) -> Vec3 {
        const double u = (x + 0.5) / size;
        const double v = (y + 0.5) / size;
        Vec3 c;
        if (!is_empty(piece) && piece_color(piece, style, u, v, c)) {
            return c;
        }
        return bg;
    };
    auto buf = supersample(size, size, color);
    return finish(buf, size, size, 3, 0.0, noise_sigma, rng);
}

Image render_background(int width, int height, int clutter, std::uint64_t seed) {
    Rng rng(seed);
    const auto items = make_clutter(clutter, width, height, rng);
    auto buf = supersample(width, height, [&](double x, double y) { return background_color(x, y, width, height, items); });
    return finish(buf, width, height, 3, 0.8, 2.0, rng);
}

} // namespace boardscan::synth
