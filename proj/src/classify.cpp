#include "boardscan/classify.hpp"

#include "boardscan/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace boardscan {

namespace {

// Intensity step separating a piece from its square.
constexpr float kForeground = 22.f;
// Sobel magnitude counted as an edge (roughly a 15-level step).
constexpr float kEdge = 60.f;
// Edge density below which a square reads as empty.
constexpr double kOccupied = 0.04;

struct Template {
    PieceType type;
    double height;
    std::array<double, 3> profile;
};

// Features of each piece type in three silhouette families.
constexpr Template kTemplates[] = {
    {PieceType::King, 0.849, {0.388, 0.480, 0.716}},
    {PieceType::King, 0.886, {0.403, 0.479, 0.723}},
    {PieceType::King, 0.781, {0.390, 0.487, 0.722}},
    {PieceType::Queen, 0.790, {0.616, 0.389, 0.713}},
    {PieceType::Queen, 0.835, {0.615, 0.394, 0.717}},
    {PieceType::Queen, 0.727, {0.624, 0.393, 0.721}},
    {PieceType::Rook, 0.571, {0.760, 0.639, 0.836}},
    {PieceType::Rook, 0.605, {0.771, 0.655, 0.847}},
    {PieceType::Rook, 0.525, {0.767, 0.641, 0.838}},
    {PieceType::Bishop, 0.710, {0.413, 0.415, 0.698}},
    {PieceType::Bishop, 0.750, {0.430, 0.418, 0.713}},
    {PieceType::Bishop, 0.654, {0.418, 0.416, 0.708}},
    {PieceType::Knight, 0.650, {0.709, 0.682, 0.797}},
    {PieceType::Knight, 0.685, {0.727, 0.686, 0.808}},
    {PieceType::Knight, 0.599, {0.714, 0.681, 0.801}},
    {PieceType::Pawn, 0.466, {0.593, 0.410, 0.784}},
    {PieceType::Pawn, 0.497, {0.597, 0.416, 0.788}},
    {PieceType::Pawn, 0.431, {0.590, 0.413, 0.779}},
};

constexpr double kHeightSigma = 0.05;
constexpr double kProfileSigma = 0.08;

double median(std::vector<float> v) {
    if (v.empty()) {
        return 0.0;
    }
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::array<double, kNumClasses> out{};
    double sum = 0.0;
    for (int i = 0; i < kNumClasses; ++i) {
        out[i] = std::exp(logits[i] - top);
        sum += out[i];
    }
    for (double& v : out) {
        v /= sum;
    }
    return out;
}

} // namespace

SquareFeatures baseline_features(const Image& square) {
    if (square.width() < 16 || square.height() < 16) {
        throw Error(ErrorKind::InvalidArgument, "square image must be at least 16x16");
    }
    const int w = square.width();
    const int h = square.height();
    SquareFeatures f;

    // Integer luminance, relative to the background median.
    std::vector<int> lum(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            lum[static_cast<std::size_t>(y) * w + x] =
                square.channels() == 3
                    ? 299 * square.at(x, y, 0) + 587 * square.at(x, y, 1) + 114 * square.at(x, y, 2)
                    : 1000 * square.at(x, y, 0);
        }
    }
    std::vector<int> border;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (x < w / 10 || x >= w - w / 10) {
                border.push_back(lum[static_cast<std::size_t>(y) * w + x]);
            }
        }
    }
    const auto mid = border.begin() + static_cast<std::ptrdiff_t>(border.size() / 2);
    std::nth_element(border.begin(), mid, border.end());
    const int bg_lum = *mid;
    GrayF g(w, h);
    for (std::size_t i = 0; i < lum.size(); ++i) {
        g.data[i] = static_cast<float>(lum[i] - bg_lum) / 1000.f;
    }
    const double bg = 0.0;

    const Gradient grad = sobel(gaussian_blur(g, 0.8));
    int edges = 0;
    int area = 0;
    for (int y = h / 10; y < h - h / 10; ++y) {
        for (int x = w / 5; x < w - w / 5; ++x) {
            ++area;
            edges += grad.magnitude(x, y) > kEdge ? 1 : 0;
        }
    }
    f.edge_density = static_cast<double>(edges) / area;

    // Silhouette extent per row, between the outermost foreground pixels.
    const int x0 = w / 10;
    const int x1 = w - w / 10;
    std::vector<int> left(h, -1);
    std::vector<int> right(h, -1);
    for (int y = 0; y < h; ++y) {
        int count = 0;
        for (int x = x0; x < x1; ++x) {
            if (std::abs(g(x, y) - bg) > kForeground) {
                if (left[y] < 0) {
                    left[y] = x;
                }
                right[y] = x;
                ++count;
            }
        }
        // Neighbouring squares bleed into the crop edges and fill whole rows.
        if (y < h / 25 || y >= h - h / 20 || count > 0.9 * (x1 - x0)) {
            left[y] = right[y] = -1;
        }
    }
    int bottom = -1;
    for (int y = h - 1; y >= h / 2 && bottom < 0; --y) {
        if (left[y] >= 0) {
            bottom = y;
        }
    }
    if (bottom < 0) {
        return f;
    }
    // Grow upwards while rows stay occupied, bridging short gaps.
    const int max_gap = std::max(1, h / 50);
    int top = bottom;
    int gap = 0;
    for (int y = bottom - 1; y >= 0; --y) {
        if (left[y] >= 0) {
            top = y;
            gap = 0;
        } else if (++gap > max_gap) {
            break;
        }
    }
    f.height = static_cast<double>(bottom - top + 1) / h;

    std::vector<double> width(bottom - top + 1, 0.0);
    double widest = 0.0;
    for (int y = top; y <= bottom; ++y) {
        if (left[y] >= 0) {
            width[y - top] = right[y] - left[y] + 1;
            widest = std::max(widest, width[y - top]);
        }
    }
    const int n = static_cast<int>(width.size());
    for (int b = 0; b < 3; ++b) {
        const int lo = b * n / 3;
        const int hi = std::max(lo + 1, (b + 1) * n / 3);
        double sum = 0.0;
        for (int i = lo; i < hi && i < n; ++i) {
            sum += width[i];
        }
        f.profile[b] = widest > 0 ? sum / (hi - lo) / widest : 0.0;
    }

    // Piece intensity from the inside of the silhouette, clear of its outline.
    const int inset = std::max(1, w / 25);
    std::vector<float> inner;
    for (int y = top + inset; y <= bottom - inset; ++y) {
        if (left[y] >= 0) {
            const int margin = std::max(inset, (right[y] - left[y]) * 3 / 10);
            for (int x = left[y] + margin; x <= right[y] - margin; ++x) {
                inner.push_back(g(x, y));
            }
        }
    }
    if (inner.empty()) {
        for (int y = top; y <= bottom; ++y) {
            for (int x = std::max(left[y], 0); left[y] >= 0 && x <= right[y]; ++x) {
                inner.push_back(g(x, y));
            }
        }
    }
    f.color_contrast = median(inner) - bg;
    return f;
}

SquareProbabilities baseline_classifier(const Image& square) {
    const SquareFeatures f = baseline_features(square);
    std::array<double, kNumClasses> logits{};
    logits[ordinal(PieceClass::Empty)] = std::clamp(8.0 * (kOccupied - f.edge_density) / kOccupied, -8.0, 8.0);
    if (f.height > 0.0) {
        std::array<double, 6> type_score;
        type_score.fill(-1e9);
        for (const Template& t : kTemplates) {
            double d2 = std::pow((f.height - t.height) / kHeightSigma, 2);
            for (int b = 0; b < 3; ++b) {
                d2 += std::pow((f.profile[b] - t.profile[b]) / kProfileSigma, 2);
            }
            auto& s = type_score[static_cast<int>(t.type)];
            s = std::max(s, -0.5 * d2);
        }
        const double color = std::clamp(f.color_contrast / 30.0, -3.0, 3.0);
        for (int c = 0; c < 12; ++c) {
            const PieceClass p = piece_class(c);
            const double side = color_of(p) == Color::White ? color : -color;
            logits[c] = std::max(type_score[static_cast<int>(type_of(p))], -30.0) + side;
        }
    }
    return softmax(logits);
}

FileBackend::FileBackend(const std::filesystem::path& path) : probs_(load_probability_file(path)) {}

std::vector<SquareProbabilities> FileBackend::classify_batch(std::span<const Image> squares) {
    if (squares.size() != static_cast<std::size_t>(kNumSquares)) {
        throw Error(ErrorKind::InvalidArgument, "expected 64 squares");
    }
    return {probs_.begin(), probs_.end()};
}

std::vector<SquareProbabilities> BaselineBackend::classify_batch(std::span<const Image> squares) {
    std::vector<SquareProbabilities> out;
    out.reserve(squares.size());
    for (const Image& sq : squares) {
        out.push_back(baseline_classifier(sq));
    }
    return out;
}

BoardProbabilities classify_squares(ClassifierBackend& backend, std::span<const Image> squares) {
    if (squares.size() != static_cast<std::size_t>(kNumSquares)) {
        throw Error(ErrorKind::InvalidArgument, "expected 64 squares, got " + std::to_string(squares.size()));
    }
    for (const Image& sq : squares) {
        if (sq.width() != squares[0].width() || sq.height() != squares[0].height()) {
            throw Error(ErrorKind::InvalidArgument, "square images differ in size");
        }
    }
    std::vector<SquareProbabilities> raw;
    try {
        raw = backend.classify_batch(squares);
    } catch (const std::exception& e) {
        throw ClassificationError(-1, std::string("backend '") + backend.name() + "' failed: " + e.what());
    }
    if (raw.size() != static_cast<std::size_t>(kNumSquares)) {
        throw ClassificationError(-1, "backend returned " + std::to_string(raw.size()) + " vectors");
    }
    BoardProbabilities out;
    for (int sq = 0; sq < kNumSquares; ++sq) {
        SquareProbabilities p = raw[sq];
        if (!normalize_probabilities(p)) {
            double sum = 0.0;
            for (double v : p) {
                sum += v;
            }
            std::ostringstream msg;
            msg << "vector is not normalizable (sum " << sum << ")";
            throw ClassificationError(sq, msg.str());
        }
        out[sq] = p;
    }
    return out;
}

BoardProbabilities parse_probabilities(std::string_view text) {
    BoardProbabilities out{};
    int rows = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        if (rows == kNumSquares) {
            throw ParseError(line_no, "more than 64 rows");
        }
        SquareProbabilities row{};
        int count = 0;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
                ++i;
            }
            if (i == line.size()) {
                break;
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + line.size(), v);
            if (ec != std::errc() || (ptr != line.data() + line.size() && *ptr != ' ' && *ptr != '\t')) {
                throw ParseError(line_no, "row " + std::to_string(rows) + ": malformed number");
            }
            if (count < kNumClasses) {
                row[count] = v;
            }
            ++count;
            i = static_cast<std::size_t>(ptr - line.data());
        }
        if (count != kNumClasses) {
            throw ParseError(line_no, "row " + std::to_string(rows) + ": expected 13 values, found " + std::to_string(count));
        }
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw ParseError(line_no, "row " + std::to_string(rows) + ": non-finite value");
            }
        }
        if (!normalize_probabilities(row)) {
            throw ParseError(line_no, "row " + std::to_string(rows) + ": values are not a probability vector");
        }
        out[rows++] = row;
        if (end == text.size()) {
            break;
        }
    }
    if (rows != kNumSquares) {
        throw ParseError(line_no, "expected 64 rows, found " + std::to_string(rows) + " rows");
    }
    return out;
}

BoardProbabilities load_probability_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_probabilities(ss.str());
}

std::string format_probabilities(const BoardProbabilities& probs) {
    std::string out;
    char buf[32];
    for (const auto& row : probs) {
        for (int c = 0; c < kNumClasses; ++c) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, row[c]);
            if (c > 0) {
                out += ' ';
            }
            out.append(buf, ptr);
        }
        out += '\n';
    }
    return out;
}

void save_probability_file(const BoardProbabilities& probs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out << format_probabilities(probs);
}

} // namespace boardscan
