#include "boardscan/pipeline.hpp"

#include "boardscan/fen.hpp"
#include "boardscan/geometry.hpp"
#include "boardscan/infer.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace boardscan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw Error(ErrorKind::InvalidArgument, "bad value for " + std::string(key) + ": '" + std::string(text) + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) {
            throw Error(ErrorKind::InvalidArgument, "non-finite value for " + std::string(key));
        }
    }
    return value;
}

template <class T>
void require_range(const char* key, T value, T lo, T hi) {
    if (!(value >= lo && value <= hi)) {
        std::ostringstream os;
        os << key << " = " << value << " is outside [" << lo << ", " << hi << "]";
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
}

constexpr std::pair<const char*, Orientation> kOrientations[] = {
    {"white-bottom", Orientation::WhiteBottom},
    {"white-top", Orientation::WhiteTop},
    {"white-left", Orientation::WhiteLeft},
    {"white-right", Orientation::WhiteRight},
};

// Runs one stage, tagging library errors with it.
template <class F>
auto in_stage(Stage stage, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e.kind(), e.what());
    } catch (const std::exception& e) {
        throw StageError(stage, stage == Stage::ProbabilityVectors ? ErrorKind::Classification : ErrorKind::Io,
                         e.what());
    }
}

ConfidenceSummary summarize(const BoardProbabilities& probs) {
    ConfidenceSummary s;
    s.min = 2.0;
    double sum = 0.0;
    for (int sq = 0; sq < kNumSquares; ++sq) {
        const double top = *std::max_element(probs[sq].begin(), probs[sq].end());
        sum += top;
        if (top < s.min) {
            s.min = top;
            s.weakest_square = sq;
        }
        if (top < 0.5) {
            ++s.uncertain;
        }
    }
    s.mean = sum / kNumSquares;
    return s;
}

DigitizationResult run(const std::function<Image()>& load, const PipelineConfig& config,
                       const std::optional<BoardLocation>& cached, ClassifierBackend* backend) {
    std::unique_ptr<ClassifierBackend> owned;
    if (backend == nullptr) {
        owned = make_backend(config);
        backend = owned.get();
    }
    const auto start = Clock::now();
    DigitizationResult out;

    auto t = Clock::now();
    const Image image = in_stage(Stage::Load, load);
    const double load_s = seconds_since(t);

    std::optional<BoardLocation> location;
    if (cached) {
        t = Clock::now();
        const bool ok = in_stage(Stage::BoardCheck, [&] {
            const GridCandidate grid = GridCandidate::from_location(*cached);
            for (const Point2& p : grid.points) {
                if (p.x < 0 || p.y < 0 || p.x > image.width() - 1 || p.y > image.height() - 1) {
                    return false;
                }
            }
            return check_board_location(image, grid, config.check_tolerance, config.detect);
        });
        out.timings.board_check_s = load_s + seconds_since(t);
        if (ok) {
            location = cached;
            out.mode = DetectionMode::Cached;
        }
    }
    if (!location) {
        t = Clock::now();
        location = in_stage(Stage::BoardDetection, [&] { return locate_board(image, config.detect); });
        out.timings.board_detection_s = seconds_since(t) + (cached ? 0.0 : load_s);
        out.mode = DetectionMode::Fresh;
    }
    out.location = *location;

    t = Clock::now();
    const std::vector<Image> squares = in_stage(Stage::SplitSquares, [&] {
        return split_squares(image, *location, config.square_px, config.top_extension);
    });
    out.timings.split_squares_s = seconds_since(t);

    t = Clock::now();
    const BoardProbabilities probs = in_stage(Stage::ProbabilityVectors, [&] {
        return orient(classify_squares(*backend, squares), config.orientation);
    });
    out.timings.probability_vectors_s = seconds_since(t);

    t = Clock::now();
    in_stage(Stage::InferPlusFen, [&] {
        out.position =
            config.inference == InferenceMode::Constrained ? infer_position(probs) : argmax_position(probs);
        if (config.strict_fen) {
            const auto problems = constraint_violations(out.position);
            if (!problems.empty()) {
                throw ClassificationError(-1, "position breaks census rules: " + problems.front());
            }
        }
        out.fen = encode_fen(out.position);
        return 0;
    });
    out.timings.infer_plus_fen_s = seconds_since(t);

    out.confidence = summarize(probs);
    out.timings.total_s = seconds_since(start);
    return out;
}

} // namespace

const std::vector<std::string>& PipelineConfig::keys() {
    static const std::vector<std::string> k = {
        "backend",     "probabilities", "orientation",     "inference",     "max_iters",
        "patch_size",  "contrast",      "check_tolerance", "intersection_threshold",
        "max_lines",   "crop_size",     "working_size",    "min_final_hits", "square_px",
        "top_extension", "period",      "fen_mode",
    };
    return k;
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "backend") {
        if (value != "baseline" && value != "file") {
            throw Error(ErrorKind::InvalidArgument, "backend must be 'baseline' or 'file'");
        }
        backend = value;
    } else if (key == "probabilities") {
        probabilities = std::string(value);
    } else if (key == "orientation") {
        const auto it = std::find_if(std::begin(kOrientations), std::end(kOrientations),
                                     [&](const auto& o) { return value == o.first; });
        if (it == std::end(kOrientations)) {
            throw Error(ErrorKind::InvalidArgument,
                        "orientation must be white-bottom, white-top, white-left or white-right");
        }
        orientation = it->second;
    } else if (key == "inference") {
        if (value == "constrained") {
            inference = InferenceMode::Constrained;
        } else if (value == "argmax") {
            inference = InferenceMode::Argmax;
        } else {
            throw Error(ErrorKind::InvalidArgument, "inference must be 'constrained' or 'argmax'");
        }
    } else if (key == "max_iters") {
        detect.max_iters = parse_number<int>(key, value);
    } else if (key == "patch_size") {
        detect.patch_size = parse_number<int>(key, value);
    } else if (key == "contrast") {
        detect.contrast = parse_number<double>(key, value);
    } else if (key == "check_tolerance") {
        check_tolerance = parse_number<int>(key, value);
    } else if (key == "intersection_threshold") {
        detect.intersection_threshold = parse_number<std::size_t>(key, value);
    } else if (key == "max_lines") {
        detect.max_lines = parse_number<int>(key, value);
    } else if (key == "crop_size") {
        detect.crop_size = parse_number<int>(key, value);
    } else if (key == "working_size") {
        detect.working_size = parse_number<int>(key, value);
    } else if (key == "min_final_hits") {
        detect.min_final_hits = parse_number<int>(key, value);
    } else if (key == "square_px") {
        square_px = parse_number<int>(key, value);
    } else if (key == "top_extension") {
        top_extension = parse_number<double>(key, value);
    } else if (key == "period") {
        period_s = parse_number<double>(key, value);
    } else if (key == "fen_mode") {
        if (value == "strict") {
            strict_fen = true;
        } else if (value == "lenient") {
            strict_fen = false;
        } else {
            throw Error(ErrorKind::InvalidArgument, "fen_mode must be 'strict' or 'lenient'");
        }
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown configuration key '" + std::string(key) + "'");
    }
    validate();
}

void PipelineConfig::validate() const {
    require_range("max_iters", detect.max_iters, 1, 20);
    require_range("patch_size", detect.patch_size, 7, 63);
    if (detect.patch_size % 2 == 0) {
        throw Error(ErrorKind::InvalidArgument, "patch_size must be odd");
    }
    require_range("contrast", detect.contrast, 0.01, 1.0);
    require_range("check_tolerance", check_tolerance, 0, 49);
    require_range<std::size_t>("intersection_threshold", detect.intersection_threshold, 0, 1'000'000);
    require_range("max_lines", detect.max_lines, 8, 1024);
    require_range("crop_size", detect.crop_size, 100, 4000);
    require_range("working_size", detect.working_size, 200, 8000);
    require_range("min_final_hits", detect.min_final_hits, 4, 49);
    require_range("square_px", square_px, 16, 1024);
    require_range("top_extension", top_extension, 0.0, 1.0);
    require_range("period", period_s, 0.01, 86400.0);
}

PipelineConfig PipelineConfig::parse(std::string_view text) {
    PipelineConfig config;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(line_no, "expected 'key = value'");
        }
        const std::string_view key = trim(line.substr(0, eq));
        try {
            config.set(key, line.substr(eq + 1));
        } catch (const Error& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::unique_ptr<ClassifierBackend> make_backend(const PipelineConfig& config) {
    if (config.backend == "file") {
        if (config.probabilities.empty()) {
            throw Error(ErrorKind::InvalidArgument, "file backend needs a probabilities path");
        }
        return std::make_unique<FileBackend>(config.probabilities);
    }
    return std::make_unique<BaselineBackend>();
}

int oriented_index(int image_square, Orientation orientation) {
    const int r = square_row(image_square);
    const int c = square_col(image_square);
    switch (orientation) {
    case Orientation::WhiteBottom: return image_square;
    case Orientation::WhiteTop: return (7 - r) * 8 + (7 - c);
    case Orientation::WhiteLeft: return (7 - c) * 8 + r;
    case Orientation::WhiteRight: return c * 8 + (7 - r);
    }
    return image_square;
}

BoardProbabilities orient(const BoardProbabilities& probs, Orientation orientation) {
    BoardProbabilities out{};
    for (int sq = 0; sq < kNumSquares; ++sq) {
        out[oriented_index(sq, orientation)] = probs[sq];
    }
    return out;
}

double StageTimings::stage_sum() const {
    return board_detection_s.value_or(0.0) + board_check_s.value_or(0.0) + split_squares_s +
           probability_vectors_s + infer_plus_fen_s;
}

std::string StageTimings::format() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    if (board_detection_s) {
        os << "board_detection_s=" << *board_detection_s << ' ';
    }
    if (board_check_s) {
        os << "board_check_s=" << *board_check_s << ' ';
    }
    os << "split_squares_s=" << split_squares_s << " probability_vectors_s=" << probability_vectors_s
       << " infer_plus_fen_s=" << infer_plus_fen_s << " total_s=" << total_s;
    return os.str();
}

const char* to_string(DetectionMode mode) {
    return mode == DetectionMode::Cached ? "cached" : "fresh";
}

const char* to_string(Stage stage) {
    switch (stage) {
    case Stage::Load: return "load";
    case Stage::BoardCheck: return "board check";
    case Stage::BoardDetection: return "board detection";
    case Stage::SplitSquares: return "split squares";
    case Stage::ProbabilityVectors: return "probability vectors";
    case Stage::InferPlusFen: return "infer + FEN";
    }
    return "unknown";
}

std::string DigitizationResult::record() const {
    return fen + "\tmode=" + to_string(mode) + ' ' + timings.format();
}

std::string DigitizationResult::to_json() const {
    nlohmann::json j;
    j["fen"] = fen;
    j["mode"] = to_string(mode);
    j["corners"] = nlohmann::json::array();
    for (const Point2& p : location.corners) {
        j["corners"].push_back({p.x, p.y});
    }
    auto& t = j["timings"];
    if (timings.board_detection_s) {
        t["board_detection_s"] = *timings.board_detection_s;
    }
    if (timings.board_check_s) {
        t["board_check_s"] = *timings.board_check_s;
    }
    t["split_squares_s"] = timings.split_squares_s;
    t["probability_vectors_s"] = timings.probability_vectors_s;
    t["infer_plus_fen_s"] = timings.infer_plus_fen_s;
    t["total_s"] = timings.total_s;
    j["confidence"] = {{"min", confidence.min},
                       {"mean", confidence.mean},
                       {"weakest_square", square_name(confidence.weakest_square)},
                       {"uncertain", confidence.uncertain}};
    return j.dump(2);
}

DigitizationResult digitize(const Image& image, const PipelineConfig& config, const std::optional<BoardLocation>& cached,
                            ClassifierBackend* backend) {
    return run([&] { return image; }, config, cached, backend);
}

DigitizationResult digitize(const std::filesystem::path& image_path, const PipelineConfig& config,
                            const std::optional<BoardLocation>& cached, ClassifierBackend* backend) {
    return run([&] { return load_image(image_path); }, config, cached, backend);
}

std::string format_location(const BoardLocation& location) {
    std::string out;
    for (const Point2& p : location.corners) {
        out += (out.empty() ? "" : " ") + shortest(p.x) + ' ' + shortest(p.y);
    }
    return out;
}

BoardLocation parse_location(std::string_view text) {
    std::array<double, 8> v{};
    std::size_t count = 0;
    std::size_t pos = 0;
    text = trim(text);
    while (pos < text.size()) {
        const auto end = std::min(text.find_first_of(" \t", pos), text.size());
        if (end > pos) {
            if (count == v.size()) {
                throw ParseError(pos, "location has more than 8 numbers");
            }
            v[count++] = parse_number<double>("location", text.substr(pos, end - pos));
        }
        pos = end + 1;
    }
    if (count != v.size() || text.find('\n') != std::string_view::npos) {
        throw ParseError(0, "location must be 8 numbers on one line, found " + std::to_string(count));
    }
    return BoardLocation::from_corners({Point2{v[0], v[1]}, Point2{v[2], v[3]}, Point2{v[4], v[5]}, Point2{v[6], v[7]}});
}

std::optional<BoardLocation> load_location(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        return std::nullopt;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_location(ss.str());
}

void save_location(const BoardLocation& location, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!(out << format_location(location) << '\n')) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
}

std::array<Point2, 4> read_corner_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::array<Point2, 4> corners{};
    std::string line;
    std::size_t line_no = 0;
    int count = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        if (count == 4) {
            throw ParseError(line_no, "more than 4 corner lines");
        }
        std::istringstream ls(line);
        std::string extra;
        if (!(ls >> corners[count].x >> corners[count].y) || (ls >> extra)) {
            throw ParseError(line_no, "expected 'x y'");
        }
        ++count;
    }
    if (count != 4) {
        throw ParseError(line_no, "expected 4 corner lines, found " + std::to_string(count));
    }
    return corners;
}

void write_corner_sidecar(const std::array<Point2, 4>& corners, const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const Point2& p : corners) {
        out << shortest(p.x) << ' ' << shortest(p.y) << '\n';
    }
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
}

std::string WatchRecord::line() const {
    if (!result) {
        return source.filename().string() + "\tskip\t" + error;
    }
    return source.filename().string() + '\t' + result->record() + (no_move ? " no-move" : "");
}

WatchSession::WatchSession(PipelineConfig config) : config_(std::move(config)), backend_(make_backend(config_)) {}

WatchRecord WatchSession::process(const std::filesystem::path& image_path) {
    WatchRecord rec;
    rec.source = image_path;
    try {
        rec.result = digitize(image_path, config_, cache_, backend_.get());
    } catch (const Error& e) {
        rec.error = e.what();
        rec.error_kind = e.kind();
    }
    return finish(std::move(rec));
}

WatchRecord WatchSession::process(const Image& image, std::filesystem::path label) {
    WatchRecord rec;
    rec.source = std::move(label);
    try {
        rec.result = digitize(image, config_, cache_, backend_.get());
    } catch (const Error& e) {
        rec.error = e.what();
        rec.error_kind = e.kind();
    }
    return finish(std::move(rec));
}

WatchRecord WatchSession::finish(WatchRecord rec) {
    if (rec.result) {
        cache_ = rec.result->location;
        rec.no_move = last_fen_ && *last_fen_ == rec.result->fen;
        last_fen_ = rec.result->fen;
    }
    return rec;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::directory_iterator it(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot list " + dir.string() + ": " + ec.message());
    }
    std::vector<std::filesystem::path> out;
    for (const auto& entry : it) {
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (entry.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t watch_directory(const std::filesystem::path& dir, const PipelineConfig& config,
                            const WatchOptions& options, const std::function<void(const WatchRecord&)>& sink) {
    WatchSession session(config);
    std::set<std::filesystem::path> seen;
    std::size_t emitted = 0;
    int idle = 0;
    while (!(options.stop && options.stop())) {
        bool fresh = false;
        for (const auto& path : list_images(dir)) {
            if (seen.insert(path).second) {
                fresh = true;
                sink(session.process(path));
                ++emitted;
            }
        }
        if (fresh) {
            idle = 0;
            continue;
        }
        if (options.idle_polls >= 0 && idle >= options.idle_polls) {
            break;
        }
        ++idle;
        std::this_thread::sleep_for(std::chrono::duration<double>(config.period_s));
    }
    return emitted;
}

AmortizationReport amortization_report(double fresh_s, double check_s, double split_s) {
    if (!(fresh_s > 0) || !(check_s > 0) || !(split_s >= 0) || !std::isfinite(fresh_s + check_s + split_s)) {
        throw Error(ErrorKind::InvalidArgument, "timings must be positive and finite");
    }
    AmortizationReport r;
    std::ostringstream os;
    os << "fresh detection " << fresh_s << " s, board check " << check_s << " s: ";
    if (check_s >= fresh_s) {
        os << "never amortized (a check costs at least as much as a fresh detection)";
        r.text = os.str();
        return r;
    }
    // Exact ratios such as 2 / 1 count as reached.
    r.breakeven = static_cast<long>(std::floor(fresh_s / check_s + 1e-9));
    os << "amortized when the check succeeds at least 1 out of " << *r.breakeven
       << " times (N = floor(fresh / check)).";
    if (check_s + split_s < fresh_s) {
        r.with_split_stage = static_cast<long>(std::floor(fresh_s / (check_s + split_s) + 1e-9));
        os << " Charging the " << split_s << " s square split to every check as well gives 1 out of "
           << *r.with_split_stage << " (floor(fresh / (check + split))), the stricter bound.";
    }
    r.text = os.str();
    return r;
}

std::string BenchReport::table() const {
    std::ostringstream os;
    os << "n\tnaive_s\tsweep_s\tintersections\tmismatches\n";
    os.precision(4);
    for (const BenchRow& row : rows) {
        os << row.n << '\t' << std::scientific << row.naive_s << '\t' << row.sweep_s << std::defaultfloat << '\t'
           << row.intersections << '\t' << row.mismatches << '\n';
    }
    if (crossover) {
        os << "crossover n* = " << *crossover << " (naive faster below)\n";
    } else {
        os << "no crossover within the measured sizes\n";
    }
    return os.str();
}

std::string BenchReport::config_snippet() const {
    std::ostringstream os;
    os << "# measured crossover: " << (crossover ? std::to_string(*crossover) : std::string("none")) << '\n'
       << "intersection_threshold = " << recommended_threshold << '\n';
    return os.str();
}

namespace {

std::vector<Segment2> bench_segments(std::mt19937_64& rng, std::size_t n) {
    const double scale = 1000.0;
    const double max_len = 2.0 * scale / std::sqrt(static_cast<double>(n));
    std::uniform_real_distribution<double> pos(0.0, scale);
    std::uniform_real_distribution<double> len(0.1 * max_len, max_len);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::acos(-1.0));
    std::vector<Segment2> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a{pos(rng), pos(rng)};
        const double l = len(rng);
        const double t = ang(rng);
        out.emplace_back(a, Point2{a.x + l * std::cos(t), a.y + l * std::sin(t)});
    }
    return out;
}

bool same_points(const std::vector<Point2>& a, const std::vector<Point2>& b, double tol) {
    if (a.size() != b.size()) {
        return false;
    }
    std::vector<bool> used(b.size(), false);
    for (const Point2& p : a) {
        bool hit = false;
        for (std::size_t j = 0; j < b.size() && !hit; ++j) {
            if (!used[j] && distance(p, b[j]) <= tol) {
                used[j] = hit = true;
            }
        }
        if (!hit) {
            return false;
        }
    }
    return true;
}

// Mean seconds per call, repeating until the sample is long enough to time.
template <class F>
double time_call(F&& f) {
    constexpr double kMinSample = 2e-3;
    int reps = 0;
    const auto start = Clock::now();
    double elapsed = 0.0;
    do {
        f();
        ++reps;
        elapsed = seconds_since(start);
    } while (elapsed < kMinSample);
    return elapsed / reps;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

BenchReport bench_intersections(const std::vector<std::size_t>& sizes, int trials, std::uint64_t seed) {
    if (trials < 1) {
        throw Error(ErrorKind::InvalidArgument, "trials must be at least 1");
    }
    if (sizes.empty()) {
        throw Error(ErrorKind::InvalidArgument, "no sizes given");
    }
    std::vector<std::size_t> ordered = sizes;
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
    if (ordered.front() < 2) {
        throw Error(ErrorKind::InvalidArgument, "sizes must be at least 2");
    }

    BenchReport report;
    std::mt19937_64 rng(seed);
    for (std::size_t n : ordered) {
        BenchRow row;
        row.n = n;
        std::vector<double> naive;
        std::vector<double> sweep;
        for (int t = 0; t < trials; ++t) {
            const auto segs = bench_segments(rng, n);
            std::vector<Point2> a;
            std::vector<Point2> b;
            naive.push_back(time_call([&] { a = intersections_naive(segs, kDefaultMergeRadius); }));
            sweep.push_back(time_call([&] { b = intersections_sweep(segs, kDefaultMergeRadius); }));
            row.intersections = a.size();
            if (!same_points(a, b, 10 * kDefaultMergeRadius)) {
                ++row.mismatches;
            }
        }
        row.naive_s = median(naive);
        row.sweep_s = median(sweep);
        report.mismatches += row.mismatches;
        report.rows.push_back(row);
    }

    std::size_t first = report.rows.size();
    while (first > 0 && report.rows[first - 1].sweep_s < report.rows[first - 1].naive_s) {
        --first;
    }
    if (first < report.rows.size()) {
        report.crossover = report.rows[first].n;
        report.recommended_threshold = first > 0 ? report.rows[first - 1].n : 0;
    } else {
        report.recommended_threshold = report.rows.back().n;
    }
    return report;
}

} // namespace boardscan
