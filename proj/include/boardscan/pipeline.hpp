#pragma once

#include "boardscan/board_detect.hpp"
#include "boardscan/classify.hpp"
#include "boardscan/error.hpp"
#include "boardscan/position.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boardscan {

/// Side of the rectified board image where White's first rank lies.
enum class Orientation { WhiteBottom, WhiteTop, WhiteLeft, WhiteRight };

enum class InferenceMode { Constrained, Argmax };

struct PipelineConfig {
    /// "baseline" or "file"; the file backend reads `probabilities`.
    std::string backend = "baseline";
    std::filesystem::path probabilities;
    Orientation orientation = Orientation::WhiteBottom;
    InferenceMode inference = InferenceMode::Constrained;
    DetectConfig detect;
    int check_tolerance = kDefaultCheckTolerance;
    int square_px = 224;
    double top_extension = 0.0;
    /// Watch-mode sampling period, seconds.
    double period_s = 1.0;
    /// Strict mode rejects output that breaks the census rules.
    bool strict_fen = true;

    /// Throws Error(InvalidArgument) naming the first out-of-range field.
    void validate() const;

    /// Applies one `key = value` setting. Throws Error(InvalidArgument) for
    /// unknown keys and malformed or out-of-range values.
    void set(std::string_view key, std::string_view value);

    /// Line-oriented `key = value` text; '#' starts a comment. Errors carry
    /// the 1-based line number.
    static PipelineConfig parse(std::string_view text);
    static PipelineConfig load(const std::filesystem::path& path);

    /// Keys accepted by set(), in documentation order.
    static const std::vector<std::string>& keys();
};

std::unique_ptr<ClassifierBackend> make_backend(const PipelineConfig& config);

/// Reorders squares from rectified-image order into a8..h1 order.
BoardProbabilities orient(const BoardProbabilities& probs, Orientation orientation);
int oriented_index(int image_square, Orientation orientation);

struct StageTimings {
    /// Includes decoding the photo when digitizing from a file.
    std::optional<double> board_detection_s;
    std::optional<double> board_check_s;
    double split_squares_s = 0.0;
    double probability_vectors_s = 0.0;
    double infer_plus_fen_s = 0.0;
    double total_s = 0.0;

    double stage_sum() const;
    /// `key=value` pairs separated by spaces; absent stages are omitted.
    std::string format() const;
};

enum class DetectionMode { Fresh, Cached };

const char* to_string(DetectionMode mode);

struct ConfidenceSummary {
    /// Statistics of each square's largest probability.
    double min = 0.0;
    double mean = 0.0;
    int weakest_square = 0;
    /// Squares whose largest probability is below 0.5.
    int uncertain = 0;
};

struct DigitizationResult {
    std::string fen;
    BoardPosition position{};
    BoardLocation location;
    DetectionMode mode = DetectionMode::Fresh;
    StageTimings timings;
    ConfidenceSummary confidence;

    /// FEN, a tab, then the mode and the stage timings.
    std::string record() const;
    std::string to_json() const;
};

enum class Stage { Load, BoardCheck, BoardDetection, SplitSquares, ProbabilityVectors, InferPlusFen };

const char* to_string(Stage stage);

/// A failure inside digitize, tagged with the stage that raised it. kind()
/// is the kind of the original error.
class StageError : public Error {
public:
    StageError(Stage stage, ErrorKind kind, const std::string& what)
        : Error(kind, std::string(to_string(stage)) + ": " + what), stage_(stage) {}

    Stage stage() const noexcept { return stage_; }

private:
    Stage stage_;
};

/// With a cached location the board is checked first and reused when the
/// check passes; otherwise it is located afresh. Throws StageError.
DigitizationResult digitize(const Image& image, const PipelineConfig& config,
                            const std::optional<BoardLocation>& cached = std::nullopt,
                            ClassifierBackend* backend = nullptr);

/// Same, with image decoding charged to the first stage.
DigitizationResult digitize(const std::filesystem::path& image_path, const PipelineConfig& config,
                            const std::optional<BoardLocation>& cached = std::nullopt,
                            ClassifierBackend* backend = nullptr);

/// Corners as 8 numbers on one line: x y for top-left, top-right,
/// bottom-right, bottom-left.
std::string format_location(const BoardLocation& location);
BoardLocation parse_location(std::string_view text);
std::optional<BoardLocation> load_location(const std::filesystem::path& path);
void save_location(const BoardLocation& location, const std::filesystem::path& path);

/// Ground-truth sidecar: four lines of "x y", in the order given.
std::array<Point2, 4> read_corner_sidecar(const std::filesystem::path& path);
void write_corner_sidecar(const std::array<Point2, 4>& corners, const std::filesystem::path& path);

struct WatchRecord {
    std::filesystem::path source;
    std::optional<DigitizationResult> result;
    /// Same FEN as the previous successful image.
    bool no_move = false;
    /// Why the image was skipped.
    std::string error;
    std::optional<ErrorKind> error_kind;

    bool skipped() const { return !result.has_value(); }
    std::string line() const;
};

/// Digitizes a sequence of images in order, carrying the board location
/// from one image to the next. A failed image leaves the cache untouched.
class WatchSession {
public:
    explicit WatchSession(PipelineConfig config);

    WatchRecord process(const std::filesystem::path& image_path);
    WatchRecord process(const Image& image, std::filesystem::path label = {});

    const std::optional<BoardLocation>& cached_location() const { return cache_; }

private:
    WatchRecord finish(WatchRecord record);

    PipelineConfig config_;
    std::unique_ptr<ClassifierBackend> backend_;
    std::optional<BoardLocation> cache_;
    std::optional<std::string> last_fen_;
};

/// PNG and JPEG files directly in `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct WatchOptions {
    /// Stop after this many polls that find no new image; negative polls forever.
    int idle_polls = 0;
    /// Checked before each poll.
    std::function<bool()> stop;
};

/// Processes the images already in `dir`, then polls it every
/// config.period_s for new ones, passing each record to `sink`.
/// Returns the number of records emitted.
std::size_t watch_directory(const std::filesystem::path& dir, const PipelineConfig& config,
                            const WatchOptions& options, const std::function<void(const WatchRecord&)>& sink);

struct AmortizationReport {
    /// Check calls one fresh detection pays for; nullopt when never amortized.
    std::optional<long> breakeven;
    /// Reading that reproduces the quoted "1 out of 14".
    std::optional<long> with_split_stage;
    std::string text;
};

/// breakeven = floor(fresh_s / check_s): a check that passes at least once
/// in that many calls costs no more than re-detecting every time.
AmortizationReport amortization_report(double fresh_s, double check_s, double split_s = 0.08);

struct BenchRow {
    std::size_t n = 0;
    double naive_s = 0.0;
    double sweep_s = 0.0;
    std::size_t intersections = 0;
    int mismatches = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    /// Smallest size from which the sweep stays faster.
    std::optional<std::size_t> crossover;
    /// Largest size where the naive method won, for intersection_threshold.
    std::size_t recommended_threshold = 0;
    int mismatches = 0;

    std::string table() const;
    std::string config_snippet() const;
};

/// Times both intersection algorithms on the same random segment sets.
/// Segment lengths shrink as 1/sqrt(n) so the intersection count grows
/// roughly linearly. Throws Error(InvalidArgument) for trials < 1 or no sizes.
BenchReport bench_intersections(const std::vector<std::size_t>& sizes, int trials, std::uint64_t seed = 1);

} // namespace boardscan
