#include "boardscan/pipeline.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace boardscan;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DetectionFailure: return 2;
    case ErrorKind::Classification: return 3;
    default: return 4;
    }
}

PipelineConfig load_config(const std::string& path) {
    PipelineConfig config = path.empty() ? PipelineConfig{} : PipelineConfig::load(path);
    config.validate();
    return config;
}

int run_digitize(const std::string& image, const std::string& config_path, const std::string& probs,
                 const std::string& cache_path, const std::string& json_path) {
    PipelineConfig config = load_config(config_path);
    if (!probs.empty()) {
        config.set("backend", "file");
        config.set("probabilities", probs);
    }
    std::optional<BoardLocation> cached;
    if (!cache_path.empty()) {
        cached = load_location(cache_path);
    }
    const DigitizationResult result = digitize(std::filesystem::path(image), config, cached);
    std::cout << result.record() << '\n';
    if (!cache_path.empty()) {
        save_location(result.location, cache_path);
    }
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        if (!(out << result.to_json() << '\n')) {
            throw Error(ErrorKind::Io, "cannot write " + json_path);
        }
    }
    return 0;
}

int run_watch(const std::string& dir, double period, const std::string& config_path, bool once, int idle_polls) {
    PipelineConfig config = load_config(config_path);
    if (period > 0) {
        config.period_s = period;
        config.validate();
    }
    WatchOptions options;
    options.idle_polls = once ? 0 : idle_polls;
    watch_directory(dir, config, options, [](const WatchRecord& rec) {
        std::cout << rec.line() << std::endl;
    });
    return 0;
}

int run_bench(const std::vector<std::size_t>& sizes, int trials, std::uint64_t seed, const std::string& snippet) {
    const BenchReport report = bench_intersections(sizes, trials, seed);
    std::cout << report.table() << report.config_snippet();
    if (!snippet.empty()) {
        std::ofstream out(snippet);
        if (!(out << report.config_snippet())) {
            throw Error(ErrorKind::Io, "cannot write " + snippet);
        }
    }
    return report.mismatches == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reads chess positions from board photos"};
    app.require_subcommand(1);

    std::string image;
    std::string config_path;
    std::string probs;
    std::string cache_path;
    std::string json_path;
    auto* dig = app.add_subcommand("digitize", "Print the FEN placement of one board image");
    dig->add_option("image", image, "PNG or JPEG image")->required();
    dig->add_option("--config", config_path, "key = value configuration file");
    dig->add_option("--probs", probs, "64x13 probability vector file (replaces the classifier)");
    dig->add_option("--cache", cache_path, "board location file, read if present and rewritten");
    dig->add_option("--json", json_path, "also write the result as JSON");

    std::string dir;
    double period = 0.0;
    bool once = false;
    int idle_polls = -1;
    auto* watch = app.add_subcommand("watch", "Digitize images as they appear in a directory");
    watch->add_option("dir", dir, "directory to poll")->required();
    watch->add_option("--period", period, "seconds between polls (overrides the config)");
    watch->add_option("--config", config_path, "key = value configuration file");
    watch->add_flag("--once", once, "process the images present and exit");
    watch->add_option("--idle-polls", idle_polls, "exit after this many empty polls (-1: never)");

    auto* bench = app.add_subcommand("bench", "Benchmarks");
    bench->require_subcommand(1);
    std::vector<std::size_t> sizes{8, 16, 32, 64, 128, 256, 512, 1024};
    int trials = 5;
    std::uint64_t seed = 1;
    std::string snippet;
    auto* inter = bench->add_subcommand("intersections", "Naive vs sweep segment intersection");
    inter->add_option("--sizes", sizes, "segment counts")->delimiter(',');
    inter->add_option("--trials", trials, "random sets per size");
    inter->add_option("--seed", seed, "random seed");
    inter->add_option("--snippet", snippet, "write the recommended config line here");

    double fresh = 0.0;
    double check = 0.0;
    double split = 0.08;
    auto* amort = bench->add_subcommand("amortization", "Break-even rate of the cached-board check");
    amort->add_option("--fresh", fresh, "seconds per fresh detection")->required();
    amort->add_option("--check", check, "seconds per board check")->required();
    amort->add_option("--split", split, "seconds to split squares");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    try {
        if (*dig) {
            return run_digitize(image, config_path, probs, cache_path, json_path);
        }
        if (*watch) {
            return run_watch(dir, period, config_path, once, idle_polls);
        }
        if (*inter) {
            return run_bench(sizes, trials, seed, snippet);
        }
        if (*amort) {
            std::cout << amortization_report(fresh, check, split).text << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
