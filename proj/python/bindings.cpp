#include "boardscan/board_detect.hpp"
#include "boardscan/classify.hpp"
#include "boardscan/fen.hpp"
#include "boardscan/geometry.hpp"
#include "boardscan/infer.hpp"
#include "boardscan/pipeline.hpp"
#include "boardscan/synth.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace boardscan;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image image_from(const U8Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) {
        throw py::value_error("image must be HxW or HxWxC");
    }
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    if (c != 1 && c != 3) {
        throw py::value_error("image must have 1 or 3 channels");
    }
    std::vector<std::uint8_t> samples(a.data(), a.data() + a.size());
    return Image(w, h, c, std::move(samples));
}

py::array_t<std::uint8_t> array_from(const Image& img) {
    std::vector<py::ssize_t> shape = {img.height(), img.width()};
    if (img.channels() == 3) {
        shape.push_back(3);
    }
    py::array_t<std::uint8_t> out(shape);
    std::memcpy(out.mutable_data(), img.samples().data(), img.samples().size());
    return out;
}

BoardProbabilities probs_from(const F64Array& a) {
    if (a.ndim() != 2 || a.shape(0) != kNumSquares || a.shape(1) != kNumClasses) {
        throw py::value_error("probabilities must have shape (64, 13)");
    }
    BoardProbabilities out{};
    const double* p = a.data();
    for (int sq = 0; sq < kNumSquares; ++sq) {
        for (int c = 0; c < kNumClasses; ++c) {
            out[sq][c] = p[sq * kNumClasses + c];
        }
    }
    return out;
}

py::array_t<double> array_from(const BoardProbabilities& probs) {
    py::array_t<double> out({kNumSquares, kNumClasses});
    double* p = out.mutable_data();
    for (int sq = 0; sq < kNumSquares; ++sq) {
        for (int c = 0; c < kNumClasses; ++c) {
            p[sq * kNumClasses + c] = probs[sq][c];
        }
    }
    return out;
}

std::array<Point2, 4> corners_from(const std::vector<std::pair<double, double>>& v) {
    if (v.size() != 4) {
        throw py::value_error("expected 4 corners");
    }
    std::array<Point2, 4> out;
    for (int i = 0; i < 4; ++i) {
        out[i] = Point2{v[i].first, v[i].second};
    }
    return out;
}

std::vector<std::pair<double, double>> corners_to(const std::array<Point2, 4>& c) {
    std::vector<std::pair<double, double>> out;
    for (const Point2& p : c) {
        out.emplace_back(p.x, p.y);
    }
    return out;
}

// Lets Python classes implement classify_batch(list of arrays) -> (64, 13).
class PyBackend : public ClassifierBackend {
public:
    std::vector<SquareProbabilities> classify_batch(std::span<const Image> squares) override {
        py::gil_scoped_acquire gil;
        const py::function fn = py::get_override(static_cast<const ClassifierBackend*>(this), "classify_batch");
        if (!fn) {
            throw std::runtime_error("classify_batch is not implemented");
        }
        py::list batch;
        for (const Image& sq : squares) {
            batch.append(array_from(sq));
        }
        const F64Array arr = fn(batch).cast<F64Array>();
        if (arr.ndim() != 2 || arr.shape(1) != kNumClasses) {
            throw std::runtime_error("classify_batch must return shape (n, 13)");
        }
        std::vector<SquareProbabilities> out(static_cast<std::size_t>(arr.shape(0)));
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (int c = 0; c < kNumClasses; ++c) {
                out[i][c] = arr.data()[i * kNumClasses + c];
            }
        }
        return out;
    }

    std::string name() const override {
        py::gil_scoped_acquire gil;
        if (const py::function fn = py::get_override(static_cast<const ClassifierBackend*>(this), "name")) {
            return fn().cast<std::string>();
        }
        return "python";
    }
};

} // namespace

PYBIND11_MODULE(_boardscan, m) {
    m.doc() = "Chessboard photos to FEN placement strings";
    m.attr("__version__") = "0.1.0";

    py::register_exception<Error>(m, "Error");

    m.def("encode_fen", [](const std::string& placement_chars) {
        if (placement_chars.size() != kNumSquares) {
            throw py::value_error("expected 64 square characters");
        }
        BoardPosition pos{};
        for (int sq = 0; sq < kNumSquares; ++sq) {
            const auto p = piece_from_char(placement_chars[sq]);
            if (!p) {
                throw py::value_error("unknown square character");
            }
            pos[sq] = *p;
        }
        return encode_fen(pos);
    }, "FEN placement of 64 characters from KQRBNPkqrbnp_ (a8 first).");
    m.def("decode_fen", [](const std::string& fen, bool strict, bool enforce_census) {
        const BoardPosition pos = decode_fen(fen, {.strict = strict, .enforce_census = enforce_census});
        std::string out;
        for (PieceClass p : pos) {
            out += to_char(p);
        }
        return out;
    }, py::arg("fen"), py::arg("strict") = true, py::arg("enforce_census") = false,
       "64 square characters from a FEN placement.");

    m.def("infer_fen", [](const F64Array& probs) { return encode_fen(infer_position(probs_from(probs))); },
          "Constrained position from a (64, 13) probability array, as FEN.");
    m.def("argmax_fen", [](const F64Array& probs) { return encode_fen(argmax_position(probs_from(probs))); });
    m.def("constraint_violations", [](const std::string& fen) {
        return constraint_violations(decode_fen(fen, {.strict = false}));
    });
    m.def("load_probability_file", [](const std::filesystem::path& p) { return array_from(load_probability_file(p)); });
    m.def("save_probability_file", [](const F64Array& probs, const std::filesystem::path& p) {
        save_probability_file(probs_from(probs), p);
    });
    m.def("baseline_classifier", [](const U8Array& square) {
        const auto p = baseline_classifier(image_from(square));
        return std::vector<double>(p.begin(), p.end());
    });

    m.def("load_image", [](const std::filesystem::path& p) { return array_from(load_image(p)); });
    m.def("save_png", [](const U8Array& img, const std::filesystem::path& p) { save_png(image_from(img), p); });

    m.def("locate_board", [](const U8Array& img) { return corners_to(locate_board(image_from(img)).corners); },
          "Board corners (top-left, top-right, bottom-right, bottom-left) in pixels.");
    m.def("check_board_location", [](const U8Array& img, const std::vector<std::pair<double, double>>& corners,
                                     int tolerance) {
        const auto grid = GridCandidate::from_location(BoardLocation::from_corners(corners_from(corners)));
        return check_board_location(image_from(img), grid, tolerance);
    }, py::arg("image"), py::arg("corners"), py::arg("tolerance") = kDefaultCheckTolerance);
    m.def("split_squares", [](const U8Array& img, const std::vector<std::pair<double, double>>& corners, int out_px,
                              double top_extension) {
        py::list out;
        for (const Image& sq : split_squares(image_from(img), BoardLocation::from_corners(corners_from(corners)),
                                             out_px, top_extension)) {
            out.append(array_from(sq));
        }
        return out;
    }, py::arg("image"), py::arg("corners"), py::arg("out_px") = 224, py::arg("top_extension") = 0.0);

    py::class_<ClassifierBackend, PyBackend, std::shared_ptr<ClassifierBackend>>(m, "ClassifierBackend")
        .def(py::init<>())
        .def("name", &ClassifierBackend::name);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_static("parse", &PipelineConfig::parse)
        .def_static("load", &PipelineConfig::load)
        .def_static("keys", &PipelineConfig::keys)
        .def("set", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.set(k, v); })
        .def_readwrite("square_px", &PipelineConfig::square_px)
        .def_readwrite("check_tolerance", &PipelineConfig::check_tolerance)
        .def_readwrite("top_extension", &PipelineConfig::top_extension)
        .def_readwrite("strict_fen", &PipelineConfig::strict_fen);

    py::class_<DigitizationResult>(m, "DigitizationResult")
        .def_readonly("fen", &DigitizationResult::fen)
        .def_property_readonly("mode", [](const DigitizationResult& r) { return std::string(to_string(r.mode)); })
        .def_property_readonly("corners", [](const DigitizationResult& r) { return corners_to(r.location.corners); })
        .def_property_readonly("timings", [](const DigitizationResult& r) {
            py::dict d;
            if (r.timings.board_detection_s) {
                d["board_detection_s"] = *r.timings.board_detection_s;
            }
            if (r.timings.board_check_s) {
                d["board_check_s"] = *r.timings.board_check_s;
            }
            d["split_squares_s"] = r.timings.split_squares_s;
            d["probability_vectors_s"] = r.timings.probability_vectors_s;
            d["infer_plus_fen_s"] = r.timings.infer_plus_fen_s;
            d["total_s"] = r.timings.total_s;
            return d;
        })
        .def("record", &DigitizationResult::record)
        .def("to_json", &DigitizationResult::to_json);

    m.def("digitize", [](const U8Array& img, const PipelineConfig& config,
                         const std::optional<std::vector<std::pair<double, double>>>& cached,
                         std::shared_ptr<ClassifierBackend> backend) {
        std::optional<BoardLocation> loc;
        if (cached) {
            loc = BoardLocation::from_corners(corners_from(*cached));
        }
        const Image image = image_from(img);
        py::gil_scoped_release release;
        return digitize(image, config, loc, backend.get());
    }, py::arg("image"), py::arg("config") = PipelineConfig{}, py::arg("cached") = std::nullopt,
       py::arg("backend") = nullptr);

    m.def("amortization_report", [](double fresh, double check) {
        const auto r = amortization_report(fresh, check);
        return py::make_tuple(r.breakeven, r.text);
    });
    m.def("bench_intersections", [](const std::vector<std::size_t>& sizes, int trials) {
        const auto r = bench_intersections(sizes, trials);
        py::list rows;
        for (const auto& row : r.rows) {
            rows.append(py::make_tuple(row.n, row.naive_s, row.sweep_s, row.mismatches));
        }
        return py::make_tuple(rows, r.crossover, r.config_snippet());
    });

    m.def("render_board", [](const std::string& fen, double tilt_deg, std::uint64_t seed) {
        synth::RenderOptions opt;
        opt.tilt_deg = tilt_deg;
        opt.seed = seed;
        opt.blur_sigma = 0.6;
        opt.noise_sigma = 2.0;
        const auto r = synth::render_board(decode_fen(fen), opt);
        return py::make_tuple(array_from(r.image), corners_to(r.corners));
    }, py::arg("fen"), py::arg("tilt_deg") = 0.0, py::arg("seed") = 1,
       "Synthetic board image and its true corners.");
}
