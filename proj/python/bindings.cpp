// Python bindings: a thin layer over the C++ core. Structured results cross
// the boundary as plain dicts and lists; matrices as numpy arrays.
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/agent/agent.hpp"
#include "spatialqa/cli/cli.hpp"
#include "spatialqa/common/errors.hpp"
#include "spatialqa/corpus/manifest.hpp"
#include "spatialqa/eval/eval.hpp"
#include "spatialqa/geometry/homography.hpp"
#include "spatialqa/geometry/motion.hpp"
#include "spatialqa/geometry/units.hpp"
#include "spatialqa/llm/client.hpp"
#include "spatialqa/qagen/distractors.hpp"
#include "spatialqa/qagen/simulators.hpp"
#include "spatialqa/tools/backends.hpp"
#include "spatialqa/tools/catalog.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace spatialqa;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

eval::MRAConfig mra_config(double start, double end, double interval) {
    eval::MRAConfig cfg{start, end, interval};
    cfg.validate();
    return cfg;
}

std::vector<geometry::PointMatch> matches_from(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst) {
    if (src.cols() != 2 || dst.cols() != 2 || src.rows() != dst.rows())
        throw ShapeError("src and dst must both be N x 2 with the same N");
    std::vector<geometry::PointMatch> out;
    out.reserve(static_cast<std::size_t>(src.rows()));
    for (Eigen::Index i = 0; i < src.rows(); ++i)
        out.push_back({src.row(i).transpose(), dst.row(i).transpose()});
    return out;
}

geometry::RigidTransform rigid_from(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
    return {geometry::RotationMatrix(rotation), translation};
}

py::dict motion_to_py(const geometry::MotionReport& r) {
    py::dict dofs;
    for (auto d : geometry::kAllDofs) {
        const auto& m = r[d];
        py::dict e;
        e["state"] = std::string(geometry::to_string(m.state));
        e["value"] = m.value;
        e["sign"] = m.sign;
        dofs[py::str(std::string(geometry::to_string(d)))] = e;
    }
    py::dict out;
    out["dofs"] = dofs;
    out["description"] = geometry::describe_motion(r);
    return out;
}

py::array_t<std::uint8_t> raster_to_array(const Raster& r) {
    py::array_t<std::uint8_t> a({r.height(), r.width(), 3});
    auto px = r.pixels();
    std::copy(px.begin(), px.end(), a.mutable_data());
    return a;
}

py::dict parsed_to_py(const eval::ParsedAnswer& p) {
    py::dict d;
    d["kind"] = std::string(eval::to_string(p.kind));
    d["text"] = p.text;
    switch (p.kind) {
        case eval::AnswerKind::ChoiceLetter: d["letter"] = std::string(1, p.letter); break;
        case eval::AnswerKind::YesNo: d["yes"] = p.yes; break;
        case eval::AnswerKind::ScalarWithUnit: d["unit"] = p.unit; [[fallthrough]];
        case eval::AnswerKind::Scalar: d["value"] = p.value; break;
        case eval::AnswerKind::Matrix: d["numbers"] = p.numbers; break;
        case eval::AnswerKind::RawText: break;
    }
    return d;
}

py::dict run_agent(const py::handle& sample_obj, std::vector<std::string> script, const std::string& paradigm,
                   std::optional<std::string> mock_tools, const std::string& media_root, int max_attempts,
                   int max_turns) {
    corpus::Sample sample = corpus::sample_from_json(from_py(sample_obj));
    agent::AgentConfig cfg;
    cfg.paradigm = agent::paradigm_from(paradigm);
    cfg.max_attempts = max_attempts;
    cfg.max_turns = max_turns;
    cfg.validate();

    const tools::Registry& registry = tools::register_catalog();
    std::optional<tools::MockBackend> mock;
    if (mock_tools) mock.emplace(tools::MockBackend::from_file(registry, *mock_tools));
    llm::ScriptedClient client(std::move(script));
    tools::NativeBackend native({&client, cfg.core, mock ? &*mock : nullptr, {}});
    tools::Toolbox box(registry);
    if (mock) box.set_default(&*mock);
    box.route("Terminate", &native);
    box.route("SelfThinking", &native);
    if (!mock || !std::ranges::count(mock->tool_names(), "EstimateHomographyMatrix"))
        box.route("EstimateHomographyMatrix", &native);

    agent::AgentResult r;
    {
        py::gil_scoped_release release;
        r = agent::Agent(cfg, client, box).run(sample, media_root);
    }
    py::dict out;
    out["answer"] = r.answer;
    out["status"] = std::string(agent::to_string(r.status));
    out["trace"] = to_py(r.trace.to_json());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spatial question generation, scoring and tool-using agent core";
    m.attr("__version__") = std::string(cli::kToolVersion);

    // Translators run newest first, so the base class goes in before its children.
    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<UnitError>(m, "UnitError", base);
    py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<ShapeError>(m, "ShapeError", base);
    py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base);
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<LoadError>(m, "LoadError", base);
    py::register_exception<RegistryError>(m, "RegistryError", base);

    // geometry
    m.def("centimeters_per", [](const std::string& unit) {
        return geometry::centimeters_per(geometry::length_unit_from(unit));
    }, py::arg("unit"));
    m.def("convert_length_to_cm",
          py::overload_cast<double, std::string_view>(&geometry::convert_length_to_cm),
          py::arg("value"), py::arg("unit"));
    m.def("classify_motion", [](const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
                                double rotation_high_deg, double rotation_low_deg, double translation_high_m,
                                double translation_low_m) {
        geometry::MotionThresholds th{rotation_high_deg, rotation_low_deg, translation_high_m, translation_low_m};
        th.validate();
        return motion_to_py(geometry::classify_motion(rigid_from(rotation, translation), th));
    }, py::arg("rotation"), py::arg("translation"), py::arg("rotation_high_deg") = 10.0,
       py::arg("rotation_low_deg") = 5.0, py::arg("translation_high_m") = 0.10,
       py::arg("translation_low_m") = 0.05);
    m.def("fit_homography", [](const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst) {
        auto ms = matches_from(src, dst);
        return geometry::Homography::normalize(geometry::fit_homography_dlt(ms));
    }, py::arg("src"), py::arg("dst"));
    m.def("ransac_homography", [](const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst, double threshold,
                                  int iterations, std::uint64_t seed) {
        auto ms = matches_from(src, dst);
        geometry::RansacOptions opts;
        opts.reproj_threshold = threshold;
        opts.iterations = iterations;
        opts.seed = seed;
        auto r = geometry::ransac_homography(ms, opts);
        return py::make_tuple(Eigen::Matrix3d(r.homography.matrix()), r.inlier_mask);
    }, py::arg("src"), py::arg("dst"), py::arg("threshold") = 5.0, py::arg("iterations") = 2000,
       py::arg("seed") = 0);

    // qagen
    m.def("metric_distractors", [](double gt, int n, std::uint64_t seed) {
        Rng rng(seed);
        return qagen::metric_distractors(gt, n, rng);
    }, py::arg("gt"), py::arg("n"), py::arg("seed") = 0);
    m.def("motion_distractors", [](const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation, int count,
                                   std::uint64_t seed) {
        Rng rng(seed);
        auto report = geometry::classify_motion(rigid_from(rotation, translation));
        return qagen::motion_distractors(report, rng, count);
    }, py::arg("rotation"), py::arg("translation"), py::arg("count") = 3, py::arg("seed") = 0);
    m.def("simulate", [](const std::string& task, std::uint64_t seed) {
        Rng rng(seed);
        qagen::SimItem item = qagen::simulate(qagen::task_from(task), rng);
        py::list images;
        for (const auto& img : item.images) {
            py::dict d;
            d["name"] = img.name;
            d["pixels"] = raster_to_array(img.image);
            images.append(d);
        }
        py::dict out;
        out["qa"] = to_py(qagen::to_json(item.qa));
        out["sidecar"] = to_py(item.sidecar);
        out["images"] = images;
        return out;
    }, py::arg("task"), py::arg("seed") = 0);

    // corpus
    m.def("load_manifest", [](const std::string& path) {
        corpus::Manifest man = corpus::load_manifest(path);
        py::list samples;
        for (const auto& s : man.samples) samples.append(to_py(corpus::to_json(s)));
        py::dict out;
        out["info"] = to_py(man.info);
        out["samples"] = samples;
        return out;
    }, py::arg("path"));
    m.def("manifest_stats", [](const std::string& path) {
        return to_py(corpus::stats(corpus::load_manifest(path)).to_json());
    }, py::arg("path"));
    m.def("sample_frames", py::overload_cast<int, int>(&corpus::sample_frames), py::arg("frame_count"),
          py::arg("n") = 32);

    // eval
    m.def("parse_answer", [](const std::string& text, const std::string& format, const std::string& subtype) {
        return parsed_to_py(eval::parse_answer(text, qagen::format_from(format), subtype));
    }, py::arg("text"), py::arg("format"), py::arg("subtype") = "");
    m.def("mra", [](const std::string& pred, const std::string& gt, const std::string& subtype, double start,
                    double end, double interval) {
        return eval::mra(std::string_view(pred), std::string_view(gt), subtype, mra_config(start, end, interval));
    }, py::arg("pred"), py::arg("gt"), py::arg("subtype"), py::arg("start") = 0.50, py::arg("end") = 0.95,
       py::arg("interval") = 0.05);
    m.def("mra_values", [](double pred, double gt, double start, double end, double interval) {
        return eval::mra_from_values(pred, gt, mra_config(start, end, interval));
    }, py::arg("pred"), py::arg("gt"), py::arg("start") = 0.50, py::arg("end") = 0.95, py::arg("interval") = 0.05);
    m.def("score_sample", [](const py::handle& sample, const std::string& response) {
        return to_py(eval::score_sample(corpus::sample_from_json(from_py(sample)), response).to_json());
    }, py::arg("sample"), py::arg("response"));

    // agent
    m.def("run_agent", &run_agent, py::arg("sample"), py::arg("script"), py::arg("paradigm") = "plan-execute",
          py::arg("mock_tools") = std::nullopt, py::arg("media_root") = "", py::arg("max_attempts") = 3,
          py::arg("max_turns") = 10);
    m.def("tool_names", [] { return tools::register_catalog().names(); });

    // command line
    m.def("main", [](std::vector<std::string> args) {
        args.insert(args.begin(), "spatialqa");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return cli::run(static_cast<int>(argv.size()), argv.data());
    }, py::arg("args"));
}
