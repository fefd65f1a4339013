#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "edit_suggest/checkpoint.hpp"
#include "edit_suggest/cli.hpp"
#include "edit_suggest/evalkit.hpp"
#include "edit_suggest/synthdata.hpp"

namespace py = pybind11;
using namespace edit_suggest;

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Conditional generative models for photo-edit suggestion";

    py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);

    py::class_<ImageEditRecord>(m, "ImageEditRecord")
        .def(py::init<>())
        .def(py::init([](std::int64_t user_id, std::vector<double> x, std::vector<double> y,
                         std::optional<int> group) {
                 return ImageEditRecord{user_id, std::move(x), std::move(y), group};
             }),
             py::arg("user_id"), py::arg("x"), py::arg("y"), py::arg("group") = py::none())
        .def_readwrite("user_id", &ImageEditRecord::user_id)
        .def_readwrite("x", &ImageEditRecord::x)
        .def_readwrite("y", &ImageEditRecord::y)
        .def_readwrite("group", &ImageEditRecord::group)
        .def("content_hash", &ImageEditRecord::content_hash)
        .def(py::self == py::self)
        .def("__repr__", [](const ImageEditRecord& r) {
            return "<ImageEditRecord user=" + std::to_string(r.user_id) + " x_dim=" +
                   std::to_string(r.x.size()) + " y_dim=" + std::to_string(r.y.size()) + ">";
        });

    py::class_<UserRecordSet>(m, "UserRecordSet")
        .def_readonly("user_id", &UserRecordSet::user_id)
        .def_readonly("records", &UserRecordSet::records)
        .def("__len__", &UserRecordSet::size);

    m.def("preset_names", &preset_names);
    m.def(
        "preset_config",
        [](const std::string& name, std::uint64_t seed) {
            return gen_config_to_json(preset_config(name, seed));
        },
        py::arg("name"), py::arg("seed"), "Generator config for a named preset, as JSON text.");
    m.def(
        "generate",
        [](const std::string& config_json) { return generate(gen_config_from_json(config_json)); },
        py::arg("config_json"));
    m.def(
        "oracle_loglik",
        [](const ImageEditRecord& r, const std::string& config_json) {
            return oracle_loglik(r, gen_config_from_json(config_json));
        },
        py::arg("record"), py::arg("config_json"));
    m.def(
        "save_dataset",
        [](const std::vector<ImageEditRecord>& records, const std::filesystem::path& path) {
            save_dataset(records, path);
        },
        py::arg("records"), py::arg("path"));
    m.def("load_dataset", &load_dataset, py::arg("path"));

    m.def(
        "jsd_bits",
        [](const std::vector<double>& p, const std::vector<double>& q) { return jsd_bits(p, q); },
        py::arg("p"), py::arg("q"));
    m.def(
        "align_proposals",
        [](const Samples& proposals, const Samples& references) {
            const auto a = align_proposals(proposals, references);
            return py::make_tuple(a.assignment, a.total_sq_error, a.mse);
        },
        py::arg("proposals"), py::arg("references"),
        "Returns (assignment, total squared error, per-slider MSE).");

    m.def(
        "checkpoint_kind",
        [](const std::filesystem::path& path) { return to_string(kind_of(load_checkpoint(path).model)); },
        py::arg("path"));

    m.def("default_output_dir", &default_output_dir);
    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "edit-suggest");
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
