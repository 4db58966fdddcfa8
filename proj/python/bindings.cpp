#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "astralora/cli/dataset.hpp"
#include "astralora/numlin/rng.hpp"
#include "astralora/photonics/black_box.hpp"
#include "astralora/photonics/models.hpp"
#include "astralora/surrogate/surrogate.hpp"
#include "astralora/zograd/zograd.hpp"

namespace py = pybind11;

using astralora::numlin::Matrix;
using astralora::numlin::RngStream;
using astralora::photonics::BlackBoxConfig;
using astralora::photonics::BlackBoxLayer;
using astralora::surrogate::SurrogateModel;
using astralora::surrogate::TransposeMode;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data());
    return m;
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> a({m.rows(), m.cols()});
    std::copy(m.data(), m.data() + m.size(), a.mutable_data());
    return a;
}

py::array_t<double> to_array_1d(const std::vector<double>& v) {
    py::array_t<double> a(v.size());
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

std::vector<double> to_vector(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

TransposeMode mode_of(bool exact) {
    return exact ? TransposeMode::exact : TransposeMode::stochastic;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "low-rank surrogate training around black-box linear layers";

    py::class_<RngStream>(m, "RngStream")
        .def(py::init<std::uint64_t, std::string>(), py::arg("seed"), py::arg("label"))
        .def("normal", &RngStream::normal)
        .def("uniform01", &RngStream::uniform01)
        .def_property_readonly("counter", &RngStream::counter)
        .def_property_readonly("label", &RngStream::label);

    py::class_<BlackBoxLayer, std::shared_ptr<BlackBoxLayer>>(m, "Layer")
        .def_property_readonly("kind",
                               [](const BlackBoxLayer& l) { return to_string(l.kind()); })
        .def_property_readonly("d_inp", &BlackBoxLayer::d_inp)
        .def_property_readonly("d_out", &BlackBoxLayer::d_out)
        .def_property_readonly("d_bb", &BlackBoxLayer::d_bb)
        .def_property_readonly("query_count", &BlackBoxLayer::query_count)
        .def_property(
            "params",
            [](const BlackBoxLayer& l) { return to_array_1d(l.params()); },
            [](BlackBoxLayer& l, const py::array_t<double>& w) {
                l.set_params(to_vector(w));
            })
        .def("forward",
             [](BlackBoxLayer& l, const py::array_t<double>& x) {
                 return to_array_1d(l.forward(to_vector(x)));
             })
        .def("forward_with",
             [](BlackBoxLayer& l, const py::array_t<double>& w,
                const py::array_t<double>& x) {
                 return to_array_1d(l.forward_with(to_vector(w), to_vector(x)));
             })
        .def("forward_batch",
             [](BlackBoxLayer& l, const py::array_t<double>& xs) {
                 return to_array(l.forward_batch(to_matrix(xs)));
             })
        .def("materialize",
             [](BlackBoxLayer& l) { return to_array(astralora::photonics::materialize(l)); });

    m.def(
        "make_layer",
        [](const std::string& kind, std::size_t d_inp, std::size_t d_out, double mrr_a,
           double mrr_r) {
            BlackBoxConfig cfg;
            cfg.kind = astralora::photonics::layer_kind_from_string(kind);
            cfg.d_inp = d_inp;
            cfg.d_out = d_out;
            cfg.mrr_a = mrr_a;
            cfg.mrr_r = mrr_r;
            return std::shared_ptr<BlackBoxLayer>(astralora::photonics::make_black_box(cfg));
        },
        py::arg("kind"), py::arg("d_inp"), py::arg("d_out"), py::arg("mrr_a") = 0.8,
        py::arg("mrr_r") = 0.9);

    m.def(
        "random_params",
        [](const BlackBoxLayer& layer, std::uint64_t seed) {
            RngStream s(seed, "bb-init");
            return to_array_1d(astralora::photonics::random_params(layer, s));
        },
        py::arg("layer"), py::arg("seed"));

    m.def("mrr_response", &astralora::photonics::mrr_response, py::arg("w"),
          py::arg("a") = 0.8, py::arg("r") = 0.9);

    py::class_<SurrogateModel>(m, "Surrogate")
        .def_property_readonly("rank", &SurrogateModel::rank)
        .def_property_readonly("d_inp", &SurrogateModel::d_inp)
        .def_property_readonly("d_out", &SurrogateModel::d_out)
        .def_property_readonly("u", [](const SurrogateModel& s) { return to_array(s.u); })
        .def_property_readonly("s", [](const SurrogateModel& s) { return to_array(s.s); })
        .def_property_readonly("v", [](const SurrogateModel& s) { return to_array(s.v); })
        .def("forward",
             [](const SurrogateModel& s, const py::array_t<double>& x) {
                 return to_array_1d(s.forward(to_vector(x)));
             })
        .def("backward_input",
             [](const SurrogateModel& s, const py::array_t<double>& g) {
                 return to_array_1d(s.backward_input(to_vector(g)));
             })
        .def("dense", [](const SurrogateModel& s) { return to_array(s.dense()); })
        .def("orth_drift", &SurrogateModel::orth_drift);

    m.def("init_oracle", &astralora::surrogate::init_oracle, py::arg("layer"),
          py::arg("rank"));

    m.def(
        "init_sketch",
        [](BlackBoxLayer& layer, std::size_t rank, std::size_t oversample,
           std::size_t m_probe, RngStream& stream, bool exact) {
            return astralora::surrogate::init_sketch(layer, rank, oversample, m_probe,
                                                     stream, mode_of(exact));
        },
        py::arg("layer"), py::arg("rank"), py::arg("oversample"), py::arg("m_probe"),
        py::arg("stream"), py::arg("exact") = false);

    m.def(
        "ipsi_update",
        [](const SurrogateModel& sm, BlackBoxLayer& layer, const py::array_t<double>& w0,
           const py::array_t<double>& w1, std::size_t m_sm, RngStream& stream, bool exact) {
            astralora::surrogate::PsiBudget budget;
            SurrogateModel next = astralora::surrogate::ipsi_update(
                sm, layer, to_vector(w0), to_vector(w1), m_sm, stream, mode_of(exact),
                &budget);
            return py::make_tuple(next, budget.queries_spent);
        },
        py::arg("sm"), py::arg("layer"), py::arg("w0"), py::arg("w1"), py::arg("m_sm"),
        py::arg("stream"), py::arg("exact") = false);

    m.def(
        "transpose_probe",
        [](BlackBoxLayer& layer, const py::array_t<double>& w0,
           const py::array_t<double>& w1, const py::array_t<double>& u, std::size_t m,
           RngStream& stream, bool exact) {
            return to_array(astralora::surrogate::transpose_probe(
                layer, to_vector(w0), to_vector(w1), to_matrix(u), m, stream,
                mode_of(exact)));
        },
        py::arg("layer"), py::arg("w0"), py::arg("w1"), py::arg("u"), py::arg("m"),
        py::arg("stream"), py::arg("exact") = false);

    m.def("sm_rel_error", &astralora::surrogate::sm_rel_error, py::arg("layer"),
          py::arg("sm"));

    m.def(
        "zo_estimate",
        [](BlackBoxLayer& layer, const py::array_t<double>& w, const py::array_t<double>& x,
           const py::array_t<double>& v, double mu, std::size_t m_bb, RngStream& stream) {
            astralora::zograd::ZoConfig cfg;
            cfg.mu = mu;
            cfg.m_bb = m_bb;
            const auto est = astralora::zograd::estimate_gradient(
                layer, to_vector(w), to_vector(x), to_vector(v), cfg, stream);
            return py::make_tuple(to_array_1d(est.g), est.queries_used);
        },
        py::arg("layer"), py::arg("w"), py::arg("x"), py::arg("v"), py::arg("mu"),
        py::arg("m_bb"), py::arg("stream"));

    m.def(
        "zo_estimate_batch",
        [](BlackBoxLayer& layer, const py::array_t<double>& w, const py::array_t<double>& xs,
           const py::array_t<double>& vs, double mu, std::size_t m_bb,
           bool share_directions, RngStream& stream) {
            astralora::zograd::ZoConfig cfg;
            cfg.mu = mu;
            cfg.m_bb = m_bb;
            cfg.share_directions = share_directions;
            const auto est = astralora::zograd::estimate_batch(
                layer, to_vector(w), to_matrix(xs), to_matrix(vs), cfg, stream);
            return py::make_tuple(to_array_1d(est.g), est.queries_used);
        },
        py::arg("layer"), py::arg("w"), py::arg("xs"), py::arg("vs"), py::arg("mu"),
        py::arg("m_bb"), py::arg("share_directions"), py::arg("stream"));

    m.def(
        "gen_dataset",
        [](const std::string& kind, std::size_t n, double noise, std::uint64_t seed) {
            RngStream stream(seed, "data-gen");
            const auto ds = astralora::cli::gen_dataset(kind, n, noise, stream);
            py::array_t<int> labels(ds.labels.size());
            std::copy(ds.labels.begin(), ds.labels.end(), labels.mutable_data());
            return py::make_tuple(to_array(ds.features), labels);
        },
        py::arg("kind"), py::arg("n"), py::arg("noise"), py::arg("seed"));
}
