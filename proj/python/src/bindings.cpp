#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tvlab/errors.hpp"
#include "tvlab/harness.hpp"

namespace py = pybind11;
using namespace tvlab;

namespace {

py::dict outcome_dict(const VerificationOutcome& o) {
  py::dict d;
  d["accepted"] = o.accepted;
  d["accepted_nodes"] = o.accepted_nodes;
  d["bonus"] = o.bonus;
  d["tau"] = o.tau;
  d["accept_length"] = o.accept_length;
  return d;
}

py::dict report_dict(const LosslessnessReport& r) {
  py::dict d;
  d["algorithm"] = r.algorithm;
  d["mode"] = r.mode;
  d["tv"] = r.tv;
  d["max_deviation"] = r.max_deviation;
  d["expected_accept_length"] = r.expected_accept_length;
  d["labelings"] = r.labelings;
  d["branches"] = r.branches;
  d["sequences"] = r.sequences;
  return d;
}

py::dict cell_dict(const CellStats& c) {
  py::dict d;
  d["algorithm"] = c.algorithm;
  d["template"] = c.template_label;
  d["temperature"] = c.temperature;
  d["trials"] = c.trials;
  d["mean_accept_len"] = c.mean_accept_len;
  d["stderr"] = c.stderr_accept_len;
  d["seconds"] = c.seconds;
  d["tokens_per_second"] = c.tokens_per_second;
  return d;
}

Algorithm algorithm_of(const std::string& name) { return parse_algorithm(name); }
SiblingMode mode_of(const std::string& name) { return parse_sibling_mode(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Draft-tree verification: verifiers, exact oracle and Monte Carlo harness";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<TooLarge>(m, "TooLarge", base.ptr());
  py::register_exception<InvalidSpec>(m, "InvalidSpec", base.ptr());
  py::register_exception<ZeroMass>(m, "ZeroMass", base.ptr());

  py::class_<Categorical>(m, "Categorical")
      .def(py::init<std::vector<double>>(), py::arg("probs"))
      .def("probs", [](const Categorical& c) { return std::vector<double>(c.probs().begin(), c.probs().end()); })
      .def("__len__", &Categorical::size)
      .def("__getitem__", [](const Categorical& c, Token t) {
        if (t < 0 || static_cast<std::size_t>(t) >= c.size()) throw py::index_error();
        return c[t];
      });

  m.def("normalize", [](const std::vector<double>& w) { return normalize(w); }, py::arg("weights"));
  m.def(
      "residual",
      [](double p, const Categorical& target, const Categorical& draft) {
        const Residual r = residual(p, target, draft);
        return py::make_tuple(r.dist ? py::cast(*r.dist) : py::none(), r.mass);
      },
      py::arg("p"), py::arg("target"), py::arg("draft"));
  m.def("parent_acceptance", &parent_acceptance, py::arg("p"), py::arg("mass"));
  m.def("tv_distance", py::overload_cast<const Categorical&, const Categorical&>(&tv_distance));

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](std::uint64_t seed, std::size_t vocab, std::size_t order, double lambda, double concentration,
                       double temperature) {
             ModelSpec s;
             s.seed = seed;
             s.vocab_size = vocab;
             s.context_order = order;
             s.lambda = lambda;
             s.concentration = concentration;
             s.temperature = temperature;
             return s;
           }),
           py::arg("seed"), py::arg("vocab") = 16, py::arg("order") = 1, py::arg("lambda_") = 0.5,
           py::arg("concentration") = 1.0, py::arg("temperature") = 1.0)
      .def_readwrite("seed", &ModelSpec::seed)
      .def_readwrite("vocab", &ModelSpec::vocab_size)
      .def_readwrite("order", &ModelSpec::context_order)
      .def_readwrite("lambda_", &ModelSpec::lambda)
      .def_readwrite("concentration", &ModelSpec::concentration)
      .def_readwrite("temperature", &ModelSpec::temperature);

  py::class_<ModelPair>(m, "ModelPair")
      .def(py::init<ModelSpec>(), py::arg("spec"))
      .def_static("fixed", &ModelPair::fixed, py::arg("target"), py::arg("draft"), py::arg("temperature") = 1.0)
      .def_property_readonly("vocab_size", &ModelPair::vocab_size)
      .def("target", [](const ModelPair& p, const TokenSeq& ctx) { return p.query(Which::Target, ctx); },
           py::arg("context") = TokenSeq{})
      .def("draft", [](const ModelPair& p, const TokenSeq& ctx) { return p.query(Which::Draft, ctx); },
           py::arg("context") = TokenSeq{})
      .def("with_temperature", &ModelPair::with_temperature);

  py::class_<TreeTemplate>(m, "TreeTemplate")
      .def_property_readonly("depth", &TreeTemplate::depth)
      .def_property_readonly("size", &TreeTemplate::size)
      .def_property_readonly("label", &TreeTemplate::label)
      .def("is_chain", &TreeTemplate::is_chain);
  m.def("parse_template", &parse_template, py::arg("text"));

  py::class_<SampledTree>(m, "SampledTree")
      .def_static(
          "materialize",
          [](const TreeTemplate& t, const ModelPair& p, const TokenSeq& prefix, const TokenSeq& tokens,
             const std::string& mode) { return SampledTree::materialize(t, p, prefix, tokens, mode_of(mode)); },
          py::arg("template"), py::arg("pair"), py::arg("prefix"), py::arg("tokens"),
          py::arg("mode") = "without_replacement")
      .def("labels", &SampledTree::labels)
      .def("rates", [](const SampledTree& t) {
        std::vector<double> out;
        for (const auto& n : t.nodes()) out.push_back(n.rate);
        return out;
      });

  py::class_<RandomSource>(m, "RandomSource").def(py::init<std::uint64_t>(), py::arg("seed")).def("uniform", &RandomSource::uniform);

  m.def(
      "sample_tree",
      [](const ModelPair& p, const TokenSeq& prefix, const TreeTemplate& t, const std::string& mode, RandomSource& rng) {
        return sample_tree(p, prefix, t, mode_of(mode), rng);
      },
      py::arg("pair"), py::arg("prefix"), py::arg("template"), py::arg("mode"), py::arg("rng"));
  m.def(
      "verify",
      [](const std::string& alg, const SampledTree& tree, RandomSource& rng) {
        return outcome_dict(verify(algorithm_of(alg), tree, rng));
      },
      py::arg("algorithm"), py::arg("tree"), py::arg("rng"));
  m.def(
      "losslessness_report",
      [](const std::string& alg, const ModelPair& p, const TokenSeq& prefix, const TreeTemplate& t,
         const std::string& mode) { return report_dict(losslessness_report(algorithm_of(alg), p, prefix, t, mode_of(mode))); },
      py::arg("algorithm"), py::arg("pair"), py::arg("prefix"), py::arg("template"),
      py::arg("mode") = "without_replacement");
  m.def(
      "expected_acceptance_length",
      [](const std::string& alg, const ModelPair& p, const TokenSeq& prefix, const TreeTemplate& t,
         const std::string& mode) { return expected_acceptance_length(algorithm_of(alg), p, prefix, t, mode_of(mode)).expected; },
      py::arg("algorithm"), py::arg("pair"), py::arg("prefix"), py::arg("template"),
      py::arg("mode") = "without_replacement");

  m.def(
      "run_monte_carlo",
      [](const std::string& config_text) {
        const ExperimentConfig config = parse_config(config_text);
        RunStats stats;
        {
          py::gil_scoped_release release;
          stats = run_monte_carlo(config);
        }
        py::list cells;
        for (const auto& c : stats.cells) cells.append(cell_dict(c));
        return cells;
      },
      py::arg("config_text"));
  m.def(
      "simulate_csv", [](const std::string& config_text) { return simulate_csv(run_monte_carlo(parse_config(config_text))); },
      py::arg("config_text"));
  m.def("selftest", []() {
    py::list out;
    for (const auto& c : selftest_checks()) out.append(py::make_tuple(c.name, c.expected, c.actual, c.passed()));
    return out;
  });
}
