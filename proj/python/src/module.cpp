#include "orthotail/augment.hpp"
#include "orthotail/covstream.hpp"
#include "orthotail/data.hpp"
#include "orthotail/error.hpp"
#include "orthotail/eval.hpp"
#include "orthotail/experiment.hpp"
#include "orthotail/linalg.hpp"
#include "orthotail/manifold.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
namespace ot = orthotail;

namespace {

py::dict outcome_dict(const ot::RunOutcome& r) {
  py::dict d;
  const auto& p = r.robustness.profile;
  d["train_class_acc"] = r.train_class_acc;
  d["train_balanced_acc"] = r.train_balanced_acc;
  d["test_balanced_acc"] = r.test_balanced_acc;
  d["fractions"] = p.schedule.fractions;
  d["distances"] = p.schedule.distances;
  d["rif"] = p.rif;
  d["noisy_acc"] = p.noisy_acc;
  d["lambda_max"] = r.robustness.direction.lambda_max;
  d["lambda_mean"] = r.robustness.direction.lambda_mean;
  py::list epochs;
  for (const auto& e : r.train.log.epochs) {
    py::dict row;
    row["epoch"] = e.epoch;
    row["loss"] = e.loss;
    row["lr"] = e.lr;
    row["our_active"] = e.our_active;
    row["perturbed_columns"] = e.perturbed_columns;
    epochs.append(row);
  }
  d["epochs"] = epochs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_orthotail, m) {
  m.doc() = "Orthogonal uncertainty representation for long-tailed classification";

  py::register_exception<ot::Error>(m, "OrthotailError", PyExc_ValueError);

  m.def("sym_eig", [](const ot::Matrix& a) {
        const auto e = ot::sym_eig(ot::SymMatrix(a));
        return py::make_tuple(e.values, e.vectors);
      },
      py::arg("matrix"), "Eigenvalues (descending) and sign-normalized eigenvectors (columns).");
  m.def("smallest_eigvec", [](const ot::Matrix& a) {
        const auto s = ot::smallest_eigvec(ot::SymMatrix(a));
        return py::make_tuple(s.vector, s.value);
      },
      py::arg("matrix"));
  m.def("top_k_mean_eigval", [](const ot::Matrix& a, std::size_t k) { return ot::top_k_mean_eigval(ot::SymMatrix(a), k); },
        py::arg("matrix"), py::arg("k") = ot::kLambdaMeanTopK);

  py::class_<ot::OrthoDirection>(m, "OrthoDirection")
      .def_readonly("u", &ot::OrthoDirection::u)
      .def_readonly("lambda_min", &ot::OrthoDirection::lambda_min)
      .def_readonly("lambda_max", &ot::OrthoDirection::lambda_max)
      .def_readonly("lambda_mean", &ot::OrthoDirection::lambda_mean)
      .def_readonly("centroid", &ot::OrthoDirection::centroid)
      .def("__repr__", [](const ot::OrthoDirection& d) {
        return "<OrthoDirection dim=" + std::to_string(d.u.size()) + " lambda_min=" + std::to_string(d.lambda_min) +
               " lambda_max=" + std::to_string(d.lambda_max) + ">";
      });

  m.def("orthogonal_direction",
        [](const ot::Matrix& x, bool centered) { return ot::orthogonal_direction(ot::SampleMatrix(x), centered); },
        py::arg("x"), py::arg("centered") = true, "Direction of least variance of the columns of x.");
  m.def("shift_manifold",
        [](const ot::Matrix& x, const ot::Vector& u, double distance) {
          return ot::shift_manifold(ot::SampleMatrix(x), u, distance).data();
        },
        py::arg("x"), py::arg("u"), py::arg("distance"));
  m.def("batch_covariance", [](const ot::Matrix& z) { return ot::batch_covariance(z).matrix(); }, py::arg("batch"));

  py::class_<ot::CovAccumulator>(m, "CovAccumulator")
      .def(py::init<Eigen::Index, int>(), py::arg("dim"), py::arg("epoch_tag") = 0)
      .def("accumulate", [](ot::CovAccumulator& a, const ot::Matrix& z) -> ot::CovAccumulator& { return a.accumulate(z); },
           py::arg("batch"), py::return_value_policy::reference_internal)
      .def("merge", &ot::CovAccumulator::merge, py::arg("other"), py::return_value_policy::reference_internal)
      .def("finalize", [](const ot::CovAccumulator& a) { return a.finalize().matrix(); })
      .def("reset", &ot::CovAccumulator::reset, py::arg("epoch_tag"))
      .def("save", py::overload_cast<const std::filesystem::path&>(&ot::CovAccumulator::save, py::const_), py::arg("path"))
      .def_static("load", py::overload_cast<const std::filesystem::path&>(&ot::CovAccumulator::load), py::arg("path"))
      .def_property_readonly("dim", &ot::CovAccumulator::dim)
      .def_property_readonly("sample_count", &ot::CovAccumulator::sample_count)
      .def_property_readonly("epoch_tag", &ot::CovAccumulator::epoch_tag)
      .def_property_readonly("gram_sum", &ot::CovAccumulator::gram_sum);

  m.def("our_transform",
        [](const ot::Matrix& z, const ot::Vector& u, double lambda_mean, double mu, std::uint64_t seed) {
          ot::Rng rng(seed);
          return ot::our_transform(ot::SampleMatrix(z), u, lambda_mean, mu, rng).data();
        },
        py::arg("features"), py::arg("u"), py::arg("lambda_mean"), py::arg("mu"), py::arg("seed"),
        "Adds mu * lambda_mean * eps_i * u to every column, eps_i standard normal from a seeded mt19937_64.");
  m.def("select_tail_classes", [](const std::vector<std::size_t>& counts, double ratio) {
        const auto mask = ot::select_tail_classes(counts, ratio);
        return std::vector<bool>(mask.begin(), mask.end());
      },
      py::arg("counts"), py::arg("ratio") = 0.2);

  m.def("rif", [](const std::vector<double>& base, const std::vector<double>& noisy) { return ot::rif(base, noisy); },
        py::arg("base_acc"), py::arg("noisy_acc"));
  m.def("longtail_counts", &ot::longtail_counts, py::arg("num_classes"), py::arg("n_max"), py::arg("imbalance"));
  m.def("synth_gaussian_longtail",
        [](int num_classes, Eigen::Index dim, std::size_t n_max, double imbalance, double spread, std::uint64_t seed) {
          const auto ds = ot::synth_gaussian_longtail({num_classes, dim, n_max, imbalance, spread, seed});
          return py::make_tuple(ds.samples.data(), ds.samples.labels(), ds.counts);
        },
        py::arg("num_classes") = 10, py::arg("dim") = 20, py::arg("n_max") = 500, py::arg("imbalance") = 100.0,
        py::arg("cluster_spread") = 0.3, py::arg("seed") = 0, "Returns (x, labels, counts).");
  m.def("default_fractions", &ot::default_fractions);

  m.def("run_single",
        [](const std::string& config_json, std::uint64_t seed, bool use_our) {
          const auto cfg = ot::config_from_json(nlohmann::json::parse(config_json));
          cfg.validate();
          const auto data = ot::make_data(cfg, seed);
          ot::RunOutcome r = [&] {
            py::gil_scoped_release release;
            return ot::run_single(cfg, data, seed, use_our);
          }();
          return outcome_dict(r);
        },
        py::arg("config_json") = "{}", py::arg("seed") = 0, py::arg("use_our") = true,
        "Trains one model from a JSON experiment config and returns accuracies and the robustness profile.");
}
