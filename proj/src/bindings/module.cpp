#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "refsem/dataset.hpp"
#include "refsem/logic.hpp"
#include "refsem/meaning.hpp"
#include "refsem/net.hpp"
#include "refsem/pipeline.hpp"
#include "refsem/probe.hpp"
#include "refsem/scene.hpp"

namespace py = pybind11;

namespace {

using namespace refsem;

using PyObjectMap = std::map<std::string, std::string>;
using PyWorld = std::vector<PyObjectMap>;

scene::World world_from_py(const PyWorld& objects, const scene::Schema& schema) {
  scene::World world;
  world.objects.reserve(objects.size());
  for (const PyObjectMap& assignment : objects) {
    if (static_cast<int>(assignment.size()) != schema.attribute_count()) {
      throw SchemaError("object must assign every schema attribute");
    }
    scene::Object obj;
    obj.values.resize(schema.attribute_count());
    for (const auto& [name, value] : assignment) {
      const int a = schema.attribute_index(name);
      obj.values[a] = schema.value_index(a, value);
    }
    world.objects.push_back(std::move(obj));
  }
  scene::validate(world, schema);
  return world;
}

PyWorld world_to_py(const scene::World& world, const scene::Schema& schema) {
  PyWorld out;
  out.reserve(world.objects.size());
  for (const scene::Object& obj : world.objects) {
    PyObjectMap assignment;
    for (int a = 0; a < schema.attribute_count(); ++a) {
      assignment[schema.attribute(a).name] =
          schema.attribute(a).values[obj.values[a]];
    }
    out.push_back(std::move(assignment));
  }
  return out;
}

// Keeps the trained parameters together with their config, mirroring what a
// checkpoint file stores.
struct Model {
  net::ModelParams params;
  net::ModelConfig config;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Referring-expression communication model: logical forms, tabular "
      "meanings, and linear message-space operators";

  py::register_exception<Error>(m, "RefsemError");

  py::class_<scene::Schema>(m, "Schema")
      .def(py::init([](const std::vector<
                        std::pair<std::string, std::vector<std::string>>>&
                           attributes) {
             std::vector<scene::Attribute> attrs;
             attrs.reserve(attributes.size());
             for (const auto& [name, values] : attributes) {
               attrs.push_back({name, values});
             }
             return scene::Schema(std::move(attrs));
           }),
           py::arg("attributes"))
      .def_static("standard", &scene::Schema::standard)
      .def_property_readonly("feature_dim", &scene::Schema::feature_dim)
      .def_property_readonly("universe_size", &scene::Schema::universe_size)
      .def("attributes",
           [](const scene::Schema& s) {
             std::vector<std::pair<std::string, std::vector<std::string>>> out;
             for (const scene::Attribute& a : s.attributes()) {
               out.emplace_back(a.name, a.values);
             }
             return out;
           })
      .def("__eq__", [](const scene::Schema& a, const scene::Schema& b) {
        return a == b;
      });

  m.def(
      "generate_world",
      [](std::uint64_t seed, const scene::Schema& schema, int size_min,
         int size_max) {
        return world_to_py(scene::generate_world(seed, schema, size_min,
                                                 size_max),
                           schema);
      },
      py::arg("seed"), py::arg("schema"), py::arg("size_min") = 1,
      py::arg("size_max") = scene::kMaxWorldSize,
      "A world as a list of attribute->value dicts.");

  py::class_<logic::Form>(m, "Form")
      .def("__str__", [](const logic::Form& f) { return logic::print(f); })
      .def("__repr__",
           [](const logic::Form& f) { return "Form(" + logic::print(f) + ")"; })
      .def("__eq__", [](const logic::Form& a,
                        const logic::Form& b) { return a == b; })
      .def_property_readonly("size", &logic::Form::size);

  m.def("parse_form", &logic::parse, py::arg("text"), py::arg("schema"));
  m.def("print_form", &logic::print, py::arg("form"));
  m.def(
      "evaluate",
      [](const logic::Form& form, const PyWorld& world,
         const scene::Schema& schema) {
        return logic::evaluate(form, world_from_py(world, schema), schema);
      },
      py::arg("form"), py::arg("world"), py::arg("schema"),
      "Denotation of the form on a world given as attribute->value dicts.");
  m.def("equivalent", &logic::equivalent, py::arg("a"), py::arg("b"),
        py::arg("schema"));
  m.def(
      "sample_form",
      [](std::uint64_t seed, const scene::Schema& schema, int max_size,
         double negation_prob, double binary_prob) {
        return logic::sample_form(
            seed, schema, {max_size, negation_prob, binary_prob});
      },
      py::arg("seed"), py::arg("schema"), py::arg("max_size") = 7,
      py::arg("negation_prob") = 0.25, py::arg("binary_prob") = 0.45);

  py::class_<meaning::WorldSample>(m, "WorldSample")
      .def_property_readonly("k", &meaning::WorldSample::size)
      .def_property_readonly(
          "seed", [](const meaning::WorldSample& s) { return s.seed; })
      .def("worlds", [](const meaning::WorldSample& s) {
        std::vector<PyWorld> out;
        out.reserve(s.worlds.size());
        for (const scene::World& w : s.worlds) {
          out.push_back(world_to_py(w, s.schema));
        }
        return out;
      });
  m.def("make_sample", &meaning::make_sample, py::arg("seed"),
        py::arg("schema"), py::arg("k"), py::arg("size_min") = 1,
        py::arg("size_max") = scene::kMaxWorldSize);

  py::class_<meaning::MeaningTable>(m, "MeaningTable")
      .def_property_readonly(
          "rows", [](const meaning::MeaningTable& t) { return t.rows; })
      .def("__eq__", [](const meaning::MeaningTable& a,
                        const meaning::MeaningTable& b) { return a == b; });
  m.def("table_of_form", &meaning::table_of_form, py::arg("form"),
        py::arg("sample"));
  m.def(
      "agreement",
      [](const meaning::MeaningTable& pred, const meaning::MeaningTable& ref) {
        const meaning::Agreement a = meaning::agreement(pred, ref);
        return py::make_tuple(a.object_level, a.world_level, a.table_level);
      },
      py::arg("pred"), py::arg("ref"),
      "(object_level, world_level, table_level)");

  py::class_<Model>(m, "Model")
      .def_static(
          "init",
          [](const scene::Schema& schema, int hidden_dim, int decoder_hidden,
             std::uint64_t seed) {
            net::ModelConfig config;
            config.hidden_dim = hidden_dim;
            config.decoder_hidden = decoder_hidden;
            config.feature_dim = schema.feature_dim();
            config.seed = seed;
            return Model{net::init_params(config), config};
          },
          py::arg("schema"), py::arg("hidden_dim") = 64,
          py::arg("decoder_hidden") = 64, py::arg("seed") = 0)
      .def_static("load",
                  [](const std::string& path) {
                    auto [params, config] = net::load_checkpoint(path);
                    return Model{std::move(params), config};
                  },
                  py::arg("path"))
      .def("save",
           [](const Model& model, const std::string& path) {
             net::save_checkpoint(model.params, model.config, path);
           },
           py::arg("path"))
      .def_property_readonly(
          "hidden_dim",
          [](const Model& model) { return model.config.hidden_dim; })
      .def(
          "encode",
          [](const Model& model, const PyWorld& world,
             const std::vector<bool>& target, const scene::Schema& schema) {
            return net::encode(model.params,
                               {world_from_py(world, schema), target}, schema);
          },
          py::arg("world"), py::arg("target"), py::arg("schema"))
      .def(
          "decode_world",
          [](const Model& model, const net::MessageVector& message,
             const PyWorld& world, const scene::Schema& schema) {
            return net::decode_world(model.params, message,
                                     world_from_py(world, schema), schema);
          },
          py::arg("message"), py::arg("world"), py::arg("schema"))
      .def(
          "table_of_message",
          [](const Model& model, const net::MessageVector& message,
             const meaning::WorldSample& sample) {
            return meaning::table_of_message(model.params, message, sample);
          },
          py::arg("message"), py::arg("sample"));

  m.def(
      "fit_unary_operator",
      [](const std::vector<std::pair<net::MessageVector, net::MessageVector>>&
             pairs,
         double ridge) {
        return probe::fit_unary_operator(pairs, ridge).matrix;
      },
      py::arg("pairs"), py::arg("ridge") = 0.0,
      "Least-squares d x d map sending each f to f'.");
  m.def(
      "fit_binary_operator",
      [](const std::vector<std::tuple<net::MessageVector, net::MessageVector,
                                      net::MessageVector>>& triples,
         double ridge) {
        std::vector<probe::BinaryTriple> converted;
        converted.reserve(triples.size());
        for (const auto& [f, g, t] : triples) {
          converted.push_back({f, g, t});
        }
        return probe::fit_binary_operator(converted, ridge,
                                          probe::OpRole::kConjunction)
            .matrix;
      },
      py::arg("triples"), py::arg("ridge") = 0.0);
  m.def(
      "pca_project",
      [](const std::vector<Eigen::VectorXd>& vectors, int k) {
        const probe::PcaResult r = probe::pca_project(vectors, k);
        return py::make_tuple(r.coordinates, r.explained_variance);
      },
      py::arg("vectors"), py::arg("k"),
      "(coordinates, explained_variance_fractions)");

  m.def(
      "load_operator",
      [](const std::string& path) {
        const probe::LinearOperator op = probe::load_operator(path);
        return py::make_tuple(std::string(probe::role_name(op.role)),
                              op.matrix, op.ridge);
      },
      py::arg("path"), "(role, matrix, ridge)");

  m.def("config_digest", [](const std::string& config_json) {
    return pipeline::config_digest(
        pipeline::config_from_json(nlohmann::json::parse(config_json)));
  });
}
