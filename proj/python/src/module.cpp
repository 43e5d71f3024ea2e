// Python bindings for the core ops. Arrays are float64 numpy arrays in the
// library's layouts: samples C x T x J x M, network input [N*M, C, T, J].

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "tegcn/checkpoint.hpp"
#include "tegcn/pipeline.hpp"
#include "tegcn/synth.hpp"
#include "tegcn/train.hpp"

namespace py = pybind11;
using namespace tegcn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  if (shape.empty()) shape = {1};
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::list to_arrays(const std::vector<Tensor>& ts) {
  py::list out;
  for (const auto& t : ts) out.append(to_array(t));
  return out;
}

py::dict graph_dict(const SkeletonGraph& g) {
  py::dict d;
  d["num_joints"] = g.num_joints;
  d["center"] = g.center;
  py::list bones;
  for (const auto& b : g.bones) bones.append(py::make_tuple(b.source, b.target));
  d["bones"] = bones;
  d["hops"] = g.hops;
  d["raw"] = to_arrays({g.raw.begin(), g.raw.end()});
  d["normalized"] = to_arrays({g.normalized.begin(), g.normalized.end()});
  d["adjacency"] = to_array(g.adjacency());
  return d;
}

SynthParams synth_params(std::size_t classes, std::size_t per_class, std::size_t joints, std::size_t frames,
                         std::size_t bodies, double noise, std::uint64_t seed) {
  SynthParams p;
  p.classes = classes;
  p.samples_per_class = per_class;
  p.joints = joints;
  p.frames = frames;
  p.bodies = bodies;
  p.noise = noise;
  p.seed = seed;
  return p;
}

Dataset to_dataset(const std::vector<Array>& xs, const std::vector<int>& labels, std::size_t num_classes) {
  if (xs.size() != labels.size()) throw ConfigError("samples and labels differ in length");
  Dataset d;
  d.num_classes = num_classes;
  for (std::size_t i = 0; i < xs.size(); ++i) d.samples.push_back(Sample{to_tensor(xs[i]), labels[i], std::to_string(i)});
  return d;
}

py::dict gradcheck_dict(const GradCheckResult& r) {
  py::dict d;
  d["max_rel_error"] = r.max_rel_error;
  d["worst_parameter"] = r.worst_parameter;
  d["worst_index"] = r.worst_index;
  d["analytic"] = r.analytic;
  d["numeric"] = r.numeric;
  d["coordinates"] = r.coordinates;
  return d;
}

ModelConfig config_from(const py::object& cfg) {
  py::module_ json = py::module_::import("json");
  const std::string text = py::isinstance<py::str>(cfg) ? cfg.cast<std::string>() : json.attr("dumps")(cfg).cast<std::string>();
  return ModelConfig::from_json(text);
}

py::object config_to_dict(const ModelConfig& c) { return py::module_::import("json").attr("loads")(c.to_json()); }

class PyModel {
 public:
  explicit PyModel(const ModelConfig& c) : net_(std::make_unique<Network>(c)) {}
  explicit PyModel(std::unique_ptr<Network> n) : net_(std::move(n)) {}

  Network& net() { return *net_; }

  Array predict(const Array& x) { return to_array(net_->predict(to_tensor(x))); }
  Array predict_samples(const std::vector<Array>& samples) {
    std::vector<Tensor> ts;
    for (const auto& s : samples) ts.push_back(to_tensor(s));
    std::vector<const Tensor*> ptrs;
    for (const auto& t : ts) ptrs.push_back(&t);
    return to_array(net_->predict(batch_input(ptrs)));
  }
  py::list adjacencies(const Array& x) {
    py::list out;
    for (const auto& layer : net_->adjacencies(to_tensor(x))) out.append(to_arrays(layer));
    return out;
  }
  std::vector<std::string> parameter_names() {
    std::vector<std::string> names;
    for (Parameter* p : net_->parameters()) names.push_back(p->name);
    return names;
  }
  Parameter& find(const std::string& name) {
    for (Parameter* p : net_->parameters())
      if (p->name == name) return *p;
    throw py::key_error(name);
  }
  Array get(const std::string& name) { return to_array(find(name).value); }
  void set(const std::string& name, const Array& v) {
    Parameter& p = find(name);
    Tensor t = to_tensor(v);
    if (t.shape() != p.value.shape()) {
      throw DimensionError(name + " has shape " + shape_str(p.value.shape()) + ", got " + shape_str(t.shape()));
    }
    p.value = std::move(t);
  }

 private:
  std::unique_ptr<Network> net_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "TE-GCN core: temporal enhanced graph convolution for skeleton action recognition";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<DataError> data_error(m, "DataError", PyExc_IOError);
  static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const DataError& e) {
      PyErr_SetString(data_error.ptr(), e.what());
    } catch (const NumericError& e) {
      PyErr_SetString(numeric_error.ptr(), e.what());
    }
  });

  // graphs
  m.def(
      "build_partitions",
      [](const EdgeList& edges, std::size_t joints, std::size_t center) {
        return graph_dict(build_partitions(edges, joints, center));
      },
      py::arg("edges"), py::arg("num_joints"), py::arg("center"));
  m.def("ntu_graph", [] { return graph_dict(ntu_graph()); });
  m.def("chain_graph", [](std::size_t n) { return graph_dict(chain_graph(n)); }, py::arg("num_joints"));
  m.def("ntu_edges", &ntu_edges);

  // temporal relevance normalization
  m.def(
      "normalize_scores",
      [](const Array& raw) {
        Tape tape;
        return to_array(normalize_scores(tape.constant(to_tensor(raw))).value());
      },
      py::arg("raw"), "row-wise softmax over the last axis");

  // data
  m.def(
      "synth_dataset",
      [](std::string kind, std::size_t classes, std::size_t per_class, std::size_t joints, std::size_t frames,
         std::size_t bodies, double noise, std::uint64_t seed) {
        SynthParams p = synth_params(classes, per_class, joints, frames, bodies, noise, seed);
        std::vector<SkeletonSequence> seqs;
        if (kind == "templates") seqs = synth_dataset(p);
        else if (kind == "long-range") seqs = synth_long_range_dataset(p);
        else throw ConfigError("unknown synthetic kind '" + kind + "'");
        py::list xs;
        std::vector<int> labels;
        for (const auto& s : seqs) {
          xs.append(to_array(s.data));
          labels.push_back(s.label);
        }
        return py::make_tuple(xs, labels);
      },
      py::arg("kind") = "templates", py::arg("classes") = 4, py::arg("samples_per_class") = 32, py::arg("joints") = 5,
      py::arg("frames") = 32, py::arg("bodies") = 1, py::arg("noise") = 0.05, py::arg("seed") = 1);
  m.def(
      "preprocess_skeleton",
      [](const std::string& text, std::size_t fixed_len, double lo, double hi, std::size_t joints,
         std::size_t spine) {
        PreprocessOptions o;
        o.fixed_len = fixed_len;
        o.motion = {lo, hi};
        o.spine_joint = spine;
        SkeletonSequence s = preprocess_clip(parse_skeleton(text, joints), o);
        return py::make_tuple(to_array(s.data), s.valid_frames);
      },
      py::arg("text"), py::arg("fixed_len") = 300, py::arg("motion_lo") = 0.1, py::arg("motion_hi") = 2.0,
      py::arg("joints") = kNtuJoints, py::arg("spine_joint") = 1,
      "parse .skeleton text, filter bodies, center and pad; returns (C x T x J x M array, valid frames)");
  m.def(
      "derive_bone", [](const Array& x, const EdgeList& edges, std::size_t joints, std::size_t center) {
        return to_array(derive_bone(to_tensor(x), build_partitions(edges, joints, center)));
      },
      py::arg("joints_data"), py::arg("edges"), py::arg("num_joints"), py::arg("center"));
  m.def("derive_motion", [](const Array& x) { return to_array(derive_motion(to_tensor(x))); });
  m.def(
      "batch_input",
      [](const std::vector<Array>& samples) {
        std::vector<Tensor> ts;
        for (const auto& s : samples) ts.push_back(to_tensor(s));
        std::vector<const Tensor*> ptrs;
        for (const auto& t : ts) ptrs.push_back(&t);
        return to_array(batch_input(ptrs));
      },
      py::arg("samples"));

  // models
  m.def(
      "backbone_layers",
      [](std::vector<std::size_t> channels, std::vector<std::size_t> strides, std::size_t insertion,
         const std::string& insertion_mode, bool replace_all, std::size_t width_div, std::size_t in_channels) {
        BackboneOptions o;
        if (!channels.empty()) o.channels = channels;
        if (!strides.empty()) o.strides = strides;
        o.insertion = insertion;
        o.insertion_mode = parse_temporal_mode(insertion_mode);
        o.replace_all = replace_all;
        o.width_div = width_div;
        py::list out;
        for (const auto& l : backbone_layers(o, in_channels)) {
          py::dict d;
          d["in"] = l.in_channels;
          d["out"] = l.out_channels;
          d["stride"] = l.stride;
          d["mode"] = std::string(temporal_mode_name(l.mode));
          out.append(d);
        }
        return out;
      },
      py::arg("channels") = std::vector<std::size_t>{}, py::arg("strides") = std::vector<std::size_t>{},
      py::arg("insertion") = 9, py::arg("insertion_mode") = "both", py::arg("replace_all") = false,
      py::arg("width_div") = 1, py::arg("in_channels") = 3);

  py::class_<PyModel>(m, "Model")
      .def(py::init([](const py::object& cfg) { return std::make_unique<PyModel>(config_from(cfg)); }),
           py::arg("config"), "config: dict or JSON string with the model config keys")
      .def_static(
          "load", [](const std::string& path) { return std::make_unique<PyModel>(network_from_checkpoint(path)); },
          py::arg("path"))
      .def(
          "save",
          [](PyModel& self, const std::string& path) { save_checkpoint(path, self.net(), CheckpointMeta{}); },
          py::arg("path"))
      .def_property_readonly("config", [](PyModel& self) { return config_to_dict(self.net().config()); })
      .def("predict", &PyModel::predict, py::arg("x"), "eval-mode logits for [N*M, C, T, J] input")
      .def("predict_samples", &PyModel::predict_samples, py::arg("samples"))
      .def("adjacencies", &PyModel::adjacencies, py::arg("x"))
      .def("layer_shapes",
           [](PyModel& self, std::size_t batch) {
             py::list out;
             for (const auto& s : self.net().layer_shapes(batch)) out.append(py::tuple(py::cast(s)));
             return out;
           }, py::arg("batch") = 1)
      .def("parameter_names", &PyModel::parameter_names)
      .def("get_parameter", &PyModel::get, py::arg("name"))
      .def("set_parameter", &PyModel::set, py::arg("name"), py::arg("value"))
      .def(
          "train",
          [](PyModel& self, const std::vector<Array>& xs, const std::vector<int>& labels, std::size_t epochs,
             double lr, std::vector<std::size_t> decay_epochs, std::size_t batch_size, double weight_decay,
             double momentum, std::uint64_t seed, bool single_thread) {
            TrainConfig t;
            t.epochs = epochs;
            t.lr = lr;
            t.decay_epochs = std::move(decay_epochs);
            t.batch_size = batch_size;
            t.weight_decay = weight_decay;
            t.momentum = momentum;
            t.seed = seed;
            t.single_thread = single_thread;
            Dataset d = to_dataset(xs, labels, self.net().config().num_classes);
            TrainResult r;
            {
              py::gil_scoped_release release;
              r = train(self.net(), t, d, nullptr);
            }
            py::list hist;
            for (const auto& e : r.history) {
              py::dict row;
              row["epoch"] = e.epoch;
              row["lr"] = e.lr;
              row["train_loss"] = e.train_loss;
              row["train_acc"] = e.train_acc;
              hist.append(row);
            }
            return hist;
          },
          py::arg("samples"), py::arg("labels"), py::arg("epochs") = 10, py::arg("lr") = 0.1,
          py::arg("decay_epochs") = std::vector<std::size_t>{}, py::arg("batch_size") = 16,
          py::arg("weight_decay") = 0.0005, py::arg("momentum") = 0.9, py::arg("seed") = 1,
          py::arg("single_thread") = true)
      .def(
          "evaluate",
          [](PyModel& self, const std::vector<Array>& xs, const std::vector<int>& labels) {
            Dataset d = to_dataset(xs, labels, self.net().config().num_classes);
            EvalResult r = evaluate(self.net(), d, 64, true);
            py::dict out;
            out["accuracy"] = r.accuracy;
            out["correct"] = r.correct;
            out["total"] = r.total;
            out["predictions"] = r.predictions;
            out["scores"] = r.scores;
            return out;
          },
          py::arg("samples"), py::arg("labels"));

  m.def(
      "gradcheck",
      [](const py::object& cfg, std::size_t batch, std::uint64_t seed, double eps) {
        return gradcheck_dict(check_network_gradients(config_from(cfg), batch, seed, eps));
      },
      py::arg("config"), py::arg("batch") = 2, py::arg("seed") = 1, py::arg("eps") = 1e-5);

  // training schedule and fusion
  m.def(
      "lr_at",
      [](double lr, std::vector<std::size_t> decay_epochs, double factor, std::size_t epoch) {
        TrainConfig c;
        c.lr = lr;
        c.decay_epochs = std::move(decay_epochs);
        c.decay_factor = factor;
        c.validate();
        return lr_at(c, epoch);
      },
      py::arg("lr") = 0.1, py::arg("decay_epochs") = std::vector<std::size_t>{40, 80, 120},
      py::arg("decay_factor") = 0.1, py::arg("epoch") = 0);
  m.def(
      "fuse_streams",
      [](std::vector<std::vector<double>> scores, std::vector<double> weights) {
        if (weights.empty()) weights.assign(scores.size(), 1.0);
        return fuse_streams(StreamScores{std::move(scores), std::move(weights)});
      },
      py::arg("scores"), py::arg("weights") = std::vector<double>{});
  m.def("softmax", [](std::vector<double> logits) { return softmax(logits); });
  m.def("argmax", [](std::vector<double> v) { return argmax(v); });
}
