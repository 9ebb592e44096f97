#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "actdet/classify.hpp"
#include "actdet/extract.hpp"
#include "actdet/io.hpp"
#include "actdet/loss.hpp"
#include "actdet/pipeline.hpp"
#include "actdet/scorer.hpp"
#include "actdet/synth.hpp"
#include "actdet/tmas.hpp"

namespace py = pybind11;
using namespace actdet;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

MaskVolume to_mask(const Array& a) {
  if (a.ndim() != 3) throw std::invalid_argument("expected a (frames, height, width) array");
  const Dims d{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
               static_cast<std::size_t>(a.shape(2))};
  return MaskVolume(d, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Dims& d, std::span<const double> v) {
  Array out({d.frames, d.height, d.width});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& e : j) out.append(to_py(e));
      return out;
    }
    default: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
  }
}

json from_py(const py::handle& o) {
  if (o.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(o)) return o.cast<bool>();
  if (py::isinstance<py::int_>(o)) return o.cast<std::int64_t>();
  if (py::isinstance<py::float_>(o)) return o.cast<double>();
  if (py::isinstance<py::str>(o)) return o.cast<std::string>();
  if (py::isinstance<py::dict>(o)) {
    json out = json::object();
    for (const auto& [k, v] : o.cast<py::dict>()) out[py::str(k).cast<std::string>()] = from_py(v);
    return out;
  }
  if (py::isinstance<py::sequence>(o)) {
    json out = json::array();
    for (const auto& v : o.cast<py::sequence>()) out.push_back(from_py(v));
    return out;
  }
  throw py::type_error("cannot convert " + py::repr(o).cast<std::string>() + " to JSON");
}

template <typename T, typename Parse>
std::vector<T> parse_all(const py::list& items, Parse parse) {
  std::vector<T> out;
  for (const auto& i : items) out.push_back(parse(from_py(i)));
  return out;
}

template <typename T>
py::list dump_all(const std::vector<T>& items) {
  py::list out;
  for (const auto& i : items) out.append(to_py(to_json(i)));
  return out;
}

DiceOptions dice_options(bool strict) {
  DiceOptions o;
  o.smoothed_numerator = !strict;
  return o;
}

PipelineConfig config_from(const std::string& text) { return parse_config(text); }

}  // namespace

PYBIND11_MODULE(_actdet, m) {
  m.doc() = "Online activity detection from clip foreground masks";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  m.def("bce_loss", [](const Array& y, const Array& q) { return bce_loss(to_mask(y), to_mask(q)); },
        py::arg("truth"), py::arg("pred"));
  m.def("dice_loss",
        [](const Array& y, const Array& q, bool strict) {
          return dice_loss(to_mask(y), to_mask(q), dice_options(strict));
        },
        py::arg("truth"), py::arg("pred"), py::arg("strict") = false);
  m.def("patch_dice_loss",
        [](const Array& y, const Array& q, std::size_t patch, bool strict) {
          const auto r = patch_dice_loss(to_mask(y), to_mask(q), PatchGrid{patch, patch},
                                         dice_options(strict));
          return py::dict(py::arg("sum") = r.sum, py::arg("mean") = r.mean,
                          py::arg("patches") = r.patches);
        },
        py::arg("truth"), py::arg("pred"), py::arg("patch") = 16, py::arg("strict") = false);
  m.def("pdl_gradient",
        [](const Array& y, const Array& q, std::size_t patch, bool mean) {
          const auto g = pdl_gradient(to_mask(y), to_mask(q), PatchGrid{patch, patch}, DiceOptions{},
                                      mean ? PatchReduction::kMean : PatchReduction::kSum);
          return to_array(g.dims, g.values);
        },
        py::arg("truth"), py::arg("pred"), py::arg("patch") = 16, py::arg("mean") = false);

  m.def("label_components",
        [](const Array& mask, double threshold, int connectivity) {
          if (connectivity != 6 && connectivity != 26) {
            throw std::invalid_argument("connectivity must be 6 or 26");
          }
          const auto l = label_components(binarize(to_mask(mask), threshold),
                                          static_cast<Connectivity>(connectivity));
          py::array_t<std::int32_t> out({l.dims.frames, l.dims.height, l.dims.width});
          std::copy(l.labels.begin(), l.labels.end(), out.mutable_data());
          return py::make_tuple(out, l.count);
        },
        py::arg("mask"), py::arg("threshold") = 0.5, py::arg("connectivity") = 26);

  m.def("read_gbm",
        [](const std::filesystem::path& p) {
          const ClipMask c = read_gbm(p);
          return to_array(c.dims(), c.values());
        },
        py::arg("path"));
  m.def("write_gbm",
        [](const std::filesystem::path& p, const Array& a) { write_gbm(p, to_mask(a)); },
        py::arg("path"), py::arg("mask"));

  m.def("extract",
        [](const Array& mask, const std::string& video_id, std::int64_t clip_index,
           std::int64_t start_frame, const std::string& config) {
          const PipelineConfig cfg = config_from(config);
          return dump_all(extract(to_mask(mask), ClipRef{video_id, clip_index, start_frame},
                                  cfg.extraction, cfg.catalog.size()));
        },
        py::arg("mask"), py::arg("video_id"), py::arg("clip_index") = 0,
        py::arg("start_frame") = 0, py::arg("config") = "");

  m.def("merge_tubelets",
        [](const py::list& tubelets, const std::string& config) {
          const PipelineConfig cfg = config_from(config);
          return dump_all(merge_all(parse_all<Tube>(tubelets, tube_from_json), cfg.merge));
        },
        py::arg("tubelets"), py::arg("config") = "",
        "Merges time-ordered tubelets into tubes.");
  m.def("split_tubes",
        [](const py::list& tubes, const std::string& config) {
          const PipelineConfig cfg = config_from(config);
          return dump_all(
              action_split(parse_all<Tube>(tubes, tube_from_json), cfg.catalog.size(), cfg.split));
        },
        py::arg("tubes"), py::arg("config") = "");

  m.def("score",
        [](const py::list& detections, const py::list& truth,
           const std::map<std::string, FrameIndex>& video_frames, const std::string& config) {
          PipelineConfig cfg = config_from(config);
          cfg.scoring.video_frames = video_frames;
          const auto report =
              per_class_report(parse_all<ActionInstance>(detections, instance_from_json),
                               parse_all<GroundTruthInstance>(truth, ground_truth_from_json),
                               cfg.scoring);
          return to_py(to_json(report));
        },
        py::arg("detections"), py::arg("ground_truth"),
        py::arg("video_frames") = std::map<std::string, FrameIndex>{}, py::arg("config") = "");

  m.def("run",
        [](const std::filesystem::path& masks, const std::filesystem::path& scores,
           bool oracle, const std::string& config) {
          const PipelineConfig cfg = config_from(config);
          ScoreSource source;
          std::ifstream in(scores);
          if (!in) throw std::runtime_error("cannot open " + scores.string());
          if (oracle) {
            source = OracleScores{read_ground_truth(in), 0.5};
          } else {
            source = read_score_table(in);
          }
          StreamResult r;
          {
            py::gil_scoped_release release;
            r = run_stream(cfg, DirectoryClipSource(masks), source);
          }
          return py::make_tuple(dump_all(r.instances), to_py(to_json(r.report)));
        },
        py::arg("masks"), py::arg("scores"), py::arg("oracle") = false, py::arg("config") = "",
        "Runs the online pipeline over a mask directory. Returns (instances, throughput).");

  m.def("synth",
        [](const std::filesystem::path& out, std::size_t videos, std::size_t actors,
           FrameIndex duration, double noise, std::uint64_t seed, const std::string& config) {
          const PipelineConfig cfg = config_from(config);
          RandomScenarioOptions opts;
          opts.actors = actors;
          opts.duration = duration;
          opts.noise = noise;
          opts.num_classes = cfg.catalog.size();
          std::vector<SyntheticVideo> rendered;
          for (std::size_t i = 0; i < videos; ++i) {
            rendered.push_back(
                render(random_scenario(seed + i, "video_" + std::to_string(i), opts, cfg)));
          }
          write_synthetic(out, rendered, cfg);
        },
        py::arg("out"), py::arg("videos") = 1, py::arg("actors") = 1, py::arg("duration") = 1000,
        py::arg("noise") = 0.0, py::arg("seed") = 0, py::arg("config") = "",
        "Writes random synthetic videos (masks, gt.json, videos.json, scores.csv).");
}
