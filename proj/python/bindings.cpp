#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "caan/checkpoint.hpp"
#include "caan/data_io.hpp"
#include "caan/evaluation.hpp"
#include "caan/metrics.hpp"
#include "caan/postprocess.hpp"
#include "caan/training.hpp"
#include "caan/version.hpp"

namespace py = pybind11;
using namespace caan;

namespace {

FeatureSequence features_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw DimensionError("features must be a 2-d array (frames x dim)");
    FeatureSequence x;
    x.frames = static_cast<int>(arr.shape(0));
    x.dim = static_cast<int>(arr.shape(1));
    x.values.assign(arr.data(), arr.data() + arr.size());
    return x;
}

ScoreSequence scores_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 1) throw DimensionError("scores must be a 1-d array");
    ScoreSequence s;
    s.values.assign(arr.data(), arr.data() + arr.size());
    return s;
}

py::array_t<float> array_from_scores(const ScoreSequence& s) {
    // use the shape-container overload explicitly: the (ssize_t, ptr)
    // convenience constructor mis-strides the copy in pybind11 3.0, and a
    // braced single-element shape resolves back to it
    const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(s.values.size())};
    return py::array_t<float>(shape, s.values.data());
}

ShotSegmentation segmentation_from_list(const std::vector<int>& boundaries, int frames) {
    ShotSegmentation seg;
    seg.boundaries = boundaries;
    validate_segmentation(seg, frames);
    return seg;
}

py::dict summary_to_dict(const Summary& sum) {
    py::list mask;
    for (auto m : sum.frame_mask) mask.append(static_cast<bool>(m));
    py::dict d;
    d["selected_shots"] = sum.selected_shots;
    d["frame_mask"] = mask;
    d["budget_frames"] = sum.budget_frames;
    d["selected_frames"] = sum.selected_frames();
    return d;
}

// Thin training/inference wrapper holding a generator/discriminator pair.
class Summarizer {
public:
    explicit Summarizer(TrainingConfig cfg) : cfg_(cfg), trainer_(std::make_unique<Trainer>(cfg)) {}

    static Summarizer from_config(int feature_dim, int base_channels, int score_hidden,
                                  int disc_hidden, float alpha, float lr_generator,
                                  float lr_discriminator, int epochs, bool supervised,
                                  bool non_saturating, std::uint64_t seed) {
        TrainingConfig cfg;
        cfg.feature_dim = feature_dim;
        cfg.base_channels = base_channels;
        cfg.score_hidden = score_hidden;
        cfg.disc_hidden = disc_hidden;
        cfg.alpha = alpha;
        cfg.lr_generator = lr_generator;
        cfg.lr_discriminator = lr_discriminator;
        cfg.epochs = epochs;
        cfg.supervised = supervised;
        cfg.non_saturating_g_loss = non_saturating;
        cfg.seed = seed;
        cfg.validate();
        return Summarizer(cfg);
    }

    std::vector<py::dict> train(const std::vector<py::array_t<float, py::array::c_style | py::array::forcecast>>& videos,
                                const std::optional<std::vector<py::array_t<float, py::array::c_style | py::array::forcecast>>>& gt) {
        std::vector<TrainVideo> items;
        for (std::size_t i = 0; i < videos.size(); ++i) {
            TrainVideo item;
            item.features = features_from_array(videos[i]);
            if (gt) item.gt_scores = scores_from_array((*gt)[i]);
            items.push_back(std::move(item));
        }
        auto history = trainer_->train(items);
        std::vector<py::dict> out;
        for (const auto& r : history) {
            py::dict d;
            d["adv_d"] = r.adv_d;
            d["adv_g"] = r.adv_g;
            d["rec"] = r.rec;
            d["spar"] = r.spar;
            if (r.has_sup) d["sup"] = r.sup;
            d["total"] = r.total;
            out.push_back(std::move(d));
        }
        return out;
    }

    py::array_t<float> scores(const py::array_t<float, py::array::c_style | py::array::forcecast>& features) {
        FeatureSequence x = features_from_array(features);
        validate_feature_sequence(x);
        return array_from_scores(trainer_->generator().generate(x).score_values);
    }

    py::dict summarize(const py::array_t<float, py::array::c_style | py::array::forcecast>& features,
                       double ratio, const std::optional<std::vector<int>>& change_points,
                       bool value_by_length) {
        FeatureSequence x = features_from_array(features);
        validate_feature_sequence(x);
        GenerateResult gen = trainer_->generator().generate(x);
        std::optional<ShotSegmentation> seg;
        if (change_points) seg = segmentation_from_list(*change_points, x.frames);
        Summary sum = scores_to_summary(x, gen.score_values, seg, ratio, value_by_length);
        py::dict d = summary_to_dict(sum);
        d["scores"] = array_from_scores(gen.score_values);
        return d;
    }

    void save(const std::string& path) const {
        save_checkpoint(path, cfg_, trainer_->generator(), trainer_->discriminator());
    }

    static Summarizer load(const std::string& path) {
        LoadedModel model = load_checkpoint(path);
        Summarizer s(model.config);
        // transplant the loaded weights into the fresh trainer
        auto copy_params = [](const std::vector<Tensor>& from, std::vector<Tensor>& to) {
            for (std::size_t i = 0; i < from.size(); ++i) to[i].values() = from[i].values();
        };
        copy_params(model.generator->params(), s.trainer_->generator().params());
        copy_params(model.discriminator->params(), s.trainer_->discriminator().params());
        return s;
    }

    std::int64_t generator_param_count() const { return trainer_->generator().param_count(); }
    py::dict config() const {
        py::dict d;
        d["feature_dim"] = cfg_.feature_dim;
        d["base_channels"] = cfg_.base_channels;
        d["score_hidden"] = cfg_.score_hidden;
        d["disc_hidden"] = cfg_.disc_hidden;
        d["alpha"] = cfg_.alpha;
        d["epochs"] = cfg_.epochs;
        d["seed"] = cfg_.seed;
        return d;
    }

private:
    TrainingConfig cfg_;
    std::unique_ptr<Trainer> trainer_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adversarial video summarization: scoring, segmentation, selection and metrics";
    m.attr("__version__") = kVersion;

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<UndefinedCorrelationError>(m, "UndefinedCorrelationError", PyExc_ValueError);

    m.def(
        "kts_changepoints",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& features,
           int max_segments, std::optional<double> penalty) {
            FeatureSequence x = features_from_array(features);
            return kts_changepoints(x, max_segments, penalty).boundaries;
        },
        py::arg("features"), py::arg("max_segments"), py::arg("penalty") = std::nullopt,
        "Kernel temporal segmentation; returns shot boundaries including 0 and F.");

    m.def("knapsack_select", &knapsack_select, py::arg("values"), py::arg("lengths"),
          py::arg("budget"), "Exact 0/1 knapsack over integer frame capacity.");

    m.def(
        "select_keyshots",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& scores,
           const std::optional<std::vector<int>>& change_points,
           const std::optional<py::array_t<float, py::array::c_style | py::array::forcecast>>& features,
           double ratio, bool value_by_length) {
            ScoreSequence s = scores_from_array(scores);
            if (change_points) {
                ShotSegmentation seg = segmentation_from_list(*change_points, s.frames());
                return summary_to_dict(scores_to_summary(s, seg, ratio, value_by_length));
            }
            if (!features)
                throw ConfigError("select_keyshots needs change_points or features for segmentation");
            FeatureSequence x = features_from_array(*features);
            return summary_to_dict(scores_to_summary(x, s, std::nullopt, ratio, value_by_length));
        },
        py::arg("scores"), py::arg("change_points") = std::nullopt, py::arg("features") = std::nullopt,
        py::arg("ratio") = 0.15, py::arg("value_by_length") = false,
        "Frame scores to a key-shot summary under the length budget.");

    m.def(
        "fscore",
        [](const std::vector<bool>& pred, const std::vector<bool>& gt) {
            std::vector<std::uint8_t> a(pred.begin(), pred.end()), b(gt.begin(), gt.end());
            PRF r = fscore(a, b);
            return py::make_tuple(r.precision, r.recall, r.fscore);
        },
        py::arg("pred_mask"), py::arg("gt_mask"),
        "Precision, recall and harmonic f-score (percent) of two frame masks.");

    m.def(
        "kendall_tau",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& b) {
            return kendall_tau(scores_from_array(a).values, scores_from_array(b).values);
        },
        py::arg("a"), py::arg("b"), "Tie-corrected Kendall tau-b.");

    m.def(
        "spearman_rho",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& b) {
            return spearman_rho(scores_from_array(a).values, scores_from_array(b).values);
        },
        py::arg("a"), py::arg("b"), "Spearman rank correlation with midranks for ties.");

    m.def(
        "generate_synthetic",
        [](int videos, int frames_min, int frames_max, int dim, int segments_min, int segments_max,
           float important_fraction, float noise_sigma, float importance_boost, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.videos = videos;
            spec.frames_min = frames_min;
            spec.frames_max = frames_max;
            spec.dim = dim;
            spec.segments_min = segments_min;
            spec.segments_max = segments_max;
            spec.important_fraction = important_fraction;
            spec.noise_sigma = noise_sigma;
            spec.importance_boost = importance_boost;
            spec.seed = seed;
            std::vector<py::dict> out;
            for (const auto& rec : gen_synthetic(spec)) {
                py::dict d;
                d["id"] = rec.id;
                py::array_t<float> feat({rec.features.frames, rec.features.dim});
                std::copy(rec.features.values.begin(), rec.features.values.end(),
                          feat.mutable_data());
                d["features"] = feat;
                d["gt_scores"] = array_from_scores(*rec.gt_scores);
                d["change_points"] = rec.change_points->boundaries;
                d["user_summaries"] = rec.user_summaries;
                out.push_back(std::move(d));
            }
            return out;
        },
        py::arg("videos") = 20, py::arg("frames_min") = 96, py::arg("frames_max") = 160,
        py::arg("dim") = 64, py::arg("segments_min") = 4, py::arg("segments_max") = 8,
        py::arg("important_fraction") = 0.25f, py::arg("noise_sigma") = 0.1f,
        py::arg("importance_boost") = 3.0f, py::arg("seed") = 0,
        "Synthetic dataset with planted important segments.");

    py::class_<Summarizer>(m, "Summarizer")
        .def(py::init(&Summarizer::from_config), py::arg("feature_dim"),
             py::arg("base_channels") = 64, py::arg("score_hidden") = 1024,
             py::arg("disc_hidden") = 1024, py::arg("alpha") = 0.3f,
             py::arg("lr_generator") = 3e-5f, py::arg("lr_discriminator") = 1e-5f,
             py::arg("epochs") = 100, py::arg("supervised") = false,
             py::arg("non_saturating") = false, py::arg("seed") = 0)
        .def("train", &Summarizer::train, py::arg("videos"), py::arg("gt_scores") = std::nullopt,
             "Adversarial training over a list of frames x dim arrays; returns per-epoch losses.")
        .def("scores", &Summarizer::scores, py::arg("features"),
             "Per-frame importance scores in (0,1).")
        .def("summarize", &Summarizer::summarize, py::arg("features"), py::arg("ratio") = 0.15,
             py::arg("change_points") = std::nullopt, py::arg("value_by_length") = false,
             "Scores plus the key-shot summary under the budget.")
        .def("save", &Summarizer::save, py::arg("path"))
        .def_static("load", &Summarizer::load, py::arg("path"))
        .def_property_readonly("generator_param_count", &Summarizer::generator_param_count)
        .def_property_readonly("config", &Summarizer::config);
}
