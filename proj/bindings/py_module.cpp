// Python bindings for the dacxai core library.
//
// Conversion policy: NumArray exposes the buffer protocol and converts
// implicitly from any numpy array (C-contiguous doubles, copied on the way
// in), so functions declared on NumArray accept numpy arrays directly and
// results support np.asarray() without a copy helper. Functions that take
// std::span parameters are wrapped by vector-taking lambdas. Long-running
// entry points (training, sweeps, the pipeline driver) release the GIL.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "dacxai/corpus.hpp"
#include "dacxai/dac.hpp"
#include "dacxai/explain.hpp"
#include "dacxai/global_xai.hpp"
#include "dacxai/io.hpp"
#include "dacxai/metrics.hpp"
#include "dacxai/model.hpp"
#include "dacxai/nn.hpp"
#include "dacxai/num_array.hpp"
#include "dacxai/pipeline.hpp"

namespace py = pybind11;
using namespace dacxai;

namespace {

NumArray numarray_from_buffer(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  std::vector<std::size_t> shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i)
    shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
  NumArray out(std::move(shape));
  const double* src = a.data();
  std::copy(src, src + out.numel(), out.data.begin());
  return out;
}

py::buffer_info numarray_buffer(NumArray& a) {
  std::vector<py::ssize_t> shape(a.shape.begin(), a.shape.end());
  std::vector<py::ssize_t> strides(shape.size());
  py::ssize_t step = static_cast<py::ssize_t>(sizeof(double));
  for (std::size_t i = shape.size(); i-- > 0;) {
    strides[i] = step;
    step *= shape[i];
  }
  return py::buffer_info(a.data.data(), sizeof(double), py::format_descriptor<double>::format(),
                         static_cast<py::ssize_t>(shape.size()), shape, strides);
}

py::array_t<double> numarray_to_numpy(const NumArray& a) {
  std::vector<py::ssize_t> shape(a.shape.begin(), a.shape.end());
  py::array_t<double> out(shape);
  std::copy(a.data.begin(), a.data.end(), out.mutable_data());
  return out;
}

std::string hex_digest(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Abstaining multi-task text classification with local and global "
      "explainability: corpus synthesis, DAC training, attribution, ALE/PCA "
      "cohort analysis, scoring, and the end-to-end pipeline driver.";
  m.attr("__version__") = tool_version();

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SaturationError>(m, "SaturationError", PyExc_RuntimeError);

  // ---------------------------------------------------------------- NumArray
  py::class_<NumArray>(m, "NumArray", py::buffer_protocol(),
                       "Dense row-major double array (rank 1-3); accepts and "
                       "exposes numpy arrays.")
      .def(py::init<>())
      .def(py::init(&numarray_from_buffer), py::arg("array"))
      .def_buffer(&numarray_buffer)
      .def_readonly("shape", &NumArray::shape)
      .def("numpy", &numarray_to_numpy, "Copy into a fresh numpy array.")
      .def("__len__", [](const NumArray& a) { return a.rows(); })
      .def("__repr__", [](const NumArray& a) {
        std::string s = "NumArray(shape=[";
        for (std::size_t i = 0; i < a.shape.size(); ++i)
          s += (i ? ", " : "") + std::to_string(a.shape[i]);
        return s + "])";
      });
  py::implicitly_convertible<py::array, NumArray>();

  // ------------------------------------------------------------------ corpus
  py::enum_<Provenance>(m, "Provenance")
      .value("clean", Provenance::clean)
      .value("label_noise", Provenance::label_noise)
      .value("conflicting", Provenance::conflicting)
      .value("empty_evidence", Provenance::empty_evidence);

  py::class_<TaskSchema>(m, "TaskSchema")
      .def(py::init<>())
      .def_readwrite("task_name", &TaskSchema::task_name)
      .def_readwrite("class_names", &TaskSchema::class_names)
      .def_readwrite("keyword_map", &TaskSchema::keyword_map)
      .def_readwrite("hierarchy", &TaskSchema::hierarchy)
      .def("n_classes", &TaskSchema::n_classes)
      .def("class_index", &TaskSchema::class_index, py::arg("name"))
      .def("validate", &TaskSchema::validate);

  py::class_<CorpusSpec>(m, "CorpusSpec")
      .def(py::init<>())
      .def_readwrite("schemas", &CorpusSpec::schemas)
      .def_readwrite("n_reports", &CorpusSpec::n_reports)
      .def_readwrite("max_len", &CorpusSpec::max_len)
      .def_readwrite("noise_rate", &CorpusSpec::noise_rate)
      .def_readwrite("conflict_rate", &CorpusSpec::conflict_rate)
      .def_readwrite("empty_rate", &CorpusSpec::empty_rate)
      .def_readwrite("class_prior", &CorpusSpec::class_prior)
      .def_readwrite("rng_seed", &CorpusSpec::rng_seed)
      .def("validate", &CorpusSpec::validate);

  py::class_<TokenizedReport>(m, "TokenizedReport")
      .def(py::init<>())
      .def_readwrite("report_id", &TokenizedReport::report_id)
      .def_readwrite("tokens", &TokenizedReport::tokens)
      .def_readwrite("labels", &TokenizedReport::labels)
      .def_readwrite("provenance", &TokenizedReport::provenance)
      .def("__repr__", [](const TokenizedReport& r) {
        return "TokenizedReport(report_id=" + std::to_string(r.report_id) + ", tokens=" +
               std::to_string(r.tokens.size()) + ", provenance=" + provenance_name(r.provenance) +
               ")";
      });

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<>())
      .def_readonly_static("pad_index", &Vocabulary::pad_index)
      .def_property_readonly_static("pad_word",
                                    [](py::object) { return std::string(Vocabulary::pad_word); })
      .def("add", &Vocabulary::add, py::arg("word"))
      .def("index_of", &Vocabulary::index_of, py::arg("word"))
      .def("word", &Vocabulary::word, py::arg("index"))
      .def_readonly("words", &Vocabulary::index_to_word)
      .def("__len__", &Vocabulary::size);

  py::class_<Corpus>(m, "Corpus")
      .def(py::init<>())
      .def_readwrite("vocab", &Corpus::vocab)
      .def_readwrite("reports", &Corpus::reports)
      .def_readwrite("schemas", &Corpus::schemas)
      .def_readwrite("max_len", &Corpus::max_len);

  py::class_<SplitResult>(m, "SplitResult")
      .def(py::init<>())
      .def_readwrite("train", &SplitResult::train)
      .def_readwrite("val", &SplitResult::val)
      .def_readwrite("test", &SplitResult::test);

  m.def("generate_corpus", &generate_corpus, py::arg("spec"),
        py::call_guard<py::gil_scoped_release>(),
        "Synthesize a tokenized corpus (reports already reversed + trimmed).");
  m.def(
      "preprocess",
      [](const std::vector<int>& tokens, std::size_t max_len) {
        return preprocess(tokens, max_len);
      },
      py::arg("tokens"), py::arg("max_len"),
      "Reverse, then keep the first max_len of the reversed sequence.");
  m.def("split", &split, py::arg("reports"), py::arg("fractions"), py::arg("seed"),
        "Stratified train/val/test split with the given fractions.");

  // --------------------------------------------------------------- model cfg
  py::class_<HeadSpec>(m, "HeadSpec")
      .def(py::init<>())
      .def(py::init([](std::string name, int n_classes) {
             return HeadSpec{std::move(name), n_classes};
           }),
           py::arg("name"), py::arg("n_classes"))
      .def_readwrite("name", &HeadSpec::name)
      .def_readwrite("n_classes", &HeadSpec::n_classes);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("embed_dim", &ModelConfig::embed_dim)
      .def_readwrite("filter_sizes", &ModelConfig::filter_sizes)
      .def_readwrite("n_filters", &ModelConfig::n_filters)
      .def_readwrite("hidden_dim", &ModelConfig::hidden_dim)
      .def_readwrite("tasks", &ModelConfig::tasks)
      .def_readwrite("ntask_dummy", &ModelConfig::ntask_dummy)
      .def_readwrite("init_seed", &ModelConfig::init_seed)
      .def("concat_dim", &ModelConfig::concat_dim)
      .def("max_filter", &ModelConfig::max_filter)
      .def("validate", &ModelConfig::validate);

  py::class_<LayerParams>(m, "LayerParams")
      .def(py::init<>())
      .def_readwrite("embedding", &LayerParams::embedding)
      .def_readwrite("conv_w", &LayerParams::conv_w)
      .def_readwrite("conv_b", &LayerParams::conv_b)
      .def_readwrite("dense_w", &LayerParams::dense_w)
      .def_readwrite("dense_b", &LayerParams::dense_b)
      .def_readwrite("head_w", &LayerParams::head_w)
      .def_readwrite("head_b", &LayerParams::head_b)
      .def_readwrite("dummy_w", &LayerParams::dummy_w)
      .def_readwrite("dummy_b", &LayerParams::dummy_b);

  m.def("init_params", &init_params, py::arg("config"),
        "He/Xavier-style deterministic initialization from config.init_seed.");

  // --------------------------------------------------------------------- dac
  py::enum_<TuneMode>(m, "TuneMode")
      .value("accuracy_only", TuneMode::accuracy_only)
      .value("abstention_only", TuneMode::abstention_only)
      .value("mixed", TuneMode::mixed);

  py::class_<DacConfig>(m, "DacConfig")
      .def(py::init<>())
      .def_readwrite("alpha_init", &DacConfig::alpha_init)
      .def_readwrite("dummy_alpha", &DacConfig::dummy_alpha)
      .def_readwrite("accuracy_target", &DacConfig::accuracy_target)
      .def_readwrite("accuracy_band", &DacConfig::accuracy_band)
      .def_readwrite("max_epochs", &DacConfig::max_epochs)
      .def_readwrite("learning_rate", &DacConfig::learning_rate)
      .def_readwrite("batch_size", &DacConfig::batch_size)
      .def_readwrite("momentum", &DacConfig::momentum)
      .def_readwrite("gamma", &DacConfig::gamma)
      .def_readwrite("alpha_min", &DacConfig::alpha_min)
      .def_readwrite("alpha_max", &DacConfig::alpha_max)
      .def_readwrite("seed", &DacConfig::seed)
      .def_readwrite("mode", &DacConfig::mode)
      .def("validate", &DacConfig::validate, py::arg("n_tasks"))
      .def("alphas_for", &DacConfig::alphas_for, py::arg("n_tasks"));

  py::class_<DacLoss>(m, "DacLoss")
      .def_readonly("loss", &DacLoss::loss)
      .def_readonly("dprobs", &DacLoss::dprobs);

  py::class_<LogitLoss>(m, "LogitLoss")
      .def_readonly("loss", &LogitLoss::loss)
      .def_readonly("dlogits", &LogitLoss::dlogits);

  py::class_<NTaskLoss>(m, "NTaskLoss")
      .def_readonly("loss", &NTaskLoss::loss)
      .def_readonly("dprobs", &NTaskLoss::dprobs)
      .def_readonly("ddummy", &NTaskLoss::ddummy);

  m.def(
      "dac_loss",
      [](const std::vector<double>& probs, int truth, double alpha) {
        return dac_loss(probs, truth, alpha);
      },
      py::arg("probs"), py::arg("truth"), py::arg("alpha"),
      "Per-sample abstention loss on a (k+1)-way probability vector; the last "
      "slot is abstain.");
  m.def(
      "dac_loss_from_logits",
      [](const std::vector<double>& logits, int truth, double alpha) {
        return dac_loss_from_logits(logits, truth, alpha);
      },
      py::arg("logits"), py::arg("truth"), py::arg("alpha"));
  m.def(
      "ntask_loss",
      [](const std::vector<std::vector<double>>& task_probs, const std::vector<int>& truths,
         const std::vector<double>& alphas, const std::vector<double>& dummy_probs,
         double dummy_alpha) {
        return ntask_loss(task_probs, truths, alphas, dummy_probs, dummy_alpha);
      },
      py::arg("task_probs"), py::arg("truths"), py::arg("alphas"), py::arg("dummy_probs"),
      py::arg("dummy_alpha"),
      "All tasks coupled through the shared 2-way retain/abstain dummy head.");

  py::class_<AlphaRecord>(m, "AlphaRecord")
      .def_readonly("epoch", &AlphaRecord::epoch)
      .def_readonly("alpha", &AlphaRecord::alpha)
      .def_readonly("retained_accuracy", &AlphaRecord::retained_accuracy)
      .def_readonly("abstention", &AlphaRecord::abstention);

  py::class_<TaskTunerState>(m, "TaskTunerState")
      .def_readonly("alpha", &TaskTunerState::alpha)
      .def_readonly("satisfied", &TaskTunerState::satisfied)
      .def_readonly("frozen", &TaskTunerState::frozen)
      .def_readonly("trajectory", &TaskTunerState::trajectory);

  py::class_<TunerState>(m, "TunerState")
      .def_readonly("tasks", &TunerState::tasks)
      .def_readonly("mode", &TunerState::mode)
      .def("all_satisfied", &TunerState::all_satisfied);

  py::class_<EpochLogRow>(m, "EpochLogRow")
      .def_readonly("epoch", &EpochLogRow::epoch)
      .def_readonly("task", &EpochLogRow::task)
      .def_readonly("alpha", &EpochLogRow::alpha)
      .def_readonly("train_loss", &EpochLogRow::train_loss)
      .def_readonly("val_retained_accuracy", &EpochLogRow::val_retained_accuracy)
      .def_readonly("val_abstention", &EpochLogRow::val_abstention);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("tuner", &TrainResult::tuner)
      .def_readonly("log", &TrainResult::log)
      .def_readonly("epochs_run", &TrainResult::epochs_run);

  m.def("train", &train, py::arg("model_config"), py::arg("train_set"), py::arg("val_set"),
        py::arg("dac_config"), py::call_guard<py::gil_scoped_release>(),
        "SGD+momentum with per-epoch alpha band tuning; stops early once every "
        "task sits inside its accuracy band.");

  py::class_<EpochTaskMetrics>(m, "EpochTaskMetrics")
      .def_readonly("retained_accuracy", &EpochTaskMetrics::retained_accuracy)
      .def_readonly("abstention", &EpochTaskMetrics::abstention);

  py::class_<EvalResult>(m, "EvalResult").def_readonly("tasks", &EvalResult::tasks);

  m.def("evaluate", &evaluate, py::arg("config"), py::arg("params"), py::arg("reports"),
        py::call_guard<py::gil_scoped_release>(),
        "Retained accuracy and abstention per task over a report set.");

  // ------------------------------------------------------------------- model
  py::class_<TaskOutput>(m, "TaskOutput")
      .def_readonly("task_name", &TaskOutput::task_name)
      .def_readonly("probs", &TaskOutput::probs)
      .def_readonly("predicted", &TaskOutput::predicted)
      .def_readonly("second_choice", &TaskOutput::second_choice)
      .def("abstain_slot", &TaskOutput::abstain_slot)
      .def("abstained", &TaskOutput::abstained)
      .def("__repr__", [](const TaskOutput& t) {
        return "TaskOutput(task_name='" + t.task_name +
               "', predicted=" + std::to_string(t.predicted) +
               ", abstained=" + (t.abstained() ? std::string("True") : std::string("False")) + ")";
      });

  py::class_<PredictionRecord>(m, "PredictionRecord")
      .def(py::init<>())
      .def_readwrite("report_id", &PredictionRecord::report_id)
      .def_readwrite("tasks", &PredictionRecord::tasks);

  py::enum_<TargetKind>(m, "TargetKind")
      .value("top_prediction", TargetKind::top_prediction)
      .value("second_choice", TargetKind::second_choice);

  py::class_<ScoreModel>(m, "ScoreModel",
                         "Abstract explainer-facing model interface (scores, "
                         "score gradients, embedding table).");

  py::class_<MtcnnModel, ScoreModel>(m, "MtcnnModel")
      .def(py::init<ModelConfig, LayerParams>(), py::arg("config"), py::arg("params"))
      .def_property_readonly("config", &MtcnnModel::config,
                             py::return_value_policy::reference_internal)
      .def_property_readonly("params", &MtcnnModel::params,
                             py::return_value_policy::reference_internal)
      .def(
          "predict_all",
          [](const MtcnnModel& mdl, const std::vector<int>& tokens) {
            return mdl.predict_all(tokens);
          },
          py::arg("tokens"))
      .def(
          "predict_task",
          [](const MtcnnModel& mdl, const std::vector<int>& tokens, std::size_t task) {
            return mdl.predict_task(tokens, task);
          },
          py::arg("tokens"), py::arg("task"))
      .def(
          "target_score",
          [](const MtcnnModel& mdl, const std::vector<int>& tokens, std::size_t task, int cls) {
            return mdl.target_score(tokens, task, cls);
          },
          py::arg("tokens"), py::arg("task"), py::arg("cls"))
      .def("task_count", &MtcnnModel::task_count)
      .def("class_count", &MtcnnModel::class_count, py::arg("task"));

  m.def(
      "predict",
      [](const ModelConfig& cfg, const LayerParams& params, const std::vector<int>& tokens) {
        return predict(cfg, params, tokens);
      },
      py::arg("config"), py::arg("params"), py::arg("tokens"),
      "Forward pass: one TaskOutput per head, abstain slot last.");

  // ----------------------------------------------------------------- explain
  py::class_<TokenAttribution>(m, "TokenAttribution")
      .def(py::init<>())
      .def_readwrite("report_id", &TokenAttribution::report_id)
      .def_readwrite("task_name", &TokenAttribution::task_name)
      .def_readwrite("target_class", &TokenAttribution::target_class)
      .def_readwrite("target_kind", &TokenAttribution::target_kind)
      .def_readwrite("weights", &TokenAttribution::weights);

  py::class_<WordAttribution>(m, "WordAttribution")
      .def(py::init<>())
      .def_readwrite("report_id", &WordAttribution::report_id)
      .def_readwrite("weights", &WordAttribution::weights);

  py::class_<AttributionRecord>(m, "AttributionRecord")
      .def(py::init<>())
      .def_readwrite("attr", &AttributionRecord::attr)
      .def_readwrite("words", &AttributionRecord::words);

  m.def("grad_input", &grad_input, py::arg("model"), py::arg("report"), py::arg("task"),
        py::arg("kind"),
        "Gradient x re-centered input: position weight is (E_p - centroid) . "
        "d(target)/dE_p.");
  m.def("aggregate_words", &aggregate_words, py::arg("attr"), py::arg("report"), py::arg("vocab"),
        "Per-word sums of a report's position weights; padding excluded.");
  m.def("perturbation_explain", &perturbation_explain, py::arg("model"), py::arg("report"),
        py::arg("task"), py::arg("target_class"), py::arg("vocab"), py::arg("n_perturb"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>(),
        "Random keep-half deletions + least squares from keep-indicators to "
        "the target probability.");
  m.def(
      "sign_agreement",
      [](const std::vector<WordAttribution>& grad_side,
         const std::vector<WordAttribution>& perturb_side) {
        return sign_agreement(grad_side, perturb_side);
      },
      py::arg("grad_side"), py::arg("perturb_side"),
      "Sign match rate over the top-decile-magnitude (report, word) pairs.");

  // -------------------------------------------------------------- global xai
  py::class_<CohortSpec>(m, "CohortSpec")
      .def(py::init<>())
      .def_readwrite("gate_task", &CohortSpec::gate_task)
      .def_readwrite("task", &CohortSpec::task)
      .def_readwrite("class_subset", &CohortSpec::class_subset)
      .def_readwrite("cap", &CohortSpec::cap)
      .def_readwrite("abstained", &CohortSpec::abstained)
      .def_readwrite("seed", &CohortSpec::seed)
      .def("validate", &CohortSpec::validate, py::arg("n_tasks"));

  py::class_<AleRowMeta>(m, "AleRowMeta")
      .def_readonly("report_id", &AleRowMeta::report_id)
      .def_readonly("truth", &AleRowMeta::truth)
      .def_readonly("prediction", &AleRowMeta::prediction)
      .def_readonly("provenance", &AleRowMeta::provenance)
      .def_readonly("target_kind", &AleRowMeta::target_kind);

  py::class_<AleMatrix>(m, "AleMatrix")
      .def(py::init<>())
      .def_readwrite("rows", &AleMatrix::rows)
      .def_readwrite("words", &AleMatrix::words)
      .def_readwrite("values", &AleMatrix::values);

  m.def("build_cohort", &build_cohort, py::arg("reports"), py::arg("predictions"),
        py::arg("attributions"), py::arg("spec"),
        "Word-attribution matrix over the admitted (truth-subset, capped) "
        "rows.");
  m.def("truncate", &truncate, py::arg("matrix"), py::arg("threshold"),
        "Keep column j iff sum_i |w_ij| > threshold.");
  m.def("threshold_for_top_columns", &threshold_for_top_columns, py::arg("matrix"),
        py::arg("keep_columns"));

  py::class_<PcaResult>(m, "PcaResult")
      .def_readonly("means", &PcaResult::means)
      .def_readonly("eigenvalues", &PcaResult::eigenvalues)
      .def_readonly("eigenvectors", &PcaResult::eigenvectors)
      .def_readonly("explained", &PcaResult::explained)
      .def_readonly("projections", &PcaResult::projections)
      .def_readonly("retained_count", &PcaResult::retained_count);

  m.def("pca", py::overload_cast<const NumArray&, double>(&pca), py::arg("data"),
        py::arg("variance_goal"),
        "Covariance PCA via cyclic Jacobi; retains components up to the "
        "variance goal.");
  m.def("pca", py::overload_cast<const AleMatrix&, double>(&pca), py::arg("matrix"),
        py::arg("variance_goal"));

  py::class_<KeywordAnnotation>(m, "KeywordAnnotation")
      .def_readonly("word", &KeywordAnnotation::word)
      .def_readonly("pc1", &KeywordAnnotation::pc1)
      .def_readonly("pc2", &KeywordAnnotation::pc2);

  m.def(
      "keyword_annotations",
      [](const PcaResult& p, const std::vector<std::string>& words, std::size_t top_n) {
        return keyword_annotations(p, words, top_n);
      },
      py::arg("pca"), py::arg("words"), py::arg("top_n"),
      "Top-n words by max |loading| over the first two components.");

  py::class_<KdeGrid>(m, "KdeGrid")
      .def_readonly("xs", &KdeGrid::xs)
      .def_readonly("ys", &KdeGrid::ys)
      .def_readonly("values", &KdeGrid::values);

  m.def("kde2d", &kde2d, py::arg("points"), py::arg("resolution"), py::arg("bandwidth"),
        py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>(),
        "Isotropic Gaussian KDE on a regular grid with 10% margins per side.");

  // ----------------------------------------------------------------- metrics
  py::class_<ClassScore>(m, "ClassScore")
      .def_readonly("class_name", &ClassScore::class_name)
      .def_readonly("truth_count", &ClassScore::truth_count)
      .def_readonly("retained", &ClassScore::retained)
      .def_readonly("correct", &ClassScore::correct)
      .def_readonly("predicted", &ClassScore::predicted)
      .def_readonly("ppv", &ClassScore::ppv)
      .def_readonly("recall", &ClassScore::recall)
      .def_readonly("abstention", &ClassScore::abstention);

  py::class_<TaskScore>(m, "TaskScore")
      .def_readonly("task_name", &TaskScore::task_name)
      .def_readonly("retained", &TaskScore::retained)
      .def_readonly("abstained", &TaskScore::abstained)
      .def_readonly("correct", &TaskScore::correct)
      .def_readonly("retained_accuracy", &TaskScore::retained_accuracy)
      .def_readonly("abstention", &TaskScore::abstention)
      .def_readonly("per_class", &TaskScore::per_class);

  py::class_<ScoreReport>(m, "ScoreReport")
      .def_readonly("n_reports", &ScoreReport::n_reports)
      .def_readonly("tasks", &ScoreReport::tasks)
      .def_readonly("joint_retained", &ScoreReport::joint_retained)
      .def_readonly("joint_correct", &ScoreReport::joint_correct)
      .def_readonly("joint_retained_accuracy", &ScoreReport::joint_retained_accuracy)
      .def_readonly("joint_retained_fraction", &ScoreReport::joint_retained_fraction)
      .def("micro_retained_accuracy", &ScoreReport::micro_retained_accuracy)
      .def("micro_abstention", &ScoreReport::micro_abstention);

  m.def(
      "score",
      [](const std::vector<PredictionRecord>& predictions,
         const std::vector<TokenizedReport>& truths, const std::vector<TaskSchema>& schemas) {
        return score(predictions, truths, schemas);
      },
      py::arg("predictions"), py::arg("truths"), py::arg("schemas"),
      "Retained accuracy, abstention, PPV/recall per class (NaN means NA).");

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def_readonly("row_labels", &ConfusionMatrix::row_labels)
      .def_readonly("col_labels", &ConfusionMatrix::col_labels)
      .def_readonly("counts", &ConfusionMatrix::counts)
      .def_readonly("ppv", &ConfusionMatrix::ppv)
      .def_readonly("recall", &ConfusionMatrix::recall)
      .def("total", &ConfusionMatrix::total);

  m.def("confusion_topk", &confusion_topk, py::arg("predictions"), py::arg("truths"),
        py::arg("task"), py::arg("schema"), py::arg("k"),
        "Truth rows for the K most prevalent classes, rest pooled as 'other'; "
        "abstain is its own prediction column.");
  m.def("second_choice_matrix", &second_choice_matrix, py::arg("predictions"), py::arg("truths"),
        py::arg("task"), py::arg("schema"),
        "Truth vs second choice over abstained outputs only.");

  py::class_<TradeoffTask>(m, "TradeoffTask")
      .def_readonly("task_name", &TradeoffTask::task_name)
      .def_readonly("retained_accuracy", &TradeoffTask::retained_accuracy)
      .def_readonly("abstention", &TradeoffTask::abstention);

  py::class_<TradeoffPoint>(m, "TradeoffPoint")
      .def_readonly("target", &TradeoffPoint::target)
      .def_readonly("retained_accuracy", &TradeoffPoint::retained_accuracy)
      .def_readonly("abstention", &TradeoffPoint::abstention)
      .def_readonly("epochs_run", &TradeoffPoint::epochs_run)
      .def_readonly("per_task", &TradeoffPoint::per_task);

  m.def("default_sweep_targets", &default_sweep_targets,
        "Eight evenly spaced targets from 0.80 to 0.97.");
  m.def(
      "tradeoff_sweep",
      [](const ModelConfig& model_cfg, const SplitResult& splits, const DacConfig& base,
         const std::vector<double>& targets) {
        return tradeoff_sweep(model_cfg, splits, base, targets);
      },
      py::arg("model_config"), py::arg("splits"), py::arg("base"), py::arg("targets"),
      py::call_guard<py::gil_scoped_release>(),
      "One full train+tune per target (shared seed), scored on the test "
      "split.");

  // ---------------------------------------------------------------- pipeline
  m.def("load_pipeline_config", &load_pipeline_config, py::arg("config_path"));
  m.def("parse_pipeline_config", &parse_pipeline_config, py::arg("json_text"), py::arg("origin"));

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("threads", &PipelineConfig::threads)
      .def_readwrite("corpus", &PipelineConfig::corpus)
      .def_readwrite("split_fractions", &PipelineConfig::split_fractions)
      .def_readwrite("embed_dim", &PipelineConfig::embed_dim)
      .def_readwrite("filter_sizes", &PipelineConfig::filter_sizes)
      .def_readwrite("n_filters", &PipelineConfig::n_filters)
      .def_readwrite("hidden_dim", &PipelineConfig::hidden_dim)
      .def_readwrite("dac", &PipelineConfig::dac)
      .def_readwrite("explain_split", &PipelineConfig::explain_split)
      .def_readwrite("aggregate_task", &PipelineConfig::aggregate_task)
      .def_readwrite("gate_task", &PipelineConfig::gate_task)
      .def_readwrite("top_classes", &PipelineConfig::top_classes)
      .def_readwrite("cap", &PipelineConfig::cap)
      .def_readwrite("aggregate_abstained", &PipelineConfig::aggregate_abstained)
      .def_readwrite("threshold", &PipelineConfig::threshold)
      .def_readwrite("top_columns", &PipelineConfig::top_columns)
      .def_readwrite("variance_goal", &PipelineConfig::variance_goal)
      .def_readwrite("annotations", &PipelineConfig::annotations)
      .def_readwrite("kde_resolution", &PipelineConfig::kde_resolution)
      .def_readwrite("kde_bandwidth", &PipelineConfig::kde_bandwidth)
      .def_readwrite("confusion_top_k", &PipelineConfig::confusion_top_k)
      .def_readwrite("sweep_targets", &PipelineConfig::sweep_targets);

  m.def("model_config_for", &model_config_for, py::arg("config"), py::arg("corpus"),
        "Assemble the model architecture for a given corpus.");

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
        PipelineConfig cfg = load_pipeline_config(config_path);
        std::string digest = io::file_digest(config_path);
        py::gil_scoped_release release;
        run_pipeline(cfg, digest, out_dir);
      },
      py::arg("config_path"), py::arg("out_dir"),
      "gen -> train -> explain -> aggregate -> pca -> report from a JSON "
      "config file, with a root manifest.");
  m.def(
      "run_pipeline_json",
      [](const std::string& json_text, const std::filesystem::path& out_dir) {
        PipelineConfig cfg = parse_pipeline_config(json_text, "<inline>");
        std::string digest = hex_digest(io::fnv1a64(json_text));
        py::gil_scoped_release release;
        run_pipeline(cfg, digest, out_dir);
      },
      py::arg("json_text"), py::arg("out_dir"),
      "Same pipeline, configured from an in-memory JSON string.");

  // ---------------------------------------------------------------------- io
  auto io_mod = m.def_submodule("io", "Artifact serialization shared with the CLI.");
  io_mod.def("fnv1a64", [](const std::string& bytes) { return io::fnv1a64(bytes); },
             py::arg("bytes"));
  io_mod.def("file_digest", &io::file_digest, py::arg("path"),
             "FNV-1a 64 of the file bytes as a 16-digit hex string.");
  io_mod.def("save_corpus", &io::save_corpus, py::arg("corpus"), py::arg("dir"));
  io_mod.def("load_corpus", &io::load_corpus, py::arg("dir"));
  io_mod.def("save_checkpoint", &io::save_checkpoint, py::arg("dir"), py::arg("config"),
             py::arg("params"), py::arg("seed"));

  py::class_<io::Checkpoint>(m, "Checkpoint")
      .def_readonly("cfg", &io::Checkpoint::cfg)
      .def_readonly("params", &io::Checkpoint::params)
      .def_readonly("seed", &io::Checkpoint::seed);

  io_mod.def("load_checkpoint", &io::load_checkpoint, py::arg("dir"));
  io_mod.def(
      "save_predictions",
      [](const std::filesystem::path& path, const std::vector<PredictionRecord>& records) {
        io::save_predictions(path, records);
      },
      py::arg("path"), py::arg("records"));
  io_mod.def("load_predictions", &io::load_predictions, py::arg("path"));
  io_mod.def(
      "save_attributions",
      [](const std::filesystem::path& path, const std::vector<AttributionRecord>& records) {
        io::save_attributions(path, records);
      },
      py::arg("path"), py::arg("records"));
  io_mod.def("load_attributions", &io::load_attributions, py::arg("path"));
  io_mod.def("save_ale", &io::save_ale, py::arg("matrix"), py::arg("csv_path"),
             py::arg("meta_path"));
  io_mod.def("load_ale", &io::load_ale, py::arg("csv_path"), py::arg("meta_path"));
}
