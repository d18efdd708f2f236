// pybind11 module: the pipeline steps plus the metric and parsing helpers.
// Structured values cross the boundary as JSON text; the Python package
// decodes them.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lcrr/errors.hpp"
#include "lcrr/experiment.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace lcrr;
using nlohmann::ordered_json;

namespace {

std::optional<fs::path> opt_path(const std::optional<std::string>& s) {
  if (!s || s->empty()) return std::nullopt;
  return fs::path(*s);
}

std::vector<fs::path> paths(const std::vector<std::string>& in) { return {in.begin(), in.end()}; }

// Keeps a Python callable alive inside C++ and only touches it with the GIL.
Tokenizer::Counter wrap_counter(py::function fn) {
  auto holder = std::shared_ptr<py::function>(new py::function(std::move(fn)), [](py::function* f) {
    if (Py_IsInitialized()) {
      py::gil_scoped_acquire gil;
      delete f;
    }
  });
  return [holder](std::string_view text) -> std::size_t {
    py::gil_scoped_acquire gil;
    py::object n = (*holder)(py::str(text.data(), text.size()));
    const auto v = n.cast<long long>();
    if (v < 0) throw ValidationError("tokenizer plugin returned a negative count");
    return static_cast<std::size_t>(v);
  };
}

std::string py_synth(const std::string& out, const std::vector<std::string>& tasks,
                     const std::vector<std::string>& lengths, std::size_t cases, std::uint64_t seed,
                     const std::optional<std::string>& corpus, const std::string& corpus_format,
                     const std::optional<std::string>& squad, const std::optional<std::string>& hotpot,
                     const std::optional<std::string>& qa_jsonl, const std::string& tokenizer) {
  SynthConfig c;
  for (const auto& t : tasks) c.tasks.push_back(task_kind_from_string(t));
  for (const auto& l : lengths) c.lengths.push_back(parse_length(l));
  c.cases_per_cell = cases;
  c.seed = seed;
  c.corpus = opt_path(corpus);
  c.corpus_format = corpus_format_from_string(corpus_format);
  c.squad = opt_path(squad);
  c.hotpot = opt_path(hotpot);
  c.qa_other = opt_path(qa_jsonl);
  c.synthesis.tokenizer = tokenizer_from_config(tokenizer);
  c.out_dir = out;
  py::gil_scoped_release release;
  return run_synth(c).dump();
}

std::string py_synthesize_case(const std::string& task, const std::string& length, std::size_t index,
                               std::uint64_t seed, const std::string& tokenizer) {
  const TaskKind kind = task_kind_from_string(task);
  if (!is_synthetic(kind)) throw ConfigError("synthesize_case supports synthetic tasks only");
  SynthesisOptions opts;
  opts.tokenizer = tokenizer_from_config(tokenizer);
  const SynthSources sources(std::nullopt, opts);
  LongContextInstance inst;
  {
    py::gil_scoped_release release;
    inst = synthesize_case(sources, kind, parse_length(length), index, seed);
  }
  return ordered_json(inst).dump();
}

std::string py_run(const std::string& out, const std::vector<std::string>& instances,
                   const std::string& strategy, const std::string& backend, std::size_t workers,
                   std::uint64_t seed, double hallucination_p, const std::string& fixed_text,
                   const std::string& endpoint, const std::string& model, const std::string& auth_env,
                   std::optional<std::size_t> limit, bool include_context_in_stage2) {
  RunOptions o;
  o.strategy = strategy_from_string(strategy);
  o.backend.kind = backend_kind_from_string(backend);
  o.backend.seed = seed;
  o.backend.hallucination_p = hallucination_p;
  o.backend.fixed_text = fixed_text;
  o.backend.http.endpoint = endpoint;
  o.backend.http.model = model;
  o.backend.http.auth_env = auth_env;
  o.workers = workers;
  o.limit = limit;
  o.render.include_context_in_stage2 = include_context_in_stage2;
  const auto inputs = paths(instances);
  py::gil_scoped_release release;
  return run_step(inputs, o, out).dump();
}

std::string py_score(const std::string& out, const std::vector<std::string>& instances,
                     const std::optional<std::string>& records) {
  const fs::path rec = records ? fs::path(*records) : fs::path(out) / "records.jsonl";
  const auto inputs = paths(instances);
  py::gil_scoped_release release;
  return score_to_json(run_score(rec, inputs, out)).dump();
}

std::string py_align(const std::string& out, const std::optional<std::string>& hotpot,
                     const std::optional<std::string>& squad, std::size_t hotpot_count,
                     std::size_t squad_count, std::size_t niah_count, std::uint64_t seed,
                     const std::optional<std::string>& corpus, const std::string& tokenizer) {
  AlignConfig c;
  c.hotpot = opt_path(hotpot);
  c.squad = opt_path(squad);
  c.hotpot_count = hotpot_count;
  c.squad_count = squad_count;
  c.niah_count = niah_count;
  c.seed = seed;
  c.corpus = opt_path(corpus);
  c.synthesis.tokenizer = tokenizer_from_config(tokenizer);
  c.out_dir = out;
  py::gil_scoped_release release;
  return run_align(c).dump();
}

std::string py_report(const std::string& out, const std::vector<std::pair<std::string, std::string>>& inputs) {
  std::vector<std::pair<std::string, fs::path>> in(inputs.begin(), inputs.end());
  return run_report(in, out);
}

std::string py_parse_retrieval(const std::string& strategy, const std::string& text) {
  const auto t = parse_retrieval(strategy_from_string(strategy), text);
  return ordered_json{{"sentences", t.sentences}, {"parse_warnings", t.parse_warnings}}.dump();
}

std::string py_extract_answer(const std::string& strategy, const std::string& text) {
  const auto a = extract_answer(strategy_from_string(strategy), text);
  return ordered_json{{"text", a.text}, {"warnings", a.warnings}}.dump();
}

std::vector<std::string> py_render_stages(const std::string& instance_json, const std::string& strategy,
                                          const std::vector<std::string>& outputs,
                                          bool include_context_in_stage2) {
  const auto inst = ordered_json::parse(instance_json).get<LongContextInstance>();
  const DialoguePlan plan = plan_for(strategy_from_string(strategy));
  RenderOptions opts;
  opts.include_context_in_stage2 = include_context_in_stage2;
  std::vector<StageTranscript> prior;
  std::vector<std::string> prompts;
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    prompts.push_back(render_stage(plan, i, inst, prior, opts));
    if (i >= outputs.size()) break;
    prior.push_back({i, prompts.back(), outputs[i], 0});
  }
  return prompts;
}

}  // namespace

PYBIND11_MODULE(_lcrr, m) {
  m.doc() = "Long-context retrieve-then-reason harness (native core)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_OSError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);
  py::register_exception<TimeoutError>(m, "BackendTimeout", PyExc_TimeoutError);
  py::register_exception<InternalError>(m, "InternalError", PyExc_RuntimeError);

  m.def("count_tokens", [](const std::string& text, const std::string& tokenizer) {
    return tokenizer_from_config(tokenizer).count(text);
  }, py::arg("text"), py::arg("tokenizer") = "approximate-default");
  m.def("parse_length", &parse_length, py::arg("label"));
  m.def("length_label", &length_label, py::arg("tokens"));
  m.def("register_tokenizer", [](const std::string& name, py::function fn) {
    register_tokenizer(name, wrap_counter(std::move(fn)));
  }, py::arg("name"), py::arg("counter"));
  m.def("unregister_tokenizer", &unregister_tokenizer, py::arg("name"));

  m.def("synth", &py_synth, py::arg("out"), py::arg("tasks"), py::arg("lengths"),
        py::arg("cases") = kDefaultCasesPerCell, py::arg("seed") = 0, py::arg("corpus") = py::none(),
        py::arg("corpus_format") = "plain-text-dir", py::arg("squad") = py::none(),
        py::arg("hotpot") = py::none(), py::arg("qa_jsonl") = py::none(),
        py::arg("tokenizer") = "approximate-default");
  m.def("synthesize_case", &py_synthesize_case, py::arg("task"), py::arg("length"),
        py::arg("index") = 0, py::arg("seed") = 0, py::arg("tokenizer") = "approximate-default");
  m.def("run", &py_run, py::arg("out"), py::arg("instances"), py::arg("strategy") = "rr",
        py::arg("backend") = "scripted-oracle", py::arg("workers") = 1, py::arg("seed") = 0,
        py::arg("hallucination_p") = 0.0, py::arg("fixed_text") = "", py::arg("endpoint") = "",
        py::arg("model") = "", py::arg("auth_env") = "LCRR_API_TOKEN", py::arg("limit") = py::none(),
        py::arg("include_context_in_stage2") = false);
  m.def("score", &py_score, py::arg("out"), py::arg("instances"), py::arg("records") = py::none());
  m.def("align", &py_align, py::arg("out"), py::arg("hotpot") = py::none(), py::arg("squad") = py::none(),
        py::arg("hotpot_count") = 0, py::arg("squad_count") = 0, py::arg("niah_count") = 1600,
        py::arg("seed") = 0, py::arg("corpus") = py::none(), py::arg("tokenizer") = "approximate-default");
  m.def("report", &py_report, py::arg("out"), py::arg("inputs"));

  m.def("normalize_answer", &normalize_answer, py::arg("text"));
  m.def("exact_match", [](const std::string& pred, const std::vector<std::string>& golds) {
    return exact_match(pred, golds);
  }, py::arg("prediction"), py::arg("golds"));
  m.def("score_answer", [](const std::string& task, const std::string& pred, const std::vector<std::string>& golds) {
    return score_answer(task_kind_from_string(task), pred, golds);
  }, py::arg("task"), py::arg("prediction"), py::arg("golds"));
  m.def("parse_retrieval", &py_parse_retrieval, py::arg("strategy"), py::arg("text"));
  m.def("extract_answer", &py_extract_answer, py::arg("strategy"), py::arg("text"));
  m.def("render_stages", &py_render_stages, py::arg("instance"), py::arg("strategy"),
        py::arg("outputs") = std::vector<std::string>{}, py::arg("include_context_in_stage2") = false);
  m.def("template_text", [](const std::string& id) { return std::string(template_text(id)); }, py::arg("id"));
  m.def("template_checksums", [] { return template_checksums().dump(); });
}
