#include <cstdio>
#include <fstream>

#include "lcrr/errors.hpp"
#include "lcrr/experiment.hpp"
#include "lcrr/jsonl.hpp"
#include "lcrr/rng.hpp"

namespace lcrr {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

SynthSources::SynthSources(std::optional<Corpus> corpus, SynthesisOptions options)
    : corpus_(std::move(corpus)), options_(std::move(options)) {}

void SynthSources::set_dataset(TaskKind kind, QaDataset dataset) {
  datasets_[kind] = std::move(dataset);
}

const QaDataset& SynthSources::dataset(TaskKind kind) const {
  auto it = datasets_.find(kind);
  if (it == datasets_.end())
    throw ConfigError("no dataset loaded for task " + std::string(to_string(kind)));
  return it->second;
}

std::string SynthSources::filler(std::size_t budget, std::uint64_t seed) const {
  if (corpus_) return slice_filler(*corpus_, budget, seed, options_.tokenizer);
  return synth_filler(budget, seed, options_.tokenizer);
}

SynthSources load_sources(const SynthConfig& config) {
  std::optional<Corpus> corpus;
  if (config.corpus) corpus = load_corpus(*config.corpus, config.corpus_format);
  SynthSources sources(std::move(corpus), config.synthesis);
  for (TaskKind task : config.tasks) {
    if (task == TaskKind::qa_squad) {
      if (!config.squad) throw ConfigError("task qa-squad needs a squad file");
      sources.set_dataset(task, load_squad(*config.squad));
    } else if (task == TaskKind::qa_hotpot) {
      if (!config.hotpot) throw ConfigError("task qa-hotpot needs a hotpot file");
      sources.set_dataset(task, load_hotpotqa(*config.hotpot));
    } else if (task == TaskKind::qa_other) {
      if (!config.qa_other) throw ConfigError("task qa-other needs a qa jsonl file");
      sources.set_dataset(task, load_qa_jsonl(*config.qa_other));
    }
  }
  return sources;
}

std::uint64_t case_seed(std::uint64_t seed, TaskKind task, std::size_t length, std::size_t index) {
  return derive_seed(derive_seed(derive_seed(seed, to_string(task)), std::uint64_t{length}),
                     std::uint64_t{index});
}

std::string case_id(TaskKind task, std::size_t length, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", index);
  return std::string(to_string(task)) + "-" + length_label(length) + "-" + buf;
}

namespace {

NiahVariant niah_variant_of(TaskKind task) {
  switch (task) {
    case TaskKind::s_niah: return NiahVariant::s;
    case TaskKind::mk_niah: return NiahVariant::mk;
    case TaskKind::mv_niah: return NiahVariant::mv;
    case TaskKind::mq_niah: return NiahVariant::mq;
    default: throw InternalError("not a NIAH task");
  }
}

// Same order for every length of a task, so each length sees the same
// questions.
std::vector<std::size_t> example_order(const QaDataset& ds, TaskKind task, std::uint64_t seed) {
  std::vector<std::size_t> order(ds.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededRng rng(derive_seed(derive_seed(seed, to_string(task)), "examples"));
  rng.shuffle(std::span(order));
  return order;
}

LongContextInstance make_case(const SynthSources& sources, TaskKind task, std::size_t length,
                              std::size_t index, std::uint64_t seed,
                              const std::vector<std::size_t>* order) {
  const std::uint64_t cs = case_seed(seed, task, length, index);
  LongContextInstance inst;
  if (is_synthetic(task)) {
    const std::uint64_t filler_seed = derive_seed(cs, "filler");
    FillerSource filler = [&](std::size_t budget) { return sources.filler(budget, filler_seed); };
    switch (task) {
      case TaskKind::passkey1: inst = build_passkey_task(1, filler, length, cs, sources.options()); break;
      case TaskKind::passkey2: inst = build_passkey_task(2, filler, length, cs, sources.options()); break;
      case TaskKind::passkey3: inst = build_passkey_task(3, filler, length, cs, sources.options()); break;
      default: inst = build_niah(niah_variant_of(task), filler, length, cs, sources.options());
    }
  } else {
    const QaDataset& ds = sources.dataset(task);
    if (index >= ds.examples.size())
      throw ValidationError("case " + std::to_string(index) + " needs more examples than the " +
                            std::to_string(ds.examples.size()) + " available");
    const QaExample& ex = ds.examples[order ? (*order)[index] : example_order(ds, task, seed)[index]];
    inst = build_qa_instance(ex, length, ds.passages, cs, sources.options().tokenizer);
  }
  inst.id = case_id(task, length, index);
  validate_instance(inst);
  return inst;
}

std::string cell_name(TaskKind task, std::size_t length) {
  return std::string(to_string(task)) + "/" + length_label(length);
}

// Calls `fn` per case, annotating errors with the cell.
template <typename Fn>
void for_each_case(const SynthSources& sources, TaskKind task, std::size_t length,
                   std::size_t cases, std::uint64_t seed, Fn&& fn) {
  std::vector<std::size_t> order;
  if (!is_synthetic(task)) order = example_order(sources.dataset(task), task, seed);
  for (std::size_t i = 0; i < cases; ++i) {
    try {
      fn(make_case(sources, task, length, i, seed, is_synthetic(task) ? nullptr : &order));
    } catch (const ValidationError& e) {
      throw ValidationError("cell " + cell_name(task, length) + ", case " + std::to_string(i) +
                            ": " + e.what());
    }
  }
}

}  // namespace

LongContextInstance synthesize_case(const SynthSources& sources, TaskKind task,
                                    std::size_t length, std::size_t index, std::uint64_t seed) {
  return make_case(sources, task, length, index, seed, nullptr);
}

std::vector<LongContextInstance> synthesize_cell(const SynthSources& sources, TaskKind task,
                                                 std::size_t length, std::size_t cases,
                                                 std::uint64_t seed) {
  std::vector<LongContextInstance> out;
  out.reserve(cases);
  for_each_case(sources, task, length, cases, seed,
                [&](LongContextInstance&& inst) { out.push_back(std::move(inst)); });
  return out;
}

ordered_json run_synth(const SynthConfig& config) {
  if (config.tasks.empty()) throw ConfigError("synth: no tasks configured");
  if (config.lengths.empty()) throw ConfigError("synth: length grid is empty");
  if (config.cases_per_cell < 1) throw ConfigError("synth: cases per cell must be >= 1");
  if (config.out_dir.empty()) throw ConfigError("synth: output directory not set");

  const SynthSources sources = load_sources(config);
  const fs::path dir = config.out_dir / "instances";
  fs::create_directories(dir);

  ordered_json cells = ordered_json::array();
  std::size_t total = 0;
  for (TaskKind task : config.tasks) {
    for (std::size_t length : config.lengths) {
      const std::string file =
          std::string(to_string(task)) + "_" + length_label(length) + ".jsonl";
      const fs::path path = dir / file;
      const fs::path partial = dir / (file + ".partial");
      {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + partial.string());
        for_each_case(sources, task, length, config.cases_per_cell, config.seed,
                      [&](LongContextInstance&& inst) { out << ordered_json(inst).dump() << '\n'; });
        if (!out.flush()) throw InputError("write to " + partial.string() + " failed");
      }
      fs::rename(partial, path);
      total += config.cases_per_cell;
      cells.push_back({{"task", to_string(task)},
                       {"length", length_label(length)},
                       {"target_tokens", length},
                       {"count", config.cases_per_cell},
                       {"file", "instances/" + file},
                       {"sha256", jsonl::sha256_file(path)}});
    }
  }

  ordered_json tasks = ordered_json::array();
  for (TaskKind t : config.tasks) tasks.push_back(to_string(t));
  ordered_json lengths = ordered_json::array();
  for (std::size_t l : config.lengths) lengths.push_back(length_label(l));

  ordered_json m;
  m["step"] = "synth";
  m["seed"] = config.seed;
  m["tokenizer"] = config.synthesis.tokenizer.name();
  m["filler"] = config.corpus ? config.corpus->generic_string() : std::string("synthetic");
  m["tasks"] = std::move(tasks);
  m["lengths"] = std::move(lengths);
  m["cases_per_cell"] = config.cases_per_cell;
  m["mk_needles"] = config.synthesis.mk_needles;
  m["mv_values"] = config.synthesis.mv_values;
  m["mq_needles"] = config.synthesis.mq_needles;
  m["mq_queries"] = config.synthesis.mq_queries;
  m["instance_count"] = total;
  m["cells"] = std::move(cells);
  jsonl::write_text(config.out_dir / "manifest.json", m.dump(2) + "\n");
  return m;
}

}  // namespace lcrr
