#include <fstream>

#include "lcrr/errors.hpp"
#include "lcrr/experiment.hpp"
#include "lcrr/jsonl.hpp"
#include "lcrr/rng.hpp"

namespace lcrr {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::size_t AlignPlan::total() const {
  std::size_t n = 0;
  for (const auto& [name, counts] : sources)
    for (std::size_t c : counts) n += c;
  return n;
}

AlignPlan plan_alignment(const AlignConfig& config) {
  AlignPlan plan;
  if (config.hotpot_count > 0) {
    if (!config.hotpot) throw ConfigError("align: hotpot count set but no hotpot file");
    plan.sources.emplace_back("qa-hotpot", bucket_counts(config.hotpot_count));
  }
  if (config.squad_count > 0) {
    if (!config.squad) throw ConfigError("align: squad count set but no squad file");
    plan.sources.emplace_back("qa-squad", bucket_counts(config.squad_count));
  }
  if (config.niah_count > 0) plan.sources.emplace_back("niah", bucket_counts(config.niah_count));
  if (plan.total() == 0) throw ConfigError("align: nothing to generate");
  return plan;
}

namespace {

constexpr std::array<NiahVariant, 4> kNiahVariants = {NiahVariant::s, NiahVariant::mk,
                                                      NiahVariant::mv, NiahVariant::mq};

struct Slot {
  std::size_t source = 0;  // index into AlignPlan::sources
  std::size_t bucket = 0;  // index into kAlignmentBuckets
  std::size_t k = 0;       // position within (source, bucket)
};

struct QaSource {
  QaDataset data;
  // Example index per (bucket, k), from one seeded permutation.
  std::array<std::vector<std::size_t>, 4> assigned;
};

QaSource prepare_qa(QaDataset data, const std::string& name,
                    const std::array<std::size_t, 4>& counts, std::uint64_t seed) {
  QaSource src{std::move(data), {}};
  std::vector<std::size_t> perm(src.data.examples.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  SeededRng rng(derive_seed(seed, name + "/examples"));
  rng.shuffle(std::span(perm));
  std::size_t next = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (next + counts[b] > perm.size())
      throw ValidationError("bucket " + length_label(kAlignmentBuckets[b]) + " of " + name +
                            " needs " + std::to_string(counts[b]) + " examples, only " +
                            std::to_string(perm.size() - std::min(next, perm.size())) +
                            " remain of " + std::to_string(perm.size()));
    src.assigned[b].assign(perm.begin() + static_cast<std::ptrdiff_t>(next),
                           perm.begin() + static_cast<std::ptrdiff_t>(next + counts[b]));
    next += counts[b];
  }
  return src;
}

std::string slot_id(const std::string& source, std::size_t bucket, std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", k);
  return "align-" + source + "-" + length_label(kAlignmentBuckets[bucket]) + "-" + buf;
}

}  // namespace

ordered_json run_align(const AlignConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("align: output directory not set");
  const AlignPlan plan = plan_alignment(config);
  const Tokenizer& tok = config.synthesis.tokenizer;

  std::optional<Corpus> corpus;
  if (config.corpus) corpus = load_corpus(*config.corpus, config.corpus_format);

  std::vector<std::optional<QaSource>> qa(plan.sources.size());
  for (std::size_t s = 0; s < plan.sources.size(); ++s) {
    const auto& [name, counts] = plan.sources[s];
    if (name == "qa-hotpot") qa[s] = prepare_qa(load_hotpotqa(*config.hotpot), name, counts, config.seed);
    if (name == "qa-squad") qa[s] = prepare_qa(load_squad(*config.squad), name, counts, config.seed);
  }

  std::vector<Slot> slots;
  std::vector<std::size_t> slot_buckets;
  slots.reserve(plan.total());
  for (std::size_t s = 0; s < plan.sources.size(); ++s) {
    for (std::size_t b = 0; b < kAlignmentBuckets.size(); ++b) {
      for (std::size_t k = 0; k < plan.sources[s].second[b]; ++k) {
        slots.push_back({s, b, k});
        slot_buckets.push_back(kAlignmentBuckets[b]);
      }
    }
  }
  const auto order = bucket_mix_indices(slot_buckets, slots.size(), derive_seed(config.seed, "mix"));

  auto build = [&](const Slot& slot) {
    const std::string& name = plan.sources[slot.source].first;
    const std::size_t target = kAlignmentBuckets[slot.bucket];
    const std::uint64_t seed =
        derive_seed(derive_seed(derive_seed(config.seed, name), std::uint64_t{target}),
                    std::uint64_t{slot.k});
    LongContextInstance inst;
    if (qa[slot.source]) {
      const QaSource& src = *qa[slot.source];
      const QaExample& ex = src.data.examples[src.assigned[slot.bucket][slot.k]];
      inst = build_qa_instance(ex, target, src.data.passages, seed, tok);
    } else {
      const std::uint64_t filler_seed = derive_seed(seed, "filler");
      FillerSource filler = [&](std::size_t budget) {
        return corpus ? slice_filler(*corpus, budget, filler_seed, tok)
                      : synth_filler(budget, filler_seed, tok);
      };
      inst = build_niah(kNiahVariants[slot.k % kNiahVariants.size()], filler, target, seed,
                        config.synthesis);
    }
    const std::string source_id = inst.id;
    inst.id = slot_id(name, slot.bucket, slot.k);
    if (qa[slot.source]) inst.id += ":" + source_id;
    return inst;
  };

  fs::create_directories(config.out_dir);
  const fs::path path = config.out_dir / "alignment.jsonl";
  const fs::path partial = config.out_dir / "alignment.jsonl.partial";
  std::map<std::string, std::array<std::size_t, 4>> written;
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + partial.string());
    for (std::size_t idx : order) {
      const Slot& slot = slots[idx];
      const std::string& name = plan.sources[slot.source].first;
      AlignmentExample ex;
      LongContextInstance inst;
      try {
        inst = build(slot);
        ex = build_alignment_example(inst, config.render, tok);
      } catch (const ValidationError& e) {
        throw ValidationError("align " + name + " bucket " +
                              length_label(kAlignmentBuckets[slot.bucket]) + " item " +
                              std::to_string(slot.k) + ": " + e.what());
      }
      const RetrievalTrace back = parse_retrieval(Strategy::RR, ex.stage1_target);
      if (back.sentences != inst.gold_facts || !back.parse_warnings.empty())
        throw InternalError("alignment example '" + ex.instance_id +
                            "' does not parse back to its gold facts");
      out << ordered_json(ex).dump() << '\n';
      ++written[name][slot.bucket];
    }
    if (!out.flush()) throw InputError("write to " + partial.string() + " failed");
  }
  fs::rename(partial, path);

  ordered_json counts = ordered_json::object();
  std::array<std::size_t, 4> bucket_totals{};
  for (const auto& [name, planned] : plan.sources) {
    ordered_json per = ordered_json::object();
    for (std::size_t b = 0; b < planned.size(); ++b) {
      per[length_label(kAlignmentBuckets[b])] = written[name][b];
      bucket_totals[b] += written[name][b];
    }
    counts[name] = std::move(per);
  }
  ordered_json totals = ordered_json::object();
  for (std::size_t b = 0; b < bucket_totals.size(); ++b)
    totals[length_label(kAlignmentBuckets[b])] = bucket_totals[b];

  ordered_json m;
  m["step"] = "align";
  m["seed"] = config.seed;
  m["tokenizer"] = tok.name();
  m["filler"] = config.corpus ? config.corpus->generic_string() : std::string("synthetic");
  m["include_context_in_stage2"] = config.render.include_context_in_stage2;
  m["counts"] = std::move(counts);
  m["bucket_totals"] = std::move(totals);
  m["total"] = plan.total();
  m["output"] = "alignment.jsonl";
  m["sha256"] = jsonl::sha256_file(path);
  m["template_checksums"] = template_checksums();
  jsonl::write_text(config.out_dir / "align_manifest.json", m.dump(2) + "\n");
  return m;
}

}  // namespace lcrr
