#include "mmpipe/mixture.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mmpipe/detrng.hpp"
#include "mmpipe/errors.hpp"

#include <nlohmann/json.hpp>

namespace mmpipe::mixture {

namespace {

constexpr std::uint64_t kSourcePickTag = 0x6D69782E7069636Bull;
constexpr std::uint64_t kReshuffleTag = 0x6D69782E73687566ull;

// Per-source cursor over doc_ids with seeded reshuffle on exhaustion.
struct SourceWalker {
  const SourceSpec* spec = nullptr;
  std::vector<std::size_t> order;  // permutation of doc index
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;

  const std::string& next(std::uint64_t seed, std::size_t source_index) {
    if (cursor == order.size()) {
      ++epoch;
      cursor = 0;
      rng::CounterRng shuffle_rng(rng::combine(
          rng::combine(kReshuffleTag, seed),
          rng::combine(static_cast<std::uint64_t>(source_index), epoch)));
      rng::shuffle(order, shuffle_rng);
    }
    return spec->doc_ids[order[cursor++]];
  }
};

}  // namespace

std::string_view source_name_str(SourceName name) {
  switch (name) {
    case SourceName::interleaved: return "interleaved";
    case SourceName::caption_pairs: return "caption_pairs";
    case SourceName::text_only: return "text_only";
  }
  return "unknown";
}

std::optional<SourceName> source_name_from(std::string_view str) {
  if (str == "interleaved") return SourceName::interleaved;
  if (str == "caption_pairs") return SourceName::caption_pairs;
  if (str == "text_only") return SourceName::text_only;
  return std::nullopt;
}

std::array<std::size_t, 3> Snapshot::counts() const {
  std::array<std::size_t, 3> out{0, 0, 0};
  for (const SnapshotEntry& e : entries) {
    ++out[static_cast<std::size_t>(e.source)];
  }
  return out;
}

Snapshot build_snapshot(const std::vector<SourceSpec>& sources,
                        std::size_t n_entries, std::uint64_t seed) {
  double total = 0.0;
  for (const SourceSpec& s : sources) {
    if (s.weight < 0.0) throw BadWeights("negative weight");
    total += s.weight;
    if (s.weight > 0.0 && s.doc_ids.empty()) {
      throw EmptySource(std::string(source_name_str(s.name)) +
                        " has weight > 0 but no documents");
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "weights sum to " << total << ", expected 1.0";
    throw BadWeights(msg.str());
  }

  std::vector<SourceWalker> walkers(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    walkers[i].spec = &sources[i];
    walkers[i].order.resize(sources[i].doc_ids.size());
    for (std::size_t j = 0; j < walkers[i].order.size(); ++j) {
      walkers[i].order[j] = j;  // epoch 0 uses input order
    }
  }

  Snapshot snapshot;
  snapshot.seed = seed;
  for (const SourceSpec& s : sources) snapshot.weights.push_back(s.weight);
  snapshot.entries.reserve(n_entries);

  const std::uint64_t pick_seed = rng::combine(kSourcePickTag, seed);
  for (std::size_t i = 0; i < n_entries; ++i) {
    const double u = rng::to_unit(rng::draw_at(pick_seed, i));
    double cum = 0.0;
    std::size_t chosen = sources.size();
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (sources[s].weight <= 0.0) continue;
      cum += sources[s].weight;
      if (u < cum) {
        chosen = s;
        break;
      }
    }
    if (chosen == sources.size()) {
      // u landed in the float-rounding sliver past the last bucket.
      for (std::size_t s = sources.size(); s-- > 0;) {
        if (sources[s].weight > 0.0) {
          chosen = s;
          break;
        }
      }
    }
    snapshot.entries.push_back(
        {sources[chosen].name, walkers[chosen].next(seed, chosen)});
  }
  return snapshot;
}

std::optional<std::size_t> first_divergence(const Snapshot& a,
                                            const Snapshot& b) {
  const std::size_t n = std::min(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a.entries[i] == b.entries[i])) return i;
  }
  if (a.entries.size() != b.entries.size()) return n;
  return std::nullopt;
}

void write_snapshot(std::ostream& out, const Snapshot& snapshot) {
  nlohmann::json header;
  header["seed"] = snapshot.seed;
  header["n_entries"] = snapshot.entries.size();
  header["weights"] = snapshot.weights;
  out << header.dump() << "\n";
  for (const SnapshotEntry& e : snapshot.entries) {
    out << source_name_str(e.source) << "\t" << e.doc_id << "\n";
  }
}

Snapshot read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("snapshot file is empty");
  }
  Snapshot snapshot;
  std::size_t n_entries = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    snapshot.seed = header.at("seed").get<std::uint64_t>();
    n_entries = header.at("n_entries").get<std::size_t>();
    snapshot.weights = header.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("snapshot header: ") + e.what());
  }
  snapshot.entries.reserve(n_entries);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("snapshot line missing tab: " + line);
    }
    const auto name = source_name_from(line.substr(0, tab));
    if (!name) {
      throw ParseError("unknown source in snapshot: " + line.substr(0, tab));
    }
    snapshot.entries.push_back({*name, line.substr(tab + 1)});
  }
  if (snapshot.entries.size() != n_entries) {
    throw ParseError("snapshot entry count does not match header");
  }
  return snapshot;
}

}  // namespace mmpipe::mixture
