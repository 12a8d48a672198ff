#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Deterministic pre-training mixture snapshot: a frozen, seeded ordering of
// (source, doc_id) draws. Construction is a pure function of
// (sources, n_entries, seed); equal inputs produce byte-identical snapshots.

namespace mmpipe::mixture {

enum class SourceName { interleaved = 0, caption_pairs = 1, text_only = 2 };

std::string_view source_name_str(SourceName name);
std::optional<SourceName> source_name_from(std::string_view str);

struct SourceSpec {
  SourceName name;
  double weight = 0.0;               // in [0,1]; weights sum to 1
  std::vector<std::string> doc_ids;  // non-empty when weight > 0
};

struct SnapshotEntry {
  SourceName source;
  std::string doc_id;

  bool operator==(const SnapshotEntry&) const = default;
};

struct Snapshot {
  std::uint64_t seed = 0;
  std::vector<double> weights;  // per input source, in input order
  std::vector<SnapshotEntry> entries;

  std::array<std::size_t, 3> counts() const;  // indexed by SourceName
};

/// Entry i draws its source from the seeded counter generator, then takes the
/// source's next unused doc_id in order. When a source is exhausted its list
/// is reshuffled with a seed derived from (seed, source, epoch) and the walk
/// continues. Throws BadWeights / EmptySource on precondition violations.
Snapshot build_snapshot(const std::vector<SourceSpec>& sources,
                        std::size_t n_entries, std::uint64_t seed);

/// First index at which two snapshots differ (seed and weights included via
/// entries only), or nullopt when equal. Differing lengths diverge at the
/// shorter length.
std::optional<std::size_t> first_divergence(const Snapshot& a,
                                            const Snapshot& b);

// Snapshot file format: one JSON header line {"seed","n_entries","weights"},
// then one "<source>\t<doc_id>" line per entry.
void write_snapshot(std::ostream& out, const Snapshot& snapshot);
Snapshot read_snapshot(std::istream& in);

}  // namespace mmpipe::mixture
