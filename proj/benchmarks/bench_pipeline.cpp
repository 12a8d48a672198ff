#include <benchmark/benchmark.h>

#include <sstream>
#include <string>
#include <vector>

#include "mmpipe/corpus.hpp"
#include "mmpipe/detrng.hpp"
#include "mmpipe/evalkit.hpp"
#include "mmpipe/minhash.hpp"
#include "mmpipe/moe.hpp"
#include "mmpipe/packer.hpp"
#include "mmpipe/visgeom.hpp"

namespace {

using namespace mmpipe;

std::string lorem_text(std::size_t words, std::uint64_t seed) {
  rng::CounterRng gen(seed);
  std::ostringstream out;
  for (std::size_t i = 0; i < words; ++i) {
    out << "word" << gen.next_below(5000) << " ";
  }
  return out.str();
}

std::string sample_markup(std::size_t paragraphs) {
  std::ostringstream out;
  for (std::size_t p = 0; p < paragraphs; ++p) {
    out << "<p>" << lorem_text(40, p) << "<img src=\"https://img/" << p
        << ".jpg\">" << lorem_text(20, p + 1000) << "</p>";
  }
  return out.str();
}

void BM_ParsePage(benchmark::State& state) {
  const corpus::RawPage page{
      "p", sample_markup(static_cast<std::size_t>(state.range(0))), "u"};
  for (auto _ : state) {
    benchmark::DoNotOptimize(corpus::parse_page(page));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(page.markup.size()));
}
BENCHMARK(BM_ParsePage)->Arg(8)->Arg(64);

void BM_MinHashSignature(benchmark::State& state) {
  const std::string text =
      lorem_text(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(corpus::minhash_signature(text));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_MinHashSignature)->Arg(100)->Arg(1000);

void BM_LshNearDuplicates(benchmark::State& state) {
  std::vector<corpus::TextDoc> docs;
  for (int i = 0; i < state.range(0); ++i) {
    docs.push_back({"d" + std::to_string(i),
                    lorem_text(200, static_cast<std::uint64_t>(i / 2)), 0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(corpus::lsh_near_duplicates(docs));
  }
}
BENCHMARK(BM_LshNearDuplicates)->Arg(64)->Arg(256);

void BM_PackSequences(benchmark::State& state) {
  packer::BatchPlan plan;
  rng::CounterRng gen(99);
  std::vector<packer::TokenStream> docs;
  for (int d = 0; d < state.range(0); ++d) {
    packer::TokenStream s;
    s.boundaries = {0};
    const auto words = 200 + gen.next_below(1800);
    for (std::uint64_t t = 0; t < words; ++t) {
      s.tokens.push_back(static_cast<int>(2 + gen.next_below(30000)));
    }
    s.image_slots.push_back({s.tokens.size(), 144});
    s.tokens.insert(s.tokens.end(), 144, packer::Vocabulary::kImageId);
    docs.push_back(std::move(s));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(packer::pack_sequences(docs, plan));
  }
}
BENCHMARK(BM_PackSequences)->Arg(128)->Arg(512);

void BM_RouteTopk(benchmark::State& state) {
  rng::CounterRng gen(3);
  moe::LogitMatrix logits(static_cast<std::size_t>(state.range(0)),
                          std::vector<double>(64));
  for (auto& row : logits) {
    for (double& v : row) v = gen.next_unit() * 8.0 - 4.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(moe::route_topk(logits, 2));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_RouteTopk)->Arg(512)->Arg(4096);

void BM_InterpolatePosEmbed(benchmark::State& state) {
  visgeom::FeatureGrid grid = visgeom::FeatureGrid::zeros(24, 24, 1024);
  rng::CounterRng gen(5);
  for (double& v : grid.values) v = gen.next_unit();
  const int side = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(visgeom::interpolate_pos_embed(grid, side, side));
  }
}
BENCHMARK(BM_InterpolatePosEmbed)->Arg(48)->Arg(96);

void BM_Cider(benchmark::State& state) {
  std::vector<std::string> candidates;
  std::vector<std::vector<std::string>> references;
  for (int i = 0; i < state.range(0); ++i) {
    candidates.push_back(lorem_text(12, static_cast<std::uint64_t>(i)));
    references.push_back({lorem_text(12, static_cast<std::uint64_t>(i)),
                          lorem_text(14, static_cast<std::uint64_t>(i + 50))});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(evalkit::cider(candidates, references));
  }
}
BENCHMARK(BM_Cider)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
