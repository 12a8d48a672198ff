#include <doctest.h>

#include "mmpipe/errors.hpp"
#include "mmpipe/serde.hpp"

using namespace mmpipe;
using namespace mmpipe::serde;

TEST_CASE("interleaved doc lines round-trip") {
  corpus::InterleavedDoc doc;
  doc.doc_id = "doc-1";
  corpus::ImageRecord rec;
  rec.url = "https://x/a.jpg";
  rec.width_px = 640;
  rec.height_px = 480;
  rec.md5_hex = "00112233445566778899aabbccddeeff";
  rec.bytes_valid = true;
  doc.segments = {corpus::TextSegment{"hello world"},
                  corpus::ImageSegment{rec},
                  corpus::TextSegment{"tail"}};

  const corpus::InterleavedDoc back =
      parse_interleaved_doc(interleaved_doc_line(doc));
  CHECK(back.doc_id == doc.doc_id);
  CHECK(back.segments == doc.segments);
}

TEST_CASE("text docs recompute their token estimate on parse") {
  const corpus::TextDoc doc =
      parse_text_doc(R"({"doc_id":"t","text":"one two  three"})");
  CHECK(doc.token_estimate == 3);
}

TEST_CASE("packed sequence lines round-trip") {
  packer::BatchPlan plan;
  plan.seq_len = 64;
  plan.tokens_per_image = 8;
  packer::TokenStream stream;
  stream.boundaries = {0};
  for (int t = 0; t < 20; ++t) stream.tokens.push_back(5 + t);
  stream.image_slots.push_back({stream.tokens.size(), 8});
  stream.tokens.insert(stream.tokens.end(), 8, packer::Vocabulary::kImageId);

  const auto sequences =
      packer::pack_sequences(std::vector<packer::TokenStream>{stream}, plan);
  REQUIRE(sequences.size() == 1);
  const packer::PackedSequence back =
      parse_packed_sequence(packed_sequence_line(sequences[0]));
  CHECK(back.stream.tokens == sequences[0].stream.tokens);
  CHECK(back.stream.boundaries == sequences[0].stream.boundaries);
  CHECK(back.stream.image_slots == sequences[0].stream.image_slots);
  CHECK(back.loss_mask == sequences[0].loss_mask);
  CHECK(back.pad_from == sequences[0].pad_from);
}

TEST_CASE("feature grid lines carry dims and flat values") {
  visgeom::FeatureGrid grid = visgeom::FeatureGrid::zeros(2, 3, 2);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    grid.values[i] = static_cast<double>(i) * 0.5;
  }
  const visgeom::FeatureGrid back =
      parse_feature_grid(feature_grid_line(grid));
  CHECK(back.h == 2);
  CHECK(back.w == 3);
  CHECK(back.channels == 2);
  CHECK(back.values == grid.values);

  CHECK_THROWS_AS(
      parse_feature_grid(R"({"h":2,"w":2,"channels":1,"values":[1.0]})"),
      ParseError);
}

TEST_CASE("malformed lines throw ParseError with the field named") {
  CHECK_THROWS_AS(parse_raw_page("not json"), ParseError);
  CHECK_THROWS_AS(parse_raw_page(R"({"url":"u"})"), ParseError);
  CHECK_THROWS_AS(parse_interleaved_doc(
                      R"({"doc_id":"d","segments":[{"type":"wat"}]})"),
                  ParseError);
  CHECK_THROWS_AS(parse_prediction(R"({"example_id":"e"})"), ParseError);
}
