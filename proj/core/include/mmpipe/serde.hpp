#pragma once

#include <string>
#include <string_view>

#include "mmpipe/corpus.hpp"
#include "mmpipe/evalkit.hpp"
#include "mmpipe/packer.hpp"
#include "mmpipe/visgeom.hpp"

// Line-delimited JSON record formats for the pipeline's external interfaces.
// Parsers throw ParseError with the offending field; serializers emit
// single-line JSON with stable key order (alphabetical, nlohmann default).

namespace mmpipe::serde {

// {"page_id": ..., "url": ..., "markup": ...}
corpus::RawPage parse_raw_page(std::string_view line);
std::string raw_page_line(const corpus::RawPage& page);

// {"url","width","height","md5","bytes_valid"}
corpus::ImageRecord parse_image_meta(std::string_view line);
std::string image_meta_line(const corpus::ImageRecord& record);

// {"doc_id","segments":[{"type":"text","content"}|
//                       {"type":"image","url","width","height","md5"}]}
corpus::InterleavedDoc parse_interleaved_doc(std::string_view line);
std::string interleaved_doc_line(const corpus::InterleavedDoc& doc);

// {"doc_id","text"}
corpus::TextDoc parse_text_doc(std::string_view line);
std::string text_doc_line(const corpus::TextDoc& doc);

// {"tokens","boundaries","image_slots":[[pos,span]...],"loss_mask","pad_from"}
// With dense_mask: adds "mask" as seq_len strings of '0'/'1'.
packer::PackedSequence parse_packed_sequence(std::string_view line);
std::string packed_sequence_line(const packer::PackedSequence& seq,
                                 bool dense_mask = false);

// {"h","w","channels","values":[flat row-major, channel-minor]}
visgeom::FeatureGrid parse_feature_grid(std::string_view line);
std::string feature_grid_line(const visgeom::FeatureGrid& grid);

// {"example_id","images",("question"),"references",("answers_10")}
evalkit::EvalExample parse_eval_example(std::string_view line);
std::string eval_example_line(const evalkit::EvalExample& example);

// {"example_id","text"}
std::pair<std::string, std::string> parse_prediction(std::string_view line);
std::string prediction_line(std::string_view example_id,
                            std::string_view text);

// {"task","metric","value","n"}
std::string score_report_line(const evalkit::ScoreReport& report);

}  // namespace mmpipe::serde
