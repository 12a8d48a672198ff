#include "mmpipe/serde.hpp"

#include <nlohmann/json.hpp>

#include "mmpipe/errors.hpp"

namespace mmpipe::serde {

using nlohmann::json;

namespace {

json parse_line(std::string_view line, const char* what) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
T get_field(const json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + " field '" + key + "': " + e.what());
  }
}

}  // namespace

corpus::RawPage parse_raw_page(std::string_view line) {
  const json j = parse_line(line, "raw page");
  corpus::RawPage page;
  page.page_id = get_field<std::string>(j, "page_id", "raw page");
  page.url = j.value("url", std::string{});
  page.markup = j.value("markup", std::string{});
  return page;
}

std::string raw_page_line(const corpus::RawPage& page) {
  return json{{"page_id", page.page_id},
              {"url", page.url},
              {"markup", page.markup}}
      .dump();
}

corpus::ImageRecord parse_image_meta(std::string_view line) {
  const json j = parse_line(line, "image meta");
  corpus::ImageRecord rec;
  rec.url = get_field<std::string>(j, "url", "image meta");
  rec.width_px = j.value("width", 0);
  rec.height_px = j.value("height", 0);
  rec.md5_hex = j.value("md5", std::string{});
  rec.bytes_valid = j.value("bytes_valid", false);
  return rec;
}

std::string image_meta_line(const corpus::ImageRecord& record) {
  return json{{"url", record.url},
              {"width", record.width_px},
              {"height", record.height_px},
              {"md5", record.md5_hex},
              {"bytes_valid", record.bytes_valid}}
      .dump();
}

corpus::InterleavedDoc parse_interleaved_doc(std::string_view line) {
  const json j = parse_line(line, "interleaved doc");
  corpus::InterleavedDoc doc;
  doc.doc_id = get_field<std::string>(j, "doc_id", "interleaved doc");
  if (!j.contains("segments") || !j["segments"].is_array()) {
    throw ParseError("interleaved doc '" + doc.doc_id +
                     "' missing segments array");
  }
  for (const json& seg : j["segments"]) {
    const auto type = get_field<std::string>(seg, "type", "segment");
    if (type == "text") {
      doc.segments.push_back(corpus::TextSegment{
          get_field<std::string>(seg, "content", "text segment")});
    } else if (type == "image") {
      corpus::ImageRecord rec;
      rec.url = seg.value("url", std::string{});
      rec.width_px = seg.value("width", 0);
      rec.height_px = seg.value("height", 0);
      rec.md5_hex = seg.value("md5", std::string{});
      rec.bytes_valid = true;  // emitted docs only contain surviving images
      doc.segments.push_back(corpus::ImageSegment{std::move(rec)});
    } else {
      throw ParseError("unknown segment type '" + type + "'");
    }
  }
  return doc;
}

std::string interleaved_doc_line(const corpus::InterleavedDoc& doc) {
  json segments = json::array();
  for (const corpus::DocSegment& seg : doc.segments) {
    if (const auto* text = std::get_if<corpus::TextSegment>(&seg)) {
      segments.push_back({{"type", "text"}, {"content", text->content}});
    } else {
      const corpus::ImageRecord& rec =
          std::get<corpus::ImageSegment>(seg).image;
      segments.push_back({{"type", "image"},
                          {"url", rec.url},
                          {"width", rec.width_px},
                          {"height", rec.height_px},
                          {"md5", rec.md5_hex}});
    }
  }
  return json{{"doc_id", doc.doc_id}, {"segments", segments}}.dump();
}

corpus::TextDoc parse_text_doc(std::string_view line) {
  const json j = parse_line(line, "text doc");
  corpus::TextDoc doc;
  doc.doc_id = get_field<std::string>(j, "doc_id", "text doc");
  doc.text = get_field<std::string>(j, "text", "text doc");
  doc.token_estimate = corpus::estimate_tokens(doc.text);
  return doc;
}

std::string text_doc_line(const corpus::TextDoc& doc) {
  return json{{"doc_id", doc.doc_id}, {"text", doc.text}}.dump();
}

packer::PackedSequence parse_packed_sequence(std::string_view line) {
  const json j = parse_line(line, "packed sequence");
  packer::PackedSequence seq;
  seq.stream.tokens = get_field<std::vector<int>>(j, "tokens", "packed");
  seq.seq_len = static_cast<int>(seq.stream.tokens.size());
  seq.stream.boundaries =
      get_field<std::vector<std::size_t>>(j, "boundaries", "packed");
  for (const json& slot : j.at("image_slots")) {
    seq.stream.image_slots.push_back(
        {slot.at(0).get<std::size_t>(), slot.at(1).get<std::size_t>()});
  }
  seq.loss_mask = get_field<std::vector<bool>>(j, "loss_mask", "packed");
  seq.pad_from = get_field<std::size_t>(j, "pad_from", "packed");
  return seq;
}

std::string packed_sequence_line(const packer::PackedSequence& seq,
                                 bool dense_mask) {
  json slots = json::array();
  for (const packer::ImageSlot& slot : seq.stream.image_slots) {
    slots.push_back({slot.position, slot.span});
  }
  json j{{"tokens", seq.stream.tokens},
         {"boundaries", seq.stream.boundaries},
         {"image_slots", slots},
         {"loss_mask", seq.loss_mask},
         {"pad_from", seq.pad_from}};
  if (dense_mask) {
    const packer::BlockCausalMask mask(packer::mask_spec_for(seq));
    json rows = json::array();
    for (std::size_t i = 0; i < mask.seq_len(); ++i) {
      std::string row(mask.seq_len(), '0');
      for (std::size_t col = 0; col < mask.seq_len(); ++col) {
        if (mask.attend(i, col)) row[col] = '1';
      }
      rows.push_back(row);
    }
    j["mask"] = rows;
  }
  return j.dump();
}

visgeom::FeatureGrid parse_feature_grid(std::string_view line) {
  const json j = parse_line(line, "feature grid");
  visgeom::FeatureGrid grid;
  grid.h = get_field<int>(j, "h", "feature grid");
  grid.w = get_field<int>(j, "w", "feature grid");
  grid.channels = get_field<int>(j, "channels", "feature grid");
  grid.values = get_field<std::vector<double>>(j, "values", "feature grid");
  if (grid.h < 1 || grid.w < 1 || grid.channels < 1 ||
      grid.values.size() != static_cast<std::size_t>(grid.h) * grid.w *
                                grid.channels) {
    throw ParseError("feature grid dims do not match value count");
  }
  return grid;
}

std::string feature_grid_line(const visgeom::FeatureGrid& grid) {
  return json{{"h", grid.h},
              {"w", grid.w},
              {"channels", grid.channels},
              {"values", grid.values}}
      .dump();
}

evalkit::EvalExample parse_eval_example(std::string_view line) {
  const json j = parse_line(line, "eval example");
  evalkit::EvalExample ex;
  ex.example_id = get_field<std::string>(j, "example_id", "eval example");
  if (j.contains("images")) {
    ex.image_refs = j["images"].get<std::vector<std::string>>();
  }
  if (j.contains("question") && !j["question"].is_null()) {
    ex.question = j["question"].get<std::string>();
  }
  if (j.contains("references")) {
    ex.references = j["references"].get<std::vector<std::string>>();
  }
  if (j.contains("answers_10") && !j["answers_10"].is_null()) {
    ex.answers_10 = j["answers_10"].get<std::vector<std::string>>();
  }
  return ex;
}

std::string eval_example_line(const evalkit::EvalExample& example) {
  json j{{"example_id", example.example_id},
         {"images", example.image_refs},
         {"references", example.references}};
  if (example.question) j["question"] = *example.question;
  if (example.answers_10) j["answers_10"] = *example.answers_10;
  return j.dump();
}

std::pair<std::string, std::string> parse_prediction(std::string_view line) {
  const json j = parse_line(line, "prediction");
  return {get_field<std::string>(j, "example_id", "prediction"),
          get_field<std::string>(j, "text", "prediction")};
}

std::string prediction_line(std::string_view example_id,
                            std::string_view text) {
  return json{{"example_id", std::string(example_id)},
              {"text", std::string(text)}}
      .dump();
}

std::string score_report_line(const evalkit::ScoreReport& report) {
  return json{{"task", report.task},
              {"metric", report.metric},
              {"value", report.value},
              {"n", report.n}}
      .dump();
}

}  // namespace mmpipe::serde
