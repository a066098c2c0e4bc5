#include "motionbank/dataset_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "motionbank/errors.hpp"

namespace mb {
namespace {

using nlohmann::json;

json frames_to_json(const MotionSequence& seq) {
  json frames = json::array();
  for (std::size_t t = 0; t < seq.length(); ++t) {
    auto f = seq.frame(t);
    frames.push_back(std::vector<double>(f.begin(), f.end()));
  }
  return frames;
}

MotionSequence frames_from_json(const json& j, const char* field, std::size_t line) {
  const std::string where = "line " + std::to_string(line) + ": field '" + field + "'";
  if (!j.is_array() || j.empty()) throw ValidationError(where + " must be a non-empty array of frames");
  std::vector<std::vector<double>> frames;
  for (const auto& f : j) {
    if (!f.is_array() || f.empty()) throw ValidationError(where + " contains a frame that is not a number array");
    std::vector<double> frame;
    for (const auto& x : f) {
      if (!x.is_number()) throw ValidationError(where + " contains a non-numeric value");
      frame.push_back(x.get<double>());
    }
    frames.push_back(std::move(frame));
  }
  try {
    return MotionSequence::from_frames(frames);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

int label_from_json(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw ValidationError("line " + std::to_string(line) + ": missing field '" + field + "'");
  }
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw ValidationError("line " + std::to_string(line) + ": field '" + field + "' must be a non-negative integer");
  }
  return it->get<int>();
}

}  // namespace

void write_dataset(std::span<const LabeledSample> samples, std::ostream& out) {
  for (const LabeledSample& s : samples) {
    json record;
    record["past"] = frames_to_json(s.past);
    record["future"] = frames_to_json(s.future);
    record["past_action"] = s.past_action;
    record["future_action"] = s.future_action;
    out << record.dump() << '\n';
  }
}

void save_dataset(std::span<const LabeledSample> samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_dataset(samples, out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<LabeledSample> read_dataset(std::istream& in) {
  std::vector<LabeledSample> samples;
  std::string text;
  std::size_t line = 0;
  std::size_t dim = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError("line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
    if (!record.is_object()) throw ValidationError("line " + std::to_string(line) + ": record must be an object");
    for (const char* field : {"past", "future"}) {
      if (!record.contains(field)) {
        throw ValidationError("line " + std::to_string(line) + ": missing field '" + field + "'");
      }
    }
    LabeledSample s;
    s.past = frames_from_json(record["past"], "past", line);
    s.future = frames_from_json(record["future"], "future", line);
    s.past_action = label_from_json(record, "past_action", line);
    s.future_action = label_from_json(record, "future_action", line);
    if (s.past.dim() != s.future.dim()) {
      throw ShapeError("line " + std::to_string(line) + ": past and future pose dimensions differ");
    }
    if (dim == 0) dim = s.past.dim();
    if (s.past.dim() != dim) {
      throw ShapeError("line " + std::to_string(line) + ": pose dimension " + std::to_string(s.past.dim()) +
                       " differs from earlier records (" + std::to_string(dim) + ")");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<LabeledSample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  try {
    return read_dataset(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_motions_csv(std::span<const MotionSequence> motions, std::ostream& out) {
  if (motions.empty()) return;
  out << "sample,frame";
  for (std::size_t k = 0; k < motions.front().dim(); ++k) out << ",x" << k;
  out << '\n';
  std::ostringstream row;
  row.precision(17);
  for (std::size_t s = 0; s < motions.size(); ++s) {
    for (std::size_t t = 0; t < motions[s].length(); ++t) {
      row.str({});
      row << s << ',' << t;
      for (double v : motions[s].frame(t)) row << ',' << v;
      out << row.str() << '\n';
    }
  }
}

}  // namespace mb
