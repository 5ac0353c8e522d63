#include "advtext/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "advtext/csv.hpp"
#include "advtext/error.hpp"
#include "json.hpp"

namespace advtext {
namespace {

using nlohmann::json;

const std::vector<std::string> kPairColumns = {"original", "label",   "task",      "dataset",  "perturbed",
                                               "attack",   "model",   "success",   "orig_conf", "adv_conf"};

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw DataError("missing field", line, field);
  return *it;
}

std::string get_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) throw DataError("expected a string", line, field);
  return v.get<std::string>();
}

ClassIndex get_label(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw DataError("expected a non-negative integer", line, field);
  return static_cast<ClassIndex>(v.get<long long>());
}

std::optional<double> check_conf(double value, const char* field, std::size_t line) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) throw DataError("confidence outside [0, 1]", line, field);
  return value;
}

std::optional<double> get_conf(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError("expected a number", line, field);
  return check_conf(it->get<double>(), field, line);
}

AdversarialPair pair_from_json(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw DataError("record is not a JSON object", line, "<record>");
  AdversarialPair p;
  p.original.text = get_string(obj, "original", line);
  p.original.label = get_label(obj, "label", line);
  p.original.task_id = get_string(obj, "task", line);
  p.original.dataset_id = get_string(obj, "dataset", line);
  p.perturbed = get_string(obj, "perturbed", line);
  p.attack_method = get_string(obj, "attack", line);
  p.victim_model_id = get_string(obj, "model", line);
  const json& s = require(obj, "success", line);
  if (!s.is_boolean()) throw DataError("expected a boolean", line, "success");
  p.success = s.get<bool>();
  p.orig_conf = get_conf(obj, "orig_conf", line);
  p.adv_conf = get_conf(obj, "adv_conf", line);
  return p;
}

json pair_to_json(const AdversarialPair& p) {
  json obj = {{"original", p.original.text}, {"label", p.original.label},   {"task", p.original.task_id},
              {"dataset", p.original.dataset_id}, {"perturbed", p.perturbed}, {"attack", p.attack_method},
              {"model", p.victim_model_id},     {"success", p.success}};
  if (p.orig_conf) obj["orig_conf"] = *p.orig_conf;
  if (p.adv_conf) obj["adv_conf"] = *p.adv_conf;
  return obj;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

PairFormat parse_pair_format(std::string_view name) {
  if (name == "jsonl") return PairFormat::Jsonl;
  if (name == "csv") return PairFormat::Csv;
  throw ConfigError("unknown pair format '" + std::string(name) + "' (expected jsonl or csv)", "format");
}

PairFormat pair_format_for_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  return parse_pair_format(ext);
}

PairReader::PairReader(const std::filesystem::path& path, PairFormat format)
    : in_(path, std::ios::binary), format_(format) {
  if (!in_) throw DataError("cannot open pair file '" + path.string() + "'");
  if (format_ == PairFormat::Csv) {
    std::string record;
    std::optional<std::vector<std::string>> fields;
    while (std::getline(in_, record)) {
      ++line_;
      std::string accum = record;
      while (!(fields = csv::split_record(accum))) {
        if (!std::getline(in_, record)) throw DataError("unterminated quoted field", line_, "<header>");
        ++line_;
        accum += "\n" + record;
      }
      break;
    }
    if (!fields) throw DataError("missing CSV header", 1, "<header>");
    header_ = *fields;
    for (const auto& col : {"original", "label", "task", "dataset", "perturbed", "attack", "model", "success"}) {
      if (std::find(header_.begin(), header_.end(), col) == header_.end())
        throw DataError("missing column in header", 1, col);
    }
  }
}

std::optional<AdversarialPair> PairReader::next() {
  return format_ == PairFormat::Jsonl ? next_jsonl() : next_csv();
}

std::optional<AdversarialPair> PairReader::next_jsonl() {
  std::string record;
  while (std::getline(in_, record)) {
    ++line_;
    if (record.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(record);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("invalid JSON: ") + e.what(), line_, "<record>");
    }
    return pair_from_json(obj, line_);
  }
  return std::nullopt;
}

std::optional<AdversarialPair> PairReader::next_csv() {
  std::string record;
  while (std::getline(in_, record)) {
    ++line_;
    const std::size_t first_line = line_;
    if (record.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::optional<std::vector<std::string>> fields;
    while (!(fields = csv::split_record(record))) {
      std::string more;
      if (!std::getline(in_, more)) throw DataError("unterminated quoted field", first_line, "<record>");
      ++line_;
      record += "\n" + more;
    }
    if (fields->size() != header_.size())
      throw DataError("expected " + std::to_string(header_.size()) + " columns, got " + std::to_string(fields->size()),
                      first_line, "<record>");
    json obj = json::object();
    for (std::size_t k = 0; k < header_.size(); ++k) {
      const std::string& col = header_[k];
      const std::string& v = (*fields)[k];
      if (col == "label") {
        long long label = -1;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), label);
        if (ec != std::errc() || ptr != v.data() + v.size())
          throw DataError("expected a non-negative integer", first_line, col);
        obj[col] = label;
      } else if (col == "success") {
        if (v == "true" || v == "1") {
          obj[col] = true;
        } else if (v == "false" || v == "0") {
          obj[col] = false;
        } else {
          throw DataError("expected true/false", first_line, col);
        }
      } else if (col == "orig_conf" || col == "adv_conf") {
        if (v.empty()) continue;
        double d = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
        if (ec != std::errc() || ptr != v.data() + v.size()) throw DataError("expected a number", first_line, col);
        obj[col] = d;
      } else {
        obj[col] = v;
      }
    }
    return pair_from_json(obj, first_line);
  }
  return std::nullopt;
}

std::vector<AdversarialPair> ingest_pairs(const std::filesystem::path& path, PairFormat format) {
  PairReader reader(path, format);
  std::vector<AdversarialPair> pairs;
  while (auto p = reader.next()) pairs.push_back(std::move(*p));
  return pairs;
}

void write_pairs_jsonl(const std::filesystem::path& path, std::span<const AdversarialPair> pairs) {
  auto out = open_for_write(path);
  for (const auto& p : pairs) out << pair_to_json(p).dump() << '\n';
}

void write_pairs_csv(const std::filesystem::path& path, std::span<const AdversarialPair> pairs) {
  auto out = open_for_write(path);
  csv::write_row(out, kPairColumns);
  for (const auto& p : pairs) {
    // Shortest round-trip representation, matching the JSONL writer.
    auto conf = [](const std::optional<double>& c) { return c ? json(*c).dump() : std::string{}; };
    csv::write_row(out, {p.original.text, std::to_string(p.original.label), p.original.task_id, p.original.dataset_id,
                         p.perturbed, p.attack_method, p.victim_model_id, p.success ? "true" : "false",
                         conf(p.orig_conf), conf(p.adv_conf)});
  }
}

Dataset read_dataset(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  Dataset ds;
  ds.id = path.stem().string();
  std::string record;
  std::size_t line = 0;
  std::size_t max_label = 0;
  while (std::getline(in, record)) {
    ++line;
    if (record.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(record);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("invalid JSON: ") + e.what(), line, "<record>");
    }
    if (!obj.is_object()) throw DataError("record is not a JSON object", line, "<record>");
    LabeledExample ex;
    ex.text = get_string(obj, "text", line);
    ex.label = get_label(obj, "label", line);
    ex.task_id = obj.contains("task") ? get_string(obj, "task", line) : std::string{};
    ex.dataset_id = obj.contains("dataset") ? get_string(obj, "dataset", line) : ds.id;
    if (num_classes && ex.label >= *num_classes)
      throw DataError("label exceeds declared class count " + std::to_string(*num_classes), line, "label");
    max_label = std::max(max_label, ex.label);
    ds.examples.push_back(std::move(ex));
  }
  if (!ds.examples.empty()) ds.id = ds.examples.front().dataset_id;
  ds.num_classes = num_classes ? *num_classes : (ds.examples.empty() ? 0 : max_label + 1);
  return ds;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  auto out = open_for_write(path);
  for (const auto& ex : dataset.examples) {
    json obj = {{"text", ex.text}, {"label", ex.label}, {"task", ex.task_id}, {"dataset", ex.dataset_id}};
    out << obj.dump() << '\n';
  }
}

void validate_dataset(const Dataset& dataset) {
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    if (dataset.examples[i].label >= dataset.num_classes)
      throw DataError("example " + std::to_string(i) + " has label " + std::to_string(dataset.examples[i].label) +
                      " but dataset '" + dataset.id + "' declares " + std::to_string(dataset.num_classes) +
                      " classes");
  }
}

}  // namespace advtext
