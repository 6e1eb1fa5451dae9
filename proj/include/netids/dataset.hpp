#pragma once

#include <bit>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "netids/common.hpp"
#include "netids/pipeline.hpp"

namespace netids {

struct DatasetBundle {
  EncodedDataset ds;
  SplitIndices splits;
  std::vector<double> weights;  // multi-class class weights fitted on train
};

namespace detail {

inline std::string pack_f32(const std::vector<float>& v) {
  std::string out;
  out.reserve(v.size() * 4);
  for (float f : v) put_u32le(out, std::bit_cast<uint32_t>(f));
  return out;
}

inline std::string pack_u32(const std::vector<uint32_t>& v) {
  std::string out;
  out.reserve(v.size() * 4);
  for (uint32_t x : v) put_u32le(out, x);
  return out;
}

inline std::vector<float> unpack_f32(const std::string& s) {
  if (s.size() % 4) throw SchemaMismatch("f32 payload not a multiple of 4 bytes");
  std::vector<float> v(s.size() / 4);
  for (size_t i = 0; i < v.size(); ++i)
    v[i] = std::bit_cast<float>(get_u32le(reinterpret_cast<const unsigned char*>(s.data()) + i * 4));
  return v;
}

inline std::vector<uint32_t> unpack_u32(const std::string& s) {
  if (s.size() % 4) throw SchemaMismatch("u32 payload not a multiple of 4 bytes");
  std::vector<uint32_t> v(s.size() / 4);
  for (size_t i = 0; i < v.size(); ++i)
    v[i] = get_u32le(reinterpret_cast<const unsigned char*>(s.data()) + i * 4);
  return v;
}

template <typename T, typename Fmt>
void write_dict_line(std::ostringstream& out, const char* name, const std::vector<T>& dict,
                     Fmt&& fmt) {
  out << name;
  for (const auto& v : dict) out << ' ' << fmt(v);
  out << '\n';
}

}  // namespace detail

inline std::string meta_to_text(const EncodedDataset& ds) {
  std::ostringstream out;
  out << "format netids-dataset 1\n";
  out << "rows " << ds.rows << '\n';
  out << "dense_width " << ds.dense_width << '\n';
  detail::write_dict_line(out, "proto_dict", ds.meta.proto_dict,
                          [](const std::string& s) { return s; });
  detail::write_dict_line(out, "flags_dict", ds.meta.flags_dict,
                          [](int64_t v) { return std::to_string(v); });
  detail::write_dict_line(out, "df_dict", ds.meta.df_dict,
                          [](int64_t v) { return std::to_string(v); });
  detail::write_dict_line(out, "response_dict", ds.meta.response_dict,
                          [](int64_t v) { return std::to_string(v); });
  out << "num_min";
  for (double v : ds.meta.num_min) out << ' ' << format_double(v);
  out << "\nnum_max";
  for (double v : ds.meta.num_max) out << ' ' << format_double(v);
  out << "\ncolumns";
  for (const auto& name : ds.meta.column_names()) out << ' ' << name;
  out << '\n';
  return out.str();
}

inline void write_dataset(const std::string& dir, const DatasetBundle& bundle) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const EncodedDataset& ds = bundle.ds;

  std::map<std::string, std::string> files;
  files["meta.txt"] = meta_to_text(ds);
  files["dense.f32"] = detail::pack_f32(ds.dense);
  files["ports.u32"] = detail::pack_u32(ds.ports);
  files["methods.u32"] = detail::pack_u32(ds.methods);
  std::string labels;
  labels.reserve(ds.rows * 3);
  for (size_t i = 0; i < ds.rows; ++i) {
    labels.push_back(char(ds.labels_mc[i]));
    labels.push_back(char(ds.labels_bin[i]));
    labels.push_back(char(ds.subcat[i]));
  }
  files["labels.u8"] = std::move(labels);
  files["train.u32"] = detail::pack_u32(bundle.splits.train);
  files["validation.u32"] = detail::pack_u32(bundle.splits.validation);
  files["test.u32"] = detail::pack_u32(bundle.splits.test);
  std::string weights;
  for (size_t c = 0; c < bundle.weights.size(); ++c)
    weights += "weight " + std::to_string(c) + ' ' + format_double(bundle.weights[c]) + '\n';
  files["weights.txt"] = std::move(weights);

  std::string manifest;
  for (const auto& [name, content] : files) {
    write_file((fs::path(dir) / name).string(), content);
    char hex[9];
    std::snprintf(hex, sizeof(hex), "%08x", crc32(content));
    manifest += "file " + name + ' ' + std::to_string(content.size()) + ' ' + hex + '\n';
  }
  manifest += "end\n";
  write_file((fs::path(dir) / "manifest.txt").string(), manifest);
}

inline DatasetBundle load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::string manifest = read_file((fs::path(dir) / "manifest.txt").string());
  std::map<std::string, std::string> files;
  std::istringstream min(manifest);
  std::string line;
  bool saw_end = false;
  while (std::getline(min, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    auto parts = split(line, ' ');
    if (parts.size() != 4 || parts[0] != "file")
      throw SchemaMismatch(dir + ": bad manifest line: " + line);
    std::string content = read_file((fs::path(dir) / parts[1]).string());
    auto size = parse_int(parts[2]);
    if (!size || uint64_t(*size) != content.size())
      throw ChecksumMismatch(dir + '/' + parts[1] + ": size mismatch");
    char hex[9];
    std::snprintf(hex, sizeof(hex), "%08x", crc32(content));
    if (parts[3] != hex) throw ChecksumMismatch(dir + '/' + parts[1] + ": crc mismatch");
    files[parts[1]] = std::move(content);
  }
  if (!saw_end) throw SchemaMismatch(dir + ": manifest missing end marker");

  auto need = [&files, &dir](const std::string& name) -> std::string& {
    auto it = files.find(name);
    if (it == files.end()) throw SchemaMismatch(dir + ": manifest lacks " + name);
    return it->second;
  };

  DatasetBundle bundle;
  EncodedDataset& ds = bundle.ds;
  std::istringstream meta(need("meta.txt"));
  while (std::getline(meta, line)) {
    auto parts = split(line, ' ');
    if (parts.empty()) continue;
    const std::string& key = parts[0];
    auto ints = [&parts] {
      std::vector<int64_t> v;
      for (size_t i = 1; i < parts.size(); ++i) {
        auto x = parse_int(parts[i]);
        if (!x) throw SchemaMismatch("bad integer in meta: " + parts[i]);
        v.push_back(*x);
      }
      return v;
    };
    auto doubles17 = [&parts](std::array<double, kNumericCount>& out) {
      if (parts.size() != kNumericCount + 1) throw SchemaMismatch("bad numeric range line");
      for (size_t i = 0; i < kNumericCount; ++i) {
        auto x = parse_double(parts[i + 1]);
        if (!x) throw SchemaMismatch("bad double in meta: " + parts[i + 1]);
        out[i] = *x;
      }
    };
    if (key == "format") {
      if (parts.size() != 3 || parts[1] != "netids-dataset" || parts[2] != "1")
        throw SchemaMismatch(dir + ": unsupported dataset format");
    } else if (key == "rows") {
      ds.rows = size_t(*parse_int(parts.at(1)));
    } else if (key == "dense_width") {
      ds.dense_width = size_t(*parse_int(parts.at(1)));
    } else if (key == "proto_dict") {
      ds.meta.proto_dict.assign(parts.begin() + 1, parts.end());
    } else if (key == "flags_dict") {
      ds.meta.flags_dict = ints();
    } else if (key == "df_dict") {
      ds.meta.df_dict = ints();
    } else if (key == "response_dict") {
      ds.meta.response_dict = ints();
    } else if (key == "num_min") {
      doubles17(ds.meta.num_min);
    } else if (key == "num_max") {
      doubles17(ds.meta.num_max);
    }
  }
  if (ds.meta.dense_width() != ds.dense_width)
    throw SchemaMismatch(dir + ": dense width disagrees with dictionaries");

  ds.dense = detail::unpack_f32(need("dense.f32"));
  ds.ports = detail::unpack_u32(need("ports.u32"));
  ds.methods = detail::unpack_u32(need("methods.u32"));
  const std::string& labels = need("labels.u8");
  if (ds.dense.size() != ds.rows * ds.dense_width || ds.ports.size() != ds.rows * 2 ||
      ds.methods.size() != ds.rows || labels.size() != ds.rows * 3)
    throw SchemaMismatch(dir + ": block shapes disagree with row count");
  ds.labels_mc.resize(ds.rows);
  ds.labels_bin.resize(ds.rows);
  ds.subcat.resize(ds.rows);
  for (size_t i = 0; i < ds.rows; ++i) {
    ds.labels_mc[i] = uint8_t(labels[i * 3]);
    ds.labels_bin[i] = uint8_t(labels[i * 3 + 1]);
    ds.subcat[i] = uint8_t(labels[i * 3 + 2]);
  }
  bundle.splits.train = detail::unpack_u32(need("train.u32"));
  bundle.splits.validation = detail::unpack_u32(need("validation.u32"));
  bundle.splits.test = detail::unpack_u32(need("test.u32"));
  std::istringstream win(need("weights.txt"));
  while (std::getline(win, line)) {
    auto parts = split(line, ' ');
    if (parts.size() == 3 && parts[0] == "weight") {
      auto v = parse_double(parts[2]);
      if (!v) throw SchemaMismatch("bad weight value: " + parts[2]);
      bundle.weights.push_back(*v);
    }
  }
  return bundle;
}

}  // namespace netids
